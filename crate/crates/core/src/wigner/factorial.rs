//! Factorial products as prime-exponent vectors.
//!
//! `n!` is stored through Legendre's formula, so products and quotients of
//! factorials become vector additions and no large intermediate is built
//! until the final conversion.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

/// Largest factorial argument supported by the prime table.
pub const MAX_FACTORIAL_ARG: u32 = 1 << 16;

fn primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = MAX_FACTORIAL_ARG as usize;
        let mut composite = vec![false; n + 1];
        let mut out = Vec::new();
        for i in 2..=n {
            if !composite[i] {
                out.push(i as u32);
                let mut j = i * i;
                while j <= n {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        out
    })
}

/// `∏ p_i^{e_i}` over the primes, exponents of either sign.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrimeExponents {
    exps: Vec<i64>,
}

impl PrimeExponents {
    pub fn one() -> Self {
        PrimeExponents { exps: Vec::new() }
    }

    fn ensure_len(&mut self, len: usize) {
        if self.exps.len() < len {
            self.exps.resize(len, 0);
        }
    }

    fn add_factorial(&mut self, n: u32, sign: i64) {
        assert!(
            n <= MAX_FACTORIAL_ARG,
            "factorial argument {n} exceeds supported maximum {MAX_FACTORIAL_ARG}"
        );
        let ps = primes();
        let count = ps.partition_point(|&p| p <= n);
        self.ensure_len(count);
        for (slot, &p) in self.exps.iter_mut().zip(ps.iter()).take(count) {
            let p = p as u64;
            let mut power = p;
            let mut e = 0u64;
            while power <= n as u64 {
                e += n as u64 / power;
                power *= p;
            }
            *slot += sign * e as i64;
        }
    }

    pub fn mul_factorial(&mut self, n: u32) -> &mut Self {
        self.add_factorial(n, 1);
        self
    }

    pub fn div_factorial(&mut self, n: u32) -> &mut Self {
        self.add_factorial(n, -1);
        self
    }

    pub fn mul_integer(&mut self, mut n: u64) -> &mut Self {
        assert!(n > 0, "cannot factor zero");
        for (i, &p) in primes().iter().enumerate() {
            let p = p as u64;
            if n == 1 {
                break;
            }
            while n % p == 0 {
                self.ensure_len(i + 1);
                self.exps[i] += 1;
                n /= p;
            }
        }
        assert_eq!(n, 1, "integer has a prime factor beyond the table");
        self
    }

    pub fn add(&self, other: &PrimeExponents) -> PrimeExponents {
        let len = self.exps.len().max(other.exps.len());
        let mut exps = vec![0; len];
        for (i, e) in exps.iter_mut().enumerate() {
            *e = self.exps.get(i).copied().unwrap_or(0) + other.exps.get(i).copied().unwrap_or(0);
        }
        PrimeExponents { exps }
    }

    pub fn scale(&self, k: i64) -> PrimeExponents {
        PrimeExponents {
            exps: self.exps.iter().map(|e| e * k).collect(),
        }
    }

    fn min_with(&mut self, other: &PrimeExponents) {
        let len = self.exps.len().max(other.exps.len());
        self.ensure_len(len);
        for (i, e) in self.exps.iter_mut().enumerate() {
            *e = (*e).min(other.exps.get(i).copied().unwrap_or(0));
        }
    }

    /// Splits `self = 2·half + rest` with every exponent of `rest` in `{0, 1}`.
    pub fn split_square(&self) -> (PrimeExponents, PrimeExponents) {
        let half = self.exps.iter().map(|e| e.div_euclid(2)).collect();
        let rest = self.exps.iter().map(|e| e.rem_euclid(2)).collect();
        (PrimeExponents { exps: half }, PrimeExponents { exps: rest })
    }

    /// `(numerator, denominator)` of the represented rational, coprime.
    pub fn to_ratio(&self) -> (BigUint, BigUint) {
        let mut num = BigUint::one();
        let mut den = BigUint::one();
        for (&e, &p) in self.exps.iter().zip(primes().iter()) {
            if e > 0 {
                num *= BigUint::from(p).pow(e as u32);
            } else if e < 0 {
                den *= BigUint::from(p).pow((-e) as u32);
            }
        }
        (num, den)
    }

    /// Value as an integer; panics if any exponent is negative.
    pub fn to_integer(&self) -> BigUint {
        let (num, den) = self.to_ratio();
        assert!(den.is_one(), "prime-exponent vector is not integral");
        num
    }
}

/// A term `sign · ∏ p^e` of an alternating sum.
pub struct SignedTerm {
    pub negative: bool,
    pub exps: PrimeExponents,
}

/// Sums `Σ ±∏ p^e` exactly as `base · total`, where `base` is the elementwise
/// minimum exponent vector and `total` an integer.
pub fn sum_terms(terms: &[SignedTerm]) -> (PrimeExponents, BigInt) {
    let Some(first) = terms.first() else {
        return (PrimeExponents::one(), BigInt::zero());
    };
    let mut base = first.exps.clone();
    for t in &terms[1..] {
        base.min_with(&t.exps);
    }
    let neg_base = base.scale(-1);
    let mut total = BigInt::zero();
    for t in terms {
        let n = BigInt::from(t.exps.add(&neg_base).to_integer());
        if t.negative {
            total -= n;
        } else {
            total += n;
        }
    }
    (base, total)
}

pub fn factorial(n: u32) -> BigUint {
    let mut e = PrimeExponents::one();
    e.mul_factorial(n);
    e.to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_factorials() {
        assert_eq!(factorial(0), BigUint::from(1u32));
        assert_eq!(factorial(5), BigUint::from(120u32));
        assert_eq!(factorial(10), BigUint::from(3_628_800u32));
    }

    #[test]
    fn quotient_of_factorials() {
        let mut e = PrimeExponents::one();
        e.mul_factorial(9).div_factorial(7);
        assert_eq!(e.to_ratio(), (BigUint::from(72u32), BigUint::from(1u32)));
        let mut e = PrimeExponents::one();
        e.mul_factorial(2).div_factorial(4);
        assert_eq!(e.to_ratio(), (BigUint::from(1u32), BigUint::from(12u32)));
    }

    #[test]
    fn square_split_reassembles() {
        let mut e = PrimeExponents::one();
        e.mul_factorial(13).div_factorial(6).mul_integer(7);
        let (half, rest) = e.split_square();
        assert_eq!(half.scale(2).add(&rest), e);
    }

    #[test]
    fn alternating_sum() {
        // 1/2! - 1/3! + 1/4! = 9/24
        let terms: Vec<SignedTerm> = [2u32, 3, 4]
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let mut e = PrimeExponents::one();
                e.div_factorial(n);
                SignedTerm { negative: i % 2 == 1, exps: e }
            })
            .collect();
        let (base, total) = sum_terms(&terms);
        let (n, d) = base.to_ratio();
        assert_eq!(BigInt::from(n) * total, BigInt::from(9u32));
        assert_eq!(d, BigUint::from(24u32));
    }
}
