use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::factorial::{sum_terms, PrimeExponents, SignedTerm};
use super::ssr::SignedSqrtRational;
use super::threej::triangle;

/// Squared triangle coefficient `(a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!`.
fn triangle_coefficient(e: &mut PrimeExponents, a: u32, b: u32, c: u32) {
    e.mul_factorial(a + b - c)
        .mul_factorial(a + c - b)
        .mul_factorial(b + c - a)
        .div_factorial(a + b + c + 1);
}

/// Exact 6j symbol `{a b e; c d f}`.
///
/// Zero unless all four triads `(a,b,e)`, `(c,d,e)`, `(a,d,f)`, `(c,b,f)`
/// satisfy the triangle rule.
pub fn wigner6j(a: u32, b: u32, e: u32, c: u32, d: u32, f: u32) -> SignedSqrtRational {
    let triads = [(a, b, e), (c, d, e), (a, d, f), (c, b, f)];
    if triads.iter().any(|&(x, y, z)| !triangle(x, y, z)) {
        return SignedSqrtRational::zero();
    }
    let mut prefactor = PrimeExponents::one();
    for &(x, y, z) in &triads {
        triangle_coefficient(&mut prefactor, x, y, z);
    }

    let sums = triads.map(|(x, y, z)| x + y + z);
    let tops = [a + b + c + d, b + e + d + f, e + a + f + c];
    let t_min = *sums.iter().max().unwrap();
    let t_max = *tops.iter().min().unwrap();
    let mut terms = Vec::new();
    for t in t_min..=t_max {
        let mut x = PrimeExponents::one();
        x.mul_factorial(t + 1);
        for s in sums {
            x.div_factorial(t - s);
        }
        for q in tops {
            x.div_factorial(q - t);
        }
        terms.push(SignedTerm {
            negative: t % 2 == 1,
            exps: x,
        });
    }
    let (base, total) = sum_terms(&terms);
    if total.is_zero() {
        return SignedSqrtRational::zero();
    }
    let radicand = prefactor.add(&base.scale(2));
    let (half_part, rest) = radicand.split_square();
    let (rest_num, rest_den) = rest.to_ratio();
    let (half_num, half_den) = half_part.to_ratio();
    let outer = &half_num * total.magnitude();
    SignedSqrtRational::new(
        if total.is_negative() { -1 } else { 1 },
        rest_num * &outer * &outer,
        rest_den * &half_den * &half_den,
    )
}

fn ratio(e: &PrimeExponents) -> BigRational {
    let (n, d) = e.to_ratio();
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `{l1 l2 l3; l1 l2 l3}` through the single alternating sum over `n`.
///
/// All four triads coincide, so the prefactor is the square of one squared
/// triangle coefficient and the result is rational. Returns 0 when the
/// triangle rule fails.
pub fn sixj_same_rows(l1: u32, l2: u32, l3: u32) -> BigRational {
    if !triangle(l1, l2, l3) {
        return BigRational::zero();
    }
    let mut pre = PrimeExponents::one();
    triangle_coefficient(&mut pre, l1, l2, l3);
    let pre = pre.scale(2);
    let big_l = l1 + l2 + l3;
    let tops = [2 * (l1 + l2), 2 * (l1 + l3), 2 * (l2 + l3)];
    let upper = *tops.iter().min().unwrap();
    let mut terms = Vec::new();
    for n in big_l..=upper {
        let mut x = PrimeExponents::one();
        x.mul_factorial(n + 1);
        for _ in 0..4 {
            x.div_factorial(n - big_l);
        }
        for q in tops {
            x.div_factorial(q - n);
        }
        terms.push(SignedTerm {
            negative: n % 2 == 1,
            exps: x,
        });
    }
    let (base, total) = sum_terms(&terms);
    ratio(&pre.add(&base)) * BigRational::from_integer(total)
}

/// `{l l l; l l l} = (l!)^6/((3l+1)!)^2 · Σ_{n=3l}^{4l} (-1)^n (n+1)!/((n-3l)!^4 (4l-n)!^3)`.
pub fn sixj_all_equal(l: u32) -> BigRational {
    let mut pre = PrimeExponents::one();
    for _ in 0..6 {
        pre.mul_factorial(l);
    }
    pre.div_factorial(3 * l + 1).div_factorial(3 * l + 1);
    let mut sum = BigRational::zero();
    for n in 3 * l..=4 * l {
        let mut x = PrimeExponents::one();
        x.mul_factorial(n + 1);
        for _ in 0..4 {
            x.div_factorial(n - 3 * l);
        }
        for _ in 0..3 {
            x.div_factorial(4 * l - n);
        }
        let term = ratio(&x);
        if n % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
    }
    ratio(&pre) * sum
}

/// `{l1 l2 l1+l2; l1 l2 l1+l2} = (2l1)!(2l2)!/(2l1+2l2+1)!`.
pub fn sixj_stretched(l1: u32, l2: u32) -> BigRational {
    let mut e = PrimeExponents::one();
    e.mul_factorial(2 * l1)
        .mul_factorial(2 * l2)
        .div_factorial(2 * l1 + 2 * l2 + 1);
    ratio(&e)
}

/// Exact upper bound on `|{a b e; c d f}|²` from the column pairings.
pub fn sixj_bound_squared(a: u32, b: u32, e: u32, c: u32, d: u32, f: u32) -> BigRational {
    let inv = |x: u32, y: u32| {
        BigRational::new(
            BigInt::from(1u32),
            BigInt::from(BigUint::from((2 * x + 1) as u64 * (2 * y + 1) as u64)),
        )
    };
    [inv(a, c), inv(b, d), inv(e, f)]
        .into_iter()
        .min()
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn known_values() {
        assert_eq!(wigner6j(1, 1, 2, 1, 1, 2).as_rational(), Some(rat(1, 30)));
        assert_eq!(wigner6j(2, 2, 2, 2, 2, 2).as_rational(), Some(rat(-3, 70)));
        assert_eq!(wigner6j(1, 2, 3, 1, 2, 3).as_rational(), Some(rat(1, 105)));
        // {0 b e; c d f} with (0, b, e) violated.
        assert!(wigner6j(0, 1, 2, 1, 1, 1).is_zero());
    }

    #[test]
    fn single_sum_forms_agree() {
        for l1 in 0..=5 {
            for l2 in l1..=5 {
                for l3 in l2..=l1 + l2 {
                    let general = wigner6j(l1, l2, l3, l1, l2, l3).signed_square();
                    let single = sixj_same_rows(l1, l2, l3);
                    assert_eq!(general, &single * &single * single.signum(), "{l1} {l2} {l3}");
                }
            }
        }
        for l in 0..=8 {
            assert_eq!(sixj_all_equal(l), sixj_same_rows(l, l, l), "l = {l}");
        }
        for (l1, l2) in [(1, 1), (1, 2), (2, 3), (4, 4)] {
            assert_eq!(sixj_stretched(l1, l2), sixj_same_rows(l1, l2, l1 + l2));
        }
        assert_eq!(sixj_all_equal(1), rat(1, 6));
    }
}
