use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::precision::Fixed;

/// Exact value `sign · √(num / den)` with `num/den` in lowest terms.
///
/// Wigner 3j and 6j symbols and Clebsch-Gordan coefficients of integer
/// angular momenta all have this form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignedSqrtRational {
    sign: i8,
    num: BigUint,
    den: BigUint,
}

impl Default for SignedSqrtRational {
    fn default() -> Self {
        Self::zero()
    }
}

impl SignedSqrtRational {
    pub fn zero() -> Self {
        SignedSqrtRational {
            sign: 0,
            num: BigUint::zero(),
            den: BigUint::one(),
        }
    }

    pub fn one() -> Self {
        SignedSqrtRational {
            sign: 1,
            num: BigUint::one(),
            den: BigUint::one(),
        }
    }

    /// Builds `sign · √(num/den)`; `sign` is taken by its signum.
    pub fn new(sign: i32, num: BigUint, den: BigUint) -> Self {
        assert!(!den.is_zero(), "zero radicand denominator");
        if sign == 0 || num.is_zero() {
            return Self::zero();
        }
        let g = num.gcd(&den);
        SignedSqrtRational {
            sign: sign.signum() as i8,
            num: num / &g,
            den: den / g,
        }
    }

    /// `sign(r) · √|r|`.
    pub fn from_signed_square(r: &BigRational) -> Self {
        let sign = match r.numer().sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        };
        Self::new(
            sign,
            r.numer().magnitude().clone(),
            r.denom().magnitude().clone(),
        )
    }

    /// Exact rational `q`, encoded as `sign(q) · √(q²)`.
    pub fn from_rational(q: &BigRational) -> Self {
        let sq = q * q;
        let mut out = Self::from_signed_square(&sq);
        if q.is_negative() {
            out.sign = -1;
        }
        out
    }

    pub fn sign(&self) -> i32 {
        self.sign as i32
    }

    pub fn radicand_num(&self) -> &BigUint {
        &self.num
    }

    pub fn radicand_den(&self) -> &BigUint {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// The value squared, with the sign of the value.
    pub fn signed_square(&self) -> BigRational {
        let r = BigRational::new(
            BigInt::from_biguint(Sign::Plus, self.num.clone()),
            BigInt::from_biguint(Sign::Plus, self.den.clone()),
        );
        if self.sign < 0 {
            -r
        } else {
            r
        }
    }

    pub fn square(&self) -> BigRational {
        self.signed_square().abs()
    }

    /// Exact rational value when the radicand is a perfect square.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        let n = self.num.sqrt();
        let d = self.den.sqrt();
        if &n * &n != self.num || &d * &d != self.den {
            return None;
        }
        let q = BigRational::new(
            BigInt::from_biguint(Sign::Plus, n),
            BigInt::from_biguint(Sign::Plus, d),
        );
        Some(if self.sign < 0 { -q } else { q })
    }

    pub fn to_fixed(&self) -> Fixed {
        if self.is_zero() {
            return Fixed::zero();
        }
        let mag = Fixed::sqrt_ratio(&self.num, &self.den);
        if self.sign < 0 {
            -mag
        } else {
            mag
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.to_fixed().to_f64()
    }

    pub fn to_decimal_string(&self, digits: usize) -> String {
        self.to_fixed().to_decimal_string(digits)
    }
}

impl Mul<&SignedSqrtRational> for &SignedSqrtRational {
    type Output = SignedSqrtRational;
    fn mul(self, rhs: &SignedSqrtRational) -> SignedSqrtRational {
        SignedSqrtRational::new(
            (self.sign * rhs.sign) as i32,
            &self.num * &rhs.num,
            &self.den * &rhs.den,
        )
    }
}

impl Mul for SignedSqrtRational {
    type Output = SignedSqrtRational;
    fn mul(self, rhs: SignedSqrtRational) -> SignedSqrtRational {
        &self * &rhs
    }
}

/// Exact sum of signed square roots, kept as rational coefficients of
/// square-free radicands; distinct square-free roots are linearly
/// independent over the rationals, so the sum is zero iff every
/// coefficient is.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SqrtSum {
    terms: BTreeMap<BigUint, BigRational>,
}

impl SqrtSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: &SignedSqrtRational) {
        if x.is_zero() {
            return;
        }
        // √(n/d) = √(n·d)/d = s·√k/d with n·d = s²·k.
        let (s, k) = square_free_split(&x.num * &x.den);
        let coeff = BigRational::new(
            BigInt::from_biguint(Sign::Plus, s),
            BigInt::from_biguint(Sign::Plus, x.den.clone()),
        );
        let e = self.terms.entry(k).or_insert_with(BigRational::zero);
        if x.sign < 0 {
            *e -= coeff;
        } else {
            *e += coeff;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(Zero::is_zero)
    }

    /// The sum when no irrational part survives.
    pub fn as_rational(&self) -> Option<BigRational> {
        let mut out = BigRational::zero();
        for (k, c) in &self.terms {
            if c.is_zero() {
                continue;
            }
            if !k.is_one() {
                return None;
            }
            out += c;
        }
        Some(out)
    }
}

/// `n = s²·k` with `k` square-free, by trial division. A cofactor left after
/// the small primes is taken as square-free unless it is a perfect square.
fn square_free_split(mut n: BigUint) -> (BigUint, BigUint) {
    let mut s = BigUint::one();
    let mut k = BigUint::one();
    let mut p = 2u32;
    while !n.is_one() && p < 10_000 {
        let mut e = 0u32;
        while (&n % p).is_zero() {
            n /= p;
            e += 1;
        }
        if e > 0 {
            s *= BigUint::from(p).pow(e / 2);
            if e % 2 == 1 {
                k *= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if !n.is_one() {
        let r = n.sqrt();
        if &r * &r == n {
            s *= r;
        } else {
            k *= n;
        }
    }
    (s, k)
}

impl fmt::Display for SignedSqrtRational {
    /// `0`, or `+sqrt(n/d)` / `-sqrt(n/d)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let s = if self.sign > 0 { '+' } else { '-' };
        write!(f, "{s}sqrt({}/{})", self.num, self.den)
    }
}

impl FromStr for SignedSqrtRational {
    type Err = Error;

    /// Accepts the `Display` form and the spelled-out `±1*sqrt(n/d)` variant.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(Self::zero());
        }
        let bad = || Error::Parse(format!("not a signed sqrt-rational: {s:?}"));
        let (sign, rest) = match s.as_bytes().first() {
            Some(b'+') => (1, &s[1..]),
            Some(b'-') => (-1, &s[1..]),
            _ => (1, s),
        };
        let rest = rest.strip_prefix("1*").unwrap_or(rest);
        let inner = rest
            .strip_prefix("sqrt(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (n, d) = inner.split_once('/').unwrap_or((inner, "1"));
        let num: BigUint = n.trim().parse().map_err(|_| bad())?;
        let den: BigUint = d.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        let out = Self::new(sign, num.clone(), den.clone());
        // Only canonical (lowest-terms) strings round-trip; reject others.
        if out.is_zero() || (out.num == num && out.den == den) {
            Ok(out)
        } else {
            Err(Error::Parse(format!("radicand not in lowest terms: {s:?}")))
        }
    }
}

impl Serialize for SignedSqrtRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SignedSqrtRational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
