//! Binary fixed-point numbers with a few hundred fractional bits.
//!
//! Products of square roots of rationals are not closed under addition, so
//! sums of Wigner-symbol products are accumulated here. Every value carries
//! `FRAC_BITS` fractional bits (about 96 decimal digits); individual rounding
//! errors are one unit in the last place, far below the 60 significant
//! digits the moment oracles promise.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Number of fractional bits in every [`Fixed`] value.
pub const FRAC_BITS: u32 = 320;

/// Fixed-point real `raw / 2^FRAC_BITS`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed {
    raw: BigInt,
}

impl Fixed {
    pub fn zero() -> Self {
        Fixed { raw: BigInt::zero() }
    }

    pub fn one() -> Self {
        Fixed::from_integer(1)
    }

    pub fn from_integer(n: i64) -> Self {
        Fixed {
            raw: BigInt::from(n) << FRAC_BITS,
        }
    }

    /// Nearest representable value toward zero.
    pub fn from_rational(r: &BigRational) -> Self {
        Fixed {
            raw: (r.numer() << FRAC_BITS) / r.denom(),
        }
    }

    /// `floor(sqrt(num / den))` to `FRAC_BITS` bits.
    pub fn sqrt_ratio(num: &BigUint, den: &BigUint) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let scaled = (num << (2 * FRAC_BITS)) / den;
        Fixed {
            raw: BigInt::from_biguint(Sign::Plus, scaled.sqrt()),
        }
    }

    pub fn raw(&self) -> &BigInt {
        &self.raw
    }

    pub fn is_zero(&self) -> bool {
        self.raw.is_zero()
    }

    pub fn signum(&self) -> i32 {
        match self.raw.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Self {
        Fixed {
            raw: self.raw.abs(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        // Drop excess precision first so the conversion never overflows.
        let shifted: BigInt = &self.raw >> (FRAC_BITS - 64);
        shifted.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-64)
    }

    /// `|self - other| / max(|self|, |other|)`, or 0 when both vanish.
    pub fn relative_difference(&self, other: &Fixed) -> f64 {
        let scale = std::cmp::max(self.abs(), other.abs());
        if scale.is_zero() {
            return 0.0;
        }
        let diff = (self - other).abs();
        // Ratio of two fixed-point values; keep it exact until the final division.
        let ratio = BigRational::new(diff.raw, scale.raw);
        ratio.to_f64().unwrap_or(f64::INFINITY)
    }

    /// Scientific notation with `digits` significant digits, e.g. `7.114285e0`.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let digits = digits.max(1);
        if self.raw.is_zero() {
            return "0".to_string();
        }
        let magnitude = self.raw.abs();
        let mut exponent = self.abs().to_f64().log10().floor() as i64;
        let ten = BigInt::from(10u32);
        let lower = num_traits::pow(ten.clone(), digits - 1);
        let upper = &lower * &ten;
        let mantissa = loop {
            let shift = digits as i64 - 1 - exponent;
            let scaled = if shift >= 0 {
                let num = &magnitude * num_traits::pow(ten.clone(), shift as usize);
                round_shift(&num, FRAC_BITS)
            } else {
                let den = BigInt::from(1u8) << FRAC_BITS;
                let den = den * num_traits::pow(ten.clone(), (-shift) as usize);
                round_div(&magnitude, &den)
            };
            if scaled >= upper {
                exponent += 1;
            } else if scaled < lower {
                exponent -= 1;
            } else {
                break scaled;
            }
        };
        let text = mantissa.to_string();
        let sign = if self.raw.is_negative() { "-" } else { "" };
        if digits == 1 {
            format!("{sign}{text}e{exponent}")
        } else {
            format!("{sign}{}.{}e{exponent}", &text[..1], &text[1..])
        }
    }
}

fn round_shift(value: &BigInt, bits: u32) -> BigInt {
    let half = BigInt::from(1u8) << (bits - 1);
    (value + half) >> bits
}

fn round_div(num: &BigInt, den: &BigInt) -> BigInt {
    (num * 2 + den) / (den * 2)
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(40);
        f.write_str(&self.to_decimal_string(digits))
    }
}

impl From<i64> for Fixed {
    fn from(n: i64) -> Self {
        Fixed::from_integer(n)
    }
}

impl Add<&Fixed> for &Fixed {
    type Output = Fixed;
    fn add(self, rhs: &Fixed) -> Fixed {
        Fixed {
            raw: &self.raw + &rhs.raw,
        }
    }
}

impl Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        Fixed {
            raw: self.raw + rhs.raw,
        }
    }
}

impl Sub<&Fixed> for &Fixed {
    type Output = Fixed;
    fn sub(self, rhs: &Fixed) -> Fixed {
        Fixed {
            raw: &self.raw - &rhs.raw,
        }
    }
}

impl Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        Fixed {
            raw: self.raw - rhs.raw,
        }
    }
}

impl Mul<&Fixed> for &Fixed {
    type Output = Fixed;
    fn mul(self, rhs: &Fixed) -> Fixed {
        Fixed {
            raw: (&self.raw * &rhs.raw) >> FRAC_BITS,
        }
    }
}

impl Mul for Fixed {
    type Output = Fixed;
    fn mul(self, rhs: Fixed) -> Fixed {
        &self * &rhs
    }
}

impl Mul<i64> for &Fixed {
    type Output = Fixed;
    fn mul(self, rhs: i64) -> Fixed {
        Fixed {
            raw: &self.raw * rhs,
        }
    }
}

impl Neg for Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed { raw: -self.raw }
    }
}

impl Neg for &Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed {
            raw: -&self.raw,
        }
    }
}

impl AddAssign<&Fixed> for Fixed {
    fn add_assign(&mut self, rhs: &Fixed) {
        self.raw += &rhs.raw;
    }
}

impl AddAssign for Fixed {
    fn add_assign(&mut self, rhs: Fixed) {
        self.raw += rhs.raw;
    }
}

impl SubAssign<&Fixed> for Fixed {
    fn sub_assign(&mut self, rhs: &Fixed) {
        self.raw -= &rhs.raw;
    }
}

impl Sum for Fixed {
    fn sum<I: Iterator<Item = Fixed>>(iter: I) -> Fixed {
        iter.fold(Fixed::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Fixed> for Fixed {
    fn sum<I: Iterator<Item = &'a Fixed>>(iter: I) -> Fixed {
        let mut acc = Fixed::zero();
        for x in iter {
            acc += x;
        }
        acc
    }
}

/// Compares with a relative tolerance; exact zeros compare equal only to zero.
pub fn approx_eq(a: &Fixed, b: &Fixed, rel_tol: f64) -> bool {
    match a.relative_difference(b).partial_cmp(&rel_tol) {
        Some(Ordering::Less) | Some(Ordering::Equal) => true,
        _ => false,
    }
}
