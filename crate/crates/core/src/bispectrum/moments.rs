use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::MultipoleTriple;
use crate::error::{Error, Result};
use crate::precision::Fixed;
use crate::wigner::{sixj_all_equal, sixj_same_rows, sixj_stretched};

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn double_factorial_odd(p: u32) -> i64 {
    (1..2 * p as i64).step_by(2).product()
}

/// `Δ`: 1 for distinct multipoles, 2 when exactly two coincide, 6 when all do.
pub fn delta_factor(t: MultipoleTriple) -> u32 {
    let [a, b, c] = t.ls();
    match (a == b, b == c) {
        (true, true) => 6,
        (false, false) => 1,
        _ => 2,
    }
}

/// `g(l; p) = ∏_{k=1}^p (2l+1)/(2l+2k-1)`.
pub fn g_factor(l: u32, p: u32) -> BigRational {
    let n = 2 * l as i64 + 1;
    (1..=p as i64).fold(BigRational::one(), |acc, k| acc * frac(n, 2 * l as i64 + 2 * k - 1))
}

/// `G = ∏_u g(ℓ̄_u; #(u)/2)` over the classes of equal multipoles among all
/// `3 · Σ 2p_i` occurrences.
pub fn big_g_factor(triples: &[(MultipoleTriple, u32)]) -> BigRational {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for &(t, p) in triples {
        for l in t.ls() {
            *counts.entry(l).or_default() += 2 * p;
        }
    }
    counts
        .into_iter()
        .map(|(l, n)| {
            assert!(n % 2 == 0, "odd class cardinality");
            g_factor(l, n / 2)
        })
        .fold(BigRational::one(), |acc, g| acc * g)
}

/// Fourth-order connected contribution `κ₄`, case by case. Zero for triples
/// the bispectrum cannot see.
pub fn kappa4_closed_form(t: MultipoleTriple) -> BigRational {
    if !t.is_valid() {
        return BigRational::zero();
    }
    kappa4_formal(t)
}

/// The `κ₄` case formula evaluated for any triangle-valid triple, ignoring
/// the parity rule. Zero when the triangle rule fails.
pub fn kappa4_formal(t: MultipoleTriple) -> BigRational {
    if !t.triangle_ok() {
        return BigRational::zero();
    }
    let [l1, l2, l3] = t.ls();
    let inv = |l: u32| frac(1, 2 * l as i64 + 1);
    let sixj = sixj_same_rows(l1, l2, l3);
    if l1 == l2 && l2 == l3 {
        return int(6 * 18 * 18) * inv(l1) + int(1296) * sixj;
    }
    if l1 == l2 {
        return int(96) * inv(l2) + int(24) * inv(l3) + int(48) * sixj;
    }
    if l2 == l3 {
        return int(96) * inv(l2) + int(24) * inv(l1) + int(48) * sixj;
    }
    int(6) * (inv(l1) + inv(l2) + inv(l3)) + int(6) * sixj
}

/// `E I⁴ = 3Δ² + κ₄`.
pub fn fourth_moment_general(t: MultipoleTriple) -> BigRational {
    if !t.is_valid() {
        return BigRational::zero();
    }
    let d = delta_factor(t) as i64;
    int(3 * d * d) + kappa4_closed_form(t)
}

/// Shapes with dedicated fourth-moment displays.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourthMomentShape {
    /// `(l1, l2, l1+l2)` with `l1 ≠ l2`.
    Stretched,
    /// `(l, l, 2l)`.
    DoubledStretched,
    /// `(l, l, l)`.
    Equal,
    General,
}

pub fn fourth_moment_shape(t: MultipoleTriple) -> FourthMomentShape {
    let [l1, l2, l3] = t.ls();
    if l1 == l2 && l2 == l3 {
        FourthMomentShape::Equal
    } else if l3 == l1 + l2 && l1 == l2 {
        FourthMomentShape::DoubledStretched
    } else if l3 == l1 + l2 {
        FourthMomentShape::Stretched
    } else {
        FourthMomentShape::General
    }
}

/// `E I⁴` from the shape-specific closed forms, falling back to `3Δ² + κ₄`.
pub fn fourth_moment_exact(t: MultipoleTriple) -> BigRational {
    if !t.is_valid() {
        return BigRational::zero();
    }
    let [l1, l2, _] = t.ls();
    let n = |k: u32| frac(1, k as i64);
    match fourth_moment_shape(t) {
        FourthMomentShape::Stretched => {
            int(3)
                + int(6) * n(2 * l1 + 1)
                + int(6) * n(2 * l2 + 1)
                + int(6) * n(2 * l1 + 2 * l2 + 1)
                + int(6) * sixj_stretched(l1, l2)
        }
        FourthMomentShape::DoubledStretched => {
            int(12) + int(96) * n(2 * l1 + 1) + int(24) * n(4 * l1 + 1) + int(48) * sixj_stretched(l1, l1)
        }
        FourthMomentShape::Equal => {
            int(108) + int(6 * 18 * 18) * n(2 * l1 + 1) + int(1296) * sixj_all_equal(l1)
        }
        FourthMomentShape::General => fourth_moment_general(t),
    }
}

/// `E Î⁴`, using the explicit correction products for the covered shapes
/// and `E I⁴ · G` otherwise.
pub fn fourth_moment_exact_feasible(t: MultipoleTriple) -> BigRational {
    if !t.is_valid() {
        return BigRational::zero();
    }
    let [l1, l2, l3] = t.ls();
    let r = |a: u32, b: u32| frac(a as i64, b as i64);
    let factor = match fourth_moment_shape(t) {
        FourthMomentShape::Stretched => {
            r(2 * l1 + 1, 2 * l1 + 3) * r(2 * l2 + 1, 2 * l2 + 3) * r(2 * l3 + 1, 2 * l3 + 3)
        }
        FourthMomentShape::DoubledStretched => {
            let l = l1;
            r(2 * l + 1, 2 * l + 3) * r(2 * l + 1, 2 * l + 5) * r(2 * l + 1, 2 * l + 7) * r(4 * l + 1, 4 * l + 3)
        }
        FourthMomentShape::Equal => (1..=6).fold(BigRational::one(), |acc, k| acc * r(2 * l1 + 1, 2 * l1 + 2 * k - 1)),
        FourthMomentShape::General => big_g_factor(&[(t, 2)]),
    };
    fourth_moment_exact(t) * factor
}

fn pow(base: &BigRational, e: i32) -> BigRational {
    num_traits::pow::Pow::pow(base, e)
}

/// Exact terms of the moment expansion of `E I^{2p}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactExpansion {
    pub p: u32,
    pub leading: BigRational,
    pub kappa4_correction: BigRational,
    pub g_correction: BigRational,
    pub order_bound: BigRational,
}

impl ExactExpansion {
    /// `leading + kappa4_correction`.
    pub fn prediction(&self) -> BigRational {
        &self.leading + &self.kappa4_correction
    }

    /// Prediction for the feasible statistic, `prediction · G`.
    pub fn feasible_prediction(&self) -> BigRational {
        self.prediction() * &self.g_correction
    }
}

/// Floating summary of [`ExactExpansion`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentPrediction {
    pub p: u32,
    pub leading: f64,
    pub kappa4_correction: f64,
    pub g_correction: f64,
    pub order_bound: f64,
}

impl MomentPrediction {
    pub fn prediction(&self) -> f64 {
        self.leading + self.kappa4_correction
    }

    pub fn feasible_prediction(&self) -> f64 {
        self.prediction() * self.g_correction
    }
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl From<&ExactExpansion> for MomentPrediction {
    fn from(e: &ExactExpansion) -> Self {
        MomentPrediction {
            p: e.p,
            leading: to_f64(&e.leading),
            kappa4_correction: to_f64(&e.kappa4_correction),
            g_correction: to_f64(&e.g_correction),
            order_bound: to_f64(&e.order_bound),
        }
    }
}

/// `E I^{2p} ≈ (2p-1)!! Δ^p + [p(p-1)/6] (2p-1)!! κ₄ Δ^{p-2}`, exact for
/// `p ≤ 2`, with remainder scale `(2l1+1)^{-2}`.
pub fn moment_expansion_exact(t: MultipoleTriple, p: u32) -> ExactExpansion {
    let order_bound = frac(1, (2 * t.l1() as i64 + 1).pow(2));
    let g_correction = big_g_factor(&[(t, p)]);
    if !t.is_valid() {
        return ExactExpansion {
            p,
            leading: BigRational::zero(),
            kappa4_correction: BigRational::zero(),
            g_correction,
            order_bound,
        };
    }
    let delta = int(delta_factor(t) as i64);
    let dfact = int(double_factorial_odd(p));
    let leading = &dfact * pow(&delta, p as i32);
    let kappa4_correction = if p >= 2 {
        frac((p * (p - 1)) as i64, 6) * &dfact * kappa4_closed_form(t) * pow(&delta, p as i32 - 2)
    } else {
        BigRational::zero()
    };
    ExactExpansion {
        p,
        leading,
        kappa4_correction,
        g_correction,
        order_bound,
    }
}

pub fn moment_expansion(t: MultipoleTriple, p: u32) -> MomentPrediction {
    MomentPrediction::from(&moment_expansion_exact(t, p))
}

fn binomial(n: u32, k: u32) -> i64 {
    (0..k as i64).fold(1i64, |acc, i| acc * (n as i64 - i) / (i + 1))
}

/// `E I^{2p} = (2p-1)!!Δ^p + Σ_{k=2}^{p-1} C(2p,2k)(2p-2k-1)!!Δ^{p-k}[E I^{2k} - (2k-1)!!Δ^k] + κ_{2p}`.
///
/// `known[k-1]` holds `E I^{2k}`; `kappa_2p = None` drops the last term.
/// At `p = 2` the sum is empty and the result is `3Δ² + κ₄`.
pub fn moment_recursion(t: MultipoleTriple, p: u32, known: &[Fixed], kappa_2p: Option<&Fixed>) -> Result<Fixed> {
    if p == 0 {
        return Err(Error::InvalidArgument("moment order p must be positive".into()));
    }
    if !t.is_valid() {
        return Ok(Fixed::zero());
    }
    let delta = delta_factor(t) as i64;
    let dpow = |e: u32| Fixed::from_integer(delta.pow(e));
    let mut total = &dpow(p) * double_factorial_odd(p);
    for k in 2..p {
        let moment = known.get(k as usize - 1).ok_or(Error::MissingMoment(2 * k))?;
        let excess = moment - &(&dpow(k) * double_factorial_odd(k));
        let coeff = binomial(2 * p, 2 * k) * double_factorial_odd(p - k);
        total += &(&excess * &dpow(p - k)) * coeff;
    }
    if let Some(kappa) = kappa_2p {
        total += kappa;
    }
    Ok(total)
}

/// `H₄(z) = z⁴ - 6z² + 3`.
pub fn hermite4(z: f64) -> f64 {
    z.powi(4) - 6.0 * z * z + 3.0
}

/// `H₃(z) = z³ - 3z`, with `∫_{-∞}^x H₄ φ = -H₃(x) φ(x)`.
pub fn hermite3(z: f64) -> f64 {
    z.powi(3) - 3.0 * z
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeworthValue {
    pub value: f64,
    pub unclamped: f64,
    pub clamped: bool,
}

/// `P(I/√Δ ≤ x) ≈ Φ(x) + (κ/24) ∫_{-∞}^x H₄(z)φ(z)dz` with the standardized
/// cumulant `κ = κ₄/Δ²`, clamped to `[0, 1]`.
pub fn edgeworth_cdf(t: MultipoleTriple, x: f64) -> Result<EdgeworthValue> {
    if !t.is_valid() {
        return Err(Error::InvalidArgument(format!("triple {t} has an identically zero bispectrum")));
    }
    let d = delta_factor(t) as f64;
    let kappa = to_f64(&kappa4_closed_form(t)) / (d * d);
    Ok(edgeworth_with_kappa(kappa, x))
}

pub fn edgeworth_with_kappa(kappa: f64, x: f64) -> EdgeworthValue {
    let normal = Normal::standard();
    let correction = if x.is_finite() {
        -kappa / 24.0 * hermite3(x) * normal.pdf(x)
    } else {
        0.0
    };
    let unclamped = normal.cdf(x) + correction;
    let value = unclamped.clamp(0.0, 1.0);
    EdgeworthValue {
        value,
        unclamped,
        clamped: value != unclamped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: u32, b: u32, c: u32) -> MultipoleTriple {
        MultipoleTriple::new(a, b, c).unwrap()
    }

    #[test]
    fn delta_cases() {
        assert_eq!(delta_factor(t(2, 3, 5)), 1);
        assert_eq!(delta_factor(t(3, 3, 4)), 2);
        assert_eq!(delta_factor(t(2, 4, 4)), 2);
        assert_eq!(delta_factor(t(4, 4, 4)), 6);
    }

    #[test]
    fn g_values() {
        for l in 1..10 {
            assert!(g_factor(l, 1).is_one());
            assert!(g_factor(l, 0).is_one());
        }
        assert_eq!(g_factor(2, 2), frac(5, 7));
        assert_eq!(g_factor(1, 3), frac(9, 35));
        assert!(big_g_factor(&[(t(1, 2, 3), 1)]).is_one());
        assert_eq!(big_g_factor(&[(t(1, 2, 3), 2)]), frac(1, 3));
        assert_eq!(big_g_factor(&[(t(3, 3, 3), 1)]), g_factor(3, 3));
    }

    #[test]
    fn fourth_moment_values() {
        let m = fourth_moment_exact(t(1, 2, 3));
        assert_eq!(m, int(3) + int(2) + frac(6, 5) + frac(6, 7) + frac(288, 5040));
        assert_eq!(fourth_moment_exact(t(2, 2, 4)), int(12) + frac(96, 5) + frac(24, 9) + frac(48 * 576, 362_880));
        assert_eq!(fourth_moment_exact_feasible(t(1, 2, 3)), m * frac(1, 3));
        for l1 in 1..=6 {
            for l2 in l1..=6 {
                for l3 in l2..=(l1 + l2).min(8) {
                    let tr = t(l1, l2, l3);
                    assert_eq!(fourth_moment_exact(tr), fourth_moment_general(tr), "{tr}");
                    assert_eq!(
                        fourth_moment_exact_feasible(tr),
                        fourth_moment_general(tr) * big_g_factor(&[(tr, 2)]),
                        "{tr}"
                    );
                }
            }
        }
        assert!(fourth_moment_exact(t(1, 2, 2)).is_zero());
    }

    #[test]
    fn expansion_and_recursion() {
        let e = moment_expansion_exact(t(2, 3, 5), 1);
        assert_eq!(e.prediction(), int(1));
        assert!(e.kappa4_correction.is_zero());
        for tr in [t(1, 2, 3), t(2, 2, 4), t(3, 3, 3)] {
            let e = moment_expansion_exact(tr, 2);
            assert_eq!(e.prediction(), fourth_moment_exact(tr));
            let kappa = Fixed::from_rational(&kappa4_closed_form(tr));
            let delta = Fixed::from_integer(delta_factor(tr) as i64);
            let r = moment_recursion(tr, 2, &[delta], Some(&kappa)).unwrap();
            assert!(r.relative_difference(&Fixed::from_rational(&e.prediction())) < 1e-80);
        }
        assert!(matches!(
            moment_recursion(t(1, 2, 3), 3, &[Fixed::one()], None),
            Err(Error::MissingMoment(4))
        ));
    }

    #[test]
    fn edgeworth_limits() {
        assert_eq!(edgeworth_with_kappa(0.0, 0.0).value, 0.5);
        assert_eq!(edgeworth_cdf(t(1, 2, 3), f64::INFINITY).unwrap().value, 1.0);
        let v = edgeworth_cdf(t(1, 2, 3), 2.0).unwrap();
        let kappa = to_f64(&kappa4_closed_form(t(1, 2, 3)));
        let n = Normal::standard();
        assert!((v.value - (n.cdf(2.0) - kappa / 24.0 * 2.0 * n.pdf(2.0))).abs() < 1e-15);
        let big = edgeworth_with_kappa(400.0, -0.5);
        assert!(big.clamped && big.value == 0.0);
    }

    #[test]
    fn hermite_integral_by_quadrature() {
        let n = Normal::standard();
        let x = 1.3;
        let (a, steps) = (-12.0, 200_000);
        let h = (x - a) / steps as f64;
        let f = |z: f64| hermite4(z) * n.pdf(z);
        let mut s = f(a) + f(x);
        for i in 1..steps {
            let z = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(z);
        }
        let quad = s * h / 3.0;
        assert!((quad + hermite3(x) * n.pdf(x)).abs() < 1e-10);
    }
}
