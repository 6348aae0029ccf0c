use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use parking_lot::RwLock;

use super::MultipoleTriple;
use crate::error::{Error, Result};
use crate::fieldsim::{estimate_cl, AngularPowerSpectrum, HarmonicCoefficients};
use crate::wigner::ThreeJTable;

/// Process-wide 3j tables keyed by sorted triple, shared across replications.
pub fn shared_table(t: MultipoleTriple) -> Result<Arc<ThreeJTable>> {
    static TABLES: OnceLock<RwLock<HashMap<[u32; 3], Arc<ThreeJTable>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(t) = tables.read().get(&t.ls()) {
        return Ok(t.clone());
    }
    let table = Arc::new(ThreeJTable::new(t.l1(), t.l2(), t.l3())?);
    Ok(tables.write().entry(t.ls()).or_insert(table).clone())
}

fn full_row(a: &HarmonicCoefficients, l: u32) -> Vec<Complex64> {
    (-(l as i32)..=l as i32).map(|m| a.at(l, m)).collect()
}

/// `B̂ = Σ_{m1,m2} (l1 l2 l3; m1 m2 -m1-m2) a_{l1m1} a_{l2m2} a_{l3,-m1-m2}`.
///
/// Zero for parity-odd or triangle-violating triples.
pub fn sample_bispectrum(a: &HarmonicCoefficients, t: MultipoleTriple) -> Result<f64> {
    if t.l3() > a.lmax() {
        return Err(Error::OutOfRange {
            l: t.l3(),
            lmax: a.lmax(),
        });
    }
    if !t.is_valid() {
        return Ok(0.0);
    }
    let table = shared_table(t)?;
    let [l1, l2, l3] = t.ls().map(|l| l as i32);
    let (r1, r2, r3) = (full_row(a, t.l1()), full_row(a, t.l2()), full_row(a, t.l3()));
    let mut acc = Complex64::new(0.0, 0.0);
    for m1 in -l1..=l1 {
        let x1 = r1[(m1 + l1) as usize];
        let lo = (-l2).max(-l3 - m1);
        let hi = l2.min(l3 - m1);
        let mut inner = Complex64::new(0.0, 0.0);
        for m2 in lo..=hi {
            let w = table.get(m1, m2);
            if w != 0.0 {
                let m3 = -m1 - m2;
                inner += r2[(m2 + l2) as usize] * r3[(m3 + l3) as usize] * w;
            }
        }
        acc += x1 * inner;
    }
    if acc.im.abs() > 1e-10 * acc.re.abs() + 1e-12 {
        return Err(Error::Numerical(format!(
            "bispectrum at {t} has imaginary part {:e} against real part {:e}",
            acc.im, acc.re
        )));
    }
    Ok(acc.re)
}

fn phase(t: MultipoleTriple) -> f64 {
    if (t.sum() / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `I = (-1)^{(l1+l2+l3)/2} B̂ / √(C_{l1} C_{l2} C_{l3})`.
pub fn normalized_bispectrum(
    a: &HarmonicCoefficients,
    t: MultipoleTriple,
    spec: &AngularPowerSpectrum,
) -> Result<f64> {
    let b = sample_bispectrum(a, t)?;
    if !t.is_valid() {
        return Ok(0.0);
    }
    let c: f64 = t.ls().iter().map(|&l| spec.get(l)).product::<Result<f64>>()?;
    Ok(phase(t) * b / c.sqrt())
}

/// `Î`: as [`normalized_bispectrum`] with `Ĉ_l` estimated from `a`.
pub fn feasible_normalized_bispectrum(a: &HarmonicCoefficients, t: MultipoleTriple) -> Result<f64> {
    let b = sample_bispectrum(a, t)?;
    if !t.is_valid() {
        return Ok(0.0);
    }
    let mut c = 1.0;
    for l in t.ls() {
        let cl = estimate_cl(a, l)?;
        if !(cl > 0.0) {
            return Err(Error::NonPositiveSpectrum { l, value: cl });
        }
        c *= cl;
    }
    Ok(phase(t) * b / c.sqrt())
}
