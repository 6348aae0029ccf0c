//! Harmonic coefficients of Gaussian isotropic fields on the sphere.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly positive `C_l` for `1 ≤ l ≤ lmax`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumJson", into = "SpectrumJson")]
pub struct AngularPowerSpectrum {
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SpectrumJson {
    lmax: u32,
    cl: Vec<f64>,
}

impl TryFrom<SpectrumJson> for AngularPowerSpectrum {
    type Error = Error;
    fn try_from(j: SpectrumJson) -> Result<Self> {
        if j.cl.len() != j.lmax as usize {
            return Err(Error::Parse(format!(
                "spectrum lists {} values for lmax = {}",
                j.cl.len(),
                j.lmax
            )));
        }
        AngularPowerSpectrum::new(j.cl)
    }
}

impl From<AngularPowerSpectrum> for SpectrumJson {
    fn from(s: AngularPowerSpectrum) -> Self {
        SpectrumJson {
            lmax: s.lmax(),
            cl: s.values,
        }
    }
}

impl AngularPowerSpectrum {
    /// `values[i]` is `C_{i+1}`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("spectrum needs lmax >= 1".into()));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveSpectrum {
                    l: i as u32 + 1,
                    value: v,
                });
            }
        }
        Ok(AngularPowerSpectrum { values })
    }

    pub fn flat(lmax: u32) -> Result<Self> {
        AngularPowerSpectrum::new(vec![1.0; lmax as usize])
    }

    /// `C_l = l^{-alpha}`.
    pub fn power_law(lmax: u32, alpha: f64) -> Result<Self> {
        AngularPowerSpectrum::new((1..=lmax).map(|l| (l as f64).powf(-alpha)).collect())
    }

    pub fn lmax(&self) -> u32 {
        self.values.len() as u32
    }

    pub fn get(&self, l: u32) -> Result<f64> {
        if l == 0 {
            return Err(Error::MissingSpectrum(0));
        }
        self.values
            .get(l as usize - 1)
            .copied()
            .ok_or(Error::MissingSpectrum(l))
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        AngularPowerSpectrum::new(self.values.iter().map(|v| v * factor).collect())
    }
}

/// `a_lm` for `1 ≤ l ≤ lmax`; only `m ≥ 0` is stored and
/// `a_{l,-m} = (-1)^m conj(a_{lm})` is applied on read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoefficientsJson", into = "CoefficientsJson")]
pub struct HarmonicCoefficients {
    rows: Vec<Vec<Complex64>>,
}

#[derive(Serialize, Deserialize)]
struct CoefficientsJson {
    lmax: u32,
    coeffs: Vec<RowJson>,
}

#[derive(Serialize, Deserialize)]
struct RowJson {
    l: u32,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<CoefficientsJson> for HarmonicCoefficients {
    type Error = Error;
    fn try_from(j: CoefficientsJson) -> Result<Self> {
        if j.coeffs.len() != j.lmax as usize {
            return Err(Error::Parse(format!(
                "expected {} coefficient rows, found {}",
                j.lmax,
                j.coeffs.len()
            )));
        }
        let mut rows = Vec::with_capacity(j.coeffs.len());
        for (i, row) in j.coeffs.into_iter().enumerate() {
            let l = i as u32 + 1;
            if row.l != l || row.re.len() != l as usize + 1 || row.im.len() != l as usize + 1 {
                return Err(Error::Parse(format!("malformed coefficient row for l = {l}")));
            }
            rows.push(row.re.into_iter().zip(row.im).map(|(r, i)| Complex64::new(r, i)).collect());
        }
        HarmonicCoefficients::from_rows(rows)
    }
}

impl From<HarmonicCoefficients> for CoefficientsJson {
    fn from(h: HarmonicCoefficients) -> Self {
        CoefficientsJson {
            lmax: h.lmax(),
            coeffs: h
                .rows
                .iter()
                .enumerate()
                .map(|(i, row)| RowJson {
                    l: i as u32 + 1,
                    re: row.iter().map(|z| z.re).collect(),
                    im: row.iter().map(|z| z.im).collect(),
                })
                .collect(),
        }
    }
}

impl HarmonicCoefficients {
    /// `rows[l-1][m]` for `0 ≤ m ≤ l`; `a_{l0}` must be real.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("coefficients need lmax >= 1".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            let l = i + 1;
            if row.len() != l + 1 {
                return Err(Error::InvalidArgument(format!(
                    "row l = {l} needs {} entries, got {}",
                    l + 1,
                    row.len()
                )));
            }
            if row[0].im != 0.0 {
                return Err(Error::InvalidArgument(format!("a_{{{l},0}} must be real")));
            }
        }
        Ok(HarmonicCoefficients { rows })
    }

    pub fn lmax(&self) -> u32 {
        self.rows.len() as u32
    }

    /// `a_lm` for `|m| ≤ l`.
    pub fn get(&self, l: u32, m: i32) -> Result<Complex64> {
        if l == 0 || l > self.lmax() {
            return Err(Error::OutOfRange { l, lmax: self.lmax() });
        }
        if m.unsigned_abs() > l {
            return Err(Error::Domain { index: 1, l, m });
        }
        Ok(self.at(l, m))
    }

    #[inline]
    pub(crate) fn at(&self, l: u32, m: i32) -> Complex64 {
        let z = self.rows[l as usize - 1][m.unsigned_abs() as usize];
        if m >= 0 {
            z
        } else if m % 2 == 0 {
            z.conj()
        } else {
            -z.conj()
        }
    }

    /// Stored `m ≥ 0` half of degree `l`.
    pub fn row(&self, l: u32) -> Result<&[Complex64]> {
        if l == 0 || l > self.lmax() {
            return Err(Error::OutOfRange { l, lmax: self.lmax() });
        }
        Ok(&self.rows[l as usize - 1])
    }

    fn scale_rows(&self, factor: impl Fn(u32) -> Result<f64>) -> Result<Self> {
        let mut rows = Vec::with_capacity(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            let f = factor(i as u32 + 1)?;
            rows.push(row.iter().map(|z| z * f).collect());
        }
        Ok(HarmonicCoefficients { rows })
    }
}

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `a_l0 ~ N(0, C_l)` and `a_lm = (x + iy)√(C_l/2)` for `m > 0`.
pub fn sample_alms_with<R: Rng + ?Sized>(
    spec: &AngularPowerSpectrum,
    lmax: u32,
    rng: &mut R,
) -> Result<HarmonicCoefficients> {
    if lmax == 0 {
        return Err(Error::InvalidArgument("lmax must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(lmax as usize);
    for l in 1..=lmax {
        let c = spec.get(l)?;
        let sd0 = c.sqrt();
        let sd = (c / 2.0).sqrt();
        let mut row = Vec::with_capacity(l as usize + 1);
        let x: f64 = rng.sample(StandardNormal);
        row.push(Complex64::new(x * sd0, 0.0));
        for _ in 1..=l {
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            row.push(Complex64::new(x * sd, y * sd));
        }
        rows.push(row);
    }
    Ok(HarmonicCoefficients { rows })
}

pub fn sample_alms(spec: &AngularPowerSpectrum, lmax: u32, seed: u64) -> Result<HarmonicCoefficients> {
    sample_alms_with(spec, lmax, &mut stream_rng(seed, 0))
}

/// `Ĉ_l = (2l+1)^{-1} Σ_m |a_lm|²`.
pub fn estimate_cl(a: &HarmonicCoefficients, l: u32) -> Result<f64> {
    let row = a.row(l)?;
    let tail: f64 = row[1..].iter().map(|z| z.norm_sqr()).sum();
    Ok((row[0].norm_sqr() + 2.0 * tail) / (2 * l + 1) as f64)
}

/// Divisor used to normalize coefficients.
#[derive(Clone, Copy, Debug)]
pub enum Divisor<'a> {
    Known(&'a AngularPowerSpectrum),
    Estimated,
}

/// `u_lm = a_lm/√C_l`, or `û_lm = a_lm/√Ĉ_l` with the spectrum estimated
/// from `a` itself.
pub fn normalize_coeffs(a: &HarmonicCoefficients, divisor: Divisor<'_>) -> Result<HarmonicCoefficients> {
    a.scale_rows(|l| {
        let c = match divisor {
            Divisor::Known(spec) => spec.get(l)?,
            Divisor::Estimated => estimate_cl(a, l)?,
        };
        if !(c > 0.0) {
            return Err(Error::NonPositiveSpectrum { l, value: c });
        }
        Ok(1.0 / c.sqrt())
    })
}
