//! Seeded replication engine comparing simulated bispectrum moments with the
//! closed forms.

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bispectrum::{
    big_g_factor, delta_factor, feasible_normalized_bispectrum, fourth_moment_exact,
    fourth_moment_exact_feasible, kappa4_formal, moment_expansion, normalized_bispectrum,
    MomentPrediction, MultipoleTriple,
};
use crate::error::{Error, Result};
use crate::fieldsim::{sample_alms_with, stream_rng, AngularPowerSpectrum};

/// Default verdict threshold on `|z|`.
pub const DEFAULT_Z_THRESHOLD: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectrumModel {
    /// `C_l = 1`.
    Flat,
    /// `C_l = l^{-alpha}`.
    PowerLaw { alpha: f64 },
}

impl SpectrumModel {
    pub fn build(&self, lmax: u32) -> Result<AngularPowerSpectrum> {
        match *self {
            SpectrumModel::Flat => AngularPowerSpectrum::flat(lmax),
            SpectrumModel::PowerLaw { alpha } => AngularPowerSpectrum::power_law(lmax, alpha),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Normalize by the true spectrum (`I`).
    KnownCl,
    /// Normalize by the spectrum estimated from each field (`Î`).
    EstimatedCl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub triples: Vec<MultipoleTriple>,
    #[serde(default = "default_spectrum")]
    pub spectrum: SpectrumModel,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_powers")]
    pub powers: Vec<u32>,
    /// Field bandlimit; defaults to the largest multipole among the triples.
    #[serde(default)]
    pub lmax: Option<u32>,
    #[serde(default = "default_threshold")]
    pub z_threshold: f64,
}

fn default_spectrum() -> SpectrumModel {
    SpectrumModel::Flat
}

fn default_mode() -> Mode {
    Mode::KnownCl
}

fn default_powers() -> Vec<u32> {
    vec![1, 2]
}

fn default_threshold() -> f64 {
    DEFAULT_Z_THRESHOLD
}

impl ExperimentConfig {
    pub fn new(triples: Vec<MultipoleTriple>, replications: usize, seed: u64) -> Self {
        ExperimentConfig {
            triples,
            spectrum: SpectrumModel::Flat,
            replications,
            seed,
            mode: Mode::KnownCl,
            powers: default_powers(),
            lmax: None,
            z_threshold: DEFAULT_Z_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<u32> {
        if self.replications < 2 {
            return Err(Error::InvalidArgument("at least two replications are required".into()));
        }
        if self.triples.is_empty() {
            return Err(Error::InvalidArgument("no triples configured".into()));
        }
        if let Some(t) = self.triples.iter().find(|t| !t.is_valid()) {
            return Err(Error::InvalidArgument(format!(
                "triple {t} violates the parity or triangle rule"
            )));
        }
        if self.powers.contains(&0) {
            return Err(Error::InvalidArgument("moment powers must be positive".into()));
        }
        if !(self.z_threshold > 0.0) {
            return Err(Error::InvalidArgument("z threshold must be positive".into()));
        }
        let needed = self.triples.iter().map(|t| t.l3()).max().unwrap_or(1);
        let lmax = self.lmax.unwrap_or(needed);
        if lmax < needed {
            return Err(Error::OutOfRange { l: needed, lmax });
        }
        Ok(lmax)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub triple: MultipoleTriple,
    pub p: u32,
    /// Mean of `I^{2p}` (or `Î^{2p}`) across replications.
    pub sample_moment: f64,
    pub predicted: MomentPrediction,
    /// The prediction the sample is compared with, for the configured mode.
    pub predicted_value: f64,
    pub standard_error: f64,
    pub z_score: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionEntry {
    pub triple: MultipoleTriple,
    pub ks_statistic: f64,
    pub ks_pvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub config: ExperimentConfig,
    pub lmax: u32,
    pub moments: Vec<MomentEntry>,
    pub distributions: Vec<DistributionEntry>,
}

impl MomentReport {
    pub fn all_pass(&self) -> bool {
        self.moments.iter().all(|m| m.verdict == Verdict::Pass)
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Per-replication statistics: `values[r][i]` is `I` or `Î` of triple `i`
/// in replication `r`, which draws from stream `r` of the seeded generator.
pub fn run_replications(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let lmax = cfg.validate()?;
    let spec = cfg.spectrum.build(lmax)?;
    with_workers(workers, || {
        (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(cfg.seed, r as u64);
                let a = sample_alms_with(&spec, lmax, &mut rng)?;
                cfg.triples
                    .iter()
                    .map(|&t| match cfg.mode {
                        Mode::KnownCl => normalized_bispectrum(&a, t, &spec),
                        Mode::EstimatedCl => feasible_normalized_bispectrum(&a, t),
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// Mean and delete-1 jackknife standard error, from leave-one-out means.
pub fn jackknife_mean(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let total: f64 = xs.iter().sum();
    let mean = total / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let loo: Vec<f64> = xs.iter().map(|x| (total - x) / (n - 1) as f64).collect();
    let loo_mean = loo.iter().sum::<f64>() / n as f64;
    let ss: f64 = loo.iter().map(|v| (v - loo_mean).powi(2)).sum();
    (mean, ((n - 1) as f64 / n as f64 * ss).sqrt())
}

/// Generic delete-1 jackknife standard error of `stat`; quadratic in `n`.
pub fn jackknife_se(xs: &[f64], stat: impl Fn(&[f64]) -> f64) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let mut buf = Vec::with_capacity(n - 1);
    let loo: Vec<f64> = (0..n)
        .map(|i| {
            buf.clear();
            buf.extend(xs[..i].iter().chain(&xs[i + 1..]));
            stat(&buf)
        })
        .collect();
    let m = loo.iter().sum::<f64>() / n as f64;
    ((n - 1) as f64 / n as f64 * loo.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sqrt()
}

/// One-sample Kolmogorov-Smirnov distance against `cdf`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov p-value with the small-sample scaling
/// `λ = (√n + 0.12 + 0.11/√n) D`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn standard_normal_cdf() -> impl Fn(f64) -> f64 {
    let n = Normal::standard();
    move |x| n.cdf(x)
}

fn predicted_value(t: MultipoleTriple, p: u32, mode: Mode, pred: &MomentPrediction) -> f64 {
    // p = 2 is exact; use the shape-specific closed forms.
    match (p, mode) {
        (2, Mode::KnownCl) => fourth_moment_exact(t).to_f64().unwrap_or(f64::NAN),
        (2, Mode::EstimatedCl) => fourth_moment_exact_feasible(t).to_f64().unwrap_or(f64::NAN),
        (_, Mode::KnownCl) => pred.prediction(),
        (_, Mode::EstimatedCl) => pred.feasible_prediction(),
    }
}

/// Builds the report from per-replication values.
pub fn summarize(cfg: &ExperimentConfig, values: &[Vec<f64>]) -> Result<MomentReport> {
    let lmax = cfg.validate()?;
    let n = values.len();
    let cdf = standard_normal_cdf();
    let mut moments = Vec::new();
    let mut distributions = Vec::new();
    for (i, &t) in cfg.triples.iter().enumerate() {
        let column: Vec<f64> = values.iter().map(|row| row[i]).collect();
        for &p in &cfg.powers {
            let powered: Vec<f64> = column.iter().map(|x| x.powi(2 * p as i32)).collect();
            let (sample_moment, standard_error) = jackknife_mean(&powered);
            let predicted = moment_expansion(t, p);
            let target = predicted_value(t, p, cfg.mode, &predicted);
            let z_score = (sample_moment - target) / standard_error;
            let verdict = if z_score.abs() <= cfg.z_threshold {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            moments.push(MomentEntry {
                triple: t,
                p,
                sample_moment,
                predicted,
                predicted_value: target,
                standard_error,
                z_score,
                verdict,
            });
        }
        let scale = (delta_factor(t) as f64).sqrt();
        let standardized: Vec<f64> = column.iter().map(|x| x / scale).collect();
        let d = ks_statistic(&standardized, &cdf);
        distributions.push(DistributionEntry {
            triple: t,
            ks_statistic: d,
            ks_pvalue: ks_pvalue(d, n),
        });
    }
    Ok(MomentReport {
        config: cfg.clone(),
        lmax,
        moments,
        distributions,
    })
}

/// Simulates and summarizes; the report depends only on `cfg`, not on the
/// number of workers.
pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<MomentReport> {
    let values = run_replications(cfg, workers)?;
    summarize(cfg, &values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltEntry {
    pub triple: MultipoleTriple,
    pub ks_statistic: f64,
    pub ks_pvalue: f64,
    /// `1.63/√N`, the 1% critical value.
    pub critical_1pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub first: MultipoleTriple,
    pub second: MultipoleTriple,
    pub correlation: f64,
    /// `4/√N`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub replications: usize,
    pub triples: Vec<CltEntry>,
    pub correlations: Vec<CorrelationEntry>,
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// KS distance of `I/√Δ` from the standard normal per triple, and sample
/// correlations between every pair of triples.
pub fn clt_check(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<CltReport> {
    if cfg.replications < 1000 {
        return Err(Error::InvalidArgument(format!(
            "CLT check needs at least 1000 replications, got {}",
            cfg.replications
        )));
    }
    let values = run_replications(cfg, workers)?;
    let n = values.len();
    let cdf = standard_normal_cdf();
    let columns: Vec<Vec<f64>> = (0..cfg.triples.len())
        .map(|i| values.iter().map(|row| row[i]).collect())
        .collect();
    let triples = cfg
        .triples
        .iter()
        .zip(&columns)
        .map(|(&t, col)| {
            let scale = (delta_factor(t) as f64).sqrt();
            let z: Vec<f64> = col.iter().map(|x| x / scale).collect();
            let d = ks_statistic(&z, &cdf);
            CltEntry {
                triple: t,
                ks_statistic: d,
                ks_pvalue: ks_pvalue(d, n),
                critical_1pct: 1.63 / (n as f64).sqrt(),
            }
        })
        .collect();
    let mut correlations = Vec::new();
    for i in 0..columns.len() {
        for j in i + 1..columns.len() {
            correlations.push(CorrelationEntry {
                first: cfg.triples[i],
                second: cfg.triples[j],
                correlation: correlation(&columns[i], &columns[j]),
                bound: 4.0 / (n as f64).sqrt(),
            });
        }
    }
    Ok(CltReport {
        replications: n,
        triples,
        correlations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub l: u32,
    pub triple: [u32; 3],
    /// `(2l+1) |E I^{2p} - (2p-1)!! Δ^p|`.
    pub known_cl: f64,
    /// `(2l+1) |E Î^{2p} - (2p-1)!! Δ^p|`.
    pub estimated_cl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSweep {
    pub p: u32,
    pub rows: Vec<RateRow>,
    /// Smallest and largest known-spectrum entry.
    pub bracket: (f64, f64),
}

/// Scaled deviations from the Gaussian leading term along `(l, l+1, l+2)`,
/// from the closed forms (exact at `p ≤ 2`).
///
/// The `κ₄` case formula is evaluated formally, so odd-sum triples on the
/// grid still produce entries.
pub fn rate_sweep(l_grid: &[u32], p: u32) -> Result<RateSweep> {
    if p == 0 {
        return Err(Error::InvalidArgument("moment order p must be positive".into()));
    }
    if l_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("l grid must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(l_grid.len());
    for &l in l_grid {
        let t = MultipoleTriple::new(l, l + 1, l + 2)?;
        let delta = delta_factor(t) as f64;
        let dfact: f64 = (1..2 * p).step_by(2).map(|k| k as f64).product();
        let leading = dfact * delta.powi(p as i32);
        let kappa = kappa4_formal(t).to_f64().unwrap_or(f64::NAN);
        let correction = (p * p.saturating_sub(1)) as f64 / 6.0 * dfact * kappa * delta.powi(p as i32 - 2);
        let known = leading + correction;
        let g = big_g_factor(&[(t, p)]).to_f64().unwrap_or(f64::NAN);
        let scale = (2 * l + 1) as f64;
        rows.push(RateRow {
            l,
            triple: t.ls(),
            known_cl: scale * (known - leading).abs(),
            estimated_cl: scale * (known * g - leading).abs(),
        });
    }
    let bracket = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
        (lo.min(r.known_cl), hi.max(r.known_cl))
    });
    Ok(RateSweep { p, rows, bracket })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: u32, b: u32, c: u32) -> MultipoleTriple {
        MultipoleTriple::new(a, b, c).unwrap()
    }

    #[test]
    fn jackknife_of_mean_matches_standard_error() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let (m, se) = jackknife_mean(&xs);
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 4.0;
        assert!((se - (var / 5.0).sqrt()).abs() < 1e-12);
        let generic = jackknife_se(&xs, |v| v.iter().sum::<f64>() / v.len() as f64);
        assert!((generic - se).abs() < 1e-12);
    }

    #[test]
    fn ks_pvalue_sanity() {
        assert!((ks_pvalue(1.36 / 100.0, 10_000) - 0.05).abs() < 0.005);
        assert!((ks_pvalue(1.63 / 100.0, 10_000) - 0.01).abs() < 0.002);
        assert_eq!(ks_pvalue(0.0, 100), 1.0);
        let d = ks_statistic(&[0.0], |x| if x < 0.0 { 0.0 } else { 0.5 });
        assert_eq!(d, 0.5);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::new(vec![t(1, 2, 3)], 1, 0);
        assert!(cfg.validate().is_err());
        cfg.replications = 10;
        assert_eq!(cfg.validate().unwrap(), 3);
        cfg.lmax = Some(2);
        assert!(matches!(cfg.validate(), Err(Error::OutOfRange { .. })));
        cfg.lmax = None;
        cfg.triples.push(t(1, 1, 1));
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn deterministic_and_worker_invariant() {
        let cfg = ExperimentConfig::new(vec![t(1, 2, 3), t(2, 2, 2)], 64, 99);
        let a = run_experiment(&cfg, Some(1)).unwrap();
        let b = run_experiment(&cfg, Some(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, run_experiment(&cfg, None).unwrap());
    }

    #[test]
    fn rate_sweep_first_order_vanishes() {
        let s = rate_sweep(&[2, 3, 4], 1).unwrap();
        assert!(s.rows.iter().all(|r| r.known_cl == 0.0));
        assert!(rate_sweep(&[3, 2], 2).is_err());
    }
}
