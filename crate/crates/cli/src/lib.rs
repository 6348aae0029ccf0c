//! Command-line front end for the `bispec` library.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::PathBuf;

use bispec::bispectrum::{fourth_moment_exact, fourth_moment_exact_feasible, moment_expansion_exact, MultipoleTriple};
use bispec::diagrams::{moment_by_diagram_sum, MomentBreakdown, DEFAULT_NODE_BUDGET};
use bispec::fieldsim::sample_alms;
use bispec::montecarlo::{
    clt_check, rate_sweep, run_replications, summarize, ExperimentConfig, Mode, SpectrumModel,
    DEFAULT_Z_THRESHOLD,
};
use bispec::wigner::{clebsch_gordan, gaunt, wigner3j, wigner6j, SignedSqrtRational, ThreeJArgs};
use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INTERNAL: i32 = 70;

#[derive(Parser, Debug)]
#[command(name = "bispec", version, about = "Exact angular-momentum algebra and bispectrum moment checks")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Where to write the run manifest. Defaults to `<out>.manifest.json`,
    /// or a single JSON line on stderr when no output file is given.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Wigner 3j symbol.
    Wigner3j(ThreeJCmd),
    /// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}`.
    Wigner6j(SixJCmd),
    /// Clebsch-Gordan coefficient `<l1 m1 l2 m2 | l m>`.
    Clebsch(ClebschCmd),
    /// Gaunt integral of three real-normalized spherical harmonics.
    Gaunt(ThreeJCmd),
    /// Moment by exhaustive diagram summation.
    OracleMoment(OracleCmd),
    /// Closed-form moment prediction.
    Moments(MomentsCmd),
    /// Draw one Gaussian field's harmonic coefficients.
    Simulate(SimulateCmd),
    /// Monte Carlo moment experiment.
    Mc(McCmd),
    /// Scaled deviation from the Gaussian leading term along `(l, l+1, l+2)`.
    RateSweep(RateCmd),
    /// Normality and independence check of normalized bispectra.
    Clt(CltCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Exact,
    Decimal,
}

#[derive(Args, Debug)]
pub struct ThreeJCmd {
    #[arg(long, num_args = 3, required = true)]
    pub l: Vec<u32>,
    #[arg(long, num_args = 3, required = true, allow_negative_numbers = true)]
    pub m: Vec<i32>,
    #[arg(long, value_enum, default_value = "exact")]
    pub format: Format,
    #[arg(long, default_value_t = 17)]
    pub digits: usize,
}

#[derive(Args, Debug)]
pub struct SixJCmd {
    #[arg(long, num_args = 6, required = true)]
    pub j: Vec<u32>,
    #[arg(long, value_enum, default_value = "exact")]
    pub format: Format,
    #[arg(long, default_value_t = 17)]
    pub digits: usize,
}

#[derive(Args, Debug)]
pub struct ClebschCmd {
    /// `l1 l2 l`.
    #[arg(long, num_args = 3, required = true)]
    pub l: Vec<u32>,
    /// `m1 m2 m`.
    #[arg(long, num_args = 3, required = true, allow_negative_numbers = true)]
    pub m: Vec<i32>,
    #[arg(long, value_enum, default_value = "exact")]
    pub format: Format,
    #[arg(long, default_value_t = 17)]
    pub digits: usize,
}

#[derive(Args, Debug)]
pub struct OracleCmd {
    #[arg(long, num_args = 3, required = true)]
    pub triple: Vec<u32>,
    #[arg(long, default_value_t = 2)]
    pub power: u32,
    #[arg(long, default_value_t = 40)]
    pub digits: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    pub budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    KnownCl,
    EstimatedCl,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::KnownCl => Mode::KnownCl,
            ModeArg::EstimatedCl => Mode::EstimatedCl,
        }
    }
}

#[derive(Args, Debug)]
pub struct MomentsCmd {
    #[arg(long, num_args = 3, required = true)]
    pub triple: Vec<u32>,
    #[arg(long, default_value_t = 2)]
    pub power: u32,
    #[arg(long, value_enum, default_value = "known-cl")]
    pub mode: ModeArg,
    /// Also run the diagram oracle.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = 40)]
    pub digits: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpectrumArg {
    Flat,
    PowerLaw,
}

#[derive(Args, Debug, Clone)]
pub struct SpectrumOpts {
    #[arg(long, value_enum, default_value = "flat")]
    pub spectrum: SpectrumArg,
    /// Exponent for the power-law spectrum.
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
}

impl SpectrumOpts {
    fn model(&self) -> SpectrumModel {
        match self.spectrum {
            SpectrumArg::Flat => SpectrumModel::Flat,
            SpectrumArg::PowerLaw => SpectrumModel::PowerLaw { alpha: self.alpha },
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateCmd {
    #[arg(long)]
    pub lmax: u32,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub spectrum: SpectrumOpts,
}

#[derive(Args, Debug)]
pub struct McCmd {
    /// JSON list of triples, or an object with a `triples` field.
    #[arg(long)]
    pub triples: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "known-cl")]
    pub mode: ModeArg,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 2])]
    pub powers: Vec<u32>,
    #[arg(long)]
    pub lmax: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_Z_THRESHOLD)]
    pub threshold: f64,
    /// Optional CSV of per-replication values.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub spectrum: SpectrumOpts,
}

#[derive(Args, Debug)]
pub struct RateCmd {
    #[arg(long, default_value_t = 2)]
    pub lmin: u32,
    #[arg(long, default_value_t = 50)]
    pub lmax: u32,
    #[arg(long, default_value_t = 2)]
    pub power: u32,
}

#[derive(Args, Debug)]
pub struct CltCmd {
    /// JSON list of triples, or an object with a `triples` field.
    #[arg(long, conflicts_with = "triple")]
    pub triples: Option<PathBuf>,
    /// A single triple; repeat the flag for more.
    #[arg(long, num_args = 3, action = clap::ArgAction::Append)]
    pub triple: Vec<u32>,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "known-cl")]
    pub mode: ModeArg,
    #[arg(long)]
    pub lmax: Option<u32>,
    #[command(flatten)]
    pub spectrum: SpectrumOpts,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            CliError::Validation(m) | CliError::Internal(m) => m,
        };
        f.write_str(&msg.replace('\n', " "))
    }
}

impl From<bispec::Error> for CliError {
    fn from(e: bispec::Error) -> Self {
        match e {
            bispec::Error::Numerical(_) => CliError::Internal(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn internal(e: impl fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub started: String,
    pub finished: String,
    /// Hex SHA-256 of the primary output bytes.
    pub output_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolOutput {
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub triple: MultipoleTriple,
    pub p: u32,
    pub total: String,
    pub paired: String,
    pub connected: String,
    pub other: String,
    pub by_loop_order: BTreeMap<u32, String>,
    pub diagrams: usize,
    pub paired_diagrams: usize,
    pub connected_diagrams: usize,
}

impl OracleReport {
    fn new(triple: MultipoleTriple, p: u32, b: &MomentBreakdown, digits: usize) -> Self {
        let s = |x: &bispec::precision::Fixed| x.to_decimal_string(digits);
        OracleReport {
            triple,
            p,
            total: s(&b.total),
            paired: s(&b.paired),
            connected: s(&b.connected),
            other: s(&b.other),
            by_loop_order: b.by_loop_order.iter().map(|(k, v)| (*k, s(v))).collect(),
            diagrams: b.diagrams,
            paired_diagrams: b.paired_diagrams,
            connected_diagrams: b.connected_diagrams,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentsReport {
    pub triple: MultipoleTriple,
    pub p: u32,
    pub mode: Mode,
    /// `(2p-1)!! Δ^p` as an exact rational.
    pub leading: String,
    /// The `κ₄` correction as an exact rational.
    pub kappa4: String,
    /// `G` factor relating hatted and unhatted moments.
    pub g_factor: String,
    /// `leading + kappa4`, times `G` in estimated mode.
    pub prediction: String,
    pub prediction_decimal: f64,
    /// Exact closed form, available for `p ≤ 2`.
    pub exact: Option<String>,
    pub oracle: Option<String>,
    /// Scale of the neglected remainder, `(2l1+1)^{-2}`.
    pub remainder_scale: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum TriplesFile {
    List(Vec<MultipoleTriple>),
    Object { triples: Vec<MultipoleTriple> },
}

fn read_triples(path: &PathBuf) -> Result<Vec<MultipoleTriple>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let parsed: TriplesFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("bad triples file {}: {e}", path.display())))?;
    Ok(match parsed {
        TriplesFile::List(v) | TriplesFile::Object { triples: v } => v,
    })
}

fn triple_arg(v: &[u32]) -> Result<MultipoleTriple, CliError> {
    Ok(MultipoleTriple::sorted(v[0], v[1], v[2])?)
}

fn render(value: &SignedSqrtRational, format: Format, digits: usize) -> String {
    match format {
        Format::Exact => value.to_string(),
        Format::Decimal => value.to_decimal_string(digits),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(internal).map(|s| s + "\n")
}

/// Primary output text plus any seed used.
pub struct Outcome {
    pub output: String,
    pub seed: Option<u64>,
}

fn outcome(output: String) -> Outcome {
    Outcome { output, seed: None }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Wigner3j(c) => {
            let v = wigner3j(ThreeJArgs::new([c.l[0], c.l[1], c.l[2]], [c.m[0], c.m[1], c.m[2]]))?;
            Ok(outcome(render(&v, c.format, c.digits) + "\n"))
        }
        Command::Wigner6j(c) => {
            let j = &c.j;
            let v = wigner6j(j[0], j[1], j[2], j[3], j[4], j[5]);
            Ok(outcome(render(&v, c.format, c.digits) + "\n"))
        }
        Command::Clebsch(c) => {
            let v = clebsch_gordan(c.l[0], c.m[0], c.l[1], c.m[1], c.l[2], c.m[2])?;
            Ok(outcome(render(&v, c.format, c.digits) + "\n"))
        }
        Command::Gaunt(c) => {
            let g = gaunt(c.l[0], c.l[1], c.l[2], c.m[0], c.m[1], c.m[2])?;
            let text = match c.format {
                Format::Exact if g.algebraic.is_zero() => "0".to_string(),
                Format::Exact if g.inv_sqrt_4pi => format!("{}/sqrt(4*pi)", g.algebraic),
                Format::Exact => g.algebraic.to_string(),
                Format::Decimal => format!("{:.*e}", c.digits.saturating_sub(1), g.to_f64()),
            };
            Ok(outcome(text + "\n"))
        }
        Command::OracleMoment(c) => {
            let t = triple_arg(&c.triple)?;
            let run = || moment_by_diagram_sum(&[(t, c.power)], c.budget);
            let b = with_workers(cli.workers, run)??;
            to_json(&OracleReport::new(t, c.power, &b, c.digits)).map(outcome)
        }
        Command::Moments(c) => moments(cli, c).map(outcome),
        Command::Simulate(c) => {
            let spec = c.spectrum.model().build(c.lmax)?;
            let a = sample_alms(&spec, c.lmax, c.seed)?;
            Ok(Outcome {
                output: to_json(&a)?,
                seed: Some(c.seed),
            })
        }
        Command::Mc(c) => {
            let cfg = ExperimentConfig {
                triples: read_triples(&c.triples)?,
                spectrum: c.spectrum.model(),
                replications: c.n,
                seed: c.seed,
                mode: c.mode.into(),
                powers: c.powers.clone(),
                lmax: c.lmax,
                z_threshold: c.threshold,
            };
            let values = run_replications(&cfg, cli.workers)?;
            if let Some(path) = &c.csv {
                fs::write(path, replication_csv(&cfg.triples, &values)).map_err(internal)?;
            }
            let report = summarize(&cfg, &values)?;
            Ok(Outcome {
                output: to_json(&report)?,
                seed: Some(c.seed),
            })
        }
        Command::RateSweep(c) => {
            if c.lmin == 0 || c.lmin > c.lmax {
                return Err(CliError::Validation(format!("empty l range {}..={}", c.lmin, c.lmax)));
            }
            let grid: Vec<u32> = (c.lmin..=c.lmax).collect();
            to_json(&rate_sweep(&grid, c.power)?).map(outcome)
        }
        Command::Clt(c) => {
            let triples = match &c.triples {
                Some(path) => read_triples(path)?,
                None => c.triple.chunks(3).map(triple_arg).collect::<Result<_, _>>()?,
            };
            let cfg = ExperimentConfig {
                triples,
                spectrum: c.spectrum.model(),
                replications: c.n,
                seed: c.seed,
                mode: c.mode.into(),
                powers: vec![1],
                lmax: c.lmax,
                z_threshold: DEFAULT_Z_THRESHOLD,
            };
            Ok(Outcome {
                output: to_json(&clt_check(&cfg, cli.workers)?)?,
                seed: Some(c.seed),
            })
        }
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(f()),
        Some(n) => rayon_pool(n).map(|p| p.install(f)),
    }
}

fn rayon_pool(n: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .map_err(internal)
}

fn moments(cli: &Cli, c: &MomentsCmd) -> Result<String, CliError> {
    let t = triple_arg(&c.triple)?;
    if c.power == 0 {
        return Err(CliError::Validation("power must be positive".into()));
    }
    let mode: Mode = c.mode.into();
    let e = moment_expansion_exact(t, c.power);
    let prediction = match mode {
        Mode::KnownCl => e.prediction(),
        Mode::EstimatedCl => e.feasible_prediction(),
    };
    let exact = match (c.power, mode) {
        (1, Mode::KnownCl) => Some(e.leading.clone()),
        (1, Mode::EstimatedCl) => Some(&e.leading * &e.g_correction),
        (2, Mode::KnownCl) => Some(fourth_moment_exact(t)),
        (2, Mode::EstimatedCl) => Some(fourth_moment_exact_feasible(t)),
        _ => None,
    };
    let oracle = if c.oracle {
        let run = || moment_by_diagram_sum(&[(t, c.power)], DEFAULT_NODE_BUDGET);
        let b = with_workers(cli.workers, run)??;
        Some(match mode {
            Mode::KnownCl => b.total.to_decimal_string(c.digits),
            Mode::EstimatedCl => {
                let g = bispec::precision::Fixed::from_rational(&e.g_correction);
                (&b.total * &g).to_decimal_string(c.digits)
            }
        })
    } else {
        None
    };
    let report = MomentsReport {
        triple: t,
        p: c.power,
        mode,
        leading: e.leading.to_string(),
        kappa4: e.kappa4_correction.to_string(),
        g_factor: e.g_correction.to_string(),
        prediction_decimal: num_traits_to_f64(&prediction),
        prediction: prediction.to_string(),
        exact: exact.map(|r| r.to_string()),
        oracle,
        remainder_scale: e.order_bound.to_string(),
    };
    to_json(&report)
}

fn num_traits_to_f64(r: &num_rational::BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// One row per replication: index, then one column per triple.
pub fn replication_csv(triples: &[MultipoleTriple], values: &[Vec<f64>]) -> String {
    let mut out = String::from("replication");
    for t in triples {
        let [a, b, c] = t.ls();
        out.push_str(&format!(",I_{a}_{b}_{c}"));
    }
    out.push('\n');
    for (r, row) in values.iter().enumerate() {
        out.push_str(&r.to_string());
        for v in row {
            out.push_str(&format!(",{v:e}"));
        }
        out.push('\n');
    }
    out
}

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Wigner3j(_) => "wigner3j",
        Command::Wigner6j(_) => "wigner6j",
        Command::Clebsch(_) => "clebsch",
        Command::Gaunt(_) => "gaunt",
        Command::OracleMoment(_) => "oracle-moment",
        Command::Moments(_) => "moments",
        Command::Simulate(_) => "simulate",
        Command::Mc(_) => "mc",
        Command::RateSweep(_) => "rate-sweep",
        Command::Clt(_) => "clt",
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Parses `argv`, runs the command, writes outputs and the manifest, and
/// returns the process exit code.
pub fn dispatch<I, T>(argv: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                ErrorKind::ValueValidation | ErrorKind::InvalidValue => {
                    let text = e.to_string();
                    let line = text.lines().next().unwrap_or("invalid argument");
                    let _ = writeln!(stderr, "{line}");
                    EXIT_VALIDATION
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let started = now();
    let result = execute(&cli).and_then(|o| {
        match &cli.out {
            Some(path) => fs::write(path, &o.output).map_err(internal)?,
            None => stdout.write_all(o.output.as_bytes()).map_err(internal)?,
        }
        Ok(o)
    });
    let o = match result {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: subcommand_name(&cli.command).to_string(),
        argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        seed: o.seed,
        started,
        finished: now(),
        output_sha256: sha256_hex(o.output.as_bytes()),
    };
    let target = cli.manifest.clone().or_else(|| {
        cli.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    let written = match target {
        Some(path) => to_json(&manifest).and_then(|j| fs::write(path, j).map_err(internal)),
        None => serde_json::to_string(&manifest)
            .map_err(internal)
            .and_then(|j| writeln!(stderr, "{j}").map_err(internal)),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
