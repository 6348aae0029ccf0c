use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An angular-momentum projection lies outside `-l..=l`.
    #[error("domain error: |m{index}| = {m} exceeds l{index} = {l}")]
    Domain { index: usize, l: u32, m: i32 },

    #[error("coupling path is triangle-infeasible at step {step}: ({a}, {b}, {c})")]
    InfeasibleCoupling { step: usize, a: u32, b: u32, c: u32 },

    #[error("index set has an odd number of slots ({0}); no perfect matching exists")]
    OddSlotCount(usize),

    #[error("m-lattice budget of {budget} nodes exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("multipole l = {l} exceeds the field's lmax = {lmax}")]
    OutOfRange { l: u32, lmax: u32 },

    #[error("power spectrum must be strictly positive, got C_{l} = {value}")]
    NonPositiveSpectrum { l: u32, value: f64 },

    #[error("missing power-spectrum entry for l = {0}")]
    MissingSpectrum(u32),

    #[error("missing lower-order moment E I^{0}")]
    MissingMoment(u32),

    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
