//! Exact Wigner 3j and 6j symbols, Clebsch-Gordan coefficients and Gaunt
//! integrals.

mod cache;
pub mod factorial;
mod sixj;
mod ssr;
mod table;
mod threej;

pub use cache::{cache_len, clear_cache, set_cache_capacity, DEFAULT_CACHE_CAPACITY};
pub use sixj::{sixj_all_equal, sixj_bound_squared, sixj_same_rows, sixj_stretched, wigner6j};
pub use ssr::{SignedSqrtRational, SqrtSum};
pub use table::ThreeJTable;
pub use threej::{
    cg_chain_coefficient, clebsch_gordan, gaunt, orthogonality_sum, triangle, wigner3j,
    wigner3j_uncached, GauntValue, ThreeJArgs,
};
