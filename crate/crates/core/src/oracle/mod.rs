//! Exhaustive checks of the discrete structures behind the velocity bound.
//!
//! Profiles are integer functions on `Q_{k+1}` with values in `0..=A`. A
//! profile is admissible when `laplacian(w)_i - fbar_i(w_i) + F >= 0` on
//! `Q_k`. Everything here is integer arithmetic except the exponential
//! weights and the Monte Carlo expectations over ring disorder.

mod enumerate;
mod extension;
mod martingale;
mod profile;
mod rounding;
mod suite;

use thiserror::Error;

use crate::disorder::DisorderError;
use crate::lattice::LatticeError;

pub use enumerate::{
    count_admissible, enumerate_admissible, min_avg_velocity, y_statistic, AdmissibilityPlan,
    AverageVelocity, MinimalVelocity, Visit, YStatistic, Y_FORM_TOLERANCE,
};
pub use extension::{
    count_extensions_by_velocity, extension_count_bound, extension_weight, ExtensionPlan,
};
pub use martingale::{
    conditional_next_y_mc, gamma_k_mc, gamma_upper_bound, supermartingale_check, GammaEstimate,
    RingSampler, SupermartingaleCheck, MIN_RESAMPLES,
};
pub use profile::{is_admissible, DiscreteProfile, FrozenDisorder};
pub use rounding::{round_and_check, snapshot_around, RoundedProfile, Snapshot};
pub use suite::{
    check_compositions, check_divergence, check_extension_bound, check_gamma_bound,
    check_supermartingale, check_y_identity, run_suite, CheckReport, CheckStatus, SuiteConfig,
    SuiteReport,
};

/// Largest number of candidates any enumeration may scan.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration needs {candidates} candidates, budget is {budget}")]
    BudgetExceeded { candidates: f64, budget: u64 },
    #[error("disorder table covers Q_{radius} up to height {cap}, need Q_{needed_radius} up to {needed_cap}")]
    DisorderTooSmall {
        needed_radius: usize,
        needed_cap: i64,
        radius: usize,
        cap: i64,
    },
    #[error("{0}")]
    InvalidParameter(String),
    #[error("height out of range: {0}")]
    OutOfRange(String),
    #[error("boundary form {boundary} and laplacian form {laplacian} of Y disagree")]
    IdentityMismatch { boundary: f64, laplacian: f64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Disorder(#[from] DisorderError),
}

/// Errors when `(cap + 1)^sites` exceeds `budget`.
pub fn check_budget(cap: i64, sites: u64, budget: u64) -> Result<(), OracleError> {
    let base = cap.max(0) as u128 + 1;
    let mut total: u128 = 1;
    for _ in 0..sites {
        total = total.saturating_mul(base);
        if total > budget as u128 {
            return Err(OracleError::BudgetExceeded {
                candidates: (base as f64).powf(sites as f64),
                budget,
            });
        }
    }
    Ok(())
}
