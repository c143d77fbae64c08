//! The verification suite behind `qew verify`.
//!
//! Each check reports a margin that is non-negative exactly when it passes.
//! A check whose enumeration would exceed the budget is skipped, not failed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::disorder::{ObstacleDistribution, QuenchedField};
use crate::lattice::{boundary_flux, compositions, laplacian_sum, Cube, Domain, HeightField};
use crate::rng::derive_seed;

use super::{
    enumerate_admissible, extension_count_bound, gamma_k_mc, gamma_upper_bound,
    supermartingale_check, y_statistic, ExtensionPlan, FrozenDisorder, OracleError, RingSampler,
    DEFAULT_BUDGET, Y_FORM_TOLERANCE,
};

// Streams of the suite seed.
const INNER_STREAM: u64 = 2;
const RING_STREAM: u64 = 3;
const EXTENSION_STREAM: u64 = 4;
const FIELD_STREAM: u64 = 5;

fn default_dimension() -> usize {
    1
}
fn default_radii() -> Vec<usize> {
    vec![1, 2]
}
fn default_caps() -> Vec<i64> {
    vec![1, 2, 3]
}
fn default_forces() -> Vec<i64> {
    vec![1, 2, 3]
}
fn default_lambda() -> f64 {
    1.0
}
fn default_mu() -> f64 {
    2.0
}
fn default_distribution() -> ObstacleDistribution {
    ObstacleDistribution::Exponential { rate: 2.0 }
}
fn default_disorders() -> usize {
    2
}
fn default_resamples() -> usize {
    200
}
fn default_divergence_fields() -> usize {
    100
}
fn default_divergence_max() -> usize {
    3
}
fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

/// Parameters of the suite. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    /// Values of `k`.
    #[serde(default = "default_radii")]
    pub radii: Vec<usize>,
    /// Values of `A`.
    #[serde(default = "default_caps")]
    pub caps: Vec<i64>,
    #[serde(default = "default_forces")]
    pub forces: Vec<i64>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_distribution")]
    pub distribution: ObstacleDistribution,
    #[serde(default)]
    pub seed: u64,
    /// Frozen inner disorders per `(k, A, F)`.
    #[serde(default = "default_disorders")]
    pub disorders: usize,
    /// Ring resamples per Monte Carlo estimate.
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    /// Random integer fields per `(d, k)` in the divergence check.
    #[serde(default = "default_divergence_fields")]
    pub divergence_fields: usize,
    /// Largest `d` and `k` in the divergence check.
    #[serde(default = "default_divergence_max")]
    pub divergence_max: usize,
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Drops one neighbour from the Laplacian in the divergence check. Used
    /// to confirm that the suite can fail.
    #[serde(default)]
    pub corrupt_laplacian: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            dimension: default_dimension(),
            radii: default_radii(),
            caps: default_caps(),
            forces: default_forces(),
            lambda: default_lambda(),
            mu: default_mu(),
            distribution: default_distribution(),
            seed: 0,
            disorders: default_disorders(),
            resamples: default_resamples(),
            divergence_fields: default_divergence_fields(),
            divergence_max: default_divergence_max(),
            budget: default_budget(),
            corrupt_laplacian: false,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        let bad = |msg: String| Err(OracleError::InvalidParameter(msg));
        if self.dimension == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.radii.is_empty() || self.radii.contains(&0) {
            return bad("radii must be a non-empty list of values >= 1".into());
        }
        if self.caps.is_empty() || self.caps.iter().any(|&a| a < 0) {
            return bad("caps must be a non-empty list of values >= 0".into());
        }
        if self.forces.is_empty() || self.forces.iter().any(|&f| f < 0) {
            return bad("forces must be a non-empty list of values >= 0".into());
        }
        if !(self.lambda > 0.0 && self.mu > self.lambda && self.mu.is_finite()) {
            return bad(format!(
                "need 0 < lambda < mu, got lambda = {}, mu = {}",
                self.lambda, self.mu
            ));
        }
        if self.resamples < super::MIN_RESAMPLES {
            return bad(format!(
                "resamples must be at least {}",
                super::MIN_RESAMPLES
            ));
        }
        if self.divergence_max == 0 {
            return bad("divergence_max must be at least 1".into());
        }
        self.distribution.validate()?;
        self.distribution.beta(self.lambda)?;
        Ok(())
    }

    fn inner_disorder(
        &self,
        radius: usize,
        cap: i64,
        index: usize,
    ) -> Result<FrozenDisorder, OracleError> {
        let field = QuenchedField::new(
            derive_seed(self.seed, INNER_STREAM, index as u64),
            self.dimension,
            self.distribution,
        )?;
        FrozenDisorder::from_field(&field, radius, cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub status: CheckStatus,
    /// Smallest margin over all instances; absent when nothing ran.
    pub margin: Option<f64>,
    pub instances: u64,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Pass,
            margin: None,
            instances: 0,
            detail: String::new(),
        }
    }

    fn record(&mut self, margin: f64, context: impl FnOnce() -> String) {
        self.instances += 1;
        if self.margin.is_none_or(|m| margin < m) {
            self.margin = Some(margin);
            if margin < 0.0 {
                self.detail = context();
            }
        }
        if !(margin >= 0.0) {
            self.status = CheckStatus::Fail;
        }
    }

    fn skip(mut self, reason: String) -> Self {
        self.status = CheckStatus::Skipped;
        self.detail = reason;
        self
    }

    fn finish(self, result: Result<(), OracleError>) -> Result<Self, OracleError> {
        match result {
            Ok(()) => Ok(self),
            Err(e @ OracleError::BudgetExceeded { .. }) => Ok(self.skip(e.to_string())),
            Err(e) => Err(e),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub passed: bool,
    pub checks: Vec<CheckReport>,
}

/// `sum_{i in Q_k}` of a Laplacian that skips the last neighbour.
fn corrupted_laplacian_sum(field: &HeightField<i64>, radius: usize) -> Result<i64, OracleError> {
    let inner = Cube::new(radius, field.domain().dimension())?;
    let mut total = 0;
    for site in inner.sites() {
        let wi = field.get(&site)?;
        let mut nb = site.clone();
        for axis in 0..site.len() {
            for step in [-1i64, 1] {
                if axis + 1 == site.len() && step == 1 {
                    continue;
                }
                nb[axis] = site[axis] + step;
                total += field.get(&nb)? - wi;
            }
            nb[axis] = site[axis];
        }
    }
    Ok(total)
}

/// `boundary_flux == sum laplacian` on random integer fields, `d, k <= divergence_max`.
pub fn check_divergence(config: &SuiteConfig) -> Result<CheckReport, OracleError> {
    let mut report = CheckReport::new("divergence_identity");
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, FIELD_STREAM, 0));
    for dimension in 1..=config.divergence_max {
        for radius in 1..=config.divergence_max {
            let support = Cube::new(radius + 1, dimension)?;
            for _ in 0..config.divergence_fields {
                let values = (0..support.len())
                    .map(|_| rng.gen_range(-1000..=1000))
                    .collect();
                let field = HeightField::new(Domain::Cube(support), values)?;
                let flux = boundary_flux(&field, radius)?;
                let sum = if config.corrupt_laplacian {
                    corrupted_laplacian_sum(&field, radius)?
                } else {
                    laplacian_sum(&field, radius)?
                };
                let error = (flux - sum).abs();
                report.record(0.0 - error as f64, || {
                    format!("d = {dimension}, k = {radius}: flux {flux}, sum {sum}")
                });
            }
        }
    }
    Ok(report)
}

/// Boundary and Laplacian forms of `Y_k` agree to relative `1e-12`.
pub fn check_y_identity(config: &SuiteConfig) -> Result<CheckReport, OracleError> {
    let mut report = CheckReport::new("y_identity");
    let result = (|| {
        for &radius in &config.radii {
            for &cap in &config.caps {
                for &force in &config.forces {
                    for index in 0..config.disorders {
                        let disorder = config.inner_disorder(radius, cap, index)?;
                        let outcome = y_statistic(
                            radius,
                            config.dimension,
                            cap,
                            &disorder,
                            force,
                            config.lambda,
                            config.mu,
                            config.budget,
                        );
                        let gap = match outcome {
                            Ok(y) => y.relative_gap(),
                            Err(OracleError::IdentityMismatch {
                                boundary,
                                laplacian,
                            }) => {
                                (boundary - laplacian).abs() / boundary.abs().max(laplacian.abs())
                            }
                            Err(e) => return Err(e),
                        };
                        report.record(Y_FORM_TOLERANCE - gap, || {
                            format!("k = {radius}, A = {cap}, F = {force}, disorder {index}: relative gap {gap:e}")
                        });
                    }
                }
            }
        }
        Ok(())
    })();
    report.finish(result)
}

fn brute_force_compositions(parts: u64, total: u64) -> u64 {
    if parts == 1 {
        return 1;
    }
    (0..=total)
        .map(|first| brute_force_compositions(parts - 1, total - first))
        .sum()
}

fn factorial(n: u64) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `compositions` against brute force for `m <= 5, j <= 10`, and the chain
/// `N_{m,j} <= (j+m-1)^{m-1}/(m-1)! <= 2^{m-2}/(m-1)! (j^{m-1} + (m-1)^{m-1})`
/// for `m in 2..=6, j in 0..=20`.
pub fn check_compositions(_config: &SuiteConfig) -> Result<CheckReport, OracleError> {
    let mut report = CheckReport::new("compositions");
    for m in 1..=5u64 {
        for j in 0..=10u64 {
            let exact = compositions(m, j)?;
            let brute = brute_force_compositions(m, j) as u128;
            report.record(0.0 - ((exact as f64) - (brute as f64)).abs(), || {
                format!("N_({m},{j}) = {exact}, brute force {brute}")
            });
        }
    }
    for m in 2..=6u64 {
        for j in 0..=20u64 {
            let n = compositions(m, j)? as f64;
            let middle = ((j + m - 1) as f64).powi(m as i32 - 1) / factorial(m - 1);
            let outer = 2f64.powi(m as i32 - 2) / factorial(m - 1)
                * ((j as f64).powi(m as i32 - 1) + ((m - 1) as f64).powi(m as i32 - 1));
            let margin = (middle - n).min(outer - middle) / outer;
            report.record(margin, || {
                format!("m = {m}, j = {j}: {n} / {middle} / {outer}")
            });
        }
    }
    Ok(report)
}

/// `E[Y_{k+1} | Q_k disorder] <= gamma_k Y_k` within three standard errors.
pub fn check_supermartingale(config: &SuiteConfig) -> Result<CheckReport, OracleError> {
    let mut report = CheckReport::new("supermartingale");
    let result = (|| {
        for &radius in &config.radii {
            for &cap in &config.caps {
                for &force in &config.forces {
                    for index in 0..config.disorders {
                        let inner = config.inner_disorder(radius, cap, index)?;
                        let check = supermartingale_check(
                            radius,
                            config.dimension,
                            cap,
                            &inner,
                            force,
                            config.lambda,
                            config.mu,
                            config.distribution,
                            derive_seed(config.seed, RING_STREAM, index as u64),
                            config.resamples,
                            config.budget,
                        )?;
                        // relative to gamma * Y_k so instances are comparable
                        let scale = check.gamma * check.y_current;
                        report.record(check.margin / scale, || {
                            format!(
                                "k = {radius}, A = {cap}, F = {force}, disorder {index}: E[Y'] = {:e} > {:e} + {:e}",
                                check.next_y.mean, scale, check.tolerance
                            )
                        });
                    }
                }
            }
        }
        Ok(())
    })();
    report.finish(result)
}

/// Monte Carlo `gamma_k` against the counting bound, within three standard
/// errors.
pub fn check_gamma_bound(config: &SuiteConfig) -> Result<CheckReport, OracleError> {
    let mut report = CheckReport::new("gamma_bound");
    let beta = config.distribution.beta(config.lambda)?;
    let result = (|| {
        for &radius in &config.radii {
            for &cap in &config.caps {
                for &force in &config.forces {
                    let bound = gamma_upper_bound(
                        radius,
                        config.dimension,
                        cap,
                        force as f64,
                        config.lambda,
                        config.mu,
                        beta,
                    )?;
                    for index in 0..config.disorders {
                        let inner = config.inner_disorder(radius, cap, index)?;
                        let sampler = RingSampler::new(
                            config.distribution,
                            derive_seed(config.seed, RING_STREAM, index as u64),
                            0,
                        )?;
                        let g = gamma_k_mc(
                            radius,
                            config.dimension,
                            cap,
                            &inner,
                            force,
                            config.lambda,
                            config.mu,
                            &sampler,
                            config.resamples,
                            config.budget,
                        )?;
                        let margin = (bound + 3.0 * g.standard_error - g.gamma) / bound;
                        report.record(margin, || {
                            format!("k = {radius}, A = {cap}, F = {force}, disorder {index}: gamma {:e} > {bound:e}", g.gamma)
                        });
                    }
                }
            }
        }
        Ok(())
    })();
    report.finish(result)
}

/// Exhaustive `M_{j,k,d} <= N_{c,j} (A+1)^xi` over every `w in P_k` and
/// every attainable `j`.
pub fn check_extension_bound(config: &SuiteConfig) -> Result<CheckReport, OracleError> {
    let mut report = CheckReport::new("extension_bound");
    let result = (|| {
        for &radius in &config.radii {
            for &cap in &config.caps {
                let plan = ExtensionPlan::new(radius, config.dimension, cap, config.budget)?;
                for &force in &config.forces {
                    for index in 0..config.disorders {
                        let field = QuenchedField::new(
                            derive_seed(config.seed, EXTENSION_STREAM, index as u64),
                            config.dimension,
                            config.distribution,
                        )?;
                        let disorder = FrozenDisorder::from_field(&field, radius + 1, cap)?;
                        let profiles = enumerate_admissible(
                            radius,
                            config.dimension,
                            cap,
                            &disorder,
                            force,
                            config.budget,
                        )?;
                        for w in &profiles {
                            for (j, count) in plan.velocity_histogram(w, &disorder, force)? {
                                let bound =
                                    extension_count_bound(radius, config.dimension, cap, j as u64)?;
                                let margin = bound as f64 - count as f64;
                                report.record(margin, || {
                                    format!("k = {radius}, A = {cap}, F = {force}, j = {j}: {count} > {bound}")
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    })();
    report.finish(result)
}

/// Runs every check in a fixed order.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport, OracleError> {
    config.validate()?;
    let checks = vec![
        check_divergence(config)?,
        check_y_identity(config)?,
        check_compositions(config)?,
        check_supermartingale(config)?,
        check_gamma_bound(config)?,
        check_extension_bound(config)?,
    ];
    Ok(SuiteReport {
        passed: checks.iter().all(CheckReport::passed),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteConfig {
        SuiteConfig {
            radii: vec![1],
            caps: vec![1, 2],
            forces: vec![1, 2],
            disorders: 1,
            resamples: 100,
            divergence_fields: 5,
            divergence_max: 2,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn defaults_parse_from_empty_object() {
        let c: SuiteConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, SuiteConfig::default());
        assert_eq!(c.radii, vec![1, 2]);
        assert_eq!(c.caps, vec![1, 2, 3]);
        assert!(!c.corrupt_laplacian);
        assert!(serde_json::from_str::<SuiteConfig>(r#"{"radius": 1}"#).is_err());
    }

    #[test]
    fn small_suite_passes() {
        let report = run_suite(&small()).unwrap();
        for c in &report.checks {
            assert_eq!(c.status, CheckStatus::Pass, "{c:?}");
            assert!(c.instances > 0);
        }
        assert!(report.passed);
    }

    #[test]
    fn corrupted_laplacian_fails() {
        let config = SuiteConfig {
            corrupt_laplacian: true,
            ..small()
        };
        let report = check_divergence(&config).unwrap();
        assert_eq!(report.status, CheckStatus::Fail);
        assert!(report.margin.unwrap() < 0.0);
    }

    #[test]
    fn budget_overflow_skips() {
        let config = SuiteConfig {
            budget: 10,
            ..small()
        };
        let report = check_y_identity(&config).unwrap();
        assert_eq!(report.status, CheckStatus::Skipped);
        assert!(report.passed());
    }

    #[test]
    fn invalid_config_rejected() {
        let config = SuiteConfig { mu: 0.5, ..small() };
        assert!(run_suite(&config).is_err());
    }
}
