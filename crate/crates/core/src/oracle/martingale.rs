//! Monte Carlo over ring disorder with the inner disorder frozen.
//!
//! `gamma_k_mc` estimates `max_w E[Ext(w)]` over `w in P_k`, where `Ext(w)`
//! sums `exp(lambda sum_R lap - mu sum_R velocity)` over admissible
//! extensions. `conditional_next_y_mc` estimates `E[Y_{k+1} | Q_k disorder]`
//! by direct enumeration on each resampled table.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{ObstacleDistribution, QuenchedField};
use crate::lattice::{extension_freedom, ring_size, Cube};
use crate::rng::derive_seed;
use crate::stats::MeanEstimate;

use super::{
    extension_weight, y_statistic, AdmissibilityPlan, DiscreteProfile, ExtensionPlan,
    FrozenDisorder, OracleError,
};

/// Fewest ring resamples accepted by the estimators.
pub const MIN_RESAMPLES: usize = 100;

/// Source of independent ring disorders.
///
/// Resample `s` of a stream is the ceiling table of a fresh quenched field
/// seeded by `derive_seed(seed, stream, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingSampler {
    pub distribution: ObstacleDistribution,
    pub seed: u64,
    pub stream: u64,
}

impl RingSampler {
    pub fn new(
        distribution: ObstacleDistribution,
        seed: u64,
        stream: u64,
    ) -> Result<Self, OracleError> {
        distribution.validate()?;
        Ok(Self {
            distribution,
            seed,
            stream,
        })
    }

    /// Ring table of `Q_{radius+1} \ Q_radius`: rows in [`Cube::ring`] order,
    /// `cap + 1` heights per row, height 0 set to 0.
    pub fn ring_table(
        &self,
        radius: usize,
        dimension: usize,
        cap: i64,
        resample: u64,
    ) -> Result<Vec<i64>, OracleError> {
        let field = QuenchedField::new(
            derive_seed(self.seed, self.stream, resample),
            dimension,
            self.distribution,
        )?;
        let ring = Cube::new(radius, dimension)?.ring();
        let mut table = Vec::with_capacity(ring.len() * (cap as usize + 1));
        for site in &ring {
            table.push(0);
            table.extend((1..=cap).map(|h| field.fbar(site, h)));
        }
        Ok(table)
    }

    fn tables(
        &self,
        radius: usize,
        dimension: usize,
        cap: i64,
        resamples: usize,
    ) -> Result<Vec<Vec<i64>>, OracleError> {
        (0..resamples as u64)
            .into_par_iter()
            .map(|s| self.ring_table(radius, dimension, cap, s))
            .collect()
    }
}

fn check_inputs(lambda: f64, mu: f64, resamples: usize) -> Result<(), OracleError> {
    if !(lambda > 0.0 && mu > lambda && mu.is_finite()) {
        return Err(OracleError::InvalidParameter(format!(
            "need 0 < lambda < mu, got lambda = {lambda}, mu = {mu}"
        )));
    }
    if resamples < MIN_RESAMPLES {
        return Err(OracleError::InvalidParameter(format!(
            "need at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    Ok(())
}

/// Estimate of `gamma_k` with the profile sum `Y_k` it multiplies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    /// Largest per-profile mean.
    pub gamma: f64,
    /// Standard error of the maximising profile's mean.
    pub standard_error: f64,
    /// First maximiser in lexicographic order, values on `Q_{k+1}`.
    pub argmax: Vec<i64>,
    /// `E[Ext(w)]` for each `w in P_k`, lexicographic.
    pub per_profile: Vec<MeanEstimate>,
    /// `exp(lambda * flux(w) - mu * sum_{Q_k} velocity)` for each `w in P_k`.
    pub terms: Vec<f64>,
    /// `Y_k`, the sum of `terms`.
    pub y_current: f64,
}

impl GammaEstimate {
    /// `sum_w term(w) * E[Ext(w)]`, an unbiased estimate of
    /// `E[Y_{k+1} | Q_k disorder]`.
    pub fn decomposed_next_y(&self) -> f64 {
        self.terms
            .iter()
            .zip(&self.per_profile)
            .map(|(t, e)| t * e.mean)
            .sum()
    }
}

/// Monte Carlo `gamma_k` for frozen disorder on `Q_k`.
#[allow(clippy::too_many_arguments)]
pub fn gamma_k_mc(
    radius: usize,
    dimension: usize,
    cap: i64,
    inner: &FrozenDisorder,
    force: i64,
    lambda: f64,
    mu: f64,
    sampler: &RingSampler,
    resamples: usize,
    budget: u64,
) -> Result<GammaEstimate, OracleError> {
    check_inputs(lambda, mu, resamples)?;
    let plan = AdmissibilityPlan::new(radius, dimension, cap, inner, force, budget)?;
    let extension = ExtensionPlan::new(radius, dimension, cap, budget)?;
    let mut profiles = Vec::new();
    let mut terms = Vec::new();
    plan.for_each(inner, |v| {
        profiles.push(v.values.to_vec());
        terms.push(
            (lambda * plan.boundary_flux(v.values) as f64 - mu * v.velocity_sum as f64).exp(),
        );
    });
    let profiles: Vec<DiscreteProfile> = profiles
        .into_iter()
        .map(|values| DiscreteProfile::new(radius, dimension, cap, values))
        .collect::<Result<_, _>>()?;
    let tables = sampler.tables(radius, dimension, cap, resamples)?;
    let width = cap as usize + 1;

    // Ext(w) depends on w only through its footprint on the ring.
    let mut footprints: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut representative = Vec::new();
    let keys: Vec<usize> = profiles
        .iter()
        .map(|w| {
            let next = footprints.len();
            *footprints.entry(extension.footprint(w)).or_insert_with(|| {
                representative.push(w);
                next
            })
        })
        .collect();
    let estimates: Vec<MeanEstimate> = representative
        .par_iter()
        .map(|w| {
            let classes = extension.laplacian_classes(w)?;
            let ring_values = extension.ring_values(w);
            let mut fbars = vec![0i64; ring_values.len()];
            let samples: Vec<f64> = tables
                .iter()
                .map(|table| {
                    for (slot, (&h, fbar)) in ring_values.iter().zip(fbars.iter_mut()).enumerate() {
                        *fbar = table[slot * width + h as usize];
                    }
                    extension_weight(&classes, &fbars, force, lambda, mu)
                })
                .collect();
            Ok(MeanEstimate::from_slice(&samples))
        })
        .collect::<Result<_, OracleError>>()?;
    let per_profile: Vec<MeanEstimate> = keys.iter().map(|&k| estimates[k]).collect();
    let mut best = 0;
    for (i, e) in per_profile.iter().enumerate() {
        if e.mean > per_profile[best].mean {
            best = i;
        }
    }
    Ok(GammaEstimate {
        gamma: per_profile[best].mean,
        standard_error: per_profile[best].standard_error,
        argmax: profiles[best].values().to_vec(),
        per_profile,
        y_current: terms.iter().sum(),
        terms,
    })
}

/// Monte Carlo `E[Y_{k+1} | Q_k disorder]`: `Y_{k+1}` enumerated on each
/// resampled ring table.
#[allow(clippy::too_many_arguments)]
pub fn conditional_next_y_mc(
    radius: usize,
    dimension: usize,
    cap: i64,
    inner: &FrozenDisorder,
    force: i64,
    lambda: f64,
    mu: f64,
    sampler: &RingSampler,
    resamples: usize,
    budget: u64,
) -> Result<MeanEstimate, OracleError> {
    check_inputs(lambda, mu, resamples)?;
    inner.require(Cube::new(radius, dimension)?, cap)?;
    let samples: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|s| {
            let ring = sampler.ring_table(radius, dimension, cap, s)?;
            let disorder = inner.with_ring(radius, &ring)?;
            Ok(y_statistic(
                radius + 1,
                dimension,
                cap,
                &disorder,
                force,
                lambda,
                mu,
                budget,
            )?
            .boundary_form)
        })
        .collect::<Result<_, OracleError>>()?;
    Ok(MeanEstimate::from_slice(&samples))
}

/// One instance of `E[Y_{k+1} | Q_k disorder] <= gamma_k * Y_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupermartingaleCheck {
    pub gamma: f64,
    pub gamma_standard_error: f64,
    pub y_current: f64,
    pub next_y: MeanEstimate,
    /// `3 * sqrt(se_next^2 + (Y_k * se_gamma)^2)`.
    pub tolerance: f64,
    /// `gamma * Y_k + tolerance - E[Y_{k+1}]`; non-negative on success.
    pub margin: f64,
}

impl SupermartingaleCheck {
    pub fn passed(&self) -> bool {
        self.margin >= 0.0
    }
}

/// Estimates `gamma_k` (stream 0) and `E[Y_{k+1}]` (stream 1) from
/// independent ring resamples and compares them.
#[allow(clippy::too_many_arguments)]
pub fn supermartingale_check(
    radius: usize,
    dimension: usize,
    cap: i64,
    inner: &FrozenDisorder,
    force: i64,
    lambda: f64,
    mu: f64,
    distribution: ObstacleDistribution,
    seed: u64,
    resamples: usize,
    budget: u64,
) -> Result<SupermartingaleCheck, OracleError> {
    let gamma_sampler = RingSampler::new(distribution, seed, 0)?;
    let next_sampler = RingSampler::new(distribution, seed, 1)?;
    let gamma = gamma_k_mc(
        radius,
        dimension,
        cap,
        inner,
        force,
        lambda,
        mu,
        &gamma_sampler,
        resamples,
        budget,
    )?;
    let next = conditional_next_y_mc(
        radius,
        dimension,
        cap,
        inner,
        force,
        lambda,
        mu,
        &next_sampler,
        resamples,
        budget,
    )?;
    let tolerance = 3.0
        * (next.standard_error.powi(2) + (gamma.y_current * gamma.standard_error).powi(2)).sqrt();
    Ok(SupermartingaleCheck {
        gamma: gamma.gamma,
        gamma_standard_error: gamma.standard_error,
        y_current: gamma.y_current,
        next_y: next,
        tolerance,
        margin: gamma.gamma * gamma.y_current + tolerance - next.mean,
    })
}

/// `exp(-lambda c F) beta^c (A + 1)^xi (1 - exp(-(mu - lambda)))^{-c}`, the
/// counting bound on `gamma_k` summed over all ring velocities.
pub fn gamma_upper_bound(
    radius: usize,
    dimension: usize,
    cap: i64,
    force: f64,
    lambda: f64,
    mu: f64,
    beta: f64,
) -> Result<f64, OracleError> {
    if !(lambda > 0.0 && mu > lambda && mu.is_finite() && beta >= 1.0) {
        return Err(OracleError::InvalidParameter(format!(
            "need 0 < lambda < mu and beta >= 1, got lambda = {lambda}, mu = {mu}, beta = {beta}"
        )));
    }
    let c = ring_size(radius as u64, dimension as u32) as f64;
    let xi = extension_freedom(radius as u64, dimension as u32) as f64;
    let log = -lambda * c * force + c * beta.ln() + xi * ((cap + 1) as f64).ln()
        - c * (-(-(mu - lambda)).exp_m1()).ln();
    Ok(log.exp())
}

#[cfg(test)]
mod tests {
    use super::super::DEFAULT_BUDGET;
    use super::*;

    fn exp2() -> ObstacleDistribution {
        ObstacleDistribution::Exponential { rate: 2.0 }
    }

    #[test]
    fn zero_cap_gamma_is_deterministic() {
        let inner = FrozenDisorder::zero(2, 1, 0).unwrap();
        let sampler = RingSampler::new(exp2(), 3, 0).unwrap();
        let (lambda, mu, force) = (1.0, 1.5, 2);
        let g = gamma_k_mc(
            2,
            1,
            0,
            &inner,
            force,
            lambda,
            mu,
            &sampler,
            100,
            DEFAULT_BUDGET,
        )
        .unwrap();
        let expected = (-mu * 2.0 * force as f64).exp();
        assert!((g.gamma - expected).abs() < 1e-15);
        assert!(g.standard_error <= 1e-15 * g.gamma);
        assert!((g.y_current - (-mu * 3.0 * force as f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn ring_table_layout() {
        let sampler = RingSampler::new(exp2(), 9, 4).unwrap();
        let t = sampler.ring_table(1, 2, 2, 7).unwrap();
        assert_eq!(t.len(), 8 * 3);
        assert!(t.chunks(3).all(|row| row[0] == 0 && row[1] >= 0));
        assert_eq!(t, sampler.ring_table(1, 2, 2, 7).unwrap());
        assert_ne!(t, sampler.ring_table(1, 2, 2, 8).unwrap());
    }

    #[test]
    fn decomposition_matches_direct_sum_per_resample() {
        // with one fixed ring table, Y_{k+1} = sum_w term(w) Ext(w) exactly
        let field = QuenchedField::new(5, 1, exp2()).unwrap();
        let inner = FrozenDisorder::from_field(&field, 1, 2).unwrap();
        let sampler =
            RingSampler::new(ObstacleDistribution::Constant { strength: 0.6 }, 1, 0).unwrap();
        let g = gamma_k_mc(1, 1, 2, &inner, 2, 1.0, 1.7, &sampler, 100, DEFAULT_BUDGET).unwrap();
        let ring = sampler.ring_table(1, 1, 2, 0).unwrap();
        let direct = y_statistic(
            2,
            1,
            2,
            &inner.with_ring(1, &ring).unwrap(),
            2,
            1.0,
            1.7,
            DEFAULT_BUDGET,
        )
        .unwrap();
        let rel = (g.decomposed_next_y() - direct.boundary_form).abs() / direct.boundary_form;
        assert!(rel < 1e-12, "{rel}");
    }

    #[test]
    fn analytic_bound_dominates_zero_disorder_gamma() {
        let inner = FrozenDisorder::zero(1, 1, 3).unwrap();
        let sampler = RingSampler::new(ObstacleDistribution::Zero, 0, 0).unwrap();
        for force in 1..4 {
            let g = gamma_k_mc(
                1,
                1,
                3,
                &inner,
                force,
                1.0,
                2.0,
                &sampler,
                100,
                DEFAULT_BUDGET,
            )
            .unwrap();
            let bound = gamma_upper_bound(1, 1, 3, force as f64, 1.0, 2.0, 1.0).unwrap();
            assert!(
                g.gamma <= bound * (1.0 + 1e-12),
                "F = {force}: {} > {bound}",
                g.gamma
            );
        }
    }

    #[test]
    fn rejects_small_resample_counts() {
        let inner = FrozenDisorder::zero(1, 1, 1).unwrap();
        let sampler = RingSampler::new(exp2(), 0, 0).unwrap();
        assert!(gamma_k_mc(1, 1, 1, &inner, 1, 1.0, 2.0, &sampler, 99, DEFAULT_BUDGET).is_err());
    }
}
