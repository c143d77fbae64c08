//! Depth-first enumeration of admissible profiles.
//!
//! Sites of `Q_{k+1}` are assigned in row-major order with values ascending,
//! which yields profiles in lexicographic order. An interior site `i` has all
//! of its neighbours assigned once `i + stride_0` is assigned (axis 0 has the
//! largest stride), so its admissibility is checked at that point and failing
//! branches are cut immediately.

use serde::{Deserialize, Serialize};

use crate::lattice::Cube;

use super::{check_budget, DiscreteProfile, FrozenDisorder, OracleError};

/// Per-site data of one admissible profile.
pub struct Visit<'a> {
    /// Profile on `Q_{k+1}`, row-major.
    pub values: &'a [i64],
    /// Laplacian at each site of `Q_k`, in row-major order of `Q_k`.
    pub laplacians: &'a [i64],
    /// `fbar_i(w_i)` at each site of `Q_k`.
    pub fbars: &'a [i64],
    /// `sum_{i in Q_k} (laplacian_i - fbar_i + F)`.
    pub velocity_sum: i64,
}

impl Visit<'_> {
    pub fn laplacian_sum(&self) -> i64 {
        self.laplacians.iter().sum()
    }

    pub fn fbar_sum(&self) -> i64 {
        self.fbars.iter().sum()
    }
}

/// Precomputed geometry for enumerating `P_k`.
#[derive(Debug, Clone)]
pub struct AdmissibilityPlan {
    radius: usize,
    dimension: usize,
    cap: i64,
    force: i64,
    support: Cube,
    inner: Cube,
    /// Interior slot whose check becomes possible after assigning each index.
    trigger: Vec<Option<usize>>,
    /// Support index of each interior slot.
    interior: Vec<usize>,
    /// `2d` support indices per interior slot.
    neighbors: Vec<usize>,
    /// Disorder-table row per interior slot.
    rows: Vec<usize>,
    /// `(inside, outside)` support-index pairs across the boundary of `Q_k`.
    boundary_pairs: Vec<(usize, usize)>,
}

impl AdmissibilityPlan {
    pub fn new(
        radius: usize,
        dimension: usize,
        cap: i64,
        disorder: &FrozenDisorder,
        force: i64,
        budget: u64,
    ) -> Result<Self, OracleError> {
        if cap < 0 {
            return Err(OracleError::InvalidParameter(format!(
                "height cap {cap} is negative"
            )));
        }
        let inner = Cube::new(radius, dimension)?;
        let support = inner.grow();
        disorder.require(inner, cap)?;
        check_budget(cap, support.len() as u64, budget)?;
        let stride = support.stride(0);
        let mut trigger = vec![None; support.len()];
        let mut interior = Vec::with_capacity(inner.len());
        let mut neighbors = Vec::with_capacity(inner.len() * 2 * dimension);
        let mut rows = Vec::with_capacity(inner.len());
        let mut boundary_pairs = Vec::new();
        for site in inner.sites() {
            let index = support.index_of(&site).expect("Q_k lies in Q_{k+1}");
            trigger[index + stride] = Some(interior.len());
            interior.push(index);
            rows.push(disorder.row(&site).expect("coverage checked"));
            let mut nb = site.clone();
            for axis in 0..dimension {
                for step in [-1i64, 1] {
                    nb[axis] = site[axis] + step;
                    let j = support
                        .index_of(&nb)
                        .expect("neighbours of Q_k lie in Q_{k+1}");
                    neighbors.push(j);
                    if !inner.contains(&nb) {
                        boundary_pairs.push((index, j));
                    }
                }
                nb[axis] = site[axis];
            }
        }
        Ok(Self {
            radius,
            dimension,
            cap,
            force,
            support,
            inner,
            trigger,
            interior,
            neighbors,
            rows,
            boundary_pairs,
        })
    }

    pub fn support(&self) -> Cube {
        self.support
    }

    pub fn inner(&self) -> Cube {
        self.inner
    }

    /// `sum (w_r - w_i)` over the boundary pairs of `Q_k`.
    pub fn boundary_flux(&self, values: &[i64]) -> i64 {
        self.boundary_pairs
            .iter()
            .map(|&(i, r)| values[r] - values[i])
            .sum()
    }

    /// Calls `visit` for every admissible profile, in lexicographic order.
    pub fn for_each(&self, disorder: &FrozenDisorder, mut visit: impl FnMut(&Visit<'_>)) {
        let mut values = vec![0i64; self.support.len()];
        let mut laplacians = vec![0i64; self.interior.len()];
        let mut fbars = vec![0i64; self.interior.len()];
        self.descend(
            disorder,
            0,
            0,
            &mut values,
            &mut laplacians,
            &mut fbars,
            &mut visit,
        );
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        disorder: &FrozenDisorder,
        position: usize,
        velocity_sum: i64,
        values: &mut [i64],
        laplacians: &mut [i64],
        fbars: &mut [i64],
        visit: &mut impl FnMut(&Visit<'_>),
    ) {
        if position == values.len() {
            visit(&Visit {
                values,
                laplacians,
                fbars,
                velocity_sum,
            });
            return;
        }
        let degree = 2 * self.dimension;
        for v in 0..=self.cap {
            values[position] = v;
            let mut sum = velocity_sum;
            if let Some(slot) = self.trigger[position] {
                let wi = values[self.interior[slot]];
                let lap: i64 = self.neighbors[slot * degree..(slot + 1) * degree]
                    .iter()
                    .map(|&j| values[j] - wi)
                    .sum();
                let fbar = disorder.at_row(self.rows[slot], wi);
                let velocity = lap - fbar + self.force;
                if velocity < 0 {
                    continue;
                }
                laplacians[slot] = lap;
                fbars[slot] = fbar;
                sum += velocity;
            }
            self.descend(
                disorder,
                position + 1,
                sum,
                values,
                laplacians,
                fbars,
                visit,
            );
        }
    }

    fn profile(&self, values: &[i64]) -> DiscreteProfile {
        DiscreteProfile::new(self.radius, self.dimension, self.cap, values.to_vec())
            .expect("values within cap")
    }
}

/// All profiles in `P_k`, lexicographic.
pub fn enumerate_admissible(
    radius: usize,
    dimension: usize,
    cap: i64,
    disorder: &FrozenDisorder,
    force: i64,
    budget: u64,
) -> Result<Vec<DiscreteProfile>, OracleError> {
    let plan = AdmissibilityPlan::new(radius, dimension, cap, disorder, force, budget)?;
    let mut out = Vec::new();
    plan.for_each(disorder, |v| out.push(plan.profile(v.values)));
    Ok(out)
}

/// `|P_k|`.
pub fn count_admissible(
    radius: usize,
    dimension: usize,
    cap: i64,
    disorder: &FrozenDisorder,
    force: i64,
    budget: u64,
) -> Result<u64, OracleError> {
    let plan = AdmissibilityPlan::new(radius, dimension, cap, disorder, force, budget)?;
    let mut count = 0u64;
    plan.for_each(disorder, |_| count += 1);
    Ok(count)
}

/// Exact rational `numerator / denominator`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AverageVelocity {
    pub numerator: i64,
    pub denominator: i64,
}

impl AverageVelocity {
    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalVelocity {
    pub value: AverageVelocity,
    /// First minimiser in lexicographic order.
    pub argmin: DiscreteProfile,
}

/// Minimum over `P_k` of the average site velocity on `Q_k`.
pub fn min_avg_velocity(
    radius: usize,
    dimension: usize,
    cap: i64,
    disorder: &FrozenDisorder,
    force: i64,
    budget: u64,
) -> Result<MinimalVelocity, OracleError> {
    let plan = AdmissibilityPlan::new(radius, dimension, cap, disorder, force, budget)?;
    let mut best: Option<(i64, Vec<i64>)> = None;
    plan.for_each(disorder, |v| {
        if best.as_ref().is_none_or(|(b, _)| v.velocity_sum < *b) {
            best = Some((v.velocity_sum, v.values.to_vec()));
        }
    });
    // w = 0 is always admissible for F >= 0, so P_k is non-empty
    let (sum, values) =
        best.ok_or_else(|| OracleError::InvalidParameter("no admissible profile".into()))?;
    Ok(MinimalVelocity {
        value: AverageVelocity {
            numerator: sum,
            denominator: plan.inner().len() as i64,
        },
        argmin: plan.profile(&values),
    })
}

/// Both algebraic forms of the profile sum `Y_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YStatistic {
    /// `sum_w exp(lambda * flux(w) - mu * sum_{Q_k} velocity)`.
    pub boundary_form: f64,
    /// `sum_w exp((lambda - mu) * sum laplacian - mu * sum (F - fbar))`.
    pub laplacian_form: f64,
    pub profiles: u64,
}

impl YStatistic {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.boundary_form.abs().max(self.laplacian_form.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.boundary_form - self.laplacian_form).abs() / scale
        }
    }
}

/// Largest relative disagreement tolerated between the two forms of `Y_k`.
pub const Y_FORM_TOLERANCE: f64 = 1e-12;

/// `Y_k` summed over the enumerated `P_k`.
///
/// The boundary form uses the flux through the faces of `Q_k`; the Laplacian
/// form uses the interior Laplacians. They must agree to [`Y_FORM_TOLERANCE`].
#[allow(clippy::too_many_arguments)]
pub fn y_statistic(
    radius: usize,
    dimension: usize,
    cap: i64,
    disorder: &FrozenDisorder,
    force: i64,
    lambda: f64,
    mu: f64,
    budget: u64,
) -> Result<YStatistic, OracleError> {
    if !(lambda > 0.0 && mu > lambda && mu.is_finite()) {
        return Err(OracleError::InvalidParameter(format!(
            "need 0 < lambda < mu, got lambda = {lambda}, mu = {mu}"
        )));
    }
    let plan = AdmissibilityPlan::new(radius, dimension, cap, disorder, force, budget)?;
    let volume = plan.inner().len() as i64;
    let mut stat = YStatistic {
        boundary_form: 0.0,
        laplacian_form: 0.0,
        profiles: 0,
    };
    plan.for_each(disorder, |v| {
        let flux = plan.boundary_flux(v.values);
        stat.boundary_form += (lambda * flux as f64 - mu * v.velocity_sum as f64).exp();
        let drive = force * volume - v.fbar_sum();
        stat.laplacian_form += ((lambda - mu) * v.laplacian_sum() as f64 - mu * drive as f64).exp();
        stat.profiles += 1;
    });
    if stat.relative_gap() > Y_FORM_TOLERANCE {
        return Err(OracleError::IdentityMismatch {
            boundary: stat.boundary_form,
            laplacian: stat.laplacian_form,
        });
    }
    Ok(stat)
}

#[cfg(test)]
mod tests {
    use super::super::{is_admissible, DEFAULT_BUDGET};
    use super::*;

    fn zero(radius: usize, dimension: usize, cap: i64) -> FrozenDisorder {
        FrozenDisorder::zero(radius, dimension, cap).unwrap()
    }

    #[test]
    fn cap_zero_has_one_profile() {
        for f in 0..3 {
            let ps = enumerate_admissible(1, 2, 0, &zero(1, 2, 0), f, DEFAULT_BUDGET).unwrap();
            assert_eq!(ps.len(), 1);
            assert!(ps[0].values().iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn all_binary_line_profiles_admissible_at_force_two() {
        let ps = enumerate_admissible(1, 1, 1, &zero(1, 1, 1), 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(ps.len(), 8);
        // lexicographic, site-major
        assert_eq!(ps[0].values(), &[0, 0, 0]);
        assert_eq!(ps[1].values(), &[0, 0, 1]);
        assert_eq!(ps[7].values(), &[1, 1, 1]);
    }

    #[test]
    fn enumeration_matches_filter() {
        let d =
            FrozenDisorder::from_fn(2, 2, 1, |s, h| (s[0] + 2 * s[1] + h).rem_euclid(3)).unwrap();
        for force in 0..4 {
            let ps = enumerate_admissible(1, 2, 1, &d, force, DEFAULT_BUDGET).unwrap();
            let mut brute = Vec::new();
            for code in 0..(1u32 << 9) {
                let values: Vec<i64> = (0..9).rev().map(|b| ((code >> b) & 1) as i64).collect();
                let w = DiscreteProfile::new(1, 2, 1, values).unwrap();
                if is_admissible(&w, &d, force).unwrap() {
                    brute.push(w);
                }
            }
            assert_eq!(ps, brute, "force {force}");
        }
    }

    #[test]
    fn budget_guard() {
        let err = count_admissible(2, 2, 3, &zero(2, 2, 3), 1, 1_000_000).unwrap_err();
        assert!(matches!(err, OracleError::BudgetExceeded { .. }));
    }

    #[test]
    fn min_velocity_cap_zero_is_force() {
        let m = min_avg_velocity(2, 1, 0, &zero(2, 1, 0), 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(
            m.value,
            AverageVelocity {
                numerator: 9,
                denominator: 3
            }
        );
    }

    #[test]
    fn y_single_flat_profile() {
        let y = y_statistic(2, 1, 0, &zero(2, 1, 0), 2, 1.0, 1.5, DEFAULT_BUDGET).unwrap();
        assert_eq!(y.profiles, 1);
        assert!((y.boundary_form - (-1.5f64 * 3.0 * 2.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn y_rejects_mu_below_lambda() {
        assert!(y_statistic(1, 1, 1, &zero(1, 1, 1), 1, 1.0, 1.0, DEFAULT_BUDGET).is_err());
    }
}
