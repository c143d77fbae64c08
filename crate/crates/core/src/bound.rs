//! Lower bounds on the ballistic velocity.
//!
//! For an effective force `G`, the bound is the supremum over `mu > lambda` of
//!
//! ```text
//! (lambda G - ln beta - max{ ln(2 / (mu - lambda)), ln 2e }) / mu
//! ```
//!
//! clamped at zero. The continuous-time bound uses `G = floor(F) - 2d`; the
//! discrete bound uses `G = F` directly.
//!
//! The maximum inside splits the `mu` axis at `mu - lambda = 1/e`. Below the
//! split the logarithmic branch is active and has at most one interior
//! stationary point; above it the objective is monotone. Each branch is
//! scanned on a coarse grid in `ln(mu - lambda)` and then refined by golden
//! section, and the larger of the two is kept.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("mu must exceed lambda (mu = {mu}, lambda = {lambda})")]
    MuNotAboveLambda { mu: f64, lambda: f64 },
    #[error("invalid bound parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

/// Smallest `mu - lambda` considered.
pub const MU_GAP_MIN: f64 = 1e-9;
/// Largest `mu - lambda` considered.
pub const MU_GAP_MAX: f64 = 50.0;
const GRID_POINTS: usize = 256;
const GOLDEN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub lambda: f64,
    pub beta: f64,
    pub dimension: usize,
    pub force: f64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<(), BoundError> {
        let bad = |name, value, reason| {
            Err(BoundError::InvalidParameter {
                name,
                value,
                reason,
            })
        };
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda", self.lambda, "must be positive and finite");
        }
        if !(self.beta >= 1.0 && self.beta.is_finite()) {
            return bad("beta", self.beta, "must be finite and >= 1");
        }
        if self.dimension == 0 {
            return bad("dimension", 0.0, "must be >= 1");
        }
        if !(self.force >= 0.0 && self.force.is_finite()) {
            return bad("force", self.force, "must be finite and >= 0");
        }
        Ok(())
    }

    /// `floor(F) - 2d`.
    pub fn effective_force(&self) -> i64 {
        self.force.floor() as i64 - 2 * self.dimension as i64
    }
}

/// Which branch of the inner maximum produced the supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `mu - lambda < 1/e`, the `ln(2 / (mu - lambda))` term is active.
    Logarithmic,
    /// `mu - lambda >= 1/e`, the `ln 2e` term is active.
    Constant,
    /// The supremum is not positive; the bound is zero, approached as `mu -> inf`.
    Clamped,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Logarithmic => "logarithmic",
            Branch::Constant => "constant",
            Branch::Clamped => "clamped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    /// Maximising `mu`; `None` when clamped.
    pub mu: Option<f64>,
    pub branch: Branch,
}

/// `(lambda G - ln beta - max{ln(2/(mu - lambda)), ln 2e}) / mu`.
pub fn objective(lambda: f64, beta: f64, mu: f64, effective_force: i64) -> Result<f64, BoundError> {
    if !(mu > lambda) {
        return Err(BoundError::MuNotAboveLambda { mu, lambda });
    }
    Ok(objective_unchecked(
        lambda,
        beta,
        mu,
        effective_force as f64,
    ))
}

#[inline]
fn objective_unchecked(lambda: f64, beta: f64, mu: f64, g: f64) -> f64 {
    let penalty = (2.0 / (mu - lambda)).ln().max(LN_2E);
    (lambda * g - beta.ln() - penalty) / mu
}

const LN_2E: f64 = 1.693_147_180_559_945_3;
/// `mu - lambda` at which the two branches of the maximum meet.
pub const CROSSOVER_GAP: f64 = 0.367_879_441_171_442_33;

/// Grid scan plus golden-section refinement of `f` over `[lo, hi]`.
fn maximize(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let xs: Vec<f64> = (0..GRID_POINTS)
        .map(|i| {
            if i == GRID_POINTS - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect();
    let (best, _) = xs.iter().enumerate().map(|(i, &x)| (i, f(x))).fold(
        (0, f64::NEG_INFINITY),
        |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
    );
    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(GRID_POINTS - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOLERANCE {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // endpoints of the bracket can beat the interior on monotone branches
    [
        (a, f(a)),
        (b, f(b)),
        (xs[best], f(xs[best])),
        ((a + b) / 2.0, f((a + b) / 2.0)),
    ]
    .into_iter()
    .fold(
        (a, f64::NEG_INFINITY),
        |acc, p| if p.1 > acc.1 { p } else { acc },
    )
}

/// Supremum over `mu` for a given effective force, clamped at zero.
pub fn supremum(lambda: f64, beta: f64, effective_force: i64) -> BoundValue {
    let g = effective_force as f64;
    let in_gap = |s: f64| objective_unchecked(lambda, beta, lambda + s.exp(), g);
    let split = CROSSOVER_GAP.ln();
    let (s_log, v_log) = maximize(in_gap, MU_GAP_MIN.ln(), split);
    let (s_const, v_const) = maximize(in_gap, split, MU_GAP_MAX.ln());
    let (s, v) = if v_log >= v_const {
        (s_log, v_log)
    } else {
        (s_const, v_const)
    };
    if v > 0.0 {
        let gap = s.exp();
        let branch = if gap < CROSSOVER_GAP {
            Branch::Logarithmic
        } else {
            Branch::Constant
        };
        BoundValue {
            value: v,
            mu: Some(lambda + gap),
            branch,
        }
    } else {
        BoundValue {
            value: 0.0,
            mu: None,
            branch: Branch::Clamped,
        }
    }
}

/// Velocity lower bound for the continuous-time lattice dynamics.
pub fn velocity_bound(params: &BoundParams) -> Result<BoundValue, BoundError> {
    params.validate()?;
    Ok(supremum(
        params.lambda,
        params.beta,
        params.effective_force(),
    ))
}

/// Average-velocity lower bound for admissible integer profiles at integer force.
pub fn discrete_velocity_bound(
    lambda: f64,
    beta: f64,
    force: u64,
) -> Result<BoundValue, BoundError> {
    BoundParams {
        lambda,
        beta,
        dimension: 1,
        force: force as f64,
    }
    .validate()?;
    Ok(supremum(lambda, beta, force as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn params(lambda: f64, beta: f64, dimension: usize, force: f64) -> BoundParams {
        BoundParams {
            lambda,
            beta,
            dimension,
            force,
        }
    }

    #[test]
    fn constants() {
        assert!((LN_2E - (2.0 * E).ln()).abs() < 1e-15);
        assert!((CROSSOVER_GAP - 1.0 / E).abs() < 1e-16);
    }

    #[test]
    fn objective_examples() {
        let v = objective(1.0, 1.0, 2.0, 0).unwrap();
        assert!((v + (1.0 + 2f64.ln()) / 2.0).abs() < 1e-14);
        let v = objective(1.0, 1.0, 1.0 + 1.0 / E, 8).unwrap();
        assert!((v - (8.0 - (2.0 * E).ln()) / (1.0 + 1.0 / E)).abs() < 1e-13);
        assert!((v - 4.610).abs() < 1e-3);
        assert!(matches!(
            objective(1.0, 1.0, 1.0, 0),
            Err(BoundError::MuNotAboveLambda { .. })
        ));
        assert!(matches!(
            objective(1.0, 1.0, 0.5, 0),
            Err(BoundError::MuNotAboveLambda { .. })
        ));
    }

    #[test]
    fn branch_crossover_agrees() {
        // 2 / (1/e) = 2e, both branches coincide
        assert!(((2.0 / CROSSOVER_GAP).ln() - LN_2E).abs() < 1e-14);
    }

    #[test]
    fn clamps_to_zero() {
        let v = velocity_bound(&params(1.0, 1.0, 1, 2.0)).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.branch, Branch::Clamped);
        assert_eq!(v.mu, None);
        assert_eq!(discrete_velocity_bound(1.0, 1.0, 0).unwrap().value, 0.0);
    }

    #[test]
    fn interior_log_optimum() {
        let v = velocity_bound(&params(1.0, 1.0, 1, 10.0)).unwrap();
        assert!((v.value - 4.749).abs() < 2e-3, "{v:?}");
        assert!((v.mu.unwrap() - 1.2105).abs() < 1e-3);
        assert_eq!(v.branch, Branch::Logarithmic);
        let bar = discrete_velocity_bound(1.0, 1.0, 8).unwrap();
        assert_eq!(bar, v);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(velocity_bound(&params(0.0, 1.0, 1, 1.0)).is_err());
        assert!(velocity_bound(&params(1.0, 0.5, 1, 1.0)).is_err());
        assert!(velocity_bound(&params(1.0, 1.0, 0, 1.0)).is_err());
        assert!(velocity_bound(&params(1.0, 1.0, 1, -1.0)).is_err());
        assert!(velocity_bound(&params(1.0, 1.0, 1, f64::NAN)).is_err());
    }
}
