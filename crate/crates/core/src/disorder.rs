//! Quenched obstacle field.
//!
//! Each site `i` and integer height `j` carries an i.i.d. strength `s_{i,j}`
//! drawn from an [`ObstacleDistribution`]. The force felt by the interface at
//! real height `y` is a compactly supported quartic bump centred on the
//! nearest integer,
//!
//! ```text
//! f_i(y) = s_{i,n} * (1 - 4 r^2)^2,   n = round(y), r = y - n,
//! ```
//!
//! so the supremum of `f_i` over `[j - 1/2, j + 1/2]` is exactly `s_{i,j}`.
//! Height zero is obstacle free at every site.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{unit_interval, KeyHasher};
use crate::stats::MeanEstimate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DisorderError {
    #[error("invalid distribution parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("exponential moment is infinite: lambda {lambda} >= rate {rate}")]
    MomentInfinite { lambda: f64, rate: f64 },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("at least {min} samples required, got {got}")]
    TooFewSamples { min: usize, got: usize },
}

/// Law of a single obstacle strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObstacleDistribution {
    Zero,
    Constant { strength: f64 },
    Uniform { low: f64, high: f64 },
    Exponential { rate: f64 },
    BernoulliScaled { probability: f64, strength: f64 },
}

fn check(
    name: &'static str,
    value: f64,
    ok: bool,
    reason: &'static str,
) -> Result<(), DisorderError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(DisorderError::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

impl ObstacleDistribution {
    pub fn validate(&self) -> Result<(), DisorderError> {
        match *self {
            Self::Zero => Ok(()),
            Self::Constant { strength } => {
                check("strength", strength, strength >= 0.0, "must be >= 0")
            }
            Self::Uniform { low, high } => {
                check("low", low, low >= 0.0, "must be >= 0")?;
                check("high", high, high >= low, "must be >= low")
            }
            Self::Exponential { rate } => check("rate", rate, rate > 0.0, "must be > 0"),
            Self::BernoulliScaled {
                probability,
                strength,
            } => {
                check(
                    "probability",
                    probability,
                    (0.0..=1.0).contains(&probability),
                    "must lie in [0, 1]",
                )?;
                check("strength", strength, strength >= 0.0, "must be >= 0")
            }
        }
    }

    /// Inverse-transform draw from a uniform variate `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Constant { strength } => strength,
            Self::Uniform { low, high } => low + (high - low) * u,
            Self::Exponential { rate } => -(-u).ln_1p() / rate,
            Self::BernoulliScaled {
                probability,
                strength,
            } => {
                if u < probability {
                    strength
                } else {
                    0.0
                }
            }
        }
    }

    /// Closed form of `E exp(lambda * ceil(S))` for a single strength `S`.
    ///
    /// Height zero contributes `exp(0) = 1 <= E exp(lambda ceil S)`, so this
    /// is also the supremum over heights of the per-height moment.
    pub fn beta(&self, lambda: f64) -> Result<f64, DisorderError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(DisorderError::InvalidLambda(lambda));
        }
        self.validate()?;
        let value = match *self {
            Self::Zero => 1.0,
            Self::Constant { strength } => (lambda * strength.ceil()).exp(),
            Self::Uniform { low, high } => {
                if high == low {
                    (lambda * low.ceil()).exp()
                } else {
                    // ceil(S) = n  <=>  S in (n - 1, n]
                    let width = high - low;
                    let first = low.floor() as i64;
                    let last = high.ceil() as i64;
                    (first..=last)
                        .map(|n| {
                            let lo = ((n - 1) as f64).max(low);
                            let hi = (n as f64).min(high);
                            let p = ((hi - lo) / width).max(0.0);
                            p * (lambda * n as f64).exp()
                        })
                        .sum()
                }
            }
            Self::Exponential { rate } => {
                if lambda >= rate {
                    return Err(DisorderError::MomentInfinite { lambda, rate });
                }
                // P(ceil S = n) = e^{-r(n-1)} (1 - e^{-r}), n >= 1
                -(-rate).exp_m1() * lambda.exp() / -(lambda - rate).exp_m1()
            }
            Self::BernoulliScaled {
                probability,
                strength,
            } => (1.0 - probability) + probability * (lambda * strength.ceil()).exp(),
        };
        Ok(value)
    }
}

/// Bump profile `(1 - 4 r^2)^2` on `|r| <= 1/2`, zero outside.
#[inline]
pub fn bump(r: f64) -> f64 {
    if r.abs() > 0.5 {
        0.0
    } else {
        let a = 1.0 - 4.0 * r * r;
        a * a
    }
}

/// Upper bound on `|bump'|` used for step-size control.
pub const BUMP_LIPSCHITZ: f64 = 8.0;

/// A fixed realisation of the obstacle field on `Z^d x Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchedField {
    seed: u64,
    dimension: usize,
    distribution: ObstacleDistribution,
}

impl QuenchedField {
    pub fn new(
        seed: u64,
        dimension: usize,
        distribution: ObstacleDistribution,
    ) -> Result<Self, DisorderError> {
        if dimension == 0 {
            return Err(DisorderError::ZeroDimension);
        }
        distribution.validate()?;
        Ok(Self {
            seed,
            dimension,
            distribution,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn distribution(&self) -> &ObstacleDistribution {
        &self.distribution
    }

    /// Obstacle strength `s_{site, height}`; zero at height 0.
    pub fn strength(&self, site: &[i64], height: i64) -> f64 {
        debug_assert_eq!(site.len(), self.dimension);
        if height == 0 {
            return 0.0;
        }
        let key = site
            .iter()
            .fold(KeyHasher::new(self.seed), |h, &x| h.absorb_i64(x))
            .absorb_i64(height)
            .finish();
        self.distribution.sample(unit_interval(key))
    }

    /// Obstacle force at real height `y`.
    pub fn force(&self, site: &[i64], y: f64) -> f64 {
        let n = y.round();
        let s = self.strength(site, n as i64);
        if s == 0.0 {
            0.0
        } else {
            s * bump(y - n)
        }
    }

    /// Integer ceiling of the window supremum of the force around `height`.
    pub fn fbar(&self, site: &[i64], height: i64) -> i64 {
        self.strength(site, height).ceil() as i64
    }

    /// Monte Carlo estimate of `E exp(lambda * fbar)` over distinct
    /// `(site, height != 0)` pairs.
    pub fn beta_mc(&self, lambda: f64, samples: usize) -> Result<MeanEstimate, DisorderError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(DisorderError::InvalidLambda(lambda));
        }
        if samples < 100 {
            return Err(DisorderError::TooFewSamples {
                min: 100,
                got: samples,
            });
        }
        let mut site = vec![0i64; self.dimension];
        let values: Vec<f64> = (0..samples)
            .map(|n| {
                site[0] = n as i64;
                (lambda * self.fbar(&site, 1) as f64).exp()
            })
            .collect();
        Ok(MeanEstimate::from_slice(&values))
    }
}
