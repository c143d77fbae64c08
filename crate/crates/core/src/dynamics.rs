//! Explicit Euler integration of the driven lattice interface
//!
//! ```text
//! du_i/dt = laplacian(u)_i - f_i(u_i) + F
//! ```
//!
//! on a periodic torus of side `N`, started from the flat state `u = 0`.
//!
//! With `dt <= 0.9 / (4d + L)`, where `L` bounds the Lipschitz constant of the
//! obstacle force over the reachable heights, one Euler step is a monotone map
//! of the height vector. That gives a discrete comparison principle, the
//! squeeze `0 <= u_i(t) <= F t` and non-negative velocities along the run.
//!
//! Per-site work is split across the current rayon pool; every reduction is
//! a sequential fold in site order so results do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disorder::{DisorderError, ObstacleDistribution, QuenchedField, BUMP_LIPSCHITZ};
use crate::lattice::{Domain, HeightField, LatticeError, Torus};
use crate::stats::MeanEstimate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid simulation parameter `{name}`: {reason}")]
    InvalidConfig { name: &'static str, reason: String },
    #[error("time step {dt} exceeds the stability limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("velocity {velocity} at site {site} exceeds the blow-up guard {guard} at t = {time}")]
    Instability {
        site: usize,
        velocity: f64,
        guard: f64,
        time: f64,
    },
    #[error("no trajectories to summarise")]
    EmptyInput,
    #[error(transparent)]
    Disorder(#[from] DisorderError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Parameters of a single simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dimension: usize,
    /// Sites per axis.
    pub side: usize,
    pub force: f64,
    pub dt: f64,
    pub final_time: f64,
    pub record_interval: f64,
    pub seed: u64,
    pub distribution: ObstacleDistribution,
    /// Torus coordinates of the site whose `u / t` is tracked.
    pub tracked_site: Vec<i64>,
}

fn invalid(name: &'static str, reason: impl Into<String>) -> DynamicsError {
    DynamicsError::InvalidConfig {
        name,
        reason: reason.into(),
    }
}

/// `round(numerator / denominator)` when the ratio is integral to 1e-9.
fn whole_ratio(numerator: f64, denominator: f64) -> Option<u64> {
    let ratio = numerator / denominator;
    let n = ratio.round();
    if n >= 1.0 && (n * denominator - numerator).abs() <= 1e-9 * numerator.abs().max(1.0) {
        Some(n as u64)
    } else {
        None
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.dimension == 0 {
            return Err(invalid("dimension", "must be >= 1"));
        }
        if self.side == 0 {
            return Err(invalid("side", "must be >= 1"));
        }
        if !(self.force >= 0.0 && self.force.is_finite()) {
            return Err(invalid("force", "must be finite and >= 0"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(invalid("final_time", "must be positive and finite"));
        }
        if !(self.record_interval > 0.0 && self.record_interval.is_finite()) {
            return Err(invalid("record_interval", "must be positive and finite"));
        }
        if whole_ratio(self.final_time, self.record_interval).is_none() {
            return Err(invalid(
                "record_interval",
                "must divide final_time into a whole number of intervals",
            ));
        }
        if whole_ratio(self.record_interval, self.dt).is_none() {
            return Err(invalid(
                "dt",
                "must divide record_interval into a whole number of steps",
            ));
        }
        if self.tracked_site.len() != self.dimension {
            return Err(invalid(
                "tracked_site",
                format!("needs {} coordinates", self.dimension),
            ));
        }
        self.distribution.validate()?;
        Ok(())
    }

    pub fn field(&self) -> Result<QuenchedField, DynamicsError> {
        Ok(QuenchedField::new(
            self.seed,
            self.dimension,
            self.distribution,
        )?)
    }

    pub fn torus(&self) -> Result<Torus, DynamicsError> {
        Ok(Torus::new(self.side, self.dimension)?)
    }

    pub fn steps_per_record(&self) -> u64 {
        whole_ratio(self.record_interval, self.dt).unwrap_or(1)
    }

    pub fn record_count(&self) -> u64 {
        whole_ratio(self.final_time, self.record_interval).unwrap_or(1)
    }

    pub fn total_steps(&self) -> u64 {
        self.steps_per_record() * self.record_count()
    }

    /// Largest `dt` no greater than `limit` that divides `record_interval`.
    pub fn aligned_dt(record_interval: f64, limit: f64) -> f64 {
        let steps = (record_interval / limit).ceil().max(1.0);
        record_interval / steps
    }
}

/// Step-size control derived from the obstacles a run can reach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityBound {
    /// Largest strength on the torus over the scanned heights.
    pub max_strength: f64,
    /// `BUMP_LIPSCHITZ * max_strength`.
    pub lipschitz: f64,
    /// `0.9 / (4d + lipschitz)`.
    pub dt_limit: f64,
}

/// Scans heights `floor(min_start) - 1 ..= ceil(max_start + F T) + 1` at every
/// torus site.
pub fn stability_bound(
    config: &SimConfig,
    field: &QuenchedField,
    min_start: f64,
    max_start: f64,
) -> Result<StabilityBound, DynamicsError> {
    let torus = config.torus()?;
    let lo = (min_start.min(0.0)).floor() as i64 - 1;
    let hi = (max_start.max(0.0) + config.force * config.final_time).ceil() as i64 + 1;
    let max_strength = (0..torus.len())
        .into_par_iter()
        .map(|i| {
            let site = torus.coordinates_of(i);
            (lo..=hi)
                .map(|h| field.strength(site, h))
                .fold(0.0, f64::max)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    let lipschitz = BUMP_LIPSCHITZ * max_strength;
    Ok(StabilityBound {
        max_strength,
        lipschitz,
        dt_limit: 0.9 / (4.0 * config.dimension as f64 + lipschitz),
    })
}

/// Heights and cached velocities at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub heights: HeightField<f64>,
    pub velocities: HeightField<f64>,
}

impl SimState {
    /// Flat start `u = 0` at `t = 0`.
    pub fn flat(config: &SimConfig, field: &QuenchedField) -> Result<Self, DynamicsError> {
        let torus = config.torus()?;
        Self::from_heights(&torus, config.force, field, vec![0.0; torus.len()], 0.0)
    }

    pub fn from_heights(
        torus: &Torus,
        force: f64,
        field: &QuenchedField,
        heights: Vec<f64>,
        time: f64,
    ) -> Result<Self, DynamicsError> {
        let velocities = rhs_values(torus, force, field, &heights);
        Ok(Self {
            time,
            heights: HeightField::new(Domain::Torus(torus.clone()), heights)?,
            velocities: HeightField::new(Domain::Torus(torus.clone()), velocities)?,
        })
    }
}

fn rhs_values(torus: &Torus, force: f64, field: &QuenchedField, heights: &[f64]) -> Vec<f64> {
    (0..heights.len())
        .into_par_iter()
        .with_min_len(128)
        .map(|i| {
            torus.laplacian_at(heights, i) - field.force(torus.coordinates_of(i), heights[i])
                + force
        })
        .collect()
}

/// Right-hand side `laplacian(u) - f(u) + F` at every torus site.
pub fn rhs(
    state: &SimState,
    config: &SimConfig,
    field: &QuenchedField,
) -> Result<HeightField<f64>, DynamicsError> {
    let torus = config.torus()?;
    let values = rhs_values(&torus, config.force, field, state.heights.values());
    Ok(HeightField::new(Domain::Torus(torus), values)?)
}

/// Upper limit on `|du/dt|` before a step is declared unstable.
fn blow_up_guard(force: f64, dimension: usize, heights: &[f64], max_strength: f64) -> f64 {
    let max_abs = heights.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    10.0 * (force + 4.0 * dimension as f64 * max_abs + max_strength)
}

fn check_guard(
    state: &SimState,
    force: f64,
    dimension: usize,
    max_strength: f64,
) -> Result<(), DynamicsError> {
    let guard = blow_up_guard(force, dimension, state.heights.values(), max_strength);
    match state
        .velocities
        .values()
        .iter()
        .position(|v| !(v.abs() <= guard))
    {
        Some(site) => Err(DynamicsError::Instability {
            site,
            velocity: state.velocities.values()[site],
            guard,
            time: state.time,
        }),
        None => Ok(()),
    }
}

fn euler(
    torus: &Torus,
    force: f64,
    field: &QuenchedField,
    dt: f64,
    state: &SimState,
    time: f64,
) -> Result<SimState, DynamicsError> {
    let heights: Vec<f64> = state
        .heights
        .values()
        .iter()
        .zip(state.velocities.values())
        .map(|(u, v)| u + dt * v)
        .collect();
    SimState::from_heights(torus, force, field, heights, time)
}

/// One Euler step `u <- u + dt * rhs(u)`.
///
/// The step size is checked against the stability limit over the heights the
/// configured run can reach from this state.
pub fn step(
    state: &SimState,
    config: &SimConfig,
    field: &QuenchedField,
) -> Result<SimState, DynamicsError> {
    config.validate()?;
    let u = state.heights.values();
    let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bound = stability_bound(config, field, lo, hi)?;
    if config.dt > bound.dt_limit {
        return Err(DynamicsError::StepTooLarge {
            dt: config.dt,
            limit: bound.dt_limit,
        });
    }
    let torus = config.torus()?;
    check_guard(state, config.force, config.dimension, bound.max_strength)?;
    euler(
        &torus,
        config.force,
        field,
        config.dt,
        state,
        state.time + config.dt,
    )
}

/// Spatial velocity statistics at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityRecord {
    pub time: f64,
    pub mean_velocity: f64,
    pub min_velocity: f64,
    pub mean_height_over_time: f64,
    pub tracked_height_over_time: f64,
}

/// Output of a full run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<VelocityRecord>,
    /// `(mean u(T) - mean u(T_half)) / (T - T_half)` with `T_half` the
    /// midpoint step.
    pub window_velocity: f64,
    pub final_state: SimState,
}

impl Trajectory {
    pub fn last(&self) -> &VelocityRecord {
        self.records
            .last()
            .expect("a trajectory holds at least one record")
    }
}

/// A run in progress.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    config: &'a SimConfig,
    field: &'a QuenchedField,
    torus: Torus,
    tracked: usize,
    bound: StabilityBound,
    state: SimState,
    steps_done: u64,
    half_mean: Option<f64>,
}

impl<'a> Simulation<'a> {
    /// Run from the flat start.
    pub fn new(config: &'a SimConfig, field: &'a QuenchedField) -> Result<Self, DynamicsError> {
        let torus = config.torus()?;
        Self::with_initial(config, field, vec![0.0; torus.len()])
    }

    pub fn with_initial(
        config: &'a SimConfig,
        field: &'a QuenchedField,
        heights: Vec<f64>,
    ) -> Result<Self, DynamicsError> {
        config.validate()?;
        let torus = config.torus()?;
        if heights.len() != torus.len() {
            return Err(LatticeError::LengthMismatch {
                expected: torus.len(),
                got: heights.len(),
            }
            .into());
        }
        if heights.iter().any(|u| !u.is_finite()) {
            return Err(invalid("initial heights", "must be finite"));
        }
        let lo = heights.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = heights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bound = stability_bound(config, field, lo, hi)?;
        if config.dt > bound.dt_limit {
            return Err(DynamicsError::StepTooLarge {
                dt: config.dt,
                limit: bound.dt_limit,
            });
        }
        let tracked = torus.index_of(&config.tracked_site);
        let state = SimState::from_heights(&torus, config.force, field, heights, 0.0)?;
        Ok(Self {
            config,
            field,
            torus,
            tracked,
            bound,
            state,
            steps_done: 0,
            half_mean: None,
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn stability(&self) -> &StabilityBound {
        &self.bound
    }

    pub fn is_finished(&self) -> bool {
        self.steps_done >= self.config.total_steps()
    }

    /// One Euler step.
    pub fn advance(&mut self) -> Result<(), DynamicsError> {
        check_guard(
            &self.state,
            self.config.force,
            self.config.dimension,
            self.bound.max_strength,
        )?;
        let time = (self.steps_done + 1) as f64 * self.config.dt;
        self.state = euler(
            &self.torus,
            self.config.force,
            self.field,
            self.config.dt,
            &self.state,
            time,
        )?;
        self.steps_done += 1;
        if self.steps_done == self.config.total_steps() / 2 {
            self.half_mean = Some(mean(self.state.heights.values()));
        }
        Ok(())
    }

    /// Advances to the next recording time; `None` once the run is complete.
    pub fn advance_to_next_record(&mut self) -> Result<Option<VelocityRecord>, DynamicsError> {
        if self.is_finished() {
            return Ok(None);
        }
        for _ in 0..self.config.steps_per_record() {
            self.advance()?;
        }
        Ok(Some(self.record()))
    }

    /// Statistics of the current state.
    pub fn record(&self) -> VelocityRecord {
        let t = self.state.time;
        let u = self.state.heights.values();
        let v = self.state.velocities.values();
        VelocityRecord {
            time: t,
            mean_velocity: mean(v),
            min_velocity: v.iter().cloned().fold(f64::INFINITY, f64::min),
            mean_height_over_time: mean(u) / t,
            tracked_height_over_time: u[self.tracked] / t,
        }
    }

    pub fn run(mut self) -> Result<Trajectory, DynamicsError> {
        let mut records = Vec::with_capacity(self.config.record_count() as usize);
        while let Some(r) = self.advance_to_next_record()? {
            records.push(r);
        }
        let half_steps = self.config.total_steps() / 2;
        let half_mean = self.half_mean.unwrap_or(0.0);
        let span = (self.config.total_steps() - half_steps) as f64 * self.config.dt;
        let window_velocity = (mean(self.state.heights.values()) - half_mean) / span;
        Ok(Trajectory {
            records,
            window_velocity,
            final_state: self.state,
        })
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Runs `config` from `u = 0` to the final time.
pub fn integrate(config: &SimConfig, field: &QuenchedField) -> Result<Trajectory, DynamicsError> {
    Simulation::new(config, field)?.run()
}

/// Runs `config` from the given initial heights.
pub fn integrate_from(
    config: &SimConfig,
    field: &QuenchedField,
    heights: Vec<f64>,
) -> Result<Trajectory, DynamicsError> {
    Simulation::with_initial(config, field, heights)?.run()
}

/// Across-seed aggregate of final-time statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocitySummary {
    pub runs: usize,
    /// `u_0(T) / T` at the tracked site.
    pub tracked: MeanEstimate,
    /// Spatial mean of `u(T) / T`.
    pub spatial: MeanEstimate,
    /// Spatial mean velocity over the second half of the run.
    pub window: MeanEstimate,
    /// Smallest recorded site velocity over all runs and times.
    pub min_velocity: f64,
}

pub fn velocity_statistics(runs: &[Trajectory]) -> Result<VelocitySummary, DynamicsError> {
    if runs.is_empty() {
        return Err(DynamicsError::EmptyInput);
    }
    Ok(VelocitySummary {
        runs: runs.len(),
        tracked: MeanEstimate::from_samples(runs.iter().map(|r| r.last().tracked_height_over_time)),
        spatial: MeanEstimate::from_samples(runs.iter().map(|r| r.last().mean_height_over_time)),
        window: MeanEstimate::from_samples(runs.iter().map(|r| r.window_velocity)),
        min_velocity: runs
            .iter()
            .flat_map(|r| r.records.iter().map(|x| x.min_velocity))
            .fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(
        dimension: usize,
        side: usize,
        force: f64,
        dt: f64,
        distribution: ObstacleDistribution,
    ) -> SimConfig {
        SimConfig {
            dimension,
            side,
            force,
            dt,
            final_time: 1.0,
            record_interval: 0.5,
            seed: 11,
            distribution,
            tracked_site: vec![0; dimension],
        }
    }

    #[test]
    fn rhs_on_flat_and_zero_states() {
        let c = config(
            2,
            4,
            1.5,
            0.1,
            ObstacleDistribution::Exponential { rate: 2.0 },
        );
        let field = c.field().unwrap();
        let s = SimState::flat(&c, &field).unwrap();
        assert!(rhs(&s, &c, &field)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 1.5));
        let z = config(1, 5, 2.0, 0.1, ObstacleDistribution::Zero);
        let zf = z.field().unwrap();
        let torus = z.torus().unwrap();
        let flat = SimState::from_heights(&torus, 2.0, &zf, vec![4.2; 5], 0.0).unwrap();
        assert!(flat.velocities.values().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn rhs_stencil_example() {
        let c = config(1, 3, 1.0, 0.1, ObstacleDistribution::Zero);
        let field = c.field().unwrap();
        let torus = c.torus().unwrap();
        let s = SimState::from_heights(&torus, 1.0, &field, vec![0.0, 1.0, 0.0], 0.0).unwrap();
        assert_eq!(rhs(&s, &c, &field).unwrap().values(), &[2.0, -1.0, 2.0]);
    }

    #[test]
    fn flat_step_is_exact() {
        let c = config(1, 8, 3.0, 0.1, ObstacleDistribution::Zero);
        let field = c.field().unwrap();
        let s0 = SimState::flat(&c, &field).unwrap();
        let s1 = step(&s0, &c, &field).unwrap();
        assert!(s1.heights.values().iter().all(|&u| (u - 0.3).abs() < 1e-15));
        assert_eq!(s1.time, 0.1);
    }

    #[test]
    fn step_rejects_unstable_dt() {
        let c = config(1, 8, 3.0, 0.25, ObstacleDistribution::Zero);
        let field = c.field().unwrap();
        let s0 = SimState::flat(&c, &field).unwrap();
        assert!(matches!(
            step(&s0, &c, &field),
            Err(DynamicsError::StepTooLarge { .. })
        ));
        assert!(matches!(
            Simulation::new(&c, &field),
            Err(DynamicsError::StepTooLarge { .. })
        ));
    }

    #[test]
    fn guard_trips_on_runaway_velocity() {
        let c = config(1, 3, 1.0, 0.1, ObstacleDistribution::Zero);
        let field = c.field().unwrap();
        let torus = c.torus().unwrap();
        let mut s = SimState::flat(&c, &field).unwrap();
        s.velocities = HeightField::new(Domain::Torus(torus), vec![1.0, 1e6, 1.0]).unwrap();
        assert!(matches!(
            step(&s, &c, &field),
            Err(DynamicsError::Instability { site: 1, .. })
        ));
    }

    #[test]
    fn config_validation() {
        let good = config(1, 8, 3.0, 0.1, ObstacleDistribution::Zero);
        assert!(good.validate().is_ok());
        let mut c = good.clone();
        c.dt = 0.3;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.final_time = 0.75;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.tracked_site = vec![0, 0];
        assert!(c.validate().is_err());
        let mut c = good;
        c.force = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn aligned_dt_divides_interval() {
        let dt = SimConfig::aligned_dt(1.0, 0.1125);
        assert!(dt <= 0.1125);
        assert!((1.0 / dt - 9.0).abs() < 1e-12);
    }

    #[test]
    fn statistics_of_zero_disorder_run() {
        let mut c = config(1, 4, 2.0, 0.05, ObstacleDistribution::Zero);
        c.final_time = 2.0;
        let field = c.field().unwrap();
        let run = integrate(&c, &field).unwrap();
        assert_eq!(run.records.len(), 4);
        let summary = velocity_statistics(&[run.clone(), run]).unwrap();
        assert!((summary.tracked.mean - 2.0).abs() < 1e-12);
        assert_eq!(summary.tracked.standard_error, 0.0);
        assert!((summary.window.mean - 2.0).abs() < 1e-12);
        assert_eq!(velocity_statistics(&[]), Err(DynamicsError::EmptyInput));
    }
}
