use rayon::prelude::*;
use serde::Serialize;

use qew_core::bound::{discrete_velocity_bound, velocity_bound, BoundParams, BoundValue};
use qew_core::dynamics::{
    integrate, stability_bound, velocity_statistics, SimConfig, Trajectory, VelocitySummary,
};
use qew_core::oracle::{
    min_avg_velocity, run_suite, y_statistic, AdmissibilityPlan, AverageVelocity, FrozenDisorder,
    SuiteConfig, SuiteReport, YStatistic,
};
use qew_core::QuenchedField;

use crate::config::{BoundBlock, EnumerateBlock, ExperimentConfig, SimulationBlock};
use crate::error::CliError;
use crate::output::{json, optional_real, real, Outputs, Table};

pub const VELOCITY_COLUMNS: [&str; 6] = [
    "seed",
    "t",
    "mean_udot",
    "min_udot",
    "mean_u_over_t",
    "tracked_u_over_t",
];
pub const BOUND_COLUMNS: [&str; 4] = ["F", "V", "mu", "branch"];
pub const PROFILE_COLUMNS: [&str; 4] = ["seed", "profile", "velocity_sum", "values"];
pub const SWEEP_COLUMNS: [&str; 6] = [
    "force",
    "mean_u0_over_t",
    "se_u0_over_t",
    "mean_u_over_t",
    "window_velocity",
    "v_bound",
];

/// Runs every seed at one force. `dt` is the configured step or, when unset,
/// the largest aligned step stable for all seeds.
fn run_seeds(
    block: &SimulationBlock,
    seeds: &[u64],
    force: f64,
) -> Result<(f64, Vec<Trajectory>), CliError> {
    let fields = seeds
        .iter()
        .map(|&seed| Ok(block.sim_config(seed, force).field()?))
        .collect::<Result<Vec<QuenchedField>, CliError>>()?;
    let dt = match block.dt {
        Some(dt) => dt,
        None => {
            let limit = seeds
                .par_iter()
                .zip(&fields)
                .map(|(&seed, field)| {
                    Ok(stability_bound(&block.sim_config(seed, force), field, 0.0, 0.0)?.dt_limit)
                })
                .collect::<Result<Vec<f64>, CliError>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            SimConfig::aligned_dt(block.record_interval, limit)
        }
    };
    let runs = seeds
        .par_iter()
        .zip(&fields)
        .map(|(&seed, field)| {
            let config = SimConfig {
                dt,
                ..block.sim_config(seed, force)
            };
            Ok(integrate(&config, field)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((dt, runs))
}

fn reference_bound(block: &SimulationBlock, force: f64) -> Result<BoundValue, CliError> {
    let beta = block
        .distribution
        .beta(block.reference_lambda)
        .map_err(|e| CliError::Config(format!("simulation.distribution: {e}")))?;
    velocity_bound(&BoundParams {
        lambda: block.reference_lambda,
        beta,
        dimension: block.dimension,
        force,
    })
    .map_err(|e| CliError::Config(format!("simulation: {e}")))
}

/// The simulation block with every default filled in.
fn resolved(block: &SimulationBlock, dt: f64) -> SimulationBlock {
    SimulationBlock {
        dt: Some(dt),
        tracked_site: Some(block.sim_config(0, block.force).tracked_site),
        ..block.clone()
    }
}

#[derive(Serialize)]
struct SeedResult {
    seed: u64,
    tracked_u_over_t: f64,
    mean_u_over_t: f64,
    window_velocity: f64,
}

#[derive(Serialize)]
struct SimulateSummary {
    seeds: Vec<u64>,
    simulation: SimulationBlock,
    dt: f64,
    statistics: VelocitySummary,
    reference_beta: f64,
    v_reference: BoundValue,
    per_seed: Vec<SeedResult>,
}

pub fn simulate(config: &ExperimentConfig) -> Result<Outputs, CliError> {
    let block = config.simulation()?;
    let (dt, runs) = run_seeds(block, &config.seeds, block.force)?;
    let mut table = Table::new(&VELOCITY_COLUMNS)?;
    for (seed, run) in config.seeds.iter().zip(&runs) {
        for r in &run.records {
            table.row([
                seed.to_string(),
                real(r.time),
                real(r.mean_velocity),
                real(r.min_velocity),
                real(r.mean_height_over_time),
                real(r.tracked_height_over_time),
            ])?;
        }
    }
    let summary = SimulateSummary {
        seeds: config.seeds.clone(),
        simulation: resolved(block, dt),
        dt,
        statistics: velocity_statistics(&runs)?,
        reference_beta: block
            .distribution
            .beta(block.reference_lambda)
            .map_err(|e| CliError::Config(e.to_string()))?,
        v_reference: reference_bound(block, block.force)?,
        per_seed: config
            .seeds
            .iter()
            .zip(&runs)
            .map(|(&seed, run)| SeedResult {
                seed,
                tracked_u_over_t: run.last().tracked_height_over_time,
                mean_u_over_t: run.last().mean_height_over_time,
                window_velocity: run.window_velocity,
            })
            .collect(),
    };
    let mut out = Outputs::default();
    out.add("velocity.csv", table.into_bytes()?);
    out.add("summary.json", json(&summary)?);
    Ok(out)
}

#[derive(Serialize)]
struct BoundSummary<'a> {
    bound: &'a BoundBlock,
    beta: f64,
    rows: &'a [(f64, BoundValue)],
}

pub fn bound(config: &ExperimentConfig) -> Result<Outputs, CliError> {
    let block = config.bound()?;
    let beta = block.beta()?;
    let rows = block
        .forces
        .iter()
        .map(|&force| {
            let value = if block.discrete {
                discrete_velocity_bound(block.lambda, beta, force as u64)
            } else {
                velocity_bound(&BoundParams {
                    lambda: block.lambda,
                    beta,
                    dimension: block.dimension,
                    force,
                })
            };
            value
                .map(|v| (force, v))
                .map_err(|e| CliError::Config(format!("bound: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&BOUND_COLUMNS)?;
    for (force, v) in &rows {
        table.row([
            real(*force),
            real(v.value),
            optional_real(v.mu),
            v.branch.as_str().to_string(),
        ])?;
    }
    let mut out = Outputs::default();
    out.add("bound.csv", table.into_bytes()?);
    out.add(
        "bound.json",
        json(&BoundSummary {
            bound: block,
            beta,
            rows: &rows,
        })?,
    );
    Ok(out)
}

#[derive(Serialize)]
struct EnumerateResult {
    seed: u64,
    candidates: u64,
    admissible: u64,
    min_avg_velocity: AverageVelocity,
    min_avg_velocity_value: f64,
    argmin: Vec<i64>,
    y: YStatistic,
    y_relative_gap: f64,
}

#[derive(Serialize)]
struct EnumerateSummary<'a> {
    seeds: &'a [u64],
    enumerate: &'a EnumerateBlock,
    results: Vec<EnumerateResult>,
}

pub fn enumerate(config: &ExperimentConfig) -> Result<Outputs, CliError> {
    let block = config.enumerate()?;
    let (k, d, cap, force) = (block.radius, block.dimension, block.cap, block.force);
    let mut table = Table::new(&PROFILE_COLUMNS)?;
    let mut results = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let field = QuenchedField::new(seed, d, block.distribution)
            .map_err(|e| CliError::Config(format!("enumerate.distribution: {e}")))?;
        let disorder = FrozenDisorder::from_field(&field, k, cap)?;
        let plan = AdmissibilityPlan::new(k, d, cap, &disorder, force, block.budget)?;
        let mut rows = Vec::new();
        plan.for_each(&disorder, |v| {
            rows.push((v.velocity_sum, v.values.to_vec()))
        });
        for (i, (sum, values)) in rows.iter().enumerate() {
            let joined = values
                .iter()
                .map(i64::to_string)
                .collect::<Vec<_>>()
                .join(" ");
            table.row([seed.to_string(), i.to_string(), sum.to_string(), joined])?;
        }
        let minimal = min_avg_velocity(k, d, cap, &disorder, force, block.budget)?;
        let y = y_statistic(
            k,
            d,
            cap,
            &disorder,
            force,
            block.lambda,
            block.mu,
            block.budget,
        )?;
        results.push(EnumerateResult {
            seed,
            candidates: (cap as u64 + 1).saturating_pow(plan.support().len() as u32),
            admissible: rows.len() as u64,
            min_avg_velocity: minimal.value,
            min_avg_velocity_value: minimal.value.to_f64(),
            argmin: minimal.argmin.values().to_vec(),
            y,
            y_relative_gap: y.relative_gap(),
        });
    }
    let mut out = Outputs::default();
    out.add("profiles.csv", table.into_bytes()?);
    out.add(
        "enumerate.json",
        json(&EnumerateSummary {
            seeds: &config.seeds,
            enumerate: block,
            results,
        })?,
    );
    Ok(out)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    oracle: &'a SuiteConfig,
    #[serde(flatten)]
    report: &'a SuiteReport,
}

/// The report is returned even when a check fails so the caller can write
/// it before exiting with status 1.
pub fn verify(config: &ExperimentConfig) -> Result<(Outputs, bool), CliError> {
    let suite = config.oracle()?;
    let report = run_suite(&suite)?;
    let mut out = Outputs::default();
    out.add(
        "verify.json",
        json(&VerifyReport {
            oracle: &suite,
            report: &report,
        })?,
    );
    Ok((out, report.passed))
}

#[derive(Serialize)]
struct SweepRow {
    force: f64,
    dt: f64,
    statistics: VelocitySummary,
    v_bound: BoundValue,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    seeds: &'a [u64],
    simulation: &'a SimulationBlock,
    forces: &'a [f64],
    rows: Vec<SweepRow>,
}

pub fn sweep(config: &ExperimentConfig) -> Result<Outputs, CliError> {
    let (block, sweep) = config.sweep()?;
    let rows = sweep
        .forces
        .iter()
        .map(|&force| {
            let (dt, runs) = run_seeds(block, &config.seeds, force)?;
            Ok(SweepRow {
                force,
                dt,
                statistics: velocity_statistics(&runs)?,
                v_bound: reference_bound(block, force)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut table = Table::new(&SWEEP_COLUMNS)?;
    for r in &rows {
        table.row([
            real(r.force),
            real(r.statistics.tracked.mean),
            real(r.statistics.tracked.standard_error),
            real(r.statistics.spatial.mean),
            real(r.statistics.window.mean),
            real(r.v_bound.value),
        ])?;
    }
    let mut out = Outputs::default();
    out.add("sweep.csv", table.into_bytes()?);
    out.add(
        "sweep.json",
        json(&SweepSummary {
            seeds: &config.seeds,
            simulation: block,
            forces: &sweep.forces,
            rows,
        })?,
    );
    Ok(out)
}
