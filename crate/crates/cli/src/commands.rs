//! The CLI commands: solve, simulate, baseline, sweep-m, sweep-alpha, and
//! oracle. Each writes its results under the output directory and returns
//! the exit-code-bearing error on failure.

use crate::config::FileConfig;
use crate::error::AppError;
use crate::output::{csv_writer, sig10, write_json};
use drypath_core::anneal::{solve, SolveError, SolveOptions, SolveResult};
use drypath_core::exec;
use drypath_core::kinetics::{celsius_from_kelvin, step, MoistureState, StageParams, Technology};
use drypath_core::model::PathCostModel;
use drypath_core::oracle::{exhaustive_solve, optimize_single_path, PathRecord};
use drypath_core::path::Path as TechPath;
use drypath_core::process::DryingModel;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Solve,
    Simulate,
    Baseline,
    SweepM,
    SweepAlpha,
    Oracle,
}

/// A fully parsed invocation.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub command: Subcommand,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub overrides: Vec<String>,
    pub seed: u64,
    pub verbose: bool,
}

/// Entry point shared by the binary and the integration tests.
pub fn run(spec: &RunSpec) -> Result<(), AppError> {
    let config = FileConfig::load(spec.config_path.as_deref(), &spec.overrides)?;
    std::fs::create_dir_all(&spec.output_dir)?;
    match spec.command {
        Subcommand::Solve => run_solve(&config, spec),
        Subcommand::Simulate => run_simulate(&config, spec),
        Subcommand::Baseline => run_baseline(&config, spec).map(|_| ()),
        Subcommand::SweepM => run_sweep_m(&config, spec),
        Subcommand::SweepAlpha => run_sweep_alpha(&config, spec),
        Subcommand::Oracle => run_oracle(&config, spec),
    }
}

fn solve_options(config: &FileConfig, seed: u64) -> SolveOptions {
    SolveOptions {
        schedule: config.schedule(),
        seed,
        ..SolveOptions::default()
    }
}

#[derive(Serialize)]
struct StageReport {
    stage: usize,
    tech: String,
    time_min: f64,
    temp_c: f64,
}

#[derive(Serialize)]
struct SolveReport {
    path: String,
    encoding: usize,
    stages: Vec<StageReport>,
    total_cost_j: f64,
    end_wet_basis: f64,
    converged: bool,
    outer_iterations: usize,
    final_max_weight: f64,
    seed: u64,
}

fn stage_reports(path: &TechPath, params: &[StageParams]) -> Vec<StageReport> {
    path.stages()
        .iter()
        .zip(params)
        .enumerate()
        .map(|(stage, (tech, p))| StageReport {
            stage: stage + 1,
            tech: tech.label().to_string(),
            time_min: p.time_min,
            temp_c: celsius_from_kelvin(p.temp_k),
        })
        .collect()
}

fn write_solve_outputs(
    result: &SolveResult,
    model: &DryingModel,
    out: &Path,
    seed: u64,
    verbose: bool,
) -> Result<(), AppError> {
    let report = SolveReport {
        path: result.best_path.to_string(),
        encoding: result.best_path.encoding(),
        stages: stage_reports(&result.best_path, &result.params),
        total_cost_j: result.total_cost,
        end_wet_basis: result.trajectory.last().expect("non-empty").wet_basis(),
        converged: result.converged,
        outer_iterations: result.outer_iterations,
        final_max_weight: result
            .final_distribution
            .weights()
            .iter()
            .copied()
            .fold(0.0, f64::max),
        seed,
    };
    write_json(&out.join("result.json"), &report)?;

    let mut profile = csv_writer(&out.join("profile.csv"))?;
    profile.write_record(["stage", "tech", "t_min", "T_C", "x_in", "x_out"])?;
    for (k, (tech, p)) in result
        .best_path
        .stages()
        .iter()
        .zip(&result.params)
        .enumerate()
    {
        profile.write_record([
            (k + 1).to_string(),
            tech.label().to_string(),
            sig10(p.time_min),
            sig10(celsius_from_kelvin(p.temp_k)),
            sig10(result.trajectory[k].wet_basis()),
            sig10(result.trajectory[k + 1].wet_basis()),
        ])?;
    }
    profile.flush()?;

    let mut trace = csv_writer(&out.join("trace.csv"))?;
    let mut header = vec![
        "iteration".to_string(),
        "beta".to_string(),
        "free_energy".to_string(),
        "max_weight".to_string(),
    ];
    for k in 1..=model.stage_count() {
        header.push(format!("t{k}_min"));
        header.push(format!("T{k}_C"));
    }
    trace.write_record(&header)?;
    for (i, point) in result.trace.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            sig10(point.beta),
            sig10(point.free_energy),
            sig10(point.max_weight),
        ];
        for p in &point.params {
            row.push(sig10(p.time_min));
            row.push(sig10(celsius_from_kelvin(p.temp_k)));
        }
        trace.write_record(&row)?;
        if verbose {
            eprintln!(
                "iter {i}: beta={:.3e} F={:.6e} max_p={:.4}",
                point.beta, point.free_energy, point.max_weight
            );
        }
    }
    trace.flush()?;
    Ok(())
}

fn run_solve(config: &FileConfig, spec: &RunSpec) -> Result<(), AppError> {
    let model = config.build_model()?;
    let allowed = config.allowed_sets()?;
    let opts = solve_options(config, spec.seed);
    match solve(&model, &allowed, None, &opts) {
        Ok(result) => {
            write_solve_outputs(&result, &model, &spec.output_dir, spec.seed, spec.verbose)
        }
        Err(SolveError::NotConverged(partial)) => {
            write_solve_outputs(&partial, &model, &spec.output_dir, spec.seed, spec.verbose)?;
            Err(AppError::NotConverged(
                "outer iteration cap reached; partial result written".into(),
            ))
        }
        Err(other) => Err(other.into()),
    }
}

#[derive(Serialize)]
struct BaselineEntry {
    tech: String,
    time_min: f64,
    temp_c: f64,
    cost_j: f64,
    end_wet_basis: f64,
    /// False when even the optimized schedule misses the moisture target.
    feasible: bool,
}

#[derive(Serialize)]
struct BaselineReport {
    ha: BaselineEntry,
    haus: BaselineEntry,
}

/// Optimal single-stage schedules for both technologies, by oracle-grade
/// search on the one-stage restriction of the config.
pub fn single_stage_baselines(
    config: &FileConfig,
    seed: u64,
) -> Result<(PathRecord, PathRecord), AppError> {
    let mut process = config.process();
    process.stages = 1;
    let mut model = DryingModel::new(process, config.kinetics())?;
    if let Some(x0) = config.process.x0_dry_basis {
        model = model.with_initial_state(MoistureState::from_dry_basis(x0)?);
    }
    let grid = config.grid_spec(seed);
    let ha = optimize_single_path(&model, &TechPath::new(vec![Technology::HotAir]), &grid)?;
    let haus = optimize_single_path(
        &model,
        &TechPath::new(vec![Technology::HotAirUltrasound]),
        &grid,
    )?;
    Ok((ha, haus))
}

fn baseline_entry(config: &FileConfig, record: &PathRecord) -> Result<BaselineEntry, AppError> {
    let mut process = config.process();
    process.stages = 1;
    let x_d = process.x_d;
    let mut model = DryingModel::new(process, config.kinetics())?;
    if let Some(x0) = config.process.x0_dry_basis {
        model = model.with_initial_state(MoistureState::from_dry_basis(x0)?);
    }
    let end = model
        .trajectory(&record.path, &record.params)
        .last()
        .expect("non-empty")
        .wet_basis();
    Ok(BaselineEntry {
        tech: record.path.stages()[0].label().to_string(),
        time_min: record.params[0].time_min,
        temp_c: celsius_from_kelvin(record.params[0].temp_k),
        cost_j: record.cost,
        end_wet_basis: end,
        feasible: end <= x_d + 1e-6,
    })
}

fn run_baseline(config: &FileConfig, spec: &RunSpec) -> Result<BaselineReport, AppError> {
    let (ha, haus) = single_stage_baselines(config, spec.seed)?;
    let report = BaselineReport {
        ha: baseline_entry(config, &ha)?,
        haus: baseline_entry(config, &haus)?,
    };
    write_json(&spec.output_dir.join("baseline.json"), &report)?;
    Ok(report)
}

enum SweepPoint {
    M(usize),
    Alpha(f64),
}

struct SweepRow {
    label: String,
    status: String,
    cost: Option<f64>,
    path: Option<String>,
    n_ha: Option<usize>,
    pct_vs_ha: Option<f64>,
    pct_vs_haus: Option<f64>,
}

fn sweep_config(base: &FileConfig, point: &SweepPoint) -> FileConfig {
    let mut cfg = base.clone();
    match point {
        SweepPoint::M(m) => cfg.process.stages = *m,
        SweepPoint::Alpha(a) => cfg.process.alpha = *a,
    }
    cfg
}

fn run_sweep(
    base: &FileConfig,
    spec: &RunSpec,
    points: Vec<SweepPoint>,
    label_header: &str,
) -> Result<(), AppError> {
    // Each point is an independent solver instance in the work pool;
    // results are aggregated in point order.
    let rows: Vec<Result<SweepRow, AppError>> = exec::map_slice(&points, |point| {
        let cfg = sweep_config(base, point);
        let label = match point {
            SweepPoint::M(m) => m.to_string(),
            SweepPoint::Alpha(a) => sig10(*a),
        };
        let (ha, haus) = single_stage_baselines(&cfg, spec.seed)?;
        let model = cfg.build_model()?;
        let allowed = cfg.allowed_sets()?;
        let opts = solve_options(&cfg, spec.seed);
        let (result, status) = match solve(&model, &allowed, None, &opts) {
            Ok(r) => (Some(r), "ok"),
            Err(SolveError::NotConverged(partial)) => (Some(*partial), "not_converged"),
            Err(_) => (None, "error"),
        };
        Ok(match result {
            Some(r) => SweepRow {
                label,
                status: status.to_string(),
                cost: Some(r.total_cost),
                path: Some(r.best_path.to_string()),
                n_ha: Some(r.best_path.count_of(Technology::HotAir)),
                pct_vs_ha: Some(100.0 * (ha.cost - r.total_cost) / ha.cost),
                pct_vs_haus: Some(100.0 * (haus.cost - r.total_cost) / haus.cost),
            },
            None => SweepRow {
                label,
                status: status.to_string(),
                cost: None,
                path: None,
                n_ha: None,
                pct_vs_ha: None,
                pct_vs_haus: None,
            },
        })
    });

    let mut writer = csv_writer(&spec.output_dir.join("sweep.csv"))?;
    writer.write_record([
        label_header,
        "status",
        "best_cost_j",
        "best_path",
        "n_ha_stages",
        "pct_vs_ha_baseline",
        "pct_vs_haus_baseline",
    ])?;
    let mut any_failed = false;
    for row in rows {
        let row = row?;
        if row.status != "ok" {
            any_failed = true;
        }
        let fmt_opt = |v: Option<f64>| v.map(sig10).unwrap_or_default();
        writer.write_record([
            row.label.clone(),
            row.status.clone(),
            fmt_opt(row.cost),
            row.path.clone().unwrap_or_default(),
            row.n_ha.map(|n| n.to_string()).unwrap_or_default(),
            fmt_opt(row.pct_vs_ha),
            fmt_opt(row.pct_vs_haus),
        ])?;
    }
    writer.flush()?;
    if any_failed {
        return Err(AppError::NotConverged(
            "one or more sweep points did not converge; partial results written".into(),
        ));
    }
    Ok(())
}

fn run_sweep_m(config: &FileConfig, spec: &RunSpec) -> Result<(), AppError> {
    let points = config
        .sweep
        .m_values
        .iter()
        .map(|&m| SweepPoint::M(m))
        .collect();
    run_sweep(config, spec, points, "m")
}

fn run_sweep_alpha(config: &FileConfig, spec: &RunSpec) -> Result<(), AppError> {
    let points = config
        .sweep
        .alpha_values
        .iter()
        .map(|&a| SweepPoint::Alpha(a))
        .collect();
    run_sweep(config, spec, points, "alpha")
}

fn run_simulate(config: &FileConfig, spec: &RunSpec) -> Result<(), AppError> {
    let sim = config.simulate.as_ref().ok_or_else(|| {
        AppError::Config("simulate requires a `simulate` section in the config".into())
    })?;
    let path: TechPath = sim
        .path
        .parse()
        .map_err(|e: String| AppError::Config(format!("simulate.path: {e}")))?;
    if path.len() != sim.stages.len() {
        return Err(AppError::Config(format!(
            "simulate.path has {} stages but simulate.stages has {}",
            path.len(),
            sim.stages.len()
        )));
    }
    if sim.samples_per_stage == 0 {
        return Err(AppError::Config("simulate.samples_per_stage must be positive".into()));
    }
    let model = config.build_model()?;
    let kc = model.kinetics();

    let mut writer = csv_writer(&spec.output_dir.join("trajectory.csv"))?;
    writer.write_record(["cumulative_min", "wet_basis", "tech", "T_C"])?;

    let mut x = model.initial_state();
    let mut elapsed = 0.0;
    writer.write_record([
        sig10(0.0),
        sig10(x.wet_basis()),
        String::new(),
        String::new(),
    ])?;
    for (stage, (&tech, sim_stage)) in path.stages().iter().zip(&sim.stages).enumerate() {
        let temp_k = drypath_core::kinetics::kelvin_from_celsius(sim_stage.temp_c);
        for j in 1..=sim.samples_per_stage {
            let partial = sim_stage.time_min * j as f64 / sim.samples_per_stage as f64;
            let state = step(tech, x, StageParams::new(partial, temp_k), kc)
                .map_err(|e| AppError::Model(format!("stage {}: {e}", stage + 1)))?;
            writer.write_record([
                sig10(elapsed + partial),
                sig10(state.wet_basis()),
                tech.label().to_string(),
                sig10(sim_stage.temp_c),
            ])?;
        }
        x = step(tech, x, StageParams::new(sim_stage.time_min, temp_k), kc)
            .map_err(|e| AppError::Model(format!("stage {}: {e}", stage + 1)))?;
        elapsed += sim_stage.time_min;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct OracleJsonRecord {
    encoding: usize,
    path: String,
    cost_j: f64,
    stages: Vec<StageReport>,
}

#[derive(Serialize)]
struct OracleJsonReport {
    per_path: Vec<OracleJsonRecord>,
    global_best_encoding: usize,
    grid: GridSpecReport,
}

#[derive(Serialize)]
struct GridSpecReport {
    t_points: usize,
    temp_points: usize,
    multistarts: usize,
    t_hi: f64,
    descent_seeds: usize,
    seed: u64,
}

fn run_oracle(config: &FileConfig, spec: &RunSpec) -> Result<(), AppError> {
    let model = config.build_model()?;
    let allowed = config.allowed_sets()?;
    let grid = config.grid_spec(spec.seed);
    let report = exhaustive_solve(&model, &allowed, &grid)?;

    let json = OracleJsonReport {
        per_path: report
            .per_path
            .iter()
            .map(|r| OracleJsonRecord {
                encoding: r.path.encoding(),
                path: r.path.to_string(),
                cost_j: r.cost,
                stages: stage_reports(&r.path, &r.params),
            })
            .collect(),
        global_best_encoding: report.global_best.path.encoding(),
        grid: GridSpecReport {
            t_points: grid.t_points,
            temp_points: grid.temp_points,
            multistarts: grid.multistarts,
            t_hi: grid.t_hi,
            descent_seeds: grid.descent_seeds,
            seed: grid.seed,
        },
    };
    write_json(&spec.output_dir.join("oracle.json"), &json)?;

    let mut writer = csv_writer(&spec.output_dir.join("oracle.csv"))?;
    writer.write_record([
        "encoding",
        "path",
        "total_cost_j",
        "stage",
        "tech",
        "t_min",
        "T_C",
        "is_global_best",
    ])?;
    for record in &report.per_path {
        let is_best = record.path == report.global_best.path;
        for (k, (tech, p)) in record.path.stages().iter().zip(&record.params).enumerate() {
            writer.write_record([
                record.path.encoding().to_string(),
                record.path.to_string(),
                sig10(record.cost),
                (k + 1).to_string(),
                tech.label().to_string(),
                sig10(p.time_min),
                sig10(celsius_from_kelvin(p.temp_k)),
                (is_best as u8).to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}
