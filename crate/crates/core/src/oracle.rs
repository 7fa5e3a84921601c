//! Brute-force reference optimizer for validating the annealing solver at
//! small stage counts.
//!
//! Every permitted path is optimized independently: a deterministic grid
//! phase seeds a set of candidate points (a full Cartesian product grid up
//! to two stages, per-stage coordinate-descent sweeps up to four, multistart
//! only beyond that), low-discrepancy multistarts are always added, and each
//! candidate is refined by projected-gradient descent. The global best is a
//! reference value, not a certificate: comparisons against it must allow for
//! the grid resolution.

use crate::exec;
use crate::kinetics::{StageParams, Technology};
use crate::math::halton_points;
use crate::minimize::{minimize_box, MinimizeError, MinimizeOptions, MinimizeOutcome};
use crate::model::{flatten_params, unflatten_params, PathCostModel};
use crate::path::{enumerate_paths, Path, PathSpaceError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum stage count for the full-grid / coordinate-grid phase.
pub const FULL_GRID_MAX_STAGES: usize = 4;
/// Maximum stage count the oracle accepts at all (multistart-only beyond
/// the grid cap).
pub const ORACLE_MAX_STAGES: usize = 6;
/// Maximum number of paths an exhaustive report may cover.
pub const ORACLE_MAX_PATHS: usize = 64;

/// Search-space discretization of the oracle.
///
/// `t_hi` bounds the residence-time grid only; descent refinement keeps the
/// time coordinate unbounded above, like the annealer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_points: usize,
    pub temp_points: usize,
    pub multistarts: usize,
    pub t_hi: f64,
    /// How many of the best grid points are refined by descent.
    pub descent_seeds: usize,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            t_points: 24,
            temp_points: 24,
            multistarts: 32,
            t_hi: 120.0,
            descent_seeds: 8,
            seed: 0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.t_points < 16 || self.temp_points < 16 {
            return Err(OracleError::GridTooCoarse {
                t_points: self.t_points,
                temp_points: self.temp_points,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error)]
pub enum OracleError {
    #[error("grid needs at least 16 points per axis, got ({t_points}, {temp_points})")]
    GridTooCoarse { t_points: usize, temp_points: usize },
    #[error("{stages} stages exceed the oracle cap of {cap}")]
    SpaceTooLarge { stages: usize, cap: usize },
    #[error("{count} paths exceed the exhaustive cap of {cap}")]
    TooManyPaths { count: usize, cap: usize },
    #[error(transparent)]
    PathSpace(#[from] PathSpaceError),
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
}

/// Best parameters and cost found for one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub path: Path,
    pub params: Vec<StageParams>,
    pub cost: f64,
}

/// Per-path optima and the global best across all permitted paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub per_path: Vec<PathRecord>,
    pub global_best: PathRecord,
    pub grid_spec: GridSpec,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Keeps the `cap` lowest-cost flat points seen, in deterministic order.
struct BestSet {
    cap: usize,
    entries: Vec<(f64, Vec<f64>)>,
}

impl BestSet {
    fn new(cap: usize) -> Self {
        BestSet {
            cap: cap.max(1),
            entries: Vec::new(),
        }
    }

    fn offer(&mut self, cost: f64, point: &[f64]) {
        if self.entries.len() < self.cap {
            self.entries.push((cost, point.to_vec()));
            self.entries
                .sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite costs"));
            return;
        }
        let worst = self.entries.last().expect("non-empty").0;
        if cost < worst {
            self.entries.pop();
            self.entries.push((cost, point.to_vec()));
            self.entries
                .sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite costs"));
        }
    }
}

/// Optimizes the continuous parameters of a single path.
pub fn optimize_single_path<M: PathCostModel>(
    model: &M,
    path: &Path,
    spec: &GridSpec,
) -> Result<PathRecord, OracleError> {
    optimize_single_path_with_seeds(model, path, spec, &[])
}

/// [`optimize_single_path`] with extra caller-provided starting points for
/// the descent refinement (the annealer reuses this with its annealed
/// parameters as a seed).
pub fn optimize_single_path_with_seeds<M: PathCostModel>(
    model: &M,
    path: &Path,
    spec: &GridSpec,
    extra_seeds: &[Vec<StageParams>],
) -> Result<PathRecord, OracleError> {
    spec.validate()?;
    let stages = path.len();
    if stages > ORACLE_MAX_STAGES {
        return Err(OracleError::SpaceTooLarge {
            stages,
            cap: ORACLE_MAX_STAGES,
        });
    }
    let bounds = model.bounds();
    let t_grid = linspace(bounds.time_lo, spec.t_hi.max(bounds.time_lo), spec.t_points);
    let temp_grid = linspace(bounds.temp_lo, bounds.temp_hi, spec.temp_points);
    let eval = |flat: &[f64]| model.cost(path, &unflatten_params(flat));

    let mut best_raw: Option<(f64, Vec<f64>)> = None;
    let mut seeds = BestSet::new(spec.descent_seeds);
    let offer = |cost: f64, point: &[f64], best_raw: &mut Option<(f64, Vec<f64>)>| {
        if best_raw.as_ref().is_none_or(|(c, _)| cost < *c) {
            *best_raw = Some((cost, point.to_vec()));
        }
    };

    if stages <= 2 {
        // Full Cartesian product grid.
        let mut point = vec![0.0; 2 * stages];
        let axes: Vec<&[f64]> = (0..2 * stages)
            .map(|i| {
                if i % 2 == 0 {
                    t_grid.as_slice()
                } else {
                    temp_grid.as_slice()
                }
            })
            .collect();
        let mut index = vec![0usize; 2 * stages];
        'product: loop {
            for (i, axis) in axes.iter().enumerate() {
                point[i] = axis[index[i]];
            }
            let cost = eval(&point);
            offer(cost, &point, &mut best_raw);
            seeds.offer(cost, &point);
            let mut d = 0;
            loop {
                if d == index.len() {
                    break 'product;
                }
                index[d] += 1;
                if index[d] < axes[d].len() {
                    break;
                }
                index[d] = 0;
                d += 1;
            }
        }
    } else if stages <= FULL_GRID_MAX_STAGES {
        // Cyclic coordinate descent over per-stage (t, T) grids from a few
        // deterministic starting profiles.
        let starts = [
            (0.25, 0.25),
            (0.25, 0.75),
            (0.75, 0.25),
            (0.75, 0.75),
            (0.5, 0.5),
        ];
        for &(ft, ftemp) in &starts {
            let mut point: Vec<f64> = (0..stages)
                .flat_map(|_| {
                    [
                        t_grid[((t_grid.len() - 1) as f64 * ft) as usize],
                        temp_grid[((temp_grid.len() - 1) as f64 * ftemp) as usize],
                    ]
                })
                .collect();
            let mut current = eval(&point);
            offer(current, &point, &mut best_raw);
            seeds.offer(current, &point);
            for _sweep in 0..12 {
                let mut improved = false;
                for k in 0..stages {
                    let mut stage_best = (current, point[2 * k], point[2 * k + 1]);
                    for &t in &t_grid {
                        for &temp in &temp_grid {
                            point[2 * k] = t;
                            point[2 * k + 1] = temp;
                            let cost = eval(&point);
                            seeds.offer(cost, &point);
                            if cost < stage_best.0 {
                                stage_best = (cost, t, temp);
                            }
                        }
                    }
                    point[2 * k] = stage_best.1;
                    point[2 * k + 1] = stage_best.2;
                    if stage_best.0 < current - 1e-12 * (1.0 + current.abs()) {
                        improved = true;
                    }
                    current = stage_best.0;
                }
                offer(current, &point, &mut best_raw);
                if !improved {
                    break;
                }
            }
        }
    }

    // Low-discrepancy multistarts over the bounded search box.
    let mut descent_seeds: Vec<Vec<f64>> = halton_points(spec.multistarts, 2 * stages, spec.seed)
        .into_iter()
        .map(|u| {
            (0..stages)
                .flat_map(|k| {
                    [
                        bounds.time_lo + u[2 * k] * (spec.t_hi - bounds.time_lo).max(0.0),
                        bounds.temp_lo + u[2 * k + 1] * (bounds.temp_hi - bounds.temp_lo),
                    ]
                })
                .collect()
        })
        .collect();
    for (_, point) in &seeds.entries {
        descent_seeds.push(point.clone());
    }
    for seed in model.suggest_seeds(path) {
        descent_seeds.push(flatten_params(&seed));
    }
    for seed in extra_seeds {
        descent_seeds.push(flatten_params(seed));
    }
    // Raw evaluations of every descent seed, so the multistart-only stage
    // counts also have a raw incumbent.
    for point in &descent_seeds {
        let cost = eval(point);
        offer(cost, point, &mut best_raw);
    }

    // Refinement: projected descent with the same box as the annealer
    // (time unbounded above).
    let lo = bounds.flat_lower(stages);
    let hi = bounds.flat_upper(stages);
    let polish = MinimizeOptions::polish();
    let grad = |flat: &[f64]| model.cost_grad(path, &unflatten_params(flat)).1;
    let refined = exec::map_slice(&descent_seeds, |seed| {
        minimize_box(eval, grad, seed, &lo, &hi, &polish)
    });

    // Candidates are compared after feasibility restoration: the reported
    // optimum is the restored point, so the selection metric must be the
    // restored cost as well.
    let restored = |params: Vec<StageParams>| -> (Vec<StageParams>, f64) {
        match model.restore_feasibility(path, &params) {
            Some(r) => {
                let cost = model.cost(path, &r);
                (r, cost)
            }
            None => {
                let cost = model.cost(path, &params);
                (params, cost)
            }
        }
    };
    fn consider(
        best: &mut Option<(Vec<StageParams>, f64)>,
        candidate: (Vec<StageParams>, f64),
    ) {
        if best.as_ref().is_none_or(|(_, c)| candidate.1 < *c) {
            *best = Some(candidate);
        }
    }
    let mut best: Option<(Vec<StageParams>, f64)> = None;
    let raw_best = best_raw.expect("grid or multistart evaluated at least one point");
    consider(&mut best, restored(unflatten_params(&raw_best.1)));
    // Raw caller seeds compete directly so a carefully constructed seed is
    // never lost to a descent that drifted in the soft directions.
    for seed in extra_seeds {
        consider(&mut best, restored(seed.clone()));
    }
    let mut refined_best: Option<(f64, Vec<f64>)> = None;
    for outcome in refined {
        let out = outcome?;
        if refined_best.as_ref().is_none_or(|(v, _)| out.value < *v) {
            refined_best = Some((out.value, out.x.clone()));
        }
        consider(&mut best, restored(unflatten_params(&out.x)));
    }
    // One more pass from the raw winner with fresh step-length state; cheap
    // and occasionally recovers a stalled line search.
    if let Some((_, x)) = refined_best {
        let rerun = minimize_box(eval, grad, &x, &lo, &hi, &polish)?;
        consider(&mut best, restored(unflatten_params(&rerun.x)));
    }

    // When the model restores points onto a constraint, the reported metric
    // is the restored cost; polish directly in that space so the winner is
    // a local optimum of what actually gets reported, not of the penalized
    // surrogate.
    let f_snap = |flat: &[f64]| {
        let p = unflatten_params(flat);
        match model.restore_feasibility(path, &p) {
            Some(r) => model.cost(path, &r),
            None => model.cost(path, &p),
        }
    };
    let snap_opts = MinimizeOptions {
        gtol: 1e-10,
        max_iters: 400,
        newton_polish: false,
        nonmonotone_window: 10,
        ..MinimizeOptions::default()
    };
    let snap_polish = |from: &[StageParams]| -> Result<MinimizeOutcome, MinimizeError> {
        minimize_box(
            &f_snap,
            |flat| crate::math::central_difference(&f_snap, flat),
            &flatten_params(from),
            &lo,
            &hi,
            &snap_opts,
        )
    };

    let (seed_params, _) = best.clone().expect("at least one candidate");
    if model.restore_feasibility(path, &seed_params).is_some() {
        let out = snap_polish(&seed_params)?;
        consider(&mut best, restored(unflatten_params(&out.x)));

        // Structure-exploring rounds: model-suggested coordinated moves
        // around the incumbent, re-polished whenever one wins.
        for _ in 0..2 {
            let (incumbent, incumbent_cost) = best.clone().expect("has candidate");
            let mut advanced = false;
            for candidate in model.improve_candidates(path, &incumbent) {
                consider(&mut best, restored(candidate));
            }
            if let Some((winner, cost)) = best.clone() {
                if cost < incumbent_cost - 1e-12 * (1.0 + incumbent_cost.abs()) {
                    let out = snap_polish(&winner)?;
                    consider(&mut best, restored(unflatten_params(&out.x)));
                    advanced = true;
                }
            }
            if !advanced {
                break;
            }
        }
    }

    let (params, cost) = best.expect("at least one candidate");
    Ok(PathRecord {
        path: path.clone(),
        params,
        cost,
    })
}

/// Optimizes every permitted path and reports per-path and global optima.
/// Deterministic for a fixed `GridSpec` (including its seed).
pub fn exhaustive_solve<M: PathCostModel>(
    model: &M,
    allowed: &[Vec<Technology>],
    spec: &GridSpec,
) -> Result<OracleReport, OracleError> {
    spec.validate()?;
    let paths = enumerate_paths(allowed)?;
    if paths.len() > ORACLE_MAX_PATHS {
        return Err(OracleError::TooManyPaths {
            count: paths.len(),
            cap: ORACLE_MAX_PATHS,
        });
    }
    let records = exec::map_slice(&paths, |path| optimize_single_path(model, path, spec));
    let mut per_path = Vec::with_capacity(records.len());
    for record in records {
        per_path.push(record?);
    }
    // Ties break toward the smallest encoding (enumeration order).
    let global_best = per_path
        .iter()
        .fold(None::<&PathRecord>, |best, r| match best {
            Some(b) if b.cost <= r.cost => Some(b),
            _ => Some(r),
        })
        .expect("at least one path")
        .clone();
    Ok(OracleReport {
        per_path,
        global_best,
        grid_spec: *spec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParamBounds;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use Technology::{HotAir as HA, HotAirUltrasound as HAUS};

    /// Separable convex quadratic in (t, T) per stage; used to self-test the
    /// search harness against an analytic minimum.
    struct QuadraticModel {
        stages: usize,
        t_center: f64,
        temp_center: f64,
    }

    impl PathCostModel for QuadraticModel {
        fn stage_count(&self) -> usize {
            self.stages
        }

        fn bounds(&self) -> ParamBounds {
            ParamBounds::new(2.0, 303.15, 343.15)
        }

        fn cost(&self, path: &Path, params: &[StageParams]) -> f64 {
            // Mildly technology-dependent so distinct paths differ.
            let offset: f64 = path
                .stages()
                .iter()
                .map(|t| t.index() as f64 * 0.5)
                .sum();
            params
                .iter()
                .map(|p| {
                    (p.time_min - self.t_center).powi(2)
                        + 0.1 * (p.temp_k - self.temp_center).powi(2)
                })
                .sum::<f64>()
                + offset
        }
    }

    #[test]
    fn quadratic_minimum_is_recovered() {
        let model = QuadraticModel {
            stages: 2,
            t_center: 37.5,
            temp_center: 321.0,
        };
        let path = Path::new(vec![HA, HA]);
        let record = optimize_single_path(&model, &path, &GridSpec::default()).unwrap();
        assert_abs_diff_eq!(record.cost, 0.0, epsilon = 1e-8);
        for p in &record.params {
            assert_abs_diff_eq!(p.time_min, 37.5, epsilon = 1e-4);
            assert_abs_diff_eq!(p.temp_k, 321.0, epsilon = 1e-4);
        }
    }

    #[test]
    fn quadratic_minimum_on_bound_is_projected() {
        let model = QuadraticModel {
            stages: 1,
            t_center: -10.0,
            temp_center: 400.0,
        };
        let path = Path::new(vec![HA]);
        let record = optimize_single_path(&model, &path, &GridSpec::default()).unwrap();
        assert_abs_diff_eq!(record.params[0].time_min, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(record.params[0].temp_k, 343.15, epsilon = 1e-9);
    }

    #[test]
    fn exhaustive_report_shape_and_global_best() {
        let model = QuadraticModel {
            stages: 2,
            t_center: 30.0,
            temp_center: 320.0,
        };
        let allowed = vec![vec![HA, HAUS]; 2];
        let report = exhaustive_solve(&model, &allowed, &GridSpec::default()).unwrap();
        assert_eq!(report.per_path.len(), 4);
        let min = report
            .per_path
            .iter()
            .map(|r| r.cost)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(report.global_best.cost, min);
        // All-HA has the smallest technology offset, so it must win.
        assert_eq!(report.global_best.path.encoding(), 0);
    }

    #[test]
    fn forced_technology_sets_yield_one_record() {
        let model = QuadraticModel {
            stages: 3,
            t_center: 30.0,
            temp_center: 320.0,
        };
        let allowed = vec![vec![HA]; 3];
        let report = exhaustive_solve(&model, &allowed, &GridSpec::default()).unwrap();
        assert_eq!(report.per_path.len(), 1);
        assert_eq!(report.global_best.path.to_string(), "HA-HA-HA");
    }

    #[test]
    fn determinism_for_fixed_spec() {
        let model = QuadraticModel {
            stages: 3,
            t_center: 55.0,
            temp_center: 312.0,
        };
        let allowed = vec![vec![HA, HAUS]; 3];
        let spec = GridSpec {
            t_points: 16,
            temp_points: 16,
            multistarts: 8,
            ..GridSpec::default()
        };
        let a = exhaustive_solve(&model, &allowed, &spec).unwrap();
        let b = exhaustive_solve(&model, &allowed, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_refinement_never_worsens_the_best() {
        let model = QuadraticModel {
            stages: 2,
            t_center: 41.0,
            temp_center: 331.0,
        };
        let allowed = vec![vec![HA, HAUS]; 2];
        let coarse_spec = GridSpec {
            t_points: 16,
            temp_points: 16,
            ..GridSpec::default()
        };
        // Nested doubling keeps every coarse grid point in the fine grid.
        let fine_spec = GridSpec {
            t_points: 31,
            temp_points: 31,
            ..coarse_spec
        };
        let coarse = exhaustive_solve(&model, &allowed, &coarse_spec).unwrap();
        let fine = exhaustive_solve(&model, &allowed, &fine_spec).unwrap();
        assert!(fine.global_best.cost <= coarse.global_best.cost + 1e-9);
    }

    #[test]
    fn stage_cap_and_grid_floor_are_enforced() {
        let model = QuadraticModel {
            stages: 7,
            t_center: 30.0,
            temp_center: 320.0,
        };
        let path = Path::new(vec![HA; 7]);
        assert!(matches!(
            optimize_single_path(&model, &path, &GridSpec::default()),
            Err(OracleError::SpaceTooLarge { .. })
        ));
        let bad = GridSpec {
            t_points: 8,
            ..GridSpec::default()
        };
        let model2 = QuadraticModel {
            stages: 1,
            t_center: 30.0,
            temp_center: 320.0,
        };
        assert!(matches!(
            optimize_single_path(&model2, &Path::new(vec![HA]), &bad),
            Err(OracleError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn permuting_equal_stages_leaves_cost_unchanged() {
        // Drying model: duplicated stage structure evaluated in both orders.
        let cfg = crate::process::ProcessConfig {
            stages: 2,
            ..Default::default()
        };
        let model =
            crate::process::DryingModel::new(cfg, crate::kinetics::KineticsConstants::default())
                .unwrap();
        let path = Path::new(vec![HAUS, HAUS]);
        let a = vec![StageParams::new(20.0, 330.0), StageParams::new(35.0, 330.0)];
        let b = vec![StageParams::new(35.0, 330.0), StageParams::new(20.0, 330.0)];
        let ca = model.cost(&path, &a);
        let cb = model.cost(&path, &b);
        assert_relative_eq!(ca, cb, max_relative = 1e-9);
    }
}
