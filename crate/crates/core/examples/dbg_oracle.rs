use drypath_core::anneal::{solve, SolveOptions};
use drypath_core::kinetics::{KineticsConstants, StageParams, Technology};
use drypath_core::math::central_difference;
use drypath_core::minimize::{minimize_box, MinimizeOptions};
use drypath_core::model::{flatten_params, unflatten_params, PathCostModel};
use drypath_core::oracle::{optimize_single_path, GridSpec};
use drypath_core::path::{full_technology_sets, Path};
use drypath_core::process::{DryingModel, ProcessConfig};

fn main() {
    let cfg = ProcessConfig {
        stages: 3,
        ..ProcessConfig::default()
    };
    let model = DryingModel::new(cfg, KineticsConstants::default()).unwrap();
    let path = Path::new(vec![Technology::HotAir; 3]);

    let rec = optimize_single_path(&model, &path, &GridSpec::default()).unwrap();
    println!("oracle per-path: cost={:.3} params={:?}", rec.cost, rec.params);

    let solved = solve(
        &model,
        &full_technology_sets(3),
        None,
        &SolveOptions::default(),
    )
    .unwrap();
    println!(
        "annealer: cost={:.3} path={} params={:?}",
        solved.total_cost, solved.best_path, solved.params
    );

    // Manual snapped-space polish from the oracle's winner.
    let f_snap = |flat: &[f64]| {
        let p = unflatten_params(flat);
        match model.restore_feasibility(&path, &p) {
            Some(r) => model.cost(&path, &r),
            None => model.cost(&path, &p),
        }
    };
    let bounds = model.bounds();
    let out = minimize_box(
        &f_snap,
        |flat| central_difference(&f_snap, flat),
        &flatten_params(&rec.params),
        &bounds.flat_lower(3),
        &bounds.flat_upper(3),
        &MinimizeOptions {
            gtol: 1e-10,
            max_iters: 400,
            newton_polish: false,
            ..MinimizeOptions::default()
        },
    )
    .unwrap();
    println!(
        "manual snap polish: start={:.3} end={:.3} iters={} status={:?}",
        f_snap(&flatten_params(&rec.params)),
        out.value,
        out.iterations,
        out.status
    );
    println!("  end params={:?}", unflatten_params(&out.x));

    // And from the annealer's winner, to compare landscapes.
    let out2 = minimize_box(
        &f_snap,
        |flat| central_difference(&f_snap, flat),
        &flatten_params(&solved.params),
        &bounds.flat_lower(3),
        &bounds.flat_upper(3),
        &MinimizeOptions {
            gtol: 1e-10,
            max_iters: 400,
            newton_polish: false,
            ..MinimizeOptions::default()
        },
    )
    .unwrap();
    println!(
        "from annealer params: end={:.3} status={:?}",
        out2.value, out2.status
    );
}

// (appended diagnostics are invoked from main via include trick not used;
// quick check lives in a second binary below)
