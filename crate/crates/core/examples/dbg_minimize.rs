use drypath_core::anneal::{free_energy, free_energy_value_grad, inner_minimize};
use drypath_core::kinetics::{KineticsConstants, StageParams};
use drypath_core::minimize::MinimizeOptions;
use drypath_core::model::PathCostModel;
use drypath_core::path::{enumerate_paths, full_technology_sets};
use drypath_core::process::{DryingModel, ProcessConfig};

fn main() {
    // Case 1: single HAUS stage from a cold start.
    let cfg = ProcessConfig {
        stages: 1,
        ..ProcessConfig::default()
    };
    let model = DryingModel::new(cfg, KineticsConstants::default()).unwrap();
    let paths = enumerate_paths(&[vec![
        drypath_core::kinetics::Technology::HotAirUltrasound,
    ]])
    .unwrap();
    let params0 = vec![StageParams::new(60.0, 335.0)];
    println!("start cost {}", model.cost(&paths[0], &params0));
    let inner = inner_minimize(
        &model,
        &paths,
        &params0,
        1.0,
        &MinimizeOptions {
            max_iters: 3000,
            ..MinimizeOptions::polish()
        },
    )
    .unwrap();
    println!(
        "case1: f={} params=({}, {}) status={:?} iters={}",
        inner.free_energy,
        inner.params[0].time_min,
        inner.params[0].temp_k,
        inner.status,
        inner.iterations,
    );

    // Case 2: two stages, tiny beta.
    let cfg = ProcessConfig {
        stages: 2,
        ..ProcessConfig::default()
    };
    let model = DryingModel::new(cfg, KineticsConstants::default()).unwrap();
    let paths = enumerate_paths(&full_technology_sets(2)).unwrap();
    let beta = 1e-12;
    let params0 = vec![StageParams::new(90.0, 320.0); 2];
    println!("start F {}", free_energy(&model, &paths, &params0, beta));
    let (f0, g0) = free_energy_value_grad(&model, &paths, &params0, beta);
    println!("f0={f0} g0={g0:?}");
    let inner = inner_minimize(
        &model,
        &paths,
        &params0,
        beta,
        &MinimizeOptions {
            max_iters: 2000,
            ..MinimizeOptions::polish()
        },
    )
    .unwrap();
    println!(
        "case2: f={} params={:?} status={:?} iters={}",
        inner.free_energy, inner.params, inner.status, inner.iterations
    );
}
