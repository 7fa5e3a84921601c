use drypath_core::kinetics::{KineticsConstants, StageParams, Technology};
use drypath_core::math::central_difference;
use drypath_core::model::{flatten_params, unflatten_params, PathCostModel};
use drypath_core::path::Path;
use drypath_core::process::{DryingModel, ProcessConfig};

fn main() {
    let cfg = ProcessConfig {
        stages: 3,
        ..ProcessConfig::default()
    };
    let model = DryingModel::new(cfg, KineticsConstants::default()).unwrap();
    let path = Path::new(vec![Technology::HotAir; 3]);
    let params = vec![
        StageParams::new(14.317882816045843, 303.15),
        StageParams::new(30.63311047452523, 303.15),
        StageParams::new(11.454484463929047, 303.15),
    ];
    let f_snap = |flat: &[f64]| {
        let p = unflatten_params(flat);
        match model.restore_feasibility(&path, &p) {
            Some(r) => model.cost(&path, &r),
            None => model.cost(&path, &p),
        }
    };
    let flat = flatten_params(&params);
    println!("f at point: {:.6}", f_snap(&flat));
    println!("fd grad: {:?}", central_difference(&f_snap, &flat));

    // Scan T3 with everything else fixed.
    for i in 0..15 {
        let temp3 = 303.15 + i as f64 * 0.5;
        let mut p = params.clone();
        p[2].temp_k = temp3;
        let r = model.restore_feasibility(&path, &p).unwrap();
        println!(
            "T3={temp3:.2} -> t3_snap={:.4} cost={:.3}",
            r[2].time_min,
            model.cost(&path, &r)
        );
    }
    // And T1.
    for i in 0..6 {
        let temp1 = 303.15 + i as f64 * 1.0;
        let mut p = params.clone();
        p[0].temp_k = temp1;
        let r = model.restore_feasibility(&path, &p).unwrap();
        println!("T1={temp1:.2} -> cost={:.3}", model.cost(&path, &r));
    }
}
