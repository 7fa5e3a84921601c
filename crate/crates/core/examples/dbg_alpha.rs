use drypath_core::anneal::{solve, AnnealSchedule, SolveOptions};
use drypath_core::kinetics::{KineticsConstants, Technology};
use drypath_core::oracle::{exhaustive_solve, GridSpec};
use drypath_core::path::full_technology_sets;
use drypath_core::process::{DryingModel, ProcessConfig};
use std::time::Instant;

fn tuned_kc() -> KineticsConstants {
    KineticsConstants {
        k0_coeffs: [-0.01016925, 6.993350, -1169.0175],
        negate_k0: false,
        ..KineticsConstants::default()
    }
}

fn main() {
    // Ground truth for the wobbling alpha points and the M=4 miss.
    let cases: Vec<(usize, f64)> = vec![
        (4, 0.5),
        (5, 0.1),
        (5, 1.0 / 15.0),
        (5, 0.05),
        (5, 0.04),
        (5, 0.2),
    ];
    for (m, alpha) in cases {
        let cfg = ProcessConfig {
            alpha,
            stages: m,
            ..ProcessConfig::default()
        };
        let model = DryingModel::new(cfg, tuned_kc()).unwrap();
        let t0 = Instant::now();
        let report = exhaustive_solve(&model, &full_technology_sets(m), &GridSpec::default()).unwrap();
        let truth = &report.global_best;
        let n_ha_true = truth.path.count_of(Technology::HotAir);

        for zeta in [1.1, 1.05] {
            for strong in [false, true] {
                let inner = if strong {
                    drypath_core::minimize::MinimizeOptions {
                        gtol: 1e-8,
                        max_iters: 400,
                        ..Default::default()
                    }
                } else {
                    drypath_core::minimize::MinimizeOptions {
                        max_iters: 200,
                        ..Default::default()
                    }
                };
                let opts = SolveOptions {
                    schedule: AnnealSchedule {
                        zeta,
                        ..AnnealSchedule::default()
                    },
                    inner,
                    ..SolveOptions::default()
                };
                let r = solve(&model, &full_technology_sets(m), None, &opts).unwrap();
                println!(
                    "M={m} alpha={alpha:.4} zeta={zeta} strong={strong}: solve={} ({:.1}) vs truth={} ({:.1}) n_ha_true={n_ha_true} match={} t={:.0}s",
                    r.best_path,
                    r.total_cost,
                    truth.path,
                    truth.cost,
                    r.best_path == truth.path,
                    t0.elapsed().as_secs_f64(),
                );
            }
        }
    }
}
