use drypath_core::anneal::{solve, SolveOptions};
use drypath_core::kinetics::{KineticsConstants, Technology};
use drypath_core::oracle::{exhaustive_solve, optimize_single_path, GridSpec};
use drypath_core::path::{full_technology_sets, Path};
use drypath_core::process::{DryingModel, ProcessConfig};
use std::time::Instant;

fn baselines(cfg: &ProcessConfig, kc: &KineticsConstants) -> (f64, f64) {
    let mut c1 = cfg.clone();
    c1.stages = 1;
    let model = DryingModel::new(c1, kc.clone()).unwrap();
    let spec = GridSpec::default();
    let ha = optimize_single_path(&model, &Path::new(vec![Technology::HotAir]), &spec).unwrap();
    let haus = optimize_single_path(
        &model,
        &Path::new(vec![Technology::HotAirUltrasound]),
        &spec,
    )
    .unwrap();
    (ha.cost, haus.cost)
}

fn run_m_sweep(name: &str, kc: &KineticsConstants, alpha: f64, stages_list: &[usize]) {
    let base_cfg = ProcessConfig {
        alpha,
        ..ProcessConfig::default()
    };
    let (b_ha, b_haus) = baselines(&base_cfg, kc);
    println!("[{name}] alpha={alpha} baseline HA={b_ha:.1} HAUS={b_haus:.1} ratio={:.3}", b_ha / b_haus);
    for &m in stages_list {
        let cfg = ProcessConfig {
            alpha,
            stages: m,
            ..ProcessConfig::default()
        };
        let model = DryingModel::new(cfg, kc.clone()).unwrap();
        let t0 = Instant::now();
        let res = solve(&model, &full_technology_sets(m), None, &SolveOptions::default());
        let dt = t0.elapsed().as_secs_f64();
        match res {
            Ok(r) => {
                let slack = r.total_cost - b_ha.min(b_haus);
                println!(
                    "  M={m}: cost={:.2} path={} iters={} t={:.1}s end_x={:.8} slack_vs_base={:.3e}",
                    r.total_cost,
                    r.best_path,
                    r.outer_iterations,
                    dt,
                    r.trajectory.last().unwrap().wet_basis(),
                    slack,
                );
            }
            Err(e) => println!("  M={m}: ERROR {e} ({dt:.1}s)"),
        }
    }
}

fn main() {
    let default_kc = KineticsConstants::default();
    run_m_sweep("default", &default_kc, 0.5, &[1, 2, 3, 4, 5, 6]);

    // Tuned regime: hot-air rate scaled down from the ultrasound fit so the
    // combined process dominates, as in the reference experiments.
    let tuned_kc = KineticsConstants {
        k0_coeffs: [-0.01016925, 6.993350, -1169.0175],
        negate_k0: false,
        ..KineticsConstants::default()
    };
    run_m_sweep("tuned", &tuned_kc, 0.5, &[1, 2, 3, 4, 5, 6]);

    // Alpha sweep at M=5 under the tuned regime.
    for &alpha in &[0.5, 0.2, 0.1, 1.0 / 15.0, 0.05, 0.04] {
        let cfg = ProcessConfig {
            alpha,
            stages: 5,
            ..ProcessConfig::default()
        };
        let model = DryingModel::new(cfg.clone(), tuned_kc.clone()).unwrap();
        let t0 = Instant::now();
        match solve(&model, &full_technology_sets(5), None, &SolveOptions::default()) {
            Ok(r) => {
                let n_ha = r.best_path.count_of(Technology::HotAir);
                let (b_ha, b_haus) = baselines(&cfg, &tuned_kc);
                println!(
                    "[alpha {alpha:.4}] path={} n_ha={n_ha} cost={:.1} bHA={b_ha:.1} bUS={b_haus:.1} pct_vs_best_base={:.2}% t={:.1}s",
                    r.best_path,
                    r.total_cost,
                    100.0 * (b_ha.min(b_haus) - r.total_cost) / b_ha.min(b_haus),
                    t0.elapsed().as_secs_f64(),
                );
            }
            Err(e) => println!("[alpha {alpha:.4}] ERROR {e}"),
        }
    }

    // Oracle agreement at M=2,3 (default config).
    for m in [2usize, 3] {
        let cfg = ProcessConfig {
            stages: m,
            ..ProcessConfig::default()
        };
        let model = DryingModel::new(cfg, default_kc.clone()).unwrap();
        let t0 = Instant::now();
        let r = solve(&model, &full_technology_sets(m), None, &SolveOptions::default()).unwrap();
        let o = exhaustive_solve(&model, &full_technology_sets(m), &GridSpec::default()).unwrap();
        println!(
            "[oracle M={m}] annealer={:.2} oracle={:.2} rel={:.3e} t={:.1}s",
            r.total_cost,
            o.global_best.cost,
            (r.total_cost - o.global_best.cost) / o.global_best.cost,
            t0.elapsed().as_secs_f64(),
        );
    }
}
