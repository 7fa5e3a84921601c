use drypath_core::anneal::{solve, SolveOptions};
use drypath_core::kinetics::{KineticsConstants, Technology};
use drypath_core::path::{full_technology_sets, Path};
use drypath_core::process::{DryingModel, ProcessConfig};

fn main() {
    let tuned = KineticsConstants {
        k0_coeffs: [-0.01016925, 6.993350, -1169.0175],
        negate_k0: false,
        ..KineticsConstants::default()
    };
    for (m, alpha) in [(5usize, 0.2f64), (5, 0.04), (5, 0.1), (4, 0.5)] {
        let cfg = ProcessConfig {
            alpha,
            stages: m,
            ..ProcessConfig::default()
        };
        let model = DryingModel::new(cfg, tuned.clone()).unwrap();
        let r = solve(&model, &full_technology_sets(m), None, &SolveOptions::default()).unwrap();
        let mut ranked: Vec<(usize, f64)> = r
            .final_distribution
            .weights()
            .iter()
            .copied()
            .enumerate()
            .collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        println!(
            "alpha={alpha:.3} M={m}: picked {} ({:.1})",
            r.best_path, r.total_cost
        );
        for (enc, w) in ranked.iter().take(4) {
            println!("   {} w={:.3e}", Path::from_encoding(*enc, m), w);
        }
        let n_ha = r.best_path.count_of(Technology::HotAir);
        println!("   n_ha={n_ha}");
    }
}
