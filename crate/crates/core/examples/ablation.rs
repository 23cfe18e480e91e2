//! Drops one feature group at a time and reports how much the low-effort
//! CDF of the SVM attacker moves.

use patchleak::features::FeatureGroup;
use patchleak::simulator::{ablation_run, default_cdf_start, simulate_svm_daily, SimConfig};
use patchleak::synthgen::{generate, LeakStrengths, SynthConfig};

fn main() {
    let corpus = generate(&SynthConfig {
        days: 100,
        daily_rate: 20.0,
        security_fraction: 0.02,
        leaks: LeakStrengths { author: 0.7, ..LeakStrengths::none() },
        ..SynthConfig::default()
    })
    .unwrap();
    let cfg = SimConfig::default();
    let full = simulate_svm_daily(&corpus, &cfg).unwrap();
    let from = default_cdf_start(&corpus);
    for g in FeatureGroup::ALL {
        let a = ablation_run(&corpus, &cfg, &full, g, from, 20, &[1, 3]).unwrap();
        println!("without {:12} CDF(5) change {:+.3}  window change {:?}", g.name(), a.cdf_delta[4].1, a.window_delta);
    }
}
