//! Trains a calibrated RBF SVM on toy data, then runs the daily SVM attacker
//! against a small synthetic corpus and compares it with random inspection.

use patchleak::learner::{check_kkt, fit, grid_search, KernelParams};
use patchleak::simulator::{
    default_cdf_start, effort_cdf, median_effort, random_effort_cdf, simulate_svm_daily, SimConfig,
};
use patchleak::synthgen::{generate, SynthConfig};

fn main() {
    let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 8) as f64 / 8.0, (i / 8) as f64 / 5.0]).collect();
    let ys: Vec<bool> = xs.iter().map(|x| x[0] + x[1] > 0.9).collect();
    let grid: Vec<KernelParams> =
        [1.0, 16.0].iter().flat_map(|&c| [0.5, 4.0].map(|g| KernelParams { c, gamma: g })).collect();
    let best = grid_search(&xs, &ys, &grid, 4, 7).unwrap();
    let model = fit(&xs, &ys, best.best, 7).unwrap();
    let kkt = check_kkt(&model, &xs, &ys).unwrap();
    println!(
        "toy: C={} gamma={} cv accuracy {:.3}, {} support vectors, max KKT violation {:.2e}",
        best.best.c,
        best.best.gamma,
        best.best_accuracy,
        model.support_vectors.len(),
        kkt.max_violation
    );
    println!("P(secure | x=(0.9, 0.9)) = {:.3}", model.score(&[0.9, 0.9]).unwrap());

    let corpus =
        generate(&SynthConfig { days: 100, daily_rate: 20.0, security_fraction: 0.02, ..SynthConfig::default() })
            .unwrap();
    let cfg = SimConfig { trials: 10_000, ..SimConfig::default() };
    let run = simulate_svm_daily(&corpus, &cfg).unwrap();
    let from = default_cdf_start(&corpus);
    let svm = effort_cdf(&run.series, from, 50).unwrap();
    let random = random_effort_cdf(&corpus, &cfg, from, 50).unwrap();
    println!("median SVM effort after warm-up: {:?}", median_effort(&run.series, from));
    for e in [1, 5, 10, 50] {
        println!("P(effort <= {e:2}): svm {:.3}  random {:.3}", svm.at(e), random.at(e));
    }
}
