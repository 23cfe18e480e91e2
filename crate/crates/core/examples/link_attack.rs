//! Flags pool patches whose referenced bug is restricted to the security
//! group, for the first, second and third security patch.

use patchleak::linkattack::{link_attack_daily, LinkAttackConfig};
use patchleak::synthgen::{generate, SynthConfig};

fn main() {
    let corpus = generate(&SynthConfig { days: 120, ..SynthConfig::default() }).unwrap();
    let cfg = LinkAttackConfig::default();
    for k in 1..=3 {
        let s = link_attack_daily(&corpus, k, &cfg).unwrap();
        println!(
            "k={k}: {} of {} days with a flagged security fix, window gain {} days",
            s.days_satisfied().len(),
            s.days.len(),
            s.total_window_increase()
        );
    }
}
