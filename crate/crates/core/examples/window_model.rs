//! Window-of-vulnerability gain for a budgeted random attacker over a
//! 31-day release cycle with 39 patches a day.

use patchleak::randmodel::{discovery_day_distribution, expected_window_increase, LandingSchedule};

fn main() {
    for fraction in [0.0032, 0.01, 0.032, 0.1, 0.32] {
        print!("fraction {fraction:<6}");
        for budget in [1, 2, 5, 10, 40] {
            let sched = LandingSchedule::constant_fraction(31, 39, fraction, budget).unwrap();
            print!("  b={budget}: {:6.2}", expected_window_increase(&sched).unwrap());
        }
        println!();
    }

    let sched = LandingSchedule::constant_fraction(31, 39, 0.01, 3).unwrap();
    let dist = discovery_day_distribution(&sched).unwrap();
    println!("b=3, fraction 0.01: P(no discovery) = {:.4}", dist.p_none);
    for (day, p) in dist.p.iter().enumerate().take(5) {
        println!("  P(discovered on day {}) = {p:.4}", day + 1);
    }
}
