//! Expected effort of an attacker who inspects pool patches in random order.

use patchleak::randmodel::{effort_distribution, expected_effort, expected_kth_effort, PoolState};

fn main() {
    for (n, ns) in [(39, 1), (120, 1), (600, 5), (1209, 10)] {
        let pool = PoolState::new(n, ns).unwrap();
        let pmf = effort_distribution(pool);
        let p10: f64 = pmf.iter().take(10).sum();
        println!(
            "n={n:5} ns={ns:3}  E[effort]={:8.2}  P(effort<=10)={p10:.4}  E[2nd]={:?}",
            expected_effort(pool),
            expected_kth_effort(n, ns, 2)
        );
    }
}
