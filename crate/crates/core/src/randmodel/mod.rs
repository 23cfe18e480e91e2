//! Closed-form behavior of an attacker who examines the pool in uniformly
//! random order.
//!
//! With `n` patches of which `ns` fix vulnerabilities, the effort `X` (rank of
//! the first fix) has mass `C(n-x, ns-1) / C(n, ns)` and mean
//! `(n + 1) / (ns + 1)`. The budgeted multi-day attacker examines at most `b`
//! fresh patches a day and never revisits one; its discovery day
//! distribution follows by chaining the daily conditional success
//! probabilities.

pub mod exact;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RandModelError {
    #[error("invalid pool: need 1 <= ns < n, got n = {n}, ns = {ns}")]
    InvalidPool { n: u64, ns: u64 },
    #[error("effort {x} is outside 1..={max}")]
    InvalidSupport { x: u64, max: u64 },
    #[error("invalid landing schedule: {0}")]
    InvalidSchedule(String),
    #[error("security fraction {0} is not in (0, 1)")]
    InvalidFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolState {
    n: u64,
    ns: u64,
}

impl PoolState {
    pub fn new(n: u64, ns: u64) -> Result<Self, RandModelError> {
        if ns == 0 || ns >= n {
            return Err(RandModelError::InvalidPool { n, ns });
        }
        Ok(Self { n, ns })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn ns(&self) -> u64 {
        self.ns
    }

    /// Largest possible effort: every non-security patch comes first.
    pub fn max_effort(&self) -> u64 {
        self.n - self.ns + 1
    }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `Pr[X = x]`. Zero beyond the support; `x = 0` is an error.
pub fn effort_pmf(pool: PoolState, x: u64) -> Result<f64, RandModelError> {
    if x == 0 {
        return Err(RandModelError::InvalidSupport { x, max: pool.max_effort() });
    }
    if x > pool.max_effort() {
        return Ok(0.0);
    }
    Ok(effort_distribution(pool)[(x - 1) as usize])
}

/// The whole mass function, entry `x - 1` holding `Pr[X = x]`.
///
/// Uses `Pr[X = x] = Pr[X > x - 1] * ns / (n - x + 1)` with the survival
/// function built up as a running product, so no binomial is ever formed.
pub fn effort_distribution(pool: PoolState) -> Vec<f64> {
    let (n, ns) = (pool.n as f64, pool.ns as f64);
    let mut out = Vec::with_capacity(pool.max_effort() as usize);
    let mut survive = 1.0;
    for x in 1..=pool.max_effort() {
        let remaining = n - (x - 1) as f64;
        out.push(survive * ns / remaining);
        survive *= (remaining - ns) / remaining;
    }
    out
}

/// `Pr[X > b]`, the chance that the first `b` examined patches all miss.
pub fn effort_survival(n: u64, ns: u64, b: u64) -> f64 {
    if ns == 0 {
        return 1.0;
    }
    if b > n - ns {
        return 0.0;
    }
    let mut p = 1.0;
    for i in 0..b {
        p *= (n - ns - i) as f64 / (n - i) as f64;
    }
    p
}

/// `Pr[X <= b]`.
pub fn effort_cdf(pool: PoolState, b: u64) -> f64 {
    1.0 - effort_survival(pool.n, pool.ns, b)
}

/// Mean effort computed from the mass function.
pub fn expected_effort(pool: PoolState) -> f64 {
    let pmf = effort_distribution(pool);
    compensated_sum(pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p))
}

/// `(n + 1) / (ns + 1)`.
pub fn expected_effort_closed_form(pool: PoolState) -> f64 {
    (pool.n + 1) as f64 / (pool.ns + 1) as f64
}

/// Expected rank of the `k`-th of `m` marked patches in a uniformly random
/// order of `n`: `k (n + 1) / (m + 1)`. `None` when fewer than `k` exist.
pub fn expected_kth_effort(n: u64, m: u64, k: u64) -> Option<f64> {
    if k == 0 || m < k || m > n {
        return None;
    }
    Some(k as f64 * (n + 1) as f64 / (m + 1) as f64)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    use statrs::function::factorial::ln_factorial;
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `Pr[X_k <= e]` for the rank `X_k` of the `k`-th of `m` marked patches
/// among `n`: at least `k` marked patches in the first `e` positions.
pub fn kth_effort_cdf(n: u64, m: u64, k: u64, e: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if m < k || m > n {
        return 0.0;
    }
    let e = e.min(n);
    let hi = m.min(e);
    let lo = k.max((e + m).saturating_sub(n));
    if lo > hi {
        return 0.0;
    }
    let denom = ln_choose(n, e);
    let p = compensated_sum((lo..=hi).map(|j| (ln_choose(m, j) + ln_choose(n - m, e - j) - denom).exp()));
    p.clamp(0.0, 1.0)
}

/// Patches landing on one day of an inter-update cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayLanding {
    pub patches: u64,
    pub security: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandingSchedule {
    pub days: Vec<DayLanding>,
    pub budget: u64,
}

impl LandingSchedule {
    pub fn new(days: Vec<DayLanding>, budget: u64) -> Result<Self, RandModelError> {
        let s = Self { days, budget };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), RandModelError> {
        if self.days.is_empty() {
            return Err(RandModelError::InvalidSchedule("no days".into()));
        }
        if let Some((t, d)) = self.days.iter().enumerate().find(|(_, d)| d.security > d.patches) {
            return Err(RandModelError::InvalidSchedule(format!(
                "day {}: {} security patches out of {}",
                t + 1,
                d.security,
                d.patches
            )));
        }
        Ok(())
    }

    /// Days until the next update.
    pub fn horizon(&self) -> usize {
        self.days.len()
    }

    /// `days` days of `daily` patches where the security count on day `t`
    /// is `round(f daily t) - round(f daily (t - 1))`, so the cumulative
    /// count tracks the fraction as closely as integers allow.
    pub fn constant_fraction(days: usize, daily: u64, fraction: f64, budget: u64) -> Result<Self, RandModelError> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(RandModelError::InvalidFraction(fraction));
        }
        let per_day = fraction * daily as f64;
        let days = (1..=days)
            .map(|t| {
                let cum = (per_day * t as f64).round() as u64;
                let prev = (per_day * (t - 1) as f64).round() as u64;
                DayLanding { patches: daily, security: cum - prev }
            })
            .collect();
        Self::new(days, budget)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryDistribution {
    /// `p[t - 1] = Pr[first fix found on day t]`.
    pub p: Vec<f64>,
    /// Probability that nothing is found before the update.
    pub p_none: f64,
    /// `Pr[found on day t | nothing found before]`.
    pub conditional: Vec<f64>,
}

/// Chains the daily conditional success probabilities. After a failed day
/// the attacker has examined only non-security patches, so those leave the
/// pool (all of them when fewer than `b` remain) while every security patch
/// stays. Days with no security patch available succeed with probability 0.
pub fn discovery_day_distribution(sched: &LandingSchedule) -> Result<DiscoveryDistribution, RandModelError> {
    sched.validate()?;
    let b = sched.budget;
    let mut other = 0u64;
    let mut security = 0u64;
    let mut reach = 1.0;
    let mut p = Vec::with_capacity(sched.days.len());
    let mut conditional = Vec::with_capacity(sched.days.len());
    for d in &sched.days {
        other += d.patches - d.security;
        security += d.security;
        let q = if security == 0 { 0.0 } else { 1.0 - effort_survival(other + security, security, b) };
        conditional.push(q);
        p.push(reach * q);
        reach *= 1.0 - q;
        other -= b.min(other);
    }
    let p_none = (1.0 - compensated_sum(p.iter().copied())).max(0.0);
    Ok(DiscoveryDistribution { p, p_none, conditional })
}

/// `E[Y] = sum_t (N - t + 1) Pr[A_t]`.
pub fn expected_window_increase(sched: &LandingSchedule) -> Result<f64, RandModelError> {
    let dist = discovery_day_distribution(sched)?;
    let n = dist.p.len();
    Ok(compensated_sum(dist.p.iter().enumerate().map(|(i, p)| (n - i) as f64 * p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffortPoint {
    pub fraction: f64,
    pub n: u64,
    pub ns: u64,
    pub expected_effort: f64,
}

/// Expected effort for pools of size `n` holding `round(f n)` fixes, for each
/// fraction and each `n` in the range. Pools that would hold no fix, or only
/// fixes, are skipped.
pub fn effort_vs_pool_curves(
    fractions: &[f64],
    n_range: impl Iterator<Item = u64> + Clone,
) -> Result<Vec<EffortPoint>, RandModelError> {
    let mut out = Vec::new();
    for &f in fractions {
        if !(f > 0.0 && f < 1.0) {
            return Err(RandModelError::InvalidFraction(f));
        }
        for n in n_range.clone() {
            let ns = (f * n as f64).round() as u64;
            if let Ok(pool) = PoolState::new(n, ns) {
                out.push(EffortPoint { fraction: f, n, ns, expected_effort: expected_effort(pool) });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPoint {
    pub fraction: f64,
    pub budget: u64,
    pub expected_increase: f64,
}

/// Expected window increase against daily budget over a cycle of `days`
/// days with `daily` landings, for each security fraction.
pub fn window_vs_budget_curves(
    days: usize,
    daily: u64,
    fractions: &[f64],
    budgets: impl Iterator<Item = u64> + Clone,
) -> Result<Vec<WindowPoint>, RandModelError> {
    let mut out = Vec::new();
    for &f in fractions {
        for b in budgets.clone() {
            let sched = LandingSchedule::constant_fraction(days, daily, f, b)?;
            out.push(WindowPoint { fraction: f, budget: b, expected_increase: expected_window_increase(&sched)? });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool(n: u64, ns: u64) -> PoolState {
        PoolState::new(n, ns).unwrap()
    }

    #[test]
    fn small_pool_mass() {
        let pmf = effort_distribution(pool(5, 2));
        let want = [0.4, 0.3, 0.2, 0.1];
        for (p, w) in pmf.iter().zip(want) {
            assert!((p - w).abs() < 1e-15);
        }
        assert!((expected_effort(pool(5, 2)) - 2.0).abs() < 1e-15);
        assert_eq!(effort_pmf(pool(5, 2), 5).unwrap(), 0.0);
        assert!(effort_pmf(pool(5, 2), 0).is_err());
    }

    #[test]
    fn single_fix_is_uniform() {
        for p in effort_distribution(pool(100, 1)) {
            assert!((p - 0.01).abs() < 1e-15);
        }
        assert!((expected_effort(pool(100, 1)) - 50.5).abs() < 1e-12);
        assert!((expected_effort(pool(2, 1)) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn boundary_term_is_inverse_binomial() {
        // C(7, 3) = 35
        assert!((effort_pmf(pool(7, 3), 5).unwrap() - 1.0 / 35.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_pools() {
        assert!(PoolState::new(5, 0).is_err());
        assert!(PoolState::new(5, 5).is_err());
    }

    #[test]
    fn mean_matches_identity_over_large_pools() {
        for (n, ns) in [(10_000, 1), (10_000, 85), (5000, 4999), (39 * 31, 12)] {
            let p = pool(n, ns);
            let rel = (expected_effort(p) - expected_effort_closed_form(p)).abs() / expected_effort_closed_form(p);
            assert!(rel < 1e-12, "n {n} ns {ns}: {rel}");
        }
    }

    #[test]
    fn kth_cdf_matches_first_fix_cdf_and_mean() {
        for (n, m) in [(12, 3), (40, 7), (9, 8)] {
            for e in 0..=n {
                let a = kth_effort_cdf(n, m, 1, e);
                let b = 1.0 - effort_survival(n, m, e);
                assert!((a - b).abs() < 1e-12, "n {n} m {m} e {e}");
            }
            for k in 1..=m {
                let mean: f64 = (1..=n).map(|e| 1.0 - kth_effort_cdf(n, m, k, e - 1)).sum();
                assert!((mean - expected_kth_effort(n, m, k).unwrap()).abs() < 1e-9);
            }
        }
        assert_eq!(expected_kth_effort(5, 2, 2), Some(4.0));
        assert_eq!(expected_kth_effort(5, 2, 3), None);
    }

    #[test]
    fn two_day_example() {
        let sched = LandingSchedule::new(
            vec![DayLanding { patches: 2, security: 1 }, DayLanding { patches: 0, security: 0 }],
            1,
        )
        .unwrap();
        let d = discovery_day_distribution(&sched).unwrap();
        assert_eq!(d.p, vec![0.5, 0.5]);
        assert_eq!(d.p_none, 0.0);
        assert_eq!(expected_window_increase(&sched).unwrap(), 1.5);
    }

    #[test]
    fn trivial_schedules() {
        let one = LandingSchedule::new(vec![DayLanding { patches: 1, security: 1 }], 1).unwrap();
        assert_eq!(discovery_day_distribution(&one).unwrap().p, vec![1.0]);
        let none = LandingSchedule::new(vec![DayLanding { patches: 30, security: 0 }; 5], 3).unwrap();
        let d = discovery_day_distribution(&none).unwrap();
        assert!(d.p.iter().all(|&p| p == 0.0));
        assert_eq!(d.p_none, 1.0);
        assert_eq!(expected_window_increase(&none).unwrap(), 0.0);
        assert!(LandingSchedule::new(vec![DayLanding { patches: 1, security: 2 }], 1).is_err());
        assert!(LandingSchedule::new(vec![], 1).is_err());
    }

    #[test]
    fn constant_fraction_schedule_tracks_cumulative_rounding() {
        let s = LandingSchedule::constant_fraction(31, 39, 0.01, 1).unwrap();
        let total: u64 = s.days.iter().map(|d| d.security).sum();
        assert_eq!(total, (0.39f64 * 31.0).round() as u64);
        assert_eq!(s.days[0].security, 0);
        assert_eq!(s.days[1].security, 1);
    }

    /// Follows one random attacker through the schedule.
    fn simulate_once(sched: &LandingSchedule, rng: &mut ChaCha8Rng) -> Option<usize> {
        let mut pool: Vec<bool> = Vec::new();
        for (t, d) in sched.days.iter().enumerate() {
            pool.extend(std::iter::repeat_n(true, d.security as usize));
            pool.extend(std::iter::repeat_n(false, (d.patches - d.security) as usize));
            pool.shuffle(rng);
            let take = (sched.budget as usize).min(pool.len());
            if pool[..take].iter().any(|&s| s) {
                return Some(t);
            }
            pool.drain(..take);
        }
        None
    }

    #[test]
    fn chained_model_matches_simulation() {
        let sched = LandingSchedule::new(
            vec![
                DayLanding { patches: 6, security: 0 },
                DayLanding { patches: 4, security: 1 },
                DayLanding { patches: 2, security: 0 },
                DayLanding { patches: 5, security: 1 },
            ],
            2,
        )
        .unwrap();
        let d = discovery_day_distribution(&sched).unwrap();
        let trials = 40_000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 5];
        for _ in 0..trials {
            counts[simulate_once(&sched, &mut rng).unwrap_or(4)] += 1;
        }
        for t in 0..5 {
            let p = if t < 4 { d.p[t] } else { d.p_none };
            let f = counts[t] as f64 / trials as f64;
            let se = (p * (1.0 - p) / trials as f64).sqrt().max(1e-9);
            assert!((f - p).abs() <= 4.0 * se, "day {t}: sim {f} model {p}");
        }
    }

    #[test]
    fn window_grows_with_budget() {
        for f in [0.0032, 0.01, 0.1] {
            let mut prev = 0.0;
            for b in 0..=40 {
                let s = LandingSchedule::constant_fraction(31, 39, f, b).unwrap();
                let e = expected_window_increase(&s).unwrap();
                assert!(e >= prev - 1e-12 && e <= 31.0);
                prev = e;
            }
        }
    }

    #[test]
    fn curves_have_expected_direction() {
        // round(1.5) = 2 fixes out of 3
        let pts = effort_vs_pool_curves(&[0.5], 3..=3).unwrap();
        assert_eq!(pts[0].ns, 2);
        assert!((pts[0].expected_effort - 4.0 / 3.0).abs() < 1e-15);
        assert!((expected_effort(pool(3, 1)) - 2.0).abs() < 1e-15);
        let lo = effort_vs_pool_curves(&[0.01], [500u64].into_iter()).unwrap()[0].expected_effort;
        let hi = effort_vs_pool_curves(&[0.1], [500u64].into_iter()).unwrap()[0].expected_effort;
        assert!(hi < lo);
        assert!(effort_vs_pool_curves(&[1.0], 1..3).is_err());
    }

    proptest::proptest! {
        #[test]
        fn survival_is_one_minus_cdf(n in 2u64..400, ns_frac in 0.0f64..1.0, b in 0u64..400) {
            let ns = 1 + ((n - 2) as f64 * ns_frac) as u64;
            let p = pool(n, ns);
            let s = effort_survival(n, ns, b);
            proptest::prop_assert!((0.0..=1.0).contains(&s));
            proptest::prop_assert!((s + effort_cdf(p, b) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn discovery_probabilities_form_a_distribution(
            days in proptest::collection::vec((0u64..30, 0u64..3), 1..12),
            budget in 0u64..10,
        ) {
            let days: Vec<DayLanding> =
                days.into_iter().map(|(n, s)| DayLanding { patches: n + s, security: s }).collect();
            let sched = LandingSchedule::new(days, budget).unwrap();
            let d = discovery_day_distribution(&sched).unwrap();
            proptest::prop_assert!(d.p.iter().all(|p| (0.0..=1.0).contains(p)));
            proptest::prop_assert!((d.p.iter().sum::<f64>() + d.p_none - 1.0).abs() < 1e-12);
            let more = LandingSchedule { budget: budget + 1, ..sched.clone() };
            let (e0, e1) = (expected_window_increase(&sched).unwrap(), expected_window_increase(&more).unwrap());
            proptest::prop_assert!(e1 >= e0 - 1e-12);
            proptest::prop_assert!(e0 <= sched.horizon() as f64 + 1e-12);
        }
    }
}
