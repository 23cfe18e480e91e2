//! Day-by-day attack simulation over a corpus.
//!
//! Each day the attacker orders the current pool and examines it from the top.
//! The SVM-assisted attacker retrains on everything landed before the most
//! recent security update, labeling only fixes disclosed by then. The random
//! attacker is handled analytically where possible. The link attacker puts
//! patches whose bugs look security-restricted first.

use std::collections::{HashMap, HashSet};
use std::ops::Range;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Hypergeometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusError, Severity};
use crate::features::{FeatureGroup, FeatureMask, FeatureSchema, FeatureVector};
use crate::learner::{self, KernelParams, LearnerError, TrainedModel};
use crate::linkattack::{corpus_bug_ids, link_ranking, LinkAttackConfig, LinkAttackError};
use crate::randmodel::{self, compensated_sum, DayLanding, LandingSchedule};

/// Expected post-release window, in days, before users apply an update.
pub const DEFAULT_BASELINE_DAYS: f64 = 3.4;

/// Days trimmed from the start of the period before building effort CDFs.
pub const DEFAULT_WARMUP_DAYS: i64 = 50;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Link(#[from] LinkAttackError),
    #[error("no days with a qualifying pool after {0}")]
    EmptyWindow(NaiveDate),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankerKind {
    Svm,
    Random,
    Link,
}

impl RankerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Svm => "svm",
            Self::Random => "random",
            Self::Link => "link",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeverityFilter {
    #[default]
    All,
    HighOrCritical,
}

impl SeverityFilter {
    pub fn admits(self, severity: Option<Severity>) -> bool {
        match self {
            Self::All => true,
            Self::HighOrCritical => severity.is_some_and(Severity::is_severe),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Which security fix, counted from the top of the ranking, ends the search.
    pub k: usize,
    pub severity: SeverityFilter,
    pub mask: FeatureMask,
    /// `(C, gamma)` candidates for the daily cross-validation.
    pub grid: Vec<KernelParams>,
    pub folds: usize,
    pub seed: u64,
    /// Monte Carlo trials for random-ranker quantities without a closed form.
    pub trials: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            k: 1,
            severity: SeverityFilter::All,
            mask: FeatureMask::all(),
            grid: simulation_grid(),
            folds: 5,
            seed: 0,
            trials: 100_000,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<(), SimError> {
        if self.k == 0 {
            return Err(SimError::InvalidConfig("k must be at least 1".into()));
        }
        if self.grid.is_empty() || self.folds < 2 || self.trials == 0 {
            return Err(SimError::InvalidConfig("need a nonempty grid, folds >= 2 and trials >= 1".into()));
        }
        Ok(())
    }
}

/// Nine-point subset of [`learner::default_grid`] used by default for the
/// daily retraining.
pub fn simulation_grid() -> Vec<KernelParams> {
    let mut g = Vec::new();
    for ce in [-1, 3, 7] {
        for ge in [-5, -3, -1] {
            g.push(KernelParams { c: 2f64.powi(ce), gamma: 2f64.powi(ge) });
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayStatus {
    Ok,
    /// No labeled fix in the training data; the pool was shuffled instead.
    Untrained,
    /// Training failed; the pool was shuffled instead.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayEffort {
    pub day: NaiveDate,
    pub pool_size: usize,
    /// Pool fixes passing the severity filter.
    pub pool_security_count: usize,
    /// Rank of the `k`-th qualifying fix; the expectation for the random ranker.
    pub effort: Option<f64>,
    /// Standard error when the effort is a Monte Carlo mean.
    pub effort_se: Option<f64>,
    pub status: DayStatus,
    pub params: Option<KernelParams>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortSeries {
    pub ranker: RankerKind,
    pub k: usize,
    pub severity: SeverityFilter,
    pub days: Vec<DayEffort>,
}

/// A series together with each day's full examination order (corpus indices).
#[derive(Debug, Clone, PartialEq)]
pub struct RankedRun {
    pub series: EffortSeries,
    pub rankings: Vec<Vec<usize>>,
}

struct DayPool {
    day: NaiveDate,
    pool: Range<usize>,
    qualifying: usize,
}

fn qualifies(corpus: &Corpus, i: usize, filter: SeverityFilter) -> bool {
    corpus.is_security(i) && filter.admits(corpus.severity(i))
}

fn day_pools(corpus: &Corpus, filter: SeverityFilter) -> Result<Vec<DayPool>, SimError> {
    corpus
        .timeline()
        .days()
        .map(|day| {
            let pool = corpus.pool_range(day)?;
            let qualifying = pool.clone().filter(|&i| qualifies(corpus, i, filter)).count();
            Ok(DayPool { day, pool, qualifying })
        })
        .collect()
}

/// 1-based position of the `k`-th qualifying patch in `order`.
fn kth_rank(corpus: &Corpus, order: &[usize], k: usize, filter: SeverityFilter) -> Option<usize> {
    order.iter().enumerate().filter(|(_, &i)| qualifies(corpus, i, filter)).nth(k - 1).map(|(r, _)| r + 1)
}

fn day_rng(seed: u64, day: NaiveDate) -> ChaCha8Rng {
    let ordinal = day.signed_duration_since(NaiveDate::MIN).num_days() as u64;
    ChaCha8Rng::seed_from_u64(seed ^ ordinal.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn shuffled(pool: Range<usize>, seed: u64, day: NaiveDate) -> Vec<usize> {
    let mut order: Vec<usize> = pool.collect();
    order.shuffle(&mut day_rng(seed, day));
    order
}

/// What the attacker trains on: the training prefix and the fixes known by then.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct TrainingKey {
    end: usize,
    positives: Vec<usize>,
}

enum DayModel {
    Trained { schema: FeatureSchema, model: TrainedModel, note: Option<String> },
    Untrained,
    Failed(String),
}

fn train_day_model(corpus: &Corpus, key: &TrainingKey, cfg: &SimConfig) -> DayModel {
    if key.positives.is_empty() || key.positives.len() == key.end {
        return DayModel::Untrained;
    }
    let training: Vec<_> = corpus.patches()[..key.end].iter().collect();
    let schema = match FeatureSchema::build(&training, cfg.mask) {
        Ok(s) => s,
        Err(e) => return DayModel::Failed(e.to_string()),
    };
    let xs: Vec<FeatureVector> = training.iter().map(|p| schema.extract(p)).collect();
    let mut ys = vec![false; key.end];
    for &i in &key.positives {
        ys[i] = true;
    }
    let mut notes = Vec::new();
    let params = match learner::grid_search(&xs, &ys, &cfg.grid, cfg.folds, cfg.seed) {
        Ok(r) => r.best,
        Err(e) => {
            notes.push(format!("grid search skipped: {e}"));
            KernelParams::fallback(schema.dim())
        }
    };
    match learner::fit(&xs, &ys, params, cfg.seed) {
        Ok(model) => {
            if !model.converged {
                notes.push("solver hit the iteration cap".into());
            }
            if model.calibration.is_some_and(|c| c.degenerate) {
                notes.push("degenerate calibration".into());
            }
            let note = (!notes.is_empty()).then(|| notes.join("; "));
            DayModel::Trained { schema, model, note }
        }
        Err(LearnerError::SingleClassTrainingSet) => DayModel::Untrained,
        Err(e) => DayModel::Failed(e.to_string()),
    }
}

/// Orders the pool by decreasing score. Equal scores fall back to the raw
/// decision value, then to landing order.
fn svm_order(corpus: &Corpus, pool: Range<usize>, schema: &FeatureSchema, model: &TrainedModel) -> Vec<usize> {
    let mut scored: Vec<(usize, f64, f64)> = pool
        .map(|i| {
            let x = schema.extract(&corpus.patches()[i]);
            let d = model.decision_value(&x).expect("schema fixes the dimension");
            let p = model.calibration.map_or(d, |s| s.probability(d));
            (i, p, d)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.2.total_cmp(&a.2)).then(a.0.cmp(&b.0)));
    scored.into_iter().map(|(i, _, _)| i).collect()
}

pub fn simulate_svm_daily(corpus: &Corpus, cfg: &SimConfig) -> Result<RankedRun, SimError> {
    cfg.validate()?;
    let pools = day_pools(corpus, cfg.severity)?;
    let mut keys = Vec::with_capacity(pools.len());
    for p in &pools {
        let train = corpus.training_range(p.day)?;
        let positives = train.clone().filter(|&i| corpus.is_known_security(i, p.day)).collect();
        keys.push(TrainingKey { end: train.end, positives });
    }
    let mut unique: Vec<&TrainingKey> = Vec::new();
    let mut seen = HashSet::new();
    for k in &keys {
        if seen.insert(k) {
            unique.push(k);
        }
    }
    let models: HashMap<&TrainingKey, DayModel> =
        unique.par_iter().map(|k| (*k, train_day_model(corpus, k, cfg))).collect::<Vec<_>>().into_iter().collect();

    let mut days = Vec::with_capacity(pools.len());
    let mut rankings = Vec::with_capacity(pools.len());
    for (p, key) in pools.iter().zip(&keys) {
        let (order, status, params, note) = match &models[key] {
            DayModel::Trained { schema, model, note } => {
                (svm_order(corpus, p.pool.clone(), schema, model), DayStatus::Ok, Some(model.params), note.clone())
            }
            DayModel::Untrained => (shuffled(p.pool.clone(), cfg.seed, p.day), DayStatus::Untrained, None, None),
            DayModel::Failed(e) => {
                (shuffled(p.pool.clone(), cfg.seed, p.day), DayStatus::Failed, None, Some(e.clone()))
            }
        };
        let effort = kth_rank(corpus, &order, cfg.k, cfg.severity).map(|r| r as f64);
        days.push(DayEffort {
            day: p.day,
            pool_size: p.pool.len(),
            pool_security_count: p.qualifying,
            effort,
            effort_se: None,
            status,
            params,
            note,
        });
        rankings.push(order);
    }
    Ok(RankedRun { series: EffortSeries { ranker: RankerKind::Svm, k: cfg.k, severity: cfg.severity, days }, rankings })
}

pub fn simulate_link_daily(corpus: &Corpus, cfg: &SimConfig, link: &LinkAttackConfig) -> Result<RankedRun, SimError> {
    cfg.validate()?;
    let pools = day_pools(corpus, cfg.severity)?;
    let bug_ids = corpus_bug_ids(corpus, &link.extractor);
    let mut days = Vec::with_capacity(pools.len());
    let mut rankings = Vec::with_capacity(pools.len());
    for p in &pools {
        let order = link_ranking(corpus, &bug_ids, p.day, link.absent_means_restricted)?;
        days.push(DayEffort {
            day: p.day,
            pool_size: p.pool.len(),
            pool_security_count: p.qualifying,
            effort: kth_rank(corpus, &order, cfg.k, cfg.severity).map(|r| r as f64),
            effort_se: None,
            status: DayStatus::Ok,
            params: None,
            note: None,
        });
        rankings.push(order);
    }
    Ok(RankedRun {
        series: EffortSeries { ranker: RankerKind::Link, k: cfg.k, severity: cfg.severity, days },
        rankings,
    })
}

/// Mean and standard error of the rank of the `k`-th of `m` marked items in a
/// uniformly random order of `n`.
pub fn kth_effort_monte_carlo(n: usize, m: usize, k: usize, trials: usize, rng: &mut impl Rng) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..trials {
        let mut pos: Vec<usize> = rand::seq::index::sample(rng, n, m).into_iter().collect();
        pos.select_nth_unstable(k - 1);
        let r = (pos[k - 1] + 1) as f64;
        sum += r;
        sum_sq += r * r;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = (sum_sq / t - mean * mean).max(0.0) * t / (t - 1.0).max(1.0);
    (mean, (var / t).sqrt())
}

/// Expected effort of the random ranker per day: exact for the first fix,
/// a seeded Monte Carlo mean with its standard error for later ones.
pub fn simulate_random_daily(corpus: &Corpus, cfg: &SimConfig) -> Result<EffortSeries, SimError> {
    cfg.validate()?;
    let pools = day_pools(corpus, cfg.severity)?;
    let days = pools
        .par_iter()
        .map(|p| {
            let (n, m) = (p.pool.len(), p.qualifying);
            let (effort, effort_se) = if m < cfg.k {
                (None, None)
            } else if cfg.k == 1 {
                (randmodel::expected_kth_effort(n as u64, m as u64, 1), None)
            } else {
                let (mean, se) = kth_effort_monte_carlo(n, m, cfg.k, cfg.trials, &mut day_rng(cfg.seed, p.day));
                (Some(mean), Some(se))
            };
            DayEffort {
                day: p.day,
                pool_size: n,
                pool_security_count: m,
                effort,
                effort_se,
                status: DayStatus::Ok,
                params: None,
                note: None,
            }
        })
        .collect();
    Ok(EffortSeries { ranker: RankerKind::Random, k: cfg.k, severity: cfg.severity, days })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortCdf {
    pub from_day: NaiveDate,
    /// Days in the window.
    pub days: usize,
    /// Fraction of days with at least `k` qualifying fixes in the pool.
    pub asymptote: f64,
    /// `(e, fraction of days with effort <= e)` for `e = 1..=max_effort`.
    pub points: Vec<(u64, f64)>,
}

impl EffortCdf {
    pub fn at(&self, e: u64) -> f64 {
        if e == 0 {
            return 0.0;
        }
        match self.points.get(e as usize - 1) {
            Some(&(_, v)) => v,
            None => self.asymptote,
        }
    }

    /// Largest gap between the two curves over their common efforts.
    pub fn sup_distance(&self, other: &EffortCdf) -> f64 {
        self.points.iter().zip(&other.points).map(|(a, b)| (a.1 - b.1).abs()).fold(0.0, f64::max)
    }
}

/// `period_start + 50` days.
pub fn default_cdf_start(corpus: &Corpus) -> NaiveDate {
    corpus.timeline().period_start + chrono::Duration::days(DEFAULT_WARMUP_DAYS)
}

/// Empirical CDF of the recorded per-day efforts from `from_day` on.
pub fn effort_cdf(series: &EffortSeries, from_day: NaiveDate, max_effort: u64) -> Result<EffortCdf, SimError> {
    let window: Vec<&DayEffort> = series.days.iter().filter(|d| d.day >= from_day).collect();
    if window.is_empty() {
        return Err(SimError::EmptyWindow(from_day));
    }
    let total = window.len() as f64;
    let mut efforts: Vec<f64> = window.iter().filter_map(|d| d.effort).collect();
    efforts.sort_by(f64::total_cmp);
    let asymptote = window.iter().filter(|d| d.pool_security_count >= series.k).count() as f64 / total;
    let points = (1..=max_effort).map(|e| (e, efforts.partition_point(|&x| x <= e as f64) as f64 / total)).collect();
    Ok(EffortCdf { from_day, days: window.len(), asymptote, points })
}

/// Probability that a random attacker's effort is at most `e` on a day drawn
/// uniformly from the window: the average of the daily effort distributions.
pub fn random_effort_cdf(
    corpus: &Corpus,
    cfg: &SimConfig,
    from_day: NaiveDate,
    max_effort: u64,
) -> Result<EffortCdf, SimError> {
    let pools: Vec<DayPool> = day_pools(corpus, cfg.severity)?.into_iter().filter(|p| p.day >= from_day).collect();
    if pools.is_empty() {
        return Err(SimError::EmptyWindow(from_day));
    }
    let total = pools.len() as f64;
    let k = cfg.k as u64;
    let points = (1..=max_effort)
        .map(|e| {
            let s = compensated_sum(
                pools.iter().map(|p| randmodel::kth_effort_cdf(p.pool.len() as u64, p.qualifying as u64, k, e)),
            );
            (e, s / total)
        })
        .collect();
    let asymptote = pools.iter().filter(|p| p.qualifying >= cfg.k).count() as f64 / total;
    Ok(EffortCdf { from_day, days: pools.len(), asymptote, points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub ranker: RankerKind,
    pub budget: u64,
    pub total_increase_days: f64,
    /// Standard error when the total is a Monte Carlo estimate.
    pub standard_error: Option<f64>,
    pub per_segment: Vec<f64>,
    pub baseline_days: f64,
    /// `total / baseline`, only for a positive baseline.
    pub multiplicative_factor: Option<f64>,
}

impl WindowReport {
    fn new(ranker: RankerKind, budget: u64, per_segment: Vec<f64>, standard_error: Option<f64>) -> Self {
        let total = compensated_sum(per_segment.iter().copied());
        Self {
            ranker,
            budget,
            total_increase_days: total,
            standard_error,
            per_segment,
            baseline_days: DEFAULT_BASELINE_DAYS,
            multiplicative_factor: Some(total / DEFAULT_BASELINE_DAYS),
        }
    }

    pub fn with_baseline(mut self, baseline_days: f64) -> Self {
        self.baseline_days = baseline_days;
        self.multiplicative_factor = (baseline_days > 0.0).then(|| self.total_increase_days / baseline_days);
        self
    }
}

/// Budgeted multi-day attacker over fixed daily rankings. Within a segment
/// the attacker examines up to `budget` not-yet-examined patches a day from
/// the top of that day's ranking; the segment gains `end - t` days from the
/// first day `t` on which the `k`-th qualifying fix has been examined.
/// Examined patches, found or not, are never examined again.
pub fn window_increase(corpus: &Corpus, run: &RankedRun, budget: u64) -> WindowReport {
    let k = run.series.k;
    let filter = run.series.severity;
    let mut per_segment = Vec::new();
    for seg in corpus.timeline().segments() {
        let mut examined = HashSet::new();
        let mut found = 0;
        let mut gain = 0.0;
        for (d, order) in run.series.days.iter().zip(&run.rankings) {
            if !seg.contains(d.day) {
                continue;
            }
            let mut left = budget;
            for &i in order {
                if left == 0 {
                    break;
                }
                if examined.insert(i) {
                    left -= 1;
                    if qualifies(corpus, i, filter) {
                        found += 1;
                    }
                }
            }
            if found >= k {
                gain = (seg.end - d.day).num_days() as f64;
                break;
            }
        }
        per_segment.push(gain);
    }
    WindowReport::new(run.series.ranker, budget, per_segment, None)
}

fn segment_schedules(corpus: &Corpus, filter: SeverityFilter) -> Vec<(Vec<DayLanding>, i64)> {
    corpus
        .timeline()
        .segments()
        .into_iter()
        .map(|seg| {
            let days = seg
                .days()
                .map(|day| {
                    let range = corpus.pool_range(day).expect("segment days lie in the period");
                    let today: Vec<usize> = range.filter(|&i| corpus.patches()[i].landed_day() == day).collect();
                    DayLanding {
                        patches: today.len() as u64,
                        security: today.iter().filter(|&&i| qualifies(corpus, i, filter)).count() as u64,
                    }
                })
                .collect();
            (days, seg.len_days())
        })
        .collect()
}

/// Expected window increase of the budgeted random attacker: exact for the
/// first fix, Monte Carlo for later ones.
pub fn random_window_increase(corpus: &Corpus, cfg: &SimConfig, budget: u64) -> Result<WindowReport, SimError> {
    cfg.validate()?;
    let schedules = segment_schedules(corpus, cfg.severity);
    if cfg.k == 1 {
        let per_segment = schedules
            .iter()
            .map(|(days, _)| {
                let sched = LandingSchedule { days: days.clone(), budget };
                randmodel::expected_window_increase(&sched).expect("schedule built from a valid corpus")
            })
            .collect();
        return Ok(WindowReport::new(RankerKind::Random, budget, per_segment, None));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut per_segment = Vec::with_capacity(schedules.len());
    let mut var_total = 0.0;
    for (days, len) in &schedules {
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..cfg.trials {
            let g = window_trial(days, *len, budget, cfg.k as u64, &mut rng) as f64;
            sum += g;
            sum_sq += g * g;
        }
        let t = cfg.trials as f64;
        let mean = sum / t;
        var_total += (sum_sq / t - mean * mean).max(0.0) / t;
        per_segment.push(mean);
    }
    Ok(WindowReport::new(RankerKind::Random, budget, per_segment, Some(var_total.sqrt())))
}

/// One random attacker through one segment; returns the days gained.
fn window_trial(days: &[DayLanding], len: i64, budget: u64, k: u64, rng: &mut impl Rng) -> i64 {
    let (mut other, mut marked, mut found) = (0u64, 0u64, 0u64);
    for (t, d) in days.iter().enumerate() {
        other += d.patches - d.security;
        marked += d.security;
        let draws = budget.min(other + marked);
        if draws > 0 && marked > 0 {
            let hits = Hypergeometric::new(other + marked, marked, draws).expect("valid urn").sample(rng);
            found += hits;
            marked -= hits;
            other -= draws - hits;
        } else {
            other -= draws;
        }
        if found >= k {
            return len - t as i64;
        }
    }
    0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub group: FeatureGroup,
    /// `(e, CDF without the group - CDF with all features)`.
    pub cdf_delta: Vec<(u64, f64)>,
    /// `(b, window without the group - window with all features)`.
    pub window_delta: Vec<(u64, f64)>,
    pub ablated: EffortCdf,
}

impl AblationResult {
    /// Mean CDF change over efforts `1..=e`.
    pub fn mean_cdf_delta(&self, e: u64) -> f64 {
        let pts: Vec<f64> = self.cdf_delta.iter().filter(|(x, _)| *x <= e).map(|(_, d)| *d).collect();
        pts.iter().sum::<f64>() / pts.len().max(1) as f64
    }
}

/// Reruns the SVM attacker without one feature group and compares against a
/// full-feature run.
pub fn ablation_run(
    corpus: &Corpus,
    cfg: &SimConfig,
    full: &RankedRun,
    group: FeatureGroup,
    from_day: NaiveDate,
    max_effort: u64,
    budgets: &[u64],
) -> Result<AblationResult, SimError> {
    let masked = SimConfig { mask: cfg.mask.without_group(group), ..cfg.clone() };
    let run = simulate_svm_daily(corpus, &masked)?;
    let base_cdf = effort_cdf(&full.series, from_day, max_effort)?;
    let ablated = effort_cdf(&run.series, from_day, max_effort)?;
    let cdf_delta = ablated.points.iter().zip(&base_cdf.points).map(|(a, b)| (a.0, a.1 - b.1)).collect();
    let window_delta = budgets
        .iter()
        .map(|&b| {
            (
                b,
                window_increase(corpus, &run, b).total_increase_days
                    - window_increase(corpus, full, b).total_increase_days,
            )
        })
        .collect();
    Ok(AblationResult { group, cdf_delta, window_delta, ablated })
}

/// Median of the defined efforts from `from_day` on.
pub fn median_effort(series: &EffortSeries, from_day: NaiveDate) -> Option<f64> {
    let mut v: Vec<f64> = series.days.iter().filter(|d| d.day >= from_day).filter_map(|d| d.effort).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate, LeakStrengths, SynthConfig};

    fn corpus(days: u32, leaks: LeakStrengths, seed: u64) -> Corpus {
        generate(&SynthConfig {
            days,
            daily_rate: 25.0,
            security_fraction: 0.03,
            update_every: 15,
            disclosure_lag_days: 1,
            leaks,
            seed,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    fn quick() -> SimConfig {
        SimConfig { grid: vec![KernelParams { c: 1.0, gamma: 0.25 }], trials: 4000, ..SimConfig::default() }
    }

    #[test]
    fn svm_series_respects_pool_invariants() {
        let c = corpus(60, LeakStrengths::default(), 1);
        let run = simulate_svm_daily(&c, &quick()).unwrap();
        assert_eq!(run.series.days.len(), 60);
        for (d, order) in run.series.days.iter().zip(&run.rankings) {
            assert_eq!(order.len(), d.pool_size);
            assert_eq!(d.effort.is_none(), d.pool_security_count == 0);
            if let Some(e) = d.effort {
                assert!(e >= 1.0 && e <= d.pool_size as f64);
            }
        }
        // The first segment has no training data at all.
        assert!(run.series.days[..15].iter().all(|d| d.status == DayStatus::Untrained));
        assert!(run.series.days.iter().any(|d| d.status == DayStatus::Ok));
    }

    #[test]
    fn effort_grows_with_k() {
        let c = corpus(60, LeakStrengths::default(), 2);
        let runs: Vec<EffortSeries> =
            (1..=3).map(|k| simulate_svm_daily(&c, &SimConfig { k, ..quick() }).unwrap().series).collect();
        for t in 0..runs[0].days.len() {
            for k in 1..3 {
                match (runs[k - 1].days[t].effort, runs[k].days[t].effort) {
                    (Some(a), Some(b)) => assert!(a < b),
                    (None, Some(_)) => panic!("k-th found without the earlier ones"),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn severity_filter_drops_moderate_only_days() {
        let c = corpus(45, LeakStrengths::default(), 3);
        let cfg = SimConfig { severity: SeverityFilter::HighOrCritical, ..quick() };
        let series = simulate_random_daily(&c, &cfg).unwrap();
        for d in &series.days {
            let pool = c.pool_range(d.day).unwrap();
            let severe = pool.filter(|&i| c.severity(i).is_some_and(Severity::is_severe)).count();
            assert_eq!(d.pool_security_count, severe);
            assert_eq!(d.effort.is_some(), severe > 0);
        }
    }

    #[test]
    fn random_expectation_matches_order_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mean, se) = kth_effort_monte_carlo(5, 2, 2, 100_000, &mut rng);
        assert!((mean - 4.0).abs() <= 3.0 * se, "{mean} ± {se}");
        let (mean, se) = kth_effort_monte_carlo(100, 1, 1, 100_000, &mut rng);
        assert!((mean - 50.5).abs() <= 3.0 * se);
    }

    #[test]
    fn random_daily_uses_closed_form_for_first_fix() {
        let c = corpus(40, LeakStrengths::default(), 4);
        let s = simulate_random_daily(&c, &quick()).unwrap();
        for d in &s.days {
            if let Some(e) = d.effort {
                let want = (d.pool_size + 1) as f64 / (d.pool_security_count + 1) as f64;
                assert_eq!(e, want);
                assert!(d.effort_se.is_none());
            }
        }
        let s2 = simulate_random_daily(&c, &SimConfig { k: 2, ..quick() }).unwrap();
        for d in &s2.days {
            if let (Some(e), Some(se)) = (d.effort, d.effort_se) {
                let want = 2.0 * (d.pool_size + 1) as f64 / (d.pool_security_count + 1) as f64;
                assert!((e - want).abs() <= 4.0 * se.max(1e-9), "{e} vs {want}");
            }
        }
    }

    #[test]
    fn cdf_is_monotone_and_bounded() {
        let c = corpus(90, LeakStrengths::default(), 5);
        let from = c.timeline().period_start;
        let run = simulate_svm_daily(&c, &quick()).unwrap();
        for cdf in [effort_cdf(&run.series, from, 300).unwrap(), random_effort_cdf(&c, &quick(), from, 300).unwrap()] {
            for w in cdf.points.windows(2) {
                assert!(w[0].1 <= w[1].1 + 1e-12);
            }
            assert!(cdf.points.iter().all(|p| p.1 <= cdf.asymptote + 1e-12));
        }
        let late = c.timeline().period_end + chrono::Duration::days(1);
        assert!(matches!(effort_cdf(&run.series, late, 10), Err(SimError::EmptyWindow(_))));
    }

    #[test]
    fn all_ones_cdf_reaches_asymptote_at_one() {
        let day = NaiveDate::from_ymd_opt(2009, 1, 1).unwrap();
        let mk = |i: i64, effort: Option<f64>, sec: usize| DayEffort {
            day: day + chrono::Duration::days(i),
            pool_size: 10,
            pool_security_count: sec,
            effort,
            effort_se: None,
            status: DayStatus::Ok,
            params: None,
            note: None,
        };
        let days = (0..10).map(|i| if i == 0 { mk(i, None, 0) } else { mk(i, Some(1.0), 1) }).collect();
        let s = EffortSeries { ranker: RankerKind::Svm, k: 1, severity: SeverityFilter::All, days };
        let cdf = effort_cdf(&s, day, 5).unwrap();
        assert_eq!(cdf.asymptote, 0.9);
        assert_eq!(cdf.at(1), 0.9);
    }

    #[test]
    fn window_bounds_and_budget_monotonicity() {
        let c = corpus(60, LeakStrengths::default(), 6);
        let run = simulate_svm_daily(&c, &quick()).unwrap();
        let total_len: i64 = c.timeline().segments().iter().map(|s| s.len_days()).sum();
        assert_eq!(window_increase(&c, &run, 0).total_increase_days, 0.0);
        let mut prev = 0.0;
        for b in [1, 2, 3, 7, 20] {
            let w = window_increase(&c, &run, b).total_increase_days;
            assert!(w >= prev && w <= total_len as f64);
            prev = w;
        }
        // Unlimited budget: every segment gains from its first day with a fix.
        let max_pool = run.series.days.iter().map(|d| d.pool_size).max().unwrap() as u64;
        let full = window_increase(&c, &run, max_pool);
        for (seg, got) in c.timeline().segments().iter().zip(&full.per_segment) {
            let first = run.series.days.iter().find(|d| seg.contains(d.day) && d.pool_security_count > 0);
            let want = first.map_or(0, |d| (seg.end - d.day).num_days()) as f64;
            assert_eq!(*got, want);
        }
    }

    #[test]
    fn random_window_is_exact_for_first_fix_and_estimated_beyond() {
        let c = corpus(45, LeakStrengths::default(), 7);
        for b in [1, 3] {
            let exact = random_window_increase(&c, &quick(), b).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let schedules = segment_schedules(&c, SeverityFilter::All);
            let trials = 20_000;
            let mut total = 0.0;
            let mut var = 0.0;
            for (days, len) in &schedules {
                let xs: Vec<f64> = (0..trials).map(|_| window_trial(days, *len, b, 1, &mut rng) as f64).collect();
                let m = xs.iter().sum::<f64>() / trials as f64;
                var += xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (trials as f64 - 1.0) / trials as f64;
                total += m;
            }
            assert!(
                (total - exact.total_increase_days).abs() <= 4.0 * var.sqrt(),
                "b {b}: {total} vs {}",
                exact.total_increase_days
            );
        }
        let k2 = random_window_increase(&c, &SimConfig { k: 2, ..quick() }, 2).unwrap();
        assert!(k2.standard_error.is_some());
        assert!(k2.total_increase_days <= random_window_increase(&c, &quick(), 2).unwrap().total_increase_days + 1.0);
    }

    #[test]
    fn baseline_scales_factor() {
        let r = WindowReport::new(RankerKind::Svm, 1, vec![6.8, 0.0], None);
        assert_eq!(r.multiplicative_factor, Some(2.0));
        assert_eq!(r.clone().with_baseline(0.0).multiplicative_factor, None);
    }

    #[test]
    fn link_ranker_finds_restricted_fixes_first() {
        let c = corpus(45, LeakStrengths::none(), 8);
        let run = simulate_link_daily(&c, &quick(), &LinkAttackConfig::default()).unwrap();
        for d in &run.series.days {
            if d.pool_security_count > 0 {
                assert_eq!(d.effort, Some(1.0));
            }
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let c = corpus(50, LeakStrengths::default(), 9);
        let a = simulate_svm_daily(&c, &quick()).unwrap();
        let b = simulate_svm_daily(&c, &quick()).unwrap();
        assert_eq!(a, b);
    }
}
