//! Seeded generator of Firefox-like patch streams with tunable leaks.
//!
//! Every knob lives in [`SynthConfig`], which reads from JSON with defaults
//! for any missing key:
//!
//! ```json
//! {
//!   "seed": 1,
//!   "start_date": "2008-06-17",
//!   "days": 300,
//!   "daily_rate": 38.6,
//!   "security_fraction": 0.0085,
//!   "n_authors": 516,
//!   "n_security_authors": 4,
//!   "update_every": 31,
//!   "update_days": null,
//!   "fixed_counts": null,
//!   "disclosure_lag_days": 2,
//!   "severity_mix": [0.1, 0.25, 0.3, 0.35],
//!   "leaks": {"author": 0.6, "top_dir": 0.5, "diff_size": 0.5, "file_type": 0.0, "time_of_day": 0.0},
//!   "obfuscate_descriptions": false
//! }
//! ```
//!
//! A leak strength of 0 makes security patches statistically identical to the
//! rest on that feature. For the author, top directory, file type and time of
//! day it is the probability that a security patch takes its value from the
//! small "hot" set instead of the shared base distribution; for diff size it
//! shifts the log-size of security patches down by `1.5 * strength`.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Poisson, Zipf};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    start_of_day, write_corpus, BugEvent, BugEventKind, BugEventLog, BugTracker, Corpus, CorpusError, PatchRecord,
    ReleaseTimeline, Severity, VulnerabilityLabel,
};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("cannot read config {path}: {message}")]
    Config { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeakStrengths {
    pub author: f64,
    pub top_dir: f64,
    pub diff_size: f64,
    pub file_type: f64,
    pub time_of_day: f64,
}

impl LeakStrengths {
    pub fn none() -> Self {
        Self { author: 0.0, top_dir: 0.0, diff_size: 0.0, file_type: 0.0, time_of_day: 0.0 }
    }
}

impl Default for LeakStrengths {
    fn default() -> Self {
        Self { author: 0.6, top_dir: 0.5, diff_size: 0.5, file_type: 0.0, time_of_day: 0.0 }
    }
}

/// Exact patch counts, placed on uniformly random days, in place of Poisson
/// daily landings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedCounts {
    pub non_security: usize,
    pub security: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub start_date: NaiveDate,
    pub days: u32,
    pub daily_rate: f64,
    pub security_fraction: f64,
    pub n_authors: usize,
    pub n_security_authors: usize,
    /// Days between security updates, the first one `update_every` days in.
    pub update_every: u32,
    /// Explicit update offsets in days from `start_date`; overrides
    /// `update_every`.
    pub update_days: Option<Vec<u32>>,
    pub fixed_counts: Option<FixedCounts>,
    /// Days after the shipping update at which a fix is announced.
    pub disclosure_lag_days: u32,
    /// Weights of low, moderate, high and critical.
    pub severity_mix: [f64; 4],
    pub leaks: LeakStrengths,
    /// Drop bug numbers from descriptions.
    pub obfuscate_descriptions: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            start_date: NaiveDate::from_ymd_opt(2008, 6, 17).expect("valid date"),
            days: 300,
            daily_rate: 38.6,
            security_fraction: 0.0085,
            n_authors: 516,
            n_security_authors: 4,
            update_every: 31,
            update_days: None,
            fixed_counts: None,
            disclosure_lag_days: 2,
            severity_mix: [0.1, 0.25, 0.3, 0.35],
            leaks: LeakStrengths::default(),
            obfuscate_descriptions: false,
        }
    }
}

impl SynthConfig {
    pub fn from_json(s: &str) -> Result<Self, SynthError> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SynthError::Config { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text).map_err(|e| match e {
            SynthError::InvalidConfig(message) => SynthError::Config { path: path.display().to_string(), message },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.days < 2 {
            return bad(format!("days must be at least 2, got {}", self.days));
        }
        if self.fixed_counts.is_none() && !(self.daily_rate > 0.0 && self.daily_rate.is_finite()) {
            return bad(format!("daily_rate must be positive, got {}", self.daily_rate));
        }
        if !(0.0..=1.0).contains(&self.security_fraction) {
            return bad(format!("security_fraction must be in [0, 1], got {}", self.security_fraction));
        }
        if self.n_authors == 0 || self.n_security_authors > self.n_authors {
            return bad(format!(
                "need 0 <= n_security_authors <= n_authors and n_authors > 0, got {} and {}",
                self.n_security_authors, self.n_authors
            ));
        }
        if self.update_days.is_none() && self.update_every == 0 {
            return bad("update_every must be positive".into());
        }
        if let Some(u) = &self.update_days {
            if u.windows(2).any(|w| w[0] >= w[1]) || u.iter().any(|&d| d >= self.days) {
                return bad("update_days must be strictly increasing offsets inside the period".into());
            }
        }
        if self.severity_mix.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
            || self.severity_mix.iter().sum::<f64>() <= 0.0
        {
            return bad("severity_mix needs non-negative weights with a positive sum".into());
        }
        let l = &self.leaks;
        for (name, v) in [
            ("author", l.author),
            ("top_dir", l.top_dir),
            ("diff_size", l.diff_size),
            ("file_type", l.file_type),
            ("time_of_day", l.time_of_day),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("leak strength {name} must be in [0, 1], got {v}"));
            }
        }
        if l.author > 0.0 && self.n_security_authors == 0 {
            return bad("an author leak needs at least one security author".into());
        }
        Ok(())
    }

    pub fn update_offsets(&self) -> Vec<u32> {
        match &self.update_days {
            Some(u) => u.clone(),
            None => (1..).map(|i| i * self.update_every).take_while(|&d| d < self.days).collect(),
        }
    }
}

const TOP_DIRS: [&str; 30] = [
    "content",
    "js",
    "layout",
    "dom",
    "browser",
    "toolkit",
    "netwerk",
    "gfx",
    "widget",
    "xpcom",
    "modules",
    "db",
    "security",
    "testing",
    "build",
    "config",
    "docshell",
    "editor",
    "intl",
    "ipc",
    "parser",
    "storage",
    "uriloader",
    "view",
    "xpfe",
    "embedding",
    "extensions",
    "accessible",
    "caps",
    "chrome",
];
const HOT_DIRS: [&str; 4] = ["content", "js", "layout", "dom"];
const EXTENSIONS: [&str; 10] = ["cpp", "h", "js", "xul", "css", "idl", "html", "py", "mk", "in"];
const HOT_EXTENSIONS: [&str; 2] = ["cpp", "h"];
const SUBDIRS: [&str; 8] = ["src", "base", "public", "tests", "generic", "style", "xul", "jsd"];
const STEMS: [&str; 12] = [
    "nsFrame",
    "nsDocument",
    "jsinterp",
    "nsCSSParser",
    "nsGlobalWindow",
    "jsobj",
    "nsHTMLEditor",
    "nsXULElement",
    "nsNodeUtils",
    "nsContentUtils",
    "jsgc",
    "nsImageLoader",
];
const VERBS: [&str; 10] = [
    "Fix",
    "Crash in",
    "Assertion in",
    "Clean up",
    "Handle null in",
    "Update",
    "Remove",
    "Simplify",
    "Check bounds in",
    "Refactor",
];
const OBJECTS: [&str; 10] = [
    "frame construction",
    "event dispatch",
    "style resolution",
    "GC marking",
    "the URL parser",
    "image decoding",
    "the editor",
    "session restore",
    "plugin teardown",
    "DOM mutation",
];
/// Late-night window in seconds for a time-of-day leak.
const HOT_HOURS: std::ops::Range<u32> = 0..6 * 3600;

struct Draft {
    day: u32,
    security: bool,
}

/// Builds a corpus from the configuration. Identical configs give identical
/// corpora.
pub fn generate(cfg: &SynthConfig) -> Result<Corpus, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let err = |e: &dyn std::fmt::Display| SynthError::InvalidConfig(e.to_string());

    let period_end = cfg.start_date + Duration::days(cfg.days as i64 - 1);
    let updates: Vec<NaiveDate> =
        cfg.update_offsets().iter().map(|&d| cfg.start_date + Duration::days(d as i64)).collect();
    let timeline = ReleaseTimeline::new(cfg.start_date, period_end, updates.clone())?;

    let mut drafts = Vec::new();
    match cfg.fixed_counts {
        Some(fc) => {
            let mut flags: Vec<bool> = std::iter::repeat_n(true, fc.security)
                .chain(std::iter::repeat_n(false, fc.non_security))
                .collect();
            flags.shuffle(&mut rng);
            for security in flags {
                drafts.push(Draft { day: rng.gen_range(0..cfg.days), security });
            }
            drafts.sort_by_key(|d| d.day);
        }
        None => {
            let poisson = Poisson::new(cfg.daily_rate).map_err(|e| err(&e))?;
            for day in 0..cfg.days {
                let count = poisson.sample(&mut rng) as u64;
                for _ in 0..count {
                    drafts.push(Draft { day, security: rng.gen_bool(cfg.security_fraction) });
                }
            }
        }
    }

    let mut author_names: Vec<String> = (0..cfg.n_authors).map(|i| format!("dev{i:03}@example.org")).collect();
    author_names.shuffle(&mut rng);
    let security_authors: Vec<String> = author_names[..cfg.n_security_authors].to_vec();
    // Popularity order is independent of security-group membership.
    author_names.shuffle(&mut rng);
    let author_zipf = Zipf::new(cfg.n_authors as u64, 1.0).map_err(|e| err(&e))?;
    let dir_zipf = Zipf::new(TOP_DIRS.len() as u64, 1.0).map_err(|e| err(&e))?;
    let ext_zipf = Zipf::new(EXTENSIONS.len() as u64, 1.2).map_err(|e| err(&e))?;
    let extra_files = Poisson::new(1.2).map_err(|e| err(&e))?;
    let line_width: LogNormal<f64> = LogNormal::new(3.5, 0.3).map_err(|e| err(&e))?;
    let file_size: LogNormal<f64> = LogNormal::new(9.5, 1.0).map_err(|e| err(&e))?;
    let severity = WeightedIndex::new(cfg.severity_mix).map_err(|e| err(&e))?;

    let mut ids = HashSet::new();
    let mut bug_id: u64 = 440_000;
    let mut patches = Vec::with_capacity(drafts.len());
    let mut labels = Vec::with_capacity(drafts.len());
    let mut logs = BTreeMap::new();
    let leaks = cfg.leaks;

    for d in &drafts {
        let leak = |rng: &mut ChaCha8Rng, strength: f64| d.security && strength > 0.0 && rng.gen_bool(strength);

        let secs = if leak(&mut rng, leaks.time_of_day) { rng.gen_range(HOT_HOURS) } else { rng.gen_range(0..86_400) };
        let day = cfg.start_date + Duration::days(d.day as i64);
        let landed_at = start_of_day(day) + Duration::seconds(secs as i64);

        let author = if leak(&mut rng, leaks.author) {
            security_authors.choose(&mut rng).expect("security authors exist").clone()
        } else {
            author_names[author_zipf.sample(&mut rng) as usize - 1].clone()
        };
        let dir = if leak(&mut rng, leaks.top_dir) {
            *HOT_DIRS.choose(&mut rng).expect("nonempty")
        } else {
            TOP_DIRS[dir_zipf.sample(&mut rng) as usize - 1]
        };
        let ext = if leak(&mut rng, leaks.file_type) {
            *HOT_EXTENSIONS.choose(&mut rng).expect("nonempty")
        } else {
            EXTENSIONS[ext_zipf.sample(&mut rng) as usize - 1]
        };

        // The chosen directory and extension hold a strict majority of files.
        let n_files = 1 + extra_files.sample(&mut rng) as usize;
        let n_other = rng.gen_range(0..=(n_files - 1) / 2);
        let mut files = Vec::with_capacity(n_files);
        for f in 0..n_files {
            let (fd, fe) = if f < n_files - n_other {
                (dir, ext)
            } else {
                (TOP_DIRS[rng.gen_range(0..TOP_DIRS.len())], EXTENSIONS[rng.gen_range(0..EXTENSIONS.len())])
            };
            files.push(format!(
                "{fd}/{}/{}{}.{fe}",
                SUBDIRS[rng.gen_range(0..SUBDIRS.len())],
                STEMS[rng.gen_range(0..STEMS.len())],
                f
            ));
        }
        files.sort();
        files.dedup();

        let mu = 4.0 - if d.security { 1.5 * leaks.diff_size } else { 0.0 };
        let lines_dist = LogNormal::new(mu, 1.2).map_err(|e| err(&e))?;
        let diff_lines = (lines_dist.sample(&mut rng).round() as u64).max(1);
        let diff_chars = diff_lines * (line_width.sample(&mut rng).round() as u64).max(1);

        bug_id += rng.gen_range(1..400);
        let description = if cfg.obfuscate_descriptions {
            format!("{} {}", VERBS.choose(&mut rng).expect("nonempty"), OBJECTS.choose(&mut rng).expect("nonempty"))
        } else {
            format!(
                "Bug {bug_id} - {} {}. r=reviewer",
                VERBS.choose(&mut rng).expect("nonempty"),
                OBJECTS.choose(&mut rng).expect("nonempty")
            )
        };

        let patch_id = loop {
            let id = format!("{:012x}", rng.gen::<u64>() & 0xffff_ffff_ffff);
            if ids.insert(id.clone()) {
                break id;
            }
        };

        let (disclosed_at, sev, events) = if d.security {
            let ship = updates.iter().copied().find(|u| *u > day).unwrap_or(period_end + Duration::days(1));
            let disclosed = start_of_day(ship + Duration::days(cfg.disclosure_lag_days as i64));
            let filed = landed_at - Duration::seconds(rng.gen_range(3600..20 * 86_400));
            let opened = disclosed + Duration::days(rng.gen_range(30..120));
            let events = vec![
                BugEvent { at: filed, kind: BugEventKind::Restricted },
                BugEvent { at: filed, kind: BugEventKind::CoreSecurityAdded },
                BugEvent { at: opened, kind: BugEventKind::Unrestricted },
            ];
            (Some(disclosed), Some(Severity::ALL[severity.sample(&mut rng)]), events)
        } else {
            (None, None, Vec::new())
        };
        logs.insert(bug_id, BugEventLog { bug_id, events });

        labels.push(VulnerabilityLabel {
            patch_id: patch_id.clone(),
            is_security: d.security,
            disclosed_at,
            severity: sev,
        });
        patches.push(PatchRecord {
            patch_id,
            landed_at,
            author,
            description,
            diff_files: files.len() as u64,
            files,
            diff_chars,
            diff_lines,
            avg_file_size: (file_size.sample(&mut rng) * 100.0).round() / 100.0,
        });
    }

    let tracker = BugTracker::new(logs.into_values().collect())?;
    Ok(Corpus::new(patches, labels, timeline, Some(tracker))?)
}

/// Generates and writes the corpus files into `dir`.
pub fn generate_to_dir(cfg: &SynthConfig, dir: impl AsRef<Path>) -> Result<Corpus, SynthError> {
    let corpus = generate(cfg)?;
    write_corpus(&corpus, dir)?;
    Ok(corpus)
}
