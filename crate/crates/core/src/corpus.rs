//! Patch corpus data model and on-disk format.
//!
//! A corpus directory holds four files:
//!
//! * `patches.jsonl`: one landed patch per line.
//! * `labels.jsonl`: ground truth for security fixes (unlisted patches are non-security).
//! * `timeline.json`: the release period and its security update dates.
//! * `bug_events.jsonl` (optional): bug-tracker snapshot used by the link attack.
//!
//! All timestamps are UTC. A "day" is a UTC calendar date. On a security
//! update date the pool of unreleased patches resets at 00:00 UTC, so
//! patches landed on the update date belong to the new pool.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PATCHES_FILE: &str = "patches.jsonl";
pub const LABELS_FILE: &str = "labels.jsonl";
pub const TIMELINE_FILE: &str = "timeline.json";
pub const BUG_EVENTS_FILE: &str = "bug_events.jsonl";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord { path: PathBuf, line: usize, message: String },
    #[error("label references unknown patch `{0}`")]
    DanglingLabel(String),
    #[error("patch `{id}` landed at {landed_at} outside the period {start}..={end}")]
    TimelineViolation { id: String, landed_at: DateTime<Utc>, start: NaiveDate, end: NaiveDate },
    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),
    #[error("invalid patch `{id}`: {reason}")]
    InvalidPatch { id: String, reason: String },
    #[error("invalid label for `{id}`: {reason}")]
    InvalidLabel { id: String, reason: String },
    #[error("invalid bug log {bug_id}: {reason}")]
    InvalidBugLog { bug_id: u64, reason: String },
    #[error("day {day} outside the period {start}..={end}")]
    DayOutOfRange { day: NaiveDate, start: NaiveDate, end: NaiveDate },
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Low,
    Moderate,
    High,
    Critical,
}

impl Severity {
    pub const ALL: [Severity; 4] = [Severity::Low, Severity::Moderate, Severity::High, Severity::Critical];

    /// High or critical.
    pub fn is_severe(self) -> bool {
        matches!(self, Severity::High | Severity::Critical)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRecord {
    #[serde(rename = "id")]
    pub patch_id: String,
    pub landed_at: DateTime<Utc>,
    pub author: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub files: Vec<String>,
    pub diff_chars: u64,
    pub diff_lines: u64,
    pub diff_files: u64,
    pub avg_file_size: f64,
}

impl PatchRecord {
    pub fn landed_day(&self) -> NaiveDate {
        self.landed_at.date_naive()
    }

    fn validate(&self) -> Result<()> {
        let fail = |reason: &str| CorpusError::InvalidPatch { id: self.patch_id.clone(), reason: reason.to_string() };
        if self.patch_id.is_empty() {
            return Err(fail("empty id"));
        }
        if !self.files.is_empty() && self.diff_files != self.files.len() as u64 {
            return Err(fail("diff_files does not match the number of files"));
        }
        if self.diff_lines > self.diff_chars {
            return Err(fail("diff_lines exceeds diff_chars"));
        }
        if !(self.avg_file_size.is_finite() && self.avg_file_size >= 0.0) {
            return Err(fail("avg_file_size must be a non-negative number"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityLabel {
    #[serde(rename = "id")]
    pub patch_id: String,
    pub is_security: bool,
    #[serde(default)]
    pub disclosed_at: Option<DateTime<Utc>>,
    #[serde(default)]
    pub severity: Option<Severity>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseTimeline {
    pub period_start: NaiveDate,
    pub period_end: NaiveDate,
    pub security_updates: Vec<NaiveDate>,
}

/// A run of days between two consecutive pool resets; `end` is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Segment {
    pub fn len_days(&self) -> i64 {
        (self.end - self.start).num_days()
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        self.start <= day && day < self.end
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        let start = self.start;
        (0..self.len_days()).map(move |i| start + Duration::days(i))
    }
}

impl ReleaseTimeline {
    pub fn new(period_start: NaiveDate, period_end: NaiveDate, security_updates: Vec<NaiveDate>) -> Result<Self> {
        let timeline = Self { period_start, period_end, security_updates };
        timeline.validate()?;
        Ok(timeline)
    }

    fn validate(&self) -> Result<()> {
        if self.period_start >= self.period_end {
            return Err(CorpusError::InvalidTimeline("period_start must precede period_end".into()));
        }
        if self.security_updates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CorpusError::InvalidTimeline("security updates must be strictly increasing".into()));
        }
        if let Some(bad) = self.security_updates.iter().find(|u| **u < self.period_start || **u > self.period_end) {
            return Err(CorpusError::InvalidTimeline(format!("security update {bad} outside the period")));
        }
        Ok(())
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        self.period_start <= day && day <= self.period_end
    }

    pub fn check_day(&self, day: NaiveDate) -> Result<()> {
        if self.contains(day) {
            Ok(())
        } else {
            Err(CorpusError::DayOutOfRange { day, start: self.period_start, end: self.period_end })
        }
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        let start = self.period_start;
        let n = (self.period_end - self.period_start).num_days() + 1;
        (0..n).map(move |i| start + Duration::days(i))
    }

    pub fn num_days(&self) -> i64 {
        (self.period_end - self.period_start).num_days() + 1
    }

    /// Most recent security update on or before `day`.
    pub fn most_recent_update(&self, day: NaiveDate) -> Option<NaiveDate> {
        let idx = self.security_updates.partition_point(|u| *u <= day);
        idx.checked_sub(1).map(|i| self.security_updates[i])
    }

    /// Date at which the pool containing `day` started.
    pub fn pool_start(&self, day: NaiveDate) -> NaiveDate {
        self.most_recent_update(day).unwrap_or(self.period_start)
    }

    /// Inter-release segments. There are `security_updates.len() + 1` of them
    /// unless an update falls on `period_start`, in which case the empty
    /// leading segment is dropped. The last one ends the day after `period_end`.
    pub fn segments(&self) -> Vec<Segment> {
        let mut bounds = vec![self.period_start];
        bounds.extend(self.security_updates.iter().copied().filter(|u| *u > self.period_start));
        bounds.push(self.period_end + Duration::days(1));
        bounds.windows(2).map(|w| Segment { start: w[0], end: w[1] }).collect()
    }

    pub fn segment_of(&self, day: NaiveDate) -> Option<Segment> {
        self.segments().into_iter().find(|s| s.contains(day))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BugEventKind {
    Restricted,
    Unrestricted,
    CoreSecurityAdded,
    CoreSecurityRemoved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugEvent {
    pub at: DateTime<Utc>,
    pub kind: BugEventKind,
}

/// Dated access-control history of one bug.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugEventLog {
    pub bug_id: u64,
    #[serde(default)]
    pub events: Vec<BugEvent>,
}

impl BugEventLog {
    fn validate(&self) -> Result<()> {
        if self.bug_id == 0 {
            return Err(CorpusError::InvalidBugLog { bug_id: 0, reason: "bug ids are positive".into() });
        }
        if self.events.windows(2).any(|w| w[0].at > w[1].at) {
            return Err(CorpusError::InvalidBugLog {
                bug_id: self.bug_id,
                reason: "events not sorted by timestamp".into(),
            });
        }
        Ok(())
    }
}

/// Snapshot of the bug tracker, keyed by bug id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BugTracker {
    logs: BTreeMap<u64, BugEventLog>,
}

impl BugTracker {
    pub fn new(logs: Vec<BugEventLog>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for log in logs {
            log.validate()?;
            let id = log.bug_id;
            if map.insert(id, log).is_some() {
                return Err(CorpusError::InvalidBugLog { bug_id: id, reason: "duplicate bug id".into() });
            }
        }
        Ok(Self { logs: map })
    }

    pub fn get(&self, bug_id: u64) -> Option<&BugEventLog> {
        self.logs.get(&bug_id)
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BugEventLog> {
        self.logs.values()
    }
}

/// A validated, immutable patch corpus. Patches are kept sorted by
/// `(landed_at, patch_id)`, so every pool and training set is a contiguous
/// index range.
#[derive(Debug, Clone)]
pub struct Corpus {
    patches: Vec<PatchRecord>,
    labels: Vec<VulnerabilityLabel>,
    timeline: ReleaseTimeline,
    bug_events: Option<BugTracker>,
    label_of: Vec<Option<usize>>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.patches == other.patches
            && self.labels == other.labels
            && self.timeline == other.timeline
            && self.bug_events == other.bug_events
    }
}

impl Corpus {
    pub fn new(
        mut patches: Vec<PatchRecord>,
        mut labels: Vec<VulnerabilityLabel>,
        timeline: ReleaseTimeline,
        bug_events: Option<BugTracker>,
    ) -> Result<Self> {
        timeline.validate()?;
        patches.sort_by(|a, b| a.landed_at.cmp(&b.landed_at).then_with(|| a.patch_id.cmp(&b.patch_id)));
        let mut index = HashMap::with_capacity(patches.len());
        for (i, p) in patches.iter().enumerate() {
            p.validate()?;
            if !timeline.contains(p.landed_day()) {
                return Err(CorpusError::TimelineViolation {
                    id: p.patch_id.clone(),
                    landed_at: p.landed_at,
                    start: timeline.period_start,
                    end: timeline.period_end,
                });
            }
            if index.insert(p.patch_id.as_str(), i).is_some() {
                return Err(CorpusError::InvalidPatch { id: p.patch_id.clone(), reason: "duplicate patch id".into() });
            }
        }

        labels.sort_by(|a, b| index.get(a.patch_id.as_str()).cmp(&index.get(b.patch_id.as_str())));
        let mut label_of = vec![None; patches.len()];
        let mut seen = HashSet::new();
        for (li, label) in labels.iter().enumerate() {
            let Some(&pi) = index.get(label.patch_id.as_str()) else {
                return Err(CorpusError::DanglingLabel(label.patch_id.clone()));
            };
            let fail =
                |reason: &str| CorpusError::InvalidLabel { id: label.patch_id.clone(), reason: reason.to_string() };
            if !seen.insert(pi) {
                return Err(fail("duplicate label"));
            }
            if label.is_security != label.severity.is_some() {
                return Err(fail("severity must be present exactly for security fixes"));
            }
            if label.is_security && label.disclosed_at.is_none() {
                return Err(fail("security fixes need a disclosure date"));
            }
            if let Some(d) = label.disclosed_at {
                if d < patches[pi].landed_at {
                    return Err(fail("disclosed before the patch landed"));
                }
            }
            label_of[pi] = Some(li);
        }

        Ok(Self { patches, labels, timeline, bug_events, label_of })
    }

    pub fn patches(&self) -> &[PatchRecord] {
        &self.patches
    }

    pub fn labels(&self) -> &[VulnerabilityLabel] {
        &self.labels
    }

    pub fn timeline(&self) -> &ReleaseTimeline {
        &self.timeline
    }

    pub fn bug_events(&self) -> Option<&BugTracker> {
        self.bug_events.as_ref()
    }

    pub fn label(&self, idx: usize) -> Option<&VulnerabilityLabel> {
        self.label_of[idx].map(|l| &self.labels[l])
    }

    /// Ground truth, regardless of disclosure.
    pub fn is_security(&self, idx: usize) -> bool {
        self.label(idx).is_some_and(|l| l.is_security)
    }

    pub fn severity(&self, idx: usize) -> Option<Severity> {
        self.label(idx).and_then(|l| l.severity)
    }

    pub fn security_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_security).count()
    }

    /// What a public observer knows at the start of `day`: the patch is a
    /// disclosed security fix. Undisclosed fixes read as non-security.
    pub fn is_known_security(&self, idx: usize, day: NaiveDate) -> bool {
        self.label(idx).is_some_and(|l| l.is_security && l.disclosed_at.is_some_and(|d| d < start_of_day(day)))
    }

    /// First patch index landed at or after the start of `day`.
    fn lower_bound(&self, day: NaiveDate) -> usize {
        let t = start_of_day(day);
        self.patches.partition_point(|p| p.landed_at < t)
    }

    pub fn pool_range(&self, day: NaiveDate) -> Result<Range<usize>> {
        self.timeline.check_day(day)?;
        let start = self.lower_bound(self.timeline.pool_start(day));
        let end = self.lower_bound(day + Duration::days(1));
        Ok(start..end)
    }

    pub fn patches_in_pool(&self, day: NaiveDate) -> Result<Vec<&PatchRecord>> {
        Ok(self.patches[self.pool_range(day)?].iter().collect())
    }

    /// Patches landed before the most recent security update on or before `day`.
    pub fn training_range(&self, day: NaiveDate) -> Result<Range<usize>> {
        self.timeline.check_day(day)?;
        Ok(match self.timeline.most_recent_update(day) {
            Some(update) => 0..self.lower_bound(update),
            None => 0..0,
        })
    }

    pub fn labeled_training_set(&self, day: NaiveDate) -> Result<Vec<(&PatchRecord, bool)>> {
        Ok(self.training_range(day)?.map(|i| (&self.patches[i], self.is_known_security(i, day))).collect())
    }

    pub fn index_of(&self, patch_id: &str) -> Option<usize> {
        self.patches.iter().position(|p| p.patch_id == patch_id)
    }
}

pub fn start_of_day(day: NaiveDate) -> DateTime<Utc> {
    day.and_hms_opt(0, 0, 0).expect("midnight is a valid time").and_utc()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, records: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| CorpusError::Io { path: path.to_path_buf(), source: e.into() })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Loads and validates a corpus directory.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    let patches = read_jsonl(&dir.join(PATCHES_FILE))?;
    let labels = read_jsonl(&dir.join(LABELS_FILE))?;

    let tl_path = dir.join(TIMELINE_FILE);
    let text = fs::read_to_string(&tl_path).map_err(io_err(&tl_path))?;
    let timeline: ReleaseTimeline = serde_json::from_str(&text).map_err(|e| CorpusError::MalformedRecord {
        path: tl_path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;

    let bug_path = dir.join(BUG_EVENTS_FILE);
    let bug_events = if bug_path.exists() { Some(BugTracker::new(read_jsonl(&bug_path)?)?) } else { None };
    Corpus::new(patches, labels, timeline, bug_events)
}

/// Writes a corpus in the directory layout read by [`load_corpus`].
pub fn write_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_jsonl(&dir.join(PATCHES_FILE), &corpus.patches)?;
    write_jsonl(&dir.join(LABELS_FILE), &corpus.labels)?;
    let tl_path = dir.join(TIMELINE_FILE);
    let mut text = serde_json::to_string_pretty(&corpus.timeline).expect("timeline serializes");
    text.push('\n');
    fs::write(&tl_path, text).map_err(io_err(&tl_path))?;
    if let Some(bugs) = &corpus.bug_events {
        write_jsonl(&dir.join(BUG_EVENTS_FILE), bugs.iter())?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    pub fn at(s: &str) -> DateTime<Utc> {
        s.parse().unwrap()
    }

    pub fn patch(id: &str, landed: &str) -> PatchRecord {
        PatchRecord {
            patch_id: id.to_string(),
            landed_at: at(landed),
            author: "dev@example.org".into(),
            description: String::new(),
            files: vec!["content/base/a.cpp".into()],
            diff_chars: 120,
            diff_lines: 8,
            diff_files: 1,
            avg_file_size: 4000.0,
        }
    }

    pub fn security(id: &str, disclosed: &str, severity: Severity) -> VulnerabilityLabel {
        VulnerabilityLabel {
            patch_id: id.to_string(),
            is_security: true,
            disclosed_at: Some(at(disclosed)),
            severity: Some(severity),
        }
    }

    /// Period 2009-01-01..=2009-03-31 with updates on day 35 (2009-02-04) and 2009-03-10.
    pub fn timeline() -> ReleaseTimeline {
        ReleaseTimeline::new(date("2009-01-01"), date("2009-03-31"), vec![date("2009-02-04"), date("2009-03-10")])
            .unwrap()
    }
}
