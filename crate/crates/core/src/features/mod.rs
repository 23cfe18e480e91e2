//! Patch metadata features.
//!
//! Nominal features (author, top-level directory, file type, day of week) are
//! one-hot encoded; a category never seen in training encodes as an all-zero
//! block. Continuous features are min/max scaled to `[0, 1]` using the
//! training set and clamped at test time.

pub mod infogain;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PatchRecord;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature `{0}` is not nominal")]
    NotNominal(&'static str),
}

pub const NO_EXTENSION: &str = "(none)";
pub const ROOT_DIR: &str = "(root)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureId {
    Author,
    TopDir,
    FileType,
    DiffChars,
    DiffLines,
    DiffFiles,
    AvgFileSize,
    TimeOfDay,
    DayOfWeek,
}

impl FeatureId {
    pub const ALL: [FeatureId; 9] = [
        FeatureId::Author,
        FeatureId::TopDir,
        FeatureId::FileType,
        FeatureId::DiffChars,
        FeatureId::DiffLines,
        FeatureId::DiffFiles,
        FeatureId::AvgFileSize,
        FeatureId::TimeOfDay,
        FeatureId::DayOfWeek,
    ];

    pub const CONTINUOUS: [FeatureId; 5] = [
        FeatureId::DiffChars,
        FeatureId::DiffLines,
        FeatureId::DiffFiles,
        FeatureId::AvgFileSize,
        FeatureId::TimeOfDay,
    ];

    pub fn is_continuous(self) -> bool {
        Self::CONTINUOUS.contains(&self)
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureId::Author => "author",
            FeatureId::TopDir => "top_dir",
            FeatureId::FileType => "file_type",
            FeatureId::DiffChars => "diff_chars",
            FeatureId::DiffLines => "diff_lines",
            FeatureId::DiffFiles => "diff_files",
            FeatureId::AvgFileSize => "avg_file_size",
            FeatureId::TimeOfDay => "time_of_day",
            FeatureId::DayOfWeek => "day_of_week",
        }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureId {
    type Err = FeatureError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| FeatureError::UnknownFeature(s.to_string()))
    }
}

/// Units of removal for ablation. The four diff-size features go together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Author,
    TopDir,
    FileType,
    DiffSize,
    TimeOfDay,
    DayOfWeek,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 6] = [
        FeatureGroup::Author,
        FeatureGroup::TopDir,
        FeatureGroup::FileType,
        FeatureGroup::DiffSize,
        FeatureGroup::TimeOfDay,
        FeatureGroup::DayOfWeek,
    ];

    pub fn members(self) -> &'static [FeatureId] {
        match self {
            FeatureGroup::Author => &[FeatureId::Author],
            FeatureGroup::TopDir => &[FeatureId::TopDir],
            FeatureGroup::FileType => &[FeatureId::FileType],
            FeatureGroup::DiffSize => {
                &[FeatureId::DiffChars, FeatureId::DiffLines, FeatureId::DiffFiles, FeatureId::AvgFileSize]
            }
            FeatureGroup::TimeOfDay => &[FeatureId::TimeOfDay],
            FeatureGroup::DayOfWeek => &[FeatureId::DayOfWeek],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Author => "author",
            FeatureGroup::TopDir => "top_dir",
            FeatureGroup::FileType => "file_type",
            FeatureGroup::DiffSize => "diff_size",
            FeatureGroup::TimeOfDay => "time_of_day",
            FeatureGroup::DayOfWeek => "day_of_week",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = FeatureError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|g| g.name() == s).ok_or_else(|| FeatureError::UnknownFeature(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    enabled: [bool; 9],
}

impl Default for FeatureMask {
    fn default() -> Self {
        Self::all()
    }
}

impl FeatureMask {
    pub fn all() -> Self {
        Self { enabled: [true; 9] }
    }

    pub fn without(mut self, feature: FeatureId) -> Self {
        self.enabled[feature as usize] = false;
        self
    }

    pub fn without_group(self, group: FeatureGroup) -> Self {
        group.members().iter().fold(self, |m, f| m.without(*f))
    }

    pub fn is_enabled(&self, feature: FeatureId) -> bool {
        self.enabled[feature as usize]
    }
}

/// Metadata of one patch before encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeatures {
    pub author: String,
    pub top_dir: String,
    pub file_type: String,
    pub diff_chars: f64,
    pub diff_lines: f64,
    pub diff_files: f64,
    pub avg_file_size: f64,
    pub time_of_day: f64,
    /// 0 = Monday.
    pub day_of_week: u32,
}

impl RawFeatures {
    pub fn of(p: &PatchRecord) -> Self {
        Self {
            author: p.author.clone(),
            top_dir: majority(p.files.iter().map(|f| top_dir(f)), ROOT_DIR),
            file_type: majority(p.files.iter().map(|f| file_type(f)), NO_EXTENSION),
            diff_chars: p.diff_chars as f64,
            diff_lines: p.diff_lines as f64,
            diff_files: p.diff_files as f64,
            avg_file_size: p.avg_file_size,
            time_of_day: p.landed_at.num_seconds_from_midnight() as f64,
            day_of_week: p.landed_at.weekday().num_days_from_monday(),
        }
    }

    pub fn continuous(&self, f: FeatureId) -> Option<f64> {
        match f {
            FeatureId::DiffChars => Some(self.diff_chars),
            FeatureId::DiffLines => Some(self.diff_lines),
            FeatureId::DiffFiles => Some(self.diff_files),
            FeatureId::AvgFileSize => Some(self.avg_file_size),
            FeatureId::TimeOfDay => Some(self.time_of_day),
            _ => None,
        }
    }

    pub fn nominal(&self, f: FeatureId) -> Option<String> {
        match f {
            FeatureId::Author => Some(self.author.clone()),
            FeatureId::TopDir => Some(self.top_dir.clone()),
            FeatureId::FileType => Some(self.file_type.clone()),
            FeatureId::DayOfWeek => Some(self.day_of_week.to_string()),
            _ => None,
        }
    }
}

pub fn top_dir(path: &str) -> String {
    let path = path.trim_start_matches('/');
    match path.split_once('/') {
        Some((dir, _)) if !dir.is_empty() => dir.to_string(),
        _ => ROOT_DIR.to_string(),
    }
}

pub fn file_type(path: &str) -> String {
    let name = path.rsplit('/').next().unwrap_or(path);
    match name.rfind('.') {
        Some(i) if i > 0 && i + 1 < name.len() => name[i..].to_ascii_lowercase(),
        _ => NO_EXTENSION.to_string(),
    }
}

/// Most frequent value; ties go to the lexicographically smallest.
fn majority(values: impl Iterator<Item = String>, default: &str) -> String {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let mut best: Option<(&String, usize)> = None;
    for (v, c) in &counts {
        if best.is_none_or(|(_, bc)| *c > bc) {
            best = Some((v, *c));
        }
    }
    match best {
        Some((v, _)) => v.clone(),
        None => default.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub min: f64,
    pub max: f64,
}

impl Scale {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Self { min, max }
    }

    pub fn apply(&self, v: f64) -> f64 {
        let span = self.max - self.min;
        if span <= 0.0 {
            return 0.0;
        }
        ((v - self.min) / span).clamp(0.0, 1.0)
    }
}

/// Encoding layout learned from a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub authors: Vec<String>,
    pub top_dirs: Vec<String>,
    pub file_types: Vec<String>,
    /// Scales for the enabled continuous features, in [`FeatureId::CONTINUOUS`] order.
    pub continuous: Vec<(FeatureId, Scale)>,
    pub mask: FeatureMask,
}

pub type FeatureVector = Vec<f64>;

impl FeatureSchema {
    pub fn build(training: &[&PatchRecord], mask: FeatureMask) -> Result<Self, FeatureError> {
        let raws: Vec<RawFeatures> = training.iter().map(|p| RawFeatures::of(p)).collect();
        Self::build_from_raw(&raws, mask)
    }

    pub fn build_from_raw(raws: &[RawFeatures], mask: FeatureMask) -> Result<Self, FeatureError> {
        if raws.is_empty() {
            return Err(FeatureError::EmptyTrainingSet);
        }
        let categories = |f: FeatureId, get: fn(&RawFeatures) -> &String| -> Vec<String> {
            if !mask.is_enabled(f) {
                return Vec::new();
            }
            let mut v: Vec<String> = raws.iter().map(|r| get(r).clone()).collect();
            v.sort();
            v.dedup();
            v
        };
        let continuous = FeatureId::CONTINUOUS
            .into_iter()
            .filter(|f| mask.is_enabled(*f))
            .map(|f| (f, Scale::fit(raws.iter().map(|r| r.continuous(f).unwrap()))))
            .collect();
        Ok(Self {
            authors: categories(FeatureId::Author, |r| &r.author),
            top_dirs: categories(FeatureId::TopDir, |r| &r.top_dir),
            file_types: categories(FeatureId::FileType, |r| &r.file_type),
            continuous,
            mask,
        })
    }

    fn day_of_week_width(&self) -> usize {
        if self.mask.is_enabled(FeatureId::DayOfWeek) {
            7
        } else {
            0
        }
    }

    pub fn dim(&self) -> usize {
        self.authors.len()
            + self.top_dirs.len()
            + self.file_types.len()
            + self.continuous.len()
            + self.day_of_week_width()
    }

    pub fn extract(&self, p: &PatchRecord) -> FeatureVector {
        self.encode(&RawFeatures::of(p))
    }

    pub fn encode(&self, raw: &RawFeatures) -> FeatureVector {
        let mut v = Vec::with_capacity(self.dim());
        one_hot(&mut v, &self.authors, &raw.author);
        one_hot(&mut v, &self.top_dirs, &raw.top_dir);
        one_hot(&mut v, &self.file_types, &raw.file_type);
        for (f, scale) in &self.continuous {
            v.push(scale.apply(raw.continuous(*f).unwrap()));
        }
        if self.day_of_week_width() > 0 {
            let start = v.len();
            v.resize(start + 7, 0.0);
            v[start + raw.day_of_week as usize] = 1.0;
        }
        v
    }
}

fn one_hot(out: &mut Vec<f64>, categories: &[String], value: &str) {
    let start = out.len();
    out.resize(start + categories.len(), 0.0);
    if let Ok(i) = categories.binary_search_by(|c| c.as_str().cmp(value)) {
        out[start + i] = 1.0;
    }
}

/// Security and total counts for one value of a nominal feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueProportion {
    pub value: String,
    pub security: u64,
    pub total: u64,
}

impl ValueProportion {
    pub fn proportion(&self) -> f64 {
        self.security as f64 / self.total as f64
    }
}

/// Counts per value of a nominal feature, ordered by security proportion
/// (descending), then by total (descending), then by value.
pub fn value_proportions<'a>(
    patches: impl IntoIterator<Item = (&'a PatchRecord, bool)>,
    feature: FeatureId,
) -> Result<Vec<ValueProportion>, FeatureError> {
    let get: fn(RawFeatures) -> String = match feature {
        FeatureId::Author => |r| r.author,
        FeatureId::TopDir => |r| r.top_dir,
        FeatureId::FileType => |r| r.file_type,
        FeatureId::DayOfWeek => |r| r.day_of_week.to_string(),
        f => return Err(FeatureError::NotNominal(f.name())),
    };
    let mut counts: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for (p, security) in patches {
        let e = counts.entry(get(RawFeatures::of(p))).or_default();
        e.0 += security as u64;
        e.1 += 1;
    }
    let mut rows: Vec<ValueProportion> =
        counts.into_iter().map(|(value, (security, total))| ValueProportion { value, security, total }).collect();
    rows.sort_by(|a, b| {
        (b.security * a.total)
            .cmp(&(a.security * b.total))
            .then(b.total.cmp(&a.total))
            .then_with(|| a.value.cmp(&b.value))
    });
    Ok(rows)
}

pub fn build_schema(training: &[&PatchRecord], mask: FeatureMask) -> Result<FeatureSchema, FeatureError> {
    FeatureSchema::build(training, mask)
}

pub fn extract(schema: &FeatureSchema, p: &PatchRecord) -> FeatureVector {
    schema.extract(p)
}
