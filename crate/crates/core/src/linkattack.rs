//! Bug-link attack: read bug numbers out of patch descriptions and look them
//! up in a bug-tracker snapshot. A bug whose page is access restricted, or
//! which ever had its core-security flag toggled, marks the patch as a
//! security fix.

use std::collections::HashSet;

use chrono::{Duration, NaiveDate};
use regex::Regex;
use thiserror::Error;

use crate::corpus::{start_of_day, BugEventKind, BugTracker, Corpus, CorpusError};

#[derive(Debug, Error)]
pub enum LinkAttackError {
    #[error("corpus has no bug event snapshot")]
    MissingBugEvents,
    #[error("k must be positive")]
    InvalidK,
    #[error("invalid bug id pattern: {0}")]
    Pattern(#[from] regex::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Default pattern: the word "bug" followed by optional separators and 4 to 9
/// digits, or a bare leading number followed by a dash or colon.
pub const DEFAULT_BUG_PATTERN: &str = r"(?i)\bbug\b[\s#:=_.\-]*(\d{4,9})\b|^\s*(\d{4,9})\s*[-\u{2013}\u{2014}:]";

#[derive(Debug, Clone)]
pub struct BugIdExtractor {
    re: Regex,
}

impl Default for BugIdExtractor {
    fn default() -> Self {
        Self::new(DEFAULT_BUG_PATTERN).expect("default pattern compiles")
    }
}

impl BugIdExtractor {
    /// Each match contributes its first participating capture group.
    pub fn new(pattern: &str) -> Result<Self, regex::Error> {
        Ok(Self { re: Regex::new(pattern)? })
    }

    /// Distinct bug ids in order of first appearance.
    pub fn extract(&self, description: &str) -> Vec<u64> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for caps in self.re.captures_iter(description) {
            let Some(m) = caps.iter().skip(1).flatten().next() else {
                continue;
            };
            if let Ok(id) = m.as_str().parse::<u64>() {
                if id > 0 && seen.insert(id) {
                    out.push(id);
                }
            }
        }
        out
    }
}

pub fn extract_bug_ids(description: &str) -> Vec<u64> {
    BugIdExtractor::default().extract(description)
}

#[derive(Debug, Clone, Default)]
pub struct LinkAttackConfig {
    pub extractor: BugIdExtractor,
    /// Treat bugs missing from the snapshot as access restricted, the way a
    /// denied page looks on the live tracker.
    pub absent_means_restricted: bool,
}

/// True iff any referenced bug shows, before the end of `day`, an open access
/// restriction or any core-security flag change.
pub fn is_security_evident(
    bug_ids: &[u64],
    tracker: &BugTracker,
    day: NaiveDate,
    absent_means_restricted: bool,
) -> bool {
    let cutoff = start_of_day(day + Duration::days(1));
    bug_ids.iter().any(|id| {
        let Some(log) = tracker.get(*id) else {
            return absent_means_restricted;
        };
        let mut restricted = false;
        for ev in log.events.iter().take_while(|e| e.at < cutoff) {
            match ev.kind {
                BugEventKind::CoreSecurityAdded | BugEventKind::CoreSecurityRemoved => return true,
                BugEventKind::Restricted => restricted = true,
                BugEventKind::Unrestricted => restricted = false,
            }
        }
        restricted
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkDay {
    pub day: NaiveDate,
    pub pool_size: usize,
    /// Pool patches that are true security fixes and show evidence.
    pub found_count: usize,
    /// Pool patches with evidence, including false alarms.
    pub flagged_count: usize,
    pub first_found_patch_id: Option<String>,
    /// 1 when the attacker already holds k found fixes in this segment.
    pub window_contribution_days: u32,
    /// Tracker lookups issued that day: one per bug id of each newly landed patch.
    pub lookups: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkAttackSeries {
    pub k: usize,
    pub days: Vec<LinkDay>,
}

impl LinkAttackSeries {
    pub fn days_satisfied(&self) -> Vec<NaiveDate> {
        self.days.iter().filter(|d| d.found_count >= self.k).map(|d| d.day).collect()
    }

    pub fn total_window_increase(&self) -> u32 {
        self.days.iter().map(|d| d.window_contribution_days).sum()
    }
}

/// Per-patch bug ids for the whole corpus.
pub fn corpus_bug_ids(corpus: &Corpus, extractor: &BugIdExtractor) -> Vec<Vec<u64>> {
    corpus.patches().iter().map(|p| extractor.extract(&p.description)).collect()
}

/// Runs the attack on every day of the period. A day counts when at least
/// `k` security fixes in the pool are evident; the segment's window gain
/// starts on the first such day.
pub fn link_attack_daily(
    corpus: &Corpus,
    k: usize,
    config: &LinkAttackConfig,
) -> Result<LinkAttackSeries, LinkAttackError> {
    if k == 0 {
        return Err(LinkAttackError::InvalidK);
    }
    let tracker = corpus.bug_events().ok_or(LinkAttackError::MissingBugEvents)?;
    let bug_ids = corpus_bug_ids(corpus, &config.extractor);
    let timeline = corpus.timeline();
    let mut days = Vec::with_capacity(timeline.num_days() as usize);
    for seg in timeline.segments() {
        let mut known = false;
        for day in seg.days() {
            let pool = corpus.pool_range(day)?;
            let today = corpus.pool_range(day)?.filter(|&i| corpus.patches()[i].landed_day() == day);
            let lookups = today.map(|i| bug_ids[i].len()).sum();
            let mut found_count = 0;
            let mut flagged_count = 0;
            let mut first = None;
            for i in pool.clone() {
                if !is_security_evident(&bug_ids[i], tracker, day, config.absent_means_restricted) {
                    continue;
                }
                flagged_count += 1;
                if corpus.is_security(i) {
                    found_count += 1;
                    first.get_or_insert_with(|| corpus.patches()[i].patch_id.clone());
                }
            }
            known |= found_count >= k;
            days.push(LinkDay {
                day,
                pool_size: pool.len(),
                found_count,
                flagged_count,
                first_found_patch_id: first,
                window_contribution_days: u32::from(known),
                lookups,
            });
        }
    }
    Ok(LinkAttackSeries { k, days })
}

/// Pool indices in the link attacker's examination order: evident patches
/// first, then the rest, each group by landing time.
pub fn link_ranking(
    corpus: &Corpus,
    bug_ids: &[Vec<u64>],
    day: NaiveDate,
    absent_means_restricted: bool,
) -> Result<Vec<usize>, LinkAttackError> {
    let tracker = corpus.bug_events().ok_or(LinkAttackError::MissingBugEvents)?;
    let (mut evident, rest): (Vec<usize>, Vec<usize>) =
        corpus.pool_range(day)?.partition(|&i| is_security_evident(&bug_ids[i], tracker, day, absent_means_restricted));
    evident.extend(rest);
    Ok(evident)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;
    use crate::corpus::{BugEvent, BugEventLog, Severity};
    use proptest::prelude::*;

    #[test]
    fn extracts_leading_bug_number() {
        assert_eq!(extract_bug_ids("Bug 495875 - Crash in nsFrame, r=dbaron"), vec![495875]);
        assert_eq!(extract_bug_ids("495875 - Crash in nsFrame"), vec![495875]);
        assert_eq!(extract_bug_ids("bug#1234567: fix"), vec![1234567]);
    }

    #[test]
    fn empty_description_has_no_ids() {
        assert!(extract_bug_ids("").is_empty());
        assert!(extract_bug_ids("Backed out changeset 3f2a").is_empty());
    }

    #[test]
    fn multiple_ids_keep_first_appearance_order() {
        assert_eq!(extract_bug_ids("Merge bug 1234 and Bug 5678 follow-up"), vec![1234, 5678]);
        assert_eq!(extract_bug_ids("bug 5678, bug 1234, bug 5678"), vec![5678, 1234]);
    }

    #[test]
    fn digit_count_bounds() {
        assert!(extract_bug_ids("bug 123").is_empty());
        assert!(extract_bug_ids("bug 1234567890").is_empty());
        assert!(extract_bug_ids("debug 12345").is_empty());
    }

    proptest! {
        #[test]
        fn planted_ids_are_recovered(
            ids in proptest::collection::vec(1000u64..1_000_000_000, 1..5),
            filler in "[a-z ]{0,20}",
            upper in any::<bool>(),
        ) {
            let kw = if upper { "Bug" } else { "bug" };
            let text: Vec<String> = ids.iter().map(|i| format!("{kw} {i} {filler}")).collect();
            let text = text.join("; ");
            let mut expected = Vec::new();
            for i in &ids {
                if !expected.contains(i) {
                    expected.push(*i);
                }
            }
            prop_assert_eq!(extract_bug_ids(&text), expected);
        }

        #[test]
        fn extraction_is_total(s in ".*") {
            let a = extract_bug_ids(&s);
            prop_assert_eq!(&a, &extract_bug_ids(&s));
            prop_assert!(a.iter().all(|id| *id > 0 && *id < 1_000_000_000));
        }
    }

    fn log(bug_id: u64, events: &[(&str, BugEventKind)]) -> BugEventLog {
        BugEventLog { bug_id, events: events.iter().map(|(t, kind)| BugEvent { at: at(t), kind: *kind }).collect() }
    }

    #[test]
    fn restriction_evidence() {
        let tracker = BugTracker::new(vec![
            log(1111, &[("2009-01-05T12:00:00Z", BugEventKind::Restricted)]),
            log(
                2222,
                &[
                    ("2009-01-05T12:00:00Z", BugEventKind::Restricted),
                    ("2009-01-07T12:00:00Z", BugEventKind::Unrestricted),
                ],
            ),
            log(3333, &[("2009-01-03T12:00:00Z", BugEventKind::CoreSecurityRemoved)]),
        ])
        .unwrap();
        assert!(is_security_evident(&[1111], &tracker, date("2009-01-06"), false));
        assert!(is_security_evident(&[1111], &tracker, date("2009-01-05"), false));
        assert!(!is_security_evident(&[1111], &tracker, date("2009-01-04"), false));
        assert!(!is_security_evident(&[2222], &tracker, date("2009-01-08"), false));
        assert!(is_security_evident(&[3333], &tracker, date("2009-01-09"), false));
        assert!(!is_security_evident(&[9999], &tracker, date("2009-01-09"), false));
        assert!(is_security_evident(&[9999], &tracker, date("2009-01-09"), true));
        assert!(is_security_evident(&[2222, 3333], &tracker, date("2009-01-09"), false));
    }

    #[test]
    fn core_security_evidence_is_monotone_in_day() {
        let tracker = BugTracker::new(vec![log(
            4444,
            &[
                ("2009-01-03T00:00:00Z", BugEventKind::CoreSecurityAdded),
                ("2009-01-04T00:00:00Z", BugEventKind::Unrestricted),
            ],
        )])
        .unwrap();
        let start = date("2009-01-03");
        for d in 0..60 {
            assert!(is_security_evident(&[4444], &tracker, start + Duration::days(d), false));
        }
    }

    fn linked_corpus() -> Corpus {
        let mut p1 = patch("p1", "2009-01-10T10:00:00Z");
        p1.description = "Bug 100001 - overflow".into();
        let mut p2 = patch("p2", "2009-01-12T10:00:00Z");
        p2.description = "Bug 100002 - feature".into();
        let mut p3 = patch("p3", "2009-01-20T10:00:00Z");
        p3.description = "Bug 100003 - uaf".into();
        let tracker = BugTracker::new(vec![
            log(100001, &[("2009-01-09T00:00:00Z", BugEventKind::Restricted)]),
            log(100002, &[]),
            log(100003, &[("2009-01-19T00:00:00Z", BugEventKind::CoreSecurityAdded)]),
        ])
        .unwrap();
        Corpus::new(
            vec![p1, p2, p3],
            vec![
                security("p1", "2009-02-05T00:00:00Z", Severity::High),
                security("p3", "2009-02-05T00:00:00Z", Severity::Low),
            ],
            timeline(),
            Some(tracker),
        )
        .unwrap()
    }

    #[test]
    fn flags_every_day_with_a_security_patch() {
        let c = linked_corpus();
        let s = link_attack_daily(&c, 1, &LinkAttackConfig::default()).unwrap();
        for d in &s.days {
            let has_security = c.pool_range(d.day).unwrap().any(|i| c.is_security(i));
            assert_eq!(d.found_count >= 1, has_security, "{}", d.day);
        }
        let day = s.days.iter().find(|d| d.day == date("2009-01-10")).unwrap();
        assert_eq!(day.first_found_patch_id.as_deref(), Some("p1"));
        assert_eq!(day.lookups, 1);
        // first segment runs 2009-01-01..2009-02-04, found from 2009-01-10
        let first_seg: u32 =
            s.days.iter().filter(|d| d.day < date("2009-02-04")).map(|d| d.window_contribution_days).sum();
        assert_eq!(first_seg, 25);
    }

    #[test]
    fn k_two_needs_two_evident_patches() {
        let c = linked_corpus();
        let s1 = link_attack_daily(&c, 1, &LinkAttackConfig::default()).unwrap();
        let s2 = link_attack_daily(&c, 2, &LinkAttackConfig::default()).unwrap();
        let d = |s: &LinkAttackSeries, day| s.days.iter().find(|x| x.day == date(day)).unwrap().clone();
        assert_eq!(d(&s2, "2009-01-15").found_count, 1);
        assert_eq!(d(&s2, "2009-01-15").window_contribution_days, 0);
        assert_eq!(d(&s2, "2009-01-20").window_contribution_days, 1);
        let days1: HashSet<_> = s1.days_satisfied().into_iter().collect();
        assert!(s2.days_satisfied().iter().all(|d| days1.contains(d)));
    }

    #[test]
    fn missing_snapshot_is_an_error() {
        let c = Corpus::new(vec![patch("p1", "2009-01-10T10:00:00Z")], vec![], timeline(), None).unwrap();
        assert!(matches!(
            link_attack_daily(&c, 1, &LinkAttackConfig::default()),
            Err(LinkAttackError::MissingBugEvents)
        ));
    }

    #[test]
    fn ranking_puts_evident_patches_first() {
        let c = linked_corpus();
        let ids = corpus_bug_ids(&c, &BugIdExtractor::default());
        let order = link_ranking(&c, &ids, date("2009-01-25"), false).unwrap();
        let names: Vec<_> = order.iter().map(|&i| c.patches()[i].patch_id.as_str()).collect();
        assert_eq!(names, ["p1", "p3", "p2"]);
    }
}
