//! Paired exact tests, equivalence testing, effect sizes, and descriptive
//! accuracy statistics.

mod hypothesis;
pub mod special;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Section;
use crate::extraction::Extraction;

pub use hypothesis::{
    chi2_uniform, cochrans_q, cohens_h, mcnemar_exact, paired_difference, tost_paired, LetterCounts,
};

/// Two-tailed significance level.
pub const ALPHA: f64 = 0.05;
/// Equivalence margin for TOST (two percentage points).
pub const TOST_MARGIN: f64 = 0.02;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("selection is empty")]
    EmptySelection,
    #[error("total count is zero")]
    ZeroTotal,
    #[error("row {index} has {found} entries, expected {expected}")]
    Ragged {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("need at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("proportion {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("discordant counts b={b} + c={c} exceed n={n}")]
    InvalidPairedOutcome { n: u64, b: u64, c: u64 },
    #[error("no scaled score for raw score {0}")]
    MissingScaleEntry(u32),
}

/// Discordant-pair summary of two paired binary arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedOutcome {
    pub n: u64,
    /// Correct in arm 1 only.
    pub b: u64,
    /// Correct in arm 2 only.
    pub c: u64,
}

impl PairedOutcome {
    pub fn new(n: u64, b: u64, c: u64) -> Result<PairedOutcome, StatsError> {
        let po = PairedOutcome { n, b, c };
        po.check()?;
        Ok(po)
    }

    pub(crate) fn check(&self) -> Result<(), StatsError> {
        if self.b + self.c > self.n {
            return Err(StatsError::InvalidPairedOutcome {
                n: self.n,
                b: self.b,
                c: self.c,
            });
        }
        Ok(())
    }

    /// Reduces paired per-item outcomes `(arm1, arm2)`.
    pub fn from_pairs<I: IntoIterator<Item = (bool, bool)>>(pairs: I) -> PairedOutcome {
        let mut po = PairedOutcome { n: 0, b: 0, c: 0 };
        for (first, second) in pairs {
            po.n += 1;
            match (first, second) {
                (true, false) => po.b += 1,
                (false, true) => po.c += 1,
                _ => {}
            }
        }
        po
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<bool>,
}

impl TestResult {
    pub fn new(statistic: f64, p_value: f64) -> TestResult {
        TestResult {
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            effect_h: None,
            equivalence: None,
        }
    }

    pub fn with_effect(mut self, h: f64) -> TestResult {
        self.effect_h = Some(h);
        self
    }
}

/// Exact count-backed proportion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proportion {
    pub correct: u64,
    pub total: u64,
}

impl Proportion {
    pub fn value(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.correct as f64 / self.total as f64
    }
}

/// Reporting level: all items, or one section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    Overall,
    LR,
    RC,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Overall, Level::LR, Level::RC];

    pub fn section(self) -> Option<Section> {
        match self {
            Level::Overall => None,
            Level::LR => Some(Section::LR),
            Level::RC => Some(Section::RC),
        }
    }

    pub fn includes(self, section: Section) -> bool {
        self.section().is_none_or(|s| s == section)
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Level::Overall => "Overall",
            Level::LR => "LR",
            Level::RC => "RC",
        })
    }
}

/// Accuracy over `(section, correct)` outcomes, optionally restricted to one section.
pub fn accuracy<I>(outcomes: I, section_filter: Option<Section>) -> Result<Proportion, StatsError>
where
    I: IntoIterator<Item = (Section, bool)>,
{
    let mut p = Proportion {
        correct: 0,
        total: 0,
    };
    for (section, correct) in outcomes {
        if section_filter.is_some_and(|s| s != section) {
            continue;
        }
        p.total += 1;
        p.correct += correct as u64;
    }
    if p.total == 0 {
        return Err(StatsError::EmptySelection);
    }
    Ok(p)
}

/// Whether every sample produced the same letter. A set containing an
/// ambiguous extraction is never unanimous.
pub fn is_unanimous(samples: &[Extraction]) -> bool {
    match samples.first() {
        Some(Extraction::Letter(first)) => samples.iter().all(|s| *s == Extraction::Letter(*first)),
        _ => false,
    }
}

/// Fraction of sample sets whose extracted letters are all identical.
pub fn unanimity<S: AsRef<[Extraction]>>(sample_sets: &[S]) -> Result<f64, StatsError> {
    let Some(first) = sample_sets.first() else {
        return Err(StatsError::EmptySelection);
    };
    let n = first.as_ref().len();
    let mut unanimous = 0usize;
    for (i, set) in sample_sets.iter().enumerate() {
        let set = set.as_ref();
        if set.len() != n {
            return Err(StatsError::Ragged {
                index: i,
                expected: n,
                found: set.len(),
            });
        }
        unanimous += is_unanimous(set) as usize;
    }
    Ok(unanimous as f64 / sample_sets.len() as f64)
}

/// Raw-to-scaled score conversion table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScaleTable(pub BTreeMap<u32, u32>);

pub fn scale_score(raw_correct: u32, table: &ScaleTable) -> Result<u32, StatsError> {
    table
        .0
        .get(&raw_correct)
        .copied()
        .ok_or(StatsError::MissingScaleEntry(raw_correct))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Letter;

    fn outcomes(lr: (usize, usize), rc: (usize, usize)) -> Vec<(Section, bool)> {
        let mut v = Vec::new();
        for i in 0..lr.1 {
            v.push((Section::LR, i < lr.0));
        }
        for i in 0..rc.1 {
            v.push((Section::RC, i < rc.0));
        }
        v
    }

    #[test]
    fn accuracy_examples() {
        let all = outcomes((50, 50), (27, 27));
        assert_eq!(
            format!("{:.1}", accuracy(all, None).unwrap().percent()),
            "100.0"
        );
        let gpt = outcomes((49, 50), (27, 27));
        assert_eq!(
            format!(
                "{:.1}",
                accuracy(gpt.clone(), Some(Section::LR)).unwrap().percent()
            ),
            "98.0"
        );
        assert_eq!(
            format!("{:.1}", accuracy(gpt, None).unwrap().percent()),
            "98.7"
        );
        let none = outcomes((0, 10), (0, 0));
        assert_eq!(accuracy(none.clone(), None).unwrap().percent(), 0.0);
        assert_eq!(
            accuracy(none, Some(Section::RC)),
            Err(StatsError::EmptySelection)
        );
    }

    #[test]
    fn sections_partition_overall() {
        let v = outcomes((31, 50), (20, 27));
        let lr = accuracy(v.clone(), Some(Section::LR)).unwrap();
        let rc = accuracy(v.clone(), Some(Section::RC)).unwrap();
        let all = accuracy(v, None).unwrap();
        assert_eq!(lr.correct + rc.correct, all.correct);
        assert_eq!(lr.total + rc.total, all.total);
    }

    #[test]
    fn unanimity_examples() {
        use Extraction::Letter as L;
        let sets = vec![
            vec![L(Letter::A); 5],
            vec![
                L(Letter::A),
                L(Letter::B),
                L(Letter::A),
                L(Letter::A),
                L(Letter::A),
            ],
        ];
        assert_eq!(unanimity(&sets).unwrap(), 0.5);
        assert_eq!(
            unanimity(&[vec![L(Letter::C); 5], vec![L(Letter::D); 5]]).unwrap(),
            1.0
        );
        assert_eq!(unanimity(&[vec![Extraction::Ambiguous; 5]]).unwrap(), 0.0);
        let ragged = vec![vec![L(Letter::A); 5], vec![L(Letter::A); 4]];
        assert!(matches!(
            unanimity(&ragged),
            Err(StatsError::Ragged { index: 1, .. })
        ));
    }

    #[test]
    fn scale_score_lookup() {
        let mut t = ScaleTable::default();
        t.0.insert(76, 180);
        t.0.insert(77, 180);
        assert_eq!(scale_score(76, &t), Ok(180));
        assert_eq!(scale_score(77, &t), Ok(180));
        assert_eq!(scale_score(10, &t), Err(StatsError::MissingScaleEntry(10)));
        let identity = ScaleTable((0..=77).map(|r| (r, r)).collect());
        assert_eq!(scale_score(42, &identity), Ok(42));
    }

    #[test]
    fn paired_outcome_from_pairs() {
        let po =
            PairedOutcome::from_pairs([(true, false), (false, true), (true, true), (true, false)]);
        assert_eq!(po, PairedOutcome { n: 4, b: 2, c: 1 });
        assert!(PairedOutcome::new(3, 2, 2).is_err());
    }
}
