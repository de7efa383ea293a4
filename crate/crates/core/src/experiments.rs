//! Experiment orchestration, the append-only results log, and reduction of
//! trial records to paired outcome matrices and sample sets.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{shuffle_choices, Letter, PresentedItem, Question, Section};
use crate::extraction::{extract_answer, Extraction};
use crate::prm::{prm_score, Candidate, CandidateSet, PrmVerdict};
use crate::prompting::{build_prompt, Condition};
use crate::provider::{ModelSpec, NormalizedResponse, Provider, ProviderError, ThinkingMode};
use crate::stats::{LetterCounts, Level, PairedOutcome, Proportion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PromptSensitivity,
    PositionBias,
    SelfConsistency,
    Ablation,
    PrmBon,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::PromptSensitivity,
        ExperimentKind::PositionBias,
        ExperimentKind::SelfConsistency,
        ExperimentKind::Ablation,
        ExperimentKind::PrmBon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PromptSensitivity => "prompt-sensitivity",
            ExperimentKind::PositionBias => "position-bias",
            ExperimentKind::SelfConsistency => "self-consistency",
            ExperimentKind::Ablation => "ablation",
            ExperimentKind::PrmBon => "prm-bon",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Original,
    Shuffled,
}

/// Identity of one trial within a results file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrialKey {
    pub experiment: ExperimentKind,
    pub model_id: String,
    pub question_id: String,
    pub condition: Condition,
    pub variant: Variant,
    pub thinking: ThinkingMode,
    pub sample_index: u32,
}

/// One graded model response; one line of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: ExperimentKind,
    pub model_id: String,
    pub question_id: String,
    pub section: Section,
    pub condition: Condition,
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shuffle_seed: Option<u64>,
    pub thinking: ThinkingMode,
    pub sample_index: u32,
    /// Key in the ordering the model saw.
    pub answer_key: Letter,
    pub normalized: NormalizedResponse,
    pub extracted: Extraction,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prm: Option<PrmVerdict>,
}

impl TrialRecord {
    pub fn key(&self) -> TrialKey {
        TrialKey {
            experiment: self.experiment,
            model_id: self.model_id.clone(),
            question_id: self.question_id.clone(),
            condition: self.condition,
            variant: self.variant,
            thinking: self.thinking,
            sample_index: self.sample_index,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("results file: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {message}")]
    Results {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("incomplete results; missing cells: {}", .0.join(", "))]
    Incomplete(Vec<String>),
}

/// Reads every record of a results file. A torn final line (no trailing
/// newline, from an interrupted append) is skipped with a warning.
pub fn read_results(path: &Path) -> Result<Vec<TrialRecord>, ExperimentError> {
    let file = File::open(path)?;
    let mut lines = Vec::new();
    for line in BufReader::new(file).split(b'\n') {
        lines.push(line?);
    }
    let ends_with_newline = std::fs::read(path)?.last().is_none_or(|&b| b == b'\n');
    let mut records = Vec::new();
    let count = lines.len();
    for (i, raw) in lines.into_iter().enumerate() {
        let text = String::from_utf8_lossy(&raw);
        if text.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&text) {
            Ok(r) => records.push(r),
            Err(e) if i + 1 == count && !ends_with_newline => {
                log::warn!("{}: ignoring torn final line: {e}", path.display());
            }
            Err(e) => {
                return Err(ExperimentError::Results {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(records)
}

/// Append-only results file used as the per-trial checkpoint.
pub struct ResultsLog {
    existing: HashMap<TrialKey, TrialRecord>,
    file: Mutex<File>,
}

impl ResultsLog {
    /// Opens (creating if needed) a results file, loading prior trials so a
    /// rerun resumes where it stopped.
    pub fn open(path: &Path) -> Result<ResultsLog, ExperimentError> {
        let prior = if path.exists() {
            read_results(path)?
        } else {
            Vec::new()
        };
        let mut existing = HashMap::new();
        for r in prior {
            existing.entry(r.key()).or_insert(r);
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .read(true)
            .open(path)?;
        // terminate a torn line so the next append starts cleanly
        let len = file.metadata()?.len();
        if len > 0 && std::fs::read(path)?.last() != Some(&b'\n') {
            file.write_all(b"\n")?;
        }
        Ok(ResultsLog {
            existing,
            file: Mutex::new(file),
        })
    }

    pub fn get(&self, key: &TrialKey) -> Option<&TrialRecord> {
        self.existing.get(key)
    }

    pub fn append(&self, record: &TrialRecord) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        file.write_all(&line)?;
        file.flush()
    }
}

#[derive(Debug, Clone, Copy)]
struct Planned {
    question: usize,
    condition: Condition,
    variant: Variant,
    thinking: ThinkingMode,
    sample_index: u32,
}

/// Most frequent letter; ties go to the letter seen first. Ambiguous samples
/// never win unless no sample produced a letter.
pub fn majority_vote(samples: &[Extraction]) -> Extraction {
    let mut counts = [0usize; 5];
    let mut first_seen = [usize::MAX; 5];
    for (i, s) in samples.iter().enumerate() {
        if let Some(l) = s.letter() {
            counts[l.index()] += 1;
            first_seen[l.index()] = first_seen[l.index()].min(i);
        }
    }
    Letter::ALL
        .into_iter()
        .filter(|l| counts[l.index()] > 0)
        .max_by(|a, b| {
            counts[a.index()]
                .cmp(&counts[b.index()])
                .then(first_seen[b.index()].cmp(&first_seen[a.index()]))
        })
        .map_or(Extraction::Ambiguous, Extraction::Letter)
}

/// One model run over a dataset.
pub struct Experiment<'a> {
    pub provider: &'a Provider,
    pub model: &'a ModelSpec,
    pub questions: &'a [Question],
    pub seed: u64,
    pub parallelism: usize,
    pub log: Option<&'a ResultsLog>,
    /// Self-PRM used by the prm-bon experiment.
    pub scorer: Option<&'a ModelSpec>,
}

impl<'a> Experiment<'a> {
    pub fn new(provider: &'a Provider, model: &'a ModelSpec, questions: &'a [Question]) -> Self {
        Experiment {
            provider,
            model,
            questions,
            seed: crate::corpus::DEFAULT_SHUFFLE_SEED,
            parallelism: 1,
            log: None,
            scorer: None,
        }
    }

    fn plan(&self, kind: ExperimentKind, n: u32) -> Result<Vec<Planned>, ExperimentError> {
        let trial = |question, condition, variant, thinking, sample_index| Planned {
            question,
            condition,
            variant,
            thinking,
            sample_index,
        };
        let mut plan = Vec::new();
        for q in 0..self.questions.len() {
            match kind {
                ExperimentKind::PromptSensitivity => {
                    for c in Condition::ALL {
                        plan.push(trial(q, c, Variant::Original, ThinkingMode::On, 0));
                    }
                }
                ExperimentKind::PositionBias => {
                    for v in [Variant::Original, Variant::Shuffled] {
                        plan.push(trial(q, Condition::A, v, ThinkingMode::On, 0));
                    }
                }
                ExperimentKind::SelfConsistency | ExperimentKind::PrmBon => {
                    for i in 0..n {
                        plan.push(trial(
                            q,
                            Condition::A,
                            Variant::Original,
                            ThinkingMode::On,
                            i,
                        ));
                    }
                }
                ExperimentKind::Ablation => {
                    for t in [ThinkingMode::On, ThinkingMode::Off] {
                        plan.push(trial(q, Condition::A, Variant::Original, t, 0));
                    }
                }
            }
        }
        Ok(plan)
    }

    fn execute(&self, kind: ExperimentKind, p: Planned) -> Result<TrialRecord, ExperimentError> {
        let q = &self.questions[p.question];
        let shuffled = (p.variant == Variant::Shuffled).then(|| shuffle_choices(q, self.seed));
        let item: &dyn PresentedItem = match &shuffled {
            Some(s) => s,
            None => q,
        };
        let bundle = build_prompt(item, p.condition);
        let normalized = self
            .provider
            .send(self.model, &bundle, p.sample_index, p.thinking)?;
        let extracted = extract_answer(&normalized.response, p.condition);
        if extracted == Extraction::Ambiguous {
            log::info!(
                "{} {} sample {}: no answer extracted",
                self.model.model_id,
                q.id,
                p.sample_index
            );
        }
        let prm = match (kind, self.scorer) {
            (ExperimentKind::PrmBon, Some(scorer)) => {
                let trace = if normalized.thinking.trim().is_empty() {
                    &normalized.response
                } else {
                    &normalized.thinking
                };
                Some(prm_score(self.provider, scorer, item, trace)?)
            }
            _ => None,
        };
        Ok(TrialRecord {
            experiment: kind,
            model_id: self.model.model_id.clone(),
            question_id: q.id.clone(),
            section: q.section,
            condition: p.condition,
            variant: p.variant,
            shuffle_seed: shuffled.as_ref().map(|s| s.seed),
            thinking: p.thinking,
            sample_index: p.sample_index,
            answer_key: item.displayed_key(),
            correct: item.is_correct(extracted.letter()),
            normalized,
            extracted,
            prm,
        })
    }

    /// Runs every trial of `kind` not already in the log and returns all of
    /// the experiment's records sorted by trial key. `n` is the sample count
    /// for sampling experiments.
    pub fn run(&self, kind: ExperimentKind, n: u32) -> Result<Vec<TrialRecord>, ExperimentError> {
        if n == 0 {
            return Err(ExperimentError::InvalidArgument(
                "sample count must be at least 1".into(),
            ));
        }
        if kind == ExperimentKind::Ablation && self.model.think_toggle.is_none() {
            return Err(ProviderError::UnsupportedToggle {
                model: self.model.model_id.clone(),
            }
            .into());
        }
        if kind == ExperimentKind::PrmBon && self.scorer.is_none() {
            return Err(ExperimentError::InvalidArgument(
                "prm-bon needs a scorer model".into(),
            ));
        }
        let key_of = |p: &Planned| TrialKey {
            experiment: kind,
            model_id: self.model.model_id.clone(),
            question_id: self.questions[p.question].id.clone(),
            condition: p.condition,
            variant: p.variant,
            thinking: p.thinking,
            sample_index: p.sample_index,
        };
        let mut records = Vec::new();
        let mut pending = Vec::new();
        for p in self.plan(kind, n)? {
            match self.log.and_then(|log| log.get(&key_of(&p))) {
                Some(done) => records.push(done.clone()),
                None => pending.push(p),
            }
        }
        if !records.is_empty() {
            log::info!(
                "{kind}: resuming, {} of {} trials already done",
                records.len(),
                records.len() + pending.len()
            );
        }

        let next = AtomicUsize::new(0);
        let failed = AtomicBool::new(false);
        let outcomes: Mutex<Vec<(usize, Result<TrialRecord, ExperimentError>)>> =
            Mutex::new(Vec::new());
        let workers = self.parallelism.max(1).min(pending.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    if failed.load(Ordering::Relaxed) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&p) = pending.get(i) else { break };
                    let result = self.execute(kind, p).and_then(|r| match self.log {
                        Some(log) => log.append(&r).map(|_| r).map_err(ExperimentError::from),
                        None => Ok(r),
                    });
                    if result.is_err() {
                        failed.store(true, Ordering::Relaxed);
                    }
                    outcomes
                        .lock()
                        .unwrap_or_else(|e| e.into_inner())
                        .push((i, result));
                });
            }
        });
        let mut outcomes = outcomes.into_inner().unwrap_or_else(|e| e.into_inner());
        outcomes.sort_by_key(|(i, _)| *i);
        for (_, result) in outcomes {
            records.push(result?);
        }
        records.sort_by_key(TrialRecord::key);
        Ok(records)
    }

    pub fn run_prompt_sensitivity(&self) -> Result<OutcomeMatrix, ExperimentError> {
        let records = self.run(ExperimentKind::PromptSensitivity, 1)?;
        OutcomeMatrix::prompt_sensitivity(&records)
    }

    pub fn run_position_bias(&self) -> Result<PositionBias, ExperimentError> {
        let records = self.run(ExperimentKind::PositionBias, 1)?;
        PositionBias::from_records(&records)
    }

    pub fn run_self_consistency(&self, n: u32) -> Result<Vec<SampleSet>, ExperimentError> {
        let records = self.run(ExperimentKind::SelfConsistency, n)?;
        sample_sets(&records)
    }

    pub fn run_ablation(&self) -> Result<OutcomeMatrix, ExperimentError> {
        let records = self.run(ExperimentKind::Ablation, 1)?;
        OutcomeMatrix::ablation(&records)
    }

    pub fn run_prm_bon(&self, n: u32) -> Result<Vec<CandidateSet>, ExperimentError> {
        let records = self.run(ExperimentKind::PrmBon, n)?;
        candidate_sets(&records)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub question_id: String,
    pub section: Section,
    pub cells: Vec<bool>,
}

/// Per-question binary correctness across labeled arms, sorted by question id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeMatrix {
    pub arms: Vec<String>,
    pub rows: Vec<OutcomeRow>,
}

impl OutcomeMatrix {
    /// Builds a matrix from records; `arm_of` assigns each record to an arm
    /// or skips it. Every question seen must have a record in every arm.
    pub fn from_records<'r, I, F>(
        records: I,
        arms: &[&str],
        arm_of: F,
    ) -> Result<OutcomeMatrix, ExperimentError>
    where
        I: IntoIterator<Item = &'r TrialRecord>,
        F: Fn(&TrialRecord) -> Option<usize>,
    {
        let mut by_question: BTreeMap<&str, (Section, Vec<Option<bool>>)> = BTreeMap::new();
        for r in records {
            let Some(arm) = arm_of(r) else { continue };
            let entry = by_question
                .entry(r.question_id.as_str())
                .or_insert_with(|| (r.section, vec![None; arms.len()]));
            match entry.1[arm] {
                None => entry.1[arm] = Some(r.correct),
                Some(_) => log::warn!(
                    "duplicate {} record for {}; keeping the first",
                    arms[arm],
                    r.question_id
                ),
            }
        }
        let mut missing = Vec::new();
        let mut rows = Vec::new();
        for (qid, (section, cells)) in by_question {
            for (arm, cell) in arms.iter().zip(&cells) {
                if cell.is_none() {
                    missing.push(format!("{qid}/{arm}"));
                }
            }
            rows.push(OutcomeRow {
                question_id: qid.to_string(),
                section,
                cells: cells.into_iter().map(|c| c.unwrap_or(false)).collect(),
            });
        }
        if !missing.is_empty() {
            return Err(ExperimentError::Incomplete(missing));
        }
        Ok(OutcomeMatrix {
            arms: arms.iter().map(|a| a.to_string()).collect(),
            rows,
        })
    }

    pub fn prompt_sensitivity(records: &[TrialRecord]) -> Result<OutcomeMatrix, ExperimentError> {
        OutcomeMatrix::from_records(records, &["A", "B", "C"], |r| {
            (r.experiment == ExperimentKind::PromptSensitivity).then_some(match r.condition {
                Condition::A => 0,
                Condition::B => 1,
                Condition::C => 2,
            })
        })
    }

    pub fn position_bias(records: &[TrialRecord]) -> Result<OutcomeMatrix, ExperimentError> {
        OutcomeMatrix::from_records(records, &["original", "shuffled"], |r| {
            (r.experiment == ExperimentKind::PositionBias).then_some(match r.variant {
                Variant::Original => 0,
                Variant::Shuffled => 1,
            })
        })
    }

    pub fn ablation(records: &[TrialRecord]) -> Result<OutcomeMatrix, ExperimentError> {
        OutcomeMatrix::from_records(records, &["on", "off"], |r| {
            (r.experiment == ExperimentKind::Ablation).then_some(match r.thinking {
                ThinkingMode::On => 0,
                ThinkingMode::Off => 1,
            })
        })
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn at(&self, level: Level) -> impl Iterator<Item = &OutcomeRow> {
        self.rows.iter().filter(move |r| level.includes(r.section))
    }

    /// Column accuracy at `level`; `None` when no rows fall in it.
    pub fn accuracy(&self, arm: usize, level: Level) -> Option<Proportion> {
        let mut p = Proportion {
            correct: 0,
            total: 0,
        };
        for row in self.at(level) {
            p.total += 1;
            p.correct += row.cells[arm] as u64;
        }
        (p.total > 0).then_some(p)
    }

    /// Discordant pairs of arm `first` against arm `second`.
    pub fn paired(&self, first: usize, second: usize, level: Level) -> PairedOutcome {
        PairedOutcome::from_pairs(self.at(level).map(|r| (r.cells[first], r.cells[second])))
    }

    pub fn cells(&self, level: Level) -> Vec<Vec<bool>> {
        self.at(level).map(|r| r.cells.clone()).collect()
    }
}

/// Position-bias outcome plus letter-selection counts per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionBias {
    pub matrix: OutcomeMatrix,
    /// Original arm, then shuffled arm.
    pub letters: [LetterCounts; 2],
}

impl PositionBias {
    pub fn from_records(records: &[TrialRecord]) -> Result<PositionBias, ExperimentError> {
        let matrix = OutcomeMatrix::position_bias(records)?;
        let mut letters = [LetterCounts::default(); 2];
        for r in records
            .iter()
            .filter(|r| r.experiment == ExperimentKind::PositionBias)
        {
            letters[(r.variant == Variant::Shuffled) as usize].add(r.extracted.letter());
        }
        Ok(PositionBias { matrix, letters })
    }
}

/// All samples for one question, in sample-index order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    pub question_id: String,
    pub section: Section,
    pub answer_key: Letter,
    pub samples: Vec<Extraction>,
    pub correct: Vec<bool>,
}

impl SampleSet {
    pub fn pass_at_1(&self) -> bool {
        self.correct[0]
    }

    pub fn majority(&self) -> Extraction {
        majority_vote(&self.samples)
    }

    pub fn majority_correct(&self) -> bool {
        self.majority() == Extraction::Letter(self.answer_key)
    }
}

fn grouped_samples(
    records: &[TrialRecord],
    kind: ExperimentKind,
) -> Result<Vec<Vec<&TrialRecord>>, ExperimentError> {
    let mut by_question: BTreeMap<&str, BTreeMap<u32, &TrialRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.experiment == kind) {
        by_question
            .entry(r.question_id.as_str())
            .or_default()
            .entry(r.sample_index)
            .or_insert(r);
    }
    let n = by_question.values().map(|s| s.len()).max().unwrap_or(0) as u32;
    let mut missing = Vec::new();
    let mut groups = Vec::new();
    for (qid, samples) in by_question {
        for i in 0..n {
            if !samples.contains_key(&i) {
                missing.push(format!("{qid}/sample {i}"));
            }
        }
        groups.push(samples.into_values().collect());
    }
    if !missing.is_empty() {
        return Err(ExperimentError::Incomplete(missing));
    }
    Ok(groups)
}

/// Self-consistency sample sets; every question must have samples `0..n`.
pub fn sample_sets(records: &[TrialRecord]) -> Result<Vec<SampleSet>, ExperimentError> {
    Ok(grouped_samples(records, ExperimentKind::SelfConsistency)?
        .into_iter()
        .map(|group| SampleSet {
            question_id: group[0].question_id.clone(),
            section: group[0].section,
            answer_key: group[0].answer_key,
            samples: group.iter().map(|r| r.extracted).collect(),
            correct: group.iter().map(|r| r.correct).collect(),
        })
        .collect())
}

/// Scored prm-bon samples grouped per question.
pub fn candidate_sets(records: &[TrialRecord]) -> Result<Vec<CandidateSet>, ExperimentError> {
    Ok(grouped_samples(records, ExperimentKind::PrmBon)?
        .into_iter()
        .map(|group| CandidateSet {
            question_id: group[0].question_id.clone(),
            section: group[0].section,
            answer_key: group[0].answer_key,
            candidates: group.iter().map(|&r| Candidate::from(r)).collect(),
        })
        .collect())
}

/// pass@1 against majority vote as a two-arm matrix.
pub fn self_consistency_matrix(sets: &[SampleSet]) -> OutcomeMatrix {
    OutcomeMatrix {
        arms: vec![
            "pass@1".into(),
            format!("SC@{}", sets.first().map_or(0, |s| s.samples.len())),
        ],
        rows: sets
            .iter()
            .map(|s| OutcomeRow {
                question_id: s.question_id.clone(),
                section: s.section,
                cells: vec![s.pass_at_1(), s.majority_correct()],
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Extraction::{Ambiguous as X, Letter as L};
    use Letter::*;

    #[test]
    fn majority_examples() {
        assert_eq!(majority_vote(&[L(A), L(A), L(B), L(C), L(A)]), L(A));
        assert_eq!(majority_vote(&[L(A), L(A), L(B), L(B), L(C)]), L(A));
        assert_eq!(majority_vote(&[L(B), L(B), L(A), L(A), L(C)]), L(B));
        assert_eq!(majority_vote(&[L(D), L(A), L(B), L(C), L(E)]), L(D));
        assert_eq!(majority_vote(&[X, X, X, L(C), X]), L(C));
        assert_eq!(majority_vote(&[X, X]), X);
        assert_eq!(majority_vote(&[]), X);
    }

    #[test]
    fn experiment_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
            assert_eq!(serde_json::to_value(k).unwrap(), k.name());
        }
        assert!("bogus".parse::<ExperimentKind>().is_err());
    }
}
