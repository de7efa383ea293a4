//! Statistics snapshots computed from a results file, and their rendering as
//! markdown tables, CSV files, or a full-precision JSON export.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiments::{
    candidate_sets, sample_sets, self_consistency_matrix, ExperimentError, ExperimentKind,
    OutcomeMatrix, PositionBias, TrialRecord, Variant,
};
use crate::prm::{compare_methods, MethodAccuracy, PrmError};
use crate::prompting::Condition;
use crate::provider::ThinkingMode;
use crate::stats::{
    chi2_uniform, cochrans_q, cohens_h, is_unanimous, mcnemar_exact, scale_score, tost_paired,
    LetterCounts, Level, PairedOutcome, Proportion, ScaleTable, StatsError, TestResult, ALPHA,
    TOST_MARGIN,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("results contain no trial records")]
    NoRecords,
    #[error("incomplete results; missing cells: {}", .0.join(", "))]
    Incomplete(Vec<String>),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Prm(#[from] PrmError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub model_id: String,
    pub lr: Option<Proportion>,
    pub rc: Option<Proportion>,
    pub total: Proportion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRow {
    pub model_id: String,
    pub level: Level,
    /// Conditions A, B, C.
    pub accuracy: [Proportion; 3],
    pub cochran: TestResult,
    /// Pairwise equivalence for A-B, A-C, B-C.
    pub tost: [TestResult; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionRow {
    pub model_id: String,
    pub level: Level,
    pub original: Proportion,
    pub shuffled: Proportion,
    pub paired: PairedOutcome,
    /// Effect is h(shuffled) - h(original).
    pub mcnemar: TestResult,
    pub tost: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LetterRow {
    pub model_id: String,
    pub variant: Variant,
    pub counts: LetterCounts,
    pub chi2: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScRow {
    pub model_id: String,
    pub level: Level,
    pub samples: usize,
    pub pass_at_1: Proportion,
    pub majority: Proportion,
    pub paired: PairedOutcome,
    /// Effect is h(SC) - h(pass@1).
    pub mcnemar: TestResult,
    pub unanimous: Proportion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub model_id: String,
    pub level: Level,
    pub on: Proportion,
    pub off: Proportion,
    pub paired: PairedOutcome,
    /// Effect is h(on) - h(off).
    pub mcnemar: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrmRow {
    pub model_id: String,
    pub level: Level,
    pub samples: usize,
    pub methods: MethodAccuracy,
}

/// Every statistic the report renders, computed from trial records alone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsSnapshot {
    pub baseline: Vec<BaselineRow>,
    pub prompt_sensitivity: Vec<PromptRow>,
    pub position_bias: Vec<PositionRow>,
    pub letter_distribution: Vec<LetterRow>,
    pub self_consistency: Vec<ScRow>,
    pub ablation: Vec<AblationRow>,
    pub prm_bon: Vec<PrmRow>,
}

#[derive(Debug, Clone, Default)]
pub struct SnapshotOptions {
    /// Question ids every experiment must cover.
    pub expected_questions: Option<Vec<String>>,
    pub scale: Option<ScaleTable>,
}

fn mcnemar_with_effect(
    po: PairedOutcome,
    p1: Proportion,
    p2: Proportion,
) -> Result<TestResult, StatsError> {
    Ok(mcnemar_exact(po).with_effect(cohens_h(p1.value(), p2.value())?))
}

fn levels(matrix: &OutcomeMatrix) -> impl Iterator<Item = Level> + '_ {
    Level::ALL
        .into_iter()
        .filter(|&l| matrix.accuracy(0, l).is_some())
}

fn prompt_rows(model_id: &str, m: &OutcomeMatrix) -> Result<Vec<PromptRow>, ReportError> {
    let mut rows = Vec::new();
    for level in levels(m) {
        let acc = |arm| m.accuracy(arm, level).expect("level has rows");
        let tost = |a, b| tost_paired(m.paired(a, b, level), TOST_MARGIN, ALPHA);
        rows.push(PromptRow {
            model_id: model_id.to_string(),
            level,
            accuracy: [acc(0), acc(1), acc(2)],
            cochran: cochrans_q(&m.cells(level))?,
            tost: [tost(0, 1)?, tost(0, 2)?, tost(1, 2)?],
        });
    }
    Ok(rows)
}

fn position_rows(model_id: &str, m: &OutcomeMatrix) -> Result<Vec<PositionRow>, ReportError> {
    let mut rows = Vec::new();
    for level in levels(m) {
        let original = m.accuracy(0, level).expect("level has rows");
        let shuffled = m.accuracy(1, level).expect("level has rows");
        let paired = m.paired(0, 1, level);
        rows.push(PositionRow {
            model_id: model_id.to_string(),
            level,
            original,
            shuffled,
            paired,
            mcnemar: mcnemar_with_effect(paired, shuffled, original)?,
            tost: tost_paired(paired, TOST_MARGIN, ALPHA)?,
        });
    }
    Ok(rows)
}

fn ablation_rows(model_id: &str, m: &OutcomeMatrix) -> Result<Vec<AblationRow>, ReportError> {
    let mut rows = Vec::new();
    for level in levels(m) {
        let on = m.accuracy(0, level).expect("level has rows");
        let off = m.accuracy(1, level).expect("level has rows");
        let paired = m.paired(0, 1, level);
        rows.push(AblationRow {
            model_id: model_id.to_string(),
            level,
            on,
            off,
            paired,
            mcnemar: mcnemar_with_effect(paired, on, off)?,
        });
    }
    Ok(rows)
}

fn sc_rows(model_id: &str, records: &[TrialRecord]) -> Result<Vec<ScRow>, ReportError> {
    let sets = sample_sets(records).map_err(incomplete)?;
    let m = self_consistency_matrix(&sets);
    let mut rows = Vec::new();
    for level in levels(&m) {
        let pass_at_1 = m.accuracy(0, level).expect("level has rows");
        let majority = m.accuracy(1, level).expect("level has rows");
        let paired = m.paired(0, 1, level);
        let in_level: Vec<_> = sets.iter().filter(|s| level.includes(s.section)).collect();
        rows.push(ScRow {
            model_id: model_id.to_string(),
            level,
            samples: sets[0].samples.len(),
            pass_at_1,
            majority,
            paired,
            mcnemar: mcnemar_with_effect(paired, majority, pass_at_1)?,
            unanimous: Proportion {
                correct: in_level.iter().filter(|s| is_unanimous(&s.samples)).count() as u64,
                total: in_level.len() as u64,
            },
        });
    }
    Ok(rows)
}

fn incomplete(e: ExperimentError) -> ReportError {
    match e {
        ExperimentError::Incomplete(missing) => ReportError::Incomplete(missing),
        other => ReportError::Incomplete(vec![other.to_string()]),
    }
}

fn baseline_row(
    model_id: &str,
    records: &[&TrialRecord],
    scale: Option<&ScaleTable>,
) -> Result<Option<BaselineRow>, ReportError> {
    let mut seen = BTreeSet::new();
    let mut by_section = [Proportion {
        correct: 0,
        total: 0,
    }; 2];
    for r in records {
        let eligible = r.condition == Condition::A
            && r.variant == Variant::Original
            && r.thinking == ThinkingMode::On
            && r.sample_index == 0;
        if eligible && seen.insert(r.question_id.as_str()) {
            let p = &mut by_section[r.section as usize];
            p.total += 1;
            p.correct += r.correct as u64;
        }
    }
    let [lr, rc] = by_section;
    let total = Proportion {
        correct: lr.correct + rc.correct,
        total: lr.total + rc.total,
    };
    if total.total == 0 {
        return Ok(None);
    }
    let scaled = match scale {
        Some(table) => Some(scale_score(total.correct as u32, table)?),
        None => None,
    };
    let some = |p: Proportion| (p.total > 0).then_some(p);
    Ok(Some(BaselineRow {
        model_id: model_id.to_string(),
        lr: some(lr),
        rc: some(rc),
        total,
        scaled,
    }))
}

/// Computes every statistic from `records`. Records are grouped by model
/// and experiment; each group must be complete.
pub fn build_snapshot(
    records: &[TrialRecord],
    options: &SnapshotOptions,
) -> Result<StatsSnapshot, ReportError> {
    if records.is_empty() {
        return Err(ReportError::NoRecords);
    }
    let mut groups: BTreeMap<(&str, ExperimentKind), Vec<TrialRecord>> = BTreeMap::new();
    let mut by_model: BTreeMap<&str, Vec<&TrialRecord>> = BTreeMap::new();
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.key());
    for r in sorted {
        groups
            .entry((r.model_id.as_str(), r.experiment))
            .or_default()
            .push(r.clone());
        by_model.entry(r.model_id.as_str()).or_default().push(r);
    }

    let mut missing = Vec::new();
    if let Some(expected) = &options.expected_questions {
        for ((model, kind), recs) in &groups {
            let present: BTreeSet<&str> = recs.iter().map(|r| r.question_id.as_str()).collect();
            for q in expected.iter().filter(|q| !present.contains(q.as_str())) {
                missing.push(format!("{model}/{kind}/{q}"));
            }
        }
    }

    let mut snap = StatsSnapshot::default();
    for (model, recs) in &by_model {
        if let Some(row) = baseline_row(model, recs, options.scale.as_ref())? {
            snap.baseline.push(row);
        }
    }
    for ((model, kind), recs) in &groups {
        let result = match kind {
            ExperimentKind::PromptSensitivity => OutcomeMatrix::prompt_sensitivity(recs)
                .map_err(incomplete)
                .and_then(|m| prompt_rows(model, &m))
                .map(|rows| snap.prompt_sensitivity.extend(rows)),
            ExperimentKind::PositionBias => PositionBias::from_records(recs)
                .map_err(incomplete)
                .and_then(|pb| {
                    snap.position_bias.extend(position_rows(model, &pb.matrix)?);
                    for (variant, counts) in [Variant::Original, Variant::Shuffled]
                        .into_iter()
                        .zip(pb.letters)
                    {
                        let chi2 = (counts.total() > 0)
                            .then(|| chi2_uniform(&counts))
                            .transpose()?;
                        snap.letter_distribution.push(LetterRow {
                            model_id: model.to_string(),
                            variant,
                            counts,
                            chi2,
                        });
                    }
                    Ok(())
                }),
            ExperimentKind::SelfConsistency => {
                sc_rows(model, recs).map(|rows| snap.self_consistency.extend(rows))
            }
            ExperimentKind::Ablation => OutcomeMatrix::ablation(recs)
                .map_err(incomplete)
                .and_then(|m| ablation_rows(model, &m))
                .map(|rows| snap.ablation.extend(rows)),
            ExperimentKind::PrmBon => candidate_sets(recs).map_err(incomplete).and_then(|sets| {
                let samples = sets[0].candidates.len();
                for (level, methods) in compare_methods(&sets)? {
                    snap.prm_bon.push(PrmRow {
                        model_id: model.to_string(),
                        level,
                        samples,
                        methods,
                    });
                }
                Ok(())
            }),
        };
        match result {
            Err(ReportError::Incomplete(cells)) => {
                missing.extend(cells.into_iter().map(|c| format!("{model}/{kind}/{c}")));
            }
            other => other?,
        }
    }
    if !missing.is_empty() {
        return Err(ReportError::Incomplete(missing));
    }
    Ok(snap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableKind {
    Baseline,
    PromptSensitivity,
    PromptSensitivityBySection,
    PositionBias,
    PositionBiasBySection,
    LetterDistribution,
    SelfConsistency,
    SelfConsistencyBySection,
    Ablation,
    PrmBon,
}

impl TableKind {
    pub const ALL: [TableKind; 10] = [
        TableKind::Baseline,
        TableKind::PromptSensitivity,
        TableKind::PromptSensitivityBySection,
        TableKind::PositionBias,
        TableKind::PositionBiasBySection,
        TableKind::LetterDistribution,
        TableKind::SelfConsistency,
        TableKind::SelfConsistencyBySection,
        TableKind::Ablation,
        TableKind::PrmBon,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            TableKind::Baseline => "baseline",
            TableKind::PromptSensitivity => "prompt-sensitivity",
            TableKind::PromptSensitivityBySection => "prompt-sensitivity-by-section",
            TableKind::PositionBias => "position-bias",
            TableKind::PositionBiasBySection => "position-bias-by-section",
            TableKind::LetterDistribution => "letter-distribution",
            TableKind::SelfConsistency => "self-consistency",
            TableKind::SelfConsistencyBySection => "self-consistency-by-section",
            TableKind::Ablation => "ablation",
            TableKind::PrmBon => "prm-bon",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            TableKind::Baseline => "Baseline accuracy (condition A, original order, first sample)",
            TableKind::PromptSensitivity => "Prompt sensitivity (Cochran's Q across conditions)",
            TableKind::PromptSensitivityBySection => "Prompt sensitivity by section",
            TableKind::PositionBias => "Position bias, original vs. shuffled (exact McNemar)",
            TableKind::PositionBiasBySection => "Position bias by section",
            TableKind::LetterDistribution => "Selected-letter distribution vs. uniform",
            TableKind::SelfConsistency => {
                "Self-consistency, pass@1 vs. majority vote (exact McNemar)"
            }
            TableKind::SelfConsistencyBySection => "Self-consistency by section",
            TableKind::Ablation => "Thinking ablation, on vs. off (exact McNemar)",
            TableKind::PrmBon => "Process supervision vs. baselines (accuracy, %)",
        }
    }
}

impl std::str::FromStr for TableKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        TableKind::ALL
            .into_iter()
            .find(|t| t.slug() == s)
            .ok_or_else(|| format!("unknown table `{s}`"))
    }
}

/// One rendered output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub name: String,
    pub content: String,
}

pub fn fmt_pct(p: Proportion) -> String {
    format!("{:.1}", p.percent())
}

fn fmt_opt_pct(p: Option<Proportion>) -> String {
    p.map_or_else(|| "-".to_string(), fmt_pct)
}

fn signed(value: f64, decimals: usize) -> String {
    let s = format!("{:+.*}", decimals, value);
    if s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Three decimals without the leading zero; `<.001` below one in a thousand.
pub fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        return "<.001".to_string();
    }
    let s = format!("{p:.3}");
    match s.strip_prefix('0') {
        Some(rest) => rest.to_string(),
        None => s,
    }
}

pub fn fmt_h(h: f64) -> String {
    signed(h, 3)
}

/// Difference in percentage points, one decimal.
pub fn fmt_delta(a: Proportion, b: Proportion) -> String {
    signed(a.percent() - b.percent(), 1)
}

pub fn fmt_equiv(k: usize, of: usize) -> String {
    if k > 0 {
        format!("{k}/{of} EQUIV")
    } else {
        format!("{k}/{of}")
    }
}

fn equiv(t: &TestResult) -> bool {
    t.equivalence == Some(true)
}

fn h_of(t: &TestResult) -> String {
    t.effect_h.map_or_else(|| "-".to_string(), fmt_h)
}

struct Table {
    kind: TableKind,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn table(kind: TableKind, header: &[&str], rows: Vec<Vec<String>>) -> Table {
    Table {
        kind,
        header: header.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

fn build_table(snap: &StatsSnapshot, kind: TableKind) -> Table {
    let overall = |level: &Level| *level == Level::Overall;
    match kind {
        TableKind::Baseline => {
            let scaled = snap.baseline.iter().any(|r| r.scaled.is_some());
            let mut header = vec!["Model", "LR", "RC", "Total"];
            if scaled {
                header.push("Scaled");
            }
            let rows = snap
                .baseline
                .iter()
                .map(|r| {
                    let mut row = vec![
                        r.model_id.clone(),
                        fmt_opt_pct(r.lr),
                        fmt_opt_pct(r.rc),
                        fmt_pct(r.total),
                    ];
                    if scaled {
                        row.push(r.scaled.map_or_else(|| "-".into(), |s| s.to_string()));
                    }
                    row
                })
                .collect();
            table(kind, &header, rows)
        }
        TableKind::PromptSensitivity => {
            let rows = snap
                .prompt_sensitivity
                .iter()
                .filter(|r| overall(&r.level))
                .map(|r| {
                    let all: Vec<_> = snap
                        .prompt_sensitivity
                        .iter()
                        .filter(|x| x.model_id == r.model_id)
                        .collect();
                    let k = all
                        .iter()
                        .flat_map(|x| &x.tost)
                        .filter(|t| equiv(t))
                        .count();
                    vec![
                        r.model_id.clone(),
                        fmt_pct(r.accuracy[0]),
                        fmt_pct(r.accuracy[1]),
                        fmt_pct(r.accuracy[2]),
                        format!("{:.2}", r.cochran.statistic),
                        fmt_p(r.cochran.p_value),
                        fmt_equiv(k, 3 * all.len()),
                    ]
                })
                .collect();
            table(
                kind,
                &["Model", "Cond A", "Cond B", "Cond C", "Q(2)", "p", "TOST"],
                rows,
            )
        }
        TableKind::PromptSensitivityBySection => {
            let rows = snap
                .prompt_sensitivity
                .iter()
                .map(|r| {
                    vec![
                        r.model_id.clone(),
                        r.level.to_string(),
                        fmt_pct(r.accuracy[0]),
                        fmt_pct(r.accuracy[1]),
                        fmt_pct(r.accuracy[2]),
                        format!("{:.2}", r.cochran.statistic),
                        fmt_p(r.cochran.p_value),
                        fmt_equiv(r.tost.iter().filter(|t| equiv(t)).count(), 3),
                    ]
                })
                .collect();
            table(
                kind,
                &[
                    "Model", "Section", "Cond A", "Cond B", "Cond C", "Q(2)", "p", "TOST",
                ],
                rows,
            )
        }
        TableKind::PositionBias => {
            let rows = snap
                .position_bias
                .iter()
                .filter(|r| overall(&r.level))
                .map(|r| {
                    let all: Vec<_> = snap
                        .position_bias
                        .iter()
                        .filter(|x| x.model_id == r.model_id)
                        .collect();
                    let k = all.iter().filter(|x| equiv(&x.tost)).count();
                    vec![
                        r.model_id.clone(),
                        fmt_pct(r.original),
                        fmt_pct(r.shuffled),
                        r.paired.b.to_string(),
                        r.paired.c.to_string(),
                        fmt_p(r.mcnemar.p_value),
                        h_of(&r.mcnemar),
                        fmt_equiv(k, all.len()),
                    ]
                })
                .collect();
            table(
                kind,
                &["Model", "Original", "Shuffled", "b", "c", "p", "h", "TOST"],
                rows,
            )
        }
        TableKind::PositionBiasBySection => {
            let rows = snap
                .position_bias
                .iter()
                .map(|r| {
                    vec![
                        r.model_id.clone(),
                        r.level.to_string(),
                        fmt_pct(r.original),
                        fmt_pct(r.shuffled),
                        r.paired.b.to_string(),
                        r.paired.c.to_string(),
                        fmt_p(r.mcnemar.p_value),
                        h_of(&r.mcnemar),
                        if equiv(&r.tost) { "EQUIV" } else { "NO" }.to_string(),
                    ]
                })
                .collect();
            table(
                kind,
                &[
                    "Model", "Section", "Original", "Shuffled", "b", "c", "p", "h", "TOST",
                ],
                rows,
            )
        }
        TableKind::LetterDistribution => {
            let rows = snap
                .letter_distribution
                .iter()
                .map(|r| {
                    let mut row = vec![
                        r.model_id.clone(),
                        match r.variant {
                            Variant::Original => "original",
                            Variant::Shuffled => "shuffled",
                        }
                        .to_string(),
                    ];
                    row.extend(r.counts.0.iter().map(|c| c.to_string()));
                    match &r.chi2 {
                        Some(t) => row.extend([format!("{:.2}", t.statistic), fmt_p(t.p_value)]),
                        None => row.extend(["-".to_string(), "-".to_string()]),
                    }
                    row
                })
                .collect();
            table(
                kind,
                &["Model", "Arm", "A", "B", "C", "D", "E", "chi2(4)", "p"],
                rows,
            )
        }
        TableKind::SelfConsistency | TableKind::SelfConsistencyBySection => {
            let by_section = kind == TableKind::SelfConsistencyBySection;
            let n = snap.self_consistency.first().map_or(5, |r| r.samples);
            let sc = format!("SC@{n}");
            let mut header = vec!["Model"];
            if by_section {
                header.push("Section");
            }
            header.extend([
                "pass@1",
                sc.as_str(),
                "Delta",
                "b",
                "c",
                "p",
                "h",
                "Unanimity",
            ]);
            let rows = snap
                .self_consistency
                .iter()
                .filter(|r| by_section || overall(&r.level))
                .map(|r| {
                    let mut row = vec![r.model_id.clone()];
                    if by_section {
                        row.push(r.level.to_string());
                    }
                    row.extend([
                        fmt_pct(r.pass_at_1),
                        fmt_pct(r.majority),
                        fmt_delta(r.majority, r.pass_at_1),
                        r.paired.b.to_string(),
                        r.paired.c.to_string(),
                        fmt_p(r.mcnemar.p_value),
                        h_of(&r.mcnemar),
                        format!("{}%", fmt_pct(r.unanimous)),
                    ]);
                    row
                })
                .collect();
            table(kind, &header, rows)
        }
        TableKind::Ablation => {
            let rows = snap
                .ablation
                .iter()
                .map(|r| {
                    vec![
                        r.model_id.clone(),
                        r.level.to_string(),
                        fmt_pct(r.on),
                        fmt_pct(r.off),
                        fmt_delta(r.on, r.off),
                        r.paired.b.to_string(),
                        r.paired.c.to_string(),
                        fmt_p(r.mcnemar.p_value),
                        h_of(&r.mcnemar),
                    ]
                })
                .collect();
            table(
                kind,
                &["Model", "Section", "ON", "OFF", "Delta", "b", "c", "p", "h"],
                rows,
            )
        }
        TableKind::PrmBon => {
            let mut rows = Vec::new();
            let models: BTreeSet<&str> = snap.prm_bon.iter().map(|r| r.model_id.as_str()).collect();
            for model in models {
                let cell = |level: Level, f: &dyn Fn(&MethodAccuracy) -> String| {
                    snap.prm_bon
                        .iter()
                        .find(|r| r.model_id == model && r.level == level)
                        .map_or_else(|| "-".to_string(), |r| f(&r.methods))
                };
                let n = snap
                    .prm_bon
                    .iter()
                    .find(|r| r.model_id == model)
                    .map_or(5, |r| r.samples);
                let lines: [(String, &MethodCell); 5] = [
                    ("Baseline (pass@1)".into(), &|m| fmt_pct(m.pass_at_1)),
                    (format!("SC@{n}"), &|m| fmt_pct(m.sc)),
                    (format!("PRM + BoN@{n}"), &|m| fmt_pct(m.bon)),
                    ("Delta (PRM vs. pass@1)".into(), &|m| {
                        fmt_delta(m.bon, m.pass_at_1)
                    }),
                    ("Delta (PRM vs. SC)".into(), &|m| fmt_delta(m.bon, m.sc)),
                ];
                for (label, f) in lines {
                    rows.push(vec![
                        model.to_string(),
                        label,
                        cell(Level::LR, f),
                        cell(Level::RC, f),
                        cell(Level::Overall, f),
                    ]);
                }
            }
            table(kind, &["Model", "Method", "LR", "RC", "Overall"], rows)
        }
    }
}

type MethodCell = dyn Fn(&MethodAccuracy) -> String;

fn markdown_cell(s: &str) -> String {
    s.replace('|', "\\|")
}

fn markdown(tables: &[Table]) -> String {
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("## {}\n\n", t.kind.title()));
        let line = |cells: &[String]| {
            format!(
                "| {} |\n",
                cells
                    .iter()
                    .map(|c| markdown_cell(c))
                    .collect::<Vec<_>>()
                    .join(" | ")
            )
        };
        out.push_str(&line(&t.header));
        let rule: Vec<String> = t
            .header
            .iter()
            .enumerate()
            .map(|(j, _)| if j == 0 { "---".into() } else { "---:".into() })
            .collect();
        out.push_str(&format!("|{}|\n", rule.join("|")));
        for row in &t.rows {
            out.push_str(&line(row));
        }
    }
    out
}

fn csv_document(t: &Table) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.header)?;
    for row in &t.rows {
        w.write_record(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Renders the selected tables. Markdown yields one document; CSV yields
/// one document per table; JSON yields the whole snapshot.
pub fn render(
    snap: &StatsSnapshot,
    format: Format,
    tables: &[TableKind],
) -> Result<Vec<Document>, ReportError> {
    let built: Vec<Table> = tables.iter().map(|&k| build_table(snap, k)).collect();
    Ok(match format {
        Format::Markdown => vec![Document {
            name: "report.md".into(),
            content: markdown(&built),
        }],
        Format::Csv => built
            .iter()
            .map(|t| {
                Ok(Document {
                    name: format!("{}.csv", t.kind.slug()),
                    content: csv_document(t)?,
                })
            })
            .collect::<Result<_, ReportError>>()?,
        Format::Json => vec![Document {
            name: "stats.json".into(),
            content: serde_json::to_string_pretty(snap)? + "\n",
        }],
    })
}
