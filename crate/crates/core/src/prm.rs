//! Trace rubric grading, self-PRM scoring, and Best-of-N selection.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::{ExplanationLabel, Letter, PresentedItem, Question, Section};
use crate::experiments::{majority_vote, TrialRecord};
use crate::extraction::Extraction;
use crate::prompting::{user_message, Condition, PromptBundle};
use crate::provider::{ModelSpec, Provider, ProviderError, ThinkingMode};
use crate::stats::{Level, Proportion};

/// System prompt issued to the self-PRM scorer.
pub const SCORING_PROMPT: &str = "You are an expert LSAT reasoning evaluator. You will be given an LSAT question and a model's reasoning process (thinking trace).

Evaluate the quality of the reasoning and predict how likely it is to produce the correct answer.

Assess: (1) Does the reasoning correctly identify the argument structure? (2) Does it correctly evaluate each answer choice? (3) Is the final answer justified by sound reasoning?

Respond in JSON format only: {\"score\": <float 0.0-1.0>, \"best_answer\": \"<A-E>\", \"justification\": \"<1-2 sentences>\"}";

const STANCE_TEMPLATE: &str = include_str!("../assets/judge_stance.txt");
const REASON_TEMPLATE: &str = include_str!("../assets/judge_reason.txt");

#[derive(Debug, Error)]
pub enum PrmError {
    #[error("question {0} has no official explanations")]
    MissingExplanations(String),
    #[error("empty trace for question {0}")]
    EmptyTrace(String),
    #[error(transparent)]
    Judge(#[from] ProviderError),
    #[error(
        "judge reply for the {pass} pass was not a structured verdict after one retry: {reply:?}"
    )]
    Unparseable { pass: &'static str, reply: String },
    #[error("question {question_id}: expected {expected} samples, found {found}")]
    Ragged {
        question_id: String,
        expected: usize,
        found: usize,
    },
    #[error("no questions to compare")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stance {
    JudgedCorrect,
    JudgedIncorrect,
    NotAddressed,
}

impl Stance {
    pub const ALL: [Stance; 3] = [
        Stance::JudgedCorrect,
        Stance::JudgedIncorrect,
        Stance::NotAddressed,
    ];

    fn parse(s: &str) -> Option<Stance> {
        match s
            .trim()
            .to_ascii_lowercase()
            .replace([' ', '-'], "_")
            .as_str()
        {
            "correct" | "judged_correct" => Some(Stance::JudgedCorrect),
            "incorrect" | "judged_incorrect" => Some(Stance::JudgedIncorrect),
            "not_addressed" => Some(Stance::NotAddressed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceJudgment {
    pub letter: Letter,
    pub stance: Stance,
    pub agrees_with_official: bool,
    pub reason_matches: bool,
}

impl ChoiceJudgment {
    /// Derives agreement from the official label; a reason can only match
    /// when the verdict agrees.
    pub fn new(
        letter: Letter,
        stance: Stance,
        official: ExplanationLabel,
        reason_matches: bool,
    ) -> Self {
        let agrees_with_official = matches!(
            (stance, official),
            (Stance::JudgedCorrect, ExplanationLabel::Correct)
                | (Stance::JudgedIncorrect, ExplanationLabel::Incorrect)
        );
        ChoiceJudgment {
            letter,
            stance,
            agrees_with_official,
            reason_matches: agrees_with_official && reason_matches,
        }
    }

    pub fn points(&self) -> u8 {
        self.agrees_with_official as u8 + self.reason_matches as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RubricScore {
    pub per_choice: [ChoiceJudgment; 5],
    pub points: u8,
    pub normalized: f64,
}

impl RubricScore {
    pub fn from_judgments(per_choice: [ChoiceJudgment; 5]) -> RubricScore {
        let points: u8 = per_choice.iter().map(ChoiceJudgment::points).sum();
        RubricScore {
            per_choice,
            points,
            normalized: f64::from(points) / 10.0,
        }
    }
}

fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (name, value) in vars {
            if let Some(after) = tail
                .strip_prefix('{')
                .and_then(|t| t.strip_prefix(name))
                .and_then(|t| t.strip_prefix('}'))
            {
                out.push_str(value);
                rest = after;
                continue 'scan;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

/// Pulls a JSON object out of a reply, tolerating code fences and prose
/// around it.
pub fn json_object(reply: &str) -> Option<serde_json::Map<String, Value>> {
    let trimmed = reply.trim();
    let candidates = [
        Some(trimmed),
        trimmed
            .find('{')
            .zip(trimmed.rfind('}'))
            .filter(|(a, b)| a < b)
            .map(|(a, b)| &trimmed[a..=b]),
    ];
    candidates
        .into_iter()
        .flatten()
        .find_map(|text| match serde_json::from_str(text) {
            Ok(Value::Object(map)) => Some(map),
            _ => None,
        })
}

fn letter_field(map: &serde_json::Map<String, Value>, letter: Letter) -> Option<&Value> {
    map.iter()
        .find(|(k, _)| k.trim().eq_ignore_ascii_case(&letter.to_string()))
        .map(|(_, v)| v)
}

fn parse_stances(reply: &str) -> Option<[Stance; 5]> {
    let map = json_object(reply)?;
    let mut out = [Stance::NotAddressed; 5];
    for letter in Letter::ALL {
        out[letter.index()] = Stance::parse(letter_field(&map, letter)?.as_str()?)?;
    }
    Some(out)
}

fn parse_reasons(reply: &str, letters: &[Letter]) -> Option<Vec<bool>> {
    let map = json_object(reply)?;
    letters
        .iter()
        .map(|&l| letter_field(&map, l)?.as_bool())
        .collect()
}

fn ask<T>(
    provider: &Provider,
    judge: &ModelSpec,
    section: Section,
    prompt: String,
    pass: &'static str,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<T, PrmError> {
    let bundle = PromptBundle {
        condition: Condition::A,
        system_prompt: None,
        user_message: prompt,
        section,
    };
    let mut reply = String::new();
    for attempt in 0..2 {
        reply = provider
            .send(judge, &bundle, attempt, ThinkingMode::On)?
            .response;
        if let Some(parsed) = parse(&reply) {
            return Ok(parsed);
        }
        log::warn!(
            "unstructured {pass}-pass judge reply (attempt {})",
            attempt + 1
        );
    }
    Err(PrmError::Unparseable { pass, reply })
}

/// Two-pass rubric grading of `trace` against the official per-choice
/// explanations of `q`.
pub fn grade_trace(
    provider: &Provider,
    judge: &ModelSpec,
    q: &Question,
    trace: &str,
) -> Result<RubricScore, PrmError> {
    let explanations = q
        .explanations
        .as_ref()
        .ok_or_else(|| PrmError::MissingExplanations(q.id.clone()))?;
    if trace.trim().is_empty() {
        return Err(PrmError::EmptyTrace(q.id.clone()));
    }
    let mut judge = judge.clone();
    judge.sampling.temperature = 0.0;
    let question = user_message(q);

    let stance_prompt = render(
        STANCE_TEMPLATE,
        &[("question", &question), ("trace", trace)],
    );
    let stances = ask(
        provider,
        &judge,
        q.section,
        stance_prompt,
        "stance",
        parse_stances,
    )?;
    let label = |l: Letter| explanations[&l].label;
    let agreeing: Vec<Letter> = Letter::ALL
        .into_iter()
        .filter(|&l| {
            ChoiceJudgment::new(l, stances[l.index()], label(l), false).agrees_with_official
        })
        .collect();

    let mut reasons = [false; 5];
    if !agreeing.is_empty() {
        let keys = format!(
            "{{{}}}",
            agreeing
                .iter()
                .map(|l| format!("\"{l}\": <true|false>"))
                .collect::<Vec<_>>()
                .join(", ")
        );
        let official = agreeing
            .iter()
            .map(|&l| {
                let e = &explanations[&l];
                let verdict = match e.label {
                    ExplanationLabel::Correct => "correct",
                    ExplanationLabel::Incorrect => "incorrect",
                };
                format!("({l}) {verdict}: {}", e.reason)
            })
            .collect::<Vec<_>>()
            .join("\n");
        let prompt = render(
            REASON_TEMPLATE,
            &[
                ("keys", &keys),
                ("question", &question),
                ("explanations", &official),
                ("trace", trace),
            ],
        );
        let matched = ask(provider, &judge, q.section, prompt, "reason", |r| {
            parse_reasons(r, &agreeing)
        })?;
        for (l, m) in agreeing.iter().zip(matched) {
            reasons[l.index()] = m;
        }
    }
    let per_choice = Letter::ALL
        .map(|l| ChoiceJudgment::new(l, stances[l.index()], label(l), reasons[l.index()]));
    Ok(RubricScore::from_judgments(per_choice))
}

/// Parsed self-PRM reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrmVerdict {
    pub score: f64,
    pub best_answer: Option<Letter>,
    pub justification: String,
    pub parse_ok: bool,
    /// The reply's score fell outside [0, 1] and was clamped.
    #[serde(default)]
    pub clamped: bool,
}

impl PrmVerdict {
    pub fn unparsed() -> PrmVerdict {
        PrmVerdict {
            score: 0.0,
            best_answer: None,
            justification: String::new(),
            parse_ok: false,
            clamped: false,
        }
    }
}

pub fn parse_verdict(reply: &str) -> PrmVerdict {
    let Some(map) = json_object(reply) else {
        return PrmVerdict::unparsed();
    };
    let Some(raw) = map.get("score").and_then(Value::as_f64) else {
        return PrmVerdict::unparsed();
    };
    let score = raw.clamp(0.0, 1.0);
    let best_answer = map
        .get("best_answer")
        .and_then(Value::as_str)
        .and_then(|s| s.trim().trim_matches(|c| c == '(' || c == ')').parse().ok());
    PrmVerdict {
        score,
        best_answer,
        justification: map
            .get("justification")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string(),
        parse_ok: true,
        clamped: score != raw,
    }
}

/// The scorer's user message: the question as presented, then the trace.
pub fn scoring_user_message<Q: PresentedItem + ?Sized>(q: &Q, trace: &str) -> String {
    format!("{}\n\nThinking trace:\n{trace}", user_message(q))
}

pub fn prm_score<Q: PresentedItem + ?Sized>(
    provider: &Provider,
    scorer: &ModelSpec,
    q: &Q,
    trace: &str,
) -> Result<PrmVerdict, ProviderError> {
    let bundle = PromptBundle {
        condition: Condition::A,
        system_prompt: Some(SCORING_PROMPT.to_string()),
        user_message: scoring_user_message(q, trace),
        section: q.section(),
    };
    let reply = provider.send(scorer, &bundle, 0, ThinkingMode::On)?;
    let verdict = parse_verdict(&reply.response);
    if !verdict.parse_ok {
        log::warn!("{}: unparseable scorer reply", q.question_id());
    } else if verdict.clamped {
        log::warn!("{}: scorer score out of range, clamped", q.question_id());
    }
    Ok(verdict)
}

/// One scored sample for Best-of-N selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub sample_index: u32,
    pub extracted: Extraction,
    pub correct: bool,
    pub score: f64,
}

impl From<&TrialRecord> for Candidate {
    fn from(r: &TrialRecord) -> Candidate {
        Candidate {
            sample_index: r.sample_index,
            extracted: r.extracted,
            correct: r.correct,
            score: r.prm.as_ref().map_or(0.0, |v| v.score),
        }
    }
}

/// Highest score wins; ties go to the lowest sample index. NaN ranks lowest.
pub fn bon_select(candidates: &[Candidate]) -> Option<&Candidate> {
    let key = |c: &Candidate| {
        if c.score.is_nan() {
            f64::NEG_INFINITY
        } else {
            c.score
        }
    };
    candidates.iter().reduce(|best, c| {
        match key(c)
            .total_cmp(&key(best))
            .then(best.sample_index.cmp(&c.sample_index))
        {
            std::cmp::Ordering::Greater => c,
            _ => best,
        }
    })
}

/// All scored samples for one question.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub question_id: String,
    pub section: Section,
    pub answer_key: Letter,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodAccuracy {
    pub pass_at_1: Proportion,
    pub sc: Proportion,
    pub bon: Proportion,
}

/// Per-level accuracy of pass@1, majority vote, and PRM Best-of-N.
pub fn compare_methods(sets: &[CandidateSet]) -> Result<Vec<(Level, MethodAccuracy)>, PrmError> {
    let Some(first) = sets.first() else {
        return Err(PrmError::Empty);
    };
    let n = first.candidates.len();
    let mut outcomes = Vec::with_capacity(sets.len());
    for set in sets {
        if set.candidates.len() != n || n == 0 {
            return Err(PrmError::Ragged {
                question_id: set.question_id.clone(),
                expected: n.max(1),
                found: set.candidates.len(),
            });
        }
        let mut ordered = set.candidates.clone();
        ordered.sort_by_key(|c| c.sample_index);
        let letters: Vec<Extraction> = ordered.iter().map(|c| c.extracted).collect();
        let pass1 = ordered[0].correct;
        let sc = majority_vote(&letters) == Extraction::Letter(set.answer_key);
        let bon = bon_select(&ordered).is_some_and(|c| c.correct);
        outcomes.push((set.section, [pass1, sc, bon]));
    }
    let mut rows = Vec::new();
    for level in Level::ALL {
        let mut acc = [Proportion {
            correct: 0,
            total: 0,
        }; 3];
        for (section, cells) in &outcomes {
            if !level.includes(*section) {
                continue;
            }
            for (p, &ok) in acc.iter_mut().zip(cells) {
                p.total += 1;
                p.correct += ok as u64;
            }
        }
        if acc[0].total > 0 {
            rows.push((
                level,
                MethodAccuracy {
                    pass_at_1: acc[0],
                    sc: acc[1],
                    bon: acc[2],
                },
            ));
        }
    }
    Ok(rows)
}

/// A rubric-graded trace, one line of the graded-traces file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedTrace {
    pub model_id: String,
    pub question_id: String,
    pub sample_index: u32,
    pub trace: String,
    pub rubric: RubricScore,
}

/// Supervised fine-tuning record for the self-PRM trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftRecord {
    pub question_id: String,
    pub system_prompt: String,
    pub user_message: String,
    pub question: String,
    pub trace: String,
    pub answer_key: Letter,
    pub points: u8,
    pub score: f64,
}

pub fn sft_record(q: &Question, graded: &GradedTrace) -> SftRecord {
    SftRecord {
        question_id: q.id.clone(),
        system_prompt: SCORING_PROMPT.to_string(),
        user_message: scoring_user_message(q, &graded.trace),
        question: user_message(q),
        trace: graded.trace.clone(),
        answer_key: q.answer_key,
        points: graded.rubric.points,
        score: graded.rubric.normalized,
    }
}
