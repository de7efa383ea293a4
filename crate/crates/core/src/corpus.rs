//! Question datasets: loading, validation against manifests, and
//! deterministic per-question answer-choice shuffling.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Default global seed for shuffled variants.
pub const DEFAULT_SHUFFLE_SEED: u64 = 20250401;

/// Answer-choice letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    A,
    B,
    C,
    D,
    E,
}

impl Letter {
    pub const ALL: [Letter; 5] = [Letter::A, Letter::B, Letter::C, Letter::D, Letter::E];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Letter> {
        Self::ALL.get(index).copied()
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'A' => Some(Letter::A),
            'B' => Some(Letter::B),
            'C' => Some(Letter::C),
            'D' => Some(Letter::D),
            'E' => Some(Letter::E),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        (b'A' + self as u8) as char
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Letter {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next().and_then(Letter::from_char), chars.next()) {
            (Some(letter), None) => Ok(letter),
            _ => Err(CorpusError::BadLetter(s.to_string())),
        }
    }
}

/// Test section a question belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Section {
    /// Logical Reasoning.
    LR,
    /// Reading Comprehension.
    RC,
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Section::LR => f.write_str("LR"),
            Section::RC => f.write_str("RC"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationLabel {
    Correct,
    Incorrect,
}

/// Official explanation for one answer choice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub label: ExplanationLabel,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate question id `{id}` on line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("dataset has {found} questions ({lr} LR, {rc} RC); manifest `{manifest}` expects {expected_total} ({expected_lr} LR, {expected_rc} RC)")]
    CountMismatch {
        manifest: String,
        found: usize,
        lr: usize,
        rc: usize,
        expected_total: usize,
        expected_lr: usize,
        expected_rc: usize,
    },
    #[error("invalid question `{id}`: {message}")]
    Invalid { id: String, message: String },
    #[error("not a letter A-E: `{0}`")]
    BadLetter(String),
    #[error("unknown manifest `{0}`")]
    UnknownManifest(String),
    #[error("manifest counts are inconsistent: {lr} LR + {rc} RC != {total}")]
    InconsistentManifest { total: usize, lr: usize, rc: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One five-choice question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub source: String,
    pub section: Section,
    pub stimulus: String,
    pub stem: String,
    pub choices: Vec<String>,
    #[serde(rename = "answer")]
    pub answer_key: Letter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanations: Option<BTreeMap<Letter, Explanation>>,
}

impl Question {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |message: String| CorpusError::Invalid {
            id: self.id.clone(),
            message,
        };
        if self.id.is_empty() {
            return Err(invalid("empty id".into()));
        }
        if self.choices.len() != 5 {
            return Err(invalid(format!(
                "expected 5 choices, found {}",
                self.choices.len()
            )));
        }
        if let Some(explanations) = &self.explanations {
            if explanations.len() != 5 {
                return Err(invalid(format!(
                    "explanations must cover all 5 letters, found {}",
                    explanations.len()
                )));
            }
            let correct: Vec<Letter> = explanations
                .iter()
                .filter(|(_, e)| e.label == ExplanationLabel::Correct)
                .map(|(l, _)| *l)
                .collect();
            if correct != [self.answer_key] {
                return Err(invalid(format!(
                    "explanations must label exactly the answer key {} correct, found {:?}",
                    self.answer_key, correct
                )));
            }
        }
        Ok(())
    }

    pub fn choice(&self, letter: Letter) -> &str {
        &self.choices[letter.index()]
    }

    pub fn explanation(&self, letter: Letter) -> Option<&Explanation> {
        self.explanations.as_ref().and_then(|e| e.get(&letter))
    }
}

/// Expected dataset shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub expected_total: usize,
    pub expected_lr: usize,
    pub expected_rc: usize,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, expected_lr: usize, expected_rc: usize) -> DatasetManifest {
        DatasetManifest {
            name: name.into(),
            expected_total: expected_lr + expected_rc,
            expected_lr,
            expected_rc,
        }
    }

    pub fn official_test() -> DatasetManifest {
        DatasetManifest::new("official-test", 50, 27)
    }

    pub fn pt150_159() -> DatasetManifest {
        DatasetManifest::new("pt150-159", 633, 404)
    }

    pub fn pt140_141() -> DatasetManifest {
        DatasetManifest::new("pt140-141", 128, 81)
    }

    pub fn builtin() -> [DatasetManifest; 3] {
        [Self::official_test(), Self::pt150_159(), Self::pt140_141()]
    }

    /// Resolves a built-in name or an inline `TOTAL/LR/RC` triple.
    pub fn resolve(spec: &str) -> Result<DatasetManifest, CorpusError> {
        if let Some(m) = Self::builtin().into_iter().find(|m| m.name == spec) {
            return Ok(m);
        }
        let parts: Vec<&str> = spec.split('/').collect();
        if let [total, lr, rc] = parts[..] {
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CorpusError::UnknownManifest(spec.to_string()))
            };
            let m = DatasetManifest {
                name: spec.to_string(),
                expected_total: parse(total)?,
                expected_lr: parse(lr)?,
                expected_rc: parse(rc)?,
            };
            m.check_consistent()?;
            return Ok(m);
        }
        Err(CorpusError::UnknownManifest(spec.to_string()))
    }

    pub fn check_consistent(&self) -> Result<(), CorpusError> {
        if self.expected_lr + self.expected_rc != self.expected_total {
            return Err(CorpusError::InconsistentManifest {
                total: self.expected_total,
                lr: self.expected_lr,
                rc: self.expected_rc,
            });
        }
        Ok(())
    }
}

/// Reads line-delimited JSON question records and checks them against `manifest`.
pub fn load_dataset(path: &Path, manifest: &DatasetManifest) -> Result<Vec<Question>, CorpusError> {
    let file = std::fs::File::open(path)?;
    read_dataset(std::io::BufReader::new(file), manifest)
}

pub fn read_dataset<R: BufRead>(
    reader: R,
    manifest: &DatasetManifest,
) -> Result<Vec<Question>, CorpusError> {
    manifest.check_consistent()?;
    let mut questions = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let question: Question =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        question.validate().map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if !seen.insert(question.id.clone()) {
            return Err(CorpusError::DuplicateId {
                id: question.id,
                line: line_no,
            });
        }
        questions.push(question);
    }
    let lr = questions
        .iter()
        .filter(|q| q.section == Section::LR)
        .count();
    let rc = questions.len() - lr;
    if questions.len() != manifest.expected_total
        || lr != manifest.expected_lr
        || rc != manifest.expected_rc
    {
        return Err(CorpusError::CountMismatch {
            manifest: manifest.name.clone(),
            found: questions.len(),
            lr,
            rc,
            expected_total: manifest.expected_total,
            expected_lr: manifest.expected_lr,
            expected_rc: manifest.expected_rc,
        });
    }
    Ok(questions)
}

/// A bijection on the five choice positions.
///
/// `map[i]` is the position that the choice originally at position `i`
/// occupies after shuffling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation([u8; 5]);

impl Permutation {
    pub const IDENTITY: Permutation = Permutation([0, 1, 2, 3, 4]);

    pub fn from_images(images: [u8; 5]) -> Option<Permutation> {
        let mut seen = [false; 5];
        for &i in &images {
            if i >= 5 || std::mem::replace(&mut seen[i as usize], true) {
                return None;
            }
        }
        Some(Permutation(images))
    }

    /// All 120 permutations in lexicographic order.
    pub fn all() -> Vec<Permutation> {
        let mut out = Vec::with_capacity(120);
        let mut current = [0u8, 1, 2, 3, 4];
        loop {
            out.push(Permutation(current));
            // next lexicographic permutation
            let Some(i) = (0..4).rev().find(|&i| current[i] < current[i + 1]) else {
                break;
            };
            let j = (i + 1..5).rev().find(|&j| current[j] > current[i]).unwrap();
            current.swap(i, j);
            current[i + 1..].reverse();
        }
        out
    }

    pub fn apply(&self, letter: Letter) -> Letter {
        Letter::from_index(self.0[letter.index()] as usize).unwrap()
    }

    pub fn invert(&self, letter: Letter) -> Letter {
        let pos = self
            .0
            .iter()
            .position(|&p| p as usize == letter.index())
            .unwrap();
        Letter::from_index(pos).unwrap()
    }

    pub fn images(&self) -> [u8; 5] {
        self.0
    }
}

/// A question presented with permuted answer choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShuffledQuestion<'a> {
    pub base: &'a Question,
    pub permutation: Permutation,
    pub remapped_key: Letter,
    pub seed: u64,
}

impl<'a> ShuffledQuestion<'a> {
    pub fn with_permutation(base: &'a Question, permutation: Permutation, seed: u64) -> Self {
        ShuffledQuestion {
            base,
            permutation,
            remapped_key: permutation.apply(base.answer_key),
            seed,
        }
    }

    /// Text shown at `letter` in the shuffled presentation.
    pub fn choice(&self, letter: Letter) -> &'a str {
        self.base.choice(self.permutation.invert(letter))
    }
}

/// Read access shared by original and shuffled presentations.
pub trait PresentedItem {
    fn question_id(&self) -> &str;
    fn section(&self) -> Section;
    fn stimulus(&self) -> &str;
    fn stem(&self) -> &str;
    /// Choice text displayed at `letter`.
    fn displayed_choice(&self, letter: Letter) -> &str;
    /// Key in the displayed ordering.
    fn displayed_key(&self) -> Letter;

    fn is_correct(&self, selected: Option<Letter>) -> bool {
        selected == Some(self.displayed_key())
    }
}

impl PresentedItem for Question {
    fn question_id(&self) -> &str {
        &self.id
    }
    fn section(&self) -> Section {
        self.section
    }
    fn stimulus(&self) -> &str {
        &self.stimulus
    }
    fn stem(&self) -> &str {
        &self.stem
    }
    fn displayed_choice(&self, letter: Letter) -> &str {
        self.choice(letter)
    }
    fn displayed_key(&self) -> Letter {
        self.answer_key
    }
}

impl PresentedItem for ShuffledQuestion<'_> {
    fn question_id(&self) -> &str {
        &self.base.id
    }
    fn section(&self) -> Section {
        self.base.section
    }
    fn stimulus(&self) -> &str {
        &self.base.stimulus
    }
    fn stem(&self) -> &str {
        &self.base.stem
    }
    fn displayed_choice(&self, letter: Letter) -> &str {
        self.choice(letter)
    }
    fn displayed_key(&self) -> Letter {
        self.remapped_key
    }
}

/// Counter-based generator keyed by (seed, question id); each draw depends
/// only on the key and the counter, so results are platform independent.
struct KeyedStream {
    key: u64,
    counter: u64,
}

impl KeyedStream {
    fn new(seed: u64, id: &str) -> KeyedStream {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(id.as_bytes());
        let digest = hasher.finalize();
        let mut first = [0u8; 8];
        first.copy_from_slice(&digest[..8]);
        KeyedStream {
            key: u64::from_le_bytes(first),
            counter: 0,
        }
    }

    fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        splitmix64(
            self.key
                .wrapping_add(self.counter.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        )
    }

    /// Uniform draw in `0..bound` by rejection.
    fn below(&mut self, bound: u64) -> u64 {
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministically permutes the answer choices of `q`.
pub fn shuffle_choices(q: &Question, seed: u64) -> ShuffledQuestion<'_> {
    let mut stream = KeyedStream::new(seed, &q.id);
    // Fisher-Yates over the shuffled order of original positions
    let mut order = [0u8, 1, 2, 3, 4];
    for i in (1..5).rev() {
        let j = stream.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    let mut images = [0u8; 5];
    for (new_pos, &orig) in order.iter().enumerate() {
        images[orig as usize] = new_pos as u8;
    }
    ShuffledQuestion::with_permutation(q, Permutation(images), seed)
}
