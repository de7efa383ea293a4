#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mcqeval_core::corpus::{Letter, Question, Section};
use mcqeval_core::experiments::{Experiment, ExperimentKind};
use mcqeval_core::provider::{
    synthetic_payload, CacheKey, FetchError, FnBackend, Mechanism, ModelSpec, Provider,
    RecordingBackend, Sampling, ThinkToggle, WireRequest,
};

pub const MODEL_ID: &str = "mock-model";
pub const KEY_VAR: &str = "MCQEVAL_TEST_MOCK_KEY";
pub const CORRECT_PREFIX: &str = "Supported:";

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mcqeval"))
}

pub fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env_remove(KEY_VAR)
        .output()
        .expect("spawn mcqeval")
}

pub fn questions(lr: usize, rc: usize) -> Vec<Question> {
    (0..lr + rc)
        .map(|i| {
            let key = Letter::from_index((i * 3 + 1) % 5).unwrap();
            Question {
                id: format!("m{i:02}"),
                source: "mock".into(),
                section: if i < lr { Section::LR } else { Section::RC },
                stimulus: format!("Passage {i}: a short argument about item {i}."),
                stem: "Which one of the following most strongly supports the argument?".into(),
                choices: Letter::ALL
                    .iter()
                    .map(|&l| {
                        if l == key {
                            format!("{CORRECT_PREFIX} the premise that closes the gap in item {i}")
                        } else {
                            format!(
                                "An irrelevant observation numbered {} for item {i}",
                                l.index()
                            )
                        }
                    })
                    .collect(),
                answer_key: key,
                explanations: None,
            }
        })
        .collect()
}

pub fn spec() -> ModelSpec {
    ModelSpec {
        model_id: MODEL_ID.into(),
        mechanism: Mechanism::SignedThinkingBlock,
        think_toggle: Some(ThinkToggle::ThinkingTypeParam),
        endpoint: "https://example.invalid/v1/messages".into(),
        api_key_env: Some(KEY_VAR.into()),
        remote_model: None,
        thinking_budget: None,
        sampling: Sampling::default(),
        request_extra: None,
    }
}

const CONFIG: &str = r#"seed = 20250401

[[models]]
id = "mock-model"
mechanism = "signed_thinking_block"
think_toggle = "thinking_type_param"
endpoint = "https://example.invalid/v1/messages"
api_key_env = "MCQEVAL_TEST_MOCK_KEY"
"#;

/// Synthetic model: right about 70% of the time, a fixed wrong letter
/// otherwise, with answers varying by sample.
fn respond(key: &CacheKey, request: &WireRequest) -> Result<serde_json::Value, FetchError> {
    let user = request.body["messages"][0]["content"]
        .as_str()
        .unwrap_or_default();
    let right = user
        .lines()
        .find_map(|line| {
            let rest = line.strip_prefix('(')?;
            rest.get(3..)?
                .starts_with(CORRECT_PREFIX)
                .then(|| Letter::from_char(rest.chars().next()?))?
        })
        .ok_or_else(|| FetchError::fatal("no choices in request"))?;
    let mut h = DefaultHasher::new();
    key.as_str().hash(&mut h);
    let noise = h.finish() % 10;
    let letter = if noise < 7 {
        right
    } else {
        Letter::from_index((right.index() + 1) % 5).unwrap()
    };
    let constrained = request.body["system"]
        .as_str()
        .is_some_and(|s| s.contains("ONLY"));
    let response = if constrained {
        letter.to_string()
    } else {
        format!("The argument assumes the link holds.\n\nAnswer: ({letter})")
    };
    let thinking = if request.body["thinking"]["type"] == "disabled" {
        ""
    } else {
        "Checking each option."
    };
    Ok(synthetic_payload(
        Mechanism::SignedThinkingBlock,
        thinking,
        &response,
    ))
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    /// Dataset, config and replay payloads covering every non-PRM experiment
    /// with up to `n` samples.
    pub fn new(lr: usize, rc: usize, n: u32) -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let qs = questions(lr, rc);
        let mut jsonl = String::new();
        for q in &qs {
            jsonl.push_str(&serde_json::to_string(q).unwrap());
            jsonl.push('\n');
        }
        std::fs::write(dir.path().join("dataset.jsonl"), jsonl).unwrap();
        std::fs::write(dir.path().join("config.toml"), CONFIG).unwrap();
        let replay = dir.path().join("replay");
        std::fs::create_dir_all(&replay).unwrap();
        let provider = Provider::new(Box::new(RecordingBackend::new(FnBackend(respond), &replay)));
        let model = spec();
        let exp = Experiment::new(&provider, &model, &qs);
        for kind in ExperimentKind::ALL {
            if kind != ExperimentKind::PrmBon {
                exp.run(kind, n).unwrap();
            }
        }
        Fixture { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    pub fn manifest(&self) -> String {
        let qs = std::fs::read_to_string(self.path("dataset.jsonl")).unwrap();
        let rc = qs.matches("\"section\":\"RC\"").count();
        let total = qs.lines().count();
        format!("{total}/{}/{rc}", total - rc)
    }
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}
