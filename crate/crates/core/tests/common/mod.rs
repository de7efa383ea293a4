#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use mcqeval_core::corpus::{Letter, Question, Section};
use mcqeval_core::provider::{
    synthetic_payload, CacheKey, FetchError, FnBackend, Mechanism, ModelSpec, Provider,
    RetryPolicy, Sampling, ThinkToggle, WireRequest,
};
use serde_json::Value;

pub const CORRECT_PREFIX: &str = "Supported:";

/// `lr` LR questions followed by `rc` RC questions with rotating keys.
pub fn questions(lr: usize, rc: usize) -> Vec<Question> {
    (0..lr + rc)
        .map(|i| {
            let key = Letter::from_index(i % 5).unwrap();
            let choices = Letter::ALL
                .iter()
                .map(|&l| {
                    if l == key {
                        format!("{CORRECT_PREFIX} conclusion for item {i}")
                    } else {
                        format!("Distractor {} for item {i}", l.index())
                    }
                })
                .collect();
            Question {
                id: format!("q{i:03}"),
                source: "synthetic".into(),
                section: if i < lr { Section::LR } else { Section::RC },
                stimulus: format!("Stimulus for item q{i:03}."),
                stem: "Which one of the following is best supported?".into(),
                choices,
                answer_key: key,
                explanations: None,
            }
        })
        .collect()
}

pub fn spec(id: &str) -> ModelSpec {
    ModelSpec {
        model_id: id.into(),
        mechanism: Mechanism::SignedThinkingBlock,
        think_toggle: Some(ThinkToggle::ThinkingTypeParam),
        endpoint: "https://example.invalid/v1/messages".into(),
        api_key_env: None,
        remote_model: None,
        thinking_budget: None,
        sampling: Sampling::default(),
        request_extra: None,
    }
}

/// What a synthetic model sees for one request.
pub struct Seen<'a> {
    pub question_id: String,
    pub choices: Vec<(Letter, &'a str)>,
    pub thinking_off: bool,
    /// Deterministic per-request noise derived from the cache key.
    pub noise: u64,
}

impl Seen<'_> {
    pub fn correct_letter(&self) -> Letter {
        self.choices
            .iter()
            .find(|(_, text)| text.starts_with(CORRECT_PREFIX))
            .map(|(l, _)| *l)
            .unwrap()
    }
}

fn user_text(request: &WireRequest) -> &str {
    request.body["messages"][0]["content"].as_str().unwrap()
}

pub fn seen<'a>(key: &CacheKey, request: &'a WireRequest) -> Seen<'a> {
    let user = user_text(request);
    let question_id = user
        .split("Stimulus for item ")
        .nth(1)
        .unwrap()
        .chars()
        .take_while(char::is_ascii_alphanumeric)
        .collect();
    let choices = user
        .lines()
        .filter_map(|line| {
            let rest = line.strip_prefix('(')?;
            let letter = Letter::from_char(rest.chars().next()?)?;
            Some((letter, rest.get(3..)?))
        })
        .collect();
    let mut h = DefaultHasher::new();
    key.as_str().hash(&mut h);
    Seen {
        question_id,
        choices,
        thinking_off: request.body["thinking"]["type"] == "disabled",
        noise: h.finish(),
    }
}

pub fn answer(letter: Letter) -> String {
    format!("Weighing each option in turn.\n\nAnswer: ({letter})")
}

/// Provider whose model picks a letter (or refuses with `None`) per request.
pub fn provider<F>(choose: F) -> Provider
where
    F: Fn(&Seen) -> Option<Letter> + Send + Sync + 'static,
{
    Provider::new(Box::new(FnBackend(
        move |key: &CacheKey, request: &WireRequest| {
            let s = seen(key, request);
            let response = match choose(&s) {
                Some(l) => answer(l),
                None => "I am unable to decide between these.".to_string(),
            };
            let thinking = if s.thinking_off {
                ""
            } else {
                "Let me think about the argument."
            };
            Ok::<Value, FetchError>(synthetic_payload(
                Mechanism::SignedThinkingBlock,
                thinking,
                &response,
            ))
        },
    )))
    .with_retry(RetryPolicy::no_delay())
}
