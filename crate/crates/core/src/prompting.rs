//! Prompt bundles for the three prompting conditions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Letter, PresentedItem, Section};

/// Prompting condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Minimal: user message only.
    A,
    /// Structured: expert-instructor system prompt with a five-step method.
    B,
    /// Constrained: answer with a single letter.
    C,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::A, Condition::B, Condition::C];
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::A => "A",
            Condition::B => "B",
            Condition::C => "C",
        };
        f.write_str(s)
    }
}

pub const LR_HEADER: &str = "Here is an LSAT Logical Reasoning question. What is the answer?";
pub const RC_HEADER: &str =
    "Here is an LSAT Reading Comprehension passage and question. What is the answer?";

pub const STRUCTURED_LR_SYSTEM: &str = "You are a world-class LSAT instructor who has scored a perfect 180. You approach every Logical Reasoning question with the following method:
1. Identify the conclusion and premises of the argument.
2. Determine the reasoning pattern (e.g., causal, conditional, analogy).
3. Identify the gap, assumption, or flaw in the reasoning.
4. Eliminate each wrong answer choice with a specific reason.
5. Confirm your selected answer by verifying it directly addresses the question stem.

Think step by step. Be thorough and precise. After your analysis, clearly state your final answer as \"Answer: (X)\".";

pub const STRUCTURED_RC_SYSTEM: &str = "You are a world-class LSAT instructor who has scored a perfect 180. You approach every Reading Comprehension question with the following method:
1. Identify the main thesis, structure, and purpose of the passage.
2. Note the author's tone and attitude toward the subject matter.
3. Locate the specific lines or paragraphs relevant to the question.
4. Eliminate each wrong answer choice with a specific reason.
5. Confirm your selected answer by verifying it is directly supported by the passage text.

Think step by step. Be thorough and precise. After your analysis, clearly state your final answer as \"Answer: (X)\".";

pub const CONSTRAINED_SYSTEM: &str =
    "Respond with ONLY the letter of the correct answer (A, B, C, D, or E). Nothing else.";

/// Everything sent to a model for one question under one condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub condition: Condition,
    pub system_prompt: Option<String>,
    pub user_message: String,
    pub section: Section,
}

/// Renders the condition-independent user message.
pub fn user_message<Q: PresentedItem + ?Sized>(q: &Q) -> String {
    let header = match q.section() {
        Section::LR => LR_HEADER,
        Section::RC => RC_HEADER,
    };
    let choices = Letter::ALL
        .iter()
        .map(|&l| format!("({l}) {}", q.displayed_choice(l)))
        .collect::<Vec<_>>()
        .join("\n");
    format!("{header}\n\n{}\n\n{}\n\n{choices}", q.stimulus(), q.stem())
}

pub fn build_prompt<Q: PresentedItem + ?Sized>(q: &Q, condition: Condition) -> PromptBundle {
    let system_prompt = match (condition, q.section()) {
        (Condition::A, _) => None,
        (Condition::B, Section::LR) => Some(STRUCTURED_LR_SYSTEM.to_string()),
        (Condition::B, Section::RC) => Some(STRUCTURED_RC_SYSTEM.to_string()),
        (Condition::C, _) => Some(CONSTRAINED_SYSTEM.to_string()),
    };
    PromptBundle {
        condition,
        system_prompt,
        user_message: user_message(q),
        section: q.section(),
    }
}
