use std::path::PathBuf;

use mcqeval_core::corpus::Letter;
use mcqeval_core::extraction::{extract_answer, Extraction};
use mcqeval_core::prompting::Condition;

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/responses")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

const FIXTURES: [(&str, Letter); 8] = [
    ("1_gpt5.md", Letter::A),
    ("2_claude_opus_4.md", Letter::A),
    ("3_gemini_2_5_pro.md", Letter::A),
    ("4_deepseek_r1.md", Letter::A),
    ("5_kimi_k2_thinking.md", Letter::A),
    ("6_qwq_32b.md", Letter::A),
    ("7_distill_qwen_7b.md", Letter::C),
    ("8_distill_llama_8b.md", Letter::D),
];

#[test]
fn full_responses_yield_reported_letters() {
    for (name, expected) in FIXTURES {
        assert_eq!(
            extract_answer(&fixture(name), Condition::A),
            Extraction::Letter(expected),
            "{name}"
        );
    }
}

#[test]
fn ambiguous_responses() {
    for text in [
        "Both (A) and (B) are plausible, and I cannot decide.",
        "",
        "   \n\n ",
        "I'm sorry, but I can't help with that.",
        "It is either (C) or (D).",
    ] {
        assert_eq!(
            extract_answer(text, Condition::A),
            Extraction::Ambiguous,
            "{text:?}"
        );
    }
}

#[test]
fn condition_c_fast_path() {
    for (text, letter) in [
        ("C", Letter::C),
        ("(B)", Letter::B),
        ("E.", Letter::E),
        (" D \n", Letter::D),
    ] {
        assert_eq!(
            extract_answer(text, Condition::C),
            Extraction::Letter(letter),
            "{text:?}"
        );
    }
}
