//! Synthetic provider payloads for building replay fixtures offline.

use serde_json::{json, Value};

use super::normalize::{THINK_CLOSE, THINK_OPEN};
use super::Mechanism;

/// Builds a raw payload in `mechanism`'s wire shape that normalizes back to
/// `(thinking, response)`. An empty `thinking` yields a payload with no trace.
pub fn synthetic_payload(mechanism: Mechanism, thinking: &str, response: &str) -> Value {
    let has_trace = !thinking.is_empty();
    match mechanism {
        Mechanism::DiscardedSummary => {
            let mut output = Vec::new();
            if has_trace {
                output.push(json!({"type": "reasoning", "summary": [{"type": "summary_text", "text": thinking}]}));
            }
            output.push(
                json!({"type": "message", "content": [{"type": "output_text", "text": response}]}),
            );
            json!({"output": output})
        }
        Mechanism::SignedThinkingBlock => {
            let mut content = Vec::new();
            if has_trace {
                content.push(
                    json!({"type": "thinking", "thinking": thinking, "signature": "synthetic"}),
                );
            }
            content.push(json!({"type": "text", "text": response}));
            json!({"content": content})
        }
        Mechanism::ThoughtFlaggedParts => {
            let mut parts = Vec::new();
            if has_trace {
                parts.push(json!({"text": thinking, "thought": true}));
            }
            parts.push(json!({"text": response}));
            json!({"candidates": [{"content": {"parts": parts}}]})
        }
        Mechanism::ReasoningField => {
            json!({"choices": [{"message": {"reasoning_content": thinking, "content": response}}]})
        }
        Mechanism::InlineThinkTags => {
            let stream = format!("{THINK_OPEN}{thinking}{THINK_CLOSE}{response}");
            json!({"choices": [{"message": {"content": stream}}]})
        }
    }
}
