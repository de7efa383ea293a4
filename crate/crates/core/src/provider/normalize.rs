//! Maps each provider payload shape onto one (thinking, response) pair.

use serde_json::Value;

use super::{Mechanism, NormalizedResponse, ProviderError};

pub const THINK_OPEN: &str = "<think>";
pub const THINK_CLOSE: &str = "</think>";

/// Splits an output stream on inline think tags.
///
/// The trace runs from the first opening tag to the last closing tag; text on
/// either side is the response. An unterminated opening tag makes the whole
/// output thinking. A closing tag with no opening tag (chat templates that
/// pre-fill `<think>`) makes everything before it thinking.
pub fn split_think_tags(stream: &str) -> (String, String) {
    let open = stream.find(THINK_OPEN);
    let close = stream.rfind(THINK_CLOSE);
    match (open, close) {
        (Some(o), Some(c)) if o < c => {
            let thinking = &stream[o + THINK_OPEN.len()..c];
            let response = format!("{}{}", &stream[..o], &stream[c + THINK_CLOSE.len()..]);
            (thinking.to_string(), response)
        }
        (Some(o), _) => {
            let thinking = format!("{}{}", &stream[..o], &stream[o + THINK_OPEN.len()..]);
            (thinking, String::new())
        }
        (None, Some(c)) => (
            stream[..c].to_string(),
            stream[c + THINK_CLOSE.len()..].to_string(),
        ),
        (None, None) => (String::new(), stream.to_string()),
    }
}

fn malformed(mechanism: Mechanism, message: impl Into<String>) -> ProviderError {
    ProviderError::MalformedPayload {
        mechanism,
        message: message.into(),
    }
}

fn text_of(v: &Value, field: &str) -> Option<String> {
    v.get(field).and_then(Value::as_str).map(str::to_string)
}

pub fn normalize(
    raw: &Value,
    mechanism: Mechanism,
    thinking_disabled: bool,
) -> Result<NormalizedResponse, ProviderError> {
    let (thinking, response, usage) = match mechanism {
        Mechanism::DiscardedSummary => discarded_summary(raw)?,
        Mechanism::SignedThinkingBlock => signed_thinking_block(raw)?,
        Mechanism::ThoughtFlaggedParts => thought_flagged_parts(raw)?,
        Mechanism::ReasoningField => reasoning_field(raw)?,
        Mechanism::InlineThinkTags => inline_think_tags(raw)?,
    };
    Ok(NormalizedResponse {
        thinking,
        response,
        mechanism,
        thinking_disabled,
        usage,
    })
}

type Parts = (String, String, Value);

// {"output": [{"type": "reasoning", "summary": [{"text"}]}, {"type": "message", "content": [{"type": "output_text", "text"}]}]}
fn discarded_summary(raw: &Value) -> Result<Parts, ProviderError> {
    let m = Mechanism::DiscardedSummary;
    let output = raw
        .get("output")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(m, "missing `output` array"))?;
    let mut summaries = Vec::new();
    let mut response = String::new();
    let mut saw_message = false;
    for item in output {
        match item.get("type").and_then(Value::as_str) {
            Some("reasoning") => {
                if let Some(parts) = item.get("summary").and_then(Value::as_array) {
                    summaries.extend(parts.iter().filter_map(|p| text_of(p, "text")));
                }
            }
            Some("message") => {
                saw_message = true;
                let content = item
                    .get("content")
                    .and_then(Value::as_array)
                    .ok_or_else(|| malformed(m, "message item without `content`"))?;
                for part in content {
                    if part.get("type").and_then(Value::as_str) == Some("output_text") {
                        response.push_str(&text_of(part, "text").unwrap_or_default());
                    }
                }
            }
            _ => {}
        }
    }
    if !saw_message {
        return Err(malformed(m, "no `message` item in output"));
    }
    Ok((summaries.join("\n\n"), response, usage(raw, "usage")))
}

// {"content": [{"type": "thinking", "thinking", "signature"}, {"type": "text", "text"}]}
fn signed_thinking_block(raw: &Value) -> Result<Parts, ProviderError> {
    let m = Mechanism::SignedThinkingBlock;
    let content = raw
        .get("content")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(m, "missing `content` array"))?;
    let mut thinking = Vec::new();
    let mut response = String::new();
    for block in content {
        match block.get("type").and_then(Value::as_str) {
            Some("thinking") => thinking.extend(text_of(block, "thinking")),
            Some("text") => response.push_str(&text_of(block, "text").unwrap_or_default()),
            _ => {}
        }
    }
    Ok((thinking.join("\n\n"), response, usage(raw, "usage")))
}

// {"candidates": [{"content": {"parts": [{"text", "thought": true}, {"text"}]}}]}
fn thought_flagged_parts(raw: &Value) -> Result<Parts, ProviderError> {
    let m = Mechanism::ThoughtFlaggedParts;
    let parts = raw
        .pointer("/candidates/0/content/parts")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(m, "missing `candidates[0].content.parts`"))?;
    let mut thinking = Vec::new();
    let mut response = String::new();
    for part in parts {
        let Some(text) = text_of(part, "text") else {
            continue;
        };
        if part.get("thought").and_then(Value::as_bool) == Some(true) {
            thinking.push(text);
        } else {
            response.push_str(&text);
        }
    }
    Ok((thinking.join("\n\n"), response, usage(raw, "usageMetadata")))
}

fn chat_message(raw: &Value, m: Mechanism) -> Result<&Value, ProviderError> {
    raw.pointer("/choices/0/message")
        .filter(|v| v.is_object())
        .ok_or_else(|| malformed(m, "missing `choices[0].message`"))
}

// {"choices": [{"message": {"reasoning_content", "content"}}]}
fn reasoning_field(raw: &Value) -> Result<Parts, ProviderError> {
    let message = chat_message(raw, Mechanism::ReasoningField)?;
    let thinking = text_of(message, "reasoning_content")
        .or_else(|| text_of(message, "reasoning"))
        .unwrap_or_default();
    let response = text_of(message, "content").unwrap_or_default();
    Ok((thinking, response, usage(raw, "usage")))
}

// {"choices": [{"message": {"content": "<think>...</think>..."}}]}
fn inline_think_tags(raw: &Value) -> Result<Parts, ProviderError> {
    let m = Mechanism::InlineThinkTags;
    let message = chat_message(raw, m)?;
    let stream = text_of(message, "content").ok_or_else(|| malformed(m, "missing `content`"))?;
    let (thinking, response) = split_think_tags(&stream);
    Ok((thinking, response, usage(raw, "usage")))
}

fn usage(raw: &Value, field: &str) -> Value {
    raw.get(field).cloned().unwrap_or(Value::Null)
}
