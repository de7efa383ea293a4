//! Outbound request bodies and headers for each provider family.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{Mechanism, ModelSpec, ThinkToggle, ThinkingMode};
use crate::prompting::PromptBundle;

const ANTHROPIC_VERSION: &str = "2023-06-01";

/// Where the API key goes for a given provider family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthStyle {
    Bearer,
    XApiKey,
    GoogApiKey,
}

/// A fully resolved request, minus the credential value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub auth: AuthStyle,
    pub api_key_env: Option<String>,
    pub body: Value,
}

pub fn build_request(
    spec: &ModelSpec,
    bundle: &PromptBundle,
    thinking: ThinkingMode,
) -> WireRequest {
    let model = spec.remote_model.as_deref().unwrap_or(&spec.model_id);
    let s = &spec.sampling;
    let system = bundle.system_prompt.as_deref();
    let user = bundle.user_message.as_str();
    let mut headers = vec![("content-type".to_string(), "application/json".to_string())];
    let (auth, mut body) = match spec.mechanism {
        Mechanism::DiscardedSummary => {
            let mut body = json!({
                "model": model,
                "input": [{"role": "user", "content": user}],
                "max_output_tokens": s.max_tokens,
                "temperature": s.temperature,
            });
            if let Some(system) = system {
                body["instructions"] = json!(system);
            }
            body["reasoning"] = match (thinking, spec.think_toggle) {
                (ThinkingMode::Off, Some(ThinkToggle::EffortParam)) => json!({"effort": "none"}),
                _ => json!({"summary": "auto"}),
            };
            (AuthStyle::Bearer, body)
        }
        Mechanism::SignedThinkingBlock => {
            headers.push(("anthropic-version".into(), ANTHROPIC_VERSION.into()));
            let mut body = json!({
                "model": model,
                "max_tokens": s.max_tokens,
                "messages": [{"role": "user", "content": user}],
            });
            if let Some(system) = system {
                body["system"] = json!(system);
            }
            match (thinking, spec.think_toggle) {
                (ThinkingMode::Off, Some(ThinkToggle::ThinkingTypeParam)) => {
                    body["thinking"] = json!({"type": "disabled"});
                    body["temperature"] = json!(s.temperature);
                }
                _ => {
                    // extended thinking only accepts the default temperature
                    let budget = spec.thinking_budget.unwrap_or(s.max_tokens / 2);
                    body["thinking"] = json!({"type": "enabled", "budget_tokens": budget});
                }
            }
            (AuthStyle::XApiKey, body)
        }
        Mechanism::ThoughtFlaggedParts => {
            let mut body = json!({
                "contents": [{"role": "user", "parts": [{"text": user}]}],
                "generationConfig": {
                    "temperature": s.temperature,
                    "maxOutputTokens": s.max_tokens,
                    "thinkingConfig": {"includeThoughts": true},
                },
            });
            if let Some(system) = system {
                body["systemInstruction"] = json!({"parts": [{"text": system}]});
            }
            (AuthStyle::GoogApiKey, body)
        }
        Mechanism::ReasoningField | Mechanism::InlineThinkTags => {
            let mut messages = Vec::new();
            if let Some(system) = system {
                messages.push(json!({"role": "system", "content": system}));
            }
            messages.push(json!({"role": "user", "content": user}));
            let body = json!({
                "model": model,
                "messages": messages,
                "temperature": s.temperature,
                "max_tokens": s.max_tokens,
            });
            (AuthStyle::Bearer, body)
        }
    };
    if let Some(Value::Object(extra)) = &spec.request_extra {
        merge(&mut body, extra);
    }
    WireRequest {
        url: spec.endpoint.clone(),
        headers,
        auth,
        api_key_env: spec.api_key_env.clone(),
        body,
    }
}

fn merge(body: &mut Value, extra: &Map<String, Value>) {
    let Value::Object(target) = body else {
        return;
    };
    for (k, v) in extra {
        match (target.get_mut(k), v) {
            (Some(existing @ Value::Object(_)), Value::Object(inner)) => merge(existing, inner),
            _ => {
                target.insert(k.clone(), v.clone());
            }
        }
    }
}
