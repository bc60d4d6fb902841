//! Prompt assembly, chat-endpoint access, and the end-to-end generation
//! loop: prompt → completion → JSON extraction → CIM parse → compile.
//!
//! Malformed completions are retried with a corrective follow-up message,
//! bounded by the configured retry budget. Compile diagnostics never
//! trigger retries; they are findings, not transport problems.

use crate::cim::{self, parse_cim, ConceptualInstanceModel, CIM_TEMPLATE};
use crate::compile::{compile, CompileReport};
use crate::ecore::MetaModel;
use crate::plantuml::render_plantuml;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    TransportError(String),
    #[error("endpoint returned HTTP {status}: {excerpt}")]
    HttpStatusError { status: u16, excerpt: String },
    #[error("completion contained no assistant text")]
    EmptyCompletion,
    #[error("request timed out after {0}s")]
    Timeout(u64),
}

/// Anything that can answer a chat transcript with one assistant message.
pub trait ChatEndpoint {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError>;
}

/// Connection settings for a chat-completions endpoint. The API key is
/// looked up from the environment variable named here, never stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LlmConfig {
    pub endpoint_base_url: String,
    pub model_name: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default)]
    pub api_key_env_var: String,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout_seconds")]
    pub timeout_seconds: u64,
    #[serde(default)]
    pub omit_temperature: bool,
}

fn default_max_output_tokens() -> u32 {
    4096
}
fn default_max_retries() -> u32 {
    1
}
fn default_timeout_seconds() -> u64 {
    60
}

/// HTTP client for the chat-completions wire format (messages array in,
/// `choices[0].message.content` out).
pub struct HttpEndpoint {
    config: LlmConfig,
    client: reqwest::blocking::Client,
}

impl HttpEndpoint {
    pub fn new(config: &LlmConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_seconds))
            .build()
            .map_err(|e| LlmError::TransportError(e.to_string()))?;
        Ok(HttpEndpoint {
            config: config.clone(),
            client,
        })
    }

    fn url(&self) -> String {
        let base = self.config.endpoint_base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

impl ChatEndpoint for HttpEndpoint {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let mut body = serde_json::json!({
            "model": self.config.model_name,
            "messages": messages,
            "max_tokens": self.config.max_output_tokens,
        });
        if !self.config.omit_temperature {
            body["temperature"] = serde_json::json!(self.config.temperature);
        }

        let mut request = self.client.post(self.url()).json(&body);
        if !self.config.api_key_env_var.is_empty() {
            if let Ok(key) = std::env::var(&self.config.api_key_env_var) {
                if !key.is_empty() {
                    request = request.bearer_auth(key);
                }
            }
        }

        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout(self.config.timeout_seconds)
            } else {
                LlmError::TransportError(e.to_string())
            }
        })?;

        let status = response.status();
        if !status.is_success() {
            let text = response.text().unwrap_or_default();
            let excerpt: String = text.chars().take(300).collect();
            return Err(LlmError::HttpStatusError {
                status: status.as_u16(),
                excerpt,
            });
        }

        let payload: serde_json::Value = response
            .json()
            .map_err(|e| LlmError::TransportError(format!("invalid response body: {e}")))?;
        let content = payload["choices"][0]["message"]["content"]
            .as_str()
            .unwrap_or_default();
        if content.is_empty() {
            return Err(LlmError::EmptyCompletion);
        }
        Ok(content.to_string())
    }
}

/// Deterministic endpoint for tests and mock benchmark runs: answers a
/// fixed queue of responses and records every transcript it was shown.
pub struct ScriptedEndpoint {
    responses: Mutex<VecDeque<String>>,
    requests: Mutex<Vec<Vec<ChatMessage>>>,
}

impl ScriptedEndpoint {
    pub fn new(responses: impl IntoIterator<Item = String>) -> Self {
        ScriptedEndpoint {
            responses: Mutex::new(responses.into_iter().collect()),
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<Vec<ChatMessage>> {
        self.requests.lock().unwrap().clone()
    }
}

impl ChatEndpoint for ScriptedEndpoint {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError> {
        self.requests.lock().unwrap().push(messages.to_vec());
        self.responses
            .lock()
            .unwrap()
            .pop_front()
            .ok_or_else(|| LlmError::TransportError("scripted endpoint exhausted".into()))
    }
}

/// One worked example for the prompt: diagram text, scenario, and the
/// expected conceptual instance model.
#[derive(Debug, Clone)]
pub struct FewShotExample {
    pub metamodel_text: String,
    pub spec_text: String,
    pub cim_text: String,
}

#[derive(Debug, thiserror::Error)]
#[error("few-shot example CIM is not clean: {0}")]
pub struct InvalidExample(String);

impl FewShotExample {
    /// Accepts the example only when its CIM text parses without error
    /// diagnostics; a broken example would teach the model the wrong
    /// shape.
    pub fn new(
        metamodel_text: impl Into<String>,
        spec_text: impl Into<String>,
        cim_text: impl Into<String>,
    ) -> Result<Self, InvalidExample> {
        let cim_text = cim_text.into();
        let (_, diags) = parse_cim(&cim_text).map_err(|e| InvalidExample(e.to_string()))?;
        if let Some(err) = diags.iter().find(|d| d.is_error()) {
            return Err(InvalidExample(err.to_string()));
        }
        Ok(FewShotExample {
            metamodel_text: metamodel_text.into(),
            spec_text: spec_text.into(),
            cim_text,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
}

const TASK_DESCRIPTION: &str = "You are given a meta-model, which defines ONLY the allowed classes, attributes, and associations. Additionally, you are provided with a scenario description, which explicitly specifies the valid instances and relationships. Your task is to generate a Conceptual Instance Model by structuring the information from the scenario description strictly according to the provided meta-model and Json template.";

const STRICT_RULES: &str = "### STRICT RULES
- DO NOT infer missing details.
- ONLY include what is explicitly provided in the scenario.
- ONLY include what is explicitly provided in the meta model.
- DO NOT create objects from abstract class.";

/// Assembles the system and user messages. The system message holds the
/// task statement, rules, template, and few-shot examples; the user
/// message holds the actual metamodel and scenario.
pub fn build_prompt(
    metamodel_puml: &str,
    spec: &str,
    examples: &[FewShotExample],
    template: &str,
) -> PromptBundle {
    let mut system_text = format!(
        "{TASK_DESCRIPTION}\n\n{STRICT_RULES}\n\n### Output Json Format - Conceptual Instance Model (STRICT TEMPLATE)\n{template}\n"
    );
    if !examples.is_empty() {
        system_text.push_str(
            "\n### Few-shot Examples\nYou are provided with the following few-shot examples to help you understand the task.\n",
        );
        for ex in examples {
            system_text.push_str(&format!(
                "\n#### Example\nMeta-model information:\n{}\n\nScenario description:\n{}\n\nGenerated Conceptual Instance Model:\n{}\n",
                ex.metamodel_text, ex.spec_text, ex.cim_text
            ));
        }
    }

    let user_text = format!(
        "#### Please generate the Conceptual Instance Model follow the template\nMeta-model information:\n{metamodel_puml}\n\nScenario description:\n{spec}\n\nGenerated Conceptual Instance Model:\n"
    );

    PromptBundle {
        system_text,
        user_text,
    }
}

/// Everything one generation run produced, kept for auditing: the exact
/// prompt, every raw response, and the compile outcome if any response
/// parsed.
#[derive(Debug)]
pub struct GenerationTrace {
    pub prompt_bundle: PromptBundle,
    pub raw_responses: Vec<String>,
    pub attempts: u32,
    pub final_cim: Option<ConceptualInstanceModel>,
    pub report: Option<CompileReport>,
}

impl GenerationTrace {
    /// JSON view for the trace artifact file.
    pub fn to_json(&self) -> serde_json::Value {
        let report = self.report.as_ref().map(|r| {
            serde_json::json!({
                "elementCounts": r.counts,
                "diagnostics": r.diagnostics,
            })
        });
        serde_json::json!({
            "prompt": self.prompt_bundle,
            "rawResponses": self.raw_responses,
            "attempts": self.attempts,
            "finalCim": self.final_cim.as_ref().map(cim::to_json),
            "report": report,
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("generation failed after {attempts} attempt(s): {reason}")]
pub struct GenerationFailed {
    pub attempts: u32,
    pub reason: String,
    pub trace: Box<GenerationTrace>,
}

/// Runs the full pipeline against the given endpoint. Extraction and
/// parse failures are retried with a corrective user message; endpoint
/// errors are retried as-is; each call consumes one attempt.
pub fn generate_with_endpoint(
    m: &MetaModel,
    spec: &str,
    examples: &[FewShotExample],
    config: &LlmConfig,
    endpoint: &dyn ChatEndpoint,
) -> Result<GenerationTrace, GenerationFailed> {
    let puml = render_plantuml(m);
    let bundle = build_prompt(&puml.text, spec, examples, CIM_TEMPLATE);

    let mut messages = vec![
        ChatMessage::system(&bundle.system_text),
        ChatMessage::user(&bundle.user_text),
    ];
    let mut trace = GenerationTrace {
        prompt_bundle: bundle,
        raw_responses: Vec::new(),
        attempts: 0,
        final_cim: None,
        report: None,
    };

    let max_attempts = config.max_retries + 1;
    let mut last_reason = String::new();
    while trace.attempts < max_attempts {
        trace.attempts += 1;
        let raw = match endpoint.complete(&messages) {
            Ok(raw) => raw,
            Err(e) => {
                last_reason = e.to_string();
                continue;
            }
        };
        trace.raw_responses.push(raw.clone());

        let parsed = extract_and_parse(&raw);
        match parsed {
            Ok(cim) => {
                let report = compile(m, &cim);
                trace.final_cim = Some(cim);
                trace.report = Some(report);
                return Ok(trace);
            }
            Err(reason) => {
                last_reason = reason.clone();
                messages.push(ChatMessage::assistant(raw));
                messages.push(ChatMessage::user(format!(
                    "Your previous output was not a single valid JSON object conforming to the template. Error: {reason}. Output only the JSON object."
                )));
            }
        }
    }

    Err(GenerationFailed {
        attempts: trace.attempts,
        reason: last_reason,
        trace: Box::new(trace),
    })
}

fn extract_and_parse(raw: &str) -> Result<ConceptualInstanceModel, String> {
    let payload = crate::cim::extract_json_payload(raw).map_err(|e| e.to_string())?;
    let (cim, _diags) = parse_cim(&payload).map_err(|e| e.to_string())?;
    Ok(cim)
}

/// Convenience wrapper that speaks to the configured HTTP endpoint.
pub fn generate_instance_model(
    m: &MetaModel,
    spec: &str,
    examples: &[FewShotExample],
    config: &LlmConfig,
) -> Result<GenerationTrace, GenerationFailed> {
    let endpoint = HttpEndpoint::new(config).map_err(|e| GenerationFailed {
        attempts: 0,
        reason: e.to_string(),
        trace: Box::new(GenerationTrace {
            prompt_bundle: PromptBundle {
                system_text: String::new(),
                user_text: String::new(),
            },
            raw_responses: Vec::new(),
            attempts: 0,
            final_cim: None,
            report: None,
        }),
    })?;
    generate_with_endpoint(m, spec, examples, config, &endpoint)
}
