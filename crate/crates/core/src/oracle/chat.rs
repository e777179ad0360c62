//! Oracle backed by a chat-completions HTTP endpoint.
//!
//! Each path step is one dialogue turn: the attack-turn template is filled
//! with the strategy label and the cue extracted from the previous turn, the
//! endpoint's reply is scored by a judge call against the rubric template,
//! and the score is discretized into the five fitness bands. Judge and
//! extraction calls ride along for free; only target-model turns are charged
//! against the budget, which is what the per-attack query metric counts.
//!
//! Transient failures are retried with exponential backoff; a turn that
//! still fails afterwards keeps its budget charge, because the query was
//! spent whether or not an answer came back.

use std::collections::HashMap;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::graph::{Path, StrategySet};

use super::{
    discretize, Cue, FitnessLevel, FitnessRecord, Oracle, OracleBudget, OracleError, DEFAULT_CUTS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub backoff_factor: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay_ms: 1_000,
            backoff_factor: 2,
        }
    }
}

/// The three plain-text prompt templates. `{placeholder}` tokens are
/// substituted verbatim; the shipped files contain only neutral wording.
#[derive(Debug, Clone)]
pub struct PromptTemplates {
    pub attack_turn: String,
    pub extract_cue: String,
    pub judge: String,
}

impl PromptTemplates {
    /// Loads `attack_turn.txt`, `extract_cue.txt` and `judge.txt` from a
    /// directory.
    pub fn load_dir(dir: impl AsRef<std::path::Path>) -> Result<Self, OracleError> {
        let dir = dir.as_ref();
        Ok(Self {
            attack_turn: std::fs::read_to_string(dir.join("attack_turn.txt"))?,
            extract_cue: std::fs::read_to_string(dir.join("extract_cue.txt"))?,
            judge: std::fs::read_to_string(dir.join("judge.txt"))?,
        })
    }
}

fn fill(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in pairs {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatEndpointConfig {
    pub url: String,
    pub model: String,
    /// Literal token, if configured directly.
    pub auth_token: Option<String>,
    /// Name of an environment variable supplying the token.
    pub auth_token_env: Option<String>,
    pub temperature: f64,
    /// Judge-score cut-points for discretization.
    pub judge_cuts: [f64; 4],
    /// Bound on in-flight requests.
    pub max_parallel: usize,
    pub retry: RetryPolicy,
}

impl ChatEndpointConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            auth_token: None,
            auth_token_env: None,
            temperature: 0.7,
            judge_cuts: DEFAULT_CUTS,
            max_parallel: 4,
            retry: RetryPolicy::default(),
        }
    }

    fn resolve_token(&self) -> Option<String> {
        if self.auth_token.is_some() {
            return self.auth_token.clone();
        }
        self.auth_token_env
            .as_ref()
            .and_then(|name| std::env::var(name).ok())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChatMessage {
    role: String,
    content: String,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessageOwned,
}

#[derive(Deserialize)]
struct ChatMessageOwned {
    content: String,
}

/// Counting slot gate for the in-flight request bound.
struct Gate {
    slots: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn new(limit: usize) -> Self {
        Self {
            slots: Mutex::new(limit.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut slots = self.slots.lock().unwrap();
        while *slots == 0 {
            slots = self.freed.wait(slots).unwrap();
        }
        *slots -= 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.gate.slots.lock().unwrap() += 1;
        self.gate.freed.notify_one();
    }
}

pub struct ChatOracle {
    config: ChatEndpointConfig,
    templates: PromptTemplates,
    strategy_set: StrategySet,
    /// The behavior under test; substituted into the turn templates.
    goal: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
    /// Dialogue transcripts keyed by evaluated path prefix, so a later
    /// evaluation can resume after its cached turns.
    transcripts: Mutex<HashMap<Vec<u32>, Vec<ChatMessage>>>,
    gate: Gate,
}

impl ChatOracle {
    pub fn new(
        config: ChatEndpointConfig,
        templates: PromptTemplates,
        strategy_set: StrategySet,
        goal: impl Into<String>,
    ) -> Result<Self, OracleError> {
        let token = config.resolve_token();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| OracleError::Unavailable(e.to_string()))?;
        Ok(Self {
            gate: Gate::new(config.max_parallel),
            config,
            templates,
            strategy_set,
            goal: goal.into(),
            token,
            client,
            transcripts: Mutex::new(HashMap::new()),
        })
    }

    fn post_with_retries(&self, messages: &[ChatMessage]) -> Result<String, OracleError> {
        let _slot = self.gate.acquire();
        let body = ChatRequest {
            model: &self.config.model,
            messages,
            temperature: self.config.temperature,
        };
        let mut last_error = String::new();
        for attempt in 0..=self.config.retry.max_retries {
            if attempt > 0 {
                let delay = self.config.retry.base_delay_ms
                    * u64::from(self.config.retry.backoff_factor).pow(attempt - 1);
                std::thread::sleep(Duration::from_millis(delay));
            }
            let mut request = self.client.post(&self.config.url).json(&body);
            if let Some(token) = &self.token {
                request = request.bearer_auth(token);
            }
            match request.send() {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let parsed: ChatResponse = response
                            .json()
                            .map_err(|e| OracleError::Unavailable(format!("bad body: {e}")))?;
                        return parsed
                            .choices
                            .into_iter()
                            .next()
                            .map(|c| c.message.content)
                            .ok_or_else(|| OracleError::Unavailable("no choices".into()));
                    }
                    let retryable = status.as_u16() == 429 || status.is_server_error();
                    last_error = format!("status {status}");
                    if !retryable {
                        return Err(OracleError::Unavailable(last_error));
                    }
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(OracleError::Unavailable(last_error))
    }

    fn judge_score(&self, reply: &str) -> Result<f64, OracleError> {
        let prompt = fill(&self.templates.judge, &[("goal", self.goal.as_str()), ("response", reply)]);
        let messages = [ChatMessage {
            role: "user".into(),
            content: prompt,
        }];
        let verdict = self.post_with_retries(&messages)?;
        parse_score(&verdict)
            .ok_or_else(|| OracleError::Unavailable(format!("unparseable judge reply: {verdict}")))
    }

    fn extraction_cue(&self, reply: &str) -> Result<Cue, OracleError> {
        let prompt = fill(&self.templates.extract_cue, &[("response", reply)]);
        let messages = [ChatMessage {
            role: "user".into(),
            content: prompt,
        }];
        Ok(Cue(self.post_with_retries(&messages)?.trim().to_string()))
    }
}

/// First numeric token in [0,1] found in the judge's reply.
fn parse_score(text: &str) -> Option<f64> {
    text.split(|c: char| !(c.is_ascii_digit() || c == '.'))
        .filter(|t| !t.is_empty())
        .filter_map(|t| t.parse::<f64>().ok())
        .find(|v| (0.0..=1.0).contains(v))
}

impl Oracle for ChatOracle {
    /// Five response bands over progress levels 0..=4.
    fn threshold(&self) -> u32 {
        4
    }

    fn evaluate(
        &self,
        path: &Path,
        cached_turns: usize,
        cue: Option<&Cue>,
        budget: &OracleBudget,
    ) -> Result<FitnessRecord, OracleError> {
        if path.is_empty() {
            return Err(OracleError::EmptyPath);
        }
        let steps = path.steps();
        for &step in steps {
            if !self.strategy_set.contains(step) {
                return Err(crate::graph::GraphError::UnknownStrategy(step).into());
            }
        }

        // Resume from the longest transcript we actually hold; the caller's
        // cached_turns is an upper bound on what can be reused.
        let mut resume = cached_turns.min(steps.len());
        let mut transcript: Vec<ChatMessage> = loop {
            if resume == 0 {
                break Vec::new();
            }
            if let Some(t) = self.transcripts.lock().unwrap().get(&steps[..resume].to_vec()) {
                break t.clone();
            }
            resume -= 1;
        };

        let mut charged = 0u64;
        let mut current_cue: Option<Cue> = cue.cloned();
        let mut last_level = FitnessLevel::SAFE;
        let mut last_score = None;

        for t in resume + 1..=steps.len() {
            if budget.charge_up_to(1) == 0 {
                return Err(OracleError::BudgetExhausted { charged });
            }
            charged += 1;

            let strategy = self
                .strategy_set
                .get(steps[t - 1])
                .expect("index checked above");
            let turn_label = t.to_string();
            let prompt = fill(
                &self.templates.attack_turn,
                &[
                    ("goal", self.goal.as_str()),
                    ("strategy", strategy.label.as_str()),
                    ("category", strategy.category.as_str()),
                    ("cue", current_cue.as_ref().map(|c| c.0.as_str()).unwrap_or("")),
                    ("turn", turn_label.as_str()),
                ],
            );
            transcript.push(ChatMessage {
                role: "user".into(),
                content: prompt,
            });
            let reply = self.post_with_retries(&transcript)?;
            transcript.push(ChatMessage {
                role: "assistant".into(),
                content: reply.clone(),
            });
            self.transcripts
                .lock()
                .unwrap()
                .insert(steps[..t].to_vec(), transcript.clone());

            let score = self.judge_score(&reply)?;
            let level = discretize(score, &self.config.judge_cuts)?;
            last_level = level;
            last_score = Some(score);
            if level.is_target() {
                return FitnessRecord::new(level, None, charged, last_score);
            }
            current_cue = if level.carries_cue() {
                Some(self.extraction_cue(&reply)?)
            } else {
                None
            };
        }

        let cue = if last_level.carries_cue() {
            current_cue
        } else {
            None
        };
        FitnessRecord::new(last_level, cue, charged, last_score)
    }
}
