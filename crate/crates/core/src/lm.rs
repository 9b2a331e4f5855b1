//! Language-model abstraction: generation as a sequence of steps, each
//! carrying the next-token distribution it was decoded from.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DistributionError, LmError, ScriptError};
use crate::http::{HttpConfig, JsonClient};

pub const DEFAULT_MAX_TOKENS: usize = 32;
pub const PROBABILITY_TOLERANCE: f64 = 1e-6;

/// Next-token distribution. Servers typically expose only the top-K entries,
/// so the truncated form carries the unlisted mass as one residual bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Full(Vec<(String, f64)>),
    Truncated {
        top: Vec<(String, f64)>,
        residual: f64,
    },
}

impl Distribution {
    pub fn listed(&self) -> &[(String, f64)] {
        match self {
            Distribution::Full(entries) => entries,
            Distribution::Truncated { top, .. } => top,
        }
    }

    pub fn residual(&self) -> Option<f64> {
        match self {
            Distribution::Full(_) => None,
            Distribution::Truncated { residual, .. } => Some(*residual),
        }
    }

    /// Every outcome's probability, the residual bucket included.
    pub fn masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.listed()
            .iter()
            .map(|(_, p)| *p)
            .chain(self.residual())
    }

    /// Number of outcomes, counting the residual bucket as one.
    pub fn support(&self) -> usize {
        self.listed().len() + usize::from(self.residual().is_some())
    }

    pub fn validate(&self) -> Result<(), DistributionError> {
        if self.listed().is_empty() {
            return Err(DistributionError::Empty);
        }
        for (token, p) in self.listed() {
            if !p.is_finite() || *p < 0.0 {
                return Err(DistributionError::BadProbability {
                    token: token.clone(),
                    p: *p,
                });
            }
        }
        if let Some(r) = self.residual() {
            if !r.is_finite() || r < 0.0 {
                return Err(DistributionError::BadProbability {
                    token: "<residual>".into(),
                    p: r,
                });
            }
        }
        let sum: f64 = self.masses().sum();
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(DistributionError::BadSum { sum });
        }
        Ok(())
    }

    pub fn probability(&self, token: &str) -> Option<f64> {
        self.listed()
            .iter()
            .find(|(t, _)| t == token)
            .map(|(_, p)| *p)
    }

    pub fn max_listed(&self) -> f64 {
        self.listed()
            .iter()
            .map(|(_, p)| *p)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when `token` is listed with the largest listed probability.
    pub fn is_argmax(&self, token: &str) -> bool {
        self.probability(token)
            .is_some_and(|p| p >= self.max_listed() - 1e-12)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenStep {
    pub token: String,
    pub distribution: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub max_tokens: usize,
    pub stop_sequences: Vec<String>,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, max_tokens: usize) -> Self {
        Self {
            prompt: prompt.into(),
            max_tokens,
            stop_sequences: Vec::new(),
        }
    }

    pub fn with_stop(mut self, stop: impl Into<String>) -> Self {
        self.stop_sequences.push(stop.into());
        self
    }

    pub fn validate(&self) -> Result<(), LmError> {
        if self.prompt.is_empty() {
            return Err(LmError::EmptyPrompt);
        }
        if self.max_tokens == 0 {
            return Err(LmError::ZeroMaxTokens);
        }
        Ok(())
    }
}

/// Greedy autoregressive generator. Implementations are shared between
/// threads during evaluation.
pub trait LanguageModel: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<TokenStep>, LmError>;
}

/// Keeps steps up to and including the first one whose token completes a
/// stop sequence, capped at `max_tokens`.
pub fn truncate_steps(mut steps: Vec<TokenStep>, request: &GenerationRequest) -> Vec<TokenStep> {
    steps.truncate(request.max_tokens);
    if request.stop_sequences.is_empty() {
        return steps;
    }
    let mut text = String::new();
    for (i, step) in steps.iter().enumerate() {
        text.push_str(&step.token);
        if request
            .stop_sequences
            .iter()
            .any(|s| !s.is_empty() && text.contains(s.as_str()))
        {
            steps.truncate(i + 1);
            break;
        }
    }
    steps
}

pub fn generated_text(steps: &[TokenStep]) -> String {
    steps.iter().map(|s| s.token.as_str()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Pattern {
    One(String),
    /// Every listed substring must occur in the prompt.
    All(Vec<String>),
}

impl Pattern {
    pub fn matches(&self, prompt: &str) -> bool {
        match self {
            Pattern::One(p) => prompt.contains(p.as_str()),
            Pattern::All(ps) => ps.iter().all(|p| prompt.contains(p.as_str())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedStep {
    pub token: String,
    pub probs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub pattern: Pattern,
    pub steps: Vec<ScriptedStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefaultRule {
    pub steps: Vec<ScriptedStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    pub rules: Vec<ScriptRule>,
    pub default: DefaultRule,
}

fn scripted_to_steps(steps: &[ScriptedStep], rule: &str) -> Result<Vec<TokenStep>, ScriptError> {
    steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let distribution =
                Distribution::Full(s.probs.iter().map(|(t, p)| (t.clone(), *p)).collect());
            let fail = |message: String| ScriptError::Rule {
                rule: rule.to_string(),
                message: format!("step {i}: {message}"),
            };
            distribution.validate().map_err(|e| fail(e.to_string()))?;
            if !distribution.is_argmax(&s.token) {
                return Err(fail(
                    DistributionError::NotArgmax {
                        token: s.token.clone(),
                    }
                    .to_string(),
                ));
            }
            Ok(TokenStep {
                token: s.token.clone(),
                distribution,
            })
        })
        .collect()
}

/// Deterministic model that answers from a script: the first rule whose
/// pattern occurs in the prompt supplies the steps, else the default rule.
#[derive(Debug, Clone)]
pub struct MockModel {
    rules: Vec<(Pattern, Vec<TokenStep>)>,
    default: Vec<TokenStep>,
}

impl MockModel {
    pub fn from_script(script: MockScript) -> Result<Self, ScriptError> {
        let rules = script
            .rules
            .iter()
            .enumerate()
            .map(|(i, r)| Ok((r.pattern.clone(), scripted_to_steps(&r.steps, &i.to_string())?)))
            .collect::<Result<Vec<_>, ScriptError>>()?;
        let default = scripted_to_steps(&script.default.steps, "default")?;
        Ok(Self { rules, default })
    }

    pub fn from_json(json: &str) -> Result<Self, ScriptError> {
        let script: MockScript =
            serde_json::from_str(json).map_err(|e| ScriptError::Parse(e.to_string()))?;
        Self::from_script(script)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ScriptError> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|source| ScriptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&json)
    }

    fn steps_for(&self, prompt: &str) -> &[TokenStep] {
        self.rules
            .iter()
            .find(|(pattern, _)| pattern.matches(prompt))
            .map(|(_, steps)| steps.as_slice())
            .unwrap_or(&self.default)
    }
}

impl LanguageModel for MockModel {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<TokenStep>, LmError> {
        request.validate()?;
        Ok(truncate_steps(
            self.steps_for(&request.prompt).to_vec(),
            request,
        ))
    }
}

#[derive(Serialize)]
struct InferenceRequest<'a> {
    prompt: &'a str,
    max_tokens: usize,
    logprobs: usize,
}

#[derive(Deserialize)]
struct LogprobEntry {
    token: String,
    logprob: f64,
}

#[derive(Deserialize)]
struct InferenceResponse {
    tokens: Vec<String>,
    top_logprobs: Vec<Vec<LogprobEntry>>,
}

/// Client for an inference server speaking
/// `POST {"prompt", "max_tokens", "logprobs": K}` →
/// `{"tokens": [...], "top_logprobs": [[{token, logprob}, ...], ...]}`.
///
/// Produces truncated distributions; entropy computed from them is a lower
/// bound on the full-vocabulary entropy. The server must decode greedily.
pub struct HttpModel {
    client: JsonClient,
    top_k: usize,
}

impl HttpModel {
    pub const DEFAULT_TOP_LOGPROBS: usize = 20;

    pub fn new(config: HttpConfig) -> Result<Self, LmError> {
        Ok(Self {
            client: JsonClient::new(config)?,
            top_k: Self::DEFAULT_TOP_LOGPROBS,
        })
    }

    pub fn with_top_logprobs(mut self, k: usize) -> Self {
        self.top_k = k.max(1);
        self
    }
}

/// Converts one step's top log-probabilities into a truncated distribution.
pub fn distribution_from_logprobs(entries: &[(String, f64)]) -> Result<Distribution, DistributionError> {
    if entries.is_empty() {
        return Err(DistributionError::Empty);
    }
    let mut top: Vec<(String, f64)> = Vec::with_capacity(entries.len());
    for (token, logprob) in entries {
        if logprob.is_nan() || *logprob > 1e-9 {
            return Err(DistributionError::BadProbability {
                token: token.clone(),
                p: logprob.exp(),
            });
        }
        top.push((token.clone(), logprob.exp()));
    }
    let listed: f64 = top.iter().map(|(_, p)| p).sum();
    let residual = if listed > 1.0 {
        // server-side rounding can push the listed mass slightly above 1
        if listed - 1.0 > 1e-3 {
            return Err(DistributionError::BadSum { sum: listed });
        }
        for (_, p) in &mut top {
            *p /= listed;
        }
        0.0
    } else {
        1.0 - listed
    };
    let dist = Distribution::Truncated { top, residual };
    dist.validate()?;
    Ok(dist)
}

impl LanguageModel for HttpModel {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<TokenStep>, LmError> {
        request.validate()?;
        let response: InferenceResponse = self.client.post(&InferenceRequest {
            prompt: &request.prompt,
            max_tokens: request.max_tokens,
            logprobs: self.top_k,
        })?;
        if response.tokens.len() != response.top_logprobs.len() {
            return Err(LmError::Protocol(format!(
                "{} tokens but {} logprob lists",
                response.tokens.len(),
                response.top_logprobs.len()
            )));
        }
        let mut steps = Vec::with_capacity(response.tokens.len());
        for (step, (token, entries)) in response
            .tokens
            .into_iter()
            .zip(response.top_logprobs)
            .enumerate()
        {
            let pairs: Vec<(String, f64)> =
                entries.into_iter().map(|e| (e.token, e.logprob)).collect();
            let distribution = distribution_from_logprobs(&pairs)
                .map_err(|source| LmError::Distribution { step, source })?;
            let p = distribution.probability(&token).ok_or_else(|| {
                LmError::Protocol(format!("step {step}: token {token:?} missing from top logprobs"))
            })?;
            if p < distribution.max_listed() * (1.0 - 1e-4) {
                return Err(LmError::Distribution {
                    step,
                    source: DistributionError::NotArgmax { token },
                });
            }
            steps.push(TokenStep {
                token,
                distribution,
            });
        }
        Ok(truncate_steps(steps, request))
    }
}
