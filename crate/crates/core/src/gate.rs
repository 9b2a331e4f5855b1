//! Entropy-based retrieval gate.
//!
//! Entropies are in nats. The gate fires when the mean entropy over the first
//! `n` generated tokens is strictly greater than the threshold.

use serde::{Deserialize, Serialize};

use crate::error::{DistributionError, GateError};
use crate::lm::{Distribution, TokenStep};

pub const DEFAULT_WINDOW: usize = 10;

/// Shannon entropy `-Σ p ln p`. Zero-probability outcomes contribute nothing;
/// a truncated distribution's residual mass counts as one outcome.
pub fn distribution_entropy(distribution: &Distribution) -> Result<f64, DistributionError> {
    distribution.validate()?;
    let h: f64 = distribution
        .masses()
        .filter(|p| *p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok(h.max(0.0))
}

pub fn step_entropy(step: &TokenStep) -> Result<f64, DistributionError> {
    distribution_entropy(&step.distribution)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrace {
    pub per_step: Vec<f64>,
    /// Mean of the first `n_used` per-step values. Infinite when no step was
    /// generated, so an empty first pass always counts as uncertain.
    pub mean_first_n: f64,
    pub n_used: usize,
}

impl EntropyTrace {
    pub fn from_entropies(per_step: Vec<f64>, n: usize) -> Result<Self, GateError> {
        if n == 0 {
            return Err(GateError::ZeroWindow);
        }
        let n_used = n.min(per_step.len());
        let mean_first_n = if n_used == 0 {
            f64::INFINITY
        } else {
            per_step[..n_used].iter().sum::<f64>() / n_used as f64
        };
        Ok(Self {
            per_step,
            mean_first_n,
            n_used,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.n_used == 0
    }
}

pub fn step_entropies(steps: &[TokenStep]) -> Result<Vec<f64>, GateError> {
    steps
        .iter()
        .enumerate()
        .map(|(step, s)| step_entropy(s).map_err(|source| GateError::Distribution { step, source }))
        .collect()
}

pub fn mean_entropy(steps: &[TokenStep], n: usize) -> Result<EntropyTrace, GateError> {
    if n == 0 {
        return Err(GateError::ZeroWindow);
    }
    EntropyTrace::from_entropies(step_entropies(steps)?, n)
}

/// How the first pass is turned into a trigger decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateRule {
    /// Mean entropy over the first `n` tokens compared against the threshold.
    #[default]
    MeanFirstN,
    /// Halt the first pass at the first token whose own entropy exceeds the
    /// threshold.
    StreamingHalt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub triggered: bool,
    pub threshold: f64,
    pub mean_entropy: f64,
    /// Set under [`GateRule::StreamingHalt`]: the step at which generation
    /// halted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halted_at: Option<usize>,
}

/// Strict comparison: a mean exactly at the threshold does not trigger.
pub fn decide(trace: &EntropyTrace, threshold: f64) -> GateDecision {
    GateDecision {
        triggered: trace.mean_first_n > threshold,
        threshold,
        mean_entropy: trace.mean_first_n,
        halted_at: None,
    }
}

/// Streaming variant: triggers at the first step whose entropy exceeds the
/// threshold, or when nothing was generated.
pub fn decide_streaming(trace: &EntropyTrace, threshold: f64) -> GateDecision {
    let halted_at = trace.per_step.iter().position(|h| *h > threshold);
    GateDecision {
        triggered: halted_at.is_some() || trace.mean_first_n > threshold,
        threshold,
        mean_entropy: trace.mean_first_n,
        halted_at,
    }
}
