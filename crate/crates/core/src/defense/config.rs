use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{is_absent, RateTrace};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefenseMethod {
    Identity,
    Pti,
    Rtp,
    Htr,
    Plugin(String),
}

impl DefenseMethod {
    pub fn name(&self) -> &str {
        match self {
            DefenseMethod::Identity => "identity",
            DefenseMethod::Pti => "pti",
            DefenseMethod::Rtp => "rtp",
            DefenseMethod::Htr => "htr",
            DefenseMethod::Plugin(n) => n,
        }
    }

    /// Built-in method by name; anything else is a plugin name.
    pub fn from_name(name: &str) -> Self {
        match name {
            "identity" | "none" => DefenseMethod::Identity,
            "pti" => DefenseMethod::Pti,
            "rtp" => DefenseMethod::Rtp,
            "htr" => DefenseMethod::Htr,
            other => DefenseMethod::Plugin(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenseConfig {
    pub method: DefenseMethod,
    /// Flattening / padding level V, KB/s.
    pub flatten_threshold_kb_s: f64,
    /// Poisson injection rate, events per hour.
    pub injection_rate_per_hour: f64,
    /// Bernoulli keep probability per injection instant or idle slot.
    pub bernoulli_p: f64,
    pub hmm_states: usize,
    pub seed: u64,
}

impl DefenseConfig {
    pub fn new(method: DefenseMethod, flatten_threshold_kb_s: f64, seed: u64) -> Self {
        DefenseConfig {
            method,
            flatten_threshold_kb_s,
            injection_rate_per_hour: 60.0,
            bernoulli_p: 0.5,
            hmm_states: 4,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.bernoulli_p) {
            return Err(Error::contract(format!(
                "bernoulli_p {} outside [0, 1]",
                self.bernoulli_p
            )));
        }
        if !(self.injection_rate_per_hour >= 0.0) || !self.injection_rate_per_hour.is_finite() {
            return Err(Error::contract("injection rate must be finite and non-negative"));
        }
        if !(self.flatten_threshold_kb_s > 0.0) || !self.flatten_threshold_kb_s.is_finite() {
            return Err(Error::contract("flatten threshold must be positive"));
        }
        if self.hmm_states < 2 {
            return Err(Error::contract("user model needs at least two states"));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        DefenseConfig {
            seed,
            ..self.clone()
        }
    }
}

/// Rate at quantile `q` over all present samples of `traces` (nearest rank).
pub fn rate_quantile(traces: &[RateTrace], q: f64) -> Option<f64> {
    let mut all: Vec<f64> = traces
        .iter()
        .flat_map(|t| t.rates().iter().copied())
        .filter(|v| !is_absent(*v))
        .collect();
    if all.is_empty() {
        return None;
    }
    all.sort_by(f64::total_cmp);
    let rank = ((q.clamp(0.0, 1.0) * all.len() as f64).ceil() as usize).clamp(1, all.len());
    Some(all[rank - 1])
}

/// Default flattening level: 95th percentile of historical rates.
pub fn default_flatten_threshold(history: &[RateTrace]) -> Option<f64> {
    rate_quantile(history, 0.95)
}
