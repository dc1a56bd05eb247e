//! Registry of reshapers reachable through one `apply` entry point.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::RateTrace;
use crate::seed;

use super::bank::MotifBank;
use super::config::{DefenseConfig, DefenseMethod};
use super::htr::apply_htr;
use super::markov::MarkovUserModel;
use super::outcome::{DefenseOutcome, IndexRange};
use super::pti::apply_pti;
use super::rtp::apply_rtp;

/// What an external reshaper hands back. Volumes are optional; when absent
/// the whole difference is booked as injected traffic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PluginOutput {
    pub rates: Vec<f64>,
    pub injected_kb: Option<f64>,
    pub padded_kb: Option<f64>,
    pub injected_windows: Vec<IndexRange>,
}

impl PluginOutput {
    pub fn rates(rates: Vec<f64>) -> Self {
        PluginOutput {
            rates,
            ..Default::default()
        }
    }
}

pub trait TrafficReshaper: Send + Sync {
    fn reshape(&self, trace: &RateTrace, cfg: &DefenseConfig) -> Result<PluginOutput>;
}

impl<F> TrafficReshaper for F
where
    F: Fn(&RateTrace, &DefenseConfig) -> Result<PluginOutput> + Send + Sync,
{
    fn reshape(&self, trace: &RateTrace, cfg: &DefenseConfig) -> Result<PluginOutput> {
        self(trace, cfg)
    }
}

/// Inputs the built-in defenses draw on. HTR needs the model, PTI and RTP the bank.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefenseContext<'a> {
    pub bank: Option<&'a MotifBank>,
    pub model: Option<&'a MarkovUserModel>,
}

const RESERVED: [&str; 5] = ["identity", "none", "pti", "rtp", "htr"];

#[derive(Default, Clone)]
pub struct DefenseRegistry {
    plugins: BTreeMap<String, Arc<dyn TrafficReshaper>>,
}

impl std::fmt::Debug for DefenseRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DefenseRegistry")
            .field("plugins", &self.plugins.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl DefenseRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &str, reshaper: impl TrafficReshaper + 'static) -> Result<()> {
        if RESERVED.contains(&name) || self.plugins.contains_key(name) {
            return Err(Error::DuplicateDefense(name.to_string()));
        }
        self.plugins.insert(name.to_string(), Arc::new(reshaper));
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.plugins.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.plugins.contains_key(name)
    }

    pub fn apply(&self, trace: &RateTrace, cfg: &DefenseConfig, ctx: DefenseContext<'_>) -> Result<DefenseOutcome> {
        let need_bank = || ctx.bank.ok_or(Error::EmptyBank);
        match &cfg.method {
            DefenseMethod::Identity => Ok(DefenseOutcome::identity(trace)),
            DefenseMethod::Pti => apply_pti(trace, need_bank()?, cfg),
            DefenseMethod::Rtp => apply_rtp(trace, need_bank()?, cfg),
            DefenseMethod::Htr => apply_htr(trace, ctx.model.ok_or(Error::UnfittedModel)?, cfg),
            DefenseMethod::Plugin(name) => {
                let p = self
                    .plugins
                    .get(name)
                    .ok_or_else(|| Error::UnknownDefense(name.clone()))?;
                let out = p.reshape(trace, cfg)?;
                checked_outcome(name, trace, out)
            }
        }
    }

    /// Defend every trace. PTI, RTP and plugins get a per-trace seed; HTR
    /// shares one simulated timeline across the home.
    pub fn defend_all(
        &self,
        traces: &[RateTrace],
        cfg: &DefenseConfig,
        ctx: DefenseContext<'_>,
    ) -> Result<Vec<DefenseOutcome>> {
        traces
            .par_iter()
            .enumerate()
            .map(|(i, t)| {
                let mut c = cfg.clone();
                if c.method != DefenseMethod::Htr {
                    c.seed = seed::derive(cfg.seed, i as u64);
                }
                self.apply(t, &c, ctx)
            })
            .collect()
    }
}

fn checked_outcome(name: &str, trace: &RateTrace, out: PluginOutput) -> Result<DefenseOutcome> {
    let bad = |msg: String| Error::InvalidOutcome {
        name: name.to_string(),
        msg,
    };
    if out.rates.len() != trace.len() {
        return Err(bad(format!(
            "returned {} samples for a {}-sample trace",
            out.rates.len(),
            trace.len()
        )));
    }
    if let Some(i) = out.rates.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(bad(format!("sample {i} is negative, absent, or non-finite")));
    }
    let reshaped = trace.with_rates(out.rates).map_err(|e| bad(e.to_string()))?;
    let diff = reshaped.volume_kb() - trace.volume_kb();
    let (injected, padded) = match (out.injected_kb, out.padded_kb) {
        (None, None) => (diff.max(0.0), 0.0),
        (Some(i), None) => (i, (diff - i).max(0.0)),
        (None, Some(p)) => ((diff - p).max(0.0), p),
        (Some(i), Some(p)) => (i, p),
    };
    let outcome = DefenseOutcome::new(trace, reshaped, injected, padded, out.injected_windows);
    outcome.validate(trace).map_err(bad)?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defense::compute_overhead;
    use crate::ingest::Direction;

    fn tr() -> RateTrace {
        RateTrace::new("d", Direction::In, 1, 0, vec![1.0, 0.0, 4.0, 2.5]).unwrap()
    }

    fn plugin_cfg(name: &str) -> DefenseConfig {
        DefenseConfig::new(DefenseMethod::Plugin(name.into()), 10.0, 1)
    }

    #[test]
    fn identity_plugin() {
        let mut r = DefenseRegistry::new();
        r.register("same", |t: &RateTrace, _: &DefenseConfig| Ok(PluginOutput::rates(t.rates().to_vec())))
            .unwrap();
        let o = r.apply(&tr(), &plugin_cfg("same"), DefenseContext::default()).unwrap();
        assert_eq!(o.overhead_pct, 0.0);
    }

    #[test]
    fn negative_rates_rejected() {
        let mut r = DefenseRegistry::new();
        r.register("neg", |t: &RateTrace, _: &DefenseConfig| {
            Ok(PluginOutput::rates(t.rates().iter().map(|x| -x).collect()))
        })
        .unwrap();
        assert!(matches!(
            r.apply(&tr(), &plugin_cfg("neg"), DefenseContext::default()),
            Err(Error::InvalidOutcome { .. })
        ));
    }

    #[test]
    fn doubling_plugin_matches_recomputation() {
        let mut r = DefenseRegistry::new();
        r.register("double", |t: &RateTrace, _: &DefenseConfig| {
            Ok(PluginOutput::rates(t.rates().iter().map(|x| 2.0 * x).collect()))
        })
        .unwrap();
        let t = tr();
        let o = r.apply(&t, &plugin_cfg("double"), DefenseContext::default()).unwrap();
        assert_eq!(o.overhead_pct, 100.0);
        assert!((compute_overhead(&t, &o).unwrap() - o.overhead_pct).abs() < 1e-9);
    }

    #[test]
    fn lying_ledger_rejected() {
        let mut r = DefenseRegistry::new();
        r.register("liar", |t: &RateTrace, _: &DefenseConfig| {
            Ok(PluginOutput {
                rates: t.rates().iter().map(|x| x + 1.0).collect(),
                injected_kb: Some(0.0),
                padded_kb: Some(0.0),
                injected_windows: vec![],
            })
        })
        .unwrap();
        assert!(r.apply(&tr(), &plugin_cfg("liar"), DefenseContext::default()).is_err());
    }

    #[test]
    fn duplicate_and_reserved_names() {
        let mut r = DefenseRegistry::new();
        let f = |t: &RateTrace, _: &DefenseConfig| Ok(PluginOutput::rates(t.rates().to_vec()));
        r.register("x", f).unwrap();
        assert!(matches!(r.register("x", f), Err(Error::DuplicateDefense(_))));
        assert!(matches!(r.register("htr", f), Err(Error::DuplicateDefense(_))));
        assert!(matches!(
            r.apply(&tr(), &plugin_cfg("nope"), DefenseContext::default()),
            Err(Error::UnknownDefense(_))
        ));
    }
}
