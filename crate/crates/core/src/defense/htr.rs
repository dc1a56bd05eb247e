//! Hybrid traffic reshaping: buffered flattening at V, then fake motifs at
//! instants drawn from the user model.

use rand::Rng;

use crate::error::{Error, Result};
use crate::ingest::RateTrace;
use crate::motif::Motif;
use crate::seed;

use super::config::{DefenseConfig, DefenseMethod};
use super::markov::MarkovUserModel;
use super::outcome::DefenseOutcome;
use super::pti::{inject_motifs, require_complete};

/// Cap every sample at `v`, carrying the excess forward until it drains.
/// Whatever is still queued at the end of the trace leaves in the last sample.
pub fn flatten_buffered(rates: &[f64], v: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(rates.len());
    let mut backlog = 0.0;
    for &x in rates {
        let want = x + backlog;
        if want > v {
            out.push(v);
            backlog = want - v;
        } else {
            out.push(want);
            backlog = 0.0;
        }
    }
    if backlog > 0.0 {
        if let Some(last) = out.last_mut() {
            *last += backlog;
        }
    }
    out
}

pub fn apply_htr(trace: &RateTrace, model: &MarkovUserModel, cfg: &DefenseConfig) -> Result<DefenseOutcome> {
    if cfg.method != DefenseMethod::Htr {
        return Err(Error::contract("apply_htr called with a non-HTR config"));
    }
    cfg.validate()?;
    if !model.is_fitted() {
        return Err(Error::UnfittedModel);
    }
    require_complete(trace)?;
    let g = trace.granularity_s();
    let flat = trace.with_rates(flatten_buffered(trace.rates(), cfg.flatten_threshold_kb_s))?;

    let horizon = trace.len() as f64 * g as f64;
    let events = model.simulate(horizon, cfg.seed)?;
    let own: Vec<&Motif> = model
        .emissions
        .iter()
        .flatten()
        .filter(|m| &m.trace == trace.key() && m.granularity_s == g)
        .collect();
    let mut rng = seed::rng(seed::derive(cfg.seed, 1));
    let mut placements = Vec::new();
    for ev in events {
        let in_state: Vec<&Motif> = model.emissions[ev.state]
            .iter()
            .filter(|m| &m.trace == trace.key() && m.granularity_s == g)
            .collect();
        let pool = if in_state.is_empty() { &own } else { &in_state };
        if pool.is_empty() {
            continue;
        }
        let m = pool[rng.random_range(0..pool.len())];
        placements.push(((ev.offset_s / g as f64) as usize, m));
    }
    let injected = inject_motifs(&flat, &placements)?;
    Ok(DefenseOutcome::new(
        trace,
        injected.reshaped,
        injected.injected_kb,
        0.0,
        injected.injected_windows,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defense::{build_motif_bank, fit_markov_model};
    use crate::ingest::{ActivityLabel, Direction};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn triple_burst_spreads() {
        assert_eq!(flatten_buffered(&[30.0, 0.0, 0.0], 10.0), vec![10.0, 10.0, 10.0]);
        assert_eq!(flatten_buffered(&[30.0, 0.0], 10.0), vec![10.0, 20.0]);
        assert_eq!(flatten_buffered(&[1.0, 2.0], 10.0), vec![1.0, 2.0]);
    }

    fn model() -> MarkovUserModel {
        let t = RateTrace::new("a", Direction::In, 1, 0, vec![0.0, 3.0, 7.0, 4.0, 0.0]).unwrap();
        let bank = build_motif_bank(&[t], 1.0, 5).unwrap();
        let labels: Vec<_> = (0..20)
            .map(|i| ActivityLabel {
                activity_id: (i % 2) as u32,
                device_events: BTreeSet::new(),
                start_epoch_s: i * 50,
                end_epoch_s: i * 50 + 5 + (i % 2) * 20,
            })
            .collect();
        fit_markov_model(&labels, &bank, 2, 3).unwrap()
    }

    #[test]
    fn below_v_without_own_motifs_unchanged() {
        let t = RateTrace::new("other", Direction::In, 1, 0, vec![1.0, 2.0, 0.5, 0.0]).unwrap();
        let cfg = DefenseConfig::new(DefenseMethod::Htr, 10.0, 4);
        let o = apply_htr(&t, &model(), &cfg).unwrap();
        assert_eq!(o.reshaped, t);
        assert_eq!(o.overhead_pct, 0.0);
    }

    #[test]
    fn unfitted_model_rejected() {
        let t = RateTrace::new("a", Direction::In, 1, 0, vec![1.0]).unwrap();
        let cfg = DefenseConfig::new(DefenseMethod::Htr, 10.0, 4);
        assert!(matches!(
            apply_htr(&t, &MarkovUserModel::default(), &cfg),
            Err(Error::UnfittedModel)
        ));
    }

    #[test]
    fn own_motifs_are_injected() {
        let t = RateTrace::new("a", Direction::In, 1, 0, vec![0.0; 3000]).unwrap();
        let cfg = DefenseConfig::new(DefenseMethod::Htr, 10.0, 4);
        let o = apply_htr(&t, &model(), &cfg).unwrap();
        assert!(!o.injected_windows.is_empty());
        assert!(o.validate(&t).is_ok());
        assert_eq!(o.padded_kb, 0.0);
    }

    proptest! {
        #[test]
        fn flattening_conserves_volume(
            rates in prop::collection::vec(0.0f64..100.0, 1..200),
            v in 0.5f64..50.0,
        ) {
            let out = flatten_buffered(&rates, v);
            let a: f64 = rates.iter().sum();
            let b: f64 = out.iter().sum();
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
            for &x in &out[..out.len() - 1] {
                prop_assert!(x <= v);
            }
        }
    }
}
