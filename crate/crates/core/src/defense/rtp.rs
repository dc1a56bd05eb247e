//! Random traffic padding: a padding-only shaper that raises every active
//! run to the flattening level V and fills random idle stretches with fake
//! bursts that also sit at V.

use rand::Rng;

use crate::error::{Error, Result};
use crate::ingest::RateTrace;
use crate::seed;

use super::bank::MotifBank;
use super::config::{DefenseConfig, DefenseMethod};
use super::outcome::{DefenseOutcome, IndexRange};
use super::pti::require_complete;

pub fn apply_rtp(trace: &RateTrace, bank: &MotifBank, cfg: &DefenseConfig) -> Result<DefenseOutcome> {
    if cfg.method != DefenseMethod::Rtp {
        return Err(Error::contract("apply_rtp called with a non-RTP config"));
    }
    cfg.validate()?;
    if bank.is_empty() {
        return Err(Error::EmptyBank);
    }
    require_complete(trace)?;
    let v = cfg.flatten_threshold_kb_s;
    let peak = trace.max_rate();
    if v < peak {
        return Err(Error::contract(format!(
            "padding level {v} KB/s is below the trace maximum {peak} KB/s"
        )));
    }
    let g = trace.granularity_s() as f64;
    let original = trace.rates();
    let n = original.len();
    let mut rates = original.to_vec();
    let mut padded = 0.0;
    let mut injected = 0.0;
    let mut windows = Vec::new();

    // active runs
    for (slot, &x) in rates.iter_mut().zip(original) {
        if x > 0.0 {
            padded += (v - x) * g;
            *slot = v;
        }
    }

    // idle stretches: walk forward, offering a fake burst wherever a whole
    // motif fits without touching genuine traffic
    let mut rng = seed::rng(cfg.seed);
    let mut i = 0;
    while i < n {
        if original[i] > 0.0 {
            i += 1;
            continue;
        }
        let motif = bank.get(rng.random_range(0..bank.len()));
        let m = motif.samples.len();
        let fits = i + m <= n && original[i..i + m].iter().all(|&x| x == 0.0);
        if !fits {
            i += 1;
            continue;
        }
        if rng.random_bool(cfg.bernoulli_p) {
            let top = motif.samples.iter().copied().fold(0.0, f64::max);
            for (k, &s) in motif.samples.iter().enumerate() {
                let fake = if s == top || top <= 0.0 { v } else { s * v / top };
                injected += fake * g;
                padded += (v - fake).max(0.0) * g;
                rates[i + k] = v;
            }
            windows.push(IndexRange::new(i, i + m));
        }
        i += m;
    }
    let reshaped = trace.with_rates(rates)?;
    Ok(DefenseOutcome::new(trace, reshaped, injected, padded, windows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defense::build_motif_bank;
    use crate::ingest::Direction;

    fn bank() -> MotifBank {
        let t = RateTrace::new("a", Direction::In, 1, 0, vec![0.0, 3.0, 7.0, 4.0, 0.0]).unwrap();
        build_motif_bank(&[t], 1.0, 5).unwrap()
    }

    fn cfg(v: f64, p: f64) -> DefenseConfig {
        let mut c = DefenseConfig::new(DefenseMethod::Rtp, v, 9);
        c.bernoulli_p = p;
        c
    }

    #[test]
    fn flat_zero_no_padding() {
        let t = RateTrace::new("b", Direction::Out, 1, 0, vec![0.0; 50]).unwrap();
        let o = apply_rtp(&t, &bank(), &cfg(10.0, 0.0)).unwrap();
        assert_eq!(o.reshaped, t);
        assert_eq!(o.overhead_pct, 0.0);
    }

    #[test]
    fn burst_padded_to_level() {
        let v = 10.0;
        let burst = vec![0.0, 1.0, 3.0, 5.0, 2.0, 0.0];
        let t = RateTrace::new("b", Direction::Out, 1, 0, burst.clone()).unwrap();
        let o = apply_rtp(&t, &bank(), &cfg(v, 0.0)).unwrap();
        assert_eq!(o.reshaped.rates(), &[0.0, v, v, v, v, 0.0]);
        let expect: f64 = burst.iter().filter(|&&x| x > 0.0).map(|x| v - x).sum();
        assert_eq!(o.padded_kb, expect);
        assert_eq!(o.injected_kb, 0.0);
    }

    #[test]
    fn level_below_peak_rejected() {
        let t = RateTrace::new("b", Direction::Out, 1, 0, vec![0.0, 20.0]).unwrap();
        assert!(matches!(apply_rtp(&t, &bank(), &cfg(10.0, 0.5)), Err(Error::Contract(_))));
    }

    #[test]
    fn fakes_sit_at_level() {
        let mut r = vec![0.0; 200];
        r[50] = 4.0;
        let t = RateTrace::new("b", Direction::Out, 1, 0, r).unwrap();
        let o = apply_rtp(&t, &bank(), &cfg(8.0, 1.0)).unwrap();
        assert!(!o.injected_windows.is_empty());
        for w in &o.injected_windows {
            for i in w.start..w.end {
                assert_eq!(o.reshaped.rates()[i], 8.0);
            }
        }
        assert!(o.validate(&t).is_ok());
    }
}
