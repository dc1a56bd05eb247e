use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::RateTrace;

/// Half-open sample index range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Self {
        IndexRange { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        i >= self.start && i < self.end
    }
}

/// Reshaped trace with its byte ledger. Volumes are in KB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenseOutcome {
    pub reshaped: RateTrace,
    pub genuine_kb: f64,
    pub injected_kb: f64,
    pub padded_kb: f64,
    pub overhead_pct: f64,
    pub injected_windows: Vec<IndexRange>,
}

/// `100 × added / genuine`; zero traffic with nothing added counts as 0%.
pub fn overhead_pct(genuine_kb: f64, added_kb: f64) -> f64 {
    if genuine_kb > 0.0 {
        100.0 * added_kb / genuine_kb
    } else if added_kb == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Relative tolerance for ledger identities.
pub const LEDGER_TOLERANCE: f64 = 1e-9;

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= LEDGER_TOLERANCE * scale.max(1.0)
}

impl DefenseOutcome {
    pub fn new(
        original: &RateTrace,
        reshaped: RateTrace,
        injected_kb: f64,
        padded_kb: f64,
        mut injected_windows: Vec<IndexRange>,
    ) -> Self {
        injected_windows.sort();
        let genuine_kb = original.volume_kb();
        DefenseOutcome {
            reshaped,
            genuine_kb,
            injected_kb,
            padded_kb,
            overhead_pct: overhead_pct(genuine_kb, injected_kb + padded_kb),
            injected_windows,
        }
    }

    pub fn identity(original: &RateTrace) -> Self {
        DefenseOutcome::new(original, original.clone(), 0.0, 0.0, Vec::new())
    }

    pub fn added_kb(&self) -> f64 {
        self.injected_kb + self.padded_kb
    }

    /// Check every ledger invariant against the original trace.
    pub fn validate(&self, original: &RateTrace) -> Result<(), String> {
        if !self.reshaped.aligned_with(original) {
            return Err("reshaped trace is not aligned with the original".into());
        }
        if let Some(i) = self
            .reshaped
            .rates()
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(format!("sample {i} is negative, absent, or non-finite"));
        }
        if self.injected_kb < 0.0 || self.padded_kb < 0.0 {
            return Err("injected and padded volumes must be non-negative".into());
        }
        let n = self.reshaped.len();
        let mut prev_end = 0;
        for w in &self.injected_windows {
            if w.is_empty() || w.end > n {
                return Err(format!("injected window {}..{} out of bounds", w.start, w.end));
            }
            if w.start < prev_end {
                return Err("injected windows overlap".into());
            }
            prev_end = w.end;
        }
        let genuine = original.volume_kb();
        if !close(self.genuine_kb, genuine, genuine) {
            return Err(format!(
                "genuine volume {} does not match original {}",
                self.genuine_kb, genuine
            ));
        }
        let diff = self.reshaped.volume_kb() - genuine;
        if !close(self.added_kb(), diff, self.reshaped.volume_kb()) {
            return Err(format!(
                "ledger does not close: injected + padded = {}, reshaped - original = {}",
                self.added_kb(),
                diff
            ));
        }
        let expect = overhead_pct(self.genuine_kb, self.added_kb());
        if !(expect == self.overhead_pct || close(expect, self.overhead_pct, expect.abs())) {
            return Err("overhead percentage disagrees with the ledger".into());
        }
        Ok(())
    }
}

/// Overhead recomputed from the traces alone: `100 × (Σ reshaped − Σ original) / Σ original`.
pub fn compute_overhead(original: &RateTrace, outcome: &DefenseOutcome) -> Result<f64> {
    if !original.aligned_with(&outcome.reshaped) {
        return Err(Error::contract(
            "original and reshaped traces differ in start, granularity, or length",
        ));
    }
    let o: f64 = original.rates().iter().sum();
    let r: f64 = outcome.reshaped.rates().iter().sum();
    Ok(overhead_pct(o, r - o))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Direction;

    fn tr(r: Vec<f64>) -> RateTrace {
        RateTrace::new("d", Direction::In, 1, 0, r).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let t = tr(vec![1.0, 2.0]);
        let o = DefenseOutcome::identity(&t);
        assert_eq!(compute_overhead(&t, &o).unwrap(), 0.0);
        assert!(o.validate(&t).is_ok());
    }

    #[test]
    fn doubling_is_hundred() {
        let t = tr(vec![1.0, 2.0, 3.0]);
        let d = tr(vec![2.0, 4.0, 6.0]);
        let o = DefenseOutcome::new(&t, d, 6.0, 0.0, vec![IndexRange::new(0, 3)]);
        assert_eq!(compute_overhead(&t, &o).unwrap(), 100.0);
        assert_eq!(o.overhead_pct, 100.0);
        assert!(o.validate(&t).is_ok());
    }

    #[test]
    fn misaligned_rejected() {
        let t = tr(vec![1.0, 2.0]);
        let o = DefenseOutcome::identity(&tr(vec![1.0]));
        assert!(compute_overhead(&t, &o).is_err());
    }

    #[test]
    fn broken_ledger_detected() {
        let t = tr(vec![1.0, 2.0]);
        let o = DefenseOutcome::new(&t, tr(vec![2.0, 2.0]), 0.5, 0.0, vec![]);
        assert!(o.validate(&t).is_err());
        let o = DefenseOutcome::new(
            &t,
            tr(vec![2.0, 3.0]),
            2.0,
            0.0,
            vec![IndexRange::new(0, 2), IndexRange::new(1, 2)],
        );
        assert!(o.validate(&t).is_err());
    }
}
