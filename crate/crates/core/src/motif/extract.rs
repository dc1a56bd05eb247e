use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{is_absent, RateTrace, TraceKey};

/// A threshold-crossing burst around one local maximum.
///
/// `samples` is the contiguous above-threshold run containing the centre,
/// truncated to at most `window_half_n` samples on either side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Motif {
    pub trace: TraceKey,
    pub granularity_s: u32,
    pub trace_start_epoch_s: i64,
    /// Trace index of `samples[0]`.
    pub start_index: usize,
    /// Trace index of the local maximum.
    pub center_index: usize,
    pub window_half_n: usize,
    pub threshold_kb_s: f64,
    pub samples: Vec<f64>,
}

impl Motif {
    pub fn duration_s(&self) -> u64 {
        self.samples.len() as u64 * self.granularity_s as u64
    }

    pub fn center_offset(&self) -> usize {
        self.center_index - self.start_index
    }

    pub fn peak(&self) -> f64 {
        self.samples[self.center_offset()]
    }

    pub fn center_epoch_s(&self) -> i64 {
        self.trace_start_epoch_s + self.center_index as i64 * self.granularity_s as i64
    }

    /// Volume in KB.
    pub fn volume_kb(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.granularity_s as f64
    }
}

/// Half-window in samples matching a sliding window of `window_s` seconds.
pub fn half_window_for(window_s: u32, granularity_s: u32) -> usize {
    ((window_s / granularity_s.max(1)) / 2).max(1) as usize
}

/// Sliding window length used to bound motif duration, seconds.
pub const DEFAULT_WINDOW_S: u32 = 60;

fn value(rates: &[f64], i: usize) -> f64 {
    let v = rates[i];
    if is_absent(v) {
        0.0
    } else {
        v
    }
}

/// Find every local maximum above `threshold` and cut its motif.
///
/// A plateau of equal values counts as one maximum centred on its leftmost
/// sample; it must be strictly higher than the samples on both sides (trace
/// ends count as lower). Absent samples read as zero.
pub fn extract_motifs(trace: &RateTrace, threshold: f64, window_half_n: usize) -> Result<Vec<Motif>> {
    if !(threshold >= 0.0) || !threshold.is_finite() {
        return Err(Error::contract("motif threshold must be finite and non-negative"));
    }
    if window_half_n == 0 {
        return Err(Error::contract("motif half window must be at least 1"));
    }
    let rates = trace.rates();
    let n = rates.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let v = value(rates, i);
        if v <= threshold {
            i += 1;
            continue;
        }
        // plateau [i, j]
        let mut j = i;
        while j + 1 < n && value(rates, j + 1) == v {
            j += 1;
        }
        let left_lower = i == 0 || value(rates, i - 1) < v;
        let right_lower = j + 1 == n || value(rates, j + 1) < v;
        if left_lower && right_lower {
            out.push(cut(trace, i, threshold, window_half_n));
        }
        i = j + 1;
    }
    Ok(out)
}

fn cut(trace: &RateTrace, p: usize, threshold: f64, half: usize) -> Motif {
    let rates = trace.rates();
    let lo_bound = p.saturating_sub(half);
    let hi_bound = (p + half).min(rates.len() - 1);
    let mut a = p;
    while a > lo_bound && value(rates, a - 1) > threshold {
        a -= 1;
    }
    let mut b = p;
    while b < hi_bound && value(rates, b + 1) > threshold {
        b += 1;
    }
    Motif {
        trace: trace.key().clone(),
        granularity_s: trace.granularity_s(),
        trace_start_epoch_s: trace.start_epoch_s(),
        start_index: a,
        center_index: p,
        window_half_n: half,
        threshold_kb_s: threshold,
        samples: (a..=b).map(|k| value(rates, k)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Direction;

    fn tr(rates: Vec<f64>) -> RateTrace {
        RateTrace::new("d", Direction::In, 1, 0, rates).unwrap()
    }

    #[test]
    fn flat_below_threshold() {
        assert!(extract_motifs(&tr(vec![1.0; 30]), 2.0, 5).unwrap().is_empty());
    }

    #[test]
    fn triangle_gives_one_centred_motif() {
        let rates = vec![0.0, 1.0, 3.0, 6.0, 9.0, 6.0, 3.0, 1.0, 0.0];
        let m = extract_motifs(&tr(rates), 0.5, 10).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].center_index, 4);
        assert_eq!(m[0].samples, vec![1.0, 3.0, 6.0, 9.0, 6.0, 3.0, 1.0]);
        assert_eq!(m[0].duration_s(), 7);
    }

    #[test]
    fn window_truncates_run() {
        let rates = vec![5.0, 6.0, 7.0, 8.0, 9.0, 8.0, 7.0, 6.0, 5.0];
        let m = extract_motifs(&tr(rates), 1.0, 2).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].samples, vec![7.0, 8.0, 9.0, 8.0, 7.0]);
        assert!(m[0].duration_s() <= 5);
    }

    #[test]
    fn plateau_centre_is_leftmost() {
        let rates = vec![0.0, 4.0, 4.0, 4.0, 1.0];
        let m = extract_motifs(&tr(rates), 0.0, 3).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].center_index, 1);
    }

    #[test]
    fn two_peaks_in_one_run() {
        let rates = vec![0.0, 5.0, 2.0, 6.0, 0.0];
        let m = extract_motifs(&tr(rates), 1.0, 4).unwrap();
        let centres: Vec<_> = m.iter().map(|m| m.center_index).collect();
        assert_eq!(centres, vec![1, 3]);
        assert_eq!(m[0].samples, vec![5.0, 2.0, 6.0]);
    }

    #[test]
    fn half_window_for_granularity() {
        assert_eq!(half_window_for(60, 1), 30);
        assert_eq!(half_window_for(60, 60), 1);
    }
}
