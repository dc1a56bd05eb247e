use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Granularities used for the benchmark datasets: 1 s, 1 min, 3 min, 5 min, 10 min.
pub const STANDARD_GRANULARITIES: [u32; 5] = [1, 60, 180, 300, 600];

/// Bytes per kilobyte used when converting byte counts into KB/s.
pub const BYTES_PER_KB: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "in" => Some(Direction::In),
            "out" => Some(Direction::Out),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identifies one (device, direction) stream.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TraceKey {
    pub device_id: String,
    pub direction: Direction,
}

impl TraceKey {
    pub fn new(device_id: impl Into<String>, direction: Direction) -> Self {
        TraceKey {
            device_id: device_id.into(),
            direction,
        }
    }
}

impl fmt::Display for TraceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.device_id, self.direction)
    }
}

/// Traffic rate time series of one device in one direction, in KB/s.
///
/// Absent samples (gaps before imputation) are stored as NaN. Every present
/// sample is finite and non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTrace {
    key: TraceKey,
    granularity_s: u32,
    start_epoch_s: i64,
    rates: Vec<f64>,
}

#[inline]
pub fn is_absent(v: f64) -> bool {
    v.is_nan()
}

impl RateTrace {
    pub fn new(
        device_id: impl Into<String>,
        direction: Direction,
        granularity_s: u32,
        start_epoch_s: i64,
        rates: Vec<f64>,
    ) -> Result<Self> {
        Self::from_key(
            TraceKey::new(device_id, direction),
            granularity_s,
            start_epoch_s,
            rates,
        )
    }

    pub fn from_key(
        key: TraceKey,
        granularity_s: u32,
        start_epoch_s: i64,
        rates: Vec<f64>,
    ) -> Result<Self> {
        if granularity_s == 0 {
            return Err(Error::contract("granularity must be a positive number of seconds"));
        }
        if let Some(i) = rates
            .iter()
            .position(|&v| !is_absent(v) && (!v.is_finite() || v < 0.0))
        {
            return Err(Error::contract(format!(
                "trace {key}: sample {i} has invalid rate {}",
                rates[i]
            )));
        }
        Ok(RateTrace {
            key,
            granularity_s,
            start_epoch_s,
            rates,
        })
    }

    /// Same stream metadata, new samples.
    pub fn with_rates(&self, rates: Vec<f64>) -> Result<Self> {
        Self::from_key(self.key.clone(), self.granularity_s, self.start_epoch_s, rates)
    }

    pub fn key(&self) -> &TraceKey {
        &self.key
    }

    pub fn device_id(&self) -> &str {
        &self.key.device_id
    }

    pub fn direction(&self) -> Direction {
        self.key.direction
    }

    pub fn granularity_s(&self) -> u32 {
        self.granularity_s
    }

    pub fn start_epoch_s(&self) -> i64 {
        self.start_epoch_s
    }

    /// Exclusive end of the covered time span.
    pub fn end_epoch_s(&self) -> i64 {
        self.start_epoch_s + self.rates.len() as i64 * self.granularity_s as i64
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Set when the granularity is outside the standard set.
    pub fn nonstandard_granularity(&self) -> bool {
        !STANDARD_GRANULARITIES.contains(&self.granularity_s)
    }

    pub fn absent_count(&self) -> usize {
        self.rates.iter().filter(|v| is_absent(**v)).count()
    }

    pub fn is_complete(&self) -> bool {
        self.absent_count() == 0
    }

    /// Transferred volume in KB over present samples.
    pub fn volume_kb(&self) -> f64 {
        self.rates.iter().filter(|v| !is_absent(**v)).sum::<f64>() * self.granularity_s as f64
    }

    pub fn max_rate(&self) -> f64 {
        self.rates
            .iter()
            .copied()
            .filter(|v| !is_absent(*v))
            .fold(0.0, f64::max)
    }

    /// Index of the sample covering `epoch_s`, if inside the trace.
    pub fn index_of(&self, epoch_s: i64) -> Option<usize> {
        if epoch_s < self.start_epoch_s || epoch_s >= self.end_epoch_s() {
            return None;
        }
        Some(((epoch_s - self.start_epoch_s) / self.granularity_s as i64) as usize)
    }

    pub fn epoch_of(&self, index: usize) -> i64 {
        self.start_epoch_s + index as i64 * self.granularity_s as i64
    }

    /// True when `other` covers the same samples on the same time grid.
    pub fn aligned_with(&self, other: &RateTrace) -> bool {
        self.granularity_s == other.granularity_s
            && self.start_epoch_s == other.start_epoch_s
            && self.rates.len() == other.rates.len()
    }
}

/// Sum of several traces on a common grid spanning all of them.
///
/// Samples outside a trace's span, or absent, count as zero.
pub fn sum_traces(traces: &[&RateTrace], key: TraceKey) -> Result<RateTrace> {
    let first = traces
        .first()
        .ok_or_else(|| Error::contract("cannot sum an empty set of traces"))?;
    let g = first.granularity_s;
    if traces.iter().any(|t| t.granularity_s != g) {
        return Err(Error::contract("summed traces must share a granularity"));
    }
    let start = traces.iter().map(|t| t.start_epoch_s).min().unwrap_or(0);
    let end = traces.iter().map(|t| t.end_epoch_s()).max().unwrap_or(start);
    if traces
        .iter()
        .any(|t| (t.start_epoch_s - start) % g as i64 != 0)
    {
        return Err(Error::contract("summed traces are not on a common time grid"));
    }
    let len = ((end - start) / g as i64) as usize;
    let mut rates = vec![0.0; len];
    for t in traces {
        let off = ((t.start_epoch_s - start) / g as i64) as usize;
        for (i, &v) in t.rates.iter().enumerate() {
            if !is_absent(v) {
                rates[off + i] += v;
            }
        }
    }
    RateTrace::from_key(key, g, start, rates)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_rates() {
        assert!(RateTrace::new("d", Direction::In, 1, 0, vec![1.0, -0.5]).is_err());
        assert!(RateTrace::new("d", Direction::In, 0, 0, vec![1.0]).is_err());
    }

    #[test]
    fn nonstandard_granularity_is_flagged_not_rejected() {
        let t = RateTrace::new("d", Direction::Out, 7, 0, vec![0.0]).unwrap();
        assert!(t.nonstandard_granularity());
        let t = RateTrace::new("d", Direction::Out, 60, 0, vec![0.0]).unwrap();
        assert!(!t.nonstandard_granularity());
    }

    #[test]
    fn sum_aligns_offsets() {
        let a = RateTrace::new("a", Direction::In, 1, 10, vec![1.0, 2.0]).unwrap();
        let b = RateTrace::new("b", Direction::In, 1, 11, vec![5.0, f64::NAN, 1.0]).unwrap();
        let s = sum_traces(&[&a, &b], TraceKey::new("home", Direction::In)).unwrap();
        assert_eq!(s.start_epoch_s(), 10);
        assert_eq!(s.rates(), &[1.0, 7.0, 0.0, 1.0]);
    }
}
