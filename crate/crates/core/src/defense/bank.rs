use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{RateTrace, TraceKey};
use crate::motif::{extract_motifs, Motif};

/// Historical motifs available for injection, indexed by source stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifBank {
    motifs: Vec<Motif>,
    by_trace: BTreeMap<TraceKey, Vec<usize>>,
}

impl MotifBank {
    pub fn from_motifs(motifs: Vec<Motif>) -> Result<Self> {
        if motifs.is_empty() {
            return Err(Error::EmptyBank);
        }
        let mut by_trace: BTreeMap<TraceKey, Vec<usize>> = BTreeMap::new();
        for (i, m) in motifs.iter().enumerate() {
            by_trace.entry(m.trace.clone()).or_default().push(i);
        }
        Ok(MotifBank { motifs, by_trace })
    }

    pub fn motifs(&self) -> &[Motif] {
        &self.motifs
    }

    pub fn len(&self) -> usize {
        self.motifs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motifs.is_empty()
    }

    pub fn get(&self, i: usize) -> &Motif {
        &self.motifs[i]
    }

    /// Indices of motifs harvested from `key`.
    pub fn for_trace(&self, key: &TraceKey) -> &[usize] {
        self.by_trace.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn device_keys(&self) -> impl Iterator<Item = &TraceKey> {
        self.by_trace.keys()
    }
}

/// Harvest every motif above `threshold` from historical traces.
pub fn build_motif_bank(traces: &[RateTrace], threshold: f64, window_half_n: usize) -> Result<MotifBank> {
    if traces.is_empty() {
        return Err(Error::contract("motif bank needs at least one trace"));
    }
    let mut motifs = Vec::new();
    for t in traces {
        motifs.extend(extract_motifs(t, threshold, window_half_n)?);
    }
    MotifBank::from_motifs(motifs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Direction;

    #[test]
    fn one_burst_one_motif() {
        let t = RateTrace::new("a", Direction::In, 1, 0, vec![0.0, 2.0, 5.0, 2.0, 0.0]).unwrap();
        let b = build_motif_bank(&[t.clone()], 1.0, 3).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.for_trace(t.key()), &[0]);
        assert!(b.for_trace(&TraceKey::new("z", Direction::In)).is_empty());
    }

    #[test]
    fn flat_traces_are_an_error() {
        let t = RateTrace::new("a", Direction::In, 1, 0, vec![0.5; 10]).unwrap();
        assert!(matches!(build_motif_bank(&[t], 1.0, 3), Err(Error::EmptyBank)));
    }
}
