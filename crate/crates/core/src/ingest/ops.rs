use crate::error::{Error, Result};

use super::trace::{is_absent, RateTrace};

/// Coarsen a trace to `new_granularity_s`, which must be a multiple of the
/// current granularity.
///
/// Each output sample is the mean rate over the input samples it covers. A
/// trailing partial block is averaged over the full block with the uncovered
/// tail counted as zero traffic, so byte volume is conserved. Blocks whose
/// samples are all absent stay absent; otherwise absent samples are skipped.
pub fn resample(trace: &RateTrace, new_granularity_s: u32) -> Result<RateTrace> {
    let g = trace.granularity_s();
    if new_granularity_s == 0 || new_granularity_s % g != 0 {
        return Err(Error::contract(format!(
            "granularity {new_granularity_s}s is not a positive multiple of {g}s"
        )));
    }
    let factor = (new_granularity_s / g) as usize;
    if factor == 1 {
        return Ok(trace.clone());
    }
    let rates: Vec<f64> = trace
        .rates()
        .chunks(factor)
        .map(|block| {
            let present: Vec<f64> = block.iter().copied().filter(|v| !is_absent(*v)).collect();
            if present.is_empty() {
                f64::NAN
            } else if present.len() == block.len() {
                block.iter().sum::<f64>() / factor as f64
            } else {
                present.iter().sum::<f64>() / present.len() as f64 * block.len() as f64
                    / factor as f64
            }
        })
        .collect();
    RateTrace::from_key(
        trace.key().clone(),
        new_granularity_s,
        trace.start_epoch_s(),
        rates,
    )
}

/// Fill absent samples with the mean of the `k` nearest present samples in
/// time. Equidistant neighbours are taken earlier-first.
pub fn impute_knn(trace: &RateTrace, k: usize) -> Result<RateTrace> {
    if k == 0 {
        return Err(Error::contract("k must be positive"));
    }
    let rates = trace.rates();
    let present = rates.len() - trace.absent_count();
    if present < k {
        return Err(Error::contract(format!(
            "imputation needs {k} present samples, trace {} has {present}",
            trace.key()
        )));
    }
    let mut out = rates.to_vec();
    for (i, slot) in out.iter_mut().enumerate() {
        if !is_absent(*slot) {
            continue;
        }
        // Walk outward; at each distance the earlier side is taken first.
        let mut taken = 0usize;
        let mut sum = 0.0;
        let mut d = 1usize;
        while taken < k {
            if d <= i && !is_absent(rates[i - d]) {
                sum += rates[i - d];
                taken += 1;
            }
            if taken < k && i + d < rates.len() && !is_absent(rates[i + d]) {
                sum += rates[i + d];
                taken += 1;
            }
            d += 1;
        }
        *slot = sum / k as f64;
    }
    trace.with_rates(out)
}

/// Result of clipping a trace at a background cap.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub trace: RateTrace,
    pub clipped: usize,
}

/// Clip every sample above `cap_kb_s` down to the cap.
pub fn background_filter(trace: &RateTrace, cap_kb_s: f64) -> Result<Filtered> {
    if !(cap_kb_s > 0.0) {
        return Err(Error::contract("background cap must be positive"));
    }
    let mut clipped = 0;
    let rates = trace
        .rates()
        .iter()
        .map(|&v| {
            if !is_absent(v) && v > cap_kb_s {
                clipped += 1;
                cap_kb_s
            } else {
                v
            }
        })
        .collect();
    Ok(Filtered {
        trace: trace.with_rates(rates)?,
        clipped,
    })
}
