//! Pure traffic injection: superpose historical motifs at random instants.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::ingest::RateTrace;
use crate::motif::Motif;
use crate::seed;

use super::bank::MotifBank;
use super::config::{DefenseConfig, DefenseMethod};
use super::outcome::{DefenseOutcome, IndexRange};

pub(crate) fn require_complete(trace: &RateTrace) -> Result<()> {
    if !trace.is_complete() {
        return Err(Error::contract(format!(
            "trace {} has absent samples; impute before applying a defense",
            trace.key()
        )));
    }
    Ok(())
}

/// Instants (sample indices) from a Poisson process at `rate_per_hour`,
/// thinned by an independent Bernoulli(`p`) draw per instant.
pub(crate) fn poisson_instants(
    n_samples: usize,
    granularity_s: u32,
    rate_per_hour: f64,
    p: f64,
    rng: &mut impl Rng,
) -> Vec<usize> {
    if rate_per_hour <= 0.0 || n_samples == 0 {
        return Vec::new();
    }
    let exp = Exp::new(rate_per_hour / 3600.0).expect("positive rate");
    let horizon = n_samples as f64 * granularity_s as f64;
    let mut t = 0.0;
    let mut out = Vec::new();
    loop {
        t += exp.sample(rng);
        if t >= horizon {
            break;
        }
        if rng.random_bool(p) {
            out.push((t / granularity_s as f64) as usize);
        }
    }
    out
}

/// Superpose motifs at the given start indices. Placements overlapping an
/// earlier placement are skipped; motifs running past the trace end are cut.
///
/// Returns the outcome ledger; injected volume is exactly the added volume.
pub fn inject_motifs(trace: &RateTrace, placements: &[(usize, &Motif)]) -> Result<DefenseOutcome> {
    require_complete(trace)?;
    let g = trace.granularity_s();
    let mut rates = trace.rates().to_vec();
    let n = rates.len();
    let mut injected = 0.0;
    let mut windows = Vec::new();
    let mut last_end = 0usize;
    for &(at, motif) in placements {
        if motif.granularity_s != g {
            return Err(Error::contract(format!(
                "motif granularity {}s differs from trace granularity {g}s",
                motif.granularity_s
            )));
        }
        if at >= n || (at < last_end && !windows.is_empty()) {
            continue;
        }
        let end = (at + motif.samples.len()).min(n);
        for (slot, &v) in rates[at..end].iter_mut().zip(&motif.samples) {
            *slot += v;
            injected += v * g as f64;
        }
        windows.push(IndexRange::new(at, end));
        last_end = end;
    }
    let reshaped = trace.with_rates(rates)?;
    Ok(DefenseOutcome::new(trace, reshaped, injected, 0.0, windows))
}

pub fn apply_pti(trace: &RateTrace, bank: &MotifBank, cfg: &DefenseConfig) -> Result<DefenseOutcome> {
    if cfg.method != DefenseMethod::Pti {
        return Err(Error::contract("apply_pti called with a non-PTI config"));
    }
    cfg.validate()?;
    if bank.is_empty() {
        return Err(Error::EmptyBank);
    }
    let mut rng = seed::rng(cfg.seed);
    let instants = poisson_instants(
        trace.len(),
        trace.granularity_s(),
        cfg.injection_rate_per_hour,
        cfg.bernoulli_p,
        &mut rng,
    );
    let placements: Vec<(usize, &Motif)> = instants
        .into_iter()
        .map(|at| (at, bank.get(rng.random_range(0..bank.len()))))
        .collect();
    inject_motifs(trace, &placements)
}
