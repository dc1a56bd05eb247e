//! Traffic-reshaping defenses with byte-exact overhead accounting.

mod bank;
mod config;
mod htr;
mod markov;
mod outcome;
mod plugin;
mod pti;
mod rtp;

pub use bank::{build_motif_bank, MotifBank};
pub use config::{default_flatten_threshold, rate_quantile, DefenseConfig, DefenseMethod};
pub use htr::{apply_htr, flatten_buffered};
pub use markov::{fit_markov_model, smoothed_transitions, MarkovUserModel, SimulatedEvent};
pub use outcome::{compute_overhead, overhead_pct, DefenseOutcome, IndexRange, LEDGER_TOLERANCE};
pub use plugin::{DefenseContext, DefenseRegistry, PluginOutput, TrafficReshaper};
pub use pti::{apply_pti, inject_motifs};
pub use rtp::apply_rtp;
