//! Trace parsing, resampling, imputation, filtering, splitting, and the
//! synthetic home generator.

mod csv_io;
mod labels;
mod ops;
mod split;
pub mod synth;
mod trace;

pub use csv_io::{
    parse_labels, parse_trace, parse_trace_at, write_labels, write_traces, LABEL_HEADER,
    TRACE_HEADER,
};
pub use labels::{
    unsw_catalog, validate_labels, ActivityCatalog, ActivityLabel, ActivitySpec,
    UNSW_ACTIVITIES, UNSW_BACKGROUND_CAP_KB_S,
};
pub use ops::{background_filter, impute_knn, resample, Filtered};
pub use split::{split_dataset, split_stratified, DatasetSplit, TRAIN_FRACTION, VALIDATION_FRACTION};
pub use synth::{synth_activity_home, synth_home, ActivityHomeSpec, SynthHome};
pub use trace::{
    is_absent, sum_traces, Direction, RateTrace, TraceKey, BYTES_PER_KB, STANDARD_GRANULARITIES,
};
