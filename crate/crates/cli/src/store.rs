//! Trace store: a directory holding canonical trace and label CSVs, the
//! activity catalog, a manifest, and for defended stores the defense ledger.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};
use trafficbench::attack::{Dataset, DefendedDataset};
use trafficbench::defense::{overhead_pct, DefenseConfig, DefenseOutcome, IndexRange};
use trafficbench::ingest::{parse_labels, parse_trace_at, write_labels, write_traces, ActivityCatalog, RateTrace};
use trafficbench::Error;

use crate::CliError;

pub const STORE_SCHEMA: &str = "trafficbench-store/1";
const TRACES: &str = "traces.csv";
const LABELS: &str = "labels.csv";
const CATALOG: &str = "catalog.json";
const MANIFEST: &str = "manifest.json";
const LEDGER: &str = "ledger.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub granularity_s: u32,
    pub start_epoch_s: i64,
    pub samples: usize,
    pub traces: Vec<String>,
    pub labels: usize,
    pub defense: Option<DefenseConfig>,
}

/// Ledger row of one defended trace. Volumes in KB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub trace: String,
    pub genuine_kb: f64,
    pub injected_kb: f64,
    pub padded_kb: f64,
    /// Absent when the overhead is unbounded.
    pub overhead_pct: Option<f64>,
    pub injected_windows: Vec<IndexRange>,
}

/// Contents of a store: the traces (defended or not) with their labels, and
/// the defense that produced them.
#[derive(Debug, Clone)]
pub struct Store {
    pub dataset: Dataset,
    pub defense: Option<DefenseConfig>,
    pub ledger: Vec<LedgerRow>,
}

impl Store {
    /// The store's traces as a defended dataset; an undefended store counts
    /// as the identity defense.
    pub fn defended(&self) -> DefendedDataset {
        let outcomes = if self.ledger.is_empty() {
            self.dataset.traces.iter().map(DefenseOutcome::identity).collect()
        } else {
            self.dataset
                .traces
                .iter()
                .zip(&self.ledger)
                .map(|(t, row)| DefenseOutcome {
                    reshaped: t.clone(),
                    genuine_kb: row.genuine_kb,
                    injected_kb: row.injected_kb,
                    padded_kb: row.padded_kb,
                    overhead_pct: overhead_pct(row.genuine_kb, row.injected_kb + row.padded_kb),
                    injected_windows: row.injected_windows.clone(),
                })
                .collect()
        };
        DefendedDataset {
            defense: self.defense.as_ref().map_or("identity", |d| d.method.name()).to_string(),
            traces: self.dataset.traces.clone(),
            outcomes,
        }
    }
}

pub fn ledger_rows(outcomes: &[DefenseOutcome]) -> Vec<LedgerRow> {
    outcomes
        .iter()
        .map(|o| LedgerRow {
            trace: o.reshaped.key().to_string(),
            genuine_kb: o.genuine_kb,
            injected_kb: o.injected_kb,
            padded_kb: o.padded_kb,
            overhead_pct: o.overhead_pct.is_finite().then_some(o.overhead_pct),
            injected_windows: o.injected_windows.clone(),
        })
        .collect()
}

/// Pad every trace to the common span, then fill absent samples: with zero
/// traffic when `impute_k` is 0, else by k-nearest-neighbour imputation.
pub fn align_traces(traces: Vec<RateTrace>, impute_k: usize) -> Result<Vec<RateTrace>, Error> {
    let Some(first) = traces.first() else {
        return Ok(traces);
    };
    let g = first.granularity_s() as i64;
    let start = traces.iter().map(RateTrace::start_epoch_s).min().unwrap_or(0);
    let end = traces.iter().map(RateTrace::end_epoch_s).max().unwrap_or(0);
    let len = ((end - start) / g) as usize;
    traces
        .into_iter()
        .map(|t| {
            let offset = ((t.start_epoch_s() - start) / g) as usize;
            let mut rates = vec![f64::NAN; len];
            rates[offset..offset + t.len()].copy_from_slice(t.rates());
            let t = RateTrace::from_key(t.key().clone(), t.granularity_s(), start, rates)?;
            if impute_k == 0 {
                let filled = t.rates().iter().map(|&v| if v.is_nan() { 0.0 } else { v }).collect();
                t.with_rates(filled)
            } else {
                trafficbench::ingest::impute_knn(&t, impute_k)
            }
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_store(
    dir: &Path,
    dataset: &Dataset,
    defense: Option<&DefenseConfig>,
    ledger: &[LedgerRow],
) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_traces(&dataset.traces, create(&dir.join(TRACES))?)?;
    write_labels(&dataset.labels, create(&dir.join(LABELS))?)?;
    write_json(&dir.join(CATALOG), &dataset.catalog)?;
    if defense.is_some() {
        write_json(&dir.join(LEDGER), &ledger)?;
    }
    let first = dataset.traces.first();
    let manifest = Manifest {
        schema: STORE_SCHEMA.into(),
        granularity_s: first.map_or(1, RateTrace::granularity_s),
        start_epoch_s: first.map_or(0, RateTrace::start_epoch_s),
        samples: first.map_or(0, RateTrace::len),
        traces: dataset.traces.iter().map(|t| t.key().to_string()).collect(),
        labels: dataset.labels.len(),
        defense: defense.cloned(),
    };
    write_json(&dir.join(MANIFEST), &manifest)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn open(path: &Path) -> Result<File, Error> {
    File::open(path).map_err(|e| Error::io(path, e))
}

pub fn read_store(dir: &Path) -> Result<Store, CliError> {
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.is_file() {
        return Err(CliError::Usage(format!("not a trace store (no manifest): {}", dir.display())));
    }
    let manifest: Manifest = read_json(&manifest_path)?;
    if manifest.schema != STORE_SCHEMA {
        return Err(CliError::Usage(format!(
            "{}: unsupported store schema `{}`",
            manifest_path.display(),
            manifest.schema
        )));
    }
    let traces = parse_trace_at(open(&dir.join(TRACES))?, manifest.granularity_s)?;
    let traces = align_traces(traces, 0)?;
    let labels = parse_labels(open(&dir.join(LABELS))?)?;
    let catalog: ActivityCatalog = read_json(&dir.join(CATALOG))?;
    let keys: Vec<String> = traces.iter().map(|t| t.key().to_string()).collect();
    if keys != manifest.traces {
        return Err(Error::Format(format!("{}: traces do not match the manifest", dir.display())).into());
    }
    let ledger: Vec<LedgerRow> = if manifest.defense.is_some() {
        read_json(&dir.join(LEDGER))?
    } else {
        Vec::new()
    };
    if !ledger.is_empty() && ledger.len() != traces.len() {
        return Err(Error::Format(format!("{}: ledger does not cover every trace", dir.display())).into());
    }
    Ok(Store {
        dataset: Dataset {
            traces,
            labels,
            catalog,
        },
        defense: manifest.defense,
        ledger,
    })
}
