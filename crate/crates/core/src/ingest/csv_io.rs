//! Trace and label CSV formats.
//!
//! Trace CSV: header `epoch_s,device_id,direction,bytes`, one row per
//! observation, rows in any order. Bytes are summed per (device, direction,
//! time bin) and converted to KB/s.
//!
//! Label CSV: header `activity_id,start_epoch_s,end_epoch_s,device_ids`,
//! where `device_ids` is a `;`-separated list of `device:in`, `device:out`, or
//! a bare `device` meaning both directions.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::labels::ActivityLabel;
use super::trace::{is_absent, Direction, RateTrace, TraceKey, BYTES_PER_KB};

pub const TRACE_HEADER: [&str; 4] = ["epoch_s", "device_id", "direction", "bytes"];
pub const LABEL_HEADER: [&str; 4] = ["activity_id", "start_epoch_s", "end_epoch_s", "device_ids"];

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = rdr
        .headers()
        .map_err(|e| Error::Format(format!("cannot read header: {e}")))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Format(format!(
            "expected header `{}`, found `{}`",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn reader(src: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(src)
}

/// Parse a trace CSV at 1 s granularity.
pub fn parse_trace(src: impl Read) -> Result<Vec<RateTrace>> {
    parse_trace_at(src, 1)
}

/// Parse a trace CSV, binning rows into `granularity_s` intervals.
///
/// Each trace spans its own first to last observed bin; bins without rows are
/// absent. Output is ordered by (device_id, direction).
pub fn parse_trace_at(src: impl Read, granularity_s: u32) -> Result<Vec<RateTrace>> {
    if granularity_s == 0 {
        return Err(Error::contract("granularity must be positive"));
    }
    let mut rdr = reader(src);
    check_header(&mut rdr, &TRACE_HEADER)?;

    let g = granularity_s as i64;
    let mut bins: BTreeMap<TraceKey, BTreeMap<i64, f64>> = BTreeMap::new();
    let mut bad_ts = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 4 {
            return Err(Error::Format(format!("row {row}: expected 4 fields")));
        }
        let Ok(epoch) = rec[0].parse::<i64>() else {
            bad_ts.push(row);
            continue;
        };
        let device = &rec[1];
        if device.is_empty() {
            return Err(Error::Validation {
                row,
                msg: "empty device_id".into(),
            });
        }
        let direction = Direction::parse(&rec[2]).ok_or_else(|| Error::Validation {
            row,
            msg: format!("direction `{}` is not `in` or `out`", &rec[2]),
        })?;
        let bytes: f64 = rec[3].parse().map_err(|_| Error::Validation {
            row,
            msg: format!("byte count `{}` is not a number", &rec[3]),
        })?;
        if !bytes.is_finite() || bytes < 0.0 {
            return Err(Error::Validation {
                row,
                msg: format!("negative or non-finite byte count {bytes}"),
            });
        }
        *bins
            .entry(TraceKey::new(device, direction))
            .or_default()
            .entry(epoch.div_euclid(g))
            .or_insert(0.0) += bytes;
    }
    if !bad_ts.is_empty() {
        return Err(Error::BadTimestamps { rows: bad_ts });
    }

    bins.into_iter()
        .map(|(key, per_bin)| {
            let first = *per_bin.keys().next().expect("non-empty by construction");
            let last = *per_bin.keys().next_back().expect("non-empty by construction");
            let mut rates = vec![f64::NAN; (last - first + 1) as usize];
            for (b, bytes) in per_bin {
                rates[(b - first) as usize] = bytes / BYTES_PER_KB / g as f64;
            }
            RateTrace::from_key(key, granularity_s, first * g, rates)
        })
        .collect()
}

/// Write traces in the trace CSV format, one row per present sample.
///
/// Rows are ordered by trace order, then time. Absent samples produce no row.
pub fn write_traces(traces: &[RateTrace], dst: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    let err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(TRACE_HEADER).map_err(err)?;
    for t in traces {
        let g = t.granularity_s() as f64;
        for (i, &v) in t.rates().iter().enumerate() {
            if is_absent(v) {
                continue;
            }
            let bytes = v * BYTES_PER_KB * g;
            w.write_record([
                t.epoch_of(i).to_string(),
                t.device_id().to_string(),
                t.direction().to_string(),
                format!("{bytes}"),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

fn parse_device_tokens(field: &str, row: usize) -> Result<BTreeSet<TraceKey>> {
    let mut out = BTreeSet::new();
    for tok in field.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        match tok.rsplit_once(':') {
            Some((dev, dir)) => {
                let d = Direction::parse(dir).ok_or_else(|| Error::Validation {
                    row,
                    msg: format!("bad direction in `{tok}`"),
                })?;
                out.insert(TraceKey::new(dev, d));
            }
            None => {
                out.insert(TraceKey::new(tok, Direction::In));
                out.insert(TraceKey::new(tok, Direction::Out));
            }
        }
    }
    Ok(out)
}

pub fn parse_labels(src: impl Read) -> Result<Vec<ActivityLabel>> {
    let mut rdr = reader(src);
    check_header(&mut rdr, &LABEL_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 4 {
            return Err(Error::Format(format!("row {row}: expected 4 fields")));
        }
        let num = |i: usize, what: &str| -> Result<i64> {
            rec[i].parse().map_err(|_| Error::Validation {
                row,
                msg: format!("{what} `{}` is not an integer", &rec[i]),
            })
        };
        let id = num(0, "activity_id")?;
        let id = u32::try_from(id).map_err(|_| Error::Validation {
            row,
            msg: format!("activity_id {id} out of range"),
        })?;
        let start = num(1, "start_epoch_s")?;
        let end = num(2, "end_epoch_s")?;
        if end <= start {
            return Err(Error::Validation {
                row,
                msg: "end_epoch_s must exceed start_epoch_s".into(),
            });
        }
        out.push(ActivityLabel {
            activity_id: id,
            device_events: parse_device_tokens(&rec[3], row)?,
            start_epoch_s: start,
            end_epoch_s: end,
        });
    }
    Ok(out)
}

pub fn write_labels(labels: &[ActivityLabel], dst: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    let err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(LABEL_HEADER).map_err(err)?;
    for l in labels {
        let devices = l
            .device_events
            .iter()
            .map(|k| k.to_string())
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            l.activity_id.to_string(),
            l.start_epoch_s.to_string(),
            l.end_epoch_s.to_string(),
            devices,
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}
