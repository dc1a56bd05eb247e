use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::defense::DefenseOutcome;
use crate::error::{Error, Result};

use super::metrics::{
    build_confusion_over, mcc, mcc_binary, precision_recall_f1, topk_accuracy, Averaging, ConfusionMatrix, Prf,
};

pub const REPORT_SCHEMA: &str = "trafficbench/1";
pub const TABLE_HEADER: [&str; 7] = ["Activity", "Top 1", "Top 5", "MCC", "Precision", "Recall", "F1 score"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: usize,
    pub support: u64,
    pub top1: f64,
    pub top5: f64,
    pub mcc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Summed defense ledger over the traces an attack saw. Volumes in KB.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub genuine_kb: f64,
    pub injected_kb: f64,
    pub padded_kb: f64,
    /// Absent when there was no genuine traffic to relate the overhead to.
    pub overhead_pct: Option<f64>,
}

impl LedgerSummary {
    pub fn from_outcomes(outcomes: &[DefenseOutcome]) -> Self {
        let genuine_kb: f64 = outcomes.iter().map(|o| o.genuine_kb).sum();
        let injected_kb: f64 = outcomes.iter().map(|o| o.injected_kb).sum();
        let padded_kb: f64 = outcomes.iter().map(|o| o.padded_kb).sum();
        let pct = crate::defense::overhead_pct(genuine_kb, injected_kb + padded_kb);
        LedgerSummary {
            genuine_kb,
            injected_kb,
            padded_kb,
            overhead_pct: pct.is_finite().then_some(pct),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMeta {
    pub seed: u64,
    pub defense: String,
    pub attack: String,
    pub representations: Vec<String>,
    pub n_train: usize,
    pub n_test: usize,
    /// Fraction of test windows folded into training.
    pub knowledge_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub top1: f64,
    pub top5: f64,
    /// Rank cut-off actually used for `top5` (smaller when fewer classes exist).
    pub top5_k: usize,
    pub macro_avg: Prf,
    pub weighted_avg: Prf,
    pub mcc: f64,
    pub epsilon_security: f64,
    pub per_class: Vec<ClassRow>,
    pub confusion: ConfusionMatrix,
    pub ledger: Option<LedgerSummary>,
    pub metadata: ReportMeta,
    /// Extra Top-k accuracies requested by the caller, as `(k, accuracy)`.
    #[serde(default)]
    pub topk: Vec<(usize, f64)>,
}

/// Score full class rankings against labels over the class catalog.
pub fn evaluate(ranked: &[Vec<usize>], labels: &[usize], classes: &[usize]) -> Result<EvalReport> {
    if labels.is_empty() {
        return Err(Error::contract("nothing to evaluate"));
    }
    let mut catalog = classes.to_vec();
    catalog.sort_unstable();
    catalog.dedup();
    let cm = build_confusion_over(catalog.clone(), ranked, labels)?;
    let k5 = 5.min(catalog.len());
    let top1 = topk_accuracy(ranked, labels, 1)?;
    let top5 = topk_accuracy(ranked, labels, k5)?;
    let total = cm.total();
    let per_class = (0..cm.n_classes())
        .map(|i| {
            let o = cm.one_vs_rest(i);
            let prf = cm.class_prf(i);
            let class = catalog[i];
            let mine: Vec<usize> = (0..labels.len()).filter(|&j| labels[j] == class).collect();
            let hits5 = mine.iter().filter(|&&j| ranked[j][..k5].contains(&class)).count();
            ClassRow {
                class,
                support: cm.support(i),
                top1: prf.recall,
                top5: if mine.is_empty() { 0.0 } else { hits5 as f64 / mine.len() as f64 },
                mcc: mcc_binary(o.tp as f64, o.fp as f64, o.fn_ as f64, o.tn as f64),
                precision: prf.precision,
                recall: prf.recall,
                f1: prf.f1,
            }
        })
        .collect();
    debug_assert_eq!(total as usize, labels.len());
    Ok(EvalReport {
        top1,
        top5,
        top5_k: k5,
        macro_avg: precision_recall_f1(&cm, Averaging::Macro),
        weighted_avg: precision_recall_f1(&cm, Averaging::Weighted),
        mcc: mcc(&cm),
        epsilon_security: top1,
        per_class,
        confusion: cm,
        ledger: None,
        metadata: ReportMeta::default(),
        topk: Vec::new(),
    })
}

/// Top-k accuracy for each `k` in `ks`.
pub fn topk_list(ranked: &[Vec<usize>], labels: &[usize], ks: &[usize]) -> Result<Vec<(usize, f64)>> {
    ks.iter().map(|&k| Ok((k, topk_accuracy(ranked, labels, k)?))).collect()
}

/// ε: Top-1 of the strongest attack among reports on the same defended data.
pub fn epsilon_security(reports: &[&EvalReport]) -> Result<f64> {
    reports
        .iter()
        .map(|r| r.top1)
        .reduce(f64::max)
        .ok_or_else(|| Error::contract("ε needs at least one attack report"))
}

fn pct(v: f64) -> String {
    format!("{:.1}%", 100.0 * v)
}

/// Fixed-layout text table: an `all` row with weighted averages and the
/// multiclass MCC, then one row per class.
pub fn render_table(report: &EvalReport) -> String {
    let mut rows: Vec<[String; 7]> = vec![TABLE_HEADER.map(String::from)];
    let w = &report.weighted_avg;
    rows.push([
        "all".into(),
        pct(report.top1),
        pct(report.top5),
        format!("{:.3}", report.mcc),
        format!("{:.3}", w.precision),
        format!("{:.3}", w.recall),
        format!("{:.3}", w.f1),
    ]);
    for c in &report.per_class {
        rows.push([
            c.class.to_string(),
            pct(c.top1),
            pct(c.top5),
            format!("{:.3}", c.mcc),
            format!("{:.3}", c.precision),
            format!("{:.3}", c.recall),
            format!("{:.3}", c.f1),
        ]);
    }
    let widths: Vec<usize> = (0..7).map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, r) in rows.iter().enumerate() {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (c, &w))| if j == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        writeln!(out, "{}", cells.join(" | ")).expect("string write");
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            writeln!(out, "{}", rule.join("-|-")).expect("string write");
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub reports: Vec<EvalReport>,
}

/// Wall-clock and peak memory of the producing process. Written beside the
/// report rather than inside it, so report bytes depend only on inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentRecord {
    pub wall_clock_s: f64,
    pub peak_rss_kb: Option<u64>,
    pub threads: usize,
    pub os: String,
    pub arch: String,
    pub version: String,
}

impl EnvironmentRecord {
    pub fn capture(wall_clock_s: f64) -> Self {
        EnvironmentRecord {
            wall_clock_s,
            peak_rss_kb: peak_rss_kb(),
            threads: rayon::current_num_threads(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// `VmHWM` from `/proc/self/status` where available.
pub fn peak_rss_kb() -> Option<u64> {
    let s = fs::read_to_string("/proc/self/status").ok()?;
    s.lines()
        .find(|l| l.starts_with("VmHWM:"))?
        .split_whitespace()
        .nth(1)?
        .parse()
        .ok()
}

pub fn report_json(reports: &[EvalReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::contract("no reports to emit"));
    }
    let doc = ReportDocument {
        schema: REPORT_SCHEMA.into(),
        reports: reports.to_vec(),
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

/// Write `path` (JSON), the text tables next to it (`.txt`), and, when
/// given, the environment record as `environment.json` in the same directory.
pub fn emit_report(reports: &[EvalReport], path: &Path, environment: Option<&EnvironmentRecord>) -> Result<()> {
    let json = report_json(reports)?;
    fs::write(path, json).map_err(|e| Error::io(path, e))?;
    let tables: Vec<String> = reports
        .iter()
        .map(|r| {
            let m = &r.metadata;
            format!(
                "defense: {}  attack: {}  level: {}\n{}",
                m.defense,
                m.attack,
                m.knowledge_level,
                render_table(r)
            )
        })
        .collect();
    let txt = sibling(path, "txt");
    fs::write(&txt, tables.join("\n")).map_err(|e| Error::io(&txt, e))?;
    if let Some(env) = environment {
        let p = path.parent().unwrap_or(Path::new(".")).join("environment.json");
        fs::write(&p, serde_json::to_string_pretty(env)?).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

pub fn read_report(path: &Path) -> Result<ReportDocument> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: ReportDocument = serde_json::from_str(&s)?;
    if doc.schema != REPORT_SCHEMA {
        return Err(Error::Format(format!("unsupported report schema {}", doc.schema)));
    }
    Ok(doc)
}
