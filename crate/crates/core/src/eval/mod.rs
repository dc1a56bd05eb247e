//! Scoring of attack outputs: confusion matrices, MCC, top-k and reports.

pub mod metrics;
pub mod report;
pub mod sweep;

pub use metrics::{
    build_confusion, build_confusion_over, f1_of, mcc, mcc_binary, precision_recall_f1, topk_accuracy, Averaging,
    ConfusionMatrix, OneVsRest, Prf,
};
pub use report::{
    emit_report, epsilon_security, evaluate, peak_rss_kb, read_report, render_table, report_json, topk_list, ClassRow,
    EnvironmentRecord, EvalReport, LedgerSummary, ReportDocument, ReportMeta, REPORT_SCHEMA, TABLE_HEADER,
};
pub use sweep::{adversary_confidence_sweep, least_squares_slope, AdversaryConfidenceCurve};
