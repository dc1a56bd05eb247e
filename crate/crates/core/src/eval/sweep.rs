//! Adaptive adversary: fold a growing share of the target's test windows
//! into training and re-score.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::attack::{fit_and_rank, Dataset, DefendedDataset, PipelineConfig, WindowSet};
use crate::error::{Error, Result};
use crate::ingest::DatasetSplit;
use crate::seed;

use super::report::{evaluate, EvalReport, ReportMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryConfidenceCurve {
    pub levels: Vec<f64>,
    pub mcc: Vec<f64>,
    pub reports: Vec<EvalReport>,
}

impl AdversaryConfidenceCurve {
    /// Least-squares slope of MCC against level.
    pub fn slope(&self) -> f64 {
        least_squares_slope(&self.levels, &self.mcc)
    }

    pub fn write_csv(&self, dst: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(dst);
        let io = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["level", "mcc", "top1", "n_train", "n_test"]).map_err(io)?;
        for (q, r) in self.levels.iter().zip(&self.reports) {
            w.write_record([
                q.to_string(),
                r.mcc.to_string(),
                r.top1.to_string(),
                r.metadata.n_train.to_string(),
                r.metadata.n_test.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::contract("knowledge levels must not be empty"));
    }
    if levels.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(Error::contract("knowledge levels must lie in [0, 1]"));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::contract("knowledge levels must be strictly increasing"));
    }
    Ok(())
}

/// One report per level. At level `q < 1` a seeded `round(q·n)` of the `n`
/// test windows joins the training windows and the rest are scored; at
/// level 1 the attacker trains on every test window and is scored on all of
/// them. The attack seed is the same at every level, so level 0 reproduces
/// the plain pipeline run.
pub fn adversary_confidence_sweep(
    cfg: &PipelineConfig,
    ds: &Dataset,
    defended: &DefendedDataset,
    windows: &WindowSet,
    split: &DatasetSplit,
    levels: &[f64],
    seed: u64,
) -> Result<AdversaryConfidenceCurve> {
    check_levels(levels)?;
    let mut fit: Vec<usize> = split.train.iter().chain(&split.validation).copied().collect();
    fit.sort_unstable();
    let test: Vec<usize> = windows
        .positions_of(&split.test)
        .into_iter()
        .map(|p| windows.label_index[p])
        .collect();
    if test.is_empty() {
        return Err(Error::contract("no test windows to leak"));
    }
    let catalog = ds.classes();
    let mut curve = AdversaryConfidenceCurve {
        levels: levels.to_vec(),
        mcc: Vec::new(),
        reports: Vec::new(),
    };
    for (li, &q) in levels.iter().enumerate() {
        let (leaked, scored) = if q >= 1.0 {
            (test.clone(), test.clone())
        } else {
            let k = (q * test.len() as f64).round() as usize;
            let mut order = test.clone();
            order.shuffle(&mut seed::rng(seed::derive(seed, li as u64 + 1)));
            let mut leaked = order[..k].to_vec();
            let mut scored = order[k..].to_vec();
            leaked.sort_unstable();
            scored.sort_unstable();
            (leaked, scored)
        };
        if scored.is_empty() {
            return Err(Error::contract(format!("level {q} leaves no test windows to score")));
        }
        let mut train = fit.clone();
        train.extend(&leaked);
        train.sort_unstable();
        let (ranked, labels, _) = fit_and_rank(cfg, windows, &train, &scored, &catalog, seed)?;
        let mut report = evaluate(&ranked, &labels, &catalog)?;
        report.ledger = Some(defended.ledger());
        report.metadata = ReportMeta {
            seed,
            defense: defended.defense.clone(),
            attack: cfg.attack.name(),
            representations: Vec::new(),
            n_train: windows.training_samples(&train).len(),
            n_test: scored.len(),
            knowledge_level: q,
        };
        curve.mcc.push(report.mcc);
        curve.reports.push(report);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{attack_windows, build_windows, defend_dataset, defense_config_for, AttackKind, ClassifierKind};
    use crate::defense::{DefenseMethod, DefenseRegistry};
    use crate::ingest::{split_stratified, synth_activity_home, ActivityHomeSpec};
    use crate::seed::Stage;

    #[test]
    fn slope_of_a_line() {
        assert!((least_squares_slope(&[0.0, 0.5, 1.0], &[1.0, 2.0, 3.0]) - 2.0).abs() < 1e-12);
        assert_eq!(least_squares_slope(&[1.0], &[1.0]), 0.0);
    }

    #[test]
    fn level_rules() {
        let ds: Dataset = synth_activity_home(&ActivityHomeSpec::desk_fixture(4)).unwrap().into();
        let cfg = PipelineConfig {
            attack: AttackKind::Feature(ClassifierKind::KNearest),
            classifier: crate::attack::ClassifierHyper {
                k_neighbors: 1,
                ..Default::default()
            },
            ..PipelineConfig::default()
        };
        let split = split_stratified(&ds.label_classes(), seed::stage_seed(4, Stage::Split)).unwrap();
        let dcfg = defense_config_for(DefenseMethod::Pti, &ds.traces, 4).unwrap();
        let defended = defend_dataset(&ds, &dcfg, &cfg.motif, &DefenseRegistry::new()).unwrap();
        let w = build_windows(&cfg, &ds.labels, &defended.traces).unwrap();
        let curve = adversary_confidence_sweep(&cfg, &ds, &defended, &w, &split, &[0.0, 0.5, 1.0], 9).unwrap();
        let base = attack_windows(&cfg, &ds, &defended, &w, &split, 9).unwrap();
        assert_eq!(curve.reports[0].confusion, base.report.confusion);
        assert_eq!(curve.reports[0].mcc, base.report.mcc);
        assert_eq!(curve.reports[2].top1, 1.0);
        assert!(adversary_confidence_sweep(&cfg, &ds, &defended, &w, &split, &[], 9).is_err());
        assert!(adversary_confidence_sweep(&cfg, &ds, &defended, &w, &split, &[0.5, 0.2], 9).is_err());
    }
}
