use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `counts[t][p]` windows of true class `classes[t]` predicted as `classes[p]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<usize>,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OneVsRest {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Macro,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

pub fn f1_of(p: f64, r: f64) -> f64 {
    ratio(2.0 * p * r, p + r)
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<usize>) -> Self {
        let k = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(classes: Vec<usize>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = classes.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::contract("confusion counts must be square over the catalog"));
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn index_of(&self, class: usize) -> Option<usize> {
        self.classes.binary_search(&class).ok()
    }

    pub fn support(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn predicted(&self, i: usize) -> u64 {
        self.counts.iter().map(|r| r[i]).sum()
    }

    pub fn one_vs_rest(&self, i: usize) -> OneVsRest {
        let tp = self.counts[i][i];
        let fn_ = self.support(i) - tp;
        let fp = self.predicted(i) - tp;
        OneVsRest {
            tp,
            fp,
            fn_,
            tn: self.total() - tp - fn_ - fp,
        }
    }

    pub fn class_prf(&self, i: usize) -> Prf {
        let o = self.one_vs_rest(i);
        let p = ratio(o.tp as f64, (o.tp + o.fp) as f64);
        let r = ratio(o.tp as f64, (o.tp + o.fn_) as f64);
        Prf {
            precision: p,
            recall: r,
            f1: f1_of(p, r),
        }
    }

    pub fn accuracy(&self) -> f64 {
        let diag: u64 = (0..self.n_classes()).map(|i| self.counts[i][i]).sum();
        ratio(diag as f64, self.total() as f64)
    }
}

/// Confusion matrix from the first entry of each ranking. The catalog is the
/// sorted union of true and predicted classes.
pub fn build_confusion(preds: &[Vec<usize>], labels: &[usize]) -> Result<ConfusionMatrix> {
    let catalog: BTreeSet<usize> = labels
        .iter()
        .copied()
        .chain(preds.iter().filter_map(|r| r.first().copied()))
        .collect();
    build_confusion_over(catalog.into_iter().collect(), preds, labels)
}

pub fn build_confusion_over(classes: Vec<usize>, preds: &[Vec<usize>], labels: &[usize]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::contract(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(classes);
    for (i, (r, &l)) in preds.iter().zip(labels).enumerate() {
        let p = *r
            .first()
            .ok_or_else(|| Error::contract(format!("prediction {i} is empty")))?;
        let (t, q) = match (cm.index_of(l), cm.index_of(p)) {
            (Some(t), Some(q)) => (t, q),
            _ => return Err(Error::contract(format!("sample {i} uses a class outside the catalog"))),
        };
        cm.counts[t][q] += 1;
    }
    Ok(cm)
}

pub fn precision_recall_f1(cm: &ConfusionMatrix, averaging: Averaging) -> Prf {
    let k = cm.n_classes();
    let total = cm.total() as f64;
    let mut out = Prf::default();
    for i in 0..k {
        let c = cm.class_prf(i);
        let w = match averaging {
            Averaging::Macro => 1.0 / k as f64,
            Averaging::Weighted => ratio(cm.support(i) as f64, total),
        };
        out.precision += w * c.precision;
        out.recall += w * c.recall;
        out.f1 += w * c.f1;
    }
    out
}

/// Binary MCC from the four cells; a zero factor in the denominator gives 0.
pub fn mcc_binary(tp: f64, fp: f64, fn_: f64, tn: f64) -> f64 {
    let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    ratio(tp * tn - fp * fn_, den)
}

/// Multiclass MCC in covariance form:
/// `(c·s − Σ p_k t_k) / √((s² − Σ p_k²)(s² − Σ t_k²))` with `c` correct,
/// `s` total, `p_k` predicted and `t_k` true counts per class.
pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let k = cm.n_classes();
    let s = cm.total() as f64;
    let c: f64 = (0..k).map(|i| cm.counts[i][i] as f64).sum();
    let p: Vec<f64> = (0..k).map(|i| cm.predicted(i) as f64).collect();
    let t: Vec<f64> = (0..k).map(|i| cm.support(i) as f64).collect();
    let pt: f64 = p.iter().zip(&t).map(|(a, b)| a * b).sum();
    let pp: f64 = p.iter().map(|a| a * a).sum();
    let tt: f64 = t.iter().map(|a| a * a).sum();
    let den = ((s * s - pp) * (s * s - tt)).sqrt();
    ratio(c * s - pt, den).clamp(-1.0, 1.0)
}

pub fn topk_accuracy(ranked: &[Vec<usize>], labels: &[usize], k: usize) -> Result<f64> {
    if ranked.len() != labels.len() {
        return Err(Error::contract(format!(
            "{} rankings for {} labels",
            ranked.len(),
            labels.len()
        )));
    }
    if let Some(i) = ranked.iter().position(|r| r.len() < k) {
        return Err(Error::contract(format!("ranking {i} has fewer than {k} entries")));
    }
    let hits = ranked.iter().zip(labels).filter(|(r, l)| r[..k].contains(l)).count();
    Ok(ratio(hits as f64, labels.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn cm(counts: Vec<Vec<u64>>) -> ConfusionMatrix {
        let k = counts.len();
        ConfusionMatrix::from_counts((0..k).collect(), counts).unwrap()
    }

    #[test]
    fn perfect() {
        let m = cm(vec![vec![3, 0, 0], vec![0, 2, 0], vec![0, 0, 5]]);
        for a in [Averaging::Macro, Averaging::Weighted] {
            let p = precision_recall_f1(&m, a);
            assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(mcc(&m), 1.0);
    }

    #[test]
    fn constant_predictor_column() {
        let preds = vec![vec![1]; 6];
        let m = build_confusion(&preds, &[0, 1, 2, 0, 1, 2]).unwrap();
        for r in &m.counts {
            assert_eq!(r, &vec![0, 2, 0]);
        }
        assert_eq!(mcc(&m), 0.0);
    }

    #[test]
    fn binary_arithmetic() {
        // rows are true class, positive class first
        let m = cm(vec![vec![2, 1], vec![1, 6]]);
        let p = m.class_prf(0);
        for v in [p.precision, p.recall, p.f1] {
            assert!((v - 2.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(mcc(&cm(vec![vec![0, 3], vec![4, 0]])), -1.0);
    }

    #[test]
    fn tally_oracle() {
        let mut rng = seed::rng(5);
        let labels: Vec<usize> = (0..200).map(|_| rng.random_range(0..3)).collect();
        let preds: Vec<Vec<usize>> = (0..200).map(|_| vec![rng.random_range(0..3), 9]).collect();
        let m = build_confusion_over(vec![0, 1, 2, 9], &preds, &labels).unwrap();
        for t in 0..3 {
            for p in 0..3 {
                let n = labels.iter().zip(&preds).filter(|(&l, r)| l == t && r[0] == p).count();
                assert_eq!(m.counts[t][p], n as u64);
            }
        }
        assert_eq!(m.total(), 200);
        assert!(build_confusion(&preds[..3], &labels).is_err());
    }

    #[test]
    fn topk_counts() {
        let ranked = vec![vec![2, 0, 1], vec![0, 1, 2], vec![1, 2, 0]];
        let labels = [0, 0, 0];
        assert_eq!(topk_accuracy(&ranked, &labels, 1).unwrap(), 1.0 / 3.0);
        assert_eq!(topk_accuracy(&ranked, &labels, 2).unwrap(), 2.0 / 3.0);
        assert_eq!(topk_accuracy(&ranked, &labels, 3).unwrap(), 1.0);
        assert!(topk_accuracy(&ranked, &labels, 4).is_err());
    }
}
