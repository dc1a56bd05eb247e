//! Feature-based classifiers behind one fit / predict interface.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Standardizer};

use super::tree::{DecisionTree, RandomForest, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LogisticRegression,
    DecisionTree,
    RandomForest,
    KNearest,
    NaiveBayes,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::LogisticRegression,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::KNearest,
        ClassifierKind::NaiveBayes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::KNearest => "k_nearest",
            ClassifierKind::NaiveBayes => "naive_bayes",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "lr" => Some(ClassifierKind::LogisticRegression),
            "dt" => Some(ClassifierKind::DecisionTree),
            "rf" => Some(ClassifierKind::RandomForest),
            "knn" => Some(ClassifierKind::KNearest),
            "nb" => Some(ClassifierKind::NaiveBayes),
            _ => Self::ALL.into_iter().find(|k| k.name() == s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierHyper {
    pub lr_iterations: usize,
    pub lr_step: f64,
    pub lr_l2: f64,
    pub tree: TreeParams,
    pub n_trees: usize,
    /// Features per forest split; `None` means √d.
    pub forest_max_features: Option<usize>,
    pub k_neighbors: usize,
    pub nb_var_smoothing: f64,
}

impl Default for ClassifierHyper {
    fn default() -> Self {
        ClassifierHyper {
            lr_iterations: 500,
            lr_step: 0.5,
            lr_l2: 1e-4,
            tree: TreeParams::default(),
            n_trees: 100,
            forest_max_features: None,
            k_neighbors: 5,
            nb_var_smoothing: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Learned {
    Logistic {
        scaler: Standardizer,
        /// `classes × (d + 1)`, bias last.
        weights: Matrix,
    },
    Tree(DecisionTree),
    Forest(RandomForest),
    Nearest {
        scaler: Standardizer,
        train: Matrix,
        labels: Vec<usize>,
        k: usize,
    },
    Bayes {
        priors: Vec<f64>,
        means: Matrix,
        vars: Matrix,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub kind: ClassifierKind,
    /// Class ids; internal index `i` stands for `classes[i]`.
    pub classes: Vec<usize>,
    pub seed: u64,
    n_features: usize,
    learned: Learned,
}

pub fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    z.iter_mut().for_each(|v| *v /= s);
}

fn fit_logistic(x: &Matrix, y: &[usize], c: usize, h: &ClassifierHyper) -> Learned {
    let scaler = Standardizer::fit(x);
    let xs = scaler.apply(x);
    let (n, d) = (xs.rows(), xs.cols());
    let mut w = Matrix::zeros(c, d + 1);
    let mut p = vec![0.0; c];
    for _ in 0..h.lr_iterations {
        let mut grad = Matrix::zeros(c, d + 1);
        for i in 0..n {
            let row = xs.row(i);
            for (k, pk) in p.iter_mut().enumerate() {
                let wk = w.row(k);
                *pk = wk[d] + row.iter().zip(wk).map(|(a, b)| a * b).sum::<f64>();
            }
            softmax_in_place(&mut p);
            for k in 0..c {
                let e = p[k] - f64::from(u8::from(y[i] == k));
                let g = grad.row_mut(k);
                for j in 0..d {
                    g[j] += e * row[j];
                }
                g[d] += e;
            }
        }
        for k in 0..c {
            let (wk, gk) = (w.row_mut(k), grad.row(k));
            for j in 0..=d {
                let reg = if j < d { h.lr_l2 * wk[j] } else { 0.0 };
                wk[j] -= h.lr_step * (gk[j] / n as f64 + reg);
            }
        }
    }
    Learned::Logistic { scaler, weights: w }
}

fn fit_bayes(x: &Matrix, y: &[usize], c: usize, h: &ClassifierHyper) -> Learned {
    let d = x.cols();
    let mut counts = vec![0usize; c];
    let mut means = Matrix::zeros(c, d);
    for (i, &k) in y.iter().enumerate() {
        counts[k] += 1;
        for j in 0..d {
            means.set(k, j, means.get(k, j) + x.get(i, j));
        }
    }
    for k in 0..c {
        for j in 0..d {
            means.set(k, j, means.get(k, j) / counts[k] as f64);
        }
    }
    let mut vars = Matrix::zeros(c, d);
    for (i, &k) in y.iter().enumerate() {
        for j in 0..d {
            vars.set(k, j, vars.get(k, j) + (x.get(i, j) - means.get(k, j)).powi(2));
        }
    }
    let all_means = x.column_means();
    let max_var = x.column_stds(&all_means).iter().map(|s| s * s).fold(0.0, f64::max);
    let eps = h.nb_var_smoothing * max_var.max(1e-12);
    for k in 0..c {
        for j in 0..d {
            vars.set(k, j, vars.get(k, j) / counts[k] as f64 + eps);
        }
    }
    let n = y.len() as f64;
    Learned::Bayes {
        priors: counts.iter().map(|&k| k as f64 / n).collect(),
        means,
        vars,
    }
}

/// Fit `kind` on rows of `features` labelled by `labels` (arbitrary class ids).
pub fn train_classifier(
    kind: ClassifierKind,
    features: &Matrix,
    labels: &[usize],
    hyper: &ClassifierHyper,
    seed: u64,
) -> Result<ClassifierModel> {
    if features.rows() != labels.len() {
        return Err(Error::contract(format!(
            "{} feature rows for {} labels",
            features.rows(),
            labels.len()
        )));
    }
    let classes: Vec<usize> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(Error::contract("training data needs at least two classes"));
    }
    if features.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("features must be finite"));
    }
    let y: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("collected above"))
        .collect();
    let c = classes.len();
    let all: Vec<usize> = (0..y.len()).collect();
    let learned = match kind {
        ClassifierKind::LogisticRegression => fit_logistic(features, &y, c, hyper),
        ClassifierKind::DecisionTree => Learned::Tree(DecisionTree::fit(features, &y, &all, c, &hyper.tree, seed)),
        ClassifierKind::RandomForest => {
            let d = features.cols();
            let m = hyper
                .forest_max_features
                .unwrap_or_else(|| ((d as f64).sqrt().round() as usize).max(1));
            let params = TreeParams {
                max_features: Some(m),
                ..hyper.tree
            };
            Learned::Forest(RandomForest::fit(features, &y, c, hyper.n_trees.max(1), &params, seed))
        }
        ClassifierKind::KNearest => {
            if hyper.k_neighbors == 0 {
                return Err(Error::contract("k_neighbors must be positive"));
            }
            let scaler = Standardizer::fit(features);
            Learned::Nearest {
                train: scaler.apply(features),
                scaler,
                labels: y,
                k: hyper.k_neighbors,
            }
        }
        ClassifierKind::NaiveBayes => fit_bayes(features, &y, c, hyper),
    };
    Ok(ClassifierModel {
        kind,
        classes,
        seed,
        n_features: features.cols(),
        learned,
    })
}

impl ClassifierModel {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    fn proba_row(&self, row: &[f64]) -> Vec<f64> {
        let c = self.classes.len();
        let mut p = match &self.learned {
            Learned::Logistic { scaler, weights } => {
                let z = scaler.apply_row(row);
                let d = z.len();
                let mut p: Vec<f64> = (0..c)
                    .map(|k| {
                        let w = weights.row(k);
                        w[d] + z.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
                    })
                    .collect();
                softmax_in_place(&mut p);
                p
            }
            Learned::Tree(t) => t.predict_proba(row).to_vec(),
            Learned::Forest(f) => f.predict_proba(row),
            Learned::Nearest {
                scaler,
                train,
                labels,
                k,
            } => {
                let z = scaler.apply_row(row);
                let mut d: Vec<(f64, usize)> = train
                    .iter_rows()
                    .enumerate()
                    .map(|(i, r)| (r.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
                    .collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let k = (*k).min(d.len());
                let mut p = vec![0.0; c];
                for &(_, i) in &d[..k] {
                    p[labels[i]] += 1.0 / k as f64;
                }
                p
            }
            Learned::Bayes { priors, means, vars } => {
                let mut p: Vec<f64> = (0..c)
                    .map(|k| {
                        if priors[k] == 0.0 {
                            return f64::NEG_INFINITY;
                        }
                        let ll: f64 = row
                            .iter()
                            .enumerate()
                            .map(|(j, &x)| {
                                let v = vars.get(k, j);
                                -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - means.get(k, j)).powi(2) / v)
                            })
                            .sum();
                        priors[k].ln() + ll
                    })
                    .collect();
                softmax_in_place(&mut p);
                p
            }
        };
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        p
    }

    /// One probability row per input row, columns ordered like `classes`.
    pub fn predict_proba(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.n_features {
            return Err(Error::contract(format!(
                "model expects {} features, got {}",
                self.n_features,
                features.cols()
            )));
        }
        let rows: Vec<Vec<f64>> = features.iter_rows().map(|r| self.proba_row(r)).collect();
        if rows.is_empty() {
            return Ok(Matrix::zeros(0, self.classes.len()));
        }
        Matrix::from_rows(&rows)
    }
}

/// Class ids of one probability row, most probable first; equal
/// probabilities go to the smaller class id.
pub fn rank_classes(proba: &[f64], classes: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..proba.len()).collect();
    idx.sort_by(|&a, &b| proba[b].total_cmp(&proba[a]).then(classes[a].cmp(&classes[b])));
    idx.into_iter().map(|i| classes[i]).collect()
}

pub fn predict_topk(model: &ClassifierModel, features: &Matrix, k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > model.n_classes() {
        return Err(Error::contract(format!(
            "k = {k} outside 1..={} classes",
            model.n_classes()
        )));
    }
    let p = model.predict_proba(features)?;
    Ok(p.iter_rows()
        .map(|r| {
            let mut ranked = rank_classes(r, &model.classes);
            ranked.truncate(k);
            ranked
        })
        .collect())
}
