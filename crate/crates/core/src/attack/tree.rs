//! CART decision trees (gini) and bagged random forests.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        proba: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 12,
            min_samples_split: 2,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    pub n_classes: usize,
}

pub fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

/// Size-weighted child impurity of a split.
pub fn split_impurity(left: &[usize], right: &[usize]) -> f64 {
    let nl: usize = left.iter().sum();
    let nr: usize = right.iter().sum();
    let n = (nl + nr) as f64;
    (nl as f64 * gini(left, nl) + nr as f64 * gini(right, nr)) / n
}

#[derive(Debug, Clone, Copy)]
pub struct BestSplit {
    pub feature: usize,
    pub threshold: f64,
    pub impurity: f64,
}

/// Lexicographic order on a feature's training column; breaks impurity ties
/// without reference to column position.
fn column_order(x: &Matrix, rows: &[usize], a: usize, b: usize) -> Ordering {
    for &r in rows {
        match x.get(r, a).total_cmp(&x.get(r, b)) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Lowest-impurity threshold split over `features`. Thresholds are midpoints
/// between consecutive distinct values; ties go to the lower threshold, then
/// to the lexicographically smaller column.
pub fn best_split(x: &Matrix, y: &[usize], rows: &[usize], features: &[usize], n_classes: usize) -> Option<BestSplit> {
    let mut best: Option<BestSplit> = None;
    let mut total = vec![0usize; n_classes];
    for &r in rows {
        total[y[r]] += 1;
    }
    let mut order: Vec<usize> = rows.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
        let mut left = vec![0usize; n_classes];
        let mut right = total.clone();
        for w in 0..order.len() - 1 {
            let r = order[w];
            left[y[r]] += 1;
            right[y[r]] -= 1;
            let (v0, v1) = (x.get(r, f), x.get(order[w + 1], f));
            if v0 == v1 {
                continue;
            }
            let imp = split_impurity(&left, &right);
            let threshold = v0 + (v1 - v0) / 2.0;
            let better = match &best {
                None => true,
                Some(b) => {
                    imp < b.impurity
                        || (imp == b.impurity
                            && b.feature != f
                            && column_order(x, rows, f, b.feature) == Ordering::Less)
                }
            };
            if better {
                best = Some(BestSplit {
                    feature: f,
                    threshold,
                    impurity: imp,
                });
            }
        }
    }
    best
}

fn leaf(y: &[usize], rows: &[usize], n_classes: usize) -> Node {
    let mut p = vec![0.0; n_classes];
    for &r in rows {
        p[y[r]] += 1.0;
    }
    let n = rows.len() as f64;
    p.iter_mut().for_each(|v| *v /= n);
    Node::Leaf { proba: p }
}

fn grow(
    x: &Matrix,
    y: &[usize],
    rows: &[usize],
    depth: usize,
    params: &TreeParams,
    n_classes: usize,
    rng: &mut impl Rng,
) -> Node {
    let pure = rows.iter().all(|&r| y[r] == y[rows[0]]);
    if pure || depth >= params.max_depth || rows.len() < params.min_samples_split.max(2) {
        return leaf(y, rows, n_classes);
    }
    let d = x.cols();
    let features: Vec<usize> = match params.max_features {
        Some(m) if m < d => {
            let mut f = sample(rng, d, m.max(1)).into_vec();
            f.sort_unstable();
            f
        }
        _ => (0..d).collect(),
    };
    let parent = {
        let mut c = vec![0usize; n_classes];
        rows.iter().for_each(|&r| c[y[r]] += 1);
        gini(&c, rows.len())
    };
    match best_split(x, y, rows, &features, n_classes) {
        Some(s) if s.impurity < parent => {
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, s.feature) <= s.threshold);
            Node::Split {
                feature: s.feature,
                threshold: s.threshold,
                left: Box::new(grow(x, y, &l, depth + 1, params, n_classes, rng)),
                right: Box::new(grow(x, y, &r, depth + 1, params, n_classes, rng)),
            }
        }
        _ => leaf(y, rows, n_classes),
    }
}

impl DecisionTree {
    pub fn fit(x: &Matrix, y: &[usize], rows: &[usize], n_classes: usize, params: &TreeParams, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        DecisionTree {
            root: grow(x, y, rows, 0, params, n_classes, &mut rng),
            n_classes,
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> &[f64] {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { proba } => return proba,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn d(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + d(left).max(d(right)),
            }
        }
        d(&self.root)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_classes: usize,
}

impl RandomForest {
    /// Each tree sees a bootstrap resample drawn from `derive(seed, t)`.
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, n_trees: usize, params: &TreeParams, seed: u64) -> Self {
        let n = x.rows();
        let trees = (0..n_trees)
            .map(|t| {
                let s = seed::derive(seed, t as u64);
                let mut rng = seed::rng(s);
                let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                DecisionTree::fit(x, y, &rows, n_classes, params, seed::derive(s, 1))
            })
            .collect();
        RandomForest { trees, n_classes }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (a, b) in p.iter_mut().zip(t.predict_proba(row)) {
                *a += b;
            }
        }
        let k = self.trees.len() as f64;
        p.iter_mut().for_each(|v| *v /= k);
        p
    }
}
