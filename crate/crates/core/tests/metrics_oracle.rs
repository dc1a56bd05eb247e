use trafficbench::eval::{mcc, mcc_binary, precision_recall_f1, Averaging, ConfusionMatrix};

// One-hot correlation computed from the expanded sample list.
fn correlation_oracle(samples: &[(usize, usize)], k: usize) -> f64 {
    let n = samples.len() as f64;
    let onehot = |c: usize| -> Vec<f64> { (0..k).map(|j| if j == c { 1.0 } else { 0.0 }).collect() };
    let xs: Vec<Vec<f64>> = samples.iter().map(|s| onehot(s.0)).collect();
    let ys: Vec<Vec<f64>> = samples.iter().map(|s| onehot(s.1)).collect();
    let mean = |v: &[Vec<f64>], j: usize| v.iter().map(|r| r[j]).sum::<f64>() / n;
    let cov = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 {
        (0..k)
            .map(|j| {
                let (ma, mb) = (mean(a, j), mean(b, j));
                a.iter().zip(b).map(|(x, y)| (x[j] - ma) * (y[j] - mb)).sum::<f64>()
            })
            .sum()
    };
    let den = (cov(&xs, &xs) * cov(&ys, &ys)).sqrt();
    if den == 0.0 {
        0.0
    } else {
        cov(&xs, &ys) / den
    }
}

fn prf_oracle(samples: &[(usize, usize)], k: usize) -> (Vec<(f64, f64, f64)>, Vec<usize>) {
    let mut rows = Vec::new();
    let mut support = Vec::new();
    for c in 0..k {
        let tp = samples.iter().filter(|s| s.0 == c && s.1 == c).count() as f64;
        let pred = samples.iter().filter(|s| s.1 == c).count() as f64;
        let truth = samples.iter().filter(|s| s.0 == c).count();
        let p = if pred > 0.0 { tp / pred } else { 0.0 };
        let r = if truth > 0 { tp / truth as f64 } else { 0.0 };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        rows.push((p, r, f));
        support.push(truth);
    }
    (rows, support)
}

#[test]
fn exhaustive_three_class_matrices() {
    let k = 3;
    let mut checked = 0;
    for code in 0..5usize.pow(9) {
        let mut c = code;
        let mut counts = vec![vec![0u64; k]; k];
        for t in 0..k {
            for p in 0..k {
                counts[t][p] = (c % 5) as u64;
                c /= 5;
            }
        }
        let mut samples = Vec::new();
        for t in 0..k {
            for p in 0..k {
                for _ in 0..counts[t][p] {
                    samples.push((t, p));
                }
            }
        }
        if samples.is_empty() {
            continue;
        }
        let cm = ConfusionMatrix::from_counts(vec![0, 1, 2], counts).unwrap();
        let want = correlation_oracle(&samples, k);
        assert!((mcc(&cm) - want).abs() < 1e-12, "code {code}: {} vs {want}", mcc(&cm));
        if code % 7 == 0 {
            let (rows, support) = prf_oracle(&samples, k);
            let n = samples.len() as f64;
            let m = precision_recall_f1(&cm, Averaging::Macro);
            let w = precision_recall_f1(&cm, Averaging::Weighted);
            let macro_f1 = rows.iter().map(|r| r.2).sum::<f64>() / k as f64;
            let weighted_r = rows.iter().zip(&support).map(|(r, &s)| r.1 * s as f64).sum::<f64>() / n;
            assert!((m.f1 - macro_f1).abs() < 1e-12);
            assert!((w.recall - weighted_r).abs() < 1e-12);
            assert!((w.recall - cm.accuracy()).abs() < 1e-12);
        }
        checked += 1;
    }
    assert_eq!(checked, 5usize.pow(9) - 1);
}

#[test]
fn multiclass_reduces_to_binary() {
    for tp in 0..6u64 {
        for fp in 0..6u64 {
            for fn_ in 0..6u64 {
                for tn in 0..6u64 {
                    let cm = ConfusionMatrix::from_counts(vec![0, 1], vec![vec![tp, fn_], vec![fp, tn]]).unwrap();
                    let b = mcc_binary(tp as f64, fp as f64, fn_ as f64, tn as f64);
                    assert!((mcc(&cm) - b).abs() < 1e-12, "{tp} {fp} {fn_} {tn}");
                }
            }
        }
    }
}
