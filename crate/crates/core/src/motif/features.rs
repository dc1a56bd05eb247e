use serde::{Deserialize, Serialize};

use super::extract::Motif;

/// Statistical description of one motif.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub duration: f64,
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    pub std: f64,
    pub variance: f64,
    pub range: f64,
    pub skewness: f64,
    pub coeff_of_variation: f64,
    pub kurtosis: f64,
    pub area: f64,
    pub auc: f64,
}

/// Column order used by feature matrices and their CSV export.
pub const FEATURE_NAMES: [&str; 12] = [
    "duration",
    "mean",
    "max",
    "min",
    "std",
    "variance",
    "range",
    "skewness",
    "coeff_of_variation",
    "kurtosis",
    "area",
    "auc",
];

pub const FEATURE_DIM: usize = FEATURE_NAMES.len();

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        [
            self.duration,
            self.mean,
            self.max,
            self.min,
            self.std,
            self.variance,
            self.range,
            self.skewness,
            self.coeff_of_variation,
            self.kurtosis,
            self.area,
            self.auc,
        ]
    }
}

/// Divisor of the third and fourth standardized moment sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MomentNormalization {
    /// `1/(N-1)`: the `1/(2n)` factor of a full `2n+1` window, applied to
    /// truncated motifs by their own length.
    #[default]
    WindowHalfWidth,
    /// `1/N`.
    SampleCount,
}

pub fn compute_features(motif: &Motif) -> FeatureVector {
    compute_features_with(motif, MomentNormalization::default())
}

pub fn compute_features_with(motif: &Motif, norm: MomentNormalization) -> FeatureVector {
    let xs = &motif.samples;
    debug_assert!(!xs.is_empty(), "motif without samples");
    let n = xs.len() as f64;
    let dt = motif.granularity_s as f64;
    let t = motif.threshold_kb_s;

    let mean = xs.iter().sum::<f64>() / n;
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let variance = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = variance.sqrt();

    let divisor = match norm {
        MomentNormalization::WindowHalfWidth if xs.len() > 1 => n - 1.0,
        _ => n,
    };
    let (skewness, kurtosis) = if std > 0.0 {
        let (s3, s4) = xs.iter().fold((0.0, 0.0), |(a, b), x| {
            let z = (x - mean) / std;
            (a + z * z * z, b + z * z * z * z)
        });
        (s3 / divisor, s4 / divisor)
    } else {
        (0.0, 0.0)
    };
    let coeff_of_variation = if mean > 0.0 { std / mean } else { 0.0 };
    let area = xs.iter().filter(|&&x| x > t).map(|x| (x - t) * dt).sum();
    let auc = xs.iter().map(|x| x * dt).sum();

    FeatureVector {
        duration: n * dt,
        mean,
        max,
        min,
        std,
        variance,
        range: max - min,
        skewness,
        coeff_of_variation,
        kurtosis,
        area,
        auc,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Direction, TraceKey};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn motif(samples: Vec<f64>, t: f64, g: u32) -> Motif {
        let n = samples.len();
        Motif {
            trace: TraceKey::new("d", Direction::In),
            granularity_s: g,
            trace_start_epoch_s: 0,
            start_index: 0,
            center_index: 0,
            window_half_n: n / 2,
            threshold_kb_s: t,
            samples,
        }
    }

    #[test]
    fn constant_motif() {
        let f = compute_features(&motif(vec![5.0, 5.0, 5.0], 2.0, 4));
        assert_eq!(f.std, 0.0);
        assert_eq!(f.coeff_of_variation, 0.0);
        assert_eq!(f.skewness, 0.0);
        assert_eq!(f.kurtosis, 0.0);
        assert_eq!(f.area, 3.0 * (5.0 - 2.0) * 4.0);
    }

    #[test]
    fn hand_arithmetic() {
        let f = compute_features(&motif(vec![1.0, 3.0, 2.0], 0.0, 1));
        assert_eq!(f.mean, 2.0);
        assert_eq!(f.range, 2.0);
        assert_eq!(f.area, 6.0);
        assert_eq!(f.auc, 6.0);
        assert_eq!(f.duration, 3.0);
        assert_eq!(f.max, 3.0);
        assert_eq!(f.min, 1.0);
    }

    #[test]
    fn skewness_matches_direct_formula() {
        // 41 samples = full window with n = 20, so the divisor is 2n = 40.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let xs: Vec<f64> = (0..41).map(|_| rng.random_range(1.0..100.0)).collect();
        let f = compute_features(&motif(xs.clone(), 0.5, 1));

        let half_n = 20.0;
        let mu = xs.iter().sum::<f64>() / 41.0;
        let sigma = (xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / 41.0).sqrt();
        let direct: f64 = xs.iter().map(|x| ((x - mu) / sigma).powi(3)).sum::<f64>() / (2.0 * half_n);
        assert!((f.skewness - direct).abs() < 1e-10);

        let g = compute_features_with(&motif(xs, 0.5, 1), MomentNormalization::SampleCount);
        assert!((g.skewness - direct * 40.0 / 41.0).abs() < 1e-10);
    }

    #[test]
    fn zero_mean_cv_is_zero() {
        let f = compute_features(&motif(vec![0.0, 0.0], 0.0, 1));
        assert_eq!(f.coeff_of_variation, 0.0);
        assert_eq!(f.area, 0.0);
    }

    proptest! {
        #[test]
        fn structural_identities(xs in proptest::collection::vec(0.1f64..1e3, 1..80)) {
            let f = compute_features(&motif(xs, 0.05, 1));
            prop_assert!((f.variance - f.std * f.std).abs() <= 1e-12 * f.variance.max(1.0));
            prop_assert_eq!(f.range, f.max - f.min);
            prop_assert!(f.area >= 0.0);
            prop_assert!((f.coeff_of_variation - f.std / f.mean).abs() <= 1e-12);
        }

        #[test]
        fn translation_covariance(xs in proptest::collection::vec(1.0f64..1e3, 1..80), c in 0.0f64..500.0) {
            let t = 0.5;
            let a = compute_features(&motif(xs.clone(), t, 2));
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let b = compute_features(&motif(shifted, t + c, 2));
            prop_assert!((a.area - b.area).abs() <= 1e-9 * a.area.max(1.0));
            prop_assert!((b.mean - a.mean - c).abs() <= 1e-9 * b.mean);
        }

        #[test]
        fn scale_covariance(xs in proptest::collection::vec(1.0f64..1e3, 2..80), s in 0.01f64..100.0) {
            let t = 0.5;
            let a = compute_features(&motif(xs.clone(), t, 1));
            let scaled: Vec<f64> = xs.iter().map(|x| x * s).collect();
            let b = compute_features(&motif(scaled, t * s, 1));
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-9);
            prop_assert!(close(b.area, a.area * s));
            prop_assert!(close(b.mean, a.mean * s));
            prop_assert!(close(b.std, a.std * s));
            prop_assert!(close(b.range, a.range * s));
            prop_assert!(close(b.coeff_of_variation, a.coeff_of_variation));
            if a.std > 1e-9 * a.mean {
                prop_assert!((b.skewness - a.skewness).abs() <= 1e-7);
            }
        }
    }
}
