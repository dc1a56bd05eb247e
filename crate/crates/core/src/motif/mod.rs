//! Motif extraction, motif statistics, and PCA over feature matrices.

mod extract;
mod features;
mod pca;

use std::io::Write;

pub use extract::{extract_motifs, half_window_for, Motif, DEFAULT_WINDOW_S};
pub use features::{
    compute_features, compute_features_with, FeatureVector, MomentNormalization, FEATURE_DIM,
    FEATURE_NAMES,
};
pub use pca::{pca_fit, pca_inverse, pca_transform, PcaModel};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Stack feature vectors into a matrix in [`FEATURE_NAMES`] column order.
pub fn feature_matrix(features: &[FeatureVector]) -> Matrix {
    let rows: Vec<[f64; FEATURE_DIM]> = features.iter().map(FeatureVector::to_array).collect();
    Matrix::from_rows(&rows).expect("fixed width rows")
}

/// Write a feature matrix as CSV; columns follow [`FEATURE_NAMES`].
pub fn write_feature_csv(features: &[FeatureVector], dst: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    let err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(FEATURE_NAMES).map_err(err)?;
    for f in features {
        w.write_record(f.to_array().iter().map(|v| format!("{v}")))
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}
