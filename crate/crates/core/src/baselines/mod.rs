//! Comparison reducers: a Pearson-correlation filter, PCA with prefix
//! component search, and random-forest recursive feature elimination.

pub mod correlation;
pub mod forest;
pub mod pca;
pub mod rfe;

pub use correlation::{
    correlation_filter, cv_correlation_thresholds, pearson_r, sweep_correlation_thresholds, CorrelationFilterResult, CorrelationGraph,
    CorrelationSweep, Removal, DEFAULT_THRESHOLDS,
};
pub use forest::{forest_predict, forest_train, forest_train_dataset, forest_votes, ForestConfig, ForestModel, Node, Tree};
pub use pca::{cv_pca_components, pca_fit, pca_fit_covariance, pca_fit_dataset, pca_fit_gram, pca_svm_search, PcaBasis, PcaSearch};
pub use rfe::{rf_rfe, RfeResult, RfeRound};

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::svm::{SolverParams, SvmModel};

/// Fraction of exact matches.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::validation(format!(
            "accuracy needs equal nonempty lengths, got {} and {}",
            predicted.len(),
            truth.len()
        )));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Fits a multiclass SVM on `(xtr, ytr)` and returns its accuracy on
/// `(xte, yte)`.
#[allow(clippy::too_many_arguments)]
pub fn svm_test_accuracy(
    xtr: ArrayView2<'_, f64>,
    ytr: &[usize],
    xte: ArrayView2<'_, f64>,
    yte: &[usize],
    k: usize,
    spec: &KernelSpec,
    c: f64,
    params: &SolverParams,
) -> Result<f64> {
    let model = SvmModel::fit(xtr, ytr, k, spec, c, params)?;
    accuracy(&model.predict(xte)?, yte)
}

/// Highest accuracy, then smallest subset, then smallest parameter, as in
/// the stepwise threshold search. Returns the winning position.
pub(crate) fn best_index<P: PartialOrd>(rows: &[(P, usize, f64)]) -> usize {
    let mut best = 0;
    for (i, r) in rows.iter().enumerate().skip(1) {
        let b = &rows[best];
        let better = r.2 > b.2 || (r.2 == b.2 && (r.1 < b.1 || (r.1 == b.1 && r.0 < b.0)));
        if better {
            best = i;
        }
    }
    best
}
