//! Principal components of mean-centred training data.
//!
//! When `n <= p` the eigenproblem is solved on the `n x n` sample Gram matrix
//! and loadings are recovered as `Xc^T u / |Xc^T u|`; otherwise the `p x p`
//! covariance is decomposed directly. Each component is signed so that its
//! largest-magnitude loading is positive.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{s, Array2, ArrayView2, Axis};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::report::TraceRow;
use crate::svm::SolverParams;

use super::{best_index, svm_test_accuracy};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    /// `q x p`, orthonormal rows.
    pub components: Array2<f64>,
    /// Sample variance (denominator `n - 1`) along each component.
    pub explained_variance: Vec<f64>,
    pub center: Vec<f64>,
}

impl PcaBasis {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    /// `n x q` scores of `x` around the training centre.
    pub fn project(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.center.len() {
            return Err(Error::validation(format!(
                "basis has width {}, data has {} columns",
                self.center.len(),
                x.ncols()
            )));
        }
        Ok(centre(x, &self.center).dot(&self.components.t()))
    }

    /// Maps scores back to the original (uncentred) space.
    pub fn reconstruct(&self, scores: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if scores.ncols() != self.n_components() {
            return Err(Error::validation("score width does not match the basis"));
        }
        let mut x = scores.dot(&self.components);
        for mut row in x.rows_mut() {
            row += &ndarray::ArrayView1::from(&self.center);
        }
        Ok(x)
    }
}

fn centre(x: ArrayView2<'_, f64>, center: &[f64]) -> Array2<f64> {
    let mut xc = x.to_owned();
    for mut row in xc.rows_mut() {
        row -= &ndarray::ArrayView1::from(center);
    }
    xc
}

fn check(x: ArrayView2<'_, f64>, q: usize) -> Result<()> {
    let (n, p) = x.dim();
    if n < 2 || q == 0 || q > (n - 1).min(p) {
        return Err(Error::validation(format!(
            "cannot fit {q} components to {n} samples of width {p} (limit {})",
            n.saturating_sub(1).min(p)
        )));
    }
    Ok(())
}

fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Eigenpairs sorted by decreasing eigenvalue, ties by position.
fn sorted_eigen(m: &Array2<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(to_dmatrix(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Orthonormalizes the rows in place (two Gram-Schmidt passes), filling rows
/// flagged as unusable from the standard basis.
fn orthonormalize(rows: &mut Array2<f64>, usable: &[bool]) {
    let (q, p) = rows.dim();
    let mut next_axis = 0;
    for i in 0..q {
        let mut ok = usable[i];
        loop {
            if !ok {
                if next_axis >= p {
                    unreachable!("q <= p guarantees a completion");
                }
                rows.row_mut(i).fill(0.0);
                rows[[i, next_axis]] = 1.0;
                next_axis += 1;
            }
            for _ in 0..2 {
                for j in 0..i {
                    let d = rows.row(i).dot(&rows.row(j));
                    let rj = rows.row(j).to_owned();
                    rows.row_mut(i).scaled_add(-d, &rj);
                }
            }
            let norm = rows.row(i).dot(&rows.row(i)).sqrt();
            if norm > 1e-8 {
                rows.row_mut(i).mapv_inplace(|v| v / norm);
                break;
            }
            ok = false;
        }
    }
}

fn fix_signs(rows: &mut Array2<f64>) {
    for mut row in rows.rows_mut() {
        let mut lead = 0;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > row[lead].abs() {
                lead = j;
            }
        }
        if row[lead] < 0.0 {
            row.mapv_inplace(|v| -v);
        }
    }
}

fn finish(mut components: Array2<f64>, values: Vec<f64>, usable: Vec<bool>, n: usize, center: Vec<f64>) -> PcaBasis {
    orthonormalize(&mut components, &usable);
    fix_signs(&mut components);
    let explained_variance = values
        .iter()
        .zip(&usable)
        .map(|(&l, &u)| if u { l / (n - 1) as f64 } else { 0.0 })
        .collect();
    PcaBasis {
        components,
        explained_variance,
        center,
    }
}

fn negligible(values: &[f64]) -> Vec<bool> {
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let floor = top * 1e-12 * values.len().max(1) as f64;
    values.iter().map(|&l| l > floor && l > 0.0).collect()
}

/// Sample-space route.
pub fn pca_fit_gram(x: ArrayView2<'_, f64>, q: usize) -> Result<PcaBasis> {
    check(x, q)?;
    let (n, p) = x.dim();
    let center = x.mean_axis(Axis(0)).expect("n >= 2").to_vec();
    let xc = centre(x, &center);
    let (values, u) = sorted_eigen(&xc.dot(&xc.t()));
    let values: Vec<f64> = values[..q].to_vec();
    let usable = negligible(&values);
    let mut comps = Array2::zeros((q, p));
    for i in 0..q {
        if usable[i] {
            let ui = ndarray::Array1::from_iter((0..n).map(|r| u[(r, i)]));
            comps.row_mut(i).assign(&xc.t().dot(&ui));
        }
    }
    Ok(finish(comps, values, usable, n, center))
}

/// Feature-space route.
pub fn pca_fit_covariance(x: ArrayView2<'_, f64>, q: usize) -> Result<PcaBasis> {
    check(x, q)?;
    let (n, p) = x.dim();
    let center = x.mean_axis(Axis(0)).expect("n >= 2").to_vec();
    let xc = centre(x, &center);
    let (values, v) = sorted_eigen(&xc.t().dot(&xc));
    let values: Vec<f64> = values[..q].to_vec();
    let usable = negligible(&values);
    let comps = Array2::from_shape_fn((q, p), |(i, j)| v[(j, i)]);
    Ok(finish(comps, values, usable, n, center))
}

/// Top `q` components, Gram route when `n <= p`.
pub fn pca_fit(x: ArrayView2<'_, f64>, q: usize) -> Result<PcaBasis> {
    if x.nrows() <= x.ncols() {
        pca_fit_gram(x, q)
    } else {
        pca_fit_covariance(x, q)
    }
}

pub fn pca_fit_dataset(train: &Dataset, q: usize) -> Result<PcaBasis> {
    pca_fit(train.features(), q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaSearch {
    /// Accuracy of the model on the first `k` scores, `k = 1..=q`.
    pub accuracies: Vec<f64>,
    pub best_k: usize,
}

impl PcaSearch {
    pub fn best_accuracy(&self) -> f64 {
        self.accuracies[self.best_k - 1]
    }

    pub fn trace_rows(&self) -> Vec<TraceRow> {
        self.accuracies
            .iter()
            .enumerate()
            .map(|(i, &accuracy)| TraceRow {
                parameter: (i + 1).to_string(),
                subset_size: i + 1,
                accuracy,
            })
            .collect()
    }

    fn from_accuracies(accuracies: Vec<f64>) -> PcaSearch {
        let rows: Vec<(usize, usize, f64)> = accuracies.iter().enumerate().map(|(i, &a)| (i + 1, i + 1, a)).collect();
        PcaSearch {
            best_k: best_index(&rows) + 1,
            accuracies,
        }
    }
}

/// Fits an SVM on each prefix `PC1..PCk` of the training scores and reports
/// its accuracy on `test` projected through the same basis.
pub fn pca_svm_search(
    train: &Dataset,
    test: &Dataset,
    basis: &PcaBasis,
    spec: &KernelSpec,
    c: f64,
    params: &SolverParams,
) -> Result<PcaSearch> {
    let ztr = basis.project(train.features())?;
    let zte = basis.project(test.features())?;
    let accuracies = (1..=basis.n_components())
        .map(|k| {
            svm_test_accuracy(
                ztr.slice(s![.., ..k]),
                train.labels(),
                zte.slice(s![.., ..k]),
                test.labels(),
                train.n_classes(),
                spec,
                c,
                params,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PcaSearch::from_accuracies(accuracies))
}

/// Chooses `k` by stratified cross-validation inside `train`, refitting the
/// basis on each fold. At most `max_components` (and never more than the
/// smallest fold allows) prefixes are tried.
#[allow(clippy::too_many_arguments)]
pub fn cv_pca_components(
    train: &Dataset,
    max_components: Option<usize>,
    folds: usize,
    seed: u64,
    spec: &KernelSpec,
    c: f64,
    params: &SolverParams,
) -> Result<PcaSearch> {
    let assign = crate::data::stratified_folds(train.labels(), train.n_classes(), folds, seed)?;
    let n = train.n_samples();
    let smallest_fit = (0..folds)
        .map(|f| assign.iter().filter(|&&a| a != f).count())
        .min()
        .unwrap_or(0);
    let mut q = (smallest_fit.saturating_sub(1)).min(train.n_features());
    if let Some(m) = max_components {
        q = q.min(m);
    }
    if q == 0 {
        return Err(Error::validation("too few samples for a component search"));
    }
    let mut correct = vec![0.0; q];
    for f in 0..folds {
        let fit: Vec<usize> = (0..n).filter(|&i| assign[i] != f).collect();
        let val: Vec<usize> = (0..n).filter(|&i| assign[i] == f).collect();
        let a = train.select_rows(&fit)?;
        let b = train.select_rows(&val)?;
        let basis = pca_fit_dataset(&a, q)?;
        let search = pca_svm_search(&a, &b, &basis, spec, c, params)?;
        for (k, acc) in search.accuracies.iter().enumerate() {
            correct[k] += acc * val.len() as f64;
        }
    }
    Ok(PcaSearch::from_accuracies(correct.into_iter().map(|c| c / n as f64).collect()))
}
