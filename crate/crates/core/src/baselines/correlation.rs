//! Pearson-correlation filter.
//!
//! Pairs `(i, j)` with `i < j` are scanned in lexicographic order over the
//! still-active features. When `|r| > threshold` the member with the larger
//! mean is deactivated (equal means: the larger index). A deactivated feature
//! takes no further part in the scan.

use ndarray::{ArrayView2, Axis};

use crate::data::{stratified_folds, Dataset, FeatureStats};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::report::TraceRow;
use crate::svm::SolverParams;

use super::{best_index, svm_test_accuracy};

pub const DEFAULT_THRESHOLDS: [f64; 6] = [0.7, 0.75, 0.8, 0.85, 0.9, 0.95];

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

fn centered(x: &[f64]) -> (Vec<f64>, f64) {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let ss = d.iter().map(|v| v * v).sum();
    (d, ss)
}

fn r_from(dx: &[f64], ssx: f64, dy: &[f64], ssy: f64) -> f64 {
    let sxy: f64 = dx.iter().zip(dy).map(|(a, b)| a * b).sum();
    (sxy / (ssx * ssy).sqrt()).clamp(-1.0, 1.0)
}

/// Sample Pearson correlation. Fails when either vector is constant.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::validation(format!(
            "correlation needs equal lengths of at least 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if is_constant(x) || is_constant(y) {
        return Err(Error::validation("correlation undefined for a constant vector"));
    }
    let (dx, ssx) = centered(x);
    let (dy, ssy) = centered(y);
    Ok(r_from(&dx, ssx, &dy, ssy))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Removal {
    pub pair: (usize, usize),
    pub removed: usize,
    pub abs_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationFilterResult {
    pub threshold: f64,
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
    pub removal_log: Vec<Removal>,
}

/// Every pair whose `|r|` exceeds a floor, in lexicographic order. Filtering
/// at any threshold at or above the floor only ever looks at these pairs, so
/// one graph serves a whole threshold sweep.
#[derive(Debug, Clone)]
pub struct CorrelationGraph {
    floor: f64,
    means: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
}

impl CorrelationGraph {
    pub fn build(x: ArrayView2<'_, f64>, floor: f64) -> Result<CorrelationGraph> {
        if x.nrows() < 2 {
            return Err(Error::validation("correlation filter needs at least 2 samples"));
        }
        let cols: Vec<Option<(Vec<f64>, f64)>> = x
            .axis_iter(Axis(1))
            .map(|c| {
                let c = c.to_vec();
                (!is_constant(&c)).then(|| centered(&c))
            })
            .collect();
        let means = x.mean_axis(Axis(0)).expect("nonempty").to_vec();
        let p = cols.len();
        let edges = (0..p)
            .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
            .filter_map(|(i, j)| match (&cols[i], &cols[j]) {
                (Some((di, si)), Some((dj, sj))) => {
                    let r = r_from(di, *si, dj, *sj).abs();
                    (r > floor).then_some((i, j, r))
                }
                _ => None,
            })
            .collect();
        Ok(CorrelationGraph { floor, means, edges })
    }

    pub fn filter(&self, threshold: f64) -> Result<CorrelationFilterResult> {
        check_threshold(threshold)?;
        if threshold < self.floor {
            return Err(Error::validation(format!(
                "threshold {threshold} is below the graph floor {}",
                self.floor
            )));
        }
        let p = self.means.len();
        let mut active = vec![true; p];
        let mut removal_log = Vec::new();
        for &(i, j, r) in &self.edges {
            if r > threshold && active[i] && active[j] {
                let removed = if self.means[j] >= self.means[i] { j } else { i };
                active[removed] = false;
                removal_log.push(Removal {
                    pair: (i, j),
                    removed,
                    abs_r: r,
                });
            }
        }
        let kept = (0..p).filter(|&i| active[i]).collect();
        let removed = (0..p).filter(|&i| !active[i]).collect();
        Ok(CorrelationFilterResult {
            threshold,
            kept,
            removed,
            removal_log,
        })
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("correlation threshold must lie in (0, 1), got {t}")))
    }
}

/// Runs on the values as given. The removal rule compares feature means, so
/// pass unstandardized data.
pub fn correlation_filter(train: &Dataset, threshold: f64) -> Result<CorrelationFilterResult> {
    check_threshold(threshold)?;
    CorrelationGraph::build(train.features(), threshold)?.filter(threshold)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSweep {
    /// `(threshold, kept count, accuracy)` per threshold, in input order.
    pub rows: Vec<(f64, usize, f64)>,
    pub best_threshold: f64,
    pub best_accuracy: f64,
}

impl CorrelationSweep {
    pub fn trace_rows(&self) -> Vec<TraceRow> {
        self.rows
            .iter()
            .map(|&(t, size, accuracy)| TraceRow {
                parameter: t.to_string(),
                subset_size: size,
                accuracy,
            })
            .collect()
    }

    fn from_rows(rows: Vec<(f64, usize, f64)>) -> CorrelationSweep {
        let b = rows[best_index(&rows)];
        CorrelationSweep {
            best_threshold: b.0,
            best_accuracy: b.2,
            rows,
        }
    }
}

fn min_threshold(thresholds: &[f64]) -> Result<f64> {
    if thresholds.is_empty() {
        return Err(Error::validation("no correlation thresholds given"));
    }
    for &t in thresholds {
        check_threshold(t)?;
    }
    Ok(thresholds.iter().copied().fold(f64::INFINITY, f64::min))
}

fn scaled(train: ArrayView2<'_, f64>, test: ArrayView2<'_, f64>, on: bool) -> Result<(ndarray::Array2<f64>, ndarray::Array2<f64>)> {
    if on {
        let s = FeatureStats::fit(train);
        Ok((s.apply(train)?, s.apply(test)?))
    } else {
        Ok((train.to_owned(), test.to_owned()))
    }
}

/// For each threshold: filter `train`, fit an SVM on the kept columns and
/// score it on `test`. Both sets arrive unstandardized; with `standardize`
/// the SVM sees columns scaled by train statistics.
#[allow(clippy::too_many_arguments)]
pub fn sweep_correlation_thresholds(
    train: &Dataset,
    test: &Dataset,
    thresholds: &[f64],
    spec: &KernelSpec,
    c: f64,
    params: &SolverParams,
    standardize: bool,
) -> Result<CorrelationSweep> {
    let floor = min_threshold(thresholds)?;
    let graph = CorrelationGraph::build(train.features(), floor)?;
    let (xtr, xte) = scaled(train.features(), test.features(), standardize)?;
    let mut rows = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let kept = graph.filter(t)?.kept;
        let acc = svm_test_accuracy(
            xtr.select(Axis(1), &kept).view(),
            train.labels(),
            xte.select(Axis(1), &kept).view(),
            test.labels(),
            train.n_classes(),
            spec,
            c,
            params,
        )?;
        rows.push((t, kept.len(), acc));
    }
    Ok(CorrelationSweep::from_rows(rows))
}

/// Threshold choice by stratified cross-validation inside `train` alone. The
/// filter is refitted on every fold's training part.
#[allow(clippy::too_many_arguments)]
pub fn cv_correlation_thresholds(
    train: &Dataset,
    thresholds: &[f64],
    folds: usize,
    seed: u64,
    spec: &KernelSpec,
    c: f64,
    params: &SolverParams,
    standardize: bool,
) -> Result<CorrelationSweep> {
    let floor = min_threshold(thresholds)?;
    let assign = stratified_folds(train.labels(), train.n_classes(), folds, seed)?;
    let n = train.n_samples();
    let mut correct = vec![0.0; thresholds.len()];
    let mut sizes = vec![0usize; thresholds.len()];
    for f in 0..folds {
        let fit: Vec<usize> = (0..n).filter(|&i| assign[i] != f).collect();
        let val: Vec<usize> = (0..n).filter(|&i| assign[i] == f).collect();
        let a = train.select_rows(&fit)?;
        let b = train.select_rows(&val)?;
        let sweep = sweep_correlation_thresholds(&a, &b, thresholds, spec, c, params, standardize)?;
        for (t, &(_, size, acc)) in sweep.rows.iter().enumerate() {
            correct[t] += acc * val.len() as f64;
            sizes[t] += size;
        }
    }
    // Subset size reported for tie-breaking is the filter on the whole train.
    let graph = CorrelationGraph::build(train.features(), floor)?;
    let rows = thresholds
        .iter()
        .enumerate()
        .map(|(t, &th)| Ok((th, graph.filter(th)?.kept.len(), correct[t] / n as f64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationSweep::from_rows(rows))
}
