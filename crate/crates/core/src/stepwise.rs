//! Stepwise SVM selection.
//!
//! 1. Fit a multiclass SVM on each feature alone and record its apparent
//!    error rate (APR) on the training data.
//! 2. Every distinct APR value is a candidate threshold; the candidate subset
//!    keeps the features whose APR does not exceed it.
//! 3. Each candidate subset is scored by stratified k-fold cross-validation
//!    inside the training data. The winner has the best accuracy, then the
//!    fewest features, then the lowest threshold.
//!
//! A fixed threshold (for example `6/181`) may be supplied instead of the
//! search.

use std::fmt::Write as _;

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;

use crate::data::{class_counts, fmt_f64, stratified_folds, Dataset};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::report::{parse_trace, write_trace, TraceRow};
use crate::svm::{apparent_error_rate, ErrorRate, SolverParams, SvmModel};
use crate::Fraction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureScore {
    pub feature: usize,
    pub apr: ErrorRate,
}

impl FeatureScore {
    pub fn apr_real(&self) -> f64 {
        self.apr.value()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepwiseConfig {
    /// Kernel of the single-feature screening models.
    pub select_kernel: KernelSpec,
    /// Kernel of the model fitted on the reduced data.
    pub predict_kernel: KernelSpec,
    pub c: f64,
    pub folds: usize,
    pub seed: u64,
    pub solver: SolverParams,
    /// Skip the search and keep every feature with APR at or below this.
    pub threshold: Option<Fraction>,
}

impl Default for StepwiseConfig {
    fn default() -> Self {
        StepwiseConfig {
            select_kernel: KernelSpec::rbf(),
            predict_kernel: KernelSpec::rbf(),
            c: 1.0,
            folds: 5,
            seed: 0,
            solver: SolverParams::default(),
            threshold: None,
        }
    }
}

/// APR of a single-feature SVM for every column, in column order. Constant
/// columns get the majority-rule rate `(n - largest class) / n` without
/// training. Unset gamma resolves per feature to `1 / var(column)`.
pub fn score_features(
    train: &Dataset,
    spec: &KernelSpec,
    c: f64,
    params: &SolverParams,
) -> Result<Vec<FeatureScore>> {
    score_columns(train.features(), train.labels(), train.n_classes(), spec, c, params)
}

pub fn score_columns(
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    k: usize,
    spec: &KernelSpec,
    c: f64,
    params: &SolverParams,
) -> Result<Vec<FeatureScore>> {
    let n = labels.len();
    let majority = class_counts(labels, k).into_iter().max().unwrap_or(0);
    (0..x.ncols())
        .into_par_iter()
        .map(|j| {
            let col = x.slice(ndarray::s![.., j..j + 1]);
            let first = col[[0, 0]];
            let apr = if col.iter().all(|&v| v == first) {
                ErrorRate {
                    errors: n - majority,
                    n,
                }
            } else {
                let model = SvmModel::fit(col, labels, k, spec, c, params).map_err(|e| Error::Feature {
                    feature: j,
                    source: Box::new(e),
                })?;
                apparent_error_rate(&model, col, labels)?
            };
            Ok(FeatureScore { feature: j, apr })
        })
        .collect()
}

/// Sorted distinct APR values.
pub fn threshold_candidates(scores: &[FeatureScore]) -> Vec<Fraction> {
    let mut t: Vec<Fraction> = scores.iter().map(|s| s.apr.ratio()).collect();
    t.sort_unstable();
    t.dedup();
    t
}

/// Features with APR at or below `threshold`, ascending by index.
pub fn features_within(scores: &[FeatureScore], threshold: Fraction) -> Vec<usize> {
    let mut v: Vec<usize> = scores
        .iter()
        .filter(|s| s.apr.ratio() <= threshold)
        .map(|s| s.feature)
        .collect();
    v.sort_unstable();
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEval {
    pub threshold: Fraction,
    pub subset_size: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Ascending by APR, ties by feature index.
    pub scores: Vec<FeatureScore>,
    pub chosen_threshold: Fraction,
    /// Ascending feature indices.
    pub selected: Vec<usize>,
    pub validation_accuracy: f64,
    pub candidate_trace: Vec<CandidateEval>,
    pub feature_names: Vec<String>,
    pub n_train: usize,
}

impl SelectionResult {
    pub fn selected_names(&self) -> Vec<&str> {
        self.selected.iter().map(|&j| self.feature_names[j].as_str()).collect()
    }

    pub fn trace_rows(&self) -> Vec<TraceRow> {
        self.candidate_trace
            .iter()
            .map(|c| TraceRow {
                parameter: c.threshold.to_string(),
                subset_size: c.subset_size,
                accuracy: c.accuracy,
            })
            .collect()
    }

    /// Field-tagged report: header, summary, selected features, candidate
    /// trace and every feature's score in rank order.
    pub fn to_report(&self) -> String {
        let mut out = String::new();
        out.push_str("stepsvm-selection 1\n");
        let _ = writeln!(out, "n_train\t{}", self.n_train);
        let _ = writeln!(out, "n_features\t{}", self.feature_names.len());
        let _ = writeln!(out, "threshold\t{}", self.chosen_threshold);
        let _ = writeln!(out, "validation_accuracy\t{}", fmt_f64(self.validation_accuracy));
        let _ = writeln!(out, "selected_count\t{}", self.selected.len());
        for &j in &self.selected {
            let _ = writeln!(out, "selected\t{j}\t{}", self.feature_names[j]);
        }
        write_trace(&mut out, "stepwise", &self.trace_rows());
        let _ = writeln!(out, "scores\t{}", self.scores.len());
        for s in &self.scores {
            let _ = writeln!(
                out,
                "score\t{}\t{}\t{}\t{}",
                s.feature,
                s.apr,
                fmt_f64(s.apr_real()),
                self.feature_names[s.feature]
            );
        }
        out.push_str("end\n");
        out
    }

    pub fn from_report(text: &str) -> Result<SelectionResult> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("report ends before {what}")))
        };
        let (no, head) = next("header")?;
        if head != "stepsvm-selection 1" {
            return Err(Error::parse(no, format!("unsupported report header {head:?}")));
        }
        let field = |(no, line): (usize, &str), key: &str| -> Result<Vec<String>> {
            let f: Vec<String> = line.split('\t').map(str::to_string).collect();
            if f[0] != key {
                return Err(Error::parse(no, format!("expected {key:?}, found {line:?}")));
            }
            Ok(f[1..].to_vec())
        };
        let num = |no: usize, v: &str| -> Result<usize> {
            v.parse().map_err(|_| Error::parse(no, format!("bad count {v:?}")))
        };
        let l = next("n_train")?;
        let n_train = num(l.0, &field(l, "n_train")?[0])?;
        let l = next("n_features")?;
        let p = num(l.0, &field(l, "n_features")?[0])?;
        let l = next("threshold")?;
        let chosen_threshold = parse_fraction(&field(l, "threshold")?[0]).map_err(|e| reline(e, l.0))?;
        let l = next("validation_accuracy")?;
        let validation_accuracy = field(l, "validation_accuracy")?[0]
            .parse()
            .map_err(|_| Error::parse(l.0, "bad accuracy"))?;
        let l = next("selected_count")?;
        let q = num(l.0, &field(l, "selected_count")?[0])?;
        let mut selected = Vec::with_capacity(q);
        let mut feature_names = vec![String::new(); p];
        for _ in 0..q {
            let l = next("selected")?;
            let f = field(l, "selected")?;
            let j = num(l.0, &f[0])?;
            if j >= p || f.len() != 2 {
                return Err(Error::parse(l.0, "bad selected row"));
            }
            feature_names[j] = f[1].clone();
            selected.push(j);
        }
        let (_, rows) = parse_trace(&mut lines)?;
        let candidate_trace = rows
            .into_iter()
            .map(|r| {
                Ok(CandidateEval {
                    threshold: parse_fraction(&r.parameter)?,
                    subset_size: r.subset_size,
                    accuracy: r.accuracy,
                })
            })
            .collect::<Result<_>>()?;
        let l = lines.next().ok_or_else(|| Error::parse(0, "report ends before scores"))?;
        let count = num(l.0, &field(l, "scores")?[0])?;
        let mut scores = Vec::with_capacity(count);
        for _ in 0..count {
            let l = lines.next().ok_or_else(|| Error::parse(0, "truncated scores"))?;
            let f = field(l, "score")?;
            if f.len() != 4 {
                return Err(Error::parse(l.0, "bad score row"));
            }
            let feature = num(l.0, &f[0])?;
            let (e, n) = f[1]
                .split_once('/')
                .ok_or_else(|| Error::parse(l.0, "bad error rate"))?;
            if feature >= p {
                return Err(Error::parse(l.0, "score index out of range"));
            }
            feature_names[feature] = f[3].clone();
            scores.push(FeatureScore {
                feature,
                apr: ErrorRate {
                    errors: num(l.0, e)?,
                    n: num(l.0, n)?,
                },
            });
        }
        Ok(SelectionResult {
            scores,
            chosen_threshold,
            selected,
            validation_accuracy,
            candidate_trace,
            feature_names,
            n_train,
        })
    }
}

fn reline(e: Error, line: usize) -> Error {
    match e {
        Error::Validation(m) => Error::parse(line, m),
        other => other,
    }
}

/// Parses `a/b` or a finite decimal such as `0.0331` into an exact fraction.
pub fn parse_fraction(s: &str) -> Result<Fraction> {
    let s = s.trim();
    let bad = || Error::validation(format!("cannot parse {s:?} as a fraction"));
    if let Some((a, b)) = s.split_once('/') {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(Fraction::new(a, b));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() || frac.len() > 18 {
        return Err(bad());
    }
    let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let den = 10u64.pow(frac.len() as u32);
    let num: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let total = int
        .checked_mul(den)
        .and_then(|v| v.checked_add(num))
        .ok_or_else(bad)?;
    Ok(Fraction::new(total, den))
}

/// Pooled k-fold accuracy of an SVM restricted to `subset`. `folds[i]` is the
/// fold of sample `i`.
#[allow(clippy::too_many_arguments)]
pub fn cross_validated_accuracy(
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    k: usize,
    subset: &[usize],
    folds: &[usize],
    spec: &KernelSpec,
    c: f64,
    params: &SolverParams,
) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::validation("empty candidate subset"));
    }
    let xs = x.select(Axis(1), subset);
    let n_folds = folds.iter().max().map_or(0, |m| m + 1);
    let mut correct = 0usize;
    for f in 0..n_folds {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] != f).collect();
        let val: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] == f).collect();
        if val.is_empty() {
            continue;
        }
        let tl: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let model = SvmModel::fit(xs.select(Axis(0), &train).view(), &tl, k, spec, c, params)?;
        let pred = model.predict(xs.select(Axis(0), &val).view())?;
        correct += pred.iter().zip(&val).filter(|(p, &i)| **p == labels[i]).count();
    }
    Ok(correct as f64 / labels.len() as f64)
}

/// Best candidate: highest accuracy, then smallest subset, then smallest
/// threshold.
fn choose(trace: &[CandidateEval]) -> &CandidateEval {
    trace
        .iter()
        .min_by(|a, b| {
            b.accuracy
                .total_cmp(&a.accuracy)
                .then(a.subset_size.cmp(&b.subset_size))
                .then(a.threshold.cmp(&b.threshold))
        })
        .expect("nonempty trace")
}

pub fn select_features(train: &Dataset, cfg: &StepwiseConfig) -> Result<SelectionResult> {
    let scores = score_features(train, &cfg.select_kernel, cfg.c, &cfg.solver)?;
    select_from_scores(train, scores, cfg)
}

/// The threshold search given precomputed per-feature scores.
pub fn select_from_scores(
    train: &Dataset,
    mut scores: Vec<FeatureScore>,
    cfg: &StepwiseConfig,
) -> Result<SelectionResult> {
    if scores.len() != train.n_features() {
        return Err(Error::validation("one score per feature required"));
    }
    let folds = stratified_folds(train.labels(), train.n_classes(), cfg.folds, cfg.seed)?;
    let candidates = match cfg.threshold {
        Some(t) => vec![t],
        None => threshold_candidates(&scores),
    };
    let trace: Vec<CandidateEval> = candidates
        .par_iter()
        .map(|&t| {
            let subset = features_within(&scores, t);
            if subset.is_empty() {
                return Err(Error::validation(format!("threshold {t} selects no features")));
            }
            let accuracy = cross_validated_accuracy(
                train.features(),
                train.labels(),
                train.n_classes(),
                &subset,
                &folds,
                &cfg.predict_kernel,
                cfg.c,
                &cfg.solver,
            )?;
            Ok(CandidateEval {
                threshold: t,
                subset_size: subset.len(),
                accuracy,
            })
        })
        .collect::<Result<_>>()?;
    let best = choose(&trace).clone();
    let selected = features_within(&scores, best.threshold);
    scores.sort_by(|a, b| a.apr.ratio().cmp(&b.apr.ratio()).then(a.feature.cmp(&b.feature)));
    Ok(SelectionResult {
        scores,
        chosen_threshold: best.threshold,
        selected,
        validation_accuracy: best.accuracy,
        candidate_trace: trace,
        feature_names: train.feature_names().to_vec(),
        n_train: train.n_samples(),
    })
}

pub fn reduce(d: &Dataset, selected: &[usize]) -> Result<Dataset> {
    d.reduce(selected)
}
