//! Soft-margin kernel SVM.
//!
//! The binary dual
//!
//! ```text
//! maximize   sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! subject to sum_i a_i y_i = 0,   0 <= a_i <= C
//! ```
//!
//! is solved by pairwise working-set ascent (SMO with second-order working
//! set selection) on a fully precomputed kernel matrix. Iteration stops once
//! the maximal KKT violation `m(a) - M(a)` drops below `tol`; for
//! indefinite kernels (sigmoid) the same updates run but only feasibility and
//! that stationarity test are guaranteed.
//!
//! Multiclass problems use one-against-one voting. Pair `(a, b)` with
//! `a < b` maps class `a` to `+1`; vote ties go to the smallest class id.

use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2, Axis};
use num_rational::Ratio;

use crate::data::{fmt_f64, Dataset};
use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelSpec};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Stop when the maximal KKT violation falls below this.
    pub tol: f64,
    /// Cap on pair updates.
    pub max_iter: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

impl SolverParams {
    pub fn with_tol(tol: f64) -> Self {
        SolverParams {
            tol,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::validation(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Raw output of the dual solver.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Dual objective, recomputed from the kernel matrix.
    pub objective: f64,
    pub iterations: u64,
    pub max_violation: f64,
    pub converged: bool,
}

/// Solves the dual on a precomputed `m x m` kernel matrix. `y` holds `+1.0`
/// or `-1.0`.
pub fn solve_dual(k: ArrayView2<'_, f64>, y: &[f64], c: f64, params: &SolverParams) -> Result<DualSolution> {
    params.validate()?;
    let m = y.len();
    if k.dim() != (m, m) {
        return Err(Error::validation("kernel matrix shape does not match labels"));
    }
    check_labels(y)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::validation(format!("C must be positive and finite, got {c}")));
    }

    let qd: Vec<f64> = (0..m).map(|i| k[[i, i]]).collect();
    let mut alpha = vec![0.0; m];
    // Gradient of 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij.
    let mut grad = vec![-1.0; m];
    let mut iterations = 0u64;
    let mut violation;

    let converged = loop {
        // First index: maximal violator in I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..m {
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = t;
            }
        }
        // Second index: greatest second-order decrease among I_low.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut obj_diff_min = f64::INFINITY;
        for t in 0..m {
            let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if !low {
                continue;
            }
            let yg = y[t] * grad[t];
            if yg >= gmax2 {
                gmax2 = yg;
            }
            if i_sel == usize::MAX {
                continue;
            }
            let grad_diff = gmax + yg;
            if grad_diff > 0.0 {
                let mut quad = qd[i_sel] + qd[t] - 2.0 * k[[i_sel, t]];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj_diff = -(grad_diff * grad_diff) / quad;
                if obj_diff <= obj_diff_min {
                    obj_diff_min = obj_diff;
                    j_sel = t;
                }
            }
        }
        violation = gmax + gmax2;
        if violation < params.tol || j_sel == usize::MAX {
            break true;
        }
        if iterations >= params.max_iter {
            break false;
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let q_ij = y[i] * y[j] * k[[i, j]];
        if y[i] != y[j] {
            let mut quad = qd[i] + qd[j] + 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qd[i] + qd[j] - 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..m {
            grad[t] += y[t] * (y[i] * k[[t, i]] * di + y[j] * k[[t, j]] * dj);
        }
    };

    let bias = compute_bias(&alpha, &grad, y, c);
    let objective = dual_objective(k, y, &alpha);
    Ok(DualSolution {
        alpha,
        bias,
        objective,
        iterations,
        max_violation: violation.max(0.0),
        converged,
    })
}

/// `b` is the mean of `y_i - sum_j a_j y_j K_ji` over free vectors; without
/// free vectors, the midpoint of the interval the bounded ones allow.
fn compute_bias(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut n_free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    };
    -rho
}

/// `sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij`
pub fn dual_objective(k: ArrayView2<'_, f64>, y: &[f64], alpha: &[f64]) -> f64 {
    let m = alpha.len();
    let mut quad = 0.0;
    for i in 0..m {
        if alpha[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..m {
            row += alpha[j] * y[j] * k[[i, j]];
        }
        quad += alpha[i] * y[i] * row;
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

fn check_labels(y: &[f64]) -> Result<()> {
    if let Some(v) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::validation(format!("binary labels must be +1 or -1, got {v}")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::validation("binary training data contains a single class"));
    }
    Ok(())
}

/// A fitted binary classifier `f(x) = sum_i a_i y_i K(x_i, x) + b`, summed
/// over support vectors only.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    kernel: Kernel,
    c: f64,
    /// One coefficient per training point.
    alpha: Vec<f64>,
    bias: f64,
    sv_indices: Vec<usize>,
    support_vectors: Array2<f64>,
    sv_labels: Vec<f64>,
    objective: f64,
    iterations: u64,
}

impl BinarySvm {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn support_indices(&self) -> &[usize] {
        &self.sv_indices
    }

    pub fn support_vectors(&self) -> ArrayView2<'_, f64> {
        self.support_vectors.view()
    }

    pub fn sv_labels(&self) -> &[f64] {
        &self.sv_labels
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn width(&self) -> usize {
        self.support_vectors.ncols()
    }

    pub fn n_train(&self) -> usize {
        self.alpha.len()
    }

    pub fn decision_function(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.width() {
            return Err(Error::validation(format!(
                "model expects {} features, got {}",
                self.width(),
                x.ncols()
            )));
        }
        let x = x.as_standard_layout();
        let coef: Vec<f64> = self
            .sv_indices
            .iter()
            .zip(&self.sv_labels)
            .map(|(&i, &y)| self.alpha[i] * y)
            .collect();
        Ok(x.outer_iter()
            .map(|row| {
                let row = row.to_slice().expect("standard layout");
                let s: f64 = self
                    .support_vectors
                    .outer_iter()
                    .zip(&coef)
                    .map(|(sv, a)| a * self.kernel.eval_unchecked(sv.to_slice().expect("owned"), row))
                    .sum();
                s + self.bias
            })
            .collect())
    }

    /// Labels (`+1.0`/`-1.0`, exact zero maps to `+1`) and decision values.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<(Vec<f64>, Vec<f64>)> {
        let f = self.decision_function(x)?;
        let labels = f.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        Ok((labels, f))
    }

    /// Worst violation of each KKT condition on the training data, with
    /// decision values recomputed from scratch.
    pub fn kkt_report(&self, x: ArrayView2<'_, f64>, y: &[f64]) -> Result<KktReport> {
        if y.len() != self.alpha.len() || x.nrows() != y.len() {
            return Err(Error::validation("KKT check needs the exact training data"));
        }
        let f = self.decision_function(x)?;
        let mut r = KktReport::default();
        for t in 0..y.len() {
            let margin = y[t] * f[t];
            let a = self.alpha[t];
            if a <= 0.0 {
                r.at_zero = r.at_zero.max(1.0 - margin);
            } else if a >= self.c {
                r.at_bound = r.at_bound.max(margin - 1.0);
            } else {
                r.free = r.free.max((margin - 1.0).abs());
            }
            r.min_alpha = r.min_alpha.min(a);
            r.max_alpha_over_c = r.max_alpha_over_c.max(a - self.c);
            r.sum_alpha_y += a * y[t];
        }
        Ok(r)
    }

    fn write_text(&self, out: &mut String) {
        let _ = writeln!(out, "kernel {}", self.kernel);
        let _ = writeln!(out, "c {}", fmt_f64(self.c));
        let _ = writeln!(out, "bias {}", fmt_f64(self.bias));
        let _ = writeln!(out, "objective {}", fmt_f64(self.objective));
        let _ = writeln!(out, "iterations {}", self.iterations);
        let _ = writeln!(out, "width {}", self.width());
        out.push_str("alpha");
        for a in &self.alpha {
            out.push(' ');
            out.push_str(&fmt_f64(*a));
        }
        out.push('\n');
        let _ = writeln!(out, "support_vectors {}", self.sv_indices.len());
        for (r, (&i, &y)) in self.sv_indices.iter().zip(&self.sv_labels).enumerate() {
            let _ = write!(out, "sv {i} {}", if y > 0.0 { "+1" } else { "-1" });
            for v in self.support_vectors.row(r) {
                out.push(' ');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
    }

    fn read_text(lines: &mut LineReader<'_>) -> Result<BinarySvm> {
        let kernel_spec: KernelSpec = lines.field("kernel")?.parse()?;
        let gamma = kernel_spec.gamma.unwrap_or(1.0);
        let kernel = Kernel::new(kernel_spec.family, gamma, kernel_spec.degree, kernel_spec.coef)?;
        let c = lines.parse_field("c")?;
        let bias = lines.parse_field("bias")?;
        let objective = lines.parse_field("objective")?;
        let iterations = lines.parse_field("iterations")?;
        let width: usize = lines.parse_field("width")?;
        let alpha = lines
            .field("alpha")?
            .split_whitespace()
            .map(|v| lines.number(v))
            .collect::<Result<Vec<f64>>>()?;
        let n_sv: usize = lines.parse_field("support_vectors")?;
        let mut sv_indices = Vec::with_capacity(n_sv);
        let mut sv_labels = Vec::with_capacity(n_sv);
        let mut support_vectors = Array2::zeros((n_sv, width));
        for r in 0..n_sv {
            let rest = lines.field("sv")?;
            let mut it = rest.split_whitespace();
            let idx: usize = lines.number(it.next().unwrap_or(""))?;
            let label: f64 = lines.number(it.next().unwrap_or(""))?;
            let values = it.map(|v| lines.number(v)).collect::<Result<Vec<f64>>>()?;
            if values.len() != width || idx >= alpha.len() {
                return Err(lines.error("support vector row has the wrong shape"));
            }
            sv_indices.push(idx);
            sv_labels.push(label);
            support_vectors.row_mut(r).assign(&ndarray::Array1::from(values));
        }
        Ok(BinarySvm {
            kernel,
            c,
            alpha,
            bias,
            sv_indices,
            support_vectors,
            sv_labels,
            objective,
            iterations,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// max over a = 0 of `1 - y f(x)`
    pub at_zero: f64,
    /// max over 0 < a < C of `|y f(x) - 1|`
    pub free: f64,
    /// max over a = C of `y f(x) - 1`
    pub at_bound: f64,
    pub sum_alpha_y: f64,
    pub min_alpha: f64,
    pub max_alpha_over_c: f64,
}

impl Default for KktReport {
    fn default() -> Self {
        KktReport {
            at_zero: f64::NEG_INFINITY,
            free: 0.0,
            at_bound: f64::NEG_INFINITY,
            sum_alpha_y: 0.0,
            min_alpha: f64::INFINITY,
            max_alpha_over_c: f64::NEG_INFINITY,
        }
    }
}

impl KktReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.at_zero <= tol
            && self.free <= tol
            && self.at_bound <= tol
            && self.sum_alpha_y.abs() < 1e-8
            && self.min_alpha >= 0.0
            && self.max_alpha_over_c <= 0.0
    }
}

pub fn train_binary(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    kernel: &Kernel,
    c: f64,
    params: &SolverParams,
) -> Result<BinarySvm> {
    if x.nrows() != y.len() {
        return Err(Error::validation(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    if x.nrows() < 2 {
        return Err(Error::validation("need at least 2 training points"));
    }
    check_labels(y)?;
    let k = kernel.gram(x);
    let sol = solve_dual(k.view(), y, c, params)?;
    let sv_indices: Vec<usize> = (0..y.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
    let model = BinarySvm {
        kernel: *kernel,
        c,
        support_vectors: x.select(Axis(0), &sv_indices),
        sv_labels: sv_indices.iter().map(|&i| y[i]).collect(),
        sv_indices,
        alpha: sol.alpha,
        bias: sol.bias,
        objective: sol.objective,
        iterations: sol.iterations,
    };
    if !sol.converged {
        return Err(Error::NotConverged {
            iterations: sol.iterations,
            max_violation: sol.max_violation,
            best: Box::new(model),
        });
    }
    Ok(model)
}

pub fn predict_binary(model: &BinarySvm, x: ArrayView2<'_, f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    model.predict(x)
}

// ---------------------------------------------------------------------------
// One-against-one

#[derive(Debug, Clone, PartialEq)]
pub struct PairModel {
    /// Class mapped to `+1`.
    pub positive: usize,
    /// Class mapped to `-1`.
    pub negative: usize,
    pub svm: BinarySvm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    n_classes: usize,
    width: usize,
    pairs: Vec<PairModel>,
}

impl SvmModel {
    /// Fits one binary model per unordered class pair on that pair's samples.
    /// Gamma, when unset, is resolved once from all of `x`.
    pub fn fit(
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        n_classes: usize,
        spec: &KernelSpec,
        c: f64,
        params: &SolverParams,
    ) -> Result<SvmModel> {
        if x.nrows() != labels.len() {
            return Err(Error::validation("label count does not match rows"));
        }
        if n_classes < 2 {
            return Err(Error::validation("need at least 2 classes"));
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
        for (i, &l) in labels.iter().enumerate() {
            if l >= n_classes {
                return Err(Error::validation(format!("class id {l} out of range")));
            }
            members[l].push(i);
        }
        if let Some(cl) = members.iter().position(Vec::is_empty) {
            return Err(Error::validation(format!("class {cl} has no training samples")));
        }
        let kernel = spec.resolve(x)?;
        let mut pairs = Vec::with_capacity(n_classes * (n_classes - 1) / 2);
        for a in 0..n_classes {
            for b in a + 1..n_classes {
                let rows: Vec<usize> = {
                    let mut r = [members[a].as_slice(), members[b].as_slice()].concat();
                    r.sort_unstable();
                    r
                };
                let y: Vec<f64> = rows
                    .iter()
                    .map(|&i| if labels[i] == a { 1.0 } else { -1.0 })
                    .collect();
                let sub = x.select(Axis(0), &rows);
                let svm = train_binary(sub.view(), &y, &kernel, c, params)?;
                pairs.push(PairModel {
                    positive: a,
                    negative: b,
                    svm,
                });
            }
        }
        Ok(SvmModel {
            n_classes,
            width: x.ncols(),
            pairs,
        })
    }

    pub fn fit_dataset(d: &Dataset, spec: &KernelSpec, c: f64, params: &SolverParams) -> Result<SvmModel> {
        Self::fit(d.features(), d.labels(), d.n_classes(), spec, c, params)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pairs(&self) -> &[PairModel] {
        &self.pairs
    }

    /// Per-sample vote counts, one slot per class.
    pub fn votes(&self, x: ArrayView2<'_, f64>) -> Result<Vec<Vec<u32>>> {
        if x.ncols() != self.width {
            return Err(Error::validation(format!(
                "model expects {} features, got {}",
                self.width,
                x.ncols()
            )));
        }
        let mut votes = vec![vec![0u32; self.n_classes]; x.nrows()];
        for pair in &self.pairs {
            let (labels, _) = pair.svm.predict(x)?;
            for (v, l) in votes.iter_mut().zip(labels) {
                v[if l > 0.0 { pair.positive } else { pair.negative }] += 1;
            }
        }
        Ok(votes)
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        Ok(self.votes(x)?.iter().map(|v| argmax_first(v)).collect())
    }

    /// Versioned, field-tagged text; doubles are written in shortest
    /// round-trip form so reloading is exact.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("stepsvm-model 1\n");
        let _ = writeln!(out, "classes {}", self.n_classes);
        let _ = writeln!(out, "width {}", self.width);
        let _ = writeln!(out, "pairs {}", self.pairs.len());
        for p in &self.pairs {
            let _ = writeln!(out, "pair {} {}", p.positive, p.negative);
            p.svm.write_text(&mut out);
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<SvmModel> {
        let mut lines = LineReader::new(text);
        let header = lines.next_line()?;
        if header != "stepsvm-model 1" {
            return Err(lines.error(format!("unsupported model header {header:?}")));
        }
        let n_classes: usize = lines.parse_field("classes")?;
        let width: usize = lines.parse_field("width")?;
        let n_pairs: usize = lines.parse_field("pairs")?;
        let mut pairs = Vec::with_capacity(n_pairs);
        for _ in 0..n_pairs {
            let rest = lines.field("pair")?;
            let ids: Vec<usize> = rest
                .split_whitespace()
                .map(|v| lines.number(v))
                .collect::<Result<_>>()?;
            if ids.len() != 2 || ids[0] >= n_classes || ids[1] >= n_classes {
                return Err(lines.error("bad pair line"));
            }
            let svm = BinarySvm::read_text(&mut lines)?;
            if svm.width() != width {
                return Err(lines.error("pair model width differs from model width"));
            }
            pairs.push(PairModel {
                positive: ids[0],
                negative: ids[1],
                svm,
            });
        }
        if lines.next_line()? != "end" {
            return Err(lines.error("missing end marker"));
        }
        Ok(SvmModel {
            n_classes,
            width,
            pairs,
        })
    }
}

pub(crate) fn argmax_first(v: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in v.iter().enumerate() {
        if c > v[best] {
            best = i;
        }
    }
    best
}

pub fn train_multiclass(d: &Dataset, spec: &KernelSpec, c: f64, params: &SolverParams) -> Result<SvmModel> {
    SvmModel::fit_dataset(d, spec, c, params)
}

pub fn predict_multiclass(model: &SvmModel, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    model.predict(x)
}

// ---------------------------------------------------------------------------
// Apparent error rate

/// Resubstitution error as an exact count over the training size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ErrorRate {
    pub errors: usize,
    pub n: usize,
}

impl ErrorRate {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.errors as u64, self.n as u64)
    }

    pub fn value(&self) -> f64 {
        self.errors as f64 / self.n as f64
    }
}

impl std::fmt::Display for ErrorRate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.errors, self.n)
    }
}

/// Misclassified training samples over `n`. `x` and `labels` must be the
/// model's own training data.
pub fn apparent_error_rate(model: &SvmModel, x: ArrayView2<'_, f64>, labels: &[usize]) -> Result<ErrorRate> {
    let pred = model.predict(x)?;
    if pred.len() != labels.len() {
        return Err(Error::validation("label count does not match rows"));
    }
    let errors = pred.iter().zip(labels).filter(|(p, t)| p != t).count();
    Ok(ErrorRate {
        errors,
        n: labels.len(),
    })
}

// ---------------------------------------------------------------------------

pub(crate) struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> LineReader<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        LineReader {
            lines: text.lines().enumerate(),
            line_no: 0,
        }
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line_no, msg)
    }

    pub(crate) fn next_line(&mut self) -> Result<&'a str> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line_no = i + 1;
                Ok(l.trim_end())
            }
            None => Err(Error::parse(self.line_no + 1, "unexpected end of input")),
        }
    }

    /// Next line, which must start with `key`; returns the remainder.
    pub(crate) fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.trim()),
            None if line == key => Ok(""),
            _ => Err(self.error(format!("expected {key:?}, found {line:?}"))),
        }
    }

    pub(crate) fn parse_field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        self.number(v)
    }

    pub(crate) fn number<T: std::str::FromStr>(&self, v: &str) -> Result<T> {
        v.parse()
            .map_err(|_| self.error(format!("cannot parse {v:?}")))
    }
}
