//! Repeated stratified half-split benchmark.
//!
//! Repetition `r` splits the data with seed `derive_seed(master_seed, r)`
//! and every method sees that same split. Each method selects on the
//! training half only (tuning by internal cross-validation where it has
//! something to tune) and is scored on the test half. A method's own random
//! seed is `derive_seed(split_seed, method id)`, so it does not depend on
//! where the method sits in the list.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use ndarray::{s, Axis};
use rayon::prelude::*;

use crate::baselines::{
    correlation::cv_correlation_thresholds, pca::cv_pca_components, pca_fit, rf_rfe, svm_test_accuracy,
    CorrelationGraph, ForestConfig, DEFAULT_THRESHOLDS,
};
use crate::data::{csv_field, fmt_f64, standardize, stratified_half_split, Dataset};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::rng::derive_seed;
use crate::stepwise::{parse_fraction, select_features, StepwiseConfig};
use crate::svm::SolverParams;

pub const DEFAULT_REPETITIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodKind {
    Stepwise,
    Original,
    Pca,
    Correlation,
    RfRfe,
}

impl MethodKind {
    pub const ALL: [MethodKind; 5] = [
        MethodKind::Stepwise,
        MethodKind::Original,
        MethodKind::Pca,
        MethodKind::Correlation,
        MethodKind::RfRfe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Stepwise => "stepwise",
            MethodKind::Original => "original",
            MethodKind::Pca => "pca",
            MethodKind::Correlation => "correlation",
            MethodKind::RfRfe => "rf_rfe",
        }
    }

    /// Mixed into the per-repetition seed.
    pub fn id(self) -> u64 {
        self as u64 + 1
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown method {s:?}")))
    }
}

/// One benchmark column.
///
/// Text form: the method name followed by comma-separated `key=value`
/// options, e.g. `stepwise,select_kernel=rbf,kernel=linear,c=10` or
/// `correlation,thresholds=0.8:0.9`. Keys that do not apply to the method
/// are rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodConfig {
    Stepwise(StepwiseConfig),
    Original {
        kernel: KernelSpec,
        c: f64,
    },
    Pca {
        kernel: KernelSpec,
        c: f64,
        max_components: Option<usize>,
        folds: usize,
    },
    Correlation {
        kernel: KernelSpec,
        c: f64,
        thresholds: Vec<f64>,
        folds: usize,
    },
    RfRfe {
        kernel: KernelSpec,
        c: f64,
        n_trees: usize,
        mtry: Option<usize>,
    },
}

impl MethodConfig {
    pub fn default_for(kind: MethodKind) -> MethodConfig {
        let kernel = KernelSpec::rbf();
        match kind {
            MethodKind::Stepwise => MethodConfig::Stepwise(StepwiseConfig::default()),
            MethodKind::Original => MethodConfig::Original { kernel, c: 1.0 },
            MethodKind::Pca => MethodConfig::Pca {
                kernel,
                c: 1.0,
                max_components: None,
                folds: 5,
            },
            MethodKind::Correlation => MethodConfig::Correlation {
                kernel,
                c: 1.0,
                thresholds: DEFAULT_THRESHOLDS.to_vec(),
                folds: 5,
            },
            MethodKind::RfRfe => MethodConfig::RfRfe {
                kernel,
                c: 1.0,
                n_trees: 500,
                mtry: None,
            },
        }
    }

    pub fn kind(&self) -> MethodKind {
        match self {
            MethodConfig::Stepwise(_) => MethodKind::Stepwise,
            MethodConfig::Original { .. } => MethodKind::Original,
            MethodConfig::Pca { .. } => MethodKind::Pca,
            MethodConfig::Correlation { .. } => MethodKind::Correlation,
            MethodConfig::RfRfe { .. } => MethodKind::RfRfe,
        }
    }

    /// Replaces the solver tolerance used inside stepwise selection.
    pub(crate) fn with_solver(&self, params: &SolverParams) -> MethodConfig {
        let mut m = self.clone();
        if let MethodConfig::Stepwise(cfg) = &mut m {
            cfg.solver = *params;
        }
        m
    }
}

impl fmt::Display for MethodConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind().name())?;
        match self {
            MethodConfig::Stepwise(cfg) => {
                write!(
                    f,
                    ",select_kernel={},kernel={},c={},folds={}",
                    cfg.select_kernel, cfg.predict_kernel, cfg.c, cfg.folds
                )?;
                if let Some(t) = cfg.threshold {
                    write!(f, ",threshold={t}")?;
                }
            }
            MethodConfig::Original { kernel, c } => write!(f, ",kernel={kernel},c={c}")?,
            MethodConfig::Pca {
                kernel,
                c,
                max_components,
                folds,
            } => {
                write!(f, ",kernel={kernel},c={c},folds={folds}")?;
                if let Some(m) = max_components {
                    write!(f, ",components={m}")?;
                }
            }
            MethodConfig::Correlation {
                kernel,
                c,
                thresholds,
                folds,
            } => {
                let t: Vec<String> = thresholds.iter().map(|t| t.to_string()).collect();
                write!(f, ",kernel={kernel},c={c},folds={folds},thresholds={}", t.join(":"))?;
            }
            MethodConfig::RfRfe { kernel, c, n_trees, mtry } => {
                write!(f, ",kernel={kernel},c={c},trees={n_trees}")?;
                if let Some(m) = mtry {
                    write!(f, ",mtry={m}")?;
                }
            }
        }
        Ok(())
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::validation(format!("bad value {v:?} for {key}")))
}

fn parse_c(v: &str) -> Result<f64> {
    let c: f64 = parse_num("c", v)?;
    if c > 0.0 && c.is_finite() {
        Ok(c)
    } else {
        Err(Error::validation(format!("C must be positive and finite, got {v}")))
    }
}

impl FromStr for MethodConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(',');
        let kind: MethodKind = parts.next().unwrap_or("").trim().parse()?;
        let mut m = MethodConfig::default_for(kind);
        for opt in parts {
            let (key, v) = opt
                .split_once('=')
                .ok_or_else(|| Error::validation(format!("option {opt:?} is not key=value")))?;
            let (key, v) = (key.trim(), v.trim());
            let unknown = || Error::validation(format!("option {key:?} does not apply to {}", kind.name()));
            match (&mut m, key) {
                (MethodConfig::Stepwise(cfg), "select_kernel") => cfg.select_kernel = v.parse()?,
                (MethodConfig::Stepwise(cfg), "kernel") => cfg.predict_kernel = v.parse()?,
                (MethodConfig::Stepwise(cfg), "c") => cfg.c = parse_c(v)?,
                (MethodConfig::Stepwise(cfg), "folds") => cfg.folds = parse_num(key, v)?,
                (MethodConfig::Stepwise(cfg), "threshold") => cfg.threshold = Some(parse_fraction(v)?),
                (
                    MethodConfig::Original { kernel, .. }
                    | MethodConfig::Pca { kernel, .. }
                    | MethodConfig::Correlation { kernel, .. }
                    | MethodConfig::RfRfe { kernel, .. },
                    "kernel",
                ) => *kernel = v.parse()?,
                (
                    MethodConfig::Original { c, .. }
                    | MethodConfig::Pca { c, .. }
                    | MethodConfig::Correlation { c, .. }
                    | MethodConfig::RfRfe { c, .. },
                    "c",
                ) => *c = parse_c(v)?,
                (MethodConfig::Pca { folds, .. } | MethodConfig::Correlation { folds, .. }, "folds") => {
                    *folds = parse_num(key, v)?
                }
                (MethodConfig::Pca { max_components, .. }, "components") => {
                    *max_components = Some(parse_num(key, v)?)
                }
                (MethodConfig::Correlation { thresholds, .. }, "thresholds") => {
                    *thresholds = v.split(':').map(|t| parse_num(key, t)).collect::<Result<_>>()?;
                    if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
                        return Err(Error::validation("correlation thresholds must lie in (0, 1)"));
                    }
                }
                (MethodConfig::RfRfe { n_trees, .. }, "trees") => *n_trees = parse_num(key, v)?,
                (MethodConfig::RfRfe { mtry, .. }, "mtry") => *mtry = Some(parse_num(key, v)?),
                _ => return Err(unknown()),
            }
        }
        match &m {
            MethodConfig::Stepwise(cfg) if cfg.folds < 2 => Err(Error::validation("folds must be at least 2")),
            MethodConfig::Pca { folds, .. } | MethodConfig::Correlation { folds, .. } if *folds < 2 => {
                Err(Error::validation("folds must be at least 2"))
            }
            MethodConfig::Pca {
                max_components: Some(0),
                ..
            } => Err(Error::validation("components must be at least 1")),
            MethodConfig::RfRfe { n_trees: 0, .. } | MethodConfig::RfRfe { mtry: Some(0), .. } => {
                Err(Error::validation("trees and mtry must be at least 1"))
            }
            _ => Ok(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub repetitions: usize,
    pub master_seed: u64,
    /// Scale features by training-half statistics before any SVM.
    pub standardize: bool,
    pub solver: SolverParams,
    /// Row label in the rank table.
    pub label: String,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            repetitions: DEFAULT_REPETITIONS,
            master_seed: 0,
            standardize: true,
            solver: SolverParams::default(),
            label: "data".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOutcome {
    pub accuracy: f64,
    /// Features (or components) the final model used.
    pub selected_count: usize,
}

pub fn split_seed(master_seed: u64, repetition: usize) -> u64 {
    derive_seed(master_seed, repetition as u64)
}

pub fn method_seed(split_seed: u64, kind: MethodKind) -> u64 {
    derive_seed(split_seed, kind.id())
}

/// One method on one split. `raw_*` are the halves as loaded; with
/// `standardize` the SVMs see them scaled by training statistics.
pub fn run_method(
    method: &MethodConfig,
    raw_train: &Dataset,
    raw_test: &Dataset,
    standardize_data: bool,
    seed: u64,
    params: &SolverParams,
) -> Result<MethodOutcome> {
    let (train, test) = if standardize_data {
        let (tr, stats) = standardize(raw_train, None)?;
        let (te, _) = standardize(raw_test, Some(&stats))?;
        (tr, te)
    } else {
        (raw_train.clone(), raw_test.clone())
    };
    let k = train.n_classes();
    let on = |cols: &[usize], kernel: &KernelSpec, c: f64| -> Result<MethodOutcome> {
        let accuracy = svm_test_accuracy(
            train.features().select(Axis(1), cols).view(),
            train.labels(),
            test.features().select(Axis(1), cols).view(),
            test.labels(),
            k,
            kernel,
            c,
            params,
        )?;
        Ok(MethodOutcome {
            accuracy,
            selected_count: cols.len(),
        })
    };
    match method {
        MethodConfig::Original { kernel, c } => {
            let all: Vec<usize> = (0..train.n_features()).collect();
            on(&all, kernel, *c)
        }
        MethodConfig::Stepwise(cfg) => {
            let cfg = StepwiseConfig {
                seed,
                solver: *params,
                ..cfg.clone()
            };
            let sel = select_features(&train, &cfg)?;
            on(&sel.selected, &cfg.predict_kernel, cfg.c)
        }
        MethodConfig::Pca {
            kernel,
            c,
            max_components,
            folds,
        } => {
            let search = cv_pca_components(&train, *max_components, *folds, seed, kernel, *c, params)?;
            let q = search.best_k;
            let basis = pca_fit(train.features(), q)?;
            let ztr = basis.project(train.features())?;
            let zte = basis.project(test.features())?;
            let accuracy = svm_test_accuracy(
                ztr.slice(s![.., ..q]),
                train.labels(),
                zte.slice(s![.., ..q]),
                test.labels(),
                k,
                kernel,
                *c,
                params,
            )?;
            Ok(MethodOutcome {
                accuracy,
                selected_count: q,
            })
        }
        MethodConfig::Correlation {
            kernel,
            c,
            thresholds,
            folds,
        } => {
            let sweep = cv_correlation_thresholds(
                raw_train,
                thresholds,
                *folds,
                seed,
                kernel,
                *c,
                params,
                standardize_data,
            )?;
            let t = sweep.best_threshold;
            let kept = CorrelationGraph::build(raw_train.features(), t)?.filter(t)?.kept;
            on(&kept, kernel, *c)
        }
        MethodConfig::RfRfe { kernel, c, n_trees, mtry } => {
            let forest = ForestConfig {
                n_trees: *n_trees,
                mtry: *mtry,
                seed,
            };
            let r = rf_rfe(&train, &forest)?;
            on(&r.best_subset, kernel, *c)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub name: String,
    pub config: String,
    /// One entry per repetition; `None` marks a failure.
    pub accuracies: Vec<Option<f64>>,
    pub selected_counts: Vec<Option<usize>>,
    /// `(repetition, diagnostic)` for every failure.
    pub failures: Vec<(usize, String)>,
    /// Over successful repetitions; NaN when there are none.
    pub mean: f64,
    /// Sample sd (denominator n-1); 0 with fewer than two values.
    pub sd: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub label: String,
    pub dataset_digest: String,
    pub repetitions: usize,
    pub master_seed: u64,
    pub split_seeds: Vec<u64>,
    pub split_digests: Vec<String>,
    pub methods: Vec<MethodResult>,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, sd)
}

/// Ranks by descending mean, 1 = best. Equal means (and NaN, which sorts
/// last) keep declaration order.
pub fn rank_by_mean(means: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (means[a], means[b]);
        match (x.is_nan(), y.is_nan()) {
            (false, false) => y.total_cmp(&x),
            (a_nan, b_nan) => a_nan.cmp(&b_nan),
        }
        .then(a.cmp(&b))
    });
    let mut ranks = vec![0; means.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r + 1;
    }
    ranks
}

fn method_names(methods: &[MethodConfig]) -> Vec<String> {
    methods
        .iter()
        .map(|m| {
            let dup = methods.iter().filter(|o| o.kind() == m.kind()).count() > 1;
            if dup {
                m.to_string()
            } else {
                m.kind().name().to_string()
            }
        })
        .collect()
}

pub fn run_benchmark(d: &Dataset, methods: &[MethodConfig], cfg: &BenchmarkConfig) -> Result<EvaluationReport> {
    if cfg.repetitions == 0 {
        return Err(Error::validation("repetitions must be at least 1"));
    }
    if methods.is_empty() {
        return Err(Error::validation("no methods configured"));
    }
    let configs: Vec<String> = methods.iter().map(|m| m.to_string()).collect();
    for (i, c) in configs.iter().enumerate() {
        if configs[..i].contains(c) {
            return Err(Error::validation(format!("method {c} listed twice")));
        }
    }
    let methods: Vec<MethodConfig> = methods.iter().map(|m| m.with_solver(&cfg.solver)).collect();

    type Rep = (u64, String, Vec<Result<MethodOutcome>>);
    let reps: Vec<Rep> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| -> Result<Rep> {
            let seed = split_seed(cfg.master_seed, r);
            let split = stratified_half_split(d, seed)?;
            let train = d.select_rows(&split.train)?;
            let test = d.select_rows(&split.test)?;
            let outcomes = methods
                .iter()
                .map(|m| run_method(m, &train, &test, cfg.standardize, method_seed(seed, m.kind()), &cfg.solver))
                .collect();
            Ok((seed, split.digest(), outcomes))
        })
        .collect::<Result<_>>()?;

    let names = method_names(&methods);
    let mut results: Vec<MethodResult> = names
        .into_iter()
        .zip(&configs)
        .map(|(name, config)| MethodResult {
            name,
            config: config.clone(),
            accuracies: Vec::with_capacity(cfg.repetitions),
            selected_counts: Vec::with_capacity(cfg.repetitions),
            failures: Vec::new(),
            mean: f64::NAN,
            sd: 0.0,
            rank: 0,
        })
        .collect();
    let mut split_seeds = Vec::with_capacity(reps.len());
    let mut split_digests = Vec::with_capacity(reps.len());
    for (r, (seed, digest, outcomes)) in reps.into_iter().enumerate() {
        split_seeds.push(seed);
        split_digests.push(digest);
        for (m, o) in results.iter_mut().zip(outcomes) {
            match o {
                Ok(o) => {
                    m.accuracies.push(Some(o.accuracy));
                    m.selected_counts.push(Some(o.selected_count));
                }
                Err(e) => {
                    m.accuracies.push(None);
                    m.selected_counts.push(None);
                    m.failures.push((r, e.to_string()));
                }
            }
        }
    }
    for m in &mut results {
        let ok: Vec<f64> = m.accuracies.iter().flatten().copied().collect();
        (m.mean, m.sd) = mean_sd(&ok);
    }
    let ranks = rank_by_mean(&results.iter().map(|m| m.mean).collect::<Vec<_>>());
    for (m, r) in results.iter_mut().zip(ranks) {
        m.rank = r;
    }
    Ok(EvaluationReport {
        label: cfg.label.clone(),
        dataset_digest: d.digest(),
        repetitions: cfg.repetitions,
        master_seed: cfg.master_seed,
        split_seeds,
        split_digests,
        methods: results,
    })
}

fn percent(m: f64) -> String {
    if m.is_nan() {
        "NA".into()
    } else {
        format!("{:.2}", m * 100.0)
    }
}

impl EvaluationReport {
    /// Text rank table: one row for the run, one column per method, cells
    /// `mean%^(rank)`.
    pub fn rank_table(&self) -> String {
        let mut header = vec!["run".to_string()];
        let mut row = vec![self.label.clone()];
        for m in &self.methods {
            header.push(m.name.clone());
            row.push(format!("{}^({})", percent(m.mean), m.rank));
        }
        let widths: Vec<usize> = header.iter().zip(&row).map(|(a, b)| a.len().max(b.len())).collect();
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            padded.join("  ").trim_end().to_string()
        };
        let mut out = String::new();
        let _ = writeln!(out, "{}", line(&header));
        let _ = writeln!(out, "{}", line(&row));
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "Mean test accuracy (%) over {} repetitions, master seed {}; ^(r) is the rank among methods.",
            self.repetitions, self.master_seed
        );
        let _ = writeln!(out, "Equal means are ranked in the order the methods were declared.");
        let failed: Vec<String> = self
            .methods
            .iter()
            .filter(|m| !m.failures.is_empty())
            .map(|m| format!("{} {}", m.name, m.failures.len()))
            .collect();
        if !failed.is_empty() {
            let _ = writeln!(out, "Failed repetitions (excluded from means): {}.", failed.join(", "));
        }
        out
    }

    /// Machine-readable twin of [`rank_table`](Self::rank_table).
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("run,method,config,mean_accuracy,sd,rank,completed,failed\n");
        for m in &self.methods {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_field(&self.label),
                csv_field(&m.name),
                csv_field(&m.config),
                if m.mean.is_nan() { "NA".into() } else { fmt_f64(m.mean) },
                fmt_f64(m.sd),
                m.rank,
                m.accuracies.iter().flatten().count(),
                m.failures.len()
            );
        }
        out
    }

    /// One line per (repetition, method).
    pub fn repetitions_csv(&self) -> String {
        let mut out = String::from("repetition,split_seed,split_digest,method,accuracy,selected_count,error\n");
        for r in 0..self.repetitions {
            for m in &self.methods {
                let err = m
                    .failures
                    .iter()
                    .find(|(i, _)| *i == r)
                    .map(|(_, e)| e.as_str())
                    .unwrap_or("");
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r,
                    self.split_seeds[r],
                    self.split_digests[r],
                    csv_field(&m.name),
                    m.accuracies[r].map_or(String::new(), fmt_f64),
                    m.selected_counts[r].map_or(String::new(), |c| c.to_string()),
                    csv_field(err)
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Fraction;

    #[test]
    fn khan_row_ranks() {
        let means = [98.65, 95.29, 92.23, 95.97, 98.45];
        assert_eq!(rank_by_mean(&means), vec![1, 4, 5, 3, 2]);
        assert_eq!(rank_by_mean(&[0.5]), vec![1]);
        assert_eq!(rank_by_mean(&[0.5, 0.7, 0.5]), vec![2, 1, 3]);
        assert_eq!(rank_by_mean(&[f64::NAN, 0.1]), vec![2, 1]);
    }

    #[test]
    fn method_config_text_round_trip() {
        for kind in MethodKind::ALL {
            let m = MethodConfig::default_for(kind);
            assert_eq!(m.to_string().parse::<MethodConfig>().unwrap(), m);
        }
        let m: MethodConfig = "stepwise,kernel=linear,threshold=6/181,c=10".parse().unwrap();
        let MethodConfig::Stepwise(cfg) = &m else { panic!() };
        assert_eq!(cfg.threshold, Some(Fraction::new(6, 181)));
        assert_eq!(cfg.predict_kernel, KernelSpec::linear());
        assert_eq!(m.to_string().parse::<MethodConfig>().unwrap(), m);
        let m: MethodConfig = "correlation,thresholds=0.8:0.9,kernel=rbf:gamma=0.5".parse().unwrap();
        assert_eq!(m.to_string().parse::<MethodConfig>().unwrap(), m);
    }

    #[test]
    fn inapplicable_options_rejected() {
        for bad in [
            "original,threshold=1/2",
            "pca,trees=10",
            "rf_rfe,folds=3",
            "stepwise,components=2",
            "stepwise,folds=1",
            "correlation,thresholds=1.2",
            "lasso",
            "pca,c=0",
        ] {
            assert!(bad.parse::<MethodConfig>().is_err(), "{bad}");
        }
    }

    #[test]
    fn sd_uses_n_minus_one() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd(&[0.3]).1, 0.0);
        assert!(mean_sd(&[]).0.is_nan());
    }
}
