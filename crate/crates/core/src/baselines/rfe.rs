//! Recursive feature elimination driven by random-forest importances.
//!
//! Each round fits a forest on the surviving features, records its
//! out-of-bag accuracy and drops the `floor(r / 2)` least important of the
//! `r` survivors (at least one). Rounds continue down to a single feature.
//! The reported subset has the best out-of-bag accuracy, ties going to the
//! smaller subset.

use ndarray::Axis;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::report::TraceRow;
use crate::rng::derive_seed;

use super::forest::{forest_train, ForestConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RfeRound {
    /// Original feature indices, ascending.
    pub subset: Vec<usize>,
    pub oob_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeResult {
    pub best_subset: Vec<usize>,
    pub best_oob_accuracy: f64,
    pub trace: Vec<RfeRound>,
}

impl RfeResult {
    pub fn trace_rows(&self) -> Vec<TraceRow> {
        self.trace
            .iter()
            .enumerate()
            .map(|(i, r)| TraceRow {
                parameter: format!("round{}", i + 1),
                subset_size: r.subset.len(),
                accuracy: r.oob_accuracy,
            })
            .collect()
    }
}

/// `cfg.mtry`, when set, is capped at the surviving width. Round `i` seeds
/// its forest with `derive_seed(cfg.seed, i)`.
pub fn rf_rfe(train: &Dataset, cfg: &ForestConfig) -> Result<RfeResult> {
    if train.n_features() < 2 {
        return Err(Error::validation("elimination needs at least 2 features"));
    }
    let mut subset: Vec<usize> = (0..train.n_features()).collect();
    let mut trace = Vec::new();
    for round in 0.. {
        let x = train.features().select(Axis(1), &subset);
        let round_cfg = ForestConfig {
            n_trees: cfg.n_trees,
            mtry: cfg.mtry.map(|m| m.min(subset.len())),
            seed: derive_seed(cfg.seed, round),
        };
        let forest = forest_train(x.view(), train.labels(), train.n_classes(), &round_cfg)?;
        trace.push(RfeRound {
            subset: subset.clone(),
            oob_accuracy: forest.oob_accuracy.unwrap_or(0.0),
        });
        let r = subset.len();
        if r == 1 {
            break;
        }
        // Least important first; among equals the higher index goes first.
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| {
            forest.importances[a]
                .total_cmp(&forest.importances[b])
                .then(b.cmp(&a))
        });
        let drop = (r / 2).max(1);
        let mut keep: Vec<usize> = order[drop..].iter().map(|&i| subset[i]).collect();
        keep.sort_unstable();
        subset = keep;
    }
    let best = trace
        .iter()
        .min_by(|a, b| {
            b.oob_accuracy
                .total_cmp(&a.oob_accuracy)
                .then(a.subset.len().cmp(&b.subset.len()))
        })
        .expect("at least one round");
    Ok(RfeResult {
        best_subset: best.subset.clone(),
        best_oob_accuracy: best.oob_accuracy,
        trace,
    })
}
