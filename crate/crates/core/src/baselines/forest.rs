//! Random forest of CART trees.
//!
//! Each tree is grown on a bootstrap sample (n draws with replacement). At
//! every node `mtry` features are drawn without replacement and the best
//! Gini split among them is taken; if none of them can split the node, the
//! remaining features are tried in the same random order. Trees grow until a
//! node is pure or holds fewer than 2 samples. Tree `t` uses the seed
//! `derive_seed(seed, t)`, so the forest does not depend on scheduling.

use ndarray::ArrayView2;
use rand::Rng as _;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::svm::argmax_first;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf { class: usize },
    /// Samples with `x[feature] <= value` go left.
    Split { feature: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    value,
                    left,
                    right,
                } => at = if row[feature] <= value { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Defaults to `floor(sqrt(p))`, at least 1.
    pub mtry: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 500,
            mtry: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_trees: usize,
    pub mtry: usize,
    /// Total Gini decrease per feature, normalized to sum to 1 when any
    /// split occurred.
    pub importances: Vec<f64>,
    pub n_classes: usize,
    /// Accuracy over samples left out of at least one bootstrap.
    pub oob_accuracy: Option<f64>,
}

fn gini_sum(counts: &[usize], total: usize) -> f64 {
    // total * gini = total - sum(c^2)/total
    if total == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    total as f64 - sq / total as f64
}

struct Grower<'a> {
    x: ArrayView2<'a, f64>,
    labels: &'a [usize],
    k: usize,
    mtry: usize,
    nodes: Vec<Node>,
    importance: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    value: f64,
    decrease: f64,
}

impl Grower<'_> {
    fn leaf(&self, counts: &[usize]) -> Node {
        let c: Vec<u32> = counts.iter().map(|&v| v as u32).collect();
        Node::Leaf { class: argmax_first(&c) }
    }

    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    fn best_on(&self, idx: &[usize], f: usize, parent: f64, sorted: &mut Vec<(f64, usize)>) -> Option<BestSplit> {
        sorted.clear();
        sorted.extend(idx.iter().map(|&i| (self.x[[i, f]], self.labels[i])));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if sorted[0].0 == sorted[sorted.len() - 1].0 {
            return None;
        }
        let n = sorted.len();
        let mut right = vec![0usize; self.k];
        for &(_, l) in sorted.iter() {
            right[l] += 1;
        }
        let mut left = vec![0usize; self.k];
        let mut best: Option<BestSplit> = None;
        for s in 0..n - 1 {
            let l = sorted[s].1;
            left[l] += 1;
            right[l] -= 1;
            let (a, b) = (sorted[s].0, sorted[s + 1].0);
            if a == b {
                continue;
            }
            let decrease = parent - gini_sum(&left, s + 1) - gini_sum(&right, n - s - 1);
            if best.as_ref().is_none_or(|bs| decrease > bs.decrease) {
                let mut value = a + (b - a) / 2.0;
                if value >= b {
                    value = a;
                }
                best = Some(BestSplit {
                    feature: f,
                    value,
                    decrease,
                });
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, rng: &mut Rng) -> usize {
        let at = self.nodes.len();
        let counts = self.counts(&idx);
        self.nodes.push(self.leaf(&counts));
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || idx.len() < 2 {
            return at;
        }
        let parent = gini_sum(&counts, idx.len());
        let p = self.x.ncols();
        let mut order: Vec<usize> = (0..p).collect();
        let mut sorted = Vec::with_capacity(idx.len());
        let mut best: Option<BestSplit> = None;
        let mut tried = 0;
        // Partial Fisher-Yates: draw features one at a time.
        while tried < p {
            let j = rng.random_range(tried..p);
            order.swap(tried, j);
            let f = order[tried];
            tried += 1;
            if let Some(s) = self.best_on(&idx, f, parent, &mut sorted) {
                if best.as_ref().is_none_or(|b| s.decrease > b.decrease) {
                    best = Some(s);
                }
            }
            if tried >= self.mtry && best.is_some() {
                break;
            }
        }
        let Some(split) = best else {
            return at;
        };
        self.importance[split.feature] += split.decrease;
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[[i, split.feature]] <= split.value);
        let left = self.grow(l, rng);
        let right = self.grow(r, rng);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            value: split.value,
            left,
            right,
        };
        at
    }
}

struct Grown {
    tree: Tree,
    importance: Vec<f64>,
    in_bag: Vec<bool>,
}

fn grow_tree(x: ArrayView2<'_, f64>, labels: &[usize], k: usize, mtry: usize, seed: u64) -> Grown {
    let n = labels.len();
    let mut rng = rng_from_seed(seed);
    let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut in_bag = vec![false; n];
    for &i in &sample {
        in_bag[i] = true;
    }
    let mut g = Grower {
        x,
        labels,
        k,
        mtry,
        nodes: Vec::new(),
        importance: vec![0.0; x.ncols()],
    };
    g.grow(sample, &mut rng);
    Grown {
        tree: Tree { nodes: g.nodes },
        importance: g.importance,
        in_bag,
    }
}

pub fn forest_train(x: ArrayView2<'_, f64>, labels: &[usize], k: usize, cfg: &ForestConfig) -> Result<ForestModel> {
    let (n, p) = x.dim();
    if n == 0 || p == 0 || labels.len() != n {
        return Err(Error::validation(format!(
            "forest needs a nonempty matrix with one label per row ({n} rows, {} labels)",
            labels.len()
        )));
    }
    if labels.iter().any(|&l| l >= k) {
        return Err(Error::validation("label out of range"));
    }
    if cfg.n_trees == 0 {
        return Err(Error::validation("forest needs at least one tree"));
    }
    let mtry = cfg.mtry.unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1));
    if mtry == 0 || mtry > p {
        return Err(Error::validation(format!("mtry must lie in 1..={p}, got {mtry}")));
    }
    let grown: Vec<Grown> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(x, labels, k, mtry, derive_seed(cfg.seed, t as u64)))
        .collect();

    let mut importances = vec![0.0; p];
    let mut oob = vec![vec![0u32; k]; n];
    for g in &grown {
        for (a, b) in importances.iter_mut().zip(&g.importance) {
            *a += b;
        }
        for i in (0..n).filter(|&i| !g.in_bag[i]) {
            let row: Vec<f64> = x.row(i).to_vec();
            oob[i][g.tree.predict_row(&row)] += 1;
        }
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    }
    let mut seen = 0;
    let mut hits = 0;
    for (i, v) in oob.iter().enumerate() {
        if v.iter().any(|&c| c > 0) {
            seen += 1;
            hits += usize::from(argmax_first(v) == labels[i]);
        }
    }
    Ok(ForestModel {
        trees: grown.into_iter().map(|g| g.tree).collect(),
        n_trees: cfg.n_trees,
        mtry,
        importances,
        n_classes: k,
        oob_accuracy: (seen > 0).then(|| hits as f64 / seen as f64),
    })
}

pub fn forest_train_dataset(train: &Dataset, cfg: &ForestConfig) -> Result<ForestModel> {
    forest_train(train.features(), train.labels(), train.n_classes(), cfg)
}

/// Per-sample vote counts, one entry per class.
pub fn forest_votes(model: &ForestModel, x: ArrayView2<'_, f64>) -> Result<Vec<Vec<u32>>> {
    if x.ncols() != model.importances.len() {
        return Err(Error::validation(format!(
            "forest expects {} features, got {}",
            model.importances.len(),
            x.ncols()
        )));
    }
    Ok(x.rows()
        .into_iter()
        .map(|row| {
            let row = row.to_vec();
            let mut v = vec![0u32; model.n_classes];
            for t in &model.trees {
                v[t.predict_row(&row)] += 1;
            }
            v
        })
        .collect())
}

/// Majority vote; ties go to the smallest class id.
pub fn forest_predict(model: &ForestModel, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    Ok(forest_votes(model, x)?.iter().map(|v| argmax_first(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn single_perfect_feature_takes_all_importance() {
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let x = Array2::from_shape_fn((20, 3), |(i, j)| match j {
            1 => labels[i] as f64 * 5.0,
            _ => ((i * 13 + j * 7) % 11) as f64,
        });
        let cfg = ForestConfig {
            n_trees: 1,
            mtry: Some(3),
            seed: 3,
        };
        let m = forest_train(x.view(), &labels, 2, &cfg).unwrap();
        assert_eq!(m.importances, vec![0.0, 1.0, 0.0]);
        let votes = forest_votes(&m, x.view()).unwrap();
        assert!(votes.iter().all(|v| v.iter().sum::<u32>() == 1));
        assert_eq!(forest_predict(&m, x.view()).unwrap(), labels);
    }

    #[test]
    fn deterministic_per_seed() {
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let x = Array2::from_shape_fn((30, 6), |(i, j)| ((i * 31 + j * 17) % 23) as f64 + labels[i] as f64);
        let cfg = ForestConfig {
            n_trees: 25,
            mtry: None,
            seed: 9,
        };
        let a = forest_train(x.view(), &labels, 3, &cfg).unwrap();
        let b = forest_train(x.view(), &labels, 3, &cfg).unwrap();
        assert_eq!(a, b);
        assert!((a.importances.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(a.importances.iter().all(|&v| v >= 0.0));
        assert!(a.trees.iter().all(|t| t.nodes.iter().all(|n| match n {
            Node::Leaf { class } => *class < 3,
            _ => true,
        })));
    }

    #[test]
    fn bad_config_rejected() {
        let x = Array2::<f64>::zeros((4, 2));
        let l = [0, 1, 0, 1];
        let bad = |n_trees, mtry| {
            forest_train(
                x.view(),
                &l,
                2,
                &ForestConfig {
                    n_trees,
                    mtry,
                    seed: 0,
                },
            )
            .is_err()
        };
        assert!(bad(0, None));
        assert!(bad(1, Some(3)));
        assert!(bad(1, Some(0)));
    }
}
