//! Euclidean dissimilarity between samples and heatmap-ready exports.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::data::{csv_field, fmt_f64, Dataset};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, splitmix64};

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: Array2<f64>,
    sample_names: Vec<String>,
    label: String,
}

/// Triples checked for the triangle inequality: all of them up to this many
/// samples, otherwise a fixed pseudo-random sample of this many.
const TRIANGLE_SAMPLE: usize = 4096;

impl DistanceMatrix {
    /// Checks squareness, nonnegativity, symmetry (1e-12), a zero diagonal
    /// and the triangle inequality on sampled triples (1e-9).
    pub fn new(values: Array2<f64>, sample_names: Vec<String>, label: impl Into<String>) -> Result<DistanceMatrix> {
        let n = values.nrows();
        if values.ncols() != n || sample_names.len() != n {
            return Err(Error::validation(format!(
                "distance matrix is {}x{} with {} names",
                values.nrows(),
                values.ncols(),
                sample_names.len()
            )));
        }
        for i in 0..n {
            if values[[i, i]] != 0.0 {
                return Err(Error::validation(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[[i, j]];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::validation(format!("entry ({i}, {j}) = {v} is not a distance")));
                }
                if (v - values[[j, i]]).abs() > 1e-12 {
                    return Err(Error::validation(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        let check = |i: usize, j: usize, k: usize| -> Result<()> {
            if values[[i, k]] > values[[i, j]] + values[[j, k]] + 1e-9 {
                Err(Error::validation(format!("triangle inequality fails for ({i}, {j}, {k})")))
            } else {
                Ok(())
            }
        };
        if n.pow(3) <= TRIANGLE_SAMPLE {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        check(i, j, k)?;
                    }
                }
            }
        } else {
            for t in 0..TRIANGLE_SAMPLE as u64 {
                let h = derive_seed(0x5eed, t);
                let i = (h % n as u64) as usize;
                let j = (splitmix64(h) % n as u64) as usize;
                let k = (splitmix64(h ^ 1) % n as u64) as usize;
                check(i, j, k)?;
            }
        }
        Ok(DistanceMatrix {
            values,
            sample_names,
            label: label.into(),
        })
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn sample_names(&self) -> &[String] {
        &self.sample_names
    }

    /// Names the feature set the distances were computed on.
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.sample_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_names.is_empty()
    }

    /// Rows and columns permuted by `order`.
    pub fn reordered(&self, order: &[usize]) -> Result<DistanceMatrix> {
        let mut seen = vec![false; self.len()];
        if order.len() != self.len() || order.iter().any(|&i| i >= self.len() || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::validation("reordering must be a permutation"));
        }
        let values = self.values.select(Axis(0), order).select(Axis(1), order);
        Ok(DistanceMatrix {
            values,
            sample_names: order.iter().map(|&i| self.sample_names[i].clone()).collect(),
            label: self.label.clone(),
        })
    }

    pub fn to_csv(&self) -> String {
        heatmap_csv_string(self.values.view(), &self.sample_names, &self.sample_names).expect("square by construction")
    }
}

/// Pairwise distances between rows of `x` over the columns in `subset`
/// (all columns when `None`).
pub fn distance_matrix_rows(
    x: ArrayView2<'_, f64>,
    sample_names: &[String],
    subset: Option<&[usize]>,
    label: &str,
) -> Result<DistanceMatrix> {
    let cols: Vec<usize> = match subset {
        Some(s) => {
            if let Some(&bad) = s.iter().find(|&&j| j >= x.ncols()) {
                return Err(Error::validation(format!(
                    "subset index {bad} out of range for {} features",
                    x.ncols()
                )));
            }
            s.to_vec()
        }
        None => (0..x.ncols()).collect(),
    };
    let xs = x.select(Axis(1), &cols);
    let n = xs.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        return 0.0;
                    }
                    let (a, b) = if i < j { (i, j) } else { (j, i) };
                    xs.row(a)
                        .iter()
                        .zip(xs.row(b))
                        .map(|(u, v)| (u - v) * (u - v))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    let values = Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]);
    DistanceMatrix::new(values, sample_names.to_vec(), label)
}

pub fn distance_matrix(d: &Dataset, subset: Option<&[usize]>) -> Result<DistanceMatrix> {
    let label = match subset {
        Some(s) => format!("{} of {} features", s.len(), d.n_features()),
        None => format!("all {} features", d.n_features()),
    };
    distance_matrix_rows(d.features(), d.sample_names(), subset, &label)
}

/// Mean between-class distance over mean within-class distance.
pub fn group_contrast(dm: &DistanceMatrix, labels: &[usize]) -> Result<f64> {
    if labels.len() != dm.len() {
        return Err(Error::validation(format!(
            "{} labels for {} samples",
            labels.len(),
            dm.len()
        )));
    }
    let (mut within, mut nw, mut between, mut nb) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..dm.len() {
        for j in i + 1..dm.len() {
            let v = dm.values[[i, j]];
            if labels[i] == labels[j] {
                within += v;
                nw += 1;
            } else {
                between += v;
                nb += 1;
            }
        }
    }
    if nw == 0 {
        return Err(Error::validation("no class has two members; within-class distance undefined"));
    }
    if nb == 0 {
        return Err(Error::validation("only one class present; between-class distance undefined"));
    }
    let w = within / nw as f64;
    if w == 0.0 {
        return Err(Error::validation("within-class distances are all zero"));
    }
    Ok((between / nb as f64) / w)
}

/// Sample order grouping classes together: by class id, then by name.
pub fn class_order(labels: &[usize], names: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| labels[a].cmp(&labels[b]).then_with(|| names[a].cmp(&names[b])).then(a.cmp(&b)));
    order
}

/// CSV with a header row of column names (leading empty cell) and the row
/// name first on every line. Values use the shortest text that parses back
/// to the same double.
pub fn heatmap_csv_string(m: ArrayView2<'_, f64>, row_names: &[String], col_names: &[String]) -> Result<String> {
    if row_names.len() != m.nrows() || col_names.len() != m.ncols() {
        return Err(Error::validation(format!(
            "{}x{} matrix with {} row and {} column names",
            m.nrows(),
            m.ncols(),
            row_names.len(),
            col_names.len()
        )));
    }
    let mut out = String::new();
    for c in col_names {
        out.push(',');
        out.push_str(&csv_field(c));
    }
    out.push('\n');
    for (i, r) in row_names.iter().enumerate() {
        out.push_str(&csv_field(r));
        for v in m.row(i) {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn export_heatmap_csv(
    m: ArrayView2<'_, f64>,
    row_names: &[String],
    col_names: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    let text = heatmap_csv_string(m, row_names, col_names)?;
    std::fs::write(path.as_ref(), text).map_err(|e| Error::io(path.as_ref(), e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub values: Array2<f64>,
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
}

pub fn parse_heatmap_csv(text: &str) -> Result<Heatmap> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    let head = records
        .next()
        .ok_or_else(|| Error::parse(1, "empty heatmap"))?
        .map_err(|e| Error::parse(1, e.to_string()))?;
    let col_names: Vec<String> = head.iter().skip(1).map(str::to_string).collect();
    let mut row_names = Vec::new();
    let mut flat = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.len() != col_names.len() + 1 {
            return Err(Error::parse(line, format!("expected {} fields, found {}", col_names.len() + 1, rec.len())));
        }
        row_names.push(rec[0].to_string());
        for f in rec.iter().skip(1) {
            flat.push(
                f.parse::<f64>()
                    .map_err(|_| Error::parse(line, format!("non-numeric cell {f:?}")))?,
            );
        }
    }
    let values = Array2::from_shape_vec((row_names.len(), col_names.len()), flat).expect("shape checked per row");
    Ok(Heatmap {
        values,
        row_names,
        col_names,
    })
}

pub fn load_heatmap_csv(path: impl AsRef<Path>) -> Result<Heatmap> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    parse_heatmap_csv(&text)
}

/// Binary 8-bit greymap (P5). The smallest value is white (255) and the
/// largest black (0): byte = 255 - round(255 t) with t the min-max scaled
/// value, so darker means more dissimilar. A constant matrix is
/// all white.
pub fn pgm_bytes(m: ArrayView2<'_, f64>) -> Vec<u8> {
    let (lo, hi) = m
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut out = format!("P5\n{} {}\n255\n", m.ncols(), m.nrows()).into_bytes();
    for &v in m.iter() {
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
        out.push((255.0 - (t * 255.0).round()) as u8);
    }
    out
}

pub fn write_pgm(m: ArrayView2<'_, f64>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), pgm_bytes(m)).map_err(|e| Error::io(path.as_ref(), e))
}
