//! Datasets, CSV ingestion, stratified splitting, standardization and the
//! planted-signal generator.
//!
//! Internally a [`Dataset`] is always samples-as-rows: `features[[i, j]]` is
//! the value of feature `j` for sample `i`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    sample_names: Vec<String>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, checking every invariant: at least two samples, one
    /// feature and two classes; every class id below `class_names.len()`
    /// occurs; all values finite; feature and sample names unique.
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        sample_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = features.dim();
        if n < 2 {
            return Err(Error::validation(format!("need at least 2 samples, got {n}")));
        }
        if p < 1 {
            return Err(Error::validation("need at least 1 feature"));
        }
        if labels.len() != n {
            return Err(Error::validation(format!(
                "{} labels for {n} samples",
                labels.len()
            )));
        }
        if feature_names.len() != p || sample_names.len() != n {
            return Err(Error::validation("name count does not match matrix shape"));
        }
        let k = class_names.len();
        if k < 2 {
            return Err(Error::validation(format!("need at least 2 classes, got {k}")));
        }
        let mut seen = vec![false; k];
        for &l in &labels {
            if l >= k {
                return Err(Error::validation(format!("class id {l} out of range 0..{k}")));
            }
            seen[l] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::validation(format!(
                "class {c} ({}) has no samples",
                class_names[c]
            )));
        }
        if let Some(((i, j), v)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite value {v} at sample {i}, feature {j}"
            )));
        }
        ensure_unique(&feature_names, "feature")?;
        ensure_unique(&sample_names, "sample")?;
        Ok(Dataset {
            features,
            labels,
            feature_names,
            sample_names,
            class_names,
        })
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn sample_names(&self) -> &[String] {
        &self.sample_names
    }

    /// Original label strings, indexed by class id.
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        class_counts(&self.labels, self.n_classes())
    }

    /// Rows `rows`, in the given order. Fails if a class disappears.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let n = self.n_samples();
        if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
            return Err(Error::validation(format!("row {bad} out of range 0..{n}")));
        }
        Dataset::new(
            self.features.select(Axis(0), rows),
            rows.iter().map(|&r| self.labels[r]).collect(),
            self.feature_names.clone(),
            rows.iter().map(|&r| self.sample_names[r].clone()).collect(),
            self.class_names.clone(),
        )
    }

    /// Column subset preserving sample order and names.
    pub fn reduce(&self, selected: &[usize]) -> Result<Dataset> {
        let p = self.n_features();
        if selected.is_empty() {
            return Err(Error::validation("empty feature selection"));
        }
        let mut seen = HashSet::with_capacity(selected.len());
        for &j in selected {
            if j >= p {
                return Err(Error::validation(format!("feature index {j} out of range 0..{p}")));
            }
            if !seen.insert(j) {
                return Err(Error::validation(format!("feature index {j} selected twice")));
            }
        }
        Ok(Dataset {
            features: self.features.select(Axis(1), selected),
            labels: self.labels.clone(),
            feature_names: selected.iter().map(|&j| self.feature_names[j].clone()).collect(),
            sample_names: self.sample_names.clone(),
            class_names: self.class_names.clone(),
        })
    }

    /// Same samples and labels with a replacement feature matrix.
    pub(crate) fn with_features(&self, features: Array2<f64>) -> Dataset {
        debug_assert_eq!(features.dim(), self.features.dim());
        Dataset {
            features,
            ..self.clone()
        }
    }

    /// SHA-256 over shape, names, labels and the bit patterns of all values.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let (n, p) = self.features.dim();
        h.update((n as u64).to_le_bytes());
        h.update((p as u64).to_le_bytes());
        for s in self
            .feature_names
            .iter()
            .chain(&self.sample_names)
            .chain(&self.class_names)
        {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        }
        for &l in &self.labels {
            h.update((l as u64).to_le_bytes());
        }
        for v in self.features.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn ensure_unique(names: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(names.len());
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(Error::validation(format!("duplicate {what} name {name:?}")));
        }
    }
    Ok(())
}

pub fn class_counts(labels: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

// ---------------------------------------------------------------------------
// CSV

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    SamplesAsRows,
    /// Microarray convention: one gene per line, one sample per column.
    FeaturesAsRows,
}

/// A column (or, for gene-major files, a row) picked by header name or
/// zero-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldRef {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for FieldRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => FieldRef::Index(i),
            Err(_) => FieldRef::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvOptions {
    pub orientation: Orientation,
    /// `None` loads an unlabeled table. Defaults to the first field.
    pub label: Option<FieldRef>,
    /// Field holding sample names; synthesized as `sample_<i>` when absent.
    pub id: Option<FieldRef>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            orientation: Orientation::SamplesAsRows,
            label: Some(FieldRef::Index(0)),
            id: None,
        }
    }
}

/// Parsed CSV before label validation.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub features: Array2<f64>,
    pub feature_names: Vec<String>,
    pub sample_names: Vec<String>,
    pub labels: Option<Vec<String>>,
}

impl FeatureTable {
    /// Maps string labels to dense ids in first-appearance order.
    pub fn into_dataset(self) -> Result<Dataset> {
        let raw = self
            .labels
            .ok_or_else(|| Error::validation("table has no label field"))?;
        let mut class_names: Vec<String> = Vec::new();
        let labels = raw
            .into_iter()
            .map(|l| match class_names.iter().position(|c| *c == l) {
                Some(id) => id,
                None => {
                    class_names.push(l);
                    class_names.len() - 1
                }
            })
            .collect();
        if class_names.len() < 2 {
            return Err(Error::validation(format!(
                "single-class data: every sample is labeled {:?}",
                class_names.first().map(String::as_str).unwrap_or("")
            )));
        }
        Dataset::new(
            self.features,
            labels,
            self.feature_names,
            self.sample_names,
            class_names,
        )
    }
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    load_table(path, opts)?.into_dataset()
}

pub fn load_table(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<FeatureTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text, opts)
}

pub fn parse_csv(text: &str, opts: &CsvOptions) -> Result<Dataset> {
    parse_table(text, opts)?.into_dataset()
}

pub fn parse_table(text: &str, opts: &CsvOptions) -> Result<FeatureTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut lines: Vec<usize> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(rows.len() + 1);
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        rows.push(rec.iter().map(|s| s.trim().to_string()).collect());
        lines.push(line);
    }
    if rows.is_empty() {
        return Err(Error::parse(1, "empty file"));
    }
    let width = rows[0].len();
    for (row, &line) in rows.iter().zip(&lines) {
        if row.len() != width {
            return Err(Error::parse(
                line,
                format!("expected {width} fields, found {}", row.len()),
            ));
        }
    }

    // View the grid samples-as-rows; `origin` maps a view cell back to its
    // (line, 1-based column) in the file for diagnostics.
    let transposed = opts.orientation == Orientation::FeaturesAsRows;
    let (n_rows, n_cols) = if transposed {
        (width, rows.len())
    } else {
        (rows.len(), width)
    };
    let cell = |r: usize, c: usize| -> &str {
        if transposed {
            &rows[c][r]
        } else {
            &rows[r][c]
        }
    };
    let origin = |r: usize, c: usize| -> (usize, usize) {
        if transposed {
            (lines[c], r + 1)
        } else {
            (lines[r], c + 1)
        }
    };

    let resolve = |field: &FieldRef, header: Option<usize>| -> Result<usize> {
        match field {
            FieldRef::Index(i) if *i < n_cols => Ok(*i),
            FieldRef::Index(i) => Err(Error::validation(format!(
                "field index {i} out of range (table has {n_cols})"
            ))),
            FieldRef::Name(name) => {
                let h = header.ok_or_else(|| {
                    Error::validation(format!("field {name:?} named but the file has no header"))
                })?;
                (0..n_cols)
                    .find(|&c| cell(h, c) == name)
                    .ok_or_else(|| Error::validation(format!("no field named {name:?}")))
            }
        }
    };

    // Header detection needs the label/id positions, which may themselves be
    // named in the header. Index references are known up front; a named
    // reference implies a header.
    let named = matches!(opts.label, Some(FieldRef::Name(_)))
        || matches!(opts.id, Some(FieldRef::Name(_)));
    let has_header = named || {
        let skip: Vec<usize> = [&opts.label, &opts.id]
            .into_iter()
            .flatten()
            .filter_map(|f| match f {
                FieldRef::Index(i) => Some(*i),
                FieldRef::Name(_) => None,
            })
            .collect();
        let mut numeric = (0..n_cols)
            .filter(|c| !skip.contains(c))
            .map(|c| cell(0, c).parse::<f64>().is_ok());
        let first = numeric.next();
        // Header iff every feature field of the first record is non-numeric.
        first.is_some_and(|f| !f) && numeric.all(|f| !f)
    };
    let header = has_header.then_some(0);
    let label_col = opts.label.as_ref().map(|f| resolve(f, header)).transpose()?;
    let id_col = opts.id.as_ref().map(|f| resolve(f, header)).transpose()?;
    if label_col.is_some() && label_col == id_col {
        return Err(Error::validation("label and id refer to the same field"));
    }

    let feature_cols: Vec<usize> = (0..n_cols)
        .filter(|&c| Some(c) != label_col && Some(c) != id_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::validation("no feature fields"));
    }
    let first_data = usize::from(has_header);
    let n = n_rows - first_data;
    if n == 0 {
        return Err(Error::validation("no samples"));
    }
    let mut features = Array2::zeros((n, feature_cols.len()));
    for i in 0..n {
        let r = i + first_data;
        for (j, &c) in feature_cols.iter().enumerate() {
            let raw = cell(r, c);
            let (line, col) = origin(r, c);
            let v: f64 = raw.parse().map_err(|_| {
                Error::parse(line, format!("column {col}: non-numeric value {raw:?}"))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(
                    line,
                    format!("column {col}: non-finite value {raw:?}"),
                ));
            }
            features[[i, j]] = v;
        }
    }
    let feature_names = match header {
        Some(h) => feature_cols.iter().map(|&c| cell(h, c).to_string()).collect(),
        None => (0..feature_cols.len()).map(|j| format!("feature_{j}")).collect(),
    };
    let sample_names = match id_col {
        Some(c) => (first_data..n_rows).map(|r| cell(r, c).to_string()).collect(),
        None => (0..n).map(|i| format!("sample_{i}")).collect(),
    };
    let labels = label_col.map(|c| (first_data..n_rows).map(|r| cell(r, c).to_string()).collect());
    Ok(FeatureTable {
        features,
        feature_names,
        sample_names,
        labels,
    })
}

/// Formats a double so that parsing it back yields the same bits.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Samples-as-rows CSV with header `sample,label,<feature names>`. Reload with
/// `label = Name("label")`, `id = Name("sample")`.
pub fn write_csv_string(d: &Dataset) -> String {
    let mut out = String::new();
    out.push_str("sample,label");
    for name in d.feature_names() {
        out.push(',');
        out.push_str(&csv_field(name));
    }
    out.push('\n');
    for (i, row) in d.features().outer_iter().enumerate() {
        out.push_str(&csv_field(&d.sample_names()[i]));
        out.push(',');
        out.push_str(&csv_field(&d.class_names()[d.labels()[i]]));
        for v in row {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn save_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_csv_string(d)).map_err(|e| Error::io(path, e))
}

/// Options matching the layout written by [`save_csv`].
pub fn saved_csv_options() -> CsvOptions {
    CsvOptions {
        orientation: Orientation::SamplesAsRows,
        label: Some(FieldRef::Name("label".into())),
        id: Some(FieldRef::Name("sample".into())),
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

// ---------------------------------------------------------------------------
// Splitting

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl SplitIndices {
    /// Hex SHA-256 of the train index list; recorded per repetition to prove
    /// methods shared a split.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for &i in &self.train {
            h.update((i as u64).to_le_bytes());
        }
        hex(&h.finalize()[..8])
    }
}

/// Half of every class (rounded up) goes to train. Indices come back sorted.
pub fn stratified_half_split(d: &Dataset, seed: u64) -> Result<SplitIndices> {
    let k = d.n_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in d.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some(c) = by_class.iter().position(|m| m.len() < 2) {
        return Err(Error::validation(format!(
            "class {} has {} member(s); a half split needs at least 2",
            d.class_names()[c],
            by_class[c].len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut members in by_class {
        members.shuffle(&mut rng);
        let cut = members.len().div_ceil(2);
        train.extend_from_slice(&members[..cut]);
        test.extend_from_slice(&members[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test, seed })
}

/// Stratified fold assignment: within each class, a shuffled round-robin over
/// `folds`. Every class must have at least `folds` members so each fold's
/// complement contains every class.
pub fn stratified_folds(labels: &[usize], k: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::validation(format!("need at least 2 folds, got {folds}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some(c) = by_class.iter().position(|m| m.len() < folds) {
        return Err(Error::validation(format!(
            "class {c} has {} member(s), fewer than {folds} folds",
            by_class[c].len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut assignment = vec![0; labels.len()];
    for mut members in by_class {
        members.shuffle(&mut rng);
        for (pos, i) in members.into_iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    Ok(assignment)
}

// ---------------------------------------------------------------------------
// Standardization

/// Per-feature location and scale (sample sd, denominator n-1).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl FeatureStats {
    pub fn fit(x: ArrayView2<'_, f64>) -> FeatureStats {
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut sd = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let m = col.sum() / n;
            let ss: f64 = col.iter().map(|v| (v - m) * (v - m)).sum();
            mean.push(m);
            sd.push(if n > 1.0 { (ss / (n - 1.0)).sqrt() } else { 0.0 });
        }
        FeatureStats { mean, sd }
    }

    /// Zero-sd features map to all-zero columns.
    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::validation(format!(
                "stats cover {} features, data has {}",
                self.mean.len(),
                x.ncols()
            )));
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.mean[j], self.sd[j]);
            if s > 0.0 {
                col.mapv_inplace(|v| (v - m) / s);
            } else {
                col.fill(0.0);
            }
        }
        Ok(out)
    }
}

/// Standardizes `d`. With `stats = None` they are fitted on `d`; pass the
/// training statistics to transform a test set.
pub fn standardize(d: &Dataset, stats: Option<&FeatureStats>) -> Result<(Dataset, FeatureStats)> {
    let stats = match stats {
        Some(s) => s.clone(),
        None => FeatureStats::fit(d.features()),
    };
    let x = stats.apply(d.features())?;
    Ok((d.with_features(x), stats))
}

// ---------------------------------------------------------------------------
// Synthetic data

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedConfig {
    pub n: usize,
    pub p: usize,
    pub n_informative: usize,
    pub k: usize,
    pub effect: f64,
    pub seed: u64,
}

/// Large-p-small-n data with a planted signal.
///
/// Sample `i` belongs to class `i % k`. All values start i.i.d. N(0, 1)
/// (drawn row-major from the seeded stream); each of the `n_informative`
/// features, chosen uniformly without replacement, is then shifted by
/// `effect * class` for every sample. Returns the dataset and the sorted
/// informative indices.
pub fn synth_planted(cfg: &PlantedConfig) -> Result<(Dataset, Vec<usize>)> {
    let PlantedConfig {
        n,
        p,
        n_informative,
        k,
        effect,
        seed,
    } = *cfg;
    if k < 2 {
        return Err(Error::validation("need at least 2 classes"));
    }
    if n < k {
        return Err(Error::validation(format!("n = {n} cannot cover {k} classes")));
    }
    if p == 0 || n_informative > p {
        return Err(Error::validation(format!(
            "n_informative = {n_informative} must not exceed p = {p} (p >= 1)"
        )));
    }
    if !effect.is_finite() {
        return Err(Error::validation("effect must be finite"));
    }
    let mut rng = rng_from_seed(seed);
    let mut informative = rand::seq::index::sample(&mut rng, p, n_informative).into_vec();
    informative.sort_unstable();
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let mut x = Array2::<f64>::zeros((n, p));
    for v in x.iter_mut() {
        *v = StandardNormal.sample(&mut rng);
    }
    for &j in &informative {
        for i in 0..n {
            x[[i, j]] += effect * labels[i] as f64;
        }
    }
    let d = Dataset::new(
        x,
        labels,
        (0..p).map(|j| format!("g{j}")).collect(),
        (0..n).map(|i| format!("s{i}")).collect(),
        (0..k).map(|c| format!("class{c}")).collect(),
    )?;
    Ok((d, informative))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn ds(x: Array2<f64>, labels: Vec<usize>) -> Dataset {
        let (n, p) = x.dim();
        let k = labels.iter().max().unwrap() + 1;
        Dataset::new(
            x,
            labels,
            (0..p).map(|j| format!("f{j}")).collect(),
            (0..n).map(|i| format!("s{i}")).collect(),
            (0..k).map(|c| format!("c{c}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn first_appearance_label_mapping() {
        let d = parse_csv("A,1,2\nB,3,4\nA,5,6\n", &CsvOptions::default()).unwrap();
        assert_eq!((d.n_samples(), d.n_features(), d.n_classes()), (3, 2, 2));
        assert_eq!(d.labels(), &[0, 1, 0]);
        assert_eq!(d.class_names(), &["A".to_string(), "B".to_string()]);
    }

    #[test]
    fn header_is_detected() {
        let d = parse_csv("y,g1,g2\nA,1,2\nB,3,4\n", &CsvOptions::default()).unwrap();
        assert_eq!(d.feature_names(), &["g1".to_string(), "g2".to_string()]);
        assert_eq!(d.n_samples(), 2);
    }

    #[test]
    fn nan_cell_is_rejected_with_location() {
        let err = parse_csv("A,1,2\nB,NaN,4\n", &CsvOptions::default()).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("column 2"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_row_names_line() {
        let err = parse_csv("A,1,2\nB,3\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn non_numeric_cell_is_parse_error() {
        let err = parse_csv("A,1,2\nB,x,4\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn single_class_is_validation_error() {
        let err = parse_csv("A,1\nA,2\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err:?}");
    }

    #[test]
    fn gene_major_layout() {
        // Header row of sample ids, a label row, then one gene per line.
        let text = "gene,s1,s2,s3\nclass,MPM,ADCA,ADCA\ng1,1,2,3\ng2,4,5,6\n";
        let opts = CsvOptions {
            orientation: Orientation::FeaturesAsRows,
            label: Some(FieldRef::Name("class".into())),
            id: Some(FieldRef::Index(0)),
        };
        let d = parse_csv(text, &opts).unwrap();
        assert_eq!((d.n_samples(), d.n_features()), (3, 2));
        assert_eq!(d.sample_names(), &["s1", "s2", "s3"]);
        assert_eq!(d.feature_names(), &["g1", "g2"]);
        assert_eq!(d.labels(), &[0, 1, 1]);
        assert_eq!(d.features()[[2, 1]], 6.0);
    }

    #[test]
    fn gene_major_nan_reports_file_position() {
        let text = "MPM,ADCA\n1,2\n3,nan\n";
        let opts = CsvOptions {
            orientation: Orientation::FeaturesAsRows,
            ..Default::default()
        };
        let err = parse_csv(text, &opts).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, ref message } if message.contains("column 2")));
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = parse_csv("y,g,g\nA,1,2\nB,3,4\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn save_load_identity() {
        let (d, _) = synth_planted(&PlantedConfig {
            n: 9,
            p: 7,
            n_informative: 2,
            k: 3,
            effect: 1.5,
            seed: 3,
        })
        .unwrap();
        let back = parse_csv(&write_csv_string(&d), &saved_csv_options()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn fmt_f64_round_trips_extremes() {
        for v in [0.0, -0.0, 1e-300, 123456.789, 1.0 / 3.0, f64::MAX, f64::MIN_POSITIVE, -2.5e20] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn half_split_sizes() {
        let labels: Vec<usize> = [vec![0; 4], vec![1; 6]].concat();
        let d = ds(Array2::zeros((10, 1)), labels);
        let s = stratified_half_split(&d, 11).unwrap();
        let tr = class_counts(&s.train.iter().map(|&i| d.labels()[i]).collect::<Vec<_>>(), 2);
        let te = class_counts(&s.test.iter().map(|&i| d.labels()[i]).collect::<Vec<_>>(), 2);
        assert_eq!(tr, vec![2, 3]);
        assert_eq!(te, vec![2, 3]);
        assert_eq!(s, stratified_half_split(&d, 11).unwrap());
    }

    #[test]
    fn half_split_singleton_class_fails() {
        let d = ds(Array2::zeros((3, 1)), vec![0, 0, 1]);
        assert!(matches!(stratified_half_split(&d, 0), Err(Error::Validation(_))));
    }

    #[test]
    fn half_split_varies_with_seed() {
        let d = ds(Array2::zeros((20, 1)), (0..20).map(|i| i % 2).collect());
        let distinct: HashSet<Vec<usize>> = (0..100)
            .map(|s| stratified_half_split(&d, s).unwrap().train)
            .collect();
        assert!(distinct.len() >= 2);
    }

    #[test]
    fn standardize_examples() {
        let d = ds(array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]], vec![0, 1, 0]);
        let (z, stats) = standardize(&d, None).unwrap();
        assert_eq!(z.features().column(0).to_vec(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(z.features().column(1).to_vec(), vec![0.0, 0.0, 0.0]);

        let test = ds(array![[4.0, 6.0], [2.0, 5.0]], vec![0, 1]);
        let (zt, _) = standardize(&test, Some(&stats)).unwrap();
        assert_eq!(zt.features()[[0, 0]], 2.0);
        assert_eq!(zt.features()[[0, 1]], 0.0);
    }

    #[test]
    fn stratified_folds_balance() {
        let labels: Vec<usize> = (0..23).map(|i| usize::from(i >= 10)).collect();
        let a = stratified_folds(&labels, 2, 5, 9).unwrap();
        for f in 0..5 {
            let in_fold: Vec<usize> = (0..23).filter(|&i| a[i] == f).map(|i| labels[i]).collect();
            let c = class_counts(&in_fold, 2);
            assert_eq!(c[0], 2);
            assert!((2..=3).contains(&c[1]));
        }
        assert!(stratified_folds(&labels, 2, 11, 9).is_err());
    }

    #[test]
    fn planted_is_deterministic() {
        let cfg = PlantedConfig {
            n: 12,
            p: 30,
            n_informative: 4,
            k: 2,
            effect: 2.0,
            seed: 99,
        };
        let (a, ia) = synth_planted(&cfg).unwrap();
        let (b, ib) = synth_planted(&cfg).unwrap();
        assert_eq!(ia, ib);
        assert_eq!(a.digest(), b.digest());
        assert!(synth_planted(&PlantedConfig { n_informative: 31, ..cfg }).is_err());
        assert!(synth_planted(&PlantedConfig { k: 1, ..cfg }).is_err());
    }
}
