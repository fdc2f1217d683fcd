//! Subcommand bodies. Each one computes every output in memory first and
//! only then writes, so a failure leaves no partial results behind.

use std::path::{Path, PathBuf};

use stepsvm::data::{self, CsvOptions, FieldRef, PlantedConfig};
use stepsvm::evaluation::{run_benchmark, MethodConfig};
use stepsvm::similarity::{self, class_order, distance_matrix_rows, group_contrast};
use stepsvm::stepwise::{parse_fraction, select_features};
use stepsvm::{BenchmarkConfig, Dataset, Error, KernelSpec, MethodKind, SelectionResult, SolverParams, StepwiseConfig};

use crate::{config, CompareArgs, DataArgs, DistancesArgs, ReduceArgs, SelectArgs, SolverArgs, SynthArgs};

type Result<T> = std::result::Result<T, Error>;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Files destined for one output location, written together at the end.
struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn new() -> Self {
        Outputs { files: Vec::new() }
    }

    fn add(&mut self, path: PathBuf, bytes: impl Into<Vec<u8>>) {
        self.files.push((path, bytes.into()));
    }

    /// Writes every file next to its target under a temporary name, then
    /// renames them all into place.
    fn commit(self) -> Result<()> {
        let mut staged = Vec::with_capacity(self.files.len());
        let cleanup = |staged: &[(PathBuf, PathBuf)]| {
            for (tmp, _) in staged {
                let _ = std::fs::remove_file(tmp);
            }
        };
        for (path, bytes) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                if let Err(e) = std::fs::create_dir_all(dir) {
                    cleanup(&staged);
                    return Err(io_err(dir, e));
                }
            }
            let mut name = path.file_name().unwrap_or_default().to_os_string();
            name.push(".partial");
            let tmp = path.with_file_name(name);
            if let Err(e) = std::fs::write(&tmp, bytes) {
                cleanup(&staged);
                return Err(io_err(&tmp, e));
            }
            staged.push((tmp, path.clone()));
        }
        for (tmp, path) in &staged {
            if let Err(e) = std::fs::rename(tmp, path) {
                cleanup(&staged);
                return Err(io_err(path, e));
            }
        }
        Ok(())
    }
}

fn csv_options(orientation: crate::OrientationArg, label_col: &str, id_col: Option<&str>) -> CsvOptions {
    CsvOptions {
        orientation: orientation.into(),
        label: (label_col != "none").then(|| label_col.parse::<FieldRef>().expect("infallible")),
        id: id_col.map(|s| s.parse::<FieldRef>().expect("infallible")),
    }
}

fn load(args: &DataArgs) -> Result<Dataset> {
    if args.label_col == "none" {
        return Err(Error::Validation("this command needs labeled data".into()));
    }
    data::load_csv(&args.data, &csv_options(args.orientation, &args.label_col, args.id_col.as_deref()))
}

fn solver(args: &SolverArgs) -> SolverParams {
    SolverParams {
        tol: args.tol,
        max_iter: args.max_iter,
    }
}

fn kernel(s: &str) -> Result<KernelSpec> {
    s.parse::<KernelSpec>()
}

/// Finds `names` among the dataset's features, failing on any mismatch.
fn locate(d: &Dataset, report: &SelectionResult, source: &Path) -> Result<Vec<usize>> {
    if report.feature_names != d.feature_names() {
        return Err(Error::Validation(format!(
            "{} was made from different features ({} listed, data has {})",
            source.display(),
            report.feature_names.len(),
            d.n_features()
        )));
    }
    Ok(report.selected.clone())
}

fn read_report(path: &Path) -> Result<SelectionResult> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    SelectionResult::from_report(&text)
}

pub fn select(a: SelectArgs) -> Result<()> {
    let cfg = StepwiseConfig {
        select_kernel: kernel(&a.select_kernel)?,
        predict_kernel: kernel(&a.predict_kernel)?,
        c: a.c,
        folds: a.folds,
        seed: a.seed,
        solver: solver(&a.solver),
        threshold: a.threshold.as_deref().map(parse_fraction).transpose()?,
    };
    let raw = load(&a.data)?;
    let scaled = if a.solver.no_standardize {
        raw.clone()
    } else {
        data::standardize(&raw, None)?.0
    };
    let result = select_features(&scaled, &cfg)?;
    let reduced = raw.reduce(&result.selected)?;
    let mut out = Outputs::new();
    out.add(a.out.join("selection.txt"), result.to_report());
    out.add(a.out.join("reduced.csv"), data::write_csv_string(&reduced));
    out.commit()?;
    eprintln!(
        "selected {} of {} features at threshold {} (validation accuracy {:.4})",
        result.selected.len(),
        raw.n_features(),
        result.chosen_threshold,
        result.validation_accuracy
    );
    Ok(())
}

pub fn reduce(a: ReduceArgs) -> Result<()> {
    let report = read_report(&a.report)?;
    let d = load(&a.data)?;
    let cols = locate(&d, &report, &a.report)?;
    let reduced = d.reduce(&cols)?;
    let mut out = Outputs::new();
    out.add(a.out, data::write_csv_string(&reduced));
    out.commit()
}

/// Flags of a compare run in config syntax, so `--replay` can reproduce it.
fn manifest_entries(a: &CompareArgs, methods: &[MethodConfig], label: &str, digest: &str) -> Vec<(String, String)> {
    let mut e = vec![
        ("data".to_string(), a.data.data.display().to_string()),
        ("orientation".to_string(), a.data.orientation.name().to_string()),
        ("label-col".to_string(), a.data.label_col.clone()),
    ];
    if let Some(id) = &a.data.id_col {
        e.push(("id-col".into(), id.clone()));
    }
    for m in methods {
        e.push(("method".into(), m.to_string()));
    }
    e.push(("reps".into(), a.reps.to_string()));
    e.push(("seed".into(), a.seed.to_string()));
    e.push(("label".into(), label.to_string()));
    e.push(("tol".into(), data::fmt_f64(a.solver.tol)));
    e.push(("max-iter".into(), a.solver.max_iter.to_string()));
    e.push(("no-standardize".into(), a.solver.no_standardize.to_string()));
    e.push(("dataset-sha256".into(), digest.to_string()));
    e
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let methods: Vec<MethodConfig> = if a.methods.is_empty() {
        MethodKind::ALL.iter().map(|&k| MethodConfig::default_for(k)).collect()
    } else {
        a.methods.iter().map(|s| s.parse()).collect::<Result<_>>()?
    };
    let label = match &a.label {
        Some(l) => l.clone(),
        None => a
            .data
            .data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into()),
    };
    let d = load(&a.data)?;
    let digest = d.digest();
    if let Some(want) = &a.dataset_sha256 {
        if !want.eq_ignore_ascii_case(&digest) {
            return Err(Error::Validation(format!(
                "dataset digest {digest} does not match --dataset-sha256 {want}"
            )));
        }
    }
    let cfg = BenchmarkConfig {
        repetitions: a.reps,
        master_seed: a.seed,
        standardize: !a.solver.no_standardize,
        solver: solver(&a.solver),
        label: label.clone(),
    };
    let report = run_benchmark(&d, &methods, &cfg)?;
    let table = report.rank_table();
    let manifest = config::render(
        "stepsvm compare manifest; rerun with: stepsvm compare --replay <this file> --out <dir>",
        &manifest_entries(&a, &methods, &label, &digest),
    );
    let mut out = Outputs::new();
    out.add(a.out.join("table.txt"), table.clone());
    out.add(a.out.join("summary.csv"), report.summary_csv());
    out.add(a.out.join("repetitions.csv"), report.repetitions_csv());
    out.add(a.out.join("manifest.txt"), manifest);
    out.commit()?;
    print!("{table}");
    Ok(())
}

pub fn distances(a: DistancesArgs) -> Result<()> {
    let opts = csv_options(a.orientation, &a.label_col, a.id_col.as_deref());
    let table = data::load_table(&a.data, &opts)?;
    let (x, names, labels, feature_names) = if table.labels.is_some() {
        let d = table.into_dataset()?;
        (
            d.features().to_owned(),
            d.sample_names().to_vec(),
            Some(d.labels().to_vec()),
            d.feature_names().to_vec(),
        )
    } else {
        (table.features, table.sample_names, None, table.feature_names)
    };
    let subset = match &a.subset {
        Some(path) => {
            let report = read_report(path)?;
            if report.feature_names != feature_names {
                return Err(Error::Validation(format!(
                    "{} was made from different features ({} listed, data has {})",
                    path.display(),
                    report.feature_names.len(),
                    feature_names.len()
                )));
            }
            Some(report.selected)
        }
        None => None,
    };
    let x = if a.standardize {
        stepsvm::FeatureStats::fit(x.view()).apply(x.view())?
    } else {
        x
    };
    let p = x.ncols();
    let mut full = distance_matrix_rows(x.view(), &names, None, &format!("all {p} features"))?;
    let mut reduced = match &subset {
        Some(s) => Some(distance_matrix_rows(
            x.view(),
            &names,
            Some(s),
            &format!("{} of {p} features", s.len()),
        )?),
        None => None,
    };
    let mut contrast = None;
    if let Some(l) = &labels {
        let mut text = String::from("matrix\tfeatures\tgroup_contrast\n");
        text.push_str(&format!("full\t{p}\t{}\n", data::fmt_f64(group_contrast(&full, l)?)));
        if let (Some(r), Some(s)) = (&reduced, &subset) {
            text.push_str(&format!("reduced\t{}\t{}\n", s.len(), data::fmt_f64(group_contrast(r, l)?)));
        }
        contrast = Some(text);
    }
    if a.reorder {
        let zeros = vec![0; names.len()];
        let order = class_order(labels.as_deref().unwrap_or(&zeros), &names);
        full = full.reordered(&order)?;
        reduced = reduced.map(|r| r.reordered(&order)).transpose()?;
    }
    let mut out = Outputs::new();
    out.add(a.out.join("distances_full.csv"), full.to_csv());
    if a.pgm {
        out.add(a.out.join("distances_full.pgm"), similarity::pgm_bytes(full.values()));
    }
    if let Some(r) = &reduced {
        out.add(a.out.join("distances_reduced.csv"), r.to_csv());
        if a.pgm {
            out.add(a.out.join("distances_reduced.pgm"), similarity::pgm_bytes(r.values()));
        }
    }
    match contrast {
        Some(text) => {
            print!("{text}");
            out.add(a.out.join("contrast.txt"), text);
        }
        None => eprintln!("no labels: group contrast omitted"),
    }
    out.commit()
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let (d, truth) = data::synth_planted(&PlantedConfig {
        n: a.n,
        p: a.p,
        n_informative: a.informative,
        k: a.classes,
        effect: a.effect,
        seed: a.seed,
    })?;
    let mut out = Outputs::new();
    out.add(a.out, data::write_csv_string(&d));
    if let Some(t) = a.truth {
        let text: String = truth.iter().map(|j| format!("{j}\n")).collect();
        out.add(t, text);
    }
    out.commit()
}
