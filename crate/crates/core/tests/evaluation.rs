use stepsvm::data::{stratified_half_split, synth_planted, PlantedConfig};
use stepsvm::evaluation::{
    method_seed, rank_by_mean, run_benchmark, run_method, split_seed, BenchmarkConfig, MethodConfig, MethodKind,
};
use stepsvm::{Dataset, SolverParams};

fn data(seed: u64) -> Dataset {
    synth_planted(&PlantedConfig {
        n: 30,
        p: 30,
        n_informative: 4,
        k: 2,
        effect: 2.0,
        seed,
    })
    .unwrap()
    .0
}

fn quick_methods() -> Vec<MethodConfig> {
    ["stepwise,folds=3", "original", "pca,folds=3,components=6", "correlation,folds=3", "rf_rfe,trees=25"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

fn cfg(reps: usize, seed: u64) -> BenchmarkConfig {
    BenchmarkConfig {
        repetitions: reps,
        master_seed: seed,
        ..Default::default()
    }
}

#[test]
fn report_invariants_and_paired_splits() {
    let d = data(1);
    let r = run_benchmark(&d, &quick_methods(), &cfg(4, 7)).unwrap();
    assert_eq!(r.repetitions, 4);
    assert_eq!(r.split_digests.len(), 4);
    for (rep, digest) in r.split_digests.iter().enumerate() {
        let s = stratified_half_split(&d, split_seed(7, rep)).unwrap();
        assert_eq!(&s.digest(), digest);
    }
    let mut ranks: Vec<usize> = r.methods.iter().map(|m| m.rank).collect();
    ranks.sort_unstable();
    assert_eq!(ranks, vec![1, 2, 3, 4, 5]);
    for m in &r.methods {
        assert_eq!(m.accuracies.len(), 4);
        assert_eq!(m.accuracies.iter().flatten().count() + m.failures.len(), 4);
        let ok: Vec<f64> = m.accuracies.iter().flatten().copied().collect();
        let mean = ok.iter().sum::<f64>() / ok.len() as f64;
        assert!((m.mean - mean).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&m.mean) && m.sd >= 0.0);
    }
    assert_eq!(r.methods[1].selected_counts, vec![Some(30); 4]);
}

#[test]
fn single_repetition_equals_manual_run() {
    let d = data(2);
    for m in quick_methods() {
        let r = run_benchmark(&d, std::slice::from_ref(&m), &cfg(1, 99)).unwrap();
        let seed = split_seed(99, 0);
        let s = stratified_half_split(&d, seed).unwrap();
        let manual = run_method(
            &m,
            &d.select_rows(&s.train).unwrap(),
            &d.select_rows(&s.test).unwrap(),
            true,
            method_seed(seed, m.kind()),
            &SolverParams::default(),
        )
        .unwrap();
        assert_eq!(r.methods[0].accuracies, vec![Some(manual.accuracy)], "{m}");
        assert_eq!(r.methods[0].rank, 1);
    }
}

#[test]
fn method_order_changes_only_columns() {
    let d = data(3);
    let methods = quick_methods();
    let mut reversed = methods.clone();
    reversed.reverse();
    let a = run_benchmark(&d, &methods, &cfg(3, 5)).unwrap();
    let b = run_benchmark(&d, &reversed, &cfg(3, 5)).unwrap();
    for m in &a.methods {
        let other = b.methods.iter().find(|o| o.name == m.name).unwrap();
        assert_eq!(m.accuracies, other.accuracies);
    }
}

#[test]
fn reports_are_reproducible_across_thread_counts() {
    let d = data(4);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_benchmark(&d, &quick_methods(), &cfg(3, 42)).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.rank_table(), b.rank_table());
    assert_eq!(a.repetitions_csv(), b.repetitions_csv());
    assert_eq!(a.summary_csv(), b.summary_csv());
}

#[test]
fn failures_become_missing_values() {
    let d = data(5);
    let methods: Vec<MethodConfig> = vec!["stepwise,folds=20".parse().unwrap(), "original".parse().unwrap()];
    let r = run_benchmark(&d, &methods, &cfg(2, 1)).unwrap();
    let step = &r.methods[0];
    assert_eq!(step.accuracies, vec![None, None]);
    assert_eq!(step.failures.len(), 2);
    assert!(step.mean.is_nan());
    assert_eq!(step.rank, 2);
    assert_eq!(r.methods[1].rank, 1);
    assert!(r.rank_table().contains("NA^(2)"));
    assert!(r.rank_table().contains("Failed repetitions"));
    assert!(r.repetitions_csv().contains("fewer than 20 folds"));
}

#[test]
fn bad_inputs_rejected() {
    let d = data(6);
    assert!(run_benchmark(&d, &[], &cfg(1, 0)).is_err());
    assert!(run_benchmark(&d, &quick_methods(), &cfg(0, 0)).is_err());
    let twice = vec![MethodConfig::default_for(MethodKind::Original); 2];
    assert!(run_benchmark(&d, &twice, &cfg(1, 0)).is_err());
}

#[test]
fn table_layout() {
    let d = data(7);
    let r = run_benchmark(&d, &quick_methods()[..2], &cfg(2, 3)).unwrap();
    let t = r.rank_table();
    let lines: Vec<&str> = t.lines().collect();
    assert!(lines[0].starts_with("run"));
    assert!(lines[0].contains("stepwise") && lines[0].contains("original"));
    assert!(lines[1].starts_with("data"));
    assert!(lines[1].contains("^(1)") && lines[1].contains("^(2)"));
    assert!(t.contains("declared"));
    let csv = r.summary_csv();
    assert!(csv.starts_with("run,method,config,mean_accuracy,sd,rank,completed,failed\n"));
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(r.repetitions_csv().lines().count(), 1 + 2 * 2);
}

#[test]
fn ranks_follow_means_with_declaration_tiebreak() {
    assert_eq!(rank_by_mean(&[0.9865, 0.9529, 0.9223, 0.9597, 0.9845]), vec![1, 4, 5, 3, 2]);
    assert_eq!(rank_by_mean(&[0.8, 0.8]), vec![1, 2]);
}
