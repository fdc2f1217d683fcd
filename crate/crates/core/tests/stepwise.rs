use ndarray::{Array2, Axis};
use proptest::prelude::*;
use stepsvm::data::{standardize, synth_planted, PlantedConfig};
use stepsvm::stepwise::{
    features_within, score_features, select_features, threshold_candidates, FeatureScore, SelectionResult,
    StepwiseConfig,
};
use stepsvm::{Dataset, ErrorRate, Fraction, KernelSpec, SolverParams};

fn planted(seed: u64, n: usize, p: usize, effect: f64) -> (Dataset, Vec<usize>) {
    synth_planted(&PlantedConfig {
        n,
        p,
        n_informative: 5.min(p),
        k: 2,
        effect,
        seed,
    })
    .unwrap()
}

fn permuted_columns(d: &Dataset, perm: &[usize]) -> Dataset {
    Dataset::new(
        d.features().select(Axis(1), perm),
        d.labels().to_vec(),
        perm.iter().map(|&j| d.feature_names()[j].clone()).collect(),
        d.sample_names().to_vec(),
        d.class_names().to_vec(),
    )
    .unwrap()
}

#[test]
fn constant_feature_scores_by_majority_rule() {
    // Classes of 7, 8 and 6: a constant column can do no better than
    // calling everything the largest class.
    let labels: Vec<usize> = [vec![0; 7], vec![1; 8], vec![2; 6]].concat();
    let x = Array2::from_elem((21, 1), 4.2);
    let d = Dataset::new(
        x,
        labels,
        vec!["g".into()],
        (0..21).map(|i| format!("s{i}")).collect(),
        vec!["a".into(), "b".into(), "c".into()],
    )
    .unwrap();
    let s = score_features(&d, &KernelSpec::rbf(), 1.0, &SolverParams::default()).unwrap();
    assert_eq!(s[0].apr, ErrorRate { errors: 13, n: 21 });
    assert_eq!(s[0].apr.to_string(), "13/21");
}

#[test]
fn informative_features_score_better_than_noise() {
    let (d, truth) = synth_planted(&PlantedConfig {
        n: 60,
        p: 500,
        n_informative: 10,
        k: 2,
        effect: 2.0,
        seed: 11,
    })
    .unwrap();
    let s = score_features(&d, &KernelSpec::rbf(), 1.0, &SolverParams::default()).unwrap();
    let mean = |inf: bool| {
        let v: Vec<f64> = s
            .iter()
            .filter(|f| truth.contains(&f.feature) == inf)
            .map(|f| f.apr_real())
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean(true) < mean(false), "{} vs {}", mean(true), mean(false));
}

#[test]
fn exact_threshold_comparison() {
    let s = vec![
        FeatureScore {
            feature: 0,
            apr: ErrorRate { errors: 6, n: 181 },
        },
        FeatureScore {
            feature: 1,
            apr: ErrorRate { errors: 7, n: 181 },
        },
    ];
    assert_eq!(features_within(&s, Fraction::new(6, 181)), vec![0]);
    // 0.0331 is just under 6/181 = 0.03314...
    assert!(features_within(&s, stepsvm::stepwise::parse_fraction("0.0331").unwrap()).is_empty());
}

#[test]
fn reduce_then_score_matches_subset_of_scores() {
    let (d, _) = planted(3, 24, 12, 1.5);
    let all = score_features(&d, &KernelSpec::rbf(), 1.0, &SolverParams::default()).unwrap();
    let pick = [1, 4, 7, 11];
    let r = d.reduce(&pick).unwrap();
    let sub = score_features(&r, &KernelSpec::rbf(), 1.0, &SolverParams::default()).unwrap();
    for (k, &j) in pick.iter().enumerate() {
        assert_eq!(sub[k].apr, all[j].apr);
    }
}

fn check_invariants(r: &SelectionResult, p: usize, n: usize) {
    assert_eq!(r.scores.len(), p);
    for w in r.scores.windows(2) {
        assert!((w[0].apr.ratio(), w[0].feature) < (w[1].apr.ratio(), w[1].feature));
    }
    for s in &r.scores {
        assert!(s.apr.errors <= s.apr.n && s.apr.n == n);
        assert_eq!(s.apr_real(), s.apr.errors as f64 / n as f64);
    }
    assert_eq!(r.selected, features_within(&r.scores, r.chosen_threshold));
    assert!(!r.selected.is_empty() && r.selected.len() <= p);
    // Completeness: one trace entry per distinct achievable subset.
    let cands = threshold_candidates(&r.scores);
    assert_eq!(r.candidate_trace.iter().map(|c| c.threshold).collect::<Vec<_>>(), cands);
    assert!(cands.len() <= n + 1);
    // Nested, strictly growing subsets.
    for w in r.candidate_trace.windows(2) {
        assert!(w[0].subset_size < w[1].subset_size);
        let a = features_within(&r.scores, w[0].threshold);
        let b = features_within(&r.scores, w[1].threshold);
        assert!(a.iter().all(|j| b.contains(j)));
    }
    // Winner: best accuracy, then smallest subset, then smallest threshold.
    let best = r.candidate_trace.iter().map(|c| c.accuracy).fold(f64::MIN, f64::max);
    let winners: Vec<_> = r.candidate_trace.iter().filter(|c| c.accuracy == best).collect();
    let w = winners.iter().min_by_key(|c| (c.subset_size, c.threshold)).unwrap();
    assert_eq!(w.threshold, r.chosen_threshold);
    assert_eq!(r.validation_accuracy, best);
}

#[test]
fn selection_invariants_on_planted_data() {
    for seed in 0..3 {
        let (d, _) = planted(seed, 30, 40, 1.5);
        let (d, _) = standardize(&d, None).unwrap();
        let r = select_features(&d, &StepwiseConfig { seed, ..Default::default() }).unwrap();
        check_invariants(&r, 40, 30);
    }
}

#[test]
fn fixed_threshold_mode_evaluates_one_candidate() {
    let (d, _) = planted(5, 30, 20, 2.0);
    let scores = score_features(&d, &KernelSpec::rbf(), 1.0, &SolverParams::default()).unwrap();
    let t = threshold_candidates(&scores)[2];
    let r = select_features(
        &d,
        &StepwiseConfig {
            threshold: Some(t),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(r.candidate_trace.len(), 1);
    assert_eq!(r.chosen_threshold, t);
    assert_eq!(r.selected, features_within(&scores, t));
}

#[test]
fn too_few_members_for_folds_is_rejected() {
    let (d, _) = planted(1, 8, 5, 1.0);
    let cfg = StepwiseConfig {
        folds: 5,
        ..Default::default()
    };
    assert!(matches!(select_features(&d, &cfg), Err(stepsvm::Error::Validation(_))));
}

#[test]
fn result_is_independent_of_thread_count() {
    let (d, _) = planted(8, 30, 60, 1.5);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| select_features(&d, &StepwiseConfig::default()).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one.to_report(), run(3).to_report());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn permuting_columns_permutes_selection(seed in 0u64..1000, rot in 1usize..15) {
        let (d, _) = planted(seed, 20, 15, 1.5);
        let perm: Vec<usize> = (0..15).map(|j| (j + rot) % 15).collect();
        let dp = permuted_columns(&d, &perm);
        let cfg = StepwiseConfig { folds: 3, seed, ..Default::default() };
        let a = select_features(&d, &cfg).unwrap();
        let b = select_features(&dp, &cfg).unwrap();
        let mut mapped: Vec<usize> = b.selected.iter().map(|&j| perm[j]).collect();
        mapped.sort_unstable();
        prop_assert_eq!(mapped, a.selected.clone());
        prop_assert!((a.validation_accuracy - b.validation_accuracy).abs() < 1e-9);
        prop_assert_eq!(a.chosen_threshold, b.chosen_threshold);
    }

    #[test]
    fn candidates_are_sorted_distinct_and_bounded(
        errs in prop::collection::vec(0usize..=12, 1..40)
    ) {
        let scores: Vec<FeatureScore> = errs
            .iter()
            .enumerate()
            .map(|(feature, &errors)| FeatureScore { feature, apr: ErrorRate { errors, n: 12 } })
            .collect();
        let c = threshold_candidates(&scores);
        prop_assert!(c.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(c.len() <= 13);
        for s in &scores {
            prop_assert!(c.contains(&s.apr.ratio()));
        }
        // Every real cutoff gives a subset that some candidate reproduces.
        for cut in 0..=12 {
            let t = Fraction::new(cut, 12);
            let direct = features_within(&scores, t);
            if !direct.is_empty() {
                let best = c.iter().rev().find(|&&x| x <= t).unwrap();
                prop_assert_eq!(features_within(&scores, *best), direct);
            }
        }
    }
}

#[test]
fn report_parses_back() {
    let (d, _) = planted(2, 24, 18, 2.0);
    let r = select_features(&d, &StepwiseConfig::default()).unwrap();
    let text = r.to_report();
    assert!(text.starts_with("stepsvm-selection 1\n"));
    assert!(text.contains(&format!("threshold\t{}\n", r.chosen_threshold)));
    for &j in &r.selected {
        assert!(text.contains(&format!("selected\t{j}\t{}\n", d.feature_names()[j])));
    }
    assert_eq!(SelectionResult::from_report(&text).unwrap(), r);
    assert!(SelectionResult::from_report("stepsvm-selection 2\n").is_err());
    assert!(SelectionResult::from_report(&text[..text.len() / 2]).is_err());
}
