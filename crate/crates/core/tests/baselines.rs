use ndarray::{Array2, Axis};
use proptest::prelude::*;
use stepsvm::baselines::correlation::cv_correlation_thresholds;
use stepsvm::baselines::{
    correlation_filter, forest_predict, forest_train_dataset, forest_votes, pca_fit, pca_fit_covariance, pca_fit_gram,
    pca_svm_search, pearson_r, rf_rfe, svm_test_accuracy, sweep_correlation_thresholds, ForestConfig, DEFAULT_THRESHOLDS,
};
use stepsvm::data::{stratified_half_split, synth_planted, PlantedConfig};
use stepsvm::{Dataset, KernelSpec, SolverParams};
use stepsvm_testkit::{correlation_filter_oracle, jacobi_eigen, naive_pearson, TestRng};

fn dataset(x: Array2<f64>, labels: Vec<usize>) -> Dataset {
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

fn random_matrix(rng: &mut TestRng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.normal())
}

/// Columns built from a few shared factors so that strong correlations occur.
fn correlated_matrix(rng: &mut TestRng, n: usize, p: usize) -> Array2<f64> {
    let factors = random_matrix(rng, n, 3);
    let mut x = Array2::zeros((n, p));
    for j in 0..p {
        let f = rng.below(3);
        let w = rng.range(0.2, 3.0);
        let noise = rng.range(0.0, 0.8);
        let shift = rng.range(-5.0, 5.0);
        for i in 0..n {
            x[[i, j]] = shift + w * factors[[i, f]] + noise * rng.normal();
        }
    }
    x
}

#[test]
fn pearson_matches_independent_formula() {
    let mut rng = TestRng::new(4);
    for _ in 0..200 {
        let n = 2 + rng.below(20);
        let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let r = pearson_r(&x, &y).unwrap();
        assert!((r - naive_pearson(&x, &y).unwrap()).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn pearson_of_affine_image_is_sign(seed in any::<u64>(), a in -50.0f64..50.0, c in -100.0f64..100.0) {
        prop_assume!(a.abs() > 1e-3);
        let mut rng = TestRng::new(seed);
        let x: Vec<f64> = (0..12).map(|_| rng.normal()).collect();
        let y: Vec<f64> = x.iter().map(|v| a * v + c).collect();
        prop_assert!((pearson_r(&x, &y).unwrap() - a.signum()).abs() < 1e-12);
    }

    #[test]
    fn filter_equals_oracle(seed in any::<u64>(), p in 2usize..=30, t in prop::sample::select(DEFAULT_THRESHOLDS.to_vec())) {
        let mut rng = TestRng::new(seed);
        let n = 4 + rng.below(12);
        let x = correlated_matrix(&mut rng, n, p);
        let d = dataset(x.clone(), (0..n).map(|i| i % 2).collect());
        let got = correlation_filter(&d, t).unwrap();
        let cols: Vec<Vec<f64>> = x.axis_iter(Axis(1)).map(|c| c.to_vec()).collect();
        prop_assert_eq!(&got.kept, &correlation_filter_oracle(&cols, t));
        let mut all = [got.kept.clone(), got.removed.clone()].concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..p).collect::<Vec<_>>());
        for (a, &i) in got.kept.iter().enumerate() {
            for &j in &got.kept[a + 1..] {
                if let Some(r) = naive_pearson(&cols[i], &cols[j]) {
                    prop_assert!(r.abs() <= t + 1e-12);
                }
            }
        }
    }
}

#[test]
fn near_one_threshold_keeps_everything_and_matches_unreduced() {
    let (d, _) = synth_planted(&PlantedConfig {
        n: 30,
        p: 20,
        n_informative: 4,
        k: 2,
        effect: 1.5,
        seed: 2,
    })
    .unwrap();
    let split = stratified_half_split(&d, 1).unwrap();
    let (tr, te) = (d.select_rows(&split.train).unwrap(), d.select_rows(&split.test).unwrap());
    let sweep =
        sweep_correlation_thresholds(&tr, &te, &[0.999999], &KernelSpec::rbf(), 1.0, &SolverParams::default(), false)
            .unwrap();
    assert_eq!(sweep.rows[0].1, 20);
    let full = svm_test_accuracy(
        tr.features(),
        tr.labels(),
        te.features(),
        te.labels(),
        2,
        &KernelSpec::rbf(),
        1.0,
        &SolverParams::default(),
    )
    .unwrap();
    assert_eq!(sweep.rows[0].2, full);
}

#[test]
fn duplicate_column_acts_as_rescaled_single_column() {
    // A duplicated column counts twice in dot products and squared
    // distances, which is the same as keeping one copy scaled by sqrt(2).
    // With gamma held fixed the SVM cannot tell the two apart, so the filter
    // dropping the copy changes nothing beyond that rescaling.
    let mut rng = TestRng::new(21);
    let n = 40;
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let base = Array2::from_shape_fn((n, 6), |(i, j)| rng.normal() + if j < 2 { labels[i] as f64 * 1.5 } else { 0.0 });
    let mut x = Array2::zeros((n, 7));
    x.slice_mut(ndarray::s![.., ..6]).assign(&base);
    x.column_mut(6).assign(&base.column(5));
    let d = dataset(x, labels);
    let mut scaled = base.clone();
    scaled.column_mut(5).mapv_inplace(|v| v * 2f64.sqrt());
    let params = SolverParams::with_tol(1e-10);
    for seed in 0..5 {
        let split = stratified_half_split(&d, seed).unwrap();
        let tr = d.select_rows(&split.train).unwrap();
        assert_eq!(correlation_filter(&tr, 0.95).unwrap().removed, vec![6]);
        for spec in [KernelSpec::linear(), KernelSpec::rbf().with_gamma(0.2)] {
            let dup_model = stepsvm::SvmModel::fit(tr.features(), tr.labels(), 2, &spec, 1.0, &params).unwrap();
            let xs = scaled.select(Axis(0), &split.train);
            let one_model = stepsvm::SvmModel::fit(xs.view(), tr.labels(), 2, &spec, 1.0, &params).unwrap();
            let f_dup = dup_model.pairs()[0]
                .svm
                .decision_function(d.features().select(Axis(0), &split.test).view())
                .unwrap();
            let f_one = one_model.pairs()[0]
                .svm
                .decision_function(scaled.select(Axis(0), &split.test).view())
                .unwrap();
            for (a, b) in f_dup.iter().zip(&f_one) {
                assert!((a - b).abs() < 1e-6, "seed {seed} {spec}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn internal_cv_sweep_reports_every_threshold() {
    let (d, _) = synth_planted(&PlantedConfig {
        n: 30,
        p: 25,
        n_informative: 5,
        k: 2,
        effect: 2.0,
        seed: 4,
    })
    .unwrap();
    let s = cv_correlation_thresholds(&d, &DEFAULT_THRESHOLDS, 3, 9, &KernelSpec::rbf(), 1.0, &SolverParams::default(), true)
        .unwrap();
    assert_eq!(s.rows.len(), 6);
    assert!(s.rows.iter().all(|r| (0.0..=1.0).contains(&r.2)));
    assert!(s.rows.windows(2).all(|w| w[0].1 <= w[1].1));
    assert_eq!(s.trace_rows().len(), 6);
}

// PCA -----------------------------------------------------------------------

fn assert_orthonormal(c: &Array2<f64>, tol: f64) {
    let g = c.dot(&c.t());
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g[[i, j]] - want).abs() < tol, "({i},{j}) = {}", g[[i, j]]);
        }
    }
}

#[test]
fn gram_route_matches_covariance_oracle() {
    let mut rng = TestRng::new(77);
    let x = random_matrix(&mut rng, 10, 6);
    let gram = pca_fit_gram(x.view(), 6).unwrap();
    let cov = pca_fit_covariance(x.view(), 6).unwrap();
    // Independent oracle: Jacobi on the sample covariance.
    let n = x.nrows() as f64;
    let mean = x.mean_axis(Axis(0)).unwrap();
    let xc = &x - &mean;
    let s = xc.t().dot(&xc) / (n - 1.0);
    let rows: Vec<Vec<f64>> = s.rows().into_iter().map(|r| r.to_vec()).collect();
    let (vals, vecs) = jacobi_eigen(&rows);
    for i in 0..6 {
        assert!((gram.explained_variance[i] - vals[i]).abs() < 1e-8);
        assert!((cov.explained_variance[i] - vals[i]).abs() < 1e-8);
        let dot: f64 = gram.components.row(i).iter().zip(&vecs[i]).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-8);
        for (a, b) in gram.components.row(i).iter().zip(cov.components.row(i)) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn scores_are_uncorrelated_and_variances_sorted() {
    let mut rng = TestRng::new(5);
    for (n, p) in [(8, 30), (20, 5), (12, 12)] {
        let x = random_matrix(&mut rng, n, p);
        let q = (n - 1).min(p);
        let b = pca_fit(x.view(), q).unwrap();
        assert_orthonormal(&b.components, 1e-10);
        assert!(b.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        let z = b.project(x.view()).unwrap();
        let cov = z.t().dot(&z) / (n as f64 - 1.0);
        for i in 0..q {
            assert!((cov[[i, i]] - b.explained_variance[i]).abs() < 1e-8);
            for j in 0..i {
                assert!(cov[[i, j]].abs() < 1e-8);
            }
        }
        // Largest-magnitude loading is positive.
        for row in b.components.rows() {
            let lead = row.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(lead > 0.0);
        }
    }
}

#[test]
fn top_axis_separation_picks_one_component() {
    let mut rng = TestRng::new(13);
    let n = 40;
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let x = Array2::from_shape_fn((n, 5), |(i, j)| {
        if j == 0 {
            if labels[i] == 1 { 6.0 } else { -6.0 }
        } else {
            0.5 * rng.normal()
        }
    });
    let d = dataset(x, labels);
    let split = stratified_half_split(&d, 2).unwrap();
    let (tr, te) = (d.select_rows(&split.train).unwrap(), d.select_rows(&split.test).unwrap());
    let basis = pca_fit(tr.features(), 5).unwrap();
    let s = pca_svm_search(&tr, &te, &basis, &KernelSpec::rbf(), 1.0, &SolverParams::default()).unwrap();
    assert_eq!(s.best_k, 1);
    assert_eq!(s.best_accuracy(), 1.0);
    // The last prefix is the SVM on all projected scores.
    let ztr = basis.project(tr.features()).unwrap();
    let zte = basis.project(te.features()).unwrap();
    let full = svm_test_accuracy(
        ztr.view(),
        tr.labels(),
        zte.view(),
        te.labels(),
        2,
        &KernelSpec::rbf(),
        1.0,
        &SolverParams::default(),
    )
    .unwrap();
    assert_eq!(*s.accuracies.last().unwrap(), full);
}

// Forest --------------------------------------------------------------------

#[test]
fn forest_oob_on_planted_data() {
    let (d, _) = synth_planted(&PlantedConfig {
        n: 60,
        p: 100,
        n_informative: 10,
        k: 2,
        effect: 2.0,
        seed: 6,
    })
    .unwrap();
    let m = forest_train_dataset(
        &d,
        &ForestConfig {
            n_trees: 200,
            mtry: None,
            seed: 1,
        },
    )
    .unwrap();
    assert_eq!(m.n_trees, 200);
    assert_eq!(m.mtry, 10);
    assert!(m.oob_accuracy.unwrap() > 0.8, "{:?}", m.oob_accuracy);
    let votes = forest_votes(&m, d.features()).unwrap();
    assert!(votes.iter().all(|v| v.iter().sum::<u32>() == 200));
    let unanimous: Vec<usize> = votes
        .iter()
        .enumerate()
        .filter(|(_, v)| v.contains(&200))
        .map(|(i, _)| i)
        .collect();
    let pred = forest_predict(&m, d.features()).unwrap();
    for i in unanimous {
        assert_eq!(votes[i][pred[i]], 200);
    }
}

#[test]
fn rfe_recovers_planted_features() {
    let mut recall = 0.0;
    for seed in 0..10 {
        let (d, truth) = synth_planted(&PlantedConfig {
            n: 60,
            p: 200,
            n_informative: 10,
            k: 2,
            effect: 2.0,
            seed,
        })
        .unwrap();
        let r = rf_rfe(
            &d,
            &ForestConfig {
                n_trees: 100,
                mtry: None,
                seed,
            },
        )
        .unwrap();
        let sizes: Vec<usize> = r.trace.iter().map(|t| t.subset.len()).collect();
        assert!(sizes.windows(2).all(|w| w[1] < w[0] && w[1] >= w[0] / 2));
        assert_eq!(*sizes.last().unwrap(), 1);
        assert!(r.trace.iter().any(|t| t.subset == r.best_subset));
        recall += r.best_subset.iter().filter(|j| truth.contains(j)).count() as f64 / 10.0;
    }
    assert!(recall / 10.0 >= 0.6, "mean recall {}", recall / 10.0);
}
