use schatten::cv::{
    evaluate_dataset, fold_assignment, kfold_select_alpha, rff_benchmark, run_benchmark, AlphaGrid,
    CvConfig,
};
use schatten::ensembles::{
    sample_spherical, EnsembleConfig, EquicorrelatedConfig, SphericalGaussianConfig,
};
use schatten::rff::RffConfig;
use schatten::SchattenIndex;

#[test]
fn noiseless_data_picks_the_smallest_alpha() {
    let cfg = SphericalGaussianConfig {
        n_obs: 100,
        n_feat: 20,
        beta: 1.0,
        sigma: 0.0,
    };
    let cv = CvConfig::default();
    let smallest = cv.grid.points()[0];
    let runs = 40;
    let mut hits = 0;
    for seed in 0..runs {
        let ds = sample_spherical(&cfg, 10, seed).unwrap();
        for p in SchattenIndex::ALL {
            hits += usize::from(
                kfold_select_alpha(&ds.x_tr, &ds.y_tr, p, &CvConfig { seed, ..cv.clone() })
                    .unwrap()
                    == smallest,
            );
        }
    }
    assert!(
        hits as f64 >= 0.95 * (3 * runs) as f64,
        "{hits} of {}",
        3 * runs
    );
}

#[test]
fn selection_never_sees_test_labels() {
    let cfg = SphericalGaussianConfig {
        n_obs: 60,
        n_feat: 30,
        beta: 1.0,
        sigma: 1.5,
    };
    let alphas = AlphaGrid::default().points();
    for seed in 0..5 {
        let ds = sample_spherical(&cfg, 200, seed).unwrap();
        let mut shuffled = ds.clone();
        shuffled.y_te = shuffled.y_te.map(|v| -3.0 * v + 1.0);
        let (_, a) = evaluate_dataset(&ds, &SchattenIndex::ALL, &alphas, 3, seed).unwrap();
        let (_, b) = evaluate_dataset(&shuffled, &SchattenIndex::ALL, &alphas, 3, seed).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn folds_are_balanced() {
    let labels = fold_assignment(10, 3, 1).unwrap();
    let counts: Vec<usize> = (0..3)
        .map(|k| labels.iter().filter(|l| **l == k).count())
        .collect();
    assert_eq!(counts, vec![4, 3, 3]);
    assert!(fold_assignment(2, 3, 1).is_err());
}

#[test]
fn benchmarks_are_reproducible() {
    let ensemble = EnsembleConfig::Equicorrelated {
        config: EquicorrelatedConfig {
            n_obs: 40,
            n_feat: 10,
            rho: 0.3,
            sigma: 1.0,
            sparse: None,
        },
        n_test: 100,
    };
    let cfg = CvConfig {
        n_datasets: 12,
        seed: 3,
        ..CvConfig::default()
    };
    let a = run_benchmark(&ensemble, &cfg).unwrap();
    assert_eq!(a, run_benchmark(&ensemble, &cfg).unwrap());
    assert_ne!(
        a.test_mse,
        run_benchmark(
            &ensemble,
            &CvConfig {
                seed: 4,
                ..cfg.clone()
            }
        )
        .unwrap()
        .test_mse
    );
    assert_eq!(a.win_count.iter().sum::<usize>(), 12);
    let ridge = a.ratio_to_ridge.as_ref().unwrap()[a.index_of(SchattenIndex::Frobenius).unwrap()];
    assert!((ridge - 1.0).abs() < 1e-15);
}

#[test]
fn rff_benchmark_runs_on_random_features() {
    let rff = RffConfig {
        n_test: 200,
        ..RffConfig::new(40, 0.5)
    };
    let cfg = CvConfig {
        n_datasets: 4,
        models: vec![SchattenIndex::Nuclear, SchattenIndex::Frobenius],
        ..CvConfig::default()
    };
    let r = rff_benchmark(&rff, &cfg).unwrap();
    assert_eq!(r.test_mse.len(), 2);
    assert!(r.avg_error.iter().all(|e| e.is_finite() && *e > 0.0));
    let bad = CvConfig {
        models: SchattenIndex::ALL.to_vec(),
        ..cfg
    };
    assert!(rff_benchmark(&rff, &bad).is_err());
}
