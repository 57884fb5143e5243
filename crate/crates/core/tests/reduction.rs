mod common;

use hybrid_ids::reduction::{fit_pca, PcaModel};
use hybrid_ids::rng::SplitMix64;
use hybrid_ids::{Error, Matrix};

use common::*;

#[test]
fn jacobi_oracle_satisfies_eigen_equation() {
    let mut rng = SplitMix64::new(1);
    let cov = covariance(&random_matrix(&mut rng, 30, 5));
    let (values, vectors) = jacobi_eigen(&cov);
    for (l, v) in values.iter().zip(&vectors) {
        for i in 0..5 {
            let av: f64 = (0..5).map(|j| cov[i][j] * v[j]).sum();
            assert!((av - l * v[i]).abs() < 1e-12);
        }
        let norm: f64 = v.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
    assert!(values.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn components_match_covariance_eigenvectors() {
    let mut rng = SplitMix64::new(77);
    for _ in 0..20 {
        let x = random_matrix(&mut rng, 40, 6);
        let (values, vectors) = jacobi_eigen(&covariance(&x));
        let model = fit_pca(&x, 3).unwrap();
        for c in 0..3 {
            assert!(sign_aligned_diff(&vectors[c], model.components().row(c)) < 1e-8);
            assert!((model.explained_variance()[c] - values[c]).abs() < 1e-9 * values[0]);
        }
    }
}

#[test]
fn projection_of_training_data_is_centered_and_decorrelated() {
    let mut rng = SplitMix64::new(3);
    let x = random_matrix(&mut rng, 100, 4);
    let model = fit_pca(&x, 4).unwrap();
    let scores = model.apply(&x).unwrap();
    let cov = covariance(&scores);
    for c in 0..4 {
        let mean: f64 = scores.column(c).iter().sum::<f64>() / 100.0;
        assert!(mean.abs() < 1e-12);
        assert!((cov[c][c] - model.explained_variance()[c]).abs() < 1e-10);
        for d in 0..4 {
            if d != c {
                assert!(cov[c][d].abs() < 1e-10);
            }
        }
    }
}

#[test]
fn full_rank_projection_reconstructs_exactly() {
    let mut rng = SplitMix64::new(8);
    let x = random_matrix(&mut rng, 20, 5);
    let model = fit_pca(&x, 5).unwrap();
    let back = model.reconstruct(&model.apply(&x).unwrap()).unwrap();
    for (a, b) in x.as_slice().iter().zip(back.as_slice()) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn k_bounds_are_enforced() {
    let mut rng = SplitMix64::new(8);
    let x = random_matrix(&mut rng, 4, 6);
    assert!(matches!(fit_pca(&x, 0), Err(Error::KTooLarge { .. })));
    assert!(matches!(fit_pca(&x, 4), Err(Error::KTooLarge { k: 4, max: 3 })));
    assert!(fit_pca(&x, 3).is_ok());
}

#[test]
fn model_file_round_trip_preserves_projection() {
    let mut rng = SplitMix64::new(12);
    let x = random_matrix(&mut rng, 30, 4);
    let model = fit_pca(&x, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.pca1");
    model.save(&path).unwrap();
    let back = PcaModel::load(&path).unwrap();
    assert_eq!(back.apply(&x).unwrap(), model.apply(&x).unwrap());
}

#[test]
fn apply_rejects_wrong_width() {
    let mut rng = SplitMix64::new(12);
    let model = fit_pca(&random_matrix(&mut rng, 30, 4), 2).unwrap();
    assert!(matches!(model.apply(&Matrix::zeros(3, 5)), Err(Error::DimMismatch(_))));
}
