use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ttexp::benchmarks::{
    affine_exponent_tt, bayes_potential_tt, fourier_kl, gaussian_logdensity_tt, kl_truncation_error,
    nystrom_kl, AffineForward, GaussianDensitySpec, Grid,
};
use ttexp::estimate::normal_samples;
use ttexp::galerkin::basis_rows;
use ttexp::tt::TTTensor;

fn random_gammas(m: usize, j: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| (0..j).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()
}

#[test]
fn affine_tt_matches_direct_sum() {
    let gammas = random_gammas(4, 10, 1);
    let h = affine_exponent_tt(&gammas).unwrap();
    assert!(h.tensor().ranks().iter().all(|&r| r <= 5));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let y: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
        let got = h.evaluate(&y).unwrap();
        for (x, g) in got.iter().enumerate() {
            let want: f64 = (0..4).map(|m| gammas[m][x] * y[m]).sum();
            assert!((g - want).abs() < 1e-13);
        }
    }
    // affine: every stochastic mode has exactly two coefficients
    assert!(h.degrees().iter().all(|&d| d == 2));
}

#[test]
fn affine_tt_small_cases() {
    let h = affine_exponent_tt(&random_gammas(1, 5, 3)).unwrap();
    assert_eq!(h.tensor().ranks(), vec![1, 2, 1]);
    let z = affine_exponent_tt(&vec![vec![0.0; 5]; 3]).unwrap();
    assert_eq!(z.tensor().norm(), 0.0);
}

#[test]
fn fourier_field_decays() {
    let f = fourier_kl(&Grid::unit_square(8), 6, 2.0).unwrap();
    let amps: Vec<f64> = f.gammas.iter().map(|g| g.iter().fold(0.0f64, |a, v| a.max(v.abs()))).collect();
    for (m, a) in amps.iter().enumerate() {
        let bound = 0.9 / (std::f64::consts::PI.powi(2) / 6.0) / ((m + 1) as f64).powi(2);
        assert!(*a <= bound + 1e-15);
    }
}

#[test]
fn nystrom_properties() {
    let grid = Grid::l_shape(12);
    let f = nystrom_kl(1e-2, 1.0, &grid, 20).unwrap();
    let lam = f.eigenvalues.clone().unwrap();
    assert!(lam.windows(2).all(|w| w[0] >= w[1]) && lam.iter().all(|&l| l >= 0.0));
    let trace = 1e-2 * grid.area();
    assert!((lam.iter().sum::<f64>() - trace).abs() < 1e-10 * trace);
    // quadrature-orthogonal eigenfunctions: sum_j w_j gamma_a gamma_b = lambda_a delta_ab
    for a in 0..5 {
        for b in 0..5 {
            let ip: f64 = (0..grid.len()).map(|j| grid.weights[j] * f.gammas[a][j] * f.gammas[b][j]).sum();
            let want = if a == b { lam[a] } else { 0.0 };
            assert!((ip - want).abs() < 1e-12 * lam[0]);
        }
    }
    let errs: Vec<f64> = (1..20).map(|m| kl_truncation_error(&lam, m, 50)).collect();
    assert!(errs.windows(2).all(|w| w[1] <= w[0]));
    let long = nystrom_kl(1e-2, 1e4, &grid, 2).unwrap().eigenvalues.unwrap();
    assert!((long[0] - trace).abs() < 1e-6 * trace && long[1] < 1e-8 * trace);
    let short = nystrom_kl(1e-2, 0.3, &grid, 2).unwrap().eigenvalues.unwrap();
    assert!(short[19] / short[0] > lam[19] / lam[0]);
}

#[test]
fn covariance_closed_forms() {
    for m in 1..=8 {
        for mu in [0.2, 0.5, 0.8, 1.0] {
            let s = GaussianDensitySpec::new(m, mu).unwrap();
            let cov = s.covariance();
            assert!((cov.determinant().ln() - s.log_det()).abs() < 1e-12);
            let inv = cov.try_inverse().unwrap();
            let c = s.inverse_c();
            let closed = DMatrix::from_fn(m, m, |i, j| f64::from(u8::from(i == j)) / mu - c);
            assert!((inv - closed).norm() < 1e-11);
        }
    }
    assert!(GaussianDensitySpec::new(3, 0.0).is_err());
}

#[test]
fn log_density_tt_is_exact() {
    for (m, mu) in [(1, 1.0), (4, 0.8), (6, 0.3)] {
        let s = GaussianDensitySpec::new(m, mu).unwrap();
        let h = gaussian_logdensity_tt(m, mu).unwrap();
        assert!(h.tensor().max_rank() <= 4);
        let inv = s.covariance().try_inverse().unwrap();
        for y in normal_samples(m, 100, 7) {
            let v = nalgebra::DVector::from_column_slice(&y);
            let dense = -0.5 * m as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * s.log_det() - 0.5 * v.dot(&(&inv * &v));
            assert!((h.evaluate(&y).unwrap()[0] - dense).abs() < 1e-11);
            assert!((s.log_density(&y) - dense).abs() < 1e-11);
        }
    }
    let h = gaussian_logdensity_tt(3, 1.0).unwrap();
    let y = [0.3, -1.0, 2.0];
    let want = -1.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * y.iter().map(|v| v * v).sum::<f64>();
    assert!((h.evaluate(&y).unwrap()[0] - want).abs() < 1e-13);
}

#[test]
fn bayes_potential_examples() {
    let g = TTTensor::rank_one(&[vec![0.0, 1.0]]).unwrap();
    let l = bayes_potential_tt(&[g.clone()], &[0.0], &[1.0], 1e-14).unwrap();
    let d = l.tensor().to_dense().unwrap().data;
    assert!((d[0] + 0.5).abs() < 1e-14 && d[1].abs() < 1e-14 && (d[2] + 0.5f64.sqrt()).abs() < 1e-14);
    let c = TTTensor::constant(&[2, 2], 1.5).unwrap();
    let zero = bayes_potential_tt(&[c.clone(), c], &[1.5, 1.5], &[0.1, 0.2], 1e-14).unwrap();
    assert!(zero.tensor().norm() < 1e-14);
    let scaled = bayes_potential_tt(&[g.clone()], &[0.3], &[2.0], 1e-14).unwrap();
    let base = bayes_potential_tt(&[g.clone()], &[0.3], &[1.0], 1e-14).unwrap();
    let diff = scaled.tensor().sub(&base.tensor().scale(0.25)).unwrap().norm();
    assert!(diff < 1e-14);
    assert!(bayes_potential_tt(&[g.clone()], &[0.0], &[0.0], 1e-14).is_err());
    assert!(bayes_potential_tt(&[g], &[0.0, 1.0], &[1.0], 1e-14).is_err());
}

#[test]
fn bayes_potential_peaks_at_truth() {
    let fwd = AffineForward::random(4, 6, 0.5, 11);
    let y_star: Vec<f64> = normal_samples(4, 1, 12).pop().unwrap();
    let delta = fwd.evaluate(&y_star);
    let g: Vec<TTTensor> = (0..6).map(|j| fwd.component_tt(j).unwrap()).collect();
    for y in normal_samples(4, 20, 13) {
        let rows = basis_rows(&g[0], 0, &y).unwrap();
        for (j, gj) in g.iter().enumerate() {
            assert!((gj.evaluate(&rows).unwrap() - fwd.evaluate(&y)[j]).abs() < 1e-13);
        }
    }
    let l = bayes_potential_tt(&g, &delta, &[0.1; 6], 1e-13).unwrap();
    assert!(l.evaluate(&y_star).unwrap()[0].abs() < 1e-10);
    for y in normal_samples(4, 1000, 14) {
        assert!(l.evaluate(&y).unwrap()[0] <= 1e-10);
    }
}
