use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ttexp::als::{als_sweep, exp_tt, normal_residual, scaled_exp_tt, AlsSolver, SolveConfig};
use ttexp::galerkin::{ExponentTT, GalerkinSystem, Weights};
use ttexp::tt::{TTOperator, TTTensor};

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn linear_exponent() -> ExponentTT {
    ExponentTT::new(TTTensor::rank_one(&[vec![0.0, 1.0]]).unwrap(), None).unwrap()
}

#[test]
fn exp_of_linear_univariate_matches_series() {
    let cfg = SolveConfig { d_a: 20, ..SolveConfig::default() };
    let out = exp_tt(&linear_exponent(), &cfg).unwrap();
    let d = out.u.to_dense().unwrap();
    for (k, &c) in d.data.iter().enumerate() {
        let want = 0.5f64.exp() / factorial(k).sqrt();
        assert!((c - want).abs() < 1e-8, "k={k}: {c} vs {want}");
    }
}

fn dense_solve(w: &TTOperator, b: &TTTensor) -> Vec<f64> {
    let a = w.to_dense().unwrap();
    let n = a.rows;
    let m = nalgebra::DMatrix::from_row_slice(n, n, &a.data);
    let rhs = nalgebra::DVector::from_row_slice(&b.to_dense().unwrap().data);
    m.cholesky().unwrap().solve(&rhs).as_slice().to_vec()
}

#[test]
fn als_with_full_ranks_reaches_dense_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = TTTensor::random(&[3, 2, 3], &[1, 2, 2, 1], &mut rng).unwrap().scale(0.3);
    let h = ExponentTT::new(h, None).unwrap();
    let sys = GalerkinSystem::assemble(&h, 4, Weights::default()).unwrap();
    let x = dense_solve(&sys.w, &sys.b);
    let dims = sys.ansatz_dims.clone();
    let u0 = TTTensor::random(&dims, &[1, 4, 4, 1], &mut rng).unwrap();
    let mut s = AlsSolver::new(&sys.w, &sys.b, u0).unwrap();
    for _ in 0..6 {
        s.sweep().unwrap();
    }
    let u = s.iterate().to_dense().unwrap().data;
    let err: f64 = u.iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(err / nx < 1e-10, "{}", err / nx);
    assert!(normal_residual(&sys.w, &sys.b, s.iterate()).unwrap() < 1e-10);
    let j = s.objective();
    for w in j.windows(2) {
        assert!(w[1] <= w[0] + 1e-10 * w[0].abs().max(1.0));
    }
    let one = als_sweep(&sys.w, &sys.b, &TTTensor::random(&dims, &[1, 4, 4, 1], &mut rng).unwrap()).unwrap();
    assert_eq!(one.dims(), dims);
}

#[test]
fn squaring_univariate_series() {
    for s in 1..4 {
        let cfg = SolveConfig { d_a: 20, s, tol_rescale: 1e-14, ..SolveConfig::default() };
        let out = scaled_exp_tt(&linear_exponent(), &cfg).unwrap();
        let d = out.u.to_dense().unwrap();
        let worst = d.data.iter().enumerate().map(|(k, &c)| (c - 0.5f64.exp() / factorial(k).sqrt()).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "s={s}: {worst}");
    }
}

#[test]
fn bilinear_exponent_against_quadrature() {
    use ttexp::basis::{gauss_hermite, hermite_eval};
    let h = ExponentTT::new(TTTensor::rank_one(&[vec![0.0, 0.5], vec![0.2, 0.3]]).unwrap(), None).unwrap();
    let d = 16;
    let rule = gauss_hermite(80).unwrap();
    let mut want = vec![0.0; d * d];
    for (x, wx) in rule.nodes.iter().zip(&rule.weights) {
        let px = hermite_eval(d, *x).unwrap();
        for (y, wy) in rule.nodes.iter().zip(&rule.weights) {
            let py = hermite_eval(d, *y).unwrap();
            let f = (0.5 * x * (0.2 + 0.3 * y)).exp() * wx * wy;
            for i in 0..d {
                for j in 0..d {
                    want[i * d + j] += f * px[i] * py[j];
                }
            }
        }
    }
    let nw: f64 = want.iter().map(|v| v * v).sum::<f64>().sqrt();
    let err = |u: &TTTensor| {
        let g = u.to_dense().unwrap().data;
        g.iter().zip(&want).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() / nw
    };
    let base = SolveConfig { d_a: d, rank: Some(8), ..SolveConfig::default() };
    let direct = exp_tt(&h, &base).unwrap();
    let sq = scaled_exp_tt(&h, &SolveConfig { s: 3, tol_rescale: 1e-12, ..base.clone() }).unwrap();
    eprintln!("direct {:e} squared {:e} res {:e}", err(&direct.u), err(&sq.u), direct.report.res);
    assert!(err(&direct.u) < 1e-6);
    assert!(err(&sq.u) < 1e-6);
}
