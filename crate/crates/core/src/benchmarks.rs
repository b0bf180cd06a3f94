//! Benchmark exponents: Karhunen-Loeve fields, correlated Gaussian
//! log-densities and Bayesian log-likelihoods.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::als::{scaled_exp_tt, SolveConfig};
use crate::basis::multiply_coeffs;
use crate::config::{BenchmarkConfig, BenchmarkName, Domain};
use crate::estimate::{expectation, mc_report, tt_evaluator, DEFAULT_N_MC};
use crate::error::{Error, Result};
use crate::galerkin::ExponentTT;
use crate::tt::{Core3, TTTensor};

/// Riemann zeta function for `s > 1`.
pub fn zeta(s: f64) -> f64 {
    if s == 2.0 {
        return PI * PI / 6.0;
    }
    // Partial sum plus Euler-Maclaurin tail at n = N.
    const N: usize = 64;
    let head: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    let n = N as f64;
    let f = n.powf(-s);
    let d1 = -s * n.powf(-s - 1.0);
    let d3 = -s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0);
    let d5 = -s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * n.powf(-s - 5.0);
    head + n.powf(1.0 - s) / (s - 1.0) + f / 2.0 - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0
}

/// Amplitude and planar frequencies of the `m`-th Fourier mode (`m >= 1`).
pub fn fourier_kl_modes(m: usize, sigma: f64) -> (f64, usize, usize) {
    let k = (-0.5 + (0.25 + 2.0 * m as f64).sqrt()).floor() as usize;
    let b1 = m - k * (k + 1) / 2;
    let b2 = k - b1;
    let amp = 0.9 / zeta(sigma) * (m as f64).powf(-sigma);
    (amp, b1, b2)
}

/// Spatial points in the unit square with quadrature weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl Grid {
    /// Cell centres of an `n x n` partition of the unit square.
    pub fn unit_square(n: usize) -> Grid {
        Self::cells(n, |_| true)
    }

    /// Cell centres of the L-shape `[0,1]^2 \ (1/2,1)^2`.
    pub fn l_shape(n: usize) -> Grid {
        Self::cells(n, |p| !(p[0] > 0.5 && p[1] > 0.5))
    }

    fn cells(n: usize, keep: impl Fn(&[f64; 2]) -> bool) -> Grid {
        let h = 1.0 / n as f64;
        let mut points = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let p = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
                if keep(&p) {
                    points.push(p);
                }
            }
        }
        let weights = vec![h * h; points.len()];
        Grid { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `x1,x2` rows for plotting.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,x2\n");
        for p in &self.points {
            s.push_str(&format!("{},{}\n", p[0], p[1]));
        }
        s
    }
}

/// Coefficient functions of an affine field on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KLField {
    pub grid: Grid,
    /// `gammas[m][j]`: mode `m` at grid point `j`.
    pub gammas: Vec<Vec<f64>>,
    /// Covariance eigenvalues, when the field comes from a kernel.
    pub eigenvalues: Option<Vec<f64>>,
}

impl KLField {
    pub fn n_modes(&self) -> usize {
        self.gammas.len()
    }

    /// `sum_m gamma_m(x_j) y_m` at every grid point.
    pub fn evaluate(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (g, &ym) in self.gammas.iter().zip(y) {
            for (o, v) in out.iter_mut().zip(g) {
                *o += v * ym;
            }
        }
        out
    }

    /// Keeps the first `m` modes.
    pub fn truncate(&self, m: usize) -> KLField {
        KLField {
            grid: self.grid.clone(),
            gammas: self.gammas[..m.min(self.gammas.len())].to_vec(),
            eigenvalues: self.eigenvalues.clone(),
        }
    }
}

/// Fourier-mode field with decay `sigma` on `grid`.
pub fn fourier_kl(grid: &Grid, m: usize, sigma: f64) -> Result<KLField> {
    if m == 0 || !(sigma > 1.0) {
        return Err(Error::InvalidArgument("need M >= 1 and sigma > 1".into()));
    }
    let gammas = (1..=m)
        .map(|k| {
            let (amp, b1, b2) = fourier_kl_modes(k, sigma);
            grid.points
                .iter()
                .map(|p| amp * (2.0 * PI * b1 as f64 * p[0]).cos() * (2.0 * PI * b2 as f64 * p[1]).cos())
                .collect()
        })
        .collect();
    Ok(KLField {
        grid: grid.clone(),
        gammas,
        eigenvalues: None,
    })
}

/// Leading `m` modes of the Gaussian kernel `c exp(-|x - z|^2 / ell^2)` by
/// the Nystrom method on `grid`.
pub fn nystrom_kl(c: f64, ell: f64, grid: &Grid, m: usize) -> Result<KLField> {
    let n = grid.len();
    if m == 0 || m > n || !(c > 0.0) || !(ell > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= M <= J and positive scale/length, got M = {m}, J = {n}"
        )));
    }
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let k = DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (grid.points[i], grid.points[j]);
        let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        sw[i] * c * (-d2 / (ell * ell)).exp() * sw[j]
    });
    let eig = SymmetricEigen::new(k);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let largest = eig.eigenvalues[order[0]];
    let smallest = eig.eigenvalues[order[n - 1]];
    if smallest < -1e-10 * largest {
        return Err(Error::NotPsd {
            value: smallest,
            largest,
        });
    }
    let lambdas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let gammas = order[..m]
        .iter()
        .zip(&lambdas)
        .map(|(&col, &lam)| {
            let v = eig.eigenvectors.column(col);
            let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            (0..n).map(|j| sign * lam.sqrt() * v[j] / sw[j]).collect()
        })
        .collect();
    Ok(KLField {
        grid: grid.clone(),
        gammas,
        eigenvalues: Some(lambdas),
    })
}

/// Relative `L^2` error of keeping `m` of the `m_hat` leading modes.
pub fn kl_truncation_error(eigenvalues: &[f64], m: usize, m_hat: usize) -> f64 {
    let m_hat = m_hat.min(eigenvalues.len());
    let total: f64 = eigenvalues[..m_hat].iter().sum();
    let tail: f64 = eigenvalues[m.min(m_hat)..m_hat].iter().sum();
    if total > 0.0 {
        (tail / total).sqrt()
    } else {
        0.0
    }
}

/// Exact TT of `gamma(x, y) = sum_m gamma_m(x) y_m` with a leading spatial
/// mode. Bond `m` carries the pending terms `m+1..M` plus a finished state.
pub fn affine_exponent_tt(gammas: &[Vec<f64>]) -> Result<ExponentTT> {
    let m = gammas.len();
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one mode".into()));
    }
    let j = gammas[0].len();
    if j == 0 || gammas.iter().any(|g| g.len() != j) {
        return Err(Error::DimensionMismatch("coefficient functions differ in length".into()));
    }
    let mut cores = Vec::with_capacity(m + 1);
    cores.push(Core3::from_fn(1, j, m + 1, |_, x, b| if b < m { gammas[b][x] } else { 0.0 }));
    for k in 0..m {
        // states: pending term index (k..m) then finished
        let left = m - k + 1;
        let right = m - k;
        cores.push(Core3::from_fn(left, 2, right, |a, i, b| {
            let finished_out = b == right - 1;
            if a == 0 {
                // term k+1 is emitted here
                f64::from(u8::from(finished_out && i == 1))
            } else {
                // pending terms shift by one; finished stays finished
                f64::from(u8::from(a - 1 == b && i == 0))
            }
        }));
    }
    ExponentTT::with_spatial(TTTensor::new(cores)?, None)
}

/// Covariance `mu I + (1 - mu) J` of `M` correlated standard normals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianDensitySpec {
    pub m: usize,
    pub mu: f64,
}

impl GaussianDensitySpec {
    pub fn new(m: usize, mu: f64) -> Result<Self> {
        if m == 0 || !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need M >= 1 and 0 < mu <= 1, got M = {m}, mu = {mu}"
            )));
        }
        Ok(GaussianDensitySpec { m, mu })
    }

    fn big(&self) -> f64 {
        self.mu + self.m as f64 * (1.0 - self.mu)
    }

    /// `log det Sigma = (M - 1) log mu + log(mu + M (1 - mu))`.
    pub fn log_det(&self) -> f64 {
        (self.m as f64 - 1.0) * self.mu.ln() + self.big().ln()
    }

    /// `c` in `Sigma^-1 = I / mu - c J`.
    pub fn inverse_c(&self) -> f64 {
        (1.0 - self.mu) / (self.mu * self.big())
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |i, j| if i == j { 1.0 } else { 1.0 - self.mu })
    }

    pub fn log_density(&self, y: &[f64]) -> f64 {
        let sq: f64 = y.iter().map(|v| v * v).sum();
        let s: f64 = y.iter().sum();
        let quad = sq / self.mu - self.inverse_c() * s * s;
        -0.5 * self.m as f64 * (2.0 * PI).ln() - 0.5 * self.log_det() - 0.5 * quad
    }

    /// Gaussian mean of the density, `(2 pi)^(-M/2) det(Sigma + I)^(-1/2)`.
    pub fn expected_density(&self) -> f64 {
        let m = self.m as f64;
        let log_det = (m - 1.0) * (self.mu + 1.0).ln() + (self.big() + 1.0).ln();
        (-0.5 * m * (2.0 * PI).ln() - 0.5 * log_det).exp()
    }
}

/// Quadratic form `k0 + a sum y_m^2 + b (sum y_m)^2` as a rank-3 TT with
/// three Hermite coefficients per mode.
fn quadratic_tt(m: usize, k0: f64, a: f64, b: f64) -> Result<TTTensor> {
    let diag = a + b;
    let s2 = 2f64.sqrt();
    // States: 0 = nothing emitted, 1 = partial linear sum, 2 = finished.
    // Entry (from, to) is a polynomial on p_0, p_1, p_2.
    let step = |from: usize, to: usize, first: bool| -> [f64; 3] {
        let k = if first { k0 } else { 0.0 };
        match (from, to) {
            (0, 0) | (1, 1) | (2, 2) => [1.0, 0.0, 0.0],
            (0, 1) => [0.0, 1.0, 0.0],
            (0, 2) => [diag + k, 0.0, diag * s2],
            (1, 2) => [0.0, 2.0 * b, 0.0],
            _ => [0.0; 3],
        }
    };
    let cores = (0..m)
        .map(|k| {
            let lefts: &[usize] = if k == 0 { &[0] } else { &[0, 1, 2] };
            let rights: &[usize] = if k == m - 1 { &[2] } else { &[0, 1, 2] };
            Core3::from_fn(lefts.len(), 3, rights.len(), |x, i, y| step(lefts[x], rights[y], k == 0)[i])
        })
        .collect();
    TTTensor::new(cores)
}

/// Exact TT of the log-density of `N(0, Sigma_mu)`.
pub fn gaussian_logdensity_tt(m: usize, mu: f64) -> Result<ExponentTT> {
    let spec = GaussianDensitySpec::new(m, mu)?;
    let k0 = -0.5 * m as f64 * (2.0 * PI).ln() - 0.5 * spec.log_det();
    let t = quadratic_tt(m, k0, -0.5 / mu, 0.5 * spec.inverse_c())?;
    ExponentTT::new(t, None)
}

/// Log of the density ratio between `N(0, Sigma_mu)` and the standard
/// normal reference; its exponential has Gaussian mean one.
pub fn gaussian_log_ratio_tt(m: usize, mu: f64) -> Result<ExponentTT> {
    let spec = GaussianDensitySpec::new(m, mu)?;
    let k0 = -0.5 * spec.log_det();
    let t = quadratic_tt(m, k0, 0.5 - 0.5 / mu, 0.5 * spec.inverse_c())?;
    ExponentTT::new(t, None)
}

/// `-1/2 sum_j (delta_j - G_j(y))^2 / sigma_j^2` assembled in coefficient
/// space and rounded to `tol`.
pub fn bayes_potential_tt(g: &[TTTensor], delta: &[f64], sigma: &[f64], tol: f64) -> Result<ExponentTT> {
    if g.is_empty() || g.len() != delta.len() || g.len() != sigma.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} forward components, {} observations, {} noise levels",
            g.len(),
            delta.len(),
            sigma.len()
        )));
    }
    if let Some(s) = sigma.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::InvalidArgument(format!("noise level {s} is not positive")));
    }
    let dims = g[0].dims();
    if g.iter().any(|t| t.dims() != dims) {
        return Err(Error::DimensionMismatch("forward components differ in shape".into()));
    }
    let out_degree = 2 * dims.iter().copied().max().unwrap_or(1) - 1;
    let mut acc: Option<TTTensor> = None;
    for ((gj, &dj), &sj) in g.iter().zip(delta).zip(sigma) {
        let r = gj.sub(&TTTensor::constant(&dims, dj)?)?;
        let sq = multiply_coeffs(&r, &r, out_degree)?.scale(-0.5 / (sj * sj));
        acc = Some(match acc {
            None => sq,
            Some(a) => a.add(&sq)?.round(tol, None),
        });
    }
    let t = acc.expect("non-empty").round(tol, None);
    ExponentTT::new(t, None)
}

/// Affine forward map `G_j(y) = a_j + sum_m B[j][m] y_m` in TT form.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineForward {
    pub offset: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
}

impl AffineForward {
    /// Random map with `j` outputs over `m` parameters, coefficients of
    /// size `scale`.
    pub fn random(m: usize, j: usize, scale: f64, seed: u64) -> AffineForward {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let offset = (0..j).map(|_| draw()).collect();
        let matrix = (0..j)
            .map(|_| (0..m).map(|_| scale * draw() / (1.0 + m as f64).sqrt()).collect())
            .collect();
        AffineForward { offset, matrix }
    }

    pub fn evaluate(&self, y: &[f64]) -> Vec<f64> {
        self.offset
            .iter()
            .zip(&self.matrix)
            .map(|(a, row)| a + row.iter().zip(y).map(|(b, v)| b * v).sum::<f64>())
            .collect()
    }

    /// Component `j` as a TT with two coefficients per mode.
    pub fn component_tt(&self, j: usize) -> Result<TTTensor> {
        let row = &self.matrix[j];
        let m = row.len();
        // States: 0 = nothing emitted, 1 = finished.
        let step = |from: usize, to: usize, k: usize| -> [f64; 2] {
            match (from, to) {
                (0, 0) | (1, 1) => [1.0, 0.0],
                (0, 1) if k == 0 => [self.offset[j], row[k]],
                (0, 1) => [0.0, row[k]],
                _ => [0.0; 2],
            }
        };
        let cores = (0..m)
            .map(|k| {
                let lefts: &[usize] = if k == 0 { &[0] } else { &[0, 1] };
                let rights: &[usize] = if k == m - 1 { &[1] } else { &[0, 1] };
                Core3::from_fn(lefts.len(), 2, rights.len(), |x, i, y| step(lefts[x], rights[y], k)[i])
            })
            .collect();
        TTTensor::new(cores)
    }

    /// Closed-form Gaussian mean of the likelihood for observation `delta`
    /// and noise levels `sigma`.
    pub fn evidence(&self, delta: &[f64], sigma: &[f64]) -> f64 {
        let j = self.offset.len();
        let m = self.matrix.first().map_or(0, Vec::len);
        let b = DMatrix::from_fn(j, m, |r, c| self.matrix[r][c]);
        let s = DMatrix::from_fn(j, j, |r, c| if r == c { sigma[r] * sigma[r] } else { 0.0 });
        let cov = &s + &b * b.transpose();
        let r = nalgebra::DVector::from_fn(j, |i, _| delta[i] - self.offset[i]);
        let chol = cov.clone().cholesky().expect("covariance is SPD");
        let quad = r.dot(&chol.solve(&r));
        let det_ratio = cov.determinant() / s.determinant();
        (-0.5 * quad).exp() / det_ratio.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_values() {
        assert!((zeta(2.0) - PI * PI / 6.0).abs() < 1e-15);
        assert!((zeta(4.0) - PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta(3.0) - 1.202_056_903_159_594_3).abs() < 1e-14);
    }

    #[test]
    fn mode_enumeration() {
        assert_eq!(fourier_kl_modes(1, 2.0).1, 0);
        assert_eq!(fourier_kl_modes(1, 2.0).2, 1);
        assert_eq!((fourier_kl_modes(3, 2.0).1, fourier_kl_modes(3, 2.0).2), (0, 2));
        let amp = fourier_kl_modes(1, 2.0).0;
        assert!((amp - 27.0 / (5.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn l_shape_area() {
        let g = Grid::l_shape(10);
        assert_eq!(g.len(), 75);
        assert!((g.area() - 0.75).abs() < 1e-14);
    }
}

/// One row of benchmark output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub benchmark: String,
    /// Name and value of the varied table parameter.
    pub parameter: String,
    pub value: f64,
    pub m: usize,
    pub r_max: usize,
    pub res: f64,
    /// Mean relative error.
    pub eps: f64,
    /// Mean relative max-norm error.
    pub eps_inf: f64,
    /// Mean absolute error.
    pub abs: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub n_mc: usize,
    pub seed: u64,
    /// Relative truncation error of the kernel expansion.
    pub kl_error: Option<f64>,
    /// Gaussian mean of the approximation.
    pub mean: Option<f64>,
    /// Closed-form value of that mean.
    pub mean_ref: Option<f64>,
    pub time_s: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

impl BenchmarkReport {
    pub const CSV_HEADER: &'static str =
        "benchmark,parameter,value,M,r_max,res,eps,eps_inf,abs,sweeps,converged,n_mc,seed,kl_error,mean,mean_ref,time_s";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{},{},{},{},{},{},{},{:.3}",
            self.benchmark,
            self.parameter,
            self.value,
            self.m,
            self.r_max,
            self.res,
            self.eps,
            self.eps_inf,
            self.abs,
            self.sweeps,
            self.converged,
            self.n_mc,
            self.seed,
            opt(self.kl_error),
            opt(self.mean),
            opt(self.mean_ref),
            self.time_s
        )
    }
}

/// Solver defaults for each benchmark.
pub fn default_solver(name: BenchmarkName) -> SolveConfig {
    let base = SolveConfig::default();
    match name {
        BenchmarkName::KlFourier => SolveConfig {
            d_a: 10,
            s: 5,
            tol_rescale: 1e-7,
            max_sweeps: 10,
            round_operator: Some(1e-12),
            ..base
        },
        BenchmarkName::KlGaussian => SolveConfig {
            d_a: 10,
            s: 5,
            tol_rescale: 1e-10,
            max_sweeps: 10,
            round_operator: Some(1e-12),
            ..base
        },
        BenchmarkName::GaussianDensity => SolveConfig { d_a: 30, ..base },
        BenchmarkName::Bayes => SolveConfig { d_a: 4, ..base },
    }
}

struct Prepared {
    h: ExponentTT,
    reference: Box<dyn Fn(&[f64]) -> Result<Vec<f64>>>,
    parameter: &'static str,
    value: f64,
    kl_error: Option<f64>,
    mean_ref: Option<f64>,
}

fn grid_for(cfg: &BenchmarkConfig, default_n: usize, default_domain: Domain) -> Grid {
    let n = cfg.grid.unwrap_or(default_n);
    match cfg.domain.unwrap_or(default_domain) {
        Domain::Square => Grid::unit_square(n),
        Domain::LShape => Grid::l_shape(n),
    }
}

fn kl_prepared(field: KLField, parameter: &'static str, value: f64, kl_error: Option<f64>) -> Result<Prepared> {
    let h = affine_exponent_tt(&field.gammas)?;
    Ok(Prepared {
        h,
        reference: Box::new(move |y| Ok(field.evaluate(y).into_iter().map(f64::exp).collect())),
        parameter,
        value,
        kl_error,
        mean_ref: None,
    })
}

fn prepare(cfg: &BenchmarkConfig) -> Result<Prepared> {
    match cfg.benchmark {
        BenchmarkName::KlFourier => {
            let m = cfg.m.unwrap_or(10);
            let field = fourier_kl(&grid_for(cfg, 10, Domain::Square), m, cfg.sigma.unwrap_or(2.0))?;
            kl_prepared(field, "M", m as f64, None)
        }
        BenchmarkName::KlGaussian => {
            let m = cfg.m.unwrap_or(10);
            let m_hat = cfg.m_hat.unwrap_or(50);
            let ell2 = cfg.ell2.unwrap_or(1.0);
            let grid = grid_for(cfg, 12, Domain::LShape);
            let field = nystrom_kl(cfg.c.unwrap_or(1e-2), ell2.sqrt(), &grid, m.min(grid.len()))?;
            let lam = field.eigenvalues.clone().expect("kernel field");
            let err = kl_truncation_error(&lam, m, m_hat);
            kl_prepared(field, "ell2", ell2, Some(err))
        }
        BenchmarkName::GaussianDensity => {
            let m = cfg.m.unwrap_or(5);
            let mu = cfg.mu.unwrap_or(1.0);
            let spec = GaussianDensitySpec::new(m, mu)?;
            Ok(Prepared {
                h: gaussian_logdensity_tt(m, mu)?,
                reference: Box::new(move |y| Ok(vec![spec.log_density(y).exp()])),
                parameter: "mu",
                value: mu,
                kl_error: None,
                mean_ref: Some(spec.expected_density()),
            })
        }
        BenchmarkName::Bayes => {
            let m = cfg.m.unwrap_or(5);
            let n_obs = cfg.observations.unwrap_or(4);
            let noise = cfg.noise.unwrap_or(1.0);
            let fwd = AffineForward::random(m, n_obs, cfg.forward_scale.unwrap_or(0.2), cfg.forward_seed.unwrap_or(1));
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.forward_seed.unwrap_or(1).wrapping_add(1));
            let y_star: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            let delta: Vec<f64> = fwd
                .evaluate(&y_star)
                .into_iter()
                .map(|g| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    g + noise * e
                })
                .collect();
            let sigma = vec![noise; n_obs];
            let g = (0..n_obs).map(|j| fwd.component_tt(j)).collect::<Result<Vec<_>>>()?;
            let h = bayes_potential_tt(&g, &delta, &sigma, 1e-14)?;
            let mean_ref = fwd.evidence(&delta, &sigma);
            Ok(Prepared {
                h,
                reference: Box::new(move |y| {
                    let l: f64 = fwd
                        .evaluate(y)
                        .iter()
                        .zip(&delta)
                        .map(|(g, d)| (d - g).powi(2))
                        .sum::<f64>()
                        * (-0.5 / (noise * noise));
                    Ok(vec![l.exp()])
                }),
                parameter: "M",
                value: m as f64,
                kl_error: None,
                mean_ref: Some(mean_ref),
            })
        }
    }
}

/// Generates the exponent, runs the scaled solver and samples the errors.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<(BenchmarkReport, TTTensor)> {
    cfg.validate()?;
    let solver = cfg.solver.apply(&default_solver(cfg.benchmark))?;
    let p = prepare(cfg)?;
    let out = scaled_exp_tt(&p.h, &solver)?;
    let n_mc = cfg.n_mc.unwrap_or(DEFAULT_N_MC);
    let seed = cfg.seed.unwrap_or(0);
    let mc = {
        let approx = tt_evaluator(&out.u, p.h.is_spatial());
        mc_report(&*p.reference, &approx, p.h.n_stochastic(), n_mc, seed)?
    };
    let mean = if p.h.is_spatial() { None } else { Some(expectation(&out.u)?) };
    let report = BenchmarkReport {
        benchmark: cfg.benchmark.as_str().to_string(),
        parameter: p.parameter.to_string(),
        value: p.value,
        m: p.h.n_stochastic(),
        r_max: out.u.max_rank(),
        res: out.report.res,
        eps: mc.rel,
        eps_inf: mc.rel_linf,
        abs: mc.abs,
        sweeps: out.report.sweeps,
        converged: out.report.converged,
        n_mc,
        seed,
        kl_error: p.kl_error,
        mean,
        mean_ref: p.mean_ref,
        time_s: out.report.time_s,
    };
    Ok((report, out.u))
}
