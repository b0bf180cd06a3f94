//! One-site ALS for `W u = b` and the exponential drivers built on it.
//!
//! The iterate is kept in mixed canonical form: every core except the one
//! being optimized is orthonormal, so each local problem is the Galerkin
//! projection of `W u = b` onto the span of the current frame. Environments
//! for `W` and `b` are cached on both sides and updated one core at a time.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::multiply_coeffs_with;
use crate::error::{Error, Result};
use crate::galerkin::{ExponentTT, GalerkinSystem, Weights};
use crate::linalg::{self, gemm, permute, SpdSolve};
use crate::tt::{Core3, RankProfile, TTOperator, TTTensor};

/// Solver state for repeated sweeps over a fixed system.
pub struct AlsSolver<'a> {
    w: &'a TTOperator,
    b: &'a TTTensor,
    u: TTTensor,
    /// `lw[k]`: left environment at bond `k`, axes `[a, a', w]`.
    lw: Vec<Vec<f64>>,
    /// `rw[k]`: right environment at bond `k`, axes `[b, b', w]`.
    rw: Vec<Vec<f64>>,
    /// `lb[k]`: axes `[a, beta]`.
    lb: Vec<Vec<f64>>,
    /// `rb[k]`: axes `[b, beta]`.
    rb: Vec<Vec<f64>>,
    solved_once: bool,
    objective: Vec<f64>,
    fallbacks: usize,
}

impl<'a> AlsSolver<'a> {
    /// Prepares the solver; `u0` fixes the bond ranks and is
    /// right-orthogonalized first.
    pub fn new(w: &'a TTOperator, b: &'a TTTensor, u0: TTTensor) -> Result<Self> {
        if w.row_dims() != w.col_dims() {
            return Err(Error::DimensionMismatch("ALS needs a square operator".into()));
        }
        if w.col_dims() != u0.dims() || b.dims() != u0.dims() {
            return Err(Error::DimensionMismatch(format!(
                "ALS: operator {:?}, rhs {:?}, iterate {:?}",
                w.col_dims(),
                b.dims(),
                u0.dims()
            )));
        }
        let mut u = u0;
        u.right_orthogonalize();
        let n = u.order();
        let mut s = AlsSolver {
            w,
            b,
            u,
            lw: vec![Vec::new(); n + 1],
            rw: vec![Vec::new(); n + 1],
            lb: vec![Vec::new(); n + 1],
            rb: vec![Vec::new(); n + 1],
            solved_once: false,
            objective: Vec::new(),
            fallbacks: 0,
        };
        s.lw[0] = vec![1.0];
        s.lb[0] = vec![1.0];
        s.rw[n] = vec![1.0];
        s.rb[n] = vec![1.0];
        for k in (1..n).rev() {
            s.update_right(k);
        }
        Ok(s)
    }

    pub fn iterate(&self) -> &TTTensor {
        &self.u
    }

    pub fn into_iterate(self) -> TTTensor {
        self.u
    }

    /// Value of `u^T W u - 2 b^T u` after every local solve so far.
    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Number of local systems solved by the pseudo-inverse fallback.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    /// One forward and one backward pass. The core solved last in the
    /// previous sweep is not solved again.
    pub fn sweep(&mut self) -> Result<()> {
        let n = self.u.order();
        for k in 0..n {
            if k > 0 || !self.solved_once {
                self.solve_core(k)?;
            }
            if k + 1 < n {
                self.move_right(k);
            }
        }
        for k in (0..n.saturating_sub(1)).rev() {
            self.move_left(k + 1);
            self.solve_core(k)?;
        }
        self.solved_once = true;
        Ok(())
    }

    fn move_right(&mut self, k: usize) {
        self.u.orthogonalize_step_right(k);
        self.update_left(k);
    }

    fn move_left(&mut self, k: usize) {
        self.u.orthogonalize_step_left(k);
        self.update_right(k);
    }

    /// `lw[k+1]`, `lb[k+1]` from core `k`.
    fn update_left(&mut self, k: usize) {
        let c = self.u.core(k);
        let (a, n, b) = c.shape();
        let wc = self.w.core(k);
        let (rw0, _, _, rw1) = wc.shape();
        // Z1[(i, b), (a', w)] = sum_a u[a, (i, b)] lw[a, (a', w)]
        let mut z1 = vec![0.0; n * b * a * rw0];
        gemm(n * b, a, a * rw0, 1.0, c.data(), true, &self.lw[k], false, 0.0, &mut z1);
        // -> [a', b, w, i]
        let z1 = permute(&z1, &[n, b, a, rw0], &[2, 1, 3, 0]);
        // Z2[(a', b), (i', w')] = Z1[(a', b), (w, i)] W[(w, i), (i', w')]
        let z2 = linalg::matmul(a * b, rw0 * n, n * rw1, &z1, wc.data());
        // -> [b, w', a', i']
        let z2 = permute(&z2, &[a, b, n, rw1], &[1, 3, 0, 2]);
        let z3 = linalg::matmul(b * rw1, a * n, b, &z2, c.data());
        self.lw[k + 1] = permute(&z3, &[b, rw1, b], &[0, 2, 1]);

        let bc = self.b.core(k);
        let (rb0, _, rb1) = bc.shape();
        let mut q1 = vec![0.0; n * b * rb0];
        gemm(n * b, a, rb0, 1.0, c.data(), true, &self.lb[k], false, 0.0, &mut q1);
        let q1 = permute(&q1, &[n, b, rb0], &[1, 2, 0]);
        self.lb[k + 1] = linalg::matmul(b, rb0 * n, rb1, &q1, bc.data());
    }

    /// `rw[k]`, `rb[k]` from core `k`.
    fn update_right(&mut self, k: usize) {
        let c = self.u.core(k);
        let (a, n, b) = c.shape();
        let wc = self.w.core(k);
        let (rw0, _, _, rw1) = wc.shape();
        // Z1[(a, i), (b', w')] = u[(a, i), b] rw[b, (b', w')]
        let z1 = linalg::matmul(a * n, b, b * rw1, c.data(), &self.rw[k + 1]);
        // -> [a, b', i, w']
        let z1 = permute(&z1, &[a, n, b, rw1], &[0, 2, 1, 3]);
        // W as [(i, w'), (w, i')]
        let wp = permute(wc.data(), &[rw0, n, n, rw1], &[1, 3, 0, 2]);
        let z2 = linalg::matmul(a * b, n * rw1, rw0 * n, &z1, &wp);
        // axes [a, b', w, i'] -> [a, w, i', b']
        let z2 = permute(&z2, &[a, b, rw0, n], &[0, 2, 3, 1]);
        let mut z3 = vec![0.0; a * rw0 * a];
        gemm(a * rw0, n * b, a, 1.0, &z2, false, c.data(), true, 0.0, &mut z3);
        self.rw[k] = permute(&z3, &[a, rw0, a], &[0, 2, 1]);

        let bc = self.b.core(k);
        let (rb0, _, rb1) = bc.shape();
        let q1 = linalg::matmul(a * n, b, rb1, c.data(), &self.rb[k + 1]);
        let mut out = vec![0.0; a * rb0];
        gemm(a, n * rb1, rb0, 1.0, &q1, false, bc.data(), true, 0.0, &mut out);
        self.rb[k] = out;
    }

    /// Dense local matrix and right-hand side for core `k`.
    pub fn local_system(&self, k: usize) -> (Vec<f64>, Vec<f64>, (usize, usize, usize)) {
        let (a, n, b) = self.u.core(k).shape();
        let wc = self.w.core(k);
        let (rw0, _, _, rw1) = wc.shape();
        let x = linalg::matmul(a * a, rw0, n * n * rw1, &self.lw[k], wc.data());
        let mut y = vec![0.0; a * a * n * n * b * b];
        gemm(a * a * n * n, rw1, b * b, 1.0, &x, false, &self.rw[k + 1], true, 0.0, &mut y);
        let mat = permute(&y, &[a, a, n, n, b, b], &[0, 2, 4, 1, 3, 5]);

        let bc = self.b.core(k);
        let (rb0, _, rb1) = bc.shape();
        let t = linalg::matmul(a, rb0, n * rb1, &self.lb[k], bc.data());
        let mut rhs = vec![0.0; a * n * b];
        gemm(a * n, rb1, b, 1.0, &t, false, &self.rb[k + 1], true, 0.0, &mut rhs);
        (mat, rhs, (a, n, b))
    }

    fn solve_core(&mut self, k: usize) -> Result<()> {
        let (mat, rhs, (a, n, b)) = self.local_system(k);
        let size = a * n * b;
        let (x, kind) = linalg::spd_solve(&mat, size, &rhs);
        if kind == SpdSolve::Pseudo {
            self.fallbacks += 1;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularLocal { core: k });
        }
        let j: f64 = -x.iter().zip(&rhs).map(|(p, q)| p * q).sum::<f64>();
        self.objective.push(j);
        self.u.set_core(k, Core3::new(a, n, b, x).expect("local shape"));
        Ok(())
    }
}

/// One full sweep starting from `u`; convenience wrapper around [`AlsSolver`].
pub fn als_sweep(w: &TTOperator, b: &TTTensor, u: &TTTensor) -> Result<TTTensor> {
    let mut s = AlsSolver::new(w, b, u.clone())?;
    s.sweep()?;
    Ok(s.into_iterate())
}

/// `||W u - b|| / ||b||`, or the absolute norm when `b = 0`.
pub fn normal_residual(w: &TTOperator, b: &TTTensor, u: &TTTensor) -> Result<f64> {
    let r = w.apply(u)?.sub(b)?.norm();
    let nb = b.norm();
    Ok(if nb > 0.0 { r / nb } else { r })
}

/// `sqrt(sum_m ||B_m u - f_m||^2) / sqrt(sum_m ||f_m||^2)`; the absolute
/// value when every `f_m` vanishes.
pub fn discrete_residual(sys: &GalerkinSystem, u: &TTTensor) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (bm, fm) in sys.b_ops.iter().zip(&sys.f) {
        num += bm.apply(u)?.sub(fm)?.norm().powi(2);
        den += fm.norm().powi(2);
    }
    Ok(if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    })
}

/// Inputs of the exponential drivers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveConfig {
    /// Basis functions per stochastic mode of the result.
    pub d_a: usize,
    /// Basis functions per stochastic mode for the scaled problem
    /// (defaults to `d_a`).
    pub d_a_scaled: Option<usize>,
    /// Number of squaring steps.
    pub s: u32,
    /// Stopping tolerance on the relative normal residual.
    pub tol: f64,
    /// Rounding tolerance after each squaring step.
    pub tol_rescale: f64,
    /// Maximum number of sweeps.
    pub max_sweeps: usize,
    /// Interior bond rank of the initial guess (default `max(rank(h)+1, 2)`).
    pub rank: Option<usize>,
    pub weights: Weights,
    pub seed: u64,
    /// Optional relative rounding of `W` and `b` before solving.
    pub round_operator: Option<f64>,
    /// Rank cap for rounding after squaring.
    pub max_rank: Option<usize>,
    /// Largest product rank accepted before squaring is refused.
    pub rank_cap: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            d_a: 10,
            d_a_scaled: None,
            s: 0,
            tol: 1e-8,
            tol_rescale: 1e-10,
            max_sweeps: 20,
            rank: None,
            weights: Weights::default(),
            seed: 0,
            round_operator: None,
            max_rank: None,
            rank_cap: 4096,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.d_a == 0 {
            return bad("d_a must be positive");
        }
        if let Some(d) = self.d_a_scaled {
            if d == 0 || d > self.d_a {
                return bad("d_a_scaled must lie in 1..=d_a");
            }
        }
        if !(self.tol > 0.0) || !(self.tol_rescale > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.weights.lambda > 0.0) || !(self.weights.lambda_p > 0.0) {
            return bad("weights must be positive");
        }
        if matches!(self.rank, Some(0)) || matches!(self.max_rank, Some(0)) {
            return bad("ranks must be positive");
        }
        if let Some(t) = self.round_operator {
            if !(t >= 0.0) {
                return bad("round_operator must be non-negative");
            }
        }
        Ok(())
    }
}

/// Outcome of a solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub sweeps: usize,
    /// Relative normal residual after each sweep.
    pub normal_residuals: Vec<f64>,
    /// Relative discrete residual `||B u - f|| / ||f||` of the Galerkin solve.
    pub res: f64,
    pub converged: bool,
    pub local_fallbacks: usize,
    pub ranks: RankProfile,
    pub operator_rank: usize,
    /// Wall-clock seconds spent in the solver.
    pub time_s: f64,
}

/// Approximation and its report.
#[derive(Clone, Debug)]
pub struct ExpResult {
    pub u: TTTensor,
    pub report: SolveReport,
}

fn initial_ranks(dims: &[usize], rank: usize) -> Vec<usize> {
    let n = dims.len();
    let mut r = vec![1usize; n + 1];
    for k in 1..n {
        let left = dims[..k].iter().fold(1usize, |p, &d| p.saturating_mul(d));
        let right = dims[k..].iter().fold(1usize, |p, &d| p.saturating_mul(d));
        r[k] = rank.min(left).min(right);
    }
    r
}

/// Galerkin approximation of `exp(h)` with `d_a` basis functions per mode.
///
/// Solves the regularized normal equations for `u = exp(h) - exp(h(y0))`
/// by ALS and returns `u + exp(h(y0))`.
pub fn exp_tt(h: &ExponentTT, cfg: &SolveConfig) -> Result<ExpResult> {
    cfg.validate()?;
    exp_tt_degree(h, cfg, cfg.d_a)
}

fn exp_tt_degree(h: &ExponentTT, cfg: &SolveConfig, d_a: usize) -> Result<ExpResult> {
    let start = Instant::now();
    let mut sys = GalerkinSystem::assemble(h, d_a, cfg.weights)?;
    if let Some(t) = cfg.round_operator {
        sys.round_normal_equations(t);
    }
    let dims = sys.ansatz_dims.clone();
    let rank = cfg.rank.unwrap_or_else(|| (h.max_rank() + 1).max(2));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let u0 = TTTensor::random(&dims, &initial_ranks(&dims, rank), &mut rng)?;

    let bnorm = sys.b.norm();
    let (u, sweeps, residuals, converged, fallbacks) = if bnorm == 0.0 {
        (TTTensor::zeros(&dims)?, 0, Vec::new(), true, 0)
    } else {
        let mut solver = AlsSolver::new(&sys.w, &sys.b, u0)?;
        let mut residuals = Vec::new();
        let mut converged = false;
        for _ in 0..cfg.max_sweeps {
            solver.sweep()?;
            let r = normal_residual(&sys.w, &sys.b, solver.iterate())?;
            residuals.push(r);
            if r <= cfg.tol {
                converged = true;
                break;
            }
        }
        let fb = solver.fallbacks();
        let n = residuals.len();
        (solver.into_iterate(), n, residuals, converged, fb)
    };
    let res = discrete_residual(&sys, &u)?;
    let total = u.add(&h.exp_at_y0_tensor(&dims)?)?;
    let time_s = start.elapsed().as_secs_f64();
    Ok(ExpResult {
        report: SolveReport {
            sweeps,
            normal_residuals: residuals,
            res,
            converged,
            local_fallbacks: fallbacks,
            ranks: total.rank_profile(),
            operator_rank: sys.w.max_rank(),
            time_s,
        },
        u: total,
    })
}

/// Scaling and squaring: solve for `exp(2^-s h)` with `d_a_scaled` basis
/// functions, then square `s` times in coefficient space, projecting to
/// `d_a` and rounding to `tol_rescale` after each step. The reported `res`
/// is the residual of the scaled Galerkin solve.
pub fn scaled_exp_tt(h: &ExponentTT, cfg: &SolveConfig) -> Result<ExpResult> {
    cfg.validate()?;
    let start = Instant::now();
    let d_small = cfg.d_a_scaled.unwrap_or(cfg.d_a);
    let scaled = h.scaled(0.5f64.powi(cfg.s as i32));
    let inner = exp_tt_degree(&scaled, cfg, d_small)?;
    let kinds = h.mode_kinds();
    let mut u = inner.u;
    for _ in 0..cfg.s {
        let r = u.max_rank();
        let prod = r.saturating_mul(r);
        if prod > cfg.rank_cap {
            return Err(Error::RankCap {
                rank: prod,
                cap: cfg.rank_cap,
                stage: "squaring",
            });
        }
        u = multiply_coeffs_with(&u, &u, &kinds, cfg.d_a)?;
        u = u.round(cfg.tol_rescale, cfg.max_rank);
    }
    if cfg.s == 0 && d_small < cfg.d_a {
        u = u.resize_modes(&h.ansatz_dims(cfg.d_a))?;
    }
    let mut report = inner.report;
    report.ranks = u.rank_profile();
    report.time_s = start.elapsed().as_secs_f64();
    Ok(ExpResult { u, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_ranks_respect_full_rank_bounds() {
        assert_eq!(initial_ranks(&[2, 10, 10, 3], 5), vec![1, 2, 5, 3, 1]);
        assert_eq!(initial_ranks(&[4], 5), vec![1, 1]);
    }

    #[test]
    fn identity_system_converges_in_one_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = TTTensor::random(&[3, 4, 3], &[1, 1, 1, 1], &mut rng).unwrap();
        let w = TTOperator::identity(&[3, 4, 3]).unwrap();
        let u0 = TTTensor::random(&[3, 4, 3], &[1, 1, 1, 1], &mut rng).unwrap();
        let u = als_sweep(&w, &b, &u0).unwrap();
        assert!(normal_residual(&w, &b, &u).unwrap() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut c = SolveConfig::default();
        assert!(c.validate().is_ok());
        c.d_a_scaled = Some(11);
        assert!(c.validate().is_err());
        c.d_a_scaled = None;
        c.tol = 0.0;
        assert!(c.validate().is_err());
    }
}
