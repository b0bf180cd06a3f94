//! Discretization of the gradient system `grad u - u grad h = f`.
//!
//! For an exponent `h` in TT format this builds the per-direction operators
//! `B_m = D_m - H_m`, the right-hand sides `f_m = exp(h(y0)) D_m h`, the
//! point-evaluation vector `P`, and the normal-equation pair
//!
//! ```text
//! W = lambda_p P P^T + lambda sum_m B_m^T B_m,    b = lambda sum_m B_m^T f_m
//! ```
//!
//! directly in TT format. `W` and `b` are Laplace-like sums; their cores are
//! small block automata so that their ranks do not grow with the number of
//! stochastic modes.
//!
//! An exponent may carry a leading spatial mode (grid points). Operators are
//! then diagonal in that index and the assembly is equivalent to one scalar
//! system per grid point.

use serde::Serialize;

use crate::basis::{self, hermite_eval, ModeKind, Tensor3};
use crate::error::{Error, Result};
use crate::tt::json::{OperatorDoc, TensorDoc};
use crate::tt::{apply_core, concat_core3, concat_core4, sum_core4, Block, Core3, Core4, TTOperator, TTTensor};

/// Exponent `h` with its expansion point.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentTT {
    h: TTTensor,
    spatial: bool,
    y0: Vec<f64>,
    h_y0: Vec<f64>,
}

impl ExponentTT {
    /// Scalar exponent over stochastic modes only; `y0` defaults to the origin.
    pub fn new(h: TTTensor, y0: Option<Vec<f64>>) -> Result<Self> {
        Self::build(h, false, y0)
    }

    /// Exponent whose mode 0 indexes spatial grid points.
    pub fn with_spatial(h: TTTensor, y0: Option<Vec<f64>>) -> Result<Self> {
        if h.order() < 2 {
            return Err(Error::InvalidArgument(
                "a spatial exponent needs at least one stochastic mode".into(),
            ));
        }
        Self::build(h, true, y0)
    }

    fn build(h: TTTensor, spatial: bool, y0: Option<Vec<f64>>) -> Result<Self> {
        let n_stoch = h.order() - usize::from(spatial);
        let y0 = y0.unwrap_or_else(|| vec![0.0; n_stoch]);
        if y0.len() != n_stoch {
            return Err(Error::DimensionMismatch(format!(
                "expansion point has {} coordinates for {n_stoch} stochastic modes",
                y0.len()
            )));
        }
        let offset = usize::from(spatial);
        let mut rows = Vec::with_capacity(n_stoch);
        for (k, &y) in y0.iter().enumerate() {
            rows.push(hermite_eval(h.core(k + offset).mode(), y)?);
        }
        let h_y0 = if spatial {
            h.evaluate_field(&rows)?
        } else {
            vec![h.evaluate(&rows)?]
        };
        Ok(ExponentTT { h, spatial, y0, h_y0 })
    }

    pub fn tensor(&self) -> &TTTensor {
        &self.h
    }

    pub fn is_spatial(&self) -> bool {
        self.spatial
    }

    pub fn spatial_size(&self) -> Option<usize> {
        self.spatial.then(|| self.h.core(0).mode())
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    /// `h(y0)`; one entry per grid point for spatial exponents.
    pub fn value_at_y0(&self) -> &[f64] {
        &self.h_y0
    }

    pub fn n_stochastic(&self) -> usize {
        self.h.order() - usize::from(self.spatial)
    }

    /// Index of the first stochastic mode in the full mode list.
    pub fn offset(&self) -> usize {
        usize::from(self.spatial)
    }

    /// Number of basis functions of `h` per stochastic mode.
    pub fn degrees(&self) -> Vec<usize> {
        self.h.dims()[self.offset()..].to_vec()
    }

    pub fn mode_kinds(&self) -> Vec<ModeKind> {
        let mut k = vec![ModeKind::Hermite; self.h.order()];
        if self.spatial {
            k[0] = ModeKind::Spatial;
        }
        k
    }

    pub fn max_rank(&self) -> usize {
        self.h.max_rank()
    }

    /// `c h`, keeping the expansion point.
    pub fn scaled(&self, c: f64) -> ExponentTT {
        ExponentTT {
            h: self.h.scale(c),
            spatial: self.spatial,
            y0: self.y0.clone(),
            h_y0: self.h_y0.iter().map(|v| c * v).collect(),
        }
    }

    /// Values of `h` at `y` (one per grid point for spatial exponents).
    pub fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>> {
        let rows = basis_rows(&self.h, self.offset(), y)?;
        if self.spatial {
            self.h.evaluate_field(&rows)
        } else {
            Ok(vec![self.h.evaluate(&rows)?])
        }
    }

    /// Mode sizes of the ansatz space for `d_a` basis functions per stochastic mode.
    pub fn ansatz_dims(&self, d_a: usize) -> Vec<usize> {
        let mut d = vec![d_a; self.h.order()];
        if self.spatial {
            d[0] = self.h.core(0).mode();
        }
        d
    }

    /// Mode sizes of the test space: `d_a + d_h - 1` per stochastic mode.
    pub fn test_dims(&self, d_a: usize) -> Vec<usize> {
        self.h
            .dims()
            .iter()
            .enumerate()
            .map(|(j, &dh)| if self.spatial && j == 0 { dh } else { d_a + dh - 1 })
            .collect()
    }

    /// Tensor of the constant `exp(h(y0))` (a field for spatial exponents)
    /// over the given mode sizes.
    pub fn exp_at_y0_tensor(&self, dims: &[usize]) -> Result<TTTensor> {
        let mut vecs: Vec<Vec<f64>> = dims
            .iter()
            .map(|&d| {
                let mut v = vec![0.0; d];
                v[0] = 1.0;
                v
            })
            .collect();
        if self.spatial {
            vecs[0] = self.h_y0.iter().map(|v| v.exp()).collect();
        } else {
            vecs[0][0] = self.h_y0[0].exp();
        }
        TTTensor::rank_one(&vecs)
    }
}

/// Hermite rows for the stochastic modes `offset..` of `t` at `y`.
pub fn basis_rows(t: &TTTensor, offset: usize, y: &[f64]) -> Result<Vec<Vec<f64>>> {
    if y.len() + offset != t.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} coordinates for {} stochastic modes",
            y.len(),
            t.order() - offset
        )));
    }
    y.iter()
        .enumerate()
        .map(|(k, &yk)| hermite_eval(t.core(k + offset).mode(), yk))
        .collect()
}

/// Weights of the two terms of the regularized least-squares functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Weights {
    /// Weight of the residual terms.
    pub lambda: f64,
    /// Weight of the point-evaluation penalty.
    pub lambda_p: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            lambda: 1.0,
            lambda_p: 1.0,
        }
    }
}

/// Per-mode building blocks shared by all assembly routines.
struct ModeData {
    kind: ModeKind,
    d_a: usize,
    d_t: usize,
    /// Rank-1 identity embedding `d_t x d_a`.
    embed: Core4,
    /// Multiplication by the mode-`j` factor of `h`.
    mult: Core4,
    /// Point evaluation Gram core `p(y0) p(y0)^T` (identity on spatial modes).
    pp: Core4,
    /// Point evaluation vector `p(y0)` (ones on spatial modes, unused there).
    p: Vec<f64>,
    /// `D h_j` with `D` of size `d_t x d_h`; empty for spatial modes.
    dh: Option<Core3>,
    /// Multiplication by `d/dy_j` of the mode-`j` factor of `h`.
    mult_deriv: Option<Core4>,
    /// Derivative matrix `d_t x d_a`.
    deriv: Option<Core4>,
    /// `h_j` zero-padded to `d_t` (scaled by `exp(h(x, y0))` on spatial modes).
    g: Core3,
}

fn mult_core(tau: &Tensor3, h: &Core3) -> Core4 {
    // H[k, mu, nu, k'] = sum_i tau[mu, nu, i] h[k, i, k']
    let (l, dh, r) = h.shape();
    let (dt, da) = (tau.d1, tau.d2);
    Core4::from_fn(l, dt, da, r, |k, mu, nu, kp| {
        (0..dh).map(|i| tau.get(mu, nu, i) * h.get(k, i, kp)).sum()
    })
}

fn diff_core(d_t: usize, h: &Core3) -> Core3 {
    // (D h)[k, mu, k'] = sqrt(mu + 1) h[k, mu + 1, k']
    let (l, dh, r) = h.shape();
    Core3::from_fn(l, d_t, r, |k, mu, kp| {
        if mu + 1 < dh {
            ((mu + 1) as f64).sqrt() * h.get(k, mu + 1, kp)
        } else {
            0.0
        }
    })
}

fn mode_data(h: &ExponentTT, d_a: usize) -> Result<Vec<ModeData>> {
    if d_a == 0 {
        return Err(Error::InvalidArgument("d_a must be positive".into()));
    }
    let ctx = basis::BasisContext::new();
    let t = h.tensor();
    let mut out = Vec::with_capacity(t.order());
    for (j, hj) in t.cores().iter().enumerate() {
        let (l, dh, r) = hj.shape();
        if h.is_spatial() && j == 0 {
            let c: Vec<f64> = h.value_at_y0().iter().map(|v| v.exp()).collect();
            let mult = Core4::from_fn(l, dh, dh, r, |k, x, x2, kp| {
                if x == x2 {
                    hj.get(k, x, kp)
                } else {
                    0.0
                }
            });
            let g = Core3::from_fn(l, dh, r, |k, x, kp| c[x] * hj.get(k, x, kp));
            out.push(ModeData {
                kind: ModeKind::Spatial,
                d_a: dh,
                d_t: dh,
                embed: Core4::embedding(dh, dh),
                mult,
                pp: Core4::embedding(dh, dh),
                p: vec![1.0; dh],
                dh: None,
                mult_deriv: None,
                deriv: None,
                g,
            });
            continue;
        }
        let d_t = d_a + dh - 1;
        let tau = ctx.triple(d_t, d_a, dh)?;
        let y0 = h.y0()[j - h.offset()];
        let p = hermite_eval(d_a, y0)?;
        let pp = Core4::from_fn(1, d_a, d_a, 1, |_, i, k, _| p[i] * p[k]);
        let dcore = diff_core(dh, hj);
        let mult_deriv = mult_core(&tau, &dcore);
        let dfull = diff_core(d_t, hj);
        let dm = basis::diff_matrix(d_t, d_a);
        out.push(ModeData {
            kind: ModeKind::Hermite,
            d_a,
            d_t,
            embed: Core4::embedding(d_t, d_a),
            mult: mult_core(&tau, hj),
            pp,
            p,
            dh: Some(dfull),
            mult_deriv: Some(mult_deriv),
            deriv: Some(Core4::matrix(d_t, d_a, &dm.data)),
            g: hj.resize_mode(d_t),
        });
    }
    Ok(out)
}

/// Core `j` of `B_m` (or of the shared factor when `j != m`): the TT sum of
/// the derivative part and the negated multiplication part.
fn b_core(modes: &[ModeData], j: usize, m: Option<usize>) -> Result<Core4> {
    let md = &modes[j];
    let n = modes.len();
    let (x, y) = if Some(j) == m {
        let mut y = md.mult_deriv.clone().expect("stochastic mode");
        y.scale(-1.0);
        (md.deriv.clone().expect("stochastic mode"), y)
    } else {
        (md.embed.clone(), md.mult.clone())
    };
    if n == 1 {
        let mut s = x;
        for (a, b) in s.data_mut().iter_mut().zip(y.data()) {
            *a += b;
        }
        return Ok(s);
    }
    sum_core4(j, n, &x, &y)
}

fn rhs_core(modes: &[ModeData], j: usize, m: usize, spatial: bool, c: f64) -> Core3 {
    if j == m {
        let mut core = modes[j].dh.clone().expect("stochastic mode");
        if !spatial {
            core.scale(c);
        }
        core
    } else {
        modes[j].g.clone()
    }
}

fn stochastic_modes(h: &ExponentTT) -> std::ops::Range<usize> {
    h.offset()..h.tensor().order()
}

fn check_mode(h: &ExponentTT, m: usize) -> Result<usize> {
    if m >= h.n_stochastic() {
        return Err(Error::InvalidArgument(format!(
            "stochastic mode {m} out of range (have {})",
            h.n_stochastic()
        )));
    }
    Ok(m + h.offset())
}

/// `I x ... x D x ... x I` on `n_modes` uniform modes; `m` is 0-based.
pub fn build_derivative_op(m: usize, n_modes: usize, d_t: usize, d_a: usize) -> Result<TTOperator> {
    if m >= n_modes {
        return Err(Error::InvalidArgument(format!("mode {m} out of range for {n_modes} modes")));
    }
    let d = basis::diff_matrix(d_t, d_a);
    let cores = (0..n_modes)
        .map(|j| {
            if j == m {
                Core4::matrix(d_t, d_a, &d.data)
            } else {
                Core4::embedding(d_t, d_a)
            }
        })
        .collect();
    TTOperator::new(cores)
}

/// Multiplication by `d h / d y_m` from the ansatz to the test space.
///
/// `m` counts stochastic modes from 0. Bond ranks equal those of `h`.
pub fn build_multiplication_op(h: &ExponentTT, m: usize, d_a: usize) -> Result<TTOperator> {
    let mm = check_mode(h, m)?;
    let modes = mode_data(h, d_a)?;
    let cores = modes
        .iter()
        .enumerate()
        .map(|(j, md)| {
            if j == mm {
                md.mult_deriv.clone().expect("stochastic mode")
            } else {
                md.mult.clone()
            }
        })
        .collect();
    TTOperator::new(cores)
}

/// `B_m = D_m - H_m`; bond ranks are at most `rank(h) + 1`.
pub fn build_b_op(h: &ExponentTT, m: usize, d_a: usize) -> Result<TTOperator> {
    let mm = check_mode(h, m)?;
    let modes = mode_data(h, d_a)?;
    let cores = (0..modes.len())
        .map(|j| b_core(&modes, j, Some(mm)))
        .collect::<Result<Vec<_>>>()?;
    TTOperator::new(cores)
}

/// `f_m = exp(h(y0)) D_m h` in the test space.
pub fn build_rhs(h: &ExponentTT, m: usize, d_a: usize) -> Result<TTTensor> {
    let mm = check_mode(h, m)?;
    let modes = mode_data(h, d_a)?;
    let c = h.value_at_y0()[0].exp();
    TTTensor::new(
        (0..modes.len())
            .map(|j| rhs_core(&modes, j, mm, h.is_spatial(), c))
            .collect(),
    )
}

/// Rank-one point-evaluation tensor `P` at `y0` for `n_modes` uniform modes.
pub fn build_initial_vector(y0: &[f64], d_a: usize) -> Result<TTTensor> {
    let vecs = y0
        .iter()
        .map(|&y| hermite_eval(d_a, y))
        .collect::<Result<Vec<_>>>()?;
    TTTensor::rank_one(&vecs)
}

/// Normal-equation operator `W` in Laplace-like TT form.
pub fn assemble_w(h: &ExponentTT, d_a: usize, weights: Weights) -> Result<TTOperator> {
    let modes = mode_data(h, d_a)?;
    assemble_w_from(&modes, weights)
}

fn assemble_w_from(modes: &[ModeData], weights: Weights) -> Result<TTOperator> {
    let n = modes.len();
    let shared: Vec<Core4> = (0..n)
        .map(|j| b_core(modes, j, None).map(|c| c.gram()))
        .collect::<Result<_>>()?;
    let own: Vec<Option<Core4>> = (0..n)
        .map(|j| {
            if modes[j].kind == ModeKind::Spatial {
                Ok(None)
            } else {
                let mut g = b_core(modes, j, Some(j))?.gram();
                g.scale(weights.lambda);
                Ok(Some(g))
            }
        })
        .collect::<Result<_>>()?;
    let mut pp0 = modes[0].pp.clone();
    pp0.scale(weights.lambda_p);
    if n == 1 {
        let mut w = pp0;
        let z = own[0].as_ref().expect("single mode is stochastic");
        for (a, b) in w.data_mut().iter_mut().zip(z.data()) {
            *a += b;
        }
        return TTOperator::new(vec![w]);
    }
    let mut cores = Vec::with_capacity(n);
    for j in 0..n {
        let a = &shared[j];
        let pp = if j == 0 { &pp0 } else { &modes[j].pp };
        let z = match &own[j] {
            Some(z) => Block::Core(z),
            None => Block::Zero {
                left: a.left(),
                right: a.right(),
            },
        };
        let core = if j == 0 {
            concat_core4(&[vec![Block::Core(pp), z, Block::Core(a)]])?
        } else if j == n - 1 {
            concat_core4(&[vec![Block::Core(pp)], vec![Block::Core(a)], vec![z]])?
        } else {
            let zero = |l: usize, r: usize| Block::Zero { left: l, right: r };
            concat_core4(&[
                vec![Block::Core(pp), zero(1, a.right()), zero(1, a.right())],
                vec![zero(a.left(), 1), Block::Core(a), zero(a.left(), a.right())],
                vec![zero(a.left(), 1), z, Block::Core(a)],
            ])?
        };
        cores.push(core);
    }
    TTOperator::new(cores)
}

/// Right-hand side `b = lambda sum_m B_m^T f_m` in Laplace-like TT form.
pub fn assemble_b(h: &ExponentTT, d_a: usize, weights: Weights) -> Result<TTTensor> {
    let modes = mode_data(h, d_a)?;
    assemble_b_from(h, &modes, weights)
}

fn assemble_b_from(h: &ExponentTT, modes: &[ModeData], weights: Weights) -> Result<TTTensor> {
    let n = modes.len();
    let c = h.value_at_y0()[0].exp();
    let spatial = h.is_spatial();
    let shared: Vec<Core3> = (0..n)
        .map(|j| Ok(apply_core(&b_core(modes, j, None)?.transpose(), &modes[j].g)))
        .collect::<Result<_>>()?;
    let own: Vec<Option<Core3>> = (0..n)
        .map(|j| {
            if modes[j].kind == ModeKind::Spatial {
                return Ok(None);
            }
            let bt = b_core(modes, j, Some(j))?.transpose();
            let mut core = apply_core(&bt, &rhs_core(modes, j, j, spatial, c));
            core.scale(weights.lambda);
            Ok(Some(core))
        })
        .collect::<Result<_>>()?;
    if n == 1 {
        return TTTensor::new(vec![own[0].clone().expect("single mode is stochastic")]);
    }
    let mut cores = Vec::with_capacity(n);
    for j in 0..n {
        let s = &shared[j];
        let t = match &own[j] {
            Some(t) => Block::Core(t),
            None => Block::Zero {
                left: s.left(),
                right: s.right(),
            },
        };
        let core = if j == 0 {
            concat_core3(&[vec![t, Block::Core(s)]])?
        } else if j == n - 1 {
            concat_core3(&[vec![Block::Core(s)], vec![t]])?
        } else {
            concat_core3(&[
                vec![
                    Block::Core(s),
                    Block::Zero {
                        left: s.left(),
                        right: s.right(),
                    },
                ],
                vec![t, Block::Core(s)],
            ])?
        };
        cores.push(core);
    }
    TTTensor::new(cores)
}

/// Assembled normal equations plus the raw residual components.
#[derive(Clone, Debug)]
pub struct GalerkinSystem {
    pub w: TTOperator,
    pub b: TTTensor,
    /// Point-evaluation tensor (rank one; all-ones on a spatial mode).
    pub p: TTTensor,
    pub b_ops: Vec<TTOperator>,
    pub f: Vec<TTTensor>,
    pub weights: Weights,
    pub d_a: usize,
    pub ansatz_dims: Vec<usize>,
    pub test_dims: Vec<usize>,
    pub h_degrees: Vec<usize>,
    pub spatial_size: Option<usize>,
    pub y0: Vec<f64>,
}

impl GalerkinSystem {
    pub fn assemble(h: &ExponentTT, d_a: usize, weights: Weights) -> Result<Self> {
        let modes = mode_data(h, d_a)?;
        let w = assemble_w_from(&modes, weights)?;
        let b = assemble_b_from(h, &modes, weights)?;
        let p = TTTensor::rank_one(&modes.iter().map(|m| m.p.clone()).collect::<Vec<_>>())?;
        let c = h.value_at_y0()[0].exp();
        let mut b_ops = Vec::with_capacity(h.n_stochastic());
        let mut f = Vec::with_capacity(h.n_stochastic());
        for m in stochastic_modes(h) {
            let cores = (0..modes.len())
                .map(|j| b_core(&modes, j, Some(m)))
                .collect::<Result<Vec<_>>>()?;
            b_ops.push(TTOperator::new(cores)?);
            f.push(TTTensor::new(
                (0..modes.len())
                    .map(|j| rhs_core(&modes, j, m, h.is_spatial(), c))
                    .collect(),
            )?);
        }
        Ok(GalerkinSystem {
            w,
            b,
            p,
            b_ops,
            f,
            weights,
            d_a,
            ansatz_dims: modes.iter().map(|m| m.d_a).collect(),
            test_dims: modes.iter().map(|m| m.d_t).collect(),
            h_degrees: h.tensor().dims(),
            spatial_size: h.spatial_size(),
            y0: h.y0().to_vec(),
        })
    }

    /// Rounds `W` and `b` to relative accuracy `tol`.
    pub fn round_normal_equations(&mut self, tol: f64) {
        self.w = self.w.round(tol, None);
        self.b = self.b.round(tol, None);
    }

    /// Serializes the system with a metadata header.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Meta<'a> {
            d_a: usize,
            ansatz_dims: &'a [usize],
            test_dims: &'a [usize],
            h_degrees: &'a [usize],
            lambda: f64,
            lambda_p: f64,
            y0: &'a [f64],
            spatial_size: Option<usize>,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            meta: Meta<'a>,
            w: OperatorDoc,
            b: TensorDoc,
            p: TensorDoc,
            b_ops: Vec<OperatorDoc>,
            f: Vec<TensorDoc>,
        }
        let doc = Doc {
            meta: Meta {
                d_a: self.d_a,
                ansatz_dims: &self.ansatz_dims,
                test_dims: &self.test_dims,
                h_degrees: &self.h_degrees,
                lambda: self.weights.lambda,
                lambda_p: self.weights.lambda_p,
                y0: &self.y0,
                spatial_size: self.spatial_size,
            },
            w: OperatorDoc::from_operator(&self.w)?,
            b: TensorDoc::from_tensor(&self.b)?,
            p: TensorDoc::from_tensor(&self.p)?,
            b_ops: self.b_ops.iter().map(OperatorDoc::from_operator).collect::<Result<_>>()?,
            f: self.f.iter().map(TensorDoc::from_tensor).collect::<Result<_>>()?,
        };
        crate::tt::json::to_string(&doc)
    }
}

/// The scalar system for a spatial exponent; errors if there is no spatial mode.
pub fn spatialize(h: &ExponentTT, d_a: usize, weights: Weights) -> Result<GalerkinSystem> {
    if !h.is_spatial() {
        return Err(Error::InvalidArgument("exponent has no spatial mode".into()));
    }
    GalerkinSystem::assemble(h, d_a, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn univariate(coeffs: &[f64]) -> ExponentTT {
        ExponentTT::new(TTTensor::rank_one(&[coeffs.to_vec()]).unwrap(), None).unwrap()
    }

    #[test]
    fn derivative_op_univariate_is_d() {
        let d = build_derivative_op(0, 1, 5, 4).unwrap().to_dense().unwrap();
        assert_eq!(d.data, basis::diff_matrix(5, 4).data);
        assert!(build_derivative_op(2, 2, 3, 3).is_err());
    }

    #[test]
    fn derivative_of_second_coordinate() {
        // h = y_2 with d = 3 per mode: coefficient 1 on (0, 1)
        let h = TTTensor::rank_one(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let d = build_derivative_op(1, 2, 3, 3).unwrap();
        let out = d.apply(&h).unwrap().to_dense().unwrap();
        let mut e = vec![0.0; 9];
        e[0] = 1.0;
        assert_eq!(out.data, e);
    }

    #[test]
    fn linear_exponent_multiplication_is_embedding() {
        let h = univariate(&[0.0, 1.0]);
        let hm = build_multiplication_op(&h, 0, 4).unwrap().to_dense().unwrap();
        let e = Core4::embedding(4, 4);
        for (a, b) in hm.data.iter().zip(e.data()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_exponent_gives_zero_h_and_f() {
        let h = univariate(&[0.7]);
        let hm = build_multiplication_op(&h, 0, 3).unwrap().to_dense().unwrap();
        assert!(hm.norm() == 0.0);
        let f = build_rhs(&h, 0, 3).unwrap();
        assert!(f.norm() == 0.0);
        let zero = univariate(&[0.0, 0.0]);
        let b = build_b_op(&zero, 0, 3).unwrap().to_dense().unwrap();
        let d = build_derivative_op(0, 1, 4, 3).unwrap().to_dense().unwrap();
        assert_eq!(b.data, d.data);
    }

    #[test]
    fn rhs_of_linear_exponent_is_one() {
        let h = univariate(&[0.0, 1.0]);
        let f = build_rhs(&h, 0, 5).unwrap().to_dense().unwrap();
        assert_eq!(f.data.len(), 6);
        assert!((f.data[0] - 1.0).abs() < 1e-15);
        assert!(f.data[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn initial_vector_at_origin() {
        let p = build_initial_vector(&[0.0, 0.0], 4).unwrap();
        assert_eq!(p.ranks(), vec![1, 1, 1]);
        let c = &p.core(0).data()[..];
        assert_eq!(c[0], 1.0);
        assert_eq!(c[1], 0.0);
        assert!((c[2] + 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let one = TTTensor::constant(&[4, 4], 1.0).unwrap();
        assert!((p.dot(&one).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spatial_requires_stochastic_mode() {
        let t = TTTensor::constant(&[3], 1.0).unwrap();
        assert!(ExponentTT::with_spatial(t, None).is_err());
        let h = univariate(&[0.0, 1.0]);
        assert!(spatialize(&h, 3, Weights::default()).is_err());
    }

    #[test]
    fn system_json_has_header() {
        let h = univariate(&[0.0, 1.0]);
        let sys = GalerkinSystem::assemble(&h, 3, Weights::default()).unwrap();
        let s = sys.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["meta"]["d_a"], 3);
        assert_eq!(v["b_ops"].as_array().unwrap().len(), 1);
    }
}
