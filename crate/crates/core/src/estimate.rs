//! A posteriori error estimators, Monte Carlo error metrics and reference
//! solutions used for validation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::basis::{gauss_hermite, hermite_eval, hermite_eval_deriv, triple_product};
use crate::error::{Error, Result};
use crate::galerkin::{ExponentTT, GalerkinSystem};
use crate::tt::{Core3, TTTensor};

/// Default number of Monte Carlo samples.
pub const DEFAULT_N_MC: usize = 1000;

/// `||f - B v||_2` over all stacked components, for `v` in the shifted
/// ansatz space (the approximation minus `exp(h(y0))`). In the orthonormal
/// test basis this is the discrete dual norm of the residual.
pub fn dual_residual_norm(sys: &GalerkinSystem, v: &TTTensor) -> Result<f64> {
    let mut sq = 0.0;
    for (bm, fm) in sys.b_ops.iter().zip(&sys.f) {
        sq += fm.sub(&bm.apply(v)?)?.norm().powi(2);
    }
    Ok(sq.sqrt())
}

/// As [`dual_residual_norm`], for an approximation that includes the
/// constant `exp(h(y0))`.
pub fn dual_residual_norm_total(sys: &GalerkinSystem, h: &ExponentTT, u: &TTTensor) -> Result<f64> {
    let v = u.sub(&h.exp_at_y0_tensor(&u.dims())?)?;
    dual_residual_norm(sys, &v)
}

/// Norm of the coefficients of the `f_m` lying outside the box of `d_t`
/// basis functions per stochastic mode.
pub fn data_oscillation_of(f: &[TTTensor], offset: usize, d_t: usize) -> Result<f64> {
    let mut sq = 0.0;
    for fm in f {
        let dims = fm.dims();
        if dims[offset..].iter().all(|&d| d <= d_t) {
            continue;
        }
        let mut cores = fm.cores().to_vec();
        for core in cores.iter_mut().skip(offset) {
            let (l, n, r) = core.shape();
            for a in 0..l {
                for i in d_t.min(n)..n {
                    for b in 0..r {
                        core.set(a, i, b, 0.0);
                    }
                }
            }
        }
        let inside = TTTensor::new(cores)?;
        sq += fm.sub(&inside)?.norm().powi(2);
    }
    Ok(sq.sqrt())
}

/// Coefficients of `exp(h(y0)) d_m h` for every stochastic mode.
pub fn rhs_coefficients(h: &ExponentTT) -> Result<Vec<TTTensor>> {
    let off = h.offset();
    let t = h.tensor();
    let mut out = Vec::with_capacity(h.n_stochastic());
    for m in 0..h.n_stochastic() {
        let mut cores = t.cores().to_vec();
        let core = &t.cores()[m + off];
        let (l, n, r) = core.shape();
        cores[m + off] = Core3::from_fn(l, n, r, |a, i, b| {
            if i + 1 < n {
                ((i + 1) as f64).sqrt() * core.get(a, i + 1, b)
            } else {
                0.0
            }
        });
        if h.is_spatial() {
            let c0 = &cores[0];
            let (l, n, r) = c0.shape();
            let cx = h.value_at_y0();
            cores[0] = Core3::from_fn(l, n, r, |a, i, b| cx[i].exp() * c0.get(a, i, b));
        } else {
            let c = h.value_at_y0()[0].exp();
            cores[0].scale(c);
        }
        out.push(TTTensor::new(cores)?);
    }
    Ok(out)
}

/// Data oscillation of the right-hand side `exp(h(y0)) grad h` for a test
/// space of `d_t` functions per mode. Zero whenever `d_t >= d_h - 1`.
pub fn data_oscillation(h: &ExponentTT, d_t: usize) -> Result<f64> {
    data_oscillation_of(&rhs_coefficients(h)?, h.offset(), d_t)
}

/// Value of `t` at `y`, optionally with mode `deriv` differentiated.
fn eval_point(t: &TTTensor, y: &[f64], deriv: Option<usize>) -> Result<f64> {
    let rows = y
        .iter()
        .enumerate()
        .map(|(k, &yk)| {
            let d = t.core(k).mode();
            if deriv == Some(k) {
                hermite_eval_deriv(d, yk)
            } else {
                hermite_eval(d, yk)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    t.evaluate(&rows)
}

fn tensor_quadrature(
    m: usize,
    order: usize,
    mut f: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<f64> {
    let rule = gauss_hermite(order)?;
    const CAP: usize = 50_000_000;
    let total = order
        .checked_pow(m as u32)
        .filter(|&n| n <= CAP)
        .ok_or(Error::SizeCap { size: usize::MAX, cap: CAP })?;
    let mut idx = vec![0usize; m];
    let mut y = vec![0.0; m];
    let mut acc = 0.0;
    for _ in 0..total {
        let mut w = 1.0;
        for k in 0..m {
            y[k] = rule.nodes[idx[k]];
            w *= rule.weights[idx[k]];
        }
        acc += w * f(&y)?;
        for k in (0..m).rev() {
            idx[k] += 1;
            if idx[k] < order {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(acc)
}

fn check_oracle_input(h: &ExponentTT, v: &TTTensor) -> Result<()> {
    if h.is_spatial() {
        return Err(Error::InvalidArgument(
            "quadrature oracles support scalar exponents only".into(),
        ));
    }
    if h.n_stochastic() > 3 || v.order() != h.n_stochastic() {
        return Err(Error::InvalidArgument(format!(
            "quadrature oracles need at most 3 modes matching the exponent, got {} and {}",
            h.n_stochastic(),
            v.order()
        )));
    }
    Ok(())
}

fn refine(order: usize, coarse: f64, fine: f64) -> Result<f64> {
    if (fine - coarse).abs() > 1e-8 * coarse.abs().max(1.0) {
        return Err(Error::QuadratureUnresolved {
            order,
            fine: 2 * order,
            coarse,
            refined: fine,
        });
    }
    Ok(fine)
}

fn energy_at(h: &ExponentTT, v: &TTTensor, order: usize) -> Result<f64> {
    let t = h.tensor();
    let m = h.n_stochastic();
    let sq = tensor_quadrature(m, order, |y| {
        let hy = eval_point(t, y, None)?;
        let u = hy.exp();
        let e = u - eval_point(v, y, None)?;
        let mut s = 0.0;
        for k in 0..m {
            let dh = eval_point(t, y, Some(k))?;
            let de = u * dh - eval_point(v, y, Some(k))?;
            s += (de - dh * e).powi(2);
        }
        Ok(s)
    })?;
    Ok(sq.max(0.0).sqrt())
}

/// `||B(exp(h) - v)||` in `L^2` of the Gaussian measure by tensorized
/// Gauss-Hermite quadrature with `order` nodes per mode, checked against
/// `2 * order` nodes. `v` includes the constant `exp(h(y0))`.
pub fn energy_error_oracle(h: &ExponentTT, v: &TTTensor, order: usize) -> Result<f64> {
    check_oracle_input(h, v)?;
    let coarse = energy_at(h, v, order)?;
    let fine = energy_at(h, v, 2 * order)?;
    refine(order, coarse, fine)
}

fn l2_at(h: &ExponentTT, v: &TTTensor, order: usize) -> Result<f64> {
    let sq = tensor_quadrature(h.n_stochastic(), order, |y| {
        Ok((eval_point(h.tensor(), y, None)?.exp() - eval_point(v, y, None)?).powi(2))
    })?;
    Ok(sq.max(0.0).sqrt())
}

/// `||exp(h) - v||` in `L^2` of the Gaussian measure by quadrature.
pub fn l2_error_oracle(h: &ExponentTT, v: &TTTensor, order: usize) -> Result<f64> {
    check_oracle_input(h, v)?;
    let coarse = l2_at(h, v, order)?;
    let fine = l2_at(h, v, 2 * order)?;
    refine(order, coarse, fine)
}

/// Monte Carlo error metrics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McErrors {
    /// Mean of `||u - v||`.
    pub abs: f64,
    /// Mean of `||u - v|| / ||u||`.
    pub rel: f64,
    /// Mean of `max |u - v| / max |u|`.
    pub rel_linf: f64,
    pub n_mc: usize,
    pub seed: u64,
}

/// Standard normal samples of dimension `m`, reproducible per seed.
pub fn normal_samples(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..m).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Evaluator type shared by the Monte Carlo routines: parameters in, values
/// (one per grid point, or a single value) out.
pub type Evaluator<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>> + 'a;

fn sample_pairs(
    reference: &Evaluator<'_>,
    approx: &Evaluator<'_>,
    m: usize,
    n_mc: usize,
    seed: u64,
    mut visit: impl FnMut(usize, &[f64], &[f64]) -> Result<()>,
) -> Result<()> {
    if n_mc == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    for (i, y) in normal_samples(m, n_mc, seed).iter().enumerate() {
        let wrap = |e: Error| Error::Sample {
            index: i,
            message: e.to_string(),
        };
        let u = reference(y).map_err(wrap)?;
        let v = approx(y).map_err(wrap)?;
        if u.len() != v.len() {
            return Err(Error::Sample {
                index: i,
                message: format!("reference has {} values, approximation {}", u.len(), v.len()),
            });
        }
        visit(i, &u, &v)?;
    }
    Ok(())
}

/// Mean absolute and mean relative error over `n_mc` standard normal
/// samples in `m` dimensions.
pub fn mc_errors(
    reference: &Evaluator<'_>,
    approx: &Evaluator<'_>,
    m: usize,
    n_mc: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let (mut abs, mut rel) = (0.0, 0.0);
    sample_pairs(reference, approx, m, n_mc, seed, |i, u, v| {
        let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        let (nd, nu) = (norm2(&d), norm2(u));
        if nu == 0.0 {
            return Err(Error::Sample {
                index: i,
                message: "reference vanishes".into(),
            });
        }
        abs += nd;
        rel += nd / nu;
        Ok(())
    })?;
    Ok((abs / n_mc as f64, rel / n_mc as f64))
}

/// Mean over samples of `max |u - v| / max |u|`.
pub fn mc_error_linf(
    reference: &Evaluator<'_>,
    approx: &Evaluator<'_>,
    m: usize,
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    let mut acc = 0.0;
    sample_pairs(reference, approx, m, n_mc, seed, |i, u, v| {
        let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        let den = max_abs(u);
        if den == 0.0 {
            return Err(Error::Sample {
                index: i,
                message: "reference vanishes on the whole grid".into(),
            });
        }
        acc += max_abs(&d) / den;
        Ok(())
    })?;
    Ok(acc / n_mc as f64)
}

/// All three Monte Carlo metrics from one pass over the samples.
pub fn mc_report(
    reference: &Evaluator<'_>,
    approx: &Evaluator<'_>,
    m: usize,
    n_mc: usize,
    seed: u64,
) -> Result<McErrors> {
    let (mut abs, mut rel, mut linf) = (0.0, 0.0, 0.0);
    sample_pairs(reference, approx, m, n_mc, seed, |i, u, v| {
        let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        let (nu, mu) = (norm2(u), max_abs(u));
        if mu == 0.0 {
            return Err(Error::Sample {
                index: i,
                message: "reference vanishes".into(),
            });
        }
        abs += norm2(&d);
        rel += norm2(&d) / nu;
        linf += max_abs(&d) / mu;
        Ok(())
    })?;
    let n = n_mc as f64;
    Ok(McErrors {
        abs: abs / n,
        rel: rel / n,
        rel_linf: linf / n,
        n_mc,
        seed,
    })
}

/// Pointwise evaluation of a coefficient tensor; mode 0 is returned as a
/// field when `spatial` is set.
pub fn tt_evaluator(u: &TTTensor, spatial: bool) -> impl Fn(&[f64]) -> Result<Vec<f64>> + '_ {
    move |y| {
        let off = usize::from(spatial);
        let rows = crate::galerkin::basis_rows(u, off, y)?;
        if spatial {
            u.evaluate_field(&rows)
        } else {
            Ok(vec![u.evaluate(&rows)?])
        }
    }
}

/// `exp(h(y))` pointwise.
pub fn exp_evaluator(h: &ExponentTT) -> impl Fn(&[f64]) -> Result<Vec<f64>> + '_ {
    move |y| Ok(h.evaluate(y)?.into_iter().map(f64::exp).collect())
}

/// Report combining the estimator and the sampled errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub dual_residual: f64,
    pub data_oscillation: f64,
    pub abs: f64,
    pub rel: f64,
    pub rel_linf: f64,
    pub n_mc: usize,
    pub seed: u64,
}

impl ErrorReport {
    /// Evaluates every metric for the approximation `u` of `exp(h)`.
    pub fn compute(
        sys: &GalerkinSystem,
        h: &ExponentTT,
        u: &TTTensor,
        n_mc: usize,
        seed: u64,
    ) -> Result<Self> {
        let d_t = sys.d_a + h.degrees().into_iter().max().unwrap_or(1) - 1;
        let reference = exp_evaluator(h);
        let approx = tt_evaluator(u, h.is_spatial());
        let mc = mc_report(&reference, &approx, h.n_stochastic(), n_mc, seed)?;
        Ok(ErrorReport {
            dual_residual: dual_residual_norm_total(sys, h, u)?,
            data_oscillation: data_oscillation(h, d_t)?,
            abs: mc.abs,
            rel: mc.rel,
            rel_linf: mc.rel_linf,
            n_mc,
            seed,
        })
    }
}

fn first_basis_rows(u: &TTTensor, from: usize) -> Vec<Vec<f64>> {
    (from..u.order())
        .map(|k| {
            let mut e = vec![0.0; u.core(k).mode()];
            e[0] = 1.0;
            e
        })
        .collect()
}

/// Mean under the Gaussian measure: the coefficient of the constant basis
/// function.
pub fn expectation(u: &TTTensor) -> Result<f64> {
    u.evaluate(&first_basis_rows(u, 0))
}

/// Mean field of a tensor whose mode 0 is spatial.
pub fn expectation_field(u: &TTTensor) -> Result<Vec<f64>> {
    u.evaluate_field(&first_basis_rows(u, 1))
}

/// Dense least-squares reference for a univariate exponent with
/// coefficients `h`: minimizes `||B v - f||` over `v` in the span of
/// `p_j - p_j(y0)`, `j >= 1`, via QR. Returns the coefficients of
/// `v + exp(h(y0))` on `p_0, ..., p_{d_a - 1}`.
pub fn univariate_reference(h: &[f64], d_a: usize, y0: f64) -> Result<Vec<f64>> {
    if h.is_empty() || d_a < 2 || h.len() > d_a {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= d_h <= d_a and d_a >= 2, got d_h = {}, d_a = {d_a}",
            h.len()
        )));
    }
    let d_h = h.len();
    let d_t = d_a + d_h - 1;
    let p0 = hermite_eval(d_a, y0)?;
    let c = hermite_eval(d_h, y0)?.iter().zip(h).map(|(p, a)| p * a).sum::<f64>().exp();
    // h' in the basis, degree < d_h - 1
    let dh: Vec<f64> = (0..d_h.saturating_sub(1)).map(|i| ((i + 1) as f64).sqrt() * h[i + 1]).collect();
    let tau = triple_product(d_a, dh.len().max(1), d_t)?;
    // Columns: B e_j in the test basis.
    let apply_b = |v: &[f64]| {
        let mut out = vec![0.0; d_t];
        for (j, &vj) in v.iter().enumerate().skip(1) {
            out[j - 1] += (j as f64).sqrt() * vj;
        }
        for (i, &vi) in v.iter().enumerate() {
            for (k, &dk) in dh.iter().enumerate() {
                let w = vi * dk;
                if w != 0.0 {
                    for (l, o) in out.iter_mut().enumerate() {
                        *o -= w * tau.get(i, k, l);
                    }
                }
            }
        }
        out
    };
    let n = d_a - 1;
    let mut b = DMatrix::zeros(d_t, n);
    for j in 1..d_a {
        let mut q = vec![0.0; d_a];
        q[j] = 1.0;
        q[0] = -p0[j];
        for (r, v) in apply_b(&q).into_iter().enumerate() {
            b[(r, j - 1)] = v;
        }
    }
    let mut f = DVector::zeros(d_t);
    for (i, &v) in dh.iter().enumerate() {
        f[i] = c * v;
    }
    let qr = b.qr();
    let r = qr.r();
    let rmax = (0..n).fold(0.0f64, |a, i| a.max(r[(i, i)].abs()));
    let rank = (0..n).filter(|&i| r[(i, i)].abs() > 1e-13 * rmax).count();
    if rank < n {
        return Err(Error::RankDeficient { rank, cols: n });
    }
    let qtf = qr.q().transpose() * f;
    let x = r
        .solve_upper_triangular(&qtf)
        .ok_or(Error::RankDeficient { rank, cols: n })?;
    let mut out = vec![0.0; d_a];
    out[0] = c;
    for j in 1..d_a {
        out[j] += x[j - 1];
        out[0] -= x[j - 1] * p0[j];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expectation_of_constant_and_linear() {
        let t = TTTensor::constant(&[3, 4], 2.5).unwrap();
        assert!((expectation(&t).unwrap() - 2.5).abs() < 1e-15);
        let t = TTTensor::rank_one(&[vec![1.0, 1.0, 0.0]]).unwrap();
        assert_eq!(expectation(&t).unwrap(), 1.0);
    }

    #[test]
    fn mc_trivial_cases() {
        let two = |_: &[f64]| Ok(vec![2.0]);
        let one = |_: &[f64]| Ok(vec![1.0]);
        let (a, r) = mc_errors(&two, &one, 3, 10, 1).unwrap();
        assert!((a - 1.0).abs() < 1e-15 && (r - 0.5).abs() < 1e-15);
        assert_eq!(mc_errors(&two, &two, 3, 10, 1).unwrap(), (0.0, 0.0));
        assert!(mc_errors(&two, &one, 3, 0, 1).is_err());
    }

    #[test]
    fn univariate_reference_of_zero_exponent() {
        let u = univariate_reference(&[0.0], 6, 0.0).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-14);
        assert!(u[1..].iter().all(|v| v.abs() < 1e-14));
    }
}
