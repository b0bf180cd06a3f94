//! Normalized probabilists' Hermite polynomials and their algebra.
//!
//! `p_k = He_k / sqrt(k!)` is orthonormal for the standard Gaussian weight.
//! The module provides evaluation, the differentiation matrix, triple
//! products, Gauss-Hermite rules and the coefficient-space product of two
//! tensor trains.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg;
use crate::tt::{Core3, DenseMatrix, TTTensor};

/// Largest polynomial degree accepted by [`hermite_eval`].
pub const MAX_DEGREE: usize = 120;

/// Values `p_0(y), ..., p_{d-1}(y)`.
pub fn hermite_eval(d: usize, y: f64) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidArgument("need at least one basis function".into()));
    }
    if d - 1 > MAX_DEGREE {
        return Err(Error::DegreeTooLarge {
            degree: d - 1,
            max: MAX_DEGREE,
        });
    }
    Ok(hermite_values(d, y))
}

/// Derivatives `p_0'(y), ..., p_{d-1}'(y)` using `p_k' = sqrt(k) p_{k-1}`.
pub fn hermite_eval_deriv(d: usize, y: f64) -> Result<Vec<f64>> {
    let p = hermite_eval(d, y)?;
    let mut out = vec![0.0; d];
    for k in 1..d {
        out[k] = (k as f64).sqrt() * p[k - 1];
    }
    Ok(out)
}

/// Unchecked recurrence, also used internally for quadrature construction.
pub(crate) fn hermite_values(d: usize, y: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(d);
    p.push(1.0);
    if d > 1 {
        p.push(y);
    }
    for k in 1..d.saturating_sub(1) {
        let next = (y * p[k] - (k as f64).sqrt() * p[k - 1]) / ((k + 1) as f64).sqrt();
        p.push(next);
    }
    p
}

/// `D[i, j] = (p_i, p_j')` of shape `d_t x d_a`: `sqrt(j)` on the superdiagonal.
pub fn diff_matrix(d_t: usize, d_a: usize) -> DenseMatrix {
    let mut data = vec![0.0; d_t * d_a];
    for j in 1..d_a {
        if j - 1 < d_t {
            data[(j - 1) * d_a + j] = (j as f64).sqrt();
        }
    }
    DenseMatrix {
        rows: d_t,
        cols: d_a,
        data,
    }
}

/// Dense order-3 array in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    pub d1: usize,
    pub d2: usize,
    pub d3: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.d2 + j) * self.d3 + k]
    }
}

/// Gauss-Hermite rule for the standard Gaussian weight.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `n`-point Gauss-Hermite rule (Golub-Welsch nodes, Christoffel weights).
///
/// Exact for polynomials of degree up to `2n - 1`; weights sum to one.
pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut x: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    x.sort_by(f64::total_cmp);
    // The rule is symmetric; enforce it exactly.
    let mut nodes = vec![0.0; n];
    for i in 0..n {
        nodes[i] = 0.5 * (x[i] - x[n - 1 - i]);
    }
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&t| {
            let p = hermite_values(n, t);
            1.0 / p.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    for i in 0..n / 2 {
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Node count that integrates products of three polynomials with the given
/// numbers of basis functions exactly.
pub fn triple_product_nodes(d1: usize, d2: usize, d3: usize) -> usize {
    (d1 + d2 + d3).div_ceil(2) + 1
}

/// `tau[i, j, k] = E[p_i p_j p_k]` by Gauss-Hermite quadrature.
pub fn triple_product(d1: usize, d2: usize, d3: usize) -> Result<Tensor3> {
    let rule = gauss_hermite(triple_product_nodes(d1, d2, d3))?;
    Ok(triple_product_with(&rule, d1, d2, d3))
}

fn triple_product_with(rule: &QuadratureRule, d1: usize, d2: usize, d3: usize) -> Tensor3 {
    let dm = d1.max(d2).max(d3);
    let vals: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| hermite_values(dm, x)).collect();
    let mut data = vec![0.0; d1 * d2 * d3];
    for i in 0..d1 {
        for j in 0..d2 {
            for k in 0..d3 {
                // zero pattern is structural: parity and triangle inequality
                if (i + j + k) % 2 == 1 || i > j + k || j > i + k || k > i + j {
                    continue;
                }
                let mut s = 0.0;
                for (q, w) in rule.weights.iter().enumerate() {
                    let p = &vals[q];
                    s += w * p[i] * p[j] * p[k];
                }
                data[(i * d2 + j) * d3 + k] = s;
            }
        }
    }
    Tensor3 { d1, d2, d3, data }
}

/// Closed form `sqrt(i! j! k!) / ((s-i)! (s-j)! (s-k)!)` with `s = (i+j+k)/2`,
/// evaluated in log space.
pub fn triple_product_closed_form(d1: usize, d2: usize, d3: usize) -> Tensor3 {
    let n = d1 + d2 + d3;
    let mut lf = vec![0.0f64; n + 1];
    for k in 1..=n {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    let mut data = vec![0.0; d1 * d2 * d3];
    for i in 0..d1 {
        for j in 0..d2 {
            for k in 0..d3 {
                if (i + j + k) % 2 == 1 {
                    continue;
                }
                let s = (i + j + k) / 2;
                if s < i || s < j || s < k {
                    continue;
                }
                let l = 0.5 * (lf[i] + lf[j] + lf[k]) - lf[s - i] - lf[s - j] - lf[s - k];
                data[(i * d2 + j) * d3 + k] = l.exp();
            }
        }
    }
    Tensor3 { d1, d2, d3, data }
}

/// Orthogonal projection of a scalar function onto `p_0, ..., p_{d-1}`.
pub fn project_function(f: impl Fn(f64) -> f64, d: usize, rule: &QuadratureRule) -> Vec<f64> {
    let mut c = vec![0.0; d];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let fx = f(x);
        let p = hermite_values(d, x);
        for k in 0..d {
            c[k] += w * fx * p[k];
        }
    }
    c
}

/// Per-mode basis kind of a coefficient tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeKind {
    /// Index over spatial grid points; products are pointwise.
    Spatial,
    /// Hermite coefficients; products use the triple product.
    Hermite,
}

/// Immutable per-run basis data with a cache of quadrature rules.
#[derive(Debug, Default)]
pub struct BasisContext {
    rules: Mutex<HashMap<usize, Arc<QuadratureRule>>>,
}

impl BasisContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rule(&self, n: usize) -> Result<Arc<QuadratureRule>> {
        let mut cache = self.rules.lock().expect("quadrature cache poisoned");
        if let Some(r) = cache.get(&n) {
            return Ok(Arc::clone(r));
        }
        let r = Arc::new(gauss_hermite(n)?);
        cache.insert(n, Arc::clone(&r));
        Ok(r)
    }

    pub fn triple(&self, d1: usize, d2: usize, d3: usize) -> Result<Tensor3> {
        let rule = self.rule(triple_product_nodes(d1, d2, d3))?;
        Ok(triple_product_with(&rule, d1, d2, d3))
    }

    pub fn diff(&self, d_t: usize, d_a: usize) -> DenseMatrix {
        diff_matrix(d_t, d_a)
    }
}

/// Coefficients of the pointwise product `u * v`, projected to degrees
/// `< out_degree` in every mode. Bond ranks multiply.
pub fn multiply_coeffs(u: &TTTensor, v: &TTTensor, out_degree: usize) -> Result<TTTensor> {
    let kinds = vec![ModeKind::Hermite; u.order()];
    multiply_coeffs_with(u, v, &kinds, out_degree)
}

/// As [`multiply_coeffs`], with spatial modes multiplied entrywise.
pub fn multiply_coeffs_with(
    u: &TTTensor,
    v: &TTTensor,
    kinds: &[ModeKind],
    out_degree: usize,
) -> Result<TTTensor> {
    if u.order() != v.order() || kinds.len() != u.order() {
        return Err(Error::DimensionMismatch(format!(
            "multiply_coeffs: orders {} and {} with {} mode kinds",
            u.order(),
            v.order(),
            kinds.len()
        )));
    }
    if out_degree == 0 {
        return Err(Error::InvalidArgument("out_degree must be positive".into()));
    }
    let ctx = BasisContext::new();
    let mut cores = Vec::with_capacity(u.order());
    for ((cu, cv), kind) in u.cores().iter().zip(v.cores()).zip(kinds) {
        let core = match kind {
            ModeKind::Spatial => {
                if cu.mode() != cv.mode() {
                    return Err(Error::DimensionMismatch(format!(
                        "spatial mode sizes {} and {}",
                        cu.mode(),
                        cv.mode()
                    )));
                }
                hadamard_core(cu, cv)
            }
            ModeKind::Hermite => {
                let tau = ctx.triple(out_degree, cu.mode(), cv.mode())?;
                product_core(&tau, cu, cv)
            }
        };
        cores.push(core);
    }
    TTTensor::new(cores)
}

fn hadamard_core(u: &Core3, v: &Core3) -> Core3 {
    let (lu, n, ru) = u.shape();
    let (lv, _, rv) = v.shape();
    Core3::from_fn(lu * lv, n, ru * rv, |a, i, b| {
        u.get(a / lv, i, b / rv) * v.get(a % lv, i, b % rv)
    })
}

fn product_core(tau: &Tensor3, u: &Core3, v: &Core3) -> Core3 {
    let (lu, du, ru) = u.shape();
    let (lv, dv, rv) = v.shape();
    let k = tau.d1;
    // X[(k, j), (a, b)] = sum_i tau[k, i, j] u[a, i, b]
    let tp = linalg::permute(&tau.data, &[k, du, dv], &[0, 2, 1]);
    let up = linalg::permute(u.data(), &[lu, du, ru], &[1, 0, 2]);
    let x = linalg::matmul(k * dv, du, lu * ru, &tp, &up);
    // -> [(a, b, k), j] times v as [j, (a', b')]
    let xp = linalg::permute(&x, &[k, dv, lu, ru], &[2, 3, 0, 1]);
    let vp = linalg::permute(v.data(), &[lv, dv, rv], &[1, 0, 2]);
    let y = linalg::matmul(lu * ru * k, dv, lv * rv, &xp, &vp);
    // axes a, b, k, a', b' -> a, a', k, b, b'
    let out = linalg::permute(&y, &[lu, ru, k, lv, rv], &[0, 3, 2, 1, 4]);
    Core3::new(lu * lv, k, ru * rv, out).expect("product shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_values_examples() {
        assert_eq!(hermite_eval(1, 3.7).unwrap(), vec![1.0]);
        assert_eq!(hermite_eval(2, 2.0).unwrap()[1], 2.0);
        let p = hermite_eval(3, 0.0).unwrap();
        assert!((p[2] + 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(hermite_eval(0, 1.0).is_err());
        assert!(hermite_eval(MAX_DEGREE + 1, 1.0).is_ok());
        assert!(matches!(
            hermite_eval(MAX_DEGREE + 2, 1.0),
            Err(Error::DegreeTooLarge { degree: 121, .. })
        ));
    }

    #[test]
    fn diff_matrix_entries() {
        let d = diff_matrix(5, 4);
        for i in 0..5 {
            for j in 0..4 {
                let e = if j == i + 1 { (j as f64).sqrt() } else { 0.0 };
                assert_eq!(d.get(i, j), e);
            }
        }
        assert_eq!(d.get(0, 1), 1.0);
        assert_eq!(d.get(1, 2), 2f64.sqrt());
    }

    #[test]
    fn small_rules() {
        let r = gauss_hermite(1).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert_eq!(r.weights, vec![1.0]);
        let r = gauss_hermite(2).unwrap();
        assert!((r.nodes[0] + 1.0).abs() < 1e-15 && (r.nodes[1] - 1.0).abs() < 1e-15);
        assert!((r.weights[0] - 0.5).abs() < 1e-15);
        assert!((r.integrate(|y| y * y) - 1.0).abs() < 1e-15);
        assert!(gauss_hermite(0).is_err());
    }

    #[test]
    fn rule_integrates_gaussian_moments() {
        let r = gauss_hermite(10).unwrap();
        // E[y^{2k}] = (2k-1)!!
        let mut dfact = 1.0;
        for k in 1..10 {
            dfact *= (2 * k - 1) as f64;
            let m = r.integrate(|y| y.powi(2 * k as i32));
            assert!((m - dfact).abs() <= 1e-12 * dfact, "k={k}: {m} vs {dfact}");
        }
    }

    #[test]
    fn triple_product_examples_and_pattern() {
        let t = triple_product(4, 4, 4).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                let e = if j == k { 1.0 } else { 0.0 };
                assert!((t.get(0, j, k) - e).abs() < 1e-14);
            }
        }
        assert!((t.get(1, 1, 0) - 1.0).abs() < 1e-14);
        assert!((t.get(1, 1, 2) - 2f64.sqrt()).abs() < 1e-14);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    assert_eq!(t.get(i, j, k), t.get(j, i, k));
                    if (i + j + k) % 2 == 1 || i > j + k || j > i + k || k > i + j {
                        assert_eq!(t.get(i, j, k), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let q = triple_product(6, 6, 6).unwrap();
        let f = triple_product_closed_form(6, 6, 6);
        let err = q.data.iter().zip(&f.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "max deviation {err}");
        // entries grow like sqrt of factorials, so compare relative to the largest one
        let q = triple_product(25, 20, 12).unwrap();
        let f = triple_product_closed_form(25, 20, 12);
        let scale = f.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let err = q.data.iter().zip(&f.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-13 * scale, "max deviation {err} at scale {scale}");
    }

    #[test]
    fn y_squared_product() {
        let p1 = TTTensor::rank_one(&[vec![0.0, 1.0]]).unwrap();
        let sq = multiply_coeffs(&p1, &p1, 3).unwrap();
        let c = sq.to_dense().unwrap().data;
        assert!((c[0] - 1.0).abs() < 1e-14);
        assert!(c[1].abs() < 1e-14);
        assert!((c[2] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn spatial_modes_multiply_pointwise() {
        let u = TTTensor::rank_one(&[vec![1.0, 2.0, 3.0], vec![0.0, 1.0]]).unwrap();
        let v = TTTensor::rank_one(&[vec![2.0, 0.5, -1.0], vec![1.0, 0.0]]).unwrap();
        let w = multiply_coeffs_with(&u, &v, &[ModeKind::Spatial, ModeKind::Hermite], 2).unwrap();
        let f = w.evaluate_field(&[hermite_eval(2, 0.7).unwrap()]).unwrap();
        assert!((f[0] - 2.0 * 0.7).abs() < 1e-14);
        assert!((f[1] - 1.0 * 0.7).abs() < 1e-14);
        assert!((f[2] + 3.0 * 0.7).abs() < 1e-14);
    }
}
