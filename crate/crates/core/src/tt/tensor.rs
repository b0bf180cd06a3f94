use rand::Rng;
use rand_distr::StandardNormal;

use super::core::{concat_core3, Block, Core3};
use crate::error::{Error, Result};
use crate::linalg;

/// Default cap on the number of entries produced by dense conversion.
pub const DEFAULT_DENSE_CAP: usize = 1_000_000;

/// Full array in row-major order, mode 0 varying slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if dims.is_empty() || n != data.len() {
            return Err(Error::Shape(format!(
                "dense tensor with dims {dims:?} needs {n} entries, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor { dims, data })
    }

    pub fn norm(&self) -> f64 {
        linalg::frobenius(&self.data)
    }
}

/// Bond ranks plus derived size measures.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct RankProfile {
    pub ranks: Vec<usize>,
    pub max_rank: usize,
    pub tt_dofs: usize,
}

/// Tensor train with order-3 cores; `ranks[0] = ranks[M] = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TTTensor {
    cores: Vec<Core3>,
}

impl TTTensor {
    pub fn new(cores: Vec<Core3>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::Shape("a tensor train needs at least one core".into()));
        }
        if cores[0].left() != 1 || cores[cores.len() - 1].right() != 1 {
            return Err(Error::Shape("boundary ranks must be 1".into()));
        }
        for (k, w) in cores.windows(2).enumerate() {
            if w[0].right() != w[1].left() {
                return Err(Error::Shape(format!(
                    "core {k} has right rank {} but core {} has left rank {}",
                    w[0].right(),
                    k + 1,
                    w[1].left()
                )));
            }
        }
        Ok(TTTensor { cores })
    }

    /// Rank-one tensor with the given per-mode vectors.
    pub fn rank_one(vectors: &[Vec<f64>]) -> Result<Self> {
        TTTensor::new(vectors.iter().map(|v| Core3::vector(v)).collect())
    }

    /// Constant function `c`, i.e. coefficient `c` on the zero multi-index.
    pub fn constant(dims: &[usize], c: f64) -> Result<Self> {
        let vecs: Vec<Vec<f64>> = dims
            .iter()
            .enumerate()
            .map(|(m, &d)| {
                let mut v = vec![0.0; d];
                if d > 0 {
                    v[0] = if m == 0 { c } else { 1.0 };
                }
                v
            })
            .collect();
        TTTensor::rank_one(&vecs)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        TTTensor::constant(dims, 0.0)
    }

    /// Tensor with i.i.d. standard normal core entries and the given bond ranks
    /// (`ranks.len() == dims.len() + 1`, boundary entries 1).
    pub fn random<R: Rng + ?Sized>(dims: &[usize], ranks: &[usize], rng: &mut R) -> Result<Self> {
        if ranks.len() != dims.len() + 1 {
            return Err(Error::Shape(format!(
                "{} modes need {} ranks, got {}",
                dims.len(),
                dims.len() + 1,
                ranks.len()
            )));
        }
        let mut cores = Vec::with_capacity(dims.len());
        for (m, &d) in dims.iter().enumerate() {
            let n = ranks[m] * d * ranks[m + 1];
            let data: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            cores.push(Core3::new(ranks[m], d, ranks[m + 1], data)?);
        }
        TTTensor::new(cores)
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.mode()).collect()
    }

    /// Bond ranks `r_0, ..., r_M` including the unit boundary ranks.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.left()).collect();
        r.push(1);
        r
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    pub fn cores(&self) -> &[Core3] {
        &self.cores
    }

    pub fn core(&self, m: usize) -> &Core3 {
        &self.cores[m]
    }

    pub fn into_cores(self) -> Vec<Core3> {
        self.cores
    }

    /// Degrees of freedom of the representation modulo the gauge freedom
    /// at each interior bond. Terms of non-minimal representations can be
    /// negative; the sum is clamped at zero.
    pub fn tt_dofs(&self) -> usize {
        let r: Vec<i128> = self.ranks().into_iter().map(|v| v as i128).collect();
        let d: Vec<i128> = self.dims().into_iter().map(|v| v as i128).collect();
        let m = d.len();
        let mut total = r[m - 1] * d[m - 1];
        for k in 0..m - 1 {
            total += r[k] * d[k] * r[k + 1] - r[k + 1] * r[k + 1];
        }
        total.max(0) as usize
    }

    pub fn rank_profile(&self) -> RankProfile {
        RankProfile {
            ranks: self.ranks(),
            max_rank: self.max_rank(),
            tt_dofs: self.tt_dofs(),
        }
    }

    fn check_same_dims(&self, other: &TTTensor, what: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!(
                "{what}: dims {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }

    /// `sum_mu t[mu] prod_m rows[m][mu_m]`, contracted left to right.
    pub fn evaluate(&self, rows: &[Vec<f64>]) -> Result<f64> {
        if rows.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "evaluate: {} basis rows for order {}",
                rows.len(),
                self.order()
            )));
        }
        let mut v = vec![1.0];
        for (c, row) in self.cores.iter().zip(rows) {
            v = contract_row(&v, c, row)?;
        }
        Ok(v[0])
    }

    /// Contracts modes `1..M` with `rows` and returns the vector over mode 0.
    ///
    /// This evaluates a field-valued tensor whose leading mode is a spatial
    /// index at one parameter point.
    pub fn evaluate_field(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        if rows.len() + 1 != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "evaluate_field: {} basis rows for order {}",
                rows.len(),
                self.order()
            )));
        }
        let mut v = vec![1.0];
        for (c, row) in self.cores[1..].iter().zip(rows).rev() {
            v = contract_row_from_right(c, row, &v)?;
        }
        let c0 = &self.cores[0];
        let mut out = vec![0.0; c0.mode()];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..c0.right()).map(|b| c0.get(0, i, b) * v[b]).sum();
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> TTTensor {
        let mut t = self.clone();
        t.cores[0].scale(c);
        t
    }

    /// Sum with block-diagonal interior cores; bond ranks add.
    pub fn add(&self, other: &TTTensor) -> Result<TTTensor> {
        self.check_same_dims(other, "add")?;
        let m = self.order();
        if m == 1 {
            let mut c = self.cores[0].clone();
            for (x, y) in c.data_mut().iter_mut().zip(other.cores[0].data()) {
                *x += y;
            }
            return TTTensor::new(vec![c]);
        }
        let mut cores = Vec::with_capacity(m);
        for k in 0..m {
            cores.push(sum_core(k, m, &self.cores[k], &other.cores[k])?);
        }
        TTTensor::new(cores)
    }

    pub fn sub(&self, other: &TTTensor) -> Result<TTTensor> {
        self.add(&other.scale(-1.0))
    }

    /// Frobenius inner product of the coefficient tensors.
    pub fn dot(&self, other: &TTTensor) -> Result<f64> {
        self.check_same_dims(other, "dot")?;
        let mut env = vec![1.0];
        for (a, b) in self.cores.iter().zip(&other.cores) {
            env = dot_step(&env, a, b);
        }
        Ok(env[0])
    }

    /// Frobenius norm computed from a left-orthogonalized copy.
    pub fn norm(&self) -> f64 {
        let mut t = self.clone();
        t.left_orthogonalize();
        linalg::frobenius(t.cores[t.order() - 1].data())
    }

    /// QR sweep from the left; cores `0..M-1` become left-orthonormal and the
    /// norm is concentrated in the last core. Ranks may shrink to the
    /// full-rank bounds.
    pub fn left_orthogonalize(&mut self) {
        let m = self.order();
        for k in 0..m.saturating_sub(1) {
            self.orthogonalize_step_right(k);
        }
    }

    /// Mirror of [`Self::left_orthogonalize`]; the norm ends up in core 0.
    pub fn right_orthogonalize(&mut self) {
        let m = self.order();
        for k in (1..m).rev() {
            self.orthogonalize_step_left(k);
        }
    }

    /// Makes core `k` left-orthonormal and pushes the triangular factor into
    /// core `k + 1`.
    pub fn orthogonalize_step_right(&mut self, k: usize) {
        let (l, n, r) = self.cores[k].shape();
        let (q, rr, kk) = linalg::qr(l * n, r, self.cores[k].data());
        let next = &self.cores[k + 1];
        let (_, n2, r2) = next.shape();
        let moved = linalg::matmul(kk, r, n2 * r2, &rr, next.data());
        self.cores[k] = Core3::new(l, n, kk, q).expect("qr shape");
        self.cores[k + 1] = Core3::new(kk, n2, r2, moved).expect("qr shape");
    }

    /// Makes core `k` right-orthonormal and pushes the factor into core `k - 1`.
    pub fn orthogonalize_step_left(&mut self, k: usize) {
        let (l, n, r) = self.cores[k].shape();
        let t = linalg::transpose(l, n * r, self.cores[k].data());
        let (q, rr, kk) = linalg::qr(n * r, l, &t);
        let prev = &self.cores[k - 1];
        let (l0, n0, _) = prev.shape();
        // prev (l0 n0 x l) * R^T (l x kk)
        let mut moved = vec![0.0; l0 * n0 * kk];
        linalg::gemm(l0 * n0, l, kk, 1.0, prev.data(), false, &rr, true, 0.0, &mut moved);
        self.cores[k] = Core3::new(kk, n, r, linalg::transpose(n * r, kk, &q)).expect("qr shape");
        self.cores[k - 1] = Core3::new(l0, n0, kk, moved).expect("qr shape");
    }

    pub(crate) fn set_core(&mut self, k: usize, core: Core3) {
        self.cores[k] = core;
    }

    /// Truncates to relative accuracy `tol` in the Frobenius norm.
    ///
    /// Left-to-right QR followed by right-to-left truncated SVDs, with
    /// per-bond threshold `tol * ||t|| / sqrt(M - 1)`. Singular values whose
    /// accumulated tail stays strictly below the threshold are dropped; a tail
    /// exactly at the threshold is kept. Values below the double-precision
    /// noise floor of each SVD are always dropped, and `max_rank` caps the
    /// result when given.
    pub fn round(&self, tol: f64, max_rank: Option<usize>) -> TTTensor {
        let mut t = self.clone();
        let m = t.order();
        t.left_orthogonalize();
        if m == 1 {
            return t;
        }
        let nrm = linalg::frobenius(t.cores[m - 1].data());
        let delta = tol.max(0.0) * nrm / ((m - 1) as f64).sqrt();
        for k in (1..m).rev() {
            let (l, n, r) = t.cores[k].shape();
            let dec = linalg::svd(l, n * r, t.cores[k].data());
            let keep = truncation_rank(&dec.s, delta, max_rank, l, n * r);
            let q = dec.s.len();
            let vt = dec.vt[..keep * n * r].to_vec();
            let mut us = vec![0.0; l * keep];
            for i in 0..l {
                for j in 0..keep {
                    us[i * keep + j] = dec.u[i * q + j] * dec.s[j];
                }
            }
            let prev = &t.cores[k - 1];
            let (l0, n0, _) = prev.shape();
            let moved = linalg::matmul(l0 * n0, l, keep, prev.data(), &us);
            t.cores[k] = Core3::new(keep, n, r, vt).expect("svd shape");
            t.cores[k - 1] = Core3::new(l0, n0, keep, moved).expect("svd shape");
        }
        t
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        self.to_dense_capped(DEFAULT_DENSE_CAP)
    }

    pub fn to_dense_capped(&self, cap: usize) -> Result<DenseTensor> {
        let dims = self.dims();
        let size = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let size = size.unwrap_or(usize::MAX);
        if size > cap {
            return Err(Error::SizeCap { size, cap });
        }
        // acc has shape (prefix, r)
        let mut acc = vec![1.0];
        let mut prefix = 1usize;
        for c in &self.cores {
            let (l, n, r) = c.shape();
            acc = linalg::matmul(prefix, l, n * r, &acc, c.data());
            prefix *= n;
        }
        DenseTensor::new(dims, acc)
    }

    /// TT-SVD of a full array with relative accuracy `tol`.
    pub fn from_dense(a: &DenseTensor, tol: f64) -> Result<TTTensor> {
        let dims = &a.dims;
        let m = dims.len();
        if m == 0 || dims.iter().any(|&d| d == 0) {
            return Err(Error::Shape("dense tensor needs positive dims".into()));
        }
        let delta = if m > 1 {
            tol.max(0.0) * a.norm() / ((m - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut cores = Vec::with_capacity(m);
        let mut rest = a.data.clone();
        let mut r = 1usize;
        let mut cols: usize = a.data.len();
        for &d in &dims[..m - 1] {
            let rows = r * d;
            cols /= d;
            let dec = linalg::svd(rows, cols, &rest);
            let keep = truncation_rank(&dec.s, delta, None, rows, cols);
            let q = dec.s.len();
            let mut u = vec![0.0; rows * keep];
            for i in 0..rows {
                u[i * keep..(i + 1) * keep].copy_from_slice(&dec.u[i * q..i * q + keep]);
            }
            cores.push(Core3::new(r, d, keep, u)?);
            let mut next = dec.vt[..keep * cols].to_vec();
            for j in 0..keep {
                for x in next[j * cols..(j + 1) * cols].iter_mut() {
                    *x *= dec.s[j];
                }
            }
            rest = next;
            r = keep;
        }
        cores.push(Core3::new(r, dims[m - 1], 1, rest)?);
        TTTensor::new(cores)
    }

    /// Restricts or zero-pads every mode to the given sizes.
    pub fn resize_modes(&self, dims: &[usize]) -> Result<TTTensor> {
        if dims.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "resize_modes: {} sizes for order {}",
                dims.len(),
                self.order()
            )));
        }
        TTTensor::new(
            self.cores
                .iter()
                .zip(dims)
                .map(|(c, &d)| c.resize_mode(d))
                .collect(),
        )
    }
}

/// Number of singular values to keep for threshold `delta`.
pub(crate) fn truncation_rank(
    s: &[f64],
    delta: f64,
    max_rank: Option<usize>,
    rows: usize,
    cols: usize,
) -> usize {
    if s.is_empty() || s[0] == 0.0 {
        return 1;
    }
    let floor = f64::EPSILON * s[0] * rows.max(cols) as f64;
    let d2 = delta * delta;
    let mut keep = s.len();
    let mut tail = 0.0;
    while keep > 1 {
        let x = s[keep - 1];
        let next = tail + x * x;
        if x <= floor || next < d2 {
            tail = next;
            keep -= 1;
        } else {
            break;
        }
    }
    if let Some(cap) = max_rank {
        keep = keep.min(cap.max(1));
    }
    keep
}

pub(crate) fn sum_core(k: usize, m: usize, a: &Core3, b: &Core3) -> Result<Core3> {
    if k == 0 {
        concat_core3(&[vec![Block::Core(a), Block::Core(b)]])
    } else if k == m - 1 {
        concat_core3(&[vec![Block::Core(a)], vec![Block::Core(b)]])
    } else {
        concat_core3(&[
            vec![
                Block::Core(a),
                Block::Zero {
                    left: a.left(),
                    right: b.right(),
                },
            ],
            vec![
                Block::Zero {
                    left: b.left(),
                    right: a.right(),
                },
                Block::Core(b),
            ],
        ])
    }
}

fn contract_row(v: &[f64], c: &Core3, row: &[f64]) -> Result<Vec<f64>> {
    let (l, n, r) = c.shape();
    if row.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "basis row of length {} for mode size {n}",
            row.len()
        )));
    }
    let mut out = vec![0.0; r];
    for a in 0..l {
        if v[a] == 0.0 {
            continue;
        }
        for i in 0..n {
            let w = v[a] * row[i];
            if w == 0.0 {
                continue;
            }
            let base = (a * n + i) * r;
            for b in 0..r {
                out[b] += w * c.data()[base + b];
            }
        }
    }
    Ok(out)
}

fn contract_row_from_right(c: &Core3, row: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let (l, n, r) = c.shape();
    if row.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "basis row of length {} for mode size {n}",
            row.len()
        )));
    }
    let mut out = vec![0.0; l];
    for (a, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..n {
            let base = (a * n + i) * r;
            let inner: f64 = (0..r).map(|b| c.data()[base + b] * v[b]).sum();
            s += row[i] * inner;
        }
        *o = s;
    }
    Ok(out)
}

/// One step of the left-to-right inner-product environment.
fn dot_step(env: &[f64], a: &Core3, b: &Core3) -> Vec<f64> {
    let (la, n, ra) = a.shape();
    let (lb, _, rb) = b.shape();
    // X[(i, ra), lb] = sum_{la} A[la, (i, ra)] E[la, lb]
    let mut x = vec![0.0; n * ra * lb];
    linalg::gemm(n * ra, la, lb, 1.0, a.data(), true, env, false, 0.0, &mut x);
    // reorder to [ra, lb, i]
    let xp = linalg::permute(&x, &[n, ra, lb], &[1, 2, 0]);
    // E'[ra, rb] = sum_{lb, i} X[ra, (lb, i)] B[(lb, i), rb]
    linalg::matmul(ra, lb * n, rb, &xp, b.data())
}
