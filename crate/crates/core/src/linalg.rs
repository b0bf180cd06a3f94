//! Dense row-major kernels used by the TT routines.
//!
//! Everything here works on plain `&[f64]` buffers in row-major order. Matrix
//! products go through `matrixmultiply`, factorizations through `nalgebra`,
//! except the Cholesky factorization which is blocked so that the trailing
//! updates run as GEMM calls.

use nalgebra::{DMatrix, SymmetricEigen};

/// `C = alpha * op(A) * op(B) + beta * C` for row-major buffers.
///
/// `op(A)` is `m x k` and `op(B)` is `k x n`. With `ta` set, `a` holds the
/// `k x m` matrix and its transpose is used; likewise for `tb`.
#[allow(clippy::too_many_arguments)]
pub fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    ta: bool,
    b: &[f64],
    tb: bool,
    beta: f64,
    c: &mut [f64],
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for x in c[..m * n].iter_mut() {
            *x *= beta;
        }
        return;
    }
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserted buffer lengths cover every index reachable through
    // the given dimensions and strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Row-major product `A (m x k) * B (k x n)`.
pub fn matmul(m: usize, k: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    gemm(m, k, n, 1.0, a, false, b, false, 0.0, &mut c);
    c
}

/// Permutes the axes of a row-major tensor: output axis `i` is input axis `perm[i]`.
pub fn permute(data: &[f64], shape: &[usize], perm: &[usize]) -> Vec<f64> {
    let nd = shape.len();
    assert_eq!(perm.len(), nd);
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total);
    let mut in_strides = vec![1usize; nd];
    for i in (0..nd.saturating_sub(1)).rev() {
        in_strides[i] = in_strides[i + 1] * shape[i + 1];
    }
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let mut out = Vec::with_capacity(total);
    if total == 0 {
        return out;
    }
    // Innermost axis handled in a tight loop, the rest by an odometer.
    let last = nd - 1;
    let inner = out_shape[last];
    let inner_stride = strides[last];
    let mut idx = vec![0usize; last];
    let mut base = 0usize;
    loop {
        for t in 0..inner {
            out.push(data[base + t * inner_stride]);
        }
        let mut ax = last;
        loop {
            if ax == 0 {
                return out;
            }
            ax -= 1;
            idx[ax] += 1;
            base += strides[ax];
            if idx[ax] < out_shape[ax] {
                break;
            }
            base -= strides[ax] * out_shape[ax];
            idx[ax] = 0;
        }
    }
}

/// Transpose of a row-major `rows x cols` matrix.
pub fn transpose(rows: usize, cols: usize, a: &[f64]) -> Vec<f64> {
    permute(a, &[rows, cols], &[1, 0])
}

pub fn frobenius(a: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = a.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * s.sqrt()
}

const CHOL_BLOCK: usize = 64;

/// In-place blocked Cholesky factorization of a symmetric row-major matrix.
///
/// On success the lower triangle holds `L` with `A = L L^T`; the strict upper
/// triangle is left in an unspecified state. Returns the failing pivot index
/// when the matrix is not numerically positive definite.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<(), usize> {
    assert!(a.len() >= n * n);
    let mut j0 = 0;
    while j0 < n {
        let jb = CHOL_BLOCK.min(n - j0);
        // Unblocked factorization of the diagonal block.
        for j in j0..j0 + jb {
            let mut d = a[j * n + j];
            for l in j0..j {
                d -= a[j * n + l] * a[j * n + l];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(j);
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in j + 1..j0 + jb {
                let mut s = a[i * n + j];
                for l in j0..j {
                    s -= a[i * n + l] * a[j * n + l];
                }
                a[i * n + j] = s / d;
            }
        }
        let rest = n - j0 - jb;
        if rest > 0 {
            // Panel: A21 <- A21 L11^{-T}.
            for i in j0 + jb..n {
                for j in j0..j0 + jb {
                    let mut s = a[i * n + j];
                    for l in j0..j {
                        s -= a[i * n + l] * a[j * n + l];
                    }
                    a[i * n + j] = s / a[j * n + j];
                }
            }
            // Trailing update A22 <- A22 - A21 A21^T.
            let off21 = (j0 + jb) * n + j0;
            let off22 = (j0 + jb) * n + j0 + jb;
            let base = a.as_mut_ptr();
            // SAFETY: A21 occupies columns j0..j0+jb and A22 columns
            // j0+jb..n of the same rows, so the element sets read and written
            // are disjoint, and every strided access stays inside the n x n
            // buffer.
            unsafe {
                matrixmultiply::dgemm(
                    rest,
                    jb,
                    rest,
                    -1.0,
                    base.add(off21),
                    n as isize,
                    1,
                    base.add(off21),
                    1,
                    n as isize,
                    1.0,
                    base.add(off22),
                    n as isize,
                    1,
                );
            }
        }
        j0 += jb;
    }
    Ok(())
}

/// Solves `L L^T x = b` given the factor from [`cholesky_in_place`].
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for j in 0..i {
            s -= l[i * n + j] * x[j];
        }
        x[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= l[j * n + i] * x[j];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// How a symmetric system was solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpdSolve {
    Cholesky,
    Pseudo,
}

/// Condition threshold beyond which the Cholesky path is abandoned.
pub const COND_LIMIT: f64 = 1e12;

/// Solves a symmetric positive semidefinite system.
///
/// Cholesky is tried first; if it breaks down or the pivot-based condition
/// estimate exceeds [`COND_LIMIT`], the minimum-norm least-squares solution is
/// computed from a symmetric eigendecomposition instead, discarding
/// eigenvalues below `lambda_max / COND_LIMIT`.
pub fn spd_solve(a: &[f64], n: usize, b: &[f64]) -> (Vec<f64>, SpdSolve) {
    let mut l = a.to_vec();
    if cholesky_in_place(&mut l, n).is_ok() {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            lo = lo.min(l[i * n + i]);
            hi = hi.max(l[i * n + i]);
        }
        if n == 0 || (hi / lo).powi(2) <= COND_LIMIT {
            return (cholesky_solve(&l, n, b), SpdSolve::Cholesky);
        }
    }
    (pseudo_solve(a, n, b), SpdSolve::Pseudo)
}

fn pseudo_solve(a: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let m = DMatrix::from_row_slice(n, n, a);
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(*v));
    let mut x = vec![0.0; n];
    if lmax <= 0.0 {
        return x;
    }
    let cut = lmax / COND_LIMIT;
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam <= cut {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        let coef: f64 = (0..n).map(|i| v[i] * b[i]).sum::<f64>() / lam;
        for i in 0..n {
            x[i] += coef * v[i];
        }
    }
    x
}

/// Thin SVD of a row-major matrix with singular values sorted descending.
pub struct Svd {
    pub rows: usize,
    pub cols: usize,
    /// `rows x k`, row-major.
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    /// `k x cols`, row-major.
    pub vt: Vec<f64>,
}

/// Thin SVD, `k = min(rows, cols)`.
///
/// Uses the bidiagonal QR iteration of `nalgebra` and checks the
/// reconstruction; its closed-form 2x2 deflation step can lose accuracy
/// when the two singular values are far apart, in which case the
/// decomposition is recomputed with one-sided Jacobi rotations.
pub fn svd(rows: usize, cols: usize, a: &[f64]) -> Svd {
    let k = rows.min(cols);
    if k == 0 {
        return Svd {
            rows,
            cols,
            u: Vec::new(),
            s: Vec::new(),
            vt: Vec::new(),
        };
    }
    let m = DMatrix::from_row_slice(rows, cols, &a[..rows * cols]);
    let dec = m.svd(true, true);
    let um = dec.u.expect("left singular vectors requested");
    let vtm = dec.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));
    let mut u = vec![0.0; rows * k];
    let mut vt = vec![0.0; k * cols];
    let mut s = vec![0.0; k];
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = dec.singular_values[src];
        for i in 0..rows {
            u[i * k + dst] = um[(i, src)];
        }
        for j in 0..cols {
            vt[dst * cols + j] = vtm[(src, j)];
        }
    }
    let out = Svd { rows, cols, u, s, vt };
    let norm = frobenius(&a[..rows * cols]);
    if reconstruction_error(&out, a) <= 1e-13 * norm * (k as f64).sqrt() {
        out
    } else {
        jacobi_svd(rows, cols, a)
    }
}

fn reconstruction_error(d: &Svd, a: &[f64]) -> f64 {
    let (rows, cols, k) = (d.rows, d.cols, d.s.len());
    let mut us = d.u.clone();
    for row in us.chunks_mut(k) {
        for (x, s) in row.iter_mut().zip(&d.s) {
            *x *= s;
        }
    }
    let mut back = a[..rows * cols].to_vec();
    gemm(rows, k, cols, 1.0, &us, false, &d.vt, false, -1.0, &mut back);
    frobenius(&back)
}

/// One-sided Jacobi SVD. Slower than the bidiagonal iteration but accurate
/// to a few ulps of the largest singular value in every case.
pub fn jacobi_svd(rows: usize, cols: usize, a: &[f64]) -> Svd {
    if rows < cols {
        let t = jacobi_svd(cols, rows, &transpose(rows, cols, a));
        return Svd {
            rows,
            cols,
            u: transpose(t.s.len(), rows, &t.vt),
            s: t.s,
            vt: transpose(cols, t.u.len() / cols.max(1), &t.u),
        };
    }
    let n = cols;
    // columns of A and of V, each stored contiguously
    let mut g: Vec<Vec<f64>> = (0..n).map(|j| (0..rows).map(|i| a[i * cols + j]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let rotate = |x: &mut [f64], y: &mut [f64], c: f64, s: f64| {
        for (p, q) in x.iter_mut().zip(y.iter_mut()) {
            let (a, b) = (*p, *q);
            *p = c * a - s * b;
            *q = s * a + c * b;
        }
    };
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&g[p], &g[p]);
                let beta = dot(&g[q], &g[q]);
                let gamma = dot(&g[p], &g[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = g.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sig: Vec<f64> = g.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sig[j].total_cmp(&sig[i]));
    let mut u = vec![0.0; rows * n];
    let mut vt = vec![0.0; n * n];
    let mut s = vec![0.0; n];
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = sig[src];
        if sig[src] > 0.0 {
            for i in 0..rows {
                u[i * n + dst] = g[src][i] / sig[src];
            }
        }
        vt[dst * n..(dst + 1) * n].copy_from_slice(&v[src]);
    }
    Svd { rows, cols, u, s, vt }
}

/// Thin QR of a row-major `rows x cols` matrix: returns `(Q, R, k)` with
/// `Q` of shape `rows x k`, `R` of shape `k x cols`, `k = min(rows, cols)`.
pub fn qr(rows: usize, cols: usize, a: &[f64]) -> (Vec<f64>, Vec<f64>, usize) {
    let k = rows.min(cols);
    if k == 0 {
        return (Vec::new(), Vec::new(), 0);
    }
    let m = DMatrix::from_row_slice(rows, cols, a);
    let dec = m.qr();
    let q = dec.q();
    let r = dec.r();
    let mut qv = vec![0.0; rows * k];
    let mut rv = vec![0.0; k * cols];
    for i in 0..rows {
        for j in 0..k {
            qv[i * k + j] = q[(i, j)];
        }
    }
    for i in 0..k {
        for j in 0..cols {
            rv[i * cols + j] = r[(i, j)];
        }
    }
    (qv, rv, k)
}
