use super::core::{concat_core4, Block, Core3, Core4};
use super::tensor::{TTTensor, DEFAULT_DENSE_CAP};
use crate::error::{Error, Result};
use crate::linalg;

/// Dense matrix of an operator, row-major, with multi-indices ordered like
/// [`super::DenseTensor`].
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        linalg::matmul(self.rows, self.cols, 1, &self.data, x)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: other.cols,
            data: linalg::matmul(self.rows, self.cols, other.cols, &self.data, &other.data),
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix {
            rows: self.cols,
            cols: self.rows,
            data: linalg::transpose(self.rows, self.cols, &self.data),
        }
    }

    pub fn norm(&self) -> f64 {
        linalg::frobenius(&self.data)
    }
}

/// Tensor-train operator with order-4 cores (left, row, col, right).
#[derive(Clone, Debug, PartialEq)]
pub struct TTOperator {
    cores: Vec<Core4>,
}

impl TTOperator {
    pub fn new(cores: Vec<Core4>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::Shape("an operator train needs at least one core".into()));
        }
        if cores[0].left() != 1 || cores[cores.len() - 1].right() != 1 {
            return Err(Error::Shape("boundary ranks must be 1".into()));
        }
        for (k, w) in cores.windows(2).enumerate() {
            if w[0].right() != w[1].left() {
                return Err(Error::Shape(format!(
                    "operator core {k} has right rank {} but core {} has left rank {}",
                    w[0].right(),
                    k + 1,
                    w[1].left()
                )));
            }
        }
        Ok(TTOperator { cores })
    }

    /// Kronecker product of the given row-major matrices `(rows, cols, data)`.
    pub fn kron(mats: &[(usize, usize, Vec<f64>)]) -> Result<Self> {
        TTOperator::new(
            mats.iter()
                .map(|(r, c, m)| Core4::matrix(*r, *c, m))
                .collect(),
        )
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        TTOperator::new(dims.iter().map(|&d| Core4::embedding(d, d)).collect())
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn row_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.rows()).collect()
    }

    pub fn col_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.cols()).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.left()).collect();
        r.push(1);
        r
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    pub fn cores(&self) -> &[Core4] {
        &self.cores
    }

    pub fn core(&self, m: usize) -> &Core4 {
        &self.cores[m]
    }

    pub fn into_cores(self) -> Vec<Core4> {
        self.cores
    }

    pub fn scale(&self, c: f64) -> TTOperator {
        let mut w = self.clone();
        w.cores[0].scale(c);
        w
    }

    pub fn transpose(&self) -> TTOperator {
        TTOperator {
            cores: self.cores.iter().map(|c| c.transpose()).collect(),
        }
    }

    pub fn add(&self, other: &TTOperator) -> Result<TTOperator> {
        if self.row_dims() != other.row_dims() || self.col_dims() != other.col_dims() {
            return Err(Error::DimensionMismatch(format!(
                "operator add: {:?}x{:?} vs {:?}x{:?}",
                self.row_dims(),
                self.col_dims(),
                other.row_dims(),
                other.col_dims()
            )));
        }
        let m = self.order();
        if m == 1 {
            let mut c = self.cores[0].clone();
            for (x, y) in c.data_mut().iter_mut().zip(other.cores[0].data()) {
                *x += y;
            }
            return TTOperator::new(vec![c]);
        }
        let mut cores = Vec::with_capacity(m);
        for k in 0..m {
            cores.push(sum_core4(k, m, &self.cores[k], &other.cores[k])?);
        }
        TTOperator::new(cores)
    }

    pub fn sub(&self, other: &TTOperator) -> Result<TTOperator> {
        self.add(&other.scale(-1.0))
    }

    /// Matrix-vector product; bond ranks multiply.
    pub fn apply(&self, v: &TTTensor) -> Result<TTTensor> {
        if self.col_dims() != v.dims() {
            return Err(Error::DimensionMismatch(format!(
                "apply: operator columns {:?} vs tensor dims {:?}",
                self.col_dims(),
                v.dims()
            )));
        }
        let mut cores = Vec::with_capacity(self.order());
        for (w, c) in self.cores.iter().zip(v.cores()) {
            cores.push(apply_core(w, c));
        }
        TTTensor::new(cores)
    }

    /// Operator product `self * other`.
    pub fn compose(&self, other: &TTOperator) -> Result<TTOperator> {
        if self.col_dims() != other.row_dims() {
            return Err(Error::DimensionMismatch(format!(
                "compose: columns {:?} vs rows {:?}",
                self.col_dims(),
                other.row_dims()
            )));
        }
        let mut cores = Vec::with_capacity(self.order());
        for (a, b) in self.cores.iter().zip(&other.cores) {
            let (la, n, q, ra) = a.shape();
            let (lb, _, p, rb) = b.shape();
            cores.push(Core4::from_fn(la * lb, n, p, ra * rb, |x, i, j, y| {
                let (a1, b1) = (x / lb, x % lb);
                let (a2, b2) = (y / rb, y % rb);
                (0..q).map(|k| a.get(a1, i, k, a2) * b.get(b1, k, j, b2)).sum()
            }));
        }
        TTOperator::new(cores)
    }

    /// Views the operator as a tensor over merged (row, col) indices.
    pub fn to_tensor(&self) -> TTTensor {
        let cores = self
            .cores
            .iter()
            .map(|c| {
                let (l, n, q, r) = c.shape();
                Core3::new(l, n * q, r, c.data().to_vec()).expect("same layout")
            })
            .collect();
        TTTensor::new(cores).expect("valid ranks")
    }

    /// Rounds the operator as a tensor over merged (row, col) indices.
    pub fn round(&self, tol: f64, max_rank: Option<usize>) -> TTOperator {
        let rows = self.row_dims();
        let cols = self.col_dims();
        let t = self.to_tensor().round(tol, max_rank);
        let cores = t
            .into_cores()
            .into_iter()
            .zip(rows.iter().zip(&cols))
            .map(|(c, (&n, &q))| {
                let (l, _, r) = c.shape();
                Core4::new(l, n, q, r, c.into_data()).expect("same layout")
            })
            .collect();
        TTOperator { cores }
    }

    pub fn norm(&self) -> f64 {
        self.to_tensor().norm()
    }

    pub fn to_dense(&self) -> Result<DenseMatrix> {
        self.to_dense_capped(DEFAULT_DENSE_CAP)
    }

    pub fn to_dense_capped(&self, cap: usize) -> Result<DenseMatrix> {
        let rows: usize = self.row_dims().iter().product();
        let cols: usize = self.col_dims().iter().product();
        let size = rows.saturating_mul(cols);
        if size > cap {
            return Err(Error::SizeCap { size, cap });
        }
        // acc[(rowprefix, colprefix), r]
        let mut acc = vec![1.0];
        let (mut pr, mut pc) = (1usize, 1usize);
        for c in &self.cores {
            let (l, n, q, r) = c.shape();
            let prod = linalg::matmul(pr * pc, l, n * q * r, &acc, c.data());
            // axes: pr, pc, n, q, r -> pr, n, pc, q, r
            acc = linalg::permute(&prod, &[pr, pc, n, q, r], &[0, 2, 1, 3, 4]);
            pr *= n;
            pc *= q;
        }
        Ok(DenseMatrix {
            rows,
            cols,
            data: acc,
        })
    }
}

pub(crate) fn apply_core(w: &Core4, c: &Core3) -> Core3 {
    let (lw, n, q, rw) = w.shape();
    let (lv, _, rv) = c.shape();
    // Wp[(lw, n, rw), q] then contract with Cp[q, (lv, rv)]
    let wp = linalg::permute(w.data(), &[lw, n, q, rw], &[0, 1, 3, 2]);
    let cp = linalg::permute(c.data(), &[lv, q, rv], &[1, 0, 2]);
    let prod = linalg::matmul(lw * n * rw, q, lv * rv, &wp, &cp);
    // axes lw, n, rw, lv, rv -> lw, lv, n, rw, rv
    let out = linalg::permute(&prod, &[lw, n, rw, lv, rv], &[0, 3, 1, 2, 4]);
    Core3::new(lw * lv, n, rw * rv, out).expect("product shape")
}

pub(crate) fn sum_core4(k: usize, m: usize, a: &Core4, b: &Core4) -> Result<Core4> {
    if k == 0 {
        concat_core4(&[vec![Block::Core(a), Block::Core(b)]])
    } else if k == m - 1 {
        concat_core4(&[vec![Block::Core(a)], vec![Block::Core(b)]])
    } else {
        concat_core4(&[
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
