use crate::error::{Error, Result};

/// Order-3 TT core stored contiguously in (left, mode, right) order.
#[derive(Clone, Debug, PartialEq)]
pub struct Core3 {
    left: usize,
    mode: usize,
    right: usize,
    data: Vec<f64>,
}

impl Core3 {
    pub fn new(left: usize, mode: usize, right: usize, data: Vec<f64>) -> Result<Self> {
        if left == 0 || mode == 0 || right == 0 {
            return Err(Error::Shape(format!(
                "core dimensions must be positive, got ({left}, {mode}, {right})"
            )));
        }
        if data.len() != left * mode * right {
            return Err(Error::Shape(format!(
                "core ({left}, {mode}, {right}) needs {} entries, got {}",
                left * mode * right,
                data.len()
            )));
        }
        Ok(Core3 { left, mode, right, data })
    }

    pub fn zeros(left: usize, mode: usize, right: usize) -> Self {
        Core3 {
            left,
            mode,
            right,
            data: vec![0.0; left * mode * right],
        }
    }

    pub fn from_fn(
        left: usize,
        mode: usize,
        right: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(left * mode * right);
        for a in 0..left {
            for i in 0..mode {
                for b in 0..right {
                    data.push(f(a, i, b));
                }
            }
        }
        Core3 { left, mode, right, data }
    }

    /// A `1 x n x 1` core holding `v`.
    pub fn vector(v: &[f64]) -> Self {
        Core3 {
            left: 1,
            mode: v.len(),
            right: 1,
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn left(&self) -> usize {
        self.left
    }
    #[inline]
    pub fn mode(&self) -> usize {
        self.mode
    }
    #[inline]
    pub fn right(&self) -> usize {
        self.right
    }
    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.left, self.mode, self.right)
    }
    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
    #[inline]
    pub fn index(&self, a: usize, i: usize, b: usize) -> usize {
        (a * self.mode + i) * self.right + b
    }
    #[inline]
    pub fn get(&self, a: usize, i: usize, b: usize) -> f64 {
        self.data[self.index(a, i, b)]
    }
    #[inline]
    pub fn set(&mut self, a: usize, i: usize, b: usize, v: f64) {
        let k = self.index(a, i, b);
        self.data[k] = v;
    }

    pub fn scale(&mut self, c: f64) {
        for x in self.data.iter_mut() {
            *x *= c;
        }
    }

    /// Keeps mode indices `< n`, padding with zeros when `n` exceeds the
    /// current mode size.
    pub fn resize_mode(&self, n: usize) -> Core3 {
        Core3::from_fn(self.left, n, self.right, |a, i, b| {
            if i < self.mode {
                self.get(a, i, b)
            } else {
                0.0
            }
        })
    }
}

/// Order-4 TT operator core stored in (left, row, col, right) order.
#[derive(Clone, Debug, PartialEq)]
pub struct Core4 {
    left: usize,
    rows: usize,
    cols: usize,
    right: usize,
    data: Vec<f64>,
}

impl Core4 {
    pub fn new(left: usize, rows: usize, cols: usize, right: usize, data: Vec<f64>) -> Result<Self> {
        if left == 0 || rows == 0 || cols == 0 || right == 0 {
            return Err(Error::Shape(format!(
                "operator core dimensions must be positive, got ({left}, {rows}, {cols}, {right})"
            )));
        }
        if data.len() != left * rows * cols * right {
            return Err(Error::Shape(format!(
                "operator core ({left}, {rows}, {cols}, {right}) needs {} entries, got {}",
                left * rows * cols * right,
                data.len()
            )));
        }
        Ok(Core4 {
            left,
            rows,
            cols,
            right,
            data,
        })
    }

    pub fn zeros(left: usize, rows: usize, cols: usize, right: usize) -> Self {
        Core4 {
            left,
            rows,
            cols,
            right,
            data: vec![0.0; left * rows * cols * right],
        }
    }

    pub fn from_fn(
        left: usize,
        rows: usize,
        cols: usize,
        right: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(left * rows * cols * right);
        for a in 0..left {
            for i in 0..rows {
                for j in 0..cols {
                    for b in 0..right {
                        data.push(f(a, i, j, b));
                    }
                }
            }
        }
        Core4 {
            left,
            rows,
            cols,
            right,
            data,
        }
    }

    /// A `1 x rows x cols x 1` core holding the row-major matrix `m`.
    pub fn matrix(rows: usize, cols: usize, m: &[f64]) -> Self {
        assert_eq!(m.len(), rows * cols);
        Core4 {
            left: 1,
            rows,
            cols,
            right: 1,
            data: m.to_vec(),
        }
    }

    /// Rectangular identity embedding `E[i, j] = delta_ij` as a rank-1 core.
    pub fn embedding(rows: usize, cols: usize) -> Self {
        Core4::from_fn(1, rows, cols, 1, |_, i, j, _| if i == j { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn left(&self) -> usize {
        self.left
    }
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn right(&self) -> usize {
        self.right
    }
    #[inline]
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.left, self.rows, self.cols, self.right)
    }
    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
    #[inline]
    pub fn index(&self, a: usize, i: usize, j: usize, b: usize) -> usize {
        ((a * self.rows + i) * self.cols + j) * self.right + b
    }
    #[inline]
    pub fn get(&self, a: usize, i: usize, j: usize, b: usize) -> f64 {
        self.data[self.index(a, i, j, b)]
    }
    #[inline]
    pub fn set(&mut self, a: usize, i: usize, j: usize, b: usize, v: f64) {
        let k = self.index(a, i, j, b);
        self.data[k] = v;
    }

    pub fn scale(&mut self, c: f64) {
        for x in self.data.iter_mut() {
            *x *= c;
        }
    }

    /// Swaps the row and column indices.
    pub fn transpose(&self) -> Core4 {
        Core4::from_fn(self.left, self.cols, self.rows, self.right, |a, i, j, b| {
            self.get(a, j, i, b)
        })
    }

    /// Gram core `G = C^T C` with paired ranks: `G[(a,a'), j, j', (b,b')] =
    /// sum_i C[a,i,j,b] C[a',i,j',b']`.
    pub fn gram(&self) -> Core4 {
        let (l, n, q, r) = self.shape();
        // X[(a,b), i, j] so that the contraction over i is a batched GEMM.
        let x = crate::linalg::permute(&self.data, &[l, n, q, r], &[0, 3, 1, 2]);
        let lr = l * r;
        // Y[(a,b), (a',b'), j, j'] = sum_i X[(a,b), i, j] X[(a',b'), i, j']
        let mut y = vec![0.0; lr * lr * q * q];
        for p in 0..lr {
            for p2 in 0..lr {
                let xa = &x[p * n * q..(p + 1) * n * q];
                let xb = &x[p2 * n * q..(p2 + 1) * n * q];
                let out = &mut y[(p * lr + p2) * q * q..(p * lr + p2 + 1) * q * q];
                crate::linalg::gemm(q, n, q, 1.0, xa, true, xb, false, 0.0, out);
            }
        }
        // y axes: a, b, a', b', j, j'  ->  a, a', j, j', b, b'
        let z = crate::linalg::permute(&y, &[l, r, l, r, q, q], &[0, 2, 4, 5, 1, 3]);
        Core4 {
            left: l * l,
            rows: q,
            cols: q,
            right: r * r,
            data: z,
        }
    }
}

/// A cell of a block-core grid: either a core or a zero block of given ranks.
#[derive(Clone, Copy, Debug)]
pub enum Block<'a, C> {
    Core(&'a C),
    Zero { left: usize, right: usize },
}

trait Blockable: Sized {
    fn left(&self) -> usize;
    fn right(&self) -> usize;
    fn fiber(&self) -> Vec<usize>;
    fn raw(&self) -> &[f64];
    fn build(left: usize, fiber: &[usize], right: usize, data: Vec<f64>) -> Result<Self>;
}

impl Blockable for Core3 {
    fn left(&self) -> usize {
        self.left
    }
    fn right(&self) -> usize {
        self.right
    }
    fn fiber(&self) -> Vec<usize> {
        vec![self.mode]
    }
    fn raw(&self) -> &[f64] {
        &self.data
    }
    fn build(left: usize, fiber: &[usize], right: usize, data: Vec<f64>) -> Result<Self> {
        Core3::new(left, fiber[0], right, data)
    }
}

impl Blockable for Core4 {
    fn left(&self) -> usize {
        self.left
    }
    fn right(&self) -> usize {
        self.right
    }
    fn fiber(&self) -> Vec<usize> {
        vec![self.rows, self.cols]
    }
    fn raw(&self) -> &[f64] {
        &self.data
    }
    fn build(left: usize, fiber: &[usize], right: usize, data: Vec<f64>) -> Result<Self> {
        Core4::new(left, fiber[0], fiber[1], right, data)
    }
}

fn concat<C: Blockable>(grid: &[Vec<Block<'_, C>>]) -> Result<C> {
    let nr = grid.len();
    if nr == 0 || grid[0].is_empty() {
        return Err(Error::Shape("empty block grid".into()));
    }
    let nc = grid[0].len();
    if grid.iter().any(|row| row.len() != nc) {
        return Err(Error::Shape("ragged block grid".into()));
    }
    let dims = |b: &Block<'_, C>| match b {
        Block::Core(c) => (c.left(), c.right()),
        Block::Zero { left, right } => (*left, *right),
    };
    let mut fiber: Option<Vec<usize>> = None;
    for b in grid.iter().flatten() {
        if let Block::Core(c) = b {
            let f = c.fiber();
            match &fiber {
                None => fiber = Some(f),
                Some(g) if *g != f => {
                    return Err(Error::Shape(format!(
                        "block fiber dimensions differ: {g:?} vs {f:?}"
                    )))
                }
                _ => {}
            }
        }
    }
    let fiber = fiber.ok_or_else(|| Error::Shape("block grid contains only zero blocks".into()))?;
    let lefts: Vec<usize> = (0..nr).map(|i| dims(&grid[i][0]).0).collect();
    let rights: Vec<usize> = (0..nc).map(|j| dims(&grid[0][j]).1).collect();
    for i in 0..nr {
        for j in 0..nc {
            let (l, r) = dims(&grid[i][j]);
            if l != lefts[i] || r != rights[j] {
                return Err(Error::Shape(format!(
                    "block ({i}, {j}) has ranks ({l}, {r}), expected ({}, {})",
                    lefts[i], rights[j]
                )));
            }
        }
    }
    let fsize: usize = fiber.iter().product();
    let ltot: usize = lefts.iter().sum();
    let rtot: usize = rights.iter().sum();
    let mut data = vec![0.0; ltot * fsize * rtot];
    let mut loff = 0;
    for i in 0..nr {
        let mut roff = 0;
        for j in 0..nc {
            if let Block::Core(c) = &grid[i][j] {
                let (l, r) = (lefts[i], rights[j]);
                let src = c.raw();
                for a in 0..l {
                    for f in 0..fsize {
                        let s = (a * fsize + f) * r;
                        let d = ((loff + a) * fsize + f) * rtot + roff;
                        data[d..d + r].copy_from_slice(&src[s..s + r]);
                    }
                }
            }
            roff += rights[j];
        }
        loff += lefts[i];
    }
    C::build(ltot, &fiber, rtot, data)
}

/// Assembles an order-3 core from a block grid, rows indexing the left rank
/// and columns the right rank.
pub fn concat_core3(grid: &[Vec<Block<'_, Core3>>]) -> Result<Core3> {
    concat(grid)
}

/// Assembles an order-4 core from a block grid.
pub fn concat_core4(grid: &[Vec<Block<'_, Core4>>]) -> Result<Core4> {
    concat(grid)
}
