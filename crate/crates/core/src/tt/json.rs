//! JSON exchange format for tensor trains and TT operators.
//!
//! A tensor is `{"order", "dims", "ranks", "cores"}` with each core nested as
//! `[left][mode][right]`; operators add `"col_dims"` and nest cores as
//! `[left][row][col][right]`. `ranks` lists all `order + 1` bond ranks
//! including the unit boundary ranks. Numbers are written with 17
//! significant digits so that doubles round-trip exactly.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use super::{Core3, Core4, TTOperator, TTTensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorDoc {
    pub order: usize,
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub cores: Vec<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDoc {
    pub order: usize,
    pub dims: Vec<usize>,
    pub col_dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub cores: Vec<Vec<Vec<Vec<Vec<f64>>>>>,
}

/// Writes every `f64` as `{:.16e}` (17 significant digits).
#[derive(Clone, Copy, Debug, Default)]
pub struct RoundTripFormatter;

impl Formatter for RoundTripFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes any value with [`RoundTripFormatter`].
pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, RoundTripFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

fn check_finite<'a>(values: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    if values.into_iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument("non-finite core entry".into()))
    }
}

impl TensorDoc {
    pub fn from_tensor(t: &TTTensor) -> Result<Self> {
        let mut cores = Vec::with_capacity(t.order());
        for c in t.cores() {
            check_finite(c.data())?;
            let (l, n, r) = c.shape();
            cores.push(
                (0..l)
                    .map(|a| (0..n).map(|i| (0..r).map(|b| c.get(a, i, b)).collect()).collect())
                    .collect(),
            );
        }
        Ok(TensorDoc {
            order: t.order(),
            dims: t.dims(),
            ranks: t.ranks(),
            cores,
        })
    }

    pub fn into_tensor(self) -> Result<TTTensor> {
        check_header(self.order, &self.dims, &self.ranks, self.cores.len())?;
        let mut out = Vec::with_capacity(self.order);
        for (m, core) in self.cores.into_iter().enumerate() {
            let (l, n, r) = (self.ranks[m], self.dims[m], self.ranks[m + 1]);
            let mut data = Vec::with_capacity(l.saturating_mul(n).saturating_mul(r).min(1 << 24));
            if core.len() != l {
                return Err(shape_err(m, "left rank", l, core.len()));
            }
            for slab in core {
                if slab.len() != n {
                    return Err(shape_err(m, "mode size", n, slab.len()));
                }
                for fiber in slab {
                    if fiber.len() != r {
                        return Err(shape_err(m, "right rank", r, fiber.len()));
                    }
                    data.extend(fiber);
                }
            }
            check_finite(&data)?;
            out.push(Core3::new(l, n, r, data)?);
        }
        TTTensor::new(out)
    }
}

impl OperatorDoc {
    pub fn from_operator(w: &TTOperator) -> Result<Self> {
        let mut cores = Vec::with_capacity(w.order());
        for c in w.cores() {
            check_finite(c.data())?;
            let (l, n, q, r) = c.shape();
            cores.push(
                (0..l)
                    .map(|a| {
                        (0..n)
                            .map(|i| (0..q).map(|j| (0..r).map(|b| c.get(a, i, j, b)).collect()).collect())
                            .collect()
                    })
                    .collect(),
            );
        }
        Ok(OperatorDoc {
            order: w.order(),
            dims: w.row_dims(),
            col_dims: w.col_dims(),
            ranks: w.ranks(),
            cores,
        })
    }

    pub fn into_operator(self) -> Result<TTOperator> {
        check_header(self.order, &self.dims, &self.ranks, self.cores.len())?;
        if self.col_dims.len() != self.order {
            return Err(Error::Shape(format!(
                "col_dims has {} entries for order {}",
                self.col_dims.len(),
                self.order
            )));
        }
        if self.col_dims.iter().any(|&d| d == 0) {
            return Err(Error::Shape("col_dims must be positive".into()));
        }
        let mut out = Vec::with_capacity(self.order);
        for (m, core) in self.cores.into_iter().enumerate() {
            let (l, n, q, r) = (self.ranks[m], self.dims[m], self.col_dims[m], self.ranks[m + 1]);
            let mut data = Vec::new();
            if core.len() != l {
                return Err(shape_err(m, "left rank", l, core.len()));
            }
            for slab in core {
                if slab.len() != n {
                    return Err(shape_err(m, "row size", n, slab.len()));
                }
                for row in slab {
                    if row.len() != q {
                        return Err(shape_err(m, "column size", q, row.len()));
                    }
                    for fiber in row {
                        if fiber.len() != r {
                            return Err(shape_err(m, "right rank", r, fiber.len()));
                        }
                        data.extend(fiber);
                    }
                }
            }
            check_finite(&data)?;
            out.push(Core4::new(l, n, q, r, data)?);
        }
        TTOperator::new(out)
    }
}

fn shape_err(core: usize, what: &str, expected: usize, got: usize) -> Error {
    Error::Shape(format!("core {core}: {what} should be {expected}, found {got}"))
}

fn check_header(order: usize, dims: &[usize], ranks: &[usize], ncores: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::Shape("order must be at least 1".into()));
    }
    if dims.len() != order || ncores != order {
        return Err(Error::Shape(format!(
            "order {order} but {} dims and {ncores} cores",
            dims.len()
        )));
    }
    if ranks.len() != order + 1 {
        return Err(Error::Shape(format!(
            "order {order} needs {} ranks, found {}",
            order + 1,
            ranks.len()
        )));
    }
    if ranks[0] != 1 || ranks[order] != 1 {
        return Err(Error::Shape("boundary ranks must be 1".into()));
    }
    if dims.iter().chain(ranks).any(|&d| d == 0) {
        return Err(Error::Shape("dims and ranks must be positive".into()));
    }
    Ok(())
}

pub fn tensor_to_json(t: &TTTensor) -> Result<String> {
    to_string(&TensorDoc::from_tensor(t)?)
}

pub fn tensor_from_json(s: &str) -> Result<TTTensor> {
    let doc: TensorDoc = serde_json::from_str(s)?;
    doc.into_tensor()
}

pub fn operator_to_json(w: &TTOperator) -> Result<String> {
    to_string(&OperatorDoc::from_operator(w)?)
}

pub fn operator_from_json(s: &str) -> Result<TTOperator> {
    let doc: OperatorDoc = serde_json::from_str(s)?;
    doc.into_operator()
}
