//! Tensor trains and TT operators.

mod core;
pub mod json;
mod operator;
mod tensor;

pub use self::core::{concat_core3, concat_core4, Block, Core3, Core4};
pub use operator::{DenseMatrix, TTOperator};
pub use tensor::{DenseTensor, RankProfile, TTTensor, DEFAULT_DENSE_CAP};

pub(crate) use operator::{apply_core, sum_core4};
