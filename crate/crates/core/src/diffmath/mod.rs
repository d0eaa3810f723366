//! Dense matrices with reverse-mode differentiation.
//!
//! A [`Tape`] records each operation together with its output value. Calling
//! [`Tape::backward`] on a scalar node walks the records in reverse and
//! accumulates gradients into the leaves. The op set is exactly what the
//! encoder and the clustering objective need; there is no broadcasting.

mod dense;
mod gradcheck;
mod tape;

pub use dense::DenseMatrix;
pub(crate) use dense::gemm_into;
pub use gradcheck::{grad_check, GradCheckReport};
pub(crate) use tape::sigmoid;
pub use tape::{Gradients, Tape, Var, NORM_EPSILON};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MathError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("index {index:?} out of range for shape {shape:?}")]
    IndexOutOfRange {
        index: (usize, usize),
        shape: (usize, usize),
    },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: (usize, usize) },
}
