//! Dense tensors and reverse-mode automatic differentiation.

mod array;
mod gradcheck;
mod graph;
mod loss;

pub use array::Tensor;
pub use gradcheck::{check_gradient, check_gradients};
pub use graph::{Axis, Graph, Var};
pub use loss::{loss, LossKind, BCE_EPSILON};
