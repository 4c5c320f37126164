//! Reverse-mode automatic differentiation over [`Tensor4`](crate::Tensor4).

mod backend;
pub mod gradcheck;
mod tape;

pub use backend::{Backend, Eager};
pub use gradcheck::{compare_gradients, finite_diff_check, GradCheckReport};
pub use tape::{Gradients, Tape, Var};
