//! Numerical verification engine for the Kropina change `*L = L²/β` of a
//! Finsler metric with an h-vector.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod basegeom;
pub mod difftensor;
pub mod error;
pub mod expr;
pub mod harness;
pub mod hvector;
pub mod jet;
pub mod kropina;
pub mod linalg;
pub mod metric;
pub mod projective;
pub mod scalar;
pub mod tensor;
pub mod tolerance;

pub use error::{Error, Result};
pub use jet::{eval_jet, JetBundle, JetOrder, ScalarField};
pub use scalar::{Dual, Scalar};
pub use tensor::{Matrix, Symmetry, Tensor3, Vector};
