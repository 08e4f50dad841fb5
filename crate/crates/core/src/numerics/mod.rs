//! Dense linear algebra and special functions.
//!
//! Everything here is small and self-contained: the matrices that arise
//! are at most a few hundred rows and fully dense (`X`, `Y`, `L`).

mod dd;
mod gamma;
mod lu;
mod matrix;

pub use dd::{Dd, DdLu, DdMatrix};
pub use gamma::gamma_fn;
pub use lu::{lu_factor, LuFactorization};
pub use matrix::{inf_norm_vec, matmul, DenseMatrix};
