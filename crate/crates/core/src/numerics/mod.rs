//! Dense linear algebra, the symmetric eigensolver and seeded random streams.

mod eigen;
mod matrix;
mod random;

pub use eigen::{sym_eig, SymEigResult};
pub use matrix::{dot, norm1, norm2, norm_inf, Matrix};
pub use random::{
    mvn_toeplitz, mvn_with_factor, rademacher_vec, shuffled_folds, standard_normal_matrix,
    standard_normal_matrix_with, standard_normal_vec, RngStream,
};
