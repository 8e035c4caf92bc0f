//! Dense matrices over an exact rational and a float backend, with the
//! Hadamard/Khatri-Rao algebra and the rank engines built on top.

pub mod bareiss;
pub mod matrix;
pub mod rank;
pub mod scalar;

pub use matrix::{parse_text, to_text, DiagonalMatrix, Matrix};
pub use rank::{
    cauchy_binet_diag_expand, kruskal_rank, minor, rank_condition_value, rank_exact, rank_float, Budget,
    RankResult, TolerancePolicy,
};
pub use scalar::{parse_rational, rational_from_f64, Backend, Rational, Scalar};
