//! Generic rank of Hadamard powers, Hadamard polynomials and their
//! Khatri-Rao products, with the two-layer network capacity pipeline that
//! rests on them.
//!
//! Matrices come in an exact rational backend and an `f64` backend. The
//! exact backend carries every identity and rank law; the float backend is
//! used for network Jacobians and interpolation.

pub mod combinat;
pub mod decomp;
pub mod error;
pub mod generic_rank;
pub mod linalg;
pub mod network;
pub mod seed;

pub use combinat::{SupportFilter, WeakComposition};
pub use decomp::{ColumnLabel, Decomposition, DecompositionKind};
pub use error::{Error, Result};
pub use generic_rank::{RankLaw, RankReport, Sampler};
pub use linalg::{Backend, Budget, DiagonalMatrix, Matrix, RankResult, Rational, Scalar, TolerancePolicy};
pub use network::{Activation, CapacityReason, CapacityVerdict, NetworkParams, PhiReading, SolverConfig};
