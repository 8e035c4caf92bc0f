//! Two-layer networks `h = psi(X^T W + 1 b^T) v`: forward map, Jacobians,
//! capacity predicates, the rank test at initialization and the
//! width-doubling interpolation solver.

mod activation;
mod capacity;
mod init;
mod interpolate;
mod model;

pub use activation::{Activation, CustomActivation, PhiReading};
pub use capacity::{capacity_verdict, polynomial_support_count, CapacityReason, CapacityVerdict};
pub use init::{phi_khatri, rank_at_initialization, scale_factor, standard_normal_matrix, InitConfig, InitRank};
pub use interpolate::{
    assemble, forward_multi, interpolate, interpolate_multioutput, interpolate_unchecked, trace_to_json_lines,
    Interpolation, MultiOutputFit, MultiOutputMode, SolverConfig, TraceEntry,
};
pub use model::{forward, full_jacobian, jacobian_wrt_w, NetworkParams};
