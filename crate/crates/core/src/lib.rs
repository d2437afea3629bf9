//! Robustness of bipartite quantum gates against noise.
//!
//! A two-party gate acting on systems A and B is only useful as a quantum
//! gate while it can create entanglement. This crate quantifies how much
//! noise it takes to destroy that ability and what follows once it is gone:
//!
//! * [`operator`] — operator Schmidt decompositions of bipartite operators,
//!   partial traces and transposes, and continuity bounds relating Schmidt
//!   coefficients of nearby unitaries.
//! * [`choi`] — the state/channel correspondence with explicit reference
//!   systems on both sides, so that separability questions about channels
//!   become separability questions about a four-party state cut down the
//!   middle.
//! * [`channels`] — Kraus-form channels: depolarizing noise, noisy-gate
//!   mixtures, classically correlated gates, and the worst-case noise
//!   channel attached to a gate's Schmidt decomposition.
//! * [`separability`] — PPT tests, robustness of states relative to noise,
//!   the optimal-noise construction for pure states, and an exact product
//!   decomposition for separable two-qubit states.
//! * [`robustness`] — gate-level robustness measures, fault-tolerance
//!   threshold bounds derived from them, and feasibility of writing one
//!   channel as a probabilistic mixture of others.
//! * [`simulator`] — a stochastic classical simulator for circuits composed
//!   of separability-preserving two-qubit gates, with a dense density-matrix
//!   oracle for cross-checking.
//! * [`io`] — JSON wire formats for matrices, channels, and circuit files,
//!   plus numeric formatting helpers for stable command-line output.
//!
//! Matrices are dense `nalgebra` matrices of `Complex64`; all dimensions are
//! small (products of subsystem dimensions up to a few dozen), so no sparse
//! or structured representations are used anywhere.

pub mod channels;
pub mod choi;
pub mod io;
pub mod linalg;
pub mod operator;
pub mod robustness;
pub mod separability;
pub mod simulator;

pub use linalg::{CMatrix, CVector};
pub use operator::{Dims, Operator, SchmidtDecomposition};

use thiserror::Error;

/// Errors reported by gate-robustness operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("map is not trace-preserving (deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },
    #[error("map is not completely positive (min Choi eigenvalue {min_eigenvalue:.3e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },
    #[error("reference marginal is not completely mixed (deviation {deviation:.3e}); source map cannot be trace-preserving")]
    MarginalNotMixed { deviation: f64 },
    #[error("state is entangled (concurrence {concurrence:.3e}); no product decomposition exists")]
    EntangledInput { concurrence: f64 },
    #[error("decomposition hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("gate has a single Schmidt term (separable gate; no noise direction)")]
    SeparableGate,
    #[error("invalid probability {0}")]
    BadProbability(f64),
    #[error("invalid circuit: {0}")]
    BadCircuit(String),
    #[error("requested accuracy unattainable: error budget {budget:.3e} exceeds epsilon {epsilon:.3e} after escalation")]
    PrecisionUnattainable { budget: f64, epsilon: f64 },
    #[error("numerical routine failed: {0}")]
    NumericalFailure(String),
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Central numerical tolerances.
///
/// Every predicate and verification in the crate pulls its threshold from
/// one of these fields so that a single record controls the numerics.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    /// Yes/no predicates: unitarity, hermiticity, positivity, PPT.
    pub predicate: f64,
    /// Reconstruction and round-trip residuals.
    pub reconstruction: f64,
    /// Singular values and eigenvalues below this count as zero.
    pub rank_cutoff: f64,
    /// Absolute tolerance of the robustness bisection.
    pub bisection: f64,
    /// Concurrence above this rejects a state as entangled in the
    /// product decomposer.
    pub concurrence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            predicate: 1e-9,
            reconstruction: 1e-8,
            rank_cutoff: 1e-10,
            bisection: 1e-8,
            concurrence: 1e-7,
        }
    }
}

impl Tolerances {
    /// Default tolerances with a different predicate threshold.
    #[must_use]
    pub fn with_predicate(predicate: f64) -> Self {
        Tolerances {
            predicate,
            ..Tolerances::default()
        }
    }
}
