//! Group elements, finite and continuous group descriptors, actions on R^d and
//! sampling laws.

mod action;
mod descriptor;
mod element;
mod sampler;
mod table;
pub mod text;

pub use action::{ActionKind, GroupAction};
pub use descriptor::{compose_all, GroupDescriptor, GroupKind, RotationAxis};
pub use element::{angle_distance, compose, reorthonormalize, wrap_angle, GroupElement};
pub use sampler::SamplerSpec;
pub use table::{dihedral4_matrices, CayleyTable, BRUTE_FORCE_SUBGROUP_LIMIT, EXHAUSTIVE_ASSOCIATIVITY_LIMIT};

/// Tolerance for orthogonality, determinant and membership checks.
pub const NUMERIC_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum GroupError {
    #[error("invalid Cayley table: {0}")]
    InvalidTable(String),
    #[error("invalid group element: {0}")]
    InvalidElement(String),
    #[error("invalid group descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid sampler: {0}")]
    InvalidSampler(String),
    #[error("group of order {0} is too large for exhaustive enumeration")]
    TooLarge(usize),
    #[error("cannot compose {left} with {right}")]
    IncompatibleElements {
        left: &'static str,
        right: &'static str,
    },
    #[error("action cannot apply a {element} element")]
    IncompatibleAction { element: &'static str },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("group '{0}' is not finite")]
    NotFinite(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
