//! Symmetry search for regression functions.
//!
//! Given data `(X_i, Y_i)` and a lattice of candidate subgroups acting on the
//! feature space, estimate the largest subgroup under which the regression
//! function is invariant, then use that symmetry to fit better estimators.

pub mod group;
pub mod seed;
pub mod lattice;
pub mod invariance;
pub mod search;
pub mod regression;
