//! Distribution-free risk bounds for compression schemes.
//!
//! The crate computes the bounds ε_k and (ε̲_k, ε̄_k) as functions of the
//! compressed-set size, provides a multiset compression framework with
//! property checkers, ships several reference schemes (convex hulls, SVM,
//! SVR, a guaranteed-error machine and toy schemes), and runs seeded Monte
//! Carlo experiments that compare empirical risk with the bounds.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod bounds;
pub mod compression;
pub mod exec;
pub mod experiments;
pub mod format;
pub mod numerics;
pub mod schemes;
pub mod seed;

pub use bounds::{
    asymptotic_envelope, bound_table, eps_interval, eps_interval_roots, eps_upper, eps_upper_root, psi,
    psi_at_complement, psi_tilde, psi_tilde_at_complement, BoundQuery, BoundRow, BoundTable, BoundsError, Root,
};
pub use exec::Execution;
pub use numerics::{NumericsError, Precision};
