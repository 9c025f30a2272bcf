//! Finite-dimensional toolkit for graph correspondences, their Toeplitz
//! representations on block-decomposed Hilbert spaces, and the induced
//! endomorphisms of direct sums of matrix factors.
//!
//! The main flows:
//!
//! * build the endomorphism `Ad_τ(w) = Σ_e S_e w S_e*` from a representation
//!   ([`endomorphism::ad_endo`]),
//! * factor a given block endomorphism into a graph plus representation
//!   ([`factorization::factor_endo`]),
//! * recover coherent unitary equivalences and conjugacy witnesses between
//!   representations ([`equivalence`]).

pub mod cli;
pub mod correspondence;
pub mod endomorphism;
pub mod equivalence;
pub mod error;
pub mod factorization;
pub mod graph;
pub mod harness;
pub mod json;
pub mod numerics;
pub mod representation;

pub use error::{Error, Result};
pub use numerics::{CMatrix, Tolerance};
