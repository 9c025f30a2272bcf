//! Crate-wide error type.
//!
//! Two families of failure matter to callers: malformed input (bad shapes,
//! mismatched graphs, schema violations) and well-formed input for which a
//! verified property fails (a map that is not an endomorphism, representations
//! whose endomorphisms disagree, ...). The CLI maps the first family to exit
//! code 2 and the second to exit code 1.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input: wrong shapes, unknown names,
    /// mismatched graphs or block layouts.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The supplied matrix-unit images do not form a *-endomorphism.
    #[error("not a *-endomorphism: {0}")]
    NotAnEndomorphism(String),

    /// rank(alpha_ij(E_00)) and rank(alpha_ij(I)) disagree, so the component
    /// map is not a *-homomorphism at the working tolerance.
    #[error(
        "inconsistent multiplicity for blocks ({i}, {j}): rank of the corner image is {unit_rank} \
         but the identity image has rank {identity_rank}, expected {}",
        .unit_rank * .block_dim
    )]
    InconsistentMultiplicity {
        i: String,
        j: String,
        unit_rank: usize,
        identity_rank: usize,
        block_dim: usize,
    },

    /// The extracted isometries fail to reproduce the component map.
    #[error("isometry extraction failed for blocks ({i}, {j}): residual {residual:.3e}")]
    ReconstructionFailure { i: String, j: String, residual: f64 },

    /// No vertex bijection matches the two families of block projections.
    #[error("no vertex bijection matches the block projections: {0}")]
    VertexMismatch(String),

    /// The two representations do not induce the same endomorphism.
    #[error("representations do not induce the same endomorphism: residual {0:.3e}")]
    AdMismatch(f64),

    /// The recovered edge-coefficient matrix is not unitary.
    #[error("recovered coefficient matrix is not unitary: {0}")]
    NotUnitary(String),

    /// The supplied automorphism does not intertwine the two endomorphisms.
    #[error("endomorphisms are not conjugate via the supplied automorphism: residual {0:.3e}")]
    NotConjugate(f64),

    /// The supplied matrix-unit images do not define a block automorphism.
    #[error("not a block automorphism: {0}")]
    NotAutomorphism(String),

    /// Rejection sampling hit its retry cap without a feasible instance.
    #[error("no feasible instance found after {0} draws")]
    BoundsInfeasible(usize),
}

impl Error {
    /// True for malformed input (CLI exit 2) as opposed to a well-formed
    /// instance failing a verified property (CLI exit 1).
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidInput(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
