//! Finite adiabatic-accessibility relations over scaled and compound states.
//!
//! A relation starts from a list of generator facts `X ≺ Y`, is closed under
//! reflexivity, transitivity, consistency, scaling invariance and
//! splitting/recombination inside a bounded universe of compound states, and
//! then answers accessibility, comparability and equivalence queries.
//!
//! Two backends implement [`Accessibility`]: the explicit
//! [`AccessibilityRelation`] and [`OracleRelation`], which decides every query
//! from a per-state entropy oracle.

mod checks;
mod closure;
mod compound;
mod oracle;
mod relation;
mod space;
pub mod spec;

pub use checks::{
    adiabats, check_cancellation, check_comparison_hypothesis, check_comparison_hypothesis_on,
    check_consistency, check_reflexivity, check_scaling, check_splitting, check_stability,
    check_transitivity, scan_axioms, AxiomName, AxiomScan, CancellationResult, ChResult, ChScope,
    StabilityReport, Witness,
};
pub use closure::ClosureOptions;
pub use compound::{normalize_pair, CompoundState, Part, SignedTerm};
pub use oracle::OracleRelation;
pub use relation::{
    classify, Accessibility, AccessibilityRelation, Classification, EpsilonFamily, LambdaGrid,
};
pub use space::{SpaceIx, SpaceRegistry, StateRef, StateSpaceDecl};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("unknown state space `{0}`")]
    UnknownSpace(String),
    #[error("unknown state `{state}` in space `{space}`")]
    UnknownState { space: String, state: String },
    #[error("duplicate state space `{0}`")]
    DuplicateSpace(String),
    #[error("duplicate state `{state}` in space `{space}`")]
    DuplicateState { space: String, state: String },
    #[error("space `{space}` has composition of length {found}, expected {expected}")]
    CompositionLength {
        space: String,
        expected: usize,
        found: usize,
    },
    #[error("space `{0}` has a negative composition entry")]
    NegativeComposition(String),
    #[error("scale factor must be positive, got {0}")]
    NonPositiveLambda(String),
    #[error("compound state has no parts")]
    EmptyCompound,
    #[error("lambda grid must contain 1")]
    GridMissingOne,
    #[error("scale factor {0} is not on the lambda grid")]
    LambdaOffGrid(String),
    #[error("fact {0} relates states of different composition")]
    CompositionMismatch(String),
    #[error("compound {compound} has {parts} parts, more than max_parts = {max_parts}")]
    TooManyParts {
        compound: String,
        parts: usize,
        max_parts: usize,
    },
    #[error("max_parts must be at least 1")]
    ZeroMaxParts,
    #[error("closure exceeded the fact budget of {0}; shrink the lambda grid or max_parts")]
    FactBudgetExceeded(usize),
    #[error("relation is not closed; call close() before querying")]
    NotClosed,
    #[error("compound {0} is outside the generated universe")]
    NotInUniverse(String),
    #[error("oracle value for `{0}` is not finite")]
    NonFiniteOracle(String),
    #[error("oracle table for space `{space}` has {found} values, expected {expected}")]
    OracleShape {
        space: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid relation document: {0}")]
    Document(String),
}
