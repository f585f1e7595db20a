//! Entropy differences across state spaces (`D`, `E`, `F`), absence of sinks,
//! gaps and the additive entropy constants `B(Γ)`, all in exact arithmetic.

mod graph;
mod infima;
mod solver;

use std::cmp::Ordering;
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::rational::{format_big, parse_big_rational};

pub use graph::{GraphSpec, Node, PartSpec, SpaceSpec, StateEntry, StateKey, StateSpaceGraph};
pub use infima::{
    check_no_sinks, compute_d, compute_e, compute_f, detect_gap, verify_accessibility_criterion,
    AccessibilityMismatch, AccessibilityReport, ChainInfima, Gap, Infima, Matrix, Pair,
    ReverseBoundViolation, SinkReport,
};
pub use solver::{
    check_constants, solve_additive_constants, AdditiveConstants, ConstantsCheck, SolveMethod,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalibrationError {
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("unknown space `{0}`")]
    UnknownSpace(String),
    #[error("unknown state `{state}` in space `{space}`")]
    UnknownState { space: String, state: String },
    #[error("fact {from} ≺ {to} joins spaces with different composition")]
    CompositionMismatch { from: String, to: String },
    #[error("F({from}, {to}) is not finite")]
    NotFinite { from: String, to: String },
    #[error("entropy differences are unbounded below between {0:?}")]
    Sink(Vec<(String, String)>),
    #[error("constraints on the additive constants are infeasible; conflicting bounds: {0:?}")]
    Infeasible(Vec<Pair>),
}

/// `ℝ ∪ {−∞, +∞}` over exact rationals. Serialized as a rational string or
/// the sentinels `"inf"` / `"-inf"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtReal {
    NegInf,
    Finite(BigRational),
    PosInf,
}

impl ExtReal {
    pub fn zero() -> Self {
        ExtReal::Finite(BigRational::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<&BigRational> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Sum for chain lengths: `+∞` absorbs, then `−∞`.
    pub fn plus(&self, other: &ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::PosInf, _) | (_, ExtReal::PosInf) => ExtReal::PosInf,
            (ExtReal::NegInf, _) | (_, ExtReal::NegInf) => ExtReal::NegInf,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
        }
    }

    pub fn neg(&self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::Finite(x) => ExtReal::Finite(-x),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::PosInf => f64::INFINITY,
            ExtReal::Finite(x) => crate::rational::big_to_f64(x),
        }
    }

    pub fn cmp_finite(&self, x: &BigRational) -> Ordering {
        self.cmp(&ExtReal::Finite(x.clone()))
    }
}

impl From<BigRational> for ExtReal {
    fn from(x: BigRational) -> Self {
        ExtReal::Finite(x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::PosInf => f.write_str("inf"),
            ExtReal::Finite(x) => f.write_str(&format_big(x)),
        }
    }
}

impl std::str::FromStr for ExtReal {
    type Err = crate::rational::ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "+inf" => Ok(ExtReal::PosInf),
            "-inf" => Ok(ExtReal::NegInf),
            t => parse_big_rational(t).map(ExtReal::Finite),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests;
