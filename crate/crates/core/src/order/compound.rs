use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::space::{SpaceIx, SpaceRegistry, StateRef};
use super::OrderError;
use crate::rational::{format_rational, Rational};

/// One scaled copy `λX` inside a compound state.
///
/// Field order matters: the derived ordering sorts by space, then state, then scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Part {
    pub space: SpaceIx,
    pub state: usize,
    #[serde(with = "crate::rational::serde_rational")]
    pub lambda: Rational,
}

impl Part {
    pub fn state_ref(&self) -> StateRef {
        StateRef {
            space: self.space,
            state: self.state,
        }
    }
}

/// A finite multiset of scaled states, kept in canonical sorted order so equal
/// multisets compare and hash equal. `(X, Y)` and `(Y, X)` are the same state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CompoundState {
    parts: Vec<Part>,
}

impl CompoundState {
    pub fn new(parts: impl IntoIterator<Item = (Rational, StateRef)>) -> Result<Self, OrderError> {
        let mut v = Vec::new();
        for (lambda, s) in parts {
            if !lambda.is_positive() {
                return Err(OrderError::NonPositiveLambda(format_rational(&lambda)));
            }
            v.push(Part {
                space: s.space,
                state: s.state,
                lambda,
            });
        }
        if v.is_empty() {
            return Err(OrderError::EmptyCompound);
        }
        v.sort();
        Ok(Self { parts: v })
    }

    /// `1·X`.
    pub fn single(state: StateRef) -> Self {
        Self {
            parts: vec![Part {
                space: state.space,
                state: state.state,
                lambda: Rational::from_integer(1),
            }],
        }
    }

    /// `λX` for one state.
    pub fn scaled_single(lambda: Rational, state: StateRef) -> Result<Self, OrderError> {
        Self::new([(lambda, state)])
    }

    pub(crate) fn from_sorted_parts(parts: Vec<Part>) -> Self {
        debug_assert!(parts.windows(2).all(|w| w[0] <= w[1]));
        Self { parts }
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `μ·(λ₁X₁, λ₂X₂, …) = (μλ₁X₁, μλ₂X₂, …)`.
    pub fn scaled(&self, mu: Rational) -> Result<Self, OrderError> {
        if !mu.is_positive() {
            return Err(OrderError::NonPositiveLambda(format_rational(&mu)));
        }
        Ok(Self {
            parts: self
                .parts
                .iter()
                .map(|p| Part {
                    lambda: p.lambda * mu,
                    ..*p
                })
                .collect(),
        })
    }

    /// Multiset union: the compound system `(X, Y)`.
    pub fn join(&self, other: &CompoundState) -> CompoundState {
        let mut parts = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() && j < other.parts.len() {
            if self.parts[i] <= other.parts[j] {
                parts.push(self.parts[i]);
                i += 1;
            } else {
                parts.push(other.parts[j]);
                j += 1;
            }
        }
        parts.extend_from_slice(&self.parts[i..]);
        parts.extend_from_slice(&other.parts[j..]);
        CompoundState { parts }
    }

    pub fn with_part(&self, part: Part) -> CompoundState {
        let mut parts = self.parts.clone();
        let at = parts.partition_point(|p| *p <= part);
        parts.insert(at, part);
        CompoundState { parts }
    }

    /// Removes the sub-multiset `sub`; `None` if `sub` is not contained or
    /// nothing would remain.
    pub fn remove(&self, sub: &CompoundState) -> Option<CompoundState> {
        let mut rest = Vec::with_capacity(self.len());
        let mut j = 0;
        for p in &self.parts {
            if j < sub.parts.len() && sub.parts[j] == *p {
                j += 1;
            } else {
                rest.push(*p);
            }
        }
        if j != sub.parts.len() || rest.is_empty() {
            return None;
        }
        Some(CompoundState { parts: rest })
    }

    /// All distinct non-empty proper sub-multisets.
    pub fn proper_submultisets(&self) -> Vec<CompoundState> {
        let n = self.parts.len();
        let mut out: Vec<CompoundState> = Vec::new();
        for mask in 1u32..((1u32 << n) - 1).max(1) {
            let parts: Vec<Part> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| self.parts[i])
                .collect();
            out.push(CompoundState { parts });
        }
        out.sort();
        out.dedup();
        out
    }

    /// `Σ λᵢ · composition(spaceᵢ)`.
    pub fn composition(&self, registry: &SpaceRegistry) -> Vec<Rational> {
        let mut total = vec![Rational::zero(); registry.element_count()];
        for p in &self.parts {
            for (t, c) in total.iter_mut().zip(registry.composition(p.space)) {
                *t += p.lambda * c;
            }
        }
        total
    }

    /// The state space this compound lives in, as a sorted list of `(space, λ)`.
    pub fn signature(&self) -> Vec<(SpaceIx, Rational)> {
        let mut sig: Vec<_> = self.parts.iter().map(|p| (p.space, p.lambda)).collect();
        sig.sort();
        sig
    }

    /// Total scale carried by each space, the per-space form of `Σλ = Σλ'`.
    pub fn scale_per_space(&self) -> Vec<(SpaceIx, Rational)> {
        let mut out: Vec<(SpaceIx, Rational)> = Vec::new();
        for p in &self.parts {
            match out.last_mut() {
                Some((s, total)) if *s == p.space => *total += p.lambda,
                _ => out.push((p.space, p.lambda)),
            }
        }
        out
    }

    pub fn display<'a>(&'a self, registry: &'a SpaceRegistry) -> CompoundDisplay<'a> {
        CompoundDisplay {
            compound: self,
            registry,
        }
    }
}

pub struct CompoundDisplay<'a> {
    compound: &'a CompoundState,
    registry: &'a SpaceRegistry,
}

impl fmt::Display for CompoundDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.compound.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if p.lambda != Rational::from_integer(1) {
                write!(f, "{} ", format_rational(&p.lambda))?;
            }
            write!(f, "{}", self.registry.label(p.state_ref()))?;
        }
        write!(f, ")")
    }
}

/// A scaled state that may carry a zero or negative coefficient.
pub type SignedTerm = (Rational, StateRef);

/// Turns a comparison between signed combinations into an ordinary one.
///
/// Zero-scaled parts are dropped (`(X, 0Y) = X`) and every negatively scaled
/// part moves to the other side (`(X, −Y) ≺ Z` means `X ≺ (Y, Z)`).
pub fn normalize_pair(
    lhs: &[SignedTerm],
    rhs: &[SignedTerm],
) -> Result<(CompoundState, CompoundState), OrderError> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &(lambda, s) in lhs {
        if lambda.is_positive() {
            left.push((lambda, s));
        } else if lambda.is_negative() {
            right.push((-lambda, s));
        }
    }
    for &(lambda, s) in rhs {
        if lambda.is_positive() {
            right.push((lambda, s));
        } else if lambda.is_negative() {
            left.push((-lambda, s));
        }
    }
    Ok((CompoundState::new(left)?, CompoundState::new(right)?))
}
