use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::closure::{self, Closure, ClosureOptions};
use super::compound::CompoundState;
use super::space::SpaceRegistry;
use super::OrderError;
use crate::rational::{format_rational, Rational};

/// Finite set of admissible scale factors. Always contains 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaGrid {
    values: Vec<Rational>,
}

impl LambdaGrid {
    pub fn new(values: impl IntoIterator<Item = Rational>) -> Result<Self, OrderError> {
        let mut v: Vec<Rational> = values.into_iter().collect();
        if let Some(bad) = v.iter().find(|x| !x.is_positive()) {
            return Err(OrderError::NonPositiveLambda(format_rational(bad)));
        }
        v.sort();
        v.dedup();
        if v.binary_search(&Rational::one()).is_err() {
            return Err(OrderError::GridMissingOne);
        }
        Ok(Self { values: v })
    }

    /// `{1}`: single copies only.
    pub fn unit() -> Self {
        Self {
            values: vec![Rational::one()],
        }
    }

    /// Powers of two `1, 1/2, …, 2^-depth`. `dyadic(7)` is the default grid
    /// (denominators up to 128).
    pub fn dyadic(depth: u32) -> Self {
        let mut values: Vec<Rational> = (0..=depth).map(|k| Rational::new(1, 1 << k)).collect();
        values.sort();
        Self { values }
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn contains(&self, r: &Rational) -> bool {
        self.values.binary_search(r).is_ok()
    }

    /// Scale ratios `g/h ≠ 1` between grid values; the factors scaling invariance
    /// can apply without leaving the grid.
    pub fn ratios(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        for g in &self.values {
            for h in &self.values {
                let r = g / h;
                if r != Rational::one() {
                    out.push(r);
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Ways to write `lambda = a + b` with `a ≤ b` both on the grid.
    pub fn splits(&self, lambda: &Rational) -> Vec<(Rational, Rational)> {
        let mut out = Vec::new();
        for a in &self.values {
            let b = lambda - a;
            if *a <= b && self.contains(&b) {
                out.push((*a, b));
            }
        }
        out
    }
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self::dyadic(7)
    }
}

/// Declared stability family: if `(X, εZ₀) ≺ (Y, εZ₁)` for every listed ε then
/// `X ≺ Y` is expected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsilonFamily {
    pub x: CompoundState,
    pub y: CompoundState,
    pub z0: CompoundState,
    pub z1: CompoundState,
    pub epsilons: Vec<Rational>,
}

/// Anything that can decide `X ≺ Y` for compound states.
pub trait Accessibility: Sync {
    fn registry(&self) -> &SpaceRegistry;

    fn accessible(&self, x: &CompoundState, y: &CompoundState) -> Result<bool, OrderError>;
}

/// The four mutually exclusive outcomes of comparing two states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Equivalent,
    StrictlyPrecedes,
    StrictlyFollows,
    Incomparable,
}

impl Classification {
    pub fn reversed(self) -> Self {
        match self {
            Classification::StrictlyPrecedes => Classification::StrictlyFollows,
            Classification::StrictlyFollows => Classification::StrictlyPrecedes,
            other => other,
        }
    }

    pub fn is_comparable(self) -> bool {
        self != Classification::Incomparable
    }
}

pub fn classify<R: Accessibility + ?Sized>(
    rel: &R,
    x: &CompoundState,
    y: &CompoundState,
) -> Result<Classification, OrderError> {
    let forward = rel.accessible(x, y)?;
    let backward = rel.accessible(y, x)?;
    Ok(match (forward, backward) {
        (true, true) => Classification::Equivalent,
        (true, false) => Classification::StrictlyPrecedes,
        (false, true) => Classification::StrictlyFollows,
        (false, false) => Classification::Incomparable,
    })
}

/// Explicit relation: generator facts plus, once closed, the full closed fact set
/// over the bounded universe of compound states.
#[derive(Debug, Clone)]
pub struct AccessibilityRelation {
    pub(crate) registry: Arc<SpaceRegistry>,
    pub(crate) grid: LambdaGrid,
    pub(crate) generators: BTreeSet<(CompoundState, CompoundState)>,
    pub(crate) families: Vec<EpsilonFamily>,
    pub(crate) closure: Option<Closure>,
}

impl AccessibilityRelation {
    /// Unclosed relation holding exactly the given facts plus reflexive pairs.
    pub fn build(
        registry: Arc<SpaceRegistry>,
        facts: impl IntoIterator<Item = (CompoundState, CompoundState)>,
        grid: LambdaGrid,
    ) -> Result<Self, OrderError> {
        let mut generators = BTreeSet::new();
        for (x, y) in facts {
            for c in [&x, &y] {
                for p in c.parts() {
                    if p.space.0 >= registry.len() || p.state >= registry.decl(p.space).states.len()
                    {
                        return Err(OrderError::UnknownState {
                            space: format!("#{}", p.space.0),
                            state: format!("#{}", p.state),
                        });
                    }
                    if !grid.contains(&p.lambda) {
                        return Err(OrderError::LambdaOffGrid(format_rational(&p.lambda)));
                    }
                }
            }
            if x.composition(&registry) != y.composition(&registry) {
                return Err(OrderError::CompositionMismatch(format!(
                    "{} ≺ {}",
                    x.display(&registry),
                    y.display(&registry)
                )));
            }
            generators.insert((x, y));
        }
        Ok(Self {
            registry,
            grid,
            generators,
            families: Vec::new(),
            closure: None,
        })
    }

    pub fn with_families(mut self, families: Vec<EpsilonFamily>) -> Self {
        self.families = families;
        self
    }

    pub fn registry_arc(&self) -> &Arc<SpaceRegistry> {
        &self.registry
    }

    pub fn grid(&self) -> &LambdaGrid {
        &self.grid
    }

    pub fn families(&self) -> &[EpsilonFamily] {
        &self.families
    }

    pub fn generators(&self) -> impl Iterator<Item = &(CompoundState, CompoundState)> {
        self.generators.iter()
    }

    pub fn is_closed(&self) -> bool {
        self.closure.is_some()
    }

    pub fn max_parts(&self) -> Option<usize> {
        self.closure.as_ref().map(|c| c.max_parts)
    }

    /// Compound states the relation knows about: the closure universe once
    /// closed, otherwise single unit-scale states plus every generator compound.
    pub fn universe(&self) -> Vec<CompoundState> {
        match &self.closure {
            Some(c) => c.universe.clone(),
            None => {
                let mut set: BTreeSet<CompoundState> = self
                    .registry
                    .all_states()
                    .map(CompoundState::single)
                    .collect();
                for (x, y) in &self.generators {
                    set.insert(x.clone());
                    set.insert(y.clone());
                }
                set.into_iter().collect()
            }
        }
    }

    /// Raw membership in the stored fact set; never errors.
    pub fn contains(&self, x: &CompoundState, y: &CompoundState) -> bool {
        match &self.closure {
            Some(c) => c.contains(x, y),
            None => x == y || self.generators.contains(&(x.clone(), y.clone())),
        }
    }

    /// Every stored fact, in canonical order.
    pub fn facts(&self) -> Vec<(CompoundState, CompoundState)> {
        match &self.closure {
            Some(c) => c.facts(),
            None => {
                let mut set: BTreeSet<(CompoundState, CompoundState)> = self
                    .universe()
                    .into_iter()
                    .map(|c| (c.clone(), c))
                    .collect();
                set.extend(self.generators.iter().cloned());
                set.into_iter().collect()
            }
        }
    }

    pub fn fact_count(&self) -> usize {
        match &self.closure {
            Some(c) => c.fact_count,
            None => self.facts().len(),
        }
    }

    /// Closes under reflexivity, transitivity, consistency, scaling invariance
    /// and splitting/recombination. Closing a closed relation re-seeds from its
    /// full fact set, so `close` is idempotent.
    pub fn close(&self, opts: &ClosureOptions) -> Result<AccessibilityRelation, OrderError> {
        let mut seeds: Vec<(CompoundState, CompoundState)> =
            self.generators.iter().cloned().collect();
        if let Some(c) = &self.closure {
            seeds.extend(c.facts());
        }
        let closure = closure::close(&self.registry, &self.grid, &seeds, opts)?;
        Ok(AccessibilityRelation {
            registry: self.registry.clone(),
            grid: self.grid.clone(),
            generators: self.generators.clone(),
            families: self.families.clone(),
            closure: Some(closure),
        })
    }

    pub(crate) fn from_closure(
        registry: Arc<SpaceRegistry>,
        grid: LambdaGrid,
        closure: Closure,
    ) -> Self {
        Self {
            registry,
            grid,
            generators: BTreeSet::new(),
            families: Vec::new(),
            closure: Some(closure),
        }
    }

    pub fn same_facts(&self, other: &AccessibilityRelation) -> bool {
        self.facts() == other.facts()
    }
}

impl Accessibility for AccessibilityRelation {
    fn registry(&self) -> &SpaceRegistry {
        &self.registry
    }

    fn accessible(&self, x: &CompoundState, y: &CompoundState) -> Result<bool, OrderError> {
        let c = self.closure.as_ref().ok_or(OrderError::NotClosed)?;
        for s in [x, y] {
            if !c.index.contains_key(s) {
                return Err(OrderError::NotInUniverse(
                    s.display(&self.registry).to_string(),
                ));
            }
        }
        Ok(c.contains(x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::{StateRef, StateSpaceDecl};

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn registry(states: &[&str]) -> Arc<SpaceRegistry> {
        Arc::new(SpaceRegistry::new(vec![StateSpaceDecl::new("G", vec![], states)]).unwrap())
    }

    fn s(reg: &SpaceRegistry, name: &str) -> StateRef {
        reg.state("G", name).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(
            LambdaGrid::new([q(1, 2)]),
            Err(OrderError::GridMissingOne)
        ));
        assert!(matches!(
            LambdaGrid::new([q(1, 1), q(0, 1)]),
            Err(OrderError::NonPositiveLambda(_))
        ));
        let g = LambdaGrid::new([q(1, 2), q(1, 1), q(1, 2)]).unwrap();
        assert_eq!(g.values(), &[q(1, 2), q(1, 1)]);
        assert_eq!(g.ratios(), vec![q(1, 2), q(2, 1)]);
        assert_eq!(g.splits(&q(1, 1)), vec![(q(1, 2), q(1, 2))]);
        assert!(g.splits(&q(1, 2)).is_empty());
        assert_eq!(LambdaGrid::default().values().len(), 8);
    }

    #[test]
    fn build_without_facts_is_reflexive_only() {
        let reg = registry(&["X"]);
        let rel = AccessibilityRelation::build(reg.clone(), [], LambdaGrid::unit()).unwrap();
        let x = CompoundState::single(s(&reg, "X"));
        assert_eq!(rel.facts(), vec![(x.clone(), x)]);
        assert!(!rel.is_closed());
    }

    #[test]
    fn build_keeps_generators_and_their_reflexive_pairs() {
        let reg = registry(&["X", "Y"]);
        let x = CompoundState::single(s(&reg, "X"));
        let y = CompoundState::single(s(&reg, "Y"));
        let rel = AccessibilityRelation::build(
            reg,
            [(x.clone(), y.clone()), (x.clone(), y.clone())],
            LambdaGrid::unit(),
        )
        .unwrap();
        let facts = rel.facts();
        assert_eq!(facts.len(), 3);
        assert!(facts.contains(&(x.clone(), x.clone())));
        assert!(facts.contains(&(y.clone(), y.clone())));
        assert!(facts.contains(&(x, y)));
    }

    #[test]
    fn build_rejects_off_grid_and_mismatched_facts() {
        let reg = registry(&["X", "Y"]);
        let half_x = CompoundState::scaled_single(q(1, 2), s(&reg, "X")).unwrap();
        let half_y = CompoundState::scaled_single(q(1, 2), s(&reg, "Y")).unwrap();
        let y = CompoundState::single(s(&reg, "Y"));
        assert!(matches!(
            AccessibilityRelation::build(
                reg.clone(),
                [(half_x.clone(), half_y)],
                LambdaGrid::unit()
            ),
            Err(OrderError::LambdaOffGrid(_))
        ));
        let grid = LambdaGrid::new([q(1, 2), q(1, 1)]).unwrap();
        assert!(matches!(
            AccessibilityRelation::build(reg, [(half_x, y)], grid),
            Err(OrderError::CompositionMismatch(_))
        ));
    }

    #[test]
    fn unclosed_relation_refuses_queries() {
        let reg = registry(&["X"]);
        let rel = AccessibilityRelation::build(reg.clone(), [], LambdaGrid::unit()).unwrap();
        let x = CompoundState::single(s(&reg, "X"));
        assert_eq!(rel.accessible(&x, &x), Err(OrderError::NotClosed));
    }
}
