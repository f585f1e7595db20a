use std::sync::Arc;

use fixedbitset::FixedBitSet;

use super::closure::{empty_closure, ClosureOptions};
use super::compound::CompoundState;
use super::relation::{Accessibility, AccessibilityRelation, LambdaGrid};
use super::space::{SpaceRegistry, StateRef};
use super::OrderError;
use crate::rational::to_f64;

/// Relation generated from an entropy oracle: for equal compositions,
/// `(λ₁X₁, …) ≺ (λ'₁Y₁, …)` iff `Σ λᵢ σ(Xᵢ) ≤ Σ λ'ⱼ σ(Yⱼ)`.
///
/// Comparisons use a relative tolerance so that rearranged sums of equal value
/// (for example `(½X, ½X)` against `X`) stay equivalent.
#[derive(Debug, Clone)]
pub struct OracleRelation {
    registry: Arc<SpaceRegistry>,
    values: Vec<Vec<f64>>,
    rel_tol: f64,
}

impl OracleRelation {
    pub const DEFAULT_REL_TOL: f64 = 1e-12;

    pub fn new(registry: Arc<SpaceRegistry>, values: Vec<Vec<f64>>) -> Result<Self, OrderError> {
        if values.len() != registry.len() {
            return Err(OrderError::Document(format!(
                "oracle has values for {} spaces, registry declares {}",
                values.len(),
                registry.len()
            )));
        }
        for (space, vals) in registry.space_ids().zip(&values) {
            let decl = registry.decl(space);
            if vals.len() != decl.states.len() {
                return Err(OrderError::OracleShape {
                    space: decl.id.clone(),
                    expected: decl.states.len(),
                    found: vals.len(),
                });
            }
            if let Some(j) = vals.iter().position(|v| !v.is_finite()) {
                return Err(OrderError::NonFiniteOracle(
                    registry.label(StateRef { space, state: j }),
                ));
            }
        }
        Ok(Self {
            registry,
            values,
            rel_tol: Self::DEFAULT_REL_TOL,
        })
    }

    pub fn from_fn(
        registry: Arc<SpaceRegistry>,
        sigma: impl Fn(StateRef) -> f64,
    ) -> Result<Self, OrderError> {
        let values = registry
            .space_ids()
            .map(|s| registry.states_of(s).map(&sigma).collect())
            .collect();
        Self::new(registry, values)
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn registry_arc(&self) -> &Arc<SpaceRegistry> {
        &self.registry
    }

    pub fn value(&self, s: StateRef) -> f64 {
        self.values[s.space.0][s.state]
    }

    /// `Σ λᵢ σ(Xᵢ)`.
    pub fn entropy_of(&self, c: &CompoundState) -> f64 {
        c.parts()
            .iter()
            .map(|p| to_f64(&p.lambda) * self.value(p.state_ref()))
            .sum()
    }

    fn leq(&self, a: f64, b: f64) -> bool {
        a <= b + self.rel_tol * a.abs().max(b.abs()).max(1.0)
    }

    /// Writes the oracle relation out as an explicit closed relation over the
    /// bounded universe.
    pub fn materialize(
        &self,
        grid: LambdaGrid,
        opts: &ClosureOptions,
    ) -> Result<AccessibilityRelation, OrderError> {
        let mut c = empty_closure(&self.registry, &grid, opts)?;
        let entropy: Vec<f64> = c.universe.iter().map(|u| self.entropy_of(u)).collect();
        let mut count = 0usize;
        for (g, members) in c.groups.iter().enumerate() {
            for (la, &a) in members.iter().enumerate() {
                let mut row = FixedBitSet::with_capacity(members.len());
                for (lb, &b) in members.iter().enumerate() {
                    if self.leq(entropy[a], entropy[b]) {
                        row.insert(lb);
                    }
                }
                count += row.count_ones(..);
                if count > opts.fact_budget {
                    return Err(OrderError::FactBudgetExceeded(opts.fact_budget));
                }
                c.rows[g][la] = row;
            }
        }
        c.fact_count = count;
        Ok(AccessibilityRelation::from_closure(
            self.registry.clone(),
            grid,
            c,
        ))
    }
}

impl Accessibility for OracleRelation {
    fn registry(&self) -> &SpaceRegistry {
        &self.registry
    }

    fn accessible(&self, x: &CompoundState, y: &CompoundState) -> Result<bool, OrderError> {
        if x.composition(&self.registry) != y.composition(&self.registry) {
            return Ok(false);
        }
        Ok(self.leq(self.entropy_of(x), self.entropy_of(y)))
    }
}
