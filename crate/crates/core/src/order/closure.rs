use std::collections::{BTreeMap, HashMap, VecDeque};

use fixedbitset::FixedBitSet;

use super::compound::{CompoundState, Part};
use super::relation::LambdaGrid;
use super::space::SpaceRegistry;
use super::OrderError;
use crate::rational::Rational;

/// Bounds for the closure universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosureOptions {
    /// Largest number of parts in a generated compound state.
    pub max_parts: usize,
    /// Hard cap on the number of stored facts.
    pub fact_budget: usize,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        Self {
            max_parts: 3,
            fact_budget: 1_000_000,
        }
    }
}

/// Closed fact set over a finite universe. Facts only relate compounds of equal
/// total composition, so the matrix is stored block-wise per composition group.
#[derive(Debug, Clone)]
pub(crate) struct Closure {
    pub max_parts: usize,
    pub universe: Vec<CompoundState>,
    pub index: HashMap<CompoundState, usize>,
    /// `(group, position inside group)` for each universe index.
    pub slot: Vec<(usize, usize)>,
    pub groups: Vec<Vec<usize>>,
    /// `rows[g][i]` = successors of the i-th member of group g.
    pub rows: Vec<Vec<FixedBitSet>>,
    pub fact_count: usize,
}

impl Closure {
    pub fn contains(&self, x: &CompoundState, y: &CompoundState) -> bool {
        match (self.index.get(x), self.index.get(y)) {
            (Some(&a), Some(&b)) => self.contains_ix(a, b),
            _ => false,
        }
    }

    pub fn contains_ix(&self, a: usize, b: usize) -> bool {
        let (ga, la) = self.slot[a];
        let (gb, lb) = self.slot[b];
        ga == gb && self.rows[ga][la].contains(lb)
    }

    /// Successors of `a` as universe indices.
    pub fn successors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        let (g, l) = self.slot[a];
        self.rows[g][l].ones().map(move |j| self.groups[g][j])
    }

    pub fn facts(&self) -> Vec<(CompoundState, CompoundState)> {
        let mut out = Vec::with_capacity(self.fact_count);
        for a in 0..self.universe.len() {
            for b in self.successors(a) {
                out.push((self.universe[a].clone(), self.universe[b].clone()));
            }
        }
        out.sort();
        out
    }
}

/// Every multiset of at most `max_parts` atoms `λX` with λ on the grid, in
/// canonical order.
pub(crate) fn enumerate_universe(
    registry: &SpaceRegistry,
    grid: &LambdaGrid,
    max_parts: usize,
    budget: usize,
) -> Result<Vec<CompoundState>, OrderError> {
    let mut atoms: Vec<Part> = Vec::new();
    for s in registry.all_states() {
        for &lambda in grid.values() {
            atoms.push(Part {
                space: s.space,
                state: s.state,
                lambda,
            });
        }
    }
    atoms.sort();

    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    fn rec(
        atoms: &[Part],
        start: usize,
        remaining: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<CompoundState>,
        budget: usize,
    ) -> Result<(), OrderError> {
        if !current.is_empty() {
            if out.len() >= budget {
                return Err(OrderError::FactBudgetExceeded(budget));
            }
            out.push(CompoundState::from_sorted_parts(
                current.iter().map(|&i| atoms[i]).collect(),
            ));
        }
        if remaining == 0 {
            return Ok(());
        }
        for i in start..atoms.len() {
            current.push(i);
            rec(atoms, i, remaining - 1, current, out, budget)?;
            current.pop();
        }
        Ok(())
    }
    rec(&atoms, 0, max_parts, &mut current, &mut out, budget)?;
    out.sort();
    Ok(out)
}

/// Universe plus composition grouping, with empty fact matrices.
pub(crate) fn empty_closure(
    registry: &SpaceRegistry,
    grid: &LambdaGrid,
    opts: &ClosureOptions,
) -> Result<Closure, OrderError> {
    if opts.max_parts == 0 {
        return Err(OrderError::ZeroMaxParts);
    }
    let universe = enumerate_universe(registry, grid, opts.max_parts, opts.fact_budget)?;
    let index: HashMap<CompoundState, usize> = universe
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();

    let mut by_composition: BTreeMap<Vec<Rational>, Vec<usize>> = BTreeMap::new();
    for (i, c) in universe.iter().enumerate() {
        by_composition
            .entry(c.composition(registry))
            .or_default()
            .push(i);
    }
    let groups: Vec<Vec<usize>> = by_composition.into_values().collect();
    let mut slot = vec![(0, 0); universe.len()];
    for (g, members) in groups.iter().enumerate() {
        for (l, &i) in members.iter().enumerate() {
            slot[i] = (g, l);
        }
    }
    let rows = groups
        .iter()
        .map(|m| {
            (0..m.len())
                .map(|l| {
                    let mut row = FixedBitSet::with_capacity(m.len());
                    row.insert(l);
                    row
                })
                .collect()
        })
        .collect();
    let fact_count = universe.len();
    Ok(Closure {
        max_parts: opts.max_parts,
        universe,
        index,
        slot,
        groups,
        rows,
        fact_count,
    })
}

/// Index-level rewriting tables for the closure rules.
struct Rules {
    /// `scale[i][r]`: universe index of `ratio_r · C_i`, if on the grid.
    scale: Vec<Vec<Option<usize>>>,
    /// `extend[i][a]`: universe index of `(C_i, atom_a)`, if within max_parts.
    extend: Vec<Vec<Option<usize>>>,
    /// One-step splits `C_i ∼ C_j` where one part `λX` becomes `(aX, bX)`.
    splits: Vec<Vec<usize>>,
}

fn build_rules(c: &Closure, registry: &SpaceRegistry, grid: &LambdaGrid) -> Rules {
    let ratios = grid.ratios();
    let mut atoms = Vec::new();
    for s in registry.all_states() {
        for &lambda in grid.values() {
            atoms.push(Part {
                space: s.space,
                state: s.state,
                lambda,
            });
        }
    }
    let n = c.universe.len();
    let mut scale = Vec::with_capacity(n);
    let mut extend = Vec::with_capacity(n);
    let mut splits = Vec::with_capacity(n);
    for comp in &c.universe {
        scale.push(
            ratios
                .iter()
                .map(|&r| {
                    if comp.parts().iter().all(|p| grid.contains(&(p.lambda * r))) {
                        comp.scaled(r).ok().and_then(|s| c.index.get(&s).copied())
                    } else {
                        None
                    }
                })
                .collect(),
        );
        extend.push(if comp.len() < c.max_parts {
            atoms
                .iter()
                .map(|&a| c.index.get(&comp.with_part(a)).copied())
                .collect()
        } else {
            Vec::new()
        });
        let mut sp = Vec::new();
        if comp.len() < c.max_parts {
            for (k, p) in comp.parts().iter().enumerate() {
                if k > 0 && comp.parts()[k - 1] == *p {
                    continue;
                }
                for (a, b) in grid.splits(&p.lambda) {
                    let mut parts: Vec<Part> = comp.parts().to_vec();
                    parts.remove(k);
                    let rest = CompoundState::from_sorted_parts(parts);
                    let split = rest
                        .with_part(Part { lambda: a, ..*p })
                        .with_part(Part { lambda: b, ..*p });
                    if let Some(&j) = c.index.get(&split) {
                        sp.push(j);
                    }
                }
            }
        }
        splits.push(sp);
    }
    Rules {
        scale,
        extend,
        splits,
    }
}

struct Engine<'a> {
    c: &'a mut Closure,
    queue: VecDeque<(usize, usize)>,
    budget: usize,
}

impl Engine<'_> {
    /// Inserts `a ≺ b` and restores transitivity: every predecessor of `a`
    /// inherits the successors of `b`. Newly set pairs are queued.
    fn add(&mut self, a: usize, b: usize) -> Result<(), OrderError> {
        let (g, la) = self.c.slot[a];
        let (gb, lb) = self.c.slot[b];
        if g != gb {
            // Only reachable from inconsistent rule tables; compositions are
            // preserved by every rule.
            debug_assert!(false, "fact across composition groups");
            return Ok(());
        }
        if self.c.rows[g][la].contains(lb) {
            return Ok(());
        }
        let succ = self.c.rows[g][lb].clone();
        let members = self.c.groups[g].len();
        for p in 0..members {
            if !self.c.rows[g][p].contains(la) {
                continue;
            }
            let row = &mut self.c.rows[g][p];
            let fresh: Vec<usize> = succ.difference(row).collect();
            if fresh.is_empty() {
                continue;
            }
            row.union_with(&succ);
            self.c.fact_count += fresh.len();
            if self.c.fact_count > self.budget {
                return Err(OrderError::FactBudgetExceeded(self.budget));
            }
            let from = self.c.groups[g][p];
            for q in fresh {
                self.queue.push_back((from, self.c.groups[g][q]));
            }
        }
        Ok(())
    }
}

pub(crate) fn close(
    registry: &SpaceRegistry,
    grid: &LambdaGrid,
    seeds: &[(CompoundState, CompoundState)],
    opts: &ClosureOptions,
) -> Result<Closure, OrderError> {
    let mut c = empty_closure(registry, grid, opts)?;
    for (x, y) in seeds {
        for s in [x, y] {
            if s.len() > opts.max_parts {
                return Err(OrderError::TooManyParts {
                    compound: s.display(registry).to_string(),
                    parts: s.len(),
                    max_parts: opts.max_parts,
                });
            }
        }
    }
    let rules = build_rules(&c, registry, grid);
    let seed_ix: Vec<(usize, usize)> = seeds
        .iter()
        .map(|(x, y)| (c.index[x], c.index[y]))
        .collect();

    let mut engine = Engine {
        c: &mut c,
        queue: VecDeque::new(),
        budget: opts.fact_budget,
    };
    if engine.c.fact_count > engine.budget {
        return Err(OrderError::FactBudgetExceeded(engine.budget));
    }
    for (a, b) in seed_ix {
        engine.add(a, b)?;
    }
    for (i, sp) in rules.splits.iter().enumerate() {
        for &j in sp {
            engine.add(i, j)?;
            engine.add(j, i)?;
        }
    }
    while let Some((a, b)) = engine.queue.pop_front() {
        for (sa, sb) in rules.scale[a].iter().zip(&rules.scale[b]) {
            if let (Some(x), Some(y)) = (sa, sb) {
                engine.add(*x, *y)?;
            }
        }
        if !rules.extend[a].is_empty() && !rules.extend[b].is_empty() {
            for (ea, eb) in rules.extend[a].iter().zip(&rules.extend[b]) {
                if let (Some(x), Some(y)) = (ea, eb) {
                    engine.add(*x, *y)?;
                }
            }
        }
    }
    Ok(c)
}
