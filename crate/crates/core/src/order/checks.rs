//! Direct scanners for the order axioms over a relation's universe.
//!
//! Scanners read raw fact membership, so they also work on unclosed relations
//! (where they are expected to find violations).

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::compound::CompoundState;
use super::relation::{classify, Accessibility, AccessibilityRelation, Classification};
use super::space::{SpaceIx, StateRef};
use super::OrderError;
use crate::rational::Rational;

const MAX_WITNESSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum AxiomName {
    #[serde(rename = "A1")]
    Reflexivity,
    #[serde(rename = "A2")]
    Transitivity,
    #[serde(rename = "A3")]
    Consistency,
    #[serde(rename = "A4")]
    ScalingInvariance,
    #[serde(rename = "A5")]
    SplittingRecombination,
    #[serde(rename = "A6")]
    Stability,
    #[serde(rename = "cancellation")]
    Cancellation,
}

impl AxiomName {
    pub fn code(self) -> &'static str {
        match self {
            AxiomName::Reflexivity => "A1",
            AxiomName::Transitivity => "A2",
            AxiomName::Consistency => "A3",
            AxiomName::ScalingInvariance => "A4",
            AxiomName::SplittingRecombination => "A5",
            AxiomName::Stability => "A6",
            AxiomName::Cancellation => "cancellation",
        }
    }
}

/// Premises that hold together with the conclusion that is missing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub premises: Vec<String>,
    pub missing: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomScan {
    pub axiom: AxiomName,
    pub checked: usize,
    pub violations: usize,
    pub witnesses: Vec<Witness>,
}

impl AxiomScan {
    fn new(axiom: AxiomName) -> Self {
        Self {
            axiom,
            checked: 0,
            violations: 0,
            witnesses: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, premises: Vec<String>, missing: String) {
        self.violations += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(Witness { premises, missing });
        }
    }
}

struct Ctx<'a> {
    rel: &'a AccessibilityRelation,
    universe: Vec<CompoundState>,
    index: HashMap<CompoundState, usize>,
    succ: Vec<Vec<usize>>,
}

impl<'a> Ctx<'a> {
    fn new(rel: &'a AccessibilityRelation) -> Self {
        let universe = rel.universe();
        let index: HashMap<CompoundState, usize> = universe
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let mut succ = vec![Vec::new(); universe.len()];
        for (x, y) in rel.facts() {
            if let (Some(&a), Some(&b)) = (index.get(&x), index.get(&y)) {
                succ[a].push(b);
            }
        }
        for s in &mut succ {
            s.sort_unstable();
        }
        Self {
            rel,
            universe,
            index,
            succ,
        }
    }

    fn holds(&self, a: usize, b: usize) -> bool {
        self.succ[a].binary_search(&b).is_ok()
    }

    fn fact(&self, a: usize, b: usize) -> String {
        self.pair(&self.universe[a], &self.universe[b])
    }

    fn pair(&self, x: &CompoundState, y: &CompoundState) -> String {
        let reg = &self.rel.registry;
        format!("{} ≺ {}", x.display(reg), y.display(reg))
    }

    fn facts(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(a, s)| s.iter().map(move |&b| (a, b)))
    }
}

/// A1: `X ≺ X` for every compound in the universe.
pub fn check_reflexivity(rel: &AccessibilityRelation) -> AxiomScan {
    scan_reflexivity(&Ctx::new(rel))
}

fn scan_reflexivity(ctx: &Ctx) -> AxiomScan {
    let mut scan = AxiomScan::new(AxiomName::Reflexivity);
    for a in 0..ctx.universe.len() {
        scan.checked += 1;
        if !ctx.holds(a, a) {
            scan.record(vec![], ctx.fact(a, a));
        }
    }
    scan
}

/// A2: `X ≺ Y, Y ≺ Z ⟹ X ≺ Z`.
pub fn check_transitivity(rel: &AccessibilityRelation) -> AxiomScan {
    scan_transitivity(&Ctx::new(rel))
}

fn scan_transitivity(ctx: &Ctx) -> AxiomScan {
    let mut scan = AxiomScan::new(AxiomName::Transitivity);
    for (a, b) in ctx.facts() {
        for &c in &ctx.succ[b] {
            scan.checked += 1;
            if !ctx.holds(a, c) {
                scan.record(vec![ctx.fact(a, b), ctx.fact(b, c)], ctx.fact(a, c));
            }
        }
    }
    scan
}

/// A3: `X ≺ X', Y ≺ Y' ⟹ (X, Y) ≺ (X', Y')` whenever both joins are in the universe.
pub fn check_consistency(rel: &AccessibilityRelation) -> AxiomScan {
    scan_consistency(&Ctx::new(rel))
}

fn scan_consistency(ctx: &Ctx) -> AxiomScan {
    let mut scan = AxiomScan::new(AxiomName::Consistency);
    let max = ctx
        .universe
        .iter()
        .map(CompoundState::len)
        .max()
        .unwrap_or(0);
    // Bucket facts by (|X|, |X'|) so only pairs whose joins can fit are visited.
    let mut by_size: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (a, b) in ctx.facts() {
        let key = (ctx.universe[a].len(), ctx.universe[b].len());
        if key.0 < max && key.1 < max {
            by_size.entry(key).or_default().push((a, b));
        }
    }
    let mut join_cache: HashMap<(usize, usize), Option<usize>> = HashMap::new();
    let mut join = |i: usize, j: usize| -> Option<usize> {
        let key = if i <= j { (i, j) } else { (j, i) };
        *join_cache.entry(key).or_insert_with(|| {
            ctx.index
                .get(&ctx.universe[i].join(&ctx.universe[j]))
                .copied()
        })
    };
    let buckets: Vec<_> = by_size.iter().collect();
    for (k1, f1) in &buckets {
        for (k2, f2) in &buckets {
            if k1.0 + k2.0 > max || k1.1 + k2.1 > max {
                continue;
            }
            for &(x, x2) in f1.iter() {
                for &(y, y2) in f2.iter() {
                    let (Some(l), Some(r)) = (join(x, y), join(x2, y2)) else {
                        continue;
                    };
                    scan.checked += 1;
                    if !ctx.holds(l, r) {
                        scan.record(vec![ctx.fact(x, x2), ctx.fact(y, y2)], ctx.fact(l, r));
                    }
                }
            }
        }
    }
    scan
}

/// A4: `X ≺ Y ⟹ μX ≺ μY` for every grid ratio μ keeping both sides on the grid.
pub fn check_scaling(rel: &AccessibilityRelation) -> AxiomScan {
    scan_scaling(&Ctx::new(rel))
}

fn scan_scaling(ctx: &Ctx) -> AxiomScan {
    let mut scan = AxiomScan::new(AxiomName::ScalingInvariance);
    let ratios = ctx.rel.grid.ratios();
    for (a, b) in ctx.facts() {
        for &mu in &ratios {
            let (Ok(x), Ok(y)) = (ctx.universe[a].scaled(mu), ctx.universe[b].scaled(mu)) else {
                continue;
            };
            let (Some(&sa), Some(&sb)) = (ctx.index.get(&x), ctx.index.get(&y)) else {
                continue;
            };
            scan.checked += 1;
            if !ctx.holds(sa, sb) {
                scan.record(vec![ctx.fact(a, b)], ctx.fact(sa, sb));
            }
        }
    }
    scan
}

/// A5: `X ∼ ((1−λ)X, λX)`, applied to each part of each compound.
pub fn check_splitting(rel: &AccessibilityRelation) -> AxiomScan {
    scan_splitting(&Ctx::new(rel))
}

fn scan_splitting(ctx: &Ctx) -> AxiomScan {
    let mut scan = AxiomScan::new(AxiomName::SplittingRecombination);
    let grid = &ctx.rel.grid;
    for (i, comp) in ctx.universe.iter().enumerate() {
        for (k, p) in comp.parts().iter().enumerate() {
            for (a, b) in grid.splits(&p.lambda) {
                let mut parts = comp.parts().to_vec();
                parts.remove(k);
                let rest = CompoundState::from_sorted_parts(parts);
                let split = rest
                    .with_part(super::Part { lambda: a, ..*p })
                    .with_part(super::Part { lambda: b, ..*p });
                let Some(&j) = ctx.index.get(&split) else {
                    continue;
                };
                scan.checked += 1;
                if !ctx.holds(i, j) {
                    scan.record(vec![], ctx.fact(i, j));
                }
                if !ctx.holds(j, i) {
                    scan.record(vec![], ctx.fact(j, i));
                }
            }
        }
    }
    scan
}

/// Outcome of the cancellation-law scan `(X, Z) ≺ (Y, Z) ⟹ X ≺ Y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum CancellationResult {
    Holds { triples_checked: usize },
    Fails { x: String, y: String, z: String },
}

impl CancellationResult {
    pub fn holds(&self) -> bool {
        matches!(self, CancellationResult::Holds { .. })
    }
}

pub fn check_cancellation(rel: &AccessibilityRelation) -> CancellationResult {
    let scan = scan_cancellation(&Ctx::new(rel));
    match scan.1 {
        Some((x, y, z)) => CancellationResult::Fails { x, y, z },
        None => CancellationResult::Holds {
            triples_checked: scan.0.checked,
        },
    }
}

fn scan_cancellation(ctx: &Ctx) -> (AxiomScan, Option<(String, String, String)>) {
    let mut scan = AxiomScan::new(AxiomName::Cancellation);
    let reg = &ctx.rel.registry;
    let mut first = None;
    for (a, b) in ctx.facts() {
        let lhs = &ctx.universe[a];
        let rhs = &ctx.universe[b];
        if lhs.len() < 2 || rhs.len() < 2 {
            continue;
        }
        for z in lhs.proper_submultisets() {
            let Some(y) = rhs.remove(&z) else {
                continue;
            };
            let x = lhs.remove(&z).expect("z is a proper sub-multiset of lhs");
            scan.checked += 1;
            let ok = match (ctx.index.get(&x), ctx.index.get(&y)) {
                (Some(&i), Some(&j)) => ctx.holds(i, j),
                _ => false,
            };
            if !ok {
                scan.record(vec![ctx.fact(a, b)], ctx.pair(&x, &y));
                if first.is_none() {
                    first = Some((
                        x.display(reg).to_string(),
                        y.display(reg).to_string(),
                        z.display(reg).to_string(),
                    ));
                }
            }
        }
    }
    (scan, first)
}

/// Runs A1–A5 and the cancellation law in one pass over a shared index.
pub fn scan_axioms(rel: &AccessibilityRelation) -> Vec<AxiomScan> {
    let ctx = Ctx::new(rel);
    vec![
        scan_reflexivity(&ctx),
        scan_transitivity(&ctx),
        scan_consistency(&ctx),
        scan_scaling(&ctx),
        scan_splitting(&ctx),
        scan_cancellation(&ctx).0,
    ]
}

/// Result of checking A6 on the declared ε-families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilityReport {
    pub families: usize,
    /// Families whose premises could not all be evaluated inside the universe.
    pub not_evaluable: usize,
    /// Families where every premise holds but the limit fact `X ≺ Y` is absent.
    pub flagged: Vec<String>,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        self.flagged.is_empty()
    }
}

pub fn check_stability(rel: &AccessibilityRelation) -> StabilityReport {
    let reg = &rel.registry;
    let mut report = StabilityReport {
        families: rel.families.len(),
        not_evaluable: 0,
        flagged: Vec::new(),
    };
    let universe: std::collections::HashSet<CompoundState> = rel.universe().into_iter().collect();
    'family: for fam in &rel.families {
        for &eps in &fam.epsilons {
            let (Ok(ez0), Ok(ez1)) = (fam.z0.scaled(eps), fam.z1.scaled(eps)) else {
                report.not_evaluable += 1;
                continue 'family;
            };
            let lhs = fam.x.join(&ez0);
            let rhs = fam.y.join(&ez1);
            if !universe.contains(&lhs) || !universe.contains(&rhs) {
                report.not_evaluable += 1;
                continue 'family;
            }
            if !rel.contains(&lhs, &rhs) {
                continue 'family;
            }
        }
        if !rel.contains(&fam.x, &fam.y) {
            report
                .flagged
                .push(format!("{} ≺ {}", fam.x.display(reg), fam.y.display(reg)));
        }
    }
    report
}

/// Which compound states the comparison hypothesis is checked on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChScope {
    /// Restrict to compounds whose parts all come from these spaces (`None` = all).
    pub spaces: Option<Vec<SpaceIx>>,
    /// Largest number of parts considered; single spaces use 1.
    pub max_parts: usize,
}

impl ChScope {
    pub fn space(space: SpaceIx) -> Self {
        Self {
            spaces: Some(vec![space]),
            max_parts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ChResult {
    Holds {
        pairs_checked: usize,
        max_parts: usize,
    },
    Fails {
        x: String,
        y: String,
    },
}

impl ChResult {
    pub fn holds(&self) -> bool {
        matches!(self, ChResult::Holds { .. })
    }
}

/// Scans every pair of compounds that live in the same (multiple scaled
/// product) state space and reports the first incomparable pair.
pub fn check_comparison_hypothesis(rel: &AccessibilityRelation, scope: &ChScope) -> ChResult {
    let universe: Vec<CompoundState> = rel
        .universe()
        .into_iter()
        .filter(|c| c.len() <= scope.max_parts)
        .filter(|c| match &scope.spaces {
            Some(sp) => c.parts().iter().all(|p| sp.contains(&p.space)),
            None => true,
        })
        .collect();
    let mut by_space: BTreeMap<Vec<(SpaceIx, Rational)>, Vec<&CompoundState>> = BTreeMap::new();
    for c in &universe {
        by_space.entry(c.signature()).or_default().push(c);
    }
    let reg = &rel.registry;
    let mut checked = 0;
    for members in by_space.values() {
        for (i, x) in members.iter().enumerate() {
            for y in &members[i + 1..] {
                checked += 1;
                if !rel.contains(x, y) && !rel.contains(y, x) {
                    return ChResult::Fails {
                        x: x.display(reg).to_string(),
                        y: y.display(reg).to_string(),
                    };
                }
            }
        }
    }
    ChResult::Holds {
        pairs_checked: checked,
        max_parts: scope.max_parts,
    }
}

/// Comparison hypothesis over an explicit list of compounds, for any backend.
pub fn check_comparison_hypothesis_on<R: Accessibility + ?Sized>(
    rel: &R,
    compounds: &[CompoundState],
) -> Result<ChResult, OrderError> {
    let mut by_space: BTreeMap<Vec<(SpaceIx, Rational)>, Vec<&CompoundState>> = BTreeMap::new();
    for c in compounds {
        by_space.entry(c.signature()).or_default().push(c);
    }
    let reg = rel.registry();
    let mut checked = 0;
    let max_parts = compounds.iter().map(CompoundState::len).max().unwrap_or(0);
    for members in by_space.values() {
        for (i, x) in members.iter().enumerate() {
            for y in &members[i + 1..] {
                checked += 1;
                if !classify(rel, x, y)?.is_comparable() {
                    return Ok(ChResult::Fails {
                        x: x.display(reg).to_string(),
                        y: y.display(reg).to_string(),
                    });
                }
            }
        }
    }
    Ok(ChResult::Holds {
        pairs_checked: checked,
        max_parts,
    })
}

/// Equivalence classes of unit-scale states of one space. Each class is listed
/// in declared order, so its first element is the canonical representative;
/// classes are ordered by representative.
pub fn adiabats<R: Accessibility + ?Sized>(
    rel: &R,
    space: SpaceIx,
) -> Result<Vec<Vec<StateRef>>, OrderError> {
    let reg = rel.registry();
    if space.0 >= reg.len() {
        return Err(OrderError::UnknownSpace(format!("#{}", space.0)));
    }
    let states: Vec<StateRef> = reg.states_of(space).collect();
    let mut class_of: Vec<Option<usize>> = vec![None; states.len()];
    let mut classes: Vec<Vec<StateRef>> = Vec::new();
    for i in 0..states.len() {
        if class_of[i].is_some() {
            continue;
        }
        let id = classes.len();
        class_of[i] = Some(id);
        let mut class = vec![states[i]];
        let xi = CompoundState::single(states[i]);
        for j in i + 1..states.len() {
            if class_of[j].is_some() {
                continue;
            }
            let xj = CompoundState::single(states[j]);
            if classify(rel, &xi, &xj)? == Classification::Equivalent {
                class_of[j] = Some(id);
                class.push(states[j]);
            }
        }
        classes.push(class);
    }
    Ok(classes)
}
