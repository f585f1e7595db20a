//! The canonical entropy `S(X) = sup{λ : ((1−λ)X₀, λX₁) ≺ X}`, checks of the
//! entropy principle against a relation, and multiplicative calibration
//! between state spaces.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::order::{
    classify, normalize_pair, Accessibility, AccessibilityRelation, Classification, CompoundState,
    OrderError, SpaceIx, StateRef,
};
use crate::rational::{format_rational, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntropyError {
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error("no reference pair: {x0} ≺≺ {x1} does not hold")]
    NoReferencePair { x0: String, x1: String },
    #[error("comparison hypothesis fails between {compound} and {state}")]
    NotComparable { compound: String, state: String },
    #[error("sup for {state} lies outside the scanned range [{lo}, {hi}]")]
    RangeExhausted {
        state: String,
        lo: String,
        hi: String,
    },
    #[error("resolution must be positive and the range non-empty")]
    BadRange,
    #[error("table for space `{0}` is constant; affine fit skipped")]
    DegenerateTable(String),
    #[error("tables cover different states")]
    StateMismatch,
    #[error("no entropy table for space `{0}`")]
    MissingTable(String),
    #[error("degenerate calibrator: {0}")]
    DegenerateCalibrator(String),
    #[error("no calibrators between `{0}` and `{1}` in the declared universe")]
    NoCalibrators(String, String),
}

/// How the supremum over λ is located.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SupSearch {
    /// Largest `λ = k·resolution` in `[lo, hi]` with `((1−λ)X₀, λX₁) ≺ X`.
    Grid {
        resolution: Rational,
        lo: Rational,
        hi: Rational,
    },
    /// Dyadic bisection on `[lo, hi]` down to `2^-depth`.
    Bisection {
        depth: u32,
        lo: Rational,
        hi: Rational,
    },
}

impl SupSearch {
    pub fn grid(resolution: Rational) -> Self {
        SupSearch::Grid {
            resolution,
            lo: Rational::from_integer(-8),
            hi: Rational::from_integer(8),
        }
    }

    pub fn bisection() -> Self {
        SupSearch::Bisection {
            depth: 20,
            lo: Rational::from_integer(-8),
            hi: Rational::from_integer(8),
        }
    }

    pub fn resolution(&self) -> Rational {
        match self {
            SupSearch::Grid { resolution, .. } => *resolution,
            SupSearch::Bisection { depth, .. } => Rational::new(1, 1i64 << depth),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructOptions {
    pub search: SupSearch,
    /// Return an all-zero table instead of failing when `X₀ ≺≺ X₁` does not hold.
    pub allow_constant: bool,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        Self {
            search: SupSearch::grid(Rational::new(1, 128)),
            allow_constant: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub state: String,
    #[serde(rename = "S")]
    pub s: f64,
    /// Larger grid λ exist in the range but lie outside the relation's
    /// universe, so the value is the sup over the evaluable part only.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub universe_capped: bool,
}

/// Entropy values of one state space, normalized so `S(X₀) = 0`, `S(X₁) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTable {
    pub space: String,
    pub ref_low: String,
    pub ref_high: String,
    pub resolution: f64,
    /// Set when no reference pair exists and the caller accepted a constant table.
    #[serde(default)]
    pub constant: bool,
    pub values: Vec<TableEntry>,
}

impl EntropyTable {
    pub fn get(&self, state: &str) -> Option<f64> {
        self.values.iter().find(|e| e.state == state).map(|e| e.s)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut t = self.clone();
        for e in &mut t.values {
            e.s *= factor;
        }
        t
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `((1−λ)X₀, λX₁) ≺ X` with the sign convention applied.
fn reference_pair(
    x0: StateRef,
    x1: StateRef,
    x: StateRef,
    lambda: Rational,
) -> Result<(CompoundState, CompoundState), OrderError> {
    normalize_pair(
        &[(Rational::one() - lambda, x0), (lambda, x1)],
        &[(Rational::one(), x)],
    )
}

/// Evaluates `((1−λ)X₀, λX₁) ≺ X`. `None` when the compounds lie outside the
/// relation's universe.
fn below<R: Accessibility + ?Sized>(
    rel: &R,
    x0: StateRef,
    x1: StateRef,
    x: StateRef,
    lambda: Rational,
) -> Result<Option<bool>, EntropyError> {
    let (l, r) = reference_pair(x0, x1, x, lambda)?;
    match rel.accessible(&l, &r) {
        Ok(b) => Ok(Some(b)),
        Err(OrderError::NotInUniverse(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// The reverse comparison `X ≺ ((1−λ)X₀, λX₁)`, used to certify comparability
/// just above the supremum.
fn above<R: Accessibility + ?Sized>(
    rel: &R,
    x0: StateRef,
    x1: StateRef,
    x: StateRef,
    lambda: Rational,
) -> Result<Option<bool>, EntropyError> {
    let (l, r) = reference_pair(x0, x1, x, lambda)?;
    match rel.accessible(&r, &l) {
        Ok(b) => Ok(Some(b)),
        Err(OrderError::NotInUniverse(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn entropy_of<R: Accessibility + ?Sized>(
    rel: &R,
    x0: StateRef,
    x1: StateRef,
    x: StateRef,
    search: &SupSearch,
) -> Result<(Rational, bool), EntropyError> {
    let reg = rel.registry();
    let not_comparable = |lambda: Rational| -> EntropyError {
        let (l, _) = reference_pair(x0, x1, x, lambda).expect("already normalized once");
        EntropyError::NotComparable {
            compound: l.display(reg).to_string(),
            state: reg.label(x),
        }
    };
    match search {
        SupSearch::Grid { resolution, lo, hi } => {
            if *resolution <= Rational::zero() || lo > hi {
                return Err(EntropyError::BadRange);
            }
            let k_lo = (lo / resolution).ceil().to_integer();
            let k_hi = (hi / resolution).floor().to_integer();
            let exhausted = || EntropyError::RangeExhausted {
                state: reg.label(x),
                lo: format_rational(lo),
                hi: format_rational(hi),
            };
            // Highest evaluable grid point above the current candidate; the
            // comparison there must go the other way (comparison hypothesis).
            let mut next_up: Option<Rational> = None;
            for k in (k_lo..=k_hi).rev() {
                let lambda = Rational::from_integer(k) * resolution;
                match below(rel, x0, x1, x, lambda)? {
                    None => continue,
                    Some(true) => {
                        if k == k_hi {
                            return Err(exhausted());
                        }
                        let Some(up) = next_up else {
                            return Ok((lambda, true));
                        };
                        if above(rel, x0, x1, x, up)? != Some(true) {
                            return Err(not_comparable(up));
                        }
                        return Ok((lambda, false));
                    }
                    Some(false) => next_up = Some(lambda),
                }
            }
            Err(exhausted())
        }
        SupSearch::Bisection { depth, lo, hi } => {
            if lo >= hi {
                return Err(EntropyError::BadRange);
            }
            let exhausted = || EntropyError::RangeExhausted {
                state: reg.label(x),
                lo: format_rational(lo),
                hi: format_rational(hi),
            };
            let eval = |lambda: Rational| -> Result<bool, EntropyError> {
                match below(rel, x0, x1, x, lambda)? {
                    Some(b) => Ok(b),
                    None => Err(EntropyError::Order(OrderError::NotInUniverse(
                        reference_pair(x0, x1, x, lambda)?
                            .0
                            .display(reg)
                            .to_string(),
                    ))),
                }
            };
            if !eval(*lo)? || eval(*hi)? {
                return Err(exhausted());
            }
            let step = Rational::new(1, 1i64 << depth);
            let (mut a, mut b) = (*lo, *hi);
            while b - a > step {
                let mid = (a + b) / Rational::from_integer(2);
                if eval(mid)? {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            if above(rel, x0, x1, x, b)? != Some(true) {
                return Err(not_comparable(b));
            }
            Ok((a, false))
        }
    }
}

/// Builds the entropy table of `space` from the reference states `x0 ≺≺ x1`.
///
/// Evaluation is independent per state and runs in parallel; results do not
/// depend on scheduling.
pub fn construct_entropy<R: Accessibility + ?Sized>(
    rel: &R,
    space: SpaceIx,
    x0: StateRef,
    x1: StateRef,
    opts: &ConstructOptions,
) -> Result<EntropyTable, EntropyError> {
    use rayon::prelude::*;

    let reg = rel.registry();
    let resolution = to_f64(&opts.search.resolution());
    let c0 = CompoundState::single(x0);
    let c1 = CompoundState::single(x1);
    let states: Vec<StateRef> = reg.states_of(space).collect();
    let mut table = EntropyTable {
        space: reg.space_name(space).to_string(),
        ref_low: reg.state_name(x0).to_string(),
        ref_high: reg.state_name(x1).to_string(),
        resolution,
        constant: false,
        values: Vec::with_capacity(states.len()),
    };
    if classify(rel, &c0, &c1)? != Classification::StrictlyPrecedes {
        if !opts.allow_constant {
            return Err(EntropyError::NoReferencePair {
                x0: reg.label(x0),
                x1: reg.label(x1),
            });
        }
        table.constant = true;
        table.values = states
            .iter()
            .map(|&s| TableEntry {
                state: reg.state_name(s).to_string(),
                s: 0.0,
                universe_capped: false,
            })
            .collect();
        return Ok(table);
    }
    let values: Vec<(Rational, bool)> = states
        .par_iter()
        .map(|&x| entropy_of(rel, x0, x1, x, &opts.search))
        .collect::<Result<_, _>>()?;
    table.values = states
        .iter()
        .zip(values)
        .map(|(&s, (v, capped))| TableEntry {
            state: reg.state_name(s).to_string(),
            s: to_f64(&v),
            universe_capped: capped,
        })
        .collect();
    Ok(table)
}

/// One checked inequality `Σ λᵢ aᵢ S(Xᵢ) ≤ Σ λ'ⱼ aⱼ S(Yⱼ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipleCheck {
    pub lhs: String,
    pub rhs: String,
    pub classification: Classification,
    pub s_lhs: f64,
    pub s_rhs: f64,
    /// `S(rhs) − S(lhs)`; violations have a margin below `−tolerance`
    /// (or, for equivalent pairs, `|margin| > tolerance`).
    pub margin: f64,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipleReport {
    pub checked: usize,
    /// Facts whose per-space scales differ and therefore fall outside the check.
    pub skipped: usize,
    pub violations: Vec<PrincipleCheck>,
    pub max_violation: f64,
    pub checks: Vec<PrincipleCheck>,
}

impl PrincipleReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Weighted entropy of a compound; `a` defaults to 1 for spaces not listed.
pub fn compound_entropy(
    c: &CompoundState,
    registry: &crate::order::SpaceRegistry,
    tables: &BTreeMap<String, EntropyTable>,
    a: &BTreeMap<String, f64>,
) -> Result<f64, EntropyError> {
    let mut total = 0.0;
    for p in c.parts() {
        let space = registry.space_name(p.space);
        let table = tables
            .get(space)
            .ok_or_else(|| EntropyError::MissingTable(space.to_string()))?;
        let s = table
            .get(registry.state_name(p.state_ref()))
            .ok_or(EntropyError::StateMismatch)?;
        total += to_f64(&p.lambda) * a.get(space).copied().unwrap_or(1.0) * s;
    }
    Ok(total)
}

fn tolerance_for(
    c: &CompoundState,
    registry: &crate::order::SpaceRegistry,
    tables: &BTreeMap<String, EntropyTable>,
    a: &BTreeMap<String, f64>,
) -> f64 {
    c.parts()
        .iter()
        .map(|p| {
            let space = registry.space_name(p.space);
            let res = tables.get(space).map_or(0.0, |t| t.resolution);
            to_f64(&p.lambda) * a.get(space).copied().unwrap_or(1.0).abs() * res
        })
        .sum()
}

/// Checks every given fact `X ≺ Y` whose per-space total scales agree:
/// `S(X) ≤ S(Y)` within the tables' resolution, `|S(X) − S(Y)|` within it when
/// `Y ≺ X` also holds.
pub fn verify_entropy_principle<R: Accessibility + ?Sized>(
    rel: &R,
    facts: &[(CompoundState, CompoundState)],
    tables: &BTreeMap<String, EntropyTable>,
    a: &BTreeMap<String, f64>,
) -> Result<PrincipleReport, EntropyError> {
    let reg = rel.registry();
    let mut report = PrincipleReport {
        checked: 0,
        skipped: 0,
        violations: Vec::new(),
        max_violation: 0.0,
        checks: Vec::new(),
    };
    for (x, y) in facts {
        if x.scale_per_space() != y.scale_per_space() {
            report.skipped += 1;
            continue;
        }
        let s_lhs = compound_entropy(x, reg, tables, a)?;
        let s_rhs = compound_entropy(y, reg, tables, a)?;
        let tolerance =
            tolerance_for(x, reg, tables, a).max(tolerance_for(y, reg, tables, a)) + 1e-12;
        let classification = match rel.accessible(y, x) {
            Ok(true) => Classification::Equivalent,
            Ok(false) => Classification::StrictlyPrecedes,
            Err(OrderError::NotInUniverse(_)) => Classification::StrictlyPrecedes,
            Err(e) => return Err(e.into()),
        };
        let margin = s_rhs - s_lhs;
        let excess = match classification {
            Classification::Equivalent => margin.abs() - tolerance,
            _ => -margin - tolerance,
        };
        let ok = excess <= 0.0;
        let check = PrincipleCheck {
            lhs: x.display(reg).to_string(),
            rhs: y.display(reg).to_string(),
            classification,
            s_lhs,
            s_rhs,
            margin,
            tolerance,
            ok,
        };
        report.checked += 1;
        if !ok {
            report.max_violation = report.max_violation.max(excess);
            report.violations.push(check.clone());
        }
        report.checks.push(check);
    }
    Ok(report)
}

/// Convenience wrapper checking every fact of a closed relation.
pub fn verify_relation(
    rel: &AccessibilityRelation,
    tables: &BTreeMap<String, EntropyTable>,
    a: &BTreeMap<String, f64>,
) -> Result<PrincipleReport, EntropyError> {
    verify_entropy_principle(rel, &rel.facts(), tables, a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineFit {
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub max_residual: f64,
}

/// Least-squares fit `table2 ≈ a·table1 + B` over the shared states.
pub fn fit_affine(table1: &EntropyTable, table2: &EntropyTable) -> Result<AffineFit, EntropyError> {
    if table1.len() != table2.len() {
        return Err(EntropyError::StateMismatch);
    }
    let mut pairs = Vec::with_capacity(table1.len());
    for e in &table1.values {
        let y = table2.get(&e.state).ok_or(EntropyError::StateMismatch)?;
        pairs.push((e.s, y));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if pairs.is_empty() || sxx <= f64::EPSILON * n * mx.abs().max(1.0) {
        return Err(EntropyError::DegenerateTable(table1.space.clone()));
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let max_residual = pairs
        .iter()
        .map(|&(x, y)| (y - (a * x + b)).abs())
        .fold(0.0, f64::max);
    Ok(AffineFit { a, b, max_residual })
}

/// States witnessing the calibrator lemma: `X₀ ≺≺ X₁`, `Y₀ ≺≺ Y₁` and
/// `(X₀, Y₁) ∼ (X₁, Y₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Calibrators {
    pub x0: StateRef,
    pub x1: StateRef,
    pub y0: StateRef,
    pub y1: StateRef,
}

/// First calibrator quadruple in declared order. Pairs outside the relation's
/// universe are skipped; nothing is inferred for them.
pub fn find_calibrators<R: Accessibility + ?Sized>(
    rel: &R,
    space1: SpaceIx,
    space2: SpaceIx,
) -> Result<Calibrators, EntropyError> {
    let reg = rel.registry();
    let strict_pairs = |space: SpaceIx| -> Result<Vec<(StateRef, StateRef)>, EntropyError> {
        let states: Vec<StateRef> = reg.states_of(space).collect();
        let mut out = Vec::new();
        for &a in &states {
            for &b in &states {
                let c =
                    classify_lenient(rel, &CompoundState::single(a), &CompoundState::single(b))?;
                if c == Some(Classification::StrictlyPrecedes) {
                    out.push((a, b));
                }
            }
        }
        Ok(out)
    };
    let xs = strict_pairs(space1)?;
    let ys = strict_pairs(space2)?;
    for &(x0, x1) in &xs {
        for &(y0, y1) in &ys {
            let left = CompoundState::single(x0).join(&CompoundState::single(y1));
            let right = CompoundState::single(x1).join(&CompoundState::single(y0));
            if classify_lenient(rel, &left, &right)? == Some(Classification::Equivalent) {
                return Ok(Calibrators { x0, x1, y0, y1 });
            }
        }
    }
    Err(EntropyError::NoCalibrators(
        reg.space_name(space1).to_string(),
        reg.space_name(space2).to_string(),
    ))
}

fn classify_lenient<R: Accessibility + ?Sized>(
    rel: &R,
    x: &CompoundState,
    y: &CompoundState,
) -> Result<Option<Classification>, EntropyError> {
    match classify(rel, x, y) {
        Ok(c) => Ok(Some(c)),
        Err(OrderError::NotInUniverse(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    /// Multiplicative constant per space; the first space is the gauge `a = 1`.
    pub a: BTreeMap<String, f64>,
    /// `|a₁(S₁(X₁) − S₁(X₀)) − a₂(S₂(Y₁) − S₂(Y₀))|` after calibration.
    pub residual: f64,
}

/// Fixes `a₂/a₁` from `S₁(X₀) + S₂(Y₁) = S₁(X₁) + S₂(Y₀)` with `a₁ = 1`.
pub fn calibrate_multiplicative(
    registry: &crate::order::SpaceRegistry,
    table1: &EntropyTable,
    table2: &EntropyTable,
    cal: &Calibrators,
) -> Result<CalibrationResult, EntropyError> {
    let lookup = |t: &EntropyTable, s: StateRef| {
        t.get(registry.state_name(s))
            .ok_or(EntropyError::StateMismatch)
    };
    let d1 = lookup(table1, cal.x1)? - lookup(table1, cal.x0)?;
    let d2 = lookup(table2, cal.y1)? - lookup(table2, cal.y0)?;
    if d1 == 0.0 {
        return Err(EntropyError::DegenerateCalibrator(format!(
            "S({}) = S({})",
            registry.label(cal.x1),
            registry.label(cal.x0)
        )));
    }
    if d2 == 0.0 {
        return Err(EntropyError::DegenerateCalibrator(format!(
            "S({}) = S({})",
            registry.label(cal.y1),
            registry.label(cal.y0)
        )));
    }
    let a2 = d1 / d2;
    let mut a = BTreeMap::new();
    a.insert(table1.space.clone(), 1.0);
    a.insert(table2.space.clone(), a2);
    Ok(CalibrationResult {
        a,
        residual: (d1 - a2 * d2).abs(),
    })
}

#[cfg(test)]
mod tests;
