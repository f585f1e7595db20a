//! Thermal join and splitting, temperature `1/T = (∂S/∂U)_V`, the zeroth law,
//! transversality and the universal temperature range.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simple::{
    forward_sector_contains, IntegratorOptions, SectorMethod, SimpleError, SimpleSystemModel,
    StatePoint,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermalError {
    #[error(transparent)]
    Simple(#[from] SimpleError),
    #[error("total energy {u} with the given work coordinates is outside the joined domain")]
    OutsideJoin { u: f64 },
    #[error("entropy maximum of the split lies on the boundary (U₁ = {u1})")]
    BoundaryMaximum { u1: f64 },
    #[error("computed temperature {t} at {at:?} is not positive")]
    NonPositiveTemperature { t: f64, at: StatePoint },
    #[error("no state with temperature {t} on the column V = {v:?}")]
    NoIsothermPoint { t: f64, v: Vec<f64> },
}

/// Relative step of the energy derivative.
const DERIVATIVE_STEP: f64 = 1e-3;

/// `∂σ/∂U` at `x` by the fourth-order central stencil, with the step shrunk
/// to keep the stencil inside the domain.
fn entropy_slope(model: &SimpleSystemModel, x: &StatePoint) -> Result<(f64, f64), ThermalError> {
    model.require_inside(x)?;
    if !model.has_entropy() {
        return Err(SimpleError::NoOracle.into());
    }
    let dom = model.domain();
    let h = (DERIVATIVE_STEP * x.u.abs()).min(dom.u.clearance(x.u) / 4.0);
    if !(h > 0.0) {
        return Err(SimpleError::StencilOutsideDomain(x.clone()).into());
    }
    let s = |u: f64| model.entropy_raw(u, &x.v).expect("oracle checked above");
    Ok((crate::simple::derivative(s, x.u, h), h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemperatureValue {
    #[serde(rename = "T")]
    pub t: f64,
    pub step: f64,
}

/// `T(X)` from `1/T = (∂S/∂U)_V`.
pub fn temperature(
    model: &SimpleSystemModel,
    x: &StatePoint,
) -> Result<TemperatureValue, ThermalError> {
    let (slope, step) = entropy_slope(model, x)?;
    let t = 1.0 / slope;
    if !(t > 0.0 && t.is_finite()) {
        return Err(ThermalError::NonPositiveTemperature { t, at: x.clone() });
    }
    Ok(TemperatureValue { t, step })
}

/// Two simple systems coupled so that only the total energy is conserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalJoin {
    pub left: SimpleSystemModel,
    pub right: SimpleSystemModel,
}

impl ThermalJoin {
    pub fn new(left: SimpleSystemModel, right: SimpleSystemModel) -> Result<Self, ThermalError> {
        left.validate()?;
        right.validate()?;
        Ok(Self { left, right })
    }

    /// Open interval of admissible `U₁` for total energy `u`.
    pub fn admissible_u1(
        &self,
        u: f64,
        v1: &[f64],
        v2: &[f64],
    ) -> Result<(f64, f64), ThermalError> {
        let (d1, d2) = (self.left.domain(), self.right.domain());
        let columns_ok = |d: &crate::simple::Domain, v: &[f64]| {
            v.len() == d.v.len() && v.iter().zip(&d.v).all(|(c, i)| i.contains(*c))
        };
        if !u.is_finite() || !columns_ok(&d1, v1) || !columns_ok(&d2, v2) {
            return Err(ThermalError::OutsideJoin { u });
        }
        let lo = d1.u.lo.max(u - d2.u.hi);
        let hi = d1.u.hi.min(u - d2.u.lo);
        if lo < hi && lo.is_finite() && hi.is_finite() {
            Ok((lo, hi))
        } else {
            Err(ThermalError::OutsideJoin { u })
        }
    }

    pub fn contains(&self, u: f64, v1: &[f64], v2: &[f64]) -> bool {
        self.admissible_u1(u, v1, v2).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Split {
    pub x1: StatePoint,
    pub x2: StatePoint,
    /// `S₁(X₁) + S₂(X₂)` at the returned partition.
    pub entropy: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    /// Several maximizers (or a plateau) were found; all are listed.
    pub degenerate: bool,
    pub maximizers: Vec<f64>,
}

const SCAN_POINTS: usize = 64;
const GOLDEN_ITERATIONS: usize = 60;

/// Equilibrium partition of `(U, V₁, V₂)`: the energy split maximizing
/// `S₁(U₁, V₁) + S₂(U − U₁, V₂)`. A 64-point scan brackets each maximum,
/// golden-section narrows it and bisection on `∂S₁/∂U₁ − ∂S₂/∂U₂` refines it
/// to `1e-10·U`.
pub fn thermal_split(
    join: &ThermalJoin,
    u: f64,
    v1: &[f64],
    v2: &[f64],
) -> Result<Split, ThermalError> {
    let (a, b) = join.admissible_u1(u, v1, v2)?;
    for m in [&join.left, &join.right] {
        if !m.has_entropy() {
            return Err(SimpleError::NoOracle.into());
        }
    }
    let f = |u1: f64| {
        join.left.entropy_raw(u1, v1).expect("checked")
            + join.right.entropy_raw(u - u1, v2).expect("checked")
    };
    let node = |i: usize| a + (b - a) * (i + 1) as f64 / (SCAN_POINTS + 1) as f64;
    let values: Vec<f64> = (0..SCAN_POINTS).map(|i| f(node(i))).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let close = |x: f64| (best - x).abs() <= 1e-12 * best.abs().max(1.0);
    // Runs of near-maximal scan points; each run brackets one maximizer.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        if close(*v) {
            match runs.last_mut() {
                Some((_, end)) if *end + 1 == i => *end = i,
                _ => runs.push((i, i)),
            }
        }
    }
    let edge = |i: isize| {
        if i < 0 {
            a
        } else if i as usize >= SCAN_POINTS {
            b
        } else {
            node(i as usize)
        }
    };
    let tol = 1e-10 * u.abs().max(f64::MIN_POSITIVE);
    let mut maximizers = Vec::with_capacity(runs.len());
    for &(start, end) in &runs {
        if end - start >= 2 {
            // A plateau: every point of it maximizes; report its centre.
            maximizers.push(0.5 * (node(start) + node(end)));
            continue;
        }
        let (mut lo, mut hi) = (edge(start as isize - 1), edge(end as isize + 1));
        // Golden section on the entropy itself.
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..GOLDEN_ITERATIONS {
            if hi - lo <= 1e-6 * (b - a) {
                break;
            }
            let c = hi - phi * (hi - lo);
            let d = lo + phi * (hi - lo);
            if f(c) >= f(d) {
                hi = d;
            } else {
                lo = c;
            }
        }
        let mut x = 0.5 * (lo + hi);
        // Bisection on the slope difference, widening to the scan bracket if
        // golden section left the root outside.
        let g = |u1: f64| -> Result<f64, ThermalError> {
            let (s1, _) = entropy_slope(&join.left, &StatePoint::new(u1, v1.to_vec()))?;
            let (s2, _) = entropy_slope(&join.right, &StatePoint::new(u - u1, v2.to_vec()))?;
            Ok(s1 - s2)
        };
        let (scan_lo, scan_hi) = (edge(start as isize - 1), edge(end as isize + 1));
        let inner = |t: f64| scan_lo + (scan_hi - scan_lo) * t;
        let mut bracket = None;
        for (l, h) in [(lo, hi), (inner(1e-9), inner(1.0 - 1e-9))] {
            if l > a && h < b && g(l)? > 0.0 && g(h)? < 0.0 {
                bracket = Some((l, h));
                break;
            }
        }
        if let Some((mut l, mut h)) = bracket {
            while h - l > tol {
                let m = 0.5 * (l + h);
                if m <= l || m >= h {
                    break;
                }
                if g(m)? > 0.0 {
                    l = m;
                } else {
                    h = m;
                }
            }
            x = 0.5 * (l + h);
        }
        maximizers.push(x);
    }
    let degenerate = runs.len() > 1 || runs.iter().any(|(s, e)| e - s >= 2);
    let u1 = *maximizers
        .iter()
        .max_by(|p, q| f(**p).total_cmp(&f(**q)))
        .expect("the scan has a maximum");
    let margin = 1e-6 * (b - a);
    if let Some(&edge_max) = maximizers
        .iter()
        .find(|&&m| m - a <= margin || b - m <= margin)
    {
        return Err(ThermalError::BoundaryMaximum { u1: edge_max });
    }
    let x1 = StatePoint::new(u1, v1.to_vec());
    let x2 = StatePoint::new(u - u1, v2.to_vec());
    let t1 = temperature(&join.left, &x1)?.t;
    let t2 = temperature(&join.right, &x2)?.t;
    Ok(Split {
        entropy: f(u1),
        x1,
        x2,
        t1,
        t2,
        degenerate,
        maximizers,
    })
}

/// Relative temperature difference treated as equality for `∼_T`.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;

/// `X₁ ∼_T X₂`: `|T(X₁) − T(X₂)| ≤ tol·max(T)`.
pub fn in_thermal_equilibrium(
    m1: &SimpleSystemModel,
    x1: &StatePoint,
    m2: &SimpleSystemModel,
    x2: &StatePoint,
    tol: f64,
) -> Result<bool, ThermalError> {
    let (t1, t2) = (temperature(m1, x1)?.t, temperature(m2, x2)?.t);
    Ok((t1 - t2).abs() <= tol * t1.max(t2))
}

/// A state of one of the models passed alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub model: usize,
    pub state: StatePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZerothLawReport {
    pub checked: usize,
    /// Triples with `X ∼_T Y` and `Y ∼_T Z`, on which transitivity is tested.
    pub applicable: usize,
    pub violations: Vec<[ModelState; 3]>,
}

impl ZerothLawReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Transitivity of `∼_T` on the given triples.
pub fn check_zeroth_law(
    models: &[SimpleSystemModel],
    triples: &[[ModelState; 3]],
    tol: f64,
) -> Result<ZerothLawReport, ThermalError> {
    let get = |s: &ModelState| {
        models
            .get(s.model)
            .ok_or_else(|| SimpleError::Model(format!("no model with index {}", s.model)))
    };
    let mut report = ZerothLawReport {
        checked: triples.len(),
        applicable: 0,
        violations: Vec::new(),
    };
    for triple in triples {
        let [x, y, z] = triple;
        let eq = |p: &ModelState, q: &ModelState| -> Result<bool, ThermalError> {
            in_thermal_equilibrium(get(p)?, &p.state, get(q)?, &q.state, tol)
        };
        if eq(x, y)? && eq(y, z)? {
            report.applicable += 1;
            if !eq(x, z)? {
                report.violations.push(triple.clone());
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyFlowReport {
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    pub delta_u1: f64,
    pub delta_u2: f64,
    pub ok: bool,
}

/// Joins `X₁` and `X₂`, splits at equilibrium and checks that energy left the
/// hotter system.
pub fn check_energy_flow(
    m1: &SimpleSystemModel,
    x1: &StatePoint,
    m2: &SimpleSystemModel,
    x2: &StatePoint,
) -> Result<EnergyFlowReport, ThermalError> {
    let (t1, t2) = (temperature(m1, x1)?.t, temperature(m2, x2)?.t);
    let join = ThermalJoin::new(m1.clone(), m2.clone())?;
    let total = x1.u + x2.u;
    let split = thermal_split(&join, total, &x1.v, &x2.v)?;
    let delta_u1 = split.x1.u - x1.u;
    let delta_u2 = split.x2.u - x2.u;
    let ok = if (t1 - t2).abs() <= EQUILIBRIUM_TOL * t1.max(t2) {
        delta_u1.abs() <= 1e-8 * total.abs().max(1.0)
    } else if t1 > t2 {
        delta_u1 < 0.0
    } else {
        delta_u1 > 0.0
    };
    Ok(EnergyFlowReport {
        t1,
        t2,
        delta_u1,
        delta_u2,
        ok,
    })
}

/// The energy `U` with `T(U, v) = t`, by bisection in `U` along the column.
pub fn isotherm_energy(model: &SimpleSystemModel, v: &[f64], t: f64) -> Result<f64, ThermalError> {
    let dom = model.domain();
    let missing = || ThermalError::NoIsothermPoint { t, v: v.to_vec() };
    let temp = |u: f64| temperature(model, &StatePoint::new(u, v.to_vec())).map(|x| x.t);
    let span = if dom.u.hi.is_finite() {
        dom.u.hi - dom.u.lo
    } else {
        dom.u.lo.abs().max(1.0)
    };
    let mut lo = dom.u.lo + 1e-9 * span;
    let mut hi = if dom.u.hi.is_finite() {
        dom.u.hi - 1e-9 * span
    } else {
        dom.u.lo + span
    };
    let (t_lo, mut t_hi) = (temp(lo)?, temp(hi)?);
    let increasing = t_hi >= t_lo;
    if !dom.u.hi.is_finite() && increasing {
        let mut doublings = 0;
        while t_hi < t {
            hi = dom.u.lo + 2.0 * (hi - dom.u.lo);
            t_hi = temp(hi)?;
            doublings += 1;
            if doublings > 200 {
                return Err(missing());
            }
        }
    }
    let below = |x: f64| if increasing { x < t } else { x > t };
    if !below(t_lo) && t_lo != t || below(t_hi) {
        return Err(missing());
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(temp(mid)?) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Points `(U(V), V)` of the isotherm `T = t` on the given columns; columns
/// where the isotherm does not exist are skipped.
pub fn isotherm(
    model: &SimpleSystemModel,
    t: f64,
    columns: &[Vec<f64>],
) -> Result<Vec<StatePoint>, ThermalError> {
    let mut out = Vec::with_capacity(columns.len());
    for v in columns {
        match isotherm_energy(model, v, t) {
            Ok(u) => out.push(StatePoint::new(u, v.clone())),
            Err(ThermalError::NoIsothermPoint { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// A state of `target` above the column `v` with the temperature of `x`.
pub fn equilibrium_partner(
    source: &SimpleSystemModel,
    x: &StatePoint,
    target: &SimpleSystemModel,
    v: &[f64],
) -> Result<StatePoint, ThermalError> {
    let t = temperature(source, x)?.t;
    Ok(StatePoint::new(isotherm_energy(target, v, t)?, v.to_vec()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalityReport {
    #[serde(rename = "T")]
    pub t: f64,
    /// `X₀ ≺≺ X` on the isotherm.
    pub below: Option<StatePoint>,
    /// `X ≺≺ X₁` on the isotherm.
    pub above: Option<StatePoint>,
    pub isotherm_points: usize,
}

impl TransversalityReport {
    pub fn found(&self) -> bool {
        self.below.is_some() && self.above.is_some()
    }
}

/// Searches the isotherm `T = t` over the probe columns for states strictly
/// below and strictly above the adiabat through `x`.
pub fn check_transversality(
    model: &SimpleSystemModel,
    x: &StatePoint,
    t: f64,
    columns: &[Vec<f64>],
    opts: &IntegratorOptions,
) -> Result<TransversalityReport, ThermalError> {
    model.require_inside(x)?;
    let points = isotherm(model, t, columns)?;
    let mut report = TransversalityReport {
        t,
        below: None,
        above: None,
        isotherm_points: points.len(),
    };
    for z in points {
        let x_to_z = forward_sector_contains(model, x, &z, SectorMethod::Auto, opts)?;
        let z_to_x = forward_sector_contains(model, &z, x, SectorMethod::Auto, opts)?;
        match (x_to_z, z_to_x) {
            (true, false) => {
                report.above.get_or_insert(z);
            }
            (false, true) => {
                report.below.get_or_insert(z);
            }
            _ => {}
        }
        if report.found() {
            break;
        }
    }
    Ok(report)
}
