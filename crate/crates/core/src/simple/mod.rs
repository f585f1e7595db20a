//! Simple systems: open convex regions of `(U, V₁, …, Vₙ)` with pressure
//! functions, adiabats from `∂U/∂Vⱼ = −Pⱼ(U, V)`, forward sectors and the
//! geometric consequences of the axioms (nesting, convexity, Carathéodory).

mod models;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use models::{SimpleSystemModel, Tabulated};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimpleError {
    #[error("point {0:?} is not in the (open) model domain")]
    OutsideDomain(StatePoint),
    #[error("expected {expected} work coordinates, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("adiabat left the domain near {0:?}")]
    PathExitsDomain(StatePoint),
    #[error(
        "step size fell below {min_step} without meeting tolerance (error estimate {estimate:e})"
    )]
    StepRejected { min_step: f64, estimate: f64 },
    #[error("model has no entropy oracle")]
    NoOracle,
    #[error("finite-difference stencil leaves the domain at {0:?}")]
    StencilOutsideDomain(StatePoint),
    #[error("ball of radius {radius} around {center:?} is not inside the domain")]
    BallOutsideDomain { center: StatePoint, radius: f64 },
    #[error("probe grid is empty or unreachable")]
    EmptyProbe,
    #[error("invalid model: {0}")]
    Model(String),
}

/// Open interval `(lo, hi)`; `hi = None` means unbounded above. Serialized as
/// `[lo, hi]` with `null` for an open upper end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, Option<f64>)", into = "(f64, Option<f64>)")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn above(lo: f64) -> Self {
        Self {
            lo,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// Distance from `x` to the nearer end.
    pub fn clearance(&self, x: f64) -> f64 {
        (x - self.lo).min(self.hi - x)
    }
}

impl From<(f64, Option<f64>)> for Interval {
    fn from((lo, hi): (f64, Option<f64>)) -> Self {
        Self {
            lo,
            hi: hi.unwrap_or(f64::INFINITY),
        }
    }
}

impl From<Interval> for (f64, Option<f64>) {
    fn from(i: Interval) -> Self {
        (i.lo, i.hi.is_finite().then_some(i.hi))
    }
}

/// Open box in `(U, V₁, …, Vₙ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub u: Interval,
    pub v: Vec<Interval>,
}

impl Domain {
    pub fn contains(&self, x: &StatePoint) -> bool {
        x.v.len() == self.v.len()
            && x.u.is_finite()
            && self.u.contains(x.u)
            && x.v
                .iter()
                .zip(&self.v)
                .all(|(c, i)| c.is_finite() && i.contains(*c))
    }

    /// Euclidean distance from `x` to the boundary of the box.
    pub fn clearance(&self, x: &StatePoint) -> f64 {
        x.v.iter()
            .zip(&self.v)
            .map(|(c, i)| i.clearance(*c))
            .fold(self.u.clearance(x.u), f64::min)
    }
}

/// A state `(U, V)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePoint {
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
}

impl StatePoint {
    pub fn new(u: f64, v: Vec<f64>) -> Self {
        Self { u, v }
    }

    /// `tX + (1 − t)Y`.
    pub fn lerp(&self, other: &StatePoint, t: f64) -> StatePoint {
        StatePoint {
            u: t * self.u + (1.0 - t) * other.u,
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(a, b)| t * a + (1.0 - t) * b)
                .collect(),
        }
    }

    fn distance(&self, other: &StatePoint) -> f64 {
        let dv: f64 = self
            .v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        ((self.u - other.u).powi(2) + dv).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    /// Initial fixed step in path length.
    pub step: f64,
    /// Allowed Richardson error estimate per unit path length.
    pub tolerance: f64,
    /// Smallest step before the integration is rejected.
    pub min_step: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            tolerance: 1e-8,
            min_step: 1e-7,
        }
    }
}

/// Samples of the adiabat `∂A_X` along a path of work coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdiabatSurface {
    pub base: StatePoint,
    pub samples: Vec<StatePoint>,
    /// Finest step used on any segment.
    pub step: f64,
    pub tolerance: f64,
    /// Largest per-unit-length Richardson estimate over the segments.
    pub error_estimate: f64,
}

impl AdiabatSurface {
    pub fn end(&self) -> &StatePoint {
        self.samples
            .last()
            .expect("a surface always holds its base")
    }
}

fn lerp_v(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Fixed-step RK4 for `dU/dt = −P(U, V(t))·(V_b − V_a)` on `t ∈ [0, 1]`.
fn rk4_segment(
    model: &SimpleSystemModel,
    domain: &Domain,
    u0: f64,
    va: &[f64],
    vb: &[f64],
    steps: usize,
    record: Option<(&mut Vec<StatePoint>, usize)>,
) -> Result<f64, SimpleError> {
    let dv: Vec<f64> = va.iter().zip(vb).map(|(a, b)| b - a).collect();
    let rhs = |u: f64, t: f64| -> Result<f64, SimpleError> {
        let v = lerp_v(va, vb, t);
        let x = StatePoint::new(u, v);
        if !domain.contains(&x) {
            return Err(SimpleError::PathExitsDomain(x));
        }
        let p = model.pressure_raw(x.u, &x.v);
        Ok(-p.iter().zip(&dv).map(|(p, d)| p * d).sum::<f64>())
    };
    let h = 1.0 / steps as f64;
    let mut u = u0;
    let (mut out, every) = match record {
        Some((out, every)) => (Some(out), every.max(1)),
        None => (None, 1),
    };
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = rhs(u, t)?;
        let k2 = rhs(u + 0.5 * h * k1, t + 0.5 * h)?;
        let k3 = rhs(u + 0.5 * h * k2, t + 0.5 * h)?;
        let k4 = rhs(u + h * k3, t + h)?;
        u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if let Some(out) = out.as_deref_mut() {
            if (i + 1) % every == 0 || i + 1 == steps {
                out.push(StatePoint::new(u, lerp_v(va, vb, (i + 1) as f64 * h)));
            }
        }
    }
    let end = StatePoint::new(u, vb.to_vec());
    if !domain.contains(&end) {
        return Err(SimpleError::PathExitsDomain(end));
    }
    Ok(u)
}

struct SegmentResult {
    u: f64,
    step: f64,
    estimate: f64,
}

/// Integrates one straight segment, halving the step until the Richardson
/// estimate `|U_h − U_{h/2}|/15` is within `tolerance·length`.
fn integrate_segment(
    model: &SimpleSystemModel,
    domain: &Domain,
    u0: f64,
    va: &[f64],
    vb: &[f64],
    opts: &IntegratorOptions,
    samples: Option<&mut Vec<StatePoint>>,
) -> Result<SegmentResult, SimpleError> {
    let length = va
        .iter()
        .zip(vb)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    if length == 0.0 {
        return Ok(SegmentResult {
            u: u0,
            step: 0.0,
            estimate: 0.0,
        });
    }
    let mut steps = (length / opts.step).ceil().max(1.0) as usize;
    let mut coarse = rk4_segment(model, domain, u0, va, vb, steps, None)?;
    loop {
        let fine = rk4_segment(model, domain, u0, va, vb, 2 * steps, None)?;
        let estimate = (fine - coarse).abs() / 15.0 / length;
        if estimate <= opts.tolerance {
            if let Some(out) = samples {
                rk4_segment(model, domain, u0, va, vb, 2 * steps, Some((out, 2)))?;
            }
            return Ok(SegmentResult {
                u: fine,
                step: length / (2 * steps) as f64,
                estimate,
            });
        }
        steps *= 2;
        if length / (2 * steps) as f64 <= opts.min_step {
            return Err(SimpleError::StepRejected {
                min_step: opts.min_step,
                estimate,
            });
        }
        coarse = fine;
    }
}

/// Follows the adiabat through `x` along the piecewise-linear path
/// `x.V → path[0] → path[1] → …`.
pub fn integrate_adiabat(
    model: &SimpleSystemModel,
    x: &StatePoint,
    path: &[Vec<f64>],
    opts: &IntegratorOptions,
) -> Result<AdiabatSurface, SimpleError> {
    model.require_inside(x)?;
    let domain = model.domain();
    for w in path {
        let probe = StatePoint::new(x.u, w.clone());
        if w.len() != x.v.len() || !w.iter().zip(&domain.v).all(|(c, i)| i.contains(*c)) {
            return Err(SimpleError::PathExitsDomain(probe));
        }
    }
    let mut samples = vec![x.clone()];
    let mut u = x.u;
    let mut v = x.v.clone();
    let mut step = 0.0f64;
    let mut error_estimate = 0.0f64;
    for w in path {
        let seg = integrate_segment(model, &domain, u, &v, w, opts, Some(&mut samples))?;
        u = seg.u;
        v = w.clone();
        if seg.step > 0.0 {
            step = if step == 0.0 {
                seg.step
            } else {
                step.min(seg.step)
            };
        }
        error_estimate = error_estimate.max(seg.estimate);
    }
    Ok(AdiabatSurface {
        base: x.clone(),
        samples,
        step,
        tolerance: opts.tolerance,
        error_estimate,
    })
}

/// Height `U` of the adiabat through `x` above the work coordinates `v`,
/// following the straight path from `x.V`.
pub fn adiabat_height(
    model: &SimpleSystemModel,
    x: &StatePoint,
    v: &[f64],
    opts: &IntegratorOptions,
) -> Result<f64, SimpleError> {
    model.require_inside(x)?;
    let domain = model.domain();
    Ok(integrate_segment(model, &domain, x.u, &x.v, v, opts, None)?.u)
}

/// How forward-sector membership is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SectorMethod {
    /// Entropy oracle when the model has one, adiabat integration otherwise.
    #[default]
    Auto,
    Oracle,
    Adiabat,
}

/// Relative slack used when comparing oracle values and adiabat heights.
const SECTOR_REL_TOL: f64 = 1e-12;

/// `Y ∈ A_X`: `Y` lies on or above the adiabat through `X`.
pub fn forward_sector_contains(
    model: &SimpleSystemModel,
    x: &StatePoint,
    y: &StatePoint,
    method: SectorMethod,
    opts: &IntegratorOptions,
) -> Result<bool, SimpleError> {
    model.require_inside(x)?;
    model.require_inside(y)?;
    let use_oracle = match method {
        SectorMethod::Auto => model.has_entropy(),
        SectorMethod::Oracle => true,
        SectorMethod::Adiabat => false,
    };
    if use_oracle {
        let (sx, sy) = (model.entropy(x)?, model.entropy(y)?);
        return Ok(sx <= sy + SECTOR_REL_TOL * sx.abs().max(sy.abs()).max(1.0));
    }
    if x == y {
        return Ok(true);
    }
    let height = adiabat_height(model, x, &y.v, opts)?;
    let length = x.distance(&StatePoint::new(x.u, y.v.clone()));
    let slack = 10.0 * opts.tolerance * length.max(1.0) + SECTOR_REL_TOL * height.abs().max(1.0);
    Ok(y.u >= height - slack)
}

/// The three cases of nested forward sectors, or the violation where the
/// adiabats cross.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum Nesting {
    EqualSectors,
    /// `A_X ⊂ Interior(A_Y)`, i.e. `Y ≺≺ X`.
    XInsideY,
    /// `A_Y ⊂ Interior(A_X)`, i.e. `X ≺≺ Y`.
    YInsideX,
    /// The adiabat through `Y` is above that through `X` at some probe
    /// coordinates and below it at others.
    Crossing {
        y_above_at: Vec<f64>,
        y_below_at: Vec<f64>,
    },
}

impl Nesting {
    pub fn is_violation(&self) -> bool {
        matches!(self, Nesting::Crossing { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestingOptions {
    /// Work-coordinate columns at which both adiabats are compared.
    pub probe: Vec<Vec<f64>>,
    pub integrator: IntegratorOptions,
    /// Adiabat heights within this relative distance count as equal.
    pub rel_tol: f64,
}

impl NestingOptions {
    /// Evenly spaced columns strictly inside `[lo, hi]` for one work coordinate.
    pub fn columns(lo: f64, hi: f64, count: usize) -> Self {
        let probe = (1..=count)
            .map(|i| vec![lo + (hi - lo) * i as f64 / (count + 1) as f64])
            .collect();
        Self {
            probe,
            integrator: IntegratorOptions::default(),
            rel_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestingReport {
    pub outcome: Nesting,
    pub columns_used: usize,
    /// Columns where one of the adiabats leaves the domain first.
    pub columns_skipped: usize,
}

/// Heights of the adiabat through `x` at every probe column; `None` where the
/// adiabat leaves the domain before reaching the column.
pub fn adiabat_profile(
    model: &SimpleSystemModel,
    x: &StatePoint,
    probe: &[Vec<f64>],
    opts: &IntegratorOptions,
) -> Result<Vec<Option<f64>>, SimpleError> {
    model.require_inside(x)?;
    let domain = model.domain();
    let mut out = vec![None; probe.len()];
    if x.v.len() == 1 {
        // March outward from the base through the sorted columns so each
        // stretch of the path is integrated once.
        let mut order: Vec<usize> = (0..probe.len()).collect();
        order.sort_by(|&a, &b| probe[a][0].total_cmp(&probe[b][0]));
        let split = order.partition_point(|&i| probe[i][0] < x.v[0]);
        let (below, above) = order.split_at(split);
        for side in [
            below.iter().rev().copied().collect::<Vec<_>>(),
            above.to_vec(),
        ] {
            let (mut u, mut v) = (x.u, x.v.clone());
            for i in side {
                match integrate_segment(model, &domain, u, &v, &probe[i], opts, None) {
                    Ok(seg) => {
                        u = seg.u;
                        v = probe[i].clone();
                        out[i] = Some(u);
                    }
                    Err(SimpleError::PathExitsDomain(_)) => break,
                    Err(e) => return Err(e),
                }
            }
        }
    } else {
        for (i, col) in probe.iter().enumerate() {
            match integrate_segment(model, &domain, x.u, &x.v, col, opts, None) {
                Ok(seg) => out[i] = Some(seg.u),
                Err(SimpleError::PathExitsDomain(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Classifies the forward sectors of `x` and `y` by comparing their adiabats
/// on the probe columns.
pub fn check_nesting(
    model: &SimpleSystemModel,
    x: &StatePoint,
    y: &StatePoint,
    opts: &NestingOptions,
) -> Result<NestingReport, SimpleError> {
    if opts.probe.is_empty() {
        return Err(SimpleError::EmptyProbe);
    }
    let hx = adiabat_profile(model, x, &opts.probe, &opts.integrator)?;
    let hy = adiabat_profile(model, y, &opts.probe, &opts.integrator)?;
    let mut above = Vec::new();
    let mut below = Vec::new();
    let mut equal = 0;
    let mut skipped = 0;
    for ((col, a), b) in opts.probe.iter().zip(&hx).zip(&hy) {
        let (Some(a), Some(b)) = (a, b) else {
            skipped += 1;
            continue;
        };
        let d = b - a;
        let scale = a.abs().max(b.abs()).max(1.0);
        if d.abs() <= opts.rel_tol * scale {
            equal += 1;
        } else if d > 0.0 {
            above.push(col[0]);
        } else {
            below.push(col[0]);
        }
    }
    let used = equal + above.len() + below.len();
    if used == 0 {
        return Err(SimpleError::EmptyProbe);
    }
    let outcome = match (equal, above.is_empty(), below.is_empty()) {
        (_, true, true) => Nesting::EqualSectors,
        (0, false, true) => Nesting::YInsideX,
        (0, true, false) => Nesting::XInsideY,
        // Touching at some columns and separated at others is a crossing too:
        // nested sectors are either equal or strictly interior.
        _ => Nesting::Crossing {
            y_above_at: above,
            y_below_at: below,
        },
    };
    Ok(NestingReport {
        outcome,
        columns_used: used,
        columns_skipped: skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityCheck {
    pub t: f64,
    /// `t·σ(X) + (1 − t)·σ(Y)`.
    pub combined: f64,
    /// `σ(tX + (1 − t)Y)`.
    pub at_point: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub checks: Vec<ConvexityCheck>,
    pub violations: usize,
}

impl ConvexityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Convex combination: `(tX, (1 − t)Y) ≺ tX + (1 − t)Y` via the oracle.
pub fn check_convexity(
    model: &SimpleSystemModel,
    x: &StatePoint,
    y: &StatePoint,
    t_grid: &[f64],
) -> Result<ConvexityReport, SimpleError> {
    let (sx, sy) = (model.entropy(x)?, model.entropy(y)?);
    let mut report = ConvexityReport {
        checks: Vec::with_capacity(t_grid.len()),
        violations: 0,
    };
    for &t in t_grid {
        let z = x.lerp(y, t);
        let at_point = model.entropy(&z)?;
        let combined = t * sx + (1.0 - t) * sy;
        let ok = combined <= at_point + SECTOR_REL_TOL * combined.abs().max(1.0) * 10.0;
        if !ok {
            report.violations += 1;
        }
        report.checks.push(ConvexityCheck {
            t,
            combined,
            at_point,
            ok,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaratheodoryReport {
    pub center: StatePoint,
    pub radius: f64,
    pub samples: usize,
    /// A point in the ball with `X ⊀ Z`.
    pub inaccessible: Option<StatePoint>,
    /// A point in the ball with `X ≺≺ Y`.
    pub strictly_above: Option<StatePoint>,
}

impl CaratheodoryReport {
    pub fn passed(&self) -> bool {
        self.inaccessible.is_some() && self.strictly_above.is_some()
    }
}

/// Looks for inaccessible and strictly accessible states in the ball of
/// `radius` around `x`. The two axis points `X ∓ (r/2, 0)` are tried first,
/// then `samples` seeded random points.
pub fn check_caratheodory(
    model: &SimpleSystemModel,
    x: &StatePoint,
    radius: f64,
    samples: usize,
    seed: u64,
    opts: &IntegratorOptions,
) -> Result<CaratheodoryReport, SimpleError> {
    model.require_inside(x)?;
    if !(radius > 0.0) || model.domain().clearance(x) <= radius {
        return Err(SimpleError::BallOutsideDomain {
            center: x.clone(),
            radius,
        });
    }
    let mut candidates = vec![
        StatePoint::new(x.u - radius / 2.0, x.v.clone()),
        StatePoint::new(x.u + radius / 2.0, x.v.clone()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while candidates.len() < samples + 2 {
        let du: f64 = rng.gen_range(-radius..radius);
        let dv: Vec<f64> = x.v.iter().map(|_| rng.gen_range(-radius..radius)).collect();
        let z = StatePoint::new(x.u + du, x.v.iter().zip(&dv).map(|(a, b)| a + b).collect());
        if z.distance(x) < radius {
            candidates.push(z);
        }
    }
    let mut report = CaratheodoryReport {
        center: x.clone(),
        radius,
        samples: candidates.len(),
        inaccessible: None,
        strictly_above: None,
    };
    for z in candidates {
        if report.inaccessible.is_some() && report.strictly_above.is_some() {
            break;
        }
        let forward = forward_sector_contains(model, x, &z, SectorMethod::Auto, opts)?;
        if !forward {
            report.inaccessible.get_or_insert(z);
        } else if !forward_sector_contains(model, &z, x, SectorMethod::Auto, opts)? {
            report.strictly_above.get_or_insert(z);
        }
    }
    Ok(report)
}

/// Fourth-order central difference `f'(x)` with step `h`.
pub fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureReport {
    pub pressure: Vec<f64>,
    /// `max_i |P_i − (∂σ/∂V_i)/(∂σ/∂U)| / max(|P_i|, 1)`, when an oracle exists.
    pub consistency_residual: Option<f64>,
    pub step: f64,
}

/// `P(X)`, cross-checked against the oracle's tangent plane by central
/// differences with `h = 1e-5·max(|coordinate|, 1)`.
pub fn pressure_at(
    model: &SimpleSystemModel,
    x: &StatePoint,
) -> Result<PressureReport, SimpleError> {
    let pressure = model.pressure(x)?;
    let domain = model.domain();
    let step = 1e-5 * x.u.abs().max(1.0);
    let consistency_residual = if model.has_entropy() {
        let s = |p: &StatePoint| -> Result<f64, SimpleError> {
            if !domain.contains(p) {
                return Err(SimpleError::StencilOutsideDomain(p.clone()));
            }
            Ok(model.entropy_raw(p.u, &p.v).expect("model has an oracle"))
        };
        let shifted = |du: f64, i: Option<(usize, f64)>| {
            let mut p = StatePoint::new(x.u + du, x.v.clone());
            if let Some((i, dv)) = i {
                p.v[i] += dv;
            }
            p
        };
        let ds_du = (s(&shifted(step, None))? - s(&shifted(-step, None))?) / (2.0 * step);
        let mut worst: f64 = 0.0;
        for (i, p) in pressure.iter().enumerate() {
            let hv = 1e-5 * x.v[i].abs().max(1.0);
            let ds_dv =
                (s(&shifted(0.0, Some((i, hv))))? - s(&shifted(0.0, Some((i, -hv))))?) / (2.0 * hv);
            worst = worst.max((p - ds_dv / ds_du).abs() / p.abs().max(1.0));
        }
        Some(worst)
    } else {
        None
    };
    Ok(PressureReport {
        pressure,
        consistency_residual,
        step,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub pairs: usize,
    /// Largest `|P(a) − P(b)| / |a − b|` seen.
    pub max_quotient: f64,
    pub bound: f64,
    pub worst_pair: Option<(StatePoint, StatePoint)>,
}

impl LipschitzReport {
    pub fn passed(&self) -> bool {
        self.max_quotient <= self.bound
    }
}

/// Sampled difference quotients of the pressure inside `region` at
/// separations down to `1e-6` of the region size, followed by a bisecting
/// scan along each axis through the steepest sample.
pub fn check_lipschitz(
    model: &SimpleSystemModel,
    region: &Domain,
    bound: f64,
    samples: usize,
    seed: u64,
) -> Result<LipschitzReport, SimpleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |rng: &mut ChaCha8Rng, i: &Interval| rng.gen_range(i.lo..i.hi);
    let mut report = LipschitzReport {
        pairs: 0,
        max_quotient: 0.0,
        bound,
        worst_pair: None,
    };
    let size = region.u.hi - region.u.lo;
    for k in 0..samples {
        let a = StatePoint::new(
            pick(&mut rng, &region.u),
            region.v.iter().map(|i| pick(&mut rng, i)).collect(),
        );
        let scale = size * 10f64.powi(-((k % 7) as i32));
        let b = StatePoint::new(
            a.u + rng.gen_range(-1.0..1.0) * scale,
            a.v.iter()
                .map(|c| c + rng.gen_range(-1.0..1.0) * scale * 1e-3)
                .collect(),
        );
        if !model.contains(&a) || !model.contains(&b) || !region.contains(&b) {
            continue;
        }
        let (pa, pb) = (model.pressure(&a)?, model.pressure(&b)?);
        let dp = pa
            .iter()
            .zip(&pb)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let dist = a.distance(&b);
        if dist == 0.0 {
            continue;
        }
        report.pairs += 1;
        let q = dp / dist;
        if q > report.max_quotient {
            report.max_quotient = q;
            report.worst_pair = Some((a, b));
        }
    }
    // Along each axis through the steepest sample: scan 256 contiguous cells,
    // then keep bisecting the steeper half. A Lipschitz pressure keeps the
    // quotient bounded there; a cusp makes it blow up.
    if let Some((center, _)) = report.worst_pair.clone() {
        let quotient = |a: &StatePoint, b: &StatePoint| -> Result<f64, SimpleError> {
            let (pa, pb) = (model.pressure(a)?, model.pressure(b)?);
            let dp = pa
                .iter()
                .zip(&pb)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            Ok(dp / a.distance(b))
        };
        let axes = std::iter::once(region.u).chain(region.v.iter().copied());
        for (axis, span) in axes.enumerate() {
            let at = |x: f64| {
                let mut p = center.clone();
                if axis == 0 {
                    p.u = x;
                } else {
                    p.v[axis - 1] = x;
                }
                p
            };
            const CELLS: usize = 256;
            let width = (span.hi - span.lo) / (CELLS + 2) as f64;
            let mut best: Option<(f64, StatePoint, StatePoint)> = None;
            for c in 0..CELLS {
                let a = at(span.lo + width * (c + 1) as f64);
                let b = at(span.lo + width * (c + 2) as f64);
                if !model.contains(&a) || !model.contains(&b) {
                    continue;
                }
                let q = quotient(&a, &b)?;
                report.pairs += 1;
                if best.as_ref().map_or(true, |(bq, ..)| q > *bq) {
                    best = Some((q, a, b));
                }
            }
            let Some((mut q, mut a, mut b)) = best else {
                continue;
            };
            for _ in 0..48 {
                if q > report.max_quotient {
                    report.max_quotient = q;
                    report.worst_pair = Some((a.clone(), b.clone()));
                }
                let mid = a.lerp(&b, 0.5);
                if mid == a || mid == b {
                    break;
                }
                let (qa, qb) = (quotient(&a, &mid)?, quotient(&mid, &b)?);
                report.pairs += 2;
                if qa >= qb {
                    b = mid;
                    q = qa;
                } else {
                    a = mid;
                    q = qb;
                }
            }
        }
    }
    Ok(report)
}
