use serde::{Deserialize, Serialize};

use super::{Domain, Interval, SimpleError, StatePoint};
use crate::rational::{serde_rational, to_f64, Rational};

/// Bilinear pressure (and optionally entropy) on a rectangular `(U, V)` grid
/// with one work coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tabulated {
    pub u_nodes: Vec<f64>,
    pub v_nodes: Vec<f64>,
    /// `pressure_grid[i][j]` is `P(u_nodes[i], v_nodes[j])`.
    pub pressure_grid: Vec<Vec<f64>>,
    #[serde(default)]
    pub entropy_grid: Option<Vec<Vec<f64>>>,
}

impl Tabulated {
    fn validate(&self) -> Result<(), SimpleError> {
        let sorted = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[0] < w[1]);
        if !sorted(&self.u_nodes) || !sorted(&self.v_nodes) {
            return Err(SimpleError::Model(
                "tabulated nodes must be strictly increasing with at least two entries".into(),
            ));
        }
        let shape_ok = |g: &Vec<Vec<f64>>| {
            g.len() == self.u_nodes.len()
                && g.iter()
                    .all(|r| r.len() == self.v_nodes.len() && r.iter().all(|x| x.is_finite()))
        };
        if !shape_ok(&self.pressure_grid) || !self.entropy_grid.as_ref().map_or(true, shape_ok) {
            return Err(SimpleError::Model(
                "tabulated grids must be finite and match the node counts".into(),
            ));
        }
        Ok(())
    }

    fn cell(nodes: &[f64], x: f64) -> (usize, f64) {
        let i = nodes.partition_point(|&n| n <= x).clamp(1, nodes.len() - 1) - 1;
        (i, (x - nodes[i]) / (nodes[i + 1] - nodes[i]))
    }

    fn interpolate(&self, grid: &[Vec<f64>], u: f64, v: f64) -> f64 {
        let (i, s) = Self::cell(&self.u_nodes, u);
        let (j, t) = Self::cell(&self.v_nodes, v);
        let g = |a: usize, b: usize| grid[a][b];
        (1.0 - s) * (1.0 - t) * g(i, j)
            + s * (1.0 - t) * g(i + 1, j)
            + (1.0 - s) * t * g(i, j + 1)
            + s * t * g(i + 1, j + 1)
    }

    /// Largest difference quotient of the bilinear pressure, which bounds its
    /// Lipschitz constant in the max norm.
    pub fn lipschitz_bound(&self) -> f64 {
        let mut best: f64 = 0.0;
        let p = &self.pressure_grid;
        for i in 0..self.u_nodes.len() {
            for j in 0..self.v_nodes.len() {
                if i + 1 < self.u_nodes.len() {
                    let d = (p[i + 1][j] - p[i][j]).abs() / (self.u_nodes[i + 1] - self.u_nodes[i]);
                    best = best.max(d);
                }
                if j + 1 < self.v_nodes.len() {
                    let d = (p[i][j + 1] - p[i][j]).abs() / (self.v_nodes[j + 1] - self.v_nodes[j]);
                    best = best.max(d);
                }
            }
        }
        2.0 * best
    }
}

/// A simple system in coordinates `(U, V₁, …, Vₙ)`.
///
/// Built-in models have one work coordinate (volume). Entropies are given in
/// natural units with additive constants dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimpleSystemModel {
    /// Monatomic ideal gas: `P = 2U/(3V)`, `σ = n·ln(V·U^{3/2})`.
    IdealGas {
        #[serde(with = "serde_rational")]
        moles: Rational,
        #[serde(default)]
        domain: Option<Domain>,
    },
    /// Van der Waals gas with `P = (U + an²/V)/(3/2·(V − nb)) − an²/V²`
    /// and `σ = n·(3/2·ln(U + an²/V) + ln(V − nb))`.
    VanDerWaals {
        #[serde(with = "serde_rational")]
        moles: Rational,
        a: f64,
        b: f64,
        #[serde(default)]
        domain: Option<Domain>,
    },
    Tabulated(Tabulated),
    /// Adversary with `P = −k·√|U − u_c|`: not Lipschitz on `U = u_c`, so
    /// adiabats through that line are not unique. No entropy oracle.
    SqrtCusp {
        k: f64,
        u_c: f64,
        #[serde(default)]
        domain: Option<Domain>,
    },
    /// Adversary with convex `σ = U² + ln V`, so `P = 1/(2UV)`.
    NonConcave {
        #[serde(default)]
        domain: Option<Domain>,
    },
}

impl SimpleSystemModel {
    pub fn ideal_gas(moles: Rational) -> Self {
        SimpleSystemModel::IdealGas {
            moles,
            domain: None,
        }
    }

    /// Van der Waals gas with `a = 1`, `b = 1/10`.
    pub fn van_der_waals(moles: Rational) -> Self {
        SimpleSystemModel::VanDerWaals {
            moles,
            a: 1.0,
            b: 0.1,
            domain: None,
        }
    }

    pub fn sqrt_cusp() -> Self {
        SimpleSystemModel::SqrtCusp {
            k: 1.0,
            u_c: 5.0,
            domain: None,
        }
    }

    pub fn non_concave() -> Self {
        SimpleSystemModel::NonConcave { domain: None }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SimpleSystemModel::IdealGas { .. } => "ideal_gas",
            SimpleSystemModel::VanDerWaals { .. } => "van_der_waals",
            SimpleSystemModel::Tabulated(_) => "tabulated",
            SimpleSystemModel::SqrtCusp { .. } => "sqrt_cusp",
            SimpleSystemModel::NonConcave { .. } => "non_concave",
        }
    }

    /// Checks parameters; call once after deserializing.
    pub fn validate(&self) -> Result<(), SimpleError> {
        match self {
            SimpleSystemModel::IdealGas { moles, .. }
            | SimpleSystemModel::VanDerWaals { moles, .. }
                if *moles <= Rational::from_integer(0) =>
            {
                Err(SimpleError::Model("mole number must be positive".into()))
            }
            SimpleSystemModel::VanDerWaals { a, b, .. } if !(*a > 0.0 && *b > 0.0) => Err(
                SimpleError::Model("van der Waals a and b must be positive".into()),
            ),
            SimpleSystemModel::Tabulated(t) => t.validate(),
            SimpleSystemModel::SqrtCusp { k, .. } if !(*k > 0.0) => {
                Err(SimpleError::Model("k must be positive".into()))
            }
            _ => {
                let d = self.domain();
                if d.v.len() != self.work_dimension() {
                    return Err(SimpleError::Model(
                        "domain has the wrong number of work coordinates".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Number of work coordinates `n`.
    pub fn work_dimension(&self) -> usize {
        1
    }

    pub fn mole_number(&self) -> f64 {
        match self {
            SimpleSystemModel::IdealGas { moles, .. }
            | SimpleSystemModel::VanDerWaals { moles, .. } => to_f64(moles),
            _ => 1.0,
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            SimpleSystemModel::IdealGas { domain, .. } => domain.clone().unwrap_or(Domain {
                u: Interval::above(0.0),
                v: vec![Interval::above(0.0)],
            }),
            SimpleSystemModel::VanDerWaals {
                moles,
                a,
                b,
                domain,
            } => domain.clone().unwrap_or_else(|| {
                // In these bounds σ is strictly concave: the Hessian condition
                // u + a/v > 3a(v − b)²/v³ (per mole) holds with room to spare.
                let n = to_f64(moles);
                Domain {
                    u: Interval::above(0.3 * a * n / b),
                    v: vec![Interval::new(10.0 * b * n, 100.0 * b * n)],
                }
            }),
            SimpleSystemModel::Tabulated(t) => Domain {
                u: Interval::new(t.u_nodes[0], *t.u_nodes.last().expect("validated")),
                v: vec![Interval::new(
                    t.v_nodes[0],
                    *t.v_nodes.last().expect("validated"),
                )],
            },
            SimpleSystemModel::SqrtCusp { domain, .. } => domain.clone().unwrap_or(Domain {
                u: Interval::above(0.0),
                v: vec![Interval::above(0.0)],
            }),
            SimpleSystemModel::NonConcave { domain } => domain.clone().unwrap_or(Domain {
                u: Interval::above(0.5),
                v: vec![Interval::above(0.5)],
            }),
        }
    }

    /// Generalized pressures `P_i(U, V)`; no domain check.
    pub fn pressure_raw(&self, u: f64, v: &[f64]) -> Vec<f64> {
        let v0 = v[0];
        let p = match self {
            SimpleSystemModel::IdealGas { .. } => 2.0 * u / (3.0 * v0),
            SimpleSystemModel::VanDerWaals { moles, a, b, .. } => {
                let n = to_f64(moles);
                let an2 = a * n * n;
                (u + an2 / v0) / (1.5 * (v0 - n * b)) - an2 / (v0 * v0)
            }
            SimpleSystemModel::Tabulated(t) => t.interpolate(&t.pressure_grid, u, v0),
            SimpleSystemModel::SqrtCusp { k, u_c, .. } => -k * (u - u_c).abs().sqrt(),
            SimpleSystemModel::NonConcave { .. } => 1.0 / (2.0 * u * v0),
        };
        vec![p]
    }

    pub fn pressure(&self, x: &StatePoint) -> Result<Vec<f64>, SimpleError> {
        self.require_inside(x)?;
        Ok(self.pressure_raw(x.u, &x.v))
    }

    pub fn has_entropy(&self) -> bool {
        match self {
            SimpleSystemModel::Tabulated(t) => t.entropy_grid.is_some(),
            SimpleSystemModel::SqrtCusp { .. } => false,
            _ => true,
        }
    }

    /// Entropy oracle without a domain check; `None` if the model has none.
    pub fn entropy_raw(&self, u: f64, v: &[f64]) -> Option<f64> {
        let v0 = v[0];
        match self {
            SimpleSystemModel::IdealGas { moles, .. } => {
                Some(to_f64(moles) * (v0.ln() + 1.5 * u.ln()))
            }
            SimpleSystemModel::VanDerWaals { moles, a, b, .. } => {
                let n = to_f64(moles);
                Some(n * (1.5 * (u + a * n * n / v0).ln() + (v0 - n * b).ln()))
            }
            SimpleSystemModel::Tabulated(t) => {
                t.entropy_grid.as_ref().map(|g| t.interpolate(g, u, v0))
            }
            SimpleSystemModel::SqrtCusp { .. } => None,
            SimpleSystemModel::NonConcave { .. } => Some(u * u + v0.ln()),
        }
    }

    pub fn entropy(&self, x: &StatePoint) -> Result<f64, SimpleError> {
        self.require_inside(x)?;
        self.entropy_raw(x.u, &x.v).ok_or(SimpleError::NoOracle)
    }

    /// The scaled copy `Γ^(λ)`: states `λX`, with `σ_λ(λX) = λ·σ(X)` and
    /// `P_λ(λX) = P(X)`.
    pub fn scaled(&self, lambda: Rational) -> Result<Self, SimpleError> {
        if lambda <= Rational::from_integer(0) {
            return Err(SimpleError::Model("scale factor must be positive".into()));
        }
        let l = to_f64(&lambda);
        let scale_domain = |d: &Option<Domain>| {
            d.as_ref().map(|d| Domain {
                u: Interval::new(l * d.u.lo, l * d.u.hi),
                v: d.v
                    .iter()
                    .map(|i| Interval::new(l * i.lo, l * i.hi))
                    .collect(),
            })
        };
        Ok(match self {
            SimpleSystemModel::IdealGas { moles, domain } => SimpleSystemModel::IdealGas {
                moles: moles * lambda,
                domain: scale_domain(domain),
            },
            SimpleSystemModel::VanDerWaals {
                moles,
                a,
                b,
                domain,
            } => SimpleSystemModel::VanDerWaals {
                moles: moles * lambda,
                a: *a,
                b: *b,
                domain: scale_domain(domain),
            },
            SimpleSystemModel::Tabulated(t) => SimpleSystemModel::Tabulated(Tabulated {
                u_nodes: t.u_nodes.iter().map(|x| l * x).collect(),
                v_nodes: t.v_nodes.iter().map(|x| l * x).collect(),
                pressure_grid: t.pressure_grid.clone(),
                entropy_grid: t.entropy_grid.as_ref().map(|g| {
                    g.iter()
                        .map(|r| r.iter().map(|x| l * x).collect())
                        .collect()
                }),
            }),
            SimpleSystemModel::SqrtCusp { k, u_c, domain } => SimpleSystemModel::SqrtCusp {
                k: k / l.sqrt(),
                u_c: l * u_c,
                domain: scale_domain(domain),
            },
            SimpleSystemModel::NonConcave { .. } => {
                return Err(SimpleError::Model(
                    "the non-concave adversary has no scaled copies".into(),
                ))
            }
        })
    }

    pub fn contains(&self, x: &StatePoint) -> bool {
        self.domain().contains(x)
    }

    pub fn require_inside(&self, x: &StatePoint) -> Result<(), SimpleError> {
        if x.v.len() != self.work_dimension() {
            return Err(SimpleError::Dimension {
                expected: self.work_dimension(),
                found: x.v.len(),
            });
        }
        if self.contains(x) {
            Ok(())
        } else {
            Err(SimpleError::OutsideDomain(x.clone()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(u: f64, v: f64) -> StatePoint {
        StatePoint::new(u, vec![v])
    }

    fn fd_pressure(m: &SimpleSystemModel, u: f64, v: f64) -> f64 {
        let h = 1e-5;
        let su =
            (m.entropy_raw(u + h, &[v]).unwrap() - m.entropy_raw(u - h, &[v]).unwrap()) / (2.0 * h);
        let sv =
            (m.entropy_raw(u, &[v + h]).unwrap() - m.entropy_raw(u, &[v - h]).unwrap()) / (2.0 * h);
        sv / su
    }

    #[test]
    fn pressures_match_their_entropies() {
        for m in [
            SimpleSystemModel::ideal_gas(Rational::new(3, 2)),
            SimpleSystemModel::van_der_waals(Rational::from_integer(1)),
            SimpleSystemModel::van_der_waals(Rational::from_integer(2)),
            SimpleSystemModel::non_concave(),
        ] {
            let d = m.domain();
            let u = d.u.lo + 2.0;
            let v = d.v[0].lo + 0.7;
            let p = m.pressure_raw(u, &[v])[0];
            assert!(
                (p - fd_pressure(&m, u, v)).abs() < 1e-7 * p.abs().max(1.0),
                "{m:?}"
            );
        }
    }

    #[test]
    fn van_der_waals_is_concave_on_its_default_domain() {
        let m = SimpleSystemModel::van_der_waals(Rational::from_integer(1));
        let s = |u: f64, v: f64| m.entropy_raw(u, &[v]).unwrap();
        let h = 1e-3;
        for &u in &[3.01, 3.5, 5.0, 20.0] {
            for &v in &[1.01, 1.5, 3.0, 9.9] {
                let suu = (s(u + h, v) - 2.0 * s(u, v) + s(u - h, v)) / (h * h);
                let svv = (s(u, v + h) - 2.0 * s(u, v) + s(u, v - h)) / (h * h);
                let suv = (s(u + h, v + h) - s(u + h, v - h) - s(u - h, v + h) + s(u - h, v - h))
                    / (4.0 * h * h);
                assert!(suu < 0.0 && suu * svv - suv * suv > 0.0, "u={u} v={v}");
            }
        }
    }

    #[test]
    fn tabulated_reproduces_bilinear_data() {
        let m = SimpleSystemModel::Tabulated(Tabulated {
            u_nodes: vec![1.0, 2.0],
            v_nodes: vec![1.0, 3.0],
            pressure_grid: vec![vec![1.0, 3.0], vec![2.0, 6.0]],
            entropy_grid: None,
        });
        m.validate().unwrap();
        assert_eq!(m.pressure_raw(1.5, &[2.0])[0], 3.0);
        assert!(!m.has_entropy());
        assert!(m.entropy(&pt(1.5, 2.0)).is_err());
        assert!(m.pressure(&pt(2.0, 2.0)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"type":"ideal_gas","moles":"1"}"#;
        let m: SimpleSystemModel = serde_json::from_str(text).unwrap();
        assert_eq!(m, SimpleSystemModel::ideal_gas(Rational::from_integer(1)));
        let back: SimpleSystemModel =
            serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        let bounded = r#"{"type":"van_der_waals","moles":"1","a":1.0,"b":0.1,
                          "domain":{"u":[3.0,null],"v":[[1.0,10.0]]}}"#;
        let m: SimpleSystemModel = serde_json::from_str(bounded).unwrap();
        assert!(m.contains(&pt(1e9, 2.0)));
        assert!(!m.contains(&pt(4.0, 10.0)));
        assert!(serde_json::from_str::<SimpleSystemModel>(
            r#"{"type":"ideal_gas","moles":"1","x":1}"#
        )
        .is_err());
    }
}
