use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use super::infima::{Infima, Pair};
use super::{CalibrationError, ExtReal, StateSpaceGraph};
use crate::rational::format_big;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Difference constraints only: shortest-path potentials.
    Potentials,
    /// Composite spaces present: exact Fourier–Motzkin elimination.
    FourierMotzkin,
}

/// Additive constants `B(Γ)`: one gauge per connected component, composites
/// given by their linear combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdditiveConstants {
    #[serde(rename = "B", serialize_with = "ser_big_map")]
    pub b: BTreeMap<String, BigRational>,
    /// Component id of every base space.
    pub component: BTreeMap<String, usize>,
    /// Space fixed to `B = 0` in each component, by component id.
    pub gauges: Vec<String>,
    pub method: SolveMethod,
}

fn ser_big_map<S: Serializer>(m: &BTreeMap<String, BigRational>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k, format_big(v))))
}

/// `Σ coef·B ≤ rhs` over the base spaces, with the original constraints it
/// was derived from.
#[derive(Debug, Clone)]
struct Row {
    coef: Vec<BigRational>,
    rhs: BigRational,
    prov: BTreeSet<usize>,
}

/// Coefficients of `B(node)` in terms of the base spaces.
fn expansion(g: &StateSpaceGraph, node: usize) -> Vec<BigRational> {
    let mut c = vec![BigRational::zero(); g.len()];
    let n = &g.nodes()[node];
    if n.is_composite() {
        for (l, j) in &n.parts {
            c[*j] += l;
        }
    } else {
        c[node] = BigRational::one();
    }
    c
}

/// Constraints `B(Γ) − B(Γ') ≤ F(Γ, Γ')` for every finite `F`, and the pairs
/// they come from.
fn constraints(
    g: &StateSpaceGraph,
    inf: &Infima,
) -> Result<(Vec<Row>, Vec<Pair>), CalibrationError> {
    let unbounded: Vec<(String, String)> = (0..g.len())
        .flat_map(|i| (0..g.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            inf.f_exact.values[i][j] == ExtReal::NegInf || inf.f.values[i][j] == ExtReal::NegInf
        })
        .map(|(i, j)| (g.nodes()[i].id.clone(), g.nodes()[j].id.clone()))
        .collect();
    if !unbounded.is_empty() {
        return Err(CalibrationError::Sink(unbounded));
    }
    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..g.len() {
        for j in 0..g.len() {
            let Some(bound) = inf.f.values[i][j].finite() else {
                continue;
            };
            let coef: Vec<BigRational> = expansion(g, i)
                .into_iter()
                .zip(expansion(g, j))
                .map(|(a, b)| a - b)
                .collect();
            if coef.iter().all(Zero::is_zero) && !bound.is_negative() {
                continue;
            }
            let k = pairs.len();
            pairs.push(Pair {
                from: g.nodes()[i].id.clone(),
                to: g.nodes()[j].id.clone(),
            });
            rows.push(Row {
                coef,
                rhs: bound.clone(),
                prov: BTreeSet::from([k]),
            });
        }
    }
    Ok((rows, pairs))
}

fn components(g: &StateSpaceGraph, rows: &[Row]) -> Vec<usize> {
    let n = g.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for row in rows {
        let vars: Vec<usize> = (0..n).filter(|&k| !row.coef[k].is_zero()).collect();
        for w in vars.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    // Components numbered by their first (lexicographic) base space.
    let mut ids = BTreeMap::new();
    let mut out = vec![usize::MAX; n];
    for k in 0..n {
        if g.nodes()[k].is_composite() {
            continue;
        }
        let root = find(&mut parent, k);
        let next = ids.len();
        out[k] = *ids.entry(root).or_insert(next);
    }
    out
}

/// Finds `B` with `−F(Γ', Γ) ≤ B(Γ) − B(Γ') ≤ F(Γ, Γ')` for all finite `F`
/// and `B` of composites equal to the combination of their parts. Per
/// component the lexicographically first space is gauged to 0.
pub fn solve_additive_constants(
    g: &StateSpaceGraph,
    inf: &Infima,
) -> Result<AdditiveConstants, CalibrationError> {
    let (rows, pairs) = constraints(g, inf)?;
    let comp = components(g, &rows);
    let mut gauges: Vec<usize> = Vec::new();
    for k in 0..g.len() {
        if comp[k] != usize::MAX && comp[k] == gauges.len() {
            gauges.push(k);
        }
    }
    let pure = rows.iter().all(|r| {
        let nz: Vec<&BigRational> = r.coef.iter().filter(|c| !c.is_zero()).collect();
        nz.len() == 2
            && nz.iter().any(|c| c.is_one())
            && nz.iter().any(|c| **c == -BigRational::one())
    });
    let witness =
        |prov: &BTreeSet<usize>| prov.iter().map(|&k| pairs[k].clone()).collect::<Vec<_>>();
    let (values, method) = if pure {
        (
            potentials(g.len(), &rows, &comp, &gauges)
                .map_err(|p| CalibrationError::Infeasible(witness(&p)))?,
            SolveMethod::Potentials,
        )
    } else {
        (
            fourier_motzkin(g, &rows, &gauges)
                .map_err(|p| CalibrationError::Infeasible(witness(&p)))?,
            SolveMethod::FourierMotzkin,
        )
    };
    let mut b = BTreeMap::new();
    let mut component = BTreeMap::new();
    for (k, n) in g.nodes().iter().enumerate() {
        let value: BigRational = expansion(g, k)
            .iter()
            .zip(&values)
            .map(|(c, v)| c * v)
            .sum();
        b.insert(n.id.clone(), value);
        if !n.is_composite() {
            component.insert(n.id.clone(), comp[k]);
        }
    }
    Ok(AdditiveConstants {
        b,
        component,
        gauges: gauges.iter().map(|&k| g.nodes()[k].id.clone()).collect(),
        method,
    })
}

/// Bellman–Ford from a virtual source; `x_p − x_q ≤ w` is the edge `q → p`.
/// On a lowering cycle returns the constraints along it.
fn potentials(
    n: usize,
    rows: &[Row],
    comp: &[usize],
    gauges: &[usize],
) -> Result<Vec<BigRational>, BTreeSet<usize>> {
    let edges: Vec<(usize, usize, &BigRational, usize)> = rows
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let p = r.coef.iter().position(|c| c.is_one()).expect("pure row");
            let q = r
                .coef
                .iter()
                .position(|c| *c == -BigRational::one())
                .expect("pure row");
            (q, p, &r.rhs, k)
        })
        .collect();
    let mut dist = vec![BigRational::zero(); n];
    let mut pred: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut last_changed = None;
    for _ in 0..=n {
        last_changed = None;
        for &(q, p, w, k) in &edges {
            let cand = &dist[q] + w;
            if cand < dist[p] {
                dist[p] = cand;
                pred[p] = Some((q, k));
                last_changed = Some(p);
            }
        }
        if last_changed.is_none() {
            break;
        }
    }
    if let Some(mut v) = last_changed {
        for _ in 0..n {
            v = pred[v].expect("relaxed vertex has a predecessor").0;
        }
        let start = v;
        let mut cycle = BTreeSet::new();
        loop {
            let (q, k) = pred[v].expect("on the cycle");
            cycle.insert(k);
            v = q;
            if v == start {
                break;
            }
        }
        return Err(cycle);
    }
    Ok((0..n)
        .map(|k| {
            if comp[k] == usize::MAX {
                BigRational::zero()
            } else {
                &dist[k] - &dist[gauges[comp[k]]]
            }
        })
        .collect())
}

fn normalize(row: &mut Row) {
    if let Some(lead) = row.coef.iter().find(|c| !c.is_zero()).map(|c| c.abs()) {
        for c in row.coef.iter_mut() {
            *c /= &lead;
        }
        row.rhs /= &lead;
    }
}

fn dedupe(rows: Vec<Row>) -> Vec<Row> {
    let mut best: BTreeMap<Vec<BigRational>, Row> = BTreeMap::new();
    for r in rows {
        match best.get(&r.coef) {
            Some(old) if old.rhs <= r.rhs => {}
            _ => {
                best.insert(r.coef.clone(), r);
            }
        }
    }
    best.into_values().collect()
}

/// Exact Fourier–Motzkin elimination in lexicographic variable order, then
/// back-substitution: a free variable gets 0, a one-sided one its bound, a
/// two-sided one the midpoint. Gauges are fixed to 0 up front.
fn fourier_motzkin(
    g: &StateSpaceGraph,
    rows: &[Row],
    gauges: &[usize],
) -> Result<Vec<BigRational>, BTreeSet<usize>> {
    let n = g.len();
    let fixed: BTreeSet<usize> = gauges.iter().copied().collect();
    let order: Vec<usize> = (0..n)
        .filter(|k| !g.nodes()[*k].is_composite() && !fixed.contains(k))
        .collect();
    let mut current: Vec<Row> = rows
        .iter()
        .cloned()
        .map(|mut r| {
            for &k in &fixed {
                r.coef[k] = BigRational::zero();
            }
            normalize(&mut r);
            r
        })
        .collect();
    let infeasible = |rows: &[Row]| {
        rows.iter()
            .find(|r| r.coef.iter().all(Zero::is_zero) && r.rhs.is_negative())
            .map(|r| r.prov.clone())
    };
    if let Some(p) = infeasible(&current) {
        return Err(p);
    }
    let mut stages = Vec::with_capacity(order.len());
    for &k in &order {
        current = dedupe(current);
        stages.push(current.clone());
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in current {
            if r.coef[k].is_positive() {
                pos.push(r);
            } else if r.coef[k].is_negative() {
                neg.push(r);
            } else {
                rest.push(r);
            }
        }
        for p in &pos {
            for q in &neg {
                let (a, b) = (p.coef[k].clone(), -q.coef[k].clone());
                let mut r = Row {
                    coef: p
                        .coef
                        .iter()
                        .zip(&q.coef)
                        .map(|(x, y)| x * &b + y * &a)
                        .collect(),
                    rhs: &p.rhs * &b + &q.rhs * &a,
                    prov: p.prov.union(&q.prov).copied().collect(),
                };
                r.coef[k] = BigRational::zero();
                normalize(&mut r);
                rest.push(r);
            }
        }
        if let Some(p) = infeasible(&rest) {
            return Err(p);
        }
        current = rest;
    }
    let mut x = vec![BigRational::zero(); n];
    for (stage, &k) in stages.iter().zip(&order).rev() {
        let mut lo: Option<BigRational> = None;
        let mut hi: Option<BigRational> = None;
        for r in stage {
            let c = &r.coef[k];
            if c.is_zero() {
                continue;
            }
            let others: BigRational = (0..n).filter(|&m| m != k).map(|m| &r.coef[m] * &x[m]).sum();
            let bound = (&r.rhs - others) / c;
            if c.is_positive() {
                hi = Some(match hi {
                    Some(h) if h <= bound => h,
                    _ => bound,
                });
            } else {
                lo = Some(match lo {
                    Some(l) if l >= bound => l,
                    _ => bound,
                });
            }
        }
        x[k] = match (lo, hi) {
            (None, None) => BigRational::zero(),
            (Some(l), None) => l,
            (None, Some(h)) => h,
            (Some(l), Some(h)) => (l + h) / BigRational::from_integer(2.into()),
        };
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsCheck {
    pub constraints: usize,
    /// Largest `B(Γ) − B(Γ') − F(Γ, Γ')` (≤ 0 when satisfied).
    pub max_excess: f64,
    pub violations: Vec<Pair>,
    /// Composites whose `B` differs from the combination of their parts.
    pub nonlinear: Vec<String>,
}

impl ConstantsCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.nonlinear.is_empty()
    }
}

/// Re-checks every bound `B(Γ) − B(Γ') ≤ F(Γ, Γ')` (with slack `tol`) and the
/// exact linearity of composite constants.
pub fn check_constants(
    g: &StateSpaceGraph,
    inf: &Infima,
    consts: &AdditiveConstants,
    tol: f64,
) -> ConstantsCheck {
    let b = |k: usize| {
        consts
            .b
            .get(&g.nodes()[k].id)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    };
    let mut check = ConstantsCheck {
        constraints: 0,
        max_excess: f64::NEG_INFINITY,
        violations: Vec::new(),
        nonlinear: Vec::new(),
    };
    for i in 0..g.len() {
        for j in 0..g.len() {
            let Some(bound) = inf.f.values[i][j].finite() else {
                continue;
            };
            check.constraints += 1;
            let excess = crate::rational::big_to_f64(&(b(i) - b(j) - bound));
            check.max_excess = check.max_excess.max(excess);
            if excess > tol {
                check.violations.push(Pair {
                    from: g.nodes()[i].id.clone(),
                    to: g.nodes()[j].id.clone(),
                });
            }
        }
        let n = &g.nodes()[i];
        if n.is_composite() {
            let combo: BigRational = n.parts.iter().map(|(l, j)| l * b(*j)).sum();
            if combo != b(i) {
                check.nonlinear.push(n.id.clone());
            }
        }
    }
    check
}
