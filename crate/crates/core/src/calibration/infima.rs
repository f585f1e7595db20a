use std::collections::{BTreeMap, VecDeque};

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Serialize, Serializer};

use super::{CalibrationError, ExtReal, StateSpaceGraph};

/// Square matrix over the graph's spaces, serialized as
/// `{from: {to: value}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub spaces: Vec<String>,
    pub values: Vec<Vec<ExtReal>>,
}

impl Matrix {
    fn filled(g: &StateSpaceGraph, x: ExtReal) -> Self {
        Self {
            spaces: g.nodes().iter().map(|n| n.id.clone()).collect(),
            values: vec![vec![x; g.len()]; g.len()],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &ExtReal {
        &self.values[i][j]
    }

    pub fn by_id(&self, from: &str, to: &str) -> Option<&ExtReal> {
        let i = self.spaces.iter().position(|s| s == from)?;
        let j = self.spaces.iter().position(|s| s == to)?;
        Some(&self.values[i][j])
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, BTreeMap<&str, &ExtReal>> = self
            .spaces
            .iter()
            .zip(&self.values)
            .map(|(from, row)| {
                (
                    from.as_str(),
                    self.spaces.iter().map(String::as_str).zip(row).collect(),
                )
            })
            .collect();
        map.serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Pair {
    pub from: String,
    pub to: String,
}

impl Pair {
    fn of(g: &StateSpaceGraph, i: usize, j: usize) -> Self {
        Pair {
            from: g.nodes()[i].id.clone(),
            to: g.nodes()[j].id.clone(),
        }
    }
}

/// `D(Γ, Γ') = min{S(Y) − S(X) : X ≺ Y}` over the declared one-step facts and
/// the reflexive pairs; `+∞` without any.
pub fn compute_d(g: &StateSpaceGraph) -> Matrix {
    let mut d = Matrix::filled(g, ExtReal::PosInf);
    for i in 0..g.len() {
        d.values[i][i] = ExtReal::zero();
    }
    for &(i, x, j, y) in g.facts() {
        let diff = ExtReal::Finite(g.entropy(j, y) - g.entropy(i, x));
        if diff < d.values[i][j] {
            d.values[i][j] = diff;
        }
    }
    d
}

/// Chain infima `E(Γ, Γ')`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainInfima {
    pub max_chain: usize,
    /// Minimum over chains of at most `max_chain` edges.
    pub value: Matrix,
    /// The value is unchanged at `max_chain + 1` and `max_chain + 2` edges.
    pub stable: BTreeMap<String, BTreeMap<String, bool>>,
    /// Infimum over chains of any length (`−∞` when a lowering cycle lies on a
    /// connecting chain).
    pub exact: Matrix,
}

fn extend(prev: &Matrix, d: &Matrix) -> Matrix {
    let n = prev.len();
    let mut next = prev.clone();
    for i in 0..n {
        for m in 0..n {
            if !prev.values[i][m].is_finite() {
                continue;
            }
            for j in 0..n {
                if !d.values[m][j].is_finite() {
                    continue;
                }
                let cand = prev.values[i][m].plus(&d.values[m][j]);
                if cand < next.values[i][j] {
                    next.values[i][j] = cand;
                }
            }
        }
    }
    next
}

/// Exact shortest chains with lowering-cycle detection (Floyd–Warshall).
fn exact_infima(d: &Matrix) -> Matrix {
    let n = d.len();
    let mut dist = d.clone();
    for k in 0..n {
        for i in 0..n {
            if !dist.values[i][k].is_finite() {
                continue;
            }
            for j in 0..n {
                if !dist.values[k][j].is_finite() {
                    continue;
                }
                let cand = dist.values[i][k].plus(&dist.values[k][j]);
                if cand < dist.values[i][j] {
                    dist.values[i][j] = cand;
                }
            }
        }
    }
    let lowering: Vec<usize> = (0..n)
        .filter(|&k| dist.values[k][k].cmp_finite(&BigRational::zero()).is_lt())
        .collect();
    let mut out = dist.clone();
    for i in 0..n {
        for j in 0..n {
            if lowering
                .iter()
                .any(|&k| dist.values[i][k].is_finite() && dist.values[k][j].is_finite())
            {
                out.values[i][j] = ExtReal::NegInf;
            }
        }
    }
    out
}

/// `E(Γ, Γ')`: shortest chains of finite-`D` edges.
pub fn compute_e(d: &Matrix, max_chain: usize) -> ChainInfima {
    let max_chain = max_chain.max(1);
    let mut levels = vec![d.clone()];
    for _ in 1..max_chain + 2 {
        let next = extend(levels.last().expect("non-empty"), d);
        levels.push(next);
    }
    let (value, plus1, plus2) = (
        &levels[max_chain - 1],
        &levels[max_chain],
        &levels[max_chain + 1],
    );
    let mut stable = BTreeMap::new();
    for (i, from) in d.spaces.iter().enumerate() {
        let row: BTreeMap<String, bool> = d
            .spaces
            .iter()
            .enumerate()
            .map(|(j, to)| {
                let v = &value.values[i][j];
                (
                    to.clone(),
                    *v == plus1.values[i][j] && *v == plus2.values[i][j],
                )
            })
            .collect();
        stable.insert(from.clone(), row);
    }
    ChainInfima {
        max_chain,
        value: value.clone(),
        stable,
        exact: exact_infima(d),
    }
}

/// `D`, `E` and the catalyzed infima `F`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Infima {
    #[serde(rename = "D")]
    pub d: Matrix,
    #[serde(rename = "E")]
    pub e: ChainInfima,
    /// `F = min(E(Γ, Γ'), min over catalysts E(Γ×Γ₀, Γ'×Γ₀))`.
    #[serde(rename = "F")]
    pub f: Matrix,
    /// `F` built from the exact chain infima.
    #[serde(rename = "F_exact")]
    pub f_exact: Matrix,
    /// Catalyst realizing `F` where it beats `E`.
    pub catalyst: BTreeMap<String, BTreeMap<String, String>>,
}

impl Infima {
    pub fn compute(g: &StateSpaceGraph) -> Self {
        let d = compute_d(g);
        let e = compute_e(&d, g.max_chain);
        compute_f(g, d, e)
    }
}

/// Adds the catalyst catalog to the chain infima.
pub fn compute_f(g: &StateSpaceGraph, d: Matrix, e: ChainInfima) -> Infima {
    let mut f = e.value.clone();
    let mut f_exact = e.exact.clone();
    let mut catalyst: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    for i in 0..g.len() {
        for j in 0..g.len() {
            for &c in g.catalysts() {
                let (Some(p), Some(q)) = (g.product(i, c), g.product(j, c)) else {
                    continue;
                };
                if e.value.values[p][q] < f.values[i][j] {
                    f.values[i][j] = e.value.values[p][q].clone();
                    catalyst
                        .entry(g.nodes()[i].id.clone())
                        .or_default()
                        .insert(g.nodes()[j].id.clone(), g.nodes()[c].id.clone());
                }
                if e.exact.values[p][q] < f_exact.values[i][j] {
                    f_exact.values[i][j] = e.exact.values[p][q].clone();
                }
            }
        }
    }
    Infima {
        d,
        e,
        f,
        f_exact,
        catalyst,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReverseBoundViolation {
    pub from: String,
    pub to: String,
    pub forward: ExtReal,
    pub backward: ExtReal,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SinkReport {
    /// `F(Γ, Γ')` finite but `F(Γ', Γ) = +∞`.
    pub one_way: Vec<Pair>,
    /// `F(Γ, Γ') = −∞` over unbounded chains.
    pub unbounded: Vec<Pair>,
    /// Finite pairs with `−F(Γ', Γ) > F(Γ, Γ')`.
    pub reverse_bound: Vec<ReverseBoundViolation>,
    /// Spaces with `E(Γ, Γ) < 0`.
    pub lowering_cycles: Vec<String>,
}

impl SinkReport {
    pub fn passed(&self) -> bool {
        self.one_way.is_empty()
            && self.unbounded.is_empty()
            && self.reverse_bound.is_empty()
            && self.lowering_cycles.is_empty()
    }
}

/// Absence of sinks: symmetric finiteness of `F`, no unbounded-below
/// infima, `−F(Γ', Γ) ≤ F(Γ, Γ')` and no entropy-lowering cycles.
pub fn check_no_sinks(g: &StateSpaceGraph, inf: &Infima) -> SinkReport {
    let mut r = SinkReport::default();
    let f = &inf.f;
    for i in 0..g.len() {
        if inf.e.value.values[i][i]
            .cmp_finite(&BigRational::zero())
            .is_lt()
        {
            r.lowering_cycles.push(g.nodes()[i].id.clone());
        }
        for j in 0..g.len() {
            if inf.f_exact.values[i][j] == ExtReal::NegInf {
                r.unbounded.push(Pair::of(g, i, j));
            }
            let (fw, bw) = (&f.values[i][j], &f.values[j][i]);
            if fw.is_finite() && *bw == ExtReal::PosInf {
                r.one_way.push(Pair::of(g, i, j));
            }
            if i <= j
                && fw.is_finite()
                && bw.is_finite()
                && fw.plus(bw).cmp_finite(&BigRational::zero()).is_lt()
            {
                r.reverse_bound.push(ReverseBoundViolation {
                    from: g.nodes()[i].id.clone(),
                    to: g.nodes()[j].id.clone(),
                    forward: fw.clone(),
                    backward: bw.clone(),
                });
            }
        }
    }
    r
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gap {
    /// `−F(Γ', Γ) = F(Γ, Γ')`: the difference of constants is pinned.
    NoGap,
    /// `−F(Γ', Γ) < F(Γ, Γ')` with the given width.
    Gap {
        #[serde(with = "crate::rational::serde_big")]
        width: BigRational,
    },
    /// `F(Γ, Γ') + F(Γ', Γ) < 0`, which the absence of sinks excludes.
    Inconsistent {
        #[serde(with = "crate::rational::serde_big")]
        width: BigRational,
    },
}

/// Width `F(Γ, Γ') + F(Γ', Γ)` of the admissible interval for `B(Γ) − B(Γ')`.
pub fn detect_gap(
    g: &StateSpaceGraph,
    f: &Matrix,
    i: usize,
    j: usize,
) -> Result<Gap, CalibrationError> {
    let (Some(a), Some(b)) = (f.values[i][j].finite(), f.values[j][i].finite()) else {
        return Err(CalibrationError::NotFinite {
            from: g.nodes()[i].id.clone(),
            to: g.nodes()[j].id.clone(),
        });
    };
    let width = a + b;
    Ok(if width.is_zero() {
        Gap::NoGap
    } else if width > BigRational::zero() {
        Gap::Gap { width }
    } else {
        Gap::Inconsistent { width }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccessibilityMismatch {
    pub x: (String, String),
    pub y: (String, String),
    pub accessible: bool,
    pub predicted: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AccessibilityReport {
    pub checked: usize,
    pub accessible: usize,
    pub mismatches: Vec<AccessibilityMismatch>,
}

impl AccessibilityReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// `X ≺ Y ⟺ S(X) + F(Γ, Γ') ≤ S(Y)` over all state pairs, against the
/// reflexive-transitive closure of the declared facts.
pub fn verify_accessibility_criterion(g: &StateSpaceGraph, f: &Matrix) -> AccessibilityReport {
    let mut offset = Vec::with_capacity(g.len());
    let mut total = 0;
    for n in g.nodes() {
        offset.push(total);
        total += n.states.len();
    }
    let mut adj = vec![Vec::new(); total];
    for &(i, x, j, y) in g.facts() {
        adj[offset[i] + x].push(offset[j] + y);
    }
    let mut report = AccessibilityReport::default();
    let label = |i: usize, x: usize| (g.nodes()[i].id.clone(), g.nodes()[i].states[x].id.clone());
    for (i, ni) in g.nodes().iter().enumerate() {
        for x in 0..ni.states.len() {
            let start = offset[i] + x;
            let mut seen = vec![false; total];
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(k) = queue.pop_front() {
                for &m in &adj[k] {
                    if !seen[m] {
                        seen[m] = true;
                        queue.push_back(m);
                    }
                }
            }
            let sx = g.entropy(i, x);
            for (j, nj) in g.nodes().iter().enumerate() {
                for y in 0..nj.states.len() {
                    let accessible = seen[offset[j] + y];
                    let predicted = ExtReal::Finite(sx.clone()).plus(&f.values[i][j])
                        <= ExtReal::Finite(g.entropy(j, y).clone());
                    report.checked += 1;
                    report.accessible += accessible as usize;
                    if accessible != predicted {
                        report.mismatches.push(AccessibilityMismatch {
                            x: label(i, x),
                            y: label(j, y),
                            accessible,
                            predicted,
                        });
                    }
                }
            }
        }
    }
    report
}
