use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::CalibrationError;
use crate::rational::{serde_big, serde_big_vec};

fn default_max_chain() -> usize {
    4
}

/// Graph instance as loaded from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub spaces: Vec<SpaceSpec>,
    /// One-step facts `X ≺ Y` between states of (possibly different) spaces.
    #[serde(default)]
    pub facts: Vec<(StateKey, StateKey)>,
    /// Auxiliary spaces `Γ₀` tried in the `F` infimum; the products
    /// `Γ × Γ₀` must be declared as composite spaces.
    #[serde(default)]
    pub catalysts: Vec<String>,
    /// Longest chain (in edges) for the `E` infimum.
    #[serde(default = "default_max_chain")]
    pub max_chain: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub id: String,
    /// Amount of each element; may be omitted for composites.
    #[serde(default, with = "serde_big_vec")]
    pub composition: Vec<BigRational>,
    /// Non-empty for a composite `Γ₁^(λ₁) × Γ₂^(λ₂) × …`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<PartSpec>,
    /// Multiplicatively calibrated entropy table.
    pub states: Vec<StateEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartSpec {
    #[serde(with = "serde_big")]
    pub lambda: BigRational,
    pub space: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub id: String,
    #[serde(rename = "S", with = "serde_big")]
    pub s: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateKey {
    pub space: String,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub composition: Vec<BigRational>,
    /// `(λ, base space index)`; empty for base spaces.
    pub parts: Vec<(BigRational, usize)>,
    pub states: Vec<StateEntry>,
}

impl Node {
    pub fn is_composite(&self) -> bool {
        !self.parts.is_empty()
    }
}

/// Validated graph: spaces sorted by id, facts deduplicated and indexed as
/// `(space, state, space, state)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceGraph {
    nodes: Vec<Node>,
    index: BTreeMap<String, usize>,
    facts: BTreeSet<(usize, usize, usize, usize)>,
    catalysts: Vec<usize>,
    products: BTreeMap<Vec<(usize, BigRational)>, usize>,
    pub max_chain: usize,
}

impl StateSpaceGraph {
    pub fn from_spec(spec: &GraphSpec) -> Result<Self, CalibrationError> {
        let invalid = |m: String| CalibrationError::Invalid(m);
        let mut specs: Vec<&SpaceSpec> = spec.spaces.iter().collect();
        specs.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = BTreeMap::new();
        for (i, s) in specs.iter().enumerate() {
            if index.insert(s.id.clone(), i).is_some() {
                return Err(invalid(format!("duplicate space `{}`", s.id)));
            }
            if s.states.is_empty() {
                return Err(invalid(format!("space `{}` has no states", s.id)));
            }
            let mut seen = BTreeSet::new();
            if let Some(dup) = s.states.iter().find(|e| !seen.insert(&e.id)) {
                return Err(invalid(format!(
                    "duplicate state `{}` in `{}`",
                    dup.id, s.id
                )));
            }
        }
        let width = specs
            .iter()
            .filter(|s| s.parts.is_empty())
            .map(|s| s.composition.len())
            .max()
            .unwrap_or(0);
        let mut nodes: Vec<Node> = Vec::with_capacity(specs.len());
        for s in &specs {
            if !s.parts.is_empty() {
                nodes.push(Node {
                    id: s.id.clone(),
                    composition: Vec::new(),
                    parts: Vec::new(),
                    states: s.states.clone(),
                });
                continue;
            }
            let composition = if s.composition.is_empty() {
                vec![BigRational::zero(); width]
            } else if s.composition.len() == width {
                s.composition.clone()
            } else {
                return Err(invalid(format!(
                    "composition of `{}` has the wrong length",
                    s.id
                )));
            };
            if composition.iter().any(|c| *c < BigRational::zero()) {
                return Err(invalid(format!("negative composition in `{}`", s.id)));
            }
            nodes.push(Node {
                id: s.id.clone(),
                composition,
                parts: Vec::new(),
                states: s.states.clone(),
            });
        }
        // Composites: resolve parts against base spaces.
        let mut products = BTreeMap::new();
        for (i, s) in specs.iter().enumerate() {
            if s.parts.is_empty() {
                continue;
            }
            let mut merged: BTreeMap<usize, BigRational> = BTreeMap::new();
            for p in &s.parts {
                let j = *index
                    .get(&p.space)
                    .ok_or_else(|| CalibrationError::UnknownSpace(p.space.clone()))?;
                if specs[j].parts.len() > 0 {
                    return Err(invalid(format!(
                        "composite `{}` has a composite part",
                        s.id
                    )));
                }
                if p.lambda <= BigRational::zero() {
                    return Err(invalid(format!("non-positive scale in `{}`", s.id)));
                }
                *merged.entry(j).or_insert_with(BigRational::zero) += &p.lambda;
            }
            let mut composition = vec![BigRational::zero(); width];
            for (j, l) in &merged {
                for (c, x) in composition.iter_mut().zip(&nodes[*j].composition) {
                    *c += l * x;
                }
            }
            if !s.composition.is_empty() && s.composition != composition {
                return Err(invalid(format!(
                    "declared composition of `{}` differs from its parts",
                    s.id
                )));
            }
            let parts: Vec<(BigRational, usize)> =
                merged.iter().map(|(j, l)| (l.clone(), *j)).collect();
            products.insert(merged.into_iter().collect::<Vec<_>>(), i);
            nodes[i].composition = composition;
            nodes[i].parts = parts;
        }
        let state_ix = |k: &StateKey| -> Result<(usize, usize), CalibrationError> {
            let i = *index
                .get(&k.space)
                .ok_or_else(|| CalibrationError::UnknownSpace(k.space.clone()))?;
            let j = nodes[i]
                .states
                .iter()
                .position(|e| e.id == k.state)
                .ok_or_else(|| CalibrationError::UnknownState {
                    space: k.space.clone(),
                    state: k.state.clone(),
                })?;
            Ok((i, j))
        };
        let mut facts = BTreeSet::new();
        for (x, y) in &spec.facts {
            let (a, b) = (state_ix(x)?, state_ix(y)?);
            if nodes[a.0].composition != nodes[b.0].composition {
                return Err(CalibrationError::CompositionMismatch {
                    from: format!("{}:{}", x.space, x.state),
                    to: format!("{}:{}", y.space, y.state),
                });
            }
            facts.insert((a.0, a.1, b.0, b.1));
        }
        let catalysts = spec
            .catalysts
            .iter()
            .map(|c| {
                index
                    .get(c)
                    .copied()
                    .ok_or_else(|| CalibrationError::UnknownSpace(c.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            nodes,
            index,
            facts,
            catalysts,
            products,
            max_chain: spec.max_chain.max(1),
        })
    }

    /// Instance whose facts are all pairs `X ≺ Y` of equal composition with
    /// `S(X) + B(Γ) ≤ S(Y) + B(Γ')`, for the given per-space constants (a
    /// composite's constant is the combination of its parts').
    pub fn complete_from_entropy(
        spaces: Vec<SpaceSpec>,
        b: &BTreeMap<String, BigRational>,
        catalysts: Vec<String>,
        max_chain: usize,
    ) -> Result<Self, CalibrationError> {
        let bare = GraphSpec {
            spaces,
            facts: Vec::new(),
            catalysts,
            max_chain,
        };
        let mut graph = Self::from_spec(&bare)?;
        let constant = |i: usize| -> Result<BigRational, CalibrationError> {
            let n = &graph.nodes[i];
            if n.is_composite() {
                let mut total = BigRational::zero();
                for (l, j) in &n.parts {
                    let id = &graph.nodes[*j].id;
                    total += l * b
                        .get(id)
                        .ok_or_else(|| CalibrationError::UnknownSpace(id.clone()))?;
                }
                Ok(total)
            } else {
                b.get(&n.id)
                    .cloned()
                    .ok_or_else(|| CalibrationError::UnknownSpace(n.id.clone()))
            }
        };
        let consts = (0..graph.nodes.len())
            .map(constant)
            .collect::<Result<Vec<_>, _>>()?;
        let mut facts = BTreeSet::new();
        for (i, ni) in graph.nodes.iter().enumerate() {
            for (j, nj) in graph.nodes.iter().enumerate() {
                if ni.composition != nj.composition {
                    continue;
                }
                for (x, ex) in ni.states.iter().enumerate() {
                    for (y, ey) in nj.states.iter().enumerate() {
                        if &ex.s + &consts[i] <= &ey.s + &consts[j] {
                            facts.insert((i, x, j, y));
                        }
                    }
                }
            }
        }
        graph.facts = facts;
        Ok(graph)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn facts(&self) -> impl Iterator<Item = &(usize, usize, usize, usize)> {
        self.facts.iter()
    }

    pub fn catalysts(&self) -> &[usize] {
        &self.catalysts
    }

    /// The declared composite `Γ × Γ₀`, if any.
    pub fn product(&self, space: usize, catalyst: usize) -> Option<usize> {
        if self.nodes[space].is_composite() || self.nodes[catalyst].is_composite() {
            return None;
        }
        let key = if space == catalyst {
            vec![(space, BigRational::from_integer(2.into()))]
        } else {
            let mut k = vec![(space, BigRational::one()), (catalyst, BigRational::one())];
            k.sort();
            k
        };
        self.products.get(&key).copied()
    }

    /// Entropy of a state.
    pub fn entropy(&self, space: usize, state: usize) -> &BigRational {
        &self.nodes[space].states[state].s
    }

    /// Back to the JSON form, with facts listed in index order.
    pub fn to_spec(&self) -> GraphSpec {
        let key = |i: usize, x: usize| StateKey {
            space: self.nodes[i].id.clone(),
            state: self.nodes[i].states[x].id.clone(),
        };
        GraphSpec {
            spaces: self
                .nodes
                .iter()
                .map(|n| SpaceSpec {
                    id: n.id.clone(),
                    composition: n.composition.clone(),
                    parts: n
                        .parts
                        .iter()
                        .map(|(l, j)| PartSpec {
                            lambda: l.clone(),
                            space: self.nodes[*j].id.clone(),
                        })
                        .collect(),
                    states: n.states.clone(),
                })
                .collect(),
            facts: self
                .facts
                .iter()
                .map(|&(i, x, j, y)| (key(i, x), key(j, y)))
                .collect(),
            catalysts: self
                .catalysts
                .iter()
                .map(|&c| self.nodes[c].id.clone())
                .collect(),
            max_chain: self.max_chain,
        }
    }
}
