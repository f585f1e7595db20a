use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::OrderError;
use crate::rational::{serde_rational_vec, Rational};

/// Declaration of one state space: an identifier, its element composition and
/// the finite list of states the engine knows about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpaceDecl {
    pub id: String,
    #[serde(with = "serde_rational_vec", default)]
    pub composition: Vec<Rational>,
    pub states: Vec<String>,
}

impl StateSpaceDecl {
    pub fn new(id: impl Into<String>, composition: Vec<Rational>, states: &[&str]) -> Self {
        Self {
            id: id.into(),
            composition,
            states: states.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Index of a space inside a [`SpaceRegistry`]. Spaces are indexed in
/// lexicographic order of their identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpaceIx(pub usize);

/// A state of a declared space: space index plus position in the declared state list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateRef {
    pub space: SpaceIx,
    pub state: usize,
}

/// Validated collection of state spaces with name lookup.
///
/// When no space declares a composition, every space receives its own implicit
/// element tag, so distinct spaces (and differently scaled copies of one space)
/// never compare.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceRegistry {
    spaces: Vec<StateSpaceDecl>,
    compositions: Vec<Vec<Rational>>,
    by_id: HashMap<String, SpaceIx>,
    states_by_id: Vec<HashMap<String, usize>>,
    implicit_tags: bool,
}

impl SpaceRegistry {
    pub fn new(decls: Vec<StateSpaceDecl>) -> Result<Self, OrderError> {
        let mut spaces = decls;
        spaces.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in spaces.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(OrderError::DuplicateSpace(pair[0].id.clone()));
            }
        }

        let implicit_tags = spaces.iter().all(|s| s.composition.is_empty());
        let width = spaces.first().map(|s| s.composition.len()).unwrap_or(0);
        let mut compositions = Vec::with_capacity(spaces.len());
        for (i, space) in spaces.iter().enumerate() {
            if implicit_tags {
                let mut tag = vec![Rational::zero(); spaces.len()];
                tag[i] = Rational::one();
                compositions.push(tag);
                continue;
            }
            if space.composition.len() != width {
                return Err(OrderError::CompositionLength {
                    space: space.id.clone(),
                    expected: width,
                    found: space.composition.len(),
                });
            }
            if space.composition.iter().any(|c| c.is_negative()) {
                return Err(OrderError::NegativeComposition(space.id.clone()));
            }
            compositions.push(space.composition.clone());
        }

        let mut by_id = HashMap::new();
        let mut states_by_id = Vec::with_capacity(spaces.len());
        for (i, space) in spaces.iter().enumerate() {
            by_id.insert(space.id.clone(), SpaceIx(i));
            let mut states = HashMap::new();
            for (j, state) in space.states.iter().enumerate() {
                if states.insert(state.clone(), j).is_some() {
                    return Err(OrderError::DuplicateState {
                        space: space.id.clone(),
                        state: state.clone(),
                    });
                }
            }
            states_by_id.push(states);
        }

        Ok(Self {
            spaces,
            compositions,
            by_id,
            states_by_id,
            implicit_tags,
        })
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    pub fn uses_implicit_tags(&self) -> bool {
        self.implicit_tags
    }

    pub fn element_count(&self) -> usize {
        self.compositions.first().map(Vec::len).unwrap_or(0)
    }

    pub fn decl(&self, space: SpaceIx) -> &StateSpaceDecl {
        &self.spaces[space.0]
    }

    pub fn decls(&self) -> &[StateSpaceDecl] {
        &self.spaces
    }

    pub fn space_ids(&self) -> impl Iterator<Item = SpaceIx> + '_ {
        (0..self.spaces.len()).map(SpaceIx)
    }

    pub fn space(&self, id: &str) -> Result<SpaceIx, OrderError> {
        self.by_id
            .get(id)
            .copied()
            .ok_or_else(|| OrderError::UnknownSpace(id.to_string()))
    }

    pub fn state(&self, space: &str, state: &str) -> Result<StateRef, OrderError> {
        let s = self.space(space)?;
        self.state_in(s, state)
    }

    pub fn state_in(&self, space: SpaceIx, state: &str) -> Result<StateRef, OrderError> {
        self.states_by_id[space.0]
            .get(state)
            .map(|&j| StateRef { space, state: j })
            .ok_or_else(|| OrderError::UnknownState {
                space: self.spaces[space.0].id.clone(),
                state: state.to_string(),
            })
    }

    pub fn states_of(&self, space: SpaceIx) -> impl Iterator<Item = StateRef> + '_ {
        (0..self.spaces[space.0].states.len()).map(move |state| StateRef { space, state })
    }

    pub fn all_states(&self) -> impl Iterator<Item = StateRef> + '_ {
        self.space_ids().flat_map(move |s| self.states_of(s))
    }

    pub fn composition(&self, space: SpaceIx) -> &[Rational] {
        &self.compositions[space.0]
    }

    pub fn space_name(&self, space: SpaceIx) -> &str {
        &self.spaces[space.0].id
    }

    pub fn state_name(&self, state: StateRef) -> &str {
        &self.spaces[state.space.0].states[state.state]
    }

    /// `space:state`, used in witnesses and reports.
    pub fn label(&self, state: StateRef) -> String {
        format!(
            "{}:{}",
            self.space_name(state.space),
            self.state_name(state)
        )
    }
}
