//! JSON relation documents.
//!
//! ```json
//! {
//!   "spaces": [{"id": "G", "composition": ["1"], "states": ["X", "Y"]}],
//!   "facts": [[[{"lambda": "1", "space": "G", "state": "X"}],
//!              [{"lambda": "1", "space": "G", "state": "Y"}]]],
//!   "lambda_grid": ["1/2", "1"],
//!   "epsilon_families": []
//! }
//! ```
//!
//! Every number is an exact rational string; floats are rejected.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::compound::CompoundState;
use super::relation::{AccessibilityRelation, EpsilonFamily, LambdaGrid};
use super::space::{SpaceRegistry, StateSpaceDecl};
use super::OrderError;
use crate::rational::{format_rational, parse_rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartDoc {
    pub lambda: String,
    pub space: String,
    pub state: String,
}

pub type CompoundDoc = Vec<PartDoc>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonFamilyDoc {
    pub x: CompoundDoc,
    pub y: CompoundDoc,
    pub z0: CompoundDoc,
    pub z1: CompoundDoc,
    pub epsilons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDoc {
    pub spaces: Vec<StateSpaceDecl>,
    #[serde(default)]
    pub facts: Vec<(CompoundDoc, CompoundDoc)>,
    pub lambda_grid: Vec<String>,
    #[serde(default)]
    pub epsilon_families: Vec<EpsilonFamilyDoc>,
}

impl RelationDoc {
    pub fn from_json(text: &str) -> Result<Self, OrderError> {
        serde_json::from_str(text).map_err(|e| OrderError::Document(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("relation documents always serialize")
    }

    /// Builds the (unclosed) relation the document describes.
    pub fn build(&self) -> Result<AccessibilityRelation, OrderError> {
        let registry = Arc::new(SpaceRegistry::new(self.spaces.clone())?);
        let grid = LambdaGrid::new(
            self.lambda_grid
                .iter()
                .map(|t| parse_rational(t).map_err(|e| OrderError::Document(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?,
        )?;
        let facts = self
            .facts
            .iter()
            .map(|(x, y)| Ok((compound(&registry, x)?, compound(&registry, y)?)))
            .collect::<Result<Vec<_>, OrderError>>()?;
        let families = self
            .epsilon_families
            .iter()
            .map(|f| {
                Ok(EpsilonFamily {
                    x: compound(&registry, &f.x)?,
                    y: compound(&registry, &f.y)?,
                    z0: compound(&registry, &f.z0)?,
                    z1: compound(&registry, &f.z1)?,
                    epsilons: f
                        .epsilons
                        .iter()
                        .map(|t| parse_rational(t).map_err(|e| OrderError::Document(e.to_string())))
                        .collect::<Result<_, _>>()?,
                })
            })
            .collect::<Result<Vec<_>, OrderError>>()?;
        Ok(AccessibilityRelation::build(registry, facts, grid)?.with_families(families))
    }
}

pub fn compound(registry: &SpaceRegistry, doc: &CompoundDoc) -> Result<CompoundState, OrderError> {
    let parts = doc
        .iter()
        .map(|p| {
            let lambda =
                parse_rational(&p.lambda).map_err(|e| OrderError::Document(e.to_string()))?;
            Ok((lambda, registry.state(&p.space, &p.state)?))
        })
        .collect::<Result<Vec<_>, OrderError>>()?;
    CompoundState::new(parts)
}

pub fn compound_doc(registry: &SpaceRegistry, c: &CompoundState) -> CompoundDoc {
    c.parts()
        .iter()
        .map(|p| PartDoc {
            lambda: format_rational(&p.lambda),
            space: registry.space_name(p.space).to_string(),
            state: registry.state_name(p.state_ref()).to_string(),
        })
        .collect()
}
