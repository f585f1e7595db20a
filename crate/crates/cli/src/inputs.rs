//! Loading of the input files a pipeline refers to.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use entropy_core::calibration::{GraphSpec, StateSpaceGraph};
use entropy_core::order::spec::RelationDoc;
use entropy_core::order::{OracleRelation, SpaceRegistry, StateSpaceDecl};
use entropy_core::simple::{SimpleSystemModel, StatePoint};

use crate::spec::{parse_json, read_file, PipelineSpec};
use crate::InputError;

/// Entropy oracle of a simple-system model, evaluated at named states.
///
/// ```json
/// {"space": "gas", "model": {"type": "ideal_gas", "moles": "1"},
///  "grid": {"u": [1.0, 1.25], "v": [1.0, 2.0]}}
/// ```
///
/// Grid states are named `u{i}v{j}`; explicit `states` may be listed as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleDoc {
    pub space: String,
    pub model: SimpleSystemModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<OracleGrid>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<OracleState>,
}

/// Tensor grid over `U` and a single work coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleGrid {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleState {
    pub id: String,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
}

/// An oracle relation together with the values it was built from.
pub(crate) struct LoadedOracle {
    pub relation: OracleRelation,
    pub names: Vec<String>,
    pub sigma: Vec<f64>,
    pub space: String,
}

impl OracleDoc {
    pub(crate) fn load(&self) -> Result<LoadedOracle, InputError> {
        self.model
            .validate()
            .map_err(|e| InputError::Invalid(format!("oracle model: {e}")))?;
        if !self.model.has_entropy() {
            return Err(InputError::Invalid(format!(
                "oracle model `{}` has no entropy function",
                self.model.kind()
            )));
        }
        let mut named: Vec<(String, StatePoint)> = Vec::new();
        if let Some(g) = &self.grid {
            for (i, u) in g.u.iter().enumerate() {
                for (j, v) in g.v.iter().enumerate() {
                    named.push((format!("u{i}v{j}"), StatePoint::new(*u, vec![*v])));
                }
            }
        }
        named.extend(
            self.states
                .iter()
                .map(|s| (s.id.clone(), StatePoint::new(s.u, s.v.clone()))),
        );
        if named.is_empty() {
            return Err(InputError::Invalid("oracle lists no states".into()));
        }
        let sigma = named
            .iter()
            .map(|(id, p)| {
                self.model
                    .entropy(p)
                    .map_err(|e| InputError::Invalid(format!("oracle state `{id}`: {e}")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let names: Vec<String> = named.into_iter().map(|(id, _)| id).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let registry = SpaceRegistry::new(vec![StateSpaceDecl::new(self.space.clone(), vec![], &refs)])
            .map_err(|e| InputError::Invalid(format!("oracle: {e}")))?;
        let relation = OracleRelation::new(Arc::new(registry), vec![sigma.clone()])
            .map_err(|e| InputError::Invalid(format!("oracle: {e}")))?;
        Ok(LoadedOracle {
            relation,
            names,
            sigma,
            space: self.space.clone(),
        })
    }
}

pub(crate) fn load_relation(path: &Path) -> Result<RelationDoc, InputError> {
    let doc: RelationDoc = parse_json(path, &read_file(path)?)?;
    doc.build()
        .map_err(|e| InputError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(doc)
}

pub(crate) fn load_oracle(path: &Path) -> Result<LoadedOracle, InputError> {
    let doc: OracleDoc = parse_json(path, &read_file(path)?)?;
    doc.load()
        .map_err(|e| InputError::Invalid(format!("{}: {e}", path.display())))
}

pub(crate) fn load_model(path: &Path) -> Result<SimpleSystemModel, InputError> {
    let model: SimpleSystemModel = parse_json(path, &read_file(path)?)?;
    model
        .validate()
        .map_err(|e| InputError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(model)
}

pub(crate) fn load_graph(path: &Path) -> Result<StateSpaceGraph, InputError> {
    let spec: GraphSpec = parse_json(path, &read_file(path)?)?;
    StateSpaceGraph::from_spec(&spec).map_err(|e| InputError::Invalid(format!("{}: {e}", path.display())))
}

/// What `validate` recognized a file as.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Pipeline,
    Relation,
    Oracle,
    Model,
    Graph,
}

impl FileKind {
    pub fn name(self) -> &'static str {
        match self {
            FileKind::Pipeline => "pipeline",
            FileKind::Relation => "relation",
            FileKind::Oracle => "oracle",
            FileKind::Model => "model",
            FileKind::Graph => "graph",
        }
    }
}

fn guess_kind(value: &serde_json::Value) -> Option<FileKind> {
    let obj = value.as_object()?;
    let has = |k: &str| obj.contains_key(k);
    if has("lambda_grid") {
        Some(FileKind::Relation)
    } else if has("type") {
        Some(FileKind::Model)
    } else if has("model") && has("space") {
        Some(FileKind::Oracle)
    } else if has("spaces") {
        Some(FileKind::Graph)
    } else if has("stages") || has("inputs") || has("schema_version") || obj.is_empty() {
        Some(FileKind::Pipeline)
    } else {
        None
    }
}

/// Parses and lints a file of any supported kind without running anything.
/// A pipeline file is checked together with the inputs it references.
pub fn validate_file(path: &Path) -> Result<FileKind, InputError> {
    let text = read_file(path)?;
    let value: serde_json::Value = parse_json(path, &text)?;
    let kind = guess_kind(&value).ok_or_else(|| {
        InputError::Invalid(format!(
            "{}: not a pipeline, relation, oracle, model or graph file",
            path.display()
        ))
    })?;
    match kind {
        FileKind::Pipeline => {
            let spec = PipelineSpec::load(path)?;
            spec.lint()?;
            LoadedInputs::load(&spec)?;
        }
        FileKind::Relation => {
            load_relation(path)?;
        }
        FileKind::Oracle => {
            load_oracle(path)?;
        }
        FileKind::Model => {
            load_model(path)?;
        }
        FileKind::Graph => {
            load_graph(path)?;
        }
    }
    Ok(kind)
}

/// Every input of a pipeline, parsed and validated.
pub(crate) struct LoadedInputs {
    pub relation: Option<RelationDoc>,
    pub oracle: Option<LoadedOracle>,
    pub models: Vec<SimpleSystemModel>,
    pub graph: Option<StateSpaceGraph>,
}

impl LoadedInputs {
    pub fn load(spec: &PipelineSpec) -> Result<Self, InputError> {
        let relation = spec.inputs.relation.as_deref().map(load_relation).transpose()?;
        let oracle = spec.inputs.oracle.as_deref().map(load_oracle).transpose()?;
        let models = spec
            .inputs
            .models
            .iter()
            .map(|m| {
                let model = load_model(&m.path)?;
                let region = &m.region;
                let dim = model.work_dimension();
                if region.v.len() != dim {
                    return Err(InputError::Invalid(format!(
                        "{}: region has {} work coordinates, model has {dim}",
                        m.path.display(),
                        region.v.len()
                    )));
                }
                let domain = model.domain();
                let inside = domain.u.lo <= region.u.lo
                    && region.u.hi <= domain.u.hi
                    && domain
                        .v
                        .iter()
                        .zip(&region.v)
                        .all(|(d, r)| d.lo <= r.lo && r.hi <= d.hi);
                if !inside {
                    return Err(InputError::Invalid(format!(
                        "{}: region is not inside the model domain",
                        m.path.display()
                    )));
                }
                Ok(model)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let graph = spec.inputs.graph.as_deref().map(load_graph).transpose()?;
        Ok(Self {
            relation,
            oracle,
            models,
            graph,
        })
    }
}
