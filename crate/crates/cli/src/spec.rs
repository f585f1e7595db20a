//! Pipeline specification files and their validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use entropy_core::rational::{parse_rational, Rational};
use entropy_core::simple::{Domain, IntegratorOptions};

use crate::InputError;

pub const SCHEMA_VERSION: u32 = 1;

/// Pipeline stages in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Close,
    CheckAxioms,
    CheckCh,
    ConstructEntropy,
    VerifyPrinciple,
    SimpleSystemSuite,
    ThermalSuite,
    CalibrationSuite,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Close,
        Stage::CheckAxioms,
        Stage::CheckCh,
        Stage::ConstructEntropy,
        Stage::VerifyPrinciple,
        Stage::SimpleSystemSuite,
        Stage::ThermalSuite,
        Stage::CalibrationSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Close => "close",
            Stage::CheckAxioms => "check_axioms",
            Stage::CheckCh => "check_ch",
            Stage::ConstructEntropy => "construct_entropy",
            Stage::VerifyPrinciple => "verify_principle",
            Stage::SimpleSystemSuite => "simple_system_suite",
            Stage::ThermalSuite => "thermal_suite",
            Stage::CalibrationSuite => "calibration_suite",
        }
    }

    /// Stages that must run earlier in the same pipeline.
    pub fn requires(self) -> &'static [Stage] {
        match self {
            Stage::CheckCh | Stage::ConstructEntropy => &[Stage::Close],
            Stage::VerifyPrinciple => &[Stage::ConstructEntropy],
            _ => &[],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = InputError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| InputError::UnknownStage(s.to_string()))
    }
}

/// Input files, resolved relative to the spec file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    /// Relation document with spaces, facts and the λ grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<PathBuf>,
    /// Entropy oracle evaluated on a list or grid of simple-system states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelInput>,
    /// State-space graph for the calibration stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<PathBuf>,
}

/// A simple-system model file and the bounded region probed in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelInput {
    pub path: PathBuf,
    pub region: Domain,
    /// Expected Lipschitz bound of the pressure; the check is skipped if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_bound: Option<f64>,
}

fn default_resolution() -> String {
    "1/128".into()
}

fn default_equilibrium() -> f64 {
    entropy_core::thermal::EQUILIBRIUM_TOL
}

fn default_temperature_match() -> f64 {
    1e-6
}

fn default_nesting_rel() -> f64 {
    1e-7
}

fn default_constants() -> f64 {
    1e-9
}

fn default_pressure_consistency() -> f64 {
    1e-5
}

/// Every numerical tolerance used by the stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// λ step of the entropy construction (exact rational string).
    #[serde(default = "default_resolution")]
    pub entropy_resolution: String,
    /// Allowed residual of the affine fit against an oracle; defaults to two
    /// resolution steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_fit: Option<f64>,
    /// Relative tolerance of `∼_T`.
    #[serde(default = "default_equilibrium")]
    pub equilibrium: f64,
    /// Relative mismatch allowed between the two temperatures of a split.
    #[serde(default = "default_temperature_match")]
    pub temperature_match: f64,
    /// Relative height difference treated as equal when comparing adiabats.
    #[serde(default = "default_nesting_rel")]
    pub nesting: f64,
    /// Allowed excess in the additive-constant constraints.
    #[serde(default = "default_constants")]
    pub constants: f64,
    /// Allowed mismatch between the model pressure and the oracle's slope ratio.
    #[serde(default = "default_pressure_consistency")]
    pub pressure_consistency: f64,
    #[serde(default)]
    pub integrator: IntegratorOptions,
}

impl Default for Tolerances {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all tolerance fields have defaults")
    }
}

fn default_max_parts() -> usize {
    3
}

fn default_fact_budget() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureSettings {
    #[serde(default = "default_max_parts")]
    pub max_parts: usize,
    #[serde(default = "default_fact_budget")]
    pub fact_budget: usize,
}

impl Default for ClosureSettings {
    fn default() -> Self {
        Self {
            max_parts: default_max_parts(),
            fact_budget: default_fact_budget(),
        }
    }
}

/// Reference states for one entropy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyRequest {
    pub space: String,
    pub ref_low: String,
    pub ref_high: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySettings {
    /// Tables to build; empty means one per space with automatically chosen
    /// lowest and highest states as references.
    #[serde(default)]
    pub tables: Vec<EntropyRequest>,
    /// Multiplicative constants per space for the entropy-principle check
    /// (1 when absent).
    #[serde(default)]
    pub multipliers: BTreeMap<String, f64>,
}

fn default_pairs() -> usize {
    50
}

fn default_columns() -> usize {
    12
}

fn default_caratheodory_samples() -> usize {
    64
}

fn default_lipschitz_samples() -> usize {
    2000
}

fn default_t_grid() -> Vec<f64> {
    vec![0.1, 0.25, 0.5, 0.75, 0.9]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimpleSettings {
    /// Random state pairs per model for nesting and convexity.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Probe columns across each region's work coordinates.
    #[serde(default = "default_columns")]
    pub probe_columns: usize,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_caratheodory_samples")]
    pub caratheodory_samples: usize,
    #[serde(default = "default_lipschitz_samples")]
    pub lipschitz_samples: usize,
}

impl Default for SimpleSettings {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

fn default_triples() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalSettings {
    /// Random hot/cold pairs for the energy-flow check.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Temperature-matched triples for the zeroth law.
    #[serde(default = "default_triples")]
    pub triples: usize,
    /// Columns sampled along each isotherm.
    #[serde(default = "default_columns")]
    pub isotherm_columns: usize,
}

impl Default for ThermalSettings {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSettings {
    /// Compare the closed fact graph with the predictions of `F` state by
    /// state; meaningful for graphs that list every accessible pair.
    #[serde(default)]
    pub check_accessibility: bool,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

/// A pipeline file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub stages: Vec<Stage>,
    /// Base seed of every randomized probe.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub closure: ClosureSettings,
    #[serde(default)]
    pub entropy: EntropySettings,
    #[serde(default)]
    pub simple: SimpleSettings,
    #[serde(default)]
    pub thermal: ThermalSettings,
    #[serde(default)]
    pub calibration: CalibrationSettings,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// Parses JSON, reporting the line and column of the first error.
pub fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| InputError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn read_file(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

impl PipelineSpec {
    /// Reads a spec and resolves its input paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self, InputError> {
        let mut spec: PipelineSpec = parse_json(path, &read_file(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        spec.resolve_paths(base);
        Ok(spec)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.inputs.relation.as_mut() {
            fix(p);
        }
        if let Some(p) = self.inputs.oracle.as_mut() {
            fix(p);
        }
        if let Some(p) = self.inputs.graph.as_mut() {
            fix(p);
        }
        for m in &mut self.inputs.models {
            fix(&mut m.path);
        }
    }

    pub fn resolution(&self) -> Result<Rational, InputError> {
        let r = parse_rational(&self.tolerances.entropy_resolution)
            .map_err(|e| InputError::Invalid(format!("entropy_resolution: {e}")))?;
        if r <= Rational::from_integer(0) {
            return Err(InputError::Invalid("entropy_resolution must be positive".into()));
        }
        Ok(r)
    }

    /// Schema, stage order and the inputs each stage needs; does not read
    /// the input files.
    pub fn lint(&self) -> Result<(), InputError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(InputError::Invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        for (k, stage) in self.stages.iter().enumerate() {
            if self.stages[..k].contains(stage) {
                return Err(InputError::Invalid(format!("stage `{stage}` listed twice")));
            }
            for req in stage.requires() {
                if !self.stages[..k].contains(req) {
                    return Err(InputError::StageOrder {
                        stage: *stage,
                        requires: *req,
                    });
                }
            }
            let missing = |what: &str| InputError::MissingInput {
                stage: *stage,
                input: what.to_string(),
            };
            match stage {
                Stage::Close | Stage::CheckCh | Stage::ConstructEntropy | Stage::VerifyPrinciple => {
                    if self.inputs.relation.is_none() && self.inputs.oracle.is_none() {
                        return Err(missing("relation or oracle"));
                    }
                }
                Stage::CheckAxioms => {
                    if self.inputs.relation.is_none() {
                        return Err(missing("relation"));
                    }
                }
                Stage::SimpleSystemSuite | Stage::ThermalSuite => {
                    if self.inputs.models.is_empty() {
                        return Err(missing("models"));
                    }
                }
                Stage::CalibrationSuite => {
                    if self.inputs.graph.is_none() {
                        return Err(missing("graph"));
                    }
                }
            }
        }
        if self.inputs.relation.is_some() && self.inputs.oracle.is_some() {
            return Err(InputError::Invalid(
                "give either a relation or an oracle, not both".into(),
            ));
        }
        self.resolution()?;
        for (k, m) in self.inputs.models.iter().enumerate() {
            let bounded = std::iter::once(&m.region.u)
                .chain(&m.region.v)
                .all(|i| i.lo.is_finite() && i.hi.is_finite() && i.lo < i.hi);
            if !bounded || m.region.v.is_empty() {
                return Err(InputError::Invalid(format!(
                    "region of model {k} must be bounded and non-empty in every coordinate"
                )));
            }
        }
        if self.simple.t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(InputError::Invalid("t_grid entries must lie in [0, 1]".into()));
        }
        Ok(())
    }
}
