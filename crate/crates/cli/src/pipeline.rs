//! Stage execution.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use entropy_core::calibration::{
    check_constants, check_no_sinks, detect_gap, solve_additive_constants,
    verify_accessibility_criterion, Infima, Matrix, StateSpaceGraph,
};
use entropy_core::entropy::{
    construct_entropy, fit_affine, verify_entropy_principle, ConstructOptions, EntropyTable,
    SupSearch, TableEntry,
};
use entropy_core::order::{
    check_comparison_hypothesis, check_comparison_hypothesis_on, check_stability, scan_axioms,
    Accessibility, AccessibilityRelation, ChScope, ClosureOptions, CompoundState, SpaceIx,
    SpaceRegistry, StateRef,
};
use entropy_core::rational::to_f64;
use entropy_core::simple::{
    check_caratheodory, check_convexity, check_lipschitz, check_nesting, integrate_adiabat,
    pressure_at, Domain, Nesting, NestingOptions, SimpleSystemModel, StatePoint,
};
use entropy_core::thermal::{
    check_energy_flow, check_transversality, check_zeroth_law, equilibrium_partner, isotherm,
    temperature, thermal_split, ModelState, ThermalJoin,
};

use crate::inputs::{LoadedInputs, LoadedOracle};
use crate::report::{Bundle, CsvTable, StageReport, StageStatus};
use crate::spec::{EntropyRequest, ModelInput, PipelineSpec, Stage};
use crate::InputError;

/// Largest number of individual violations listed per check in the report.
const LISTED: usize = 20;

/// What a stage hands back on success.
struct Outcome {
    violations: usize,
    seed: Option<u64>,
    result: Value,
}

impl Outcome {
    fn new(violations: usize, result: Value) -> Self {
        Self {
            violations,
            seed: None,
            result,
        }
    }

    fn seeded(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// State carried from one stage to the next.
struct Run<'a> {
    spec: &'a PipelineSpec,
    inputs: LoadedInputs,
    relation: Option<AccessibilityRelation>,
    closed: Option<AccessibilityRelation>,
    tables: BTreeMap<String, EntropyTable>,
    csv: BTreeMap<String, CsvTable>,
}

/// Loads the inputs, runs the stages in order and collects the bundle.
///
/// Input problems (parse errors, missing files, stage-order violations) are
/// returned as errors before any stage runs. A stage that cannot be evaluated
/// is recorded with status `error` and the remaining stages are skipped.
pub fn run_pipeline(spec: &PipelineSpec) -> Result<Bundle, InputError> {
    spec.lint()?;
    let inputs = LoadedInputs::load(spec)?;
    if spec.stages.contains(&Stage::ThermalSuite) && !inputs.models.iter().any(|m| m.has_entropy()) {
        return Err(InputError::MissingInput {
            stage: Stage::ThermalSuite,
            input: "model with an entropy function".into(),
        });
    }
    let relation = inputs
        .relation
        .as_ref()
        .map(|doc| doc.build())
        .transpose()
        .map_err(|e| InputError::Invalid(e.to_string()))?;
    let mut run = Run {
        spec,
        inputs,
        relation,
        closed: None,
        tables: BTreeMap::new(),
        csv: BTreeMap::new(),
    };
    let mut bundle = Bundle::new(spec.seed);
    let mut failed = false;
    for &stage in &spec.stages {
        if failed {
            bundle.report.stages.push(StageReport {
                stage,
                status: StageStatus::Skipped,
                violations: 0,
                seed: None,
                error: None,
                result: Value::Null,
            });
            continue;
        }
        let outcome = match stage {
            Stage::Close => run.close(),
            Stage::CheckAxioms => run.check_axioms(),
            Stage::CheckCh => run.check_ch(),
            Stage::ConstructEntropy => run.construct_entropy(),
            Stage::VerifyPrinciple => run.verify_principle(),
            Stage::SimpleSystemSuite => run.simple_suite(),
            Stage::ThermalSuite => run.thermal_suite(),
            Stage::CalibrationSuite => run.calibration_suite(),
        };
        let entry = match outcome {
            Ok(o) => {
                bundle.report.violations += o.violations;
                StageReport {
                    stage,
                    status: if o.violations == 0 {
                        StageStatus::Ok
                    } else {
                        StageStatus::Violations
                    },
                    violations: o.violations,
                    seed: o.seed,
                    error: None,
                    result: o.result,
                }
            }
            Err(message) => {
                failed = true;
                bundle.report.errors += 1;
                StageReport {
                    stage,
                    status: StageStatus::Error,
                    violations: 0,
                    seed: None,
                    error: Some(message),
                    result: Value::Null,
                }
            }
        };
        bundle.report.stages.push(entry);
    }
    bundle.report.tables = run.csv.keys().cloned().collect();
    bundle.tables = run.csv;
    Ok(bundle)
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn stage_seed(base: u64, stage: Stage) -> u64 {
    base.wrapping_add(stage as u64 * 0x9E37_79B9)
}

fn pick(rng: &mut ChaCha8Rng, region: &Domain) -> StatePoint {
    let mut draw = |i: &entropy_core::simple::Interval| rng.gen_range(i.lo..i.hi);
    let u = draw(&region.u);
    let v = region.v.iter().map(draw).collect();
    StatePoint::new(u, v)
}

fn column(rng: &mut ChaCha8Rng, region: &Domain) -> Vec<f64> {
    region.v.iter().map(|i| rng.gen_range(i.lo..i.hi)).collect()
}

fn centre(region: &Domain) -> StatePoint {
    StatePoint::new(
        0.5 * (region.u.lo + region.u.hi),
        region.v.iter().map(|i| 0.5 * (i.lo + i.hi)).collect(),
    )
}

/// `count` columns along the diagonal of the region's work coordinates,
/// strictly inside it.
fn columns(region: &Domain, count: usize) -> Vec<Vec<f64>> {
    (1..=count)
        .map(|k| {
            let t = k as f64 / (count + 1) as f64;
            region.v.iter().map(|i| i.lo + t * (i.hi - i.lo)).collect()
        })
        .collect()
}

fn point_row(label: &str, index: usize, p: &StatePoint, width: usize, extra: Option<f64>) -> Vec<String> {
    let mut row = vec![label.to_string()];
    if let Some(x) = extra {
        row.push(num(x));
    }
    row.push(index.to_string());
    row.push(num(p.u));
    for k in 0..width {
        row.push(p.v.get(k).map(|x| num(*x)).unwrap_or_default());
    }
    row
}

fn v_headers(width: usize) -> Vec<String> {
    (1..=width).map(|k| format!("V{k}")).collect()
}

fn model_label(k: usize, input: &ModelInput, model: &SimpleSystemModel) -> String {
    let file = input
        .path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    format!("{k}:{}:{file}", model.kind())
}

impl Run<'_> {
    fn oracle(&self) -> Option<&LoadedOracle> {
        self.inputs.oracle.as_ref()
    }

    fn accessibility(&self) -> Result<&dyn Accessibility, String> {
        if let Some(o) = self.oracle() {
            return Ok(&o.relation);
        }
        self.closed
            .as_ref()
            .map(|r| r as &dyn Accessibility)
            .ok_or_else(|| "the relation has not been closed".to_string())
    }

    fn registry(&self) -> &SpaceRegistry {
        match self.oracle() {
            Some(o) => o.relation.registry(),
            None => self.relation.as_ref().expect("linted: relation present").registry_arc(),
        }
    }

    fn close(&mut self) -> Result<Outcome, String> {
        if let Some(o) = self.oracle() {
            return Ok(Outcome::new(
                0,
                json!({
                    "source": "oracle",
                    "space": o.space,
                    "states": o.names.len(),
                }),
            ));
        }
        let rel = self.relation.as_ref().expect("linted: relation present");
        let opts = ClosureOptions {
            max_parts: self.spec.closure.max_parts,
            fact_budget: self.spec.closure.fact_budget,
        };
        let closed = rel.close(&opts).map_err(|e| e.to_string())?;
        let result = json!({
            "source": "relation",
            "generators": rel.generators().count(),
            "universe": closed.universe().len(),
            "facts": closed.fact_count(),
            "max_parts": opts.max_parts,
            "fact_budget": opts.fact_budget,
        });
        self.closed = Some(closed);
        Ok(Outcome::new(0, result))
    }

    fn check_axioms(&mut self) -> Result<Outcome, String> {
        let (rel, closed) = match &self.closed {
            Some(c) => (c, true),
            None => (self.relation.as_ref().expect("linted: relation present"), false),
        };
        let scans = scan_axioms(rel);
        let stability = check_stability(rel);
        let violations =
            scans.iter().map(|s| s.violations).sum::<usize>() + stability.flagged.len();
        Ok(Outcome::new(
            violations,
            json!({
                "closed": closed,
                "scans": scans,
                "stability": stability,
            }),
        ))
    }

    fn check_ch(&mut self) -> Result<Outcome, String> {
        let result = match self.oracle() {
            Some(o) => {
                let reg = o.relation.registry();
                let singles: Vec<CompoundState> = reg.all_states().map(CompoundState::single).collect();
                check_comparison_hypothesis_on(&o.relation, &singles).map_err(|e| e.to_string())?
            }
            None => {
                let closed = self.closed.as_ref().ok_or("the relation has not been closed")?;
                let scope = ChScope {
                    spaces: None,
                    max_parts: self.spec.closure.max_parts,
                };
                check_comparison_hypothesis(closed, &scope)
            }
        };
        let violations = usize::from(!result.holds());
        Ok(Outcome::new(violations, json!({ "comparison_hypothesis": result })))
    }

    /// Lowest and highest unit state of a space under the relation.
    fn auto_refs(&self, space: SpaceIx) -> Result<(StateRef, StateRef), String> {
        let reg = self.registry();
        let states: Vec<StateRef> = reg.states_of(space).collect();
        if let Some(o) = self.oracle() {
            let by = |a: &&StateRef, b: &&StateRef| o.relation.value(**a).total_cmp(&o.relation.value(**b));
            let lo = states.iter().min_by(by).expect("spaces are non-empty");
            let hi = states.iter().max_by(by).expect("spaces are non-empty");
            return Ok((*lo, *hi));
        }
        let rel = self.accessibility()?;
        let single = |s: StateRef| CompoundState::single(s);
        let mut below = vec![0usize; states.len()];
        let mut above = vec![0usize; states.len()];
        for (i, &a) in states.iter().enumerate() {
            for (j, &b) in states.iter().enumerate() {
                if rel.accessible(&single(a), &single(b)).map_err(|e| e.to_string())? {
                    below[i] += 1;
                    above[j] += 1;
                }
            }
        }
        let argmax = |v: &[usize]| {
            (0..v.len())
                .max_by(|&a, &b| v[a].cmp(&v[b]).then(b.cmp(&a)))
                .expect("spaces are non-empty")
        };
        Ok((states[argmax(&below)], states[argmax(&above)]))
    }

    fn construct_entropy(&mut self) -> Result<Outcome, String> {
        let resolution = self.spec.resolution().map_err(|e| e.to_string())?;
        let res = to_f64(&resolution);
        let reg = self.registry();
        let explicit = !self.spec.entropy.tables.is_empty();
        let requests: Vec<(SpaceIx, StateRef, StateRef)> = if explicit {
            self.spec
                .entropy
                .tables
                .iter()
                .map(|EntropyRequest { space, ref_low, ref_high }| {
                    Ok((
                        reg.space(space).map_err(|e| e.to_string())?,
                        reg.state(space, ref_low).map_err(|e| e.to_string())?,
                        reg.state(space, ref_high).map_err(|e| e.to_string())?,
                    ))
                })
                .collect::<Result<_, String>>()?
        } else {
            reg.space_ids()
                .map(|s| self.auto_refs(s).map(|(lo, hi)| (s, lo, hi)))
                .collect::<Result<_, String>>()?
        };
        let opts = ConstructOptions {
            search: SupSearch::grid(resolution),
            allow_constant: !explicit,
        };
        let fit_tol = self.spec.tolerances.oracle_fit.unwrap_or(2.0 * res);
        let rel = self.accessibility()?;
        let mut csv = CsvTable::new(&["space", "state", "S", "resolution"]);
        let mut summaries = Vec::new();
        let mut violations = 0;
        let mut tables = BTreeMap::new();
        for (space, lo, hi) in requests {
            let table = construct_entropy(rel, space, lo, hi, &opts).map_err(|e| e.to_string())?;
            for e in &table.values {
                csv.push(vec![table.space.clone(), e.state.clone(), num(e.s), num(table.resolution)]);
            }
            let mut summary = json!({
                "space": table.space,
                "ref_low": table.ref_low,
                "ref_high": table.ref_high,
                "resolution": table.resolution,
                "constant": table.constant,
                "states": table.values.len(),
                "universe_capped": table.values.iter().filter(|e| e.universe_capped).count(),
            });
            if let Some(o) = self.oracle() {
                let reference = EntropyTable {
                    space: o.space.clone(),
                    ref_low: table.ref_low.clone(),
                    ref_high: table.ref_high.clone(),
                    resolution: 0.0,
                    constant: false,
                    values: o
                        .names
                        .iter()
                        .zip(&o.sigma)
                        .map(|(n, s)| TableEntry {
                            state: n.clone(),
                            s: *s,
                            universe_capped: false,
                        })
                        .collect(),
                };
                let fit = fit_affine(&reference, &table).map_err(|e| e.to_string())?;
                let ok = fit.a > 0.0 && fit.max_residual <= fit_tol;
                violations += usize::from(!ok);
                summary["oracle_fit"] = json!({
                    "slope": fit.a,
                    "intercept": fit.b,
                    "max_residual": fit.max_residual,
                    "tolerance": fit_tol,
                    "ok": ok,
                });
            }
            summaries.push(summary);
            tables.insert(table.space.clone(), table);
        }
        self.tables = tables;
        self.csv.insert("entropy.csv".into(), csv);
        Ok(Outcome::new(violations, json!({ "tables": summaries })))
    }

    fn verify_principle(&mut self) -> Result<Outcome, String> {
        let reg = self.registry();
        let covered = |c: &CompoundState| {
            c.parts()
                .iter()
                .all(|p| self.tables.contains_key(reg.space_name(p.space)))
        };
        let facts: Vec<(CompoundState, CompoundState)> = match (self.oracle(), &self.closed) {
            (Some(o), _) => {
                let singles: Vec<CompoundState> = reg.all_states().map(CompoundState::single).collect();
                let mut facts = Vec::new();
                for x in &singles {
                    for y in &singles {
                        if x != y
                            && x.signature() == y.signature()
                            && o.relation.accessible(x, y).map_err(|e| e.to_string())?
                        {
                            facts.push((x.clone(), y.clone()));
                        }
                    }
                }
                facts
            }
            (None, Some(c)) => c.facts().into_iter().filter(|(x, y)| x != y).collect(),
            (None, None) => return Err("the relation has not been closed".into()),
        };
        let facts: Vec<_> = facts.into_iter().filter(|(x, y)| covered(x) && covered(y)).collect();
        let rel = self.accessibility()?;
        let report = verify_entropy_principle(rel, &facts, &self.tables, &self.spec.entropy.multipliers)
            .map_err(|e| e.to_string())?;
        let mut csv = CsvTable::new(&[
            "lhs",
            "rhs",
            "classification",
            "S_lhs",
            "S_rhs",
            "margin",
            "tolerance",
            "ok",
        ]);
        for c in &report.checks {
            csv.push(vec![
                c.lhs.clone(),
                c.rhs.clone(),
                serde_json::to_value(c.classification)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                num(c.s_lhs),
                num(c.s_rhs),
                num(c.margin),
                num(c.tolerance),
                c.ok.to_string(),
            ]);
        }
        self.csv.insert("principle.csv".into(), csv);
        let listed: Vec<_> = report.violations.iter().take(LISTED).collect();
        Ok(Outcome::new(
            report.violations.len(),
            json!({
                "checked": report.checked,
                "skipped": report.skipped,
                "max_violation": report.max_violation,
                "violations": listed,
                "multipliers": self.spec.entropy.multipliers,
            }),
        ))
    }

    fn models(&self) -> impl Iterator<Item = (usize, &SimpleSystemModel, &ModelInput)> {
        self.inputs
            .models
            .iter()
            .zip(&self.spec.inputs.models)
            .enumerate()
            .map(|(k, (m, i))| (k, m, i))
    }

    fn simple_suite(&mut self) -> Result<Outcome, String> {
        let seed = stage_seed(self.spec.seed, Stage::SimpleSystemSuite);
        let s = &self.spec.simple;
        let tol = &self.spec.tolerances;
        let width = self.inputs.models.iter().map(|m| m.work_dimension()).max().unwrap_or(1);
        let mut header: Vec<String> = vec!["model".into(), "index".into(), "U".into()];
        header.extend(v_headers(width));
        let mut adiabats = CsvTable {
            header,
            rows: Vec::new(),
        };
        let mut violations = 0;
        let mut per_model = Vec::new();
        for (k, model, input) in self.models() {
            let label = model_label(k, input, model);
            let model_seed = seed.wrapping_add(k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(model_seed);
            let region = &input.region;
            let nesting_opts = NestingOptions {
                probe: columns(region, s.probe_columns),
                integrator: tol.integrator,
                rel_tol: tol.nesting,
            };
            let mut cases: BTreeMap<&str, usize> = BTreeMap::new();
            let mut crossings = Vec::new();
            let mut errors = Vec::new();
            let mut convexity_checked = 0;
            let mut convexity_violations = 0;
            for _ in 0..s.pairs {
                let (x, y) = (pick(&mut rng, region), pick(&mut rng, region));
                match check_nesting(model, &x, &y, &nesting_opts) {
                    Ok(r) => {
                        let name = match &r.outcome {
                            Nesting::EqualSectors => "equal_sectors",
                            Nesting::XInsideY => "x_inside_y",
                            Nesting::YInsideX => "y_inside_x",
                            Nesting::Crossing { .. } => "crossing",
                        };
                        *cases.entry(name).or_default() += 1;
                        if r.outcome.is_violation() && crossings.len() < LISTED {
                            crossings.push(json!({ "x": x, "y": y, "outcome": r.outcome }));
                        }
                    }
                    Err(e) => errors.push(e.to_string()),
                }
                if model.has_entropy() {
                    match check_convexity(model, &x, &y, &s.t_grid) {
                        Ok(r) => {
                            convexity_checked += r.checks.len();
                            convexity_violations += r.violations;
                        }
                        Err(e) => errors.push(e.to_string()),
                    }
                }
            }
            let crossing_count = cases.get("crossing").copied().unwrap_or(0);
            let c = centre(region);
            let span = std::iter::once(&region.u)
                .chain(&region.v)
                .map(|i| i.hi - i.lo)
                .fold(f64::INFINITY, f64::min);
            let caratheodory = check_caratheodory(
                model,
                &c,
                0.25 * span,
                s.caratheodory_samples,
                model_seed,
                &tol.integrator,
            );
            let caratheodory_violation = matches!(&caratheodory, Ok(r) if !r.passed());
            let lipschitz = input
                .lipschitz_bound
                .map(|bound| check_lipschitz(model, region, bound, s.lipschitz_samples, model_seed));
            let lipschitz_violation = matches!(&lipschitz, Some(Ok(r)) if !r.passed());
            let pressure = pressure_at(model, &c);
            let pressure_violation = matches!(
                &pressure,
                Ok(r) if r.consistency_residual.is_some_and(|x| x > tol.pressure_consistency)
            );
            let lo: Vec<f64> = region.v.iter().map(|i| i.lo).collect();
            let hi: Vec<f64> = region.v.iter().map(|i| i.hi).collect();
            let adiabat = integrate_adiabat(model, &c, &[hi, lo], &tol.integrator);
            if let Ok(a) = &adiabat {
                for (i, p) in a.samples.iter().enumerate() {
                    adiabats.push(point_row(&label, i, p, width, None));
                }
            }
            let v = crossing_count
                + convexity_violations
                + usize::from(caratheodory_violation)
                + usize::from(lipschitz_violation)
                + usize::from(pressure_violation);
            violations += v;
            let err = |e: &dyn std::fmt::Display| json!({ "error": e.to_string() });
            per_model.push(json!({
                "model": label,
                "seed": model_seed,
                "violations": v,
                "nesting": {
                    "pairs": s.pairs,
                    "cases": cases,
                    "crossings": crossings,
                    "probe_columns": nesting_opts.probe.len(),
                },
                "convexity": {
                    "evaluated": model.has_entropy(),
                    "checked": convexity_checked,
                    "violations": convexity_violations,
                },
                "caratheodory": match &caratheodory {
                    Ok(r) => json!(r),
                    Err(e) => err(e),
                },
                "lipschitz": match &lipschitz {
                    None => Value::Null,
                    Some(Ok(r)) => json!(r),
                    Some(Err(e)) => err(e),
                },
                "pressure": match &pressure {
                    Ok(r) => json!(r),
                    Err(e) => err(e),
                },
                "adiabat": match &adiabat {
                    Ok(a) => json!({
                        "samples": a.samples.len(),
                        "step": a.step,
                        "error_estimate": a.error_estimate,
                    }),
                    Err(e) => err(e),
                },
                "evaluation_errors": errors.len(),
                "first_error": errors.first(),
            }));
        }
        self.csv.insert("adiabats.csv".into(), adiabats);
        Ok(Outcome::new(violations, json!({ "models": per_model })).seeded(seed))
    }

    fn thermal_suite(&mut self) -> Result<Outcome, String> {
        let seed = stage_seed(self.spec.seed, Stage::ThermalSuite);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = &self.spec.thermal;
        let tol = &self.spec.tolerances;
        let with_entropy: Vec<usize> = self
            .inputs
            .models
            .iter()
            .enumerate()
            .filter(|(_, m)| m.has_entropy())
            .map(|(k, _)| k)
            .collect();
        let models = &self.inputs.models;
        let inputs = &self.spec.inputs.models;
        let region = |k: usize| &inputs[k].region;
        let mut violations = 0;

        let mut splits = Vec::new();
        for (a, &i) in with_entropy.iter().enumerate() {
            for &j in &with_entropy[a..] {
                let (ci, cj) = (centre(region(i)), centre(region(j)));
                let join = ThermalJoin::new(models[i].clone(), models[j].clone()).map_err(|e| e.to_string())?;
                let entry = match thermal_split(&join, ci.u + cj.u, &ci.v, &cj.v) {
                    Ok(s) => {
                        let mismatch = (s.t1 - s.t2).abs() / s.t1.abs().max(s.t2.abs());
                        let ok = mismatch <= tol.temperature_match;
                        violations += usize::from(!ok);
                        json!({ "left": i, "right": j, "split": s, "relative_mismatch": mismatch, "ok": ok })
                    }
                    Err(e) => json!({ "left": i, "right": j, "error": e.to_string() }),
                };
                splits.push(entry);
            }
        }

        let mut flow_checked = 0;
        let mut flow_errors = 0;
        let mut flow_violations = Vec::new();
        for _ in 0..t.pairs {
            let i = with_entropy[rng.gen_range(0..with_entropy.len())];
            let j = with_entropy[rng.gen_range(0..with_entropy.len())];
            let (x1, x2) = (pick(&mut rng, region(i)), pick(&mut rng, region(j)));
            match check_energy_flow(&models[i], &x1, &models[j], &x2) {
                Ok(r) => {
                    flow_checked += 1;
                    if !r.ok {
                        flow_violations.push(json!({ "left": i, "x1": x1, "right": j, "x2": x2, "flow": r }));
                    }
                }
                Err(_) => flow_errors += 1,
            }
        }
        violations += flow_violations.len();
        flow_violations.truncate(LISTED);

        let mut triples = Vec::new();
        let mut unmatched = 0;
        for _ in 0..t.triples {
            let idx: [usize; 3] =
                std::array::from_fn(|_| with_entropy[rng.gen_range(0..with_entropy.len())]);
            let x = pick(&mut rng, region(idx[0]));
            let (vy, vz) = (column(&mut rng, region(idx[1])), column(&mut rng, region(idx[2])));
            let chain = equilibrium_partner(&models[idx[0]], &x, &models[idx[1]], &vy).and_then(|y| {
                equilibrium_partner(&models[idx[1]], &y, &models[idx[2]], &vz).map(|z| (y, z))
            });
            match chain {
                Ok((y, z)) => triples.push([
                    ModelState { model: idx[0], state: x },
                    ModelState { model: idx[1], state: y },
                    ModelState { model: idx[2], state: z },
                ]),
                Err(_) => unmatched += 1,
            }
        }
        let zeroth = check_zeroth_law(models, &triples, tol.equilibrium).map_err(|e| e.to_string())?;
        violations += zeroth.violations.len();

        let width = models.iter().map(|m| m.work_dimension()).max().unwrap_or(1);
        let mut header: Vec<String> = vec!["model".into(), "T".into(), "index".into(), "U".into()];
        header.extend(v_headers(width));
        let mut isotherms = CsvTable {
            header,
            rows: Vec::new(),
        };
        let mut transversality = Vec::new();
        for &k in &with_entropy {
            let label = model_label(k, &inputs[k], &models[k]);
            let c = centre(region(k));
            let cols = columns(region(k), t.isotherm_columns);
            let entry = temperature(&models[k], &c).and_then(|temp| {
                let points = isotherm(&models[k], temp.t, &cols)?;
                for (i, p) in points.iter().enumerate() {
                    isotherms.push(point_row(&label, i, p, width, Some(temp.t)));
                }
                check_transversality(&models[k], &c, temp.t, &cols, &tol.integrator)
            });
            transversality.push(match entry {
                Ok(r) => json!({ "model": label, "found": r.found(), "report": r }),
                Err(e) => json!({ "model": label, "error": e.to_string() }),
            });
        }
        self.csv.insert("isotherms.csv".into(), isotherms);
        Ok(Outcome::new(
            violations,
            json!({
                "splits": splits,
                "energy_flow": {
                    "pairs": t.pairs,
                    "checked": flow_checked,
                    "not_evaluable": flow_errors,
                    "violations": flow_violations,
                },
                "zeroth_law": {
                    "requested": t.triples,
                    "unmatched": unmatched,
                    "tolerance": tol.equilibrium,
                    "report": zeroth,
                },
                "transversality": transversality,
            }),
        )
        .seeded(seed))
    }

    fn calibration_suite(&mut self) -> Result<Outcome, String> {
        let g: &StateSpaceGraph = self.inputs.graph.as_ref().expect("linted: graph present");
        let inf = Infima::compute(g);
        let sinks = check_no_sinks(g, &inf);
        let mut violations = sinks.one_way.len()
            + sinks.unbounded.len()
            + sinks.reverse_bound.len()
            + sinks.lowering_cycles.len();
        let constants = match solve_additive_constants(g, &inf) {
            Ok(c) => {
                let check = check_constants(g, &inf, &c, self.spec.tolerances.constants);
                violations += check.violations.len() + check.nonlinear.len();
                json!({ "solution": c, "check": check })
            }
            Err(e) => {
                violations += 1;
                json!({ "error": e.to_string() })
            }
        };
        let mut gaps = Vec::new();
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                if let Ok(gap) = detect_gap(g, &inf.f, i, j) {
                    gaps.push(json!({ "from": g.nodes()[i].id, "to": g.nodes()[j].id, "gap": gap }));
                }
            }
        }
        let accessibility = if self.spec.calibration.check_accessibility {
            let r = verify_accessibility_criterion(g, &inf.f);
            violations += r.mismatches.len();
            json!({
                "checked": r.checked,
                "accessible": r.accessible,
                "mismatches": r.mismatches.iter().take(LISTED).collect::<Vec<_>>(),
                "mismatch_count": r.mismatches.len(),
            })
        } else {
            Value::Null
        };
        let mut csv = CsvTable::new(&["matrix", "from", "to", "value"]);
        let mut add = |name: &str, m: &Matrix| {
            for (i, from) in m.spaces.iter().enumerate() {
                for (j, to) in m.spaces.iter().enumerate() {
                    csv.push(vec![name.into(), from.clone(), to.clone(), m.get(i, j).to_string()]);
                }
            }
        };
        add("D", &inf.d);
        add("E", &inf.e.value);
        add("F", &inf.f);
        self.csv.insert("matrices.csv".into(), csv);
        Ok(Outcome::new(
            violations,
            json!({
                "infima": inf,
                "sinks": sinks,
                "constants": constants,
                "gaps": gaps,
                "accessibility": accessibility,
            }),
        ))
    }
}
