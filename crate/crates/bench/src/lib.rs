//! Shared fixtures for the criterion benches.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;

use entropy_core::calibration::{SpaceSpec, StateEntry, StateSpaceGraph};
use entropy_core::order::{
    AccessibilityRelation, CompoundState, LambdaGrid, OracleRelation, SpaceRegistry, StateSpaceDecl,
};
use entropy_core::rational::Rational;

fn registry(space: &str, names: &[String]) -> Arc<SpaceRegistry> {
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Arc::new(SpaceRegistry::new(vec![StateSpaceDecl::new(space, vec![], &refs)]).unwrap())
}

/// Unclosed chain `s0 ≺ s1 ≺ … ≺ s{n-1}` over the scales `{1/2, 1}`.
pub fn chain_relation(n: usize) -> AccessibilityRelation {
    let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let reg = registry("G", &names);
    let facts: Vec<(CompoundState, CompoundState)> = (1..n)
        .map(|i| {
            let a = reg.state("G", &names[i - 1]).unwrap();
            let b = reg.state("G", &names[i]).unwrap();
            (
                CompoundState::scaled_single(Rational::from_integer(1), a).unwrap(),
                CompoundState::scaled_single(Rational::from_integer(1), b).unwrap(),
            )
        })
        .collect();
    let grid = LambdaGrid::new([Rational::new(1, 2), Rational::from_integer(1)]).unwrap();
    AccessibilityRelation::build(reg, facts, grid).unwrap()
}

/// Ideal-gas oracle on an `n × n` grid of `(U, V)` states in space `gas`.
pub struct GasOracle {
    pub relation: OracleRelation,
    pub registry: Arc<SpaceRegistry>,
    pub names: Vec<String>,
    pub sigma: Vec<f64>,
}

pub fn gas_oracle(n: usize) -> GasOracle {
    let mut names = Vec::new();
    let mut sigma = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (u, v): (f64, f64) = (1.0 + 0.25 * i as f64, 1.0 + 0.25 * j as f64);
            names.push(format!("u{i}v{j}"));
            sigma.push(v.ln() + 1.5 * u.ln());
        }
    }
    let registry = registry("gas", &names);
    let relation = OracleRelation::new(registry.clone(), vec![sigma.clone()]).unwrap();
    GasOracle {
        relation,
        registry,
        names,
        sigma,
    }
}

/// Complete graph of `spaces` spaces with `states` entropies each, every
/// space made of the same single element.
pub fn lattice_graph(spaces: usize, states: usize) -> StateSpaceGraph {
    let q = |n: i64| BigRational::from_integer(n.into());
    let mut specs = Vec::new();
    let mut b = BTreeMap::new();
    for i in 0..spaces {
        let id = format!("G{i}");
        b.insert(id.clone(), q((i as i64 * 7) % 5 - 2));
        specs.push(SpaceSpec {
            id,
            composition: vec![q(1)],
            parts: vec![],
            states: (0..states)
                .map(|k| StateEntry {
                    id: format!("x{k}"),
                    s: q(((i * 3 + k * 5) % 11) as i64 - 5),
                })
                .collect(),
        });
    }
    StateSpaceGraph::complete_from_entropy(specs, &b, vec![], 4).unwrap()
}
