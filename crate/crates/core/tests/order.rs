use std::sync::Arc;

use entropy_core::order::{
    adiabats, check_cancellation, check_comparison_hypothesis, check_stability, classify,
    normalize_pair, scan_axioms, Accessibility, AccessibilityRelation, ChScope, Classification,
    ClosureOptions, CompoundState, EpsilonFamily, LambdaGrid, OracleRelation, OrderError,
    SpaceRegistry, StateRef, StateSpaceDecl,
};
use entropy_core::rational::Rational;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn one_space(states: &[&str]) -> Arc<SpaceRegistry> {
    Arc::new(SpaceRegistry::new(vec![StateSpaceDecl::new("G", vec![], states)]).unwrap())
}

fn unit(reg: &SpaceRegistry, name: &str) -> CompoundState {
    CompoundState::single(reg.state("G", name).unwrap())
}

fn st(reg: &SpaceRegistry, name: &str) -> StateRef {
    reg.state("G", name).unwrap()
}

fn half_grid() -> LambdaGrid {
    LambdaGrid::new([q(1, 2), q(1, 1)]).unwrap()
}

#[test]
fn transitivity_is_derived() {
    let reg = one_space(&["X", "Y", "Z"]);
    let (x, y, z) = (unit(&reg, "X"), unit(&reg, "Y"), unit(&reg, "Z"));
    let rel = AccessibilityRelation::build(
        reg,
        [(x.clone(), y.clone()), (y, z.clone())],
        LambdaGrid::unit(),
    )
    .unwrap()
    .close(&ClosureOptions::default())
    .unwrap();
    assert!(rel.accessible(&x, &z).unwrap());
    assert!(!rel.accessible(&z, &x).unwrap());
}

#[test]
fn splitting_makes_halves_equivalent_to_the_whole() {
    let reg = one_space(&["X", "Y"]);
    let (x, y) = (unit(&reg, "X"), unit(&reg, "Y"));
    let rel = AccessibilityRelation::build(reg.clone(), [(x.clone(), y.clone())], half_grid())
        .unwrap()
        .close(&ClosureOptions {
            max_parts: 2,
            ..Default::default()
        })
        .unwrap();
    let halves = CompoundState::new([(q(1, 2), st(&reg, "X")), (q(1, 2), st(&reg, "X"))]).unwrap();
    assert_eq!(
        classify(&rel, &halves, &x).unwrap(),
        Classification::Equivalent
    );
    let hx = CompoundState::scaled_single(q(1, 2), st(&reg, "X")).unwrap();
    let hy = CompoundState::scaled_single(q(1, 2), st(&reg, "Y")).unwrap();
    assert!(rel.accessible(&hx, &hy).unwrap());
    // (½X, ½X) ≺ (½X, ½Y) ≺ (½Y, ½Y) ∼ Y
    let mixed = CompoundState::new([(q(1, 2), st(&reg, "X")), (q(1, 2), st(&reg, "Y"))]).unwrap();
    assert!(rel.accessible(&halves, &mixed).unwrap());
    assert!(rel.accessible(&mixed, &y).unwrap());
}

#[test]
fn empty_relation_closes_to_the_diagonal() {
    let reg = one_space(&["X", "Y"]);
    let rel = AccessibilityRelation::build(reg, [], LambdaGrid::unit())
        .unwrap()
        .close(&ClosureOptions {
            max_parts: 1,
            ..Default::default()
        })
        .unwrap();
    assert!(rel.facts().iter().all(|(a, b)| a == b));
    assert_eq!(rel.fact_count(), 2);
}

#[test]
fn explosion_is_irreversible() {
    let reg = one_space(&["before", "after"]);
    let (x, y) = (unit(&reg, "before"), unit(&reg, "after"));
    let rel = AccessibilityRelation::build(reg, [(x.clone(), y.clone())], LambdaGrid::unit())
        .unwrap()
        .close(&ClosureOptions::default())
        .unwrap();
    assert_eq!(
        classify(&rel, &x, &y).unwrap(),
        Classification::StrictlyPrecedes
    );
    assert_eq!(
        classify(&rel, &y, &x).unwrap(),
        Classification::StrictlyFollows
    );
    assert!(!rel.accessible(&y, &x).unwrap());
}

#[test]
fn hydrogen_and_oxygen_do_not_compare_with_the_wrong_amount_of_water() {
    // Element tags (H, O): 2 g of H₂ is one mole, 16 g of O₂ half a mole,
    // 18 g of water one mole.
    let reg = Arc::new(
        SpaceRegistry::new(vec![
            StateSpaceDecl::new("H2", vec![q(2, 1), q(0, 1)], &["g"]),
            StateSpaceDecl::new("O2", vec![q(0, 1), q(2, 1)], &["g"]),
            StateSpaceDecl::new("H2O", vec![q(2, 1), q(1, 1)], &["l"]),
        ])
        .unwrap(),
    );
    let grid = LambdaGrid::new([q(1, 2), q(11, 18), q(1, 1)]).unwrap();
    let gas = CompoundState::new([
        (q(1, 1), reg.state("H2", "g").unwrap()),
        (q(1, 2), reg.state("O2", "g").unwrap()),
    ])
    .unwrap();
    let water = CompoundState::single(reg.state("H2O", "l").unwrap());
    let eleven_grams =
        CompoundState::scaled_single(q(11, 18), reg.state("H2O", "l").unwrap()).unwrap();
    let rel = AccessibilityRelation::build(reg, [(gas.clone(), water.clone())], grid)
        .unwrap()
        .close(&ClosureOptions {
            max_parts: 2,
            ..Default::default()
        })
        .unwrap();
    assert_eq!(
        classify(&rel, &gas, &water).unwrap(),
        Classification::StrictlyPrecedes
    );
    assert_eq!(
        classify(&rel, &gas, &eleven_grams).unwrap(),
        Classification::Incomparable
    );
}

#[test]
fn adiabats_from_declared_equivalences() {
    let reg = one_space(&["A", "B", "C"]);
    let rel = AccessibilityRelation::build(reg.clone(), [], LambdaGrid::unit())
        .unwrap()
        .close(&ClosureOptions::default())
        .unwrap();
    assert_eq!(adiabats(&rel, reg.space("G").unwrap()).unwrap().len(), 3);

    let (a, c) = (unit(&reg, "A"), unit(&reg, "C"));
    let rel = AccessibilityRelation::build(
        reg.clone(),
        [(a.clone(), c.clone()), (c, a)],
        LambdaGrid::unit(),
    )
    .unwrap()
    .close(&ClosureOptions::default())
    .unwrap();
    let classes = adiabats(&rel, reg.space("G").unwrap()).unwrap();
    assert_eq!(
        classes,
        vec![vec![st(&reg, "A"), st(&reg, "C")], vec![st(&reg, "B")]]
    );
}

#[test]
fn adiabats_of_an_oracle_are_its_level_sets() {
    let names = ["s0", "s1", "s2", "s3", "s4", "s5"];
    let levels = [0.0, 1.0, 0.0, 2.0, 1.0, 0.0];
    let reg = one_space(&names);
    let oracle = OracleRelation::new(reg.clone(), vec![levels.to_vec()]).unwrap();
    let classes = adiabats(&oracle, reg.space("G").unwrap()).unwrap();
    let as_names: Vec<Vec<&str>> = classes
        .iter()
        .map(|c| c.iter().map(|s| reg.state_name(*s)).collect())
        .collect();
    assert_eq!(
        as_names,
        vec![vec!["s0", "s2", "s5"], vec!["s1", "s4"], vec!["s3"]]
    );
}

#[test]
fn comparison_hypothesis_on_chains() {
    let reg = one_space(&["A", "B", "C"]);
    let (a, b, c) = (unit(&reg, "A"), unit(&reg, "B"), unit(&reg, "C"));
    let total = AccessibilityRelation::build(
        reg.clone(),
        [(a.clone(), b.clone()), (b.clone(), c.clone())],
        LambdaGrid::unit(),
    )
    .unwrap()
    .close(&ClosureOptions::default())
    .unwrap();
    let scope = ChScope::space(reg.space("G").unwrap());
    assert!(check_comparison_hypothesis(&total, &scope).holds());

    let reg = one_space(&["A", "B", "C", "D"]);
    let (a, b, c, d) = (
        unit(&reg, "A"),
        unit(&reg, "B"),
        unit(&reg, "C"),
        unit(&reg, "D"),
    );
    let chains = AccessibilityRelation::build(reg.clone(), [(a, b), (c, d)], LambdaGrid::unit())
        .unwrap()
        .close(&ClosureOptions::default())
        .unwrap();
    let result = check_comparison_hypothesis(&chains, &ChScope::space(reg.space("G").unwrap()));
    assert!(!result.holds());
}

#[test]
fn oracle_relation_satisfies_the_comparison_hypothesis_in_products() {
    let reg = one_space(&["a", "b", "c"]);
    let oracle = OracleRelation::new(reg.clone(), vec![vec![0.3, -1.0, 2.5]]).unwrap();
    let rel = oracle
        .materialize(half_grid(), &ClosureOptions::default())
        .unwrap();
    let scope = ChScope {
        spaces: None,
        max_parts: 3,
    };
    assert!(check_comparison_hypothesis(&rel, &scope).holds());
    assert!(scan_axioms(&rel).iter().all(|s| s.passed()));
    assert!(check_cancellation(&rel).holds());
}

#[test]
fn cancellation_fails_on_a_hand_built_relation() {
    let reg = one_space(&["X", "Y", "Z"]);
    let xz = CompoundState::new([(q(1, 1), st(&reg, "X")), (q(1, 1), st(&reg, "Z"))]).unwrap();
    let yz = CompoundState::new([(q(1, 1), st(&reg, "Y")), (q(1, 1), st(&reg, "Z"))]).unwrap();
    let rel = AccessibilityRelation::build(reg, [(xz, yz)], LambdaGrid::unit()).unwrap();
    assert!(!check_cancellation(&rel).holds());
}

#[test]
fn closing_is_idempotent_and_rejects_blowups() {
    let reg = one_space(&["X", "Y", "Z"]);
    let (x, y) = (unit(&reg, "X"), unit(&reg, "Y"));
    let rel = AccessibilityRelation::build(reg, [(x, y)], half_grid()).unwrap();
    let once = rel.close(&ClosureOptions::default()).unwrap();
    let twice = once.close(&ClosureOptions::default()).unwrap();
    assert!(once.same_facts(&twice));
    assert!(matches!(
        rel.close(&ClosureOptions {
            max_parts: 3,
            fact_budget: 50
        }),
        Err(OrderError::FactBudgetExceeded(50))
    ));
}

#[test]
fn stability_flags_missing_limit_facts() {
    let reg = one_space(&["X", "Y", "Z0", "Z1"]);
    let grid = LambdaGrid::new([q(1, 4), q(1, 2), q(1, 1)]).unwrap();
    let (x, y) = (unit(&reg, "X"), unit(&reg, "Y"));
    let (z0, z1) = (unit(&reg, "Z0"), unit(&reg, "Z1"));
    let premise = |eps: Rational| {
        (
            x.join(&z0.scaled(eps).unwrap()),
            y.join(&z1.scaled(eps).unwrap()),
        )
    };
    let family = EpsilonFamily {
        x: x.clone(),
        y: y.clone(),
        z0: z0.clone(),
        z1: z1.clone(),
        epsilons: vec![q(1, 2), q(1, 4)],
    };
    let rel = AccessibilityRelation::build(
        reg.clone(),
        [premise(q(1, 2)), premise(q(1, 4))],
        grid.clone(),
    )
    .unwrap()
    .with_families(vec![family.clone()])
    .close(&ClosureOptions {
        max_parts: 2,
        ..Default::default()
    })
    .unwrap();
    let report = check_stability(&rel);
    assert_eq!(report.families, 1);
    assert_eq!(report.flagged.len(), 1);

    let rel = AccessibilityRelation::build(reg, [premise(q(1, 2)), premise(q(1, 4)), (x, y)], grid)
        .unwrap()
        .with_families(vec![family])
        .close(&ClosureOptions {
            max_parts: 2,
            ..Default::default()
        })
        .unwrap();
    assert!(check_stability(&rel).passed());
}

#[test]
fn negative_coefficients_move_across() {
    let reg = one_space(&["X", "Y", "Z"]);
    let (lhs, rhs) = normalize_pair(
        &[
            (q(1, 1), st(&reg, "X")),
            (q(-1, 2), st(&reg, "Y")),
            (q(0, 1), st(&reg, "Z")),
        ],
        &[(q(1, 2), st(&reg, "Z"))],
    )
    .unwrap();
    assert_eq!(lhs, unit(&reg, "X"));
    assert_eq!(
        rhs,
        CompoundState::new([(q(1, 2), st(&reg, "Y")), (q(1, 2), st(&reg, "Z"))]).unwrap()
    );
}

fn random_relation(n_states: usize, facts: &[(usize, usize)]) -> AccessibilityRelation {
    let names: Vec<String> = (0..n_states).map(|i| format!("s{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let reg = one_space(&refs);
    let pairs: Vec<_> = facts
        .iter()
        .map(|&(a, b)| (unit(&reg, &names[a]), unit(&reg, &names[b])))
        .collect();
    AccessibilityRelation::build(reg, pairs, half_grid()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_relations_satisfy_the_axioms(
        n in 2usize..5,
        raw in proptest::collection::vec((0usize..5, 0usize..5), 0..5),
    ) {
        let facts: Vec<_> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
        let opts = ClosureOptions { max_parts: 2, ..Default::default() };
        let closed = random_relation(n, &facts).close(&opts).unwrap();
        for scan in scan_axioms(&closed) {
            prop_assert!(scan.passed(), "{:?}", scan);
        }
        let again = closed.close(&opts).unwrap();
        prop_assert!(closed.same_facts(&again));
    }

    #[test]
    fn strict_outcomes_are_antisymmetric_and_composition_gates_comparison(
        n in 2usize..5,
        raw in proptest::collection::vec((0usize..5, 0usize..5), 0..6),
    ) {
        let facts: Vec<_> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
        let opts = ClosureOptions { max_parts: 2, ..Default::default() };
        let closed = random_relation(n, &facts).close(&opts).unwrap();
        let reg = closed.registry();
        let universe = closed.universe();
        for x in &universe {
            for y in &universe {
                let c = classify(&closed, x, y).unwrap();
                prop_assert_eq!(classify(&closed, y, x).unwrap(), c.reversed());
                if x.composition(reg) != y.composition(reg) {
                    prop_assert_eq!(c, Classification::Incomparable);
                }
            }
        }
    }
}
