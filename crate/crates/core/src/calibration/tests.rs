use std::collections::BTreeMap;

use num_rational::BigRational;

use super::*;

fn q(text: &str) -> BigRational {
    crate::rational::parse_big_rational(text).unwrap()
}

fn space(id: &str, comp: &[&str], states: &[(&str, &str)]) -> SpaceSpec {
    SpaceSpec {
        id: id.into(),
        composition: comp.iter().map(|c| q(c)).collect(),
        parts: vec![],
        states: states
            .iter()
            .map(|(s, v)| StateEntry {
                id: s.to_string(),
                s: q(v),
            })
            .collect(),
    }
}

fn key(space: &str, state: &str) -> StateKey {
    StateKey {
        space: space.into(),
        state: state.into(),
    }
}

fn fact(a: (&str, &str), b: (&str, &str)) -> (StateKey, StateKey) {
    (key(a.0, a.1), key(b.0, b.1))
}

fn fin(x: &str) -> ExtReal {
    ExtReal::Finite(q(x))
}

/// Three spaces with `D(A,B) = 1`, `D(B,C) = 1`, `D(A,C) = 3`.
fn triangle() -> StateSpaceGraph {
    let spec = GraphSpec {
        spaces: vec![
            space("A", &["1"], &[("a", "0")]),
            space("B", &["1"], &[("b", "1")]),
            space("C", &["1"], &[("c", "2"), ("c3", "3")]),
        ],
        facts: vec![
            fact(("A", "a"), ("B", "b")),
            fact(("B", "b"), ("C", "c")),
            fact(("A", "a"), ("C", "c3")),
        ],
        catalysts: vec![],
        max_chain: 4,
    };
    StateSpaceGraph::from_spec(&spec).unwrap()
}

#[test]
fn ext_real_order_and_json() {
    assert!(ExtReal::NegInf < fin("-100") && fin("100") < ExtReal::PosInf);
    assert_eq!(serde_json::to_string(&ExtReal::PosInf).unwrap(), "\"inf\"");
    assert_eq!(serde_json::to_string(&fin("-3/2")).unwrap(), "\"-3/2\"");
    let back: ExtReal = serde_json::from_str("\"-inf\"").unwrap();
    assert_eq!(back, ExtReal::NegInf);
    assert_eq!(fin("1").plus(&ExtReal::PosInf), ExtReal::PosInf);
}

#[test]
fn direct_differences() {
    let g = triangle();
    let d = compute_d(&g);
    assert_eq!(d.by_id("A", "B"), Some(&fin("1")));
    assert_eq!(d.by_id("A", "C"), Some(&fin("3")));
    assert_eq!(d.by_id("B", "A"), Some(&ExtReal::PosInf));
    assert_eq!(d.by_id("A", "A"), Some(&fin("0")));
}

#[test]
fn chains_beat_direct_edges() {
    let g = triangle();
    let inf = Infima::compute(&g);
    assert_eq!(inf.e.value.by_id("A", "C"), Some(&fin("2")));
    assert!(inf.e.stable["A"]["C"]);
    assert_eq!(inf.f.by_id("A", "C"), Some(&fin("2")));
    let one = compute_e(&inf.d, 1);
    assert_eq!(one.value.by_id("A", "C"), Some(&fin("3")));
    assert!(!one.stable["A"]["C"]);
}

#[test]
fn lowering_cycle_is_unbounded() {
    let spec = GraphSpec {
        spaces: vec![
            space("A", &[], &[("a", "0")]),
            space("B", &[], &[("b", "0")]),
        ],
        facts: vec![fact(("A", "a"), ("B", "b")), fact(("B", "b"), ("A", "a"))],
        catalysts: vec![],
        max_chain: 3,
    };
    // D(A,B) = −1 into b, D(B,A) = −1 out of b2: the cycle lowers entropy.
    let mut g = spec.clone();
    g.spaces[1] = space("B", &[], &[("b", "-1"), ("b2", "1")]);
    g.facts = vec![fact(("A", "a"), ("B", "b")), fact(("B", "b2"), ("A", "a"))];
    let g = StateSpaceGraph::from_spec(&g).unwrap();
    let inf = Infima::compute(&g);
    assert_eq!(inf.e.exact.by_id("A", "B"), Some(&ExtReal::NegInf));
    let report = check_no_sinks(&g, &inf);
    assert!(!report.passed() && !report.unbounded.is_empty() && !report.lowering_cycles.is_empty());
    assert!(matches!(
        solve_additive_constants(&g, &inf),
        Err(CalibrationError::Sink(_))
    ));
    let ok = StateSpaceGraph::from_spec(&spec).unwrap();
    assert!(check_no_sinks(&ok, &Infima::compute(&ok)).passed());
}

#[test]
fn one_way_reaction_is_a_sink() {
    let g = triangle();
    let report = check_no_sinks(&g, &Infima::compute(&g));
    assert!(report.one_way.contains(&Pair {
        from: "A".into(),
        to: "B".into()
    }));
    assert!(!report.passed());
}

#[test]
fn catalyst_lowers_f() {
    let mut spaces = vec![
        space("A", &["1", "0"], &[("a", "0")]),
        space("B", &["1", "0"], &[("b", "5")]),
        space("K", &["0", "1"], &[("k", "0")]),
    ];
    for (id, part) in [("AK", "A"), ("BK", "B")] {
        spaces.push(SpaceSpec {
            id: id.into(),
            composition: vec![],
            parts: vec![
                PartSpec {
                    lambda: q("1"),
                    space: part.into(),
                },
                PartSpec {
                    lambda: q("1"),
                    space: "K".into(),
                },
            ],
            states: vec![StateEntry {
                id: "x".into(),
                s: q(if part == "A" { "0" } else { "2" }),
            }],
        });
    }
    let spec = GraphSpec {
        spaces,
        facts: vec![fact(("A", "a"), ("B", "b")), fact(("AK", "x"), ("BK", "x"))],
        catalysts: vec!["K".into()],
        max_chain: 4,
    };
    let g = StateSpaceGraph::from_spec(&spec).unwrap();
    let inf = Infima::compute(&g);
    assert_eq!(inf.e.value.by_id("A", "B"), Some(&fin("5")));
    assert_eq!(inf.f.by_id("A", "B"), Some(&fin("2")));
    assert_eq!(inf.catalyst["A"]["B"], "K");
    // Without the catalog F is E.
    let mut bare = spec.clone();
    bare.catalysts.clear();
    let g = StateSpaceGraph::from_spec(&bare).unwrap();
    let inf = Infima::compute(&g);
    assert_eq!(inf.f, inf.e.value);
}

#[test]
fn loader_rejects_bad_facts() {
    let spec = GraphSpec {
        spaces: vec![
            space("A", &["1"], &[("a", "0")]),
            space("W", &["2"], &[("w", "0")]),
        ],
        facts: vec![fact(("A", "a"), ("W", "w"))],
        catalysts: vec![],
        max_chain: 4,
    };
    assert!(matches!(
        StateSpaceGraph::from_spec(&spec),
        Err(CalibrationError::CompositionMismatch { .. })
    ));
    let mut unknown = spec.clone();
    unknown.facts = vec![fact(("A", "zz"), ("A", "a"))];
    assert!(matches!(
        StateSpaceGraph::from_spec(&unknown),
        Err(CalibrationError::UnknownState { .. })
    ));
}

#[test]
fn two_space_gap() {
    let spec = GraphSpec {
        spaces: vec![
            space("1", &[], &[("x", "0"), ("y", "0")]),
            space("2", &[], &[("p", "5"), ("r", "3")]),
        ],
        facts: vec![fact(("1", "x"), ("2", "p")), fact(("2", "r"), ("1", "y"))],
        catalysts: vec![],
        max_chain: 4,
    };
    let g = StateSpaceGraph::from_spec(&spec).unwrap();
    let inf = Infima::compute(&g);
    assert_eq!(inf.f.by_id("1", "2"), Some(&fin("5")));
    assert_eq!(inf.f.by_id("2", "1"), Some(&fin("-3")));
    assert_eq!(
        detect_gap(&g, &inf.f, 0, 1).unwrap(),
        Gap::Gap { width: q("2") }
    );
    let b = solve_additive_constants(&g, &inf).unwrap();
    let diff = &b.b["1"] - &b.b["2"];
    assert!(diff >= q("3") && diff <= q("5"), "{diff}");
    assert_eq!(b.method, SolveMethod::Potentials);
    assert!(check_constants(&g, &inf, &b, 1e-9).passed());
}

#[test]
fn equal_f_pins_all_constants() {
    let spec = GraphSpec {
        spaces: vec![
            space("A", &[], &[("a", "0")]),
            space("B", &[], &[("b", "0")]),
            space("C", &[], &[("c", "0")]),
        ],
        facts: vec![
            fact(("A", "a"), ("B", "b")),
            fact(("B", "b"), ("A", "a")),
            fact(("B", "b"), ("C", "c")),
            fact(("C", "c"), ("B", "b")),
        ],
        catalysts: vec![],
        max_chain: 4,
    };
    let g = StateSpaceGraph::from_spec(&spec).unwrap();
    let inf = Infima::compute(&g);
    let b = solve_additive_constants(&g, &inf).unwrap();
    assert!(b.b.values().all(|v| *v == q("0")));
    assert_eq!(b.gauges, vec!["A".to_string()]);
    assert_eq!(detect_gap(&g, &inf.f, 0, 2).unwrap(), Gap::NoGap);
}

#[test]
fn reaction_pins_water_and_leaves_the_noble_gas_free() {
    // Elements (H, O). Reaction H₂ + ½O₂ → H₂O with entropy change −1/2,
    // reverse with +1/2; argon is unrelated.
    let half = |sp: &str| PartSpec {
        lambda: q("1/2"),
        space: sp.into(),
    };
    let mut mix = SpaceSpec {
        id: "H2+O2/2".into(),
        composition: vec![],
        parts: vec![
            PartSpec {
                lambda: q("1"),
                space: "H2".into(),
            },
            half("O2"),
        ],
        states: vec![StateEntry {
            id: "m".into(),
            s: q("4"),
        }],
    };
    mix.states.push(StateEntry {
        id: "m2".into(),
        s: q("5"),
    });
    let spec = GraphSpec {
        spaces: vec![
            space("H2", &["2", "0", "0"], &[("h", "1")]),
            space("O2", &["0", "2", "0"], &[("o", "2")]),
            space("H2O", &["2", "1", "0"], &[("w", "3")]),
            space("Ar", &["0", "0", "1"], &[("a", "7")]),
            mix,
        ],
        facts: vec![
            fact(("H2+O2/2", "m"), ("H2O", "w")),
            fact(("H2O", "w"), ("H2+O2/2", "m2")),
        ],
        catalysts: vec![],
        max_chain: 4,
    };
    let g = StateSpaceGraph::from_spec(&spec).unwrap();
    let inf = Infima::compute(&g);
    assert_eq!(inf.f.by_id("H2+O2/2", "H2O"), Some(&fin("-1")));
    assert_eq!(inf.f.by_id("H2O", "H2+O2/2"), Some(&fin("2")));
    let b = solve_additive_constants(&g, &inf).unwrap();
    assert_eq!(b.method, SolveMethod::FourierMotzkin);
    let combo = &b.b["H2"] + &b.b["O2"] / q("2");
    assert_eq!(&b.b["H2+O2/2"], &combo);
    let diff = combo - &b.b["H2O"];
    assert!(diff >= q("-2") && diff <= q("-1"));
    assert_eq!(b.b["Ar"], q("0"));
    assert_ne!(b.component["Ar"], b.component["H2O"]);
    assert!(check_constants(&g, &inf, &b, 1e-9).passed());
}

#[test]
fn infeasible_composite_constraints_have_a_witness() {
    // A composite whose own states go down in entropy: F(P, P) < 0.
    let spec = GraphSpec {
        spaces: vec![
            space("A", &["1"], &[("a", "0")]),
            SpaceSpec {
                id: "AA".into(),
                composition: vec![],
                parts: vec![PartSpec {
                    lambda: q("2"),
                    space: "A".into(),
                }],
                states: vec![
                    StateEntry {
                        id: "u".into(),
                        s: q("1"),
                    },
                    StateEntry {
                        id: "d".into(),
                        s: q("0"),
                    },
                ],
            },
        ],
        facts: vec![fact(("AA", "u"), ("AA", "d"))],
        catalysts: vec![],
        max_chain: 2,
    };
    let g = StateSpaceGraph::from_spec(&spec).unwrap();
    let inf = Infima::compute(&g);
    assert!(matches!(
        solve_additive_constants(&g, &inf),
        Err(CalibrationError::Sink(_))
    ));
}

#[test]
fn accessibility_criterion_on_a_complete_instance() {
    let spaces = vec![
        space("A", &["1"], &[("a0", "0"), ("a1", "1"), ("a2", "2")]),
        space(
            "B",
            &["1"],
            &[("b0", "0"), ("b1", "1"), ("b2", "2"), ("b3", "3")],
        ),
        space("C", &["2"], &[("c0", "0"), ("c1", "1")]),
    ];
    let b = BTreeMap::from([
        ("A".into(), q("1")),
        ("B".into(), q("0")),
        ("C".into(), q("5")),
    ]);
    let g = StateSpaceGraph::complete_from_entropy(spaces, &b, vec![], 4).unwrap();
    let inf = Infima::compute(&g);
    assert_eq!(inf.f.by_id("A", "B"), Some(&fin("1")));
    assert_eq!(inf.f.by_id("B", "A"), Some(&fin("-1")));
    assert_eq!(inf.f.by_id("A", "C"), Some(&ExtReal::PosInf));
    let r = verify_accessibility_criterion(&g, &inf.f);
    assert!(r.passed(), "{:?}", r.mismatches);
    assert_eq!(r.checked, 9 * 9);
    assert!(check_no_sinks(&g, &inf).passed());
    assert_eq!(detect_gap(&g, &inf.f, 0, 1).unwrap(), Gap::NoGap);
    // Dropping the fact that realizes D(A,B) breaks the biconditional.
    let mut spec = g.to_spec();
    spec.facts
        .retain(|(x, y)| !(x.state == "a0" && y.state == "b1"));
    let g2 = StateSpaceGraph::from_spec(&spec).unwrap();
    let inf2 = Infima::compute(&g2);
    assert!(!verify_accessibility_criterion(&g2, &inf2.f).passed());
}

#[test]
fn matrix_json_uses_sentinels() {
    let g = triangle();
    let v = serde_json::to_value(compute_d(&g)).unwrap();
    assert_eq!(v["B"]["A"], "inf");
    assert_eq!(v["A"]["B"], "1");
}
