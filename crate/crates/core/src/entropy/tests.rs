use std::collections::BTreeMap;
use std::sync::Arc;

use super::*;
use crate::order::{ClosureOptions, LambdaGrid, OracleRelation, SpaceRegistry, StateSpaceDecl};

fn registry(spaces: &[(&str, &[&str])]) -> Arc<SpaceRegistry> {
    Arc::new(
        SpaceRegistry::new(
            spaces
                .iter()
                .map(|(id, states)| StateSpaceDecl::new(*id, vec![], states))
                .collect(),
        )
        .unwrap(),
    )
}

fn oracle(values: &[f64]) -> (Arc<SpaceRegistry>, OracleRelation) {
    let names: Vec<String> = (0..values.len()).map(|i| format!("s{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let reg = registry(&[("G", &refs)]);
    let rel = OracleRelation::new(reg.clone(), vec![values.to_vec()]).unwrap();
    (reg, rel)
}

#[test]
fn references_get_zero_and_one() {
    let (reg, rel) = oracle(&[0.5, 2.0, 1.0, 3.5]);
    let g = reg.space("G").unwrap();
    let x0 = reg.state("G", "s0").unwrap();
    let x1 = reg.state("G", "s1").unwrap();
    let t = construct_entropy(&rel, g, x0, x1, &ConstructOptions::default()).unwrap();
    assert_eq!(t.get("s0"), Some(0.0));
    assert_eq!(t.get("s1"), Some(1.0));
    // σ = 1.0 lies one third of the way, σ = 3.5 is λ = 2 (beyond X₁).
    assert!((t.get("s2").unwrap() - 1.0 / 3.0).abs() <= 1.0 / 128.0);
    assert_eq!(t.get("s3"), Some(2.0));
}

#[test]
fn grid_sup_is_the_floor_on_the_grid() {
    let (reg, rel) = oracle(&[0.0, 1.0, 0.3, -0.7]);
    let g = reg.space("G").unwrap();
    let opts = ConstructOptions {
        search: SupSearch::grid(Rational::new(1, 10)),
        allow_constant: false,
    };
    let t = construct_entropy(
        &rel,
        g,
        reg.state("G", "s0").unwrap(),
        reg.state("G", "s1").unwrap(),
        &opts,
    )
    .unwrap();
    assert!((t.get("s2").unwrap() - 0.3).abs() < 1e-12);
    assert!((t.get("s3").unwrap() + 0.7).abs() < 1e-12);
}

#[test]
fn bisection_matches_the_oracle() {
    let (reg, rel) = oracle(&[0.0, 4.0, 1.234_567, 9.9]);
    let g = reg.space("G").unwrap();
    let opts = ConstructOptions {
        search: SupSearch::bisection(),
        allow_constant: false,
    };
    let t = construct_entropy(
        &rel,
        g,
        reg.state("G", "s0").unwrap(),
        reg.state("G", "s1").unwrap(),
        &opts,
    )
    .unwrap();
    let tol = 2f64.powi(-20);
    assert!((t.get("s2").unwrap() - 1.234_567 / 4.0).abs() <= tol);
    assert!((t.get("s3").unwrap() - 9.9 / 4.0).abs() <= tol);
}

#[test]
fn range_and_reference_errors() {
    let (reg, rel) = oracle(&[0.0, 1.0, 100.0, 0.0]);
    let g = reg.space("G").unwrap();
    let s = |n: &str| reg.state("G", n).unwrap();
    assert!(matches!(
        construct_entropy(&rel, g, s("s0"), s("s1"), &ConstructOptions::default()),
        Err(EntropyError::RangeExhausted { .. })
    ));
    assert!(matches!(
        construct_entropy(&rel, g, s("s0"), s("s3"), &ConstructOptions::default()),
        Err(EntropyError::NoReferencePair { .. })
    ));
    let opts = ConstructOptions {
        allow_constant: true,
        ..Default::default()
    };
    let t = construct_entropy(&rel, g, s("s0"), s("s3"), &opts).unwrap();
    assert!(t.constant);
    assert!(t.values.iter().all(|e| e.s == 0.0));
}

#[test]
fn unrelated_state_has_no_supremum_in_range() {
    // X0 ≺ X1 but the third state is unrelated to everything.
    let reg = registry(&[("G", &["X0", "X1", "Z"])]);
    let s = |n: &str| reg.state("G", n).unwrap();
    let rel = AccessibilityRelation::build(
        reg.clone(),
        [(
            CompoundState::single(s("X0")),
            CompoundState::single(s("X1")),
        )],
        LambdaGrid::new([Rational::new(1, 2), Rational::from_integer(1)]).unwrap(),
    )
    .unwrap()
    .close(&ClosureOptions::default())
    .unwrap();
    let opts = ConstructOptions {
        search: SupSearch::Grid {
            resolution: Rational::new(1, 2),
            lo: Rational::zero(),
            hi: Rational::from_integer(1),
        },
        allow_constant: false,
    };
    let err = construct_entropy(&rel, reg.space("G").unwrap(), s("X0"), s("X1"), &opts);
    assert!(
        matches!(err, Err(EntropyError::RangeExhausted { .. })),
        "{err:?}"
    );
}

#[test]
fn explicit_relation_from_an_oracle() {
    let reg = registry(&[("G", &["a", "b", "c", "d"])]);
    let sigma = OracleRelation::new(reg.clone(), vec![vec![0.0, 1.0, 0.5, 0.0]]).unwrap();
    let rel = sigma
        .materialize(
            LambdaGrid::new([Rational::new(1, 2), Rational::from_integer(1)]).unwrap(),
            &ClosureOptions::default(),
        )
        .unwrap();
    let s = |n: &str| reg.state("G", n).unwrap();
    let opts = ConstructOptions {
        search: SupSearch::Grid {
            resolution: Rational::new(1, 2),
            lo: Rational::from_integer(-1),
            hi: Rational::from_integer(2),
        },
        allow_constant: false,
    };
    let t = construct_entropy(&rel, reg.space("G").unwrap(), s("a"), s("b"), &opts).unwrap();
    assert_eq!(
        t.values.iter().map(|e| e.s).collect::<Vec<_>>(),
        vec![0.0, 1.0, 0.5, 0.0]
    );
    // λ > 1 is not representable on this grid, so the value for X₁ is capped.
    assert!(t.values[1].universe_capped && !t.values[2].universe_capped);
    let mut tables = BTreeMap::new();
    tables.insert("G".to_string(), t);
    let report = verify_relation(&rel, &tables, &BTreeMap::new()).unwrap();
    assert!(report.passed());
    assert!(report.checked > 0);
}

#[test]
fn principle_flags_unequal_entropies_on_an_adiabat() {
    let reg = registry(&[("G", &["X", "Y"])]);
    let s = |n: &str| reg.state("G", n).unwrap();
    let (x, y) = (CompoundState::single(s("X")), CompoundState::single(s("Y")));
    let rel = AccessibilityRelation::build(
        reg.clone(),
        [(x.clone(), y.clone()), (y.clone(), x.clone())],
        LambdaGrid::unit(),
    )
    .unwrap()
    .close(&ClosureOptions {
        max_parts: 1,
        ..Default::default()
    })
    .unwrap();
    let table = EntropyTable {
        space: "G".into(),
        ref_low: "X".into(),
        ref_high: "Y".into(),
        resolution: 1.0 / 128.0,
        constant: false,
        values: vec![
            TableEntry {
                state: "X".into(),
                s: 0.0,
                universe_capped: false,
            },
            TableEntry {
                state: "Y".into(),
                s: 0.5,
                universe_capped: false,
            },
        ],
    };
    let tables = BTreeMap::from([("G".to_string(), table)]);
    let report = verify_relation(&rel, &tables, &BTreeMap::new()).unwrap();
    assert_eq!(report.violations.len(), 2);
    assert!((report.max_violation - (0.5 - 1.0 / 128.0 - 1e-12)).abs() < 1e-9);
}

fn table(values: &[(&str, f64)]) -> EntropyTable {
    EntropyTable {
        space: "G".into(),
        ref_low: values[0].0.into(),
        ref_high: values[1].0.into(),
        resolution: 1.0 / 128.0,
        constant: false,
        values: values
            .iter()
            .map(|(s, v)| TableEntry {
                state: s.to_string(),
                s: *v,
                universe_capped: false,
            })
            .collect(),
    }
}

#[test]
fn affine_fits() {
    let t = table(&[("a", 0.0), ("b", 1.0), ("c", 0.25)]);
    let fit = fit_affine(&t, &t).unwrap();
    assert_eq!((fit.a, fit.b, fit.max_residual), (1.0, 0.0, 0.0));
    let fit = fit_affine(&t, &t.scaled(29.0)).unwrap();
    assert!((fit.a - 29.0).abs() < 1e-12 && fit.b.abs() < 1e-12 && fit.max_residual < 1e-12);
    let flat = table(&[("a", 0.5), ("b", 0.5), ("c", 0.5)]);
    assert!(matches!(
        fit_affine(&flat, &t),
        Err(EntropyError::DegenerateTable(_))
    ));
}

#[test]
fn calibration_of_scaled_tables() {
    let reg = registry(&[("A", &["lo", "hi"]), ("B", &["lo", "hi"])]);
    let mk = |space: &str, hi: f64| EntropyTable {
        space: space.into(),
        ref_low: "lo".into(),
        ref_high: "hi".into(),
        resolution: 1.0 / 128.0,
        constant: false,
        values: vec![
            TableEntry {
                state: "lo".into(),
                s: 0.0,
                universe_capped: false,
            },
            TableEntry {
                state: "hi".into(),
                s: hi,
                universe_capped: false,
            },
        ],
    };
    let cal = Calibrators {
        x0: reg.state("A", "lo").unwrap(),
        x1: reg.state("A", "hi").unwrap(),
        y0: reg.state("B", "lo").unwrap(),
        y1: reg.state("B", "hi").unwrap(),
    };
    let same = calibrate_multiplicative(&reg, &mk("A", 1.0), &mk("B", 1.0), &cal).unwrap();
    assert_eq!(same.a["B"], 1.0);
    let tripled = calibrate_multiplicative(&reg, &mk("A", 1.0), &mk("B", 3.0), &cal).unwrap();
    assert!((tripled.a["B"] - 1.0 / 3.0).abs() < 1e-15);
    assert!(matches!(
        calibrate_multiplicative(&reg, &mk("A", 1.0), &mk("B", 0.0), &cal),
        Err(EntropyError::DegenerateCalibrator(_))
    ));
}

#[test]
fn calibrators_between_symmetric_copies() {
    let reg = registry(&[("A", &["p", "q"]), ("B", &["p", "q"])]);
    let rel = OracleRelation::new(reg.clone(), vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
    let cal = find_calibrators(&rel, reg.space("A").unwrap(), reg.space("B").unwrap()).unwrap();
    assert_eq!(
        (cal.x0, cal.x1, cal.y0, cal.y1),
        (
            reg.state("A", "p").unwrap(),
            reg.state("A", "q").unwrap(),
            reg.state("B", "p").unwrap(),
            reg.state("B", "q").unwrap()
        )
    );
}

#[test]
fn no_calibrators_without_cross_facts() {
    let reg = registry(&[("A", &["p", "q"]), ("B", &["p", "q"])]);
    let s = |sp: &str, n: &str| CompoundState::single(reg.state(sp, n).unwrap());
    let rel = AccessibilityRelation::build(
        reg.clone(),
        [(s("A", "p"), s("A", "q")), (s("B", "p"), s("B", "q"))],
        LambdaGrid::unit(),
    )
    .unwrap()
    .close(&ClosureOptions::default())
    .unwrap();
    assert!(matches!(
        find_calibrators(&rel, reg.space("A").unwrap(), reg.space("B").unwrap()),
        Err(EntropyError::NoCalibrators(..))
    ));
}
