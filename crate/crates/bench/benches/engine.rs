use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use entropy_bench::{chain_relation, gas_oracle, lattice_graph};
use entropy_core::calibration::{solve_additive_constants, Infima};
use entropy_core::entropy::{construct_entropy, ConstructOptions};
use entropy_core::order::ClosureOptions;
use entropy_core::rational::Rational;
use entropy_core::simple::{integrate_adiabat, IntegratorOptions, SimpleSystemModel, StatePoint};
use entropy_core::thermal::{thermal_split, ThermalJoin};

fn closure(c: &mut Criterion) {
    let mut group = c.benchmark_group("closure");
    for n in [4, 6, 8] {
        let rel = chain_relation(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &rel, |b, rel| {
            b.iter(|| rel.close(&ClosureOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn entropy(c: &mut Criterion) {
    let g = gas_oracle(12);
    let space = g.registry.space("gas").unwrap();
    let (lo, hi) = {
        let mut ix: Vec<usize> = (0..g.sigma.len()).collect();
        ix.sort_by(|a, b| g.sigma[*a].total_cmp(&g.sigma[*b]));
        (ix[0], ix[ix.len() - 1])
    };
    let lo = g.registry.state("gas", &g.names[lo]).unwrap();
    let hi = g.registry.state("gas", &g.names[hi]).unwrap();
    c.bench_function("construct_entropy/144", |b| {
        b.iter(|| construct_entropy(&g.relation, space, lo, hi, &ConstructOptions::default()).unwrap())
    });
}

fn simple(c: &mut Criterion) {
    let gas = SimpleSystemModel::ideal_gas(Rational::from_integer(1));
    let vdw = SimpleSystemModel::van_der_waals(Rational::from_integer(1));
    let opts = IntegratorOptions::default();
    c.bench_function("integrate_adiabat/ideal_gas", |b| {
        let x = StatePoint::new(1.5, vec![1.0]);
        b.iter(|| integrate_adiabat(&gas, black_box(&x), &[vec![2.0], vec![1.0]], &opts).unwrap())
    });
    c.bench_function("integrate_adiabat/van_der_waals", |b| {
        let x = StatePoint::new(15.0, vec![2.0]);
        b.iter(|| integrate_adiabat(&vdw, black_box(&x), &[vec![6.0]], &opts).unwrap())
    });
}

fn thermal(c: &mut Criterion) {
    let join = ThermalJoin::new(
        SimpleSystemModel::ideal_gas(Rational::from_integer(1)),
        SimpleSystemModel::ideal_gas(Rational::from_integer(2)),
    )
    .unwrap();
    c.bench_function("thermal_split", |b| {
        b.iter(|| thermal_split(&join, black_box(12.0), &[0.5], &[2.0]).unwrap())
    });
}

fn calibration(c: &mut Criterion) {
    let mut group = c.benchmark_group("calibration");
    for n in [4, 8] {
        let g = lattice_graph(n, 6);
        group.bench_with_input(BenchmarkId::new("infima", n), &g, |b, g| b.iter(|| Infima::compute(g)));
        let inf = Infima::compute(&g);
        group.bench_with_input(BenchmarkId::new("constants", n), &g, |b, g| {
            b.iter(|| solve_additive_constants(g, &inf).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, closure, entropy, simple, thermal, calibration);
criterion_main!(benches);
