use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quadreg::factors::{AtomLabel, QuadraticFactor};
use quadreg::gf::{GroupElement, Prime, Space, SymMatrix};
use quadreg::gowers::{u3_eighth_fast, BoundedFunction};
use quadreg::localnorms::{omega_count, FactorForms};
use quadreg::regularity::{best_correlation, RegularityConfig};
use quadreg::set::SubsetOfG;
use quadreg::vc2::vc2_dim;
use quadreg::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn space(n: usize) -> Space {
    Space::new(Prime::new(3).unwrap(), n).unwrap()
}

fn random_values(s: &Space, seed: u64) -> BoundedFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BoundedFunction::from_values(s, (0..s.size()).map(|_| rng.gen_range(-1.0..=1.0)).collect()).unwrap()
}

fn norms(c: &mut Criterion) {
    let s = space(4);
    let f = random_values(&s, 1);
    let mut g = c.benchmark_group("u3_eighth_fast n=4");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| u3_eighth_fast(&s, &f, exec)));
    }
    g.finish();

    let s = space(3);
    let factor = QuadraticFactor::new(s.p(), 3, vec![GroupElement::unit(3, 0)], vec![SymMatrix::identity(3)]).unwrap();
    let forms = FactorForms::new(&s, &factor);
    let e = AtomLabel::new(vec![1], vec![1]);
    let mut g = c.benchmark_group("omega_count n=3");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| omega_count(&forms, &e, exec).unwrap()));
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let s = space(3);
    let f = random_values(&s, 2);
    let atom: Vec<usize> = (0..s.size()).collect();
    let mut g = c.benchmark_group("exhaustive oracle n=3");
    g.sample_size(10);
    for (name, exec) in MODES {
        let config = RegularityConfig { exec, ..RegularityConfig::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| best_correlation(&s, &f, &atom, &config, 0).unwrap()));
    }
    g.finish();
}

fn vc2(c: &mut Criterion) {
    let s = space(3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = SubsetOfG::from_membership(&s, (0..s.size()).map(|_| rng.gen_bool(0.5)).collect()).unwrap();
    let mut g = c.benchmark_group("vc2_dim n=3");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| vc2_dim(&s, &a, 3, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, norms, oracle, vc2);
criterion_main!(benches);
