use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use affine_sphere::domain::{ConvexDomain, PotentialField};
use affine_sphere::harness::scan_q;
use affine_sphere::invariants::invariants_csv;
use affine_sphere::solver::{solve_on, SolverConfig};
use affine_sphere::ExecPolicy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const POLICIES: [(&str, ExecPolicy); 2] = [("sequential", ExecPolicy::Sequential), ("parallel", ExecPolicy::Parallel)];

fn solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_disk_65");
    g.sample_size(10);
    let disk = ConvexDomain::unit_disk();
    for (name, policy) in POLICIES {
        let cfg = SolverConfig { nodes: 65, policy, ..SolverConfig::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| solve_on(&disk, &cfg).unwrap()));
    }
    g.finish();
}

fn invariants(c: &mut Criterion) {
    let mut g = c.benchmark_group("invariants_2000_points");
    let u = PotentialField::ball(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pts = ConvexDomain::unit_disk().sample_interior(&mut rng, 2000, 0.05);
    for (name, policy) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| invariants_csv(&u, &pts, policy).unwrap()));
    }
    g.finish();
}

fn gradient_scan(c: &mut Criterion) {
    let mut g = c.benchmark_group("gradient_scan_h4_129");
    g.sample_size(20);
    let f = PotentialField::hyperboloid(2).unwrap();
    for (name, policy) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| scan_q(&f, 4.0, 129, policy).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, solve, invariants, gradient_scan);
criterion_main!(benches);
