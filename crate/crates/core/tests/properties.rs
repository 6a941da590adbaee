use affine_sphere::domain::{transform_potential, ConvexDomain, PotentialField, Role};
use affine_sphere::harness::random_maps;
use affine_sphere::invariants::{coincidence_sample, invariants_csv, residual_from_jet};
use affine_sphere::legendre::involution_error;
use affine_sphere::linalg::point;
use affine_sphere::ExecPolicy;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn moved_ball_stays_a_solution(seed in 0u64..10_000, r in 0.0..0.9f64, a in 0.0..std::f64::consts::TAU) {
        let map = random_maps(2, 1, seed, true).unwrap().remove(0);
        let moved = transform_potential(&PotentialField::ball(2).unwrap(), &map).unwrap();
        let (tn, _) = map.apply(&point(&[r * a.cos(), r * a.sin()]));
        let res = residual_from_jet(Role::PotentialU, &moved.jet(tn.as_slice()).unwrap(), tn.as_slice()).unwrap();
        prop_assert!(res.abs() < 1e-9, "{res}");
    }

    #[test]
    fn legendre_is_an_involution_on_quadratics(a in 0.2..3.0f64, b in -0.5..0.5f64, c in 0.2..3.0f64) {
        prop_assume!(a * c > b * b + 0.05);
        let f = PotentialField::polynomial(2, &[0.0, 0.0, 0.0, a, b, c], Role::GraphF, None).unwrap();
        let pts = vec![point(&[0.3, -0.2]), point(&[-0.7, 0.1]), point(&[0.0, 0.0])];
        prop_assert!(involution_error(&f, &pts, ExecPolicy::Sequential).unwrap() < 1e-10);
    }

    #[test]
    fn deviation_bound_is_exact(s in 0.1..2.0f64, r in 0.0..0.8f64) {
        prop_assume!(s * 1.25 * r * r < 0.9);
        let u = PotentialField::quadratic(2, -1.0, s, Role::PotentialU, None).unwrap();
        let c = coincidence_sample(&u, &[r, 0.5 * r]).unwrap();
        prop_assert!((c.max_pairwise - c.predicted).abs() <= 1e-10 * (1.0 + c.predicted));
    }
}

#[test]
fn output_does_not_depend_on_policy() {
    let u = PotentialField::ball(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = ConvexDomain::unit_disk().sample_interior(&mut rng, 300, 0.05);
    let seq = invariants_csv(&u, &pts, ExecPolicy::Sequential).unwrap();
    let par = invariants_csv(&u, &pts, ExecPolicy::Parallel).unwrap();
    assert_eq!(seq, par);
}
