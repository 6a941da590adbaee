use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{num, StudyReport};
use crate::domain::{normalize_map, transform_potential, ConvexDomain, GridSpec, PotentialField, ProjectiveMap, Role};
use crate::error::{Error, Result};
use crate::exec::{try_map_slice, ExecPolicy};
use crate::invariants::{conormals_at, metric_at, residual_from_jet, MetricKind};
use crate::linalg::{max_abs, Point};
use crate::solver::{solve_affine_sphere, SolverConfig};

/// Random normalized maps near the identity. With `projective` the last
/// row gets entries up to 0.15, which keeps the homogeneous coordinate
/// positive on the closed unit ball.
pub fn random_maps(n: usize, count: usize, seed: u64, projective: bool) -> Result<Vec<ProjectiveMap>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut m = DMatrix::identity(n + 1, n + 1);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += rng.random_range(-0.3..0.3);
                }
                m[(i, n)] = rng.random_range(-0.2..0.2);
                if projective {
                    m[(n, i)] = rng.random_range(-0.15..0.15);
                }
            }
            normalize_map(&m)
        })
        .collect()
}

/// Largest deviations of the three transformation laws under one map.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LawDeviation {
    pub residual: f64,
    pub conormal: f64,
    pub metric: f64,
}

impl LawDeviation {
    fn max(self, o: LawDeviation) -> LawDeviation {
        LawDeviation {
            residual: self.residual.max(o.residual),
            conormal: self.conormal.max(o.conormal),
            metric: self.metric.max(o.metric),
        }
    }
}

/// Deviations at `t` between `u` and its image under `map`. Conormals and
/// metrics are compared relative to `max(1, size)`.
pub fn law_deviation(
    u: &PotentialField,
    moved: &PotentialField,
    map: &ProjectiveMap,
    t: &Point,
) -> Result<LawDeviation> {
    let (tn, lambda) = map.apply(t);
    if !(lambda > 0.0) {
        return Err(Error::ChartOverflow { points: vec![t.iter().copied().collect()] });
    }
    let (ts, tns) = (t.as_slice(), tn.as_slice());
    let residual = (residual_from_jet(Role::PotentialU, &moved.jet(tns)?, tns)?
        - residual_from_jet(Role::PotentialU, &u.jet(ts)?, ts)?)
    .abs();
    let (c0, c1) = (conormals_at(u, ts)?, conormals_at(moved, tns)?);
    let act = map.conormal_action();
    let rel = |a: &Point, b: &Point| (a - b).amax() / b.amax().max(1.0);
    let conormal = rel(&c1.nu, &(&act * &c0.nu)).max(rel(&c1.mu, &(&act * &c0.mu)));
    let jac = map.jacobian(t);
    let mut metric: f64 = 0.0;
    for kind in MetricKind::POTENTIAL_KINDS {
        let g0 = metric_at(kind, u, ts)?;
        let g1 = metric_at(kind, moved, tns)?;
        let pulled = jac.transpose() * g1 * &jac;
        metric = metric.max(max_abs(&(pulled - &g0)) / max_abs(&g0).max(1.0));
    }
    Ok(LawDeviation { residual, conormal, metric })
}

/// Transformation laws of residual, conormals and metrics over `maps`,
/// at `samples` random points of the domain of `u`. Maps whose image leaves
/// the chart are recorded and skipped.
pub fn equivariance_suite(
    u: &PotentialField,
    maps: &[ProjectiveMap],
    samples: usize,
    seed: u64,
    tolerance: f64,
    policy: ExecPolicy,
) -> Result<StudyReport> {
    u.require_role(Role::PotentialU)?;
    let domain = u.domain().ok_or_else(|| Error::Study("equivariance needs a bounded domain".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = domain.sample_interior(&mut rng, samples, 0.05);
    let mut report = StudyReport::new("equivariance");
    report.param("field", u.label()).param("maps", maps.len()).param("samples", samples).param("seed", seed);
    let mut worst = LawDeviation::default();
    let mut skipped = 0;
    for (i, map) in maps.iter().enumerate() {
        let moved = match transform_potential(u, map) {
            Ok(m) => m,
            Err(Error::ChartOverflow { .. }) => {
                skipped += 1;
                report.row(&[("map", num(i as f64)), ("skipped", num(1.0))]);
                continue;
            }
            Err(e) => return Err(e),
        };
        let devs = try_map_slice(policy, &points, |t| law_deviation(u, &moved, map, t))?;
        let d = devs.into_iter().fold(LawDeviation::default(), LawDeviation::max);
        report.row(&[
            ("map", num(i as f64)),
            ("skipped", num(0.0)),
            ("residual", num(d.residual)),
            ("conormal", num(d.conormal)),
            ("metric", num(d.metric)),
        ]);
        worst = worst.max(d);
    }
    report
        .measure("max_residual_deviation", worst.residual)
        .measure("max_conormal_deviation", worst.conormal)
        .measure("max_metric_deviation", worst.metric)
        .measure("skipped_maps", skipped)
        .check("residual_law", worst.residual <= tolerance)
        .check("conormal_law", worst.conormal <= tolerance)
        .check("metric_law", worst.metric <= tolerance);
    Ok(report)
}

/// Solves on `domain` and on its image under an affine `map` with grids of
/// the same shape, and returns `(max |u~(A t) - beta u(t)|, spacing)` over
/// matching nodes.
pub fn solver_equivariance(domain: &ConvexDomain, map: &ProjectiveMap, config: &SolverConfig) -> Result<(f64, f64)> {
    if !map.is_affine() {
        return Err(Error::Study("solver equivariance needs an affine map".into()));
    }
    let image = domain.image_under(map)?;
    let g0 = GridSpec::new(domain, config.nodes)?;
    let g1 = GridSpec::new(&image, config.nodes)?;
    let (u0, _) = solve_affine_sphere(domain, &g0, config)?;
    let (u1, _) = solve_affine_sphere(&image, &g1, config)?;
    let missing = || Error::Study("grid solution expected".into());
    let (a, b) = (u0.as_grid().ok_or_else(missing)?, u1.as_grid().ok_or_else(missing)?);
    let mut dev: f64 = 0.0;
    for k in 0..g0.interior_count() {
        let t = g0.interior_coord(k);
        let (tn, _) = map.apply(&t);
        let Some(j) = g1.node_at(tn.as_slice(), 1e-6) else { continue };
        let beta = map.pull_back(&tn).1;
        dev = dev.max((b.values()[j] - beta * a.values()[k]).abs());
    }
    Ok((dev, g0.max_spacing()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_no_deviation() {
        let u = PotentialField::ball(2).unwrap();
        let r = equivariance_suite(&u, &[ProjectiveMap::identity(2)], 20, 1, 1e-9, ExecPolicy::Sequential).unwrap();
        assert_eq!(r.number("max_residual_deviation"), Some(0.0));
        assert_eq!(r.number("max_conormal_deviation"), Some(0.0));
        assert_eq!(r.number("max_metric_deviation"), Some(0.0));
    }

    #[test]
    fn random_projective_maps_respect_the_laws() {
        let u = PotentialField::ball(2).unwrap();
        let maps = random_maps(2, 4, 7, true).unwrap();
        let r = equivariance_suite(&u, &maps, 30, 3, 1e-9, ExecPolicy::Sequential).unwrap();
        assert!(r.passed(), "{:?}", r.measured);
    }

    #[test]
    fn solver_commutes_with_grid_aligned_maps() {
        let map = ProjectiveMap::affine(&DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 0.8]), &[0.3, -0.1]).unwrap();
        let cfg = SolverConfig::with_nodes(33);
        let (dev, h) = solver_equivariance(&ConvexDomain::unit_disk(), &map, &cfg).unwrap();
        assert!(dev <= h * h, "{dev} vs {}", h * h);
    }
}
