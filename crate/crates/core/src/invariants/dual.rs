use nalgebra::{DMatrix, DVector};

use super::conormal::potential_conormals;
use crate::domain::{ConvexDomain, Evaluator, Jet, PotentialField, Role};
use crate::error::{Error, Result};
use crate::exec::{try_map_slice, ExecPolicy};
use crate::linalg::{Matrix, Point};

/// Dual chart point `s = grad u / c` with `c = t.grad u - u`, and the jet of
/// the dual potential `u^dagger(s) = -1/c` there.
pub fn dual_point(jet: &Jet, t: &[f64]) -> Result<(Point, Jet)> {
    let n = t.len();
    let tv = DVector::from_column_slice(t);
    let c = tv.dot(&jet.gradient) - jet.value;
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Tangency { point: t.to_vec(), legendre: c });
    }
    let s = &jet.gradient / c;
    let ht = &jet.hessian * &tv;
    let ds_dt: Matrix = &jet.hessian / c - &jet.gradient * ht.transpose() / (c * c);
    let dt_ds = ds_dt.try_inverse().ok_or_else(|| Error::NotConvex { point: t.to_vec(), min_eigenvalue: 0.0 })?;
    let u = jet.value;
    let dw_dt = -DMatrix::identity(n, n) / u + &tv * jet.gradient.transpose() / (u * u);
    let hess = dw_dt * dt_ds;
    Ok((s, Jet { value: -1.0 / c, gradient: -&tv / u, hessian: 0.5 * (&hess + hess.transpose()) }))
}

/// Centroaffine dual potential, evaluated by inverting `t -> s` with Newton
/// seeded from the nearest precomputed sample.
#[derive(Debug, Clone)]
pub struct CentroaffineDual {
    base: PotentialField,
    seeds: Vec<(Point, Point)>,
}

const DUAL_TOL: f64 = 1e-14;
const DUAL_MAX_ITER: usize = 60;

impl CentroaffineDual {
    pub fn base(&self) -> &PotentialField {
        &self.base
    }

    /// Chart point `t` whose dual point is `s`.
    pub fn preimage(&self, s: &[f64]) -> Result<Point> {
        let sv = DVector::from_column_slice(s);
        let (_, seed) = self
            .seeds
            .iter()
            .min_by(|a, b| (&a.0 - &sv).norm().total_cmp(&(&b.0 - &sv).norm()))
            .ok_or_else(|| Error::DualInversion { point: s.to_vec(), residual: f64::NAN })?;
        let mut t = seed.clone();
        let resid = |t: &Point| -> Result<(Point, Matrix)> {
            let jet = self.base.jet(t.as_slice())?;
            let c = t.dot(&jet.gradient) - jet.value;
            let ht = &jet.hessian * t;
            let jac = &jet.hessian / c - &jet.gradient * ht.transpose() / (c * c);
            Ok((&jet.gradient / c - &sv, jac))
        };
        let (mut f, mut jac) = resid(&t)?;
        let scale = 1.0 + sv.norm();
        for _ in 0..DUAL_MAX_ITER {
            if f.norm() <= DUAL_TOL * scale {
                return Ok(t);
            }
            let step = jac
                .clone()
                .lu()
                .solve(&f)
                .ok_or_else(|| Error::DualInversion { point: s.to_vec(), residual: f.norm() })?;
            let mut lam = 1.0;
            let mut next = None;
            for _ in 0..40 {
                let trial = &t - &step * lam;
                if self.base.contains(trial.as_slice()) {
                    if let Ok((ft, jt)) = resid(&trial) {
                        if ft.norm() < f.norm() {
                            next = Some((trial, ft, jt));
                            break;
                        }
                    }
                }
                lam *= 0.5;
            }
            match next {
                Some((tt, ft, jt)) => {
                    t = tt;
                    f = ft;
                    jac = jt;
                }
                None => break,
            }
        }
        if f.norm() <= 1e-12 * scale {
            Ok(t)
        } else {
            Err(Error::DualInversion { point: s.to_vec(), residual: f.norm() })
        }
    }
}

impl Evaluator for CentroaffineDual {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn role(&self) -> Role {
        Role::PotentialU
    }
    fn domain(&self) -> Option<&ConvexDomain> {
        None
    }
    fn jet(&self, s: &[f64]) -> Result<Jet> {
        let t = self.preimage(s)?;
        let jet = self.base.jet(t.as_slice())?;
        Ok(dual_point(&jet, t.as_slice())?.1)
    }
    fn label(&self) -> String {
        format!("centroaffine_dual({})", self.base.label())
    }
}

/// Dual potential whose radial graph is the centroaffine-conormal image of
/// the radial graph of `-1/u`. `samples` must be chart points with
/// `t.grad u - u > 0`; their dual points seed later evaluations.
pub fn centroaffine_dual(u: &PotentialField, samples: &[Point], policy: ExecPolicy) -> Result<PotentialField> {
    u.require_role(Role::PotentialU)?;
    if samples.is_empty() {
        return Err(Error::Config("centroaffine dual needs at least one sample".into()));
    }
    let seeds = try_map_slice(policy, samples, |t| {
        let jet = u.jet(t.as_slice())?;
        let (s, _) = dual_point(&jet, t.as_slice())?;
        Ok((s, t.clone()))
    })?;
    Ok(PotentialField::analytic(CentroaffineDual { base: u.clone(), seeds }))
}

/// Affine conormal of the dual hypersurface at the dual point of `t`,
/// mapped back by `diag(-1, .., -1, 1)`, next to `det(u_ij)^{1/(n+2)} (t, 1)`.
pub fn dual_conormal_pair(u: &PotentialField, t: &[f64]) -> Result<(Point, Point)> {
    let n = t.len();
    let jet = u.jet(t)?;
    let (s, dual) = dual_point(&jet, t)?;
    let mut nu = potential_conormals(&dual, s.as_slice())?.nu;
    for i in 0..n {
        nu[i] = -nu[i];
    }
    let ld = super::metric::log_det(&jet, t)?;
    let mut expect = DVector::zeros(n + 1);
    for i in 0..n {
        expect[i] = t[i];
    }
    expect[n] = 1.0;
    Ok((nu, expect * (ld / (n as f64 + 2.0)).exp()))
}

/// Dual chart points of the samples.
pub fn dual_points(u: &PotentialField, samples: &[Point], policy: ExecPolicy) -> Result<Vec<Point>> {
    try_map_slice(policy, samples, |t| Ok(dual_point(&u.jet(t.as_slice())?, t.as_slice())?.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ConvexDomain;
    use crate::linalg::point;

    fn samples(d: &ConvexDomain, count: usize) -> Vec<Point> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        d.sample_interior(&mut rng, count, 0.05)
    }

    #[test]
    fn ball_is_self_dual() {
        let u = PotentialField::ball(2).unwrap();
        for t in samples(&ConvexDomain::unit_disk(), 20) {
            let (s, dj) = dual_point(&u.jet(t.as_slice()).unwrap(), t.as_slice()).unwrap();
            assert!((&s - &t).norm() < 1e-14);
            let direct = u.jet(s.as_slice()).unwrap();
            assert!((dj.value - direct.value).abs() < 1e-13);
            assert!((&dj.hessian - &direct.hessian).abs().max() < 1e-10 * (1.0 + direct.hessian.norm()));
        }
    }

    #[test]
    fn double_dual_returns_potential() {
        let d = ConvexDomain::unit_disk();
        let u =
            PotentialField::polynomial(2, &[-1.0, 0.1, 0.0, 0.3, 0.1, 0.5], Role::PotentialU, Some(d.clone())).unwrap();
        let pts = samples(&d, 30);
        let dual = centroaffine_dual(&u, &pts, ExecPolicy::Sequential).unwrap();
        let spts = dual_points(&u, &pts, ExecPolicy::Sequential).unwrap();
        let back = centroaffine_dual(&dual, &spts, ExecPolicy::Sequential).unwrap();
        for t in pts.iter().take(10) {
            let a = back.value(t.as_slice()).unwrap();
            let b = u.value(t.as_slice()).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn dual_conormal_is_radial_graph_of_det_root() {
        let d = ConvexDomain::unit_disk();
        let u =
            PotentialField::polynomial(2, &[-1.0, 0.1, 0.0, 0.3, 0.1, 0.5], Role::PotentialU, Some(d.clone())).unwrap();
        for t in samples(&d, 10) {
            let (a, b) = dual_conormal_pair(&u, t.as_slice()).unwrap();
            assert!((&a - &b).norm() < 1e-10, "{a} vs {b}");
        }
        let (a, b) = dual_conormal_pair(&PotentialField::ball(1).unwrap(), &[0.5]).unwrap();
        assert!((a - b).norm() < 1e-13);
        let _ = point(&[0.0]);
    }
}
