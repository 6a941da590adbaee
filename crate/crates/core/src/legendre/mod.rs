//! Legendre transform `v(y) = y.x - f(x)`, `y = grad f(x)`, of convex graph
//! functions, with the gradient identity and the duality gap.

mod dual;
mod resample;

use std::sync::Arc;

use nalgebra::DVector;

use crate::domain::{GridPotential, PotentialField, Role};
use crate::error::{Error, Result};
use crate::exec::{map_slice, try_map_slice, ExecPolicy};
use crate::linalg::{sym_eigenvalues, Point};

pub use dual::{invert_gradient, LegendreDual, NEWTON_MAX_ITER, NEWTON_RTOL};
pub use resample::{image_domain, push_forward, resample, Pushed};

/// Gradient at the origin above which `f` is not minimized there.
pub const ORIGIN_GRADIENT_TOL: f64 = 1e-8;

/// `f` with its transform `v`. Grid pairs also keep `v` as a function of
/// `x` on the grid of `f`.
#[derive(Debug, Clone)]
pub struct LegendrePair {
    pub f: PotentialField,
    pub v: PotentialField,
    v_of_x: Option<Arc<GridPotential>>,
}

impl LegendrePair {
    /// `y(x) = grad f(x)`.
    pub fn gradient_map(&self, x: &[f64]) -> Result<Point> {
        Ok(self.f.jet(x)?.gradient)
    }

    /// `x(y) = grad v(y)`.
    pub fn inverse_map(&self, y: &[f64]) -> Result<Point> {
        Ok(self.v.jet(y)?.gradient)
    }

    /// `v(y(x))`.
    pub fn v_at_x(&self, x: &[f64]) -> Result<f64> {
        match &self.v_of_x {
            Some(g) => Ok(g.jet(x)?.value),
            None => Ok(self.v.jet(self.gradient_map(x)?.as_slice())?.value),
        }
    }

    pub fn is_grid(&self) -> bool {
        self.v_of_x.is_some()
    }
}

/// Analytic `f` gets a Newton-inverted transform; a grid `f` is pushed
/// forward node by node and resampled on a grid of the same shape.
pub fn legendre_transform(f: &PotentialField, policy: ExecPolicy) -> Result<LegendrePair> {
    f.require_role(Role::GraphF)?;
    match f {
        PotentialField::Analytic(_) => {
            Ok(LegendrePair { f: f.clone(), v: PotentialField::analytic(LegendreDual::new(f)?), v_of_x: None })
        }
        PotentialField::Grid(g) => {
            let pushed = push_forward(g, policy)?;
            let v = resample(&pushed, g.grid().shape())?;
            let along_x =
                GridPotential::new(g.grid().clone(), pushed.iter().map(|p| p.v).collect(), Role::Scalar, false)?;
            Ok(LegendrePair { f: f.clone(), v: PotentialField::grid(v), v_of_x: Some(Arc::new(along_x)) })
        }
    }
}

/// `dv/dx^j - x^i f_ij` at `x`. Analytic pairs differentiate `v` in `y` and
/// apply the chain rule; grid pairs difference `v(y(x))` on the grid of `f`,
/// so `x` has to be a node there.
pub fn gradient_identity_defect(pair: &LegendrePair, x: &[f64]) -> Result<Point> {
    let jet = pair.f.jet(x)?;
    let xv = DVector::from_column_slice(x);
    let rhs = &jet.hessian * &xv;
    let lhs = match &pair.v_of_x {
        None => &jet.hessian * pair.v.jet(jet.gradient.as_slice())?.gradient,
        Some(g) => {
            let k = g.grid().node_at(x, 1e-9).ok_or_else(|| Error::OutsideDomain { point: x.to_vec() })?;
            g.fd_gradient(k)?
        }
    };
    Ok(lhs - rhs)
}

/// Max norm of the gradient identity defect over the nodes of a grid pair
/// whose boundary measure is at least `margin`.
pub fn grid_identity_defect(pair: &LegendrePair, margin: f64, policy: ExecPolicy) -> Result<f64> {
    let g = pair.v_of_x.as_ref().ok_or_else(|| Error::Study("grid pair required".into()))?;
    let grid = g.grid();
    let nodes: Vec<Point> =
        (0..grid.interior_count()).filter(|&k| grid.measure(k) >= margin).map(|k| grid.interior_coord(k)).collect();
    let d = try_map_slice(policy, &nodes, |x| Ok(gradient_identity_defect(pair, x.as_slice())?.amax()))?;
    Ok(d.into_iter().fold(0.0, f64::max))
}

/// Checks that `f` attains its minimum at the origin.
pub fn require_origin_minimum(f: &PotentialField) -> Result<()> {
    let n = f.dim();
    let zero = vec![0.0; n];
    match f.as_grid() {
        None => {
            let g = f.jet(&zero)?.gradient.norm();
            if g > ORIGIN_GRADIENT_TOL {
                return Err(Error::MinimumNotAtOrigin { gradient_norm: g });
            }
        }
        Some(g) => {
            let (k, _) = g
                .values()
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .ok_or(Error::MinimumNotAtOrigin { gradient_norm: f64::NAN })?;
            let t = g.grid().interior_coord(k);
            if t.norm() > g.grid().max_spacing() {
                return Err(Error::MinimumNotAtOrigin { gradient_norm: g.fd_gradient(k)?.norm() });
            }
        }
    }
    Ok(())
}

/// `v(y(x)) + f(x)`; nonnegative when `f` is minimized at the origin.
pub fn duality_gap(pair: &LegendrePair, x: &[f64]) -> Result<f64> {
    require_origin_minimum(&pair.f)?;
    Ok(pair.v_at_x(x)? + pair.f.jet(x)?.value)
}

/// Duality gaps at many points, checking the precondition once.
pub fn duality_gaps(pair: &LegendrePair, points: &[Point], policy: ExecPolicy) -> Result<Vec<f64>> {
    require_origin_minimum(&pair.f)?;
    try_map_slice(policy, points, |x| Ok(pair.v_at_x(x.as_slice())? + pair.f.jet(x.as_slice())?.value))
}

/// Max `|v*(x) - f(x)|` over `points`, with `v*` the transform of the
/// transform.
pub fn involution_error(f: &PotentialField, points: &[Point], policy: ExecPolicy) -> Result<f64> {
    let v = PotentialField::analytic(LegendreDual::new(f)?);
    let w = LegendreDual::new(&v)?;
    let d = try_map_slice(policy, points, |x| {
        use crate::domain::Evaluator;
        Ok((w.jet(x.as_slice())?.value - f.jet(x.as_slice())?.value).abs())
    })?;
    Ok(d.into_iter().fold(0.0, f64::max))
}

/// `|grad f(a) - grad f(b)| / (lambda |a - b|)` with `lambda` the smallest
/// Hessian eigenvalue seen at nine points of the segment; close to or above
/// one for strictly convex `f`.
pub fn injectivity_ratio(f: &PotentialField, a: &[f64], b: &[f64]) -> Result<f64> {
    let (av, bv) = (DVector::from_column_slice(a), DVector::from_column_slice(b));
    let mut lambda = f64::INFINITY;
    for i in 0..=8 {
        let p = &av + (&bv - &av) * (i as f64 / 8.0);
        lambda = lambda.min(sym_eigenvalues(&f.jet(p.as_slice())?.hessian)[0]);
    }
    let dg = (f.jet(a)?.gradient - f.jet(b)?.gradient).norm();
    Ok(dg / (lambda * (&av - &bv).norm()))
}

/// Injectivity ratios over consecutive pairs of `points`.
pub fn injectivity_ratios(f: &PotentialField, points: &[Point], policy: ExecPolicy) -> Vec<Result<f64>> {
    let pairs: Vec<(Point, Point)> = points.chunks_exact(2).map(|c| (c[0].clone(), c[1].clone())).collect();
    map_slice(policy, &pairs, |(a, b)| injectivity_ratio(f, a.as_slice(), b.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ConvexDomain, GridSpec};
    use crate::linalg::point;

    fn quartic() -> PotentialField {
        // |x|^4/4 + |x|^2/2 in graded-lex coefficients
        PotentialField::polynomial(
            2,
            &[0.0, 0.0, 0.0, 0.5, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.5, 0.0, 0.25],
            Role::GraphF,
            Some(ConvexDomain::unit_disk()),
        )
        .unwrap()
    }

    #[test]
    fn quadratic_is_self_dual() {
        let f = PotentialField::quadratic(2, 0.0, 0.5, Role::GraphF, None).unwrap();
        let p = legendre_transform(&f, ExecPolicy::Sequential).unwrap();
        let y = [0.3, -1.2];
        assert!((p.v.value(&y).unwrap() - 0.5 * (0.09 + 1.44)).abs() < 1e-15);
        assert!(gradient_identity_defect(&p, &[0.4, 0.1]).unwrap().amax() == 0.0);
        assert!((duality_gap(&p, &[0.4, 0.1]).unwrap() - 0.17).abs() < 1e-15);
    }

    #[test]
    fn hyperboloid_transform_is_lower_hemisphere() {
        let f = PotentialField::hyperboloid(2).unwrap();
        let p = legendre_transform(&f, ExecPolicy::Sequential).unwrap();
        for y in [[0.0_f64, 0.0], [0.5, -0.3], [0.9, 0.3]] {
            let exact = -(1.0 - y[0] * y[0] - y[1] * y[1]).sqrt();
            assert!((p.v.value(&y).unwrap() - exact).abs() < 1e-12, "{y:?}");
        }
        assert!(gradient_identity_defect(&p, &[1.0, 0.0]).unwrap().amax() < 1e-10);
        let x = [0.7, 0.2];
        let r2: f64 = 0.53;
        assert!((duality_gap(&p, &x).unwrap() - r2 / (1.0 + r2).sqrt()).abs() < 1e-12);
        assert_eq!(duality_gap(&p, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn double_transform_returns_quartic() {
        let pts: Vec<Point> = [[0.0, 0.0], [0.5, 0.2], [-0.3, 0.6], [0.1, -0.9]].iter().map(|p| point(p)).collect();
        assert!(involution_error(&quartic(), &pts, ExecPolicy::Sequential).unwrap() <= 1e-10);
    }

    #[test]
    fn off_origin_minimum_is_rejected() {
        let f = PotentialField::polynomial(1, &[0.0, -1.0, 0.5], Role::GraphF, None).unwrap();
        let p = legendre_transform(&f, ExecPolicy::Sequential).unwrap();
        assert!(matches!(duality_gap(&p, &[0.5]), Err(Error::MinimumNotAtOrigin { .. })));
    }

    #[test]
    fn gradient_map_is_injective() {
        let f = quartic();
        let r = injectivity_ratio(&f, &[0.1, 0.2], &[-0.4, 0.5]).unwrap();
        assert!(r >= 0.99, "{r}");
    }

    fn sampled(f: &PotentialField, nodes: usize) -> PotentialField {
        let d = ConvexDomain::Disk { center: [0.0, 0.0], radius: 1.0 };
        let g = GridSpec::new(&d, nodes).unwrap();
        let vals = g.interior_coords().iter().map(|t| f.value(t.as_slice()).unwrap()).collect();
        PotentialField::grid(GridPotential::new(g, vals, Role::GraphF, false).unwrap())
    }

    #[test]
    fn grid_defect_is_second_order() {
        let f = PotentialField::hyperboloid(2).unwrap();
        let d: Vec<f64> = [33, 65]
            .iter()
            .map(|&m| {
                let p = legendre_transform(&sampled(&f, m), ExecPolicy::Sequential).unwrap();
                grid_identity_defect(&p, 0.2, ExecPolicy::Sequential).unwrap()
            })
            .collect();
        let order = (d[0] / d[1]).log2();
        assert!(order > 1.7, "{d:?} order {order}");
    }

    #[test]
    fn grid_transform_matches_closed_form() {
        let f = PotentialField::hyperboloid(2).unwrap();
        let p = legendre_transform(&sampled(&f, 65), ExecPolicy::Sequential).unwrap();
        let g = p.v.as_grid().unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..g.grid().interior_count() {
            let y = g.grid().interior_coord(k);
            if y.norm() < 0.6 {
                worst = worst.max((g.values()[k] + (1.0 - y.norm_squared()).sqrt()).abs());
            }
        }
        assert!(worst < 1e-3, "{worst}");
        assert!(duality_gaps(&p, &[point(&[0.25, 0.25])], ExecPolicy::Sequential).unwrap()[0] > 0.0);
    }
}
