use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::metric::{legendre_value, log_det, require_negative};
use crate::domain::{Jet, PotentialField, Role};
use crate::error::{Error, Result};
use crate::linalg::Point;

/// Affine conormal `nu` and centroaffine conormal `mu`, both `(n+1)`-vectors
/// in dual coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConormalSample {
    pub nu: Point,
    pub mu: Point,
    /// Positive factor multiplying the graph direction `(-grad f, 1)` in
    /// `nu`; for graph functions it is `det(f_ij)^{-1/(n+2)}`, the last
    /// component of `nu`.
    pub alpha: f64,
}

impl ConormalSample {
    pub fn gap(&self) -> f64 {
        (&self.nu - &self.mu).norm()
    }
}

fn homogeneous(grad: &Point, last: f64) -> Point {
    let n = grad.len();
    let mut v = DVector::zeros(n + 1);
    for i in 0..n {
        v[i] = -grad[i];
    }
    v[n] = last;
    v
}

/// Conormals of the graph of `f` at `x`:
/// `nu = det(f_ij)^{-1/(n+2)} (-grad f, 1)`, `mu = -(1/v) (-grad f, 1)`
/// with `v = x.grad f - f`.
pub fn graph_conormals(jet: &Jet, x: &[f64]) -> Result<ConormalSample> {
    let n = x.len() as f64;
    let alpha = (-log_det(jet, x)? / (n + 2.0)).exp();
    let v = legendre_value(jet, x);
    let scale = jet.value.abs() + x.iter().zip(jet.gradient.iter()).map(|(a, b)| (a * b).abs()).sum::<f64>();
    if v.abs() <= 64.0 * f64::EPSILON * scale || !v.is_finite() {
        return Err(Error::Tangency { point: x.to_vec(), legendre: v });
    }
    let dir = homogeneous(&jet.gradient, 1.0);
    Ok(ConormalSample { nu: &dir * alpha, mu: &dir * (-1.0 / v), alpha })
}

/// Conormals of the radial graph of `-1/u` at `t`:
/// `mu = (-grad u, t.grad u - u)` and `nu = (-1/u) det(u_ij)^{-1/(n+2)} mu`.
pub fn potential_conormals(jet: &Jet, t: &[f64]) -> Result<ConormalSample> {
    let n = t.len() as f64;
    require_negative(jet, t)?;
    let scale = (-log_det(jet, t)? / (n + 2.0)).exp() * (-1.0 / jet.value);
    let c = t.iter().zip(jet.gradient.iter()).map(|(a, b)| a * b).sum::<f64>() - jet.value;
    let mu = homogeneous(&jet.gradient, c);
    // nu = alpha (-grad f, 1) in the graph chart x = -t/u, f = -1/u
    let alpha = scale * c;
    Ok(ConormalSample { nu: &mu * scale, mu, alpha })
}

/// Conormals of the hypersurface described by `f` (graph role) or `u`
/// (potential role) at the chart point `x`.
pub fn conormals_at(f: &PotentialField, x: &[f64]) -> Result<ConormalSample> {
    let jet = f.jet(x)?;
    match f.role() {
        Role::GraphF => graph_conormals(&jet, x),
        Role::PotentialU => potential_conormals(&jet, x),
        Role::Scalar => Err(Error::RoleMismatch { expected: "graph_f or potential_u", found: "scalar" }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ConvexDomain;
    use crate::linalg::point;

    #[test]
    fn hyperboloid_examples() {
        let f = PotentialField::hyperboloid(2).unwrap();
        let s = conormals_at(&f, &[0.0, 0.0]).unwrap();
        assert!((s.nu - point(&[0.0, 0.0, 1.0])).norm() < 1e-15);
        assert!((s.mu - point(&[0.0, 0.0, 1.0])).norm() < 1e-15);
        let s = conormals_at(&f, &[1.0, 0.0]).unwrap();
        let expect = point(&[-1.0, 0.0, 2.0_f64.sqrt()]);
        assert!((&s.nu - &expect).norm() < 1e-14 && (&s.mu - &expect).norm() < 1e-14);
        assert!((s.alpha - 2.0_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn paraboloid_conormals_differ_off_center() {
        let f = PotentialField::quadratic(2, 1.0, 0.5, Role::GraphF, None).unwrap();
        let x = [0.6, -0.2];
        let s = conormals_at(&f, &x).unwrap();
        assert!((&s.nu - point(&[-0.6, 0.2, 1.0])).norm() < 1e-15);
        let v = 0.5 * 0.4 - 1.0;
        assert!((&s.mu - point(&[-0.6, 0.2, 1.0]) * (-1.0 / v)).norm() < 1e-15);
        assert!(s.gap() > 0.0);
    }

    #[test]
    fn ball_potential_and_hyperboloid_graph_agree() {
        // the radial graph of 1/sqrt(1-|t|^2) is the graph of sqrt(1+|x|^2) with x = -t/u
        let u = PotentialField::ball(2).unwrap();
        let f = PotentialField::hyperboloid(2).unwrap();
        let t = [0.3, -0.5];
        let uu = u.value(&t).unwrap();
        let x = [-t[0] / uu, -t[1] / uu];
        let a = conormals_at(&u, &t).unwrap();
        let b = conormals_at(&f, &x).unwrap();
        assert!((&a.nu - &b.nu).norm() < 1e-13);
        assert!((&a.mu - &b.mu).norm() < 1e-13);
        assert!((a.alpha - b.alpha).abs() < 1e-13);
    }

    #[test]
    fn tangency_is_reported() {
        // v = x^2/2 - 1 vanishes at x = sqrt 2
        let f =
            PotentialField::quadratic(1, 1.0, 0.5, Role::GraphF, Some(ConvexDomain::Interval { lo: -3.0, hi: 3.0 }))
                .unwrap();
        assert!(matches!(conormals_at(&f, &[2.0_f64.sqrt()]), Err(Error::Tangency { .. })));
        assert!(conormals_at(&f, &[0.0]).is_ok());
    }
}
