use super::convex::ConvexDomain;
use super::map::ProjectiveMap;
use super::potential::{Evaluator, Jet, PotentialField, Role};
use crate::error::{Error, Result};
use crate::linalg::point;

/// Potential `u~(t~) = beta u(t)` with `(t, 1) beta = A^{-1} (t~, 1)`.
#[derive(Debug, Clone)]
pub struct Transformed {
    base: PotentialField,
    map: ProjectiveMap,
    domain: Option<ConvexDomain>,
}

impl Transformed {
    pub fn base(&self) -> &PotentialField {
        &self.base
    }

    pub fn map(&self) -> &ProjectiveMap {
        &self.map
    }
}

impl Evaluator for Transformed {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn role(&self) -> Role {
        Role::PotentialU
    }

    fn domain(&self) -> Option<&ConvexDomain> {
        self.domain.as_ref()
    }

    fn jet(&self, t_new: &[f64]) -> Result<Jet> {
        let n = self.dim();
        let (t, beta) = self.map.pull_back(&point(t_new));
        if !(beta > 0.0) {
            return Err(Error::ChartOverflow { points: vec![t_new.to_vec()] });
        }
        let inner = self.base.jet(t.as_slice())?;
        let inv = self.map.inverse_matrix();
        let m = inv.view((0, 0), (n, n)).into_owned();
        let c = inv.view((n, 0), (1, n)).transpose();
        // dt/dt~ = (M - t c^T) / beta
        let jac = (m - &t * c.transpose()) / beta;
        Ok(Jet {
            value: beta * inner.value,
            gradient: &c * inner.value + beta * jac.transpose() * &inner.gradient,
            hessian: beta * jac.transpose() * &inner.hessian * &jac,
        })
    }

    fn label(&self) -> String {
        format!("transformed({})", self.base.label())
    }
}

/// Moves a potential `u` by the projective map `A`. The homogeneous
/// coordinate must be positive on the whole closed domain.
pub fn transform_potential(u: &PotentialField, map: &ProjectiveMap) -> Result<PotentialField> {
    u.require_role(Role::PotentialU)?;
    if map.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: map.dim() });
    }
    let domain = match u.domain() {
        Some(d) => Some(d.image_under(map)?),
        None => None,
    };
    Ok(PotentialField::analytic(Transformed { base: u.clone(), map: map.clone(), domain }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use nalgebra::DMatrix;

    #[test]
    fn identity_leaves_values_unchanged() {
        let u = PotentialField::ball(2).unwrap();
        let v = transform_potential(&u, &ProjectiveMap::identity(2)).unwrap();
        let t = [0.3, -0.2];
        assert_eq!(u.value(&t).unwrap(), v.value(&t).unwrap());
    }

    #[test]
    fn translation_shifts_argument() {
        let u = PotentialField::ball(2).unwrap();
        let v = transform_potential(&u, &ProjectiveMap::translation(&[0.5, -0.25])).unwrap();
        let t = [0.1, 0.2];
        assert!((v.value(&[0.6, -0.05]).unwrap() - u.value(&t).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn diagonal_projective_example_in_one_dimension() {
        let s2 = std::f64::consts::SQRT_2;
        let a = ProjectiveMap::affine(&DMatrix::from_element(1, 1, s2 * s2), &[0.0]).unwrap();
        let raw = crate::domain::normalize_map(&DMatrix::from_row_slice(2, 2, &[s2, 0.0, 0.0, 1.0 / s2])).unwrap();
        assert!(max_abs_diff(a.matrix(), raw.matrix()) < 1e-15);
        let v = transform_potential(&PotentialField::ball(1).unwrap(), &raw).unwrap();
        for x in [-1.9_f64, -0.4, 0.0, 1.2] {
            let expect = -s2 * (1.0 - x * x / 4.0).sqrt();
            assert!((v.value(&[x]).unwrap() - expect).abs() < 1e-14);
        }
        assert!(v.contains(&[1.99]) && !v.contains(&[2.01]));
    }

    #[test]
    fn hessian_law_matches_differences() {
        let raw = [1.1, 0.2, 0.1, -0.1, 0.9, 0.0, 0.2, 0.1, 1.0];
        let map = ProjectiveMap::from_row_major(&raw).unwrap();
        let v = transform_potential(&PotentialField::ball(2).unwrap(), &map).unwrap();
        let t = [0.2, 0.15];
        let j = v.jet(&t).unwrap();
        let eps = 1e-6;
        for a in 0..2 {
            let mut tp = t;
            let mut tm = t;
            tp[a] += eps;
            tm[a] -= eps;
            let (p, m) = (v.jet(&tp).unwrap(), v.jet(&tm).unwrap());
            assert!(((p.value - m.value) / (2.0 * eps) - j.gradient[a]).abs() < 1e-8);
            for b in 0..2 {
                assert!(((p.gradient[b] - m.gradient[b]) / (2.0 * eps) - j.hessian[(b, a)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn graph_role_is_rejected() {
        let f = PotentialField::hyperboloid(2).unwrap();
        assert!(matches!(transform_potential(&f, &ProjectiveMap::identity(2)), Err(Error::RoleMismatch { .. })));
    }
}
