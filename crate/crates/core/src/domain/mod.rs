//! Convex domains, grids, projective maps and potential fields.

mod convex;
mod grid;
mod map;
mod potential;
mod sublevel;
mod transform;

pub use convex::{ConvexDomain, BOUNDARY_EPS};
pub use grid::{Arm, GridSpec, NodeStencil};
pub use map::{normalize_map, ProjectiveMap};
pub use potential::{
    graded_lex_exponents, Ball, BuiltinKind, Evaluator, GridPotential, Hyperboloid, Jet, Polynomial, PotentialField,
    PotentialSpec, Quadratic, Role,
};
pub use sublevel::{locate_base_point, sublevel_set, sublevel_threshold, SublevelSet, BASE_GRADIENT_TOL};
pub use transform::{transform_potential, Transformed};

use crate::error::Result;
use crate::linalg::HessianReport;

/// Symmetric Hessian of `u` at `t` with its eigenvalues. Grid fields use
/// their node stencils at nodes and the reconstruction elsewhere.
pub fn hessian_at(u: &PotentialField, t: &[f64]) -> Result<HessianReport> {
    Ok(HessianReport::new(u.jet(t)?.hessian))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn hessian_examples() {
        let q = PotentialField::quadratic(2, -1.0, 0.25, Role::PotentialU, Some(ConvexDomain::unit_disk())).unwrap();
        let h = hessian_at(&q, &[0.0, 0.0]).unwrap();
        assert_eq!(h.matrix, DMatrix::identity(2, 2) * 0.5);
        assert!(h.positive_definite);
        let c = PotentialField::quadratic(2, -1.0, 0.0, Role::PotentialU, Some(ConvexDomain::unit_disk())).unwrap();
        let h = hessian_at(&c, &[0.2, 0.1]).unwrap();
        assert_eq!(h.matrix, DMatrix::zeros(2, 2));
        assert!(!h.positive_definite);
    }

    #[test]
    fn grid_hessian_is_exact_for_quadratics() {
        let d = ConvexDomain::unit_disk();
        let g = GridSpec::new(&d, 17).unwrap();
        let vals: Vec<f64> =
            g.interior_coords().iter().map(|t| -1.0 + t[0] * t[0] + 0.5 * t[0] * t[1] + 0.25 * t[1] * t[1]).collect();
        let gp = GridPotential::new(g.clone(), vals, Role::PotentialU, false).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 0.5]);
        for k in 0..g.interior_count() {
            let h = gp.fd_hessian(k).unwrap();
            assert!((h - &expect).abs().max() < 1e-10, "node {k}");
        }
    }
}
