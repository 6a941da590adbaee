use crate::domain::{ConvexDomain, Evaluator, GridSpec, Jet, PotentialField, Role};
use crate::error::{Error, Result};
use crate::exec::{try_map_range, ExecPolicy};
use crate::linalg::to_vec;

/// Quotient `a / b` of two fields, with quotient-rule derivatives.
#[derive(Debug, Clone)]
pub struct Ratio {
    num: PotentialField,
    den: PotentialField,
}

impl Evaluator for Ratio {
    fn dim(&self) -> usize {
        self.num.dim()
    }
    fn role(&self) -> Role {
        Role::Scalar
    }
    fn domain(&self) -> Option<&ConvexDomain> {
        self.num.domain()
    }
    fn jet(&self, t: &[f64]) -> Result<Jet> {
        let a = self.num.jet(t)?;
        let b = self.den.jet(t)?;
        let phi = a.value / b.value;
        let grad = (&a.gradient - &b.gradient * phi) / b.value;
        let hess =
            (&a.hessian - &b.hessian * phi - &grad * b.gradient.transpose() - &b.gradient * grad.transpose()) / b.value;
        Ok(Jet { value: phi, gradient: grad, hessian: hess })
    }
    fn label(&self) -> String {
        format!("({}) / ({})", self.num.label(), self.den.label())
    }
}

/// Product `a b` of two fields, carrying the role of `b`.
#[derive(Debug, Clone)]
pub struct Product {
    a: PotentialField,
    b: PotentialField,
}

impl Product {
    #[allow(clippy::new_ret_no_self)]
    pub fn new(a: &PotentialField, b: &PotentialField) -> Result<PotentialField> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch { expected: b.dim(), found: a.dim() });
        }
        Ok(PotentialField::analytic(Product { a: a.clone(), b: b.clone() }))
    }
}

impl Evaluator for Product {
    fn dim(&self) -> usize {
        self.b.dim()
    }
    fn role(&self) -> Role {
        self.b.role()
    }
    fn domain(&self) -> Option<&ConvexDomain> {
        self.a.domain().or(self.b.domain())
    }
    fn jet(&self, t: &[f64]) -> Result<Jet> {
        let a = self.a.jet(t)?;
        let b = self.b.jet(t)?;
        Ok(Jet {
            value: a.value * b.value,
            gradient: &b.gradient * a.value + &a.gradient * b.value,
            hessian: &b.hessian * a.value
                + &a.hessian * b.value
                + &a.gradient * b.gradient.transpose()
                + &b.gradient * a.gradient.transpose(),
        })
    }
    fn label(&self) -> String {
        format!("({}) * ({})", self.a.label(), self.b.label())
    }
}

/// Range of a perturbation factor over the sample nodes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FactorSummary {
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

/// `phi = u_bar / u_given`, checked positive at the nodes of `u_bar`'s grid
/// (or a 33-node sampling grid when `u_bar` is analytic).
pub fn perturbation_factor(
    u_given: &PotentialField,
    u_bar: &PotentialField,
    policy: ExecPolicy,
) -> Result<(PotentialField, FactorSummary)> {
    u_given.require_role(Role::PotentialU)?;
    u_bar.require_role(Role::PotentialU)?;
    if u_given.dim() != u_bar.dim() {
        return Err(Error::DimensionMismatch { expected: u_bar.dim(), found: u_given.dim() });
    }
    let grid = match u_bar.as_grid() {
        Some(g) => g.grid().clone(),
        None => {
            let d = u_bar.domain().ok_or_else(|| Error::Config("u_bar needs a bounded domain".into()))?;
            GridSpec::new(d, 33)?
        }
    };
    let phis = try_map_range(policy, grid.interior_count(), |k| {
        let t = grid.interior_coord(k);
        let (a, b) = (u_bar.value(t.as_slice())?, u_given.value(t.as_slice())?);
        for v in [a, b] {
            if !(v < 0.0) {
                return Err(Error::NotNegative { point: to_vec(&t), value: v });
            }
        }
        Ok(a / b)
    })?;
    let summary = FactorSummary {
        min: phis.iter().copied().fold(f64::INFINITY, f64::min),
        max: phis.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        samples: phis.len(),
    };
    let field = PotentialField::analytic(Ratio { num: u_bar.clone(), den: u_given.clone() });
    Ok((field, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn identity_and_scaling() {
        let u = PotentialField::ball(2).unwrap();
        let (phi, s) = perturbation_factor(&u, &u, ExecPolicy::Sequential).unwrap();
        assert!((s.min - 1.0).abs() < 1e-15 && (s.max - 1.0).abs() < 1e-15);
        let j = phi.jet(&[0.3, 0.1]).unwrap();
        assert!(j.gradient.norm() < 1e-15 && j.hessian.norm() < 1e-12);
        let two = PotentialField::analytic(Product {
            a: PotentialField::quadratic(2, 2.0, 0.0, Role::Scalar, None).unwrap(),
            b: u.clone(),
        });
        let (_, s) = perturbation_factor(&two, &u, ExecPolicy::Sequential).unwrap();
        assert!((s.min - 0.5).abs() < 1e-15 && (s.max - 0.5).abs() < 1e-15);
    }

    #[test]
    fn product_restores_numerator() {
        let u = PotentialField::ball(2).unwrap();
        let q = PotentialField::quadratic(2, -1.0, 0.25, Role::PotentialU, Some(ConvexDomain::unit_disk())).unwrap();
        let (phi, _) = perturbation_factor(&q, &u, ExecPolicy::Sequential).unwrap();
        let back = Product::new(&phi, &q).unwrap();
        let t = [0.4, -0.3];
        let (a, b) = (back.jet(&t).unwrap(), u.jet(&t).unwrap());
        assert!((a.value - b.value).abs() < 1e-15);
        assert!((a.hessian - b.hessian).abs().max() < 1e-12);
        let _ = DMatrix::<f64>::zeros(1, 1);
    }

    #[test]
    fn sign_violation_is_reported() {
        let u = PotentialField::ball(2).unwrap();
        let pos = PotentialField::quadratic(2, 1.0, 0.25, Role::PotentialU, Some(ConvexDomain::unit_disk())).unwrap();
        assert!(matches!(perturbation_factor(&pos, &u, ExecPolicy::Sequential), Err(Error::NotNegative { .. })));
    }
}
