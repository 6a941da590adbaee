use nalgebra::DVector;

use crate::domain::{ConvexDomain, Evaluator, Jet, PotentialField, Role};
use crate::error::{Error, Result};
use crate::linalg::Point;

pub const NEWTON_RTOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 40;

/// Solves `grad f(x) = y` by damped Newton from `seed`, halving the step
/// whenever the residual would grow or the trial leaves the domain.
pub fn invert_gradient(f: &PotentialField, y: &[f64], seed: &[f64]) -> Result<Point> {
    let yv = DVector::from_column_slice(y);
    let tol = NEWTON_RTOL * yv.norm().max(1.0);
    let mut x = DVector::from_column_slice(seed);
    if !f.contains(seed) {
        x = match f.domain() {
            Some(d) => DVector::from_vec(d.centroid()),
            None => DVector::zeros(y.len()),
        };
    }
    let mut jet = f.jet(x.as_slice())?;
    let mut r = &jet.gradient - &yv;
    for _ in 0..NEWTON_MAX_ITER {
        if r.norm() <= tol {
            return Ok(x);
        }
        let Some(dx) = jet.hessian.clone().lu().solve(&(-&r)) else {
            break;
        };
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial = &x + &dx * step;
            if f.contains(trial.as_slice()) {
                if let Ok(tj) = f.jet(trial.as_slice()) {
                    let tr = &tj.gradient - &yv;
                    if tr.norm() < r.norm() {
                        x = trial;
                        jet = tj;
                        r = tr;
                        accepted = true;
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r.norm() <= tol {
        Ok(x)
    } else {
        Err(Error::NewtonInversion { point: y.to_vec(), residual: r.norm() })
    }
}

/// Legendre transform `v(y) = y.x - f(x)` with `grad f(x) = y`, evaluated
/// per query by Newton inversion seeded at `x = y`.
#[derive(Debug, Clone)]
pub struct LegendreDual {
    base: PotentialField,
}

impl LegendreDual {
    pub fn new(f: &PotentialField) -> Result<Self> {
        f.require_role(Role::GraphF)?;
        Ok(LegendreDual { base: f.clone() })
    }

    pub fn base(&self) -> &PotentialField {
        &self.base
    }
}

impl Evaluator for LegendreDual {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn role(&self) -> Role {
        Role::GraphF
    }

    /// The gradient image is not represented; queries outside it fail in
    /// the inversion.
    fn domain(&self) -> Option<&ConvexDomain> {
        None
    }

    fn jet(&self, y: &[f64]) -> Result<Jet> {
        let x = invert_gradient(&self.base, y, y)?;
        let inner = self.base.jet(x.as_slice())?;
        let h = inner.hessian.clone();
        let inv = h
            .try_inverse()
            .ok_or_else(|| Error::NotConvex { point: x.iter().copied().collect(), min_eigenvalue: 0.0 })?;
        let yv = DVector::from_column_slice(y);
        Ok(Jet { value: yv.dot(&x) - inner.value, gradient: x, hessian: 0.5 * (&inv + inv.transpose()) })
    }

    fn label(&self) -> String {
        format!("legendre({})", self.base.label())
    }
}
