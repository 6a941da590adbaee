use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::{PotentialField, Role};
use crate::error::{Error, Result};
use crate::linalg::{condition_number, Matrix, Point};

/// Difference step for third-order data.
pub const FD_STEP: f64 = 1e-4;
/// Frames worse conditioned than this are rejected.
pub const MAX_FRAME_CONDITION: f64 = 1e8;

/// Cubic form `A_ijk` (indices lowered by `g`), shape operator `B_ij` and
/// affine metric `g_ij` at a point of a graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantsSample {
    pub point: Point,
    pub g: Matrix,
    /// Row-major `n x n x n`.
    pub a: Vec<f64>,
    pub b: Matrix,
    pub frame_condition: f64,
}

impl InvariantsSample {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn a(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        self.a[(i * n + j) * n + k]
    }

    pub fn a_norm(&self) -> f64 {
        self.a.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest difference between `A_ijk` and its index permutations.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.a(i, j, k);
                    for w in [self.a(j, i, k), self.a(i, k, j), self.a(k, j, i)] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }

    /// Max entry of `B + g`; zero for hyperbolic affine spheres centred at 0.
    pub fn sphere_defect(&self) -> f64 {
        (&self.b + &self.g).abs().max()
    }
}

struct Probe<'a> {
    f: &'a PotentialField,
    n: usize,
}

impl Probe<'_> {
    fn hessian(&self, x: &Point) -> Result<Matrix> {
        let h = self.f.jet(x.as_slice())?.hessian;
        Ok(0.5 * (&h + h.transpose()))
    }

    fn alpha(&self, x: &Point) -> Result<f64> {
        let h = self.hessian(x)?;
        let det = h.determinant();
        if !(det > 0.0) {
            return Err(Error::NotConvex { point: x.iter().copied().collect(), min_eigenvalue: det });
        }
        Ok((-det.ln() / (self.n as f64 + 2.0)).exp())
    }

    fn metric(&self, x: &Point) -> Result<Matrix> {
        Ok(self.hessian(x)? * self.alpha(x)?)
    }

    fn shift(&self, x: &Point, moves: &[(usize, f64)]) -> Point {
        let mut y = x.clone();
        for &(k, s) in moves {
            y[k] += s;
        }
        y
    }
}

/// Extracts `A` and `B` from `nu_{,ij} = -A_ij^k nu_{,k} - B_ij nu` at `x`.
/// Covariant derivatives use Christoffel symbols of the affine metric from
/// centered differences; third derivatives of `f` come from differences of
/// its exact Hessian.
pub fn fubini_pick_at(f: &PotentialField, x: &[f64]) -> Result<InvariantsSample> {
    f.require_role(Role::GraphF)?;
    let n = x.len();
    let h = FD_STEP;
    let p = Probe { f, n };
    let x0 = DVector::from_column_slice(x);
    let jet = f.jet(x)?;
    let hess = p.hessian(&x0)?;
    let alpha = p.alpha(&x0)?;

    let mut d_alpha = vec![0.0; n];
    let mut dd_alpha = DMatrix::zeros(n, n);
    let mut d_hess = Vec::with_capacity(n);
    let mut d_metric = Vec::with_capacity(n);
    for k in 0..n {
        let (xp, xm) = (p.shift(&x0, &[(k, h)]), p.shift(&x0, &[(k, -h)]));
        let (ap, am) = (p.alpha(&xp)?, p.alpha(&xm)?);
        d_alpha[k] = (ap - am) / (2.0 * h);
        dd_alpha[(k, k)] = (ap - 2.0 * alpha + am) / (h * h);
        d_hess.push((p.hessian(&xp)? - p.hessian(&xm)?) / (2.0 * h));
        d_metric.push((p.metric(&xp)? - p.metric(&xm)?) / (2.0 * h));
        for l in 0..k {
            let v = (p.alpha(&p.shift(&x0, &[(k, h), (l, h)]))?
                - p.alpha(&p.shift(&x0, &[(k, h), (l, -h)]))?
                - p.alpha(&p.shift(&x0, &[(k, -h), (l, h)]))?
                + p.alpha(&p.shift(&x0, &[(k, -h), (l, -h)]))?)
                / (4.0 * h * h);
            dd_alpha[(k, l)] = v;
            dd_alpha[(l, k)] = v;
        }
    }

    // nu = alpha (-grad f, 1) and its coordinate derivatives
    let lift = |v: &Point, last: f64| {
        let mut out = DVector::zeros(n + 1);
        for i in 0..n {
            out[i] = v[i];
        }
        out[n] = last;
        out
    };
    let dir = lift(&(-&jet.gradient), 1.0);
    let col = |k: usize| lift(&(-hess.column(k).into_owned()), 0.0);
    let nu = &dir * alpha;
    let d_nu: Vec<Point> = (0..n).map(|k| &dir * d_alpha[k] + col(k) * alpha).collect();
    let dd_nu = |k: usize, l: usize| -> Point {
        let third = lift(&(-d_hess[l].column(k).into_owned()), 0.0);
        &dir * dd_alpha[(k, l)] + col(l) * d_alpha[k] + col(k) * d_alpha[l] + third * alpha
    };

    let g = &hess * alpha;
    let g_inv = g.clone().try_inverse().ok_or(Error::FrameDegenerate { condition: f64::INFINITY })?;
    // Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
    let gamma = |k: usize, i: usize, j: usize| -> f64 {
        (0..n).map(|l| 0.5 * g_inv[(k, l)] * (d_metric[i][(j, l)] + d_metric[j][(i, l)] - d_metric[l][(i, j)])).sum()
    };

    let mut frame = DMatrix::zeros(n + 1, n + 1);
    for k in 0..n {
        frame.set_column(k, &d_nu[k]);
    }
    frame.set_column(n, &nu);
    let condition = condition_number(&frame);
    if !(condition <= MAX_FRAME_CONDITION) {
        return Err(Error::FrameDegenerate { condition });
    }
    let lu = frame.lu();

    let mut a_up = vec![0.0; n * n * n];
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut cov = dd_nu(i, j);
            for k in 0..n {
                cov -= &d_nu[k] * gamma(k, i, j);
            }
            let c = lu.solve(&cov).ok_or(Error::FrameDegenerate { condition })?;
            for k in 0..n {
                a_up[(i * n + j) * n + k] = -c[k];
            }
            b[(i, j)] = -c[n];
        }
    }
    let mut a = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                a[(i * n + j) * n + k] = (0..n).map(|l| g[(k, l)] * a_up[(i * n + j) * n + l]).sum();
            }
        }
    }
    Ok(InvariantsSample { point: x0, g, a, b, frame_condition: condition })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paraboloid_is_flat() {
        let f = PotentialField::quadratic(2, 0.0, 0.5, Role::GraphF, None).unwrap();
        let s = fubini_pick_at(&f, &[0.4, -1.1]).unwrap();
        assert!(s.a_norm() <= 1e-8 && s.b.abs().max() <= 1e-8);
    }

    #[test]
    fn hyperboloid_shape_operator_is_minus_metric() {
        for n in [1, 2] {
            let f = PotentialField::hyperboloid(n).unwrap();
            let x: Vec<f64> = [0.7, -0.4][..n].to_vec();
            let s = fubini_pick_at(&f, &x).unwrap();
            assert!(s.a_norm() <= 1e-6, "A = {:?}", s.a);
            assert!(s.sphere_defect() <= 1e-6, "B = {}", s.b);
        }
    }

    #[test]
    fn cubic_form_of_non_sphere_is_symmetric() {
        let f = PotentialField::polynomial(
            2,
            &[0.0, 0.0, 0.0, 0.5, 0.1, 0.5, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.1, 0.0, 0.2],
            Role::GraphF,
            None,
        )
        .unwrap();
        let s = fubini_pick_at(&f, &[0.3, 0.2]).unwrap();
        assert!(s.a_norm() > 1e-3);
        assert!(s.symmetry_defect() <= 1e-6, "{}", s.symmetry_defect());
        assert!((&s.b - s.b.transpose()).abs().max() <= 1e-6);
    }
}
