use crate::domain::GridSpec;
use crate::error::{Error, Result};
use crate::exec::{map_range, ExecPolicy};
use crate::linalg::{is_positive_definite, Matrix};

use super::sparse::{self, Coo};
use super::stencil::{self, apply, hessian_pairs, NodeOps};

/// Discrete operator `G(u) = log det D^2 u + s (n+2) log(-u)` on a grid.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub grid: GridSpec,
    pub ops: Vec<NodeOps>,
}

/// Second and first differences `(L psi, D psi)` of `psi = u^2` at a node.
type PsiDifferences = (Vec<f64>, Vec<f64>);

/// Residual and Hessians of one iterate.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub residual: Vec<f64>,
    pub hessians: Vec<Matrix>,
    /// `u < 0` and positive-definite Hessian at every node.
    pub admissible: bool,
    pub max_abs: f64,
}

impl Discretization {
    pub fn new(grid: &GridSpec, band: f64) -> Self {
        Discretization { grid: grid.clone(), ops: stencil::build(grid, band) }
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Pair values of the discrete Hessian at node `k`; near the boundary
    /// also the `psi = u^2` differences `(L psi, D psi)` they came from.
    fn node_hessian(&self, k: usize, u: &[f64], psi: &[f64]) -> (Vec<f64>, Option<PsiDifferences>) {
        let op = &self.ops[k];
        if !op.near {
            return (op.hess.iter().map(|r| apply(r, u)).collect(), None);
        }
        let up = u[k];
        let a: Vec<f64> = op.hess.iter().map(|r| apply(r, psi)).collect();
        let g: Vec<f64> = op.grad.iter().map(|r| apply(r, psi)).collect();
        let vals = hessian_pairs(self.dim())
            .iter()
            .enumerate()
            .map(|(p, &(i, j))| a[p] / (2.0 * up) - g[i] * g[j] / (4.0 * up * up * up))
            .collect();
        (vals, Some((a, g)))
    }

    pub fn hessians(&self, u: &[f64], policy: ExecPolicy) -> Vec<Matrix> {
        let psi: Vec<f64> = u.iter().map(|x| x * x).collect();
        let n = self.dim();
        map_range(policy, self.len(), |k| stencil::assemble(n, &self.node_hessian(k, u, &psi).0))
    }

    pub fn evaluate(&self, u: &[f64], s: f64, policy: ExecPolicy) -> Evaluation {
        let n = self.dim();
        let hessians = self.hessians(u, policy);
        let expo = s * (n as f64 + 2.0);
        let nodes: Vec<(f64, bool)> = map_range(policy, self.len(), |k| {
            let h = &hessians[k];
            let ok = u[k] < 0.0 && is_positive_definite(h);
            let g = if ok { h.determinant().ln() + expo * (-u[k]).ln() } else { f64::NAN };
            (g, ok && g.is_finite())
        });
        let admissible = nodes.iter().all(|x| x.1);
        let residual: Vec<f64> = nodes.iter().map(|x| x.0).collect();
        let max_abs = if admissible { residual.iter().fold(0.0_f64, |m, g| m.max(g.abs())) } else { f64::INFINITY };
        Evaluation { residual, hessians, admissible, max_abs }
    }

    /// Jacobian of `G` at an admissible iterate.
    pub fn jacobian(&self, u: &[f64], hessians: &[Matrix], s: f64, policy: ExecPolicy) -> Coo {
        let n = self.dim();
        let psi: Vec<f64> = u.iter().map(|x| x * x).collect();
        let expo = s * (n as f64 + 2.0);
        let pairs = hessian_pairs(n);
        let rows: Vec<Vec<(usize, f64)>> = map_range(policy, self.len(), |k| {
            let op = &self.ops[k];
            let cinv = hessians[k].clone().try_inverse().unwrap_or_else(|| Matrix::zeros(n, n));
            let coef: Vec<f64> =
                pairs.iter().map(|&(i, j)| if i == j { cinv[(i, i)] } else { 2.0 * cinv[(i, j)] }).collect();
            let up = u[k];
            let mut row: Vec<(usize, f64)> = vec![(k, expo / up)];
            match self.node_hessian(k, u, &psi).1 {
                None => {
                    for (p, r) in op.hess.iter().enumerate() {
                        row.extend(r.iter().map(|&(m, w)| (m, coef[p] * w)));
                    }
                }
                Some((a, g)) => {
                    let (u2, u3, u4) = (up * up, up * up * up, up * up * up * up);
                    for (p, &(i, j)) in pairs.iter().enumerate() {
                        let c = coef[p];
                        row.extend(op.hess[p].iter().map(|&(m, w)| (m, c * w * u[m] / up)));
                        row.push((k, c * (-a[p] / (2.0 * u2) + 3.0 * g[i] * g[j] / (4.0 * u4))));
                        let scale = -c * 2.0 / (4.0 * u3);
                        row.extend(op.grad[i].iter().map(|&(m, w)| (m, scale * w * g[j] * u[m])));
                        row.extend(op.grad[j].iter().map(|&(m, w)| (m, scale * w * g[i] * u[m])));
                    }
                }
            }
            row
        });
        let mut coo = Coo::new(self.len());
        for (k, row) in rows.into_iter().enumerate() {
            for (m, v) in row {
                coo.push(k, m, v);
            }
        }
        coo
    }
}

/// Record of a backtracked step.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DampingEvent {
    pub iteration: usize,
    pub halvings: usize,
    pub step: f64,
    pub exponent_scale: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonParams {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub linear_rtol: f64,
    pub policy: ExecPolicy,
}

/// Trace of one Newton stage.
#[derive(Debug, Clone, Default)]
pub struct NewtonTrace {
    pub residuals: Vec<f64>,
    pub damping: Vec<DampingEvent>,
    pub iterations: usize,
}

/// Damped Newton iteration for `G_s(u) = 0` from an admissible `u`. Every
/// accepted step lowers the max-norm residual and keeps `u` admissible.
pub fn newton(
    disc: &Discretization,
    mut u: Vec<f64>,
    s: f64,
    params: &NewtonParams,
    trace: &mut NewtonTrace,
) -> Result<Vec<f64>> {
    let mut eval = disc.evaluate(&u, s, params.policy);
    if !eval.admissible {
        return Err(Error::InitialGuess("iterate is not negative and convex".into()));
    }
    trace.residuals.push(eval.max_abs);
    for it in 0..params.max_iterations {
        if eval.max_abs <= params.tolerance {
            return Ok(u);
        }
        let jac = disc.jacobian(&u, &eval.hessians, s, params.policy);
        let rhs: Vec<f64> = eval.residual.iter().map(|g| -g).collect();
        let du = sparse::solve(&jac, &rhs, params.linear_rtol)?;
        let mut step = 1.0;
        let mut accepted = None;
        for halvings in 0..=params.max_halvings {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a + step * d).collect();
            let te = disc.evaluate(&trial, s, params.policy);
            if te.admissible && te.max_abs < eval.max_abs {
                accepted = Some((trial, te, halvings));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, te, halvings)) = accepted else {
            return Err(Error::DampingExhausted { iteration: it + 1, residual: eval.max_abs });
        };
        if halvings > 0 {
            trace.damping.push(DampingEvent { iteration: it + 1, halvings, step, exponent_scale: s });
        }
        u = trial;
        eval = te;
        trace.iterations += 1;
        trace.residuals.push(eval.max_abs);
    }
    if eval.max_abs <= params.tolerance {
        Ok(u)
    } else {
        Err(Error::IterationLimit { iterations: params.max_iterations, residual: eval.max_abs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ConvexDomain;

    /// Jacobian columns against finite differences of the residual, with
    /// both stencil families present.
    #[test]
    fn jacobian_matches_differences() {
        let d = ConvexDomain::unit_disk();
        let g = GridSpec::new(&d, 11).unwrap();
        let disc = Discretization::new(&g, 0.5);
        assert!(disc.ops.iter().any(|o| o.near) && disc.ops.iter().any(|o| !o.near));
        let u: Vec<f64> =
            g.interior_coords().iter().map(|t| -(1.0 - t.norm_squared()).sqrt() * (1.0 + 0.1 * t[0])).collect();
        let ev = disc.evaluate(&u, 1.0, ExecPolicy::Sequential);
        assert!(ev.admissible);
        let jac = disc.jacobian(&u, &ev.hessians, 1.0, ExecPolicy::Sequential);
        let m = disc.len();
        let mut dense = vec![vec![0.0; m]; m];
        for &(r, c, v) in &jac.entries {
            dense[r][c] += v;
        }
        let eps = 1e-7;
        for col in (0..m).step_by(3) {
            let mut up = u.clone();
            let mut um = u.clone();
            up[col] += eps;
            um[col] -= eps;
            let gp = disc.evaluate(&up, 1.0, ExecPolicy::Sequential).residual;
            let gm = disc.evaluate(&um, 1.0, ExecPolicy::Sequential).residual;
            for row in 0..m {
                let fd = (gp[row] - gm[row]) / (2.0 * eps);
                assert!(
                    (fd - dense[row][col]).abs() < 1e-4 * (1.0 + fd.abs()),
                    "({row},{col}) {fd} vs {}",
                    dense[row][col]
                );
            }
        }
    }
}
