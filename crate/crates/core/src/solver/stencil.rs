//! Cut-cell difference operators on the interior nodes of a grid. Arms that
//! leave the domain end at the boundary intersection, where the unknown is
//! zero, so only interior columns appear in the rows.

use nalgebra::DMatrix;

use crate::domain::GridSpec;
use crate::linalg::Matrix;

/// Sparse row over interior node indices.
pub type Row = Vec<(usize, f64)>;

/// Index pairs `(i, j)` of the stored Hessian entries.
pub fn hessian_pairs(n: usize) -> &'static [(usize, usize)] {
    match n {
        1 => &[(0, 0)],
        _ => &[(0, 0), (1, 1), (0, 1)],
    }
}

#[derive(Debug, Clone)]
pub struct NodeOps {
    /// One row per entry of [`hessian_pairs`].
    pub hess: Vec<Row>,
    /// First derivative along each axis.
    pub grad: Vec<Row>,
    /// Inside the boundary band, where the Hessian is formed from `u^2`.
    pub near: bool,
}

/// Second difference along stencil direction `q`, unscaled by the step.
fn second(grid: &GridSpec, k: usize, q: usize) -> Row {
    let [fw, bw] = grid.stencil(k).arms[q];
    let (tp, tm) = (fw.theta, bw.theta);
    let w = 2.0 / (tp + tm);
    let mut row = vec![(k, -w * (1.0 / tp + 1.0 / tm))];
    if let Some(j) = fw.neighbor {
        row.push((j, w / tp));
    }
    if let Some(j) = bw.neighbor {
        row.push((j, w / tm));
    }
    row
}

/// First difference along axis direction `q`, unscaled by the step.
fn first(grid: &GridSpec, k: usize, q: usize) -> Row {
    let [fw, bw] = grid.stencil(k).arms[q];
    let (tp, tm) = (fw.theta, bw.theta);
    let den = tp * tm * (tp + tm);
    let mut row = vec![(k, (tp * tp - tm * tm) / den)];
    if let Some(j) = fw.neighbor {
        row.push((j, tm * tm / den));
    }
    if let Some(j) = bw.neighbor {
        row.push((j, -tp * tp / den));
    }
    row
}

/// Linear combination of rows with duplicate columns merged.
fn combine(parts: &[(f64, &Row)]) -> Row {
    let mut out: Row = Vec::new();
    for (c, row) in parts {
        if *c == 0.0 {
            continue;
        }
        for &(j, w) in row.iter() {
            match out.iter_mut().find(|e| e.0 == j) {
                Some(e) => e.1 += c * w,
                None => out.push((j, c * w)),
            }
        }
    }
    out
}

pub fn apply(row: &Row, u: &[f64]) -> f64 {
    row.iter().map(|&(j, w)| w * u[j]).sum()
}

/// Operators at every interior node. `band` is the boundary-measure
/// threshold below which a node is treated as near the boundary.
pub fn build(grid: &GridSpec, band: f64) -> Vec<NodeOps> {
    let n = grid.dim();
    let h = grid.spacing();
    (0..grid.interior_count())
        .map(|k| {
            let d2: Vec<Row> = (0..grid.direction_offsets().len()).map(|q| second(grid, k, q)).collect();
            let grad: Vec<Row> = (0..n).map(|a| combine(&[(1.0 / h[a], &first(grid, k, a))])).collect();
            let mut hess = Vec::with_capacity(hessian_pairs(n).len());
            hess.push(combine(&[(1.0 / (h[0] * h[0]), &d2[0])]));
            if n == 2 {
                hess.push(combine(&[(1.0 / (h[1] * h[1]), &d2[1])]));
                let st = grid.stencil(k);
                let (c1, c2) = (st.uncut(2), st.uncut(3));
                let hxy = h[0] * h[1];
                let cross = if c1 == c2 {
                    combine(&[(0.25 / hxy, &d2[2]), (-0.25 / hxy, &d2[3])])
                } else if c1 {
                    combine(&[(0.5 / hxy, &d2[2]), (-0.5 / hxy, &d2[0]), (-0.5 / hxy, &d2[1])])
                } else {
                    combine(&[(-0.5 / hxy, &d2[3]), (0.5 / hxy, &d2[0]), (0.5 / hxy, &d2[1])])
                };
                hess.push(cross);
            }
            NodeOps { hess, grad, near: grid.measure(k) < band }
        })
        .collect()
}

/// Symmetric matrix from the stored pair values.
pub fn assemble(n: usize, vals: &[f64]) -> Matrix {
    let mut m = DMatrix::zeros(n, n);
    for (p, &(i, j)) in hessian_pairs(n).iter().enumerate() {
        m[(i, j)] = vals[p];
        m[(j, i)] = vals[p];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ConvexDomain;

    #[test]
    fn quadratics_are_differentiated_exactly() {
        // vanishes on the unit circle, so the cut-cell zero is exact
        let d = ConvexDomain::unit_disk();
        let g = GridSpec::new(&d, 21).unwrap();
        let ops = build(&g, 0.0);
        let u: Vec<f64> = g.interior_coords().iter().map(|t| t.norm_squared() - 1.0).collect();
        for (k, op) in ops.iter().enumerate() {
            let t = g.interior_coord(k);
            let vals: Vec<f64> = op.hess.iter().map(|r| apply(r, &u)).collect();
            assert!((vals[0] - 2.0).abs() < 1e-9 && (vals[1] - 2.0).abs() < 1e-9, "{vals:?}");
            assert!(vals[2].abs() < 1e-9);
            for a in 0..2 {
                assert!((apply(&op.grad[a], &u) - 2.0 * t[a]).abs() < 1e-9);
            }
        }
    }
}
