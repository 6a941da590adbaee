use nalgebra::DVector;

use super::convex::{ConvexDomain, BOUNDARY_EPS};
use crate::error::{Error, Result};
use crate::linalg::Point;

/// One side of a difference stencil: either an interior neighbor or a cut
/// point on the boundary at fraction `theta` of the full step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arm {
    pub neighbor: Option<usize>,
    pub theta: f64,
}

/// Forward and backward arms along each stencil direction of one interior node.
#[derive(Debug, Clone)]
pub struct NodeStencil {
    pub arms: Vec<[Arm; 2]>,
}

impl NodeStencil {
    /// True when no arm along direction `q` is cut by the boundary.
    pub fn uncut(&self, q: usize) -> bool {
        self.arms[q].iter().all(|a| a.neighbor.is_some())
    }
}

/// Uniform tensor grid over the bounding box of a domain, with the interior
/// nodes (strictly inside) indexed consecutively.
#[derive(Debug, Clone)]
pub struct GridSpec {
    domain: ConvexDomain,
    shape: Vec<usize>,
    lower: Vec<f64>,
    spacing: Vec<f64>,
    /// Full index -> interior index.
    mask: Vec<Option<usize>>,
    /// Interior index -> full index.
    interior: Vec<usize>,
    stencils: Vec<NodeStencil>,
    measure: Vec<f64>,
}

impl GridSpec {
    /// `nodes` per axis across the bounding box of `domain`.
    pub fn new(domain: &ConvexDomain, nodes: usize) -> Result<Self> {
        let (lo, hi) = domain.bounding_box();
        Self::with_box(domain, &lo, &hi, &vec![nodes; domain.dim()])
    }

    pub fn with_box(domain: &ConvexDomain, lower: &[f64], upper: &[f64], shape: &[usize]) -> Result<Self> {
        domain.validate()?;
        let n = domain.dim();
        if lower.len() != n || upper.len() != n || shape.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: shape.len() });
        }
        if shape.iter().any(|&s| s < 3) {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes per axis, got {shape:?}")));
        }
        let spacing: Vec<f64> = (0..n).map(|a| (upper[a] - lower[a]) / (shape[a] - 1) as f64).collect();
        if spacing.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::InvalidGrid(format!("degenerate bounding box {lower:?}..{upper:?}")));
        }
        let mut grid = GridSpec {
            domain: domain.clone(),
            shape: shape.to_vec(),
            lower: lower.to_vec(),
            spacing,
            mask: Vec::new(),
            interior: Vec::new(),
            stencils: Vec::new(),
            measure: Vec::new(),
        };
        let total: usize = shape.iter().product();
        grid.mask = vec![None; total];
        for full in 0..total {
            let t = grid.coord(full);
            let rho = domain.boundary_measure(t.as_slice());
            if rho > BOUNDARY_EPS {
                grid.mask[full] = Some(grid.interior.len());
                grid.interior.push(full);
                grid.measure.push(rho);
            }
        }
        if grid.interior.is_empty() {
            return Err(Error::InvalidGrid("no grid node lies inside the domain".into()));
        }
        let dirs = grid.direction_offsets();
        let steps = grid.directions();
        grid.stencils = grid
            .interior
            .iter()
            .map(|&full| {
                let idx = grid.multi_index(full);
                let t = grid.coord(full);
                let arms = dirs
                    .iter()
                    .zip(&steps)
                    .map(|(off, step)| {
                        let mut pair = [Arm { neighbor: None, theta: 1.0 }; 2];
                        for (s, sign) in [1_i64, -1].into_iter().enumerate() {
                            let nb = grid.offset(&idx, off, sign).and_then(|f| grid.mask[f]);
                            pair[s] = match nb {
                                Some(k) => Arm { neighbor: Some(k), theta: 1.0 },
                                None => {
                                    let st: Vec<f64> = step.iter().map(|x| x * sign as f64).collect();
                                    Arm { neighbor: None, theta: domain.cut_fraction(t.as_slice(), &st) }
                                }
                            };
                        }
                        pair
                    })
                    .collect();
                NodeStencil { arms }
            })
            .collect();
        Ok(grid)
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_nodes(&self) -> usize {
        self.mask.len()
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_index(&self, full: usize) -> Option<usize> {
        self.mask[full]
    }

    pub fn stencil(&self, k: usize) -> &NodeStencil {
        &self.stencils[k]
    }

    /// Boundary measure of interior node `k`.
    pub fn measure(&self, k: usize) -> f64 {
        self.measure[k]
    }

    pub fn multi_index(&self, full: usize) -> Vec<usize> {
        match self.dim() {
            1 => vec![full],
            _ => vec![full / self.shape[1], full % self.shape[1]],
        }
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        match self.dim() {
            1 => idx[0],
            _ => idx[0] * self.shape[1] + idx[1],
        }
    }

    pub fn coord(&self, full: usize) -> Point {
        let idx = self.multi_index(full);
        DVector::from_iterator(self.dim(), (0..self.dim()).map(|a| self.lower[a] + idx[a] as f64 * self.spacing[a]))
    }

    pub fn interior_coord(&self, k: usize) -> Point {
        self.coord(self.interior[k])
    }

    pub fn interior_coords(&self) -> Vec<Point> {
        (0..self.interior.len()).map(|k| self.interior_coord(k)).collect()
    }

    /// Index offsets of the stencil directions: the axes, then for n = 2
    /// the two diagonals `(1, 1)` and `(1, -1)`.
    pub fn direction_offsets(&self) -> Vec<Vec<i64>> {
        match self.dim() {
            1 => vec![vec![1]],
            _ => vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![1, -1]],
        }
    }

    /// Stencil directions as coordinate steps.
    pub fn directions(&self) -> Vec<Vec<f64>> {
        self.direction_offsets()
            .iter()
            .map(|off| off.iter().zip(&self.spacing).map(|(o, h)| *o as f64 * h).collect())
            .collect()
    }

    /// Full index of `idx + sign * off`, if it lies in the box.
    pub fn offset(&self, idx: &[usize], off: &[i64], sign: i64) -> Option<usize> {
        let mut out = Vec::with_capacity(idx.len());
        for a in 0..idx.len() {
            let j = idx[a] as i64 + sign * off[a];
            if j < 0 || j >= self.shape[a] as i64 {
                return None;
            }
            out.push(j as usize);
        }
        Some(self.flat(&out))
    }

    /// Face-adjacent nodes of `full` inside the box.
    pub fn face_neighbors(&self, full: usize) -> Vec<usize> {
        let idx = self.multi_index(full);
        let mut out = Vec::with_capacity(2 * self.dim());
        for a in 0..self.dim() {
            let mut off = vec![0_i64; self.dim()];
            off[a] = 1;
            for sign in [1, -1] {
                if let Some(f) = self.offset(&idx, &off, sign) {
                    out.push(f);
                }
            }
        }
        out
    }

    /// Interior node nearest to `t` (by rounding to the box lattice), if any.
    pub fn nearest_interior(&self, t: &[f64]) -> Option<usize> {
        let mut idx = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let j = ((t[a] - self.lower[a]) / self.spacing[a]).round();
            if j < 0.0 || j > (self.shape[a] - 1) as f64 {
                return None;
            }
            idx.push(j as usize);
        }
        self.mask[self.flat(&idx)]
    }

    /// Interior node whose coordinates agree with `t` to `tol` grid units.
    pub fn node_at(&self, t: &[f64], tol: f64) -> Option<usize> {
        let k = self.nearest_interior(t)?;
        let c = self.interior_coord(k);
        let close = (0..self.dim()).all(|a| (c[a] - t[a]).abs() <= tol * self.spacing[a]);
        close.then_some(k)
    }

    /// Cut fractions strictly below one, as `(interior node, direction, side, theta)`.
    pub fn cut_cells(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for (k, st) in self.stencils.iter().enumerate() {
            for (q, pair) in st.arms.iter().enumerate() {
                for (s, arm) in pair.iter().enumerate() {
                    if arm.neighbor.is_none() {
                        out.push((k, q, s, arm.theta));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_grid_interior_is_strict() {
        let d = ConvexDomain::unit_disk();
        let g = GridSpec::new(&d, 17).unwrap();
        for k in 0..g.interior_count() {
            assert!(d.contains(g.interior_coord(k).as_slice()));
        }
        // nodes on the circle itself are excluded
        assert!(g.interior_index(g.flat(&[16, 8])).is_none());
        for (_, _, _, theta) in g.cut_cells() {
            assert!(theta > 0.0 && theta <= 1.0);
        }
    }

    #[test]
    fn interval_cut_fractions() {
        let d = ConvexDomain::Interval { lo: -1.0, hi: 1.0 };
        let g = GridSpec::new(&d, 5).unwrap();
        assert_eq!(g.interior_count(), 3);
        let st = g.stencil(0);
        assert!(st.arms[0][1].neighbor.is_none());
        assert!((st.arms[0][1].theta - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        assert!(GridSpec::new(&ConvexDomain::unit_disk(), 2).is_err());
    }
}
