use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::map::ProjectiveMap;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues, Matrix, Point};

/// Points with boundary measure at or below this are treated as boundary.
pub const BOUNDARY_EPS: f64 = 1e-12;

/// Bounded convex domain in a single inhomogeneous chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexDomain {
    Interval {
        lo: f64,
        hi: f64,
    },
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// `semi_axes[0]` lies along the direction `angle` (radians from the t1 axis).
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
        angle: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    /// Inward unit normal.
    normal: [f64; 2],
    offset: f64,
    /// Largest distance from the edge line to any vertex.
    width: f64,
}

impl Edge {
    /// Normalized distance to the edge line, in `[0, 1]` on the polygon.
    fn lambda(&self, t: &[f64]) -> f64 {
        (self.normal[0] * t[0] + self.normal[1] * t[1] + self.offset) / self.width
    }

    fn gradient(&self) -> [f64; 2] {
        [self.normal[0] / self.width, self.normal[1] / self.width]
    }
}

impl ConvexDomain {
    pub fn unit_interval() -> Self {
        ConvexDomain::Interval { lo: -1.0, hi: 1.0 }
    }

    pub fn unit_disk() -> Self {
        ConvexDomain::Disk { center: [0.0, 0.0], radius: 1.0 }
    }

    pub fn unit_ball(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Self::unit_interval()),
            2 => Ok(Self::unit_disk()),
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }

    pub fn square(half_width: f64) -> Self {
        let h = half_width;
        ConvexDomain::Polygon { vertices: vec![[-h, -h], [h, -h], [h, h], [-h, h]] }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexDomain::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexDomain::Interval { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::InvalidDomain(format!("interval needs lo < hi, got [{lo}, {hi}]")));
                }
            }
            ConvexDomain::Disk { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) || !center.iter().all(|c| c.is_finite()) {
                    return Err(Error::InvalidDomain(format!("disk radius must be positive, got {radius}")));
                }
            }
            ConvexDomain::Ellipse { center, semi_axes, angle } => {
                if !semi_axes.iter().all(|a| a.is_finite() && *a > 0.0)
                    || !center.iter().all(|c| c.is_finite())
                    || !angle.is_finite()
                {
                    return Err(Error::InvalidDomain(format!("ellipse semi-axes must be positive, got {semi_axes:?}")));
                }
            }
            ConvexDomain::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::InvalidDomain("polygon needs at least 3 vertices".into()));
                }
                let m = vertices.len();
                let mut sign = 0.0_f64;
                for i in 0..m {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % m];
                    let c = vertices[(i + 2) % m];
                    let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
                    if cross == 0.0 || !cross.is_finite() {
                        return Err(Error::InvalidDomain(format!("polygon has collinear or repeated vertices at {i}")));
                    }
                    if sign == 0.0 {
                        sign = cross.signum();
                    } else if cross.signum() != sign {
                        return Err(Error::InvalidDomain("polygon is not convex".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// `(center, Q)` with the domain equal to `{(t - c)^T Q (t - c) < 1}`.
    fn quadric(&self) -> Option<(Point, Matrix)> {
        match self {
            ConvexDomain::Interval { lo, hi } => {
                let r = 0.5 * (hi - lo);
                Some((DVector::from_element(1, 0.5 * (lo + hi)), DMatrix::from_element(1, 1, 1.0 / (r * r))))
            }
            ConvexDomain::Disk { center, radius } => {
                Some((DVector::from_column_slice(center), DMatrix::identity(2, 2) / (radius * radius)))
            }
            ConvexDomain::Ellipse { center, semi_axes, angle } => {
                let (s, c) = angle.sin_cos();
                let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
                let diag = DMatrix::from_diagonal(&DVector::from_column_slice(&[
                    1.0 / (semi_axes[0] * semi_axes[0]),
                    1.0 / (semi_axes[1] * semi_axes[1]),
                ]));
                Some((DVector::from_column_slice(center), &rot * diag * rot.transpose()))
            }
            ConvexDomain::Polygon { .. } => None,
        }
    }

    fn edges(&self) -> Vec<Edge> {
        let ConvexDomain::Polygon { vertices } = self else {
            return Vec::new();
        };
        let m = vertices.len();
        let area2: f64 = (0..m)
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % m];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum();
        let orient = area2.signum();
        (0..m)
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % m];
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                let len = (dx * dx + dy * dy).sqrt();
                // inward normal for counter-clockwise orientation is (-dy, dx)
                let normal = [-dy * orient / len, dx * orient / len];
                let offset = -(normal[0] * a[0] + normal[1] * a[1]);
                let width =
                    vertices.iter().map(|v| normal[0] * v[0] + normal[1] * v[1] + offset).fold(0.0_f64, f64::max);
                Edge { normal, offset, width }
            })
            .collect()
    }

    /// Affine-invariant measure of depth: positive inside, zero on the
    /// boundary, at most 1. Behaves like a multiple of the boundary distance
    /// near smooth parts of the boundary.
    pub fn boundary_measure(&self, t: &[f64]) -> f64 {
        if let Some((c, q)) = self.quadric() {
            let d = DVector::from_column_slice(t) - c;
            return 1.0 - (d.transpose() * q * d)[(0, 0)];
        }
        self.edges()
            .iter()
            .map(|e| {
                let l = e.lambda(t);
                if l >= 0.0 {
                    4.0 * l * (1.0 - l)
                } else {
                    l
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        t.len() == self.dim() && self.boundary_measure(t) > BOUNDARY_EPS
    }

    /// Smooth defining function `rho > 0` inside, `rho = 0` on the boundary,
    /// with its gradient and Hessian. Quadric domains use `1 - q(t)`,
    /// polygons the product of normalized edge distances scaled to 1 at the
    /// vertex centroid.
    pub fn defining_function(&self, t: &[f64]) -> (f64, Point, Matrix) {
        let n = self.dim();
        if let Some((c, q)) = self.quadric() {
            let d = DVector::from_column_slice(t) - c;
            let qd = &q * &d;
            let value = 1.0 - d.dot(&qd);
            return (value, -2.0 * qd, -2.0 * q);
        }
        let edges = self.edges();
        let centroid = self.centroid();
        let norm: f64 = edges.iter().map(|e| e.lambda(&centroid)).product();
        let lams: Vec<f64> = edges.iter().map(|e| e.lambda(t)).collect();
        let grads: Vec<[f64; 2]> = edges.iter().map(Edge::gradient).collect();
        let m = edges.len();
        let mut value = 1.0;
        for l in &lams {
            value *= l;
        }
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..m {
            let mut others = 1.0;
            for (k, l) in lams.iter().enumerate() {
                if k != i {
                    others *= l;
                }
            }
            for a in 0..2 {
                grad[a] += grads[i][a] * others;
            }
            for j in 0..m {
                if j == i {
                    continue;
                }
                let mut rest = 1.0;
                for (k, l) in lams.iter().enumerate() {
                    if k != i && k != j {
                        rest *= l;
                    }
                }
                for a in 0..2 {
                    for b in 0..2 {
                        hess[(a, b)] += grads[i][a] * grads[j][b] * rest;
                    }
                }
            }
        }
        (value / norm, grad / norm, hess / norm)
    }

    /// Smallest `theta` in `(0, 1]` where `p + theta * step` meets the
    /// boundary; 1 when the segment stays inside.
    pub fn cut_fraction(&self, p: &[f64], step: &[f64]) -> f64 {
        let theta = if let Some((c, q)) = self.quadric() {
            let d = DVector::from_column_slice(p) - c;
            let s = DVector::from_column_slice(step);
            let qs = &q * &s;
            let a = s.dot(&qs);
            let b = d.dot(&qs);
            let cc = d.dot(&(&q * &d)) - 1.0;
            let disc = (b * b - a * cc).max(0.0);
            // cc < 0 inside: the positive root, written to avoid cancellation
            if b >= 0.0 {
                -cc / (b + disc.sqrt())
            } else {
                (-b + disc.sqrt()) / a
            }
        } else {
            self.edges()
                .iter()
                .filter_map(|e| {
                    let rate = e.normal[0] * step[0] + e.normal[1] * step[1];
                    if rate < 0.0 {
                        let dist = e.normal[0] * p[0] + e.normal[1] * p[1] + e.offset;
                        Some(-dist / rate)
                    } else {
                        None
                    }
                })
                .fold(f64::INFINITY, f64::min)
        };
        theta.clamp(f64::MIN_POSITIVE, 1.0)
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            ConvexDomain::Interval { lo, hi } => (vec![*lo], vec![*hi]),
            ConvexDomain::Polygon { vertices } => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for v in vertices {
                    for a in 0..2 {
                        lo[a] = lo[a].min(v[a]);
                        hi[a] = hi[a].max(v[a]);
                    }
                }
                (lo, hi)
            }
            _ => {
                let (c, q) = self.quadric().expect("quadric domain");
                let qi = q.try_inverse().expect("positive definite shape");
                let ext: Vec<f64> = (0..2).map(|a| qi[(a, a)].sqrt()).collect();
                ((0..2).map(|a| c[a] - ext[a]).collect(), (0..2).map(|a| c[a] + ext[a]).collect())
            }
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        match self {
            ConvexDomain::Interval { lo, hi } => vec![0.5 * (lo + hi)],
            ConvexDomain::Disk { center, .. } | ConvexDomain::Ellipse { center, .. } => center.to_vec(),
            ConvexDomain::Polygon { vertices } => {
                let m = vertices.len() as f64;
                vec![vertices.iter().map(|v| v[0]).sum::<f64>() / m, vertices.iter().map(|v| v[1]).sum::<f64>() / m]
            }
        }
    }

    /// Uniform samples with `boundary_measure > margin`, by rejection.
    pub fn sample_interior<R: Rng>(&self, rng: &mut R, count: usize, margin: f64) -> Vec<Point> {
        let (lo, hi) = self.bounding_box();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let t: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
            if self.boundary_measure(&t) > margin {
                out.push(DVector::from_vec(t));
            }
        }
        out
    }

    /// Image under a projective map; the homogeneous coordinate must stay
    /// positive on the closed domain.
    pub fn image_under(&self, map: &ProjectiveMap) -> Result<ConvexDomain> {
        if map.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: map.dim() });
        }
        match self {
            ConvexDomain::Interval { lo, hi } => {
                let (a, la) = map.apply(&DVector::from_element(1, *lo));
                let (b, lb) = map.apply(&DVector::from_element(1, *hi));
                let bad: Vec<Vec<f64>> =
                    [(*lo, la), (*hi, lb)].iter().filter(|(_, l)| *l <= 0.0).map(|(t, _)| vec![*t]).collect();
                if !bad.is_empty() {
                    return Err(Error::ChartOverflow { points: bad });
                }
                Ok(ConvexDomain::Interval { lo: a[0].min(b[0]), hi: a[0].max(b[0]) })
            }
            ConvexDomain::Polygon { vertices } => {
                let mut out = Vec::with_capacity(vertices.len());
                let mut bad = Vec::new();
                for v in vertices {
                    let (w, l) = map.apply(&DVector::from_column_slice(v));
                    if l <= 0.0 {
                        bad.push(v.to_vec());
                    }
                    out.push([w[0], w[1]]);
                }
                if !bad.is_empty() {
                    return Err(Error::ChartOverflow { points: bad });
                }
                Ok(ConvexDomain::Polygon { vertices: out })
            }
            _ => self.conic_image(map),
        }
    }

    fn conic_image(&self, map: &ProjectiveMap) -> Result<ConvexDomain> {
        let (c, q) = self.quadric().expect("quadric domain");
        let n = 2;
        let a = map.matrix();
        // homogeneous coordinate along the domain: lambda(t) = l.t + d
        let l = DVector::from_iterator(n, (0..n).map(|j| a[(n, j)]));
        let d = a[(n, n)];
        let qi = q.clone().try_inverse().expect("positive definite shape");
        let spread = l.dot(&(&qi * &l)).sqrt();
        let lambda_min = l.dot(&c) + d - spread;
        if lambda_min <= 0.0 {
            let worst = if spread > 0.0 { &c - &qi * &l / spread } else { c.clone() };
            return Err(Error::ChartOverflow { points: vec![worst.iter().copied().collect()] });
        }
        let mut conic = DMatrix::zeros(n + 1, n + 1);
        conic.view_mut((0, 0), (n, n)).copy_from(&q);
        let qc = &q * &c;
        for i in 0..n {
            conic[(i, n)] = -qc[i];
            conic[(n, i)] = -qc[i];
        }
        conic[(n, n)] = c.dot(&qc) - 1.0;
        let inv = map.inverse_matrix();
        let image = inv.transpose() * conic * inv;
        let block = image.view((0, 0), (n, n)).into_owned();
        let r = DVector::from_iterator(n, (0..n).map(|i| image[(i, n)]));
        let s = image[(n, n)];
        let block_inv =
            block.clone().try_inverse().ok_or_else(|| Error::InvalidDomain("image conic is degenerate".into()))?;
        let center = -(&block_inv * &r);
        let scale = r.dot(&(&block_inv * &r)) - s;
        let shape = block / scale;
        let ev = sym_eigenvalues(&shape);
        if !(ev[0] > 0.0) {
            return Err(Error::InvalidDomain("image of the ellipse is unbounded in the chart".into()));
        }
        Ok(ellipse_from_shape([center[0], center[1]], &shape))
    }
}

/// Ellipse `{(t - c)^T Q (t - c) < 1}`, reported as a disk when `Q` is a
/// multiple of the identity to rounding.
fn ellipse_from_shape(center: [f64; 2], shape: &Matrix) -> ConvexDomain {
    let (a, b, c) = (shape[(0, 0)], 0.5 * (shape[(0, 1)] + shape[(1, 0)]), shape[(1, 1)]);
    let scale = a.abs().max(c.abs());
    if (a - c).abs() <= 1e-14 * scale && b.abs() <= 1e-14 * scale {
        return ConvexDomain::Disk { center, radius: (2.0 / (a + c)).sqrt() };
    }
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (l_small, l_large) = (mean - rad, mean + rad);
    // eigenvector of the smaller eigenvalue carries the longer semi-axis
    let angle = if b.abs() > 0.0 {
        (l_small - a).atan2(b)
    } else if a <= c {
        0.0
    } else {
        std::f64::consts::FRAC_PI_2
    };
    ConvexDomain::Ellipse { center, semi_axes: [1.0 / l_small.sqrt(), 1.0 / l_large.sqrt()], angle }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::point;

    #[test]
    fn polygon_convexity_is_checked() {
        assert!(ConvexDomain::square(1.0).validate().is_ok());
        let dart = ConvexDomain::Polygon { vertices: vec![[0.0, 0.0], [2.0, 1.0], [0.0, 2.0], [0.5, 1.0]] };
        assert!(dart.validate().is_err());
    }

    #[test]
    fn boundary_measure_of_disk_and_square() {
        let d = ConvexDomain::unit_disk();
        assert!((d.boundary_measure(&[0.6, 0.0]) - 0.64).abs() < 1e-15);
        assert!(!d.contains(&[1.0, 0.0]));
        let s = ConvexDomain::square(1.0);
        assert!((s.boundary_measure(&[0.5, 0.0]) - 0.75).abs() < 1e-15);
        assert!(s.boundary_measure(&[1.5, 0.0]) < 0.0);
    }

    #[test]
    fn cut_fraction_hits_boundary() {
        let d = ConvexDomain::unit_disk();
        let th = d.cut_fraction(&[0.9, 0.0], &[0.2, 0.0]);
        assert!((th - 0.5).abs() < 1e-14);
        let s = ConvexDomain::square(1.0);
        let th = s.cut_fraction(&[0.9, 0.9], &[0.2, 0.4]);
        assert!((th - 0.25).abs() < 1e-14);
    }

    #[test]
    fn defining_function_derivatives_match_differences() {
        let tri = ConvexDomain::Polygon { vertices: vec![[0.0, 0.0], [2.0, 0.2], [0.5, 1.5]] };
        let t = [0.7, 0.5];
        let (_, g, h) = tri.defining_function(&t);
        let eps = 1e-6;
        for a in 0..2 {
            let mut tp = t;
            let mut tm = t;
            tp[a] += eps;
            tm[a] -= eps;
            let (fp, gp, _) = tri.defining_function(&tp);
            let (fm, gm, _) = tri.defining_function(&tm);
            assert!(((fp - fm) / (2.0 * eps) - g[a]).abs() < 1e-8);
            for b in 0..2 {
                assert!(((gp[b] - gm[b]) / (2.0 * eps) - h[(b, a)]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn disk_image_under_diagonal_scaling_is_ellipse() {
        let s2 = std::f64::consts::SQRT_2;
        let m = ProjectiveMap::affine(&DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]), &[0.25, 0.0]).unwrap();
        let img = ConvexDomain::unit_disk().image_under(&m).unwrap();
        assert!(img.contains(&[0.25 + 1.9, 0.0]));
        assert!(!img.contains(&[0.25, 0.51]));
        let (lo, hi) = img.bounding_box();
        assert!((lo[0] + 1.75).abs() < 1e-12 && (hi[1] - 0.5).abs() < 1e-12);
        let _ = s2;
    }

    #[test]
    fn projective_image_matches_pointwise_map() {
        let m = ProjectiveMap::from_row_major(&[1.1, 0.2, 0.1, -0.1, 0.9, 0.0, 0.2, 0.1, 1.0]).unwrap();
        let img = ConvexDomain::unit_disk().image_under(&m).unwrap();
        for k in 0..16 {
            let th = k as f64 * std::f64::consts::PI / 8.0;
            let inner = m.apply(&point(&[0.999 * th.cos(), 0.999 * th.sin()])).0;
            let outer = m.apply(&point(&[1.001 * th.cos(), 1.001 * th.sin()])).0;
            assert!(img.contains(inner.as_slice()));
            assert!(!img.contains(outer.as_slice()));
        }
    }

    #[test]
    fn chart_overflow_is_reported() {
        let m = ProjectiveMap::from_row_major(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(ConvexDomain::unit_disk().image_under(&m), Err(Error::ChartOverflow { .. })));
    }
}
