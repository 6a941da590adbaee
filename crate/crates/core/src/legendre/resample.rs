//! Grid path of the transform: values pushed forward to `y = grad f(x)` and
//! resampled onto a regular grid over the gradient image.

use crate::domain::{ConvexDomain, GridPotential, GridSpec, Role};
use crate::error::{Error, Result};
use crate::exec::{try_map_range, ExecPolicy};
use crate::linalg::{is_positive_definite, Point};

/// Pushed-forward sample: gradient image `y`, source point `x`, `v(y)`.
#[derive(Debug, Clone)]
pub struct Pushed {
    pub y: Point,
    pub x: Point,
    pub v: f64,
}

pub fn push_forward(f: &GridPotential, policy: ExecPolicy) -> Result<Vec<Pushed>> {
    let grid = f.grid();
    try_map_range(policy, grid.interior_count(), |k| {
        let jet = f.node_jet(k)?;
        if !is_positive_definite(&jet.hessian) {
            let min = crate::linalg::sym_eigenvalues(&jet.hessian)[0];
            return Err(Error::NotConvex {
                point: grid.interior_coord(k).iter().copied().collect(),
                min_eigenvalue: min,
            });
        }
        let x = grid.interior_coord(k);
        Ok(Pushed { v: x.dot(&jet.gradient) - jet.value, y: jet.gradient, x })
    })
}

/// Convex hull (counter-clockwise, collinear points dropped).
fn hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let scale = p.iter().fold(0.0_f64, |m, q| m.max(q[0].abs()).max(q[1].abs())).max(1.0);
    let eps = 1e-12 * scale * scale;
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = out.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while out.len() >= start + 2 && cross(out[out.len() - 2], out[out.len() - 1], q) <= eps {
                out.pop();
            }
            out.push(q);
        }
        out.pop();
    }
    out
}

/// Domain spanned by the pushed points.
pub fn image_domain(pushed: &[Pushed], n: usize) -> Result<ConvexDomain> {
    if n == 1 {
        let (lo, hi) =
            pushed.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.y[0]), b.max(p.y[0])));
        let d = ConvexDomain::Interval { lo, hi };
        d.validate()?;
        return Ok(d);
    }
    let pts: Vec<[f64; 2]> = pushed.iter().map(|p| [p.y[0], p.y[1]]).collect();
    let d = ConvexDomain::Polygon { vertices: hull(&pts) };
    d.validate()?;
    Ok(d)
}

/// `v` on a `shape` grid over the gradient image. Every pushed value is
/// moved to its nearest node by the first-order expansion `grad v(y) = x`,
/// and averaged there; empty nodes take an inverse-distance average of the
/// expansions from the samples of the nearest occupied nodes, at most four.
pub fn resample(pushed: &[Pushed], shape: &[usize]) -> Result<GridPotential> {
    let n = shape.len();
    let domain = image_domain(pushed, n)?;
    let (lo, hi) = domain.bounding_box();
    let grid = GridSpec::with_box(&domain, &lo, &hi, shape)?;
    let total = grid.total_nodes();
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); total];
    for (i, p) in pushed.iter().enumerate() {
        let idx: Vec<usize> = (0..n)
            .map(|a| (((p.y[a] - lo[a]) / grid.spacing()[a]).round().max(0.0) as usize).min(shape[a] - 1))
            .collect();
        bins[grid.flat(&idx)].push(i);
    }
    let expand = |i: usize, node: &Point| pushed[i].v + pushed[i].x.dot(&(node - &pushed[i].y));
    let values: Vec<f64> = (0..grid.interior_count())
        .map(|k| {
            let full = grid.interior_nodes()[k];
            let node = grid.interior_coord(k);
            if !bins[full].is_empty() {
                return bins[full].iter().map(|&i| expand(i, &node)).sum::<f64>() / bins[full].len() as f64;
            }
            let center = grid.multi_index(full);
            let mut found: Vec<(f64, usize)> = Vec::new();
            let reach = *shape.iter().max().unwrap_or(&1);
            for r in 1..=reach {
                for_ring(&center, r, shape, |idx| {
                    for &i in &bins[grid.flat(idx)] {
                        found.push(((&pushed[i].y - &node).norm(), i));
                    }
                });
                if found.len() >= 4 {
                    break;
                }
            }
            found.sort_by(|a, b| a.0.total_cmp(&b.0));
            found.truncate(4);
            let (mut num, mut den) = (0.0, 0.0);
            for (d, i) in found {
                let w = 1.0 / d.max(1e-300);
                num += w * expand(i, &node);
                den += w;
            }
            num / den
        })
        .collect();
    GridPotential::new(grid, values, Role::GraphF, false)
}

/// Visits lattice indices at Chebyshev distance exactly `r` from `c`.
fn for_ring<F: FnMut(&[usize])>(c: &[usize], r: usize, shape: &[usize], mut visit: F) {
    let r = r as i64;
    let inside = |i: i64, a: usize| i >= 0 && i < shape[a] as i64;
    if c.len() == 1 {
        for i in [c[0] as i64 - r, c[0] as i64 + r] {
            if inside(i, 0) {
                visit(&[i as usize]);
            }
        }
        return;
    }
    for di in -r..=r {
        for dj in -r..=r {
            if di.abs() != r && dj.abs() != r {
                continue;
            }
            let (i, j) = (c[0] as i64 + di, c[1] as i64 + dj);
            if inside(i, 0) && inside(j, 1) {
                visit(&[i as usize, j as usize]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_inner_points() {
        let h = hull(&[[0.0, 0.0], [1.0, 0.0], [0.5, 0.0], [1.0, 1.0], [0.0, 1.0], [0.3, 0.4]]);
        assert_eq!(h, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
    }

    #[test]
    fn ring_sizes() {
        let mut count = 0;
        for_ring(&[5, 5], 2, &[20, 20], |_| count += 1);
        assert_eq!(count, 16);
    }
}
