use std::collections::VecDeque;

use super::grid::GridSpec;
use super::potential::{PotentialField, Role};
use crate::error::{Error, Result};
use crate::exec::{try_map_range, ExecPolicy};
use crate::linalg::{to_vec, Point};

/// Gradient norm accepted at a base point of an analytic field.
pub const BASE_GRADIENT_TOL: f64 = 1e-6;

/// Connected sublevel component sampled on a grid.
#[derive(Debug, Clone)]
pub struct SublevelSet {
    pub h: f64,
    pub base_point: Point,
    /// Threshold in the field's own units: `-1/h` for `u`, `h` for `f`.
    pub threshold: f64,
    /// Interior node indices of the sampling grid, ascending.
    pub members: Vec<usize>,
    grid: GridSpec,
    inside: Vec<bool>,
}

impl SublevelSet {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn contains_node(&self, k: usize) -> bool {
        self.inside[k]
    }

    pub fn member_points(&self) -> Vec<Point> {
        self.members.iter().map(|&k| self.grid.interior_coord(k)).collect()
    }

    /// True when the nearest sampling node belongs to the component and the
    /// field is below threshold at `t`.
    pub fn contains(&self, field: &PotentialField, t: &[f64]) -> bool {
        match self.grid.nearest_interior(t) {
            Some(k) if self.inside[k] => field.value(t).is_ok_and(|v| v < self.threshold),
            _ => false,
        }
    }

    /// True when the component touches a node on the edge of the sampling box.
    pub fn touches_box(&self) -> bool {
        self.members.iter().any(|&k| {
            let idx = self.grid.multi_index(self.grid.interior_nodes()[k]);
            idx.iter().zip(self.grid.shape()).any(|(i, s)| *i == 0 || *i + 1 == *s)
        })
    }
}

/// Level used to cut the field: `{u < -1/h}` for potentials, `{f < h}` for
/// graph functions.
pub fn sublevel_threshold(role: Role, h: f64) -> Result<f64> {
    match role {
        Role::PotentialU => Ok(-1.0 / h),
        Role::GraphF => Ok(h),
        Role::Scalar => Err(Error::RoleMismatch { expected: "potential_u or graph_f", found: "scalar" }),
    }
}

/// Component of `{u < threshold}` containing `p`, by flood fill over
/// face-adjacent nodes of `grid`. For grid fields `grid` is ignored and the
/// field's own grid is used.
pub fn sublevel_set(
    u: &PotentialField,
    h: f64,
    p: &Point,
    sampling: Option<&GridSpec>,
    policy: ExecPolicy,
) -> Result<SublevelSet> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("level h must be positive, got {h}")));
    }
    let threshold = sublevel_threshold(u.role(), h)?;
    let grid = match (u, sampling) {
        (PotentialField::Grid(g), _) => g.grid().clone(),
        (_, Some(g)) => g.clone(),
        (_, None) => match u.domain() {
            Some(d) => GridSpec::new(d, 129)?,
            None => return Err(Error::Config("an unbounded field needs a sampling grid".into())),
        },
    };
    check_base_point(u, p, &grid)?;
    let values = try_map_range(policy, grid.interior_count(), |k| u.value(grid.interior_coord(k).as_slice()))?;
    let below: Vec<bool> = values.iter().map(|v| *v < threshold).collect();
    let mut inside = vec![false; grid.interior_count()];
    if let Some(start) = grid.nearest_interior(p.as_slice()) {
        if below[start] {
            let mut queue = VecDeque::from([start]);
            inside[start] = true;
            while let Some(k) = queue.pop_front() {
                for nb in grid.face_neighbors(grid.interior_nodes()[k]) {
                    if let Some(j) = grid.interior_index(nb) {
                        if below[j] && !inside[j] {
                            inside[j] = true;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
    }
    let members = (0..inside.len()).filter(|&k| inside[k]).collect();
    Ok(SublevelSet { h, base_point: p.clone(), threshold, members, grid, inside })
}

fn check_base_point(u: &PotentialField, p: &Point, grid: &GridSpec) -> Result<()> {
    if !u.contains(p.as_slice()) {
        return Err(Error::OutsideDomain { point: to_vec(p) });
    }
    match u {
        PotentialField::Analytic(_) => {
            let g = u.jet(p.as_slice())?.gradient.norm();
            if g > BASE_GRADIENT_TOL {
                return Err(Error::BaseNotMinimum { gradient_norm: g });
            }
        }
        PotentialField::Grid(gp) => {
            // discrete local minimum over face neighbors
            let k = grid.nearest_interior(p.as_slice()).ok_or(Error::OutsideDomain { point: to_vec(p) })?;
            let v = gp.values();
            for nb in grid.face_neighbors(grid.interior_nodes()[k]) {
                if let Some(j) = grid.interior_index(nb) {
                    if v[j] < v[k] {
                        let g = gp.fd_gradient(k).map(|g| g.norm()).unwrap_or(f64::NAN);
                        return Err(Error::BaseNotMinimum { gradient_norm: g });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Minimum point of `u`: the grid argmin, refined by one Newton step when
/// the field is analytic.
pub fn locate_base_point(u: &PotentialField, sampling: Option<&GridSpec>, policy: ExecPolicy) -> Result<Point> {
    let grid = match (u, sampling) {
        (PotentialField::Grid(g), _) => g.grid().clone(),
        (_, Some(g)) => g.clone(),
        (_, None) => match u.domain() {
            Some(d) => GridSpec::new(d, 65)?,
            None => return Err(Error::Config("an unbounded field needs a sampling grid".into())),
        },
    };
    let values = try_map_range(policy, grid.interior_count(), |k| u.value(grid.interior_coord(k).as_slice()))?;
    let (k, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::InvalidGrid("empty sampling grid".into()))?;
    let p = grid.interior_coord(k);
    if !u.is_analytic() {
        return Ok(p);
    }
    let jet = u.jet(p.as_slice())?;
    let step = jet.hessian.clone().lu().solve(&jet.gradient);
    match step {
        Some(s) => {
            let q = &p - s;
            Ok(if u.contains(q.as_slice()) { q } else { p })
        }
        None => Ok(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ConvexDomain;
    use crate::linalg::point;

    #[test]
    fn ball_level_two_is_disk_of_radius_sqrt3_over_2() {
        let u = PotentialField::ball(2).unwrap();
        let s = sublevel_set(&u, 2.0, &point(&[0.0, 0.0]), None, ExecPolicy::Sequential).unwrap();
        let r = 3.0_f64.sqrt() / 2.0;
        let g = s.grid();
        for k in 0..g.interior_count() {
            let rr = g.interior_coord(k).norm();
            if (rr - r).abs() > 1e-9 {
                assert_eq!(s.contains_node(k), rr < r, "node at radius {rr}");
            }
        }
    }

    #[test]
    fn level_one_is_empty_and_large_level_fills() {
        let u = PotentialField::ball(2).unwrap();
        let p = point(&[0.0, 0.0]);
        assert!(sublevel_set(&u, 1.0, &p, None, ExecPolicy::Sequential).unwrap().is_empty());
        let all = sublevel_set(&u, 1e6, &p, None, ExecPolicy::Sequential).unwrap();
        assert_eq!(all.len(), all.grid().interior_count());
    }

    #[test]
    fn off_minimum_base_is_rejected() {
        let u = PotentialField::ball(2).unwrap();
        let r = sublevel_set(&u, 2.0, &point(&[0.3, 0.0]), None, ExecPolicy::Sequential);
        assert!(matches!(r, Err(Error::BaseNotMinimum { .. })));
    }

    #[test]
    fn base_point_of_shifted_quadratic() {
        let u = PotentialField::polynomial(
            2,
            &[-1.0, -0.1, 0.05, 0.5, 0.0, 0.5],
            Role::PotentialU,
            Some(ConvexDomain::unit_disk()),
        )
        .unwrap();
        let p = locate_base_point(&u, None, ExecPolicy::Sequential).unwrap();
        assert!((p[0] - 0.1).abs() < 1e-12 && (p[1] + 0.05).abs() < 1e-12);
    }
}
