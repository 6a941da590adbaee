use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::conormal::conormals_at;
use super::fubini_pick::fubini_pick_at;
use super::metric::{metric_from_jet, residual_from_jet, MetricKind};
use crate::domain::{PotentialField, Role};
use crate::error::Result;
use crate::exec::{try_map_slice, ExecPolicy};
use crate::linalg::{to_vec, Point};
use crate::output::{coord_names, csv_table};

/// Every invariant available at one chart point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointInvariants {
    pub point: Vec<f64>,
    pub role: String,
    pub value: f64,
    pub residual: f64,
    /// `expm1(-R/(n+2))`.
    pub defect: f64,
    pub metrics: BTreeMap<String, Vec<Vec<f64>>>,
    pub nu: Vec<f64>,
    pub mu: Vec<f64>,
    pub conormal_gap: f64,
    /// Row-major `A_ijk`, graph functions only.
    pub cubic_form: Option<Vec<f64>>,
    pub shape_operator: Option<Vec<Vec<f64>>>,
}

fn rows(m: &crate::linalg::Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn kinds(role: Role) -> &'static [MetricKind] {
    match role {
        Role::GraphF => &[MetricKind::AffineGraph],
        _ => &MetricKind::POTENTIAL_KINDS,
    }
}

pub fn invariants_at(f: &PotentialField, t: &[f64]) -> Result<PointInvariants> {
    let jet = f.jet(t)?;
    let role = f.role();
    let residual = residual_from_jet(role, &jet, t)?;
    let mut metrics = BTreeMap::new();
    for &k in kinds(role) {
        metrics.insert(k.name().to_string(), rows(&metric_from_jet(k, &jet, t)?));
    }
    let c = conormals_at(f, t)?;
    let (cubic_form, shape_operator) = if role == Role::GraphF {
        let s = fubini_pick_at(f, t)?;
        (Some(s.a.clone()), Some(rows(&s.b)))
    } else {
        (None, None)
    };
    Ok(PointInvariants {
        point: t.to_vec(),
        role: role.name().to_string(),
        value: jet.value,
        residual,
        defect: (-residual / (t.len() as f64 + 2.0)).exp_m1(),
        metrics,
        nu: to_vec(&c.nu),
        mu: to_vec(&c.mu),
        conormal_gap: c.gap(),
        cubic_form,
        shape_operator,
    })
}

/// Field dump: coordinates, value, residual, defect, the upper triangle of
/// every metric, then `nu` and `mu`.
pub fn invariants_csv(f: &PotentialField, points: &[Point], policy: ExecPolicy) -> Result<String> {
    let n = f.dim();
    let role = f.role();
    let mut head = coord_names("t", n);
    head.extend(["value", "residual", "defect"].map(String::from));
    for k in kinds(role) {
        for i in 0..n {
            for j in i..n {
                head.push(format!("{}_{}{}", k.name(), i + 1, j + 1));
            }
        }
    }
    head.extend(coord_names("nu", n + 1));
    head.extend(coord_names("mu", n + 1));
    let body = try_map_slice(policy, points, |p| {
        let t = p.as_slice();
        let jet = f.jet(t)?;
        let mut row = t.to_vec();
        let r = residual_from_jet(role, &jet, t)?;
        row.extend([jet.value, r, (-r / (n as f64 + 2.0)).exp_m1()]);
        for &k in kinds(role) {
            let g = metric_from_jet(k, &jet, t)?;
            for i in 0..n {
                for j in i..n {
                    row.push(g[(i, j)]);
                }
            }
        }
        let c = conormals_at(f, t)?;
        row.extend(c.nu.iter());
        row.extend(c.mu.iter());
        Ok(row)
    })?;
    csv_table(&head, &body)
}

/// Extremes of the residual and conormal gap over a sample set.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct InvariantsSummary {
    pub samples: usize,
    pub max_abs_residual: f64,
    pub max_abs_defect: f64,
    pub max_conormal_gap: f64,
}

pub fn summarize(f: &PotentialField, points: &[Point], policy: ExecPolicy) -> Result<InvariantsSummary> {
    let role = f.role();
    let per = try_map_slice(policy, points, |p| {
        let t = p.as_slice();
        let r = residual_from_jet(role, &f.jet(t)?, t)?;
        Ok((r.abs(), (-r / (t.len() as f64 + 2.0)).exp_m1().abs(), conormals_at(f, t)?.gap()))
    })?;
    Ok(per.iter().fold(InvariantsSummary { samples: per.len(), ..Default::default() }, |s, x| InvariantsSummary {
        samples: s.samples,
        max_abs_residual: s.max_abs_residual.max(x.0),
        max_abs_defect: s.max_abs_defect.max(x.1),
        max_conormal_gap: s.max_conormal_gap.max(x.2),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::point;

    #[test]
    fn hyperboloid_at_origin() {
        let f = PotentialField::hyperboloid(2).unwrap();
        let p = invariants_at(&f, &[0.0, 0.0]).unwrap();
        for v in [&p.nu, &p.mu] {
            assert!((v[0].abs() + v[1].abs() + (v[2] - 1.0).abs()) < 1e-14);
        }
        assert!(p.cubic_form.is_some());
    }

    #[test]
    fn csv_columns_match_rows() {
        let u = PotentialField::ball(2).unwrap();
        let s = invariants_csv(&u, &[point(&[0.1, 0.2]), point(&[-0.3, 0.0])], ExecPolicy::Sequential).unwrap();
        let widths: Vec<usize> = s.lines().map(|l| l.split(',').count()).collect();
        assert_eq!(widths, vec![widths[0]; 3]);
        assert_eq!(widths[0], 2 + 3 + 9 + 6);
    }
}
