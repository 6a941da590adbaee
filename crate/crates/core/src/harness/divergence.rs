use serde::{Deserialize, Serialize};

use super::gradient::graph_base_point;
use super::report::{num, StudyReport};
use crate::domain::{locate_base_point, PotentialField, Role};
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::invariants::segment_length;
use crate::linalg::{to_vec, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceMode {
    /// `x(z) = p + z (b - p)` with `b` on the boundary, `z_k = 1 - 10^{-k}`.
    TowardBoundary,
    /// `x(z) = p + z y` on an unbounded chart, `z_k = 10^k`.
    Decades,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayLengths {
    pub mode: DivergenceMode,
    pub base: Vec<f64>,
    /// Direction vector; `b - p` for rays toward the boundary.
    pub direction: Vec<f64>,
    pub z: Vec<f64>,
    /// Length from `z = 0` to each `z_k`, `k = 0..=k_max`.
    pub lengths: Vec<f64>,
}

impl RayLengths {
    /// `l_k - l_{k-1}` for `k = 1..=k_max`.
    pub fn increments(&self) -> Vec<f64> {
        self.lengths.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

pub fn ray_parameter(mode: DivergenceMode, k: usize) -> f64 {
    match mode {
        DivergenceMode::TowardBoundary => 1.0 - 10f64.powi(-(k as i32)),
        DivergenceMode::Decades => 10f64.powi(k as i32),
    }
}

fn base_point(f: &PotentialField, policy: ExecPolicy) -> Result<Point> {
    match f.role() {
        Role::GraphF => graph_base_point(f),
        _ => locate_base_point(f, None, policy),
    }
}

/// Lengths along the ray from the base point of `f` in direction `y`.
/// Bounded domains use [`DivergenceMode::TowardBoundary`], unbounded charts
/// [`DivergenceMode::Decades`]. Lengths are sums over consecutive segments.
pub fn ray_lengths(f: &PotentialField, y: &[f64], k_max: usize, policy: ExecPolicy) -> Result<RayLengths> {
    let n = f.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Config("ray direction must be nonzero".into()));
    }
    let p = base_point(f, policy)?;
    let (mode, dir) = match f.domain() {
        Some(d) => {
            let (lo, hi) = d.bounding_box();
            let diam: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
            let step: Vec<f64> = y.iter().map(|a| 2.0 * diam * a / norm).collect();
            let theta = d.cut_fraction(p.as_slice(), &step);
            (DivergenceMode::TowardBoundary, step.iter().map(|s| s * theta).collect::<Vec<f64>>())
        }
        None => (DivergenceMode::Decades, y.iter().map(|a| a / norm).collect()),
    };
    let z: Vec<f64> = (0..=k_max).map(|k| ray_parameter(mode, k)).collect();
    let mut lengths = Vec::with_capacity(z.len());
    let mut total = match mode {
        DivergenceMode::TowardBoundary => 0.0,
        DivergenceMode::Decades => segment_length(f, p.as_slice(), &dir, 0.0, z[0])?,
    };
    lengths.push(total);
    for w in z.windows(2) {
        total += segment_length(f, p.as_slice(), &dir, w[0], w[1])?;
        lengths.push(total);
    }
    Ok(RayLengths { mode, base: to_vec(&p), direction: dir, z, lengths })
}

/// Ray lengths with strict increase and a lower bound on the increments
/// for `k >= 2` as criteria.
pub fn divergence_study(
    f: &PotentialField,
    y: &[f64],
    k_max: usize,
    min_increment: f64,
    policy: ExecPolicy,
) -> Result<StudyReport> {
    let r = ray_lengths(f, y, k_max, policy)?;
    let inc = r.increments();
    let mut report = StudyReport::new("divergence");
    report
        .param("field", f.label())
        .param("direction", y)
        .param("k_max", k_max)
        .param("min_increment", min_increment)
        .param("mode", r.mode);
    for (k, (z, l)) in r.z.iter().zip(&r.lengths).enumerate() {
        let d = if k == 0 { f64::NAN } else { inc[k - 1] };
        report.row(&[("k", num(k as f64)), ("z", num(*z)), ("length", num(*l)), ("increment", num(d))]);
    }
    let increasing = inc.iter().all(|d| *d > 0.0);
    let tail: Vec<f64> = inc.iter().skip(1).copied().collect();
    let bounded_below = tail.iter().all(|d| *d >= min_increment);
    report
        .measure("lengths", &r.lengths)
        .measure("min_increment_k_ge_2", tail.iter().copied().fold(f64::INFINITY, f64::min))
        .check("strictly_increasing", increasing)
        .check("increments_bounded_below", bounded_below);
    if let Some(last) = inc.last() {
        report.fit("increment_per_decade", *last);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperboloid_decades_follow_arcsinh() {
        let f = PotentialField::hyperboloid(1).unwrap();
        let r = ray_lengths(&f, &[1.0], 4, ExecPolicy::Sequential).unwrap();
        for (z, l) in r.z.iter().zip(&r.lengths) {
            assert!((l - z.asinh()).abs() < 1e-6, "{z} {l}");
        }
        let inc = r.increments();
        assert!((inc[3] - 10f64.ln()).abs() < 0.1 * 10f64.ln());
    }

    #[test]
    fn ball_toward_boundary() {
        let u = PotentialField::ball(2).unwrap();
        let r = ray_lengths(&u, &[1.0, 1.0], 5, ExecPolicy::Sequential).unwrap();
        assert_eq!(r.lengths[0], 0.0);
        for (z, l) in r.z.iter().zip(&r.lengths) {
            assert!((l - z.atanh()).abs() < 1e-7, "{z} {l}");
        }
        let s = divergence_study(&u, &[1.0, 1.0], 5, 0.5, ExecPolicy::Sequential).unwrap();
        assert!(s.passed());
    }
}
