use serde::{Deserialize, Serialize};

use crate::domain::{Jet, PotentialField, Role};
use crate::error::{Error, Result};
use crate::exec::{try_map_slice, ExecPolicy};
use crate::linalg::{max_abs, Matrix, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// `-u_ij / u`.
    Centroaffine,
    /// `det(u)^{-1/(n+2)} u_ij / u^2`.
    AffineRadial,
    /// `det(u)^{1/(n+2)} u_ij`.
    Calabi,
    /// `det(f)^{-1/(n+2)} f_ij` for a graph function.
    AffineGraph,
}

impl MetricKind {
    pub const POTENTIAL_KINDS: [MetricKind; 3] =
        [MetricKind::Centroaffine, MetricKind::AffineRadial, MetricKind::Calabi];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Centroaffine => "centroaffine",
            MetricKind::AffineRadial => "affine_radial",
            MetricKind::Calabi => "calabi",
            MetricKind::AffineGraph => "affine_graph",
        }
    }

    pub fn source_role(self) -> Role {
        match self {
            MetricKind::AffineGraph => Role::GraphF,
            _ => Role::PotentialU,
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroaffine" => Ok(MetricKind::Centroaffine),
            "affine_radial" => Ok(MetricKind::AffineRadial),
            "calabi" => Ok(MetricKind::Calabi),
            "affine_graph" => Ok(MetricKind::AffineGraph),
            other => Err(Error::Config(format!("unknown metric kind '{other}'"))),
        }
    }
}

/// Metric samples of one kind.
#[derive(Debug, Clone)]
pub struct MetricField {
    pub kind: MetricKind,
    pub samples: Vec<(Point, Matrix)>,
}

/// `log det` of a Hessian, failing unless the determinant is positive.
pub(crate) fn log_det(jet: &Jet, t: &[f64]) -> Result<f64> {
    let det = jet.hessian.determinant();
    if !(det > 0.0) || !det.is_finite() {
        let min = crate::linalg::sym_eigenvalues(&jet.hessian).first().copied().unwrap_or(f64::NAN);
        return Err(Error::NotConvex { point: t.to_vec(), min_eigenvalue: min });
    }
    Ok(det.ln())
}

pub(crate) fn require_negative(jet: &Jet, t: &[f64]) -> Result<()> {
    if jet.value < 0.0 {
        Ok(())
    } else {
        Err(Error::NotNegative { point: t.to_vec(), value: jet.value })
    }
}

/// Metric of `kind` from a jet of its source field.
pub fn metric_from_jet(kind: MetricKind, jet: &Jet, t: &[f64]) -> Result<Matrix> {
    let n = t.len() as f64;
    let h = &jet.hessian;
    let sym = 0.5 * (h + h.transpose());
    match kind {
        MetricKind::Centroaffine => {
            require_negative(jet, t)?;
            Ok(sym * (-1.0 / jet.value))
        }
        MetricKind::AffineRadial => {
            require_negative(jet, t)?;
            let scale = (-log_det(jet, t)? / (n + 2.0)).exp();
            Ok(sym * (scale / (jet.value * jet.value)))
        }
        MetricKind::Calabi => {
            require_negative(jet, t)?;
            Ok(sym * (log_det(jet, t)? / (n + 2.0)).exp())
        }
        MetricKind::AffineGraph => Ok(sym * (-log_det(jet, t)? / (n + 2.0)).exp()),
    }
}

pub fn metric_at(kind: MetricKind, source: &PotentialField, t: &[f64]) -> Result<Matrix> {
    source.require_role(kind.source_role())?;
    metric_from_jet(kind, &source.jet(t)?, t)
}

pub fn metric_field(
    kind: MetricKind,
    source: &PotentialField,
    points: &[Point],
    policy: ExecPolicy,
) -> Result<MetricField> {
    source.require_role(kind.source_role())?;
    let samples = try_map_slice(policy, points, |p| Ok((p.clone(), metric_at(kind, source, p.as_slice())?)))?;
    Ok(MetricField { kind, samples })
}

/// Log residual of the affine-sphere equation. For a potential `u`:
/// `log det u_ij + (n+2) log(-u)`. For a graph function `f` with Legendre
/// value `v = x.grad f - f < 0`: `log det f_ij - (n+2) log(-v)`.
pub fn residual_from_jet(role: Role, jet: &Jet, t: &[f64]) -> Result<f64> {
    let n = t.len() as f64;
    match role {
        Role::PotentialU => {
            require_negative(jet, t)?;
            Ok(log_det(jet, t)? + (n + 2.0) * (-jet.value).ln())
        }
        Role::GraphF => {
            let v = legendre_value(jet, t);
            if !(v < 0.0) {
                return Err(Error::Tangency { point: t.to_vec(), legendre: v });
            }
            Ok(log_det(jet, t)? - (n + 2.0) * (-v).ln())
        }
        Role::Scalar => Err(Error::RoleMismatch { expected: "potential_u or graph_f", found: "scalar" }),
    }
}

/// `x . grad f - f`.
pub(crate) fn legendre_value(jet: &Jet, x: &[f64]) -> f64 {
    x.iter().zip(jet.gradient.iter()).map(|(a, b)| a * b).sum::<f64>() - jet.value
}

pub fn affine_sphere_residual(u: &PotentialField, t: &[f64]) -> Result<f64> {
    residual_from_jet(u.role(), &u.jet(t)?, t)
}

/// `d = det(u_ij)^{-1/(n+2)} (-1/u) - 1 = expm1(-R/(n+2))`; the affine
/// conormal is `(1 + d)` times the centroaffine one.
pub fn coincidence_defect(u: &PotentialField, t: &[f64]) -> Result<f64> {
    let r = affine_sphere_residual(u, t)?;
    Ok((-r / (t.len() as f64 + 2.0)).exp_m1())
}

/// The three potential metrics at a point and how far apart they are.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoincidenceSample {
    pub defect: f64,
    /// Largest entrywise difference over the three pairs.
    pub max_pairwise: f64,
    /// `|d (2 + d) / (1 + d)| * max|centroaffine|`, the exact value of
    /// `max_pairwise` implied by the scalings.
    pub predicted: f64,
    pub centroaffine_norm: f64,
}

pub fn coincidence_sample(u: &PotentialField, t: &[f64]) -> Result<CoincidenceSample> {
    u.require_role(Role::PotentialU)?;
    let jet = u.jet(t)?;
    let m: Vec<Matrix> =
        MetricKind::POTENTIAL_KINDS.iter().map(|k| metric_from_jet(*k, &jet, t)).collect::<Result<_>>()?;
    let max_pairwise = max_abs(&(&m[0] - &m[1])).max(max_abs(&(&m[0] - &m[2]))).max(max_abs(&(&m[1] - &m[2])));
    let d = (-residual_from_jet(Role::PotentialU, &jet, t)? / (t.len() as f64 + 2.0)).exp_m1();
    let cn = max_abs(&m[0]);
    Ok(CoincidenceSample {
        defect: d,
        max_pairwise,
        predicted: (d * (2.0 + d) / (1.0 + d)).abs() * cn,
        centroaffine_norm: cn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ConvexDomain;
    use nalgebra::DMatrix;

    fn quad() -> PotentialField {
        PotentialField::quadratic(2, -1.0, 0.25, Role::PotentialU, Some(ConvexDomain::unit_disk())).unwrap()
    }

    #[test]
    fn metric_examples() {
        let c = metric_at(MetricKind::Centroaffine, &quad(), &[0.0, 0.0]).unwrap();
        assert!((c - DMatrix::identity(2, 2) * 0.5).abs().max() < 1e-15);
        let a = metric_at(MetricKind::AffineRadial, &PotentialField::ball(2).unwrap(), &[0.0, 0.0]).unwrap();
        assert!((a - DMatrix::identity(2, 2)).abs().max() < 1e-15);
        // u_ij = I at the origin for u = -1 + |t|^2/2
        let u = PotentialField::quadratic(2, -1.0, 0.5, Role::PotentialU, Some(ConvexDomain::unit_disk())).unwrap();
        let k = metric_at(MetricKind::Calabi, &u, &[0.0, 0.0]).unwrap();
        assert!((k - DMatrix::identity(2, 2)).abs().max() < 1e-15);
    }

    #[test]
    fn residual_and_defect_examples() {
        let u = PotentialField::ball(2).unwrap();
        for t in [[0.0, 0.0], [0.5, -0.3], [0.1, 0.9]] {
            assert!(affine_sphere_residual(&u, &t).unwrap().abs() < 1e-12);
            assert!(coincidence_defect(&u, &t).unwrap().abs() < 1e-12);
        }
        let r = affine_sphere_residual(&quad(), &[0.0, 0.0]).unwrap();
        assert!((r - 0.25_f64.ln()).abs() < 1e-15);
        let d = coincidence_defect(&quad(), &[0.0, 0.0]).unwrap();
        assert!((d - (2.0_f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn graph_residual_of_hyperboloid_vanishes() {
        let f = PotentialField::hyperboloid(2).unwrap();
        for x in [[0.0, 0.0], [1.0, 0.0], [-3.0, 2.5]] {
            assert!(affine_sphere_residual(&f, &x).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn pairwise_deviation_matches_scalings() {
        let s = coincidence_sample(&quad(), &[0.3, -0.2]).unwrap();
        assert!((s.max_pairwise - s.predicted).abs() <= 1e-12 * s.predicted);
    }

    #[test]
    fn sign_and_role_errors() {
        let pos = PotentialField::quadratic(2, 1.0, 0.25, Role::PotentialU, Some(ConvexDomain::unit_disk())).unwrap();
        assert!(matches!(metric_at(MetricKind::Centroaffine, &pos, &[0.0, 0.0]), Err(Error::NotNegative { .. })));
        let flat = PotentialField::quadratic(2, -1.0, 0.0, Role::PotentialU, Some(ConvexDomain::unit_disk())).unwrap();
        assert!(matches!(metric_at(MetricKind::Calabi, &flat, &[0.0, 0.0]), Err(Error::NotConvex { .. })));
        let f = PotentialField::hyperboloid(2).unwrap();
        assert!(matches!(metric_at(MetricKind::Calabi, &f, &[0.0, 0.0]), Err(Error::RoleMismatch { .. })));
    }
}
