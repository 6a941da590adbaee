use serde::{Deserialize, Serialize};

use super::report::{num, StudyReport};
use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::solver::{max_node_error, solve_on, SolverConfig};

/// Reference problems with the exact solution `-sqrt(1 - |t|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceProblem {
    Disk,
    Interval,
}

impl ConvergenceProblem {
    pub fn domain(self) -> ConvexDomain {
        match self {
            ConvergenceProblem::Disk => ConvexDomain::unit_disk(),
            ConvergenceProblem::Interval => ConvexDomain::unit_interval(),
        }
    }

    pub fn default_levels(self) -> Vec<usize> {
        match self {
            ConvergenceProblem::Disk => vec![33, 65, 129],
            ConvergenceProblem::Interval => vec![65, 129, 257],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConvergenceProblem::Disk => "disk",
            ConvergenceProblem::Interval => "interval",
        }
    }
}

impl std::str::FromStr for ConvergenceProblem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disk" => Ok(ConvergenceProblem::Disk),
            "interval" => Ok(ConvergenceProblem::Interval),
            other => Err(Error::Config(format!("unknown convergence problem '{other}'"))),
        }
    }
}

/// Interior region where errors are measured.
pub const INTERIOR_RADIUS: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    /// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` for consecutive levels.
    pub pairwise: Vec<f64>,
    /// Smallest pairwise order; `None` when every error is zero.
    pub order: Option<f64>,
    pub exact: bool,
    pub monotone: bool,
}

pub fn estimate_order(spacings: &[f64], errors: &[f64]) -> OrderEstimate {
    if errors.iter().all(|e| *e == 0.0) {
        return OrderEstimate { pairwise: Vec::new(), order: None, exact: true, monotone: true };
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let pairwise: Vec<f64> =
        errors.windows(2).zip(spacings.windows(2)).map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln()).collect();
    let order = pairwise.iter().copied().fold(f64::INFINITY, f64::min);
    OrderEstimate { pairwise, order: Some(order), exact: false, monotone }
}

/// Solves `problem` on every level and estimates the order of the node
/// error on `|t| <= 0.85`.
pub fn convergence_order(
    problem: ConvergenceProblem,
    levels: &[usize],
    base: &SolverConfig,
    min_order: f64,
) -> Result<StudyReport> {
    if levels.len() < 3 {
        return Err(Error::Study("at least three grid levels are needed".into()));
    }
    let domain = problem.domain();
    let mut report = StudyReport::new("convergence_order");
    report.param("problem", problem).param("levels", levels).param("min_order", min_order);
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    for &m in levels {
        let mut cfg = base.clone();
        cfg.nodes = m;
        let (u, rep) = solve_on(&domain, &cfg)?;
        let g = u.as_grid().ok_or_else(|| Error::Study("solver returned an analytic field".into()))?;
        let err = max_node_error(g, |t| -(1.0 - t.norm_squared()).max(0.0).sqrt(), |t| t.norm() <= INTERIOR_RADIUS);
        let h = g.grid().max_spacing();
        report.row(&[
            ("nodes", num(m as f64)),
            ("spacing", num(h)),
            ("error", num(err)),
            ("iterations", num(rep.iterations as f64)),
            ("final_residual", num(rep.final_residual)),
        ]);
        spacings.push(h);
        errors.push(err);
    }
    let est = estimate_order(&spacings, &errors);
    report.measure("pairwise_orders", &est.pairwise).measure("monotone", est.monotone);
    match est.order {
        Some(p) => {
            report
                .measure("order", p)
                .fit("error_constant", errors[errors.len() - 1] / spacings[spacings.len() - 1].powf(p));
        }
        None => {
            report.measure("order", "exact");
        }
    }
    report.check("monotone", est.monotone).check("order", est.exact || est.order.is_some_and(|p| p >= min_order));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_of_synthetic_sequences() {
        let h = [0.1, 0.05, 0.025];
        let e = estimate_order(&h, &[1e-2, 2.5e-3, 6.25e-4]);
        assert!(e.pairwise.iter().all(|p| (p - 2.0).abs() < 1e-12) && e.monotone);
        let z = estimate_order(&h, &[0.0, 0.0, 0.0]);
        assert!(z.exact && z.order.is_none());
        assert!(!estimate_order(&h, &[1e-3, 2e-3, 1e-4]).monotone);
    }
}
