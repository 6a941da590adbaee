//! Verification studies: the gradient estimate on sublevel sets, geodesic
//! divergence toward the boundary, grid convergence, equivariance under
//! projective maps, and the named suites behind `verify`.

mod convergence;
mod divergence;
mod equivariance;
mod gradient;
mod report;
mod suites;

pub use convergence::{convergence_order, estimate_order, ConvergenceProblem, OrderEstimate, INTERIOR_RADIUS};
pub use divergence::{divergence_study, ray_lengths, ray_parameter, DivergenceMode, RayLengths};
pub use equivariance::{equivariance_suite, law_deviation, random_maps, solver_equivariance, LawDeviation};
pub use gradient::{
    gradient_estimate_scan, gradient_ratio, gradient_ratio_direct, gradient_sample, graph_base_point, scan_q,
    sublevel_grid, GradEstimateSample, GradientScan, REFINEMENT_TOL,
};
pub use report::{num, to_value, StudyReport};
pub use suites::{dense_scan_oracle, gap_test_potentials, run_suite, SuiteOptions, SUITES};
