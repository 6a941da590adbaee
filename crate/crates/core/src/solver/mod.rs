//! Dirichlet solver for `det D^2 u = (-1/u)^{n+2}` with `u = 0` on the
//! boundary, and the perturbation factor relating a given potential to the
//! solution.

mod newton;
mod perturb;
pub mod sparse;
pub mod stencil;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use newton::{newton, DampingEvent, Discretization, Evaluation, NewtonParams, NewtonTrace};
pub use perturb::{perturbation_factor, FactorSummary, Product, Ratio};

use crate::domain::{ConvexDomain, GridPotential, GridSpec, PotentialField, Role};
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::linalg::{sym_eigenvalues, Point};
use crate::output::{coord_names, csv_table};

/// Smallest grid accepted by the solver, per axis.
pub const MIN_NODES: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// `u0 = -sqrt(psi)` with `Delta psi = -2n`, `psi = 0` on the boundary.
    Poisson,
    /// `u0 = -0.1 sqrt(rho)` with `rho` the boundary measure.
    Surrogate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Grid nodes per axis across the bounding box.
    pub nodes: usize,
    /// Max-norm tolerance on the log residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Relative residual required of each linear solve.
    pub linear_rtol: f64,
    /// Boundary-measure threshold of the band where the Hessian is formed
    /// from `u^2`.
    pub band: f64,
    pub init: InitialGuess,
    #[serde(skip)]
    pub policy: ExecPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            nodes: 129,
            tolerance: 1e-9,
            max_iterations: 50,
            max_halvings: 30,
            linear_rtol: 1e-10,
            band: 0.3,
            init: InitialGuess::Poisson,
            policy: ExecPolicy::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_nodes(nodes: usize) -> Self {
        SolverConfig { nodes, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.tolerance) || !positive(self.linear_rtol) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.nodes < MIN_NODES {
            return Err(Error::Config(format!("need at least {MIN_NODES} nodes per axis, got {}", self.nodes)));
        }
        if !(0.0..=1.0).contains(&self.band) {
            return Err(Error::Config(format!("band must lie in [0, 1], got {}", self.band)));
        }
        Ok(())
    }

    fn params(&self) -> NewtonParams {
        NewtonParams {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            max_halvings: self.max_halvings,
            linear_rtol: self.linear_rtol,
            policy: self.policy,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverReport {
    pub converged: bool,
    /// Accepted Newton steps over all stages.
    pub iterations: usize,
    /// Max-norm residual before the first step and after each accepted step.
    pub residual_history: Vec<f64>,
    pub damping_events: Vec<DampingEvent>,
    /// Exponent scales `s` solved in turn; `[1.0]` unless continuation ran.
    pub continuation: Vec<f64>,
    pub initial_guess: InitialGuess,
    pub final_residual: f64,
    /// Max node error against a reference solution, when one was supplied.
    pub interior_error: Option<f64>,
    pub min_hessian_eigenvalue: f64,
    pub max_u: f64,
    pub negative: bool,
    pub convex: bool,
    pub interior_nodes: usize,
    pub grid_shape: Vec<usize>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SolverReport {
    /// Max of `|u - exact|` over solution nodes accepted by `region`; also
    /// stored in `interior_error`.
    pub fn measure_error(
        &mut self,
        solution: &GridPotential,
        exact: impl Fn(&Point) -> f64,
        region: impl Fn(&Point) -> bool,
    ) -> f64 {
        let err = max_node_error(solution, exact, region);
        self.interior_error = Some(err);
        err
    }
}

pub fn max_node_error(solution: &GridPotential, exact: impl Fn(&Point) -> f64, region: impl Fn(&Point) -> bool) -> f64 {
    let grid = solution.grid();
    (0..grid.interior_count())
        .map(|k| (k, grid.interior_coord(k)))
        .filter(|(_, t)| region(t))
        .map(|(k, t)| (solution.values()[k] - exact(&t)).abs())
        .fold(0.0, f64::max)
}

fn axis_laplacian(grid: &GridSpec) -> sparse::Coo {
    let h = grid.spacing();
    let mut coo = sparse::Coo::new(grid.interior_count());
    for k in 0..grid.interior_count() {
        for a in 0..grid.dim() {
            let [fw, bw] = grid.stencil(k).arms[a];
            let (tp, tm) = (fw.theta, bw.theta);
            let w = 2.0 / ((tp + tm) * h[a] * h[a]);
            coo.push(k, k, -w * (1.0 / tp + 1.0 / tm));
            if let Some(j) = fw.neighbor {
                coo.push(k, j, w / tp);
            }
            if let Some(j) = bw.neighbor {
                coo.push(k, j, w / tm);
            }
        }
    }
    coo
}

fn poisson_values(grid: &GridSpec, rtol: f64) -> Result<Vec<f64>> {
    let lap = axis_laplacian(grid);
    let rhs = vec![-2.0 * grid.dim() as f64; grid.interior_count()];
    let psi = sparse::solve(&lap, &rhs, rtol)?;
    if let Some(k) = psi.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::InitialGuess(format!("Poisson solution not positive at node {k}")));
    }
    Ok(psi.iter().map(|p| -p.sqrt()).collect())
}

fn surrogate_values(grid: &GridSpec) -> Vec<f64> {
    (0..grid.interior_count()).map(|k| -0.1 * grid.measure(k).sqrt()).collect()
}

/// Initial guess `u0 = -sqrt(psi)` from the cut-cell Poisson problem
/// `Delta psi = -2n`, `psi = 0` on the boundary.
pub fn poisson_init(domain: &ConvexDomain, grid: &GridSpec) -> Result<PotentialField> {
    if grid.domain() != domain {
        return Err(Error::InvalidGrid("grid was built for a different domain".into()));
    }
    let values = poisson_values(grid, SolverConfig::default().linear_rtol)?;
    Ok(PotentialField::grid(GridPotential::new(grid.clone(), values, Role::PotentialU, true)?))
}

/// Solves the affine-sphere Dirichlet problem on `grid` (built over
/// `domain`). `config.nodes` is ignored in favor of the grid's own shape.
pub fn solve_affine_sphere(
    domain: &ConvexDomain,
    grid: &GridSpec,
    config: &SolverConfig,
) -> Result<(PotentialField, SolverReport)> {
    domain.validate()?;
    if grid.domain() != domain {
        return Err(Error::InvalidGrid("grid was built for a different domain".into()));
    }
    let mut cfg = config.clone();
    cfg.nodes = grid.shape().iter().copied().min().unwrap_or(0);
    cfg.validate()?;
    let start = Instant::now();
    let disc = Discretization::new(grid, cfg.band);
    let params = cfg.params();

    // candidates in order of preference; a non-admissible guess falls through
    let mut candidates = Vec::new();
    match cfg.init {
        InitialGuess::Poisson => {
            match poisson_values(grid, cfg.linear_rtol) {
                Ok(v) => candidates.push((InitialGuess::Poisson, v)),
                Err(Error::InitialGuess(_)) => {}
                Err(e) => return Err(e),
            }
            candidates.push((InitialGuess::Surrogate, surrogate_values(grid)));
        }
        InitialGuess::Surrogate => candidates.push((InitialGuess::Surrogate, surrogate_values(grid))),
    }
    let (init_kind, u0) = candidates
        .into_iter()
        .find(|(_, v)| disc.evaluate(v, 1.0, cfg.policy).admissible)
        .ok_or_else(|| Error::InitialGuess("no candidate is negative with convex discrete Hessian".into()))?;

    let mut trace = NewtonTrace::default();
    let mut stages = vec![1.0];
    let u = match newton(&disc, u0.clone(), 1.0, &params, &mut trace) {
        Ok(u) => u,
        Err(Error::DampingExhausted { .. } | Error::IterationLimit { .. }) => {
            stages = vec![0.5, 0.75, 1.0];
            let mut u = u0;
            for &s in &stages {
                if disc.evaluate(&u, s, cfg.policy).admissible {
                    u = newton(&disc, u, s, &params, &mut trace)?;
                } else {
                    return Err(Error::InitialGuess(format!("continuation stage {s} starts outside the cone")));
                }
            }
            u
        }
        Err(e) => return Err(e),
    };

    let eval = disc.evaluate(&u, 1.0, cfg.policy);
    let min_eig = eval.hessians.iter().map(|h| sym_eigenvalues(h)[0]).fold(f64::INFINITY, f64::min);
    let max_u = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let report = SolverReport {
        converged: eval.max_abs <= cfg.tolerance,
        iterations: trace.iterations,
        residual_history: trace.residuals,
        damping_events: trace.damping,
        continuation: stages,
        initial_guess: init_kind,
        final_residual: eval.max_abs,
        interior_error: None,
        min_hessian_eigenvalue: min_eig,
        max_u,
        negative: max_u < 0.0,
        convex: eval.admissible,
        interior_nodes: grid.interior_count(),
        grid_shape: grid.shape().to_vec(),
        elapsed: start.elapsed(),
    };
    let field = GridPotential::new(grid.clone(), u, Role::PotentialU, true)?.with_node_hessians(eval.hessians)?;
    Ok((PotentialField::grid(field), report))
}

/// Builds the grid from `config.nodes` and solves.
pub fn solve_on(domain: &ConvexDomain, config: &SolverConfig) -> Result<(PotentialField, SolverReport)> {
    config.validate()?;
    let grid = GridSpec::new(domain, config.nodes)?;
    solve_affine_sphere(domain, &grid, config)
}

/// CSV dump `t1[,t2],u` of a grid solution.
pub fn solution_csv(solution: &GridPotential) -> Result<String> {
    let grid = solution.grid();
    let mut header = coord_names("t", grid.dim());
    header.push("u".into());
    let rows: Vec<Vec<f64>> = (0..grid.interior_count())
        .map(|k| {
            let mut r: Vec<f64> = grid.interior_coord(k).iter().copied().collect();
            r.push(solution.values()[k]);
            r
        })
        .collect();
    csv_table(&header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_init_is_exact_on_interval_and_disk() {
        for d in [ConvexDomain::unit_interval(), ConvexDomain::unit_disk()] {
            let g = GridSpec::new(&d, 17).unwrap();
            let u0 = poisson_init(&d, &g).unwrap();
            let gp = u0.as_grid().unwrap();
            let err = max_node_error(gp, |t| -(1.0 - t.norm_squared()).sqrt(), |_| true);
            assert!(err < 1e-12, "{err}");
        }
    }

    #[test]
    fn poisson_init_on_square_is_negative() {
        let d = ConvexDomain::square(1.0);
        let g = GridSpec::new(&d, 17).unwrap();
        let u0 = poisson_init(&d, &g).unwrap();
        assert!(u0.as_grid().unwrap().values().iter().all(|v| *v < 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::with_nodes(9).validate().is_err());
        let bad = SolverConfig { tolerance: 0.0, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }

    #[test]
    fn small_disk_solve_converges() {
        let d = ConvexDomain::unit_disk();
        let (u, rep) = solve_on(&d, &SolverConfig::with_nodes(17)).unwrap();
        assert!(rep.converged && rep.negative && rep.convex);
        assert!(rep.final_residual <= 1e-9);
        for w in rep.residual_history.windows(2) {
            assert!(w[1] < w[0]);
        }
        let err = max_node_error(u.as_grid().unwrap(), |t| -(1.0 - t.norm_squared()).sqrt(), |t| t.norm() <= 0.85);
        assert!(err < 2e-2, "{err}");
    }
}
