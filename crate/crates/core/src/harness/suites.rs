//! Named verification suites. Each returns reports whose criteria decide
//! the exit status of `verify`.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::convergence::{convergence_order, ConvergenceProblem, INTERIOR_RADIUS};
use super::divergence::{divergence_study, ray_lengths};
use super::equivariance::{equivariance_suite, random_maps, solver_equivariance};
use super::gradient::{gradient_estimate_scan, gradient_ratio, gradient_ratio_direct, scan_q};
use super::report::{num, StudyReport};
use crate::domain::{
    normalize_map, transform_potential, ConvexDomain, GridPotential, PotentialField, ProjectiveMap, Role,
};
use crate::error::{Error, Result};
use crate::exec::{try_map_slice, ExecPolicy};
use crate::invariants::{
    centroaffine_dual, coincidence_sample, conormals_at, dual_conormal_pair, dual_points, fubini_pick_at,
    residual_from_jet,
};
use crate::legendre::{
    duality_gaps, gradient_identity_defect, grid_identity_defect, involution_error, legendre_transform,
};
use crate::linalg::{point, Point};
use crate::solver::{max_node_error, perturbation_factor, solve_on, Product, SolverConfig};

pub const SUITES: [&str; 11] = [
    "ball-golden",
    "convergence",
    "coincidence",
    "legendre",
    "fubini-pick",
    "conormals",
    "equivariance",
    "gradient-estimate",
    "divergence",
    "perturbation",
    "duality",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteOptions {
    /// Smaller grids and sample counts.
    pub quick: bool,
    pub seed: u64,
    /// Levels for the gradient estimate.
    pub levels: Vec<f64>,
    #[serde(skip)]
    pub policy: ExecPolicy,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { quick: false, seed: 42, levels: vec![2.0, 4.0, 8.0], policy: ExecPolicy::Parallel }
    }
}

impl SuiteOptions {
    fn pick<T>(&self, full: T, quick: T) -> T {
        if self.quick {
            quick
        } else {
            full
        }
    }

    fn solver(&self, nodes: usize) -> SolverConfig {
        SolverConfig { nodes, policy: self.policy, ..SolverConfig::default() }
    }
}

/// Runs one suite, or every suite for `"all"`.
pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<Vec<StudyReport>> {
    if name == "all" {
        let mut out = Vec::new();
        for s in SUITES {
            out.extend(run_suite(s, opts)?);
        }
        return Ok(out);
    }
    let report = match name {
        "ball-golden" => ball_golden(opts)?,
        "convergence" => return convergence(opts),
        "coincidence" => coincidence(opts)?,
        "legendre" => legendre(opts)?,
        "fubini-pick" => fubini_pick(opts)?,
        "conormals" => conormals(opts)?,
        "equivariance" => equivariance(opts)?,
        "gradient-estimate" => gradient_estimate(opts)?,
        "divergence" => divergence(opts)?,
        "perturbation" => perturbation(opts)?,
        "duality" => duality(opts)?,
        other => return Err(Error::Config(format!("unknown suite '{other}', expected one of {SUITES:?} or all"))),
    };
    Ok(vec![report])
}

fn exact_ball(t: &Point) -> f64 {
    -(1.0 - t.norm_squared()).max(0.0).sqrt()
}

fn in_region(t: &Point) -> bool {
    t.norm() <= INTERIOR_RADIUS
}

fn points_in_disk(rng: &mut ChaCha8Rng, count: usize, radius: f64) -> Vec<Point> {
    let d = ConvexDomain::Disk { center: [0.0, 0.0], radius };
    d.sample_interior(rng, count, 0.0)
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

fn solved(domain: &ConvexDomain, cfg: &SolverConfig) -> Result<(PotentialField, crate::solver::SolverReport)> {
    solve_on(domain, cfg)
}

fn grid_of(u: &PotentialField) -> Result<&GridPotential> {
    u.as_grid().ok_or_else(|| Error::Study("grid solution expected".into()))
}

pub const MAX_ITERATIONS: usize = 25;
pub const GOLDEN_ERROR: f64 = 5e-3;
pub const GOLDEN_RESIDUAL: f64 = 1e-9;
pub const GOLDEN_SECONDS: f64 = 60.0;

fn ball_golden(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut r = StudyReport::new("ball_golden");
    let cases = [
        ("disk", ConvexDomain::unit_disk(), opts.pick(129, 65)),
        ("interval", ConvexDomain::unit_interval(), opts.pick(257, 129)),
    ];
    r.param("grids", cases.iter().map(|c| c.2).collect::<Vec<_>>());
    for (name, domain, nodes) in cases {
        let start = Instant::now();
        let (u, rep) = solved(&domain, &opts.solver(nodes))?;
        let secs = start.elapsed().as_secs_f64();
        let err = max_node_error(grid_of(&u)?, exact_ball, in_region);
        r.measure(&format!("{name}_error"), err)
            .measure(&format!("{name}_iterations"), rep.iterations as f64)
            .measure(&format!("{name}_final_residual"), rep.final_residual);
        r.row(&[
            ("nodes", num(nodes as f64)),
            ("iterations", num(rep.iterations as f64)),
            ("error", num(err)),
            ("final_residual", num(rep.final_residual)),
            ("damping_events", num(rep.damping_events.len() as f64)),
        ]);
        r.check(&format!("{name}_converged"), rep.converged && rep.iterations <= MAX_ITERATIONS)
            .check(&format!("{name}_error"), err <= GOLDEN_ERROR)
            .check(&format!("{name}_residual"), rep.final_residual <= GOLDEN_RESIDUAL)
            .check(&format!("{name}_runtime"), secs < GOLDEN_SECONDS);
    }
    Ok(r)
}

fn convergence(opts: &SuiteOptions) -> Result<Vec<StudyReport>> {
    [ConvergenceProblem::Disk, ConvergenceProblem::Interval]
        .into_iter()
        .map(|p| {
            let levels = if opts.quick {
                p.default_levels().iter().map(|m| m.div_ceil(2)).collect()
            } else {
                p.default_levels()
            };
            convergence_order(p, &levels, &opts.solver(0), 1.5)
        })
        .collect()
}

/// Coincidence defect at node `k` from the difference-stencil Hessian.
fn fd_defect(g: &GridPotential, k: usize) -> Result<f64> {
    let mut jet = g.node_jet(k)?;
    jet.hessian = g.fd_hessian(k)?;
    let t = g.grid().interior_coord(k);
    let r = residual_from_jet(Role::PotentialU, &jet, t.as_slice())?;
    Ok((-r / (t.len() as f64 + 2.0)).exp_m1())
}

fn coincidence(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut r = StudyReport::new("coincidence");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let count = opts.pick(1000, 200);
    let ball = PotentialField::ball(2)?;
    let pts = ConvexDomain::unit_disk().sample_interior(&mut rng, count, 0.02);
    let samples = try_map_slice(opts.policy, &pts, |t| coincidence_sample(&ball, t.as_slice()))?;
    let analytic = max_of(samples.iter().map(|s| s.max_pairwise));
    // entries grow like (1 - r^2)^{-2}, so rounding is measured against their size
    let analytic_rel = max_of(samples.iter().map(|s| s.max_pairwise / s.centroaffine_norm.max(1.0)));
    let nodes = opts.pick(129, 65);
    let (u, _) = solved(&ConvexDomain::unit_disk(), &opts.solver(nodes))?;
    let g = grid_of(&u)?;
    let inner: Vec<usize> =
        (0..g.grid().interior_count()).filter(|&k| in_region(&g.grid().interior_coord(k))).collect();
    let stored = max_of(
        inner
            .iter()
            .map(|&k| coincidence_sample(&u, g.grid().interior_coord(k).as_slice()).map(|s| s.defect.abs()))
            .collect::<Result<Vec<_>>>()?,
    );
    let fd = max_of(inner.iter().map(|&k| fd_defect(g, k).map(f64::abs)).collect::<Result<Vec<_>>>()?);
    // non-solution: the deviation matches |d(2+d)/(1+d)| max|C|
    let q = PotentialField::quadratic(2, -1.0, 0.25, Role::PotentialU, Some(ConvexDomain::unit_disk()))?;
    let rel = max_of(
        pts.iter()
            .take(50)
            .map(|t| {
                coincidence_sample(&q, t.as_slice())
                    .map(|s| (s.max_pairwise - s.predicted).abs() / s.predicted.max(1e-300))
            })
            .collect::<Result<Vec<_>>>()?,
    );
    r.param("samples", count).param("nodes", nodes).param("seed", opts.seed);
    r.measure("analytic_max_pairwise", analytic)
        .measure("analytic_max_pairwise_relative", analytic_rel)
        .measure("solved_max_defect", stored)
        .measure("solved_max_defect_fd_hessian", fd)
        .measure("non_solution_bound_relative_error", rel)
        .check("analytic_coincide", analytic_rel <= 1e-12)
        .check("solved_defect", stored <= 5e-3)
        .check("solved_defect_fd_hessian", fd <= 5e-3)
        .check("non_solution_bound", rel <= 1e-8);
    Ok(r)
}

/// Graph functions with their minimum at the origin, in graded-lex
/// coefficients `1, x1, x2, x1^2, x1 x2, x2^2, ...`.
pub fn gap_test_potentials() -> Result<Vec<PotentialField>> {
    let f = |c: &[f64]| PotentialField::polynomial(2, c, Role::GraphF, None);
    Ok(vec![
        PotentialField::quadratic(2, 0.0, 0.5, Role::GraphF, None)?,
        PotentialField::hyperboloid(2)?,
        f(&[0.0, 0.0, 0.0, 0.5, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.5, 0.0, 0.25])?,
        f(&[0.0, 0.0, 0.0, 0.8, 0.3, 0.5])?,
        f(&[0.0, 0.0, 0.0, 0.5, 0.3, 1.0, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 1.0 / 12.0])?,
    ])
}

fn legendre(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut r = StudyReport::new("legendre");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let per = opts.pick(2000, 200);
    let potentials = gap_test_potentials()?;
    let mut min_gap = f64::INFINITY;
    let mut involution: f64 = 0.0;
    let mut identity: f64 = 0.0;
    for f in &potentials {
        let pair = legendre_transform(f, opts.policy)?;
        // inside the gradient image of every test potential
        let pts = points_in_disk(&mut rng, per, 0.9);
        let gaps = duality_gaps(&pair, &pts, opts.policy)?;
        let m = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        min_gap = min_gap.min(m);
        let few: Vec<Point> = pts.iter().take(opts.pick(200, 40)).cloned().collect();
        let inv = involution_error(f, &few, opts.policy)?;
        let ids = try_map_slice(opts.policy, &few, |x| Ok(gradient_identity_defect(&pair, x.as_slice())?.amax()))?;
        let id = max_of(ids);
        involution = involution.max(inv);
        identity = identity.max(id);
        r.row(&[
            ("potential", serde_json::Value::from(f.label())),
            ("min_gap", num(m)),
            ("involution", num(inv)),
            ("identity_defect", num(id)),
        ]);
    }
    // grid pairs: hyperboloid sampled on the unit disk
    let hyp = PotentialField::hyperboloid(2)?;
    let levels: Vec<usize> = opts.pick(vec![33, 65, 129], vec![33, 65]);
    let mut grid_defects = Vec::new();
    for &m in &levels {
        let grid = crate::domain::GridSpec::new(&ConvexDomain::unit_disk(), m)?;
        let vals = try_map_slice(opts.policy, &grid.interior_coords(), |t| hyp.value(t.as_slice()))?;
        let f = PotentialField::grid(GridPotential::new(grid.clone(), vals, Role::GraphF, false)?);
        let pair = legendre_transform(&f, opts.policy)?;
        let d = grid_identity_defect(&pair, 0.2, opts.policy)?;
        r.row(&[("grid_nodes", num(m as f64)), ("spacing", num(grid.max_spacing())), ("grid_identity_defect", num(d))]);
        grid_defects.push((grid.max_spacing(), d));
    }
    let order =
        grid_defects.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).fold(f64::INFINITY, f64::min);
    let (h, d) = grid_defects[grid_defects.len() - 1];
    r.param("samples_per_potential", per).param("seed", opts.seed);
    r.measure("min_duality_gap", min_gap)
        .measure("max_involution_error", involution)
        .measure("max_identity_defect", identity)
        .measure("grid_identity_order", order)
        .fit("grid_identity_constant", d / (h * h))
        .check("duality_gap_nonnegative", min_gap >= -1e-12)
        .check("involution", involution <= 1e-10)
        .check("identity_analytic", identity <= 1e-10)
        .check("identity_grid_second_order", order >= 1.5);
    Ok(r)
}

fn fubini_pick(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut r = StudyReport::new("fubini_pick");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let count = opts.pick(100, 25);
    let para = PotentialField::quadratic(2, 0.0, 0.5, Role::GraphF, None)?;
    let hyp = PotentialField::hyperboloid(2)?;
    let pts = points_in_disk(&mut rng, count, 2.0);
    let ps = try_map_slice(opts.policy, &pts, |x| fubini_pick_at(&para, x.as_slice()))?;
    let hs = try_map_slice(opts.policy, &pts, |x| fubini_pick_at(&hyp, x.as_slice()))?;
    let pa = max_of(ps.iter().map(|s| s.a_norm()));
    let pb = max_of(ps.iter().map(|s| s.b.amax()));
    let ha = max_of(hs.iter().map(|s| s.a_norm()));
    let hb = max_of(hs.iter().map(|s| s.sphere_defect()));
    let quartic = &gap_test_potentials()?[4];
    let qs = try_map_slice(opts.policy, &pts, |x| fubini_pick_at(quartic, x.as_slice()))?;
    let sym = max_of(qs.iter().map(|s| s.symmetry_defect()));
    let qa = max_of(qs.iter().map(|s| s.a_norm()));
    r.param("samples", count).param("seed", opts.seed);
    r.measure("paraboloid_max_a", pa)
        .measure("paraboloid_max_b", pb)
        .measure("hyperboloid_max_a", ha)
        .measure("hyperboloid_max_b_plus_g", hb)
        .measure("non_sphere_max_a", qa)
        .measure("non_sphere_symmetry_defect", sym)
        .check("paraboloid_flat", pa <= 1e-8 && pb <= 1e-8)
        .check("hyperboloid_a", ha <= 1e-6)
        .check("hyperboloid_b", hb <= 1e-6)
        .check("cubic_form_symmetric", sym <= 1e-6);
    Ok(r)
}

fn conormals(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut r = StudyReport::new("conormals");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let count = opts.pick(1000, 200);
    let pts = points_in_disk(&mut rng, count, 3.0);
    let hyp = PotentialField::hyperboloid(2)?;
    let gaps = try_map_slice(opts.policy, &pts, |x| Ok(conormals_at(&hyp, x.as_slice())?.gap()))?;
    let sphere = max_of(gaps);
    let para = PotentialField::quadratic(2, 1.0, 0.5, Role::GraphF, None)?;
    let small: Vec<Point> = pts.iter().filter(|x| x.norm() < 1.2).cloned().collect();
    let pg = try_map_slice(opts.policy, &small, |x| Ok(conormals_at(&para, x.as_slice())?.gap()))?;
    let non = max_of(pg);
    let ball = PotentialField::ball(2)?;
    let inside: Vec<Point> = pts.iter().map(|x| x / 3.0).collect();
    let bg = max_of(try_map_slice(opts.policy, &inside, |t| Ok(conormals_at(&ball, t.as_slice())?.gap()))?);
    r.param("samples", count).param("seed", opts.seed);
    r.measure("hyperboloid_max_gap", sphere)
        .measure("ball_potential_max_gap", bg)
        .measure("non_sphere_max_gap", non)
        .check("sphere_conormals_agree", sphere <= 1e-10 && bg <= 1e-10)
        .check("non_sphere_conormals_differ", non > 0.0);
    Ok(r)
}

fn equivariance(opts: &SuiteOptions) -> Result<StudyReport> {
    let ball = PotentialField::ball(2)?;
    let maps = random_maps(2, 10, opts.seed, true)?;
    let mut r = equivariance_suite(&ball, &maps, opts.pick(50, 20), opts.seed, 1e-9, opts.policy)?;
    // n = 1, diag(sqrt 2, 1/sqrt 2)
    let s2 = std::f64::consts::SQRT_2;
    let map = normalize_map(&DMatrix::from_row_slice(2, 2, &[s2, 0.0, 0.0, 1.0 / s2]))?;
    let b1 = PotentialField::ball(1)?;
    let moved = transform_potential(&b1, &map)?;
    let mut worst: f64 = 0.0;
    for i in 1..40 {
        let t = point(&[-0.95 + 1.9 * i as f64 / 40.0]);
        let (tn, _) = map.apply(&t);
        let a = residual_from_jet(Role::PotentialU, &moved.jet(tn.as_slice())?, tn.as_slice())?;
        let b = residual_from_jet(Role::PotentialU, &b1.jet(t.as_slice())?, t.as_slice())?;
        worst = worst.max((a - b).abs());
    }
    let affine = ProjectiveMap::affine(&DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 0.8]), &[0.3, -0.1])?;
    let (dev, h) = solver_equivariance(&ConvexDomain::unit_disk(), &affine, &opts.solver(opts.pick(65, 33)))?;
    r.measure("one_dimensional_residual_deviation", worst)
        .measure("solver_deviation", dev)
        .measure("solver_spacing", h)
        .check("one_dimensional_projective", worst <= 1e-9)
        .check("solver_equivariance", dev <= h * h);
    Ok(r)
}

/// `sup Q` for the one-dimensional hyperboloid by a dense scan of the closed
/// form `Q = x (1+x^2)^{-1/2} (h - sqrt(1+x^2))^{1/2}`.
pub fn dense_scan_oracle(h: f64, points: usize) -> f64 {
    let xmax = (h * h - 1.0).sqrt();
    (0..=points)
        .map(|i| {
            let x = xmax * i as f64 / points as f64;
            let f = (1.0 + x * x).sqrt();
            x / f * (h - f).max(0.0).sqrt()
        })
        .fold(0.0, f64::max)
}

fn gradient_estimate(opts: &SuiteOptions) -> Result<StudyReport> {
    let hyp = PotentialField::hyperboloid(2)?;
    let grids = opts.pick(vec![129, 257], vec![65, 129]);
    let mut r = gradient_estimate_scan(&hyp, &opts.levels, &grids, opts.policy)?;
    let h1 = PotentialField::hyperboloid(1)?;
    let mut worst: f64 = 0.0;
    for &h in &opts.levels {
        let s = scan_q(&h1, h, opts.pick(257, 129), opts.policy)?;
        let oracle = dense_scan_oracle(h, 1_000_000);
        let rel = (s.sup_q - oracle).abs() / oracle;
        worst = worst.max(rel);
        r.row(&[("h", num(h)), ("n1_sup_q", num(s.sup_q)), ("n1_oracle", num(oracle))]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let pts = points_in_disk(&mut rng, opts.pick(500, 100), 3.0);
    let ident = max_of(try_map_slice(opts.policy, &pts, |x| {
        let (a, b) = (gradient_ratio(&hyp, x.as_slice())?, gradient_ratio_direct(&hyp, x.as_slice())?);
        Ok((a - b).abs())
    })?);
    r.measure("n1_max_relative_error", worst)
        .measure("ratio_identity_defect", ident)
        .check("n1_matches_oracle", worst <= 0.01)
        .check("ratio_identity", ident <= 1e-10);
    Ok(r)
}

fn divergence(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut r = StudyReport::new("divergence");
    let k_max = 5;
    let cases = [
        ("disk", ConvexDomain::unit_disk(), opts.pick(129, 65), vec![1.0, 0.3]),
        ("interval", ConvexDomain::unit_interval(), opts.pick(257, 129), vec![1.0]),
    ];
    for (name, domain, nodes, dir) in cases {
        let (u, _) = solved(&domain, &opts.solver(nodes))?;
        let s = divergence_study(&u, &dir, k_max, 0.5, opts.policy)?;
        for (k, ok) in &s.criteria {
            r.check(&format!("{name}_{k}"), *ok);
        }
        for row in &s.sweep {
            let mut row = row.clone();
            row.insert("case".into(), serde_json::Value::from(name));
            r.sweep.push(row);
        }
        r.measure(&format!("{name}_lengths"), s.measured.get("lengths").cloned().unwrap_or_default());
        r.measure(&format!("{name}_min_increment"), s.number("min_increment_k_ge_2").unwrap_or(f64::NAN));
    }
    let hyp = PotentialField::hyperboloid(1)?;
    let rays = ray_lengths(&hyp, &[1.0], 4, opts.policy)?;
    let err = max_of(rays.z.iter().zip(&rays.lengths).map(|(z, l)| (l - z.asinh()).abs()));
    let inc = rays.increments();
    let last = inc[inc.len() - 1];
    r.param("k_max", k_max).param("min_increment", 0.5);
    r.measure("hyperboloid_arcsinh_error", err)
        .measure("hyperboloid_last_increment", last)
        .check("hyperboloid_arcsinh", err <= 1e-6)
        .check("hyperboloid_increment_near_ln10", (last - 10f64.ln()).abs() <= 0.1 * 10f64.ln());
    Ok(r)
}

fn perturbation(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut r = StudyReport::new("perturbation");
    let disk = ConvexDomain::unit_disk();
    let given = PotentialField::quadratic(2, -1.0, 0.25, Role::PotentialU, Some(disk.clone()))?;
    let nodes = opts.pick(129, 65);
    let (ubar, rep) = solved(&disk, &opts.solver(nodes))?;
    let (phi, summary) = perturbation_factor(&given, &ubar, opts.policy)?;
    let prod = Product::new(&phi, &given)?;
    let grid = grid_of(&ubar)?.grid().clone();
    let res = try_map_slice(opts.policy, &grid.interior_coords(), |t| {
        Ok(residual_from_jet(Role::PotentialU, &prod.jet(t.as_slice())?, t.as_slice())?.abs())
    })?;
    let worst = max_of(res);
    r.param("nodes", nodes);
    r.measure("phi_min", summary.min)
        .measure("phi_max", summary.max)
        .measure("product_residual", worst)
        .measure("solver_residual", rep.final_residual)
        .check("phi_positive", summary.min > 0.0)
        .check("phi_bounded", summary.max.is_finite())
        .check("product_residual", worst <= rep.final_residual + 1e-6);
    Ok(r)
}

fn duality(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut r = StudyReport::new("duality");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let disk = ConvexDomain::unit_disk();
    let count = opts.pick(1000, 200);
    let mut worst_double: f64 = 0.0;
    let mut worst_conormal: f64 = 0.0;
    let fields = [
        PotentialField::ball(2)?,
        PotentialField::polynomial(2, &[-1.0, 0.1, 0.0, 0.3, 0.1, 0.5], Role::PotentialU, Some(disk.clone()))?,
    ];
    for u in &fields {
        let pts = disk.sample_interior(&mut rng, count, 0.05);
        let dual = centroaffine_dual(u, &pts, opts.policy)?;
        let spts = dual_points(u, &pts, opts.policy)?;
        let back = centroaffine_dual(&dual, &spts, opts.policy)?;
        let check: Vec<Point> = pts.iter().take(opts.pick(200, 50)).cloned().collect();
        let d = max_of(try_map_slice(opts.policy, &check, |t| {
            Ok((back.value(t.as_slice())? - u.value(t.as_slice())?).abs())
        })?);
        let c = max_of(try_map_slice(opts.policy, &pts, |t| {
            let (a, b) = dual_conormal_pair(u, t.as_slice())?;
            Ok((a - b).amax())
        })?);
        worst_double = worst_double.max(d);
        worst_conormal = worst_conormal.max(c);
        r.row(&[("field", serde_json::Value::from(u.label())), ("double_dual", num(d)), ("conormal", num(c))]);
    }
    r.param("samples", count).param("seed", opts.seed);
    r.measure("max_double_dual_error", worst_double)
        .measure("max_dual_conormal_error", worst_conormal)
        .check("double_dual", worst_double <= 1e-8)
        .check("dual_conormal", worst_conormal <= 1e-8);
    Ok(r)
}
