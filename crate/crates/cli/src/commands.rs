//! One function per subcommand. Each writes its artifacts, prints a short
//! summary and fails with [`CliError::Criteria`] when a check does not hold.

use std::collections::BTreeMap;
use std::path::PathBuf;

use affine_sphere::domain::{transform_potential, ConvexDomain, PotentialField, ProjectiveMap, Role};
use affine_sphere::harness::{law_deviation, run_suite, SuiteOptions, INTERIOR_RADIUS};
use affine_sphere::invariants::{invariants_at, invariants_csv, residual_from_jet, summarize};
use affine_sphere::legendre::{
    duality_gaps, gradient_identity_defect, involution_error, legendre_transform, require_origin_minimum,
};
use affine_sphere::linalg::{point, Point};
use affine_sphere::output::{coord_names, csv_table};
use affine_sphere::solver::{perturbation_factor, solve_on, Product};
use affine_sphere::{Error, ExecPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{check_criteria, envelope, lock_all, write};

type Criteria = BTreeMap<String, bool>;

fn policy(cfg: &RunConfig) -> ExecPolicy {
    cfg.solver.policy
}

fn path_or(p: &Option<PathBuf>, default: &str) -> PathBuf {
    p.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn potential(cfg: &RunConfig) -> Result<PotentialField, CliError> {
    let src = cfg.potential.as_ref().ok_or_else(|| CliError::Usage("no potential given".into()))?;
    Ok(src.spec().build()?)
}

fn exact_ball(t: &Point) -> f64 {
    -(1.0 - t.norm_squared()).max(0.0).sqrt()
}

/// `--at` points, or seeded samples from `domain`.
fn points(cfg: &RunConfig, domain: &ConvexDomain, n: usize) -> Result<Vec<Point>, CliError> {
    if !cfg.at.is_empty() {
        if let Some(p) = cfg.at.iter().find(|p| p.len() != n) {
            return Err(CliError::Usage(format!("--at {p:?} needs {n} coordinates")));
        }
        return Ok(cfg.at.iter().map(|p| point(p)).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(domain.sample_interior(&mut rng, cfg.samples, 0.05))
}

/// Domain to sample for `f`: its own, else `--domain`, else the unit ball.
fn sample_domain(cfg: &RunConfig, f: &PotentialField) -> Result<ConvexDomain, CliError> {
    match (f.domain(), &cfg.domain) {
        (Some(d), _) => Ok(d.clone()),
        (None, Some(d)) => Ok(d.clone()),
        (None, None) => Ok(ConvexDomain::unit_ball(f.dim())?),
    }
}

fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|x| format!("{:.6}", x + 0.0)).collect();
    format!("({})", parts.join(", "))
}

pub fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    let domain = cfg.domain.clone().unwrap_or_else(ConvexDomain::unit_disk);
    let (out, report) = (path_or(&cfg.out, "solution.csv"), path_or(&cfg.report, "report.json"));
    let _locks = lock_all(&[&out, &report])?;
    let (u, mut rep) = solve_on(&domain, &cfg.solver)?;
    let g = u.as_grid().ok_or_else(|| Error::Study("solver returned no grid".into()))?;
    if domain == ConvexDomain::unit_disk() || domain == ConvexDomain::unit_interval() {
        rep.measure_error(g, exact_ball, |t| t.norm() <= INTERIOR_RADIUS);
    }
    let mut criteria = Criteria::new();
    criteria.insert("converged".into(), rep.converged);
    criteria.insert("negative".into(), rep.negative);
    criteria.insert("convex".into(), rep.convex);
    write(&out, &g.to_csv()?)?;
    write(&report, &envelope(cfg, &rep, &criteria)?)?;
    println!(
        "solve: {} interior nodes, {} Newton steps, residual {:.3e}{}",
        rep.interior_nodes,
        rep.iterations,
        rep.final_residual,
        rep.interior_error.map(|e| format!(", error vs exact {e:.3e} on r <= {INTERIOR_RADIUS}")).unwrap_or_default()
    );
    println!("wrote {} and {}", out.display(), report.display());
    check_criteria(&criteria)
}

pub fn invariants(cfg: &RunConfig) -> Result<(), CliError> {
    let f = potential(cfg)?;
    let pts = points(cfg, &sample_domain(cfg, &f)?, f.dim())?;
    let report = path_or(&cfg.report, "invariants.json");
    let mut paths = vec![report.clone()];
    paths.extend(cfg.out.clone());
    let _locks = lock_all(&paths.iter().map(|p| p.as_path()).collect::<Vec<_>>())?;
    let per_point = pts.iter().map(|t| invariants_at(&f, t.as_slice())).collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(&f, &pts, policy(cfg))?;
    if let Some(out) = &cfg.out {
        write(out, &invariants_csv(&f, &pts, policy(cfg))?)?;
    }
    write(&report, &envelope(cfg, json!({ "summary": summary, "points": per_point }), &Criteria::new())?)?;
    for p in per_point.iter().take(5) {
        println!(
            "t = {}: residual {:.3e}, nu = {}, mu = {}",
            fmt_point(&p.point),
            p.residual,
            fmt_point(&p.nu),
            fmt_point(&p.mu)
        );
    }
    println!(
        "invariants: {} points, max |residual| {:.3e}, max |nu - mu| {:.3e}; wrote {}",
        summary.samples,
        summary.max_abs_residual,
        summary.max_conormal_gap,
        report.display()
    );
    Ok(())
}

pub fn legendre(cfg: &RunConfig) -> Result<(), CliError> {
    let f = potential(cfg)?;
    f.require_role(Role::GraphF)?;
    let n = f.dim();
    let pol = policy(cfg);
    let (out, report) = (path_or(&cfg.out, "legendre.csv"), path_or(&cfg.report, "legendre.json"));
    let _locks = lock_all(&[&out, &report])?;
    let pair = legendre_transform(&f, pol)?;
    // --at points are y values; samples are x values mapped forward
    let (ys, xs): (Vec<Point>, Vec<Point>) = if cfg.at.is_empty() {
        let xs = points(cfg, &sample_domain(cfg, &f)?, n)?;
        let ys = xs.iter().map(|x| pair.gradient_map(x.as_slice())).collect::<Result<Vec<_>, _>>()?;
        (ys, xs)
    } else {
        let ys = points(cfg, &ConvexDomain::unit_ball(n)?, n)?;
        let xs = ys.iter().map(|y| pair.inverse_map(y.as_slice())).collect::<Result<Vec<_>, _>>()?;
        (ys, xs)
    };
    let mut header = coord_names("y", n);
    header.push("v".into());
    header.extend(coord_names("x", n));
    let rows = ys
        .iter()
        .zip(&xs)
        .map(|(y, x)| {
            let mut r: Vec<f64> = y.iter().copied().collect();
            r.push(pair.v.value(y.as_slice())?);
            r.extend(x.iter().copied());
            Ok(r)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    write(&out, &csv_table(&header, &rows)?)?;

    let involution = involution_error(&f, &xs, pol)?;
    let identity = xs
        .iter()
        .map(|x| Ok(gradient_identity_defect(&pair, x.as_slice())?.amax()))
        .collect::<Result<Vec<f64>, Error>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut criteria = Criteria::new();
    criteria.insert("involution".into(), involution <= 1e-10);
    criteria.insert("gradient_identity".into(), identity <= 1e-10);
    // the gap inequality needs the minimum of f at the origin
    let gap = match require_origin_minimum(&f) {
        Ok(()) => {
            let inside: Vec<Point> = xs.iter().filter(|x| pair.v.contains(x.as_slice())).cloned().collect();
            let g = duality_gaps(&pair, &inside, pol)?.into_iter().fold(f64::INFINITY, f64::min);
            criteria.insert("duality_gap_nonnegative".into(), g >= -1e-12);
            Some(g)
        }
        Err(_) => None,
    };
    let result = json!({
        "samples": xs.len(),
        "max_involution_error": involution,
        "max_gradient_identity_defect": identity,
        "min_duality_gap": gap,
    });
    write(&report, &envelope(cfg, result, &criteria)?)?;
    println!(
        "legendre: {} points, involution {:.3e}, identity defect {:.3e}, min gap {}",
        xs.len(),
        involution,
        identity,
        gap.map(|g| format!("{g:.3e}")).unwrap_or_else(|| "n/a (minimum not at origin)".into())
    );
    println!("wrote {} and {}", out.display(), report.display());
    check_criteria(&criteria)
}

pub fn transform(cfg: &RunConfig) -> Result<(), CliError> {
    let entries = cfg.map.as_ref().ok_or_else(|| CliError::Usage("transform needs --map".into()))?;
    let map = ProjectiveMap::from_row_major(entries)?;
    let u = potential(cfg)?;
    if map.dim() != u.dim() {
        return Err(CliError::Usage(format!("map acts on dimension {}, potential has {}", map.dim(), u.dim())));
    }
    let moved = transform_potential(&u, &map)?;
    let n = u.dim();
    let (out, report) = (path_or(&cfg.out, "transformed.csv"), path_or(&cfg.report, "transform.json"));
    let _locks = lock_all(&[&out, &report])?;
    // --at points live in the new chart
    let originals: Vec<Point> = if cfg.at.is_empty() {
        points(cfg, &sample_domain(cfg, &u)?, n)?
    } else {
        points(cfg, &sample_domain(cfg, &u)?, n)?.iter().map(|t| map.pull_back(t).0).collect()
    };
    let mut header = coord_names("s", n);
    header.push("u_moved".into());
    header.push("residual_moved".into());
    header.extend(coord_names("t", n));
    header.push("u".into());
    let mut rows = Vec::new();
    let mut worst = [0.0_f64; 3];
    let mut skipped = 0;
    for t in &originals {
        let dev = match law_deviation(&u, &moved, &map, t) {
            Ok(d) => d,
            Err(Error::ChartOverflow { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        worst = [worst[0].max(dev.residual), worst[1].max(dev.conormal), worst[2].max(dev.metric)];
        let (s, _) = map.apply(t);
        let jet = moved.jet(s.as_slice())?;
        let mut r: Vec<f64> = s.iter().copied().collect();
        r.push(jet.value);
        r.push(residual_from_jet(Role::PotentialU, &jet, s.as_slice())?);
        r.extend(t.iter().copied());
        r.push(u.value(t.as_slice())?);
        rows.push(r);
    }
    write(&out, &csv_table(&header, &rows)?)?;
    let mut criteria = Criteria::new();
    criteria.insert("residual_law".into(), worst[0] <= 1e-9);
    criteria.insert("conormal_law".into(), worst[1] <= 1e-9);
    criteria.insert("metric_law".into(), worst[2] <= 1e-9);
    let result = json!({
        "normalized_map": map.matrix().transpose().iter().copied().collect::<Vec<f64>>(),
        "moved_domain": moved.domain(),
        "samples": rows.len(),
        "skipped_chart_overflow": skipped,
        "max_residual_deviation": worst[0],
        "max_conormal_deviation": worst[1],
        "max_metric_deviation": worst[2],
    });
    write(&report, &envelope(cfg, result, &criteria)?)?;
    println!(
        "transform: {} points ({} outside the chart), law deviations residual {:.3e}, conormal {:.3e}, metric {:.3e}",
        rows.len(),
        skipped,
        worst[0],
        worst[1],
        worst[2]
    );
    println!("wrote {} and {}", out.display(), report.display());
    check_criteria(&criteria)
}

pub fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let opts = SuiteOptions { quick: cfg.quick, seed: cfg.seed, levels: cfg.h.clone(), policy: policy(cfg) };
    let report = path_or(&cfg.report, "verify.json");
    let mut paths = vec![report.clone()];
    paths.extend(cfg.out.clone());
    let _locks = lock_all(&paths.iter().map(|p| p.as_path()).collect::<Vec<_>>())?;
    let reports = run_suite(&cfg.suite, &opts).map_err(|e| match e {
        Error::Config(m) => CliError::Usage(m),
        other => other.into(),
    })?;
    let mut criteria = Criteria::new();
    for (i, r) in reports.iter().enumerate() {
        for (k, ok) in &r.criteria {
            criteria.insert(format!("{i:02}_{}.{k}", r.study), *ok);
        }
        let fails = r.failures();
        if fails.is_empty() {
            println!("PASS {} ({} checks)", r.study, r.criteria.len());
        } else {
            println!("FAIL {}: {}", r.study, fails.join(", "));
        }
    }
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir)?;
        for (i, r) in reports.iter().enumerate().filter(|(_, r)| !r.sweep.is_empty()) {
            write(&dir.join(format!("{i:02}_{}.csv", r.study)), &r.sweep_csv()?)?;
        }
    }
    write(&report, &envelope(cfg, &reports, &criteria)?)?;
    println!("wrote {}", report.display());
    check_criteria(&criteria)
}

pub fn perturb(cfg: &RunConfig) -> Result<(), CliError> {
    let domain = cfg.domain.clone().unwrap_or_else(ConvexDomain::unit_disk);
    let given = potential(cfg)?;
    let (out, report) = (path_or(&cfg.out, "phi.csv"), path_or(&cfg.report, "perturb.json"));
    let _locks = lock_all(&[&out, &report])?;
    let pol = policy(cfg);
    let (ubar, rep) = solve_on(&domain, &cfg.solver)?;
    let (phi, summary) = perturbation_factor(&given, &ubar, pol)?;
    let product = Product::new(&phi, &given)?;
    let grid = ubar.as_grid().ok_or_else(|| Error::Study("solver returned no grid".into()))?.grid().clone();
    let n = grid.dim();
    let mut header = coord_names("t", n);
    header.extend(["u", "u_bar", "phi", "product_residual"].map(String::from));
    let mut worst = 0.0_f64;
    let rows = (0..grid.interior_count())
        .map(|k| {
            let t = grid.interior_coord(k);
            let ts = t.as_slice();
            let res = residual_from_jet(Role::PotentialU, &product.jet(ts)?, ts)?;
            worst = worst.max(res.abs());
            let mut r: Vec<f64> = t.iter().copied().collect();
            r.extend([given.value(ts)?, ubar.value(ts)?, phi.value(ts)?, res]);
            Ok(r)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    write(&out, &csv_table(&header, &rows)?)?;
    let mut criteria = Criteria::new();
    criteria.insert("phi_positive".into(), summary.min > 0.0);
    criteria.insert("phi_bounded".into(), summary.max.is_finite());
    criteria.insert("product_residual".into(), worst <= rep.final_residual + 1e-6);
    let result = json!({
        "phi": summary,
        "max_product_residual": worst,
        "solver": rep,
    });
    write(&report, &envelope(cfg, result, &criteria)?)?;
    println!(
        "perturb: phi in [{:.6}, {:.6}] over {} nodes, product residual {:.3e} (solver {:.3e})",
        summary.min, summary.max, summary.samples, worst, rep.final_residual
    );
    println!("wrote {} and {}", out.display(), report.display());
    check_criteria(&criteria)
}
