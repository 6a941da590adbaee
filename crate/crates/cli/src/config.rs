//! Flags, the optional JSON config file, and their merge into a
//! [`RunConfig`]. Flags win over file values.

use std::path::{Path, PathBuf};

use affine_sphere::domain::{BuiltinKind, ConvexDomain, PotentialSpec, Role};
use affine_sphere::solver::SolverConfig;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "affine-sphere", version, about = "Hyperbolic affine spheres over convex domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the Dirichlet problem on a convex domain.
    Solve(Flags),
    /// Dump metrics, conormals, cubic form and residual of a potential.
    Invariants(Flags),
    /// Legendre transform of a graph function.
    Legendre(Flags),
    /// Move a potential by a projective map.
    Transform(Flags),
    /// Run verification suites.
    Verify(Flags),
    /// Factor relating a given potential to the solved one.
    Perturb(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Invariants(_) => "invariants",
            Command::Legendre(_) => "legendre",
            Command::Transform(_) => "transform",
            Command::Verify(_) => "verify",
            Command::Perturb(_) => "perturb",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Solve(f)
            | Command::Invariants(f)
            | Command::Legendre(f)
            | Command::Transform(f)
            | Command::Verify(f)
            | Command::Perturb(f) => f,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// disk, interval, square, ellipse, disk:R, ellipse:A,B[,ANGLE],
    /// polygon:X1,Y1,X2,Y2,... or a JSON object.
    #[arg(long)]
    pub domain: Option<String>,
    /// Nodes per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// ball, hyperboloid, quadratic or polynomial.
    #[arg(long, conflicts_with = "potential_file")]
    pub builtin: Option<String>,
    /// JSON potential spec.
    #[arg(long)]
    pub potential_file: Option<PathBuf>,
    /// Dimension of a builtin potential.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Builtin coefficients, comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub coefficients: Option<Vec<f64>>,
    /// u (potential) or f (graph function).
    #[arg(long)]
    pub role: Option<String>,
    /// Projective map, 4 or 9 comma-separated entries, row-major.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub map: Option<Vec<f64>>,
    /// Sublevel heights, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub h: Option<Vec<f64>>,
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Main output file, or a directory for `verify`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub quick: bool,
    /// Evaluation point, comma-separated; may be repeated.
    #[arg(long, allow_hyphen_values = true)]
    pub at: Vec<String>,
    /// Random sample count when no `--at` is given.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Disable data parallelism.
    #[arg(long)]
    pub sequential: bool,
}

/// Config file contents. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    domain: Option<Value>,
    grid: Option<usize>,
    builtin: Option<String>,
    potential_file: Option<PathBuf>,
    dim: Option<usize>,
    coefficients: Option<Vec<f64>>,
    role: Option<String>,
    map: Option<Vec<f64>>,
    h: Option<Vec<f64>>,
    suite: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    report: Option<PathBuf>,
    quick: Option<bool>,
    at: Option<Vec<Vec<f64>>>,
    samples: Option<usize>,
    sequential: Option<bool>,
    solver: Option<SolverConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum PotentialSource {
    Builtin { spec: PotentialSpec },
    File { path: PathBuf, spec: PotentialSpec },
}

impl PotentialSource {
    pub fn spec(&self) -> &PotentialSpec {
        match self {
            PotentialSource::Builtin { spec } | PotentialSource::File { spec, .. } => spec,
        }
    }
}

/// Fully resolved settings of one run. Serialized into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub domain: Option<ConvexDomain>,
    pub potential: Option<PotentialSource>,
    pub map: Option<Vec<f64>>,
    pub h: Vec<f64>,
    pub suite: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub quick: bool,
    pub at: Vec<Vec<f64>>,
    pub samples: usize,
    pub sequential: bool,
    pub solver: SolverConfig,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| usage(format!("'{p}' is not a number in '{s}'"))))
        .collect()
}

/// Domain from a name, a `kind:params` string or a JSON object.
pub fn parse_domain(spec: &str) -> Result<ConvexDomain, CliError> {
    let s = spec.trim();
    if s.starts_with('{') {
        return domain_from_value(&serde_json::from_str(s).map_err(|e| usage(format!("domain: {e}")))?);
    }
    let (kind, params) = match s.split_once(':') {
        Some((k, p)) => (k, parse_list(p)?),
        None => (s, Vec::new()),
    };
    let d = match (kind, params.as_slice()) {
        ("disk", []) => ConvexDomain::unit_disk(),
        ("disk", [r]) => ConvexDomain::Disk { center: [0.0, 0.0], radius: *r },
        ("interval", []) => ConvexDomain::unit_interval(),
        ("interval", [lo, hi]) => ConvexDomain::Interval { lo: *lo, hi: *hi },
        ("square", []) => ConvexDomain::square(1.0),
        ("square", [h]) => ConvexDomain::square(*h),
        ("ellipse", []) => ConvexDomain::Ellipse { center: [0.0, 0.0], semi_axes: [1.0, 0.5], angle: 0.0 },
        ("ellipse", [a, b]) => ConvexDomain::Ellipse { center: [0.0, 0.0], semi_axes: [*a, *b], angle: 0.0 },
        ("ellipse", [a, b, t]) => ConvexDomain::Ellipse { center: [0.0, 0.0], semi_axes: [*a, *b], angle: *t },
        ("polygon", p) if p.len() >= 6 && p.len() % 2 == 0 => {
            ConvexDomain::Polygon { vertices: p.chunks(2).map(|c| [c[0], c[1]]).collect() }
        }
        _ => return Err(usage(format!("unrecognized domain '{spec}'"))),
    };
    d.validate().map_err(|e| usage(e.to_string()))?;
    Ok(d)
}

fn domain_from_value(v: &Value) -> Result<ConvexDomain, CliError> {
    match v {
        Value::String(s) => parse_domain(s),
        other => {
            let d: ConvexDomain = serde_json::from_value(other.clone()).map_err(|e| usage(format!("domain: {e}")))?;
            d.validate().map_err(|e| usage(e.to_string()))?;
            Ok(d)
        }
    }
}

fn parse_role(s: &str) -> Result<Role, CliError> {
    match s {
        "u" | "potential" => Ok(Role::PotentialU),
        "f" | "graph" => Ok(Role::GraphF),
        other => Err(usage(format!("role must be u or f, got '{other}'"))),
    }
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

/// Default builtin per subcommand, used when neither flags nor the config
/// file name a potential.
fn default_builtin(command: &str) -> Option<&'static str> {
    match command {
        "invariants" | "transform" => Some("ball"),
        "legendre" => Some("hyperboloid"),
        "perturb" => Some("quadratic"),
        _ => None,
    }
}

/// Merges flags over the config file and validates the result.
pub fn resolve(command: &str, flags: &Flags) -> Result<RunConfig, CliError> {
    let file = match &flags.config {
        Some(p) => read_file_config(p)?,
        None => FileConfig::default(),
    };
    // a builtin on one side and a potential file on the other is a contradiction
    let builtin = flags.builtin.clone().or(file.builtin);
    let potential_file = flags.potential_file.clone().or(file.potential_file);
    if builtin.is_some() && potential_file.is_some() {
        return Err(usage("--builtin and --potential-file are mutually exclusive"));
    }
    let domain = match (&flags.domain, &file.domain) {
        (Some(s), _) => Some(parse_domain(s)?),
        (None, Some(v)) => Some(domain_from_value(v)?),
        (None, None) => None,
    };
    let mut solver = file.solver.unwrap_or_default();
    if let Some(g) = flags.grid.or(file.grid) {
        solver.nodes = g;
    }
    let sequential = flags.sequential || file.sequential.unwrap_or(false);
    solver.policy =
        if sequential { affine_sphere::ExecPolicy::Sequential } else { affine_sphere::ExecPolicy::Parallel };

    let role = flags.role.as_deref().or(file.role.as_deref()).map(parse_role).transpose()?;
    let coefficients = flags.coefficients.clone().or(file.coefficients).unwrap_or_default();
    let potential = if let Some(path) = potential_file {
        let text =
            std::fs::read_to_string(&path).map_err(|e| usage(format!("potential file {}: {e}", path.display())))?;
        let spec =
            PotentialSpec::from_json(&text).map_err(|e| usage(format!("potential file {}: {e}", path.display())))?;
        Some(PotentialSource::File { path, spec })
    } else if let Some(name) = builtin.or_else(|| default_builtin(command).map(String::from)) {
        let kind: BuiltinKind = name.parse().map_err(|e: affine_sphere::Error| usage(e.to_string()))?;
        let n = flags.dim.or(file.dim).or(domain.as_ref().map(|d| d.dim())).unwrap_or(2);
        let role = match kind {
            BuiltinKind::Ball => Some(Role::PotentialU),
            BuiltinKind::Hyperboloid => Some(Role::GraphF),
            _ => role,
        };
        let spec_domain = match role.unwrap_or(Role::PotentialU) {
            Role::PotentialU => domain.clone(),
            _ => None,
        };
        Some(PotentialSource::Builtin {
            spec: PotentialSpec { builtin: kind, coefficients: coefficients.clone(), domain: spec_domain, n, role },
        })
    } else {
        None
    };

    let at = if flags.at.is_empty() {
        file.at.unwrap_or_default()
    } else {
        flags.at.iter().map(|s| parse_list(s)).collect::<Result<_, _>>()?
    };
    let map = flags.map.clone().or(file.map);
    if let Some(m) = &map {
        if m.len() != 4 && m.len() != 9 {
            return Err(usage(format!("--map takes 4 or 9 entries, got {}", m.len())));
        }
    }
    let h = flags.h.clone().or(file.h).unwrap_or_else(|| vec![2.0, 4.0, 8.0]);
    if h.is_empty() || h.iter().any(|x| !(x.is_finite() && *x > 1.0)) {
        return Err(usage("every --h value must exceed the minimum 1 of the hyperboloid"));
    }
    let quick = flags.quick || file.quick.unwrap_or(false);
    let cfg = RunConfig {
        command: command.to_string(),
        domain,
        potential,
        map,
        h,
        suite: flags.suite.clone().or(file.suite).unwrap_or_else(|| "all".into()),
        seed: flags.seed.or(file.seed).unwrap_or(42),
        out: flags.out.clone().or(file.out),
        report: flags.report.clone().or(file.report),
        quick,
        at,
        samples: flags.samples.or(file.samples).unwrap_or(200),
        sequential,
        solver,
    };
    if matches!(command, "solve" | "perturb") {
        cfg.solver.validate().map_err(|e| usage(e.to_string()))?;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(args: &[&str]) -> (String, Flags) {
        let mut argv = vec!["affine-sphere"];
        argv.extend_from_slice(args);
        let cli = Cli::try_parse_from(argv).unwrap();
        (cli.command.name().to_string(), cli.command.flags().clone())
    }

    #[test]
    fn solve_flags_map_directly() {
        let (cmd, f) = flags(&["solve", "--domain", "disk", "--grid", "129", "--out", "sol.csv"]);
        let c = resolve(&cmd, &f).unwrap();
        assert_eq!(c.command, "solve");
        assert_eq!(c.domain, Some(ConvexDomain::unit_disk()));
        assert_eq!(c.solver.nodes, 129);
        assert_eq!(c.out, Some(PathBuf::from("sol.csv")));
    }

    #[test]
    fn verify_sweep_levels() {
        let (cmd, f) = flags(&["verify", "--suite", "gradient-estimate", "--h", "2,4,8", "--seed", "42"]);
        let c = resolve(&cmd, &f).unwrap();
        assert_eq!(c.h, vec![2.0, 4.0, 8.0]);
        assert_eq!(c.suite, "gradient-estimate");
        assert_eq!(c.seed, 42);
    }

    #[test]
    fn builtin_and_file_conflict_at_parse_time() {
        let r = Cli::try_parse_from(["affine-sphere", "invariants", "--builtin", "ball", "--potential-file", "p.json"]);
        assert!(r.is_err());
    }

    #[test]
    fn domain_strings() {
        assert_eq!(parse_domain("disk:2").unwrap(), ConvexDomain::Disk { center: [0.0, 0.0], radius: 2.0 });
        assert!(matches!(parse_domain("polygon:0,0,1,0,0,1").unwrap(), ConvexDomain::Polygon { .. }));
        assert!(parse_domain(r#"{"kind":"interval","lo":-2,"hi":1}"#).is_ok());
        assert!(parse_domain("torus").is_err());
        assert!(parse_domain("disk:-1").is_err());
    }

    #[test]
    fn negative_coordinates_are_points_not_flags() {
        let (cmd, f) = flags(&["invariants", "--at", "-0.5,0.25"]);
        assert_eq!(resolve(&cmd, &f).unwrap().at, vec![vec![-0.5, 0.25]]);
    }
}
