use std::fmt::Debug;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::convex::ConvexDomain;
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::linalg::{HessianReport, Matrix, Point};
use crate::output::{coord_names, csv_table};

/// How a field is to be read geometrically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Negative convex potential `u` over a projective chart.
    #[serde(alias = "u")]
    PotentialU,
    /// Convex graph function `f`.
    #[serde(alias = "f", alias = "graph")]
    GraphF,
    /// Plain scalar field with no sign convention.
    Scalar,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::PotentialU => "potential_u",
            Role::GraphF => "graph_f",
            Role::Scalar => "scalar",
        }
    }
}

/// Value, gradient and Hessian at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Point,
    pub hessian: Matrix,
}

/// Analytic field given by exact value/gradient/Hessian callbacks.
pub trait Evaluator: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn role(&self) -> Role;
    /// `None` when the field is defined on all of `R^n`.
    fn domain(&self) -> Option<&ConvexDomain>;
    /// Called only at points inside `domain()`.
    fn jet(&self, t: &[f64]) -> Result<Jet>;
    fn label(&self) -> String;
}

/// `u = -sqrt(1 - |t|^2)` on the unit ball.
#[derive(Debug, Clone)]
pub struct Ball {
    domain: ConvexDomain,
}

impl Ball {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Ball { domain: ConvexDomain::unit_ball(n)? })
    }
}

impl Evaluator for Ball {
    fn dim(&self) -> usize {
        self.domain.dim()
    }
    fn role(&self) -> Role {
        Role::PotentialU
    }
    fn domain(&self) -> Option<&ConvexDomain> {
        Some(&self.domain)
    }
    fn jet(&self, t: &[f64]) -> Result<Jet> {
        let n = t.len();
        let x = DVector::from_column_slice(t);
        let s = 1.0 - x.norm_squared();
        let r = s.sqrt();
        Ok(Jet { value: -r, gradient: &x / r, hessian: DMatrix::identity(n, n) / r + &x * x.transpose() / (s * r) })
    }
    fn label(&self) -> String {
        format!("ball(n={})", self.dim())
    }
}

/// Graph function `f = sqrt(1 + |x|^2)` on `R^n`.
#[derive(Debug, Clone)]
pub struct Hyperboloid {
    n: usize,
}

impl Hyperboloid {
    pub fn new(n: usize) -> Result<Self> {
        match n {
            1 | 2 => Ok(Hyperboloid { n }),
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }
}

impl Evaluator for Hyperboloid {
    fn dim(&self) -> usize {
        self.n
    }
    fn role(&self) -> Role {
        Role::GraphF
    }
    fn domain(&self) -> Option<&ConvexDomain> {
        None
    }
    fn jet(&self, t: &[f64]) -> Result<Jet> {
        let n = t.len();
        let x = DVector::from_column_slice(t);
        let f = (1.0 + x.norm_squared()).sqrt();
        Ok(Jet { value: f, gradient: &x / f, hessian: DMatrix::identity(n, n) / f - &x * x.transpose() / (f * f * f) })
    }
    fn label(&self) -> String {
        format!("hyperboloid(n={})", self.n)
    }
}

/// `c0 + a |t|^2`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    n: usize,
    c0: f64,
    a: f64,
    role: Role,
    domain: Option<ConvexDomain>,
}

impl Quadratic {
    pub fn new(n: usize, c0: f64, a: f64, role: Role, domain: Option<ConvexDomain>) -> Result<Self> {
        check_dim_domain(n, domain.as_ref())?;
        Ok(Quadratic { n, c0, a, role, domain })
    }
}

impl Evaluator for Quadratic {
    fn dim(&self) -> usize {
        self.n
    }
    fn role(&self) -> Role {
        self.role
    }
    fn domain(&self) -> Option<&ConvexDomain> {
        self.domain.as_ref()
    }
    fn jet(&self, t: &[f64]) -> Result<Jet> {
        let x = DVector::from_column_slice(t);
        Ok(Jet {
            value: self.c0 + self.a * x.norm_squared(),
            gradient: 2.0 * self.a * &x,
            hessian: DMatrix::identity(self.n, self.n) * (2.0 * self.a),
        })
    }
    fn label(&self) -> String {
        format!("quadratic(c0={}, a={})", self.c0, self.a)
    }
}

/// Polynomial with coefficients on graded-lex monomials
/// `1, t1, t2, t1^2, t1 t2, t2^2, t1^3, ...` (powers of `t` when n = 1).
#[derive(Debug, Clone)]
pub struct Polynomial {
    n: usize,
    terms: Vec<(f64, Vec<u32>)>,
    role: Role,
    domain: Option<ConvexDomain>,
}

/// Exponent vectors of the first `count` graded-lex monomials in `n` variables.
pub fn graded_lex_exponents(n: usize, count: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(count);
    let mut deg = 0_u32;
    while out.len() < count {
        match n {
            1 => out.push(vec![deg]),
            _ => {
                for k in 0..=deg {
                    out.push(vec![deg - k, k]);
                }
            }
        }
        deg += 1;
    }
    out.truncate(count);
    out
}

impl Polynomial {
    pub fn new(n: usize, coefficients: &[f64], role: Role, domain: Option<ConvexDomain>) -> Result<Self> {
        check_dim_domain(n, domain.as_ref())?;
        if coefficients.is_empty() {
            return Err(Error::PotentialSpec("polynomial needs at least one coefficient".into()));
        }
        let terms = coefficients
            .iter()
            .copied()
            .zip(graded_lex_exponents(n, coefficients.len()))
            .filter(|(c, _)| *c != 0.0)
            .collect();
        Ok(Polynomial { n, terms, role, domain })
    }
}

fn falling(p: u32, k: u32) -> f64 {
    (0..k).map(|j| (p as f64) - j as f64).product()
}

fn pow(x: f64, p: i64) -> f64 {
    if p < 0 {
        0.0
    } else {
        x.powi(p as i32)
    }
}

impl Evaluator for Polynomial {
    fn dim(&self) -> usize {
        self.n
    }
    fn role(&self) -> Role {
        self.role
    }
    fn domain(&self) -> Option<&ConvexDomain> {
        self.domain.as_ref()
    }
    fn jet(&self, t: &[f64]) -> Result<Jet> {
        let n = self.n;
        let mut value = 0.0;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for (c, e) in &self.terms {
            // derivative orders per variable
            let term = |d: &[u32]| -> f64 {
                let mut v = *c;
                for a in 0..n {
                    v *= falling(e[a], d[a]) * pow(t[a], e[a] as i64 - d[a] as i64);
                }
                v
            };
            value += term(&vec![0; n]);
            for a in 0..n {
                let mut d = vec![0; n];
                d[a] = 1;
                grad[a] += term(&d);
                for b in 0..n {
                    let mut d2 = d.clone();
                    d2[b] += 1;
                    hess[(a, b)] += term(&d2);
                }
            }
        }
        Ok(Jet { value, gradient: grad, hessian: hess })
    }
    fn label(&self) -> String {
        format!("polynomial({} terms)", self.terms.len())
    }
}

fn check_dim_domain(n: usize, domain: Option<&ConvexDomain>) -> Result<()> {
    if !(1..=2).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    if let Some(d) = domain {
        d.validate()?;
        if d.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: d.dim() });
        }
    }
    Ok(())
}

/// Node values of a field on a [`GridSpec`].
#[derive(Debug)]
pub struct GridPotential {
    grid: GridSpec,
    values: Vec<f64>,
    role: Role,
    boundary_zero: bool,
    node_hessians: Option<Vec<Matrix>>,
    recon: OnceLock<Reconstruction>,
}

impl GridPotential {
    /// `boundary_zero` marks fields that vanish on the domain boundary; they
    /// are reconstructed off-node as `-sqrt(rho q)` with `q` smooth.
    pub fn new(grid: GridSpec, values: Vec<f64>, role: Role, boundary_zero: bool) -> Result<Self> {
        if values.len() != grid.interior_count() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} interior nodes",
                values.len(),
                grid.interior_count()
            )));
        }
        Ok(GridPotential { grid, values, role, boundary_zero, node_hessians: None, recon: OnceLock::new() })
    }

    /// Attaches the discrete Hessians the values were computed with; they
    /// take precedence over difference stencils at nodes.
    pub fn with_node_hessians(mut self, hessians: Vec<Matrix>) -> Result<Self> {
        if hessians.len() != self.values.len() {
            return Err(Error::InvalidGrid("one Hessian per interior node required".into()));
        }
        self.node_hessians = Some(hessians);
        Ok(self)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn boundary_zero(&self) -> bool {
        self.boundary_zero
    }

    pub fn node_hessians(&self) -> Option<&[Matrix]> {
        self.node_hessians.as_deref()
    }

    fn neighbor(&self, k: usize, axis: usize, step: i64) -> Option<usize> {
        let idx = self.grid.multi_index(self.grid.interior_nodes()[k]);
        let mut off = vec![0_i64; self.grid.dim()];
        off[axis] = 1;
        self.grid.offset(&idx, &off, step).and_then(|f| self.grid.interior_index(f))
    }

    /// First derivative along `axis` of the node function `g`: centered when
    /// both neighbors are interior, otherwise second-order one-sided.
    fn diff1(&self, k: usize, axis: usize, g: &dyn Fn(usize) -> Result<f64>) -> Result<f64> {
        let h = self.grid.spacing()[axis];
        if let (Some(p), Some(m)) = (self.neighbor(k, axis, 1), self.neighbor(k, axis, -1)) {
            return Ok((g(p)? - g(m)?) / (2.0 * h));
        }
        for dir in [1_i64, -1] {
            if let (Some(a), Some(b)) = (self.neighbor(k, axis, dir), self.neighbor(k, axis, 2 * dir)) {
                return Ok(dir as f64 * (-3.0 * g(k)? + 4.0 * g(a)? - g(b)?) / (2.0 * h));
            }
        }
        Err(self.no_fit(k))
    }

    fn diff2(&self, k: usize, axis: usize) -> Result<f64> {
        let h = self.grid.spacing()[axis];
        let v = &self.values;
        if let (Some(p), Some(m)) = (self.neighbor(k, axis, 1), self.neighbor(k, axis, -1)) {
            return Ok((v[p] - 2.0 * v[k] + v[m]) / (h * h));
        }
        for dir in [1_i64, -1] {
            let nb: Vec<Option<usize>> = (1..=3).map(|j| self.neighbor(k, axis, j * dir)).collect();
            if let [Some(a), Some(b), Some(c)] = nb[..] {
                return Ok((2.0 * v[k] - 5.0 * v[a] + 4.0 * v[b] - v[c]) / (h * h));
            }
        }
        Err(self.no_fit(k))
    }

    fn no_fit(&self, k: usize) -> Error {
        Error::StencilDoesNotFit { node: self.grid.multi_index(self.grid.interior_nodes()[k]) }
    }

    pub fn fd_gradient(&self, k: usize) -> Result<Point> {
        let v = &self.values;
        let g = |m: usize| Ok(v[m]);
        let comps: Result<Vec<f64>> = (0..self.grid.dim()).map(|a| self.diff1(k, a, &g)).collect();
        Ok(DVector::from_vec(comps?))
    }

    /// Difference-stencil Hessian at interior node `k`.
    pub fn fd_hessian(&self, k: usize) -> Result<Matrix> {
        let n = self.grid.dim();
        let mut hm = DMatrix::zeros(n, n);
        for a in 0..n {
            hm[(a, a)] = self.diff2(k, a)?;
        }
        if n == 2 {
            let v = &self.values;
            let inner = |m: usize| self.diff1(m, 0, &|j| Ok(v[j]));
            let c = self.diff1(k, 1, &inner)?;
            hm[(0, 1)] = c;
            hm[(1, 0)] = c;
        }
        Ok(hm)
    }

    /// Hessian at node `k`: the attached discrete Hessian when present,
    /// otherwise difference stencils.
    pub fn node_hessian(&self, k: usize) -> Result<Matrix> {
        match &self.node_hessians {
            Some(h) => Ok(h[k].clone()),
            None => self.fd_hessian(k),
        }
    }

    pub fn node_jet(&self, k: usize) -> Result<Jet> {
        Ok(Jet { value: self.values[k], gradient: self.fd_gradient(k)?, hessian: self.node_hessian(k)? })
    }

    fn reconstruction(&self) -> &Reconstruction {
        self.recon.get_or_init(|| Reconstruction::build(self))
    }

    /// Value, gradient and Hessian at any point of the domain. Nodes use the
    /// stencils; other points use the cubic reconstruction.
    pub fn jet(&self, t: &[f64]) -> Result<Jet> {
        if !self.grid.domain().contains(t) {
            return Err(Error::OutsideDomain { point: t.to_vec() });
        }
        if let Some(k) = self.grid.node_at(t, 1e-9) {
            return self.node_jet(k);
        }
        self.reconstructed_jet(t)
    }

    /// Cubic reconstruction only, also at nodes.
    pub fn reconstructed_jet(&self, t: &[f64]) -> Result<Jet> {
        let (q, gq, hq) = self.reconstruction().eval(t);
        if !self.boundary_zero {
            return Ok(Jet { value: q, gradient: gq, hessian: hq });
        }
        let (rho, gr, hr) = self.grid.domain().defining_function(t);
        let p = rho * q;
        if !(p > 0.0) {
            return Err(Error::OutsideDomain { point: t.to_vec() });
        }
        let gp = &gr * q + &gq * rho;
        let hp = &hr * q + &gr * gq.transpose() + &gq * gr.transpose() + &hq * rho;
        let s = p.sqrt();
        Ok(Jet {
            value: -s,
            gradient: -&gp / (2.0 * s),
            hessian: -&hp / (2.0 * s) + &gp * gp.transpose() / (4.0 * p * s),
        })
    }

    /// CSV with columns `t1[,t2],u,lambda_min`, one row per interior node.
    pub fn to_csv(&self) -> Result<String> {
        let n = self.grid.dim();
        let mut header = coord_names("t", n);
        header.push("u".into());
        header.push("lambda_min".into());
        let rows: Vec<Vec<f64>> = (0..self.values.len())
            .map(|k| {
                let t = self.grid.interior_coord(k);
                let lam = self.node_hessian(k).map(|h| HessianReport::new(h).min_eigenvalue()).unwrap_or(f64::NAN);
                let mut row: Vec<f64> = t.iter().copied().collect();
                row.push(self.values[k]);
                row.push(lam);
                row
            })
            .collect();
        csv_table(&header, &rows)
    }
}

/// Tensor-product Catmull-Rom interpolant over the grid box, padded by two
/// layers of linearly extrapolated values.
#[derive(Debug)]
struct Reconstruction {
    dim: usize,
    shape: Vec<usize>,
    lower: Vec<f64>,
    spacing: Vec<f64>,
    data: Vec<f64>,
}

const PAD: usize = 2;

impl Reconstruction {
    fn build(field: &GridPotential) -> Self {
        let grid = &field.grid;
        let n = grid.dim();
        let shape: Vec<usize> = grid.shape().iter().map(|s| s + 2 * PAD).collect();
        let lower: Vec<f64> = grid.lower().iter().zip(grid.spacing()).map(|(l, h)| l - PAD as f64 * h).collect();
        let total: usize = shape.iter().product();
        let flat = |idx: &[usize]| if n == 1 { idx[0] } else { idx[0] * shape[1] + idx[1] };
        let mut data = vec![0.0; total];
        let mut known = vec![false; total];
        for (k, &full) in grid.interior_nodes().iter().enumerate() {
            let idx: Vec<usize> = grid.multi_index(full).iter().map(|i| i + PAD).collect();
            let value = if field.boundary_zero {
                let t = grid.coord(full);
                let rho = grid.domain().defining_function(t.as_slice()).0;
                field.values[k] * field.values[k] / rho
            } else {
                field.values[k]
            };
            let f = flat(&idx);
            data[f] = value;
            known[f] = true;
        }
        let unflat = |f: usize| if n == 1 { vec![f] } else { vec![f / shape[1], f % shape[1]] };
        let step = |idx: &[usize], axis: usize, d: i64| -> Option<usize> {
            let j = idx[axis] as i64 + d;
            if j < 0 || j >= shape[axis] as i64 {
                return None;
            }
            let mut out = idx.to_vec();
            out[axis] = j as usize;
            Some(flat(&out))
        };
        loop {
            let mut layer = Vec::new();
            for f in 0..total {
                if known[f] {
                    continue;
                }
                let idx = unflat(f);
                let mut extrap = Vec::new();
                let mut adjacent = Vec::new();
                for axis in 0..n {
                    for d in [1_i64, -1] {
                        if let Some(a) = step(&idx, axis, d).filter(|a| known[*a]) {
                            adjacent.push(data[a]);
                            if let Some(b) = step(&idx, axis, 2 * d).filter(|b| known[*b]) {
                                extrap.push(2.0 * data[a] - data[b]);
                            }
                        }
                    }
                }
                let pool = if extrap.is_empty() { &adjacent } else { &extrap };
                if !pool.is_empty() {
                    layer.push((f, pool.iter().sum::<f64>() / pool.len() as f64));
                }
            }
            if layer.is_empty() {
                break;
            }
            for (f, v) in layer {
                data[f] = v;
                known[f] = true;
            }
        }
        Reconstruction { dim: n, shape, lower, spacing: grid.spacing().to_vec(), data }
    }

    fn eval(&self, t: &[f64]) -> (f64, Point, Matrix) {
        let n = self.dim;
        // per axis: base index and weights with first/second derivatives
        let mut base = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for a in 0..n {
            let x = (t[a] - self.lower[a]) / self.spacing[a];
            let i = (x.floor() as i64).clamp(1, self.shape[a] as i64 - 3);
            let s = x - i as f64;
            base.push(i as usize - 1);
            let h = self.spacing[a];
            w.push(catmull_rom(s, h));
        }
        let mut value = 0.0;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        let count = 4_usize.pow(n as u32);
        for c in 0..count {
            let loc: Vec<usize> = (0..n).map(|a| (c >> (2 * a)) & 3).collect();
            let f = if n == 1 { base[0] + loc[0] } else { (base[0] + loc[0]) * self.shape[1] + base[1] + loc[1] };
            let d = self.data[f];
            if n == 1 {
                value += w[0][0][loc[0]] * d;
                grad[0] += w[0][1][loc[0]] * d;
                hess[(0, 0)] += w[0][2][loc[0]] * d;
            } else {
                let (a0, a1) = (loc[0], loc[1]);
                value += w[0][0][a0] * w[1][0][a1] * d;
                grad[0] += w[0][1][a0] * w[1][0][a1] * d;
                grad[1] += w[0][0][a0] * w[1][1][a1] * d;
                hess[(0, 0)] += w[0][2][a0] * w[1][0][a1] * d;
                hess[(1, 1)] += w[0][0][a0] * w[1][2][a1] * d;
                hess[(0, 1)] += w[0][1][a0] * w[1][1][a1] * d;
            }
        }
        if n == 2 {
            hess[(1, 0)] = hess[(0, 1)];
        }
        (value, grad, hess)
    }
}

/// Catmull-Rom weights for nodes `i-1..=i+2` at local coordinate `s`, with
/// their first and second derivatives in physical units.
fn catmull_rom(s: f64, h: f64) -> [[f64; 4]; 3] {
    let (s2, s3) = (s * s, s * s * s);
    [
        [
            0.5 * (-s3 + 2.0 * s2 - s),
            0.5 * (3.0 * s3 - 5.0 * s2 + 2.0),
            0.5 * (-3.0 * s3 + 4.0 * s2 + s),
            0.5 * (s3 - s2),
        ],
        [
            0.5 * (-3.0 * s2 + 4.0 * s - 1.0) / h,
            0.5 * (9.0 * s2 - 10.0 * s) / h,
            0.5 * (-9.0 * s2 + 8.0 * s + 1.0) / h,
            0.5 * (3.0 * s2 - 2.0 * s) / h,
        ],
        [
            0.5 * (-6.0 * s + 4.0) / (h * h),
            0.5 * (18.0 * s - 10.0) / (h * h),
            0.5 * (-18.0 * s + 8.0) / (h * h),
            0.5 * (6.0 * s - 2.0) / (h * h),
        ],
    ]
}

/// A field usable by every operation: analytic callbacks or grid samples.
#[derive(Debug, Clone)]
pub enum PotentialField {
    Analytic(Arc<dyn Evaluator>),
    Grid(Arc<GridPotential>),
}

impl PotentialField {
    pub fn analytic<E: Evaluator + 'static>(e: E) -> Self {
        PotentialField::Analytic(Arc::new(e))
    }

    pub fn grid(g: GridPotential) -> Self {
        PotentialField::Grid(Arc::new(g))
    }

    pub fn ball(n: usize) -> Result<Self> {
        Ok(Self::analytic(Ball::new(n)?))
    }

    pub fn hyperboloid(n: usize) -> Result<Self> {
        Ok(Self::analytic(Hyperboloid::new(n)?))
    }

    pub fn quadratic(n: usize, c0: f64, a: f64, role: Role, domain: Option<ConvexDomain>) -> Result<Self> {
        Ok(Self::analytic(Quadratic::new(n, c0, a, role, domain)?))
    }

    pub fn polynomial(n: usize, coefficients: &[f64], role: Role, domain: Option<ConvexDomain>) -> Result<Self> {
        Ok(Self::analytic(Polynomial::new(n, coefficients, role, domain)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            PotentialField::Analytic(e) => e.dim(),
            PotentialField::Grid(g) => g.grid().dim(),
        }
    }

    pub fn role(&self) -> Role {
        match self {
            PotentialField::Analytic(e) => e.role(),
            PotentialField::Grid(g) => g.role(),
        }
    }

    pub fn domain(&self) -> Option<&ConvexDomain> {
        match self {
            PotentialField::Analytic(e) => e.domain(),
            PotentialField::Grid(g) => Some(g.grid().domain()),
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, PotentialField::Analytic(_))
    }

    pub fn as_grid(&self) -> Option<&GridPotential> {
        match self {
            PotentialField::Grid(g) => Some(g),
            PotentialField::Analytic(_) => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            PotentialField::Analytic(e) => e.label(),
            PotentialField::Grid(g) => format!("grid({:?})", g.grid().shape()),
        }
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        t.len() == self.dim() && self.domain().is_none_or(|d| d.contains(t))
    }

    pub fn require_role(&self, role: Role) -> Result<()> {
        if self.role() == role {
            Ok(())
        } else {
            Err(Error::RoleMismatch { expected: role.name(), found: self.role().name() })
        }
    }

    pub fn jet(&self, t: &[f64]) -> Result<Jet> {
        if t.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: t.len() });
        }
        match self {
            PotentialField::Analytic(e) => {
                if !self.contains(t) {
                    return Err(Error::OutsideDomain { point: t.to_vec() });
                }
                e.jet(t)
            }
            PotentialField::Grid(g) => g.jet(t),
        }
    }

    pub fn value(&self, t: &[f64]) -> Result<f64> {
        Ok(self.jet(t)?.value)
    }

    /// Checks the negativity and strict convexity claimed by a `u` field at
    /// the given samples.
    pub fn check_samples(&self, samples: &[Point]) -> Result<()> {
        for s in samples {
            let jet = self.jet(s.as_slice())?;
            if self.role() == Role::PotentialU && !(jet.value < 0.0) {
                return Err(Error::NotNegative { point: s.iter().copied().collect(), value: jet.value });
            }
            let rep = HessianReport::new(jet.hessian);
            if !rep.positive_definite {
                return Err(Error::NotConvex {
                    point: s.iter().copied().collect(),
                    min_eigenvalue: rep.min_eigenvalue(),
                });
            }
        }
        Ok(())
    }
}

/// Built-in potential families selectable from a spec file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinKind {
    Ball,
    Hyperboloid,
    Quadratic,
    Polynomial,
}

impl std::str::FromStr for BuiltinKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ball" => Ok(BuiltinKind::Ball),
            "hyperboloid" => Ok(BuiltinKind::Hyperboloid),
            "quadratic" => Ok(BuiltinKind::Quadratic),
            "polynomial" => Ok(BuiltinKind::Polynomial),
            other => Err(Error::PotentialSpec(format!("unknown builtin '{other}'"))),
        }
    }
}

/// JSON potential specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub builtin: BuiltinKind,
    #[serde(default)]
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub domain: Option<ConvexDomain>,
    pub n: usize,
    #[serde(default)]
    pub role: Option<Role>,
}

impl PotentialSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Builds the field. Quadratic coefficients are `[c0, a]` for
    /// `c0 + a |t|^2`; defaults are `u = -1 + |t|^2/4` on the unit ball.
    pub fn build(&self) -> Result<PotentialField> {
        let n = self.n;
        match self.builtin {
            BuiltinKind::Ball => PotentialField::ball(n),
            BuiltinKind::Hyperboloid => PotentialField::hyperboloid(n),
            BuiltinKind::Quadratic => {
                let (c0, a) = match self.coefficients[..] {
                    [] => (-1.0, 0.25),
                    [c0, a] => (c0, a),
                    _ => return Err(Error::PotentialSpec("quadratic takes coefficients [c0, a]".into())),
                };
                let role = self.role.unwrap_or(Role::PotentialU);
                PotentialField::quadratic(n, c0, a, role, self.domain_for(role)?)
            }
            BuiltinKind::Polynomial => {
                let role = self.role.unwrap_or(Role::PotentialU);
                PotentialField::polynomial(n, &self.coefficients, role, self.domain_for(role)?)
            }
        }
    }

    fn domain_for(&self, role: Role) -> Result<Option<ConvexDomain>> {
        match (&self.domain, role) {
            (Some(d), _) => Ok(Some(d.clone())),
            (None, Role::PotentialU) => Ok(Some(ConvexDomain::unit_ball(self.n)?)),
            (None, _) => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn check_derivatives(field: &PotentialField, t: &[f64]) {
        let jet = field.jet(t).unwrap();
        let eps = 1e-6;
        for a in 0..t.len() {
            let mut tp = t.to_vec();
            let mut tm = t.to_vec();
            tp[a] += eps;
            tm[a] -= eps;
            let (jp, jm) = (field.jet(&tp).unwrap(), field.jet(&tm).unwrap());
            assert!(((jp.value - jm.value) / (2.0 * eps) - jet.gradient[a]).abs() < 1e-7);
            for b in 0..t.len() {
                let fd = (jp.gradient[b] - jm.gradient[b]) / (2.0 * eps);
                assert!((fd - jet.hessian[(b, a)]).abs() < 1e-6, "{fd} vs {}", jet.hessian[(b, a)]);
            }
        }
    }

    #[test]
    fn builtin_derivatives_are_consistent() {
        check_derivatives(&PotentialField::ball(2).unwrap(), &[0.3, -0.5]);
        check_derivatives(&PotentialField::hyperboloid(2).unwrap(), &[1.3, -0.5]);
        check_derivatives(&PotentialField::hyperboloid(1).unwrap(), &[0.7]);
        let quartic = PotentialField::polynomial(
            2,
            &[0.0, 0.0, 0.0, 0.5, 0.3, 1.0, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 1.0 / 12.0],
            Role::GraphF,
            None,
        )
        .unwrap();
        check_derivatives(&quartic, &[0.4, -0.9]);
    }

    #[test]
    fn graded_lex_order() {
        let e = graded_lex_exponents(2, 6);
        assert_eq!(e, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(graded_lex_exponents(1, 3), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn ball_hessian_at_origin_is_identity() {
        let j = PotentialField::ball(2).unwrap().jet(&[0.0, 0.0]).unwrap();
        assert!(max_abs_diff(&j.hessian, &DMatrix::identity(2, 2)) < 1e-15);
    }

    #[test]
    fn spec_parsing_and_defaults() {
        let s = PotentialSpec::from_json(r#"{"builtin":"quadratic","coefficients":[-1,0.25],"n":2}"#).unwrap();
        let f = s.build().unwrap();
        assert_eq!(f.role(), Role::PotentialU);
        assert!((f.value(&[0.0, 0.0]).unwrap() + 1.0).abs() < 1e-15);
        let s = PotentialSpec::from_json(
            r#"{"builtin":"polynomial","coefficients":[0,0,0,0.5,0,0.5],"n":2,"role":"graph_f"}"#,
        )
        .unwrap();
        assert!(s.build().unwrap().domain().is_none());
        assert!(PotentialSpec::from_json(r#"{"builtin":"cone","n":2}"#).is_err());
    }

    #[test]
    fn outside_domain_is_an_error() {
        let u = PotentialField::ball(2).unwrap();
        assert!(matches!(u.jet(&[1.0, 0.5]), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn grid_reconstruction_of_ball_is_accurate() {
        let d = ConvexDomain::unit_disk();
        let grid = GridSpec::new(&d, 33).unwrap();
        let vals: Vec<f64> = grid.interior_coords().iter().map(|t| -(1.0 - t.norm_squared()).sqrt()).collect();
        let g = GridPotential::new(grid, vals, Role::PotentialU, true).unwrap();
        let exact = PotentialField::ball(2).unwrap();
        for t in [[0.11, 0.23], [0.6, -0.5], [-0.05, 0.97]] {
            let a = g.jet(&t).unwrap();
            let b = exact.jet(&t).unwrap();
            assert!((a.value - b.value).abs() < 1e-10);
            assert!(max_abs_diff(&a.hessian, &b.hessian) < 1e-6 * (1.0 + b.hessian.norm()));
        }
    }
}
