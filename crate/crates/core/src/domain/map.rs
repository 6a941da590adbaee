use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{condition_number, Matrix, Point};

/// Real `(n+1) x (n+1)` matrix acting on homogeneous coordinates `(t, 1)`,
/// normalized to `|det| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMap {
    matrix: Matrix,
    inverse: Matrix,
}

/// Largest condition number accepted before a matrix is treated as singular.
const MAX_CONDITION: f64 = 1e14;

/// Rescales `raw` by `|det raw|^{-1/(n+1)}`.
pub fn normalize_map(raw: &Matrix) -> Result<ProjectiveMap> {
    let (rows, cols) = raw.shape();
    if rows != cols || rows < 2 {
        return Err(Error::MapShape { expected: rows.max(2), rows, cols });
    }
    let det = raw.determinant();
    let condition = condition_number(raw);
    if det == 0.0 || !det.is_finite() || !(condition < MAX_CONDITION) {
        return Err(Error::SingularMap { det, condition });
    }
    let abs_det = det.abs();
    // Already unimodular to rounding: leave the entries alone so that
    // normalization is idempotent.
    let matrix =
        if (abs_det - 1.0).abs() <= 4.0 * f64::EPSILON { raw.clone() } else { raw / abs_det.powf(1.0 / rows as f64) };
    let inverse = matrix.clone().try_inverse().ok_or(Error::SingularMap { det, condition })?;
    Ok(ProjectiveMap { matrix, inverse })
}

impl ProjectiveMap {
    pub fn identity(n: usize) -> Self {
        let m = DMatrix::identity(n + 1, n + 1);
        ProjectiveMap { matrix: m.clone(), inverse: m }
    }

    /// `[[I, b], [0, 1]]`.
    pub fn translation(b: &[f64]) -> Self {
        let n = b.len();
        let mut m = DMatrix::identity(n + 1, n + 1);
        for (i, bi) in b.iter().enumerate() {
            m[(i, n)] = *bi;
        }
        normalize_map(&m).expect("translations are unimodular")
    }

    /// Affine map `t -> L t + b`, normalized.
    pub fn affine(linear: &Matrix, b: &[f64]) -> Result<Self> {
        let n = b.len();
        if linear.shape() != (n, n) {
            return Err(Error::MapShape { expected: n, rows: linear.nrows(), cols: linear.ncols() });
        }
        let mut m = DMatrix::identity(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(linear);
        for (i, bi) in b.iter().enumerate() {
            m[(i, n)] = *bi;
        }
        normalize_map(&m)
    }

    /// Row-major entries, `(n+1)^2` of them.
    pub fn from_row_major(entries: &[f64]) -> Result<Self> {
        let k = (entries.len() as f64).sqrt().round() as usize;
        if k * k != entries.len() || k < 2 {
            return Err(Error::MapShape { expected: k.max(2), rows: entries.len(), cols: 1 });
        }
        normalize_map(&DMatrix::from_row_slice(k, k, entries))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn inverse_matrix(&self) -> &Matrix {
        &self.inverse
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    /// True when the last row is `(0, ..., 0, 1)` up to the normalization scale.
    pub fn is_affine(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| self.matrix[(n, j)] == 0.0)
    }

    fn lift(t: &Point) -> Point {
        let n = t.len();
        let mut h = DVector::zeros(n + 1);
        h.rows_mut(0, n).copy_from(t);
        h[n] = 1.0;
        h
    }

    /// Image `(t~, lambda)` where `A (t, 1) = lambda (t~, 1)`. The caller
    /// decides what to do with `lambda <= 0`.
    pub fn apply(&self, t: &Point) -> (Point, f64) {
        let n = self.dim();
        let h = &self.matrix * Self::lift(t);
        let lambda = h[n];
        (h.rows(0, n) / lambda, lambda)
    }

    /// Preimage `(t, beta)` with `A^{-1} (t~, 1) = beta (t, 1)`; `beta = 1/lambda`.
    pub fn pull_back(&self, t_new: &Point) -> (Point, f64) {
        let n = self.dim();
        let h = &self.inverse * Self::lift(t_new);
        let beta = h[n];
        (h.rows(0, n) / beta, beta)
    }

    /// Jacobian `d t~ / d t` at `t`.
    pub fn jacobian(&self, t: &Point) -> Matrix {
        let n = self.dim();
        let (t_new, lambda) = self.apply(t);
        let block = self.matrix.view((0, 0), (n, n)).into_owned();
        let last = self.matrix.view((n, 0), (1, n)).into_owned();
        (block - &t_new * last) / lambda
    }

    /// `(A^T)^{-1}`, the action on conormal vectors.
    pub fn conormal_action(&self) -> Matrix {
        self.inverse.transpose()
    }

    /// `self` after `other`: `(self * other)(t) = self(other(t))`.
    pub fn compose(&self, other: &ProjectiveMap) -> Result<ProjectiveMap> {
        normalize_map(&(&self.matrix * &other.matrix))
    }

    pub fn inverse(&self) -> ProjectiveMap {
        ProjectiveMap { matrix: self.inverse.clone(), inverse: self.matrix.clone() }
    }
}

impl Serialize for ProjectiveMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> =
            (0..self.matrix.nrows()).map(|i| self.matrix.row(i).iter().copied().collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProjectiveMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        ProjectiveMap::from_row_major(&flat).map_err(serde::de::Error::custom)
    }
}
