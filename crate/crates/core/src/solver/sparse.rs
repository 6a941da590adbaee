use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Square sparse matrix in coordinate form; duplicates are summed.
#[derive(Debug, Clone, Default)]
pub struct Coo {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Coo {
    pub fn new(n: usize) -> Self {
        Coo { n, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        self.entries.push((row, col, val));
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// Sorted entries with duplicates merged, so factorization input does
    /// not depend on assembly order.
    fn merged(&self) -> Vec<Triplet<usize, usize, f64>> {
        let mut e = self.entries.clone();
        e.sort_by_key(|a| (a.1, a.0));
        let mut out: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(e.len());
        for (r, c, v) in e {
            match out.last_mut() {
                Some(t) if t.row == r && t.col == c => t.val += v,
                _ => out.push(Triplet::new(r, c, v)),
            }
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `A x = b` by sparse LU with up to three rounds of iterative
/// refinement; fails unless `|b - A x| <= rtol |b|`.
pub fn solve(a: &Coo, b: &[f64], rtol: f64) -> Result<Vec<f64>> {
    let n = a.n;
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &a.merged())
        .map_err(|e| Error::LinearSolve(format!("assembly: {e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| Error::LinearSolve(format!("factorization: {e:?}")))?;
    let apply = |rhs: &[f64]| -> Vec<f64> {
        let col = Col::<f64>::from_fn(n, |i| rhs[i]);
        let sol = lu.solve(&col);
        (0..n).map(|i| sol[i]).collect()
    };
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = apply(b);
    let mut rel = f64::INFINITY;
    for _ in 0..4 {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        rel = norm(&r) / bnorm;
        if !rel.is_finite() {
            break;
        }
        if rel <= rtol {
            return Ok(x);
        }
        let dx = apply(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    Err(Error::LinearSolve(format!("relative residual {rel:e} above {rtol:e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_system() {
        let n = 50;
        let mut a = Coo::new(n);
        for i in 0..n {
            a.push(i, i, 2.0);
            if i > 0 {
                a.push(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.push(i, i + 1, -0.5);
                a.push(i, i + 1, -0.5);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.matvec(&x);
        let y = solve(&a, &b, 1e-12).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_system_fails() {
        let mut a = Coo::new(2);
        a.push(0, 0, 1.0);
        a.push(0, 1, 1.0);
        a.push(1, 0, 1.0);
        a.push(1, 1, 1.0);
        assert!(solve(&a, &[1.0, 0.0], 1e-10).is_err());
    }
}
