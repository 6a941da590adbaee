use nalgebra::{DMatrix, DVector};

pub type Point = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Scale-aware positive-definiteness threshold: `lambda_min > PD_RTOL * (1 + trace)`.
pub const PD_RTOL: f64 = 1e-10;

pub fn point(coords: &[f64]) -> Point {
    DVector::from_column_slice(coords)
}

pub fn to_vec(p: &Point) -> Vec<f64> {
    p.iter().copied().collect()
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.nrows();
    let mut ev: Vec<f64> = match n {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        2 => {
            let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
            let mean = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            vec![mean - rad, mean + rad]
        }
        _ => m.clone().symmetric_eigen().eigenvalues.iter().copied().collect(),
    };
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

pub fn is_positive_definite(m: &Matrix) -> bool {
    let ev = sym_eigenvalues(m);
    match ev.first() {
        Some(&min) => min > PD_RTOL * (1.0 + m.trace().abs()),
        None => false,
    }
}

/// `log det` of a symmetric positive-definite matrix via Cholesky, `None`
/// when the factorization fails.
pub fn log_det_pd(m: &Matrix) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let l = chol.l();
    let mut s = 0.0;
    for i in 0..l.nrows() {
        s += l[(i, i)].ln();
    }
    Some(2.0 * s)
}

pub fn condition_number(m: &Matrix) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    max_abs(&(a - b))
}

pub fn vec_max_abs_diff(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Eigenvalue summary attached to Hessian evaluations.
#[derive(Debug, Clone)]
pub struct HessianReport {
    pub matrix: Matrix,
    pub eigenvalues: Vec<f64>,
    pub positive_definite: bool,
}

impl HessianReport {
    pub fn new(matrix: Matrix) -> Self {
        let sym = 0.5 * (&matrix + matrix.transpose());
        let eigenvalues = sym_eigenvalues(&sym);
        let positive_definite = is_positive_definite(&sym);
        HessianReport { matrix: sym, eigenvalues, positive_definite }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_matches_determinant() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 3.0]);
        assert!((log_det_pd(&m).unwrap() - m.determinant().ln()).abs() < 1e-14);
        let neg = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        assert!(log_det_pd(&neg).is_none());
    }

    #[test]
    fn closed_form_eigenvalues_match_nalgebra() {
        let m = DMatrix::from_row_slice(2, 2, &[1.3, -0.4, -0.4, 0.2]);
        let ours = sym_eigenvalues(&m);
        let mut theirs: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(|a, b| a.total_cmp(b));
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_matrix_is_not_positive_definite() {
        assert!(!is_positive_definite(&DMatrix::zeros(2, 2)));
        assert!(is_positive_definite(&DMatrix::identity(2, 2)));
    }
}
