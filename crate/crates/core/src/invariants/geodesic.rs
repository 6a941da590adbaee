use crate::domain::{PotentialField, Role};
use crate::error::{Error, Result};

use super::metric::{metric_from_jet, MetricKind};

/// Relative tolerance of the adaptive quadrature.
pub const QUAD_RTOL: f64 = 1e-8;
const MAX_INTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// One Gauss-Kronrod 7-15 panel: (integral, error estimate).
fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, &x) in XGK[..7].iter().enumerate() {
        let s = f(c - r * x)? + f(c + r * x)?;
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Ok((kron * r, ((kron - gauss) * r).abs()))
}

/// Adaptive G7-K15 quadrature, bisecting the worst panel until the summed
/// error estimate is below `rtol` times the integral.
pub fn integrate<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, rtol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut panels = vec![(a, b, gk15(&mut f, a, b)?)];
    loop {
        let total: f64 = panels.iter().map(|p| p.2 .0).sum();
        let error: f64 = panels.iter().map(|p| p.2 .1).sum();
        if error <= rtol * total.abs() || error <= f64::MIN_POSITIVE {
            return Ok(total);
        }
        if panels.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { estimate: total, error });
        }
        let worst =
            panels.iter().enumerate().max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1)).map(|(i, _)| i).unwrap_or(0);
        let (lo, hi, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            return Err(Error::Quadrature { estimate: total, error });
        }
        panels.push((lo, mid, gk15(&mut f, lo, mid)?));
        panels.push((mid, hi, gk15(&mut f, mid, hi)?));
    }
}

/// Length of `x(z) = base + z y`, `z` in `[z0, z1]`, in the affine metric:
/// the graph metric for `f`, the affine radial metric for a potential.
pub fn segment_length(f: &PotentialField, base: &[f64], y: &[f64], z0: f64, z1: f64) -> Result<f64> {
    let kind = match f.role() {
        Role::GraphF => MetricKind::AffineGraph,
        Role::PotentialU => MetricKind::AffineRadial,
        Role::Scalar => return Err(Error::RoleMismatch { expected: "graph_f or potential_u", found: "scalar" }),
    };
    let n = f.dim();
    if base.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    let at = |z: f64| -> Vec<f64> { base.iter().zip(y).map(|(b, d)| b + z * d).collect() };
    for z in [z0, z1] {
        if !f.contains(&at(z)) {
            return Err(Error::SegmentExitsDomain { z });
        }
    }
    let (lo, hi, sign) = if z0 <= z1 { (z0, z1, 1.0) } else { (z1, z0, -1.0) };
    let integrand = |z: f64| -> Result<f64> {
        let x = at(z);
        let jet = f.jet(&x).map_err(|e| match e {
            Error::OutsideDomain { .. } => Error::SegmentExitsDomain { z },
            other => other,
        })?;
        let g = metric_from_jet(kind, &jet, &x)?;
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += g[(i, j)] * y[i] * y[j];
            }
        }
        Ok(q.max(0.0).sqrt())
    };
    Ok(sign * integrate(integrand, lo, hi, QUAD_RTOL)?)
}

/// Length of the ray segment `x(z) = z y`, `z` in `[z0, z1]`.
pub fn geodesic_length(f: &PotentialField, y: &[f64], z0: f64, z1: f64) -> Result<f64> {
    segment_length(f, &vec![0.0; y.len()], y, z0, z1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperboloid_length_is_arcsinh() {
        let f = PotentialField::hyperboloid(1).unwrap();
        let l = geodesic_length(&f, &[1.0], 0.0, 1.0).unwrap();
        assert!((l - 1.0_f64.asinh()).abs() < 1e-10);
        let d = geodesic_length(&f, &[1.0], 100.0, 1000.0).unwrap();
        assert!((d - (1000.0_f64.asinh() - 100.0_f64.asinh())).abs() < 1e-7);
        assert_eq!(geodesic_length(&f, &[1.0], 0.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn additive_over_pieces() {
        let f = PotentialField::hyperboloid(2).unwrap();
        let y = [0.6, -0.8];
        let whole = geodesic_length(&f, &y, 0.0, 3.0).unwrap();
        let parts = geodesic_length(&f, &y, 0.0, 1.2).unwrap() + geodesic_length(&f, &y, 1.2, 3.0).unwrap();
        assert!((whole - parts).abs() <= 1e-8 * whole);
    }

    #[test]
    fn leaving_the_ball_is_an_error() {
        let u = PotentialField::ball(2).unwrap();
        assert!(matches!(geodesic_length(&u, &[1.0, 0.0], 0.0, 1.5), Err(Error::SegmentExitsDomain { .. })));
        // ball: centroaffine length from 0 to r is artanh(r)
        let l = geodesic_length(&u, &[1.0, 0.0], 0.0, 0.9).unwrap();
        assert!((l - 0.9_f64.atanh()).abs() < 1e-8, "{l}");
    }
}
