//! Piecewise Chebyshev cache of a covariance function r(t) on [0, T_max].
//! Intervals are bisected until the trailing Chebyshev coefficients fall
//! below the tolerance, which grades the mesh towards the non-smooth point
//! t = 0 automatically.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::{Domain, SpectralDensity};

/// Polynomial degree on each interval.
const DEGREE: usize = 16;
/// Absolute accuracy, relative to |r(0)|, targeted by the cache.
pub const COVARIANCE_TOL: f64 = 1e-8;
/// Bisection depth limit; intervals narrower than T_max·2^{−MAX_DEPTH} are
/// accepted as they are.
const MAX_DEPTH: u32 = 48;

#[derive(Debug, Clone)]
struct Piece {
    a: f64,
    b: f64,
    coeffs: [f64; DEGREE + 1],
}

impl Piece {
    fn eval(&self, t: f64) -> f64 {
        let x = (2.0 * t - self.a - self.b) / (self.b - self.a);
        clenshaw(&self.coeffs, x)
    }
}

/// r(t) = ĥ(t) for a density on the line, tabulated for |t| ≤ T_max.
#[derive(Debug, Clone)]
pub struct CovarianceTable {
    pieces: Vec<Piece>,
    t_max: f64,
    r0: f64,
}

impl CovarianceTable {
    pub fn build(f: &SpectralDensity, t_max: f64) -> Result<Self> {
        if f.domain() != Domain::Line {
            return Err(Error::MethodMismatch("covariance tables are built for densities on the line".into()));
        }
        CovarianceTable::from_fn(|t| f.fourier_transform(t), t_max, COVARIANCE_TOL)
    }

    /// Table of an arbitrary even function given on [0, t_max].
    pub fn from_fn<F>(r: F, t_max: f64, tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("table horizon {t_max} must be positive and finite")));
        }
        let r0 = r(0.0)?;
        let scale = r0.abs().max(f64::MIN_POSITIVE);
        let min_width = t_max * 2f64.powi(-(MAX_DEPTH as i32));
        let mut pending = vec![(0.0, t_max)];
        let mut pieces = Vec::new();
        while !pending.is_empty() {
            let fitted: Vec<Result<(f64, f64, [f64; DEGREE + 1], f64)>> = pending
                .par_iter()
                .map(|&(a, b)| {
                    let coeffs = chebyshev_fit(&r, a, b)?;
                    // the trailing coefficients alone underestimate the error
                    // next to an endpoint singularity, so check the endpoints
                    let tail = coeffs[DEGREE - 1].abs() + coeffs[DEGREE].abs();
                    let ends = (clenshaw(&coeffs, -1.0) - r(a)?).abs().max((clenshaw(&coeffs, 1.0) - r(b)?).abs());
                    Ok((a, b, coeffs, tail.max(ends)))
                })
                .collect();
            let mut next = Vec::new();
            for item in fitted {
                let (a, b, coeffs, err) = item?;
                if err <= tol * scale || b - a <= min_width {
                    pieces.push(Piece { a, b, coeffs });
                } else {
                    let mid = 0.5 * (a + b);
                    next.push((a, mid));
                    next.push((mid, b));
                }
            }
            pending = next;
        }
        pieces.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap());
        Ok(CovarianceTable { pieces, t_max, r0 })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Interval endpoints of the polynomial pieces.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.pieces.iter().map(|p| p.b)
    }

    /// r(t) for |t| ≤ T_max.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            return self.r0;
        }
        assert!(t <= self.t_max * (1.0 + 1e-12), "lag {t} beyond the table horizon {}", self.t_max);
        let i = self.pieces.partition_point(|p| p.b < t).min(self.pieces.len() - 1);
        self.pieces[i].eval(t.min(self.t_max))
    }
}

/// Chebyshev coefficients of r on [a, b] from its values at the
/// Chebyshev–Gauss points.
fn chebyshev_fit<F: Fn(f64) -> Result<f64>>(r: &F, a: f64, b: f64) -> Result<[f64; DEGREE + 1]> {
    let n = DEGREE + 1;
    let mut values = [0.0; DEGREE + 1];
    for (j, v) in values.iter_mut().enumerate() {
        let x = (PI * (j as f64 + 0.5) / n as f64).cos();
        *v = r(0.5 * (a + b) + 0.5 * (b - a) * x)?;
    }
    let mut coeffs = [0.0; DEGREE + 1];
    for (k, c) in coeffs.iter_mut().enumerate() {
        let s: f64 = values
            .iter()
            .enumerate()
            .map(|(j, v)| v * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos())
            .sum();
        *c = 2.0 * s / n as f64;
    }
    coeffs[0] *= 0.5;
    Ok(coeffs)
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + x * b1 - b2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_exponential_covariance() {
        let table = CovarianceTable::from_fn(|t| Ok((-t).exp()), 20.0, 1e-10).unwrap();
        for i in 0..=400 {
            let t = 20.0 * i as f64 / 400.0;
            assert!((table.eval(t) - (-t).exp()).abs() < 1e-9);
            assert_eq!(table.eval(-t), table.eval(t));
        }
    }

    #[test]
    fn grades_towards_a_kink_at_the_origin() {
        let table = CovarianceTable::from_fn(|t| Ok(1.0 - t.powf(1.2)), 1.0, 1e-8).unwrap();
        for t in [1e-9, 1e-6, 1e-3, 0.3, 0.99] {
            assert!((table.eval(t) - (1.0 - t.powf(1.2))).abs() < 1e-7, "{t}");
        }
        let narrowest = table.pieces.iter().map(|p| p.b - p.a).fold(f64::INFINITY, f64::min);
        assert!(narrowest < 1e-2 && table.len() > 5, "{narrowest} {}", table.len());
    }

    #[test]
    fn frbm_table_matches_direct_transform() {
        let f = SpectralDensity::frbm(1.0, 0.1, 1.0).unwrap();
        let table = CovarianceTable::build(&f, 50.0).unwrap();
        for t in [0.0, 0.01, 0.7, 3.3, 17.0, 49.9] {
            let direct = f.fourier_transform(t).unwrap();
            assert!((table.eval(t) - direct).abs() < 1e-7 * f.integral().unwrap(), "{t}");
        }
    }
}
