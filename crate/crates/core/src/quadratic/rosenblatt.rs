//! Second moment of the non-central limit Q(t) = ∫∫″K_t dZ dZ.
//!
//! Writing (e^{itw} − 1)/(iw) = ∫_0^t e^{isw}ds and integrating the spectral
//! variables out with ∫|x|^{−γ}e^{iwx}dx = c_γ|w|^{γ−1},
//! c_γ = 2Γ(1−γ)sin(πγ/2), gives
//!
//!   ∫|K_t|² = c_α²c_β² tr[(A_β A_α)²],   A_γ(s, r) = |s − r|^{γ−1} on L²[0, t],
//!
//! a ring of four points. The kernel of the product,
//! M(s, s′) = ∫_0^t |s − r|^{β−1}|r − s′|^{α−1}dr, is a one-dimensional
//! integral with its singularities at the ends of its pieces, and the trace
//! is the double integral of M(s, s′)M(s′, s). The ring is homogeneous of
//! degree 2(α + β) in t, so it is evaluated on [0, 1] and rescaled. When
//! β = 0 the u-integral is 2πδ and the ring collapses to ∫∫|s−s′|^{2α−2};
//! α = 0 is the same with the roles swapped.

use std::cell::Cell;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{tanh_sinh_best, Integral, Tolerance};
use crate::special::gamma;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RosenblattMoment {
    pub alpha: f64,
    pub beta: f64,
    pub t: f64,
    /// E Q²(t) = ∫|K_t|².
    pub value: f64,
    pub error_estimate: f64,
}

fn fourier_power_constant(gamma_exp: f64) -> f64 {
    2.0 * gamma(1.0 - gamma_exp) * (0.5 * PI * gamma_exp).sin()
}

const ABS_FLOOR: f64 = 1e-13;
const INNER_TOL: Tolerance = Tolerance::new(ABS_FLOOR, 1e-10);
const MIDDLE_TOL: Tolerance = Tolerance::new(1e-12, 1e-8);
const OUTER_TOL: Tolerance = Tolerance::new(1e-11, 1e-7);
/// Smallest gap |s − s′| integrated numerically on [0, 1].
const GAP_FLOOR: f64 = 1e-10;

pub fn rosenblatt_second_moment(alpha: f64, beta: f64, t: f64) -> Result<RosenblattMoment> {
    if !(alpha < 1.0 && beta < 1.0 && alpha >= 0.0 && beta >= 0.0 && alpha + beta > 0.5) {
        return Err(Error::PreconditionViolation(format!(
            "needs 0 <= alpha, beta < 1 and alpha + beta > 1/2, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t} must be finite and nonnegative")));
    }
    if t == 0.0 {
        return Ok(RosenblattMoment { alpha, beta, t, value: 0.0, error_estimate: 0.0 });
    }
    let (ring, error, scale) = if alpha == 0.0 || beta == 0.0 {
        let g = alpha.max(beta);
        let (v, e) = collapsed_ring(g);
        (v, e, (2.0 * PI * fourier_power_constant(g)).powi(2))
    } else {
        let (v, e) = unit_ring(alpha, beta);
        (v, e, (fourier_power_constant(alpha) * fourier_power_constant(beta)).powi(2))
    };
    let growth = t.powf(2.0 * (alpha + beta));
    Ok(RosenblattMoment { alpha, beta, t, value: scale * growth * ring, error_estimate: scale * growth * error })
}

/// ∫∫_{[0,1]²}|s−s′|^{2γ−2} = 2∫_0^1 (1 − c)c^{2γ−2}dc.
fn collapsed_ring(g: f64) -> (f64, f64) {
    let r = tanh_sinh_best(|_, dl, dr| dr * dl.powf(2.0 * g - 2.0), 0.0, 1.0, INNER_TOL);
    (2.0 * r.value, 2.0 * r.error)
}

/// tr[(A_β A_α)²] on L²[0, 1].
fn unit_ring(alpha: f64, beta: f64) -> (f64, f64) {
    let worst_rel = Cell::new(0.0f64);
    // pieces that met their absolute floor carry no information about the
    // relative accuracy of the whole
    let note = |r: Integral| {
        if r.error > ABS_FLOOR && r.value.abs() > r.error {
            worst_rel.set(worst_rel.get().max(r.error / r.value.abs()));
        }
        r.value
    };
    // ∫_0^len g(x)dx for g singular at 0 and nearly singular on the scale d:
    // [0, d] directly, the rest in the variable ln x where g is smooth
    let graded = |g: &dyn Fn(f64) -> f64, len: f64, d: f64| -> f64 {
        let first = d.min(len);
        let mut total = note(tanh_sinh_best(|_, dl, _| g(dl), 0.0, first, INNER_TOL));
        if len > d {
            let log_part = tanh_sinh_best(|v, _, _| g(v.exp()) * v.exp(), d.ln(), len.ln(), INNER_TOL);
            total += note(log_part);
        }
        total
    };
    // M(s, s + d) and M(s + d, s) over the pieces r < s, s < r < s + d and
    // r > s + d, written in the distance x from the nearer of s, s + d
    let product_kernels = |s: f64, d: f64| -> f64 {
        let rest = 1.0 - s - d;
        let mid = tanh_sinh_best(|_, dl, dr| dl.powf(beta - 1.0) * dr.powf(alpha - 1.0), 0.0, d, INNER_TOL);
        let mid_swapped = tanh_sinh_best(|_, dl, dr| dr.powf(beta - 1.0) * dl.powf(alpha - 1.0), 0.0, d, INNER_TOL);
        let fwd = graded(&|x| x.powf(beta - 1.0) * (d + x).powf(alpha - 1.0), s, d)
            + note(mid)
            + graded(&|x| (d + x).powf(beta - 1.0) * x.powf(alpha - 1.0), rest, d);
        let bwd = graded(&|x| (d + x).powf(beta - 1.0) * x.powf(alpha - 1.0), s, d)
            + note(mid_swapped)
            + graded(&|x| x.powf(beta - 1.0) * (d + x).powf(alpha - 1.0), rest, d);
        fwd * bwd
    };
    // for a fixed gap d, integrate over the position s ∈ [0, 1 − d]
    let along = |d: f64| -> f64 {
        let r = tanh_sinh_best(|s, _, _| product_kernels(s, d), 0.0, 1.0 - d, MIDDLE_TOL);
        note(r)
    };
    // the integrand is symmetric in (s, s′), so twice the half s < s′; below
    // GAP_FLOOR the gap integrand is its leading power d^{2(α+β)−2}
    let outer = tanh_sinh_best(|x, _, _| along(x), GAP_FLOOR, 1.0, OUTER_TOL);
    let power = 2.0 * (alpha + beta) - 1.0;
    let tail = along(GAP_FLOOR) * GAP_FLOOR / power;
    let value = 2.0 * (outer.value + tail);
    (value, 2.0 * outer.error + value.abs() * worst_rel.get())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_horizon_and_preconditions() {
        assert_eq!(rosenblatt_second_moment(0.6, 0.0, 0.0).unwrap().value, 0.0);
        assert!(rosenblatt_second_moment(0.2, 0.2, 1.0).is_err());
        assert!(rosenblatt_second_moment(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn collapsed_ring_matches_closed_form() {
        let (a, t) = (0.6, 1.3);
        let m = rosenblatt_second_moment(a, 0.0, t).unwrap();
        let ring = 2.0 * t.powf(2.0 * a) / ((2.0 * a - 1.0) * 2.0 * a);
        let want = (2.0 * PI * fourier_power_constant(a)).powi(2) * ring;
        assert!((m.value - want).abs() < 1e-8 * want, "{} vs {want}", m.value);
        let swapped = rosenblatt_second_moment(0.0, a, t).unwrap();
        assert_eq!(swapped.value, m.value);
    }

    /// Galerkin matrix of |s − r|^{γ−1} on n cells of [0, 1]: cell-pair
    /// integrals divided by the cell width.
    fn cell_kernel(g: f64, n: usize) -> Vec<f64> {
        let h = 1.0 / n as f64;
        let p = |k: f64| k.abs().powf(g + 1.0);
        (0..n)
            .map(|k| {
                let k = k as f64;
                h.powf(g) * (p(k + 1.0) - 2.0 * p(k) + p(k - 1.0)) / (g * (g + 1.0))
            })
            .collect()
    }

    #[test]
    fn ring_matches_extrapolated_galerkin_traces() {
        for (a, b) in [(0.6, 0.1), (0.3, 0.6)] {
            let levels: Vec<f64> =
                [128, 256, 512].iter().map(|&n| super::super::trace_square(&cell_kernel(b, n), &cell_kernel(a, n))).collect();
            let (x0, x1, x2) = (levels[0], levels[1], levels[2]);
            let limit = x2 - (x2 - x1).powi(2) / ((x2 - x1) - (x1 - x0));
            let (ring, _) = unit_ring(a, b);
            assert!((ring - limit).abs() < 1e-3 * limit, "({a}, {b}): {ring} vs {limit}");
        }
    }

    #[test]
    fn moment_is_symmetric_and_homogeneous() {
        let m = rosenblatt_second_moment(0.3, 0.6, 1.0).unwrap();
        let swapped = rosenblatt_second_moment(0.6, 0.3, 1.0).unwrap();
        assert!((m.value - swapped.value).abs() < 1e-6 * m.value);
        let doubled = rosenblatt_second_moment(0.3, 0.6, 2.0).unwrap();
        assert!((doubled.value / m.value - 2f64.powf(1.8)).abs() < 1e-12);
        assert!(m.error_estimate < 1e-5 * m.value);
    }

    #[test]
    fn fourier_power_constant_matches_quadrature() {
        // ∫|x|^{-γ}cos(x)dx over the line, by the closed form at w = 1
        let g = 0.4;
        let direct = 2.0 * gamma(1.0 - g) * (PI * (1.0 - g) / 2.0).cos();
        assert!((fourier_power_constant(g) - direct).abs() < 1e-14);
    }
}
