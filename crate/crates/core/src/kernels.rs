//! Dirichlet, Fejér and Φ_T kernels, and numeric checks of the identities
//! and bounds they satisfy.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{composite_gauss_legendre, exp_sinh, gauss_kronrod_panels, tanh_sinh_offsets, Tolerance};
use crate::special::{beta as beta_fn, neumaier_sum, sine_integral};
use crate::spectral::{Domain, SpectralDensity};
use crate::toeplitz::fast_m2;

const TWO_PI: f64 = 2.0 * PI;

/// D_T(u) = sin(Tu/2)/(u/2), with D_T(0) = T.
pub fn dirichlet(t: f64, u: f64) -> f64 {
    if u == 0.0 {
        return t;
    }
    (0.5 * t * u).sin() / (0.5 * u)
}

/// F_T(u) = D_T(u)²/(2πT) ≥ 0.
pub fn fejer(t: f64, u: f64) -> f64 {
    let d = dirichlet(t, u);
    d * d / (TWO_PI * t)
}

/// F_T(u) from its triangle-weight representation
/// (1/2π)∫_{−T}^{T}(1 − |s|/T)e^{ius}ds = (1 − cos Tu)/(πTu²).
pub fn fejer_from_triangle(t: f64, u: f64) -> f64 {
    if u == 0.0 {
        return t / TWO_PI;
    }
    (1.0 - (t * u).cos()) / (PI * t * u * u)
}

/// Φ_T(u) = (2π)^{1−m}T^{−1}D_T(u₁)⋯D_T(u_{m−1})D_T(u₁ + ⋯ + u_{m−1}),
/// with m − 1 = `u.len()`.
pub fn phi_t(t: f64, u: &[f64]) -> Result<f64> {
    if u.len() < 2 {
        return Err(Error::InvalidParameter(format!("Phi_T needs m >= 3, got m = {}", u.len() + 1)));
    }
    let m = u.len() as i32 + 1;
    let prod: f64 = u.iter().map(|x| dirichlet(t, *x)).product();
    Ok(TWO_PI.powi(1 - m) / t * prod * dirichlet(t, u.iter().sum()))
}

/// ∫_V^∞ sin²v/v² dv = (1 − cos 2V)/(2V) + π/2 − Si(2V).
fn sinc_square_tail(v: f64) -> f64 {
    (1.0 - (2.0 * v).cos()) / (2.0 * v) + (0.5 * PI - sine_integral(2.0 * v))
}

/// ∫_{|u| ≥ U} F_T(u) du in closed form.
pub fn fejer_tail_exact(t: f64, u: f64) -> f64 {
    // F_T(u)du = sin²v/(πv²)dv with v = Tu/2
    2.0 / PI * sinc_square_tail(0.5 * t * u)
}

/// Zeros 2πk/T of F_T inside (a, b), with the endpoints.
fn fejer_breaks(t: f64, a: f64, b: f64) -> Vec<f64> {
    let step = TWO_PI / t;
    let mut breaks = vec![a];
    let mut k = (a / step).floor() as i64 + 1;
    while (k as f64) * step < b {
        breaks.push(k as f64 * step);
        k += 1;
    }
    breaks.push(b);
    breaks
}

const KERNEL_TOL: Tolerance = Tolerance::new(1e-15, 1e-12);

/// ∫_ℝ F_T by panel quadrature on [−1, 1] and the exact tail beyond.
pub fn fejer_mass(t: f64) -> Result<f64> {
    let inner = gauss_kronrod_panels(|u| fejer(t, u), &fejer_breaks(t, 0.0, 1.0), KERNEL_TOL)?.value;
    Ok(2.0 * inner + fejer_tail_exact(t, 1.0))
}

/// ∫_{|u|≥1} F_T by panel quadrature on [1, U] plus the exact tail beyond U.
pub fn fejer_tail(t: f64) -> Result<f64> {
    let upper = 10.0;
    let mid = gauss_kronrod_panels(|u| fejer(t, u), &fejer_breaks(t, 1.0, upper), KERNEL_TOL)?.value;
    Ok(2.0 * mid + fejer_tail_exact(t, upper))
}

/// T^a ∫_0^1 F_T(u) u^a du.
pub fn fejer_moment(t: f64, a: f64) -> Result<f64> {
    let breaks = fejer_breaks(t, 0.0, 1.0);
    let first = tanh_sinh_offsets(|_, dl, _| fejer(t, dl) * dl.powf(a), breaks[0], breaks[1], KERNEL_TOL)?.value;
    let rest = gauss_kronrod_panels(|u| fejer(t, u) * u.powf(a), &breaks[1..], KERNEL_TOL)?.value;
    Ok(t.powf(a) * (first + rest))
}

/// max over the grid of |D_T(u)| / (2T^δ|u|^{δ−1}); at most 1 when the
/// bound holds.
pub fn dirichlet_bound_ratio(ts: &[f64], us: &[f64], deltas: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for &t in ts {
        for &u in us {
            for &d in deltas {
                let bound = 2.0 * t.powf(d) * u.abs().powf(d - 1.0);
                worst = worst.max(dirichlet(t, u).abs() / bound);
            }
        }
    }
    worst
}

/// max |F_T(u) − (1 − cos Tu)/(πTu²)| / F_T(0) over the grid.
pub fn fejer_dirichlet_identity_error(ts: &[f64], us: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for &t in ts {
        for &u in us {
            let diff = (fejer(t, u) - fejer_from_triangle(t, u)).abs();
            worst = worst.max(diff / (t / TWO_PI));
        }
    }
    worst
}

/// Integrals of Φ_1 (m = 3) over the box [−V, V]². By the change of
/// variables v = Tu, Φ_T(u)du = Φ_1(v)dv, so statements about Φ_T over
/// |u|_∞ ≥ δ become statements about Φ_1 over |v|_∞ ≥ Tδ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiMoments {
    pub half_width: f64,
    /// ∫Φ₁ over the box plus the mass of the three ridges outside it.
    pub mass: f64,
    /// ∫|Φ₁| over the box.
    pub abs_mass: f64,
    /// (threshold c, ∫_{c ≤ |v|_∞ ≤ V}|Φ₁|, ∫_{c ≤ |v|_∞ ≤ V}Φ₁²).
    pub outer: Vec<(f64, f64, f64)>,
}

/// Φ_1 concentrates on the ridges v₁ = 0, v₂ = 0 and v₁ + v₂ = 0. Integrating
/// across a ridge leaves F_1 along it, and the parts of the ridges outside
/// the box carry 3/2 of the two-sided Fejér tail.
fn phi_ridge_tail(v: f64) -> f64 {
    1.5 * fejer_tail_exact(1.0, v)
}

/// Tensor Gauss–Legendre quadrature of Φ_1 on [−V, V]² with unit panels;
/// thresholds must be integers so the regions align with panel edges.
pub fn phi_moments(half_width: usize, thresholds: &[usize]) -> PhiMoments {
    let v = half_width as f64;
    let (x, w) = composite_gauss_legendre(-v, v, 2 * half_width, 8);
    let d: Vec<f64> = x.iter().map(|s| dirichlet(1.0, *s)).collect();
    let scale = 1.0 / (TWO_PI * TWO_PI);
    let n_thr = thresholds.len();
    // per row: [signed, abs, then abs and square per threshold]
    let rows: Vec<Vec<f64>> = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0.0; 2 + 2 * n_thr];
            for j in 0..x.len() {
                let val = scale * d[i] * d[j] * dirichlet(1.0, x[i] + x[j]);
                let wv = w[i] * w[j] * val;
                acc[0] += wv;
                acc[1] += wv.abs();
                let r = x[i].abs().max(x[j].abs());
                for (k, &c) in thresholds.iter().enumerate() {
                    if r >= c as f64 {
                        acc[2 + 2 * k] += wv.abs();
                        acc[3 + 2 * k] += w[i] * w[j] * val * val;
                    }
                }
            }
            acc
        })
        .collect();
    let col = |k: usize| neumaier_sum(rows.iter().map(|r| r[k]));
    PhiMoments {
        half_width: v,
        mass: col(0) + phi_ridge_tail(v),
        abs_mass: col(1),
        outer: thresholds
            .iter()
            .enumerate()
            .map(|(k, &c)| (c as f64, col(2 + 2 * k), col(3 + 2 * k)))
            .collect(),
    }
}

/// I(y) = ∫_ℝ dx / (|x|^α |x + y|^β) by quadrature split at the two
/// singular points.
pub fn lemma1_integral(alpha: f64, beta: f64, y: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0 && alpha + beta > 1.0) {
        return Err(Error::PreconditionViolation(format!(
            "needs 0 < alpha, beta < 1 and alpha + beta > 1, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if y == 0.0 || !y.is_finite() {
        return Err(Error::PreconditionViolation("y must be finite and non-zero".into()));
    }
    // I(y) = I(−y) after x → −x; take y > 0 with singular points at −y and 0
    let y = y.abs();
    let tol = Tolerance::new(1e-300, 1e-12);
    let h = |x: f64| x.abs().powf(-alpha) * (x + y).abs().powf(-beta);
    let mut total = 0.0;
    // [−y, −y/2]: singular at the left end; [−y/2, 0]: at the right end
    total += tanh_sinh_offsets(|_, dl, dr| dl.powf(-beta) * (0.5 * y + dr).powf(-alpha), -y, -0.5 * y, tol)?.value;
    total += tanh_sinh_offsets(|_, dl, dr| dr.powf(-alpha) * (0.5 * y + dl).powf(-beta), -0.5 * y, 0.0, tol)?.value;
    // [0, y] and [−2y, −y]: singular at one end each
    total += tanh_sinh_offsets(|_, dl, _| dl.powf(-alpha) * (dl + y).powf(-beta), 0.0, y, tol)?.value;
    total += tanh_sinh_offsets(|_, _, dr| dr.powf(-beta) * (y + dr).powf(-alpha), -2.0 * y, -y, tol)?.value;
    // tails
    total += exp_sinh(|s| h(y + s), tol)?.value;
    total += exp_sinh(|s| h(-2.0 * y - s), tol)?.value;
    Ok(total)
}

/// I(y)|y|^{α+β−1}, which does not depend on y.
pub fn lemma1_scaling_check(alpha: f64, beta: f64, y: f64) -> Result<f64> {
    Ok(lemma1_integral(alpha, beta, y)? * y.abs().powf(alpha + beta - 1.0))
}

/// The constant C(α, β) = B(1−α, 1−β) + B(1−α, α+β−1) + B(1−β, α+β−1).
pub fn lemma1_constant(alpha: f64, beta: f64) -> f64 {
    let s = alpha + beta - 1.0;
    beta_fn(1.0 - alpha, 1.0 - beta) + beta_fn(1.0 - alpha, s) + beta_fn(1.0 - beta, s)
}

/// (1/T)tr[B_T(h₁)B_T(h₂)] two ways: the O(T) coefficient formula and
/// 2π∫∫h₁(λ)h₂(μ)Φ_T(λ − μ)dλdμ with the discrete Fejér kernel
/// Φ_T(x) = (1/2πT)(sin(Tx/2)/sin(x/2))², evaluated by the periodic
/// trapezoid rule on n points per axis.
pub fn parseval_bridge(h1: &SpectralDensity, h2: &SpectralDensity, t: usize, n: usize) -> Result<(f64, f64)> {
    if h1.domain() != Domain::Circle || h2.domain() != Domain::Circle {
        return Err(Error::MethodMismatch("the discrete bridge needs generators on the circle".into()));
    }
    let fast = fast_m2(&h1.fourier_coefficients(t)?, &h2.fourier_coefficients(t)?);
    let step = TWO_PI / n as f64;
    let grid: Vec<f64> = (0..n).map(|i| -PI + (i as f64 + 0.5) * step).collect();
    let v1: Vec<f64> = grid.iter().map(|l| h1.eval_abs(l.abs())).collect();
    let v2: Vec<f64> = grid.iter().map(|l| h2.eval_abs(l.abs())).collect();
    let tf = t as f64;
    let kernel: Vec<f64> = (0..n)
        .map(|k| {
            let x = k as f64 * step;
            let s = (0.5 * x).sin();
            if s.abs() < 1e-300 {
                tf / TWO_PI
            } else {
                let r = (0.5 * tf * x).sin() / s;
                r * r / (TWO_PI * tf)
            }
        })
        .collect();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| neumaier_sum((0..n).map(|j| v2[j] * kernel[(i + n - j) % n])) * v1[i])
        .collect();
    Ok((fast, TWO_PI * step * step * neumaier_sum(rows)))
}

/// One line of the kernel-check table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelCheck {
    pub name: String,
    pub statement: String,
    pub value: f64,
    pub reference: f64,
    /// |value − reference| for identities; value/reference for bounds.
    pub achieved: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl KernelCheck {
    fn identity(name: &str, statement: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        let achieved = (value - reference).abs();
        KernelCheck {
            name: name.into(),
            statement: statement.into(),
            value,
            reference,
            achieved,
            tolerance,
            passed: achieved <= tolerance,
        }
    }

    fn bound(name: &str, statement: &str, value: f64, bound: f64) -> Self {
        KernelCheck {
            name: name.into(),
            statement: statement.into(),
            value,
            reference: bound,
            achieved: value / bound,
            tolerance: 1.0,
            passed: value <= bound,
        }
    }
}

/// Grids used by the kernel-check suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelCheckGrid {
    pub fejer_ts: Vec<f64>,
    pub phi_half_width: usize,
    pub phi_delta: f64,
    pub phi_ts: Vec<f64>,
}

impl Default for KernelCheckGrid {
    fn default() -> Self {
        KernelCheckGrid {
            fejer_ts: vec![10.0, 100.0, 1000.0, 10000.0],
            phi_half_width: 200,
            phi_delta: 0.5,
            phi_ts: vec![20.0, 200.0],
        }
    }
}

/// Dirichlet-bound grid: 10 values of T, 34 of u and 3 of δ (1020 points).
pub fn dirichlet_grid() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let ts: Vec<f64> = (0..10).map(|i| 10f64.powf(i as f64 * 4.0 / 9.0)).collect();
    let mut us: Vec<f64> = (0..17).map(|i| 10f64.powf(-4.0 + i as f64 * 6.0 / 16.0)).collect();
    let neg: Vec<f64> = us.iter().map(|u| -1.37 * u).collect();
    us.extend(neg);
    (ts, us, vec![0.25, 0.5, 0.75])
}

/// All kernel identities and bounds with their achieved tolerances.
pub fn run_kernel_checks(grid: &KernelCheckGrid) -> Result<Vec<KernelCheck>> {
    let mut out = Vec::new();
    for &t in &grid.fejer_ts {
        out.push(KernelCheck::identity(
            &format!("fejer_mass_T{t}"),
            "integral of F_T over R equals 1",
            fejer_mass(t)?,
            1.0,
            1e-6,
        ));
    }
    let tails: Vec<f64> = grid.fejer_ts.iter().map(|&t| Ok(t * fejer_tail(t)?)).collect::<Result<_>>()?;
    out.push(KernelCheck::bound(
        "fejer_tail",
        "T times the mass of F_T outside [-1, 1] stays bounded (max over the T grid, bound 1)",
        tails.iter().copied().fold(0.0, f64::max),
        1.0,
    ));
    let moments: Vec<f64> = grid.fejer_ts.iter().map(|&t| fejer_moment(t, 0.5)).collect::<Result<_>>()?;
    out.push(KernelCheck::bound(
        "fejer_moment_half",
        "T^(1/2) times the integral of F_T(u) u^(1/2) over [0, 1] stays bounded (max over the T grid, bound 1)",
        moments.iter().copied().fold(0.0, f64::max),
        1.0,
    ));
    let (ts, us, ds) = dirichlet_grid();
    out.push(KernelCheck::bound(
        "dirichlet_bound",
        "|D_T(u)| <= 2 T^delta |u|^(delta - 1) on a 1020-point grid (largest ratio)",
        dirichlet_bound_ratio(&ts, &us, &ds),
        1.0,
    ));
    let ident_us: Vec<f64> = (0..200).map(|i| 0.1 + 0.37 * i as f64).collect();
    let ident_ts: Vec<f64> = vec![1.0, 3.5, 10.0];
    out.push(KernelCheck::identity(
        "fejer_dirichlet_identity",
        "F_T = D_T^2 / (2 pi T) against the triangle-weight form (relative to F_T(0))",
        fejer_dirichlet_identity_error(&ident_ts, &ident_us),
        0.0,
        1e-12,
    ));
    let thresholds: Vec<usize> = grid.phi_ts.iter().map(|t| (t * grid.phi_delta).round() as usize).collect();
    let phi = phi_moments(grid.phi_half_width, &thresholds);
    out.push(KernelCheck::identity("phi_mass", "integral of Phi_T (m = 3) equals 1", phi.mass, 1.0, 1e-4));
    out.push(KernelCheck::bound(
        "phi_abs_mass",
        "integral of |Phi_T| (m = 3) is finite and independent of T (box estimate, bound 10)",
        phi.abs_mass,
        10.0,
    ));
    let outer_abs: Vec<f64> = phi.outer.iter().map(|o| o.1).collect();
    let decreasing = outer_abs.windows(2).all(|w| w[1] < w[0]);
    out.push(KernelCheck {
        name: "phi_outer_decay".into(),
        statement: format!(
            "integral of |Phi_T| outside |u| <= {} decreases from T = {} to T = {}",
            grid.phi_delta,
            grid.phi_ts.first().unwrap_or(&0.0),
            grid.phi_ts.last().unwrap_or(&0.0)
        ),
        value: *outer_abs.last().unwrap_or(&f64::NAN),
        reference: *outer_abs.first().unwrap_or(&f64::NAN),
        achieved: outer_abs.last().unwrap_or(&f64::NAN) / outer_abs.first().unwrap_or(&f64::NAN),
        tolerance: 1.0,
        passed: decreasing,
    });
    let outer_sq: Vec<f64> = phi.outer.iter().zip(&grid.phi_ts).map(|(o, t)| t * t * o.2).collect();
    out.push(KernelCheck::bound(
        "phi_outer_square",
        "integral of |Phi_T|^2 outside |u| <= delta stays bounded in T (max over the T grid, bound 1)",
        outer_sq.iter().copied().fold(0.0, f64::max),
        1.0,
    ));
    let (a, b) = (0.6, 0.6);
    let scaled: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|&y| lemma1_scaling_check(a, b, y)).collect::<Result<_>>()?;
    let spread = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max) - scaled.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(KernelCheck::identity(
        "lemma1_scaling",
        "I(y)|y|^(alpha + beta - 1) is independent of y (alpha = beta = 0.6, spread relative to the mean)",
        spread / scaled[1],
        0.0,
        1e-5,
    ));
    let ar = SpectralDensity::arfima_pdq(0.0, vec![0.5], vec![], TWO_PI)?;
    let ma = SpectralDensity::arfima_pdq(0.0, vec![], vec![0.4], TWO_PI)?;
    let (fast, double) = parseval_bridge(&ar, &ma, 64, 1024)?;
    out.push(KernelCheck::identity(
        "parseval_bridge",
        "coefficient trace formula equals the Fejer-smoothed double integral (relative)",
        double / fast,
        1.0,
        1e-6,
    ));
    Ok(out)
}
