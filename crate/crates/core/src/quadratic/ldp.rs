use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::golden_section_max;
use crate::spectral::{integrate_half, Domain, SpectralDensity};

/// Distance kept from the pole of V at y = 1/(2C), relative to 1/(2C).
const EDGE: f64 = 1e-9;
/// Beyond this |y| the supremum is taken to be at infinity.
const FAR: f64 = 1e12;

/// The limiting cumulant generating function
/// V(y) = −(1/4π)∫log(1 − 2y f g) of Q_T/T and its Legendre transform.
#[derive(Debug, Clone)]
pub struct LdpRate {
    f: SpectralDensity,
    g: SpectralDensity,
    /// ess sup f|g|.
    pub sup: f64,
    /// Effective domain (lower, upper) of V; ±∞ when unbounded.
    pub lower: f64,
    pub upper: f64,
    breaks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdpPoint {
    pub x: f64,
    /// I(x), or `None` where it is +∞.
    pub rate: Option<f64>,
    pub argmax: Option<f64>,
}

impl LdpRate {
    pub fn new(f: &SpectralDensity, g: &SpectralDensity) -> Result<Self> {
        if f.domain() != g.domain() {
            return Err(Error::DimensionMismatch("f and g live on different domains".into()));
        }
        if let (Some((af, _)), Some((ag, _))) = (f.singularity(), g.singularity()) {
            if af.max(0.0) + ag.max(0.0) > 0.0 && af + ag > 0.0 {
                return Err(Error::PreconditionViolation(format!(
                    "f g behaves like |lambda|^-{} at the origin and is not essentially bounded",
                    af + ag
                )));
            }
        }
        let upper_lambda = if f.domain() == Domain::Circle { PI } else { 1e3 };
        let mut grid: Vec<f64> = (1..=4096).map(|i| upper_lambda * i as f64 / 4096.0).collect();
        grid.extend((1..=60).map(|k| upper_lambda * 2f64.powi(-k)));
        let products: Vec<f64> = grid.iter().map(|x| f.eval_abs(*x) * g.eval_abs(*x)).collect();
        let hi = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = products.iter().copied().fold(f64::INFINITY, f64::min);
        if !hi.is_finite() || !lo.is_finite() {
            return Err(Error::PreconditionViolation("f g is not essentially bounded".into()));
        }
        let mut breaks = f.breakpoints();
        breaks.extend(g.breakpoints());
        Ok(LdpRate {
            f: f.clone(),
            g: g.clone(),
            sup: hi.abs().max(lo.abs()),
            lower: if lo < 0.0 { 1.0 / (2.0 * lo) } else { f64::NEG_INFINITY },
            upper: if hi > 0.0 { 1.0 / (2.0 * hi) } else { f64::INFINITY },
            breaks,
        })
    }

    fn integrate(&self, h: impl Fn(f64) -> f64) -> Result<f64> {
        let upper = if self.f.domain() == Domain::Circle { PI } else { f64::INFINITY };
        Ok(2.0 * integrate_half(&h, upper, self.breaks.clone())?)
    }

    fn in_domain(&self, y: f64) -> Result<()> {
        if y <= self.lower || y >= self.upper {
            return Err(Error::PreconditionViolation(format!(
                "y = {y} lies outside the domain ({}, {}) of V",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    /// V(y).
    pub fn v(&self, y: f64) -> Result<f64> {
        self.in_domain(y)?;
        let s = self.integrate(|x| (-2.0 * y * self.f.eval_abs(x) * self.g.eval_abs(x)).ln_1p())?;
        Ok(-s / (4.0 * PI))
    }

    /// V′(y) = (1/2π)∫f g/(1 − 2y f g).
    pub fn v_prime(&self, y: f64) -> Result<f64> {
        self.in_domain(y)?;
        let s = self.integrate(|x| {
            let p = self.f.eval_abs(x) * self.g.eval_abs(x);
            p / (1.0 - 2.0 * y * p)
        })?;
        Ok(s / (2.0 * PI))
    }

    /// The law-of-large-numbers limit V′(0) = (1/2π)∫f g, where I vanishes.
    pub fn mean(&self) -> Result<f64> {
        self.v_prime(0.0)
    }

    /// I(x) = sup_y {xy − V(y)} with its maximiser, or `None` when the
    /// supremum is +∞.
    pub fn rate(&self, x: f64) -> Result<(Option<f64>, Option<f64>)> {
        // the objective is concave; push each end out until it slopes inwards
        let lo = if self.lower.is_finite() {
            self.lower * (1.0 - EDGE)
        } else {
            let mut y = 1.0;
            while x - self.v_prime(-y)? <= 0.0 {
                y *= 4.0;
                if y > FAR {
                    return Ok((None, None));
                }
            }
            -y
        };
        let hi = if self.upper.is_finite() {
            self.upper * (1.0 - EDGE)
        } else {
            let mut y = 1.0;
            while x - self.v_prime(y)? >= 0.0 {
                y *= 4.0;
                if y > FAR {
                    return Ok((None, None));
                }
            }
            y
        };
        let objective = |y: f64| x * y - self.v(y).unwrap_or(f64::NAN);
        let (arg, best) = golden_section_max(objective, lo, hi, 1e-13 * (hi - lo));
        if !best.is_finite() {
            return Err(Error::AccuracyFailure { achieved: f64::INFINITY, requested: 0.0 });
        }
        // y = 0 gives xy − V = 0, so I ≥ 0
        Ok((Some(best.max(0.0)), Some(arg)))
    }
}

/// Table of (x, I(x)) over `xs`.
pub fn ldp_rate_function(f: &SpectralDensity, g: &SpectralDensity, xs: &[f64]) -> Result<Vec<LdpPoint>> {
    let problem = LdpRate::new(f, g)?;
    xs.iter()
        .map(|&x| {
            let (rate, argmax) = problem.rate(x)?;
            Ok(LdpPoint { x, rate, argmax })
        })
        .collect()
}
