//! Parametric spectral densities and generating functions on the circle
//! (−π, π] or on the real line, with their Fourier coefficients / transforms,
//! closed-form integrals and memory classification.

use std::f64::consts::{FRAC_PI_4, PI};

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::quadrature::{exp_sinh, gauss_kronrod, tanh_sinh_offsets, Integral, Tolerance};
use crate::special::{beta as beta_fn, gamma};

const TWO_PI: f64 = 2.0 * PI;

/// Relative accuracy requested from every quadrature in this module.
pub const QUAD_REL_TOL: f64 = 1e-10;
/// Relaxed accuracy accepted (with a warning) when the strict target fails.
pub const QUAD_FALLBACK_REL_TOL: f64 = 1e-8;

/// Number of dyadic panels considered for the piecewise-dyadic densities.
const DYADIC_MAX_PANELS: u32 = 1000;

fn default_fgn_terms() -> usize {
    200
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// The circle 𝕋 = (−π, π].
    Circle,
    /// The real line ℝ.
    Line,
}

impl Domain {
    pub fn label(&self) -> &'static str {
        match self {
            Domain::Circle => "circle",
            Domain::Line => "line",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemoryClass {
    ShortMemory,
    LongMemory,
    AntiPersistent,
    Mixed,
}

/// A density term carrying a real weight, used by [`DensityKind::Sum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedDensity {
    pub weight: f64,
    pub density: SpectralDensity,
}

/// The parametric families. Parameter names follow the usual conventions:
/// `sigma2` is the innovation variance, `d` the fractional differencing
/// order, `hurst` the Hurst index, `alpha`/`beta` the fRBm exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityKind {
    /// h(λ) = c.
    Constant { c: f64 },
    /// σ²/(2π)·|1 − e^{iλ}|^{−2d}.
    Arfima0d0 { sigma2: f64, d: f64 },
    /// σ²/(2π)·|Θ(e^{−iλ})|²/|Φ(e^{−iλ})|²·|1 − e^{iλ}|^{−2d} with
    /// Φ(z) = 1 − Σ φ_j z^j and Θ(z) = 1 + Σ θ_j z^j.
    ArfimaPdq {
        d: f64,
        #[serde(default)]
        ar: Vec<f64>,
        #[serde(default)]
        ma: Vec<f64>,
        sigma2: f64,
    },
    /// Fractional Gaussian noise, c·|1 − e^{iλ}|²·Σ_k |λ + 2πk|^{−2H−1} with
    /// the normalisation making ∫h = σ²; the lattice sum keeps `terms`
    /// images on each side plus an integral tail correction.
    Fgn {
        sigma2: f64,
        hurst: f64,
        #[serde(default = "default_fgn_terms")]
        terms: usize,
    },
    /// Fractional Riesz–Bessel motion, c·|λ|^{−2α}(1 + λ²)^{−β}.
    Frbm { c: f64, alpha: f64, beta: f64 },
    /// |λ|^{−α}·|ln(|λ|/2π)|^{−γ} on the circle. The 2π inside the logarithm
    /// keeps the slowly varying factor bounded on (0, π].
    PowerLogLaw { alpha: f64, gamma: f64 },
    /// Dyadic step function: (2^s/s²)^{1/p} on 2^{−s−1} ≤ |λ| ≤ 2^{−s} for
    /// s ≥ 2 with s ≡ offset (mod 2), zero elsewhere.
    PiecewiseDyadic { p: f64, offset: u32 },
    /// Σ_k a_k cos(kλ), a signed generating function.
    Trigonometric { coeffs: Vec<f64> },
    /// Σ w_i h_i(λ).
    Sum { terms: Vec<WeightedDensity> },
    /// Linear interpolation of `values` on the nonnegative, increasing `grid`,
    /// reflected to negative λ.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

/// A validated density together with its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDensity", into = "RawDensity")]
pub struct SpectralDensity {
    kind: DensityKind,
    domain: Domain,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDensity {
    kind: String,
    #[serde(default)]
    params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<Domain>,
}

impl TryFrom<RawDensity> for SpectralDensity {
    type Error = String;

    fn try_from(raw: RawDensity) -> std::result::Result<Self, String> {
        let tagged = serde_json::json!({ "kind": raw.kind, "params": raw.params });
        let kind: DensityKind = serde_json::from_value(tagged).map_err(|e| e.to_string())?;
        let domain = raw.domain.unwrap_or_else(|| kind.default_domain());
        SpectralDensity::new(kind, domain).map_err(|e| e.to_string())
    }
}

impl From<SpectralDensity> for RawDensity {
    fn from(d: SpectralDensity) -> Self {
        let tagged = serde_json::to_value(&d.kind).expect("density kinds always serialise");
        let kind = tagged["kind"].as_str().unwrap_or_default().to_string();
        RawDensity { kind, params: tagged["params"].clone(), domain: Some(d.domain) }
    }
}

impl DensityKind {
    fn default_domain(&self) -> Domain {
        match self {
            DensityKind::Frbm { .. } => Domain::Line,
            DensityKind::Sum { terms } => terms.first().map(|t| t.density.domain).unwrap_or(Domain::Circle),
            _ => Domain::Circle,
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

fn circle_only(kind: &str, domain: Domain) -> Result<()> {
    check(domain == Domain::Circle, || format!("{kind} is only defined on the circle"))
}

/// Roots of 1 − Σ φ_j z^j must lie outside the unit disc.
fn ar_is_stationary(ar: &[f64]) -> bool {
    let p = ar.len();
    if p == 0 {
        return true;
    }
    // companion matrix of z^p − φ1 z^{p−1} − … − φp; its eigenvalues are the
    // reciprocals of the AR roots
    let mut m = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        m[(0, j)] = ar[j];
    }
    for i in 1..p {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().all(|z| z.norm() < 1.0 - 1e-12)
}

impl SpectralDensity {
    /// Validates parameters and builds the density.
    pub fn new(kind: DensityKind, domain: Domain) -> Result<Self> {
        let finite = |x: f64, name: &str| check(x.is_finite(), || format!("{name} must be finite"));
        match &kind {
            DensityKind::Constant { c } => {
                finite(*c, "c")?;
                circle_only("constant density", domain)?;
            }
            DensityKind::Arfima0d0 { sigma2, d } => {
                circle_only("ARFIMA(0,d,0)", domain)?;
                check(*sigma2 > 0.0, || "sigma2 must be positive".into())?;
                check(*d < 0.5, || format!("d = {d}: the density is not integrable for d >= 1/2"))?;
                check(*d > -1.0, || format!("d = {d}: the process is not invertible for d <= -1"))?;
            }
            DensityKind::ArfimaPdq { d, ar, ma, sigma2 } => {
                circle_only("ARFIMA(p,d,q)", domain)?;
                check(*sigma2 > 0.0, || "sigma2 must be positive".into())?;
                check(*d < 0.5, || format!("d = {d}: the density is not integrable for d >= 1/2"))?;
                check(*d > -1.0, || format!("d = {d}: the process is not invertible for d <= -1"))?;
                check(ar.iter().chain(ma).all(|x| x.is_finite()), || "ARMA coefficients must be finite".into())?;
                check(ar_is_stationary(ar), || "AR polynomial has a root on or inside the unit circle".into())?;
            }
            DensityKind::Fgn { sigma2, hurst, terms } => {
                circle_only("fractional Gaussian noise", domain)?;
                check(*sigma2 > 0.0, || "sigma2 must be positive".into())?;
                check(*hurst > 0.0 && *hurst < 1.0, || format!("Hurst index {hurst} must lie in (0, 1)"))?;
                check(*terms >= 1, || "fGn lattice sum needs at least one term".into())?;
            }
            DensityKind::Frbm { c, alpha, beta } => {
                check(*c > 0.0 && c.is_finite(), || "c must be positive".into())?;
                check(*alpha < 0.5, || format!("alpha = {alpha}: the density is not integrable at 0 for alpha >= 1/2"))?;
                check(*alpha > -0.5, || format!("alpha = {alpha} must exceed -1/2"))?;
                check(*beta >= 0.0, || "beta must be nonnegative".into())?;
                if domain == Domain::Line {
                    check(alpha + beta > 0.5, || {
                        format!("alpha + beta = {}: the density is not integrable at infinity", alpha + beta)
                    })?;
                }
            }
            DensityKind::PowerLogLaw { alpha, gamma } => {
                circle_only("power-log law", domain)?;
                finite(*gamma, "gamma")?;
                check(*alpha < 1.0, || format!("alpha = {alpha}: the density is not integrable for alpha >= 1"))?;
            }
            DensityKind::PiecewiseDyadic { p, offset } => {
                circle_only("piecewise dyadic density", domain)?;
                check(*p >= 1.0, || format!("p = {p} must be at least 1 for integrability"))?;
                check(*offset <= 1, || "offset is a parity and must be 0 or 1".into())?;
            }
            DensityKind::Trigonometric { coeffs } => {
                circle_only("trigonometric polynomial", domain)?;
                check(!coeffs.is_empty(), || "trigonometric polynomial needs coefficients".into())?;
                check(coeffs.iter().all(|x| x.is_finite()), || "coefficients must be finite".into())?;
            }
            DensityKind::Sum { terms } => {
                check(!terms.is_empty(), || "sum needs at least one term".into())?;
                for t in terms {
                    finite(t.weight, "weight")?;
                    check(t.density.domain == domain, || "all summands must share the domain".into())?;
                }
            }
            DensityKind::Tabulated { grid, values } => {
                check(grid.len() >= 2 && grid.len() == values.len(), || {
                    "tabulated density needs matching grid and values of length >= 2".into()
                })?;
                check(grid[0] == 0.0, || "tabulated grid must start at 0".into())?;
                check(grid.windows(2).all(|w| w[1] > w[0]), || "tabulated grid must be increasing".into())?;
                check(values.iter().all(|v| v.is_finite()), || "tabulated values must be finite".into())?;
                if domain == Domain::Circle {
                    check(*grid.last().unwrap() >= PI - 1e-12, || "tabulated grid must cover [0, pi]".into())?;
                }
            }
        }
        Ok(SpectralDensity { kind, domain })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(DensityKind::Constant { c }, Domain::Circle)
    }

    /// The white-noise density 1/(2π), whose Toeplitz matrices are identities.
    pub fn white_noise() -> Self {
        Self::constant(1.0 / TWO_PI).expect("valid constant")
    }

    pub fn arfima(sigma2: f64, d: f64) -> Result<Self> {
        Self::new(DensityKind::Arfima0d0 { sigma2, d }, Domain::Circle)
    }

    pub fn arfima_pdq(d: f64, ar: Vec<f64>, ma: Vec<f64>, sigma2: f64) -> Result<Self> {
        Self::new(DensityKind::ArfimaPdq { d, ar, ma, sigma2 }, Domain::Circle)
    }

    pub fn fgn(sigma2: f64, hurst: f64) -> Result<Self> {
        Self::new(DensityKind::Fgn { sigma2, hurst, terms: default_fgn_terms() }, Domain::Circle)
    }

    pub fn frbm(c: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(DensityKind::Frbm { c, alpha, beta }, Domain::Line)
    }

    pub fn power_log(alpha: f64, gamma: f64) -> Result<Self> {
        Self::new(DensityKind::PowerLogLaw { alpha, gamma }, Domain::Circle)
    }

    pub fn dyadic(p: f64, offset: u32) -> Result<Self> {
        Self::new(DensityKind::PiecewiseDyadic { p, offset }, Domain::Circle)
    }

    pub fn trigonometric(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(DensityKind::Trigonometric { coeffs }, Domain::Circle)
    }

    pub fn sum(terms: Vec<(f64, SpectralDensity)>) -> Result<Self> {
        let domain = terms.first().map(|(_, d)| d.domain).unwrap_or(Domain::Circle);
        let terms = terms.into_iter().map(|(weight, density)| WeightedDensity { weight, density }).collect();
        Self::new(DensityKind::Sum { terms }, domain)
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>, domain: Domain) -> Result<Self> {
        Self::new(DensityKind::Tabulated { grid, values }, domain)
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Upper end of the half-domain [0, λ_max].
    pub fn half_period(&self) -> f64 {
        match self.domain {
            Domain::Circle => PI,
            Domain::Line => f64::INFINITY,
        }
    }

    /// h(λ). Errors at a pole or outside the domain.
    pub fn evaluate(&self, lambda: f64) -> Result<f64> {
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} is not finite")));
        }
        let x = lambda.abs();
        if self.domain == Domain::Circle && x > PI + 1e-12 {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} lies outside (-pi, pi]")));
        }
        if x == 0.0 {
            if let Some((a, g)) = self.singularity() {
                if a > 0.0 || (a == 0.0 && g < 0.0) {
                    return Err(Error::SingularPoint { lambda });
                }
            }
        }
        Ok(self.eval_abs(x))
    }

    /// h at |λ| = x > 0 without validation; infinite at poles.
    pub(crate) fn eval_abs(&self, x: f64) -> f64 {
        match &self.kind {
            DensityKind::Constant { c } => *c,
            DensityKind::Arfima0d0 { sigma2, d } => sigma2 / TWO_PI * arfima_factor(x, *d),
            DensityKind::ArfimaPdq { d, ar, ma, sigma2 } => sigma2 / TWO_PI * arma_ratio(x, ar, ma) * arfima_factor(x, *d),
            DensityKind::Fgn { sigma2, hurst, terms } => fgn_density(x, *sigma2, *hurst, *terms),
            DensityKind::Frbm { c, alpha, beta } => {
                if x == 0.0 {
                    return if *alpha > 0.0 { f64::INFINITY } else if *alpha < 0.0 { 0.0 } else { *c };
                }
                c * x.powf(-2.0 * alpha) * (1.0 + x * x).powf(-beta)
            }
            DensityKind::PowerLogLaw { alpha, gamma } => {
                if x == 0.0 {
                    return if *alpha > 0.0 || (*alpha == 0.0 && *gamma < 0.0) {
                        f64::INFINITY
                    } else if *alpha == 0.0 && *gamma == 0.0 {
                        1.0
                    } else {
                        0.0
                    };
                }
                x.powf(-alpha) * (x / TWO_PI).ln().abs().powf(-gamma)
            }
            DensityKind::PiecewiseDyadic { p, offset } => {
                if x == 0.0 || x > 0.25 {
                    return 0.0;
                }
                // 2^{−s−1} < x ≤ 2^{−s}
                let s = (-x.log2()).floor() as i64;
                if s >= 2 && (s as u32) % 2 == *offset % 2 && s as u32 <= DYADIC_MAX_PANELS {
                    dyadic_height(s as u32, *p)
                } else {
                    0.0
                }
            }
            DensityKind::Trigonometric { coeffs } => {
                coeffs.iter().enumerate().map(|(k, a)| a * (k as f64 * x).cos()).sum()
            }
            DensityKind::Sum { terms } => terms.iter().map(|t| t.weight * t.density.eval_abs(x)).sum(),
            DensityKind::Tabulated { grid, values } => {
                let last = *grid.last().unwrap();
                if x >= last {
                    return if self.domain == Domain::Circle { *values.last().unwrap() } else { 0.0 };
                }
                let i = grid.partition_point(|g| *g <= x).saturating_sub(1);
                let (x0, x1) = (grid[i], grid[i + 1]);
                let w = (x - x0) / (x1 - x0);
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    /// Exponents (a, γ) of the local behaviour h(λ) ≍ |λ|^{−a}|ln|λ||^{−γ} at
    /// the origin, when the family determines them.
    pub fn singularity(&self) -> Option<(f64, f64)> {
        match &self.kind {
            DensityKind::Constant { c } => (*c != 0.0).then_some((0.0, 0.0)),
            DensityKind::Arfima0d0 { d, .. } => Some((2.0 * d, 0.0)),
            DensityKind::ArfimaPdq { d, ma, .. } => {
                let theta_one: f64 = 1.0 + ma.iter().sum::<f64>();
                if theta_one.abs() < 1e-12 {
                    None
                } else {
                    Some((2.0 * d, 0.0))
                }
            }
            DensityKind::Fgn { hurst, .. } => Some((2.0 * hurst - 1.0, 0.0)),
            DensityKind::Frbm { alpha, .. } => Some((2.0 * alpha, 0.0)),
            DensityKind::PowerLogLaw { alpha, gamma } => Some((*alpha, *gamma)),
            DensityKind::PiecewiseDyadic { .. } => None,
            DensityKind::Trigonometric { coeffs } => {
                let at_zero: f64 = coeffs.iter().sum();
                (at_zero != 0.0).then_some((0.0, 0.0))
            }
            DensityKind::Sum { terms } => {
                let mut worst: Option<(f64, f64)> = None;
                for t in terms.iter().filter(|t| t.weight != 0.0) {
                    let s = t.density.singularity()?;
                    worst = Some(match worst {
                        None => s,
                        Some(w) if s.0 > w.0 || (s.0 == w.0 && s.1 < w.1) => s,
                        Some(w) => w,
                    });
                }
                worst
            }
            DensityKind::Tabulated { .. } => None,
        }
    }

    /// Pole exponent a in h(λ) ~ |λ|^{−a} at the origin.
    pub fn pole_exponent(&self) -> Option<f64> {
        self.singularity().map(|(a, _)| a)
    }

    /// Largest p (possibly ∞) with h ∈ L^p, from the local exponent at 0.
    /// Returns `None` when no exponent metadata is available.
    pub fn lp_index(&self) -> Option<f64> {
        let (a, g) = self.singularity()?;
        if a < 0.0 || (a == 0.0 && g >= 0.0) {
            return Some(f64::INFINITY);
        }
        // |λ|^{-a p}|ln|^{-γ p} is integrable iff a p < 1, or a p = 1 with γ p > 1
        Some(1.0 / a.max(f64::MIN_POSITIVE))
    }

    /// Decay exponent δ with h(λ) = O(|λ|^{−δ}) as |λ| → ∞ on the line.
    pub fn decay_exponent(&self) -> Option<f64> {
        match &self.kind {
            DensityKind::Frbm { alpha, beta, .. } => Some(2.0 * (alpha + beta)),
            DensityKind::Sum { terms } => terms
                .iter()
                .map(|t| t.density.decay_exponent())
                .try_fold(f64::INFINITY, |acc, e| e.map(|e| acc.min(e))),
            _ => None,
        }
    }

    /// Breakpoints of the half-domain where the density is not smooth.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            DensityKind::PiecewiseDyadic { .. } => {
                (2..=DYADIC_MAX_PANELS + 1).map(|s| 2f64.powi(-(s as i32))).collect()
            }
            DensityKind::Tabulated { grid, .. } => grid.iter().copied().filter(|g| *g > 0.0).collect(),
            DensityKind::Sum { terms } => terms.iter().flat_map(|t| t.density.breakpoints()).collect(),
            _ => Vec::new(),
        }
    }

    /// Fourier coefficient ĥ(k) = ∫ e^{ikλ} h(λ) dλ over the circle.
    pub fn fourier_coefficient(&self, k: i64) -> Result<f64> {
        if self.domain != Domain::Circle {
            return Err(Error::MethodMismatch("Fourier coefficients require the circle domain".into()));
        }
        let k = k.unsigned_abs() as usize;
        match &self.kind {
            DensityKind::Constant { .. }
            | DensityKind::Arfima0d0 { .. }
            | DensityKind::Fgn { .. }
            | DensityKind::Trigonometric { .. }
            | DensityKind::PiecewiseDyadic { .. }
            | DensityKind::Tabulated { .. } => Ok(self.fourier_coefficients(k + 1)?[k]),
            DensityKind::PowerLogLaw { alpha, gamma } if *gamma == 0.0 => power_coefficient(*alpha, k),
            DensityKind::Sum { terms } => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.weight * t.density.fourier_coefficient(k as i64)?;
                }
                Ok(acc)
            }
            DensityKind::ArfimaPdq { .. } => Ok(self.fourier_coefficients(k + 1)?[k]),
            _ => self.fourier_coefficient_by_quadrature(k as i64),
        }
    }

    /// ĥ(0), …, ĥ(n − 1).
    pub fn fourier_coefficients(&self, n: usize) -> Result<Vec<f64>> {
        if self.domain != Domain::Circle {
            return Err(Error::MethodMismatch("Fourier coefficients require the circle domain".into()));
        }
        match &self.kind {
            DensityKind::Constant { c } => {
                let mut v = vec![0.0; n];
                if n > 0 {
                    v[0] = TWO_PI * c;
                }
                Ok(v)
            }
            DensityKind::Arfima0d0 { sigma2, d } => Ok(arfima_autocovariance(*sigma2, *d, n)),
            DensityKind::ArfimaPdq { d, ar, ma, sigma2 } => arfima_pdq_autocovariance(*sigma2, *d, ar, ma, n),
            DensityKind::Fgn { sigma2, hurst, .. } => Ok((0..n)
                .map(|k| {
                    let k = k as f64;
                    let h2 = 2.0 * hurst;
                    0.5 * sigma2 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
                })
                .collect()),
            DensityKind::Trigonometric { coeffs } => Ok((0..n)
                .map(|k| match (k, coeffs.get(k)) {
                    (0, Some(a)) => TWO_PI * a,
                    (_, Some(a)) => PI * a,
                    _ => 0.0,
                })
                .collect()),
            DensityKind::PiecewiseDyadic { p, offset } => Ok(dyadic_coefficients(*p, *offset, n)),
            DensityKind::PowerLogLaw { alpha, gamma } if *gamma == 0.0 => {
                (0..n).map(|k| power_coefficient(*alpha, k)).collect()
            }
            DensityKind::Tabulated { grid, values } => Ok((0..n).map(|k| tabulated_cosine(grid, values, k as f64, PI)).collect()),
            DensityKind::Sum { terms } => {
                let mut acc = vec![0.0; n];
                for t in terms {
                    for (a, c) in acc.iter_mut().zip(t.density.fourier_coefficients(n)?) {
                        *a += t.weight * c;
                    }
                }
                Ok(acc)
            }
            _ => (0..n).map(|k| self.fourier_coefficient_by_quadrature(k as i64)).collect(),
        }
    }

    /// ĥ(k) by singularity-aware quadrature, ignoring any closed form.
    pub fn fourier_coefficient_by_quadrature(&self, k: i64) -> Result<f64> {
        if self.domain != Domain::Circle {
            return Err(Error::MethodMismatch("Fourier coefficients require the circle domain".into()));
        }
        let k = k.unsigned_abs() as f64;
        let h = |x: f64| self.eval_abs(x) * (k * x).cos();
        let mut breaks = self.breakpoints();
        // panels no longer than a half oscillation keep Kronrod efficient
        let n_osc = (k as usize).max(1);
        for j in 1..n_osc {
            breaks.push(PI * j as f64 / n_osc as f64);
        }
        if n_osc == 1 {
            return Ok(2.0 * integrate_half(&h, PI, breaks)?);
        }
        // half-oscillation panels can cancel almost exactly, so their accuracy
        // is measured against the mass of h rather than their own value
        let mass = self.fourier_coefficient_by_quadrature(0)?.abs();
        let abs_tol = 1e-3 * QUAD_REL_TOL * mass / n_osc as f64;
        Ok(2.0 * integrate_half_with(&h, PI, breaks, abs_tol)?)
    }

    /// r(t) = ∫_ℝ e^{iλt} h(λ) dλ for densities on the line.
    pub fn fourier_transform(&self, t: f64) -> Result<f64> {
        if self.domain != Domain::Line {
            return Err(Error::MethodMismatch("the Fourier transform requires the line domain".into()));
        }
        match &self.kind {
            DensityKind::Frbm { c, alpha, beta } => frbm_covariance(*c, *alpha, *beta, t),
            DensityKind::Sum { terms } => {
                let mut acc = 0.0;
                for term in terms {
                    acc += term.weight * term.density.fourier_transform(t)?;
                }
                Ok(acc)
            }
            DensityKind::Tabulated { grid, values } => {
                Ok(tabulated_cosine(grid, values, t.abs(), *grid.last().unwrap()))
            }
            _ => Err(Error::MethodMismatch("no Fourier transform for this kind on the line".into())),
        }
    }

    /// Covariance at lag t: the Fourier coefficient on the circle (integer
    /// lags) or the Fourier transform on the line.
    pub fn covariance(&self, t: f64) -> Result<f64> {
        match self.domain {
            Domain::Circle => self.fourier_coefficient(t.round() as i64),
            Domain::Line => self.fourier_transform(t),
        }
    }

    /// ∫ h over the domain.
    pub fn integral(&self) -> Result<f64> {
        match (&self.kind, self.domain) {
            (_, Domain::Circle) => self.fourier_coefficient(0),
            (DensityKind::Frbm { c, alpha, beta }, Domain::Line) => Ok(frbm_integral(*c, *alpha, *beta)),
            _ => integrate_product(&[(self, 1.0)]),
        }
    }

    /// Memory class from the behaviour at the origin.
    pub fn classify_memory(&self) -> Result<MemoryClass> {
        match &self.kind {
            DensityKind::Tabulated { .. } => {
                return Err(Error::Unclassifiable("tabulated densities carry no exponent metadata".into()))
            }
            DensityKind::PiecewiseDyadic { .. } => return Ok(MemoryClass::Mixed),
            DensityKind::Trigonometric { .. } => {
                let positive = (0..=512).all(|i| self.eval_abs(PI * i as f64 / 512.0) > 0.0);
                return Ok(if positive { MemoryClass::ShortMemory } else { MemoryClass::Mixed });
            }
            DensityKind::Sum { terms } => {
                if terms.iter().any(|t| t.density.classify_memory().ok() == Some(MemoryClass::Mixed)) {
                    return Ok(MemoryClass::Mixed);
                }
            }
            _ => {}
        }
        let Some((a, g)) = self.singularity() else {
            return Ok(MemoryClass::Mixed);
        };
        Ok(if a > 0.0 || (a == 0.0 && g < 0.0) {
            MemoryClass::LongMemory
        } else if a < 0.0 || (a == 0.0 && g > 0.0) {
            MemoryClass::AntiPersistent
        } else {
            MemoryClass::ShortMemory
        })
    }

    /// Estimates the L^p modulus of continuity ω_p(h, δ) = ‖h(· + δ) − h‖_p
    /// on the dyadic grid δ = 2^{−4}, …, 2^{−10} and fits its log-log slope.
    pub fn lp_modulus_check(&self, p: f64, sigma: f64) -> Result<LpModulus> {
        if p <= 1.0 {
            return Err(Error::PreconditionViolation(format!("p = {p} must exceed 1")));
        }
        if !(sigma > 0.0 && sigma < 1.0 / p) {
            return Err(Error::PreconditionViolation(format!(
                "sigma = {sigma} must lie in (0, 1/p) = (0, {})",
                1.0 / p
            )));
        }
        if let Some(a) = self.pole_exponent() {
            if a > sigma + 1e-12 {
                return Err(Error::PreconditionViolation(format!(
                    "the density grows like |lambda|^-{a}, faster than the envelope exponent {sigma}"
                )));
            }
        }
        let deltas: Vec<f64> = (4..=10).map(|j| 2f64.powi(-j)).collect();
        let mut omegas = Vec::with_capacity(deltas.len());
        for &delta in &deltas {
            omegas.push(self.lp_difference_norm(p, delta)?);
        }
        let slope = if omegas.iter().all(|w| *w == 0.0) {
            None
        } else {
            let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
            let ys: Vec<f64> = omegas.iter().map(|w| w.ln()).collect();
            Some(crate::rate_lab::least_squares(&xs, &ys).slope)
        };
        Ok(LpModulus { p, sigma, deltas, omegas, slope, expected_slope: 1.0 / p - sigma })
    }

    /// ‖h(· + δ) − h‖_p over the domain (periodically on the circle).
    fn lp_difference_norm(&self, p: f64, delta: f64) -> Result<f64> {
        let h = |x: f64| -> f64 {
            let y = match self.domain {
                Domain::Circle => {
                    let mut y = x + delta;
                    if y > PI {
                        y -= TWO_PI;
                    }
                    y
                }
                Domain::Line => x + delta,
            };
            let (a, b) = (self.eval_abs(y.abs()), self.eval_abs(x.abs()));
            if a.is_finite() && b.is_finite() {
                (a - b).abs().powf(p)
            } else {
                0.0
            }
        };
        // singular points at x = 0 and x = −δ; refine geometrically around them
        let mut pts = vec![-delta, 0.0];
        for j in 0..40 {
            let r = delta * 2f64.powi(-j);
            pts.extend([-delta - r, -delta + 0.5 * r, -r * 0.5, r]);
            let big = delta * 2f64.powi(j + 1);
            if big < 2.0 * PI {
                pts.extend([big, -delta - big]);
            }
        }
        let (lo, hi) = match self.domain {
            Domain::Circle => (-PI, PI),
            Domain::Line => (-64.0, 64.0),
        };
        pts.extend(self.breakpoints().iter().flat_map(|b| [*b, -*b, *b - delta, -*b - delta]));
        pts.retain(|x| *x > lo && *x < hi);
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-300);
        let mut total = 0.0;
        for w in pts.windows(2) {
            total += integrate_panel(&h, w[0], w[1], 1e-13)?;
        }
        if self.domain == Domain::Line {
            let right = exp_sinh(|u| h(hi + u), Tolerance::new(1e-16, 1e-8))?.value;
            let left = exp_sinh(|u| h(lo - u), Tolerance::new(1e-16, 1e-8))?.value;
            total += right + left;
        }
        Ok(total.powf(1.0 / p))
    }
}

/// Result of [`SpectralDensity::lp_modulus_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpModulus {
    pub p: f64,
    pub sigma: f64,
    pub deltas: Vec<f64>,
    pub omegas: Vec<f64>,
    /// Fitted log-log slope; `None` when ω vanishes identically.
    pub slope: Option<f64>,
    pub expected_slope: f64,
}

fn arfima_factor(x: f64, d: f64) -> f64 {
    if d == 0.0 {
        return 1.0;
    }
    (2.0 * (0.5 * x).sin()).powf(-2.0 * d)
}

fn arma_ratio(x: f64, ar: &[f64], ma: &[f64]) -> f64 {
    let z = Complex64::from_polar(1.0, -x);
    let mut phi = Complex64::new(1.0, 0.0);
    let mut zj = Complex64::new(1.0, 0.0);
    for a in ar {
        zj *= z;
        phi -= zj * a;
    }
    let mut theta = Complex64::new(1.0, 0.0);
    zj = Complex64::new(1.0, 0.0);
    for b in ma {
        zj *= z;
        theta += zj * b;
    }
    theta.norm_sqr() / phi.norm_sqr()
}

/// Autocovariances γ(0..n) of ARFIMA(0,d,0) with innovation variance σ².
pub fn arfima_autocovariance(sigma2: f64, d: f64, n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n);
    if n == 0 {
        return v;
    }
    let g0 = if d == 0.0 { sigma2 } else { sigma2 * gamma(1.0 - 2.0 * d) / gamma(1.0 - d).powi(2) };
    v.push(g0);
    for k in 1..n {
        let kf = k as f64;
        let prev = v[k - 1];
        v.push(prev * (kf - 1.0 + d) / (kf - d));
    }
    v
}

fn arfima_pdq_autocovariance(sigma2: f64, d: f64, ar: &[f64], ma: &[f64], n: usize) -> Result<Vec<f64>> {
    // Fourier series of the ARMA factor |Θ|²/|Φ|² by the trapezoid rule, which
    // converges geometrically for this analytic periodic function
    let mut m = 256usize;
    let a = loop {
        let coeffs = arma_factor_series(ar, ma, m);
        let tail = coeffs[m / 2 - 8..m / 2].iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        if tail < 1e-17 * coeffs[0].abs() || m >= 1 << 20 {
            break coeffs;
        }
        m *= 2;
    };
    let j_max = a
        .iter()
        .rposition(|c| c.abs() > 1e-18 * a[0].abs())
        .unwrap_or(0)
        .min(m / 2 - 1);
    let g = arfima_autocovariance(sigma2, d, n + j_max + 1);
    Ok((0..n)
        .map(|k| {
            let mut acc = a[0] * g[k];
            for j in 1..=j_max {
                // a_j = a_{−j}; γ is even in its lag
                acc += a[j] * (g[k + j] + g[(k as i64 - j as i64).unsigned_abs() as usize]);
            }
            acc
        })
        .collect())
}

/// a_j = (1/2π)∫ e^{ijλ}|Θ|²/|Φ|² dλ for j = 0..m/2.
fn arma_factor_series(ar: &[f64], ma: &[f64], m: usize) -> Vec<f64> {
    use rustfft::FftPlanner;
    let mut buf: Vec<Complex64> = (0..m)
        .map(|i| Complex64::new(arma_ratio(TWO_PI * i as f64 / m as f64, ar, ma), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    buf.iter().take(m / 2).map(|c| c.re / m as f64).collect()
}

fn fgn_density(x: f64, sigma2: f64, h: f64, terms: usize) -> f64 {
    let c = sigma2 * (PI * h).sin() * gamma(2.0 * h + 1.0) / TWO_PI;
    let s = 2.0 * h + 1.0;
    let one_minus = 2.0 * (1.0 - x.cos());
    if x == 0.0 {
        return if h > 0.5 { f64::INFINITY } else if h < 0.5 { 0.0 } else { c * TWO_PI };
    }
    let mut sum = x.powf(-s);
    for k in 1..=terms {
        let shift = TWO_PI * k as f64;
        sum += (shift + x).powf(-s) + (shift - x).powf(-s);
    }
    // midpoint-rule tail: Σ_{k>K} g(k) ≈ ∫_{K+1/2}^∞ g
    let edge = TWO_PI * (terms as f64 + 0.5);
    sum += ((edge + x).powf(1.0 - s) + (edge - x).powf(1.0 - s)) / (TWO_PI * (s - 1.0));
    c * one_minus * sum
}

fn dyadic_height(s: u32, p: f64) -> f64 {
    let s = s as f64;
    // (2^s / s²)^{1/p}, in logs to stay finite for large s
    ((s * std::f64::consts::LN_2 - 2.0 * s.ln()) / p).exp()
}

fn dyadic_coefficients(p: f64, offset: u32, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let start = if offset % 2 == 0 { 2 } else { 3 };
    let mut s = start;
    while s <= DYADIC_MAX_PANELS {
        let h = dyadic_height(s, p);
        let (a, b) = (2f64.powi(-(s as i32) - 1), 2f64.powi(-(s as i32)));
        let mass = 2.0 * h * (b - a);
        if mass < 1e-18 * out.first().copied().unwrap_or(1.0f64).abs().max(1e-300) && s > start + 20 {
            break;
        }
        for (k, o) in out.iter_mut().enumerate() {
            if k == 0 {
                *o += mass;
            } else {
                let kf = k as f64;
                // 2h ∫_a^b cos(kλ) dλ = 2h·2cos(k(a+b)/2)sin(k(b−a)/2)/k
                *o += 2.0 * h * 2.0 * (0.5 * kf * (a + b)).cos() * (0.5 * kf * (b - a)).sin() / kf;
            }
        }
        s += 2;
    }
    out
}

/// Fourier coefficient of |λ|^{−a} on the circle:
/// ĥ(k) = 2k^{a−1}[Γ(1−a)cos(π(1−a)/2) − ∫_{kπ}^∞ x^{−a}cos x dx].
fn power_coefficient(a: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(2.0 * PI.powf(1.0 - a) / (1.0 - a));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let kf = k as f64;
    let big_x = kf * PI;
    // ∫_X^∞ x^{−a} e^{ix} dx = i e^{iX} ∫_0^∞ (X + iy)^{−a} e^{−y} dy
    let re = exp_sinh(
        |y| {
            let z = Complex64::new(big_x, y).powf(-a) * (-y).exp();
            (Complex64::i() * Complex64::from_polar(1.0, big_x) * z).re
        },
        Tolerance::new(1e-300, 1e-13),
    )?;
    let head = if (1.0 - a).fract() == 0.0 && a >= 1.0 {
        return Err(Error::DivergentIntegral(format!("|lambda|^-{a} is not integrable")));
    } else {
        gamma(1.0 - a) * (0.5 * PI * (1.0 - a)).cos()
    };
    Ok(2.0 * kf.powf(a - 1.0) * (head - re.value))
}

/// 2∫_0^L cos(kλ) h(λ) dλ for the piecewise-linear interpolant.
fn tabulated_cosine(grid: &[f64], values: &[f64], k: f64, upper: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..grid.len() - 1 {
        let (x0, x1) = (grid[i], grid[i + 1].min(upper));
        if x1 <= x0 {
            break;
        }
        let slope = (values[i + 1] - values[i]) / (grid[i + 1] - grid[i]);
        let y0 = values[i] + slope * (x0 - grid[i]);
        let y1 = values[i] + slope * (x1 - grid[i]);
        if k == 0.0 {
            acc += 0.5 * (y0 + y1) * (x1 - x0);
        } else {
            let anti = |x: f64, y: f64| y * (k * x).sin() / k + slope * (k * x).cos() / (k * k);
            acc += anti(x1, y1) - anti(x0, y0);
        }
    }
    2.0 * acc
}

fn frbm_integral(c: f64, alpha: f64, beta: f64) -> f64 {
    c * beta_fn(0.5 - alpha, alpha + beta - 0.5)
}

/// Covariance of the fRBm density by rotating the Fourier integral onto the
/// ray arg λ = π/4, where e^{iλt} decays exponentially.
fn frbm_covariance(c: f64, alpha: f64, beta: f64, t: f64) -> Result<f64> {
    let t = t.abs();
    if t == 0.0 {
        return Ok(frbm_integral(c, alpha, beta));
    }
    let rot = Complex64::from_polar(1.0, FRAC_PI_4);
    let rot2 = rot * rot;
    // substitute s = σ/t so the exponential decays on a unit scale
    let integrand = |sigma: f64| {
        let s = sigma / t;
        let lam = rot * s;
        let val = rot * (Complex64::i() * rot * sigma).exp() * lam.powf(-2.0 * alpha) * (1.0 + rot2 * s * s).powf(-beta);
        val.re
    };
    let tol = Tolerance::new(1e-300, 1e-12);
    let r = match exp_sinh(integrand, tol) {
        Ok(r) => r,
        Err(_) => {
            warn!("fRBm covariance at t = {t}: relaxing quadrature tolerance");
            exp_sinh(integrand, Tolerance::new(1e-300, QUAD_FALLBACK_REL_TOL))?
        }
    };
    Ok(2.0 * c * r.value / t)
}

/// Integrates one smooth panel, switching to tanh–sinh for endpoint
/// singularities and relaxing the tolerance (with a warning) as a last resort.
pub(crate) fn integrate_panel<F: Fn(f64) -> f64>(h: &F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    let strict = Tolerance::new(abs_tol, QUAD_REL_TOL);
    if let Ok(r) = gauss_kronrod(h, a, b, strict) {
        return Ok(r.value);
    }
    if let Ok(r) = tanh_sinh_offsets(|x, _, _| h(x), a, b, strict) {
        return Ok(r.value);
    }
    let relaxed = Tolerance::new(abs_tol, QUAD_FALLBACK_REL_TOL);
    match tanh_sinh_offsets(|x, _, _| h(x), a, b, relaxed) {
        Ok(r) => {
            warn!("quadrature on [{a}, {b}] met only the relaxed tolerance {QUAD_FALLBACK_REL_TOL:e}");
            Ok(r.value)
        }
        Err(e) => Err(e),
    }
}

/// ∫_0^L h over the half-domain, L = π or ∞, with a singularity-aware first
/// panel [0, b₁] (tanh–sinh clusters nodes at the origin) and Kronrod panels
/// between the supplied breakpoints.
pub(crate) fn integrate_half<F: Fn(f64) -> f64>(h: &F, upper: f64, breaks: Vec<f64>) -> Result<f64> {
    integrate_half_with(h, upper, breaks, 1e-300)
}

/// [`integrate_half`] with an absolute tolerance for the Kronrod panels.
fn integrate_half_with<F: Fn(f64) -> f64>(h: &F, upper: f64, mut breaks: Vec<f64>, abs_tol: f64) -> Result<f64> {
    let finite_top = if upper.is_finite() { upper } else { 1.0 };
    breaks.push(finite_top);
    breaks.push(finite_top.min(1.0));
    breaks.retain(|b| *b > 0.0 && *b <= finite_top);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let strict = Tolerance::new(1e-300, QUAD_REL_TOL);
    let first = breaks[0];
    let mut total = match tanh_sinh_offsets(|_, dl, _| h(dl), 0.0, first, strict) {
        Ok(r) => r.value,
        Err(_) => {
            let r = tanh_sinh_offsets(|_, dl, _| h(dl), 0.0, first, Tolerance::new(1e-300, QUAD_FALLBACK_REL_TOL))?;
            warn!("singular panel [0, {first}] met only the relaxed tolerance");
            r.value
        }
    };
    for w in breaks.windows(2) {
        total += integrate_panel(h, w[0], w[1], abs_tol)?;
    }
    if !upper.is_finite() {
        let top = *breaks.last().unwrap();
        let tail: Integral = match exp_sinh(|u| h(top + u), strict) {
            Ok(r) => r,
            Err(_) => {
                warn!("tail integral beyond {top} met only the relaxed tolerance");
                exp_sinh(|u| h(top + u), Tolerance::new(1e-300, QUAD_FALLBACK_REL_TOL))?
            }
        };
        total += tail.value;
    }
    Ok(total)
}

/// ∫_Λ Π h_i^{p_i} dλ for densities sharing a domain.
pub fn integrate_product(factors: &[(&SpectralDensity, f64)]) -> Result<f64> {
    let domain = factors
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty product".into()))?
        .0
        .domain;
    if factors.iter().any(|(f, _)| f.domain != domain) {
        return Err(Error::DimensionMismatch("factors live on different domains".into()));
    }
    check_product_integrable(factors)?;
    let h = |x: f64| {
        let mut v = 1.0;
        for (f, p) in factors {
            let y = f.eval_abs(x);
            v *= if *p == 1.0 { y } else { y.powf(*p) };
        }
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let breaks: Vec<f64> = factors.iter().flat_map(|(f, _)| f.breakpoints()).collect();
    let upper = if domain == Domain::Circle { PI } else { f64::INFINITY };
    Ok(2.0 * integrate_half(&h, upper, breaks)?)
}

/// Rejects products whose exponents make them non-integrable at 0 or ∞.
fn check_product_integrable(factors: &[(&SpectralDensity, f64)]) -> Result<()> {
    let mut a_sum = 0.0;
    let mut g_sum = 0.0;
    let mut known = true;
    for (f, p) in factors {
        match f.singularity() {
            Some((a, g)) => {
                a_sum += a * p;
                g_sum += g * p;
            }
            None => known = false,
        }
    }
    if known && (a_sum > 1.0 || (a_sum == 1.0 && g_sum <= 1.0)) {
        return Err(Error::DivergentIntegral(format!(
            "the product behaves like |lambda|^-{a_sum} at the origin"
        )));
    }
    if factors[0].0.domain == Domain::Line {
        let mut decay = 0.0;
        for (f, p) in factors {
            match f.decay_exponent() {
                Some(d) => decay += d * p,
                None => return Ok(()),
            }
        }
        if decay <= 1.0 {
            return Err(Error::DivergentIntegral(format!(
                "the product decays only like |lambda|^-{decay} at infinity"
            )));
        }
    }
    Ok(())
}

/// ∫_Λ f₁f₂ dλ, in closed form for fRBm and ARFIMA(0,d,0) pairs and for
/// constants, by quadrature otherwise.
pub fn closed_form_integral(f1: &SpectralDensity, f2: &SpectralDensity) -> Result<f64> {
    if f1.domain != f2.domain {
        return Err(Error::DimensionMismatch("densities live on different domains".into()));
    }
    match (&f1.kind, &f2.kind) {
        (
            DensityKind::Frbm { c: c1, alpha: a1, beta: b1 },
            DensityKind::Frbm { c: c2, alpha: a2, beta: b2 },
        ) if f1.domain == Domain::Line => {
            let (a, b) = (a1 + a2, b1 + b2);
            if a >= 0.5 {
                return Err(Error::DivergentIntegral(format!("alpha1 + alpha2 = {a} >= 1/2")));
            }
            Ok(c1 * c2 * gamma(0.5 - a) * gamma(a + b - 0.5) / gamma(b))
        }
        (DensityKind::Arfima0d0 { sigma2: s1, d: d1 }, DensityKind::Arfima0d0 { sigma2: s2, d: d2 }) => {
            let d = d1 + d2;
            if d >= 0.5 {
                return Err(Error::DivergentIntegral(format!("d1 + d2 = {d} >= 1/2")));
            }
            // ∫|1 − e^{iλ}|^{−2D} = 2πΓ(1 − 2D)/Γ(1 − D)²
            Ok(s1 * s2 / (TWO_PI * TWO_PI) * TWO_PI * gamma(1.0 - 2.0 * d) / gamma(1.0 - d).powi(2))
        }
        (DensityKind::Constant { c }, _) if f1.domain == Domain::Circle => Ok(c * f2.integral()?),
        (_, DensityKind::Constant { c }) if f1.domain == Domain::Circle => Ok(c * f1.integral()?),
        _ => integrate_product(&[(f1, 1.0), (f2, 1.0)]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn arfima_at_pi() {
        let f = SpectralDensity::arfima(TWO_PI, 0.25).unwrap();
        assert!((f.evaluate(PI).unwrap() - 2f64.powf(-0.5)).abs() < 1e-14);
    }

    #[test]
    fn frbm_direct_substitution() {
        let f = SpectralDensity::frbm(1.0, 0.3, 1.0).unwrap();
        assert!((f.evaluate(1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fgn_low_frequency_power_law() {
        let f = SpectralDensity::fgn(1.0, 0.8).unwrap();
        let lam = 1e-4;
        let ratio = f.evaluate(lam / 2.0).unwrap() / f.evaluate(lam).unwrap();
        assert!(close(ratio, 2f64.powf(0.6), 0.01), "{ratio}");
    }

    #[test]
    fn fgn_series_integrates_to_variance() {
        let f = SpectralDensity::fgn(1.7, 0.3).unwrap();
        let total = integrate_product(&[(&f, 1.0)]).unwrap();
        assert!(close(total, 1.7, 1e-6), "{total}");
        // lag-one covariance against the closed-form autocovariance
        let q = f.fourier_coefficient_by_quadrature(1).unwrap();
        let exact = f.fourier_coefficient(1).unwrap();
        assert!((q - exact).abs() < 1e-6, "{q} vs {exact}");
    }

    #[test]
    fn evaluation_is_even_and_poles_are_flagged() {
        let f = SpectralDensity::arfima(1.0, 0.3).unwrap();
        for &x in &[0.1, 1.0, 3.0] {
            assert_eq!(f.evaluate(x).unwrap(), f.evaluate(-x).unwrap());
        }
        assert!(matches!(f.evaluate(0.0), Err(Error::SingularPoint { .. })));
    }

    #[test]
    fn constructor_rejects_non_integrable_parameters() {
        assert!(SpectralDensity::arfima(1.0, 0.5).is_err());
        assert!(SpectralDensity::frbm(1.0, 0.6, 1.0).is_err());
        assert!(SpectralDensity::frbm(1.0, 0.1, 0.3).is_err());
        assert!(SpectralDensity::arfima_pdq(0.0, vec![1.1], vec![], 1.0).is_err());
    }

    #[test]
    fn constant_and_cosine_coefficients() {
        let f = SpectralDensity::white_noise();
        assert!((f.fourier_coefficient(0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(f.fourier_coefficient(3).unwrap(), 0.0);
        let g = SpectralDensity::trigonometric(vec![0.0, 1.0 / PI]).unwrap();
        assert!((g.fourier_coefficient(1).unwrap() - 1.0).abs() < 1e-15);
        assert!((g.fourier_coefficient_by_quadrature(1).unwrap() - 1.0).abs() < 1e-10);
    }

    /// Independent oracle: substitute λ = u^{1/(1−a)} to remove the pole and
    /// use composite Gauss–Legendre at two resolutions.
    fn substituted_coefficient(f: &SpectralDensity, a: f64, k: f64, panels: usize) -> f64 {
        let e = 1.0 / (1.0 - a);
        let top = PI.powf(1.0 - a);
        let (x, w) = gauss_legendre(20);
        let h = top / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            for (xi, wi) in x.iter().zip(&w) {
                let u = h * (p as f64 + 0.5 * (xi + 1.0));
                let lam = u.powf(e);
                let jac = e * u.powf(e - 1.0);
                acc += 0.5 * h * wi * jac * f.eval_abs(lam) * (k * lam).cos();
            }
        }
        2.0 * acc
    }

    #[test]
    fn arfima_coefficient_matches_substitution_oracle() {
        let f = SpectralDensity::arfima(TWO_PI, 0.2).unwrap();
        let coarse = substituted_coefficient(&f, 0.4, 5.0, 200);
        let fine = substituted_coefficient(&f, 0.4, 5.0, 400);
        assert!((coarse - fine).abs() < 1e-12);
        let closed = f.fourier_coefficient(5).unwrap();
        assert!((closed - fine).abs() < 1e-10, "{closed} vs {fine}");
        let quad = f.fourier_coefficient_by_quadrature(5).unwrap();
        assert!((quad - fine).abs() < 1e-9);
        assert_eq!(f.fourier_coefficient(-5).unwrap(), closed);
    }

    #[test]
    fn power_law_coefficients_match_quadrature() {
        let f = SpectralDensity::power_log(0.6, 0.0).unwrap();
        for k in [0i64, 1, 7, 40] {
            let closed = f.fourier_coefficient(k).unwrap();
            let oracle = substituted_coefficient(&f, 0.6, k as f64, 400);
            assert!((closed - oracle).abs() < 1e-9 * oracle.abs().max(1.0), "k={k}: {closed} vs {oracle}");
        }
    }

    #[test]
    fn arma_coefficients_match_ar1_formula() {
        let f = SpectralDensity::arfima_pdq(0.0, vec![0.5], vec![], TWO_PI).unwrap();
        let c = f.fourier_coefficients(6).unwrap();
        for (k, ck) in c.iter().enumerate() {
            let exact = TWO_PI * 0.5f64.powi(k as i32) / 0.75;
            assert!((ck - exact).abs() < 1e-12, "k={k}: {ck} vs {exact}");
        }
        // fractional case cross-checked by quadrature
        let g = SpectralDensity::arfima_pdq(0.2, vec![0.3], vec![0.4], 1.0).unwrap();
        let c = g.fourier_coefficients(4).unwrap();
        for k in 0..4 {
            let q = g.fourier_coefficient_by_quadrature(k as i64).unwrap();
            assert!((c[k] - q).abs() < 1e-8, "k={k}: {} vs {q}", c[k]);
        }
    }

    #[test]
    fn dyadic_coefficients_match_panel_sum() {
        let f = SpectralDensity::dyadic(2.0, 0).unwrap();
        assert_eq!(f.evaluate(0.2).unwrap(), 1.0);
        let q = f.fourier_coefficient_by_quadrature(3).unwrap();
        assert!((f.fourier_coefficient(3).unwrap() - q).abs() < 1e-9);
    }

    #[test]
    fn frbm_transform_at_zero_is_integral() {
        let f = SpectralDensity::frbm(1.0, 0.1, 1.0).unwrap();
        let direct = integrate_product(&[(&f, 1.0)]).unwrap();
        assert!(close(f.fourier_transform(0.0).unwrap(), direct, 1e-9));
    }

    #[test]
    fn exponential_covariance_from_cauchy_density() {
        let f = SpectralDensity::frbm(1.0 / PI, 0.0, 1.0).unwrap();
        for &t in &[0.3, 1.0, 4.0] {
            assert!((f.fourier_transform(t).unwrap() - (-t).exp()).abs() < 1e-11);
        }
    }

    #[test]
    fn frbm_covariance_matches_direct_cosine_integral() {
        let f = SpectralDensity::frbm(1.0, 0.1, 1.0).unwrap();
        let t = 2.0;
        // direct oscillatory integral over half-periods with a pole panel
        let h = |x: f64| f.eval_abs(x) * (t * x).cos();
        // truncated after 2000 half-periods; the neglected tail is O(1e-8)
        let breaks: Vec<f64> = (1..2000).map(|j| j as f64 * PI / t).collect();
        let direct = 2.0 * integrate_half(&h, 2000.0 * PI / t, breaks).unwrap();
        assert!((f.fourier_transform(t).unwrap() - direct).abs() < 1e-7, "{direct}");
    }

    #[test]
    fn closed_forms() {
        let f = SpectralDensity::frbm(1.0, 0.1, 1.0).unwrap();
        let v = closed_form_integral(&f, &f).unwrap();
        let oracle = statrs::function::gamma::gamma(0.3) * statrs::function::gamma::gamma(1.7);
        assert!(close(v, oracle, 1e-12));
        let q = integrate_product(&[(&f, 2.0)]).unwrap();
        assert!(close(v, q, 1e-9));
        let w = SpectralDensity::white_noise();
        assert!(close(closed_form_integral(&w, &w).unwrap(), 1.0 / TWO_PI, 1e-14));
        let a = SpectralDensity::arfima(TWO_PI, 0.1).unwrap();
        let q = integrate_product(&[(&a, 2.0)]).unwrap();
        assert!(close(closed_form_integral(&a, &a).unwrap(), q, 1e-9));
    }

    #[test]
    fn pole_behaviour_of_frbm_product() {
        let mut prev = 0.0;
        for &a in &[0.24, 0.245, 0.249, 0.2499] {
            let f = SpectralDensity::frbm(1.0, a, 1.0).unwrap();
            let v = closed_form_integral(&f, &f).unwrap() * (1.0 - 4.0 * a);
            assert!((v - 2.0).abs() < (prev - 2.0f64).abs() || prev == 0.0);
            prev = v;
        }
        assert!((prev - 2.0).abs() < 1e-3);
    }

    #[test]
    fn lp_modulus() {
        let f = SpectralDensity::frbm(1.0, 0.3, 1.0).unwrap();
        assert!(matches!(f.lp_modulus_check(2.0, 0.6), Err(Error::PreconditionViolation(_))));
        let g = SpectralDensity::frbm(1.0, 0.1, 1.0).unwrap();
        let m = g.lp_modulus_check(2.0, 0.2).unwrap();
        let slope = m.slope.unwrap();
        assert!((slope - 0.3).abs() < 0.05, "{slope}");
        let c = SpectralDensity::constant(3.0).unwrap();
        let m = c.lp_modulus_check(2.0, 0.2).unwrap();
        assert!(m.omegas.iter().all(|w| *w == 0.0));
        assert!(m.slope.is_none());
    }

    #[test]
    fn memory_classes() {
        assert_eq!(SpectralDensity::arfima(1.0, 0.2).unwrap().classify_memory().unwrap(), MemoryClass::LongMemory);
        assert_eq!(
            SpectralDensity::arfima(1.0, -0.2).unwrap().classify_memory().unwrap(),
            MemoryClass::AntiPersistent
        );
        assert_eq!(SpectralDensity::constant(2.0).unwrap().classify_memory().unwrap(), MemoryClass::ShortMemory);
        let t = SpectralDensity::tabulated(vec![0.0, PI], vec![1.0, 1.0], Domain::Circle).unwrap();
        assert!(matches!(t.classify_memory(), Err(Error::Unclassifiable(_))));
    }

    #[test]
    fn fgn_and_arfima_share_origin_behaviour() {
        let h = 0.7;
        let f = SpectralDensity::fgn(1.0, h).unwrap();
        let a = SpectralDensity::arfima(1.0, h - 0.5).unwrap();
        let ratios: Vec<f64> = (2..=5).map(|j| f.eval_abs(10f64.powi(-j)) / a.eval_abs(10f64.powi(-j))).collect();
        for w in ratios.windows(2) {
            assert!(close(w[0], w[1], 1e-2), "{ratios:?}");
        }
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let f = SpectralDensity::arfima(2.0, 0.1).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        let back: SpectralDensity = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let sum = SpectralDensity::sum(vec![(1.0, SpectralDensity::dyadic(1.2, 1).unwrap()), (0.01, SpectralDensity::constant(1.0).unwrap())]).unwrap();
        let back: SpectralDensity = serde_json::from_str(&serde_json::to_string(&sum).unwrap()).unwrap();
        assert_eq!(back, sum);
        let frbm: SpectralDensity =
            serde_json::from_str(r#"{"kind":"frbm","params":{"c":1,"alpha":0.1,"beta":1}}"#).unwrap();
        assert_eq!(frbm.domain(), Domain::Line);
        assert!(serde_json::from_str::<SpectralDensity>(r#"{"kind":"arfima0d0","params":{"sigma2":1,"d":0.7}}"#).is_err());
        assert!(serde_json::from_str::<SpectralDensity>(r#"{"kind":"arfima0d0","params":{"sigma2":1,"d":0.1,"x":1}}"#).is_err());
        assert!(serde_json::from_str::<SpectralDensity>(r#"{"kind":"nope","params":{}}"#).is_err());
    }
}
