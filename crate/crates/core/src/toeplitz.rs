//! Truncated Toeplitz matrices B_T(h) built from Fourier coefficients, traces
//! of their products (optionally with inverses), the error Δ(T) against the
//! integral limit, and the table of theoretical convergence rates.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::ToeplitzOperator;
use crate::spectral::{closed_form_integral, integrate_product, DensityKind, Domain, SpectralDensity};
use crate::special::{gamma, neumaier_sum};

const TWO_PI: f64 = 2.0 * PI;

/// Largest dimension served by dense products of Toeplitz matrices.
pub const DENSE_CAP: usize = 2048;
/// Largest dimension served by the dense path when inverses are involved.
pub const INVERSE_CAP: usize = 1024;
/// Largest dimension served by the O(T) formula for m = 2.
pub const FAST_M2_CAP: usize = 1 << 20;
/// Generators of inverted factors must stay above this on the sample grid.
pub const POSITIVITY_FLOOR: f64 = 1e-6;

/// Symmetric T×T Toeplitz matrix with entries ĥ(|s − t|).
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzMatrix {
    coeffs: Vec<f64>,
}

impl ToeplitzMatrix {
    /// Matrix whose first row is `coeffs`.
    pub fn from_coefficients(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("a Toeplitz matrix needs T >= 1".into()));
        }
        Ok(ToeplitzMatrix { coeffs })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn entry(&self, s: usize, t: usize) -> f64 {
        self.coeffs[s.abs_diff(t)]
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.coeffs[i.abs_diff(j)])
    }

    /// FFT-backed matrix-vector product.
    pub fn operator(&self) -> ToeplitzOperator {
        ToeplitzOperator::new(&self.coeffs)
    }

    /// xᵀ B x.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against a {}x{} matrix",
                x.len(),
                self.dim(),
                self.dim()
            )));
        }
        let y = self.operator().apply(x);
        Ok(neumaier_sum(x.iter().zip(&y).map(|(a, b)| a * b)))
    }
}

/// B_T(h) for a generator on the circle.
pub fn build_matrix(f: &SpectralDensity, t: usize) -> Result<ToeplitzMatrix> {
    if f.domain() != Domain::Circle {
        return Err(Error::MethodMismatch("Toeplitz matrices need a generator on the circle".into()));
    }
    if t == 0 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    ToeplitzMatrix::from_coefficients(f.fourier_coefficients(t)?)
}

/// Ordered generators h₁, …, h_m with exponents τ_i = ±1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    generators: Vec<SpectralDensity>,
    exponents: Vec<i32>,
}

impl TraceSpec {
    pub fn new(generators: Vec<SpectralDensity>, exponents: Vec<i32>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidParameter("a trace needs at least one generator".into()));
        }
        if generators.len() != exponents.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} generators but {} exponents",
                generators.len(),
                exponents.len()
            )));
        }
        if let Some(bad) = exponents.iter().find(|e| e.abs() != 1) {
            return Err(Error::InvalidParameter(format!("exponent {bad} is not +1 or -1")));
        }
        let domain = generators[0].domain();
        if generators.iter().any(|g| g.domain() != domain) {
            return Err(Error::DimensionMismatch("generators live on different domains".into()));
        }
        for (g, _) in generators.iter().zip(&exponents).filter(|(_, e)| **e < 0) {
            check_positive(g)?;
        }
        Ok(TraceSpec { generators, exponents })
    }

    /// Plain product h₁ ⋯ h_m.
    pub fn product(generators: Vec<SpectralDensity>) -> Result<Self> {
        let n = generators.len();
        TraceSpec::new(generators, vec![1; n])
    }

    /// The pair (h₁, h₂).
    pub fn pair(h1: SpectralDensity, h2: SpectralDensity) -> Result<Self> {
        TraceSpec::product(vec![h1, h2])
    }

    /// [f₁h₂]^ν alternating: f₁, f₂, f₁, f₂, … of length 2ν.
    pub fn alternating_power(f1: SpectralDensity, f2: SpectralDensity, nu: usize) -> Result<Self> {
        let mut g = Vec::with_capacity(2 * nu);
        for _ in 0..nu {
            g.push(f1.clone());
            g.push(f2.clone());
        }
        TraceSpec::product(g)
    }

    /// f₁⁻¹g₁ f₂⁻¹g₂ ⋯ f_ν⁻¹g_ν.
    pub fn inverse_pairs(pairs: Vec<(SpectralDensity, SpectralDensity)>) -> Result<Self> {
        let mut g = Vec::with_capacity(2 * pairs.len());
        let mut e = Vec::with_capacity(2 * pairs.len());
        for (f, h) in pairs {
            g.push(f);
            e.push(-1);
            g.push(h);
            e.push(1);
        }
        TraceSpec::new(g, e)
    }

    pub fn generators(&self) -> &[SpectralDensity] {
        &self.generators
    }

    pub fn exponents(&self) -> &[i32] {
        &self.exponents
    }

    pub fn m(&self) -> usize {
        self.generators.len()
    }

    pub fn domain(&self) -> Domain {
        self.generators[0].domain()
    }

    pub fn inverse_count(&self) -> usize {
        self.exponents.iter().filter(|e| **e < 0).count()
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse_count() > 0
    }

    /// Exponents written as a string of signs, e.g. "-+-+".
    pub fn tau_signature(&self) -> String {
        self.exponents.iter().map(|e| if *e > 0 { '+' } else { '-' }).collect()
    }
}

/// Screens a generator that is going to be inverted.
fn check_positive(g: &SpectralDensity) -> Result<()> {
    let n = 4096;
    let upper = match g.domain() {
        Domain::Circle => PI,
        Domain::Line => 1e3,
    };
    let min = (0..=n)
        .map(|i| g.eval_abs(upper * i as f64 / n as f64))
        .fold(f64::INFINITY, f64::min);
    if !(min >= POSITIVITY_FLOOR) {
        return Err(Error::NonPositiveDefinite(format!(
            "inverted generator has minimum {min:.3e} on the sample grid, below {POSITIVITY_FLOOR:e}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMethod {
    Dense,
    FastM2,
}

/// S(T) = (1/T) tr[B_T(h₁) ⋯ B_T(h_m)] for a spec without inverses.
pub fn trace_product(spec: &TraceSpec, t: usize, method: TraceMethod) -> Result<f64> {
    if spec.has_inverse() {
        return Err(Error::MethodMismatch("use trace_product_inverse for specs with inverses".into()));
    }
    require_circle(spec)?;
    if t == 0 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    match method {
        TraceMethod::FastM2 => {
            if spec.m() != 2 {
                return Err(Error::MethodMismatch(format!("FastM2 needs m = 2, got m = {}", spec.m())));
            }
            if t > FAST_M2_CAP {
                return Err(Error::InvalidParameter(format!("T = {t} exceeds the FastM2 cap {FAST_M2_CAP}")));
            }
            let c1 = spec.generators[0].fourier_coefficients(t)?;
            let c2 = if spec.generators[1] == spec.generators[0] {
                c1.clone()
            } else {
                spec.generators[1].fourier_coefficients(t)?
            };
            Ok(fast_m2(&c1, &c2))
        }
        TraceMethod::Dense => {
            if t > DENSE_CAP {
                return Err(Error::InvalidParameter(format!("T = {t} exceeds the dense cap {DENSE_CAP}")));
            }
            let mats = dense_factors(spec, t)?;
            let m = mats.len();
            if m == 1 {
                return Ok(mats[0].trace() / t as f64);
            }
            let mut p = mats[0].clone();
            for a in &mats[1..m - 1] {
                p = &p * a;
            }
            Ok(trace_of_product(&p, &mats[m - 1]) / t as f64)
        }
    }
}

/// (1/T)[T c₁(0)c₂(0) + 2 Σ_{k≥1} (T − k) c₁(k)c₂(k)].
pub fn fast_m2(c1: &[f64], c2: &[f64]) -> f64 {
    let t = c1.len().min(c2.len());
    let tf = t as f64;
    let terms = (1..t).map(|k| 2.0 * (tf - k as f64) * c1[k] * c2[k]);
    neumaier_sum(std::iter::once(tf * c1[0] * c2[0]).chain(terms)) / tf
}

/// tr(AB) = Σ_ij A_ij B_ji, summed in a fixed order.
fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| neumaier_sum((0..n).map(|j| a[(i, j)] * b[(j, i)])))
        .collect();
    neumaier_sum(rows)
}

fn require_circle(spec: &TraceSpec) -> Result<()> {
    if spec.domain() != Domain::Circle {
        return Err(Error::MethodMismatch("Toeplitz matrices need generators on the circle".into()));
    }
    Ok(())
}

/// Dense B_T(h_i), materialising each distinct generator once.
fn dense_factors(spec: &TraceSpec, t: usize) -> Result<Vec<DMatrix<f64>>> {
    let mut distinct: Vec<(&SpectralDensity, DMatrix<f64>)> = Vec::new();
    let mut out = Vec::with_capacity(spec.m());
    for g in &spec.generators {
        if let Some((_, m)) = distinct.iter().find(|(h, _)| *h == g) {
            out.push(m.clone());
            continue;
        }
        let m = build_matrix(g, t)?.dense();
        distinct.push((g, m.clone()));
        out.push(m);
    }
    Ok(out)
}

/// SI(T) = (1/T) tr[Π B_T(h_i)^{τ_i}] with inverses applied through
/// Cholesky solves.
pub fn trace_product_inverse(spec: &TraceSpec, t: usize) -> Result<f64> {
    require_circle(spec)?;
    if t == 0 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    if t > INVERSE_CAP {
        return Err(Error::InvalidParameter(format!("T = {t} exceeds the inverse-trace cap {INVERSE_CAP}")));
    }
    let mats = dense_factors(spec, t)?;
    let mut factors: Vec<Option<Cholesky<f64, nalgebra::Dyn>>> = Vec::with_capacity(mats.len());
    for (m, e) in mats.iter().zip(&spec.exponents) {
        factors.push(if *e < 0 {
            Some(Cholesky::new(m.clone()).ok_or_else(|| {
                Error::NonPositiveDefinite(format!("Cholesky factorisation failed at T = {t}"))
            })?)
        } else {
            None
        });
    }
    // P ← P·A or P·A⁻¹ = (A⁻¹Pᵀ)ᵀ, A symmetric
    let mut p = DMatrix::<f64>::identity(t, t);
    for (m, chol) in mats.iter().zip(&factors) {
        p = match chol {
            None => &p * m,
            Some(c) => c.solve(&p.transpose()).transpose(),
        };
    }
    Ok(p.trace() / t as f64)
}

/// S(T) by the cheapest exact route available for the spec.
pub fn trace(spec: &TraceSpec, t: usize) -> Result<f64> {
    if spec.has_inverse() {
        trace_product_inverse(spec, t)
    } else if spec.m() == 2 {
        trace_product(spec, t, TraceMethod::FastM2)
    } else {
        trace_product(spec, t, TraceMethod::Dense)
    }
}

/// M = (2π)^{m−1−2n₋} ∫ Π h_i^{τ_i} dλ, n₋ the number of inverted factors.
pub fn integral_target(spec: &TraceSpec) -> Result<f64> {
    let power = spec.m() as i32 - 1 - 2 * spec.inverse_count() as i32;
    let scale = TWO_PI.powi(power);
    let integral = if spec.m() == 2 && !spec.has_inverse() {
        closed_form_integral(&spec.generators[0], &spec.generators[1])?
    } else if spec.m() == 1 {
        let g = &spec.generators[0];
        if spec.exponents[0] > 0 {
            g.integral()?
        } else {
            integrate_product(&[(g, -1.0)])?
        }
    } else {
        let factors: Vec<(&SpectralDensity, f64)> =
            spec.generators.iter().zip(&spec.exponents).map(|(g, e)| (g, *e as f64)).collect();
        integrate_product(&factors)?
    };
    Ok(scale * integral)
}

/// Δ(T) = |S(T) − M|.
pub fn delta(spec: &TraceSpec, t: usize) -> Result<f64> {
    Ok((trace(spec, t)? - integral_target(spec)?).abs())
}

/// One cell of a trace experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub s: f64,
    pub m: f64,
    pub delta: f64,
}

/// (T, S, M, Δ) over a grid, with the cells computed in parallel.
pub fn trace_grid(spec: &TraceSpec, grid: &[usize]) -> Result<Vec<TracePoint>> {
    let m = integral_target(spec)?;
    grid.par_iter()
        .map(|&t| {
            let s = trace(spec, t)?;
            Ok(TracePoint { t: t as f64, s, m, delta: (s - m).abs() })
        })
        .collect()
}

/// Convergence rate claimed by a theorem: Δ(T) = O(T^{−γ}) (up to an
/// arbitrarily small ε), O(T^{−γ} ln T), or only o(1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "gamma", rename_all = "snake_case")]
pub enum PredictedRate {
    Exponent(f64),
    ExponentWithLog(f64),
    LittleO,
}

impl PredictedRate {
    pub fn gamma(&self) -> Option<f64> {
        match self {
            PredictedRate::Exponent(g) | PredictedRate::ExponentWithLog(g) => Some(*g),
            PredictedRate::LittleO => None,
        }
    }
}

/// Rate statements for Toeplitz matrices. Hölder-type hypotheses that cannot
/// be read off the generator metadata carry their exponents explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DiscreteTheorem {
    /// Continuity-type hypotheses: o(1).
    T1,
    /// Inverse products under Dahlhaus-type hypotheses: o(1).
    T2,
    /// Smooth generators: O(T⁻¹).
    B1,
    /// Bounded derivatives: O(T^{−1+ε}).
    B2,
    /// Hölder condition of order γ on the product kernel.
    B3 { gamma: f64 },
    /// L^p-Lipschitz generators of order γ.
    B4 { gamma: f64 },
    /// Power-type poles α_i with Σα_i < 1: γ = (1 − Σα_i)/m.
    B5,
    /// m = 2, Lip(p_i, γ_i) with 1/p₁ + 1/p₂ = 1.
    T4_1 { gamma1: f64, gamma2: f64 },
    /// m = 2 with power-type poles: γ = 1 − (α₁ + α₂).
    T4_2,
    /// Inverse products with smooth, positive generators: O(T⁻¹).
    T4,
    /// [B(f₁)B(f₂)]^ν for ARFIMA(0,d,0) pairs: γ = 1/(2ν) − (d₁ + d₂).
    Fm,
}

/// Theoretical exponent for `spec` under `theorem`.
pub fn predicted_rate(spec: &TraceSpec, theorem: DiscreteTheorem) -> Result<PredictedRate> {
    let inapplicable = |msg: String| Err(Error::TheoremInapplicable(msg));
    if theorem != DiscreteTheorem::T2 && theorem != DiscreteTheorem::T4 && spec.has_inverse() {
        return inapplicable(format!("{theorem:?} concerns products without inverses"));
    }
    match theorem {
        DiscreteTheorem::T1 | DiscreteTheorem::T2 => Ok(PredictedRate::LittleO),
        DiscreteTheorem::B1 => {
            for g in spec.generators() {
                match g.pole_exponent() {
                    Some(a) if a <= 0.0 => {}
                    _ => return inapplicable("B1 needs bounded, smooth generators".into()),
                }
            }
            Ok(PredictedRate::Exponent(1.0))
        }
        DiscreteTheorem::B2 => Ok(PredictedRate::Exponent(1.0)),
        DiscreteTheorem::B3 { gamma } | DiscreteTheorem::B4 { gamma } => {
            if !(gamma > 0.0 && gamma <= 1.0) {
                return inapplicable(format!("Hoelder order {gamma} outside (0, 1]"));
            }
            Ok(PredictedRate::Exponent(gamma))
        }
        DiscreteTheorem::B5 => {
            let alpha = pole_sum(spec)?;
            if alpha >= 1.0 {
                return inapplicable(format!("sum of pole exponents {alpha} >= 1"));
            }
            Ok(PredictedRate::Exponent((1.0 - alpha) / spec.m() as f64))
        }
        DiscreteTheorem::T4_1 { gamma1, gamma2 } => {
            require_m2(spec)?;
            for g in [gamma1, gamma2] {
                if !(g > 0.0 && g <= 1.0) {
                    return inapplicable(format!("Lipschitz order {g} outside (0, 1]"));
                }
            }
            let s = gamma1 + gamma2;
            Ok(if (s - 1.0).abs() < 1e-12 {
                PredictedRate::ExponentWithLog(1.0)
            } else {
                PredictedRate::Exponent(s.min(1.0))
            })
        }
        DiscreteTheorem::T4_2 => {
            require_m2(spec)?;
            let alpha = pole_sum(spec)?;
            if alpha >= 1.0 {
                return inapplicable(format!("alpha1 + alpha2 = {alpha} >= 1"));
            }
            Ok(PredictedRate::Exponent(1.0 - alpha))
        }
        DiscreteTheorem::T4 => {
            let alternating = spec.m() % 2 == 0
                && spec.exponents().chunks(2).all(|c| c[0] == -1 && c[1] == 1);
            if !alternating {
                return inapplicable("T4 needs the alternating pattern f1^-1 g1 f2^-1 g2 ...".into());
            }
            for g in spec.generators() {
                match g.pole_exponent() {
                    Some(a) if a <= 0.0 => {}
                    _ => return inapplicable("T4 needs bounded, smooth generators".into()),
                }
            }
            Ok(PredictedRate::Exponent(1.0))
        }
        DiscreteTheorem::Fm => {
            let m = spec.m();
            if m % 2 != 0 {
                return inapplicable("FM needs an even number of factors".into());
            }
            let nu = m / 2;
            let (g1, g2) = (&spec.generators()[0], &spec.generators()[1]);
            let alternating = spec.generators().chunks(2).all(|c| &c[0] == g1 && &c[1] == g2);
            let (d1, d2) = match (g1.kind(), g2.kind()) {
                (DensityKind::Arfima0d0 { d: d1, .. }, DensityKind::Arfima0d0 { d: d2, .. }) if alternating => {
                    (*d1, *d2)
                }
                _ => return inapplicable("FM needs alternating ARFIMA(0,d,0) generators".into()),
            };
            if !(d1 > 0.0 && d1 < 0.5 && d2 > 0.0 && d2 < 0.5) {
                return inapplicable(format!("memory parameters d1 = {d1}, d2 = {d2} outside (0, 1/2)"));
            }
            let bound = 1.0 / (2.0 * nu as f64);
            if d1 + d2 >= bound {
                return inapplicable(format!("d1 + d2 = {} >= 1/(2 nu) = {bound}", d1 + d2));
            }
            Ok(PredictedRate::Exponent(bound - (d1 + d2)))
        }
    }
}

fn require_m2(spec: &TraceSpec) -> Result<()> {
    if spec.m() != 2 {
        return Err(Error::TheoremInapplicable(format!("the statement is for m = 2, got m = {}", spec.m())));
    }
    Ok(())
}

/// Σ max(α_i, 0) over the pole exponents of the generators.
pub(crate) fn pole_sum(spec: &TraceSpec) -> Result<f64> {
    let mut alpha = 0.0;
    for g in spec.generators() {
        match g.pole_exponent() {
            Some(a) if a < 1.0 => alpha += a.max(0.0),
            Some(a) => return Err(Error::TheoremInapplicable(format!("pole exponent {a} >= 1"))),
            None => return Err(Error::TheoremInapplicable("generator carries no exponent metadata".into())),
        }
    }
    Ok(alpha)
}

/// Two-term expansion S(T) ≈ leading − constant · T^{−exponent}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderExpansion {
    pub leading: f64,
    pub constant: f64,
    pub exponent: f64,
    pub predicted: f64,
}

impl SecondOrderExpansion {
    pub fn at(&self, t: f64) -> f64 {
        self.leading - self.constant * t.powf(-self.exponent)
    }
}

/// Second-order expansion of (1/T)tr[B_T(f₁)B_T(f₂)] for two ARFIMA(0,d,0)
/// densities with innovation variances σ₁², σ₂².
pub fn second_order_expansion_discrete(d1: f64, d2: f64, s1: f64, s2: f64, t: f64) -> Result<SecondOrderExpansion> {
    let d = d1 + d2;
    if !(d > 0.0 && d < 0.5) || d1 <= -0.5 || d2 <= -0.5 {
        return Err(Error::ExpansionInapplicable(format!("d1 + d2 = {d} must lie in (0, 1/2)")));
    }
    let f1 = SpectralDensity::arfima(s1, d1)?;
    let f2 = SpectralDensity::arfima(s2, d2)?;
    let leading = TWO_PI * closed_form_integral(&f1, &f2)?;
    let constant = discrete_second_order_constant(d1, d2, s1, s2);
    let exponent = 1.0 - 2.0 * d;
    Ok(SecondOrderExpansion { leading, constant, exponent, predicted: leading - constant * t.powf(-exponent) })
}

/// r_i(k) ~ c_i k^{2d_i − 1} with c_i = σ_i²/(2cos(πd_i)Γ(2d_i)); summing
/// the tails of the triangle-weighted product gives c₁c₂/(d(1 − 2d)).
fn discrete_second_order_constant(d1: f64, d2: f64, s1: f64, s2: f64) -> f64 {
    let d = d1 + d2;
    s1 * s2 / (2.0 * (PI * d1).cos() * (PI * d2).cos() * gamma(2.0 * d1) * gamma(2.0 * d2))
        / (2.0 * d * (1.0 - 2.0 * d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn white() -> SpectralDensity {
        SpectralDensity::white_noise()
    }

    #[test]
    fn white_noise_builds_identity() {
        let b = build_matrix(&white(), 8).unwrap().dense();
        assert!((b - DMatrix::<f64>::identity(8, 8)).abs().max() < 1e-15);
    }

    #[test]
    fn cosine_builds_tridiagonal() {
        let f = SpectralDensity::trigonometric(vec![0.0, 1.0 / PI]).unwrap();
        let b = build_matrix(&f, 4).unwrap();
        for i in 0..4usize {
            for j in 0..4 {
                let want = if i.abs_diff(j) == 1 { 1.0 } else { 0.0 };
                assert!((b.entry(i, j) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_factor_trace_is_zeroth_coefficient() {
        let f = SpectralDensity::arfima(TWO_PI, 0.2).unwrap();
        let spec = TraceSpec::product(vec![f.clone()]).unwrap();
        let s = trace_product(&spec, 50, TraceMethod::Dense).unwrap();
        assert!((s - f.fourier_coefficient(0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn fast_and_dense_agree_for_arfima_pair() {
        let spec = TraceSpec::pair(
            SpectralDensity::arfima(TWO_PI, 0.1).unwrap(),
            SpectralDensity::arfima(TWO_PI, 0.1).unwrap(),
        )
        .unwrap();
        let a = trace_product(&spec, 64, TraceMethod::Dense).unwrap();
        let b = trace_product(&spec, 64, TraceMethod::FastM2).unwrap();
        assert!((a - b).abs() < 1e-10 * a.abs());
    }

    #[test]
    fn fast_m2_rejects_other_orders() {
        let spec = TraceSpec::product(vec![white(), white(), white()]).unwrap();
        assert!(matches!(trace_product(&spec, 8, TraceMethod::FastM2), Err(Error::MethodMismatch(_))));
    }

    #[test]
    fn inverse_of_itself_gives_one() {
        let f = SpectralDensity::arfima_pdq(0.0, vec![0.4], vec![], TWO_PI).unwrap();
        let spec = TraceSpec::inverse_pairs(vec![(f.clone(), f)]).unwrap();
        let si = trace_product_inverse(&spec, 200).unwrap();
        assert!((si - 1.0).abs() < 1e-10);
        assert!((integral_target(&spec).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn inverting_a_vanishing_density_is_rejected() {
        let f = SpectralDensity::arfima(TWO_PI, -0.2).unwrap();
        let r = TraceSpec::inverse_pairs(vec![(f, white())]);
        assert!(matches!(r, Err(Error::NonPositiveDefinite(_))));
    }

    #[test]
    fn constant_pair_has_zero_delta() {
        let g = SpectralDensity::arfima(TWO_PI, 0.2).unwrap();
        let spec = TraceSpec::pair(white(), g).unwrap();
        for t in [16, 256, 4096] {
            assert!(delta(&spec, t).unwrap() < 1e-12);
        }
    }

    #[test]
    fn theorem_table() {
        let a = |d| SpectralDensity::arfima(TWO_PI, d).unwrap();
        let pair = TraceSpec::pair(a(0.1), a(0.1)).unwrap();
        assert!((predicted_rate(&pair, DiscreteTheorem::Fm).unwrap().gamma().unwrap() - 0.3).abs() < 1e-15);
        assert!((predicted_rate(&pair, DiscreteTheorem::T4_2).unwrap().gamma().unwrap() - 0.6).abs() < 1e-15);
        let four = TraceSpec::product(vec![a(0.05); 4]).unwrap();
        assert!((predicted_rate(&four, DiscreteTheorem::B5).unwrap().gamma().unwrap() - 0.15).abs() < 1e-15);
        let heavy = TraceSpec::pair(a(0.2), a(0.1)).unwrap();
        assert!(matches!(predicted_rate(&heavy, DiscreteTheorem::Fm), Ok(_)));
        let too_heavy = TraceSpec::alternating_power(a(0.2), a(0.1), 2).unwrap();
        assert!(matches!(predicted_rate(&too_heavy, DiscreteTheorem::Fm), Err(Error::TheoremInapplicable(_))));
        assert_eq!(
            predicted_rate(&pair, DiscreteTheorem::T4_1 { gamma1: 0.5, gamma2: 0.5 }).unwrap(),
            PredictedRate::ExponentWithLog(1.0)
        );
        assert_eq!(predicted_rate(&pair, DiscreteTheorem::T1).unwrap(), PredictedRate::LittleO);
    }

    #[test]
    fn second_order_constant_is_symmetric() {
        let a = second_order_expansion_discrete(0.1, 0.2, TWO_PI, 3.0, 100.0).unwrap();
        let b = second_order_expansion_discrete(0.2, 0.1, 3.0, TWO_PI, 100.0).unwrap();
        assert!((a.constant - b.constant).abs() < 1e-14 * a.constant);
        assert!(second_order_expansion_discrete(0.3, 0.2, 1.0, 1.0, 10.0).is_err());
    }

    #[test]
    fn quadratic_form_matches_double_sum() {
        let b = build_matrix(&SpectralDensity::arfima(TWO_PI, 0.3).unwrap(), 20).unwrap();
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
        let direct: f64 = (0..20).flat_map(|i| (0..20).map(move |j| (i, j))).map(|(i, j)| b.entry(i, j) * x[i] * x[j]).sum();
        assert!((b.quadratic_form(&x).unwrap() - direct).abs() < 1e-12 * direct.abs());
    }
}
