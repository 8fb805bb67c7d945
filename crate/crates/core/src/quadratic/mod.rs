//! Toeplitz-type quadratic forms Q_T = Σ ĝ(k−j)X(k)X(j) of a stationary
//! Gaussian process with spectral density f: simulation, cumulants through
//! traces, and numerical checks of the central, non-central, Berry–Esseen
//! and large-deviation limit theory.

mod ldp;
mod rosenblatt;
mod sampling;

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft::ToeplitzOperator;
use crate::quadrature::{tanh_sinh_best, Tolerance};
use crate::rate_lab::least_squares;
use crate::special::{neumaier_sum, normal_cdf};
use crate::spectral::{integrate_product, DensityKind, Domain, SpectralDensity};
use crate::toeplitz::{fast_m2, ToeplitzMatrix, DENSE_CAP};

pub use ldp::{ldp_rate_function, LdpPoint, LdpRate};
pub use rosenblatt::{rosenblatt_second_moment, RosenblattMoment};
pub use sampling::{lags_needed, replicate_rng, GaussianSampler, SamplingMethod, CHOLESKY_CAP};

const TWO_PI: f64 = 2.0 * PI;

/// A quadratic form of T observations. On the circle the observations are
/// X(0), …, X(T−1); on the line the continuous-time functional over [0, T]
/// is replaced by its Riemann sum on `samples` points with step h = T/samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticFormSpec {
    f: SpectralDensity,
    g: SpectralDensity,
    samples: usize,
    step: f64,
}

/// Lag coefficients of a form: covariances r(kh) of the sampled process and
/// weights w(k) with Q = Σ w(k−j)x_k x_j. The operators A_T(f), A_T(g) are
/// represented by the Toeplitz matrices h·r and w/h.
#[derive(Debug, Clone, PartialEq)]
pub struct FormCoefficients {
    pub cov: Vec<f64>,
    pub weights: Vec<f64>,
    pub step: f64,
}

impl FormCoefficients {
    fn operator_f(&self, n: usize) -> Vec<f64> {
        self.cov[..n].iter().map(|c| c * self.step).collect()
    }

    fn operator_g(&self, n: usize) -> Vec<f64> {
        self.weights[..n].iter().map(|c| c / self.step).collect()
    }
}

/// Default number of Riemann points for a continuous-time form.
pub const DEFAULT_CONTINUOUS_SAMPLES: usize = 1024;

impl QuadraticFormSpec {
    pub fn discrete(f: SpectralDensity, g: SpectralDensity, t: usize) -> Result<Self> {
        if f.domain() != Domain::Circle || g.domain() != Domain::Circle {
            return Err(Error::MethodMismatch("a discrete-time form needs densities on the circle".into()));
        }
        Self::checked(f, g, t, 1.0)
    }

    pub fn continuous(f: SpectralDensity, g: SpectralDensity, horizon: f64, samples: usize) -> Result<Self> {
        if f.domain() != Domain::Line || g.domain() != Domain::Line {
            return Err(Error::MethodMismatch("a continuous-time form needs densities on the line".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
        }
        Self::checked(f, g, samples, horizon / samples as f64)
    }

    fn checked(f: SpectralDensity, g: SpectralDensity, samples: usize, step: f64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidParameter("the form needs at least one observation".into()));
        }
        let upper = if f.domain() == Domain::Circle { PI } else { 50.0 };
        let lowest = (1..=1024).map(|i| f.eval_abs(upper * i as f64 / 1024.0)).fold(f64::INFINITY, f64::min);
        if lowest < -1e-12 {
            return Err(Error::PreconditionViolation(format!(
                "a spectral density must be nonnegative; found {lowest:.3e}"
            )));
        }
        Ok(QuadraticFormSpec { f, g, samples, step })
    }

    pub fn f(&self) -> &SpectralDensity {
        &self.f
    }

    pub fn g(&self) -> &SpectralDensity {
        &self.g
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn domain(&self) -> Domain {
        self.f.domain()
    }

    /// T: the sample size, or the horizon of the continuous-time form.
    pub fn horizon(&self) -> f64 {
        self.samples as f64 * self.step
    }

    fn lags(&self, h: &SpectralDensity, n: usize) -> Result<Vec<f64>> {
        match self.domain() {
            Domain::Circle => h.fourier_coefficients(n),
            Domain::Line => (0..n).into_par_iter().map(|k| h.fourier_transform(k as f64 * self.step)).collect(),
        }
    }

    /// Coefficients with `extra_lags` covariances (at least T) for padding.
    pub fn coefficients_with(&self, extra_lags: usize) -> Result<FormCoefficients> {
        let cov = self.lags(&self.f, extra_lags.max(self.samples))?;
        let mut weights = self.lags(&self.g, self.samples)?;
        if self.domain() == Domain::Line {
            let h2 = self.step * self.step;
            weights.iter_mut().for_each(|w| *w *= h2);
        }
        Ok(FormCoefficients { cov, weights, step: self.step })
    }

    pub fn coefficients(&self) -> Result<FormCoefficients> {
        self.coefficients_with(self.samples)
    }

    /// E Q_T = tr[A_T(f)A_T(g)].
    pub fn mean(&self) -> Result<f64> {
        let c = self.coefficients()?;
        Ok(self.samples as f64 * fast_m2(&c.cov[..self.samples], &c.weights))
    }
}

/// Sample path of a stationary Gaussian process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePath {
    pub seed: u64,
    pub method: SamplingMethod,
    pub values: Vec<f64>,
}

/// X(0), …, X(T−1) for a density on the circle, or X(0), X(h), … on the line.
pub fn simulate_process(f: &SpectralDensity, t: usize, step: f64, seed: u64) -> Result<SamplePath> {
    let spec = match f.domain() {
        Domain::Circle => QuadraticFormSpec::discrete(f.clone(), SpectralDensity::white_noise(), t)?,
        Domain::Line => QuadraticFormSpec::continuous(f.clone(), f.clone(), step * t as f64, t)?,
    };
    let cov = spec.lags(f, lags_needed(t))?;
    let sampler = GaussianSampler::new(&cov, t)?;
    let (values, _) = sampler.sample_pair(&mut replicate_rng(seed, 0));
    Ok(SamplePath { seed, method: sampler.method(), values })
}

/// Q_T for an observed path.
pub fn compute_qt(spec: &QuadraticFormSpec, path: &[f64]) -> Result<f64> {
    if path.len() != spec.samples {
        return Err(Error::DimensionMismatch(format!(
            "path has {} observations, the form expects {}",
            path.len(),
            spec.samples
        )));
    }
    let c = spec.coefficients()?;
    ToeplitzMatrix::from_coefficients(c.weights)?.quadratic_form(path)
}

/// tr[(B(c₁)B(c₂))²] for symmetric Toeplitz matrices given by their first
/// rows, in O(T² log T) time and O(T) memory: the j-th term pairs column j
/// of AB with row j, both obtained from one FFT product each, and
/// persymmetry makes columns j and T−1−j contribute equally.
pub fn trace_square(c1: &[f64], c2: &[f64]) -> f64 {
    let n = c1.len();
    assert_eq!(n, c2.len(), "coefficient vectors must have equal length");
    let op1 = ToeplitzOperator::new(c1);
    let op2 = ToeplitzOperator::new(c2);
    let column = |c: &[f64], j: usize| -> Vec<f64> { (0..n).map(|i| c[i.abs_diff(j)]).collect() };
    let half = n.div_ceil(2);
    let starts: Vec<usize> = (0..half).step_by(2).collect();
    let parts: Vec<f64> = starts
        .par_iter()
        .map_init(Vec::new, |buf, &j| {
            let j2 = (j + 1).min(half - 1);
            let (ab1, ab2) = op1.apply_pair(&column(c2, j), &column(c2, j2), buf);
            let (ba1, ba2) = op2.apply_pair(&column(c1, j), &column(c1, j2), buf);
            let weight = |col: usize| if 2 * col + 1 == n { 1.0 } else { 2.0 };
            let dot = |u: &[f64], v: &[f64]| neumaier_sum(u.iter().zip(v).map(|(a, b)| a * b));
            let mut s = weight(j) * dot(&ab1, &ba1);
            if j2 != j {
                s += weight(j2) * dot(&ab2, &ba2);
            }
            s
        })
        .collect();
    neumaier_sum(parts)
}

/// χ₂(Q̃_T) = (2/T)tr[A_T(f)A_T(g)]² by the streamed trace.
pub fn chi2_trace(spec: &QuadraticFormSpec) -> Result<f64> {
    let c = spec.coefficients()?;
    let n = spec.samples;
    Ok(2.0 / spec.horizon() * trace_square(&c.operator_f(n), &c.operator_g(n)))
}

/// χ_k(Q̃_T) for k = 1, …, K.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulantVector {
    pub horizon: f64,
    pub values: Vec<f64>,
}

impl CumulantVector {
    /// χ_k, 1-based.
    pub fn get(&self, k: usize) -> Option<f64> {
        self.values.get(k.checked_sub(1)?).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CumulantRoute {
    /// Traces of powers of the product A_T(f)A_T(g).
    MatrixPowers,
    /// Power sums of the eigenvalues of A^{1/2}(f)A(g)A^{1/2}(f).
    Eigenvalues,
}

fn dense_operators(spec: &QuadraticFormSpec) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = spec.samples;
    if n > DENSE_CAP {
        return Err(Error::PreconditionViolation(format!("T = {n} exceeds the dense cap {DENSE_CAP}")));
    }
    let c = spec.coefficients()?;
    let (a, b) = (c.operator_f(n), c.operator_g(n));
    Ok((DMatrix::from_fn(n, n, |i, j| a[i.abs_diff(j)]), DMatrix::from_fn(n, n, |i, j| b[i.abs_diff(j)])))
}

/// Eigenvalues of A^{1/2}(f)A(g)A^{1/2}(f); Q_T has the law of Σλ_kξ_k² with
/// ξ_k independent standard normals.
pub fn product_eigenvalues(spec: &QuadraticFormSpec) -> Result<Vec<f64>> {
    let (a, b) = dense_operators(spec)?;
    symmetrized_eigenvalues(a, &b)
}

fn symmetrized_eigenvalues(a: DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure("eigen-decomposition of A_T(f) did not converge".into()))?;
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let half = v * DMatrix::from_diagonal(&roots) * v.transpose();
    let mut m = &half * b * &half;
    m = 0.5 * (&m + m.transpose());
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure("eigen-decomposition of the symmetrized product did not converge".into()))?;
    Ok(eig.eigenvalues.iter().copied().collect())
}

/// χ_k(Q̃_T) = T^{−k/2}2^{k−1}(k−1)!·tr[A_T(f)A_T(g)]^k for k ≥ 2, χ₁ = 0.
pub fn cumulants_via_trace(spec: &QuadraticFormSpec, k_max: usize, route: CumulantRoute) -> Result<CumulantVector> {
    if k_max < 2 {
        return Err(Error::InvalidParameter(format!("K = {k_max} must be at least 2")));
    }
    let (a, b) = dense_operators(spec)?;
    let traces: Vec<f64> = match route {
        CumulantRoute::MatrixPowers => {
            let p = &a * &b;
            let mut power = p.clone();
            let mut out = vec![power.trace()];
            for _ in 2..=k_max {
                power = &power * &p;
                out.push(power.trace());
            }
            out
        }
        CumulantRoute::Eigenvalues => {
            let lambda = symmetrized_eigenvalues(a, &b)?;
            (1..=k_max).map(|k| neumaier_sum(lambda.iter().map(|l| l.powi(k as i32)))).collect()
        }
    };
    let t = spec.horizon();
    let mut values = vec![0.0];
    let mut factorial = 1.0;
    for k in 2..=k_max {
        factorial *= (k - 1) as f64;
        values.push(t.powf(-(k as f64) / 2.0) * 2f64.powi(k as i32 - 1) * factorial * traces[k - 1]);
    }
    Ok(CumulantVector { horizon: t, values })
}

/// σ₀² = 16π³∫f²g², the limiting variance of Q̃_T.
pub fn sigma0_squared(f: &SpectralDensity, g: &SpectralDensity) -> Result<f64> {
    match integrate_product(&[(f, 2.0), (g, 2.0)]) {
        Ok(v) => Ok(16.0 * PI.powi(3) * v),
        Err(Error::DivergentIntegral(msg)) => Err(Error::RosenblattRegime(format!(
            "f^2 g^2 is not integrable ({msg}); the normalized form has no Gaussian limit"
        ))),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CltCondition {
    A,
    B,
    C,
    D,
    E,
}

/// Which sufficient conditions for asymptotic normality of Q̃_T hold.
/// `analytic` conditions follow from exponent metadata; `numeric` ones are
/// only supported by finite-grid evidence and are not proofs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltConditionReport {
    pub analytic: Vec<CltCondition>,
    pub numeric: Vec<CltCondition>,
    /// f²g² is not integrable, so none of the conditions can hold.
    pub non_clt: bool,
    pub notes: Vec<String>,
}

impl CltConditionReport {
    pub fn provable(&self) -> bool {
        !self.analytic.is_empty()
    }
}

/// h ≍ |λ|^{−a}|ln|λ||^{−γ}: the reciprocal of the largest p with h ∈ L^p,
/// and whether that p is attained.
fn lp_reciprocal(a: f64, gamma: f64) -> (f64, bool) {
    if a < 0.0 || (a == 0.0 && gamma >= 0.0) {
        (0.0, true)
    } else if a == 0.0 {
        (0.0, false)
    } else {
        (a, gamma > a)
    }
}

const EXP_EQ: f64 = 1e-12;

pub fn clt_condition_check(f: &SpectralDensity, g: &SpectralDensity) -> Result<CltConditionReport> {
    let mut report = CltConditionReport { analytic: vec![], numeric: vec![], non_clt: false, notes: vec![] };
    let (Some((af, gf)), Some((ag, gg))) = (f.singularity(), g.singularity()) else {
        report.notes.push("no exponent metadata: none provable".into());
        return Ok(report);
    };
    // f²g² ≍ |λ|^{−2(a_f+a_g)}|ln|^{−2(γ_f+γ_g)}
    let s = af.max(0.0) + ag.max(0.0);
    let sq_integrable = s < 0.5 - EXP_EQ || ((s - 0.5).abs() <= EXP_EQ && 2.0 * (gf + gg) > 1.0);
    if !sq_integrable {
        report.non_clt = true;
        report.notes.push(format!(
            "f^2 g^2 is not integrable (exponent sum {s}); conditions A-E all fail{}",
            if af + ag > 0.5 { ", Rosenblatt regime" } else { "" }
        ));
        return Ok(report);
    }
    let (pf, attained_f) = lp_reciprocal(af, gf);
    let (pg, attained_g) = lp_reciprocal(ag, gg);
    let recip = pf + pg;
    if recip < 0.5 - EXP_EQ || ((recip - 0.5).abs() <= EXP_EQ && attained_f && attained_g) {
        report.analytic.push(CltCondition::C);
        report.notes.push(format!(
            "C: f in L^p and g in L^q with 1/p + 1/q = {recip:.4} <= 1/2{}",
            if recip == 0.0 { " (p = q = infinity)" } else { "" }
        ));
    }
    if af < 1.0 && ag < 1.0 {
        let sum = af + ag;
        if sum < 0.5 - EXP_EQ {
            report.analytic.push(CltCondition::E);
            report.notes.push(format!("E: alpha + beta = {sum:.4} < 1/2"));
        } else if (sum - 0.5).abs() <= EXP_EQ && gf.min(gg) > 0.5 {
            report.analytic.push(CltCondition::E);
            report.notes.push(format!(
                "E: alpha + beta = 1/2 with slowly varying factors |ln|^-{:.3}, exponent > 1/2",
                gf.min(gg)
            ));
        }
    }
    if f.domain() == Domain::Circle {
        numeric_conditions(f, g, &mut report)?;
    } else {
        report.notes.push("A, B, D are not checked numerically on the line".into());
    }
    Ok(report)
}

/// Relative distances |x_i − target|/|target| must shrink along the grid and
/// end below `last`.
fn converging(values: &[f64], target: f64, last: f64) -> bool {
    let rel: Vec<f64> = values.iter().map(|v| ((v - target) / target).abs()).collect();
    rel.windows(2).all(|w| w[1] <= w[0] * 1.05 + 1e-12) && rel.last().is_some_and(|r| *r < last)
}

fn wrap(x: f64) -> f64 {
    x - TWO_PI * (x / TWO_PI).round()
}

/// ∫ over the circle of a function with integrable singularities at the
/// given points, panel by panel with tanh–sinh. Logarithmic factors at a
/// singularity can stall the error estimate; the best estimate is kept since
/// these integrals only feed non-authoritative checks.
fn integrate_circle(h: impl Fn(f64) -> f64, points: &[f64]) -> Result<f64> {
    let mut breaks: Vec<f64> = points.iter().map(|p| wrap(*p)).collect();
    breaks.extend([-PI, PI]);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let tol = Tolerance::new(1e-14, 1e-9);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += tanh_sinh_best(|x, _, _| h(x), w[0], w[1], tol).value;
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::DivergentIntegral("shifted product integral is not finite".into()))
    }
}

/// Whether T Fourier coefficients come from a recursion or closed form
/// rather than T separate quadratures.
fn fast_coefficients(h: &SpectralDensity) -> bool {
    match h.kind() {
        DensityKind::PowerLogLaw { gamma, .. } => *gamma == 0.0,
        DensityKind::Sum { terms } => terms.iter().all(|t| fast_coefficients(&t.density)),
        DensityKind::Frbm { .. } => false,
        _ => true,
    }
}

fn numeric_conditions(f: &SpectralDensity, g: &SpectralDensity, report: &mut CltConditionReport) -> Result<()> {
    let fv = |x: f64| f.eval_abs(wrap(x).abs());
    let gv = |x: f64| g.eval_abs(wrap(x).abs());
    let base = integrate_circle(|x| (fv(x) * gv(x)).powi(2), &[0.0])?;
    if base <= 0.0 {
        report.notes.push("f g vanishes: the limit variance is zero".into());
        return Ok(());
    }
    let shifts = [0.2, 0.05, 0.0125, 0.003125];
    // A: χ₂(Q̃_T) → σ₀²
    if fast_coefficients(f) && fast_coefficients(g) {
        let sigma0 = 16.0 * PI.powi(3) * base;
        let grid = [128usize, 256, 512, 1024];
        let chi2: Vec<f64> = grid
            .iter()
            .map(|&t| chi2_trace(&QuadraticFormSpec::discrete(f.clone(), g.clone(), t)?))
            .collect::<Result<_>>()?;
        if converging(&chi2, sigma0, 0.1) {
            report.numeric.push(CltCondition::A);
            report.notes.push(format!("A: chi2 at T = 1024 is {:.5} against sigma0^2 = {sigma0:.5}", chi2[3]));
        }
    } else {
        report.notes.push("A: not checked, the Fourier coefficients need one quadrature per lag".into());
    }
    // B: φ(u) → φ(0) = ∫f²g² along a ray; L² membership is not checked
    let phi: Vec<f64> = shifts
        .iter()
        .map(|&u| {
            integrate_circle(|x| fv(x) * gv(x - u) * fv(x - 2.0 * u) * gv(x - 3.0 * u), &[0.0, u, 2.0 * u, 3.0 * u])
        })
        .collect::<Result<_>>()?;
    if converging(&phi, base, 0.05) {
        report.numeric.push(CltCondition::B);
        report.notes.push("B: phi continuous at 0 along a ray (L^2 membership not checked)".into());
    }
    // D: f, g ∈ L², fg ∈ L², and shift continuity of ∫f²(λ)g²(λ−μ)
    let (af, gf) = f.singularity().unwrap_or((0.0, 0.0));
    let (ag, gg) = g.singularity().unwrap_or((0.0, 0.0));
    let l2 = |a: f64, gm: f64| a < 0.5 || (a == 0.5 && gm > 0.5);
    if l2(af, gf) && l2(ag, gg) {
        let shifted: Vec<f64> = shifts
            .iter()
            .map(|&u| integrate_circle(|x| (fv(x) * gv(x - u)).powi(2), &[0.0, u]))
            .collect::<Result<_>>()?;
        if converging(&shifted, base, 0.05) {
            report.numeric.push(CltCondition::D);
            report.notes.push("D: shifted integral of f^2 g^2 converges as the shift shrinks".into());
        }
    }
    Ok(())
}

fn normalized_forms(spec: &QuadraticFormSpec, replicates: usize, seed: u64) -> Result<(Vec<f64>, SamplingMethod)> {
    let n = spec.samples;
    let c = spec.coefficients_with(lags_needed(n))?;
    let sampler = GaussianSampler::new(&c.cov, n)?;
    let mean = n as f64 * fast_m2(&c.cov[..n], &c.weights);
    let scale = 1.0 / spec.horizon().sqrt();
    let diagonal = c.weights[1..].iter().all(|w| *w == 0.0);
    let op = ToeplitzOperator::new(&c.weights);
    let pairs = replicates.div_ceil(2);
    let values: Vec<[f64; 2]> = (0..pairs)
        .into_par_iter()
        .map_init(Vec::new, |buf, p| {
            let (x1, x2) = sampler.sample_pair(&mut replicate_rng(seed, p as u64));
            let dot = |u: &[f64], v: &[f64]| neumaier_sum(u.iter().zip(v).map(|(a, b)| a * b));
            let (q1, q2) = if diagonal {
                (c.weights[0] * dot(&x1, &x1), c.weights[0] * dot(&x2, &x2))
            } else {
                let (y1, y2) = op.apply_pair(&x1, &x2, buf);
                (dot(&x1, &y1), dot(&x2, &y2))
            };
            [scale * (q1 - mean), scale * (q2 - mean)]
        })
        .collect();
    let mut out: Vec<f64> = values.into_iter().flatten().collect();
    out.truncate(replicates);
    Ok((out, sampler.method()))
}

/// Replicates of Q̃_T = T^{−1/2}(Q_T − E Q_T).
pub fn sample_normalized_forms(spec: &QuadraticFormSpec, replicates: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(normalized_forms(spec, replicates, seed)?.0)
}

/// sup_x |F̂(x) − F(x)| for the empirical CDF of `sorted` samples.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let c = cdf(*x);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

/// Unbiased sample mean, variance (k₂) and third cumulant (k₃), with the
/// large-sample standard errors of k₂ and k₃ for a normal population.
fn k_statistics(x: &[f64]) -> (f64, f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mean = neumaier_sum(x.iter().copied()) / n;
    let m2 = neumaier_sum(x.iter().map(|v| (v - mean).powi(2))) / n;
    let m3 = neumaier_sum(x.iter().map(|v| (v - mean).powi(3))) / n;
    let k2 = n / (n - 1.0) * m2;
    let k3 = n * n / ((n - 1.0) * (n - 2.0)) * m3;
    (mean, k2, k3, k2 * (2.0 / (n - 1.0)).sqrt(), (6.0 / n).sqrt() * k2.powf(1.5))
}

/// Monte-Carlo study of Q̃_T against its Gaussian limit N(0, σ₀²).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltStudy {
    pub seed: u64,
    pub replicates: usize,
    pub horizon: f64,
    pub samples: usize,
    pub sampling: SamplingMethod,
    pub sigma0_squared: f64,
    /// Exact finite-T variance χ₂(Q̃_T).
    pub chi2: f64,
    /// Exact χ₃(Q̃_T) when T is within the dense cap.
    pub chi3: Option<f64>,
    pub mean: f64,
    pub variance: f64,
    pub k3: f64,
    pub k2_stderr: f64,
    pub k3_stderr: f64,
    pub ks_distance: f64,
    pub conditions: CltConditionReport,
}

/// Runs `replicates` draws of Q̃_T. Unless `force` is set, at least one
/// sufficient condition must hold analytically or numerically.
pub fn clt_monte_carlo(spec: &QuadraticFormSpec, replicates: usize, seed: u64, force: bool) -> Result<CltStudy> {
    if replicates < 3 {
        return Err(Error::InvalidParameter("a Monte-Carlo study needs at least 3 replicates".into()));
    }
    let conditions = clt_condition_check(&spec.f, &spec.g)?;
    if !force && conditions.analytic.is_empty() && conditions.numeric.is_empty() {
        return Err(Error::PreconditionViolation(format!(
            "no sufficient CLT condition holds: {}",
            conditions.notes.join("; ")
        )));
    }
    let sigma0 = sigma0_squared(&spec.f, &spec.g)?;
    let chi2 = chi2_trace(spec)?;
    let chi3 = if spec.samples <= 1024 {
        Some(cumulants_via_trace(spec, 3, CumulantRoute::Eigenvalues)?.values[2])
    } else {
        None
    };
    let (mut x, sampling) = normalized_forms(spec, replicates, seed)?;
    let (mean, k2, k3, k2_se, k3_se) = k_statistics(&x);
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sd = sigma0.sqrt();
    let ks = ks_distance(&x, |v| normal_cdf(v / sd));
    Ok(CltStudy {
        seed,
        replicates,
        horizon: spec.horizon(),
        samples: spec.samples,
        sampling,
        sigma0_squared: sigma0,
        chi2,
        chi3,
        mean,
        variance: k2,
        k3,
        k2_stderr: k2_se,
        k3_stderr: k3_se,
        ks_distance: ks,
        conditions,
    })
}

fn be_ratio(f: &SpectralDensity, g: &SpectralDensity) -> Result<f64> {
    let i3 = integrate_product(&[(f, 3.0), (g, 3.0)])?;
    let i2 = integrate_product(&[(f, 2.0), (g, 2.0)])?;
    Ok(i3 / i2.powf(1.5))
}

/// √(2/3)·∫f³g³/(∫f²g²)^{3/2}·(1 − z²)e^{−z²/2}.
pub fn berry_esseen_limit(f: &SpectralDensity, g: &SpectralDensity, z: f64) -> Result<f64> {
    Ok((2.0f64 / 3.0).sqrt() * be_ratio(f, g)? * (1.0 - z * z) * (-0.5 * z * z).exp())
}

/// The first Edgeworth term of √T(P(Q̂_T ≤ z) − Φ(z)), computed from the
/// limiting cumulants: (√2/3)·∫f³g³/(∫f²g²)^{3/2}·(1 − z²)e^{−z²/2}.
pub fn edgeworth_limit(f: &SpectralDensity, g: &SpectralDensity, z: f64) -> Result<f64> {
    Ok(2f64.sqrt() / 3.0 * be_ratio(f, g)? * (1.0 - z * z) * (-0.5 * z * z).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapPoint {
    pub z: f64,
    /// √T(P̂(Q̂_T ≤ z) − Φ(z)).
    pub empirical_gap: f64,
    pub be3_limit: f64,
    pub edgeworth: f64,
}

/// √T·sup_z|P̂(Q̂_T ≤ z) − Φ(z)| with Q̂_T standardized by the exact χ₂.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerryEsseenPoint {
    pub t: usize,
    pub replicates: usize,
    pub sqrt_t_gap: f64,
    /// √T times the 99% quantile of the Kolmogorov statistic under pure
    /// sampling noise, 1.628/√R.
    pub noise_band: f64,
    /// sup_z of the Edgeworth term.
    pub edgeworth_sup: f64,
    pub curve: Vec<GapPoint>,
}

pub fn berry_esseen_empirical(
    f: &SpectralDensity,
    g: &SpectralDensity,
    grid: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<BerryEsseenPoint>> {
    let edgeworth_sup = edgeworth_limit(f, g, 0.0)?.abs();
    let zs: Vec<f64> = (0..=24).map(|i| -3.0 + 0.25 * i as f64).collect();
    grid.iter()
        .enumerate()
        .map(|(idx, &t)| {
            let spec = QuadraticFormSpec::discrete(f.clone(), g.clone(), t)?;
            let sd = chi2_trace(&spec)?.sqrt();
            let study_seed = seed.wrapping_add(idx as u64);
            let mut x = sample_normalized_forms(&spec, replicates, study_seed)?;
            x.iter_mut().for_each(|v| *v /= sd);
            x.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let root = (t as f64).sqrt();
            let n = x.len() as f64;
            let curve = zs
                .iter()
                .map(|&z| {
                    let below = x.partition_point(|v| *v <= z) as f64 / n;
                    Ok(GapPoint {
                        z,
                        empirical_gap: root * (below - normal_cdf(z)),
                        be3_limit: berry_esseen_limit(f, g, z)?,
                        edgeworth: edgeworth_limit(f, g, z)?,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(BerryEsseenPoint {
                t,
                replicates,
                sqrt_t_gap: root * ks_distance(&x, normal_cdf),
                noise_band: root * 1.628 / n.sqrt(),
                edgeworth_sup,
                curve,
            })
        })
        .collect()
}

/// The pair f₀ and g_± = g₀ ± C built from dyadic step functions with
/// exponents p and q.
pub fn counterexample_pair(p: f64, q: f64, c: f64, sign: f64) -> Result<(SpectralDensity, SpectralDensity)> {
    if !(p >= 2.0 && q > 1.0 && 1.0 / p + 1.0 / q > 1.0) {
        return Err(Error::PreconditionViolation(format!(
            "needs p >= 2, q > 1 and 1/p + 1/q > 1, got p = {p}, q = {q}"
        )));
    }
    if !(c > 0.0 && c.is_finite()) || sign.abs() != 1.0 {
        return Err(Error::InvalidParameter("C must be positive and the sign +1 or -1".into()));
    }
    let f0 = SpectralDensity::dyadic(p, 0)?;
    let g0 = SpectralDensity::dyadic(q, 1)?;
    let g = SpectralDensity::sum(vec![(1.0, g0), (sign * c, SpectralDensity::constant(1.0)?)])?;
    Ok((f0, g))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chi2Point {
    pub t: usize,
    pub chi2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub p: f64,
    pub q: f64,
    pub c: f64,
    pub sign: f64,
    /// ∫f₀²g_±² as a series over the dyadic panels with its analytic tail.
    pub f2g2_series: f64,
    /// The same integral by quadrature over the tabulated panels.
    pub f2g2_quadrature: f64,
    pub points: Vec<Chi2Point>,
    /// Smallest χ₂(2T)/χ₂(T) over consecutive grid points.
    pub min_ratio: f64,
    pub increasing: bool,
}

/// ∫f₀²g_±²: the supports of f₀ and g₀ are disjoint, so only C²∫f₀² remains,
/// Σ_{s even ≥ 2} C²(2^s/s²)^{2/p}2^{−s}.
fn counterexample_f2g2(p: f64, c: f64) -> f64 {
    let last = 200_000u64;
    let term = |s: f64| ((2.0 / p - 1.0) * s * 2f64.ln() - 4.0 / p * s.ln()).exp();
    let head = neumaier_sum((1..=last / 2).map(|m| term(2.0 * m as f64)));
    // for p = 2 the terms are 1/s²; Σ_{s even > S} 1/s² ≈ 1/(2S) − 1/(2S²)
    let s = last as f64;
    let tail = if p == 2.0 { 1.0 / (2.0 * s) - 1.0 / (2.0 * s * s) } else { 0.0 };
    c * c * (head + tail)
}

pub fn counterexample_chi2_divergence(p: f64, q: f64, c: f64, sign: f64, grid: &[usize]) -> Result<CounterexampleReport> {
    let (f, g) = counterexample_pair(p, q, c, sign)?;
    let quad = integrate_product(&[(&f, 2.0), (&g, 2.0)])?;
    let points: Vec<Chi2Point> = grid
        .iter()
        .map(|&t| {
            let cf = f.fourier_coefficients(t)?;
            let cg = g.fourier_coefficients(t)?;
            Ok(Chi2Point { t, chi2: 2.0 / t as f64 * trace_square(&cf, &cg) })
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = points.windows(2).map(|w| w[1].chi2 / w[0].chi2).collect();
    Ok(CounterexampleReport {
        p,
        q,
        c,
        sign,
        f2g2_series: counterexample_f2g2(p, c),
        f2g2_quadrature: quad,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        increasing: ratios.iter().all(|r| *r > 1.0),
        points,
    })
}

/// Growth of Var(Q_T) = 2tr[B_T(f)B_T(g)]² for f = |λ|^{−α}, g = |λ|^{−β}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoncentralScaling {
    pub alpha: f64,
    pub beta: f64,
    pub grid: Vec<usize>,
    pub variances: Vec<f64>,
    pub fitted_slope: f64,
    pub slope_stderr: f64,
    /// 2(α + β) in the non-central regime, 1 under the CLT scaling.
    pub expected_slope: f64,
    /// Var(Q_{2T})/Var(Q_T) at the last doubling of the grid, if any.
    pub doubling_ratio: Option<f64>,
    /// 2^{2H} with H = α + β (or 2 under the CLT scaling).
    pub expected_ratio: f64,
}

pub fn noncentral_scaling_check(alpha: f64, beta: f64, grid: &[usize]) -> Result<NoncentralScaling> {
    if !(alpha < 1.0 && beta < 1.0) {
        return Err(Error::PreconditionViolation(format!("needs alpha, beta < 1, got {alpha}, {beta}")));
    }
    if grid.len() < 2 {
        return Err(Error::DegenerateExperiment("the slope fit needs at least two T values".into()));
    }
    let f = SpectralDensity::power_log(alpha, 0.0)?;
    let g = SpectralDensity::power_log(beta, 0.0)?;
    let variances: Vec<f64> = grid
        .iter()
        .map(|&t| Ok(2.0 * trace_square(&f.fourier_coefficients(t)?, &g.fourier_coefficients(t)?)))
        .collect::<Result<_>>()?;
    let x: Vec<f64> = grid.iter().map(|t| (*t as f64).ln()).collect();
    let y: Vec<f64> = variances.iter().map(|v| v.ln()).collect();
    let fit = least_squares(&x, &y);
    let h = alpha + beta;
    let expected_slope = if h > 0.5 { 2.0 * h } else { 1.0 };
    let n = grid.len();
    let doubling_ratio = (grid[n - 1] == 2 * grid[n - 2]).then(|| variances[n - 1] / variances[n - 2]);
    Ok(NoncentralScaling {
        alpha,
        beta,
        grid: grid.to_vec(),
        variances,
        fitted_slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        expected_slope,
        doubling_ratio,
        expected_ratio: 2f64.powf(expected_slope),
    })
}
