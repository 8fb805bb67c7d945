//! Truncated Toeplitz operators W_T(h) on L²[0, T]: Nyström discretisation
//! on composite Gauss–Legendre panels, the exact time-domain formula for
//! m = 2, the second-order expansion for fRBm pairs, and the continuous rate
//! table.

use std::f64::consts::PI;

use log::debug;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceTable;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::special::{gamma, neumaier_sum};
use crate::spectral::{closed_form_integral, DensityKind, Domain, SpectralDensity};
use crate::toeplitz::{PredictedRate, SecondOrderExpansion, TraceSpec};

const TWO_PI: f64 = 2.0 * PI;

/// Gauss–Legendre points per panel.
pub const PANEL_ORDER: usize = 4;
/// Node cap for m = 2, where the trace is streamed without a matrix.
pub const STREAMED_NODE_CAP: usize = 1 << 17;
/// Node cap for m > 2, where dense kernel matrices are multiplied.
pub const DENSE_NODE_CAP: usize = 2048;

/// Composite Gauss–Legendre rule on [0, T]: P equal panels of width h with
/// the same local nodes ξ_a and weights w_a on each.
#[derive(Debug, Clone, PartialEq)]
struct PanelRule {
    panels: usize,
    width: f64,
    local_nodes: Vec<f64>,
    local_weights: Vec<f64>,
}

impl PanelRule {
    fn new(t: f64, n_nodes: usize) -> Self {
        let panels = (n_nodes / PANEL_ORDER).max(1);
        let width = t / panels as f64;
        let (x, w) = gauss_legendre(PANEL_ORDER);
        PanelRule {
            panels,
            width,
            local_nodes: x.iter().map(|x| 0.5 * width * (x + 1.0)).collect(),
            local_weights: w.iter().map(|w| 0.5 * width * w).collect(),
        }
    }

    fn nodes(&self) -> Vec<f64> {
        (0..self.panels)
            .flat_map(|p| self.local_nodes.iter().map(move |x| p as f64 * self.width + x))
            .collect()
    }

    fn weights(&self) -> Vec<f64> {
        (0..self.panels).flat_map(|_| self.local_weights.iter().copied()).collect()
    }
}

/// Nyström representation of W_T(h): nodes and weights on [0, T] and the
/// kernel K_ij = ĥ(x_i − x_j).
#[derive(Debug, Clone)]
pub struct OperatorDiscretization {
    pub t: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kernel: DMatrix<f64>,
}

impl OperatorDiscretization {
    pub fn new(f: &SpectralDensity, t: f64, n_nodes: usize) -> Result<Self> {
        check_horizon(t)?;
        let table = CovarianceTable::build(f, t)?;
        Ok(OperatorDiscretization::from_table(&table, t, n_nodes))
    }

    fn from_table(table: &CovarianceTable, t: f64, n_nodes: usize) -> Self {
        let rule = PanelRule::new(t, n_nodes);
        let nodes = rule.nodes();
        let weights = rule.weights();
        let n = nodes.len();
        let kernel = DMatrix::from_fn(n, n, |i, j| table.eval(nodes[i] - nodes[j]));
        OperatorDiscretization { t, nodes, weights, kernel }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// tr W_T(h) ≈ Σ w_i K_ii = T ĥ(0).
    pub fn trace(&self) -> f64 {
        neumaier_sum(self.weights.iter().enumerate().map(|(i, w)| w * self.kernel[(i, i)]))
    }

    /// W^{1/2} K W^{1/2}, which has the same spectrum as K W.
    pub fn symmetric_matrix(&self) -> DMatrix<f64> {
        let s: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let n = self.n_nodes();
        DMatrix::from_fn(n, n, |i, j| s[i] * s[j] * self.kernel[(i, j)])
    }
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon T = {t} must be positive and finite")));
    }
    Ok(())
}

/// Node-doubling controls for [`nystrom_trace_product`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NystromOptions {
    pub initial_nodes: usize,
    /// Defaults to [`STREAMED_NODE_CAP`] for m = 2 and [`DENSE_NODE_CAP`] otherwise.
    pub max_nodes: Option<usize>,
    pub rel_tol: f64,
}

impl Default for NystromOptions {
    fn default() -> Self {
        NystromOptions { initial_nodes: 64, max_nodes: None, rel_tol: 1e-6 }
    }
}

/// Outcome of the node-doubling loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NystromTrace {
    /// Accepted value of (1/T) tr[Π W_T(h_i)].
    pub value: f64,
    /// Node count of the last resolution used.
    pub nodes: usize,
    /// True when `value` is an Aitken extrapolation of the raw sequence.
    pub extrapolated: bool,
    /// (nodes, raw value) for every resolution tried.
    pub iterates: Vec<(usize, f64)>,
}

/// (1/T) tr[W_T(h₁) ⋯ W_T(h_m)] by Nyström discretisation, doubling the node
/// count until the raw values, or their Aitken extrapolations, settle to
/// `rel_tol`.
pub fn nystrom_trace_product(generators: &[SpectralDensity], t: f64, opts: NystromOptions) -> Result<NystromTrace> {
    check_generators(generators)?;
    check_horizon(t)?;
    if opts.initial_nodes < 64 {
        return Err(Error::InvalidParameter(format!("at least 64 nodes are required, got {}", opts.initial_nodes)));
    }
    let cap = opts
        .max_nodes
        .unwrap_or(if generators.len() == 2 { STREAMED_NODE_CAP } else { DENSE_NODE_CAP });
    let tables = distinct_tables(generators, t)?;
    let mut n = opts.initial_nodes;
    let mut iterates: Vec<(usize, f64)> = Vec::new();
    let mut extrapolations: Vec<f64> = Vec::new();
    while n <= cap {
        let s = trace_at_resolution(&tables, t, n);
        debug!("Nystrom trace with {n} nodes: {s}");
        iterates.push((n, s));
        let k = iterates.len();
        if k >= 2 {
            let (prev, last) = (iterates[k - 2].1, iterates[k - 1].1);
            if (last - prev).abs() <= opts.rel_tol * last.abs() {
                return Ok(NystromTrace { value: last, nodes: n, extrapolated: false, iterates });
            }
        }
        if k >= 3 {
            if let Some(e) = aitken(iterates[k - 3].1, iterates[k - 2].1, iterates[k - 1].1) {
                if let Some(prev) = extrapolations.last() {
                    if (e - prev).abs() <= opts.rel_tol * e.abs() {
                        return Ok(NystromTrace { value: e, nodes: n, extrapolated: true, iterates });
                    }
                }
                extrapolations.push(e);
            } else {
                extrapolations.clear();
            }
        }
        n *= 2;
    }
    let k = iterates.len();
    Err(Error::DiscretizationFailure {
        previous: if k >= 2 { iterates[k - 2].1 } else { f64::NAN },
        last: iterates.last().map_or(f64::NAN, |v| v.1),
    })
}

/// (1/T) tr[Π W_T(h_i)] at a single resolution.
pub fn nystrom_trace_at(generators: &[SpectralDensity], t: f64, n_nodes: usize) -> Result<f64> {
    check_generators(generators)?;
    check_horizon(t)?;
    let tables = distinct_tables(generators, t)?;
    Ok(trace_at_resolution(&tables, t, n_nodes))
}

/// S* = S₃ − (S₃ − S₂)²/((S₃ − S₂) − (S₂ − S₁)) for a geometrically
/// converging sequence.
fn aitken(s1: f64, s2: f64, s3: f64) -> Option<f64> {
    let (d1, d2) = (s2 - s1, s3 - s2);
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() || d2.abs() >= d1.abs() {
        return None;
    }
    Some(s3 - d2 * d2 / (d2 - d1))
}

fn check_generators(generators: &[SpectralDensity]) -> Result<()> {
    if generators.is_empty() {
        return Err(Error::InvalidParameter("a trace needs at least one generator".into()));
    }
    if generators.iter().any(|g| g.domain() != Domain::Line) {
        return Err(Error::MethodMismatch("Toeplitz operators need generators on the line".into()));
    }
    Ok(())
}

/// One table per generator, shared between repeated generators.
fn distinct_tables(generators: &[SpectralDensity], t: f64) -> Result<Vec<std::sync::Arc<CovarianceTable>>> {
    let mut built: Vec<(&SpectralDensity, std::sync::Arc<CovarianceTable>)> = Vec::new();
    let mut out = Vec::with_capacity(generators.len());
    for g in generators {
        if let Some((_, tab)) = built.iter().find(|(h, _)| *h == g) {
            out.push(tab.clone());
            continue;
        }
        let tab = std::sync::Arc::new(CovarianceTable::build(g, t)?);
        built.push((g, tab.clone()));
        out.push(tab);
    }
    Ok(out)
}

fn trace_at_resolution(tables: &[std::sync::Arc<CovarianceTable>], t: f64, n_nodes: usize) -> f64 {
    let rule = PanelRule::new(t, n_nodes);
    match tables.len() {
        1 => tables[0].eval(0.0),
        2 => streamed_pair_trace(&tables[0], &tables[1], &rule) / t,
        _ => {
            let nodes = rule.nodes();
            let s: Vec<f64> = rule.weights().iter().map(|w| w.sqrt()).collect();
            let n = nodes.len();
            let mats: Vec<DMatrix<f64>> = tables
                .iter()
                .map(|tab| DMatrix::from_fn(n, n, |i, j| s[i] * s[j] * tab.eval(nodes[i] - nodes[j])))
                .collect();
            let mut p = mats[0].clone();
            for a in &mats[1..mats.len() - 1] {
                p = &p * a;
            }
            let last = &mats[mats.len() - 1];
            let rows: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| neumaier_sum((0..n).map(|j| p[(i, j)] * last[(j, i)])))
                .collect();
            neumaier_sum(rows) / t
        }
    }
}

/// Σ_ij w_i w_j r₁(x_i − x_j) r₂(x_i − x_j). Node differences depend only
/// on the panel offset d and the local indices (a, b), and offset d occurs
/// P − |d| times, so the double sum costs O(P q²) kernel evaluations.
fn streamed_pair_trace(r1: &CovarianceTable, r2: &CovarianceTable, rule: &PanelRule) -> f64 {
    let p = rule.panels as i64;
    let q = PANEL_ORDER;
    let per_offset: Vec<f64> = (-(p - 1)..p)
        .into_par_iter()
        .map(|d| {
            let mult = (p - d.abs()) as f64;
            let mut terms = Vec::with_capacity(q * q);
            for a in 0..q {
                for b in 0..q {
                    let lag = d as f64 * rule.width + rule.local_nodes[a] - rule.local_nodes[b];
                    terms.push(rule.local_weights[a] * rule.local_weights[b] * r1.eval(lag) * r2.eval(lag));
                }
            }
            mult * neumaier_sum(terms)
        })
        .collect();
    neumaier_sum(per_offset)
}

/// S(T) = ∫_{−T}^{T} (1 − |t|/T) r₁(t) r₂(t) dt.
pub fn exact_trace_m2(f1: &SpectralDensity, f2: &SpectralDensity, t: f64) -> Result<f64> {
    Ok(exact_trace_m2_grid(f1, f2, &[t])?[0])
}

/// [`exact_trace_m2`] over a grid of horizons, sharing one covariance table
/// per density.
pub fn exact_trace_m2_grid(f1: &SpectralDensity, f2: &SpectralDensity, grid: &[f64]) -> Result<Vec<f64>> {
    check_generators(&[f1.clone(), f2.clone()])?;
    let t_max = grid.iter().copied().fold(0.0, f64::max);
    for t in grid {
        check_horizon(*t)?;
    }
    let tables = distinct_tables(&[f1.clone(), f2.clone()], t_max)?;
    Ok(grid.iter().map(|&t| triangle_integral(&tables[0], &tables[1], t)).collect())
}

/// 2∫_0^T (1 − t/T) r₁r₂ dt; on each common polynomial piece the integrand
/// is a polynomial of degree ≤ 33, which 17-point Gauss–Legendre integrates
/// exactly.
fn triangle_integral(r1: &CovarianceTable, r2: &CovarianceTable, t: f64) -> f64 {
    let mut breaks: Vec<f64> = r1
        .breakpoints()
        .chain(r2.breakpoints())
        .filter(|b| *b > 0.0 && *b < t)
        .collect();
    breaks.push(0.0);
    breaks.push(t);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let (x, w) = gauss_legendre(17);
    let parts: Vec<f64> = breaks
        .par_windows(2)
        .map(|seg| {
            let (a, b) = (seg[0], seg[1]);
            let half = 0.5 * (b - a);
            neumaier_sum(x.iter().zip(&w).map(|(xi, wi)| {
                let s = a + half * (xi + 1.0);
                half * wi * (1.0 - s / t) * r1.eval(s) * r2.eval(s)
            }))
        })
        .collect();
    2.0 * neumaier_sum(parts)
}

/// Second-order expansion of (1/T)tr[W_T(f₁)W_T(f₂)] for two fRBm densities
/// C_i|λ|^{−2α_i}(1 + λ²)^{−β_i}.
pub fn second_order_expansion_continuous(
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    c1: f64,
    c2: f64,
    t: f64,
) -> Result<SecondOrderExpansion> {
    let a = alpha1 + alpha2;
    if !(a > 0.0 && a < 0.5) {
        return Err(Error::ExpansionInapplicable(format!("alpha1 + alpha2 = {a} must lie in (0, 1/2)")));
    }
    if alpha1 <= 0.0 || alpha2 <= 0.0 {
        return Err(Error::ExpansionInapplicable("both alpha_i must be positive".into()));
    }
    let f1 = SpectralDensity::frbm(c1, alpha1, beta1)?;
    let f2 = SpectralDensity::frbm(c2, alpha2, beta2)?;
    let leading = TWO_PI * closed_form_integral(&f1, &f2)?;
    let constant = 2.0 * c1 * c2 * PI * PI
        / ((PI * alpha1).cos() * (PI * alpha2).cos() * gamma(2.0 * alpha1) * gamma(2.0 * alpha2))
        / (2.0 * a * (1.0 - 2.0 * a));
    let exponent = 1.0 - 2.0 * a;
    Ok(SecondOrderExpansion { leading, constant, exponent, predicted: leading - constant * t.powf(-exponent) })
}

/// Rate statements for Toeplitz operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ContinuousTheorem {
    /// Continuity-type hypotheses: o(1).
    T5,
    /// Smooth generators: O(T⁻¹).
    T51B1,
    /// Hölder condition of order γ on the product kernel.
    T51B2 { gamma: f64 },
    /// L^p-Lipschitz generators of order γ.
    T51B3 { gamma: f64 },
    /// Power-type poles σ_i with Σσ_i < 1: γ = (1 − σ)/m.
    T51B4,
    /// m = 2, Lip(p_i, γ_i) with 1/p₁ + 1/p₂ = 1.
    T52 { gamma1: f64, gamma2: f64 },
    /// m = 2 with power-type poles: γ = 1 − (σ₁ + σ₂).
    T53,
    /// fRBm f against g ∈ L^q: o(1).
    M51,
    /// fRBm f against g ∈ Lip(q, 1/p − 2α): γ = 1/p − 2α.
    M52 { p: f64 },
    /// [W(f₁)W(f₂)]^ν for fRBm pairs: γ = 1/(2ν) − (α₁ + α₂).
    M53,
}

/// Theoretical exponent for a continuous `spec` under `theorem`.
pub fn predicted_rate_continuous(spec: &TraceSpec, theorem: ContinuousTheorem) -> Result<PredictedRate> {
    let inapplicable = |msg: String| Err(Error::TheoremInapplicable(msg));
    if spec.domain() != Domain::Line {
        return inapplicable("operator theorems need generators on the line".into());
    }
    if spec.has_inverse() {
        return inapplicable("no rate statements exist for operator products with inverses".into());
    }
    let m = spec.m();
    match theorem {
        ContinuousTheorem::T5 | ContinuousTheorem::M51 => Ok(PredictedRate::LittleO),
        ContinuousTheorem::T51B1 => {
            for g in spec.generators() {
                match g.pole_exponent() {
                    Some(a) if a <= 0.0 => {}
                    _ => return inapplicable("B1 needs bounded, smooth generators".into()),
                }
            }
            Ok(PredictedRate::Exponent(1.0))
        }
        ContinuousTheorem::T51B2 { gamma } | ContinuousTheorem::T51B3 { gamma } => {
            if !(gamma > 0.0 && gamma <= 1.0) {
                return inapplicable(format!("Hoelder order {gamma} outside (0, 1]"));
            }
            Ok(PredictedRate::Exponent(gamma))
        }
        ContinuousTheorem::T51B4 => {
            let sigma = pole_and_decay_sum(spec)?;
            Ok(PredictedRate::Exponent((1.0 - sigma) / m as f64))
        }
        ContinuousTheorem::T52 { gamma1, gamma2 } => {
            if m != 2 {
                return inapplicable(format!("the statement is for m = 2, got m = {m}"));
            }
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
        ContinuousTheorem::T53 => {
            if m != 2 {
                return inapplicable(format!("the statement is for m = 2, got m = {m}"));
            }
            let sigma = pole_and_decay_sum(spec)?;
            Ok(PredictedRate::Exponent(1.0 - sigma))
        }
        ContinuousTheorem::M52 { p } => {
            let DensityKind::Frbm { alpha, beta, .. } = spec.generators()[0].kind() else {
                return inapplicable("M52 needs an fRBm density as first generator".into());
            };
            if !(p >= 1.0 && *alpha > 0.0 && *alpha < 1.0 / (2.0 * p) && alpha + beta > 0.5) {
                return inapplicable(format!("needs 0 < alpha < 1/(2p) with p = {p}, got alpha = {alpha}"));
            }
            Ok(PredictedRate::Exponent(1.0 / p - 2.0 * alpha))
        }
        ContinuousTheorem::M53 => {
            if m % 2 != 0 {
                return inapplicable("M53 needs an even number of factors".into());
            }
            let nu = m / 2;
            let (g1, g2) = (&spec.generators()[0], &spec.generators()[1]);
            let alternating = spec.generators().chunks(2).all(|c| &c[0] == g1 && &c[1] == g2);
            let (a1, a2) = match (g1.kind(), g2.kind()) {
                (DensityKind::Frbm { alpha: a1, .. }, DensityKind::Frbm { alpha: a2, .. }) if alternating => (*a1, *a2),
                _ => return inapplicable("M53 needs alternating fRBm generators".into()),
            };
            if !(a1 > 0.0 && a2 > 0.0) {
                return inapplicable("M53 needs positive alpha_i".into());
            }
            let bound = 1.0 / (2.0 * nu as f64);
            if a1 + a2 >= bound {
                return inapplicable(format!("alpha1 + alpha2 = {} >= 1/(2 nu) = {bound}", a1 + a2));
            }
            Ok(PredictedRate::Exponent(bound - (a1 + a2)))
        }
    }
}

/// Σσ_i for generators with poles σ_i ∈ (0, 1) at the origin and decay
/// exponents δ_i > 1 at infinity.
fn pole_and_decay_sum(spec: &TraceSpec) -> Result<f64> {
    let mut sigma = 0.0;
    for g in spec.generators() {
        let a = g
            .pole_exponent()
            .ok_or_else(|| Error::TheoremInapplicable("generator carries no exponent metadata".into()))?;
        let d = g.decay_exponent().unwrap_or(f64::INFINITY);
        if !(a > 0.0 && a < 1.0 && d > 1.0) {
            return Err(Error::TheoremInapplicable(format!(
                "needs pole exponent in (0, 1) and decay exponent > 1, got {a} and {d}"
            )));
        }
        sigma += a;
    }
    if sigma >= 1.0 {
        return Err(Error::TheoremInapplicable(format!("sum of pole exponents {sigma} >= 1")));
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cauchy() -> SpectralDensity {
        // r(t) = e^{−|t|}
        SpectralDensity::frbm(1.0 / PI, 0.0, 1.0).unwrap()
    }

    #[test]
    fn single_operator_trace_is_integral() {
        let f = SpectralDensity::frbm(1.0, 0.1, 1.0).unwrap();
        let d = OperatorDiscretization::new(&f, 10.0, 512).unwrap();
        assert!((d.trace() / 10.0 - f.integral().unwrap()).abs() < 1e-8 * f.integral().unwrap());
        let k = d.symmetric_matrix();
        assert!((&k - k.transpose()).abs().max() == 0.0);
    }

    #[test]
    fn exact_trace_for_exponential_covariance() {
        let t: f64 = 3.0;
        // ∫_{−T}^{T}(1 − |t|/T)e^{−2|t|} = 1 − (1 − e^{−2T})/(2T)
        let want = 1.0 - (1.0 - (-2.0 * t).exp()) / (2.0 * t);
        let got = exact_trace_m2(&cauchy(), &cauchy(), t).unwrap();
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn nystrom_pair_matches_exact_formula() {
        let f = SpectralDensity::frbm(1.0, 0.1, 1.0).unwrap();
        let exact = exact_trace_m2(&f, &f, 10.0).unwrap();
        let ny = nystrom_trace_product(&[f.clone(), f], 10.0, NystromOptions::default()).unwrap();
        assert!((ny.value - exact).abs() < 1e-5 * exact, "{} vs {exact}", ny.value);
    }

    #[test]
    fn dense_and_streamed_paths_agree() {
        let g = [cauchy(), SpectralDensity::frbm(1.0, 0.1, 1.0).unwrap()];
        let t = 4.0;
        let streamed = nystrom_trace_at(&g, t, 256).unwrap();
        let d1 = OperatorDiscretization::new(&g[0], t, 256).unwrap().symmetric_matrix();
        let d2 = OperatorDiscretization::new(&g[1], t, 256).unwrap().symmetric_matrix();
        let dense = (&d1 * &d2).trace() / t;
        assert!((streamed - dense).abs() < 1e-12 * dense);
    }

    #[test]
    fn expansion_constant_is_symmetric() {
        let a = second_order_expansion_continuous(0.1, 0.15, 1.0, 2.0, 1.0, 3.0, 50.0).unwrap();
        let b = second_order_expansion_continuous(0.15, 0.1, 2.0, 1.0, 3.0, 1.0, 50.0).unwrap();
        assert!((a.constant - b.constant).abs() < 1e-14 * a.constant);
        assert!(second_order_expansion_continuous(0.3, 0.2, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn continuous_theorem_table() {
        let f = |a| SpectralDensity::frbm(1.0, a, 1.0).unwrap();
        let pair = TraceSpec::pair(f(0.1), f(0.1)).unwrap();
        assert!((predicted_rate_continuous(&pair, ContinuousTheorem::M53).unwrap().gamma().unwrap() - 0.3).abs() < 1e-15);
        assert!((predicted_rate_continuous(&pair, ContinuousTheorem::T53).unwrap().gamma().unwrap() - 0.6).abs() < 1e-15);
        let four = TraceSpec::product(vec![f(0.05); 4]).unwrap();
        assert!((predicted_rate_continuous(&four, ContinuousTheorem::T51B4).unwrap().gamma().unwrap() - 0.15).abs() < 1e-15);
        assert!(predicted_rate_continuous(&TraceSpec::pair(f(0.3), f(0.25)).unwrap(), ContinuousTheorem::M53).is_err());
        assert!((predicted_rate_continuous(&pair, ContinuousTheorem::M52 { p: 2.0 }).unwrap().gamma().unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn aitken_on_geometric_sequence() {
        let s: Vec<f64> = (0..3).map(|k| 1.0 + 0.3 * 0.25f64.powi(k)).collect();
        assert!((aitken(s[0], s[1], s[2]).unwrap() - 1.0).abs() < 1e-14);
    }
}
