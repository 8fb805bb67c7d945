//! Convergence-rate experiments: sweep a grid of horizons, fit the slope of
//! log Δ(T) against log T and compare it with the exponent a theorem claims.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    exact_trace_m2_grid, nystrom_trace_product, predicted_rate_continuous, second_order_expansion_continuous,
    ContinuousTheorem, NystromOptions,
};
use crate::spectral::{Domain, SpectralDensity};
use crate::toeplitz::{
    integral_target, predicted_rate, second_order_expansion_discrete, trace_grid, DiscreteTheorem, PredictedRate,
    TracePoint, TraceSpec,
};

/// Smallest number of usable grid points for a slope fit.
pub const MIN_FIT_POINTS: usize = 4;
/// Δ below this multiple of max(1, |M|) is rounding of an exact zero.
const ZERO_DELTA: f64 = 1e-13;
/// Slack absorbing the ε of O(T^{−γ+ε}) statements.
const SLOPE_SLACK: f64 = 0.1;

pub fn default_discrete_grid() -> Vec<usize> {
    (8..=12).map(|k| 1usize << k).collect()
}

pub fn default_continuous_grid() -> Vec<f64> {
    (0..4).map(|k| 25.0 * f64::from(1u32 << k)).collect()
}

/// Ordinary least-squares line fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub fn least_squares(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    LineFit { slope, intercept, slope_stderr }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    /// The theorem only claims Δ(T) → 0; the slope is recorded, not judged.
    O1Only,
}

/// |slope + γ| ≤ max(0.1, 2·stderr), or o(1)-only when no exponent is claimed.
pub fn verdict(slope: f64, slope_stderr: f64, rate: PredictedRate) -> Verdict {
    match rate.gamma() {
        None => Verdict::O1Only,
        Some(gamma) => {
            let slack = SLOPE_SLACK.max(2.0 * slope_stderr);
            if (slope + gamma).abs() <= slack {
                Verdict::Consistent
            } else {
                Verdict::Inconsistent
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub model_id: String,
    /// Every cell of the sweep, including the ones left out of the fit.
    pub points: Vec<TracePoint>,
    /// Horizons whose Δ vanished and were left out of the fit.
    pub excluded: Vec<f64>,
    pub grid: Vec<f64>,
    pub deltas: Vec<f64>,
    pub fitted_slope: f64,
    pub slope_stderr: f64,
    pub predicted: PredictedRate,
    pub theoretical_gamma: Option<f64>,
    pub verdict: Verdict,
}

/// Fits log Δ against log T over the cells with Δ ≠ 0.
pub fn fit_rate(model_id: &str, points: Vec<TracePoint>, predicted: PredictedRate) -> Result<RateFit> {
    let (used, dropped): (Vec<&TracePoint>, Vec<&TracePoint>) =
        points.iter().partition(|p| p.delta > ZERO_DELTA * p.m.abs().max(1.0));
    if used.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateExperiment(format!(
            "{model_id}: only {} of {} grid points have a nonzero error, need {MIN_FIT_POINTS}",
            used.len(),
            points.len()
        )));
    }
    let grid: Vec<f64> = used.iter().map(|p| p.t).collect();
    let deltas: Vec<f64> = used.iter().map(|p| p.delta).collect();
    let x: Vec<f64> = grid.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let fit = least_squares(&x, &y);
    let excluded = dropped.iter().map(|p| p.t).collect();
    Ok(RateFit {
        model_id: model_id.to_string(),
        excluded,
        grid,
        deltas,
        fitted_slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        predicted,
        theoretical_gamma: predicted.gamma(),
        verdict: verdict(fit.slope, fit.slope_stderr, predicted),
        points,
    })
}

/// Δ(T) sweep for Toeplitz matrices.
pub fn run_rate_experiment(
    model_id: &str,
    spec: &TraceSpec,
    grid: &[usize],
    theorem: DiscreteTheorem,
) -> Result<RateFit> {
    let predicted = predicted_rate(spec, theorem)?;
    let points = trace_grid(spec, grid)?;
    fit_rate(model_id, points, predicted)
}

/// (1/T)tr of the operator product over a grid of horizons: the exact
/// triangle integral for plain pairs, Nyström otherwise.
pub fn operator_trace_grid(spec: &TraceSpec, grid: &[f64], opts: NystromOptions) -> Result<Vec<TracePoint>> {
    if spec.domain() != Domain::Line {
        return Err(Error::InvalidParameter("operator traces need generators on the line".into()));
    }
    if spec.has_inverse() {
        return Err(Error::MethodMismatch("operator traces with inverted factors are not supported".into()));
    }
    let m = integral_target(spec)?;
    let traces = if spec.m() == 2 {
        exact_trace_m2_grid(&spec.generators()[0], &spec.generators()[1], grid)?
    } else {
        grid.par_iter()
            .map(|&t| nystrom_trace_product(spec.generators(), t, opts).map(|r| r.value))
            .collect::<Result<Vec<f64>>>()?
    };
    Ok(grid.iter().zip(traces).map(|(&t, s)| TracePoint { t, s, m, delta: (s - m).abs() }).collect())
}

/// Δ(T) sweep for Toeplitz operators.
pub fn run_rate_experiment_continuous(
    model_id: &str,
    spec: &TraceSpec,
    grid: &[f64],
    theorem: ContinuousTheorem,
    opts: NystromOptions,
) -> Result<RateFit> {
    let predicted = predicted_rate_continuous(spec, theorem)?;
    let points = operator_trace_grid(spec, grid, opts)?;
    fit_rate(model_id, points, predicted)
}

/// Parameters of a two-term expansion experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SecondOrderKind {
    /// Two ARFIMA(0, d, 0) densities with innovation variances σ₁², σ₂².
    Discrete { d1: f64, d2: f64, sigma1: f64, sigma2: f64 },
    /// Two fRBm densities C_i|λ|^{−2α_i}(1 + λ²)^{−β_i}.
    Continuous { alpha1: f64, alpha2: f64, beta1: f64, beta2: f64, c1: f64, c2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondOrderRow {
    pub t: f64,
    pub exact: f64,
    pub leading: f64,
    pub constant: f64,
    pub exponent: f64,
    pub predicted: f64,
    /// |S(T) − leading + constant·T^{−exponent}|.
    pub residual: f64,
    /// residual · T^{exponent}.
    pub normalized_residual: f64,
    /// predicted / exact.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondOrderTable {
    pub kind: SecondOrderKind,
    pub rows: Vec<SecondOrderRow>,
    /// The normalized residual decreases along the whole grid.
    pub decreasing: bool,
    /// First normalized residual over the last one.
    pub reduction: f64,
    /// Largest of ratio and 1/ratio over the grid.
    pub worst_ratio: f64,
}

pub fn run_second_order_experiment(kind: SecondOrderKind, grid: &[f64]) -> Result<SecondOrderTable> {
    if grid.len() < 2 {
        return Err(Error::DegenerateExperiment("a residual trend needs at least two horizons".into()));
    }
    let (expansions, exact) = match kind {
        SecondOrderKind::Discrete { d1, d2, sigma1, sigma2 } => {
            let dims = grid
                .iter()
                .map(|&t| {
                    if t >= 1.0 && t.fract() == 0.0 {
                        Ok(t as usize)
                    } else {
                        Err(Error::InvalidParameter(format!("matrix dimension {t} is not a positive integer")))
                    }
                })
                .collect::<Result<Vec<usize>>>()?;
            let expansions = grid
                .iter()
                .map(|&t| second_order_expansion_discrete(d1, d2, sigma1, sigma2, t))
                .collect::<Result<Vec<_>>>()?;
            let spec = TraceSpec::pair(SpectralDensity::arfima(sigma1, d1)?, SpectralDensity::arfima(sigma2, d2)?)?;
            let exact = trace_grid(&spec, &dims)?.into_iter().map(|p| p.s).collect::<Vec<f64>>();
            (expansions, exact)
        }
        SecondOrderKind::Continuous { alpha1, alpha2, beta1, beta2, c1, c2 } => {
            let expansions = grid
                .iter()
                .map(|&t| second_order_expansion_continuous(alpha1, alpha2, beta1, beta2, c1, c2, t))
                .collect::<Result<Vec<_>>>()?;
            let f1 = SpectralDensity::frbm(c1, alpha1, beta1)?;
            let f2 = SpectralDensity::frbm(c2, alpha2, beta2)?;
            (expansions, exact_trace_m2_grid(&f1, &f2, grid)?)
        }
    };
    let rows: Vec<SecondOrderRow> = grid
        .iter()
        .zip(expansions)
        .zip(exact)
        .map(|((&t, e), s)| {
            let residual = (s - e.predicted).abs();
            SecondOrderRow {
                t,
                exact: s,
                leading: e.leading,
                constant: e.constant,
                exponent: e.exponent,
                predicted: e.predicted,
                residual,
                normalized_residual: residual * t.powf(e.exponent),
                ratio: e.predicted / s,
            }
        })
        .collect();
    let decreasing = rows.windows(2).all(|w| w[1].normalized_residual < w[0].normalized_residual);
    let reduction = rows[0].normalized_residual / rows[rows.len() - 1].normalized_residual;
    let worst_ratio = rows.iter().map(|r| r.ratio.max(1.0 / r.ratio)).fold(1.0, f64::max);
    Ok(SecondOrderTable { kind, rows, decreasing, reduction, worst_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(c: f64, gamma: f64, grid: &[f64]) -> Vec<TracePoint> {
        grid.iter().map(|&t| TracePoint { t, s: 1.0 + c * t.powf(-gamma), m: 1.0, delta: c * t.powf(-gamma) }).collect()
    }

    #[test]
    fn slope_fit_recovers_synthetic_exponent() {
        let grid: Vec<f64> = default_discrete_grid().iter().map(|t| *t as f64).collect();
        for gamma in [0.3, 0.6, 1.0, 1.7] {
            let fit = fit_rate("synthetic", synthetic(2.5, gamma, &grid), PredictedRate::Exponent(gamma)).unwrap();
            assert!((fit.fitted_slope + gamma).abs() < 1e-6);
            assert!(fit.slope_stderr < 1e-6);
            assert_eq!(fit.verdict, Verdict::Consistent);
        }
    }

    #[test]
    fn verdict_thresholds() {
        assert_eq!(verdict(-0.55, 0.01, PredictedRate::Exponent(0.6)), Verdict::Consistent);
        assert_eq!(verdict(-0.45, 0.01, PredictedRate::Exponent(0.6)), Verdict::Inconsistent);
        assert_eq!(verdict(-0.45, 0.1, PredictedRate::Exponent(0.6)), Verdict::Consistent);
        assert_eq!(verdict(-3.0, 0.01, PredictedRate::LittleO), Verdict::O1Only);
    }

    #[test]
    fn zero_errors_are_excluded() {
        let grid = [16.0, 32.0, 64.0, 128.0, 256.0];
        let mut points = synthetic(1.0, 1.0, &grid);
        points[2].delta = 0.0;
        let fit = fit_rate("one zero", points.clone(), PredictedRate::Exponent(1.0)).unwrap();
        assert_eq!(fit.excluded, vec![64.0]);
        assert_eq!(fit.grid.len(), 4);
        points[3].delta = 0.0;
        assert!(matches!(
            fit_rate("two zeros", points, PredictedRate::Exponent(1.0)),
            Err(Error::DegenerateExperiment(_))
        ));
    }

    #[test]
    fn constant_pair_is_degenerate() {
        let c = SpectralDensity::constant(0.7).unwrap();
        let spec = TraceSpec::pair(c.clone(), c).unwrap();
        let r = run_rate_experiment("constant", &spec, &default_discrete_grid(), DiscreteTheorem::B1);
        assert!(matches!(r, Err(Error::DegenerateExperiment(_))), "{r:?}");
    }

    #[test]
    fn smooth_pair_converges_at_rate_one() {
        let f = SpectralDensity::arfima_pdq(0.0, vec![0.5], vec![], 1.0).unwrap();
        let g = SpectralDensity::arfima_pdq(0.0, vec![], vec![0.4], 1.0).unwrap();
        let spec = TraceSpec::pair(f, g).unwrap();
        let fit = run_rate_experiment("ar-ma", &spec, &[64, 128, 256, 512], DiscreteTheorem::B1).unwrap();
        assert_eq!(fit.verdict, Verdict::Consistent, "{fit:?}");
    }

    #[test]
    fn second_order_table_shapes() {
        let kind = SecondOrderKind::Discrete { d1: 0.15, d2: 0.15, sigma1: 1.0, sigma2: 1.0 };
        let table = run_second_order_experiment(kind, &[64.0, 128.0, 256.0]).unwrap();
        assert_eq!(table.rows.len(), 3);
        for r in &table.rows {
            assert!((r.exponent - 0.4).abs() < 1e-15);
            assert!(r.residual < 1e-2 * r.exact);
        }
        assert!(run_second_order_experiment(kind, &[64.5, 128.0]).is_err());
        let bad = SecondOrderKind::Discrete { d1: 0.3, d2: 0.3, sigma1: 1.0, sigma2: 1.0 };
        assert!(matches!(run_second_order_experiment(bad, &[64.0, 128.0]), Err(Error::ExpansionInapplicable(_))));
    }
}
