//! Numerical integration: Gauss–Legendre rules, adaptive Gauss–Kronrod,
//! double-exponential rules for endpoint singularities, and a golden-section
//! maximiser.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Absolute and relative error targets. A result is accepted when its error
/// estimate is below `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    pub const fn relative(rel: f64) -> Self {
        Tolerance { abs: 0.0, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(1e-13, 1e-10)
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

impl Integral {
    pub fn zero() -> Self {
        Integral { value: 0.0, error: 0.0 }
    }
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, rhs: Integral) -> Integral {
        Integral { value: self.value + rhs.value, error: self.error + rhs.error }
    }
}

impl std::iter::Sum for Integral {
    fn sum<I: Iterator<Item = Integral>>(iter: I) -> Integral {
        iter.fold(Integral::zero(), |a, b| a + b)
    }
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
            x = 0.0;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n == 1 {
        weights[0] = 2.0;
    }
    (nodes, weights)
}

/// A fixed composite Gauss–Legendre rule on [a, b] with `panels` equal panels.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_513_410,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

/// One 21-point Kronrod panel with its embedded 10-point Gauss estimate.
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Integral {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let err = rescale_error((res_k - res_g) * half, res_abs * half.abs(), res_asc * half.abs());
    Integral { value, error: err }
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    est: Integral,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.partial_cmp(&other.est.error).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive Gauss–Kronrod (G10/K21) quadrature on a finite interval.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    gauss_kronrod_limited(f, a, b, tol, 4000)
}

/// Same as [`gauss_kronrod`] with an explicit subdivision budget.
pub fn gauss_kronrod_limited<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
    max_segments: usize,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral::zero());
    }
    let first = gk21(&f, a, b);
    let mut total = first;
    if !total.value.is_finite() {
        return Err(Error::AccuracyFailure { achieved: f64::INFINITY, requested: tol.target(0.0) });
    }
    if total.error <= tol.target(total.value) {
        return Ok(total);
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, est: first });
    while heap.len() < max_segments {
        let seg = heap.pop().expect("heap never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let left = gk21(&f, seg.a, mid);
        let right = gk21(&f, mid, seg.b);
        total.value += left.value + right.value - seg.est.value;
        total.error += left.error + right.error - seg.est.error;
        heap.push(Segment { a: seg.a, b: mid, est: left });
        heap.push(Segment { a: mid, b: seg.b, est: right });
        if total.error <= tol.target(total.value) {
            break;
        }
    }
    // recompute sums to shed accumulated rounding
    let value: f64 = heap.iter().map(|s| s.est.value).sum();
    let error: f64 = heap.iter().map(|s| s.est.error).sum();
    if !value.is_finite() {
        return Err(Error::AccuracyFailure { achieved: f64::INFINITY, requested: tol.target(0.0) });
    }
    if error > tol.target(value) {
        return Err(Error::AccuracyFailure { achieved: error, requested: tol.target(value) });
    }
    Ok(Integral { value, error })
}

/// Integrates panel by panel over sorted breakpoints.
pub fn gauss_kronrod_panels<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], tol: Tolerance) -> Result<Integral> {
    let mut total = Integral::zero();
    for w in breakpoints.windows(2) {
        total = total + gauss_kronrod(&f, w[0], w[1], tol)?;
    }
    Ok(total)
}

/// Tanh–sinh quadrature on [a, b].
///
/// The integrand receives `(x, x - a, b - x)`; the two offsets are computed
/// without cancellation so integrands with power singularities at an endpoint
/// can be evaluated accurately right up to it.
pub fn tanh_sinh_offsets<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    let est = tanh_sinh_best(f, a, b, tol);
    if est.value.is_finite() && est.error <= tol.target(est.value) {
        Ok(est)
    } else {
        Err(Error::AccuracyFailure { achieved: est.error, requested: tol.target(est.value) })
    }
}

/// Tanh–sinh quadrature that always returns its best estimate; the caller
/// decides what to do with the reported error.
pub fn tanh_sinh_best<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Integral {
    if a == b {
        return Integral::zero();
    }
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    // contribution of the abscissa pair at parameter t
    let pair = |t: f64| -> (f64, bool) {
        let u = FRAC_PI_2 * t.sinh();
        let e = (-2.0 * u).exp();
        let delta = 2.0 * e / (1.0 + e); // 1 - tanh(u)
        let w = FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        if delta == 0.0 || w == 0.0 {
            return (0.0, true);
        }
        let dl = half * delta;
        let xl = a + dl;
        let xr = b - dl;
        let dist_interior = 2.0 * half - dl;
        let fl = f(xl, dl, dist_interior);
        let fr = f(xr, dist_interior, dl);
        (w * (fl + fr), false)
    };
    let mut step = 1.0;
    let mut sum = FRAC_PI_2 * f(center, half, half);
    let extend = |sum: &mut f64, start: f64, step: f64| {
        let mut t = start;
        let mut small = 0;
        loop {
            let (c, done) = pair(t);
            if done || !c.is_finite() {
                break;
            }
            *sum += c;
            if c.abs() < 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
                small += 1;
                if small >= 3 {
                    break;
                }
            } else {
                small = 0;
            }
            t += step;
            if t > 8.0 {
                break;
            }
        }
    };
    extend(&mut sum, step, step);
    let mut estimate = half * step * sum;
    let mut last_err = f64::INFINITY;
    for _level in 0..14 {
        step *= 0.5;
        extend(&mut sum, step, 2.0 * step);
        let next = half * step * sum;
        let err = (next - estimate).abs();
        estimate = next;
        if !estimate.is_finite() {
            break;
        }
        last_err = err;
        if err <= tol.target(estimate) && step < 0.5 {
            break;
        }
    }
    let error = if estimate.is_finite() { last_err } else { f64::INFINITY };
    Integral { value: estimate, error }
}

/// Tanh–sinh quadrature on [a, b] for integrands that need only the abscissa.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    tanh_sinh_offsets(|x, _, _| f(x), a, b, tol)
}

/// Exp–sinh quadrature on [a, ∞). Handles power singularities at `a` and
/// algebraic or exponential decay at infinity. The integrand receives the
/// offset `x - a`.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, tol: Tolerance) -> Result<Integral> {
    let term = |t: f64| -> Option<f64> {
        let u = FRAC_PI_2 * t.sinh();
        if u > 700.0 {
            return None;
        }
        let x = u.exp();
        if x == 0.0 {
            return None;
        }
        let w = FRAC_PI_2 * t.cosh() * x;
        let v = w * f(x);
        if v.is_finite() {
            Some(v)
        } else {
            None
        }
    };
    let extend = |sum: &mut f64, start: f64, step: f64| {
        for dir in [1.0, -1.0] {
            let mut t = start * dir;
            let mut small = 0;
            loop {
                let Some(c) = term(t) else { break };
                *sum += c;
                if c.abs() < 1e-18 * sum.abs().max(f64::MIN_POSITIVE) && t.abs() > 1.0 {
                    small += 1;
                    if small >= 3 {
                        break;
                    }
                } else {
                    small = 0;
                }
                t += step * dir;
                if t.abs() > 8.0 {
                    break;
                }
            }
        }
    };
    let mut step = 1.0;
    let mut sum = term(0.0).unwrap_or(0.0);
    extend(&mut sum, step, step);
    let mut estimate = step * sum;
    for _level in 0..14 {
        step *= 0.5;
        extend(&mut sum, step, 2.0 * step);
        let next = step * sum;
        let err = (next - estimate).abs();
        estimate = next;
        if err <= tol.target(estimate) && step < 0.5 {
            return Ok(Integral { value: estimate, error: err });
        }
    }
    Err(Error::AccuracyFailure { achieved: f64::INFINITY, requested: tol.target(estimate) })
}

/// Maximises a unimodal function on [lo, hi] by golden-section search.
/// Returns the maximiser and the maximum.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, x_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a).abs() > x_tol && iter < 300 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}: {approx} vs {exact}");
            }
        }
    }

    #[test]
    fn kronrod_panel_is_exact_for_degree_31() {
        let est = gk21(&|x: f64| x.powi(30) + x.powi(31), -1.0, 1.0);
        assert!((est.value - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_kronrod_handles_peaks() {
        let r = gauss_kronrod(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tolerance::new(0.0, 1e-12)).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value - exact).abs() / exact < 1e-11);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // ∫₀¹ x^{-0.9} dx = 10
        let r = tanh_sinh_offsets(|_, dl, _| dl.powf(-0.9), 0.0, 1.0, Tolerance::new(0.0, 1e-12)).unwrap();
        assert!((r.value - 10.0).abs() < 1e-9, "{}", r.value);
        // singular at the right end, offset form
        let r = tanh_sinh_offsets(|_, _, dr| dr.powf(-0.5), 2.0, 3.0, Tolerance::new(0.0, 1e-12)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn exp_sinh_slow_algebraic_decay() {
        // ∫₀^∞ x^{-0.5} / (1 + x) dx = π
        let r = exp_sinh(|x| x.powf(-0.5) / (1.0 + x), Tolerance::new(0.0, 1e-11)).unwrap();
        assert!((r.value - PI).abs() < 1e-9, "{}", r.value);
        // ∫₁^∞ x^{-1.2} = 5, written on [0, ∞) with offset
        let r = exp_sinh(|u| (1.0 + u).powf(-1.2), Tolerance::new(0.0, 1e-10)).unwrap();
        assert!((r.value - 5.0).abs() < 1e-7, "{}", r.value);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3).powi(2) + 2.0, -5.0, 5.0, 1e-10);
        // the peak is flat to rounding within ~1e-8 of the maximiser
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 2.0).abs() < 1e-14);
    }
}
