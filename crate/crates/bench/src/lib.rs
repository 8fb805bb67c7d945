//! Fixtures shared by the benchmarks.

use tracelab_core::{Result, SpectralDensity};

/// Long-memory coefficients ĥ(0), …, ĥ(n − 1) of ARFIMA(0, d, 0).
pub fn arfima_coefficients(d: f64, n: usize) -> Result<Vec<f64>> {
    SpectralDensity::arfima(1.0, d)?.fourier_coefficients(n)
}

/// Dyadic dimensions 2^lo, …, 2^hi.
pub fn dyadic(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}
