use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};

/// Embedding eigenvalues below −NEGATIVE_TOL·max are treated as a failed
/// embedding; smaller negative values are rounding and are clamped to zero.
const NEGATIVE_TOL: f64 = 1e-10;
/// Largest dimension for the dense Cholesky fallback.
pub const CHOLESKY_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SamplingMethod {
    CirculantEmbedding { size: usize },
    Cholesky,
}

enum Engine {
    Circulant { sqrt_eig: Vec<f64>, fft: Arc<dyn Fft<f64>> },
    Cholesky { lower: DMatrix<f64> },
}

/// Exact sampler of a centered stationary Gaussian vector (X(0), …, X(T−1))
/// with covariances r(0), …, r(T−1).
pub struct GaussianSampler {
    dim: usize,
    method: SamplingMethod,
    engine: Engine,
}

impl std::fmt::Debug for GaussianSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaussianSampler").field("dim", &self.dim).field("method", &self.method).finish()
    }
}

/// Sizes tried for the circulant embedding: the smallest power of two that
/// embeds the matrix, then one doubling.
pub(crate) fn embedding_sizes(dim: usize) -> [usize; 2] {
    let n0 = (2 * dim.saturating_sub(1)).max(2).next_power_of_two();
    [n0, 2 * n0]
}

/// Number of covariance lags the sampler may need for dimension `dim`.
pub fn lags_needed(dim: usize) -> usize {
    embedding_sizes(dim)[1] / 2 + 1
}

impl GaussianSampler {
    /// `cov[k]` = r(k); lags beyond `dim − 1` are used to pad the embedding,
    /// so pass at least [`lags_needed`] of them when available.
    pub fn new(cov: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 || cov.len() < dim {
            return Err(Error::DimensionMismatch(format!("need {dim} covariance lags, got {}", cov.len())));
        }
        for n in embedding_sizes(dim) {
            let half = n / 2;
            if cov.len() <= half {
                continue;
            }
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for k in 0..=half {
                col[k] = Complex64::new(cov[k], 0.0);
                if k > 0 && k < half {
                    col[n - k] = Complex64::new(cov[k], 0.0);
                }
            }
            let fft = FftPlanner::new().plan_fft_forward(n);
            fft.process(&mut col);
            let top = col.iter().map(|z| z.re).fold(0.0f64, f64::max);
            let low = col.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
            if low >= -NEGATIVE_TOL * top {
                let sqrt_eig = col.iter().map(|z| (z.re.max(0.0) / n as f64).sqrt()).collect();
                return Ok(GaussianSampler {
                    dim,
                    method: SamplingMethod::CirculantEmbedding { size: n },
                    engine: Engine::Circulant { sqrt_eig, fft },
                });
            }
            log::debug!("circulant embedding of size {n} has eigenvalue {low:.3e}; padding further");
        }
        if dim > CHOLESKY_CAP {
            return Err(Error::NonPositiveDefinite(format!(
                "circulant embedding failed and T = {dim} exceeds the Cholesky cap {CHOLESKY_CAP}"
            )));
        }
        let m = DMatrix::from_fn(dim, dim, |i, j| cov[i.abs_diff(j)]);
        let chol = m.cholesky().ok_or_else(|| {
            Error::NonPositiveDefinite("covariance matrix is not positive definite".into())
        })?;
        Ok(GaussianSampler { dim, method: SamplingMethod::Cholesky, engine: Engine::Cholesky { lower: chol.unpack() } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn method(&self) -> SamplingMethod {
        self.method
    }

    /// Two independent paths from one draw of the generator.
    pub fn sample_pair<R: Rng>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        match &self.engine {
            Engine::Circulant { sqrt_eig, fft } => {
                // the real and imaginary parts of the transformed complex
                // white noise are independent with the embedded covariance
                let mut buf: Vec<Complex64> = sqrt_eig
                    .iter()
                    .map(|s| Complex64::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal)))
                    .collect();
                fft.process(&mut buf);
                let a = buf[..self.dim].iter().map(|z| z.re).collect();
                let b = buf[..self.dim].iter().map(|z| z.im).collect();
                (a, b)
            }
            Engine::Cholesky { lower } => {
                let mut draw = || {
                    let z = DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                    (lower * z).iter().copied().collect::<Vec<f64>>()
                };
                let a = draw();
                let b = draw();
                (a, b)
            }
        }
    }
}

/// Generator for replicate pair `index` of a study with the given seed;
/// every pair has its own ChaCha stream so results do not depend on the
/// order in which pairs are evaluated.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_autocovariance(cov: &[f64], dim: usize, pairs: usize, lags: usize) -> Vec<f64> {
        let sampler = GaussianSampler::new(cov, dim).unwrap();
        let mut acc = vec![0.0; lags];
        for p in 0..pairs {
            let (a, b) = sampler.sample_pair(&mut replicate_rng(7, p as u64));
            for x in [a, b] {
                for (k, slot) in acc.iter_mut().enumerate() {
                    *slot += x[0] * x[k];
                }
            }
        }
        acc.iter().map(|v| v / (2 * pairs) as f64).collect()
    }

    #[test]
    fn white_noise_has_identity_covariance() {
        let mut cov = vec![0.0; lags_needed(16)];
        cov[0] = 1.0;
        let acf = sample_autocovariance(&cov, 16, 5000, 3);
        assert!((acf[0] - 1.0).abs() < 0.1);
        assert!(acf[1].abs() < 0.06 && acf[2].abs() < 0.06);
    }

    #[test]
    fn same_seed_same_path() {
        let cov: Vec<f64> = (0..lags_needed(32)).map(|k| 0.5f64.powi(k as i32)).collect();
        let s = GaussianSampler::new(&cov, 32).unwrap();
        let a = s.sample_pair(&mut replicate_rng(11, 3));
        let b = s.sample_pair(&mut replicate_rng(11, 3));
        assert_eq!(a, b);
        let c = s.sample_pair(&mut replicate_rng(11, 4));
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn falls_back_to_cholesky_when_embedding_fails() {
        // with only T lags there is nothing to pad the embedding with
        let dim = 8;
        let cov: Vec<f64> = (0..lags_needed(dim))
            .map(|k| (k as f64 * 1.3).cos() * 0.9f64.powi(k as i32) + if k == 0 { 0.5 } else { 0.0 })
            .collect();
        let s = GaussianSampler::new(&cov[..dim], dim).unwrap();
        assert_eq!(s.method(), SamplingMethod::Cholesky);
        let (a, b) = s.sample_pair(&mut replicate_rng(1, 0));
        assert_eq!(a.len(), dim);
        assert_ne!(a, b);
    }
}
