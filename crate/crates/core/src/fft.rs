use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Symmetric Toeplitz matrix-vector products through a circulant embedding
/// of size 2T, O(T log T) per product.
#[derive(Clone)]
pub struct ToeplitzOperator {
    dim: usize,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ToeplitzOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToeplitzOperator").field("dim", &self.dim).finish()
    }
}

impl ToeplitzOperator {
    /// Operator with first row `coeffs` (c₀, …, c_{T−1}).
    pub fn new(coeffs: &[f64]) -> Self {
        let dim = coeffs.len();
        let n = (2 * dim).max(1);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let mut spectrum = circulant_column(coeffs, n);
        forward.process(&mut spectrum);
        // fold the 1/n normalisation of the inverse transform into the spectrum
        let scale = 1.0 / n as f64;
        for z in &mut spectrum {
            *z *= scale;
        }
        ToeplitzOperator { dim, spectrum, forward, inverse }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// y = B x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.spectrum.len()];
        let mut y = vec![0.0; self.dim];
        self.apply_into(x, &mut y, &mut buf);
        y
    }

    /// y = B x reusing a caller-owned scratch buffer of length 2T.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64], buf: &mut Vec<Complex64>) {
        assert_eq!(x.len(), self.dim, "vector length must equal the operator dimension");
        buf.clear();
        buf.extend(x.iter().map(|v| Complex64::new(*v, 0.0)));
        buf.resize(self.spectrum.len(), Complex64::new(0.0, 0.0));
        self.forward.process(buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inverse.process(buf);
        for (yi, b) in y.iter_mut().zip(buf.iter()) {
            *yi = b.re;
        }
    }

    /// Applies B to two real vectors at once by packing them into the real
    /// and imaginary parts of a single complex transform.
    pub fn apply_pair(&self, x1: &[f64], x2: &[f64], buf: &mut Vec<Complex64>) -> (Vec<f64>, Vec<f64>) {
        assert!(x1.len() == self.dim && x2.len() == self.dim);
        buf.clear();
        buf.extend(x1.iter().zip(x2).map(|(a, b)| Complex64::new(*a, *b)));
        buf.resize(self.spectrum.len(), Complex64::new(0.0, 0.0));
        self.forward.process(buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inverse.process(buf);
        let y1 = buf[..self.dim].iter().map(|z| z.re).collect();
        let y2 = buf[..self.dim].iter().map(|z| z.im).collect();
        (y1, y2)
    }
}

/// First column of the circulant of size n ≥ 2T − 1 that embeds the
/// symmetric Toeplitz matrix with first row `coeffs`.
pub(crate) fn circulant_column(coeffs: &[f64], n: usize) -> Vec<Complex64> {
    let t = coeffs.len();
    assert!(n + 1 >= 2 * t, "circulant of size {n} cannot embed dimension {t}");
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for (k, c) in coeffs.iter().enumerate() {
        col[k] = Complex64::new(*c, 0.0);
        if k > 0 {
            col[n - k] = Complex64::new(*c, 0.0);
        }
    }
    col
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circulant_eigenvalues(coeffs: &[f64], n: usize) -> Vec<f64> {
        let mut col = circulant_column(coeffs, n);
        FftPlanner::new().plan_fft_forward(n).process(&mut col);
        col.into_iter().map(|z| z.re).collect()
    }

    fn dense_apply(c: &[f64], x: &[f64]) -> Vec<f64> {
        let n = c.len();
        (0..n)
            .map(|i| (0..n).map(|j| c[i.abs_diff(j)] * x[j]).sum())
            .collect()
    }

    #[test]
    fn matches_dense_product() {
        let c: Vec<f64> = (0..37).map(|k| 1.0 / (1.0 + k as f64).powf(0.7)).collect();
        let x: Vec<f64> = (0..37).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let op = ToeplitzOperator::new(&c);
        let fast = op.apply(&x);
        let slow = dense_apply(&c, &x);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn paired_application_matches_single() {
        let c = vec![2.0, -0.5, 0.25, 0.1];
        let op = ToeplitzOperator::new(&c);
        let x1 = [1.0, 0.0, -1.0, 2.0];
        let x2 = [0.5, 0.5, 3.0, -1.0];
        let mut buf = Vec::new();
        let (y1, y2) = op.apply_pair(&x1, &x2, &mut buf);
        for (a, b) in y1.iter().zip(op.apply(&x1)) {
            assert!((a - b).abs() < 1e-13);
        }
        for (a, b) in y2.iter().zip(op.apply(&x2)) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn embedding_eigenvalues_of_identity() {
        let ev = circulant_eigenvalues(&[1.0, 0.0, 0.0], 6);
        assert!(ev.iter().all(|e| (e - 1.0).abs() < 1e-15));
    }
}
