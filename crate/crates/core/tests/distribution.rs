//! Q_T = X'B_T(ĝ)X with X ~ N(0, B_T(f̂)) has the law of Σλ_kξ_k², where λ_k
//! are the eigenvalues of A^{1/2}(f)A(g)A^{1/2}(f). The checks below compare
//! the sampled forms with an independent draw from that representation.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use tracelab_core::quadratic::{
    chi2_trace, compute_qt, product_eigenvalues, sample_normalized_forms, simulate_process, QuadraticFormSpec,
};
use tracelab_core::SpectralDensity;

const T: usize = 32;
const REPLICATES: usize = 20_000;

fn spec() -> QuadraticFormSpec {
    let f = SpectralDensity::arfima(1.0, 0.2).unwrap();
    let g = SpectralDensity::arfima_pdq(0.0, vec![], vec![0.4], 1.0).unwrap();
    QuadraticFormSpec::discrete(f, g, T).unwrap()
}

fn two_sample_ks(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (mut i, mut j, mut worst) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        worst = worst.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    worst
}

#[test]
fn eigenvalues_reproduce_mean_and_variance() {
    let spec = spec();
    let lambda = product_eigenvalues(&spec).unwrap();
    assert_eq!(lambda.len(), T);
    let sum: f64 = lambda.iter().sum();
    assert!((sum - spec.mean().unwrap()).abs() < 1e-10 * sum.abs());
    let chi2 = 2.0 * lambda.iter().map(|l| l * l).sum::<f64>() / T as f64;
    assert!((chi2 - chi2_trace(&spec).unwrap()).abs() < 1e-10 * chi2);
}

#[test]
fn sampled_forms_follow_the_weighted_chi_square_law() {
    let spec = spec();
    let lambda = product_eigenvalues(&spec).unwrap();
    let mut sampled = sample_normalized_forms(&spec, REPLICATES, 3).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    let scale = 1.0 / (T as f64).sqrt();
    let mut reference: Vec<f64> = (0..REPLICATES)
        .map(|_| {
            let q: f64 = lambda
                .iter()
                .map(|l| {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    l * (xi * xi - 1.0)
                })
                .sum();
            scale * q
        })
        .collect();
    let d = two_sample_ks(&mut sampled, &mut reference);
    // 99.9% quantile of the two-sample statistic
    let critical = 1.95 * (2.0 / REPLICATES as f64).sqrt();
    assert!(d < critical, "KS distance {d} exceeds {critical}");
}

#[test]
fn form_of_one_path_matches_the_dense_product() {
    let spec = spec();
    let path = simulate_process(spec.f(), T, 1.0, 9).unwrap().values;
    let g = spec.g();
    let weights: Vec<f64> = (0..T).map(|k| g.fourier_coefficient(k as i64).unwrap()).collect();
    let mut direct = 0.0;
    for s in 0..T {
        for t in 0..T {
            direct += path[s] * weights[s.abs_diff(t)] * path[t];
        }
    }
    let q = compute_qt(&spec, &path).unwrap();
    assert!((q - direct).abs() < 1e-10 * direct.abs().max(1.0), "{q} vs {direct}");
}
