//! Numerical laboratory for trace approximation of truncated Toeplitz
//! matrices and operators, and for the limit theory of Toeplitz-type
//! quadratic forms of stationary Gaussian processes.

pub mod covariance;
pub mod error;
pub mod fft;
pub mod kernels;
pub mod operator;
pub mod quadratic;
pub mod quadrature;
pub mod rate_lab;
pub mod special;
pub mod spectral;
pub mod toeplitz;

pub use error::{Error, Result};
pub use operator::{
    exact_trace_m2, nystrom_trace_product, predicted_rate_continuous, ContinuousTheorem, NystromOptions,
    OperatorDiscretization,
};
pub use spectral::{closed_form_integral, DensityKind, Domain, MemoryClass, SpectralDensity};
pub use toeplitz::{
    build_matrix, delta, integral_target, predicted_rate, trace_product, trace_product_inverse, DiscreteTheorem,
    PredictedRate, ToeplitzMatrix, TraceMethod, TraceSpec,
};
