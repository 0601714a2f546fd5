//! Simulation laboratory for spiked Wigner matrices under entrywise
//! transforms.
//!
//! The crate samples signal-plus-noise ensembles `M = W + √λ·xxᵀ`, applies an
//! entrywise map `M̃_ij = f(√N·M_ij)/√N`, evaluates the closed-form
//! predictions for the largest eigenvalue (outlier location and Gaussian
//! fluctuation above the effective-SNR threshold, Tracy–Widom edge
//! fluctuation below it), and runs deterministic parallel Monte Carlo
//! experiments that compare the two at finite `N`.
//!
//! Modules follow the pipeline:
//!
//! * [`noise`] — entry distributions: density, sampling, score, Fisher
//!   information, quadrature expectations.
//! * [`transform`] — entrywise maps `f` with derivatives, normalization, and
//!   the scalar functionals (effective SNR, variance-profile coefficients,
//!   critical index).
//! * [`ensemble`] — spike priors, Wigner sampling, the transformed matrix and
//!   its approximants `H`, `V`, `V(t)`, `H(t)`, and the rank-2 spike.
//! * [`spectra`] — symmetric eigensolvers, the semicircle Stieltjes
//!   transform, the quadratic vector equation, resolvent diagnostics.
//! * [`theory`] — regime predictions and reference laws (Gaussian, GOE
//!   Tracy–Widom table).
//! * [`experiment`] — the Monte Carlo engine, goodness-of-fit, rigidity
//!   reports, persistence.

pub mod ensemble;
pub mod experiment;
pub mod noise;
mod quad;
pub mod special;
pub mod spectra;
pub mod symmat;
pub mod theory;
pub mod transform;

pub use ensemble::{SpikePrior, SpikedSample};
pub use experiment::{AnalysisSummary, ExperimentConfig, TrialRecord};
pub use noise::NoiseModel;
pub use spectra::SpectralResult;
pub use symmat::SymMatrix;
pub use theory::{ReferenceLaw, Regime, TheoryPrediction, Tw1Table};
pub use transform::Transform;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("tail evaluation: density underflows at x = {0}")]
    TailEvaluation(f64),
    #[error("rejection sampler exhausted retries for model `{0}`")]
    SamplerExhausted(String),
    #[error("degenerate transform: {0}")]
    DegenerateTransform(String),
    #[error("no critical index ≤ 3: all of E[f'], E[f''], E[f'''] below tolerance")]
    NoCriticalIndex,
    #[error("E[f'] = 0: use scaled regime (k_f ≥ 2)")]
    ZeroDerivativeMean,
    #[error("near-critical effective SNR {lambda_e}: no prediction within margin {margin}")]
    NearCritical { lambda_e: f64, margin: f64 },
    #[error("scaled regime requires k_f = 2, got k_f = {0}")]
    WrongCriticalIndex(usize),
    #[error("scaled regime with effective SNR {0} ≤ 1 is not modeled; use the unscaled subcritical law")]
    ScaledSubcritical(f64),
    #[error("eigensolver failed: {0}")]
    Solver(String),
    #[error("vanishing per-entry variance in interpolation rescaling at ({0}, {1})")]
    VanishingVariance(usize, usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
