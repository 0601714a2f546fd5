//! Laws of the normalized noise entries √N·W_ij: density evaluation,
//! sampling, score function, Fisher information, and quadrature
//! expectations.
//!
//! All models are centered with unit variance. Built-in kinds carry closed
//! forms for the density and the score; custom presets supply the density
//! analytically and fall back to high-order central differences for the
//! score and to rejection sampling for draws.

use crate::{quad, Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::OnceLock;

/// Default quadrature window half-width for the sub-Gaussian built-ins:
/// the Gaussian factor tail mass beyond ±10 is < 1e-14.
pub const DEFAULT_WINDOW: f64 = 10.0;

/// Default absolute tolerance of the expectation engine.
pub const EXPECT_TOL: f64 = 1e-9;

/// Tight tolerance used internally for moment computations.
pub(crate) const MOMENT_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub enum NoiseKind {
    StandardGaussian,
    /// Law of a·Z + b·R with Z standard normal, R = ±1, a² + b² = 1.
    GaussianRademacherMixture { gaussian_weight: f64, atom: f64 },
    /// Named preset with an analytic density and no dedicated sampler.
    CustomDensity { name: &'static str, pdf: fn(f64) -> f64 },
}

/// A centered unit-variance entry distribution.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    kind: NoiseKind,
    window: f64,
    fisher: OnceLock<f64>,
    pdf_max: f64,
}

const MIXTURE_A: f64 = 0.4472135954999579; // 1/√5
const MIXTURE_B: f64 = 0.8944271909999159; // 2/√5

fn logistic_pdf(x: f64) -> f64 {
    // unit-variance logistic, scale s = √3/π
    let s = 3.0f64.sqrt() / std::f64::consts::PI;
    let e = (-(x.abs()) / s).exp();
    e / (s * (1.0 + e) * (1.0 + e))
}

impl NoiseModel {
    pub fn standard_gaussian() -> Self {
        Self {
            kind: NoiseKind::StandardGaussian,
            window: DEFAULT_WINDOW,
            fisher: OnceLock::new(),
            pdf_max: 1.0 / (2.0 * std::f64::consts::PI).sqrt(),
        }
    }

    /// The bimodal Gaussian–Rademacher preset with a = 1/√5, b = 2/√5.
    pub fn mixture() -> Self {
        Self::mixture_with(MIXTURE_A, MIXTURE_B).expect("preset parameters are valid")
    }

    /// Gaussian–Rademacher mixture a·Z + b·R with a² + b² = 1.
    pub fn mixture_with(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || b < 0.0 {
            return Err(Error::Config(format!(
                "mixture weights must satisfy a > 0, b ≥ 0 (got a={a}, b={b})"
            )));
        }
        if (a * a + b * b - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "mixture weights must satisfy a² + b² = 1 (got {})",
                a * a + b * b
            )));
        }
        let mut m = Self {
            kind: NoiseKind::GaussianRademacherMixture {
                gaussian_weight: a,
                atom: b,
            },
            window: DEFAULT_WINDOW,
            fisher: OnceLock::new(),
            pdf_max: 0.0,
        };
        m.pdf_max = m.scan_pdf_max();
        Ok(m)
    }

    /// A registered custom-density preset; currently `"logistic"`.
    pub fn custom_preset(name: &str) -> Result<Self> {
        match name {
            "logistic" => {
                let mut m = Self {
                    kind: NoiseKind::CustomDensity {
                        name: "logistic",
                        pdf: logistic_pdf,
                    },
                    // exponential tails need a wider window for < 1e-14 mass
                    window: 22.0,
                    fisher: OnceLock::new(),
                    pdf_max: 0.0,
                };
                m.pdf_max = m.scan_pdf_max();
                Ok(m)
            }
            other => Err(Error::Config(format!("unknown noise preset `{other}`"))),
        }
    }

    fn scan_pdf_max(&self) -> f64 {
        let mut max = 0.0f64;
        let steps = 4000;
        for i in 0..=steps {
            let x = -self.window + 2.0 * self.window * i as f64 / steps as f64;
            max = max.max(self.pdf(x));
        }
        max * 1.05
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    /// Quadrature window half-width.
    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            NoiseKind::StandardGaussian => "standard-gaussian",
            NoiseKind::GaussianRademacherMixture { .. } => "gaussian-rademacher-mixture",
            NoiseKind::CustomDensity { name, .. } => name,
        }
    }

    /// Density p(x).
    pub fn pdf(&self, x: f64) -> f64 {
        match self.kind {
            NoiseKind::StandardGaussian => {
                (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
            NoiseKind::GaussianRademacherMixture {
                gaussian_weight: a,
                atom: b,
            } => {
                let c = 1.0 / (2.0 * a * (2.0 * std::f64::consts::PI).sqrt());
                let em = (-(x - b) * (x - b) / (2.0 * a * a)).exp();
                let ep = (-(x + b) * (x + b) / (2.0 * a * a)).exp();
                c * (em + ep)
            }
            NoiseKind::CustomDensity { pdf, .. } => pdf(x),
        }
    }

    /// Analytic density derivative for the built-ins, central differences
    /// for custom presets.
    fn pdf_deriv(&self, x: f64) -> f64 {
        match self.kind {
            NoiseKind::StandardGaussian => -x * self.pdf(x),
            NoiseKind::GaussianRademacherMixture {
                gaussian_weight: a,
                atom: b,
            } => {
                let c = 1.0 / (2.0 * a * (2.0 * std::f64::consts::PI).sqrt());
                let em = (-(x - b) * (x - b) / (2.0 * a * a)).exp();
                let ep = (-(x + b) * (x + b) / (2.0 * a * a)).exp();
                c * (-(x - b) / (a * a) * em - (x + b) / (a * a) * ep)
            }
            NoiseKind::CustomDensity { pdf, .. } => {
                let h = 1e-5;
                (-pdf(x + 2.0 * h) + 8.0 * pdf(x + h) - 8.0 * pdf(x - h) + pdf(x - 2.0 * h))
                    / (12.0 * h)
            }
        }
    }

    /// i.i.d. draws. Deterministic for a given generator state.
    pub fn sample(&self, rng: &mut impl Rng, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.sample_one(rng)?);
        }
        Ok(out)
    }

    pub fn sample_one(&self, rng: &mut impl Rng) -> Result<f64> {
        match self.kind {
            NoiseKind::StandardGaussian => Ok(StandardNormal.sample(rng)),
            NoiseKind::GaussianRademacherMixture {
                gaussian_weight: a,
                atom: b,
            } => {
                let z: f64 = StandardNormal.sample(rng);
                let r = if rng.random::<bool>() { b } else { -b };
                Ok(a * z + r)
            }
            NoiseKind::CustomDensity { name, pdf } => {
                // rejection from the uniform envelope over the window
                for _ in 0..100_000 {
                    let x = rng.random_range(-self.window..self.window);
                    let u: f64 = rng.random();
                    if u * self.pdf_max <= pdf(x) {
                        return Ok(x);
                    }
                }
                Err(Error::SamplerExhausted(name.to_string()))
            }
        }
    }

    /// Score h(x) = -p'(x)/p(x). Closed form for built-ins, five-point
    /// central differences of log p for custom presets.
    pub fn score(&self, x: f64) -> Result<f64> {
        if self.pdf(x) <= f64::MIN_POSITIVE {
            return Err(Error::TailEvaluation(x));
        }
        match self.kind {
            NoiseKind::StandardGaussian => Ok(x),
            NoiseKind::GaussianRademacherMixture {
                gaussian_weight: a,
                atom: b,
            } => {
                let a2 = a * a;
                Ok(x / a2 - (b / a2) * (b * x / a2).tanh())
            }
            NoiseKind::CustomDensity { pdf, .. } => {
                let h = 1e-5;
                let lp = |y: f64| -> Result<f64> {
                    let v = pdf(y);
                    if v <= f64::MIN_POSITIVE {
                        Err(Error::TailEvaluation(y))
                    } else {
                        Ok(v.ln())
                    }
                };
                let d = (-lp(x + 2.0 * h)? + 8.0 * lp(x + h)? - 8.0 * lp(x - h)?
                    + lp(x - 2.0 * h)?)
                    / (12.0 * h);
                Ok(-d)
            }
        }
    }

    /// Fisher information F = ∫ (p')²/p dx, cached after the first call.
    pub fn fisher_information(&self) -> Result<f64> {
        if let Some(&f) = self.fisher.get() {
            return Ok(f);
        }
        let f = quad::integrate(
            |x| {
                let p = self.pdf(x);
                if p <= f64::MIN_POSITIVE {
                    0.0
                } else {
                    let d = self.pdf_deriv(x);
                    d * d / p
                }
            },
            -self.window,
            self.window,
            1e-8,
        )?;
        let _ = self.fisher.set(f);
        Ok(f)
    }

    /// E[g(X)] by adaptive quadrature at the default tolerance.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        self.expect_tol(g, EXPECT_TOL)
    }

    pub fn expect_tol(&self, g: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
        quad::integrate(|x| g(x) * self.pdf(x), -self.window, self.window, tol)
    }

    /// Model invariants: unit mass within 1e-10, mean/variance within 1e-8,
    /// strictly positive density on the window.
    pub fn validate(&self) -> Result<()> {
        let mass = self.expect_tol(|_| 1.0, 1e-11)?;
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::Config(format!(
                "density mass {mass} off unity by {:.3e}",
                (mass - 1.0).abs()
            )));
        }
        let mean = self.expect_tol(|x| x, 1e-10)?;
        if mean.abs() > 1e-8 {
            return Err(Error::Config(format!("mean {mean} not centered")));
        }
        let var = self.expect_tol(|x| x * x, 1e-10)?;
        if (var - 1.0).abs() > 1e-8 {
            return Err(Error::Config(format!("variance {var} not unit")));
        }
        let steps = 2000;
        for i in 0..=steps {
            let x = -self.window + 2.0 * self.window * i as f64 / steps as f64;
            if !(self.pdf(x) > 0.0) {
                return Err(Error::Config(format!(
                    "density vanishes at x = {x} inside the window"
                )));
            }
        }
        Ok(())
    }
}
