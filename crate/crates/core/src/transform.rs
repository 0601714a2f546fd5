//! Entrywise transforms f with derivatives, normalization to the E[f]=0,
//! E[f²]=1, E[f′]≥0 convention, and the scalar functionals of (f, noise):
//! effective SNR, variance-profile coefficients, detection threshold, and
//! the critical derivative index.

use crate::noise::{NoiseModel, MOMENT_TOL};
use crate::{Error, Result};
use std::fmt;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Polynomial(Vec<f64>),
    OptimalScore(&'static str),
    Custom(&'static str),
}

/// An entrywise map with its first three derivatives.
#[derive(Clone)]
pub struct Transform {
    provenance: Provenance,
    eval: ScalarFn,
    d1: ScalarFn,
    d2: ScalarFn,
    d3: ScalarFn,
    normalized: bool,
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transform")
            .field("provenance", &self.provenance)
            .field("normalized", &self.normalized)
            .finish()
    }
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_derive(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

fn poly_closure(coeffs: Vec<f64>) -> ScalarFn {
    Arc::new(move |x| poly_eval(&coeffs, x))
}

/// Five-point central difference with the step rule for custom transforms.
fn central_diff(f: &ScalarFn, x: f64) -> f64 {
    let h = 1e-4 * x.abs().max(1.0);
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

impl Transform {
    /// Polynomial transform with exact closed-form derivatives.
    /// Coefficients are in ascending order: `coeffs[k]` multiplies x^k.
    pub fn make_polynomial(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::DegenerateTransform(
                "empty coefficient list".into(),
            ));
        }
        if coeffs.iter().skip(1).all(|&c| c == 0.0) {
            return Err(Error::DegenerateTransform(
                "polynomial must have degree ≥ 1".into(),
            ));
        }
        let c0 = coeffs.to_vec();
        let c1 = poly_derive(&c0);
        let c2 = poly_derive(&c1);
        let c3 = poly_derive(&c2);
        Ok(Self {
            provenance: Provenance::Polynomial(c0.clone()),
            eval: poly_closure(c0),
            d1: poly_closure(c1),
            d2: poly_closure(c2),
            d3: poly_closure(c3),
            normalized: false,
        })
    }

    /// The identity map x ↦ x (normalized for any unit-variance model).
    pub fn identity() -> Self {
        let mut t = Self::make_polynomial(&[0.0, 1.0]).expect("identity is valid");
        t.normalized = true;
        t
    }

    /// The SNR-optimal transform f = -p'/(√F_h · p) = score/√F_h.
    pub fn make_optimal(model: &NoiseModel) -> Result<Self> {
        use crate::noise::NoiseKind::*;
        let fisher = model.fisher_information()?;
        let inv = 1.0 / fisher.sqrt();
        let (eval, d1, d2, d3): (ScalarFn, ScalarFn, ScalarFn, ScalarFn) = match *model.kind() {
            StandardGaussian => (
                Arc::new(move |x| inv * x),
                Arc::new(move |_| inv),
                Arc::new(|_| 0.0),
                Arc::new(|_| 0.0),
            ),
            GaussianRademacherMixture {
                gaussian_weight: a,
                atom: b,
            } => {
                // h(x) = x/a² - β tanh(βx) with β = b/a²; derivatives in
                // terms of t = tanh(βx)
                let a2 = a * a;
                let beta = b / a2;
                let e: ScalarFn = Arc::new(move |x| inv * (x / a2 - beta * (beta * x).tanh()));
                let d1: ScalarFn = Arc::new(move |x| {
                    let t = (beta * x).tanh();
                    inv * (1.0 / a2 - beta * beta * (1.0 - t * t))
                });
                let d2: ScalarFn = Arc::new(move |x| {
                    let t = (beta * x).tanh();
                    inv * 2.0 * beta.powi(3) * (1.0 - t * t) * t
                });
                let d3: ScalarFn = Arc::new(move |x| {
                    let t = (beta * x).tanh();
                    inv * 2.0 * beta.powi(4) * (1.0 - t * t) * (1.0 - 3.0 * t * t)
                });
                (e, d1, d2, d3)
            }
            CustomDensity { .. } => {
                let m = model.clone();
                let e: ScalarFn =
                    Arc::new(move |x| m.score(x).map(|s| inv * s).unwrap_or(0.0));
                let e1 = e.clone();
                let e2 = e.clone();
                let d1: ScalarFn = Arc::new(move |x| central_diff(&e1, x));
                let d1c = d1.clone();
                let d2: ScalarFn = Arc::new(move |x| central_diff(&d1c, x));
                let d2c = d2.clone();
                let d3: ScalarFn = Arc::new(move |x| central_diff(&d2c, x));
                (e2, d1, d2, d3)
            }
        };
        Ok(Self {
            provenance: Provenance::OptimalScore(model.name()),
            eval,
            d1,
            d2,
            d3,
            normalized: true,
        })
    }

    /// Custom transform from closures; derivatives by central differences.
    pub fn make_custom(name: &'static str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let eval: ScalarFn = Arc::new(f);
        let e1 = eval.clone();
        let d1: ScalarFn = Arc::new(move |x| central_diff(&e1, x));
        let d1c = d1.clone();
        let d2: ScalarFn = Arc::new(move |x| central_diff(&d1c, x));
        let d2c = d2.clone();
        let d3: ScalarFn = Arc::new(move |x| central_diff(&d2c, x));
        Self {
            provenance: Provenance::Custom(name),
            eval,
            d1,
            d2,
            d3,
            normalized: false,
        }
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// k-th derivative, k ∈ {0, 1, 2, 3}.
    #[inline]
    pub fn deriv(&self, k: usize, x: f64) -> f64 {
        match k {
            0 => (self.eval)(x),
            1 => (self.d1)(x),
            2 => (self.d2)(x),
            3 => (self.d3)(x),
            _ => panic!("derivative order {k} > 3"),
        }
    }

    /// Center, scale, and sign-fix against `model`: returns
    /// x ↦ s·(f(x) − E[f]) with s = ±1/√Var[f] and E[(s·f)′] ≥ 0.
    pub fn normalize(&self, model: &NoiseModel) -> Result<Self> {
        let mean = model.expect_tol(|x| self.eval(x), MOMENT_TOL)?;
        let second = model.expect_tol(|x| self.eval(x) * self.eval(x), MOMENT_TOL)?;
        let var = second - mean * mean;
        if var <= 1e-13 {
            return Err(Error::DegenerateTransform(format!(
                "variance {var:.3e} too small to normalize"
            )));
        }
        let d1_mean = model.expect_tol(|x| self.deriv(1, x), MOMENT_TOL)?;
        let sign = if d1_mean < 0.0 { -1.0 } else { 1.0 };
        let scale = sign / var.sqrt();

        if let Provenance::Polynomial(coeffs) = &self.provenance {
            // exact coefficient arithmetic keeps closed-form derivatives
            let mut c = coeffs.clone();
            c[0] -= mean;
            for v in &mut c {
                *v *= scale;
            }
            let mut t = Self::make_polynomial(&c)?;
            t.normalized = true;
            return Ok(t);
        }

        let (e, d1, d2, d3) = (
            self.eval.clone(),
            self.d1.clone(),
            self.d2.clone(),
            self.d3.clone(),
        );
        Ok(Self {
            provenance: self.provenance.clone(),
            eval: Arc::new(move |x| scale * (e(x) - mean)),
            d1: Arc::new(move |x| scale * d1(x)),
            d2: Arc::new(move |x| scale * d2(x)),
            d3: Arc::new(move |x| scale * d3(x)),
            normalized: true,
        })
    }
}

/// E[f^(k)(X)] for k ∈ {0, 1, 2, 3}.
pub fn derivative_moment(t: &Transform, model: &NoiseModel, k: usize) -> Result<f64> {
    assert!(k <= 3, "derivative order {k} > 3");
    model.expect_tol(|x| t.deriv(k, x), MOMENT_TOL)
}

/// Effective SNR λ_e = λ·(E[f'])².
pub fn effective_snr(lambda: f64, t: &Transform, model: &NoiseModel) -> Result<f64> {
    assert!(t.is_normalized(), "effective_snr requires a normalized transform");
    let d1 = derivative_moment(t, model, 1)?;
    Ok(lambda * d1 * d1)
}

/// Strong-detection threshold (E[f'])⁻².
pub fn detection_threshold(t: &Transform, model: &NoiseModel) -> Result<f64> {
    let d1 = derivative_moment(t, model, 1)?;
    if d1.abs() < 1e-8 {
        return Err(Error::ZeroDerivativeMean);
    }
    Ok(1.0 / (d1 * d1))
}

/// Coefficients (C₁ᵛ, C₂ᵛ) of the per-entry variance expansion
/// N·E[V_ij²] = 1 + C₁ᵛ √N x_i x_j + C₂ᵛ N x_i² x_j²:
/// C₁ᵛ = 2√λ (E[f f'] − E[f] E[f']),  C₂ᵛ = λ (E[(f')²] − E[f']²).
pub fn variance_profile_coeffs(
    lambda: f64,
    t: &Transform,
    model: &NoiseModel,
) -> Result<(f64, f64)> {
    assert!(t.is_normalized(), "variance profile requires a normalized transform");
    let e_f = model.expect_tol(|x| t.eval(x), MOMENT_TOL)?;
    let e_d1 = derivative_moment(t, model, 1)?;
    let e_f_d1 = model.expect_tol(|x| t.eval(x) * t.deriv(1, x), MOMENT_TOL)?;
    let e_d1_sq = model.expect_tol(|x| t.deriv(1, x) * t.deriv(1, x), MOMENT_TOL)?;
    let c1 = 2.0 * lambda.sqrt() * (e_f_d1 - e_f * e_d1);
    let c2 = lambda * (e_d1_sq - e_d1 * e_d1).max(0.0);
    Ok((c1, c2))
}

/// Smallest k ∈ {1, 2, 3} with |E[f^(k)]| above `zero_tol`.
pub fn critical_index(t: &Transform, model: &NoiseModel, zero_tol: f64) -> Result<usize> {
    assert!(t.is_normalized(), "critical index requires a normalized transform");
    for k in 1..=3 {
        if derivative_moment(t, model, k)?.abs() > zero_tol {
            return Ok(k);
        }
    }
    Err(Error::NoCriticalIndex)
}

/// Write-once cache of every transform/noise moment the matrix builders and
/// predictions consume.
#[derive(Clone, Debug)]
pub struct TransformMoments {
    pub e_f: f64,
    pub e_f2: f64,
    pub e_d1: f64,
    pub e_d2: f64,
    pub e_d3: f64,
    pub e_f_d1: f64,
    pub e_d1_sq: f64,
    pub e_f_d2: f64,
}

impl TransformMoments {
    pub fn compute(t: &Transform, model: &NoiseModel) -> Result<Self> {
        assert!(t.is_normalized(), "moments are defined for normalized transforms");
        Ok(Self {
            e_f: model.expect_tol(|x| t.eval(x), MOMENT_TOL)?,
            e_f2: model.expect_tol(|x| t.eval(x) * t.eval(x), MOMENT_TOL)?,
            e_d1: model.expect_tol(|x| t.deriv(1, x), MOMENT_TOL)?,
            e_d2: model.expect_tol(|x| t.deriv(2, x), MOMENT_TOL)?,
            e_d3: model.expect_tol(|x| t.deriv(3, x), MOMENT_TOL)?,
            e_f_d1: model.expect_tol(|x| t.eval(x) * t.deriv(1, x), MOMENT_TOL)?,
            e_d1_sq: model.expect_tol(|x| t.deriv(1, x) * t.deriv(1, x), MOMENT_TOL)?,
            e_f_d2: model.expect_tol(|x| t.eval(x) * t.deriv(2, x), MOMENT_TOL)?,
        })
    }

    pub fn effective_snr(&self, lambda: f64) -> f64 {
        lambda * self.e_d1 * self.e_d1
    }

    pub fn variance_coeffs(&self, lambda: f64) -> (f64, f64) {
        (
            2.0 * lambda.sqrt() * (self.e_f_d1 - self.e_f * self.e_d1),
            lambda * (self.e_d1_sq - self.e_d1 * self.e_d1).max(0.0),
        )
    }

    pub fn critical_index(&self, zero_tol: f64) -> Result<usize> {
        for (k, v) in [(1, self.e_d1), (2, self.e_d2), (3, self.e_d3)] {
            if v.abs() > zero_tol {
                return Ok(k);
            }
        }
        Err(Error::NoCriticalIndex)
    }

    /// E[f²] + E[f f''] − E[f] E[f''], the deterministic-shift coefficient
    /// of the scaled-SNR regime.
    pub fn scaled_shift_coeff(&self) -> f64 {
        self.e_f2 + self.e_f_d2 - self.e_f * self.e_d2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const INV_SQRT_11: f64 = 0.30151134457776363; // 1/√11

    fn quadratic() -> Transform {
        Transform::make_polynomial(&[-INV_SQRT_11, 3.0 * INV_SQRT_11, INV_SQRT_11]).unwrap()
    }

    /// Gaussian moment oracle: E[x^k] = (k-1)!! for even k, 0 for odd k.
    fn gaussian_moment(k: usize) -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            (1..k).step_by(2).map(|v| v as f64).product()
        }
    }

    fn poly_gaussian_expect(coeffs: &[f64]) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * gaussian_moment(k))
            .sum()
    }

    fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    #[test]
    fn polynomial_basics() {
        let q = quadratic();
        assert!((q.eval(1.0) - 3.0 * INV_SQRT_11).abs() < 1e-15);
        // second derivative of the quadratic is the constant 2/√11
        for &x in &[-2.0, 0.0, 1.5] {
            assert!((q.deriv(2, x) - 2.0 * INV_SQRT_11).abs() < 1e-15);
            assert!(q.deriv(3, x).abs() < 1e-15);
        }
        let id = Transform::identity();
        assert!((id.eval(0.37) - 0.37).abs() < 1e-16);
        assert!((id.deriv(1, -3.0) - 1.0).abs() < 1e-16);
        assert_eq!(id.deriv(2, 0.1), 0.0);
    }

    #[test]
    fn polynomial_rejects_degenerate_input() {
        assert!(Transform::make_polynomial(&[]).is_err());
        assert!(Transform::make_polynomial(&[4.2]).is_err());
        assert!(Transform::make_polynomial(&[4.2, 0.0]).is_err());
    }

    #[test]
    fn optimal_gaussian_is_identity() {
        let g = NoiseModel::standard_gaussian();
        let f = Transform::make_optimal(&g).unwrap();
        let mut x = -5.0;
        while x <= 5.0 {
            assert!((f.eval(x) - x).abs() < 1e-9, "f({x}) = {}", f.eval(x));
            x += 0.1;
        }
    }

    #[test]
    fn optimal_mixture_matches_score() {
        let m = NoiseModel::mixture();
        let f = Transform::make_optimal(&m).unwrap();
        let fisher = m.fisher_information().unwrap();
        // leading constant 1/a²/√F_h = 5/√F_h ≈ 2.62503
        assert!((5.0 / fisher.sqrt() - 2.62503).abs() < 2e-3);
        for &x in &[-2.0, -0.5, 0.0, 1.0, 3.0] {
            let want = m.score(x).unwrap() / fisher.sqrt();
            assert!((f.eval(x) - want).abs() < 1e-13);
        }
        // E[f'] = √F_h ≈ 1.905
        let d1 = derivative_moment(&f, &m, 1).unwrap();
        assert!((d1 - fisher.sqrt()).abs() < 1e-8);
        assert!((d1 - 1.905).abs() < 2e-3);
    }

    #[test]
    fn derivatives_match_central_differences() {
        // closed-form d1/d2 agree with central differences of eval at
        // random points; the logistic preset's derivatives are themselves
        // nested differences, so only d1 is sharp there
        let m = NoiseModel::mixture();
        let closed_form = [quadratic(), Transform::make_optimal(&m).unwrap()];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for t in &closed_form {
            for _ in 0..50 {
                let x: f64 = rng.random_range(-3.0..3.0);
                let h = 1e-4 * x.abs().max(1.0);
                let cd1 = (-t.eval(x + 2.0 * h) + 8.0 * t.eval(x + h) - 8.0 * t.eval(x - h)
                    + t.eval(x - 2.0 * h))
                    / (12.0 * h);
                let tol = 1e-5 * cd1.abs().max(1.0);
                assert!((t.deriv(1, x) - cd1).abs() < tol);
                let cd2 = (t.eval(x + h) - 2.0 * t.eval(x) + t.eval(x - h)) / (h * h);
                let tol2 = 1e-4 * cd2.abs().max(1.0);
                assert!((t.deriv(2, x) - cd2).abs() < tol2);
            }
        }
        let logi =
            Transform::make_optimal(&NoiseModel::custom_preset("logistic").unwrap()).unwrap();
        for _ in 0..50 {
            let x: f64 = rng.random_range(-3.0..3.0);
            let h = 1e-4 * x.abs().max(1.0);
            let cd1 = (-logi.eval(x + 2.0 * h) + 8.0 * logi.eval(x + h)
                - 8.0 * logi.eval(x - h)
                + logi.eval(x - 2.0 * h))
                / (12.0 * h);
            assert!((logi.deriv(1, x) - cd1).abs() < 1e-5 * cd1.abs().max(1.0));
            let cd2 = (logi.eval(x + h) - 2.0 * logi.eval(x) + logi.eval(x - h)) / (h * h);
            assert!((logi.deriv(2, x) - cd2).abs() < 1e-2 * cd2.abs().max(1.0));
        }
    }

    #[test]
    fn normalize_scales_centers_and_sign_fixes() {
        let g = NoiseModel::standard_gaussian();
        // f(x) = 2x normalizes to the identity
        let t = Transform::make_polynomial(&[0.0, 2.0]).unwrap().normalize(&g).unwrap();
        for &x in &[-1.0, 0.4, 2.0] {
            assert!((t.eval(x) - x).abs() < 1e-12);
        }
        // the unnormalized quadratic picks up exactly 1/√11
        let q = Transform::make_polynomial(&[-1.0, 3.0, 1.0]).unwrap().normalize(&g).unwrap();
        match q.provenance() {
            Provenance::Polynomial(c) => {
                for (got, want) in c.iter().zip([-INV_SQRT_11, 3.0 * INV_SQRT_11, INV_SQRT_11]) {
                    assert!((got - want).abs() < 1e-11, "{got} vs {want}");
                }
            }
            other => panic!("unexpected provenance {other:?}"),
        }
        // sign convention flips f(x) = -x back to the identity
        let neg = Transform::make_polynomial(&[0.0, -1.0]).unwrap().normalize(&g).unwrap();
        assert!((neg.eval(1.0) - 1.0).abs() < 1e-12);
        // degenerate (constant-variance-zero) transform errors
        assert!(matches!(
            Transform::make_custom("const-ish", |_| 3.0).normalize(&g),
            Err(Error::DegenerateTransform(_))
        ));
    }

    #[test]
    fn derivative_moments() {
        let g = NoiseModel::standard_gaussian();
        let q = quadratic();
        let mut q_norm = q.clone();
        q_norm.normalized = true;
        let d1 = derivative_moment(&q_norm, &g, 1).unwrap();
        assert!((d1 - 3.0 * INV_SQRT_11).abs() < 1e-9, "{d1}");
        let id = Transform::identity();
        assert!((derivative_moment(&id, &g, 1).unwrap() - 1.0).abs() < 1e-11);
        // E[-p'/p] = 0 by integration by parts
        let m = NoiseModel::mixture();
        let opt = Transform::make_optimal(&m).unwrap();
        assert!(derivative_moment(&opt, &m, 0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn effective_snr_values() {
        let m = NoiseModel::mixture();
        let opt = Transform::make_optimal(&m).unwrap();
        let hi = effective_snr(0.8, &opt, &m).unwrap();
        assert!((hi - 2.902).abs() < 2e-3, "{hi}");
        let lo = effective_snr(0.1, &opt, &m).unwrap();
        assert!((lo - 0.363).abs() < 1e-3, "{lo}");
        let g = NoiseModel::standard_gaussian();
        let id = Transform::identity();
        assert!((effective_snr(0.7, &id, &g).unwrap() - 0.7).abs() < 1e-11);
    }

    #[test]
    fn detection_thresholds() {
        let m = NoiseModel::mixture();
        let opt = Transform::make_optimal(&m).unwrap();
        let thr = detection_threshold(&opt, &m).unwrap();
        assert!((thr - 0.276).abs() < 2e-3, "{thr}");

        let g = NoiseModel::standard_gaussian();
        let q = quadratic().normalize(&g).unwrap();
        let thr_q = detection_threshold(&q, &g).unwrap();
        assert!((thr_q - 11.0 / 9.0).abs() < 1e-9);
        assert!((thr_q - 1.222).abs() < 2e-3);

        let id = Transform::identity();
        assert!((detection_threshold(&id, &g).unwrap() - 1.0).abs() < 1e-11);

        // E[f'] = 0 points at the scaled regime
        let even = Transform::make_polynomial(&[-1.0, 0.0, 1.0])
            .unwrap()
            .normalize(&g)
            .unwrap();
        assert!(matches!(
            detection_threshold(&even, &g),
            Err(Error::ZeroDerivativeMean)
        ));
    }

    #[test]
    fn variance_profile_against_gaussian_moment_oracle() {
        let g = NoiseModel::standard_gaussian();
        let id = Transform::identity();
        let (c1, c2) = variance_profile_coeffs(0.37, &id, &g).unwrap();
        assert!(c1.abs() < 1e-10 && c2.abs() < 1e-12);

        let q = quadratic().normalize(&g).unwrap();
        let (c1, c2) = variance_profile_coeffs(1.0, &q, &g).unwrap();
        // oracle: symbolic Gaussian moments of f·f' and (f')²
        let f_coeffs = [-INV_SQRT_11, 3.0 * INV_SQRT_11, INV_SQRT_11];
        let d_coeffs = poly_derive(&f_coeffs);
        let e_ffp = poly_gaussian_expect(&poly_mul(&f_coeffs, &d_coeffs));
        let e_fp = poly_gaussian_expect(&d_coeffs);
        let e_fp2 = poly_gaussian_expect(&poly_mul(&d_coeffs, &d_coeffs));
        let want_c1 = 2.0 * (e_ffp - 0.0 * e_fp);
        let want_c2 = e_fp2 - e_fp * e_fp;
        assert!((c1 - want_c1).abs() < 1e-9, "{c1} vs {want_c1}");
        assert!((c2 - want_c2).abs() < 1e-9, "{c2} vs {want_c2}");
        assert!((want_c2 - 4.0 / 11.0).abs() < 1e-15);
        assert!((want_c1 - 12.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn variance_profile_sign_properties() {
        // C₂ᵛ ≥ 0 always; C₁ᵛ = 0 for odd f under an even density
        let g = NoiseModel::standard_gaussian();
        let m = NoiseModel::mixture();
        let cubic = Transform::make_polynomial(&[0.0, 0.0, 0.0, 1.0])
            .unwrap()
            .normalize(&g)
            .unwrap();
        let (c1, c2) = variance_profile_coeffs(0.9, &cubic, &g).unwrap();
        assert!(c1.abs() < 1e-9, "odd transform must have C₁ᵛ = 0, got {c1}");
        assert!(c2 >= 0.0);
        let opt = Transform::make_optimal(&m).unwrap();
        let (c1, c2) = variance_profile_coeffs(0.8, &opt, &m).unwrap();
        assert!(c1.abs() < 1e-9, "odd optimal transform, even p: {c1}");
        assert!(c2 >= 0.0);
    }

    #[test]
    fn critical_indices() {
        let g = NoiseModel::standard_gaussian();
        assert_eq!(critical_index(&Transform::identity(), &g, 1e-8).unwrap(), 1);
        let even = Transform::make_polynomial(&[-1.0, 0.0, 1.0])
            .unwrap()
            .normalize(&g)
            .unwrap();
        assert_eq!(critical_index(&even, &g, 1e-8).unwrap(), 2);
        let m = NoiseModel::mixture();
        let opt = Transform::make_optimal(&m).unwrap();
        assert_eq!(critical_index(&opt, &m, 1e-8).unwrap(), 1);
        // odd cubic with E[f'] = E[3x²-3]/√6 = 0 and E[f''] = E[6x] = 0:
        // k_f = 3
        let c = Transform::make_polynomial(&[0.0, -3.0, 0.0, 1.0])
            .unwrap()
            .normalize(&g)
            .unwrap();
        assert_eq!(critical_index(&c, &g, 1e-8).unwrap(), 3);
    }

    #[test]
    fn effective_snr_scale_invariant_under_prenormalization() {
        let g = NoiseModel::standard_gaussian();
        let base = Transform::make_polynomial(&[-1.0, 3.0, 1.0]).unwrap();
        let reference = effective_snr(0.9, &base.normalize(&g).unwrap(), &g).unwrap();
        for &c in &[0.25, 3.0, 17.0] {
            let scaled =
                Transform::make_polynomial(&[-c, 3.0 * c, c]).unwrap().normalize(&g).unwrap();
            let snr = effective_snr(0.9, &scaled, &g).unwrap();
            assert!((snr - reference).abs() < 1e-8, "c={c}: {snr} vs {reference}");
        }
    }

    #[test]
    fn optimal_transform_dominates_pool() {
        let m = NoiseModel::mixture();
        let opt = Transform::make_optimal(&m).unwrap();
        let best = effective_snr(0.8, &opt, &m).unwrap();
        let pool = [
            Transform::make_polynomial(&[0.0, 1.0]).unwrap(),
            Transform::make_polynomial(&[-1.0, 3.0, 1.0]).unwrap(),
            Transform::make_polynomial(&[0.0, 0.0, 0.0, 1.0]).unwrap(),
            Transform::make_polynomial(&[0.0, -3.0, 0.0, 1.0]).unwrap(),
            Transform::make_polynomial(&[0.0, 1.0, 1.0]).unwrap(),
        ];
        for t in &pool {
            let snr = effective_snr(0.8, &t.normalize(&m).unwrap(), &m).unwrap();
            assert!(snr <= best + 1e-6, "{snr} > {best}");
        }
    }

    #[test]
    fn moments_cache_matches_directs() {
        let m = NoiseModel::mixture();
        let opt = Transform::make_optimal(&m).unwrap();
        let cache = TransformMoments::compute(&opt, &m).unwrap();
        assert!((cache.e_d1 - derivative_moment(&opt, &m, 1).unwrap()).abs() < 1e-12);
        assert!((cache.e_f2 - 1.0).abs() < 1e-8);
        assert!((cache.effective_snr(0.8) - effective_snr(0.8, &opt, &m).unwrap()).abs() < 1e-12);
        let (c1a, c2a) = cache.variance_coeffs(0.8);
        let (c1b, c2b) = variance_profile_coeffs(0.8, &opt, &m).unwrap();
        assert!((c1a - c1b).abs() < 1e-12 && (c2a - c2b).abs() < 1e-12);
        assert_eq!(cache.critical_index(1e-8).unwrap(), 1);
    }
}
