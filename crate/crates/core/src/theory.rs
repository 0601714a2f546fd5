//! Closed-form predictions for the largest eigenvalue and the reference
//! laws used for goodness-of-fit: the supercritical Gaussian with
//! σ² = 2(λe−1)/λe at location √λe + 1/√λe, the subcritical GOE
//! Tracy–Widom edge law, and the scaled-SNR variant with its deterministic
//! shift.
//!
//! The Tracy–Widom CDF ships as a certified table (`data/tw1.csv`) with
//! monotone cubic interpolation; the generating oracle is a Nyström
//! Gauss–Legendre discretization of the Fredholm determinant
//! det(I − K)|_{L²(s,∞)} with kernel K(x, y) = Ai((x+y)/2)/2.

use crate::noise::NoiseModel;
use crate::special::{airy_ai, norm_cdf};
use crate::transform::{Transform, TransformMoments};
use crate::{quad, Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

pub const DEFAULT_MARGIN: f64 = 0.05;
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Supercritical,
    Subcritical,
    ScaledK2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum ReferenceLaw {
    Gaussian { mean: f64, var: f64 },
    TracyWidomGoe,
}

impl ReferenceLaw {
    pub fn cdf(&self, s: f64) -> f64 {
        match *self {
            ReferenceLaw::Gaussian { mean, var } => gaussian_cdf(s, mean, var),
            ReferenceLaw::TracyWidomGoe => tw1_cdf(s),
        }
    }

    pub fn density(&self, s: f64) -> f64 {
        match *self {
            ReferenceLaw::Gaussian { mean, var } => {
                let z = (s - mean) / var.sqrt();
                (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
            }
            ReferenceLaw::TracyWidomGoe => Tw1Table::embedded().density(s),
        }
    }
}

/// Regime label with the limit location, fluctuation scale exponent, and
/// reference law parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TheoryPrediction {
    pub regime: Regime,
    pub lambda_e: f64,
    pub location: f64,
    pub scale_exponent: f64,
    pub reference: ReferenceLaw,
    /// Deterministic mean shift of the scaled regime (0 otherwise).
    pub shift: f64,
}

fn outlier_location(lambda_e: f64) -> f64 {
    lambda_e.sqrt() + 1.0 / lambda_e.sqrt()
}

fn outlier_variance(lambda_e: f64) -> f64 {
    2.0 * (lambda_e - 1.0) / lambda_e
}

/// Theorem-level prediction at fixed SNR λ.
pub fn predict(
    lambda: f64,
    t: &Transform,
    model: &NoiseModel,
    margin: f64,
) -> Result<TheoryPrediction> {
    let moments = TransformMoments::compute(t, model)?;
    predict_from_moments(lambda, &moments, margin)
}

pub fn predict_from_moments(
    lambda: f64,
    moments: &TransformMoments,
    margin: f64,
) -> Result<TheoryPrediction> {
    let lambda_e = moments.effective_snr(lambda);
    if (lambda_e - 1.0).abs() < margin {
        return Err(Error::NearCritical { lambda_e, margin });
    }
    if lambda_e > 1.0 {
        Ok(TheoryPrediction {
            regime: Regime::Supercritical,
            lambda_e,
            location: outlier_location(lambda_e),
            scale_exponent: -0.5,
            reference: ReferenceLaw::Gaussian {
                mean: 0.0,
                var: outlier_variance(lambda_e),
            },
            shift: 0.0,
        })
    } else {
        Ok(TheoryPrediction {
            regime: Regime::Subcritical,
            lambda_e,
            location: 2.0,
            scale_exponent: -2.0 / 3.0,
            reference: ReferenceLaw::TracyWidomGoe,
            shift: 0.0,
        })
    }
}

/// Scaled-SNR prediction for λ = λ₀√N with k_f = 2:
/// λ̃e = (λ₀² w₄²/4)·E[f'']², location √λ̃e + 1/√λ̃e, variance
/// 2(λ̃e−1)/λ̃e, mean shift m̃ = (C₂ᵛ/2)·location with
/// C₂ᵛ = E[f²] + E[f f''] − E[f]E[f''].
pub fn predict_scaled(
    lambda0: f64,
    t: &Transform,
    model: &NoiseModel,
    w4: f64,
    margin: f64,
) -> Result<TheoryPrediction> {
    let moments = TransformMoments::compute(t, model)?;
    predict_scaled_from_moments(lambda0, &moments, w4, margin, DEFAULT_ZERO_TOL)
}

pub fn predict_scaled_from_moments(
    lambda0: f64,
    moments: &TransformMoments,
    w4: f64,
    margin: f64,
    zero_tol: f64,
) -> Result<TheoryPrediction> {
    let kf = moments.critical_index(zero_tol)?;
    if kf != 2 {
        return Err(Error::WrongCriticalIndex(kf));
    }
    let lambda_e = 0.25 * lambda0 * lambda0 * w4 * w4 * moments.e_d2 * moments.e_d2;
    if (lambda_e - 1.0).abs() < margin {
        return Err(Error::NearCritical {
            lambda_e,
            margin,
        });
    }
    if lambda_e < 1.0 {
        return Err(Error::ScaledSubcritical(lambda_e));
    }
    let location = outlier_location(lambda_e);
    let shift = 0.5 * moments.scaled_shift_coeff() * location;
    Ok(TheoryPrediction {
        regime: Regime::ScaledK2,
        lambda_e,
        location,
        scale_exponent: -0.5,
        reference: ReferenceLaw::Gaussian {
            mean: shift,
            var: outlier_variance(lambda_e),
        },
        shift,
    })
}

/// Gaussian CDF with the given mean and variance.
pub fn gaussian_cdf(s: f64, mean: f64, var: f64) -> f64 {
    norm_cdf((s - mean) / var.sqrt())
}

/// GOE Tracy–Widom CDF from the embedded table (clamped outside the grid).
pub fn tw1_cdf(s: f64) -> f64 {
    Tw1Table::embedded().cdf(s)
}

/// Quantile of the GOE Tracy–Widom law by bisection on the table.
pub fn tw1_quantile(q: f64) -> Result<f64> {
    Tw1Table::embedded().quantile(q)
}

/// GOE Tracy–Widom CDF via the Fredholm determinant oracle:
/// det(I − K) on L²(s, s+T) discretized with an m-point Gauss–Legendre
/// rule, kernel K(x, y) = Ai((x+y)/2)/2.
pub fn tw1_cdf_fredholm(s: f64, nodes: usize, t_len: f64) -> f64 {
    let (xi, wi) = quad::gauss_legendre(nodes);
    let half = 0.5 * t_len;
    let x: Vec<f64> = xi.iter().map(|v| s + (v + 1.0) * half).collect();
    let sw: Vec<f64> = wi.iter().map(|v| (v * half).sqrt()).collect();
    let mut m = nalgebra::DMatrix::<f64>::zeros(nodes, nodes);
    for i in 0..nodes {
        for j in i..nodes {
            let k = 0.5 * airy_ai(0.5 * (x[i] + x[j]));
            let v = sw[i] * k * sw[j];
            m[(i, j)] = -v;
            m[(j, i)] = -v;
        }
    }
    for i in 0..nodes {
        m[(i, i)] += 1.0;
    }
    m.lu().determinant()
}

#[derive(Clone, Copy, Debug)]
pub struct TwGenOptions {
    pub s_min: f64,
    pub s_max: f64,
    pub step: f64,
    pub nodes: usize,
    pub t_len: f64,
    pub refine_nodes: usize,
    pub refine_t_len: f64,
    /// Refinement certification threshold on max |Δcdf|.
    pub certify_tol: f64,
}

impl Default for TwGenOptions {
    fn default() -> Self {
        Self {
            s_min: -10.0,
            s_max: 6.5,
            step: 0.01,
            nodes: 120,
            t_len: 28.0,
            refine_nodes: 180,
            refine_t_len: 36.0,
            certify_tol: 1e-6,
        }
    }
}

/// Monotone-cubic-interpolated CDF table of the GOE Tracy–Widom law on a
/// uniform grid.
#[derive(Clone, Debug)]
pub struct Tw1Table {
    s0: f64,
    step: f64,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
}

/// Fritsch–Carlson monotone slopes on a uniform grid.
fn pchip_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h).collect();
    d[0] = edge_slope(delta[0], *delta.get(1).unwrap_or(&delta[0]));
    d[n - 1] = edge_slope(delta[n - 2], *delta.get(n.wrapping_sub(3)).unwrap_or(&delta[n - 2]));
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        d[i] = if a * b <= 0.0 {
            0.0
        } else {
            2.0 * a * b / (a + b)
        };
    }
    d
}

fn edge_slope(d0: f64, d1: f64) -> f64 {
    let s = 0.5 * (3.0 * d0 - d1);
    if s.signum() != d0.signum() {
        0.0
    } else if s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

impl Tw1Table {
    /// The certified table shipped with the crate.
    pub fn embedded() -> &'static Tw1Table {
        static TABLE: OnceLock<Tw1Table> = OnceLock::new();
        TABLE.get_or_init(|| {
            Tw1Table::parse_csv(EMBEDDED_CSV).expect("embedded TW table is valid")
        })
    }

    /// Raw CSV bytes of the embedded table (for checksum verification).
    pub fn embedded_csv() -> &'static str {
        EMBEDDED_CSV
    }

    /// Recorded SHA-256 of the embedded CSV.
    pub fn embedded_sha256() -> &'static str {
        EMBEDDED_SHA256.trim()
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("s,cdf") => {}
            other => {
                return Err(Error::Format(format!(
                    "TW table must start with `s,cdf`, got {other:?}"
                )))
            }
        }
        let mut s = Vec::new();
        let mut cdf = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("TW table line {} malformed", ln + 2)))?;
            s.push(a.trim().parse::<f64>().map_err(|e| Error::Format(e.to_string()))?);
            cdf.push(b.trim().parse::<f64>().map_err(|e| Error::Format(e.to_string()))?);
        }
        if s.len() < 16 {
            return Err(Error::Format("TW table too short".into()));
        }
        let step = s[1] - s[0];
        for i in 1..s.len() {
            if ((s[i] - s[i - 1]) - step).abs() > 1e-9 {
                return Err(Error::Format(format!("TW table grid not uniform at row {i}")));
            }
            if cdf[i] <= cdf[i - 1] {
                return Err(Error::Format(format!(
                    "TW table cdf not strictly increasing at row {i}"
                )));
            }
        }
        if step > 0.01 + 1e-12 {
            return Err(Error::Format(format!("TW table step {step} exceeds 0.01")));
        }
        if cdf[0] > 1e-6 || 1.0 - cdf[cdf.len() - 1] > 1e-6 {
            return Err(Error::Format(
                "TW table ends do not reach 0/1 within 1e-6".into(),
            ));
        }
        let slopes = pchip_slopes(&cdf, step);
        Ok(Self {
            s0: s[0],
            step,
            cdf,
            slopes,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,cdf\n");
        for (i, v) in self.cdf.iter().enumerate() {
            let s = self.s0 + self.step * i as f64;
            out.push_str(&format!("{:.2},{:.12e}\n", s, v));
        }
        out
    }

    /// Generate the table from the Fredholm oracle, certifying every grid
    /// point against an independent refinement. Returns the table and the
    /// maximum refinement discrepancy.
    pub fn generate(opts: &TwGenOptions) -> Result<(Self, f64)> {
        let count = ((opts.s_max - opts.s_min) / opts.step).round() as usize + 1;
        let mut cdf = Vec::with_capacity(count);
        let mut max_delta = 0.0f64;
        for i in 0..count {
            let s = opts.s_min + opts.step * i as f64;
            let v = tw1_cdf_fredholm(s, opts.nodes, opts.t_len);
            let v_ref = tw1_cdf_fredholm(s, opts.refine_nodes, opts.refine_t_len);
            max_delta = max_delta.max((v - v_ref).abs());
            cdf.push(v.clamp(0.0, 1.0));
        }
        if max_delta > opts.certify_tol {
            return Err(Error::Quadrature(format!(
                "TW refinement discrepancy {max_delta:.3e} exceeds {:.1e}",
                opts.certify_tol
            )));
        }
        // repair sub-roundoff tail noise so the cdf is strictly increasing
        let mut repaired = 0.0f64;
        for i in 1..count {
            if cdf[i] <= cdf[i - 1] {
                let bump = f64::from_bits(cdf[i - 1].to_bits() + 8).max(cdf[i - 1] + 1e-300);
                repaired += (bump - cdf[i]).abs();
                cdf[i] = bump;
            }
        }
        if repaired > 1e-9 {
            return Err(Error::Quadrature(format!(
                "monotone repair moved the cdf by {repaired:.3e}"
            )));
        }
        let slopes = pchip_slopes(&cdf, opts.step);
        Ok((
            Self {
                s0: opts.s_min,
                step: opts.step,
                cdf,
                slopes,
            },
            max_delta,
        ))
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    pub fn s_min(&self) -> f64 {
        self.s0
    }

    pub fn s_max(&self) -> f64 {
        self.s0 + self.step * (self.cdf.len() - 1) as f64
    }

    /// CDF with tail clamping; the flag marks an out-of-table argument.
    pub fn cdf_flagged(&self, s: f64) -> (f64, bool) {
        if s <= self.s0 {
            return (0.0, s < self.s0);
        }
        let last = self.s_max();
        if s >= last {
            return (1.0, s > last);
        }
        let u = (s - self.s0) / self.step;
        let i = (u.floor() as usize).min(self.cdf.len() - 2);
        let t = u - i as f64;
        let h = self.step;
        let (y0, y1) = (self.cdf[i], self.cdf[i + 1]);
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1;
        (v.clamp(0.0, 1.0), false)
    }

    pub fn cdf(&self, s: f64) -> f64 {
        self.cdf_flagged(s).0
    }

    /// Interpolated density (derivative of the monotone cubic).
    pub fn density(&self, s: f64) -> f64 {
        if s <= self.s0 || s >= self.s_max() {
            return 0.0;
        }
        let u = (s - self.s0) / self.step;
        let i = (u.floor() as usize).min(self.cdf.len() - 2);
        let t = u - i as f64;
        let h = self.step;
        let (y0, y1) = (self.cdf[i], self.cdf[i + 1]);
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * y0 / h
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * y1 / h
            + (3.0 * t2 - 2.0 * t) * d1)
            .max(0.0)
    }

    /// Quantile by bisection on the interpolated CDF.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0 < q && q < 1.0) {
            return Err(Error::Config(format!("quantile level {q} outside (0, 1)")));
        }
        let (mut lo, mut hi) = (self.s0, self.s_max());
        if q <= self.cdf[0] {
            return Ok(lo);
        }
        if q >= *self.cdf.last().unwrap() {
            return Ok(hi);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Mean by integration by parts over the grid (Simpson).
    pub fn mean(&self) -> f64 {
        let a = self.s0;
        let b = self.s_max();
        let int_f = self.simpson(|s| self.cdf(s));
        b * self.cdf(b) - a * self.cdf(a) - int_f
    }

    pub fn variance(&self) -> f64 {
        let a = self.s0;
        let b = self.s_max();
        let int_2sf = self.simpson(|s| 2.0 * s * self.cdf(s));
        let e2 = b * b * self.cdf(b) - a * a * self.cdf(a) - int_2sf;
        let m = self.mean();
        e2 - m * m
    }

    fn simpson(&self, f: impl Fn(f64) -> f64) -> f64 {
        let n = if self.cdf.len() % 2 == 0 {
            self.cdf.len()
        } else {
            self.cdf.len() - 1
        }; // even panel count
        let h = (self.s_max() - self.s0) / n as f64;
        let mut sum = f(self.s0) + f(self.s_max());
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(self.s0 + h * i as f64);
        }
        sum * h / 3.0
    }
}

static EMBEDDED_CSV: &str = include_str!("../data/tw1.csv");
static EMBEDDED_SHA256: &str = include_str!("../data/tw1.sha256");

#[cfg(test)]
mod tests {
    use super::*;

    fn mixture_moments() -> TransformMoments {
        let m = NoiseModel::mixture();
        let t = Transform::make_optimal(&m).unwrap();
        TransformMoments::compute(&t, &m).unwrap()
    }

    fn even_quadratic_moments() -> TransformMoments {
        let g = NoiseModel::standard_gaussian();
        let t = Transform::make_polynomial(&[-1.0, 0.0, 1.0])
            .unwrap()
            .normalize(&g)
            .unwrap();
        TransformMoments::compute(&t, &g).unwrap()
    }

    #[test]
    fn supercritical_prediction_numbers() {
        let moments = mixture_moments();
        let p = predict_from_moments(0.8, &moments, DEFAULT_MARGIN).unwrap();
        assert_eq!(p.regime, Regime::Supercritical);
        assert!((p.lambda_e - 2.902).abs() < 2e-3);
        assert!((p.location - 2.2905).abs() < 2e-3, "{}", p.location);
        match p.reference {
            ReferenceLaw::Gaussian { mean, var } => {
                assert_eq!(mean, 0.0);
                assert!((var - 1.3108).abs() < 2e-3, "{var}");
            }
            other => panic!("unexpected law {other:?}"),
        }
        assert_eq!(p.scale_exponent, -0.5);
        assert_eq!(p.shift, 0.0);
    }

    #[test]
    fn subcritical_prediction() {
        let moments = mixture_moments();
        let p = predict_from_moments(0.1, &moments, DEFAULT_MARGIN).unwrap();
        assert_eq!(p.regime, Regime::Subcritical);
        assert!((p.lambda_e - 0.363).abs() < 1e-3);
        assert_eq!(p.location, 2.0);
        assert_eq!(p.reference, ReferenceLaw::TracyWidomGoe);
        assert!((p.scale_exponent + 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn variance_is_one_at_lambda_e_two() {
        let moments = mixture_moments();
        // λ chosen so λ·E[f']² = 2 exactly
        let lambda = 2.0 / (moments.e_d1 * moments.e_d1);
        let p = predict_from_moments(lambda, &moments, DEFAULT_MARGIN).unwrap();
        match p.reference {
            ReferenceLaw::Gaussian { var, .. } => assert!((var - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn near_critical_is_rejected() {
        let moments = mixture_moments();
        let lambda_at_one = 1.0 / (moments.e_d1 * moments.e_d1);
        for frac in [0.96, 1.0, 1.04] {
            let r = predict_from_moments(lambda_at_one * frac, &moments, DEFAULT_MARGIN);
            assert!(matches!(r, Err(Error::NearCritical { .. })), "{frac}");
        }
    }

    #[test]
    fn location_monotone_and_continuous_at_threshold() {
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let le = 1.0 + 3.0 * (200 - i) as f64 / 200.0;
            let loc = outlier_location(le);
            assert!(loc < prev, "L must increase in λe");
            prev = loc;
        }
        assert!((outlier_location(1.0 + 1e-9) - 2.0).abs() < 1e-8);
        assert!(outlier_variance(1.0 + 1e-9) < 1e-8);
    }

    #[test]
    fn scaled_prediction_for_even_quadratic() {
        let moments = even_quadratic_moments();
        // E[f''] = √2 so λ̃e = λ₀²/2 for the Rademacher prior (w₄ = 1)
        assert!((moments.e_d2 - 2.0f64.sqrt()).abs() < 1e-9);
        let p = predict_scaled_from_moments(2.0, &moments, 1.0, DEFAULT_MARGIN, DEFAULT_ZERO_TOL)
            .unwrap();
        assert_eq!(p.regime, Regime::ScaledK2);
        assert!((p.lambda_e - 2.0).abs() < 1e-9);
        let loc = 2.0f64.sqrt() + 1.0 / 2.0f64.sqrt();
        assert!((p.location - loc).abs() < 1e-9);
        // C₂ᵛ = E[f²] + E[f f''] − E[f]E[f''] = 1 for this transform
        assert!((moments.scaled_shift_coeff() - 1.0).abs() < 1e-8);
        assert!((p.shift - 0.5 * loc).abs() < 1e-8);
        match p.reference {
            ReferenceLaw::Gaussian { mean, var } => {
                assert!((mean - p.shift).abs() < 1e-14);
                assert!((var - 1.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scaled_prediction_rejects_bad_inputs() {
        let moments = even_quadratic_moments();
        // λ̃e = 1 exactly at λ₀ = √2
        assert!(matches!(
            predict_scaled_from_moments(
                2.0f64.sqrt(),
                &moments,
                1.0,
                DEFAULT_MARGIN,
                DEFAULT_ZERO_TOL
            ),
            Err(Error::NearCritical { .. })
        ));
        assert!(matches!(
            predict_scaled_from_moments(1.0, &moments, 1.0, DEFAULT_MARGIN, DEFAULT_ZERO_TOL),
            Err(Error::ScaledSubcritical(_))
        ));
        let g = NoiseModel::standard_gaussian();
        let id = Transform::identity();
        let id_moments = TransformMoments::compute(&id, &g).unwrap();
        assert!(matches!(
            predict_scaled_from_moments(2.0, &id_moments, 1.0, DEFAULT_MARGIN, DEFAULT_ZERO_TOL),
            Err(Error::WrongCriticalIndex(1))
        ));
    }

    #[test]
    fn prediction_invariant_under_transform_prescaling() {
        let g = NoiseModel::standard_gaussian();
        let a = Transform::make_polynomial(&[-1.0, 3.0, 1.0]).unwrap().normalize(&g).unwrap();
        let b = Transform::make_polynomial(&[-7.0, 21.0, 7.0]).unwrap().normalize(&g).unwrap();
        let pa = predict(2.5, &a, &g, DEFAULT_MARGIN).unwrap();
        let pb = predict(2.5, &b, &g, DEFAULT_MARGIN).unwrap();
        assert!((pa.location - pb.location).abs() < 1e-8);
        assert!((pa.lambda_e - pb.lambda_e).abs() < 1e-8);
    }

    #[test]
    fn gaussian_cdf_basics() {
        assert!((gaussian_cdf(0.0, 0.0, 1.3108) - 0.5).abs() < 1e-15);
        assert!((gaussian_cdf(1.0, 1.0, 4.0) - 0.5).abs() < 1e-15);
        assert!((gaussian_cdf(1.959963984540054, 0.0, 1.0) - 0.975).abs() < 1e-12);
    }

    #[test]
    fn fredholm_oracle_reference_points() {
        // frozen from an independent quadrature of the same determinant
        let cases = [
            (-3.0, 0.0696001189),
            (-1.0, 0.5837898955),
            (0.0, 0.8319080662),
            (2.0, 0.9895975711),
        ];
        for &(s, want) in &cases {
            let got = tw1_cdf_fredholm(s, 120, 28.0);
            assert!((got - want).abs() < 1e-8, "F({s}) = {got}, want {want}");
        }
    }

    #[test]
    fn fredholm_oracle_self_refines() {
        for &s in &[-5.0, -2.0, 0.0, 2.0] {
            let a = tw1_cdf_fredholm(s, 120, 28.0);
            let b = tw1_cdf_fredholm(s, 180, 36.0);
            assert!((a - b).abs() < 1e-9, "refinement gap at {s}: {}", (a - b).abs());
        }
    }

    #[test]
    fn embedded_table_shape_and_tails() {
        let t = Tw1Table::embedded();
        assert!(t.s_min() <= -10.0 + 1e-12 && t.s_max() >= 6.0);
        assert!(t.cdf(-10.0) < 1e-5);
        assert!(t.cdf(t.s_max()) > 1.0 - 1e-5);
        let (v, flagged) = t.cdf_flagged(-50.0);
        assert_eq!(v, 0.0);
        assert!(flagged);
        let (v, flagged) = t.cdf_flagged(50.0);
        assert_eq!(v, 1.0);
        assert!(flagged);
    }

    #[test]
    fn embedded_table_matches_recorded_checksum() {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(Tw1Table::embedded_csv().as_bytes());
        let hex = hex::encode(digest);
        assert_eq!(hex, Tw1Table::embedded_sha256());
    }

    #[test]
    fn table_moments_match_known_values() {
        let t = Tw1Table::embedded();
        assert!((t.mean() + 1.2065).abs() < 1.5e-3, "mean {}", t.mean());
        assert!((t.variance() - 1.6078).abs() < 3e-3, "var {}", t.variance());
    }

    #[test]
    fn quantile_round_trips() {
        let t = Tw1Table::embedded();
        for &s in &[-3.5, -2.0, -1.2, 0.0, 1.5] {
            let q = t.cdf(s);
            let back = t.quantile(q).unwrap();
            assert!((back - s).abs() < 1e-4, "{s} -> {q} -> {back}");
        }
        assert!(t.quantile(0.0).is_err());
        assert!(t.quantile(1.0).is_err());
    }

    #[test]
    fn table_density_integrates_to_one() {
        let t = Tw1Table::embedded();
        let mut sum = 0.0;
        let steps = 16_000;
        let h = (t.s_max() - t.s_min()) / steps as f64;
        for i in 0..=steps {
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            sum += w * t.density(t.s_min() + h * i as f64);
        }
        assert!((sum * h - 1.0).abs() < 1e-4, "mass {}", sum * h);
    }

    /// Maintenance path: regenerate data/tw1.csv and its checksum.
    /// Run explicitly with
    /// `cargo test -p spikelab --lib tw_table_regenerate -- --ignored`.
    #[test]
    #[ignore]
    fn tw_table_regenerate() {
        use sha2::{Digest, Sha256};
        let (table, max_delta) = Tw1Table::generate(&TwGenOptions::default()).unwrap();
        let csv = table.to_csv();
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        std::fs::write(dir.join("tw1.csv"), &csv).unwrap();
        let hex = hex::encode(Sha256::digest(csv.as_bytes()));
        std::fs::write(dir.join("tw1.sha256"), format!("{hex}\n")).unwrap();
        println!("regenerated {} points, refinement delta {max_delta:.3e}", table.len());
    }
}
