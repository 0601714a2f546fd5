//! Sampling of spikes and Wigner noise, assembly of the spiked matrix
//! M = W + √λ·xxᵀ, the entrywise transform, and the auxiliary matrices:
//! the Taylor surrogate H, the Wigner-type noise V, the interpolants
//! V(t)/H(t), and the rank-2 spike with its closed-form eigenvalues.

use crate::noise::NoiseModel;
use crate::symmat::SymMatrix;
use crate::transform::{Transform, TransformMoments};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Clone, Debug)]
pub enum PriorKind {
    /// Entries ±1/√N; unit norm by construction.
    IidRademacher,
    /// Gaussian direction projected to the sphere.
    Spherical,
    /// √N·x_i i.i.d. from a unit-variance noise model.
    IidModel(NoiseModel),
}

#[derive(Clone, Debug)]
pub struct SpikePrior {
    pub kind: PriorKind,
    /// Project the draw to exact unit norm.
    pub post_normalize: bool,
}

impl SpikePrior {
    pub fn rademacher() -> Self {
        Self {
            kind: PriorKind::IidRademacher,
            post_normalize: false,
        }
    }

    pub fn spherical() -> Self {
        Self {
            kind: PriorKind::Spherical,
            post_normalize: true,
        }
    }

    pub fn iid_model(model: NoiseModel) -> Self {
        Self {
            kind: PriorKind::IidModel(model),
            post_normalize: true,
        }
    }

    /// w₄ = E[(√N x_i)⁴] of the underlying i.i.d. law (spherical reported
    /// at its N → ∞ value).
    pub fn fourth_moment(&self) -> Result<f64> {
        match &self.kind {
            PriorKind::IidRademacher => Ok(1.0),
            PriorKind::Spherical => Ok(3.0),
            PriorKind::IidModel(m) => m.expect(|x| x.powi(4)),
        }
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            PriorKind::IidRademacher => "iid-rademacher",
            PriorKind::Spherical => "spherical",
            PriorKind::IidModel(_) => "iid-custom",
        }
    }
}

/// One draw of the spiked ensemble with the ingredients needed by every
/// derived matrix.
#[derive(Clone, Debug)]
pub struct SpikedSample {
    pub n: usize,
    pub w: SymMatrix,
    pub x: Vec<f64>,
    pub lambda: f64,
    pub seed: u64,
}

/// Statistical checks on a spike draw (flagged, not fatal): the i.i.d.
/// prior bounds max √N|x_i|, |Σx_i| and N|Σx_i³| by polylogs.
#[derive(Clone, Copy, Debug)]
pub struct SpikeDiagnostics {
    pub max_abs_scaled: f64,
    pub sum: f64,
    pub sum_cubes_scaled: f64,
    pub ok: bool,
}

impl SpikeDiagnostics {
    pub fn check(x: &[f64]) -> Self {
        let n = x.len() as f64;
        let bound = 10.0 * n.ln();
        let max_abs_scaled = x.iter().fold(0.0f64, |a, &v| a.max(v.abs())) * n.sqrt();
        let sum: f64 = x.iter().sum();
        let sum_cubes_scaled = x.iter().map(|&v| v * v * v).sum::<f64>().abs() * n;
        let ok = max_abs_scaled <= bound && sum.abs() <= bound && sum_cubes_scaled <= bound;
        Self {
            max_abs_scaled,
            sum,
            sum_cubes_scaled,
            ok,
        }
    }
}

/// Draw a unit spike.
pub fn sample_spike(prior: &SpikePrior, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    assert!(n >= 2, "spike dimension must be ≥ 2");
    let mut x: Vec<f64> = match &prior.kind {
        PriorKind::IidRademacher => {
            let inv = 1.0 / (n as f64).sqrt();
            (0..n)
                .map(|_| if rng.random::<bool>() { inv } else { -inv })
                .collect()
        }
        PriorKind::Spherical => {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            v
        }
        PriorKind::IidModel(m) => {
            let inv = 1.0 / (n as f64).sqrt();
            m.sample(rng, n)?.into_iter().map(|y| y * inv).collect()
        }
    };
    let always = matches!(prior.kind, PriorKind::Spherical);
    if always || prior.post_normalize {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Solver("degenerate zero spike draw".into()));
        }
        for v in &mut x {
            *v /= norm;
        }
    }
    Ok(x)
}

/// Draw a Wigner matrix: √N·W_ij i.i.d. from the model for i ≤ j
/// (diagonal included), symmetric by construction.
pub fn sample_wigner(model: &NoiseModel, n: usize, rng: &mut impl Rng) -> Result<SymMatrix> {
    assert!(n >= 2, "matrix dimension must be ≥ 2");
    let inv = 1.0 / (n as f64).sqrt();
    let mut m = SymMatrix::zeros(n);
    let mut err = None;
    m.map_upper(|_, _, _| match model.sample_one(rng) {
        Ok(v) => v * inv,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(m),
    }
}

/// M = W + √λ·xxᵀ.
pub fn assemble(w: &SymMatrix, x: &[f64], lambda: f64) -> SymMatrix {
    let mut m = w.clone();
    let sl = lambda.sqrt();
    m.map_upper(|i, j, v| v + sl * x[i] * x[j]);
    m
}

/// M̃_ij = f(√N·M_ij)/√N.
pub fn transform_entrywise(m: &SymMatrix, t: &Transform) -> SymMatrix {
    let n = m.n() as f64;
    let s = n.sqrt();
    let inv = 1.0 / s;
    let mut out = m.clone();
    out.map_upper(|_, _, v| t.eval(s * v) * inv);
    out
}

/// The Taylor surrogate
/// H_ij = f(√N W_ij)/√N + √λ f'(√N W_ij) x_i x_j + (λ/2) E[f''] √N x_i² x_j².
pub fn build_h(sample: &SpikedSample, t: &Transform, moments: &TransformMoments) -> SymMatrix {
    assert!(t.is_normalized());
    let n = sample.n as f64;
    let s = n.sqrt();
    let inv = 1.0 / s;
    let sl = sample.lambda.sqrt();
    let curv = 0.5 * sample.lambda * moments.e_d2 * s;
    let x = &sample.x;
    let mut out = sample.w.clone();
    out.map_upper(|i, j, w| {
        let z = s * w;
        let xij = x[i] * x[j];
        t.eval(z) * inv + sl * t.deriv(1, z) * xij + curv * xij * xij
    });
    out
}

/// The Wigner-type noise V_ij = f_ij/√N + √λ (f'_ij − E[f']) x_i x_j.
pub fn build_v(sample: &SpikedSample, t: &Transform, moments: &TransformMoments) -> SymMatrix {
    assert!(t.is_normalized());
    let n = sample.n as f64;
    let s = n.sqrt();
    let inv = 1.0 / s;
    let sl = sample.lambda.sqrt();
    let x = &sample.x;
    let mut out = sample.w.clone();
    out.map_upper(|i, j, w| {
        let z = s * w;
        t.eval(z) * inv + sl * (t.deriv(1, z) - moments.e_d1) * x[i] * x[j]
    });
    out
}

/// The interpolants at `tpoint` ∈ [0, 1]:
/// V(t)_ij rescales V_ij by √((1 + t·a_ij)/(1 + a_ij)) with
/// a_ij = C₁ᵛ√N x_i x_j + C₂ᵛ N x_i²x_j², so V(1) ≡ V bitwise and V(0) has
/// per-entry variance 1/N; H(t) adds the deterministic spike terms.
pub fn build_interpolants(
    sample: &SpikedSample,
    t: &Transform,
    moments: &TransformMoments,
    tpoint: f64,
) -> Result<(SymMatrix, SymMatrix)> {
    assert!((0.0..=1.0).contains(&tpoint), "tpoint must lie in [0, 1]");
    let v = build_v(sample, t, moments);
    let n = sample.n as f64;
    let s = n.sqrt();
    let (c1, c2) = moments.variance_coeffs(sample.lambda);
    let sl_d1 = sample.lambda.sqrt() * moments.e_d1;
    let curv = 0.5 * sample.lambda * moments.e_d2 * s;
    let x = &sample.x;

    let mut vt = v.clone();
    let mut bad = None;
    vt.map_upper(|i, j, vij| {
        let xij = x[i] * x[j];
        let a = c1 * s * xij + c2 * n * xij * xij;
        let denom = 1.0 + a;
        if denom <= 1e-12 {
            bad.get_or_insert((i, j));
            return vij;
        }
        ((1.0 + tpoint * a) / denom).sqrt() * vij
    });
    if let Some((i, j)) = bad {
        return Err(Error::VanishingVariance(i, j));
    }

    let mut ht = vt.clone();
    ht.map_upper(|i, j, vij| {
        let xij = x[i] * x[j];
        vij + sl_d1 * xij + curv * xij * xij
    });
    Ok((vt, ht))
}

/// The rank-2 spike A = √λe·xxᵀ + (λ/2)E[f'']√N·x²(x²)ᵀ together with its
/// two nontrivial eigenvalues from the 2×2 Gram closed form
/// (‖u‖² + ‖v‖² ± √((‖u‖²−‖v‖²)² + 4⟨u,v⟩²))/2, carried with signs so a
/// negative E[f''] is handled by the same discriminant.
pub fn rank2_spike(
    x: &[f64],
    lambda: f64,
    moments: &TransformMoments,
) -> (SymMatrix, f64, f64) {
    let n = x.len();
    let alpha = lambda.sqrt() * moments.e_d1;
    let beta = 0.5 * lambda * moments.e_d2 * (n as f64).sqrt();
    let a = SymMatrix::from_fn(n, |i, j| {
        let xij = x[i] * x[j];
        alpha * xij + beta * xij * xij
    });
    let s: f64 = x.iter().map(|v| v.powi(4)).sum(); // ‖x²‖²
    let tt: f64 = x.iter().map(|v| v.powi(3)).sum(); // ⟨x, x²⟩
    let tr = alpha + beta * s;
    let disc = ((alpha - beta * s).powi(2) + 4.0 * alpha * beta * tt * tt).max(0.0);
    let root = disc.sqrt();
    let theta1 = 0.5 * (tr + root);
    let theta2 = 0.5 * (tr - root);
    (a, theta1, theta2)
}
