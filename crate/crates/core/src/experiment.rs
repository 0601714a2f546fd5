//! Deterministic parallel Monte Carlo engine: per-trial counter-based
//! seeding, regime-aware rescaling of the largest eigenvalue,
//! goodness-of-fit and rigidity reports, and CSV/JSON persistence.

use crate::ensemble::{self, PriorKind, SpikePrior};
use crate::noise::NoiseModel;
use crate::spectra::{self, EigOptions, MethodChoice};
use crate::theory::{self, ReferenceLaw, Regime, TheoryPrediction};
use crate::transform::{Transform, TransformMoments};
use crate::{Error, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

/// SplitMix64 mix of (master seed, trial index): scheduler-independent
/// per-trial generator seeds.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSpec {
    StandardGaussian,
    GaussianRademacherMixture {
        #[serde(default)]
        a: Option<f64>,
        #[serde(default)]
        b: Option<f64>,
    },
    CustomDensity { name: String },
}

impl NoiseSpec {
    pub fn build(&self) -> Result<NoiseModel> {
        match self {
            NoiseSpec::StandardGaussian => Ok(NoiseModel::standard_gaussian()),
            NoiseSpec::GaussianRademacherMixture { a, b } => match (a, b) {
                (None, None) => Ok(NoiseModel::mixture()),
                (Some(a), Some(b)) => NoiseModel::mixture_with(*a, *b),
                _ => Err(Error::Config(
                    "mixture needs both `a` and `b` or neither".into(),
                )),
            },
            NoiseSpec::CustomDensity { name } => NoiseModel::custom_preset(name),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TransformSpec {
    Identity,
    Polynomial {
        coeffs: Vec<f64>,
        #[serde(default = "default_true")]
        normalize: bool,
    },
    OptimalScore,
}

impl TransformSpec {
    pub fn build(&self, model: &NoiseModel) -> Result<Transform> {
        match self {
            TransformSpec::Identity => Ok(Transform::identity()),
            TransformSpec::Polynomial { coeffs, normalize } => {
                let t = Transform::make_polynomial(coeffs)?;
                if *normalize {
                    t.normalize(model)
                } else if t.is_normalized() {
                    Ok(t)
                } else {
                    Err(Error::Config(
                        "polynomial transform with normalize=false must already satisfy the \
                         normalization convention; use normalize=true"
                            .into(),
                    ))
                }
            }
            TransformSpec::OptimalScore => Transform::make_optimal(model),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorSpec {
    IidRademacher,
    Spherical,
    IidCustom {
        name: String,
        #[serde(default = "default_true")]
        post_normalize: bool,
    },
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::IidRademacher
    }
}

impl PriorSpec {
    pub fn build(&self) -> Result<SpikePrior> {
        match self {
            PriorSpec::IidRademacher => Ok(SpikePrior::rademacher()),
            PriorSpec::Spherical => Ok(SpikePrior::spherical()),
            PriorSpec::IidCustom {
                name,
                post_normalize,
            } => Ok(SpikePrior {
                kind: PriorKind::IidModel(NoiseModel::custom_preset(name)?),
                post_normalize: *post_normalize,
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeSpec {
    #[default]
    Auto,
    Supercritical,
    Subcritical,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_format() -> String {
    "csv".into()
}

fn default_margin() -> f64 {
    theory::DEFAULT_MARGIN
}

fn default_zero_tol() -> f64 {
    theory::DEFAULT_ZERO_TOL
}

fn default_workers() -> usize {
    1
}

/// Reproducible experiment description; the TOML/JSON config file mirrors
/// these fields verbatim.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub trials: usize,
    /// Fixed SNR λ (unscaled regimes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Base SNR λ₀ of the scaled regime λ = λ₀√N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    #[serde(default)]
    pub scaled: bool,
    pub noise: NoiseSpec,
    pub transform: TransformSpec,
    #[serde(default)]
    pub prior: PriorSpec,
    #[serde(default)]
    pub regime: RegimeSpec,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_zero_tol")]
    pub moment_zero_tol: f64,
    #[serde(default)]
    pub compute_mu2: bool,
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config("n must be ≥ 2".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be ≥ 1".into()));
        }
        match (self.scaled, self.lambda, self.lambda0) {
            (false, Some(_), None) => Ok(()),
            (true, None, Some(_)) => Ok(()),
            (false, None, None) => Err(Error::Config("missing `lambda`".into())),
            (true, _, None) => Err(Error::Config("scaled mode requires `lambda0`".into())),
            _ => Err(Error::Config(
                "give `lambda` exactly when unscaled, `lambda0` exactly when scaled".into(),
            )),
        }
    }
}

/// One trial's eigenvalue outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub mu1: f64,
    pub mu2: Option<f64>,
    pub rescaled: f64,
    pub seed: u64,
    pub wall_ms: f64,
}

impl TrialRecord {
    /// Equality over everything except wall time.
    pub fn same_values(&self, other: &Self) -> bool {
        self.trial == other.trial
            && self.mu1.to_bits() == other.mu1.to_bits()
            && self.mu2.map(f64::to_bits) == other.mu2.map(f64::to_bits)
            && self.rescaled.to_bits() == other.rescaled.to_bits()
            && self.seed == other.seed
    }
}

/// Fully resolved model objects for one experiment.
pub struct ResolvedExperiment {
    pub model: NoiseModel,
    pub transform: Transform,
    pub prior: SpikePrior,
    pub moments: TransformMoments,
    /// λ used when sampling (λ₀√N in scaled mode).
    pub sampling_lambda: f64,
    /// None means near-critical: run, summarize, no reference law.
    pub prediction: Option<TheoryPrediction>,
}

pub fn resolve(config: &ExperimentConfig) -> Result<ResolvedExperiment> {
    config.validate()?;
    let model = config.noise.build()?;
    model.validate()?;
    let transform = config.transform.build(&model)?;
    let prior = config.prior.build()?;
    let moments = TransformMoments::compute(&transform, &model)?;

    let (sampling_lambda, prediction) = if config.scaled {
        let lambda0 = config.lambda0.expect("validated");
        let w4 = prior.fourth_moment()?;
        let p = theory::predict_scaled_from_moments(
            lambda0,
            &moments,
            w4,
            config.margin,
            config.moment_zero_tol,
        )?;
        (lambda0 * (config.n as f64).sqrt(), Some(p))
    } else {
        let lambda = config.lambda.expect("validated");
        let p = match config.regime {
            RegimeSpec::Auto => match theory::predict_from_moments(lambda, &moments, config.margin)
            {
                Ok(p) => Some(p),
                Err(Error::NearCritical { .. }) => None,
                Err(e) => return Err(e),
            },
            RegimeSpec::Supercritical => {
                let p = theory::predict_from_moments(lambda, &moments, 0.0)?;
                if p.regime != Regime::Supercritical {
                    return Err(Error::Config(format!(
                        "forced supercritical but λe = {} ≤ 1",
                        p.lambda_e
                    )));
                }
                Some(p)
            }
            RegimeSpec::Subcritical => {
                let lambda_e = moments.effective_snr(lambda);
                if lambda_e >= 1.0 {
                    return Err(Error::Config(format!(
                        "forced subcritical but λe = {lambda_e} ≥ 1"
                    )));
                }
                Some(TheoryPrediction {
                    regime: Regime::Subcritical,
                    lambda_e,
                    location: 2.0,
                    scale_exponent: -2.0 / 3.0,
                    reference: ReferenceLaw::TracyWidomGoe,
                    shift: 0.0,
                })
            }
        };
        (lambda, p)
    };

    Ok(ResolvedExperiment {
        model,
        transform,
        prior,
        moments,
        sampling_lambda,
        prediction,
    })
}

/// Rescale μ₁ by the regime convention.
pub fn rescale_mu1(mu1: f64, n: usize, prediction: Option<&TheoryPrediction>) -> f64 {
    match prediction {
        Some(p) => (n as f64).powf(-p.scale_exponent) * (mu1 - p.location),
        None => mu1,
    }
}

/// Invert the rescaling back to μ₁.
pub fn unrescale(rescaled: f64, n: usize, prediction: Option<&TheoryPrediction>) -> f64 {
    match prediction {
        Some(p) => p.location + rescaled * (n as f64).powf(p.scale_exponent),
        None => rescaled,
    }
}

pub struct RunResult {
    pub records: Vec<TrialRecord>,
    pub failures: Vec<(usize, String)>,
    pub prediction: Option<TheoryPrediction>,
}

/// Run the Monte Carlo experiment. The record list is bit-reproducible for
/// a fixed master seed, independent of `workers` and scheduling.
pub fn run(config: &ExperimentConfig) -> Result<RunResult> {
    let resolved = resolve(config)?;
    run_resolved(config, &resolved)
}

pub fn run_resolved(config: &ExperimentConfig, resolved: &ResolvedExperiment) -> Result<RunResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    let outcomes: Vec<std::result::Result<TrialRecord, (usize, String)>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|i| run_trial(config, resolved, i).map_err(|e| (i, e.to_string())))
            .collect()
    });

    let mut records = Vec::with_capacity(config.trials);
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    if failures.len() * 100 > config.trials {
        return Err(Error::Solver(format!(
            "{} of {} trials failed (> 1%): first failure: {}",
            failures.len(),
            config.trials,
            failures[0].1
        )));
    }
    records.sort_by_key(|r| r.trial);
    Ok(RunResult {
        records,
        failures,
        prediction: resolved.prediction,
    })
}

fn run_trial(
    config: &ExperimentConfig,
    resolved: &ResolvedExperiment,
    index: usize,
) -> Result<TrialRecord> {
    let start = Instant::now();
    let seed = mix_seed(config.master_seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = ensemble::sample_spike(&resolved.prior, config.n, &mut rng)?;
    let w = ensemble::sample_wigner(&resolved.model, config.n, &mut rng)?;
    let m = ensemble::assemble(&w, &x, resolved.sampling_lambda);
    drop(w);
    let mt = ensemble::transform_entrywise(&m, &resolved.transform);
    drop(m);

    let k = if config.compute_mu2 { 2 } else { 1 };
    let opts = EigOptions {
        k,
        method: MethodChoice::Iterative,
        max_iters: 384,
        seed: rng.next_u64(),
    };
    let res = spectra::top_eigenvalues_with(&mt, &opts)?;
    let mu1 = res.eigenvalues[0];
    let mu2 = res.eigenvalues.get(1).copied();
    let rescaled = rescale_mu1(mu1, config.n, resolved.prediction.as_ref());
    Ok(TrialRecord {
        trial: index,
        mu1,
        mu2,
        rescaled,
        seed,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Kolmogorov–Smirnov statistic sup_x |F_emp − F_ref| via the
/// sorted-sample formula.
pub fn ks_statistic(samples: &[f64], reference_cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::Config("KS needs at least 2 samples".into()));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::Config("NaN in KS samples".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = reference_cdf(x);
        d = d.max(f - i as f64 / n);
        d = d.max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Fraction of trials with |μ₁ − location| > c·N^(scale_exponent + ε).
pub fn rigidity_report(
    records: &[TrialRecord],
    prediction: &TheoryPrediction,
    n: usize,
    epsilon: f64,
    c: f64,
) -> f64 {
    let threshold = c * (n as f64).powf(prediction.scale_exponent + epsilon);
    let exceed = records
        .iter()
        .filter(|r| (r.mu1 - prediction.location).abs() > threshold)
        .count();
    exceed as f64 / records.len().max(1) as f64
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HistBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
    pub ref_density: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisSummary {
    pub n: usize,
    pub regime: String,
    pub location: Option<f64>,
    pub reference: Option<ReferenceLaw>,
    pub mean: f64,
    pub var: f64,
    pub skew: f64,
    pub ks: Option<f64>,
    pub exceedance: Option<f64>,
    pub histogram: Vec<HistBin>,
}

fn regime_label(prediction: Option<&TheoryPrediction>) -> String {
    match prediction {
        None => "no-theory".into(),
        Some(p) => match p.regime {
            Regime::Supercritical => "supercritical".into(),
            Regime::Subcritical => "subcritical".into(),
            Regime::ScaledK2 => "scaled-k2".into(),
        },
    }
}

/// Moments, Freedman–Diaconis histogram, KS against the prediction's
/// reference law, and the default rigidity exceedance (ε = 0.2, c = 1).
pub fn summarize(
    records: &[TrialRecord],
    prediction: Option<&TheoryPrediction>,
    matrix_n: usize,
) -> Result<AnalysisSummary> {
    if records.is_empty() {
        return Err(Error::Config("cannot summarize an empty record list".into()));
    }
    let mut records = records.to_vec();
    records.sort_by_key(|r| r.trial);
    let xs: Vec<f64> = records.iter().map(|r| r.rescaled).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let sd = var.sqrt();
    let skew = if sd > 0.0 {
        xs.iter().map(|x| ((x - mean) / sd).powi(3)).sum::<f64>() / n
    } else {
        0.0
    };
    let ks = match prediction {
        Some(p) => Some(ks_statistic(&xs, |s| p.reference.cdf(s))?),
        None => None,
    };
    let exceedance = prediction.map(|p| rigidity_report(&records, p, matrix_n, 0.2, 1.0));
    let histogram = histogram(&xs, prediction);
    Ok(AnalysisSummary {
        n: records.len(),
        regime: regime_label(prediction),
        location: prediction.map(|p| p.location),
        reference: prediction.map(|p| p.reference),
        mean,
        var,
        skew,
        ks,
        exceedance,
        histogram,
    })
}

/// Freedman–Diaconis bins over the rescaled statistic.
fn histogram(xs: &[f64], prediction: Option<&TheoryPrediction>) -> Vec<HistBin> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    if hi <= lo {
        return vec![HistBin {
            left: lo,
            right: hi,
            count: n,
            ref_density: 0.0,
        }];
    }
    let q1 = sorted[n / 4];
    let q3 = sorted[(3 * n) / 4];
    let iqr = (q3 - q1).max(1e-12);
    let width = 2.0 * iqr / (n as f64).cbrt();
    let bins = (((hi - lo) / width).ceil() as usize).clamp(1, 400);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in &sorted {
        let mut b = ((x - lo) / width) as usize;
        if b >= bins {
            b = bins - 1;
        }
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let left = lo + width * i as f64;
            let right = left + width;
            let mid = 0.5 * (left + right);
            let ref_density = prediction.map(|p| p.reference.density(mid)).unwrap_or(0.0);
            HistBin {
                left,
                right,
                count,
                ref_density,
            }
        })
        .collect()
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Records CSV with header `trial,mu1,mu2,rescaled,seed,wall_ms`;
/// `canonical` zeroes the wall-time field so reruns compare byte-equal.
pub fn export_records_csv(
    records: &[TrialRecord],
    path: impl AsRef<Path>,
    canonical: bool,
) -> Result<()> {
    let mut out = String::from("trial,mu1,mu2,rescaled,seed,wall_ms\n");
    for r in records {
        let mu2 = r.mu2.map(fmt_f64).unwrap_or_default();
        let wall = if canonical { 0.0 } else { r.wall_ms };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.trial,
            fmt_f64(r.mu1),
            mu2,
            fmt_f64(r.rescaled),
            r.seed,
            fmt_f64(wall)
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn import_records_csv(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("trial,mu1,mu2,rescaled,seed,wall_ms") => {}
        other => {
            return Err(Error::Format(format!(
                "unexpected records header {other:?}"
            )))
        }
    }
    let mut records = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(Error::Format(format!("records row {} malformed", ln + 2)));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Format(e.to_string()));
        records.push(TrialRecord {
            trial: parts[0]
                .parse()
                .map_err(|e: std::num::ParseIntError| Error::Format(e.to_string()))?,
            mu1: parse(parts[1])?,
            mu2: if parts[2].is_empty() {
                None
            } else {
                Some(parse(parts[2])?)
            },
            rescaled: parse(parts[3])?,
            seed: parts[4]
                .parse()
                .map_err(|e: std::num::ParseIntError| Error::Format(e.to_string()))?,
            wall_ms: parse(parts[5])?,
        });
    }
    Ok(records)
}

/// Summary JSON with the fixed keys {mean, var, ks, n, regime, location,
/// reference}; keys serialize sorted, so output is deterministic.
pub fn summary_json(summary: &AnalysisSummary) -> String {
    let value = serde_json::json!({
        "mean": summary.mean,
        "var": summary.var,
        "ks": summary.ks,
        "n": summary.n,
        "regime": summary.regime,
        "location": summary.location,
        "reference": summary.reference,
    });
    serde_json::to_string_pretty(&value).expect("summary serializes")
}

pub fn export_summary_json(summary: &AnalysisSummary, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(summary_json(summary).as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Histogram CSV rows `bin_left,bin_right,count,ref_density`.
pub fn export_histogram_csv(summary: &AnalysisSummary, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("bin_left,bin_right,count,ref_density\n");
    for b in &summary.histogram {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(b.left),
            fmt_f64(b.right),
            b.count,
            fmt_f64(b.ref_density)
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            n: 48,
            trials: 24,
            lambda: Some(0.8),
            lambda0: None,
            scaled: false,
            noise: NoiseSpec::GaussianRademacherMixture { a: None, b: None },
            transform: TransformSpec::OptimalScore,
            prior: PriorSpec::IidRademacher,
            regime: RegimeSpec::Auto,
            margin: theory::DEFAULT_MARGIN,
            moment_zero_tol: theory::DEFAULT_ZERO_TOL,
            compute_mu2: false,
            master_seed: 12345,
            workers: 1,
            output: None,
        }
    }

    #[test]
    fn mix_seed_spreads_and_is_stable() {
        // fixed values pin the seeding scheme: changing it would silently
        // break reproducibility of recorded experiments
        assert_eq!(mix_seed(0, 0), mix_seed(0, 0));
        assert_ne!(mix_seed(0, 0), mix_seed(0, 1));
        assert_ne!(mix_seed(0, 0), mix_seed(1, 0));
        let mut seen = std::collections::HashSet::new();
        for master in 0..4u64 {
            for idx in 0..256u64 {
                seen.insert(mix_seed(master, idx));
            }
        }
        assert_eq!(seen.len(), 4 * 256);
    }

    #[test]
    fn run_is_deterministic_across_reruns_and_workers() {
        let cfg = small_config();
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert!(x.same_values(y));
        }
        let mut cfg4 = cfg.clone();
        cfg4.workers = 4;
        let c = run(&cfg4).unwrap();
        for (x, y) in a.records.iter().zip(&c.records) {
            assert!(x.same_values(y), "worker count changed trial {}", x.trial);
        }
    }

    #[test]
    fn rescaling_inverts() {
        let cfg = small_config();
        let out = run(&cfg).unwrap();
        let p = out.prediction;
        for r in &out.records {
            let back = unrescale(r.rescaled, cfg.n, p.as_ref());
            assert!((back - r.mu1).abs() < 1e-12);
        }
    }

    #[test]
    fn near_critical_runs_without_theory() {
        let mut cfg = small_config();
        // λe = 1 at λ = 1/F_h ≈ 0.2756
        cfg.lambda = Some(0.2756);
        let out = run(&cfg).unwrap();
        assert!(out.prediction.is_none());
        for r in &out.records {
            assert_eq!(r.rescaled.to_bits(), r.mu1.to_bits());
        }
        let s = summarize(&out.records, None, cfg.n).unwrap();
        assert_eq!(s.regime, "no-theory");
        assert!(s.ks.is_none() && s.location.is_none());
    }

    #[test]
    fn forced_regime_validation() {
        let mut cfg = small_config();
        cfg.lambda = Some(0.1);
        cfg.regime = RegimeSpec::Supercritical;
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        let mut cfg2 = small_config();
        cfg2.regime = RegimeSpec::Subcritical;
        assert!(matches!(run(&cfg2), Err(Error::Config(_))));
    }

    #[test]
    fn config_validation_rules() {
        let mut cfg = small_config();
        cfg.lambda = None;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.scaled = true;
        assert!(cfg.validate().is_err());
        cfg.lambda = None;
        cfg.lambda0 = Some(1.0);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = small_config();
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.n, back.n);
        assert_eq!(cfg.master_seed, back.master_seed);
        assert_eq!(format!("{:?}", cfg.transform), format!("{:?}", back.transform));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let text = r#"
n = 64
trials = 4
lambda = 0.8
master_seed = 1
bogus_key = true
[noise]
type = "standard-gaussian"
[transform]
type = "identity"
"#;
        assert!(matches!(
            ExperimentConfig::from_toml(text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ks_exact_quantile_samples() {
        // samples at (i − 0.5)/n under the uniform CDF give D = 0.5/n
        let n = 40;
        let samples: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-14);
    }

    #[test]
    fn ks_degenerate_constant_samples() {
        let samples = vec![0.3; 17];
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.7).abs() < 1e-14);
    }

    #[test]
    fn ks_rejects_nan() {
        assert!(ks_statistic(&[0.1, f64::NAN], |x| x).is_err());
    }

    #[test]
    fn ks_critical_value_rate() {
        // D < 1.63/√n at ≈ 99% of seeds (Kolmogorov asymptotics)
        let n = 5000;
        let crit = 1.63 / (n as f64).sqrt();
        let mut violations = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..n)
                .map(|_| {
                    let u: f64 = rand_distr::StandardNormal.sample(&mut rng);
                    u
                })
                .collect();
            let d = ks_statistic(&xs, |x| theory::gaussian_cdf(x, 0.0, 1.0)).unwrap();
            if d >= crit {
                violations += 1;
            }
        }
        assert!(violations <= 4, "{violations} violations out of 100");
    }

    use rand_distr::Distribution;

    #[test]
    fn ks_shrinks_with_sample_size() {
        let median = |n: usize| -> f64 {
            let mut ds: Vec<f64> = (0..20)
                .map(|seed| {
                    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
                    let xs: Vec<f64> = (0..n)
                        .map(|_| rand_distr::StandardNormal.sample(&mut rng))
                        .collect();
                    ks_statistic(&xs, |x| theory::gaussian_cdf(x, 0.0, 1.0)).unwrap()
                })
                .collect();
            ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ds[10]
        };
        assert!(median(4000) < median(250));
    }

    #[test]
    fn rigidity_monotonic_in_c_and_epsilon() {
        let p = TheoryPrediction {
            regime: Regime::Supercritical,
            lambda_e: 2.0,
            location: 2.0,
            scale_exponent: -0.5,
            reference: ReferenceLaw::Gaussian { mean: 0.0, var: 1.0 },
            shift: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let records: Vec<TrialRecord> = (0..500)
            .map(|i| {
                let mu1 = 2.0 + 0.2 * (rng.random::<f64>() - 0.5);
                TrialRecord {
                    trial: i,
                    mu1,
                    mu2: None,
                    rescaled: 0.0,
                    seed: i as u64,
                    wall_ms: 0.0,
                }
            })
            .collect();
        let n = 256;
        let mut prev = 1.0;
        for c in [0.2, 0.5, 1.0, 2.0, 8.0] {
            let f = rigidity_report(&records, &p, n, 0.2, c);
            assert!(f <= prev + 1e-12);
            prev = f;
        }
        let mut prev = 1.0;
        for eps in [0.0, 0.1, 0.2, 0.4] {
            let f = rigidity_report(&records, &p, n, eps, 1.0);
            assert!(f <= prev + 1e-12);
            prev = f;
        }
        // c → ∞ drives the fraction to zero
        assert_eq!(rigidity_report(&records, &p, n, 0.0, 1e9), 0.0);
    }

    #[test]
    fn summarize_gaussian_records() {
        // 5000 standard-normal "rescaled" values against the N(0,1) law
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let p = TheoryPrediction {
            regime: Regime::Supercritical,
            lambda_e: 2.0,
            location: 2.2,
            scale_exponent: -0.5,
            reference: ReferenceLaw::Gaussian { mean: 0.0, var: 1.0 },
            shift: 0.0,
        };
        let records: Vec<TrialRecord> = (0..5000)
            .map(|i| {
                let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
                TrialRecord {
                    trial: i,
                    mu1: 2.2 + z / (1024f64).sqrt(),
                    mu2: None,
                    rescaled: z,
                    seed: i as u64,
                    wall_ms: 1.0,
                }
            })
            .collect();
        let s = summarize(&records, Some(&p), 1024).unwrap();
        assert!(s.mean.abs() < 0.05, "mean {}", s.mean);
        assert!((s.var - 1.0).abs() < 0.07, "var {}", s.var);
        assert!(s.ks.unwrap() < 0.03);
        assert_eq!(s.histogram.iter().map(|b| b.count).sum::<usize>(), 5000);
        assert_eq!(s.regime, "supercritical");
    }

    #[test]
    fn records_csv_round_trip() {
        let cfg = small_config();
        let out = run(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        export_records_csv(&out.records, &path, false).unwrap();
        let back = import_records_csv(&path).unwrap();
        assert_eq!(back.len(), out.records.len());
        for (a, b) in out.records.iter().zip(&back) {
            assert!(a.same_values(b));
            assert_eq!(a.wall_ms.to_bits(), b.wall_ms.to_bits());
        }
    }

    #[test]
    fn canonical_export_is_stable_across_runs() {
        let cfg = small_config();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        export_records_csv(&run(&cfg).unwrap().records, &p1, true).unwrap();
        export_records_csv(&run(&cfg).unwrap().records, &p2, true).unwrap();
        assert_eq!(
            std::fs::read(&p1).unwrap(),
            std::fs::read(&p2).unwrap(),
            "canonical record files must be byte-identical"
        );
    }

    #[test]
    fn summary_json_has_fixed_keys() {
        let cfg = small_config();
        let out = run(&cfg).unwrap();
        let s = summarize(&out.records, out.prediction.as_ref(), cfg.n).unwrap();
        let text = summary_json(&s);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(|k| k.as_str()).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            vec!["ks", "location", "mean", "n", "reference", "regime", "var"]
        );
    }
}
