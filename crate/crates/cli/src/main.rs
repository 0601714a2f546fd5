//! Command-line front end: closed-form predictions, Monte Carlo runs,
//! analysis of stored results, paper-style figure presets, validation
//! suites, and Tracy–Widom table maintenance.
//!
//! Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 validation
//! failure.

use clap::{Args, Parser, Subcommand};
use spikelab::ensemble;
use spikelab::experiment::{self, ExperimentConfig};
use spikelab::spectra;
use spikelab::theory::{self, TwGenOptions};
use spikelab::transform::TransformMoments;
use spikelab::{Error, Tw1Table};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "spikelab",
    version,
    about = "Spiked Wigner ensembles under entrywise transforms: predictions and Monte Carlo experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Experiment config file (.toml or .json).
    #[arg(long)]
    config: PathBuf,
    /// Override config keys, e.g. --set n=512 --set transform.coeffs=[0,1].
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker count (flag > SPIKELAB_WORKERS env > config).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form prediction for a config as JSON.
    Predict(ConfigArgs),
    /// Run the Monte Carlo experiment and write records/summary/histogram.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory (overrides the config's output section).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Zero wall-time fields so output files are byte-reproducible.
        #[arg(long)]
        canonical: bool,
    },
    /// Summarize an existing records file under a config's prediction.
    Analyze {
        /// Records CSV produced by `simulate`.
        #[arg(long)]
        records: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a built-in preset (2a, 2b, 3a, 3b). Presets refuse overrides.
    Figure {
        /// Preset name: 2a | 2b | 3a | 3b.
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Zero wall-time fields so output files are byte-reproducible.
        #[arg(long)]
        canonical: bool,
        /// Print the preset's effective config and exit without running.
        #[arg(long)]
        print_config: bool,
    },
    /// Run a validation suite: rank2 | qve | local-law | approx |
    /// interpolation | matrix-io | all.
    Validate {
        suite: String,
        /// Dimension for the dense-oracle checks.
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Sizes for the scaling tables.
        #[arg(long, default_value = "256,512,1024")]
        sizes: String,
        /// Scratch directory for the matrix-io check.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tracy–Widom table maintenance.
    TwTable {
        /// regen | check
        action: String,
        /// Output CSV path for regen.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            classify(&e)
        }
    };
    std::process::exit(code);
}

fn classify(e: &anyhow::Error) -> i32 {
    match e.downcast_ref::<Error>() {
        Some(Error::Config(_)) | Some(Error::Format(_)) | Some(Error::Io(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Predict(args) => {
            let config = load_config(&args)?;
            predict_cmd(&config)
        }
        Command::Simulate {
            config,
            out,
            canonical,
        } => {
            let cfg = load_config(&config)?;
            let dir = output_dir(&cfg, out.as_deref())?;
            simulate_cmd(&cfg, &dir, canonical)
        }
        Command::Analyze {
            records,
            config,
            out,
        } => {
            let cfg = load_config(&config)?;
            analyze_cmd(&cfg, &records, &out)
        }
        Command::Figure {
            name,
            out,
            workers,
            canonical,
            print_config,
        } => figure_cmd(&name, &out, workers, canonical, print_config),
        Command::Validate {
            suite,
            n,
            sizes,
            out,
        } => {
            let sizes: Vec<usize> = sizes
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|e| Error::Config(format!("bad --sizes: {e}")))?;
            validate_cmd(&suite, n, &sizes, out.as_deref())
        }
        Command::TwTable { action, out } => tw_table_cmd(&action, out.as_deref()),
    }
}

/// Load a TOML or JSON config, apply --set overrides and flag overrides.
fn load_config(args: &ConfigArgs) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    let is_json = args
        .config
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    let mut value: serde_json::Value = if is_json {
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
    } else {
        let tv: toml::Value = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        serde_json::to_value(tv).map_err(|e| Error::Config(e.to_string()))?
    };

    for ov in &args.overrides {
        let (key, raw) = ov
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set needs KEY=VALUE, got `{ov}`")))?;
        let parsed: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        set_path(&mut value, key, parsed)?;
    }

    let mut config: ExperimentConfig =
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    } else if let Ok(w) = std::env::var("SPIKELAB_WORKERS") {
        config.workers = w
            .parse()
            .map_err(|e| Error::Config(format!("SPIKELAB_WORKERS: {e}")))?;
    }
    config.validate()?;
    Ok(config)
}

fn set_path(
    root: &mut serde_json::Value,
    path: &str,
    new: serde_json::Value,
) -> anyhow::Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            let obj = cur
                .as_object_mut()
                .ok_or_else(|| Error::Config(format!("--set path `{path}` not an object")))?;
            obj.insert(part.to_string(), new);
            return Ok(());
        }
        cur = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("--set path `{path}` not an object")))?
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    Ok(())
}

fn output_dir(config: &ExperimentConfig, flag: Option<&Path>) -> anyhow::Result<PathBuf> {
    let dir = match flag {
        Some(d) => d.to_path_buf(),
        None => match &config.output {
            Some(o) => PathBuf::from(&o.dir),
            None => {
                return Err(
                    Error::Config("no output directory: give --out or [output]".into()).into(),
                )
            }
        },
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn predict_cmd(config: &ExperimentConfig) -> anyhow::Result<i32> {
    let resolved = experiment::resolve(config)?;
    let prediction = resolved.prediction.ok_or(Error::NearCritical {
        lambda_e: resolved
            .moments
            .effective_snr(config.lambda.unwrap_or_default()),
        margin: config.margin,
    })?;
    let threshold = if resolved.moments.e_d1.abs() > config.moment_zero_tol {
        Some(1.0 / (resolved.moments.e_d1 * resolved.moments.e_d1))
    } else {
        None
    };
    let out = serde_json::json!({
        "lambda": config.lambda,
        "lambda0": config.lambda0,
        "lambda_e": prediction.lambda_e,
        "regime": prediction.regime,
        "location": prediction.location,
        "scale_exponent": prediction.scale_exponent,
        "reference": prediction.reference,
        "shift": prediction.shift,
        "detection_threshold": threshold,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(0)
}

fn simulate_cmd(config: &ExperimentConfig, dir: &Path, canonical: bool) -> anyhow::Result<i32> {
    std::fs::write(dir.join("effective_config.toml"), config.to_toml())?;
    let result = experiment::run(config)?;
    experiment::export_records_csv(&result.records, dir.join("records.csv"), canonical)?;
    let summary = experiment::summarize(&result.records, result.prediction.as_ref(), config.n)?;
    experiment::export_summary_json(&summary, dir.join("summary.json"))?;
    experiment::export_histogram_csv(&summary, dir.join("histogram.csv"))?;
    if !result.failures.is_empty() {
        eprintln!(
            "{} trial(s) failed and were recorded",
            result.failures.len()
        );
        let mut text = String::from("trial,error\n");
        for (i, msg) in &result.failures {
            text.push_str(&format!("{i},{msg}\n"));
        }
        std::fs::write(dir.join("failures.csv"), text)?;
    }
    println!("{}", experiment::summary_json(&summary));
    println!("wrote records/summary/histogram to {}", dir.display());
    Ok(0)
}

fn analyze_cmd(config: &ExperimentConfig, records: &Path, out: &Path) -> anyhow::Result<i32> {
    std::fs::create_dir_all(out)?;
    let resolved = experiment::resolve(config)?;
    let records = experiment::import_records_csv(records)?;
    let summary = experiment::summarize(&records, resolved.prediction.as_ref(), config.n)?;
    std::fs::write(out.join("effective_config.toml"), config.to_toml())?;
    experiment::export_summary_json(&summary, out.join("summary.json"))?;
    experiment::export_histogram_csv(&summary, out.join("histogram.csv"))?;
    println!("{}", experiment::summary_json(&summary));
    Ok(0)
}

/// The built-in experiment presets (N = 1024, 5000 trials).
fn figure_preset(name: &str) -> anyhow::Result<ExperimentConfig> {
    use spikelab::experiment::{NoiseSpec, PriorSpec, RegimeSpec, TransformSpec};
    let (noise, transform, lambda) = match name {
        "2a" => (
            NoiseSpec::GaussianRademacherMixture { a: None, b: None },
            TransformSpec::OptimalScore,
            0.8,
        ),
        "2b" => (
            NoiseSpec::GaussianRademacherMixture { a: None, b: None },
            TransformSpec::OptimalScore,
            0.1,
        ),
        "3a" => (
            NoiseSpec::StandardGaussian,
            TransformSpec::Polynomial {
                coeffs: vec![-1.0, 3.0, 1.0],
                normalize: true,
            },
            2.5,
        ),
        "3b" => (
            NoiseSpec::StandardGaussian,
            TransformSpec::Polynomial {
                coeffs: vec![-1.0, 3.0, 1.0],
                normalize: true,
            },
            0.1,
        ),
        other => {
            return Err(Error::Config(format!(
                "unknown figure preset `{other}` (expected 2a, 2b, 3a, 3b)"
            ))
            .into())
        }
    };
    Ok(ExperimentConfig {
        n: 1024,
        trials: 5000,
        lambda: Some(lambda),
        lambda0: None,
        scaled: false,
        noise,
        transform,
        prior: PriorSpec::IidRademacher,
        regime: RegimeSpec::Auto,
        margin: theory::DEFAULT_MARGIN,
        moment_zero_tol: theory::DEFAULT_ZERO_TOL,
        compute_mu2: false,
        master_seed: 20_240_501,
        workers: 1,
        output: None,
    })
}

fn figure_cmd(
    name: &str,
    out: &Path,
    workers: Option<usize>,
    canonical: bool,
    print_config: bool,
) -> anyhow::Result<i32> {
    let mut config = figure_preset(name)?;
    if let Some(w) = workers {
        config.workers = w;
    } else if let Ok(w) = std::env::var("SPIKELAB_WORKERS") {
        config.workers = w
            .parse()
            .map_err(|e| Error::Config(format!("SPIKELAB_WORKERS: {e}")))?;
    }
    if print_config {
        print!("{}", config.to_toml());
        return Ok(0);
    }
    std::fs::create_dir_all(out)?;
    simulate_cmd(&config, out, canonical)
}

struct Check {
    failures: usize,
}

impl Check {
    fn new() -> Self {
        Self { failures: 0 }
    }

    fn report(&mut self, label: &str, pass: bool, detail: String) {
        println!("{}: {label} — {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

fn validate_cmd(suite: &str, n: usize, sizes: &[usize], out: Option<&Path>) -> anyhow::Result<i32> {
    let mut check = Check::new();
    let all = suite == "all";
    let mut known = false;
    if all || suite == "rank2" {
        known = true;
        validate_rank2(&mut check, n)?;
    }
    if all || suite == "qve" {
        known = true;
        validate_qve(&mut check)?;
    }
    if all || suite == "local-law" {
        known = true;
        validate_local_law(&mut check, sizes)?;
    }
    if all || suite == "approx" {
        known = true;
        validate_approx(&mut check, sizes)?;
    }
    if all || suite == "interpolation" {
        known = true;
        validate_interpolation(&mut check)?;
    }
    if all || suite == "matrix-io" {
        known = true;
        validate_matrix_io(&mut check, out)?;
    }
    if !known {
        return Err(Error::Config(format!("unknown validate suite `{suite}`")).into());
    }
    Ok(if check.failures == 0 { 0 } else { 3 })
}

fn mixture_setup() -> anyhow::Result<(spikelab::NoiseModel, spikelab::Transform, TransformMoments)>
{
    let model = spikelab::NoiseModel::mixture();
    let t = spikelab::Transform::make_optimal(&model)?;
    let m = TransformMoments::compute(&t, &model)?;
    Ok((model, t, m))
}

fn quadratic_setup() -> anyhow::Result<(spikelab::NoiseModel, spikelab::Transform, TransformMoments)>
{
    let model = spikelab::NoiseModel::standard_gaussian();
    let t = spikelab::Transform::make_polynomial(&[-1.0, 3.0, 1.0])?.normalize(&model)?;
    let m = TransformMoments::compute(&t, &model)?;
    Ok((model, t, m))
}

fn draw(
    model: &spikelab::NoiseModel,
    n: usize,
    lambda: f64,
    seed: u64,
) -> anyhow::Result<ensemble::SpikedSample> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let prior = ensemble::SpikePrior::rademacher();
    let x = ensemble::sample_spike(&prior, n, &mut rng)?;
    let w = ensemble::sample_wigner(model, n, &mut rng)?;
    Ok(ensemble::SpikedSample {
        n,
        w,
        x,
        lambda,
        seed,
    })
}

fn validate_rank2(check: &mut Check, n: usize) -> anyhow::Result<()> {
    use rand::{Rng, SeedableRng};
    let g = spikelab::NoiseModel::standard_gaussian();
    let pool = [
        spikelab::Transform::make_polynomial(&[-1.0, 3.0, 1.0])?.normalize(&g)?,
        spikelab::Transform::make_polynomial(&[1.0, 3.0, -1.0])?.normalize(&g)?,
        spikelab::Transform::make_polynomial(&[-1.0, 0.0, 1.0])?.normalize(&g)?,
        spikelab::Transform::identity(),
    ];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2718);
    let mut max_dev = 0.0f64;
    for rep in 0..100 {
        let t = &pool[rep % pool.len()];
        let moments = TransformMoments::compute(t, &g)?;
        let prior = ensemble::SpikePrior::spherical();
        let x = ensemble::sample_spike(&prior, n, &mut rng)?;
        let lambda = rng.random_range(0.2..4.0);
        let (a, th1, th2) = ensemble::rank2_spike(&x, lambda, &moments);
        let eig = a.to_dense().symmetric_eigen();
        let mut evs: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        evs.sort_by(|p, q| q.partial_cmp(p).unwrap());
        let (w1, w2) = if th2 >= 0.0 {
            (evs[0], evs[1])
        } else {
            (evs[0], evs[evs.len() - 1])
        };
        max_dev = max_dev.max((th1 - w1).abs()).max((th2 - w2).abs());
    }
    check.report(
        "rank2 closed form vs dense oracle",
        max_dev < 1e-10,
        format!("max deviation {max_dev:.3e} over 100 draws at N={n}"),
    );
    Ok(())
}

fn validate_qve(check: &mut Check) -> anyhow::Result<()> {
    use num_complex::Complex64;
    let n = 256;
    let flat = spikelab::SymMatrix::from_fn(n, |_, _| 1.0 / n as f64);
    let z = Complex64::new(0.4, 0.05);
    let m = spectra::solve_qve(&flat, z)?;
    let want = spectra::msc(z);
    let dev = m.iter().map(|v| (v - want).norm()).fold(0.0f64, f64::max);
    check.report(
        "QVE flat profile returns m_sc",
        dev < 1e-12,
        format!("max |m_i − m_sc| = {dev:.3e}"),
    );

    let (model, _t, moments) = mixture_setup()?;
    let sample = draw(&model, n, 0.8, 99)?;
    let profile = spectra::variance_profile(&sample.x, sample.lambda, &moments, 1.0);
    let le = moments.effective_snr(0.8);
    let loc = le.sqrt() + 1.0 / le.sqrt();
    let z = Complex64::new(loc, (n as f64).powf(-0.5 - 0.01));
    match spectra::solve_qve(&profile, z) {
        Ok(m) => {
            let msc = spectra::msc(z);
            let dev = m.iter().map(|v| (v - msc).norm()).fold(0.0f64, f64::max);
            check.report(
                "QVE V(1) profile solves within tolerance",
                true,
                format!("max |m_i − m_sc| = {dev:.3e} at N={n}"),
            );
        }
        Err(e) => check.report(
            "QVE V(1) profile solves within tolerance",
            false,
            e.to_string(),
        ),
    }
    Ok(())
}

fn validate_local_law(check: &mut Check, sizes: &[usize]) -> anyhow::Result<()> {
    use num_complex::Complex64;
    let (model, t, moments) = mixture_setup()?;
    let draws = 3usize;
    println!("regime,n,eta,median_diag_dev,median_offdiag");
    let mut sup = Vec::new();
    let mut sub = Vec::new();
    for &n in sizes {
        // supercritical window around the outlier location
        let le = moments.effective_snr(0.8);
        let loc = le.sqrt() + 1.0 / le.sqrt();
        let eta = (n as f64).powf(-0.5 - 0.01);
        let mut ds = Vec::new();
        let mut os = Vec::new();
        for rep in 0..draws {
            let sample = draw(&model, n, 0.8, 7 + n as u64 + 1000 * rep as u64)?;
            let h = ensemble::build_h(&sample, &t, &moments);
            let (d, o) = spectra::local_law_deviation(&h, Complex64::new(loc, eta))?;
            ds.push(d);
            os.push(o);
        }
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        os.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!(
            "supercritical,{n},{eta:.6e},{:.6e},{:.6e}",
            ds[draws / 2],
            os[draws / 2]
        );
        sup.push(ds[draws / 2]);
        // subcritical window at the spectral edge
        let eta = (n as f64).powf(-2.0 / 3.0 - 0.01);
        let mut ds = Vec::new();
        let mut os = Vec::new();
        for rep in 0..draws {
            let sample = draw(&model, n, 0.1, 13 + n as u64 + 1000 * rep as u64)?;
            let m = ensemble::assemble(&sample.w, &sample.x, sample.lambda);
            let mt = ensemble::transform_entrywise(&m, &t);
            let (d, o) = spectra::local_law_deviation(&mt, Complex64::new(2.0, eta))?;
            ds.push(d);
            os.push(o);
        }
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        os.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!(
            "subcritical,{n},{eta:.6e},{:.6e},{:.6e}",
            ds[draws / 2],
            os[draws / 2]
        );
        sub.push(ds[draws / 2]);
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    check.report(
        "local-law diagonal deviation decreases with N (supercritical window)",
        decreasing(&sup),
        format!("{sup:?}"),
    );
    check.report(
        "local-law diagonal deviation decreases with N (subcritical window)",
        decreasing(&sub),
        format!("{sub:?}"),
    );
    Ok(())
}

fn validate_approx(check: &mut Check, sizes: &[usize]) -> anyhow::Result<()> {
    let (model, t, moments) = mixture_setup()?;
    println!("n,median_gap,bound");
    for &n in sizes {
        let mut gaps = Vec::new();
        for seed in 0..20 {
            let sample = draw(&model, n, 0.8, 1000 + seed)?;
            let m = ensemble::assemble(&sample.w, &sample.x, sample.lambda);
            let mt = ensemble::transform_entrywise(&m, &t);
            let h = ensemble::build_h(&sample, &t, &moments);
            let mu_mt = spectra::top_eigenvalues(&mt, 1)?.eigenvalues[0];
            let mu_h = spectra::top_eigenvalues(&h, 1)?.eigenvalues[0];
            gaps.push((mu_mt - mu_h).abs());
        }
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = gaps[gaps.len() / 2];
        let bound = 10.0 * (n as f64).powf(-0.9);
        println!("{n},{median:.6e},{bound:.6e}");
        check.report(
            &format!("approximation gap at N={n}"),
            median <= bound,
            format!("median {median:.3e} ≤ {bound:.3e}"),
        );
    }
    Ok(())
}

fn validate_interpolation(check: &mut Check) -> anyhow::Result<()> {
    let (model, t, moments) = quadratic_setup()?;
    let n = 256;
    let sample = draw(&model, n, 2.5, 4242)?;
    let v = ensemble::build_v(&sample, &t, &moments);
    let h = ensemble::build_h(&sample, &t, &moments);
    let (v1, _h1) = ensemble::build_interpolants(&sample, &t, &moments, 1.0)?;
    check.report("V(1) ≡ V bitwise", v1 == v, "packed storage equal".into());

    let (a, _, _) = ensemble::rank2_spike(&sample.x, sample.lambda, &moments);
    let mut max_dev = 0.0f64;
    for &tp in &[0.0, 0.5, 1.0] {
        let (vt, ht) = ensemble::build_interpolants(&sample, &t, &moments, tp)?;
        for i in 0..n {
            for j in i..n {
                max_dev = max_dev.max((ht.get(i, j) - vt.get(i, j) - a.get(i, j)).abs());
            }
        }
    }
    check.report(
        "H(t) − V(t) equals the rank-2 spike",
        max_dev < 1e-14,
        format!("max entry deviation {max_dev:.3e}"),
    );

    let mu_h = spectra::top_eigenvalues(&h, 1)?.eigenvalues[0];
    let mu_v = spectra::top_eigenvalues(&v, 1)?.eigenvalues[0];
    check.report(
        "μ₁(H) ≥ μ₁(V) with E[f''] ≥ 0",
        mu_h >= mu_v - 1e-10,
        format!("μ₁(H) = {mu_h:.6}, μ₁(V) = {mu_v:.6}"),
    );
    Ok(())
}

fn validate_matrix_io(check: &mut Check, out: Option<&Path>) -> anyhow::Result<()> {
    let (model, _, _) = mixture_setup()?;
    let sample = draw(&model, 64, 0.8, 11)?;
    let dir = match out {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            d.to_path_buf()
        }
        None => std::env::temp_dir(),
    };
    let path = dir.join("spikelab_matrix_io_check.spk");
    sample.w.write_bin(&path)?;
    let back = spikelab::SymMatrix::read_bin(&path)?;
    let equal = back == sample.w;
    std::fs::remove_file(&path).ok();
    check.report(
        "matrix dump round trip",
        equal,
        "binary header + packed upper triangle".into(),
    );
    Ok(())
}

fn tw_table_cmd(action: &str, out: Option<&Path>) -> anyhow::Result<i32> {
    match action {
        "regen" => {
            let (table, delta) = Tw1Table::generate(&TwGenOptions::default())?;
            let csv = table.to_csv();
            let path = out
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("tw1.csv"));
            std::fs::write(&path, &csv)?;
            use sha2::{Digest, Sha256};
            let hex = hex::encode(Sha256::digest(csv.as_bytes()));
            std::fs::write(path.with_extension("sha256"), format!("{hex}\n"))?;
            println!(
                "wrote {} ({} points, refinement delta {delta:.3e}, sha256 {hex})",
                path.display(),
                table.len()
            );
            Ok(0)
        }
        "check" => {
            let (table, delta) = Tw1Table::generate(&TwGenOptions::default())?;
            let fresh = table.to_csv();
            let embedded = Tw1Table::embedded_csv();
            if fresh == embedded {
                println!(
                    "embedded table matches a fresh regeneration ({} points, refinement delta {delta:.3e})",
                    table.len()
                );
                Ok(0)
            } else {
                let shipped = Tw1Table::embedded();
                let mut max_diff = 0.0f64;
                for i in 0..table.len() {
                    let s = -10.0 + 0.01 * i as f64;
                    max_diff = max_diff.max((table.cdf(s) - shipped.cdf(s)).abs());
                }
                eprintln!("embedded table differs from regeneration: max |Δcdf| = {max_diff:.3e}");
                Ok(3)
            }
        }
        other => Err(Error::Config(format!("unknown tw-table action `{other}`")).into()),
    }
}
