use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geodesic_gmm::bench::{format_summary, run_bench, summarize, write_results_csv, BenchSpec};
use geodesic_gmm::datagen::{generate, load_csv, save_csv, DatasetMeta, GenSpec};
use geodesic_gmm::exec;
use geodesic_gmm::fit::{fit_dataset, FitSettings, Method};
use geodesic_gmm::GmmError;

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "GEODESIC_GMM_THREADS";

#[derive(Parser)]
#[command(name = "geodesic-gmm", version, about = "Fit Gaussian mixtures by Riemannian optimization")]
struct Cli {
    /// Run every reduction on the calling thread.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Worker threads (overrides GEODESIC_GMM_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a synthetic mixture dataset.
    Generate(GenerateArgs),
    /// Fit a mixture to a CSV dataset.
    Fit(FitArgs),
    /// Run a benchmark sweep described by a JSON spec.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// JSON generator spec; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Separation.
    #[arg(long)]
    c: Option<f64>,
    /// Eccentricity (largest/smallest covariance eigenvalue).
    #[arg(long)]
    e: Option<f64>,
    /// Sample count (default 100·d²).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Metadata sidecar (default: <out>.meta.json).
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Also write the generating mixture as a model file.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    data: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long)]
    k: usize,
    /// Seed for the k-means++ initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON optimizer/EM settings; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stop when the average log-likelihood changes by less than this.
    #[arg(long)]
    tol: Option<f64>,
    /// L-RBFGS history length.
    #[arg(long)]
    memory: Option<usize>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    /// Covariance floor for EM and initialization, relative to the data's
    /// variance scale.
    #[arg(long)]
    cov_floor_scale: Option<f64>,
    /// Model output (default: <data>.<method>.model.json).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Report output (default: <data>.<method>.report.json).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON bench spec.
    spec: PathBuf,
    /// Results CSV.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Provenance manifest (default: <out>.manifest.json).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Also write the summary table to this file.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Override the spec's run count.
    #[arg(long)]
    runs: Option<usize>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: GmmError| e.to_string())
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<GmmError> for Failure {
    fn from(e: GmmError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Runtime(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    let mut spec = match &a.config {
        Some(p) => read_json::<GenSpec>(p)?,
        None => GenSpec::new(0, 0, 0.0, 0.0, 0),
    };
    let missing = |name: &str| Failure::Usage(format!("--{name} is required without --config"));
    if a.config.is_none() {
        spec.d = a.d.ok_or_else(|| missing("d"))?;
        spec.k = a.k.ok_or_else(|| missing("k"))?;
        spec.c = a.c.ok_or_else(|| missing("c"))?;
        spec.e = a.e.ok_or_else(|| missing("e"))?;
    } else {
        spec.d = a.d.unwrap_or(spec.d);
        spec.k = a.k.unwrap_or(spec.k);
        spec.c = a.c.unwrap_or(spec.c);
        spec.e = a.e.unwrap_or(spec.e);
    }
    spec.n = a.n.or(spec.n);
    spec.seed = a.seed.unwrap_or(spec.seed);
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let (truth, data) = generate(&spec)?;
    save_csv(&data, &a.out)?;
    DatasetMeta::new(&spec).save(a.meta.unwrap_or_else(|| with_suffix(&a.out, ".meta.json")))?;
    if let Some(p) = a.truth {
        truth.save(p)?;
    }
    println!("wrote {} samples (d={}) to {}", data.n(), data.d(), a.out.display());
    Ok(())
}

fn cmd_fit(a: FitArgs) -> Result<(), Failure> {
    let mut settings = match &a.config {
        Some(p) => read_json::<FitSettings>(p)?,
        None => FitSettings::default(),
    };
    if let Some(v) = a.max_iters {
        settings.optim.max_iters = v;
        settings.em.max_iters = v;
    }
    if let Some(v) = a.tol {
        settings.optim.tol_avg_ll = v;
        settings.em.tol_avg_ll = v;
    }
    if let Some(v) = a.memory {
        settings.optim.memory = v;
    }
    if let Some(v) = a.c1 {
        settings.optim.c1 = v;
    }
    if let Some(v) = a.c2 {
        settings.optim.c2 = v;
    }
    if let Some(v) = a.cov_floor_scale {
        settings.em.cov_floor_scale = v;
    }
    settings.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if a.k == 0 {
        return Err(Failure::Usage("--k must be at least 1".into()));
    }

    let data = load_csv(&a.data)?;
    let run = fit_dataset(&data, a.method, a.k, a.seed, &settings)?;
    let tag = format!(".{}", a.method);
    let report_path = a.report.unwrap_or_else(|| with_suffix(&a.data, &format!("{tag}.report.json")));
    write_json(&report_path, &run.record)?;
    if let Some(model) = &run.model {
        model.save(a.model.unwrap_or_else(|| with_suffix(&a.data, &format!("{tag}.model.json"))))?;
    }
    let r = &run.record;
    println!(
        "{}: {} after {} iterations, ALL {}, {:.3}s (+{:.3}s init)",
        r.method,
        r.termination,
        r.iterations,
        r.final_all.map_or("n/a".into(), |v| format!("{v:.6}")),
        r.fit_time_s,
        r.init_time_s
    );
    if run.failed() {
        return Err(Failure::Runtime(
            r.error.clone().unwrap_or_else(|| "line search failed".into()),
        ));
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let mut spec: BenchSpec = read_json(&a.spec)?;
    if let Some(r) = a.runs {
        spec.runs = r;
    }
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let out = run_bench(&spec)?;
    write_results_csv(&out.rows, &a.out)?;
    write_json(
        &a.manifest.unwrap_or_else(|| with_suffix(&a.out, ".manifest.json")),
        &out.manifest,
    )?;
    let table = format_summary(&summarize(&out.rows));
    if let Some(p) = a.summary {
        std::fs::write(p, &table)?;
    }
    print!("{table}");
    Ok(())
}

fn configure_threads(flag: Option<usize>) -> Result<(), Failure> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
        ),
        Err(_) => None,
    };
    let Some(n) = flag.or(from_env) else {
        return Ok(());
    };
    if n == 0 {
        return Err(Failure::Usage("thread count must be positive".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads(cli.threads).and_then(|()| {
        exec::set_serial(cli.deterministic);
        match cli.cmd {
            Cmd::Generate(a) => cmd_generate(a),
            Cmd::Fit(a) => cmd_fit(a),
            Cmd::Bench(a) => cmd_bench(a),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
