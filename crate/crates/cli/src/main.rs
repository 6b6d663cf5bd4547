//! `lrdlab`: generate paths, run verification experiments, print constants,
//! and inspect reports.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lrdlab_core::experiments::{run_experiment, validate_plan, ExperimentKind, ExperimentPlan, ExperimentReport};
use lrdlab_core::fbm::CoupledFbmGenerator;
use lrdlab_core::gauss_lrd::{InnovationStream, PathGenerator};
use lrdlab_core::hermite::{compute_b_alpha, compute_kappa_alpha, gamma_exponent};
use lrdlab_core::processes::{ProcessBundle, SeriesSource, SubordinatedSeries};
use lrdlab_core::subordinator::Subordinator;
use lrdlab_core::LabError;
use serde_json::json;

use config::Settings;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Lab(LabError::Parameter(_)) => 2,
            Self::Lab(_) => 3,
            Self::Io { .. } => 4,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "lrdlab", version, about = "Long-range-dependent subordinated Gaussian simulation lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a path, its subordinated series, the derived processes and a coupled fBm as CSV.
    Generate(RunArgs),
    /// Run one experiment and write its report; exit 0 only if every check passes.
    Verify(RunArgs),
    /// Print b_α, κ_α, γ, H and the reference exponents.
    Constants {
        #[arg(long)]
        alpha: f64,
    },
    /// Pretty-print a report file, re-deriving its pass flags.
    Report { file: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` file; command-line options take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    subordinator: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated, e.g. `2^10,2^12,2^14`.
    #[arg(long)]
    horizons: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Number of retained weights M; 0 selects i.i.d. innovations.
    #[arg(long)]
    truncation: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long, env = "LRDLAB_OUT")]
    out: Option<String>,
    /// Any config key, repeatable: `--set ks_tolerance=0.06`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn settings(&self) -> CliResult<Settings> {
        let mut s = match &self.config {
            Some(path) => Settings::parse(&read(path)?)?,
            None => Settings::default(),
        };
        for (key, value) in [
            ("kind", &self.kind),
            ("alpha", &self.alpha),
            ("subordinator", &self.subordinator),
            ("n", &self.n),
            ("horizons", &self.horizons),
            ("replicates", &self.replicates),
            ("seed", &self.seed),
            ("truncation", &self.truncation),
            ("workers", &self.workers),
            ("output_dir", &self.out),
        ] {
            if let Some(v) = value {
                s.set(key, v)?;
            }
        }
        for pair in &self.set {
            s.set_pair(pair)?;
        }
        Ok(s)
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(&args).map(|_| true),
        Command::Verify(args) => cmd_verify(&args),
        Command::Constants { alpha } => cmd_constants(alpha).map(|_| true),
        Command::Report { file } => cmd_report(&file),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Indexed values as `index,value` rows.
fn series_csv(values: &[f64]) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{i},{v:?}\n"));
    }
    out
}

fn grid_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in rows {
        out.push_str(&format!("{t:?},{v:?}\n"));
    }
    out
}

/// `f(k)` for `k = 0, 1, …, n`, stopping at the first horizon error.
fn on_grid(n: usize, f: impl Fn(f64) -> lrdlab_core::Result<f64>) -> CliResult<Vec<(f64, f64)>> {
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64;
        match f(t) {
            Ok(v) => rows.push((t, v)),
            Err(LabError::Horizon { .. }) => break,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(rows)
}

fn cmd_generate(args: &RunArgs) -> CliResult<()> {
    let settings = args.settings()?;
    // Generation shares the clt_marginal defaults (α, M, n, seed).
    let mut plan = ExperimentPlan::default_for(ExperimentKind::CltMarginal);
    settings.apply(&mut plan)?;
    plan.validate_shape()?;
    let sub = Subordinator::parse(&plan.subordinator)?;
    let model = if plan.truncation == 0 {
        lrdlab_core::gauss_lrd::LinearProcessModel::independent(plan.alpha)?
    } else {
        lrdlab_core::gauss_lrd::make_model(plan.alpha, plan.truncation)?
    };
    let n = plan.n;
    let expansion = sub.expansion(4)?;
    let stream = InnovationStream::new(plan.base_seed, 0);
    let path = PathGenerator::new(&model, n)?.generate(&stream)?;
    let source = SeriesSource { seed: plan.base_seed, stream_id: 0, alpha: plan.alpha, truncation: plan.truncation };
    let series = SubordinatedSeries::from_path(&path, &sub, &expansion, Some(source))?;
    let fbm = CoupledFbmGenerator::with_normalization(&model, n, plan.coupling_normalization)?.generate(&stream)?;
    let mu = series.mu;
    let bundle = ProcessBundle::new(series.clone(), n as f64, n, plan.alpha)?;

    let mut files: Vec<(&str, String)> = vec![
        ("path.csv", series_csv(&path.values)),
        ("series.csv", series_csv(&series.y)),
        ("partial_sum.csv", grid_csv(&on_grid(n, |t| bundle.partial_sum(t))?)),
        ("fbm.csv", grid_csv(&fbm.values.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect::<Vec<_>>())),
    ];
    if series.nonnegative && mu > 0.0 {
        files.push(("counting.csv", grid_csv(&on_grid(n, |t| bundle.counting(mu * t).map(|c| c as f64))?)));
        files.push(("q_process.csv", grid_csv(&on_grid(n, |t| bundle.q_process(t))?)));
        files.push(("z_process.csv", grid_csv(&on_grid(n, |t| bundle.z_process(t))?)));
    }
    let meta = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "alpha": plan.alpha,
        "subordinator": sub.description,
        "n": n,
        "truncation": plan.truncation,
        "seed": plan.base_seed,
        "stream_id": 0,
        "mu": mu,
        "sigma": model.sigma,
        "hurst": plan.hurst(),
        "coupling_normalization": plan.coupling_normalization,
        "fbm_scale": fbm_scale(&model, n, plan.coupling_normalization)?,
        "files": files.iter().map(|(name, _)| *name).collect::<Vec<_>>(),
    });

    let dir = settings.output_dir();
    create_dir(&dir)?;
    for (name, body) in &files {
        write(&dir.join(name), body)?;
    }
    write(&dir.join("metadata.json"), &serde_json::to_string_pretty(&meta).expect("json value"))?;
    eprintln!("wrote {} files to {}", files.len() + 1, dir.display());
    Ok(())
}

fn fbm_scale(
    model: &lrdlab_core::gauss_lrd::LinearProcessModel,
    n: usize,
    rule: lrdlab_core::fbm::CouplingNormalization,
) -> CliResult<f64> {
    Ok(CoupledFbmGenerator::with_normalization(model, n, rule)?.normalization())
}

fn report_paths(dir: &Path, kind: ExperimentKind) -> (PathBuf, PathBuf) {
    (dir.join(format!("{}.report.json", kind.name())), dir.join(format!("{}.replicates.csv", kind.name())))
}

fn cmd_verify(args: &RunArgs) -> CliResult<bool> {
    let settings = args.settings()?;
    let kind = settings.kind()?;
    let plan = settings.plan(kind)?;
    let workers = settings.workers()?;
    validate_plan(&plan)?;
    eprintln!("running {kind}: {} replicate(s), base seed {}", plan.replicates, plan.base_seed);
    let report = run_experiment(&plan, workers)?;
    let dir = settings.output_dir();
    create_dir(&dir)?;
    let (json_path, csv_path) = report_paths(&dir, kind);
    write(&json_path, &report.to_json()?)?;
    write(&csv_path, &report.replicates.to_csv())?;
    print_report(&report);
    eprintln!("report written to {}", json_path.display());
    Ok(report.pass)
}

fn cmd_constants(alpha: f64) -> CliResult<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LabError::Parameter(format!("alpha must lie in (0, 1), got {alpha}")).into());
    }
    let b = compute_b_alpha(alpha)?;
    let kappa = compute_kappa_alpha(alpha)?;
    let gamma = gamma_exponent(alpha);
    let h = 1.0 - alpha / 2.0;
    let rows = [
        ("alpha", alpha),
        ("b_alpha", b),
        ("kappa_alpha", kappa),
        ("gamma", gamma),
        ("hurst", h),
        ("s_rate_reference", gamma / 2.0),
        ("n_rate_reference", (gamma / 2.0).max(h * h)),
        ("z_rate_reference", (2.0 - 1.5 * alpha + alpha * alpha / 4.0).max(1.0 - alpha / 2.0 + gamma / 2.0)),
        ("z_scale", 2.0 - alpha),
    ];
    for (name, v) in rows {
        println!("{name:<18} {v:.10}");
    }
    Ok(())
}

fn cmd_report(file: &Path) -> CliResult<bool> {
    let report = ExperimentReport::from_json(&read(file)?)?;
    let recomputed = report.recompute_pass();
    if recomputed != report.pass {
        eprintln!("warning: stored pass flag {} disagrees with the stored checks", report.pass);
    }
    print_report(&report);
    Ok(recomputed)
}

fn print_report(r: &ExperimentReport) {
    let verdict = |p: bool| if p { "PASS" } else { "FAIL" };
    println!("experiment   {}", r.plan.kind);
    println!("config_hash  {}", r.config_hash);
    println!("replicates   {}", r.seeds.len());
    println!("result       {}", verdict(r.recompute_pass()));
    println!("checks:");
    for c in &r.checks {
        let ok = c.comparison.holds(c.value, c.threshold);
        println!("  {:<4} {:<36} {:>14.6e} {:?} {:e}", verdict(ok), c.name, c.value, c.comparison, c.threshold);
    }
    if !r.diagnostics.is_empty() {
        println!("diagnostics (not gating):");
        for c in &r.diagnostics {
            let ok = c.comparison.holds(c.value, c.threshold);
            println!("  {:<4} {:<36} {:>14.6e} {:?} {:e}", verdict(ok), c.name, c.value, c.comparison, c.threshold);
        }
    }
    if !r.slopes.is_empty() {
        println!("slopes:");
        for s in &r.slopes {
            println!("  {:<24} {:.4} ± {:.4}", s.name, s.fit.slope, s.fit.stderr);
        }
    }
    println!("stats:");
    for (k, v) in &r.stats {
        println!("  {k:<28} {v:.6e}");
    }
    println!("references:");
    for (k, v) in &r.references {
        println!("  {k:<28} {v:.6e}");
    }
    for note in &r.notes {
        println!("note: {note}");
    }
}
