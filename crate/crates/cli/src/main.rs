//! Command-line front end for banded precision-matrix estimation.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bandprec::gwishart::{band_posterior, default_k_max, sample_posterior};
use bandprec::harness::report::{
    draws_to_csv, draws_to_json, matrix_to_csv, posterior_to_csv, posterior_to_json, run_to_json,
    table_summary, table_to_csv, write_output, Format,
};
use bandprec::harness::{read_observations, run_experiment, ExperimentConfig, IngestOptions, Settings};
use bandprec::{estimators, EstimatorKind, PriorOverK, PriorSpec, SampleStats};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "bandprec", version, about = "Precision-matrix estimation under banded Gaussian graphical models")]
struct Cli {
    /// Flat `key = value` settings file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the precision matrix of a data file.
    Estimate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        band: Band,
        #[command(flatten)]
        out: Output,
        /// Estimator: mle, bayes-l2, bayes-l1, ref or cholesky.
        #[arg(long)]
        estimator: Option<String>,
    },
    /// Posterior probabilities of each bandwidth for a data file.
    SelectK {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        band: Band,
        #[command(flatten)]
        out: Output,
    },
    /// Run a simulation study and report mean (sd) errors.
    Simulate {
        #[command(flatten)]
        band: Band,
        #[command(flatten)]
        out: Output,
        /// ar1, ar4 or fgn.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        hurst: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated estimators (default: mle,bayes-l2,bayes-l1,cholesky).
        #[arg(long)]
        estimator: Option<String>,
        /// Comma-separated norms: linf-op, l2-op, frobenius, max-abs.
        #[arg(long)]
        norms: Option<String>,
    },
    /// Draw precision matrices from the posterior for a data file.
    SamplePosterior {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        band: Band,
        #[command(flatten)]
        out: Output,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct Input {
    /// Numeric CSV, one observation per row.
    data: Option<PathBuf>,
    /// The first row is a header.
    #[arg(long)]
    header: bool,
    /// Subtract column means before estimation.
    #[arg(long)]
    center: bool,
}

#[derive(Args)]
struct Band {
    /// Bandwidth.
    #[arg(long, conflicts_with = "auto_k")]
    k: Option<usize>,
    /// Use the posterior mode over bandwidths.
    #[arg(long)]
    auto_k: bool,
    /// Largest bandwidth considered by selection.
    #[arg(long)]
    k_max: Option<usize>,
    /// G-Wishart prior degrees of freedom (> 2).
    #[arg(long)]
    delta: Option<f64>,
    /// Prior over bandwidths: exp-quartic or uniform.
    #[arg(long)]
    rho_prior: Option<String>,
}

#[derive(Args)]
struct Output {
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Output file (default: standard output).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn put<T: ToString>(s: &mut Settings, key: &str, v: Option<T>) {
    if let Some(v) = v {
        s.set(key, v.to_string());
    }
}

fn flag(s: &mut Settings, key: &str, on: bool) {
    if on {
        s.set(key, "true");
    }
}

impl Input {
    fn apply(&self, s: &mut Settings) {
        put(s, "data", self.data.as_ref().map(|p| p.display()));
        flag(s, "header", self.header);
        flag(s, "center", self.center);
    }
}

impl Band {
    fn apply(&self, s: &mut Settings) {
        put(s, "k", self.k);
        flag(s, "auto-k", self.auto_k);
        put(s, "k-max", self.k_max);
        put(s, "delta", self.delta);
        put(s, "rho-prior", self.rho_prior.as_ref());
    }
}

impl Output {
    fn apply(&self, s: &mut Settings) {
        put(s, "format", self.format.as_ref());
        put(s, "output", self.output.as_ref().map(|p| p.display()));
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut s = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::new(),
    };
    put(&mut s, "threads", cli.threads);
    if let Some(t) = s.get("threads") {
        let t: usize = t.parse().context("invalid value for `threads`")?;
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match &cli.command {
        Command::Estimate { input, band, out, estimator } => {
            input.apply(&mut s);
            band.apply(&mut s);
            out.apply(&mut s);
            put(&mut s, "estimator", estimator.as_ref());
            cmd_estimate(&s)
        }
        Command::SelectK { input, band, out } => {
            input.apply(&mut s);
            band.apply(&mut s);
            out.apply(&mut s);
            cmd_select_k(&s)
        }
        Command::Simulate { band, out, model, rho, hurst, n, p, reps, seed, estimator, norms } => {
            band.apply(&mut s);
            out.apply(&mut s);
            put(&mut s, "model", model.as_ref());
            put(&mut s, "rho", *rho);
            put(&mut s, "hurst", *hurst);
            put(&mut s, "n", *n);
            put(&mut s, "p", *p);
            put(&mut s, "reps", *reps);
            put(&mut s, "seed", *seed);
            put(&mut s, "estimator", estimator.as_ref());
            put(&mut s, "norms", norms.as_ref());
            cmd_simulate(&s)
        }
        Command::SamplePosterior { input, band, out, draws, seed } => {
            input.apply(&mut s);
            band.apply(&mut s);
            out.apply(&mut s);
            put(&mut s, "draws", *draws);
            put(&mut s, "seed", *seed);
            cmd_sample_posterior(&s)
        }
    }
}

struct DataContext {
    path: PathBuf,
    options: IngestOptions,
    stats: SampleStats,
    prior: PriorSpec,
    rho_prior: PriorOverK,
}

fn load(s: &Settings) -> Result<DataContext> {
    let path = PathBuf::from(s.get("data").context("no data file given")?);
    let options = IngestOptions {
        header: s.parse_or("header", false)?,
        center: s.parse_or("center", false)?,
    };
    let x = read_observations(&path, options)?;
    Ok(DataContext {
        stats: SampleStats::from_observations(&x),
        prior: PriorSpec::new(s.parse_or("delta", PriorSpec::DEFAULT_DELTA)?)?,
        rho_prior: s.get("rho-prior").unwrap_or("exp-quartic").parse()?,
        path,
        options,
    })
}

fn format_of(s: &Settings) -> Result<Format> {
    Ok(s.get("format").unwrap_or("csv").parse()?)
}

fn k_max_of(s: &Settings, ctx: &DataContext) -> Result<usize> {
    let default = default_k_max(ctx.stats.p(), ctx.stats.n);
    Ok(s.parse_or("k-max", default)?)
}

/// Fixed `k`, or the posterior mode when `auto-k` is set or no `k` is given.
fn bandwidth(s: &Settings, ctx: &DataContext) -> Result<(usize, bool)> {
    let auto: bool = s.parse_or("auto-k", false)?;
    match (auto, s.get("k")) {
        (false, Some(k)) => Ok((k.parse().context("invalid value for `k`")?, false)),
        _ => {
            let bp = band_posterior(&ctx.stats, &ctx.prior, &ctx.rho_prior, k_max_of(s, ctx)?)?;
            Ok((bp.mode, true))
        }
    }
}

fn provenance(ctx: &DataContext) -> serde_json::Value {
    json!({
        "data": ctx.path.display().to_string(),
        "header": ctx.options.header,
        "center": ctx.options.center,
        "n": ctx.stats.n,
        "p": ctx.stats.p(),
        "delta": ctx.prior.delta,
        "rho_prior": ctx.rho_prior.name(),
    })
}

fn output_path(s: &Settings) -> Option<PathBuf> {
    s.output()
}

fn cmd_estimate(s: &Settings) -> Result<()> {
    let ctx = load(s)?;
    let kind: EstimatorKind = s.get("estimator").unwrap_or("mle").parse()?;
    let (k, auto) = bandwidth(s, &ctx)?;
    let est = estimators::estimate(kind, &ctx.stats, k, &ctx.prior)?;
    let text = match format_of(s)? {
        Format::Csv => matrix_to_csv(&est),
        Format::Json => {
            let mut meta = provenance(&ctx);
            meta["estimator"] = json!(kind.name());
            meta["k"] = json!(k);
            meta["auto_k"] = json!(auto);
            let rows: Vec<&[f64]> = (0..est.dim()).map(|i| est.row(i)).collect();
            serde_json::to_string_pretty(&json!({ "settings": meta, "precision": rows }))? + "\n"
        }
    };
    write_output(output_path(s).as_deref(), &text)?;
    if auto {
        eprintln!("selected bandwidth k = {k}");
    }
    Ok(())
}

fn cmd_select_k(s: &Settings) -> Result<()> {
    let ctx = load(s)?;
    let k_max = k_max_of(s, &ctx)?;
    let bp = band_posterior(&ctx.stats, &ctx.prior, &ctx.rho_prior, k_max)?;
    let text = match format_of(s)? {
        Format::Csv => posterior_to_csv(&bp)?,
        Format::Json => {
            let mut meta = provenance(&ctx);
            meta["k_max"] = json!(k_max);
            posterior_to_json(&bp, &meta)?
        }
    };
    write_output(output_path(s).as_deref(), &text)?;
    eprintln!("posterior mode k = {} (probability {:.4})", bp.mode, bp.posterior[bp.mode]);
    Ok(())
}

fn cmd_simulate(s: &Settings) -> Result<()> {
    let cfg = ExperimentConfig::from_settings(s)?;
    let run = run_experiment(&cfg)?;
    let format = format_of(s)?;
    let machine = || -> Result<String> {
        Ok(match format {
            Format::Csv => table_to_csv(&run.table)?,
            Format::Json => run_to_json(&run)?,
        })
    };
    match output_path(s) {
        Some(path) => {
            write_output(Some(&path), &machine()?)?;
            print!("{}", table_summary(&run.table));
        }
        None if s.get("format").is_some() => write_output(None, &machine()?)?,
        None => print!("{}", table_summary(&run.table)),
    }
    report_failures(&run.failures);
    Ok(())
}

fn report_failures(failures: &[bandprec::harness::ReplicationFailure]) {
    for f in failures.iter().take(10) {
        eprintln!("replication {} ({}): {}", f.replication, f.stage, f.message);
    }
    if failures.len() > 10 {
        eprintln!("... {} more failures", failures.len() - 10);
    }
}

fn cmd_sample_posterior(s: &Settings) -> Result<()> {
    let ctx = load(s)?;
    let (k, auto) = bandwidth(s, &ctx)?;
    let draws: usize = s.parse_or("draws", 1000)?;
    let seed: u64 = s.parse_or("seed", 1)?;
    if draws == 0 {
        bail!("`draws` must be at least 1");
    }
    let sample = sample_posterior(&ctx.stats, k, &ctx.prior, draws, seed)?;
    let text = match format_of(s)? {
        Format::Csv => draws_to_csv(&sample, k)?,
        Format::Json => {
            let mut meta = provenance(&ctx);
            meta["k"] = json!(k);
            meta["auto_k"] = json!(auto);
            meta["draws"] = json!(draws);
            meta["seed"] = json!(seed);
            draws_to_json(&sample, &meta)?
        }
    };
    write_output(output_path(s).as_deref(), &text)?;
    Ok(())
}
