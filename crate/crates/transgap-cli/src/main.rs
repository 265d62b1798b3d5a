//! `transgap`: generate datasets, run seeded Monte Carlo experiments, and
//! evaluate generalization bounds from the command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags, a
//! missing or invalid input file, or an inconsistent configuration). All
//! randomness flows from explicit seeds; given the same inputs every
//! subcommand writes and prints the same bytes.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use transgap::bounds::{
    adagrad_trajectory_bound, audibert_comparator_bound, begin_comparator_bound,
    catoni_cmi_error_bound, catoni_random_sampling_bound, cmi_bound, cmi_bound_squared,
    exchangeable_pac_bayes_bound, flatness_bound, hessian_trace_gap_bound, info_density_bound,
    mi_bound_absolute, mi_bound_expectation, mi_bound_single_draw, mi_bound_squared,
    pac_bayes_expectation_bound, pac_bayes_grid_bound, pac_bayes_hp_bound,
    pac_bayes_single_draw_bound, pointwise_cmi_bound, CmiVariant, FlatnessScale,
    HessianBoundInputs,
};
use transgap::data::{gen_csbm, gen_gaussian_blobs, save_dataset, Dataset};
use transgap::oracle::run_oracle_suite;
use transgap::pipeline::{
    render_report_csv, render_report_json, render_trials_jsonl, run_monte_carlo, BoundReport,
    ExperimentConfig,
};
use transgap::{BoundContext, TrajectoryStats};

#[derive(Parser)]
#[command(name = "transgap", version, about = "Transductive generalization gap experiments")]
struct Cli {
    /// Print machine-parseable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file.
    GenData {
        #[command(subcommand)]
        generator: Generator,
    },
    /// Run a Monte Carlo experiment from a JSON config.
    Run {
        /// Experiment config (JSON, schema in the README).
        #[arg(long)]
        config: PathBuf,
        /// Directory for report.json, trials.jsonl, and report.csv.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; results are byte-identical for any value.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Evaluate the bound catalog on explicit inputs from a JSON file.
    Bounds {
        /// Inputs: {"m", "u", "b", optional "k", "requests": [...]}.
        #[arg(long, value_name = "PATH")]
        r#in: PathBuf,
    },
    /// Run the enumeration-backed self checks; exit 0 iff all pass.
    Verify {
        /// Largest instance size to enumerate (4..=8).
        #[arg(long, default_value_t = 8)]
        max_n: usize,
    },
    /// Re-render a saved report.json.
    Export {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = ExportFormat::Csv)]
        format: ExportFormat,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Generator {
    /// Two-community graph with class-correlated Gaussian node features.
    Csbm {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        d: usize,
        /// Mixing angle in [-1, 1]: 0 pure graph signal, +-1 pure features.
        #[arg(long, allow_negative_numbers = true)]
        phi: f64,
        #[arg(long, default_value_t = 10.0)]
        avg_degree: f64,
        #[arg(long, default_value_t = 1.0)]
        feature_snr: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "dataset.json")]
        out: PathBuf,
    },
    /// Balanced Gaussian blobs with axis-aligned class means.
    Blobs {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        /// Distance between class means.
        #[arg(long)]
        sep: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "dataset.json")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Csv,
    Json,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

type CliResult<T> = Result<T, Failure>;

fn usage<E: Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime<E: Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Rust ignores SIGPIPE, turning `transgap ... | head` into a panic when
/// stdout closes early. Restore the default so the process dies quietly.
#[cfg(unix)]
fn restore_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn restore_sigpipe() {}

fn main() -> ExitCode {
    restore_sigpipe();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenData { generator } => cmd_gen_data(generator, cli.json),
        Command::Run { config, out, threads } => cmd_run(&config, &out, threads, cli.json),
        Command::Bounds { r#in } => cmd_bounds(&r#in, cli.json),
        Command::Verify { max_n } => cmd_verify(max_n, cli.json),
        Command::Export { report, format, out } => cmd_export(&report, format, out.as_deref(), cli.json),
    }
}

/// Reads a flag-named input file; a missing path is a usage error.
fn read_input(path: &Path, what: &str) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Failure::Usage(format!("{what} not found: {}", path.display()))
        } else {
            Failure::Runtime(format!("reading {what} {}: {e}", path.display()))
        }
    })
}

fn parse_input<T: DeserializeOwned>(text: &str, what: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| Failure::Usage(format!("{what}: {e}")))
}

fn cmd_gen_data(generator: Generator, json: bool) -> CliResult<()> {
    let (data, out) = match generator {
        Generator::Csbm { n, d, phi, avg_degree, feature_snr, seed, out } => (
            Dataset::from(gen_csbm(n, d, phi, avg_degree, feature_snr, seed).map_err(usage)?),
            out,
        ),
        Generator::Blobs { n, d, classes, sep, seed, out } => (
            Dataset::from(gen_gaussian_blobs(n, d, classes, sep, seed).map_err(usage)?),
            out,
        ),
    };
    save_dataset(&data, &out).map_err(runtime)?;
    let base = data.base();
    let edges = data.as_graph().map(|g| g.edges().len());
    if json {
        let summary = serde_json::json!({
            "path": out,
            "n": base.n(),
            "d": base.dim(),
            "classes": base.classes(),
            "edges": edges,
        });
        println!("{summary}");
    } else {
        let edges = edges.map_or(String::from("none"), |e| e.to_string());
        println!(
            "wrote {} (n = {}, d = {}, classes = {}, edges = {edges})",
            out.display(),
            base.n(),
            base.dim(),
            base.classes(),
        );
    }
    Ok(())
}

fn cmd_run(config_path: &Path, out_dir: &Path, threads: Option<usize>, json: bool) -> CliResult<()> {
    let text = read_input(config_path, "config")?;
    let config: ExperimentConfig = parse_input(&text, "config")?;
    let resolved = config.resolved().map_err(usage)?;

    let execute = || run_monte_carlo(&resolved);
    let output = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(runtime)?
            .install(execute),
        None => execute(),
    }
    .map_err(runtime)?;

    std::fs::create_dir_all(out_dir).map_err(runtime)?;
    let report_json = render_report_json(&output.report).map_err(runtime)?;
    std::fs::write(out_dir.join("report.json"), &report_json).map_err(runtime)?;
    std::fs::write(
        out_dir.join("trials.jsonl"),
        render_trials_jsonl(&output.trials).map_err(runtime)?,
    )
    .map_err(runtime)?;
    std::fs::write(
        out_dir.join("report.csv"),
        render_report_csv(&output.report).map_err(runtime)?,
    )
    .map_err(runtime)?;

    if json {
        // The report embeds the resolved config.
        print!("{report_json}");
    } else {
        let report = &output.report;
        println!(
            "resolved config: {}",
            serde_json::to_string(&report.config).map_err(runtime)?
        );
        println!(
            "cells: {} used, {} dropped; trials logged: {}",
            report.cells_used,
            report.cells_dropped,
            output.trials.len()
        );
        println!("gap: mean {:+.6}, std {:.6}", report.gap_mean, report.gap_std);
        for bound in &report.bounds {
            println!(
                "{}: mean {:.6}, std {:.6}, vacuous {:.2}",
                bound.name, bound.mean, bound.std, bound.vacuous_fraction
            );
        }
        println!("wrote report.json, trials.jsonl, report.csv under {}", out_dir.display());
    }
    Ok(())
}

/// Explicit-input bound evaluation: shared split sizes plus one request per
/// bound, each carrying exactly the quantities its formula needs.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsInput {
    m: usize,
    u: usize,
    #[serde(default = "default_b", alias = "B")]
    b: f64,
    /// Test-to-train ratio; required by the CMI-family bounds.
    #[serde(default)]
    k: Option<usize>,
    requests: Vec<BoundRequest>,
}

fn default_b() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(tag = "bound", rename_all = "kebab-case", deny_unknown_fields)]
enum BoundRequest {
    MiExpectation { mi: f64 },
    MiSquared { mi: f64 },
    MiSingleDraw { mi: f64, delta: f64 },
    MiAbsolute { mi: f64 },
    InfoDensity { density: f64, delta: f64 },
    Cmi { samples: Vec<f64> },
    CmiSquared { mi: f64 },
    PointwiseCmi { per_index: Vec<Vec<f64>>, variant: CmiVariant },
    CatoniCmi { kl: f64, lambda: f64, delta: f64, train_error: f64 },
    CatoniRandomSampling { kl: f64, lambda: f64, delta: f64, train_error: f64 },
    PacBayesExpectation { kl: f64, lambda: f64 },
    PacBayesHighProbability { kl: f64, lambda: f64, delta: f64 },
    PacBayesSingleDraw { log_density_ratio: f64, lambda: f64, delta: f64 },
    PacBayesGrid { kl: f64, delta: f64 },
    BeginComparator { kl: f64, delta: f64 },
    Flatness {
        sharp_train_max: f64,
        w_sq_norm: f64,
        dim: usize,
        #[serde(default)]
        rho: Option<f64>,
        #[serde(default)]
        sigma: Option<f64>,
        lambda: f64,
        delta: f64,
    },
    AudibertComparator { kl: f64, lambda: f64, delta: f64, expected_sq_loss_sum: f64 },
    ExchangeablePacBayes { kl: f64, lambda: f64, delta: f64 },
    HessianTrace { spectral_cap: f64, dim: usize, mi: f64, noise_budget: f64 },
    Trajectory { step_sq_norms: Vec<f64>, sigma: f64, dim: usize },
}

impl BoundRequest {
    fn name(&self) -> &'static str {
        match self {
            BoundRequest::MiExpectation { .. } => "mi-expectation",
            BoundRequest::MiSquared { .. } => "mi-squared",
            BoundRequest::MiSingleDraw { .. } => "mi-single-draw",
            BoundRequest::MiAbsolute { .. } => "mi-absolute",
            BoundRequest::InfoDensity { .. } => "info-density",
            BoundRequest::Cmi { .. } => "cmi",
            BoundRequest::CmiSquared { .. } => "cmi-squared",
            BoundRequest::PointwiseCmi { .. } => "pointwise-cmi",
            BoundRequest::CatoniCmi { .. } => "catoni-cmi",
            BoundRequest::CatoniRandomSampling { .. } => "catoni-random-sampling",
            BoundRequest::PacBayesExpectation { .. } => "pac-bayes-expectation",
            BoundRequest::PacBayesHighProbability { .. } => "pac-bayes-high-probability",
            BoundRequest::PacBayesSingleDraw { .. } => "pac-bayes-single-draw",
            BoundRequest::PacBayesGrid { .. } => "pac-bayes-grid",
            BoundRequest::BeginComparator { .. } => "begin-comparator",
            BoundRequest::Flatness { .. } => "flatness",
            BoundRequest::AudibertComparator { .. } => "audibert-comparator",
            BoundRequest::ExchangeablePacBayes { .. } => "exchangeable-pac-bayes",
            BoundRequest::HessianTrace { .. } => "hessian-trace",
            BoundRequest::Trajectory { .. } => "trajectory",
        }
    }
}

#[derive(Serialize)]
struct BoundResult {
    bound: &'static str,
    value: f64,
    vacuous: bool,
    /// Minimizing grid temperature, grid bound only.
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    /// Perturbation radius implied by a sigma-scaled flatness request.
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
}

fn cmd_bounds(input_path: &Path, json: bool) -> CliResult<()> {
    let text = read_input(input_path, "bounds input")?;
    let input: BoundsInput = parse_input(&text, "bounds input")?;
    let mut ctx = BoundContext::new(input.m, input.u, input.b).map_err(usage)?;
    if let Some(k) = input.k {
        ctx = ctx.with_ratio(k).map_err(usage)?;
    }

    let mut results = Vec::with_capacity(input.requests.len());
    for request in &input.requests {
        let name = request.name();
        let mut lambda_out = None;
        let mut rho_out = None;
        let value = match request {
            BoundRequest::MiExpectation { mi } => mi_bound_expectation(&ctx, *mi),
            BoundRequest::MiSquared { mi } => mi_bound_squared(&ctx, *mi),
            BoundRequest::MiSingleDraw { mi, delta } => mi_bound_single_draw(&ctx, *mi, *delta),
            BoundRequest::MiAbsolute { mi } => mi_bound_absolute(&ctx, *mi),
            BoundRequest::InfoDensity { density, delta } => {
                info_density_bound(&ctx, *density, *delta)
            }
            BoundRequest::Cmi { samples } => cmi_bound(&ctx, samples),
            BoundRequest::CmiSquared { mi } => cmi_bound_squared(&ctx, *mi),
            BoundRequest::PointwiseCmi { per_index, variant } => {
                pointwise_cmi_bound(&ctx, per_index, *variant)
            }
            BoundRequest::CatoniCmi { kl, lambda, delta, train_error } => {
                catoni_cmi_error_bound(&ctx, *kl, *lambda, *delta, *train_error)
            }
            BoundRequest::CatoniRandomSampling { kl, lambda, delta, train_error } => {
                catoni_random_sampling_bound(&ctx, *kl, *lambda, *delta, *train_error)
            }
            BoundRequest::PacBayesExpectation { kl, lambda } => {
                pac_bayes_expectation_bound(&ctx, *kl, *lambda)
            }
            BoundRequest::PacBayesHighProbability { kl, lambda, delta } => {
                pac_bayes_hp_bound(&ctx, *kl, *lambda, *delta)
            }
            BoundRequest::PacBayesSingleDraw { log_density_ratio, lambda, delta } => {
                pac_bayes_single_draw_bound(&ctx, *log_density_ratio, *lambda, *delta)
            }
            BoundRequest::PacBayesGrid { kl, delta } => {
                pac_bayes_grid_bound(&ctx, *kl, *delta).map(|(value, lambda)| {
                    lambda_out = Some(lambda);
                    value
                })
            }
            BoundRequest::BeginComparator { kl, delta } => begin_comparator_bound(&ctx, *kl, *delta),
            BoundRequest::Flatness {
                sharp_train_max,
                w_sq_norm,
                dim,
                rho,
                sigma,
                lambda,
                delta,
            } => {
                let scale = match (rho, sigma) {
                    (Some(r), None) => FlatnessScale::Rho(*r),
                    (None, Some(s)) => FlatnessScale::Sigma(*s),
                    _ => {
                        return Err(Failure::Usage(format!(
                            "{name}: provide exactly one of rho or sigma"
                        )))
                    }
                };
                flatness_bound(&ctx, *sharp_train_max, *w_sq_norm, *dim, scale, *lambda, *delta)
                    .map(|(value, rho)| {
                        rho_out = Some(rho);
                        value
                    })
            }
            BoundRequest::AudibertComparator { kl, lambda, delta, expected_sq_loss_sum } => {
                audibert_comparator_bound(&ctx, *kl, *lambda, *delta, *expected_sq_loss_sum)
            }
            BoundRequest::ExchangeablePacBayes { kl, lambda, delta } => {
                exchangeable_pac_bayes_bound(&ctx, *kl, *lambda, *delta)
            }
            BoundRequest::HessianTrace { spectral_cap, dim, mi, noise_budget } => {
                let inputs = HessianBoundInputs {
                    spectral_cap: *spectral_cap,
                    dim: *dim,
                    mi_estimate: *mi,
                    noise_budget: *noise_budget,
                };
                hessian_trace_gap_bound(&inputs, &ctx)
            }
            BoundRequest::Trajectory { step_sq_norms, sigma, dim } => {
                TrajectoryStats::new(step_sq_norms.clone(), vec![*sigma; step_sq_norms.len()], *dim)
                    .and_then(|stats| adagrad_trajectory_bound(&ctx, &stats))
            }
        }
        .map_err(|e| Failure::Usage(format!("{name}: {e}")))?;
        results.push(BoundResult {
            bound: name,
            value: value.value,
            vacuous: value.vacuous,
            lambda: lambda_out,
            rho: rho_out,
        });
    }

    let rendered = if json {
        serde_json::to_string(&results).map_err(runtime)?
    } else {
        serde_json::to_string_pretty(&results).map_err(runtime)?
    };
    println!("{rendered}");
    Ok(())
}

fn cmd_verify(max_n: usize, json: bool) -> CliResult<()> {
    let report = run_oracle_suite(max_n).map_err(usage)?;
    if json {
        println!("{}", serde_json::to_string(&report).map_err(runtime)?);
    } else {
        for check in &report.checks {
            let status = if check.passed { "PASS" } else { "FAIL" };
            println!(
                "{status} {} (measured {:.3e}, tolerance {:.3e})",
                check.name, check.measured, check.tolerance
            );
        }
        println!(
            "{} of {} checks passed",
            report.checks.iter().filter(|c| c.passed).count(),
            report.checks.len()
        );
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Runtime("verification failed".into()))
    }
}

fn cmd_export(
    report_path: &Path,
    format: ExportFormat,
    out: Option<&Path>,
    json: bool,
) -> CliResult<()> {
    let text = read_input(report_path, "report")?;
    let report: BoundReport = parse_input(&text, "report")?;
    let rendered = match format {
        ExportFormat::Csv => render_report_csv(&report).map_err(runtime)?,
        ExportFormat::Json => render_report_json(&report).map_err(runtime)?,
    };
    match out {
        Some(path) => {
            std::fs::write(path, &rendered).map_err(runtime)?;
            if json {
                let summary = serde_json::json!({
                    "written": path,
                    "lines": rendered.lines().count(),
                });
                println!("{summary}");
            } else {
                println!("wrote {} ({} lines)", path.display(), rendered.lines().count());
            }
        }
        None => print!("{rendered}"),
    }
    Ok(())
}
