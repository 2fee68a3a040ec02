use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::run::{resolve_out_dir, run_experiment};
use super::scaling::{scaling_study, Axis, ScalingOptions};
use super::spec::{load_spec, DataSource, DiagnosticSpec, ExperimentSpec, SamplerSpec, ScheduleSpec, TargetSpec};
use crate::diagnostics::{
    acceptance_stats_of, cheeger_1d, conductance, detailed_balance_violation, grid_truth, hanson_wright_check,
    normalized_density_1d, transition_matrix_1d, ConductanceOptions,
};
use crate::error::{Error, Result};
use crate::regularity::{regularity_report, ProbeOptions};
use crate::samplers::{read_trace_csv, SamplerKind};
use crate::targets::{make_logistic_regression, sample_sphere_dataset, Dataset, Gaussian};

#[derive(Parser, Debug)]
#[command(name = "mala", about = "MALA sampling and optimization, regularity analysis and chain diagnostics")]
struct Cli {
    /// Master seed (default 0; `run` defaults to the spec's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: spec `output`, then $MALA_OUT_DIR/<name>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment spec file.
    Run { spec: PathBuf },
    /// Sample a Gaussian (or a logistic posterior with --dataset).
    Sample(SampleArgs),
    /// Minimize the smoothed zero-one loss with constrained MALA.
    Optimize(OptimizeArgs),
    /// Stand-alone diagnostics.
    Diagnose {
        #[command(subcommand)]
        which: Diagnose,
    },
    /// Scaling study over step size or dimension for a spec template.
    Scaling {
        spec: PathBuf,
        #[arg(long, default_value = "eta")]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Incoherence, closed-form bounds and probe estimates for a dataset.
    Regularity {
        dataset: PathBuf,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 20)]
        dirs: usize,
        #[arg(long, default_value_t = 0.0)]
        prior: f64,
    },
    /// Generate a synthetic sphere dataset with θ* = e₁.
    Dataset {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 0.7)]
        q0: f64,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Kernel {
    Mala,
    Rwm,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    #[arg(long, value_enum, default_value = "mala")]
    sampler: Kernel,
    #[arg(long, value_delimiter = ',')]
    init: Option<Vec<f64>>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    prior: f64,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 2000)]
    r: usize,
    #[arg(long, default_value_t = 0.7)]
    q0: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    c1: f64,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 3000)]
    iterations: usize,
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
}

#[derive(Subcommand, Debug)]
enum Diagnose {
    /// Acceptance statistics of a trace CSV.
    Acceptance { trace: PathBuf },
    /// Gaussian norm tail against the Hanson-Wright bound.
    HansonWright {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        xi: f64,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
    },
    /// Conductance, Cheeger constant and detailed balance of a discretized 1D Gaussian kernel.
    Conductance {
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 400)]
        cells: usize,
        #[arg(long, value_enum, default_value = "mala")]
        sampler: Kernel,
    },
}

fn kernel(k: Kernel) -> SamplerKind {
    match k {
        Kernel::Mala => SamplerKind::Mala,
        Kernel::Rwm => SamplerKind::Rwm,
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run_and_print(spec: &ExperimentSpec, out: Option<&Path>) -> Result<()> {
    let report = run_experiment(spec, out)?;
    print_json(&serde_json::json!({
        "name": report.name,
        "seed": report.seed,
        "etas": report.etas,
        "replicas": report.replicas.len(),
        "gradient_evals": report.gradient_evals,
        "function_evals": report.function_evals,
        "out_dir": report.out_dir,
        "diagnostics": report.diagnostics,
    }))
}

fn dispatch(cli: Cli) -> Result<()> {
    let out = cli.out.as_deref();
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Run { spec } => {
            let mut spec = load_spec(&spec)?;
            spec.seed = cli.seed.unwrap_or(spec.seed);
            run_and_print(&spec, out)
        }
        Command::Sample(a) => {
            let target = match &a.dataset {
                Some(p) => TargetSpec::Logistic { data: DataSource::File(p.clone()), prior: a.prior },
                None => TargetSpec::Gaussian { d: a.d, precision: vec![1.0; a.d] },
            };
            let spec = ExperimentSpec {
                name: "sample".into(),
                seed,
                iterations: a.iterations,
                replicas: a.replicas,
                record_every: 1,
                output: None,
                target,
                sampler: SamplerSpec { kind: kernel(a.sampler), lazy: false, init: a.init, annulus: None },
                schedule: ScheduleSpec::Fixed { eta: a.eta },
                diagnostics: vec![DiagnosticSpec::AcceptanceStats],
            };
            run_and_print(&spec, out)
        }
        Command::Optimize(a) => {
            let spec = ExperimentSpec {
                name: "optimize".into(),
                seed,
                iterations: a.iterations,
                replicas: a.replicas,
                record_every: 1,
                output: None,
                target: TargetSpec::ZeroOne {
                    d: a.d,
                    r: a.r,
                    q0: a.q0,
                    epsilon: a.epsilon,
                    c1: a.c1,
                    data_seed: a.data_seed,
                },
                sampler: SamplerSpec { kind: SamplerKind::ConstrainedMala, lazy: true, init: None, annulus: None },
                schedule: ScheduleSpec::Fixed { eta: a.eta },
                diagnostics: vec![
                    DiagnosticSpec::Minimizer { draws: 100_000 },
                    DiagnosticSpec::HittingTime { angle: Some(0.35), center: None, radius: None },
                ],
            };
            let report = run_experiment(&spec, out)?;
            print_json(&serde_json::json!({
                "seed": report.seed,
                "eta": report.etas[0],
                "replicas": report.replicas.iter().map(|r| serde_json::json!({
                    "replica": r.replica,
                    "angle": r.angle,
                    "risk_gap": r.risk_gap,
                    "hitting_iteration": r.hitting_iteration,
                    "argmin_index": r.argmin_index,
                })).collect::<Vec<_>>(),
                "out_dir": report.out_dir,
            }))
        }
        Command::Diagnose { which } => match which {
            Diagnose::Acceptance { trace } => {
                let records = read_trace_csv(&trace)?;
                let s = acceptance_stats_of(&records)?;
                print_json(&serde_json::json!({ "trace": trace, "records": records.len(), "stats": s }))
            }
            Diagnose::HansonWright { d, xi, n } => print_json(&hanson_wright_check(d, xi, n, seed)?),
            Diagnose::Conductance { eta, cells, sampler } => {
                let g = Gaussian::standard(1);
                let pi = grid_truth(&g, &[-8.0], &[8.0], &[cells], None)?;
                let k = transition_matrix_1d(&g, kernel(sampler), eta, &pi)?;
                let psi = cheeger_1d(&pi, normalized_density_1d(&g, &pi))?;
                let opts = ConductanceOptions { seed, ..Default::default() };
                let c = conductance(&k, &pi, opts)?;
                let db = detailed_balance_violation(&k, &pi)?;
                print_json(&serde_json::json!({
                    "eta": eta, "cells": cells, "seed": seed,
                    "cheeger": psi, "conductance": c, "acceptance": k.mean_acceptance(pi.mass()),
                    "detailed_balance": db, "off_grid_mass": k.off_grid_mass,
                }))
            }
        },
        Command::Scaling { spec, axis, values } => {
            let template = load_spec(&spec)?;
            let axis: Axis = axis.parse()?;
            let table = scaling_study(&template, axis, &values, &ScalingOptions::default())?;
            let dir = resolve_out_dir(&template, out);
            std::fs::create_dir_all(&dir)?;
            table.write_csv(std::fs::File::create(dir.join("scaling.csv"))?)?;
            std::fs::write(dir.join("scaling.json"), serde_json::to_string_pretty(&table)?)?;
            print_json(&table)
        }
        Command::Regularity { dataset, points, dirs, prior } => {
            let data = Dataset::load_csv(&dataset)?;
            let target = make_logistic_regression(data.clone(), prior)?;
            let rep = regularity_report(target.as_ref(), Some(&data), &ProbeOptions::new(points, dirs, seed))?;
            println!(
                "dataset {} (d = {}, r = {}), seed {}, {} probes",
                dataset.display(),
                data.dim(),
                data.len(),
                seed,
                rep.probe_count
            );
            print!("{}", rep.table(0.05));
            if let Some(dir) = out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("regularity.json"), serde_json::to_string_pretty(&rep)?)?;
            }
            Ok(())
        }
        Command::Dataset { d, r, q0, output } => {
            let mut theta = vec![0.0; d];
            if let Some(t) = theta.first_mut() {
                *t = 1.0;
            }
            let data = sample_sphere_dataset(d, r, &theta, q0, seed)?;
            data.save_csv(&output)?;
            eprintln!("wrote {} ({} points in d = {})", output.display(), r, d);
            Ok(())
        }
    }
}

/// Runs the command line `argv` (including the program name) and returns the
/// process exit code: 0 success, 1 invalid input, 2 runtime failure.
pub fn cli_entry<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli)),
            Err(e) => Err(Error::InvalidArgument(format!("thread pool: {e}"))),
        },
        None => dispatch(cli),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                Error::Validation(errs) => {
                    eprintln!("error: invalid input");
                    for m in errs {
                        eprintln!("  {m}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            if matches!(e, Error::Validation(_) | Error::InvalidArgument(_)) {
                1
            } else {
                2
            }
        }
    }
}
