use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use isdjs_cli::bench::{run_sweep, write_outputs};
use isdjs_cli::config::{Algo, ExperimentSpec, Signal};
use isdjs_cli::io::{load_operator, read_csv_matrix, write_csv_matrix, StageJson, TraceJson};
use isdjs_cli::mtl_io::load_task_data;
use isdjs_cli::CliError;

use isdjs_core::baselines::{p_threshold, somp};
use isdjs_core::isd::{run_isdjs, FirstSignificantJump, IsdjsConfig};
use isdjs_core::metrics::{evaluate, exact_support};
use isdjs_core::multitask::{run_isdjs_multitask, MtlIsdConfig, DEFAULT_RHO};

/// Joint-sparse recovery: solvers, baselines and benchmark sweeps.
#[derive(Parser)]
#[command(name = "isdjs", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one instance from files; writes x.csv and trace.json
    Solve {
        /// operator file: .json (pwh descriptor) or CSV (dense matrix)
        #[arg(long)]
        operator: PathBuf,
        /// measurement matrix B (m x l CSV)
        #[arg(long)]
        data: PathBuf,
        /// isdjs | l21 | somp | pthresh
        #[arg(long, default_value = "isdjs")]
        algo: String,
        /// oracle sparsity for the greedy baselines
        #[arg(long)]
        k: Option<usize>,
        /// ground truth (n x l CSV) for error reporting
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        max_stages: usize,
        /// final-stage stopping tolerance
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Run a benchmark sweep from a TOML/JSON config; writes report.json
    /// and curves.csv
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// master seed override
        #[arg(long)]
        seed: Option<u64>,
        /// trial-count override
        #[arg(long)]
        trials: Option<usize>,
        /// comma-separated algorithm override, e.g. isdjs,l21,somp,pthresh
        #[arg(long)]
        algos: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Channel-occupancy recovery benchmark (X = H G^T scenario)
    Spectrum {
        #[arg(long, default_value_t = 25)]
        channels: usize,
        /// cooperating receiver nodes (channels of X)
        #[arg(long, default_value_t = 8)]
        nodes: usize,
        #[arg(long, default_value_t = 5)]
        occupied: usize,
        /// compressive measurements per node
        #[arg(long, default_value_t = 15)]
        m: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "isdjs,l21")]
        algos: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Multi-task feature learning from a task directory (manifest.json
    /// plus per-task CSV pairs); writes x.csv and trace.json
    Mtl {
        #[arg(long)]
        data_dir: PathBuf,
        /// regularization weight (overrides the manifest)
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 5)]
        max_stages: usize,
        /// ground truth (n x l CSV) for error reporting
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    operator: PathBuf,
    data: PathBuf,
    algo: String,
    k: Option<usize>,
    truth: Option<PathBuf>,
    out: PathBuf,
    max_stages: usize,
    tol: f64,
) -> Result<(), CliError> {
    let algo = Algo::parse(&algo)?;
    let op = load_operator(&operator)?;
    let b = read_csv_matrix(&data)?;
    let x_true = truth.map(|p| read_csv_matrix(&p)).transpose()?;

    std::fs::create_dir_all(&out)?;
    let (x, trace) = match algo {
        Algo::Isdjs | Algo::L21 => {
            let cfg = IsdjsConfig {
                max_stages: if algo == Algo::L21 { 1 } else { max_stages },
                final_tol: tol,
                ..IsdjsConfig::default()
            };
            let res = run_isdjs(&op, &b, &cfg, &FirstSignificantJump, x_true.as_ref())?;
            let trace = TraceJson::from_result(algo.name(), &res);
            (res.x, trace)
        }
        Algo::Somp | Algo::Pthresh => {
            let k = match (k, &x_true) {
                (Some(k), _) => k,
                (None, Some(t)) => exact_support(t).len(),
                (None, None) => {
                    return Err(CliError::Config(
                        "greedy baselines need --k (or --truth to infer it)".into(),
                    ))
                }
            };
            let dense = op.materialize();
            let res = if algo == Algo::Somp {
                somp(&dense, &b, k)?
            } else {
                p_threshold(&dense, &b, k)?
            };
            let rel_err = x_true
                .as_ref()
                .map(|t| evaluate(&res.x, t, 1e-3).map(|m| m.rel_err))
                .transpose()?;
            let trace = TraceJson {
                algo: algo.name().to_string(),
                notes: None,
                stages: vec![StageJson {
                    stage: 1,
                    tol: 0.0,
                    inner_iters: res.support.len(),
                    threshold: None,
                    detected: res.support.len(),
                    total: x_true.as_ref().map(|t| exact_support(t).len()),
                    correct: None,
                    false_alarms: None,
                    rel_err,
                    objective: *res.residual_norms.last().unwrap_or(&0.0),
                }],
            };
            (res.x, trace)
        }
    };

    write_csv_matrix(&out.join("x.csv"), &x)?;
    trace.write(&out.join("trace.json"))?;
    let last = trace.stages.last().expect("at least one stage");
    match last.rel_err {
        Some(err) => println!(
            "{}: {} stage(s), final rel. error {err:.3e} -> {}",
            trace.algo,
            trace.stages.len(),
            out.display()
        ),
        None => println!(
            "{}: {} stage(s), objective {:.6e} -> {}",
            trace.algo,
            trace.stages.len(),
            last.objective,
            out.display()
        ),
    }
    Ok(())
}

fn cmd_bench(
    config: PathBuf,
    seed: Option<u64>,
    trials: Option<usize>,
    algos: Option<String>,
    out: PathBuf,
) -> Result<(), CliError> {
    let mut spec = ExperimentSpec::from_file(&config)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    if let Some(trials) = trials {
        spec.trials = trials;
    }
    if let Some(list) = algos {
        spec.algos = Algo::parse_list(&list)?;
    }
    spec.validate()?;
    let report = run_sweep(&spec)?;
    write_outputs(&report, &out)?;
    for row in &report.rows {
        println!(
            "{:8} l={:<3} k={:<4} m={:<4} noise={:<6} rate={:.3} mean_err={:.3e}",
            row.algo, row.l, row.k, row.m, row.noise, row.recovery_rate, row.mean_rel_err
        );
    }
    println!(
        "wrote {} and {}",
        out.join("report.json").display(),
        out.join("curves.csv").display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_spectrum(
    channels: usize,
    nodes: usize,
    occupied: usize,
    m: usize,
    noise: f64,
    trials: usize,
    seed: u64,
    algos: String,
    out: PathBuf,
) -> Result<(), CliError> {
    let spec = ExperimentSpec {
        n: channels,
        m: vec![m],
        l: vec![nodes],
        k: vec![occupied],
        signal: Signal::Spectrum,
        noise: vec![noise],
        trials,
        seed,
        algos: Algo::parse_list(&algos)?,
        ..ExperimentSpec::default()
    };
    spec.validate()?;
    let report = run_sweep(&spec)?;
    write_outputs(&report, &out)?;
    for row in &report.rows {
        println!(
            "{:8} channels={} nodes={} occupied={} m={} rate={:.3} mean_err={:.3e}",
            row.algo, channels, nodes, occupied, m, row.recovery_rate, row.mean_rel_err
        );
    }
    Ok(())
}

fn cmd_mtl(
    data_dir: PathBuf,
    rho: Option<f64>,
    max_stages: usize,
    truth: Option<PathBuf>,
    out: PathBuf,
) -> Result<(), CliError> {
    let (data, manifest_rho) = load_task_data(&data_dir)?;
    let x_true = truth.map(|p| read_csv_matrix(&p)).transpose()?;
    let cfg = MtlIsdConfig {
        rho: rho.or(manifest_rho).unwrap_or(DEFAULT_RHO),
        max_stages,
        ..MtlIsdConfig::default()
    };
    let res = run_isdjs_multitask(&data, &cfg, &FirstSignificantJump, x_true.as_ref())?;
    std::fs::create_dir_all(&out)?;
    write_csv_matrix(&out.join("x.csv"), &res.x)?;
    let mut trace = TraceJson::from_result("isdjs-mtl", &res);
    trace.notes = Some(format!(
        "detector: first-significant-jump with divisor = mean samples per task ({}); rho = {}",
        data.mean_samples(),
        cfg.rho
    ));
    trace.write(&out.join("trace.json"))?;
    let last = res.final_stage();
    println!(
        "isdjs-mtl: {} stage(s), objective {:.6e}{} -> {}",
        res.stages.len(),
        last.objective,
        last.rel_err
            .map(|e| format!(", rel. error {e:.3e}"))
            .unwrap_or_default(),
        out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Solve {
            operator,
            data,
            algo,
            k,
            truth,
            out,
            max_stages,
            tol,
        } => cmd_solve(operator, data, algo, k, truth, out, max_stages, tol),
        Cmd::Bench {
            config,
            seed,
            trials,
            algos,
            out,
        } => cmd_bench(config, seed, trials, algos, out),
        Cmd::Spectrum {
            channels,
            nodes,
            occupied,
            m,
            noise,
            trials,
            seed,
            algos,
            out,
        } => cmd_spectrum(
            channels, nodes, occupied, m, noise, trials, seed, algos, out,
        ),
        Cmd::Mtl {
            data_dir,
            rho,
            max_stages,
            truth,
            out,
        } => cmd_mtl(data_dir, rho, max_stages, truth, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
