mod config;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qfid_core::pipeline::{estimate_fidelity, select_params, PipelineParams, SelectMode};
use qfid_core::sweep::{instance_pair, run_sweep, standard_purification, SweepSpec};
use qfid_core::verify::{coefficient_table, run_suite};
use qfid_core::{DensityOperator, Error, QaeMode, QaeParams, SimLevel, DEFAULT_QUBIT_BUDGET};

const EXIT_RUNTIME: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "qfid", version, about = "Fidelity estimation between low-rank quantum states")]
struct Cli {
    /// Base seed for amplitude-estimation sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// circuit-pe, circuit-pe-perturbed or ideal-spectral.
    #[arg(long, global = true, default_value = "circuit-pe")]
    sim_level: SimLevel,
    /// Largest simulated register, in qubits.
    #[arg(long, global = true, default_value_t = DEFAULT_QUBIT_BUDGET)]
    qubit_budget: usize,
    /// Write results here as well as to stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the fidelity of one pair of states.
    Estimate(EstimateArgs),
    /// Run a parameter grid and write one CSV row per cell and trial.
    Sweep(SweepArgs),
    /// Run numerical checks of the bounds.
    Verify {
        /// Suite name, or `all`.
        suite: String,
    },
    /// Print phase-estimation coefficients for one eigenvalue.
    Coeffs {
        #[arg(long)]
        lambda: f64,
        /// Grid size T, a power of two.
        #[arg(long)]
        big_t: u64,
        /// Evolution-time parameter t.
        #[arg(long)]
        t: u64,
    },
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// Target accuracy; selects unspecified parameters.
    #[arg(long)]
    eps: Option<f64>,
    /// paper or practical.
    #[arg(long, default_value = "practical")]
    mode: SelectMode,
    #[arg(long)]
    kappa_sigma: Option<f64>,
    #[arg(long)]
    t_sigma: Option<u64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    t: Option<u64>,
    /// Amplitude-estimation grid size.
    #[arg(long)]
    m: Option<u64>,
    /// exact or sample.
    #[arg(long, default_value = "exact")]
    qae_mode: QaeMode,
    #[arg(long, default_value_t = 1.0)]
    bound_constant: f64,
    /// Simulation error per controlled evolution in circuit-pe-perturbed.
    #[arg(long, default_value_t = 0.0)]
    perturbation: f64,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rank_rho: Option<usize>,
    #[arg(long)]
    rank_sigma: Option<usize>,
    /// Seed of the generated instance.
    #[arg(long, default_value_t = 0)]
    instance_seed: u64,
    #[arg(long)]
    load_rho: Option<PathBuf>,
    #[arg(long)]
    load_sigma: Option<PathBuf>,
    #[arg(long)]
    dump_rho: Option<PathBuf>,
    #[arg(long)]
    dump_sigma: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    rank_rho: usize,
    #[arg(long)]
    rank_sigma: usize,
    #[arg(long, default_value_t = 0)]
    instance_seed: u64,
    #[arg(long, default_value_t = 1)]
    instances: u64,
    #[arg(long, value_delimiter = ',', required = true)]
    kappa_sigma: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    t_sigma: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    kappa: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<u64>,
    #[arg(long, default_value = "exact")]
    qae_mode: QaeMode,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 1.0)]
    bound_constant: f64,
}

enum Failure {
    Config(String),
    Core(Error),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Core(e.into())
    }
}

fn main() -> ExitCode {
    let argv = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_CONFIG),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Checks) => ExitCode::from(EXIT_RUNTIME),
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::InfeasibleParams(_) => ExitCode::from(EXIT_INFEASIBLE),
                Error::UnknownSuite { .. } => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::from(EXIT_RUNTIME),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Estimate(args) => cmd_estimate(cli, args),
        Command::Sweep(args) => cmd_sweep(cli, args),
        Command::Verify { suite } => cmd_verify(cli, suite),
        Command::Coeffs { lambda, big_t, t } => cmd_coeffs(cli, *lambda, *big_t, *t),
    }
}

/// Writes `text` to stdout and, if requested, to the output file.
fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    print!("{text}");
    if let Some(path) = &cli.output {
        File::create(path)?.write_all(text.as_bytes())?;
    }
    Ok(())
}

fn load_or_generate(args: &EstimateArgs) -> Result<(DensityOperator, DensityOperator), Failure> {
    let generated = match (&args.load_rho, &args.load_sigma) {
        (Some(_), Some(_)) => None,
        _ => {
            let n = args.n.ok_or_else(|| Failure::Config("missing `n` (or load both states)".into()))?;
            let rr = args.rank_rho.ok_or_else(|| Failure::Config("missing `rank-rho`".into()))?;
            let rs = args.rank_sigma.ok_or_else(|| Failure::Config("missing `rank-sigma`".into()))?;
            Some(instance_pair(n, rr, rs, args.instance_seed)?)
        }
    };
    let rho = match &args.load_rho {
        Some(p) => DensityOperator::load(p)?,
        None => generated.as_ref().expect("generated").0.clone(),
    };
    let sigma = match &args.load_sigma {
        Some(p) => DensityOperator::load(p)?,
        None => generated.as_ref().expect("generated").1.clone(),
    };
    Ok((rho, sigma))
}

fn resolve_params(cli: &Cli, p: &ParamArgs, r: usize) -> Result<PipelineParams, Failure> {
    let base = match p.eps {
        Some(eps) => Some(select_params(r, eps, p.mode, cli.sim_level)?),
        None => None,
    };
    let need = |key: &str| Failure::Config(format!("missing `{key}` (give it or `eps`)"));
    let kappa_sigma = p.kappa_sigma.or(base.map(|b| b.kappa_sigma)).ok_or_else(|| need("kappa-sigma"))?;
    let t_sigma = p.t_sigma.or(base.map(|b| b.t_sigma)).ok_or_else(|| need("t-sigma"))?;
    let kappa = p.kappa.or(base.map(|b| b.kappa)).ok_or_else(|| need("kappa"))?;
    let t = p.t.or(base.map(|b| b.t)).ok_or_else(|| need("t"))?;
    let m = p.m.or(base.map(|b| b.qae.m)).ok_or_else(|| need("m"))?;
    let qae = QaeParams::new(m, p.qae_mode, cli.seed)?;
    let mut params = PipelineParams::new(kappa_sigma, t_sigma, kappa, t, qae, cli.sim_level)?
        .with_bound_constant(p.bound_constant)
        .with_budget(cli.qubit_budget);
    params.perturbation = p.perturbation;
    Ok(params)
}

fn cmd_estimate(cli: &Cli, args: &EstimateArgs) -> Result<(), Failure> {
    let (rho, sigma) = load_or_generate(args)?;
    if let Some(p) = &args.dump_rho {
        rho.save(p)?;
    }
    if let Some(p) = &args.dump_sigma {
        sigma.save(p)?;
    }
    let r = rho.rank().min(sigma.rank());
    let params = resolve_params(cli, &args.params, r)?;
    let report = estimate_fidelity(&standard_purification(&rho)?, &standard_purification(&sigma)?, &params)?;
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    emit(cli, &format!("{text}\n"))
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<(), Failure> {
    let spec = SweepSpec {
        n: args.n,
        rank_rho: args.rank_rho,
        rank_sigma: args.rank_sigma,
        instance_seed_start: args.instance_seed,
        instances: args.instances,
        kappa_sigma: args.kappa_sigma.clone(),
        t_sigma: args.t_sigma.clone(),
        kappa: args.kappa.clone(),
        t: args.t.clone(),
        m: args.m.clone(),
        qae_mode: args.qae_mode,
        sim_level: cli.sim_level,
        trials: args.trials,
        seed_base: cli.seed,
        bound_constant: args.bound_constant,
        qubit_budget: cli.qubit_budget,
    };
    spec.validate()?;
    let rows = match &cli.output {
        Some(path) => run_sweep(&spec, cli.jobs, File::create(path)?)?,
        None => run_sweep(&spec, cli.jobs, io::stdout().lock())?,
    };
    eprintln!("{rows} rows");
    Ok(())
}

fn cmd_verify(cli: &Cli, suite: &str) -> Result<(), Failure> {
    let reports = run_suite(suite, cli.seed)?;
    let mut text = String::new();
    let mut ok = true;
    for r in &reports {
        text.push_str(&r.to_string());
        ok &= r.passed();
    }
    text.push_str(if ok { "all checks passed\n" } else { "some checks failed\n" });
    emit(cli, &text)?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

/// Columns: `k, delta, closed_re, closed_im, direct_re, direct_im,
/// difference, tail_bound`; the closed form and the tail bound are blank
/// where they do not apply.
fn cmd_coeffs(cli: &Cli, lambda: f64, big_t: u64, t: u64) -> Result<(), Failure> {
    let rows = coefficient_table(lambda, big_t, t)?;
    let mut text = String::from("k,delta,closed_re,closed_im,direct_re,direct_im,difference,tail_bound\n");
    let f = |v: f64| format!("{v:.16e}");
    for r in rows {
        let (cre, cim) = r.closed.map(|c| (f(c.re), f(c.im))).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.k,
            f(r.delta),
            cre,
            cim,
            f(r.direct.re),
            f(r.direct.im),
            r.difference.map(f).unwrap_or_default(),
            r.tail_bound.map(f).unwrap_or_default(),
        ));
    }
    emit(cli, &text)
}
