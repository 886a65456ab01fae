use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rsa_lab::divergence::DivergenceSpec;
use rsa_lab::error::{Error, Result};
use rsa_lab::harness::{
    self, run_experiment, verify_experiment, ExperimentConfig, EXIT_INFEASIBLE,
};
use rsa_lab::problems::{
    generate_nonlinear, generate_nonlinear_centered, generate_quadratic,
    generate_quadratic_centered, Composite, FiniteSumProblem,
};
use rsa_lab::rates;
use rsa_lab::wasserstein::{wv_exact, DiscreteMeasure};

#[derive(Parser)]
#[command(
    name = "rsa-lab",
    about = "Constant-stepsize recursive stochastic algorithms: coupled simulation and contraction-bound verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for trajectory.csv and the JSON document.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the step count K.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the replication count R.
    #[arg(long)]
    replications: Option<usize>,
    /// Hex-float encode all reals in the outputs (bit-exact archival).
    #[arg(long)]
    hex: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate coupled chains and write trajectory + summary.
    Run(RunArgs),
    /// Simulate and check every theoretical bound; exit 1 on violation.
    Verify(RunArgs),
    /// Print a rate certificate as JSON; exit 2 when infeasible.
    Rate(RateArgs),
    /// Exact Wasserstein divergence between two discrete measure files.
    Wasserstein(WassersteinArgs),
    /// Generate a problem instance file.
    GenProblem(GenProblemArgs),
}

#[derive(Args)]
struct RateArgs {
    /// sgd | saga | svrg | svrg-quadratic | asvrg | hsag | catalyst
    #[arg(long)]
    algo: String,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    s_size: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Args)]
struct WassersteinArgs {
    /// First measure file: JSON {atoms: [...], weights: [...]}.
    #[arg(long)]
    mu: PathBuf,
    /// Second measure file.
    #[arg(long)]
    nu: PathBuf,
    /// squared-euclidean (default), power:<p>, or plus-metric:<p>.
    #[arg(long, default_value = "squared-euclidean")]
    divergence: String,
    /// Include the optimal coupling plan in the output.
    #[arg(long)]
    plan: bool,
}

#[derive(Args)]
struct GenProblemArgs {
    /// quadratic | nonlinear
    #[arg(long)]
    kind: String,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    c: f64,
    #[arg(long)]
    l: f64,
    #[arg(long)]
    seed: u64,
    /// Pin every term's gradient to vanish at the optimizer.
    #[arg(long)]
    centered: bool,
    /// none | l1 | half-squared-l2 (nonlinear only)
    #[arg(long, default_value = "none")]
    composite: String,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    if let Ok(workers) = std::env::var("RSA_LAB_WORKERS") {
        if let Ok(count) = workers.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(count).build_global();
        }
    }
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INFEASIBLE
        }
    };
    ExitCode::from(code as u8)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Rate(args) => cmd_rate(args),
        Command::Wasserstein(args) => cmd_wasserstein(args),
        Command::GenProblem(args) => cmd_gen_problem(args),
    }
}

fn load_config(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(steps) = args.steps {
        cfg.steps = steps;
    }
    if let Some(replications) = args.replications {
        cfg.replications = replications;
    }
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, base))
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let (cfg, base) = load_config(&args)?;
    let (traj, summary) = run_experiment(&cfg, &base)?;
    harness::write_outputs(&args.out, &traj, "summary.json", &summary, args.hex)?;
    println!("{}", harness::to_output_json(&summary, args.hex)?);
    Ok(summary.exit_code)
}

fn cmd_verify(args: RunArgs) -> Result<i32> {
    let (cfg, base) = load_config(&args)?;
    let (traj, report) = verify_experiment(&cfg, &base)?;
    harness::write_outputs(&args.out, &traj, "report.json", &report, args.hex)?;
    println!("{}", harness::to_output_json(&report, args.hex)?);
    Ok(report.exit_code)
}

fn missing(flag: &str) -> Error {
    Error::Config(format!("rate: missing required --{flag}"))
}

fn cmd_rate(args: RateArgs) -> Result<i32> {
    let eta = || args.eta.ok_or_else(|| missing("eta"));
    let c = || args.c.ok_or_else(|| missing("c"));
    let l = || args.l.ok_or_else(|| missing("l"));
    let n = || args.n.ok_or_else(|| missing("n"));
    let m = || args.m.ok_or_else(|| missing("m"));
    let theta = || args.theta.ok_or_else(|| missing("theta"));
    let alpha = || args.alpha.ok_or_else(|| missing("alpha"));
    let mut schedule = None;
    let cert = match args.algo.as_str() {
        "sgd" | "sgd-oracle" | "sgd-prox" => rates::gamma_certificate(eta()?, c()?, l()?),
        "saga" => rates::saga_alpha(eta()?, args.b.ok_or_else(|| missing("b"))?, n()?, c()?, l()?),
        "svrg-quadratic" => rates::svrg_alpha_quadratic(eta()?, c()?, l()?, n()?),
        "svrg" => {
            let g = rates::gamma(eta()?, c()?, l()?);
            let kappa = args.kappa.unwrap_or(eta()? * eta()? * l()? * l()?);
            let mut conditions = vec![
                rates::Condition::strict("gamma(eta) < 1", g, 1.0),
                rates::Condition::strict("kappa < 1 - gamma(eta)", kappa, 1.0 - g),
            ];
            let coeff = if conditions.iter().all(|cond| cond.pass) {
                rates::svrg_xi(g, kappa, m()?)?
            } else {
                f64::INFINITY
            };
            conditions.push(rates::Condition::strict("0 < gamma(eta)", 0.0, g));
            rates::RateCertificate::assemble(coeff, conditions, rates::BoundKind::Geometric)
        }
        "asvrg" => rates::asvrg_alpha(eta()?, theta()?, m()?, c()?),
        "hsag" => rates::hsag_rates(
            eta()?,
            args.b.ok_or_else(|| missing("b"))?,
            n()?,
            args.s_size.ok_or_else(|| missing("s-size"))?,
            c()?,
            l()?,
            m()?,
        )?,
        "catalyst" => {
            let horizon = args.m.unwrap_or(25);
            match rates::catalyst_schedule(c()?, theta()?, alpha()?, horizon) {
                Ok(s) => {
                    let cert = rates::RateCertificate::assemble(
                        1.0 - alpha()?,
                        vec![rates::Condition::strict("alpha < sqrt(q)", alpha()?, s.q.sqrt())],
                        rates::BoundKind::CatalystEnvelope { q: s.q, accel_alpha: alpha()? },
                    );
                    schedule = Some(s);
                    cert
                }
                Err(Error::Parameter(msg)) => rates::RateCertificate::assemble(
                    f64::INFINITY,
                    vec![rates::Condition {
                        name: format!("catalyst schedule: {msg}"),
                        lhs: 1.0,
                        rhs: 0.0,
                        pass: false,
                        slack: -1.0,
                    }],
                    rates::BoundKind::Geometric,
                ),
                Err(other) => return Err(other),
            }
        }
        other => {
            return Err(Error::Config(format!(
                "rate: unknown --algo `{other}` (sgd, saga, svrg, svrg-quadratic, asvrg, hsag, catalyst)"
            )))
        }
    };
    let mut doc = serde_json::to_value(&cert)
        .map_err(|e| Error::Internal(format!("certificate serialization: {e}")))?;
    if let Some(s) = schedule {
        doc["schedule"] = serde_json::to_value(&s)
            .map_err(|e| Error::Internal(format!("schedule serialization: {e}")))?;
    }
    println!("{}", serde_json::to_string_pretty(&doc).expect("valid json"));
    Ok(if cert.feasible { 0 } else { EXIT_INFEASIBLE })
}

fn parse_cli_divergence(text: &str) -> Result<DivergenceSpec> {
    if let Some(p) = text.strip_prefix("power:") {
        let p: f64 = p
            .parse()
            .map_err(|_| Error::Config(format!("bad power exponent in --divergence {text}")))?;
        return DivergenceSpec::power(DivergenceSpec::SquaredEuclidean, p);
    }
    if let Some(p) = text.strip_prefix("plus-metric:") {
        let p: f64 = p
            .parse()
            .map_err(|_| Error::Config(format!("bad exponent in --divergence {text}")))?;
        return DivergenceSpec::plus_metric(DivergenceSpec::SquaredEuclidean, p);
    }
    match text {
        "squared-euclidean" => Ok(DivergenceSpec::SquaredEuclidean),
        other => Err(Error::Config(format!(
            "--divergence `{other}` is not available here (squared-euclidean, power:<p>, plus-metric:<p>)"
        ))),
    }
}

fn cmd_wasserstein(args: WassersteinArgs) -> Result<i32> {
    let load = |path: &Path| -> Result<DiscreteMeasure> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    };
    let mu = load(&args.mu)?;
    let nu = load(&args.nu)?;
    let v = parse_cli_divergence(&args.divergence)?;
    let (value, plan) = wv_exact(&mu, &nu, &v)?;
    let mut doc = serde_json::json!({
        "value": value,
        "atoms_m": mu.len(),
        "atoms_n": nu.len(),
    });
    if args.plan {
        let rows: Vec<Vec<f64>> = (0..mu.len())
            .map(|i| (0..nu.len()).map(|j| plan.matrix[(i, j)]).collect())
            .collect();
        doc["plan"] = serde_json::json!(rows);
    }
    println!("{}", serde_json::to_string_pretty(&doc).expect("valid json"));
    Ok(0)
}

fn cmd_gen_problem(args: GenProblemArgs) -> Result<i32> {
    let composite = match (args.composite.as_str(), args.lambda) {
        ("none", _) => Composite::Zero,
        ("l1", Some(lambda)) => Composite::L1 { lambda },
        ("half-squared-l2", Some(lambda)) => Composite::HalfSquaredL2 { lambda },
        ("l1" | "half-squared-l2", None) => {
            return Err(Error::Config("gen-problem: --composite needs --lambda".into()))
        }
        (other, _) => {
            return Err(Error::Config(format!(
                "gen-problem: unknown composite `{other}` (none, l1, half-squared-l2)"
            )))
        }
    };
    let problem: FiniteSumProblem = match args.kind.as_str() {
        "quadratic" => {
            if !composite.is_zero() {
                return Err(Error::Config(
                    "quadratic generation certifies its optimizer by a linear solve and is \
                     composite-free; use kind = nonlinear for composites"
                        .into(),
                ));
            }
            if args.centered {
                generate_quadratic_centered(args.d, args.n, args.c, args.l, args.seed)?
            } else {
                generate_quadratic(args.d, args.n, args.c, args.l, args.seed)?
            }
        }
        "nonlinear" => {
            if args.centered {
                generate_nonlinear_centered(args.d, args.n, args.c, args.l, composite, args.seed)?
            } else {
                generate_nonlinear(args.d, args.n, args.c, args.l, composite, args.seed)?
            }
        }
        other => {
            return Err(Error::Config(format!(
                "gen-problem: unknown kind `{other}` (quadratic, nonlinear)"
            )))
        }
    };
    std::fs::write(&args.out, problem.to_json())?;
    println!(
        "wrote {} (d={}, N={}, optimizer residual {:.3e})",
        args.out.display(),
        problem.d,
        problem.n(),
        problem.optimizer.residual
    );
    Ok(0)
}
