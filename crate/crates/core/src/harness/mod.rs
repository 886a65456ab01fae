//! Experiment orchestration: coupled runs, bound verification, and
//! deterministic result files.

pub mod config;

pub use config::{
    DivergenceConfig, ExperimentConfig, InitConfig, ProblemConfig, VerificationMode,
};

use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::algorithms::{build_operator, AlgorithmConfig, EpochConfig};
use crate::error::{Error, Result};
use crate::hexf;
use crate::operators::{run_coupled, CoupledRunSpec, CoupledTrajectory, InitLaw, RandomOperator};
use crate::problems::FiniteSumProblem;
use crate::rates::{self, BoundKind, Condition, RateCertificate};

/// Exit-code contract: 0 pass, 1 bound violated, 2 infeasible or invalid
/// config, 3 divergence count exceeded.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_BOUND_VIOLATED: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

/// Replication divergence fraction above which a run is rejected rather
/// than silently censored.
pub const DIVERGED_FRACTION_LIMIT: f64 = 0.001;

/// Relative tolerance for per-step almost-sure contraction checks.
pub const PER_STEP_REL_TOL: f64 = 1e-12;

/// Rate certificate the verification run is gated on.
pub fn certificate_for(
    algo: &AlgorithmConfig,
    problem: &FiniteSumProblem,
) -> Result<RateCertificate> {
    let (c, l, n) = (problem.c, problem.l, problem.n());
    match algo {
        AlgorithmConfig::SgdOracle { eta } | AlgorithmConfig::SgdProx { eta, .. } => {
            Ok(rates::gamma_certificate(*eta, c, l))
        }
        AlgorithmConfig::Asgd { eta, alpha, beta } => {
            let (qbar, _) = problem.quadratic_mean().ok_or_else(|| {
                Error::Config("asgd certificate needs a quadratic instance".into())
            })?;
            let cert = rates::asgd_certificate(qbar, *eta, *alpha, *beta)?;
            Ok(RateCertificate::assemble(
                cert.rho,
                vec![Condition::strict(
                    "stein residual <= 1e-8 |P|",
                    cert.residual,
                    rates::ASGD_RESIDUAL_TOL,
                )],
                BoundKind::Geometric,
            ))
        }
        AlgorithmConfig::Saga { eta, b } => Ok(rates::saga_alpha(*eta, *b, n, c, l)),
        AlgorithmConfig::Svrg { eta, epoch, kappa } => {
            let inner_alpha = rates::gamma(*eta, c, l);
            let kappa = kappa.unwrap_or(eta * eta * l * l);
            let mut conditions = vec![
                Condition::strict("gamma(eta) < 1", inner_alpha, 1.0),
                Condition::strict("kappa < 1 - gamma(eta)", kappa, 1.0 - inner_alpha),
            ];
            let coeff = if conditions.iter().all(|cond| cond.pass) {
                expected_xi(inner_alpha, kappa, epoch)?
            } else {
                f64::INFINITY
            };
            conditions.push(Condition::strict("0 < gamma(eta)", 0.0, inner_alpha));
            Ok(RateCertificate::assemble(coeff, conditions, BoundKind::Geometric))
        }
        AlgorithmConfig::Asvrg { eta, theta, epoch } => {
            let EpochConfig::Fixed { m } = epoch else {
                return Err(Error::Config(
                    "asvrg certificate needs fixed epoch lengths".into(),
                ));
            };
            Ok(rates::asvrg_alpha(*eta, *theta, *m, c))
        }
        AlgorithmConfig::Hsag { eta, b, s, epoch } => {
            let EpochConfig::Fixed { m } = epoch else {
                return Err(Error::Config(
                    "hsag certificate needs fixed epoch lengths".into(),
                ));
            };
            let mut s = s.clone();
            s.sort_unstable();
            s.dedup();
            rates::hsag_rates(*eta, *b, n, s.len(), c, l, *m)
        }
        AlgorithmConfig::Catalyst { theta, alpha, .. } => {
            let schedule = rates::catalyst_schedule(c, *theta, *alpha, 1)?;
            Ok(RateCertificate::assemble(
                1.0 - alpha,
                vec![Condition::strict("alpha < sqrt(q)", *alpha, schedule.q.sqrt())],
                BoundKind::CatalystEnvelope { q: schedule.q, accel_alpha: *alpha },
            ))
        }
    }
}

/// Per-epoch factor `E[xi_tau]`. For fixed epochs this is `xi_M`; for the
/// capped geometric law it is computed exactly through `E[alpha^tau]`
/// (the product bound factorizes over i.i.d. epochs).
fn expected_xi(alpha: f64, kappa: f64, epoch: &EpochConfig) -> Result<f64> {
    match *epoch {
        EpochConfig::Fixed { m } => rates::svrg_xi(alpha, kappa, m),
        EpochConfig::Geometric { m } => {
            rates::svrg_xi(alpha, kappa, m)?; // validates parameter ranges
            let p = 1.0 / m as f64;
            let cap = 10 * m;
            let mut e_alpha_tau = 0.0;
            let mut tail = 1.0; // P(tau >= t)
            for t in 1..cap {
                let prob = tail * p;
                e_alpha_tau += prob * alpha.powi(t as i32);
                tail *= 1.0 - p;
            }
            e_alpha_tau += tail * alpha.powi(cap as i32);
            Ok(e_alpha_tau + kappa * (1.0 - e_alpha_tau) / (1.0 - alpha))
        }
    }
}

/// Almost-sure per-step contraction factor, when the algorithm/divergence
/// pair admits one.
fn per_step_factor(cfg: &ExperimentConfig, cert: &RateCertificate) -> Option<f64> {
    match (&cfg.algorithm, &cfg.divergence) {
        (
            AlgorithmConfig::SgdOracle { .. } | AlgorithmConfig::SgdProx { .. },
            DivergenceConfig::SquaredEuclidean,
        ) => Some(cert.alpha),
        (AlgorithmConfig::Asgd { .. }, DivergenceConfig::AsgdCertificate) => Some(cert.alpha),
        _ => None,
    }
}

fn is_variance_reduced(algo: &AlgorithmConfig) -> bool {
    matches!(
        algo,
        AlgorithmConfig::Saga { .. }
            | AlgorithmConfig::Svrg { .. }
            | AlgorithmConfig::Asvrg { .. }
            | AlgorithmConfig::Hsag { .. }
    )
}

struct Prepared {
    problem: Arc<FiniteSumProblem>,
    operator: Box<dyn RandomOperator>,
    certificate: RateCertificate,
}

fn prepare(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Prepared> {
    cfg.validate()?;
    let problem = cfg.build_problem(base_dir)?;
    let certificate = certificate_for(&cfg.algorithm, &problem)?;
    if !certificate.feasible {
        if cfg.exploratory {
            eprintln!(
                "warning: rate certificate infeasible (alpha = {}), continuing (exploratory)",
                certificate.alpha
            );
        } else {
            certificate.require_feasible()?;
        }
    }
    let operator = build_operator(&cfg.algorithm, problem.clone(), cfg.noise, cfg.steps)?;
    Ok(Prepared { problem, operator, certificate })
}

fn init_laws(cfg: &ExperimentConfig, op: &dyn RandomOperator) -> Result<(InitLaw, InitLaw)> {
    let shape = op.shape();
    let lift = |xs: &[f64]| shape.lift(DVector::from_row_slice(xs));
    match &cfg.init {
        InitConfig::Point { a, b } => Ok((InitLaw::Point(lift(a)?), InitLaw::Point(lift(b)?))),
        InitConfig::Gaussian { a, b, radius } => {
            if !(*radius >= 0.0) {
                return Err(Error::Config(format!("init radius must be >= 0, got {radius}")));
            }
            Ok((
                InitLaw::GaussianCloud { center: lift(a)?, radius: *radius },
                InitLaw::GaussianCloud { center: lift(b)?, radius: *radius },
            ))
        }
    }
}

fn simulate(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<CoupledTrajectory> {
    let divergence = cfg.resolve_divergence(&prepared.problem)?;
    let (init_a, init_b) = init_laws(cfg, prepared.operator.as_ref())?;
    let spec = CoupledRunSpec {
        operator: prepared.operator.as_ref(),
        init_a,
        init_b,
        steps: cfg.steps,
        replications: cfg.replications,
        divergence: &divergence,
        master_seed: cfg.seed,
        star: prepared.operator.star_lifting(),
        projection_radius: cfg.projection_radius,
        independent_draws: cfg.independent_draws,
    };
    run_coupled(&spec)
}

fn diverged_fraction(traj: &CoupledTrajectory) -> f64 {
    traj.diverged_count() as f64 / traj.replications.len() as f64
}

/// Least-squares slope fit of `ln(mean V_k)` over the trailing window;
/// returns `exp(slope)`.
pub fn alpha_empirical(traj: &CoupledTrajectory, fit_window: f64) -> Option<f64> {
    let k_start = ((1.0 - fit_window) * traj.horizon as f64).ceil() as usize;
    let pts: Vec<(f64, f64)> = (k_start..=traj.horizon)
        .filter_map(|k| {
            let (mean, _) = traj.mean_se(k).ok()?;
            (mean > 0.0).then(|| (k as f64, mean.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some(((n * sxy - sx * sy) / denom).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub final_mean_v: f64,
    pub final_se_v: f64,
    pub final_mean_v_star: Option<f64>,
    pub alpha_empirical: Option<f64>,
    pub diverged: usize,
    pub exit_code: i32,
    pub certificate: RateCertificate,
    pub config_hash: String,
    pub effective_config: ExperimentConfig,
}

/// `run`: simulate and summarize, without bound checking.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    base_dir: &Path,
) -> Result<(CoupledTrajectory, RunSummary)> {
    let prepared = prepare(cfg, base_dir)?;
    let traj = simulate(cfg, &prepared)?;
    let k_last = last_recorded_step(&traj);
    let (final_mean_v, final_se_v) = traj.mean_se(k_last)?;
    let final_mean_v_star = traj.mean_se_star(k_last).ok().map(|(m, _)| m);
    let exit_code = if diverged_fraction(&traj) > DIVERGED_FRACTION_LIMIT && !cfg.exploratory {
        EXIT_DIVERGED
    } else {
        EXIT_PASS
    };
    let summary = RunSummary {
        final_mean_v,
        final_se_v,
        final_mean_v_star,
        alpha_empirical: alpha_empirical(&traj, cfg.fit_window),
        diverged: traj.diverged_count(),
        exit_code,
        certificate: prepared.certificate,
        config_hash: cfg.hash(),
        effective_config: cfg.clone(),
    };
    Ok((traj, summary))
}

/// Largest k recorded by every non-diverged replication.
fn last_recorded_step(traj: &CoupledTrajectory) -> usize {
    traj.replications
        .iter()
        .filter(|r| !r.diverged)
        .map(|r| r.v.len().saturating_sub(1))
        .min()
        .unwrap_or(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationRow {
    pub k: usize,
    pub bound: f64,
    pub mean: f64,
    pub se: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinalReduction {
    /// Step at which the reduction is demanded.
    pub k: usize,
    pub initial_mean_x_dist: f64,
    pub mean_x_dist: f64,
    /// `1e-6 * initial`.
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub mode: VerificationMode,
    pub algorithm: String,
    pub certificate: RateCertificate,
    pub contraction: Option<Vec<VerificationRow>>,
    pub concentration: Option<Vec<VerificationRow>>,
    /// Count of per-step almost-sure violations, when that check applies.
    pub per_step_violations: Option<usize>,
    pub final_reduction: Option<FinalReduction>,
    pub diverged: usize,
    pub passed: bool,
    pub exit_code: i32,
    pub config_hash: String,
    pub effective_config: ExperimentConfig,
}

/// Target reduction of the concentration endgame check.
pub const CONCENTRATION_REDUCTION: f64 = 1e-6;

/// `verify`: simulate and check every induced bound at `mean <= bound + 3 SE`.
pub fn verify_experiment(
    cfg: &ExperimentConfig,
    base_dir: &Path,
) -> Result<(CoupledTrajectory, VerificationReport)> {
    let prepared = prepare(cfg, base_dir)?;
    prepared.certificate.require_feasible()?;
    let concentration_wanted = matches!(
        cfg.verification,
        VerificationMode::Concentration | VerificationMode::Both
    );
    let contraction_wanted = matches!(
        cfg.verification,
        VerificationMode::Contraction | VerificationMode::Both
    );
    if concentration_wanted {
        if !is_variance_reduced(&cfg.algorithm) {
            return Err(Error::Config(format!(
                "concentration verification applies to the variance-reduced algorithms, not {}",
                cfg.algorithm.kind_name()
            )));
        }
        let k_needed = concentration_horizon(prepared.certificate.alpha);
        if cfg.steps < k_needed {
            return Err(Error::Config(format!(
                "concentration mode needs steps >= ceil(log(1e-6)/log(alpha)) = {k_needed}, got {}",
                cfg.steps
            )));
        }
    }
    let traj = simulate(cfg, &prepared)?;
    if diverged_fraction(&traj) > DIVERGED_FRACTION_LIMIT {
        let report = VerificationReport {
            mode: cfg.verification,
            algorithm: cfg.algorithm.kind_name().to_string(),
            certificate: prepared.certificate,
            contraction: None,
            concentration: None,
            per_step_violations: None,
            final_reduction: None,
            diverged: traj.diverged_count(),
            passed: false,
            exit_code: EXIT_DIVERGED,
            config_hash: cfg.hash(),
            effective_config: cfg.clone(),
        };
        return Ok((traj, report));
    }

    let cert = &prepared.certificate;
    let mut passed = true;

    let contraction = if contraction_wanted {
        let (v0_pair, _) = traj.mean_se(0)?;
        // The Catalyst envelope is stated on the x-part value V(x0, x0'),
        // while the recorded pair divergence at k = 0 is
        // V(x0,x0') + (1-alpha) V(prev0,prev0') = (2-alpha) V(x0,x0')
        // under the canonical prev = x0 initialization.
        let v0 = match cert.bound {
            BoundKind::CatalystEnvelope { accel_alpha, .. } => v0_pair / (2.0 - accel_alpha),
            _ => v0_pair,
        };
        let rows: Vec<VerificationRow> = (0..=traj.horizon)
            .map(|k| -> Result<VerificationRow> {
                let (mean, se) = traj.mean_se(k)?;
                let bound = cert.bound_at(v0, k);
                let pass = mean <= bound + 3.0 * se;
                Ok(VerificationRow { k, bound, mean, se, pass })
            })
            .collect::<Result<_>>()?;
        passed &= rows.iter().all(|r| r.pass);
        Some(rows)
    } else {
        None
    };

    let per_step_violations = per_step_factor(cfg, cert).map(|factor| {
        let mut violations = 0usize;
        for trace in traj.replications.iter().filter(|r| !r.diverged) {
            for w in trace.v.windows(2) {
                if w[1] > factor * w[0] * (1.0 + PER_STEP_REL_TOL) {
                    violations += 1;
                }
            }
        }
        violations
    });
    if let Some(v) = per_step_violations {
        passed &= v == 0;
    }

    let (concentration, final_reduction) = if concentration_wanted {
        let (v0, _) = traj.mean_se_star(0)?;
        let rows: Vec<VerificationRow> = (0..=traj.horizon)
            .map(|k| -> Result<VerificationRow> {
                let (mean, se) = traj.mean_se_star(k)?;
                let bound = cert.bound_at(v0, k);
                let pass = mean <= bound + 3.0 * se;
                Ok(VerificationRow { k, bound, mean, se, pass })
            })
            .collect::<Result<_>>()?;
        passed &= rows.iter().all(|r| r.pass);
        let k_needed = concentration_horizon(cert.alpha);
        let (x0, _) = traj.mean_se_x_dist(0)?;
        let (xk, _) = traj.mean_se_x_dist(k_needed)?;
        let threshold = CONCENTRATION_REDUCTION * x0;
        let reduction = FinalReduction {
            k: k_needed,
            initial_mean_x_dist: x0,
            mean_x_dist: xk,
            threshold,
            pass: xk <= threshold,
        };
        passed &= reduction.pass;
        (Some(rows), Some(reduction))
    } else {
        (None, None)
    };

    let report = VerificationReport {
        mode: cfg.verification,
        algorithm: cfg.algorithm.kind_name().to_string(),
        certificate: prepared.certificate.clone(),
        contraction,
        concentration,
        per_step_violations,
        final_reduction,
        diverged: traj.diverged_count(),
        passed,
        exit_code: if passed { EXIT_PASS } else { EXIT_BOUND_VIOLATED },
        config_hash: cfg.hash(),
        effective_config: cfg.clone(),
    };
    Ok((traj, report))
}

/// `ceil(log(1e-6)/log(alpha))`: steps after which the geometric bound
/// crosses the concentration target.
pub fn concentration_horizon(alpha: f64) -> usize {
    (CONCENTRATION_REDUCTION.ln() / alpha.ln()).ceil() as usize
}

/// Replace every float in a JSON tree by its hex encoding (counts and other
/// integers stay numeric).
pub fn hexify_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("checked f64");
                *value = serde_json::Value::String(hexf::format(x));
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(hexify_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(hexify_json),
        _ => {}
    }
}

/// Serialize to pretty JSON, hex-encoding floats when asked.
pub fn to_output_json<T: Serialize>(value: &T, hex: bool) -> Result<String> {
    let mut v = serde_json::to_value(value)
        .map_err(|e| Error::Internal(format!("serialization failed: {e}")))?;
    if hex {
        hexify_json(&mut v);
    }
    serde_json::to_string_pretty(&v)
        .map_err(|e| Error::Internal(format!("serialization failed: {e}")))
}

/// Write `trajectory.csv` plus a JSON document into `dir`.
pub fn write_outputs<T: Serialize>(
    dir: &Path,
    traj: &CoupledTrajectory,
    doc_name: &str,
    doc: &T,
    hex: bool,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut csv = Vec::new();
    traj.write_csv(&mut csv, hex)?;
    std::fs::write(dir.join("trajectory.csv"), csv)?;
    std::fs::write(dir.join(doc_name), to_output_json(doc, hex)?)?;
    Ok(())
}
