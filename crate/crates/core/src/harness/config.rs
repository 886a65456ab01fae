//! Experiment configuration: one self-contained TOML or JSON file.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algorithms::AlgorithmConfig;
use crate::divergence::DivergenceSpec;
use crate::error::{Error, Result};
use crate::problems::{
    generate_nonlinear, generate_nonlinear_centered, generate_quadratic,
    generate_quadratic_centered, Composite, FiniteSumProblem, NoisyOracle,
};
use crate::rates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerificationMode {
    #[default]
    Contraction,
    Concentration,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Load a serialized instance file (path relative to the config file).
    File { path: String },
    Quadratic {
        d: usize,
        n: usize,
        c: f64,
        l: f64,
        seed: u64,
        /// Center every term's gradient at the optimizer (exact fixed point).
        #[serde(default)]
        centered: bool,
    },
    Nonlinear {
        d: usize,
        n: usize,
        c: f64,
        l: f64,
        seed: u64,
        #[serde(default)]
        centered: bool,
        #[serde(default)]
        composite: Option<Composite>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DivergenceConfig {
    SquaredEuclidean,
    WeightedQuadratic { matrix: Vec<Vec<f64>> },
    /// `sum_n (ds)' Q_n (ds)` over the instance's quadratic terms.
    QuadraticFormSum,
    /// SAGA proxy divergence; indices default to all of `[N]`, or the
    /// algorithm's subset S for HSAG.
    SagaProxy { b: f64 },
    OptimalityGap,
    /// Pair divergence over the optimality gap.
    CatalystPair { alpha: f64 },
    /// `ds' P ds` with `P` from the ASGD Lyapunov certificate.
    AsgdCertificate,
    Power { base: Box<DivergenceConfig>, p: f64 },
    Sum { left: Box<DivergenceConfig>, right: Box<DivergenceConfig> },
    PlusMetric { base: Box<DivergenceConfig>, p: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitConfig {
    /// Both chains start at fixed points.
    Point { a: Vec<f64>, b: Vec<f64> },
    /// Gaussian clouds of the given radius around the two centers.
    Gaussian { a: Vec<f64>, b: Vec<f64>, radius: f64 },
}

fn default_fit_window() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Outer steps (or epochs) K.
    pub steps: usize,
    /// Replications R.
    pub replications: usize,
    #[serde(default)]
    pub verification: VerificationMode,
    pub problem: ProblemConfig,
    /// Oracle noise for the oracle-based algorithms.
    #[serde(default)]
    pub noise: Option<NoisyOracle>,
    pub algorithm: AlgorithmConfig,
    pub divergence: DivergenceConfig,
    pub init: InitConfig,
    #[serde(default)]
    pub projection_radius: Option<f64>,
    /// Diagnostics only: drop the common-random-number coupling.
    #[serde(default)]
    pub independent_draws: bool,
    /// Run even when the rate certificate is infeasible (warn instead).
    #[serde(default)]
    pub exploratory: bool,
    /// Trailing fraction of the horizon used for the empirical-rate fit.
    #[serde(default = "default_fit_window")]
    pub fit_window: f64,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?,
            _ => toml::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.replications == 0 {
            return Err(Error::Config("steps and replications must be >= 1".into()));
        }
        if !(0.0 < self.fit_window && self.fit_window <= 1.0) {
            return Err(Error::Config(format!(
                "fit_window must lie in (0, 1], got {}",
                self.fit_window
            )));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build_problem(&self, base_dir: &Path) -> Result<Arc<FiniteSumProblem>> {
        let problem = match &self.problem {
            ProblemConfig::File { path } => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full).map_err(|e| {
                    Error::Config(format!("problem file {}: {e}", full.display()))
                })?;
                FiniteSumProblem::from_json(&text)?
            }
            ProblemConfig::Quadratic { d, n, c, l, seed, centered } => {
                if *centered {
                    generate_quadratic_centered(*d, *n, *c, *l, *seed)?
                } else {
                    generate_quadratic(*d, *n, *c, *l, *seed)?
                }
            }
            ProblemConfig::Nonlinear { d, n, c, l, seed, centered, composite } => {
                let comp = composite.unwrap_or(Composite::Zero);
                if *centered {
                    generate_nonlinear_centered(*d, *n, *c, *l, comp, *seed)?
                } else {
                    generate_nonlinear(*d, *n, *c, *l, comp, *seed)?
                }
            }
        };
        Ok(Arc::new(problem))
    }

    pub fn resolve_divergence(&self, problem: &Arc<FiniteSumProblem>) -> Result<DivergenceSpec> {
        resolve_divergence(&self.divergence, problem, &self.algorithm)
    }
}

fn resolve_divergence(
    cfg: &DivergenceConfig,
    problem: &Arc<FiniteSumProblem>,
    algo: &AlgorithmConfig,
) -> Result<DivergenceSpec> {
    match cfg {
        DivergenceConfig::SquaredEuclidean => Ok(DivergenceSpec::SquaredEuclidean),
        DivergenceConfig::WeightedQuadratic { matrix } => {
            let rows = matrix.len();
            if matrix.iter().any(|r| r.len() != rows) {
                return Err(Error::Config("weighted-quadratic matrix must be square".into()));
            }
            let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
            DivergenceSpec::weighted_quadratic(DMatrix::from_row_slice(rows, rows, &flat))
        }
        DivergenceConfig::QuadraticFormSum => {
            let mut sum = DMatrix::zeros(problem.d, problem.d);
            for term in &problem.terms {
                match term {
                    crate::problems::Term::Quadratic { q, .. } => sum += q,
                    _ => {
                        return Err(Error::Config(
                            "quadratic-form-sum needs an all-quadratic instance".into(),
                        ))
                    }
                }
            }
            DivergenceSpec::weighted_quadratic(sum)
        }
        DivergenceConfig::SagaProxy { b } => {
            let indices = match algo {
                AlgorithmConfig::Hsag { s, .. } => {
                    let mut s = s.clone();
                    s.sort_unstable();
                    s.dedup();
                    s
                }
                _ => (0..problem.n()).collect(),
            };
            DivergenceSpec::saga_proxy(*b, problem.clone(), indices)
        }
        DivergenceConfig::OptimalityGap => Ok(DivergenceSpec::optimality_gap(problem.clone())),
        DivergenceConfig::CatalystPair { alpha } => DivergenceSpec::catalyst_pair(
            DivergenceSpec::optimality_gap(problem.clone()),
            *alpha,
        ),
        DivergenceConfig::AsgdCertificate => {
            let AlgorithmConfig::Asgd { eta, alpha, beta } = algo else {
                return Err(Error::Config(
                    "asgd-certificate divergence needs the asgd algorithm".into(),
                ));
            };
            let (qbar, _) = problem.quadratic_mean().ok_or_else(|| {
                Error::Config("asgd-certificate divergence needs a quadratic instance".into())
            })?;
            let cert = rates::asgd_certificate(qbar, *eta, *alpha, *beta)?;
            DivergenceSpec::weighted_quadratic(cert.p)
        }
        DivergenceConfig::Power { base, p } => {
            DivergenceSpec::power(resolve_divergence(base, problem, algo)?, *p)
        }
        DivergenceConfig::Sum { left, right } => Ok(DivergenceSpec::sum(
            resolve_divergence(left, problem, algo)?,
            resolve_divergence(right, problem, algo)?,
        )),
        DivergenceConfig::PlusMetric { base, p } => {
            DivergenceSpec::plus_metric(resolve_divergence(base, problem, algo)?, *p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 42
steps = 50
replications = 20
verification = "contraction"

[problem]
kind = "quadratic"
d = 3
n = 5
c = 1.0
l = 2.0
seed = 7

[noise]
bound = 0.1
law = "uniform-ball"

[algorithm]
kind = "sgd-oracle"
eta = 0.05

[divergence]
kind = "squared-euclidean"

[init]
kind = "point"
a = [1.0, 0.0, 0.0]
b = [0.0, 1.0, 0.0]
"#;

    #[test]
    fn parses_sample_toml() {
        let cfg: ExperimentConfig = toml::from_str(SAMPLE).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 42);
        assert!(matches!(cfg.algorithm, AlgorithmConfig::SgdOracle { .. }));
        assert!(cfg.noise.is_some());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a: ExperimentConfig = toml::from_str(SAMPLE).unwrap();
        let b: ExperimentConfig = toml::from_str(SAMPLE).unwrap();
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.seed = 43;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn unknown_top_level_field_rejected() {
        let text = format!("{SAMPLE}\nbogus = 1\n");
        assert!(toml::from_str::<ExperimentConfig>(&text).is_err());
    }

    #[test]
    fn divergence_resolution_saga_indices_follow_algorithm() {
        let cfg: ExperimentConfig = toml::from_str(SAMPLE).unwrap();
        let problem = cfg.build_problem(Path::new(".")).unwrap();
        let saga_algo = AlgorithmConfig::Saga { eta: 0.1, b: 0.02 };
        let spec =
            resolve_divergence(&DivergenceConfig::SagaProxy { b: 0.02 }, &problem, &saga_algo)
                .unwrap();
        match spec {
            DivergenceSpec::SagaProxy { indices, .. } => assert_eq!(indices.len(), 5),
            other => panic!("unexpected divergence {other:?}"),
        }
    }
}
