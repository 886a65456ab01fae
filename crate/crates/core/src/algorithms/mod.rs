//! Operator factories for the eight algorithms.
//!
//! Each algorithm is a [`RandomOperator`](crate::operators::RandomOperator)
//! over its own lifting. The variance-reduced family (SAGA, SVRG, ASVRG,
//! HSAG) shares one gradient-step primitive so that the regression
//! identities between them hold with identical floating-point arithmetic,
//! not just to a tolerance.

mod asgd;
mod catalyst;
mod hsag;
mod saga;
mod sgd;
mod svrg;

pub use asgd::Asgd;
pub use catalyst::Catalyst;
pub use hsag::Hsag;
pub use saga::Saga;
pub use sgd::{SgdOracle, SgdProx};
pub use svrg::{Asvrg, Svrg};

use std::sync::Arc;

use nalgebra::DVector;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::operators::{EpochLen, RandomOperator};
use crate::problems::{FiniteSumProblem, NoisyOracle};

/// One variance-reduced gradient step
/// `x - eta (g_x - g_anchor + mean)`, written once so every caller gets the
/// same floating-point result for the same inputs.
pub(crate) fn vr_step(
    x: &DVector<f64>,
    g_x: DVector<f64>,
    g_anchor: DVector<f64>,
    mean: &DVector<f64>,
    eta: f64,
) -> DVector<f64> {
    let correction = g_x - g_anchor + mean;
    x - correction * eta
}

/// Epoch-length configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EpochConfig {
    /// Fixed length `tau_k = m`.
    Fixed { m: usize },
    /// Geometric stopping times with mean `m`, capped at `10 m`.
    Geometric { m: usize },
}

impl EpochConfig {
    pub fn to_len(self) -> Result<EpochLen> {
        let m = match self {
            EpochConfig::Fixed { m } | EpochConfig::Geometric { m } => m,
        };
        if m == 0 {
            return Err(Error::Parameter("epoch length must be >= 1".into()));
        }
        Ok(match self {
            EpochConfig::Fixed { m } => EpochLen::Fixed(m),
            EpochConfig::Geometric { m } => EpochLen::Geometric { mean: m },
        })
    }

    pub fn mean(self) -> usize {
        match self {
            EpochConfig::Fixed { m } | EpochConfig::Geometric { m } => m,
        }
    }
}

/// Algorithm selection plus its parameters. Unknown parameters are a hard
/// error; nothing here has a silent default.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmConfig {
    SgdOracle { eta: f64 },
    SgdProx { eta: f64, batch: usize, enumerate_full: bool },
    Asgd { eta: f64, alpha: f64, beta: f64 },
    Saga { eta: f64, b: f64 },
    Svrg { eta: f64, epoch: EpochConfig, kappa: Option<f64> },
    Asvrg { eta: f64, theta: f64, epoch: EpochConfig },
    Hsag { eta: f64, b: f64, s: Vec<usize>, epoch: EpochConfig },
    Catalyst { theta: f64, alpha: f64, inner_cap: usize },
}

impl AlgorithmConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AlgorithmConfig::SgdOracle { .. } => "sgd-oracle",
            AlgorithmConfig::SgdProx { .. } => "sgd-prox",
            AlgorithmConfig::Asgd { .. } => "asgd",
            AlgorithmConfig::Saga { .. } => "saga",
            AlgorithmConfig::Svrg { .. } => "svrg",
            AlgorithmConfig::Asvrg { .. } => "asvrg",
            AlgorithmConfig::Hsag { .. } => "hsag",
            AlgorithmConfig::Catalyst { .. } => "catalyst",
        }
    }
}

const DEFAULT_INNER_CAP: usize = 200_000;

// Serde for AlgorithmConfig is hand-routed: internally tagged enums silently
// drop deny_unknown_fields, and a typo like `thetta = 0.5` must fail loudly
// rather than fall back to anything.
mod params {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct SgdOracleP {
        pub eta: f64,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct SgdProxP {
        pub eta: f64,
        pub batch: usize,
        #[serde(default)]
        pub enumerate_full: bool,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct AsgdP {
        pub eta: f64,
        pub alpha: f64,
        pub beta: f64,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct SagaP {
        pub eta: f64,
        pub b: f64,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct SvrgP {
        pub eta: f64,
        pub epoch: EpochConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub kappa: Option<f64>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct AsvrgP {
        pub eta: f64,
        pub theta: f64,
        pub epoch: EpochConfig,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct HsagP {
        pub eta: f64,
        pub b: f64,
        pub s: Vec<usize>,
        pub epoch: EpochConfig,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct CatalystP {
        pub theta: f64,
        pub alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub inner_cap: Option<usize>,
    }
}

impl Serialize for AlgorithmConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde_json::{json, Value};
        let mut value = match self.clone() {
            AlgorithmConfig::SgdOracle { eta } => {
                serde_json::to_value(params::SgdOracleP { eta })
            }
            AlgorithmConfig::SgdProx { eta, batch, enumerate_full } => {
                serde_json::to_value(params::SgdProxP { eta, batch, enumerate_full })
            }
            AlgorithmConfig::Asgd { eta, alpha, beta } => {
                serde_json::to_value(params::AsgdP { eta, alpha, beta })
            }
            AlgorithmConfig::Saga { eta, b } => serde_json::to_value(params::SagaP { eta, b }),
            AlgorithmConfig::Svrg { eta, epoch, kappa } => {
                serde_json::to_value(params::SvrgP { eta, epoch, kappa })
            }
            AlgorithmConfig::Asvrg { eta, theta, epoch } => {
                serde_json::to_value(params::AsvrgP { eta, theta, epoch })
            }
            AlgorithmConfig::Hsag { eta, b, s, epoch } => {
                serde_json::to_value(params::HsagP { eta, b, s, epoch })
            }
            AlgorithmConfig::Catalyst { theta, alpha, inner_cap } => {
                serde_json::to_value(params::CatalystP { theta, alpha, inner_cap: Some(inner_cap) })
            }
        }
        .map_err(serde::ser::Error::custom)?;
        value
            .as_object_mut()
            .expect("algorithm params serialize to an object")
            .insert("kind".into(), json!(self.kind_name()));
        Value::serialize(&value, s)
    }
}

impl<'de> Deserialize<'de> for AlgorithmConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mut value = serde_json::Value::deserialize(d)?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| D::Error::custom("algorithm config must be a table"))?;
        let kind = obj
            .remove("kind")
            .and_then(|v| v.as_str().map(str::to_string))
            .ok_or_else(|| D::Error::custom("algorithm config needs a string `kind`"))?;
        let rest = serde_json::Value::Object(std::mem::take(obj));
        let parse = |label: &str, e: serde_json::Error| {
            D::Error::custom(format!("algorithm `{label}`: {e}"))
        };
        Ok(match kind.as_str() {
            "sgd-oracle" => {
                let p: params::SgdOracleP =
                    serde_json::from_value(rest).map_err(|e| parse("sgd-oracle", e))?;
                AlgorithmConfig::SgdOracle { eta: p.eta }
            }
            "sgd-prox" => {
                let p: params::SgdProxP =
                    serde_json::from_value(rest).map_err(|e| parse("sgd-prox", e))?;
                AlgorithmConfig::SgdProx {
                    eta: p.eta,
                    batch: p.batch,
                    enumerate_full: p.enumerate_full,
                }
            }
            "asgd" => {
                let p: params::AsgdP = serde_json::from_value(rest).map_err(|e| parse("asgd", e))?;
                AlgorithmConfig::Asgd { eta: p.eta, alpha: p.alpha, beta: p.beta }
            }
            "saga" => {
                let p: params::SagaP = serde_json::from_value(rest).map_err(|e| parse("saga", e))?;
                AlgorithmConfig::Saga { eta: p.eta, b: p.b }
            }
            "svrg" => {
                let p: params::SvrgP = serde_json::from_value(rest).map_err(|e| parse("svrg", e))?;
                AlgorithmConfig::Svrg { eta: p.eta, epoch: p.epoch, kappa: p.kappa }
            }
            "asvrg" => {
                let p: params::AsvrgP =
                    serde_json::from_value(rest).map_err(|e| parse("asvrg", e))?;
                AlgorithmConfig::Asvrg { eta: p.eta, theta: p.theta, epoch: p.epoch }
            }
            "hsag" => {
                let p: params::HsagP = serde_json::from_value(rest).map_err(|e| parse("hsag", e))?;
                AlgorithmConfig::Hsag { eta: p.eta, b: p.b, s: p.s, epoch: p.epoch }
            }
            "catalyst" => {
                let p: params::CatalystP =
                    serde_json::from_value(rest).map_err(|e| parse("catalyst", e))?;
                AlgorithmConfig::Catalyst {
                    theta: p.theta,
                    alpha: p.alpha,
                    inner_cap: p.inner_cap.unwrap_or(DEFAULT_INNER_CAP),
                }
            }
            other => {
                return Err(D::Error::custom(format!("unknown algorithm kind `{other}`")))
            }
        })
    }
}

fn require_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) {
        return Err(Error::Parameter(format!("step size eta must be > 0, got {eta}")));
    }
    Ok(())
}

fn require_zero_composite(problem: &FiniteSumProblem, algo: &str) -> Result<()> {
    if !problem.composite.is_zero() {
        return Err(Error::Parameter(format!(
            "{algo} is defined without a prox step; it requires a Zero composite \
             (the stored-gradient update does not fix the composite optimizer)"
        )));
    }
    Ok(())
}

/// Build the operator for `config` over `problem`. Oracle-based algorithms
/// need `oracle`; Catalyst needs the run horizon for its parameter schedule.
pub fn build_operator(
    config: &AlgorithmConfig,
    problem: Arc<FiniteSumProblem>,
    oracle: Option<NoisyOracle>,
    horizon: usize,
) -> Result<Box<dyn RandomOperator>> {
    match config {
        AlgorithmConfig::SgdOracle { eta } => {
            require_eta(*eta)?;
            let oracle = oracle.ok_or_else(|| {
                Error::Config("sgd-oracle needs a problem.noise oracle".into())
            })?;
            Ok(Box::new(SgdOracle::new(problem, *eta, oracle)?))
        }
        AlgorithmConfig::SgdProx { eta, batch, enumerate_full } => {
            require_eta(*eta)?;
            Ok(Box::new(SgdProx::new(problem, *eta, *batch, *enumerate_full)?))
        }
        AlgorithmConfig::Asgd { eta, alpha, beta } => {
            require_eta(*eta)?;
            let oracle = oracle
                .ok_or_else(|| Error::Config("asgd needs a problem.noise oracle".into()))?;
            Ok(Box::new(Asgd::new(problem, *eta, *alpha, *beta, oracle)?))
        }
        AlgorithmConfig::Saga { eta, .. } => {
            require_eta(*eta)?;
            require_zero_composite(&problem, "saga")?;
            Ok(Box::new(Saga::new(problem, *eta)))
        }
        AlgorithmConfig::Svrg { eta, epoch, .. } => {
            require_eta(*eta)?;
            require_zero_composite(&problem, "svrg")?;
            Ok(Box::new(Svrg::new(problem, *eta, epoch.to_len()?)))
        }
        AlgorithmConfig::Asvrg { eta, theta, epoch } => {
            require_eta(*eta)?;
            Ok(Box::new(Asvrg::new(problem, *eta, *theta, epoch.to_len()?)?))
        }
        AlgorithmConfig::Hsag { eta, s, epoch, .. } => {
            require_eta(*eta)?;
            require_zero_composite(&problem, "hsag")?;
            Ok(Box::new(Hsag::new(problem, *eta, s.clone(), epoch.to_len()?)?))
        }
        AlgorithmConfig::Catalyst { theta, alpha, inner_cap } => {
            Ok(Box::new(Catalyst::new(problem, *theta, *alpha, horizon, *inner_cap)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_algorithm_params_are_rejected() {
        let toml_text = "kind = \"saga\"\neta = 0.1\nb = 0.02\nbogus = 3\n";
        let parsed: std::result::Result<AlgorithmConfig, _> = toml::from_str(toml_text);
        assert!(parsed.is_err(), "unknown field must be a hard error");
    }

    #[test]
    fn missing_required_param_is_rejected() {
        let toml_text = "kind = \"saga\"\neta = 0.1\n"; // b missing
        let parsed: std::result::Result<AlgorithmConfig, _> = toml::from_str(toml_text);
        assert!(parsed.is_err(), "missing b must be a hard error, not a default");
    }

    #[test]
    fn round_trips_through_toml_and_json() {
        let cfg = AlgorithmConfig::Hsag {
            eta: 0.1,
            b: 0.02,
            s: vec![0, 1, 4],
            epoch: EpochConfig::Fixed { m: 5 },
        };
        let json = serde_json::to_string(&cfg).unwrap();
        let back: AlgorithmConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        let toml_text = toml::to_string(&cfg).unwrap();
        let back: AlgorithmConfig = toml::from_str(&toml_text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn catalyst_inner_cap_defaults() {
        let cfg: AlgorithmConfig =
            toml::from_str("kind = \"catalyst\"\ntheta = 3.0\nalpha = 0.4\n").unwrap();
        assert_eq!(
            cfg,
            AlgorithmConfig::Catalyst { theta: 3.0, alpha: 0.4, inner_cap: DEFAULT_INNER_CAP }
        );
    }
}
