//! Oracle SGD on quadratics and prox-SGD on finite sums.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::{DrawKind, DrawSignature, RandomOperator, RandomnessDraw, StepCtx};
use crate::problems::{FiniteSumProblem, NoisyOracle};
use crate::state::{LiftedState, StateShape};

/// `x <- x - eta (Qbar x + abar + eps)` with bounded zero-mean oracle noise.
/// Stated for the quadratic case only.
pub struct SgdOracle {
    problem: Arc<FiniteSumProblem>,
    qbar: DMatrix<f64>,
    abar: DVector<f64>,
    eta: f64,
    oracle: NoisyOracle,
}

impl SgdOracle {
    pub fn new(problem: Arc<FiniteSumProblem>, eta: f64, oracle: NoisyOracle) -> Result<Self> {
        let (qbar, abar) = problem
            .quadratic_mean()
            .map(|(q, a)| (q.clone(), a.clone()))
            .ok_or_else(|| {
                Error::Parameter(
                    "sgd-oracle is stated for the quadratic case; use sgd-prox on nonlinear sums"
                        .into(),
                )
            })?;
        Ok(SgdOracle { problem, qbar, abar, eta, oracle })
    }
}

impl RandomOperator for SgdOracle {
    fn shape(&self) -> StateShape {
        StateShape { dim: self.problem.d, has_prev: false, proxy_indices: None }
    }

    fn signature(&self) -> DrawSignature {
        DrawSignature { per_inner: DrawKind::Noise { dim: self.problem.d }, epoch: None }
    }

    fn noise_oracle(&self) -> Option<&NoisyOracle> {
        Some(&self.oracle)
    }

    fn apply(
        &self,
        state: &LiftedState,
        draws: &[RandomnessDraw],
        _ctx: &StepCtx,
    ) -> Result<LiftedState> {
        let draw = single(draws)?;
        let eps = draw
            .noise
            .as_ref()
            .ok_or_else(|| Error::Shape("sgd-oracle draw is missing its noise vector".into()))?;
        let drive = &self.qbar * &state.x + &self.abar + eps;
        Ok(LiftedState::point(&state.x - drive * self.eta))
    }

    fn star_lifting(&self) -> Option<LiftedState> {
        Some(LiftedState::point(self.problem.optimizer.x_star.clone()))
    }
}

/// `x <- prox_{eta g}(x - (eta/J) sum_j grad f_{I_j}(x))`.
pub struct SgdProx {
    problem: Arc<FiniteSumProblem>,
    eta: f64,
    batch: usize,
    /// Replace sampling by the full index sweep 0..N (then the step is the
    /// deterministic proximal-gradient step).
    enumerate_full: bool,
}

impl SgdProx {
    pub fn new(
        problem: Arc<FiniteSumProblem>,
        eta: f64,
        batch: usize,
        enumerate_full: bool,
    ) -> Result<Self> {
        if batch == 0 {
            return Err(Error::Parameter("sgd-prox needs batch J >= 1".into()));
        }
        if enumerate_full && batch != problem.n() {
            return Err(Error::Parameter(format!(
                "full enumeration needs batch = N = {}, got {batch}",
                problem.n()
            )));
        }
        Ok(SgdProx { problem, eta, batch, enumerate_full })
    }

    fn batch_gradient(&self, indices: &[usize], x: &DVector<f64>) -> DVector<f64> {
        let mut sum = DVector::zeros(self.problem.d);
        for &i in indices {
            sum += self.problem.term_grad(i, x);
        }
        sum / indices.len() as f64
    }
}

impl RandomOperator for SgdProx {
    fn shape(&self) -> StateShape {
        StateShape { dim: self.problem.d, has_prev: false, proxy_indices: None }
    }

    fn signature(&self) -> DrawSignature {
        DrawSignature {
            per_inner: DrawKind::Indices { count: self.batch, n: self.problem.n() },
            epoch: None,
        }
    }

    fn apply(
        &self,
        state: &LiftedState,
        draws: &[RandomnessDraw],
        _ctx: &StepCtx,
    ) -> Result<LiftedState> {
        let draw = single(draws)?;
        let enumerated: Vec<usize>;
        let indices: &[usize] = if self.enumerate_full {
            enumerated = (0..self.problem.n()).collect();
            &enumerated
        } else {
            if draw.indices.len() != self.batch {
                return Err(Error::Shape(format!(
                    "sgd-prox expected {} indices, got {}",
                    self.batch,
                    draw.indices.len()
                )));
            }
            &draw.indices
        };
        let grad = self.batch_gradient(indices, &state.x);
        let z = &state.x - grad * self.eta;
        Ok(LiftedState::point(self.problem.composite.prox(self.eta, &z)))
    }

    fn star_lifting(&self) -> Option<LiftedState> {
        Some(LiftedState::point(self.problem.optimizer.x_star.clone()))
    }
}

pub(super) fn single(draws: &[RandomnessDraw]) -> Result<&RandomnessDraw> {
    match draws {
        [d] => Ok(d),
        other => Err(Error::Shape(format!(
            "non-epoch operator expects exactly one draw, got {}",
            other.len()
        ))),
    }
}
