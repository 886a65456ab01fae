//! Oracle-based accelerated SGD on quadratics.
//!
//! State is the pair `(x_k, x_{k-1})`. With extrapolation point
//! `y = (1+alpha) x - alpha prev`, the update is
//! `x+ = (1+beta) x - beta prev - eta (Qbar y + abar + eps)`.
//! `alpha = beta` recovers classical ASGD, `alpha = 0` the stochastic
//! heavy-ball method.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::{DrawKind, DrawSignature, RandomOperator, RandomnessDraw, StepCtx};
use crate::problems::{FiniteSumProblem, NoisyOracle};
use crate::state::{LiftedState, StateShape};

pub struct Asgd {
    problem: Arc<FiniteSumProblem>,
    qbar: DMatrix<f64>,
    abar: DVector<f64>,
    eta: f64,
    alpha: f64,
    beta: f64,
    oracle: NoisyOracle,
}

impl Asgd {
    pub fn new(
        problem: Arc<FiniteSumProblem>,
        eta: f64,
        alpha: f64,
        beta: f64,
        oracle: NoisyOracle,
    ) -> Result<Self> {
        let (qbar, abar) = problem
            .quadratic_mean()
            .map(|(q, a)| (q.clone(), a.clone()))
            .ok_or_else(|| Error::Parameter("asgd is stated for the quadratic case".into()))?;
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Parameter(format!("asgd {name} must lie in [0,1), got {v}")));
            }
        }
        Ok(Asgd { problem, qbar, abar, eta, alpha, beta, oracle })
    }
}

impl RandomOperator for Asgd {
    fn shape(&self) -> StateShape {
        StateShape { dim: self.problem.d, has_prev: true, proxy_indices: None }
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
        let draw = super::sgd::single(draws)?;
        let eps = draw
            .noise
            .as_ref()
            .ok_or_else(|| Error::Shape("asgd draw is missing its noise vector".into()))?;
        let prev = state
            .prev
            .as_ref()
            .ok_or_else(|| Error::Shape("asgd state needs (x, prev)".into()))?;
        let y = &state.x * (1.0 + self.alpha) - prev * self.alpha;
        let drive = &self.qbar * y + &self.abar + eps;
        let next = &state.x * (1.0 + self.beta) - prev * self.beta - drive * self.eta;
        Ok(LiftedState::pair(next, state.x.clone()))
    }

    fn star_lifting(&self) -> Option<LiftedState> {
        let xs = self.problem.optimizer.x_star.clone();
        Some(LiftedState::pair(xs.clone(), xs))
    }
}
