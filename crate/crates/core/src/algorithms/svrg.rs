//! SVRG and its accelerated variant as epoch operators.
//!
//! Both anchor an epoch at the outer iterate `x_k`, precompute the full
//! gradient there once, and run `tau` variance-reduced inner steps. SVRG's
//! projection returns the last inner iterate; ASVRG carries the inner pair
//! `(x~, y~)` and returns `x~`.

use std::sync::Arc;



use crate::error::{Error, Result};
use crate::operators::{DrawKind, DrawSignature, EpochLen, RandomOperator, RandomnessDraw, StepCtx};
use crate::problems::FiniteSumProblem;
use crate::state::{LiftedState, StateShape};

use super::vr_step;

pub struct Svrg {
    problem: Arc<FiniteSumProblem>,
    eta: f64,
    epoch: EpochLen,
}

impl Svrg {
    pub fn new(problem: Arc<FiniteSumProblem>, eta: f64, epoch: EpochLen) -> Self {
        Svrg { problem, eta, epoch }
    }
}

impl RandomOperator for Svrg {
    fn shape(&self) -> StateShape {
        StateShape { dim: self.problem.d, has_prev: false, proxy_indices: None }
    }

    fn signature(&self) -> DrawSignature {
        DrawSignature {
            per_inner: DrawKind::Indices { count: 1, n: self.problem.n() },
            epoch: Some(self.epoch),
        }
    }

    fn apply(
        &self,
        state: &LiftedState,
        draws: &[RandomnessDraw],
        _ctx: &StepCtx,
    ) -> Result<LiftedState> {
        if draws.is_empty() {
            return Err(Error::Parameter("svrg epoch needs at least one inner draw".into()));
        }
        let anchor = &state.x;
        // Same value the per-step recomputation over a constant table gives,
        // so caching it preserves the HSAG(S = empty) identity.
        let anchor_mean = self.problem.mean_grad_at(|_| anchor);
        let mut inner = anchor.clone();
        for draw in draws {
            let &[i] = draw.indices.as_slice() else {
                return Err(Error::Shape("svrg inner draw needs exactly one index".into()));
            };
            let g_x = self.problem.term_grad(i, &inner);
            let g_anchor = self.problem.term_grad(i, anchor);
            inner = vr_step(&inner, g_x, g_anchor, &anchor_mean, self.eta);
        }
        Ok(LiftedState::point(inner))
    }

    fn star_lifting(&self) -> Option<LiftedState> {
        Some(LiftedState::point(self.problem.optimizer.x_star.clone()))
    }
}

/// Accelerated SVRG. The inner pair starts at `(x_k, x_k)`; each inner step
/// solves the linearized prox subproblem in closed form,
/// `y+ = prox_{(eta/theta) g}(y~ - (eta/theta)(grad f_I(x~) - grad f_I(x_k) + grad f(x_k)))`,
/// then sets `x~+ = (1-theta) x_k + theta y+`.
pub struct Asvrg {
    problem: Arc<FiniteSumProblem>,
    eta: f64,
    theta: f64,
    epoch: EpochLen,
}

impl Asvrg {
    pub fn new(
        problem: Arc<FiniteSumProblem>,
        eta: f64,
        theta: f64,
        epoch: EpochLen,
    ) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::Parameter(format!("asvrg needs theta in (0,1], got {theta}")));
        }
        Ok(Asvrg { problem, eta, theta, epoch })
    }
}

impl RandomOperator for Asvrg {
    fn shape(&self) -> StateShape {
        StateShape { dim: self.problem.d, has_prev: false, proxy_indices: None }
    }

    fn signature(&self) -> DrawSignature {
        DrawSignature {
            per_inner: DrawKind::Indices { count: 1, n: self.problem.n() },
            epoch: Some(self.epoch),
        }
    }

    fn apply(
        &self,
        state: &LiftedState,
        draws: &[RandomnessDraw],
        _ctx: &StepCtx,
    ) -> Result<LiftedState> {
        if draws.is_empty() {
            return Err(Error::Parameter("asvrg epoch needs at least one inner draw".into()));
        }
        let anchor = &state.x;
        let anchor_mean = self.problem.mean_grad_at(|_| anchor);
        let step = self.eta / self.theta;
        let mut x_inner = anchor.clone();
        let mut y_inner = anchor.clone();
        for draw in draws {
            let &[i] = draw.indices.as_slice() else {
                return Err(Error::Shape("asvrg inner draw needs exactly one index".into()));
            };
            let correction =
                self.problem.term_grad(i, &x_inner) - self.problem.term_grad(i, anchor)
                    + &anchor_mean;
            let y_next = self
                .problem
                .composite
                .prox(step, &(&y_inner - correction * step));
            x_inner = anchor * (1.0 - self.theta) + &y_next * self.theta;
            y_inner = y_next;
        }
        Ok(LiftedState::point(x_inner))
    }

    fn star_lifting(&self) -> Option<LiftedState> {
        Some(LiftedState::point(self.problem.optimizer.x_star.clone()))
    }
}
