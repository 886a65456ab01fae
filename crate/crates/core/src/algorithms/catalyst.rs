//! Catalyst acceleration with a deterministic inner solver.
//!
//! State is `(x_k, x_{k-1})`. Epoch `k` minimizes
//! `psi_k(x) = f(x) + g(x) + (theta/2) |x - z_k|^2` with extrapolation
//! center `z_k = x_k + beta_k (x_k - x_{k-1})`, to accuracy
//! `eps_k = (2/9)(psi(x_0) - psi*)(1 - alpha)^k` measured in objective gap.
//! The inner solver is proximal gradient at step `1/(L+theta)`; its gap is
//! certified through the gradient-mapping bound
//! `psi_k(x+) - psi_k* <= |G(x)|^2 / (2 (c + theta))`, which needs no
//! precomputed `psi_k*`.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::operators::{DrawKind, DrawSignature, RandomOperator, RandomnessDraw, StepCtx};
use crate::problems::FiniteSumProblem;
use crate::rates::{catalyst_schedule, CatalystSchedule};
use crate::state::{LiftedState, StateShape};

pub struct Catalyst {
    problem: Arc<FiniteSumProblem>,
    theta: f64,
    schedule: CatalystSchedule,
    psi_star: f64,
    inner_cap: usize,
    /// Gap level below which the certificate is numerically
    /// indistinguishable from zero (set from the optimizer residual).
    gap_floor: f64,
}

impl Catalyst {
    pub fn new(
        problem: Arc<FiniteSumProblem>,
        theta: f64,
        alpha: f64,
        horizon: usize,
        inner_cap: usize,
    ) -> Result<Self> {
        let schedule = catalyst_schedule(problem.c, theta, alpha, horizon.max(1))?;
        let psi_star = problem.psi_star();
        let res = problem.optimizer.residual;
        let eps_scale = f64::EPSILON * (1.0 + psi_star.abs());
        let gap_floor = ((problem.l + theta) * res * res).max(eps_scale * eps_scale);
        Ok(Catalyst { problem, theta, schedule, psi_star, inner_cap, gap_floor })
    }

    pub fn schedule(&self) -> &CatalystSchedule {
        &self.schedule
    }

    /// Prox-gradient on `psi_k(.; z)` until the gradient-mapping certificate
    /// puts the gap at or below `eps`.
    fn solve_inner(&self, z: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
        let strong = self.problem.c + self.theta;
        let lip = self.problem.l + self.theta;
        let step = 1.0 / lip;
        let mut x = z.clone();
        for _ in 0..self.inner_cap {
            let grad = self.problem.full_grad_fast(&x) + (&x - z) * self.theta;
            let x_plus = self.problem.composite.prox(step, &(&x - grad * step));
            let gap_bound = (&x - &x_plus).norm_squared() / (step * step) / (2.0 * strong);
            if gap_bound <= eps.max(self.gap_floor) {
                return Ok(x_plus);
            }
            x = x_plus;
        }
        Err(Error::Certification(format!(
            "catalyst inner solver could not certify gap <= {eps:.3e} within {} iterations",
            self.inner_cap
        )))
    }
}

impl RandomOperator for Catalyst {
    fn shape(&self) -> StateShape {
        StateShape { dim: self.problem.d, has_prev: true, proxy_indices: None }
    }

    fn signature(&self) -> DrawSignature {
        DrawSignature { per_inner: DrawKind::Nothing, epoch: None }
    }

    fn apply(
        &self,
        state: &LiftedState,
        _draws: &[RandomnessDraw],
        ctx: &StepCtx,
    ) -> Result<LiftedState> {
        let prev = state
            .prev
            .as_ref()
            .ok_or_else(|| Error::Shape("catalyst state needs (x, prev)".into()))?;
        let k = ctx.k;
        if k >= self.schedule.beta.len() {
            return Err(Error::Parameter(format!(
                "catalyst schedule covers {} steps but step {k} was requested",
                self.schedule.beta.len()
            )));
        }
        let beta_k = self.schedule.beta[k];
        let z = &state.x + (&state.x - prev) * beta_k;
        let eps0 = ctx.inner_tolerance.ok_or_else(|| {
            Error::Config("catalyst needs the chain tolerance eps_0 in its step context".into())
        })?;
        let eps_k = eps0 * self.schedule.eps_ratio[k];
        let next = self.solve_inner(&z, eps_k)?;
        Ok(LiftedState::pair(next, state.x.clone()))
    }

    fn star_lifting(&self) -> Option<LiftedState> {
        let xs = self.problem.optimizer.x_star.clone();
        Some(LiftedState::pair(xs.clone(), xs))
    }

    fn chain_tolerance(&self, s0: &LiftedState) -> Option<f64> {
        Some((self.problem.psi(&s0.x) - self.psi_star).max(0.0))
    }
}
