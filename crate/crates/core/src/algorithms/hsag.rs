//! HSAG: SAGA-type updates on an index subset S, SVRG-type anchoring on the
//! complement.
//!
//! Outer state `(x, (phi_n)_{n in S})`. Each epoch initializes an inner table
//! over all of [N] with `phi~_n = phi_n` for `n in S` and `phi~_n = x_k` for
//! `n` in the complement, runs `tau` SAGA-style inner steps that refresh
//! proxies only for drawn indices in S, and projects back to `(x~, S-table)`.
//! `S = [N]` with one inner step per epoch is exactly SAGA; `S` empty is
//! exactly SVRG.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operators::{DrawKind, DrawSignature, EpochLen, RandomOperator, RandomnessDraw, StepCtx};
use crate::problems::FiniteSumProblem;
use crate::state::{LiftedState, ProxyTable, StateShape};

use super::vr_step;

pub struct Hsag {
    problem: Arc<FiniteSumProblem>,
    eta: f64,
    /// Sorted SAGA-type index subset.
    s_set: Vec<usize>,
    epoch: EpochLen,
}

impl Hsag {
    pub fn new(
        problem: Arc<FiniteSumProblem>,
        eta: f64,
        mut s_set: Vec<usize>,
        epoch: EpochLen,
    ) -> Result<Self> {
        s_set.sort_unstable();
        s_set.dedup();
        if s_set.iter().any(|&n| n >= problem.n()) {
            return Err(Error::Parameter(format!(
                "hsag subset S contains an index outside [0, {})",
                problem.n()
            )));
        }
        Ok(Hsag { problem, eta, s_set, epoch })
    }

    fn in_s(&self, n: usize) -> bool {
        self.s_set.binary_search(&n).is_ok()
    }
}

impl RandomOperator for Hsag {
    fn shape(&self) -> StateShape {
        StateShape {
            dim: self.problem.d,
            has_prev: false,
            proxy_indices: Some(self.s_set.clone()),
        }
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
            return Err(Error::Parameter("hsag epoch needs at least one inner draw".into()));
        }
        let outer_table = state
            .proxies
            .as_ref()
            .ok_or_else(|| Error::Shape("hsag state needs its S proxy table".into()))?;
        // Inner table over all of [N]: S entries carried over, the rest
        // anchored at x_k.
        let mut inner_points: Vec<_> = (0..self.problem.n())
            .map(|n| match outer_table.position(n) {
                Some(pos) => outer_table.points[pos].clone(),
                None => state.x.clone(),
            })
            .collect();
        let mut x_inner = state.x.clone();
        for draw in draws {
            let &[i] = draw.indices.as_slice() else {
                return Err(Error::Shape("hsag inner draw needs exactly one index".into()));
            };
            let mean = self.problem.mean_grad_at(|n| &inner_points[n]);
            let g_x = self.problem.term_grad(i, &x_inner);
            let g_anchor = self.problem.term_grad(i, &inner_points[i]);
            let next = vr_step(&x_inner, g_x, g_anchor, &mean, self.eta);
            if self.in_s(i) {
                inner_points[i] = x_inner.clone();
            }
            x_inner = next;
        }
        let points = self.s_set.iter().map(|&n| inner_points[n].clone()).collect();
        Ok(LiftedState::with_proxies(
            x_inner,
            ProxyTable { indices: self.s_set.clone(), points },
        ))
    }

    fn star_lifting(&self) -> Option<LiftedState> {
        let xs = self.problem.optimizer.x_star.clone();
        let table = ProxyTable::constant(self.s_set.clone(), &xs).ok()?;
        Some(LiftedState::with_proxies(xs, table))
    }
}
