//! SAGA: variance reduction through a table of stored proxy points.
//!
//! State is `(x, (phi_n)_{n in [N]})`. On drawing index `I`,
//! `x+ = x - eta (grad f_I(x) - grad f_I(phi_I) + mean_n grad f_n(phi_n))`
//! and `phi_I` is refreshed to the pre-update `x`. The mean-gradient term is
//! recomputed from the table each step (same summation order everywhere) so
//! the HSAG regression identity holds bit-for-bit.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operators::{DrawKind, DrawSignature, RandomOperator, RandomnessDraw, StepCtx};
use crate::problems::FiniteSumProblem;
use crate::state::{LiftedState, ProxyTable, StateShape};

use super::vr_step;

pub struct Saga {
    problem: Arc<FiniteSumProblem>,
    eta: f64,
}

impl Saga {
    pub fn new(problem: Arc<FiniteSumProblem>, eta: f64) -> Self {
        Saga { problem, eta }
    }
}

impl RandomOperator for Saga {
    fn shape(&self) -> StateShape {
        StateShape {
            dim: self.problem.d,
            has_prev: false,
            proxy_indices: Some((0..self.problem.n()).collect()),
        }
    }

    fn signature(&self) -> DrawSignature {
        DrawSignature {
            per_inner: DrawKind::Indices { count: 1, n: self.problem.n() },
            epoch: None,
        }
    }

    fn apply(
        &self,
        state: &LiftedState,
        draws: &[RandomnessDraw],
        _ctx: &StepCtx,
    ) -> Result<LiftedState> {
        let draw = super::sgd::single(draws)?;
        let &[i] = draw.indices.as_slice() else {
            return Err(Error::Shape("saga expects exactly one sampled index".into()));
        };
        let table = state
            .proxies
            .as_ref()
            .ok_or_else(|| Error::Shape("saga state needs a proxy table".into()))?;
        let mean = self.problem.mean_grad_at(|n| &table.points[n]);
        let g_x = self.problem.term_grad(i, &state.x);
        let g_anchor = self.problem.term_grad(i, &table.points[i]);
        let next_x = vr_step(&state.x, g_x, g_anchor, &mean, self.eta);
        let mut points = table.points.clone();
        points[i] = state.x.clone();
        Ok(LiftedState::with_proxies(
            next_x,
            ProxyTable { indices: table.indices.clone(), points },
        ))
    }

    fn star_lifting(&self) -> Option<LiftedState> {
        let xs = self.problem.optimizer.x_star.clone();
        let table = ProxyTable::constant((0..self.problem.n()).collect(), &xs).ok()?;
        Some(LiftedState::with_proxies(xs, table))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::step;
    use crate::problems::{generate_quadratic_centered, Composite, Optimizer, Term};
    use nalgebra::{DMatrix, DVector};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn draw(i: usize) -> RandomnessDraw {
        RandomnessDraw { indices: vec![i], noise: None }
    }

    #[test]
    fn star_lifting_is_fixed_for_every_draw() {
        let p = Arc::new(generate_quadratic_centered(3, 5, 0.5, 2.0, 10).unwrap());
        let op = Saga::new(p, 0.1);
        let star = op.star_lifting().unwrap();
        for i in 0..5 {
            let out = step(&op, &star, &draw(i)).unwrap();
            assert!(out.identical(&star), "draw {i} moved the star lifting");
        }
    }

    #[test]
    fn single_term_reduces_to_gradient_tracking() {
        // N = 1: the update is a plain gradient step on f_1 and the proxy
        // tracks the previous iterate.
        let term = Term::Quadratic {
            q: DMatrix::from_row_slice(1, 1, &[2.0]),
            a: v(&[0.0]),
            b: 0.0,
        };
        let p = Arc::new(
            FiniteSumProblem::assemble(
                1,
                vec![term],
                2.0,
                2.0,
                Composite::Zero,
                Optimizer { x_star: v(&[0.0]), residual: 0.0 },
                0,
            )
            .unwrap(),
        );
        let eta = 0.25;
        let op = Saga::new(p.clone(), eta);
        let table = ProxyTable::constant(vec![0], &v(&[0.7])).unwrap();
        let s = LiftedState::with_proxies(v(&[1.0]), table);
        let out = step(&op, &s, &draw(0)).unwrap();
        // grad f(x) - grad f(phi) + grad f(phi) = grad f(x) = 2x.
        assert!((out.x[0] - (1.0 - eta * 2.0)).abs() < 1e-15);
        assert_eq!(out.proxies.unwrap().points[0][0], 1.0);
    }

    #[test]
    fn three_hand_steps_scalar_instance() {
        // d = 1, N = 2, f_n = (q_n/2) x^2 with q = (1, 2); eta = 0.1.
        // Hand-simulated table for the draw sequence I = 1, 0, 1.
        let mk = |q: f64| Term::Quadratic {
            q: DMatrix::from_row_slice(1, 1, &[q]),
            a: v(&[0.0]),
            b: 0.0,
        };
        let p = Arc::new(
            FiniteSumProblem::assemble(
                1,
                vec![mk(1.0), mk(2.0)],
                1.0,
                2.0,
                Composite::Zero,
                Optimizer { x_star: v(&[0.0]), residual: 0.0 },
                0,
            )
            .unwrap(),
        );
        let eta = 0.1;
        let op = Saga::new(p, eta);
        let mut s = LiftedState::with_proxies(
            v(&[1.0]),
            ProxyTable::new(vec![0, 1], vec![v(&[1.0]), v(&[1.0])]).unwrap(),
        );
        // By hand, with g_n(x) = q_n x and mean = (g_0(phi_0) + g_1(phi_1))/2:
        // step 1 (I=1): x=1, phi=(1,1): mean = (1 + 2)/2 = 1.5;
        //   x+ = 1 - 0.1 (2*1 - 2*1 + 1.5) = 0.85; phi -> (1, 1).
        // wait: phi_1 refreshes to the pre-update x = 1 (unchanged value).
        // step 2 (I=0): x=0.85, phi=(1,1): mean = 1.5;
        //   x+ = 0.85 - 0.1 (0.85 - 1 + 1.5) = 0.715; phi -> (0.85, 1).
        // step 3 (I=1): x=0.715, phi=(0.85,1): mean = (0.85 + 2)/2 = 1.425;
        //   x+ = 0.715 - 0.1 (2*0.715 - 2*1 + 1.425) = 0.6295; phi -> (0.85, 0.715).
        for (i, expect) in [(1usize, 0.85), (0, 0.715), (1, 0.6295)] {
            s = step(&op, &s, &draw(i)).unwrap();
            assert!((s.x[0] - expect).abs() < 1e-12, "got {}, want {expect}", s.x[0]);
        }
        let table = s.proxies.unwrap();
        assert!((table.points[0][0] - 0.85).abs() < 1e-12);
        assert!((table.points[1][0] - 0.715).abs() < 1e-12);
    }
}
