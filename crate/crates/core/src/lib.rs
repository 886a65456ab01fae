//! Constant-stepsize recursive stochastic algorithms as iterated random
//! operators.
//!
//! The crate builds strongly convex finite-sum problems, runs eight
//! constant-stepsize algorithms (SGD with a noisy oracle, prox-SGD, ASGD,
//! SAGA, SVRG, ASVRG, HSAG, Catalyst) as coupled Markov chains on lifted
//! state spaces, computes the closed-form contraction coefficients each
//! method admits, and checks the induced geometric bounds against
//! common-random-number simulations. A small exact optimal-transport solver
//! evaluates Wasserstein-style divergences between discrete measures at desk
//! scale.

pub mod algorithms;
pub mod divergence;
pub mod error;
pub mod harness;
pub mod hexf;
pub mod linalg;
pub mod operators;
pub mod problems;
pub mod rates;
pub mod rng;
pub mod state;
pub mod wasserstein;

pub use error::{Error, Result};

/// Re-export of the linear-algebra backend used in public signatures.
pub use nalgebra;
