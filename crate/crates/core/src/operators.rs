//! The iterated-random-operator engine.
//!
//! One step of an algorithm is a deterministic function of the current
//! lifted state and a `RandomnessDraw`; epoch-based algorithms consume a
//! sequence of inner draws per outer step. Two coupled chains consume the
//! identical draw sequence (common random numbers), which is what every
//! pathwise contraction argument in this crate relies on.

use std::io::Write;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::divergence::DivergenceSpec;
use crate::error::{Error, Result};
use crate::hexf;
use crate::rng::{derive_stream, SplitMix64, StreamRole};
use crate::state::{LiftedState, StateShape};

/// One unit of operator randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomnessDraw {
    /// Sampled component indices (uniform on [0, N), with replacement).
    pub indices: Vec<usize>,
    /// Bounded zero-mean noise vector, when the operator uses an oracle.
    pub noise: Option<DVector<f64>>,
}

/// What one inner draw consists of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawKind {
    /// Deterministic operator.
    Nothing,
    /// `count` uniform indices over `[0, n)`.
    Indices { count: usize, n: usize },
    /// One noise vector of dimension `dim`.
    Noise { dim: usize },
}

impl DrawKind {
    pub fn sample(&self, rng: &mut SplitMix64, noise: Option<&crate::problems::NoisyOracle>) -> RandomnessDraw {
        match *self {
            DrawKind::Nothing => RandomnessDraw { indices: vec![], noise: None },
            DrawKind::Indices { count, n } => RandomnessDraw {
                indices: (0..count).map(|_| rng.random_range(0..n)).collect(),
                noise: None,
            },
            DrawKind::Noise { dim } => RandomnessDraw {
                indices: vec![],
                noise: Some(
                    noise
                        .expect("operator declared a noise draw but carries no oracle")
                        .sample(dim, rng),
                ),
            },
        }
    }
}

/// Epoch-length law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpochLen {
    Fixed(usize),
    /// Geometric stopping time on {1, 2, ...} with the given mean, capped at
    /// ten times the mean to bound runtime.
    Geometric { mean: usize },
}

impl EpochLen {
    pub fn sample(&self, rng: &mut SplitMix64) -> usize {
        match *self {
            EpochLen::Fixed(m) => m,
            EpochLen::Geometric { mean } => {
                let p = 1.0 / mean as f64;
                let u: f64 = rng.random();
                let tau = ((1.0 - u).ln() / (1.0 - p).ln()).ceil() as usize;
                tau.clamp(1, 10 * mean)
            }
        }
    }
}

/// Randomness signature of an operator: what one inner draw is, and whether
/// steps are epochs of several inner draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawSignature {
    pub per_inner: DrawKind,
    pub epoch: Option<EpochLen>,
}

/// Per-step context the engine passes to operators.
#[derive(Debug, Clone, Copy)]
pub struct StepCtx {
    /// Outer step (or epoch) index, for time-varying operators.
    pub k: usize,
    /// Chain-level inner tolerance scale (Catalyst's eps_0), fixed at
    /// trajectory start from the chain's initial state.
    pub inner_tolerance: Option<f64>,
}

impl StepCtx {
    pub fn at(k: usize) -> Self {
        StepCtx { k, inner_tolerance: None }
    }
}

pub trait RandomOperator: Send + Sync {
    /// Fixed state shape of the lifting.
    fn shape(&self) -> StateShape;

    /// Randomness consumed per outer step.
    fn signature(&self) -> DrawSignature;

    /// Apply one outer step. `draws` carries exactly the inner draws of this
    /// step (length 1 for non-epoch operators, tau for epochs). The output is
    /// a deterministic function of `(state, draws, ctx)`.
    fn apply(&self, state: &LiftedState, draws: &[RandomnessDraw], ctx: &StepCtx) -> Result<LiftedState>;

    /// Noise oracle used by `DrawKind::Noise` draws, when any.
    fn noise_oracle(&self) -> Option<&crate::problems::NoisyOracle> {
        None
    }

    /// Canonical lifting of the problem optimizer into this operator's
    /// state space, when the problem carries one.
    fn star_lifting(&self) -> Option<LiftedState> {
        None
    }

    /// Chain-level inner tolerance derived from the initial state
    /// (only Catalyst uses this).
    fn chain_tolerance(&self, _s0: &LiftedState) -> Option<f64> {
        None
    }
}

/// One-step application `s_{k+1} = T(s_k; draw)` for non-epoch operators.
pub fn step(
    op: &dyn RandomOperator,
    state: &LiftedState,
    draw: &RandomnessDraw,
) -> Result<LiftedState> {
    if op.signature().epoch.is_some() {
        return Err(Error::Parameter(
            "step() is for non-epoch operators; use run_epoch()".into(),
        ));
    }
    apply_checked(op, state, std::slice::from_ref(draw), &StepCtx::at(0))
}

/// Epoch application with an explicit sequence of inner draws.
pub fn run_epoch(
    op: &dyn RandomOperator,
    state: &LiftedState,
    inner_draws: &[RandomnessDraw],
) -> Result<LiftedState> {
    if inner_draws.is_empty() {
        return Err(Error::Parameter("epoch length must be >= 1".into()));
    }
    apply_checked(op, state, inner_draws, &StepCtx::at(0))
}

fn apply_checked(
    op: &dyn RandomOperator,
    state: &LiftedState,
    draws: &[RandomnessDraw],
    ctx: &StepCtx,
) -> Result<LiftedState> {
    state.check_shape(&op.shape())?;
    let out = op.apply(state, draws, ctx)?;
    if !out.is_finite() {
        return Err(Error::NonFinite(format!(
            "operator produced a non-finite state at step {}",
            ctx.k
        )));
    }
    Ok(out)
}

/// Radially rescale each state component onto the ball of radius `r`.
pub fn project_ball(state: &LiftedState, r: f64) -> LiftedState {
    let clamp = |v: &DVector<f64>| {
        let norm = v.norm();
        if norm > r {
            v * (r / norm)
        } else {
            v.clone()
        }
    };
    LiftedState {
        x: clamp(&state.x),
        prev: state.prev.as_ref().map(clamp),
        proxies: state.proxies.as_ref().map(|t| crate::state::ProxyTable {
            indices: t.indices.clone(),
            points: t.points.iter().map(clamp).collect(),
        }),
    }
}

/// Initial-state law for one chain.
#[derive(Debug, Clone)]
pub enum InitLaw {
    Point(LiftedState),
    /// `x0 = center.x + radius * z`, `z` standard Gaussian; lifted parts are
    /// rebuilt canonically from the sampled point (prev = x0, proxies = x0).
    GaussianCloud { center: LiftedState, radius: f64 },
}

impl InitLaw {
    fn sample(&self, rng: &mut SplitMix64) -> LiftedState {
        match self {
            InitLaw::Point(s) => s.clone(),
            InitLaw::GaussianCloud { center, radius } => {
                let d = center.x.len();
                let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let x = &center.x + z * *radius;
                LiftedState {
                    prev: center.prev.as_ref().map(|_| x.clone()),
                    proxies: center.proxies.as_ref().map(|t| {
                        crate::state::ProxyTable::constant(t.indices.clone(), &x)
                            .expect("center table is valid")
                    }),
                    x,
                }
            }
        }
    }
}

/// Per-replication record of the coupled run.
#[derive(Debug, Clone)]
pub struct ReplicationTrace {
    /// `V(s_k^(1), s_k^(2))` for `k = 0..=K` (truncated if diverged).
    pub v: Vec<f64>,
    /// `V(s_k^(1), s*)` when a star lifting is available.
    pub v_star: Option<Vec<f64>>,
    /// `|x_k^(1) - x*|^2` (iterate part only) when a star is available.
    pub x_dist: Option<Vec<f64>>,
    pub diverged: bool,
}

/// All replications of a coupled two-chain experiment.
#[derive(Debug, Clone)]
pub struct CoupledTrajectory {
    pub replications: Vec<ReplicationTrace>,
    /// Outer-step horizon K (full traces have K+1 rows).
    pub horizon: usize,
}

impl CoupledTrajectory {
    pub fn diverged_count(&self) -> usize {
        self.replications.iter().filter(|r| r.diverged).count()
    }

    /// Mean and standard error of `V_k` over non-diverged replications.
    pub fn mean_se(&self, k: usize) -> Result<(f64, f64)> {
        let vals: Vec<f64> = self
            .replications
            .iter()
            .filter(|r| !r.diverged)
            .map(|r| r.v[k])
            .collect();
        mean_se(&vals)
    }

    /// Mean and standard error of `V*_k` over non-diverged replications.
    pub fn mean_se_star(&self, k: usize) -> Result<(f64, f64)> {
        let vals: Vec<f64> = self
            .replications
            .iter()
            .filter(|r| !r.diverged)
            .filter_map(|r| r.v_star.as_ref().map(|vs| vs[k]))
            .collect();
        mean_se(&vals)
    }

    /// Mean and standard error of the iterate-part squared distance to `x*`.
    pub fn mean_se_x_dist(&self, k: usize) -> Result<(f64, f64)> {
        let vals: Vec<f64> = self
            .replications
            .iter()
            .filter(|r| !r.diverged)
            .filter_map(|r| r.x_dist.as_ref().map(|vs| vs[k]))
            .collect();
        mean_se(&vals)
    }

    /// CSV schema: `replication,k,V,V_star,diverged`.
    pub fn write_csv<W: Write>(&self, w: &mut W, hex: bool) -> std::io::Result<()> {
        let fmt = |x: f64| {
            if hex {
                hexf::format(x)
            } else {
                format!("{x}")
            }
        };
        writeln!(w, "replication,k,V,V_star,diverged")?;
        for (r, trace) in self.replications.iter().enumerate() {
            for (k, &v) in trace.v.iter().enumerate() {
                let star = trace
                    .v_star
                    .as_ref()
                    .map(|vs| fmt(vs[k]))
                    .unwrap_or_default();
                writeln!(w, "{r},{k},{},{star},{}", fmt(v), u8::from(trace.diverged))?;
            }
        }
        Ok(())
    }
}

pub(crate) fn mean_se(vals: &[f64]) -> Result<(f64, f64)> {
    if vals.is_empty() {
        return Err(Error::Parameter("no replications to aggregate".into()));
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return Ok((mean, 0.0));
    }
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Specification of a coupled run.
pub struct CoupledRunSpec<'a> {
    pub operator: &'a dyn RandomOperator,
    pub init_a: InitLaw,
    pub init_b: InitLaw,
    /// Outer steps (or epochs) K.
    pub steps: usize,
    pub replications: usize,
    pub divergence: &'a DivergenceSpec,
    pub master_seed: u64,
    /// Record `V(s_k, s*)` against this lifting.
    pub star: Option<LiftedState>,
    /// Project every component onto this ball after each outer step.
    pub projection_radius: Option<f64>,
    /// Diagnostics only: give chain B its own draw stream instead of the
    /// common-random-number coupling.
    pub independent_draws: bool,
}

/// Generate the inner-draw sequence of outer step `k` for replication `r`.
fn draws_for_step(
    op: &dyn RandomOperator,
    master: u64,
    r: u64,
    k: u64,
    role: StreamRole,
) -> Vec<RandomnessDraw> {
    let sig = op.signature();
    let tau = match sig.epoch {
        None => 1,
        Some(law) => {
            let mut rng = derive_stream(master, r, k, StreamRole::EpochLength);
            law.sample(&mut rng)
        }
    };
    let mut rng = derive_stream(master, r, k, role);
    (0..tau)
        .map(|_| sig.per_inner.sample(&mut rng, op.noise_oracle()))
        .collect()
}

/// Drive two chains through the identical operator sequence and record the
/// divergence between them (and to `s*` when given). Fully deterministic
/// given the master seed, independently of worker count.
pub fn run_coupled(spec: &CoupledRunSpec) -> Result<CoupledTrajectory> {
    if spec.steps == 0 || spec.replications == 0 {
        return Err(Error::Parameter("need steps >= 1 and replications >= 1".into()));
    }
    if let Some(r) = spec.projection_radius {
        if !(r > 0.0) {
            return Err(Error::Parameter(format!("projection radius must be > 0, got {r}")));
        }
    }
    let traces: Vec<Result<ReplicationTrace>> = (0..spec.replications)
        .into_par_iter()
        .map(|r| run_one_replication(spec, r as u64))
        .collect();
    let replications = traces.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CoupledTrajectory { replications, horizon: spec.steps })
}

fn run_one_replication(spec: &CoupledRunSpec, r: u64) -> Result<ReplicationTrace> {
    let op = spec.operator;
    let mut rng_a = derive_stream(spec.master_seed, r, 0, StreamRole::InitA);
    let mut rng_b = derive_stream(spec.master_seed, r, 0, StreamRole::InitB);
    let mut state_a = spec.init_a.sample(&mut rng_a);
    let mut state_b = spec.init_b.sample(&mut rng_b);
    state_a.check_shape(&op.shape())?;
    state_b.check_shape(&op.shape())?;

    let ctx_a_tol = op.chain_tolerance(&state_a);
    let ctx_b_tol = op.chain_tolerance(&state_b);

    let mut trace = ReplicationTrace {
        v: Vec::with_capacity(spec.steps + 1),
        v_star: spec.star.as_ref().map(|_| Vec::with_capacity(spec.steps + 1)),
        x_dist: spec.star.as_ref().map(|_| Vec::with_capacity(spec.steps + 1)),
        diverged: false,
    };
    let record = |trace: &mut ReplicationTrace, a: &LiftedState, b: &LiftedState| -> Result<()> {
        trace.v.push(spec.divergence.evaluate(a, b)?);
        if let Some(star) = spec.star.as_ref() {
            if let Some(vs) = trace.v_star.as_mut() {
                vs.push(spec.divergence.evaluate(a, star)?);
            }
            if let Some(xd) = trace.x_dist.as_mut() {
                xd.push((&a.x - &star.x).norm_squared());
            }
        }
        Ok(())
    };
    record(&mut trace, &state_a, &state_b)?;

    for k in 0..spec.steps {
        let draws = draws_for_step(op, spec.master_seed, r, k as u64, StreamRole::Draw);
        let draws_b: Vec<RandomnessDraw> = if spec.independent_draws {
            draws_for_step(op, spec.master_seed, r, k as u64, StreamRole::DrawAlt)
        } else {
            draws.clone()
        };
        let ctx_a = StepCtx { k, inner_tolerance: ctx_a_tol };
        let ctx_b = StepCtx { k, inner_tolerance: ctx_b_tol };
        let next_a = op.apply(&state_a, &draws, &ctx_a)?;
        let next_b = op.apply(&state_b, &draws_b, &ctx_b)?;
        state_a = next_a;
        state_b = next_b;
        if let Some(radius) = spec.projection_radius {
            state_a = project_ball(&state_a, radius);
            state_b = project_ball(&state_b, radius);
        }
        if !state_a.is_finite() || !state_b.is_finite() {
            trace.diverged = true;
            break;
        }
        record(&mut trace, &state_a, &state_b)?;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::StateShape;

    /// x <- a x + noise-free drift, as a trivially checkable operator.
    struct Scale {
        a: f64,
        dim: usize,
    }

    impl RandomOperator for Scale {
        fn shape(&self) -> StateShape {
            StateShape { dim: self.dim, has_prev: false, proxy_indices: None }
        }
        fn signature(&self) -> DrawSignature {
            DrawSignature { per_inner: DrawKind::Nothing, epoch: None }
        }
        fn apply(
            &self,
            state: &LiftedState,
            _draws: &[RandomnessDraw],
            _ctx: &StepCtx,
        ) -> Result<LiftedState> {
            Ok(LiftedState::point(&state.x * self.a))
        }
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn identical_chains_stay_at_zero() {
        let op = Scale { a: 0.9, dim: 2 };
        let spec = CoupledRunSpec {
            operator: &op,
            init_a: InitLaw::Point(LiftedState::point(v(&[1.0, 2.0]))),
            init_b: InitLaw::Point(LiftedState::point(v(&[1.0, 2.0]))),
            steps: 20,
            replications: 3,
            divergence: &DivergenceSpec::SquaredEuclidean,
            master_seed: 1,
            star: None,
            projection_radius: None,
            independent_draws: false,
        };
        let traj = run_coupled(&spec).unwrap();
        for trace in &traj.replications {
            assert!(trace.v.iter().all(|&x| x == 0.0));
            assert_eq!(trace.v.len(), 21);
        }
    }

    #[test]
    fn swapped_chains_give_identical_v() {
        let op = Scale { a: 0.8, dim: 1 };
        let a = InitLaw::Point(LiftedState::point(v(&[3.0])));
        let b = InitLaw::Point(LiftedState::point(v(&[-1.0])));
        let mk = |ia: InitLaw, ib: InitLaw| CoupledRunSpec {
            operator: &op,
            init_a: ia,
            init_b: ib,
            steps: 10,
            replications: 2,
            divergence: &DivergenceSpec::SquaredEuclidean,
            master_seed: 5,
            star: None,
            projection_radius: None,
            independent_draws: false,
        };
        let t1 = run_coupled(&mk(a.clone(), b.clone())).unwrap();
        let t2 = run_coupled(&mk(b, a)).unwrap();
        for (x, y) in t1.replications.iter().zip(t2.replications.iter()) {
            assert_eq!(x.v, y.v);
        }
    }

    #[test]
    fn projection_keeps_states_inside_ball() {
        let s = LiftedState::point(v(&[3.0, 4.0]));
        let p = project_ball(&s, 1.0);
        assert!((p.x[0] - 0.6).abs() < 1e-15);
        assert!((p.x[1] - 0.8).abs() < 1e-15);
        let inside = LiftedState::point(v(&[0.3, 0.4]));
        assert_eq!(project_ball(&inside, 1.0).x, inside.x);
    }

    #[test]
    fn epoch_length_laws() {
        let mut rng = SplitMix64::new(3);
        assert_eq!(EpochLen::Fixed(7).sample(&mut rng), 7);
        let law = EpochLen::Geometric { mean: 5 };
        let mut total = 0usize;
        for _ in 0..10_000 {
            let tau = law.sample(&mut rng);
            assert!((1..=50).contains(&tau));
            total += tau;
        }
        let mean = total as f64 / 10_000.0;
        assert!((mean - 5.0).abs() < 0.3, "geometric mean off: {mean}");
    }

    #[test]
    fn csv_schema_and_hex_mode() {
        let traj = CoupledTrajectory {
            replications: vec![ReplicationTrace {
                v: vec![1.0, 0.5],
                v_star: Some(vec![2.0, 1.0]),
                x_dist: Some(vec![2.0, 1.0]),
                diverged: false,
            }],
            horizon: 1,
        };
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("replication,k,V,V_star,diverged\n"));
        assert!(text.contains("0,1,0.5,1,0"));
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("0x1p-1"));
    }

    #[test]
    fn mean_se_basics() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0]).unwrap();
        assert!((m - 2.0).abs() < 1e-15);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(mean_se(&[]).is_err());
    }
}
