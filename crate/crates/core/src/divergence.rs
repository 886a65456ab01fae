//! Divergence functions on lifted state spaces.
//!
//! A divergence is nonnegative, zero exactly on the diagonal, symmetric, and
//! inf-compact. It need not satisfy the triangle inequality. All shipped
//! variants are continuous, so lower semi-continuity holds as a documented
//! assumption rather than a tested property. Powers, sums, and
//! metric-augmented powers of divergences are divergences again; the
//! combinators below close over that.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::FiniteSumProblem;
use crate::state::LiftedState;

#[derive(Clone)]
pub enum DivergenceSpec {
    /// Squared Euclidean norm of the full (concatenated) state difference.
    SquaredEuclidean,
    /// `(s1-s2)' Q (s1-s2)` on the concatenated state difference;
    /// `Q` must be symmetric positive definite.
    WeightedQuadratic { q: DMatrix<f64> },
    /// `|x1-x2|^2 + b * sum_{n in indices} |grad f_n(phi_n^1) - grad f_n(phi_n^2)|^2`.
    SagaProxy {
        b: f64,
        problem: Arc<FiniteSumProblem>,
        indices: Vec<usize>,
    },
    /// `0` on identical pairs, else `psi(x1) + psi(x2) - 2 psi*`.
    OptimalityGap {
        problem: Arc<FiniteSumProblem>,
        psi_star: Option<f64>,
    },
    /// `0` on identical pairs, else `V(x1,x2) + (1-alpha) V(prev1,prev2)`.
    CatalystPair { inner: Box<DivergenceSpec>, alpha: f64 },
    /// `ds' P ds + (1/2) dx' Q dx` on pair states, `ds = (dx, dprev)`;
    /// both matrices symmetric positive definite.
    AsgdQuadraticForm { p: DMatrix<f64>, q: DMatrix<f64> },
    /// `base^p` for `p > 0`.
    Power { base: Box<DivergenceSpec>, p: f64 },
    /// `left + right`.
    Sum { left: Box<DivergenceSpec>, right: Box<DivergenceSpec> },
    /// `base^p + |s1 - s2|` (Euclidean metric on the concatenated state).
    PlusMetric { base: Box<DivergenceSpec>, p: f64 },
}

impl std::fmt::Debug for DivergenceSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DivergenceSpec::SquaredEuclidean => write!(f, "SquaredEuclidean"),
            DivergenceSpec::WeightedQuadratic { q } => {
                write!(f, "WeightedQuadratic({}x{})", q.nrows(), q.ncols())
            }
            DivergenceSpec::SagaProxy { b, indices, .. } => {
                write!(f, "SagaProxy(b={b}, |S|={})", indices.len())
            }
            DivergenceSpec::OptimalityGap { psi_star, .. } => {
                write!(f, "OptimalityGap(psi*={psi_star:?})")
            }
            DivergenceSpec::CatalystPair { inner, alpha } => {
                write!(f, "CatalystPair({inner:?}, alpha={alpha})")
            }
            DivergenceSpec::AsgdQuadraticForm { p, .. } => {
                write!(f, "AsgdQuadraticForm({}x{})", p.nrows(), p.ncols())
            }
            DivergenceSpec::Power { base, p } => write!(f, "Power({base:?}, {p})"),
            DivergenceSpec::Sum { left, right } => write!(f, "Sum({left:?}, {right:?})"),
            DivergenceSpec::PlusMetric { base, p } => write!(f, "PlusMetric({base:?}, {p})"),
        }
    }
}

impl DivergenceSpec {
    pub fn weighted_quadratic(q: DMatrix<f64>) -> Result<Self> {
        linalg::check_spd(&q, "WeightedQuadratic.Q")?;
        Ok(DivergenceSpec::WeightedQuadratic { q })
    }

    pub fn saga_proxy(b: f64, problem: Arc<FiniteSumProblem>, indices: Vec<usize>) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::Parameter(format!("SagaProxy needs b > 0, got {b}")));
        }
        if indices.iter().any(|&n| n >= problem.n()) {
            return Err(Error::Parameter("SagaProxy index outside [N]".into()));
        }
        Ok(DivergenceSpec::SagaProxy { b, problem, indices })
    }

    pub fn optimality_gap(problem: Arc<FiniteSumProblem>) -> Self {
        let psi_star = problem.psi_star();
        DivergenceSpec::OptimalityGap { problem, psi_star: Some(psi_star) }
    }

    pub fn catalyst_pair(inner: DivergenceSpec, alpha: f64) -> Result<Self> {
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "CatalystPair needs alpha in (0,1), got {alpha}"
            )));
        }
        Ok(DivergenceSpec::CatalystPair { inner: Box::new(inner), alpha })
    }

    pub fn asgd_quadratic_form(p: DMatrix<f64>, q: DMatrix<f64>) -> Result<Self> {
        linalg::check_spd(&p, "AsgdQuadraticForm.P")?;
        linalg::check_spd(&q, "AsgdQuadraticForm.Q")?;
        if p.nrows() != 2 * q.nrows() {
            return Err(Error::Shape(format!(
                "AsgdQuadraticForm: P is {}x{} but Q is {}x{} (want P twice Q's size)",
                p.nrows(),
                p.ncols(),
                q.nrows(),
                q.ncols()
            )));
        }
        Ok(DivergenceSpec::AsgdQuadraticForm { p, q })
    }

    pub fn power(base: DivergenceSpec, p: f64) -> Result<Self> {
        if !(p > 0.0) {
            return Err(Error::Parameter(format!("Power needs p > 0, got {p}")));
        }
        Ok(DivergenceSpec::Power { base: Box::new(base), p })
    }

    pub fn sum(left: DivergenceSpec, right: DivergenceSpec) -> Self {
        DivergenceSpec::Sum { left: Box::new(left), right: Box::new(right) }
    }

    pub fn plus_metric(base: DivergenceSpec, p: f64) -> Result<Self> {
        if !(p > 0.0) {
            return Err(Error::Parameter(format!("PlusMetric needs p > 0, got {p}")));
        }
        Ok(DivergenceSpec::PlusMetric { base: Box::new(base), p })
    }

    /// Evaluate `V(s1, s2)`.
    pub fn evaluate(&self, s1: &LiftedState, s2: &LiftedState) -> Result<f64> {
        if !s1.same_shape(s2) {
            return Err(Error::Shape(format!(
                "divergence arguments have different shapes: {:?} vs {:?}",
                s1.shape(),
                s2.shape()
            )));
        }
        match self {
            DivergenceSpec::SquaredEuclidean => Ok((s1.concat() - s2.concat()).norm_squared()),
            DivergenceSpec::WeightedQuadratic { q } => {
                let diff = s1.concat() - s2.concat();
                if diff.len() != q.nrows() {
                    return Err(Error::Shape(format!(
                        "WeightedQuadratic: state dimension {} vs matrix {}",
                        diff.len(),
                        q.nrows()
                    )));
                }
                Ok(diff.dot(&(q * &diff)))
            }
            DivergenceSpec::SagaProxy { b, problem, indices } => {
                let (t1, t2) = match (&s1.proxies, &s2.proxies) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        return Err(Error::Shape(
                            "SagaProxy divergence needs proxy tables on both states".into(),
                        ))
                    }
                };
                let mut acc = (&s1.x - &s2.x).norm_squared();
                let mut proxy_sum = 0.0;
                for &n in indices {
                    let (i1, i2) = match (t1.position(n), t2.position(n)) {
                        (Some(a), Some(b)) => (a, b),
                        _ => {
                            return Err(Error::Shape(format!(
                                "SagaProxy: proxy table does not cover index {n}"
                            )))
                        }
                    };
                    let g1 = problem.term_grad(n, &t1.points[i1]);
                    let g2 = problem.term_grad(n, &t2.points[i2]);
                    proxy_sum += (g1 - g2).norm_squared();
                }
                acc += b * proxy_sum;
                Ok(acc)
            }
            DivergenceSpec::OptimalityGap { problem, psi_star } => {
                let psi_star = psi_star.ok_or_else(|| {
                    Error::Config("OptimalityGap evaluated without a reference value psi*".into())
                })?;
                // Case split before any objective evaluation.
                if s1.identical(s2) {
                    return Ok(0.0);
                }
                Ok(problem.psi(&s1.x) + problem.psi(&s2.x) - 2.0 * psi_star)
            }
            DivergenceSpec::CatalystPair { inner, alpha } => {
                if s1.identical(s2) {
                    return Ok(0.0);
                }
                let (p1, p2) = match (&s1.prev, &s2.prev) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        return Err(Error::Shape(
                            "CatalystPair divergence needs pair states (x, prev)".into(),
                        ))
                    }
                };
                let cur = inner.evaluate(
                    &LiftedState::point(s1.x.clone()),
                    &LiftedState::point(s2.x.clone()),
                )?;
                let old = inner.evaluate(
                    &LiftedState::point(p1.clone()),
                    &LiftedState::point(p2.clone()),
                )?;
                Ok(cur + (1.0 - alpha) * old)
            }
            DivergenceSpec::AsgdQuadraticForm { p, q } => {
                let (p1, p2) = match (&s1.prev, &s2.prev) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        return Err(Error::Shape(
                            "AsgdQuadraticForm needs pair states (x, prev)".into(),
                        ))
                    }
                };
                let dx = &s1.x - &s2.x;
                if 2 * dx.len() != p.nrows() {
                    return Err(Error::Shape(format!(
                        "AsgdQuadraticForm: state dim {} vs P {}x{}",
                        dx.len(),
                        p.nrows(),
                        p.ncols()
                    )));
                }
                let mut ds = DVector::zeros(2 * dx.len());
                ds.rows_mut(0, dx.len()).copy_from(&dx);
                ds.rows_mut(dx.len(), dx.len()).copy_from(&(p1 - p2));
                Ok(ds.dot(&(p * &ds)) + 0.5 * dx.dot(&(q * &dx)))
            }
            DivergenceSpec::Power { base, p } => Ok(base.evaluate(s1, s2)?.powf(*p)),
            DivergenceSpec::Sum { left, right } => {
                Ok(left.evaluate(s1, s2)? + right.evaluate(s1, s2)?)
            }
            DivergenceSpec::PlusMetric { base, p } => {
                let metric = (s1.concat() - s2.concat()).norm();
                Ok(base.evaluate(s1, s2)?.powf(*p) + metric)
            }
        }
    }
}

/// Empirical Definition-2.2 check over sampled state pairs.
#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub samples: usize,
    pub off_diagonal_pairs: usize,
    /// max |V(a,b) - V(b,a)| over the sample.
    pub max_symmetry_violation: f64,
    /// min V(a,b) over sampled pairs with a != b (must be > 0).
    pub min_off_diagonal: f64,
    /// count of sampled a with V(a,a) != 0 (must be 0).
    pub diagonal_nonzero_count: usize,
    /// count of sampled pairs with V(a,b) < 0 (must be 0).
    pub negative_count: usize,
}

impl AxiomReport {
    pub fn passes(&self) -> bool {
        self.max_symmetry_violation == 0.0
            && self.diagonal_nonzero_count == 0
            && self.negative_count == 0
            && (self.off_diagonal_pairs == 0 || self.min_off_diagonal > 0.0)
    }
}

/// Sample `n` state pairs from `sampler` and audit nonnegativity, exact
/// symmetry, and pointwise positive definiteness.
pub fn check_divergence_axioms(
    v: &DivergenceSpec,
    sampler: &mut dyn FnMut() -> LiftedState,
    n: usize,
) -> Result<AxiomReport> {
    if n == 0 {
        return Err(Error::Parameter("axiom check needs n >= 1 samples".into()));
    }
    let mut report = AxiomReport {
        samples: n,
        off_diagonal_pairs: 0,
        max_symmetry_violation: 0.0,
        min_off_diagonal: f64::INFINITY,
        diagonal_nonzero_count: 0,
        negative_count: 0,
    };
    for _ in 0..n {
        let a = sampler();
        let b = sampler();
        let vab = v.evaluate(&a, &b)?;
        let vba = v.evaluate(&b, &a)?;
        let vaa = v.evaluate(&a, &a)?;
        if vab < 0.0 || vba < 0.0 {
            report.negative_count += 1;
        }
        report.max_symmetry_violation = report.max_symmetry_violation.max((vab - vba).abs());
        if vaa != 0.0 {
            report.diagonal_nonzero_count += 1;
        }
        if !a.identical(&b) {
            report.off_diagonal_pairs += 1;
            report.min_off_diagonal = report.min_off_diagonal.min(vab);
        }
    }
    Ok(report)
}

/// Gaussian sampler producing states of a fixed shape, for axiom checks.
pub struct GaussianStateSampler<R: Rng> {
    pub dim: usize,
    pub with_prev: bool,
    pub proxy_indices: Vec<usize>,
    pub rng: R,
}

impl<R: Rng> GaussianStateSampler<R> {
    pub fn sample(&mut self) -> LiftedState {
        let dim = self.dim;
        let gauss =
            |rng: &mut R| DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = gauss(&mut self.rng);
        let prev = self.with_prev.then(|| gauss(&mut self.rng));
        let proxies = (!self.proxy_indices.is_empty()).then(|| {
            let points = (0..self.proxy_indices.len()).map(|_| gauss(&mut self.rng)).collect();
            crate::state::ProxyTable::new(self.proxy_indices.clone(), points)
                .expect("sampler indices are sorted")
        });
        LiftedState { x, prev, proxies }
    }
}

/// Radius `R` such that `V(s1, s2) >= q` whenever `|s1| > R` and `|s2| <= K`.
///
/// Supported for the variants with analytic growth bounds; for the
/// optimality gap the radius follows the strong-convexity lower bound
/// `psi(x) - psi* >= (c/2) |x - x*|^2`.
pub fn inf_compactness_radius(v: &DivergenceSpec, q: f64, k_radius: f64) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(Error::Parameter(format!("inf-compactness level must be >= 0, got {q}")));
    }
    if !(k_radius > 0.0) {
        return Err(Error::Parameter(format!("K radius must be > 0, got {k_radius}")));
    }
    if q == 0.0 {
        // V >= 0 everywhere.
        return Ok(k_radius);
    }
    match v {
        DivergenceSpec::SquaredEuclidean => Ok(k_radius + q.sqrt()),
        DivergenceSpec::WeightedQuadratic { q: mat } => {
            let (lo, _) = linalg::sym_eigenvalue_range(mat);
            if !(lo > 0.0) {
                return Err(Error::Parameter("WeightedQuadratic matrix lost definiteness".into()));
            }
            Ok(k_radius + (q / lo).sqrt())
        }
        DivergenceSpec::OptimalityGap { problem, psi_star } => {
            if psi_star.is_none() {
                return Err(Error::Config(
                    "OptimalityGap radius needs a reference value psi*".into(),
                ));
            }
            let reach = (2.0 * q / problem.c).sqrt();
            Ok(k_radius.max(problem.optimizer.x_star.norm() + reach))
        }
        // No closed-form certificate is printed for the remaining variants
        // (the SagaProxy growth constant in particular is not stated).
        other => Err(Error::NotImplemented(format!(
            "inf-compactness radius for {other:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{generate_nonlinear, generate_quadratic, Composite};
    use crate::rng::SplitMix64;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn pt(xs: &[f64]) -> LiftedState {
        LiftedState::point(v(xs))
    }

    #[test]
    fn squared_euclidean_examples() {
        let d = DivergenceSpec::SquaredEuclidean;
        let s = pt(&[1.5, -2.0]);
        assert_eq!(d.evaluate(&s, &s).unwrap(), 0.0);
        assert!((d.evaluate(&pt(&[1.0, 0.0]), &pt(&[0.0, 1.0])).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn power_combinator_example() {
        // sqrt of squared distance = distance.
        let d = DivergenceSpec::power(DivergenceSpec::SquaredEuclidean, 0.5).unwrap();
        let got = d.evaluate(&pt(&[1.0, 0.0]), &pt(&[0.0, 1.0])).unwrap();
        assert!((got - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn optimality_gap_printed_formula() {
        // psi(x) = x^2 realized as a 1-d quadratic with Q = (2); psi* = 0.
        let term = crate::problems::Term::Quadratic {
            q: DMatrix::from_row_slice(1, 1, &[2.0]),
            a: v(&[0.0]),
            b: 0.0,
        };
        let problem = Arc::new(
            FiniteSumProblem::assemble(
                1,
                vec![term],
                2.0,
                2.0,
                Composite::Zero,
                crate::problems::Optimizer { x_star: v(&[0.0]), residual: 0.0 },
                0,
            )
            .unwrap(),
        );
        let d = DivergenceSpec::optimality_gap(problem);
        // psi(1) + psi(2) - 2 psi* = 1 + 4 - 0 = 5.
        let got = d.evaluate(&pt(&[1.0]), &pt(&[2.0])).unwrap();
        assert!((got - 5.0).abs() < 1e-14);
        assert_eq!(d.evaluate(&pt(&[1.0]), &pt(&[1.0])).unwrap(), 0.0);
    }

    #[test]
    fn optimality_gap_without_reference_errors() {
        let problem = Arc::new(generate_quadratic(2, 2, 1.0, 2.0, 3).unwrap());
        let d = DivergenceSpec::OptimalityGap { problem, psi_star: None };
        assert!(matches!(
            d.evaluate(&pt(&[0.0, 0.0]), &pt(&[1.0, 0.0])),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let d = DivergenceSpec::SquaredEuclidean;
        assert!(matches!(
            d.evaluate(&pt(&[1.0]), &pt(&[1.0, 2.0])),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn weighted_quadratic_identity_matches_euclidean() {
        let mut rng = SplitMix64::new(8);
        let d = 3;
        let wq = DivergenceSpec::weighted_quadratic(DMatrix::identity(d, d)).unwrap();
        let se = DivergenceSpec::SquaredEuclidean;
        let mut sampler = GaussianStateSampler {
            dim: d,
            with_prev: false,
            proxy_indices: vec![],
            rng: &mut rng,
        };
        for _ in 0..200 {
            let a = sampler.sample();
            let b = sampler.sample();
            let x = wq.evaluate(&a, &b).unwrap();
            let y = se.evaluate(&a, &b).unwrap();
            assert!((x - y).abs() <= 1e-12 * y.max(1.0));
        }
    }

    #[test]
    fn spd_construction_is_enforced() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(DivergenceSpec::weighted_quadratic(bad).is_err());
    }

    #[test]
    fn axiom_check_on_shipped_and_combined() {
        let problem = Arc::new(generate_nonlinear(2, 3, 1.0, 2.0, Composite::Zero, 5).unwrap());
        let saga = DivergenceSpec::saga_proxy(0.05, problem.clone(), (0..3).collect()).unwrap();
        let combos = [
            DivergenceSpec::SquaredEuclidean,
            DivergenceSpec::sum(
                DivergenceSpec::SquaredEuclidean,
                DivergenceSpec::power(DivergenceSpec::SquaredEuclidean, 2.0).unwrap(),
            ),
            DivergenceSpec::plus_metric(DivergenceSpec::SquaredEuclidean, 0.5).unwrap(),
        ];
        for dvg in &combos {
            let mut rng = SplitMix64::new(77);
            let mut s = GaussianStateSampler {
                dim: 2,
                with_prev: false,
                proxy_indices: vec![],
                rng: &mut rng,
            };
            let report = check_divergence_axioms(dvg, &mut || s.sample(), 1000).unwrap();
            assert!(report.passes(), "{dvg:?}: {report:?}");
        }
        let mut rng = SplitMix64::new(78);
        let mut s = GaussianStateSampler {
            dim: 2,
            with_prev: false,
            proxy_indices: vec![0, 1, 2],
            rng: &mut rng,
        };
        let report = check_divergence_axioms(&saga, &mut || s.sample(), 1000).unwrap();
        assert!(report.passes(), "saga proxy: {report:?}");
    }

    #[test]
    fn optimality_gap_strictly_positive_off_diagonal() {
        let problem = Arc::new(generate_quadratic(2, 3, 1.0, 2.0, 9).unwrap());
        let d = DivergenceSpec::optimality_gap(problem);
        let mut rng = SplitMix64::new(10);
        let mut s = GaussianStateSampler {
            dim: 2,
            with_prev: false,
            proxy_indices: vec![],
            rng: &mut rng,
        };
        let report = check_divergence_axioms(&d, &mut || s.sample(), 1000).unwrap();
        assert!(report.passes(), "{report:?}");
        assert!(report.min_off_diagonal > 0.0);
    }

    #[test]
    fn inf_compactness_examples() {
        // |s1| > 3, |s2| <= 1 forces |s1-s2| > 2, so V > 4.
        let r = inf_compactness_radius(&DivergenceSpec::SquaredEuclidean, 4.0, 1.0).unwrap();
        assert!((r - 3.0).abs() < 1e-12);
        // q = 0 collapses to the K radius.
        let r0 = inf_compactness_radius(&DivergenceSpec::SquaredEuclidean, 0.0, 1.0).unwrap();
        assert_eq!(r0, 1.0);
        // Unsupported variant.
        let problem = Arc::new(generate_quadratic(2, 2, 1.0, 2.0, 3).unwrap());
        let saga = DivergenceSpec::saga_proxy(0.1, problem, vec![0, 1]).unwrap();
        assert!(matches!(
            inf_compactness_radius(&saga, 1.0, 1.0),
            Err(Error::NotImplemented(_))
        ));
    }

    #[test]
    fn optimality_gap_radius_contribution() {
        // c = 2, q = 9: reach sqrt(2*9/2) = 3 around x*.
        let term = crate::problems::Term::Quadratic {
            q: DMatrix::from_row_slice(1, 1, &[2.0]),
            a: v(&[0.0]),
            b: 0.0,
        };
        let problem = Arc::new(
            FiniteSumProblem::assemble(
                1,
                vec![term],
                2.0,
                2.0,
                Composite::Zero,
                crate::problems::Optimizer { x_star: v(&[0.0]), residual: 0.0 },
                0,
            )
            .unwrap(),
        );
        let d = DivergenceSpec::optimality_gap(problem);
        let r = inf_compactness_radius(&d, 9.0, 1.0).unwrap();
        assert!((r - 3.0).abs() < 1e-12);
    }

    #[test]
    fn inf_compactness_radius_defining_inequality() {
        // Grid check of the defining inequality on sampled pairs.
        let specs: Vec<DivergenceSpec> = vec![
            DivergenceSpec::SquaredEuclidean,
            DivergenceSpec::weighted_quadratic(DMatrix::from_row_slice(
                2,
                2,
                &[2.0, 0.3, 0.3, 1.0],
            ))
            .unwrap(),
        ];
        let mut rng = SplitMix64::new(31);
        for spec in &specs {
            let q = 2.5;
            let k_radius = 1.5;
            let r = inf_compactness_radius(spec, q, k_radius).unwrap();
            for _ in 0..10_000 {
                let mut s1 = v(&[
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                ]);
                let norm = s1.norm();
                if norm == 0.0 {
                    continue;
                }
                // place |s1| in (R, 2R], |s2| <= K.
                let target = r * (1.0 + rng.random::<f64>());
                s1 *= target / norm;
                let mut s2 = v(&[
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                ]);
                let n2 = s2.norm();
                if n2 > 0.0 {
                    s2 *= (k_radius * rng.random::<f64>()) / n2;
                }
                let val = spec
                    .evaluate(&LiftedState::point(s1.clone()), &LiftedState::point(s2))
                    .unwrap();
                assert!(val >= q, "{spec:?}: V = {val} < q = {q} at |s1| = {}", s1.norm());
            }
        }
    }
}
