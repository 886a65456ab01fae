//! Exact Wasserstein-style divergence between small discrete measures.
//!
//! `W_V(mu, nu)` is the optimum of the finite transportation LP
//! `min sum pi_ij V(a_i, b_j)` over couplings with marginals `mu, nu`. The
//! solver is the transportation simplex with first-eligible (Bland-style)
//! pivoting; an exhaustive permutation oracle cross-checks it in the test
//! tree. `W_V` is not assumed to satisfy any triangle inequality.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::divergence::DivergenceSpec;
use crate::error::{Error, Result};
use crate::operators::CoupledTrajectory;
use crate::state::LiftedState;

/// Cost-matrix entry budget for the exact solver.
pub const COST_BUDGET: usize = 1_000_000;
/// Marginal feasibility tolerance on returned plans.
pub const MARGINAL_TOL: f64 = 1e-10;
/// Weight-normalization tolerance at construction.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct DiscreteMeasure {
    atoms: Vec<LiftedState>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    atoms: Vec<LiftedState>,
    weights: Vec<f64>,
}

impl From<DiscreteMeasure> for MeasureRepr {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureRepr { atoms: m.atoms, weights: m.weights }
    }
}

impl TryFrom<MeasureRepr> for DiscreteMeasure {
    type Error = Error;
    fn try_from(r: MeasureRepr) -> Result<Self> {
        DiscreteMeasure::new(r.atoms, r.weights)
    }
}

impl DiscreteMeasure {
    /// Duplicate atoms are kept distinct; merging would not change any
    /// value but does change plan reporting.
    pub fn new(atoms: Vec<LiftedState>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::Parameter(format!(
                "measure needs matching nonempty atoms/weights, got {} vs {}",
                atoms.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Parameter("measure weights must be strictly positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Parameter(format!(
                "measure weights sum to {total}, expected 1 within {WEIGHT_TOL:.0e}"
            )));
        }
        if atoms.windows(2).any(|w| !w[0].same_shape(&w[1])) {
            return Err(Error::Shape("measure atoms must share one state shape".into()));
        }
        Ok(DiscreteMeasure { atoms, weights })
    }

    pub fn dirac(atom: LiftedState) -> Self {
        DiscreteMeasure { atoms: vec![atom], weights: vec![1.0] }
    }

    pub fn uniform(atoms: Vec<LiftedState>) -> Result<Self> {
        let n = atoms.len();
        if n == 0 {
            return Err(Error::Parameter("uniform measure needs at least one atom".into()));
        }
        let w = 1.0 / n as f64;
        DiscreteMeasure::new(atoms, vec![w; n])
    }

    pub fn atoms(&self) -> &[LiftedState] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Image measure under a pointwise map (weights carried over).
    pub fn pushforward(&self, f: &dyn Fn(&LiftedState) -> LiftedState) -> Result<Self> {
        DiscreteMeasure::new(self.atoms.iter().map(f).collect(), self.weights.clone())
    }
}

/// A feasible transport plan with its objective value.
#[derive(Debug, Clone)]
pub struct CouplingPlan {
    /// `pi[(i, j)]`: mass moved from atom i of mu to atom j of nu.
    pub matrix: DMatrix<f64>,
    pub objective: f64,
}

impl CouplingPlan {
    /// Marginal residuals `(max row error, max col error)`.
    pub fn marginal_residuals(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (f64, f64) {
        let mut row_err: f64 = 0.0;
        for i in 0..mu.len() {
            let sum: f64 = self.matrix.row(i).iter().sum();
            row_err = row_err.max((sum - mu.weights[i]).abs());
        }
        let mut col_err: f64 = 0.0;
        for j in 0..nu.len() {
            let sum: f64 = self.matrix.column(j).iter().sum();
            col_err = col_err.max((sum - nu.weights[j]).abs());
        }
        (row_err, col_err)
    }
}

/// Exact optimum of the coupling LP, with the optimal plan.
pub fn wv_exact(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    v: &DivergenceSpec,
) -> Result<(f64, CouplingPlan)> {
    let (m, n) = (mu.len(), nu.len());
    if m.saturating_mul(n) > COST_BUDGET {
        return Err(Error::SizeBudget(format!(
            "cost matrix {m} x {n} exceeds the {COST_BUDGET}-entry budget"
        )));
    }
    let mut cost = DMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            cost[(i, j)] = v.evaluate(&mu.atoms[i], &nu.atoms[j])?;
        }
    }
    // Against a Dirac there is only one coupling; building it directly keeps
    // wv_dirac agreement at 0 ulp instead of inheriting northwest-corner
    // rounding dust.
    let plan = if n == 1 {
        DMatrix::from_fn(m, 1, |i, _| mu.weights[i])
    } else if m == 1 {
        DMatrix::from_fn(1, n, |_, j| nu.weights[j])
    } else {
        transport_simplex(mu.weights(), nu.weights(), &cost)?
    };
    // Row-major objective scan; zero cells contribute exact zeros, so the
    // Dirac column case sums in atom order and matches wv_dirac bitwise.
    let mut objective = 0.0;
    for i in 0..m {
        for j in 0..n {
            objective += plan[(i, j)] * cost[(i, j)];
        }
    }
    let plan = CouplingPlan { matrix: plan, objective };
    let (row_err, col_err) = plan.marginal_residuals(mu, nu);
    if row_err > MARGINAL_TOL || col_err > MARGINAL_TOL {
        return Err(Error::Internal(format!(
            "transport plan violates marginals: row {row_err:.3e}, col {col_err:.3e}"
        )));
    }
    Ok((plan.objective, plan))
}

/// `W_V(mu, dirac(s*)) = sum_i w_i V(a_i, s*)`: the coupling is unique.
pub fn wv_dirac(mu: &DiscreteMeasure, star: &LiftedState, v: &DivergenceSpec) -> Result<f64> {
    let mut total = 0.0;
    for (atom, &w) in mu.atoms.iter().zip(mu.weights.iter()) {
        total += w * v.evaluate(atom, star)?;
    }
    Ok(total)
}

/// Upper bound `W_V(mu, mu o f^{-1}) <= E[V(s, f(s))]` from the graph
/// coupling `(s, f(s))`; tight when `f` is constant, strict e.g. for a
/// nontrivial permutation of a uniform measure's atoms.
pub fn wv_pullback_bound(
    mu: &DiscreteMeasure,
    f: &dyn Fn(&LiftedState) -> LiftedState,
    v: &DivergenceSpec,
) -> Result<f64> {
    let mut total = 0.0;
    for (atom, &w) in mu.atoms.iter().zip(mu.weights.iter()) {
        total += w * v.evaluate(atom, &f(atom))?;
    }
    Ok(total)
}

/// Monte Carlo estimate (mean, standard error) of the coupling-induced upper
/// bound on `W_V` at step `k` of a coupled trajectory.
pub fn coupled_upper_bound(traj: &CoupledTrajectory, k: usize) -> Result<(f64, f64)> {
    if traj.replications.iter().filter(|r| !r.diverged).count() < 2 {
        return Err(Error::Parameter(
            "coupled upper bound needs at least two non-diverged replications".into(),
        ));
    }
    traj.mean_se(k)
}

// --- transportation simplex -------------------------------------------------

/// Node in the bipartite basis tree: rows are 0..m, columns m..m+n.
fn transport_simplex(
    supply: &[f64],
    demand: &[f64],
    cost: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (m, n) = (supply.len(), demand.len());
    let mut alloc = DMatrix::<f64>::zeros(m, n);
    let mut basic = vec![vec![false; n]; m];

    // Northwest-corner initial basis: m + n - 1 cells forming a spanning
    // staircase tree.
    {
        let mut a: Vec<f64> = supply.to_vec();
        let mut b: Vec<f64> = demand.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let q = a[i].min(b[j]);
            alloc[(i, j)] = q;
            basic[i][j] = true;
            a[i] -= q;
            b[j] -= q;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i < m - 1 && (a[i] <= b[j] || j == n - 1) {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let scale = cost.amax().max(1.0);
    let tol = 1e-14 * scale;
    let max_pivots = 1000 + 100 * m * n;

    for _pivot in 0..max_pivots {
        // Potentials u_i + v_j = c_ij on basic cells, via BFS over the tree.
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        u[0] = 0.0;
        let mut queue = std::collections::VecDeque::from([0usize]); // node ids: 0..m rows, m..m+n cols
        let mut seen = vec![false; m + n];
        seen[0] = true;
        while let Some(node) = queue.pop_front() {
            if node < m {
                for j in 0..n {
                    if basic[node][j] && !seen[m + j] {
                        v[j] = cost[(node, j)] - u[node];
                        seen[m + j] = true;
                        queue.push_back(m + j);
                    }
                }
            } else {
                let j = node - m;
                for i in 0..m {
                    if basic[i][j] && !seen[i] {
                        u[i] = cost[(i, j)] - v[j];
                        seen[i] = true;
                        queue.push_back(i);
                    }
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Internal("transport basis lost connectivity".into()));
        }

        // Entering cell: first (row-major) nonbasic cell with negative
        // reduced cost. First-eligible selection is the anti-cycling rule.
        let mut entering = None;
        'scan: for i in 0..m {
            for j in 0..n {
                if !basic[i][j] && cost[(i, j)] - u[i] - v[j] < -tol {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            return Ok(alloc);
        };

        // Unique tree path from row ei to column ej; adding the entering
        // cell closes the cycle.
        let path = tree_path(&basic, m, n, ei, m + ej)?;
        // Cells along the cycle, starting with the entering cell (sign +),
        // then alternating along the path.
        let mut cycle: Vec<(usize, usize)> = Vec::with_capacity(path.len());
        cycle.push((ei, ej));
        for pair in path.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let cell = if a < m { (a, b - m) } else { (b, a - m) };
            cycle.push(cell);
        }
        // Signs alternate +,-,+,-,... around the cycle; the path begins at
        // the entering row, so odd path edges take the minus sign.
        let mut theta = f64::INFINITY;
        let mut leaving = None;
        for (pos, &(i, j)) in cycle.iter().enumerate() {
            if pos % 2 == 1 {
                let a = alloc[(i, j)];
                // Strict improvement or lexicographic tie-break on indices.
                if a < theta - 1e-300 || (a == theta && Some((i, j)) < leaving) {
                    theta = a;
                    leaving = Some((i, j));
                }
            }
        }
        let leaving =
            leaving.ok_or_else(|| Error::Internal("transport cycle has no leaving cell".into()))?;
        for (pos, &(i, j)) in cycle.iter().enumerate() {
            if pos % 2 == 0 {
                alloc[(i, j)] += theta;
            } else {
                alloc[(i, j)] = (alloc[(i, j)] - theta).max(0.0);
            }
        }
        alloc[leaving] = 0.0;
        basic[leaving.0][leaving.1] = false;
        basic[ei][ej] = true;
        alloc[(ei, ej)] = theta;
    }
    Err(Error::Internal(format!(
        "transportation simplex exceeded {max_pivots} pivots"
    )))
}

/// BFS path between two nodes of the basis tree, as a node sequence.
fn tree_path(
    basic: &[Vec<bool>],
    m: usize,
    n: usize,
    from: usize,
    to: usize,
) -> Result<Vec<usize>> {
    let total = m + n;
    let mut parent = vec![usize::MAX; total];
    let mut seen = vec![false; total];
    seen[from] = true;
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(node) = queue.pop_front() {
        if node == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = parent[cur];
                path.push(cur);
            }
            path.reverse();
            return Ok(path);
        }
        if node < m {
            for j in 0..n {
                if basic[node][j] && !seen[m + j] {
                    seen[m + j] = true;
                    parent[m + j] = node;
                    queue.push_back(m + j);
                }
            }
        } else {
            let j = node - m;
            for i in 0..m {
                if basic[i][j] && !seen[i] {
                    seen[i] = true;
                    parent[i] = m + j;
                    queue.push_back(i);
                }
            }
        }
    }
    Err(Error::Internal("transport basis path not found".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use nalgebra::DVector;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn pt(xs: &[f64]) -> LiftedState {
        LiftedState::point(DVector::from_row_slice(xs))
    }

    fn gauss_atoms(count: usize, d: usize, rng: &mut SplitMix64) -> Vec<LiftedState> {
        (0..count)
            .map(|_| pt(&(0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect::<Vec<_>>()))
            .collect()
    }

    /// Exhaustive assignment oracle for uniform equal-cardinality measures.
    fn permutation_oracle(
        mu: &DiscreteMeasure,
        nu: &DiscreteMeasure,
        v: &DivergenceSpec,
    ) -> f64 {
        let n = mu.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        // Heap's algorithm.
        fn heaps(
            k: usize,
            perm: &mut Vec<usize>,
            best: &mut f64,
            cost: &dyn Fn(&[usize]) -> f64,
        ) {
            if k <= 1 {
                *best = best.min(cost(perm));
                return;
            }
            for i in 0..k {
                heaps(k - 1, perm, best, cost);
                if k % 2 == 0 {
                    perm.swap(i, k - 1);
                } else {
                    perm.swap(0, k - 1);
                }
            }
        }
        let cost_of = |perm: &[usize]| -> f64 {
            perm.iter()
                .enumerate()
                .map(|(i, &j)| v.evaluate(&mu.atoms()[i], &nu.atoms()[j]).unwrap())
                .sum::<f64>()
                / n as f64
        };
        heaps(n, &mut perm, &mut best, &cost_of);
        best
    }

    #[test]
    fn identical_measures_have_zero_divergence() {
        let mut rng = SplitMix64::new(51);
        let atoms = gauss_atoms(4, 2, &mut rng);
        let mu = DiscreteMeasure::uniform(atoms).unwrap();
        let (value, plan) = wv_exact(&mu, &mu, &DivergenceSpec::SquaredEuclidean).unwrap();
        assert_eq!(value, 0.0);
        // The diagonal plan is optimal.
        for i in 0..4 {
            assert!((plan.matrix[(i, i)] - 0.25).abs() <= 1e-12);
        }
    }

    #[test]
    fn two_atom_birkhoff_case() {
        // mu = (a, b)/2, nu = (c, d)/2: optimum is the better permutation.
        let (a, b, c, d) = (pt(&[0.0]), pt(&[1.0]), pt(&[0.1]), pt(&[0.9]));
        let v = DivergenceSpec::SquaredEuclidean;
        let direct = 0.5 * (v.evaluate(&a, &c).unwrap() + v.evaluate(&b, &d).unwrap());
        let crossed = 0.5 * (v.evaluate(&a, &d).unwrap() + v.evaluate(&b, &c).unwrap());
        let mu = DiscreteMeasure::uniform(vec![a, b]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![c, d]).unwrap();
        let (value, _) = wv_exact(&mu, &nu, &v).unwrap();
        assert!((value - direct.min(crossed)).abs() < 1e-12);
    }

    #[test]
    fn matches_permutation_oracle_on_random_uniform_measures() {
        let v = DivergenceSpec::SquaredEuclidean;
        let mut rng = SplitMix64::new(52);
        for trial in 0..30 {
            let n = 2 + (trial % 6);
            let mu = DiscreteMeasure::uniform(gauss_atoms(n, 2, &mut rng)).unwrap();
            let nu = DiscreteMeasure::uniform(gauss_atoms(n, 2, &mut rng)).unwrap();
            let (value, _) = wv_exact(&mu, &nu, &v).unwrap();
            let oracle = permutation_oracle(&mu, &nu, &v);
            assert!(
                (value - oracle).abs() <= 1e-10,
                "trial {trial}: simplex {value} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn beats_random_feasible_couplings() {
        let v = DivergenceSpec::SquaredEuclidean;
        let mut rng = SplitMix64::new(53);
        let mu = DiscreteMeasure::new(
            gauss_atoms(3, 2, &mut rng),
            vec![0.2, 0.3, 0.5],
        )
        .unwrap();
        let nu = DiscreteMeasure::new(
            gauss_atoms(4, 2, &mut rng),
            vec![0.1, 0.4, 0.25, 0.25],
        )
        .unwrap();
        let (value, _) = wv_exact(&mu, &nu, &v).unwrap();
        let mut cost = DMatrix::zeros(3, 4);
        for i in 0..3 {
            for j in 0..4 {
                cost[(i, j)] = v.evaluate(&mu.atoms()[i], &nu.atoms()[j]).unwrap();
            }
        }
        // Rejection-style random feasible plans via repeated proportional
        // fitting from random positive matrices.
        for _ in 0..1000 {
            let mut pi = DMatrix::from_fn(3, 4, |_, _| rng.random::<f64>() + 1e-3);
            for _ in 0..200 {
                for i in 0..3 {
                    let s: f64 = pi.row(i).iter().sum();
                    for j in 0..4 {
                        pi[(i, j)] *= mu.weights()[i] / s;
                    }
                }
                for j in 0..4 {
                    let s: f64 = pi.column(j).iter().sum();
                    for i in 0..3 {
                        pi[(i, j)] *= nu.weights()[j] / s;
                    }
                }
            }
            let obj: f64 = (0..3)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| pi[(i, j)] * cost[(i, j)])
                .sum();
            assert!(value <= obj + 1e-9, "simplex {value} beaten by random plan {obj}");
        }
    }

    #[test]
    fn dirac_consistency_is_bitwise() {
        let v = DivergenceSpec::SquaredEuclidean;
        let mut rng = SplitMix64::new(54);
        for _ in 0..100 {
            let k = 1 + rng.random_range(0..6);
            let mut weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.1).collect();
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            let mu = DiscreteMeasure::new(gauss_atoms(k, 3, &mut rng), weights);
            let mu = match mu {
                Ok(m) => m,
                Err(_) => continue, // normalization dust beyond 1e-12
            };
            let star = pt(&[0.3, -0.4, 0.1]);
            let direct = wv_dirac(&mu, &star, &v).unwrap();
            let (value, _) = wv_exact(&mu, &DiscreteMeasure::dirac(star), &v).unwrap();
            assert_eq!(value, direct, "Dirac shortcut must agree to 0 ulp");
        }
    }

    #[test]
    fn dirac_examples() {
        let v = DivergenceSpec::SquaredEuclidean;
        // Single pair of Diracs.
        let a = pt(&[2.0]);
        let star = pt(&[0.5]);
        let got = wv_dirac(&DiscreteMeasure::dirac(a.clone()), &star, &v).unwrap();
        assert_eq!(got, v.evaluate(&a, &star).unwrap());
        // Uniform three-atom example: atoms {-1, 0, 2}, s* = 0 -> 5/3.
        let mu = DiscreteMeasure::uniform(vec![pt(&[-1.0]), pt(&[0.0]), pt(&[2.0])]).unwrap();
        let got = wv_dirac(&mu, &pt(&[0.0]), &v).unwrap();
        assert!((got - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pullback_bound_cases() {
        let v = DivergenceSpec::SquaredEuclidean;
        let mut rng = SplitMix64::new(55);
        let mu = DiscreteMeasure::uniform(gauss_atoms(4, 2, &mut rng)).unwrap();
        // Identity map: bound 0.
        assert_eq!(wv_pullback_bound(&mu, &|s| s.clone(), &v).unwrap(), 0.0);
        // Constant map: equality with the Dirac value.
        let star = pt(&[1.0, -1.0]);
        let bound = wv_pullback_bound(&mu, &|_| star.clone(), &v).unwrap();
        assert_eq!(bound, wv_dirac(&mu, &star, &v).unwrap());
        // Atom permutation: pushforward equals mu, exact value 0, bound > 0.
        let atoms = mu.atoms().to_vec();
        let rotate = move |s: &LiftedState| {
            let pos = atoms.iter().position(|a| a.identical(s)).unwrap();
            atoms[(pos + 1) % atoms.len()].clone()
        };
        let bound = wv_pullback_bound(&mu, &rotate, &v).unwrap();
        let pushed = mu.pushforward(&rotate).unwrap();
        let (exact, _) = wv_exact(&mu, &pushed, &v).unwrap();
        assert!(exact <= bound + 1e-10);
        assert!(exact < 1e-10, "pushforward equals mu, so W_V = 0");
        assert!(bound > 0.1, "graph coupling is strictly suboptimal here");
    }

    #[test]
    fn symmetry_of_wv_exact() {
        let v = DivergenceSpec::SquaredEuclidean;
        let mut rng = SplitMix64::new(56);
        let mu = DiscreteMeasure::uniform(gauss_atoms(3, 2, &mut rng)).unwrap();
        let nu = DiscreteMeasure::new(gauss_atoms(5, 2, &mut rng), vec![0.1, 0.2, 0.3, 0.25, 0.15])
            .unwrap();
        let (a, _) = wv_exact(&mu, &nu, &v).unwrap();
        let (b, _) = wv_exact(&nu, &mu, &v).unwrap();
        assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn disjoint_supports_have_positive_divergence() {
        let v = DivergenceSpec::SquaredEuclidean;
        let mu = DiscreteMeasure::uniform(vec![pt(&[0.0]), pt(&[1.0])]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![pt(&[5.0]), pt(&[6.0])]).unwrap();
        let (value, _) = wv_exact(&mu, &nu, &v).unwrap();
        assert!(value > 1.0);
    }

    #[test]
    fn budget_and_normalization_errors() {
        let atoms = vec![pt(&[0.0]), pt(&[1.0])];
        assert!(DiscreteMeasure::new(atoms.clone(), vec![0.6, 0.6]).is_err());
        assert!(DiscreteMeasure::new(atoms, vec![1.2, -0.2]).is_err());
    }

    #[test]
    fn degenerate_weights_with_many_ties() {
        // Repeated atoms and tied costs exercise degenerate pivots.
        let v = DivergenceSpec::SquaredEuclidean;
        let mu = DiscreteMeasure::uniform(vec![pt(&[0.0]); 5]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![pt(&[1.0]); 5]).unwrap();
        let (value, _) = wv_exact(&mu, &nu, &v).unwrap();
        assert!((value - 1.0).abs() < 1e-12);
    }
}
