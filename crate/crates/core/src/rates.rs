//! Closed-form contraction coefficients, feasibility conditions, and bound
//! sequences.
//!
//! Every coefficient is plain real arithmetic; feasibility is always a strict
//! inequality with its slack reported, never a tolerance game.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// One printed feasibility condition `lhs < rhs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// `rhs - lhs`; positive when the condition passes.
    pub slack: f64,
}

impl Condition {
    /// A strict inequality `lhs < rhs`.
    pub fn strict(name: &str, lhs: f64, rhs: f64) -> Self {
        Condition { name: name.to_string(), lhs, rhs, pass: lhs < rhs, slack: rhs - lhs }
    }
}

/// Shape of the bound sequence a certificate induces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundKind {
    /// `V0 * alpha^k`
    Geometric,
    /// `V0 * alpha^k + epsilon (1 - alpha^k)/(1 - alpha)`
    GeometricPlusError { epsilon: f64 },
    /// `16/(sqrt(q) - alpha)^2 * (1 - alpha)^(k+1) * V0`
    CatalystEnvelope { q: f64, accel_alpha: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateCertificate {
    pub alpha: f64,
    pub feasible: bool,
    pub conditions: Vec<Condition>,
    pub bound: BoundKind,
}

impl RateCertificate {
    /// Assemble a certificate; the strict condition `alpha < 1` is always
    /// appended.
    pub fn assemble(alpha: f64, mut conditions: Vec<Condition>, bound: BoundKind) -> Self {
        conditions.push(Condition::strict("alpha < 1", alpha, 1.0));
        let feasible = conditions.iter().all(|c| c.pass);
        RateCertificate { alpha, feasible, conditions, bound }
    }

    pub fn require_feasible(&self) -> Result<&Self> {
        if self.feasible {
            Ok(self)
        } else {
            let failing: Vec<String> = self
                .conditions
                .iter()
                .filter(|c| !c.pass)
                .map(|c| format!("{} ({:.6} vs {:.6})", c.name, c.lhs, c.rhs))
                .collect();
            Err(Error::Infeasible(failing.join("; ")))
        }
    }

    /// Bound sequence value at step `k` starting from `v0`.
    pub fn bound_at(&self, v0: f64, k: usize) -> f64 {
        let ak = self.alpha.powi(k as i32);
        match self.bound {
            BoundKind::Geometric => v0 * ak,
            BoundKind::GeometricPlusError { epsilon } => {
                v0 * ak + epsilon * (1.0 - ak) / (1.0 - self.alpha)
            }
            BoundKind::CatalystEnvelope { q, accel_alpha } => {
                let factor = 16.0 / (q.sqrt() - accel_alpha).powi(2);
                factor * (1.0 - accel_alpha).powi(k as i32 + 1) * v0
            }
        }
    }
}

/// `gamma(eta) = 1 - 2 eta c + eta^2 L^2`.
pub fn gamma(eta: f64, c: f64, l: f64) -> f64 {
    1.0 - 2.0 * eta * c + eta * eta * l * l
}

/// Certificate form of `gamma`, flagging `gamma >= 1` as infeasible.
pub fn gamma_certificate(eta: f64, c: f64, l: f64) -> RateCertificate {
    let g = gamma(eta, c, l);
    let conditions = vec![
        Condition::strict("eta > 0", 0.0, eta),
        Condition::strict("eta < 2c/L^2", eta, 2.0 * c / (l * l)),
    ];
    RateCertificate::assemble(g, conditions, BoundKind::Geometric)
}

/// SAGA coefficient `max{gamma + b L^2, (eta^2/b + N - 1)/N}` with the
/// printed step-size conditions (the modulus symbol is read as c).
pub fn saga_alpha(eta: f64, b: f64, n: usize, c: f64, l: f64) -> RateCertificate {
    let g = gamma(eta, c, l);
    let branch_x = g + b * l * l;
    let branch_proxy = (eta * eta / b + n as f64 - 1.0) / n as f64;
    let alpha = branch_x.max(branch_proxy);
    let conditions = vec![
        Condition::strict("eta > 0", 0.0, eta),
        Condition::strict("eta < c/L^2", eta, c / (l * l)),
        Condition::strict("eta^2 < b", eta * eta, b),
        Condition::strict("gamma + b L^2 < 1", branch_x, 1.0),
    ];
    RateCertificate::assemble(alpha, conditions, BoundKind::Geometric)
}

/// Quadratic SVRG epoch coefficient
/// `1/(c eta (1 - 2 L eta) N) + 2 L eta / (1 - 2 L eta)`.
pub fn svrg_alpha_quadratic(eta: f64, c: f64, l: f64, n: usize) -> RateCertificate {
    let denom = 1.0 - 2.0 * l * eta;
    let conditions = vec![
        Condition::strict("eta > 0", 0.0, eta),
        Condition::strict("2 L eta < 1", 2.0 * l * eta, 1.0),
    ];
    let alpha = if denom > 0.0 {
        1.0 / (c * eta * denom * n as f64) + 2.0 * l * eta / denom
    } else {
        f64::INFINITY
    };
    RateCertificate::assemble(alpha, conditions, BoundKind::Geometric)
}

/// Per-epoch factor `xi_m = alpha^m + kappa (1 - alpha^m)/(1 - alpha)`,
/// with `alpha in (0,1)` and `kappa in [0, 1-alpha)`; then `xi_m < 1`.
pub fn svrg_xi(alpha: f64, kappa: f64, m: usize) -> Result<f64> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Parameter(format!("xi needs alpha in (0,1), got {alpha}")));
    }
    if !(0.0 <= kappa && kappa < 1.0 - alpha) {
        return Err(Error::Parameter(format!(
            "xi needs kappa in [0, 1 - alpha) = [0, {}), got {kappa}",
            1.0 - alpha
        )));
    }
    if m == 0 {
        return Err(Error::Parameter("xi needs m >= 1".into()));
    }
    let am = alpha.powi(m as i32);
    let xi = am + kappa * (1.0 - am) / (1.0 - alpha);
    debug_assert!(xi < 1.0);
    Ok(xi)
}

/// ASVRG epoch coefficient `1 - theta + theta^2/(M c eta)`.
pub fn asvrg_alpha(eta: f64, theta: f64, m: usize, c: f64) -> RateCertificate {
    let alpha = 1.0 - theta + theta * theta / (m as f64 * c * eta);
    let conditions = vec![
        Condition::strict("eta > 0", 0.0, eta),
        Condition::strict("theta > 0", 0.0, theta),
        Condition::strict("theta <= 1", theta, 1.0 + f64::EPSILON),
    ];
    RateCertificate::assemble(alpha, conditions, BoundKind::Geometric)
}

/// HSAG epoch coefficient built from
/// `K = max{gamma + b |S| L^2 / N, (eta^2/b + N - 1)/N}` and
/// `alpha = K^M + eta^2 L^2 |S^c| / (N (1-K)) * (1 - K^M)`.
pub fn hsag_rates(
    eta: f64,
    b: f64,
    n: usize,
    s_size: usize,
    c: f64,
    l: f64,
    m: usize,
) -> Result<RateCertificate> {
    if s_size > n {
        return Err(Error::Parameter(format!("|S| = {s_size} exceeds N = {n}")));
    }
    if m == 0 {
        return Err(Error::Parameter("HSAG needs epoch length M >= 1".into()));
    }
    let nf = n as f64;
    let g = gamma(eta, c, l);
    let branch_x = g + b * s_size as f64 * l * l / nf;
    let branch_proxy = (eta * eta / b + nf - 1.0) / nf;
    let k_eta = branch_x.max(branch_proxy);
    let s_comp = (n - s_size) as f64;
    let km = k_eta.powi(m as i32);
    let alpha = if k_eta < 1.0 {
        km + eta * eta * l * l * s_comp / (nf * (1.0 - k_eta)) * (1.0 - km)
    } else {
        f64::INFINITY
    };
    let step_cap = 2.0 * c / ((1.0 + s_size as f64 / nf) * l * l);
    let conditions = vec![
        Condition::strict("eta > 0", 0.0, eta),
        Condition::strict("eta < 2c/((1+|S|/N) L^2)", eta, step_cap),
        Condition::strict("eta^2 < b", eta * eta, b),
        Condition::strict("gamma + b |S| L^2/N < 1", branch_x, 1.0),
        Condition::strict("K < 1", k_eta, 1.0),
    ];
    Ok(RateCertificate::assemble(alpha, conditions, BoundKind::Geometric))
}

/// Catalyst parameter schedule and envelope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalystSchedule {
    /// `q = c/(c + theta)`
    pub q: f64,
    /// Acceleration parameter `alpha < sqrt(q)`.
    pub alpha: f64,
    /// `zeta_k`, `k = 0..=horizon`, from `zeta_0 = sqrt(q)` and
    /// `zeta_k^2 = (1 - zeta_k) zeta_{k-1}^2 + q zeta_k`.
    pub zeta: Vec<f64>,
    /// `beta_k = zeta_{k-1}(1 - zeta_{k-1})/(zeta_{k-1}^2 + zeta_k)`;
    /// `beta_0` uses `zeta_{-1} := zeta_0` (it multiplies `x_0 - x_{-1} = 0`).
    pub beta: Vec<f64>,
    /// `eps_k / (psi(x_0) - psi*) = (2/9)(1 - alpha)^k`.
    pub eps_ratio: Vec<f64>,
}

impl CatalystSchedule {
    /// `16/(sqrt(q) - alpha)^2 (1 - alpha)^(k+1)`, the envelope multiplier
    /// on the initial divergence.
    pub fn envelope(&self, k: usize) -> f64 {
        16.0 / (self.q.sqrt() - self.alpha).powi(2) * (1.0 - self.alpha).powi(k as i32 + 1)
    }
}

/// Solve the Catalyst recursions for `k = 0..=horizon`. Each `zeta_k` is the
/// positive root of `z^2 + (zeta_{k-1}^2 - q) z - zeta_{k-1}^2 = 0`.
pub fn catalyst_schedule(c: f64, theta: f64, alpha: f64, horizon: usize) -> Result<CatalystSchedule> {
    if !(c > 0.0) || !(theta > 0.0) {
        return Err(Error::Parameter(format!("catalyst needs c > 0 and theta > 0, got c={c}, theta={theta}")));
    }
    let q = c / (c + theta);
    if !(alpha < q.sqrt()) {
        return Err(Error::Parameter(format!(
            "catalyst needs alpha < sqrt(q) = {}, got alpha = {alpha}",
            q.sqrt()
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("catalyst needs alpha > 0, got {alpha}")));
    }
    let mut zeta = Vec::with_capacity(horizon + 1);
    zeta.push(q.sqrt());
    for _ in 0..horizon {
        let z_prev2 = zeta.last().unwrap() * zeta.last().unwrap();
        let half_b = 0.5 * (z_prev2 - q);
        let root = (half_b * half_b + z_prev2).sqrt() - half_b;
        zeta.push(root);
    }
    let mut beta = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        let z_prev = if k == 0 { zeta[0] } else { zeta[k - 1] };
        let z_cur = zeta[k];
        beta.push(z_prev * (1.0 - z_prev) / (z_prev * z_prev + z_cur));
    }
    let eps_ratio = (0..=horizon).map(|k| (2.0 / 9.0) * (1.0 - alpha).powi(k as i32)).collect();
    Ok(CatalystSchedule { q, alpha, zeta, beta, eps_ratio })
}

/// `alpha^k V0 + epsilon (1 - alpha^k)/(1 - alpha)`.
pub fn error_bounds(alpha: f64, epsilon: f64, v0: f64, k: usize) -> f64 {
    let ak = alpha.powi(k as i32);
    ak * v0 + epsilon * (1.0 - ak) / (1.0 - alpha)
}

/// Asymptotic Markov tail `epsilon / (kappa (1 - alpha))` for
/// `lim Pr{V(s_k, s*) >= kappa}`.
pub fn markov_tail(alpha: f64, epsilon: f64, kappa: f64) -> f64 {
    epsilon / (kappa * (1.0 - alpha))
}

/// Margin added to the squared spectral radius for the ASGD certificate.
pub const ASGD_RHO_MARGIN: f64 = 1e-6;
/// A-posteriori residual budget relative to `|P|`.
pub const ASGD_RESIDUAL_TOL: f64 = 1e-8;

/// Lyapunov certificate for the ASGD coupled difference dynamics.
#[derive(Debug, Clone)]
pub struct AsgdCertificate {
    /// Certified per-step factor for the quadratic form `ds' P ds`.
    pub rho: f64,
    pub p: DMatrix<f64>,
    /// Largest eigenvalue of `M' P M - rho P` (must be <= tol * |P|).
    pub residual: f64,
}

/// Closed-loop matrix of the coupled ASGD difference recursion, derived
/// directly from the update equations:
/// `dx+ = (1+beta) dx - beta dprev - eta Q ((1+alpha) dx - alpha dprev)`.
pub fn asgd_closed_loop(q: &DMatrix<f64>, eta: f64, alpha: f64, beta: f64) -> DMatrix<f64> {
    let d = q.nrows();
    let eye = DMatrix::<f64>::identity(d, d);
    let top_left = &eye * (1.0 + beta) - q * (eta * (1.0 + alpha));
    let top_right = &eye * (-beta) + q * (eta * alpha);
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(&top_left);
    m.view_mut((0, d), (d, d)).copy_from(&top_right);
    m.view_mut((d, 0), (d, d)).copy_from(&eye);
    m
}

/// Build `(rho, P)` with `rho` the squared spectral radius of the closed
/// loop plus a fixed margin and `P` solving the scaled Stein equation, then
/// verify `M' P M - rho P` is negative to within the stated budget.
pub fn asgd_certificate(
    q: &DMatrix<f64>,
    eta: f64,
    alpha: f64,
    beta: f64,
) -> Result<AsgdCertificate> {
    linalg::check_spd(q, "ASGD.Q")?;
    let m = asgd_closed_loop(q, eta, alpha, beta);
    let radius = linalg::spectral_radius(&m);
    if radius >= 1.0 {
        return Err(Error::Infeasible(format!(
            "ASGD closed loop has spectral radius {radius:.6} >= 1: no contraction at eta={eta}, alpha={alpha}, beta={beta}"
        )));
    }
    let rho = radius * radius + ASGD_RHO_MARGIN;
    let p = linalg::solve_scaled_stein(&m, rho)?;
    let resid_mat = m.transpose() * &p * &m - &p * rho;
    let (_, residual) = linalg::sym_eigenvalue_range(&resid_mat);
    let (_, p_norm) = linalg::sym_eigenvalue_range(&p);
    if residual > ASGD_RESIDUAL_TOL * p_norm {
        return Err(Error::Certification(format!(
            "ASGD Stein certificate residual {residual:.3e} exceeds {ASGD_RESIDUAL_TOL:.0e} * |P| = {:.3e}",
            ASGD_RESIDUAL_TOL * p_norm
        )));
    }
    Ok(AsgdCertificate { rho, p, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn gamma_worked_values() {
        assert!((gamma(0.05, 0.5, 2.0) - 0.96).abs() < 1e-9);
        assert!((gamma(0.1, 1.0, 2.0) - 0.84).abs() < 1e-9);
    }

    #[test]
    fn gamma_approaches_one_from_below() {
        // gamma -> 1 as eta -> 0+, from below iff c > 0.
        let mut prev = gamma(1e-2, 1.0, 2.0);
        for &eta in &[1e-3, 1e-4, 1e-5, 1e-6] {
            let g = gamma(eta, 1.0, 2.0);
            assert!(g < 1.0 && g > prev);
            prev = g;
        }
    }

    #[test]
    fn gamma_monotone_in_c_and_l() {
        let eta = 0.05;
        assert!(gamma(eta, 0.6, 2.0) < gamma(eta, 0.5, 2.0));
        assert!(gamma(eta, 0.5, 2.5) > gamma(eta, 0.5, 2.0));
    }

    #[test]
    fn saga_worked_example() {
        let cert = saga_alpha(0.1, 0.02, 10, 1.0, 2.0);
        assert!((cert.alpha - 0.95).abs() < 1e-9);
        assert!(cert.feasible, "{:?}", cert.conditions);
        // The three printed conditions: 0.1 < 0.25, 0.01 < 0.02, 0.92 < 1.
        let by_name = |n: &str| cert.conditions.iter().find(|c| c.name == n).unwrap();
        assert!((by_name("eta < c/L^2").rhs - 0.25).abs() < 1e-12);
        assert!((by_name("gamma + b L^2 < 1").lhs - 0.92).abs() < 1e-9);
    }

    #[test]
    fn saga_infeasible_when_eta_sq_exceeds_b() {
        let cert = saga_alpha(0.2, 0.01, 10, 1.0, 2.0);
        assert!(!cert.feasible);
        assert!(cert.require_feasible().is_err());
    }

    #[test]
    fn saga_small_n_branch_behavior() {
        // N = 1, b slightly above eta^2: proxy branch -> eta^2/b just below 1,
        // certificate driven by whichever branch dominates.
        let eta = 0.05;
        let b = eta * eta * 1.0001;
        let cert = saga_alpha(eta, b, 1, 1.0, 2.0);
        let proxy_branch = eta * eta / b;
        assert!(proxy_branch < 1.0);
        // One ulp of slack: the printed formula (eta^2/b + N - 1)/N
        // re-associates through the additions.
        assert!(cert.alpha >= proxy_branch - 1e-15);
    }

    #[test]
    fn svrg_quadratic_worked_example() {
        let cert = svrg_alpha_quadratic(0.1, 1.0, 1.0, 100);
        assert!((cert.alpha - 0.375).abs() < 1e-9);
        assert!(cert.feasible);
        // 2 L eta >= 1 is infeasible.
        assert!(!svrg_alpha_quadratic(0.5, 1.0, 1.0, 100).feasible);
        // N -> infinity limit: 2 L eta / (1 - 2 L eta).
        let big = svrg_alpha_quadratic(0.1, 1.0, 1.0, 100_000_000);
        assert!((big.alpha - 0.25).abs() < 1e-6);
    }

    #[test]
    fn svrg_xi_worked_values() {
        assert!((svrg_xi(0.5, 0.25, 2).unwrap() - 0.625).abs() < 1e-9);
        assert_eq!(svrg_xi(0.5, 0.0, 3).unwrap(), 0.125);
        let one = svrg_xi(0.3, 0.2, 1).unwrap();
        assert!((one - 0.5).abs() < 1e-12);
        assert!(svrg_xi(0.5, 0.6, 2).is_err());
    }

    #[test]
    fn svrg_xi_monotone_in_kappa() {
        for m in [1usize, 2, 5, 20] {
            let mut prev = -1.0;
            for i in 0..10 {
                let kappa = 0.049 * i as f64;
                let xi = svrg_xi(0.5, kappa, m).unwrap();
                assert!(xi > prev);
                assert!(xi < 1.0);
                prev = xi;
            }
        }
    }

    #[test]
    fn asvrg_worked_example() {
        let cert = asvrg_alpha(0.1, 0.5, 10, 1.0);
        assert!((cert.alpha - 0.75).abs() < 1e-9);
        assert!(cert.feasible);
        // theta = 1, M c eta = 1 gives exactly 1: boundary, infeasible.
        let edge = asvrg_alpha(0.1, 1.0, 10, 1.0);
        assert!((edge.alpha - 1.0).abs() < 1e-12);
        assert!(!edge.feasible);
    }

    #[test]
    fn asvrg_large_m_limit() {
        let cert = asvrg_alpha(0.1, 0.5, 10_000_000, 1.0);
        assert!((cert.alpha - 0.5).abs() < 1e-6);
    }

    #[test]
    fn hsag_worked_example() {
        let cert = hsag_rates(0.1, 0.02, 10, 5, 1.0, 2.0, 5).unwrap();
        // K = max{0.88, 0.95} = 0.95; alpha = 0.95^5 + 0.4 (1 - 0.95^5).
        assert!((cert.alpha - 0.8642685625).abs() < 1e-9);
        assert!(cert.feasible, "{:?}", cert.conditions);
    }

    #[test]
    fn hsag_s_full_collapses_to_km() {
        let cert = hsag_rates(0.1, 0.02, 10, 10, 1.0, 2.0, 5).unwrap();
        let g = gamma(0.1, 1.0, 2.0);
        let k = (g + 0.02 * 10.0 * 4.0 / 10.0).max((0.01 / 0.02 + 9.0) / 10.0);
        assert!((cert.alpha - k.powi(5)).abs() < 1e-12);
    }

    #[test]
    fn hsag_one_step_empty_s() {
        let cert = hsag_rates(0.1, 0.02, 10, 0, 1.0, 2.0, 1).unwrap();
        let g = gamma(0.1, 1.0, 2.0);
        let k = g.max((0.01 / 0.02 + 9.0) / 10.0);
        let expect = k + 0.01 * 4.0 * 10.0 / (10.0 * (1.0 - k)) * (1.0 - k);
        assert!((cert.alpha - expect).abs() < 1e-12);
    }

    #[test]
    fn catalyst_fixed_point_schedule() {
        // c = 1, theta = 3: q = 1/4, zeta = 1/2 for all k, beta = 1/3.
        let s = catalyst_schedule(1.0, 3.0, 0.4, 20).unwrap();
        assert_eq!(s.q, 0.25);
        for &z in &s.zeta {
            assert_eq!(z, 0.5, "zeta fixed point must be machine-exact");
        }
        for &b in &s.beta {
            assert!((b - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((s.eps_ratio[0] - 2.0 / 9.0).abs() < 1e-15);
        assert!((s.envelope(0) - 16.0 / 0.01 * 0.6).abs() < 1e-9);
    }

    #[test]
    fn catalyst_rejects_alpha_at_sqrt_q() {
        assert!(catalyst_schedule(1.0, 3.0, 0.5, 5).is_err());
        assert!(catalyst_schedule(1.0, 3.0, 0.6, 5).is_err());
        assert!(catalyst_schedule(1.0, 3.0, 0.4, 5).is_ok());
    }

    #[test]
    fn error_bounds_worked_values() {
        // k -> infinity limit with alpha = 0.5, eps = 0.1: eps/(1-alpha) = 0.2.
        assert!((error_bounds(0.5, 0.1, 5.0, 600) - 0.2).abs() < 1e-9);
        // eps = 0 collapses to alpha^k V0.
        assert_eq!(error_bounds(0.5, 0.0, 8.0, 3), 1.0);
        // one-step form.
        assert!((error_bounds(0.5, 0.1, 8.0, 1) - 4.1).abs() < 1e-12);
    }

    #[test]
    fn error_bounds_monotonicity_in_k() {
        // Nonincreasing when V0 >= eps/(1-alpha), nondecreasing otherwise.
        for &(alpha, eps) in &[(0.5, 0.1), (0.9, 0.02)] {
            let stat = eps / (1.0 - alpha);
            for &v0 in &[stat * 4.0, stat * 0.25] {
                let mut prev = error_bounds(alpha, eps, v0, 0);
                for k in 1..60 {
                    let cur = error_bounds(alpha, eps, v0, k);
                    if v0 >= stat {
                        assert!(cur <= prev + 1e-15);
                    } else {
                        assert!(cur >= prev - 1e-15);
                    }
                    prev = cur;
                }
            }
        }
    }

    #[test]
    fn markov_tail_worked_values() {
        assert!((markov_tail(0.9, 0.01, 0.5) - 0.2).abs() < 1e-9);
        assert_eq!(markov_tail(0.9, 0.0, 0.5), 0.0);
        assert!(markov_tail(0.9, 0.01, 1e12) < 1e-12);
    }

    #[test]
    fn asgd_certificate_reduces_to_sgd() {
        // beta = alpha = 0: closed loop embeds I - eta Q; rho matches the
        // squared eigenvalue bound and stays under gamma.
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let eta = 0.1;
        let cert = asgd_certificate(&q, eta, 0.0, 0.0).unwrap();
        let expect: f64 = [1.0f64, 2.0]
            .iter()
            .map(|&lam| (1.0 - eta * lam).abs())
            .fold(0.0, f64::max);
        assert!((cert.rho - (expect * expect + ASGD_RHO_MARGIN)).abs() < 1e-12);
        assert!(cert.rho <= gamma(eta, 1.0, 2.0) + ASGD_RHO_MARGIN);
    }

    #[test]
    fn asgd_heavy_ball_matches_companion_eigenvalues() {
        // Per eigenvalue lam of Q, the 2x2 companion [[1+b-eta lam, -b],[1,0]]
        // drives one mode; the 4x4 spectral radius is the max over modes.
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let (eta, beta) = (0.1, 0.5);
        let cert = asgd_certificate(&q, eta, 0.0, beta).unwrap();
        let mut rho_oracle: f64 = 0.0;
        for &lam in &[1.0, 2.0] {
            let tr = 1.0 + beta - eta * lam;
            let disc = tr * tr - 4.0 * beta;
            let modulus = if disc >= 0.0 {
                let r1 = (tr + disc.sqrt()) / 2.0;
                let r2 = (tr - disc.sqrt()) / 2.0;
                r1.abs().max(r2.abs())
            } else {
                beta.sqrt() // complex pair: |roots|^2 = det = beta
            };
            rho_oracle = rho_oracle.max(modulus);
        }
        assert!((cert.rho - (rho_oracle * rho_oracle + ASGD_RHO_MARGIN)).abs() < 1e-10);
        assert!(cert.residual <= ASGD_RESIDUAL_TOL);
    }

    #[test]
    fn asgd_infeasible_when_step_too_large() {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        assert!(matches!(
            asgd_certificate(&q, 1.5, 0.0, 0.0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn bound_at_shapes() {
        let cert = RateCertificate::assemble(0.5, vec![], BoundKind::Geometric);
        assert_eq!(cert.bound_at(8.0, 3), 1.0);
        let cert = RateCertificate::assemble(
            0.5,
            vec![],
            BoundKind::GeometricPlusError { epsilon: 0.1 },
        );
        assert!((cert.bound_at(8.0, 1) - 4.1).abs() < 1e-12);
        let cert = RateCertificate::assemble(
            0.6,
            vec![],
            BoundKind::CatalystEnvelope { q: 0.25, accel_alpha: 0.4 },
        );
        assert!((cert.bound_at(1.0, 0) - 1600.0 * 0.6).abs() < 1e-9);
    }
}
