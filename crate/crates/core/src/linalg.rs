//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Eigenvalue range (min, max) of a symmetric matrix. The input is
/// symmetrized first so roundoff asymmetry cannot poison the decomposition.
pub fn sym_eigenvalue_range(m: &DMatrix<f64>) -> (f64, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let eigs = sym.symmetric_eigenvalues();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &e in eigs.iter() {
        lo = lo.min(e);
        hi = hi.max(e);
    }
    (lo, hi)
}

/// Symmetric positive definite check: symmetry to a relative 1e-10 and
/// smallest eigenvalue above 1e-10 times the largest (scale-invariant).
pub fn check_spd(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "{name}: expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1e-300);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(Error::Parameter(format!(
            "{name}: matrix is not symmetric (asymmetry {asym:.3e} at scale {scale:.3e})"
        )));
    }
    let (lo, hi) = sym_eigenvalue_range(m);
    if !(lo > 1e-10 * hi.max(0.0)) {
        return Err(Error::Parameter(format!(
            "{name}: matrix is not positive definite (eigenvalues in [{lo:.3e}, {hi:.3e}])"
        )));
    }
    Ok(())
}

/// Haar-ish random orthogonal matrix: QR of a Gaussian matrix with the sign
/// of R's diagonal folded into Q.
pub fn random_orthogonal<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r_diag: Vec<f64> = (0..d).map(|i| qr.r()[(i, i)]).collect();
    let mut q = qr.q();
    for (j, &rj) in r_diag.iter().enumerate() {
        if rj < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Spectral radius of a general real square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Solve `A x = b` by LU with partial pivoting.
pub fn solve_linear(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Certification("linear solve failed: matrix is singular".into()))
}

/// Solve the scaled discrete Stein equation
/// `M^T P M - rho P = -rho I` for symmetric positive definite `P`,
/// given `rho` strictly above the squared spectral radius of `M`.
///
/// Equivalent to the series `P = sum_j (M^T)^j M^j / rho^j`, but computed as
/// one dense linear solve in the Kronecker lifting, which also covers
/// defective `M` and spectral radii arbitrarily close to the margin.
pub fn solve_scaled_stein(m: &DMatrix<f64>, rho: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Shape("Stein equation needs a square matrix".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::Parameter(format!("Stein scale must be positive, got {rho}")));
    }
    let scaled_t = m.transpose() / rho.sqrt();
    // vec(Mt^T P Mt) = (Mt^T (x) Mt^T) vec(P) with Mt = M / sqrt(rho); the
    // transpose-of-transpose bookkeeping collapses because the equation is
    // symmetric in P.
    let kron = scaled_t.kronecker(&scaled_t);
    let system = kron - DMatrix::<f64>::identity(n * n, n * n);
    let rhs = DVector::from_fn(n * n, |idx, _| {
        let (i, j) = (idx % n, idx / n);
        if i == j {
            -1.0
        } else {
            0.0
        }
    });
    let sol = solve_linear(&system, &rhs)?;
    let p = DMatrix::from_fn(n, n, |i, j| sol[j * n + i]);
    let p = (&p + p.transpose()) * 0.5;
    check_spd(&p, "Stein solution")?;
    Ok(p)
}
