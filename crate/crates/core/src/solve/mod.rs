//! Smoothers, the two-level preconditioner, the preconditioned stationary
//! iteration and empirical contraction estimates.

pub mod smoother;
pub mod twolevel;
pub mod vcycle;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, WgError};
use crate::linalg::SparseCholesky;
use crate::sparse::{dot, CsrMatrix};

pub use smoother::{Smoother, SmootherKind, SmootherSpec};
pub use twolevel::{CoarseKind, CoarseSolver, TwoLevel};
pub use vcycle::VCycle;

/// A linear map approximating `A^{-1}`, applied to residual vectors.
pub trait Preconditioner {
    fn dim(&self) -> usize;
    fn apply(&self, r: &[f64]) -> Vec<f64>;
}

#[derive(Clone, Copy, Debug)]
pub struct IdentityPreconditioner(pub usize);

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }
}

impl Preconditioner for SparseCholesky {
    fn dim(&self) -> usize {
        SparseCholesky::dim(self)
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        self.solve(r)
    }
}

/// Dense matrix of a preconditioner, column by column.
pub fn preconditioner_matrix(pc: &dyn Preconditioner) -> DMatrix<f64> {
    let n = pc.dim();
    let mut out = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        out.set_column(j, &DVector::from_vec(pc.apply(&e)));
        e[j] = 0.0;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationReport {
    pub iterations: usize,
    /// Monitored norm at every iterate, starting with the initial one: the
    /// energy norm of the error when `b = 0`, otherwise `sqrt(r^T B r)`.
    pub history: Vec<f64>,
    pub converged: bool,
    pub final_reduction: f64,
    /// `(final / initial)^(1 / iterations)`.
    pub avg_rate: f64,
}

/// Runs `x <- x + B (b - A x)` until the monitored norm drops below
/// `tol` times its initial value. Hitting `max_iters` is reported through
/// `converged = false`.
pub fn stationary_solve(
    a: &CsrMatrix,
    b: &[f64],
    pc: &dyn Preconditioner,
    x0: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, IterationReport)> {
    let n = a.nrows();
    if b.len() != n || x0.len() != n || pc.dim() != n {
        return Err(WgError::DimensionMismatch(format!(
            "system of size {n}, rhs {}, initial guess {}, preconditioner {}",
            b.len(),
            x0.len(),
            pc.dim()
        )));
    }
    let homogeneous = b.iter().all(|&v| v == 0.0);
    let mut x = x0.to_vec();
    let mut history = Vec::new();
    let mut converged = false;
    loop {
        let r = a.residual(b, &x);
        let z = pc.apply(&r);
        let measure = if homogeneous {
            a.quadratic_form(&x).max(0.0).sqrt()
        } else {
            dot(&r, &z).max(0.0).sqrt()
        };
        history.push(measure);
        if measure <= tol * history[0] {
            converged = true;
            break;
        }
        if history.len() > max_iters {
            break;
        }
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi += zi);
    }
    let iterations = history.len() - 1;
    let (first, last) = (history[0], *history.last().unwrap());
    let final_reduction = if first > 0.0 { last / first } else { 0.0 };
    let avg_rate = if iterations == 0 {
        0.0
    } else {
        final_reduction.powf(1.0 / iterations as f64)
    };
    Ok((
        x,
        IterationReport {
            iterations,
            history,
            converged,
            final_reduction,
            avg_rate,
        },
    ))
}

fn random_unit_in_energy(a: &CsrMatrix, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..a.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nrm = a.quadratic_form(&x).sqrt();
    x.iter_mut().for_each(|v| *v /= nrm);
    x
}

/// Power iteration in the `A` inner product for the dominant eigenvalue of
/// the `A`-self-adjoint map `op`, maximized over `probes` seeded starts.
/// Returns the largest `||op x||_A` over unit `x` reached.
fn energy_power_iteration(
    a: &CsrMatrix,
    op: &dyn Fn(&[f64]) -> Vec<f64>,
    probes: usize,
    iters: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..probes.max(1) {
        let mut x = random_unit_in_energy(a, &mut rng);
        let mut est = 0.0;
        for _ in 0..iters {
            let y = op(&x);
            let ny = a.quadratic_form(&y).max(0.0).sqrt();
            let converged = (ny - est).abs() <= 1e-14 * ny;
            est = ny;
            if ny == 0.0 {
                break;
            }
            x = y.into_iter().map(|v| v / ny).collect();
            if converged {
                break;
            }
        }
        best = best.max(est);
    }
    best
}

/// `rho = ||I - B A||_A` estimated by power iteration on the error
/// propagator; a value of one or more means `B` is not a convergent
/// preconditioner for `A`.
pub fn estimate_contraction(
    a: &CsrMatrix,
    pc: &dyn Preconditioner,
    probes: usize,
    iters: usize,
    seed: u64,
) -> Result<f64> {
    if pc.dim() != a.nrows() {
        return Err(WgError::DimensionMismatch(
            "preconditioner and matrix differ in size".into(),
        ));
    }
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let op = |x: &[f64]| {
        let bax = pc.apply(&a.mul_vec(x));
        x.iter().zip(&bax).map(|(u, v)| u - v).collect::<Vec<_>>()
    };
    let rho = energy_power_iteration(a, &op, probes, iters, seed);
    if !(rho < 1.0) {
        return Err(WgError::PreconditionerDefect { rho });
    }
    Ok(rho)
}

/// Power-iteration estimate of `lambda_max(B A)` in the `A` inner product.
pub fn estimate_lambda_max_ba(
    a: &CsrMatrix,
    pc: &dyn Preconditioner,
    probes: usize,
    iters: usize,
    seed: u64,
) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let op = |x: &[f64]| pc.apply(&a.mul_vec(x));
    energy_power_iteration(a, &op, probes, iters, seed)
}

/// Eigenvalues of `B A` from the dense pencil `(A B A, A)` (ascending).
pub fn dense_ba_eigenvalues(a: &CsrMatrix, pc: &dyn Preconditioner) -> Result<Vec<f64>> {
    let ad = a.to_dense();
    let bd = preconditioner_matrix(pc);
    let bd = (&bd + bd.transpose()) * 0.5;
    crate::linalg::dense_generalized_eigenvalues(&(&ad * bd * &ad), Some(&ad))
}
