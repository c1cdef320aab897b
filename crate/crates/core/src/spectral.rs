//! Extreme eigenvalues of `A x = lambda M x` for sparse SPD matrices.
//!
//! Small problems use a dense eigendecomposition. Larger ones use Lanczos
//! with full reorthogonalization in the `M` inner product: on `M^{-1} A` for
//! `lambda_max`, and on the shift-inverted `A^{-1} M` for `lambda_min`.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, WgError};
use crate::linalg::{dense_generalized_eigen, is_positive_definite, SparseCholesky};
use crate::sparse::{dot, norm2, CsrMatrix};

pub const DENSE_THRESHOLD: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Dense,
    Iterative,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Dense => "dense",
            Self::Iterative => "iterative",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub method: Method,
    /// `||A x - lambda M x|| / ||x||` of the returned eigenpairs.
    pub residual_min: f64,
    pub residual_max: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct EigOptions {
    pub dense_threshold: usize,
    /// Relative Ritz residual at which Lanczos stops.
    pub tol: f64,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            dense_threshold: DENSE_THRESHOLD,
            tol: 1e-10,
            max_steps: 500,
            seed: 0x5eed,
        }
    }
}

/// Lanczos steps spent on `lambda_max` before switching to shift-invert.
const ROUGH_STEPS: usize = 100;

pub fn extreme_eigs(a: &CsrMatrix, m: Option<&CsrMatrix>) -> Result<SpectrumReport> {
    extreme_eigs_with(a, m, EigOptions::default())
}

fn residual(a: &CsrMatrix, m: Option<&CsrMatrix>, lambda: f64, x: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let mx = m.map_or_else(|| x.to_vec(), |m| m.mul_vec(x));
    let r: Vec<f64> = ax.iter().zip(&mx).map(|(u, v)| u - lambda * v).collect();
    norm2(&r) / norm2(x)
}

pub fn extreme_eigs_with(
    a: &CsrMatrix,
    m: Option<&CsrMatrix>,
    opts: EigOptions,
) -> Result<SpectrumReport> {
    let n = a.nrows();
    if a.ncols() != n || m.is_some_and(|m| m.nrows() != n || m.ncols() != n) {
        return Err(WgError::DimensionMismatch(
            "eigenproblem matrices must be square and equal in size".into(),
        ));
    }
    if n == 0 {
        return Err(WgError::InvalidMatrix("empty eigenproblem".into()));
    }
    let (lambda_min, x_min, lambda_max, x_max, method) = if n <= opts.dense_threshold {
        let ad = a.to_dense();
        if !is_positive_definite(&ad) {
            return Err(WgError::NotSpd("matrix is not positive definite".into()));
        }
        let md = m.map(|m| m.to_dense());
        let (vals, vecs) = dense_generalized_eigen(&ad, md.as_ref())?;
        let col = |j: usize| vecs.column(j).iter().copied().collect::<Vec<_>>();
        (vals[0], col(0), vals[n - 1], col(n - 1), Method::Dense)
    } else {
        let a_chol = SparseCholesky::new(a)?;
        let m_chol = m.map(SparseCholesky::new).transpose()?;
        let weight = |x: &[f64]| m.map_or_else(|| x.to_vec(), |m| m.mul_vec(x));
        let rough = EigOptions {
            max_steps: opts.max_steps.min(ROUGH_STEPS),
            ..opts
        };
        let (theta, x, bound) = lanczos_largest(
            n,
            &|x| match &m_chol {
                Some(c) => c.solve(&a.mul_vec(x)),
                None => a.mul_vec(x),
            },
            &weight,
            rough,
        );
        let (lambda_max, x_max) = if bound <= opts.tol * theta {
            (theta, x)
        } else {
            refine_largest(a, m, theta, bound, &weight, opts)?
        };
        let (theta_inv, x_min, _) =
            lanczos_largest(n, &|x| a_chol.solve(&weight(x)), &weight, opts);
        (1.0 / theta_inv, x_min, lambda_max, x_max, Method::Iterative)
    };
    if !(lambda_min > 0.0) {
        return Err(WgError::NotSpd(format!(
            "smallest eigenvalue {lambda_min:e} is not positive"
        )));
    }
    Ok(SpectrumReport {
        lambda_min,
        lambda_max,
        kappa: lambda_max / lambda_min,
        method,
        residual_min: residual(a, m, lambda_min, &x_min),
        residual_max: residual(a, m, lambda_max, &x_max),
    })
}

/// Shift-invert Lanczos for `lambda_max` with a shift `sigma` above the
/// spectrum; a successful Cholesky factorization of `sigma M - A` certifies
/// that the shift lies above `lambda_max`.
fn refine_largest(
    a: &CsrMatrix,
    m: Option<&CsrMatrix>,
    theta: f64,
    bound: f64,
    weight: &dyn Fn(&[f64]) -> Vec<f64>,
    opts: EigOptions,
) -> Result<(f64, Vec<f64>)> {
    let n = a.nrows();
    let mut delta = (1e-3 * theta).max(2.0 * bound);
    for _ in 0..40 {
        let sigma = theta + delta;
        let mut triplets: Vec<(usize, usize, f64)> =
            a.triplets().map(|(i, j, v)| (i, j, -v)).collect();
        match m {
            Some(m) => triplets.extend(m.triplets().map(|(i, j, v)| (i, j, sigma * v))),
            None => triplets.extend((0..n).map(|i| (i, i, sigma))),
        }
        let shifted = CsrMatrix::from_triplets(n, n, &triplets);
        let Ok(chol) = SparseCholesky::new(&shifted) else {
            delta *= 4.0;
            continue;
        };
        let (mu, x, _) = lanczos_largest(n, &|x| chol.solve(&weight(x)), weight, opts);
        return Ok((sigma - 1.0 / mu, x));
    }
    Err(WgError::Internal(
        "no shift above the spectrum found".into(),
    ))
}

const BLOCK: usize = 32;

/// Lanczos vectors stored column-major in fixed-width blocks.
struct Basis {
    n: usize,
    blocks: Vec<Mat<f64>>,
    len: usize,
}

impl Basis {
    fn new(n: usize) -> Self {
        Self {
            n,
            blocks: Vec::new(),
            len: 0,
        }
    }

    fn push(&mut self, v: &[f64]) {
        let j = self.len % BLOCK;
        if j == 0 {
            self.blocks.push(Mat::zeros(self.n, BLOCK));
        }
        let block = self.blocks.last_mut().unwrap();
        block
            .col_mut(j)
            .iter_mut()
            .zip(v)
            .for_each(|(b, x)| *b = *x);
        self.len += 1;
    }

    fn block(&self, i: usize) -> MatRef<'_, f64> {
        let cols = BLOCK.min(self.len - i * BLOCK);
        self.blocks[i].as_ref().subcols(0, cols)
    }

    /// `w -= V c` with `c = V^T y`.
    fn project_out(&self, w: &mut [f64], y: &[f64]) {
        let y = MatRef::from_column_major_slice(y, self.n, 1);
        for i in 0..self.blocks.len() {
            let v = self.block(i);
            let mut c = Mat::<f64>::zeros(v.ncols(), 1);
            matmul(c.as_mut(), Accum::Replace, v.transpose(), y, 1.0, Par::Seq);
            let wm = MatMut::from_column_major_slice_mut(w, self.n, 1);
            matmul(wm, Accum::Add, v, c.as_ref(), -1.0, Par::Seq);
        }
    }

    /// `V s`.
    fn combine(&self, s: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for i in 0..self.blocks.len() {
            let v = self.block(i);
            let si =
                MatRef::from_column_major_slice(&s[i * BLOCK..i * BLOCK + v.ncols()], v.ncols(), 1);
            let xm = MatMut::from_column_major_slice_mut(&mut x, self.n, 1);
            matmul(xm, Accum::Add, v, si, 1.0, Par::Seq);
        }
        x
    }
}

/// Largest eigenpair of `op`, self-adjoint in the inner product
/// `(x, y)_W = x^T W y`, by Lanczos with full reorthogonalization; also
/// returns the Ritz residual bound.
fn lanczos_largest(
    n: usize,
    op: &dyn Fn(&[f64]) -> Vec<f64>,
    weight: &dyn Fn(&[f64]) -> Vec<f64>,
    opts: EigOptions,
) -> (f64, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nv = dot(&v, &weight(&v)).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);

    let steps = opts.max_steps.min(n);
    let mut basis = Basis::new(n);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut best: (f64, Vec<f64>, f64) = (0.0, Vec::new(), f64::INFINITY);
    let mut current = v;
    for k in 0..steps {
        basis.push(&current);
        let mut w = op(&current);
        alpha.push(dot(&w, &weight(&current)));
        // classical Gram-Schmidt twice in the W inner product
        for _ in 0..2 {
            let ww = weight(&w);
            basis.project_out(&mut w, &ww);
        }
        let b = dot(&w, &weight(&w)).max(0.0).sqrt();

        let size = k + 1;
        if size == steps || b == 0.0 || size % 10 == 0 {
            let mut t = DMatrix::zeros(size, size);
            for i in 0..size {
                t[(i, i)] = alpha[i];
                if i + 1 < size {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (j, theta) = eig.eigenvalues.iter().copied().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, x)| if x > acc.1 { (i, x) } else { acc },
            );
            let s: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
            let bound = b * s[size - 1].abs();
            best = (theta, s, bound);
            if bound <= opts.tol * theta.abs() || b <= f64::EPSILON * theta.abs() {
                break;
            }
        }
        if size == steps {
            break;
        }
        beta.push(b);
        current = w.into_iter().map(|x| x / b).collect();
    }
    let (theta, s, bound) = best;
    (theta, basis.combine(&s), bound)
}
