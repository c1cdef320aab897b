//! Direct factorizations and dense eigensolvers backed by `faer`.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Mat, Side};
use nalgebra::DMatrix;

use crate::error::{Result, WgError};
use crate::sparse::CsrMatrix;

/// Sparse `L L^T` factorization of a symmetric positive definite matrix,
/// with fill-reducing ordering.
pub struct SparseCholesky {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl std::fmt::Debug for SparseCholesky {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseCholesky")
            .field("n", &self.n)
            .finish()
    }
}

impl SparseCholesky {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(WgError::DimensionMismatch(format!(
                "{}x{} is not square",
                n,
                a.ncols()
            )));
        }
        let lower: Vec<_> = a
            .triplets()
            .filter(|&(i, j, _)| j <= i)
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &lower)
            .map_err(|e| WgError::InvalidMatrix(format!("{e:?}")))?;
        let llt = mat
            .sp_cholesky(Side::Lower)
            .map_err(|e| WgError::NotSpd(format!("sparse Cholesky failed: {e:?}")))?;
        Ok(Self { n, llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = Col::<f64>::from_fn(self.n, |i| b[i]);
        self.llt.solve_in_place(x.as_mat_mut());
        (0..self.n).map(|i| x[i]).collect()
    }
}

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// `C = L^{-1} A L^{-T}` for `M = L L^T`, together with `L`.
fn reduce_pencil(
    a: &DMatrix<f64>,
    m: Option<&DMatrix<f64>>,
) -> Result<(Mat<f64>, Option<Mat<f64>>)> {
    let fa = to_faer(a);
    let Some(m) = m else {
        return Ok((fa, None));
    };
    let l = to_faer(m)
        .llt(Side::Lower)
        .map_err(|e| WgError::NotSpd(format!("mass matrix: {e:?}")))?
        .L()
        .to_owned();
    let mut c = fa;
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(
        l.as_ref(),
        c.as_mut(),
        faer::Par::Seq,
    );
    let mut ct = c.transpose().to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(
        l.as_ref(),
        ct.as_mut(),
        faer::Par::Seq,
    );
    Ok((ct, Some(l)))
}

/// All eigenvalues of the pencil `A x = lambda M x` (ascending); `M = I` when
/// absent. Fails if `M` is not positive definite.
pub fn dense_generalized_eigenvalues(
    a: &DMatrix<f64>,
    m: Option<&DMatrix<f64>>,
) -> Result<Vec<f64>> {
    let (c, _) = reduce_pencil(a, m)?;
    c.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| WgError::Internal(format!("dense eigensolver: {e:?}")))
}

/// Eigenvalues (ascending) and `M`-orthonormal eigenvectors (as columns) of
/// the pencil `A x = lambda M x`.
pub fn dense_generalized_eigen(
    a: &DMatrix<f64>,
    m: Option<&DMatrix<f64>>,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let (c, l) = reduce_pencil(a, m)?;
    let eig = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| WgError::Internal(format!("dense eigensolver: {e:?}")))?;
    let n = a.nrows();
    let values: Vec<f64> = (0..n).map(|i| eig.S()[i]).collect();
    let mut y = eig.U().to_owned();
    if let Some(l) = l {
        // x = L^{-T} y
        faer::linalg::triangular_solve::solve_upper_triangular_in_place(
            l.transpose(),
            y.as_mut(),
            faer::Par::Seq,
        );
    }
    Ok((values, DMatrix::from_fn(n, n, |i, j| y[(i, j)])))
}

/// Checks positive definiteness by attempting a dense Cholesky factorization.
pub fn is_positive_definite(a: &DMatrix<f64>) -> bool {
    to_faer(a).llt(Side::Lower).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_cholesky_solves() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 4.0),
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
                (2, 2, 2.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
            ],
        );
        let chol = SparseCholesky::new(&a).unwrap();
        let x = chol.solve(&[1.0, 2.0, 3.0]);
        let r = a.residual(&[1.0, 2.0, 3.0], &x);
        assert!(r.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = CsrMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(SparseCholesky::new(&a), Err(WgError::NotSpd(_))));
        assert!(!is_positive_definite(&a.to_dense()));
    }

    #[test]
    fn generalized_pencil() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = dense_generalized_eigenvalues(&a, Some(&a)).unwrap();
        assert!(e.iter().all(|v| (v - 1.0).abs() < 1e-14));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0]));
        assert_eq!(
            dense_generalized_eigenvalues(&d, None).unwrap(),
            vec![1.0, 4.0]
        );
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5]));
        let e = dense_generalized_eigenvalues(&d, Some(&m)).unwrap();
        assert!((e[0] - 0.5).abs() < 1e-14 && (e[1] - 8.0).abs() < 1e-14);
    }

    #[test]
    fn generalized_eigenvectors() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, -1.0, 2.0]);
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 1.5]);
        let (vals, vecs) = dense_generalized_eigen(&a, Some(&m)).unwrap();
        for (j, &l) in vals.iter().enumerate() {
            let x = vecs.column(j);
            assert!((&a * x - &m * x * l).amax() < 1e-13);
            assert!(((x.transpose() * &m * x)[(0, 0)] - 1.0).abs() < 1e-13);
        }
    }
}
