//! The two-level preconditioner: smoothing on the WG space around a coarse
//! correction through the conforming P1 space on the same mesh.

use crate::coarse::{galerkin_coarse, Prolongation};
use crate::error::{Result, WgError};
use crate::linalg::SparseCholesky;
use crate::solve::smoother::{Smoother, SmootherSpec};
use crate::solve::vcycle::VCycle;
use crate::solve::Preconditioner;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoarseKind {
    Exact,
    VCycle,
}

impl std::str::FromStr for CoarseKind {
    type Err = WgError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Self::Exact),
            "vcycle" | "v-cycle" => Ok(Self::VCycle),
            other => Err(WgError::InvalidArgument(format!(
                "unknown coarse solver '{other}' (expected exact or vcycle)"
            ))),
        }
    }
}

impl std::fmt::Display for CoarseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::VCycle => "vcycle",
        })
    }
}

pub enum CoarseSolver {
    /// Sparse Cholesky factorization of the coarse matrix.
    Exact(SparseCholesky),
    VCycle(VCycle),
    /// The coarse space is empty.
    Empty,
}

impl CoarseSolver {
    pub fn exact(coarse: &CsrMatrix) -> Result<Self> {
        if coarse.nrows() == 0 {
            return Ok(Self::Empty);
        }
        Ok(Self::Exact(SparseCholesky::new(coarse)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Exact(c) => c.dim(),
            Self::VCycle(v) => v.dim(),
            Self::Empty => 0,
        }
    }

    pub fn kind(&self) -> CoarseKind {
        match self {
            Self::VCycle(_) => CoarseKind::VCycle,
            _ => CoarseKind::Exact,
        }
    }

    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Self::Exact(c) => c.solve(r),
            Self::VCycle(v) => v.apply(r),
            Self::Empty => Vec::new(),
        }
    }
}

/// `B_h` in matrix form; every component is symmetric, so the adjoint steps
/// reuse the same smoother and coarse solver.
pub struct TwoLevel {
    a: CsrMatrix,
    p: CsrMatrix,
    pt: CsrMatrix,
    smoother: Smoother,
    coarse: CoarseSolver,
}

impl TwoLevel {
    pub fn new(
        a: &CsrMatrix,
        prolongation: &Prolongation,
        smoother: SmootherSpec,
        coarse: CoarseSolver,
    ) -> Result<Self> {
        let p = &prolongation.p;
        if p.nrows() != a.nrows() || a.nrows() != a.ncols() {
            return Err(WgError::DimensionMismatch(format!(
                "prolongation has {} rows for a {}x{} system",
                p.nrows(),
                a.nrows(),
                a.ncols()
            )));
        }
        if coarse.dim() != p.ncols() {
            return Err(WgError::DimensionMismatch(format!(
                "coarse solver of size {} for a coarse space of size {}",
                coarse.dim(),
                p.ncols()
            )));
        }
        Ok(Self {
            smoother: Smoother::new(smoother, a)?,
            a: a.clone(),
            pt: p.transpose(),
            p: p.clone(),
            coarse,
        })
    }

    /// Two-level method with the exact Galerkin coarse solve.
    pub fn with_exact_coarse(
        a: &CsrMatrix,
        prolongation: &Prolongation,
        smoother: SmootherSpec,
    ) -> Result<Self> {
        let coarse = CoarseSolver::exact(&galerkin_coarse(a, prolongation)?)?;
        Self::new(a, prolongation, smoother, coarse)
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn smoother(&self) -> &Smoother {
        &self.smoother
    }

    pub fn coarse(&self) -> &CoarseSolver {
        &self.coarse
    }

    fn coarse_correct(&self, b: &[f64], x: &mut [f64]) {
        if self.p.ncols() == 0 {
            return;
        }
        let r = self.a.residual(b, x);
        let e = self.p.mul_vec(&self.coarse.solve(&self.pt.mul_vec(&r)));
        x.iter_mut().zip(&e).for_each(|(xi, ei)| *xi += ei);
    }
}

impl Preconditioner for TwoLevel {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn apply(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.smoother.apply(&self.a, b);
        self.coarse_correct(b, &mut x);
        self.coarse_correct(b, &mut x);
        self.smoother.smooth(&self.a, b, &mut x);
        x
    }
}
