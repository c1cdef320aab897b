//! Symmetric V(m, m) cycle for the conforming P1 problem on a nested hierarchy.

use crate::coarse::{assemble_p1_stiffness, p1_transfer};
use crate::error::{Result, WgError};
use crate::linalg::SparseCholesky;
use crate::mesh::{CoefficientField, MeshHierarchy};
use crate::solve::smoother::{Smoother, SmootherSpec};
use crate::sparse::CsrMatrix;

struct Level {
    a: CsrMatrix,
    smoother: Smoother,
    /// Interpolation from the next coarser level.
    transfer: CsrMatrix,
    transfer_t: CsrMatrix,
}

/// `levels[0]` is the coarsest level and is solved directly.
pub struct VCycle {
    coarsest: Option<SparseCholesky>,
    coarsest_dim: usize,
    levels: Vec<Level>,
}

impl std::fmt::Debug for VCycle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VCycle")
            .field("coarsest_dim", &self.coarsest_dim)
            .field("levels", &(self.levels.len() + 1))
            .finish()
    }
}

/// Coefficient of a refined mesh inherited from the base mesh.
pub fn inherit_coefficient(
    hierarchy: &MeshHierarchy,
    a: &CoefficientField,
    level: usize,
) -> CoefficientField {
    let mut tensors = a.tensors.clone();
    for mesh in &hierarchy.meshes[1..=level] {
        let parent = mesh
            .cell_parent
            .as_ref()
            .expect("refined mesh keeps its parents");
        tensors = parent.iter().map(|&p| tensors[p]).collect();
    }
    CoefficientField { tensors }
}

impl VCycle {
    /// Builds the cycle on `hierarchy.meshes[0..=level]`; `a` lives on the base mesh.
    pub fn new(
        hierarchy: &MeshHierarchy,
        level: usize,
        a: &CoefficientField,
        smoother: SmootherSpec,
    ) -> Result<Self> {
        if level >= hierarchy.num_levels() {
            return Err(WgError::MissingHierarchy {
                needed: level + 1,
                got: hierarchy.num_levels(),
            });
        }
        let base = assemble_p1_stiffness(&hierarchy.meshes[0], a)?;
        let coarsest_dim = base.nrows();
        let coarsest = (coarsest_dim > 0)
            .then(|| SparseCholesky::new(&base))
            .transpose()?;
        let mut levels = Vec::with_capacity(level);
        for l in 1..=level {
            let mesh = &hierarchy.meshes[l];
            let al = assemble_p1_stiffness(mesh, &inherit_coefficient(hierarchy, a, l))?;
            let transfer = p1_transfer(&hierarchy.meshes[l - 1], mesh)?;
            levels.push(Level {
                smoother: Smoother::new(smoother, &al)?,
                a: al,
                transfer_t: transfer.transpose(),
                transfer,
            });
        }
        Ok(Self {
            coarsest,
            coarsest_dim,
            levels,
        })
    }

    pub fn dim(&self) -> usize {
        self.levels
            .last()
            .map_or(self.coarsest_dim, |l| l.a.nrows())
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len() + 1
    }

    /// Matrix of the finest level.
    pub fn matrix(&self) -> Option<&CsrMatrix> {
        self.levels.last().map(|l| &l.a)
    }

    /// One cycle applied to `r` from a zero initial guess.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        self.cycle(self.levels.len(), r)
    }

    fn cycle(&self, l: usize, r: &[f64]) -> Vec<f64> {
        if l == 0 {
            return match &self.coarsest {
                Some(c) => c.solve(r),
                None => Vec::new(),
            };
        }
        let lev = &self.levels[l - 1];
        let mut z = lev.smoother.apply(&lev.a, r);
        let res = lev.a.residual(r, &z);
        let ec = self.cycle(l - 1, &lev.transfer_t.mul_vec(&res));
        let corr = lev.transfer.mul_vec(&ec);
        z.iter_mut().zip(&corr).for_each(|(zi, ci)| *zi += ci);
        lev.smoother.smooth(&lev.a, r, &mut z);
        z
    }
}
