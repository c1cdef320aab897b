//! Weak Galerkin discretization of `-div(a grad u) = f` on 2D triangulations
//! with homogeneous Dirichlet data, together with the two-level and
//! multilevel preconditioned stationary iterations built on a conforming P1
//! coarse space.

pub mod assemble;
pub mod coarse;
pub mod error;
pub mod fespace;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod solve;
pub mod sparse;
pub mod spectral;
pub mod study;
pub mod weakgrad;

pub use assemble::{
    assemble_gram, assemble_hybrid, assemble_load, assemble_system, BlockSystem, HybridSystem,
};
pub use coarse::{
    assemble_p1_stiffness, build_prolongation, build_vertex_average, galerkin_coarse, P1Space,
    Prolongation,
};
pub use error::{Result, WgError};
pub use fespace::{make_space, DofMap, Family, SpaceConfig};
pub use mesh::{
    build_initial_mesh, refine_uniform, CoefficientField, InitialPattern, Mesh, MeshHierarchy,
};
pub use solve::{
    estimate_contraction, stationary_solve, CoarseKind, CoarseSolver, IterationReport,
    Preconditioner, SmootherKind, SmootherSpec, TwoLevel, VCycle,
};
pub use sparse::CsrMatrix;
pub use spectral::{extreme_eigs, SpectrumReport};
