//! Conforming P1 coarse space on the same mesh, the prolongation into the
//! weak Galerkin space, and the vertex-averaging map from face unknowns to P1.

use nalgebra::DMatrix;

use crate::error::{Result, WgError};
use crate::fespace::{reference_basis, DofMap, SpaceConfig};
use crate::mesh::{CoefficientField, Mesh};
use crate::quadrature::edge_quadrature;
use crate::sparse::CsrMatrix;
use crate::weakgrad::local_forms;

/// P1 functions vanishing on the boundary; one unknown per interior vertex,
/// numbered in vertex order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct P1Space {
    pub vertex_dof: Vec<Option<usize>>,
    pub dof_vertex: Vec<usize>,
}

impl P1Space {
    pub fn new(mesh: &Mesh) -> Self {
        let mut dof_vertex = Vec::new();
        let vertex_dof = mesh
            .boundary_vertex
            .iter()
            .enumerate()
            .map(|(v, &b)| {
                (!b).then(|| {
                    dof_vertex.push(v);
                    dof_vertex.len() - 1
                })
            })
            .collect();
        Self {
            vertex_dof,
            dof_vertex,
        }
    }

    pub fn dim(&self) -> usize {
        self.dof_vertex.len()
    }
}

#[derive(Clone, Debug)]
pub struct Prolongation {
    /// `(M + N) x dim(P1)` coefficient matrix of `I_h`.
    pub p: CsrMatrix,
    pub space: P1Space,
}

/// Local L2 projections of every interior hat function onto `V(T)` and `M(F)`.
pub fn build_prolongation(
    mesh: &Mesh,
    dofmap: &DofMap,
    config: SpaceConfig,
) -> Result<Prolongation> {
    config.validate()?;
    let space = P1Space::new(mesh);
    let basis = reference_basis(config)?;
    let nm = config.m_dim();
    let mut triplets = Vec::new();

    // V(T) = P0: projection of a hat is its mean over T, i.e. 1/3
    for (t, cell) in mesh.cells.iter().enumerate() {
        for &v in cell {
            if let Some(c) = space.vertex_dof[v] {
                triplets.push((dofmap.cell_dof(t, 0), c, 1.0 / 3.0));
            }
        }
    }

    // On each edge the hat of endpoint 0 is 1 - s and of endpoint 1 is s.
    let rule = edge_quadrature(2 * config.degree + 1)?;
    let mut mass = DMatrix::<f64>::zeros(nm, nm);
    let mut rhs = DMatrix::<f64>::zeros(nm, 2);
    for (&s, &w) in rule.points.iter().zip(&rule.weights) {
        let hats = [1.0 - s, s];
        for a in 0..nm {
            let fa = basis.eval_m(a, s);
            for b in 0..nm {
                mass[(a, b)] += w * fa * basis.eval_m(b, s);
            }
            for (k, h) in hats.iter().enumerate() {
                rhs[(a, k)] += w * fa * h;
            }
        }
    }
    let coeffs = mass
        .cholesky()
        .ok_or_else(|| WgError::Internal("edge mass matrix is singular".into()))?
        .solve(&rhs);
    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge.boundary {
            continue;
        }
        for (k, &v) in edge.v.iter().enumerate() {
            let Some(c) = space.vertex_dof[v] else {
                continue;
            };
            for a in 0..nm {
                let val: f64 = coeffs[(a, k)];
                if val.abs() > 1e-15 {
                    triplets.push((dofmap.edge_dof(e, a).unwrap(), c, val));
                }
            }
        }
    }

    Ok(Prolongation {
        p: CsrMatrix::from_triplets(dofmap.total(), space.dim(), &triplets),
        space,
    })
}

/// Standard conforming P1 stiffness matrix on interior vertices.
pub fn assemble_p1_stiffness(mesh: &Mesh, a: &CoefficientField) -> Result<CsrMatrix> {
    a.validate(mesh.num_cells())?;
    let space = P1Space::new(mesh);
    let mut triplets = Vec::new();
    for (t, cell) in mesh.cells.iter().enumerate() {
        let local = p1_local_stiffness(mesh, t, a.matrix(t))?;
        for i in 0..3 {
            let Some(gi) = space.vertex_dof[cell[i]] else {
                continue;
            };
            for j in 0..3 {
                if let Some(gj) = space.vertex_dof[cell[j]] {
                    triplets.push((gi, gj, local[i][j]));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(
        space.dim(),
        space.dim(),
        &triplets,
    ))
}

/// `area * grad(phi_i) . a grad(phi_j)` for the three barycentric hats.
pub fn p1_local_stiffness(mesh: &Mesh, cell: usize, a: [[f64; 2]; 2]) -> Result<[[f64; 3]; 3]> {
    let g = mesh.cell_geometry(cell)?;
    let area = g.area;
    // grad(phi_i) = rotated opposite edge / (2 area)
    let grads: Vec<[f64; 2]> = (0..3)
        .map(|i| {
            let n = g.outward_normals[i];
            let l = g.edge_lengths[i];
            [-n[0] * l / (2.0 * area), -n[1] * l / (2.0 * area)]
        })
        .collect();
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let ag = [
                a[0][0] * grads[j][0] + a[0][1] * grads[j][1],
                a[1][0] * grads[j][0] + a[1][1] * grads[j][1],
            ];
            k[i][j] = area * (grads[i][0] * ag[0] + grads[i][1] * ag[1]);
        }
    }
    Ok(k)
}

/// `P^T A P`.
pub fn galerkin_coarse(a: &CsrMatrix, p: &Prolongation) -> Result<CsrMatrix> {
    if a.nrows() != p.p.nrows() || a.ncols() != p.p.nrows() {
        return Err(WgError::DimensionMismatch(format!(
            "operator is {}x{}, prolongation has {} rows",
            a.nrows(),
            a.ncols(),
            p.p.nrows()
        )));
    }
    a.galerkin_product(&p.p)
}

/// Matrix of the averaging map from face unknowns (indexed from 0 within the
/// face block) to P1 coefficients: the value at an interior vertex is the
/// arithmetic mean of `m_T(lambda)` over the cells of its patch, with
/// boundary-edge values taken as zero.
pub fn build_vertex_average(
    mesh: &Mesh,
    dofmap: &DofMap,
    config: SpaceConfig,
) -> Result<CsrMatrix> {
    config.validate()?;
    let space = P1Space::new(mesh);
    let nm = config.m_dim();
    let mut triplets = Vec::new();
    for (c, &v) in space.dof_vertex.iter().enumerate() {
        let patch = mesh.vertex_patch(v);
        let scale = 1.0 / patch.len() as f64;
        for &t in patch {
            let row = local_forms(mesh, t, config)?.mean_row;
            for (i, &e) in mesh.cell_edges[t].iter().enumerate() {
                for a in 0..nm {
                    if let Some(g) = dofmap.edge_dof(e, a) {
                        triplets.push((c, g - dofmap.num_interior, scale * row[i * nm + a]));
                    }
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(
        space.dim(),
        dofmap.num_face,
        &triplets,
    ))
}

/// P1 interpolation from `coarse` to its uniform refinement `fine`, on
/// interior unknowns.
pub fn p1_transfer(coarse: &Mesh, fine: &Mesh) -> Result<CsrMatrix> {
    let nv = coarse.num_vertices();
    if fine.num_vertices() != nv + coarse.num_edges() {
        return Err(WgError::DimensionMismatch(
            "fine mesh is not the uniform refinement of the coarse mesh".into(),
        ));
    }
    let cs = P1Space::new(coarse);
    let fs = P1Space::new(fine);
    let mut triplets = Vec::new();
    for (r, &v) in fs.dof_vertex.iter().enumerate() {
        if v < nv {
            if let Some(c) = cs.vertex_dof[v] {
                triplets.push((r, c, 1.0));
            }
        } else {
            for &end in &coarse.edges[v - nv].v {
                if let Some(c) = cs.vertex_dof[end] {
                    triplets.push((r, c, 0.5));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(fs.dim(), cs.dim(), &triplets))
}
