//! Global assembly of the weak Galerkin system, the mesh-dependent Gram
//! matrix, the load vector and the hybridized three-field system.

use nalgebra::{DMatrix, Matrix2};
use rayon::prelude::*;

use crate::error::{Result, WgError};
use crate::fespace::{DofMap, Poly2, SpaceConfig};
use crate::mesh::{CoefficientField, Mesh, Point};
use crate::quadrature::{quadrature, MAX_DEGREE};
use crate::sparse::CsrMatrix;
use crate::weakgrad::{local_forms, local_weak_gradient};

/// `A = [[C, B^T], [B, D]]` with interior unknowns first.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub a: CsrMatrix,
    pub num_interior: usize,
    pub num_face: usize,
    /// Matrix of `((u, l), (v, m))_h`.
    pub gram: CsrMatrix,
    pub coefficient: CoefficientField,
}

impl BlockSystem {
    pub fn dim(&self) -> usize {
        self.num_interior + self.num_face
    }

    pub fn c_block(&self) -> CsrMatrix {
        self.a.block(0..self.num_interior, 0..self.num_interior)
    }

    /// Face rows, interior columns.
    pub fn b_block(&self) -> CsrMatrix {
        self.a
            .block(self.num_interior..self.dim(), 0..self.num_interior)
    }

    pub fn d_block(&self) -> CsrMatrix {
        self.a
            .block(self.num_interior..self.dim(), self.num_interior..self.dim())
    }
}

fn check_inputs(mesh: &Mesh, dofmap: &DofMap, config: SpaceConfig) -> Result<()> {
    config.validate()?;
    if dofmap.config != config
        || dofmap.num_cells != mesh.num_cells()
        || dofmap.edge_start.len() != mesh.num_edges()
    {
        return Err(WgError::DimensionMismatch(
            "degree-of-freedom map was built for a different mesh or configuration".into(),
        ));
    }
    Ok(())
}

fn scatter(triplets: &mut Vec<(usize, usize, f64)>, dofs: &[Option<usize>], local: &DMatrix<f64>) {
    for (i, gi) in dofs.iter().enumerate() {
        let Some(gi) = *gi else { continue };
        for (j, gj) in dofs.iter().enumerate() {
            if let Some(gj) = *gj {
                triplets.push((gi, gj, local[(i, j)]));
            }
        }
    }
}

/// Local stiffness `G^T (a q_i, q_j) G` of one cell in local unknown order.
pub fn local_stiffness(
    mesh: &Mesh,
    cell: usize,
    config: SpaceConfig,
    a: [[f64; 2]; 2],
) -> Result<DMatrix<f64>> {
    let wg = local_weak_gradient(mesh, cell, config)?;
    let g = wg.matrix();
    Ok(g.transpose() * wg.weighted_mass(a) * g)
}

pub fn assemble_system(
    mesh: &Mesh,
    dofmap: &DofMap,
    config: SpaceConfig,
    a: &CoefficientField,
) -> Result<BlockSystem> {
    check_inputs(mesh, dofmap, config)?;
    a.validate(mesh.num_cells())?;
    let locals: Vec<DMatrix<f64>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|t| local_stiffness(mesh, t, config, a.matrix(t)))
        .collect::<Result<_>>()?;
    let mut triplets = Vec::with_capacity(locals.len() * config.local_dim().pow(2));
    for (t, local) in locals.iter().enumerate() {
        scatter(&mut triplets, &dofmap.local_dofs(mesh, t), local);
    }
    let n = dofmap.total();
    Ok(BlockSystem {
        a: CsrMatrix::from_triplets(n, n, &triplets),
        num_interior: dofmap.num_interior,
        num_face: dofmap.num_face,
        gram: assemble_gram(mesh, dofmap, config)?,
        coefficient: a.clone(),
    })
}

/// Block-diagonal matrix of `(u, v)_Omega + sum_T h_T <l, m>_{dT}`.
pub fn assemble_gram(mesh: &Mesh, dofmap: &DofMap, config: SpaceConfig) -> Result<CsrMatrix> {
    check_inputs(mesh, dofmap, config)?;
    let nv = config.v_dim();
    let mut triplets = Vec::new();
    for t in 0..mesh.num_cells() {
        let forms = local_forms(mesh, t, config)?;
        let mut local = DMatrix::zeros(config.local_dim(), config.local_dim());
        local.view_mut((0, 0), (nv, nv)).copy_from(&forms.cell_mass);
        let ne = 3 * config.m_dim();
        local
            .view_mut((nv, nv), (ne, ne))
            .copy_from(&(forms.edge_mass * forms.h));
        scatter(&mut triplets, &dofmap.local_dofs(mesh, t), &local);
    }
    // the cell/face coupling of the local blocks is structurally zero
    triplets.retain(|t| t.2 != 0.0);
    let n = dofmap.total();
    Ok(CsrMatrix::from_triplets(n, n, &triplets))
}

/// `b_h = ((f, phi_i), 0)` using a triangle rule of the given degree.
pub fn assemble_load(
    mesh: &Mesh,
    dofmap: &DofMap,
    config: SpaceConfig,
    f: &dyn Fn(Point) -> f64,
    degree: usize,
) -> Result<Vec<f64>> {
    check_inputs(mesh, dofmap, config)?;
    let rule = quadrature(degree)?;
    let mut b = vec![0.0; dofmap.total()];
    for t in 0..mesh.num_cells() {
        let g = mesh.cell_geometry(t)?;
        let jac = g.det().abs();
        // V(T) = P0: the single basis function is 1
        b[dofmap.cell_dof(t, 0)] = rule
            .reference_points()
            .map(|(xh, w)| w * jac * f(g.map_reference(xh)))
            .sum();
    }
    Ok(b)
}

/// Load vector for a polynomial right-hand side in physical coordinates,
/// integrated exactly.
pub fn assemble_load_poly(
    mesh: &Mesh,
    dofmap: &DofMap,
    config: SpaceConfig,
    f: &Poly2,
) -> Result<Vec<f64>> {
    let degree = f.degree() as usize;
    if degree > MAX_DEGREE {
        return Err(WgError::UnsupportedDegree(degree));
    }
    assemble_load(mesh, dofmap, config, &|p| f.eval(p), degree)
}

/// Three-field system in `(p_h, u_h, lambda_h)`:
///
/// ```text
/// [ K      Dv   -Nt ] [p]
/// [ Dv^T   0    0   ] [u]
/// [ -Nt^T  0    0   ] [l]
/// ```
///
/// with `K = (a^{-1} p, q)`, `Dv = (u, div q)` and `Nt = <l, q.n>`.
#[derive(Clone, Debug)]
pub struct HybridSystem {
    pub flux_mass: CsrMatrix,
    pub div: CsrMatrix,
    pub trace: CsrMatrix,
    /// Start of each cell's flux block; the last entry is the total.
    pub flux_offsets: Vec<usize>,
    pub num_interior: usize,
    pub num_face: usize,
}

impl HybridSystem {
    pub fn num_flux(&self) -> usize {
        *self.flux_offsets.last().unwrap()
    }

    /// The full symmetric indefinite saddle-point matrix.
    pub fn saddle_matrix(&self) -> CsrMatrix {
        let (nw, nm) = (self.num_flux(), self.num_interior);
        let n = nw + nm + self.num_face;
        let mut t: Vec<_> = self.flux_mass.triplets().collect();
        for (i, j, v) in self.div.triplets() {
            t.push((i, nw + j, v));
            t.push((nw + j, i, v));
        }
        for (i, j, v) in self.trace.triplets() {
            t.push((i, nw + nm + j, -v));
            t.push((nw + nm + j, i, -v));
        }
        CsrMatrix::from_triplets(n, n, &t)
    }
}

pub fn assemble_hybrid(
    mesh: &Mesh,
    dofmap: &DofMap,
    config: SpaceConfig,
    a: &CoefficientField,
) -> Result<HybridSystem> {
    check_inputs(mesh, dofmap, config)?;
    a.validate(mesh.num_cells())?;
    let nw = config.w_dim();
    let nm = dofmap.num_interior;
    let mut mass = Vec::new();
    let mut div = Vec::new();
    let mut trace = Vec::new();
    let mut flux_offsets = vec![0];
    for t in 0..mesh.num_cells() {
        let wg = local_weak_gradient(mesh, t, config)?;
        let ainv = Matrix2::from(a.matrix(t))
            .transpose()
            .try_inverse()
            .ok_or(WgError::NonSpdCoefficient { cell: t })?;
        let k = wg.weighted_mass([[ainv[(0, 0)], ainv[(0, 1)]], [ainv[(1, 0)], ainv[(1, 1)]]]);
        let base = t * nw;
        let dofs = dofmap.local_dofs(mesh, t);
        for i in 0..nw {
            for j in 0..nw {
                mass.push((base + i, base + j, k[(i, j)]));
            }
            div.push((base + i, dofmap.cell_dof(t, 0), wg.div_coupling[(i, 0)]));
            for (l, g) in dofs[config.v_dim()..].iter().enumerate() {
                if let Some(g) = *g {
                    trace.push((base + i, g - nm, wg.boundary_coupling[(i, l)]));
                }
            }
        }
        flux_offsets.push(base + nw);
    }
    let total_w = mesh.num_cells() * nw;
    Ok(HybridSystem {
        flux_mass: CsrMatrix::from_triplets(total_w, total_w, &mass),
        div: CsrMatrix::from_triplets(total_w, nm, &div),
        trace: CsrMatrix::from_triplets(total_w, dofmap.num_face, &trace),
        flux_offsets,
        num_interior: nm,
        num_face: dofmap.num_face,
    })
}

/// Eliminates the flux cell by cell: `S = [Dv, -Nt]^T K^{-1} [Dv, -Nt]`.
pub fn schur_complement(hybrid: &HybridSystem) -> Result<CsrMatrix> {
    let nm = hybrid.num_interior;
    let n = nm + hybrid.num_face;
    let coupling = {
        let mut t: Vec<_> = hybrid.div.triplets().collect();
        t.extend(hybrid.trace.triplets().map(|(i, j, v)| (i, nm + j, -v)));
        CsrMatrix::from_triplets(hybrid.num_flux(), n, &t)
    };
    let mut triplets = Vec::new();
    for w in hybrid.flux_offsets.windows(2) {
        let rows = w[0]..w[1];
        let k = hybrid
            .flux_mass
            .block(rows.clone(), rows.clone())
            .to_dense();
        let mut cols: Vec<usize> = rows
            .clone()
            .flat_map(|r| coupling.row(r).0.to_vec())
            .collect();
        cols.sort_unstable();
        cols.dedup();
        let mut b = DMatrix::zeros(rows.len(), cols.len());
        for (li, r) in rows.clone().enumerate() {
            let (c, v) = coupling.row(r);
            for (&j, &x) in c.iter().zip(v) {
                b[(li, cols.binary_search(&j).unwrap())] = x;
            }
        }
        let chol = k
            .cholesky()
            .ok_or_else(|| WgError::Internal("flux mass block is not positive definite".into()))?;
        let s = b.transpose() * chol.solve(&b);
        let dofs: Vec<Option<usize>> = cols.iter().map(|&c| Some(c)).collect();
        scatter(&mut triplets, &dofs, &s);
    }
    Ok(CsrMatrix::from_triplets(n, n, &triplets))
}

/// `max |S - A_h|` where `S` is the Schur complement of the hybrid system.
pub fn schur_check(hybrid: &HybridSystem, system: &BlockSystem) -> Result<f64> {
    schur_complement(hybrid)?.max_abs_diff(&system.a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::make_space;
    use crate::mesh::{build_initial_mesh, refine_uniform, InitialPattern};
    use crate::weakgrad::local_weak_gradient;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(pattern: InitialPattern, n: usize, cfg: SpaceConfig) -> (Mesh, DofMap) {
        let mesh = build_initial_mesh(pattern, n);
        let d = make_space(&mesh, cfg).unwrap();
        (mesh, d)
    }

    /// Exact two-triangle Type 2 matrix, frozen from the symbolic oracle in
    /// `tests/oracles/two_triangle_type2.py`.
    const TWO_TRIANGLE_TYPE2: [[f64; 4]; 4] = [
        [24.0, 0.0, -6.0, -6.0],
        [0.0, 24.0, -6.0, -6.0],
        [-6.0, -6.0, 22.0 / 3.0, 14.0 / 3.0],
        [-6.0, -6.0, 14.0 / 3.0, 22.0 / 3.0],
    ];

    #[test]
    fn two_triangle_golden_matrix() {
        let cfg = SpaceConfig::TYPE2_K1;
        let (mesh, d) = setup(InitialPattern::TwoTriangle, 1, cfg);
        let sys = assemble_system(&mesh, &d, cfg, &CoefficientField::identity(2)).unwrap();
        let a = sys.a.to_dense();
        for i in 0..4 {
            for j in 0..4 {
                assert!(
                    (a[(i, j)] - TWO_TRIANGLE_TYPE2[i][j]).abs() < 1e-12,
                    "entry ({i},{j}) = {}",
                    a[(i, j)]
                );
            }
        }
    }

    #[test]
    fn system_is_symmetric_positive_definite() {
        for cfg in [SpaceConfig::TYPE1_K0, SpaceConfig::TYPE2_K1] {
            let mesh = refine_uniform(&build_initial_mesh(InitialPattern::CrissCross, 2));
            let d = make_space(&mesh, cfg).unwrap();
            let a = CoefficientField::constant(mesh.num_cells(), [3.0, 0.4, 0.5]);
            let sys = assemble_system(&mesh, &d, cfg, &a).unwrap();
            assert!(sys.a.symmetry_defect() <= 1e-12 * sys.a.max_abs());
            assert!(crate::linalg::is_positive_definite(&sys.a.to_dense()));
            assert!(crate::linalg::is_positive_definite(&sys.gram.to_dense()));
            assert_eq!(sys.c_block().nrows(), d.num_interior);
            assert_eq!(sys.b_block().ncols(), d.num_interior);
            assert_eq!(sys.d_block().nrows(), d.num_face);
        }
    }

    #[test]
    fn coefficient_scaling_is_linear() {
        let cfg = SpaceConfig::TYPE2_K1;
        let (mesh, d) = setup(InitialPattern::CrissCross, 2, cfg);
        let a = CoefficientField::constant(mesh.num_cells(), [2.0, -0.3, 1.0]);
        let s1 = assemble_system(&mesh, &d, cfg, &a).unwrap();
        let s2 = assemble_system(&mesh, &d, cfg, &a.scaled(3.5)).unwrap();
        assert!(s2.a.max_abs_diff(&s1.a.scaled(3.5)).unwrap() < 1e-12 * s2.a.max_abs());
    }

    #[test]
    fn quadratic_form_is_local() {
        let cfg = SpaceConfig::TYPE2_K1;
        let (mesh, d) = setup(InitialPattern::CrissCross, 2, cfg);
        let a = CoefficientField::identity(mesh.num_cells());
        let sys = assemble_system(&mesh, &d, cfg, &a).unwrap();
        let x = vec![1.0; d.total()];
        let global = sys.a.quadratic_form(&x);
        let mut local = 0.0;
        for t in 0..mesh.num_cells() {
            let dofs = d.local_dofs(&mesh, t);
            let mu: Vec<f64> = dofs[1..]
                .iter()
                .map(|g| if g.is_some() { 1.0 } else { 0.0 })
                .collect();
            let wg = local_weak_gradient(&mesh, t, cfg).unwrap();
            local += wg.gradient_norm(&[1.0], &mu).powi(2);
        }
        assert!(global > 0.0);
        assert!((global - local).abs() < 1e-12 * global);
    }

    #[test]
    fn mismatched_inputs() {
        let (mesh, d) = setup(InitialPattern::CrissCross, 1, SpaceConfig::TYPE2_K1);
        let a = CoefficientField::identity(mesh.num_cells());
        assert!(matches!(
            assemble_system(&mesh, &d, SpaceConfig::TYPE1_K0, &a),
            Err(WgError::DimensionMismatch(_))
        ));
        let bad = CoefficientField::constant(mesh.num_cells(), [-1.0, 0.0, 1.0]);
        assert!(matches!(
            assemble_system(&mesh, &d, SpaceConfig::TYPE2_K1, &bad),
            Err(WgError::NonSpdCoefficient { .. })
        ));
    }

    #[test]
    fn gram_entries() {
        let cfg = SpaceConfig::TYPE1_K0;
        let (mesh, d) = setup(InitialPattern::TwoTriangle, 1, cfg);
        let g = assemble_gram(&mesh, &d, cfg).unwrap();
        assert_eq!(g.get(0, 0), 0.5);
        assert_eq!(g.get(1, 1), 0.5);
        let diag = 2f64.sqrt();
        // both cells have h_T = sqrt 2 and share the diagonal of length sqrt 2
        assert!((g.get(2, 2) - 2.0 * diag * diag).abs() < 1e-14);
        assert_eq!(g.nnz(), 3);
    }

    #[test]
    fn gram_matches_direct_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = SpaceConfig::TYPE2_K1;
        let mesh = refine_uniform(&build_initial_mesh(InitialPattern::CrissCross, 2));
        let d = make_space(&mesh, cfg).unwrap();
        let g = assemble_gram(&mesh, &d, cfg).unwrap();
        let x: Vec<f64> = (0..d.total()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // ||v||^2 + sum_T h_T int_{dT} mu^2 with mu linear on each edge
        let mut direct = 0.0;
        let gl = crate::quadrature::edge_quadrature(2).unwrap();
        for t in 0..mesh.num_cells() {
            direct += mesh.cell_area(t) * x[t] * x[t];
            let h = mesh.cell_diameter(t);
            for &e in &mesh.cell_edges[t] {
                let Some(s) = d.edge_start[e] else { continue };
                let len = mesh.edge_length(e);
                for (&p, &w) in gl.points.iter().zip(&gl.weights) {
                    let mu = x[s] * (1.0 - p) + x[s + 1] * p;
                    direct += h * len * w * mu * mu;
                }
            }
        }
        let via_gram = g.quadratic_form(&x);
        assert!((via_gram - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn load_vectors() {
        let cfg = SpaceConfig::TYPE2_K1;
        let (mesh, d) = setup(InitialPattern::CrissCross, 2, cfg);
        let b = assemble_load(&mesh, &d, cfg, &|_| 0.0, 0).unwrap();
        assert!(b.iter().all(|&v| v == 0.0));
        let b = assemble_load(&mesh, &d, cfg, &|_| 1.0, 0).unwrap();
        for t in 0..mesh.num_cells() {
            assert!((b[t] - mesh.cell_area(t)).abs() < 1e-15);
        }
        assert!(b[d.num_interior..].iter().all(|&v| v == 0.0));

        let tri =
            Mesh::from_cells(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], 0).unwrap();
        let dt = make_space(&tri, cfg).unwrap();
        let b = assemble_load_poly(&tri, &dt, cfg, &Poly2::monomial(1, 0)).unwrap();
        assert!((b[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!(matches!(
            assemble_load_poly(&tri, &dt, cfg, &Poly2::monomial(4, 3)),
            Err(WgError::UnsupportedDegree(7))
        ));
    }

    #[test]
    fn hybrid_schur_reproduces_system() {
        let cases = [
            (SpaceConfig::TYPE2_K1, [1.0, 0.0, 1.0]),
            (SpaceConfig::TYPE2_K1, [3.0, 0.0, 0.5]),
            (SpaceConfig::TYPE1_K0, [1.0, 0.0, 1.0]),
        ];
        for (cfg, tensor) in cases {
            let (mesh, d) = setup(InitialPattern::TwoTriangle, 1, cfg);
            let a = CoefficientField::constant(mesh.num_cells(), tensor);
            let sys = assemble_system(&mesh, &d, cfg, &a).unwrap();
            let hyb = assemble_hybrid(&mesh, &d, cfg, &a).unwrap();
            let dev = schur_check(&hyb, &sys).unwrap();
            assert!(dev <= 1e-12 * sys.a.max_abs(), "{cfg:?} {tensor:?}: {dev}");
            let saddle = hyb.saddle_matrix();
            assert_eq!(saddle.symmetry_defect(), 0.0);
            assert!(crate::linalg::is_positive_definite(
                &hyb.flux_mass.to_dense()
            ));
        }
    }
}
