//! Discrete weak gradients and the element-local norms.
//!
//! On a cell `T` the weak gradient of `(v, mu)` is the unique `g in W(T)` with
//!
//! ```text
//! (g, q)_T = -(v, div q)_T + <mu, q.n>_{dT}   for all q in W(T).
//! ```
//!
//! `W(T)` is spanned by the reference vector monomials evaluated at the
//! scaled local coordinate `xi = (x - x_c) / h_T`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, WgError};
use crate::fespace::{reference_basis, ReferenceBasis, SpaceConfig};
use crate::mesh::{CellGeometry, Mesh, Point};
use crate::quadrature::{edge_quadrature, quadrature};

#[derive(Clone, Debug)]
pub struct LocalWeakGradient {
    pub config: SpaceConfig,
    pub geometry: CellGeometry,
    /// `W(T)` coefficients of `grad_w^i` of each `V(T)` basis function.
    pub gi: DMatrix<f64>,
    /// `W(T)` coefficients of `grad_w^b` of each `M(dT)` basis function,
    /// columns ordered edge-major in the cell's local edge order.
    pub gb: DMatrix<f64>,
    pub w_mass: DMatrix<f64>,
    /// `(v, div q_j)_T`, rows indexed by `j`.
    pub div_coupling: DMatrix<f64>,
    /// `<mu, q_j . n>_{dT}`, rows indexed by `j`.
    pub boundary_coupling: DMatrix<f64>,
    /// `component_mass[c][d][(i, j)] = (q_{i,c}, q_{j,d})_T`.
    component_mass: [[DMatrix<f64>; 2]; 2],
    basis: ReferenceBasis,
    center: Point,
}

impl LocalWeakGradient {
    pub fn w_dim(&self) -> usize {
        self.gi.nrows()
    }

    pub fn local_coordinate(&self, x: Point) -> Point {
        let h = self.geometry.h;
        [(x[0] - self.center[0]) / h, (x[1] - self.center[1]) / h]
    }

    /// The full local operator `[gi | gb]`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let (w, nv, nm) = (self.w_dim(), self.gi.ncols(), self.gb.ncols());
        let mut g = DMatrix::zeros(w, nv + nm);
        g.columns_mut(0, nv).copy_from(&self.gi);
        g.columns_mut(nv, nm).copy_from(&self.gb);
        g
    }

    /// `W(T)` coefficients of `grad_w(v, mu)`.
    pub fn apply(&self, v: &[f64], mu: &[f64]) -> DVector<f64> {
        &self.gi * DVector::from_column_slice(v) + &self.gb * DVector::from_column_slice(mu)
    }

    /// Evaluates the vector field with `W(T)` coefficients `g` at the physical point `x`.
    pub fn eval_field(&self, g: &DVector<f64>, x: Point) -> Point {
        let xi = self.local_coordinate(x);
        let mut out = [0.0; 2];
        for (j, q) in self.basis.w.iter().enumerate() {
            let qv = q.eval(xi);
            out[0] += g[j] * qv[0];
            out[1] += g[j] * qv[1];
        }
        out
    }

    /// `((a q_i), q_j)_T` for a constant symmetric tensor `a`.
    pub fn weighted_mass(&self, a: [[f64; 2]; 2]) -> DMatrix<f64> {
        let m = &self.component_mass;
        // (a q_i) . q_j = sum_{c,d} a_{dc} q_{i,c} q_{j,d}
        &m[0][0] * a[0][0] + &m[0][1] * a[1][0] + &m[1][0] * a[0][1] + &m[1][1] * a[1][1]
    }

    /// `||grad_w(v, mu)||_T`.
    pub fn gradient_norm(&self, v: &[f64], mu: &[f64]) -> f64 {
        let g = self.apply(v, mu);
        (g.dot(&(&self.w_mass * &g))).max(0.0).sqrt()
    }
}

pub fn local_weak_gradient(
    mesh: &Mesh,
    cell: usize,
    config: SpaceConfig,
) -> Result<LocalWeakGradient> {
    config.validate()?;
    let geometry = mesh.cell_geometry(cell)?;
    let basis = reference_basis(config)?;
    let h = geometry.h;
    let center = geometry.centroid();
    let xi = |x: Point| [(x[0] - center[0]) / h, (x[1] - center[1]) / h];
    let nw = basis.w.len();
    let nm = config.m_dim();
    let wdeg = basis.w.iter().map(|q| q.degree()).max().unwrap_or(0) as usize;

    let tri = quadrature(2 * wdeg)?;
    let jac = geometry.det().abs();
    let mut component_mass: [[DMatrix<f64>; 2]; 2] = Default::default();
    for row in component_mass.iter_mut() {
        for m in row.iter_mut() {
            *m = DMatrix::zeros(nw, nw);
        }
    }
    let mut div_coupling = DMatrix::zeros(nw, config.v_dim());
    for (xhat, w) in tri.reference_points() {
        let p = xi(geometry.map_reference(xhat));
        let vals: Vec<[f64; 2]> = basis.w.iter().map(|q| q.eval(p)).collect();
        let wt = w * jac;
        for i in 0..nw {
            for j in 0..nw {
                for c in 0..2 {
                    for d in 0..2 {
                        component_mass[c][d][(i, j)] += wt * vals[i][c] * vals[j][d];
                    }
                }
            }
            // V(T) = P0 with basis 1; div in x is (1/h) div in xi
            div_coupling[(i, 0)] += wt * basis.w_div[i].eval(p) / h;
        }
    }
    let w_mass = &component_mass[0][0] + &component_mass[1][1];

    let line = edge_quadrature(wdeg + config.degree)?;
    let mut boundary_coupling = DMatrix::zeros(nw, 3 * nm);
    for (i, &e) in mesh.cell_edges[cell].iter().enumerate() {
        let [v0, v1] = mesh.edges[e].v.map(|v| mesh.vertices[v]);
        let len = geometry.edge_lengths[i];
        let n = geometry.outward_normals[i];
        for (&s, &w) in line.points.iter().zip(&line.weights) {
            let x = [v0[0] + s * (v1[0] - v0[0]), v0[1] + s * (v1[1] - v0[1])];
            let p = xi(x);
            for a in 0..nm {
                let mu = basis.eval_m(a, s);
                for (j, q) in basis.w.iter().enumerate() {
                    let qv = q.eval(p);
                    boundary_coupling[(j, i * nm + a)] +=
                        w * len * mu * (qv[0] * n[0] + qv[1] * n[1]);
                }
            }
        }
    }

    let chol = w_mass
        .clone()
        .cholesky()
        .ok_or_else(|| WgError::Internal(format!("singular W(T) mass matrix on cell {cell}")))?;
    let gi = -chol.solve(&div_coupling);
    let gb = chol.solve(&boundary_coupling);

    Ok(LocalWeakGradient {
        config,
        geometry,
        gi,
        gb,
        w_mass,
        div_coupling,
        boundary_coupling,
        component_mass,
        basis,
        center,
    })
}

/// Element-local mass and mean forms on `V(T) x M(dT)`.
#[derive(Clone, Debug)]
pub struct LocalForms {
    pub h: f64,
    /// `(v, w)_T` on `V(T)`.
    pub cell_mass: DMatrix<f64>,
    /// `<mu, eta>_{dT}` on `M(dT)`, block diagonal over the three edges.
    pub edge_mass: DMatrix<f64>,
    /// Row vector with `m_T(mu) = mean_row . mu`.
    pub mean_row: DVector<f64>,
    /// `|mu|^2_{h,dT} = mu^T seminorm mu`.
    pub seminorm: DMatrix<f64>,
}

pub fn local_forms(mesh: &Mesh, cell: usize, config: SpaceConfig) -> Result<LocalForms> {
    config.validate()?;
    let geometry = mesh.cell_geometry(cell)?;
    let basis = reference_basis(config)?;
    let nm = config.m_dim();
    let line = edge_quadrature(2 * config.degree)?;

    let mut edge_mass = DMatrix::zeros(3 * nm, 3 * nm);
    let mut mean_row = DVector::zeros(3 * nm);
    for i in 0..3 {
        let len = geometry.edge_lengths[i];
        for (&s, &w) in line.points.iter().zip(&line.weights) {
            for a in 0..nm {
                let fa = basis.eval_m(a, s);
                mean_row[i * nm + a] += w * fa / 3.0;
                for b in 0..nm {
                    edge_mass[(i * nm + a, i * nm + b)] += w * len * fa * basis.eval_m(b, s);
                }
            }
        }
    }
    // mu - m_T(mu) with the constant 1 having all-ones coefficients
    let ones = DVector::from_element(3 * nm, 1.0);
    let proj = DMatrix::identity(3 * nm, 3 * nm) - &ones * mean_row.transpose();
    let seminorm = proj.transpose() * &edge_mass * &proj / geometry.h;

    Ok(LocalForms {
        h: geometry.h,
        cell_mass: DMatrix::from_element(1, 1, geometry.area),
        edge_mass,
        mean_row,
        seminorm,
    })
}

/// `m_T(mu)`: average over the three edges of the edge means of `mu`.
pub fn cell_mean(mesh: &Mesh, cell: usize, config: SpaceConfig, mu: &[f64]) -> Result<f64> {
    let forms = local_forms(mesh, cell, config)?;
    check_len(mu.len(), 3 * config.m_dim(), "face coefficients")?;
    Ok(forms.mean_row.dot(&DVector::from_column_slice(mu)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalNorms {
    /// `h_T^{1/2} ||mu||_{dT}`
    pub mu_h: f64,
    /// `|mu|_{h,dT}`
    pub mu_seminorm: f64,
    /// `||v||_T`
    pub v_l2: f64,
    /// `||grad_w(v, mu)||_T`
    pub grad_w: f64,
}

pub fn local_norms(
    mesh: &Mesh,
    cell: usize,
    config: SpaceConfig,
    v: &[f64],
    mu: &[f64],
) -> Result<LocalNorms> {
    check_len(v.len(), config.v_dim(), "cell coefficients")?;
    check_len(mu.len(), 3 * config.m_dim(), "face coefficients")?;
    let forms = local_forms(mesh, cell, config)?;
    let wg = local_weak_gradient(mesh, cell, config)?;
    let muv = DVector::from_column_slice(mu);
    let vv = DVector::from_column_slice(v);
    let quad = |m: &DMatrix<f64>, x: &DVector<f64>| x.dot(&(m * x)).max(0.0).sqrt();
    Ok(LocalNorms {
        mu_h: forms.h.sqrt() * quad(&forms.edge_mass, &muv),
        mu_seminorm: quad(&forms.seminorm, &muv),
        v_l2: quad(&forms.cell_mass, &vv),
        grad_w: wg.gradient_norm(v, mu),
    })
}

fn check_len(got: usize, expected: usize, what: &str) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(WgError::DimensionMismatch(format!(
            "{what}: expected {expected}, got {got}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_initial_mesh, refine_uniform, InitialPattern};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_mesh() -> Mesh {
        Mesh::from_cells(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], 0).unwrap()
    }

    /// Perturbed equilateral triangle, randomly scaled, rotated and shifted.
    fn random_triangle(rng: &mut ChaCha8Rng) -> Mesh {
        let scale: f64 = rng.gen_range(0.01..3.0);
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let shift = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let base = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.75f64.sqrt()]];
        let p: Vec<[f64; 2]> = base
            .iter()
            .map(|q| {
                let x = q[0] + rng.gen_range(-0.2..0.2);
                let y = q[1] + rng.gen_range(-0.2..0.2);
                let (s, c) = angle.sin_cos();
                [
                    shift[0] + scale * (c * x - s * y),
                    shift[1] + scale * (s * x + c * y),
                ]
            })
            .collect();
        Mesh::from_cells(p, vec![[0, 1, 2]], 0).unwrap()
    }

    const CONFIGS: [SpaceConfig; 2] = [SpaceConfig::TYPE1_K0, SpaceConfig::TYPE2_K1];

    #[test]
    fn constants_are_annihilated() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mesh = random_triangle(&mut rng);
            let c: f64 = rng.gen_range(-10.0..10.0);
            for cfg in CONFIGS {
                let wg = local_weak_gradient(&mesh, 0, cfg).unwrap();
                let norm = wg.gradient_norm(&[c], &vec![c; 3 * cfg.m_dim()]);
                assert!(norm < 1e-13 * c.abs().max(1.0), "{cfg:?}: {norm}");
            }
        }
    }

    #[test]
    fn reference_edge_indicator() {
        // mu = 1 on the edge y = 0, zero elsewhere; symbolic integration of
        // the 6x6 system gives grad_w^b mu = (0, 12 y - 6).
        let mesh = reference_mesh();
        let cfg = SpaceConfig::TYPE2_K1;
        let wg = local_weak_gradient(&mesh, 0, cfg).unwrap();
        let bottom = mesh.cell_edges[0]
            .iter()
            .position(|&e| mesh.edges[e].v == [0, 1])
            .unwrap();
        let mut mu = vec![0.0; 6];
        mu[2 * bottom] = 1.0;
        mu[2 * bottom + 1] = 1.0;
        let g = wg.apply(&[0.0], &mu);
        for p in [[0.0, 0.0], [0.2, 0.3], [1.0 / 3.0, 1.0 / 3.0], [0.0, 1.0]] {
            let f = wg.eval_field(&g, p);
            assert!(f[0].abs() < 1e-12);
            assert!((f[1] - (12.0 * p[1] - 6.0)).abs() < 1e-12);
        }
    }

    fn linear_data(
        mesh: &Mesh,
        cell: usize,
        cfg: SpaceConfig,
        l: impl Fn(Point) -> f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let [a, b, c] = mesh.cells[cell].map(|v| mesh.vertices[v]);
        let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        let v = vec![l(centroid)];
        let mut mu = Vec::new();
        for &e in &mesh.cell_edges[cell] {
            let [p, q] = mesh.edges[e].v.map(|v| mesh.vertices[v]);
            if cfg.degree == 0 {
                mu.push(l([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]));
            } else {
                mu.extend([l(p), l(q)]);
            }
        }
        (v, mu)
    }

    #[test]
    fn linear_functions_are_reproduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mesh = random_triangle(&mut rng);
            let (gx, gy, c0): (f64, f64, f64) = (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen(),
            );
            for cfg in CONFIGS {
                let (v, mu) = linear_data(&mesh, 0, cfg, |p| c0 + gx * p[0] + gy * p[1]);
                let wg = local_weak_gradient(&mesh, 0, cfg).unwrap();
                let g = wg.apply(&v, &mu);
                let f = wg.eval_field(&g, mesh.vertices[0]);
                assert!(
                    (f[0] - gx).abs() < 1e-11 && (f[1] - gy).abs() < 1e-11,
                    "{cfg:?} {f:?}"
                );
            }
        }
    }

    #[test]
    fn cell_mean_examples() {
        let mesh = reference_mesh();
        let cfg = SpaceConfig::TYPE2_K1;
        assert!((cell_mean(&mesh, 0, cfg, &[2.5; 6]).unwrap() - 2.5).abs() < 1e-15);
        // edge means 1, 2, 3
        let mu = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        assert!((cell_mean(&mesh, 0, cfg, &mu).unwrap() - 2.0).abs() < 1e-15);
        let (_, mu) = linear_data(&mesh, 0, cfg, |p| p[0]);
        assert!((cell_mean(&mesh, 0, cfg, &mu).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let k0 = SpaceConfig::TYPE1_K0;
        assert!((cell_mean(&mesh, 0, k0, &[1.0, 2.0, 3.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(cell_mean(&mesh, 0, k0, &[1.0]).is_err());
    }

    #[test]
    fn norms_of_constants() {
        let mesh = reference_mesh();
        let n = local_norms(&mesh, 0, SpaceConfig::TYPE2_K1, &[1.0], &[1.0; 6]).unwrap();
        let expected = 2f64.powf(0.25) * (2.0 + 2f64.sqrt()).sqrt();
        assert!((n.mu_h - expected).abs() < 1e-14);
        assert!(n.mu_seminorm.abs() < 1e-7);
        assert!((n.v_l2 - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(n.grad_w < 1e-12);

        let z = local_norms(&mesh, 0, SpaceConfig::TYPE1_K0, &[0.0], &[0.0; 3]).unwrap();
        assert_eq!(
            (z.mu_h, z.mu_seminorm, z.v_l2, z.grad_w),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn gradient_norm_matches_field_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = quadrature(4).unwrap();
        for _ in 0..10 {
            let mesh = random_triangle(&mut rng);
            for cfg in CONFIGS {
                let v = [rng.gen_range(-1.0..1.0)];
                let mu: Vec<f64> = (0..3 * cfg.m_dim())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                let wg = local_weak_gradient(&mesh, 0, cfg).unwrap();
                let g = wg.apply(&v, &mu);
                let geom = &wg.geometry;
                let direct: f64 = q
                    .reference_points()
                    .map(|(xh, w)| {
                        let f = wg.eval_field(&g, geom.map_reference(xh));
                        w * geom.det().abs() * (f[0] * f[0] + f[1] * f[1])
                    })
                    .sum();
                let norm = local_norms(&mesh, 0, cfg, &v, &mu).unwrap().grad_w;
                assert!((norm - direct.sqrt()).abs() < 1e-12 * norm.max(1.0));
            }
        }
    }

    #[test]
    fn seminorm_vanishes_only_on_constants() {
        let mesh = reference_mesh();
        let forms = local_forms(&mesh, 0, SpaceConfig::TYPE2_K1).unwrap();
        let eig = forms.seminorm.clone().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        assert!(vals[0].abs() < 1e-14);
        assert!(vals[1] > 1e-3);
    }

    #[test]
    fn mean_shift_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mesh = refine_uniform(&build_initial_mesh(InitialPattern::CrissCross, 2));
        for cfg in CONFIGS {
            for cell in [0, 17, 40] {
                let v = [rng.gen_range(-1.0..1.0)];
                let mu: Vec<f64> = (0..3 * cfg.m_dim())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                let m = cell_mean(&mesh, cell, cfg, &mu).unwrap();
                let wg = local_weak_gradient(&mesh, cell, cfg).unwrap();
                let g = wg.apply(&v, &mu);
                let shifted: Vec<f64> = mu.iter().map(|x| x - m).collect();
                let gs = wg.apply(&[v[0] - m], &shifted);
                assert!((g - gs).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn weighted_mass_identity_is_w_mass() {
        let mesh = reference_mesh();
        let wg = local_weak_gradient(&mesh, 0, SpaceConfig::TYPE2_K1).unwrap();
        let k = wg.weighted_mass([[1.0, 0.0], [0.0, 1.0]]);
        assert!((k - &wg.w_mass).amax() < 1e-15);
        assert!(wg.w_mass.clone().cholesky().is_some());
    }
}
