//! Level sweeps over a mesh hierarchy: conditioning tables, two-level and
//! multilevel iteration tables, and numerical checks of the norm
//! equivalences and approximation properties.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assemble::{assemble_gram, assemble_hybrid, assemble_system, schur_check, BlockSystem};
use crate::coarse::{
    assemble_p1_stiffness, build_prolongation, build_vertex_average, galerkin_coarse, Prolongation,
};
use crate::error::{Result, WgError};
use crate::fespace::{make_space, DofMap, SpaceConfig};
use crate::linalg::dense_generalized_eigenvalues;
use crate::mesh::{CoefficientField, Mesh, MeshHierarchy};
use crate::solve::vcycle::inherit_coefficient;
use crate::solve::{
    estimate_contraction, stationary_solve, CoarseKind, CoarseSolver, SmootherKind, SmootherSpec,
    TwoLevel, VCycle,
};
use crate::sparse::CsrMatrix;
use crate::spectral::{extreme_eigs, SpectrumReport};
use crate::weakgrad::{local_forms, local_weak_gradient};

/// Discrete problem on one level of a hierarchy.
pub struct LevelProblem<'m> {
    pub level: usize,
    pub mesh: &'m Mesh,
    pub config: SpaceConfig,
    pub dofs: DofMap,
    pub system: BlockSystem,
    pub prolongation: Prolongation,
}

impl<'m> LevelProblem<'m> {
    /// `base` is the coefficient on the coarsest mesh, inherited by refinement.
    pub fn new(
        hierarchy: &'m MeshHierarchy,
        level: usize,
        config: SpaceConfig,
        base: &CoefficientField,
    ) -> Result<Self> {
        if level >= hierarchy.num_levels() {
            return Err(WgError::MissingHierarchy {
                needed: level + 1,
                got: hierarchy.num_levels(),
            });
        }
        let mesh = &hierarchy.meshes[level];
        let coefficient = inherit_coefficient(hierarchy, base, level);
        let dofs = make_space(mesh, config)?;
        let system = assemble_system(mesh, &dofs, config, &coefficient)?;
        let prolongation = build_prolongation(mesh, &dofs, config)?;
        Ok(Self {
            level,
            mesh,
            config,
            dofs,
            system,
            prolongation,
        })
    }

    pub fn a(&self) -> &CsrMatrix {
        &self.system.a
    }
}

/// A CSV-backed table of formatted cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_aligned(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let mut out = line(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

fn sci(x: f64) -> String {
    format!("{x:.6e}")
}

/// Relative change `|b - a| / |a|`.
pub fn drift(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs()
}

/// `max / min` of positive values.
pub fn band_ratio(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionRow {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub matrix: SpectrumReport,
    /// The pencil `(A, Gram)`.
    pub operator: SpectrumReport,
}

pub fn condition_study(
    hierarchy: &MeshHierarchy,
    levels: std::ops::RangeInclusive<usize>,
    config: SpaceConfig,
    base: &CoefficientField,
) -> Result<Vec<ConditionRow>> {
    levels
        .map(|level| {
            let p = LevelProblem::new(hierarchy, level, config, base)?;
            let gram = assemble_gram(p.mesh, &p.dofs, config)?;
            Ok(ConditionRow {
                level,
                h: p.mesh.h(),
                dofs: p.dofs.total(),
                matrix: extreme_eigs(p.a(), None)?,
                operator: extreme_eigs(p.a(), Some(&gram))?,
            })
        })
        .collect()
}

pub fn condition_table(rows: &[ConditionRow]) -> Table {
    let mut t = Table::new(&[
        "level",
        "h",
        "dofs",
        "lambda_min",
        "lambda_max",
        "kappa",
        "kappa_ratio",
        "op_lambda_min",
        "op_lambda_max",
        "op_lambda_max_h2",
        "method",
    ]);
    for (i, r) in rows.iter().enumerate() {
        let ratio = if i == 0 {
            String::new()
        } else {
            format!("{:.4}", r.matrix.kappa / rows[i - 1].matrix.kappa)
        };
        t.push(vec![
            r.level.to_string(),
            sci(r.h),
            r.dofs.to_string(),
            sci(r.matrix.lambda_min),
            sci(r.matrix.lambda_max),
            sci(r.matrix.kappa),
            ratio,
            sci(r.operator.lambda_min),
            sci(r.operator.lambda_max),
            sci(r.operator.lambda_max * r.h * r.h),
            r.matrix.method.to_string(),
        ]);
    }
    t
}

#[derive(Clone, Copy, Debug)]
pub struct SolveSettings {
    pub smoother: SmootherKind,
    pub coarse: CoarseKind,
    pub tol: f64,
    pub max_iters: usize,
    /// Power-iteration steps for the contraction estimate; 0 skips it.
    pub rho_iters: usize,
    pub seed: u64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            smoother: SmootherKind::Sgs,
            coarse: CoarseKind::Exact,
            tol: 1e-8,
            max_iters: 1000,
            rho_iters: 0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveRow {
    pub level: usize,
    pub m: usize,
    pub smoother: SmootherKind,
    pub coarse: CoarseKind,
    pub iterations: usize,
    pub converged: bool,
    pub avg_rate: f64,
    pub rho_hat: Option<f64>,
}

/// Builds `B_h` for one level with the requested coarse solver.
pub fn build_two_level(
    problem: &LevelProblem<'_>,
    hierarchy: &MeshHierarchy,
    base: &CoefficientField,
    spec: SmootherSpec,
    coarse: CoarseKind,
) -> Result<TwoLevel> {
    match coarse {
        CoarseKind::Exact => TwoLevel::with_exact_coarse(problem.a(), &problem.prolongation, spec),
        CoarseKind::VCycle => {
            let vc = VCycle::new(hierarchy, problem.level, base, spec)?;
            TwoLevel::new(
                problem.a(),
                &problem.prolongation,
                spec,
                CoarseSolver::VCycle(vc),
            )
        }
    }
}

/// The stationary iteration with `b = 0`, `x0 = (1, ..., 1)` for every
/// `(level, m)` pair.
pub fn iteration_study(
    hierarchy: &MeshHierarchy,
    levels: std::ops::RangeInclusive<usize>,
    ms: &[usize],
    config: SpaceConfig,
    base: &CoefficientField,
    settings: SolveSettings,
) -> Result<Vec<SolveRow>> {
    let mut rows = Vec::new();
    for level in levels {
        let problem = LevelProblem::new(hierarchy, level, config, base)?;
        let n = problem.dofs.total();
        for &m in ms {
            let spec = SmootherSpec {
                kind: settings.smoother,
                sweeps: m,
                seed: settings.seed,
            };
            let b = build_two_level(&problem, hierarchy, base, spec, settings.coarse)?;
            let (_, report) = stationary_solve(
                problem.a(),
                &vec![0.0; n],
                &b,
                &vec![1.0; n],
                settings.tol,
                settings.max_iters,
            )?;
            let rho_hat = (settings.rho_iters > 0)
                .then(|| {
                    estimate_contraction(problem.a(), &b, 1, settings.rho_iters, settings.seed)
                })
                .transpose()?;
            rows.push(SolveRow {
                level,
                m,
                smoother: settings.smoother,
                coarse: settings.coarse,
                iterations: report.iterations,
                converged: report.converged,
                avg_rate: report.avg_rate,
                rho_hat,
            });
        }
    }
    Ok(rows)
}

pub fn iteration_table(rows: &[SolveRow]) -> Table {
    let mut t = Table::new(&[
        "level",
        "m",
        "smoother",
        "coarse",
        "iterations",
        "avg_rate",
        "rho_hat",
    ]);
    for r in rows {
        let iterations = if r.converged {
            r.iterations.to_string()
        } else {
            format!(">{}", r.iterations)
        };
        t.push(vec![
            r.level.to_string(),
            r.m.to_string(),
            r.smoother.to_string(),
            r.coarse.to_string(),
            iterations,
            format!("{:.4}", r.avg_rate),
            r.rho_hat.map_or_else(String::new, |v| format!("{v:.4}")),
        ]);
    }
    t
}

/// Global matrix of `|mu|_h^2` on the face unknowns (indexed within the face block).
pub fn assemble_face_seminorm(
    mesh: &Mesh,
    dofs: &DofMap,
    config: SpaceConfig,
) -> Result<CsrMatrix> {
    let nm = config.m_dim();
    let mut triplets = Vec::new();
    for t in 0..mesh.num_cells() {
        let s = local_forms(mesh, t, config)?.seminorm;
        let local: Vec<Option<usize>> = mesh.cell_edges[t]
            .iter()
            .flat_map(|&e| (0..nm).map(move |a| (e, a)))
            .map(|(e, a)| dofs.edge_dof(e, a).map(|g| g - dofs.num_interior))
            .collect();
        for (i, gi) in local.iter().enumerate() {
            for (j, gj) in local.iter().enumerate() {
                if let (Some(gi), Some(gj)) = (gi, gj) {
                    triplets.push((*gi, *gj, s[(i, j)]));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(
        dofs.num_face,
        dofs.num_face,
        &triplets,
    ))
}

/// Extreme generalized eigenvalues of `||grad_w(v, mu)||_T^2` against
/// `h_T^{-2} ||v - m_T(mu)||_T^2 + |mu|_{h,dT}^2` on one cell, on the
/// complement of the common kernel (the constants).
pub fn local_equivalence_band(mesh: &Mesh, cell: usize, config: SpaceConfig) -> Result<(f64, f64)> {
    let wg = local_weak_gradient(mesh, cell, config)?;
    let forms = local_forms(mesh, cell, config)?;
    let g = wg.matrix();
    let num = g.transpose() * &wg.w_mass * &g;
    let n = num.nrows();
    let nm = 3 * config.m_dim();
    let h = forms.h;
    let area = forms.cell_mass[(0, 0)];
    // v - m_T(mu) as a row over (v, mu)
    let mut l = DMatrix::zeros(1, n);
    l[(0, 0)] = 1.0;
    for j in 0..nm {
        l[(0, 1 + j)] = -forms.mean_row[j];
    }
    let mut den = l.transpose() * &l * (area / (h * h));
    let mut block = den.view_mut((1, 1), (nm, nm));
    block += &forms.seminorm;
    // basis of the zero-sum complement of the constant vector
    let q = DMatrix::from_fn(n, n - 1, |i, j| {
        if i == 0 {
            -1.0
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eig = dense_generalized_eigenvalues(
        &(q.transpose() * &num * &q),
        Some(&(q.transpose() * &den * &q)),
    )?;
    Ok((eig[0], eig[eig.len() - 1]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceRow {
    pub level: usize,
    /// `min |mu|_h^2 / ||mu||_h^2` over the face space.
    pub face_lambda_min: f64,
    /// Extremes over all cells of the local two-sided equivalence.
    pub local_min: f64,
    pub local_max: f64,
}

pub fn norm_equivalence_study(
    hierarchy: &MeshHierarchy,
    levels: std::ops::RangeInclusive<usize>,
    config: SpaceConfig,
) -> Result<Vec<EquivalenceRow>> {
    levels
        .map(|level| {
            let mesh = &hierarchy.meshes[level];
            let dofs = make_space(mesh, config)?;
            let seminorm = assemble_face_seminorm(mesh, &dofs, config)?;
            let gram = assemble_gram(mesh, &dofs, config)?;
            let face_gram = gram.block(
                dofs.num_interior..dofs.total(),
                dofs.num_interior..dofs.total(),
            );
            let face = extreme_eigs(&seminorm, Some(&face_gram))?;
            let (mut local_min, mut local_max) = (f64::INFINITY, f64::NEG_INFINITY);
            for t in 0..mesh.num_cells() {
                let (lo, hi) = local_equivalence_band(mesh, t, config)?;
                local_min = local_min.min(lo);
                local_max = local_max.max(hi);
            }
            Ok(EquivalenceRow {
                level,
                face_lambda_min: face.lambda_min,
                local_min,
                local_max,
            })
        })
        .collect()
}

pub fn equivalence_table(rows: &[EquivalenceRow]) -> Table {
    let mut t = Table::new(&["level", "face_lambda_min", "local_min", "local_max"]);
    for r in rows {
        t.push(vec![
            r.level.to_string(),
            sci(r.face_lambda_min),
            sci(r.local_min),
            sci(r.local_max),
        ]);
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproximationRow {
    pub level: usize,
    /// `max ||x - I_h P_h lambda||_h / (h ||x||_A)` over the samples.
    pub approximation: f64,
    /// `max ||P_h lambda||_{A~} / ||x||_A` over the samples.
    pub stability: f64,
}

pub fn approximation_study(
    hierarchy: &MeshHierarchy,
    levels: std::ops::RangeInclusive<usize>,
    config: SpaceConfig,
    base: &CoefficientField,
    samples: usize,
    seed: u64,
) -> Result<Vec<ApproximationRow>> {
    levels
        .map(|level| {
            let p = LevelProblem::new(hierarchy, level, config, base)?;
            let gram = assemble_gram(p.mesh, &p.dofs, config)?;
            let avg = build_vertex_average(p.mesh, &p.dofs, config)?;
            let coarse = galerkin_coarse(p.a(), &p.prolongation)?;
            let h = p.mesh.h();
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(level as u64));
            let (mut approximation, mut stability) = (0.0f64, 0.0f64);
            for _ in 0..samples {
                let x: Vec<f64> = (0..p.dofs.total())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                let energy = p.a().quadratic_form(&x).sqrt();
                let (_, lambda) = p.dofs.split(&x);
                let coarse_x = avg.mul_vec(lambda);
                let ip = p.prolongation.p.mul_vec(&coarse_x);
                let diff: Vec<f64> = x.iter().zip(&ip).map(|(u, v)| u - v).collect();
                approximation = approximation.max(gram.quadratic_form(&diff).sqrt() / (h * energy));
                stability =
                    stability.max(coarse.quadratic_form(&coarse_x).max(0.0).sqrt() / energy);
            }
            Ok(ApproximationRow {
                level,
                approximation,
                stability,
            })
        })
        .collect()
}

pub fn approximation_table(rows: &[ApproximationRow]) -> Table {
    let mut t = Table::new(&["level", "approximation", "stability"]);
    for r in rows {
        t.push(vec![
            r.level.to_string(),
            sci(r.approximation),
            sci(r.stability),
        ]);
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

/// Exact algebraic identities on levels `0..=max_level`: Galerkin coarse
/// operator, hybrid Schur complement (levels up to 2), constant
/// annihilation and symmetry, for both families with an isotropic and an
/// anisotropic coefficient.
pub fn identity_checks(hierarchy: &MeshHierarchy, max_level: usize) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let cells0 = hierarchy.meshes[0].num_cells();
    let coefficients = [
        ("identity", CoefficientField::identity(cells0)),
        ("anisotropic", anisotropic_field(cells0)),
    ];
    for config in [SpaceConfig::TYPE1_K0, SpaceConfig::TYPE2_K1] {
        for (cname, base) in &coefficients {
            for level in 0..=max_level.min(hierarchy.num_levels() - 1) {
                let p = LevelProblem::new(hierarchy, level, config, base)?;
                let coefficient = inherit_coefficient(hierarchy, base, level);
                let direct = assemble_p1_stiffness(p.mesh, &coefficient)?;
                let galerkin = galerkin_coarse(p.a(), &p.prolongation)?;
                let scale = direct.max_abs().max(f64::MIN_POSITIVE);
                checks.push(Check {
                    name: format!("galerkin {} {cname} level {level}", config.family),
                    value: galerkin.max_abs_diff(&direct)? / scale,
                    tolerance: 1e-12,
                });
                checks.push(Check {
                    name: format!("symmetry {} {cname} level {level}", config.family),
                    value: p.a().symmetry_defect() / p.a().max_abs(),
                    tolerance: 1e-12,
                });
                // RT0 fluxes are only invariant under scalar coefficients
                let schur_applies =
                    level <= 2 && (config == SpaceConfig::TYPE2_K1 || *cname == "identity");
                if schur_applies {
                    let hybrid = assemble_hybrid(p.mesh, &p.dofs, config, &coefficient)?;
                    checks.push(Check {
                        name: format!("schur {} {cname} level {level}", config.family),
                        value: schur_check(&hybrid, &p.system)? / p.a().max_abs(),
                        tolerance: 1e-12,
                    });
                }
            }
        }
        checks.push(Check {
            name: format!("constant annihilation {}", config.family),
            value: annihilation_defect(hierarchy, config, 100, 0)?,
            tolerance: 1e-13,
        });
    }
    Ok(checks)
}

/// A fixed anisotropic, cell-varying SPD field.
pub fn anisotropic_field(num_cells: usize) -> CoefficientField {
    CoefficientField {
        tensors: (0..num_cells)
            .map(|t| {
                let s = 1.0 + (t % 5) as f64;
                [3.0 * s, 0.4 * s, 0.5 * s]
            })
            .collect(),
    }
}

/// Largest `||grad_w(c, c)||_T` over `samples` seeded random cells of the
/// hierarchy and constants `c` in `[-1, 1]`.
pub fn annihilation_defect(
    hierarchy: &MeshHierarchy,
    config: SpaceConfig,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let mesh = &hierarchy.meshes[rng.gen_range(0..hierarchy.num_levels())];
        let cell = rng.gen_range(0..mesh.num_cells());
        let c: f64 = rng.gen_range(-1.0..1.0);
        let wg = local_weak_gradient(mesh, cell, config)?;
        worst = worst.max(wg.gradient_norm(&[c], &vec![c; 3 * config.m_dim()]));
    }
    Ok(worst)
}

pub fn checks_table(checks: &[Check]) -> Table {
    let mut t = Table::new(&["check", "value", "tolerance", "status"]);
    for c in checks {
        t.push(vec![
            c.name.clone(),
            format!("{:.3e}", c.value),
            format!("{}", c.tolerance),
            if c.passed() { "PASS" } else { "FAIL" }.to_string(),
        ]);
    }
    t
}
