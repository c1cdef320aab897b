//! The `wgmg` command-line front end.

pub mod config;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use wg_core::mesh::{build_initial_mesh, MeshHierarchy};
use wg_core::study::{
    approximation_study, band_ratio, checks_table, condition_study, condition_table, drift,
    identity_checks, iteration_study, iteration_table, norm_equivalence_study, Check, LevelProblem,
    SolveSettings, Table,
};
use wg_core::{CoefficientField, P1Space, WgError};

use crate::config::{Cli, CommandKind, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<WgError> for Failure {
    fn from(e: WgError) -> Self {
        match e {
            WgError::Parse { .. }
            | WgError::InvalidArgument(_)
            | WgError::UnsupportedConfig { .. }
            | WgError::UnsupportedDegree(_) => Self::Usage(e.to_string()),
            other => Self::Numerical(other.to_string()),
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let (kind, flags) = cli.command.split();
    let result = RunConfig::from_flags(kind, flags)
        .map_err(Failure::from)
        .and_then(|c| execute(&c));
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILED
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("WG_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn emit(config: &RunConfig, table: &Table) -> Result<(), Failure> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let io = |e: std::io::Error| Failure::Numerical(e.to_string());
    match &config.out {
        Some(path) => {
            std::fs::write(path, table.to_csv()).map_err(io)?;
            out.write_all(table.to_aligned().as_bytes()).map_err(io)?;
        }
        None => out.write_all(table.to_csv().as_bytes()).map_err(io)?,
    }
    Ok(())
}

fn execute(config: &RunConfig) -> Result<(), Failure> {
    let base_mesh = build_initial_mesh(config.pattern, config.n);
    let hierarchy = MeshHierarchy::new(base_mesh, config.levels);
    let base = CoefficientField::identity(hierarchy.meshes[0].num_cells());
    match config.command {
        CommandKind::MeshInfo => emit(config, &mesh_info(&hierarchy, config)?),
        CommandKind::Condition => condition(&hierarchy, &base, config),
        CommandKind::TwoLevel | CommandKind::MultiLevel => iterations(&hierarchy, &base, config),
        CommandKind::Verify => verify(&hierarchy, &base, config),
        CommandKind::ExportMatrix => export_matrix(&hierarchy, &base, config),
    }
}

fn mesh_info(hierarchy: &MeshHierarchy, config: &RunConfig) -> Result<Table, Failure> {
    let mut t = Table::new(&[
        "level",
        "vertices",
        "edges",
        "cells",
        "interior_edges",
        "h",
        "h_ratio",
        "interior_dofs",
        "face_dofs",
        "p1_dofs",
    ]);
    for (level, mesh) in hierarchy.meshes.iter().enumerate() {
        mesh.check_invariants()?;
        let dofs = wg_core::make_space(mesh, config.space)?;
        t.push(vec![
            level.to_string(),
            mesh.num_vertices().to_string(),
            mesh.num_edges().to_string(),
            mesh.num_cells().to_string(),
            mesh.num_interior_edges().to_string(),
            format!("{:.6e}", mesh.h()),
            format!("{:.6}", mesh.h() / mesh.min_cell_diameter()),
            dofs.num_interior.to_string(),
            dofs.num_face.to_string(),
            P1Space::new(mesh).dim().to_string(),
        ]);
    }
    Ok(t)
}

fn condition(
    hierarchy: &MeshHierarchy,
    base: &CoefficientField,
    config: &RunConfig,
) -> Result<(), Failure> {
    if config.levels < 2 {
        return Err(Failure::Usage("condition needs --levels 2 or more".into()));
    }
    let rows = condition_study(hierarchy, 0..=config.levels, config.space, base)?;
    emit(config, &condition_table(&rows))?;
    let mut failures = Vec::new();
    for pair in rows.windows(2).filter(|w| w[0].level >= 2) {
        let (a, b) = (&pair[0], &pair[1]);
        let lo = drift(a.operator.lambda_min, b.operator.lambda_min);
        let hi = drift(
            a.operator.lambda_max * a.h * a.h,
            b.operator.lambda_max * b.h * b.h,
        );
        if lo >= 0.1 || hi >= 0.1 {
            failures.push(format!(
                "operator bounds drift between levels {} and {}: {lo:.3}, {hi:.3}",
                a.level, b.level
            ));
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(failures.join("; ")))
    }
}

fn iterations(
    hierarchy: &MeshHierarchy,
    base: &CoefficientField,
    config: &RunConfig,
) -> Result<(), Failure> {
    let settings = SolveSettings {
        smoother: config.smoother,
        coarse: config.coarse,
        tol: config.tol,
        max_iters: config.max_iters,
        rho_iters: config.rho_iters,
        seed: config.seed,
    };
    let first = usize::from(config.command == CommandKind::MultiLevel && config.levels > 0);
    let rows = iteration_study(
        hierarchy,
        first..=config.levels,
        &config.ms,
        config.space,
        base,
        settings,
    )?;
    emit(config, &iteration_table(&rows))?;
    let stalled: Vec<String> = rows
        .iter()
        .filter(|r| !r.converged)
        .map(|r| format!("level {} m {}", r.level, r.m))
        .collect();
    if stalled.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "no convergence for {}",
            stalled.join(", ")
        )))
    }
}

fn verify(
    hierarchy: &MeshHierarchy,
    base: &CoefficientField,
    config: &RunConfig,
) -> Result<(), Failure> {
    let mut checks = identity_checks(hierarchy, config.levels)?;
    if config.levels >= 2 {
        let eq = norm_equivalence_study(hierarchy, 1..=config.levels, config.space)?;
        let bands = [
            (
                "face norm equivalence band",
                eq.iter().map(|r| r.face_lambda_min).collect::<Vec<_>>(),
            ),
            (
                "local lower equivalence band",
                eq.iter().map(|r| r.local_min).collect(),
            ),
            (
                "local upper equivalence band",
                eq.iter().map(|r| r.local_max).collect(),
            ),
        ];
        for (name, values) in bands {
            checks.push(Check {
                name: format!("{name} {}", config.space.family),
                value: band_ratio(&values),
                tolerance: 1.1,
            });
        }
        let ap = approximation_study(
            hierarchy,
            1..=config.levels,
            config.space,
            base,
            20,
            config.seed,
        )?;
        let (a, b) = (&ap[ap.len() - 2], &ap[ap.len() - 1]);
        checks.push(Check {
            name: format!("approximation drift {}", config.space.family),
            value: drift(a.approximation, b.approximation),
            tolerance: 0.15,
        });
        checks.push(Check {
            name: format!("stability drift {}", config.space.family),
            value: drift(a.stability, b.stability),
            tolerance: 0.15,
        });
    }
    emit(config, &checks_table(&checks))?;
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

fn export_matrix(
    hierarchy: &MeshHierarchy,
    base: &CoefficientField,
    config: &RunConfig,
) -> Result<(), Failure> {
    let problem = LevelProblem::new(hierarchy, config.levels, config.space, base)?;
    let io = |e: WgError| Failure::Numerical(e.to_string());
    match &config.out {
        Some(path) => {
            let file =
                std::fs::File::create(path).map_err(|e| Failure::Numerical(e.to_string()))?;
            let mut w = std::io::BufWriter::new(file);
            problem.a().write_matrix_market(&mut w).map_err(io)?;
            w.flush().map_err(|e| Failure::Numerical(e.to_string()))
        }
        None => problem
            .a()
            .write_matrix_market(std::io::stdout().lock())
            .map_err(io),
    }
}
