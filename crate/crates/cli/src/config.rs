//! Run configuration assembled from flags and an optional `key = value` file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use wg_core::mesh::InitialPattern;
use wg_core::solve::{CoarseKind, SmootherKind};
use wg_core::{Family, SpaceConfig, WgError};

#[derive(Parser, Debug)]
#[command(
    name = "wgmg",
    version,
    about = "Weak Galerkin two-level and multilevel experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    MeshInfo,
    Condition,
    TwoLevel,
    MultiLevel,
    Verify,
    ExportMatrix,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mesh statistics for every level of the hierarchy.
    MeshInfo(Flags),
    /// Extreme eigenvalues and condition numbers of A_h and of the (A_h, Gram) pencil.
    Condition(Flags),
    /// Iteration counts of the two-level method.
    TwoLevel(Flags),
    /// Iteration counts and reduction rates with a V-cycle coarse solver.
    MultiLevel(Flags),
    /// Exact identities and norm-equivalence properties.
    Verify(Flags),
    /// Writes A_h of the finest level in MatrixMarket format.
    ExportMatrix(Flags),
}

impl Command {
    pub fn split(self) -> (CommandKind, Flags) {
        match self {
            Self::MeshInfo(f) => (CommandKind::MeshInfo, f),
            Self::Condition(f) => (CommandKind::Condition, f),
            Self::TwoLevel(f) => (CommandKind::TwoLevel, f),
            Self::MultiLevel(f) => (CommandKind::MultiLevel, f),
            Self::Verify(f) => (CommandKind::Verify, f),
            Self::ExportMatrix(f) => (CommandKind::ExportMatrix, f),
        }
    }
}

#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Initial triangulation: two-triangle or criss-cross.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Squares per side of the initial criss-cross mesh.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of uniform refinements.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Element family: type1 or type2.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub degree: Option<usize>,
    /// Smoothing steps, comma separated for a sweep.
    #[arg(long)]
    pub m: Option<String>,
    /// sgs or richardson.
    #[arg(long)]
    pub smoother: Option<String>,
    /// exact or vcycle.
    #[arg(long)]
    pub coarse: Option<String>,
    /// Energy-norm reduction factor at which the iteration stops.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Iteration cap of the stationary solver.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Power-iteration steps of the contraction estimate (0 disables it).
    #[arg(long)]
    pub rho_iters: Option<usize>,
    /// CSV (or MatrixMarket) output file; the table goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plain-text `key = value` file; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

const KEYS: [&str; 13] = [
    "pattern",
    "n",
    "levels",
    "family",
    "degree",
    "m",
    "smoother",
    "coarse",
    "tol",
    "seed",
    "rho-iters",
    "max-iters",
    "out",
];

pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, WgError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(WgError::Parse {
                line: i + 1,
                msg: format!("expected key = value, got '{line}'"),
            });
        };
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(WgError::Parse {
                line: i + 1,
                msg: format!("unknown key '{}'", k.trim()),
            });
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, WgError> {
    v.parse()
        .map_err(|_| WgError::InvalidArgument(format!("invalid value '{v}' for {key}")))
}

impl Flags {
    /// Fills unset flags from the config file named by `--config`.
    pub fn merge_file(mut self) -> Result<Self, WgError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let map = parse_config_file(&std::fs::read_to_string(&path)?)?;
        for (k, v) in &map {
            match k.as_str() {
                "pattern" => self.pattern = self.pattern.or_else(|| Some(v.clone())),
                "family" => self.family = self.family.or_else(|| Some(v.clone())),
                "m" => self.m = self.m.or_else(|| Some(v.clone())),
                "smoother" => self.smoother = self.smoother.or_else(|| Some(v.clone())),
                "coarse" => self.coarse = self.coarse.or_else(|| Some(v.clone())),
                "out" => self.out = self.out.or_else(|| Some(resolve(&path, v))),
                "n" if self.n.is_none() => self.n = Some(parse_value(k, v)?),
                "levels" if self.levels.is_none() => self.levels = Some(parse_value(k, v)?),
                "degree" if self.degree.is_none() => self.degree = Some(parse_value(k, v)?),
                "tol" if self.tol.is_none() => self.tol = Some(parse_value(k, v)?),
                "seed" if self.seed.is_none() => self.seed = Some(parse_value(k, v)?),
                "max-iters" if self.max_iters.is_none() => {
                    self.max_iters = Some(parse_value(k, v)?)
                }
                "rho-iters" if self.rho_iters.is_none() => {
                    self.rho_iters = Some(parse_value(k, v)?)
                }
                _ => {}
            }
        }
        Ok(self)
    }
}

/// Relative paths in a config file are taken relative to the file itself.
fn resolve(config: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        config.parent().map_or(p.clone(), |d| d.join(&p))
    }
}

/// Fully validated settings of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub pattern: InitialPattern,
    pub n: usize,
    pub levels: usize,
    pub space: SpaceConfig,
    pub ms: Vec<usize>,
    pub smoother: SmootherKind,
    pub coarse: CoarseKind,
    pub tol: f64,
    pub seed: u64,
    pub max_iters: usize,
    pub rho_iters: usize,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_flags(command: CommandKind, flags: Flags) -> Result<Self, WgError> {
        let flags = flags.merge_file()?;
        let pattern: InitialPattern = flags
            .pattern
            .as_deref()
            .unwrap_or("criss-cross")
            .parse()
            .map_err(WgError::InvalidArgument)?;
        let n = flags.n.unwrap_or(2);
        if n == 0 {
            return Err(WgError::InvalidArgument("n must be at least 1".into()));
        }
        let family: Family = flags
            .family
            .as_deref()
            .unwrap_or("type2")
            .parse()
            .map_err(WgError::InvalidArgument)?;
        let degree = flags.degree.unwrap_or(match family {
            Family::Type1 => 0,
            Family::Type2 => 1,
        });
        let space = SpaceConfig::new(family, degree)?;
        let default_ms = match command {
            CommandKind::TwoLevel => "1,2,3,4,10",
            _ => "1,2,3",
        };
        let ms = flags
            .m
            .as_deref()
            .unwrap_or(default_ms)
            .split(',')
            .map(|s| parse_value::<usize>("m", s.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        if ms.iter().any(|&m| m == 0) {
            return Err(WgError::InvalidArgument("m must be at least 1".into()));
        }
        let smoother: SmootherKind = flags.smoother.as_deref().unwrap_or("sgs").parse()?;
        let coarse: CoarseKind = match command {
            CommandKind::MultiLevel => flags.coarse.as_deref().unwrap_or("vcycle").parse()?,
            _ => flags.coarse.as_deref().unwrap_or("exact").parse()?,
        };
        let tol = flags.tol.unwrap_or(1e-8);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(WgError::InvalidArgument(format!(
                "tol must lie in (0, 1), got {tol}"
            )));
        }
        Ok(Self {
            command,
            pattern,
            n,
            levels: flags.levels.unwrap_or(match command {
                CommandKind::Verify => 3,
                _ => 5,
            }),
            space,
            ms,
            smoother,
            coarse,
            tol,
            seed: flags.seed.unwrap_or(0),
            max_iters: flags.max_iters.unwrap_or(1000),
            rho_iters: flags.rho_iters.unwrap_or(100),
            out: flags.out,
        })
    }
}
