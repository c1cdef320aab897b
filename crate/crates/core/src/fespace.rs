//! Local spaces `V(T)`, `M(F)`, `W(T)` and the global degree-of-freedom map.
//!
//! Supported families:
//!
//! | family | k | V(T) | M(F) | W(T)               |
//! |--------|---|------|------|--------------------|
//! | Type1  | 0 | P0   | P0   | RT0 = P0^2 + P0 x  |
//! | Type2  | 1 | P0   | P1   | [P1]^2             |
//!
//! Cell unknowns are the value of the constant on each cell. Face unknowns
//! are either the constant edge value (k = 0) or the values at the two edge
//! endpoints, lower global vertex index first (k = 1).

use crate::error::{Result, WgError};
use crate::mesh::Mesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Type1,
    Type2,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "type1" | "1" => Ok(Self::Type1),
            "type2" | "2" => Ok(Self::Type2),
            other => Err(format!("unknown element family `{other}`")),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Type1 => "type1",
            Self::Type2 => "type2",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpaceConfig {
    pub family: Family,
    pub degree: usize,
}

impl SpaceConfig {
    pub const TYPE1_K0: Self = Self {
        family: Family::Type1,
        degree: 0,
    };
    pub const TYPE2_K1: Self = Self {
        family: Family::Type2,
        degree: 1,
    };

    pub fn new(family: Family, degree: usize) -> Result<Self> {
        let config = Self { family, degree };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.family, self.degree) {
            (Family::Type1, 0) | (Family::Type2, 1) => Ok(()),
            (family, degree) => Err(WgError::UnsupportedConfig { family, degree }),
        }
    }

    pub fn v_dim(&self) -> usize {
        1
    }

    pub fn m_dim(&self) -> usize {
        self.degree + 1
    }

    pub fn w_dim(&self) -> usize {
        match self.family {
            Family::Type1 => 3,
            Family::Type2 => 6,
        }
    }

    /// Local unknowns per cell: interior ones followed by the three edges.
    pub fn local_dim(&self) -> usize {
        self.v_dim() + 3 * self.m_dim()
    }
}

/// Polynomial in two variables as a list of `c * x^a * y^b` terms.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly2 {
    pub terms: Vec<(f64, u32, u32)>,
}

impl Poly2 {
    pub fn monomial(a: u32, b: u32) -> Self {
        Self {
            terms: vec![(1.0, a, b)],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: vec![(c, 0, 0)],
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        self.terms
            .iter()
            .map(|&(c, a, b)| c * p[0].powi(a as i32) * p[1].powi(b as i32))
            .sum()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|t| t.0 != 0.0)
            .map(|&(_, a, b)| a + b)
            .max()
            .unwrap_or(0)
    }

    pub fn dx(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|t| t.1 > 0)
                .map(|&(c, a, b)| (c * a as f64, a - 1, b))
                .collect(),
        }
    }

    pub fn dy(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|t| t.2 > 0)
                .map(|&(c, a, b)| (c * b as f64, a, b - 1))
                .collect(),
        }
    }
}

/// Vector-valued polynomial `(q1, q2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VecPoly(pub [Poly2; 2]);

impl VecPoly {
    pub fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        [self.0[0].eval(p), self.0[1].eval(p)]
    }

    pub fn div(&self) -> Poly2 {
        let mut d = self.0[0].dx();
        d.terms.extend(self.0[1].dy().terms);
        d
    }

    pub fn degree(&self) -> u32 {
        self.0[0].degree().max(self.0[1].degree())
    }
}

/// Polynomial in one variable, coefficients in ascending powers.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly1(pub Vec<f64>);

impl Poly1 {
    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }
}

/// Bases of the local spaces, written in generic coordinates `(x, y)` for
/// `V` and `W` and in the arc parameter `t in [0, 1]` for `M`.
#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    pub v: Vec<Poly2>,
    /// Monomial basis `{1, t, ...}` of `M(F)`.
    pub m_monomial: Vec<Poly1>,
    /// Nodal basis of `M(F)` used for global unknowns.
    pub m_nodal: Vec<Poly1>,
    pub w: Vec<VecPoly>,
    pub w_div: Vec<Poly2>,
}

impl ReferenceBasis {
    pub fn eval_w(&self, j: usize, p: [f64; 2]) -> [f64; 2] {
        self.w[j].eval(p)
    }

    pub fn eval_m(&self, a: usize, t: f64) -> f64 {
        self.m_nodal[a].eval(t)
    }
}

pub fn reference_basis(config: SpaceConfig) -> Result<ReferenceBasis> {
    config.validate()?;
    let x = || Poly2::monomial(1, 0);
    let y = || Poly2::monomial(0, 1);
    let one = || Poly2::constant(1.0);
    let zero = Poly2::zero;
    let w = match config.family {
        Family::Type1 => vec![
            VecPoly([one(), zero()]),
            VecPoly([zero(), one()]),
            VecPoly([x(), y()]),
        ],
        Family::Type2 => vec![
            VecPoly([one(), zero()]),
            VecPoly([x(), zero()]),
            VecPoly([y(), zero()]),
            VecPoly([zero(), one()]),
            VecPoly([zero(), x()]),
            VecPoly([zero(), y()]),
        ],
    };
    let (m_monomial, m_nodal) = match config.degree {
        0 => (vec![Poly1(vec![1.0])], vec![Poly1(vec![1.0])]),
        _ => (
            vec![Poly1(vec![1.0]), Poly1(vec![0.0, 1.0])],
            vec![Poly1(vec![1.0, -1.0]), Poly1(vec![0.0, 1.0])],
        ),
    };
    let w_div = w.iter().map(VecPoly::div).collect();
    Ok(ReferenceBasis {
        v: vec![one()],
        m_monomial,
        m_nodal,
        w,
        w_div,
    })
}

/// Global numbering: cell unknowns `[0, M)`, face unknowns `[M, M + N)`.
/// Boundary edges carry no unknowns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DofMap {
    pub config: SpaceConfig,
    /// First unknown of each interior edge, `None` on the boundary.
    pub edge_start: Vec<Option<usize>>,
    pub num_cells: usize,
    pub num_interior: usize,
    pub num_face: usize,
}

impl DofMap {
    pub fn total(&self) -> usize {
        self.num_interior + self.num_face
    }

    pub fn cell_dof(&self, cell: usize, i: usize) -> usize {
        cell * self.config.v_dim() + i
    }

    pub fn edge_dof(&self, edge: usize, a: usize) -> Option<usize> {
        self.edge_start[edge].map(|s| s + a)
    }

    /// Global indices of the local unknowns of `cell` in local order.
    pub fn local_dofs(&self, mesh: &Mesh, cell: usize) -> Vec<Option<usize>> {
        let mut dofs = Vec::with_capacity(self.config.local_dim());
        dofs.extend((0..self.config.v_dim()).map(|i| Some(self.cell_dof(cell, i))));
        for &e in &mesh.cell_edges[cell] {
            dofs.extend((0..self.config.m_dim()).map(|a| self.edge_dof(e, a)));
        }
        dofs
    }

    /// Splits a global vector into its interior and face parts.
    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.num_interior)
    }
}

pub fn make_space(mesh: &Mesh, config: SpaceConfig) -> Result<DofMap> {
    config.validate()?;
    let num_interior = mesh.num_cells() * config.v_dim();
    let mut next = num_interior;
    let edge_start = mesh
        .edges
        .iter()
        .map(|e| {
            (!e.boundary).then(|| {
                let s = next;
                next += config.m_dim();
                s
            })
        })
        .collect();
    Ok(DofMap {
        config,
        edge_start,
        num_cells: mesh.num_cells(),
        num_interior,
        num_face: next - num_interior,
    })
}
