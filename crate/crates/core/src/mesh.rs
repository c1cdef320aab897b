//! Conforming triangulations of polygonal domains.
//!
//! A [`Mesh`] stores explicit vertex/edge/cell adjacency so that patch and
//! incidence queries are constant time. Edges are numbered lexicographically
//! by their sorted vertex pair, cells are counterclockwise, and uniform
//! refinement keeps the coarse vertices in place and appends one midpoint
//! vertex per coarse edge (index `V + e`).

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Result, WgError};

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    /// Endpoints, always `v[0] < v[1]`.
    pub v: [usize; 2],
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub edges: Vec<Edge>,
    pub cells: Vec<[usize; 3]>,
    /// `cell_edges[t][i]` is the edge opposite local vertex `i`.
    pub cell_edges: Vec<[usize; 3]>,
    pub edge_cells: Vec<Vec<usize>>,
    pub vertex_cells: Vec<Vec<usize>>,
    pub boundary_vertex: Vec<bool>,
    pub level: usize,
    /// Parent cell of each cell when this mesh came from [`refine_uniform`].
    pub cell_parent: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialPattern {
    /// Unit square split by the diagonal (0,0)-(1,1).
    TwoTriangle,
    /// `n x n` squares, each split into four by both diagonals.
    CrissCross,
}

impl std::str::FromStr for InitialPattern {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "two-triangle" => Ok(Self::TwoTriangle),
            "criss-cross" | "criss-cross-n" => Ok(Self::CrissCross),
            other => Err(format!("unknown mesh pattern `{other}`")),
        }
    }
}

impl std::fmt::Display for InitialPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::TwoTriangle => "two-triangle",
            Self::CrissCross => "criss-cross",
        })
    }
}

/// Geometric data of one triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct CellGeometry {
    pub corners: [Point; 3],
    /// Diameter (longest edge).
    pub h: f64,
    pub area: f64,
    /// Lengths of the local edges (edge `i` opposite corner `i`).
    pub edge_lengths: [f64; 3],
    pub outward_normals: [Point; 3],
    /// Affine map `x = jacobian * xhat + offset` from the reference triangle
    /// (0,0),(1,0),(0,1); row-major.
    pub jacobian: [[f64; 2]; 2],
    pub offset: Point,
}

impl CellGeometry {
    pub fn centroid(&self) -> Point {
        let [a, b, c] = self.corners;
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn map_reference(&self, xhat: Point) -> Point {
        let j = &self.jacobian;
        [
            j[0][0] * xhat[0] + j[0][1] * xhat[1] + self.offset[0],
            j[1][0] * xhat[0] + j[1][1] * xhat[1] + self.offset[1],
        ]
    }

    pub fn det(&self) -> f64 {
        let j = &self.jacobian;
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }

    /// Endpoints of local edge `i`, in counterclockwise order around the cell.
    pub fn edge_endpoints(&self, i: usize) -> [Point; 2] {
        [self.corners[(i + 1) % 3], self.corners[(i + 2) % 3]]
    }
}

/// Symmetric 2x2 tensor per cell, stored as `(a11, a12, a22)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    pub tensors: Vec<[f64; 3]>,
}

impl CoefficientField {
    pub fn identity(num_cells: usize) -> Self {
        Self::constant(num_cells, [1.0, 0.0, 1.0])
    }

    pub fn constant(num_cells: usize, tensor: [f64; 3]) -> Self {
        Self {
            tensors: vec![tensor; num_cells],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            tensors: self
                .tensors
                .iter()
                .map(|t| [s * t[0], s * t[1], s * t[2]])
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn matrix(&self, cell: usize) -> [[f64; 2]; 2] {
        let [a11, a12, a22] = self.tensors[cell];
        [[a11, a12], [a12, a22]]
    }

    pub fn validate(&self, num_cells: usize) -> Result<()> {
        if self.tensors.len() != num_cells {
            return Err(WgError::DimensionMismatch(format!(
                "coefficient field has {} tensors for {} cells",
                self.tensors.len(),
                num_cells
            )));
        }
        for (cell, &[a11, a12, a22]) in self.tensors.iter().enumerate() {
            let spd =
                a11 > 0.0 && a11 * a22 - a12 * a12 > 0.0 && a11.is_finite() && a22.is_finite();
            if !spd {
                return Err(WgError::NonSpdCoefficient { cell });
            }
        }
        Ok(())
    }
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

impl Mesh {
    /// Builds all adjacency from vertex coordinates and counterclockwise cells.
    pub fn from_cells(vertices: Vec<Point>, cells: Vec<[usize; 3]>, level: usize) -> Result<Self> {
        let nv = vertices.len();
        for (t, cell) in cells.iter().enumerate() {
            if cell.iter().any(|&v| v >= nv) {
                return Err(WgError::InvalidMesh(format!(
                    "cell {t} references a missing vertex"
                )));
            }
            let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if area <= 0.0 {
                return Err(WgError::InvalidMesh(format!(
                    "cell {t} has non-positive signed area {area}"
                )));
            }
        }

        let mut keys: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(3 * cells.len());
        for (t, cell) in cells.iter().enumerate() {
            for i in 0..3 {
                let a = cell[(i + 1) % 3];
                let b = cell[(i + 2) % 3];
                keys.push((a.min(b), a.max(b), t, i));
            }
        }
        keys.sort_unstable();

        let mut edges = Vec::new();
        let mut edge_cells: Vec<Vec<usize>> = Vec::new();
        let mut cell_edges = vec![[usize::MAX; 3]; cells.len()];
        for (k, &(a, b, t, i)) in keys.iter().enumerate() {
            let new_edge = k == 0 || (keys[k - 1].0, keys[k - 1].1) != (a, b);
            if new_edge {
                edges.push(Edge {
                    v: [a, b],
                    boundary: false,
                });
                edge_cells.push(Vec::with_capacity(2));
            }
            let e = edges.len() - 1;
            edge_cells[e].push(t);
            cell_edges[t][i] = e;
        }
        for (e, incident) in edge_cells.iter().enumerate() {
            match incident.len() {
                1 => edges[e].boundary = true,
                2 => {}
                n => {
                    return Err(WgError::InvalidMesh(format!(
                        "edge {:?} is shared by {n} cells",
                        edges[e].v
                    )))
                }
            }
        }

        let mut vertex_cells = vec![Vec::new(); nv];
        for (t, cell) in cells.iter().enumerate() {
            for &v in cell {
                vertex_cells[v].push(t);
            }
        }
        if let Some(v) = vertex_cells.iter().position(Vec::is_empty) {
            return Err(WgError::InvalidMesh(format!(
                "vertex {v} belongs to no cell"
            )));
        }
        let mut boundary_vertex = vec![false; nv];
        for edge in edges.iter().filter(|e| e.boundary) {
            boundary_vertex[edge.v[0]] = true;
            boundary_vertex[edge.v[1]] = true;
        }

        Ok(Self {
            vertices,
            edges,
            cells,
            cell_edges,
            edge_cells,
            vertex_cells,
            boundary_vertex,
            level,
            cell_parent: None,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.boundary).count()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_cells() as i64
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].v;
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn cell_diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.cells[t].map(|v| self.vertices[v]);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn cell_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.cells[t].map(|v| self.vertices[v]);
        signed_area(a, b, c)
    }

    /// Mesh size `h = max_T h_T`.
    pub fn h(&self) -> f64 {
        (0..self.num_cells())
            .map(|t| self.cell_diameter(t))
            .fold(0.0, f64::max)
    }

    pub fn min_cell_diameter(&self) -> f64 {
        (0..self.num_cells())
            .map(|t| self.cell_diameter(t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn cell_geometry(&self, t: usize) -> Result<CellGeometry> {
        let corners = self.cells[t].map(|v| self.vertices[v]);
        cell_geometry_of(corners)
            .ok_or_else(|| WgError::InvalidMesh(format!("cell {t} is degenerate")))
    }

    /// Cells having `vertex` as a corner.
    pub fn vertex_patch(&self, vertex: usize) -> &[usize] {
        &self.vertex_cells[vertex]
    }

    /// Checks the structural invariants; used by tests and the mesh reader.
    pub fn check_invariants(&self) -> Result<()> {
        for t in 0..self.num_cells() {
            if self.cell_area(t) <= 0.0 {
                return Err(WgError::InvalidMesh(format!(
                    "cell {t} is not counterclockwise"
                )));
            }
            for &e in &self.cell_edges[t] {
                if !self.edge_cells[e].contains(&t) {
                    return Err(WgError::InvalidMesh(format!(
                        "edge {e} does not list cell {t}"
                    )));
                }
            }
        }
        for (e, cells) in self.edge_cells.iter().enumerate() {
            let expected = if self.edges[e].boundary { 1 } else { 2 };
            if cells.len() != expected {
                return Err(WgError::InvalidMesh(format!(
                    "edge {e} has {} cells",
                    cells.len()
                )));
            }
            for &t in cells {
                if !self.cell_edges[t].contains(&e) {
                    return Err(WgError::InvalidMesh(format!(
                        "cell {t} does not list edge {e}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Geometry of a triangle given by its counterclockwise corners; `None` if
/// degenerate.
pub fn cell_geometry_of(corners: [Point; 3]) -> Option<CellGeometry> {
    let [a, b, c] = corners;
    let area = signed_area(a, b, c);
    if area.abs() <= f64::EPSILON * dist(a, b).max(dist(a, c)).powi(2) {
        return None;
    }
    let mut edge_lengths = [0.0; 3];
    let mut outward_normals = [[0.0; 2]; 3];
    for i in 0..3 {
        let p = corners[(i + 1) % 3];
        let q = corners[(i + 2) % 3];
        let len = dist(p, q);
        edge_lengths[i] = len;
        // Rotate the tangent clockwise; outward for counterclockwise cells.
        let sign = area.signum();
        outward_normals[i] = [sign * (q[1] - p[1]) / len, -sign * (q[0] - p[0]) / len];
    }
    let h = edge_lengths.iter().copied().fold(0.0, f64::max);
    Some(CellGeometry {
        corners,
        h,
        area: area.abs(),
        edge_lengths,
        outward_normals,
        jacobian: [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]],
        offset: a,
    })
}

/// Coarse mesh of the unit square. `n` is ignored for the two-triangle pattern.
pub fn build_initial_mesh(pattern: InitialPattern, n: usize) -> Mesh {
    let (vertices, cells) = match pattern {
        InitialPattern::TwoTriangle => (
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        ),
        InitialPattern::CrissCross => {
            let n = n.max(1);
            let side = n + 1;
            let mut vertices = Vec::with_capacity(side * side + n * n);
            for j in 0..side {
                for i in 0..side {
                    vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
                }
            }
            for j in 0..n {
                for i in 0..n {
                    vertices.push([(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64]);
                }
            }
            let mut cells = Vec::with_capacity(4 * n * n);
            for j in 0..n {
                for i in 0..n {
                    let v00 = j * side + i;
                    let v10 = v00 + 1;
                    let v01 = v00 + side;
                    let v11 = v01 + 1;
                    let c = side * side + j * n + i;
                    cells.extend([[v00, v10, c], [v10, v11, c], [v11, v01, c], [v01, v00, c]]);
                }
            }
            (vertices, cells)
        }
    };
    Mesh::from_cells(vertices, cells, 0).expect("initial mesh patterns are valid")
}

/// Red refinement: every triangle is split into four similar children by
/// joining its edge midpoints.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    let nv = mesh.num_vertices();
    let mut vertices = mesh.vertices.clone();
    vertices.extend(mesh.edges.iter().map(|e| {
        let [a, b] = e.v.map(|v| mesh.vertices[v]);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }));

    let mut cells = Vec::with_capacity(4 * mesh.num_cells());
    let mut parent = Vec::with_capacity(4 * mesh.num_cells());
    for (t, &[a, b, c]) in mesh.cells.iter().enumerate() {
        let [ea, eb, ec] = mesh.cell_edges[t];
        // midpoints opposite a, b, c
        let (mbc, mca, mab) = (nv + ea, nv + eb, nv + ec);
        cells.extend([[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mab, mbc, mca]]);
        parent.extend([t; 4]);
    }
    let mut fine = Mesh::from_cells(vertices, cells, mesh.level + 1)
        .expect("refinement of a valid mesh is valid");
    fine.cell_parent = Some(parent);
    fine
}

/// A nested sequence of uniformly refined meshes `T_0, ..., T_J`.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    pub meshes: Vec<Mesh>,
}

impl MeshHierarchy {
    /// `base` refined `refinements` times.
    pub fn new(base: Mesh, refinements: usize) -> Self {
        let mut meshes = Vec::with_capacity(refinements + 1);
        meshes.push(base);
        for _ in 0..refinements {
            let next = refine_uniform(meshes.last().unwrap());
            meshes.push(next);
        }
        Self { meshes }
    }

    pub fn finest(&self) -> &Mesh {
        self.meshes.last().unwrap()
    }

    pub fn num_levels(&self) -> usize {
        self.meshes.len()
    }

    /// Hierarchy truncated to levels `0..=level`.
    pub fn truncated(&self, level: usize) -> Self {
        Self {
            meshes: self.meshes[..=level].to_vec(),
        }
    }
}

/// Writes the plain-text `wgmesh 1` format.
pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    let mut buf = String::new();
    let _ = writeln!(
        buf,
        "wgmesh 1 {} {} {}",
        mesh.num_vertices(),
        mesh.num_edges(),
        mesh.num_cells()
    );
    for p in &mesh.vertices {
        let _ = writeln!(buf, "{} {}", p[0], p[1]);
    }
    for e in &mesh.edges {
        let _ = writeln!(buf, "{} {} {}", e.v[0], e.v[1], u8::from(e.boundary));
    }
    for c in &mesh.cells {
        let _ = writeln!(buf, "{} {} {}", c[0], c[1], c[2]);
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

/// Reads the `wgmesh 1` format. The edge section must agree with the edges
/// implied by the cells (numbering and boundary flags).
pub fn read_mesh<R: BufRead>(input: R) -> Result<Mesh> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));

    let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l.split_whitespace().map(str::to_owned).collect())),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(WgError::Parse {
                line: 0,
                msg: format!("unexpected end of input, expected {what}"),
            }),
        }
    };
    fn field<T: std::str::FromStr>(line: usize, tok: &[String], i: usize) -> Result<T> {
        tok.get(i)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| WgError::Parse {
                line,
                msg: format!("bad or missing field {}", i + 1),
            })
    }

    let (ln, header) = next("header")?;
    if header.len() != 5 || header[0] != "wgmesh" || header[1] != "1" {
        return Err(WgError::Parse {
            line: ln,
            msg: "expected `wgmesh 1 <V> <E> <F>`".into(),
        });
    }
    let nv: usize = field(ln, &header, 2)?;
    let ne: usize = field(ln, &header, 3)?;
    let nf: usize = field(ln, &header, 4)?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, tok) = next("vertex")?;
        vertices.push([field(ln, &tok, 0)?, field(ln, &tok, 1)?]);
    }
    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, tok) = next("edge")?;
        let flag: u8 = field(ln, &tok, 2)?;
        edges.push((ln, [field(ln, &tok, 0)?, field(ln, &tok, 1)?], flag != 0));
    }
    let mut cells = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, tok) = next("cell")?;
        cells.push([
            field(ln, &tok, 0)?,
            field(ln, &tok, 1)?,
            field(ln, &tok, 2)?,
        ]);
    }

    let mesh = Mesh::from_cells(vertices, cells, 0)?;
    if mesh.num_edges() != ne {
        return Err(WgError::InvalidMesh(format!(
            "header declares {ne} edges, cells imply {}",
            mesh.num_edges()
        )));
    }
    for (e, (ln, v, boundary)) in edges.into_iter().enumerate() {
        let actual = mesh.edges[e];
        if actual.v != v || actual.boundary != boundary {
            return Err(WgError::Parse {
                line: ln,
                msg: format!(
                    "edge {e} should be {:?} (boundary {})",
                    actual.v, actual.boundary
                ),
            });
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_triangle_counts() {
        let m = build_initial_mesh(InitialPattern::TwoTriangle, 1);
        assert_eq!((m.num_vertices(), m.num_edges(), m.num_cells()), (4, 5, 2));
        assert_eq!(m.num_interior_edges(), 1);
        m.check_invariants().unwrap();
    }

    #[test]
    fn criss_cross_counts() {
        let m = build_initial_mesh(InitialPattern::CrissCross, 1);
        assert_eq!((m.num_vertices(), m.num_edges(), m.num_cells()), (5, 8, 4));
        let m = build_initial_mesh(InitialPattern::CrissCross, 2);
        assert_eq!(
            (m.num_vertices(), m.num_edges(), m.num_cells()),
            (13, 28, 16)
        );
        assert_eq!(m.euler_characteristic(), 1);
        m.check_invariants().unwrap();
    }

    #[test]
    fn edges_are_lexicographic() {
        let m = build_initial_mesh(InitialPattern::CrissCross, 2);
        for w in m.edges.windows(2) {
            assert!(w[0].v < w[1].v);
        }
        assert!(m.edges.iter().all(|e| e.v[0] < e.v[1]));
    }

    #[test]
    fn refine_two_triangle() {
        let m = refine_uniform(&build_initial_mesh(InitialPattern::TwoTriangle, 1));
        assert_eq!((m.num_vertices(), m.num_edges(), m.num_cells()), (9, 16, 8));
        assert_eq!(m.level, 1);
        assert_eq!(m.cell_parent.as_ref().unwrap().len(), 8);
        m.check_invariants().unwrap();
    }

    #[test]
    fn refine_five_times() {
        let h = MeshHierarchy::new(build_initial_mesh(InitialPattern::TwoTriangle, 1), 5);
        assert_eq!(h.finest().num_cells(), 2048);
        assert_eq!(h.finest().level, 5);
    }

    #[test]
    fn refinement_halves_h() {
        let m0 = build_initial_mesh(InitialPattern::CrissCross, 2);
        let m1 = refine_uniform(&m0);
        assert_eq!(m1.h(), 0.5 * m0.h());
        assert_eq!(m1.min_cell_diameter(), 0.5 * m0.min_cell_diameter());
    }

    #[test]
    fn reference_geometry() {
        let g = cell_geometry_of([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(g.area, 0.5);
        assert!((g.h - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.jacobian, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(g.det(), 2.0 * g.area);
        let s = 0.5f64.sqrt();
        assert!((g.outward_normals[0][0] - s).abs() < 1e-15);
        assert!((g.outward_normals[0][1] - s).abs() < 1e-15);
        assert!((g.edge_lengths[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.outward_normals[1], [-1.0, 0.0]);
        assert_eq!(g.outward_normals[2], [0.0, -1.0]);
    }

    #[test]
    fn scaled_geometry() {
        let s = 0.3;
        let g = cell_geometry_of([[0.0, 0.0], [1.0, 0.0], [0.2, 0.9]]).unwrap();
        let gs = cell_geometry_of([[0.0, 0.0], [s, 0.0], [0.2 * s, 0.9 * s]]).unwrap();
        assert!((gs.h - s * g.h).abs() < 1e-15);
        assert!((gs.area - s * s * g.area).abs() < 1e-15);
    }

    #[test]
    fn degenerate_cell_is_rejected() {
        assert!(cell_geometry_of([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_none());
        let err = Mesh::from_cells(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]], 0);
        assert!(matches!(err, Err(WgError::InvalidMesh(_))));
    }

    #[test]
    fn vertex_patches() {
        let m = build_initial_mesh(InitialPattern::TwoTriangle, 1);
        assert_eq!(m.vertex_patch(0), &[0, 1]);
        assert_eq!(m.vertex_patch(2), &[0, 1]);
        assert_eq!(m.vertex_patch(1), &[0]);

        let m = build_initial_mesh(InitialPattern::CrissCross, 1);
        assert_eq!(m.vertex_patch(4).len(), 4);
        // Each corner of the square touches the two triangles on its sides.
        for corner in 0..4 {
            assert_eq!(m.vertex_patch(corner).len(), 2);
        }
    }

    #[test]
    fn coefficient_validation() {
        assert!(CoefficientField::identity(3).validate(3).is_ok());
        assert!(CoefficientField::identity(3).validate(2).is_err());
        let bad = CoefficientField::constant(2, [1.0, 2.0, 1.0]);
        assert!(matches!(
            bad.validate(2),
            Err(WgError::NonSpdCoefficient { cell: 0 })
        ));
    }

    #[test]
    fn mesh_file_round_trip() {
        let m = refine_uniform(&build_initial_mesh(InitialPattern::CrissCross, 3));
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.edges, m.edges);
        assert_eq!(back.cells, m.cells);
        let mut again = Vec::new();
        write_mesh(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn mesh_file_rejects_bad_edges() {
        let text = "wgmesh 1 3 3 1\n0 0\n1 0\n0 1\n0 1 1\n0 2 0\n1 2 1\n0 1 2\n";
        assert!(matches!(
            read_mesh(text.as_bytes()),
            Err(WgError::Parse { line: 6, .. })
        ));
        let text = "wgmesh 2 3 3 1\n";
        assert!(read_mesh(text.as_bytes()).is_err());
    }
}
