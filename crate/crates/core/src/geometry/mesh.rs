use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use serde::Serialize;

use super::{PointLocator, Vec3};
use crate::error::{Error, Result};

const OUTER_RADIUS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FacetTag {
    Obstacle,
    Outer,
}

impl FacetTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            FacetTag::Obstacle => "obstacle",
            FacetTag::Outer => "outer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFacet {
    pub vertices: [usize; 3],
    pub tag: FacetTag,
}

/// Summary numbers for `mesh-info` style reporting.
#[derive(Debug, Clone, Serialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub cells: usize,
    pub obstacle_facets: usize,
    pub outer_facets: usize,
    pub volume: f64,
    pub obstacle_circumradius: f64,
    pub radius_bound: f64,
    pub truncation_radius: f64,
    pub mesh_size: f64,
    pub max_edge: f64,
}

/// Tetrahedral mesh of the truncated exterior region between the obstacle
/// and the sphere |x| = rho. Immutable once constructed.
#[derive(Debug)]
pub struct ExteriorMesh {
    vertices: Vec<Vec3>,
    cells: Vec<[usize; 4]>,
    facets: Vec<BoundaryFacet>,
    radius_bound: f64,
    truncation_radius: f64,
    mesh_size: f64,
    locator: OnceLock<PointLocator>,
}

impl Clone for ExteriorMesh {
    fn clone(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            cells: self.cells.clone(),
            facets: self.facets.clone(),
            radius_bound: self.radius_bound,
            truncation_radius: self.truncation_radius,
            mesh_size: self.mesh_size,
            locator: OnceLock::new(),
        }
    }
}

impl ExteriorMesh {
    /// Assemble a mesh from raw parts and check every invariant.
    pub fn new(
        vertices: Vec<Vec3>,
        cells: Vec<[usize; 4]>,
        facets: Vec<BoundaryFacet>,
        radius_bound: f64,
        truncation_radius: f64,
        mesh_size: f64,
    ) -> Result<Self> {
        let mesh = Self {
            vertices,
            cells,
            facets,
            radius_bound,
            truncation_radius,
            mesh_size,
            locator: OnceLock::new(),
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn facets(&self) -> &[BoundaryFacet] {
        &self.facets
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Radius R of a ball containing the obstacle.
    pub fn radius_bound(&self) -> f64 {
        self.radius_bound
    }

    /// Radius rho of the outer truncation sphere.
    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn mesh_size(&self) -> f64 {
        self.mesh_size
    }

    pub fn facets_tagged(&self, tag: FacetTag) -> impl Iterator<Item = &BoundaryFacet> {
        self.facets.iter().filter(move |f| f.tag == tag)
    }

    pub fn cell_points(&self, c: usize) -> [Vec3; 4] {
        self.cells[c].map(|i| self.vertices[i])
    }

    pub fn signed_volume(&self, c: usize) -> f64 {
        let [p0, p1, p2, p3] = self.cell_points(c);
        tet_signed_volume(&p0, &p1, &p2, &p3)
    }

    /// Gradients of the four barycentric (P1 hat) functions and the volume.
    pub fn barycentric_gradients(&self, c: usize) -> ([Vec3; 4], f64) {
        tet_gradients(&self.cell_points(c))
    }

    pub fn facet_area(&self, f: &BoundaryFacet) -> f64 {
        let [a, b, c] = f.vertices.map(|i| self.vertices[i]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.cells.len()).map(|c| self.signed_volume(c)).sum()
    }

    pub fn obstacle_circumradius(&self) -> f64 {
        self.facets_tagged(FacetTag::Obstacle)
            .flat_map(|f| f.vertices)
            .map(|i| self.vertices[i].norm())
            .fold(0.0, f64::max)
    }

    /// Per-vertex flag: true when the vertex lies on a facet with `tag`.
    pub fn boundary_vertex_mask(&self, tag: FacetTag) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for f in self.facets_tagged(tag) {
            for &v in &f.vertices {
                mask[v] = true;
            }
        }
        mask
    }

    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for cell in &self.cells {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    h = h.max((self.vertices[cell[i]] - self.vertices[cell[j]]).norm());
                }
            }
        }
        h
    }

    pub fn stats(&self) -> MeshStats {
        MeshStats {
            vertices: self.vertices.len(),
            cells: self.cells.len(),
            obstacle_facets: self.facets_tagged(FacetTag::Obstacle).count(),
            outer_facets: self.facets_tagged(FacetTag::Outer).count(),
            volume: self.total_volume(),
            obstacle_circumradius: self.obstacle_circumradius(),
            radius_bound: self.radius_bound,
            truncation_radius: self.truncation_radius,
            mesh_size: self.mesh_size,
            max_edge: self.max_edge_length(),
        }
    }

    pub fn locator(&self) -> &PointLocator {
        self.locator
            .get_or_init(|| PointLocator::new(&self.vertices, &self.cells))
    }

    /// Containing cell and clamped barycentric coordinates of `x`.
    pub fn locate(&self, x: &Vec3) -> Option<(usize, [f64; 4])> {
        self.locator().locate(x)
    }

    /// Check every structural invariant; the first violation is reported.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if nv == 0 || self.cells.is_empty() {
            return Err(invariant("non-empty", "mesh has no vertices or no cells".into()));
        }
        if let Some(i) = self.vertices.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(invariant("finite-coordinates", format!("vertex {i} is not finite")));
        }
        for (c, cell) in self.cells.iter().enumerate() {
            if let Some(&v) = cell.iter().find(|&&v| v >= nv) {
                return Err(invariant("index-range", format!("cell {c} references vertex {v}")));
            }
        }
        for (k, f) in self.facets.iter().enumerate() {
            if let Some(&v) = f.vertices.iter().find(|&&v| v >= nv) {
                return Err(invariant("index-range", format!("facet {k} references vertex {v}")));
            }
        }
        for c in 0..self.cells.len() {
            let vol = self.signed_volume(c);
            if !(vol > 0.0) {
                return Err(invariant(
                    "positive-volume",
                    format!("cell {c} has signed volume {vol:e}"),
                ));
            }
        }
        let circumradius = self.obstacle_circumradius();
        if !(self.truncation_radius > self.radius_bound && self.radius_bound > circumradius) {
            return Err(invariant(
                "radius-ordering",
                format!(
                    "need rho > R > circumradius, got rho = {}, R = {}, circumradius = {}",
                    self.truncation_radius, self.radius_bound, circumradius
                ),
            ));
        }
        let rho = self.truncation_radius;
        for (k, f) in self.facets.iter().enumerate() {
            if f.tag == FacetTag::Outer {
                for &v in &f.vertices {
                    let r = self.vertices[v].norm();
                    if (r - rho).abs() > OUTER_RADIUS_TOL * rho {
                        return Err(invariant(
                            "outer-on-sphere",
                            format!("outer facet {k} vertex {v} has |x| = {r}, rho = {rho}"),
                        ));
                    }
                }
            }
        }
        self.check_watertight()
    }

    fn check_watertight(&self) -> Result<()> {
        let mut faces: HashMap<[usize; 3], u8> = HashMap::with_capacity(self.cells.len() * 3);
        for cell in &self.cells {
            for skip in 0..4 {
                let mut face = [0usize; 3];
                let mut n = 0;
                for (i, &v) in cell.iter().enumerate() {
                    if i != skip {
                        face[n] = v;
                        n += 1;
                    }
                }
                face.sort_unstable();
                *faces.entry(face).or_insert(0) += 1;
            }
        }
        if let Some((face, count)) = faces.iter().find(|(_, &c)| c > 2) {
            return Err(invariant(
                "watertight",
                format!("face {face:?} is shared by {count} cells"),
            ));
        }
        let mut boundary: HashMap<[usize; 3], bool> = faces
            .into_iter()
            .filter(|(_, c)| *c == 1)
            .map(|(f, _)| (f, false))
            .collect();
        let mut edges: HashMap<([usize; 2], FacetTag), u32> = HashMap::new();
        for (k, f) in self.facets.iter().enumerate() {
            let mut key = f.vertices;
            key.sort_unstable();
            match boundary.get_mut(&key) {
                Some(seen) if !*seen => *seen = true,
                Some(_) => {
                    return Err(invariant("watertight", format!("facet {k} is listed twice")));
                }
                None => {
                    return Err(invariant(
                        "watertight",
                        format!("facet {k} is not a boundary face of the cell complex"),
                    ));
                }
            }
            for (a, b) in [(key[0], key[1]), (key[1], key[2]), (key[0], key[2])] {
                *edges.entry(([a, b], f.tag)).or_insert(0) += 1;
            }
        }
        if let Some((face, _)) = boundary.iter().find(|(_, seen)| !**seen) {
            return Err(invariant(
                "watertight",
                format!("boundary face {face:?} carries no facet tag"),
            ));
        }
        if let Some(((edge, tag), count)) = edges.iter().find(|(_, &c)| c != 2) {
            return Err(invariant(
                "watertight",
                format!(
                    "edge {edge:?} is shared by {count} {} facets",
                    tag.as_str()
                ),
            ));
        }
        Ok(())
    }

    /// Serialize to the `tetmesh 1` text format.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(64 * (self.vertices.len() + self.cells.len()));
        s.push_str("tetmesh 1\n");
        let _ = writeln!(
            s,
            "m {} {} {}",
            self.radius_bound, self.truncation_radius, self.mesh_size
        );
        for p in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
        }
        for c in &self.cells {
            let _ = writeln!(s, "c {} {} {} {}", c[0], c[1], c[2], c[3]);
        }
        for f in &self.facets {
            let [i, j, k] = f.vertices;
            let _ = writeln!(s, "f {i} {j} {k} {}", f.tag.as_str());
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Parse the `tetmesh 1` format and validate the result.
    ///
    /// The optional `m R rho h` line carries the radii; without it rho is
    /// the largest outer-facet radius, R the midpoint between the obstacle
    /// circumradius and rho, and h the longest edge.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut header_seen = false;
        let mut meta: Option<(f64, f64, f64)> = None;
        let mut vertices = Vec::new();
        let mut cells = Vec::new();
        let mut facets = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            if !header_seen {
                if key == "tetmesh" && rest == ["1"] {
                    header_seen = true;
                    continue;
                }
                return Err(parse_err(line_no, "expected header `tetmesh 1`"));
            }
            match key {
                "m" => {
                    let v = parse_floats::<3>(&rest, line_no)?;
                    meta = Some((v[0], v[1], v[2]));
                }
                "v" => {
                    let v = parse_floats::<3>(&rest, line_no)?;
                    vertices.push(Vec3::new(v[0], v[1], v[2]));
                }
                "c" => cells.push(parse_indices::<4>(&rest, line_no)?),
                "f" => {
                    if rest.len() != 4 {
                        return Err(parse_err(line_no, "facet line needs `f i j k TAG`"));
                    }
                    let vertices = parse_indices::<3>(&rest[..3], line_no)?;
                    let tag = match rest[3] {
                        "obstacle" => FacetTag::Obstacle,
                        "outer" => FacetTag::Outer,
                        other => {
                            return Err(parse_err(line_no, &format!("unknown facet tag `{other}`")))
                        }
                    };
                    facets.push(BoundaryFacet { vertices, tag });
                }
                other => return Err(parse_err(line_no, &format!("unknown record `{other}`"))),
            }
        }
        if !header_seen {
            return Err(parse_err(1, "empty input: missing header `tetmesh 1`"));
        }
        let (radius_bound, truncation_radius, mesh_size) = match meta {
            Some(m) => m,
            None => infer_radii(&vertices, &cells, &facets),
        };
        Self::new(vertices, cells, facets, radius_bound, truncation_radius, mesh_size)
    }
}

/// Read and validate a mesh file.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<ExteriorMesh> {
    let text = std::fs::read_to_string(path)?;
    ExteriorMesh::from_text(&text)
}

/// Barycentric gradients and signed volume of a tetrahedron.
pub fn tet_gradients(p: &[Vec3; 4]) -> ([Vec3; 4], f64) {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let e3 = p[3] - p[0];
    let det = e1.dot(&e2.cross(&e3));
    let g1 = e2.cross(&e3) / det;
    let g2 = e3.cross(&e1) / det;
    let g3 = e1.cross(&e2) / det;
    let g0 = -(g1 + g2 + g3);
    ([g0, g1, g2, g3], det / 6.0)
}

pub(crate) fn tet_signed_volume(p0: &Vec3, p1: &Vec3, p2: &Vec3, p3: &Vec3) -> f64 {
    (p1 - p0).dot(&(p2 - p0).cross(&(p3 - p0))) / 6.0
}

fn infer_radii(
    vertices: &[Vec3],
    cells: &[[usize; 4]],
    facets: &[BoundaryFacet],
) -> (f64, f64, f64) {
    let radius_of = |tag: FacetTag| {
        facets
            .iter()
            .filter(|f| f.tag == tag)
            .flat_map(|f| f.vertices)
            .filter_map(|v| vertices.get(v))
            .map(|p| p.norm())
            .fold(0.0, f64::max)
    };
    let rho = radius_of(FacetTag::Outer);
    let circ = radius_of(FacetTag::Obstacle);
    let mut h: f64 = 0.0;
    for c in cells {
        for i in 0..4 {
            for j in (i + 1)..4 {
                if let (Some(a), Some(b)) = (vertices.get(c[i]), vertices.get(c[j])) {
                    h = h.max((a - b).norm());
                }
            }
        }
    }
    (0.5 * (circ + rho), rho, h)
}

fn invariant(name: &'static str, detail: String) -> Error {
    Error::MeshInvariant {
        invariant: name,
        detail,
    }
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

fn parse_floats<const N: usize>(fields: &[&str], line: usize) -> Result<[f64; N]> {
    if fields.len() != N {
        return Err(parse_err(line, &format!("expected {N} numbers, found {}", fields.len())));
    }
    let mut out = [0.0; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = f
            .parse()
            .map_err(|_| parse_err(line, &format!("invalid number `{f}`")))?;
    }
    Ok(out)
}

fn parse_indices<const N: usize>(fields: &[&str], line: usize) -> Result<[usize; N]> {
    if fields.len() != N {
        return Err(parse_err(line, &format!("expected {N} indices, found {}", fields.len())));
    }
    let mut out = [0; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = f
            .parse()
            .map_err(|_| parse_err(line, &format!("invalid index `{f}`")))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_is_a_parse_error() {
        match ExteriorMesh::from_text("") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_header_reports_line() {
        match ExteriorMesh::from_text("\n\nmesh 2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_line() {
        let text = "tetmesh 1\nv 0 0 0\nv 1 x 0\n";
        match ExteriorMesh::from_text(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unit_tet_gradients_sum_to_zero() {
        let verts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let mesh = ExteriorMesh {
            vertices: verts,
            cells: vec![[0, 1, 2, 3]],
            facets: vec![],
            radius_bound: 1.0,
            truncation_radius: 2.0,
            mesh_size: 1.0,
            locator: OnceLock::new(),
        };
        let (g, vol) = mesh.barycentric_gradients(0);
        assert!((vol - 1.0 / 6.0).abs() < 1e-15);
        assert!((g[0] + g[1] + g[2] + g[3]).norm() < 1e-15);
        assert_eq!(g[1], Vec3::new(1.0, 0.0, 0.0));
    }
}
