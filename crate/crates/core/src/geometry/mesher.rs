//! Shell mesher: a cubed-sphere surface lattice swept radially from the
//! obstacle surface to the truncation sphere.
//!
//! Each surface quad is split into two triangles, each triangle swept
//! through one radial layer gives a prism, and each prism is cut into three
//! tetrahedra. The prism cut joins the bottom copy of the lower-numbered
//! surface vertex to the top copy of the higher-numbered one on every side
//! face, so neighbouring prisms always agree.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use super::mesh::tet_signed_volume;
use super::{BoundaryFacet, ExteriorMesh, FacetTag, Vec3};
use crate::error::{Error, Result};

/// Obstacle geometry understood by the mesher. All shapes must be
/// star-shaped with respect to the origin.
#[derive(Debug, Clone)]
pub enum ObstacleShape {
    Sphere { radius: f64 },
    /// Axis-aligned box centred at the origin.
    Box { half_extents: [f64; 3] },
    Polyhedron(Polyhedron),
}

/// Closed triangulated surface, read from the `polyhedron 1` text format
/// (`v x y z` and `t i j k` records, 0-based).
#[derive(Debug, Clone)]
pub struct Polyhedron {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
}

impl Polyhedron {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.len() < 4 {
            return Err(Error::InfeasibleGeometry(
                "polyhedron needs at least four triangles".into(),
            ));
        }
        if triangles.iter().flatten().any(|&i| i >= vertices.len()) {
            return Err(Error::InfeasibleGeometry(
                "polyhedron triangle references a missing vertex".into(),
            ));
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut header = false;
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let err = |m: &str| Error::Parse {
                line: idx + 1,
                message: m.to_string(),
            };
            if !header {
                if fields == ["polyhedron", "1"] {
                    header = true;
                    continue;
                }
                return Err(err("expected header `polyhedron 1`"));
            }
            match (fields[0], fields.len()) {
                ("v", 4) => {
                    let mut p = [0.0; 3];
                    for (o, f) in p.iter_mut().zip(&fields[1..]) {
                        *o = f.parse().map_err(|_| err("invalid coordinate"))?;
                    }
                    vertices.push(Vec3::new(p[0], p[1], p[2]));
                }
                ("t", 4) => {
                    let mut t = [0usize; 3];
                    for (o, f) in t.iter_mut().zip(&fields[1..]) {
                        *o = f.parse().map_err(|_| err("invalid index"))?;
                    }
                    triangles.push(t);
                }
                _ => return Err(err("expected `v x y z` or `t i j k`")),
            }
        }
        if !header {
            return Err(Error::Parse {
                line: 1,
                message: "empty input: missing header `polyhedron 1`".into(),
            });
        }
        Self::new(vertices, triangles)
    }

    pub fn circumradius(&self) -> f64 {
        self.vertices.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Distance from the origin to the surface along the unit direction `d`.
    fn radial_distance(&self, d: &Vec3) -> Result<f64> {
        let mut hits: Vec<f64> = Vec::new();
        for tri in &self.triangles {
            let [a, b, c] = tri.map(|i| self.vertices[i]);
            if let Some(t) = ray_triangle(d, &a, &b, &c) {
                hits.push(t);
            }
        }
        hits.sort_by(|a, b| a.total_cmp(b));
        hits.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1.0));
        match hits.as_slice() {
            [t] => Ok(*t),
            [] => Err(Error::InfeasibleGeometry(
                "polyhedron does not enclose the origin".into(),
            )),
            _ => Err(Error::InfeasibleGeometry(
                "polyhedron is not star-shaped about the origin".into(),
            )),
        }
    }
}

fn ray_triangle(d: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 * e1.norm() * e2.norm() {
        return None;
    }
    let s = -a;
    let u = s.dot(&p) / det;
    let tol = 1e-10;
    if u < -tol || u > 1.0 + tol {
        return None;
    }
    let q = s.cross(&e1);
    let v = d.dot(&q) / det;
    if v < -tol || u + v > 1.0 + tol {
        return None;
    }
    let t = e2.dot(&q) / det;
    (t > 0.0).then_some(t)
}

impl ObstacleShape {
    pub fn circumradius(&self) -> f64 {
        match self {
            ObstacleShape::Sphere { radius } => *radius,
            ObstacleShape::Box { half_extents } => {
                half_extents.iter().map(|h| h * h).sum::<f64>().sqrt()
            }
            ObstacleShape::Polyhedron(p) => p.circumradius(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            ObstacleShape::Sphere { radius } => *radius > 0.0,
            ObstacleShape::Box { half_extents } => half_extents.iter().all(|&h| h > 0.0),
            ObstacleShape::Polyhedron(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InfeasibleGeometry(format!(
                "obstacle dimensions must be positive: {self:?}"
            )))
        }
    }

    /// Surface point for a lattice node on the boundary of [0, n]^3, plus
    /// the unit direction it defines.
    fn surface_point(&self, lattice: &[i64; 3], n: i64) -> Result<(Vec3, Vec3)> {
        match self {
            ObstacleShape::Box { half_extents } => {
                let c = equiangular(lattice, n).component_mul(&Vec3::from(*half_extents));
                Ok((c, c.normalize()))
            }
            ObstacleShape::Sphere { radius } => {
                let d = equiangular(lattice, n).normalize();
                Ok((d * *radius, d))
            }
            ObstacleShape::Polyhedron(p) => {
                let d = equiangular(lattice, n).normalize();
                Ok((d * p.radial_distance(&d)?, d))
            }
        }
    }
}

/// Lattice index in [0, n] to [-1, 1].
fn uniform(i: i64, n: i64) -> f64 {
    (2 * i - n) as f64 / n as f64
}

fn equiangular(lattice: &[i64; 3], n: i64) -> Vec3 {
    let t = |i: i64| {
        if i == n {
            1.0
        } else if i == 0 {
            -1.0
        } else {
            (FRAC_PI_4 * uniform(i, n)).tan()
        }
    };
    Vec3::new(t(lattice[0]), t(lattice[1]), t(lattice[2]))
}

/// Spacing of the radial layers between obstacle and truncation sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadialGrading {
    /// Layers of thickness <= h.
    #[default]
    Uniform,
    /// Layer thickness grows with radius so cells keep their aspect ratio.
    Geometric,
}

#[derive(Debug, Clone, Default)]
pub struct MesherOptions {
    /// Radius at which the tangential cell size equals h; defaults to the
    /// radius bound R.
    pub angular_reference_radius: Option<f64>,
    pub radial_grading: RadialGrading,
}

/// Mesh the region between `obstacle` and |x| = `truncation_radius`.
pub fn build_exterior_mesh(
    obstacle: &ObstacleShape,
    radius_bound: f64,
    truncation_radius: f64,
    h: f64,
) -> Result<ExteriorMesh> {
    build_exterior_mesh_with(
        obstacle,
        radius_bound,
        truncation_radius,
        h,
        &MesherOptions::default(),
    )
}

pub fn build_exterior_mesh_with(
    obstacle: &ObstacleShape,
    radius_bound: f64,
    truncation_radius: f64,
    h: f64,
    options: &MesherOptions,
) -> Result<ExteriorMesh> {
    obstacle.validate()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("mesh size must be positive, got {h}")));
    }
    let circ = obstacle.circumradius();
    if !(circ < radius_bound && radius_bound < truncation_radius) {
        return Err(Error::InfeasibleGeometry(format!(
            "need obstacle circumradius < R < rho, got {circ} / {radius_bound} / {truncation_radius}"
        )));
    }
    let r_ref = options.angular_reference_radius.unwrap_or(radius_bound);
    // Angular step at most h / 2 radians bounds the chordal volume loss
    // at the truncation sphere.
    let n = ((std::f64::consts::FRAC_PI_2 * r_ref / h).ceil() as i64)
        .max((std::f64::consts::PI / h).ceil() as i64)
        .max(2);

    // Surface lattice on the boundary of the cube [0, n]^3, n cells per
    // face edge.
    let mut ids: HashMap<[i64; 3], usize> = HashMap::new();
    let mut lattice: Vec<[i64; 3]> = Vec::new();
    let mut id_of = |p: [i64; 3]| {
        *ids.entry(p).or_insert_with(|| {
            lattice.push(p);
            lattice.len() - 1
        })
    };
    let mut quads: Vec<[usize; 4]> = Vec::new();
    for axis in 0..3 {
        let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            for i in 0..n {
                for j in 0..n {
                    let at = |di: i64, dj: i64| {
                        let mut p = [0i64; 3];
                        p[axis] = side;
                        p[b] = i + di;
                        p[c] = j + dj;
                        p
                    };
                    quads.push([id_of(at(0, 0)), id_of(at(1, 0)), id_of(at(1, 1)), id_of(at(0, 1))]);
                }
            }
        }
    }
    let surface: Vec<(Vec3, Vec3)> = lattice
        .iter()
        .map(|p| obstacle.surface_point(p, n))
        .collect::<Result<_>>()?;
    let ns = surface.len();

    let mut triangles: Vec<[usize; 3]> = Vec::with_capacity(2 * quads.len());
    for q in &quads {
        let d = q.map(|v| surface[v].1);
        if (d[0] - d[2]).norm() <= (d[1] - d[3]).norm() {
            triangles.push([q[0], q[1], q[2]]);
            triangles.push([q[0], q[2], q[3]]);
        } else {
            triangles.push([q[0], q[1], q[3]]);
            triangles.push([q[1], q[2], q[3]]);
        }
    }

    let rho = truncation_radius;
    let r_min = surface.iter().map(|(p, _)| p.norm()).fold(f64::INFINITY, f64::min);
    let layers = match options.radial_grading {
        RadialGrading::Uniform => ((rho - r_min) / h).ceil() as usize,
        RadialGrading::Geometric => {
            let growth = 1.0 + h / r_ref;
            ((rho / r_min).ln() / growth.ln()).ceil() as usize
        }
    }
    .max(1);

    let mut vertices = Vec::with_capacity(ns * (layers + 1));
    for l in 0..=layers {
        let t = l as f64 / layers as f64;
        for (p_in, d) in &surface {
            let r_in = p_in.norm();
            let p = if l == 0 {
                *p_in
            } else if l == layers {
                d * rho
            } else {
                let r = match options.radial_grading {
                    RadialGrading::Uniform => r_in + (rho - r_in) * t,
                    RadialGrading::Geometric => r_in * (rho / r_in).powf(t),
                };
                d * r
            };
            vertices.push(p);
        }
    }

    let mut cells = Vec::with_capacity(3 * triangles.len() * layers);
    let tiny = 1e-12 * h * h * h;
    for l in 0..layers {
        for tri in &triangles {
            let mut s = *tri;
            s.sort_unstable();
            let a = s.map(|v| l * ns + v);
            let b = s.map(|v| (l + 1) * ns + v);
            for mut tet in [[a[0], a[1], a[2], b[2]], [a[0], a[1], b[1], b[2]], [a[0], b[0], b[1], b[2]]] {
                let vol = tet_signed_volume(
                    &vertices[tet[0]],
                    &vertices[tet[1]],
                    &vertices[tet[2]],
                    &vertices[tet[3]],
                );
                if vol < 0.0 {
                    tet.swap(2, 3);
                }
                if vol.abs() <= tiny {
                    return Err(Error::DegenerateCell {
                        index: cells.len(),
                        volume: vol,
                    });
                }
                cells.push(tet);
            }
        }
    }

    let mut facets = Vec::with_capacity(2 * triangles.len());
    for tri in &triangles {
        facets.push(BoundaryFacet {
            vertices: *tri,
            tag: FacetTag::Obstacle,
        });
    }
    for tri in &triangles {
        facets.push(BoundaryFacet {
            vertices: tri.map(|v| layers * ns + v),
            tag: FacetTag::Outer,
        });
    }
    ExteriorMesh::new(vertices, cells, facets, radius_bound, truncation_radius, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sphere_mesh_is_valid() {
        let mesh = build_exterior_mesh(&ObstacleShape::Sphere { radius: 1.0 }, 2.0, 3.0, 0.8).unwrap();
        assert!(mesh.num_cells() > 0);
        mesh.validate().unwrap();
    }

    #[test]
    fn box_faces_are_resolved_exactly() {
        let shape = ObstacleShape::Box {
            half_extents: [0.5, 0.7, 0.4],
        };
        let mesh = build_exterior_mesh(&shape, 1.5, 3.0, 0.5).unwrap();
        for f in mesh.facets_tagged(FacetTag::Obstacle) {
            let p = f.vertices.map(|v| mesh.vertices()[v]);
            let on_face = (0..3).any(|ax| {
                let e = [0.5, 0.7, 0.4][ax];
                p.iter().all(|q| (q[ax].abs() - e).abs() < 1e-12)
                    && (p[0][ax] * p[1][ax] > 0.0 && p[1][ax] * p[2][ax] > 0.0)
            });
            assert!(on_face, "facet off the box surface: {p:?}");
        }
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 27.0 - 8.0 * 0.5 * 0.7 * 0.4;
        let rel = (mesh.total_volume() - exact).abs() / exact;
        assert!(rel < 0.03, "{rel} {} {exact}", mesh.total_volume());
    }

    #[test]
    fn polyhedron_octahedron() {
        let text = "polyhedron 1\n\
            v 1 0 0\nv -1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nv 0 0 -1\n\
            t 0 2 4\nt 2 1 4\nt 1 3 4\nt 3 0 4\nt 2 0 5\nt 1 2 5\nt 3 1 5\nt 0 3 5\n";
        let poly = Polyhedron::from_text(text).unwrap();
        let mesh = build_exterior_mesh(&ObstacleShape::Polyhedron(poly), 1.5, 3.0, 0.6).unwrap();
        for f in mesh.facets_tagged(FacetTag::Obstacle) {
            for v in f.vertices {
                let p = mesh.vertices()[v];
                assert!((p.x.abs() + p.y.abs() + p.z.abs() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn infeasible_and_bad_size() {
        let s = ObstacleShape::Sphere { radius: 3.0 };
        assert!(matches!(
            build_exterior_mesh(&s, 2.0, 6.0, 0.5),
            Err(Error::InfeasibleGeometry(_))
        ));
        let s = ObstacleShape::Sphere { radius: 1.0 };
        assert!(build_exterior_mesh(&s, 2.0, 6.0, 0.0).is_err());
        assert!(build_exterior_mesh(&s, 2.0, 1.5, 0.5).is_err());
    }
}
