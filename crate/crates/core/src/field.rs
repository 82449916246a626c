//! Complex nodal fields and the sampling interface shared by the checks.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{ExteriorMesh, Vec3};

pub type C64 = Complex64;
pub type CVec3 = nalgebra::Vector3<C64>;

/// Anything that can report a complex value and gradient at a point.
pub trait FieldSampler: Sync {
    fn sample(&self, x: &Vec3) -> Result<(C64, CVec3)>;

    fn value(&self, x: &Vec3) -> Result<C64> {
        Ok(self.sample(x)?.0)
    }

    /// Absorption parameter of the problem the field solves.
    fn absorption(&self) -> f64 {
        0.0
    }
}

/// Continuous P1 function on a mesh, one value per vertex.
#[derive(Debug, Clone)]
pub struct ComplexField {
    mesh: Arc<ExteriorMesh>,
    values: Vec<C64>,
}

impl ComplexField {
    pub fn new(mesh: Arc<ExteriorMesh>, values: Vec<C64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_vertices(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field has non-finite nodal values".into()));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Arc<ExteriorMesh>) -> Self {
        let n = mesh.num_vertices();
        Self {
            mesh,
            values: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<ExteriorMesh>, f: impl Fn(&Vec3) -> C64) -> Self {
        let values = mesh.vertices().iter().map(f).collect();
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<ExteriorMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn conj(&self) -> Self {
        Self {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// `self + alpha * other` on the same mesh.
    pub fn axpy(&self, alpha: C64, other: &ComplexField) -> Result<Self> {
        if !Arc::ptr_eq(&self.mesh, &other.mesh) && self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(Self {
            mesh: self.mesh.clone(),
            values,
        })
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Constant gradient of the interpolant inside cell `c`.
    pub fn cell_gradient(&self, c: usize) -> CVec3 {
        let (grads, _) = self.mesh.barycentric_gradients(c);
        let cell = self.mesh.cells()[c];
        let mut g = CVec3::zeros();
        for (v, grad) in cell.iter().zip(&grads) {
            g += grad.map(|x| C64::new(x, 0.0)) * self.values[*v];
        }
        g
    }

    pub fn eval_in_cell(&self, c: usize, bary: &[f64; 4]) -> C64 {
        let cell = self.mesh.cells()[c];
        cell.iter().zip(bary).map(|(v, b)| self.values[*v] * *b).sum()
    }

    pub fn try_eval(&self, x: &Vec3) -> Option<C64> {
        let (c, bary) = self.mesh.locate(x)?;
        Some(self.eval_in_cell(c, &bary))
    }

    /// `field 1` artifact: header, mesh reference, then `dof re im` lines.
    pub fn to_text(&self, mesh_ref: &str) -> String {
        let mut s = format!("field 1\nmesh {mesh_ref}\nvertices {}\n", self.values.len());
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{i} {} {}\n", v.re, v.im));
        }
        s
    }
}

/// Parse a `field 1` artifact into its mesh reference and nodal values.
pub fn parse_field(text: &str) -> Result<(String, Vec<C64>)> {
    let err = |line: usize, message: &str| Error::Parse {
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == "field 1" => {}
        _ => return Err(err(1, "expected header `field 1`")),
    }
    let (n, l) = lines.next().ok_or_else(|| err(2, "missing mesh reference"))?;
    let mesh_ref = l
        .trim()
        .strip_prefix("mesh ")
        .ok_or_else(|| err(n + 1, "expected `mesh <ref>`"))?
        .to_string();
    let (n, l) = lines.next().ok_or_else(|| err(3, "missing vertex count"))?;
    let count: usize = l
        .trim()
        .strip_prefix("vertices ")
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| err(n + 1, "expected `vertices <count>`"))?;
    let mut values = vec![C64::new(0.0, 0.0); count];
    let mut seen = vec![false; count];
    for (n, l) in lines {
        let parts: Vec<&str> = l.split_whitespace().collect();
        let parsed = match parts.as_slice() {
            [i, re, im] => i.parse::<usize>().ok().zip(re.parse::<f64>().ok()).zip(im.parse::<f64>().ok()),
            _ => None,
        };
        let ((i, re), im) = parsed.ok_or_else(|| err(n + 1, "expected `dof re im`"))?;
        if i >= count || seen[i] {
            return Err(err(n + 1, &format!("dof {i} out of range or repeated")));
        }
        seen[i] = true;
        values[i] = C64::new(re, im);
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(err(text.lines().count(), &format!("dof {i} missing")));
    }
    Ok((mesh_ref, values))
}

impl FieldSampler for ComplexField {
    fn sample(&self, x: &Vec3) -> Result<(C64, CVec3)> {
        let (c, bary) = self.mesh.locate(x).ok_or(Error::OutsideMesh {
            x: x.x,
            y: x.y,
            z: x.z,
        })?;
        Ok((self.eval_in_cell(c, &bary), self.cell_gradient(c)))
    }
}

/// Closed-form field given by a closure returning value and gradient.
pub struct AnalyticField<F>(pub F);

impl<F> FieldSampler for AnalyticField<F>
where
    F: Fn(&Vec3) -> (C64, CVec3) + Sync,
{
    fn sample(&self, x: &Vec3) -> Result<(C64, CVec3)> {
        Ok((self.0)(x))
    }
}

/// Lift a real vector into a complex one.
pub fn complexify(v: &Vec3) -> CVec3 {
    v.map(|x| C64::new(x, 0.0))
}

/// Bilinear (non-conjugating) product of a real and a complex vector.
pub fn rdot(a: &Vec3, b: &CVec3) -> C64 {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_exterior_mesh, ObstacleShape};

    #[test]
    fn linear_functions_are_reproduced() {
        let mesh = Arc::new(
            build_exterior_mesh(&ObstacleShape::Sphere { radius: 1.0 }, 2.0, 3.0, 0.6).unwrap(),
        );
        let f = |x: &Vec3| C64::new(1.0 + 2.0 * x.x - x.z, 0.5 * x.y);
        let field = ComplexField::interpolate(mesh, f);
        for x in [Vec3::new(1.5, 0.3, -0.2), Vec3::new(-0.4, 2.2, 1.0)] {
            let (v, g) = field.sample(&x).unwrap();
            assert!((v - f(&x)).norm() < 1e-12);
            assert!((g - CVec3::new(C64::new(2.0, 0.0), C64::new(0.0, 0.5), C64::new(-1.0, 0.0))).norm() < 1e-10);
        }
        assert!(matches!(
            field.sample(&Vec3::new(0.1, 0.0, 0.0)),
            Err(Error::OutsideMesh { .. })
        ));
        let text = field.to_text("mesh.txt");
        let (mesh_ref, values) = parse_field(&text).unwrap();
        assert_eq!(mesh_ref, "mesh.txt");
        assert_eq!(values, field.values());
        assert!(parse_field("field 2\n").is_err());
        assert!(parse_field("field 1\nmesh m\nvertices 2\n0 1 0\n").is_err());
    }
}
