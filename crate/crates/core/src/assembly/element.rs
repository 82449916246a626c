//! Local P1 element matrices on tetrahedra and boundary triangles.

use nalgebra::Matrix3;

use crate::geometry::Vec3;
use crate::quadrature::{TET4_BARYCENTRIC, TRI3_BARYCENTRIC};

pub type Local4 = [[f64; 4]; 4];
pub type Local3 = [[f64; 3]; 3];

/// Cartesian points of the 4-point tetrahedron rule.
pub fn tet_points(p: &[Vec3; 4]) -> [Vec3; 4] {
    TET4_BARYCENTRIC.map(|b| p[0] * b[0] + p[1] * b[1] + p[2] * b[2] + p[3] * b[3])
}

pub fn tri_points(p: &[Vec3; 3]) -> [Vec3; 3] {
    TRI3_BARYCENTRIC.map(|b| p[0] * b[0] + p[1] * b[1] + p[2] * b[2])
}

/// vol * grad(l_i)^T a grad(l_j) for a cell-averaged tensor `a`.
pub fn stiffness(grads: &[Vec3; 4], volume: f64, a: &Matrix3<f64>) -> Local4 {
    let mut k = [[0.0; 4]; 4];
    for i in 0..4 {
        let ag = a * grads[i];
        for j in 0..4 {
            k[i][j] = volume * ag.dot(&grads[j]);
        }
    }
    k
}

/// Exact P1 mass matrix.
pub fn mass(volume: f64) -> Local4 {
    let mut m = [[volume / 20.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = volume / 10.0;
    }
    m
}

/// Weighted mass with the 4-point rule; `w` holds the weight at the rule's
/// points.
pub fn weighted_mass(volume: f64, w: &[f64; 4]) -> Local4 {
    let mut m = [[0.0; 4]; 4];
    for (b, wp) in TET4_BARYCENTRIC.iter().zip(w) {
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] += volume / 4.0 * wp * b[i] * b[j];
            }
        }
    }
    m
}

/// Weighted boundary mass with the edge-midpoint rule, which is exact for
/// constant weights.
pub fn weighted_surface_mass(area: f64, w: &[f64; 3]) -> Local3 {
    let mut m = [[0.0; 3]; 3];
    for (b, wp) in TRI3_BARYCENTRIC.iter().zip(w) {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += area / 3.0 * wp * b[i] * b[j];
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tet_gradients;

    #[test]
    fn reference_tet_stiffness() {
        // Classical P1 stiffness on the unit corner tetrahedron.
        let (g, vol) = tet_gradients(&[Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()]);
        let k = stiffness(&g, vol, &Matrix3::identity());
        let expected = [
            [0.5, -1.0 / 6.0, -1.0 / 6.0, -1.0 / 6.0],
            [-1.0 / 6.0, 1.0 / 6.0, 0.0, 0.0],
            [-1.0 / 6.0, 0.0, 1.0 / 6.0, 0.0],
            [-1.0 / 6.0, 0.0, 0.0, 1.0 / 6.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((k[i][j] - expected[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rules_reproduce_exact_mass() {
        let m = mass(0.3);
        let mq = weighted_mass(0.3, &[1.0; 4]);
        let total: f64 = m.iter().flatten().sum();
        assert!((total - 0.3).abs() < 1e-15);
        for i in 0..4 {
            for j in 0..4 {
                assert!((m[i][j] - mq[i][j]).abs() < 1e-15);
            }
        }
        let s = weighted_surface_mass(0.6, &[1.0; 3]);
        assert!((s[0][0] - 0.1).abs() < 1e-15 && (s[0][1] - 0.05).abs() < 1e-15);
    }
}
