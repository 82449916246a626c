use std::f64::consts::PI;

use super::Vec3;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Product quadrature on the sphere |x| = r.
#[derive(Debug, Clone)]
pub struct SurfaceQuadrature {
    radius: f64,
    order: usize,
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
}

impl SurfaceQuadrature {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Outward unit normal at node `i`.
    pub fn normal(&self, i: usize) -> Vec3 {
        self.nodes[i] / self.radius
    }

    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        T: std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
        F: FnMut(&Vec3) -> T,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, &w)| f(x) * w)
            .sum()
    }
}

/// Gauss-Legendre in cos(theta) times the trapezoidal rule in phi; exact
/// for spherical harmonics of degree <= `order`.
pub fn sphere_quadrature(r: f64, order: usize) -> Result<SurfaceQuadrature> {
    if !(r > 0.0 && r.is_finite()) || order == 0 {
        return Err(Error::InvalidArgument(format!(
            "sphere quadrature needs r > 0 and order >= 1 (r = {r}, order = {order})"
        )));
    }
    let n_theta = order / 2 + 1;
    let n_phi = order + 1;
    let (u, wu) = gauss_legendre(n_theta);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    for (&ct, &w) in u.iter().zip(&wu) {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        for j in 0..n_phi {
            // half-step offset keeps nodes off the coordinate planes
            let phi = (j as f64 + 0.5) * dphi;
            nodes.push(Vec3::new(r * st * phi.cos(), r * st * phi.sin(), r * ct));
            weights.push(r * r * w * dphi);
        }
    }
    Ok(SurfaceQuadrature {
        radius: r,
        order,
        nodes,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_and_second_moment() {
        for order in 1..8 {
            let q = sphere_quadrature(1.0, order).unwrap();
            assert!((q.weights().iter().sum::<f64>() - 4.0 * PI).abs() < 1e-10);
            assert!(q.weights().iter().all(|&w| w > 0.0));
            if order >= 2 {
                let m: f64 = q.integrate(|x| x.z * x.z);
                assert!((m - 4.0 * PI / 3.0).abs() < 1e-10);
            }
        }
        let q = sphere_quadrature(2.0, 1).unwrap();
        assert!((q.weights().iter().sum::<f64>() - 16.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(sphere_quadrature(0.0, 3).is_err());
        assert!(sphere_quadrature(1.0, 0).is_err());
    }
}
