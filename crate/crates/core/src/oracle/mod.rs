//! Separation-of-variables solution for a sphere with a = identity, q = 0.

pub mod special;

use std::f64::consts::PI;

use serde::Serialize;

use crate::coefficients::BoundaryKind;
use crate::error::{Error, Result};
use crate::field::{complexify, CVec3, FieldSampler, C64};
use crate::geometry::Vec3;

use special::{derivative, legendre, spherical_hn, spherical_jn};

/// i^l.
fn i_pow(l: usize) -> C64 {
    match l % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Default truncation ceil(ka) + 20.
pub fn default_order(a: f64, k: f64) -> usize {
    (k * a).ceil() as usize + 20
}

/// Scattering coefficients c_l, l = 0..=order, for the incident expansion
/// sum (2l+1) i^l j_l(kr) P_l(cos theta). The Robin condition is
/// -d_r u + sigma u = 0 on r = a (normal pointing into the obstacle).
pub fn mie_coefficients(a: f64, k: f64, kind: BoundaryKind, sigma: f64, order: usize) -> Result<Vec<C64>> {
    if !(a > 0.0 && k > 0.0) {
        return Err(Error::InvalidArgument(format!("need a > 0 and k > 0, got a = {a}, k = {k}")));
    }
    let ka = k * a;
    if !(ka < order as f64) {
        return Err(Error::InvalidArgument(format!(
            "truncation order {order} must exceed ka = {ka}"
        )));
    }
    let j = spherical_jn(order + 1, ka);
    let h = spherical_hn(order + 1, ka);
    let dj = derivative(&j, ka);
    let dh = derivative(&h, ka);
    (0..=order)
        .map(|l| {
            let (num, den) = match kind {
                BoundaryKind::Dirichlet => (C64::new(j[l], 0.0), h[l]),
                BoundaryKind::Neumann => (C64::new(dj[l], 0.0), dh[l]),
                BoundaryKind::Robin if sigma == 0.0 => (C64::new(dj[l], 0.0), dh[l]),
                BoundaryKind::Robin => (
                    C64::new(-k * dj[l] + sigma * j[l], 0.0),
                    dh[l] * (-k) + h[l] * sigma,
                ),
            };
            if den.norm() == 0.0 {
                return Err(Error::InvalidArgument(format!("vanishing denominator at l = {l}")));
            }
            Ok(-num / den)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct MieSeries {
    radius: f64,
    k: f64,
    kind: BoundaryKind,
    sigma: f64,
    direction: [f64; 3],
    coefficients: Vec<C64>,
}

impl MieSeries {
    /// Incident direction (0, 0, 1), default truncation.
    pub fn new(radius: f64, k: f64, kind: BoundaryKind, sigma: f64) -> Result<Self> {
        Self::with_order(radius, k, kind, sigma, default_order(radius, k))
    }

    pub fn with_order(radius: f64, k: f64, kind: BoundaryKind, sigma: f64, order: usize) -> Result<Self> {
        let coefficients = mie_coefficients(radius, k, kind, sigma, order)?;
        Ok(Self {
            radius,
            k,
            kind,
            sigma,
            direction: [0.0, 0.0, 1.0],
            coefficients,
        })
    }

    /// Same series for another incident direction.
    pub fn with_direction(mut self, direction: Vec3) -> Result<Self> {
        if (direction.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("incident direction must be a unit vector".into()));
        }
        self.direction = [direction.x, direction.y, direction.z];
        Ok(self)
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn kind(&self) -> BoundaryKind {
        self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn direction(&self) -> Vec3 {
        Vec3::from(self.direction)
    }

    /// Magnitude of the last retained coefficient.
    pub fn tail_magnitude(&self) -> f64 {
        self.coefficients.last().map_or(0.0, |c| c.norm())
    }

    fn check(&self, x: &Vec3) -> Result<()> {
        if x.norm() < self.radius * (1.0 - 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "|x| = {} lies inside the sphere of radius {}",
                x.norm(),
                self.radius
            )));
        }
        Ok(())
    }

    /// Scattered field v and its gradient.
    pub fn scattered(&self, x: &Vec3) -> Result<(C64, CVec3)> {
        self.check(x)?;
        let r = x.norm();
        let xh = x / r;
        let alpha = self.direction();
        let ct = alpha.dot(&xh).clamp(-1.0, 1.0);
        let lmax = self.order();
        let kr = self.k * r;
        let h = spherical_hn(lmax + 1, kr);
        let dh = derivative(&h, kr);
        let (p, dp) = legendre(lmax, ct);
        let tangential = (alpha - xh * ct) / r;
        let mut v = C64::new(0.0, 0.0);
        let mut dr = C64::new(0.0, 0.0);
        let mut dt = C64::new(0.0, 0.0);
        for l in 0..=lmax {
            let coef = i_pow(l) * self.coefficients[l] * (2 * l + 1) as f64;
            v += coef * h[l] * p[l];
            dr += coef * dh[l] * (self.k * p[l]);
            dt += coef * h[l] * dp[l];
        }
        Ok((v, complexify(&xh) * dr + complexify(&tangential) * dt))
    }

    /// Total field u = u0 + v and its gradient.
    pub fn total(&self, x: &Vec3) -> Result<(C64, CVec3)> {
        let (v, gv) = self.scattered(x)?;
        let alpha = self.direction();
        let u0 = C64::from_polar(1.0, self.k * alpha.dot(x));
        let g0 = complexify(&alpha) * (C64::new(0.0, self.k) * u0);
        Ok((u0 + v, g0 + gv))
    }

    /// Far-field amplitude: v ~ e^{ikr} A(beta) / r.
    pub fn far_field(&self, beta: &Vec3) -> C64 {
        let ct = self.direction().dot(&beta.normalize()).clamp(-1.0, 1.0);
        let (p, _) = legendre(self.order(), ct);
        let s: C64 = (0..=self.order())
            .map(|l| self.coefficients[l] * ((2 * l + 1) as f64 * p[l]))
            .sum();
        s * C64::new(0.0, -1.0 / self.k)
    }

    /// Total scattering cross-section 4 pi / k^2 sum (2l+1) |c_l|^2,
    /// equal to the integral of |A|^2 over the unit sphere.
    pub fn cross_section(&self) -> f64 {
        4.0 * PI / (self.k * self.k)
            * self
                .coefficients
                .iter()
                .enumerate()
                .map(|(l, c)| (2 * l + 1) as f64 * c.norm_sqr())
                .sum::<f64>()
    }

    pub fn scattered_field(&self) -> MieScattered<'_> {
        MieScattered(self)
    }

    pub fn total_field(&self) -> MieTotal<'_> {
        MieTotal(self)
    }
}

pub struct MieScattered<'a>(&'a MieSeries);

impl FieldSampler for MieScattered<'_> {
    fn sample(&self, x: &Vec3) -> Result<(C64, CVec3)> {
        self.0.scattered(x)
    }
}

pub struct MieTotal<'a>(&'a MieSeries);

impl FieldSampler for MieTotal<'_> {
    fn sample(&self, x: &Vec3) -> Result<(C64, CVec3)> {
        self.0.total(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_unit(rng: &mut impl Rng) -> Vec3 {
        loop {
            let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if v.norm() > 0.1 && v.norm() < 1.0 {
                return v.normalize();
            }
        }
    }

    #[test]
    fn robin_zero_is_neumann() {
        let n = mie_coefficients(1.0, 1.3, BoundaryKind::Neumann, 0.0, 25).unwrap();
        let r = mie_coefficients(1.0, 1.3, BoundaryKind::Robin, 0.0, 25).unwrap();
        assert_eq!(n, r);
    }

    #[test]
    fn monopole_closed_form() {
        let c = mie_coefficients(1.0, 1.0, BoundaryKind::Dirichlet, 0.0, 21).unwrap();
        let h0 = C64::new(0.0, -1.0) * C64::from_polar(1.0, 1.0);
        let expected = -C64::new(1f64.sin(), 0.0) / h0;
        assert!((c[0] - expected).norm() < 1e-14);
    }

    #[test]
    fn dirichlet_coefficients_are_bounded() {
        for k in [0.5, 1.0, 2.0] {
            let c = mie_coefficients(1.0, k, BoundaryKind::Dirichlet, 0.0, default_order(1.0, k)).unwrap();
            assert!(c.iter().all(|v| v.norm() <= 1.0 + 1e-14));
            assert!(c.last().unwrap().norm() < 1e-20);
        }
    }

    #[test]
    fn boundary_conditions_hold_on_the_sphere() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let dir = MieSeries::new(1.0, 1.0, BoundaryKind::Dirichlet, 0.0).unwrap();
        let neu = MieSeries::new(1.0, 1.0, BoundaryKind::Neumann, 0.0).unwrap();
        let rob = MieSeries::new(1.0, 1.0, BoundaryKind::Robin, 1.0).unwrap();
        for _ in 0..100 {
            let x = random_unit(&mut rng);
            assert!(dir.total(&x).unwrap().0.norm() <= 1e-8);
            let (u, g) = neu.total(&x).unwrap();
            assert!(crate::field::rdot(&x, &g).norm() <= 1e-6, "{u}");
            let (u, g) = rob.total(&x).unwrap();
            assert!((-crate::field::rdot(&x, &g) + u).norm() <= 1e-6);
        }
        assert!(dir.total(&Vec3::new(0.5, 0.0, 0.0)).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = MieSeries::new(1.0, 1.5, BoundaryKind::Robin, 0.7).unwrap();
        let x = Vec3::new(0.9, -1.2, 1.7);
        let (_, g) = m.scattered(&x).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            let mut e = Vec3::zeros();
            e[i] = h;
            let fd = (m.scattered(&(x + e)).unwrap().0 - m.scattered(&(x - e)).unwrap().0) / (2.0 * h);
            assert!((fd - g[i]).norm() < 1e-7);
        }
    }

    #[test]
    fn rotation_equivariance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let base = MieSeries::new(1.0, 1.0, BoundaryKind::Neumann, 0.0).unwrap();
        for _ in 0..10 {
            let axis = nalgebra::Unit::new_normalize(random_unit(&mut rng));
            let rot = nalgebra::Rotation3::from_axis_angle(&axis, rng.random_range(0.0..6.0));
            let rotated = base.clone().with_direction(rot * Vec3::z()).unwrap();
            let x = random_unit(&mut rng) * 2.5;
            let a = base.total(&x).unwrap().0;
            let b = rotated.total(&(rot * x)).unwrap().0;
            assert!((a - b).norm() <= 1e-10);
        }
    }
}
