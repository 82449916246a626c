//! Incident plane wave and the source of the cut-off reduction.

use crate::error::{Error, Result};
use crate::field::{complexify, CVec3, C64};
use crate::geometry::{CutoffFunction, Vec3};

use super::CoefficientSet;

/// Principal square root of k^2 + i eps (Im >= 0).
pub fn absorbed_wavenumber(k: f64, eps: f64) -> C64 {
    C64::new(k * k, eps).sqrt()
}

/// u0(x) = exp(i k alpha . x).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IncidentWave {
    k: f64,
    direction: [f64; 3],
}

impl IncidentWave {
    pub fn new(k: f64, direction: Vec3) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {k}")));
        }
        if (direction.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "incident direction must be a unit vector, |alpha| = {}",
                direction.norm()
            )));
        }
        Ok(Self {
            k,
            direction: [direction.x, direction.y, direction.z],
        })
    }

    /// Normalises `direction` before use.
    pub fn along(k: f64, direction: Vec3) -> Result<Self> {
        let n = direction.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("incident direction is zero".into()));
        }
        Self::new(k, direction / n)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn direction(&self) -> Vec3 {
        Vec3::from(self.direction)
    }

    pub fn reversed(&self) -> Self {
        Self {
            k: self.k,
            direction: self.direction.map(|c| -c),
        }
    }

    /// Value and gradient of u0 at `x`.
    pub fn eval(&self, x: &Vec3) -> (C64, CVec3) {
        let alpha = self.direction();
        let u = C64::from_polar(1.0, self.k * alpha.dot(x));
        (u, complexify(&alpha) * (C64::new(0.0, self.k) * u))
    }
}

/// f = (L - k^2)(zeta u0), evaluated in closed form from the radial
/// derivatives of zeta. The cut-off annulus must lie where a = identity.
#[derive(Debug, Clone)]
pub struct ReducedSource<'a> {
    coeffs: &'a CoefficientSet,
    wave: IncidentWave,
    cutoff: CutoffFunction,
}

impl<'a> ReducedSource<'a> {
    pub fn new(coeffs: &'a CoefficientSet, wave: IncidentWave, cutoff: CutoffFunction) -> Result<Self> {
        if cutoff.inner() < coeffs.tensor_radius() {
            return Err(Error::Hypothesis(format!(
                "cut-off annulus starts at {} but a differs from the identity up to |x| = {}",
                cutoff.inner(),
                coeffs.tensor_radius()
            )));
        }
        Ok(Self {
            coeffs,
            wave,
            cutoff,
        })
    }

    pub fn eval(&self, x: &Vec3) -> C64 {
        let z = self.cutoff.eval(x);
        let q = self.coeffs.q(x);
        if z.value == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let (u, grad) = self.wave.eval(x);
        -u * z.laplacian - crate::field::rdot(&z.gradient, &grad) * 2.0 + u * (q * z.value)
    }
}

pub fn reduced_source(
    coeffs: &CoefficientSet,
    wave: &IncidentWave,
    cutoff: &CutoffFunction,
    x: &Vec3,
) -> Result<C64> {
    Ok(ReducedSource::new(coeffs, *wave, *cutoff)?.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spot_values() {
        let w = IncidentWave::new(1.0, Vec3::z()).unwrap();
        let (u, g) = w.eval(&Vec3::zeros());
        assert_eq!(u, C64::new(1.0, 0.0));
        assert!((g - CVec3::new(0.0.into(), 0.0.into(), C64::new(0.0, 1.0))).norm() < 1e-15);
        let (u, g) = w.eval(&Vec3::new(0.0, 0.0, PI));
        assert!((u + 1.0).norm() < 1e-15);
        assert!((g[2] - C64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(IncidentWave::new(1.0, Vec3::new(1.0, 1.0, 0.0)).is_err());
        assert!(IncidentWave::new(0.0, Vec3::z()).is_err());
    }

    #[test]
    fn source_matches_finite_differences() {
        let coeffs = CoefficientSet::identity(2.0);
        let wave = IncidentWave::new(1.0, Vec3::z()).unwrap();
        let cutoff = CutoffFunction::new(2.5, 3.5).unwrap();
        let src = ReducedSource::new(&coeffs, wave, cutoff).unwrap();
        let k2 = 1.0;
        let phi = |x: &Vec3| wave.eval(x).0 * cutoff.value(x);
        let h = 1e-3;
        for x in [Vec3::new(1.0, 2.0, 1.5), Vec3::new(-2.9, 0.4, 0.3), Vec3::new(0.0, 0.1, 3.1)] {
            let mut lap = -phi(&x) * 6.0;
            for i in 0..3 {
                let mut e = Vec3::zeros();
                e[i] = h;
                lap += phi(&(x + e)) + phi(&(x - e));
            }
            lap /= h * h;
            let fd = -lap - phi(&x) * k2;
            assert!((fd - src.eval(&x)).norm() < 1e-4, "{fd} vs {}", src.eval(&x));
        }
        assert_eq!(src.eval(&Vec3::new(0.0, 0.0, 1.0)), C64::new(0.0, 0.0));
        assert_eq!(src.eval(&Vec3::new(0.0, 4.0, 1.0)), C64::new(0.0, 0.0));
    }

    #[test]
    fn annulus_must_avoid_anisotropy() {
        let coeffs = CoefficientSet::preset("aniso_core", 2.0).unwrap();
        let wave = IncidentWave::new(1.0, Vec3::z()).unwrap();
        assert!(reduced_source(&coeffs, &wave, &CutoffFunction::new(1.5, 3.0).unwrap(), &Vec3::x()).is_err());
    }

    #[test]
    fn free_helmholtz_residual_is_second_order() {
        let w = IncidentWave::along(1.7, Vec3::new(0.3, -0.5, 0.8)).unwrap();
        let x = Vec3::new(0.4, 1.1, -0.6);
        let res = |h: f64| {
            let mut lap = -w.eval(&x).0 * 6.0;
            for i in 0..3 {
                let mut e = Vec3::zeros();
                e[i] = h;
                lap += w.eval(&(x + e)).0 + w.eval(&(x - e)).0;
            }
            (lap / (h * h) + w.eval(&x).0 * (1.7 * 1.7)).norm()
        };
        let (r1, r2, r3) = (res(0.1), res(0.05), res(0.025));
        assert!(r1 / r2 > 3.5 && r2 / r3 > 3.5);
    }
}
