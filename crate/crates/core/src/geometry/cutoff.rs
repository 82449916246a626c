use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

/// Radial cut-off: 0 inside `inner`, 1 outside `outer`, with the quintic
/// smoothstep `10t^3 - 15t^4 + 6t^5` in between (C2 at both junctions).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFunction {
    inner: f64,
    outer: f64,
}

/// Value, gradient and Laplacian of a cut-off at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffValue {
    pub value: f64,
    pub gradient: Vec3,
    pub laplacian: f64,
}

impl CutoffFunction {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && outer > inner && outer.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cut-off radii must satisfy 0 <= r0 < r1, got r0 = {inner}, r1 = {outer}"
            )));
        }
        Ok(Self { inner, outer })
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    /// Radial profile and its first two derivatives in r.
    pub fn profile(&self, r: f64) -> (f64, f64, f64) {
        if r <= self.inner {
            return (0.0, 0.0, 0.0);
        }
        if r >= self.outer {
            return (1.0, 0.0, 0.0);
        }
        let width = self.outer - self.inner;
        let t = (r - self.inner) / width;
        let t2 = t * t;
        let s = t2 * t * (10.0 - 15.0 * t + 6.0 * t2);
        let ds = 30.0 * t2 * (1.0 - t) * (1.0 - t);
        let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (s, ds / width, dds / (width * width))
    }

    pub fn value(&self, x: &Vec3) -> f64 {
        self.profile(x.norm()).0
    }

    pub fn eval(&self, x: &Vec3) -> CutoffValue {
        let r = x.norm();
        let (value, d1, d2) = self.profile(r);
        if d1 == 0.0 && d2 == 0.0 {
            return CutoffValue {
                value,
                gradient: Vec3::zeros(),
                laplacian: 0.0,
            };
        }
        CutoffValue {
            value,
            gradient: x * (d1 / r),
            laplacian: d2 + 2.0 * d1 / r,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on_axis(r: f64) -> Vec3 {
        Vec3::new(r * 0.6, 0.0, r * 0.8)
    }

    #[test]
    fn plateaus_and_midpoint() {
        let z = CutoffFunction::new(2.0, 3.0).unwrap();
        let inside = z.eval(&on_axis(1.0));
        assert_eq!(inside.value, 0.0);
        assert_eq!(inside.gradient, Vec3::zeros());
        assert_eq!(inside.laplacian, 0.0);
        let outside = z.eval(&on_axis(6.0));
        assert_eq!(outside.value, 1.0);
        assert_eq!(outside.gradient, Vec3::zeros());
        assert_eq!(outside.laplacian, 0.0);
        assert!((z.eval(&on_axis(2.5)).value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn junctions_are_c2() {
        let z = CutoffFunction::new(1.0, 2.0).unwrap();
        for r in [1.0, 2.0] {
            let below = z.profile(r - 1e-7);
            let above = z.profile(r + 1e-7);
            assert!((below.0 - above.0).abs() < 1e-12);
            assert!((below.1 - above.1).abs() < 1e-9);
            assert!((below.2 - above.2).abs() < 1e-5);
        }
    }

    #[test]
    fn monotone_and_bounded() {
        let z = CutoffFunction::new(0.5, 4.0).unwrap();
        let mut prev = -1.0;
        for i in 0..=1000 {
            let v = z.profile(i as f64 * 0.005).0;
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn laplacian_matches_finite_differences() {
        let z = CutoffFunction::new(1.0, 2.0).unwrap();
        let x = Vec3::new(0.7, 0.9, 0.6);
        let step = 1e-4;
        let mut lap = 0.0;
        for axis in 0..3 {
            let mut e = Vec3::zeros();
            e[axis] = step;
            lap += (z.value(&(x + e)) - 2.0 * z.value(&x) + z.value(&(x - e))) / (step * step);
        }
        assert!((lap - z.eval(&x).laplacian).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_radii() {
        assert!(CutoffFunction::new(2.0, 2.0).is_err());
        assert!(CutoffFunction::new(-1.0, 2.0).is_err());
    }
}
