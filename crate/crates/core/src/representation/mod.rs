//! Green kernels, Cauchy data on an auxiliary sphere, the exterior
//! representation formula, far-field patterns and volume potentials.

mod decay;

use std::f64::consts::PI;

use serde::Serialize;

use crate::coefficients::{absorbed_wavenumber, CoefficientSet, DecaySpec};
use crate::error::{Error, Result};
use crate::field::{complexify, rdot, CVec3, ComplexField, FieldSampler, C64};
use crate::geometry::{SurfaceQuadrature, Vec3};
use crate::quadrature::{gauss_legendre_interval, TET4_BARYCENTRIC};

pub use decay::{decay_estimate_check, radial_volume_potential, DecayCheck, DecayReport, DecaySample};

const I: C64 = C64::new(0.0, 1.0);

/// Outgoing kernel of Delta + k^2 + i eps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenKernel {
    k: f64,
    eps: f64,
    kappa: C64,
}

/// Radial profile G(d) = e^{i kappa d} / (4 pi d) and its first two
/// derivatives.
fn profile(kappa: C64, d: f64) -> (C64, C64, C64) {
    let g = (I * kappa * d).exp() / (4.0 * PI * d);
    let a = I * kappa - 1.0 / d;
    (g, g * a, g * (a * a + 1.0 / (d * d)))
}

impl GreenKernel {
    pub fn new(k: f64, eps: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite() && eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("need k >= 0 and eps >= 0, got {k}, {eps}")));
        }
        Ok(Self {
            k,
            eps,
            kappa: absorbed_wavenumber(k, eps),
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Principal root of k^2 + i eps.
    pub fn kappa(&self) -> C64 {
        self.kappa
    }

    /// g(x, y) and grad_x g.
    pub fn eval(&self, x: &Vec3, y: &Vec3) -> Result<(C64, CVec3)> {
        let r = x - y;
        let d = r.norm();
        if d == 0.0 {
            return Err(Error::InvalidArgument("kernel evaluated at coincident points".into()));
        }
        let (g, g1, _) = profile(self.kappa, d);
        Ok((g, complexify(&(r / d)) * g1))
    }

    /// d_N g(x, s) for the unit normal n at s (derivative in s) and its
    /// gradient in x.
    fn normal_derivative(&self, x: &Vec3, s: &Vec3, n: &Vec3) -> (C64, C64, CVec3, CVec3) {
        let r = x - s;
        let d = r.norm();
        let e = r / d;
        let (g, g1, g2) = profile(self.kappa, d);
        let en = e.dot(n);
        let dn_g = -g1 * en;
        let grad_dn_g = -(complexify(&e) * ((g2 - g1 / d) * en) + complexify(n) * (g1 / d));
        (g, dn_g, complexify(&e) * g1, grad_dn_g)
    }
}

/// Trace and outward radial derivative of a field on a sphere.
#[derive(Debug, Clone, Serialize)]
pub struct CauchyData {
    #[serde(skip)]
    quad: SurfaceQuadrature,
    radius: f64,
    trace: Vec<C64>,
    normal_derivative: Vec<C64>,
    /// Targets must satisfy |x| > radius + standoff.
    standoff: f64,
    /// Absorption of the field the data came from.
    eps: f64,
}

impl CauchyData {
    pub fn new(quad: SurfaceQuadrature, trace: Vec<C64>, normal_derivative: Vec<C64>, standoff: f64) -> Result<Self> {
        if trace.len() != quad.len() || normal_derivative.len() != quad.len() {
            return Err(Error::DimensionMismatch {
                expected: quad.len(),
                got: trace.len().min(normal_derivative.len()),
            });
        }
        if trace.iter().chain(&normal_derivative).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("Cauchy data must be finite".into()));
        }
        Ok(Self {
            radius: quad.radius(),
            quad,
            trace,
            normal_derivative,
            standoff,
            eps: 0.0,
        })
    }

    /// Data of a closed-form field.
    pub fn from_sampler(sampler: &dyn FieldSampler, quad: SurfaceQuadrature) -> Result<Self> {
        let mut trace = Vec::with_capacity(quad.len());
        let mut dn = Vec::with_capacity(quad.len());
        for (i, s) in quad.nodes().iter().enumerate() {
            let (v, g) = sampler.sample(s)?;
            trace.push(v);
            dn.push(rdot(&quad.normal(i), &g));
        }
        Self::new(quad, trace, dn, 0.0)
    }

    pub fn zeros(quad: SurfaceQuadrature) -> Self {
        let n = quad.len();
        Self::new(quad, vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); n], 0.0)
            .expect("zero data is valid")
    }

    /// Record the absorption parameter of the originating field.
    pub fn with_absorption(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn trace(&self) -> &[C64] {
        &self.trace
    }

    pub fn normal_derivative(&self) -> &[C64] {
        &self.normal_derivative
    }

    pub fn quadrature(&self) -> &SurfaceQuadrature {
        &self.quad
    }

    pub fn absorption(&self) -> f64 {
        self.eps
    }

    /// a * self + b * other on the same quadrature.
    pub fn combine(&self, a: C64, other: &CauchyData, b: C64) -> Result<Self> {
        if other.trace.len() != self.trace.len() || other.radius != self.radius {
            return Err(Error::DimensionMismatch {
                expected: self.trace.len(),
                got: other.trace.len(),
            });
        }
        let mix = |p: &[C64], q: &[C64]| p.iter().zip(q).map(|(x, y)| a * x + b * y).collect();
        Ok(Self {
            quad: self.quad.clone(),
            radius: self.radius,
            trace: mix(&self.trace, &other.trace),
            normal_derivative: mix(&self.normal_derivative, &other.normal_derivative),
            standoff: self.standoff.max(other.standoff),
            eps: self.eps,
        })
    }
}

/// Cauchy data of a P1 field. The normal derivative averages the cell
/// gradients just inside and just outside each node along the radius.
pub fn cauchy_data(field: &ComplexField, quad: SurfaceQuadrature) -> Result<CauchyData> {
    let mesh = field.mesh();
    let h = mesh.mesh_size();
    let r = quad.radius();
    if !(r < mesh.truncation_radius() - 2.0 * h) || !(r > mesh.obstacle_circumradius()) {
        return Err(Error::InvalidArgument(format!(
            "representation sphere |x| = {r} must lie inside the mesh, below rho - 2h = {}",
            mesh.truncation_radius() - 2.0 * h
        )));
    }
    let delta = 1e-7 * r;
    let mut trace = Vec::with_capacity(quad.len());
    let mut dn = Vec::with_capacity(quad.len());
    let outside = |x: &Vec3| Error::OutsideMesh { x: x.x, y: x.y, z: x.z };
    for (i, s) in quad.nodes().iter().enumerate() {
        let n = quad.normal(i);
        let (c, bary) = mesh.locate(s).ok_or_else(|| outside(s))?;
        trace.push(field.eval_in_cell(c, &bary));
        let mut acc = C64::new(0.0, 0.0);
        for side in [-1.0, 1.0] {
            let p = s + n * (side * delta);
            let (c, _) = mesh.locate(&p).ok_or_else(|| outside(&p))?;
            acc += rdot(&n, &field.cell_gradient(c));
        }
        dn.push(acc * 0.5);
    }
    CauchyData::new(quad, trace, dn, 2.0 * h)
}

/// Volume quadrature of the two potentials over B'_R inside the mesh,
/// with a majorant for the part beyond the truncation sphere.
#[derive(Debug, Clone, Serialize)]
pub struct VolumeTail {
    #[serde(skip)]
    points: Vec<(Vec3, f64, C64)>,
    rho: f64,
    /// Radial majorant of |integrand| beyond rho, as (c, s, m): c (1+r^2)^{-s/2} r^{-m}.
    majorant: (f64, f64, f64),
}

impl VolumeTail {
    /// Source potential int g h over cells of `field`'s mesh beyond
    /// `radius`; `h` is evaluated at quadrature points. Beyond rho h is
    /// bounded by the decay of q (h = -q u0 there).
    pub fn source(field_mesh: &ComplexField, radius: f64, h: impl Fn(&Vec3) -> C64, coeffs: &CoefficientSet) -> Self {
        let mesh = field_mesh.mesh();
        let mut points = Vec::new();
        for c in 0..mesh.num_cells() {
            let pts = mesh.cell_points(c);
            let vol = mesh.signed_volume(c);
            for b in TET4_BARYCENTRIC {
                let y = pts[0] * b[0] + pts[1] * b[1] + pts[2] * b[2] + pts[3] * b[3];
                if y.norm() > radius {
                    points.push((y, vol / 4.0, h(&y)));
                }
            }
        }
        let (cq, s) = decay_constants(coeffs);
        Self {
            points,
            rho: mesh.truncation_radius(),
            majorant: (cq, s, 0.0),
        }
    }

    /// Potential term int g q psi; psi is assumed to decay like 1/r beyond
    /// rho with the constant read off the outer boundary.
    pub fn potential(field: &ComplexField, radius: f64, coeffs: &CoefficientSet) -> Self {
        let mesh = field.mesh();
        let mut points = Vec::new();
        for (c, cell) in mesh.cells().iter().enumerate() {
            let pts = mesh.cell_points(c);
            let vol = mesh.signed_volume(c);
            for b in TET4_BARYCENTRIC {
                let y = pts[0] * b[0] + pts[1] * b[1] + pts[2] * b[2] + pts[3] * b[3];
                if y.norm() > radius {
                    let psi: C64 = (0..4).map(|i| field.values()[cell[i]] * b[i]).sum();
                    points.push((y, vol / 4.0, psi * coeffs.q(&y)));
                }
            }
        }
        let rho = mesh.truncation_radius();
        let outer = mesh
            .boundary_vertex_mask(crate::geometry::FacetTag::Outer)
            .iter()
            .zip(field.values())
            .filter(|(m, _)| **m)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        let (cq, s) = decay_constants(coeffs);
        Self {
            points,
            rho,
            majorant: (cq * outer * rho, s, 1.0),
        }
    }

    fn eval(&self, kernel: &GreenKernel, x: &Vec3) -> (C64, CVec3) {
        let mut v = C64::new(0.0, 0.0);
        let mut g = CVec3::zeros();
        for (y, w, f) in &self.points {
            if let Ok((k, gk)) = kernel.eval(x, y) {
                v += k * f * *w;
                g += gk * (f * *w);
            }
        }
        (v, g)
    }

    /// Bound on |int_{|y| > rho} g(x, y) F(y) dy| using
    /// int_{|y| = r} dS / (4 pi |x - y|) = r^2 / max(|x|, r).
    pub fn tail_bound(&self, x: &Vec3) -> f64 {
        let (c, s, m) = self.majorant;
        if c == 0.0 {
            return 0.0;
        }
        let xn = x.norm();
        // r = rho / t on (0, 1].
        gauss_legendre_interval(64, 0.0, 1.0)
            .into_iter()
            .map(|(t, w)| {
                let r = self.rho / t;
                let f = c * (1.0 + r * r).powf(-s / 2.0) * r.powf(-m);
                w * f * r * r / xn.max(r) * self.rho / (t * t)
            })
            .sum()
    }
}

fn decay_constants(coeffs: &CoefficientSet) -> (f64, f64) {
    match coeffs.decay {
        DecaySpec::Compact { .. } => (0.0, 0.0),
        DecaySpec::Power { c_q, s } => (c_q, s),
    }
}

/// Source and potential volume terms of the representation.
#[derive(Debug, Clone, Serialize)]
pub struct VolumeTails {
    pub source: VolumeTail,
    pub potential: VolumeTail,
}

/// Exterior field given by the representation formula.
#[derive(Debug, Clone)]
pub struct RepresentedField<'a> {
    pub cauchy: &'a CauchyData,
    pub kernel: GreenKernel,
    pub tails: Option<&'a VolumeTails>,
}

impl RepresentedField<'_> {
    /// Value, gradient and tail error bar at `x`.
    pub fn eval(&self, x: &Vec3) -> Result<(C64, CVec3, f64)> {
        let c = self.cauchy;
        if !(x.norm() > c.radius + c.standoff) {
            return Err(Error::InvalidArgument(format!(
                "target |x| = {} violates the standoff |x| > {}",
                x.norm(),
                c.radius + c.standoff
            )));
        }
        let quad = &c.quad;
        let mut v = C64::new(0.0, 0.0);
        let mut grad = CVec3::zeros();
        for (i, s) in quad.nodes().iter().enumerate() {
            let w = quad.weights()[i];
            let n = quad.normal(i);
            let (g, dn_g, grad_g, grad_dn_g) = self.kernel.normal_derivative(x, s, &n);
            let psi = c.trace[i];
            let dpsi = c.normal_derivative[i];
            v += (psi * dn_g - g * dpsi) * w;
            grad += (grad_dn_g * psi - grad_g * dpsi) * C64::new(w, 0.0);
        }
        let mut bar = 0.0;
        if let Some(t) = self.tails {
            let (vs, gs) = t.source.eval(&self.kernel, x);
            let (vp, gp) = t.potential.eval(&self.kernel, x);
            v += vs - vp;
            grad += gs - gp;
            bar = t.source.tail_bound(x) + t.potential.tail_bound(x);
        }
        Ok((v, grad, bar))
    }
}

impl FieldSampler for RepresentedField<'_> {
    fn sample(&self, x: &Vec3) -> Result<(C64, CVec3)> {
        let (v, g, _) = self.eval(x)?;
        Ok((v, g))
    }

    fn absorption(&self) -> f64 {
        self.kernel.eps()
    }
}

/// psi(x) from Cauchy data; tails are required when the coefficients
/// declare a non-compact potential.
pub fn represent(
    cauchy: &CauchyData,
    kernel: &GreenKernel,
    tails: Option<&VolumeTails>,
    x: &Vec3,
) -> Result<C64> {
    let field = RepresentedField {
        cauchy,
        kernel: *kernel,
        tails,
    };
    Ok(field.eval(x)?.0)
}

/// Like [`represent`] but checks that tails are present for a non-compact q.
pub fn represent_checked(
    cauchy: &CauchyData,
    kernel: &GreenKernel,
    tails: Option<&VolumeTails>,
    coeffs: &CoefficientSet,
    x: &Vec3,
) -> Result<C64> {
    if !coeffs.potential_is_compact() && tails.is_none() {
        return Err(Error::InvalidArgument(
            "non-compact potential needs volume tails in the representation".into(),
        ));
    }
    represent(cauchy, kernel, tails, x)
}

/// A(beta) = 1/(4 pi) int [psi d_N e^{-ik beta.s} - e^{-ik beta.s} d_N psi] ds.
pub fn far_field(cauchy: &CauchyData, k: f64, directions: &[Vec3]) -> Result<Vec<C64>> {
    if cauchy.eps != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "far field needs eps = 0 data, got eps = {}",
            cauchy.eps
        )));
    }
    let quad = &cauchy.quad;
    Ok(directions
        .iter()
        .map(|beta| {
            let b = beta.normalize();
            let mut acc = C64::new(0.0, 0.0);
            for (i, s) in quad.nodes().iter().enumerate() {
                let n = quad.normal(i);
                let e = C64::from_polar(1.0, -k * b.dot(s));
                let dn_e = e * (-I * k * b.dot(&n));
                acc += (cauchy.trace[i] * dn_e - e * cauchy.normal_derivative[i]) * quad.weights()[i];
            }
            acc / (4.0 * PI)
        })
        .collect())
}

/// A(beta) = 1/(4 pi) int grad chi . (v grad e - e grad v) dx with
/// e = exp(-ik beta.x) and chi the radial cut-off `shell`. Equals the
/// surface form for any Helmholtz solution v in the support of chi and
/// uses only first derivatives of the P1 field.
pub fn far_field_volume(
    field: &ComplexField,
    shell: &crate::geometry::CutoffFunction,
    k: f64,
    directions: &[Vec3],
) -> Result<Vec<C64>> {
    let mesh = field.mesh();
    if !(shell.outer() < mesh.truncation_radius()) {
        return Err(Error::InvalidArgument(format!(
            "far-field shell ({}, {}) must lie inside the mesh",
            shell.inner(),
            shell.outer()
        )));
    }
    // Quadrature points in the transition layer: (x, weight grad chi, v, grad v).
    let mut pts = Vec::new();
    for (c, cell) in mesh.cells().iter().enumerate() {
        let p = mesh.cell_points(c);
        let rmin = p.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min);
        let rmax = p.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if rmax <= shell.inner() || rmin >= shell.outer() {
            continue;
        }
        let vol = mesh.signed_volume(c);
        let grad = field.cell_gradient(c);
        for b in TET4_BARYCENTRIC {
            let x = p[0] * b[0] + p[1] * b[1] + p[2] * b[2] + p[3] * b[3];
            let chi = shell.eval(&x);
            let v: C64 = (0..4).map(|i| field.values()[cell[i]] * b[i]).sum();
            pts.push((x, chi.gradient * (vol / 4.0), v, grad));
        }
    }
    Ok(directions
        .iter()
        .map(|beta| {
            let b = beta.normalize();
            let mut acc = C64::new(0.0, 0.0);
            for (x, wg, v, g) in &pts {
                let e = C64::from_polar(1.0, -k * b.dot(x));
                acc += e * (-I * k * b.dot(wg) * v - rdot(wg, g));
            }
            acc / (4.0 * PI)
        })
        .collect())
}

/// Default representation quadrature order 2 (k R + 10).
pub fn default_order(k: f64, radius: f64) -> usize {
    (2.0 * (k * radius + 10.0)).ceil() as usize
}
