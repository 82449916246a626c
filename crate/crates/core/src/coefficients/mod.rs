//! Coefficient data: the tensor a, potential q and impedance sigma, with
//! validators for ellipticity and potential decay.

mod grid;
mod wave;

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub use grid::CoefGrid;
pub use wave::{absorbed_wavenumber, reduced_source, IncidentWave, ReducedSource};

pub type ScalarFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;
pub type TensorFn = Arc<dyn Fn(&Vec3) -> Matrix3<f64> + Send + Sync>;

#[derive(Clone)]
pub enum TensorField {
    Identity,
    /// diag(d) for |x| < radius, identity outside.
    DiagCore { diag: [f64; 3], radius: f64 },
    /// Six-component grid; identity outside its bounding box.
    Grid(Arc<CoefGrid>),
    Custom(TensorFn),
}

#[derive(Clone)]
pub enum PotentialField {
    Zero,
    /// amplitude * exp(-|x|^2) for |x| < support, zero outside.
    Bump { amplitude: f64, support: f64 },
    /// c_q (1 + |x|^2)^(-s/2) everywhere.
    PowerTail { c_q: f64, s: f64 },
    /// One-component grid; zero outside its bounding box.
    Grid(Arc<CoefGrid>),
    Custom(ScalarFn),
}

#[derive(Clone)]
pub enum Impedance {
    Constant(f64),
    /// Surface function together with a bound on |sigma|.
    Custom { f: ScalarFn, bound: f64 },
}

/// Declared behaviour of q away from the obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecaySpec {
    /// q vanishes for |x| > radius.
    Compact { radius: f64 },
    /// |q(x)| <= c_q (1 + |x|^2)^(-s/2) for |x| > R.
    Power { c_q: f64, s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Robin,
}

impl BoundaryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Neumann => "neumann",
            BoundaryKind::Robin => "robin",
        }
    }
}

#[derive(Clone)]
pub struct CoefficientSet {
    pub tensor: TensorField,
    pub potential: PotentialField,
    pub impedance: Impedance,
    pub boundary: BoundaryKind,
    /// Declared ellipticity bounds (c, C).
    pub ellipticity: (f64, f64),
    /// Radius beyond which a is the identity.
    pub radius: f64,
    pub decay: DecaySpec,
    /// Accept power tails with 2 < s <= 3. No accuracy guarantee.
    pub experimental_weak_decay: bool,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tensor = match &self.tensor {
            TensorField::Identity => "identity".to_string(),
            TensorField::DiagCore { diag, radius } => format!("diag{diag:?} in |x| < {radius}"),
            TensorField::Grid(_) => "grid".into(),
            TensorField::Custom(_) => "custom".into(),
        };
        let potential = match &self.potential {
            PotentialField::Zero => "zero".to_string(),
            PotentialField::Bump { amplitude, support } => format!("bump({amplitude}, {support})"),
            PotentialField::PowerTail { c_q, s } => format!("power_tail({c_q}, {s})"),
            PotentialField::Grid(_) => "grid".into(),
            PotentialField::Custom(_) => "custom".into(),
        };
        f.debug_struct("CoefficientSet")
            .field("tensor", &tensor)
            .field("potential", &potential)
            .field("sigma_bound", &self.sigma_bound())
            .field("boundary", &self.boundary)
            .field("ellipticity", &self.ellipticity)
            .field("radius", &self.radius)
            .field("decay", &self.decay)
            .finish()
    }
}

pub const PRESETS: [&str; 4] = ["identity", "radial_bump", "power_tail", "aniso_core"];

impl CoefficientSet {
    /// a = identity, q = 0, Dirichlet obstacle.
    pub fn identity(radius: f64) -> Self {
        Self {
            tensor: TensorField::Identity,
            potential: PotentialField::Zero,
            impedance: Impedance::Constant(0.0),
            boundary: BoundaryKind::Dirichlet,
            ellipticity: (1.0, 1.0),
            radius,
            decay: DecaySpec::Compact { radius: 0.0 },
            experimental_weak_decay: false,
        }
    }

    /// Named presets; `radius` is the coefficient radius R.
    pub fn preset(name: &str, radius: f64) -> Result<Self> {
        let mut c = Self::identity(radius);
        match name {
            "identity" => {}
            "radial_bump" => {
                c.potential = PotentialField::Bump {
                    amplitude: 1.0,
                    support: radius,
                };
                c.decay = DecaySpec::Compact { radius };
            }
            "power_tail" => {
                c.potential = PotentialField::PowerTail { c_q: 1.0, s: 3.5 };
                c.decay = DecaySpec::Power { c_q: 1.0, s: 3.5 };
            }
            "aniso_core" => {
                c.tensor = TensorField::DiagCore {
                    diag: [2.0, 1.0, 1.0],
                    radius,
                };
                c.ellipticity = (1.0, 2.0);
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown coefficient preset `{other}` (known: {})",
                    PRESETS.join(", ")
                )))
            }
        }
        Ok(c)
    }

    pub fn with_boundary(mut self, kind: BoundaryKind, sigma: f64) -> Self {
        self.boundary = kind;
        self.impedance = Impedance::Constant(match kind {
            BoundaryKind::Robin => sigma,
            _ => 0.0,
        });
        self
    }

    pub fn a(&self, x: &Vec3) -> Matrix3<f64> {
        match &self.tensor {
            TensorField::Identity => Matrix3::identity(),
            TensorField::DiagCore { diag, radius } => {
                if x.norm() < *radius {
                    Matrix3::from_diagonal(&Vec3::from(*diag))
                } else {
                    Matrix3::identity()
                }
            }
            TensorField::Grid(g) => match g.sample(x) {
                Some(v) => Matrix3::new(v[0], v[3], v[4], v[3], v[1], v[5], v[4], v[5], v[2]),
                None => Matrix3::identity(),
            },
            TensorField::Custom(f) => f(x),
        }
    }

    pub fn q(&self, x: &Vec3) -> f64 {
        match &self.potential {
            PotentialField::Zero => 0.0,
            PotentialField::Bump { amplitude, support } => {
                let r2 = x.norm_squared();
                if r2 < support * support {
                    amplitude * (-r2).exp()
                } else {
                    0.0
                }
            }
            PotentialField::PowerTail { c_q, s } => c_q * (1.0 + x.norm_squared()).powf(-s / 2.0),
            PotentialField::Grid(g) => g.sample(x).map_or(0.0, |v| v[0]),
            PotentialField::Custom(f) => f(x),
        }
    }

    /// Impedance on the obstacle surface. Zero unless the kind is Robin.
    pub fn sigma(&self, s: &Vec3) -> f64 {
        if self.boundary != BoundaryKind::Robin {
            return 0.0;
        }
        match &self.impedance {
            Impedance::Constant(v) => *v,
            Impedance::Custom { f, .. } => f(s),
        }
    }

    pub fn sigma_bound(&self) -> f64 {
        if self.boundary != BoundaryKind::Robin {
            return 0.0;
        }
        match &self.impedance {
            Impedance::Constant(v) => v.abs(),
            Impedance::Custom { bound, .. } => *bound,
        }
    }

    pub fn is_tensor_identity(&self) -> bool {
        matches!(self.tensor, TensorField::Identity)
    }

    pub fn is_potential_zero(&self) -> bool {
        matches!(self.potential, PotentialField::Zero)
    }

    pub fn potential_is_compact(&self) -> bool {
        matches!(self.decay, DecaySpec::Compact { .. })
    }

    /// Smallest radius beyond which a is known to be the identity.
    pub fn tensor_radius(&self) -> f64 {
        match &self.tensor {
            TensorField::Identity => 0.0,
            TensorField::DiagCore { radius, .. } => *radius,
            TensorField::Grid(_) | TensorField::Custom(_) => self.radius,
        }
    }

    /// Returns (min, max) eigenvalue of a over the samples.
    pub fn validate_ellipticity(&self, samples: &[Vec3]) -> Result<(f64, f64)> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("ellipticity check needs samples".into()));
        }
        let (c, big_c) = self.ellipticity;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for x in samples {
            let a = self.a(x);
            let scale = a.abs().max().max(1.0);
            if (a - a.transpose()).abs().max() > 1e-12 * scale {
                return Err(Error::Coefficient(format!("a is not symmetric at {x:?}")));
            }
            if x.norm() > self.radius && (a - Matrix3::identity()).abs().max() > 1e-12 {
                return Err(Error::Coefficient(format!(
                    "a differs from the identity at |x| = {} > R = {}",
                    x.norm(),
                    self.radius
                )));
            }
            let eig = SymmetricEigen::new(a).eigenvalues;
            let (emin, emax) = (eig.min(), eig.max());
            if emin <= 0.0 {
                return Err(Error::Coefficient(format!(
                    "a has non-positive eigenvalue {emin} at {x:?}"
                )));
            }
            if emin < c - 1e-10 || emax > big_c + 1e-10 {
                return Err(Error::Coefficient(format!(
                    "eigenvalues [{emin}, {emax}] at {x:?} outside declared [{c}, {big_c}]"
                )));
            }
            lo = lo.min(emin);
            hi = hi.max(emax);
        }
        Ok((lo, hi))
    }

    /// Largest |q(x)| (1+|x|^2)^(s/2) / c_q over spheres of the given radii.
    /// For a compactly supported q the value is the largest |q| found
    /// outside the declared support.
    pub fn validate_decay(&self, radii: &[f64]) -> Result<f64> {
        if let Some(r) = radii.iter().find(|&&r| !(r > self.radius)) {
            return Err(Error::InvalidArgument(format!(
                "decay samples must lie beyond R = {}, got {r}",
                self.radius
            )));
        }
        self.check_decay_hypothesis()?;
        let dirs = sample_directions();
        let mut worst: f64 = 0.0;
        for &r in radii {
            for d in &dirs {
                let x = d * r;
                let q = self.q(&x).abs();
                let ratio = match self.decay {
                    DecaySpec::Compact { radius } => {
                        if r > radius {
                            q
                        } else {
                            0.0
                        }
                    }
                    DecaySpec::Power { c_q, s } => q * (1.0 + r * r).powf(s / 2.0) / c_q,
                };
                let limit = match self.decay {
                    DecaySpec::Compact { .. } => 0.0,
                    DecaySpec::Power { .. } => 1.0 + 1e-9,
                };
                if ratio > limit {
                    return Err(Error::DecayViolation { radius: r, ratio });
                }
                worst = worst.max(ratio);
            }
        }
        Ok(worst)
    }

    /// s > 3 for power tails (2 < s <= 3 behind the experimental flag).
    pub fn check_decay_hypothesis(&self) -> Result<()> {
        if let DecaySpec::Power { c_q, s } = self.decay {
            if !(c_q > 0.0) {
                return Err(Error::Hypothesis(format!("decay constant must be positive, got {c_q}")));
            }
            let floor = if self.experimental_weak_decay { 2.0 } else { 3.0 };
            if !(s > floor) {
                return Err(Error::Hypothesis(format!(
                    "potential decay exponent s = {s} must exceed 3 for a non-compact q"
                )));
            }
        }
        Ok(())
    }

    /// Run all checks on `samples` (plus a fixed radial set beyond R) and
    /// seal the set for assembly.
    pub fn validate(self, samples: &[Vec3]) -> Result<ValidatedCoefficients> {
        let mut pts: Vec<Vec3> = samples.to_vec();
        let radii: Vec<f64> = [1.01, 1.5, 2.0, 4.0, 8.0, 20.0].iter().map(|f| f * self.radius.max(1e-3)).collect();
        for d in sample_directions() {
            for f in [0.25, 0.5, 0.9] {
                pts.push(d * (f * self.radius));
            }
        }
        pts.extend(radii.iter().map(|r| Vec3::new(*r, 0.0, 0.0)));
        let ellipticity = self.validate_ellipticity(&pts)?;
        let decay_ratio = self.validate_decay(&radii)?;
        if !self.sigma_bound().is_finite() {
            return Err(Error::Coefficient("impedance bound is not finite".into()));
        }
        if let Some(x) = pts.iter().find(|x| !self.q(x).is_finite()) {
            return Err(Error::Coefficient(format!("q is not finite at {x:?}")));
        }
        Ok(ValidatedCoefficients {
            inner: Arc::new(self),
            ellipticity,
            decay_ratio,
        })
    }
}

/// 26 directions: axes, face diagonals and cube diagonals.
pub fn sample_directions() -> Vec<Vec3> {
    let mut out = Vec::new();
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            for k in -1i32..=1 {
                if (i, j, k) != (0, 0, 0) {
                    out.push(Vec3::new(i as f64, j as f64, k as f64).normalize());
                }
            }
        }
    }
    out
}

/// A coefficient set that passed [`CoefficientSet::validate`].
#[derive(Debug, Clone)]
pub struct ValidatedCoefficients {
    inner: Arc<CoefficientSet>,
    ellipticity: (f64, f64),
    decay_ratio: f64,
}

impl ValidatedCoefficients {
    /// Sampled (min, max) eigenvalues of a.
    pub fn ellipticity_estimate(&self) -> (f64, f64) {
        self.ellipticity
    }

    pub fn decay_ratio(&self) -> f64 {
        self.decay_ratio
    }

    pub fn set(&self) -> &CoefficientSet {
        &self.inner
    }
}

impl Deref for ValidatedCoefficients {
    type Target = CoefficientSet;

    fn deref(&self) -> &CoefficientSet {
        &self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(r: f64) -> Vec<Vec3> {
        sample_directions()
            .into_iter()
            .flat_map(|d| [0.3, 1.0, 2.5].map(|f| d * (f * r)))
            .collect()
    }

    #[test]
    fn ellipticity_of_presets() {
        let id = CoefficientSet::identity(2.0);
        assert_eq!(id.validate_ellipticity(&cloud(2.0)).unwrap(), (1.0, 1.0));
        let mut c = CoefficientSet::identity(2.0);
        c.tensor = TensorField::DiagCore {
            diag: [2.0, 3.0, 5.0],
            radius: 2.0,
        };
        c.ellipticity = (1.0, 5.0);
        let (lo, hi) = c.validate_ellipticity(&cloud(2.0)).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 5.0).abs() < 1e-12);
        c.tensor = TensorField::Custom(Arc::new(|x: &Vec3| {
            if x.x > 0.5 {
                Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, 1.0))
            } else {
                Matrix3::identity()
            }
        }));
        assert!(c.validate_ellipticity(&[Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)]).is_err());
        c.tensor = TensorField::Custom(Arc::new(|_: &Vec3| Matrix3::new(1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)));
        assert!(c.validate_ellipticity(&[Vec3::zeros()]).is_err());
    }

    #[test]
    fn decay_ratios() {
        let radii = [3.0, 5.0, 10.0, 40.0];
        assert_eq!(CoefficientSet::identity(2.0).validate_decay(&radii).unwrap(), 0.0);
        let tail = CoefficientSet::preset("power_tail", 2.0).unwrap();
        assert!((tail.validate_decay(&radii).unwrap() - 1.0).abs() < 1e-12);
        let mut slow = tail.clone();
        slow.potential = PotentialField::Custom(Arc::new(|x: &Vec3| (1.0 + x.norm_squared()).powf(-1.0)));
        assert!(matches!(slow.validate_decay(&radii), Err(Error::DecayViolation { .. })));
        let mut weak = tail.clone();
        weak.decay = DecaySpec::Power { c_q: 1.0, s: 2.5 };
        assert!(matches!(weak.validate_decay(&radii), Err(Error::Hypothesis(_))));
        weak.experimental_weak_decay = true;
        assert!(weak.check_decay_hypothesis().is_ok());
        assert!(tail.validate_decay(&[1.0]).is_err());
    }

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            let c = CoefficientSet::preset(name, 2.0).unwrap();
            c.validate(&cloud(2.0)).unwrap();
        }
        assert!(CoefficientSet::preset("nope", 2.0).is_err());
    }

    #[test]
    fn neumann_has_no_impedance() {
        let c = CoefficientSet::identity(2.0).with_boundary(BoundaryKind::Neumann, 3.0);
        assert_eq!(c.sigma(&Vec3::x()), 0.0);
        let c = CoefficientSet::identity(2.0).with_boundary(BoundaryKind::Robin, 3.0);
        assert_eq!(c.sigma(&Vec3::x()), 3.0);
    }

    proptest::proptest! {
        #[test]
        fn ellipticity_ignores_sample_order(seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut c = CoefficientSet::identity(2.0);
            c.tensor = TensorField::Custom(Arc::new(|x: &Vec3| {
                let t = 1.5 + 0.5 * (x.x * 1.3).sin();
                Matrix3::new(t, 0.1, 0.0, 0.1, 1.0, 0.0, 0.0, 0.0, 1.2)
            }));
            c.radius = 100.0;
            c.ellipticity = (0.5, 3.0);
            let pts = cloud(2.0);
            let mut shuffled = pts.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            proptest::prop_assert_eq!(c.validate_ellipticity(&pts).unwrap(), c.validate_ellipticity(&shuffled).unwrap());
        }
    }
}
