use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::{LoadMode, OuterCondition};
use crate::coefficients::BoundaryKind;
use crate::error::{Error, Result};

/// Full description of a run, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Worker threads for assembly; 0 picks the machine default.
    #[serde(default)]
    pub threads: usize,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub coefficients: CoefficientConfig,
    #[serde(default)]
    pub wave: WaveConfig,
    #[serde(default)]
    pub cutoff: CutoffConfig,
    #[serde(default)]
    pub lap: LapConfig,
    #[serde(default)]
    pub representation: RepresentationConfig,
    #[serde(default)]
    pub verification: VerificationConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleConfig {
    Sphere { radius: f64 },
    Box { half_extents: [f64; 3] },
    Polyhedron { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradingConfig {
    #[default]
    Uniform,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub obstacle: ObstacleConfig,
    /// R: coefficients are trivial beyond this radius.
    pub radius_bound: f64,
    /// rho.
    pub truncation_radius: f64,
    /// h.
    pub mesh_size: f64,
    #[serde(default)]
    pub grading: GradingConfig,
    /// Read this mesh instead of meshing the obstacle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub preset: String,
    pub boundary: BoundaryKind,
    /// Constant impedance, used for Robin only.
    pub sigma: f64,
    /// Overrides the power-tail exponent s of the `power_tail` preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor_grid: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential_grid: Option<PathBuf>,
    #[serde(default)]
    pub experimental_weak_decay: bool,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self {
            preset: "identity".into(),
            boundary: BoundaryKind::Dirichlet,
            sigma: 0.0,
            tail_exponent: None,
            tensor_grid: None,
            potential_grid: None,
            experimental_weak_decay: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    pub k: f64,
    pub direction: [f64; 3],
}

impl Default for WaveConfig {
    fn default() -> Self {
        Self {
            k: 1.0,
            direction: [0.0, 0.0, 1.0],
        }
    }
}

/// Cut-off radii r0 < r1; defaults sit between R and rho.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LapConfig {
    /// Defaults to 0.4 k^2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps0: Option<f64>,
    pub ratio: f64,
    pub count: usize,
    /// Weight exponent s of the monitoring norm.
    pub weight_exponent: f64,
    pub norm_order: u8,
    pub tolerance: f64,
    pub outer: OuterCondition,
    pub load: LoadMode,
    pub share_factorization: bool,
}

impl Default for LapConfig {
    fn default() -> Self {
        Self {
            eps0: None,
            ratio: 0.5,
            count: 6,
            weight_exponent: 2.0,
            norm_order: 0,
            tolerance: 0.05,
            outer: OuterCondition::Sommerfeld,
            load: LoadMode::Galerkin,
            share_factorization: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationConfig {
    /// Radius of the auxiliary sphere; defaults to max(R, r1) + h.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Surface quadrature order; defaults to 2 (k radius + 10).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default = "default_theta")]
    pub far_field_theta: usize,
    #[serde(default = "default_phi")]
    pub far_field_phi: usize,
}

impl Default for RepresentationConfig {
    fn default() -> Self {
        Self {
            radius: None,
            order: None,
            far_field_theta: default_theta(),
            far_field_phi: default_phi(),
        }
    }
}

fn default_theta() -> usize {
    7
}

fn default_phi() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationConfig {
    /// Multiples of R for the radiation check.
    pub radiation_factors: Vec<f64>,
    pub weak_trials: usize,
    pub weak_threshold: f64,
    /// Absorption used by the reduction check.
    pub reduction_eps: f64,
    /// Mesh sizes of the uniqueness and flux-trend ladders; empty means
    /// [2h, sqrt(2) h, h].
    #[serde(default)]
    pub ladder: Vec<f64>,
    /// Flux-trend sphere radius; defaults to (R + r0) / 2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux_radius: Option<f64>,
    /// Run the coercivity probe when the free dofs stay below this count.
    pub coercivity_max_dofs: usize,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            radiation_factors: vec![5.0, 10.0, 20.0, 40.0],
            weak_trials: 20,
            weak_threshold: 1e-3,
            reduction_eps: 0.1,
            ladder: Vec::new(),
            flux_radius: None,
            coercivity_max_dofs: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Mesh sizes to compare; empty means the geometry's h.
    #[serde(default)]
    pub mesh_sizes: Vec<f64>,
    /// Shell error bar for the finest size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub c_q: f64,
    pub s: f64,
    /// Multiples of R; empty means the built-in sample set.
    #[serde(default)]
    pub radius_factors: Vec<f64>,
    /// Also evaluate the potential weighted by the solved field.
    #[serde(default)]
    pub with_field: bool,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            c_q: 1.0,
            s: 3.5,
            radius_factors: Vec::new(),
            with_field: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Also write the eps = 0 matrix in coordinate form.
    #[serde(default)]
    pub export_matrix: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            export_matrix: false,
        }
    }
}

impl RunConfig {
    /// Unit Dirichlet sphere, k = 1, R = 2, rho = 6.
    pub fn sphere_preset(h: f64) -> Self {
        Self {
            seed: 1,
            threads: 0,
            geometry: GeometryConfig {
                obstacle: ObstacleConfig::Sphere { radius: 1.0 },
                radius_bound: 2.0,
                truncation_radius: 6.0,
                mesh_size: h,
                grading: GradingConfig::Uniform,
                mesh_file: None,
            },
            coefficients: CoefficientConfig::default(),
            wave: WaveConfig::default(),
            cutoff: CutoffConfig {
                inner: Some(2.5),
                outer: Some(3.5),
            },
            lap: LapConfig::default(),
            representation: RepresentationConfig::default(),
            verification: VerificationConfig::default(),
            oracle: OracleConfig::default(),
            decay: DecayConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ObstacleConfig::Polyhedron { path } = &mut self.geometry.obstacle {
            fix(path);
        }
        for p in [
            &mut self.geometry.mesh_file,
            &mut self.coefficients.tensor_grid,
            &mut self.coefficients.potential_grid,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// (r0, r1) with defaults splitting [R, rho] into thirds.
    pub fn cutoff_radii(&self) -> (f64, f64) {
        let g = &self.geometry;
        let third = (g.truncation_radius - g.radius_bound) / 3.0;
        (
            self.cutoff.inner.unwrap_or(g.radius_bound + third),
            self.cutoff.outer.unwrap_or(g.radius_bound + 2.0 * third),
        )
    }

    /// Auxiliary sphere radius for the representation.
    pub fn representation_radius(&self) -> f64 {
        let (_, r1) = self.cutoff_radii();
        self.representation
            .radius
            .unwrap_or(self.geometry.radius_bound.max(r1) + self.geometry.mesh_size)
    }

    pub fn ladder(&self) -> Vec<f64> {
        if self.verification.ladder.is_empty() {
            let h = self.geometry.mesh_size;
            vec![2.0 * h, std::f64::consts::SQRT_2 * h, h]
        } else {
            self.verification.ladder.clone()
        }
    }

    /// Non-compact potential: the power-tail preset or nothing.
    pub fn potential_is_compact(&self) -> bool {
        self.coefficients.preset != "power_tail"
    }

    /// Checks that need no mesh or solve.
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        pos("geometry.radius_bound", g.radius_bound)?;
        pos("geometry.truncation_radius", g.truncation_radius)?;
        pos("geometry.mesh_size", g.mesh_size)?;
        pos("wave.k", self.wave.k)?;
        if !(g.radius_bound < g.truncation_radius) {
            return Err(Error::Config("need R < rho".into()));
        }
        let (r0, r1) = self.cutoff_radii();
        if !(r0 < r1 && r1 < g.truncation_radius) {
            return Err(Error::Config(format!("cut-off radii need r0 < r1 < rho, got {r0}, {r1}")));
        }
        let d = self.wave.direction;
        if ((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() - 1.0).abs() > 1e-12 {
            return Err(Error::Config("wave.direction must be a unit vector".into()));
        }
        if !(self.lap.weight_exponent > 1.0) {
            return Err(Error::Config(format!(
                "lap.weight_exponent s must exceed 1, got {}",
                self.lap.weight_exponent
            )));
        }
        if self.lap.norm_order > 1 {
            return Err(Error::Config("lap.norm_order must be 0 or 1".into()));
        }
        let floor = if self.coefficients.experimental_weak_decay { 2.0 } else { 3.0 };
        if !self.potential_is_compact() {
            let s = self.coefficients.tail_exponent.unwrap_or(3.5);
            if !(s > floor) {
                return Err(Error::Config(format!(
                    "non-compact potential needs decay exponent s > 3, got s = {s}"
                )));
            }
        }
        if !(self.decay.s > floor) {
            return Err(Error::Config(format!("decay.s must exceed 3, got {}", self.decay.s)));
        }
        if self.coefficients.boundary == BoundaryKind::Robin && !self.coefficients.sigma.is_finite() {
            return Err(Error::Config("coefficients.sigma must be finite".into()));
        }
        if self.coefficients.tail_exponent.is_some() && self.potential_is_compact() {
            return Err(Error::Config("tail_exponent applies to the power_tail preset only".into()));
        }
        if self.representation.far_field_theta < 2 || self.representation.far_field_phi < 1 {
            return Err(Error::Config("far-field grid needs theta >= 2 and phi >= 1".into()));
        }
        if self.ladder().iter().any(|h| !(*h > 0.0)) || self.oracle.mesh_sizes.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::Config("mesh sizes must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::sphere_preset(0.25);
        cfg.coefficients.boundary = BoundaryKind::Robin;
        cfg.coefficients.sigma = 1.0;
        cfg.lap.eps0 = Some(0.3);
        let text = cfg.to_toml();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let text = r#"
            [geometry]
            obstacle = { shape = "sphere", radius = 1.0 }
            radius_bound = 2.0
            truncation_radius = 6.0
            mesh_size = 0.5
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.lap, LapConfig::default());
        assert_eq!(cfg.cutoff_radii(), (2.0 + 4.0 / 3.0, 2.0 + 8.0 / 3.0));
    }

    #[test]
    fn hypotheses_are_enforced() {
        let mut cfg = RunConfig::sphere_preset(0.5);
        cfg.lap.weight_exponent = 0.5;
        assert!(matches!(cfg.validate(), Err(Error::Config(m)) if m.contains("exceed 1")));
        let mut cfg = RunConfig::sphere_preset(0.5);
        cfg.coefficients.preset = "power_tail".into();
        cfg.coefficients.tail_exponent = Some(2.5);
        assert!(matches!(cfg.validate(), Err(Error::Config(m)) if m.contains("s > 3")));
        cfg.coefficients.experimental_weak_decay = true;
        assert!(cfg.validate().is_ok());
        let mut cfg = RunConfig::sphere_preset(0.5);
        cfg.cutoff.outer = Some(7.0);
        assert!(cfg.validate().is_err());
        assert!(RunConfig::from_toml("[geometry]\nbogus = 1\n").is_err());
    }
}
