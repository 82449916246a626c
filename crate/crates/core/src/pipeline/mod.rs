//! End-to-end runs driven by a [`RunConfig`]: mesh, validate, assemble,
//! absorb, extrapolate, represent and check.

pub mod config;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::Serialize;
use serde_json::json;

use crate::assembly::{auto_gamma, coercivity_probe, Assembler};
use crate::coefficients::{
    BoundaryKind, CoefGrid, CoefficientSet, DecaySpec, IncidentWave, PotentialField, ReducedSource, TensorField,
    ValidatedCoefficients,
};
use crate::error::{Error, Result};
use crate::field::{ComplexField, FieldSampler, C64};
use crate::geometry::{
    build_exterior_mesh_with, load_mesh, sphere_quadrature, CutoffFunction, ExteriorMesh, MeshStats, MesherOptions,
    ObstacleShape, Polyhedron, RadialGrading, Vec3,
};
use crate::lap::{run_lap, EpsilonSchedule, LapOptions, LapResult, LapStep, Verdict, WeightedNormSpec};
use crate::oracle::MieSeries;
use crate::quadrature::TET4_BARYCENTRIC;
use crate::representation::{
    cauchy_data, decay_estimate_check, default_order, far_field, far_field_volume, CauchyData, DecayCheck, DecayReport, GreenKernel,
    RepresentedField, VolumeTail, VolumeTails,
};
use crate::verification::{
    flux, radiation_residual, reduction_identity, uniqueness_probe, weak_residual, CheckEntry, Difference,
    PhysicalKey, ProbeVariant,
};

pub use config::{ObstacleConfig, RunConfig};

/// Outcome of a single check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckVerdict {
    Pass,
    Fail,
    Inconclusive,
}

impl CheckVerdict {
    fn from(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

/// Everything built from a config before solving.
pub struct Scenario {
    pub config: RunConfig,
    pub mesh: Arc<ExteriorMesh>,
    pub coefficients: ValidatedCoefficients,
    pub assembler: Assembler,
    pub wave: IncidentWave,
    pub cutoff: CutoffFunction,
    pub schedule: EpsilonSchedule,
    pub norm: WeightedNormSpec,
    pub options: LapOptions,
    pub timings: BTreeMap<String, f64>,
}

/// Solved scenario: the LAP run and the data of its exterior extension.
pub struct Solution {
    pub lap: LapResult,
    pub cauchy: CauchyData,
    pub tails: Option<VolumeTails>,
    pub kernel: GreenKernel,
}

impl Solution {
    /// Extrapolated w*.
    pub fn field(&self) -> &ComplexField {
        &self.lap.extrapolated
    }

    /// Scattered field beyond the auxiliary sphere.
    pub fn scattered(&self) -> RepresentedField<'_> {
        RepresentedField {
            cauchy: &self.cauchy,
            kernel: self.kernel,
            tails: self.tails.as_ref(),
        }
    }
}

fn obstacle_shape(cfg: &RunConfig) -> Result<ObstacleShape> {
    Ok(match &cfg.geometry.obstacle {
        ObstacleConfig::Sphere { radius } => ObstacleShape::Sphere { radius: *radius },
        ObstacleConfig::Box { half_extents } => ObstacleShape::Box {
            half_extents: *half_extents,
        },
        ObstacleConfig::Polyhedron { path } => ObstacleShape::Polyhedron(Polyhedron::load(path)?),
    })
}

/// Mesh for `cfg` at mesh size `h` (or the configured mesh file).
pub fn build_mesh(cfg: &RunConfig, h: f64) -> Result<ExteriorMesh> {
    let g = &cfg.geometry;
    if let Some(path) = &g.mesh_file {
        return load_mesh(path);
    }
    let options = MesherOptions {
        angular_reference_radius: None,
        radial_grading: match g.grading {
            config::GradingConfig::Uniform => RadialGrading::Uniform,
            config::GradingConfig::Geometric => RadialGrading::Geometric,
        },
    };
    build_exterior_mesh_with(&obstacle_shape(cfg)?, g.radius_bound, g.truncation_radius, h, &options)
}

/// Coefficient set described by the config, not yet validated.
pub fn coefficient_set(cfg: &RunConfig) -> Result<CoefficientSet> {
    let c = &cfg.coefficients;
    let radius = cfg.geometry.radius_bound;
    let mut set = CoefficientSet::preset(&c.preset, radius)?.with_boundary(c.boundary, c.sigma);
    set.experimental_weak_decay = c.experimental_weak_decay;
    if let Some(s) = c.tail_exponent {
        set.potential = PotentialField::PowerTail { c_q: 1.0, s };
        set.decay = DecaySpec::Power { c_q: 1.0, s };
    }
    let inside = |g: &CoefGrid| {
        let (lo, hi) = g.bounds();
        let corner = Vec3::new(lo.x.abs().max(hi.x.abs()), lo.y.abs().max(hi.y.abs()), lo.z.abs().max(hi.z.abs()));
        corner.norm()
    };
    if let Some(path) = &c.tensor_grid {
        let g = CoefGrid::load(path)?;
        if g.components() != 6 || inside(&g) > radius {
            return Err(Error::Config(format!(
                "tensor grid needs 6 components inside |x| <= R = {radius}"
            )));
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for v in g.nodes() {
            let v: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            let a = Matrix3::new(v[0], v[3], v[4], v[3], v[1], v[5], v[4], v[5], v[2]);
            let e = SymmetricEigen::new(a).eigenvalues;
            lo = lo.min(e.min());
            hi = hi.max(e.max());
        }
        set.ellipticity = (lo.min(1.0), hi.max(1.0));
        set.tensor = TensorField::Grid(Arc::new(g));
    }
    if let Some(path) = &c.potential_grid {
        let g = CoefGrid::load(path)?;
        if g.components() != 1 {
            return Err(Error::Config("potential grid needs 1 component".into()));
        }
        set.decay = DecaySpec::Compact { radius: inside(&g) };
        set.potential = PotentialField::Grid(Arc::new(g));
    }
    Ok(set)
}

fn seconds(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

impl Scenario {
    pub fn new(config: &RunConfig) -> Result<Self> {
        Self::with_mesh_size(config, config.geometry.mesh_size)
    }

    /// Same configuration with mesh size `h`.
    pub fn with_mesh_size(config: &RunConfig, h: f64) -> Result<Self> {
        config.validate()?;
        let mut timings = BTreeMap::new();
        let t = Instant::now();
        let mesh = Arc::new(build_mesh(config, h)?);
        timings.insert("mesh".into(), seconds(t));
        let t = Instant::now();
        let coefficients = coefficient_set(config)?.validate(&[])?;
        let wave = IncidentWave::new(config.wave.k, Vec3::from(config.wave.direction))?;
        let (r0, r1) = config.cutoff_radii();
        let cutoff = CutoffFunction::new(r0, r1)?;
        ReducedSource::new(&coefficients, wave, cutoff)?;
        let assembler = Assembler::new(mesh.clone(), &coefficients);
        timings.insert("assembly".into(), seconds(t));
        let lap = &config.lap;
        let mut schedule = EpsilonSchedule::default_for(config.wave.k);
        if let Some(e) = lap.eps0 {
            schedule.eps0 = e;
        }
        schedule.ratio = lap.ratio;
        schedule.count = lap.count;
        schedule.validate()?;
        Ok(Self {
            config: config.clone(),
            mesh,
            coefficients,
            assembler,
            wave,
            cutoff,
            schedule,
            norm: WeightedNormSpec::new(lap.norm_order, lap.weight_exponent)?,
            options: LapOptions {
                tol: lap.tolerance,
                outer: lap.outer,
                load: lap.load,
                share_factorization: lap.share_factorization,
            },
            timings,
        })
    }

    /// Physical data shared by every discretization of this scenario.
    pub fn physical_key(&self) -> PhysicalKey {
        let c = &self.config.coefficients;
        PhysicalKey {
            k: self.wave.k(),
            direction: self.config.wave.direction,
            boundary: c.boundary.as_str().into(),
            sigma: if c.boundary == BoundaryKind::Robin { c.sigma } else { 0.0 },
            coefficients: format!("{}:{:?}", c.preset, c.tail_exponent),
        }
    }

    pub fn solve(&mut self) -> Result<Solution> {
        let t = Instant::now();
        let lap = run_lap(&self.assembler, &self.wave, &self.cutoff, &self.schedule, &self.norm, &self.options)?;
        self.timings.insert("lap".into(), seconds(t));
        let t = Instant::now();
        let radius = self.config.representation_radius();
        let order = self
            .config
            .representation
            .order
            .unwrap_or_else(|| default_order(self.wave.k(), radius));
        let cauchy = cauchy_data(&lap.extrapolated, sphere_quadrature(radius, order)?)?;
        let tails = if self.coefficients.potential_is_compact() {
            None
        } else {
            let source = ReducedSource::new(&self.coefficients, self.wave, self.cutoff)?;
            Some(VolumeTails {
                source: VolumeTail::source(&lap.extrapolated, radius, |y| -source.eval(y), &self.coefficients),
                potential: VolumeTail::potential(&lap.extrapolated, radius, &self.coefficients),
            })
        };
        self.timings.insert("representation".into(), seconds(t));
        Ok(Solution {
            lap,
            cauchy,
            tails,
            kernel: GreenKernel::new(self.wave.k(), 0.0)?,
        })
    }
}

/// Deterministic part of a LAP run.
#[derive(Debug, Clone, Serialize)]
pub struct LapSummary {
    pub mesh_size: f64,
    pub dofs: usize,
    pub schedule: EpsilonSchedule,
    pub steps: Vec<LapStep>,
    pub extrapolated_norm: f64,
    pub order: Option<f64>,
    pub verdict: Verdict,
    pub apriori_max: f64,
    pub apriori_median: f64,
    pub tail_estimate: f64,
    pub factorizations: usize,
}

impl LapSummary {
    pub fn new(lap: &LapResult, mesh_size: f64) -> Self {
        Self {
            mesh_size,
            dofs: lap.extrapolated.values().len(),
            schedule: lap.schedule,
            steps: lap.steps.clone(),
            extrapolated_norm: lap.extrapolated_norm,
            order: lap.order,
            verdict: lap.verdict,
            apriori_max: lap.apriori.max,
            apriori_median: lap.apriori.median,
            tail_estimate: lap.tail_estimate,
            factorizations: lap.factorizations,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationSummary {
    pub ellipticity: (f64, f64),
    pub decay_ratio: f64,
    pub hypotheses: Vec<String>,
}

/// A check with its verdict.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictEntry {
    #[serde(flatten)]
    pub check: CheckEntry,
    pub verdict: CheckVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct FarFieldRow {
    pub theta: f64,
    pub phi: f64,
    pub value: C64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub mesh_size: f64,
    pub dofs: usize,
    pub verdict: Verdict,
    pub shell_error: f64,
    pub shell_error_last_iterate: f64,
    /// Surface route through the Cauchy data.
    pub far_field_error: f64,
    /// Volume route through a cut-off shell.
    pub far_field_error_volume: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub shell: (f64, f64),
    pub rows: Vec<OracleRow>,
    pub tolerance: f64,
    pub monotone: bool,
}

/// Machine-readable summary of one command.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lap: Option<LapSummary>,
    pub checks: Vec<VerdictEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub far_field: Vec<FarFieldRow>,
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.seed,
            config: config.clone(),
            mesh: None,
            validation: None,
            lap: None,
            checks: Vec::new(),
            oracle: None,
            decay: None,
            far_field: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    fn push(&mut self, check: CheckEntry, verdict: CheckVerdict) {
        self.checks.push(VerdictEntry { check, verdict });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == CheckVerdict::Pass)
    }

    /// Pretty JSON; timings are dropped unless requested.
    pub fn to_json(&self, with_timings: bool) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if !with_timings {
            v.as_object_mut().expect("object").remove("timings");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    /// Text table of the check verdicts.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        if let Some(lap) = &self.lap {
            s.push_str(&format!(
                "lap: h = {} dofs = {} verdict = {:?} order = {}\n",
                lap.mesh_size,
                lap.dofs,
                lap.verdict,
                lap.order.map_or("-".into(), |p| format!("{p:.3}"))
            ));
        }
        for c in &self.checks {
            s.push_str(&format!("{:<28} {:?}\n", c.check.name, c.verdict));
        }
        if let Some(o) = &self.oracle {
            s.push_str("h        shell_err  last_iter  ff_surface ff_volume\n");
            for r in &o.rows {
                s.push_str(&format!(
                    "{:<8} {:<10.5} {:<10.5} {:<10.5} {:.5}\n",
                    r.mesh_size, r.shell_error, r.shell_error_last_iterate, r.far_field_error, r.far_field_error_volume
                ));
            }
        }
        if let Some(d) = &self.decay {
            s.push_str("radius   scaled     gap\n");
            for x in &d.samples {
                s.push_str(&format!("{:<8} {:<10.5} {:.2e}\n", x.radius, x.scaled, x.resolution_gap));
            }
        }
        s
    }
}

fn validation_summary(sc: &Scenario) -> ValidationSummary {
    let c = &sc.coefficients;
    let mut hypotheses = vec![
        format!("a symmetric, eigenvalues in {:?}", c.ellipticity_estimate()),
        format!("a = identity beyond |x| = {}", c.tensor_radius()),
        format!("cut-off radii ({}, {})", sc.cutoff.inner(), sc.cutoff.outer()),
        format!("weight exponent s = {} > 1", sc.norm.s),
    ];
    match c.decay {
        DecaySpec::Compact { radius } => hypotheses.push(format!("q supported in |x| <= {radius}")),
        DecaySpec::Power { c_q, s } => hypotheses.push(format!("|q| <= {c_q} (1 + |x|^2)^(-{s}/2), s > 3")),
    }
    ValidationSummary {
        ellipticity: c.ellipticity_estimate(),
        decay_ratio: c.decay_ratio(),
        hypotheses,
    }
}

/// Far-field directions on a theta x phi grid.
pub fn direction_grid(n_theta: usize, n_phi: usize) -> Vec<(f64, f64, Vec3)> {
    let mut out = Vec::new();
    for i in 0..n_theta {
        let theta = PI * i as f64 / (n_theta - 1) as f64;
        for j in 0..n_phi {
            let phi = 2.0 * PI * j as f64 / n_phi as f64;
            let d = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            out.push((theta, phi, d));
        }
    }
    out
}

/// Checks every run performs on its own solution.
fn solution_checks(sc: &Scenario, sol: &Solution, report: &mut RunReport) -> Result<()> {
    let lap = &sol.lap;
    let cfg = &sc.config;
    let r_bound = cfg.geometry.radius_bound;
    report.push(
        CheckEntry::new(
            "lap_convergence",
            json!({"schedule": lap.schedule, "norm": lap.norm_spec}),
            json!({"increments": lap.increments(), "order": lap.order, "verdict": lap.verdict}),
            json!({"tolerance": lap.tolerance, "monotone_steps": 3}),
        ),
        if lap.verdict == Verdict::Converged {
            CheckVerdict::Pass
        } else {
            CheckVerdict::Inconclusive
        },
    );
    report.push(
        CheckEntry::new(
            "apriori_bound",
            json!({"steps": lap.steps.len()}),
            json!({"max": lap.apriori.max, "median": lap.apriori.median}),
            json!({"factor": 10.0}),
        ),
        CheckVerdict::from(lap.apriori.holds),
    );
    let sys0 = sc
        .assembler
        .absorbed(&sc.wave, 0.0, &sc.cutoff, sc.options.outer, sc.options.load)?;
    let weak = weak_residual(&lap.extrapolated, &sys0, cfg.verification.weak_trials, cfg.seed)?;
    report.push(
        CheckEntry::new(
            "weak_residual",
            json!({"eps": 0.0, "trials": weak.trials, "seed": weak.seed}),
            json!({"max_defect": weak.max_defect}),
            json!({"max": cfg.verification.weak_threshold}),
        ),
        CheckVerdict::from(weak.max_defect <= cfg.verification.weak_threshold),
    );
    let field = sol.scattered();
    let order = sol.cauchy.quadrature().order();
    let radii: Vec<f64> = cfg.verification.radiation_factors.iter().map(|f| f * r_bound).collect();
    let rad = radiation_residual(&field, &radii, sc.wave.k(), order)?;
    report.push(
        CheckEntry::new(
            "radiation_residual",
            json!({"radii": radii, "order": order}),
            json!({"residuals": rad.entries}),
            json!({"rule": "strictly decreasing"}),
        ),
        CheckVerdict::from(rad.strictly_decreasing()),
    );
    let fl = flux(&field, 10.0 * r_bound, order, "represented scattered field")?;
    report.push(
        CheckEntry::new(
            "flux_imaginary",
            json!({"radius": fl.radius, "order": fl.order, "label": fl.label}),
            json!({"flux": fl.value}),
            json!({"max_real_part": "1e-8 (1 + |flux|)"}),
        ),
        CheckVerdict::from(fl.is_imaginary()),
    );
    // |x| (|psi| + |grad psi|) should settle over the radiation radii.
    let dirs = crate::coefficients::sample_directions();
    let mut scaled = Vec::new();
    for &r in &radii {
        let mut sup: f64 = 0.0;
        for d in &dirs {
            let (v, g) = field.sample(&(d * r))?;
            sup = sup.max(r * (v.norm() + g.norm()));
        }
        scaled.push(sup);
    }
    let settled = scaled.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    report.push(
        CheckEntry::new(
            "uniform_decay",
            json!({"radii": radii, "directions": dirs.len()}),
            json!({"scaled_sup": scaled}),
            json!({"growth_per_step": 1.1}),
        ),
        CheckVerdict::from(settled),
    );
    let grid = direction_grid(cfg.representation.far_field_theta, cfg.representation.far_field_phi);
    let betas: Vec<Vec3> = grid.iter().map(|g| g.2).collect();
    let amp = far_field(&sol.cauchy, sc.wave.k(), &betas)?;
    report.far_field = grid
        .iter()
        .zip(&amp)
        .map(|((t, p, _), v)| FarFieldRow {
            theta: *t,
            phi: *p,
            value: *v,
        })
        .collect();
    if sol.tails.is_none() {
        let scale = amp.iter().map(|a| a.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let k = sc.wave.k();
        let gap = |r: f64| -> Result<f64> {
            let mut worst: f64 = 0.0;
            for (b, a) in betas.iter().zip(&amp) {
                let v = field.value(&(b * r))?;
                worst = worst.max((v * r * C64::from_polar(1.0, -k * r) - a).norm());
            }
            Ok(worst / scale)
        };
        let near = gap(25.0 * r_bound)?;
        let far = gap(50.0 * r_bound)?;
        report.push(
            CheckEntry::new(
                "far_field_consistency",
                json!({"radii": [25.0 * r_bound, 50.0 * r_bound], "directions": betas.len()}),
                json!({"relative_gap": [near, far]}),
                json!({"max_ratio_far_to_near": 0.6}),
            ),
            CheckVerdict::from(far <= 0.6 * near),
        );
    }
    Ok(())
}

fn write_artifacts(sc: &Scenario, sol: &Solution, report: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    sc.mesh.save(dir.join("mesh.txt"))?;
    std::fs::write(dir.join("field.txt"), sol.field().to_text("mesh.txt"))?;
    std::fs::write(dir.join("convergence.csv"), sol.lap.convergence_csv())?;
    let mut ff = String::from("theta,phi,re,im,abs\n");
    for r in &report.far_field {
        ff.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            r.theta,
            r.phi,
            r.value.re,
            r.value.im,
            r.value.norm()
        ));
    }
    std::fs::write(dir.join("far_field.csv"), ff)?;
    if sc.config.output.export_matrix {
        let sys = sc
            .assembler
            .absorbed(&sc.wave, 0.0, &sc.cutoff, sc.options.outer, sc.options.load)?;
        let file = std::fs::File::create(dir.join("matrix.txt"))?;
        sys.matrix().write_coordinate(std::io::BufWriter::new(file))?;
    }
    Ok(())
}

/// Write the JSON report next to the other artifacts.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report.to_json(true))?;
    Ok(())
}

fn solve_into(cfg: &RunConfig, command: &str) -> Result<(Scenario, Solution, RunReport)> {
    let mut report = RunReport::new(command, cfg);
    let mut sc = Scenario::new(cfg)?;
    report.mesh = Some(sc.mesh.stats());
    report.validation = Some(validation_summary(&sc));
    let sol = sc.solve()?;
    report.lap = Some(LapSummary::new(&sol.lap, cfg.geometry.mesh_size));
    let t = Instant::now();
    solution_checks(&sc, &sol, &mut report)?;
    sc.timings.insert("checks".into(), seconds(t));
    Ok((sc, sol, report))
}

/// Solve, represent, check and (if `write`) store the artifacts.
pub fn cmd_solve(cfg: &RunConfig, write: bool) -> Result<RunReport> {
    let (sc, sol, mut report) = solve_into(cfg, "solve")?;
    report.timings = sc.timings.clone();
    if write {
        write_artifacts(&sc, &sol, &report, &cfg.output.directory)?;
        write_report(&report, &cfg.output.directory)?;
    }
    Ok(report)
}

/// Solve plus the cross-discretization checks.
pub fn cmd_verify(cfg: &RunConfig, write: bool) -> Result<RunReport> {
    let (mut sc, sol, mut report) = solve_into(cfg, "verify")?;
    let eps = cfg.verification.reduction_eps;
    let t = Instant::now();
    let red = reduction_identity(&sc.assembler, &sc.wave, &sc.cutoff, eps, sc.options.outer)?;
    report.push(
        CheckEntry::new(
            "reduction_identity",
            json!({"eps": red.eps}),
            json!({"max_nodal_difference": red.max_nodal_difference, "max_abs_total": red.max_abs_total}),
            json!({"max": 1e-8}),
        ),
        CheckVerdict::from(red.max_nodal_difference <= 1e-8),
    );
    sc.timings.insert("reduction".into(), seconds(t));

    let t = Instant::now();
    let ladder = cfg.ladder();
    let mut variants = Vec::new();
    for &h in &ladder {
        let field = if h == cfg.geometry.mesh_size {
            sol.field().clone()
        } else {
            Scenario::with_mesh_size(cfg, h)?.solve()?.lap.extrapolated
        };
        variants.push(ProbeVariant {
            label: format!("h={h}"),
            key: sc.physical_key(),
            field,
        });
    }
    let uq = uniqueness_probe(&variants, &sc.norm)?;
    report.push(
        CheckEntry::new(
            "uniqueness_consistency",
            json!({"ladder": ladder}),
            serde_json::to_value(&uq)?,
            json!({"rule": "strictly decreasing consecutive discrepancies"}),
        ),
        CheckVerdict::from(uq.strictly_decreasing),
    );
    let (r0, _) = cfg.cutoff_radii();
    let fr = cfg
        .verification
        .flux_radius
        .unwrap_or(0.5 * (sc.mesh.obstacle_circumradius() + r0).max(cfg.geometry.radius_bound));
    let order = default_order(sc.wave.k(), fr);
    let mut fluxes = Vec::new();
    for pair in variants.windows(2) {
        let d = Difference(&pair[0].field, &pair[1].field);
        fluxes.push(flux(&d, fr, order, &format!("{} - {}", pair[0].label, pair[1].label))?.value.norm());
    }
    report.push(
        CheckEntry::new(
            "flux_trend",
            json!({"ladder": ladder, "radius": fr, "order": order}),
            json!({"abs_flux_of_differences": fluxes}),
            json!({"rule": "decreasing under refinement"}),
        ),
        CheckVerdict::from(fluxes.windows(2).all(|w| w[1] < w[0])),
    );
    sc.timings.insert("ladder".into(), seconds(t));

    let t = Instant::now();
    let gamma = auto_gamma(&sc.assembler)?;
    let bg = sc.assembler.bgamma(gamma)?;
    if bg.num_dofs() <= cfg.verification.coercivity_max_dofs {
        let est = coercivity_probe(&bg, &sc.assembler.h1_gram(bg.dofs()))?;
        report.push(
            CheckEntry::new(
                "coercivity",
                json!({"gamma": gamma, "dofs": bg.num_dofs()}),
                serde_json::to_value(&est)?,
                json!({"beta1_min": 0.0}),
            ),
            CheckVerdict::from(est.beta1 > 0.0),
        );
    }
    sc.timings.insert("coercivity".into(), seconds(t));
    report.timings = sc.timings.clone();
    if write {
        write_artifacts(&sc, &sol, &report, &cfg.output.directory)?;
        write_report(&report, &cfg.output.directory)?;
    }
    Ok(report)
}

/// Relative L2 error of u = w + zeta u0 against `exact` on r_lo <= |x| <= r_hi.
pub fn shell_relative_error(
    w: &ComplexField,
    wave: &IncidentWave,
    cutoff: &CutoffFunction,
    exact: &dyn FieldSampler,
    (r_lo, r_hi): (f64, f64),
) -> Result<f64> {
    let mesh = w.mesh();
    let (mut num, mut den) = (0.0, 0.0);
    for (c, cell) in mesh.cells().iter().enumerate() {
        let pts = mesh.cell_points(c);
        let vol = mesh.signed_volume(c);
        for b in TET4_BARYCENTRIC {
            let x = pts[0] * b[0] + pts[1] * b[1] + pts[2] * b[2] + pts[3] * b[3];
            let r = x.norm();
            if r < r_lo || r > r_hi {
                continue;
            }
            let wv: C64 = (0..4).map(|i| w.values()[cell[i]] * b[i]).sum();
            let u = wv + wave.eval(&x).0 * cutoff.value(&x);
            let e = exact.value(&x)?;
            num += vol / 4.0 * (u - e).norm_sqr();
            den += vol / 4.0 * e.norm_sqr();
        }
    }
    if den == 0.0 {
        return Err(Error::InvalidArgument("empty or zero comparison shell".into()));
    }
    Ok((num / den).sqrt())
}

/// Cut-off shell of the volume far-field route: from max(R, r1) to the
/// midpoint between there and rho.
pub fn far_field_shell(cfg: &RunConfig) -> Result<CutoffFunction> {
    let (_, r1) = cfg.cutoff_radii();
    let a = cfg.geometry.radius_bound.max(r1);
    CutoffFunction::new(a, 0.5 * (a + cfg.geometry.truncation_radius))
}

/// The oracle series matching an oracle-compatible config.
pub fn oracle_for(cfg: &RunConfig) -> Result<MieSeries> {
    let radius = match cfg.geometry.obstacle {
        ObstacleConfig::Sphere { radius } if cfg.geometry.mesh_file.is_none() => radius,
        _ => return Err(Error::Config("oracle comparison needs a meshed sphere obstacle".into())),
    };
    let c = &cfg.coefficients;
    if c.preset != "identity" || c.tensor_grid.is_some() || c.potential_grid.is_some() {
        return Err(Error::Config("oracle comparison needs a = identity and q = 0".into()));
    }
    let sigma = if c.boundary == BoundaryKind::Robin { c.sigma } else { 0.0 };
    MieSeries::new(radius, cfg.wave.k, c.boundary, sigma)?.with_direction(Vec3::from(cfg.wave.direction))
}

/// Shell and far-field errors against the series solution over the
/// configured mesh sizes.
pub fn cmd_oracle_compare(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mie = oracle_for(cfg)?;
    let mut report = RunReport::new("oracle-compare", cfg);
    let mut sizes = cfg.oracle.mesh_sizes.clone();
    if sizes.is_empty() {
        sizes.push(cfg.geometry.mesh_size);
    }
    let r_bound = cfg.geometry.radius_bound;
    let shell = (r_bound, 2.0 * r_bound);
    let grid = direction_grid(cfg.representation.far_field_theta, cfg.representation.far_field_phi);
    let betas: Vec<Vec3> = grid.iter().map(|g| g.2).collect();
    let exact_ff: Vec<C64> = betas.iter().map(|b| mie.far_field(b)).collect();
    let ff_scale = exact_ff.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut rows = Vec::new();
    for &h in &sizes {
        let mut sc = Scenario::with_mesh_size(cfg, h)?;
        let sol = sc.solve()?;
        let total = mie.total_field();
        let shell_error = shell_relative_error(sol.field(), &sc.wave, &sc.cutoff, &total, shell)?;
        let last = sol.lap.fields.last().expect("non-empty schedule");
        let shell_last = shell_relative_error(last, &sc.wave, &sc.cutoff, &total, shell)?;
        let ff = far_field(&sol.cauchy, sc.wave.k(), &betas)?;
        let max_gap = |ff: &[C64]| ff.iter().zip(&exact_ff).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / ff_scale;
        let far_field_error = max_gap(&ff);
        let ffv = far_field_volume(sol.field(), &far_field_shell(cfg)?, sc.wave.k(), &betas)?;
        let far_field_error_volume = max_gap(&ffv);
        for (k, v) in &sc.timings {
            report.timings.insert(format!("h={h}/{k}"), *v);
        }
        rows.push(OracleRow {
            mesh_size: h,
            dofs: sol.lap.extrapolated.values().len(),
            verdict: sol.lap.verdict,
            shell_error,
            shell_error_last_iterate: shell_last,
            far_field_error,
            far_field_error_volume,
        });
        if h == *sizes.last().expect("non-empty") {
            report.mesh = Some(sc.mesh.stats());
            report.lap = Some(LapSummary::new(&sol.lap, h));
        }
    }
    let mut by_h = rows.clone();
    by_h.sort_by(|a, b| b.mesh_size.total_cmp(&a.mesh_size));
    let monotone = by_h.windows(2).all(|w| w[1].shell_error < w[0].shell_error);
    let tolerance = cfg.oracle.shell_tolerance.unwrap_or(0.10);
    let finest = by_h.last().expect("non-empty");
    report.push(
        CheckEntry::new(
            "oracle_shell_error",
            json!({"shell": shell, "mesh_sizes": sizes}),
            json!({"finest": finest.shell_error}),
            json!({"max": tolerance}),
        ),
        CheckVerdict::from(finest.shell_error <= tolerance),
    );
    if rows.len() > 1 {
        report.push(
            CheckEntry::new(
                "oracle_refinement_trend",
                json!({"mesh_sizes": sizes}),
                json!({"shell_errors": by_h.iter().map(|r| r.shell_error).collect::<Vec<_>>()}),
                json!({"rule": "strictly decreasing as h decreases"}),
            ),
            CheckVerdict::from(monotone),
        );
    }
    report.oracle = Some(OracleReport {
        shell,
        rows,
        tolerance,
        monotone,
    });
    report.far_field = grid
        .iter()
        .zip(&exact_ff)
        .map(|((t, p, _), v)| FarFieldRow {
            theta: *t,
            phi: *p,
            value: *v,
        })
        .collect();
    Ok(report)
}

/// Scaled volume potentials of a power-law density.
pub fn cmd_decay_check(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut report = RunReport::new("decay-check", cfg);
    let r = cfg.geometry.radius_bound;
    let mut check = DecayCheck::new(cfg.wave.k, cfg.decay.c_q, cfg.decay.s, r);
    check.experimental_weak_decay = cfg.coefficients.experimental_weak_decay;
    if !cfg.decay.radius_factors.is_empty() {
        check.sample_radii = cfg.decay.radius_factors.iter().map(|f| f * r).collect();
    }
    let t = Instant::now();
    let psi = if cfg.decay.with_field {
        let mut sc = Scenario::new(cfg)?;
        Some(sc.solve()?.lap.extrapolated)
    } else {
        None
    };
    let rep = decay_estimate_check(&check, psi.as_ref())?;
    report.timings.insert("decay".into(), seconds(t));
    report.push(
        CheckEntry::new(
            "decay_estimate",
            json!({"k": check.k, "c_q": check.c_q, "s": check.s, "radii": check.sample_radii}),
            json!({"variation": rep.variation, "max_resolution_gap": rep.max_resolution_gap}),
            json!({"max_variation": 0.2, "max_resolution_gap": 0.01}),
        ),
        CheckVerdict::from(rep.passed),
    );
    report.decay = Some(rep);
    Ok(report)
}

/// Mesh statistics, optionally saving the mesh.
pub fn cmd_mesh_info(cfg: &RunConfig, save: Option<&Path>) -> Result<RunReport> {
    cfg.validate()?;
    let mut report = RunReport::new("mesh-info", cfg);
    let t = Instant::now();
    let mesh = build_mesh(cfg, cfg.geometry.mesh_size)?;
    report.timings.insert("mesh".into(), seconds(t));
    if let Some(p) = save {
        mesh.save(p)?;
    }
    report.mesh = Some(mesh.stats());
    Ok(report)
}

/// Configure the rayon pool once; later calls are ignored.
pub fn init_threads(threads: usize) {
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}
