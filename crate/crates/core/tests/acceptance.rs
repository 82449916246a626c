//! Acceptance gate: one line per criterion, then a hard assert.
//!
//! The table goes straight to stderr so it shows without `--nocapture`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use lapscat::assembly::{auto_gamma, coercivity_probe, Assembler};
use lapscat::coefficients::{BoundaryKind, CoefficientSet};
use lapscat::field::{AnalyticField, C64};
use lapscat::geometry::{build_exterior_mesh, ObstacleShape, Vec3};
use lapscat::lap::{LapResult, Verdict};
use lapscat::oracle::special::spherical_jn;
use lapscat::pipeline::{cmd_solve, oracle_for, shell_relative_error, RunConfig, Scenario, Solution};
use lapscat::representation::{decay_estimate_check, DecayCheck, GreenKernel};
use lapscat::verification::{
    flux, radiation_residual, reduction_identity, uniqueness_probe, Difference, ProbeVariant,
};

struct Line {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
    seconds: f64,
}

fn sphere(boundary: BoundaryKind, sigma: f64, h: f64) -> RunConfig {
    let mut cfg = RunConfig::sphere_preset(h);
    cfg.coefficients.boundary = boundary;
    cfg.coefficients.sigma = sigma;
    cfg
}

fn shell_error(cfg: &RunConfig, sc: &Scenario, sol: &Solution) -> f64 {
    let mie = oracle_for(cfg).unwrap();
    let r = cfg.geometry.radius_bound;
    shell_relative_error(sol.field(), &sc.wave, &sc.cutoff, &mie.total_field(), (r, 2.0 * r)).unwrap()
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn tail_monotone(lap: &LapResult) -> bool {
    let inc = lap.increments();
    let tail = &inc[inc.len().saturating_sub(3)..];
    tail.len() == 3 && tail.windows(2).all(|w| w[1] < w[0])
}

#[test]
fn acceptance_criteria() {
    let mut lines: Vec<Line> = Vec::new();
    let mut laps: Vec<(String, LapResult)> = Vec::new();

    // Dirichlet ladder, shared by criteria 1, 5c, 6, 8 and 9.
    let t = Instant::now();
    let ladder = [0.5, 0.35, 0.25];
    let mut runs = Vec::new();
    for h in ladder {
        let cfg = sphere(BoundaryKind::Dirichlet, 0.0, h);
        let mut sc = Scenario::new(&cfg).unwrap();
        let sol = sc.solve().unwrap();
        let err = shell_error(&cfg, &sc, &sol);
        runs.push((cfg, sc, sol, err));
    }
    let errors: Vec<f64> = runs.iter().map(|r| r.3).collect();
    let finest = errors[2];
    lines.push(Line {
        id: 1,
        name: "oracle equivalence, Dirichlet sphere",
        passed: finest <= 0.10 && errors.windows(2).all(|w| w[1] < w[0]),
        detail: format!("shell errors {errors:.4?} over h {ladder:?}; bar 0.10 at h = 0.25, strictly decreasing"),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let mut extra = Vec::new();
    let mut fields = Vec::new();
    for (kind, sigma) in [
        (BoundaryKind::Neumann, 0.0),
        (BoundaryKind::Robin, 1.0),
        (BoundaryKind::Robin, 0.0),
    ] {
        let cfg = sphere(kind, sigma, 0.25);
        let mut sc = Scenario::new(&cfg).unwrap();
        let sol = sc.solve().unwrap();
        extra.push((format!("{} sigma={sigma}", kind.as_str()), shell_error(&cfg, &sc, &sol)));
        fields.push(sol.field().clone());
        laps.push((format!("{} sigma={sigma}", kind.as_str()), sol.lap));
    }
    let scale = fields[0].max_abs();
    let robin_gap = fields[0]
        .values()
        .iter()
        .zip(fields[2].values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale;
    lines.push(Line {
        id: 2,
        name: "Neumann and Robin coverage",
        passed: extra[0].1 <= 0.10 && extra[1].1 <= 0.10 && robin_gap <= 1e-6,
        detail: format!(
            "shell errors {}: {:.4}, {}: {:.4}; |robin0 - neumann| / max = {robin_gap:.1e} (bar 1e-6)",
            extra[0].0, extra[0].1, extra[1].0, extra[1].1
        ),
        seconds: t.elapsed().as_secs_f64(),
    });

    for (cfg, _, sol, _) in &runs {
        laps.push((format!("dirichlet h={}", cfg.geometry.mesh_size), sol.lap.clone()));
    }
    let converged: Vec<&(String, LapResult)> = laps.iter().filter(|(_, l)| l.verdict == Verdict::Converged).collect();
    let bad: Vec<&str> = converged
        .iter()
        .filter(|(_, l)| !(tail_monotone(l) && l.apriori.max <= 10.0 * l.apriori.median))
        .map(|(n, _)| n.as_str())
        .collect();
    lines.push(Line {
        id: 3,
        name: "LAP convergence",
        passed: !converged.is_empty() && bad.is_empty(),
        detail: format!(
            "{} of {} runs converged; final three increments decreasing and max <= 10 median on all but {bad:?}",
            converged.len(),
            laps.len()
        ),
        seconds: 0.0,
    });

    let t = Instant::now();
    let mesh = Arc::new(build_exterior_mesh(&ObstacleShape::Sphere { radius: 1.0 }, 2.0, 3.0, 0.7).unwrap());
    let mut betas = Vec::new();
    let mut small = true;
    for preset in ["identity", "aniso_core", "power_tail"] {
        let coeffs = CoefficientSet::preset(preset, 2.0).unwrap().validate(&[]).unwrap();
        let asm = Assembler::new(mesh.clone(), &coeffs);
        let gamma = auto_gamma(&asm).unwrap();
        let sys = asm.bgamma(gamma).unwrap();
        small &= sys.num_dofs() <= 2000;
        let est = coercivity_probe(&sys, &asm.h1_gram(sys.dofs())).unwrap();
        betas.push((preset, est.beta1));
    }
    let asm = Assembler::new(mesh.clone(), &CoefficientSet::identity(2.0).validate(&[]).unwrap());
    let sys = asm.bgamma(0.0).unwrap();
    let id = coercivity_probe(&sys, &asm.h1_gram(sys.dofs())).unwrap();
    let id_gap = (id.beta1 - 1.0).abs().max((id.beta2 - 1.0).abs());
    lines.push(Line {
        id: 4,
        name: "coercivity",
        passed: small && betas.iter().all(|b| b.1 > 0.0) && id_gap <= 1e-8,
        detail: format!("beta1 {betas:.4?} with auto gamma; identity gamma=0 |beta - 1| = {id_gap:.1e}"),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let k = 1.0;
    let standing = AnalyticField(move |x: &Vec3| {
        let r = x.norm();
        let j = spherical_jn(1, k * r);
        let g = x / r * (-k * j[1]);
        (C64::new(j[0], 0.0), g.map(|v| C64::new(v, 0.0)))
    });
    let phi_real = flux(&standing, 3.0, 20, "j0").unwrap().value.norm();
    let kernel = GreenKernel::new(k, 0.0).unwrap();
    let source = AnalyticField(move |x: &Vec3| kernel.eval(x, &Vec3::zeros()).unwrap());
    let phi_point = flux(&source, 3.0, 20, "point source").unwrap().value;
    let exact = C64::new(0.0, k / (2.0 * PI));
    let point_rel = (phi_point - exact).norm() / exact.norm();
    let fr = 0.5 * (runs[0].1.mesh.obstacle_circumradius() + runs[0].0.cutoff_radii().0).max(2.0);
    let trend: Vec<f64> = runs
        .windows(2)
        .map(|p| {
            let d = Difference(p[0].2.field(), p[1].2.field());
            flux(&d, fr, 20, "difference").unwrap().value.norm()
        })
        .collect();
    lines.push(Line {
        id: 5,
        name: "flux identity",
        passed: phi_real <= 1e-10 && point_rel <= 5e-3 && trend.windows(2).all(|w| w[1] < w[0]),
        detail: format!(
            "(a) |flux| real field {phi_real:.1e}; (b) point source rel err {point_rel:.1e}; (c) |flux| of differences {} at r = {fr}",
            sci(&trend)
        ),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let r_bound = 2.0;
    let radii: Vec<f64> = [5.0, 10.0, 20.0, 40.0].iter().map(|f| f * r_bound).collect();
    let scattered = runs[2].2.scattered();
    let rad = radiation_residual(&scattered, &radii, k, 30).unwrap();
    let point = radiation_residual(&source, &radii, k, 20).unwrap();
    let point_gap = point
        .entries
        .iter()
        .map(|(r, v)| (v - 1.0 / (4.0 * PI * r * r)).abs() * 4.0 * PI * r * r)
        .fold(0.0, f64::max);
    lines.push(Line {
        id: 6,
        name: "radiation condition",
        passed: rad.strictly_decreasing() && point_gap <= 0.01,
        detail: format!(
            "scattered residuals {}; point source rel gap {point_gap:.1e}",
            sci(&rad.entries.iter().map(|e| e.1).collect::<Vec<_>>())
        ),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let rep = decay_estimate_check(&DecayCheck::new(k, 1.0, 3.5, r_bound), None).unwrap();
    let mut weak = sphere(BoundaryKind::Dirichlet, 0.0, 0.5);
    weak.coefficients.preset = "power_tail".into();
    weak.coefficients.tail_exponent = Some(3.0);
    let rejected = weak.validate().is_err();
    lines.push(Line {
        id: 7,
        name: "decay estimates",
        passed: rep.passed && rejected,
        detail: format!(
            "variation {:.4} (bar 0.2), resolution gap {:.1e} (bar 0.01); s = 3 config rejected: {rejected}",
            rep.variation, rep.max_resolution_gap
        ),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let variants: Vec<ProbeVariant> = runs
        .iter()
        .map(|(cfg, sc, sol, _)| ProbeVariant {
            label: format!("h={}", cfg.geometry.mesh_size),
            key: sc.physical_key(),
            field: sol.field().clone(),
        })
        .collect();
    let uq = uniqueness_probe(&variants, &runs[2].1.norm).unwrap();
    lines.push(Line {
        id: 8,
        name: "uniqueness consistency",
        passed: uq.strictly_decreasing,
        detail: format!(
            "consecutive discrepancies {:.4?}",
            uq.consecutive.iter().map(|p| p.discrepancy).collect::<Vec<_>>()
        ),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let sc = &runs[2].1;
    let red = reduction_identity(&sc.assembler, &sc.wave, &sc.cutoff, 0.1, sc.options.outer).unwrap();
    lines.push(Line {
        id: 9,
        name: "reduction identity",
        passed: red.max_nodal_difference <= 1e-8,
        detail: format!("max |u - w - zeta u0| = {:.1e} at eps = 0.1, h = 0.25", red.max_nodal_difference),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let cfg = sphere(BoundaryKind::Dirichlet, 0.0, 0.5);
    let first = cmd_solve(&cfg, false).unwrap().to_json(false);
    let second = cmd_solve(&cfg, false).unwrap().to_json(false);
    lines.push(Line {
        id: 10,
        name: "determinism",
        passed: first == second,
        detail: format!("two seeded runs, {} report bytes, identical: {}", first.len(), first == second),
        seconds: t.elapsed().as_secs_f64(),
    });

    let mut out = std::io::stderr().lock();
    for l in &lines {
        let _ = writeln!(
            out,
            "[{}] criterion {:>2} {:<38} {:>6.1}s  {}",
            if l.passed { "PASS" } else { "FAIL" },
            l.id,
            l.name,
            l.seconds,
            l.detail
        );
    }
    let failed: Vec<usize> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
