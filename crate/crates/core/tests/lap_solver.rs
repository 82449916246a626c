use std::f64::consts::PI;
use std::sync::Arc;

use lapscat::assembly::{Assembler, LoadMode, OuterCondition};
use lapscat::coefficients::{CoefficientSet, IncidentWave};
use lapscat::field::{ComplexField, C64};
use lapscat::geometry::{build_exterior_mesh, CutoffFunction, ExteriorMesh, ObstacleShape, Vec3};
use lapscat::lap::{
    run_lap, run_lap_systems, solve_absorbed, weighted_norm, EpsilonSchedule, LapOptions, Verdict, WeightedNormSpec,
};
use lapscat::verification::weak_residual;

fn annulus(h: f64) -> Arc<ExteriorMesh> {
    Arc::new(build_exterior_mesh(&ObstacleShape::Sphere { radius: 1.0 }, 2.0, 6.0, h).unwrap())
}

fn setup(h: f64) -> (Assembler, IncidentWave, CutoffFunction) {
    let mesh = annulus(h);
    let asm = Assembler::new(mesh, &CoefficientSet::identity(2.0).validate(&[]).unwrap());
    (asm, IncidentWave::new(1.0, Vec3::z()).unwrap(), CutoffFunction::new(2.5, 3.5).unwrap())
}

#[test]
fn zero_load_and_linearity() {
    let (asm, wave, cutoff) = setup(0.8);
    let sys = asm
        .absorbed(&wave, 0.5, &cutoff, OuterCondition::Sommerfeld, LoadMode::Galerkin)
        .unwrap();
    let zero = sys.with_load(vec![C64::new(0.0, 0.0); sys.num_dofs()]).unwrap();
    assert_eq!(solve_absorbed(&zero).unwrap().max_abs(), 0.0);

    let w = solve_absorbed(&sys).unwrap();
    let doubled = sys.with_load(sys.load().iter().map(|b| b * 2.0).collect()).unwrap();
    let w2 = solve_absorbed(&doubled).unwrap();
    let gap = w2.axpy(C64::new(-2.0, 0.0), &w).unwrap().max_abs();
    assert!(gap <= 1e-10 * w2.max_abs(), "{gap}");

    let spec = WeightedNormSpec::default();
    let norm = weighted_norm(&w, &spec);
    assert!(norm.is_finite() && norm > 0.0);
    let rep = weak_residual(&w, &sys, 10, 3).unwrap();
    assert!(rep.max_defect <= 1e-8, "{}", rep.max_defect);
}

#[test]
fn weighted_norm_of_one_on_the_annulus() {
    let mesh = Arc::new(build_exterior_mesh(&ObstacleShape::Sphere { radius: 2.0 }, 3.0, 6.0, 0.5).unwrap());
    let one = ComplexField::interpolate(mesh, |_| C64::new(1.0, 0.0));
    let spec = WeightedNormSpec::new(0, 2.0).unwrap();
    let f = |r: f64| r - r.atan();
    let exact = (4.0 * PI * (f(6.0) - f(2.0))).sqrt();
    let got = weighted_norm(&one, &spec);
    assert!(((got * got) / (exact * exact) - 1.0).abs() <= 0.02, "{got} vs {exact}");
    let two = one.scale(C64::new(2.0, 0.0));
    assert!((weighted_norm(&two, &spec).powi(2) - 4.0 * got * got).abs() <= 1e-10 * got * got);
    assert_eq!(weighted_norm(&ComplexField::zeros(one.mesh().clone()), &spec), 0.0);
}

#[test]
fn schedule_on_the_dirichlet_sphere_converges() {
    let (asm, wave, cutoff) = setup(0.5);
    let schedule = EpsilonSchedule::new(0.4, 0.5, 6).unwrap();
    let spec = WeightedNormSpec::new(0, 2.0).unwrap();
    let lap = run_lap(&asm, &wave, &cutoff, &schedule, &spec, &LapOptions::default()).unwrap();
    assert_eq!(lap.verdict, Verdict::Converged);
    let inc = lap.increments();
    assert!(inc.windows(2).all(|w| w[1] < w[0]), "{inc:?}");
    assert!(lap.apriori.holds);
    assert!(EpsilonSchedule::new(0.4, 0.5, 1).is_err());
}

#[test]
fn zero_source_gives_zero_iterates() {
    let (asm, wave, cutoff) = setup(0.8);
    let schedule = EpsilonSchedule::new(0.4, 0.5, 4).unwrap();
    let spec = WeightedNormSpec::default();
    let lap = run_lap_systems(&schedule, &spec, &LapOptions::default(), |eps| {
        let sys = asm.absorbed(&wave, eps, &cutoff, OuterCondition::Sommerfeld, LoadMode::Galerkin)?;
        let n = sys.num_dofs();
        sys.with_load(vec![C64::new(0.0, 0.0); n])
    })
    .unwrap();
    assert!(lap.fields.iter().all(|f| f.max_abs() == 0.0));
    assert_eq!(lap.extrapolated.max_abs(), 0.0);
    assert!(lap.increments().iter().all(|d| *d == 0.0));
}

#[test]
fn weak_residual_flags_the_zero_field() {
    let (asm, wave, cutoff) = setup(0.8);
    let sys = asm
        .absorbed(&wave, 1e-3, &cutoff, OuterCondition::Sommerfeld, LoadMode::Galerkin)
        .unwrap();
    let exact = solve_absorbed(&sys).unwrap();
    assert!(weak_residual(&exact, &sys, 20, 7).unwrap().max_defect <= 1e-8);
    let zero = ComplexField::zeros(asm.mesh().clone());
    let defect = weak_residual(&zero, &sys, 20, 7).unwrap().max_defect;
    assert!(defect >= 0.99 && defect <= 1.0 + 1e-12, "{defect}");
}
