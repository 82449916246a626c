use std::sync::Arc;

use lapscat::assembly::Assembler;
use lapscat::coefficients::CoefficientSet;
use lapscat::field::C64;
use lapscat::geometry::{build_exterior_mesh, ObstacleShape, Vec3};
use lapscat::lap::solve_absorbed;

fn plane(x: &Vec3) -> C64 {
    C64::from_polar(1.0, x.z)
}

/// Max nodal error of the P1 solution with u = exp(i z) as boundary data.
fn nodal_error(h: f64) -> f64 {
    let mesh = Arc::new(build_exterior_mesh(&ObstacleShape::Sphere { radius: 1.0 }, 2.0, 4.0, h).unwrap());
    let asm = Assembler::new(mesh, &CoefficientSet::identity(2.0).validate(&[]).unwrap());
    let sys = asm.dirichlet_problem(1.0, plane).unwrap();
    let u = solve_absorbed(&sys).unwrap();
    u.mesh()
        .vertices()
        .iter()
        .zip(u.values())
        .map(|(x, v)| (v - plane(x)).norm())
        .fold(0.0, f64::max)
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let coarse = nodal_error(0.5);
    let fine = nodal_error(0.25);
    let order = (coarse / fine).log2();
    assert!(fine < 0.05, "{fine}");
    assert!(order > 1.5, "errors {coarse} {fine}, order {order}");
}
