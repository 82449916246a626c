// Flux and radiation identities on closed-form fields, then the cut-off
// reduction u = w + zeta u0 on a small mesh.

use std::f64::consts::PI;
use std::sync::Arc;

use lapscat::assembly::{Assembler, OuterCondition};
use lapscat::coefficients::{CoefficientSet, IncidentWave};
use lapscat::field::AnalyticField;
use lapscat::geometry::{build_exterior_mesh, CutoffFunction, ObstacleShape, Vec3};
use lapscat::representation::GreenKernel;
use lapscat::verification::{flux, radiation_residual, reduction_identity};

fn main() -> lapscat::Result<()> {
    let g = GreenKernel::new(1.0, 0.0)?;
    let source = AnalyticField(move |x: &Vec3| g.eval(x, &Vec3::zeros()).expect("x is not the origin"));
    let phi = flux(&source, 3.0, 20, "point source")?;
    println!("point source flux {:.6} (closed form {:.6}i)", phi.value, 1.0 / (2.0 * PI));

    let rad = radiation_residual(&source, &[5.0, 10.0, 20.0, 40.0], 1.0, 20)?;
    for (r, v) in &rad.entries {
        println!("  r = {r:>4}: residual {v:.4e}, 1/(4 pi r^2) = {:.4e}", 1.0 / (4.0 * PI * r * r));
    }

    let wave = IncidentWave::new(1.0, Vec3::z())?;
    let plane = AnalyticField(move |x: &Vec3| wave.eval(x));
    let rad = radiation_residual(&plane, &[5.0, 10.0, 20.0], 1.0, 40)?;
    println!("plane wave radiating? {}", rad.non_increasing(0.1));

    let mesh = Arc::new(build_exterior_mesh(&ObstacleShape::Sphere { radius: 1.0 }, 2.0, 4.0, 0.6)?);
    let asm = Assembler::new(mesh, &CoefficientSet::identity(2.0).validate(&[])?);
    let cutoff = CutoffFunction::new(2.2, 3.2)?;
    for outer in [OuterCondition::Sommerfeld, OuterCondition::Hard] {
        let rep = reduction_identity(&asm, &wave, &cutoff, 0.1, outer)?;
        println!("reduction ({outer:?}): max |u - w - zeta u0| = {:.2e}", rep.max_nodal_difference);
    }
    Ok(())
}
