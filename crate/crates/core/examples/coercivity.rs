// Extreme Rayleigh quotients of B_gamma against the H1 inner product for
// each coefficient preset on a coarse mesh.

use std::sync::Arc;

use lapscat::assembly::{auto_gamma, coercivity_probe, Assembler};
use lapscat::coefficients::{BoundaryKind, CoefficientSet, PRESETS};
use lapscat::geometry::{build_exterior_mesh, ObstacleShape};

fn main() -> lapscat::Result<()> {
    let mesh = Arc::new(build_exterior_mesh(&ObstacleShape::Sphere { radius: 1.0 }, 2.0, 3.0, 0.7)?);
    println!("{:<12} {:<9} {:>7} {:>10} {:>10} {:>5}", "preset", "boundary", "gamma", "beta1", "beta2", "its");
    for preset in PRESETS {
        for (kind, sigma) in [(BoundaryKind::Neumann, 0.0), (BoundaryKind::Robin, 2.0)] {
            let coeffs = CoefficientSet::preset(preset, 2.0)?.with_boundary(kind, sigma).validate(&[])?;
            let asm = Assembler::new(mesh.clone(), &coeffs);
            let gamma = auto_gamma(&asm)?;
            let system = asm.bgamma(gamma)?;
            let est = coercivity_probe(&system, &asm.h1_gram(system.dofs()))?;
            println!(
                "{preset:<12} {:<9} {gamma:>7.3} {:>10.6} {:>10.6} {:>5}",
                kind.as_str(),
                est.beta1,
                est.beta2,
                est.iterations
            );
        }
    }
    Ok(())
}
