// Tabulated coefficients: write a potential to the binary grid format,
// read it back, and solve with it.

use std::sync::Arc;

use lapscat::assembly::Assembler;
use lapscat::coefficients::{CoefGrid, CoefficientSet, DecaySpec, IncidentWave, PotentialField};
use lapscat::geometry::{build_exterior_mesh, CutoffFunction, ObstacleShape, Vec3};
use lapscat::lap::{run_lap, EpsilonSchedule, LapOptions, WeightedNormSpec};

fn main() -> lapscat::Result<()> {
    let lo = Vec3::new(-1.1, -1.1, -1.1);
    let grid = CoefGrid::from_fn([12, 12, 12], lo, -lo, 1, |x| vec![0.5 * (-x.norm_squared()).exp()])?;
    let path = std::env::temp_dir().join("lapscat_potential.grid");
    grid.save(&path)?;
    let grid = CoefGrid::load(&path)?;
    println!("grid at (0.3, 0, 0): {:?}", grid.sample(&Vec3::new(0.3, 0.0, 0.0)));

    let mut coeffs = CoefficientSet::identity(2.0);
    coeffs.potential = PotentialField::Grid(Arc::new(grid));
    coeffs.decay = DecaySpec::Compact { radius: 1.1 * 3f64.sqrt() };
    let coeffs = coeffs.validate(&[])?;

    let mesh = Arc::new(build_exterior_mesh(&ObstacleShape::Sphere { radius: 0.5 }, 2.0, 4.5, 0.5)?);
    let asm = Assembler::new(mesh, &coeffs);
    let wave = IncidentWave::new(1.0, Vec3::x())?;
    let lap = run_lap(
        &asm,
        &wave,
        &CutoffFunction::new(2.3, 3.3)?,
        &EpsilonSchedule::default_for(1.0),
        &WeightedNormSpec::default(),
        &LapOptions::default(),
    )?;
    println!("verdict {:?}, |w*| = {:.5}", lap.verdict, lap.extrapolated_norm);
    Ok(())
}
