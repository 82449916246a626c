// Limiting absorption for the Dirichlet unit sphere: solve the absorbed
// problems along the eps schedule, extrapolate, and compare the total
// field with the series solution on the shell 2 <= |x| <= 4.
//
// `cargo run --release --example lap_sphere -- 0.25`

use std::sync::Arc;

use lapscat::assembly::Assembler;
use lapscat::coefficients::{BoundaryKind, CoefficientSet, IncidentWave};
use lapscat::geometry::{build_exterior_mesh, CutoffFunction, ObstacleShape, Vec3};
use lapscat::lap::{run_lap, EpsilonSchedule, LapOptions, WeightedNormSpec};
use lapscat::oracle::MieSeries;
use lapscat::pipeline::shell_relative_error;

fn main() -> lapscat::Result<()> {
    run(std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.5))
}

fn run(h: f64) -> lapscat::Result<()> {
    let mesh = Arc::new(build_exterior_mesh(&ObstacleShape::Sphere { radius: 1.0 }, 2.0, 6.0, h)?);
    println!("h = {h}: {} vertices, {} cells", mesh.num_vertices(), mesh.num_cells());

    let coeffs = CoefficientSet::identity(2.0).validate(&[])?;
    let asm = Assembler::new(mesh.clone(), &coeffs);
    let wave = IncidentWave::new(1.0, Vec3::z())?;
    let cutoff = CutoffFunction::new(2.5, 3.5)?;
    let lap = run_lap(
        &asm,
        &wave,
        &cutoff,
        &EpsilonSchedule::default_for(1.0),
        &WeightedNormSpec::default(),
        &LapOptions::default(),
    )?;
    print!("{}", lap.convergence_csv());
    println!("verdict {:?}, order {:?}, {} factorization(s)", lap.verdict, lap.order, lap.factorizations);

    let mie = MieSeries::new(1.0, 1.0, BoundaryKind::Dirichlet, 0.0)?;
    let last = lap.fields.last().expect("schedule is non-empty");
    for (name, w) in [("last iterate", last), ("extrapolated", &lap.extrapolated)] {
        let err = shell_relative_error(w, &wave, &cutoff, &mie.total_field(), (2.0, 4.0))?;
        println!("{name:<13} relative shell error {err:.4}");
    }
    Ok(())
}
