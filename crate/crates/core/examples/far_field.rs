// Extend a computed field beyond an auxiliary sphere with the
// representation formula and read off its far-field pattern.

use lapscat::geometry::Vec3;
use lapscat::pipeline::{direction_grid, far_field_shell, oracle_for, RunConfig, Scenario};
use lapscat::representation::{far_field, far_field_volume, represent};

fn main() -> lapscat::Result<()> {
    let cfg = RunConfig::sphere_preset(0.5);
    let mut scenario = Scenario::new(&cfg)?;
    let solution = scenario.solve()?;
    let mie = oracle_for(&cfg)?;
    println!(
        "Cauchy data on |x| = {} with {} nodes",
        solution.cauchy.radius(),
        solution.cauchy.quadrature().len()
    );

    // Surface route from the Cauchy data, volume route over a cut-off shell.
    println!("{:>7} {:>7} {:>22} {:>22} {:>22}", "theta", "phi", "A (surface)", "A (volume)", "A (series)");
    let grid = direction_grid(5, 2);
    let betas: Vec<Vec3> = grid.iter().map(|g| g.2).collect();
    let amp = far_field(&solution.cauchy, 1.0, &betas)?;
    let vol = far_field_volume(solution.field(), &far_field_shell(&cfg)?, 1.0, &betas)?;
    for (((theta, phi, beta), a), v) in grid.iter().zip(&amp).zip(&vol) {
        println!("{theta:>7.3} {phi:>7.3} {a:>22.4} {v:>22.4} {:>22.4}", mie.far_field(beta));
    }

    println!("\n    r  |r psi(r z)|  |A(z)|");
    for r in [10.0, 40.0, 160.0] {
        let v = represent(&solution.cauchy, &solution.kernel, None, &(Vec3::z() * r))?;
        println!("{r:>5} {:>12.5} {:>7.5}", v.norm() * r, amp[0].norm());
    }
    Ok(())
}
