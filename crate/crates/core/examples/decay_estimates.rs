// Scaled volume potentials (1 + |x|)(|int g f| + |int grad g f|) for power
// densities f = (1 + |y|^2)^(-s/2) beyond R.

use lapscat::representation::{decay_estimate_check, DecayCheck};

fn main() -> lapscat::Result<()> {
    for s in [3.5, 5.0] {
        let report = decay_estimate_check(&DecayCheck::new(1.0, 1.0, s, 2.0), None)?;
        println!("s = {s}: variation over [10R, 20R] {:.4}, passed {}", report.variation, report.passed);
        for x in &report.samples {
            println!("  |x| = {:>5}  scaled {:.5}  gap {:.1e}", x.radius, x.scaled, x.resolution_gap);
        }
    }
    let weak = decay_estimate_check(&DecayCheck::new(1.0, 1.0, 2.5, 2.0), None);
    println!("s = 2.5: {}", weak.err().map_or("accepted".into(), |e| e.to_string()));
    Ok(())
}
