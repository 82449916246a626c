// Drive the full pipeline from a TOML config, as the `lapscat` binary
// does, and print the verdict table.
//
// `cargo run --release --example config_run -- configs/sphere_dirichlet.toml`

use lapscat::pipeline::{cmd_solve, RunConfig};

fn main() -> lapscat::Result<()> {
    run(std::env::args().nth(1))
}

fn run(path: Option<String>) -> lapscat::Result<()> {
    let cfg = match path {
        Some(path) => RunConfig::load(path)?,
        None => {
            let mut c = RunConfig::sphere_preset(0.5);
            c.coefficients.boundary = lapscat::coefficients::BoundaryKind::Robin;
            c.coefficients.sigma = 1.0;
            c
        }
    };
    println!("{}", cfg.to_toml());
    let report = cmd_solve(&cfg, false)?;
    print!("{}", report.summary());
    println!("all checks pass: {}", report.passed());
    Ok(())
}
