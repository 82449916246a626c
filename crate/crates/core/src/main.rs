use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lapscat::pipeline::{self, RunConfig, RunReport};

#[derive(Parser)]
#[command(name = "lapscat", version, about = "Exterior Helmholtz scattering by limiting absorption")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    config: PathBuf,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of the summary table.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve, represent and run the per-solution checks.
    Solve(Common),
    /// Solve plus reduction, uniqueness, flux-trend and coercivity checks.
    Verify(Common),
    /// Compare with the sphere series solution.
    OracleCompare(Common),
    /// Scaled volume potentials of a power-law density.
    DecayCheck(Common),
    /// Build the mesh and print its statistics.
    MeshInfo {
        #[command(flatten)]
        common: Common,
        /// Save the mesh in `tetmesh 1` format.
        #[arg(long)]
        save: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> lapscat::Result<(RunReport, bool)> {
    let (common, save) = match &cli.command {
        Command::Solve(c) | Command::Verify(c) | Command::OracleCompare(c) | Command::DecayCheck(c) => (c, None),
        Command::MeshInfo { common, save } => (common, save.as_deref()),
    };
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.output.directory = out.clone();
    }
    pipeline::init_threads(cfg.threads);
    let report = match &cli.command {
        Command::Solve(_) => pipeline::cmd_solve(&cfg, true)?,
        Command::Verify(_) => pipeline::cmd_verify(&cfg, true)?,
        Command::OracleCompare(_) => {
            let r = pipeline::cmd_oracle_compare(&cfg)?;
            pipeline::write_report(&r, &cfg.output.directory)?;
            r
        }
        Command::DecayCheck(_) => {
            let r = pipeline::cmd_decay_check(&cfg)?;
            pipeline::write_report(&r, &cfg.output.directory)?;
            r
        }
        Command::MeshInfo { .. } => pipeline::cmd_mesh_info(&cfg, save)?,
    };
    Ok((report, common.json))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((report, json)) => {
            if json {
                println!("{}", report.to_json(true));
            } else {
                if let Some(m) = &report.mesh {
                    println!("mesh: {} vertices, {} cells, h = {}", m.vertices, m.cells, m.mesh_size);
                }
                print!("{}", report.summary());
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
