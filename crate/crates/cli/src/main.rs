//! `rns`: viscous strong-detonation profiles of the reactive Navier-Stokes
//! system and their Evans-function spectral stability.
//!
//! Subcommands: `znd`, `profile`, `evans`, `roots`, `track`, `boundary`,
//! `fit`, `delay`, plus the `gmat` debug dump of the linearized coefficient
//! matrix. Every run writes CSV data files and a JSON manifest that can be
//! replayed as `--config`.

mod commands;
mod config;
mod manifest;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "rns", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the TOML config (or a previously emitted JSON manifest).
    #[arg(long, global = true)]
    config: Option<String>,

    /// Override config entries, e.g. --set wave.activation_energy=5.0
    #[arg(long = "set", global = true)]
    overrides: Vec<String>,

    /// Output directory (overrides [output].dir).
    #[arg(long, global = true)]
    out: Option<String>,

    /// Worker threads for independent work units; results are identical for
    /// any N.
    #[arg(long, default_value_t = 1, global = true)]
    jobs: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Inviscid ZND reference profile (CSV: x, tau, u, e, z, T).
    Znd,
    /// Viscous traveling-wave profile (CSV: x, tau, u, e, z, y).
    Profile,
    /// Evans-function samples over the standard semi-annulus contour.
    Evans,
    /// Unstable eigenvalues located inside the semi-annulus.
    Roots,
    /// Root trajectories over an activation-energy range.
    Track,
    /// Lower/upper neutral stability boundaries over viscosity columns.
    Boundary,
    /// Least-squares boundary-curve fit of supplied (nu, E_A) points.
    Fit,
    /// Relative viscous delay of the instability onset.
    Delay,
    /// Debug dump of G(x; lambda) (CSV: row, col, re, im).
    Gmat,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    };
    std::process::exit(code);
}

fn exit_code_for(e: &anyhow::Error) -> i32 {
    if let Some(core) = e.downcast_ref::<rns_core::Error>() {
        return core.exit_code();
    }
    // Everything else at this level is a configuration problem.
    2
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let config_path = cli.config.as_deref().unwrap_or("rns.toml");
    let mut loaded = config::load_config(config_path, &cli.overrides)?;
    if let Some(dir) = &cli.out {
        loaded.config.output.dir = dir.clone();
    }
    let ctx = commands::CommandContext {
        loaded,
        jobs: cli.jobs.max(1),
    };
    match cli.command {
        Command::Znd => commands::cmd_znd(&ctx),
        Command::Profile => commands::cmd_profile(&ctx),
        Command::Evans => commands::cmd_evans(&ctx),
        Command::Roots => commands::cmd_roots(&ctx),
        Command::Track => commands::cmd_track(&ctx),
        Command::Boundary => commands::cmd_boundary(&ctx),
        Command::Fit => commands::cmd_fit(&ctx),
        Command::Delay => commands::cmd_delay(&ctx),
        Command::Gmat => commands::cmd_gmat(&ctx),
    }
}
