use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use groupoid_lab::config::{
    self, ActionConfig, AffineConfig, AverageConfig, GkrConfig, MomentumConfig, PhiConfig, Scenario,
};
use groupoid_lab::suite::{self, Manifest};
use groupoid_lab::{run, Format, LabError, Outcome};

/// Experiments on averaging near-representations of groupoids, momentum
/// maps and affine convexity.
#[derive(Parser)]
#[command(name = "glab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Scenario file (a manifest for `suite`); defaults apply without one.
    #[arg(long, global = true, env = "GLAB_CONFIG")]
    config: Option<PathBuf>,
    /// Directory for the report and tables.
    #[arg(long, global = true, env = "GLAB_OUT", default_value = "glab-out")]
    out: PathBuf,
    /// Overrides the scenario's main seed. The suite keeps its fixed seeds.
    #[arg(long, global = true, env = "GLAB_SEED")]
    seed: Option<u64>,
    /// Recorded in the report; runs are sequential.
    #[arg(long, global = true, env = "GLAB_THREADS", default_value_t = 1)]
    threads: usize,
    /// Format of the tables; the report is always JSON.
    #[arg(long, global = true, env = "GLAB_FORMAT", value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate the averaging operator on a perturbed action groupoid map.
    Average,
    /// Average a near-homomorphism between compact groups.
    Gkr,
    /// Sample and certify a toric momentum image.
    Momentum,
    /// Action integrals of planar Hamiltonians, optionally a cylinder period.
    Action,
    /// Sample the frequency sum set of two tuples.
    PhiSet,
    /// Certify or refute convexity of an affine complex.
    AffineCheck,
    /// Run the acceptance criteria listed in a manifest.
    Suite,
}

fn scenario<C: Scenario>(common: &Common) -> Result<C, LabError> {
    let mut cfg: C = config::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<Outcome, LabError> {
    let c = &cli.common;
    match cli.command {
        Command::Average => run::average(&scenario::<AverageConfig>(c)?),
        Command::Gkr => run::gkr(&scenario::<GkrConfig>(c)?),
        Command::Momentum => run::momentum(&scenario::<MomentumConfig>(c)?),
        Command::Action => run::action(&scenario::<ActionConfig>(c)?),
        Command::PhiSet => run::phi_set_command(&scenario::<PhiConfig>(c)?),
        Command::AffineCheck => run::affine_check(&scenario::<AffineConfig>(c)?),
        Command::Suite => {
            let manifest = Manifest::load(c.config.as_deref())?;
            suite::run_suite(&manifest, |r| {
                eprintln!(
                    "{} {}: {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.id,
                    r.summary()
                );
            })
        }
    }
}

fn write(outcome: &Outcome, out: &Path, common: &Common) -> Result<(), LabError> {
    for p in outcome.write(out, common.format, common.threads)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(&cli).and_then(|o| write(&o, &cli.common.out, &cli.common).map(|_| o));
    match result {
        Ok(o) => {
            eprintln!("status: {:?}", o.status);
            ExitCode::from(o.status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
