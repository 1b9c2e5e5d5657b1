use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fraclinic::Error;

mod config;
mod modes;
mod output;
mod validate;

#[derive(Parser)]
#[command(name = "fraclinic", version, about = "Fractional-Laplacian homoclinic solvers and certificates")]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(clap::Args, Clone)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Artifact directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Mode {
    /// Minimize the pinned energy.
    SolvePinned(Common),
    /// Mountain-pass critical point of the confined energy.
    SolveConfined(Common),
    /// Monotone layer of the fractional Allen-Cahn equation.
    Layer(Common),
    /// Sup-norm and decay certificates for a stored profile.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        profile: PathBuf,
    },
    /// Randomized property suites.
    Validate(Common),
    /// Energies of the rescaled q_sharp family.
    ScalingExperiment(Common),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) => 2,
        Error::Hypothesis(_) => 3,
        Error::InvalidInput(_) | Error::Parse { .. } | Error::Io(_) => 4,
    }
}

fn set_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("FRACLINIC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::InvalidInput(format!("FRACLINIC_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    let result = set_threads().and_then(|_| match cli.mode {
        Mode::SolvePinned(c) => modes::run("solve-pinned", &c.config, &c.out, None),
        Mode::SolveConfined(c) => modes::run("solve-confined", &c.config, &c.out, None),
        Mode::Layer(c) => modes::run("layer", &c.config, &c.out, None),
        Mode::Certify { common, profile } => modes::run("certify", &common.config, &common.out, Some(&profile)),
        Mode::Validate(c) => modes::run("validate", &c.config, &c.out, None),
        Mode::ScalingExperiment(c) => modes::run("scaling-experiment", &c.config, &c.out, None),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
