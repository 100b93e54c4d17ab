//! Command-line front end for the `hqnet` library.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
pub use error::{CliError, CliResult};

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError { code: error::EXIT_USAGE, message: e.render().to_string().trim_end().to_string() });
        }
    };
    let file = cli.config.as_deref().map(config::read_config_file).transpose()?;
    let name = cli.command.name();

    macro_rules! dispatch {
        ($flags:expr, $cfg:ty, $f:path) => {{
            let cfg: $cfg = config::resolve(name, &$flags, file.as_ref())?;
            config::echo(name, &cfg);
            $f(cfg)
        }};
    }

    use commands::*;
    match cli.command {
        Command::Synth(a) => dispatch!(a, SynthConfig, synth),
        Command::Prepare(a) => dispatch!(a, PrepareConfig, prepare),
        Command::Fit(a) => dispatch!(a, FitConfig, fit),
        Command::Predict(a) => dispatch!(a, PredictConfig, predict),
        Command::Evaluate(a) => dispatch!(a, EvaluateConfig, evaluate_cmd),
        Command::Murphy(a) => dispatch!(a, MurphyConfig, murphy),
        Command::Functional(a) => dispatch!(a, FunctionalConfig, functional),
        Command::Distfit(a) => dispatch!(a, DistfitConfig, distfit),
        Command::Decide(a) => dispatch!(a, DecideConfig, decide),
    }
}
