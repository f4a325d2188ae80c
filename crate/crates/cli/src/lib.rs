//! Command-line front end for `ou-pacbayes`. Every subcommand maps onto a
//! library operation; results are written as CSV or JSON with 17 significant
//! digits and a one-line summary is printed.
//!
//! Exit codes: 0 success, 1 output could not be written, 2 invalid
//! configuration, 3 numerical failure (the message names the operation).

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{execute, RunOutput};
pub use config::{command, parse_args, Format, RunConfig, Subcommand};
pub use error::CliError;

/// Executes `config`, writes the document and prints the summary. The
/// summary goes to stdout when the document goes to a file, otherwise to
/// stderr after the document on stdout.
pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    let output = execute(config)?;
    match &config.output_path {
        Some(path) => {
            std::fs::write(path, &output.document).map_err(|source| CliError::Write {
                path: path.display().to_string(),
                source,
            })?;
            println!("{}", output.summary);
        }
        None => {
            print!("{}", output.document);
            eprintln!("{}", output.summary);
        }
    }
    Ok(output)
}
