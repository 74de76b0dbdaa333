//! Argument parsing, layer merging and dispatch.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::commands::{self, out_path, Ctx};
use crate::config::{set_keys, Layers, Settings};
use crate::error::{CliError, CliResult};
use crate::report::{to_pretty, write_text};

#[derive(Debug, Parser)]
#[command(
    name = "bol",
    version,
    about = "Besov-Orlicz and BV embedding experiments"
)]
pub struct Cli {
    /// TOML file with settings (lowest precedence; also BOL_CONFIG)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the embedding condition on a log grid of s and classify its sup
    CheckCondition(Settings),
    /// Split a grid function into molecules, verify and export them
    Decompose(Settings),
    /// Lebesgue, Orlicz, BV and Besov-Orlicz norms of a grid function
    Norms(Settings),
    /// Both integral bounds of the worked example with a non-power Young function
    Example5(Settings),
    /// Ball indicators: seminorm against the condition and the BV norm
    Necessity(Settings),
    /// Volume of the symmetric difference of two shifted balls
    Lemma6(Settings),
    /// Stability of the Sobolev ratio under grid refinement
    Sobolev(Settings),
    /// Aggregate the reports in a directory
    Report(Settings),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CheckCondition(_) => "check-condition",
            Command::Decompose(_) => "decompose",
            Command::Norms(_) => "norms",
            Command::Example5(_) => "example5",
            Command::Necessity(_) => "necessity",
            Command::Lemma6(_) => "lemma6",
            Command::Sobolev(_) => "sobolev",
            Command::Report(_) => "report",
        }
    }

    fn flags(&self) -> &Settings {
        match self {
            Command::CheckCondition(s)
            | Command::Decompose(s)
            | Command::Norms(s)
            | Command::Example5(s)
            | Command::Necessity(s)
            | Command::Lemma6(s)
            | Command::Sobolev(s)
            | Command::Report(s) => s,
        }
    }
}

const COMMON: &[&str] = &["output", "jobs"];
const QUAD: &[&str] = &["tmin", "tmax", "nodes", "rel_tol", "quad_nodes"];
const GRID: &[&str] = &["input", "fixture", "dim", "h", "radius"];

/// Keys each command reads; any other flag is a usage error.
pub fn allowed(command: &str) -> Vec<&'static str> {
    let own: Vec<&[&str]> = match command {
        "check-condition" => vec![&[
            "phi",
            "psi",
            "dim",
            "smin",
            "smax",
            "points",
            "quad_nodes",
            "first_lower",
        ]],
        "decompose" => vec![GRID, QUAD, &["phi", "psi", "format"]],
        "norms" => vec![GRID, QUAD, &["phi", "psi", "p", "t"]],
        "example5" => vec![&["alpha", "points", "quad_nodes"]],
        "necessity" => vec![&["phi", "psi", "dim", "radii", "quad_nodes"]],
        "lemma6" => vec![&["dim", "r", "offsets", "samples", "seed", "chunks"]],
        "sobolev" => vec![&["dim", "h", "max_change"]],
        "report" => vec![&["input"]],
        _ => vec![],
    };
    let mut keys: Vec<&str> = own.into_iter().flatten().chain(COMMON).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    keys
}

fn command_with_hidden_flags() -> clap::Command {
    let mut cmd = Cli::command();
    let all: Vec<String> = cmd
        .find_subcommand("report")
        .map(|s| s.get_arguments().map(|a| a.get_id().to_string()).collect())
        .unwrap_or_default();
    let names: Vec<String> = cmd
        .get_subcommands()
        .map(|s| s.get_name().to_string())
        .collect();
    for name in names {
        let keep = allowed(&name);
        for id in &all {
            if id != "config" && id != "help" && !keep.contains(&id.as_str()) {
                let id = id.clone();
                cmd = cmd.mut_subcommand(&name, |sc| sc.mut_arg(id, |a| a.hide(true)));
            }
        }
    }
    cmd
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn clap_error(e: clap::Error) -> Outcome {
    let text = e.render().to_string();
    let code = match e.kind() {
        ErrorKind::DisplayHelp
        | ErrorKind::DisplayVersion
        | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            return Outcome {
                code: if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    2
                } else {
                    0
                },
                stdout: text,
                stderr: String::new(),
            }
        }
        ErrorKind::ArgumentConflict => 4,
        ErrorKind::InvalidValue | ErrorKind::ValueValidation | ErrorKind::InvalidUtf8 => 3,
        _ => 2,
    };
    Outcome {
        code,
        stdout: String::new(),
        stderr: text,
    }
}

/// A layer that names one grid source drops the other one from below.
fn exclusive_source(lower: Settings, upper: &Settings) -> Settings {
    let mut lower = lower;
    if upper.input.is_some() || upper.fixture.is_some() {
        lower.input = None;
        lower.fixture = None;
    }
    lower
}

fn layer_conflicts(s: &Settings, origin: &str) -> CliResult<()> {
    if s.input.is_some() && s.fixture.is_some() {
        return Err(CliError::Conflict(format!(
            "input and fixture both set in {origin}"
        )));
    }
    Ok(())
}

/// The resolved settings for `command`: keys other commands use are
/// dropped from the file and environment layers, rejected among flags.
pub fn resolve(command: &str, layers: &Layers) -> CliResult<Settings> {
    let keep = allowed(command);
    for k in set_keys(&layers.flags)? {
        if !keep.contains(&k.as_str()) {
            return Err(CliError::Usage(format!(
                "--{} is not used by {command}",
                k.replace('_', "-")
            )));
        }
    }
    layer_conflicts(&layers.file, "the config file")?;
    layer_conflicts(&layers.env, "the environment")?;
    layer_conflicts(&layers.flags, "the flags")?;
    let file = exclusive_source(layers.file.clone(), &layers.env);
    let file = exclusive_source(file, &layers.flags);
    let env = exclusive_source(layers.env.clone(), &layers.flags);
    let merged = file.merged(&env).merged(&layers.flags);
    let filtered: toml::Table = toml::Value::try_from(&merged)
        .map_err(|e| CliError::Invalid(e.to_string()))?
        .as_table()
        .cloned()
        .unwrap_or_default()
        .into_iter()
        .filter(|(k, _)| keep.contains(&k.as_str()))
        .collect();
    toml::Value::Table(filtered)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Invalid(e.to_string()))
}

fn dispatch(command: &str, settings: Settings) -> CliResult<(PathBuf, crate::report::Report)> {
    let ctx = Ctx::new(settings);
    let dir = ctx.out_dir.clone();
    let report = match command {
        "check-condition" => commands::check_condition(ctx)?,
        "decompose" => commands::decompose_cmd(ctx)?,
        "norms" => commands::norms(ctx)?,
        "example5" => commands::example5(ctx)?,
        "necessity" => commands::necessity(ctx)?,
        "lemma6" => commands::lemma6(ctx)?,
        "sobolev" => commands::sobolev(ctx)?,
        "report" => commands::report(ctx)?,
        other => return Err(CliError::Usage(format!("unknown command {other}"))),
    };
    Ok((dir, report))
}

/// Parses `argv` (program name first), runs the command and writes its
/// report. `vars` is the process environment.
pub fn run<I, T>(argv: I, vars: &BTreeMap<String, String>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command_with_hidden_flags().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => return clap_error(e),
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => return clap_error(e),
    };
    let name = cli.command.name();
    let result = Layers::load(cli.config.as_deref(), vars, cli.command.flags().clone())
        .and_then(|layers| resolve(name, &layers))
        .and_then(|s| dispatch(name, s))
        .and_then(|(dir, report)| {
            let path = out_path(&dir, name);
            write_text(&path, &to_pretty(&report.envelope()))?;
            Ok((path, report))
        });
    match result {
        Ok((path, report)) => {
            let mut stdout = report.summary.join("\n");
            stdout.push_str(&format!("\nreport: {}\n", path.display()));
            stdout.push_str(if report.pass { "PASS\n" } else { "FAIL\n" });
            Outcome {
                code: if report.pass { 0 } else { 1 },
                stdout,
                stderr: String::new(),
            }
        }
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("bol: {e}\n"),
        },
    }
}
