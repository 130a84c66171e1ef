//! Command-line harness for the `stopflow` library.
//!
//! [`run`] is the whole program minus process exit, so tests can drive it
//! in-process.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod verify;

use std::collections::BTreeMap;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Format};
use config::{merge_file, read_config, resolve, ExperimentConfig, SEED_ENV};
use error::CliError;
use report::{csv_document, json_document, to_json, Provenance};
use verify::{run_verify, VerifyOptions};

/// Parses `argv` (program name first) and runs the subcommand, writing the
/// document to `--out` or to `stdout`.
pub fn run(argv: &[String], stdout: &mut dyn Write) -> Result<(), CliError> {
    run_with_env(argv, std::env::var(SEED_ENV).ok(), stdout)
}

pub fn run_with_env(
    argv: &[String],
    env_seed: Option<String>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            write!(stdout, "{e}")?;
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string())),
    };
    let mut flags = cli.flags.clone();
    let file = match &flags.config {
        Some(path) => read_config(path)?,
        None => BTreeMap::new(),
    };
    merge_file(&mut flags, &file)?;
    let mut cfg = resolve(cli.command.name(), &flags, env_seed)?;
    if flags.format.is_none() && matches!(cli.command, Command::Verify(_)) {
        cfg.format = Format::Json;
    }
    let prov = Provenance::new(argv, cfg.clone());

    let pool = match flags.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {t} threads: {e}")))?,
        ),
        None => None,
    };
    let work = || dispatch(&cli.command, &cfg, &prov, &file);
    let (body, failure) = match pool {
        Some(pool) => pool.install(work)?,
        None => work()?,
    };

    let body = match (&cfg.out, cfg.format) {
        (Some(_), Format::Text) => prov.comment_block() + &body,
        _ => body,
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, body)?,
        None => stdout.write_all(body.as_bytes())?,
    }
    failure.map_or(Ok(()), Err)
}

fn file_flag(file: &BTreeMap<String, String>, key: &str) -> Result<bool, CliError> {
    match file.get(key).map(String::as_str) {
        None | Some("false") => Ok(false),
        Some("true") => Ok(true),
        Some(other) => Err(CliError::Usage(format!(
            "config key {key}: expected true or false, got `{other}`"
        ))),
    }
}

fn file_number(file: &BTreeMap<String, String>, key: &str) -> Result<Option<usize>, CliError> {
    file.get(key)
        .map(|v| {
            v.parse().map_err(|_| {
                CliError::Usage(format!("config key {key}: expected a number, got `{v}`"))
            })
        })
        .transpose()
}

/// Returns the rendered document and, for `verify`, the failure to report
/// after the document has been written.
fn dispatch(
    command: &Command,
    cfg: &ExperimentConfig,
    prov: &Provenance,
    file: &BTreeMap<String, String>,
) -> Result<(String, Option<CliError>), CliError> {
    let body = match command {
        Command::Exact => commands::exact(cfg, prov)?,
        Command::Simulate => commands::simulate(cfg, prov)?,
        Command::Bounds => commands::bounds(cfg, prov)?,
        Command::Scaling(a) => {
            let mut a = a.clone();
            a.step = a.step.or(file_number(file, "step")?);
            commands::scaling(cfg, &a, prov)?
        }
        Command::Trace(a) => {
            let mut a = a.clone();
            if a.perm.is_none() && a.perm_file.is_none() {
                a.perm = file.get("perm").cloned();
                a.perm_file = file.get("perm-file").map(Into::into);
            }
            commands::trace(cfg, &a, prov)?
        }
        Command::Verify(a) => {
            let opts = VerifyOptions {
                n_max: a.n_max.or(file_number(file, "n-max")?).unwrap_or(7),
                skip_dp: a.skip_dp || file_flag(file, "skip-dp")?,
                unguarded: a.unguarded,
                fault: a.inject_fault,
            };
            let verdict = run_verify(&opts)?;
            let failure = (!verdict.passed).then(|| {
                let failed: Vec<_> = verdict
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name)
                    .collect();
                CliError::Verification(failed.join(", "))
            });
            let body = match cfg.format {
                Format::Json => json_document(prov, to_json(&verdict)?)?,
                Format::Csv => csv_document(
                    prov,
                    &["check", "passed", "detail"],
                    verdict
                        .checks
                        .iter()
                        .map(|c| [c.name.to_string(), c.passed.to_string(), c.detail.clone()]),
                )?,
                Format::Text => {
                    let mut s: String = verdict
                        .checks
                        .iter()
                        .map(|c| {
                            format!(
                                "{} {}: {}\n",
                                if c.passed { "PASS" } else { "FAIL" },
                                c.name,
                                c.detail
                            )
                        })
                        .collect();
                    s.push_str(if verdict.passed {
                        "all checks passed\n"
                    } else {
                        "verification FAILED\n"
                    });
                    s
                }
            };
            return Ok((body, failure));
        }
    };
    Ok((body, None))
}
