//! Output documents and their provenance headers.

use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const TOOL: &str = "stopflow";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Monte Carlo summary. `wall_time` is the only field that varies between
/// reruns and is emitted in JSON only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub n: usize,
    pub k: usize,
    pub strategy: String,
    pub trials: u64,
    pub wins: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

pub const SIMULATION_HEADER: [&str; 10] = [
    "n", "k", "strategy", "trials", "wins", "estimate", "stderr", "ci_lo", "ci_hi", "seed",
];

impl SimulationReport {
    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.k.to_string(),
            self.strategy.clone(),
            self.trials.to_string(),
            self.wins.to_string(),
            self.estimate.to_string(),
            self.stderr.to_string(),
            self.ci_lo.to_string(),
            self.ci_hi.to_string(),
            self.seed.to_string(),
        ]
    }

    pub fn set_wall_time(&mut self, elapsed: Duration) {
        self.wall_time = Some(elapsed.as_secs_f64());
    }
}

#[derive(Debug, Clone)]
pub struct Provenance {
    pub command_line: String,
    pub config: ExperimentConfig,
}

impl Provenance {
    pub fn new(argv: &[String], config: ExperimentConfig) -> Self {
        let command_line = std::iter::once(TOOL.to_string())
            .chain(argv.iter().skip(1).cloned())
            .collect::<Vec<_>>()
            .join(" ");
        Self {
            command_line,
            config,
        }
    }

    /// `#`-prefixed header lines for CSV and text files.
    pub fn comment_block(&self) -> String {
        let config = self
            .config
            .pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        format!(
            "# tool: {TOOL} {VERSION}\n# command: {}\n# seed: {}\n# config: {config}\n",
            self.command_line, self.config.seed
        )
    }

    pub fn json(&self) -> Value {
        json!({
            "tool": TOOL,
            "version": VERSION,
            "command_line": self.command_line,
            "seed": self.config.seed,
        })
    }
}

/// `{"provenance": .., "config": .., "report": ..}`, pretty-printed.
pub fn json_document(prov: &Provenance, report: Value) -> Result<String, CliError> {
    let doc = json!({
        "provenance": prov.json(),
        "config": serde_json::to_value(&prov.config).map_err(json_error)?,
        "report": report,
    });
    let mut s = serde_json::to_string_pretty(&doc).map_err(json_error)?;
    s.push('\n');
    Ok(s)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Value, CliError> {
    serde_json::to_value(value).map_err(json_error)
}

fn json_error(e: serde_json::Error) -> CliError {
    CliError::Usage(format!("cannot serialise output: {e}"))
}

/// CSV body with a provenance comment block in front.
pub fn csv_document<I, R>(prov: &Provenance, header: &[&str], rows: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row).map_err(csv_error)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    let body = String::from_utf8(body).expect("csv writer emits the utf-8 it was given");
    Ok(prov.comment_block() + &body)
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Usage(format!("cannot write csv: {e}"))
}
