//! Experiment configuration: command-line flags over a `key=value` file over
//! environment over defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::args::{Flags, Format, StrategyName};
use crate::error::CliError;

pub const SEED_ENV: &str = "STOPFLOW_SEED";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub mode: String,
    pub n: Option<String>,
    pub k: Option<usize>,
    pub strategy: StrategyName,
    pub p: Option<f64>,
    pub epsilon: Option<f64>,
    pub r: Option<String>,
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// Parses a flat `key=value` file. Blank lines and `#` comments are skipped;
/// keys use the flag spelling without dashes (`n`, `trials`, `n-max` ...).
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        map.insert(key.trim().replace('_', "-"), value.trim().to_string());
    }
    Ok(map)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Usage(format!("config key {key}: {e}")))
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T, CliError> {
    T::from_str(value, true).map_err(|e| CliError::Usage(format!("config key {key}: {e}")))
}

/// Fills every `None` in `flags` from the file map. Unknown keys are an error.
pub fn merge_file(flags: &mut Flags, file: &BTreeMap<String, String>) -> Result<(), CliError> {
    for (key, value) in file {
        match key.as_str() {
            "n" => flags.n = flags.n.take().or(Some(value.clone())),
            "k" => flags.k = flags.k.or(Some(parse_value(key, value)?)),
            "seed" => flags.seed = flags.seed.or(Some(parse_value(key, value)?)),
            "trials" => flags.trials = flags.trials.or(Some(parse_value(key, value)?)),
            "strategy" => flags.strategy = flags.strategy.or(Some(parse_enum(key, value)?)),
            "p" => flags.p = flags.p.or(Some(parse_value(key, value)?)),
            "epsilon" => flags.epsilon = flags.epsilon.or(Some(parse_value(key, value)?)),
            "r" => flags.r = flags.r.take().or(Some(value.clone())),
            "out" => flags.out = flags.out.take().or(Some(PathBuf::from(value))),
            "format" => flags.format = flags.format.or(Some(parse_enum(key, value)?)),
            "threads" => flags.threads = flags.threads.or(Some(parse_value(key, value)?)),
            // subcommand-specific keys are read by the subcommands themselves
            "n-max" | "skip-dp" | "step" | "perm" | "perm-file" => {}
            other => return Err(CliError::Usage(format!("unknown config key `{other}`"))),
        }
    }
    Ok(())
}

pub fn resolve(
    mode: &str,
    flags: &Flags,
    env_seed: Option<String>,
) -> Result<ExperimentConfig, CliError> {
    let seed = match (flags.seed, env_seed) {
        (Some(s), _) => s,
        (None, Some(s)) => s
            .trim()
            .parse()
            .map_err(|e| CliError::Usage(format!("{SEED_ENV}: {e}")))?,
        (None, None) => 0,
    };
    Ok(ExperimentConfig {
        mode: mode.to_string(),
        n: flags.n.clone(),
        k: flags.k,
        strategy: flags.strategy.unwrap_or(StrategyName::TauN),
        p: flags.p,
        epsilon: flags.epsilon,
        r: flags.r.clone(),
        trials: flags.trials.unwrap_or(100_000),
        seed,
        out: flags.out.clone(),
        format: flags.format.unwrap_or(Format::Text),
    })
}

impl ExperimentConfig {
    pub fn single_n(&self) -> Result<usize, CliError> {
        let raw = self
            .n
            .as_deref()
            .ok_or_else(|| CliError::Usage("--n is required".into()))?;
        raw.trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--n expects an integer, got `{raw}`")))
    }

    pub fn require_k(&self) -> Result<usize, CliError> {
        self.k
            .ok_or_else(|| CliError::Usage("--k is required".into()))
    }

    /// `(key, value)` pairs in a fixed order, for provenance headers.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        vec![
            ("mode", self.mode.clone()),
            ("n", opt(self.n.clone())),
            ("k", opt(self.k.map(|k| k.to_string()))),
            ("strategy", value_name(&self.strategy)),
            ("p", opt(self.p.map(|p| p.to_string()))),
            ("epsilon", opt(self.epsilon.map(|e| e.to_string()))),
            ("r", opt(self.r.clone())),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            (
                "out",
                opt(self.out.as_ref().map(|p| p.display().to_string())),
            ),
            ("format", value_name(&self.format)),
        ]
    }
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

/// Parses an n-grid: `N`, `A..B` (inclusive, optional `:STEP`), or `A,B,C`.
pub fn parse_grid(grid: &str, step: Option<usize>) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse n-grid `{grid}`"));
    let grid = grid.trim();
    if let Some((lo, rest)) = grid.split_once("..") {
        let (hi, inline_step) = match rest.split_once(':') {
            Some((hi, s)) => (hi, Some(s.trim().parse::<usize>().map_err(|_| bad())?)),
            None => (rest, None),
        };
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad())?;
        let step = inline_step.or(step).unwrap_or(1);
        if step == 0 || lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    grid.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("6", None).unwrap(), vec![6]);
        assert_eq!(parse_grid("10..30", Some(10)).unwrap(), vec![10, 20, 30]);
        assert_eq!(parse_grid("10..=30:10", None).unwrap(), vec![10, 20, 30]);
        assert_eq!(parse_grid("3, 5,9", None).unwrap(), vec![3, 5, 9]);
        assert!(parse_grid("30..10", None).is_err());
        assert!(parse_grid("x", None).is_err());
    }

    #[test]
    fn file_values_fill_gaps_only() {
        let file =
            parse_config_text("# comment\nn = 9\nk=2\ntrials=500\nstrategy=tau_p_star\n").unwrap();
        let mut flags = Flags {
            k: Some(3),
            ..Flags::default()
        };
        merge_file(&mut flags, &file).unwrap();
        assert_eq!(flags.n.as_deref(), Some("9"));
        assert_eq!(flags.k, Some(3));
        assert_eq!(flags.trials, Some(500));
        assert_eq!(flags.strategy, Some(StrategyName::TauPStar));
    }

    #[test]
    fn bad_config_lines() {
        assert!(parse_config_text("just words").is_err());
        let file = parse_config_text("colour=blue").unwrap();
        assert!(merge_file(&mut Flags::default(), &file).is_err());
    }

    #[test]
    fn seed_precedence() {
        let flags = Flags::default();
        assert_eq!(resolve("x", &flags, None).unwrap().seed, 0);
        assert_eq!(resolve("x", &flags, Some("41".into())).unwrap().seed, 41);
        let flags = Flags {
            seed: Some(7),
            ..Flags::default()
        };
        assert_eq!(resolve("x", &flags, Some("41".into())).unwrap().seed, 7);
        assert!(resolve("x", &Flags::default(), Some("nope".into())).is_err());
    }
}
