//! Stopping rules and the runner that feeds them observations.
//!
//! A rule only ever sees [`ObservationEvent`]s. Ground-truth positions stay
//! inside the runner, which uses them solely to fill in the [`StopRecord`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PathPower;
use crate::observer::{ObservationEvent, Observer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    /// Stop at the first maximal arrival once the slack is zero.
    TauN,
    /// Reject a Binomial(n, p) number of arrivals, then take the first maximal one.
    TauPStar { p: f64 },
    /// Reject the first `r` arrivals, then take the first maximal one.
    ClassicalThreshold { r: usize },
    /// Take the very first arrival.
    FirstMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub kind: StrategyKind,
    /// Only consumed by randomised kinds.
    pub seed: u64,
}

impl Strategy {
    pub fn tau_n() -> Self {
        Self::deterministic(StrategyKind::TauN)
    }

    pub fn tau_p_star(p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!("p = {p} is not in [0, 1]")));
        }
        Ok(Self {
            kind: StrategyKind::TauPStar { p },
            seed,
        })
    }

    pub fn classical_threshold(r: usize) -> Self {
        Self::deterministic(StrategyKind::ClassicalThreshold { r })
    }

    /// Threshold `floor(n / e)` of the classical secretary rule.
    pub fn classical_auto(n: usize) -> Self {
        Self::classical_threshold((n as f64 / std::f64::consts::E).floor() as usize)
    }

    pub fn first_max() -> Self {
        Self::deterministic(StrategyKind::FirstMax)
    }

    fn deterministic(kind: StrategyKind) -> Self {
        Self { kind, seed: 0 }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            StrategyKind::TauN => "tau_n",
            StrategyKind::TauPStar { .. } => "tau_p_star",
            StrategyKind::ClassicalThreshold { .. } => "classical_threshold",
            StrategyKind::FirstMax => "first_max",
        }
    }

    /// Short label including parameters, e.g. `tau_p_star(p=0.5)`.
    pub fn describe(&self) -> String {
        match self.kind {
            StrategyKind::TauPStar { p } => format!("tau_p_star(p={p})"),
            StrategyKind::ClassicalThreshold { r } => format!("classical_threshold(r={r})"),
            _ => self.name().to_string(),
        }
    }

    /// Per-run decision state. Randomness is drawn here, once, from the seed.
    fn start(&self, graph: &PathPower) -> Rule {
        match self.kind {
            StrategyKind::TauN => Rule::TauN,
            StrategyKind::FirstMax => Rule::First,
            StrategyKind::ClassicalThreshold { r } => Rule::SkipThenMax { skip: r },
            StrategyKind::TauPStar { p } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let skip = Binomial::new(graph.n() as u64, p)
                    .expect("p validated at construction")
                    .sample(&mut rng) as usize;
                Rule::SkipThenMax { skip }
            }
        }
    }
}

enum Rule {
    TauN,
    First,
    SkipThenMax { skip: usize },
}

impl Rule {
    fn stop(&self, ev: &ObservationEvent) -> bool {
        match *self {
            Rule::TauN => ev.condition_met && ev.is_max,
            Rule::First => true,
            Rule::SkipThenMax { skip } => ev.t > skip && ev.is_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRecord {
    pub stop_index: usize,
    pub chosen_position: usize,
    pub win: bool,
    /// `is_max` of the observation at `stop_index`.
    pub chosen_was_max: bool,
}

/// Checks that `arrivals` is a permutation of `1..=n`.
pub fn validate_permutation(graph: &PathPower, arrivals: &[usize]) -> Result<()> {
    let n = graph.n();
    if arrivals.len() != n {
        return Err(Error::NotAPermutation {
            n,
            reason: format!("expected {n} entries, got {}", arrivals.len()),
        });
    }
    let mut seen = vec![false; n + 1];
    for &p in arrivals {
        if p == 0 || p > n {
            return Err(Error::NotAPermutation {
                n,
                reason: format!("entry {p} out of range"),
            });
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::NotAPermutation {
                n,
                reason: format!("entry {p} repeated"),
            });
        }
    }
    Ok(())
}

pub fn run_strategy(
    strategy: &Strategy,
    graph: &PathPower,
    arrivals: &[usize],
) -> Result<StopRecord> {
    run_strategy_tapped(strategy, graph, arrivals, |_| {})
}

/// Like [`run_strategy`], but every event passes through `tap` before the
/// rule sees it. Used by the harness to inject faults into its self-test.
#[doc(hidden)]
pub fn run_strategy_tapped(
    strategy: &Strategy,
    graph: &PathPower,
    arrivals: &[usize],
    mut tap: impl FnMut(&mut ObservationEvent),
) -> Result<StopRecord> {
    validate_permutation(graph, arrivals)?;
    let rule = strategy.start(graph);
    let n = graph.n();
    let mut observer = Observer::new(*graph);
    for (i, &pos) in arrivals.iter().enumerate() {
        let mut ev = observer.observe(pos)?;
        tap(&mut ev);
        if i + 1 == n || rule.stop(&ev) {
            return Ok(StopRecord {
                stop_index: ev.t,
                chosen_position: pos,
                win: pos == 1,
                chosen_was_max: ev.is_max,
            });
        }
    }
    unreachable!("a validated permutation always reaches t = n")
}
