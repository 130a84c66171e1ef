//! Monte Carlo estimation with reproducible per-trial streams.
//!
//! Trial `i` under master seed `s` draws from `ChaCha8(s ^ splitmix64(i))`,
//! so results do not depend on thread count or scheduling.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PathPower;
use crate::oracle::{continuous_win_indicator, ContinuousArrival};
use crate::strategy::{run_strategy, Strategy};

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(master_seed ^ splitmix64(trial))
}

pub fn random_arrivals<R: RngCore>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (1..=n).collect();
    perm.shuffle(rng);
    perm
}

/// Win count over `trials` Bernoulli outcomes, with normal-approximation
/// 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub trials: u64,
    pub wins: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Estimate {
    pub fn from_counts(wins: u64, trials: u64) -> Self {
        let est = wins as f64 / trials as f64;
        let stderr = (est * (1.0 - est) / trials as f64).sqrt();
        Self {
            trials,
            wins,
            estimate: est,
            stderr,
            ci_lo: (est - 1.96 * stderr).max(0.0),
            ci_hi: (est + 1.96 * stderr).min(1.0),
        }
    }

    /// Distance to `target` in standard errors. An exact zero standard
    /// error counts as infinitely far unless the estimate is exact.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.estimate - target;
        if self.stderr == 0.0 {
            return if diff == 0.0 { 0.0 } else { f64::INFINITY };
        }
        diff / self.stderr
    }

    /// Binomial standard error evaluated at `target` rather than at the
    /// estimate; stays positive when every trial lands the same way.
    pub fn z_score_at(&self, target: f64) -> f64 {
        let se = (target * (1.0 - target) / self.trials as f64).sqrt();
        (self.estimate - target) / se
    }
}

fn count_parallel(trials: u64, seed: u64, win: impl Fn(&mut ChaCha8Rng) -> bool + Sync) -> u64 {
    (0..trials)
        .into_par_iter()
        .map(|i| win(&mut trial_rng(seed, i)) as u64)
        .sum()
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::OutOfRange("trials must be at least 1".into()));
    }
    Ok(())
}

/// Runs `strategy` on uniformly random arrival orders. Randomised strategies
/// are reseeded per trial from the trial stream.
pub fn simulate(
    graph: &PathPower,
    strategy: &Strategy,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    check_trials(trials)?;
    let wins = count_parallel(trials, seed, |rng| {
        let arrivals = random_arrivals(graph.n(), rng);
        let s = strategy.with_seed(rng.next_u64());
        run_strategy(&s, graph, &arrivals)
            .expect("random arrivals are a permutation")
            .win
    });
    Ok(Estimate::from_counts(wins, trials))
}

/// Mean of the continuous-time win indicator over uniform arrival times.
pub fn simulate_continuous(graph: &PathPower, trials: u64, seed: u64) -> Result<Estimate> {
    check_trials(trials)?;
    // surface the k < n - 2 requirement before spawning work
    continuous_win_indicator(
        graph,
        &ContinuousArrival {
            times: vec![0.0; graph.n()],
        },
    )?;
    let wins = count_parallel(trials, seed, |rng| {
        let arrival = ContinuousArrival::sample(graph.n(), rng);
        continuous_win_indicator(graph, &arrival).expect("validated above")
    });
    Ok(Estimate::from_counts(wins, trials))
}
