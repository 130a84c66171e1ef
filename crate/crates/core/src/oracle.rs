//! Ground truth at desk scale.
//!
//! Everything here works by exhaustive counting over arrival orders, so it
//! shares no code path with the closed forms in [`crate::exact`].

use std::collections::{HashMap, HashSet};

use itertools::Itertools;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PathPower;
use crate::observer::ObservationEvent;
use crate::strategy::{run_strategy_tapped, Strategy, StrategyKind};

/// Size caps for the exponential routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Largest `n` for `n!` enumeration.
    pub enumeration: usize,
    /// Largest `n` for the information-state dynamic program.
    pub dp: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            enumeration: 9,
            dp: 7,
        }
    }
}

impl Limits {
    pub fn unlimited() -> Self {
        Self {
            enumeration: usize::MAX,
            dp: usize::MAX,
        }
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// Sums `f` over every permutation of `1..=n`, split across threads by first element.
pub fn sum_over_permutations<F>(n: usize, f: F) -> u64
where
    F: Fn(&[usize]) -> u64 + Sync,
{
    (1..=n)
        .into_par_iter()
        .map(|first| {
            let rest: Vec<usize> = (1..=n).filter(|&p| p != first).collect();
            let mut perm = Vec::with_capacity(n);
            rest.iter()
                .copied()
                .permutations(n - 1)
                .map(|tail| {
                    perm.clear();
                    perm.push(first);
                    perm.extend(tail);
                    f(&perm)
                })
                .sum::<u64>()
        })
        .sum()
}

fn check_enumeration(graph: &PathPower, limits: &Limits) -> Result<()> {
    if graph.n() > limits.enumeration {
        return Err(Error::ResourceLimit {
            what: "permutation enumeration",
            n: graph.n(),
            limit: limits.enumeration,
        });
    }
    Ok(())
}

/// Winning arrival orders for the rule "reject the first `r`, take the next
/// maximal arrival", for every `r` in `0..=n`.
pub fn threshold_win_counts(graph: &PathPower, limits: &Limits) -> Result<Vec<u64>> {
    check_enumeration(graph, limits)?;
    (0..=graph.n())
        .map(|r| win_count(graph, &Strategy::classical_threshold(r), &|_| {}))
        .collect()
}

fn win_count<T>(graph: &PathPower, strategy: &Strategy, tap: &T) -> Result<u64>
where
    T: Fn(&mut ObservationEvent) + Sync,
{
    let n = graph.n();
    Ok(sum_over_permutations(n, |perm| {
        let rec = run_strategy_tapped(strategy, graph, perm, tap).expect("valid permutation");
        rec.win as u64
    }))
}

/// Exact win probability under uniformly random arrival orders.
///
/// For `tau_p_star` the number of rejected arrivals is integrated out:
/// `sum_M C(n,M) p^M (1-p)^(n-M) P[win | M]`, with `p` taken as the exact
/// binary value of the float.
pub fn brute_force_win_probability(n: usize, k: usize, strategy: &Strategy) -> Result<BigRational> {
    brute_force_win_probability_with(n, k, strategy, &Limits::default())
}

pub fn brute_force_win_probability_with(
    n: usize,
    k: usize,
    strategy: &Strategy,
    limits: &Limits,
) -> Result<BigRational> {
    brute_force_win_probability_tapped(n, k, strategy, limits, &|_| {})
}

#[doc(hidden)]
pub fn brute_force_win_probability_tapped<T>(
    n: usize,
    k: usize,
    strategy: &Strategy,
    limits: &Limits,
    tap: &T,
) -> Result<BigRational>
where
    T: Fn(&mut ObservationEvent) + Sync,
{
    let graph = PathPower::new(n, k)?;
    check_enumeration(&graph, limits)?;
    let total = BigInt::from(factorial(n));
    match strategy.kind {
        StrategyKind::TauPStar { p } => {
            let p = BigRational::from_float(p)
                .ok_or_else(|| Error::OutOfRange(format!("p = {p} is not finite")))?;
            let q = BigRational::one() - &p;
            let mut acc = BigRational::zero();
            for m in 0..=n {
                let wins = win_count(&graph, &Strategy::classical_threshold(m), tap)?;
                let weight = BigRational::from_integer(binomial(n, m))
                    * num_traits::pow(p.clone(), m)
                    * num_traits::pow(q.clone(), n - m);
                acc += weight * BigRational::new(BigInt::from(wins), total.clone());
            }
            Ok(acc)
        }
        _ => {
            let wins = win_count(&graph, strategy, tap)?;
            Ok(BigRational::new(BigInt::from(wins), total))
        }
    }
}

fn binomial(n: usize, r: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// What the selector knows after `t` arrivals, with absolute placement
/// quotiented out.
///
/// Entry `i` describes the `i`-th arrival as (component rank, offset from the
/// component's lowest vertex). Components are ranked by their earliest
/// arrival. Two prefixes share a key iff they induce the same labelled
/// subgraph on arrival indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InfoState(Vec<(u16, u16)>);

impl InfoState {
    pub fn from_prefix(k: usize, prefix: &[usize]) -> Self {
        let t = prefix.len();
        let mut order: Vec<usize> = (0..t).collect();
        order.sort_by_key(|&i| prefix[i]);

        let mut comp_of = vec![0usize; t];
        let mut comp_lo = Vec::new();
        let mut comp_first = Vec::new();
        for (rank, &i) in order.iter().enumerate() {
            if rank == 0 || prefix[i] - prefix[order[rank - 1]] > k {
                comp_lo.push(prefix[i]);
                comp_first.push(i);
            }
            let c = comp_lo.len() - 1;
            comp_of[i] = c;
            comp_first[c] = comp_first[c].min(i);
        }
        let mut by_first: Vec<usize> = (0..comp_lo.len()).collect();
        by_first.sort_by_key(|&c| comp_first[c]);
        let mut rank_of = vec![0u16; comp_lo.len()];
        for (r, &c) in by_first.iter().enumerate() {
            rank_of[c] = r as u16;
        }
        Self(
            (0..t)
                .map(|i| {
                    let c = comp_of[i];
                    (rank_of[c], (prefix[i] - comp_lo[c]) as u16)
                })
                .collect(),
        )
    }

    pub fn t(&self) -> usize {
        self.0.len()
    }

    fn offsets_by_component(&self) -> Vec<Vec<usize>> {
        let count = self
            .0
            .iter()
            .map(|&(c, _)| c as usize + 1)
            .max()
            .unwrap_or(0);
        let mut comps = vec![Vec::new(); count];
        for &(c, off) in &self.0 {
            comps[c as usize].push(off as usize);
        }
        comps
    }

    pub fn component_count(&self) -> usize {
        self.offsets_by_component().len()
    }

    /// Inner slots: missing positions between each component's extremes.
    pub fn inner(&self) -> usize {
        self.offsets_by_component()
            .iter()
            .map(|offs| offs.iter().max().unwrap() + 1 - offs.len())
            .sum()
    }

    /// Whether the newest arrival has no known vertex within `k` below it.
    pub fn newest_is_max(&self, k: usize) -> bool {
        let Some((&(c, off), rest)) = self.0.split_last() else {
            return false;
        };
        rest.iter()
            .all(|&(c2, off2)| c2 != c || off2 >= off || (off - off2) as usize > k)
    }
}

/// Per-state counts from the prefix enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoStateStats {
    pub state: InfoState,
    /// Full arrival orders passing through this state.
    pub orders: BigUint,
    /// Of those, orders whose newest arrival is the sink.
    pub sink_now: BigUint,
}

#[derive(Debug, Clone)]
pub struct InfoStateTree {
    pub n: usize,
    pub k: usize,
    /// `levels[t - 1]` holds the states after `t` arrivals.
    pub levels: Vec<Vec<InfoStateStats>>,
    /// `children[t - 1][i]`: indices into `levels[t]` reachable from state `i`.
    children: Vec<Vec<Vec<usize>>>,
}

impl InfoStateTree {
    /// Enumerates every arrival prefix and groups them by [`InfoState`].
    pub fn build(n: usize, k: usize, limits: &Limits) -> Result<Self> {
        PathPower::new(n, k)?;
        if n > limits.dp {
            return Err(Error::ResourceLimit {
                what: "information-state dynamic program",
                n,
                limit: limits.dp,
            });
        }
        struct Level {
            index: HashMap<InfoState, usize>,
            stats: Vec<(InfoState, u64, u64)>,
            children: Vec<HashSet<usize>>,
        }
        let mut levels: Vec<Level> = (0..n)
            .map(|_| Level {
                index: HashMap::new(),
                stats: Vec::new(),
                children: Vec::new(),
            })
            .collect();

        fn visit(
            n: usize,
            k: usize,
            prefix: &mut Vec<usize>,
            used: &mut [bool],
            parent: Option<usize>,
            levels: &mut [Level],
        ) {
            for pos in 1..=n {
                if used[pos] {
                    continue;
                }
                used[pos] = true;
                prefix.push(pos);
                let t = prefix.len();
                let key = InfoState::from_prefix(k, prefix);
                let level = &mut levels[t - 1];
                let next = level.stats.len();
                let idx = *level.index.entry(key.clone()).or_insert(next);
                if idx == next {
                    level.stats.push((key, 0, 0));
                    level.children.push(HashSet::new());
                }
                level.stats[idx].1 += 1;
                if pos == 1 {
                    level.stats[idx].2 += 1;
                }
                if let Some(p) = parent {
                    levels[t - 2].children[p].insert(idx);
                }
                if t < n {
                    visit(n, k, prefix, used, Some(idx), levels);
                }
                prefix.pop();
                used[pos] = false;
            }
        }
        visit(
            n,
            k,
            &mut Vec::with_capacity(n),
            &mut vec![false; n + 1],
            None,
            &mut levels,
        );

        let mut out_levels = Vec::with_capacity(n);
        let mut out_children = Vec::with_capacity(n);
        for (t0, level) in levels.into_iter().enumerate() {
            // each prefix of length t extends to (n - t)! full orders
            let completions = factorial(n - (t0 + 1));
            out_levels.push(
                level
                    .stats
                    .into_iter()
                    .map(|(state, prefixes, sink)| InfoStateStats {
                        state,
                        orders: BigUint::from(prefixes) * &completions,
                        sink_now: BigUint::from(sink) * &completions,
                    })
                    .collect(),
            );
            out_children.push(
                level
                    .children
                    .into_iter()
                    .map(|set| {
                        let mut v: Vec<_> = set.into_iter().collect();
                        v.sort_unstable();
                        v
                    })
                    .collect(),
            );
        }
        Ok(Self {
            n,
            k,
            levels: out_levels,
            children: out_children,
        })
    }

    pub fn children(&self, t: usize, index: usize) -> &[usize] {
        &self.children[t - 1][index]
    }

    /// Backward induction. Values are kept as counts of winning orders so the
    /// recursion is integer-only: `U(s) = max(sink_now(s), sum_children U(c))`.
    pub fn optimal_value(&self) -> BigRational {
        let n = self.n;
        let mut next: Vec<BigUint> = self.levels[n - 1]
            .iter()
            .map(|s| s.sink_now.clone())
            .collect();
        for t in (1..n).rev() {
            next = self.levels[t - 1]
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let cont: BigUint = self.children(t, i).iter().map(|&c| &next[c]).sum();
                    cont.max(s.sink_now.clone())
                })
                .collect();
        }
        let wins: BigUint = next.iter().sum();
        BigRational::new(BigInt::from(wins), BigInt::from(factorial(n)))
    }
}

/// Best success probability over all stopping rules adapted to the labelled
/// observations.
pub fn dp_optimal_value(n: usize, k: usize) -> Result<BigRational> {
    dp_optimal_value_with(n, k, &Limits::default())
}

pub fn dp_optimal_value_with(n: usize, k: usize, limits: &Limits) -> Result<BigRational> {
    Ok(InfoStateTree::build(n, k, limits)?.optimal_value())
}

/// Arrival times `A_1..A_n` in `[0, 1]`; index 0 is the sink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousArrival {
    pub times: Vec<f64>,
}

impl ContinuousArrival {
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            times: (0..n).map(|_| rng.random::<f64>()).collect(),
        }
    }

    pub fn sink_time(&self) -> f64 {
        self.times[0]
    }

    /// Positions sorted by arrival time, ties broken by position.
    pub fn arrival_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (1..=self.times.len()).collect();
        order.sort_by(|&a, &b| {
            self.times[a - 1]
                .total_cmp(&self.times[b - 1])
                .then(a.cmp(&b))
        });
        order
    }
}

/// The optimal rule wins iff the top vertex arrives before the sink and no
/// window `v_{i+1}..v_{i+k+1}`, `1 <= i <= n-k-2`, is entirely later than the sink.
pub fn continuous_win_indicator(graph: &PathPower, arrival: &ContinuousArrival) -> Result<bool> {
    let (n, k) = (graph.n(), graph.k());
    if k + 2 >= n {
        return Err(Error::OutOfRange(format!(
            "continuous indicator needs k < n - 2, got n={n}, k={k}"
        )));
    }
    if arrival.times.len() != n {
        return Err(Error::OutOfRange(format!(
            "expected {n} arrival times, got {}",
            arrival.times.len()
        )));
    }
    let p = arrival.sink_time();
    let a = |pos: usize| arrival.times[pos - 1];
    if a(n) >= p {
        return Ok(false);
    }
    // scan positions 2..n-1 for a run of k+1 late arrivals
    let mut run = 0;
    for pos in 2..n {
        if a(pos) > p {
            run += 1;
            if run > k {
                return Ok(false);
            }
        } else {
            run = 0;
        }
    }
    Ok(true)
}

/// Sorted set of positions among the first `M` arrivals, `M ~ Binomial(n, p)`
/// over a uniform order. Each position is then included independently with
/// probability `p`.
pub fn sample_prefix_membership(n: usize, p: f64, seed: u64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("p = {p} is not in [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = Binomial::new(n as u64, p)
        .expect("p checked")
        .sample(&mut rng) as usize;
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(&mut rng);
    let mut chosen = order[..m].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}
