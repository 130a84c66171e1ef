//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;

use stopflow::bounds::{best_lower_bound, gamma};
use stopflow::exact::{exact_tables, success_probability_exact, to_f64};
use stopflow::oracle::{brute_force_win_probability, dp_optimal_value};
use stopflow::sim::{simulate, simulate_continuous};
use stopflow::{run_strategy, Observer, PathPower, Strategy};
use stopflow_cli::run_with_env;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `(components, inner)` of an arrived set, from the sorted positions.
fn naive_components(k: usize, arrived: &[usize]) -> (usize, usize) {
    let mut sorted = arrived.to_vec();
    sorted.sort_unstable();
    let mut c = 1;
    let mut inner = 0;
    let mut lo = sorted[0];
    let mut size = 1;
    for w in sorted.windows(2) {
        if w[1] - w[0] > k {
            inner += w[0] - lo + 1 - size;
            c += 1;
            lo = w[1];
            size = 1;
        } else {
            size += 1;
        }
    }
    inner += sorted[sorted.len() - 1] - lo + 1 - size;
    (c, inner)
}

/// Step of the optimal rule computed from scratch: `(is_max, slack is zero)`.
fn naive_step(n: usize, k: usize, prefix: &[usize]) -> (bool, bool) {
    let t = prefix.len();
    let v = prefix[t - 1];
    let is_max = !prefix[..t - 1].iter().any(|&q| q < v && v - q <= k);
    let (c, b) = naive_components(k, prefix);
    (is_max, n - t == k * (c - 1) + b)
}

/// Probability that the optimal rule picks position 1, by enumeration with
/// no library code involved.
fn naive_win_probability(n: usize, k: usize) -> BigRational {
    let mut wins = 0i64;
    let mut total = 0i64;
    for perm in (1..=n).permutations(n) {
        total += 1;
        let stop = (1..=n)
            .find(|&t| {
                let (is_max, zero) = naive_step(n, k, &perm[..t]);
                is_max && zero
            })
            .unwrap_or(n);
        wins += (perm[stop - 1] == 1) as i64;
    }
    BigRational::new(BigInt::from(wins), BigInt::from(total))
}

fn formula_equals_enumeration() -> Outcome {
    let mut cases = 0;
    for n in 2..=8 {
        for k in 1..n {
            let exact = success_probability_exact(n, k).map_err(|e| e.to_string())?;
            let lib =
                brute_force_win_probability(n, k, &Strategy::tau_n()).map_err(|e| e.to_string())?;
            let naive = naive_win_probability(n, k);
            ensure(exact == lib && exact == naive, || {
                format!("n={n} k={k}: formula {exact}, library {lib}, naive {naive}")
            })?;
            cases += 1;
        }
    }
    Ok(format!("{cases} (n, k) pairs, exact equality"))
}

fn dp_equals_formula() -> Outcome {
    let mut cases = 0;
    for n in 3..=7 {
        for k in 1..n {
            let dp = dp_optimal_value(n, k).map_err(|e| e.to_string())?;
            let exact = success_probability_exact(n, k).map_err(|e| e.to_string())?;
            ensure(dp == exact, || format!("n={n} k={k}: dp {dp} vs {exact}"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} (n, k) pairs, exact equality"))
}

fn half_cases() -> Outcome {
    for n in 3..=8 {
        for k in [n - 2, n - 1] {
            let p = success_probability_exact(n, k).map_err(|e| e.to_string())?;
            ensure(p == q(1, 2), || format!("n={n} k={k}: {p}"))?;
        }
    }
    Ok("n = 3..8, k in {n-2, n-1}".into())
}

fn golden_trace() -> Outcome {
    let perm = [2, 9, 4, 7, 3, 1, 5, 8, 6];
    let graph = PathPower::new(9, 2).map_err(|e| e.to_string())?;
    let mut obs = Observer::new(graph);
    let mut b = Vec::new();
    for &v in &perm {
        b.push(obs.observe(v).map_err(|e| e.to_string())?.inner);
    }
    ensure(b == [0, 0, 1, 2, 1, 1, 2, 1, 0], || {
        format!("b-sequence {b:?}")
    })?;
    let naive_b: Vec<_> = (1..=9).map(|t| naive_components(2, &perm[..t]).1).collect();
    ensure(naive_b == b, || format!("naive b-sequence {naive_b:?}"))?;
    let rec = run_strategy(&Strategy::tau_n(), &graph, &perm).map_err(|e| e.to_string())?;
    ensure(rec.stop_index == 6 && rec.win, || {
        format!("stopped at {} win={}", rec.stop_index, rec.win)
    })?;

    let argv: Vec<String> = [
        "stopflow",
        "trace",
        "--n",
        "9",
        "--k",
        "2",
        "--perm",
        "2 9 4 7 3 1 5 8 6",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut out = Vec::new();
    run_with_env(&argv, None, &mut out).map_err(|e| e.to_string())?;
    let text = String::from_utf8(out).unwrap();
    ensure(
        text.contains("b: (0,0,1,2,1,1,2,1,0)") && text.contains("stop: t=6 v=1 WIN"),
        || format!("cli trace output:\n{text}"),
    )?;
    Ok("b = (0,0,1,2,1,1,2,1,0), stop at t=6, win".into())
}

fn derived_values() -> Outcome {
    for (n, expect) in [(5, q(9, 20)), (6, q(13, 30))] {
        let oracle = naive_win_probability(n, 2);
        ensure(oracle == expect, || format!("oracle({n},2) = {oracle}"))?;
        let exact = success_probability_exact(n, 2).map_err(|e| e.to_string())?;
        ensure(exact == expect, || format!("exact({n},2) = {exact}"))?;
    }
    Ok("exact(5,2) = 9/20, exact(6,2) = 13/30".into())
}

fn upper_sandwich() -> Outcome {
    let mut min_margin = f64::INFINITY;
    let mut max_scaled: f64 = 0.0;
    for k in 1..=3usize {
        let a = 1.0 / (k + 1) as f64;
        for n in (k + 1)..=200 {
            let p = to_f64(&exact_tables(n, k).map_err(|e| e.to_string())?.probability);
            let m = ((n - 2) / (k + 1)) as f64;
            let upper = gamma(m + 1.0) * gamma(1.0 + a) / gamma(m + 1.0 + a);
            let margin = upper - p;
            ensure(margin > 0.0, || {
                format!("n={n} k={k}: exact {p} upper {upper}")
            })?;
            let scaled = (n as f64).powf(a) * p;
            ensure(scaled <= 1.2879, || format!("n={n} k={k}: scaled {scaled}"))?;
            min_margin = min_margin.min(margin);
            max_scaled = max_scaled.max(scaled);
        }
    }
    Ok(format!(
        "min margin {min_margin:.4}, max scaled {max_scaled:.4}"
    ))
}

fn lower_bound() -> Outcome {
    let mut worst_z = f64::INFINITY;
    for k in 1..=3 {
        for n in [50, 100, 200] {
            let lb = best_lower_bound(n, k).map_err(|e| e.to_string())?;
            let graph = PathPower::new(n, k).map_err(|e| e.to_string())?;
            let s = Strategy::tau_p_star(lb.p, 0).map_err(|e| e.to_string())?;
            let est = simulate(&graph, &s, 100_000, 0x5EED + n as u64 + k as u64)
                .map_err(|e| e.to_string())?;
            ensure(est.estimate > lb.bound - 3.0 * est.stderr, || {
                format!(
                    "n={n} k={k}: estimate {} vs bound {}",
                    est.estimate, lb.bound
                )
            })?;
            let exact = to_f64(&success_probability_exact(n, k).map_err(|e| e.to_string())?);
            ensure(exact >= lb.bound, || {
                format!("n={n} k={k}: exact {exact} below {}", lb.bound)
            })?;
            worst_z = worst_z.min((est.estimate - lb.bound) / est.stderr);
        }
    }
    Ok(format!(
        "estimate minus bound is at least {worst_z:.1} standard errors"
    ))
}

fn continuous_model() -> Outcome {
    let mut zs = Vec::new();
    for (n, k) in [(9, 2), (12, 3), (10, 1)] {
        let graph = PathPower::new(n, k).map_err(|e| e.to_string())?;
        let exact = to_f64(&success_probability_exact(n, k).map_err(|e| e.to_string())?);
        let est = simulate_continuous(&graph, 1_000_000, 0xC0FFEE + n as u64)
            .map_err(|e| e.to_string())?;
        let z = est.z_score_at(exact);
        ensure(z.abs() <= 3.0, || {
            format!("n={n} k={k}: {} vs {exact} (z={z:.2})", est.estimate)
        })?;
        zs.push(format!("({n},{k}) z={z:+.2}"));
    }
    Ok(zs.join(", "))
}

fn monte_carlo_consistency() -> Outcome {
    let graph = PathPower::new(9, 2).map_err(|e| e.to_string())?;
    let exact = to_f64(&success_probability_exact(9, 2).map_err(|e| e.to_string())?);
    let est = simulate(&graph, &Strategy::tau_n(), 100_000, 7).map_err(|e| e.to_string())?;
    let z = est.z_score_at(exact);
    ensure(z.abs() <= 3.0, || {
        format!("{} vs {exact} (z={z:.2})", est.estimate)
    })?;

    let run = |extra: &[&str]| -> Result<String, String> {
        let mut argv: Vec<String> = [
            "stopflow", "simulate", "--n", "9", "--k", "2", "--trials", "100000", "--seed", "7",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        argv.extend(extra.iter().map(|s| s.to_string()));
        let mut out = Vec::new();
        run_with_env(&argv, None, &mut out).map_err(|e| e.to_string())?;
        Ok(String::from_utf8(out).unwrap())
    };
    let a = run(&["--format", "csv"])?;
    let b = run(&["--format", "csv"])?;
    ensure(a == b, || "csv reruns differ".into())?;
    let strip = |s: String| {
        s.lines()
            .filter(|l| !l.contains("\"wall_time\""))
            .join("\n")
    };
    let a = strip(run(&["--format", "json"])?);
    let b = strip(run(&["--format", "json"])?);
    ensure(a == b, || "json reruns differ outside wall_time".into())?;
    let one = run(&["--format", "csv", "--threads", "1"])?;
    let three = run(&["--format", "csv", "--threads", "3"])?;
    let body = |s: &str| s.lines().filter(|l| !l.starts_with('#')).join("\n");
    ensure(body(&one) == body(&three), || {
        "thread count changed the result".into()
    })?;
    Ok(format!(
        "estimate {} vs exact {exact:.6} (z={z:+.2}), reruns identical",
        est.estimate
    ))
}

fn structural_invariants() -> Outcome {
    let mut orders = 0u64;
    for n in 2..=7 {
        for k in 1..n {
            let graph = PathPower::new(n, k).map_err(|e| e.to_string())?;
            // (m, c) -> (orders, newest maximal)
            let mut ratio = std::collections::HashMap::<(usize, usize), (u64, u64)>::new();
            for perm in (1..=n).permutations(n) {
                orders += 1;
                let mut obs = Observer::new(graph);
                let mut met = false;
                for t in 1..=n {
                    let ev = obs.observe(perm[t - 1]).map_err(|e| e.to_string())?;
                    let (c, b) = naive_components(k, &perm[..t]);
                    let forced = k * (c - 1) + b;
                    ensure(forced <= n - t && ev.slack == n - t - forced, || {
                        format!("slack at n={n} k={k} {perm:?} t={t}")
                    })?;
                    ensure(!met || ev.condition_met, || {
                        format!("condition dropped: {perm:?} t={t}")
                    })?;
                    ensure(!met || !ev.is_max, || {
                        format!("maximal after condition: {perm:?} t={t}")
                    })?;
                    ensure(ev.is_max == naive_step(n, k, &perm[..t]).0, || {
                        format!("is_max: {perm:?} t={t}")
                    })?;
                    met |= ev.condition_met;
                    let e = ratio.entry((t, c)).or_default();
                    e.0 += 1;
                    e.1 += ev.is_max as u64;
                }
            }
            for (&(m, c), &(count, max)) in &ratio {
                ensure(max * m as u64 == count * c as u64, || {
                    format!("n={n} k={k} m={m} c={c}: {max}/{count} maximal")
                })?;
            }
            // W_m counts arrived m-sets holding both ends with every missing run at most k
            let tables = exact_tables(n, k).map_err(|e| e.to_string())?;
            for row in &tables.rows {
                let count = (1..=n)
                    .combinations(row.m)
                    .filter(|set| {
                        set[0] == 1
                            && set[row.m - 1] == n
                            && set.windows(2).all(|w| w[1] - w[0] <= k + 1)
                    })
                    .count();
                ensure(row.w == count.into(), || {
                    format!("W at n={n} k={k} m={}: {} vs {count}", row.m, row.w)
                })?;
            }
        }
    }
    Ok(format!("{orders} arrival orders, n <= 7"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "formula equals enumeration (n <= 8)",
            formula_equals_enumeration,
        ),
        (
            "dynamic program equals formula (3 <= n <= 7)",
            dp_equals_formula,
        ),
        ("one-half cases (n = 3..8)", half_cases),
        ("golden trace (n=9, k=2)", golden_trace),
        ("derived exact values", derived_values),
        ("upper-bound sandwich and scaled ceiling", upper_sandwich),
        ("randomised-threshold lower bound", lower_bound),
        ("continuous-time model", continuous_model),
        (
            "Monte Carlo consistency and reruns",
            monte_carlo_consistency,
        ),
        ("structural invariants (n <= 7)", structural_invariants),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
