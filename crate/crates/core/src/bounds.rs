//! Floating-point bounds on the success probability.
//!
//! Upper: `Gamma(m+1) Gamma(1+a) / Gamma(m+1+a)` with `a = 1/(k+1)` and
//! `m = floor((n-2)/(k+1))`, valid for `1 <= k < n-2`.
//!
//! Lower (for the randomised threshold rule with
//! `p = 1 - (1-eps) n^{-a}`):
//! `(1 - (1-eps)^{k+1}) (1 - (1-eps) n^{-a}) (1-eps) n^{-a}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PathPower;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// `Gamma(4/3) * 3^{1/3}`, the largest value of `Gamma(1 + 1/(k+1)) (k+1)^{1/(k+1)}`.
pub fn asymptotic_constant() -> f64 {
    gamma(4.0 / 3.0) * 3f64.cbrt()
}

/// `Gamma(1 + 1/(k+1)) (k+1)^{1/(k+1)}`.
pub fn asymptotic_factor(k: usize) -> f64 {
    let a = 1.0 / (k + 1) as f64;
    gamma(1.0 + a) * ((k + 1) as f64).powf(a)
}

fn exponent(k: usize) -> f64 {
    1.0 / (k + 1) as f64
}

/// `Gamma(m+1) Gamma(1+a) / Gamma(m+1+a)`, evaluated as `prod_{j=1..m} j / (j + a)`,
/// which follows from `Gamma(x+1) = x Gamma(x)` and avoids overflow for large `m`.
pub fn gamma_ratio_bound(m: usize, a: f64) -> f64 {
    (1..=m).map(|j| j as f64 / (j as f64 + a)).product()
}

/// Upper bound on the success probability. Returns exactly `0.5` when
/// `k >= n - 2`, where the probability is known to equal one half.
pub fn upper_bound(n: usize, k: usize) -> Result<f64> {
    PathPower::new(n, k)?;
    if k + 2 >= n {
        return Ok(0.5);
    }
    Ok(gamma_ratio_bound((n - 2) / (k + 1), exponent(k)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub epsilon: f64,
    /// Rejection probability `1 - (1-eps) n^{-1/(k+1)}` to use with `tau_p_star`.
    pub p: f64,
    pub bound: f64,
}

pub fn lower_bound_tau_p(n: usize, k: usize, epsilon: f64) -> Result<LowerBound> {
    PathPower::new(n, k)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange(format!(
            "epsilon = {epsilon} is not in (0, 1)"
        )));
    }
    if k + 2 >= n {
        return Err(Error::OutOfRange(format!(
            "lower bound needs k < n - 2, got n={n}, k={k}"
        )));
    }
    let scale = (n as f64).powf(-exponent(k));
    let keep = 1.0 - epsilon;
    let p = 1.0 - keep * scale;
    let bound = (1.0 - keep.powi(k as i32 + 1)) * p * (keep * scale);
    Ok(LowerBound { epsilon, p, bound })
}

/// The grid `0.1, 0.2, .., 0.9`.
pub fn epsilon_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// Best lower bound over [`epsilon_grid`]. Ties keep the smaller epsilon.
pub fn best_lower_bound(n: usize, k: usize) -> Result<LowerBound> {
    let mut best: Option<LowerBound> = None;
    for eps in epsilon_grid() {
        let lb = lower_bound_tau_p(n, k, eps)?;
        if best.is_none_or(|b| lb.bound > b.bound) {
            best = Some(lb);
        }
    }
    Ok(best.expect("grid is non-empty"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub k: usize,
    pub upper: f64,
    /// Absent when `k >= n - 2`.
    pub lower: Option<LowerBound>,
    pub asymptotic_constant: f64,
}

/// Bounds at a given epsilon, or the best grid epsilon when `epsilon` is `None`.
pub fn bound_report(n: usize, k: usize, epsilon: Option<f64>) -> Result<BoundReport> {
    let upper = upper_bound(n, k)?;
    let lower = if k + 2 >= n {
        None
    } else {
        Some(match epsilon {
            Some(eps) => lower_bound_tau_p(n, k, eps)?,
            None => best_lower_bound(n, k)?,
        })
    };
    Ok(BoundReport {
        n,
        k,
        upper,
        lower,
        asymptotic_constant: asymptotic_constant(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_recurrence_self_test() {
        let mut x = 1.0;
        while x <= 160.0 {
            assert!(rel(gamma(x + 1.0), x * gamma(x)) < 1e-12, "x={x}");
            x += 0.37;
        }
        // beyond f64 range for Gamma itself, check through logs
        let mut x = 160.0;
        while x <= 300.0 {
            let lhs = ln_gamma(x + 1.0);
            let rhs = x.ln() + ln_gamma(x);
            assert!((lhs - rhs).abs() < 1e-12 * lhs, "x={x}");
            x += 1.3;
        }
    }

    #[test]
    fn small_upper_bound() {
        // m = 1: Gamma(2) Gamma(4/3) / Gamma(7/3) = 1 / (4/3)
        assert!((upper_bound(5, 2).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(upper_bound(4, 2).unwrap(), 0.5);
        assert_eq!(upper_bound(5, 4).unwrap(), 0.5);
    }

    #[test]
    fn product_form_matches_gamma_ratio() {
        for k in 1..=6 {
            let a = exponent(k);
            for m in 0..=150 {
                let direct = gamma(m as f64 + 1.0) * gamma(1.0 + a) / gamma(m as f64 + 1.0 + a);
                assert!(rel(gamma_ratio_bound(m, a), direct) < 1e-12, "k={k} m={m}");
            }
        }
    }

    /// Composite Simpson rule.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
        let h = (b - a) / intervals as f64;
        let inner: f64 = (1..intervals)
            .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
            .sum();
        (f(a) + f(b) + inner) * h / 3.0
    }

    #[test]
    fn bound_equals_the_integral_it_came_from() {
        // the bound is int_0^1 (1 - (1-p)^{k+1})^m dp
        for (n, k) in [(5, 2), (10, 1), (20, 3), (60, 2), (200, 1)] {
            let m = ((n - 2) / (k + 1)) as i32;
            let quad = simpson(
                |p| (1.0 - (1.0 - p).powi(k as i32 + 1)).powi(m),
                0.0,
                1.0,
                200_000,
            );
            assert!(rel(upper_bound(n, k).unwrap(), quad) < 1e-9, "n={n} k={k}");
        }
    }

    #[test]
    fn asymptotic_constant_value() {
        let c = asymptotic_constant();
        assert!((c - 1.2879).abs() < 5e-5, "{c}");
        for k in 1..=40 {
            assert!(asymptotic_factor(k) <= c + 1e-15);
        }
        assert!((asymptotic_factor(2) - c).abs() < 1e-15);
    }

    #[test]
    fn lower_bound_arithmetic() {
        let lb = lower_bound_tau_p(100, 2, 0.5).unwrap();
        let s = 100f64.powf(-1.0 / 3.0);
        assert!((lb.p - (1.0 - 0.5 * s)).abs() < 1e-15);
        let expect = (1.0 - 0.125) * (1.0 - 0.5 * s) * 0.5 * s;
        assert!(rel(lb.bound, expect) < 1e-14);
        // as eps -> 1 the first factor tends to 1 and the last to 0
        let near_one = lower_bound_tau_p(100, 2, 1.0 - 1e-9).unwrap();
        assert!(near_one.bound >= 0.0 && near_one.bound < 1e-8);
    }

    #[test]
    fn lower_bound_rejects_bad_input() {
        assert!(lower_bound_tau_p(100, 2, 0.0).is_err());
        assert!(lower_bound_tau_p(100, 2, 1.0).is_err());
        assert!(lower_bound_tau_p(5, 3, 0.5).is_err());
        assert!(bound_report(5, 3, None).unwrap().lower.is_none());
    }

    #[test]
    fn best_epsilon_is_on_the_grid() {
        let best = best_lower_bound(100, 2).unwrap();
        for eps in epsilon_grid() {
            assert!(lower_bound_tau_p(100, 2, eps).unwrap().bound <= best.bound);
        }
    }
}
