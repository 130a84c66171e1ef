//! Exact success probability of the optimal rule.
//!
//! For each arrival count `m` the rule can only fire when every vertex still
//! to come is forced into a gap or an inner slot. Counting the arrived sets
//! that produce that situation with `h + 1` components gives `V[m][h]`:
//!
//! ```text
//! V[m][h] = sum over (a_1..a_{k-1}) with a_1 + 2 a_2 + .. + (k-1) a_{k-1} = n - m - k h
//!           of C(m-1, h + sum a) * multinomial(h + sum a; h, a_1, .., a_{k-1})
//! W[m]    = sum_h V[m][h]
//! T[m]    = sum_h (h + 1) V[m][h]
//! P       = sum_{m = ceil((n+k)/(k+1))}^{n} W[m] / (m C(n, m))
//! ```

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::PathPower;

/// All `(a_1, .., a_parts)` of non-negative integers with `sum i * a_i = r`,
/// in ascending lexicographic order. With `parts = 0` this is the single
/// empty tuple when `r = 0` and nothing otherwise.
pub fn compositions(r: usize, parts: usize) -> Vec<Vec<usize>> {
    fn extend(i: usize, parts: usize, rem: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i > parts {
            if rem == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for a in 0..=rem / i {
            cur.push(a);
            extend(i + 1, parts, rem - i * a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    extend(1, parts, r, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// Factorials `0!..=max!` as big integers.
#[derive(Debug, Clone)]
pub struct Factorials {
    table: Vec<BigUint>,
}

impl Factorials {
    pub fn up_to(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        table.push(BigUint::one());
        for i in 1..=max {
            let next = &table[i - 1] * BigUint::from(i);
            table.push(next);
        }
        Self { table }
    }

    pub fn factorial(&self, n: usize) -> &BigUint {
        &self.table[n]
    }

    pub fn binomial(&self, n: usize, r: usize) -> BigUint {
        if r > n {
            return BigUint::zero();
        }
        &self.table[n] / (&self.table[r] * &self.table[n - r])
    }

    pub fn multinomial(&self, parts: &[usize]) -> BigUint {
        let total: usize = parts.iter().sum();
        let denom = parts
            .iter()
            .fold(BigUint::one(), |acc, &p| acc * &self.table[p]);
        &self.table[total] / denom
    }
}

/// Smallest `m` at which the slack can be zero: `ceil((n + k) / (k + 1))`.
pub fn first_feasible_m(n: usize, k: usize) -> usize {
    (n + k).div_ceil(k + 1)
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    PathPower::new(n, k).map(|_| ())
}

fn v_mh_with(f: &Factorials, n: usize, k: usize, m: usize, h: usize) -> BigUint {
    compositions(n - m - k * h, k - 1)
        .iter()
        .map(|a| {
            let slots = h + a.iter().sum::<usize>();
            let mut parts = Vec::with_capacity(k);
            parts.push(h);
            parts.extend_from_slice(a);
            f.binomial(m - 1, slots) * f.multinomial(&parts)
        })
        .sum()
}

/// Number of arrived `m`-sets containing both ends whose missing runs are all
/// at most `k` long, with exactly `h` runs of length `k` (so `h + 1` components).
pub fn v_mh(n: usize, k: usize, m: usize, h: usize) -> Result<BigUint> {
    check_nk(n, k)?;
    if m < first_feasible_m(n, k) || m > n {
        return Err(Error::OutOfRange(format!(
            "m = {m} outside {}..={n}",
            first_feasible_m(n, k)
        )));
    }
    if h > (n - m) / k {
        return Err(Error::OutOfRange(format!(
            "h = {h} exceeds {}",
            (n - m) / k
        )));
    }
    Ok(v_mh_with(&Factorials::up_to(n), n, k, m, h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MRow {
    pub m: usize,
    /// `V[m][h]` for `h = 0..=floor((n-m)/k)`.
    pub v: Vec<BigUint>,
    pub w: BigUint,
    pub t: BigUint,
    /// `W[m] / (m C(n, m))`.
    pub term: BigRational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactTables {
    pub n: usize,
    pub k: usize,
    pub rows: Vec<MRow>,
    pub probability: BigRational,
}

/// Binomial rows `C(i, 0..=i)` for `i < rows`, built by addition.
fn pascal(rows: usize) -> Vec<Vec<BigUint>> {
    let mut out: Vec<Vec<BigUint>> = Vec::with_capacity(rows);
    for i in 0..rows {
        let mut row = Vec::with_capacity(i + 1);
        row.push(BigUint::one());
        for j in 1..i {
            row.push(&out[i - 1][j - 1] + &out[i - 1][j]);
        }
        if i > 0 {
            row.push(BigUint::one());
        }
        out.push(row);
    }
    out
}

/// `q[j][r]`: ordered sequences of `j` parts from `1..=k-1` summing to `r`.
///
/// Grouping the compositions in `V[m][h]` by `j = sum a` turns the
/// multinomial sum into `C(m-1, h) * sum_j C(m-1-h, j) * q[j][r]`.
fn part_sequences(k: usize, r_max: usize) -> Vec<Vec<BigUint>> {
    let mut q = vec![vec![BigUint::zero(); r_max + 1]; r_max + 1];
    q[0][0] = BigUint::one();
    for j in 1..=r_max {
        for r in j..=r_max {
            let mut acc = BigUint::zero();
            for i in 1..k.min(r + 1) {
                acc += &q[j - 1][r - i];
            }
            q[j][r] = acc;
        }
    }
    q
}

pub fn exact_tables(n: usize, k: usize) -> Result<ExactTables> {
    check_nk(n, k)?;
    let f = Factorials::up_to(n);
    let first = first_feasible_m(n, k);
    let binom = pascal(n);
    let q = part_sequences(k, n - first);
    let v_fast = |m: usize, h: usize| -> BigUint {
        let r = n - m - k * h;
        let rest = &binom[m - 1 - h];
        let inner: BigUint = (0..=r.min(m - 1 - h)).map(|j| &rest[j] * &q[j][r]).sum();
        &binom[m - 1][h] * inner
    };
    let rows: Vec<MRow> = (first..=n)
        .into_par_iter()
        .map(|m| {
            let v: Vec<BigUint> = (0..=(n - m) / k).map(|h| v_fast(m, h)).collect();
            let w: BigUint = v.iter().sum();
            let t: BigUint = v
                .iter()
                .enumerate()
                .map(|(h, x)| x * BigUint::from(h + 1))
                .sum();
            let denom = BigUint::from(m) * f.binomial(n, m);
            let term = BigRational::new(BigInt::from(w.clone()), BigInt::from(denom));
            MRow { m, v, w, t, term }
        })
        .collect();
    // rows are in m order; the sum is exact so the reduction order is immaterial
    let probability = rows
        .iter()
        .fold(BigRational::zero(), |acc, r| acc + &r.term);
    Ok(ExactTables {
        n,
        k,
        rows,
        probability,
    })
}

pub fn success_probability_exact(n: usize, k: usize) -> Result<BigRational> {
    Ok(exact_tables(n, k)?.probability)
}

/// The `k = 2` specialisation:
/// `sum_m 1/(m C(n,m)) sum_h C(m-1, n-m-h) C(n-m-h, h)`.
pub fn success_probability_k2(n: usize) -> Result<BigRational> {
    check_nk(n, 2)?;
    let f = Factorials::up_to(n);
    let mut total = BigRational::zero();
    for m in first_feasible_m(n, 2)..=n {
        let inner: BigUint = (0..=(n - m) / 2)
            .map(|h| f.binomial(m - 1, n - m - h) * f.binomial(n - m - h, h))
            .sum();
        total += BigRational::new(
            BigInt::from(inner),
            BigInt::from(BigUint::from(m) * f.binomial(n, m)),
        );
    }
    Ok(total)
}

/// The directed-path case `k = 1`, where the inner sum collapses to `h = n - m`:
/// `sum_m C(m-1, n-m) / (m C(n,m))`.
pub fn success_probability_path(n: usize) -> Result<BigRational> {
    check_nk(n, 1)?;
    let f = Factorials::up_to(n);
    let mut total = BigRational::zero();
    for m in first_feasible_m(n, 1)..=n {
        total += BigRational::new(
            BigInt::from(f.binomial(m - 1, n - m)),
            BigInt::from(BigUint::from(m) * f.binomial(n, m)),
        );
    }
    Ok(total)
}

/// Probability that a maximal arrival at time `m` is the sink, given `c`
/// components and `b` inner slots: `1 / (n - m - k(c-1) - b + c)`.
pub fn conditional_success(
    n: usize,
    k: usize,
    m: usize,
    c: usize,
    b: usize,
) -> Result<BigRational> {
    check_nk(n, k)?;
    if m == 0 || m > n || c == 0 {
        return Err(Error::InfeasibleState(format!("m = {m}, c = {c}")));
    }
    let forced = k * (c - 1) + b;
    if forced > n - m || c > m {
        return Err(Error::InfeasibleState(format!(
            "n - m = {} < k(c-1) + b = {forced}",
            n - m
        )));
    }
    Ok(BigRational::new(
        BigInt::one(),
        BigInt::from(n - m - forced + c),
    ))
}

/// Round-half-even decimal rendering with `digits` fractional digits.
pub fn to_decimal(x: &BigRational, digits: usize) -> String {
    let negative = x < &BigRational::zero();
    let scale = num_traits::pow(BigInt::from(10), digits);
    // denominators of reduced ratios are positive
    let den = x.denom();
    let (mut q, r) = (x.numer().abs() * &scale).div_rem(den);
    let twice = &r * 2u32;
    if &twice > den || (&twice == den && q.is_odd()) {
        q += 1;
    }
    let s = q.to_string();
    let s = if s.len() <= digits {
        format!("{}{}", "0".repeat(digits + 1 - s.len()), s)
    } else {
        s
    };
    let (int, frac) = s.split_at(s.len() - digits);
    let sign = if negative && !q.is_zero() { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// [`to_decimal`] with trailing zeros removed (keeping at least one digit).
pub fn to_decimal_trimmed(x: &BigRational, digits: usize) -> String {
    let s = to_decimal(x, digits);
    if !s.contains('.') {
        return s;
    }
    let trimmed = s.trim_end_matches('0');
    if trimmed.ends_with('.') {
        format!("{trimmed}0")
    } else {
        trimmed.to_string()
    }
}

pub fn to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}
