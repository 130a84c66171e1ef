//! `exact`, `simulate`, `scaling`, `trace` and `bounds`.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use stopflow::bounds::{asymptotic_constant, bound_report, lower_bound_tau_p, upper_bound};
use stopflow::exact::{
    exact_tables, success_probability_path, to_decimal, to_decimal_trimmed, to_f64,
};
use stopflow::sim::simulate as run_simulation;
use stopflow::strategy::validate_permutation;
use stopflow::{Observer, PathPower, Strategy};

use crate::args::{Format, ScalingArgs, StrategyName, TraceArgs};
use crate::config::{parse_grid, ExperimentConfig};
use crate::error::CliError;
use crate::report::{
    csv_document, json_document, to_json, Provenance, SimulationReport, SIMULATION_HEADER,
};

const DIGITS: usize = 20;

fn fraction(x: &BigRational) -> String {
    x.to_string()
}

pub fn exact(cfg: &ExperimentConfig, prov: &Provenance) -> Result<String, CliError> {
    let n = cfg.single_n()?;
    let k = cfg.require_k()?;
    let tables = exact_tables(n, k)?;
    let p = &tables.probability;
    match cfg.format {
        Format::Text => {
            let mut s = format!("{} = {}\n", fraction(p), to_decimal_trimmed(p, DIGITS));
            writeln!(s, "{:>5} {:>24} {:>24}  term", "m", "W_m", "T_m").unwrap();
            for row in &tables.rows {
                writeln!(
                    s,
                    "{:>5} {:>24} {:>24}  {}",
                    row.m,
                    row.w,
                    row.t,
                    fraction(&row.term)
                )
                .unwrap();
            }
            Ok(s)
        }
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = tables
                .rows
                .iter()
                .map(|r| {
                    vec![
                        n.to_string(),
                        k.to_string(),
                        r.m.to_string(),
                        r.w.to_string(),
                        r.t.to_string(),
                        fraction(&r.term),
                        to_decimal(&r.term, DIGITS),
                    ]
                })
                .collect();
            rows.push(vec![
                n.to_string(),
                k.to_string(),
                "total".into(),
                String::new(),
                String::new(),
                fraction(p),
                to_decimal(p, DIGITS),
            ]);
            csv_document(
                prov,
                &["n", "k", "m", "w_m", "t_m", "term", "term_decimal"],
                rows,
            )
        }
        Format::Json => {
            let rows: Vec<_> = tables
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "m": r.m,
                        "v": r.v.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                        "w": r.w.to_string(),
                        "t": r.t.to_string(),
                        "term": fraction(&r.term),
                    })
                })
                .collect();
            let report = json!({
                "n": n,
                "k": k,
                "probability": fraction(p),
                "decimal": to_decimal(p, DIGITS),
                "rows": rows,
            });
            json_document(prov, report)
        }
    }
}

fn build_strategy(cfg: &ExperimentConfig, n: usize, k: usize) -> Result<Strategy, CliError> {
    Ok(match cfg.strategy {
        StrategyName::TauN => Strategy::tau_n(),
        StrategyName::FirstMax => Strategy::first_max(),
        StrategyName::TauPStar => {
            let p = match (cfg.p, cfg.epsilon) {
                (Some(p), _) => p,
                (None, Some(eps)) => lower_bound_tau_p(n, k, eps)?.p,
                (None, None) => {
                    return Err(CliError::Usage("tau_p_star needs --p or --epsilon".into()))
                }
            };
            Strategy::tau_p_star(p, 0)?
        }
        StrategyName::ClassicalThreshold => match cfg.r.as_deref().map(str::trim) {
            None | Some("auto") => Strategy::classical_auto(n),
            Some(r) => Strategy::classical_threshold(r.parse().map_err(|_| {
                CliError::Usage(format!("--r expects a number or `auto`, got `{r}`"))
            })?),
        },
    })
}

/// Runs the Monte Carlo experiment described by `cfg`. `wall_time` is left unset.
pub fn simulation_report(cfg: &ExperimentConfig) -> Result<SimulationReport, CliError> {
    let n = cfg.single_n()?;
    let k = cfg.require_k()?;
    let graph = PathPower::new(n, k)?;
    if cfg.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let strategy = build_strategy(cfg, n, k)?;
    let est = run_simulation(&graph, &strategy, cfg.trials, cfg.seed)?;
    Ok(SimulationReport {
        n,
        k,
        strategy: strategy.describe(),
        trials: est.trials,
        wins: est.wins,
        estimate: est.estimate,
        stderr: est.stderr,
        ci_lo: est.ci_lo,
        ci_hi: est.ci_hi,
        seed: cfg.seed,
        wall_time: None,
    })
}

pub fn simulate(cfg: &ExperimentConfig, prov: &Provenance) -> Result<String, CliError> {
    let start = Instant::now();
    let mut report = simulation_report(cfg)?;
    match cfg.format {
        Format::Text => Ok(format!(
            "{} on P({}, {}): {}/{} = {} (stderr {:.6}, 95% CI [{:.6}, {:.6}], seed {})\n",
            report.strategy,
            report.n,
            report.k,
            report.wins,
            report.trials,
            report.estimate,
            report.stderr,
            report.ci_lo,
            report.ci_hi,
            report.seed
        )),
        Format::Csv => csv_document(prov, &SIMULATION_HEADER, [report.csv_record()]),
        Format::Json => {
            report.set_wall_time(start.elapsed());
            json_document(prov, to_json(&report)?)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ScalingRow {
    n: usize,
    k: usize,
    p_exact: String,
    scaled: Option<f64>,
    upper: Option<f64>,
    lower_tau_p: Option<f64>,
    best_epsilon: Option<f64>,
    k1_reduction: String,
    note: String,
}

impl ScalingRow {
    fn skipped(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            p_exact: String::new(),
            scaled: None,
            upper: None,
            lower_tau_p: None,
            best_epsilon: None,
            k1_reduction: String::new(),
            note: format!("skipped: need k < n, got n={n} k={k}"),
        }
    }

    fn cells(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        vec![
            self.n.to_string(),
            self.k.to_string(),
            self.p_exact.clone(),
            opt(self.scaled),
            opt(self.upper),
            opt(self.lower_tau_p),
            opt(self.best_epsilon),
            self.k1_reduction.clone(),
            self.note.clone(),
        ]
    }
}

const SCALING_HEADER: [&str; 9] = [
    "n",
    "k",
    "p_exact",
    "scaled",
    "upper",
    "lower_tau_p",
    "best_epsilon",
    "k1_reduction",
    "note",
];

fn scaling_row(n: usize, k: usize, epsilon: Option<f64>) -> Result<ScalingRow, CliError> {
    if k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    if n < 2 || k >= n {
        return Ok(ScalingRow::skipped(n, k));
    }
    let p = exact_tables(n, k)?.probability;
    let pf = to_f64(&p);
    let report = bound_report(n, k, epsilon)?;
    let mut notes = Vec::new();
    if report.lower.is_none() {
        notes.push("no lower bound for k >= n-2".to_string());
    }
    let k1_reduction = if k == 1 {
        let reduced = success_probability_path(n)?;
        if reduced != p {
            notes.push("k=1 reduction disagrees".into());
        }
        to_decimal(&reduced, DIGITS)
    } else {
        String::new()
    };
    Ok(ScalingRow {
        n,
        k,
        p_exact: to_decimal(&p, DIGITS),
        scaled: Some((n as f64).powf(1.0 / (k + 1) as f64) * pf),
        upper: Some(report.upper),
        lower_tau_p: report.lower.map(|l| l.bound),
        best_epsilon: report.lower.map(|l| l.epsilon),
        k1_reduction,
        note: notes.join("; "),
    })
}

pub fn scaling(
    cfg: &ExperimentConfig,
    args: &ScalingArgs,
    prov: &Provenance,
) -> Result<String, CliError> {
    let k = cfg.require_k()?;
    let grid_text = cfg
        .n
        .as_deref()
        .ok_or_else(|| CliError::Usage("--n is required (e.g. 10..200:10)".into()))?;
    let grid = parse_grid(grid_text, args.step)?;
    let rows = grid
        .par_iter()
        .map(|&n| scaling_row(n, k, cfg.epsilon))
        .collect::<Result<Vec<_>, _>>()?;
    match cfg.format {
        Format::Csv => csv_document(prov, &SCALING_HEADER, rows.iter().map(ScalingRow::cells)),
        Format::Json => json_document(prov, json!({ "rows": to_json(&rows)? })),
        Format::Text => {
            let mut s = String::new();
            writeln!(
                s,
                "{:>6} {:>3} {:>24} {:>10} {:>10} {:>10} {:>5}  note",
                "n", "k", "p_exact", "scaled", "upper", "lower", "eps"
            )
            .unwrap();
            for r in &rows {
                let f = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
                writeln!(
                    s,
                    "{:>6} {:>3} {:>24} {:>10} {:>10} {:>10} {:>5}  {}",
                    r.n,
                    r.k,
                    if r.p_exact.is_empty() {
                        "-"
                    } else {
                        &r.p_exact
                    },
                    f(r.scaled),
                    f(r.upper),
                    f(r.lower_tau_p),
                    r.best_epsilon
                        .map(|e| e.to_string())
                        .unwrap_or_else(|| "-".into()),
                    r.note
                )
                .unwrap();
            }
            Ok(s)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub t: usize,
    pub vertex: usize,
    pub shapes: Vec<Vec<usize>>,
    pub c: usize,
    pub b: usize,
    pub slack: usize,
    pub is_max: bool,
    pub condition: bool,
    pub stop: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trace {
    pub perm: Vec<usize>,
    pub steps: Vec<TraceStep>,
    pub stop_t: usize,
    pub win: bool,
}

/// Observer trace of `perm`, marking where `tau_n` stops.
pub fn trace_permutation(graph: &PathPower, perm: &[usize]) -> Result<Trace, CliError> {
    validate_permutation(graph, perm)?;
    let mut obs = Observer::new(*graph);
    let mut steps = Vec::with_capacity(perm.len());
    let mut stop_t = None;
    for &v in perm {
        let ev = obs.observe(v)?;
        let stop = stop_t.is_none() && ((ev.condition_met && ev.is_max) || ev.t == graph.n());
        if stop {
            stop_t = Some(ev.t);
        }
        steps.push(TraceStep {
            t: ev.t,
            vertex: v,
            shapes: obs.component_shapes(),
            c: ev.components,
            b: ev.inner,
            slack: ev.slack,
            is_max: ev.is_max,
            condition: ev.condition_met,
            stop,
        });
    }
    let stop_t = stop_t.expect("the last arrival always stops");
    Ok(Trace {
        perm: perm.to_vec(),
        win: perm[stop_t - 1] == 1,
        steps,
        stop_t,
    })
}

fn parse_perm(line: &str) -> Result<Vec<usize>, CliError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse().map_err(|_| {
                CliError::Usage(format!(
                    "permutation entry `{tok}` is not a positive integer"
                ))
            })
        })
        .collect()
}

fn read_perms(args: &TraceArgs) -> Result<Vec<Vec<usize>>, CliError> {
    match (&args.perm, &args.perm_file) {
        (Some(p), None) => Ok(vec![parse_perm(p)?]),
        (None, Some(path)) => read_perm_file(path),
        (Some(_), Some(_)) => Err(CliError::Usage(
            "give either --perm or --perm-file, not both".into(),
        )),
        (None, None) => Err(CliError::Usage("trace needs --perm or --perm-file".into())),
    }
}

fn read_perm_file(path: &Path) -> Result<Vec<Vec<usize>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let perms = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(parse_perm)
        .collect::<Result<Vec<_>, _>>()?;
    if perms.is_empty() {
        return Err(CliError::Usage(format!(
            "{} holds no permutations",
            path.display()
        )));
    }
    Ok(perms)
}

fn shapes_text(shapes: &[Vec<usize>]) -> String {
    shapes
        .iter()
        .map(|s| {
            format!(
                "{{{}}}",
                s.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn join_perm(perm: &[usize]) -> String {
    perm.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn trace(
    cfg: &ExperimentConfig,
    args: &TraceArgs,
    prov: &Provenance,
) -> Result<String, CliError> {
    let k = cfg.require_k()?;
    let perms = read_perms(args)?;
    let traces = perms
        .iter()
        .map(|perm| {
            let n = match &cfg.n {
                Some(_) => cfg.single_n()?,
                None => perm.len(),
            };
            trace_permutation(&PathPower::new(n, k)?, perm)
        })
        .collect::<Result<Vec<_>, _>>()?;
    match cfg.format {
        Format::Json => json_document(prov, json!({ "k": k, "traces": to_json(&traces)? })),
        Format::Csv => {
            let header = [
                "trace",
                "t",
                "vertex",
                "components",
                "c",
                "b",
                "slack",
                "is_max",
                "condition",
                "stop",
            ];
            let rows = traces.iter().enumerate().flat_map(|(i, tr)| {
                tr.steps.iter().map(move |s| {
                    vec![
                        (i + 1).to_string(),
                        s.t.to_string(),
                        s.vertex.to_string(),
                        shapes_text(&s.shapes),
                        s.c.to_string(),
                        s.b.to_string(),
                        s.slack.to_string(),
                        s.is_max.to_string(),
                        s.condition.to_string(),
                        s.stop.to_string(),
                    ]
                })
            });
            csv_document(prov, &header, rows)
        }
        Format::Text => {
            let mut s = String::new();
            for (i, tr) in traces.iter().enumerate() {
                if i > 0 {
                    s.push('\n');
                }
                writeln!(
                    s,
                    "perm: {} (n={}, k={k})",
                    join_perm(&tr.perm),
                    tr.perm.len()
                )
                .unwrap();
                writeln!(
                    s,
                    "{:>3} {:>4} {:>3} {:>3} {:>5} {:>5} {:>5}  components",
                    "t", "v", "c", "b", "slack", "max", "cond"
                )
                .unwrap();
                for st in &tr.steps {
                    writeln!(
                        s,
                        "{:>3} {:>4} {:>3} {:>3} {:>5} {:>5} {:>5}  {}{}",
                        st.t,
                        st.vertex,
                        st.c,
                        st.b,
                        st.slack,
                        yes_no(st.is_max),
                        yes_no(st.condition),
                        shapes_text(&st.shapes),
                        if st.stop { "  <- stop" } else { "" }
                    )
                    .unwrap();
                }
                let bseq = tr
                    .steps
                    .iter()
                    .map(|st| st.b.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                writeln!(s, "b: ({bseq})").unwrap();
                writeln!(
                    s,
                    "stop: t={} v={} {}",
                    tr.stop_t,
                    tr.perm[tr.stop_t - 1],
                    if tr.win { "WIN" } else { "LOSS" }
                )
                .unwrap();
            }
            Ok(s)
        }
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn bounds(cfg: &ExperimentConfig, prov: &Provenance) -> Result<String, CliError> {
    let n = cfg.single_n()?;
    let k = cfg.require_k()?;
    let report = bound_report(n, k, cfg.epsilon)?;
    debug_assert_eq!(report.upper, upper_bound(n, k)?);
    match cfg.format {
        Format::Json => json_document(prov, to_json(&report)?),
        Format::Csv => {
            let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            let row = vec![
                n.to_string(),
                k.to_string(),
                report.upper.to_string(),
                opt(report.lower.map(|l| l.bound)),
                opt(report.lower.map(|l| l.epsilon)),
                opt(report.lower.map(|l| l.p)),
                report.asymptotic_constant.to_string(),
            ];
            csv_document(
                prov,
                &[
                    "n",
                    "k",
                    "upper",
                    "lower_tau_p",
                    "epsilon",
                    "p",
                    "asymptotic_constant",
                ],
                [row],
            )
        }
        Format::Text => {
            let mut s = format!("n={n} k={k}\nupper: {}\n", report.upper);
            match report.lower {
                Some(l) => writeln!(
                    s,
                    "lower (tau_p_star): {} at epsilon={} p={}",
                    l.bound, l.epsilon, l.p
                )
                .unwrap(),
                None => writeln!(s, "lower (tau_p_star): undefined for k >= n-2").unwrap(),
            }
            writeln!(s, "asymptotic constant: {}", asymptotic_constant()).unwrap();
            Ok(s)
        }
    }
}
