//! Scenario files, the builtin registry, check orchestration and reports.

mod builtins;
mod report;
mod spec;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::family::{growth_csv, IndexedFamily};
use crate::finite_extremality::{
    run_exact_principle, search_principle_certificate, tangential_rate_check, verify_rated_extremality, convergence_csv,
};
use crate::infinite_extremality::{linear_subextremality_estimate, overlap_measure, verify_rated_extremality_infinite, GROWTH_THRESHOLD};
use crate::intersection_calculus::{
    aqc_adversarial_probe, aqc_check, equicontinuity_probe, fuzzy_certificate_check, limiting_rnormal_representation_check,
    r_normal_csv, r_normal_frechet_consistency, search_fuzzy_certificate, verify_r_normal, RNormalQuery,
};
use crate::normal_cones::{cone_membership, eps_normal_residual, limiting_cone_sample, ConeSample, DualVector, RadiusLadder};
use crate::sip_optimality::{check_lower_condition, check_upper_condition};
use crate::tolerances::Tolerances;

pub use crate::sip_optimality::Verdict;
pub use builtins::{builtin, list_builtins, BuiltinInfo};
pub use report::{emit_report, render_csv_summary, render_json, render_text};
pub use spec::{
    parse_scenario, scenario_from_value, CheckEntry, CheckSpec, Format, OutputSpec, RNormalSpec, ScenarioSpec, ScheduleSpec,
    SelectionSpec, SipSpec, SCHEMA_VERSION,
};

pub const TOOL_NAME: &str = "epl";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Size of the worker pool; the global pool when absent.
    pub workers: Option<usize>,
    /// Drop wall-clock timings so reports are byte-stable.
    pub normalize_timings: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub schema: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    /// Position in the scenario, starting at 1.
    pub index: usize,
    pub label: String,
    pub kind: String,
    pub verdict: Verdict,
    /// Verdict of the check itself, before comparing with `expect`.
    pub computed: Verdict,
    pub expect: Option<Verdict>,
    pub summary: String,
    pub margins: BTreeMap<String, f64>,
    pub input: CheckEntry,
    pub tolerances: Tolerances<f64>,
    pub output: Value,
    /// CSV tables keyed by name.
    pub tables: BTreeMap<String, String>,
    pub elapsed_ms: Option<f64>,
    pub fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fault {
    pub index: usize,
    pub label: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub provenance: Provenance,
    pub timings_normalized: bool,
    pub checks: Vec<CheckReport>,
    pub faults: Vec<Fault>,
    /// Files written for this report, relative to the output directory.
    #[serde(default)]
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn count(&self, v: Verdict) -> usize {
        self.checks.iter().filter(|c| c.verdict == v).count()
    }

    /// `0` all pass, `1` any fail, `2` inconclusive without failures,
    /// `3` toolkit fault. Vacuous checks count as passing.
    pub fn exit_code(&self) -> i32 {
        if !self.faults.is_empty() {
            3
        } else if self.count(Verdict::Fail) > 0 {
            1
        } else if self.count(Verdict::Inconclusive) > 0 {
            2
        } else {
            0
        }
    }

    pub fn check(&self, label: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.label == label)
    }
}

/// Parses a JSON report written by [`render_json`].
pub fn parse_report(text: &str) -> Result<RunReport> {
    serde_json::from_str(text).map_err(|e| Error::input(format!("malformed report: {e}")))
}

/// Runs every check of a validated scenario. Checks run phase by phase;
/// failures and errors of one check never stop the others.
pub fn run_scenario(spec: &ScenarioSpec, opts: &RunOptions) -> Result<RunReport> {
    spec.validate()?;
    let seed = opts.seed.unwrap_or(spec.seed);
    let run = || run_checks(spec, seed, opts.normalize_timings);
    let checks = match opts.workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::input(format!("cannot build worker pool: {e}")))?
            .install(run),
        None => run(),
    };
    let faults = checks
        .iter()
        .filter_map(|c| c.fault.clone().map(|m| Fault { index: c.index, label: c.label.clone(), message: m }))
        .collect();
    Ok(RunReport {
        scenario: spec.name.clone(),
        provenance: Provenance { tool: TOOL_NAME.into(), version: TOOL_VERSION.into(), schema: SCHEMA_VERSION.into(), seed },
        timings_normalized: opts.normalize_timings,
        checks,
        faults,
        artifacts: Vec::new(),
    })
}

fn run_checks(spec: &ScenarioSpec, seed: u64, normalize: bool) -> Vec<CheckReport> {
    let mut slots: Vec<Option<CheckReport>> = vec![None; spec.checks.len()];
    let mut phases: Vec<usize> = spec.checks.iter().map(|c| c.spec.phase()).collect();
    phases.sort_unstable();
    phases.dedup();
    for phase in phases {
        let done: Vec<CheckReport> = spec
            .checks
            .par_iter()
            .enumerate()
            .filter(|(_, c)| c.spec.phase() == phase)
            .map(|(i, c)| run_entry(i, c, &spec.tolerances, seed, normalize))
            .collect();
        for r in done {
            let i = r.index - 1;
            slots[i] = Some(r);
        }
    }
    slots.into_iter().map(|s| s.expect("every check ran")).collect()
}

struct Outcome {
    verdict: Verdict,
    summary: String,
    margins: BTreeMap<String, f64>,
    output: Value,
    tables: BTreeMap<String, String>,
}

impl Outcome {
    fn new(verdict: Verdict, summary: impl Into<String>) -> Self {
        Self { verdict, summary: summary.into(), margins: BTreeMap::new(), output: Value::Null, tables: BTreeMap::new() }
    }

    fn pass_if(ok: bool, summary: impl Into<String>) -> Self {
        Self::new(if ok { Verdict::Pass } else { Verdict::Fail }, summary)
    }

    fn margin(mut self, key: &str, v: f64) -> Self {
        if v.is_finite() {
            self.margins.insert(key.to_string(), v);
        }
        self
    }

    fn output<S: Serialize>(mut self, v: &S) -> Self {
        self.output = serde_json::to_value(v).unwrap_or(Value::Null);
        self
    }

    fn table(mut self, name: &str, csv: String) -> Self {
        self.tables.insert(name.to_string(), csv);
        self
    }
}

fn run_entry(i: usize, entry: &CheckEntry, base_tol: &Tolerances<f64>, seed: u64, normalize: bool) -> CheckReport {
    let tol = entry.tolerances.unwrap_or(*base_tol);
    let start = Instant::now();
    let (outcome, fault) = match execute(&entry.spec, &tol, seed) {
        Ok(o) => (o, None),
        Err(Error::ExtremalityViolated { k, nu }) => (
            Outcome::new(Verdict::Fail, format!("shifted sets meet at rung {k}, no separating duals")).margin("nu", nu),
            None,
        ),
        Err(e @ (Error::Precondition(_) | Error::NumericFailure { .. })) => (Outcome::new(Verdict::Inconclusive, e.to_string()), None),
        Err(e) => (Outcome::new(Verdict::Inconclusive, format!("fault: {e}")), Some(e.to_string())),
    };
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let verdict = match entry.expect {
        Some(e) if fault.is_none() => {
            if e == outcome.verdict {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
        _ => outcome.verdict,
    };
    CheckReport {
        index: i + 1,
        label: entry.label.clone().unwrap_or_else(|| format!("{}#{}", entry.spec.kind(), i + 1)),
        kind: entry.spec.kind().to_string(),
        verdict,
        computed: outcome.verdict,
        expect: entry.expect,
        summary: outcome.summary,
        margins: outcome.margins,
        input: entry.clone(),
        tolerances: tol,
        output: outcome.output,
        tables: outcome.tables,
        elapsed_ms: (!normalize).then_some(elapsed),
        fault,
    }
}

fn seeded(l: &RadiusLadder<f64>, seed: u64) -> RadiusLadder<f64> {
    l.with_seed(l.seed.wrapping_add(seed))
}

fn dv(v: &[f64]) -> Result<DualVector<f64>> {
    DualVector::new(v.to_vec())
}

fn fmt(v: f64) -> String {
    format!("{v:.4e}")
}

/// Sequence strictly decreasing over its last `window` entries, where
/// entries at or below `floor` count as converged.
pub fn strictly_decreasing_tail(v: &[f64], window: usize, floor: f64) -> bool {
    let tail = &v[v.len().saturating_sub(window)..];
    tail.windows(2).all(|w| w[1] < w[0] || (w[0] <= floor && w[1] <= floor))
}

/// Floor under which sum norms are treated as exact zeros.
pub const DECREASE_FLOOR: f64 = 1e-14;

fn execute(spec: &CheckSpec, tol: &Tolerances<f64>, seed: u64) -> Result<Outcome> {
    Ok(match spec {
        CheckSpec::Projection { set, point } => {
            let p = set.project(point)?;
            let inside = set.contains(&p, tol.feas.max(tol.proj))?;
            let d = crate::linalg::distance(&p, point);
            Outcome::pass_if(inside, format!("projection at distance {}", fmt(d))).margin("distance", d).output(&json!({ "projection": &*p }))
        }
        CheckSpec::EpsNormal { set, point, xstar, ladder } => {
            let est = eps_normal_residual(set, point, &dv(xstar)?, &seeded(ladder, seed), tol)?;
            let note = if est.isolated { " (isolated point)" } else { "" };
            Outcome::pass_if(est.value <= tol.res, format!("sampled limsup {}{note}", fmt(est.value))).margin("residual", est.value).output(&est)
        }
        CheckSpec::LimitingCone { set, point, contains, ladder } => {
            let cone = limiting_cone_sample(set, point, &seeded(ladder, seed), tol)?;
            let n = cone.directions.len();
            match contains {
                Some(v) => {
                    let gap = cone.angular_gap(v);
                    Outcome::pass_if(cone_membership(&cone, v, tol.angle), format!("{n} generators, angular gap {}", fmt(gap)))
                        .margin("angular_gap", gap)
                        .output(&cone)
                }
                None => Outcome::new(if n > 0 { Verdict::Pass } else { Verdict::Vacuous }, format!("{n} generators")).output(&cone),
            }
        }
        CheckSpec::RatedExtremality { sets, base, query, schedule } => {
            let mut q = *query;
            q.grid.seed = q.grid.seed.wrapping_add(seed);
            let rep = verify_rated_extremality(sets, base, &q, &schedule.build()?, tol)?;
            let hits = rep.rungs.iter().filter(|o| o.witness.is_some()).count();
            let summary = match rep.rungs.iter().find(|o| o.witness.is_some()) {
                None => format!("no common point in {} rungs", rep.rungs.len()),
                Some(o) => format!("common point at rung {} ({hits} of {} rungs)", o.k, rep.rungs.len()),
            };
            let mut w = csv_writer(&["k", "r", "ball_radius", "witness"]);
            for o in &rep.rungs {
                let wit = o.witness.as_ref().map_or(String::new(), |p| join(p));
                row(&mut w, &[o.k.to_string(), o.r.to_string(), o.ball_radius.to_string(), wit]);
            }
            Outcome::pass_if(rep.holds(), summary)
                .margin("rungs", rep.rungs.len() as f64)
                .margin("rungs_with_witness", hits as f64)
                .table("rungs", finish(w))
                .output(&rep)
        }
        CheckSpec::Tangential { sets, base, config } => {
            let mut cfg = config.clone();
            cfg.ladder = seeded(&cfg.ladder, seed);
            let outs = tangential_rate_check(sets, base, &cfg, tol)?;
            let worst = outs.iter().map(|o| o.worst_ratio).fold(0.0, f64::max);
            let failing: Vec<String> = outs.iter().filter(|o| !o.holds).map(|o| o.index.to_string()).collect();
            let summary = if failing.is_empty() {
                format!("rate condition holds, worst ratio {}", fmt(worst))
            } else {
                format!("rate condition fails for set(s) {}", failing.join(", "))
            };
            Outcome::pass_if(failing.is_empty(), summary).margin("worst_ratio", worst).output(&outs)
        }
        CheckSpec::ConeExtremality { cones, overlap, threshold } => {
            let mut cfg = *overlap;
            cfg.seed = cfg.seed.wrapping_add(seed);
            let rep = overlap_measure(&cones[0], &cones[1], &cfg)?;
            let capped = if rep.grid_capped { " (grid cap)" } else { "" };
            Outcome::pass_if(rep.theta <= *threshold, format!("overlap {}{capped}", fmt(rep.theta))).margin("theta", rep.theta).output(&rep)
        }
        CheckSpec::ExactPrinciple { sets, base, query, schedule, solver, ladder, sum_tol, unit_tol, decreasing_window } => {
            let mut q = *query;
            q.grid.seed = q.grid.seed.wrapping_add(seed);
            let mut s = *solver;
            s.seed = s.seed.wrapping_add(seed);
            let run = run_exact_principle(sets, base, &q, &schedule.build()?, &s, &seeded(ladder, seed), tol)?;
            let r = &run.limit.residuals;
            let cone_max = r.cone_defects.iter().map(|d| d.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
            let sums = run.sum_norms();
            let decreasing = strictly_decreasing_tail(&sums, *decreasing_window, DECREASE_FLOOR);
            let ok = r.sum_norm <= *sum_tol && r.unit_defect <= *unit_tol && cone_max <= tol.angle && decreasing;
            let summary = format!(
                "limit |sum| {}, unit defect {}, cone defect {}, tail decreasing {decreasing}",
                fmt(r.sum_norm),
                fmt(r.unit_defect),
                fmt(cone_max)
            );
            Outcome::pass_if(ok, summary)
                .margin("sum_norm", r.sum_norm)
                .margin("unit_defect", r.unit_defect)
                .margin("cone_defect", cone_max)
                .table("convergence", convergence_csv(&run)?)
                .output(&run)
        }
        CheckSpec::PrincipleSearch { cones, search } => {
            let dim = cones[0][0].len();
            let samples = cones
                .iter()
                .map(|g| ConeSample::from_directions(vec![0.0; dim], g.clone()))
                .collect::<Result<Vec<_>>>()?;
            let s = search_principle_certificate(&samples, search)?;
            Outcome::pass_if(s.best_residual <= tol.res, format!("best residual {}", fmt(s.best_residual)))
                .margin("best_residual", s.best_residual)
                .output(&s)
        }
        CheckSpec::InfiniteExtremality { family, rate, schedule, selection, grid } => {
            let sel = selection.resolve(&schedule.radii())?;
            let growth = sel.growth_report(rate, &schedule.radii(), GROWTH_THRESHOLD);
            let mut g = *grid;
            g.seed = g.seed.wrapping_add(seed);
            let out = Outcome::new(Verdict::Inconclusive, "").table("growth", growth_csv(&growth));
            match verify_rated_extremality_infinite(family, rate, schedule, &sel, &g, tol) {
                Ok(rep) => {
                    let summary = match &rep.verdict {
                        crate::finite_extremality::ExtremalityVerdict::HoldsUpToK { k } => format!("no common point in {k} rungs"),
                        crate::finite_extremality::ExtremalityVerdict::Counterexample { k, .. } => format!("common point at rung {k}"),
                    };
                    Outcome { verdict: if rep.holds() { Verdict::Pass } else { Verdict::Fail }, summary, ..out }.output(&rep)
                }
                Err(e @ Error::Precondition(_)) => Outcome { summary: e.to_string(), ..out }.output(&growth),
                Err(e) => return Err(e),
            }
        }
        CheckSpec::LinearSubextremality { sets, base, config, threshold } => {
            let mut cfg = config.clone();
            cfg.seed = cfg.seed.wrapping_add(seed);
            let rep = linear_subextremality_estimate(&sets[0], &sets[1], base, &cfg, tol)?;
            let mut w = csv_writer(&["r", "ratio"]);
            for g in &rep.rungs {
                row(&mut w, &[g.r.to_string(), g.ratio.to_string()]);
            }
            Outcome::pass_if(rep.estimate <= *threshold, format!("normalized overlap {}", fmt(rep.estimate)))
                .margin("estimate", rep.estimate)
                .table("ratios", finish(w))
                .output(&rep)
        }
        CheckSpec::RNormal(q) => {
            let (fam, query) = r_normal_query(q, seed)?;
            let rep = verify_r_normal(&fam, &query, tol)?;
            let vacuous = rep.rungs.iter().all(|g| g.vacuous);
            let min_margin = rep.rungs.iter().map(|g| g.margin).fold(f64::INFINITY, f64::min);
            let verdict = if vacuous {
                Verdict::Vacuous
            } else if rep.pass {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            let passed = rep.rungs.iter().filter(|g| g.pass).count();
            let mut out = Outcome::new(verdict, format!("{passed} of {} rungs pass, min margin {}", rep.rungs.len(), fmt(min_margin)))
                .margin("min_margin", min_margin)
                .table("ladder", r_normal_csv(&rep))
                .table("growth", growth_csv(&rep.growth));
            for (j, g) in rep.rungs.iter().enumerate() {
                out = out.margin(&format!("rung{}_size", j + 1), g.size as f64).margin(&format!("rung{}_sup", j + 1), g.sup_value);
            }
            out.output(&rep)
        }
        CheckSpec::RNormalConsistency(q) => {
            let (fam, query) = r_normal_query(q, seed)?;
            let rep = r_normal_frechet_consistency(&fam, &query, &seeded(&q.ladder, seed), tol)?;
            let ok = rep.r_normal && rep.frechet != Some(false) && rep.converse != Some(false);
            let summary = format!("rated normal {}, Fréchet {:?}, converse {:?}", rep.r_normal, rep.frechet, rep.converse);
            let mut out = Outcome::pass_if(ok, summary);
            if let Some(r) = rep.frechet_residual {
                out = out.margin("frechet_residual", r);
            }
            out.output(&rep)
        }
        CheckSpec::FuzzySearch { family, xstar, eps, matching, ladder } => {
            let mut cfg = *matching;
            cfg.seed = cfg.seed.wrapping_add(seed);
            let ladder = seeded(ladder, seed);
            let s = search_fuzzy_certificate(family, &dv(xstar)?, *eps, &cfg, &ladder, tol)?;
            match &s.certificate {
                Some(c) => {
                    let chk = fuzzy_certificate_check(c, family, &ladder, tol)?;
                    let summary = if chk.pass {
                        format!("certificate with lambda {} revalidated", fmt(c.lambda))
                    } else {
                        format!("certificate rejected: {}", chk.failures.join("; "))
                    };
                    Outcome::pass_if(chk.pass, summary)
                        .margin("lambda", c.lambda)
                        .margin("identity_defect", chk.identity_defect)
                        .margin("inclusion_defect", chk.inclusion_defect)
                        .output(&json!({ "search": s, "check": chk }))
                }
                None => Outcome::new(Verdict::Fail, format!("no certificate, best residual {}", fmt(s.best_residual)))
                    .margin("best_residual", s.best_residual)
                    .output(&s),
            }
        }
        CheckSpec::Aqc { family, eps, matching, ladder } => {
            let mut cfg = *matching;
            cfg.seed = cfg.seed.wrapping_add(seed);
            let ladder = seeded(ladder, seed);
            let probe = aqc_adversarial_probe(family, eps, &cfg, &ladder, tol)?;
            let rep = aqc_check(family, &probe, &ladder, tol)?;
            let mut w = csv_writer(&["eps", "sum_norm", "square_sum"]);
            for r in &rep.rows {
                row(&mut w, &[r.eps.to_string(), r.sum_norm.to_string(), r.square_sum.to_string()]);
            }
            let summary = format!("premise {}, conclusion {}", rep.premise, rep.conclusion);
            let last = rep.rows.last();
            Outcome::pass_if(rep.pass, summary)
                .margin("final_sum_norm", last.map_or(f64::NAN, |r| r.sum_norm))
                .margin("final_square_sum", last.map_or(f64::NAN, |r| r.square_sum))
                .table("aqc", finish(w))
                .output(&json!({ "probe": probe, "report": rep }))
        }
        CheckSpec::Equicontinuity { field, base, eps, deltas, k_max } => {
            let rep = equicontinuity_probe(field, base, *eps, deltas, 1..=*k_max, seed)?;
            let mut out = Outcome::pass_if(
                rep.equicontinuous,
                if rep.equicontinuous { "equicontinuous on the sampled ladder".to_string() } else { "not equicontinuous".to_string() },
            );
            if let Some((k, x)) = &rep.witness {
                let gap = crate::linalg::distance(&field.eval(*k, x), &field.eval(*k, base));
                out = out.margin("witness_k", *k as f64).margin("witness_gap_squared", gap * gap);
                out.summary = format!("not equicontinuous: k = {k}, squared gap {}", fmt(gap * gap));
            }
            let finest = rep.sups.last().copied().unwrap_or(f64::NAN);
            out.margin("finest_sup", finest).output(&rep)
        }
        CheckSpec::Representation { family, xstar, eps, matching, ladder } => {
            let mut cfg = *matching;
            cfg.seed = cfg.seed.wrapping_add(seed);
            let rep = limiting_rnormal_representation_check(&dv(xstar)?, family, *eps, &cfg, &seeded(ladder, seed), tol)?;
            Outcome::pass_if(rep.pass, format!("distance {} with {} indices", fmt(rep.distance), rep.indices.len()))
                .margin("distance", rep.distance)
                .output(&rep)
        }
        CheckSpec::SipUpper(s) | CheckSpec::SipLower(s) => {
            let mut cfg = s.matching;
            cfg.seed = cfg.seed.wrapping_add(seed);
            let ladder = seeded(&s.ladder, seed);
            let rep = if matches!(spec, CheckSpec::SipUpper(_)) {
                check_upper_condition(&s.problem, &s.eps, &cfg, &ladder, tol)?
            } else {
                check_lower_condition(&s.problem, &s.eps, &cfg, &ladder, tol)?
            };
            let worst = rep.elements.iter().flat_map(|e| e.distances.iter().copied()).fold(0.0, f64::max);
            let summary = match &rep.diagnostic {
                Some(d) => d.clone(),
                None => format!("{} element(s) tested, largest distance {}", rep.elements.len(), fmt(worst)),
            };
            Outcome::new(rep.verdict, summary).margin("max_distance", worst).output(&rep)
        }
    })
}

fn r_normal_query(q: &RNormalSpec, seed: u64) -> Result<(IndexedFamily<f64>, RNormalQuery<f64>)> {
    let sel = q.selection.resolve(&q.radii)?;
    let mut query = RNormalQuery::new(dv(&q.xstar)?, q.rate, q.radii.clone(), sel);
    if let Some(d) = q.directions {
        query.directions = d;
    }
    if let Some(r) = q.radial_points {
        query.radial_points = r;
    }
    query.seed = seed;
    Ok((q.family.clone(), query))
}

fn csv_writer(header: &[&str]) -> csv::Writer<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    w
}

fn row(w: &mut csv::Writer<Vec<u8>>, fields: &[String]) {
    w.write_record(fields).expect("in-memory csv");
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
}

fn join(p: &[f64]) -> String {
    p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}
