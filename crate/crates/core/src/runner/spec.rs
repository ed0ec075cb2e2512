use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result, SchemaIssue};
use crate::family::{IndexedFamily, IndexedSchedule, RateFunction, RateLaw, SelectionRule};
use crate::feasibility::GridConfig;
use crate::finite_extremality::{RatedQuery, SearchConfig, SolverConfig, TangentialConfig, TranslationSchedule};
use crate::geometry::SetOracle;
use crate::infinite_extremality::{LinearSubextremalityConfig, OverlapConfig};
use crate::intersection_calculus::{k0, MatchingConfig, VectorFamily};
use crate::normal_cones::RadiusLadder;
use crate::sip_optimality::{SIPProblem, Verdict};
use crate::tolerances::Tolerances;

use super::builtins;

pub const SCHEMA_VERSION: &str = "v1";

/// Upper bounds that keep validation and runs at desk scale.
const MAX_RUNGS: usize = 64;
const MAX_SAMPLES: usize = 100_000;
const MAX_INDEX: f64 = 1e6;

/// Shifts `a_{ik}` of a finite system, either listed or geometric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Explicit { shifts: Vec<Vec<Vec<f64>>> },
    /// `a_{ik} = directions[i] * base^{-k}`, `k = 1..=rungs`.
    Geometric { directions: Vec<Vec<f64>>, base: f64, rungs: usize },
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<TranslationSchedule<f64>> {
        match self {
            ScheduleSpec::Explicit { shifts } => TranslationSchedule::new(shifts.clone()),
            ScheduleSpec::Geometric { directions, base, rungs } => {
                if *rungs == 0 || *rungs > MAX_RUNGS {
                    return Err(Error::input(format!("rungs must lie in 1..={MAX_RUNGS}")));
                }
                TranslationSchedule::geometric(directions, *base, *rungs)
            }
        }
    }
}

/// Index sets `I(r)` per radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionSpec {
    Explicit { sets: Vec<Vec<usize>> },
    /// `I(r) = {1, ..., n_r}`.
    Prefix { counts: Vec<usize> },
    /// `I(r) = {1, ..., k0(r)}` with `k0` the smallest integer satisfying
    /// `1 / (4 r^{2+α}) <= k0^m`.
    K0 { m: f64, alpha: f64 },
}

impl SelectionSpec {
    pub fn resolve(&self, radii: &[f64]) -> Result<SelectionRule> {
        let rule = match self {
            SelectionSpec::Explicit { sets } => SelectionRule { sets: sets.clone() },
            SelectionSpec::Prefix { counts } => {
                if counts.iter().any(|&c| c as f64 > MAX_INDEX) {
                    return Err(Error::input("prefix counts are limited to 10^6"));
                }
                SelectionRule::prefix(counts)
            }
            SelectionSpec::K0 { m, alpha } => {
                if !(*m >= 0.5 && *m <= 64.0) || !(*alpha >= 0.0 && *alpha < 1.0) {
                    return Err(Error::input("k0 rule needs m in [0.5, 64] and alpha in [0,1)"));
                }
                for &r in radii {
                    let est = (1.0 / (4.0 * r.powf(2.0 + alpha))).powf(1.0 / m);
                    if !(est <= MAX_INDEX) {
                        return Err(Error::input("k0 exceeds 10^6 for this radius"));
                    }
                }
                SelectionRule::prefix(&radii.iter().map(|&r| k0(r, *m, *alpha)).collect::<Vec<_>>())
            }
        };
        if rule.sets.len() != radii.len() {
            return Err(Error::input("selection needs one index set per radius"));
        }
        rule.validate()?;
        Ok(rule)
    }
}

/// One requested check. Field names follow the toolkit operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    Projection {
        set: SetOracle<f64>,
        point: Vec<f64>,
    },
    EpsNormal {
        set: SetOracle<f64>,
        point: Vec<f64>,
        xstar: Vec<f64>,
        #[serde(default)]
        ladder: RadiusLadder<f64>,
    },
    LimitingCone {
        set: SetOracle<f64>,
        point: Vec<f64>,
        /// Vector tested for membership in the sampled cone.
        #[serde(default)]
        contains: Option<Vec<f64>>,
        #[serde(default)]
        ladder: RadiusLadder<f64>,
    },
    RatedExtremality {
        sets: Vec<SetOracle<f64>>,
        base: Vec<f64>,
        query: RatedQuery<f64>,
        schedule: ScheduleSpec,
    },
    Tangential {
        sets: Vec<SetOracle<f64>>,
        base: Vec<f64>,
        config: TangentialConfig<f64>,
    },
    /// Extremality of two cones at the origin: `ϑ(Λ₁, Λ₂) = 0`.
    ConeExtremality {
        cones: Vec<SetOracle<f64>>,
        #[serde(default)]
        overlap: OverlapConfig<f64>,
        #[serde(default = "default_theta")]
        threshold: f64,
    },
    ExactPrinciple {
        sets: Vec<SetOracle<f64>>,
        base: Vec<f64>,
        query: RatedQuery<f64>,
        schedule: ScheduleSpec,
        #[serde(default)]
        solver: SolverConfig,
        #[serde(default)]
        ladder: RadiusLadder<f64>,
        #[serde(default = "default_cert")]
        sum_tol: f64,
        #[serde(default = "default_cert")]
        unit_tol: f64,
        /// Trailing rungs over which `|Σ x*_ik|` must strictly decrease.
        #[serde(default = "default_window")]
        decreasing_window: usize,
    },
    PrincipleSearch {
        /// Sampled generators per cone.
        cones: Vec<Vec<Vec<f64>>>,
        #[serde(default)]
        search: SearchConfig,
    },
    InfiniteExtremality {
        family: IndexedFamily<f64>,
        rate: RateFunction<f64>,
        schedule: IndexedSchedule<f64>,
        selection: SelectionSpec,
        #[serde(default)]
        grid: GridConfig,
    },
    LinearSubextremality {
        sets: Vec<SetOracle<f64>>,
        base: Vec<f64>,
        #[serde(default)]
        config: LinearSubextremalityConfig<f64>,
        #[serde(default = "default_linsub")]
        threshold: f64,
    },
    RNormal(RNormalSpec),
    RNormalConsistency(RNormalSpec),
    FuzzySearch {
        family: IndexedFamily<f64>,
        xstar: Vec<f64>,
        eps: f64,
        #[serde(default)]
        matching: MatchingConfig,
        #[serde(default)]
        ladder: RadiusLadder<f64>,
    },
    Aqc {
        family: IndexedFamily<f64>,
        eps: Vec<f64>,
        #[serde(default)]
        matching: MatchingConfig,
        #[serde(default)]
        ladder: RadiusLadder<f64>,
    },
    Equicontinuity {
        field: VectorFamily<f64>,
        base: Vec<f64>,
        eps: f64,
        deltas: Vec<f64>,
        k_max: usize,
    },
    Representation {
        family: IndexedFamily<f64>,
        xstar: Vec<f64>,
        eps: f64,
        #[serde(default)]
        matching: MatchingConfig,
        #[serde(default)]
        ladder: RadiusLadder<f64>,
    },
    SipUpper(SipSpec),
    SipLower(SipSpec),
}

fn default_theta() -> f64 {
    1e-6
}

fn default_cert() -> f64 {
    1e-6
}

fn default_window() -> usize {
    4
}

fn default_linsub() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RNormalSpec {
    pub family: IndexedFamily<f64>,
    pub xstar: Vec<f64>,
    pub rate: RateFunction<f64>,
    pub radii: Vec<f64>,
    pub selection: SelectionSpec,
    #[serde(default)]
    pub directions: Option<usize>,
    #[serde(default)]
    pub radial_points: Option<usize>,
    #[serde(default)]
    pub ladder: RadiusLadder<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SipSpec {
    pub problem: SIPProblem<f64>,
    pub eps: Vec<f64>,
    #[serde(default)]
    pub matching: MatchingConfig,
    #[serde(default)]
    pub ladder: RadiusLadder<f64>,
}

impl CheckSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckSpec::Projection { .. } => "projection",
            CheckSpec::EpsNormal { .. } => "eps_normal",
            CheckSpec::LimitingCone { .. } => "limiting_cone",
            CheckSpec::RatedExtremality { .. } => "rated_extremality",
            CheckSpec::Tangential { .. } => "tangential",
            CheckSpec::ConeExtremality { .. } => "cone_extremality",
            CheckSpec::ExactPrinciple { .. } => "exact_principle",
            CheckSpec::PrincipleSearch { .. } => "principle_search",
            CheckSpec::InfiniteExtremality { .. } => "infinite_extremality",
            CheckSpec::LinearSubextremality { .. } => "linear_subextremality",
            CheckSpec::RNormal(_) => "r_normal",
            CheckSpec::RNormalConsistency(_) => "r_normal_consistency",
            CheckSpec::FuzzySearch { .. } => "fuzzy_search",
            CheckSpec::Aqc { .. } => "aqc",
            CheckSpec::Equicontinuity { .. } => "equicontinuity",
            CheckSpec::Representation { .. } => "representation",
            CheckSpec::SipUpper(_) => "sip_upper",
            CheckSpec::SipLower(_) => "sip_lower",
        }
    }

    /// Execution phase: rated normals run before the fuzzy rule and the
    /// representation checks that build on them.
    pub fn phase(&self) -> usize {
        match self {
            CheckSpec::Projection { .. } | CheckSpec::EpsNormal { .. } | CheckSpec::LimitingCone { .. } => 0,
            CheckSpec::RatedExtremality { .. }
            | CheckSpec::Tangential { .. }
            | CheckSpec::ConeExtremality { .. }
            | CheckSpec::InfiniteExtremality { .. } => 1,
            CheckSpec::ExactPrinciple { .. } | CheckSpec::PrincipleSearch { .. } | CheckSpec::LinearSubextremality { .. } => 2,
            CheckSpec::RNormal(_) | CheckSpec::Equicontinuity { .. } => 3,
            CheckSpec::RNormalConsistency(_) => 4,
            CheckSpec::FuzzySearch { .. } | CheckSpec::Representation { .. } => 5,
            CheckSpec::Aqc { .. } => 6,
            CheckSpec::SipUpper(_) | CheckSpec::SipLower(_) => 7,
        }
    }
}

/// A check with its label, expected verdict and tolerance overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckEntry {
    #[serde(default)]
    pub label: Option<String>,
    /// When set, the reported verdict is `pass` iff the computed one equals it.
    #[serde(default)]
    pub expect: Option<Verdict>,
    #[serde(default)]
    pub tolerances: Option<Tolerances<f64>>,
    pub spec: CheckSpec,
}

impl CheckEntry {
    pub fn new(spec: CheckSpec) -> Self {
        Self { label: None, expect: None, tolerances: None, spec }
    }

    pub fn labeled(label: &str, spec: CheckSpec) -> Self {
        Self { label: Some(label.to_string()), ..Self::new(spec) }
    }

    pub fn expecting(mut self, v: Verdict) -> Self {
        self.expect = Some(v);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub version: String,
    pub name: String,
    /// Root of every random stream; added to the seeds of the configs.
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances<f64>,
    pub checks: Vec<CheckEntry>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

impl ScenarioSpec {
    pub fn new(name: &str, seed: u64, checks: Vec<CheckEntry>) -> Self {
        Self {
            version: SCHEMA_VERSION.to_string(),
            name: name.to_string(),
            seed,
            tolerances: Tolerances::default(),
            checks,
            output: None,
        }
    }

    /// All schema and semantic problems, empty for a valid spec.
    pub fn issues(&self) -> Vec<SchemaIssue> {
        let mut out = Vec::new();
        if self.version != SCHEMA_VERSION {
            out.push(issue("/version", format!("unsupported schema version {:?}, expected \"v1\"", self.version)));
        }
        tolerance_issues(&self.tolerances, "/tolerances", &mut out);
        if self.checks.is_empty() {
            out.push(issue("/checks", "at least one check is required"));
        }
        for (i, c) in self.checks.iter().enumerate() {
            if let Some(t) = &c.tolerances {
                tolerance_issues(t, &format!("/checks/{i}/tolerances"), &mut out);
            }
            check_issues(&c.spec, &format!("/checks/{i}/spec"), &mut out);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(issues))
        }
    }
}

fn issue(pointer: &str, message: impl Into<String>) -> SchemaIssue {
    SchemaIssue { pointer: pointer.to_string(), message: message.into() }
}

/// Parses a scenario document, reporting every violation found.
///
/// Besides full scenarios, `{"builtin": name}` (optionally with `seed`)
/// expands a registered scenario.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Schema(vec![issue("", format!("invalid JSON: {e}"))]))?;
    scenario_from_value(&value)
}

pub fn scenario_from_value(value: &Value) -> Result<ScenarioSpec> {
    let Some(obj) = value.as_object() else {
        return Err(Error::Schema(vec![issue("", "scenario must be a JSON object")]));
    };
    let mut issues = Vec::new();
    let seed = match obj.get("seed") {
        None => None,
        Some(v) => match v.as_u64() {
            Some(s) => Some(s),
            None => {
                issues.push(issue("/seed", "seed must be a non-negative integer"));
                None
            }
        },
    };

    if let Some(b) = obj.get("builtin") {
        for k in obj.keys().filter(|k| *k != "builtin" && *k != "seed") {
            issues.push(issue(&format!("/{}", escape(k)), "unknown field next to a builtin reference"));
        }
        let spec = match b.as_str() {
            Some(name) => match builtins::builtin(name) {
                Some(s) => Some(s),
                None => {
                    issues.push(issue("/builtin", format!("unknown builtin {name:?}")));
                    None
                }
            },
            None => {
                issues.push(issue("/builtin", "builtin must be a string"));
                None
            }
        };
        return match spec {
            Some(mut s) if issues.is_empty() => {
                if let Some(seed) = seed {
                    s.seed = seed;
                }
                Ok(s)
            }
            _ => Err(Error::Schema(issues)),
        };
    }

    const KNOWN: [&str; 6] = ["version", "name", "seed", "tolerances", "checks", "output"];
    for k in obj.keys().filter(|k| !KNOWN.contains(&k.as_str())) {
        issues.push(issue(&format!("/{}", escape(k)), "unknown field"));
    }
    match obj.get("version") {
        None => issues.push(issue("/version", "missing field")),
        Some(Value::String(v)) if v == SCHEMA_VERSION => {}
        Some(v) => issues.push(issue("/version", format!("unsupported schema version {v}, expected \"v1\""))),
    }
    let name = match obj.get("name") {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            issues.push(issue("/name", "name must be a string"));
            None
        }
        None => {
            issues.push(issue("/name", "missing field"));
            None
        }
    };
    if !obj.contains_key("seed") {
        issues.push(issue("/seed", "seed is required"));
    }
    let tolerances = match obj.get("tolerances") {
        None => Some(Tolerances::default()),
        Some(v) => typed::<Tolerances<f64>>(v, "/tolerances", &mut issues),
    };
    let output = match obj.get("output") {
        None | Some(Value::Null) => Some(None),
        Some(v) => typed::<OutputSpec>(v, "/output", &mut issues).map(Some),
    };
    let mut checks = Vec::new();
    match obj.get("checks") {
        None => issues.push(issue("/checks", "missing field")),
        Some(Value::Array(items)) => {
            if items.is_empty() {
                issues.push(issue("/checks", "at least one check is required"));
            }
            for (i, item) in items.iter().enumerate() {
                if let Some(c) = typed::<CheckEntry>(item, &format!("/checks/{i}"), &mut issues) {
                    checks.push(c);
                }
            }
        }
        Some(_) => issues.push(issue("/checks", "checks must be an array")),
    }

    let spec = match (name, seed, tolerances, output) {
        (Some(name), Some(seed), Some(tolerances), Some(output)) if issues.is_empty() => {
            Some(ScenarioSpec { version: SCHEMA_VERSION.to_string(), name, seed, tolerances, checks, output })
        }
        _ => None,
    };
    // Semantic issues are collected even when some entries failed to parse.
    let semantic = match &spec {
        Some(s) => s.issues(),
        None => {
            let mut out = Vec::new();
            if let Some(Value::Array(items)) = obj.get("checks") {
                for (i, item) in items.iter().enumerate() {
                    if let Ok(c) = serde_json::from_value::<CheckEntry>(item.clone()) {
                        check_issues(&c.spec, &format!("/checks/{i}/spec"), &mut out);
                    }
                }
            }
            out
        }
    };
    issues.extend(semantic);
    match spec {
        Some(s) if issues.is_empty() => Ok(s),
        _ => Err(Error::Schema(issues)),
    }
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

/// Deserializes `v`, recording the failing path as a JSON pointer.
fn typed<D: serde::de::DeserializeOwned>(v: &Value, base: &str, issues: &mut Vec<SchemaIssue>) -> Option<D> {
    match serde_path_to_error::deserialize::<_, D>(v.clone()) {
        Ok(d) => Some(d),
        Err(e) => {
            let mut ptr = base.to_string();
            for seg in e.path().iter() {
                use serde_path_to_error::Segment;
                match seg {
                    Segment::Seq { index } => ptr.push_str(&format!("/{index}")),
                    Segment::Map { key } => ptr.push_str(&format!("/{}", escape(key))),
                    Segment::Enum { variant } => ptr.push_str(&format!("/{}", escape(variant))),
                    Segment::Unknown => {}
                }
            }
            let rel = ptr[base.len()..].to_string();
            let msg = e.into_inner().to_string();
            if let Some(deeper) = v.pointer(&rel).and_then(|sub| locate(sub, &msg)) {
                ptr.push_str(&deeper);
            }
            issues.push(issue(&ptr, msg));
            None
        }
    }
}

/// Tagged enums are buffered before dispatch, so the reported path stops at
/// the enclosing value. Finds the offending tag or key below it instead.
fn locate(v: &Value, msg: &str) -> Option<String> {
    let quoted = |prefix: &str| msg.strip_prefix(prefix).and_then(|r| r.split('`').next()).map(str::to_string);
    if let Some(name) = quoted("unknown variant `") {
        find(v, &|k, child| !k.is_empty() && child.as_str() == Some(name.as_str()))
    } else if let Some(name) = quoted("unknown field `") {
        find(v, &|k, _| k == name)
    } else {
        None
    }
}

fn find(v: &Value, hit: &dyn Fn(&str, &Value) -> bool) -> Option<String> {
    match v {
        Value::Object(m) => m.iter().find_map(|(k, c)| {
            if hit(k, c) {
                Some(format!("/{}", escape(k)))
            } else {
                find(c, hit).map(|p| format!("/{}{p}", escape(k)))
            }
        }),
        Value::Array(a) => a.iter().enumerate().find_map(|(i, c)| find(c, hit).map(|p| format!("/{i}{p}"))),
        _ => None,
    }
}

fn tolerance_issues(t: &Tolerances<f64>, ptr: &str, out: &mut Vec<SchemaIssue>) {
    for (name, v) in [("feas", t.feas), ("proj", t.proj), ("res", t.res), ("cert", t.cert), ("angle", t.angle)] {
        if !(v > 0.0 && v.is_finite()) {
            out.push(issue(&format!("{ptr}/{name}"), "tolerance must be positive and finite"));
        }
    }
}

struct Ctx<'a> {
    ptr: &'a str,
    out: &'a mut Vec<SchemaIssue>,
}

impl Ctx<'_> {
    fn push(&mut self, field: &str, msg: impl Into<String>) {
        let p = if field.is_empty() { self.ptr.to_string() } else { format!("{}/{field}", self.ptr) };
        self.out.push(issue(&p, msg));
    }

    fn point(&mut self, field: &str, v: &[f64]) -> bool {
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            self.push(field, "must be a nonempty vector of finite numbers");
            return false;
        }
        true
    }

    fn set(&mut self, field: &str, s: &SetOracle<f64>, dim: Option<usize>) {
        if let Err(e) = s.validate() {
            self.push(field, e.to_string());
        } else if let Some(d) = dim {
            if s.dim() != d {
                self.push(field, format!("set lives in dimension {} but the point has {d} coordinates", s.dim()));
            }
        }
    }

    fn sets(&mut self, field: &str, sets: &[SetOracle<f64>], dim: usize, min: usize) {
        if sets.len() < min {
            self.push(field, format!("at least {min} sets are required"));
        }
        for (j, s) in sets.iter().enumerate() {
            self.set(&format!("{field}/{j}"), s, Some(dim));
        }
    }

    fn ladder(&mut self, field: &str, l: &RadiusLadder<f64>) {
        if let Err(e) = l.validate() {
            self.push(field, e.to_string());
        }
        if l.rungs > MAX_RUNGS || l.samples > MAX_SAMPLES {
            self.push(field, format!("ladder is limited to {MAX_RUNGS} rungs and {MAX_SAMPLES} samples"));
        }
    }

    fn decreasing(&mut self, field: &str, v: &[f64]) {
        if v.is_empty() || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            self.push(field, "must be a nonempty list of positive numbers");
        } else if v.windows(2).any(|w| !(w[1] < w[0])) {
            self.push(field, "ladder must be strictly decreasing");
        }
    }

    fn family(&mut self, field: &str, f: &IndexedFamily<f64>) -> bool {
        match f.validate() {
            Ok(()) => true,
            Err(e) => {
                self.push(field, e.to_string());
                false
            }
        }
    }

    fn query(&mut self, field: &str, q: &RatedQuery<f64>) {
        if let Err(e) = q.validate() {
            let sub = if e.to_string().contains("alpha") { "alpha" } else { "gamma" };
            self.push(&format!("{field}/{sub}"), e.to_string().trim_start_matches("invalid input: ").to_string());
        }
        grid(self, &format!("{field}/grid"), &q.grid);
    }

    fn rate(&mut self, field: &str, r: &RateFunction<f64>) {
        let RateLaw::Power { gamma, exponent } = r.law;
        if !(gamma > 0.0 && gamma.is_finite()) || !(exponent > 0.0 && exponent.is_finite()) || !(r.bound > 0.0 && r.bound.is_finite()) {
            self.push(field, "rate needs positive finite gamma, exponent and bound");
        }
    }

    fn matching(&mut self, field: &str, m: &MatchingConfig) {
        if m.max_indices == 0 || m.max_indices > 4096 || m.directions > MAX_SAMPLES {
            self.push(field, "matching needs 1..=4096 indices and at most 10^5 directions");
        }
    }

    fn dual(&mut self, field: &str, v: &[f64], dim: usize) {
        if self.point(field, v) && v.len() != dim {
            self.push(field, format!("expected {dim} coordinates, found {}", v.len()));
        }
    }
}

fn grid(c: &mut Ctx<'_>, field: &str, g: &GridConfig) {
    if g.resolution < 2 || g.resolution > 4001 || g.refine_starts > 1000 || g.refine_iterations > 100_000 {
        c.push(field, "grid needs resolution in 2..=4001, at most 1000 starts and 10^5 iterations");
    }
}

fn check_issues(spec: &CheckSpec, ptr: &str, out: &mut Vec<SchemaIssue>) {
    let mut c = Ctx { ptr, out };
    match spec {
        CheckSpec::Projection { set, point } => {
            if c.point("point", point) {
                c.set("set", set, Some(point.len()));
            }
        }
        CheckSpec::EpsNormal { set, point, xstar, ladder } => {
            if c.point("point", point) {
                c.set("set", set, Some(point.len()));
                c.dual("xstar", xstar, point.len());
            }
            c.ladder("ladder", ladder);
        }
        CheckSpec::LimitingCone { set, point, contains, ladder } => {
            if c.point("point", point) {
                c.set("set", set, Some(point.len()));
                if let Some(v) = contains {
                    c.dual("contains", v, point.len());
                }
            }
            c.ladder("ladder", ladder);
        }
        CheckSpec::RatedExtremality { sets, base, query, schedule } => {
            finite_system(&mut c, sets, base, schedule);
            c.query("query", query);
        }
        CheckSpec::Tangential { sets, base, config } => {
            if c.point("base", base) {
                c.sets("sets", sets, base.len(), 1);
                if config.cones.len() != sets.len() {
                    c.push("config/cones", "one approximating cone per set is required");
                }
                for (j, s) in config.cones.iter().enumerate() {
                    c.set(&format!("config/cones/{j}"), s, Some(base.len()));
                }
            }
            if !(config.c > 0.0 && config.c.is_finite()) || !(config.p > 0.0 && config.p.is_finite()) {
                c.push("config", "tangential constants need c > 0 and p > 0");
            }
            c.ladder("config/ladder", &config.ladder);
        }
        CheckSpec::ConeExtremality { cones, overlap, threshold } => {
            if cones.len() != 2 {
                c.push("cones", "exactly two cones are required");
            } else {
                c.set("cones/0", &cones[0], None);
                c.set("cones/1", &cones[1], Some(cones[0].dim()));
            }
            if overlap.directions == 0 || overlap.directions > MAX_SAMPLES || overlap.points > MAX_SAMPLES || !(overlap.nu_max > 0.0) {
                c.push("overlap", "overlap needs 1..=10^5 directions and nu_max > 0");
            }
            if !(*threshold >= 0.0) {
                c.push("threshold", "threshold must be non-negative");
            }
        }
        CheckSpec::ExactPrinciple { sets, base, query, schedule, ladder, sum_tol, unit_tol, decreasing_window, .. } => {
            finite_system(&mut c, sets, base, schedule);
            c.query("query", query);
            c.ladder("ladder", ladder);
            if !(*sum_tol > 0.0) || !(*unit_tol > 0.0) {
                c.push("", "sum_tol and unit_tol must be positive");
            }
            if *decreasing_window > MAX_RUNGS {
                c.push("decreasing_window", "window is limited to 64 rungs");
            }
        }
        CheckSpec::PrincipleSearch { cones, .. } => {
            if cones.is_empty() {
                c.push("cones", "at least one cone is required");
            }
            let dim = cones.first().and_then(|g| g.first()).map_or(0, |d| d.len());
            for (i, g) in cones.iter().enumerate() {
                if g.is_empty() {
                    c.push(&format!("cones/{i}"), "a cone needs at least one generator");
                }
                for (j, d) in g.iter().enumerate() {
                    c.dual(&format!("cones/{i}/{j}"), d, dim);
                }
            }
        }
        CheckSpec::InfiniteExtremality { family, rate, schedule, selection, grid: g } => {
            if c.family("family", family) {
                if let Err(e) = schedule.validate(family.dim()) {
                    c.push("schedule", e.to_string());
                } else {
                    if schedule.rungs.len() > MAX_RUNGS {
                        c.push("schedule", "schedule is limited to 64 rungs");
                    }
                    if let Err(e) = selection.resolve(&schedule.radii()) {
                        c.push("selection", e.to_string());
                    }
                }
            }
            c.rate("rate", rate);
            grid(&mut c, "grid", g);
        }
        CheckSpec::LinearSubextremality { sets, base, config, threshold } => {
            if c.point("base", base) {
                c.sets("sets", sets, base.len(), 2);
                if sets.len() != 2 {
                    c.push("sets", "exactly two sets are required");
                }
            }
            c.decreasing("config/radii", &config.radii);
            if config.directions == 0 || config.directions > MAX_SAMPLES || config.grid_points > MAX_SAMPLES || config.points_per_set > 1000 {
                c.push("config", "sampling sizes are out of range");
            }
            if !(*threshold >= 0.0) {
                c.push("threshold", "threshold must be non-negative");
            }
        }
        CheckSpec::RNormal(q) | CheckSpec::RNormalConsistency(q) => r_normal_issues(&mut c, q),
        CheckSpec::FuzzySearch { family, xstar, eps, matching, ladder } | CheckSpec::Representation { family, xstar, eps, matching, ladder } => {
            if c.family("family", family) {
                c.dual("xstar", xstar, family.dim());
            }
            if !(*eps > 0.0 && eps.is_finite()) {
                c.push("eps", "eps must be positive");
            }
            c.matching("matching", matching);
            c.ladder("ladder", ladder);
        }
        CheckSpec::Aqc { family, eps, matching, ladder } => {
            c.family("family", family);
            c.decreasing("eps", eps);
            c.matching("matching", matching);
            c.ladder("ladder", ladder);
        }
        CheckSpec::Equicontinuity { field, base, eps, deltas, k_max } => {
            c.dual("base", base, field.dim());
            if !(*eps > 0.0) {
                c.push("eps", "eps must be positive");
            }
            c.decreasing("deltas", deltas);
            if *k_max == 0 || *k_max as f64 > MAX_INDEX {
                c.push("k_max", "k_max must lie in 1..=10^6");
            }
        }
        CheckSpec::SipUpper(s) | CheckSpec::SipLower(s) => {
            if let Err(e) = s.problem.objective.validate() {
                c.push("problem/objective", e.to_string());
            }
            if c.family("problem/constraints", &s.problem.constraints) && s.problem.objective.dim() != s.problem.constraints.dim() {
                c.push("problem/objective", "objective and constraints live in different dimensions");
            }
            c.decreasing("eps", &s.eps);
            c.matching("matching", &s.matching);
            c.ladder("ladder", &s.ladder);
        }
    }
}

fn finite_system(c: &mut Ctx<'_>, sets: &[SetOracle<f64>], base: &[f64], schedule: &ScheduleSpec) {
    if !c.point("base", base) {
        return;
    }
    c.sets("sets", sets, base.len(), 2);
    match schedule.build() {
        Err(e) => c.push("schedule", e.to_string()),
        Ok(s) => {
            if s.m() != sets.len() || s.dim() != base.len() {
                c.push("schedule", format!("schedule shifts {} sets in dimension {}", s.m(), s.dim()));
            }
        }
    }
}

fn r_normal_issues(c: &mut Ctx<'_>, q: &RNormalSpec) {
    if c.family("family", &q.family) {
        c.dual("xstar", &q.xstar, q.family.dim());
    }
    c.rate("rate", &q.rate);
    c.decreasing("radii", &q.radii);
    if q.radii.iter().all(|r| *r > 0.0) {
        if let Err(e) = q.selection.resolve(&q.radii) {
            c.push("selection", e.to_string());
        }
    }
    if q.directions.is_some_and(|d| d == 0 || d > MAX_SAMPLES) || q.radial_points.is_some_and(|d| d == 0 || d > 10_000) {
        c.push("", "directions must lie in 1..=10^5 and radial_points in 1..=10^4");
    }
    c.ladder("ladder", &q.ladder);
}
