use serde::{Deserialize, Serialize};

use crate::feasibility::GridConfig;
use crate::family::{IndexedFamily, RateFunction};
use crate::finite_extremality::{RatedQuery, TangentialConfig};
use crate::geometry::{ScalarFunction, SetOracle, Sign};
use crate::infinite_extremality::{LinearSubextremalityConfig, OverlapConfig};
use crate::intersection_calculus::{MatchingConfig, VectorFamily};
use crate::normal_cones::RadiusLadder;
use crate::sip_optimality::{AffinePiece, ObjectiveOracle, SIPProblem, Verdict};

use super::spec::{CheckEntry, CheckSpec, RNormalSpec, ScenarioSpec, ScheduleSpec, SelectionSpec, SipSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuiltinInfo {
    pub name: String,
    pub description: String,
}

const CATALOG: [(&str, &str); 9] = [
    ("parabola_pair", "{x2 <= x1^2} and {x2 >= -x1^2}: rated extremal of rank 1/2 but not locally extremal"),
    ("sine_epigraph_pair", "epi(x sin 1/x) and its complement in the lower half-plane: extremal, tangent cones are not"),
    ("neg_pow_log_pair", "lower half-plane and epi(-|x|^(1+1/ln^2|x|)): tangent cones extremal, sets not rated extremal"),
    ("neg_norm_rank_one", "epi(-|x|) and the lower half-plane: rated extremal of rank 1, exact principle fails"),
    ("km_rated_normals", "epigraphs of k^m x^2 (x >= 0): rated normals on the k0 ladder, fuzzy rule, representation"),
    ("km_non_equicontinuity", "unit normals and gradients of the k^m x^2 system are not equicontinuous at 0"),
    ("km_aqc", "approximate qualification condition for the k^m x^2 system despite non-equicontinuity"),
    ("halfspace_corner", "two orthogonal halfspaces: rated normals and a fuzzy certificate at the corner"),
    ("sip_demo", "upper and lower optimality conditions for linear, norm and max-affine objectives"),
];

pub fn list_builtins() -> Vec<BuiltinInfo> {
    CATALOG.iter().map(|(n, d)| BuiltinInfo { name: n.to_string(), description: d.to_string() }).collect()
}

pub fn builtin(name: &str) -> Option<ScenarioSpec> {
    let checks = match name {
        "parabola_pair" => parabola_pair(),
        "sine_epigraph_pair" => sine_epigraph_pair(),
        "neg_pow_log_pair" => neg_pow_log_pair(),
        "neg_norm_rank_one" => neg_norm_rank_one(),
        "km_rated_normals" => km_rated_normals(),
        "km_non_equicontinuity" => km_non_equicontinuity(),
        "km_aqc" => km_aqc(),
        "halfspace_corner" => halfspace_corner(),
        "sip_demo" => sip_demo(),
        _ => return None,
    };
    Some(ScenarioSpec::new(name, 0, checks))
}

const ORIGIN: [f64; 2] = [0.0, 0.0];
const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn o() -> Vec<f64> {
    ORIGIN.to_vec()
}

fn lower() -> SetOracle<f64> {
    SetOracle::halfspace(vec![0.0, 1.0], 0.0)
}

/// Vertical shifts `(0, s_i) 4^{-k}` for `k = 1..=rungs`.
fn vertical(signs: [f64; 2], rungs: usize) -> ScheduleSpec {
    ScheduleSpec::Geometric { directions: vec![vec![0.0, signs[0]], vec![0.0, signs[1]]], base: 4.0, rungs }
}

/// `Ω₁ = {x : x₂ - x₁² <= 0}`, `Ω₂ = {x : -x₂ - x₁² <= 0}` at the origin with
/// shifts `a_{1k} = (0, 4^{-k})`, `a_{2k} = (0, -4^{-k})`.
fn parabola_pair() -> Vec<CheckEntry> {
    let sets = vec![
        SetOracle::hypograph(ScalarFunction::Parabola { coef: 1.0 }),
        SetOracle::epigraph(ScalarFunction::Parabola { coef: -1.0 }),
    ];
    let sched = vertical([1.0, -1.0], 10);
    vec![
        CheckEntry::labeled(
            "rank_half",
            CheckSpec::RatedExtremality { sets: sets.clone(), base: o(), query: RatedQuery::new(0.5, 0.5), schedule: sched.clone() },
        ),
        CheckEntry::labeled(
            "rank_zero",
            CheckSpec::RatedExtremality { sets: sets.clone(), base: o(), query: RatedQuery::new(0.0, 0.5), schedule: sched.clone() },
        )
        .expecting(Verdict::Fail),
        CheckEntry::labeled(
            "exact_principle",
            CheckSpec::ExactPrinciple {
                sets: sets.clone(),
                base: o(),
                query: RatedQuery::new(0.5, 0.5),
                schedule: sched,
                solver: Default::default(),
                ladder: RadiusLadder::default(),
                sum_tol: 1e-6,
                unit_tol: 1e-6,
                decreasing_window: 4,
            },
        ),
        CheckEntry::labeled(
            "linear_subextremality",
            CheckSpec::LinearSubextremality { sets, base: o(), config: LinearSubextremalityConfig::default(), threshold: 0.05 },
        ),
    ]
}

/// `Ω₁ = epi f` with `f(x) = x sin(1/x)`, `f(0) = 0`, and
/// `Ω₂ = R × R₋ \ int Ω₁ = {x₂ <= min(0, f(x₁))}`. Contingent cones at the
/// origin: `Λ₁ = epi(-|·|)`, `Λ₂ = R × R₋`.
fn sine_epigraph_pair() -> Vec<CheckEntry> {
    let sets = vec![
        SetOracle::epigraph(ScalarFunction::XSinInvX),
        SetOracle::hypograph(ScalarFunction::XSinInvXNonpos),
    ];
    vec![
        CheckEntry::labeled(
            "locally_extremal",
            CheckSpec::RatedExtremality {
                sets,
                base: o(),
                query: RatedQuery { grid: GridConfig { resolution: 51, refine_iterations: 40, ..GridConfig::default() }, ..RatedQuery::new(0.0, 0.5) },
                schedule: vertical([-1.0, 1.0], 6),
            },
        ),
        CheckEntry::labeled(
            "tangent_cones_extremal",
            CheckSpec::ConeExtremality { cones: vec![SetOracle::NegNormEpigraph, lower()], overlap: OverlapConfig::default(), threshold: 1e-6 },
        )
        .expecting(Verdict::Fail),
    ]
}

/// `Ω₁ = R × R₋`, `Ω₂ = epi f` with `f(x) = -|x|^{1 + 1/ln²|x|}`, `f(0) = 0`.
/// Contingent cones at the origin: `Λ₁ = R × R₋`, `Λ₂ = R × R₊`.
fn neg_pow_log_pair() -> Vec<CheckEntry> {
    let sets = vec![lower(), SetOracle::epigraph(ScalarFunction::NegPowLog)];
    let cones = vec![lower(), SetOracle::HalfplaneProduct { signs: vec![Sign::Free, Sign::Nonneg] }];
    vec![
        CheckEntry::labeled(
            "rank_half",
            CheckSpec::RatedExtremality { sets: sets.clone(), base: o(), query: RatedQuery::new(0.5, 1.0), schedule: vertical([1.0, -1.0], 10) },
        )
        .expecting(Verdict::Fail),
        CheckEntry::labeled(
            "tangent_cones_extremal",
            CheckSpec::ConeExtremality { cones: cones.clone(), overlap: OverlapConfig::default(), threshold: 1e-6 },
        ),
        CheckEntry::labeled(
            "tangential_rate",
            CheckSpec::Tangential { sets, base: o(), config: TangentialConfig { cones, c: 1.0, p: 0.5, ladder: RadiusLadder::default() } },
        )
        .expecting(Verdict::Fail),
    ]
}

/// `Ω₁ = epi(-‖·‖)`, `Ω₂ = R × R₋`, shifted as `Ω₁ + (0, a_k)` and
/// `Ω₂ - (0, a_k)` with the ball `B(0, a_k / 2)`.
fn neg_norm_rank_one() -> Vec<CheckEntry> {
    let sets = vec![SetOracle::NegNormEpigraph, lower()];
    let q = RatedQuery { rank_one: true, ..RatedQuery::new(1.0, 0.5) };
    vec![
        CheckEntry::labeled(
            "rank_one",
            CheckSpec::RatedExtremality { sets, base: o(), query: q, schedule: vertical([-1.0, 1.0], 10) },
        ),
        CheckEntry::labeled(
            "limiting_cone",
            CheckSpec::LimitingCone { set: SetOracle::NegNormEpigraph, point: o(), contains: Some(vec![H, -H]), ladder: RadiusLadder::default() },
        ),
        CheckEntry::labeled(
            "exact_principle",
            CheckSpec::PrincipleSearch { cones: vec![vec![vec![-H, -H], vec![H, -H]], vec![vec![0.0, 1.0]]], search: Default::default() },
        )
        .expecting(Verdict::Fail),
    ]
}

fn km_family() -> IndexedFamily<f64> {
    IndexedFamily::km_parabolas(4.0)
}

const KM_RADII: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// `Ω_k = epi g_k`, `g_k(x) = k^m x²` for `x >= 0` and `0` otherwise, with
/// `m = 4`, `R(r) = r^{α-1}`, `α = 0.1` and `I(r) = {1, ..., k0(r)}` where
/// `k0` is the smallest integer with `1/(4 r^{2+α}) <= k0^m`.
fn km_query(xstar: [f64; 2]) -> RNormalSpec {
    RNormalSpec {
        family: km_family(),
        xstar: xstar.to_vec(),
        rate: RateFunction::from_rank(0.1, 1.0),
        radii: KM_RADII.to_vec(),
        selection: SelectionSpec::K0 { m: 4.0, alpha: 0.1 },
        directions: None,
        radial_points: None,
        ladder: RadiusLadder::default(),
    }
}

fn km_rated_normals() -> Vec<CheckEntry> {
    let fuzzy = |x: [f64; 2]| CheckSpec::FuzzySearch {
        family: km_family(),
        xstar: x.to_vec(),
        eps: 0.05,
        matching: MatchingConfig::default(),
        ladder: RadiusLadder::default(),
    };
    let repr = |x: [f64; 2]| CheckSpec::Representation {
        family: km_family(),
        xstar: x.to_vec(),
        eps: 0.05,
        matching: MatchingConfig::default(),
        ladder: RadiusLadder::default(),
    };
    vec![
        CheckEntry::labeled("r_normal_east", CheckSpec::RNormal(km_query([1.0, 0.0]))),
        CheckEntry::labeled("r_normal_south", CheckSpec::RNormal(km_query([0.0, -1.0]))),
        CheckEntry::labeled("r_normal_north", CheckSpec::RNormal(km_query([0.0, 1.0]))).expecting(Verdict::Fail),
        CheckEntry::labeled("consistency_east", CheckSpec::RNormalConsistency(km_query([1.0, 0.0]))),
        CheckEntry::labeled("fuzzy_east", fuzzy([1.0, 0.0])),
        CheckEntry::labeled("representation_east", repr([1.0, 0.0])),
        CheckEntry::labeled("representation_north", repr([0.0, 1.0])).expecting(Verdict::Fail),
    ]
}

fn equi(field: VectorFamily<f64>) -> CheckSpec {
    CheckSpec::Equicontinuity { field, base: o(), eps: 0.5, deltas: (1..=6).map(|j| 10f64.powi(-j)).collect(), k_max: 1000 }
}

/// `φ_k(x) = k^m x₁² - x₂` for `x₁ > 0` and `-x₂` otherwise; unit normals
/// `ξ_k(x) = (2k^m x₁, -1)/√(4k^{2m}x₁² + 1)` for `x₁ > 0` and `(0, -1)`
/// otherwise, with `‖ξ_k(x) - ξ_k(0)‖² → 2`.
fn km_non_equicontinuity() -> Vec<CheckEntry> {
    vec![
        CheckEntry::labeled("unit_normals", equi(VectorFamily::KmUnitNormal { m: 4.0 })).expecting(Verdict::Fail),
        CheckEntry::labeled("gradients", equi(VectorFamily::KmGradient { m: 4.0 })).expecting(Verdict::Fail),
    ]
}

/// AQC for `Ω_k = {φ_k <= 0}` at the origin on `ε = 0.1 · 2^{-j}`.
fn km_aqc() -> Vec<CheckEntry> {
    vec![
        CheckEntry::labeled(
            "aqc",
            CheckSpec::Aqc {
                family: km_family(),
                eps: (0..6).map(|j| 0.1 * 0.5f64.powi(j)).collect(),
                matching: MatchingConfig { max_indices: 6, ..MatchingConfig::default() },
                ladder: RadiusLadder::default(),
            },
        ),
        CheckEntry::labeled("unit_normals", equi(VectorFamily::KmUnitNormal { m: 4.0 })).expecting(Verdict::Fail),
    ]
}

/// `{x₂ <= 0} ∩ {x₁ <= 0}` with `x* = (1, 1)/√2`.
fn halfspace_corner() -> Vec<CheckEntry> {
    let fam = IndexedFamily::explicit(vec![lower(), SetOracle::halfspace(vec![1.0, 0.0], 0.0)], o());
    vec![
        CheckEntry::labeled(
            "r_normal",
            CheckSpec::RNormal(RNormalSpec {
                family: fam.clone(),
                xstar: vec![H, H],
                rate: RateFunction::from_rank(0.5, 1.0),
                radii: KM_RADII.to_vec(),
                selection: SelectionSpec::Explicit { sets: vec![vec![1, 2]; 3] },
                directions: None,
                radial_points: None,
                ladder: RadiusLadder::default(),
            }),
        ),
        CheckEntry::labeled(
            "fuzzy",
            CheckSpec::FuzzySearch { family: fam, xstar: vec![H, H], eps: 0.05, matching: MatchingConfig::default(), ladder: RadiusLadder::default() },
        ),
    ]
}

fn sip(objective: ObjectiveOracle<f64>, constraints: IndexedFamily<f64>) -> SipSpec {
    SipSpec {
        problem: SIPProblem { objective, constraints, aqc_assumed: true },
        eps: vec![0.1, 0.05, 0.02],
        matching: MatchingConfig::default(),
        ladder: RadiusLadder::default(),
    }
}

fn halfplane(sign: Sign) -> IndexedFamily<f64> {
    IndexedFamily::explicit(vec![SetOracle::HalfplaneProduct { signs: vec![Sign::Free, sign] }], o())
}

/// Minimize `φ` subject to `x ∈ Ω_i` at the origin: `φ = x₂` over `R × R₊`
/// and `R × R₋`, `φ = ‖x‖`, `φ = |x₁| = max(x₁, -x₁)`, and `φ = ±x₁ + x₂`
/// over the `k^m x²` epigraphs.
fn sip_demo() -> Vec<CheckEntry> {
    let x2 = ObjectiveOracle::Linear { c: vec![0.0, 1.0] };
    let abs1 = ObjectiveOracle::MaxAffine {
        pieces: vec![AffinePiece { slope: vec![1.0, 0.0], offset: 0.0 }, AffinePiece { slope: vec![-1.0, 0.0], offset: 0.0 }],
    };
    vec![
        CheckEntry::labeled("upper_x2_upper_half", CheckSpec::SipUpper(sip(x2.clone(), halfplane(Sign::Nonneg)))),
        CheckEntry::labeled("lower_x2_upper_half", CheckSpec::SipLower(sip(x2.clone(), halfplane(Sign::Nonneg)))),
        CheckEntry::labeled("lower_norm_upper_half", CheckSpec::SipLower(sip(ObjectiveOracle::Norm { dim: 2 }, halfplane(Sign::Nonneg)))),
        CheckEntry::labeled("lower_x2_lower_half", CheckSpec::SipLower(sip(x2, halfplane(Sign::Nonpos)))).expecting(Verdict::Fail),
        CheckEntry::labeled("upper_abs_upper_half", CheckSpec::SipUpper(sip(abs1, halfplane(Sign::Nonneg)))).expecting(Verdict::Vacuous),
        CheckEntry::labeled(
            "upper_sum_km",
            CheckSpec::SipUpper(SipSpec { eps: vec![0.1, 0.05], ..sip(ObjectiveOracle::Linear { c: vec![1.0, 1.0] }, km_family()) }),
        )
        .expecting(Verdict::Fail),
        CheckEntry::labeled(
            "upper_diff_km",
            CheckSpec::SipUpper(SipSpec { eps: vec![0.1, 0.05], ..sip(ObjectiveOracle::Linear { c: vec![-1.0, 1.0] }, km_family()) }),
        ),
    ]
}
