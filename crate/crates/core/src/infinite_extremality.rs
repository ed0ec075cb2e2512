//! Rated extremality of countable systems, their dual certificates, the
//! measure of overlapping and perturbed extremality.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{IndexedFamily, IndexedSchedule, RateFunction, SelectionRule};
use crate::feasibility::{find_common_point, GridConfig};
use crate::finite_extremality::{RatedReport, RungOutcome};
use crate::geometry::SetOracle;
use crate::linalg::{self, norm};
use crate::normal_cones::{frechet_cone_distance, DualVector, RadiusLadder};
use crate::sampling::{keyed_rng, tag, unit_directions};
use crate::scalar::Scalar;
use crate::tolerances::Tolerances;

/// Threshold on the final growth ratio `|I_k|^{3/2} / R_k`.
pub const GROWTH_THRESHOLD: f64 = 0.5;

/// Checks `⋂_{i in I_k}(Ω_i - a_{ik}) ∩ B(x̄, r_k R(r_k)) = ∅` rung by rung.
pub fn verify_rated_extremality_infinite<T: Scalar>(
    fam: &IndexedFamily<T>,
    rate: &RateFunction<T>,
    sched: &IndexedSchedule<T>,
    sel: &SelectionRule,
    grid: &GridConfig,
    tol: &Tolerances<T>,
) -> Result<RatedReport<T>> {
    fam.validate()?;
    sel.validate()?;
    sched.validate(fam.dim())?;
    if sel.sets.len() != sched.rungs.len() {
        return Err(Error::input("selection and schedule have different rung counts"));
    }
    for k in 0..sel.sets.len() {
        let mut a = sel.sets[k].clone();
        let mut b = sched.indices(k);
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(Error::input(format!("schedule indices differ from I_k at rung {}", k + 1)));
        }
    }
    let growth = sel.growth_report(rate, &sched.radii(), T::lit(GROWTH_THRESHOLD));
    if !growth.holds() {
        return Err(Error::precondition("selection growth |I_k|^{3/2} / R_k is not shrinking"));
    }
    let xbar = &fam.base;
    for &i in sel.sets.iter().flatten() {
        if !fam.set(i)?.contains(xbar, tol.feas)? {
            return Err(Error::precondition(format!("base point is not in set {i}")));
        }
    }
    let rungs = (0..sched.rungs.len())
        .into_par_iter()
        .map(|k| {
            let r = sched.radius(k);
            let ball = rate.ball_radius(r);
            let shifted = sched.rungs[k]
                .iter()
                .map(|s| Ok(fam.set(s.index)?.translate(&s.shift)))
                .collect::<Result<Vec<_>>>()?;
            let g = GridConfig { seed: grid.seed ^ k as u64, ..*grid };
            let witness = find_common_point(&shifted, xbar, ball, tol.feas, &g)?;
            Ok(RungOutcome { k: k + 1, r, ball_radius: ball, witness })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = rungs
        .iter()
        .find_map(|o| {
            o.witness
                .clone()
                .map(|w| crate::finite_extremality::ExtremalityVerdict::Counterexample { k: o.k, witness: w })
        })
        .unwrap_or(crate::finite_extremality::ExtremalityVerdict::HoldsUpToK { k: rungs.len() });
    Ok(RatedReport { verdict, rungs })
}

/// Dual data of the rated extremal principle for a countable system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct InfiniteCertificate<T> {
    pub eps: T,
    /// Radius of the dual ball inflating each Fréchet normal cone.
    pub r: T,
    pub indices: Vec<usize>,
    pub points: Vec<Vec<T>>,
    pub duals: Vec<DualVector<T>>,
}

impl<T: Scalar> InfiniteCertificate<T> {
    pub fn sum_norm(&self) -> T {
        let dim = self.duals.first().map_or(0, |d| d.dim());
        norm(&self.duals.iter().fold(vec![T::zero(); dim], |s, d| linalg::add(&s, d.coords())))
    }

    pub fn square_sum(&self) -> T {
        self.duals.iter().map(|d| d.norm() * d.norm()).sum()
    }

    fn structural(&self) -> Result<()> {
        let n = self.indices.len();
        if n == 0 || self.points.len() != n || self.duals.len() != n {
            return Err(Error::input("certificate needs one point and one dual per index"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck<T> {
    pub pass: bool,
    /// Names of the failed conditions.
    pub failures: Vec<String>,
    /// `eps - |I| r`
    pub rate_margin: T,
    /// `eps - max |x_i - x̄|`
    pub distance_margin: T,
    /// `r - dist(x*_i, N̂(x_i; Ω_i))` per index.
    pub inflation_margins: Vec<T>,
    pub sum_norm: T,
    pub unit_defect: T,
}

/// Checks every condition of the rated extremal principle on a certificate.
pub fn verify_infinite_certificate<T: Scalar>(
    cert: &InfiniteCertificate<T>,
    fam: &IndexedFamily<T>,
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<CertificateCheck<T>> {
    cert.structural()?;
    let n = T::from_usize_lossy(cert.indices.len());
    let mut failures = Vec::new();
    let rate_margin = cert.eps - n * cert.r;
    if !(rate_margin > T::zero()) {
        failures.push("rate condition |I| r < eps".to_string());
    }
    let max_dist = cert.points.iter().map(|p| linalg::distance(p, &fam.base)).fold(T::zero(), T::max);
    let distance_margin = cert.eps - max_dist;
    if distance_margin < T::zero() {
        failures.push("points within eps of the base point".to_string());
    }
    let mut inflation_margins = Vec::with_capacity(cert.indices.len());
    for ((&i, p), d) in cert.indices.iter().zip(&cert.points).zip(&cert.duals) {
        let set = fam.set(i)?;
        if !set.contains(p, tol.feas)? {
            inflation_margins.push(T::neg_infinity());
            failures.push(format!("point {i} lies in its set"));
            continue;
        }
        let (dist, analytic) = frechet_cone_distance(&set, p, d.coords(), ladder, tol)?;
        let slack = if analytic { tol.cert } else { tol.res };
        inflation_margins.push(cert.r - dist);
        if dist > cert.r + slack {
            failures.push(format!("dual {i} within r of a Fréchet normal"));
        }
    }
    let sum_norm = cert.sum_norm();
    if sum_norm > tol.cert {
        failures.push("sum of duals vanishes".to_string());
    }
    let unit_defect = (cert.square_sum() - T::one()).abs();
    if unit_defect > tol.cert {
        failures.push("squared norms sum to one".to_string());
    }
    Ok(CertificateCheck {
        pass: failures.is_empty(),
        failures,
        rate_margin,
        distance_margin,
        inflation_margins,
        sum_norm,
        unit_defect,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nontriviality {
    pub trivial: bool,
    /// 1-based position of the only dual allowed to exceed `r`.
    pub dominating: Option<usize>,
}

/// A certificate is trivial when all duals but one have norm at most `r`.
pub fn nontriviality_diagnostic<T: Scalar>(cert: &InfiniteCertificate<T>) -> Nontriviality {
    let big: Vec<usize> = (0..cert.duals.len()).filter(|&i| cert.duals[i].norm() > cert.r).collect();
    match big.len() {
        0 => {
            let top = (0..cert.duals.len())
                .max_by(|&a, &b| cert.duals[a].norm().partial_cmp(&cert.duals[b].norm()).unwrap_or(std::cmp::Ordering::Equal).then(b.cmp(&a)));
            Nontriviality { trivial: true, dominating: top.map(|i| i + 1) }
        }
        1 => Nontriviality { trivial: true, dominating: Some(big[0] + 1) },
        _ => Nontriviality { trivial: false, dominating: None },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantitativeCheck<T> {
    /// `4 N^{3/4} / R^{1/2}`
    pub sum_bound: T,
    /// `2 r R^{1/2} N^{3/4}`
    pub distance_bound: T,
    pub sum_norm: T,
    pub max_distance: T,
    pub pass: bool,
}

/// Quantitative estimates: `|Σ x*_i| <= 4N^{3/4}/R^{1/2}` and
/// `|x_i - x̄| <= 2 r R^{1/2} N^{3/4}`.
pub fn quantitative_bounds_check<T: Scalar>(cert: &InfiniteCertificate<T>, base: &[T], n: usize, rate: T, r: T) -> QuantitativeCheck<T> {
    let n34 = T::from_usize_lossy(n).powf(T::lit(0.75));
    let sum_bound = T::lit(4.0) * n34 / rate.sqrt();
    let distance_bound = T::two() * r * rate.sqrt() * n34;
    let sum_norm = cert.sum_norm();
    let max_distance = cert.points.iter().map(|p| linalg::distance(p, base)).fold(T::zero(), T::max);
    QuantitativeCheck {
        sum_bound,
        distance_bound,
        sum_norm,
        max_distance,
        pass: sum_norm <= sum_bound && max_distance <= distance_bound,
    }
}

/// Discretization of the measure of overlapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapConfig<T> {
    pub directions: usize,
    pub points: usize,
    pub nu_max: T,
    pub iterations: usize,
    pub bisection: usize,
    pub tol: T,
    pub seed: u64,
    /// Use `-d` for every sampled direction `d`.
    pub negate: bool,
}

impl<T: Scalar> Default for OverlapConfig<T> {
    fn default() -> Self {
        Self {
            directions: 64,
            points: 200,
            nu_max: T::lit(4.0),
            iterations: 100,
            bisection: 20,
            tol: T::lit(1e-9),
            seed: 0,
            negate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport<T> {
    /// Lower estimate of the largest `ν` with `νB ⊂ A - B`.
    pub theta: T,
    /// Every grid value passed; the true value may be larger.
    pub grid_capped: bool,
    /// Smallest tested `ν` that failed, with the direction it failed in.
    pub failure: Option<(T, Vec<T>)>,
}

/// Whether `target` is in `⋂A - ⋂B`, via cyclic projections onto the sets
/// of `⋂A ∩ (⋂B + target)`.
fn difference_contains<T: Scalar>(a: &[SetOracle<T>], b: &[SetOracle<T>], target: &[T], cfg: &OverlapConfig<T>) -> Result<bool> {
    let neg: Vec<T> = target.iter().map(|&v| -v).collect();
    let all: Vec<SetOracle<T>> = a.iter().cloned().chain(b.iter().map(|s| s.translate(&neg))).collect();
    let mid = linalg::scale(target, T::half());
    // Symmetric configurations can pin the midpoint start, so axis-offset
    // starts at the scale of the grid are tried as well.
    let mut starts = vec![mid.clone()];
    for j in 0..mid.len() {
        for sgn in [T::one(), -T::one()] {
            let mut x = mid.clone();
            x[j] = x[j] + sgn * cfg.nu_max * T::half();
            starts.push(x);
        }
    }
    for mut x in starts {
        for _ in 0..cfg.iterations {
            for s in &all {
                x = s.project_with(&x, cfg.tol)?;
            }
            if all.iter().all(|s| s.contains_unchecked(&x, cfg.tol)) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn sphere_in_difference<T: Scalar>(
    a: &[SetOracle<T>],
    b: &[SetOracle<T>],
    dirs: &[Vec<T>],
    nu: T,
    cfg: &OverlapConfig<T>,
) -> Result<Option<Vec<T>>> {
    let fails = dirs
        .par_iter()
        .map(|d| Ok((!difference_contains(a, b, &linalg::scale(d, nu), cfg)?).then(|| d.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(fails.into_iter().flatten().next())
}

/// Measure of overlapping of `⋂a` and `⋂b`: the largest grid value `ν`
/// such that `ν d` lies in the difference for every sampled unit `d` and
/// every smaller grid value, refined by bisection. A lower estimate.
pub fn overlap_measure_of<T: Scalar>(a: &[SetOracle<T>], b: &[SetOracle<T>], cfg: &OverlapConfig<T>) -> Result<OverlapReport<T>> {
    let dim = a.first().or(b.first()).map_or(0, |s| s.dim());
    if dim == 0 || cfg.points == 0 || cfg.directions == 0 || !(cfg.nu_max > T::zero()) {
        return Err(Error::input("overlap measure needs sets, directions and a positive grid"));
    }
    let mut rng = keyed_rng(cfg.seed, &[tag("overlap"), dim as u64]);
    let mut dirs = unit_directions::<T>(dim, cfg.directions, &mut rng);
    if cfg.negate {
        dirs = dirs.into_iter().map(|d| linalg::scale(&d, -T::one())).collect();
    }
    let zero = vec![T::zero(); dim];
    if !difference_contains(a, b, &zero, cfg)? {
        return Ok(OverlapReport { theta: T::zero(), grid_capped: false, failure: Some((T::zero(), zero)) });
    }
    let step = cfg.nu_max / T::from_usize_lossy(cfg.points);
    let mut lo = T::zero();
    for j in 1..=cfg.points {
        let nu = step * T::from_usize_lossy(j);
        if let Some(d) = sphere_in_difference(a, b, &dirs, nu, cfg)? {
            let mut hi = (nu, d);
            for _ in 0..cfg.bisection {
                let mid = (lo + hi.0) * T::half();
                match sphere_in_difference(a, b, &dirs, mid, cfg)? {
                    Some(d) => hi = (mid, d),
                    None => lo = mid,
                }
            }
            return Ok(OverlapReport { theta: lo, grid_capped: false, failure: Some(hi) });
        }
        lo = nu;
    }
    Ok(OverlapReport { theta: cfg.nu_max, grid_capped: true, failure: None })
}

/// Measure of overlapping of two sets.
pub fn overlap_measure<T: Scalar>(o1: &SetOracle<T>, o2: &SetOracle<T>, cfg: &OverlapConfig<T>) -> Result<OverlapReport<T>> {
    overlap_measure_of(std::slice::from_ref(o1), std::slice::from_ref(o2), cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSubextremalityConfig<T> {
    /// Localization radii, decreasing.
    pub radii: Vec<T>,
    /// Sampled base points per set, `x̄` included.
    pub points_per_set: usize,
    pub directions: usize,
    pub grid_points: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for LinearSubextremalityConfig<T> {
    fn default() -> Self {
        Self {
            radii: (1..=6).map(|j| T::lit(0.5f64.powi(j + 2))).collect(),
            points_per_set: 3,
            directions: 32,
            grid_points: 50,
            iterations: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSubextremalityRung<T> {
    pub r: T,
    /// `ϑ([Ω₁ - x₁] ∩ rB, [Ω₂ - x₂] ∩ rB) / r` minimized over the sampled pairs.
    pub ratio: T,
    pub x1: Vec<T>,
    pub x2: Vec<T>,
    pub failure: Option<(T, Vec<T>)>,
}

/// Points of a perturbed extremality test: `x_i in Ω_i` and shifts `a_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbedWitness<T> {
    pub indices: Vec<usize>,
    pub points: Vec<Vec<T>>,
    pub shifts: Vec<Vec<T>>,
}

impl<T: Scalar> LinearSubextremalityRung<T> {
    /// Witness built from the first vector `a` missing the difference: shifts
    /// `a/2` and `-a/2`, with `R = r' / |a|` so that `r R = r'/2` for the
    /// localization radius `r'`. Returns the witness and `R`.
    pub fn perturbed_witness(&self) -> Option<(PerturbedWitness<T>, T)> {
        let (nu, d) = self.failure.clone()?;
        if !(nu > T::zero()) {
            return None;
        }
        let a = linalg::scale(&d, nu);
        let half = linalg::scale(&a, T::half());
        let neg = linalg::scale(&half, -T::one());
        Some((
            PerturbedWitness { indices: vec![1, 2], points: vec![self.x1.clone(), self.x2.clone()], shifts: vec![half, neg] },
            self.r / nu,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSubextremalityReport<T> {
    pub rungs: Vec<LinearSubextremalityRung<T>>,
    /// Minimum ratio over the two finest rungs.
    pub estimate: T,
}

fn nearby_points<T: Scalar>(set: &SetOracle<T>, xbar: &[T], r: T, count: usize, seed: u64, tol: T) -> Result<Vec<Vec<T>>> {
    let mut out = vec![xbar.to_vec()];
    let mut rng = keyed_rng(seed, &[tag("linsub_points")]);
    for d in unit_directions::<T>(xbar.len(), count.saturating_sub(1), &mut rng) {
        let p = set.project_with(&linalg::axpy(xbar, r * T::lit(0.25), &d), tol)?;
        if linalg::distance(&p, xbar) <= r * T::half() {
            out.push(p);
        }
    }
    Ok(out)
}

/// Estimates `liminf ϑ([Ω₁ - x₁] ∩ rB, [Ω₂ - x₂] ∩ rB) / r` as `r -> 0`
/// with `x_i in Ω_i` near `x̄`.
pub fn linear_subextremality_estimate<T: Scalar>(
    o1: &SetOracle<T>,
    o2: &SetOracle<T>,
    xbar: &[T],
    cfg: &LinearSubextremalityConfig<T>,
    tol: &Tolerances<T>,
) -> Result<LinearSubextremalityReport<T>> {
    if !o1.contains(xbar, tol.feas)? || !o2.contains(xbar, tol.feas)? {
        return Err(Error::precondition("base point must lie in both sets"));
    }
    if cfg.radii.is_empty() || cfg.radii.windows(2).any(|w| !(w[1] < w[0])) || cfg.radii.iter().any(|&r| !(r > T::zero())) {
        return Err(Error::input("localization radii must be positive and decreasing"));
    }
    let mut rungs = Vec::with_capacity(cfg.radii.len());
    for (j, &r) in cfg.radii.iter().enumerate() {
        let p1 = nearby_points(o1, xbar, r, cfg.points_per_set, cfg.seed ^ (2 * j as u64), tol.feas)?;
        let p2 = nearby_points(o2, xbar, r, cfg.points_per_set, cfg.seed ^ (2 * j as u64 + 1), tol.feas)?;
        let ocfg = OverlapConfig {
            directions: cfg.directions,
            points: cfg.grid_points,
            nu_max: T::two() * r,
            iterations: cfg.iterations,
            seed: cfg.seed,
            ..OverlapConfig::default()
        };
        let origin = vec![T::zero(); xbar.len()];
        let mut best: Option<LinearSubextremalityRung<T>> = None;
        for x1 in &p1 {
            for x2 in &p2 {
                let a = [o1.translate(x1), SetOracle::ball(origin.clone(), r)];
                let b = [o2.translate(x2), SetOracle::ball(origin.clone(), r)];
                let rep = overlap_measure_of(&a, &b, &ocfg)?;
                let ratio = rep.theta / r;
                if best.as_ref().map_or(true, |b| ratio < b.ratio) {
                    best = Some(LinearSubextremalityRung { r, ratio, x1: x1.clone(), x2: x2.clone(), failure: rep.failure });
                }
            }
        }
        rungs.push(best.expect("base point pair is always sampled"));
    }
    let estimate = rungs.iter().rev().take(2).map(|r| r.ratio).fold(T::infinity(), T::min);
    Ok(LinearSubextremalityReport { rungs, estimate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedReport<T> {
    pub holds: bool,
    /// Common point of the shifted sets inside the ball, when found.
    pub witness_point: Option<Vec<T>>,
    /// `r = max |a_i|`
    pub r: T,
    pub ball_radius: T,
    /// `|I|^{3/2} / R`
    pub growth_ratio: T,
}

/// Checks `⋂(Ω_i - x_i - a_i) ∩ (rR)B = ∅` for the given witness and the
/// value `R` of the rate function.
pub fn verify_perturbed_extremality<T: Scalar>(
    fam: &IndexedFamily<T>,
    rate_value: T,
    eps: T,
    w: &PerturbedWitness<T>,
    grid: &GridConfig,
    tol: &Tolerances<T>,
) -> Result<PerturbedReport<T>> {
    let n = w.indices.len();
    if n == 0 || w.points.len() != n || w.shifts.len() != n {
        return Err(Error::input("witness needs one point and one shift per index"));
    }
    let mut shifted = Vec::with_capacity(n);
    for ((&i, x), a) in w.indices.iter().zip(&w.points).zip(&w.shifts) {
        let set = fam.set(i)?;
        if !set.contains(x, tol.feas)? {
            return Err(Error::input(format!("witness point {i} is not in its set")));
        }
        if linalg::distance(x, &fam.base) > eps {
            return Err(Error::input(format!("witness point {i} is farther than eps from the base point")));
        }
        shifted.push(set.translate(x).translate(a));
    }
    let r = w.shifts.iter().map(|a| norm(a)).fold(T::zero(), T::max);
    if !(r < eps) {
        return Err(Error::input("shift size r must be below eps"));
    }
    let ball_radius = r * rate_value;
    let nn = T::from_usize_lossy(n);
    let origin = vec![T::zero(); fam.dim()];
    let witness_point = find_common_point(&shifted, &origin, ball_radius, tol.feas, grid)?;
    Ok(PerturbedReport {
        holds: witness_point.is_none(),
        witness_point,
        r,
        ball_radius,
        growth_ratio: nn * nn.sqrt() / rate_value,
    })
}
