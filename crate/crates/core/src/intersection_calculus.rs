//! Rated normals to intersections of countably many sets, the fuzzy
//! intersection rule, the approximate qualification condition and the
//! representation of limiting rated normals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{GrowthReport, IndexedFamily, RateFunction, SelectionRule};
use crate::finite_extremality::{search_principle_certificate, SearchConfig};
use crate::geometry::SetOracle;
use crate::linalg::{self, dot, norm};
use crate::normal_cones::{eps_normal_residual, frechet_cone_distance, frechet_normal_directions, ConeSample, DualVector, RadiusLadder};
use crate::sampling::{keyed_rng, tag, unit_directions};
use crate::scalar::Scalar;
use crate::tolerances::Tolerances;

/// Threshold on the final growth ratio of the selection.
const GROWTH_THRESHOLD: f64 = 0.5;

/// Smallest integer `k` with `1 / (4 r^{2+α}) <= k^m`.
pub fn k0(r: f64, m: f64, alpha: f64) -> usize {
    let target = 1.0 / (4.0 * r.powf(2.0 + alpha));
    let mut k = target.powf(1.0 / m).floor().max(1.0) as usize;
    while (k as f64).powf(m) < target {
        k += 1;
    }
    while k > 1 && ((k - 1) as f64).powf(m) >= target {
        k -= 1;
    }
    k
}

/// Prefix selection `I(r) = {1, ..., k0(r)}` per radius.
pub fn k0_selection(radii: &[f64], m: f64, alpha: f64) -> SelectionRule {
    SelectionRule::prefix(&radii.iter().map(|&r| k0(r, m, alpha)).collect::<Vec<_>>())
}

/// `r - (<x*, z> - r|z|)`: positive exactly when the rated normal
/// inequality holds at the offset `z = x - x̄`.
pub fn r_normal_margin<T: Scalar>(xstar: &[T], z: &[T], r: T) -> T {
    r - (dot(xstar, z) - r * norm(z))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct RNormalQuery<T> {
    pub xstar: DualVector<T>,
    pub rate: RateFunction<T>,
    /// Radii `r`, strictly decreasing.
    pub radii: Vec<T>,
    /// `I(r)` per radius.
    pub selection: SelectionRule,
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default = "default_radial")]
    pub radial_points: usize,
    #[serde(default)]
    pub seed: u64,
    /// Points `x_i` per radius and per index of `I(r)`; when given, the
    /// inequality is tested on `⋂(Ω_i - x_i)` instead of `⋂(Ω_i - x̄)`.
    #[serde(default)]
    pub perturbed_points: Option<Vec<Vec<Vec<T>>>>,
}

fn default_directions() -> usize {
    512
}

fn default_radial() -> usize {
    64
}

impl<T: Scalar> RNormalQuery<T> {
    pub fn new(xstar: DualVector<T>, rate: RateFunction<T>, radii: Vec<T>, selection: SelectionRule) -> Self {
        Self {
            xstar,
            rate,
            radii,
            selection,
            directions: default_directions(),
            radial_points: default_radial(),
            seed: 0,
            perturbed_points: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RNormalRung<T> {
    pub r: T,
    pub rate: T,
    pub size: usize,
    pub growth_ratio: T,
    pub ball_radius: T,
    /// Largest sampled `<x*, z> - r|z|`.
    pub sup_value: T,
    /// `r - sup_value`
    pub margin: T,
    pub witness: Vec<T>,
    pub pass: bool,
    /// Only the center of the ball was found in the truncated intersection.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RNormalReport<T> {
    pub pass: bool,
    pub rungs: Vec<RNormalRung<T>>,
    pub growth: GrowthReport<T>,
}

/// Ladder CSV with one row per radius.
pub fn r_normal_csv<T: Scalar>(rep: &RNormalReport<T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["r", "size", "rate", "ratio", "margin", "verdict"]).expect("in-memory csv");
    for g in &rep.rungs {
        let verdict = if g.vacuous { "vacuous" } else if g.pass { "pass" } else { "fail" };
        w.write_record([
            g.r.to_string(),
            g.size.to_string(),
            g.rate.to_string(),
            g.growth_ratio.to_string(),
            g.margin.to_string(),
            verdict.to_string(),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
}

fn inside_all<T: Scalar>(sets: &[SetOracle<T>], z: &[T], tol: T) -> bool {
    sets.iter().all(|s| s.contains_unchecked(z, tol))
}

/// Farthest sampled point of the sets along the ray `t d`, `0 <= t <= rho`.
fn ray_exit<T: Scalar>(sets: &[SetOracle<T>], d: &[T], rho: T, points: usize, tol: T) -> T {
    let q = T::lit(0.7);
    let mut t = rho;
    let mut outside = None;
    for _ in 0..points {
        if inside_all(sets, &linalg::scale(d, t), tol) {
            let Some(mut hi) = outside else { return t };
            let mut lo = t;
            for _ in 0..50 {
                if hi - lo <= tol {
                    break;
                }
                let mid = (lo + hi) * T::half();
                if inside_all(sets, &linalg::scale(d, mid), tol) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return lo;
        }
        outside = Some(t);
        t = t * q;
    }
    T::zero()
}

fn ray_value<T: Scalar>(sets: &[SetOracle<T>], xstar: &[T], d: &[T], r: T, rho: T, points: usize, tol: T) -> (T, T) {
    let slope = dot(xstar, d) - r;
    if slope <= T::zero() {
        return (T::zero(), T::zero());
    }
    let t = ray_exit(sets, d, rho, points, tol);
    (t * slope, t)
}

/// Largest `<x*, z> - r|z|` over the sets inside `rho B`, by ray sampling
/// from the origin followed by a direction pattern search. The search
/// stops as soon as some value reaches `r`.
fn sup_on_rays<T: Scalar>(
    sets: &[SetOracle<T>],
    xstar: &[T],
    r: T,
    rho: T,
    q: &RNormalQuery<T>,
    seed: u64,
    tol: T,
) -> (T, Vec<T>, bool) {
    let dim = xstar.len();
    let mut rng = keyed_rng(seed, &[tag("r_normal"), dim as u64]);
    let mut dirs = unit_directions::<T>(dim, q.directions, &mut rng);
    for j in 0..dim {
        for s in [T::one(), -T::one()] {
            let mut e = vec![T::zero(); dim];
            e[j] = s;
            dirs.push(e);
        }
    }
    if let Some(u) = DualVector::new(xstar.to_vec()).ok().and_then(|v| v.unit()) {
        dirs.push(u.into_vec());
    }
    let evals: Vec<(T, T)> = dirs.par_iter().map(|d| ray_value(sets, xstar, d, r, rho, q.radial_points, tol)).collect();
    let nonvacuous = dirs
        .par_iter()
        .any(|d| ray_exit(sets, d, rho, q.radial_points, tol) > T::zero());
    let mut order: Vec<usize> = (0..dirs.len()).collect();
    order.sort_by(|&a, &b| evals[b].0.partial_cmp(&evals[a].0).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let spacing = T::two() * T::pi() / T::from_usize_lossy(q.directions.max(1));
    // a coarse violation already decides the rung
    let polish = if evals[order[0]].0 >= r - tol { 0 } else { 4 };
    let refined: Vec<(T, Vec<T>)> = order
        .iter()
        .take(polish)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&i| {
            let mut d = dirs[i].clone();
            let mut best = evals[i].0;
            let mut h = spacing;
            let mut guard = 0;
            while h > T::lit(1e-12) && guard < 400 && best < r - tol {
                guard += 1;
                let mut improved = false;
                for j in 0..dim {
                    for s in [h, -h] {
                        let mut c = d.clone();
                        c[j] = c[j] + s;
                        let n = norm(&c);
                        if !(n > T::zero()) {
                            continue;
                        }
                        let c = linalg::scale(&c, T::one() / n);
                        let v = ray_value(sets, xstar, &c, r, rho, q.radial_points, tol).0;
                        if v > best {
                            best = v;
                            d = c;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    h = h * T::half();
                }
            }
            let t = ray_value(sets, xstar, &d, r, rho, q.radial_points, tol).1;
            (best, linalg::scale(&d, t))
        })
        .collect();
    let coarse = (evals[order[0]].0, linalg::scale(&dirs[order[0]], evals[order[0]].1));
    let (sup, z) = refined
        .into_iter()
        .chain(std::iter::once(coarse))
        .fold((T::zero(), vec![T::zero(); dim]), |a, b| if b.0 > a.0 { b } else { a });
    (sup, z, !nonvacuous)
}

/// Checks `<x*, x - x̄> - r|x - x̄| < r` on `⋂_{i in I(r)} Ω_i ∩ B(x̄, rR(r))`
/// for every radius of the query. The sets are sampled along rays from
/// `x̄`, so the verdict is one-sided: a failure carries a witness, a pass
/// means no violation was found.
pub fn verify_r_normal<T: Scalar>(fam: &IndexedFamily<T>, q: &RNormalQuery<T>, tol: &Tolerances<T>) -> Result<RNormalReport<T>> {
    fam.validate()?;
    q.selection.validate()?;
    let xbar = &fam.base;
    if q.xstar.dim() != fam.dim() {
        return Err(Error::DimensionMismatch { expected: fam.dim(), found: q.xstar.dim() });
    }
    if q.radii.len() != q.selection.sets.len() {
        return Err(Error::input("selection and radii have different lengths"));
    }
    if q.radii.iter().any(|&r| !(r > T::zero())) || q.radii.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::input("radii must be positive and strictly decreasing"));
    }
    let growth = q.selection.growth_report(&q.rate, &q.radii, T::lit(GROWTH_THRESHOLD));
    if !growth.holds() {
        return Err(Error::precondition("selection growth |I|^{3/2} / R is not shrinking"));
    }
    if let Some(pp) = &q.perturbed_points {
        if pp.len() != q.radii.len() || pp.iter().zip(&q.selection.sets).any(|(p, s)| p.len() != s.len()) {
            return Err(Error::input("perturbed points must match the selection shape"));
        }
    }
    let mut rungs = Vec::with_capacity(q.radii.len());
    for (j, (&r, idx)) in q.radii.iter().zip(&q.selection.sets).enumerate() {
        let mut sets = Vec::with_capacity(idx.len());
        for (n, &i) in idx.iter().enumerate() {
            let set = fam.set(i)?;
            let center = match &q.perturbed_points {
                Some(pp) => &pp[j][n],
                None => xbar,
            };
            if !set.contains(center, tol.feas)? {
                return Err(Error::precondition(format!("reference point is not in set {i}")));
            }
            sets.push(set.translate(center));
        }
        let rho = q.rate.ball_radius(r);
        let (sup, z, vacuous) = sup_on_rays(&sets, q.xstar.coords(), r, rho, q, q.seed ^ j as u64, tol.feas);
        let margin = r - sup;
        rungs.push(RNormalRung {
            r,
            rate: q.rate.eval(r),
            size: idx.len(),
            growth_ratio: growth.rows[j].ratio,
            ball_radius: rho,
            sup_value: sup,
            margin,
            witness: linalg::add(xbar, &z),
            pass: margin > tol.feas,
            vacuous,
        });
    }
    Ok(RNormalReport { pass: rungs.iter().all(|g| g.pass), rungs, growth })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport<T> {
    pub r_normal: bool,
    /// ε-normal residual of `x*` for the whole intersection; `None` when the
    /// rated normal check failed and no claim is made.
    pub frechet_residual: Option<T>,
    pub frechet: Option<bool>,
    /// For finite families: a Fréchet normal passes the rated normal check
    /// with every index and the rate `R(r) = r^{-1/4}`.
    pub converse: Option<bool>,
}

/// Rated normals are Fréchet normals; for finite families also the converse.
pub fn r_normal_frechet_consistency<T: Scalar>(
    fam: &IndexedFamily<T>,
    q: &RNormalQuery<T>,
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<ConsistencyReport<T>> {
    let rn = verify_r_normal(fam, q, tol)?;
    let whole = fam.full_intersection();
    let est = eps_normal_residual(&whole, &fam.base, &q.xstar, ladder, tol)?;
    let frechet = est.value <= tol.res;
    let converse = match fam.finite_len() {
        Some(n) if frechet => {
            let rate = RateFunction::power(T::one(), T::lit(0.25), T::one());
            let sel = SelectionRule { sets: vec![(1..=n.max(1)).collect(); q.radii.len()] };
            let cq = RNormalQuery { rate, selection: sel, perturbed_points: None, ..q.clone() };
            Some(verify_r_normal(fam, &cq, tol)?.pass)
        }
        _ => None,
    };
    if !rn.pass {
        return Ok(ConsistencyReport { r_normal: false, frechet_residual: None, frechet: None, converse });
    }
    Ok(ConsistencyReport { r_normal: true, frechet_residual: Some(est.value), frechet: Some(frechet), converse })
}

/// Data of the fuzzy intersection rule:
/// `λx* ∈ Σ x*_i + εB*` and `λ² + λ²|x*|² + Σ|x*_i|² = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct FuzzyCertificate<T> {
    pub lambda: T,
    pub eps: T,
    pub xstar: DualVector<T>,
    pub indices: Vec<usize>,
    pub points: Vec<Vec<T>>,
    pub duals: Vec<DualVector<T>>,
    /// `dist(λx*, Σ x*_i + εB)`
    pub inclusion_defect: T,
    /// `|λ² + λ²|x*|² + Σ|x*_i|² - 1|`
    pub identity_defect: T,
}

impl<T: Scalar> FuzzyCertificate<T> {
    pub fn new(lambda: T, eps: T, xstar: DualVector<T>, indices: Vec<usize>, points: Vec<Vec<T>>, duals: Vec<DualVector<T>>) -> Self {
        let mut c = Self { lambda, eps, xstar, indices, points, duals, inclusion_defect: T::zero(), identity_defect: T::zero() };
        (c.inclusion_defect, c.identity_defect) = c.defects();
        c
    }

    /// `(inclusion_defect, identity_defect)` recomputed from the fields.
    pub fn defects(&self) -> (T, T) {
        let sum = self.duals.iter().fold(vec![T::zero(); self.xstar.dim()], |s, d| linalg::add(&s, d.coords()));
        let gap = norm(&linalg::sub(&self.xstar.scaled(self.lambda).into_vec(), &sum));
        let l2 = self.lambda * self.lambda;
        let xn = self.xstar.norm();
        let sq: T = self.duals.iter().map(|d| d.norm() * d.norm()).sum();
        ((gap - self.eps).max(T::zero()), (l2 + l2 * xn * xn + sq - T::one()).abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyCheck<T> {
    pub pass: bool,
    pub failures: Vec<String>,
    /// Distance of each dual to the Fréchet normal cone at its point.
    pub normal_distances: Vec<T>,
    pub max_distance: T,
    pub inclusion_defect: T,
    pub identity_defect: T,
}

/// Checks a fuzzy intersection certificate against the family.
pub fn fuzzy_certificate_check<T: Scalar>(
    cert: &FuzzyCertificate<T>,
    fam: &IndexedFamily<T>,
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<FuzzyCheck<T>> {
    let n = cert.indices.len();
    if n == 0 || cert.points.len() != n || cert.duals.len() != n || cert.lambda < T::zero() {
        return Err(Error::input("fuzzy certificate needs λ >= 0 and one point and dual per index"));
    }
    let mut failures = Vec::new();
    let mut normal_distances = Vec::with_capacity(n);
    for ((&i, p), d) in cert.indices.iter().zip(&cert.points).zip(&cert.duals) {
        let set = fam.set(i)?;
        if !set.contains(p, tol.feas)? {
            normal_distances.push(T::infinity());
            failures.push(format!("point {i} lies in its set"));
            continue;
        }
        let (dist, analytic) = frechet_cone_distance(&set, p, d.coords(), ladder, tol)?;
        normal_distances.push(dist);
        if dist > if analytic { tol.cert } else { tol.res } * d.norm().max(T::one()) {
            failures.push(format!("dual {i} is a Fréchet normal"));
        }
    }
    let max_distance = cert.points.iter().map(|p| linalg::distance(p, &fam.base)).fold(T::zero(), T::max);
    if !(max_distance < cert.eps) {
        failures.push("points within eps of the base point".to_string());
    }
    let (inclusion_defect, identity_defect) = cert.defects();
    if inclusion_defect > tol.cert {
        failures.push("inclusion λx* in Σx*_i + εB".to_string());
    }
    if identity_defect > tol.cert {
        failures.push("normalization identity".to_string());
    }
    Ok(FuzzyCheck { pass: failures.is_empty(), failures, normal_distances, max_distance, inclusion_defect, identity_defect })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingConfig {
    /// Largest index subset `{1, ..., N}` tried.
    pub max_indices: usize,
    /// Directions used to generate boundary points near `x̄`.
    pub directions: usize,
    /// Use only normals at `x̄` itself.
    pub base_point_only: bool,
    pub seed: u64,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self { max_indices: 64, directions: 16, base_point_only: false, seed: 0 }
    }
}

#[derive(Debug, Clone)]
struct Column<T> {
    slot: usize,
    point: usize,
    dir: Vec<T>,
}

/// Points of `set` within `eps` of `x̄`: `x̄` itself and projections of
/// nearby probes.
fn points_near<T: Scalar>(set: &SetOracle<T>, xbar: &[T], eps: T, cfg: &MatchingConfig, tol: T) -> Result<Vec<Vec<T>>> {
    let mut out = vec![xbar.to_vec()];
    if cfg.base_point_only {
        return Ok(out);
    }
    let mut rng = keyed_rng(cfg.seed, &[tag("points_near"), xbar.len() as u64]);
    let dirs = unit_directions::<T>(xbar.len(), cfg.directions, &mut rng);
    for scale in [0.25, 0.5, 0.9, 2.0, 4.0] {
        for d in &dirs {
            let p = set.project_with(&linalg::axpy(xbar, eps * T::lit(scale), d), tol)?;
            if linalg::distance(&p, xbar) < eps && out.iter().all(|q| linalg::distance(q, &p) > T::lit(1e-12)) {
                out.push(p);
            }
        }
    }
    Ok(out)
}

struct Candidates<T> {
    points: Vec<Vec<Vec<T>>>,
    columns: Vec<Column<T>>,
}

fn candidates<T: Scalar>(
    sets: &[SetOracle<T>],
    xbar: &[T],
    eps: T,
    cfg: &MatchingConfig,
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<Candidates<T>> {
    let per = sets
        .par_iter()
        .enumerate()
        .map(|(slot, set)| {
            let pts = points_near(set, xbar, eps, cfg, tol.feas)?;
            let mut cols = Vec::new();
            for (pi, p) in pts.iter().enumerate() {
                for dir in frechet_normal_directions(set, p, ladder, tol)? {
                    cols.push(Column { slot, point: pi, dir });
                }
            }
            Ok((pts, cols))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(per.len());
    let mut columns = Vec::new();
    for (p, c) in per {
        points.push(p);
        columns.extend(c);
    }
    Ok(Candidates { points, columns })
}

/// Nonnegative combination of candidate normals closest to `target`, with
/// one point per set: a joint NNLS fit, then each set keeps the point that
/// carries most weight and the fit is repeated on those points.
fn matched_sum<T: Scalar>(target: &[T], cand: &Candidates<T>) -> (T, Vec<(usize, Vec<T>)>) {
    let dim = target.len();
    let nslots = cand.points.len();
    if cand.columns.is_empty() {
        return (norm(target), vec![(0, vec![T::zero(); dim]); nslots]);
    }
    let dirs: Vec<Vec<T>> = cand.columns.iter().map(|c| c.dir.clone()).collect();
    let (w, _) = linalg::nnls(&dirs, target);
    let mut weight = vec![Vec::<T>::new(); nslots];
    for (slot, pts) in cand.points.iter().enumerate() {
        weight[slot] = vec![T::zero(); pts.len()];
    }
    for (c, &x) in cand.columns.iter().zip(&w) {
        weight[c.slot][c.point] = weight[c.slot][c.point] + x;
    }
    let chosen: Vec<usize> = weight
        .iter()
        .map(|ws| {
            (0..ws.len())
                .max_by(|&a, &b| ws[a].partial_cmp(&ws[b]).unwrap_or(std::cmp::Ordering::Equal).then(b.cmp(&a)))
                .unwrap_or(0)
        })
        .collect();
    let kept: Vec<&Column<T>> = cand.columns.iter().filter(|c| chosen[c.slot] == c.point).collect();
    let mut duals = vec![vec![T::zero(); dim]; nslots];
    let residual = if kept.is_empty() {
        norm(target)
    } else {
        let kd: Vec<Vec<T>> = kept.iter().map(|c| c.dir.clone()).collect();
        let (w, res) = linalg::nnls(&kd, target);
        for (c, &x) in kept.iter().zip(&w) {
            duals[c.slot] = linalg::axpy(&duals[c.slot], x, &c.dir);
        }
        res
    };
    (residual, chosen.into_iter().zip(duals).collect())
}

fn index_ladder(max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = 1;
    while n < max {
        out.push(n);
        n *= 2;
    }
    out.push(max.max(1));
    out
}

fn index_limit<T: Scalar>(fam: &IndexedFamily<T>, cfg: &MatchingConfig) -> usize {
    fam.finite_len().map_or(cfg.max_indices, |n| n.min(cfg.max_indices)).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FuzzySearch<T> {
    pub certificate: Option<FuzzyCertificate<T>>,
    /// `max(inclusion_defect, identity_defect)` of the best candidate.
    pub best_residual: T,
    pub best: FuzzyCertificate<T>,
}

/// Searches certificates with `λ > 0` over index prefixes `{1, ..., N}`,
/// points near `x̄` and Fréchet normals there. Each candidate fits `x*` by
/// a nonnegative sum of normals `y_i` with residual `e`, then sets
/// `x*_i = λ y_i` with `λ = 1/√(1 + |x*|² + Σ|y_i|²)`, which makes the
/// identity exact and the inclusion defect `max(0, λe - ε)`. Exhaustion is
/// not a disproof.
pub fn search_fuzzy_certificate<T: Scalar>(
    fam: &IndexedFamily<T>,
    xstar: &DualVector<T>,
    eps: T,
    cfg: &MatchingConfig,
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<FuzzySearch<T>> {
    fam.validate()?;
    if xstar.dim() != fam.dim() {
        return Err(Error::DimensionMismatch { expected: fam.dim(), found: xstar.dim() });
    }
    if !(eps > T::zero()) {
        return Err(Error::input("eps must be positive"));
    }
    let limit = index_limit(fam, cfg);
    let all: Vec<usize> = (1..=limit).collect();
    let sets = fam.sets(&all)?;
    let cand = candidates(&sets, &fam.base, eps, cfg, ladder, tol)?;
    let mut best: Option<(T, FuzzyCertificate<T>)> = None;
    for n in index_ladder(limit) {
        let sub = Candidates {
            points: cand.points[..n].to_vec(),
            columns: cand.columns.iter().filter(|c| c.slot < n).cloned().collect(),
        };
        let (res, picks) = matched_sum(xstar.coords(), &sub);
        let sq: T = picks.iter().map(|(_, d)| norm(d) * norm(d)).sum();
        let xn = xstar.norm();
        let lambda = T::one() / (T::one() + xn * xn + sq).sqrt();
        let mut indices = Vec::new();
        let mut points = Vec::new();
        let mut duals = Vec::new();
        for (slot, (pi, d)) in picks.into_iter().enumerate() {
            if norm(&d) > T::zero() {
                indices.push(slot + 1);
                points.push(sub.points[slot][pi].clone());
                duals.push(DualVector::new(linalg::scale(&d, lambda))?);
            }
        }
        if indices.is_empty() {
            indices.push(1);
            points.push(fam.base.clone());
            duals.push(DualVector::zero(fam.dim()));
        }
        let cert = FuzzyCertificate::new(lambda, eps, xstar.clone(), indices, points, duals);
        let score = cert.inclusion_defect.max(cert.identity_defect);
        let _ = res;
        if score <= tol.cert {
            return Ok(FuzzySearch { best_residual: score, best: cert.clone(), certificate: Some(cert) });
        }
        if best.as_ref().map_or(true, |b| score < b.0) {
            best = Some((score, cert));
        }
    }
    let (best_residual, best) = best.expect("at least one index prefix is tried");
    Ok(FuzzySearch { certificate: None, best_residual, best })
}

/// Rung of an approximate-qualification probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct AqcRung<T> {
    pub eps: T,
    pub indices: Vec<usize>,
    pub points: Vec<Vec<T>>,
    pub duals: Vec<DualVector<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct AQCProbe<T> {
    /// Rungs with strictly decreasing `eps`.
    pub rungs: Vec<AqcRung<T>>,
}

/// Gate on the final sum norm for the premise.
pub const AQC_SUM_GATE: f64 = 1e-2;
/// Gate on the final squared-norm sum for the conclusion.
pub const AQC_SQUARE_GATE: f64 = 5e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AqcRow<T> {
    pub eps: T,
    pub sum_norm: T,
    pub square_sum: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AqcReport<T> {
    pub rows: Vec<AqcRow<T>>,
    /// `|Σ x*|` is non-increasing and ends below the sum gate.
    pub premise: bool,
    /// `Σ |x*|²` is non-increasing and ends below the square gate.
    pub conclusion: bool,
    pub pass: bool,
    pub violating_eps: Option<T>,
}

fn non_increasing<T: Scalar>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + T::lit(1e-15))
}

/// Surrogate of the implication `|Σ x*_ε| -> 0 ⟹ Σ|x*_ε|² -> 0` on a
/// decreasing ladder of `ε`.
pub fn aqc_check<T: Scalar>(fam: &IndexedFamily<T>, probe: &AQCProbe<T>, ladder: &RadiusLadder<T>, tol: &Tolerances<T>) -> Result<AqcReport<T>> {
    if probe.rungs.is_empty() || probe.rungs.windows(2).any(|w| !(w[1].eps < w[0].eps)) {
        return Err(Error::input("probe needs rungs with strictly decreasing eps"));
    }
    let mut rows = Vec::with_capacity(probe.rungs.len());
    for g in &probe.rungs {
        let n = g.indices.len();
        if g.points.len() != n || g.duals.len() != n {
            return Err(Error::input("probe rung needs one point and one dual per index"));
        }
        for ((&i, p), d) in g.indices.iter().zip(&g.points).zip(&g.duals) {
            if d.norm() > T::one() + tol.cert {
                return Err(Error::input(format!("probe dual for set {i} exceeds the unit ball")));
            }
            if linalg::distance(p, &fam.base) > g.eps + tol.feas {
                return Err(Error::input(format!("probe point for set {i} is farther than eps")));
            }
            let set = fam.set(i)?;
            if !set.contains(p, tol.feas)? {
                return Err(Error::input(format!("probe point for set {i} is not in the set")));
            }
            let (dist, analytic) = frechet_cone_distance(&set, p, d.coords(), ladder, tol)?;
            if dist > if analytic { tol.cert } else { tol.res } {
                return Err(Error::input(format!("probe dual for set {i} is not a Fréchet normal")));
            }
        }
        let sum = g.duals.iter().fold(vec![T::zero(); fam.dim()], |s, d| linalg::add(&s, d.coords()));
        rows.push(AqcRow { eps: g.eps, sum_norm: norm(&sum), square_sum: g.duals.iter().map(|d| d.norm() * d.norm()).sum() });
    }
    let sums: Vec<T> = rows.iter().map(|r| r.sum_norm).collect();
    let squares: Vec<T> = rows.iter().map(|r| r.square_sum).collect();
    let premise = non_increasing(&sums) && *sums.last().expect("nonempty") < T::lit(AQC_SUM_GATE);
    let conclusion = non_increasing(&squares) && *squares.last().expect("nonempty") < T::lit(AQC_SQUARE_GATE);
    let pass = !premise || conclusion;
    let violating_eps = if pass {
        None
    } else {
        rows.iter()
            .rev()
            .find(|r| r.square_sum >= T::lit(AQC_SQUARE_GATE))
            .or(rows.last())
            .map(|r| r.eps)
    };
    Ok(AqcReport { rows, premise, conclusion, pass, violating_eps })
}

/// Up to `count` mutually far directions, chosen greedily.
fn spread_directions<T: Scalar>(pool: &[&Column<T>], count: usize) -> Vec<(usize, Vec<T>)> {
    let mut out: Vec<(usize, Vec<T>)> = Vec::new();
    while out.len() < count {
        let next = pool
            .iter()
            .map(|c| (out.iter().map(|(_, d)| linalg::distance(d, &c.dir)).fold(T::infinity(), T::min), c))
            .filter(|(gap, _)| *gap > T::lit(1e-9))
            .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        match next {
            Some((_, c)) => out.push((c.point, c.dir.clone())),
            None => break,
        }
    }
    out
}

/// Builds the probe most likely to break the qualification condition: at
/// each `ε` it takes the normals (one per set, at points within `ε`) whose
/// sum is smallest relative to their squared norms, scaled so that the sum
/// norm follows `δ ε / ε₀` while staying in the unit ball.
pub fn aqc_adversarial_probe<T: Scalar>(
    fam: &IndexedFamily<T>,
    eps_ladder: &[T],
    cfg: &MatchingConfig,
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<AQCProbe<T>> {
    fam.validate()?;
    let limit = index_limit(fam, cfg);
    let sets = fam.sets(&(1..=limit).collect::<Vec<_>>())?;
    let eps0 = *eps_ladder.first().ok_or_else(|| Error::input("empty eps ladder"))?;
    let mut rungs = Vec::with_capacity(eps_ladder.len());
    for &eps in eps_ladder {
        let cand = candidates(&sets, &fam.base, eps, cfg, ladder, tol)?;
        let mut slots = Vec::new();
        let mut cones = Vec::new();
        for slot in 0..cand.points.len() {
            let pool: Vec<&Column<T>> = cand.columns.iter().filter(|c| c.slot == slot).collect();
            let dirs = spread_directions(&pool, 3);
            if !dirs.is_empty() {
                cones.push(ConeSample::from_directions(fam.base.clone(), dirs.iter().map(|d| d.1.clone()).collect())?);
                slots.push((slot, dirs));
            }
        }
        if cones.is_empty() {
            return Err(Error::input("no boundary points with nonzero normals near the base point"));
        }
        cones.truncate(5);
        slots.truncate(5);
        let search = search_principle_certificate(&cones, &SearchConfig::default())?;
        let c = search.best_residual;
        let cap = T::one() / search.vectors.iter().map(|v| norm(v)).fold(T::zero(), T::max);
        let target = T::lit(AQC_SUM_GATE) * eps / eps0;
        let s = if c > T::zero() { cap.min(target / c) } else { cap };
        let mut g = AqcRung { eps, indices: Vec::new(), points: Vec::new(), duals: Vec::new() };
        for ((slot, dirs), v) in slots.iter().zip(&search.vectors) {
            let n = norm(v);
            let point = if n > T::zero() {
                let u = linalg::scale(v, T::one() / n);
                dirs.iter()
                    .min_by(|a, b| linalg::distance(&a.1, &u).partial_cmp(&linalg::distance(&b.1, &u)).unwrap_or(std::cmp::Ordering::Equal))
                    .map_or(0, |d| d.0)
            } else {
                0
            };
            g.indices.push(slot + 1);
            g.points.push(cand.points[*slot][point].clone());
            g.duals.push(DualVector::new(linalg::scale(v, s))?);
        }
        rungs.push(g);
    }
    Ok(AQCProbe { rungs })
}

/// Indexed vector fields `k ↦ F_k` on `R^2` and beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorFamily<T> {
    /// Unit normals to the boundary of `{x_2 >= g_k(x_1)}` with
    /// `g_k(t) = k^m t²` for `t > 0` and `0` otherwise.
    KmUnitNormal { m: T },
    /// Gradients of `φ_k(x) = k^m x_1² - x_2` for `x_1 > 0`, `-x_2` otherwise.
    KmGradient { m: T },
    Constant { value: Vec<T> },
}

impl<T: Scalar> VectorFamily<T> {
    pub fn dim(&self) -> usize {
        match self {
            VectorFamily::Constant { value } => value.len(),
            _ => 2,
        }
    }

    pub fn eval(&self, k: usize, x: &[T]) -> Vec<T> {
        match self {
            VectorFamily::KmUnitNormal { m } => {
                if x[0] > T::zero() {
                    let a = T::two() * T::from_usize_lossy(k).powf(*m) * x[0];
                    let n = (a * a + T::one()).sqrt();
                    vec![a / n, -T::one() / n]
                } else {
                    vec![T::zero(), -T::one()]
                }
            }
            VectorFamily::KmGradient { m } => {
                if x[0] > T::zero() {
                    vec![T::two() * T::from_usize_lossy(k).powf(*m) * x[0], -T::one()]
                } else {
                    vec![T::zero(), -T::one()]
                }
            }
            VectorFamily::Constant { value } => value.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquicontinuityReport<T> {
    pub equicontinuous: bool,
    /// Sampled `sup_k sup_{|x - x̄| <= δ} |F_k(x) - F_k(x̄)|` per δ.
    pub sups: Vec<T>,
    /// `(k, x)` attaining the supremum at the finest δ when not equicontinuous.
    pub witness: Option<(usize, Vec<T>)>,
}

/// Equicontinuity at `x̄` for `k` in `ks`: some δ of the ladder keeps every
/// sampled `|F_k(x) - F_k(x̄)|` below `eps`.
pub fn equicontinuity_probe<T: Scalar>(
    field: &VectorFamily<T>,
    xbar: &[T],
    eps: T,
    deltas: &[T],
    ks: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<EquicontinuityReport<T>> {
    if xbar.len() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), found: xbar.len() });
    }
    if deltas.is_empty() || ks.is_empty() {
        return Err(Error::input("need at least one δ and one index"));
    }
    let mut rng = keyed_rng(seed, &[tag("equicontinuity")]);
    let mut dirs = unit_directions::<T>(xbar.len(), 32, &mut rng);
    for j in 0..xbar.len() {
        for s in [T::one(), -T::one()] {
            let mut e = vec![T::zero(); xbar.len()];
            e[j] = s;
            dirs.push(e);
        }
    }
    let mut sups = Vec::with_capacity(deltas.len());
    let mut worst = None;
    for &delta in deltas {
        let (sup, w) = ks
            .clone()
            .into_par_iter()
            .map(|k| {
                let f0 = field.eval(k, xbar);
                let mut best = (T::zero(), k, xbar.to_vec());
                for d in &dirs {
                    for s in [1.0, 0.5, 0.25, 0.125] {
                        let x = linalg::axpy(xbar, delta * T::lit(s), d);
                        let v = linalg::distance(&field.eval(k, &x), &f0);
                        if v > best.0 {
                            best = (v, k, x);
                        }
                    }
                }
                best
            })
            .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
            .map(|(v, k, x)| (v, (k, x)))
            .expect("nonempty index range");
        sups.push(sup);
        worst = Some(w);
    }
    let equicontinuous = sups.iter().any(|&s| s < eps);
    Ok(EquicontinuityReport { equicontinuous, sups, witness: if equicontinuous { None } else { worst } })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport<T> {
    /// Distance from `x*` to the sampled sums of Fréchet normals.
    pub distance: T,
    pub pass: bool,
    pub indices: Vec<usize>,
    /// The inclusion assumes every limiting normal of the intersection is a
    /// limiting rated normal; this is not verified.
    pub assumption_unverified: bool,
}

/// Distance from `x*` to `{Σ_{i in I} x*_i : x*_i Fréchet normal to Ω_i at
/// x_i, |x_i - x̄| < ε}` over prefixes `I ⊂ {1, ..., N}`; passes when at
/// most `ε`. Exhaustion is one-sided.
pub fn limiting_rnormal_representation_check<T: Scalar>(
    xstar: &DualVector<T>,
    fam: &IndexedFamily<T>,
    eps: T,
    cfg: &MatchingConfig,
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<RepresentationReport<T>> {
    fam.validate()?;
    if xstar.dim() != fam.dim() {
        return Err(Error::DimensionMismatch { expected: fam.dim(), found: xstar.dim() });
    }
    let limit = index_limit(fam, cfg);
    let sets = fam.sets(&(1..=limit).collect::<Vec<_>>())?;
    let cand = candidates(&sets, &fam.base, eps, cfg, ladder, tol)?;
    let (distance, picks) = matched_sum(xstar.coords(), &cand);
    let indices = picks.iter().enumerate().filter(|(_, (_, d))| norm(d) > T::zero()).map(|(i, _)| i + 1).collect();
    Ok(RepresentationReport { distance, pass: distance <= eps + tol.cert, indices, assumption_unverified: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ScalarFunction;

    fn dv(v: &[f64]) -> DualVector<f64> {
        DualVector::new(v.to_vec()).unwrap()
    }

    fn km_query(x: &[f64]) -> RNormalQuery<f64> {
        let radii = vec![1e-2, 1e-3, 1e-4];
        RNormalQuery::new(dv(x), RateFunction::from_rank(0.1, 1.0), radii.clone(), k0_selection(&radii, 4.0, 0.1))
    }

    fn corner() -> IndexedFamily<f64> {
        IndexedFamily::explicit(
            vec![SetOracle::halfspace(vec![0.0, 1.0], 0.0), SetOracle::halfspace(vec![1.0, 0.0], 0.0)],
            vec![0.0, 0.0],
        )
    }

    #[test]
    fn k0_values() {
        assert_eq!([k0(1e-2, 4.0, 0.1), k0(1e-3, 4.0, 0.1), k0(1e-4, 4.0, 0.1)], [8, 27, 90]);
    }

    #[test]
    fn rated_normals_on_km_family() {
        let tol = Tolerances::default();
        let fam = IndexedFamily::km_parabolas(4.0);
        let rep = verify_r_normal(&fam, &km_query(&[1.0, 0.0]), &tol).unwrap();
        assert!(rep.pass);
        let sup = rep.rungs[1].sup_value;
        assert!(sup <= 1.0 / (4.0 * 1e-3 * 27f64.powi(4)) * (1.0 + 1e-6), "{sup}");
        assert!(verify_r_normal(&fam, &km_query(&[0.0, 0.0]), &tol).unwrap().pass);
        let up = verify_r_normal(&fam, &km_query(&[0.0, 1.0]), &tol).unwrap();
        assert!(up.rungs.iter().all(|g| !g.pass));
        assert!(verify_r_normal(&fam, &km_query(&[0.0, -1.0]), &tol).unwrap().pass);
    }

    #[test]
    fn consistency() {
        let tol = Tolerances::default();
        let ladder = RadiusLadder::default();
        let fam = IndexedFamily::km_parabolas(4.0);
        let rep = r_normal_frechet_consistency(&fam, &km_query(&[1.0, 0.0]), &ladder, &tol).unwrap();
        assert_eq!(rep.frechet, Some(true));
        let h = 0.5f64.sqrt();
        let radii = vec![1e-2, 1e-3, 1e-4];
        let q = RNormalQuery::new(dv(&[h, h]), RateFunction::from_rank(0.5, 1.0), radii, SelectionRule { sets: vec![vec![1, 2]; 3] });
        let rep = r_normal_frechet_consistency(&corner(), &q, &ladder, &tol).unwrap();
        assert_eq!((rep.r_normal, rep.frechet, rep.converse), (true, Some(true), Some(true)));
    }

    #[test]
    fn fuzzy_certificates() {
        let tol = Tolerances::default();
        let ladder = RadiusLadder::default();
        let l = 0.5f64.sqrt();
        let cert = FuzzyCertificate::new(
            l,
            0.05,
            dv(&[0.5, 0.5]),
            vec![1, 2],
            vec![vec![0.0, 0.0]; 2],
            vec![dv(&[0.0, l / 2.0]), dv(&[l / 2.0, 0.0])],
        );
        assert!(cert.identity_defect < 1e-15);
        let chk = fuzzy_certificate_check(&cert, &corner(), &ladder, &tol).unwrap();
        assert!(chk.pass, "{:?}", chk.failures);

        let pair = IndexedFamily::explicit(
            vec![
                SetOracle::hypograph(ScalarFunction::Parabola { coef: 1.0 }),
                SetOracle::epigraph(ScalarFunction::Parabola { coef: -1.0 }),
            ],
            vec![0.0, 0.0],
        );
        let zero = FuzzyCertificate::new(0.0, 0.05, dv(&[1.0, 0.0]), vec![1, 2], vec![vec![0.0, 0.0]; 2], vec![dv(&[0.0, l]), dv(&[0.0, -l])]);
        assert!(fuzzy_certificate_check(&zero, &pair, &ladder, &tol).unwrap().pass);

        let bad = FuzzyCertificate::new(0.0, 0.05, dv(&[1.0, 0.0]), vec![1, 2], vec![vec![0.0, 0.0]; 2], vec![dv(&[0.0, 0.7f64.sqrt() / 2f64.sqrt()]), dv(&[0.0, -0.7f64.sqrt() / 2f64.sqrt()])]);
        assert!((bad.identity_defect - 0.3).abs() < 1e-12);
        assert!(!fuzzy_certificate_check(&bad, &pair, &ladder, &tol).unwrap().pass);
    }

    #[test]
    fn fuzzy_search() {
        let tol = Tolerances::default();
        let ladder = RadiusLadder::default();
        let h = 0.5f64.sqrt();
        let s = search_fuzzy_certificate(&corner(), &dv(&[h, h]), 0.05, &MatchingConfig::default(), &ladder, &tol).unwrap();
        assert!(s.certificate.as_ref().is_some_and(|c| c.lambda > 0.0));
        let fam = IndexedFamily::km_parabolas(4.0);
        let s = search_fuzzy_certificate(&fam, &dv(&[1.0, 0.0]), 0.05, &MatchingConfig::default(), &ladder, &tol).unwrap();
        let c = s.certificate.expect("certificate");
        assert!(fuzzy_certificate_check(&c, &fam, &ladder, &tol).unwrap().pass);
        let s = search_fuzzy_certificate(&fam, &dv(&[0.0, 1.0]), 0.05, &MatchingConfig::default(), &ladder, &tol).unwrap();
        assert!(s.certificate.is_none() && s.best_residual > 0.5);
    }

    #[test]
    fn aqc() {
        let tol = Tolerances::default();
        let ladder = RadiusLadder::default();
        let eps: Vec<f64> = (0..6).map(|j| 0.1 * 0.5f64.powi(j)).collect();
        let cfg = MatchingConfig { max_indices: 6, ..MatchingConfig::default() };
        let fam = IndexedFamily::km_parabolas(4.0);
        let probe = aqc_adversarial_probe(&fam, &eps, &cfg, &ladder, &tol).unwrap();
        let rep = aqc_check(&fam, &probe, &ladder, &tol).unwrap();
        assert!(rep.premise && rep.pass, "{rep:?}");
        let flat = IndexedFamily::explicit(
            vec![SetOracle::halfspace(vec![0.0, 1.0], 0.0), SetOracle::halfspace(vec![0.0, -1.0], 0.0)],
            vec![0.0, 0.0],
        );
        let probe = aqc_adversarial_probe(&flat, &eps, &cfg, &ladder, &tol).unwrap();
        let rep = aqc_check(&flat, &probe, &ladder, &tol).unwrap();
        assert!(!rep.pass && rep.violating_eps.is_some());
        let zero = AQCProbe {
            rungs: eps.iter().map(|&e| AqcRung { eps: e, indices: vec![1], points: vec![vec![0.0, 0.0]], duals: vec![dv(&[0.0, 0.0])] }).collect(),
        };
        assert!(aqc_check(&flat, &zero, &ladder, &tol).unwrap().pass);
    }

    #[test]
    fn equicontinuity() {
        let deltas: Vec<f64> = (1..=6).map(|j| 10f64.powi(-j)).collect();
        let xi = equicontinuity_probe(&VectorFamily::KmUnitNormal { m: 4.0 }, &[0.0, 0.0], 0.5, &deltas, 1..=1000, 0).unwrap();
        assert!(!xi.equicontinuous);
        let (k, x) = xi.witness.unwrap();
        let v = VectorFamily::KmUnitNormal { m: 4.0 }.eval(k, &x);
        let a = 4.0 * (k as f64).powi(8) * x[0] * x[0];
        assert!((linalg::distance(&v, &[0.0, -1.0]).powi(2) - (2.0 - 2.0 / (a + 1.0).sqrt())).abs() < 1e-9);
        let g = equicontinuity_probe(&VectorFamily::KmGradient { m: 4.0 }, &[0.0, 0.0], 0.5, &deltas, 1..=1000, 0).unwrap();
        assert!(!g.equicontinuous);
        let c = equicontinuity_probe(&VectorFamily::Constant { value: vec![1.0, 2.0] }, &[0.0, 0.0], 0.5, &deltas, 1..=10, 0).unwrap();
        assert!(c.equicontinuous);
    }

    #[test]
    fn representation() {
        let tol = Tolerances::default();
        let ladder = RadiusLadder::default();
        let fam = IndexedFamily::km_parabolas(4.0);
        let cfg = MatchingConfig::default();
        assert!(limiting_rnormal_representation_check(&dv(&[1.0, 0.0]), &fam, 0.05, &cfg, &ladder, &tol).unwrap().pass);
        let up = limiting_rnormal_representation_check(&dv(&[0.0, 1.0]), &fam, 0.05, &cfg, &ladder, &tol).unwrap();
        assert!(!up.pass && up.distance >= 0.9);
        let cones = IndexedFamily::explicit(
            vec![SetOracle::halfspace(vec![1.0, 2.0], 0.0), SetOracle::halfspace(vec![-1.0, 1.0], 0.0)],
            vec![0.0, 0.0],
        );
        let base = MatchingConfig { base_point_only: true, ..cfg };
        assert!(limiting_rnormal_representation_check(&dv(&[0.0, 3.0]), &cones, 0.05, &base, &ladder, &tol).unwrap().pass);
    }
}
