//! Rated extremality of finite set systems and the constructive extremal
//! principle that turns it into dual certificates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{find_common_point, GridConfig};
use crate::geometry::SetOracle;
use crate::linalg::{self, norm};
use crate::normal_cones::{cluster_directions, limiting_cone_sample, ConeSample, DualVector, RadiusLadder};
use crate::sampling::{keyed_rng, tag, unit_directions};
use crate::scalar::Scalar;
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleData<T> {
    shifts: Vec<Vec<Vec<T>>>,
}

/// Shifts `a_{ik}` stored rung by rung: `shifts[k][i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleData<T>", into = "ScheduleData<T>", bound = "T: Scalar")]
pub struct TranslationSchedule<T> {
    shifts: Vec<Vec<Vec<T>>>,
    radii: Vec<T>,
}

impl<T: Scalar> TryFrom<ScheduleData<T>> for TranslationSchedule<T> {
    type Error = Error;

    fn try_from(d: ScheduleData<T>) -> Result<Self> {
        Self::new(d.shifts)
    }
}

impl<T: Scalar> From<TranslationSchedule<T>> for ScheduleData<T> {
    fn from(s: TranslationSchedule<T>) -> Self {
        Self { shifts: s.shifts }
    }
}

impl<T: Scalar> TranslationSchedule<T> {
    pub fn new(shifts: Vec<Vec<Vec<T>>>) -> Result<Self> {
        let first = shifts.first().ok_or_else(|| Error::input("schedule has no rungs"))?;
        let m = first.len();
        let n = first.first().map_or(0, |a| a.len());
        if m == 0 || n == 0 {
            return Err(Error::input("schedule rungs need at least one nonempty shift"));
        }
        let mut radii = Vec::with_capacity(shifts.len());
        for (k, rung) in shifts.iter().enumerate() {
            if rung.len() != m || rung.iter().any(|a| a.len() != n) {
                return Err(Error::input(format!("schedule rung {} has inconsistent shape", k + 1)));
            }
            if rung.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::input(format!("schedule rung {} has non-finite shifts", k + 1)));
            }
            let r = rung.iter().map(|a| norm(a)).fold(T::zero(), T::max);
            if !(r > T::zero()) {
                return Err(Error::input(format!("schedule rung {} has r_k = 0", k + 1)));
            }
            if let Some(&prev) = radii.last() {
                if !(r < prev) {
                    return Err(Error::input(format!("r_k is not strictly decreasing at rung {}", k + 1)));
                }
            }
            radii.push(r);
        }
        Ok(Self { shifts, radii })
    }

    /// `a_{ik} = directions[i] * base^{-k}` for `k = 1..=rungs`.
    pub fn geometric(directions: &[Vec<T>], base: T, rungs: usize) -> Result<Self> {
        if !(base > T::one()) {
            return Err(Error::input("geometric schedule needs base > 1"));
        }
        let shifts = (1..=rungs)
            .map(|k| {
                let s = base.powi(-(k as i32));
                directions.iter().map(|d| linalg::scale(d, s)).collect()
            })
            .collect();
        Self::new(shifts)
    }

    /// Opposite shifts along one axis: index `i` moves by `(-1)^i e_axis base^{-k}`.
    pub fn axis_shifts(m: usize, dim: usize, axis: usize, base: T, rungs: usize) -> Result<Self> {
        if axis >= dim {
            return Err(Error::input("axis out of range"));
        }
        let dirs: Vec<Vec<T>> = (0..m)
            .map(|i| {
                let mut d = vec![T::zero(); dim];
                d[axis] = if i % 2 == 0 { T::one() } else { -T::one() };
                d
            })
            .collect();
        Self::geometric(&dirs, base, rungs)
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    /// Number of sets the schedule moves.
    pub fn m(&self) -> usize {
        self.shifts[0].len()
    }

    pub fn dim(&self) -> usize {
        self.shifts[0][0].len()
    }

    /// Shifts at rung `k` (0-based).
    pub fn shifts(&self, k: usize) -> &[Vec<T>] {
        &self.shifts[k]
    }

    /// `r_k = max_i |a_{ik}|` at rung `k` (0-based).
    pub fn radius(&self, k: usize) -> T {
        self.radii[k]
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }
}

/// Rank `alpha` and constant `gamma` of a rated extremality query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatedQuery<T> {
    pub alpha: T,
    pub gamma: T,
    /// Number of rungs checked; all scheduled rungs when absent.
    #[serde(default)]
    pub rungs: Option<usize>,
    #[serde(default)]
    pub grid: GridConfig,
    /// Admits `alpha = 1`, which lies outside the rated definition but is
    /// useful for showing how the principle breaks down there.
    #[serde(default)]
    pub rank_one: bool,
}

impl<T: Scalar> RatedQuery<T> {
    pub fn new(alpha: T, gamma: T) -> Self {
        Self { alpha, gamma, rungs: None, grid: GridConfig::default(), rank_one: false }
    }

    pub fn validate(&self) -> Result<()> {
        let top_ok = self.alpha < T::one() || (self.rank_one && self.alpha == T::one());
        if !(self.alpha >= T::zero()) || !top_ok {
            return Err(Error::input("alpha must lie in [0,1)"));
        }
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return Err(Error::input("gamma must be positive"));
        }
        Ok(())
    }

    /// Radius `gamma r^alpha` of the excluded ball.
    pub fn ball_radius(&self, r: T) -> T {
        if self.alpha == T::zero() {
            self.gamma
        } else {
            self.gamma * r.powf(self.alpha)
        }
    }

    fn rung_count(&self, sched: &TranslationSchedule<T>) -> usize {
        self.rungs.map_or(sched.len(), |k| k.min(sched.len()))
    }
}

/// Feasibility outcome at one rung.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungOutcome<T> {
    /// 1-based rung index.
    pub k: usize,
    pub r: T,
    pub ball_radius: T,
    /// A point of the shifted intersection inside the ball, when found.
    pub witness: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExtremalityVerdict<T> {
    /// No common point found at any of the first `k` rungs.
    HoldsUpToK { k: usize },
    /// The shifted sets meet inside the ball at rung `k`.
    Counterexample { k: usize, witness: Vec<T> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatedReport<T> {
    pub verdict: ExtremalityVerdict<T>,
    pub rungs: Vec<RungOutcome<T>>,
}

impl<T: Scalar> RatedReport<T> {
    pub fn holds(&self) -> bool {
        matches!(self.verdict, ExtremalityVerdict::HoldsUpToK { .. })
    }

    fn from_rungs(rungs: Vec<RungOutcome<T>>) -> Self {
        let verdict = rungs
            .iter()
            .find_map(|o| o.witness.clone().map(|w| ExtremalityVerdict::Counterexample { k: o.k, witness: w }))
            .unwrap_or(ExtremalityVerdict::HoldsUpToK { k: rungs.len() });
        Self { verdict, rungs }
    }
}

pub(crate) fn check_system<T: Scalar>(system: &[SetOracle<T>], xbar: &[T], tol: &Tolerances<T>) -> Result<()> {
    for (i, s) in system.iter().enumerate() {
        if s.dim() != xbar.len() {
            return Err(Error::DimensionMismatch { expected: xbar.len(), found: s.dim() });
        }
        if !s.contains(xbar, tol.feas)? {
            return Err(Error::precondition(format!("base point is not in set {}", i + 1)));
        }
    }
    Ok(())
}

/// Searches `B(x̄, ball)` for a common point of the shifted sets `Ω_i - a_i`.
pub(crate) fn shifted_feasibility<T: Scalar>(
    system: &[SetOracle<T>],
    shifts: &[Vec<T>],
    xbar: &[T],
    ball: T,
    grid: &GridConfig,
    tol: &Tolerances<T>,
) -> Result<Option<Vec<T>>> {
    let shifted: Vec<SetOracle<T>> = system.iter().zip(shifts).map(|(s, a)| s.translate(a)).collect();
    find_common_point(&shifted, xbar, ball, tol.feas, grid)
}

/// Checks `⋂(Ω_i - a_{ik}) ∩ B(x̄, γ r_k^α) = ∅` rung by rung. The verdict is
/// one-sided: a witness disproves the rung, its absence is grid evidence.
pub fn verify_rated_extremality<T: Scalar>(
    system: &[SetOracle<T>],
    xbar: &[T],
    q: &RatedQuery<T>,
    sched: &TranslationSchedule<T>,
    tol: &Tolerances<T>,
) -> Result<RatedReport<T>> {
    q.validate()?;
    check_system(system, xbar, tol)?;
    if sched.m() != system.len() || sched.dim() != xbar.len() {
        return Err(Error::input("schedule shape does not match the set system"));
    }
    let rungs = (0..q.rung_count(sched))
        .into_par_iter()
        .map(|k| {
            let r = sched.radius(k);
            let ball = q.ball_radius(r);
            let grid = GridConfig { seed: q.grid.seed ^ k as u64, ..q.grid };
            let witness = shifted_feasibility(system, sched.shifts(k), xbar, ball, &grid, tol)?;
            Ok(RungOutcome { k: k + 1, r, ball_radius: ball, witness })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatedReport::from_rungs(rungs))
}

/// Cones `Λ_i` and constants for the tangential rate condition
/// `dist(x - x̄; Λ_i) <= C |x - x̄|^{1+p}` near `x̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
pub struct TangentialConfig<T> {
    pub cones: Vec<SetOracle<T>>,
    pub c: T,
    pub p: T,
    #[serde(default)]
    pub ladder: RadiusLadder<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentialOutcome<T> {
    pub index: usize,
    pub holds: bool,
    /// Largest sampled `dist(x - x̄; Λ) / |x - x̄|^{1+p}`.
    pub worst_ratio: T,
    pub worst_point: Option<Vec<T>>,
}

fn check_cone<T: Scalar>(cone: &SetOracle<T>, dim: usize, tol: &Tolerances<T>) -> Result<()> {
    let origin = vec![T::zero(); dim];
    if cone.dim() != dim || !cone.contains(&origin, tol.feas)? {
        return Err(Error::input("approximating set must be a cone containing the origin"));
    }
    let mut rng = keyed_rng(0, &[tag("cone_check")]);
    for d in unit_directions::<T>(dim, 32, &mut rng) {
        let y = cone.project_with(&d, tol.feas)?;
        for s in [T::half(), T::two(), T::lit(10.0)] {
            if !cone.contains_unchecked(&linalg::scale(&y, s), tol.feas.max(T::lit(1e-9)) * (T::one() + s)) {
                return Err(Error::input("approximating set is not positively homogeneous"));
            }
        }
    }
    Ok(())
}

/// Tangential rate condition per index, sampled over the ladder.
pub fn tangential_rate_check<T: Scalar>(
    system: &[SetOracle<T>],
    xbar: &[T],
    cfg: &TangentialConfig<T>,
    tol: &Tolerances<T>,
) -> Result<Vec<TangentialOutcome<T>>> {
    if !(cfg.c > T::zero()) || !(cfg.p > T::zero() && cfg.p < T::one()) {
        return Err(Error::input("tangential check needs C > 0 and p in (0,1)"));
    }
    if cfg.cones.len() != system.len() {
        return Err(Error::input("one approximating cone per set is required"));
    }
    cfg.ladder.validate()?;
    check_system(system, xbar, tol)?;
    system
        .iter()
        .zip(&cfg.cones)
        .enumerate()
        .map(|(i, (set, cone))| {
            check_cone(cone, xbar.len(), tol)?;
            let mut worst = T::zero();
            let mut worst_point = None;
            for j in 0..cfg.ladder.rungs {
                for off in cfg.ladder.probes(xbar.len(), "tangential", j) {
                    let p = linalg::add(xbar, &off);
                    let w = if set.contains_unchecked(&p, tol.feas) { p } else { set.project_with(&p, tol.feas)? };
                    let v = linalg::sub(&w, xbar);
                    let n = norm(&v);
                    if n == T::zero() || n > cfg.ladder.rho0 {
                        continue;
                    }
                    let ratio = cone.distance_unchecked(&v)? / n.powf(T::one() + cfg.p);
                    if ratio > worst {
                        worst = ratio;
                        worst_point = Some(w);
                    }
                }
            }
            Ok(TangentialOutcome { index: i + 1, holds: worst <= cfg.c + tol.res, worst_ratio: worst, worst_point })
        })
        .collect()
}

/// Settings of the derivative-free minimization of `d_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Seeds besides `x̄`, placed at radius `γ r_k^α / 2`.
    pub extra_seeds: usize,
    pub max_iter: usize,
    pub step_tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { extra_seeds: 8, max_iter: 200, step_tol: 1e-11, seed: 0 }
    }
}

/// Residuals of a dual certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals<T> {
    /// `|Σ x*_i|`
    pub sum_norm: T,
    /// `|Σ |x*_i|^2 - 1|`
    pub unit_defect: T,
    /// Angle from each `x*_i` to the sampled limiting cone of `Ω_i` at `x̄`.
    pub cone_defects: Vec<Option<T>>,
}

/// Where a per-rung certificate came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungProvenance<T> {
    /// 1-based rung index.
    pub k: usize,
    pub r: T,
    pub nu: T,
    pub minimizer: Vec<T>,
    /// `d_k` at the minimizer and at `x̄`.
    pub objective: T,
    pub objective_at_base: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PrincipleCertificate<T> {
    /// Base points `x_i` of the duals (`w_{ik}` for rung certificates).
    pub points: Vec<Vec<T>>,
    pub duals: Vec<DualVector<T>>,
    pub residuals: Residuals<T>,
    pub provenance: Option<RungProvenance<T>>,
    /// Reference cones used for the cone defects; may be empty.
    #[serde(default)]
    pub cones: Vec<ConeSample<T>>,
}

impl<T: Scalar> PrincipleCertificate<T> {
    pub fn new(points: Vec<Vec<T>>, duals: Vec<DualVector<T>>, cones: Vec<ConeSample<T>>) -> Self {
        let mut c = Self {
            points,
            duals,
            residuals: Residuals { sum_norm: T::zero(), unit_defect: T::zero(), cone_defects: Vec::new() },
            provenance: None,
            cones,
        };
        c.residuals = certificate_residuals(&c);
        c
    }
}

/// Recomputes the residual record from the stored vectors.
pub fn certificate_residuals<T: Scalar>(cert: &PrincipleCertificate<T>) -> Residuals<T> {
    let dim = cert.duals.first().map_or(0, |d| d.dim());
    let mut sum = vec![T::zero(); dim];
    let mut sq = T::zero();
    for d in &cert.duals {
        sum = linalg::add(&sum, d.coords());
        sq = sq + d.norm() * d.norm();
    }
    let cone_defects = cert
        .duals
        .iter()
        .enumerate()
        .map(|(i, d)| cert.cones.get(i).map(|c| c.angular_gap(d.coords())))
        .collect();
    Residuals { sum_norm: norm(&sum), unit_defect: (sq - T::one()).abs(), cone_defects }
}

/// Per-rung certificates of the constructive principle and their limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PrincipleRun<T> {
    pub certificates: Vec<PrincipleCertificate<T>>,
    pub limit: PrincipleCertificate<T>,
}

impl<T: Scalar> PrincipleRun<T> {
    pub fn sum_norms(&self) -> Vec<T> {
        self.certificates.iter().map(|c| c.residuals.sum_norm).collect()
    }
}

/// `d_k(x) = [Σ dist²(x + a_i; Ω_i)]^{1/2} + (√m / γ^{1/α}) |x - x̄|^{1/α}`,
/// without the penalty when `alpha = 0`.
fn objective<T: Scalar>(system: &[SetOracle<T>], shifts: &[Vec<T>], xbar: &[T], alpha: T, gamma: T, x: &[T]) -> Result<T> {
    let mut s = T::zero();
    for (set, a) in system.iter().zip(shifts) {
        let d = set.distance_unchecked(&linalg::add(x, a))?;
        s = s + d * d;
    }
    let mut v = s.sqrt();
    if alpha > T::zero() {
        let m = T::from_usize_lossy(system.len());
        let beta = T::one() / alpha;
        v = v + m.sqrt() / gamma.powf(beta) * linalg::distance(x, xbar).powf(beta);
    }
    Ok(v)
}

struct Descent<T> {
    x: Vec<T>,
    value: T,
    converged: bool,
}

/// Pattern search with halving steps; `ball` confines iterates when set.
fn pattern_search<T: Scalar>(
    f: &dyn Fn(&[T]) -> Result<T>,
    start: Vec<T>,
    h0: T,
    ball: Option<(&[T], T)>,
    cfg: &SolverConfig,
) -> Result<Descent<T>> {
    let n = start.len();
    let mut dirs: Vec<Vec<T>> = Vec::new();
    for i in 0..n {
        for s in [T::one(), -T::one()] {
            let mut e = vec![T::zero(); n];
            e[i] = s;
            dirs.push(e);
        }
    }
    if n <= 3 {
        let h = T::half().sqrt();
        for i in 0..n {
            for j in i + 1..n {
                for (si, sj) in [(h, h), (h, -h), (-h, h), (-h, -h)] {
                    let mut e = vec![T::zero(); n];
                    e[i] = si;
                    e[j] = sj;
                    dirs.push(e);
                }
            }
        }
    }
    let confine = |y: Vec<T>| match ball {
        Some((c, r)) => {
            let d = linalg::distance(&y, c);
            if d > r {
                linalg::axpy(c, r / d, &linalg::sub(&y, c))
            } else {
                y
            }
        }
        None => y,
    };
    let mut x = confine(start);
    let mut fx = f(&x)?;
    let mut h = h0;
    let step_tol = T::lit(cfg.step_tol);
    for _ in 0..cfg.max_iter {
        let mut moved = false;
        for d in &dirs {
            let y = confine(linalg::axpy(&x, h, d));
            let fy = f(&y)?;
            if fy < fx - T::lit(4.0) * T::epsilon() * fx.abs() {
                x = y;
                fx = fy;
                moved = true;
                break;
            }
        }
        if !moved {
            h = h * T::half();
            if h < step_tol {
                return Ok(Descent { x, value: fx, converged: true });
            }
        }
    }
    Ok(Descent { x, value: fx, converged: false })
}

/// One rung of the constructive principle. Accepts `alpha` in `[0, 1]` so
/// that the rank-one breakdown can be inspected.
pub fn principle_rung<T: Scalar>(
    system: &[SetOracle<T>],
    xbar: &[T],
    alpha: T,
    gamma: T,
    shifts: &[Vec<T>],
    k: usize,
    solver: &SolverConfig,
    tol: &Tolerances<T>,
) -> Result<PrincipleCertificate<T>> {
    if !(alpha >= T::zero() && alpha <= T::one()) || !(gamma > T::zero()) {
        return Err(Error::input("alpha must lie in [0,1] and gamma must be positive"));
    }
    let r = shifts.iter().map(|a| norm(a)).fold(T::zero(), T::max);
    let radius = if alpha == T::zero() { gamma } else { gamma * r.powf(alpha) };
    let f = |x: &[T]| objective(system, shifts, xbar, alpha, gamma, x);
    let ball = (alpha == T::zero()).then_some((xbar, gamma));
    let h0 = radius * T::half();
    let mut seeds = vec![xbar.to_vec()];
    let mut rng = keyed_rng(solver.seed, &[tag("principle"), k as u64]);
    for d in unit_directions::<T>(xbar.len(), solver.extra_seeds, &mut rng) {
        seeds.push(linalg::axpy(xbar, h0, &d));
    }
    let runs = seeds
        .into_iter()
        .map(|s| pattern_search(&f, s, h0, ball, solver))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<&Descent<T>> = None;
    // Values equal up to rounding count as ties, resolved in seed order.
    for run in &runs {
        if best.map_or(true, |b| run.value < b.value - T::lit(1e-12) * b.value.abs()) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one seed");
    if !runs.iter().any(|r| r.converged) {
        return Err(Error::numeric(
            format!("minimization of d_k did not converge at rung {k}"),
            Some(best.x.iter().map(|v| v.to_f64_lossy()).collect()),
        ));
    }
    let xk = best.x.clone();
    let mut points = Vec::with_capacity(system.len());
    let mut raw = Vec::with_capacity(system.len());
    let mut nu2 = T::zero();
    for (set, a) in system.iter().zip(shifts) {
        let y = linalg::add(&xk, a);
        let w = set.project_with(&y, tol.feas)?;
        let v = linalg::sub(&y, &w);
        nu2 = nu2 + linalg::norm_sq(&v);
        points.push(w);
        raw.push(v);
    }
    let nu = nu2.sqrt();
    if nu <= tol.feas {
        return Err(Error::ExtremalityViolated { k, nu: nu.to_f64_lossy() });
    }
    let duals = raw
        .into_iter()
        .map(|v| DualVector::new(linalg::scale(&v, T::one() / nu)))
        .collect::<Result<Vec<_>>>()?;
    let mut cert = PrincipleCertificate::new(points, duals, Vec::new());
    cert.provenance = Some(RungProvenance { k, r, nu, minimizer: xk, objective: best.value, objective_at_base: f(xbar)? });
    Ok(cert)
}

/// Runs the constructive principle over the schedule and extracts a limit
/// certificate from the finest rungs. Rank `alpha >= 1` is refused.
pub fn run_exact_principle<T: Scalar>(
    system: &[SetOracle<T>],
    xbar: &[T],
    q: &RatedQuery<T>,
    sched: &TranslationSchedule<T>,
    solver: &SolverConfig,
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<PrincipleRun<T>> {
    q.validate()?;
    if q.alpha >= T::one() {
        return Err(Error::input(
            "alpha must lie in [0,1) for the constructive principle; use search_principle_certificate at rank one",
        ));
    }
    check_system(system, xbar, tol)?;
    if sched.m() != system.len() || sched.dim() != xbar.len() {
        return Err(Error::input("schedule shape does not match the set system"));
    }
    let cones = system
        .iter()
        .map(|s| limiting_cone_sample(s, xbar, ladder, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut certificates = (0..q.rung_count(sched))
        .into_par_iter()
        .map(|k| principle_rung(system, xbar, q.alpha, q.gamma, sched.shifts(k), k + 1, solver, tol))
        .collect::<Result<Vec<_>>>()?;
    for c in certificates.iter_mut() {
        c.cones = cones.clone();
        c.residuals = certificate_residuals(c);
    }
    let limit = limit_certificate(&certificates, xbar, cones, tol.angle);
    Ok(PrincipleRun { certificates, limit })
}

/// Clusters the stacked dual tuples of the last three rungs and returns the
/// renormalized centroid of the cluster holding the finest rung.
fn limit_certificate<T: Scalar>(
    certs: &[PrincipleCertificate<T>],
    xbar: &[T],
    cones: Vec<ConeSample<T>>,
    tol_angle: T,
) -> PrincipleCertificate<T> {
    let m = cones.len();
    let stacked: Vec<Vec<T>> = certs
        .iter()
        .rev()
        .take(3)
        .map(|c| c.duals.iter().flat_map(|d| d.coords().iter().copied()).collect())
        .collect();
    let clusters = cluster_directions(&stacked, tol_angle);
    let best = clusters
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.1.cmp(&b.1).then(j.cmp(i)))
        .map(|(_, c)| c.0.clone())
        .unwrap_or_default();
    let n = xbar.len();
    let duals = (0..m)
        .map(|i| DualVector::new(best[i * n..(i + 1) * n].to_vec()).unwrap_or_else(|_| DualVector::zero(n)))
        .collect();
    PrincipleCertificate::new(vec![xbar.to_vec(); m], duals, cones)
}

/// Convergence table `k, r_k, nu_k, sum_norm, unit_defect` as CSV.
pub fn convergence_csv<T: Scalar>(run: &PrincipleRun<T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io { path: "<memory>".into(), message: e.to_string() };
    w.write_record(["k", "r_k", "nu_k", "sum_norm", "unit_defect"]).map_err(io)?;
    for c in &run.certificates {
        let (k, r, nu) = c
            .provenance
            .as_ref()
            .map_or((0, f64::NAN, f64::NAN), |p| (p.k, p.r.to_f64_lossy(), p.nu.to_f64_lossy()));
        w.write_record([
            k.to_string(),
            format!("{r:e}"),
            format!("{nu:e}"),
            format!("{:e}", c.residuals.sum_norm.to_f64_lossy()),
            format!("{:e}", c.residuals.unit_defect.to_f64_lossy()),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io { path: "<memory>".into(), message: e.to_string() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Upper bound on the number of direction tuples enumerated.
    pub max_tuples: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { max_tuples: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipleSearch<T> {
    /// Smallest `|Σ u_i|` over `u_i` on sampled cone rays with `Σ |u_i|^2 = 1`.
    pub best_residual: T,
    pub vectors: Vec<Vec<T>>,
    /// Set for a single cone, where the constraint forces residual 1.
    pub degenerate: bool,
}

/// Exact minimum of `|Σ u_i|` subject to `u_i = t_i d_i`, `t_i >= 0`,
/// `d_i` a sampled direction of cone `i` and `Σ t_i² = 1`.
///
/// For a fixed direction tuple the problem is `min tᵀGt` over the
/// nonnegative part of the unit sphere with `G` the Gram matrix; its
/// minimizers are nonnegative eigenvectors of principal submatrices, which
/// are enumerated.
pub fn search_principle_certificate<T: Scalar>(cones: &[ConeSample<T>], cfg: &SearchConfig) -> Result<PrincipleSearch<T>> {
    if cones.is_empty() || cones.iter().any(|c| c.is_empty()) {
        return Err(Error::precondition("every cone sample must be nonempty"));
    }
    let m = cones.len();
    if m > 12 {
        return Err(Error::input("at most 12 cones are supported"));
    }
    let total = cones.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.directions.len()));
    if total.map_or(true, |t| t > cfg.max_tuples) {
        return Err(Error::input("too many direction tuples for exhaustive search"));
    }
    let total = total.unwrap_or(0);
    let best = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let dirs: Vec<&[T]> = cones
                .iter()
                .map(|c| {
                    let j = idx % c.directions.len();
                    idx /= c.directions.len();
                    c.directions[j].coords()
                })
                .collect();
            best_on_tuple(&dirs)
        })
        .reduce_with(|a, b| if b.0 < a.0 { b } else { a })
        .expect("nonempty enumeration");
    let vectors = best.1;
    let sum = vectors.iter().fold(vec![T::zero(); cones[0].base.len().max(vectors[0].len())], |s, v| linalg::add(&s, v));
    Ok(PrincipleSearch { best_residual: norm(&sum), vectors, degenerate: m == 1 })
}

fn best_on_tuple<T: Scalar>(dirs: &[&[T]]) -> (T, Vec<Vec<T>>) {
    let m = dirs.len();
    let mut best = (T::infinity(), Vec::new());
    for support in 1u32..(1u32 << m) {
        let idx: Vec<usize> = (0..m).filter(|i| support & (1 << i) != 0).collect();
        let gram: Vec<Vec<T>> = idx.iter().map(|&i| idx.iter().map(|&j| linalg::dot(dirs[i], dirs[j])).collect()).collect();
        let (vals, vecs) = linalg::symmetric_eigen(&gram);
        for (mu, mut v) in vals.into_iter().zip(vecs) {
            if v.iter().copied().sum::<T>() < T::zero() {
                v = linalg::scale(&v, -T::one());
            }
            if v.iter().any(|&c| c < -T::lit(1e-12)) {
                continue;
            }
            let mu = mu.max(T::zero());
            if mu < best.0 {
                let mut t = vec![T::zero(); m];
                for (&i, &c) in idx.iter().zip(&v) {
                    t[i] = c.max(T::zero());
                }
                let s = norm(&t);
                best = (mu, dirs.iter().zip(&t).map(|(d, &ti)| linalg::scale(d, ti / s)).collect());
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ScalarFunction, Sign};

    fn parabola_pair() -> Vec<SetOracle<f64>> {
        vec![
            SetOracle::hypograph(ScalarFunction::Parabola { coef: 1.0 }),
            SetOracle::epigraph(ScalarFunction::Parabola { coef: -1.0 }),
        ]
    }

    fn pushed_apart(k: usize) -> TranslationSchedule<f64> {
        TranslationSchedule::geometric(&[vec![0.0, 1.0], vec![0.0, -1.0]], 4.0, k).unwrap()
    }

    #[test]
    fn schedule_validation() {
        assert!(TranslationSchedule::<f64>::new(vec![vec![vec![0.0, 1.0]], vec![vec![0.0, 2.0]]]).is_err());
        assert!(TranslationSchedule::<f64>::new(vec![vec![vec![0.0, 0.0]]]).is_err());
        let s = pushed_apart(3);
        assert_eq!(s.radius(2), 4f64.powi(-3));
        let back: TranslationSchedule<f64> = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn alpha_bounds() {
        let mut q = RatedQuery::new(1.0, 0.5);
        assert_eq!(q.validate().unwrap_err(), Error::Input("alpha must lie in [0,1)".into()));
        q.rank_one = true;
        assert!(q.validate().is_ok());
        assert!(RatedQuery::new(-0.1, 0.5).validate().is_err());
    }

    #[test]
    fn rated_but_not_local() {
        let tol = Tolerances::default();
        let sched = pushed_apart(6);
        let rep = verify_rated_extremality(&parabola_pair(), &[0.0, 0.0], &RatedQuery::new(0.5, 0.5), &sched, &tol).unwrap();
        assert!(rep.holds());
        let rep = verify_rated_extremality(&parabola_pair(), &[0.0, 0.0], &RatedQuery::new(0.0, 0.5), &sched, &tol).unwrap();
        assert!(rep.rungs.iter().all(|o| o.witness.is_some()));
    }

    #[test]
    fn principle_on_parabolas() {
        let tol = Tolerances::default();
        let run = run_exact_principle(
            &parabola_pair(),
            &[0.0, 0.0],
            &RatedQuery::new(0.5, 0.5),
            &pushed_apart(8),
            &SolverConfig::default(),
            &RadiusLadder::default(),
            &tol,
        )
        .unwrap();
        let h = 0.5f64.sqrt();
        assert!((run.limit.duals[0].coords()[1] - h).abs() < 1e-6);
        assert!(run.limit.residuals.sum_norm < 1e-6 && run.limit.residuals.unit_defect < 1e-6);
        for c in &run.certificates {
            let p = c.provenance.as_ref().unwrap();
            assert!(p.objective <= p.objective_at_base + 1e-15);
            assert!(p.objective_at_base <= p.r * 2f64.sqrt() * (1.0 + 1e-12));
            assert!(linalg::norm(&p.minimizer) <= 0.5 * p.r.sqrt() + 1e-12);
            assert!(c.residuals.unit_defect < 1e-12);
        }
        let csv = convergence_csv(&run).unwrap();
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn halfspaces_at_rank_zero() {
        let tol = Tolerances::default();
        let sys = vec![SetOracle::halfspace(vec![0.0, 1.0], 0.0), SetOracle::halfspace(vec![0.0, -1.0], 0.0)];
        let run = run_exact_principle(
            &sys,
            &[0.0, 0.0],
            &RatedQuery::new(0.0, 0.5),
            &pushed_apart(5),
            &SolverConfig::default(),
            &RadiusLadder::default(),
            &tol,
        )
        .unwrap();
        let h = 0.5f64.sqrt();
        assert!((run.limit.duals[0].coords()[1] - h).abs() < 1e-9);
        assert!((run.limit.duals[1].coords()[1] + h).abs() < 1e-9);
    }

    #[test]
    fn intersecting_shift_is_reported() {
        let tol = Tolerances::default();
        let sys = vec![SetOracle::halfspace(vec![0.0, 1.0], 0.0), SetOracle::halfspace(vec![0.0, -1.0], 0.0)];
        let err = principle_rung(&sys, &[0.0, 0.0], 0.5, 0.5, &[vec![0.0, -0.1], vec![0.0, 0.1]], 1, &SolverConfig::default(), &tol)
            .unwrap_err();
        assert!(matches!(err, Error::ExtremalityViolated { k: 1, .. }));
        assert!(run_exact_principle(
            &sys,
            &[0.0, 0.0],
            &RatedQuery { rank_one: true, ..RatedQuery::new(1.0, 0.5) },
            &pushed_apart(2),
            &SolverConfig::default(),
            &RadiusLadder::default(),
            &tol
        )
        .is_err());
    }

    #[test]
    fn principle_search() {
        let h = 0.5f64.sqrt();
        let n1 = ConeSample::from_directions(vec![0.0, 0.0], vec![vec![-h, -h], vec![h, -h]]).unwrap();
        let n2 = ConeSample::from_directions(vec![0.0, 0.0], vec![vec![0.0, 1.0]]).unwrap();
        let s = search_principle_certificate(&[n1, n2.clone()], &SearchConfig::default()).unwrap();
        assert!((s.best_residual - (1.0 - h).sqrt()).abs() < 1e-12);
        let down = ConeSample::from_directions(vec![0.0, 0.0], vec![vec![0.0, -1.0]]).unwrap();
        let s = search_principle_certificate(&[n2, down], &SearchConfig::default()).unwrap();
        assert!(s.best_residual < 1e-12);
        assert!((s.vectors[0][1] - h).abs() < 1e-12);
        let one = ConeSample::<f64>::from_directions(vec![0.0, 0.0], vec![vec![1.0, 0.0]]).unwrap();
        let s = search_principle_certificate(&[one], &SearchConfig::default()).unwrap();
        assert!(s.degenerate && (s.best_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residual_arithmetic() {
        let d = |v: Vec<f64>| DualVector::new(v).unwrap();
        let c = PrincipleCertificate::new(vec![vec![0.0; 2]; 2], vec![d(vec![0.0, 0.7071]), d(vec![0.0, -0.7071])], vec![]);
        assert_eq!(c.residuals.sum_norm, 0.0);
        assert!(c.residuals.unit_defect < 1e-4);
        let c = PrincipleCertificate::new(vec![vec![0.0; 2]; 2], vec![d(vec![0.0, 1.0]), d(vec![0.0, 0.0])], vec![]);
        assert_eq!(c.residuals.unit_defect, 0.0);
        assert_eq!(c.residuals.sum_norm, 1.0);
    }

    #[test]
    fn tangential() {
        let tol = Tolerances::default();
        let o1 = SetOracle::hypograph(ScalarFunction::Parabola { coef: 1.0 });
        let lam = SetOracle::halfspace(vec![0.0, 1.0], 0.0);
        let cfg = TangentialConfig { cones: vec![lam.clone()], c: 1.0, p: 0.9, ladder: RadiusLadder::default() };
        assert!(tangential_rate_check(&[o1], &[0.0, 0.0], &cfg, &tol).unwrap()[0].holds);
        let cfg = TangentialConfig { cones: vec![lam.clone()], c: 1.0, p: 0.5, ladder: RadiusLadder::default() };
        assert!(tangential_rate_check(&[lam.clone()], &[0.0, 0.0], &cfg, &tol).unwrap()[0].holds);
        let o2 = SetOracle::epigraph(ScalarFunction::NegPowLog);
        let up = SetOracle::HalfplaneProduct { signs: vec![Sign::Free, Sign::Nonneg] };
        let cfg = TangentialConfig { cones: vec![up], c: 1.0, p: 0.5, ladder: RadiusLadder::default() };
        assert!(!tangential_rate_check(&[o2], &[0.0, 0.0], &cfg, &tol).unwrap()[0].holds);
        let not_cone = SetOracle::ball(vec![0.0, 0.0], 1.0);
        let cfg = TangentialConfig { cones: vec![not_cone], c: 1.0, p: 0.5, ladder: RadiusLadder::default() };
        assert!(tangential_rate_check(&[lam], &[0.0, 0.0], &cfg, &tol).is_err());
    }
}
