//! Sampled ε-normals, limiting normals and Fréchet subgradients.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ScalarFunction, SetOracle};
use crate::linalg::{self, dot, norm};
use crate::sampling::{annulus_radii, keyed_rng, tag, unit_directions};
use crate::scalar::Scalar;
use crate::tolerances::Tolerances;

/// A dual vector with its Euclidean norm cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>", bound = "T: Scalar")]
pub struct DualVector<T> {
    coords: Vec<T>,
    norm: T,
}

impl<T: Scalar> DualVector<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("dual vector coordinates must be finite"));
        }
        let norm = norm(&coords);
        Ok(Self { coords, norm })
    }

    pub fn zero(dim: usize) -> Self {
        Self { coords: vec![T::zero(); dim], norm: T::zero() }
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn norm(&self) -> T {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { coords: linalg::scale(&self.coords, s), norm: self.norm * s.abs() }
    }

    /// Unit vector in the same direction, `None` for the zero vector.
    pub fn unit(&self) -> Option<Self> {
        (self.norm > T::zero()).then(|| Self {
            coords: linalg::scale(&self.coords, T::one() / self.norm),
            norm: T::one(),
        })
    }

    pub fn into_vec(self) -> Vec<T> {
        self.coords
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for DualVector<T> {
    type Error = Error;

    fn try_from(v: Vec<T>) -> Result<Self> {
        Self::new(v)
    }
}

impl<T> From<DualVector<T>> for Vec<T> {
    fn from(d: DualVector<T>) -> Vec<T> {
        d.coords
    }
}

/// Geometric ladder of radii `rho0 * sigma^j`, `j = 0..rungs`, used to
/// discretize limits `x -> x̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusLadder<T> {
    pub rho0: T,
    pub sigma: T,
    pub rungs: usize,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl<T: Scalar> Default for RadiusLadder<T> {
    fn default() -> Self {
        Self { rho0: T::lit(0.1), sigma: T::half(), rungs: 14, samples: 512, seed: 0 }
    }
}

impl<T: Scalar> RadiusLadder<T> {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > T::zero()) || !(self.sigma > T::zero() && self.sigma < T::one()) {
            return Err(Error::input("ladder needs rho0 > 0 and sigma in (0,1)"));
        }
        if self.rungs == 0 || self.samples == 0 {
            return Err(Error::input("ladder needs at least one rung and one sample"));
        }
        if !(self.radius(self.rungs) > T::lit(1e-12)) {
            return Err(Error::input("finest ladder radius falls below 1e-12"));
        }
        Ok(())
    }

    /// Outer radius of rung `j`.
    pub fn radius(&self, j: usize) -> T {
        self.rho0 * self.sigma.powi(j as i32)
    }

    /// Number of finest rungs aggregated into limit estimates.
    pub fn window(&self) -> usize {
        (self.rungs / 4).max(3).min(self.rungs)
    }

    fn finest(&self) -> std::ops::Range<usize> {
        self.rungs - self.window()..self.rungs
    }

    /// Probe offsets `x - x̄` for rung `j` in the annulus between rungs `j+1` and `j`.
    pub fn probes(&self, dim: usize, op: &str, j: usize) -> Vec<Vec<T>> {
        let mut rng = keyed_rng(self.seed, &[tag(op), j as u64]);
        let dirs = unit_directions::<T>(dim, self.samples, &mut rng);
        let radii = annulus_radii(self.radius(j + 1), self.radius(j), self.samples, &mut rng);
        dirs.into_iter().zip(radii).map(|(d, r)| linalg::scale(&d, r)).collect()
    }
}

/// Outcome of a sampled limsup or liminf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEstimate<T> {
    /// Aggregate over the finest rungs.
    pub value: T,
    /// Per-rung supremum (or infimum), `None` where no usable sample existed.
    pub per_rung: Vec<Option<T>>,
    /// No set point other than x̄ was found near x̄.
    pub isolated: bool,
}

impl<T: Scalar> LadderEstimate<T> {
    fn from_rungs(per_rung: Vec<Option<T>>, window: std::ops::Range<usize>, sup: bool) -> Self {
        let vals: Vec<T> = per_rung[window].iter().flatten().copied().collect();
        if vals.is_empty() {
            let value = if sup { T::neg_infinity() } else { T::infinity() };
            return Self { value, per_rung, isolated: true };
        }
        let value = vals
            .into_iter()
            .fold(if sup { T::neg_infinity() } else { T::infinity() }, |a, b| if sup { a.max(b) } else { a.min(b) });
        Self { value, per_rung, isolated: false }
    }
}

/// Set points near `x̄` found at rung `j`: probes inside the set and
/// projections of probes outside it.
fn set_points_near<T: Scalar>(
    set: &SetOracle<T>,
    xbar: &[T],
    ladder: &RadiusLadder<T>,
    op: &str,
    j: usize,
    tol: &Tolerances<T>,
) -> Result<Vec<Vec<T>>> {
    let outer = ladder.radius(j);
    let mut out = Vec::new();
    for off in ladder.probes(xbar.len(), op, j) {
        let p = linalg::add(xbar, &off);
        let w = if set.contains_unchecked(&p, tol.feas) { p } else { set.project_with(&p, tol.feas)? };
        let d = linalg::distance(&w, xbar);
        if d > T::zero() && d <= outer {
            out.push(w);
        }
    }
    Ok(out)
}

fn require_member<T: Scalar>(set: &SetOracle<T>, xbar: &[T], tol: &Tolerances<T>) -> Result<()> {
    if !set.contains(xbar, tol.feas)? {
        return Err(Error::precondition("base point is not in the set"));
    }
    Ok(())
}

/// Estimate of `limsup_{x -> x̄, x in set} <x*, x - x̄> / |x - x̄|`.
///
/// `x*` is an ε-normal when the value is at most `ε + tol.res`. An isolated
/// base point yields `-inf` with the `isolated` flag set.
pub fn eps_normal_residual<T: Scalar>(
    set: &SetOracle<T>,
    xbar: &[T],
    xstar: &DualVector<T>,
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<LadderEstimate<T>> {
    Ok(eps_normal_residuals(set, xbar, std::slice::from_ref(xstar), ladder, tol)?.remove(0))
}

/// [`eps_normal_residual`] for several duals at once; the set is sampled
/// a single time and every estimate equals the one-at-a-time value.
pub fn eps_normal_residuals<T: Scalar>(
    set: &SetOracle<T>,
    xbar: &[T],
    xstars: &[DualVector<T>],
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<Vec<LadderEstimate<T>>> {
    ladder.validate()?;
    require_member(set, xbar, tol)?;
    if let Some(x) = xstars.iter().find(|x| x.dim() != xbar.len()) {
        return Err(Error::DimensionMismatch { expected: xbar.len(), found: x.dim() });
    }
    let rays: Vec<Vec<(Vec<T>, T)>> = (0..ladder.rungs)
        .into_par_iter()
        .map(|j| {
            let pts = set_points_near(set, xbar, ladder, "eps_normal", j, tol)?;
            Ok(pts
                .iter()
                .map(|w| {
                    let v = linalg::sub(w, xbar);
                    let n = norm(&v);
                    (v, n)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(xstars
        .iter()
        .map(|xs| {
            let per_rung = rays
                .iter()
                .map(|u| u.iter().map(|(v, n)| dot(xs.coords(), v) / *n).fold(None, |acc: Option<T>, r| Some(acc.map_or(r, |a| a.max(r)))))
                .collect();
            LadderEstimate::from_rungs(per_rung, ladder.finest(), true)
        })
        .collect())
}

/// Sampled directions of a limiting normal cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ConeSample<T> {
    pub base: Vec<T>,
    /// Unit generators, sorted lexicographically.
    pub directions: Vec<DualVector<T>>,
    /// Outer radii of the rungs the directions were drawn from.
    pub radii: Vec<T>,
}

impl<T: Scalar> ConeSample<T> {
    pub fn from_directions(base: Vec<T>, dirs: Vec<Vec<T>>) -> Result<Self> {
        let mut directions = Vec::with_capacity(dirs.len());
        for d in dirs {
            let v = DualVector::new(d)?;
            directions.push(v.unit().ok_or_else(|| Error::input("cone generator must be nonzero"))?);
        }
        Ok(Self { base, directions, radii: Vec::new() })
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Smallest angle between `v` and a stored direction; `pi` for an empty
    /// sample and `0` for `v = 0`.
    pub fn angular_gap(&self, v: &[T]) -> T {
        if norm(v) == T::zero() {
            return T::zero();
        }
        self.directions
            .iter()
            .map(|d| linalg::angle_between(d.coords(), v))
            .fold(T::pi(), T::min)
    }
}

/// Greedy angular clustering; returns normalized cluster means and sizes.
pub(crate) fn cluster_directions<T: Scalar>(dirs: &[Vec<T>], tol_angle: T) -> Vec<(Vec<T>, usize)> {
    let mut sums: Vec<(Vec<T>, usize)> = Vec::new();
    for d in dirs {
        let hit = sums.iter_mut().find(|(s, _)| linalg::angle_between(s, d) <= tol_angle);
        match hit {
            Some((s, c)) => {
                *s = linalg::add(s, d);
                *c += 1;
            }
            None => sums.push((d.clone(), 1)),
        }
    }
    sums.into_iter()
        .map(|(s, c)| {
            let n = norm(&s);
            (linalg::scale(&s, T::one() / n), c)
        })
        .collect()
}

/// Normalized `x - Π(x)` for off-set probes at rung `j`.
fn projection_directions<T: Scalar>(
    set: &SetOracle<T>,
    xbar: &[T],
    ladder: &RadiusLadder<T>,
    j: usize,
    tol: &Tolerances<T>,
) -> Result<Vec<Vec<T>>> {
    let mut out = Vec::new();
    for off in ladder.probes(xbar.len(), "limiting_cone", j) {
        let p = linalg::add(xbar, &off);
        if set.contains_unchecked(&p, tol.feas) {
            continue;
        }
        let w = set.project_with(&p, tol.feas)?;
        let v = linalg::sub(&p, &w);
        let n = norm(&v);
        if n > T::zero() {
            out.push(linalg::scale(&v, T::one() / n));
        }
    }
    Ok(out)
}

/// Limiting normal cone at `x̄` sampled through the projector: cluster
/// representatives at the finest rung that recur at the rung before it.
pub fn limiting_cone_sample<T: Scalar>(
    set: &SetOracle<T>,
    xbar: &[T],
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<ConeSample<T>> {
    ladder.validate()?;
    require_member(set, xbar, tol)?;
    let last = ladder.rungs - 1;
    let rungs: Vec<usize> = if last == 0 { vec![0] } else { vec![last - 1, last] };
    let clusters = rungs
        .par_iter()
        .map(|&j| Ok(cluster_directions(&projection_directions(set, xbar, ladder, j, tol)?, tol.angle)))
        .collect::<Result<Vec<_>>>()?;
    let finest = clusters.last().cloned().unwrap_or_default();
    let previous = &clusters[0];
    let mut directions: Vec<Vec<T>> = finest
        .into_iter()
        .filter(|(d, _)| previous.iter().any(|(e, _)| linalg::angle_between(d, e) <= tol.angle))
        .map(|(d, _)| d)
        .collect();
    directions.sort_by(|a, b| linalg::lex_cmp(a, b));
    Ok(ConeSample {
        base: xbar.to_vec(),
        directions: directions.into_iter().map(|d| DualVector::new(d)).collect::<Result<_>>()?,
        radii: rungs.iter().map(|&j| ladder.radius(j)).collect(),
    })
}

/// Whether `v` lies within `tol_angle` of the sampled cone. The zero vector
/// always belongs.
pub fn cone_membership<T: Scalar>(cone: &ConeSample<T>, v: &[T], tol_angle: T) -> bool {
    if norm(v) == T::zero() {
        return true;
    }
    !cone.is_empty() && cone.angular_gap(v) <= tol_angle
}

/// Extended-real function on `R^n` probed by the subdifferential routines.
pub trait RealFunction<T>: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[T]) -> T;
}

impl<T: Scalar> RealFunction<T> for ScalarFunction<T> {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[T]) -> T {
        self.evaluate(x[0])
    }
}

/// Adapter turning a closure into a [`RealFunction`].
pub struct FnObjective<F> {
    pub dim: usize,
    pub f: F,
}

impl<T, F: Fn(&[T]) -> T + Sync> RealFunction<T> for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[T]) -> T {
        (self.f)(x)
    }
}

/// Estimate of `liminf_{x -> x̄} (f(x) - f(x̄) - <x*, x - x̄>) / |x - x̄|`.
/// `x*` is accepted as a Fréchet subgradient when the value is at least `-tol.res`.
pub fn frechet_subdiff_residual<T: Scalar>(
    f: &dyn RealFunction<T>,
    xbar: &[T],
    xstar: &DualVector<T>,
    ladder: &RadiusLadder<T>,
) -> Result<LadderEstimate<T>> {
    ladder.validate()?;
    if xbar.len() != f.dim() || xstar.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: xbar.len().max(xstar.dim()) });
    }
    let f0 = f.value(xbar);
    if !f0.is_finite() {
        return Err(Error::precondition("function is not finite at the base point"));
    }
    let per_rung: Vec<Option<T>> = (0..ladder.rungs)
        .into_par_iter()
        .map(|j| {
            ladder
                .probes(xbar.len(), "frechet_subdiff", j)
                .iter()
                .filter_map(|off| {
                    let x = linalg::add(xbar, off);
                    let fx = f.value(&x);
                    let q = (fx - f0 - dot(xstar.coords(), off)) / norm(off);
                    (!q.is_nan()).then_some(q)
                })
                .fold(None, |acc: Option<T>, q| Some(acc.map_or(q, |a| a.min(q))))
        })
        .collect();
    Ok(LadderEstimate::from_rungs(per_rung, ladder.finest(), false))
}

/// Fermat rule: `0` is a Fréchet subgradient at `x̄`.
pub fn fermat_check<T: Scalar>(f: &dyn RealFunction<T>, xbar: &[T], ladder: &RadiusLadder<T>, tol: &Tolerances<T>) -> Result<bool> {
    let r = frechet_subdiff_residual(f, xbar, &DualVector::zero(xbar.len()), ladder)?;
    Ok(r.value >= -tol.res)
}

/// Unit Fréchet normals at a set point `x`: the closed-form generators when
/// the family has them, otherwise sampled projection directions whose
/// ε-normal residual is accepted.
pub fn frechet_normal_directions<T: Scalar>(
    set: &SetOracle<T>,
    x: &[T],
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<Vec<Vec<T>>> {
    if let Some(g) = set.frechet_normals(x, tol.feas.max(T::lit(1e-9))) {
        return Ok(g);
    }
    let cone = limiting_cone_sample(set, x, ladder, tol)?;
    let mut out = Vec::new();
    for d in cone.directions {
        let r = eps_normal_residual(set, x, &d, ladder, tol)?;
        if r.value <= tol.res {
            out.push(d.into_vec());
        }
    }
    Ok(out)
}

/// Distance from `v` to the Fréchet normal cone of `set` at `x`, taken as
/// the conic hull of [`frechet_normal_directions`]. The flag tells whether
/// closed-form generators were used.
pub fn frechet_cone_distance<T: Scalar>(
    set: &SetOracle<T>,
    x: &[T],
    v: &[T],
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<(T, bool)> {
    let analytic = set.frechet_normals(x, tol.feas.max(T::lit(1e-9))).is_some();
    let gens = frechet_normal_directions(set, x, ladder, tol)?;
    if gens.is_empty() {
        return Ok((norm(v), analytic));
    }
    Ok((linalg::nnls(&gens, v).1, analytic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sign;

    fn ladder(j: usize) -> RadiusLadder<f64> {
        RadiusLadder { rungs: j, ..RadiusLadder::default() }
    }

    fn dv(v: &[f64]) -> DualVector<f64> {
        DualVector::new(v.to_vec()).unwrap()
    }

    fn rm() -> SetOracle<f64> {
        SetOracle::HalfplaneProduct { signs: vec![Sign::Free, Sign::Nonpos] }
    }

    #[test]
    fn eps_normals() {
        let tol = Tolerances::default();
        let o1 = SetOracle::hypograph(ScalarFunction::Parabola { coef: 1.0 });
        let r = eps_normal_residual(&o1, &[0.0, 0.0], &dv(&[0.0, 1.0]), &ladder(12), &tol).unwrap();
        assert!(r.value <= 0.01, "{}", r.value);
        let r = eps_normal_residual(&o1, &[0.0, 0.0], &dv(&[0.0, 0.0]), &ladder(12), &tol).unwrap();
        assert!(r.value <= 0.0);
        let r = eps_normal_residual(&rm(), &[0.0, 0.0], &dv(&[1.0, 0.0]), &ladder(12), &tol).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!(matches!(
            eps_normal_residual(&rm(), &[0.0, 1.0], &dv(&[1.0, 0.0]), &ladder(12), &tol),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn isolated_point() {
        let tol = Tolerances::default();
        let s = SetOracle::ball(vec![0.0, 0.0], 0.0);
        let r = eps_normal_residual(&s, &[0.0, 0.0], &dv(&[1.0, 0.0]), &ladder(6), &tol).unwrap();
        assert!(r.isolated && r.value == f64::NEG_INFINITY);
    }

    #[test]
    fn limiting_cones() {
        let tol = Tolerances::default();
        let c = limiting_cone_sample(&rm(), &[0.0, 0.0], &ladder(14), &tol).unwrap();
        assert_eq!(c.directions.len(), 1);
        assert!(c.angular_gap(&[0.0, 1.0]) < 1e-12);
        let o1 = SetOracle::hypograph(ScalarFunction::Parabola { coef: 1.0 });
        let c = limiting_cone_sample(&o1, &[0.0, 0.0], &ladder(14), &tol).unwrap();
        assert_eq!(c.directions.len(), 1);
        assert!(c.angular_gap(&[0.0, 1.0]) < 0.02);
        let c = limiting_cone_sample(&SetOracle::NegNormEpigraph, &[0.0, 0.0], &ladder(14), &tol).unwrap();
        assert_eq!(c.directions.len(), 2);
        let h = 0.5f64.sqrt();
        assert!(c.angular_gap(&[-h, -h]) < 1e-9 && c.angular_gap(&[h, -h]) < 1e-9);
        assert!(!cone_membership(&c, &[0.0, -1.0], 0.01));
        let interior = limiting_cone_sample(&rm(), &[0.0, -1.0], &ladder(14), &tol).unwrap();
        assert!(interior.is_empty());
        assert!(!cone_membership(&interior, &[1.0, 0.0], 0.02));
    }

    #[test]
    fn membership_examples() {
        let c = ConeSample::from_directions(vec![0.0, 0.0], vec![vec![0.0, 1.0]]).unwrap();
        assert!(cone_membership(&c, &[0.0, 5.0], 0.01));
        assert!(!cone_membership(&c, &[1.0, 0.0], 0.01));
        assert!(cone_membership(&c, &[0.0, 0.0], 0.01));
    }

    #[test]
    fn subgradients() {
        let tol = Tolerances::default();
        let l = ladder(14);
        let sq = FnObjective { dim: 2, f: |x: &[f64]| x[0] * x[0] + x[1] * x[1] };
        assert!(fermat_check(&sq, &[0.0, 0.0], &l, &tol).unwrap());
        let abs = FnObjective { dim: 1, f: |x: &[f64]| x[0].abs() };
        let r = frechet_subdiff_residual(&abs, &[0.0], &dv(&[0.5]), &l).unwrap();
        assert!(r.value >= -tol.res);
        let r = frechet_subdiff_residual(&abs, &[0.0], &dv(&[2.0]), &l).unwrap();
        assert!((r.value + 1.0).abs() < 1e-12);
        let lin = FnObjective { dim: 2, f: |x: &[f64]| x[0] - 2.0 * x[1] };
        assert!(!fermat_check(&lin, &[0.0, 0.0], &l, &tol).unwrap());
        let negn = FnObjective { dim: 2, f: |x: &[f64]| -linalg::norm(x) };
        assert!(!fermat_check(&negn, &[0.0, 0.0], &l, &tol).unwrap());
        let inf = FnObjective { dim: 1, f: |_: &[f64]| f64::INFINITY };
        assert!(frechet_subdiff_residual(&inf, &[0.0], &dv(&[0.0]), &l).is_err());
    }
}
