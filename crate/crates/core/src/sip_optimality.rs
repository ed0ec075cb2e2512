//! Necessary optimality conditions for programs with countably many
//! geometric constraints, in upper- and lower-subdifferential form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::IndexedFamily;
use crate::intersection_calculus::{limiting_rnormal_representation_check, MatchingConfig};
use crate::linalg::{self, norm};
use crate::normal_cones::{frechet_subdiff_residual, DualVector, RadiusLadder, RealFunction};
use crate::scalar::Scalar;
use crate::tolerances::Tolerances;

/// Active-piece tolerance for max-affine objectives.
const ACTIVE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinePiece<T> {
    pub slope: Vec<T>,
    pub offset: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "objective", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveOracle<T> {
    /// `<c, x>`
    Linear { c: Vec<T> },
    /// `coef |x - center|²`
    Quadratic { coef: T, center: Vec<T> },
    /// `max_j <a_j, x> + b_j`
    MaxAffine { pieces: Vec<AffinePiece<T>> },
    /// `|x|`, of dimension `dim`.
    Norm { dim: usize },
    /// `-φ`
    Neg { inner: Box<ObjectiveOracle<T>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Smooth,
    ConvexMax,
    LipschitzSampled,
}

impl<T: Scalar> ObjectiveOracle<T> {
    pub fn neg(self) -> Self {
        match self {
            ObjectiveOracle::Neg { inner } => *inner,
            other => ObjectiveOracle::Neg { inner: Box::new(other) },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ObjectiveOracle::Linear { c } => c.len(),
            ObjectiveOracle::Quadratic { center, .. } => center.len(),
            ObjectiveOracle::MaxAffine { pieces } => pieces.first().map_or(0, |p| p.slope.len()),
            ObjectiveOracle::Norm { dim } => *dim,
            ObjectiveOracle::Neg { inner } => inner.dim(),
        }
    }

    pub fn kind(&self) -> ObjectiveKind {
        match self {
            ObjectiveOracle::Linear { .. } | ObjectiveOracle::Quadratic { .. } => ObjectiveKind::Smooth,
            ObjectiveOracle::MaxAffine { .. } => ObjectiveKind::ConvexMax,
            ObjectiveOracle::Norm { .. } => ObjectiveKind::LipschitzSampled,
            ObjectiveOracle::Neg { inner } => match inner.kind() {
                ObjectiveKind::Smooth => ObjectiveKind::Smooth,
                _ => ObjectiveKind::LipschitzSampled,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim == 0 {
            return Err(Error::input("objective has dimension zero"));
        }
        match self {
            ObjectiveOracle::MaxAffine { pieces } => {
                if pieces.iter().any(|p| p.slope.len() != dim || !p.offset.is_finite() || p.slope.iter().any(|v| !v.is_finite())) {
                    return Err(Error::input("affine pieces must share a finite dimension"));
                }
                Ok(())
            }
            ObjectiveOracle::Neg { inner } => inner.validate(),
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        match self {
            ObjectiveOracle::Linear { c } => linalg::dot(c, x),
            ObjectiveOracle::Quadratic { coef, center } => *coef * linalg::norm_sq(&linalg::sub(x, center)),
            ObjectiveOracle::MaxAffine { pieces } => pieces
                .iter()
                .map(|p| linalg::dot(&p.slope, x) + p.offset)
                .fold(T::neg_infinity(), T::max),
            ObjectiveOracle::Norm { .. } => norm(x),
            ObjectiveOracle::Neg { inner } => -inner.value(x),
        }
    }

    /// Gradient where the function is differentiable.
    pub fn gradient(&self, x: &[T]) -> Option<Vec<T>> {
        match self {
            ObjectiveOracle::Linear { c } => Some(c.clone()),
            ObjectiveOracle::Quadratic { coef, center } => Some(linalg::scale(&linalg::sub(x, center), T::two() * *coef)),
            ObjectiveOracle::MaxAffine { pieces } => {
                let act = active_slopes(pieces, x, T::lit(1e-12));
                let first = act.first()?;
                act.iter().all(|s| s == first).then(|| first.clone())
            }
            ObjectiveOracle::Norm { .. } => {
                let n = norm(x);
                (n > T::zero()).then(|| linalg::scale(x, T::one() / n))
            }
            ObjectiveOracle::Neg { inner } => inner.gradient(x).map(|g| linalg::scale(&g, -T::one())),
        }
    }
}

impl<T: Scalar> RealFunction<T> for ObjectiveOracle<T> {
    fn dim(&self) -> usize {
        ObjectiveOracle::dim(self)
    }

    fn value(&self, x: &[T]) -> T {
        ObjectiveOracle::value(self, x)
    }
}

fn active_slopes<T: Scalar>(pieces: &[AffinePiece<T>], x: &[T], tol: T) -> Vec<Vec<T>> {
    let vals: Vec<T> = pieces.iter().map(|p| linalg::dot(&p.slope, x) + p.offset).collect();
    let top = vals.iter().copied().fold(T::neg_infinity(), T::max);
    let scale = T::one().max(top.abs());
    pieces.iter().zip(&vals).filter(|(_, &v)| top - v <= tol * scale).map(|(p, _)| p.slope.clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SubdiffSample<T> {
    pub vectors: Vec<DualVector<T>>,
    /// Set when the sample is empty, saying why.
    pub diagnostic: Option<String>,
}

impl<T: Scalar> SubdiffSample<T> {
    fn from_vectors(vectors: Vec<Vec<T>>, empty_reason: &str) -> Result<Self> {
        let diagnostic = vectors.is_empty().then(|| empty_reason.to_string());
        Ok(Self { vectors: vectors.into_iter().map(DualVector::new).collect::<Result<_>>()?, diagnostic })
    }
}

/// Greedy clustering of vectors within `radius`; returns cluster means.
fn cluster_vectors<T: Scalar>(vs: &[Vec<T>], radius: T) -> Vec<Vec<T>> {
    let mut acc: Vec<(Vec<T>, Vec<T>, usize)> = Vec::new();
    for v in vs {
        match acc.iter_mut().find(|(first, _, _)| linalg::distance(first, v) <= radius) {
            Some((_, sum, n)) => {
                *sum = linalg::add(sum, v);
                *n += 1;
            }
            None => acc.push((v.clone(), v.clone(), 1)),
        }
    }
    acc.into_iter().map(|(_, s, n)| linalg::scale(&s, T::one() / T::from_usize_lossy(n))).collect()
}

/// Limits of gradients at sampled points near `x̄`: clusters at the finest
/// rung that recur at the previous one.
fn sampled_gradient_limits<T: Scalar>(obj: &ObjectiveOracle<T>, xbar: &[T], ladder: &RadiusLadder<T>, radius: T) -> Vec<Vec<T>> {
    let grads = |j: usize| -> Vec<Vec<T>> {
        ladder
            .probes(xbar.len(), "subdiff", j)
            .iter()
            .filter_map(|off| obj.gradient(&linalg::add(xbar, off)))
            .collect()
    };
    let fine = cluster_vectors(&grads(ladder.rungs - 1), radius);
    if ladder.rungs < 2 {
        return fine;
    }
    let prev = cluster_vectors(&grads(ladder.rungs - 2), radius);
    fine.into_iter().filter(|c| prev.iter().any(|p| linalg::distance(p, c) <= T::two() * radius)).collect()
}

/// Sample of the limiting subdifferential `∂φ(x̄)`: the gradient for smooth
/// objectives, extreme active slopes for max-affine ones, otherwise limits
/// of nearby gradients together with accepted Fréchet subgradients at `x̄`.
pub fn subdiff_sample<T: Scalar>(obj: &ObjectiveOracle<T>, xbar: &[T], ladder: &RadiusLadder<T>, tol: &Tolerances<T>) -> Result<SubdiffSample<T>> {
    obj.validate()?;
    ladder.validate()?;
    if xbar.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), found: xbar.len() });
    }
    if !obj.value(xbar).is_finite() {
        return Err(Error::precondition("objective is not finite at the base point"));
    }
    match (obj.kind(), obj) {
        (ObjectiveKind::Smooth, _) => SubdiffSample::from_vectors(obj.gradient(xbar).into_iter().collect(), "no gradient"),
        (ObjectiveKind::ConvexMax, ObjectiveOracle::MaxAffine { pieces }) => {
            let mut act = active_slopes(pieces, xbar, T::lit(ACTIVE_TOL));
            act.sort_by(|a, b| linalg::lex_cmp(a, b));
            act.dedup();
            let extreme: Vec<Vec<T>> = (0..act.len())
                .filter(|&i| {
                    let others: Vec<Vec<T>> = act.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v.clone()).collect();
                    others.is_empty() || linalg::distance_to_hull(&act[i], &others) > T::lit(1e-12)
                })
                .map(|i| act[i].clone())
                .collect();
            SubdiffSample::from_vectors(extreme, "no active piece")
        }
        _ => {
            let mut out = sampled_gradient_limits(obj, xbar, ladder, tol.angle);
            for v in frechet_candidates(obj, xbar, &out, ladder, tol)? {
                if out.iter().all(|o| linalg::distance(o, &v) > tol.angle) {
                    out.push(v);
                }
            }
            SubdiffSample::from_vectors(out, "no sampled gradients or Fréchet subgradients")
        }
    }
}

/// Candidates `0`, sampled limits and their mean, kept when accepted as
/// Fréchet subgradients at `x̄`.
fn frechet_candidates<T: Scalar>(
    obj: &ObjectiveOracle<T>,
    xbar: &[T],
    limits: &[Vec<T>],
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<Vec<Vec<T>>> {
    let mut cands = vec![vec![T::zero(); xbar.len()]];
    cands.extend(limits.iter().cloned());
    if !limits.is_empty() {
        let sum = limits.iter().fold(vec![T::zero(); xbar.len()], |s, v| linalg::add(&s, v));
        cands.push(linalg::scale(&sum, T::one() / T::from_usize_lossy(limits.len())));
    }
    let mut out = Vec::new();
    for c in cands {
        let r = frechet_subdiff_residual(obj, xbar, &DualVector::new(c.clone())?, ladder)?;
        if r.value >= -tol.res {
            out.push(c);
        }
    }
    Ok(out)
}

/// Sample of the Fréchet subdifferential `∂̂φ(x̄)`.
fn frechet_subdiff_sample<T: Scalar>(obj: &ObjectiveOracle<T>, xbar: &[T], ladder: &RadiusLadder<T>, tol: &Tolerances<T>) -> Result<Vec<Vec<T>>> {
    if obj.kind() == ObjectiveKind::Smooth {
        return Ok(obj.gradient(xbar).into_iter().collect());
    }
    let limits = subdiff_sample(obj, xbar, ladder, tol)?;
    let limits: Vec<Vec<T>> = limits.vectors.into_iter().map(DualVector::into_vec).collect();
    frechet_candidates(obj, xbar, &limits, ladder, tol)
}

/// Sample of the upper subdifferential `∂̂⁺φ(x̄) = -∂̂(-φ)(x̄)`.
pub fn upper_subdiff_sample<T: Scalar>(obj: &ObjectiveOracle<T>, xbar: &[T], ladder: &RadiusLadder<T>, tol: &Tolerances<T>) -> Result<SubdiffSample<T>> {
    obj.validate()?;
    if xbar.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), found: xbar.len() });
    }
    let neg = obj.clone().neg();
    let vs = frechet_subdiff_sample(&neg, xbar, ladder, tol)?;
    SubdiffSample::from_vectors(
        vs.into_iter().map(|v| linalg::scale(&v, -T::one())).collect(),
        "upper subdifferential is empty",
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SIPProblem<T> {
    pub objective: ObjectiveOracle<T>,
    /// Constraint sets; the family base point is the candidate `x̄`.
    pub constraints: IndexedFamily<T>,
    /// The approximate qualification condition is assumed, not verified.
    #[serde(default)]
    pub aqc_assumed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementCheck<T> {
    /// Vector whose representation was tested.
    pub target: Vec<T>,
    /// Representation distance per `ε` of the ladder.
    pub distances: Vec<T>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport<T> {
    pub verdict: Verdict,
    pub eps: Vec<T>,
    pub elements: Vec<ElementCheck<T>>,
    pub aqc_assumed: bool,
    pub diagnostic: Option<String>,
}

fn representation_ladder<T: Scalar>(
    target: &[T],
    p: &SIPProblem<T>,
    eps: &[T],
    cfg: &MatchingConfig,
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<ElementCheck<T>> {
    let v = DualVector::new(target.to_vec())?;
    let mut distances = Vec::with_capacity(eps.len());
    let mut pass = true;
    for &e in eps {
        let rep = limiting_rnormal_representation_check(&v, &p.constraints, e, cfg, ladder, tol)?;
        distances.push(rep.distance);
        pass &= rep.pass;
    }
    Ok(ElementCheck { target: target.to_vec(), distances, pass })
}

fn check_inputs<T: Scalar>(p: &SIPProblem<T>, eps: &[T], tol: &Tolerances<T>) -> Result<()> {
    p.objective.validate()?;
    p.constraints.validate()?;
    if p.objective.dim() != p.constraints.dim() {
        return Err(Error::DimensionMismatch { expected: p.constraints.dim(), found: p.objective.dim() });
    }
    if eps.is_empty() || eps.iter().any(|&e| !(e > T::zero())) {
        return Err(Error::input("eps ladder must be nonempty and positive"));
    }
    let probe = p.constraints.finite_len().unwrap_or(16).max(1);
    for i in 1..=probe {
        if !p.constraints.set(i)?.contains(&p.constraints.base, tol.feas)? {
            return Err(Error::precondition(format!("candidate is not feasible for constraint {i}")));
        }
    }
    Ok(())
}

/// Upper-subdifferential condition: every `u in -∂̂⁺φ(x̄)` is within `ε` of
/// sums of Fréchet normals to the constraints near `x̄`, for each `ε`.
pub fn check_upper_condition<T: Scalar>(
    p: &SIPProblem<T>,
    eps: &[T],
    cfg: &MatchingConfig,
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<ConditionReport<T>> {
    check_inputs(p, eps, tol)?;
    let up = upper_subdiff_sample(&p.objective, &p.constraints.base, ladder, tol)?;
    if up.vectors.is_empty() {
        return Ok(ConditionReport { verdict: Verdict::Vacuous, eps: eps.to_vec(), elements: Vec::new(), aqc_assumed: p.aqc_assumed, diagnostic: up.diagnostic });
    }
    let elements = up
        .vectors
        .iter()
        .map(|u| representation_ladder(&linalg::scale(u.coords(), -T::one()), p, eps, cfg, ladder, tol))
        .collect::<Result<Vec<_>>>()?;
    let verdict = if elements.iter().all(|e| e.pass) { Verdict::Pass } else { Verdict::Fail };
    Ok(ConditionReport { verdict, eps: eps.to_vec(), elements, aqc_assumed: p.aqc_assumed, diagnostic: None })
}

/// Lower-subdifferential condition: some `v in ∂φ(x̄)` has `-v` within `ε`
/// of sums of Fréchet normals, for each `ε`.
pub fn check_lower_condition<T: Scalar>(
    p: &SIPProblem<T>,
    eps: &[T],
    cfg: &MatchingConfig,
    ladder: &RadiusLadder<T>,
    tol: &Tolerances<T>,
) -> Result<ConditionReport<T>> {
    check_inputs(p, eps, tol)?;
    let sub = subdiff_sample(&p.objective, &p.constraints.base, ladder, tol)?;
    if sub.vectors.is_empty() {
        return Ok(ConditionReport {
            verdict: Verdict::Inconclusive,
            eps: eps.to_vec(),
            elements: Vec::new(),
            aqc_assumed: p.aqc_assumed,
            diagnostic: sub.diagnostic,
        });
    }
    let mut order: Vec<&DualVector<T>> = sub.vectors.iter().collect();
    order.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(std::cmp::Ordering::Equal).then(linalg::lex_cmp(a.coords(), b.coords())));
    let mut elements = Vec::new();
    for v in order {
        let e = representation_ladder(&linalg::scale(v.coords(), -T::one()), p, eps, cfg, ladder, tol)?;
        let pass = e.pass;
        elements.push(e);
        if pass {
            return Ok(ConditionReport { verdict: Verdict::Pass, eps: eps.to_vec(), elements, aqc_assumed: p.aqc_assumed, diagnostic: None });
        }
    }
    Ok(ConditionReport { verdict: Verdict::Fail, eps: eps.to_vec(), elements, aqc_assumed: p.aqc_assumed, diagnostic: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{SetOracle, Sign};

    fn sorted(s: &SubdiffSample<f64>) -> Vec<Vec<f64>> {
        let mut v: Vec<Vec<f64>> = s.vectors.iter().map(|d| d.coords().to_vec()).collect();
        v.sort_by(|a, b| linalg::lex_cmp(a, b));
        v
    }

    fn abs1() -> ObjectiveOracle<f64> {
        ObjectiveOracle::MaxAffine {
            pieces: vec![AffinePiece { slope: vec![1.0, 0.0], offset: 0.0 }, AffinePiece { slope: vec![-1.0, 0.0], offset: 0.0 }],
        }
    }

    fn problem(obj: ObjectiveOracle<f64>, signs: Vec<Sign>) -> SIPProblem<f64> {
        SIPProblem { objective: obj, constraints: IndexedFamily::explicit(vec![SetOracle::HalfplaneProduct { signs }], vec![0.0, 0.0]), aqc_assumed: true }
    }

    #[test]
    fn subdifferentials() {
        let tol = Tolerances::default();
        let ladder = RadiusLadder::default();
        let q = ObjectiveOracle::Quadratic { coef: 1.0, center: vec![0.0, 0.0] };
        assert_eq!(sorted(&subdiff_sample(&q, &[1.0, 0.0], &ladder, &tol).unwrap()), vec![vec![2.0, 0.0]]);
        assert_eq!(sorted(&subdiff_sample(&abs1(), &[0.0, 0.0], &ladder, &tol).unwrap()), vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        let sum = ObjectiveOracle::MaxAffine {
            pieces: vec![AffinePiece { slope: vec![1.0, 1.0], offset: 0.0 }, AffinePiece { slope: vec![-1.0, 1.0], offset: 0.0 }],
        };
        assert_eq!(sorted(&subdiff_sample(&sum, &[0.0, 0.0], &ladder, &tol).unwrap()), vec![vec![-1.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn upper_subdifferentials() {
        let tol = Tolerances::default();
        let ladder = RadiusLadder::default();
        let nq = ObjectiveOracle::Quadratic { coef: -1.0, center: vec![0.0, 0.0] };
        assert_eq!(sorted(&upper_subdiff_sample(&nq, &[0.0, 0.0], &ladder, &tol).unwrap()), vec![vec![0.0, 0.0]]);
        let lin = ObjectiveOracle::Linear { c: vec![1.0, -2.0] };
        assert_eq!(sorted(&upper_subdiff_sample(&lin, &[0.3, 0.0], &ladder, &tol).unwrap()), vec![vec![1.0, -2.0]]);
        let e = upper_subdiff_sample(&abs1(), &[0.0, 0.0], &ladder, &tol).unwrap();
        assert!(e.vectors.is_empty() && e.diagnostic.is_some());
    }

    #[test]
    fn conditions() {
        let tol = Tolerances::default();
        let ladder = RadiusLadder::default();
        let cfg = MatchingConfig::default();
        let eps = [0.1, 0.05, 0.02];
        let x2 = ObjectiveOracle::Linear { c: vec![0.0, 1.0] };
        let p = problem(x2.clone(), vec![Sign::Free, Sign::Nonneg]);
        assert_eq!(check_upper_condition(&p, &eps, &cfg, &ladder, &tol).unwrap().verdict, Verdict::Pass);
        assert_eq!(check_lower_condition(&p, &eps, &cfg, &ladder, &tol).unwrap().verdict, Verdict::Pass);
        let p = problem(ObjectiveOracle::Norm { dim: 2 }, vec![Sign::Free, Sign::Nonneg]);
        assert_eq!(check_lower_condition(&p, &eps, &cfg, &ladder, &tol).unwrap().verdict, Verdict::Pass);
        let p = problem(x2, vec![Sign::Free, Sign::Nonpos]);
        assert_eq!(check_lower_condition(&p, &eps, &cfg, &ladder, &tol).unwrap().verdict, Verdict::Fail);
        let p = problem(abs1(), vec![Sign::Free, Sign::Nonneg]);
        assert_eq!(check_upper_condition(&p, &eps, &cfg, &ladder, &tol).unwrap().verdict, Verdict::Vacuous);
    }

    #[test]
    fn km_family_conditions() {
        let tol = Tolerances::default();
        let ladder = RadiusLadder::default();
        let cfg = MatchingConfig::default();
        let eps = [0.1, 0.05];
        let fam = IndexedFamily::km_parabolas(4.0);
        let bad = SIPProblem { objective: ObjectiveOracle::Linear { c: vec![1.0, 1.0] }, constraints: fam.clone(), aqc_assumed: true };
        let rep = check_upper_condition(&bad, &eps, &cfg, &ladder, &tol).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep.elements[0].distances.iter().all(|&d| d >= 1.0 - 1e-9));
        let good = SIPProblem { objective: ObjectiveOracle::Linear { c: vec![-1.0, 1.0] }, constraints: fam, aqc_assumed: true };
        assert_eq!(check_upper_condition(&good, &eps, &cfg, &ladder, &tol).unwrap().verdict, Verdict::Pass);
    }
}
