//! Closed subsets of `R^n` exposed through membership, projection and distance.

mod function;
pub(crate) mod projection;

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm};
use crate::scalar::Scalar;

pub use function::ScalarFunction;

/// A point of `R^n` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>", bound = "T: Scalar")]
pub struct Point<T>(Vec<T>);

impl<T: Scalar> Point<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::input("a point needs at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("point coordinates must be finite"));
        }
        Ok(Self(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![T::zero(); dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for Point<T> {
    type Error = Error;

    fn try_from(v: Vec<T>) -> Result<Self> {
        Self::new(v)
    }
}

impl<T> From<Point<T>> for Vec<T> {
    fn from(p: Point<T>) -> Vec<T> {
        p.0
    }
}

impl<T> Deref for Point<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// `{ y : <normal, y> <= offset }`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Halfspace<T> {
    pub normal: Vec<T>,
    pub offset: T,
}

/// Sign restriction of one coordinate in a product of half-lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Free,
    Nonpos,
    Nonneg,
}

/// A nonempty closed set from a fixed catalog of parametric families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetOracle<T> {
    Halfspace {
        normal: Vec<T>,
        offset: T,
    },
    Ball {
        center: Vec<T>,
        radius: T,
    },
    #[serde(rename = "box")]
    Cuboid {
        lo: Vec<T>,
        hi: Vec<T>,
    },
    Polyhedron {
        halfspaces: Vec<Halfspace<T>>,
    },
    /// `{ (t, s) : s >= f(t) }`
    Epigraph1d(ScalarFunction<T>),
    /// `{ (t, s) : s <= f(t) }`
    Hypograph1d(ScalarFunction<T>),
    /// `{ (t, s) : s >= -|t| }`
    NegNormEpigraph,
    /// Product of `R`, `R_-` and `R_+` factors, one per coordinate.
    HalfplaneProduct {
        signs: Vec<Sign>,
    },
    /// `inner + shift`
    Translated {
        shift: Vec<T>,
        inner: Box<SetOracle<T>>,
    },
    Intersection {
        members: Vec<SetOracle<T>>,
    },
    /// Cartesian product, coordinates concatenated in order.
    Product {
        factors: Vec<SetOracle<T>>,
    },
    WholeSpace {
        dim: usize,
    },
}

impl<T: Scalar> SetOracle<T> {
    /// `{ y : y_2 <= 0 }` style halfspace helper.
    pub fn halfspace(normal: Vec<T>, offset: T) -> Self {
        Self::Halfspace { normal, offset }
    }

    pub fn ball(center: Vec<T>, radius: T) -> Self {
        Self::Ball { center, radius }
    }

    pub fn epigraph(f: ScalarFunction<T>) -> Self {
        Self::Epigraph1d(f)
    }

    pub fn hypograph(f: ScalarFunction<T>) -> Self {
        Self::Hypograph1d(f)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Halfspace { normal, .. } => normal.len(),
            Self::Ball { center, .. } => center.len(),
            Self::Cuboid { lo, .. } => lo.len(),
            Self::Polyhedron { halfspaces } => halfspaces.first().map_or(0, |h| h.normal.len()),
            Self::Epigraph1d(_) | Self::Hypograph1d(_) | Self::NegNormEpigraph => 2,
            Self::HalfplaneProduct { signs } => signs.len(),
            Self::Translated { shift, .. } => shift.len(),
            Self::Intersection { members } => members.first().map_or(0, |m| m.dim()),
            Self::Product { factors } => factors.iter().map(|f| f.dim()).sum(),
            Self::WholeSpace { dim } => *dim,
        }
    }

    /// Structural checks: consistent dimensions, finite data, nonempty sets
    /// where that can be decided cheaply.
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[T]| v.iter().all(|c| c.is_finite());
        let bad = |m: &str| Err(Error::input(m.to_string()));
        match self {
            Self::Halfspace { normal, offset } => {
                if normal.is_empty() || !finite(normal) || !offset.is_finite() {
                    return bad("halfspace needs a finite nonempty normal and offset");
                }
                if norm(normal) == T::zero() && *offset < T::zero() {
                    return bad("halfspace with zero normal and negative offset is empty");
                }
            }
            Self::Ball { center, radius } => {
                if center.is_empty() || !finite(center) || !radius.is_finite() || *radius < T::zero() {
                    return bad("ball needs a finite center and a nonnegative radius");
                }
            }
            Self::Cuboid { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return bad("box bounds must have equal nonzero length");
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return bad("box needs lo <= hi in every coordinate");
                }
            }
            Self::Polyhedron { halfspaces } => {
                if halfspaces.is_empty() {
                    return bad("polyhedron needs at least one halfspace");
                }
                let n = halfspaces[0].normal.len();
                if n == 0 || halfspaces.iter().any(|h| h.normal.len() != n || !finite(&h.normal)) {
                    return bad("polyhedron halfspaces must share a dimension");
                }
                if halfspaces.len() > 16 {
                    return bad("polyhedron supports at most 16 halfspaces");
                }
                if projection::polyhedron_active_set(halfspaces, &vec![T::zero(); n], T::lit(1e-9))
                    .is_none()
                {
                    return bad("polyhedron appears to be empty");
                }
            }
            Self::Epigraph1d(f) | Self::Hypograph1d(f) => {
                if let ScalarFunction::Parabola { coef } = f {
                    if !coef.is_finite() {
                        return bad("parabola coefficient must be finite");
                    }
                }
                if let ScalarFunction::KMParabola { k, m } = f {
                    if !(*k > T::zero()) || !m.is_finite() || !f.quadratic_coef().is_finite() {
                        return bad("k_m_parabola needs k > 0 and a finite k^m");
                    }
                }
            }
            Self::NegNormEpigraph => {}
            Self::HalfplaneProduct { signs } => {
                if signs.is_empty() {
                    return bad("halfplane_product needs at least one sign");
                }
            }
            Self::Translated { shift, inner } => {
                inner.validate()?;
                if !finite(shift) {
                    return bad("translation shift must be finite");
                }
                if shift.len() != inner.dim() {
                    return Err(Error::DimensionMismatch { expected: inner.dim(), found: shift.len() });
                }
            }
            Self::Intersection { members } => {
                if members.is_empty() {
                    return bad("intersection needs at least one member");
                }
                let n = members[0].dim();
                for m in members {
                    m.validate()?;
                    if m.dim() != n {
                        return Err(Error::DimensionMismatch { expected: n, found: m.dim() });
                    }
                }
            }
            Self::Product { factors } => {
                if factors.is_empty() {
                    return bad("product needs at least one factor");
                }
                for f in factors {
                    f.validate()?;
                }
            }
            Self::WholeSpace { dim } => {
                if *dim == 0 {
                    return bad("whole_space needs dim >= 1");
                }
            }
        }
        Ok(())
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("query point has non-finite coordinates"));
        }
        Ok(())
    }

    /// True iff the distance from `x` to the set is at most `tol`.
    pub fn contains(&self, x: &[T], tol: T) -> Result<bool> {
        self.check_dim(x)?;
        if tol < T::zero() {
            return Err(Error::input("tolerance must be nonnegative"));
        }
        Ok(self.contains_unchecked(x, tol))
    }

    /// Nearest point of the set to `x`, using the default feasibility tolerance.
    pub fn project(&self, x: &[T]) -> Result<Point<T>> {
        self.check_dim(x)?;
        Ok(Point(self.project_with(x, T::lit(1e-9))?))
    }

    pub fn distance(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        self.distance_unchecked(x)
    }

    /// The set `{ w - a : w in self }`.
    pub fn translate(&self, a: &[T]) -> Self {
        Self::Translated { shift: a.iter().map(|&v| -v).collect(), inner: Box::new(self.clone()) }
    }

    /// Whether every member of the family is convex.
    pub fn is_convex(&self) -> bool {
        match self {
            Self::Halfspace { .. }
            | Self::Ball { .. }
            | Self::Cuboid { .. }
            | Self::Polyhedron { .. }
            | Self::HalfplaneProduct { .. }
            | Self::WholeSpace { .. } => true,
            Self::Epigraph1d(f) => match f {
                ScalarFunction::Parabola { coef } => *coef >= T::zero(),
                ScalarFunction::KMParabola { .. } => true,
                _ => false,
            },
            Self::Hypograph1d(f) => match f {
                ScalarFunction::Parabola { coef } => *coef <= T::zero(),
                ScalarFunction::NegAbs => true,
                _ => false,
            },
            Self::NegNormEpigraph => false,
            Self::Translated { inner, .. } => inner.is_convex(),
            Self::Intersection { members } => members.iter().all(|m| m.is_convex()),
            Self::Product { factors } => factors.iter().all(|f| f.is_convex()),
        }
    }

    pub(crate) fn distance_unchecked(&self, x: &[T]) -> Result<T> {
        let p = self.project_with(x, T::lit(1e-9))?;
        Ok(linalg::distance(x, &p))
    }

    /// Membership without dimension checks. For intersections this tests
    /// each member, which agrees with the distance criterion up to the
    /// conditioning of the intersection.
    pub(crate) fn contains_unchecked(&self, x: &[T], tol: T) -> bool {
        match self {
            Self::Halfspace { normal, offset } => {
                let n = norm(normal);
                if n == T::zero() {
                    return true;
                }
                (dot(normal, x) - *offset) / n <= tol
            }
            Self::Ball { center, radius } => linalg::distance(x, center) - *radius <= tol,
            Self::Cuboid { lo, hi } => {
                let mut d2 = T::zero();
                for ((&v, &l), &h) in x.iter().zip(lo).zip(hi) {
                    let e = (l - v).max(v - h).max(T::zero());
                    d2 = d2 + e * e;
                }
                d2.sqrt() <= tol
            }
            Self::Polyhedron { halfspaces } => {
                if halfspaces.iter().all(|h| dot(&h.normal, x) - h.offset <= T::zero()) {
                    return true;
                }
                self.distance_unchecked(x).map_or(false, |d| d <= tol)
            }
            Self::Epigraph1d(f) => graph_side_contains(f, x[0], x[1], tol, true),
            Self::Hypograph1d(f) => graph_side_contains(f, x[0], x[1], tol, false),
            Self::NegNormEpigraph => graph_side_contains(&ScalarFunction::NegAbs, x[0], x[1], tol, true),
            Self::HalfplaneProduct { signs } => {
                let mut d2 = T::zero();
                for (&v, s) in x.iter().zip(signs) {
                    let e = match s {
                        Sign::Free => T::zero(),
                        Sign::Nonpos => v.max(T::zero()),
                        Sign::Nonneg => (-v).max(T::zero()),
                    };
                    d2 = d2 + e * e;
                }
                d2.sqrt() <= tol
            }
            Self::Translated { shift, inner } => inner.contains_unchecked(&linalg::sub(x, shift), tol),
            Self::Intersection { members } => members.iter().all(|m| m.contains_unchecked(x, tol)),
            Self::Product { factors } => {
                let mut d2 = T::zero();
                let mut at = 0;
                for f in factors {
                    let n = f.dim();
                    let part = &x[at..at + n];
                    at += n;
                    if f.contains_unchecked(part, T::zero()) {
                        continue;
                    }
                    match f.distance_unchecked(part) {
                        Ok(d) => d2 = d2 + d * d,
                        Err(_) => return false,
                    }
                }
                d2.sqrt() <= tol
            }
            Self::WholeSpace { .. } => true,
        }
    }

    pub(crate) fn project_with(&self, x: &[T], tol_feas: T) -> Result<Vec<T>> {
        Ok(match self {
            Self::Halfspace { normal, offset } => {
                let n2 = linalg::norm_sq(normal);
                let excess = dot(normal, x) - *offset;
                if n2 == T::zero() || excess <= T::zero() {
                    x.to_vec()
                } else {
                    linalg::axpy(x, -excess / n2, normal)
                }
            }
            Self::Ball { center, radius } => {
                let d = linalg::distance(x, center);
                if d <= *radius {
                    x.to_vec()
                } else {
                    let dir = linalg::sub(x, center);
                    linalg::axpy(center, *radius / d, &dir)
                }
            }
            Self::Cuboid { lo, hi } => x.iter().zip(lo).zip(hi).map(|((&v, &l), &h)| v.max(l).min(h)).collect(),
            Self::Polyhedron { halfspaces } => projection::polyhedron_active_set(halfspaces, x, T::lit(1e-12))
                .ok_or_else(|| {
                    Error::numeric(
                        "no active set satisfied the optimality conditions",
                        Some(x.iter().map(|v| v.to_f64_lossy()).collect()),
                    )
                })?,
            Self::Epigraph1d(f) => {
                if x[1] >= f.evaluate(x[0]) {
                    x.to_vec()
                } else {
                    projection::nearest_on_graph(f, x[0], x[1])
                }
            }
            Self::Hypograph1d(f) => {
                if x[1] <= f.evaluate(x[0]) {
                    x.to_vec()
                } else {
                    projection::nearest_on_graph(f, x[0], x[1])
                }
            }
            Self::NegNormEpigraph => {
                if x[1] >= -x[0].abs() {
                    x.to_vec()
                } else {
                    projection::nearest_on_graph(&ScalarFunction::NegAbs, x[0], x[1])
                }
            }
            Self::HalfplaneProduct { signs } => x
                .iter()
                .zip(signs)
                .map(|(&v, s)| match s {
                    Sign::Free => v,
                    Sign::Nonpos => v.min(T::zero()),
                    Sign::Nonneg => v.max(T::zero()),
                })
                .collect(),
            Self::Translated { shift, inner } => {
                let p = inner.project_with(&linalg::sub(x, shift), tol_feas)?;
                linalg::add(&p, shift)
            }
            Self::Intersection { members } => {
                if members.len() == 1 {
                    members[0].project_with(x, tol_feas)?
                } else if members.iter().all(|m| m.contains_unchecked(x, T::zero())) {
                    x.to_vec()
                } else {
                    projection::dykstra(members, x, tol_feas)?
                }
            }
            Self::Product { factors } => {
                let mut out = Vec::with_capacity(x.len());
                let mut at = 0;
                for f in factors {
                    let n = f.dim();
                    out.extend(f.project_with(&x[at..at + n], tol_feas)?);
                    at += n;
                }
                out
            }
            Self::WholeSpace { .. } => x.to_vec(),
        })
    }

    /// Generators of the Fréchet normal cone at a point `x` of the set, when
    /// the family knows them in closed form. `Some(vec![])` means the cone is
    /// `{0}`; `None` means no closed form is available at `x`.
    pub fn frechet_normals(&self, x: &[T], tol: T) -> Option<Vec<Vec<T>>> {
        if x.len() != self.dim() {
            return None;
        }
        let unit = |v: Vec<T>| {
            let n = norm(&v);
            linalg::scale(&v, T::one() / n)
        };
        let basis = |j: usize, s: T| {
            let mut e = vec![T::zero(); x.len()];
            e[j] = s;
            e
        };
        match self {
            Self::Halfspace { normal, offset } => {
                let n = norm(normal);
                if n == T::zero() {
                    return Some(vec![]);
                }
                Some(if ((dot(normal, x) - *offset) / n).abs() <= tol { vec![unit(normal.clone())] } else { vec![] })
            }
            Self::Ball { center, radius } => {
                let d = linalg::distance(x, center);
                Some(if (d - *radius).abs() <= tol && d > T::zero() {
                    vec![unit(linalg::sub(x, center))]
                } else if *radius == T::zero() {
                    return None;
                } else {
                    vec![]
                })
            }
            Self::Cuboid { lo, hi } => {
                let mut g = Vec::new();
                for j in 0..x.len() {
                    if (x[j] - lo[j]).abs() <= tol {
                        g.push(basis(j, -T::one()));
                    }
                    if (x[j] - hi[j]).abs() <= tol {
                        g.push(basis(j, T::one()));
                    }
                }
                Some(g)
            }
            Self::Polyhedron { halfspaces } => Some(
                halfspaces
                    .iter()
                    .filter(|h| {
                        let n = norm(&h.normal);
                        n > T::zero() && ((dot(&h.normal, x) - h.offset) / n).abs() <= tol
                    })
                    .map(|h| unit(h.normal.clone()))
                    .collect(),
            ),
            Self::Epigraph1d(f) | Self::Hypograph1d(f) => {
                let epi = matches!(self, Self::Epigraph1d(_));
                let gap = x[1] - f.evaluate(x[0]);
                let interior = if epi { gap > tol } else { gap < -tol };
                if interior {
                    return Some(vec![]);
                }
                let d = f.derivative(x[0])?;
                Some(vec![if epi { unit(vec![d, -T::one()]) } else { unit(vec![-d, T::one()]) }])
            }
            Self::NegNormEpigraph => {
                let (t, s) = (x[0], x[1]);
                if s + t.abs() > tol {
                    return Some(vec![]);
                }
                let h = T::half().sqrt();
                Some(if t.abs() <= tol {
                    vec![]
                } else if t > T::zero() {
                    vec![vec![-h, -h]]
                } else {
                    vec![vec![h, -h]]
                })
            }
            Self::HalfplaneProduct { signs } => {
                let mut g = Vec::new();
                for (j, s) in signs.iter().enumerate() {
                    match s {
                        Sign::Nonpos if x[j].abs() <= tol => g.push(basis(j, T::one())),
                        Sign::Nonneg if x[j].abs() <= tol => g.push(basis(j, -T::one())),
                        _ => {}
                    }
                }
                Some(g)
            }
            Self::Translated { shift, inner } => inner.frechet_normals(&linalg::sub(x, shift), tol),
            Self::Intersection { members } if members.len() == 1 => members[0].frechet_normals(x, tol),
            Self::Intersection { members } => {
                // Exact for polyhedral members, whose normal cones add up.
                if !members.iter().all(|m| m.is_polyhedral()) {
                    return None;
                }
                let mut g = Vec::new();
                for m in members {
                    g.extend(m.frechet_normals(x, tol)?);
                }
                Some(g)
            }
            Self::Product { factors } => {
                let mut g = Vec::new();
                let mut at = 0;
                for f in factors {
                    let n = f.dim();
                    for v in f.frechet_normals(&x[at..at + n], tol)? {
                        let mut full = vec![T::zero(); x.len()];
                        full[at..at + n].copy_from_slice(&v);
                        g.push(full);
                    }
                    at += n;
                }
                Some(g)
            }
            Self::WholeSpace { .. } => Some(vec![]),
        }
    }

    fn is_polyhedral(&self) -> bool {
        match self {
            Self::Halfspace { .. }
            | Self::Cuboid { .. }
            | Self::Polyhedron { .. }
            | Self::HalfplaneProduct { .. }
            | Self::WholeSpace { .. } => true,
            Self::Translated { inner, .. } => inner.is_polyhedral(),
            Self::Intersection { members } => members.iter().all(|m| m.is_polyhedral()),
            Self::Product { factors } => factors.iter().all(|f| f.is_polyhedral()),
            _ => false,
        }
    }
}

/// Membership in the epigraph (`epi = true`) or hypograph of `f`.
fn graph_side_contains<T: Scalar>(f: &ScalarFunction<T>, p: T, q: T, tol: T, epi: bool) -> bool {
    let gap = if epi { f.evaluate(p) - q } else { q - f.evaluate(p) };
    if gap <= tol {
        return true;
    }
    if !f.has_closed_form_projection() {
        // A graph point within `tol` has abscissa within `tol` of `p`; skip
        // the full search when no nearby value comes close.
        let n = 64;
        let near = (0..=n).any(|i| {
            let t = p - tol + T::two() * tol * T::from_usize_lossy(i) / T::from_usize_lossy(n);
            (f.evaluate(t) - q).abs() <= T::two() * tol
        });
        if !near {
            return false;
        }
    }
    let y = projection::nearest_on_graph(f, p, q);
    linalg::distance(&[p, q], &y) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega1() -> SetOracle<f64> {
        SetOracle::hypograph(ScalarFunction::Parabola { coef: 1.0 })
    }

    #[test]
    fn catalog_examples() {
        let h = SetOracle::halfspace(vec![0.0, 1.0], 0.0);
        assert!(h.contains(&[0.3, -0.1], 1e-9).unwrap());
        assert_eq!(h.project(&[0.3, 0.5]).unwrap().into_vec(), vec![0.3, 0.0]);
        assert!(!omega1().contains(&[0.0, 0.1], 1e-9).unwrap());
        let b = SetOracle::ball(vec![0.0, 0.0], 1.0);
        assert!(b.contains(&[1.0, 0.0], 1e-9).unwrap());
        assert_eq!(b.project(&[2.0, 0.0]).unwrap().into_vec(), vec![1.0, 0.0]);
        let p = omega1().project(&[0.0, 1.0]).unwrap();
        assert!((p[0] - 0.5f64.sqrt()).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        assert!((omega1().distance(&[0.0, 1.0]).unwrap() - 0.75f64.sqrt()).abs() < 1e-12);
        let rm = SetOracle::<f64>::HalfplaneProduct { signs: vec![Sign::Free, Sign::Nonpos] };
        assert_eq!(rm.distance(&[5.0, 2.0]).unwrap(), 2.0);
        assert!(rm.translate(&[0.0, 0.3]).contains(&[0.0, -0.3], 1e-12).unwrap());
        let tb = b.translate(&[1.0, 0.0]);
        assert_eq!(tb.project(&[3.0, 0.0]).unwrap().into_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_errors() {
        let h = SetOracle::halfspace(vec![0.0, 1.0], 0.0);
        assert!(matches!(h.contains(&[1.0], 0.0), Err(Error::DimensionMismatch { .. })));
        assert!(h.project(&[f64::NAN, 0.0]).is_err());
        assert!(Point::<f64>::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let text = r#"{"family":"translated","shift":[0,0.01],"inner":{"family":"epigraph1d","function":"k_m_parabola","k":3,"m":4}}"#;
        let s: SetOracle<f64> = serde_json::from_str(text).unwrap();
        assert_eq!(
            s,
            SetOracle::Translated {
                shift: vec![0.0, 0.01],
                inner: Box::new(SetOracle::Epigraph1d(ScalarFunction::KMParabola { k: 3.0, m: 4.0 }))
            }
        );
        let back: SetOracle<f64> = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        let b: SetOracle<f64> = serde_json::from_str(r#"{"family":"box","lo":[0],"hi":[1]}"#).unwrap();
        assert_eq!(b.dim(), 1);
        assert!(serde_json::from_str::<SetOracle<f64>>(r#"{"family":"torus"}"#).is_err());
        assert!(serde_json::from_str::<SetOracle<f64>>(r#"{"family":"ball","center":[0],"radius":1,"x":2}"#).is_err());
    }

    #[test]
    fn nonconvex_tie_break() {
        let s = SetOracle::<f64>::NegNormEpigraph;
        let p = s.project(&[0.0, -1.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn analytic_normals() {
        let s = SetOracle::<f64>::NegNormEpigraph;
        assert_eq!(s.frechet_normals(&[0.0, 0.0], 1e-9), Some(vec![]));
        let corner = SetOracle::Intersection {
            members: vec![SetOracle::halfspace(vec![0.0, 1.0], 0.0), SetOracle::halfspace(vec![1.0, 0.0], 0.0)],
        };
        assert_eq!(corner.frechet_normals(&[0.0, 0.0], 1e-9).unwrap().len(), 2);
        let g = omega1().frechet_normals(&[0.0, 0.0], 1e-9).unwrap();
        assert_eq!(g, vec![vec![0.0, 1.0]]);
    }
}
