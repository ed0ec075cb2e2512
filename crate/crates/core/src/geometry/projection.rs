//! Nearest-point routines that do not fit in a single match arm.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm};
use crate::scalar::Scalar;

use super::function::ScalarFunction;
use super::{Halfspace, SetOracle};

pub(crate) const GRID_SAMPLES: usize = 10_000;
pub(crate) const REFINEMENTS: usize = 60;
const MINIMA_KEPT: usize = 8;

/// Picks the better of two candidate nearest points: smaller squared
/// distance, with near-ties resolved towards the lexicographically larger point.
pub(crate) fn prefer<T: Scalar>(best: &mut Option<(T, Vec<T>)>, d2: T, p: Vec<T>) {
    match best {
        None => *best = Some((d2, p)),
        Some((bd, bp)) => {
            let slack = T::lit(1e-12) * (T::one() + *bd);
            if d2 < *bd - slack
                || ((d2 - *bd).abs() <= slack && linalg::lex_cmp(&p, bp) == Ordering::Greater)
            {
                *best = Some((d2, p));
            }
        }
    }
}

/// Real roots of `a t^3 + c t + d = 0` with `a != 0`.
fn depressed_cubic_roots<T: Scalar>(a: T, c: T, d: T) -> Vec<T> {
    let p = c / a;
    let q = d / a;
    let three = T::lit(3.0);
    let disc = (q * T::half()).powi(2) + (p / three).powi(3);
    let mut roots = Vec::with_capacity(3);
    if disc > T::zero() {
        let s = disc.sqrt();
        let big = if q >= T::zero() {
            -(q * T::half() + s).cbrt()
        } else {
            (-q * T::half() + s).cbrt()
        };
        let t = if big == T::zero() { T::zero() } else { big - p / (three * big) };
        roots.push(t);
    } else if p == T::zero() {
        roots.push(T::zero());
    } else {
        let m = T::two() * (-p / three).sqrt();
        let arg = (three * q / (T::two() * p) * (-three / p).sqrt())
            .max(-T::one())
            .min(T::one());
        let theta = arg.acos() / three;
        let step = T::two() * T::pi() / three;
        for j in 0..3 {
            roots.push(m * (theta - step * T::from_usize_lossy(j)).cos());
        }
    }
    for t in roots.iter_mut() {
        for _ in 0..4 {
            let g = a * *t * *t * *t + c * *t + d;
            let dg = three * a * *t * *t + c;
            if dg == T::zero() {
                break;
            }
            let next = *t - g / dg;
            if !next.is_finite() {
                break;
            }
            *t = next;
        }
    }
    roots
}

/// Stationary abscissae of `(t - p)^2 + (c t^2 - q)^2`.
fn parabola_stationary<T: Scalar>(c: T, p: T, q: T) -> Vec<T> {
    if c == T::zero() {
        return vec![p];
    }
    depressed_cubic_roots(T::two() * c * c, T::one() - T::two() * c * q, -p)
}

/// Nearest point of the graph of `f` to `(p, q)`.
pub(crate) fn nearest_on_graph<T: Scalar>(f: &ScalarFunction<T>, p: T, q: T) -> Vec<T> {
    let mut best = None;
    let mut offer = |t: T| {
        let y = f.evaluate(t);
        let d2 = (t - p) * (t - p) + (y - q) * (y - q);
        prefer(&mut best, d2, vec![t, y]);
    };
    match f {
        ScalarFunction::Parabola { coef } => {
            for t in parabola_stationary(*coef, p, q) {
                offer(t);
            }
        }
        ScalarFunction::KMParabola { .. } => {
            let c = f.quadratic_coef();
            for t in parabola_stationary(c, p, q) {
                if t >= T::zero() {
                    offer(t);
                }
            }
            offer(T::zero());
            offer(p.min(T::zero()));
        }
        ScalarFunction::NegAbs => {
            // Branches y = -t (t >= 0) and y = t (t <= 0).
            offer(((p - q) * T::half()).max(T::zero()));
            offer(((p + q) * T::half()).min(T::zero()));
        }
        _ => {
            let gap = (f.evaluate(p) - q).abs();
            let t = grid_nearest(f, p, q, gap);
            offer(t);
            offer(p);
        }
    }
    best.map(|(_, v)| v).unwrap_or_else(|| vec![p, f.evaluate(p)])
}

/// Brute force over `[p - w, p + w]` followed by golden-section refinement
/// of the best local minima. Any nearest graph point lies in that window when
/// `w` is at least the vertical gap `|f(p) - q|`.
fn grid_nearest<T: Scalar>(f: &ScalarFunction<T>, p: T, q: T, w: T) -> T {
    let w = w * T::lit(1.0 + 1e-9) + T::lit(1e-300).max(T::min_positive_value());
    let d2 = |t: T| {
        let y = f.evaluate(t) - q;
        (t - p) * (t - p) + y * y
    };
    let n = GRID_SAMPLES;
    let h = T::two() * w / T::from_usize_lossy(n);
    let ts: Vec<T> = (0..=n).map(|i| p - w + h * T::from_usize_lossy(i)).collect();
    let vals: Vec<T> = ts.iter().map(|&t| d2(t)).collect();
    let mut minima: Vec<usize> = (0..=n)
        .filter(|&i| (i == 0 || vals[i] <= vals[i - 1]) && (i == n || vals[i] <= vals[i + 1]))
        .collect();
    minima.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(Ordering::Equal).then(b.cmp(&a)));
    minima.truncate(MINIMA_KEPT);

    let phi = T::lit(0.618_033_988_749_894_8);
    let mut best: Option<(T, Vec<T>)> = None;
    for i in minima {
        let mut lo = ts[i.saturating_sub(1)];
        let mut hi = ts[(i + 1).min(n)];
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let (mut f1, mut f2) = (d2(x1), d2(x2));
        for _ in 0..REFINEMENTS {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = d2(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = d2(x2);
            }
        }
        for t in [ts[i], (lo + hi) * T::half()] {
            prefer(&mut best, d2(t), vec![t, f.evaluate(t)]);
        }
    }
    best.map(|(_, v)| v[0]).unwrap_or(p)
}

/// Exact projection onto `{y : <a_j, y> <= b_j}` by active-set enumeration.
/// Returns `None` when no subset satisfies the optimality conditions, which
/// happens only for empty or numerically degenerate polyhedra.
pub(crate) fn polyhedron_active_set<T: Scalar>(hs: &[Halfspace<T>], x: &[T], tol: T) -> Option<Vec<T>> {
    let feasible = |y: &[T]| {
        hs.iter()
            .all(|h| dot(&h.normal, y) - h.offset <= tol * (T::one() + norm(&h.normal)))
    };
    if feasible(x) {
        return Some(x.to_vec());
    }
    let m = hs.len();
    let n = x.len();
    let mut subsets: Vec<u32> = (1u32..(1u32 << m)).filter(|s| s.count_ones() as usize <= n).collect();
    subsets.sort_by_key(|s| (s.count_ones(), *s));
    for s in subsets {
        let idx: Vec<usize> = (0..m).filter(|j| s & (1 << j) != 0).collect();
        let gram: Vec<Vec<T>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| dot(&hs[i].normal, &hs[j].normal)).collect())
            .collect();
        let rhs: Vec<T> = idx.iter().map(|&i| dot(&hs[i].normal, x) - hs[i].offset).collect();
        let Some(lambda) = linalg::solve(&gram, &rhs) else { continue };
        if lambda.iter().any(|&l| l < -tol) {
            continue;
        }
        let mut y = x.to_vec();
        for (l, &i) in lambda.iter().zip(&idx) {
            y = linalg::axpy(&y, -*l, &hs[i].normal);
        }
        // KKT conditions hold, so this is the unique nearest point.
        if feasible(&y) {
            return Some(y);
        }
    }
    None
}

pub(crate) const DYKSTRA_CYCLES: usize = 2_000;

/// Dykstra's alternating projections onto the members of an intersection.
/// Exact in the limit for convex members; a heuristic otherwise.
pub(crate) fn dykstra<T: Scalar>(members: &[SetOracle<T>], x: &[T], tol_feas: T) -> Result<Vec<T>> {
    let mut y = x.to_vec();
    let mut incr = vec![vec![T::zero(); x.len()]; members.len()];
    for _ in 0..DYKSTRA_CYCLES {
        let prev = y.clone();
        for (s, inc) in members.iter().zip(incr.iter_mut()) {
            let z = linalg::add(&y, inc);
            let w = s.project_with(&z, tol_feas)?;
            *inc = linalg::sub(&z, &w);
            y = w;
        }
        let moved = linalg::distance(&y, &prev);
        if moved <= T::lit(1e-13) * (T::one() + norm(&y))
            && members.iter().all(|s| s.contains_unchecked(&y, tol_feas))
        {
            return Ok(y);
        }
    }
    if members.iter().all(|s| s.contains_unchecked(&y, tol_feas)) {
        return Ok(y);
    }
    Err(Error::numeric(
        "alternating projections onto the intersection did not reach feasibility",
        Some(y.iter().map(|v| v.to_f64_lossy()).collect()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(f: &ScalarFunction<f64>, p: f64, q: f64) -> f64 {
        let n = 2_000_000;
        (0..=n)
            .map(|i| -4.0 + 8.0 * i as f64 / n as f64)
            .map(|t| (t - p).powi(2) + (f.evaluate(t) - q).powi(2))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn cubic_roots_match_polynomial() {
        for &(a, c, d) in &[(2.0, -3.0, 0.1), (1.0, 1.0, -5.0), (8.0, 0.0, 0.0), (0.5, -6.0, 2.0)] {
            for t in depressed_cubic_roots::<f64>(a, c, d) {
                assert!((a * t * t * t + c * t + d).abs() < 1e-9, "{a} {c} {d} -> {t}");
            }
        }
        assert_eq!(depressed_cubic_roots::<f64>(1.0, -3.0, 0.0).len(), 3);
    }

    #[test]
    fn parabola_projection_against_brute_force() {
        let f = ScalarFunction::Parabola { coef: 1.0 };
        let y = nearest_on_graph(&f, 0.0, 1.0);
        assert!((y[0] - 0.5f64.sqrt()).abs() < 1e-12, "tie goes to the larger abscissa");
        assert!((y[1] - 0.5).abs() < 1e-12);
        for &(p, q) in &[(0.3, 2.0), (-1.2, 0.1), (0.0, -1.0), (2.0, -0.5)] {
            let y = nearest_on_graph(&f, p, q);
            let d2 = (y[0] - p).powi(2) + (y[1] - q).powi(2);
            assert!((d2 - brute(&f, p, q)).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_projection_against_brute_force() {
        for f in [ScalarFunction::XSinInvX, ScalarFunction::NegPowLog] {
            for &(p, q) in &[(0.3f64, 0.9f64), (-0.5, -1.0), (0.05, 0.5), (0.7, 0.0)] {
                let y = nearest_on_graph(&f, p, q);
                let d2 = (y[0] - p).powi(2) + (y[1] - q).powi(2);
                assert!((d2 - brute(&f, p, q)).abs() < 1e-7, "{f:?} {p} {q}");
            }
        }
    }

    #[test]
    fn polyhedron_corner() {
        let hs = vec![
            Halfspace { normal: vec![1.0, 0.0], offset: 0.0 },
            Halfspace { normal: vec![0.0, 1.0], offset: 0.0 },
        ];
        let y = polyhedron_active_set(&hs, &[2.0, 3.0], 1e-12).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
        let y = polyhedron_active_set(&hs, &[-2.0, 3.0], 1e-12).unwrap();
        assert_eq!(y, vec![-2.0, 0.0]);
    }
}
