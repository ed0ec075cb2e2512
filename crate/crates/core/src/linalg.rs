//! Dense helpers for the small vectors and matrices this crate works with
//! (dimension at most a handful, a few hundred columns at most).

use crate::scalar::Scalar;

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    // hypot-style scaling keeps tiny probes (radius ~1e-12) from underflowing
    let scale = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let s: T = a.iter().map(|&x| (x / scale) * (x / scale)).sum();
    scale * s.sqrt()
}

#[inline]
pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    a.iter().map(|&x| x * x).sum()
}

#[inline]
pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

#[inline]
pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

#[inline]
pub fn scale<T: Scalar>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

/// `a + s * b`
#[inline]
pub fn axpy<T: Scalar>(a: &[T], s: T, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

#[inline]
pub fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    norm(&sub(a, b))
}

/// Angle in `[0, pi]` between two nonzero vectors.
pub fn angle_between<T: Scalar>(a: &[T], b: &[T]) -> T {
    let na = norm(a);
    let nb = norm(b);
    if na == T::zero() || nb == T::zero() {
        return T::pi();
    }
    let u = scale(a, T::one() / na);
    let v = scale(b, T::one() / nb);
    T::two() * norm(&sub(&u, &v)).atan2(norm(&add(&u, &v)))
}

/// Lexicographic comparison, used for deterministic tie-breaking.
pub fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Solves `m x = rhs` by Gaussian elimination with partial pivoting.
/// Returns `None` for (numerically) singular systems.
pub fn solve<T: Scalar>(m: &[Vec<T>], rhs: &[T]) -> Option<Vec<T>> {
    let n = rhs.len();
    let mut a: Vec<Vec<T>> = m.iter().map(|r| r.to_vec()).collect();
    let mut b = rhs.to_vec();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |acc, &v| acc.max(v.abs()));
    if scale == T::zero() {
        return None;
    }
    let eps = scale * T::epsilon() * T::from_usize_lossy(n.max(1) * 16);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv][col].abs() <= eps {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col][k];
                a[row][k] = a[row][k] - f * v;
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let s: T = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi sweeps.
/// Returns eigenvalues and the matching unit eigenvectors (as columns).
pub fn symmetric_eigen<T: Scalar>(m: &[Vec<T>]) -> (Vec<T>, Vec<Vec<T>>) {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m.iter().map(|r| r.to_vec()).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off <= T::epsilon() * T::epsilon() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::two() * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i][i]).collect();
    let vectors = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    (values, vectors)
}

/// Nonnegative least squares `min ||A x - b||, x >= 0` (Lawson-Hanson),
/// with `A` given by its columns. Returns the coefficients and residual norm.
pub fn nnls<T: Scalar>(columns: &[Vec<T>], b: &[T]) -> (Vec<T>, T) {
    let n = columns.len();
    let mut x = vec![T::zero(); n];
    if n == 0 {
        return (x, norm(b));
    }
    let mut passive = vec![false; n];
    let residual = |x: &[T]| -> Vec<T> {
        let mut r = b.to_vec();
        for (j, col) in columns.iter().enumerate() {
            if x[j] != T::zero() {
                for (ri, &c) in r.iter_mut().zip(col) {
                    *ri = *ri - x[j] * c;
                }
            }
        }
        r
    };
    let tol = T::lit(1e-12) * (T::one() + norm(b));
    for _outer in 0..3 * n + 10 {
        let r = residual(&x);
        let w: Vec<T> = columns.iter().map(|c| dot(c, &r)).collect();
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap_or(std::cmp::Ordering::Equal));
        let Some(j) = candidate else { break };
        passive[j] = true;
        let mut inner_guard = 0;
        loop {
            inner_guard += 1;
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let s = passive_lstsq(columns, b, &idx);
            let mut z = vec![T::zero(); n];
            for (pos, &k) in idx.iter().enumerate() {
                z[k] = s[pos];
            }
            if idx.iter().all(|&k| z[k] > T::zero()) || inner_guard > 3 * n + 10 {
                for &k in &idx {
                    z[k] = z[k].max(T::zero());
                }
                x = z;
                break;
            }
            let mut alpha = T::one();
            for &k in &idx {
                if z[k] <= T::zero() {
                    let denom = x[k] - z[k];
                    if denom > T::zero() {
                        alpha = alpha.min(x[k] / denom);
                    }
                }
            }
            for k in 0..n {
                x[k] = x[k] + alpha * (z[k] - x[k]);
            }
            for &k in &idx {
                if x[k] <= T::lit(1e-15) {
                    x[k] = T::zero();
                    passive[k] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    let r = residual(&x);
    (x, norm(&r))
}

fn passive_lstsq<T: Scalar>(columns: &[Vec<T>], b: &[T], idx: &[usize]) -> Vec<T> {
    let k = idx.len();
    let ridge = T::lit(1e-14);
    let gram: Vec<Vec<T>> = idx
        .iter()
        .map(|&i| {
            idx.iter()
                .map(|&j| {
                    let g = dot(&columns[i], &columns[j]);
                    if i == j {
                        g * (T::one() + ridge) + ridge
                    } else {
                        g
                    }
                })
                .collect()
        })
        .collect();
    let rhs: Vec<T> = idx.iter().map(|&i| dot(&columns[i], b)).collect();
    solve(&gram, &rhs).unwrap_or_else(|| vec![T::zero(); k])
}

/// Distance from `p` to the convex hull of `points`, computed as a
/// simplex-constrained least squares problem.
pub fn distance_to_hull<T: Scalar>(p: &[T], points: &[Vec<T>]) -> T {
    if points.is_empty() {
        return T::infinity();
    }
    let weight = T::lit(1e4);
    let columns: Vec<Vec<T>> = points
        .iter()
        .map(|q| {
            let mut c = q.clone();
            c.push(weight);
            c
        })
        .collect();
    let mut rhs = p.to_vec();
    rhs.push(weight);
    let (lambda, _) = nnls(&columns, &rhs);
    let total: T = lambda.iter().copied().sum();
    if total <= T::zero() {
        return T::infinity();
    }
    let mut combo = vec![T::zero(); p.len()];
    for (l, q) in lambda.iter().zip(points) {
        for (c, &qi) in combo.iter_mut().zip(q) {
            *c = *c + *l / total * qi;
        }
    }
    distance(p, &combo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_recovers_known_solution() {
        let m: Vec<Vec<f64>> = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(&m, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!(solve(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn jacobi_matches_closed_form_2x2() {
        let r = -std::f64::consts::FRAC_1_SQRT_2;
        let (vals, vecs) = symmetric_eigen(&[vec![1.0, r], vec![r, 1.0]]);
        let mut sorted = vals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((sorted[0] - (1.0 + r)).abs() < 1e-12);
        assert!((sorted[1] - (1.0 - r)).abs() < 1e-12);
        for v in &vecs {
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nnls_respects_sign_constraint() {
        let cols: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let (x, res) = nnls(&cols, &[2.0, -1.0]);
        assert_eq!(x[1], 0.0);
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((res - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nnls_exact_conic_combination() {
        let cols = vec![vec![1.0, -1.0], vec![0.0, -1.0], vec![1.0, 0.0]];
        let (_, res) = nnls(&cols, &[3.0, -2.0]);
        assert!(res < 1e-10);
    }

    #[test]
    fn hull_distance() {
        let pts: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        assert!(distance_to_hull(&[0.0, 0.0], &pts) < 1e-6);
        assert!((distance_to_hull(&[0.0, 1.0], &pts) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn small_angles_are_accurate() {
        let a = [1.0f64, 0.0];
        let b = [1.0f64, 1e-9];
        assert!((angle_between(&a, &b) - 1e-9).abs() < 1e-15);
        assert!((angle_between(&[1.0f64, 0.0], &[-1.0, 0.0]) - std::f64::consts::PI).abs() < 1e-12);
    }
}
