//! Grid search for a common point of several sets inside a ball.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::SetOracle;
use crate::linalg;
use crate::sampling::{keyed_rng, tag};
use crate::scalar::Scalar;

/// Resolution of the feasibility search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Grid points per axis (dimension <= 3) or the square root of the
    /// sample count (higher dimensions).
    pub resolution: usize,
    /// Best grid points polished by cyclic projections.
    pub refine_starts: usize,
    pub refine_iterations: usize,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { resolution: 101, refine_starts: 8, refine_iterations: 300, seed: 0 }
    }
}

fn ball_points<T: Scalar>(center: &[T], radius: T, cfg: &GridConfig) -> Vec<Vec<T>> {
    let n = center.len();
    let res = cfg.resolution.max(2);
    let mut out = vec![center.to_vec()];
    if n <= 3 {
        let total = res.pow(n as u32);
        let step = T::two() * radius / T::from_usize_lossy(res - 1);
        for idx in 0..total {
            let mut rest = idx;
            let mut off = Vec::with_capacity(n);
            for _ in 0..n {
                off.push(-radius + step * T::from_usize_lossy(rest % res));
                rest /= res;
            }
            if linalg::norm(&off) <= radius {
                out.push(linalg::add(center, &off));
            }
        }
    } else {
        use rand::Rng;
        let mut rng = keyed_rng(cfg.seed, &[tag("ball_points"), n as u64]);
        let count = res * res;
        let dirs = crate::sampling::unit_directions::<T>(n, count, &mut rng);
        for d in dirs {
            let u: f64 = rng.random();
            let s = radius * T::lit(u.powf(1.0 / n as f64));
            out.push(linalg::axpy(center, s, &d));
        }
    }
    out
}

fn in_all<T: Scalar>(sets: &[SetOracle<T>], x: &[T], tol: T) -> bool {
    sets.iter().all(|s| s.contains_unchecked(x, tol))
}

/// First point (in grid order) of the closed ball `B(center, radius)` lying
/// in every set up to `tol`, or `None` when the search finds nothing.
/// A `None` is evidence, not proof, of an empty intersection.
pub fn find_common_point<T: Scalar>(
    sets: &[SetOracle<T>],
    center: &[T],
    radius: T,
    tol: T,
    cfg: &GridConfig,
) -> Result<Option<Vec<T>>> {
    let pts = ball_points(center, radius, cfg);
    if let Some(p) = pts.par_iter().find_first(|p| in_all(sets, p, tol)) {
        return Ok(Some(p.clone()));
    }
    let scores = pts
        .par_iter()
        .map(|p| {
            let mut s = T::zero();
            for set in sets {
                let d = set.distance_unchecked(p)?;
                s = s + d * d;
            }
            Ok(s)
        })
        .collect::<Result<Vec<T>>>()?;
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    order.truncate(cfg.refine_starts);
    let ball = SetOracle::ball(center.to_vec(), radius);
    let polished = order
        .par_iter()
        .map(|&i| {
            let mut x = pts[i].clone();
            for _ in 0..cfg.refine_iterations {
                for s in sets {
                    x = s.project_with(&x, tol)?;
                }
                x = ball.project_with(&x, tol)?;
                if in_all(sets, &x, tol) {
                    return Ok(Some(x));
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(polished.into_iter().flatten().next())
}
