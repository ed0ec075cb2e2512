//! Countable set families, rate functions and index selections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ScalarFunction, SetOracle, Sign};
use crate::linalg::norm;
use crate::scalar::Scalar;

/// `R(r) = gamma * r^(-exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateLaw<T> {
    Power { gamma: T, exponent: T },
}

/// A rate function together with its claimed bound `M` on `r R(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateFunction<T> {
    pub law: RateLaw<T>,
    pub bound: T,
}

impl<T: Scalar> RateFunction<T> {
    pub fn power(gamma: T, exponent: T, bound: T) -> Self {
        Self { law: RateLaw::Power { gamma, exponent }, bound }
    }

    /// `R(r) = gamma / r^(1 - alpha)`, for which `r R(r) = gamma r^alpha <= gamma` on `(0, 1]`.
    pub fn from_rank(alpha: T, gamma: T) -> Self {
        Self::power(gamma, T::one() - alpha, gamma)
    }

    pub fn eval(&self, r: T) -> T {
        match self.law {
            RateLaw::Power { gamma, exponent } => gamma * r.powf(-exponent),
        }
    }

    /// `r R(r)`, with the value `0` at `r = 0`.
    pub fn ball_radius(&self, r: T) -> T {
        if r == T::zero() {
            T::zero()
        } else {
            r * self.eval(r)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport<T> {
    pub max_r_times_rate: T,
    pub bounded: bool,
    /// Grid positions `j` where `R(r_j) <= R(r_{j-1})`.
    pub monotone_violations: Vec<usize>,
    /// `R(r_min) / R(r_max)`.
    pub growth: T,
    pub valid: bool,
}

/// Checks `r R(r) <= M`, strict increase of `R` as `r` decreases and growth
/// by more than a factor 10 across the grid.
pub fn rate_function_validate<T: Scalar>(rate: &RateFunction<T>, grid: &[T]) -> Result<RateReport<T>> {
    if grid.is_empty() || grid.iter().any(|&r| !(r > T::zero())) {
        return Err(Error::input("rate grid must be nonempty and positive"));
    }
    if grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::input("rate grid must be strictly decreasing"));
    }
    let vals: Vec<T> = grid.iter().map(|&r| rate.eval(r)).collect();
    if vals.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(Error::input("rate function must be positive and finite on the grid"));
    }
    let max_rr = grid.iter().zip(&vals).map(|(&r, &v)| r * v).fold(T::zero(), T::max);
    let monotone_violations: Vec<usize> = (1..vals.len()).filter(|&j| !(vals[j] > vals[j - 1])).collect();
    let growth = vals[vals.len() - 1] / vals[0];
    let bounded = max_rr <= rate.bound * (T::one() + T::lit(1e-12));
    let valid = bounded && monotone_violations.is_empty() && growth > T::lit(10.0);
    Ok(RateReport { max_r_times_rate: max_rr, bounded, monotone_violations, growth, valid })
}

/// Generator `i -> Ω_i` of a countable family, indices starting at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyKind<T> {
    /// Finitely many sets, padded with the whole space beyond the list.
    Explicit { sets: Vec<SetOracle<T>> },
    /// Epigraphs of `g_k(t) = k^m t^2` for `t >= 0` and `0` for `t < 0`.
    KmParabolaEpigraphs { m: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexedFamily<T> {
    pub kind: FamilyKind<T>,
    /// The common point `x̄`.
    pub base: Vec<T>,
}

impl<T: Scalar> IndexedFamily<T> {
    pub fn explicit(sets: Vec<SetOracle<T>>, base: Vec<T>) -> Self {
        Self { kind: FamilyKind::Explicit { sets }, base }
    }

    pub fn km_parabolas(m: T) -> Self {
        Self { kind: FamilyKind::KmParabolaEpigraphs { m }, base: vec![T::zero(), T::zero()] }
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    /// Number of sets before whole-space padding, `None` for infinite families.
    pub fn finite_len(&self) -> Option<usize> {
        match &self.kind {
            FamilyKind::Explicit { sets } => Some(sets.len()),
            FamilyKind::KmParabolaEpigraphs { .. } => None,
        }
    }

    pub fn set(&self, i: usize) -> Result<SetOracle<T>> {
        if i == 0 {
            return Err(Error::input("family indices start at 1"));
        }
        Ok(match &self.kind {
            FamilyKind::Explicit { sets } => sets
                .get(i - 1)
                .cloned()
                .unwrap_or(SetOracle::WholeSpace { dim: self.dim() }),
            FamilyKind::KmParabolaEpigraphs { m } => {
                SetOracle::Epigraph1d(ScalarFunction::KMParabola { k: T::from_usize_lossy(i), m: *m })
            }
        })
    }

    pub fn sets(&self, indices: &[usize]) -> Result<Vec<SetOracle<T>>> {
        indices.iter().map(|&i| self.set(i)).collect()
    }

    /// `⋂_{i in indices} Ω_i` as a single oracle.
    pub fn truncation(&self, indices: &[usize]) -> Result<SetOracle<T>> {
        let members = self.sets(indices)?;
        if members.is_empty() {
            return Ok(SetOracle::WholeSpace { dim: self.dim() });
        }
        Ok(SetOracle::Intersection { members })
    }

    /// `⋂_i Ω_i` over the whole family.
    pub fn full_intersection(&self) -> SetOracle<T> {
        match &self.kind {
            FamilyKind::Explicit { sets } if sets.is_empty() => SetOracle::WholeSpace { dim: self.dim() },
            FamilyKind::Explicit { sets } => SetOracle::Intersection { members: sets.clone() },
            FamilyKind::KmParabolaEpigraphs { .. } => SetOracle::HalfplaneProduct { signs: vec![Sign::Nonpos, Sign::Nonneg] },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base.is_empty() || self.base.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("family base point must be finite"));
        }
        match &self.kind {
            FamilyKind::Explicit { sets } => {
                for s in sets {
                    s.validate()?;
                    if s.dim() != self.dim() {
                        return Err(Error::DimensionMismatch { expected: self.dim(), found: s.dim() });
                    }
                }
            }
            FamilyKind::KmParabolaEpigraphs { m } => {
                if self.dim() != 2 || !m.is_finite() {
                    return Err(Error::input("k_m parabola family lives in R^2 with finite m"));
                }
            }
        }
        Ok(())
    }
}

/// Index sets `I_k` (1-based indices) per rung.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionRule {
    pub sets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow<T> {
    pub k: usize,
    pub r: T,
    pub rate: T,
    pub size: usize,
    /// `|I_k|^{3/2} / R(r_k)`
    pub ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport<T> {
    pub rows: Vec<GrowthRow<T>>,
    pub strictly_decreasing: bool,
    pub final_below_threshold: bool,
}

impl<T: Scalar> GrowthReport<T> {
    pub fn holds(&self) -> bool {
        self.strictly_decreasing && self.final_below_threshold
    }
}

impl SelectionRule {
    /// `I_k = {1, ..., counts[k]}`.
    pub fn prefix(counts: &[usize]) -> Self {
        Self { sets: counts.iter().map(|&c| (1..=c).collect()).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sets.iter().any(|s| s.is_empty() || s.contains(&0)) {
            return Err(Error::input("every I_k needs at least one index, indices start at 1"));
        }
        Ok(())
    }

    /// Finite surrogate for `|I_k|^{3/2} = o(R_k)`: strictly decreasing
    /// ratios and a final ratio below `threshold`.
    pub fn growth_report<T: Scalar>(&self, rate: &RateFunction<T>, radii: &[T], threshold: T) -> GrowthReport<T> {
        let rows: Vec<GrowthRow<T>> = self
            .sets
            .iter()
            .zip(radii)
            .enumerate()
            .map(|(k, (s, &r))| {
                let big = rate.eval(r);
                let n = T::from_usize_lossy(s.len());
                GrowthRow { k: k + 1, r, rate: big, size: s.len(), ratio: n * n.sqrt() / big }
            })
            .collect();
        let strictly_decreasing = rows.windows(2).all(|w| w[1].ratio < w[0].ratio);
        let final_below_threshold = rows.last().map_or(false, |r| r.ratio < threshold);
        GrowthReport { rows, strictly_decreasing, final_below_threshold }
    }
}

/// Growth report rows as CSV `k, r_k, R_k, |I_k|, ratio`.
pub fn growth_csv<T: Scalar>(report: &GrowthReport<T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["k", "r_k", "R_k", "size", "ratio"]);
    for row in &report.rows {
        let _ = w.write_record([
            row.k.to_string(),
            format!("{:e}", row.r.to_f64_lossy()),
            format!("{:e}", row.rate.to_f64_lossy()),
            row.size.to_string(),
            format!("{:e}", row.ratio.to_f64_lossy()),
        ]);
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}

/// Shift attached to one index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexedShift<T> {
    pub index: usize,
    pub shift: Vec<T>,
}

/// Shifts `a_{ik}` given only for `i in I_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexedSchedule<T> {
    pub rungs: Vec<Vec<IndexedShift<T>>>,
}

impl<T: Scalar> IndexedSchedule<T> {
    /// The same shift for every index of `I_k`, scaled per rung.
    pub fn uniform(sel: &SelectionRule, shifts: &[Vec<T>]) -> Self {
        Self {
            rungs: sel
                .sets
                .iter()
                .zip(shifts)
                .map(|(s, a)| s.iter().map(|&i| IndexedShift { index: i, shift: a.clone() }).collect())
                .collect(),
        }
    }

    pub fn from_finite(sched: &crate::finite_extremality::TranslationSchedule<T>) -> Self {
        Self {
            rungs: (0..sched.len())
                .map(|k| {
                    sched
                        .shifts(k)
                        .iter()
                        .enumerate()
                        .map(|(i, a)| IndexedShift { index: i + 1, shift: a.clone() })
                        .collect()
                })
                .collect(),
        }
    }

    /// `r_k = max_{i in I_k} |a_{ik}|`.
    pub fn radius(&self, k: usize) -> T {
        self.rungs[k].iter().map(|s| norm(&s.shift)).fold(T::zero(), T::max)
    }

    pub fn radii(&self) -> Vec<T> {
        (0..self.rungs.len()).map(|k| self.radius(k)).collect()
    }

    pub fn indices(&self, k: usize) -> Vec<usize> {
        self.rungs[k].iter().map(|s| s.index).collect()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.rungs.is_empty() {
            return Err(Error::input("schedule has no rungs"));
        }
        for (k, rung) in self.rungs.iter().enumerate() {
            if rung.is_empty() {
                return Err(Error::input(format!("schedule rung {} is empty", k + 1)));
            }
            if rung.iter().any(|s| s.shift.len() != dim || s.shift.iter().any(|v| !v.is_finite())) {
                return Err(Error::input(format!("schedule rung {} has malformed shifts", k + 1)));
            }
        }
        let radii = self.radii();
        if radii.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::input("r_k must not increase along the schedule"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_examples() {
        let grid: Vec<f64> = (1..=6).map(|e| 10f64.powi(-e)).collect();
        let rep = rate_function_validate(&RateFunction::from_rank(0.5, 1.0), &grid).unwrap();
        assert!(rep.valid);
        assert!((rep.max_r_times_rate - 0.1f64.sqrt()).abs() < 1e-12);
        let rep = rate_function_validate(&RateFunction::power(1.0, 0.9, 1.0), &grid).unwrap();
        assert!(rep.valid);
        let rep = rate_function_validate(&RateFunction::power(1.0, 2.0, 1.0), &grid).unwrap();
        assert!(!rep.valid && !rep.bounded);
        assert!(rate_function_validate(&RateFunction::power(1.0, 0.5, 1.0), &[0.1, 0.2]).is_err());
        assert!(rate_function_validate(&RateFunction::power(-1.0, 0.5, 1.0), &[0.1]).is_err());
    }

    #[test]
    fn family_generation() {
        let f = IndexedFamily::<f64>::km_parabolas(4.0);
        assert!(f.set(3).unwrap().contains(&[0.1, 81.0 * 0.01], 1e-12).unwrap());
        assert!(f.set(0).is_err());
        let e = IndexedFamily::explicit(vec![SetOracle::halfspace(vec![0.0, 1.0], 0.0)], vec![0.0, 0.0]);
        assert_eq!(e.set(5).unwrap(), SetOracle::WholeSpace { dim: 2 });
    }

    #[test]
    fn growth() {
        let sel = SelectionRule::prefix(&[8, 27, 90]);
        let rep = sel.growth_report(&RateFunction::power(1.0, 0.9, 1.0), &[1e-2, 1e-3, 1e-4], 0.5);
        assert!(rep.holds());
        assert_eq!(growth_csv(&rep).lines().count(), 4);
    }
}
