//! First stage: the one-many ordering and the consideration set it leaves.
//!
//! An alternative `x` weakly dominates `y` when it is at least as good for the
//! agent (`u(x) >= u(y)`) and at least as close to the current social choice
//! (`c1(|x - x_s|) <= c1(|y - x_s|)`). The consideration set is the set of
//! alternatives that nothing strictly dominates.
//!
//! With strictly single-peaked `u`, strictly increasing `c1` and the Euclidean
//! metric that set is the closed interval between `x_s` and the personal
//! optimum ([`consideration_interval`]). [`maximal_set_grid`] computes it by
//! brute force on a grid and has no shape requirements.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, Error, Result};
use crate::model::{distance, CostFunction, Grid, UtilityFunction, Validate};

/// Tolerance for treating `x_s` and the personal optimum as equal.
pub const SINGLETON_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ClosedInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        ClosedInterval { lo, hi }
    }

    pub fn singleton(x: f64) -> Self {
        ClosedInterval { lo: x, hi: x }
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Inclusive index range of the grid points whose half-step cells meet the
    /// interval. This is the grid image of the interval used everywhere a
    /// continuum interval meets a grid scan.
    pub fn grid_indices(&self, grid: &Grid) -> Option<(usize, usize)> {
        grid.cell_range(self.lo, self.hi)
    }

    /// True when `x` lies within half a grid step of the interval.
    pub fn contains_on_grid(&self, x: f64, grid: &Grid) -> bool {
        let half = 0.5 * grid.step();
        self.lo - half <= x && x <= self.hi + half
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DominanceVerdict {
    pub weak: bool,
    pub strict: bool,
}

#[inline]
fn weakly_dominates(u_i: f64, cost_i: f64, u_j: f64, cost_j: f64) -> bool {
    u_i >= u_j && cost_i <= cost_j
}

/// Compares `x_i` against `x_j` under the one-many ordering anchored at `x_s`.
pub fn one_many_compare(
    x_i: f64,
    x_j: f64,
    u: &UtilityFunction,
    c1: &CostFunction,
    x_s: f64,
) -> Result<DominanceVerdict> {
    check_nonnegative("x_i", x_i)?;
    check_nonnegative("x_j", x_j)?;
    check_nonnegative("x_s", x_s)?;
    let (ui, uj) = (u.eval(x_i)?, u.eval(x_j)?);
    let (ci, cj) = (c1.eval(distance(x_i, x_s)), c1.eval(distance(x_j, x_s)));
    let weak = weakly_dominates(ui, ci, uj, cj);
    let strict = weak && !weakly_dominates(uj, cj, ui, ci);
    Ok(DominanceVerdict { weak, strict })
}

/// Closed-form consideration set `[min(x_s, x*), max(x_s, x*)]`.
pub fn consideration_interval(
    u: &UtilityFunction,
    c1: &CostFunction,
    x_s: f64,
) -> Result<ClosedInterval> {
    check_nonnegative("x_s", x_s)?;
    u.validate()?;
    c1.validate()?;
    if !c1.is_strictly_increasing() {
        return Err(Error::PropOneUnavailable);
    }
    Ok(interval_between(u.maximizer(), x_s))
}

pub(crate) fn interval_between(x_star: f64, x_s: f64) -> ClosedInterval {
    if (x_s - x_star).abs() <= SINGLETON_TOLERANCE {
        ClosedInterval::singleton(x_star)
    } else {
        ClosedInterval::new(x_s.min(x_star), x_s.max(x_star))
    }
}

/// Indices of the grid points strictly dominated by no other grid point, given
/// per-point utilities and first-stage costs.
pub fn undominated_indices(utilities: &[f64], costs: &[f64]) -> Vec<usize> {
    assert_eq!(utilities.len(), costs.len());
    (0..utilities.len())
        .into_par_iter()
        .filter(|&j| {
            let (uj, cj) = (utilities[j], costs[j]);
            !(0..utilities.len()).any(|i| {
                let (ui, ci) = (utilities[i], costs[i]);
                weakly_dominates(ui, ci, uj, cj) && !weakly_dominates(uj, cj, ui, ci)
            })
        })
        .collect()
}

/// Brute-force consideration set: every grid point no other grid point
/// strictly dominates.
pub fn maximal_set_grid(
    u: &UtilityFunction,
    c1: &CostFunction,
    x_s: f64,
    grid: &Grid,
) -> Result<Vec<f64>> {
    Ok(maximal_indices_grid(u, c1, x_s, grid)?
        .into_iter()
        .map(|j| grid.point(j))
        .collect())
}

pub(crate) fn maximal_indices_grid(
    u: &UtilityFunction,
    c1: &CostFunction,
    x_s: f64,
    grid: &Grid,
) -> Result<Vec<usize>> {
    check_nonnegative("x_s", x_s)?;
    grid.validate()?;
    u.validate()?;
    c1.validate()?;
    let points = grid.points();
    let utilities = points
        .iter()
        .map(|&x| u.eval(x))
        .collect::<Result<Vec<_>>>()?;
    let costs: Vec<f64> = points.iter().map(|&x| c1.eval(distance(x, x_s))).collect();
    Ok(undominated_indices(&utilities, &costs))
}
