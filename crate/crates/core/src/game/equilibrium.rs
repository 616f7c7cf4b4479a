//! Equilibria with and without deferral, on a grid.
//!
//! A profile is a standard equilibrium when no agent gains more than the
//! tolerance by deviating to any grid point. It is an equilibrium after
//! deferral when every agent's choice lies in the consideration set induced
//! by the others' choices and no agent gains by deviating within that set.
//!
//! Two-agent games are searched exhaustively: per-opponent best-response
//! tables for both agents, then every profile on the grid is tested against
//! them. Larger games use best-response iteration from a lattice of starting
//! profiles; every fixed point is re-verified, but completeness is not
//! claimed.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GameView, StrategyProfile};
use crate::consideration::ClosedInterval;
use crate::error::{Error, Result};
use crate::model::{CostFunction, GameSpec, Grid, UtilityFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Standard,
    AfterDeferral,
    Both,
}

impl EquilibriumKind {
    pub fn is_standard(self) -> bool {
        matches!(self, EquilibriumKind::Standard | EquilibriumKind::Both)
    }

    pub fn is_after_deferral(self) -> bool {
        matches!(self, EquilibriumKind::AfterDeferral | EquilibriumKind::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EquilibriumKind::Standard => "standard",
            EquilibriumKind::AfterDeferral => "after_deferral",
            EquilibriumKind::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCertificate {
    pub profile: StrategyProfile,
    pub kind: EquilibriumKind,
    /// Largest gain any agent gets from a grid deviation; for
    /// [`EquilibriumKind::AfterDeferral`] deviations are restricted to the
    /// agent's consideration set.
    pub max_regret: f64,
    pub tolerance: f64,
    /// `None` when the agent's first-stage cost is not strictly increasing.
    pub per_agent_consideration: Vec<Option<ClosedInterval>>,
}

/// Everything measured about a profile, equilibrium or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileAssessment {
    pub profile: StrategyProfile,
    pub standard_regret: f64,
    /// Restricted regret; `None` when some agent is outside its consideration set.
    pub deferral_regret: Option<f64>,
    pub per_agent_consideration: Vec<Option<ClosedInterval>>,
    pub in_consideration: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Equilibrium(EquilibriumCertificate),
    NotEquilibrium(ProfileAssessment),
}

impl Classification {
    pub fn kind(&self) -> Option<EquilibriumKind> {
        match self {
            Classification::Equilibrium(c) => Some(c.kind),
            Classification::NotEquilibrium(_) => None,
        }
    }

    pub fn certificate(&self) -> Option<&EquilibriumCertificate> {
        match self {
            Classification::Equilibrium(c) => Some(c),
            Classification::NotEquilibrium(_) => None,
        }
    }
}

fn assess(view: &GameView<'_>, profile: &StrategyProfile) -> Result<ProfileAssessment> {
    profile.check(view.game)?;
    let n = view.game.n();
    let mut standard_regret: f64 = 0.0;
    let mut deferral_regret: Option<f64> = Some(0.0);
    let mut intervals = Vec::with_capacity(n);
    let mut members = Vec::with_capacity(n);
    for i in 0..n {
        let reference = view.reference(i, &profile.choices)?;
        let agent = &view.agents[i];
        let own = agent.value_at(profile.choices[i], reference)?;
        let (_, best) = view.argmax(i, 0, view.grid.steps, reference);
        standard_regret = standard_regret.max(best - own);

        let interval = agent.interval(reference);
        let member = interval.is_some_and(|iv| view.in_interval(&iv, profile.choices[i]));
        deferral_regret = match (deferral_regret, member) {
            (Some(r), true) => {
                let (lo, hi) = view.deferral_range(i, reference)?;
                let (_, restricted) = view.argmax(i, lo, hi, reference);
                Some(r.max(restricted - own))
            }
            _ => None,
        };
        intervals.push(interval);
        members.push(member);
    }
    Ok(ProfileAssessment {
        profile: profile.clone(),
        standard_regret,
        deferral_regret,
        per_agent_consideration: intervals,
        in_consideration: members,
    })
}

fn certify(assessment: ProfileAssessment, tolerance: f64) -> Classification {
    let standard = assessment.standard_regret <= tolerance;
    let deferred = assessment.deferral_regret.is_some_and(|r| r <= tolerance);
    let (kind, max_regret) = match (standard, deferred) {
        (true, true) => (EquilibriumKind::Both, assessment.standard_regret),
        (true, false) => (EquilibriumKind::Standard, assessment.standard_regret),
        (false, true) => (
            EquilibriumKind::AfterDeferral,
            assessment.deferral_regret.unwrap_or_default(),
        ),
        (false, false) => return Classification::NotEquilibrium(assessment),
    };
    Classification::Equilibrium(EquilibriumCertificate {
        profile: assessment.profile,
        kind,
        max_regret,
        tolerance,
        per_agent_consideration: assessment.per_agent_consideration,
    })
}

/// Runs both equilibrium tests on `profile` and reports the strongest kind it
/// satisfies, or the measured regrets when it satisfies neither.
pub fn classify_profile(
    game: &GameSpec,
    profile: &StrategyProfile,
    grid: &Grid,
    tolerance: f64,
) -> Result<Classification> {
    let view = GameView::new(game, grid)?;
    Ok(certify(assess(&view, profile)?, tolerance))
}

/// Regret tolerance for `game` on `grid`.
///
/// For quadratic utilities with linear costs the payoffs on the grid are
/// exact up to rounding, so the tolerance is `1e-9 * (1 + scale)` with
/// `scale` the largest payoff magnitude on the diagonal. Otherwise it is a
/// bound on how much one agent's payoff can change over one grid step.
pub fn default_tolerance(game: &GameSpec, grid: &Grid) -> Result<f64> {
    let view = GameView::new(game, grid)?;
    let exact_family = game.agents.iter().all(|a| {
        matches!(a.utility, UtilityFunction::Quadratic { .. })
            && !matches!(a.c1, CostFunction::Power { .. })
            && !matches!(a.c2, CostFunction::Power { .. })
    });
    if exact_family {
        let mut scale: f64 = 0.0;
        for agent in &view.agents {
            for j in 0..grid.len() {
                scale = scale.max(agent.value(j, grid.point(j)).abs());
            }
        }
        Ok(1e-9 * (1.0 + scale))
    } else {
        let h = grid.step();
        let x_max = grid.x_max;
        let step_cost = |c: &CostFunction| c.eval(x_max) - c.eval((x_max - h).max(0.0));
        let mut bound: f64 = 0.0;
        for (agent, spec) in view.agents.iter().zip(&game.agents) {
            let du = agent
                .objective
                .utilities
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .fold(0.0, f64::max);
            let b = spec.form.w_u * du
                + spec.form.w_1 * step_cost(&spec.c1)
                + spec.form.w_2 * step_cost(&spec.c2);
            bound = bound.max(b);
        }
        Ok(bound)
    }
}

/// Knobs for the search in games with more than two agents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Starting values per agent, evenly spaced over `[0, x_max]`.
    pub lattice_per_axis: usize,
    /// Upper bound on the total number of starting profiles.
    pub max_starts: usize,
    /// Sweeps over all agents before a trajectory is abandoned.
    pub max_sweeps: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            lattice_per_axis: 11,
            max_starts: 11usize.pow(4),
            max_sweeps: 200,
        }
    }
}

/// Standard equilibria on the grid (kind `Standard` or `Both`).
pub fn find_equilibria(
    game: &GameSpec,
    grid: &Grid,
    tolerance: f64,
) -> Result<Vec<EquilibriumCertificate>> {
    find_equilibria_with(game, grid, tolerance, false, SearchOptions::default())
}

/// Equilibria after deferral on the grid (kind `AfterDeferral` or `Both`).
pub fn find_equilibria_after_deferral(
    game: &GameSpec,
    grid: &Grid,
    tolerance: f64,
) -> Result<Vec<EquilibriumCertificate>> {
    find_equilibria_with(game, grid, tolerance, true, SearchOptions::default())
}

pub fn find_equilibria_with(
    game: &GameSpec,
    grid: &Grid,
    tolerance: f64,
    deferral: bool,
    options: SearchOptions,
) -> Result<Vec<EquilibriumCertificate>> {
    if !(tolerance >= 0.0) {
        return Err(Error::Domain {
            what: "tolerance",
            value: tolerance,
        });
    }
    let view = GameView::new(game, grid)?;
    if deferral && view.agents.iter().any(|a| !a.has_interval) {
        return Err(Error::PropOneUnavailable);
    }
    let mut found = if game.n() == 2 {
        exhaustive_pair(&view, tolerance, deferral)?
    } else {
        iterate_responses(&view, tolerance, deferral, options)?
    };
    found.sort_by(|p, q| {
        p.profile
            .choices
            .iter()
            .zip(&q.profile.choices)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(found)
}

/// Acceptable responses of one agent to each opponent grid point.
struct ResponseTable {
    full_best: Vec<f64>,
    full: Vec<Vec<u32>>,
    restricted_best: Vec<f64>,
    /// Empty when deferral is not being searched.
    restricted: Vec<Vec<u32>>,
}

fn response_table(
    view: &GameView<'_>,
    i: usize,
    tolerance: f64,
    deferral: bool,
) -> Result<ResponseTable> {
    let m = view.grid.len();
    let rows: Vec<(f64, Vec<u32>, f64, Vec<u32>)> = (0..m)
        .into_par_iter()
        .map(|o| {
            let mut choices = [0.0; 2];
            choices[1 - i] = view.grid.point(o);
            let reference = view.reference(i, &choices)?;
            let agent = &view.agents[i];
            let values: Vec<f64> = (0..m).map(|j| agent.value(j, reference)).collect();
            let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let full = (0..m as u32)
                .filter(|&j| best - values[j as usize] <= tolerance)
                .collect();
            let (rbest, restricted) = if deferral {
                let (lo, hi) = view.deferral_range(i, reference)?;
                let rbest = values[lo..=hi]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                let set = (lo as u32..=hi as u32)
                    .filter(|&j| rbest - values[j as usize] <= tolerance)
                    .collect();
                (rbest, set)
            } else {
                (f64::NAN, Vec::new())
            };
            Ok((best, full, rbest, restricted))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = ResponseTable {
        full_best: Vec::with_capacity(m),
        full: Vec::with_capacity(m),
        restricted_best: Vec::with_capacity(m),
        restricted: Vec::with_capacity(m),
    };
    for (b, f, rb, r) in rows {
        table.full_best.push(b);
        table.full.push(f);
        table.restricted_best.push(rb);
        table.restricted.push(r);
    }
    Ok(table)
}

fn exhaustive_pair(
    view: &GameView<'_>,
    tolerance: f64,
    deferral: bool,
) -> Result<Vec<EquilibriumCertificate>> {
    let tables = [
        response_table(view, 0, tolerance, deferral)?,
        response_table(view, 1, tolerance, deferral)?,
    ];
    let accepts = |i: usize, own: u32, opponent: usize, restricted: bool| {
        let set = if restricted {
            &tables[i].restricted[opponent]
        } else {
            &tables[i].full[opponent]
        };
        set.binary_search(&own).is_ok()
    };
    let m = view.grid.len();
    let mut found = Vec::new();
    for q in 0..m {
        let candidates = if deferral {
            &tables[0].restricted[q]
        } else {
            &tables[0].full[q]
        };
        for &p in candidates {
            if !accepts(1, q as u32, p as usize, deferral) {
                continue;
            }
            let (p, q) = (p as usize, q);
            let profile = StrategyProfile::new(vec![view.grid.point(p), view.grid.point(q)]);
            let own = [
                view.agents[0].value(p, profile.choices[1]),
                view.agents[1].value(q, profile.choices[0]),
            ];
            let standard = accepts(0, p as u32, q, false) && accepts(1, q as u32, p, false);
            let standard_regret =
                (tables[0].full_best[q] - own[0]).max(tables[1].full_best[p] - own[1]);
            let after = deferral
                || (view.agents.iter().all(|a| a.has_interval)
                    && restricted_accepts(view, &profile, tolerance)?);
            let kind = match (standard, after) {
                (true, true) => EquilibriumKind::Both,
                (true, false) => EquilibriumKind::Standard,
                (false, true) => EquilibriumKind::AfterDeferral,
                (false, false) => unreachable!("candidate passed one of the tests"),
            };
            let max_regret = if standard {
                standard_regret
            } else {
                (tables[0].restricted_best[q] - own[0]).max(tables[1].restricted_best[p] - own[1])
            };
            let per_agent_consideration = vec![
                view.agents[0].interval(profile.choices[1]),
                view.agents[1].interval(profile.choices[0]),
            ];
            found.push(EquilibriumCertificate {
                profile,
                kind,
                max_regret,
                tolerance,
                per_agent_consideration,
            });
        }
    }
    Ok(found)
}

fn restricted_accepts(
    view: &GameView<'_>,
    profile: &StrategyProfile,
    tolerance: f64,
) -> Result<bool> {
    let a = assess(view, profile)?;
    Ok(a.deferral_regret.is_some_and(|r| r <= tolerance))
}

fn iterate_responses(
    view: &GameView<'_>,
    tolerance: f64,
    deferral: bool,
    options: SearchOptions,
) -> Result<Vec<EquilibriumCertificate>> {
    let n = view.game.n();
    let grid = view.grid;
    let mut per_axis = options.lattice_per_axis.max(2);
    while per_axis > 2
        && per_axis
            .checked_pow(n as u32)
            .map_or(true, |s| s > options.max_starts)
    {
        per_axis -= 1;
    }
    let axis: Vec<usize> = (0..per_axis)
        .map(|k| grid.nearest_index(grid.x_max * k as f64 / (per_axis - 1) as f64))
        .collect();

    let mut visited: HashSet<Vec<usize>> = HashSet::new();
    let mut fixed_points: Vec<Vec<usize>> = Vec::new();
    let total = per_axis.pow(n as u32);
    for start in 0..total {
        let mut state: Vec<usize> = (0..n)
            .map(|i| axis[(start / per_axis.pow(i as u32)) % per_axis])
            .collect();
        let mut converged = false;
        for _ in 0..options.max_sweeps {
            if !visited.insert(state.clone()) {
                break;
            }
            let mut changed = false;
            for i in 0..n {
                let choices: Vec<f64> = state.iter().map(|&j| grid.point(j)).collect();
                let reference = view.reference(i, &choices)?;
                let (lo, hi) = if deferral {
                    view.deferral_range(i, reference)?
                } else {
                    (0, grid.steps)
                };
                let (ties, _) = view.argmax(i, lo, hi, reference);
                if !ties.contains(&state[i]) {
                    state[i] = ties[0];
                    changed = true;
                }
            }
            if !changed {
                converged = true;
                break;
            }
        }
        if converged {
            fixed_points.push(state);
        }
    }

    let mut found = Vec::new();
    for state in fixed_points {
        let profile = StrategyProfile::new(state.iter().map(|&j| grid.point(j)).collect());
        if let Classification::Equilibrium(cert) = certify(assess(view, &profile)?, tolerance) {
            let wanted = if deferral {
                cert.kind.is_after_deferral()
            } else {
                cert.kind.is_standard()
            };
            if wanted {
                found.push(cert);
            }
        }
    }
    Ok(found)
}
