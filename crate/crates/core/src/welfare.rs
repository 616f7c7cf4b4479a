//! Pareto comparison of profiles and the welfare cost of deferring.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{classify_profile, payoff, EquilibriumCertificate, StrategyProfile};
use crate::model::{GameSpec, Grid};

/// Payoff differences smaller than this do not count as strict improvements.
pub const STRICTNESS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareReport {
    pub dominant: StrategyProfile,
    pub dominated: StrategyProfile,
    pub per_agent_gaps: Vec<f64>,
    pub total: f64,
}

/// Which precondition of the deferral loss failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossPrecondition {
    /// The reference profile is not a standard equilibrium, or is also an
    /// equilibrium after deferral.
    StandardProfile,
    /// The deferred profile is not an equilibrium after deferral, or is also a
    /// standard equilibrium.
    DeferredProfile,
    /// The standard profile does not Pareto-dominate the deferred one.
    ParetoDominance,
}

#[derive(Debug, Error)]
pub enum WelfareError {
    #[error("deferral loss precondition violated ({code:?}): {detail}")]
    PreconditionViolated {
        code: LossPrecondition,
        detail: String,
    },
    #[error(transparent)]
    Model(#[from] crate::error::Error),
}

fn payoffs(game: &GameSpec, p: &StrategyProfile) -> crate::error::Result<Vec<f64>> {
    (0..game.n()).map(|i| payoff(game, i, p)).collect()
}

/// True when every agent is at least as well off at `p` as at `q` and some
/// agent is strictly better off.
pub fn pareto_dominates(
    game: &GameSpec,
    p: &StrategyProfile,
    q: &StrategyProfile,
) -> crate::error::Result<bool> {
    let (up, uq) = (payoffs(game, p)?, payoffs(game, q)?);
    let weakly = up
        .iter()
        .zip(&uq)
        .all(|(a, b)| *a >= *b - STRICTNESS_TOLERANCE);
    let strictly = up
        .iter()
        .zip(&uq)
        .any(|(a, b)| *a > *b + STRICTNESS_TOLERANCE);
    Ok(weakly && strictly)
}

/// Per-agent payoff differences `U_i(p) - U_i(q)` and their sum, with no sign
/// requirement.
pub fn welfare_gap(
    game: &GameSpec,
    p: &StrategyProfile,
    q: &StrategyProfile,
) -> crate::error::Result<WelfareReport> {
    let (up, uq) = (payoffs(game, p)?, payoffs(game, q)?);
    let per_agent_gaps: Vec<f64> = up.iter().zip(&uq).map(|(a, b)| a - b).collect();
    Ok(WelfareReport {
        dominant: p.clone(),
        dominated: q.clone(),
        total: per_agent_gaps.iter().sum(),
        per_agent_gaps,
    })
}

/// Summed payoff shortfall of an equilibrium after deferral relative to a
/// standard equilibrium that Pareto-dominates it.
///
/// Both certificates are re-classified at their own tolerance: `standard`
/// must be a standard equilibrium and not an equilibrium after deferral,
/// `deferred` the reverse.
pub fn deferral_loss(
    game: &GameSpec,
    standard: &EquilibriumCertificate,
    deferred: &EquilibriumCertificate,
    grid: &Grid,
) -> Result<WelfareReport, WelfareError> {
    let violated = |code, detail: String| WelfareError::PreconditionViolated { code, detail };

    let s = classify_profile(game, &standard.profile, grid, standard.tolerance)?;
    match s.kind() {
        Some(crate::game::EquilibriumKind::Standard) => {}
        other => {
            return Err(violated(
                LossPrecondition::StandardProfile,
                format!(
                    "{:?} classifies as {}",
                    standard.profile.choices,
                    kind_label(other)
                ),
            ))
        }
    }
    let d = classify_profile(game, &deferred.profile, grid, deferred.tolerance)?;
    match d.kind() {
        Some(crate::game::EquilibriumKind::AfterDeferral) => {}
        other => {
            return Err(violated(
                LossPrecondition::DeferredProfile,
                format!(
                    "{:?} classifies as {}",
                    deferred.profile.choices,
                    kind_label(other)
                ),
            ))
        }
    }
    if !pareto_dominates(game, &standard.profile, &deferred.profile)? {
        return Err(violated(
            LossPrecondition::ParetoDominance,
            format!(
                "{:?} does not Pareto-dominate {:?}",
                standard.profile.choices, deferred.profile.choices
            ),
        ));
    }
    Ok(welfare_gap(game, &standard.profile, &deferred.profile)?)
}

fn kind_label(kind: Option<crate::game::EquilibriumKind>) -> &'static str {
    kind.map_or("not an equilibrium", |k| k.as_str())
}
