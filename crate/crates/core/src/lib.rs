//! Two-stage fundamental choice under social pressure.
//!
//! An agent first discards every alternative that is both worse for itself
//! and farther from the current social choice than some other alternative
//! ([`consideration`]). It then picks, from what is left, the alternative that
//! maximizes a comprehensive utility that also prices distance from the
//! expected future social choice ([`choice`]). With several agents the
//! current social choice is an aggregate of the others' choices, which gives
//! a game with two equilibrium notions: the standard one and the one after
//! deferral, where each agent is confined to its consideration set
//! ([`game`]). [`welfare`] measures what deferral costs.
//!
//! Every numeric routine works on a uniform [`Grid`] over `[0, x_max]`; the
//! grid step is the spatial resolution of every answer.

pub mod choice;
pub mod consideration;
pub mod error;
pub mod game;
pub mod model;
pub mod welfare;

pub use choice::{
    comprehensive_value, detect_trap, second_stage_choice, two_criteria_certificate,
    unconstrained_choice, unconstrained_optimum, ChoiceResult, SequentialCriteriaCertificate,
    TrapReport,
};
pub use consideration::{
    consideration_interval, maximal_set_grid, one_many_compare, ClosedInterval, DominanceVerdict,
};
pub use error::{Error, Result, Violation, ViolationCode};
pub use game::{
    aggregate_beliefs, aggregate_choices, best_response, best_response_curve, classify_profile,
    deferral_best_response, find_equilibria, find_equilibria_after_deferral, kinked_concave_argmax,
    payoff, ArgmaxSet, BestResponseCurve, BestResponseMethod, Classification,
    EquilibriumCertificate, EquilibriumKind, StrategyProfile,
};
pub use model::{
    distance, personal_optimum, rv_mean, AgentSpec, BeliefAggregator, ChoiceAggregator,
    ComprehensiveUtilityForm, CostFunction, FiniteRandomVariable, GameSpec, Grid, UtilityFunction,
    Validate,
};
pub use welfare::{
    deferral_loss, pareto_dominates, welfare_gap, LossPrecondition, WelfareError, WelfareReport,
};
