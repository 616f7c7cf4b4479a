//! The `n`-agent game: each agent's current social reference is an aggregate
//! of the others' choices, its future reference is a mixture of its beliefs,
//! and its payoff is its comprehensive utility at those references.

mod equilibrium;
mod kinked;

pub use equilibrium::{
    classify_profile, default_tolerance, find_equilibria, find_equilibria_after_deferral,
    find_equilibria_with, Classification, EquilibriumCertificate, EquilibriumKind,
    ProfileAssessment, SearchOptions,
};
pub use kinked::{kinked_concave_argmax, Kink, KinkedConcave};

use serde::{Deserialize, Serialize};

use crate::choice::{argmax_by, combine, GridObjective};
use crate::consideration::{interval_between, ClosedInterval};
use crate::error::{Error, Result};
use crate::model::{
    BeliefAggregator, ChoiceAggregator, CostFunction, FiniteRandomVariable, GameSpec, Grid,
    UtilityFunction, Validate,
};

/// One choice per agent, each in `[0, x_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub choices: Vec<f64>,
}

impl StrategyProfile {
    pub fn new(choices: Vec<f64>) -> Self {
        StrategyProfile { choices }
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn check(&self, game: &GameSpec) -> Result<()> {
        if self.choices.len() != game.n() {
            return Err(Error::Configuration(format!(
                "profile has {} choices for {} agents",
                self.choices.len(),
                game.n()
            )));
        }
        for &x in &self.choices {
            if !(x >= 0.0 && x <= game.x_max) {
                return Err(Error::Domain {
                    what: "profile choice",
                    value: x,
                });
            }
        }
        Ok(())
    }
}

fn check_agent(game: &GameSpec, i: usize) -> Result<()> {
    if game.n() < 2 {
        return Err(Error::Configuration(format!(
            "a game needs at least two agents, got {}",
            game.n()
        )));
    }
    if i >= game.n() {
        return Err(Error::Configuration(format!(
            "agent index {i} out of range for {} agents",
            game.n()
        )));
    }
    Ok(())
}

/// Reference point of agent `i`: the (weighted) mean of the other agents'
/// choices.
pub fn aggregate_choices(game: &GameSpec, i: usize, profile: &StrategyProfile) -> Result<f64> {
    check_agent(game, i)?;
    if profile.len() != game.n() {
        return Err(Error::Configuration(format!(
            "profile has {} choices for {} agents",
            profile.len(),
            game.n()
        )));
    }
    reference_point(&game.choice_aggregator, i, &profile.choices)
}

fn reference_point(aggregator: &ChoiceAggregator, i: usize, choices: &[f64]) -> Result<f64> {
    let n = choices.len();
    match aggregator {
        ChoiceAggregator::Mean => {
            let total: f64 = choices
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, x)| x)
                .sum();
            Ok(total / (n - 1) as f64)
        }
        ChoiceAggregator::Weighted(w) => {
            if w.len() != n {
                return Err(Error::Configuration(format!(
                    "{} aggregation weights for {n} agents",
                    w.len()
                )));
            }
            let mass: f64 = w
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, w)| w)
                .sum();
            if !(mass > 0.0) {
                return Err(Error::Configuration(format!(
                    "agent {i} puts no weight on any other agent"
                )));
            }
            Ok(choices
                .iter()
                .zip(w)
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, (x, w))| (w / mass) * x)
                .sum())
        }
    }
}

/// Agent `i`'s belief about the future social choice: the configured mixture
/// of its beliefs about each other agent.
pub fn aggregate_beliefs(game: &GameSpec, i: usize) -> Result<FiniteRandomVariable> {
    check_agent(game, i)?;
    let beliefs: Vec<&FiniteRandomVariable> = game.agents[i].beliefs.iter().collect();
    for b in &beliefs {
        b.validate()?;
    }
    let uniform;
    let weights: &[f64] = match &game.belief_aggregator {
        BeliefAggregator::Uniform => {
            uniform = vec![1.0 / beliefs.len().max(1) as f64; beliefs.len()];
            &uniform
        }
        BeliefAggregator::Mixture(w) => w,
    };
    FiniteRandomVariable::mixture(&beliefs, weights)
}

/// Payoff of agent `i` at `profile`.
pub fn payoff(game: &GameSpec, i: usize, profile: &StrategyProfile) -> Result<f64> {
    game.validate()?;
    profile.check(game)?;
    let reference = aggregate_choices(game, i, profile)?;
    let future = aggregate_beliefs(game, i)?.mean();
    let agent = &game.agents[i];
    let x = profile.choices[i];
    Ok(combine(agent, agent.utility.eval(x)?, x, reference, future))
}

/// Maximizer set of a best response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgmaxSet {
    /// Grid maximizers, ascending.
    Points(Vec<f64>),
    Interval(ClosedInterval),
}

impl ArgmaxSet {
    /// Smallest maximizer.
    pub fn representative(&self) -> f64 {
        match self {
            ArgmaxSet::Points(p) => p[0],
            ArgmaxSet::Interval(iv) => iv.lo,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            ArgmaxSet::Points(p) => p.contains(&x),
            ArgmaxSet::Interval(iv) => iv.contains(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BestResponseMethod {
    GridOracle,
    Exact,
}

/// Per-agent data precomputed for repeated payoff evaluation on one grid.
pub(crate) struct AgentView<'a> {
    pub objective: GridObjective<'a>,
    pub future_mean: f64,
    pub personal_optimum: f64,
    /// Whether the closed-form consideration interval applies.
    pub has_interval: bool,
}

impl AgentView<'_> {
    #[inline]
    pub fn value(&self, j: usize, reference: f64) -> f64 {
        self.objective.value(j, reference, self.future_mean)
    }

    /// Payoff at an arbitrary choice `x`; identical to [`Self::value`] on grid points.
    pub fn value_at(&self, x: f64, reference: f64) -> Result<f64> {
        let agent = self.objective.agent;
        Ok(combine(
            agent,
            agent.utility.eval(x)?,
            x,
            reference,
            self.future_mean,
        ))
    }

    pub fn interval(&self, reference: f64) -> Option<ClosedInterval> {
        self.has_interval
            .then(|| interval_between(self.personal_optimum, reference))
    }
}

/// A validated game together with its grid and per-agent views.
pub(crate) struct GameView<'a> {
    pub game: &'a GameSpec,
    pub grid: Grid,
    pub agents: Vec<AgentView<'a>>,
}

impl<'a> GameView<'a> {
    pub fn new(game: &'a GameSpec, grid: &Grid) -> Result<Self> {
        game.validate()?;
        grid.validate()?;
        if (grid.x_max - game.x_max).abs() > 1e-12 * game.x_max.max(1.0) {
            return Err(Error::Configuration(format!(
                "grid bound {} differs from the game bound {}",
                grid.x_max, game.x_max
            )));
        }
        let agents = game
            .agents
            .iter()
            .enumerate()
            .map(|(i, agent)| {
                Ok(AgentView {
                    objective: GridObjective::new(agent, grid)?,
                    future_mean: aggregate_beliefs(game, i)?.mean(),
                    personal_optimum: agent.utility.maximizer(),
                    has_interval: agent.c1.is_strictly_increasing(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GameView {
            game,
            grid: *grid,
            agents,
        })
    }

    pub fn reference(&self, i: usize, choices: &[f64]) -> Result<f64> {
        reference_point(&self.game.choice_aggregator, i, choices)
    }

    /// Inclusive index range agent `i` may choose from after deferral.
    pub fn deferral_range(&self, i: usize, reference: f64) -> Result<(usize, usize)> {
        let iv = self.agents[i]
            .interval(reference)
            .ok_or(Error::PropOneUnavailable)?;
        iv.grid_indices(&self.grid).ok_or_else(|| {
            Error::Configuration(format!(
                "consideration interval [{}, {}] of agent {i} lies outside the grid",
                iv.lo, iv.hi
            ))
        })
    }

    /// Whether `x` belongs to the grid image of `iv`.
    pub fn in_interval(&self, iv: &ClosedInterval, x: f64) -> bool {
        match self.grid.index_of(x) {
            Some(j) => iv
                .grid_indices(&self.grid)
                .is_some_and(|(lo, hi)| lo <= j && j <= hi),
            None => iv.contains_on_grid(x, &self.grid),
        }
    }

    pub fn argmax(&self, i: usize, lo: usize, hi: usize, reference: f64) -> (Vec<usize>, f64) {
        let view = &self.agents[i];
        argmax_by(lo, hi, |j| view.value(j, reference))
    }
}

fn with_opponents(game: &GameSpec, i: usize, opponents: &StrategyProfile) -> Result<Vec<f64>> {
    if opponents.len() != game.n() {
        return Err(Error::Configuration(format!(
            "profile has {} choices for {} agents",
            opponents.len(),
            game.n()
        )));
    }
    let mut choices = opponents.choices.clone();
    // agent i's own entry never enters its reference point
    choices[i] = 0.0;
    StrategyProfile::new(choices.clone()).check(game)?;
    Ok(choices)
}

/// Best response of agent `i` to the other entries of `opponents` (its own
/// entry is ignored), over `[0, x_max]`.
pub fn best_response(
    game: &GameSpec,
    i: usize,
    opponents: &StrategyProfile,
    grid: &Grid,
    method: BestResponseMethod,
) -> Result<ArgmaxSet> {
    check_agent(game, i)?;
    let choices = with_opponents(game, i, opponents)?;
    match method {
        BestResponseMethod::GridOracle => {
            let view = GameView::new(game, grid)?;
            let reference = view.reference(i, &choices)?;
            let (ties, _) = view.argmax(i, 0, grid.steps, reference);
            Ok(ArgmaxSet::Points(
                ties.into_iter().map(|j| grid.point(j)).collect(),
            ))
        }
        BestResponseMethod::Exact => {
            game.validate()?;
            let reference = reference_point(&game.choice_aggregator, i, &choices)?;
            let future = aggregate_beliefs(game, i)?.mean();
            let f = exact_objective(game, i, reference, future)?;
            Ok(ArgmaxSet::Interval(f.argmax(0.0, game.x_max)?))
        }
    }
}

/// Agent `i`'s payoff as a kinked concave function, for quadratic utility and
/// linear (or zero) costs.
pub fn exact_objective(
    game: &GameSpec,
    i: usize,
    reference: f64,
    future_mean: f64,
) -> Result<KinkedConcave> {
    check_agent(game, i)?;
    let agent = &game.agents[i];
    let UtilityFunction::Quadratic { a, b, k } = agent.utility else {
        return Err(Error::MethodUnsupported(
            "exact best response needs a quadratic utility".into(),
        ));
    };
    let slope = |c: &CostFunction| {
        c.linear_slope().ok_or_else(|| {
            Error::MethodUnsupported("exact best response needs linear or zero costs".into())
        })
    };
    let (d1, d2) = (slope(&agent.c1)?, slope(&agent.c2)?);
    let form = agent.form;
    if !(form.w_u > 0.0) {
        return Err(Error::MethodUnsupported(
            "exact best response needs a positive utility weight".into(),
        ));
    }
    Ok(KinkedConcave::new(
        form.w_u * a,
        form.w_u * b,
        form.w_u * k,
        vec![
            Kink::new(reference, form.w_1 * d1),
            Kink::new(future_mean, form.w_2 * d2),
        ],
    ))
}

/// Best response of agent `i` restricted to the consideration set its
/// reference point induces.
pub fn deferral_best_response(
    game: &GameSpec,
    i: usize,
    opponents: &StrategyProfile,
    grid: &Grid,
) -> Result<ArgmaxSet> {
    check_agent(game, i)?;
    let choices = with_opponents(game, i, opponents)?;
    let view = GameView::new(game, grid)?;
    let reference = view.reference(i, &choices)?;
    let (lo, hi) = view.deferral_range(i, reference)?;
    let (ties, _) = view.argmax(i, lo, hi, reference);
    Ok(ArgmaxSet::Points(
        ties.into_iter().map(|j| grid.point(j)).collect(),
    ))
}

/// Agent `i`'s best response as the other agents' choices sweep a list of
/// values (all others play the same value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseCurve {
    pub agent: usize,
    pub deferral: bool,
    pub opponent: Vec<f64>,
    pub argmax: Vec<Vec<f64>>,
}

impl BestResponseCurve {
    pub fn representatives(&self) -> Vec<f64> {
        self.argmax.iter().map(|s| s[0]).collect()
    }
}

pub fn best_response_curve(
    game: &GameSpec,
    i: usize,
    grid: &Grid,
    opponent_values: &[f64],
    deferral: bool,
) -> Result<BestResponseCurve> {
    check_agent(game, i)?;
    let view = GameView::new(game, grid)?;
    let mut argmax = Vec::with_capacity(opponent_values.len());
    for &v in opponent_values {
        let mut choices = vec![v; game.n()];
        choices[i] = 0.0;
        StrategyProfile::new(choices.clone()).check(game)?;
        let reference = view.reference(i, &choices)?;
        let (lo, hi) = if deferral {
            view.deferral_range(i, reference)?
        } else {
            (0, grid.steps)
        };
        let (ties, _) = view.argmax(i, lo, hi, reference);
        argmax.push(ties.into_iter().map(|j| grid.point(j)).collect());
    }
    Ok(BestResponseCurve {
        agent: i,
        deferral,
        opponent: opponent_values.to_vec(),
        argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentSpec, ComprehensiveUtilityForm};

    fn agent(d1: f64, d2: f64, belief: f64) -> AgentSpec {
        AgentSpec {
            utility: UtilityFunction::quadratic(2.0, 4.0, 5.0),
            c1: CostFunction::linear(d1),
            c2: if d2 == 0.0 {
                CostFunction::Zero
            } else {
                CostFunction::linear(d2)
            },
            form: ComprehensiveUtilityForm::default(),
            beliefs: vec![FiniteRandomVariable::point_mass(belief)],
        }
    }

    fn akerlof() -> GameSpec {
        GameSpec::new(vec![agent(4.0, 0.0, 1.0), agent(4.0, 0.0, 1.0)], 8.0)
    }

    fn worked() -> GameSpec {
        GameSpec::new(vec![agent(7.0, 4.0, 10.0), agent(16.0, 4.0, 10.0)], 40.0)
    }

    fn three(weights: Option<Vec<f64>>) -> GameSpec {
        let a = AgentSpec {
            beliefs: vec![FiniteRandomVariable::point_mass(1.0); 2],
            ..agent(4.0, 0.0, 1.0)
        };
        let mut g = GameSpec::new(vec![a.clone(), a.clone(), a], 8.0);
        if let Some(w) = weights {
            g.choice_aggregator = ChoiceAggregator::Weighted(w);
        }
        g
    }

    #[test]
    fn aggregation() {
        let p = StrategyProfile::new(vec![3.0, 4.0]);
        assert_eq!(aggregate_choices(&akerlof(), 0, &p).unwrap(), 4.0);
        let p = StrategyProfile::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(aggregate_choices(&three(None), 0, &p).unwrap(), 2.5);
        let p = StrategyProfile::new(vec![1.0, 4.0, 8.0]);
        let w = three(Some(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]));
        assert!((aggregate_choices(&w, 0, &p).unwrap() - 6.0).abs() < 1e-12);
        let single = GameSpec::new(vec![agent(4.0, 0.0, 1.0)], 8.0);
        assert!(aggregate_choices(&single, 0, &StrategyProfile::new(vec![1.0])).is_err());
    }

    #[test]
    fn belief_mixture() {
        let b = aggregate_beliefs(&worked(), 0).unwrap();
        assert_eq!(b, FiniteRandomVariable::point_mass(10.0));
        let mut g = three(None);
        g.agents[0].beliefs = vec![
            FiniteRandomVariable::point_mass(2.0),
            FiniteRandomVariable::point_mass(6.0),
        ];
        g.belief_aggregator = BeliefAggregator::Mixture(vec![0.5, 0.5]);
        let b = aggregate_beliefs(&g, 0).unwrap();
        assert_eq!(b.atoms, vec![(2.0, 0.5), (6.0, 0.5)]);
        assert_eq!(b.mean(), 4.0);
        g.belief_aggregator = BeliefAggregator::Mixture(vec![1.0]);
        assert!(aggregate_beliefs(&g, 0).is_err());
    }

    #[test]
    fn payoffs() {
        let p = StrategyProfile::new(vec![1.0, 1.0]);
        assert_eq!(payoff(&akerlof(), 0, &p).unwrap(), 7.0);
        let p = StrategyProfile::new(vec![2.0, 2.0]);
        assert_eq!(payoff(&worked(), 0, &p).unwrap(), -27.0);
        let g = GameSpec::new(vec![agent(7.0, 4.0, 2.5), agent(16.0, 4.0, 2.5)], 8.0);
        let p = StrategyProfile::new(vec![2.5, 2.5]);
        assert_eq!(
            payoff(&g, 1, &p).unwrap(),
            g.agents[1].utility.eval(2.5).unwrap()
        );
    }

    #[test]
    fn best_responses() {
        let grid = Grid::new(8.0, 1600).unwrap();
        for (x, expected) in [(0.0, 0.0), (1.3, 1.3), (2.0, 2.0), (5.5, 2.0)] {
            let opp = StrategyProfile::new(vec![0.0, x]);
            let r =
                best_response(&akerlof(), 0, &opp, &grid, BestResponseMethod::GridOracle).unwrap();
            assert_eq!(r.representative(), expected, "x = {x}");
            let e = best_response(&akerlof(), 0, &opp, &grid, BestResponseMethod::Exact).unwrap();
            assert_eq!(e.representative(), expected, "x = {x}");
        }
        let grid = Grid::new(40.0, 4000).unwrap();
        let opp = StrategyProfile::new(vec![0.0, 6.0]);
        let r = best_response(&worked(), 0, &opp, &grid, BestResponseMethod::GridOracle).unwrap();
        assert_eq!(r, ArgmaxSet::Points(vec![3.75]));
        let r = best_response(&worked(), 0, &opp, &grid, BestResponseMethod::Exact).unwrap();
        assert_eq!(r, ArgmaxSet::Interval(ClosedInterval::singleton(3.75)));
    }

    #[test]
    fn exact_rejects_power_costs() {
        let mut g = akerlof();
        g.agents[0].c1 = CostFunction::Power { d: 1.0, p: 2.0 };
        let grid = Grid::new(8.0, 100).unwrap();
        let opp = StrategyProfile::new(vec![0.0, 1.0]);
        assert!(matches!(
            best_response(&g, 0, &opp, &grid, BestResponseMethod::Exact),
            Err(Error::MethodUnsupported(_))
        ));
    }

    #[test]
    fn deferral_responses() {
        let grid = Grid::new(40.0, 4000).unwrap();
        let opp = StrategyProfile::new(vec![3.75, 0.0]);
        let r = deferral_best_response(&worked(), 1, &opp, &grid).unwrap();
        assert_eq!(r, ArgmaxSet::Points(vec![3.75]));
        let opp = StrategyProfile::new(vec![1.0, 0.0]);
        let r = deferral_best_response(&worked(), 1, &opp, &grid).unwrap();
        assert_eq!(r, ArgmaxSet::Points(vec![1.0]));
        let grid = Grid::new(8.0, 1600).unwrap();
        let opp = StrategyProfile::new(vec![0.0, 1.5]);
        let r = deferral_best_response(&akerlof(), 0, &opp, &grid).unwrap();
        assert_eq!(r, ArgmaxSet::Points(vec![1.5]));
    }

    #[test]
    fn curve_shapes_of_the_worked_game() {
        let grid = Grid::new(40.0, 4000).unwrap();
        let sweep = [0.0, 0.1, 0.25, 2.0, 3.75, 5.0, 6.0, 9.0];
        let b1 = best_response_curve(&worked(), 0, &grid, &sweep, false).unwrap();
        assert_eq!(
            b1.representatives(),
            vec![0.25, 0.25, 0.25, 2.0, 3.75, 3.75, 3.75, 3.75]
        );
        let b2 = best_response_curve(&worked(), 1, &grid, &sweep, false).unwrap();
        assert_eq!(
            b2.representatives(),
            vec![0.0, 0.1, 0.25, 2.0, 3.75, 5.0, 6.0, 6.0]
        );
    }
}
