//! Second stage: the agent maximizes comprehensive utility over the
//! consideration set it committed to in the first stage.

use serde::{Deserialize, Serialize};

use crate::consideration::{consideration_interval, maximal_indices_grid, ClosedInterval};
use crate::error::{check_nonnegative, Error, Result};
use crate::model::{distance, AgentSpec, Grid, Validate};

/// Two values closer than this are tied in every argmax.
pub const VALUE_TIE_TOLERANCE: f64 = 1e-12;

#[inline]
pub(crate) fn combine(agent: &AgentSpec, utility: f64, x: f64, x_s: f64, future_mean: f64) -> f64 {
    agent.form.combine(
        utility,
        agent.c1.eval(distance(x, x_s)),
        agent.c2.eval(distance(x, future_mean)),
    )
}

/// An agent's comprehensive utility with `u` precomputed on a grid.
pub(crate) struct GridObjective<'a> {
    pub agent: &'a AgentSpec,
    pub points: Vec<f64>,
    pub utilities: Vec<f64>,
}

impl<'a> GridObjective<'a> {
    pub fn new(agent: &'a AgentSpec, grid: &Grid) -> Result<Self> {
        let points = grid.points();
        let utilities = points
            .iter()
            .map(|&x| agent.utility.eval(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(GridObjective {
            agent,
            points,
            utilities,
        })
    }

    #[inline]
    pub fn value(&self, j: usize, x_s: f64, future_mean: f64) -> f64 {
        combine(
            self.agent,
            self.utilities[j],
            self.points[j],
            x_s,
            future_mean,
        )
    }

    /// Tie set and maximum of the objective over indices `lo..=hi`.
    pub fn argmax(&self, lo: usize, hi: usize, x_s: f64, future_mean: f64) -> (Vec<usize>, f64) {
        argmax_by(lo, hi, |j| self.value(j, x_s, future_mean))
    }
}

pub(crate) fn argmax_by(lo: usize, hi: usize, f: impl Fn(usize) -> f64) -> (Vec<usize>, f64) {
    let values: Vec<f64> = (lo..=hi).map(&f).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= best - VALUE_TIE_TOLERANCE)
        .map(|(j, _)| lo + j)
        .collect();
    (ties, best)
}

/// Comprehensive utility at `x` given the current social choice `x_s`; the
/// expected future choice is the mean of the agent's beliefs.
pub fn comprehensive_value(agent: &AgentSpec, x: f64, x_s: f64) -> Result<f64> {
    check_nonnegative("x", x)?;
    check_nonnegative("x_s", x_s)?;
    agent.validate()?;
    Ok(combine(
        agent,
        agent.utility.eval(x)?,
        x,
        x_s,
        agent.future_mean(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceResult {
    /// Full tie set, ascending.
    pub chosen: Vec<f64>,
    pub value: f64,
    pub constrained: bool,
}

impl ChoiceResult {
    /// Smallest member of the tie set.
    pub fn representative(&self) -> f64 {
        self.chosen[0]
    }
}

struct IndexChoice {
    interval: ClosedInterval,
    chosen: Vec<usize>,
    value: f64,
}

fn second_stage_indices(agent: &AgentSpec, x_s: f64, grid: &Grid) -> Result<IndexChoice> {
    check_nonnegative("x_s", x_s)?;
    agent.validate()?;
    grid.validate()?;
    let interval = consideration_interval(&agent.utility, &agent.c1, x_s)?;
    let (lo, hi) = interval.grid_indices(grid).ok_or_else(|| {
        Error::Configuration(format!(
            "consideration interval [{}, {}] lies outside the grid [0, {}]",
            interval.lo, interval.hi, grid.x_max
        ))
    })?;
    let objective = GridObjective::new(agent, grid)?;
    let (chosen, value) = objective.argmax(lo, hi, x_s, agent.future_mean());
    Ok(IndexChoice {
        interval,
        chosen,
        value,
    })
}

/// Maximizes comprehensive utility over the grid image of the consideration
/// interval.
pub fn second_stage_choice(agent: &AgentSpec, x_s: f64, grid: &Grid) -> Result<ChoiceResult> {
    let c = second_stage_indices(agent, x_s, grid)?;
    Ok(ChoiceResult {
        chosen: c.chosen.iter().map(|&j| grid.point(j)).collect(),
        value: c.value,
        constrained: true,
    })
}

/// Maximizes comprehensive utility over the whole grid, ignoring the first
/// stage. The tie set is kept so callers can report multiplicity.
pub fn unconstrained_choice(agent: &AgentSpec, x_s: f64, grid: &Grid) -> Result<ChoiceResult> {
    check_nonnegative("x_s", x_s)?;
    agent.validate()?;
    grid.validate()?;
    let objective = GridObjective::new(agent, grid)?;
    let (chosen, value) = objective.argmax(0, grid.steps, x_s, agent.future_mean());
    Ok(ChoiceResult {
        chosen: chosen.iter().map(|&j| grid.point(j)).collect(),
        value,
        constrained: false,
    })
}

/// Smallest grid maximizer of comprehensive utility over `[0, x_max]`.
pub fn unconstrained_optimum(agent: &AgentSpec, x_s: f64, grid: &Grid) -> Result<f64> {
    Ok(unconstrained_choice(agent, x_s, grid)?.representative())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapReport {
    pub x_hat: f64,
    /// Number of grid points tied with `x_hat`.
    pub x_hat_ties: usize,
    pub interval: ClosedInterval,
    /// Canonical second-stage choice.
    pub chosen: f64,
    pub trapped: bool,
    pub utility_gap: f64,
}

/// Checks whether the unconstrained optimum falls outside the consideration
/// interval by more than one grid step.
pub fn detect_trap(agent: &AgentSpec, x_s: f64, grid: &Grid) -> Result<TrapReport> {
    let constrained = second_stage_indices(agent, x_s, grid)?;
    let free = unconstrained_choice(agent, x_s, grid)?;
    let x_hat = free.representative();
    let h = grid.step();
    let interval = constrained.interval;
    let trapped = x_hat < interval.lo - h || x_hat > interval.hi + h;
    let utility_gap = if trapped {
        (free.value - constrained.value).max(0.0)
    } else {
        0.0
    };
    Ok(TrapReport {
        x_hat,
        x_hat_ties: free.chosen.len(),
        interval,
        chosen: grid.point(constrained.chosen[0]),
        trapped,
        utility_gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialCriteriaCertificate {
    pub holds: bool,
    pub gamma: Vec<f64>,
    pub stage1_survivors: Vec<f64>,
}

/// Rebuilds the two-stage choice as two successive maximizations: strict
/// one-many dominance first, then strict comprehensive-utility comparison
/// among the survivors, and checks that the result matches
/// [`second_stage_choice`].
pub fn two_criteria_certificate(
    agent: &AgentSpec,
    x_s: f64,
    grid: &Grid,
) -> Result<SequentialCriteriaCertificate> {
    let choice = second_stage_indices(agent, x_s, grid)?;
    let survivors = maximal_indices_grid(&agent.utility, &agent.c1, x_s, grid)?;
    let objective = GridObjective::new(agent, grid)?;
    let mean = agent.future_mean();
    let values: Vec<f64> = survivors
        .iter()
        .map(|&j| objective.value(j, x_s, mean))
        .collect();
    // y beats x under the second criterion iff U(y) > U(x) beyond the tie tolerance.
    let gamma: Vec<usize> = survivors
        .iter()
        .zip(&values)
        .filter(|(_, &vx)| !values.iter().any(|&vy| vy > vx + VALUE_TIE_TOLERANCE))
        .map(|(&j, _)| j)
        .collect();
    Ok(SequentialCriteriaCertificate {
        holds: gamma == choice.chosen,
        gamma: gamma.iter().map(|&j| grid.point(j)).collect(),
        stage1_survivors: survivors.iter().map(|&j| grid.point(j)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        ComprehensiveUtilityForm, CostFunction, FiniteRandomVariable, UtilityFunction,
    };

    fn agent(d1: f64, d2: f64, belief: f64) -> AgentSpec {
        AgentSpec {
            utility: UtilityFunction::quadratic(2.0, 4.0, 5.0),
            c1: CostFunction::linear(d1),
            c2: CostFunction::linear(d2),
            form: ComprehensiveUtilityForm::default(),
            beliefs: vec![FiniteRandomVariable::point_mass(belief)],
        }
    }

    #[test]
    fn value_examples() {
        let a = agent(7.0, 4.0, 10.0);
        assert_eq!(comprehensive_value(&a, 2.0, 2.0).unwrap(), -27.0);
        let b = agent(7.0, 4.0, 2.5);
        assert_eq!(
            comprehensive_value(&b, 2.5, 2.5).unwrap(),
            a.utility.eval(2.5).unwrap()
        );
        let mut c = agent(7.0, 4.0, 10.0);
        c.form = ComprehensiveUtilityForm::new(1.0, 0.0, 0.0);
        assert_eq!(comprehensive_value(&c, 3.0, 0.0).unwrap(), -1.0);
    }

    #[test]
    fn constrained_choice_examples() {
        let a = agent(7.0, 4.0, 10.0);
        let grid = Grid::new(8.0, 3200).unwrap();
        let r = second_stage_choice(&a, 4.0, &grid).unwrap();
        assert_eq!(r.chosen, vec![3.75]);
        assert_eq!(r.value, comprehensive_value(&a, 3.75, 4.0).unwrap());

        let r = second_stage_choice(&a, 1.0, &grid).unwrap();
        assert_eq!(r.chosen, vec![1.0]);

        let mut z = a.clone();
        z.form = ComprehensiveUtilityForm::new(1.0, 0.0, 0.0);
        assert_eq!(
            second_stage_choice(&z, 4.0, &grid).unwrap().chosen,
            vec![1.0]
        );
    }

    #[test]
    fn unconstrained_examples() {
        let grid = Grid::new(10.0, 4000).unwrap();
        let a = agent(1.0, 10.0, 6.0);
        assert_eq!(unconstrained_optimum(&a, 2.0, &grid).unwrap(), 3.25);
        let mut z = a.clone();
        z.form = ComprehensiveUtilityForm::new(1.0, 0.0, 0.0);
        assert_eq!(unconstrained_optimum(&z, 2.0, &grid).unwrap(), 1.0);
        let p = agent(1.0, 10.0, 1.0);
        assert_eq!(unconstrained_optimum(&p, 1.0, &grid).unwrap(), 1.0);
    }

    #[test]
    fn trap_examples() {
        let grid = Grid::new(10.0, 4000).unwrap();
        let r = detect_trap(&agent(1.0, 10.0, 6.0), 2.0, &grid).unwrap();
        assert!(r.trapped);
        assert_eq!(r.x_hat, 3.25);
        assert_eq!(r.interval, ClosedInterval::new(1.0, 2.0));
        assert!(r.utility_gap > 0.0);

        // belief mass centred inside the interval
        let r = detect_trap(&agent(1.0, 10.0, 1.5), 2.0, &grid).unwrap();
        assert!(!r.trapped);
        assert_eq!(r.utility_gap, 0.0);
    }

    #[test]
    fn certificate_examples() {
        let grid = Grid::new(8.0, 800).unwrap();
        let c = two_criteria_certificate(&agent(7.0, 4.0, 10.0), 4.0, &grid).unwrap();
        assert!(c.holds);
        assert_eq!(c.gamma, vec![3.75]);
        assert_eq!(c.stage1_survivors.len(), 301);
        let c = two_criteria_certificate(&agent(7.0, 4.0, 10.0), 1.0, &grid).unwrap();
        assert!(c.holds);
        assert_eq!(c.gamma, vec![1.0]);
        assert_eq!(c.stage1_survivors, vec![1.0]);
    }

    #[test]
    fn zero_cost_is_a_precondition_failure() {
        let mut a = agent(7.0, 4.0, 10.0);
        a.c1 = CostFunction::Zero;
        let grid = Grid::new(8.0, 100).unwrap();
        assert!(matches!(
            second_stage_choice(&a, 4.0, &grid),
            Err(Error::PropOneUnavailable)
        ));
    }
}
