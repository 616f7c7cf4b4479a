//! Model primitives: personal utility, distance costs, beliefs about the
//! future social choice, the comprehensive-utility weights, and the grid that
//! every numeric scan runs on.
//!
//! Types carry public fields so scenarios can be written as plain data; the
//! invariants are checked by [`Validate`], and every operation that depends on
//! them validates its inputs before use.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation, ViolationCode};

/// Absolute tolerance on total probability mass.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Default number of grid intervals over `[0, x_max]`.
pub const DEFAULT_STEPS: usize = 4000;

/// Euclidean distance on the nonnegative half-line.
#[inline]
pub fn distance(x: f64, y: f64) -> f64 {
    (x - y).abs()
}

pub trait Validate {
    /// Every violated invariant; empty iff the value is well formed.
    fn violations(&self) -> Vec<Violation>;

    fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }
}

/// Uniform grid `x_j = j * x_max / steps` for `j = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(x_max: f64, steps: usize) -> Result<Self> {
        let g = Grid { x_max, steps };
        g.validate()?;
        Ok(g)
    }

    pub fn with_default_steps(x_max: f64) -> Result<Self> {
        Grid::new(x_max, DEFAULT_STEPS)
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.x_max / self.steps as f64
    }

    /// Number of grid points, `steps + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn point(&self, j: usize) -> f64 {
        if j >= self.steps {
            self.x_max
        } else {
            j as f64 * self.x_max / self.steps as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.point(j)).collect()
    }

    /// Index of the grid point nearest to `x`, clamped into the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let j = (x / self.step()).round();
        if j <= 0.0 {
            0
        } else if j >= self.steps as f64 {
            self.steps
        } else {
            j as usize
        }
    }

    pub fn snap(&self, x: f64) -> f64 {
        self.point(self.nearest_index(x))
    }

    /// Index of `x` if it is a grid point (up to a relative 1e-9 of a step).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        if !(x >= 0.0) {
            return None;
        }
        let j = self.nearest_index(x);
        if (self.point(j) - x).abs() <= 1e-9 * self.step() {
            Some(j)
        } else {
            None
        }
    }

    /// Indices of the grid points whose half-step cells meet `[lo, hi]`.
    ///
    /// Returns `None` when no grid point qualifies.
    pub fn cell_range(&self, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let h = self.step();
        let first = (lo / h - 0.5).ceil().max(0.0);
        let last = (hi / h + 0.5).floor().min(self.steps as f64);
        if first > last {
            None
        } else {
            Some((first as usize, last as usize))
        }
    }
}

impl Validate for Grid {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.x_max > 0.0) || !self.x_max.is_finite() {
            out.push(Violation::new(ViolationCode::NonPositiveBound, "x_max"));
        }
        if self.steps == 0 {
            out.push(Violation::new(ViolationCode::ZeroGridSteps, "steps"));
        }
        out
    }
}

/// Personal utility `u` with a finite maximizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityFunction {
    /// `u(x) = -a x^2 + b x + k`.
    Quadratic { a: f64, b: f64, k: f64 },
    /// Values at the points of `grid`, strictly single-peaked.
    Tabulated { grid: Grid, values: Vec<f64> },
}

impl UtilityFunction {
    pub fn quadratic(a: f64, b: f64, k: f64) -> Self {
        UtilityFunction::Quadratic { a, b, k }
    }

    /// Tabulates `f` on `grid`.
    pub fn tabulate(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        UtilityFunction::Tabulated { grid, values }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        crate::error::check_nonnegative("x", x)?;
        match self {
            UtilityFunction::Quadratic { a, b, k } => Ok(-a * x * x + b * x + k),
            UtilityFunction::Tabulated { grid, values } => grid
                .index_of(x)
                .and_then(|j| values.get(j).copied())
                .ok_or(Error::OffGrid { x }),
        }
    }

    /// Maximizer over the whole half-line.
    pub fn maximizer(&self) -> f64 {
        match self {
            UtilityFunction::Quadratic { a, b, .. } => (b / (2.0 * a)).max(0.0),
            UtilityFunction::Tabulated { grid, values } => grid.point(peak_index(values)),
        }
    }
}

fn peak_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = j;
        }
    }
    best
}

impl Validate for UtilityFunction {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match self {
            UtilityFunction::Quadratic { a, b, k } => {
                if !(a.is_finite() && b.is_finite() && k.is_finite()) {
                    out.push(Violation::new(
                        ViolationCode::NonFiniteParameter,
                        "quadratic",
                    ));
                } else if *a <= 0.0 {
                    out.push(Violation::new(
                        ViolationCode::NonPositiveCurvature,
                        "quadratic.a",
                    ));
                }
            }
            UtilityFunction::Tabulated { grid, values } => {
                out.extend(
                    grid.violations()
                        .into_iter()
                        .map(|v| v.nested("tabulated.grid")),
                );
                if values.len() != grid.len() {
                    out.push(Violation::new(
                        ViolationCode::TabulatedLengthMismatch,
                        "tabulated.values",
                    ));
                } else if values.iter().any(|v| !v.is_finite()) {
                    out.push(Violation::new(
                        ViolationCode::NonFiniteParameter,
                        "tabulated.values",
                    ));
                } else {
                    let peak = peak_index(values);
                    let rising = values[..=peak].windows(2).all(|w| w[0] < w[1]);
                    let falling = values[peak..].windows(2).all(|w| w[0] > w[1]);
                    if !(rising && falling) {
                        out.push(Violation::new(
                            ViolationCode::TabulatedNotStrictlyQuasiconcave,
                            "tabulated.values",
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Personal optimum `x*` restricted to `[0, grid.x_max]`.
pub fn personal_optimum(u: &UtilityFunction, grid: &Grid) -> Result<f64> {
    u.validate()?;
    Ok(u.maximizer().min(grid.x_max))
}

/// Nondecreasing cost of a distance, zero at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostFunction {
    Zero,
    Linear { d: f64 },
    Power { d: f64, p: f64 },
}

impl CostFunction {
    pub fn linear(d: f64) -> Self {
        CostFunction::Linear { d }
    }

    #[inline]
    pub fn eval(&self, delta: f64) -> f64 {
        match *self {
            CostFunction::Zero => 0.0,
            CostFunction::Linear { d } => d * delta,
            CostFunction::Power { d, p } => d * delta.powf(p),
        }
    }

    pub fn is_strictly_increasing(&self) -> bool {
        match *self {
            CostFunction::Zero => false,
            CostFunction::Linear { d } | CostFunction::Power { d, .. } => d > 0.0,
        }
    }

    /// Slope of a linear (or zero) cost; `None` for power costs.
    pub fn linear_slope(&self) -> Option<f64> {
        match *self {
            CostFunction::Zero => Some(0.0),
            CostFunction::Linear { d } => Some(d),
            CostFunction::Power { .. } => None,
        }
    }
}

impl Validate for CostFunction {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match *self {
            CostFunction::Zero => {}
            CostFunction::Linear { d } => {
                if !d.is_finite() {
                    out.push(Violation::new(
                        ViolationCode::NonFiniteParameter,
                        "linear.d",
                    ));
                } else if d < 0.0 {
                    out.push(Violation::new(ViolationCode::NegativeCostSlope, "linear.d"));
                }
            }
            CostFunction::Power { d, p } => {
                if !(d.is_finite() && p.is_finite()) {
                    out.push(Violation::new(ViolationCode::NonFiniteParameter, "power"));
                } else {
                    if d < 0.0 {
                        out.push(Violation::new(ViolationCode::NegativeCostSlope, "power.d"));
                    }
                    if p < 1.0 {
                        out.push(Violation::new(
                            ViolationCode::PowerExponentBelowOne,
                            "power.p",
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Finite-support belief about a future social choice.
///
/// Serialized as `{"atoms": [[value, probability], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteRandomVariable {
    pub atoms: Vec<(f64, f64)>,
}

impl FiniteRandomVariable {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let v = FiniteRandomVariable { atoms };
        v.validate()?;
        Ok(v)
    }

    pub fn point_mass(value: f64) -> Self {
        FiniteRandomVariable {
            atoms: vec![(value, 1.0)],
        }
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    pub fn min_value(&self) -> Option<f64> {
        self.atoms.iter().map(|a| a.0).reduce(f64::min)
    }

    pub fn max_value(&self) -> Option<f64> {
        self.atoms.iter().map(|a| a.0).reduce(f64::max)
    }

    /// Mixture of `components` with the given weights. Atoms with equal values
    /// are merged and the result is sorted by value.
    pub fn mixture(components: &[&FiniteRandomVariable], weights: &[f64]) -> Result<Self> {
        if components.len() != weights.len() {
            return Err(Error::Configuration(format!(
                "{} mixture weights for {} beliefs",
                weights.len(),
                components.len()
            )));
        }
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for (c, &w) in components.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            for &(v, p) in &c.atoms {
                match atoms.iter_mut().find(|a| a.0 == v) {
                    Some(a) => a.1 += w * p,
                    None => atoms.push((v, w * p)),
                }
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        FiniteRandomVariable::new(atoms)
    }
}

/// Expected value of a belief.
pub fn rv_mean(v: &FiniteRandomVariable) -> Result<f64> {
    v.validate()?;
    Ok(v.mean())
}

impl Validate for FiniteRandomVariable {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.atoms.is_empty() {
            out.push(Violation::new(ViolationCode::EmptyBelief, "atoms"));
            return out;
        }
        let mut total = 0.0;
        for (j, &(v, p)) in self.atoms.iter().enumerate() {
            let path = format!("atoms[{j}]");
            if !(v.is_finite() && p.is_finite()) {
                out.push(Violation::new(ViolationCode::NonFiniteParameter, path));
                continue;
            }
            if v < 0.0 {
                out.push(Violation::new(
                    ViolationCode::NegativeAtomValue,
                    path.clone(),
                ));
            }
            if !(p > 0.0 && p <= 1.0) {
                out.push(Violation::new(
                    ViolationCode::AtomProbabilityOutOfRange,
                    path.clone(),
                ));
            }
            if self.atoms[..j].iter().any(|a| a.0 == v) {
                out.push(Violation::new(ViolationCode::DuplicateAtomValue, path));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            out.push(Violation::new(
                ViolationCode::ProbabilityMassNotOne,
                "atoms",
            ));
        }
        out
    }
}

/// Weights of the additive comprehensive utility
/// `U = w_u u(x) - w_1 c1(|x - x_s|) - w_2 c2(|x - mean|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComprehensiveUtilityForm {
    pub w_u: f64,
    pub w_1: f64,
    pub w_2: f64,
}

impl Default for ComprehensiveUtilityForm {
    fn default() -> Self {
        ComprehensiveUtilityForm {
            w_u: 1.0,
            w_1: 1.0,
            w_2: 1.0,
        }
    }
}

impl ComprehensiveUtilityForm {
    pub fn new(w_u: f64, w_1: f64, w_2: f64) -> Self {
        ComprehensiveUtilityForm { w_u, w_1, w_2 }
    }

    #[inline]
    pub fn combine(&self, utility: f64, present_cost: f64, future_cost: f64) -> f64 {
        self.w_u * utility - self.w_1 * present_cost - self.w_2 * future_cost
    }
}

impl Validate for ComprehensiveUtilityForm {
    fn violations(&self) -> Vec<Violation> {
        [("w_u", self.w_u), ("w_1", self.w_1), ("w_2", self.w_2)]
            .into_iter()
            .filter(|(_, w)| !(*w >= 0.0 && w.is_finite()))
            .map(|(name, _)| Violation::new(ViolationCode::NegativeWeight, name))
            .collect()
    }
}

/// One agent's primitives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub utility: UtilityFunction,
    pub c1: CostFunction,
    pub c2: CostFunction,
    #[serde(default)]
    pub form: ComprehensiveUtilityForm,
    pub beliefs: Vec<FiniteRandomVariable>,
}

impl AgentSpec {
    /// Expected future social choice under the uniform mixture of the beliefs.
    pub fn future_mean(&self) -> f64 {
        if self.beliefs.is_empty() {
            return 0.0;
        }
        self.beliefs
            .iter()
            .map(FiniteRandomVariable::mean)
            .sum::<f64>()
            / self.beliefs.len() as f64
    }

    /// Violations when the agent plays in a game of `n` agents.
    pub fn game_violations(&self, n: usize) -> Vec<Violation> {
        let mut out = self.violations();
        if !self.beliefs.is_empty() && self.beliefs.len() != n.saturating_sub(1) {
            out.push(Violation::new(
                ViolationCode::BeliefCountMismatch,
                "beliefs",
            ));
        }
        out
    }
}

impl Validate for AgentSpec {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        out.extend(
            self.utility
                .violations()
                .into_iter()
                .map(|v| v.nested("utility")),
        );
        out.extend(self.c1.violations().into_iter().map(|v| v.nested("c1")));
        out.extend(self.c2.violations().into_iter().map(|v| v.nested("c2")));
        out.extend(self.form.violations().into_iter().map(|v| v.nested("form")));
        if self.beliefs.is_empty() {
            out.push(Violation::new(ViolationCode::MissingBeliefs, "beliefs"));
        }
        for (j, b) in self.beliefs.iter().enumerate() {
            out.extend(
                b.violations()
                    .into_iter()
                    .map(|v| v.nested(&format!("beliefs[{j}]"))),
            );
        }
        out
    }
}

/// How agent `i` collapses the other agents' choices into one reference point.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceAggregator {
    #[default]
    Mean,
    /// One weight per agent; agent `i`'s own weight is dropped and the rest renormalized.
    Weighted(Vec<f64>),
}

/// How agent `i` collapses its beliefs about the others into one belief.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefAggregator {
    /// Equal weight on each of the `n - 1` beliefs.
    #[default]
    Uniform,
    /// One weight per belief, shared by every agent.
    Mixture(Vec<f64>),
}

/// An `n`-agent game with choices bounded by `x_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub choice_aggregator: ChoiceAggregator,
    #[serde(default)]
    pub belief_aggregator: BeliefAggregator,
    pub x_max: f64,
}

impl GameSpec {
    pub fn new(agents: Vec<AgentSpec>, x_max: f64) -> Self {
        GameSpec {
            agents,
            choice_aggregator: ChoiceAggregator::Mean,
            belief_aggregator: BeliefAggregator::Uniform,
            x_max,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.agents.len()
    }
}

fn weights_ok(w: &[f64]) -> bool {
    w.iter().all(|x| *x >= 0.0 && x.is_finite())
        && (w.iter().sum::<f64>() - 1.0).abs() <= PROBABILITY_TOLERANCE
}

impl Validate for GameSpec {
    fn violations(&self) -> Vec<Violation> {
        let n = self.n();
        let mut out = Vec::new();
        if n < 2 {
            out.push(Violation::new(ViolationCode::TooFewAgents, "agents"));
        }
        if !(self.x_max > 0.0) || !self.x_max.is_finite() {
            out.push(Violation::new(ViolationCode::NonPositiveBound, "x_max"));
        }
        for (i, a) in self.agents.iter().enumerate() {
            out.extend(
                a.game_violations(n)
                    .into_iter()
                    .map(|v| v.nested(&format!("agents[{i}]"))),
            );
        }
        if let ChoiceAggregator::Weighted(w) = &self.choice_aggregator {
            if w.len() != n {
                out.push(Violation::new(
                    ViolationCode::AggregatorLengthMismatch,
                    "choice_aggregator",
                ));
            } else if !weights_ok(w) {
                out.push(Violation::new(
                    ViolationCode::AggregatorWeightsInvalid,
                    "choice_aggregator",
                ));
            }
        }
        if let BeliefAggregator::Mixture(w) = &self.belief_aggregator {
            if w.len() != n.saturating_sub(1) {
                out.push(Violation::new(
                    ViolationCode::AggregatorLengthMismatch,
                    "belief_aggregator",
                ));
            } else if !weights_ok(w) {
                out.push(Violation::new(
                    ViolationCode::AggregatorWeightsInvalid,
                    "belief_aggregator",
                ));
            }
        }
        out
    }
}
