use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use deferral_core::game::{default_tolerance, exact_objective, ProfileAssessment};
use deferral_core::{
    aggregate_beliefs, best_response_curve, classify_profile, consideration_interval,
    deferral_loss, detect_trap, find_equilibria, find_equilibria_after_deferral, maximal_set_grid,
    second_stage_choice, two_criteria_certificate, welfare_gap, Classification,
    EquilibriumCertificate, EquilibriumKind, GameSpec, Grid, StrategyProfile,
};

use crate::error::{CliError, CliResult};
use crate::report::{fmt_num, write_all, OutputFile, Table};
use crate::reproduce::{self, Case};
use crate::scenario::{load_profile, Scenario};

#[derive(Debug, Parser)]
#[command(
    name = "deferral",
    version,
    about = "Two-stage choice and deferral equilibria on a grid"
)]
pub struct Cli {
    /// Directory for CSV output; overrides the scenario's `output_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Consideration interval and brute-force maximal set.
    Consider(ScenarioArg),
    /// Second-stage choice, unconstrained optimum and trap report.
    Choose(ScenarioArg),
    /// Two-sequential-criteria certificate.
    Certify(ScenarioArg),
    /// Best-response curve of one agent while all others play a swept value.
    BestResponse(BestResponseArgs),
    /// Equilibrium set on the grid.
    Equilibria(EquilibriaArgs),
    /// Welfare gap between two profiles, gated as a deferral loss.
    Loss(LossArgs),
    /// Rebuild a shipped scenario and compare against reference constants.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArg {
    pub scenario: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Grid,
    Exact,
}

#[derive(Debug, Args)]
pub struct BestResponseArgs {
    pub scenario: PathBuf,
    /// 1-based agent index.
    #[arg(long)]
    pub agent: usize,
    /// Opponent values as `lo:hi:n`, `n` evenly spaced points.
    #[arg(long)]
    pub sweep: Sweep,
    /// Restrict responses to the consideration set.
    #[arg(long)]
    pub deferral: bool,
    #[arg(long, value_enum, default_value = "grid")]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct EquilibriaArgs {
    pub scenario: PathBuf,
    /// Search equilibria after deferral instead of standard equilibria.
    #[arg(long)]
    pub deferral: bool,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub standard: PathBuf,
    #[arg(long)]
    pub deferred: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long = "case", value_enum)]
    pub case: Case,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|k| {
                if k + 1 == self.n {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * k as f64 / last
                }
            })
            .collect()
    }
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(format!("expected lo:hi:n, got {s:?}"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        let (lo, hi) = (num(lo)?, num(hi)?);
        let n: usize = n.trim().parse().map_err(|e| format!("{n:?}: {e}"))?;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
            return Err(format!(
                "sweep bounds must satisfy 0 <= lo <= hi, got {lo}:{hi}"
            ));
        }
        if n == 0 {
            return Err("sweep needs at least one point".into());
        }
        Ok(Sweep { lo, hi, n })
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing human-readable output to `stdout`.
pub fn run_args<I, T>(args: I, stdout: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Validation(e.to_string()))?;
    run(&cli, stdout)
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Consider(a) => consider(&Scenario::load(&a.scenario)?, out, stdout),
        Command::Choose(a) => choose(&Scenario::load(&a.scenario)?, out, stdout),
        Command::Certify(a) => certify(&Scenario::load(&a.scenario)?, out, stdout),
        Command::BestResponse(a) => best_response(&Scenario::load(&a.scenario)?, a, out, stdout),
        Command::Equilibria(a) => {
            equilibria(&Scenario::load(&a.scenario)?, a.deferral, out, stdout)
        }
        Command::Loss(a) => loss(&Scenario::load(&a.scenario)?, a, out, stdout),
        Command::Reproduce(a) => reproduce::run(a.case, out, stdout),
    }
}

pub(crate) fn output_dir(flag: Option<&Path>, scenario: &Scenario) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn emit(stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

fn finish(files: Vec<OutputFile>, text: String, stdout: &mut dyn Write) -> CliResult<()> {
    write_all(&files)?;
    let mut text = text;
    for f in &files {
        text.push_str(&format!("wrote {}\n", f.path.display()));
    }
    emit(stdout, &text)
}

pub(crate) fn quantity_table(rows: &[(&str, String)]) -> Table {
    let mut t = Table::new(["quantity", "value"]);
    for (q, v) in rows {
        t.push(vec![q.to_string(), v.clone()]);
    }
    t
}

pub(crate) fn tolerance_for(scenario: &Scenario, game: &GameSpec, grid: &Grid) -> CliResult<f64> {
    match scenario.tolerance {
        Some(t) => Ok(t),
        None => Ok(default_tolerance(game, grid)?),
    }
}

fn consider(s: &Scenario, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let (agent, x_s) = s.agent()?;
    let grid = s.grid()?;
    let interval = consideration_interval(&agent.utility, &agent.c1, x_s)?;
    let maximal = maximal_set_grid(&agent.utility, &agent.c1, x_s, &grid)?;
    let image: Vec<f64> = match interval.grid_indices(&grid) {
        Some((lo, hi)) => (lo..=hi).map(|j| grid.point(j)).collect(),
        None => Vec::new(),
    };
    let ends = |v: &[f64]| {
        v.first()
            .zip(v.last())
            .map_or("empty".to_string(), |(a, b)| {
                format!("[{}, {}]", fmt_num(*a), fmt_num(*b))
            })
    };
    let text = format!(
        "consideration interval: [{}, {}]\ngrid image: {} ({} points)\nmaximal set: {} ({} points)\nagree: {}\n",
        fmt_num(interval.lo),
        fmt_num(interval.hi),
        ends(&image),
        image.len(),
        ends(&maximal),
        maximal.len(),
        image == maximal
    );
    let mut t = Table::new(["x"]);
    for x in &maximal {
        t.push(vec![fmt_num(*x)]);
    }
    let files = vec![OutputFile {
        path: output_dir(out, s).join(format!("{}_consider.csv", s.name())),
        contents: t.to_csv()?,
    }];
    finish(files, text, stdout)
}

fn choose(s: &Scenario, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let (agent, x_s) = s.agent()?;
    let grid = s.grid()?;
    let choice = second_stage_choice(agent, x_s, &grid)?;
    let trap = detect_trap(agent, x_s, &grid)?;
    let t = quantity_table(&[
        ("chosen", fmt_num(choice.representative())),
        ("chosen_ties", choice.chosen.len().to_string()),
        ("value", fmt_num(choice.value)),
        ("interval_lo", fmt_num(trap.interval.lo)),
        ("interval_hi", fmt_num(trap.interval.hi)),
        ("x_hat", fmt_num(trap.x_hat)),
        ("x_hat_ties", trap.x_hat_ties.to_string()),
        ("trapped", trap.trapped.to_string()),
        ("utility_gap", fmt_num(trap.utility_gap)),
    ]);
    let files = vec![OutputFile {
        path: output_dir(out, s).join(format!("{}_choose.csv", s.name())),
        contents: t.to_csv()?,
    }];
    finish(files, t.to_text(), stdout)
}

fn certify(s: &Scenario, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let (agent, x_s) = s.agent()?;
    let grid = s.grid()?;
    let cert = two_criteria_certificate(agent, x_s, &grid)?;
    let mut rows = vec![("holds", cert.holds.to_string())];
    rows.extend(cert.gamma.iter().map(|g| ("gamma", fmt_num(*g))));
    rows.push(("stage1_survivors", cert.stage1_survivors.len().to_string()));
    if let (Some(lo), Some(hi)) = (cert.stage1_survivors.first(), cert.stage1_survivors.last()) {
        rows.push(("stage1_lo", fmt_num(*lo)));
        rows.push(("stage1_hi", fmt_num(*hi)));
    }
    let t = quantity_table(&rows);
    let files = vec![OutputFile {
        path: output_dir(out, s).join(format!("{}_certify.csv", s.name())),
        contents: t.to_csv()?,
    }];
    finish(files, t.to_text(), stdout)
}

/// One row per opponent value: smallest and largest maximizer and the
/// number of grid ties (0 for the exact method, which returns an interval).
pub(crate) fn curve_table(
    game: &GameSpec,
    grid: &Grid,
    agent: usize,
    values: &[f64],
    deferral: bool,
    method: MethodArg,
) -> CliResult<Table> {
    let mut t = Table::new(["opponent", "response", "response_max", "ties"]);
    match method {
        MethodArg::Grid => {
            let curve = best_response_curve(game, agent, grid, values, deferral)?;
            for (v, set) in curve.opponent.iter().zip(&curve.argmax) {
                t.push(vec![
                    fmt_num(*v),
                    fmt_num(set[0]),
                    fmt_num(set[set.len() - 1]),
                    set.len().to_string(),
                ]);
            }
        }
        MethodArg::Exact => {
            let future = aggregate_beliefs(game, agent)?.mean();
            let spec = &game.agents[agent];
            for &v in values {
                StrategyProfile::new(vec![v; game.n()]).check(game)?;
                // every opponent plays v, so any aggregate of them is v
                let f = exact_objective(game, agent, v, future)?;
                let (lo, hi) = if deferral {
                    let iv = consideration_interval(&spec.utility, &spec.c1, v)?;
                    (iv.lo, iv.hi)
                } else {
                    (0.0, game.x_max)
                };
                let iv = f.argmax(lo, hi)?;
                t.push(vec![fmt_num(v), fmt_num(iv.lo), fmt_num(iv.hi), "0".into()]);
            }
        }
    }
    Ok(t)
}

fn best_response(
    s: &Scenario,
    a: &BestResponseArgs,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let game = s.game()?;
    if a.agent == 0 || a.agent > game.n() {
        return Err(CliError::Validation(format!(
            "--agent must be between 1 and {}, got {}",
            game.n(),
            a.agent
        )));
    }
    let grid = s.grid()?;
    let t = curve_table(
        &game,
        &grid,
        a.agent - 1,
        &a.sweep.values(),
        a.deferral,
        a.method,
    )?;
    let suffix = if a.deferral { "_deferral" } else { "" };
    let files = vec![OutputFile {
        path: output_dir(out, s).join(format!(
            "{}_best_response_agent{}{}.csv",
            s.name(),
            a.agent,
            suffix
        )),
        contents: t.to_csv()?,
    }];
    finish(files, t.to_text(), stdout)
}

pub(crate) fn equilibrium_table(n: usize, certs: &[EquilibriumCertificate]) -> Table {
    let mut header: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
    header.push("kind".into());
    header.push("max_regret".into());
    let mut t = Table::new(header);
    for c in certs {
        let mut row: Vec<String> = c.profile.choices.iter().map(|x| fmt_num(*x)).collect();
        row.push(c.kind.as_str().into());
        row.push(fmt_num(c.max_regret));
        t.push(row);
    }
    t
}

pub(crate) fn search(
    game: &GameSpec,
    grid: &Grid,
    tolerance: f64,
    deferral: bool,
) -> CliResult<Vec<EquilibriumCertificate>> {
    Ok(if deferral {
        find_equilibria_after_deferral(game, grid, tolerance)?
    } else {
        find_equilibria(game, grid, tolerance)?
    })
}

fn equilibria(
    s: &Scenario,
    deferral: bool,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let game = s.game()?;
    let grid = s.grid()?;
    let tol = tolerance_for(s, &game, &grid)?;
    let certs = search(&game, &grid, tol, deferral)?;
    let t = equilibrium_table(game.n(), &certs);
    let suffix = if deferral { "_deferral" } else { "" };
    let files = vec![OutputFile {
        path: output_dir(out, s).join(format!("{}_equilibria{}.csv", s.name(), suffix)),
        contents: t.to_csv()?,
    }];
    let text = format!(
        "{} certificates (tolerance {})\n{}",
        certs.len(),
        fmt_num(tol),
        t.to_text()
    );
    finish(files, text, stdout)
}

/// Certificate to hand to the loss gate. A profile that is no equilibrium
/// gets one anyway; the gate re-classifies and rejects it.
fn as_certificate(c: Classification, wanted: EquilibriumKind, tol: f64) -> EquilibriumCertificate {
    match c {
        Classification::Equilibrium(cert) => cert,
        Classification::NotEquilibrium(ProfileAssessment {
            profile,
            standard_regret,
            per_agent_consideration,
            ..
        }) => EquilibriumCertificate {
            profile,
            kind: wanted,
            max_regret: standard_regret,
            tolerance: tol,
            per_agent_consideration,
        },
    }
}

fn kind_label(c: &Classification) -> &'static str {
    c.kind().map_or("not_equilibrium", EquilibriumKind::as_str)
}

fn loss(s: &Scenario, a: &LossArgs, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let game = s.game()?;
    let grid = s.grid()?;
    let tol = tolerance_for(s, &game, &grid)?;
    let standard = load_profile(&a.standard)?;
    let deferred = load_profile(&a.deferred)?;
    let gap = welfare_gap(&game, &standard, &deferred)?;
    let cs = classify_profile(&game, &standard, &grid, tol)?;
    let cd = classify_profile(&game, &deferred, &grid, tol)?;

    let mut t = Table::new(["agent", "gap"]);
    for (i, g) in gap.per_agent_gaps.iter().enumerate() {
        t.push(vec![(i + 1).to_string(), fmt_num(*g)]);
    }
    t.push(vec!["total".into(), fmt_num(gap.total)]);
    let files = vec![OutputFile {
        path: output_dir(out, s).join(format!("{}_welfare_gap.csv", s.name())),
        contents: t.to_csv()?,
    }];
    let text = format!(
        "standard profile classifies as {}\ndeferred profile classifies as {}\n{}",
        kind_label(&cs),
        kind_label(&cd),
        t.to_text()
    );
    finish(files, text, stdout)?;

    let standard_cert = as_certificate(cs, EquilibriumKind::Standard, tol);
    let deferred_cert = as_certificate(cd, EquilibriumKind::AfterDeferral, tol);
    let report = deferral_loss(&game, &standard_cert, &deferred_cert, &grid)?;
    emit(
        stdout,
        &format!("deferral loss: {}\n", fmt_num(report.total)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let s: Sweep = "0:9:4".parse().unwrap();
        assert_eq!(s.values(), vec![0.0, 3.0, 6.0, 9.0]);
        let s: Sweep = "2:2:1".parse().unwrap();
        assert_eq!(s.values(), vec![2.0]);
        assert!("1:0:3".parse::<Sweep>().is_err());
        assert!("0:1".parse::<Sweep>().is_err());
        assert!("0:1:0".parse::<Sweep>().is_err());
    }

    #[test]
    fn sweep_hits_the_upper_end_exactly() {
        let s: Sweep = "0:0.3:4".parse().unwrap();
        assert_eq!(*s.values().last().unwrap(), 0.3);
    }
}
