//! Shipped scenarios and their discrepancy reports.
//!
//! Each case rebuilds one scenario, writes its curves and equilibrium sets as
//! CSV, and writes `discrepancy.csv` with one row per reference constant:
//! the reference value, the computed value and whether they agree. Rows with
//! no reference value carry an empty `printed` cell and `n/a` in `match`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

use deferral_core::{
    classify_profile, consideration_interval, deferral_loss, detect_trap, payoff, personal_optimum,
    welfare_gap, Classification, EquilibriumCertificate, GameSpec, Grid, StrategyProfile,
    WelfareError,
};

use crate::commands::{
    curve_table, equilibrium_table, quantity_table, search, tolerance_for, MethodArg, Sweep,
};
use crate::error::CliResult;
use crate::report::{fmt_num, write_all, OutputFile, Table};
use crate::scenario::Scenario;

pub const AKERLOF: &str = include_str!("../scenarios/akerlof.json");
pub const EXAMPLE42: &str = include_str!("../scenarios/example42.json");
pub const TRAP: &str = include_str!("../scenarios/trap.json");

const PAYOFF_MATCH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Case {
    Akerlof,
    Example42,
    Trap,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::Akerlof => "akerlof",
            Case::Example42 => "example42",
            Case::Trap => "trap",
        }
    }

    pub fn scenario(self) -> CliResult<Scenario> {
        Scenario::parse(match self {
            Case::Akerlof => AKERLOF,
            Case::Example42 => EXAMPLE42,
            Case::Trap => TRAP,
        })
    }
}

/// Rows of the discrepancy report.
struct Discrepancies(Table);

impl Discrepancies {
    fn new() -> Self {
        Discrepancies(Table::new(["quantity", "printed", "oracle", "match"]))
    }

    fn num(&mut self, q: &str, printed: f64, oracle: f64, tol: f64) {
        let ok = (printed - oracle).abs() <= tol;
        self.0.push(vec![
            q.into(),
            fmt_num(printed),
            fmt_num(oracle),
            yes_no(ok),
        ]);
    }

    fn text(&mut self, q: &str, printed: &str, oracle: &str) {
        self.0.push(vec![
            q.into(),
            printed.into(),
            oracle.into(),
            yes_no(printed == oracle),
        ]);
    }

    fn oracle_only(&mut self, q: &str, oracle: String) {
        self.0
            .push(vec![q.into(), String::new(), oracle, "n/a".into()]);
    }
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.into()
}

/// Shape of a two-agent equilibrium set.
struct SetSummary {
    contiguous: bool,
    lo: f64,
    hi: f64,
    count: usize,
}

fn summarize(certs: &[EquilibriumCertificate], grid: &Grid) -> Option<SetSummary> {
    let first = certs.first()?.profile.choices[0];
    let last = certs.last()?.profile.choices[0];
    let diagonal = certs
        .iter()
        .all(|c| c.profile.choices.iter().all(|x| *x == c.profile.choices[0]));
    let span = ((last - first) / grid.step()).round() as usize;
    Some(SetSummary {
        contiguous: diagonal && span + 1 == certs.len(),
        lo: first,
        hi: last,
        count: certs.len(),
    })
}

fn describe(s: &Option<SetSummary>) -> String {
    match s {
        None => "empty".into(),
        Some(s) if s.contiguous => format!("diagonal [{}, {}]", fmt_num(s.lo), fmt_num(s.hi)),
        Some(s) => format!("{} profiles", s.count),
    }
}

/// Re-classifies every certificate at its own tolerance.
fn reverified(game: &GameSpec, grid: &Grid, certs: &[EquilibriumCertificate]) -> CliResult<bool> {
    for c in certs {
        let again = classify_profile(game, &c.profile, grid, c.tolerance)?;
        match again.certificate() {
            Some(a) if a.kind == c.kind && a.max_regret <= c.tolerance => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

fn kind_label(c: &Classification) -> &'static str {
    c.kind().map_or("not_equilibrium", |k| k.as_str())
}

fn profile(x: f64, y: f64) -> StrategyProfile {
    StrategyProfile::new(vec![x, y])
}

fn csv(dir: &Path, name: &str, t: &Table) -> CliResult<OutputFile> {
    Ok(OutputFile {
        path: dir.join(name),
        contents: t.to_csv()?,
    })
}

pub fn run(case: Case, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("reproduce").join(case.name()));
    let (report, mut files) = match case {
        Case::Akerlof => akerlof(&dir)?,
        Case::Example42 => example42(&dir)?,
        Case::Trap => trap(&dir)?,
    };
    files.push(csv(&dir, "discrepancy.csv", &report.0)?);
    write_all(&files)?;
    let mut text = report.0.to_text();
    for f in &files {
        text.push_str(&format!("wrote {}\n", f.path.display()));
    }
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

struct GameRun {
    game: GameSpec,
    grid: Grid,
    curves: Vec<Table>,
    standard: Vec<EquilibriumCertificate>,
    deferred: Vec<EquilibriumCertificate>,
    files: Vec<OutputFile>,
}

fn curves_and_sets(s: &Scenario, dir: &Path, sweep: &[f64]) -> CliResult<GameRun> {
    let game = s.game()?;
    let grid = s.grid()?;
    let tol = tolerance_for(s, &game, &grid)?;
    let standard = search(&game, &grid, tol, false)?;
    let deferred = search(&game, &grid, tol, true)?;
    let mut curves = Vec::new();
    let mut files = Vec::new();
    for i in 0..game.n() {
        let t = curve_table(&game, &grid, i, sweep, false, MethodArg::Grid)?;
        files.push(csv(dir, &format!("best_response_agent{}.csv", i + 1), &t)?);
        curves.push(t);
    }
    files.push(csv(
        dir,
        "equilibria.csv",
        &equilibrium_table(game.n(), &standard),
    )?);
    files.push(csv(
        dir,
        "equilibria_deferral.csv",
        &equilibrium_table(game.n(), &deferred),
    )?);
    Ok(GameRun {
        game,
        grid,
        curves,
        standard,
        deferred,
        files,
    })
}

fn sweep(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    Sweep { lo, hi, n }.values()
}

fn response(t: &Table, row: usize) -> f64 {
    t.rows[row][1].parse().expect("formatted by fmt_num")
}

fn akerlof(dir: &Path) -> CliResult<(Discrepancies, Vec<OutputFile>)> {
    let s = Case::Akerlof.scenario()?;
    let GameRun {
        game,
        grid,
        standard,
        deferred,
        files,
        ..
    } = curves_and_sets(&s, dir, &sweep(0.0, 8.0, 321))?;
    let h = grid.step();
    let (ss, ds) = (summarize(&standard, &grid), summarize(&deferred, &grid));
    let mut d = Discrepancies::new();
    // conformist interval [(b - d) / 2a, (b + d) / 2a]
    let (a, b, dd) = (2.0, 4.0, 4.0);
    let (lo, hi) = (((b - dd) / (2.0 * a)), (b + dd) / (2.0 * a));
    d.text(
        "standard_set_diagonal",
        "true",
        &ss.as_ref().is_some_and(|s| s.contiguous).to_string(),
    );
    d.num(
        "standard_set_lo",
        lo,
        ss.as_ref().map_or(f64::NAN, |s| s.lo),
        h,
    );
    d.num(
        "standard_set_hi",
        hi,
        ss.as_ref().map_or(f64::NAN, |s| s.hi),
        h,
    );
    let same = standard
        .iter()
        .map(|c| &c.profile)
        .eq(deferred.iter().map(|c| &c.profile));
    d.text("deferral_set_equals_standard", "true", &same.to_string());
    d.oracle_only("deferral_set", describe(&ds));
    d.oracle_only("standard_count", standard.len().to_string());
    let ok = reverified(&game, &grid, &standard)? && reverified(&game, &grid, &deferred)?;
    d.oracle_only("certificates_reverified", ok.to_string());
    Ok((d, files))
}

fn example42(dir: &Path) -> CliResult<(Discrepancies, Vec<OutputFile>)> {
    let s = Case::Example42.scenario()?;
    let GameRun {
        game,
        grid,
        curves,
        standard,
        deferred,
        files,
    } = curves_and_sets(&s, dir, &sweep(0.0, 8.0, 321))?;
    let h = grid.step();
    let last = curves[0].rows.len() - 1;
    let mut d = Discrepancies::new();

    d.num(
        "x_star",
        1.0,
        personal_optimum(&game.agents[0].utility, &grid)?,
        h,
    );
    d.num("b1_lower_plateau", 7.0 / 4.0, response(&curves[0], 0), h);
    d.num(
        "b1_upper_plateau",
        15.0 / 4.0,
        response(&curves[0], last),
        h,
    );
    d.num("b2_lower_plateau", 4.0, response(&curves[1], 0), h);
    d.num("b2_upper_plateau", 6.0, response(&curves[1], last), h);

    let printed = profile(15.0 / 4.0, 4.0);
    let tol = tolerance_for(&s, &game, &grid)?;
    let c = classify_profile(&game, &printed, &grid, tol)?;
    d.text("printed_pair_kind", "standard", kind_label(&c));
    let after = c.kind().is_some_and(|k| k.is_after_deferral());
    d.text("printed_pair_after_deferral", "false", &after.to_string());
    let u2 = &game.agents[1];
    let iv = consideration_interval(&u2.utility, &u2.c1, printed.choices[0])?;
    d.num("agent2_interval_lo_at_printed_pair", 1.0, iv.lo, h);
    d.num("agent2_interval_hi_at_printed_pair", 15.0 / 4.0, iv.hi, h);
    d.text(
        "agent2_choice_in_interval_at_printed_pair",
        "false",
        &iv.contains_on_grid(printed.choices[1], &grid).to_string(),
    );

    let (ss, ds) = (summarize(&standard, &grid), summarize(&deferred, &grid));
    d.num("standard_count", 1.0, standard.len() as f64, 0.0);
    d.text("standard_set", "(3.75, 4)", &describe(&ss));
    d.text(
        "deferral_set_diagonal",
        "true",
        &ds.as_ref().is_some_and(|s| s.contiguous).to_string(),
    );
    d.num(
        "deferral_set_lo",
        1.0,
        ds.as_ref().map_or(f64::NAN, |s| s.lo),
        h,
    );
    d.num(
        "deferral_set_hi",
        15.0 / 4.0,
        ds.as_ref().map_or(f64::NAN, |s| s.hi),
        h,
    );

    for (q, target, value) in [("gap_vs_1_1", 1.0, 32.125), ("gap_vs_1.5_1.5", 1.5, 21.625)] {
        let deferred_profile = profile(target, target);
        let gap = welfare_gap(&game, &printed, &deferred_profile)?;
        d.num(q, value, gap.total, PAYOFF_MATCH);
        let cd = classify_profile(&game, &deferred_profile, &grid, tol)?;
        let gate = match (c.certificate(), cd.certificate()) {
            (Some(cs), Some(cd)) => match deferral_loss(&game, cs, cd, &grid) {
                Ok(_) => "passes".to_string(),
                Err(WelfareError::PreconditionViolated { code, .. }) => {
                    format!(
                        "fails_{}",
                        serde_json::to_value(code)
                            .unwrap_or_default()
                            .as_str()
                            .unwrap_or("?")
                    )
                }
                Err(e) => return Err(e.into()),
            },
            (None, _) => "fails_standard_profile".into(),
            (_, None) => "fails_deferred_profile".into(),
        };
        d.text(&format!("loss_gate_{}", &q[4..]), "passes", &gate);
    }

    d.num(
        "u1_at_2_2",
        -261.0,
        payoff(&game, 0, &profile(2.0, 2.0))?,
        PAYOFF_MATCH,
    );
    d.num(
        "u1_at_printed_pair",
        -262.875,
        payoff(&game, 0, &printed)?,
        PAYOFF_MATCH,
    );
    d.oracle_only("u2_at_printed_pair", fmt_num(payoff(&game, 1, &printed)?));
    let ok = reverified(&game, &grid, &standard)? && reverified(&game, &grid, &deferred)?;
    d.oracle_only("certificates_reverified", ok.to_string());
    Ok((d, files))
}

fn trap(dir: &Path) -> CliResult<(Discrepancies, Vec<OutputFile>)> {
    let s = Case::Trap.scenario()?;
    let (agent, x_s) = s.agent()?;
    let grid = s.grid()?;
    let r = detect_trap(agent, x_s, &grid)?;
    let mut d = Discrepancies::new();
    d.text("trapped", "true", &r.trapped.to_string());
    d.oracle_only("x_hat", fmt_num(r.x_hat));
    d.oracle_only("interval_lo", fmt_num(r.interval.lo));
    d.oracle_only("interval_hi", fmt_num(r.interval.hi));
    d.oracle_only("chosen", fmt_num(r.chosen));
    d.oracle_only("utility_gap", fmt_num(r.utility_gap));
    let t = quantity_table(&[
        ("x_hat", fmt_num(r.x_hat)),
        ("x_hat_ties", r.x_hat_ties.to_string()),
        ("interval_lo", fmt_num(r.interval.lo)),
        ("interval_hi", fmt_num(r.interval.hi)),
        ("chosen", fmt_num(r.chosen)),
        ("trapped", r.trapped.to_string()),
        ("utility_gap", fmt_num(r.utility_gap)),
    ]);
    Ok((d, vec![csv(dir, "trap.csv", &t)?]))
}
