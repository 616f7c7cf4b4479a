//! Seeded randomized batches comparing each solver against an independent
//! brute-force route.

use deferral_core::game::{default_tolerance, Kink, KinkedConcave};
use deferral_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quad_agent(a: f64, b: f64, d1: f64, d2: f64, belief: f64) -> AgentSpec {
    AgentSpec {
        utility: UtilityFunction::quadratic(a, b, 0.0),
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

fn random_agent(rng: &mut ChaCha8Rng) -> AgentSpec {
    quad_agent(
        rng.gen_range(0.5..5.0),
        rng.gen_range(0.0..20.0),
        rng.gen_range(0.01..10.0),
        rng.gen_range(0.0..10.0),
        rng.gen_range(0.0..20.0),
    )
}

/// Dense scan of a one-dimensional function, independent of the grid solvers.
fn dense_argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    (0..=n)
        .map(|j| lo + (hi - lo) * j as f64 / n as f64)
        .max_by(|p, q| f(*p).total_cmp(&f(*q)))
        .unwrap()
}

#[test]
fn chosen_set_sits_inside_the_first_stage_survivors() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = Grid::new(25.0, 400).unwrap();
    for _ in 0..60 {
        let agent = random_agent(&mut rng);
        let x_s = rng.gen_range(0.0..10.0);
        let chosen = second_stage_choice(&agent, x_s, &grid).unwrap();
        let survivors = maximal_set_grid(&agent.utility, &agent.c1, x_s, &grid).unwrap();
        assert!(chosen.chosen.iter().all(|x| survivors.contains(x)));
        let iv = consideration_interval(&agent.utility, &agent.c1, x_s).unwrap();
        assert!(chosen.chosen.iter().all(|x| iv.contains_on_grid(*x, &grid)));
    }
}

#[test]
fn grid_choice_tracks_the_continuum_maximizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let grid = Grid::new(25.0, 2500).unwrap();
    for _ in 0..100 {
        let agent = random_agent(&mut rng);
        let x_s = rng.gen_range(0.0..10.0);
        let iv = consideration_interval(&agent.utility, &agent.c1, x_s).unwrap();
        let f = |x: f64| comprehensive_value(&agent, x, x_s).unwrap();
        let oracle = dense_argmax(f, iv.lo, iv.hi, 20_000);
        let got = second_stage_choice(&agent, x_s, &grid)
            .unwrap()
            .representative();
        assert!((got - oracle).abs() <= grid.step(), "{got} vs {oracle}");
    }
}

#[test]
fn without_future_cost_there_is_no_trap() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let grid = Grid::new(25.0, 1000).unwrap();
    for _ in 0..100 {
        let mut agent = random_agent(&mut rng);
        agent.form.w_2 = 0.0;
        let x_s = rng.gen_range(0.0..10.0);
        let r = detect_trap(&agent, x_s, &grid).unwrap();
        assert!(!r.trapped, "{r:?}");
        assert_eq!(r.utility_gap, 0.0);
    }
}

#[test]
fn trap_gap_is_nonnegative_and_zero_off_trap() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let grid = Grid::new(25.0, 500).unwrap();
    let mut trapped = 0;
    for _ in 0..150 {
        let agent = random_agent(&mut rng);
        let x_s = rng.gen_range(0.0..10.0);
        let r = detect_trap(&agent, x_s, &grid).unwrap();
        assert!(r.utility_gap >= 0.0);
        if r.trapped {
            trapped += 1;
        } else {
            assert_eq!(r.utility_gap, 0.0);
        }
    }
    assert!(trapped > 0, "the batch should exercise the trapped branch");
}

#[test]
fn kinked_solver_matches_dense_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..200 {
        let a = rng.gen_range(0.1..5.0);
        let b = rng.gen_range(-5.0..20.0);
        let kinks: Vec<Kink> = (0..rng.gen_range(0..4))
            .map(|_| Kink::new(rng.gen_range(0.0..15.0), rng.gen_range(0.0..10.0)))
            .collect();
        let f = KinkedConcave::new(a, b, 0.0, kinks);
        let exact = f.argmax(0.0, 20.0).unwrap();
        assert!(exact.is_singleton());
        let oracle = dense_argmax(|x| f.value(x), 0.0, 20.0, 200_000);
        assert!(
            (exact.lo - oracle).abs() <= 2e-4,
            "{} vs {oracle}",
            exact.lo
        );
    }
}

#[test]
fn exact_and_grid_best_responses_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let grid = Grid::new(25.0, 1000).unwrap();
    for _ in 0..200 {
        let game = GameSpec::new(vec![random_agent(&mut rng), random_agent(&mut rng)], 25.0);
        let i = rng.gen_range(0..2);
        let mut choices = vec![0.0; 2];
        choices[1 - i] = grid.snap(rng.gen_range(0.0..25.0));
        let opp = StrategyProfile::new(choices);
        let oracle = best_response(&game, i, &opp, &grid, BestResponseMethod::GridOracle).unwrap();
        let exact = best_response(&game, i, &opp, &grid, BestResponseMethod::Exact).unwrap();
        assert!(
            (oracle.representative() - exact.representative()).abs() <= grid.step(),
            "{oracle:?} vs {exact:?}"
        );
    }
}

#[test]
fn deferral_responses_stay_in_the_consideration_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let grid = Grid::new(25.0, 500).unwrap();
    for _ in 0..100 {
        let game = GameSpec::new(vec![random_agent(&mut rng), random_agent(&mut rng)], 25.0);
        let i = rng.gen_range(0..2);
        let mut choices = vec![0.0; 2];
        choices[1 - i] = grid.snap(rng.gen_range(0.0..25.0));
        let g = choices[1 - i];
        let opp = StrategyProfile::new(choices);
        let ArgmaxSet::Points(points) = deferral_best_response(&game, i, &opp, &grid).unwrap()
        else {
            panic!("grid responses are point sets");
        };
        let iv = consideration_interval(&game.agents[i].utility, &game.agents[i].c1, g).unwrap();
        assert!(points.iter().all(|x| iv.contains_on_grid(*x, &grid)));
    }
}

#[test]
fn two_agent_search_is_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let grid = Grid::new(6.0, 48).unwrap();
    for _ in 0..6 {
        let game = GameSpec::new(
            vec![
                quad_agent(
                    rng.gen_range(0.5..3.0),
                    rng.gen_range(0.0..8.0),
                    rng.gen_range(0.5..5.0),
                    rng.gen_range(0.0..3.0),
                    rng.gen_range(0.0..6.0),
                ),
                quad_agent(
                    rng.gen_range(0.5..3.0),
                    rng.gen_range(0.0..8.0),
                    rng.gen_range(0.5..5.0),
                    rng.gen_range(0.0..3.0),
                    rng.gen_range(0.0..6.0),
                ),
            ],
            6.0,
        );
        let tol = default_tolerance(&game, &grid).unwrap();
        let std = find_equilibria(&game, &grid, tol).unwrap();
        let def = find_equilibria_after_deferral(&game, &grid, tol).unwrap();
        let mut brute_std = Vec::new();
        let mut brute_def = Vec::new();
        for p in grid.points() {
            for q in grid.points() {
                let profile = StrategyProfile::new(vec![p, q]);
                if let Some(kind) = classify_profile(&game, &profile, &grid, tol)
                    .unwrap()
                    .kind()
                {
                    if kind.is_standard() {
                        brute_std.push(profile.clone());
                    }
                    if kind.is_after_deferral() {
                        brute_def.push(profile);
                    }
                }
            }
        }
        let profiles =
            |c: &[EquilibriumCertificate]| c.iter().map(|c| c.profile.clone()).collect::<Vec<_>>();
        assert_eq!(profiles(&std), brute_std);
        assert_eq!(profiles(&def), brute_def);
    }
}

#[test]
fn certificates_reverify() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let grid = Grid::new(25.0, 250).unwrap();
    for _ in 0..8 {
        let game = GameSpec::new(vec![random_agent(&mut rng), random_agent(&mut rng)], 25.0);
        let tol = default_tolerance(&game, &grid).unwrap();
        let mut all = find_equilibria(&game, &grid, tol).unwrap();
        all.extend(find_equilibria_after_deferral(&game, &grid, tol).unwrap());
        for cert in all {
            assert!(cert.max_regret <= tol);
            let again = classify_profile(&game, &cert.profile, &grid, tol).unwrap();
            let again = again.certificate().expect("certificate must re-verify");
            assert_eq!(again.kind, cert.kind);
            assert_eq!(again.max_regret, cert.max_regret);
        }
    }
}

#[test]
fn common_utility_deferral_equilibria_are_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let grid = Grid::new(20.0, 400).unwrap();
    for _ in 0..10 {
        let (a, b) = (rng.gen_range(0.5..5.0), rng.gen_range(0.0..20.0));
        let game = GameSpec::new(
            vec![
                quad_agent(
                    a,
                    b,
                    rng.gen_range(0.1..10.0),
                    rng.gen_range(0.0..10.0),
                    rng.gen_range(0.0..20.0),
                ),
                quad_agent(
                    a,
                    b,
                    rng.gen_range(0.1..10.0),
                    rng.gen_range(0.0..10.0),
                    rng.gen_range(0.0..20.0),
                ),
            ],
            20.0,
        );
        let tol = default_tolerance(&game, &grid).unwrap();
        for cert in find_equilibria_after_deferral(&game, &grid, tol).unwrap() {
            let x = &cert.profile.choices;
            assert!((x[0] - x[1]).abs() <= grid.step());
        }
        for cert in find_equilibria(&game, &grid, tol).unwrap() {
            let x = &cert.profile.choices;
            if x[0] == x[1] {
                assert!(cert.kind.is_after_deferral());
            }
        }
    }
}

#[test]
fn deferral_loss_matches_the_unguarded_gap() {
    // Both agents expect the society to move up and choose (1.5, 2.75) when
    // decisive; deferring pins them to the common optimum 0.25.
    let game = GameSpec::new(
        vec![
            quad_agent(1.0, 0.5, 1.5, 3.0, 1.5),
            quad_agent(1.0, 0.5, 1.0, 6.0, 4.0),
        ],
        6.0,
    );
    let grid = Grid::new(6.0, 120).unwrap();
    let tol = default_tolerance(&game, &grid).unwrap();
    let std = find_equilibria(&game, &grid, tol).unwrap();
    let def = find_equilibria_after_deferral(&game, &grid, tol).unwrap();
    let mut checked = 0;
    for s in std.iter().filter(|c| c.kind == EquilibriumKind::Standard) {
        for d in def
            .iter()
            .filter(|c| c.kind == EquilibriumKind::AfterDeferral)
        {
            match deferral_loss(&game, s, d, &grid) {
                Ok(report) => {
                    let gap = welfare_gap(&game, &s.profile, &d.profile).unwrap();
                    assert!(report.total > 0.0);
                    assert!(report.per_agent_gaps.iter().all(|g| *g >= -1e-12));
                    assert_eq!(report.total, gap.total);
                    checked += 1;
                }
                Err(WelfareError::PreconditionViolated { code, .. }) => {
                    assert_eq!(code, LossPrecondition::ParetoDominance);
                    assert!(!pareto_dominates(&game, &s.profile, &d.profile).unwrap());
                }
                Err(e) => panic!("{e}"),
            }
        }
    }
    assert!(checked > 0, "std = {std:?}\ndef = {def:?}");
}
