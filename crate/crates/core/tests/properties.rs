mod common;

use magt_core::clri::{
    clri_next_error, clri_predict, clri_simulate, volatility, AgentRates, ClriParams, Coupling,
    SimConfig,
};
use magt_core::equilibria::{
    check_ess, enumerate_nash_2p, is_dominated, iterated_dominance, iterated_dominance_in_order,
    verify_nash, DominanceMode,
};
use magt_core::fictitious::{run_fp, BeliefState, FpConfig, FpStatus, TieRule};
use magt_core::nlevel::{run_society, AgentSpec, Level, SocietyConfig, SocietyMode};
use magt_core::replicator::{replicator_step, strategy_fitness, Population};
use magt_core::seed::rng_from_seed;
use magt_core::{load_game, save_game, Game, MixedProfile, MixedStrategy, SymmetricGame};
use proptest::prelude::*;
use rand::Rng;

fn game_strategy(max_players: usize, max_actions: usize) -> impl Strategy<Value = Game> {
    (any::<u64>(), 2..=max_players).prop_flat_map(move |(seed, players)| {
        proptest::collection::vec(2..=max_actions, players)
            .prop_map(move |counts| common::integer_game(&mut rng_from_seed(seed), &counts, -5, 5))
    })
}

fn bimatrix_strategy() -> impl Strategy<Value = Game> {
    (any::<u64>(), 2..=4usize, 2..=4usize)
        .prop_map(|(seed, m, n)| common::integer_bimatrix(&mut rng_from_seed(seed), m, n, -5, 5))
}

fn symmetric_strategy() -> impl Strategy<Value = SymmetricGame> {
    (any::<u64>(), 2..=4usize)
        .prop_map(|(seed, n)| common::small_symmetric(&mut rng_from_seed(seed), n, 0.5))
}

fn random_mixed<R: Rng>(rng: &mut R, n: usize) -> MixedStrategy {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0) + 1e-3).collect();
    MixedStrategy::from_weights(&w).unwrap()
}

fn random_profile<R: Rng>(rng: &mut R, game: &Game) -> MixedProfile {
    MixedProfile::new(
        (0..game.num_players())
            .map(|p| random_mixed(rng, game.num_actions(p)))
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expected_utility_is_linear_in_each_strategy(game in game_strategy(3, 3), seed in any::<u64>(), lambda in 0.0..1.0f64) {
        let mut rng = rng_from_seed(seed);
        let base = random_profile(&mut rng, &game);
        let p = rng.gen_range(0..game.num_players());
        let x = random_mixed(&mut rng, game.num_actions(p));
        let y = random_mixed(&mut rng, game.num_actions(p));
        let mix: Vec<f64> = x.probs().iter().zip(y.probs()).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let mixed = base.with(p, MixedStrategy::new(mix).unwrap());
        for i in 0..game.num_players() {
            let lhs = game.expected_utility(&mixed, i).unwrap();
            let rhs = lambda * game.expected_utility(&base.with(p, x.clone()), i).unwrap()
                + (1.0 - lambda) * game.expected_utility(&base.with(p, y.clone()), i).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_expected_utility_is_the_payoff(game in game_strategy(3, 3)) {
        for profile in game.profiles() {
            let p = MixedProfile::pure(&game, &profile).unwrap();
            for i in 0..game.num_players() {
                prop_assert_eq!(game.expected_utility(&p, i).unwrap(), game.payoff(&profile, i));
            }
        }
    }

    #[test]
    fn embedding_is_symmetric(sym in symmetric_strategy()) {
        let g = sym.embed();
        let n = sym.num_actions();
        for s in 0..n {
            for t in 0..n {
                prop_assert_eq!(g.payoff(&[s, t], 0), g.payoff(&[t, s], 1));
                prop_assert_eq!(g.payoff(&[s, t], 0), sym.u(s, t));
            }
        }
        prop_assert_eq!(g.as_symmetric(), Some(sym));
    }

    #[test]
    fn save_then_load_round_trips(game in game_strategy(3, 3)) {
        let back = load_game(&save_game(&game)).unwrap();
        prop_assert_eq!(back, game);
    }

    #[test]
    fn strict_elimination_is_order_independent(game in game_strategy(3, 4), seed in any::<u64>()) {
        let simultaneous = iterated_dominance(&game, DominanceMode::Strict).unwrap();
        let ordered = iterated_dominance_in_order(&game, DominanceMode::Strict, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(&simultaneous.surviving, &ordered.surviving);
    }

    #[test]
    fn equilibria_ignore_strictly_dominated_actions(game in bimatrix_strategy()) {
        let eq = enumerate_nash_2p(&game).unwrap();
        prop_assert!(!eq.is_empty());
        let all: Vec<Vec<usize>> = (0..2).map(|p| (0..game.num_actions(p)).collect()).collect();
        for p in 0..2 {
            for a in 0..game.num_actions(p) {
                if is_dominated(&game, p, a, DominanceMode::Strict, &all).unwrap().is_some() {
                    for r in &eq {
                        prop_assert!(r.profile.strategy(p).prob(a) < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn enumerated_profiles_have_zero_regret(game in bimatrix_strategy(), seed in any::<u64>()) {
        for r in enumerate_nash_2p(&game).unwrap() {
            prop_assert!(r.regret < 1e-9);
            prop_assert!(r.equilibrium);
        }
        let mut rng = rng_from_seed(seed);
        let v = verify_nash(&game, &random_profile(&mut rng, &game), 1e-9).unwrap();
        prop_assert!(v.regret >= 0.0);
        prop_assert_eq!(v.equilibrium, v.regret <= 1e-9);
    }

    #[test]
    fn ess_implies_nash(sym in symmetric_strategy()) {
        let g = sym.embed();
        for r in enumerate_nash_2p(&g).unwrap() {
            let s = r.profile.strategy(0);
            if s.distance(r.profile.strategy(1)) > 1e-9 {
                continue;
            }
            let v = check_ess(&sym, s, 30).unwrap();
            if v.is_ess {
                prop_assert!(v.is_nash);
                let p = MixedProfile::new(vec![s.clone(), s.clone()]);
                prop_assert!(verify_nash(&g, &p, 1e-9).unwrap().equilibrium);
            }
        }
    }

    #[test]
    fn fictitious_play_is_deterministic_and_counts_exactly(game in game_strategy(3, 3), seed in any::<u64>()) {
        let beliefs = |g: &Game| -> Vec<BeliefState> {
            (0..g.num_players()).map(|i| BeliefState::uniform(g, i, 0.5).unwrap()).collect()
        };
        let config = FpConfig { budget: 60, tie_rule: TieRule::UniformRandom, seed, ..FpConfig::default() };
        let a = run_fp(&game, beliefs(&game), &config).unwrap();
        let b = run_fp(&game, beliefs(&game), &config).unwrap();
        prop_assert_eq!(&a, &b);
        let t = a.steps.len() as f64;
        for belief in &a.final_beliefs {
            prop_assert_eq!(belief.opponents().len(), game.num_players() - 1);
            for &j in belief.opponents() {
                let initial = 0.5 * game.num_actions(j) as f64;
                prop_assert_eq!(belief.total(j).unwrap(), initial + t);
            }
        }
        if let FpStatus::Converged { profile, .. } = &a.status {
            let p = MixedProfile::pure(&game, profile).unwrap();
            prop_assert!(verify_nash(&game, &p, 1e-9).unwrap().equilibrium);
        }
    }

    #[test]
    fn strict_equilibrium_once_played_persists(game in bimatrix_strategy()) {
        for eq in common::strict_pure_equilibria(&game) {
            let beliefs = (0..2).map(|i| {
                let mut w = vec![0.0; game.num_actions(1 - i)];
                w[eq[1 - i]] = 1.0;
                BeliefState::new(&game, i, vec![w]).unwrap()
            }).collect();
            let config = FpConfig { budget: 80, convergence_window: 100, ..FpConfig::default() };
            let trace = run_fp(&game, beliefs, &config).unwrap();
            prop_assert!(trace.steps.iter().all(|s| s.profile == eq));
        }
    }

    #[test]
    fn replicator_step_invariants(sym in symmetric_strategy(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let n = sym.num_actions();
        let mut counts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        counts[rng.gen_range(0..n)] = 0.0;
        if counts.iter().all(|&c| c == 0.0) {
            counts[0] = 1.0;
        }
        let pop = Population::new(counts.clone()).unwrap();
        let fitness = strategy_fitness(&sym, &pop);
        let next = replicator_step(&sym, &pop).unwrap();
        prop_assert!((next.shares().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for s in 0..n {
            if counts[s] == 0.0 {
                prop_assert_eq!(next.counts()[s], 0.0);
            } else {
                prop_assert_eq!(next.log_count(s) > pop.log_count(s), fitness[s] > 0.0);
            }
        }
    }

    #[test]
    fn volatility_is_monotone(
        n in 2..=4usize,
        seed in any::<u64>(),
        bump in 0.0..0.5f64,
    ) {
        let mut rng = rng_from_seed(seed);
        let rates = AgentRates::new(3, 0.5, 0.5, 0.5).unwrap();
        let impact: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0.0..0.5)).collect()).collect();
        let change: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.5)).collect();
        let params = ClriParams::new(vec![rates; n], Coupling::Impact(impact.clone())).unwrap();
        let base = volatility(&params, &change).unwrap();
        let (j, i) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let mut more_impact = impact.clone();
        more_impact[j][i] += bump;
        let raised = volatility(&ClriParams::new(vec![rates; n], Coupling::Impact(more_impact)).unwrap(), &change).unwrap();
        let mut more_change = change.clone();
        more_change[j] += bump;
        let raised2 = volatility(&params, &more_change).unwrap();
        for k in 0..n {
            prop_assert!(raised[k] >= base[k] - 1e-15);
            prop_assert!(raised2[k] >= base[k] - 1e-15);
        }
        let zero = ClriParams::new(vec![rates; n], Coupling::Impact(vec![vec![0.0; n]; n])).unwrap();
        prop_assert!(volatility(&zero, &change).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn prediction_converges_monotonically_without_volatility(r in 0.0..=1.0f64, l in 0.0..=1.0f64, e0 in 0.0..=1.0f64) {
        prop_assume!(1.0 - r + l > 1e-3);
        let rates = AgentRates::new(4, l, l, r).unwrap();
        let fixed = (1.0 - r) / (1.0 - r + l);
        let t = clri_predict(&ClriParams::single(rates, 0.0).unwrap(), &[e0], 60).unwrap();
        let gaps: Vec<f64> = t.errors[0].iter().map(|e| (e - fixed).abs()).collect();
        for w in gaps.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn deeper_levels_cost_more(game in game_strategy(3, 3), seed in any::<u64>()) {
        let n = game.num_players();
        let cost = |level: Level| {
            let mut roster = vec![AgentSpec::new(Level::Zero).epsilon(0.0); n];
            roster[0] = AgentSpec::new(level).epsilon(0.0);
            let config = SocietyConfig { steps: 20, seed, mode: SocietyMode::Fixed };
            run_society(&game, &roster, &config).unwrap().cost_per_decision(0)
        };
        let (c0, c1, c2) = (cost(Level::Zero), cost(Level::One), cost(Level::Two));
        prop_assert!(c0 < c1 && c1 < c2);
    }

    #[test]
    fn level0_ignores_who_the_opponents_are(seed in any::<u64>(), p in 0.05..0.95f64, q in 0.05..0.95f64) {
        // Player 1's payoff is symmetric in the two opponents' actions, so
        // swapping them changes nothing that a level-0 agent can observe.
        let mut rng = rng_from_seed(seed);
        let table: Vec<f64> = (0..12).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let names = |k: usize| (0..k).map(|a| ((b'A' + a as u8) as char).to_string()).collect::<Vec<_>>();
        let game = Game::from_fn(
            vec!["P1".into(), "P2".into(), "P3".into()],
            vec![names(3), names(2), names(2)],
            |s| {
                let (lo, hi) = (s[1].min(s[2]), s[1].max(s[2]));
                vec![table[s[0] * 4 + lo * 2 + hi], 0.0, 0.0]
            },
        ).unwrap();
        let fixed = |x: f64, seed: u64| {
            let mut a = AgentSpec::new(Level::Fixed(vec![x, 1.0 - x]));
            a.seed = Some(seed);
            a
        };
        let mut me = AgentSpec::new(Level::Zero).epsilon(0.2);
        me.seed = Some(seed ^ 1);
        let config = SocietyConfig { steps: 200, seed, mode: SocietyMode::Fixed };
        let a = run_society(&game, &[me.clone(), fixed(p, 7), fixed(q, 9)], &config).unwrap();
        let b = run_society(&game, &[me, fixed(q, 9), fixed(p, 7)], &config).unwrap();
        for (x, y) in a.steps.iter().zip(&b.steps) {
            prop_assert_eq!(x.actions[0], y.actions[0]);
        }
    }
}

/// On the 0.1 grid the recurrence stays in [0, 1] except with two actions
/// and `c > l`, where a wrong mapping has no other wrong action to move to;
/// there the predictor clamps and records every excursion.
#[test]
fn recurrence_stays_in_the_unit_interval() {
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let (mut checked, mut outside) = (0, 0);
    for &actions in &[2usize, 3, 4, 8] {
        for &c in &grid {
            for &l in grid.iter().filter(|&&l| l <= c) {
                for &r in &grid {
                    for &v in &grid {
                        let rates = AgentRates::new(actions, c, l, r).unwrap();
                        for &e in &grid {
                            let next = clri_next_error(&rates, v, e);
                            checked += 1;
                            if (-1e-12..=1.0 + 1e-12).contains(&next) {
                                continue;
                            }
                            outside += 1;
                            assert!(
                                actions == 2 && c > l,
                                "|A|={actions} c={c} l={l} r={r} v={v} e={e} -> {next}"
                            );
                            let params = ClriParams::single(rates, v).unwrap();
                            let t = clri_predict(&params, &[e], 1).unwrap();
                            assert_eq!(t.clamps.len(), 1);
                            assert!((0.0..=1.0).contains(&t.errors[0][1]));
                        }
                    }
                }
            }
        }
    }
    assert_eq!(checked, 351_384);
    assert_eq!(outside, 4532);
}

#[test]
fn geometric_decay_matches_simulation() {
    let rates = AgentRates::new(4, 0.5, 0.3, 1.0).unwrap();
    let params = ClriParams::single(rates, 0.0).unwrap();
    let config = SimConfig {
        states: 20,
        distribution: None,
        e0: vec![1.0],
        steps: 10,
        trials: 10_000,
        seed: 4242,
    };
    let est = clri_simulate(&params, &config).unwrap();
    let pred = clri_predict(&params, &[1.0], 10).unwrap();
    for t in 0..=10 {
        assert!((pred.errors[0][t] - 0.7f64.powi(t as i32)).abs() < 1e-15);
        let diff = (est.mean[0][t] - pred.errors[0][t]).abs();
        assert!(
            diff <= 3.0 * est.standard_error(0, t) + 1e-12,
            "step {t}: {diff}"
        );
    }
}

#[test]
fn level1_model_learns_a_stationary_opponent() {
    let game = magt_core::fixtures::fig1();
    let target = [0.3, 0.7];
    let mut close = 0;
    for seed in 0..40 {
        let roster = vec![
            AgentSpec::new(Level::One),
            AgentSpec::new(Level::Fixed(target.to_vec())),
        ];
        let config = SocietyConfig {
            steps: 2000,
            seed,
            mode: SocietyMode::Fixed,
        };
        let t = run_society(&game, &roster, &config).unwrap();
        let counts = &t.final_models[0][1];
        let total: f64 = counts.iter().sum();
        let l1: f64 = counts
            .iter()
            .zip(&target)
            .map(|(c, p)| (c / total - p).abs())
            .sum();
        if l1 < 0.05 {
            close += 1;
        }
    }
    assert!(close as f64 >= 0.95 * 40.0, "{close}/40");
}
