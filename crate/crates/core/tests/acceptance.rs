//! Acceptance criteria. Run with `cargo test -p magt-core --test acceptance`;
//! prints one PASS/FAIL line per criterion and exits nonzero on any failure.

mod common;

use std::time::{Duration, Instant};

use magt_core::clri::{
    clri_predict, clri_simulate, write_clri_csv, AgentRates, ClriParams, SimConfig,
};
use magt_core::equilibria::{
    check_ess, enumerate_nash_2p, iterated_dominance, verify_nash, write_nash_csv, DominanceMode,
    DEFAULT_ESS_RESOLUTION,
};
use magt_core::fictitious::{run_fp, BeliefState, FpConfig, FpStatus, TieRule};
use magt_core::fixtures::{fig1, fig2, fig3, fig3_symmetric};
use magt_core::nlevel::{run_society, AgentSpec, Level, SocietyConfig, SocietyMode};
use magt_core::replicator::{
    replicator_step, run_replicator, stability_probe, steady_states, Population, ProbeConfig,
    ReplicatorConfig,
};
use magt_core::seed::{derive_seed, rng_from_seed};
use magt_core::{Game, MixedProfile, MixedStrategy, SymmetricGame};
use rand::Rng;

const MASTER_SEED: u64 = 20020716;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fastest<T>(runs: usize, mut f: impl FnMut() -> T) -> (T, Duration) {
    let mut best = Duration::MAX;
    let mut out = None;
    for _ in 0..runs {
        let start = Instant::now();
        let v = f();
        best = best.min(start.elapsed());
        out = Some(v);
    }
    (out.expect("at least one run"), best)
}

fn fig3_beliefs(game: &Game) -> Vec<BeliefState> {
    (0..2)
        .map(|i| BeliefState::new(game, i, vec![vec![1.0, 1.5]]).unwrap())
        .collect()
}

fn criterion_1() -> Outcome {
    let g = fig2();
    let (solution, took) = fastest(20, || {
        iterated_dominance(&g, DominanceMode::Strict)
            .unwrap()
            .solution()
    });
    let ok = solution == Some(vec![0, 1]);
    let fast = took < Duration::from_millis(1);
    outcome(
        ok && fast,
        format!("solution {solution:?}, fastest run {took:?} (limit 1 ms)"),
    )
}

fn criterion_2() -> Outcome {
    let g = fig3();
    let config = FpConfig {
        budget: 100,
        ..FpConfig::default()
    };
    let (trace, took) = fastest(10, || run_fp(&g, fig3_beliefs(&g), &config).unwrap());
    let alternating = trace.steps.len() == 100
        && trace
            .steps
            .iter()
            .all(|s| s.profile == if s.t % 2 == 1 { vec![0, 0] } else { vec![1, 1] });
    let period_two = matches!(&trace.status, FpStatus::Cycle { period: 2, .. });
    let fast = took < Duration::from_millis(10);
    outcome(
        alternating && period_two && fast,
        format!(
            "{} steps alternating={alternating}, status `{}`, fastest run {took:?} (limit 10 ms)",
            trace.steps.len(),
            trace.status.describe(&g)
        ),
    )
}

fn criterion_3() -> Outcome {
    let g = fig3();
    let eq = enumerate_nash_2p(&g).unwrap();
    let half = MixedProfile::uniform(&g);
    let found = eq.iter().find(|r| r.profile.distance(&half) <= 1e-9);
    match found {
        Some(r) => outcome(
            r.regret < 1e-9,
            format!(
                "{} equilibria, uniform profile regret {:e}",
                eq.len(),
                r.regret
            ),
        ),
        None => outcome(
            false,
            format!("uniform profile missing among {} equilibria", eq.len()),
        ),
    }
}

fn criterion_4() -> Outcome {
    let mut rng = rng_from_seed(derive_seed(MASTER_SEED, 4));
    let steps = 500;
    let (mut games, mut held) = (0, 0);
    while games < 200 {
        let m = rng.gen_range(2..=4);
        let n = rng.gen_range(2..=4);
        let g = common::integer_bimatrix(&mut rng, m, n, -5, 5);
        let strict = common::strict_pure_equilibria(&g);
        if strict.is_empty() {
            continue;
        }
        games += 1;
        let eq = &strict[rng.gen_range(0..strict.len())];
        // Point-mass beliefs on the equilibrium make it the unique best response.
        let beliefs = (0..2)
            .map(|i| {
                let j = 1 - i;
                let mut w = vec![0.0; g.num_actions(j)];
                w[eq[j]] = 1.0;
                BeliefState::new(&g, i, vec![w]).unwrap()
            })
            .collect();
        let config = FpConfig {
            budget: steps + 1,
            convergence_window: steps + 2,
            ..FpConfig::default()
        };
        let trace = run_fp(&g, beliefs, &config).unwrap();
        if trace.steps.len() == steps + 1 && trace.steps.iter().all(|s| &s.profile == eq) {
            held += 1;
        }
    }
    outcome(
        held == games,
        format!("{held}/{games} games kept the strict equilibrium for {steps} further steps"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = rng_from_seed(derive_seed(MASTER_SEED, 5));
    let (mut converged, mut verified) = (0, 0);
    for k in 0..500 {
        let players = if k % 5 == 4 { 3 } else { 2 };
        let counts: Vec<usize> = (0..players).map(|_| rng.gen_range(2..=3)).collect();
        let g = common::integer_game(&mut rng, &counts, -5, 5);
        let beliefs = (0..players)
            .map(|i| {
                let w = (0..players)
                    .filter(|&j| j != i)
                    .map(|j| (0..counts[j]).map(|_| rng.gen_range(0.1..2.0)).collect())
                    .collect();
                BeliefState::new(&g, i, w).unwrap()
            })
            .collect();
        let config = FpConfig {
            budget: 500,
            seed: derive_seed(MASTER_SEED, 500 + k),
            ..FpConfig::default()
        };
        let trace = run_fp(&g, beliefs, &config).unwrap();
        if let FpStatus::Converged { profile, .. } = &trace.status {
            converged += 1;
            let p = MixedProfile::pure(&g, profile).unwrap();
            if verify_nash(&g, &p, 1e-9).unwrap().equilibrium {
                verified += 1;
            }
        }
    }
    outcome(
        converged > 0 && verified == converged,
        format!("{verified}/{converged} converged runs are equilibria (500 games)"),
    )
}

/// Random symmetric games whose payoffs are small enough that `1 + u > 0`
/// and the discrete map does not overshoot near rest points.
fn battery() -> Vec<SymmetricGame> {
    let mut rng = rng_from_seed(derive_seed(MASTER_SEED, 6));
    (0..100)
        .map(|k| {
            let n = 2 + k % 3;
            common::small_symmetric(&mut rng, n, 0.05)
        })
        .collect()
}

fn symmetric_equilibria(sym: &SymmetricGame) -> Vec<Vec<f64>> {
    enumerate_nash_2p(&sym.embed())
        .unwrap()
        .into_iter()
        .filter(|r| r.profile.strategy(0).distance(r.profile.strategy(1)) <= 1e-9)
        .map(|r| r.profile.strategy(0).probs().to_vec())
        .collect()
}

fn criterion_6(games: &[SymmetricGame]) -> Outcome {
    let (mut checked, mut fixed) = (0, 0);
    let mut worst: f64 = 0.0;
    for sym in games {
        for x in symmetric_equilibria(sym) {
            checked += 1;
            let next = replicator_step(sym, &Population::from_shares(&x).unwrap())
                .unwrap()
                .shares();
            let moved = next
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(moved);
            if moved < 1e-9 {
                fixed += 1;
            }
        }
    }
    outcome(
        checked > 0 && fixed == checked,
        format!(
            "{fixed}/{checked} symmetric equilibria fixed by one step (largest move {worst:e})"
        ),
    )
}

fn criterion_7(games: &[SymmetricGame]) -> Outcome {
    let start = Instant::now();
    let probe = ProbeConfig {
        seed: derive_seed(MASTER_SEED, 7),
        ..ProbeConfig::default()
    };
    let (mut stable, mut stable_nash) = (0, 0);
    let (mut ess, mut ess_stable) = (0, 0);
    for sym in games {
        let g = sym.embed();
        for x in steady_states(sym) {
            let report = match stability_probe(sym, &x, &probe) {
                Ok(r) => r,
                Err(_) => continue,
            };
            if report.stable {
                stable += 1;
                let s = MixedStrategy::new(x.clone()).unwrap();
                let p = MixedProfile::new(vec![s.clone(), s]);
                if verify_nash(&g, &p, 1e-9).unwrap().equilibrium {
                    stable_nash += 1;
                }
            }
        }
        for x in symmetric_equilibria(sym) {
            let s = MixedStrategy::new(x.clone()).unwrap();
            if check_ess(sym, &s, DEFAULT_ESS_RESOLUTION).unwrap().is_ess {
                ess += 1;
                if stability_probe(sym, &x, &probe)
                    .map(|r| r.stable)
                    .unwrap_or(false)
                {
                    ess_stable += 1;
                }
            }
        }
    }
    let took = start.elapsed();
    outcome(
        stable > 0 && ess > 0 && stable == stable_nash && ess == ess_stable && took < Duration::from_secs(60),
        format!(
            "{stable_nash}/{stable} stable steady states are Nash, {ess_stable}/{ess} ESS are stable, {took:.1?} (limit 60 s)"
        ),
    )
}

fn criterion_8() -> Outcome {
    let grid = [0.3, 0.6, 0.9];
    let steps = 30;
    let mut failures = Vec::new();
    let mut worst_z: f64 = 0.0;
    let mut worst_tail: f64 = 0.0;
    for (k, &r) in grid.iter().enumerate() {
        for (m, &l) in grid.iter().enumerate() {
            let params = ClriParams::single(AgentRates::new(4, l, l, r).unwrap(), 0.0).unwrap();
            let config = SimConfig {
                states: 20,
                distribution: None,
                e0: vec![1.0],
                steps,
                trials: 10_000,
                seed: derive_seed(MASTER_SEED, 80 + 3 * k as u64 + m as u64),
            };
            let est = clri_simulate(&params, &config).unwrap();
            let pred = clri_predict(&params, &[1.0], steps).unwrap();
            for t in 0..=steps {
                let diff = (est.mean[0][t] - pred.errors[0][t]).abs();
                let se = est.standard_error(0, t);
                if se > 0.0 {
                    worst_z = worst_z.max(diff / se);
                }
                if diff > 3.0 * se + 1e-12 {
                    failures.push(format!(
                        "r={r} l={l} step {t}: off by {diff:.5} ({:.2} SE)",
                        diff / se
                    ));
                }
            }
            let stationary = (1.0 - r) / (1.0 - r + l);
            let tail = (est.mean[0][steps] - stationary).abs();
            worst_tail = worst_tail.max(tail);
            if tail > 0.01 {
                failures.push(format!(
                    "r={r} l={l}: final error off the fixed point by {tail:.4}"
                ));
            }
        }
    }
    let mut detail = format!(
        "9 grid points, 31 steps each: largest deviation {worst_z:.2} SE, largest long-run gap {worst_tail:.4}"
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; {}", failures.join("; ")));
    }
    outcome(failures.is_empty(), detail)
}

fn criterion_9() -> Outcome {
    let steps = 30;
    let mut worst: f64 = 0.0;
    let mut bound: f64 = 0.0;
    let mut case = 0;
    for &v in &[0.1, 0.2] {
        for &gap in &[0.0, 0.1, 0.2] {
            for &actions in &[4usize, 8] {
                for &(r, l) in &[(0.9, 0.5), (0.6, 0.3)] {
                    case += 1;
                    let rates = AgentRates::new(actions, l + gap, l, r).unwrap();
                    let params = ClriParams::single(rates, v).unwrap();
                    let config = SimConfig {
                        states: 20,
                        distribution: None,
                        e0: vec![1.0],
                        steps,
                        trials: 10_000,
                        seed: derive_seed(MASTER_SEED, 900 + case),
                    };
                    let est = clri_simulate(&params, &config).unwrap();
                    let pred = clri_predict(&params, &[1.0], steps).unwrap();
                    for t in 0..=steps {
                        worst = worst.max((est.mean[0][t] - pred.errors[0][t]).abs());
                    }
                    bound = bound.max(v * gap / (actions as f64 - 1.0));
                }
            }
        }
    }
    outcome(
        worst <= 0.05,
        format!(
            "{case} cases, largest gap {worst:.4} (limit 0.05); residual bound v(c-l)/(|A|-1) = {bound:.4}"
        ),
    )
}

fn society(game: &Game, roster: Vec<AgentSpec>, seed: u64) -> magt_core::nlevel::SocietyTrace {
    let config = SocietyConfig {
        steps: 1000,
        seed,
        mode: SocietyMode::Auto,
    };
    run_society(game, &roster, &config).unwrap()
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let g1 = fig1();
    let (mut wins1, mut margin1) = (0, 0.0);
    for k in 0..20u64 {
        // Alternate which seat the level-1 agent takes.
        let seat = (k % 2) as usize;
        let mut roster = vec![AgentSpec::new(Level::Zero); 2];
        roster[seat] = AgentSpec::new(Level::One);
        let t = society(&g1, roster, derive_seed(MASTER_SEED, 1000 + k));
        let gap = t.mean_utility(seat) - t.mean_utility(1 - seat);
        margin1 += gap / 20.0;
        if gap > 0.0 {
            wins1 += 1;
        }
    }

    let g3 = fig3();
    let (mut wins2, mut margin2) = (0, 0.0);
    for k in 0..20u64 {
        let mut roster = vec![AgentSpec::new(Level::One); 4];
        roster[0] = AgentSpec::new(Level::Two);
        let t = society(&g3, roster, derive_seed(MASTER_SEED, 2000 + k));
        let l1 = t.level_mean(&Level::One).unwrap();
        let gap = t.mean_utility(0) - l1;
        margin2 += gap / 20.0;
        if gap > 0.0 {
            wins2 += 1;
        }
    }
    let took = start.elapsed();
    outcome(
        wins1 >= 18 && wins2 >= 15 && margin2 < margin1 && took < Duration::from_secs(120),
        format!(
            "level 1 beats level 0 in {wins1}/20 (mean margin {margin1:.3}); level 2 beats level 1 in {wins2}/20 (mean margin {margin2:.3}); {took:.1?}"
        ),
    )
}

fn outputs() -> Vec<Vec<u8>> {
    let mut files = Vec::new();
    let mut push = |f: &mut dyn FnMut(&mut Vec<u8>)| {
        let mut buf = Vec::new();
        f(&mut buf);
        files.push(buf);
    };
    let g2 = fig2();
    push(&mut |b| {
        iterated_dominance(&g2, DominanceMode::Strict)
            .unwrap()
            .write_log_csv(b)
            .unwrap()
    });
    push(&mut |b| write_nash_csv(&enumerate_nash_2p(&fig3()).unwrap(), b).unwrap());
    let g3 = fig3();
    push(&mut |b| {
        let config = FpConfig {
            budget: 100,
            tie_rule: TieRule::UniformRandom,
            seed: 5,
            ..FpConfig::default()
        };
        run_fp(&g3, fig3_beliefs(&g3), &config)
            .unwrap()
            .write_csv(&g3, b)
            .unwrap()
    });
    let sym = fig3_symmetric();
    push(&mut |b| {
        run_replicator(
            &sym,
            Population::new(vec![20.0, 80.0]).unwrap(),
            &ReplicatorConfig::default(),
        )
        .unwrap()
        .write_csv(&sym, b)
        .unwrap()
    });
    push(&mut |b| {
        stability_probe(&sym, &[0.5, 0.5], &ProbeConfig::default())
            .unwrap()
            .write_csv(b)
            .unwrap()
    });
    push(&mut |b| {
        let params = ClriParams::single(AgentRates::new(4, 0.6, 0.5, 0.9).unwrap(), 0.1).unwrap();
        let config = SimConfig {
            states: 20,
            distribution: None,
            e0: vec![1.0],
            steps: 20,
            trials: 2000,
            seed: 3,
        };
        let est = clri_simulate(&params, &config).unwrap();
        let pred = clri_predict(&params, &[1.0], 20).unwrap();
        write_clri_csv(&pred, &est, b).unwrap()
    });
    let g1 = fig1();
    push(&mut |b| {
        let roster = vec![AgentSpec::new(Level::Two), AgentSpec::new(Level::Zero)];
        society(&g1, roster, 11).write_csv(&g1, b).unwrap()
    });
    files
}

fn criterion_11() -> Outcome {
    let first = outputs();
    let second = outputs();
    let same = first.iter().zip(&second).filter(|(a, b)| a == b).count();
    outcome(
        same == first.len() && first.iter().all(|f| !f.is_empty()),
        format!(
            "{same}/{} CSV outputs byte-identical across reruns",
            first.len()
        ),
    )
}

fn main() {
    let games = battery();
    let criteria: Vec<(u32, &str, Box<dyn Fn() -> Outcome>)> = vec![
        (
            1,
            "iterated strict dominance solves the game",
            Box::new(criterion_1),
        ),
        (
            2,
            "anti-coordination fictitious-play cycle",
            Box::new(criterion_2),
        ),
        (
            3,
            "anti-coordination mixed equilibrium",
            Box::new(criterion_3),
        ),
        (
            4,
            "strict equilibria persist under fictitious play",
            Box::new(criterion_4),
        ),
        (
            5,
            "converged fictitious play is Nash",
            Box::new(criterion_5),
        ),
        (
            6,
            "symmetric equilibria are replicator rest points",
            Box::new(|| criterion_6(&games)),
        ),
        (
            7,
            "stable implies Nash, ESS implies stable",
            Box::new(|| criterion_7(&games)),
        ),
        (
            8,
            "CLRI prediction vs simulation without volatility",
            Box::new(criterion_8),
        ),
        (
            9,
            "CLRI prediction vs simulation with volatility",
            Box::new(criterion_9),
        ),
        (10, "n-level ordering", Box::new(criterion_10)),
        (11, "reproducible outputs", Box::new(criterion_11)),
    ];
    let mut failed = 0;
    for (id, name, run) in &criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}: {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "{}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
