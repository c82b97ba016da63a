use std::path::Path;

use magt_core::clri::{
    clri_predict, clri_simulate, write_clri_csv, ClriParams, Coupling, SimConfig,
};
use magt_core::fictitious::{run_fp, BeliefState, FpConfig, TieRule};
use magt_core::nlevel::{run_society, SocietyConfig, SocietyTrace};
use magt_core::replicator::{
    run_replicator, stability_probe, Population, ProbeConfig, ReplicatorConfig, ReplicatorStatus,
};
use magt_core::seed::derive_seed;
use magt_core::MixedStrategy;
use rayon::prelude::*;

use crate::config::{
    load_config, require_seed, resolve_game, symmetric_view, ClriFile, FpFile, ReplicatorFile,
    SocietyFile,
};
use crate::failure::{CliResult, Failure};
use crate::output::OutputDir;

/// Command-line overrides shared by every dynamics.
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<usize>,
}

fn shares_text(shares: &[f64]) -> String {
    MixedStrategy::new(shares.to_vec())
        .map(|s| s.to_string())
        .unwrap_or_else(|_| format!("{shares:?}"))
}

pub fn fp(config_path: &Path, overrides: &Overrides, out: &mut OutputDir) -> CliResult<()> {
    let file: FpFile = load_config(config_path)?;
    let game = resolve_game(&file.game, config_path)?.game;
    let defaults = FpConfig::default();
    let seed = match file.tie_rule {
        TieRule::LowestIndex => overrides.seed.or(file.seed).unwrap_or(0),
        TieRule::UniformRandom => {
            require_seed(overrides.seed, file.seed, "the uniform-random tie rule")?
        }
    };
    let config = FpConfig {
        budget: overrides.budget.or(file.budget).unwrap_or(defaults.budget),
        convergence_window: file
            .convergence_window
            .unwrap_or(defaults.convergence_window),
        cycle_window: file.cycle_window.unwrap_or(defaults.cycle_window),
        tie_rule: file.tie_rule,
        seed,
    };
    let beliefs: Vec<BeliefState> = match file.weights {
        Some(w) => {
            if w.len() != game.num_players() {
                return Err(Failure::input(format!(
                    "`weights` has {} entries for {} players",
                    w.len(),
                    game.num_players()
                )));
            }
            w.into_iter()
                .enumerate()
                .map(|(i, wi)| BeliefState::new(&game, i, wi))
                .collect::<magt_core::Result<_>>()?
        }
        None => (0..game.num_players())
            .map(|i| BeliefState::uniform(&game, i, file.initial_weight))
            .collect::<magt_core::Result<_>>()?,
    };
    let trace = run_fp(&game, beliefs, &config)?;
    out.write_with("fp.csv", |w| trace.write_csv(&game, w))?;
    println!("{}", trace.status.describe(&game));
    Ok(())
}

pub fn replicator(config_path: &Path, overrides: &Overrides, out: &mut OutputDir) -> CliResult<()> {
    let file: ReplicatorFile = load_config(config_path)?;
    let loaded = resolve_game(&file.game, config_path)?;
    let sym = symmetric_view(&loaded)
        .ok_or_else(|| Failure::input("replicator dynamics need a symmetric 2-player game"))?;
    let n = sym.num_actions();
    let population = match (file.counts, file.shares) {
        (Some(_), Some(_)) => {
            return Err(Failure::input("give at most one of `counts` and `shares`"))
        }
        (Some(c), None) => Population::new(c)?,
        (None, Some(s)) => Population::from_shares(&s)?,
        (None, None) => Population::from_shares(&vec![1.0 / n as f64; n])?,
    };
    let defaults = ReplicatorConfig::default();
    let config = ReplicatorConfig {
        budget: overrides.budget.or(file.budget).unwrap_or(defaults.budget),
        eps: file.eps.unwrap_or(defaults.eps),
        confirm: file.confirm.unwrap_or(defaults.confirm),
    };
    let trace = run_replicator(&sym, population, &config)?;
    out.write_with("replicator.csv", |w| trace.write_csv(&sym, w))?;
    for e in &trace.extinctions {
        println!(
            "extinct strategy={} step={}",
            sym.actions()[e.strategy],
            e.step
        );
    }
    let steady = match &trace.status {
        ReplicatorStatus::Steady { shares, step } => {
            println!("steady step={step} shares={}", shares_text(shares));
            Some(shares.clone())
        }
        ReplicatorStatus::BudgetExhausted => {
            println!("budget_exhausted steps={}", trace.shares.len() - 1);
            None
        }
    };

    if let Some(probe) = file.probe {
        let candidate = probe.candidate.or(steady).ok_or_else(|| {
            Failure::input("probe has no `candidate` and the run did not reach a steady state")
        })?;
        let defaults = ProbeConfig::default();
        let config = ProbeConfig {
            eps_p: probe.eps_p.unwrap_or(defaults.eps_p),
            trials: probe.trials.unwrap_or(defaults.trials),
            seed: require_seed(overrides.seed, file.seed, "the stability probe")?,
            budget: probe.budget.unwrap_or(defaults.budget),
            steady_eps: probe.steady_eps.unwrap_or(defaults.steady_eps),
        };
        let report = stability_probe(&sym, &candidate, &config)?;
        out.write_with("probe.csv", |w| report.write_csv(w))?;
        let returned = report.trials.iter().filter(|t| t.returned).count();
        println!(
            "probe candidate={} stable={} returned={returned}/{}",
            shares_text(&candidate),
            report.stable,
            report.trials.len()
        );
    }
    Ok(())
}

pub fn clri(config_path: &Path, overrides: &Overrides, out: &mut OutputDir) -> CliResult<()> {
    let file: ClriFile = load_config(config_path)?;
    let coupling = match (file.volatility, file.impact) {
        (Some(v), None) => Coupling::Volatility(v),
        (None, Some(m)) => Coupling::Impact(m),
        _ => {
            return Err(Failure::input(
                "give exactly one of `volatility` and `impact`",
            ))
        }
    };
    let params = ClriParams::new(file.agents, coupling)?;
    let steps = overrides.budget.unwrap_or(file.steps);
    let sim = SimConfig {
        states: file.states,
        distribution: file.distribution,
        e0: file.e0,
        steps,
        trials: file.trials,
        seed: require_seed(overrides.seed, file.seed, "the error simulation")?,
    };
    let prediction = clri_predict(&params, &sim.e0, steps)?;
    let estimate = clri_simulate(&params, &sim)?;
    out.write_with("clri.csv", |w| write_clri_csv(&prediction, &estimate, w))?;
    for c in &prediction.clamps {
        println!(
            "warning: agent {} step {}: predicted error {} clamped to [0, 1]",
            c.agent + 1,
            c.step,
            c.value
        );
    }
    for i in 0..params.num_agents() {
        println!(
            "agent {} step={steps} predicted={:.6} empirical={:.6} ci95=±{:.6} trials={}",
            i + 1,
            prediction.errors[i][steps],
            estimate.mean[i][steps],
            estimate.half_width[i][steps],
            estimate.trials
        );
    }
    Ok(())
}

pub fn society(config_path: &Path, overrides: &Overrides, out: &mut OutputDir) -> CliResult<()> {
    let file: SocietyFile = load_config(config_path)?;
    let game = resolve_game(&file.game, config_path)?.game;
    if file.runs == 0 {
        return Err(Failure::input("`runs` must be at least 1"));
    }
    let master = require_seed(overrides.seed, file.seed, "the society")?;
    let steps = overrides.budget.unwrap_or(file.steps);
    let seeds: Vec<u64> = if file.runs == 1 {
        vec![master]
    } else {
        (0..file.runs as u64)
            .map(|k| derive_seed(master, k))
            .collect()
    };
    let traces: Vec<SocietyTrace> = seeds
        .par_iter()
        .map(|&seed| {
            let config = SocietyConfig {
                steps,
                seed,
                mode: file.mode,
            };
            run_society(&game, &file.roster, &config)
        })
        .collect::<magt_core::Result<_>>()?;

    let width = file.runs.to_string().len();
    for (k, trace) in traces.iter().enumerate() {
        let name = if file.runs == 1 {
            "society.csv".to_string()
        } else {
            format!("society_{:0width$}.csv", k + 1)
        };
        out.write_with(&name, |w| trace.write_csv(&game, w))?;
    }
    out.write_with("summary.csv", |w| write_summary(&traces, w))?;
    print_level_table(&traces);
    Ok(())
}

/// Columns: `run,agent,level,mean_utility,variance,cost_per_decision`.
fn write_summary(traces: &[SocietyTrace], out: &mut Vec<u8>) -> magt_core::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "run",
        "agent",
        "level",
        "mean_utility",
        "variance",
        "cost_per_decision",
    ])?;
    for (k, trace) in traces.iter().enumerate() {
        for s in trace.summary() {
            w.write_record([
                (k + 1).to_string(),
                (s.agent + 1).to_string(),
                s.level.to_string(),
                s.mean.to_string(),
                s.variance.to_string(),
                s.cost_per_decision.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn print_level_table(traces: &[SocietyTrace]) {
    let mut levels: Vec<String> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for trace in traces {
        for s in trace.summary() {
            let name = s.level.to_string();
            let k = match levels.iter().position(|l| *l == name) {
                Some(k) => k,
                None => {
                    levels.push(name);
                    values.push(Vec::new());
                    levels.len() - 1
                }
            };
            values[k].push(s.mean);
        }
    }
    println!("runs={} steps={}", traces.len(), traces[0].steps.len());
    println!(
        "{:<6} {:>12} {:>12} {:>6}",
        "level", "mean_utility", "sd", "n"
    );
    for (name, v) in levels.iter().zip(&values) {
        let (mean, sd) = crate::report::mean_sd(v);
        println!("{name:<6} {mean:>12.6} {sd:>12.6} {:>6}", v.len());
    }
}
