use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{impact_volatility, ClriParams, ClriWorld, Coupling, ErrorTrajectory};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed, SimRng};

const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub states: usize,
    /// State weights; uniform when `None`.
    pub distribution: Option<Vec<f64>>,
    /// Expected initial error per agent. Each state starts wrong independently
    /// with this probability.
    pub e0: Vec<f64>,
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Per-step statistics over trials, indexed `[agent][step]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClriEstimate {
    pub mean: Vec<Vec<f64>>,
    pub sd: Vec<Vec<f64>>,
    /// `1.96 · sd / √trials`.
    pub half_width: Vec<Vec<f64>>,
    /// Mean volatility applied from step `t` to `t + 1`.
    pub volatility: Vec<Vec<f64>>,
    pub trials: usize,
}

impl ClriEstimate {
    pub fn standard_error(&self, agent: usize, step: usize) -> f64 {
        self.sd[agent][step] / (self.trials as f64).sqrt()
    }
}

struct TrialResult {
    errors: Vec<Vec<f64>>,
    volatility: Vec<Vec<f64>>,
}

fn wrong_action<R: Rng>(actions: usize, target: usize, rng: &mut R) -> usize {
    let x = rng.gen_range(0..actions - 1);
    if x >= target {
        x + 1
    } else {
        x
    }
}

/// A wrong action other than both `target` and `current`, or `current` when
/// there is none (two actions).
fn other_wrong_action<R: Rng>(actions: usize, target: usize, current: usize, rng: &mut R) -> usize {
    if actions < 3 {
        return current;
    }
    let (lo, hi) = if target < current {
        (target, current)
    } else {
        (current, target)
    };
    let mut x = rng.gen_range(0..actions - 2);
    if x >= lo {
        x += 1;
    }
    if x >= hi {
        x += 1;
    }
    x
}

fn initial_world(params: &ClriParams, dist: &[f64], e0: &[f64], rng: &mut SimRng) -> ClriWorld {
    let actions: Vec<usize> = params.agents().iter().map(|a| a.actions).collect();
    let mut decisions = Vec::with_capacity(actions.len());
    let mut targets = Vec::with_capacity(actions.len());
    for (&a, &e) in actions.iter().zip(e0) {
        let t: Vec<usize> = dist.iter().map(|_| rng.gen_range(0..a)).collect();
        let d = t
            .iter()
            .map(|&target| {
                if rng.gen_bool(e) {
                    wrong_action(a, target, rng)
                } else {
                    target
                }
            })
            .collect();
        decisions.push(d);
        targets.push(t);
    }
    ClriWorld::new(dist.to_vec(), actions, decisions, targets).expect("generated world is valid")
}

/// One step of the generative process. Returns the volatility applied.
fn step_world(params: &ClriParams, world: &mut ClriWorld, rng: &mut SimRng) -> Vec<f64> {
    let n = params.num_agents();
    let mut change_freq = vec![0.0; n];
    for (i, rates) in params.agents().iter().enumerate() {
        let targets = world.targets(i).to_vec();
        let dist = world.distribution().to_vec();
        let decisions = world.decisions_mut(i);
        for (w, d) in decisions.iter_mut().enumerate() {
            let target = targets[w];
            let before = *d;
            if before != target {
                let u: f64 = rng.gen();
                if u < rates.l {
                    *d = target;
                } else if u < rates.c {
                    *d = other_wrong_action(rates.actions, target, before, rng);
                }
            } else if !rng.gen_bool(rates.r) {
                *d = wrong_action(rates.actions, target, rng);
            }
            if *d != before {
                change_freq[i] += dist[w];
            }
        }
    }
    let v = match params.coupling() {
        Coupling::Volatility(v) => v.clone(),
        Coupling::Impact(m) => impact_volatility(m, &change_freq),
    };
    for (i, rates) in params.agents().iter().enumerate() {
        let vi = v[i].clamp(0.0, 1.0);
        for t in world.targets_mut(i).iter_mut() {
            if rng.gen_bool(vi) {
                *t = wrong_action(rates.actions, *t, rng);
            }
        }
    }
    world.t += 1;
    v
}

fn run_trial(params: &ClriParams, dist: &[f64], config: &SimConfig, trial: usize) -> TrialResult {
    let mut rng = rng_from_seed(derive_seed(config.seed, trial as u64));
    let mut world = initial_world(params, dist, &config.e0, &mut rng);
    let n = params.num_agents();
    let mut errors: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut v = Vec::with_capacity(config.steps + 1);
            v.push(super::error(&world, i).expect("agent exists"));
            v
        })
        .collect();
    let mut volatility = vec![Vec::with_capacity(config.steps); n];
    for _ in 0..config.steps {
        let v = step_world(params, &mut world, &mut rng);
        for i in 0..n {
            errors[i].push(super::error(&world, i).expect("agent exists"));
            volatility[i].push(v[i]);
        }
    }
    TrialResult { errors, volatility }
}

/// Runs the generative process `trials` times and summarizes each agent's
/// empirical error per step.
///
/// Per step, for every agent and state: a wrong mapping becomes correct with
/// probability `l`, moves to another wrong action with probability `c − l`,
/// and is otherwise kept; a correct mapping is kept with probability `r`,
/// else replaced by a uniform wrong action. The target then moves to a
/// uniform different action with probability `v_i`, which is either given or
/// computed from the measured decision-change frequencies of the others.
///
/// Trials use seeds `derive_seed(seed, trial)` and are merged in trial order,
/// so results do not depend on the thread count.
pub fn clri_simulate(params: &ClriParams, config: &SimConfig) -> Result<ClriEstimate> {
    let n = params.num_agents();
    if config.trials < 1 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    if config.states < 1 {
        return Err(Error::Precondition("need at least one world state".into()));
    }
    if config.e0.len() != n {
        return Err(Error::domain(format!(
            "{} initial errors for {n} agents",
            config.e0.len()
        )));
    }
    for &e in &config.e0 {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::domain(format!("initial error {e} is not in [0, 1]")));
        }
    }
    let dist = match &config.distribution {
        None => vec![1.0 / config.states as f64; config.states],
        Some(d) => {
            if d.len() != config.states {
                return Err(Error::domain(format!(
                    "distribution has {} weights for {} states",
                    d.len(),
                    config.states
                )));
            }
            if d.iter().any(|&x| x.is_nan() || x < 0.0) {
                return Err(Error::domain("state weights must be nonnegative"));
            }
            let total: f64 = d.iter().sum();
            if total.is_nan() || total <= 0.0 || !total.is_finite() {
                return Err(Error::domain(
                    "state weights must have a positive finite sum",
                ));
            }
            d.iter().map(|x| x / total).collect()
        }
    };

    let len = config.steps + 1;
    // Welford accumulators, updated in trial order.
    let mut count = 0.0;
    let mut mean = vec![vec![0.0; len]; n];
    let mut m2 = vec![vec![0.0; len]; n];
    let mut vol = vec![vec![0.0; config.steps]; n];
    let mut start = 0;
    while start < config.trials {
        let end = (start + CHUNK).min(config.trials);
        let chunk: Vec<TrialResult> = (start..end)
            .into_par_iter()
            .map(|trial| run_trial(params, &dist, config, trial))
            .collect();
        for result in chunk {
            count += 1.0;
            for i in 0..n {
                for (t, &x) in result.errors[i].iter().enumerate() {
                    let delta = x - mean[i][t];
                    mean[i][t] += delta / count;
                    m2[i][t] += delta * (x - mean[i][t]);
                }
                for (t, &v) in result.volatility[i].iter().enumerate() {
                    vol[i][t] += v;
                }
            }
        }
        start = end;
    }
    let trials = config.trials as f64;
    let sd: Vec<Vec<f64>> = m2
        .iter()
        .map(|row| {
            row.iter()
                .map(|&s| {
                    if config.trials > 1 {
                        (s / (trials - 1.0)).sqrt()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let half_width = sd
        .iter()
        .map(|row| row.iter().map(|s| 1.96 * s / trials.sqrt()).collect())
        .collect();
    vol.iter_mut().flatten().for_each(|v| *v /= trials);
    Ok(ClriEstimate {
        mean,
        sd,
        half_width,
        volatility: vol,
        trials: config.trials,
    })
}

/// Columns: `step`, then per agent (1-based) `predicted_<i>`,
/// `empirical_<i>`, `half_width_<i>`.
pub fn write_clri_csv<W: std::io::Write>(
    prediction: &ErrorTrajectory,
    estimate: &ClriEstimate,
    out: W,
) -> Result<()> {
    let n = prediction.errors.len();
    if estimate.mean.len() != n {
        return Err(Error::domain(
            "prediction and estimate cover different agents",
        ));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string()];
    for i in 1..=n {
        header.push(format!("predicted_{i}"));
        header.push(format!("empirical_{i}"));
        header.push(format!("half_width_{i}"));
    }
    w.write_record(&header)?;
    let steps = prediction.errors[0].len().min(estimate.mean[0].len());
    for t in 0..steps {
        let mut row = vec![t.to_string()];
        for i in 0..n {
            row.push(prediction.errors[i][t].to_string());
            row.push(estimate.mean[i][t].to_string());
            row.push(estimate.half_width[i][t].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
