//! Change/learning/retention/impact model of learning agents chasing moving
//! targets: the closed-form expected-error recurrence, volatility from
//! impacts, and a Monte-Carlo simulator of the underlying process.

mod fit;
mod simulate;

pub use fit::{fit_clri, ClriFit, FitOptions};
pub use simulate::{clri_simulate, write_clri_csv, ClriEstimate, SimConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values this far outside [0, 1] are clamped (and reported) by the predictor.
pub const DRIFT_TOLERANCE: f64 = 1e-12;

/// Rates of a single agent. `c` is the per-mapping probability that a wrong
/// mapping changes at all, `l` that it changes to the correct action, and `r`
/// that a correct mapping is kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentRates {
    pub actions: usize,
    pub c: f64,
    pub l: f64,
    pub r: f64,
}

impl AgentRates {
    pub fn new(actions: usize, c: f64, l: f64, r: f64) -> Result<Self> {
        let rates = AgentRates { actions, c, l, r };
        rates.validate()?;
        Ok(rates)
    }

    fn validate(&self) -> Result<()> {
        if self.actions < 2 {
            return Err(Error::domain(format!(
                "an agent needs at least 2 actions, got {}",
                self.actions
            )));
        }
        for (name, x) in [("c", self.c), ("l", self.l), ("r", self.r)] {
            check_rate(name, x)?;
        }
        if self.l > self.c {
            return Err(Error::domain(format!(
                "learning rate {} exceeds change rate {}",
                self.l, self.c
            )));
        }
        Ok(())
    }
}

fn check_rate(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {x} is not in [0, 1]")))
    }
}

/// Where each agent's volatility comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Fixed per-agent volatility.
    Volatility(Vec<f64>),
    /// `impact[j][i]`: probability that a change in `j`'s decision at a state
    /// moves `i`'s target there. The diagonal is ignored.
    Impact(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClriParams {
    agents: Vec<AgentRates>,
    coupling: Coupling,
}

impl ClriParams {
    pub fn new(agents: Vec<AgentRates>, coupling: Coupling) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::domain("no agents"));
        }
        for a in &agents {
            a.validate()?;
        }
        let n = agents.len();
        match &coupling {
            Coupling::Volatility(v) => {
                if v.len() != n {
                    return Err(Error::domain(format!(
                        "{} volatilities for {n} agents",
                        v.len()
                    )));
                }
                for &x in v {
                    check_rate("v", x)?;
                }
            }
            Coupling::Impact(m) => {
                if m.len() != n || m.iter().any(|row| row.len() != n) {
                    return Err(Error::domain(format!("impact matrix must be {n}×{n}")));
                }
                for (j, row) in m.iter().enumerate() {
                    for (i, &x) in row.iter().enumerate() {
                        if i != j {
                            check_rate("impact", x)?;
                        }
                    }
                }
            }
        }
        Ok(ClriParams { agents, coupling })
    }

    /// A single agent facing constant volatility `v`.
    pub fn single(rates: AgentRates, v: f64) -> Result<Self> {
        ClriParams::new(vec![rates], Coupling::Volatility(vec![v]))
    }

    pub fn agents(&self) -> &[AgentRates] {
        &self.agents
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }
}

/// `v_i = 1 − Π_{j≠i} (1 − I_ji · p_j)` where `p_j` is the probability that
/// agent `j`'s decision at a state changes this step. With constant
/// volatility the supplied values are returned unchanged.
pub fn volatility(params: &ClriParams, change_probs: &[f64]) -> Result<Vec<f64>> {
    let n = params.num_agents();
    if change_probs.len() != n {
        return Err(Error::domain(format!(
            "{} change probabilities for {n} agents",
            change_probs.len()
        )));
    }
    for &p in change_probs {
        check_rate("change probability", p)?;
    }
    Ok(match &params.coupling {
        Coupling::Volatility(v) => v.clone(),
        Coupling::Impact(m) => impact_volatility(m, change_probs),
    })
}

pub(crate) fn impact_volatility(impact: &[Vec<f64>], change_probs: &[f64]) -> Vec<f64> {
    let n = change_probs.len();
    (0..n)
        .map(|i| {
            let keep: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| 1.0 - impact[j][i] * change_probs[j])
                .product();
            1.0 - keep
        })
        .collect()
}

/// One application of the expected-error recurrence.
pub fn clri_next_error(rates: &AgentRates, v: f64, e: f64) -> f64 {
    let AgentRates { actions, c, l, r } = *rates;
    let a = actions as f64;
    1.0 - r
        + v * ((a * r - 1.0) / (a - 1.0))
        + e * (r - l + v * ((a * (l - r) + l - c) / (a - 1.0)))
}

/// Probability that a decision mapping changes in one step, given error `e`.
/// With two actions a wrong mapping can only change to the correct one.
pub(crate) fn change_probability(rates: &AgentRates, e: f64) -> f64 {
    let wrong_change = if rates.actions == 2 { rates.l } else { rates.c };
    e * wrong_change + (1.0 - e) * (1.0 - rates.r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Clamp {
    pub agent: usize,
    pub step: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorTrajectory {
    /// `errors[i][t]` for agent `i`, `t = 0..=steps`.
    pub errors: Vec<Vec<f64>>,
    /// Volatility used to go from step `t` to `t + 1`, per agent.
    pub volatility: Vec<Vec<f64>>,
    /// Iterates that drifted out of [0, 1] by more than [`DRIFT_TOLERANCE`].
    pub clamps: Vec<Clamp>,
}

/// Iterates the expected-error recurrence for every agent from `e0`.
///
/// Under impact coupling each step's volatility comes from [`volatility`]
/// with every agent's change probability `e·c + (1−e)(1−r)`.
pub fn clri_predict(params: &ClriParams, e0: &[f64], steps: usize) -> Result<ErrorTrajectory> {
    let n = params.num_agents();
    if e0.len() != n {
        return Err(Error::domain(format!(
            "{} initial errors for {n} agents",
            e0.len()
        )));
    }
    for &e in e0 {
        check_rate("initial error", e)?;
    }
    let mut errors: Vec<Vec<f64>> = e0.iter().map(|&e| vec![e]).collect();
    let mut vols: Vec<Vec<f64>> = vec![Vec::with_capacity(steps); n];
    let mut clamps = Vec::new();
    let mut current = e0.to_vec();
    for step in 1..=steps {
        let change: Vec<f64> = params
            .agents
            .iter()
            .zip(&current)
            .map(|(a, &e)| change_probability(a, e).clamp(0.0, 1.0))
            .collect();
        let v = volatility(params, &change)?;
        for i in 0..n {
            let mut next = clri_next_error(&params.agents[i], v[i], current[i]);
            if !(-DRIFT_TOLERANCE..=1.0 + DRIFT_TOLERANCE).contains(&next) {
                clamps.push(Clamp {
                    agent: i,
                    step,
                    value: next,
                });
                next = next.clamp(0.0, 1.0);
            }
            current[i] = next;
            errors[i].push(next);
            vols[i].push(v[i]);
        }
    }
    Ok(ErrorTrajectory {
        errors,
        volatility: vols,
        clamps,
    })
}

/// Fixed point `(1 − r) / (1 − r + l)` of the recurrence without volatility.
pub fn stationary_error(rates: &AgentRates) -> Option<f64> {
    let denom = 1.0 - rates.r + rates.l;
    (denom > 0.0).then(|| (1.0 - rates.r) / denom)
}

/// Decision and target functions of every agent over a finite set of world
/// states drawn from `distribution`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClriWorld {
    distribution: Vec<f64>,
    actions: Vec<usize>,
    decisions: Vec<Vec<usize>>,
    targets: Vec<Vec<usize>>,
    pub t: usize,
}

impl ClriWorld {
    pub fn new(
        distribution: Vec<f64>,
        actions: Vec<usize>,
        decisions: Vec<Vec<usize>>,
        targets: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let w = distribution.len();
        if w == 0 {
            return Err(Error::domain("no world states"));
        }
        if distribution.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(Error::domain("state probabilities must be nonnegative"));
        }
        let total: f64 = distribution.iter().sum();
        if (total - 1.0).abs() > crate::game::PROB_TOLERANCE {
            return Err(Error::domain(format!("state probabilities sum to {total}")));
        }
        let n = actions.len();
        if decisions.len() != n || targets.len() != n {
            return Err(Error::domain(
                "decision/target functions must exist for every agent",
            ));
        }
        for i in 0..n {
            for f in [&decisions[i], &targets[i]] {
                if f.len() != w {
                    return Err(Error::domain(format!(
                        "agent {i}: function covers {} of {w} states",
                        f.len()
                    )));
                }
                if let Some(&a) = f.iter().find(|&&a| a >= actions[i]) {
                    return Err(Error::domain(format!(
                        "agent {i}: action {a} out of range (agent has {})",
                        actions[i]
                    )));
                }
            }
        }
        Ok(ClriWorld {
            distribution,
            actions,
            decisions,
            targets,
            t: 0,
        })
    }

    pub fn num_states(&self) -> usize {
        self.distribution.len()
    }

    pub fn num_agents(&self) -> usize {
        self.actions.len()
    }

    pub fn distribution(&self) -> &[f64] {
        &self.distribution
    }

    pub fn decisions(&self, agent: usize) -> &[usize] {
        &self.decisions[agent]
    }

    pub fn targets(&self, agent: usize) -> &[usize] {
        &self.targets[agent]
    }

    pub(crate) fn decisions_mut(&mut self, agent: usize) -> &mut [usize] {
        &mut self.decisions[agent]
    }

    pub(crate) fn targets_mut(&mut self, agent: usize) -> &mut [usize] {
        &mut self.targets[agent]
    }
}

/// Probability, under the state distribution, that the agent's decision
/// differs from its target.
pub fn error(world: &ClriWorld, agent: usize) -> Result<f64> {
    if agent >= world.num_agents() {
        return Err(Error::InvalidPlayer {
            player: agent,
            count: world.num_agents(),
        });
    }
    Ok(world
        .distribution
        .iter()
        .zip(&world.decisions[agent])
        .zip(&world.targets[agent])
        .filter(|((_, d), t)| d != t)
        .map(|((p, _), _)| p)
        .sum::<f64>()
        .min(1.0))
}
