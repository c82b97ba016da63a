//! Agents that model other agents to different depths, playing a repeated
//! normal-form game.
//!
//! * Level 0 learns action values from its own rewards (ε-greedy on
//!   empirical means) and never looks at anyone else.
//! * Level 1 keeps frequency counts of every other agent's actions and
//!   best-responds to them.
//! * Level 2 assumes everyone else is level 1, predicts each one's best
//!   response from the frequency model that agent would hold, and
//!   best-responds to the predicted joint action.
//!
//! A society either seats one agent per player (`Fixed`), or, for a
//! symmetric 2-player game, pairs an even roster at random every step
//! (`Matching`).

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::equilibria::argmax_set;
use crate::error::{Error, Result};
use crate::game::{Game, MixedStrategy};
use crate::seed::{derive_seed, rng_from_seed, SimRng};

pub const DEFAULT_EPSILON: f64 = 0.05;

/// Modeling depth. `Fixed` is a scripted, non-learning agent that plays a
/// constant mixed strategy; it is a baseline, not a modeling level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LevelRepr", into = "LevelRepr")]
pub enum Level {
    Zero,
    One,
    Two,
    Fixed(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LevelRepr {
    Depth(u8),
    Fixed { fixed: Vec<f64> },
}

impl TryFrom<LevelRepr> for Level {
    type Error = String;

    fn try_from(r: LevelRepr) -> std::result::Result<Self, String> {
        match r {
            LevelRepr::Depth(0) => Ok(Level::Zero),
            LevelRepr::Depth(1) => Ok(Level::One),
            LevelRepr::Depth(2) => Ok(Level::Two),
            LevelRepr::Depth(d) => Err(format!("level {d} is not supported (use 0, 1 or 2)")),
            LevelRepr::Fixed { fixed } => Ok(Level::Fixed(fixed)),
        }
    }
}

impl From<Level> for LevelRepr {
    fn from(l: Level) -> Self {
        match l {
            Level::Zero => LevelRepr::Depth(0),
            Level::One => LevelRepr::Depth(1),
            Level::Two => LevelRepr::Depth(2),
            Level::Fixed(fixed) => LevelRepr::Fixed { fixed },
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Zero => f.write_str("L0"),
            Level::One => f.write_str("L1"),
            Level::Two => f.write_str("L2"),
            Level::Fixed(_) => f.write_str("F"),
        }
    }
}

/// What a level-2 agent takes the other agents' payoffs to be.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpponentPayoffs {
    /// The game's actual payoffs for each opponent.
    #[default]
    True,
    /// The agent's own payoff function, with the opponent in its seat.
    AssumeMine,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub level: Level,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Overrides the seed derived from the society seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Only meaningful for level 2.
    #[serde(default)]
    pub payoff_knowledge: Option<OpponentPayoffs>,
    /// Stop updating models and value estimates from this step on.
    #[serde(default)]
    pub learn_until: Option<usize>,
}

impl AgentSpec {
    pub fn new(level: Level) -> Self {
        AgentSpec {
            level,
            epsilon: DEFAULT_EPSILON,
            seed: None,
            payoff_knowledge: None,
            learn_until: None,
        }
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn knowledge(mut self, k: OpponentPayoffs) -> Self {
        self.payoff_knowledge = Some(k);
        self
    }

    fn validate(&self, index: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config(format!(
                "agent {index}: epsilon {} is not in [0, 1]",
                self.epsilon
            )));
        }
        if self.payoff_knowledge.is_some() && self.level != Level::Two {
            return Err(Error::config(format!(
                "agent {index}: payoff_knowledge applies to level-2 agents only"
            )));
        }
        Ok(())
    }
}

/// A level-0 agent's memory: reward sums and visit counts per own action.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level0Memory {
    pub sums: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Level0Memory {
    pub fn new(actions: usize) -> Self {
        Level0Memory {
            sums: vec![0.0; actions],
            counts: vec![0; actions],
        }
    }

    pub fn from_history(actions: usize, history: &[(usize, f64)]) -> Self {
        let mut m = Level0Memory::new(actions);
        for &(a, r) in history {
            m.record(a, r);
        }
        m
    }

    pub fn record(&mut self, action: usize, reward: f64) {
        self.sums[action] += reward;
        self.counts[action] += 1;
    }

    pub fn means(&self) -> Vec<f64> {
        self.sums
            .iter()
            .zip(&self.counts)
            .map(|(&s, &c)| if c == 0 { f64::INFINITY } else { s / c as f64 })
            .collect()
    }
}

fn explore<R: Rng>(epsilon: f64, actions: usize, rng: &mut R) -> Option<usize> {
    rng.gen_bool(epsilon).then(|| rng.gen_range(0..actions))
}

/// Frequencies from counts; all-zero counts give the uniform prior.
pub fn frequencies(counts: &[f64]) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    if total > 0.0 {
        counts.iter().map(|c| c / total).collect()
    } else {
        vec![1.0 / counts.len() as f64; counts.len()]
    }
}

fn greedy0(memory: &Level0Memory) -> (usize, u64) {
    let cost = memory.counts.len() as u64;
    if let Some(a) = memory.counts.iter().position(|&c| c == 0) {
        return (a, cost);
    }
    (argmax_set(&memory.means()).first(), cost)
}

/// ε-greedy on empirical mean rewards; untried actions come first, ties go
/// to the lowest index.
pub fn act_level0<R: Rng>(memory: &Level0Memory, epsilon: f64, rng: &mut R) -> usize {
    explore(epsilon, memory.counts.len(), rng).unwrap_or_else(|| greedy0(memory).0)
}

/// Best response of `seat` to independent frequency models (`models[seat]`
/// is ignored). Cost counts payoff lookups plus the final comparison.
fn best_response_to_counts(game: &Game, seat: usize, models: &[Vec<f64>]) -> (usize, u64) {
    let dists: Vec<Vec<f64>> = models.iter().map(|m| frequencies(m)).collect();
    let refs: Vec<&[f64]> = dists.iter().map(Vec::as_slice).collect();
    let values = game.action_values_against(seat, &refs);
    let cost = (game.num_profiles() + game.num_actions(seat)) as u64;
    (argmax_set(&values).first(), cost)
}

/// Best response (lowest index on ties) to frequency models of the other
/// seats, after ε-exploration. `models[seat]` is ignored.
pub fn act_level1<R: Rng>(
    game: &Game,
    seat: usize,
    models: &[Vec<f64>],
    epsilon: f64,
    rng: &mut R,
) -> usize {
    explore(epsilon, game.num_actions(seat), rng)
        .unwrap_or_else(|| best_response_to_counts(game, seat, models).0)
}

/// Deterministic level-2 choice: predicts each other seat `j` as a level-1
/// agent holding `models_of[j]` and payoffs `opponent_games[j]`, then
/// best-responds to the predicted joint action.
fn level2_choice(
    game: &Game,
    seat: usize,
    models_of: &[Vec<Vec<f64>>],
    opponent_games: &[Option<&Game>],
) -> Result<(usize, u64)> {
    let n = game.num_players();
    let mut cost = 0;
    let mut predicted: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        if j == seat {
            predicted.push(vec![0.0; game.num_actions(j)]);
            continue;
        }
        let g =
            opponent_games.get(j).copied().flatten().ok_or_else(|| {
                Error::config(format!("no payoff model for the agent in seat {j}"))
            })?;
        let (a, c) = best_response_to_counts(g, j, &models_of[j]);
        cost += c;
        let mut point = vec![0.0; game.num_actions(j)];
        point[a] = 1.0;
        predicted.push(point);
    }
    let (a, c) = best_response_to_counts(game, seat, &predicted);
    Ok((a, cost + c))
}

/// Level-2 action after ε-exploration. `models_of[j]` is the frequency model
/// agent `j` is assumed to hold over every seat, and `opponent_games[j]` the
/// payoffs it is assumed to have.
pub fn act_level2<R: Rng>(
    game: &Game,
    seat: usize,
    models_of: &[Vec<Vec<f64>>],
    opponent_games: &[Option<&Game>],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    if let Some(a) = explore(epsilon, game.num_actions(seat), rng) {
        return Ok(a);
    }
    Ok(level2_choice(game, seat, models_of, opponent_games)?.0)
}

/// `me`'s payoff function with seats `me` and `other` exchanged, installed as
/// the payoffs of `other`.
fn assume_mine_game(game: &Game, me: usize, other: usize) -> Result<Game> {
    if game.num_actions(me) != game.num_actions(other) {
        return Err(Error::config(format!(
            "assume_mine needs equal action counts for seats {me} and {other}"
        )));
    }
    Game::from_fn(
        game.players().to_vec(),
        (0..game.num_players())
            .map(|p| game.actions(p).to_vec())
            .collect(),
        |profile| {
            let mut u = game.payoffs_at(profile).to_vec();
            let mut swapped = profile.to_vec();
            swapped.swap(me, other);
            u[other] = game.payoff(&swapped, me);
            u
        },
    )
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SocietyMode {
    /// Fixed seats when the roster matches the player count, else matching.
    #[default]
    Auto,
    Fixed,
    Matching,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SocietyConfig {
    pub steps: usize,
    pub seed: u64,
    pub mode: SocietyMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SocietyStep {
    /// Action of each roster agent.
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    /// Partner of each roster agent (matching mode only).
    pub partners: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentSummary {
    pub agent: usize,
    pub level: Level,
    pub mean: f64,
    pub variance: f64,
    pub cumulative: f64,
    pub cost_per_decision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SocietyTrace {
    pub roster: Vec<AgentSpec>,
    pub mode: SocietyMode,
    pub seed: u64,
    pub steps: Vec<SocietyStep>,
    /// Payoff lookups spent on decisions (exploration draws cost nothing).
    pub costs: Vec<u64>,
    /// Number of non-exploratory decisions per agent.
    pub deliberate: Vec<u64>,
    /// Each agent's final frequency counts over every agent's actions
    /// (empty for agents that keep none).
    pub final_models: Vec<Vec<Vec<f64>>>,
}

impl SocietyTrace {
    pub fn cumulative(&self, agent: usize) -> f64 {
        self.steps.iter().map(|s| s.rewards[agent]).sum()
    }

    pub fn mean_utility(&self, agent: usize) -> f64 {
        self.cumulative(agent) / self.steps.len() as f64
    }

    pub fn variance(&self, agent: usize) -> f64 {
        let m = self.mean_utility(agent);
        self.steps
            .iter()
            .map(|s| (s.rewards[agent] - m).powi(2))
            .sum::<f64>()
            / self.steps.len() as f64
    }

    /// Trailing mean over at most `window` steps, per step.
    pub fn windowed_mean(&self, agent: usize, window: usize) -> Vec<f64> {
        let window = window.max(1);
        let rewards: Vec<f64> = self.steps.iter().map(|s| s.rewards[agent]).collect();
        (0..rewards.len())
            .map(|t| {
                let lo = (t + 1).saturating_sub(window);
                rewards[lo..=t].iter().sum::<f64>() / (t + 1 - lo) as f64
            })
            .collect()
    }

    pub fn cost_per_decision(&self, agent: usize) -> f64 {
        if self.deliberate[agent] == 0 {
            0.0
        } else {
            self.costs[agent] as f64 / self.deliberate[agent] as f64
        }
    }

    pub fn summary(&self) -> Vec<AgentSummary> {
        (0..self.roster.len())
            .map(|i| AgentSummary {
                agent: i,
                level: self.roster[i].level.clone(),
                mean: self.mean_utility(i),
                variance: self.variance(i),
                cumulative: self.cumulative(i),
                cost_per_decision: self.cost_per_decision(i),
            })
            .collect()
    }

    /// Mean utility over all agents of a level, if any.
    pub fn level_mean(&self, level: &Level) -> Option<f64> {
        let idx: Vec<usize> = (0..self.roster.len())
            .filter(|&i| &self.roster[i].level == level)
            .collect();
        (!idx.is_empty())
            .then(|| idx.iter().map(|&i| self.mean_utility(i)).sum::<f64>() / idx.len() as f64)
    }

    /// Recomputes every reward from the logged actions (and partners).
    pub fn recompute_rewards(&self, game: &Game) -> Vec<Vec<f64>> {
        self.steps
            .iter()
            .map(|s| match &s.partners {
                None => game.payoffs_at(&s.actions).to_vec(),
                Some(p) => (0..s.actions.len())
                    .map(|i| game.payoff(&[s.actions[i], s.actions[p[i]]], 0))
                    .collect(),
            })
            .collect()
    }

    fn label(&self, i: usize) -> String {
        format!("{}_{}", i + 1, self.roster[i].level)
    }

    /// Columns: `step`, then per agent (1-based, tagged with its level)
    /// `action_<i>_<L>` and `reward_<i>_<L>`, plus `partner_<i>_<L>` in
    /// matching mode.
    pub fn write_csv<W: std::io::Write>(&self, game: &Game, out: W) -> Result<()> {
        let n = self.roster.len();
        let matching = self.mode == SocietyMode::Matching;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string()];
        header.extend((0..n).map(|i| format!("action_{}", self.label(i))));
        header.extend((0..n).map(|i| format!("reward_{}", self.label(i))));
        if matching {
            header.extend((0..n).map(|i| format!("partner_{}", self.label(i))));
        }
        w.write_record(&header)?;
        for (t, s) in self.steps.iter().enumerate() {
            let mut row = vec![(t + 1).to_string()];
            for (i, &a) in s.actions.iter().enumerate() {
                let seat = if matching { 0 } else { i };
                row.push(game.action_name(seat, a).to_string());
            }
            row.extend(s.rewards.iter().map(f64::to_string));
            if let Some(p) = &s.partners {
                row.extend(p.iter().map(|j| (j + 1).to_string()));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Columns: `agent`, `level`, `mean_utility`, `variance`.
    pub fn write_summary_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["agent", "level", "mean_utility", "variance"])?;
        for s in self.summary() {
            w.write_record([
                (s.agent + 1).to_string(),
                s.level.to_string(),
                s.mean.to_string(),
                s.variance.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

enum Brain {
    Zero(Level0Memory),
    One,
    /// Payoff model per seat (fixed mode) or for the partner (matching).
    Two(Vec<Option<Game>>),
    Fixed(MixedStrategy),
}

struct Agent {
    spec: AgentSpec,
    rng: SimRng,
    brain: Brain,
    /// `observed[k][a]`: times agent `k` was seen playing `a`.
    observed: Vec<Vec<f64>>,
    cost: u64,
    deliberate: u64,
}

impl Agent {
    fn keeps_models(&self) -> bool {
        matches!(self.brain, Brain::One | Brain::Two(_))
    }

    fn learning(&self, step: usize) -> bool {
        self.spec.learn_until.is_none_or(|until| step < until)
    }
}

fn resolve_mode(game: &Game, roster: &[AgentSpec], mode: SocietyMode) -> Result<SocietyMode> {
    let fixed_ok = roster.len() == game.num_players();
    let symmetric = game.as_symmetric().is_some();
    let matching_ok = symmetric && roster.len() >= 2 && roster.len().is_multiple_of(2);
    match mode {
        SocietyMode::Fixed if fixed_ok => Ok(SocietyMode::Fixed),
        SocietyMode::Fixed => Err(Error::config(format!(
            "fixed seating needs {} agents, roster has {}",
            game.num_players(),
            roster.len()
        ))),
        SocietyMode::Matching if matching_ok => Ok(SocietyMode::Matching),
        SocietyMode::Matching => Err(Error::config(
            "matching needs a symmetric 2-player game and an even roster of at least 2",
        )),
        SocietyMode::Auto if fixed_ok => Ok(SocietyMode::Fixed),
        SocietyMode::Auto if matching_ok => Ok(SocietyMode::Matching),
        SocietyMode::Auto => Err(Error::config(format!(
            "roster of {} does not fit a {}-player game{}",
            roster.len(),
            game.num_players(),
            if symmetric {
                " (matching needs an even roster)"
            } else {
                ""
            }
        ))),
    }
}

fn build_agent(
    game: &Game,
    spec: &AgentSpec,
    index: usize,
    roster_len: usize,
    mode: SocietyMode,
    seed: u64,
) -> Result<Agent> {
    spec.validate(index)?;
    let seat_actions = |k: usize| {
        if mode == SocietyMode::Matching {
            game.num_actions(0)
        } else {
            game.num_actions(k)
        }
    };
    let own = seat_actions(index);
    let brain = match &spec.level {
        Level::Zero => Brain::Zero(Level0Memory::new(own)),
        Level::One => Brain::One,
        Level::Two => {
            let knowledge = spec.payoff_knowledge.unwrap_or_default();
            let games = if mode == SocietyMode::Matching {
                // Symmetric: the partner's payoffs equal the agent's own.
                vec![None, None]
            } else {
                (0..game.num_players())
                    .map(|j| match (j == index, knowledge) {
                        (true, _) | (false, OpponentPayoffs::True) => Ok(None),
                        (false, OpponentPayoffs::AssumeMine) => {
                            assume_mine_game(game, index, j).map(Some)
                        }
                    })
                    .collect::<Result<_>>()?
            };
            Brain::Two(games)
        }
        Level::Fixed(p) => {
            let s = MixedStrategy::new(p.clone())
                .map_err(|e| Error::config(format!("agent {index}: fixed strategy: {e}")))?;
            if s.len() != own {
                return Err(Error::config(format!(
                    "agent {index}: fixed strategy has {} entries, seat has {own} actions",
                    s.len()
                )));
            }
            Brain::Fixed(s)
        }
    };
    let agent_seed = spec.seed.unwrap_or_else(|| derive_seed(seed, index as u64));
    Ok(Agent {
        spec: spec.clone(),
        rng: rng_from_seed(agent_seed),
        brain,
        observed: (0..roster_len)
            .map(|k| vec![0.0; seat_actions(k)])
            .collect(),
        cost: 0,
        deliberate: 0,
    })
}

fn sample<R: Rng>(s: &MixedStrategy, rng: &mut R) -> usize {
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    for (a, &p) in s.probs().iter().enumerate() {
        acc += p;
        if x < acc {
            return a;
        }
    }
    s.probs().iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn sum_except(observed: &[Vec<f64>], skip: usize) -> Vec<f64> {
    let mut total = vec![0.0; observed[0].len()];
    for (k, row) in observed.iter().enumerate() {
        if k != skip {
            total.iter_mut().zip(row).for_each(|(t, x)| *t += x);
        }
    }
    total
}

/// Chooses agent `i`'s action. `seat` is its seat this step and `partner` its
/// partner in matching mode.
fn decide(
    game: &Game,
    agent: &mut Agent,
    i: usize,
    seat: usize,
    partner: Option<usize>,
) -> Result<usize> {
    let actions = game.num_actions(seat);
    if let Brain::Fixed(s) = &agent.brain {
        return Ok(sample(s, &mut agent.rng));
    }
    if let Some(a) = explore(agent.spec.epsilon, actions, &mut agent.rng) {
        return Ok(a);
    }
    let (action, cost) = match (&agent.brain, partner) {
        (Brain::Zero(m), _) => greedy0(m),
        (Brain::One, None) => best_response_to_counts(game, seat, &agent.observed),
        (Brain::One, Some(_)) => {
            let pop = sum_except(&agent.observed, i);
            let models = vec![pop.clone(), pop];
            best_response_to_counts(game, seat, &models)
        }
        (Brain::Two(games), None) => {
            let models_of = vec![agent.observed.clone(); game.num_players()];
            let refs: Vec<Option<&Game>> = games
                .iter()
                .map(|g| Some(g.as_ref().unwrap_or(game)))
                .collect();
            level2_choice(game, seat, &models_of, &refs)?
        }
        (Brain::Two(_), Some(j)) => {
            // The partner models everyone but itself as one population.
            let theirs = sum_except(&agent.observed, j);
            let other = 1 - seat;
            let mut models_of = vec![Vec::new(), Vec::new()];
            models_of[other] = vec![theirs.clone(), theirs];
            level2_choice(game, seat, &models_of, &[Some(game), Some(game)])?
        }
        (Brain::Fixed(_), _) => unreachable!("handled above"),
    };
    agent.cost += cost;
    agent.deliberate += 1;
    Ok(action)
}

/// Plays the repeated game for `config.steps` steps.
///
/// Every agent sees the realized actions of all agents and its own reward.
/// Agent `i` draws from `derive_seed(seed, i)` unless its spec gives a seed;
/// matching draws pairings from `derive_seed(seed, u64::MAX)`.
pub fn run_society(
    game: &Game,
    roster: &[AgentSpec],
    config: &SocietyConfig,
) -> Result<SocietyTrace> {
    if roster.is_empty() {
        return Err(Error::config("empty roster"));
    }
    let mode = resolve_mode(game, roster, config.mode)?;
    let mut agents: Vec<Agent> = roster
        .iter()
        .enumerate()
        .map(|(i, spec)| build_agent(game, spec, i, roster.len(), mode, config.seed))
        .collect::<Result<_>>()?;
    let mut pairing_rng = rng_from_seed(derive_seed(config.seed, u64::MAX));
    let n = roster.len();
    let mut steps = Vec::with_capacity(config.steps);
    let mut order: Vec<usize> = (0..n).collect();

    for step in 0..config.steps {
        let (seats, partners) = if mode == SocietyMode::Matching {
            order.shuffle(&mut pairing_rng);
            let mut seats = vec![0; n];
            let mut partners = vec![0; n];
            for pair in order.chunks(2) {
                let (a, b) = (pair[0], pair[1]);
                seats[b] = 1;
                partners[a] = b;
                partners[b] = a;
            }
            (seats, Some(partners))
        } else {
            ((0..n).collect(), None)
        };

        let mut actions = Vec::with_capacity(n);
        for (i, agent) in agents.iter_mut().enumerate() {
            let partner = partners.as_ref().map(|p| p[i]);
            actions.push(decide(game, agent, i, seats[i], partner)?);
        }
        let rewards: Vec<f64> = match &partners {
            None => game.payoffs_at(&actions).to_vec(),
            Some(p) => (0..n)
                .map(|i| {
                    let mut profile = [0; 2];
                    profile[seats[i]] = actions[i];
                    profile[1 - seats[i]] = actions[p[i]];
                    game.payoff(&profile, seats[i])
                })
                .collect(),
        };

        for (i, agent) in agents.iter_mut().enumerate() {
            if !agent.learning(step) {
                continue;
            }
            if let Brain::Zero(m) = &mut agent.brain {
                m.record(actions[i], rewards[i]);
            }
            if agent.keeps_models() {
                for (k, &a) in actions.iter().enumerate() {
                    agent.observed[k][a] += 1.0;
                }
            }
        }
        steps.push(SocietyStep {
            actions,
            rewards,
            partners,
        });
    }

    Ok(SocietyTrace {
        roster: roster.to_vec(),
        mode,
        seed: config.seed,
        steps,
        costs: agents.iter().map(|a| a.cost).collect(),
        deliberate: agents.iter().map(|a| a.deliberate).collect(),
        final_models: agents
            .iter()
            .map(|a| {
                if a.keeps_models() {
                    a.observed.clone()
                } else {
                    Vec::new()
                }
            })
            .collect(),
    })
}
