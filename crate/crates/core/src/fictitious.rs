//! Fictitious play for N-player repeated games.
//!
//! Each agent keeps one weight function per opponent, counting how often that
//! opponent played each action, and best-responds to the product of the
//! normalized counts. Agents never keep a joint model over opponent profiles.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::equilibria::argmax_set;
use crate::error::{Error, Result};
use crate::game::{Game, MixedStrategy};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeliefState {
    agent: usize,
    /// Opponent player indices, ascending.
    opponents: Vec<usize>,
    /// `weights[k][a]`: weight on `opponents[k]` playing action `a`.
    weights: Vec<Vec<f64>>,
}

impl BeliefState {
    /// `weights` holds one vector per opponent, in player order, skipping `agent`.
    pub fn new(game: &Game, agent: usize, weights: Vec<Vec<f64>>) -> Result<Self> {
        game.check_player(agent)?;
        let opponents: Vec<usize> = (0..game.num_players()).filter(|&j| j != agent).collect();
        if weights.len() != opponents.len() {
            return Err(Error::domain(format!(
                "agent {agent}: {} weight vectors for {} opponents",
                weights.len(),
                opponents.len()
            )));
        }
        for (&j, w) in opponents.iter().zip(&weights) {
            if w.len() != game.num_actions(j) {
                return Err(Error::domain(format!(
                    "agent {agent}: weights for opponent {j} cover {} actions, expected {}",
                    w.len(),
                    game.num_actions(j)
                )));
            }
            if let Some(x) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(Error::domain(format!(
                    "agent {agent}: negative or non-finite weight {x} for opponent {j}"
                )));
            }
        }
        Ok(BeliefState {
            agent,
            opponents,
            weights,
        })
    }

    /// Weight `w` on every action of every opponent.
    pub fn uniform(game: &Game, agent: usize, w: f64) -> Result<Self> {
        let weights = (0..game.num_players())
            .filter(|&j| j != agent)
            .map(|j| vec![w; game.num_actions(j)])
            .collect();
        BeliefState::new(game, agent, weights)
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn opponents(&self) -> &[usize] {
        &self.opponents
    }

    fn slot(&self, opponent: usize) -> Result<usize> {
        self.opponents
            .iter()
            .position(|&j| j == opponent)
            .ok_or_else(|| {
                Error::domain(format!(
                    "player {opponent} is not an opponent of {}",
                    self.agent
                ))
            })
    }

    pub fn weights(&self, opponent: usize) -> Result<&[f64]> {
        Ok(&self.weights[self.slot(opponent)?])
    }

    pub fn total(&self, opponent: usize) -> Result<f64> {
        Ok(self.weights(opponent)?.iter().sum())
    }

    /// Adds one to the weight of each opponent's observed action.
    /// `observed` is the full joint action profile; the agent's own entry is ignored.
    pub fn observe(&mut self, observed: &[usize]) {
        for (k, &j) in self.opponents.iter().enumerate() {
            self.weights[k][observed[j]] += 1.0;
        }
    }

    pub fn opponent_distribution(&self, opponent: usize) -> Result<MixedStrategy> {
        let w = self.weights(opponent)?;
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::domain(format!(
                "agent {} has zero total weight on opponent {opponent}",
                self.agent
            )));
        }
        MixedStrategy::from_weights(w)
    }

    /// Distributions for every player; the agent's own slot is empty.
    fn distributions(&self, game: &Game) -> Result<Vec<Vec<f64>>> {
        let mut out = vec![Vec::new(); game.num_players()];
        for &j in &self.opponents {
            out[j] = self.opponent_distribution(j)?.probs().to_vec();
        }
        Ok(out)
    }
}

/// Returns the beliefs after observing `observed`.
pub fn update_weights(beliefs: &BeliefState, observed: &[usize]) -> BeliefState {
    let mut next = beliefs.clone();
    next.observe(observed);
    next
}

pub fn opponent_distribution(beliefs: &BeliefState, opponent: usize) -> Result<MixedStrategy> {
    beliefs.opponent_distribution(opponent)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    #[default]
    LowestIndex,
    UniformRandom,
}

fn choose<R: Rng>(actions: &[usize], tie_rule: TieRule, rng: &mut R) -> usize {
    match tie_rule {
        TieRule::LowestIndex => actions[0],
        TieRule::UniformRandom => *actions.choose(rng).expect("best-response set is non-empty"),
    }
}

/// Each agent best-responds to the product of its opponent models.
pub fn fp_step<R: Rng>(
    game: &Game,
    beliefs: &[BeliefState],
    tie_rule: TieRule,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_beliefs(game, beliefs)?;
    let mut profile = Vec::with_capacity(beliefs.len());
    for b in beliefs {
        let dists = b.distributions(game)?;
        let refs: Vec<&[f64]> = dists.iter().map(Vec::as_slice).collect();
        let br = argmax_set(&game.action_values_against(b.agent, &refs));
        profile.push(choose(&br.actions, tie_rule, rng));
    }
    Ok(profile)
}

fn check_beliefs(game: &Game, beliefs: &[BeliefState]) -> Result<()> {
    if beliefs.len() != game.num_players() {
        return Err(Error::domain(format!(
            "{} belief states for {} players",
            beliefs.len(),
            game.num_players()
        )));
    }
    for (i, b) in beliefs.iter().enumerate() {
        if b.agent != i {
            return Err(Error::domain(format!(
                "belief state {i} belongs to agent {}",
                b.agent
            )));
        }
        for (k, &j) in b.opponents.iter().enumerate() {
            if b.weights[k].len() != game.num_actions(j) {
                return Err(Error::domain(format!(
                    "agent {i}: weights for opponent {j} do not match the game"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpConfig {
    pub budget: usize,
    /// Consecutive repeats of one profile required to report convergence.
    pub convergence_window: usize,
    /// Length of the trailing window inspected for periodic play.
    pub cycle_window: usize,
    pub tie_rule: TieRule,
    pub seed: u64,
}

impl Default for FpConfig {
    fn default() -> Self {
        FpConfig {
            budget: 1000,
            convergence_window: 10,
            cycle_window: 20,
            tie_rule: TieRule::LowestIndex,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FpStatus {
    /// `profile` was played for the whole convergence window ending at
    /// `step`, and it is a fixed point of play once beliefs concentrate on it.
    Converged {
        profile: Vec<usize>,
        step: usize,
    },
    /// The trailing window of play repeats with `period ≥ 2`.
    Cycle {
        period: usize,
        profiles: Vec<Vec<usize>>,
    },
    BudgetExhausted,
}

impl FpStatus {
    pub fn describe(&self, game: &Game) -> String {
        match self {
            FpStatus::Converged { profile, step } => {
                format!(
                    "converged profile={} step={step}",
                    game.format_profile(profile)
                )
            }
            FpStatus::Cycle { period, profiles } => {
                let p: Vec<String> = profiles.iter().map(|s| game.format_profile(s)).collect();
                format!("cycle period={period} profiles={}", p.join(","))
            }
            FpStatus::BudgetExhausted => "budget_exhausted".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpStep {
    pub t: usize,
    pub profile: Vec<usize>,
    /// `beliefs[i][k]`: agent `i`'s distribution over its `k`-th opponent
    /// (opponents in player order), as used to choose `profile`.
    pub beliefs: Vec<Vec<Vec<f64>>>,
    pub payoffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpTrace {
    pub steps: Vec<FpStep>,
    pub status: FpStatus,
    pub final_beliefs: Vec<BeliefState>,
}

/// Whether every player's action in `profile` stays a best response once
/// its beliefs concentrate on the others repeating `profile`.
fn is_absorbing(game: &Game, profile: &[usize], tie_rule: TieRule) -> bool {
    let point: Vec<Vec<f64>> = profile
        .iter()
        .enumerate()
        .map(|(j, &a)| {
            let mut v = vec![0.0; game.num_actions(j)];
            v[a] = 1.0;
            v
        })
        .collect();
    let refs: Vec<&[f64]> = point.iter().map(Vec::as_slice).collect();
    (0..game.num_players()).all(|i| {
        let br = argmax_set(&game.action_values_against(i, &refs));
        match tie_rule {
            TieRule::LowestIndex => br.actions.contains(&profile[i]),
            TieRule::UniformRandom => br.actions == [profile[i]],
        }
    })
}

/// Smallest period `p ≥ 2` of the trailing `window` profiles, if they are
/// periodic and not constant.
fn detect_cycle(history: &[Vec<usize>], window: usize) -> Option<(usize, Vec<Vec<usize>>)> {
    if history.len() < window {
        return None;
    }
    let tail = &history[history.len() - window..];
    if tail.iter().all(|p| *p == tail[0]) {
        return None;
    }
    let period = (2..=window / 2).find(|&p| (0..window - p).all(|k| tail[k] == tail[k + p]))?;
    let mut profiles = tail[window - period..].to_vec();
    // Canonical rotation: start from the lexicographically smallest profile.
    let start = (0..period)
        .min_by(|&a, &b| profiles[a].cmp(&profiles[b]))
        .unwrap_or(0);
    profiles.rotate_left(start);
    Some((period, profiles))
}

pub fn run_fp(game: &Game, initial: Vec<BeliefState>, config: &FpConfig) -> Result<FpTrace> {
    if config.budget < 1 {
        return Err(Error::Precondition("budget must be at least 1".into()));
    }
    if config.convergence_window < 2 || config.cycle_window < 2 {
        return Err(Error::Precondition("windows must be at least 2".into()));
    }
    check_beliefs(game, &initial)?;
    for b in &initial {
        for &j in &b.opponents {
            if b.total(j)? <= 0.0 {
                return Err(Error::Precondition(format!(
                    "agent {} needs a positive weight on some action of opponent {j}",
                    b.agent
                )));
            }
        }
    }

    let mut rng = rng_from_seed(config.seed);
    let mut beliefs = initial;
    let mut steps = Vec::new();
    let mut history: Vec<Vec<usize>> = Vec::new();
    let mut status = FpStatus::BudgetExhausted;

    for t in 1..=config.budget {
        let snapshot: Vec<Vec<Vec<f64>>> = beliefs
            .iter()
            .map(|b| {
                b.opponents
                    .iter()
                    .map(|&j| b.opponent_distribution(j).map(|d| d.probs().to_vec()))
                    .collect::<Result<_>>()
            })
            .collect::<Result<_>>()?;
        let profile = fp_step(game, &beliefs, config.tie_rule, &mut rng)?;
        for b in &mut beliefs {
            b.observe(&profile);
        }
        steps.push(FpStep {
            t,
            payoffs: game.payoffs_at(&profile).to_vec(),
            profile: profile.clone(),
            beliefs: snapshot,
        });
        history.push(profile.clone());

        let w = config.convergence_window;
        if history.len() >= w
            && history[history.len() - w..].iter().all(|p| *p == profile)
            && is_absorbing(game, &profile, config.tie_rule)
        {
            status = FpStatus::Converged { profile, step: t };
            break;
        }
    }
    if status == FpStatus::BudgetExhausted {
        if let Some((period, profiles)) = detect_cycle(&history, config.cycle_window) {
            status = FpStatus::Cycle { period, profiles };
        }
    }
    Ok(FpTrace {
        steps,
        status,
        final_beliefs: beliefs,
    })
}

impl FpTrace {
    /// Columns: `t`, `action_<player>`, `belief_<agent>_<opponent>_<action>`,
    /// `payoff_<player>`, then a `status` footer record.
    pub fn write_csv<W: std::io::Write>(&self, game: &Game, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        let players = game.players();
        let mut header = vec!["t".to_string()];
        header.extend(players.iter().map(|p| format!("action_{p}")));
        for i in 0..game.num_players() {
            for j in (0..game.num_players()).filter(|&j| j != i) {
                for a in game.actions(j) {
                    header.push(format!("belief_{}_{}_{a}", players[i], players[j]));
                }
            }
        }
        header.extend(players.iter().map(|p| format!("payoff_{p}")));
        w.write_record(&header)?;
        for s in &self.steps {
            let mut row = vec![s.t.to_string()];
            row.extend(
                s.profile
                    .iter()
                    .enumerate()
                    .map(|(p, &a)| game.action_name(p, a).to_string()),
            );
            row.extend(s.beliefs.iter().flatten().flatten().map(f64::to_string));
            row.extend(s.payoffs.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.write_record(["status", &self.status.describe(game)])?;
        w.flush()?;
        Ok(())
    }
}
