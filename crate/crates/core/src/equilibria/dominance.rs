use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, MixedStrategy, ProfileIter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DominanceMode {
    Strict,
    /// `≥` against every opponent profile and `>` against at least one.
    Weak,
}

impl std::fmt::Display for DominanceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DominanceMode::Strict => "strict",
            DominanceMode::Weak => "weak",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Elimination {
    pub round: usize,
    pub player: usize,
    pub action: usize,
    pub dominator: MixedStrategy,
    pub mode: DominanceMode,
}

#[derive(Debug, Clone)]
pub struct ReducedGame<'a> {
    pub original: &'a Game,
    pub surviving: Vec<Vec<usize>>,
    pub log: Vec<Elimination>,
    /// Set for weak elimination, whose result can depend on removal order.
    pub order_dependent: bool,
}

impl ReducedGame<'_> {
    pub fn surviving_profiles(&self) -> Vec<Vec<usize>> {
        let counts = self.surviving.iter().map(Vec::len).collect();
        ProfileIter::new(counts)
            .map(|idx| {
                idx.iter()
                    .zip(&self.surviving)
                    .map(|(&i, s)| s[i])
                    .collect()
            })
            .collect()
    }

    /// The unique surviving profile, when elimination solves the game.
    pub fn solution(&self) -> Option<Vec<usize>> {
        let profiles = self.surviving_profiles();
        (profiles.len() == 1).then(|| profiles[0].clone())
    }

    pub fn eliminated(&self, player: usize, action: usize) -> bool {
        !self.surviving[player].contains(&action)
    }

    /// Writes `player,action,step,dominator,mode` rows.
    pub fn write_log_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["player", "action", "step", "dominator", "mode"])?;
        for e in &self.log {
            let dominator: Vec<String> = e
                .dominator
                .support(0.0)
                .into_iter()
                .map(|a| {
                    format!(
                        "{}:{}",
                        self.original.action_name(e.player, a),
                        e.dominator.prob(a)
                    )
                })
                .collect();
            w.write_record([
                self.original.players()[e.player].clone(),
                self.original.action_name(e.player, e.action).to_string(),
                e.round.to_string(),
                dominator.join(" "),
                e.mode.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn gap_tolerance(game: &Game) -> f64 {
    let scale = game
        .profiles()
        .flat_map(|s| game.payoffs_at(&s).to_vec())
        .fold(1.0_f64, |m, u| m.max(u.abs()));
    1e-9 * scale
}

/// Payoffs of `player`'s `action` against every surviving opponent profile.
fn payoff_column(game: &Game, player: usize, action: usize, opponents: &[Vec<usize>]) -> Vec<f64> {
    opponents
        .iter()
        .map(|o| {
            let mut s = o.clone();
            s[player] = action;
            game.payoff(&s, player)
        })
        .collect()
}

fn opponent_profiles(surviving: &[Vec<usize>], player: usize) -> Vec<Vec<usize>> {
    let counts: Vec<usize> = surviving
        .iter()
        .enumerate()
        .map(|(j, s)| if j == player { 1 } else { s.len() })
        .collect();
    ProfileIter::new(counts)
        .map(|idx| {
            idx.iter()
                .zip(surviving)
                .enumerate()
                .map(|(j, (&i, s))| if j == player { 0 } else { s[i] })
                .collect()
        })
        .collect()
}

/// Searches for a mixed strategy over `player`'s other surviving actions that
/// dominates `action` against every surviving opponent profile.
///
/// Pure dominators are tried first in index order; otherwise a linear program
/// maximizes the worst-case payoff gap (strict) or the total gap subject to
/// nonnegative gaps (weak).
pub fn is_dominated(
    game: &Game,
    player: usize,
    action: usize,
    mode: DominanceMode,
    surviving: &[Vec<usize>],
) -> Result<Option<MixedStrategy>> {
    game.check_player(player)?;
    if surviving.len() != game.num_players() {
        return Err(Error::domain("surviving sets must cover every player"));
    }
    if let Some(j) = surviving.iter().position(Vec::is_empty) {
        return Err(Error::domain(format!(
            "player {j} has an empty surviving set"
        )));
    }
    if !surviving[player].contains(&action) {
        return Err(Error::domain(format!(
            "action {action} is not among player {player}'s surviving actions"
        )));
    }
    let tol = gap_tolerance(game);
    let opponents = opponent_profiles(surviving, player);
    let target = payoff_column(game, player, action, &opponents);
    let candidates: Vec<usize> = surviving[player]
        .iter()
        .copied()
        .filter(|&a| a != action)
        .collect();
    if candidates.is_empty() {
        return Ok(None);
    }
    let columns: Vec<Vec<f64>> = candidates
        .iter()
        .map(|&a| payoff_column(game, player, a, &opponents))
        .collect();

    for (&a, col) in candidates.iter().zip(&columns) {
        let gaps: Vec<f64> = col.iter().zip(&target).map(|(x, y)| x - y).collect();
        let dominates = match mode {
            DominanceMode::Strict => gaps.iter().all(|&g| g > tol),
            DominanceMode::Weak => gaps.iter().all(|&g| g >= -tol) && gaps.iter().any(|&g| g > tol),
        };
        if dominates {
            return Ok(Some(MixedStrategy::pure(game.num_actions(player), a)));
        }
    }
    if candidates.len() < 2 {
        return Ok(None);
    }

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let weights = match mode {
        DominanceMode::Strict => {
            let w: Vec<_> = candidates
                .iter()
                .map(|_| lp.add_var(0.0, (0.0, 1.0)))
                .collect();
            let gap = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
            for (o, &t) in target.iter().enumerate() {
                let mut expr: Vec<_> = w.iter().zip(&columns).map(|(&v, c)| (v, c[o])).collect();
                expr.push((gap, -1.0));
                lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, t);
            }
            w
        }
        DominanceMode::Weak => {
            let w: Vec<_> = columns
                .iter()
                .map(|c| {
                    let total: f64 = c.iter().zip(&target).map(|(x, y)| x - y).sum();
                    lp.add_var(total, (0.0, 1.0))
                })
                .collect();
            for (o, &t) in target.iter().enumerate() {
                let expr: Vec<_> = w.iter().zip(&columns).map(|(&v, c)| (v, c[o])).collect();
                lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, t);
            }
            w
        }
    };
    let ones: Vec<_> = weights.iter().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);

    let solution = match lp.solve() {
        Ok(s) => s,
        Err(minilp::Error::Infeasible) => return Ok(None),
        Err(e) => return Err(Error::Solver(e.to_string())),
    };
    if solution.objective() <= tol {
        return Ok(None);
    }
    let mut probs = vec![0.0; game.num_actions(player)];
    for (&a, &v) in candidates.iter().zip(&weights) {
        probs[a] = solution[v].max(0.0);
    }
    let dominator = MixedStrategy::from_weights(&probs)?;
    // Re-check on the cleaned weights; the solver works to its own tolerance.
    let mixed: Vec<f64> = (0..target.len())
        .map(|o| {
            candidates
                .iter()
                .zip(&columns)
                .map(|(&a, c)| dominator.prob(a) * c[o])
                .sum()
        })
        .collect();
    let gaps: Vec<f64> = mixed.iter().zip(&target).map(|(x, y)| x - y).collect();
    let ok = match mode {
        DominanceMode::Strict => gaps.iter().all(|&g| g > tol),
        DominanceMode::Weak => gaps.iter().all(|&g| g >= -tol) && gaps.iter().any(|&g| g > tol),
    };
    Ok(ok.then_some(dominator))
}

/// Removes, round by round, every action dominated given the survivors at
/// the start of the round, until nothing more can be removed.
pub fn iterated_dominance(game: &Game, mode: DominanceMode) -> Result<ReducedGame<'_>> {
    let mut surviving: Vec<Vec<usize>> = (0..game.num_players())
        .map(|p| (0..game.num_actions(p)).collect())
        .collect();
    let mut log = Vec::new();
    let mut round = 0;
    loop {
        round += 1;
        let mut removed = Vec::new();
        for player in 0..game.num_players() {
            for &action in &surviving[player] {
                if let Some(d) = is_dominated(game, player, action, mode, &surviving)? {
                    removed.push(Elimination {
                        round,
                        player,
                        action,
                        dominator: d,
                        mode,
                    });
                }
            }
        }
        if removed.is_empty() {
            break;
        }
        for e in &removed {
            surviving[e.player].retain(|&a| a != e.action);
        }
        debug_assert!(surviving.iter().all(|s| !s.is_empty()));
        log.extend(removed);
    }
    Ok(ReducedGame {
        original: game,
        surviving,
        log,
        order_dependent: mode == DominanceMode::Weak,
    })
}

/// One-at-a-time elimination, picking uniformly among the currently
/// dominated actions. Used to probe order (in)dependence.
pub fn iterated_dominance_in_order<'a, R: Rng>(
    game: &'a Game,
    mode: DominanceMode,
    rng: &mut R,
) -> Result<ReducedGame<'a>> {
    let mut surviving: Vec<Vec<usize>> = (0..game.num_players())
        .map(|p| (0..game.num_actions(p)).collect())
        .collect();
    let mut log = Vec::new();
    let mut step = 0;
    loop {
        let mut dominated = Vec::new();
        for player in 0..game.num_players() {
            for &action in &surviving[player] {
                if let Some(d) = is_dominated(game, player, action, mode, &surviving)? {
                    dominated.push((player, action, d));
                }
            }
        }
        let Some((player, action, dominator)) = dominated.choose(rng).cloned() else {
            break;
        };
        step += 1;
        surviving[player].retain(|&a| a != action);
        log.push(Elimination {
            round: step,
            player,
            action,
            dominator,
            mode,
        });
    }
    Ok(ReducedGame {
        original: game,
        surviving,
        log,
        order_dependent: mode == DominanceMode::Weak,
    })
}
