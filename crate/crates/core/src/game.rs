//! Finite normal-form games, mixed strategies and expected utilities.
//!
//! Payoffs are stored densely in row-major profile order: the profile
//! `(s_0, ..., s_{N-1})` lives at `Σ s_i · stride_i` where the last player
//! varies fastest. Each profile slot holds one payoff per player.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating and renormalizing probability vectors.
pub const PROB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    players: Vec<String>,
    actions: Vec<Vec<String>>,
    strides: Vec<usize>,
    payoffs: Vec<f64>,
}

impl Game {
    /// Builds a game from player names, action names and a payoff function
    /// evaluated on every pure profile.
    pub fn from_fn<F>(
        players: Vec<String>,
        actions: Vec<Vec<String>>,
        mut payoff: F,
    ) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Vec<f64>,
    {
        let n = validate_shape(&players, &actions)?;
        let strides = strides_for(&actions);
        let total: usize = actions.iter().map(Vec::len).product();
        let mut payoffs = Vec::with_capacity(total * n);
        for profile in ProfileIter::new(actions.iter().map(Vec::len).collect()) {
            let u = payoff(&profile);
            if u.len() != n {
                return Err(Error::validation(format!(
                    "profile {} has {} payoffs, expected {n}",
                    fmt_profile(&actions, &profile),
                    u.len()
                )));
            }
            if let Some(bad) = u.iter().find(|x| !x.is_finite()) {
                return Err(Error::validation(format!(
                    "profile {} has non-finite payoff {bad}",
                    fmt_profile(&actions, &profile)
                )));
            }
            payoffs.extend_from_slice(&u);
        }
        Ok(Game {
            players,
            actions,
            strides,
            payoffs,
        })
    }

    /// Builds a game from a flat row-major payoff vector (`profiles × players`).
    pub fn from_dense(
        players: Vec<String>,
        actions: Vec<Vec<String>>,
        payoffs: Vec<f64>,
    ) -> Result<Self> {
        let n = validate_shape(&players, &actions)?;
        let total: usize = actions.iter().map(Vec::len).product();
        if payoffs.len() != total * n {
            return Err(Error::validation(format!(
                "payoff tensor has {} entries, expected {}",
                payoffs.len(),
                total * n
            )));
        }
        let strides = strides_for(&actions);
        Ok(Game {
            players,
            actions,
            strides,
            payoffs,
        })
    }

    /// Two-player game from row and column payoff matrices, with actions
    /// named `A`, `B`, `C`, ...
    pub fn bimatrix(row: &[Vec<f64>], col: &[Vec<f64>]) -> Result<Self> {
        let m = row.len();
        let n = row.first().map_or(0, Vec::len);
        if col.len() != m || row.iter().chain(col).any(|r| r.len() != n) {
            return Err(Error::validation(
                "bimatrix payoff matrices must share one m×n shape",
            ));
        }
        Game::from_fn(
            vec!["1".into(), "2".into()],
            vec![letter_names(m), letter_names(n)],
            |s| vec![row[s[0]][s[1]], col[s[0]][s[1]]],
        )
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn players(&self) -> &[String] {
        &self.players
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.actions[player].len()
    }

    pub fn action_counts(&self) -> Vec<usize> {
        self.actions.iter().map(Vec::len).collect()
    }

    pub fn actions(&self, player: usize) -> &[String] {
        &self.actions[player]
    }

    pub fn action_name(&self, player: usize, action: usize) -> &str {
        &self.actions[player][action]
    }

    pub fn action_index(&self, player: usize, name: &str) -> Option<usize> {
        self.actions.get(player)?.iter().position(|a| a == name)
    }

    pub fn num_profiles(&self) -> usize {
        self.payoffs.len() / self.players.len()
    }

    /// All pure profiles in storage order.
    pub fn profiles(&self) -> ProfileIter {
        ProfileIter::new(self.action_counts())
    }

    pub fn check_player(&self, player: usize) -> Result<()> {
        if player >= self.num_players() {
            return Err(Error::InvalidPlayer {
                player,
                count: self.num_players(),
            });
        }
        Ok(())
    }

    pub fn check_profile(&self, profile: &[usize]) -> Result<()> {
        if profile.len() != self.num_players() {
            return Err(Error::domain(format!(
                "profile has {} entries, game has {} players",
                profile.len(),
                self.num_players()
            )));
        }
        for (player, (&a, acts)) in profile.iter().zip(&self.actions).enumerate() {
            if a >= acts.len() {
                return Err(Error::InvalidAction {
                    player,
                    action: a,
                    count: acts.len(),
                });
            }
        }
        Ok(())
    }

    /// Payoff vector `(u_1(s), ..., u_N(s))` of a pure profile.
    pub fn utility(&self, profile: &[usize]) -> Result<&[f64]> {
        self.check_profile(profile)?;
        Ok(self.payoffs_at(profile))
    }

    /// Unchecked variant of [`Game::utility`] for hot loops.
    #[inline]
    pub fn payoffs_at(&self, profile: &[usize]) -> &[f64] {
        let n = self.players.len();
        let idx = self.profile_index(profile);
        &self.payoffs[idx * n..(idx + 1) * n]
    }

    #[inline]
    pub fn payoff(&self, profile: &[usize], player: usize) -> f64 {
        self.payoffs[self.profile_index(profile) * self.players.len() + player]
    }

    #[inline]
    pub fn profile_index(&self, profile: &[usize]) -> usize {
        profile.iter().zip(&self.strides).map(|(s, k)| s * k).sum()
    }

    /// Expected utility of `player` under a mixed profile.
    pub fn expected_utility(&self, profile: &MixedProfile, player: usize) -> Result<f64> {
        self.check_player(player)?;
        profile.check_for(self)?;
        let mut total = 0.0;
        for s in self.profiles() {
            let w: f64 = s
                .iter()
                .zip(profile.strategies())
                .map(|(&a, sigma)| sigma.prob(a))
                .product();
            if w != 0.0 {
                total += w * self.payoff(&s, player);
            }
        }
        Ok(total)
    }

    /// Expected utility of each of `player`'s pure actions when every other
    /// player follows `profile`. The player's own entry in `profile` is ignored.
    pub fn action_values(&self, player: usize, profile: &MixedProfile) -> Result<Vec<f64>> {
        self.check_player(player)?;
        profile.check_for(self)?;
        let mut values = vec![0.0; self.num_actions(player)];
        for s in self.profiles() {
            let w: f64 = s
                .iter()
                .zip(profile.strategies())
                .enumerate()
                .filter(|&(j, _)| j != player)
                .map(|(_, (&a, sigma))| sigma.prob(a))
                .product();
            if w != 0.0 {
                values[s[player]] += w * self.payoff(&s, player);
            }
        }
        Ok(values)
    }

    /// Expected utility of each of `player`'s actions against independent
    /// distributions over the other players' actions. `others[player]` is ignored.
    pub fn action_values_against(&self, player: usize, others: &[&[f64]]) -> Vec<f64> {
        let mut values = vec![0.0; self.num_actions(player)];
        for s in self.profiles() {
            let mut w = 1.0;
            for (j, &a) in s.iter().enumerate() {
                if j != player {
                    w *= others[j][a];
                    if w == 0.0 {
                        break;
                    }
                }
            }
            if w != 0.0 {
                values[s[player]] += w * self.payoff(&s, player);
            }
        }
        values
    }

    /// Applies `u ↦ scale · u + shift` to every payoff.
    pub fn affine(&self, scale: f64, shift: f64) -> Game {
        Game {
            payoffs: self.payoffs.iter().map(|u| scale * u + shift).collect(),
            ..self.clone()
        }
    }

    pub fn format_profile(&self, profile: &[usize]) -> String {
        fmt_profile(&self.actions, profile)
    }

    /// Reads back a symmetric game if this is a 2-player game with
    /// `u_1(s, s') = u_2(s', s)` and identical action lists.
    pub fn as_symmetric(&self) -> Option<SymmetricGame> {
        if self.num_players() != 2 || self.actions[0] != self.actions[1] {
            return None;
        }
        let n = self.num_actions(0);
        let mut payoff = Vec::with_capacity(n * n);
        for s in 0..n {
            for t in 0..n {
                let u1 = self.payoff(&[s, t], 0);
                let u2 = self.payoff(&[t, s], 1);
                if u1 != u2 {
                    return None;
                }
                payoff.push(u1);
            }
        }
        Some(SymmetricGame {
            actions: self.actions[0].clone(),
            payoff,
        })
    }
}

fn validate_shape(players: &[String], actions: &[Vec<String>]) -> Result<usize> {
    if players.is_empty() {
        return Err(Error::validation("game needs at least one player"));
    }
    if actions.len() != players.len() {
        return Err(Error::validation(format!(
            "{} players but {} action lists",
            players.len(),
            actions.len()
        )));
    }
    let mut seen = HashSet::new();
    for p in players {
        if !seen.insert(p.as_str()) {
            return Err(Error::validation(format!("duplicate player name {p:?}")));
        }
    }
    for (i, acts) in actions.iter().enumerate() {
        if acts.is_empty() {
            return Err(Error::validation(format!(
                "player {} ({}) has an empty action list",
                i, players[i]
            )));
        }
        let mut seen = HashSet::new();
        for a in acts {
            if !seen.insert(a.as_str()) {
                return Err(Error::validation(format!(
                    "player {} ({}) has duplicate action {a:?}",
                    i, players[i]
                )));
            }
        }
    }
    Ok(players.len())
}

fn strides_for(actions: &[Vec<String>]) -> Vec<usize> {
    let mut strides = vec![1; actions.len()];
    for i in (0..actions.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * actions[i + 1].len();
    }
    strides
}

fn fmt_profile(actions: &[Vec<String>], profile: &[usize]) -> String {
    let names: Vec<&str> = profile
        .iter()
        .zip(actions)
        .map(|(&a, acts)| acts.get(a).map_or("?", String::as_str))
        .collect();
    format!("({})", names.join(","))
}

pub(crate) fn letter_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i < 26 {
                ((b'A' + i as u8) as char).to_string()
            } else {
                format!("S{i}")
            }
        })
        .collect()
}

/// Iterates pure profiles in row-major order (last player fastest).
#[derive(Debug, Clone)]
pub struct ProfileIter {
    counts: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl ProfileIter {
    pub fn new(counts: Vec<usize>) -> Self {
        let next = if counts.contains(&0) {
            None
        } else {
            Some(vec![0; counts.len()])
        };
        ProfileIter { counts, next }
    }
}

impl Iterator for ProfileIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.counts[i] {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(current)
    }
}

/// Probability distribution over one player's actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    /// Validates a probability vector. Vectors whose sum is within
    /// [`PROB_TOLERANCE`] of 1 are renormalized; anything else is rejected.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("mixed strategy over zero actions"));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::domain(format!("invalid probability {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::domain(format!("probabilities sum to {sum}, not 1")));
        }
        let probs = if sum == 1.0 {
            probs
        } else {
            probs.into_iter().map(|p| p / sum).collect()
        };
        Ok(MixedStrategy { probs })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::domain(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::domain("weights have zero total"));
        }
        Ok(MixedStrategy {
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn pure(num_actions: usize, action: usize) -> Self {
        assert!(action < num_actions, "pure action out of range");
        let mut probs = vec![0.0; num_actions];
        probs[action] = 1.0;
        MixedStrategy { probs }
    }

    pub fn uniform(num_actions: usize) -> Self {
        assert!(num_actions > 0);
        MixedStrategy {
            probs: vec![1.0 / num_actions as f64; num_actions],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, action: usize) -> f64 {
        self.probs[action]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Actions with probability above `tol`.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.probs.len())
            .filter(|&a| self.probs[a] > tol)
            .collect()
    }

    /// The action this strategy plays with certainty, if any.
    pub fn as_pure(&self) -> Option<usize> {
        let s = self.support(0.0);
        (s.len() == 1).then(|| s[0])
    }

    /// Largest coordinate-wise difference.
    pub fn distance(&self, other: &MixedStrategy) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for MixedStrategy {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        MixedStrategy::new(v)
    }
}

impl From<MixedStrategy> for Vec<f64> {
    fn from(s: MixedStrategy) -> Vec<f64> {
        s.probs
    }
}

impl fmt::Display for MixedStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.probs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", round_for_display(*p))?;
        }
        write!(f, ")")
    }
}

fn round_for_display(p: f64) -> f64 {
    (p * 1e9).round() / 1e9
}

/// One mixed strategy per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedProfile {
    strategies: Vec<MixedStrategy>,
}

impl MixedProfile {
    pub fn new(strategies: Vec<MixedStrategy>) -> Self {
        MixedProfile { strategies }
    }

    /// Validated constructor.
    pub fn for_game(game: &Game, strategies: Vec<MixedStrategy>) -> Result<Self> {
        let p = MixedProfile { strategies };
        p.check_for(game)?;
        Ok(p)
    }

    pub fn pure(game: &Game, profile: &[usize]) -> Result<Self> {
        game.check_profile(profile)?;
        Ok(MixedProfile {
            strategies: profile
                .iter()
                .enumerate()
                .map(|(i, &a)| MixedStrategy::pure(game.num_actions(i), a))
                .collect(),
        })
    }

    pub fn uniform(game: &Game) -> Self {
        MixedProfile {
            strategies: (0..game.num_players())
                .map(|i| MixedStrategy::uniform(game.num_actions(i)))
                .collect(),
        }
    }

    pub fn check_for(&self, game: &Game) -> Result<()> {
        if self.strategies.len() != game.num_players() {
            return Err(Error::domain(format!(
                "profile has {} strategies, game has {} players",
                self.strategies.len(),
                game.num_players()
            )));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if s.len() != game.num_actions(i) {
                return Err(Error::domain(format!(
                    "player {i}: strategy over {} actions, game has {}",
                    s.len(),
                    game.num_actions(i)
                )));
            }
        }
        Ok(())
    }

    pub fn strategies(&self) -> &[MixedStrategy] {
        &self.strategies
    }

    pub fn strategy(&self, player: usize) -> &MixedStrategy {
        &self.strategies[player]
    }

    /// Replaces one player's strategy.
    pub fn with(&self, player: usize, strategy: MixedStrategy) -> Self {
        let mut strategies = self.strategies.clone();
        strategies[player] = strategy;
        MixedProfile { strategies }
    }

    /// The pure profile, when every strategy is degenerate.
    pub fn as_pure(&self) -> Option<Vec<usize>> {
        self.strategies.iter().map(MixedStrategy::as_pure).collect()
    }

    pub fn distance(&self, other: &MixedProfile) -> f64 {
        self.strategies
            .iter()
            .zip(&other.strategies)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for MixedProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.strategies.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// Two-player symmetric game given by `u(s, s')`, the payoff to an
/// `s`-player meeting an `s'`-player.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricGame {
    actions: Vec<String>,
    payoff: Vec<f64>,
}

impl SymmetricGame {
    pub fn new(actions: Vec<String>, payoff: Vec<Vec<f64>>) -> Result<Self> {
        let n = actions.len();
        if n == 0 {
            return Err(Error::validation("symmetric game has an empty action list"));
        }
        let mut seen = HashSet::new();
        for a in &actions {
            if !seen.insert(a.as_str()) {
                return Err(Error::validation(format!("duplicate action {a:?}")));
            }
        }
        if payoff.len() != n || payoff.iter().any(|row| row.len() != n) {
            return Err(Error::validation(format!("payoff matrix must be {n}×{n}")));
        }
        if payoff.iter().flatten().any(|u| !u.is_finite()) {
            return Err(Error::validation("non-finite payoff"));
        }
        Ok(SymmetricGame {
            actions,
            payoff: payoff.into_iter().flatten().collect(),
        })
    }

    /// Symmetric game with actions named `A`, `B`, ...
    pub fn from_matrix(payoff: Vec<Vec<f64>>) -> Result<Self> {
        SymmetricGame::new(letter_names(payoff.len()), payoff)
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    #[inline]
    pub fn u(&self, s: usize, t: usize) -> f64 {
        self.payoff[s * self.actions.len() + t]
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.payoff
            .chunks(self.actions.len())
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// `Σ_{s,t} x_s · y_t · u(s, t)`: payoff of mixture `x` against mixture `y`.
    pub fn mixed_payoff(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.actions.len();
        let mut total = 0.0;
        for s in 0..n {
            if x[s] == 0.0 {
                continue;
            }
            let row: f64 = (0..n).map(|t| self.u(s, t) * y[t]).sum();
            total += x[s] * row;
        }
        total
    }

    /// Payoff of each pure strategy against mixture `y`.
    pub fn payoffs_against(&self, y: &[f64]) -> Vec<f64> {
        let n = self.actions.len();
        (0..n)
            .map(|s| (0..n).map(|t| self.u(s, t) * y[t]).sum())
            .collect()
    }

    pub fn min_payoff(&self) -> f64 {
        self.payoff.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Applies `u ↦ scale · u + shift`; used to bring payoffs into the range
    /// where the discrete replicator map keeps populations nonnegative.
    pub fn affine(&self, scale: f64, shift: f64) -> SymmetricGame {
        SymmetricGame {
            actions: self.actions.clone(),
            payoff: self.payoff.iter().map(|u| scale * u + shift).collect(),
        }
    }

    /// The 2-player game with `u_1(s, s') = u(s, s')` and `u_2(s, s') = u(s', s)`.
    pub fn embed(&self) -> Game {
        Game::from_fn(
            vec!["1".into(), "2".into()],
            vec![self.actions.clone(), self.actions.clone()],
            |p| vec![self.u(p[0], p[1]), self.u(p[1], p[0])],
        )
        .expect("symmetric game embeds into a valid bimatrix game")
    }
}

/// Free-function form of [`SymmetricGame::embed`].
pub fn embed_symmetric(sym: &SymmetricGame) -> Game {
    sym.embed()
}
