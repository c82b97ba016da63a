//! Support enumeration for two-player games.
//!
//! For every pair of supports `(I, J)` the opponent's mixture must make the
//! player indifferent across its own support and leave no better action
//! outside it. Square nonsingular systems are solved directly; everything
//! else (unequal support sizes, singular systems from degenerate games) goes
//! through a small feasibility LP so that degenerate games still yield an
//! equilibrium.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use super::{verify_nash, NashResult};
use crate::error::{Error, Result};
use crate::game::{Game, MixedProfile, MixedStrategy};

pub const DEFAULT_ACTION_CAP: usize = 8;

const DEDUP_TOLERANCE: f64 = 1e-7;

pub fn enumerate_nash_2p(game: &Game) -> Result<Vec<NashResult>> {
    enumerate_nash_2p_with_cap(game, DEFAULT_ACTION_CAP)
}

pub fn enumerate_nash_2p_with_cap(game: &Game, cap: usize) -> Result<Vec<NashResult>> {
    if game.num_players() != 2 {
        return Err(Error::Unsupported(format!(
            "Nash enumeration needs exactly 2 players, game has {}",
            game.num_players()
        )));
    }
    let (m, n) = (game.num_actions(0), game.num_actions(1));
    if m > cap || n > cap {
        return Err(Error::Unsupported(format!(
            "{m}×{n} game exceeds the enumeration cap of {cap} actions per player"
        )));
    }
    // Player 1's payoffs indexed (own, other); likewise for player 2.
    let u1: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..n).map(|j| game.payoff(&[i, j], 0)).collect())
        .collect();
    let u2: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| game.payoff(&[i, j], 1)).collect())
        .collect();
    let scale = u1
        .iter()
        .chain(&u2)
        .flatten()
        .fold(1.0_f64, |acc, u| acc.max(u.abs()));
    let verify_tol = 1e-9 * scale;

    let supports1 = subsets(m);
    let supports2 = subsets(n);
    let mut pairs: Vec<(&Vec<usize>, &Vec<usize>)> = supports1
        .iter()
        .flat_map(|i| supports2.iter().map(move |j| (i, j)))
        .collect();
    pairs.sort_by_key(|(i, j)| (i.len() + j.len(), i.len()));

    let mut found: Vec<NashResult> = Vec::new();
    for (support1, support2) in pairs {
        let Some(y) = opponent_mixture(&u1, support1, support2, scale) else {
            continue;
        };
        let Some(x) = opponent_mixture(&u2, support2, support1, scale) else {
            continue;
        };
        let profile = MixedProfile::new(vec![
            MixedStrategy::from_weights(&x)?,
            MixedStrategy::from_weights(&y)?,
        ]);
        let result = verify_nash(game, &profile, verify_tol)?;
        if !result.equilibrium {
            continue;
        }
        if found
            .iter()
            .any(|r| r.profile.distance(&result.profile) <= DEDUP_TOLERANCE)
        {
            continue;
        }
        found.push(result);
    }
    Ok(found)
}

/// Nonempty subsets of `0..n`, smallest first, lexicographic within a size.
fn subsets(n: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
        .collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all
}

/// Mixture over `other_support` that makes the player (payoffs `u[own][other]`)
/// indifferent across `own_support` with no better action outside it.
fn opponent_mixture(
    u: &[Vec<f64>],
    own_support: &[usize],
    other_support: &[usize],
    scale: f64,
) -> Option<Vec<f64>> {
    let tol = 1e-9 * scale;
    let k = other_support.len();
    let candidate = if own_support.len() == k {
        solve_square(u, own_support, other_support)
    } else {
        None
    };
    let candidate = candidate.or_else(|| solve_lp(u, own_support, other_support))?;

    let mut y = vec![0.0; u[0].len()];
    for (&j, &p) in other_support.iter().zip(&candidate) {
        if p < -1e-12 {
            return None;
        }
        y[j] = p.max(0.0);
    }
    let total: f64 = y.iter().sum();
    if total <= 0.0 {
        return None;
    }
    y.iter_mut().for_each(|p| *p /= total);

    let values: Vec<f64> = u
        .iter()
        .map(|row| row.iter().zip(&y).map(|(a, b)| a * b).sum())
        .collect();
    let v = own_support
        .iter()
        .map(|&i| values[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let indifferent = own_support.iter().all(|&i| (values[i] - v).abs() <= tol);
    let no_better = values.iter().all(|&w| w <= v + tol);
    (indifferent && no_better).then_some(y)
}

fn solve_square(u: &[Vec<f64>], own: &[usize], other: &[usize]) -> Option<Vec<f64>> {
    let k = other.len();
    // Unknowns: y_j for j in `other`, then the common value v.
    let mut a = DMatrix::<f64>::zeros(k + 1, k + 1);
    let mut b = DVector::<f64>::zeros(k + 1);
    for (r, &i) in own.iter().enumerate() {
        for (c, &j) in other.iter().enumerate() {
            a[(r, c)] = u[i][j];
        }
        a[(r, k)] = -1.0;
    }
    for c in 0..k {
        a[(k, c)] = 1.0;
    }
    b[k] = 1.0;
    let lu = a.lu();
    if !lu.is_invertible() {
        return None;
    }
    let sol = lu.solve(&b)?;
    if sol.iter().any(|x| !x.is_finite()) {
        return None;
    }
    Some(sol.iter().take(k).copied().collect())
}

fn solve_lp(u: &[Vec<f64>], own: &[usize], other: &[usize]) -> Option<Vec<f64>> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let y: Vec<_> = other.iter().map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let v = lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY));
    let ones: Vec<_> = y.iter().map(|&var| (var, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    for (i, row) in u.iter().enumerate() {
        let mut expr: Vec<_> = y
            .iter()
            .zip(other)
            .map(|(&var, &j)| (var, row[j]))
            .collect();
        expr.push((v, -1.0));
        let op = if own.contains(&i) {
            ComparisonOp::Eq
        } else {
            ComparisonOp::Le
        };
        lp.add_constraint(expr.as_slice(), op, 0.0);
    }
    let sol = lp.solve().ok()?;
    Some(y.iter().map(|&var| sol[var]).collect())
}
