#![allow(dead_code)]

use magt_core::{Game, SymmetricGame};
use rand::Rng;

/// 2-player game with `m × n` actions and integer payoffs in `[lo, hi]`.
pub fn integer_bimatrix<R: Rng>(rng: &mut R, m: usize, n: usize, lo: i32, hi: i32) -> Game {
    let draw = |rng: &mut R| -> Vec<Vec<f64>> {
        (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(lo..=hi) as f64).collect())
            .collect()
    };
    let a = draw(rng);
    let b = draw(rng);
    Game::bimatrix(&a, &b).unwrap()
}

/// Game with the given action counts and integer payoffs in `[lo, hi]`.
pub fn integer_game<R: Rng>(rng: &mut R, counts: &[usize], lo: i32, hi: i32) -> Game {
    let players: Vec<String> = (1..=counts.len()).map(|i| format!("P{i}")).collect();
    let actions: Vec<Vec<String>> = counts
        .iter()
        .map(|&k| {
            (0..k)
                .map(|a| ((b'A' + a as u8) as char).to_string())
                .collect()
        })
        .collect();
    Game::from_fn(players, actions, |_| {
        (0..counts.len())
            .map(|_| rng.gen_range(lo..=hi) as f64)
            .collect()
    })
    .unwrap()
}

/// Symmetric game with payoffs uniform in `[-scale, scale]`.
pub fn small_symmetric<R: Rng>(rng: &mut R, n: usize, scale: f64) -> SymmetricGame {
    let m = (0..n)
        .map(|_| (0..n).map(|_| scale * rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    SymmetricGame::from_matrix(m).unwrap()
}

/// Pure profiles where every player's action is the unique best response.
pub fn strict_pure_equilibria(game: &Game) -> Vec<Vec<usize>> {
    game.profiles()
        .filter(|p| {
            (0..game.num_players()).all(|i| {
                let u = game.payoff(p, i);
                (0..game.num_actions(i)).filter(|&a| a != p[i]).all(|a| {
                    let mut q = p.clone();
                    q[i] = a;
                    game.payoff(&q, i) < u
                })
            })
        })
        .collect()
}
