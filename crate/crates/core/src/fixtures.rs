//! Small textbook games used throughout the tests, benches and CLI samples.

use crate::game::{Game, SymmetricGame};

/// Row player 1, column player 2; the pure equilibria are (A,B) and (B,A).
pub fn fig1() -> Game {
    Game::bimatrix(
        &[vec![1.0, 3.0], vec![3.0, 2.0]],
        &[vec![2.0, 4.0], vec![2.0, 1.0]],
    )
    .unwrap()
}

/// Player 1's B is strictly dominated by A; iterated dominance leaves (A,B).
pub fn fig2() -> Game {
    Game::bimatrix(
        &[vec![8.0, 9.0], vec![1.0, 3.0]],
        &[vec![2.0, 4.0], vec![2.0, 1.0]],
    )
    .unwrap()
}

/// Anti-coordination game on which fictitious play can cycle.
pub fn fig3() -> Game {
    fig3_symmetric().embed()
}

pub fn fig3_symmetric() -> SymmetricGame {
    SymmetricGame::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
}

/// Rock-paper-scissors with a tie payoff of 1/2 and win/loss of 1/0.
pub fn rock_paper_scissors() -> SymmetricGame {
    SymmetricGame::new(
        vec!["R".into(), "P".into(), "S".into()],
        vec![
            vec![0.5, 0.0, 1.0],
            vec![1.0, 0.5, 0.0],
            vec![0.0, 1.0, 0.5],
        ],
    )
    .unwrap()
}
