use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{MixedStrategy, SymmetricGame};

/// Grid divisions per simplex coordinate used when none is given.
pub const DEFAULT_ESS_RESOLUTION: usize = 100;

const EQUAL_TOLERANCE: f64 = 1e-9;
const MAX_GRID_POINTS: u128 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EssVerdict {
    pub strategy: MixedStrategy,
    pub is_nash: bool,
    pub is_ess: bool,
    /// First invader that breaks the candidate, when one was found.
    pub witness: Option<MixedStrategy>,
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Tests `candidate` against every pure invader and every point of the
/// simplex grid with `resolution` divisions per coordinate.
///
/// An invader `w'` is repelled when `u(w,w) > u(w',w)`, or when the two tie
/// (within 1e-9) and `u(w,w') > u(w',w')`.
pub fn check_ess(
    sym: &SymmetricGame,
    candidate: &MixedStrategy,
    resolution: usize,
) -> Result<EssVerdict> {
    let n = sym.num_actions();
    if candidate.len() != n {
        return Err(Error::domain(format!(
            "candidate has {} entries, game has {n} actions",
            candidate.len()
        )));
    }
    if resolution < 1 {
        return Err(Error::domain("invader grid resolution must be at least 1"));
    }
    let points = binomial((resolution + n - 1) as u128, (n - 1) as u128);
    if points > MAX_GRID_POINTS {
        return Err(Error::Unsupported(format!(
            "invader grid of {points} points; lower the resolution"
        )));
    }

    let w = candidate.probs();
    let against_w = sym.payoffs_against(w);
    // u(w, x) = Σ_t x_t · Σ_s w_s u(s, t)
    let w_against: Vec<f64> = (0..n)
        .map(|t| (0..n).map(|s| w[s] * sym.u(s, t)).sum())
        .collect();
    let incumbent = dot(w, &against_w);

    let repelled = |x: &[f64]| -> bool {
        let first = incumbent - dot(x, &against_w);
        if first > EQUAL_TOLERANCE {
            return true;
        }
        if first < -EQUAL_TOLERANCE {
            return false;
        }
        dot(&w_against, x) - sym.mixed_payoff(x, x) > EQUAL_TOLERANCE
    };
    let is_candidate = |x: &[f64]| x.iter().zip(w).all(|(a, b)| (a - b).abs() <= 1e-12);

    let nash_violation = (0..n).find(|&s| against_w[s] > incumbent + EQUAL_TOLERANCE);
    if let Some(s) = nash_violation {
        return Ok(EssVerdict {
            strategy: candidate.clone(),
            is_nash: false,
            is_ess: false,
            witness: Some(MixedStrategy::pure(n, s)),
        });
    }

    let mut witness = None;
    for s in 0..n {
        let x = MixedStrategy::pure(n, s);
        if !is_candidate(x.probs()) && !repelled(x.probs()) {
            witness = Some(x);
            break;
        }
    }
    if witness.is_none() {
        let mut counts = vec![0usize; n];
        let mut x = vec![0.0; n];
        witness = grid_search(&mut counts, 0, resolution, resolution, &mut x, &mut |x| {
            !is_candidate(x) && !repelled(x)
        })
        .map(|v| MixedStrategy::new(v).expect("grid points are distributions"));
    }
    Ok(EssVerdict {
        strategy: candidate.clone(),
        is_nash: true,
        is_ess: witness.is_none(),
        witness,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Visits compositions of `resolution` into `counts.len()` parts in
/// lexicographic order, returning the first point where `hit` holds.
fn grid_search(
    counts: &mut [usize],
    pos: usize,
    remaining: usize,
    resolution: usize,
    x: &mut [f64],
    hit: &mut impl FnMut(&[f64]) -> bool,
) -> Option<Vec<f64>> {
    let n = counts.len();
    if pos == n - 1 {
        counts[pos] = remaining;
        for (xi, &c) in x.iter_mut().zip(counts.iter()) {
            *xi = c as f64 / resolution as f64;
        }
        return hit(x).then(|| x.to_vec());
    }
    for c in 0..=remaining {
        counts[pos] = c;
        if let Some(found) = grid_search(counts, pos + 1, remaining - c, resolution, x, hit) {
            return Some(found);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;

    #[test]
    fn anti_coordination_mixture_is_ess() {
        let v = check_ess(&fig3_symmetric(), &MixedStrategy::uniform(2), 100).unwrap();
        assert!(v.is_nash && v.is_ess);
        assert!(v.witness.is_none());
    }

    #[test]
    fn pure_a_is_not_nash() {
        let v = check_ess(&fig3_symmetric(), &MixedStrategy::pure(2, 0), 100).unwrap();
        assert!(!v.is_nash && !v.is_ess);
        assert_eq!(v.witness, Some(MixedStrategy::pure(2, 1)));
    }

    #[test]
    fn constant_game_has_no_ess() {
        let sym = SymmetricGame::from_matrix(vec![vec![2.0; 3]; 3]).unwrap();
        for cand in [MixedStrategy::uniform(3), MixedStrategy::pure(3, 1)] {
            let v = check_ess(&sym, &cand, 10).unwrap();
            assert!(v.is_nash && !v.is_ess);
            assert!(v.witness.is_some());
        }
    }

    #[test]
    fn strict_pure_equilibrium_is_ess() {
        // Coordination game: both pure strategies are strict equilibria.
        let sym = SymmetricGame::from_matrix(vec![vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(
            check_ess(&sym, &MixedStrategy::pure(2, 0), 100)
                .unwrap()
                .is_ess
        );
        let mixed = MixedStrategy::new(vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let v = check_ess(&sym, &mixed, 100).unwrap();
        assert!(v.is_nash && !v.is_ess);
    }

    #[test]
    fn zero_resolution_rejected() {
        assert!(check_ess(&fig3_symmetric(), &MixedStrategy::uniform(2), 0).is_err());
    }

    #[test]
    fn grid_counts() {
        assert_eq!(binomial(103, 3), 176_851);
        let mut seen = 0;
        let mut counts = vec![0; 3];
        let mut x = vec![0.0; 3];
        grid_search(&mut counts, 0, 4, 4, &mut x, &mut |_| {
            seen += 1;
            false
        });
        assert_eq!(seen, binomial(6, 2));
    }
}
