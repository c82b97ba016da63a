//! Static solution concepts: dominance, best responses, Nash equilibria and
//! evolutionarily stable strategies.

mod dominance;
mod ess;
mod nash;

pub use dominance::{
    is_dominated, iterated_dominance, iterated_dominance_in_order, DominanceMode, Elimination,
    ReducedGame,
};
pub use ess::{check_ess, EssVerdict, DEFAULT_ESS_RESOLUTION};
pub use nash::{enumerate_nash_2p, enumerate_nash_2p_with_cap, DEFAULT_ACTION_CAP};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{Game, MixedProfile};

/// Relative tolerance under which two action values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Every action that maximizes expected utility, in index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub actions: Vec<usize>,
    pub value: f64,
}

impl BestResponse {
    /// Lowest-index representative.
    pub fn first(&self) -> usize {
        self.actions[0]
    }
}

/// Maximal entries of `values` under [`TIE_TOLERANCE`].
pub fn argmax_set(values: &[f64]) -> BestResponse {
    let value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * value.abs().max(1.0);
    BestResponse {
        actions: (0..values.len())
            .filter(|&a| values[a] >= value - tol)
            .collect(),
        value,
    }
}

/// Best responses of `player` to the other players' strategies in
/// `profile`; the player's own entry is ignored.
pub fn best_response(game: &Game, player: usize, profile: &MixedProfile) -> Result<BestResponse> {
    Ok(argmax_set(&game.action_values(player, profile)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NashKind {
    Pure,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashResult {
    pub profile: MixedProfile,
    pub kind: NashKind,
    pub strict: bool,
    /// Largest gain any player can get by a unilateral deviation.
    pub regret: f64,
    pub equilibrium: bool,
}

/// Measures regret at `profile` and classifies it.
pub fn verify_nash(game: &Game, profile: &MixedProfile, tolerance: f64) -> Result<NashResult> {
    profile.check_for(game)?;
    let mut regret: f64 = 0.0;
    let mut strict = true;
    for player in 0..game.num_players() {
        let values = game.action_values(player, profile)?;
        let sigma = profile.strategy(player);
        let current: f64 = values.iter().zip(sigma.probs()).map(|(v, p)| v * p).sum();
        let br = argmax_set(&values);
        regret = regret.max(br.value - current);
        strict &= sigma.as_pure().is_some_and(|a| br.actions == [a]);
    }
    let regret = regret.max(0.0);
    let equilibrium = regret <= tolerance;
    Ok(NashResult {
        kind: if profile.as_pure().is_some() {
            NashKind::Pure
        } else {
            NashKind::Mixed
        },
        profile: profile.clone(),
        strict: strict && equilibrium,
        regret,
        equilibrium,
    })
}

/// Writes `profile,regret,kind,strict` rows.
pub fn write_nash_csv<W: std::io::Write>(results: &[NashResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["profile", "regret", "kind", "strict"])?;
    for r in results {
        w.write_record([
            r.profile.to_string(),
            r.regret.to_string(),
            match r.kind {
                NashKind::Pure => "pure".to_string(),
                NashKind::Mixed => "mixed".to_string(),
            },
            r.strict.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
