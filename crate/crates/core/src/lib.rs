//! Normal-form game toolkit and multiagent learning dynamics.
//!
//! - [`game`]: games, mixed strategies, expected utilities
//! - [`io`]: JSON game documents
//! - [`equilibria`]: dominance, best response, Nash, ESS
//! - [`fictitious`]: fictitious play with per-opponent frequency models
//! - [`replicator`]: discrete replicator dynamics and stability probes
//! - [`clri`]: expected-error prediction for learning agents chasing a moving target
//! - [`nlevel`]: 0/1/2-level modeling agents in repeated play

pub mod clri;
pub mod equilibria;
pub mod error;
pub mod fictitious;
pub mod fixtures;
pub mod game;
pub mod io;
pub mod nlevel;
pub mod replicator;
pub mod seed;

pub use error::{Error, Result};
pub use game::{embed_symmetric, Game, MixedProfile, MixedStrategy, SymmetricGame};
pub use io::{load_document, load_game, save_game, save_symmetric, LoadedGame};
