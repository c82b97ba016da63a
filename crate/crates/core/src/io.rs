//! JSON game documents.
//!
//! General form:
//!
//! ```json
//! { "players": ["1", "2"],
//!   "actions": [["A", "B"], ["A", "B"]],
//!   "payoffs": [ { "profile": ["A", "B"], "u": [3, 4] }, ... ] }
//! ```
//!
//! Symmetric form, where `u` is the payoff to the `row` player:
//!
//! ```json
//! { "symmetric": true,
//!   "actions": ["A", "B"],
//!   "payoffs": [ { "row": "A", "col": "B", "u": 1 }, ... ] }
//! ```

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::game::{Game, SymmetricGame};

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedGame {
    pub game: Game,
    /// Present when the document used the symmetric form.
    pub symmetric: Option<SymmetricGame>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneralDoc {
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    symmetric: bool,
    players: Vec<String>,
    actions: Vec<Vec<String>>,
    payoffs: Vec<ProfileRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileRecord {
    profile: Vec<String>,
    u: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymmetricDoc {
    symmetric: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    players: Option<Vec<String>>,
    actions: Vec<String>,
    payoffs: Vec<PairRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairRecord {
    row: String,
    col: String,
    u: f64,
}

fn parse_error(location: impl Into<String>, message: impl ToString) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.to_string(),
    }
}

/// Parses a game document, keeping the symmetric view when present.
pub fn load_document(text: &str) -> Result<LoadedGame> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| parse_error(format!("line {} column {}", e.line(), e.column()), e))?;
    let symmetric = match value.get("symmetric") {
        None => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(parse_error("field `symmetric`", "expected a boolean")),
    };
    if symmetric {
        let doc: SymmetricDoc =
            serde_json::from_value(value).map_err(|e| parse_error("symmetric game document", e))?;
        let sym = symmetric_from_doc(doc)?;
        Ok(LoadedGame {
            game: sym.embed(),
            symmetric: Some(sym),
        })
    } else {
        let doc: GeneralDoc =
            serde_json::from_value(value).map_err(|e| parse_error("game document", e))?;
        Ok(LoadedGame {
            game: game_from_doc(doc)?,
            symmetric: None,
        })
    }
}

pub fn load_game(text: &str) -> Result<Game> {
    load_document(text).map(|d| d.game)
}

fn index_map(names: &[String]) -> HashMap<&str, usize> {
    names
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect()
}

fn game_from_doc(doc: GeneralDoc) -> Result<Game> {
    let n = doc.players.len();
    if n == 0 {
        return Err(Error::validation("field `players` is empty"));
    }
    if doc.actions.len() != n {
        return Err(Error::validation(format!(
            "field `actions` has {} lists for {n} players",
            doc.actions.len()
        )));
    }
    for (i, acts) in doc.actions.iter().enumerate() {
        if acts.is_empty() {
            return Err(Error::validation(format!("field `actions[{i}]` is empty")));
        }
    }
    let maps: Vec<_> = doc.actions.iter().map(|a| index_map(a)).collect();
    let counts: Vec<usize> = doc.actions.iter().map(Vec::len).collect();
    let total: usize = counts.iter().product();
    let mut table: Vec<Option<Vec<f64>>> = vec![None; total];
    for (r, rec) in doc.payoffs.iter().enumerate() {
        if rec.profile.len() != n {
            return Err(Error::validation(format!(
                "payoffs[{r}].profile has {} entries, expected {n}",
                rec.profile.len()
            )));
        }
        if rec.u.len() != n {
            return Err(Error::validation(format!(
                "payoffs[{r}].u has {} entries, expected {n}",
                rec.u.len()
            )));
        }
        let mut idx = 0;
        for (p, name) in rec.profile.iter().enumerate() {
            let a = *maps[p].get(name.as_str()).ok_or_else(|| {
                Error::validation(format!(
                    "payoffs[{r}].profile[{p}]: unknown action {name:?} for player {}",
                    doc.players[p]
                ))
            })?;
            idx = idx * counts[p] + a;
        }
        if table[idx].is_some() {
            return Err(Error::validation(format!(
                "payoffs[{r}]: duplicate record for profile ({})",
                rec.profile.join(",")
            )));
        }
        table[idx] = Some(rec.u.clone());
    }
    let missing: Vec<String> = crate::game::ProfileIter::new(counts.clone())
        .zip(&table)
        .filter(|(_, u)| u.is_none())
        .map(|(s, _)| {
            let names: Vec<&str> = s
                .iter()
                .enumerate()
                .map(|(p, &a)| doc.actions[p][a].as_str())
                .collect();
            format!("({})", names.join(","))
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::validation(format!(
            "payoff tensor incomplete, missing {} profile(s): {}",
            missing.len(),
            missing.join(" ")
        )));
    }
    let dense = table.into_iter().flatten().flatten().collect();
    Game::from_dense(doc.players, doc.actions, dense)
}

fn symmetric_from_doc(doc: SymmetricDoc) -> Result<SymmetricGame> {
    if doc.actions.is_empty() {
        return Err(Error::validation("field `actions` is empty"));
    }
    if let Some(p) = &doc.players {
        if p.len() != 2 {
            return Err(Error::validation(
                "symmetric games have exactly two players",
            ));
        }
    }
    let map = index_map(&doc.actions);
    let n = doc.actions.len();
    let mut table = vec![vec![None; n]; n];
    for (r, rec) in doc.payoffs.iter().enumerate() {
        let lookup = |field: &str, name: &str| {
            map.get(name).copied().ok_or_else(|| {
                Error::validation(format!("payoffs[{r}].{field}: unknown action {name:?}"))
            })
        };
        let (s, t) = (lookup("row", &rec.row)?, lookup("col", &rec.col)?);
        if table[s][t].is_some() {
            return Err(Error::validation(format!(
                "payoffs[{r}]: duplicate record for ({},{})",
                rec.row, rec.col
            )));
        }
        table[s][t] = Some(rec.u);
    }
    let mut missing = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if table[s][t].is_none() {
                missing.push(format!("({},{})", doc.actions[s], doc.actions[t]));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::validation(format!(
            "payoff matrix incomplete, missing {} pair(s): {}",
            missing.len(),
            missing.join(" ")
        )));
    }
    let matrix = table
        .into_iter()
        .map(|row| row.into_iter().map(Option::unwrap).collect())
        .collect();
    SymmetricGame::new(doc.actions, matrix)
}

/// Serializes a game in the general document form.
pub fn save_game(game: &Game) -> String {
    let doc = GeneralDoc {
        symmetric: false,
        players: game.players().to_vec(),
        actions: (0..game.num_players())
            .map(|i| game.actions(i).to_vec())
            .collect(),
        payoffs: game
            .profiles()
            .map(|s| ProfileRecord {
                profile: s
                    .iter()
                    .enumerate()
                    .map(|(p, &a)| game.action_name(p, a).to_string())
                    .collect(),
                u: game.payoffs_at(&s).to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("game document serializes")
}

/// Serializes a symmetric game in the `symmetric: true` form.
pub fn save_symmetric(sym: &SymmetricGame) -> String {
    let n = sym.num_actions();
    let mut payoffs = Vec::with_capacity(n * n);
    for s in 0..n {
        for t in 0..n {
            payoffs.push(PairRecord {
                row: sym.actions()[s].clone(),
                col: sym.actions()[t].clone(),
                u: sym.u(s, t),
            });
        }
    }
    let doc = SymmetricDoc {
        symmetric: true,
        players: None,
        actions: sym.actions().to_vec(),
        payoffs,
    };
    serde_json::to_string_pretty(&doc).expect("symmetric document serializes")
}
