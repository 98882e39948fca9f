//! JSON file formats: games, strategy profiles, Jacobian exports, and regret
//! reports. All maps are keyed by stringified indices and serialized in
//! sorted order so identical inputs produce byte-identical files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AggError, Result};
use crate::game::{ActionGraphGame, MixedProfile, UtilityFunction};
use crate::payoff::PayoffJacobian;

#[derive(Debug, Serialize, Deserialize)]
pub struct TableEntry {
    pub counts: Vec<u32>,
    pub value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UtilityFile {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<BTreeMap<String, Vec<TableEntry>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear: Option<BTreeMap<String, BTreeMap<String, Vec<f64>>>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GameFile {
    pub version: u32,
    pub num_agents: usize,
    pub actions: Vec<String>,
    pub action_sets: Vec<Vec<usize>>,
    pub neighbors: Vec<Vec<usize>>,
    pub utility: UtilityFile,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StrategyFile {
    pub version: u32,
    pub strategies: Vec<Vec<f64>>,
}

/// Jacobian export: `order[r]` names the (agent, action index) pair of row
/// and column `r`. For the symmetric method rows and columns are actions,
/// not (agent, action) pairs, and `note` says so.
#[derive(Debug, Serialize, Deserialize)]
pub struct JacobianFile {
    pub m: usize,
    pub order: Vec<(usize, usize)>,
    pub rows: Vec<Vec<f64>>,
    pub method: String,
    pub utility_evals: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl GameFile {
    pub fn from_game(game: &ActionGraphGame) -> Self {
        let utility = match game.utility() {
            UtilityFunction::Table(tables) => UtilityFile {
                kind: "table".into(),
                table: Some(
                    tables
                        .iter()
                        .enumerate()
                        .map(|(s, table)| {
                            (
                                s.to_string(),
                                table
                                    .iter()
                                    .map(|(counts, &value)| TableEntry {
                                        counts: counts.clone(),
                                        value,
                                    })
                                    .collect(),
                            )
                        })
                        .collect(),
                ),
                linear: None,
            },
            UtilityFunction::Linear(coeffs) => UtilityFile {
                kind: "linear".into(),
                table: None,
                linear: Some(
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(s, per_action)| {
                            (
                                s.to_string(),
                                per_action
                                    .iter()
                                    .map(|(&a, f)| (a.to_string(), f.clone()))
                                    .collect(),
                            )
                        })
                        .collect(),
                ),
            },
        };
        GameFile {
            version: 1,
            num_agents: game.num_agents(),
            actions: game.actions().to_vec(),
            action_sets: game.action_sets().to_vec(),
            neighbors: game.neighbors().to_vec(),
            utility,
        }
    }

    pub fn into_game(self) -> Result<ActionGraphGame> {
        if self.version != 1 {
            return Err(AggError::UnsupportedVersion(self.version));
        }
        let num_actions = self.actions.len();
        let utility = match self.utility.kind.as_str() {
            "table" => {
                let raw = self.utility.table.unwrap_or_default();
                let mut tables = vec![BTreeMap::new(); num_actions];
                for (key, entries) in raw {
                    let s: usize = key
                        .parse()
                        .map_err(|_| AggError::InvalidGame(format!("bad action key {key:?}")))?;
                    if s >= num_actions {
                        return Err(AggError::InvalidGame(format!(
                            "utility action key {s} out of range"
                        )));
                    }
                    for entry in entries {
                        tables[s].insert(entry.counts, entry.value);
                    }
                }
                UtilityFunction::Table(tables)
            }
            "linear" => {
                let raw = self.utility.linear.unwrap_or_default();
                let mut coeffs = vec![BTreeMap::new(); num_actions];
                for (key, per_action) in raw {
                    let s: usize = key
                        .parse()
                        .map_err(|_| AggError::InvalidGame(format!("bad action key {key:?}")))?;
                    if s >= num_actions {
                        return Err(AggError::InvalidGame(format!(
                            "utility action key {s} out of range"
                        )));
                    }
                    for (akey, f) in per_action {
                        let a: usize = akey.parse().map_err(|_| {
                            AggError::InvalidGame(format!("bad neighbour key {akey:?}"))
                        })?;
                        coeffs[s].insert(a, f);
                    }
                }
                UtilityFunction::Linear(coeffs)
            }
            other => {
                return Err(AggError::InvalidGame(format!(
                    "unknown utility kind {other:?}"
                )))
            }
        };
        Ok(ActionGraphGame::new(
            self.num_agents,
            self.actions,
            self.action_sets,
            self.neighbors,
            utility,
        ))
    }
}

pub fn game_to_json(game: &ActionGraphGame) -> String {
    serde_json::to_string_pretty(&GameFile::from_game(game)).expect("serializable")
}

pub fn game_from_json(json: &str) -> Result<ActionGraphGame> {
    let file: GameFile = serde_json::from_str(json)?;
    file.into_game()
}

pub fn save_game(game: &ActionGraphGame, path: &Path) -> Result<()> {
    std::fs::write(path, game_to_json(game) + "\n")?;
    Ok(())
}

pub fn load_game(path: &Path) -> Result<ActionGraphGame> {
    let text = std::fs::read_to_string(path)?;
    game_from_json(&text)
}

pub fn strategies_to_json(profile: &MixedProfile) -> String {
    let file = StrategyFile {
        version: 1,
        strategies: profile.strategies().to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("serializable")
}

pub fn save_strategies(profile: &MixedProfile, path: &Path) -> Result<()> {
    std::fs::write(path, strategies_to_json(profile) + "\n")?;
    Ok(())
}

/// Loads and validates a strategy file against a game.
pub fn load_strategies(path: &Path, game: &ActionGraphGame) -> Result<MixedProfile> {
    let text = std::fs::read_to_string(path)?;
    let file: StrategyFile = serde_json::from_str(&text)?;
    if file.version != 1 {
        return Err(AggError::UnsupportedVersion(file.version));
    }
    MixedProfile::new(game, file.strategies)
}

pub fn jacobian_to_file(j: &PayoffJacobian) -> JacobianFile {
    JacobianFile {
        m: j.m,
        order: j.order.clone(),
        rows: (0..j.m)
            .map(|r| (0..j.m).map(|c| j.matrix[(r, c)]).collect())
            .collect(),
        method: j.method.name().to_string(),
        utility_evals: j.counters.utility_evals,
        note: if j.method.name() == "symmetric" {
            Some("rows/columns are actions, not (agent, action) pairs".into())
        } else {
            None
        },
    }
}
