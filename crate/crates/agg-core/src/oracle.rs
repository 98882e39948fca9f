//! Brute-force ground truth for small games: normal-form expansion, the
//! literal unprojected Jacobian double sum, and regret-based equilibrium
//! verification. Deliberately unoptimized and enumerated independently of
//! the payoff engine so that agreement between the two is meaningful.

use serde::Serialize;

use crate::error::{AggError, Result};
use crate::game::{ActionGraphGame, Distribution, MixedProfile};
use crate::payoff::{CoordMap, JacobianCounters, JacobianMethod, PayoffJacobian};

pub const DEFAULT_EXPANSION_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct AgentRegret {
    pub best_response: f64,
    pub current: f64,
    pub regret: f64,
}

/// Per-agent best-response gap; the maximum is zero exactly at a Nash
/// equilibrium.
#[derive(Debug, Clone, Serialize)]
pub struct RegretReport {
    pub per_agent: Vec<AgentRegret>,
    pub max_regret: f64,
}

impl RegretReport {
    pub fn passes(&self, eps: f64) -> bool {
        self.max_regret <= eps
    }
}

fn check_cap(space: u128, cap: u128) -> Result<()> {
    if space > cap {
        return Err(AggError::EnumerationCapExceeded { size: space, cap });
    }
    Ok(())
}

/// Expands the AGG into per-agent payoff tensors, flattened row-major with
/// the last agent's local action varying fastest.
pub fn expand_normal_form(game: &ActionGraphGame, cap: u128) -> Result<Vec<Vec<f64>>> {
    let n = game.num_agents();
    let space: u128 = game.action_sets().iter().map(|s| s.len() as u128).product();
    check_cap(space, cap)?;
    let size = space as usize;
    let mut tensors = vec![vec![0.0; size]; n];
    let mut locals = vec![0usize; n];
    let mut flat = 0usize;
    loop {
        let profile: Vec<usize> = locals
            .iter()
            .enumerate()
            .map(|(i, &l)| game.action_set(i)[l])
            .collect();
        let dist = game.distribution_of(&profile)?;
        for (i, tensor) in tensors.iter_mut().enumerate() {
            tensor[flat] = game.utility_from_full(profile[i], &dist)?;
        }
        flat += 1;
        let mut advanced = false;
        for i in (0..n).rev() {
            locals[i] += 1;
            if locals[i] < game.action_set(i).len() {
                advanced = true;
                break;
            }
            locals[i] = 0;
        }
        if !advanced {
            break;
        }
    }
    Ok(tensors)
}

/// The literal Jacobian double sum: for each pinned pair, enumerate every
/// full pure profile of the remaining agents, with no projection and no
/// pruning of zero-probability actions.
pub fn brute_jacobian(
    game: &ActionGraphGame,
    sigma: &MixedProfile,
    cap: u128,
) -> Result<PayoffJacobian> {
    let n = game.num_agents();
    let map = CoordMap::new(game);
    let m = map.m();
    let mut matrix = nalgebra::DMatrix::zeros(m, m);
    let mut counters = JacobianCounters::default();

    for (row, &(i, s_i)) in map.order().iter().enumerate() {
        for i_prime in 0..n {
            if i_prime == i {
                continue;
            }
            let others: Vec<usize> = (0..n).filter(|&j| j != i && j != i_prime).collect();
            let space: u128 = others
                .iter()
                .map(|&j| game.action_set(j).len() as u128)
                .product();
            check_cap(space, cap)?;
            for (local, &s_prime) in game.action_set(i_prime).iter().enumerate() {
                let col = map.index(i_prime, local);
                let mut total = 0.0;
                let mut locals = vec![0usize; others.len()];
                loop {
                    let mut counts = vec![0u32; game.num_actions()];
                    counts[s_i] += 1;
                    counts[s_prime] += 1;
                    let mut prob = 1.0;
                    for (pos, &j) in others.iter().enumerate() {
                        counts[game.action_set(j)[locals[pos]]] += 1;
                        prob *= sigma.agent(j)[locals[pos]];
                    }
                    counters.prob_products += 1;
                    counters.utility_evals += 1;
                    total += game.utility_from_full(s_i, &Distribution::new(counts))? * prob;
                    let mut advanced = false;
                    for pos in (0..locals.len()).rev() {
                        locals[pos] += 1;
                        if locals[pos] < game.action_set(others[pos]).len() {
                            advanced = true;
                            break;
                        }
                        locals[pos] = 0;
                    }
                    if !advanced {
                        break;
                    }
                }
                matrix[(row, col)] = total;
            }
        }
    }

    Ok(PayoffJacobian {
        m,
        order: map.order().to_vec(),
        matrix,
        method: JacobianMethod::Brute,
        counters,
    })
}

/// Regret of each agent against its best response, with expected values
/// computed by full enumeration over opponent profiles.
pub fn verify_nash(game: &ActionGraphGame, sigma: &MixedProfile, cap: u128) -> Result<RegretReport> {
    let n = game.num_agents();
    let mut per_agent = Vec::with_capacity(n);
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let space: u128 = others
            .iter()
            .map(|&j| game.action_set(j).len() as u128)
            .product();
        check_cap(space, cap)?;
        let values: Vec<f64> = game
            .action_set(i)
            .iter()
            .map(|&action| {
                let mut total = 0.0;
                let mut locals = vec![0usize; others.len()];
                loop {
                    let mut counts = vec![0u32; game.num_actions()];
                    counts[action] += 1;
                    let mut prob = 1.0;
                    for (pos, &j) in others.iter().enumerate() {
                        counts[game.action_set(j)[locals[pos]]] += 1;
                        prob *= sigma.agent(j)[locals[pos]];
                    }
                    total += game.utility_from_full(action, &Distribution::new(counts))? * prob;
                    let mut advanced = false;
                    for pos in (0..locals.len()).rev() {
                        locals[pos] += 1;
                        if locals[pos] < game.action_set(others[pos]).len() {
                            advanced = true;
                            break;
                        }
                        locals[pos] = 0;
                    }
                    if !advanced {
                        break;
                    }
                }
                Ok(total)
            })
            .collect::<Result<_>>()?;
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let current: f64 = values
            .iter()
            .zip(sigma.agent(i))
            .map(|(v, p)| v * p)
            .sum();
        per_agent.push(AgentRegret {
            best_response: best,
            current,
            regret: best - current,
        });
    }
    let max_regret = per_agent
        .iter()
        .map(|a| a.regret)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(RegretReport {
        per_agent,
        max_regret,
    })
}
