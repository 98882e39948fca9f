//! Encoders from other game representations and generators for the example
//! families (normal form, graphical games, ice cream vendors, random games).

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AggError, Result};
use crate::game::{reachable_configs, ActionGraphGame, MixedProfile, UtilityFunction};

/// A normal-form game as payoff tensors, one per agent, flattened in
/// row-major order with the last agent's action varying fastest.
#[derive(Debug, Clone)]
pub struct NormalFormGame {
    pub action_counts: Vec<usize>,
    pub payoffs: Vec<Vec<f64>>,
}

impl NormalFormGame {
    pub fn profile_count(&self) -> usize {
        self.action_counts.iter().product()
    }

    pub fn flat_index(&self, profile: &[usize]) -> usize {
        let mut idx = 0;
        for (i, &a) in profile.iter().enumerate() {
            idx = idx * self.action_counts[i] + a;
        }
        idx
    }
}

/// A graphical game: a directed dependency graph over agents plus one local
/// payoff table per agent, flattened over the agent's family profile
/// (own action first, then in-neighbour agents in ascending order).
#[derive(Debug, Clone)]
pub struct GraphicalGame {
    pub action_counts: Vec<usize>,
    /// `(i, j)` means agent `i`'s action affects agent `j`'s payoff.
    pub edges: Vec<(usize, usize)>,
    pub tables: Vec<Vec<f64>>,
}

impl GraphicalGame {
    /// In-neighbour agents of `j`, ascending, excluding `j` itself.
    pub fn in_neighbours(&self, j: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter(|&&(_, t)| t == j)
            .map(|&(s, _)| s)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn cluster_layout(action_counts: &[usize]) -> (Vec<usize>, Vec<String>) {
    let mut offsets = Vec::with_capacity(action_counts.len());
    let mut names = Vec::new();
    let mut off = 0;
    for (agent, &count) in action_counts.iter().enumerate() {
        offsets.push(off);
        for a in 0..count {
            names.push(format!("p{agent}_a{a}"));
        }
        off += count;
    }
    (offsets, names)
}

/// Encodes an arbitrary normal-form game as an AGG with one node per
/// (agent, action) and edges between every pair of nodes in different
/// clusters, never within a cluster.
pub fn encode_normal_form(nf: &NormalFormGame) -> Result<ActionGraphGame> {
    let n = nf.action_counts.len();
    if nf.payoffs.len() != n {
        return Err(AggError::DimensionMismatch {
            context: format!("{} payoff tensors for {} agents", nf.payoffs.len(), n),
        });
    }
    let profiles = nf.profile_count();
    for (i, tensor) in nf.payoffs.iter().enumerate() {
        if tensor.len() != profiles {
            return Err(AggError::DimensionMismatch {
                context: format!(
                    "agent {i} tensor has {} entries, expected {profiles}",
                    tensor.len()
                ),
            });
        }
    }

    let (offsets, names) = cluster_layout(&nf.action_counts);
    let total_nodes = names.len();
    let action_sets: Vec<Vec<usize>> = (0..n)
        .map(|i| (offsets[i]..offsets[i] + nf.action_counts[i]).collect())
        .collect();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .flat_map(|i| {
            let others: Vec<usize> = (0..total_nodes)
                .filter(|&node| node < offsets[i] || node >= offsets[i] + nf.action_counts[i])
                .collect();
            std::iter::repeat_n(others, nf.action_counts[i])
        })
        .collect();

    let mut tables = vec![BTreeMap::new(); total_nodes];
    for i in 0..n {
        for a in 0..nf.action_counts[i] {
            let node = offsets[i] + a;
            // One table entry per joint choice of the other agents.
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let mut digits = vec![0usize; others.len()];
            loop {
                let mut profile = vec![0usize; n];
                profile[i] = a;
                for (pos, &j) in others.iter().enumerate() {
                    profile[j] = digits[pos];
                }
                let mut key = vec![0u32; neighbors[node].len()];
                for (pos, &nbr) in neighbors[node].iter().enumerate() {
                    let (owner, local) = owner_of(&offsets, &nf.action_counts, nbr);
                    if owner != i && profile[owner] == local {
                        key[pos] = 1;
                    }
                }
                tables[node].insert(key, nf.payoffs[i][nf.flat_index(&profile)]);
                if !advance(&mut digits, |pos| nf.action_counts[others[pos]]) {
                    break;
                }
            }
        }
    }

    Ok(ActionGraphGame::new(
        n,
        names,
        action_sets,
        neighbors,
        UtilityFunction::Table(tables),
    ))
}

fn owner_of(offsets: &[usize], counts: &[usize], node: usize) -> (usize, usize) {
    for (i, &off) in offsets.iter().enumerate() {
        if node < off + counts[i] {
            return (i, node - off);
        }
    }
    unreachable!("node out of range")
}

fn advance(digits: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for pos in (0..digits.len()).rev() {
        digits[pos] += 1;
        if digits[pos] < radix(pos) {
            return true;
        }
        digits[pos] = 0;
    }
    false
}

/// Encodes a graphical game: one cluster of nodes per agent, with edges from
/// cluster `i` into cluster `j` exactly when agent `i` affects agent `j`.
pub fn encode_graphical_game(gg: &GraphicalGame) -> Result<ActionGraphGame> {
    let n = gg.action_counts.len();
    if gg.tables.len() != n {
        return Err(AggError::DimensionMismatch {
            context: format!("{} local tables for {} agents", gg.tables.len(), n),
        });
    }
    for &(s, t) in &gg.edges {
        if s >= n || t >= n || s == t {
            return Err(AggError::InvalidGame(format!(
                "invalid dependency edge ({s}, {t})"
            )));
        }
    }
    let (offsets, names) = cluster_layout(&gg.action_counts);
    let action_sets: Vec<Vec<usize>> = (0..n)
        .map(|i| (offsets[i]..offsets[i] + gg.action_counts[i]).collect())
        .collect();

    let mut neighbors = vec![Vec::new(); names.len()];
    for j in 0..n {
        let family = gg.in_neighbours(j);
        let mut nbrs = Vec::new();
        for &i in &family {
            nbrs.extend(offsets[i]..offsets[i] + gg.action_counts[i]);
        }
        nbrs.sort_unstable();
        for a in 0..gg.action_counts[j] {
            neighbors[offsets[j] + a] = nbrs.clone();
        }
        // Family profile = own action then in-neighbour actions.
        let arity: usize = std::iter::once(gg.action_counts[j])
            .chain(family.iter().map(|&i| gg.action_counts[i]))
            .product();
        if gg.tables[j].len() != arity {
            return Err(AggError::DimensionMismatch {
                context: format!(
                    "agent {j} local table has {} entries, family profile space is {arity}",
                    gg.tables[j].len()
                ),
            });
        }
    }

    let mut tables = vec![BTreeMap::new(); names.len()];
    for j in 0..n {
        let family = gg.in_neighbours(j);
        for a in 0..gg.action_counts[j] {
            let node = offsets[j] + a;
            let mut digits = vec![0usize; family.len()];
            loop {
                let mut key = vec![0u32; neighbors[node].len()];
                let mut flat = a;
                for (pos, &i) in family.iter().enumerate() {
                    flat = flat * gg.action_counts[i] + digits[pos];
                    let chosen = offsets[i] + digits[pos];
                    let kpos = neighbors[node].binary_search(&chosen).expect("neighbour");
                    key[kpos] = 1;
                }
                tables[node].insert(key, gg.tables[j][flat]);
                if !advance(&mut digits, |pos| gg.action_counts[family[pos]]) {
                    break;
                }
            }
        }
    }

    Ok(ActionGraphGame::new(
        n,
        names,
        action_sets,
        neighbors,
        UtilityFunction::Table(tables),
    ))
}

/// Parameters for the ice cream vendor family: `locations` beach spots, two
/// product kinds, windows of adjacent locations, and linear local effects.
#[derive(Debug, Clone)]
pub struct IceCreamParams {
    pub num_agents: usize,
    pub locations: usize,
    /// Number of chocolate vendors; ignored when `shared` is set.
    pub chocolate: usize,
    /// Give every agent all `2 * locations` actions (fully symmetric game).
    pub shared: bool,
    pub w_c: f64,
    pub w_v: f64,
}

/// Builds the ice cream vendor game: chocolate and vanilla nodes per
/// location, neighbourhoods spanning adjacent locations, and utilities that
/// reward nearby vendors of the other kind and penalise vendors of the own
/// kind (excluding oneself). The graph does not depend on `num_agents`.
pub fn generate_ice_cream(p: &IceCreamParams) -> Result<ActionGraphGame> {
    if p.locations == 0 {
        return Err(AggError::InvalidGame("need at least one location".into()));
    }
    if p.num_agents == 0 {
        return Err(AggError::InvalidGame("need at least one agent".into()));
    }
    if !p.shared && p.chocolate > p.num_agents {
        return Err(AggError::InvalidGame(format!(
            "{} chocolate vendors among {} agents",
            p.chocolate, p.num_agents
        )));
    }
    let ell = p.locations;
    let choc = |loc: usize| loc;
    let van = |loc: usize| ell + loc;
    let mut names = Vec::with_capacity(2 * ell);
    for loc in 0..ell {
        names.push(format!("choc{loc}"));
    }
    for loc in 0..ell {
        names.push(format!("van{loc}"));
    }

    let window = |loc: usize| -> Vec<usize> {
        let lo = loc.saturating_sub(1);
        let hi = (loc + 1).min(ell - 1);
        (lo..=hi).collect()
    };
    let mut neighbors = vec![Vec::new(); 2 * ell];
    for loc in 0..ell {
        let mut nbrs: Vec<usize> = window(loc).iter().map(|&l| choc(l)).collect();
        nbrs.extend(window(loc).iter().map(|&l| van(l)));
        nbrs.sort_unstable();
        neighbors[choc(loc)] = nbrs.clone();
        neighbors[van(loc)] = nbrs;
    }

    let n = p.num_agents;
    let mut coeffs = vec![BTreeMap::new(); 2 * ell];
    for loc in 0..ell {
        for &l in &window(loc) {
            // Chocolate node at `loc`: vanilla nearby helps, chocolate hurts,
            // with the vendor itself excluded at its own node.
            let own = choc(loc);
            let f_choc: Vec<f64> = (0..=n)
                .map(|k| {
                    let others = if choc(l) == own { k as f64 - 1.0 } else { k as f64 };
                    -p.w_c * others
                })
                .collect();
            coeffs[own].insert(choc(l), f_choc);
            coeffs[own].insert(van(l), (0..=n).map(|k| p.w_v * k as f64).collect());

            let own = van(loc);
            let f_van: Vec<f64> = (0..=n)
                .map(|k| {
                    let others = if van(l) == own { k as f64 - 1.0 } else { k as f64 };
                    -p.w_v * others
                })
                .collect();
            coeffs[own].insert(van(l), f_van);
            coeffs[own].insert(choc(l), (0..=n).map(|k| p.w_c * k as f64).collect());
        }
    }

    let action_sets: Vec<Vec<usize>> = if p.shared {
        vec![(0..2 * ell).collect(); n]
    } else {
        (0..n)
            .map(|agent| {
                if agent < p.chocolate {
                    (0..ell).collect()
                } else {
                    (ell..2 * ell).collect()
                }
            })
            .collect()
    };

    Ok(ActionGraphGame::new(
        n,
        names,
        action_sets,
        neighbors,
        UtilityFunction::Linear(coeffs),
    ))
}

/// Parameters for seeded random games used by tests and the benchmark
/// command.
#[derive(Debug, Clone)]
pub struct RandomGameParams {
    pub num_agents: usize,
    pub num_actions: usize,
    pub max_degree: usize,
    /// All agents share the full action set; otherwise each gets a random
    /// non-empty subset (with coverage of every action enforced).
    pub shared: bool,
    pub linear: bool,
    pub seed: u64,
}

/// Generates a random AGG that always passes validation: random
/// neighbourhoods of size at most `max_degree` and utilities defined on
/// exactly the reachable count configurations.
pub fn generate_random(p: &RandomGameParams) -> Result<ActionGraphGame> {
    if p.num_agents == 0 || p.num_actions == 0 {
        return Err(AggError::InvalidGame(
            "need at least one agent and one action".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let a = p.num_actions;
    let names: Vec<String> = (0..a).map(|i| format!("s{i}")).collect();

    let mut neighbors = Vec::with_capacity(a);
    for _ in 0..a {
        let degree = rng.random_range(0..=p.max_degree.min(a));
        let mut nbrs = rand::seq::index::sample(&mut rng, a, degree).into_vec();
        nbrs.sort_unstable();
        neighbors.push(nbrs);
    }

    let action_sets: Vec<Vec<usize>> = if p.shared {
        vec![(0..a).collect(); p.num_agents]
    } else {
        let mut sets: Vec<Vec<usize>> = (0..p.num_agents)
            .map(|_| {
                let size = rng.random_range(1..=a);
                let mut set = rand::seq::index::sample(&mut rng, a, size).into_vec();
                set.sort_unstable();
                set
            })
            .collect();
        for action in 0..a {
            if !sets.iter().any(|s| s.contains(&action)) {
                let agent = rng.random_range(0..p.num_agents);
                sets[agent].push(action);
                sets[agent].sort_unstable();
            }
        }
        sets
    };

    let utility = if p.linear {
        let mut coeffs = vec![BTreeMap::new(); a];
        for (s, nbrs) in neighbors.iter().enumerate() {
            for &nbr in nbrs {
                let f: Vec<f64> = (0..=p.num_agents)
                    .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                    .collect();
                coeffs[s].insert(nbr, f);
            }
        }
        UtilityFunction::Linear(coeffs)
    } else {
        let mut tables = vec![BTreeMap::new(); a];
        for s in 0..a {
            for config in reachable_configs(&action_sets, &neighbors, s) {
                tables[s].insert(config, rng.random::<f64>() * 2.0 - 1.0);
            }
        }
        UtilityFunction::Table(tables)
    };

    Ok(ActionGraphGame::new(
        p.num_agents,
        names,
        action_sets,
        neighbors,
        utility,
    ))
}

/// A seeded random full-support mixed profile.
pub fn random_mixed_profile(game: &ActionGraphGame, seed: u64) -> MixedProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strategies = game
        .action_sets()
        .iter()
        .map(|set| {
            let raw: Vec<f64> = (0..set.len()).map(|_| rng.random::<f64>() + 0.05).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / sum).collect()
        })
        .collect();
    MixedProfile::new_unchecked(strategies)
}

/// Rock-paper-scissors with one shared action triple: `u(R, D) = D(S) - D(P)`
/// and cyclically for the others, stored as a table over all three counts.
pub fn rps_shared(num_agents: usize) -> ActionGraphGame {
    let names = vec!["R".to_string(), "P".to_string(), "S".to_string()];
    let action_sets = vec![vec![0, 1, 2]; num_agents];
    let neighbors = vec![vec![0, 1, 2]; 3];
    let mut tables = vec![BTreeMap::new(); 3];
    for s in 0..3 {
        let beats = (s + 2) % 3; // the action s beats
        let beaten_by = (s + 1) % 3;
        for config in reachable_configs(&action_sets, &neighbors, s) {
            let value = config[beats] as f64 - config[beaten_by] as f64;
            tables[s].insert(config, value);
        }
    }
    ActionGraphGame::new(
        num_agents,
        names,
        action_sets,
        neighbors,
        UtilityFunction::Table(tables),
    )
}

/// Two-player matching pennies as a normal-form encoding.
pub fn matching_pennies() -> ActionGraphGame {
    encode_normal_form(&NormalFormGame {
        action_counts: vec![2, 2],
        payoffs: vec![
            vec![1.0, -1.0, -1.0, 1.0],
            vec![-1.0, 1.0, 1.0, -1.0],
        ],
    })
    .expect("static game")
}

/// Two-player pure coordination: both prefer matching actions.
pub fn coordination_2x2() -> ActionGraphGame {
    encode_normal_form(&NormalFormGame {
        action_counts: vec![2, 2],
        payoffs: vec![
            vec![1.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 1.0],
        ],
    })
    .expect("static game")
}

/// An n-agent shared coordination game: each action's payoff is the number
/// of other agents choosing it.
pub fn shared_coordination(num_agents: usize, num_actions: usize) -> ActionGraphGame {
    let names: Vec<String> = (0..num_actions).map(|i| format!("c{i}")).collect();
    let action_sets = vec![(0..num_actions).collect::<Vec<_>>(); num_agents];
    let neighbors: Vec<Vec<usize>> = (0..num_actions).map(|s| vec![s]).collect();
    let mut coeffs = vec![BTreeMap::new(); num_actions];
    for (s, per_action) in coeffs.iter_mut().enumerate() {
        let f: Vec<f64> = (0..=num_agents).map(|k| k as f64 - 1.0).collect();
        per_action.insert(s, f);
    }
    ActionGraphGame::new(
        num_agents,
        names,
        action_sets,
        neighbors,
        UtilityFunction::Linear(coeffs),
    )
}
