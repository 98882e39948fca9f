//! The action-graph game data model: actions as graph nodes, agent counts as
//! distributions, and utilities that depend only on counts at a node's
//! in-neighbours.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use crate::error::{AggError, Result};

/// Utility function of an action-graph game.
///
/// Both kinds are indexed by the counts of agents at the in-neighbours of the
/// evaluated action, so context-specific independence holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilityFunction {
    /// Per action: map from the count vector over `neighbors[s]` (in that
    /// order) to a payoff. Missing entries are validation errors, not zeros.
    Table(Vec<BTreeMap<Vec<u32>, f64>>),
    /// Per action `s`: map from neighbour action `a` to an array `f[0..=n]`,
    /// with `u(s, D) = sum over a of f[s][a][D(a)]`.
    Linear(Vec<BTreeMap<usize, Vec<f64>>>),
}

impl UtilityFunction {
    pub fn kind(&self) -> &'static str {
        match self {
            UtilityFunction::Table(_) => "table",
            UtilityFunction::Linear(_) => "linear",
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, UtilityFunction::Linear(_))
    }
}

/// A count of agents per action node.
///
/// The carrier is implicit: either the full action graph or the projected
/// graph of some [`ProjectedView`] (kept nodes first, sink last).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Distribution {
    counts: Vec<u32>,
    total: u32,
}

impl Distribution {
    pub fn new(counts: Vec<u32>) -> Self {
        let total = counts.iter().sum();
        Distribution { counts, total }
    }

    pub fn zeros(len: usize) -> Self {
        Distribution {
            counts: vec![0; len],
            total: 0,
        }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn count(&self, node: usize) -> u32 {
        self.counts[node]
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn add(&mut self, node: usize) {
        self.counts[node] += 1;
        self.total += 1;
    }

    pub fn remove(&mut self, node: usize) -> Result<()> {
        if self.counts[node] == 0 {
            return Err(AggError::MoveFromEmptyNode { node });
        }
        self.counts[node] -= 1;
        self.total -= 1;
        Ok(())
    }
}

/// Projection of the action graph onto one anchor action: the anchor's
/// in-neighbours are kept, every other node collapses into a sink.
#[derive(Debug, Clone)]
pub struct ProjectedView {
    anchor: usize,
    kept: Vec<usize>,
    /// Global action index -> position in `kept`, or `None` for the sink.
    positions: Vec<Option<usize>>,
}

impl ProjectedView {
    pub fn new(game: &ActionGraphGame, anchor: usize) -> Self {
        let kept = game.neighbors[anchor].clone();
        let mut positions = vec![None; game.actions.len()];
        for (pos, &a) in kept.iter().enumerate() {
            positions[a] = Some(pos);
        }
        ProjectedView {
            anchor,
            kept,
            positions,
        }
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    /// Index of the sink node in the projected space.
    pub fn sink(&self) -> usize {
        self.kept.len()
    }

    /// Number of projected nodes including the sink.
    pub fn node_count(&self) -> usize {
        self.kept.len() + 1
    }

    /// Maps a global action to its projected node (kept position or sink).
    pub fn project_action(&self, action: usize) -> usize {
        self.positions[action].unwrap_or(self.kept.len())
    }

    /// Projects a full-graph distribution: kept nodes copy their counts, the
    /// sink receives everything else. Totals are preserved.
    pub fn project_distribution(&self, full: &Distribution) -> Distribution {
        let mut counts = vec![0u32; self.node_count()];
        for (action, &c) in full.counts().iter().enumerate() {
            counts[self.project_action(action)] += c;
        }
        Distribution::new(counts)
    }

    /// Projects one agent's mixed strategy: kept nodes keep their
    /// probability, the sink absorbs the probability of all other actions.
    pub fn project_strategy(&self, action_set: &[usize], sigma: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.node_count()];
        for (local, &action) in action_set.iter().enumerate() {
            out[self.project_action(action)] += sigma[local];
        }
        out
    }
}

/// A mixed-strategy profile: one probability vector per agent, aligned with
/// that agent's action set.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile {
    strategies: Vec<Vec<f64>>,
}

/// Tolerance for per-agent probability sums.
pub const PROFILE_SUM_TOL: f64 = 1e-12;

impl MixedProfile {
    pub fn new(game: &ActionGraphGame, strategies: Vec<Vec<f64>>) -> Result<Self> {
        if strategies.len() != game.num_agents() {
            return Err(AggError::DimensionMismatch {
                context: format!(
                    "profile has {} strategy vectors for {} agents",
                    strategies.len(),
                    game.num_agents()
                ),
            });
        }
        for (i, sigma) in strategies.iter().enumerate() {
            if sigma.len() != game.action_sets[i].len() {
                return Err(AggError::DimensionMismatch {
                    context: format!(
                        "agent {} has {} probabilities for {} actions",
                        i,
                        sigma.len(),
                        game.action_sets[i].len()
                    ),
                });
            }
            if sigma.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(AggError::InvalidGame(format!(
                    "agent {i} has a negative or non-finite probability"
                )));
            }
            let sum: f64 = sigma.iter().sum();
            if (sum - 1.0).abs() > PROFILE_SUM_TOL {
                return Err(AggError::InvalidGame(format!(
                    "agent {i} probabilities sum to {sum}, not 1"
                )));
            }
        }
        Ok(MixedProfile { strategies })
    }

    /// Skips validation. Used by the solver (whose retraction guarantees
    /// validity) and by derivative tests that evaluate the multilinear payoff
    /// form at raw, unnormalized coordinates.
    pub fn new_unchecked(strategies: Vec<Vec<f64>>) -> Self {
        MixedProfile { strategies }
    }

    pub fn uniform(game: &ActionGraphGame) -> Self {
        let strategies = game
            .action_sets
            .iter()
            .map(|set| vec![1.0 / set.len() as f64; set.len()])
            .collect();
        MixedProfile { strategies }
    }

    pub fn strategies(&self) -> &[Vec<f64>] {
        &self.strategies
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.strategies[i]
    }

    pub fn into_strategies(self) -> Vec<Vec<f64>> {
        self.strategies
    }
}

/// A single validation finding.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    IndexOutOfRange {
        context: String,
        index: usize,
        limit: usize,
    },
    DuplicateIndex {
        context: String,
        index: usize,
    },
    EmptyActionSet {
        agent: usize,
    },
    UnreachableAction {
        action: usize,
    },
    DuplicateActionName {
        name: String,
    },
    MissingUtilityEntry {
        action: usize,
        counts: Vec<u32>,
    },
    BadUtilityShape {
        context: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IndexOutOfRange {
                context,
                index,
                limit,
            } => write!(f, "{context}: action index {index} out of range (< {limit})"),
            Violation::DuplicateIndex { context, index } => {
                write!(f, "{context}: duplicate action index {index}")
            }
            Violation::EmptyActionSet { agent } => {
                write!(f, "agent {agent} has an empty action set")
            }
            Violation::UnreachableAction { action } => {
                write!(f, "action {action} appears in no agent's action set")
            }
            Violation::DuplicateActionName { name } => {
                write!(f, "duplicate action identifier {name:?}")
            }
            Violation::MissingUtilityEntry { action, counts } => {
                write!(
                    f,
                    "action {action} lacks a utility entry for reachable neighbour counts {counts:?}"
                )
            }
            Violation::BadUtilityShape { context } => write!(f, "{context}"),
        }
    }
}

/// Result of [`ActionGraphGame::validate`]: empty means the game is well formed.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// An action-graph game: `n` agents, a shared pool of actions, per-agent
/// action sets, an action graph given by per-action in-neighbour lists
/// (self-loops permitted), and a utility function over neighbour counts.
#[derive(Debug, Clone)]
pub struct ActionGraphGame {
    num_agents: usize,
    actions: Vec<String>,
    action_sets: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
    utility: UtilityFunction,
    max_in_degree: usize,
}

impl ActionGraphGame {
    /// Constructs a game without validating it, so that defective inputs can
    /// still be loaded and reported on by [`validate`](Self::validate).
    pub fn new(
        num_agents: usize,
        actions: Vec<String>,
        action_sets: Vec<Vec<usize>>,
        neighbors: Vec<Vec<usize>>,
        utility: UtilityFunction,
    ) -> Self {
        let max_in_degree = neighbors.iter().map(Vec::len).max().unwrap_or(0);
        ActionGraphGame {
            num_agents,
            actions,
            action_sets,
            neighbors,
            utility,
            max_in_degree,
        }
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_sets(&self) -> &[Vec<usize>] {
        &self.action_sets
    }

    pub fn action_set(&self, agent: usize) -> &[usize] {
        &self.action_sets[agent]
    }

    pub fn neighbors(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    pub fn neighbors_of(&self, action: usize) -> &[usize] {
        &self.neighbors[action]
    }

    pub fn utility(&self) -> &UtilityFunction {
        &self.utility
    }

    /// Maximum in-degree of the action graph; the parameter behind every
    /// complexity bound.
    pub fn max_in_degree(&self) -> usize {
        self.max_in_degree
    }

    /// True when all agents share one identical, identically ordered action set.
    pub fn is_symmetric(&self) -> bool {
        self.action_sets
            .windows(2)
            .all(|pair| pair[0] == pair[1])
            && !self.action_sets.is_empty()
    }

    /// Local position of a global action within an agent's action set.
    pub fn local_index(&self, agent: usize, action: usize) -> Option<usize> {
        self.action_sets[agent].iter().position(|&a| a == action)
    }

    /// Counts how many agents chose each action under a pure profile.
    pub fn distribution_of(&self, pure_profile: &[usize]) -> Result<Distribution> {
        if pure_profile.len() != self.num_agents {
            return Err(AggError::DimensionMismatch {
                context: format!(
                    "profile has {} choices for {} agents",
                    pure_profile.len(),
                    self.num_agents
                ),
            });
        }
        let mut dist = Distribution::zeros(self.actions.len());
        for (agent, &action) in pure_profile.iter().enumerate() {
            if !self.action_sets[agent].contains(&action) {
                return Err(AggError::ChoiceOutsideActionSet { agent, action });
            }
            dist.add(action);
        }
        Ok(dist)
    }

    /// Evaluates the utility of `view.anchor()` at a projected distribution,
    /// optionally adding extra actions first (each projected through the
    /// view, so non-neighbours simply bump the sink).
    pub fn utility_eval(
        &self,
        view: &ProjectedView,
        d_proj: &Distribution,
        adjust: &[usize],
    ) -> Result<f64> {
        let mut counts = d_proj.counts().to_vec();
        for &action in adjust {
            counts[view.project_action(action)] += 1;
        }
        self.utility_at(view, &counts)
    }

    /// Core utility lookup on pre-adjusted projected counts (sink last,
    /// ignored by the utility itself).
    pub(crate) fn utility_at(&self, view: &ProjectedView, proj_counts: &[u32]) -> Result<f64> {
        let s = view.anchor();
        let kept = view.kept().len();
        match &self.utility {
            UtilityFunction::Table(tables) => tables[s]
                .get(&proj_counts[..kept])
                .copied()
                .ok_or_else(|| AggError::MissingUtilityEntry {
                    action: s,
                    counts: proj_counts[..kept].to_vec(),
                }),
            UtilityFunction::Linear(coeffs) => {
                let mut total = 0.0;
                for (pos, &a) in view.kept().iter().enumerate() {
                    if let Some(f) = coeffs[s].get(&a) {
                        let c = proj_counts[pos] as usize;
                        let v = *f.get(c).ok_or_else(|| AggError::MissingUtilityEntry {
                            action: s,
                            counts: proj_counts[..kept].to_vec(),
                        })?;
                        total += v;
                    }
                }
                Ok(total)
            }
        }
    }

    /// Utility of `action` under a full-graph distribution. Used by the
    /// brute-force oracle, which never projects.
    pub fn utility_from_full(&self, action: usize, full: &Distribution) -> Result<f64> {
        match &self.utility {
            UtilityFunction::Table(tables) => {
                let key: Vec<u32> = self.neighbors[action]
                    .iter()
                    .map(|&a| full.count(a))
                    .collect();
                tables[action]
                    .get(&key)
                    .copied()
                    .ok_or(AggError::MissingUtilityEntry {
                        action,
                        counts: key,
                    })
            }
            UtilityFunction::Linear(coeffs) => {
                let mut total = 0.0;
                for &a in &self.neighbors[action] {
                    if let Some(f) = coeffs[action].get(&a) {
                        let c = full.count(a) as usize;
                        let v = *f.get(c).ok_or_else(|| AggError::MissingUtilityEntry {
                            action,
                            counts: vec![full.count(a)],
                        })?;
                        total += v;
                    }
                }
                Ok(total)
            }
        }
    }

    /// Min and max utility values over the whole table (or, for linear
    /// utilities, a bound from per-neighbour extrema). Used to size bonuses.
    pub fn utility_bounds(&self) -> (f64, f64) {
        match &self.utility {
            UtilityFunction::Table(tables) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for table in tables {
                    for &v in table.values() {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                if lo > hi {
                    (0.0, 0.0)
                } else {
                    (lo, hi)
                }
            }
            UtilityFunction::Linear(coeffs) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for per_action in coeffs {
                    let mut action_lo = 0.0;
                    let mut action_hi = 0.0;
                    for f in per_action.values() {
                        let fmin = f.iter().copied().fold(f64::INFINITY, f64::min);
                        let fmax = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        action_lo += fmin;
                        action_hi += fmax;
                    }
                    lo = lo.min(action_lo);
                    hi = hi.max(action_hi);
                }
                if lo > hi {
                    (0.0, 0.0)
                } else {
                    (lo, hi)
                }
            }
        }
    }

    /// Checks structural invariants and utility coverage. Findings are the
    /// payload; only well-formed games should reach the engines.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let limit = self.actions.len();

        if self.action_sets.len() != self.num_agents {
            violations.push(Violation::BadUtilityShape {
                context: format!(
                    "{} action sets declared for {} agents",
                    self.action_sets.len(),
                    self.num_agents
                ),
            });
        }
        let mut names = BTreeSet::new();
        for name in &self.actions {
            if !names.insert(name) {
                violations.push(Violation::DuplicateActionName { name: name.clone() });
            }
        }

        let mut structural_ok = true;
        for (agent, set) in self.action_sets.iter().enumerate() {
            if set.is_empty() {
                violations.push(Violation::EmptyActionSet { agent });
                structural_ok = false;
            }
            let mut seen = BTreeSet::new();
            for &a in set {
                if a >= limit {
                    violations.push(Violation::IndexOutOfRange {
                        context: format!("action set of agent {agent}"),
                        index: a,
                        limit,
                    });
                    structural_ok = false;
                } else if !seen.insert(a) {
                    violations.push(Violation::DuplicateIndex {
                        context: format!("action set of agent {agent}"),
                        index: a,
                    });
                }
            }
        }
        if self.neighbors.len() != limit {
            violations.push(Violation::BadUtilityShape {
                context: format!(
                    "{} neighbour lists for {} actions",
                    self.neighbors.len(),
                    limit
                ),
            });
            structural_ok = false;
        }
        for (s, nbrs) in self.neighbors.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &a in nbrs {
                if a >= limit {
                    violations.push(Violation::IndexOutOfRange {
                        context: format!("neighbour list of action {s}"),
                        index: a,
                        limit,
                    });
                    structural_ok = false;
                } else if !seen.insert(a) {
                    violations.push(Violation::DuplicateIndex {
                        context: format!("neighbour list of action {s}"),
                        index: a,
                    });
                }
            }
        }
        for action in 0..limit {
            if !self.action_sets.iter().any(|set| set.contains(&action)) {
                violations.push(Violation::UnreachableAction { action });
            }
        }

        // Utility shape checks.
        match &self.utility {
            UtilityFunction::Table(tables) => {
                if tables.len() != limit {
                    violations.push(Violation::BadUtilityShape {
                        context: format!("table utility covers {} of {} actions", tables.len(), limit),
                    });
                    structural_ok = false;
                } else {
                    for (s, table) in tables.iter().enumerate() {
                        for key in table.keys() {
                            if key.len() != self.neighbors[s].len() {
                                violations.push(Violation::BadUtilityShape {
                                    context: format!(
                                        "action {s}: table key {key:?} has arity {} but |neighbors| = {}",
                                        key.len(),
                                        self.neighbors[s].len()
                                    ),
                                });
                            }
                        }
                    }
                }
            }
            UtilityFunction::Linear(coeffs) => {
                if coeffs.len() != limit {
                    violations.push(Violation::BadUtilityShape {
                        context: format!(
                            "linear utility covers {} of {} actions",
                            coeffs.len(),
                            limit
                        ),
                    });
                    structural_ok = false;
                } else {
                    for (s, per_action) in coeffs.iter().enumerate() {
                        for (&a, f) in per_action {
                            if !self.neighbors[s].contains(&a) {
                                violations.push(Violation::BadUtilityShape {
                                    context: format!(
                                        "action {s}: linear coefficient for non-neighbour action {a}"
                                    ),
                                });
                            }
                            if f.len() != self.num_agents + 1 {
                                violations.push(Violation::BadUtilityShape {
                                    context: format!(
                                        "action {s}, neighbour {a}: coefficient array has length {} (expected n+1 = {})",
                                        f.len(),
                                        self.num_agents + 1
                                    ),
                                });
                            }
                        }
                        for &a in &self.neighbors[s] {
                            if !per_action.contains_key(&a) {
                                violations.push(Violation::BadUtilityShape {
                                    context: format!(
                                        "action {s}: missing linear coefficients for neighbour {a}"
                                    ),
                                });
                            }
                        }
                    }
                }
            }
        }

        // Coverage: every neighbour-count configuration reachable by the
        // declared action sets must have a utility value.
        if structural_ok {
            if let UtilityFunction::Table(tables) = &self.utility {
                for s in 0..limit {
                    for config in
                        reachable_configs(&self.action_sets, &self.neighbors, s)
                    {
                        if !tables[s].contains_key(&config) {
                            violations.push(Violation::MissingUtilityEntry {
                                action: s,
                                counts: config,
                            });
                        }
                    }
                }
            }
        }

        ValidationReport { violations }
    }
}

/// Enumerates every count vector over `neighbors[s]` that some pure profile
/// with at least one agent on `s` can produce. Keys are ordered as
/// `neighbors[s]`; the sink is irrelevant to utility and omitted.
pub(crate) fn reachable_configs(
    action_sets: &[Vec<usize>],
    neighbors: &[Vec<usize>],
    s: usize,
) -> BTreeSet<Vec<u32>> {
    let kept = &neighbors[s];
    let mut pos = BTreeMap::new();
    for (i, &a) in kept.iter().enumerate() {
        pos.insert(a, i);
    }
    // Each agent contributes one projected choice; the sink is dropped.
    let agent_choices: Vec<BTreeSet<Option<usize>>> = action_sets
        .iter()
        .map(|set| set.iter().map(|a| pos.get(a).copied()).collect())
        .collect();

    let mut out = BTreeSet::new();
    // Distinct action sets that contain s, so identical agents fold once.
    let mut acting_signatures: BTreeSet<&[usize]> = BTreeSet::new();
    for (agent, set) in action_sets.iter().enumerate() {
        if !set.contains(&s) || !acting_signatures.insert(set) {
            continue;
        }
        let mut configs: BTreeSet<Vec<u32>> = BTreeSet::new();
        let mut base = vec![0u32; kept.len()];
        if let Some(&p) = pos.get(&s) {
            base[p] += 1;
        }
        configs.insert(base);
        for (other, choices) in agent_choices.iter().enumerate() {
            if other == agent {
                continue;
            }
            let mut next = BTreeSet::new();
            for config in &configs {
                for choice in choices {
                    let mut c = config.clone();
                    if let Some(p) = choice {
                        c[*p] += 1;
                    }
                    next.insert(c);
                }
            }
            configs = next;
        }
        out.extend(configs);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::{generate_ice_cream, IceCreamParams};

    fn three_action_game() -> ActionGraphGame {
        // S = {a, b, c, s}; nu(s) = {a, s}; three agents able to reach everything.
        let actions = vec!["a".into(), "b".into(), "c".into(), "s".into()];
        let action_sets = vec![vec![0, 1, 2, 3]; 3];
        let neighbors = vec![vec![], vec![], vec![], vec![0, 3]];
        let mut tables = vec![BTreeMap::new(); 4];
        for set in
            reachable_configs(&action_sets, &neighbors, 3)
        {
            tables[3].insert(set, 1.0);
        }
        tables[0].insert(vec![], 0.0);
        tables[1].insert(vec![], 0.0);
        tables[2].insert(vec![], 0.0);
        ActionGraphGame::new(3, actions, action_sets, neighbors, UtilityFunction::Table(tables))
    }

    #[test]
    fn distribution_counts_choices() {
        let game = three_action_game();
        let d = game.distribution_of(&[0, 0, 1]).unwrap();
        assert_eq!(d.counts(), &[2, 1, 0, 0]);
        assert_eq!(d.total(), 3);
    }

    #[test]
    fn distribution_all_same_action() {
        let game = three_action_game();
        let d = game.distribution_of(&[3, 3, 3]).unwrap();
        assert_eq!(d.counts(), &[0, 0, 0, 3]);
    }

    #[test]
    fn distribution_rejects_foreign_choice() {
        let actions = vec!["a".into(), "b".into()];
        let action_sets = vec![vec![0], vec![0, 1]];
        let neighbors = vec![vec![], vec![]];
        let tables = vec![
            BTreeMap::from([(vec![], 0.0)]),
            BTreeMap::from([(vec![], 0.0)]),
        ];
        let game = ActionGraphGame::new(
            2,
            actions,
            action_sets,
            neighbors,
            UtilityFunction::Table(tables),
        );
        let err = game.distribution_of(&[1, 0]).unwrap_err();
        assert!(matches!(
            err,
            AggError::ChoiceOutsideActionSet { agent: 0, action: 1 }
        ));
    }

    #[test]
    fn projection_keeps_neighbours_and_sums_rest() {
        let game = three_action_game();
        let view = ProjectedView::new(&game, 3);
        let d = Distribution::new(vec![1, 2, 0, 1]);
        let proj = view.project_distribution(&d);
        // kept order = neighbors[3] = [a, s]; sink last.
        assert_eq!(proj.counts(), &[1, 1, 2]);
        assert_eq!(proj.total(), d.total());
    }

    #[test]
    fn projection_identity_when_all_neighbours() {
        let actions = vec!["x".into(), "y".into()];
        let action_sets = vec![vec![0, 1]];
        let neighbors = vec![vec![0, 1], vec![0, 1]];
        let mut tables = vec![BTreeMap::new(), BTreeMap::new()];
        for s in 0..2 {
            for cfg in reachable_configs(&action_sets, &neighbors, s) {
                tables[s].insert(cfg, 0.0);
            }
        }
        let game = ActionGraphGame::new(
            1,
            actions,
            action_sets,
            neighbors,
            UtilityFunction::Table(tables),
        );
        let view = ProjectedView::new(&game, 0);
        let d = Distribution::new(vec![1, 0]);
        let proj = view.project_distribution(&d);
        assert_eq!(proj.counts(), &[1, 0, 0]);
    }

    #[test]
    fn projection_degenerate_empty_neighbourhood() {
        let game = three_action_game();
        let view = ProjectedView::new(&game, 0);
        let d = Distribution::new(vec![1, 1, 1, 0]);
        let proj = view.project_distribution(&d);
        assert_eq!(proj.counts(), &[3]);
        assert_eq!(proj.total(), 3);
    }

    #[test]
    fn strategy_projection_preserves_kept_probability() {
        let game = three_action_game();
        let view = ProjectedView::new(&game, 3); // kept = [a, s]
        let sigma = vec![0.25, 0.25, 0.25, 0.25];
        let proj = view.project_strategy(&[0, 1, 2, 3], &sigma);
        assert_eq!(proj, vec![0.25, 0.25, 0.5]);
        assert!((proj.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn strategy_projection_all_inside() {
        let game = three_action_game();
        let view = ProjectedView::new(&game, 3);
        let proj = view.project_strategy(&[0, 3], &[0.3, 0.7]);
        assert_eq!(proj, vec![0.3, 0.7, 0.0]);
    }

    #[test]
    fn strategy_projection_none_inside() {
        let game = three_action_game();
        let view = ProjectedView::new(&game, 3);
        let proj = view.project_strategy(&[1, 2], &[0.4, 0.6]);
        assert_eq!(proj, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn utility_eval_rps_fixture() {
        let game = crate::encode::rps_shared(2);
        // kept order = neighbors = [R, P, S].
        let r_view = ProjectedView::new(&game, 0);
        let u = |counts: Vec<u32>| game.utility_at(&r_view, &counts).unwrap();
        assert_eq!(u(vec![1, 0, 1, 0]), 1.0); // rock vs scissors
        assert_eq!(u(vec![2, 0, 0, 0]), 0.0); // rock vs rock
        assert_eq!(u(vec![1, 1, 0, 0]), -1.0); // rock vs paper
    }

    #[test]
    fn utility_eval_linear_sum() {
        let actions = vec!["s".into(), "a".into(), "b".into()];
        let action_sets = vec![vec![0, 1, 2]; 2];
        let neighbors = vec![vec![1, 2], vec![], vec![]];
        let mut coeffs = vec![BTreeMap::new(), BTreeMap::new(), BTreeMap::new()];
        coeffs[0].insert(1, (0..=2).map(|k| k as f64).collect()); // f(k) = k
        coeffs[0].insert(2, (0..=2).map(|k| 2.0 * k as f64).collect()); // f(k) = 2k
        coeffs[1].insert(1, vec![0.0; 3]);
        coeffs[2].insert(2, vec![0.0; 3]);
        // make actions 1, 2 trivially self-referencing so linear shape validates
        let neighbors = {
            let mut n = neighbors;
            n[1] = vec![1];
            n[2] = vec![2];
            n
        };
        let game = ActionGraphGame::new(
            2,
            actions,
            action_sets,
            neighbors,
            UtilityFunction::Linear(coeffs),
        );
        let view = ProjectedView::new(&game, 0);
        let d = Distribution::new(vec![2, 0, 0]); // a: 2, b: 0, sink: 0
        assert_eq!(game.utility_eval(&view, &d, &[]).unwrap(), 2.0);
    }

    #[test]
    fn utility_adjust_routes_non_neighbours_to_sink() {
        let game = three_action_game();
        let view = ProjectedView::new(&game, 3); // kept [a, s]
        let d = Distribution::new(vec![1, 0, 1]); // a:1, s:0, sink:1
        let base = game.utility_eval(&view, &d, &[3]).unwrap();
        // adding non-neighbour action b only bumps the sink
        let adjusted = game.utility_eval(&view, &d, &[3, 1]).unwrap();
        assert_eq!(base, adjusted);
    }

    #[test]
    fn validate_accepts_generated_ice_cream() {
        let game = generate_ice_cream(&IceCreamParams {
            num_agents: 3,
            locations: 4,
            chocolate: 2,
            shared: false,
            w_c: 1.0,
            w_v: 1.0,
        })
        .unwrap();
        assert!(game.validate().is_ok());
    }

    #[test]
    fn validate_reports_missing_table_entry() {
        let mut game = three_action_game();
        // Drop the entry for counts (2, 1): two agents on `a`, the acting
        // agent on `s` itself. That configuration is reachable by 3 agents.
        if let UtilityFunction::Table(tables) = &mut game.utility {
            assert!(tables[3].remove(&vec![2u32, 1u32]).is_some());
        }
        let report = game.validate();
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::MissingUtilityEntry { action: 3, counts } if counts == &vec![2, 1]
        )));
    }

    #[test]
    fn validate_reports_out_of_range_index() {
        let actions = vec!["a".into()];
        let action_sets = vec![vec![1]]; // index == |actions|
        let neighbors = vec![vec![]];
        let tables = vec![BTreeMap::from([(vec![], 0.0)])];
        let game = ActionGraphGame::new(
            1,
            actions,
            action_sets,
            neighbors,
            UtilityFunction::Table(tables),
        );
        let report = game.validate();
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::IndexOutOfRange { index: 1, limit: 1, .. }
        )));
    }

    #[test]
    fn non_neighbour_counts_never_change_utility() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let game = crate::encode::generate_random(&crate::encode::RandomGameParams {
            num_agents: 3,
            num_actions: 5,
            max_degree: 2,
            shared: true,
            linear: false,
            seed: 4,
        })
        .unwrap();
        for _ in 0..50 {
            let profile: Vec<usize> = (0..3)
                .map(|i| {
                    let set = game.action_set(i);
                    set[rng.random_range(0..set.len())]
                })
                .collect();
            let full = game.distribution_of(&profile).unwrap();
            let s = profile[0];
            let u0 = game.utility_from_full(s, &full).unwrap();
            // Move counts among non-neighbours only; the value must not change.
            let non_neighbours: Vec<usize> = (0..game.num_actions())
                .filter(|a| !game.neighbors_of(s).contains(a))
                .collect();
            if non_neighbours.len() < 2 {
                continue;
            }
            let mut perturbed = full.counts().to_vec();
            let from = non_neighbours
                .iter()
                .copied()
                .find(|&a| perturbed[a] > 0);
            if let Some(from) = from {
                let to = non_neighbours[rng.random_range(0..non_neighbours.len())];
                perturbed[from] -= 1;
                perturbed[to] += 1;
                let u1 = game
                    .utility_from_full(s, &Distribution::new(perturbed))
                    .unwrap();
                assert_eq!(u0, u1);
            }
        }
    }
}
