//! Expected payoffs and payoff Jacobians.
//!
//! The Jacobian entry for row (i, s_i) and column (i', s_{i'}) is the
//! expected utility of agent i playing s_i while i' is pinned to s_{i'} and
//! everyone else mixes. Three interchangeable methods are provided: `naive`
//! enumerates full pure profiles of the remaining agents, `projected`
//! enumerates profiles in the graph projected onto s_i, and `partitioned`
//! additionally groups projected profiles by the distribution they induce so
//! the utility is evaluated once per distribution.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{AggError, Result};
use crate::game::{ActionGraphGame, Distribution, MixedProfile, ProjectedView};

/// Which enumeration strategy produced a Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMethod {
    Naive,
    Projected,
    Partitioned,
    Symmetric,
    Brute,
}

impl JacobianMethod {
    pub fn name(&self) -> &'static str {
        match self {
            JacobianMethod::Naive => "naive",
            JacobianMethod::Projected => "projected",
            JacobianMethod::Partitioned => "partitioned",
            JacobianMethod::Symmetric => "symmetric",
            JacobianMethod::Brute => "brute",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "naive" => Some(JacobianMethod::Naive),
            "projected" => Some(JacobianMethod::Projected),
            "partitioned" => Some(JacobianMethod::Partitioned),
            "symmetric" => Some(JacobianMethod::Symmetric),
            "brute" => Some(JacobianMethod::Brute),
            _ => None,
        }
    }
}

/// Work counters. `utility_evals` counts utility values produced (a constant
/// -time linear shift counts like a table lookup); `prob_products` counts
/// full probability products and `prob_swaps` counts constant-time swap
/// updates that replaced one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct JacobianCounters {
    pub utility_evals: u64,
    pub prob_products: u64,
    pub prob_swaps: u64,
}

impl JacobianCounters {
    pub fn merge(&mut self, other: &JacobianCounters) {
        self.utility_evals += other.utility_evals;
        self.prob_products += other.prob_products;
        self.prob_swaps += other.prob_swaps;
    }
}

/// Dense payoff Jacobian over the stacked strategy coordinates.
#[derive(Debug, Clone)]
pub struct PayoffJacobian {
    pub m: usize,
    /// `(agent, global action index)` of each row/column.
    pub order: Vec<(usize, usize)>,
    pub matrix: DMatrix<f64>,
    pub method: JacobianMethod,
    pub counters: JacobianCounters,
}

/// Addressing of the stacked strategy vector: agent blocks in order, each
/// block aligned with that agent's action set.
#[derive(Debug, Clone)]
pub struct CoordMap {
    offsets: Vec<usize>,
    order: Vec<(usize, usize)>,
}

impl CoordMap {
    pub fn new(game: &ActionGraphGame) -> Self {
        let mut offsets = Vec::with_capacity(game.num_agents());
        let mut order = Vec::new();
        let mut off = 0;
        for (agent, set) in game.action_sets().iter().enumerate() {
            offsets.push(off);
            for &action in set {
                order.push((agent, action));
            }
            off += set.len();
        }
        CoordMap { offsets, order }
    }

    pub fn m(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[(usize, usize)] {
        &self.order
    }

    pub fn index(&self, agent: usize, local: usize) -> usize {
        self.offsets[agent] + local
    }

    pub fn offset(&self, agent: usize) -> usize {
        self.offsets[agent]
    }
}

/// Options shared by the Jacobian methods.
#[derive(Debug, Clone, Copy)]
pub struct JacobianOptions {
    /// Refuse enumerations larger than this many profiles per entry.
    pub cap: u128,
    /// Number of worker threads for row blocks; 1 means sequential.
    pub threads: usize,
}

pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

impl Default for JacobianOptions {
    fn default() -> Self {
        JacobianOptions {
            cap: DEFAULT_ENUMERATION_CAP,
            threads: 1,
        }
    }
}

/// Expected utility to `agent` for playing `action` while everyone else
/// follows `sigma` (the agent's own row of `sigma` is ignored). Enumerates
/// opponent profiles in the space projected onto `action`.
pub fn expected_payoff(
    game: &ActionGraphGame,
    agent: usize,
    action: usize,
    sigma: &MixedProfile,
) -> Result<f64> {
    expected_payoff_raw(game, agent, action, sigma.strategies())
}

/// As [`expected_payoff`] but on raw per-agent weight vectors. The sum is
/// multilinear in each opponent's weights, so derivative tests may pass
/// unnormalized coordinates.
pub fn expected_payoff_raw(
    game: &ActionGraphGame,
    agent: usize,
    action: usize,
    strategies: &[Vec<f64>],
) -> Result<f64> {
    let view = ProjectedView::new(game, action);
    let opponents: Vec<usize> = (0..game.num_agents()).filter(|&j| j != agent).collect();
    let supports = projected_supports(game, &view, &opponents, strategies);
    let mut base = vec![0u32; view.node_count()];
    base[view.project_action(action)] += 1;
    let mut counters = JacobianCounters::default();
    projected_profile_sum(game, &view, &supports, &mut base, &mut counters)
}

/// Per-opponent projected support: distinct projected nodes with nonzero
/// weight, in node order, plus a dense weight vector for swap lookups.
struct Support {
    choices: Vec<(usize, f64)>,
    dense: Vec<f64>,
}

fn projected_supports(
    game: &ActionGraphGame,
    view: &ProjectedView,
    agents: &[usize],
    strategies: &[Vec<f64>],
) -> Vec<Support> {
    agents
        .iter()
        .map(|&j| {
            let dense = view.project_strategy(game.action_set(j), &strategies[j]);
            let choices = dense
                .iter()
                .enumerate()
                .filter(|(_, &p)| p != 0.0)
                .map(|(node, &p)| (node, p))
                .collect();
            Support { choices, dense }
        })
        .collect()
}

/// Structural enumeration size before probability pruning, used for the cap.
fn projected_profile_space(
    game: &ActionGraphGame,
    view: &ProjectedView,
    agents: &[usize],
) -> u128 {
    agents
        .iter()
        .map(|&j| {
            let mut seen = vec![false; view.node_count()];
            for &a in game.action_set(j) {
                seen[view.project_action(a)] = true;
            }
            seen.iter().filter(|&&b| b).count() as u128
        })
        .product()
}

/// Sum of utility x probability over all projected opponent profiles,
/// starting from `base` counts (which already include any pinned actions).
fn projected_profile_sum(
    game: &ActionGraphGame,
    view: &ProjectedView,
    supports: &[Support],
    base: &mut [u32],
    counters: &mut JacobianCounters,
) -> Result<f64> {
    if supports.iter().any(|s| s.choices.is_empty()) {
        return Ok(0.0);
    }
    let mut digits = vec![0usize; supports.len()];
    for (j, support) in supports.iter().enumerate() {
        base[support.choices[digits[j]].0] += 1;
    }
    let mut total = 0.0;
    loop {
        let mut prob = 1.0;
        for (j, support) in supports.iter().enumerate() {
            prob *= support.choices[digits[j]].1;
        }
        counters.prob_products += 1;
        counters.utility_evals += 1;
        total += game.utility_at(view, base)? * prob;

        // odometer step, maintaining counts incrementally
        let mut advanced = false;
        for j in (0..digits.len()).rev() {
            let support = &supports[j];
            base[support.choices[digits[j]].0] -= 1;
            if digits[j] + 1 < support.choices.len() {
                digits[j] += 1;
                base[support.choices[digits[j]].0] += 1;
                advanced = true;
                break;
            }
            digits[j] = 0;
            base[support.choices[0].0] += 1;
        }
        if !advanced {
            break;
        }
    }
    for (j, support) in supports.iter().enumerate() {
        base[support.choices[digits[j]].0] -= 1;
    }
    Ok(total)
}

/// One constant-time probability update for switching the actions of two
/// agents (Eq.-level detail of the partitioned method). Returns `None` when
/// a denominator vanishes; the caller then falls back to the full product.
pub fn swap_probability(
    prob: f64,
    sigma_j: &[f64],
    sigma_jp: &[f64],
    action_j: usize,
    action_jp: usize,
) -> Option<f64> {
    let denom = sigma_j[action_j] * sigma_jp[action_jp];
    if denom == 0.0 {
        return None;
    }
    Some(prob * (sigma_jp[action_j] * sigma_j[action_jp]) / denom)
}

/// Result of accumulating profile probabilities by induced distribution.
type WeightMap = BTreeMap<Vec<u32>, f64>;

/// Sums profile probabilities into classes keyed by the projected
/// distribution of the enumerated agents (pinned actions excluded).
/// Successive profile probabilities use the swap update whenever the
/// odometer step happens to transpose two agents' choices.
fn distribution_weights(
    supports: &[Support],
    node_count: usize,
    counters: &mut JacobianCounters,
) -> WeightMap {
    let mut weights = WeightMap::new();
    if supports.iter().any(|s| s.choices.is_empty()) {
        return weights;
    }
    let mut digits = vec![0usize; supports.len()];
    let mut counts = vec![0u32; node_count];
    let mut prob = 1.0;
    for (j, support) in supports.iter().enumerate() {
        counts[support.choices[digits[j]].0] += 1;
        prob *= support.choices[digits[j]].1;
    }
    counters.prob_products += 1;
    loop {
        *weights.entry(counts.clone()).or_insert(0.0) += prob;

        let mut pivot = None;
        for j in (0..digits.len()).rev() {
            if digits[j] + 1 < supports[j].choices.len() {
                pivot = Some(j);
                break;
            }
        }
        let Some(pivot) = pivot else { break };
        // Record the changed coordinates: pivot advances, the suffix resets.
        let mut changes: Vec<(usize, usize, usize)> = Vec::new(); // (agent, old node, new node)
        let old = supports[pivot].choices[digits[pivot]].0;
        let new = supports[pivot].choices[digits[pivot] + 1].0;
        changes.push((pivot, old, new));
        for j in pivot + 1..digits.len() {
            let old = supports[j].choices[digits[j]].0;
            let new = supports[j].choices[0].0;
            if old != new {
                changes.push((j, old, new));
            }
        }

        let swapped = if changes.len() == 2 {
            let (ja, oa, na) = changes[0];
            let (jb, ob, nb) = changes[1];
            if na == ob && nb == oa {
                swap_probability(
                    prob,
                    &supports[ja].dense,
                    &supports[jb].dense,
                    oa,
                    ob,
                )
            } else {
                None
            }
        } else {
            None
        };

        digits[pivot] += 1;
        for d in digits.iter_mut().skip(pivot + 1) {
            *d = 0;
        }
        for &(_, old, new) in &changes {
            counts[old] -= 1;
            counts[new] += 1;
        }
        prob = match swapped {
            Some(p) => {
                counters.prob_swaps += 1;
                p
            }
            None => {
                counters.prob_products += 1;
                let mut p = 1.0;
                for (j, support) in supports.iter().enumerate() {
                    p *= support.choices[digits[j]].1;
                }
                p
            }
        };
    }
    weights
}

/// The accumulated per-distribution probabilities for one Jacobian anchor:
/// the class weights over agents other than `i` and `i_prime`, keyed by
/// projected counts (sink last). Exposed for counter assertions.
pub fn partitioned_distribution_weights(
    game: &ActionGraphGame,
    sigma: &MixedProfile,
    i: usize,
    i_prime: usize,
    anchor: usize,
) -> Result<Vec<(Distribution, f64)>> {
    let view = ProjectedView::new(game, anchor);
    let others: Vec<usize> = (0..game.num_agents())
        .filter(|&j| j != i && j != i_prime)
        .collect();
    let supports = projected_supports(game, &view, &others, sigma.strategies());
    let mut counters = JacobianCounters::default();
    let weights = distribution_weights(&supports, view.node_count(), &mut counters);
    Ok(weights
        .into_iter()
        .map(|(counts, w)| (Distribution::new(counts), w))
        .collect())
}

fn row_coords(map: &CoordMap) -> Vec<(usize, usize, usize)> {
    // (row index, agent, global action)
    map.order()
        .iter()
        .enumerate()
        .map(|(r, &(agent, action))| (r, agent, action))
        .collect()
}

struct RowResult {
    row: usize,
    entries: Vec<(usize, f64)>,
    counters: JacobianCounters,
}

fn run_rows<F>(threads: usize, rows: Vec<(usize, usize, usize)>, f: F) -> Result<Vec<RowResult>>
where
    F: Fn(&(usize, usize, usize)) -> Result<RowResult> + Sync,
{
    if threads > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| AggError::InvalidGame(format!("thread pool: {e}")))?;
        pool.install(|| rows.par_iter().map(&f).collect())
    } else {
        rows.iter().map(&f).collect()
    }
}

fn assemble(
    game: &ActionGraphGame,
    map: CoordMap,
    method: JacobianMethod,
    rows: Vec<RowResult>,
    share: bool,
) -> PayoffJacobian {
    let m = map.m();
    let mut matrix = DMatrix::zeros(m, m);
    let mut counters = JacobianCounters::default();
    for row in rows {
        for (col, v) in row.entries {
            matrix[(row.row, col)] = v;
        }
        counters.merge(&row.counters);
    }
    let mut jac = PayoffJacobian {
        m,
        order: map.order().to_vec(),
        matrix,
        method,
        counters,
    };
    if share {
        share_entries(game, &mut jac);
    }
    jac
}

/// Full-profile Jacobian (no projection): per entry, sums utility times
/// probability over every pure profile of the remaining agents. Exponential
/// in the number of agents; refuses beyond `opts.cap`.
pub fn jacobian_naive(
    game: &ActionGraphGame,
    sigma: &MixedProfile,
    opts: &JacobianOptions,
) -> Result<PayoffJacobian> {
    let map = CoordMap::new(game);
    let n = game.num_agents();
    let coords = row_coords(&map);
    let rows = run_rows(opts.threads, coords, |&(row, i, s_i)| {
        let mut entries = Vec::new();
        let mut counters = JacobianCounters::default();
        let mut scratch = Vec::new();
        for i_prime in 0..n {
            if i_prime == i {
                continue;
            }
            let others: Vec<usize> = (0..n).filter(|&j| j != i && j != i_prime).collect();
            let space: u128 = others
                .iter()
                .map(|&j| game.action_set(j).len() as u128)
                .product();
            if space > opts.cap {
                return Err(AggError::EnumerationCapExceeded {
                    size: space,
                    cap: opts.cap,
                });
            }
            let supports: Vec<Vec<(usize, f64)>> = others
                .iter()
                .map(|&j| {
                    game.action_set(j)
                        .iter()
                        .zip(&sigma.strategies()[j])
                        .filter(|(_, &p)| p != 0.0)
                        .map(|(&a, &p)| (a, p))
                        .collect()
                })
                .collect();
            for (local, &s_prime) in game.action_set(i_prime).iter().enumerate() {
                let value = naive_entry(
                    game,
                    s_i,
                    s_prime,
                    &supports,
                    &mut scratch,
                    &mut counters,
                )?;
                entries.push((map.index(i_prime, local), value));
            }
        }
        Ok(RowResult {
            row,
            entries,
            counters,
        })
    })?;
    Ok(assemble(game, map, JacobianMethod::Naive, rows, false))
}

fn naive_entry(
    game: &ActionGraphGame,
    s_i: usize,
    s_prime: usize,
    supports: &[Vec<(usize, f64)>],
    scratch: &mut Vec<u32>,
    counters: &mut JacobianCounters,
) -> Result<f64> {
    if supports.iter().any(|s| s.is_empty()) {
        return Ok(0.0);
    }
    scratch.clear();
    scratch.resize(game.num_actions(), 0);
    scratch[s_i] += 1;
    scratch[s_prime] += 1;
    let mut digits = vec![0usize; supports.len()];
    for (j, support) in supports.iter().enumerate() {
        scratch[support[digits[j]].0] += 1;
    }
    let mut total = 0.0;
    let mut key = Vec::new();
    loop {
        let mut prob = 1.0;
        for (j, support) in supports.iter().enumerate() {
            prob *= support[digits[j]].1;
        }
        counters.prob_products += 1;
        counters.utility_evals += 1;
        total += utility_on_counts(game, s_i, scratch, &mut key)? * prob;

        let mut advanced = false;
        for j in (0..digits.len()).rev() {
            scratch[supports[j][digits[j]].0] -= 1;
            if digits[j] + 1 < supports[j].len() {
                digits[j] += 1;
                scratch[supports[j][digits[j]].0] += 1;
                advanced = true;
                break;
            }
            digits[j] = 0;
            scratch[supports[j][0].0] += 1;
        }
        if !advanced {
            break;
        }
    }
    Ok(total)
}

/// Utility of `s` given full-graph counts, gathering the neighbour key into
/// a reusable buffer.
fn utility_on_counts(
    game: &ActionGraphGame,
    s: usize,
    counts: &[u32],
    key: &mut Vec<u32>,
) -> Result<f64> {
    use crate::game::UtilityFunction;
    match game.utility() {
        UtilityFunction::Table(tables) => {
            key.clear();
            key.extend(game.neighbors_of(s).iter().map(|&a| counts[a]));
            tables[s]
                .get(key.as_slice())
                .copied()
                .ok_or_else(|| AggError::MissingUtilityEntry {
                    action: s,
                    counts: key.clone(),
                })
        }
        UtilityFunction::Linear(coeffs) => {
            let mut total = 0.0;
            for &a in game.neighbors_of(s) {
                if let Some(f) = coeffs[s].get(&a) {
                    total += f.get(counts[a] as usize).copied().ok_or_else(|| {
                        AggError::MissingUtilityEntry {
                            action: s,
                            counts: vec![counts[a]],
                        }
                    })?;
                }
            }
            Ok(total)
        }
    }
}

/// Projected Jacobian: identical numbers to [`jacobian_naive`] but the
/// enumeration runs in the graph projected onto each row's anchor action,
/// and equal out-of-neighbourhood columns are computed once then shared.
pub fn jacobian_projected(
    game: &ActionGraphGame,
    sigma: &MixedProfile,
    opts: &JacobianOptions,
) -> Result<PayoffJacobian> {
    let map = CoordMap::new(game);
    let n = game.num_agents();
    let coords = row_coords(&map);
    let rows = run_rows(opts.threads, coords, |&(row, i, s_i)| {
        let view = ProjectedView::new(game, s_i);
        let mut entries = Vec::new();
        let mut counters = JacobianCounters::default();
        for i_prime in 0..n {
            if i_prime == i {
                continue;
            }
            let others: Vec<usize> = (0..n).filter(|&j| j != i && j != i_prime).collect();
            let space = projected_profile_space(game, &view, &others);
            if space > opts.cap {
                return Err(AggError::EnumerationCapExceeded {
                    size: space,
                    cap: opts.cap,
                });
            }
            let supports = projected_supports(game, &view, &others, sigma.strategies());
            let mut rep_done = false;
            for (local, &s_prime) in game.action_set(i_prime).iter().enumerate() {
                let in_neighbourhood = view.project_action(s_prime) != view.sink();
                if !in_neighbourhood && rep_done {
                    continue; // shared later from the representative column
                }
                let mut base = vec![0u32; view.node_count()];
                base[view.project_action(s_i)] += 1;
                base[view.project_action(s_prime)] += 1;
                let value =
                    projected_profile_sum(game, &view, &supports, &mut base, &mut counters)?;
                entries.push((map.index(i_prime, local), value));
                if !in_neighbourhood {
                    rep_done = true;
                }
            }
        }
        Ok(RowResult {
            row,
            entries,
            counters,
        })
    })?;
    Ok(assemble(game, map, JacobianMethod::Projected, rows, true))
}

/// Partitioned Jacobian: groups projected profiles into distribution
/// classes, accumulates each class's probability over one enumeration pass
/// per opponent, then evaluates the utility once per distribution.
pub fn jacobian_partitioned(
    game: &ActionGraphGame,
    sigma: &MixedProfile,
    opts: &JacobianOptions,
) -> Result<PayoffJacobian> {
    let map = CoordMap::new(game);
    let n = game.num_agents();
    let coords = row_coords(&map);
    let rows = run_rows(opts.threads, coords, |&(row, i, s_i)| {
        let view = ProjectedView::new(game, s_i);
        let mut entries = Vec::new();
        let mut counters = JacobianCounters::default();
        for i_prime in 0..n {
            if i_prime == i {
                continue;
            }
            let others: Vec<usize> = (0..n).filter(|&j| j != i && j != i_prime).collect();
            let space = projected_profile_space(game, &view, &others);
            if space > opts.cap {
                return Err(AggError::EnumerationCapExceeded {
                    size: space,
                    cap: opts.cap,
                });
            }
            let supports = projected_supports(game, &view, &others, sigma.strategies());
            let weights = distribution_weights(&supports, view.node_count(), &mut counters);
            let mut rep_done = false;
            let mut counts = vec![0u32; view.node_count()];
            for (local, &s_prime) in game.action_set(i_prime).iter().enumerate() {
                let in_neighbourhood = view.project_action(s_prime) != view.sink();
                if !in_neighbourhood && rep_done {
                    continue;
                }
                let mut value = 0.0;
                for (class, &w) in &weights {
                    counts.copy_from_slice(class);
                    counts[view.project_action(s_i)] += 1;
                    counts[view.project_action(s_prime)] += 1;
                    counters.utility_evals += 1;
                    value += game.utility_at(&view, &counts)? * w;
                }
                entries.push((map.index(i_prime, local), value));
                if !in_neighbourhood {
                    rep_done = true;
                }
            }
        }
        Ok(RowResult {
            row,
            entries,
            counters,
        })
    })?;
    Ok(assemble(game, map, JacobianMethod::Partitioned, rows, true))
}

/// Copies each row block's representative out-of-neighbourhood value to all
/// equal columns: for s', s'' outside the neighbourhood of the row's anchor,
/// the two entries are identical, so only one representative (the first such
/// column per opponent) need ever be computed.
pub fn share_entries(game: &ActionGraphGame, jac: &mut PayoffJacobian) {
    let map = CoordMap::new(game);
    for (row, &(i, s_i)) in map.order().iter().enumerate() {
        let view = ProjectedView::new(game, s_i);
        for i_prime in 0..game.num_agents() {
            if i_prime == i {
                continue;
            }
            let mut rep: Option<f64> = None;
            for (local, &s_prime) in game.action_set(i_prime).iter().enumerate() {
                if view.project_action(s_prime) != view.sink() {
                    continue;
                }
                let col = map.index(i_prime, local);
                match rep {
                    None => rep = Some(jac.matrix[(row, col)]),
                    Some(v) => jac.matrix[(row, col)] = v,
                }
            }
        }
    }
}

/// Number of distributions of `n_bar` agents over `k` projected nodes:
/// the compositions count C(n_bar + k - 1, k - 1).
pub fn count_projected_distributions(n_bar: u64, k: u64) -> Result<u64> {
    if k == 0 {
        return Err(AggError::InvalidGame("k must be at least 1".into()));
    }
    binomial(n_bar + k - 1, k - 1)
}

pub(crate) fn binomial(n: u64, mut k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result
            .checked_mul((n - i) as u128)
            .ok_or_else(|| AggError::Overflow {
                context: format!("C({n}, {k})"),
            })?;
        result /= (i + 1) as u128;
    }
    u64::try_from(result).map_err(|_| AggError::Overflow {
        context: format!("C({n}, {k})"),
    })
}

/// Constant-time utility update for linear utilities when one agent moves
/// from projected node `from` to projected node `to`. `d_proj` is the
/// distribution before the move; the sink carries no coefficients.
pub fn linear_utility_shift(
    game: &ActionGraphGame,
    view: &ProjectedView,
    u_current: f64,
    d_proj: &Distribution,
    from: usize,
    to: usize,
) -> Result<f64> {
    use crate::game::UtilityFunction;
    let UtilityFunction::Linear(coeffs) = game.utility() else {
        return Err(AggError::NotLinearUtility);
    };
    if d_proj.count(from) == 0 {
        return Err(AggError::MoveFromEmptyNode { node: from });
    }
    if from == to {
        return Ok(u_current);
    }
    let s = view.anchor();
    let term = |node: usize, count: usize| -> Result<f64> {
        if node >= view.kept().len() {
            return Ok(0.0); // sink
        }
        let action = view.kept()[node];
        match coeffs[s].get(&action) {
            Some(f) => f
                .get(count)
                .copied()
                .ok_or_else(|| AggError::MissingUtilityEntry {
                    action: s,
                    counts: vec![count as u32],
                }),
            None => Ok(0.0),
        }
    };
    let c_from = d_proj.count(from) as usize;
    let c_to = d_proj.count(to) as usize;
    Ok(u_current + term(from, c_from - 1)? - term(from, c_from)? + term(to, c_to + 1)?
        - term(to, c_to)?)
}
