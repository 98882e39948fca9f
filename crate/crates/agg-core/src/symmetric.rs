//! Polynomial-time Jacobian for symmetric games: all agents share one action
//! set and one mixed strategy, so profiles collapse into distribution
//! classes weighted by multinomial coefficients. A Hamiltonian walk over the
//! compositions lets both the class probability and (for linear utilities)
//! the utility value be updated in constant time per step.

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{AggError, Result};
use crate::game::{ActionGraphGame, Distribution, ProjectedView};
use crate::payoff::{linear_utility_shift, JacobianCounters};

/// Recompute the walked probability (and running utilities) directly this
/// often, bounding multiplicative drift on long walks.
const REFRESH_INTERVAL: u64 = 10_000;

/// Probabilities below this are recomputed directly instead of stepped.
const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Size of the equivalence class of pure profiles inducing a distribution:
/// the multinomial coefficient total! / prod(counts!).
pub fn class_size(d: &Distribution) -> BigUint {
    let mut numerator = BigUint::one();
    for i in 2..=u64::from(d.total()) {
        numerator *= i;
    }
    let mut denominator = BigUint::one();
    for &c in d.counts() {
        for i in 2..=u64::from(c) {
            denominator *= i;
        }
    }
    numerator / denominator
}

/// Probability of one representative pure profile of the class `d` when all
/// enumerated agents play the shared projected strategy (0^0 = 1).
pub fn symmetric_profile_prob(sigma_proj: &[f64], d: &Distribution) -> f64 {
    sigma_proj
        .iter()
        .zip(d.counts())
        .map(|(&p, &c)| p.powi(c as i32))
        .product()
}

/// Probability of the whole distribution class: class size times one
/// profile's probability.
pub fn symmetric_distribution_prob(sigma_proj: &[f64], d: &Distribution) -> f64 {
    let class = class_size(d);
    match class.to_f64() {
        Some(c) if c.is_finite() => c * symmetric_profile_prob(sigma_proj, d),
        _ => distribution_prob_log(sigma_proj, d.counts()),
    }
}

/// Log-space evaluation for magnitudes beyond f64 factorials.
fn distribution_prob_log(sigma_proj: &[f64], counts: &[u32]) -> f64 {
    let total: u32 = counts.iter().sum();
    let mut log_p = 0.0;
    for i in 2..=u64::from(total) {
        log_p += (i as f64).ln();
    }
    for (&p, &c) in sigma_proj.iter().zip(counts) {
        if c > 0 {
            if p == 0.0 {
                return 0.0;
            }
            log_p += f64::from(c) * p.ln();
            for i in 2..=u64::from(c) {
                log_p -= (i as f64).ln();
            }
        }
    }
    log_p.exp()
}

/// Constant-time probability update when one agent moves from node `from`
/// to node `to`. `d_before` is the distribution before the move. Returns
/// `None` when `sigma_proj[from]` vanishes; the caller recomputes directly.
pub fn distribution_prob_step(
    prob: f64,
    sigma_proj: &[f64],
    d_before: &Distribution,
    from: usize,
    to: usize,
) -> Option<f64> {
    if sigma_proj[from] == 0.0 || d_before.count(from) == 0 {
        return None;
    }
    Some(
        prob * (sigma_proj[to] * f64::from(d_before.count(from)))
            / (sigma_proj[from] * f64::from(d_before.count(to) + 1)),
    )
}

/// All compositions of `total` into `parts` non-negative integers, first
/// part descending. Independent of the walk; used as its oracle.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in (0..=total).rev() {
            prefix.push(c);
            rec(total - c, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

/// Appends the moves of a unit-move Hamiltonian path over the compositions
/// of `n` on the given part indices, from `n * e_from` to `n * e_to`.
///
/// Recursion: peel `from` one unit at a time; each inner block is itself a
/// corner-to-corner path whose endpoints alternate so that every connecting
/// step is a single-unit move.
fn corner_path_moves(
    n: u32,
    parts: &[usize],
    from: usize,
    to: usize,
    out: &mut Vec<(usize, usize)>,
) {
    debug_assert!(n >= 1 && parts.len() >= 2 && from != to);
    if parts.len() == 2 {
        for _ in 0..n {
            out.push((from, to));
        }
        return;
    }
    let inner: Vec<usize> = parts.iter().copied().filter(|&p| p != from).collect();
    let alt = inner.iter().copied().find(|&p| p != to).expect("k >= 3");
    // end corner of each inner block, t = 1..=n
    let mut ends = vec![0usize; (n + 1) as usize];
    ends[n as usize] = to;
    for t in (1..n as usize).rev() {
        ends[t] = if ends[t + 1] == to { alt } else { to };
    }
    let start = inner
        .iter()
        .copied()
        .find(|&p| p != ends[1])
        .expect("k >= 3");

    // block t = 1: the unit vectors, chained start .. mids .. ends[1]
    out.push((from, start));
    let mut prev = start;
    for &mid in inner.iter().filter(|&&p| p != start && p != ends[1]) {
        out.push((prev, mid));
        prev = mid;
    }
    if n >= 1 && prev != ends[1] {
        out.push((prev, ends[1]));
    }
    // blocks t = 2..=n
    for t in 2..=n {
        out.push((from, ends[(t - 1) as usize]));
        corner_path_moves(t, &inner, ends[(t - 1) as usize], ends[t as usize], out);
    }
}

/// A Hamiltonian walk over the compositions of `total` into `parts` parts
/// where every step moves exactly one unit between two parts. Starts at the
/// all-in-first-part composition and visits each composition exactly once.
#[derive(Debug, Clone)]
pub struct CompositionWalk {
    current: Vec<u32>,
    moves: Vec<(usize, usize)>,
    cursor: usize,
}

impl CompositionWalk {
    pub fn new(total: u32, parts: usize) -> Self {
        assert!(parts >= 1, "need at least one part");
        let mut current = vec![0u32; parts];
        current[0] = total;
        let mut moves = Vec::new();
        if total >= 1 && parts >= 2 {
            let indices: Vec<usize> = (0..parts).collect();
            corner_path_moves(total, &indices, 0, 1, &mut moves);
        }
        CompositionWalk {
            current,
            moves,
            cursor: 0,
        }
    }

    pub fn current(&self) -> &[u32] {
        &self.current
    }

    /// Total number of compositions the walk visits.
    pub fn len(&self) -> usize {
        self.moves.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Advances to the next composition, returning the `(from, to)` unit
    /// move that produced it, or `None` once every composition was visited.
    pub fn next_move(&mut self) -> Option<(usize, usize)> {
        let &(from, to) = self.moves.get(self.cursor)?;
        self.cursor += 1;
        debug_assert!(self.current[from] > 0);
        self.current[from] -= 1;
        self.current[to] += 1;
        Some((from, to))
    }
}

/// Walks all compositions of `total` into `sigma_proj.len()` parts, calling
/// `visit(counts, prob)` with the class probability of each. Probabilities
/// are stepped in constant time and refreshed directly on zero-probability
/// moves, underflow, or every [`REFRESH_INTERVAL`] steps.
pub fn walk_distribution_probs(
    sigma_proj: &[f64],
    total: u32,
    mut visit: impl FnMut(&[u32], f64),
) -> JacobianCounters {
    let mut counters = JacobianCounters::default();
    let mut walk = CompositionWalk::new(total, sigma_proj.len());
    let mut prob = symmetric_distribution_prob(sigma_proj, &Distribution::new(walk.current().to_vec()));
    counters.prob_products += 1;
    visit(walk.current(), prob);
    let mut since_refresh: u64 = 0;
    while let Some((from, to)) = walk.next_move() {
        since_refresh += 1;
        // post-move algebra of the adjacent-distribution update
        let stepped = if sigma_proj[from] > 0.0
            && prob.abs() >= UNDERFLOW_FLOOR
            && since_refresh < REFRESH_INTERVAL
        {
            Some(
                prob * (sigma_proj[to] * f64::from(walk.current()[from] + 1))
                    / (sigma_proj[from] * f64::from(walk.current()[to])),
            )
        } else {
            None
        };
        prob = match stepped {
            Some(p) => {
                counters.prob_swaps += 1;
                p
            }
            None => {
                since_refresh = 0;
                counters.prob_products += 1;
                symmetric_distribution_prob(
                    sigma_proj,
                    &Distribution::new(walk.current().to_vec()),
                )
            }
        };
        visit(walk.current(), prob);
    }
    counters
}

/// The symmetric payoff Jacobian: rows and columns are actions of the shared
/// action list, and each entry equals the pairwise Jacobian entry of any two
/// distinct agents under the shared profile.
#[derive(Debug, Clone)]
pub struct SymmetricJacobian {
    /// Shared ordered action list (global action indices).
    pub actions: Vec<usize>,
    pub matrix: DMatrix<f64>,
    pub sigma_star: Vec<f64>,
    pub counters: JacobianCounters,
    /// Utility evaluations per row, one walk per anchor action.
    pub per_row_utility_evals: Vec<u64>,
}

fn shared_action_list(game: &ActionGraphGame) -> Result<Vec<usize>> {
    if !game.is_symmetric() {
        return Err(AggError::NotSymmetric);
    }
    Ok(game.action_set(0).to_vec())
}

/// Number of projected nodes an agent with the shared action set can
/// actually occupy: the kept nodes, plus the sink when some shared action
/// lies outside the anchor's neighbourhood.
fn reachable_node_count(
    game: &ActionGraphGame,
    view: &ProjectedView,
    shared: &[usize],
) -> usize {
    let _ = game;
    let sink_reachable = shared
        .iter()
        .any(|&a| view.project_action(a) == view.sink());
    view.kept().len() + usize::from(sink_reachable)
}

/// Computes the symmetric Jacobian by one composition walk per anchor
/// action. Utilities are evaluated once per (distribution, column); with
/// linear utilities each evaluation after the first is a constant-time
/// shift, counted the same.
pub fn jacobian_symmetric(
    game: &ActionGraphGame,
    sigma_star: &[f64],
) -> Result<SymmetricJacobian> {
    let actions = shared_action_list(game)?;
    let size = actions.len();
    if sigma_star.len() != size {
        return Err(AggError::DimensionMismatch {
            context: format!(
                "shared strategy has {} entries for {} actions",
                sigma_star.len(),
                size
            ),
        });
    }
    let n = game.num_agents();
    let mut matrix = DMatrix::zeros(size, size);
    let mut counters = JacobianCounters::default();
    let mut per_row = vec![0u64; size];
    if n < 2 {
        return Ok(SymmetricJacobian {
            actions,
            matrix,
            sigma_star: sigma_star.to_vec(),
            counters,
            per_row_utility_evals: per_row,
        });
    }
    let n_bar = (n - 2) as u32;

    for (row, &s) in actions.iter().enumerate() {
        let view = ProjectedView::new(game, s);
        let anchor_node = view.project_action(s);
        let linear = game.utility().is_linear();
        // The sink is a node of the walk only when some shared action lies
        // outside the neighbourhood; otherwise no agent can ever reach it.
        let parts = reachable_node_count(game, &view, &actions);
        let mut sigma_proj = view.project_strategy(&actions, sigma_star);
        sigma_proj.truncate(parts);

        // Per-column state: the full argument distribution (walk counts plus
        // the two pinned actions) and, for linear utilities, a running value.
        let mut col_args: Vec<Distribution> = actions
            .iter()
            .map(|&s_prime| {
                let mut counts = vec![0u32; parts];
                counts[0] += n_bar; // walk starts all-in-first-part
                counts[anchor_node] += 1;
                counts[view.project_action(s_prime)] += 1;
                Distribution::new(counts)
            })
            .collect();
        let mut col_values = vec![0.0f64; size];
        let mut row_evals = 0u64;
        let mut acc = vec![0.0f64; size];

        let mut walk = CompositionWalk::new(n_bar, parts);
        let mut prob = symmetric_distribution_prob(
            &sigma_proj,
            &Distribution::new(walk.current().to_vec()),
        );
        counters.prob_products += 1;
        for (col, arg) in col_args.iter().enumerate() {
            col_values[col] = game.utility_at(&view, arg.counts())?;
            row_evals += 1;
            acc[col] += col_values[col] * prob;
        }
        let mut since_refresh: u64 = 0;
        while let Some((from, to)) = walk.next_move() {
            since_refresh += 1;
            let refresh = since_refresh >= REFRESH_INTERVAL;
            if refresh {
                since_refresh = 0;
            }
            prob = if !refresh && sigma_proj[from] > 0.0 && prob.abs() >= UNDERFLOW_FLOOR {
                counters.prob_swaps += 1;
                prob * (sigma_proj[to] * f64::from(walk.current()[from] + 1))
                    / (sigma_proj[from] * f64::from(walk.current()[to]))
            } else {
                counters.prob_products += 1;
                symmetric_distribution_prob(
                    &sigma_proj,
                    &Distribution::new(walk.current().to_vec()),
                )
            };
            for (col, arg) in col_args.iter_mut().enumerate() {
                if linear && !refresh {
                    col_values[col] =
                        linear_utility_shift(game, &view, col_values[col], arg, from, to)?;
                    arg.remove(from)?;
                    arg.add(to);
                } else {
                    arg.remove(from)?;
                    arg.add(to);
                    col_values[col] = game.utility_at(&view, arg.counts())?;
                }
                row_evals += 1;
                acc[col] += col_values[col] * prob;
            }
        }
        for (col, &value) in acc.iter().enumerate() {
            matrix[(row, col)] = value;
        }
        per_row[row] = row_evals;
        counters.utility_evals += row_evals;
    }

    Ok(SymmetricJacobian {
        actions,
        matrix,
        sigma_star: sigma_star.to_vec(),
        counters,
        per_row_utility_evals: per_row,
    })
}

/// Expected payoff of one agent playing `action` while the other n-1 agents
/// all play `sigma_star`, computed over distribution classes.
pub fn symmetric_expected_payoff(
    game: &ActionGraphGame,
    action: usize,
    sigma_star: &[f64],
) -> Result<f64> {
    let actions = shared_action_list(game)?;
    let view = ProjectedView::new(game, action);
    let anchor_node = view.project_action(action);
    let parts = reachable_node_count(game, &view, &actions);
    let mut sigma_proj = view.project_strategy(&actions, sigma_star);
    sigma_proj.truncate(parts);
    let opponents = (game.num_agents() - 1) as u32;
    let mut total = 0.0;
    let mut err = None;
    walk_distribution_probs(&sigma_proj, opponents, |counts, prob| {
        if err.is_some() || prob == 0.0 {
            return;
        }
        let mut arg = counts.to_vec();
        arg[anchor_node] += 1;
        match game.utility_at(&view, &arg) {
            Ok(u) => total += u * prob,
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// The stacked reduced payoff vector `V_*` over the shared action list.
pub fn symmetric_payoff_vector(game: &ActionGraphGame, sigma_star: &[f64]) -> Result<Vec<f64>> {
    let actions = shared_action_list(game)?;
    actions
        .iter()
        .map(|&s| symmetric_expected_payoff(game, s, sigma_star))
        .collect()
}
