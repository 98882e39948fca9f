//! Acceptance suite: every criterion prints one [PASS]/[FAIL] line (visible
//! with `cargo test --test acceptance -- --nocapture`) and asserts at its
//! stated tolerance.

use std::collections::BTreeMap;
use std::time::Instant;

use agg_core::continuation::{make_start, residual_f, BonusSpec, SolveOptions};
use agg_core::encode::{
    coordination_2x2, generate_ice_cream, generate_random, matching_pennies,
    random_mixed_profile, rps_shared, IceCreamParams, RandomGameParams,
};
use agg_core::game::{ActionGraphGame, Distribution, MixedProfile, ProjectedView, UtilityFunction};
use agg_core::oracle::{brute_jacobian, DEFAULT_EXPANSION_CAP};
use agg_core::payoff::{
    count_projected_distributions, expected_payoff_raw, jacobian_naive, jacobian_partitioned,
    jacobian_projected, linear_utility_shift, partitioned_distribution_weights, swap_probability,
    CoordMap, JacobianOptions,
};
use agg_core::symmetric::{
    compositions, jacobian_symmetric, symmetric_distribution_prob, walk_distribution_probs,
    CompositionWalk,
};
use agg_core::{simplex_project, solve};

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pass(line: &str) {
    println!("[PASS] {line}");
}

fn fail(line: &str) -> ! {
    println!("[FAIL] {line}");
    panic!("{line}");
}

fn random_game(seed: u64) -> ActionGraphGame {
    generate_random(&RandomGameParams {
        num_agents: 2 + (seed % 3) as usize,
        num_actions: 3 + (seed % 4) as usize,
        max_degree: (seed % 4) as usize,
        shared: seed % 2 == 0,
        linear: seed % 5 == 0,
        seed,
    })
    .unwrap()
}

/// A shared-action ring game with in-degree exactly 2 everywhere and linear
/// utilities, used for the exact counter assertions.
fn ring_game(num_agents: usize, num_actions: usize) -> ActionGraphGame {
    assert!(num_actions >= 4); // keeps every neighbourhood strictly inside S
    let names: Vec<String> = (0..num_actions).map(|i| format!("r{i}")).collect();
    let action_sets = vec![(0..num_actions).collect::<Vec<_>>(); num_agents];
    let neighbors: Vec<Vec<usize>> = (0..num_actions)
        .map(|s| {
            let mut n = vec![s, (s + 1) % num_actions];
            n.sort_unstable();
            n
        })
        .collect();
    let mut coeffs = vec![BTreeMap::new(); num_actions];
    for (s, per_action) in coeffs.iter_mut().enumerate() {
        for &a in &neighbors[s] {
            let slope = if a == s { -1.0 } else { 0.5 };
            per_action.insert(a, (0..=num_agents).map(|k| slope * k as f64).collect());
        }
    }
    ActionGraphGame::new(
        num_agents,
        names,
        action_sets,
        neighbors,
        UtilityFunction::Linear(coeffs),
    )
}

#[test]
fn criterion_1_jacobian_method_equivalence() {
    let started = Instant::now();
    let opts = JacobianOptions::default();
    let mut max_dev: f64 = 0.0;
    for seed in 0..200u64 {
        let game = random_game(seed);
        for profile_seed in 0..3u64 {
            let sigma = random_mixed_profile(&game, 10_000 + seed * 3 + profile_seed);
            let brute = brute_jacobian(&game, &sigma, DEFAULT_EXPANSION_CAP).unwrap();
            let naive = jacobian_naive(&game, &sigma, &opts).unwrap();
            let projected = jacobian_projected(&game, &sigma, &opts).unwrap();
            let partitioned = jacobian_partitioned(&game, &sigma, &opts).unwrap();
            for r in 0..brute.m {
                for c in 0..brute.m {
                    let reference = brute.matrix[(r, c)];
                    for other in [&naive, &projected, &partitioned] {
                        let dev = (other.matrix[(r, c)] - reference).abs();
                        max_dev = max_dev.max(dev);
                        if dev > 1e-10 {
                            fail(&format!(
                                "criterion 1: {} deviates from brute by {dev:.3e} on game seed {seed}",
                                other.method.name()
                            ));
                        }
                    }
                }
            }
        }
    }
    let elapsed = started.elapsed();
    if elapsed.as_secs() >= 60 {
        fail(&format!(
            "criterion 1: runtime {elapsed:?} exceeds the 60 s budget"
        ));
    }
    pass(&format!(
        "criterion 1: naive/projected/partitioned match brute on 200 games x 3 profiles \
         (max deviation {max_dev:.2e}, {elapsed:?})"
    ));
}

#[test]
fn criterion_2_symmetric_equivalence() {
    let mut max_dev: f64 = 0.0;
    for seed in 0..50u64 {
        let game = generate_random(&RandomGameParams {
            num_agents: 2 + (seed % 3) as usize,
            num_actions: 2 + (seed % 4) as usize,
            max_degree: (seed % 4) as usize,
            shared: true,
            linear: seed % 3 == 0,
            seed: 500 + seed,
        })
        .unwrap();
        let shared = random_mixed_profile(&game, 700 + seed).agent(0).to_vec();
        let profile = MixedProfile::new(&game, vec![shared.clone(); game.num_agents()]).unwrap();
        let sym = jacobian_symmetric(&game, &shared).unwrap();
        let brute = brute_jacobian(&game, &profile, DEFAULT_EXPANSION_CAP).unwrap();
        let map = CoordMap::new(&game);
        let size = game.action_set(0).len();
        for row_local in 0..size {
            for col_local in 0..size {
                let r = map.index(0, row_local);
                let c = map.index(1, col_local);
                let dev = (sym.matrix[(row_local, col_local)] - brute.matrix[(r, c)]).abs();
                max_dev = max_dev.max(dev);
                if dev > 1e-10 {
                    fail(&format!(
                        "criterion 2: symmetric Jacobian deviates by {dev:.3e} on seed {seed}"
                    ));
                }
            }
        }
    }
    pass(&format!(
        "criterion 2: symmetric Jacobian matches the brute (agent 1, agent 2) block \
         on 50 games (max deviation {max_dev:.2e})"
    ));
}

#[test]
fn criterion_3_gradient_check() {
    let h = 1e-5;
    let mut max_rel: f64 = 0.0;
    for seed in 0..20u64 {
        let game = random_game(2_000 + seed);
        let sigma = random_mixed_profile(&game, 3_000 + seed);
        let jac = jacobian_partitioned(&game, &sigma, &JacobianOptions::default()).unwrap();
        let map = CoordMap::new(&game);
        for (r, &(i, s_i)) in map.order().iter().enumerate() {
            for (c, &(ip, _)) in map.order().iter().enumerate() {
                if ip == i {
                    continue;
                }
                let local = c - map.offset(ip);
                let mut up = sigma.strategies().to_vec();
                up[ip][local] += h;
                let mut down = sigma.strategies().to_vec();
                down[ip][local] -= h;
                let fd = (expected_payoff_raw(&game, i, s_i, &up).unwrap()
                    - expected_payoff_raw(&game, i, s_i, &down).unwrap())
                    / (2.0 * h);
                let analytic = jac.matrix[(r, c)];
                let rel = (analytic - fd).abs() / fd.abs().max(analytic.abs()).max(1.0);
                max_rel = max_rel.max(rel);
                if rel > 1e-6 {
                    fail(&format!(
                        "criterion 3: entry ({r},{c}) relative error {rel:.3e} on seed {seed}"
                    ));
                }
            }
        }
    }
    pass(&format!(
        "criterion 3: Jacobian entries match central finite differences on 20 games \
         (max relative error {max_rel:.2e})"
    ));
}

#[test]
fn criterion_4_counter_reproduction() {
    // Exact per-entry counters on a ring game: in-degree 2 everywhere, the
    // sink reachable from every anchor, full-support profiles.
    let n = 5usize;
    let n_bar = (n - 2) as u64;
    let actions = 5usize;
    let game = ring_game(n, actions);
    let sigma = random_mixed_profile(&game, 42);
    let opts = JacobianOptions::default();

    // projected: each enumerated entry costs (reachable projected nodes)^n_bar
    // = (in-degree + 1)^n_bar; entries computed per row block and opponent are
    // the 2 in-neighbourhood columns plus 1 representative.
    let projected = jacobian_projected(&game, &sigma, &opts).unwrap();
    let per_entry = 3u64.pow(n_bar as u32);
    let computed_entries = (n * actions) as u64 * (n as u64 - 1) * 3;
    let expected = computed_entries * per_entry;
    if projected.counters.utility_evals != expected {
        fail(&format!(
            "criterion 4: projected counter {} != {expected}",
            projected.counters.utility_evals
        ));
    }

    // partitioned: one utility evaluation per projected distribution, exactly
    // C(n_bar + k - 1, k - 1) per anchor with k = 3 projected nodes.
    let class_count = count_projected_distributions(n_bar, 3).unwrap();
    for i_prime in 1..n {
        for s in 0..actions {
            let weights = partitioned_distribution_weights(&game, &sigma, 0, i_prime, s).unwrap();
            if weights.len() as u64 != class_count {
                fail(&format!(
                    "criterion 4: partitioned class count {} != {class_count}",
                    weights.len()
                ));
            }
        }
    }
    let partitioned = jacobian_partitioned(&game, &sigma, &opts).unwrap();
    let expected_partitioned = computed_entries * class_count;
    if partitioned.counters.utility_evals != expected_partitioned {
        fail(&format!(
            "criterion 4: partitioned counter {} != {expected_partitioned}",
            partitioned.counters.utility_evals
        ));
    }

    // symmetric: per anchor and column, exactly C(n_bar + k - 1, k - 1).
    let shared = sigma.agent(0).to_vec();
    let sym = jacobian_symmetric(&game, &shared).unwrap();
    for per_row in &sym.per_row_utility_evals {
        if *per_row != actions as u64 * class_count {
            fail(&format!(
                "criterion 4: symmetric per-row counter {per_row} != {}",
                actions as u64 * class_count
            ));
        }
    }

    // polynomial growth at fixed in-degree 2: the symmetric counter is a
    // degree-2 polynomial in n, while the naive per-entry bound 3^(n-2)
    // passes 1e9 by n = 40.
    let counter_for = |agents: usize| -> f64 {
        let game = ring_game(agents, actions);
        let sigma = vec![1.0 / actions as f64; actions];
        jacobian_symmetric(&game, &sigma).unwrap().counters.utility_evals as f64
    };
    let c10 = counter_for(10);
    let c20 = counter_for(20);
    let c40 = counter_for(40);
    let d1 = (c20 / c10).log2();
    let d2 = (c40 / c20).log2();
    if d1 > 2.2 || d2 > 2.2 {
        fail(&format!(
            "criterion 4: growth degrees {d1:.3}/{d2:.3} exceed 2 by more than 10%"
        ));
    }
    let naive_bound_at_40 = 3.0f64.powi(38);
    if naive_bound_at_40 <= 1e9 {
        fail("criterion 4: naive bound did not exceed 1e9 at n = 40");
    }
    pass(&format!(
        "criterion 4: counters exact (projected {expected}, partitioned {expected_partitioned}, \
         symmetric {}/row); growth degree {d1:.2} then {d2:.2} vs naive bound 3^38 = {naive_bound_at_40:.2e}",
        actions as u64 * class_count
    ));
}

#[test]
fn criterion_5_gray_walk() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for total in 0..=8u32 {
        for parts in 1..=6usize {
            let mut walk = CompositionWalk::new(total, parts);
            let mut seen = vec![walk.current().to_vec()];
            let mut prev = walk.current().to_vec();
            while let Some((from, to)) = walk.next_move() {
                let cur = walk.current().to_vec();
                if prev[from] != cur[from] + 1 || prev[to] + 1 != cur[to] {
                    fail(&format!(
                        "criterion 5: non-unit move at total {total}, parts {parts}"
                    ));
                }
                if (0..parts).filter(|&p| prev[p] != cur[p]).count() > 2 {
                    fail("criterion 5: move touched more than two parts");
                }
                seen.push(cur.clone());
                prev = cur;
            }
            let mut sorted = seen.clone();
            sorted.sort();
            sorted.dedup();
            let mut expected = compositions(total, parts);
            expected.sort();
            if sorted.len() != seen.len() || sorted != expected {
                fail(&format!(
                    "criterion 5: walk misses or revisits compositions at ({total}, {parts})"
                ));
            }

            // stepped class probabilities match direct evaluation everywhere,
            // including strategies with a zero entry
            for zero_one in [false, true] {
                let mut raw: Vec<f64> =
                    (0..parts).map(|_| rng.random::<f64>() + 0.02).collect();
                if zero_one && parts > 1 {
                    raw[parts / 2] = 0.0;
                }
                let sum: f64 = raw.iter().sum();
                let sigma: Vec<f64> = raw.into_iter().map(|p| p / sum).collect();
                let mut worst: f64 = 0.0;
                walk_distribution_probs(&sigma, total, |counts, prob| {
                    let direct = symmetric_distribution_prob(
                        &sigma,
                        &Distribution::new(counts.to_vec()),
                    );
                    worst = worst.max((prob - direct).abs());
                });
                if worst > 1e-12 {
                    fail(&format!(
                        "criterion 5: stepped probability off by {worst:.3e} at ({total}, {parts})"
                    ));
                }
            }
        }
    }
    pass("criterion 5: composition walks are Hamiltonian with unit moves and exact stepped probabilities (totals <= 8, parts <= 6)");
}

#[test]
fn criterion_6_solver_correctness() {
    let budget = std::time::Duration::from_secs(30);

    let started = Instant::now();
    let pennies = solve(&matching_pennies(), &SolveOptions::default()).unwrap();
    for agent in 0..2 {
        for p in pennies.profile.agent(agent) {
            if (p - 0.5).abs() > 1e-4 {
                fail(&format!("criterion 6: matching pennies probability {p}"));
            }
        }
    }
    if started.elapsed() > budget {
        fail("criterion 6: matching pennies exceeded 30 s");
    }

    let started = Instant::now();
    let rps = solve(
        &rps_shared(2),
        &SolveOptions {
            symmetric: true,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    for p in rps.profile.agent(0) {
        if (p - 1.0 / 3.0).abs() > 1e-4 {
            fail(&format!("criterion 6: symmetric RPS probability {p}"));
        }
    }
    if started.elapsed() > budget {
        fail("criterion 6: symmetric RPS exceeded 30 s");
    }

    let started = Instant::now();
    let coordination = solve(&coordination_2x2(), &SolveOptions::default()).unwrap();
    let is_pure = coordination
        .profile
        .strategies()
        .iter()
        .all(|s| s.iter().any(|&p| (p - 1.0).abs() < 1e-9));
    if !is_pure || coordination.regret_report.max_regret > 0.0 {
        fail(&format!(
            "criterion 6: coordination returned regret {} (pure: {is_pure})",
            coordination.regret_report.max_regret
        ));
    }
    if started.elapsed() > budget {
        fail("criterion 6: coordination exceeded 30 s");
    }

    let started = Instant::now();
    let ice = generate_ice_cream(&IceCreamParams {
        num_agents: 3,
        locations: 4,
        chocolate: 2,
        shared: false,
        w_c: 1.0,
        w_v: 1.0,
    })
    .unwrap();
    let ice_result = solve(&ice, &SolveOptions::default()).unwrap();
    if ice_result.regret_report.max_regret > 1e-6 {
        fail(&format!(
            "criterion 6: ice cream regret {}",
            ice_result.regret_report.max_regret
        ));
    }
    if started.elapsed() > budget {
        fail("criterion 6: ice cream exceeded 30 s");
    }

    let started = Instant::now();
    let shared_ice = generate_ice_cream(&IceCreamParams {
        num_agents: 4,
        locations: 2,
        chocolate: 2,
        shared: true,
        w_c: 1.0,
        w_v: 1.0,
    })
    .unwrap();
    let shared_result = solve(
        &shared_ice,
        &SolveOptions {
            symmetric: true,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    if shared_result.regret_report.max_regret > 1e-6 {
        fail(&format!(
            "criterion 6: shared ice cream regret {}",
            shared_result.regret_report.max_regret
        ));
    }
    if started.elapsed() > budget {
        fail("criterion 6: shared ice cream exceeded 30 s");
    }

    pass(&format!(
        "criterion 6: pennies mixed, RPS uniform, coordination pure (regret {}), \
         ice cream regrets {:.2e} / {:.2e}",
        coordination.regret_report.max_regret,
        ice_result.regret_report.max_regret,
        shared_result.regret_report.max_regret
    ));
}

#[test]
fn criterion_7_constant_time_updates() {
    // Eq-style linear shift over a 100-step random walk.
    let game = generate_random(&RandomGameParams {
        num_agents: 7,
        num_actions: 6,
        max_degree: 4,
        shared: true,
        linear: true,
        seed: 4242,
    })
    .unwrap();
    let view = ProjectedView::new(&game, 0);
    let k = view.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(4243);
    let mut counts = vec![0u32; k];
    for _ in 0..game.num_agents() {
        counts[rng.random_range(0..k)] += 1;
    }
    let mut dist = Distribution::new(counts);
    let mut running = game.utility_eval(&view, &dist, &[]).unwrap();
    let mut worst_shift: f64 = 0.0;
    for _ in 0..100 {
        let from = loop {
            let c = rng.random_range(0..k);
            if dist.count(c) > 0 {
                break c;
            }
        };
        let to = rng.random_range(0..k);
        running = linear_utility_shift(&game, &view, running, &dist, from, to).unwrap();
        dist.remove(from).unwrap();
        dist.add(to);
        let direct = game.utility_eval(&view, &dist, &[]).unwrap();
        worst_shift = worst_shift.max((running - direct).abs());
    }
    if worst_shift > 1e-12 {
        fail(&format!("criterion 7: linear shift drifted by {worst_shift:.3e}"));
    }

    // Swap update over a 100-step random walk of transpositions.
    let agents = 6usize;
    let arities = [3usize, 4, 3, 5, 4, 3];
    let strategies: Vec<Vec<f64>> = arities
        .iter()
        .map(|&len| {
            let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 0.05).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|p| p / sum).collect()
        })
        .collect();
    let mut profile: Vec<usize> = arities.iter().map(|&len| rng.random_range(0..len)).collect();
    let mut prob: f64 = profile
        .iter()
        .zip(&strategies)
        .map(|(&a, s)| s[a])
        .product();
    let mut worst_swap: f64 = 0.0;
    for _ in 0..100 {
        // pick agents whose current actions are playable by each other
        let (j, jp) = loop {
            let j = rng.random_range(0..agents);
            let jp = rng.random_range(0..agents);
            if j != jp && profile[jp] < arities[j] && profile[j] < arities[jp] {
                break (j, jp);
            }
        };
        prob = swap_probability(prob, &strategies[j], &strategies[jp], profile[j], profile[jp])
            .unwrap();
        profile.swap(j, jp);
        let direct: f64 = profile
            .iter()
            .zip(&strategies)
            .map(|(&a, s)| s[a])
            .product();
        worst_swap = worst_swap.max((prob - direct).abs());
    }
    if worst_swap > 1e-12 {
        fail(&format!("criterion 7: swap update drifted by {worst_swap:.3e}"));
    }
    pass(&format!(
        "criterion 7: 100-step linear-shift and swap walks match direct recomputation \
         (max drift {worst_shift:.2e} / {worst_swap:.2e})"
    ));
}

#[test]
fn criterion_8_retraction_and_homotopy() {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    for _ in 0..300 {
        let len = rng.random_range(2..7);
        let v: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * 4.0 - 1.5).collect();
        let once = simplex_project(&v);
        let twice = simplex_project(&once);
        if once != twice {
            fail("criterion 8: retraction is not bitwise idempotent");
        }
    }

    let mut worst_start: f64 = 0.0;
    for game in [matching_pennies(), coordination_2x2(), rps_shared(3)] {
        let (start, bonus) = make_start(&game, &BonusSpec::Auto, 0).unwrap();
        let res = residual_f(&game, &start.w, 1.0, &bonus).unwrap().amax();
        worst_start = worst_start.max(res);
        if res > 1e-9 {
            fail(&format!("criterion 8: start residual {res:.3e}"));
        }
    }

    // analytic grad F against central finite differences at generic points
    let game = rps_shared(3);
    let (_, bonus) = make_start(&game, &BonusSpec::Auto, 3).unwrap();
    let mut worst_grad: f64 = 0.0;
    let mut checked = 0;
    while checked < 20 {
        let w = DVector::from_fn(9, |_, _| rng.random::<f64>() * 1.4 - 0.2);
        let sigma = agg_core::retract(&w, &[3, 3, 3]);
        if sigma.iter().any(|&p| p > 0.0 && p < 1e-3) {
            continue; // too close to a kink for two-sided differences
        }
        let g = agg_core::continuation::grad_f(
            &game,
            &w,
            &bonus,
            agg_core::JacobianMethod::Partitioned,
        )
        .unwrap();
        let h = 1e-6;
        for c in 0..9 {
            let mut up = w.clone();
            up[c] += h;
            let mut down = w.clone();
            down[c] -= h;
            let fu = residual_f(&game, &up, 0.5, &bonus).unwrap();
            let fd = residual_f(&game, &down, 0.5, &bonus).unwrap();
            for r in 0..9 {
                let fd_val = (fu[r] - fd[r]) / (2.0 * h);
                worst_grad = worst_grad.max((g[(r, c)] - fd_val).abs());
            }
        }
        checked += 1;
    }
    if worst_grad > 1e-5 {
        fail(&format!("criterion 8: grad F deviates by {worst_grad:.3e}"));
    }
    pass(&format!(
        "criterion 8: retraction idempotent; start residuals <= {worst_start:.2e}; \
         grad F matches finite differences within {worst_grad:.2e}"
    ));
}
