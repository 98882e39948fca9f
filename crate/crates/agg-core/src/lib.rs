//! Action-graph games: a compact game representation where actions are graph
//! nodes and payoffs depend only on how many agents chose each neighbouring
//! action. Provides expected payoffs, payoff Jacobians with projection,
//! partitioning and symmetric dynamic-programming accelerations, a
//! brute-force oracle, and Nash equilibrium computation by a bonus-perturbed
//! continuation method.

pub mod continuation;
pub mod encode;
pub mod error;
pub mod game;
pub mod io;
pub mod oracle;
pub mod payoff;
pub mod symmetric;

pub use continuation::{
    make_start, make_start_symmetric, retract, retract_jacobian, simplex_project, solve,
    trace_path, trace_path_symmetric, Bonus, BonusSpec, PathPoint, SolveOptions, SolveResult,
};
pub use encode::{
    encode_graphical_game, encode_normal_form, generate_ice_cream, generate_random,
    random_mixed_profile, GraphicalGame, IceCreamParams, NormalFormGame, RandomGameParams,
};
pub use error::{AggError, Result};
pub use game::{
    ActionGraphGame, Distribution, MixedProfile, ProjectedView, UtilityFunction,
    ValidationReport, Violation,
};
pub use oracle::{brute_jacobian, expand_normal_form, verify_nash, RegretReport};
pub use payoff::{
    count_projected_distributions, expected_payoff, jacobian_naive, jacobian_partitioned,
    jacobian_projected, linear_utility_shift, share_entries, swap_probability, CoordMap,
    JacobianCounters, JacobianMethod, JacobianOptions, PayoffJacobian,
};
pub use symmetric::{
    class_size, compositions, distribution_prob_step, jacobian_symmetric,
    symmetric_distribution_prob, symmetric_expected_payoff, symmetric_profile_prob,
    CompositionWalk, SymmetricJacobian,
};
