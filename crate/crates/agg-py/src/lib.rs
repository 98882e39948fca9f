//! Python bindings: a `Game` class wrapping the core engine plus a few
//! standalone helpers. Strategies cross the boundary as `list[list[float]]`
//! aligned with the game's action sets.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use agg_core::continuation::{BonusSpec, SolveOptions};
use agg_core::encode::{
    encode_graphical_game, encode_normal_form, generate_ice_cream, generate_random,
    GraphicalGame, IceCreamParams, NormalFormGame, RandomGameParams,
};
use agg_core::game::{ActionGraphGame, MixedProfile};
use agg_core::oracle::{verify_nash, DEFAULT_EXPANSION_CAP};
use agg_core::payoff::{
    expected_payoff, jacobian_naive, jacobian_partitioned, jacobian_projected, JacobianMethod,
    JacobianOptions, PayoffJacobian,
};
use agg_core::symmetric::jacobian_symmetric;
use agg_core::{AggError, CompositionWalk};

fn err(e: AggError) -> PyErr {
    match e {
        AggError::Io(_) | AggError::Json(_) | AggError::UnsupportedVersion(_) => {
            PyValueError::new_err(e.to_string())
        }
        AggError::PathStall { .. } | AggError::StepBudgetExceeded { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_method(name: &str) -> PyResult<JacobianMethod> {
    JacobianMethod::parse(name)
        .filter(|m| !matches!(m, JacobianMethod::Brute))
        .ok_or_else(|| PyValueError::new_err(format!("unknown method {name:?}")))
}

fn jacobian_dict<'py>(py: Python<'py>, jac: &PayoffJacobian) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    dict.set_item("m", jac.m)?;
    dict.set_item("order", jac.order.clone())?;
    let rows: Vec<Vec<f64>> = (0..jac.m)
        .map(|r| (0..jac.m).map(|c| jac.matrix[(r, c)]).collect())
        .collect();
    dict.set_item("rows", rows)?;
    dict.set_item("method", jac.method.name())?;
    dict.set_item("utility_evals", jac.counters.utility_evals)?;
    Ok(dict)
}

/// An action-graph game.
#[pyclass]
struct Game {
    inner: ActionGraphGame,
}

#[pymethods]
impl Game {
    /// Load a version-1 game file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Game {
            inner: agg_core::io::load_game(&path).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Game {
            inner: agg_core::io::game_from_json(text).map_err(err)?,
        })
    }

    /// The ice cream vendor family: chocolate and vanilla nodes per location.
    #[staticmethod]
    #[pyo3(signature = (n, locations, chocolate=0, shared=false, wc=1.0, wv=1.0))]
    fn ice_cream(
        n: usize,
        locations: usize,
        chocolate: usize,
        shared: bool,
        wc: f64,
        wv: f64,
    ) -> PyResult<Self> {
        Ok(Game {
            inner: generate_ice_cream(&IceCreamParams {
                num_agents: n,
                locations,
                chocolate,
                shared,
                w_c: wc,
                w_v: wv,
            })
            .map_err(err)?,
        })
    }

    /// A seeded random game that always validates.
    #[staticmethod]
    #[pyo3(signature = (agents, actions, degree, seed=0, shared=false, linear=false))]
    fn random(
        agents: usize,
        actions: usize,
        degree: usize,
        seed: u64,
        shared: bool,
        linear: bool,
    ) -> PyResult<Self> {
        Ok(Game {
            inner: generate_random(&RandomGameParams {
                num_agents: agents,
                num_actions: actions,
                max_degree: degree,
                shared,
                linear,
                seed,
            })
            .map_err(err)?,
        })
    }

    /// Encode payoff tensors (flattened row-major, last agent fastest).
    #[staticmethod]
    fn normal_form(action_counts: Vec<usize>, payoffs: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Game {
            inner: encode_normal_form(&NormalFormGame {
                action_counts,
                payoffs,
            })
            .map_err(err)?,
        })
    }

    /// Encode a graphical game from per-agent local tables.
    #[staticmethod]
    fn graphical(
        action_counts: Vec<usize>,
        edges: Vec<(usize, usize)>,
        tables: Vec<Vec<f64>>,
    ) -> PyResult<Self> {
        Ok(Game {
            inner: encode_graphical_game(&GraphicalGame {
                action_counts,
                edges,
                tables,
            })
            .map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        agg_core::io::save_game(&self.inner, &path).map_err(err)
    }

    fn to_json(&self) -> String {
        agg_core::io::game_to_json(&self.inner)
    }

    /// Structural findings; an empty list means the game is well formed.
    fn validate(&self) -> Vec<String> {
        self.inner
            .validate()
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    #[getter]
    fn num_agents(&self) -> usize {
        self.inner.num_agents()
    }

    #[getter]
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }

    #[getter]
    fn max_in_degree(&self) -> usize {
        self.inner.max_in_degree()
    }

    fn actions(&self) -> Vec<String> {
        self.inner.actions().to_vec()
    }

    fn action_sets(&self) -> Vec<Vec<usize>> {
        self.inner.action_sets().to_vec()
    }

    fn neighbors(&self) -> Vec<Vec<usize>> {
        self.inner.neighbors().to_vec()
    }

    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }

    /// Expected utility to `agent` of playing `action` (a global action
    /// index) against the mixed strategies of everyone else.
    fn expected_payoff(
        &self,
        agent: usize,
        action: usize,
        strategies: Vec<Vec<f64>>,
    ) -> PyResult<f64> {
        let profile = MixedProfile::new(&self.inner, strategies).map_err(err)?;
        expected_payoff(&self.inner, agent, action, &profile).map_err(err)
    }

    /// The payoff Jacobian at a profile. Returns a dict with keys m, order,
    /// rows, method, and utility_evals.
    #[pyo3(signature = (strategies, method="partitioned"))]
    fn jacobian<'py>(
        &self,
        py: Python<'py>,
        strategies: Vec<Vec<f64>>,
        method: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let method = parse_method(method)?;
        let opts = JacobianOptions::default();
        if method == JacobianMethod::Symmetric {
            let first = strategies
                .first()
                .cloned()
                .ok_or_else(|| PyValueError::new_err("empty strategy list"))?;
            if !strategies.iter().all(|s| *s == first) {
                return Err(PyValueError::new_err(
                    "symmetric method requires identical per-agent strategies",
                ));
            }
            let jac = jacobian_symmetric(&self.inner, &first).map_err(err)?;
            let dict = PyDict::new(py);
            dict.set_item("m", jac.actions.len())?;
            dict.set_item("order", jac.actions.clone())?;
            let size = jac.actions.len();
            let rows: Vec<Vec<f64>> = (0..size)
                .map(|r| (0..size).map(|c| jac.matrix[(r, c)]).collect())
                .collect();
            dict.set_item("rows", rows)?;
            dict.set_item("method", "symmetric")?;
            dict.set_item("utility_evals", jac.counters.utility_evals)?;
            return Ok(dict);
        }
        let profile = MixedProfile::new(&self.inner, strategies).map_err(err)?;
        let jac = match method {
            JacobianMethod::Naive => jacobian_naive(&self.inner, &profile, &opts),
            JacobianMethod::Projected => jacobian_projected(&self.inner, &profile, &opts),
            _ => jacobian_partitioned(&self.inner, &profile, &opts),
        }
        .map_err(err)?;
        jacobian_dict(py, &jac)
    }

    /// Trace the continuation path to a Nash equilibrium. Returns a dict
    /// with strategies, regret, steps, final_lambda, and residual.
    #[pyo3(signature = (symmetric=false, method="partitioned", eps=1e-6, seed=0,
                        max_steps=20_000, bonus=None))]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        symmetric: bool,
        method: &str,
        eps: f64,
        seed: u64,
        max_steps: usize,
        bonus: Option<Vec<usize>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let opts = SolveOptions {
            eps,
            seed,
            max_steps,
            symmetric,
            method: parse_method(method)?,
            bonus: match bonus {
                None => BonusSpec::Auto,
                Some(actions) => BonusSpec::Actions(actions),
            },
            ..SolveOptions::default()
        };
        let result = agg_core::solve(&self.inner, &opts).map_err(err)?;
        let dict = PyDict::new(py);
        dict.set_item("strategies", result.profile.strategies().to_vec())?;
        dict.set_item("regret", result.regret_report.max_regret)?;
        dict.set_item("steps", result.diagnostics.steps)?;
        dict.set_item(
            "final_lambda",
            result.diagnostics.lambda_trace.last().copied().unwrap_or(1.0),
        )?;
        dict.set_item("residual", result.diagnostics.final_residual)?;
        Ok(dict)
    }

    /// Regret report of a profile against its best responses.
    #[pyo3(signature = (strategies, eps=1e-6))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        strategies: Vec<Vec<f64>>,
        eps: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let profile = MixedProfile::new(&self.inner, strategies).map_err(err)?;
        let report = verify_nash(&self.inner, &profile, DEFAULT_EXPANSION_CAP).map_err(err)?;
        let dict = PyDict::new(py);
        let agents = PyList::empty(py);
        for a in &report.per_agent {
            let entry = PyDict::new(py);
            entry.set_item("best_response", a.best_response)?;
            entry.set_item("current", a.current)?;
            entry.set_item("regret", a.regret)?;
            agents.append(entry)?;
        }
        dict.set_item("per_agent", agents)?;
        dict.set_item("max_regret", report.max_regret)?;
        dict.set_item("pass", report.passes(eps))?;
        Ok(dict)
    }

    fn __repr__(&self) -> String {
        format!(
            "Game(agents={}, actions={}, max_in_degree={})",
            self.inner.num_agents(),
            self.inner.num_actions(),
            self.inner.max_in_degree()
        )
    }
}

/// Euclidean projection of a vector onto the probability simplex.
#[pyfunction]
fn simplex_project(v: Vec<f64>) -> Vec<f64> {
    agg_core::simplex_project(&v)
}

/// The unit-move Hamiltonian walk over compositions of `total` into `parts`
/// parts, as the full list of visited compositions.
#[pyfunction]
fn composition_walk(total: u32, parts: usize) -> PyResult<Vec<Vec<u32>>> {
    if parts == 0 {
        return Err(PyValueError::new_err("parts must be at least 1"));
    }
    let mut walk = CompositionWalk::new(total, parts);
    let mut out = vec![walk.current().to_vec()];
    while walk.next_move().is_some() {
        out.push(walk.current().to_vec());
    }
    Ok(out)
}

#[pymodule]
fn agg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Game>()?;
    m.add_function(wrap_pyfunction!(simplex_project, m)?)?;
    m.add_function(wrap_pyfunction!(composition_walk, m)?)?;
    Ok(())
}
