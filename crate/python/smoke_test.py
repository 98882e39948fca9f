#!/usr/bin/env python3
"""Smoke test for the agg_py extension module.

Builds the module if needed (``cargo build -p agg-py --release``), copies the
shared library next to this script as ``agg_py.so``, and exercises the main
surface: game construction, validation, expected payoffs, Jacobian method
agreement, the composition walk, and the continuation solver.
"""

import math
import shutil
import subprocess
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
ROOT = HERE.parent


def ensure_module() -> None:
    target = HERE / "agg_py.so"
    candidates = [
        ROOT / "target" / "release" / "libagg_py.so",
        ROOT / "target" / "debug" / "libagg_py.so",
    ]
    built = [c for c in candidates if c.exists()]
    if not built:
        subprocess.run(
            ["cargo", "build", "-p", "agg-py", "--release"], cwd=ROOT, check=True
        )
        built = [c for c in candidates if c.exists()]
    newest = max(built, key=lambda c: c.stat().st_mtime)
    if not target.exists() or target.stat().st_mtime < newest.stat().st_mtime:
        shutil.copy2(newest, target)


ensure_module()
sys.path.insert(0, str(HERE))
import agg_py  # noqa: E402


def close(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main() -> None:
    # --- construction and validation -------------------------------------
    ice = agg_py.Game.ice_cream(3, 4, chocolate=2)
    assert ice.validate() == [], ice.validate()
    assert ice.num_actions == 8
    assert ice.max_in_degree == 6
    print("ice cream game:", ice)

    pennies = agg_py.Game.normal_form(
        [2, 2], [[1, -1, -1, 1], [-1, 1, 1, -1]]
    )
    assert pennies.validate() == []

    # --- expected payoffs --------------------------------------------------
    uniform = [[0.5, 0.5], [0.5, 0.5]]
    close(pennies.expected_payoff(0, 0, uniform), 0.0, 1e-12)

    # --- Jacobian methods agree ---------------------------------------------
    rng_game = agg_py.Game.random(3, 5, 2, seed=11)
    strategies = [
        [1.0 / len(s)] * len(s) for s in rng_game.action_sets()
    ]
    naive = rng_game.jacobian(strategies, method="naive")
    partitioned = rng_game.jacobian(strategies, method="partitioned")
    for row_a, row_b in zip(naive["rows"], partitioned["rows"]):
        for a, b in zip(row_a, row_b):
            close(a, b, 1e-10)
    assert partitioned["utility_evals"] <= naive["utility_evals"]
    print(
        "jacobian evals: naive",
        naive["utility_evals"],
        "partitioned",
        partitioned["utility_evals"],
    )

    # --- composition walk ----------------------------------------------------
    walk = agg_py.composition_walk(3, 3)
    assert len(walk) == 10
    assert sorted(map(tuple, walk)) == sorted(set(map(tuple, walk)))
    for prev, cur in zip(walk, walk[1:]):
        moved = [c - p for p, c in zip(prev, cur)]
        assert sorted(moved) == [-1, 0, 1]
    print("composition walk over (3, 3):", walk[:4], "...")

    # --- retraction -----------------------------------------------------------
    assert agg_py.simplex_project([0.5, 0.7]) == [0.4, 0.6]
    assert agg_py.simplex_project([1.5, -0.5]) == [1.0, 0.0]

    # --- solving ---------------------------------------------------------------
    solved = pennies.solve()
    for agent in solved["strategies"]:
        for p in agent:
            close(p, 0.5, 1e-4)
    assert solved["regret"] <= 1e-6
    print("pennies equilibrium:", solved["strategies"], "regret", solved["regret"])

    shared_ice = agg_py.Game.ice_cream(4, 2, shared=True)
    assert shared_ice.is_symmetric()
    symmetric = shared_ice.solve(symmetric=True)
    assert symmetric["regret"] <= 1e-6
    report = shared_ice.verify(symmetric["strategies"])
    assert report["pass"], report
    print(
        "shared ice cream symmetric equilibrium:",
        [round(p, 6) for p in symmetric["strategies"][0]],
        "regret",
        symmetric["regret"],
    )

    # profiles that are not equilibria fail verification
    bad = [[1.0, 0.0, 0.0, 0.0] for _ in range(4)]
    report = shared_ice.verify(bad)
    assert not report["pass"] and report["max_regret"] > 0.1

    total = sum(math.isclose(sum(s), 1.0, abs_tol=1e-12) for s in symmetric["strategies"])
    assert total == 4
    print("smoke test passed")


if __name__ == "__main__":
    main()
