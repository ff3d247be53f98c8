"""Cross-checks the pure-python kernels against the compiled twin.

Every function must agree bit for bit: the engine promises identical
trajectories whichever backend gets imported.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

from platoonflow import _kernels_py as py

cy = pytest.importorskip("platoonflow._kernels_cy")

N = 2000
BOX = dict(v_min=20.0, v_max=35.0, a_min=-4.0, a_max=3.0, delta=5.0,
           eps_g=0.01, gamma=1.0)
DRAG = dict(c0=4e-4, c1=0.6, c2=0.08)


def draw_states(seed, n=N):
    """Engine-reachable follower states: floor-respecting closing speeds."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        v = float(rng.uniform(20.0, 35.0))
        edge = rng.integers(0, 10)
        if edge == 0:
            v = 20.0
        elif edge == 1:
            v = 35.0
        v_hat = float(rng.uniform(-15.0, v - 20.0)) if v > 20.0 \
            else float(rng.uniform(-15.0, 0.0))
        p_hat = float(rng.uniform(-120.0, -0.5))
        pred = float(rng.uniform(-4.0, 3.0))
        deadline = bool(rng.uniform() < 0.4)
        out.append((v, p_hat, v_hat, pred, deadline))
    return out


def same(a, b):
    """Tuple equality where nan positions must pair up."""
    if len(a) != len(b):
        return False
    return all((x != x and y != y) or x == y for x, y in zip(a, b))


def test_module_constants_agree():
    assert cy.SPEED_EDGE_TOL == py.SPEED_EDGE_TOL
    for name in ("ACTIVE_SPEED_FLOOR", "ACTIVE_SPEED_CEILING",
                 "ACTIVE_SAFETY", "ACTIVE_DRAG_FLOW", "ACTIVE_DEADLINE"):
        assert getattr(cy, name) == getattr(py, name)


def test_drag_kernels_agree():
    for v, p_hat, v_hat, _, _ in draw_states(11):
        for wake in (True, False):
            args = (v, p_hat, wake, DRAG["c0"], DRAG["c1"], DRAG["c2"])
            assert cy.drag_force(*args) == py.drag_force(*args)
            assert cy.drag_partials(*args) == py.drag_partials(*args)
            fargs = (v, p_hat, v_hat, wake,
                     DRAG["c0"], DRAG["c1"], DRAG["c2"])
            assert cy.flow_bound(*fargs) == py.flow_bound(*fargs)


def test_envelope_kernels_agree():
    for v, p_hat, v_hat, pred, _ in draw_states(12):
        margs = (v, p_hat, v_hat, BOX["v_min"], BOX["a_min"], BOX["delta"])
        g = py.stopping_margin(*margs)
        assert cy.stopping_margin(*margs) == g
        if v > BOX["v_min"] + py.SPEED_EDGE_TOL and v_hat > 0.0:
            cargs = (v, v_hat, g, pred, BOX["v_min"], BOX["a_min"],
                     BOX["gamma"])
            assert cy.envelope_cap(*cargs) == py.envelope_cap(*cargs)
        sargs = (v, p_hat, v_hat, pred, True,
                 BOX["v_min"], BOX["v_max"], BOX["a_min"], BOX["a_max"],
                 BOX["delta"], BOX["eps_g"], BOX["gamma"])
        assert cy.safe_interval(*sargs) == py.safe_interval(*sargs)


def test_critical_speed_kernels_agree():
    rng = np.random.default_rng(13)
    for _ in range(N):
        v = float(rng.uniform(20.5, 35.0))
        s = v - BOX["v_min"]
        frac = float(rng.uniform(0.01, 0.99))
        p_hat = -BOX["delta"] - frac * s * s / (2.0 * -BOX["a_min"])
        args = (v, p_hat, BOX["v_min"], BOX["a_min"], BOX["delta"])
        assert cy.critical_relative_speed(*args) \
            == py.critical_relative_speed(*args)


def test_decision_kernels_agree():
    for v, p_hat, v_hat, pred, deadline in draw_states(14):
        fargs = (v, p_hat, v_hat, pred, deadline,
                 BOX["v_min"], BOX["v_max"], BOX["a_min"], BOX["a_max"],
                 BOX["delta"], BOX["eps_g"], BOX["gamma"],
                 DRAG["c0"], DRAG["c1"], DRAG["c2"])
        assert same(cy.follower_decision(*fargs),
                    py.follower_decision(*fargs))
        for recovering in (False, True):
            largs = (v, p_hat, v_hat, pred, True, recovering,
                     BOX["v_min"], BOX["v_max"], BOX["a_min"], BOX["a_max"],
                     BOX["delta"], BOX["eps_g"], BOX["gamma"])
            assert same(cy.leader_decision(*largs),
                        py.leader_decision(*largs))
    # front-of-road variant: absolute coordinates, no predecessor
    for v, p_hat, v_hat, _, _ in draw_states(15, n=200):
        for recovering in (False, True):
            largs = (v, abs(p_hat), v, 0.0, False, recovering,
                     BOX["v_min"], BOX["v_max"], BOX["a_min"], BOX["a_max"],
                     BOX["delta"], BOX["eps_g"], BOX["gamma"])
            assert same(cy.leader_decision(*largs),
                        py.leader_decision(*largs))


def _run_digest(backend):
    code = (
        "import hashlib\n"
        "from platoonflow import SimParams, run\n"
        "from platoonflow.cli import trajectory_csv_text\n"
        "text = trajectory_csv_text(run(SimParams(duration=20.0, "
        "seed=3)).trajectory)\n"
        "print(hashlib.sha256(text.encode()).hexdigest())\n"
    )
    env = dict(os.environ, PLATOONFLOW_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_full_runs_are_byte_identical_across_backends():
    assert _run_digest("python") == _run_digest("cython")
