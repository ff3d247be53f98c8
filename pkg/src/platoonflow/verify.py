"""Acceptance checks shared by the CLI verify command and the test suite.

Each check builds its own scenario against the public engine and
controller surface and reports one pass/fail result with a short
detail line.  Checks that need the seeded open-highway corpus (the
default scenario run over many seeds) share one lazily built corpus so
the expensive runs happen once per process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .analysis import brute_force_follower, records_by_time
from .cli import trajectory_csv_text
from .constraints import safe_accel_interval, stopping_margin
from .controller import solve_follower_control
from .core import SimParams, SimulationError, VehicleMode, VehicleState
from .drag import ExponentialWakeDrag
from .sim import WorldState, insert_vehicle, run, step

N_CORPUS_SEEDS = 50
SPAWN_COUNT_BAND = (120.0, 155.0)
TARGET_INFLOW_PER_HOUR = 3500.0
INFLOW_TOLERANCE = 0.15
N_FEASIBILITY_EPISODES = 10_000
N_PURSUITS = 500
N_ORACLE_STATES = 10_000
EQUILIBRIUM_STEPS = 1000
N_DESCENT_SEEDS = 5
COMMAND_CEILING = 1e-12


@dataclass(frozen=True, slots=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


class RunCorpus:
    """Seeded default-scenario runs, built once and shared across checks."""

    def __init__(self, params: SimParams):
        self.params = params
        self.results = {}
        self.errors = {}
        self._built = False

    def build(self) -> None:
        if self._built:
            return
        for seed in range(N_CORPUS_SEEDS):
            try:
                self.results[seed] = run(replace(self.params, seed=seed))
            except SimulationError as exc:
                self.errors[seed] = str(exc)
        self._built = True

    def first_error(self) -> str | None:
        if not self.errors:
            return None
        seed = min(self.errors)
        return f"seed {seed}: {self.errors[seed]}"


def check_safety(params: SimParams, corpus: RunCorpus) -> CheckResult:
    """No recorded bumper gap may breach the envelope band plus one
    step of drift at top speed, across the whole seeded corpus."""
    corpus.build()
    name = "safety_50_seeds"
    err = corpus.first_error()
    if err is not None:
        return CheckResult(name, False, f"engine audit tripped, {err}")
    allowed = params.eps_g + params.v_max * params.dt
    worst = -math.inf
    bad = 0
    for res in corpus.results.values():
        for recs in records_by_time(res.trajectory).values():
            for front, back in zip(recs, recs[1:]):
                excess = (back.p - front.p) + params.delta
                if excess > worst:
                    worst = excess
                if excess > allowed:
                    bad += 1
    detail = (f"{bad} gap violations in {N_CORPUS_SEEDS} runs, worst "
              f"gap excess {worst:.4f} m, allowed {allowed:.4f} m")
    return CheckResult(name, bad == 0, detail)


def check_throughput(params: SimParams, corpus: RunCorpus) -> CheckResult:
    """Mean admitted-vehicle count over the corpus must sit in the
    reproduction band, with implied hourly inflow near the target."""
    corpus.build()
    name = "throughput_band"
    err = corpus.first_error()
    if err is not None:
        return CheckResult(name, False, f"corpus incomplete, {err}")
    counts = [res.metrics["spawned"] for res in corpus.results.values()]
    mean = sum(counts) / len(counts)
    inflow = mean / params.duration * 3600.0
    lo, hi = SPAWN_COUNT_BAND
    ok = (lo <= mean <= hi
          and abs(inflow - TARGET_INFLOW_PER_HOUR)
          <= INFLOW_TOLERANCE * TARGET_INFLOW_PER_HOUR)
    detail = (f"mean spawned {mean:.1f} in [{lo:g}, {hi:g}], implied "
              f"inflow {inflow:.0f} per hour vs {TARGET_INFLOW_PER_HOUR:.0f}")
    return CheckResult(name, ok, detail)


def check_recursive_feasibility(params: SimParams) -> CheckResult:
    """From any feasible state, a full-braking predecessor episode keeps
    the safe interval non-empty with a bounded per-step margin change."""
    name = "recursive_feasibility"
    rng = np.random.default_rng(90003)
    dt = params.dt
    allowed_jump = 2.0 * params.a_max * dt + 1e-9
    worst_jump = 0.0
    for episode in range(N_FEASIBILITY_EPISODES):
        # The margin is conserved along the worst-case flow only for a
        # follower at least as fast as its predecessor; slower followers
        # fall under the plain gap surrogate instead.
        a_draw = float(rng.uniform(params.v_min, params.v_max))
        b_draw = float(rng.uniform(params.v_min, params.v_max))
        v = max(a_draw, b_draw)
        v_pred = min(a_draw, b_draw)
        v_hat = v - v_pred
        kin = (v_hat * (params.v_min - v) / params.a_min
               + v_hat * v_hat / (2.0 * params.a_min))
        p_hat = -params.delta - max(kin, 0.0) - float(rng.uniform(0.5, 50.0))
        floored = 0
        for _ in range(80):
            pred_cmd = params.a_min if v_pred > params.v_min else 0.0
            interval = safe_accel_interval(v, p_hat, v_hat, pred_cmd, True,
                                           params)
            if interval.empty:
                return CheckResult(name, False, (
                    f"episode {episode}: empty safe interval at v={v:.3f}, "
                    f"p_hat={p_hat:.3f}, v_hat={v_hat:.3f}"
                ))
            g_pre = stopping_margin(v, p_hat, v_hat, params)
            p_hat += v_hat * dt + 0.5 * (params.a_min - pred_cmd) * dt * dt
            v = max(params.v_min, v + params.a_min * dt)
            v_pred = max(params.v_min, v_pred + pred_cmd * dt)
            v_hat = v - v_pred
            jump = abs(stopping_margin(v, p_hat, v_hat, params) - g_pre)
            if jump > worst_jump:
                worst_jump = jump
            if jump > allowed_jump:
                return CheckResult(name, False, (
                    f"episode {episode}: margin jumped {jump:.4f} m in one "
                    f"step, allowed {allowed_jump:.4f} m"
                ))
            if v <= params.v_min and v_pred <= params.v_min:
                floored += 1
                if floored >= 3:
                    break
    detail = (f"{N_FEASIBILITY_EPISODES} braking episodes, interval never "
              f"empty, worst margin step {worst_jump:.4f} m of "
              f"{allowed_jump:.4f} m allowed")
    return CheckResult(name, True, detail)


def check_braking_only(params: SimParams, corpus: RunCorpus) -> CheckResult:
    """Only a head recovering its deadline may ever accelerate."""
    corpus.build()
    name = "braking_only_commands"
    err = corpus.first_error()
    if err is not None:
        return CheckResult(name, False, f"corpus incomplete, {err}")
    worst = -math.inf
    total = 0
    for res in corpus.results.values():
        for rec in res.trajectory:
            total += 1
            if rec.mode != VehicleMode.LEADER_RECOVERING.value:
                if rec.accel > worst:
                    worst = rec.accel
    ok = worst <= COMMAND_CEILING
    detail = (f"max non-recovering command {worst:.3e} over {total} records, "
              f"allowed {COMMAND_CEILING:.0e}")
    return CheckResult(name, ok, detail)


def check_pursuit_convergence(params: SimParams) -> CheckResult:
    """A faster follower behind a cruising-down head always settles to
    the target gap and speed without overshooting into falling back."""
    name = "pursuit_convergence"
    rng = np.random.default_rng(90005)
    p5 = replace(params, duration=75.0)
    n_steps = round(p5.duration / p5.dt)
    undershoot_floor = -(params.eps_platoon_speed + 1e-9)
    slowest = 0.0
    for scenario in range(N_PURSUITS):
        v_f = float(rng.uniform(params.v_min + 2.0, params.v_max))
        v_p = float(rng.uniform(params.v_min, v_f - 0.5))
        v_hat = v_f - v_p
        kin = (v_hat * (params.v_min - v_f) / params.a_min
               + v_hat * v_hat / (2.0 * params.a_min))
        gap = params.delta + max(kin, 0.0) + float(rng.uniform(1.0, 40.0))
        world = WorldState.initial(p5, spawning=False)
        exit_pos = params.road.length
        insert_vehicle(world, 160.0, v_p, exit_pos=exit_pos,
                       deadline=10.0 * (exit_pos - 160.0) / v_p)
        insert_vehicle(world, 160.0 - gap, v_f, exit_pos=exit_pos,
                       deadline=10.0 * (exit_pos - 160.0 + gap) / v_f)
        formed_at = None
        for _ in range(n_steps):
            step(world, p5)
            if len(world.vehicles) != 2:
                return CheckResult(name, False, (
                    f"scenario {scenario}: vehicle count changed at "
                    f"t={world.t:.1f}"
                ))
            front, back = world.vehicles
            v_rel = back.v - front.v
            if v_rel < undershoot_floor:
                return CheckResult(name, False, (
                    f"scenario {scenario}: fell back at {v_rel:.4f} m/s "
                    f"(t={world.t:.1f})"
                ))
            if (abs(v_rel) <= params.eps_platoon_speed
                    and abs((back.p - front.p) + params.delta)
                    <= params.eps_platoon_gap):
                formed_at = world.t
                break
        if formed_at is None:
            return CheckResult(name, False, (
                f"scenario {scenario}: no formation within "
                f"{p5.duration:g} s (v_f={v_f:.2f}, v_p={v_p:.2f}, "
                f"gap={gap:.1f})"
            ))
        if formed_at > slowest:
            slowest = formed_at
    detail = (f"{N_PURSUITS} pursuits formed, slowest in {slowest:.1f} s, "
              f"no fallback beyond {-undershoot_floor:.2f} m/s")
    return CheckResult(name, True, detail)


def check_equilibrium_hold(params: SimParams) -> CheckResult:
    """A formed pair at the floor speed and target gap is an exact fixed
    point: no commands, no speed drift, no gap drift."""
    name = "equilibrium_hold"
    p6 = replace(params, duration=EQUILIBRIUM_STEPS * params.dt)
    world = WorldState.initial(p6, spawning=False)
    insert_vehicle(world, 100.0, params.v_min, exit_pos=1e9, deadline=1e9)
    insert_vehicle(world, 100.0 - params.delta, params.v_min,
                   exit_pos=1e9, deadline=1e9)
    result = run(p6, world=world)
    worst_a = max(abs(r.accel) for r in result.trajectory)
    worst_v = max(abs(r.v - params.v_min) for r in result.trajectory)
    worst_gap = 0.0
    for recs in records_by_time(result.trajectory).values():
        drift = abs((recs[1].p - recs[0].p) + params.delta)
        if drift > worst_gap:
            worst_gap = drift
    ok = worst_a <= 1e-9 and worst_v <= 1e-6 and worst_gap <= 1e-6
    detail = (f"{EQUILIBRIUM_STEPS} steps: max command {worst_a:.1e} "
              f"(allow 1e-09), speed drift {worst_v:.1e} and gap drift "
              f"{worst_gap:.1e} (allow 1e-06)")
    return CheckResult(name, ok, detail)


def check_solver_oracle(params: SimParams) -> CheckResult:
    """The closed-form follower solve must match a dense grid search in
    both the command and the infeasibility classification."""
    name = "solver_matches_grid_oracle"
    rng = np.random.default_rng(90007)
    tol = (params.a_max - params.a_min) / 1e4 + 1e-12
    law = ExponentialWakeDrag(params.drag)
    probe = VehicleState(vid=0, p=0.0, v=0.0, accel=0.0, spawn_time=0.0,
                         deadline=0.0, exit_pos=0.0,
                         mode=VehicleMode.FOLLOWER, platoon_id=0)
    worst = 0.0
    for i in range(N_ORACLE_STATES):
        pick = rng.random()
        if pick < 0.15:
            v = params.v_min
        elif pick < 0.30:
            v = params.v_max
        else:
            v = float(rng.uniform(params.v_min, params.v_max))
        v_pred = float(rng.uniform(params.v_min, params.v_max))
        v_hat = v - v_pred
        pred_accel = float(rng.uniform(params.a_min, params.a_max))
        deadline_active = bool(rng.random() < 0.4)
        kin = 0.0
        if v_hat > 0.0:
            kin = (v_hat * (params.v_min - v) / params.a_min
                   + v_hat * v_hat / (2.0 * params.a_min))
        p_hat = float(rng.uniform(-40.0, 2.0)) - params.delta - kin
        probe.v = v
        dec = solve_follower_control(probe, p_hat, v_hat, pred_accel,
                                     deadline_active, params, law)
        ref = brute_force_follower(v, p_hat, v_hat, pred_accel,
                                   deadline_active, params, law)
        if dec.verdict is not ref.verdict:
            return CheckResult(name, False, (
                f"state {i}: verdict {dec.verdict.name} vs grid "
                f"{ref.verdict.name} at v={v:.3f}, p_hat={p_hat:.3f}, "
                f"v_hat={v_hat:.3f}, pred_accel={pred_accel:.3f}, "
                f"deadline={deadline_active}"
            ))
        if ref.accel is not None:
            diff = abs(dec.accel - ref.accel)
            if diff > worst:
                worst = diff
            if diff > tol:
                return CheckResult(name, False, (
                    f"state {i}: command {dec.accel:.6f} vs grid "
                    f"{ref.accel:.6f} (diff {diff:.2e}, allowed {tol:.2e})"
                ))
    detail = (f"{N_ORACLE_STATES} states, verdicts identical, worst "
              f"command gap {worst:.2e} of {tol:.2e} allowed")
    return CheckResult(name, True, detail)


def check_drag_descent(params: SimParams) -> CheckResult:
    """With deadlines off, each follower's squared drag force never grows
    across one step beyond the second-order discretisation slack."""
    name = "drag_descent_per_step"
    c = 8.0 * params.a_max * params.drag.c0 ** 2 * params.v_max ** 3
    allowed = c * params.dt * params.dt + 1e-12
    worst = -math.inf
    pairs = 0
    for offset in range(N_DESCENT_SEEDS):
        p8 = replace(params, seed=7000 + offset, enforce_deadlines=False)
        res = run(p8)
        snaps = list(records_by_time(res.trajectory).values())
        for prev, cur in zip(snaps, snaps[1:]):
            prev_rec = {rec.vehicle_id: rec for rec in prev}
            prev_ahead = {rec.vehicle_id: (prev[j - 1].vehicle_id if j else None)
                          for j, rec in enumerate(prev)}
            for j, rec in enumerate(cur):
                if rec.mode != VehicleMode.FOLLOWER.value or j == 0:
                    continue
                before = prev_rec.get(rec.vehicle_id)
                if before is None:
                    continue
                if prev_ahead.get(rec.vehicle_id) != cur[j - 1].vehicle_id:
                    continue
                rise = rec.drag ** 2 - before.drag ** 2
                pairs += 1
                if rise > worst:
                    worst = rise
                if rise > allowed:
                    return CheckResult(name, False, (
                        f"seed {7000 + offset}: F^2 rose {rise:.3e} in one "
                        f"step for vehicle {rec.vehicle_id} at "
                        f"t={rec.time:.1f} (allowed {allowed:.3e})"
                    ))
    detail = (f"{pairs} follower step pairs over {N_DESCENT_SEEDS} "
              f"deadline-free runs, worst F^2 rise {worst:.3e} of "
              f"{allowed:.3e} allowed")
    return CheckResult(name, True, detail)


def check_determinism(params: SimParams) -> CheckResult:
    """Identical config and seed must reproduce the trajectory CSV byte
    for byte."""
    name = "determinism_bytes"
    first = trajectory_csv_text(run(params).trajectory).encode()
    second = trajectory_csv_text(run(params).trajectory).encode()
    ok = first == second
    state = "identical" if ok else "differ"
    return CheckResult(name, ok,
                       f"two seeded runs, {len(first)} CSV bytes {state}")


def check_partials(params: SimParams) -> CheckResult:
    """Analytic drag partials must match central finite differences."""
    name = "partials_match_finite_difference"
    law = ExponentialWakeDrag(params.drag)
    h = 1e-5
    rel_tol = 1e-6
    worst = 0.0
    for v in np.linspace(params.v_min, params.v_max, 50):
        v = float(v)
        for p_hat in np.linspace(-40.0, -1.0, 50):
            p_hat = float(p_hat)
            f_v, f_p = law.partials(v, p_hat, True)
            fd_v = (law.force(v + h, p_hat, True)
                    - law.force(v - h, p_hat, True)) / (2.0 * h)
            fd_p = (law.force(v, p_hat + h, True)
                    - law.force(v, p_hat - h, True)) / (2.0 * h)
            err = max(abs(fd_v - f_v) / abs(f_v), abs(fd_p - f_p) / abs(f_p))
            if err > worst:
                worst = err
    ok = worst <= rel_tol
    detail = (f"50x50 grid, worst relative error {worst:.2e} of "
              f"{rel_tol:.0e} allowed")
    return CheckResult(name, ok, detail)


def run_all(params: SimParams) -> Iterator[CheckResult]:
    """Yield every acceptance check result, corpus runs shared."""
    corpus = RunCorpus(params)
    yield check_safety(params, corpus)
    yield check_throughput(params, corpus)
    yield check_recursive_feasibility(params)
    yield check_braking_only(params, corpus)
    yield check_pursuit_convergence(params)
    yield check_equilibrium_hold(params)
    yield check_solver_oracle(params)
    yield check_drag_descent(params)
    yield check_determinism(params)
    yield check_partials(params)
