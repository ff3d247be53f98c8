"""Post-run analysis and independent cross-checks.

Everything here works from trajectory records alone, so it audits what
the engine actually emitted rather than trusting its internal state.
The brute-force solver deliberately re-states each control constraint
as a pointwise inequality and scans a dense acceleration grid; it
shares no code path with the closed-form controller it checks.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ._kernels_py import SPEED_EDGE_TOL
from .constraints import FeasibilityVerdict, stopping_margin
from .core import SimParams
from .drag import DragLaw, ExponentialWakeDrag
from .sim import SimResult, TrajectoryRecord

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

_INEQ_TOL = 1e-9  # slack applied to every brute-force inequality


def records_by_time(trajectory: Iterable[TrajectoryRecord]
                    ) -> dict[float, list[TrajectoryRecord]]:
    """Group records into per-time snapshots ordered front to back."""
    snapshots: dict[float, list[TrajectoryRecord]] = defaultdict(list)
    for rec in trajectory:
        snapshots[rec.time].append(rec)
    for recs in snapshots.values():
        recs.sort(key=lambda r: -r.p)
    return dict(sorted(snapshots.items()))


def records_by_vehicle(trajectory: Iterable[TrajectoryRecord]
                       ) -> dict[int, list[TrajectoryRecord]]:
    """Group records per vehicle in time order."""
    out: dict[int, list[TrajectoryRecord]] = defaultdict(list)
    for rec in trajectory:
        out[rec.vehicle_id].append(rec)
    for recs in out.values():
        recs.sort(key=lambda r: r.time)
    return dict(out)


def check_ordering(trajectory: Iterable[TrajectoryRecord]) -> list[str]:
    """Positions must strictly decrease front to back in every snapshot."""
    problems = []
    for t, recs in records_by_time(trajectory).items():
        for a, b in zip(recs, recs[1:]):
            if b.p >= a.p:
                problems.append(
                    f"t={t:.3f}: vehicle {b.vehicle_id} (p={b.p:.6f}) not "
                    f"behind vehicle {a.vehicle_id} (p={a.p:.6f})"
                )
    return problems


def check_safety(trajectory: Iterable[TrajectoryRecord],
                 params: SimParams) -> list[str]:
    """Stopping-envelope audit over all consecutive pairs at all times.

    The allowed excursion is the band tolerance plus one step of drift
    at top speed, the tightest bound a sampled-data controller can hold.
    """
    allowed = params.eps_g + params.v_max * params.dt
    problems = []
    for t, recs in records_by_time(trajectory).items():
        for a, b in zip(recs, recs[1:]):
            g = stopping_margin(b.v, b.p - a.p, b.v - a.v, params)
            if g > allowed:
                problems.append(
                    f"t={t:.3f}: margin {g:.6f} > {allowed:.6f} between "
                    f"{a.vehicle_id} and {b.vehicle_id}"
                )
    return problems


def detect_formations(snapshot: Sequence[TrajectoryRecord],
                      params: SimParams) -> list[tuple[int, ...]]:
    """Group a snapshot into tight formations by observed gap and speed.

    Consecutive vehicles belong together when the bumper gap sits within
    ``eps_platoon_gap`` of the target spacing and speeds agree within
    ``eps_platoon_speed``.  This is measured from positions alone and is
    independent of the engine's platoon bookkeeping.
    """
    groups: list[tuple[int, ...]] = []
    current: list[int] = []
    for i, rec in enumerate(snapshot):
        if not current:
            current = [rec.vehicle_id]
            continue
        prev = snapshot[i - 1]
        gap_err = abs((rec.p - prev.p) + params.delta)
        if (gap_err <= params.eps_platoon_gap
                and abs(rec.v - prev.v) <= params.eps_platoon_speed):
            current.append(rec.vehicle_id)
        else:
            groups.append(tuple(current))
            current = [rec.vehicle_id]
    if current:
        groups.append(tuple(current))
    return groups


@dataclass(frozen=True, slots=True)
class EnergySummary:
    """Trapezoidal integrals over one vehicle's lifetime."""

    drag_sq: float       # integral of F^2 dt
    positive_work: float  # integral of max(u, 0) * v dt


def energy_summary(trajectory: Iterable[TrajectoryRecord]
                   ) -> dict[int, EnergySummary]:
    out: dict[int, EnergySummary] = {}
    for vid, recs in records_by_vehicle(trajectory).items():
        t = np.array([r.time for r in recs])
        drag = np.array([r.drag for r in recs])
        work = np.array([max(r.u, 0.0) * r.v for r in recs])
        out[vid] = EnergySummary(
            drag_sq=float(_trapezoid(drag * drag, t)),
            positive_work=float(_trapezoid(work, t)),
        )
    return out


@dataclass(frozen=True, slots=True)
class OracleDecision:
    """Grid-search result: command (None if nothing feasible) and verdict."""

    accel: Optional[float]
    verdict: FeasibilityVerdict


def brute_force_follower(v: float, p_hat: float, v_hat: float,
                         pred_accel: float, deadline_active: bool,
                         params: SimParams, law: DragLaw | None = None,
                         n: int = 10001) -> OracleDecision:
    """Reference follower decision by dense grid search.

    Every candidate acceleration is tested against the raw constraint
    inequalities (no interval algebra): hold the speed box when pinned
    to an edge, keep the stopping margin decaying at rate ``gamma``
    whenever closing (full braking is always admissible there, since
    the envelope is defined by the full-brake stopping distance), keep
    drag non-increasing, and hold speed when a deadline binds.  The
    candidate set is the dense grid plus zero plus each inequality's
    own boundary point, so feasible slivers narrower than the grid
    spacing are still found.  The verdict is re-derived from the grid
    masks in the same precedence the controller documents.
    """
    law = law or ExponentialWakeDrag(params.drag)
    g = stopping_margin(v, p_hat, v_hat, params)
    f_v, f_p = law.partials(v, p_hat, True)
    pred = params.a_min if params.worst_case_pred_accel else pred_accel
    at_floor = v <= params.v_min + SPEED_EDGE_TOL
    at_ceiling = v >= params.v_max - SPEED_EDGE_TOL
    decays = v_hat > 0.0 and (params.gamma > 0.0 or g >= -params.eps_g)

    cand = [np.linspace(params.a_min, params.a_max, n), [0.0]]
    if f_v > 0.0:
        cand.append([-f_p * v_hat / f_v])
    k = r = 0.0
    if decays and not at_floor:
        k = (params.v_min - v) / params.a_min
        r = v_hat - pred * (params.v_min - v + v_hat) / params.a_min
        cand.append([(-params.gamma * g - r) / k])
    grid = np.concatenate(cand)
    grid = grid[(grid >= params.a_min) & (grid <= params.a_max)]

    floor_ok = grid >= -_INEQ_TOL if at_floor else np.ones(grid.shape, bool)
    ceil_ok = grid <= _INEQ_TOL if at_ceiling else np.ones(grid.shape, bool)
    if decays:
        decay_ok = k * grid + r <= -params.gamma * g + _INEQ_TOL
        safety_ok = decay_ok | (grid <= params.a_min + _INEQ_TOL)
    else:
        decay_ok = safety_ok = np.ones(grid.shape, bool)
    flow_ok = f_p * v_hat + f_v * grid <= _INEQ_TOL
    dl_ok = grid >= -_INEQ_TOL if deadline_active else np.ones(grid.shape,
                                                               bool)

    feasible = floor_ok & ceil_ok & safety_ok & flow_ok & dl_ok
    if feasible.any():
        pts = grid[feasible]
        return OracleDecision(float(pts[np.argmin(np.abs(pts))]),
                              FeasibilityVerdict.FEASIBLE)

    cap_negative = decays and not bool((decay_ok & (grid >= -_INEQ_TOL)).any())
    safety_active = g >= -params.eps_g or cap_negative
    if at_floor and not (floor_ok & flow_ok).any():
        verdict = FeasibilityVerdict.FLOOR_CONFLICT
    elif not flow_ok.any():
        verdict = FeasibilityVerdict.BRAKE_CONFLICT
    elif deadline_active and not (dl_ok & flow_ok).any():
        verdict = FeasibilityVerdict.DEADLINE_DRAG_CONFLICT
    elif deadline_active and safety_active and v_hat > 0.0:
        verdict = FeasibilityVerdict.DEADLINE_SAFETY_CONFLICT
    else:
        verdict = FeasibilityVerdict.FEASIBLE
    return OracleDecision(None, verdict)


def summarize(result: SimResult, params: SimParams) -> dict[str, object]:
    """Aggregate run metrics for reporting."""
    m = dict(result.metrics)
    attempts = m.get("spawned", 0) + m.get("discarded", 0)
    energies = energy_summary(result.trajectory)
    snapshots = records_by_time(result.trajectory)
    final_formations: list[tuple[int, ...]] = []
    if snapshots:
        final_formations = detect_formations(
            next(reversed(snapshots.values())), params)
    multi = [len(f) for f in final_formations if len(f) > 1]
    out: dict[str, object] = {
        "duration": params.duration,
        "spawn_attempts": attempts,
        "vehicles_spawned": m.get("spawned", 0),
        "spawns_discarded": m.get("discarded", 0),
        "vehicles_exited": m.get("exited", 0),
        "peak_vehicle_count": m.get("peak_vehicles", 0),
        "platoon_splits": m.get("splits", 0),
        "platoon_merges": m.get("merges", 0),
        "deadline_relaxations": m.get("relaxations", 0),
        "deadline_recoveries": m.get("recoveries", 0),
        "final_formation_count": len(multi),
        "largest_final_formation": max(multi, default=0),
        "total_drag_sq_integral": sum(e.drag_sq for e in energies.values()),
        "total_positive_work": sum(e.positive_work
                                   for e in energies.values()),
    }
    return out
