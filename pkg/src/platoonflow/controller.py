"""Per-vehicle control policies and the mode state machine.

Followers solve a one-dimensional constrained problem each step: among
accelerations admitted by the speed box, the stopping envelope, the
drag-descent cap and (when active) the deadline, apply the one of least
magnitude.  Platoon heads instead brake to the speed floor and cruise,
or accelerate to recover a relaxed deadline.

The default drag law routes through the selected kernel backend in a
single fused call; any other ``DragLaw`` takes the compositional path
below, which is also the readable statement of the solve.
"""

from __future__ import annotations

from dataclasses import dataclass

from ._backend import kernels
from .constraints import (
    FeasibilityVerdict,
    FeasibleInterval,
    classify_feasibility,
    safe_accel_interval,
    stopping_margin,
)
from .core import SimParams, VehicleMode, VehicleState
from .drag import DragLaw, ExponentialWakeDrag

_ACTIVE_NAMES = (
    (kernels.ACTIVE_SPEED_FLOOR, "speed_floor"),
    (kernels.ACTIVE_SPEED_CEILING, "speed_ceiling"),
    (kernels.ACTIVE_SAFETY, "safety"),
    (kernels.ACTIVE_DRAG_FLOW, "drag_flow"),
    (kernels.ACTIVE_DEADLINE, "deadline"),
)


def _active_set(mask: int) -> frozenset[str]:
    return frozenset(name for bit, name in _ACTIVE_NAMES if mask & bit)


@dataclass(frozen=True, slots=True)
class ControlDecision:
    """Outcome of one control solve.

    ``interval`` is the final feasible interval the command was drawn
    from; when the verdict is not FEASIBLE the command came from the
    fallback policy instead and the interval reflects the relaxation.
    ``gs_margin`` is nan for a vehicle with no predecessor.
    """

    accel: float
    verdict: FeasibilityVerdict
    active: frozenset[str]
    interval: FeasibleInterval
    gs_margin: float
    flow_bound: float


def solve_follower_control(state: VehicleState, p_hat: float, v_hat: float,
                           pred_accel: float, deadline_active: bool,
                           params: SimParams,
                           law: DragLaw | None = None) -> ControlDecision:
    """Minimum-magnitude feasible acceleration for a follower.

    ``pred_accel`` is the predecessor's previous commanded acceleration
    (replaced by full braking under ``params.worst_case_pred_accel``).
    """
    if params.worst_case_pred_accel:
        pred_accel = params.a_min
    if law is None or isinstance(law, ExponentialWakeDrag):
        coeffs = law.coeffs if law is not None else params.drag
        accel, code, mask, lo, hi, g, bound = kernels.follower_decision(
            state.v, p_hat, v_hat, pred_accel, deadline_active,
            params.v_min, params.v_max, params.a_min, params.a_max,
            params.delta, params.eps_g, params.gamma,
            coeffs.c0, coeffs.c1, coeffs.c2,
        )
        return ControlDecision(accel, FeasibilityVerdict(code),
                               _active_set(mask), FeasibleInterval(lo, hi),
                               g, bound)
    return _solve_composed(state.v, p_hat, v_hat, pred_accel,
                           deadline_active, params, law)


def _solve_composed(v: float, p_hat: float, v_hat: float, pred_accel: float,
                    deadline_active: bool, params: SimParams,
                    law: DragLaw) -> ControlDecision:
    # Compositional solve for swapped-in drag laws; mirrors the fused kernel.
    g = stopping_margin(v, p_hat, v_hat, params)
    bound = law.descent_bound(v, p_hat, v_hat, True)
    safe = safe_accel_interval(v, p_hat, v_hat, pred_accel, True, params)
    lo, hi = safe.lo, min(safe.hi, bound)
    if deadline_active:
        lo = max(lo, 0.0)

    if lo <= hi:
        interval = FeasibleInterval(lo, hi)
        accel = interval.clamp_to_zero()
        verdict = FeasibilityVerdict.FEASIBLE
    else:
        safety_active = g >= -params.eps_g or safe.hi < 0.0
        verdict = classify_feasibility(v, p_hat, v_hat, bound,
                                       deadline_active, safety_active, params)
        if verdict is FeasibilityVerdict.DEADLINE_SAFETY_CONFLICT:
            interval = FeasibleInterval(safe.lo, min(safe.hi, bound))
            accel = interval.clamp_to_zero()
        elif verdict.splits:
            interval = safe
            accel = max(params.a_min, safe.lo)
        else:
            raise AssertionError("empty feasible interval with no verdict")

    active = set()
    if accel == bound:
        active.add("drag_flow")
    if accel == safe.hi and safe.hi != params.a_max:
        active.add("safety")
    if deadline_active and accel == 0.0 \
            and verdict is not FeasibilityVerdict.DEADLINE_SAFETY_CONFLICT:
        active.add("deadline")
    return ControlDecision(accel, verdict, frozenset(active), interval,
                           g, bound)


def leader_control(state: VehicleState, p_hat: float, v_hat: float,
                   pred_accel: float | None, deadline_active: bool,
                   params: SimParams) -> ControlDecision:
    """Platoon-head policy plus the merge-eligibility verdict.

    A LEADER brakes at the limit until the speed floor lifts the
    admissible interval to zero; a LEADER_RECOVERING applies the largest
    admissible acceleration.  Both respect the stopping envelope against
    the physical predecessor when one exists.

    The returned verdict classifies the head as if it were following its
    physical predecessor; resequencing merges platoons whose head comes
    back FEASIBLE.
    """
    has_pred = pred_accel is not None
    eff_pred_accel = params.a_min if (pred_accel is None
                                      or params.worst_case_pred_accel) \
        else pred_accel
    recovering = state.mode is VehicleMode.LEADER_RECOVERING
    accel, lo, hi, g = kernels.leader_decision(
        state.v, p_hat, v_hat, eff_pred_accel, has_pred, recovering,
        params.v_min, params.v_max, params.a_min, params.a_max,
        params.delta, params.eps_g, params.gamma,
    )

    verdict = FeasibilityVerdict.FEASIBLE
    bound = 0.0
    if has_pred:
        c = params.drag
        bound = kernels.flow_bound(state.v, p_hat, v_hat, True,
                                   c.c0, c.c1, c.c2)
        safety_active = g == g and (g >= -params.eps_g or hi < 0.0)
        verdict = classify_feasibility(state.v, p_hat, v_hat, bound,
                                       deadline_active, safety_active, params)

    active = set()
    if accel == 0.0 and lo == 0.0 and state.v <= params.v_min + kernels.SPEED_EDGE_TOL:
        active.add("speed_floor")
    if accel == 0.0 and state.v >= params.v_max - kernels.SPEED_EDGE_TOL:
        active.add("speed_ceiling")
    if has_pred and accel == hi and hi != params.a_max:
        active.add("safety")
    return ControlDecision(accel, verdict, frozenset(active),
                           FeasibleInterval(lo, hi), g, bound)


def update_mode(mode: VehicleMode, verdict: FeasibilityVerdict,
                deadline_margin: float, is_head: bool,
                params: SimParams) -> VehicleMode:
    """Advance the mode state machine one step.

    Split verdicts turn followers into heads; the deadline-safety
    conflict relaxes the deadline in place; a relaxed follower reaching
    the head slot accelerates to recover, and graduates to plain LEADER
    once its deadline margin is comfortably negative.  Everything else
    is sticky; demotion of a merged head is the engine's business.
    """
    if mode is VehicleMode.FOLLOWER:
        if verdict.splits:
            return VehicleMode.LEADER
        if verdict is FeasibilityVerdict.DEADLINE_SAFETY_CONFLICT:
            # Promoted and conflicted in the same step: recover as head.
            if is_head:
                return VehicleMode.LEADER_RECOVERING
            return VehicleMode.FOLLOWER_DEADLINE_RELAXED
        if is_head:
            return VehicleMode.LEADER
        return mode
    if mode is VehicleMode.FOLLOWER_DEADLINE_RELAXED:
        if verdict.splits or is_head:
            return VehicleMode.LEADER_RECOVERING
        return mode
    if mode is VehicleMode.LEADER_RECOVERING:
        if deadline_margin <= -params.eps_d:
            return VehicleMode.LEADER
        return mode
    return mode
