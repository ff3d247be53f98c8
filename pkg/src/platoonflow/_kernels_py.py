"""Pure-Python scalar kernels for the per-vehicle hot path.

These functions carry the entire numerical semantics of the controller:
the compiled twin in ``_kernels_cy`` mirrors them expression for
expression, and the test suite pins the two backends against each other.
Keep any change here in lockstep with the .pyx file.

All functions take flat float arguments so both backends share one
calling convention.  No objects, no allocation beyond result tuples.
"""

from __future__ import annotations

import math

# Exact-equality guard for speeds parked on a bound by the projection step.
SPEED_EDGE_TOL = 1e-9

INF = float("inf")

# Verdict codes shared by both backends.
VERDICT_FEASIBLE = 0
VERDICT_FLOOR_CONFLICT = 1
VERDICT_BRAKE_CONFLICT = 2
VERDICT_DEADLINE_DRAG_CONFLICT = 3
VERDICT_DEADLINE_SAFETY_CONFLICT = 4

# Active-constraint mask bits.
ACTIVE_SPEED_FLOOR = 1
ACTIVE_SPEED_CEILING = 2
ACTIVE_SAFETY = 4
ACTIVE_DRAG_FLOW = 8
ACTIVE_DEADLINE = 16


def drag_force(v: float, p_hat: float, in_wake: bool,
               c0: float, c1: float, c2: float) -> float:
    """Aerodynamic drag: quadratic in speed, discounted in a wake."""
    if in_wake:
        return c0 * v * v * (1.0 - c1 * math.exp(c2 * p_hat))
    return c0 * v * v


def drag_partials(v: float, p_hat: float, in_wake: bool,
                  c0: float, c1: float, c2: float) -> tuple[float, float]:
    """Closed-form partials of the drag force w.r.t. speed and gap."""
    if in_wake:
        w = math.exp(c2 * p_hat)
        f_v = 2.0 * c0 * v * (1.0 - c1 * w)
        f_p = -c0 * v * v * c1 * c2 * w
        return f_v, f_p
    return 2.0 * c0 * v, 0.0


def flow_bound(v: float, p_hat: float, v_hat: float, in_wake: bool,
               c0: float, c1: float, c2: float) -> float:
    """Upper bound on acceleration that keeps drag energy non-increasing.

    Requiring d(F^2)/dt <= 0 for the wake drag law yields
    a <= (|dF/dp_hat| / dF/dv) * v_hat; a solo vehicle gets a <= 0.
    """
    if not in_wake:
        return 0.0
    w = math.exp(c2 * p_hat)
    # dF/dv > 0 on the admissible domain (v >= v_min > 0, c1 < 1).
    ratio = (v * c1 * c2 * w) / (2.0 * (1.0 - c1 * w))
    return ratio * v_hat


def stopping_margin(v: float, p_hat: float, v_hat: float,
                    v_min: float, a_min: float, delta: float) -> float:
    """Stopping-envelope margin; the pair is safe iff this is <= 0.

    A closing vehicle (v_hat > 0) books the distance it would cede while
    braking to the predecessor's worst-case cruise speed; otherwise the
    plain gap-minus-delta test applies.
    """
    if v_hat <= 0.0:
        return p_hat + delta
    return (p_hat + delta
            + v_hat * (v_min - v) / a_min
            + v_hat * v_hat / (2.0 * a_min))


def critical_relative_speed(v: float, p_hat: float,
                            v_min: float, a_min: float, delta: float) -> float:
    """Closing speed at which the stopping envelope is exactly met.

    Root in v_hat > 0 of the envelope margin.  Raises ValueError when the
    gap already violates the envelope (no real root).
    """
    s = v - v_min
    radicand = s * s + 2.0 * abs(a_min) * (p_hat + delta)
    if radicand < 0.0:
        raise ValueError("state is inside the stopping envelope; no root")
    return s - math.sqrt(radicand)


def envelope_cap(v: float, v_hat: float, g: float, pred_accel: float,
                 v_min: float, a_min: float, gamma: float) -> float:
    """Acceleration cap keeping the envelope margin from growing.

    Solves d(g)/dt <= -gamma * g for the ego acceleration, given the
    predecessor's commanded acceleration.  Only meaningful for a closing
    pair (v_hat > 0); the caller guards that.

    The raw bound is floored at a_min: a discrete overshoot past the
    envelope can push it lower, but full braking is the strongest
    recovery physically available and never grows the margin.
    """
    if v <= v_min + SPEED_EDGE_TOL:
        # A closing vehicle at the floor would need a predecessor below
        # v_min, which the projection step rules out.
        raise ValueError("closing pair with ego speed at the floor")
    k = (v_min - v) / a_min
    r = v_hat - pred_accel * (v_min - v + v_hat) / a_min
    cap = (-gamma * g - r) / k
    if cap < a_min:
        cap = a_min
    return cap


def safe_interval(v: float, p_hat: float, v_hat: float,
                  pred_accel: float, has_pred: bool,
                  v_min: float, v_max: float, a_min: float, a_max: float,
                  delta: float, eps_g: float, gamma: float
                  ) -> tuple[float, float]:
    """Admissible acceleration interval from speed box plus envelope.

    Returns (lo, hi); the interval is never empty for states reachable by
    the engine.  With gamma > 0 the envelope cap engages smoothly ahead
    of the boundary; with gamma == 0 only inside the eps_g band.
    """
    lo = a_min
    hi = a_max
    if v <= v_min + SPEED_EDGE_TOL:
        lo = 0.0
    if v >= v_max - SPEED_EDGE_TOL:
        hi = 0.0
    if has_pred and v_hat > 0.0:
        g = stopping_margin(v, p_hat, v_hat, v_min, a_min, delta)
        if g >= -eps_g or gamma > 0.0:
            cap = envelope_cap(v, v_hat, g, pred_accel, v_min, a_min, gamma)
            if cap < hi:
                hi = cap
    return lo, hi


def classify(v: float, v_hat: float, bound: float,
             deadline_active: bool, safety_active: bool,
             v_min: float, a_min: float) -> int:
    """Feasibility verdict for the follower problem, in precedence order."""
    if v <= v_min + SPEED_EDGE_TOL and bound < 0.0:
        return VERDICT_FLOOR_CONFLICT
    if bound < a_min:
        return VERDICT_BRAKE_CONFLICT
    if deadline_active and bound < 0.0:
        return VERDICT_DEADLINE_DRAG_CONFLICT
    if deadline_active and safety_active and v_hat > 0.0:
        return VERDICT_DEADLINE_SAFETY_CONFLICT
    return VERDICT_FEASIBLE


def _clamp_to_zero(lo: float, hi: float) -> float:
    # Minimum-magnitude element of [lo, hi]: the feasible value closest to 0.
    if lo > 0.0:
        return lo
    if hi < 0.0:
        return hi
    return 0.0


def follower_decision(v: float, p_hat: float, v_hat: float,
                      pred_accel: float, deadline_active: bool,
                      v_min: float, v_max: float,
                      a_min: float, a_max: float,
                      delta: float, eps_g: float, gamma: float,
                      c0: float, c1: float, c2: float
                      ) -> tuple[float, int, int, float, float, float, float]:
    """Full follower control decision.

    Returns (accel, verdict, active_mask, lo, hi, g, bound) where [lo, hi]
    is the final feasible interval (after any deadline relaxation), ``g``
    the stopping-envelope margin and ``bound`` the drag-descent cap.

    The command is the feasible acceleration of least magnitude.  When the
    constraint set is empty, the verdict explains why and the command
    falls back: drag-vs-deadline and box conflicts brake on the leader
    policy; an envelope-vs-deadline conflict drops the deadline and
    re-solves.
    """
    g = stopping_margin(v, p_hat, v_hat, v_min, a_min, delta)
    bound = flow_bound(v, p_hat, v_hat, True, c0, c1, c2)

    lo = a_min
    hi_safe = a_max
    if v <= v_min + SPEED_EDGE_TOL:
        lo = 0.0
    if v >= v_max - SPEED_EDGE_TOL:
        hi_safe = 0.0
    cap = INF
    if v_hat > 0.0 and (g >= -eps_g or gamma > 0.0):
        cap = envelope_cap(v, v_hat, g, pred_accel, v_min, a_min, gamma)
        if cap < hi_safe:
            hi_safe = cap

    hi = hi_safe
    if bound < hi:
        hi = bound
    lo_full = lo
    if deadline_active and lo_full < 0.0:
        lo_full = 0.0

    verdict = VERDICT_FEASIBLE
    if lo_full <= hi:
        accel = _clamp_to_zero(lo_full, hi)
        lo = lo_full
    else:
        safety_active = g >= -eps_g or cap < 0.0
        verdict = classify(v, v_hat, bound, deadline_active, safety_active,
                           v_min, a_min)
        if verdict == VERDICT_DEADLINE_SAFETY_CONFLICT:
            # Drop the deadline and re-solve; the caller flips the mode.
            accel = _clamp_to_zero(lo, hi)
        elif verdict != VERDICT_FEASIBLE:
            # Split triggers: brake on the leader policy, envelope intact.
            accel = a_min if a_min > lo else lo
            hi = hi_safe
        else:
            raise AssertionError("empty feasible interval with no verdict")

    mask = 0
    if lo == 0.0 and accel == 0.0 and v <= v_min + SPEED_EDGE_TOL:
        mask |= ACTIVE_SPEED_FLOOR
    if accel == 0.0 and v >= v_max - SPEED_EDGE_TOL:
        mask |= ACTIVE_SPEED_CEILING
    if cap != INF and accel == cap:
        mask |= ACTIVE_SAFETY
    if accel == bound:
        mask |= ACTIVE_DRAG_FLOW
    if deadline_active and verdict != VERDICT_DEADLINE_SAFETY_CONFLICT \
            and accel == 0.0:
        mask |= ACTIVE_DEADLINE
    return accel, verdict, mask, lo, hi, g, bound


def leader_decision(v: float, p_hat: float, v_hat: float,
                    pred_accel: float, has_pred: bool, recovering: bool,
                    v_min: float, v_max: float,
                    a_min: float, a_max: float,
                    delta: float, eps_g: float, gamma: float
                    ) -> tuple[float, float, float, float]:
    """Platoon-head control: brake to the floor, or accelerate to recover.

    Returns (accel, lo, hi, g); ``g`` is nan without a predecessor.  The
    admissible interval is the speed box intersected with the envelope
    cap against the physical predecessor, when one exists.
    """
    g = float("nan")
    lo = a_min
    hi = a_max
    if v <= v_min + SPEED_EDGE_TOL:
        lo = 0.0
    if v >= v_max - SPEED_EDGE_TOL:
        hi = 0.0
    if has_pred and v_hat > 0.0:
        g = stopping_margin(v, p_hat, v_hat, v_min, a_min, delta)
        if g >= -eps_g or gamma > 0.0:
            cap = envelope_cap(v, v_hat, g, pred_accel, v_min, a_min, gamma)
            if cap < hi:
                hi = cap
    elif has_pred:
        g = stopping_margin(v, p_hat, v_hat, v_min, a_min, delta)

    if recovering:
        accel = hi
    else:
        accel = a_min if a_min > lo else lo
        if accel > hi:
            accel = hi
    return accel, lo, hi, g
