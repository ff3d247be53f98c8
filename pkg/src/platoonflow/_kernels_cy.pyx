# cython: language_level=3, boundscheck=False, cdivision=False
"""Compiled scalar kernels for the per-vehicle hot path.

Line-for-line mirror of ``_kernels_py``; that module is the semantic
reference.  Expression order is kept identical (and the build disables
FP contraction) so both backends produce bit-equal results.
"""

from libc.math cimport exp, sqrt, INFINITY, NAN

SPEED_EDGE_TOL = 1e-9
cdef double _TOL = 1e-9

VERDICT_FEASIBLE = 0
VERDICT_FLOOR_CONFLICT = 1
VERDICT_BRAKE_CONFLICT = 2
VERDICT_DEADLINE_DRAG_CONFLICT = 3
VERDICT_DEADLINE_SAFETY_CONFLICT = 4

ACTIVE_SPEED_FLOOR = 1
ACTIVE_SPEED_CEILING = 2
ACTIVE_SAFETY = 4
ACTIVE_DRAG_FLOW = 8
ACTIVE_DEADLINE = 16

cdef int _V_FEASIBLE = 0
cdef int _V_FLOOR = 1
cdef int _V_BRAKE = 2
cdef int _V_DDL_DRAG = 3
cdef int _V_DDL_SAFE = 4


cpdef double drag_force(double v, double p_hat, bint in_wake,
                        double c0, double c1, double c2):
    if in_wake:
        return c0 * v * v * (1.0 - c1 * exp(c2 * p_hat))
    return c0 * v * v


cpdef tuple drag_partials(double v, double p_hat, bint in_wake,
                          double c0, double c1, double c2):
    cdef double w, f_v, f_p
    if in_wake:
        w = exp(c2 * p_hat)
        f_v = 2.0 * c0 * v * (1.0 - c1 * w)
        f_p = -c0 * v * v * c1 * c2 * w
        return f_v, f_p
    return 2.0 * c0 * v, 0.0


cpdef double flow_bound(double v, double p_hat, double v_hat, bint in_wake,
                        double c0, double c1, double c2):
    cdef double w, ratio
    if not in_wake:
        return 0.0
    w = exp(c2 * p_hat)
    ratio = (v * c1 * c2 * w) / (2.0 * (1.0 - c1 * w))
    return ratio * v_hat


cpdef double stopping_margin(double v, double p_hat, double v_hat,
                             double v_min, double a_min, double delta):
    if v_hat <= 0.0:
        return p_hat + delta
    return (p_hat + delta
            + v_hat * (v_min - v) / a_min
            + v_hat * v_hat / (2.0 * a_min))


cpdef double critical_relative_speed(double v, double p_hat,
                                     double v_min, double a_min, double delta):
    cdef double s = v - v_min
    cdef double radicand = s * s + 2.0 * abs(a_min) * (p_hat + delta)
    if radicand < 0.0:
        raise ValueError("state is inside the stopping envelope; no root")
    return s - sqrt(radicand)


cpdef double envelope_cap(double v, double v_hat, double g, double pred_accel,
                          double v_min, double a_min, double gamma):
    cdef double k, r, cap
    if v <= v_min + _TOL:
        raise ValueError("closing pair with ego speed at the floor")
    k = (v_min - v) / a_min
    r = v_hat - pred_accel * (v_min - v + v_hat) / a_min
    cap = (-gamma * g - r) / k
    if cap < a_min:
        cap = a_min
    return cap


cpdef tuple safe_interval(double v, double p_hat, double v_hat,
                          double pred_accel, bint has_pred,
                          double v_min, double v_max,
                          double a_min, double a_max,
                          double delta, double eps_g, double gamma):
    cdef double lo = a_min
    cdef double hi = a_max
    cdef double g, cap
    if v <= v_min + _TOL:
        lo = 0.0
    if v >= v_max - _TOL:
        hi = 0.0
    if has_pred and v_hat > 0.0:
        g = stopping_margin(v, p_hat, v_hat, v_min, a_min, delta)
        if g >= -eps_g or gamma > 0.0:
            cap = envelope_cap(v, v_hat, g, pred_accel, v_min, a_min, gamma)
            if cap < hi:
                hi = cap
    return lo, hi


cpdef int classify(double v, double v_hat, double bound,
                   bint deadline_active, bint safety_active,
                   double v_min, double a_min):
    if v <= v_min + _TOL and bound < 0.0:
        return _V_FLOOR
    if bound < a_min:
        return _V_BRAKE
    if deadline_active and bound < 0.0:
        return _V_DDL_DRAG
    if deadline_active and safety_active and v_hat > 0.0:
        return _V_DDL_SAFE
    return _V_FEASIBLE


cdef inline double _clamp_to_zero(double lo, double hi):
    if lo > 0.0:
        return lo
    if hi < 0.0:
        return hi
    return 0.0


cpdef tuple follower_decision(double v, double p_hat, double v_hat,
                              double pred_accel, bint deadline_active,
                              double v_min, double v_max,
                              double a_min, double a_max,
                              double delta, double eps_g, double gamma,
                              double c0, double c1, double c2):
    cdef double g = stopping_margin(v, p_hat, v_hat, v_min, a_min, delta)
    cdef double bound = flow_bound(v, p_hat, v_hat, True, c0, c1, c2)
    cdef double lo = a_min
    cdef double hi_safe = a_max
    cdef double cap = INFINITY
    cdef double hi, lo_full, accel
    cdef int verdict = _V_FEASIBLE
    cdef int mask = 0
    cdef bint safety_active

    if v <= v_min + _TOL:
        lo = 0.0
    if v >= v_max - _TOL:
        hi_safe = 0.0
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

    if lo_full <= hi:
        accel = _clamp_to_zero(lo_full, hi)
        lo = lo_full
    else:
        safety_active = g >= -eps_g or cap < 0.0
        verdict = classify(v, v_hat, bound, deadline_active, safety_active,
                           v_min, a_min)
        if verdict == _V_DDL_SAFE:
            accel = _clamp_to_zero(lo, hi)
        elif verdict != _V_FEASIBLE:
            accel = a_min if a_min > lo else lo
            hi = hi_safe
        else:
            raise AssertionError("empty feasible interval with no verdict")

    if lo == 0.0 and accel == 0.0 and v <= v_min + _TOL:
        mask |= 1
    if accel == 0.0 and v >= v_max - _TOL:
        mask |= 2
    if cap != INFINITY and accel == cap:
        mask |= 4
    if accel == bound:
        mask |= 8
    if deadline_active and verdict != _V_DDL_SAFE and accel == 0.0:
        mask |= 16
    return accel, verdict, mask, lo, hi, g, bound


cpdef tuple leader_decision(double v, double p_hat, double v_hat,
                            double pred_accel, bint has_pred, bint recovering,
                            double v_min, double v_max,
                            double a_min, double a_max,
                            double delta, double eps_g, double gamma):
    cdef double g = NAN
    cdef double lo = a_min
    cdef double hi = a_max
    cdef double cap, accel
    if v <= v_min + _TOL:
        lo = 0.0
    if v >= v_max - _TOL:
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
