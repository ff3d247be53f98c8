"""Constraint evaluation: stopping envelope, deadline, feasible intervals.

The stopping-envelope margin answers one question: if the predecessor
brakes as hard as allowed down to the minimum speed and cruises there,
and this vehicle reacts the same way, does the bumper gap stay above
delta?  The margin is <= 0 exactly when it does.  Its time derivative is
linear in the ego acceleration, which gives the closed-form cap used in
the admissible interval.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ._backend import kernels
from .core import SimParams

SPEED_EDGE_TOL = kernels.SPEED_EDGE_TOL


class FeasibilityVerdict(enum.Enum):
    """Outcome of the follower feasibility test, in precedence order.

    The three split verdicts mean the follower must give up drafting and
    head its own platoon; the deadline-safety conflict instead drops the
    deadline and keeps following.
    """

    FEASIBLE = 0
    #: Parked at the speed floor while drag descent demands deceleration.
    FLOOR_CONFLICT = 1
    #: Drag descent demands more braking than the actuator has.
    BRAKE_CONFLICT = 2
    #: Holding the deadline needs a >= 0, drag descent needs a < 0.
    DEADLINE_DRAG_CONFLICT = 3
    #: Holding the deadline needs a >= 0, the stopping envelope forbids it.
    DEADLINE_SAFETY_CONFLICT = 4

    @property
    def splits(self) -> bool:
        """Whether this verdict makes the follower head a new platoon."""
        return self in (
            FeasibilityVerdict.FLOOR_CONFLICT,
            FeasibilityVerdict.BRAKE_CONFLICT,
            FeasibilityVerdict.DEADLINE_DRAG_CONFLICT,
        )


@dataclass(frozen=True, slots=True)
class FeasibleInterval:
    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    def clamp_to_zero(self) -> float:
        """The element of least magnitude: the feasible value closest to 0."""
        if self.empty:
            raise ValueError("empty interval")
        if self.lo > 0.0:
            return self.lo
        if self.hi < 0.0:
            return self.hi
        return 0.0


def stopping_margin(v: float, p_hat: float, v_hat: float,
                    params: SimParams) -> float:
    """Stopping-envelope margin; safe iff <= 0.  Implies gap >= delta."""
    return kernels.stopping_margin(v, p_hat, v_hat,
                                   params.v_min, params.a_min, params.delta)


def critical_relative_speed(v: float, p_hat: float, params: SimParams) -> float:
    """Closing speed at which the envelope margin hits zero.

    Root of the closing-branch margin in v_hat; raises ValueError when
    the gap is already inside the envelope.
    """
    return kernels.critical_relative_speed(v, p_hat,
                                           params.v_min, params.a_min,
                                           params.delta)


def deadline_margin(p: float, v: float, t: float,
                    exit_pos: float, deadline: float) -> float:
    """Slack on reaching ``exit_pos`` by ``deadline`` at current speed.

    Negative while cruising at v covers the remaining distance in time;
    zero on the boundary; positive once the deadline cannot be met
    without accelerating.
    """
    return (exit_pos - p) - (deadline - t) * v


def safe_accel_interval(v: float, p_hat: float, v_hat: float,
                        pred_accel: float | None, has_pred: bool,
                        params: SimParams) -> FeasibleInterval:
    """Admissible accelerations from the speed box and stopping envelope.

    ``pred_accel`` is the predecessor's communicated command; pass None
    (or set ``params.worst_case_pred_accel``) to assume full braking.
    Never empty for engine-reachable states.
    """
    if pred_accel is None or params.worst_case_pred_accel:
        pred_accel = params.a_min
    lo, hi = kernels.safe_interval(
        v, p_hat, v_hat, pred_accel, has_pred,
        params.v_min, params.v_max, params.a_min, params.a_max,
        params.delta, params.eps_g, params.gamma,
    )
    return FeasibleInterval(lo, hi)


def envelope_cap(v: float, v_hat: float, g: float, pred_accel: float,
                 params: SimParams) -> float:
    """Raw acceleration cap from the envelope-derivative condition."""
    return kernels.envelope_cap(v, v_hat, g, pred_accel,
                                params.v_min, params.a_min, params.gamma)


def classify_feasibility(v: float, p_hat: float, v_hat: float,
                         grad_bound: float, deadline_active: bool,
                         safety_active: bool,
                         params: SimParams) -> FeasibilityVerdict:
    """Explain an empty follower constraint set.

    Checked in order: floor conflict, brake-authority conflict, the
    deadline-vs-descent conflict, and last the deadline-vs-envelope
    conflict.  Returns FEASIBLE when none applies.
    """
    code = kernels.classify(v, v_hat, grad_bound, deadline_active,
                            safety_active, params.v_min, params.a_min)
    return FeasibilityVerdict(code)
