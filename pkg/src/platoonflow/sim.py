"""Open-system highway engine: spawning, stepping, resequencing, exits.

One step covers the interval [t, t + dt):

1. control decisions for every vehicle, all read from the frozen
   pre-step state (predecessor accelerations are the previous commands);
2. explicit Euler integration with speed projection onto the box;
3. exit removal (a vehicle leaves at its drawn exit position);
4. ordering and bumper-gap audits (failures are engine bugs, not model
   outcomes, and raise);
5. resequencing: splits, mode transitions, merges;
6. spawn attempts due under the single arrival process;
7. trajectory records.

All emitted records and events are stamped with the post-step clock:
whatever happens while processing a step takes effect at its end.

The random stream is consumed in a fixed order per spawn attempt
(delay, entry point, speed, exit choice, then the deadline for accepted
candidates only), so runs are reproducible byte for byte per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constraints import FeasibilityVerdict, deadline_margin, stopping_margin
from .controller import (
    ControlDecision,
    leader_control,
    solve_follower_control,
    update_mode,
)
from .core import (
    OrderingError,
    RelativeKinematics,
    SafetyAuditError,
    SimParams,
    VehicleMode,
    VehicleState,
    relative_kinematics,
)
from .drag import DragLaw, ExponentialWakeDrag

NEAR_RANGE = 100.0  # on-ramp predecessor distance that caps the entry speed

EVENT_SPAWN = "spawn"
EVENT_DISCARD = "discard"
EVENT_EXIT = "exit"
EVENT_SPLIT = "split"
EVENT_MERGE = "merge"
EVENT_RELAX = "deadline_relax"
EVENT_RECOVER = "deadline_recover"


@dataclass(frozen=True, slots=True)
class Event:
    time: float
    kind: str
    vehicle_id: int
    detail: str


@dataclass(frozen=True, slots=True)
class TrajectoryRecord:
    """Post-step snapshot of one vehicle.

    ``accel`` is the command applied over the step that produced this
    state; ``mode`` the mode that produced the command.  ``u`` is the
    actuator effort implied by the dynamics (accel plus drag).
    ``gs_margin`` is nan for the front vehicle of the road.
    """

    time: float
    vehicle_id: int
    platoon_id: int
    p: float
    v: float
    accel: float
    u: float
    drag: float
    gs_margin: float
    deadline_margin: float
    mode: str


@dataclass(slots=True)
class WorldState:
    """Complete mutable engine state.

    ``vehicles`` is ordered front to back: positions strictly decrease
    with list index, and platoons are contiguous runs of ``platoon_id``.
    ``next_spawn`` is the due time of the single arrival process.
    """

    params: SimParams
    t: float
    vehicles: list[VehicleState]
    rng: np.random.Generator
    next_spawn: float
    next_vehicle_id: int
    next_platoon_id: int
    spawning: bool
    drag_law: DragLaw
    events: list[Event] = field(default_factory=list)
    trajectory: list[TrajectoryRecord] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)

    @classmethod
    def initial(cls, params: SimParams, *, spawning: bool = True,
                drag_law: DragLaw | None = None) -> "WorldState":
        return cls(
            params=params,
            t=0.0,
            vehicles=[],
            rng=np.random.default_rng(params.seed),
            next_spawn=0.0,
            next_vehicle_id=0,
            next_platoon_id=0,
            spawning=spawning,
            drag_law=drag_law or ExponentialWakeDrag(params.drag),
            counters={
                "spawned": 0,
                "discarded": 0,
                "exited": 0,
                "splits": 0,
                "merges": 0,
                "relaxations": 0,
                "recoveries": 0,
                "peak_vehicles": 0,
            },
        )


@dataclass(frozen=True, slots=True)
class SimResult:
    trajectory: list[TrajectoryRecord]
    events: list[Event]
    metrics: dict[str, int]


def insert_vehicle(world: WorldState, p: float, v: float, *,
                   exit_pos: float, deadline: float,
                   mode: VehicleMode | None = None,
                   platoon_id: int | None = None) -> VehicleState:
    """Place a vehicle directly; harness entry point, not the spawn path.

    The vehicle is slotted by position.  Without an explicit mode it
    follows the vehicle ahead (joining its platoon) or heads a fresh
    platoon when the road ahead is empty.
    """
    idx = 0
    while idx < len(world.vehicles) and world.vehicles[idx].p >= p:
        idx += 1
    ahead = world.vehicles[idx - 1] if idx > 0 else None
    if platoon_id is None:
        if ahead is not None and mode is None:
            platoon_id = ahead.platoon_id
        else:
            platoon_id = world.next_platoon_id
            world.next_platoon_id += 1
    if mode is None:
        mode = VehicleMode.FOLLOWER if ahead is not None else VehicleMode.LEADER
    veh = VehicleState(
        vid=world.next_vehicle_id, p=p, v=v, accel=0.0,
        spawn_time=world.t, deadline=deadline, exit_pos=exit_pos,
        mode=mode, platoon_id=platoon_id,
    )
    world.next_vehicle_id += 1
    world.vehicles.insert(idx, veh)
    return veh


def draw_deadline(rng: np.random.Generator, p0: float, v0: float,
                  exit_pos: float, t0: float, params: SimParams) -> float:
    """Arrival deadline drawn between free-flow and floor-speed travel time.

    The lower end is reachable only by holding the entry speed the whole
    way, so a fresh vehicle always starts with non-positive deadline
    margin.
    """
    dist = exit_pos - p0
    return t0 + rng.uniform(dist / v0, dist / params.v_min)


def _head_flags(vehicles: list[VehicleState]) -> list[bool]:
    flags = []
    for i, veh in enumerate(vehicles):
        flags.append(i == 0 or vehicles[i - 1].platoon_id != veh.platoon_id)
    return flags


def _decide(world: WorldState, params: SimParams
            ) -> dict[int, tuple[ControlDecision, VehicleMode, bool]]:
    """Control decisions for all vehicles from the frozen pre-step state."""
    decisions: dict[int, tuple[ControlDecision, VehicleMode, bool]] = {}
    vehicles = world.vehicles
    heads = _head_flags(vehicles)
    for i, veh in enumerate(vehicles):
        pred = vehicles[i - 1] if i > 0 else None
        rel = relative_kinematics(veh, pred)
        margin = deadline_margin(veh.p, veh.v, world.t,
                                 veh.exit_pos, veh.deadline)
        deadline_active = (params.enforce_deadlines
                           and not veh.mode.deadline_relaxed
                           and margin >= -params.eps_d)
        if veh.mode.is_head:
            pred_accel = pred.accel if pred is not None else None
            dec = leader_control(veh, rel.p_hat, rel.v_hat, pred_accel,
                                 deadline_active, params)
        else:
            if pred is None:
                raise OrderingError(
                    f"follower {veh.vid} has no predecessor at t={world.t:.3f}"
                )
            dec = solve_follower_control(veh, rel.p_hat, rel.v_hat,
                                         pred.accel, deadline_active,
                                         params, world.drag_law)
        decisions[veh.vid] = (dec, veh.mode, heads[i])
    return decisions


def _integrate(world: WorldState, params: SimParams,
               decisions: dict[int, tuple[ControlDecision, VehicleMode, bool]]
               ) -> None:
    dt = params.dt
    for veh in world.vehicles:
        a = decisions[veh.vid][0].accel
        veh.p = veh.p + veh.v * dt + 0.5 * a * dt * dt
        v_new = veh.v + a * dt
        if v_new < params.v_min:
            v_new = params.v_min
        elif v_new > params.v_max:
            v_new = params.v_max
        veh.v = v_new
        veh.accel = a


def _process_exits(world: WorldState, stamp: float) -> None:
    remaining: list[VehicleState] = []
    for veh in world.vehicles:
        if veh.p >= veh.exit_pos:
            world.events.append(Event(stamp, EVENT_EXIT, veh.vid,
                                      f"at {veh.exit_pos:g}"))
            world.counters["exited"] += 1
        else:
            remaining.append(veh)
    world.vehicles = remaining


def _audit(world: WorldState, params: SimParams, stamp: float) -> None:
    # One step of drift at top speed is legitimate discretisation slack
    # (the final closing step shrinks the gap with the pre-step relative
    # speed); anything past it is an engine bug.
    slack = params.eps_g + params.v_max * params.dt
    vehicles = world.vehicles
    for i in range(1, len(vehicles)):
        ahead, veh = vehicles[i - 1], vehicles[i]
        if veh.p >= ahead.p:
            raise OrderingError(
                f"t={stamp:.3f}: vehicle {veh.vid} at p={veh.p:.6f} "
                f"reached vehicle {ahead.vid} at p={ahead.p:.6f}"
            )
        shortfall = (veh.p - ahead.p) + params.delta
        if shortfall > slack:
            raise SafetyAuditError(
                f"t={stamp:.3f}: gap between {ahead.vid} and {veh.vid} "
                f"is {params.delta - shortfall:.6f} m, required "
                f"{params.delta:g} m within {slack:.6f}"
            )


def resequence(world: WorldState, params: SimParams,
               decisions: dict[int, tuple[ControlDecision, VehicleMode, bool]],
               stamp: float) -> None:
    """Apply splits, mode transitions and merges for this step.

    Splits act on this step's follower verdicts; merges act on heads
    whose against-predecessor classification came back feasible.  Heads
    promoted only this step sit out the merge test until they have a
    head verdict of their own.
    """
    vehicles = world.vehicles

    for i, veh in enumerate(vehicles):
        info = decisions.get(veh.vid)
        if info is None:
            continue
        dec, mode_ctrl, was_head = info
        if not was_head and dec.verdict.splits:
            old = veh.platoon_id
            new = world.next_platoon_id
            world.next_platoon_id += 1
            j = i
            while j < len(vehicles) and vehicles[j].platoon_id == old:
                vehicles[j].platoon_id = new
                j += 1
            world.counters["splits"] += 1
            world.events.append(Event(stamp, EVENT_SPLIT, veh.vid,
                                      f"platoon {old} -> {new}"))

    heads = _head_flags(vehicles)
    for veh, is_head in zip(vehicles, heads):
        info = decisions.get(veh.vid)
        if info is None:
            continue
        verdict = info[0].verdict
        margin = deadline_margin(veh.p, veh.v, stamp,
                                 veh.exit_pos, veh.deadline)
        new_mode = update_mode(veh.mode, verdict, margin, is_head, params)
        if new_mode is veh.mode:
            continue
        if new_mode is VehicleMode.FOLLOWER_DEADLINE_RELAXED or (
                new_mode is VehicleMode.LEADER_RECOVERING
                and veh.mode is VehicleMode.FOLLOWER):
            world.counters["relaxations"] += 1
            world.events.append(Event(stamp, EVENT_RELAX, veh.vid,
                                      f"margin {margin:.3f}"))
        elif (veh.mode is VehicleMode.LEADER_RECOVERING
              and new_mode is VehicleMode.LEADER):
            world.counters["recoveries"] += 1
            world.events.append(Event(stamp, EVENT_RECOVER, veh.vid,
                                      f"margin {margin:.3f}"))
        veh.mode = new_mode

    for i in range(1, len(vehicles)):
        veh = vehicles[i]
        if vehicles[i - 1].platoon_id == veh.platoon_id:
            continue
        info = decisions.get(veh.vid)
        if info is None or not info[2]:
            continue
        if info[0].verdict is not FeasibilityVerdict.FEASIBLE:
            continue
        old = veh.platoon_id
        target = vehicles[i - 1].platoon_id
        j = i
        while j < len(vehicles) and vehicles[j].platoon_id == old:
            vehicles[j].platoon_id = target
            j += 1
        # Merging re-arms the deadline even for a recovering head: if it
        # still cannot be met the next solve routes through a fresh
        # conflict instead of resuming the recovery burst, which is what
        # keeps a hopeless deadline from ratcheting a vehicle into the
        # gap ahead one burst at a time.
        veh.mode = VehicleMode.FOLLOWER
        world.counters["merges"] += 1
        world.events.append(Event(stamp, EVENT_MERGE, veh.vid,
                                  f"platoon {old} -> {target}"))


def try_spawn(world: WorldState, params: SimParams, stamp: float) -> None:
    """Process every due arrival of the single spawn process.

    A candidate is discarded when inserting it would violate the
    stopping envelope for itself or for the vehicle it would cut off;
    discarded arrivals consume no vehicle id and no deadline draw.
    """
    road = params.road
    entries = road.entry_points()
    while world.spawning and world.next_spawn <= world.t + 1e-9:
        rng = world.rng
        delay = float(rng.uniform(0.5, 1.5))
        world.next_spawn = world.next_spawn + delay
        entry = entries[int(rng.integers(0, len(entries)))]

        idx = 0
        while idx < len(world.vehicles) and world.vehicles[idx].p >= entry:
            idx += 1
        ahead = world.vehicles[idx - 1] if idx > 0 else None
        behind = world.vehicles[idx] if idx < len(world.vehicles) else None

        if entry > 0.0 and ahead is not None and ahead.p - entry <= NEAR_RANGE:
            v0 = float(rng.uniform(params.v_min, min(params.v_max, ahead.v)))
        else:
            v0 = float(rng.uniform(params.v_min, params.v_max))

        choices = road.exit_choices(entry)
        exit_pos = choices[int(rng.integers(0, len(choices)))]

        ok = True
        if ahead is not None:
            g = stopping_margin(v0, entry - ahead.p, v0 - ahead.v, params)
            ok = g <= 0.0
        if ok and behind is not None:
            g = stopping_margin(behind.v, behind.p - entry,
                                behind.v - v0, params)
            ok = g <= 0.0
        if not ok:
            world.counters["discarded"] += 1
            world.events.append(Event(stamp, EVENT_DISCARD, -1,
                                      f"entry={entry:g} v={v0:.3f}"))
            continue

        t_f = draw_deadline(rng, entry, v0, exit_pos, stamp, params)
        if ahead is not None:
            platoon_id = ahead.platoon_id
            mode = VehicleMode.FOLLOWER
        else:
            platoon_id = world.next_platoon_id
            world.next_platoon_id += 1
            mode = VehicleMode.LEADER
        veh = VehicleState(
            vid=world.next_vehicle_id, p=entry, v=v0, accel=0.0,
            spawn_time=stamp, deadline=t_f, exit_pos=exit_pos,
            mode=mode, platoon_id=platoon_id,
        )
        world.next_vehicle_id += 1
        world.vehicles.insert(idx, veh)
        world.counters["spawned"] += 1
        world.events.append(Event(
            stamp, EVENT_SPAWN, veh.vid,
            f"entry={entry:g} exit={exit_pos:g} v={v0:.3f}",
        ))


def _record(world: WorldState, params: SimParams, stamp: float,
            mode_at_control: dict[int, VehicleMode]) -> None:
    law = world.drag_law
    vehicles = world.vehicles
    for i, veh in enumerate(vehicles):
        pred = vehicles[i - 1] if i > 0 else None
        in_wake = pred is not None
        if in_wake:
            rel = relative_kinematics(veh, pred)
            gs = stopping_margin(veh.v, rel.p_hat, rel.v_hat, params)
            drag = law.force(veh.v, rel.p_hat, True)
        else:
            gs = math.nan
            drag = law.force(veh.v, 0.0, False)
        dm = deadline_margin(veh.p, veh.v, stamp, veh.exit_pos, veh.deadline)
        mode = mode_at_control.get(veh.vid, veh.mode)
        world.trajectory.append(TrajectoryRecord(
            time=stamp, vehicle_id=veh.vid, platoon_id=veh.platoon_id,
            p=veh.p, v=veh.v, accel=veh.accel, u=veh.accel + drag,
            drag=drag, gs_margin=gs, deadline_margin=dm, mode=mode.value,
        ))


def step(world: WorldState, params: SimParams) -> None:
    """Advance the world by one control period."""
    stamp = world.t + params.dt
    decisions = _decide(world, params)
    _integrate(world, params, decisions)
    _process_exits(world, stamp)
    _audit(world, params, stamp)
    resequence(world, params, decisions, stamp)
    try_spawn(world, params, stamp)
    mode_at_control = {vid: info[1] for vid, info in decisions.items()}
    _record(world, params, stamp, mode_at_control)
    if len(world.vehicles) > world.counters["peak_vehicles"]:
        world.counters["peak_vehicles"] = len(world.vehicles)
    world.t = stamp


def run(params: SimParams, *, world: WorldState | None = None) -> SimResult:
    """Run a full simulation and return trajectory, events and counters.

    A pre-built world (e.g. with seeded vehicles or spawning disabled)
    may be passed in; otherwise an empty world is created from the
    parameters.
    """
    if world is None:
        world = WorldState.initial(params)
    n_steps = round(params.duration / params.dt)
    for _ in range(n_steps):
        step(world, params)
    return SimResult(trajectory=world.trajectory, events=world.events,
                     metrics=dict(world.counters))
