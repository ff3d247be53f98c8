import math

import pytest
from hypothesis import given, strategies as st

from platoonflow import (
    FeasibilityVerdict,
    SimParams,
    VehicleMode,
    VehicleState,
    leader_control,
    solve_follower_control,
    update_mode,
)
from platoonflow.constraints import SPEED_EDGE_TOL

PARAMS = SimParams()


def make_state(v, mode=VehicleMode.FOLLOWER, p=500.0):
    return VehicleState(vid=1, p=p, v=v, accel=0.0, spawn_time=0.0,
                        deadline=1e9, exit_pos=1750.0, mode=mode,
                        platoon_id=1)


class TestFollowerSolve:
    def test_unconstrained_interior_coasts(self):
        d = solve_follower_control(make_state(30.0), -20.0, 1.0, 0.0,
                                   False, PARAMS)
        assert d.accel == 0.0
        assert d.verdict is FeasibilityVerdict.FEASIBLE
        assert d.active == frozenset()
        assert d.gs_margin == -12.625
        assert d.flow_bound == pytest.approx(0.16540193819026033, rel=1e-12)

    def test_opening_gap_tracks_the_descent_bound(self):
        d = solve_follower_control(make_state(30.0), -20.0, -1.0, 0.0,
                                   False, PARAMS)
        assert d.accel == d.flow_bound
        assert d.accel == pytest.approx(-0.16540193819026033, rel=1e-12)
        assert d.accel < 0.0
        assert "drag_flow" in d.active

    def test_active_deadline_pins_the_command_at_zero(self):
        d = solve_follower_control(make_state(30.0), -20.0, 2.0, 0.0,
                                   True, PARAMS)
        assert d.accel == 0.0
        assert d.verdict is FeasibilityVerdict.FEASIBLE
        assert "deadline" in d.active

    def test_floor_conflict_when_descent_demands_braking_at_the_floor(self):
        d = solve_follower_control(make_state(20.0), -20.0, -1.0, 0.0,
                                   False, PARAMS)
        assert d.verdict is FeasibilityVerdict.FLOOR_CONFLICT
        assert d.verdict.splits
        assert d.accel == 0.0

    def test_brake_conflict_when_descent_outruns_the_actuator(self):
        d = solve_follower_control(make_state(22.0), -6.0, -10.0, 0.0,
                                   False, PARAMS)
        assert d.flow_bound < PARAMS.a_min
        assert d.verdict is FeasibilityVerdict.BRAKE_CONFLICT
        assert d.accel == PARAMS.a_min

    def test_deadline_against_descent_splits(self):
        d = solve_follower_control(make_state(25.0), -20.0, -2.0, 0.0,
                                   True, PARAMS)
        assert d.verdict is FeasibilityVerdict.DEADLINE_DRAG_CONFLICT
        assert d.verdict.splits
        assert d.accel == PARAMS.a_min

    def test_deadline_against_envelope_relaxes_and_brakes(self):
        d = solve_follower_control(make_state(30.0), -13.0, 6.0, 0.0,
                                   True, PARAMS)
        assert d.verdict is FeasibilityVerdict.DEADLINE_SAFETY_CONFLICT
        assert not d.verdict.splits
        assert d.gs_margin == 2.5
        # the command comes from the solve with the deadline dropped
        assert d.accel == -3.4
        assert d.interval.hi == -3.4
        assert "safety" in d.active

    def test_worst_case_switch_ignores_communicated_command(self):
        import dataclasses
        worst = dataclasses.replace(PARAMS, worst_case_pred_accel=True)
        trusting = solve_follower_control(make_state(30.0), -16.0, 7.0, 3.0,
                                          False, PARAMS)
        paranoid = solve_follower_control(make_state(30.0), -16.0, 7.0, 3.0,
                                          False, worst)
        assert paranoid.accel <= trusting.accel

    @given(v=st.floats(min_value=20.0, max_value=35.0),
           p_hat=st.floats(min_value=-200.0, max_value=-0.1),
           closing_frac=st.floats(min_value=-1.0, max_value=1.0),
           pred=st.floats(min_value=-4.0, max_value=3.0),
           deadline=st.booleans())
    def test_command_stays_inside_the_actuator_box(self, v, p_hat,
                                                   closing_frac, pred,
                                                   deadline):
        # predecessor speed must respect the floor, so v_hat <= v - v_min,
        # with speeds inside the edge tolerance counting as parked there
        headroom = v - PARAMS.v_min
        if headroom <= SPEED_EDGE_TOL:
            headroom = 0.0
        v_hat = closing_frac * headroom if closing_frac > 0 \
            else closing_frac * 15.0
        d = solve_follower_control(make_state(v), p_hat, v_hat, pred,
                                   deadline, PARAMS)
        assert PARAMS.a_min <= d.accel <= PARAMS.a_max


class TestLeaderPolicy:
    def test_front_leader_brakes_toward_the_floor(self):
        d = leader_control(make_state(30.0, VehicleMode.LEADER), 500.0, 30.0,
                           None, False, PARAMS)
        assert d.accel == PARAMS.a_min
        assert math.isnan(d.gs_margin)
        assert d.verdict is FeasibilityVerdict.FEASIBLE

    def test_front_leader_cruises_at_the_floor(self):
        d = leader_control(make_state(20.0, VehicleMode.LEADER), 500.0, 20.0,
                           None, False, PARAMS)
        assert d.accel == 0.0
        assert "speed_floor" in d.active

    def test_recovering_head_floors_the_throttle(self):
        d = leader_control(make_state(30.0, VehicleMode.LEADER_RECOVERING),
                           500.0, 30.0, None, False, PARAMS)
        assert d.accel == PARAMS.a_max

    def test_recovering_head_respects_the_ceiling(self):
        d = leader_control(make_state(35.0, VehicleMode.LEADER_RECOVERING),
                           500.0, 35.0, None, False, PARAMS)
        assert d.accel == 0.0
        assert "speed_ceiling" in d.active

    def test_recovering_head_respects_the_envelope(self):
        d = leader_control(make_state(30.0, VehicleMode.LEADER_RECOVERING),
                           -13.0, 6.0, 0.0, False, PARAMS)
        assert d.accel == -3.4
        assert "safety" in d.active

    def test_parked_head_behind_parked_pred_stays_split(self):
        # opening or steady at the floor reads as a floor conflict, which
        # is what keeps a parked pair from merging and re-arming deadlines
        d = leader_control(make_state(20.0, VehicleMode.LEADER), -9.0, -0.5,
                           0.0, False, PARAMS)
        assert d.accel == 0.0
        assert d.verdict is FeasibilityVerdict.FLOOR_CONFLICT

    def test_closing_head_reads_feasible_and_may_merge(self):
        d = leader_control(make_state(30.0, VehicleMode.LEADER), -40.0, 2.0,
                           0.0, False, PARAMS)
        assert d.verdict is FeasibilityVerdict.FEASIBLE


class TestModeMachine:
    F = VehicleMode.FOLLOWER
    L = VehicleMode.LEADER
    R = VehicleMode.FOLLOWER_DEADLINE_RELAXED
    REC = VehicleMode.LEADER_RECOVERING

    def test_follower_splits_to_leader(self):
        for verdict in (FeasibilityVerdict.FLOOR_CONFLICT,
                        FeasibilityVerdict.BRAKE_CONFLICT,
                        FeasibilityVerdict.DEADLINE_DRAG_CONFLICT):
            assert update_mode(self.F, verdict, -1.0, False, PARAMS) is self.L

    def test_follower_relaxes_deadline_in_place(self):
        out = update_mode(self.F, FeasibilityVerdict.DEADLINE_SAFETY_CONFLICT,
                          -1.0, False, PARAMS)
        assert out is self.R

    def test_follower_promoted_and_conflicted_recovers_as_head(self):
        out = update_mode(self.F, FeasibilityVerdict.DEADLINE_SAFETY_CONFLICT,
                          -1.0, True, PARAMS)
        assert out is self.REC

    def test_follower_at_the_head_slot_leads(self):
        out = update_mode(self.F, FeasibilityVerdict.FEASIBLE, -1.0, True,
                          PARAMS)
        assert out is self.L

    def test_follower_is_otherwise_sticky(self):
        out = update_mode(self.F, FeasibilityVerdict.FEASIBLE, -1.0, False,
                          PARAMS)
        assert out is self.F

    def test_relaxed_follower_recovers_when_split_or_promoted(self):
        assert update_mode(self.R, FeasibilityVerdict.FLOOR_CONFLICT, -1.0,
                           False, PARAMS) is self.REC
        assert update_mode(self.R, FeasibilityVerdict.FEASIBLE, -1.0,
                           True, PARAMS) is self.REC
        assert update_mode(self.R, FeasibilityVerdict.FEASIBLE, -1.0,
                           False, PARAMS) is self.R

    def test_recovery_graduates_on_comfortable_margin(self):
        assert update_mode(self.REC, FeasibilityVerdict.FEASIBLE,
                           -PARAMS.eps_d, False, PARAMS) is self.L
        assert update_mode(self.REC, FeasibilityVerdict.FEASIBLE,
                           -PARAMS.eps_d / 2.0, False, PARAMS) is self.REC

    def test_leader_is_sticky(self):
        out = update_mode(self.L, FeasibilityVerdict.BRAKE_CONFLICT, 5.0,
                          True, PARAMS)
        assert out is self.L
