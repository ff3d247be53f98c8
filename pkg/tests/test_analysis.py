import math

import pytest

from platoonflow import FeasibilityVerdict, SimParams, TrajectoryRecord
from platoonflow.analysis import (
    brute_force_follower,
    check_ordering,
    check_safety,
    detect_formations,
    energy_summary,
    records_by_time,
    records_by_vehicle,
    summarize,
)
from platoonflow import solve_follower_control, VehicleMode, VehicleState

PARAMS = SimParams()


def rec(time=0.0, vehicle_id=1, platoon_id=1, p=0.0, v=25.0, accel=0.0,
        u=0.0, drag=0.0, gs_margin=-10.0, deadline_margin=-10.0,
        mode="follower"):
    return TrajectoryRecord(time=time, vehicle_id=vehicle_id,
                            platoon_id=platoon_id, p=p, v=v, accel=accel,
                            u=u, drag=drag, gs_margin=gs_margin,
                            deadline_margin=deadline_margin, mode=mode)


class TestGrouping:
    def test_snapshots_sort_front_to_back(self):
        rows = [rec(time=0.1, vehicle_id=1, p=50.0),
                rec(time=0.1, vehicle_id=2, p=80.0),
                rec(time=0.2, vehicle_id=1, p=52.0)]
        snaps = records_by_time(rows)
        assert list(snaps) == [0.1, 0.2]
        assert [r.vehicle_id for r in snaps[0.1]] == [2, 1]

    def test_histories_sort_by_time(self):
        rows = [rec(time=0.2, vehicle_id=7), rec(time=0.1, vehicle_id=7),
                rec(time=0.1, vehicle_id=9)]
        hist = records_by_vehicle(rows)
        assert [r.time for r in hist[7]] == [0.1, 0.2]
        assert set(hist) == {7, 9}


class TestAudits:
    def test_clean_trajectory_has_no_problems(self, short_run, params):
        assert check_ordering(short_run.trajectory) == []
        assert check_safety(short_run.trajectory, params) == []

    def test_ordering_flags_a_swap(self):
        rows = [rec(vehicle_id=1, p=100.0), rec(vehicle_id=2, p=100.0)]
        problems = check_ordering(rows)
        assert len(problems) == 1
        assert "not behind" in problems[0]

    def test_safety_flags_a_crushed_gap(self):
        rows = [rec(vehicle_id=1, p=100.0, v=20.0),
                rec(vehicle_id=2, p=99.0, v=20.0)]
        problems = check_safety(rows, PARAMS)
        assert len(problems) == 1
        assert "margin" in problems[0]


class TestFormations:
    def test_groups_tight_consecutive_pairs(self):
        snap = [rec(vehicle_id=1, p=100.0, v=20.0),
                rec(vehicle_id=2, p=95.0, v=20.0),
                rec(vehicle_id=3, p=90.0, v=20.0),
                rec(vehicle_id=4, p=60.0, v=20.0),
                rec(vehicle_id=5, p=55.0, v=20.0)]
        assert detect_formations(snap, PARAMS) == [(1, 2, 3), (4, 5)]

    def test_speed_mismatch_splits_the_partition(self):
        snap = [rec(vehicle_id=1, p=100.0, v=20.0),
                rec(vehicle_id=2, p=95.0, v=20.2)]
        assert detect_formations(snap, PARAMS) == [(1,), (2,)]

    def test_gap_slack_is_tolerated_up_to_the_band(self):
        snap = [rec(vehicle_id=1, p=100.0, v=20.0),
                rec(vehicle_id=2, p=95.0 - 0.09, v=20.0)]
        assert detect_formations(snap, PARAMS) == [(1, 2)]


class TestEnergy:
    def test_drag_square_integral_matches_hand_value(self):
        rows = [rec(time=0.0, drag=0.3), rec(time=0.1, drag=0.4),
                rec(time=0.2, drag=0.5)]
        assert energy_summary(rows)[1].drag_sq == pytest.approx(0.033)

    def test_positive_work_ignores_regeneration(self):
        rows = [rec(time=0.0, u=1.0, v=20.0),
                rec(time=0.1, u=-0.5, v=21.0),
                rec(time=0.2, u=2.0, v=22.0)]
        assert energy_summary(rows)[1].positive_work == pytest.approx(3.2)

    def test_single_sample_integrates_to_zero(self):
        out = energy_summary([rec(time=0.0, drag=0.9, u=3.0)])
        assert out[1].drag_sq == 0.0
        assert out[1].positive_work == 0.0


class TestBruteForce:
    def make_state(self, v):
        return VehicleState(vid=1, p=500.0, v=v, accel=0.0, spawn_time=0.0,
                            deadline=1e9, exit_pos=1750.0,
                            mode=VehicleMode.FOLLOWER, platoon_id=1)

    @pytest.mark.parametrize("v,p_hat,v_hat,pred,deadline", [
        (30.0, -20.0, 1.0, 0.0, False),
        (30.0, -20.0, -1.0, 0.0, False),
        (30.0, -13.0, 6.0, 0.0, True),
        (20.0, -20.0, -1.0, 0.0, False),
        (22.0, -6.0, -10.0, 0.0, False),
        (25.0, -20.0, -2.0, 0.0, True),
    ])
    def test_agrees_with_the_closed_form_solver(self, v, p_hat, v_hat,
                                                pred, deadline):
        oracle = brute_force_follower(v, p_hat, v_hat, pred, deadline, PARAMS)
        solved = solve_follower_control(self.make_state(v), p_hat, v_hat,
                                        pred, deadline, PARAMS)
        assert oracle.verdict is solved.verdict
        if oracle.verdict is FeasibilityVerdict.FEASIBLE:
            assert solved.accel == pytest.approx(oracle.accel, abs=1e-3)
        else:
            assert oracle.accel is None


class TestSummarize:
    def test_reports_counters_and_final_formations(self, short_run):
        out = summarize(short_run, SimParams(duration=40.0, seed=1))
        assert out["vehicles_spawned"] == short_run.metrics["spawned"]
        assert out["duration"] == pytest.approx(40.0)
        assert out["spawn_attempts"] == (short_run.metrics["spawned"]
                                         + short_run.metrics["discarded"])
        assert out["final_formation_count"] >= 0
        assert out["total_drag_sq_integral"] > 0.0
