import numpy as np
import pytest
from scipy import stats

from insertrl.curriculum import (
    CurriculumState,
    SchedulePolicy,
    action_scale,
    advance_task,
    max_curriculum,
    sample_start_offset,
)

MOVING = SchedulePolicy(
    n_stages=8,
    window=50,
    threshold=0.8,
    pose_rand_max=(0.03, 0.005, 0.0),
    rand_stages=4,
    socket_speed_max=0.025,
    action_scale_start=(0.01, 0.01, 0.1),
    action_scale_max=(0.08, 0.08, 0.5),
    action_growth=2.0,
)


def full_window(state, rate):
    n = state.policy.window
    k = round(rate * n)
    for i in range(n):
        state.record_episode(i < k)
    return state


class TestAdvance:
    def test_below_threshold_unchanged(self):
        s = full_window(CurriculumState(MOVING), 0.5)
        s2 = advance_task(s)
        assert s2.stage == 0 and s2 is s

    def test_partial_window_never_advances(self):
        s = CurriculumState(MOVING)
        for _ in range(MOVING.window - 1):
            s.record_episode(True)
        assert advance_task(s).stage == 0

    def test_advance_on_success(self):
        s = full_window(CurriculumState(MOVING), 0.9)
        s2 = advance_task(s)
        assert s2.stage == 1
        assert len(s2.success_window) == 0  # fresh evidence required

    def test_terminal_stage_reaches_paper_caps(self):
        s = max_curriculum(MOVING)
        assert s.pose_rand == pytest.approx(MOVING.pose_rand_max)
        assert s.socket_speed == pytest.approx(0.025)  # 2.5 cm/s cap
        assert tuple(s.action_bounds) == MOVING.action_scale_max

    def test_randomization_phase_before_speed_phase(self):
        # replay the whole schedule: pose_rand must hit its cap before
        # socket_speed leaves zero, and every field is monotone
        s = CurriculumState(MOVING)
        trace = [s.snapshot()]
        while not s.at_max:
            s = advance_task(full_window(s, 1.0))
            trace.append(s.snapshot())
        stages = [t["stage"] for t in trace]
        assert stages == list(range(MOVING.n_stages + 1))
        for a, b in zip(trace, trace[1:]):
            assert all(y >= x for x, y in zip(a["pose_rand"], b["pose_rand"]))
            assert b["socket_speed"] >= a["socket_speed"]
            assert all(y >= x for x, y in zip(a["action_scale"], b["action_scale"]))
            assert b["offset_bound_b"] >= a["offset_bound_b"]
        for t in trace:
            if t["socket_speed"] > 0:
                assert t["pose_rand"] == pytest.approx(list(MOVING.pose_rand_max))

    def test_caps_never_exceeded(self):
        s = CurriculumState(MOVING)
        for _ in range(MOVING.n_stages + 3):
            s = advance_task(full_window(s, 1.0))
            assert all(p <= m for p, m in zip(s.pose_rand, MOVING.pose_rand_max))
            assert s.socket_speed <= MOVING.socket_speed_max
            assert np.all(s.action_bounds <= np.array(MOVING.action_scale_max))
        assert s.stage == MOVING.n_stages


class TestActionScale:
    def test_stage_zero_is_start(self):
        assert action_scale(0, (0.01,), 2.0, (0.08,)) == (0.01,)

    def test_exponential_then_cap(self):
        assert action_scale(1, (0.01,), 2.0, (0.08,)) == (0.02,)
        assert action_scale(2, (0.01,), 2.0, (0.08,)) == (0.04,)
        assert action_scale(3, (0.01,), 2.0, (0.08,)) == (0.08,)

    def test_large_k_exactly_max(self):
        assert action_scale(60, (0.01,), 2.0, (0.08,)) == (0.08,)

    def test_growth_validation(self):
        with pytest.raises(ValueError):
            action_scale(1, (0.01,), 1.0, (0.08,))


class TestStartOffset:
    def test_zero_bound(self):
        assert sample_start_offset(0.0, np.random.default_rng(0)) == (0.0, 0.0)

    def test_within_bound(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            dx, dy = sample_start_offset(0.005, rng)
            assert abs(dx) <= 0.005 and abs(dy) <= 0.005

    def test_uniform_ks(self):
        rng = np.random.default_rng(2)
        b = 0.003
        draws = np.array([sample_start_offset(b, rng) for _ in range(100_000)])
        for axis in range(2):
            p = stats.kstest(draws[:, axis], stats.uniform(loc=-b, scale=2 * b).cdf).pvalue
            assert p > 0.01

    def test_negative_bound_rejected(self):
        with pytest.raises(ValueError):
            sample_start_offset(-0.001, np.random.default_rng(0))


def test_policy_validation():
    with pytest.raises(ValueError):
        SchedulePolicy(threshold=0.0)
    with pytest.raises(ValueError):
        SchedulePolicy(action_growth=1.0)
    with pytest.raises(ValueError):
        SchedulePolicy(action_scale_start=(0.1, 0.1, 0.1), action_scale_max=(0.05, 0.05, 0.05))


def test_from_dict_roundtrip():
    p = SchedulePolicy.from_dict(
        {"n_stages": 4, "pose_rand_max": [0.01, 0.01, 0.0], "offset_bound_max": 0.002}
    )
    assert p.n_stages == 4
    assert p.pose_rand_max == (0.01, 0.01, 0.0)
    s = max_curriculum(p)
    assert s.offset_bound_b == pytest.approx(0.002)
