import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singletrack.errors import (
    DegenerateMarkers,
    InconsistentLoads,
    InputError,
    NoSteadyWindow,
    SlipTooSmall,
    TooFewCycles,
    TooFewSamples,
)
from singletrack.paramid import (
    AxleLoads,
    CircularRunData,
    CogSample,
    MarkerRecord,
    PendulumSetup,
    check_marker_separation,
    cog_from_scale,
    cog_track,
    cornering_stiffness,
    drift_angle_series,
    inertia_bifilar,
    lateral_cog,
    mean_period,
    period_for_inertia,
    steady_mask,
    stiffness_from_means,
)
from singletrack.sim import (
    NOISELESS,
    SensorNoise,
    circular_run_from_truth,
    markers_from_truth,
    simulate,
    steady_circle,
)

G = 9.81


@pytest.fixture(scope="module")
def circle_truth():
    from singletrack.core import VehicleParams

    params = VehicleParams(m=4.0, l_v=0.18, l_h=0.18, J_z=0.05, C_v=50.0, C_h=50.0)
    return params, simulate(steady_circle(1.0, 0.2, 20.0), params, 0.0005)


class TestCog:
    def test_symmetric(self):
        assert cog_from_scale(AxleLoads(2 * G, 2 * G), 0.36, 4.0, G) == pytest.approx((0.18, 0.18))

    def test_all_on_front(self):
        l_v, l_h = cog_from_scale(AxleLoads(4 * G, 0.0), 0.36, 4.0, G)
        assert l_h == pytest.approx(0.36)
        assert l_v == 0.0

    def test_hand_evaluation(self):
        l_v, l_h = cog_from_scale(AxleLoads(19.62, 19.62), 0.36, 4.0, 9.81)
        assert l_h == pytest.approx(19.62 * 0.36 / 39.24, rel=1e-15)
        assert l_h == pytest.approx(0.18)

    def test_inconsistent(self):
        with pytest.raises(InconsistentLoads):
            cog_from_scale(AxleLoads(20.0, 21.0), 0.36, 4.0, G)
        cog_from_scale(AxleLoads(20.0, 20.0), 0.36, 4.0, G)  # 1.9% off, accepted

    def test_negative_load(self):
        with pytest.raises(InputError):
            AxleLoads(-1.0, 40.0)

    @given(st.floats(0.0, 1.0), st.floats(0.1, 1.0), st.floats(0.5, 20.0))
    def test_sum_is_wheelbase(self, share, l, m):
        w = m * G
        front = share * w
        l_v, l_h = cog_from_scale(AxleLoads(front, w - front), l, m, G)
        assert l_v + l_h == pytest.approx(l, rel=1e-12)

    def test_lateral(self):
        assert lateral_cog(AxleLoads(2 * G, 2 * G, 1.5 * G, 2.5 * G), 0.2, 4.0, G) == pytest.approx(0.125)
        with pytest.raises(InputError):
            lateral_cog(AxleLoads(2 * G, 2 * G), 0.2, 4.0, G)


class TestPendulum:
    @pytest.mark.parametrize(
        "times, period",
        [([0, 2], 2.0), ([0, 2.0, 4.1, 5.9], 5.9 / 3), ([0, 1, 2, 3, 4], 1.0)],
    )
    def test_mean_period(self, times, period):
        assert mean_period(times) == pytest.approx(period, rel=1e-15)

    @pytest.mark.parametrize("times", [[], [1.0], [1.0, 1.0], [0.0, 2.0, 1.0]])
    def test_bad_cycles(self, times):
        with pytest.raises(TooFewCycles):
            mean_period(times)

    def test_zero_period_rejected(self):
        with pytest.raises(TooFewCycles):
            inertia_bifilar(PendulumSetup(0.2, 1.0, 4.0, (3.0, 3.0)), G)

    def test_hand_evaluation(self):
        J = inertia_bifilar(PendulumSetup(0.2, 1.0, 4.0, (0.0, 2.0)), 9.81)
        assert J == pytest.approx(4 * 9.81 * 0.04 * 4 / (16 * math.pi**2), rel=1e-15)
        assert J == pytest.approx(0.03976, rel=1e-3)

    def test_literal_constant(self):
        setup = PendulumSetup(0.2, 1.0, 4.0, (0.0, 2.0))
        ratio = inertia_bifilar(setup, G, literal=True) / inertia_bifilar(setup, G)
        assert ratio == pytest.approx(math.pi)

    def test_scaling(self):
        base = inertia_bifilar(PendulumSetup(0.2, 1.0, 4.0, (0.0, 2.0)), G)
        assert inertia_bifilar(PendulumSetup(0.2, 1.0, 4.0, (0.0, 4.0)), G) == pytest.approx(4 * base)
        assert inertia_bifilar(PendulumSetup(0.4, 1.0, 4.0, (0.0, 2.0)), G) == pytest.approx(4 * base)

    @given(
        st.floats(0.5, 10), st.floats(0.05, 1), st.floats(0.2, 3), st.floats(0.2, 5),
        st.sampled_from(["m", "D", "L", "T"]),
    )
    def test_monotone(self, m, D, L, T, which):
        def J(m=m, D=D, L=L, T=T):
            return inertia_bifilar(PendulumSetup(D, L, m, (0.0, T)), G)

        bumped = {"m": J(m=m * 1.1), "D": J(D=D * 1.1), "L": J(L=L * 1.1), "T": J(T=T * 1.1)}[which]
        if which == "L":
            assert bumped < J()
        else:
            assert bumped > J()

    def test_inverse_round_trip(self):
        T = period_for_inertia(0.05, 0.2, 0.8, 4.0, G)
        setup = PendulumSetup(0.2, 0.8, 4.0, tuple(T * k for k in range(11)))
        assert inertia_bifilar(setup, G) == pytest.approx(0.05, rel=1e-12)

    def test_setup_validation(self):
        with pytest.raises(InputError):
            PendulumSetup(0.0, 1.0, 4.0, (0.0, 1.0))


def marker(t, front, rear):
    return MarkerRecord(t, front, rear)


class TestCogTrack:
    def test_midpoint(self):
        out = cog_track([marker(i, (1.0 + i, 0.0), (float(i), 0.0)) for i in range(5)], 0.18, 0.18)
        assert (out[0].x, out[0].y, out[0].heading) == (0.5, 0.0, 0.0)

    def test_axis_aligned(self):
        out = cog_track([marker(i, (0.0, 1.0 + i), (0.0, float(i))) for i in range(5)], 0.18, 0.18)
        assert out[0].heading == pytest.approx(math.pi / 2)

    def test_asymmetric_axles(self):
        out = cog_track([marker(i, (1.0, 0.0), (0.0, 0.0)) for i in range(5)], 0.1, 0.3)
        assert out[0].x == pytest.approx(0.75)

    def test_degenerate(self):
        recs = [marker(i, (0.0, 0.0), (0.0, 0.0)) for i in range(5)]
        with pytest.raises(DegenerateMarkers):
            cog_track(recs, 0.18, 0.18)

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            cog_track([marker(0, (1.0, 0.0), (0.0, 0.0))], 0.18, 0.18)

    def test_time_must_increase(self):
        recs = [marker(t, (1.0, 0.0), (0.0, 0.0)) for t in (0, 1, 1, 2, 3)]
        with pytest.raises(InputError):
            cog_track(recs, 0.18, 0.18)

    def test_matches_generator(self, params):
        truth = simulate(steady_circle(1.0, 0.2, 3.0), params, 0.0005)
        markers = markers_from_truth(truth, params.l_v, params.l_h, 0.01)
        out = cog_track(markers, params.l_v, params.l_h)
        for c, r in zip(out, truth[::20]):
            assert math.hypot(c.x - r.pose.X, c.y - r.pose.Y) < 1e-9
            assert abs(c.heading - r.pose.psi) < 1e-9

    def test_separation_check(self):
        recs = [marker(0, (0.36, 0.0), (0.0, 0.0)), marker(1, (0.4, 0.0), (0.0, 0.0))]
        check_marker_separation(recs[:1], 0.36)
        with pytest.raises(InputError):
            check_marker_separation(recs, 0.36)


def straight_track(heading_offset=0.0, n=20):
    return [CogSample(0.01 * i, 0.01 * i, 0.0, heading_offset) for i in range(n)]


class TestDriftAngle:
    def test_no_drift(self):
        out = drift_angle_series(straight_track())
        assert len(out) == 20 - 2 * 3
        assert all(b == 0.0 for _, b in out)

    def test_constant_offset(self):
        # the velocity direction is 0.05 rad left of the body axis
        out = drift_angle_series(straight_track(-0.05))
        assert all(b == pytest.approx(0.05, abs=1e-15) for _, b in out)

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            drift_angle_series(straight_track(n=6), 5)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-math.pi, math.pi), st.floats(-50, 50), st.floats(-50, 50))
    def test_rigid_motion_invariance(self, theta, tx, ty):
        rng = np.random.default_rng(0)
        s = np.linspace(0, 2.0, 40)
        pts = np.column_stack([np.sin(s), 1 - np.cos(s)]) + rng.normal(0, 1e-3, (40, 2))
        heads = s + 0.07 + rng.normal(0, 0.01, 40)
        c, sn = math.cos(theta), math.sin(theta)
        base = [CogSample(t, x, y, h) for t, (x, y), h in zip(s, pts, heads)]
        moved = [
            CogSample(t, c * x - sn * y + tx, sn * x + c * y + ty, h + theta)
            for t, (x, y), h in zip(s, pts, heads)
        ]
        a, b = drift_angle_series(base), drift_angle_series(moved)
        for (_, ba), (_, bb) in zip(a, b):
            assert abs(math.remainder(ba - bb, 2 * math.pi)) < 1e-10

    def test_matches_simulated_sideslip(self, params):
        truth = simulate(steady_circle(1.0, 0.2, 6.0), params, 0.0005)
        markers = markers_from_truth(truth, params.l_v, params.l_h, 0.01)
        betas = drift_angle_series(cog_track(markers, params.l_v, params.l_h), 5)
        by_t = {round(r.t, 6): math.atan2(r.vel.v_y, r.vel.v_x) for r in truth[::20]}
        checked = 0
        for t, b in betas:
            if t > 2.0:
                assert abs(b - by_t[round(t, 6)]) < 0.005
                checked += 1
        assert checked > 300


class TestStiffness:
    def test_arithmetic_inversion(self):
        # l_h / l * m * a_y = 2.5 with m = 4, l_v = l_h: a_y = 1.25
        # front slip 0.2 - 0.05 - 0.1 = 0.05, rear slip -0.05 + 0.1 = 0.05
        res = stiffness_from_means(0.2, 0.05, 0.5, 0.9, 1.25, 4.0, 0.18, 0.18)
        assert res.F_sv == pytest.approx(2.5)
        assert res.alpha_v == pytest.approx(0.05)
        assert res.C_v == pytest.approx(50.0)
        assert res.C_h == pytest.approx(50.0)
        assert tuple(res) == (res.C_v, res.C_h)

    def test_rear_slip_too_small(self):
        with pytest.raises(SlipTooSmall) as info:
            stiffness_from_means(0.2, 0.0, 0.0, 1.0, 1.0, 4.0, 0.18, 0.18)
        assert info.value.axle == "rear"

    def test_front_slip_too_small(self):
        with pytest.raises(SlipTooSmall) as info:
            stiffness_from_means(0.1, 0.0, 0.5, 0.9, 1.0, 4.0, 0.18, 0.18)
        assert info.value.axle == "front"

    def test_full_force_form_reduces_to_small_angle(self):
        a = stiffness_from_means(0.2, 0.05, 0.5, 0.9, 1.25, 4.0, 0.18, 0.18)
        b = stiffness_from_means(0.2, 0.05, 0.5, 0.9, 1.25, 4.0, 0.18, 0.18, small_angle=False)
        # cos(delta - alpha_v) = cos(0.15)
        assert b.F_sv == pytest.approx(a.F_sv * math.cos(0.15))

    def test_steady_mask(self):
        t = np.arange(0, 6, 0.01)
        r = np.where(t < 3, np.sin(5 * t), 0.8)
        mask = steady_mask(t, r)
        assert not mask[t < 2.5].any()
        assert mask[t > 3.05].all()

    def test_no_steady_window(self):
        t = np.arange(0, 4, 0.01)
        recs = tuple(MarkerRecord(ti, (math.cos(ti) + 0.36, 0.0), (math.cos(ti), 0.0)) for ti in t)
        run = CircularRunData(recs, np.ones_like(t), np.sin(3 * t), np.ones_like(t), 0.2)
        with pytest.raises(NoSteadyWindow):
            cornering_stiffness(run, 4.0, 0.18, 0.18)

    def test_run_length_mismatch(self):
        with pytest.raises(InputError):
            CircularRunData((MarkerRecord(0.0, (1, 0), (0, 0)),), [1.0, 2.0], [1.0], [1.0], 0.1)

    def test_round_trip_noise_free(self, circle_truth):
        params, truth = circle_truth
        run = circular_run_from_truth(truth, params.l_v, params.l_h, 0.01, 0.0, NOISELESS)
        res = cornering_stiffness(run, params.m, params.l_v, params.l_h)
        assert res.C_v == pytest.approx(50.0, rel=0.10)
        assert res.C_h == pytest.approx(50.0, rel=0.10)
        assert res.n_samples > 1000

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_round_trip_marker_noise(self, circle_truth, seed):
        params, truth = circle_truth
        noise = SensorNoise(0.0, 0.0, 0.0, 0.0, seed=seed)
        run = circular_run_from_truth(truth, params.l_v, params.l_h, 0.01, 0.001, noise)
        res = cornering_stiffness(run, params.m, params.l_v, params.l_h)
        assert res.C_v == pytest.approx(50.0, rel=0.25)
        assert res.C_h == pytest.approx(50.0, rel=0.25)
