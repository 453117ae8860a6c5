"""Acceptance checks, one test per headline criterion.

Each test records a ``PASS``/``FAIL`` line with the measured value, the
threshold and the runtime; the lines are echoed at the end of the pytest
run (see conftest.py) and printed directly under ``pytest -s``.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from singletrack.cli import main as cli_main
from singletrack.core import Config, ControlInput, Measurement, VehicleParams, VelocityState
from singletrack.ekf import FilterEstimate, initial_estimate, step
from singletrack.metrics import horizon_error, horizon_predictions
from singletrack.models import discrete_jacobian, dynamic_discrete_step
from singletrack.paramid import (
    AxleLoads,
    PendulumSetup,
    cog_from_scale,
    cornering_stiffness,
    inertia_bifilar,
    period_for_inertia,
)
from singletrack.runner import run_estimate
from singletrack.sim import (
    NOISELESS,
    SensorNoise,
    circular_run_from_truth,
    lap,
    simulate,
    steady_circle,
    synthesize_sensors,
)

PARAMS = VehicleParams(m=4.0, l_v=0.18, l_h=0.18, J_z=0.05, C_v=50.0, C_h=50.0)
CFG = Config(PARAMS)
RESULTS: list[str] = []


def report(name, ok, detail, elapsed, limit=None):
    timing = f"{elapsed:.2f} s" + (f" (limit {limit:g} s)" if limit is not None else "")
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}; runtime {timing}"
    RESULTS.append(line)
    print(line)
    return ok


def check(name, ok, detail, elapsed, limit=None):
    within = limit is None or elapsed < limit
    assert report(name, ok and within, detail, elapsed, limit), detail


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst, h = 0.0, 1e-6
    for _ in range(1000):
        x = np.array([rng.uniform(0.5, 3), rng.uniform(-0.3, 0.3), rng.uniform(-3, 3)])
        u = ControlInput(rng.uniform(-0.4, 0.4), rng.uniform(-1, 1))
        jac = discrete_jacobian(VelocityState(*x), u, PARAMS, 0.005)
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fp = dynamic_discrete_step(VelocityState(*(x + e)), u, PARAMS, 0.005).as_array()
            fm = dynamic_discrete_step(VelocityState(*(x - e)), u, PARAMS, 0.005).as_array()
            fd = (fp - fm) / (2 * h)
            rel = np.abs(jac[:, j] - fd) / np.maximum(np.abs(fd), 1.0)
            worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - t0
    check("jacobian", worst < 1e-6, f"max relative error {worst:.2e} < 1e-6 over 1000 states", elapsed, 1.0)


def test_filter_health():
    n = 100_000
    rng = np.random.default_rng(99)
    vel = np.column_stack([rng.uniform(0.5, 3, n), rng.uniform(-0.3, 0.3, n), rng.uniform(-3, 3, n)]).tolist()
    inp = np.column_stack([rng.uniform(-0.4, 0.4, n), rng.uniform(-1, 1, n)]).tolist()
    meas = rng.normal(size=(n, 2)).tolist()
    Ps = np.empty((n, 3, 3))
    t0 = time.perf_counter()
    est = initial_estimate(CFG, VelocityState(1.5))
    for k in range(n):
        est = FilterEstimate(VelocityState(*vel[k]), est.pose, est.P, est.t)
        est = step(est, ControlInput(*inp[k]), Measurement(*meas[k]), CFG)
        Ps[k] = est.P
    asym = float(np.max(np.abs(Ps - Ps.transpose(0, 2, 1))))
    min_eig = float(np.linalg.eigvalsh(Ps).min())
    elapsed = time.perf_counter() - t0
    ok = asym < 1e-10 and min_eig > -1e-10
    check(
        "filter health",
        ok,
        f"max asymmetry {asym:.1e} < 1e-10, min eigenvalue {min_eig:.3e} > -1e-10 over {n} cycles",
        elapsed,
        10.0,
    )


def test_seven_step_horizon():
    t0 = time.perf_counter()
    truth = simulate(lap(PARAMS, 1.0, 0.25, 2.0), PARAMS, 0.0005)
    sensors = synthesize_sensors(truth, SensorNoise(seed=0), 0.005)
    run = run_estimate(sensors, CFG)
    truth5 = truth[::10][: len(run.rows)]
    stats = horizon_error(horizon_predictions(run.rows, truth5, 7, CFG.dt), truth5, 7)
    elapsed = time.perf_counter() - t0
    check(
        "7-step horizon",
        stats.mean_error < 1e-3,
        f"mean error {1e3 * stats.mean_error:.3f} mm < 1 mm (max {1e3 * stats.max_error:.3f} mm) at 1 m/s",
        elapsed,
        30.0,
    )


def test_dynamic_beats_kinematic():
    t0 = time.perf_counter()
    truth = simulate(lap(PARAMS, 2.0, 0.25, 2.0), PARAMS, 0.0005)
    beta_max = max(abs(math.atan2(r.vel.v_y, r.vel.v_x)) for r in truth)
    sensors = synthesize_sensors(truth, SensorNoise(seed=0), 0.005)
    dyn = run_estimate(sensors, CFG).closure.closure_per_meter
    kin = run_estimate(sensors, CFG, "kinematic").closure.closure_per_meter
    elapsed = time.perf_counter() - t0
    check(
        "dynamic vs kinematic",
        beta_max > 0.02 and dyn <= 0.5 * kin,
        f"closure/m dynamic {dyn:.2e} <= 0.5 x kinematic {kin:.2e} (ratio {dyn / kin:.2f}); "
        f"peak |beta| {beta_max:.3f} > 0.02 rad at 2 m/s",
        elapsed,
        30.0,
    )


def test_kinematic_limit():
    t0 = time.perf_counter()
    stiff = replace(PARAMS, C_v=PARAMS.C_v * 1000, C_h=PARAMS.C_h * 1000)
    # the stiff continuous model needs a small RK4 step to stay stable
    truth = simulate(steady_circle(1.0, 0.1, 0.5), stiff, 2e-5)
    r = truth[-1].vel.psi_dot
    expected = 1.0 * math.tan(0.1) / stiff.wheelbase
    rel = abs(r - expected) / expected
    elapsed = time.perf_counter() - t0
    check("kinematic limit", rel < 0.01, f"yaw rate {r:.5f} vs v tan(delta)/l {expected:.5f}, {100 * rel:.2f}% < 1%", elapsed)


def test_parameter_id_round_trip():
    t0 = time.perf_counter()
    truth = simulate(steady_circle(1.0, 0.2, 20.0), PARAMS, 0.0005)
    run = circular_run_from_truth(truth, PARAMS.l_v, PARAMS.l_h, 0.01, 0.0, NOISELESS)
    res = cornering_stiffness(run, PARAMS.m, PARAMS.l_v, PARAMS.l_h)
    ev, eh = abs(res.C_v / PARAMS.C_v - 1), abs(res.C_h / PARAMS.C_h - 1)
    elapsed = time.perf_counter() - t0
    check(
        "param-id round trip",
        ev < 0.10 and eh < 0.10,
        f"C_v {res.C_v:.2f} ({100 * ev:.1f}%), C_h {res.C_h:.2f} ({100 * eh:.1f}%) vs 50, limit 10%",
        elapsed,
        30.0,
    )


def test_bifilar_and_cog_oracles():
    t0 = time.perf_counter()
    worst = 0.0
    for J in (0.01, 0.05, 0.2):
        for D, L, m in ((0.2, 1.0, 4.0), (0.35, 0.6, 2.5)):
            T = period_for_inertia(J, D, L, m, 9.81)
            J_hat = inertia_bifilar(PendulumSetup(D, L, m, tuple(T * k for k in range(11))), 9.81)
            worst = max(worst, abs(J_hat / J - 1))
    g, m, l = 9.81, 4.0, 0.36
    cog_ok = True
    for l_h in (0.18, 0.12, 0.25):
        l_v = l - l_h
        got = cog_from_scale(AxleLoads(m * g * l_h / l, m * g * l_v / l), l, m, g)
        cog_ok &= got == pytest.approx((l_v, l_h), rel=1e-14, abs=1e-15)
    elapsed = time.perf_counter() - t0
    check(
        "bifilar and CoG",
        worst < 1e-3 and cog_ok,
        f"inertia max relative error {worst:.1e} < 1e-3; CoG reproduced: {cog_ok}",
        elapsed,
    )


def test_real_time_budget(tmp_path, capsys):
    import json

    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"params": PARAMS.as_dict()}))
    t0 = time.perf_counter()
    rc = cli_main(["estimate", "--config", str(cfg_path), "--bench"])
    out = capsys.readouterr().out
    elapsed = time.perf_counter() - t0
    fields = dict(line.split(": ", 1) for line in out.strip().splitlines())
    us = float(fields["bench_us_per_cycle"])
    with capsys.disabled():
        check("real-time budget", rc == 0 and us < 50.0, f"{us:.1f} us per predict+correct < 50 us", elapsed)


def test_integration_convergence():
    t0 = time.perf_counter()
    a = simulate(steady_circle(1.0, 0.2, 10.0), PARAMS, 0.0005)[-1].pose
    b = simulate(steady_circle(1.0, 0.2, 10.0), PARAMS, 0.00025)[-1].pose
    diff = math.hypot(a.X - b.X, a.Y - b.Y)
    elapsed = time.perf_counter() - t0
    check("integration convergence", diff < 1e-8, f"step-halving final-pose change {diff:.1e} m < 1e-8 m", elapsed)
