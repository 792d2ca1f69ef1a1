"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Criteria that encode external claims are asserted exactly as stated, at
their stated tolerances and runtime budgets; where a target value turns
out to be irreproducible under the model equations, the test stays
faithful and fails loudly rather than bending the assertion, and its
failure message summarizes the measured evidence.

Heavy shared work (the 100-record chemostat batch) is computed once per
session. Compilation warm-up happens before any timed section.
"""
import math
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

import chaoscope as cs
from chaoscope.jobs import JobStore
from chaoscope.sampler import batch_csv, mh_walk, sigmoid
from chaoscope.service import create_app

from oracles import two_trajectory_mle


def report(num: int, ok: bool, detail: str) -> bool:
    print(f"ACCEPTANCE {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def _warm(system, dt=0.01):
    sample = cs.SamplePoint.of(system, system.default_params(),
                               system.default_initial_state())
    cs.spectrum_from_config(system, sample, cs.LyapunovConfig(
        t0_horizon=5 * dt, dt=dt, max_doublings=1))


# -- 1: exact linear spectrum -------------------------------------------------

def test_c01_exact_spectrum_linear_system(lin2):
    _warm(lin2, dt=1e-3)
    s = cs.SamplePoint.of(lin2, lin2.default_params(), (1.0, 1.0))
    t0 = time.monotonic()
    lr = cs.spectrum_with_doubling(lin2, s, 100.0, cs.IntegrationConfig(dt=1e-3))
    elapsed = time.monotonic() - t0
    err = max(abs(lr.spectrum[0] + 1.0), abs(lr.spectrum[1] + 2.0))
    ok = report(1, err < 1e-6 and elapsed < 1.0,
                f"spectrum={tuple(round(v, 9) for v in lr.spectrum)} err={err:.2e} "
                f"runtime={elapsed:.2f}s")
    assert ok


# -- 2: Lorenz validation against the two-trajectory oracle -------------------

def test_c02_lorenz_mle_band_and_sum_conservation(lorenz):
    _warm(lorenz, dt=1e-3)
    s = cs.SamplePoint.of(lorenz, lorenz.default_params(), (1.0, 1.0, 1.0))
    t0 = time.monotonic()
    spec = cs.spectrum_fixed_T(lorenz, s, 500.0, cs.IntegrationConfig(dt=1e-3))
    p = lorenz.default_params()
    oracle_mle = two_trajectory_mle(
        lambda t, y: lorenz.rhs(t, y, p), (1.0, 1.0, 1.0), T=500.0)
    elapsed = time.monotonic() - t0
    expected_sum = -(10.0 + 1.0 + 8.0 / 3.0)
    sum_ok = abs(float(spec.sum()) - expected_sum) <= 0.02 * abs(expected_sum)
    band_ok = 0.8 <= spec[0] <= 1.0 and 0.8 <= oracle_mle <= 1.0
    agree_ok = abs(spec[0] - oracle_mle) < 0.1
    ok = report(2, band_ok and sum_ok and agree_ok and elapsed < 30.0,
                f"mle={spec[0]:.4f} oracle={oracle_mle:.4f} "
                f"sum={float(spec.sum()):.4f} (target {expected_sum:.3f}) "
                f"runtime={elapsed:.1f}s")
    assert ok


# -- 3: canonical forced double-Monod chaos point ------------------------------

def test_c03_paper_chaos_point_classifies_chaotic(kot):
    _warm(kot)
    sample = cs.kot_paper_sample(kot)
    t0 = time.monotonic()
    lr = cs.spectrum_with_doubling(kot, sample, 500.0, cs.IntegrationConfig(dt=0.01))
    div = cs.divergence_at(kot, sample)
    verdict = cs.classify(div, lr)
    elapsed = time.monotonic() - t0
    ok = report(3, verdict == cs.CHAOTIC and elapsed < 60.0,
                f"verdict={verdict} div={div:+.4f} mle={lr.mle:+.4f} "
                f"converged={lr.converged} runtime={elapsed:.1f}s")
    assert ok, (
        "the trace of the Jacobian at this initial point is positive "
        "(+1.5889, verified analytically and by finite differences), so the "
        "contraction screen rejects a point whose top exponent is positive"
    )


# -- 4: second reported chaotic sample ----------------------------------------

def test_c04_sampled_point_positive_mle(kot):
    _warm(kot)
    p = kot.default_params().copy()
    p[kot.param_index("eps")] = 0.4809
    p[kot.param_index("omega")] = 1.9109
    sample = cs.SamplePoint.of(kot, p, (0.3878, 0.7866, 0.8875))
    t0 = time.monotonic()
    lr = cs.spectrum_with_doubling(kot, sample, 500.0, cs.IntegrationConfig(dt=0.01))
    elapsed = time.monotonic() - t0
    ok = report(4, lr.mle > 0.0 and elapsed < 60.0,
                f"mle={lr.mle:+.4f} converged={lr.converged} "
                f"spectrum={tuple(round(v, 4) for v in lr.spectrum)} runtime={elapsed:.1f}s")
    assert ok, (
        "this configuration settles onto a forcing-locked periodic orbit: "
        "the top exponent converges to about -0.086 for every horizon from "
        "25 to 1600 time units and for every nearby initial condition tried"
    )


# -- 5: sampler concentrates on the positive region of a test target ----------

def test_c05_sampler_positive_region_fraction():
    box = cs.SearchBox((
        cs.BoxCoord("x", -5.0, 5.0),
        cs.BoxCoord("y", -5.0, 5.0),
    ))
    t0 = time.monotonic()
    hits = 0
    for seed in range(200):
        cfg = cs.MHConfig(steps=1000, alpha_max=20.0, seed=seed)
        vec, _, _ = mh_walk(lambda v: math.sin(v[0]) * math.sin(v[1]), box, cfg)
        if math.sin(vec[0]) * math.sin(vec[1]) > 0:
            hits += 1
    elapsed = time.monotonic() - t0
    frac = hits / 200.0
    ok = report(5, frac >= 0.95 and elapsed < 10.0,
                f"positive-region fraction={frac:.3f} runtime={elapsed:.1f}s")
    assert ok


# -- 6 and 7 share one 100-record batch ---------------------------------------

KOT_BATCH_MH = dict(steps=300, phase1_steps=120, alpha_max=20.0, seed=2025)
KOT_BATCH_LYAP = dict(t0_horizon=40.0, dt=0.02, max_doublings=3)


@pytest.fixture(scope="module")
def kot_batch(kot, kot_box):
    _warm(kot, dt=0.02)
    cfg = cs.MHConfig(**KOT_BATCH_MH)
    lcfg = cs.LyapunovConfig(**KOT_BATCH_LYAP)
    t0 = time.monotonic()
    records = cs.sample_batch(kot, kot_box, 100, cfg, lcfg, workers=2)
    elapsed = time.monotonic() - t0
    print(f"[kot batch: k=100 in {elapsed:.0f}s, "
          f"{sum(r.phase == 'success' for r in records)} successes]")
    return records


def test_c06_two_phase_soundness(kot_batch):
    eps_zero = cs.LyapunovConfig(**KOT_BATCH_LYAP).eps_zero
    successes = [r for r in kot_batch if r.phase == "success"]
    violations = [
        r for r in successes
        if not (r.divergence < 0 and r.lyapunov.mle > eps_zero and r.lyapunov.converged)
    ]
    ok = report(6, len(kot_batch) == 100 and not violations and len(successes) > 0,
                f"records={len(kot_batch)} successes={len(successes)} "
                f"invariant violations={len(violations)}")
    assert ok


def test_c07_omega_clustering(kot_batch, kot_box):
    omega_idx = list(kot_box.labels()).index("omega")
    omegas = [r.coords[omega_idx] for r in kot_batch if r.phase == "success"]
    midpoint = 2.25
    median = float(np.median(omegas)) if omegas else math.nan
    ok = report(7, len(omegas) >= 10 and median < midpoint,
                f"successes={len(omegas)} median_omega={median:.3f} midpoint={midpoint}")
    assert ok, (
        "the chaotic set of this system inside the stated search box lives at "
        "driving frequencies near 2.3-3.3 (rigorous long-horizon sweep: median "
        "about 2.6), so a faithful sampler cannot place the median below 2.25"
    )


# -- 8: chemostat grid positivity ----------------------------------------------

def test_c08_becks_grid_classified_chaotic(becks):
    _warm(becks, dt=1e-3)
    lcfg = cs.LyapunovConfig(t0_horizon=250.0, dt=1e-3, max_doublings=6)
    p0 = becks.default_params()
    d_idx = becks.param_index("D")
    t0 = time.monotonic()
    outcomes = []
    for n_init in np.linspace(0.1, 1.0, 4):
        for d_val in np.linspace(0.3, 2.0, 4):
            p = p0.copy()
            p[d_idx] = d_val
            # predator-bearing inoculum: tiny prey pools plus 5e-6 predator,
            # which keeps the trace negative at every grid point
            sample = cs.SamplePoint.of(becks, p, (1e-6, 1e-6, 5e-6, float(n_init)))
            lr = cs.spectrum_from_config(becks, sample, lcfg)
            div = cs.divergence_at(becks, sample)
            outcomes.append(cs.classify(div, lr, lcfg.eps_zero))
    elapsed = time.monotonic() - t0
    frac = outcomes.count(cs.CHAOTIC) / len(outcomes)
    ok = report(8, frac >= 0.9 and elapsed < 600.0,
                f"chaotic fraction={frac:.2f} ({outcomes.count(cs.CHAOTIC)}/16) "
                f"runtime={elapsed:.0f}s")
    assert ok, (
        "positive exponents hold only on the dilution band up to about 1.2 "
        "(matching the bifurcation evidence); the 1.43 and 2.0 columns converge "
        "to negative top exponents, capping the fraction near 0.5"
    )


# -- 9: bifurcation window spread ----------------------------------------------

def test_c09_bifurcation_spread_at_d09(becks):
    _warm(becks, dt=1e-3)
    p = becks.default_params().copy()
    p[becks.param_index("D")] = 0.9
    base = cs.SamplePoint.of(becks, p, becks.default_initial_state())
    cfg = cs.BifurcationConfig(param_name="D", lo=0.9, hi=1.0, n_param_points=1,
                               t_total=7500.0, window_start=7000.0, window_samples=500,
                               observables=("R",))
    t0 = time.monotonic()
    res = cs.bifurcation_scan(becks, base, cfg, cs.IntegrationConfig(dt=1e-3))
    elapsed = time.monotonic() - t0
    cell = res.cells[0]
    assert not cell.flagged, f"scan blew up: {cell.reason}"
    vals = np.sort(np.array(cell.values))
    gap = 1e-3 * (vals[-1] - vals[0])
    count, last = 0, -np.inf
    for v in vals:
        if v - last > gap:
            count += 1
            last = v
    ok = report(9, count >= 50 and elapsed < 120.0,
                f"separated values={count} window range={vals[-1] - vals[0]:.3e} "
                f"runtime={elapsed:.0f}s")
    assert ok


# -- 10: batch determinism across worker counts --------------------------------

def test_c10_batch_determinism_workers(kot, kot_box):
    _warm(kot, dt=0.02)
    cfg = cs.MHConfig(steps=20, phase1_steps=8, seed=31415)
    lcfg = cs.LyapunovConfig(t0_horizon=10.0, dt=0.02, max_doublings=2)
    csvs = {}
    for workers in (1, 8):
        records = cs.sample_batch(kot, kot_box, 8, cfg, lcfg, workers=workers)
        csvs[workers] = batch_csv(kot_box, records).encode()
    ok = report(10, csvs[1] == csvs[8],
                f"bytes(workers=1)={len(csvs[1])} identical={csvs[1] == csvs[8]}")
    assert ok


# -- 11: service lifecycle, refine, restart durability --------------------------

def test_c11_service_lifecycle_and_durability(tmp_path):
    box = [
        {"name": "eps", "lo": 0.0, "hi": 1.0},
        {"name": "omega", "lo": 0.5, "hi": 4.0},
        {"name": "ic.x", "lo": 0.1, "hi": 1.0},
    ]
    request = {
        "kind": "sample_batch",
        "system_id": "kot_monod",
        "box": box,
        "k": 10,
        "mh_config": {"steps": 15, "phase1_steps": 6, "seed": 99},
        "lyap_config": {"t0_horizon": 10.0, "dt": 0.02, "max_doublings": 2},
        "workers": 2,
    }
    store = JobStore(tmp_path, workers=2)
    client = TestClient(create_app(store=store))

    job_id = client.post("/api/jobs", json=request).json()["id"]
    doc = store.wait(job_id, timeout=300)
    rows = client.get(f"/api/jobs/{job_id}/samples").json()
    lifecycle_ok = doc["status"] == "done" and len(rows) == 10

    narrowed = [
        {"name": "eps", "lo": 0.25, "hi": 0.75},
        {"name": "omega", "lo": 1.0, "hi": 3.0},
        {"name": "ic.x", "lo": 0.1, "hi": 0.9},
    ]
    child = client.post(f"/api/jobs/{job_id}/refine", json={"box": narrowed}).json()["id"]
    store.wait(child, timeout=300)
    child_rows = client.get(f"/api/jobs/{child}/samples").json()
    bounds = {c["name"]: (c["lo"], c["hi"]) for c in narrowed}
    refine_ok = len(child_rows) == 10 and all(
        lo <= row[name] <= hi
        for row in child_rows for name, (lo, hi) in bounds.items()
    )

    parent_csv = (tmp_path / "jobs" / job_id / "results.csv").read_bytes()
    child_csv = (tmp_path / "jobs" / child / "results.csv").read_bytes()
    store.shutdown()

    store2 = JobStore(tmp_path, workers=2)
    client2 = TestClient(create_app(store=store2))
    durable_ok = (
        client2.get(f"/api/jobs/{job_id}").json()["status"] == "done"
        and client2.get(f"/api/jobs/{job_id}/results.csv").content == parent_csv
        and client2.get(f"/api/jobs/{child}/results.csv").content == child_csv
    )
    store2.shutdown()

    ok = report(11, lifecycle_ok and refine_ok and durable_ok,
                f"lifecycle={lifecycle_ok} refine_in_box={refine_ok} durable={durable_ok}")
    assert ok
