"""Acceptance suite: one test per shipped criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -s`` to stream).

Criteria pin closed-form anchors, optimizer-oracle agreement, saturating
measurement families, the qudit capability sweep, tuning and misalignment
invariants, the gate-noise model, finite-shot behavior, visibility
thresholds, and byte-identical reruns.
"""

import time

import numpy as np
import pytest

from conftest import (
    random_near_ideal_povm,
    random_near_identity_channel,
    random_povm,
    random_target,
    random_unitary,
    rng,
)
from randwit.bounds import (
    LAB_BOUND_KNEE,
    bound_lab,
    bound_tuned,
    worst_lab_measurements,
    worst_tuned_measurements,
)
from randwit.linalg import I2
from randwit.measurements import (
    computational_target,
    infidelity,
    misalignment_gap,
    sandwich_check,
    sigma_x_target,
    sigma_z_target,
    tune,
    tune_discrete_fourier,
    tune_discrete_signs,
)
from randwit.noise import (
    DephasingGateModel,
    apply_channel,
    calibrate_dephasing,
    dephased_phase_gate,
    dual_channel,
    gate_independent_bound,
    mean_average_gate_fidelity,
    min_gate_fidelity,
    noisy_tuned_observable,
)
from randwit.optimizer import SearchConfig, worst_case_bound
from randwit.sampling import ShotPlan, estimate_witness
from randwit.scenarios import ScenarioConfig, emit_csv, run_scenario
from randwit.witnesses import (
    assemble_observable,
    certification_capability,
    expectation,
    two_qubit_xz_witness,
    xz_assignment,
)
from randwit.measurements import Povm
from test_noise import rk4_dephased_phase_gate


EPS_GRID = (0.001, 0.005, 0.01, 0.05, 0.1)


def report(number, label, detail=""):
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {number:>2} PASS {label}{suffix}", flush=True)


def argmin_state():
    phi = np.array([np.cos(np.pi / 8), np.sin(np.pi / 8)])
    vec = np.kron(phi, phi)
    return np.outer(vec, vec)


def test_criterion_01_closed_form_anchors():
    assert abs(bound_lab(0.005) - (-0.2793)) < 5e-4
    assert abs(bound_tuned(0.005) - (-0.00830)) < 5e-4
    assert bound_lab(LAB_BOUND_KNEE) == -1.0
    for eps in (0.500001, 0.6, 0.85, 1.0):
        assert bound_tuned(eps) == -1.0
    report(1, "closed-form anchors",
           f"B(0.005)={bound_lab(0.005):.5f}, Brand(0.005)={bound_tuned(0.005):.5f}")


def test_criterion_02_optimizer_matches_closed_forms():
    start = time.monotonic()
    w = two_qubit_xz_witness()
    cfg = SearchConfig(seed=2024)  # default restarts/tolerances
    worst_diff, worst_spread = 0.0, 0.0
    for eps in EPS_GRID:
        for mode, oracle in (("lab", bound_lab), ("tuned", bound_tuned)):
            est = worst_case_bound(w, eps, mode, cfg)
            worst_diff = max(worst_diff, abs(est.value - oracle(eps)))
            worst_spread = max(worst_spread, est.restart_spread)
            assert abs(est.value - oracle(eps)) < 1e-4
            assert est.restart_spread < 1e-5
    elapsed = time.monotonic() - start
    assert elapsed < 120.0
    report(2, "optimizer matches closed-form bounds",
           f"max|diff|={worst_diff:.2e}, max spread={worst_spread:.2e}, {elapsed:.0f}s")


def test_criterion_03_saturating_families():
    w = two_qubit_xz_witness()
    state = argmin_state()
    worst = 0.0
    for eps in EPS_GRID:
        mx, mz, _, _ = worst_lab_measurements(eps)
        value = expectation(assemble_observable(w, xz_assignment(w, mx, mz)), state)
        worst = max(worst, abs(value - bound_lab(eps)))
        assert abs(value - bound_lab(eps)) < 1e-9
        mx, mz, _, _ = worst_tuned_measurements(eps)
        value = expectation(assemble_observable(w, xz_assignment(w, mx, mz)), state)
        worst = max(worst, abs(value - bound_tuned(eps)))
        assert abs(value - bound_tuned(eps)) < 1e-9
    report(3, "saturating families reproduce the bounds", f"max|diff|={worst:.2e}")


def test_criterion_04_mub_sweep():
    start = time.monotonic()
    cfg = ScenarioConfig.build(
        "mub-sweep",
        {"dims": [2, 3, 4, 5, 6], "eps_grid": [0.005, 0.01, 0.05, 0.10]},
        seed=2024, jobs=2,
    )
    table = run_scenario(cfg)
    by_key = {(row[0], row[1], row[2]): row for row in table.rows}
    min_tuned_at_10 = 1.0
    for d in (2, 3, 4, 5, 6):
        for eps in (0.005, 0.01, 0.05, 0.10):
            lab = by_key[(d, eps, "lab")]
            tuned = by_key[(d, eps, "tuned")]
            assert tuned[4] >= lab[4] - 1e-9, (d, eps)
        capability = by_key[(d, 0.10, "tuned")][4]
        min_tuned_at_10 = min(min_tuned_at_10, capability)
        assert capability > 0.70, (d, capability)
    elapsed = time.monotonic() - start
    assert elapsed < 1800.0
    report(4, "qudit sweep: tuned capability dominates and stays above 70%",
           f"min tuned cap at 10% = {min_tuned_at_10:.3f}, {elapsed:.0f}s")


def test_criterion_05_tuning_invariants():
    gen = rng(2025)
    for trial in range(200):
        d = 2 + trial % 4
        target = random_target(gen, d)
        lab = random_povm(gen, d)
        tuned = tune(target, lab)
        assert abs(infidelity(target, tuned) - infidelity(target, lab)) < 1e-12
        signs = tune_discrete_signs(target, lab)
        fourier = tune_discrete_fourier(target, lab)
        for a, b in zip(tuned, signs):
            assert np.max(np.abs(a - b)) < 1e-12
        for a, b in zip(tuned, fourier):
            assert np.max(np.abs(a - b)) < 1e-12
    for trial in range(1000):
        d = 2 + trial % 3
        target = random_target(gen, d)
        tuned = tune(target, random_povm(gen, d))
        assert sandwich_check(target, tuned, infidelity(target, tuned))
    report(5, "tuning invariants and the order-eps sandwich hold")


def test_criterion_06_misalignment_observation():
    gen = rng(2026)
    for trial in range(1000):
        d = 2 + trial % 3
        target = computational_target(d)
        basis = random_unitary(gen, d) @ target.basis
        lhs, rhs, eps = misalignment_gap(target, basis)
        assert lhs >= rhs - 1e-10
    # the qubit tilt family saturates the bound with equality
    target = sigma_z_target()
    for alpha in np.linspace(0.01, 1.4, 25):
        c, s = np.cos(alpha), np.sin(alpha)
        lhs, rhs, _ = misalignment_gap(target, np.array([[c, -s], [s, c]]))
        assert abs(lhs - rhs) < 1e-9
    report(6, "misalignment deviation bound holds; tilt family saturates it")


def test_criterion_07_gate_independent_bound():
    gen = rng(2027)
    worst_margin = -np.inf
    for _ in range(200):
        target = sigma_z_target()
        lab = random_near_ideal_povm(gen, target, strength=gen.uniform(0.05, 0.7))
        channel = random_near_identity_channel(gen, 2, strength=gen.uniform(0.02, 0.5))
        eps = infidelity(target, lab)
        tau = 1.0 - min_gate_fidelity(channel, I2)
        dual = dual_channel(channel)
        transported = Povm([apply_channel(dual, m) for m in lab])
        mu = infidelity(target, transported)
        bound = gate_independent_bound(eps, tau)
        worst_margin = max(worst_margin, mu - bound)
        assert mu <= bound + 1e-9
    report(7, "transported-measurement infidelity stays below (sqrt(e)+sqrt(t))^2",
           f"worst margin {worst_margin:.2e}")


def test_criterion_08_dephasing_model():
    worst_resid = 0.0
    for eps in EPS_GRID:
        model = calibrate_dephasing(eps)
        resid = abs(mean_average_gate_fidelity(model) - (1 - eps / 10))
        worst_resid = max(worst_resid, resid)
        assert resid < 1e-8
    # closed-form channel versus the master-equation integrator
    gen = rng(2028)
    model = DephasingGateModel(0.02)
    for theta in (0.6, np.pi, 5.1):
        channel = dephased_phase_gate(model, theta)
        propagate = rk4_dephased_phase_gate(model.gamma_total, theta, steps=6000)
        from conftest import random_density

        for _ in range(3):
            state = random_density(gen, 2)
            assert np.max(np.abs(apply_channel(channel, state)
                                 - propagate(state))) < 1e-8
    # suppression survives calibrated noise on the lab saturating family
    w = two_qubit_xz_witness()
    state = argmin_state()
    targets = {t.label: t for t in w.party_measurements(0)}
    for eps in EPS_GRID:
        mx, mz, _, _ = worst_lab_measurements(eps)
        lab_value = expectation(
            assemble_observable(w, xz_assignment(w, mx, mz)), state)
        model = calibrate_dephasing(eps)
        noisy = xz_assignment(
            w,
            noisy_tuned_observable(targets["x"], mx, model),
            noisy_tuned_observable(targets["z"], mz, model),
        )
        noisy_value = expectation(assemble_observable(w, noisy), state)
        assert abs(noisy_value) < abs(lab_value)
    report(8, "dephasing model calibrated; integrator agrees; suppression survives",
           f"max calibration residual {worst_resid:.1e}")


def test_criterion_09_sampling():
    start = time.monotonic()
    w = two_qubit_xz_witness()
    state = argmin_state()
    shots = 5000
    for k, eps in enumerate(EPS_GRID):
        mx, mz, _, _ = worst_lab_measurements(eps)
        a = xz_assignment(w, mx, mz)
        exact_lab = expectation(assemble_observable(w, a), state)
        exact_tuned = expectation(assemble_observable(w, a.tuned()), state)
        plain = estimate_witness(w, a, state, ShotPlan(shots, seed=300 + k))
        randomized = estimate_witness(
            w, a, state,
            ShotPlan(shots, seed=400 + k, randomization="continuous-phase"))
        assert abs(plain.mean - exact_lab) < 4 * plain.std_estimate
        assert abs(randomized.mean - exact_tuned) < 4 * randomized.std_estimate
        # no extra copy cost: the randomized run's error bar matches the
        # non-randomized route to the same tuned estimate
        direct = estimate_witness(w, a.tuned(), state,
                                  ShotPlan(shots, seed=500 + k))
        assert randomized.std_estimate < 2.0 * direct.std_estimate
        assert direct.std_estimate < 2.0 * randomized.std_estimate
        if eps == 0.005:
            # at the headline grid point the error bars also match the plain
            # laboratory run (at large eps the lab value saturates toward the
            # spectral edge and its variance collapses, see decision notes)
            assert randomized.std_estimate < 2.0 * plain.std_estimate
            assert plain.std_estimate < 2.0 * randomized.std_estimate
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    report(9, "5000-shot estimates track exact values at the same copy cost",
           f"{elapsed:.1f}s")


def test_criterion_10_visibility():
    from randwit.bounds import visibility_threshold

    w = two_qubit_xz_witness()
    for family in (worst_lab_measurements, worst_tuned_measurements):
        mx, mz, _, _ = family(0.0)
        a = xz_assignment(w, mx, mz)
        assert abs(visibility_threshold(w, a, 0.0) - 0.5) < 1e-12
        prev_lab, prev_tuned = 0.0, 0.0
        for eps in np.linspace(0.0, 0.1, 10):
            mx, mz, _, _ = family(eps)
            a = xz_assignment(w, mx, mz)
            v_lab = visibility_threshold(w, a, bound_lab(eps))
            v_tuned = visibility_threshold(w, a.tuned(), bound_tuned(eps))
            # uncertifiable points count as an infinite threshold
            v_lab = np.inf if v_lab is None else v_lab
            v_tuned = np.inf if v_tuned is None else v_tuned
            assert v_lab >= prev_lab - 1e-12
            assert v_tuned >= prev_tuned - 1e-12
            prev_lab, prev_tuned = v_lab, v_tuned
    report(10, "visibility thresholds start at 1/2 and grow with infidelity")


def test_criterion_11_determinism(tmp_path):
    outputs = []
    for name in ("one.csv", "two.csv"):
        cfg = ScenarioConfig.build(
            "sampling-fig2",
            {"eps_grid": [0.005, 0.05], "shots": 1500},
            seed=77, reproducible=True,
        )
        table = run_scenario(cfg)
        path = emit_csv(table, str(tmp_path / name))
        outputs.append(open(path, "rb").read())
    assert outputs[0] == outputs[1]
    cfg = ScenarioConfig.build("misalignment-audit", {"trials": 50, "dim": 3},
                               seed=78, reproducible=True)
    a = run_scenario(cfg)
    b = run_scenario(cfg)
    assert a.format_rows() == b.format_rows()
    report(11, "identical configs and seeds replay byte-identically")
