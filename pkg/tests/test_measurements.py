import itertools

import numpy as np
import pytest

from conftest import random_povm, random_target, random_unitary, rng
from randwit.linalg import I2, SIGMA_X, SIGMA_Z, dagger, hs_norm, identity
from randwit.measurements import (
    Povm,
    QubitObservableParams,
    TargetMeasurement,
    computational_target,
    fourier_target,
    infidelity,
    misalignment_gap,
    qubit_decompose,
    sandwich_check,
    sigma_x_target,
    sigma_z_target,
    tune,
    tune_discrete_fourier,
    tune_discrete_signs,
)


def brute_force_sign_average(target, lab):
    """Literal average over all 2^d diagonal sign-flip unitaries."""
    d = target.dim
    out = []
    for m in lab:
        acc = np.zeros_like(np.asarray(m))
        for signs in itertools.product([1.0, -1.0], repeat=d):
            u = (target.basis * np.array(signs)) @ dagger(target.basis)
            acc = acc + dagger(u) @ m @ u
        out.append(acc / 2**d)
    return out


def test_target_validation():
    with pytest.raises(ValueError, match="orthonormal"):
        TargetMeasurement(np.array([[1.0, 1.0], [0.0, 0.0]]), [1.0, -1.0])
    with pytest.raises(ValueError, match="outcomes"):
        TargetMeasurement(I2, [1.0])


def test_povm_validation():
    with pytest.raises(ValueError, match="sum to identity"):
        Povm([I2, I2])
    with pytest.raises(ValueError, match="positive semidefinite"):
        Povm([I2 + SIGMA_Z, -SIGMA_Z])


def test_infidelity_ideal_is_zero():
    target = sigma_z_target()
    assert infidelity(target, Povm.ideal(target)) == 0.0


def test_infidelity_swapped_outcomes():
    target = sigma_z_target()
    swapped = Povm([target.projector(1), target.projector(0)])
    assert infidelity(target, swapped) == 1.0


def test_infidelity_qubit_closed_form():
    # with n_z = 1 - 2 eps the infidelity equals eps exactly
    gen = rng(11)
    for _ in range(25):
        eps = gen.uniform(0.0, 0.5)
        nz = 1.0 - 2.0 * eps
        margin = 1.0 - abs(nz)
        nx = gen.uniform(-margin, margin) * 0.7
        p = gen.uniform(-1, 1) * (margin - abs(nx)) * 0.9
        params = QubitObservableParams(p, (nx, 0.0, nz))
        assert abs(infidelity(sigma_z_target(), params.to_povm()) - eps) < 1e-12


def test_infidelity_rejects_mismatch():
    target = sigma_z_target()
    with pytest.raises(ValueError, match="outcome"):
        infidelity(target, Povm([identity(2)]))


def test_qubit_decompose_projective():
    params = qubit_decompose(Povm.ideal(sigma_z_target()))
    assert abs(params.p) < 1e-14
    assert np.allclose(params.n, (0.0, 0.0, 1.0), atol=1e-14)
    params = qubit_decompose(Povm([I2 / 2, I2 / 2]))
    assert abs(params.p) < 1e-14
    assert np.allclose(params.n, (0.0, 0.0, 0.0), atol=1e-14)


def test_qubit_decompose_round_trip():
    gen = rng(12)
    for _ in range(50):
        n = gen.standard_normal(3)
        n *= gen.uniform(0, 0.9) / np.linalg.norm(n)
        p = gen.uniform(-1, 1) * (1.0 - np.linalg.norm(n))
        params = QubitObservableParams(float(p), tuple(n))
        back = qubit_decompose(params.to_povm())
        assert abs(back.p - params.p) < 1e-12
        assert np.allclose(back.n, params.n, atol=1e-12)


def test_qubit_decompose_rejects_other_dims():
    with pytest.raises(ValueError, match="dimension 2"):
        qubit_decompose(Povm.ideal(computational_target(3)))


def test_tune_qubit_keeps_commuting_part():
    params = QubitObservableParams(0.08, (0.3, -0.2, 0.8))
    tuned = tune(sigma_z_target(), params.to_povm())
    back = qubit_decompose(tuned)
    assert abs(back.p - 0.08) < 1e-12
    assert np.allclose(back.n, (0.0, 0.0, 0.8), atol=1e-12)


def test_tune_fixed_point_on_diagonal():
    target = sigma_z_target()
    diag = QubitObservableParams(0.1, (0.0, 0.0, 0.7)).to_povm()
    tuned = tune(target, diag)
    for a, b in zip(diag, tuned):
        assert np.max(np.abs(a - b)) < 1e-14


def test_tune_matches_sign_group_average():
    gen = rng(13)
    target = random_target(gen, 3)
    lab = random_povm(gen, 3)
    tuned = tune(target, lab)
    brute = brute_force_sign_average(target, lab)
    for a, b in zip(tuned, brute):
        assert np.max(np.abs(a - b)) < 1e-13


def test_tune_idempotent_and_valid():
    gen = rng(14)
    for d in (2, 3, 4):
        target = random_target(gen, d)
        lab = random_povm(gen, d)
        tuned = tune(target, lab)
        again = tune(target, tuned)
        for a, b in zip(tuned, again):
            assert np.max(np.abs(a - b)) < 1e-13
        assert hs_norm(sum(tuned.elements) - identity(d)) < 1e-12
        for m in tuned:
            assert np.linalg.eigvalsh(m).min() > -1e-12


def test_tune_preserves_infidelity_exactly():
    gen = rng(15)
    for d in (2, 3, 5):
        target = random_target(gen, d)
        lab = random_povm(gen, d)
        assert abs(infidelity(target, tune(target, lab))
                   - infidelity(target, lab)) < 1e-12


def test_qubit_param_ranges_at_fixed_infidelity():
    # |n_x|, |n_y| <= 2 sqrt(eps(1-eps)) and |p| <= 2 eps for feasible POVMs
    gen = rng(16)
    target = sigma_z_target()
    for _ in range(200):
        lab = random_povm(gen, 2)
        params = qubit_decompose(lab)
        eps = infidelity(target, lab)
        cap = 2.0 * np.sqrt(eps * (1.0 - eps))
        assert abs(params.n[0]) <= cap + 1e-9
        assert abs(params.n[1]) <= cap + 1e-9
        assert abs(params.p) <= 2.0 * eps + 1e-9
    # boundary saturation
    for eps in (0.02, 0.2):
        sat = QubitObservableParams(0.0, (2 * np.sqrt(eps * (1 - eps)), 0.0, 1 - 2 * eps))
        assert abs(infidelity(target, sat.to_povm()) - eps) < 1e-12


def test_discrete_signs_group_closure_d2():
    # the group generated by the two sign flips is the four diagonal +-1 matrices
    flips = [np.diag([-1.0, 1.0]), np.diag([1.0, -1.0])]
    group = {(1.0, 1.0)}
    frontier = [np.diag([1.0, 1.0])]
    while frontier:
        u = frontier.pop()
        for f in flips:
            v = f @ u
            key = (v[0, 0].real, v[1, 1].real)
            if key not in group:
                group.add(key)
                frontier.append(v)
    assert group == {(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)}


def test_discrete_signs_identity_element_unchanged():
    target = computational_target(4)
    scaled_identity = Povm([identity(4) / 4.0] * 4)
    tuned = tune_discrete_signs(target, scaled_identity)
    for a, b in zip(scaled_identity, tuned):
        assert np.max(np.abs(a - b)) < 1e-14


def test_discrete_signs_matches_tune():
    gen = rng(17)
    target = random_target(gen, 4)
    lab = random_povm(gen, 4)
    a = tune(target, lab)
    b = tune_discrete_signs(target, lab)
    for x, y in zip(a, b):
        assert np.max(np.abs(x - y)) < 1e-13


def test_discrete_signs_rejects_large_dimension():
    d = 21
    target = computational_target(d)
    with pytest.raises(ValueError, match="2\\^21"):
        tune_discrete_signs(target, Povm([identity(d) / d] * d))


def test_discrete_fourier_d2_two_element_average():
    target = sigma_z_target()
    gen = rng(18)
    lab = random_povm(gen, 2)
    tuned = tune_discrete_fourier(target, lab)
    expected = []
    u = np.diag([1.0, -1.0])
    for m in lab:
        expected.append((m + u @ m @ u) / 2.0)
    for a, b in zip(tuned, expected):
        assert np.max(np.abs(a - b)) < 1e-14
    ref = tune(target, lab)
    for a, b in zip(tuned, ref):
        assert np.max(np.abs(a - b)) < 1e-14


def test_discrete_fourier_diagonal_unchanged():
    target = computational_target(3)
    diag = Povm([np.diag([0.5, 0.2, 0.1]), np.diag([0.3, 0.5, 0.4]),
                 np.diag([0.2, 0.3, 0.5])])
    tuned = tune_discrete_fourier(target, diag)
    for a, b in zip(diag, tuned):
        assert np.max(np.abs(a - b)) < 1e-13


def test_discrete_fourier_matches_tune_d5():
    gen = rng(19)
    target = random_target(gen, 5)
    lab = random_povm(gen, 5)
    a = tune(target, lab)
    b = tune_discrete_fourier(target, lab)
    for x, y in zip(a, b):
        assert np.max(np.abs(x - y)) < 1e-12


def test_all_tunings_agree():
    gen = rng(20)
    for d in (2, 3, 4, 5):
        target = random_target(gen, d)
        lab = random_povm(gen, d)
        a, b, c = (f(target, lab) for f in (tune, tune_discrete_signs,
                                            tune_discrete_fourier))
        for x, y in zip(a, b):
            assert np.max(np.abs(x - y)) < 1e-13
        for x, y in zip(a, c):
            assert np.max(np.abs(x - y)) < 1e-12


def test_misalignment_gap_zero_tilt():
    target = sigma_z_target()
    lhs, rhs, eps = misalignment_gap(target, target.basis)
    assert lhs < 1e-12 and rhs < 1e-12 and eps < 1e-14


def test_misalignment_gap_qubit_tilt_saturates():
    target = sigma_z_target()
    for alpha in (0.05, 0.3, 0.8):
        c, s = np.cos(alpha), np.sin(alpha)
        basis = np.array([[c, -s], [s, c]], dtype=complex)
        lhs, rhs, eps = misalignment_gap(target, basis)
        assert abs(eps - np.sin(alpha) ** 2) < 1e-12
        assert abs(lhs - 2.0 * np.sqrt(2.0 * eps)) < 1e-9
        assert abs(lhs - rhs) < 1e-9


def test_misalignment_gap_random_d3():
    gen = rng(21)
    target = computational_target(3)
    for _ in range(500):
        basis = random_unitary(gen, 3)
        lhs, rhs, eps = misalignment_gap(target, basis)
        assert lhs >= rhs - 1e-10


def test_misalignment_gap_rejects_degenerate():
    target = TargetMeasurement(I2, [1.0, 1.0])
    with pytest.raises(ValueError, match="distinct"):
        misalignment_gap(target, I2)


def test_sandwich_check_cases():
    target = sigma_z_target()
    assert sandwich_check(target, Povm.ideal(target), 0.0)
    worst = QubitObservableParams(0.2, (0.0, 0.0, 0.8)).to_povm()  # 2e I + (1-2e) sz
    assert sandwich_check(target, worst, 0.1)
    with pytest.raises(ValueError, match="diagonal"):
        sandwich_check(target, Povm.ideal(sigma_x_target()), 0.0)


def test_sandwich_check_random_tuned():
    gen = rng(22)
    target = computational_target(4)
    for _ in range(200):
        lab = random_povm(gen, 4)
        tuned = tune(target, lab)
        eps = infidelity(target, tuned)
        assert sandwich_check(target, tuned, eps)


def test_fourier_target_is_unbiased():
    for d in (2, 3, 5):
        e = computational_target(d)
        f = fourier_target(d)
        overlaps = np.abs(dagger(e.basis) @ f.basis) ** 2
        assert np.max(np.abs(overlaps - 1.0 / d)) < 1e-12
