"""Quantum channels for imperfect randomization gates: Kraus algebra, gate
fidelities, the gate-independent infidelity bound, and a calibrated qubit
dephasing model for the phase-randomization gates."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize

from .linalg import PAULI, SIGMA_X, SIGMA_Z, as_operator, dagger, hs_norm, identity
from .measurements import Povm, TargetMeasurement, tune

TRACE_PRESERVATION_ATOL = 1e-9

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
_QUADRATURE_NODES = 256


class KrausChannel:
    """Completely positive map rho -> sum_j K_j rho K_j^dag.

    By default construction enforces trace preservation sum K^dag K = I;
    Heisenberg-picture duals of non-unital channels may disable the check.
    """

    __slots__ = ("dim", "operators")

    def __init__(self, operators, trace_preserving: bool = True):
        ops = tuple(as_operator(k).copy() for k in operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        dim = ops[0].shape[0]
        if any(k.shape[0] != dim for k in ops):
            raise ValueError("Kraus operators have mixed dimensions")
        if trace_preserving:
            residual = hs_norm(sum(dagger(k) @ k for k in ops) - identity(dim))
            if residual > TRACE_PRESERVATION_ATOL:
                raise ValueError(
                    f"channel is not trace preserving (residual {residual:.3e})"
                )
        for k in ops:
            k.setflags(write=False)
        self.dim = dim
        self.operators = ops

    def __repr__(self):
        return f"<KrausChannel dim={self.dim} kraus={len(self.operators)}>"


def apply_channel(ch: KrausChannel, state) -> np.ndarray:
    state = as_operator(state)
    if state.shape[0] != ch.dim:
        raise ValueError(f"dimension mismatch: channel {ch.dim}, state {state.shape[0]}")
    out = np.zeros_like(state)
    for k in ch.operators:
        out += k @ state @ dagger(k)
    return out


def dual_channel(ch: KrausChannel) -> KrausChannel:
    """Heisenberg-picture adjoint, satisfying Tr[E(X) Y] = Tr[X E*(Y)]."""
    return KrausChannel([dagger(k) for k in ch.operators], trace_preserving=False)


def gate_independent_bound(eps: float, tau: float) -> float:
    """(sqrt(eps) + sqrt(tau))^2, clamped to at most 1."""
    if not (0.0 <= eps <= 1.0 and 0.0 <= tau <= 1.0):
        raise ValueError("eps and tau must lie in [0, 1]")
    return float(min(1.0, (np.sqrt(eps) + np.sqrt(tau)) ** 2))


def _bloch_map(ch: KrausChannel, target_unitary) -> tuple[np.ndarray, np.ndarray]:
    """Affine Bloch representation (T, t) of rho -> U^dag E(rho) U."""
    u = as_operator(target_unitary)
    t = np.zeros(3)
    tmat = np.zeros((3, 3))
    out_i = dagger(u) @ apply_channel(ch, identity(2) / 2) @ u
    for j, sj in enumerate(PAULI):
        t[j] = np.real(np.trace(sj @ out_i))
        for i, si in enumerate(PAULI):
            out = dagger(u) @ apply_channel(ch, si / 2) @ u
            tmat[j, i] = np.real(np.trace(sj @ out))
    return tmat, t


def _fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n)
    z = 1.0 - 2.0 * (k + 0.5) / n
    phi = np.pi * (1.0 + np.sqrt(5.0)) * k
    s = np.sqrt(1.0 - z * z)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def min_gate_fidelity(ch: KrausChannel, target_unitary) -> float:
    """Worst pure-state fidelity min_psi <psi|U^dag E(|psi><psi|) U|psi>.

    Qubits get the exact path: a 10^4-point Bloch grid followed by local
    refinement of the quadratic form. Higher dimensions fall back to sampled
    minimization and are flagged approximate.
    """
    if ch.dim == 2:
        tmat, t = _bloch_map(ch, target_unitary)

        def fidelity_of(r):
            return 0.5 * (1.0 + r @ (tmat @ r) + t @ r)

        grid = _fibonacci_sphere(10**4)
        values = 0.5 * (1.0 + np.einsum("ki,ij,kj->k", grid, tmat, grid) + grid @ t)
        r0 = grid[int(np.argmin(values))]
        theta0 = np.arccos(np.clip(r0[2], -1.0, 1.0))
        phi0 = np.arctan2(r0[1], r0[0])

        def on_sphere(angles):
            th, ph = angles
            r = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
            return fidelity_of(r)

        res = minimize(on_sphere, np.array([theta0, phi0]), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
        return float(min(values.min(), res.fun))

    warnings.warn("min_gate_fidelity beyond qubits is a sampled approximation",
                  stacklevel=2)
    u = as_operator(target_unitary)
    rng = np.random.default_rng(0)
    best = np.inf
    d = ch.dim
    for _ in range(2000):
        psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        psi /= np.linalg.norm(psi)
        out = dagger(u) @ apply_channel(ch, np.outer(psi, psi.conj())) @ u
        best = min(best, float(np.real(np.vdot(psi, out @ psi))))
    return best


def average_gate_fidelity(ch: KrausChannel, target_unitary) -> float:
    """Haar-average pure-state fidelity (d F_pro + 1)/(d + 1) with the process
    fidelity F_pro = sum_j |Tr(U^dag K_j)|^2 / d^2."""
    u = as_operator(target_unitary)
    if u.shape[0] != ch.dim:
        raise ValueError("channel and target unitary dimensions differ")
    d = ch.dim
    f_pro = sum(abs(np.trace(dagger(u) @ k)) ** 2 for k in ch.operators) / d**2
    return float((d * f_pro + 1.0) / (d + 1.0))


@dataclass(frozen=True)
class DephasingGateModel:
    """Dephasing accumulated by the phase-randomization gate.

    ``gamma_total`` is the coherence-decay exponent for a full 2*pi rotation;
    a gate of angle theta costs Gamma(theta) = gamma_total * theta / (2*pi),
    matching a constant-rate Hamiltonian implementation. ``axis`` selects the
    sigma_z or sigma_x gate generator.
    """

    gamma_total: float
    axis: str = "z"

    def __post_init__(self):
        if self.gamma_total < 0:
            raise ValueError("gamma_total must be nonnegative")
        if self.axis not in ("z", "x"):
            raise ValueError("axis must be 'z' or 'x'")

    def gamma_at(self, theta: float) -> float:
        return self.gamma_total * theta / (2.0 * np.pi)


def phase_gate(theta: float, axis: str = "z") -> np.ndarray:
    """Unitary diag(1, e^{i theta}) in the z (or Hadamard-rotated x) basis."""
    u = np.diag([1.0, np.exp(1j * theta)]).astype(complex)
    if axis == "x":
        u = _HADAMARD @ u @ _HADAMARD
    return u


def dephased_phase_gate(m: DephasingGateModel, theta: float) -> KrausChannel:
    """Noisy phase gate: unitary rotation with coherence shrunk by e^{-Gamma(theta)}.

    Kraus pair {sqrt(a) U_theta, sqrt(1-a) sigma_axis U_theta} with
    a = (1 + e^{-Gamma})/2, so off-diagonal entries in the gate basis pick up
    the factor e^{i theta} e^{-Gamma(theta)}.
    """
    theta = float(theta)
    if not 0.0 <= theta < 2.0 * np.pi:
        raise ValueError("theta must lie in [0, 2*pi)")
    gamma = m.gamma_at(theta)
    a = (1.0 + np.exp(-gamma)) / 2.0
    u = phase_gate(theta, m.axis)
    sigma = SIGMA_Z if m.axis == "z" else SIGMA_X
    return KrausChannel([np.sqrt(a) * u, np.sqrt(1.0 - a) * (sigma @ u)])


def _theta_quadrature(nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule on [0, 2*pi), weights normalized to mean 1.

    The decay factor e^{-Gamma(theta)} is not periodic in theta, so a
    Gauss rule is used instead of the periodic trapezoid; for these analytic
    integrands it is exact to machine precision at far fewer nodes.
    """
    x, w = np.polynomial.legendre.leggauss(nodes or _QUADRATURE_NODES)
    theta = np.pi * (x + 1.0)
    weights = w / 2.0
    return theta, weights


def mean_average_gate_fidelity(m: DephasingGateModel, nodes: int | None = None) -> float:
    """Average of average_gate_fidelity(E_theta, U_theta) over theta in [0, 2*pi)."""
    theta, weights = _theta_quadrature(nodes)
    total = 0.0
    for th, wt in zip(theta, weights):
        total += wt * average_gate_fidelity(dephased_phase_gate(m, th), phase_gate(th, m.axis))
    return float(total)


def calibrate_dephasing(eps_target: float, axis: str = "z") -> DephasingGateModel:
    """Find gamma_total so the theta-averaged gate fidelity is 1 - eps_target/10."""
    eps_target = float(eps_target)
    if not 0.0 < eps_target < 1.0:
        raise ValueError("eps_target must lie in (0, 1)")
    goal = 1.0 - eps_target / 10.0

    def gap(gamma):
        return mean_average_gate_fidelity(DephasingGateModel(gamma, axis)) - goal

    hi = 1.0
    while gap(hi) > 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise RuntimeError("failed to bracket the dephasing calibration root")
    gamma = brentq(gap, 0.0, hi, xtol=1e-14, rtol=8.9e-16)
    return DephasingGateModel(float(gamma), axis)


def noisy_tuned_observable(
    target: TargetMeasurement, lab: Povm, m: DephasingGateModel,
    nodes: int | None = None,
) -> Povm:
    """Tuned POVM when the randomization gates dephase: E_theta[E_theta*(M_i)].

    The noisy gate is built in the target's own basis, so the gamma_total = 0
    limit reduces exactly to tune(). Qubit targets only.
    """
    if target.dim != 2 or lab.dim != 2:
        raise ValueError("the dephasing model applies to qubit measurements")
    if m.gamma_total == 0.0:
        return tune(target, lab)
    v = target.basis
    theta, weights = _theta_quadrature(nodes)
    sigma = np.diag([1.0, -1.0]).astype(complex)
    out = []
    for element in lab:
        mt = dagger(v) @ element @ v
        acc = np.zeros_like(mt)
        for th, wt in zip(theta, weights):
            gamma = m.gamma_at(th)
            a = (1.0 + np.exp(-gamma)) / 2.0
            u = np.diag([1.0, np.exp(1j * th)])
            # Heisenberg action of the noisy gate on the POVM element
            back = dagger(u) @ (a * mt + (1.0 - a) * (sigma @ mt @ sigma)) @ u
            acc += wt * back
        out.append(v @ acc @ dagger(v))
    return Povm(out)
