"""Closed-form worst-case separable bounds for the two-qubit x/z witness,
the measurement families that saturate them, the general linear bound, and
visibility thresholds."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .linalg import SIGMA_X, SIGMA_Z, identity
from .measurements import Povm
from .witnesses import (
    MeasurementAssignment,
    ProductTermWitness,
    assemble_observable,
    bell_phi_plus,
    expectation,
)

# Above this infidelity the lab-measurement bound saturates at -1.
LAB_BOUND_KNEE = (2.0 - np.sqrt(2.0)) / 4.0


class BoundCurvePoint(NamedTuple):
    eps: float
    value: float


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"infidelity must lie in [0, 1], got {eps}")
    return eps


def bound_lab(eps: float) -> float:
    """Worst separable expectation under infidelity-eps laboratory measurements.

    -4 (1-2e) sqrt(e(1-e)) up to the knee (2-sqrt(2))/4, then -1.
    """
    eps = _check_eps(eps)
    if eps <= LAB_BOUND_KNEE:
        return float(-4.0 * (1.0 - 2.0 * eps) * np.sqrt(eps * (1.0 - eps)))
    return -1.0


def bound_tuned(eps: float) -> float:
    """Worst separable expectation under infidelity-eps tuned measurements.

    -4 (sqrt(2)-1) e - 4 (3-2 sqrt(2)) e^2 for e <= 1/2, then -1.
    """
    eps = _check_eps(eps)
    if eps <= 0.5:
        r2 = np.sqrt(2.0)
        return float(-4.0 * (r2 - 1.0) * eps - 4.0 * (3.0 - 2.0 * r2) * eps * eps)
    return -1.0


def bound_curve(kind: str, eps_grid) -> list[BoundCurvePoint]:
    fn = {"lab": bound_lab, "tuned": bound_tuned}[kind]
    return [BoundCurvePoint(float(e), fn(e)) for e in eps_grid]


def worst_lab_measurements(eps: float) -> tuple[Povm, Povm, Povm, Povm]:
    """Laboratory measurements (x/z on A/B) achieving the lab bound.

    Observables (1-2e) s_{x/z} + 2 sqrt(e(1-e)) s_{z/x}; only defined below
    the knee where the bound is above -1.
    """
    eps = _check_eps(eps)
    if eps > LAB_BOUND_KNEE + 1e-15:
        raise ValueError(
            f"saturating lab family is only defined for eps <= {LAB_BOUND_KNEE:.6f}"
        )
    c, s = 1.0 - 2.0 * eps, 2.0 * np.sqrt(eps * (1.0 - eps))
    mx = Povm.from_observable(c * SIGMA_X + s * SIGMA_Z)
    mz = Povm.from_observable(c * SIGMA_Z + s * SIGMA_X)
    return mx, mz, mx, mz


def worst_tuned_measurements(eps: float) -> tuple[Povm, Povm, Povm, Povm]:
    """Tuned measurements (x/z on A/B) achieving the tuned bound.

    Observables 2e I + (1-2e) s_{x/z}; diagonal in their target bases.
    """
    eps = _check_eps(eps)
    if eps > 0.5:
        raise ValueError("saturating tuned family is only defined for eps <= 1/2")
    eye = identity(2)
    mx = Povm.from_observable(2.0 * eps * eye + (1.0 - 2.0 * eps) * SIGMA_X)
    mz = Povm.from_observable(2.0 * eps * eye + (1.0 - 2.0 * eps) * SIGMA_Z)
    return mx, mz, mx, mz


def pq_measurements(eps: float, p: float, q: float) -> tuple[Povm, Povm]:
    """General imprecise x/z family p I + (1-2e) s_{x/z} + q s_{z/x}.

    Feasibility requires |p| + sqrt((1-2e)^2 + q^2) <= 1; both measurements
    have infidelity exactly eps.
    """
    eps = _check_eps(eps)
    norm = np.hypot(1.0 - 2.0 * eps, q)
    if abs(p) + norm > 1.0 + 1e-10:
        raise ValueError(
            f"infeasible (p, q): |p| + sqrt((1-2e)^2 + q^2) = {abs(p) + norm:.12f} > 1"
        )
    eye = identity(2)
    mx = Povm.from_observable(p * eye + (1.0 - 2.0 * eps) * SIGMA_X + q * SIGMA_Z)
    mz = Povm.from_observable(p * eye + (1.0 - 2.0 * eps) * SIGMA_Z + q * SIGMA_X)
    return mx, mz


def pq_feasible(eps: float, p: float, q: float) -> bool:
    return abs(p) + np.hypot(1.0 - 2.0 * eps, q) <= 1.0 + 1e-10


# Named measurement families used by the visibility sweeps: the "misaligned"
# family rotates the measurement axes, the "diagonal" family only admixes
# identity, so tuning leaves it unchanged.
VISIBILITY_FAMILIES = {
    "misaligned": worst_lab_measurements,
    "diagonal": worst_tuned_measurements,
}


def general_linear_bound(w: ProductTermWitness, eps: float) -> float:
    """First-order lower bound eps * (sum of negative weights) * (sum of dims).

    Uses the witness's fixed projector decomposition; the quadratic remainder
    is not quantified, so this is a small-eps approximation of the true bound.
    """
    eps = float(eps)
    cap = min(1.0 / d for d in w.party_dims)
    if not 0.0 <= eps < cap:
        raise ValueError(f"eps must lie in [0, {cap:.4f}) for this witness")
    return eps * w.negative_weight_sum() * sum(w.party_dims)


def visibility_threshold(
    w: ProductTermWitness, a: MeasurementAssignment, bound: float
) -> float | None:
    """Smallest visibility v with Tr[W_meas rho_v] < bound, or None.

    rho_v = v |phi+><phi+| + (1-v) I/4; the expectation is affine in v, so the
    threshold is solved exactly. None means no v <= 1 certifies (including a
    nonnegative slope).
    """
    if w.party_dims != (2, 2):
        raise ValueError("visibility threshold is defined for the two-qubit witness")
    op = assemble_observable(w, a)
    at_mixed = expectation(op, identity(4) / 4.0)
    at_bell = expectation(op, bell_phi_plus())
    slope = at_bell - at_mixed
    if slope >= 0.0:
        return None
    v_star = (bound - at_mixed) / slope
    if v_star > 1.0:
        return None
    return float(max(v_star, 0.0))
