"""Witness construction from rank-1 product terms, observable assembly under
measurement assignments, and certification-capability arithmetic."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Mapping, Sequence

import numpy as np

from .linalg import check_hermitian, identity, kron
from .measurements import (
    Povm,
    TargetMeasurement,
    computational_target,
    fourier_target,
    sigma_x_target,
    sigma_z_target,
    tune,
)


@dataclass(frozen=True)
class ProjectorRef:
    """One outcome projector of a target measurement, referenced by index."""

    measurement: TargetMeasurement
    outcome: int

    def matrix(self) -> np.ndarray:
        return self.measurement.projector(self.outcome)


class ProductTermWitness:
    """Witness decomposed as sum_mu w_mu P_mu^(1) x ... x P_mu^(N).

    Each term carries a real weight and one projector reference per party.
    Projector references index basis vectors, never outcome values, so
    duplicate outcome values cannot create ambiguity.
    """

    def __init__(self, party_dims: Sequence[int], terms):
        self.party_dims = tuple(int(d) for d in party_dims)
        if any(d < 2 for d in self.party_dims):
            raise ValueError("party dimensions must be at least 2")
        checked = []
        for weight, refs in terms:
            refs = tuple(refs)
            if len(refs) != len(self.party_dims):
                raise ValueError("every term needs one projector per party")
            for n, ref in enumerate(refs):
                if ref.measurement.dim != self.party_dims[n]:
                    raise ValueError(
                        f"projector dimension {ref.measurement.dim} does not match "
                        f"party {n} dimension {self.party_dims[n]}"
                    )
                if not 0 <= ref.outcome < ref.measurement.dim:
                    raise ValueError(f"outcome index {ref.outcome} out of range")
            checked.append((float(weight), refs))
        if not checked:
            raise ValueError("witness needs at least one term")
        self.terms = tuple(checked)

    @property
    def n_parties(self) -> int:
        return len(self.party_dims)

    def party_measurements(self, party: int) -> list[TargetMeasurement]:
        """Distinct target measurements referenced by one party, in first-use order."""
        seen: list[TargetMeasurement] = []
        for _, refs in self.terms:
            m = refs[party].measurement
            if all(m is not s for s in seen):
                seen.append(m)
        return seen

    def settings(self) -> list[tuple[TargetMeasurement, ...]]:
        """Distinct per-party measurement combinations, in first-use order."""
        out: list[tuple[TargetMeasurement, ...]] = []
        for _, refs in self.terms:
            combo = tuple(r.measurement for r in refs)
            if all(any(a is not b for a, b in zip(combo, c)) for c in out):
                out.append(combo)
        return out

    def negative_weight_sum(self) -> float:
        return sum(w for w, _ in self.terms if w < 0)

    def ideal_operator(self) -> np.ndarray:
        return assemble_observable(self, "ideal")


class MeasurementAssignment:
    """Per-party replacement of target measurements by laboratory POVMs."""

    def __init__(self, per_party: Sequence[Mapping[TargetMeasurement, Povm]]):
        self.per_party = tuple(dict(m) for m in per_party)
        for party, table in enumerate(self.per_party):
            for target, povm in table.items():
                if povm.dim != target.dim:
                    raise ValueError(
                        f"party {party}: POVM dimension {povm.dim} does not match "
                        f"measurement {target!r}"
                    )

    def povm_for(self, party: int, measurement: TargetMeasurement) -> Povm:
        try:
            return self.per_party[party][measurement]
        except KeyError:
            raise KeyError(
                f"no POVM assigned for party {party}, measurement {measurement!r}"
            ) from None

    def tuned(self) -> "MeasurementAssignment":
        """Replace every POVM by its tuned (basis-diagonal) counterpart."""
        return MeasurementAssignment(
            [{t: tune(t, p) for t, p in table.items()} for table in self.per_party]
        )


def assemble_observable(w: ProductTermWitness, a) -> np.ndarray:
    """Operator sum_mu w_mu X^(1) x ... x X^(N) under an assignment.

    ``a`` is a MeasurementAssignment or the string "ideal"; each X is the
    assigned POVM element of matching outcome index, or the ideal projector.
    """
    dim = int(np.prod(w.party_dims))
    total = np.zeros((dim, dim), dtype=complex)
    for weight, refs in w.terms:
        factors = []
        for party, ref in enumerate(refs):
            if isinstance(a, str):
                if a != "ideal":
                    raise ValueError(f"unknown assignment {a!r}; expected 'ideal'")
                factors.append(ref.matrix())
            else:
                povm = a.povm_for(party, ref.measurement)
                if ref.outcome >= len(povm):
                    raise ValueError(
                        f"party {party}: POVM has {len(povm)} outcomes, witness "
                        f"references outcome {ref.outcome}"
                    )
                factors.append(povm[ref.outcome])
        total += weight * reduce(kron, factors)
    return total


def expectation(op, state) -> float:
    """Tr(op @ state) for a Hermitian operator and a density operator."""
    op = check_hermitian(op)
    state = np.asarray(state, dtype=complex)
    if state.shape != op.shape:
        raise ValueError(f"shape mismatch: operator {op.shape}, state {state.shape}")
    if abs(np.trace(state) - 1.0) > 1e-9:
        raise ValueError(f"state trace {np.trace(state):.12f} is not 1")
    if np.linalg.eigvalsh((state + state.conj().T) / 2)[0] < -1e-9:
        raise ValueError("state is not positive semidefinite")
    value = np.trace(op @ state)
    if abs(value.imag) > 1e-8:
        raise ValueError(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


def certification_capability(bound: float, witness_min: float) -> float:
    """Remaining fraction 1 - bound/witness_min of the ideal negative range."""
    if witness_min >= 0:
        raise ValueError("witness_min must be negative")
    if bound < witness_min:
        warnings.warn(
            f"bound {bound:.6g} below the ideal minimum {witness_min:.6g}; "
            "capability clamped to 0",
            stacklevel=2,
        )
        return 0.0
    return float(min(max(1.0 - bound / witness_min, 0.0), 1.0))


def _pm_weight(s: int, t: int) -> float:
    # outcome index 0 carries value +1, index 1 carries -1
    return (1.0 if s == 0 else -1.0) * (1.0 if t == 0 else -1.0)


def two_qubit_xz_witness() -> ProductTermWitness:
    """Two-qubit witness I - sx.sx - sz.sz in rank-1 product terms.

    The identity is expanded in the z(x)z basis so that the negative-weight
    bookkeeping of the general linear bound has a fixed decomposition.
    """
    za, xa = sigma_z_target(), sigma_x_target()
    zb, xb = sigma_z_target(), sigma_x_target()
    terms = []
    for s in range(2):
        for t in range(2):
            terms.append((1.0, (ProjectorRef(za, s), ProjectorRef(zb, t))))
    for ma, mb in ((xa, xb), (za, zb)):
        for s in range(2):
            for t in range(2):
                terms.append((-_pm_weight(s, t), (ProjectorRef(ma, s), ProjectorRef(mb, t))))
    return ProductTermWitness((2, 2), terms)


def mub_witness(d: int) -> ProductTermWitness:
    """Two-qudit witness ((d+1)/d) I - sum_k (|e_k e_k><..| + |f_k f_k*><..|).

    Built on the computational basis and its Fourier partner (a pair of
    mutually unbiased bases); the identity is expanded in the e x e family.
    """
    if d < 2:
        raise ValueError("witness needs dimension at least 2")
    ea, fa = computational_target(d), fourier_target(d)
    eb, fb = computational_target(d), fourier_target(d, conjugate=True)
    terms = []
    for k in range(d):
        for l in range(d):
            terms.append(((d + 1.0) / d, (ProjectorRef(ea, k), ProjectorRef(eb, l))))
    for k in range(d):
        terms.append((-1.0, (ProjectorRef(ea, k), ProjectorRef(eb, k))))
    for k in range(d):
        terms.append((-1.0, (ProjectorRef(fa, k), ProjectorRef(fb, k))))
    return ProductTermWitness((d, d), terms)


def witness_ideal_minimum(d: int) -> float:
    """Lower edge -(d-1)/d of the MUB witness certification range."""
    return -(d - 1.0) / d


def assignment_by_label(
    w: ProductTermWitness, povms_per_party: Sequence[Mapping[str, Povm]]
) -> MeasurementAssignment:
    """Build an assignment matching each party's measurements by label."""
    per_party = []
    for party, table in enumerate(povms_per_party):
        mapping = {}
        for target in w.party_measurements(party):
            if target.label not in table:
                raise KeyError(
                    f"party {party}: no POVM supplied for measurement label "
                    f"{target.label!r}"
                )
            mapping[target] = table[target.label]
        per_party.append(mapping)
    return MeasurementAssignment(per_party)


def xz_assignment(w: ProductTermWitness, mx_a: Povm, mz_a: Povm,
                  mx_b: Povm | None = None, mz_b: Povm | None = None) -> MeasurementAssignment:
    """Assignment for the two-qubit x/z witness; party B defaults to party A's POVMs."""
    if mx_b is None:
        mx_b = mx_a
    if mz_b is None:
        mz_b = mz_a
    return assignment_by_label(w, [{"x": mx_a, "z": mz_a}, {"x": mx_b, "z": mz_b}])


def bell_phi_plus() -> np.ndarray:
    """Density operator of (|00> + |11>)/sqrt(2)."""
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1.0 / np.sqrt(2.0)
    return np.outer(v, v.conj())


def isotropic_state(v: float) -> np.ndarray:
    """Two-qubit visibility state v |phi+><phi+| + (1-v) I/4."""
    return v * bell_phi_plus() + (1.0 - v) * identity(4) / 4.0
