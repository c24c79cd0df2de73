"""Projective targets, laboratory POVMs, measurement infidelity, and the
tuned-measurement transform (continuous and discrete randomization)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    HERMITICITY_ATOL,
    PSD_EIG_FLOOR,
    I2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    as_operator,
    check_hermitian,
    dagger,
    hs_norm,
    identity,
)

# POVM completeness residual allowed in Hilbert-Schmidt norm. Optimizer
# iterates drift slightly; validation must not reject legitimate iterates.
COMPLETENESS_ATOL = 1e-9
ORTHONORMALITY_ATOL = 1e-10

# Sign-flip group averaging has 2^d elements; past this size the enumeration
# is pointless since the diagonal extraction gives the identical result.
MAX_SIGN_GROUP_DIM = 20


class TargetMeasurement:
    """Ideal projective measurement: an orthonormal basis with real outcomes.

    ``basis`` holds the basis vectors as matrix columns. Instances compare by
    identity so they can key measurement assignments.
    """

    __slots__ = ("dim", "basis", "outcomes", "label")

    def __init__(self, basis, outcomes, label: str | None = None):
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
            raise ValueError(f"basis must be a square matrix, got {basis.shape}")
        dim = basis.shape[0]
        gram = dagger(basis) @ basis
        if np.max(np.abs(gram - identity(dim))) > ORTHONORMALITY_ATOL:
            raise ValueError("basis vectors are not orthonormal")
        outcomes = np.asarray(outcomes, dtype=float)
        if outcomes.shape != (dim,):
            raise ValueError(f"expected {dim} outcomes, got shape {outcomes.shape}")
        if not np.all(np.isfinite(outcomes)):
            raise ValueError("outcomes must be finite")
        self.dim = dim
        self.basis = basis.copy()
        self.outcomes = outcomes.copy()
        self.basis.setflags(write=False)
        self.outcomes.setflags(write=False)
        self.label = label

    def vector(self, i: int) -> np.ndarray:
        return self.basis[:, i].copy()

    def projector(self, i: int) -> np.ndarray:
        v = self.basis[:, i]
        return np.outer(v, v.conj())

    def projectors(self) -> list[np.ndarray]:
        return [self.projector(i) for i in range(self.dim)]

    def observable(self) -> np.ndarray:
        return (self.basis * self.outcomes) @ dagger(self.basis)

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return f"<TargetMeasurement{tag} dim={self.dim}>"


def sigma_z_target() -> TargetMeasurement:
    return TargetMeasurement(I2, [1.0, -1.0], label="z")


def sigma_x_target() -> TargetMeasurement:
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    minus = np.array([1.0, -1.0]) / np.sqrt(2.0)
    return TargetMeasurement(np.column_stack([plus, minus]), [1.0, -1.0], label="x")


def computational_target(d: int, label: str = "e") -> TargetMeasurement:
    return TargetMeasurement(identity(d), np.arange(d, dtype=float), label=label)


def fourier_target(d: int, conjugate: bool = False, label: str | None = None) -> TargetMeasurement:
    """Fourier basis f_k with entries exp(2*pi*i*k*l/d)/sqrt(d) as columns.

    With ``conjugate`` the elementwise-conjugate basis f_k* is returned.
    """
    k, l = np.meshgrid(np.arange(d), np.arange(d), indexing="xy")
    phase = 2.0j * np.pi * (k * l) / d
    basis = np.exp(-phase if conjugate else phase) / np.sqrt(d)
    if label is None:
        label = "f*" if conjugate else "f"
    return TargetMeasurement(basis, np.arange(d, dtype=float), label=label)


class Povm:
    """Ordered positive operators summing to identity."""

    __slots__ = ("dim", "elements")

    def __init__(self, elements, validate: bool = True):
        ops = tuple(as_operator(m).copy() for m in elements)
        if not ops:
            raise ValueError("a POVM needs at least one element")
        dim = ops[0].shape[0]
        if any(m.shape[0] != dim for m in ops):
            raise ValueError("POVM elements have mixed dimensions")
        if validate:
            for i, m in enumerate(ops):
                if not np.allclose(m, dagger(m), atol=10 * HERMITICITY_ATOL, rtol=0):
                    raise ValueError(f"POVM element {i} is not Hermitian")
                if np.linalg.eigvalsh((m + dagger(m)) / 2)[0] < PSD_EIG_FLOOR:
                    raise ValueError(f"POVM element {i} is not positive semidefinite")
            residual = hs_norm(sum(ops) - identity(dim))
            if residual > COMPLETENESS_ATOL:
                raise ValueError(f"POVM elements do not sum to identity (residual {residual:.3e})")
        for m in ops:
            m.setflags(write=False)
        self.dim = dim
        self.elements = ops

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    @classmethod
    def ideal(cls, target: TargetMeasurement) -> "Povm":
        return cls(target.projectors(), validate=False)

    @classmethod
    def from_observable(cls, obs) -> "Povm":
        """Two-outcome POVM {(I+O)/2, (I-O)/2} of an observable with spectrum in [-1, 1]."""
        obs = check_hermitian(obs)
        eye = identity(obs.shape[0])
        return cls([(eye + obs) / 2, (eye - obs) / 2])

    def as_stack(self) -> np.ndarray:
        return np.stack(self.elements)

    def __repr__(self):
        return f"<Povm dim={self.dim} outcomes={len(self.elements)}>"


@dataclass(frozen=True)
class QubitObservableParams:
    """Decomposition M_+ - M_- = p*I + n.sigma of a two-outcome qubit POVM.

    Positivity of both elements is equivalent to |p| + ||n|| <= 1.
    """

    p: float
    n: tuple[float, float, float]

    def __post_init__(self):
        if abs(self.p) + float(np.linalg.norm(self.n)) > 1.0 + 1e-10:
            raise ValueError(f"infeasible qubit observable: |p| + ||n|| = "
                             f"{abs(self.p) + float(np.linalg.norm(self.n)):.12f} > 1")

    def observable(self) -> np.ndarray:
        nx, ny, nz = self.n
        return self.p * I2 + nx * SIGMA_X + ny * SIGMA_Y + nz * SIGMA_Z

    def to_povm(self) -> Povm:
        obs = self.observable()
        return Povm([(I2 + obs) / 2, (I2 - obs) / 2])


def infidelity(target: TargetMeasurement, lab: Povm) -> float:
    """Measurement infidelity 1 - (1/d) sum_i <phi_i|M_i|phi_i>."""
    if lab.dim != target.dim:
        raise ValueError(f"dimension mismatch: target {target.dim}, POVM {lab.dim}")
    if len(lab) != target.dim:
        raise ValueError(
            f"infidelity needs a {target.dim}-outcome POVM, got {len(lab)} elements"
        )
    overlap = sum(
        np.real(np.vdot(target.basis[:, i], lab[i] @ target.basis[:, i]))
        for i in range(target.dim)
    )
    return float(min(max(1.0 - overlap / target.dim, 0.0), 1.0))


def qubit_decompose(lab: Povm) -> QubitObservableParams:
    """Recover (p, n) from a two-outcome qubit POVM."""
    if lab.dim != 2 or len(lab) != 2:
        raise ValueError("qubit decomposition needs a two-outcome POVM on dimension 2")
    m = lab[0] - lab[1]
    p = float(np.real(np.trace(m))) / 2
    n = tuple(float(np.real(np.trace(m @ s))) / 2 for s in (SIGMA_X, SIGMA_Y, SIGMA_Z))
    return QubitObservableParams(p, n)


def _diagonal_part(target: TargetMeasurement, lab: Povm) -> Povm:
    # Conjugate into the target basis once, keep the diagonal, conjugate back.
    v = target.basis
    out = []
    for m in lab:
        diag = np.real(np.einsum("ki,kl,li->i", v.conj(), m, v))
        out.append((v * diag) @ dagger(v))
    return Povm(out, validate=False)


def tune(target: TargetMeasurement, lab: Povm) -> Povm:
    """Average the POVM over uniform phase randomization in the target basis.

    The result keeps only the part diagonal in the target basis, so its
    infidelity equals that of the input exactly.
    """
    if lab.dim != target.dim:
        raise ValueError(f"dimension mismatch: target {target.dim}, POVM {lab.dim}")
    return _diagonal_part(target, lab)


def tune_discrete_signs(target: TargetMeasurement, lab: Povm) -> Povm:
    """Average over the 2^d group of diagonal sign-flip unitaries.

    The group average equals the phase-randomized tuning, so it is evaluated
    by diagonal extraction rather than literal enumeration.
    """
    if lab.dim != target.dim:
        raise ValueError(f"dimension mismatch: target {target.dim}, POVM {lab.dim}")
    if target.dim > MAX_SIGN_GROUP_DIM:
        raise ValueError(
            f"sign-flip group has 2^{target.dim} elements; use tune() beyond "
            f"dimension {MAX_SIGN_GROUP_DIM}"
        )
    return _diagonal_part(target, lab)


def tune_discrete_fourier(target: TargetMeasurement, lab: Povm) -> Povm:
    """Average over the d cyclic-phase unitaries U_j = sum_k e^{i*2pi*jk/d} |phi_k><phi_k|."""
    if lab.dim != target.dim:
        raise ValueError(f"dimension mismatch: target {target.dim}, POVM {lab.dim}")
    d = target.dim
    v = target.basis
    out = []
    for m in lab:
        mt = dagger(v) @ m @ v
        acc = np.zeros_like(mt)
        for j in range(d):
            phases = np.exp(2.0j * np.pi * j * np.arange(d) / d)
            acc += (mt * np.outer(phases.conj(), phases))
        acc /= d
        out.append(v @ acc @ dagger(v))
    return Povm(out, validate=False)


def misalignment_gap(
    target: TargetMeasurement, misaligned_basis
) -> tuple[float, float, float]:
    """Deviation of a misaligned copy of a nondegenerate observable.

    Returns (lhs, rhs, eps) where lhs is the Hilbert-Schmidt distance between
    the observable and its misaligned copy, eps the basis infidelity, and
    rhs = lambda * sqrt(2 eps) with lambda the smallest outcome gap. The
    guarantee lhs >= rhs is reported, not asserted, so sweeps can plot slack.
    """
    lam = target.outcomes
    gaps = np.abs(lam[:, None] - lam[None, :])
    np.fill_diagonal(gaps, np.inf)
    min_gap = float(gaps.min())
    if min_gap <= 0.0:
        raise ValueError("misalignment bound requires pairwise distinct outcomes")
    basis = np.asarray(misaligned_basis, dtype=complex)
    if basis.shape != (target.dim, target.dim):
        raise ValueError(f"misaligned basis must be {target.dim}x{target.dim}")
    gram = dagger(basis) @ basis
    if np.max(np.abs(gram - identity(target.dim))) > ORTHONORMALITY_ATOL:
        raise ValueError("misaligned basis is not orthonormal")
    obs = target.observable()
    tilted = (basis * lam) @ dagger(basis)
    overlaps = np.abs(np.einsum("ki,ki->i", basis.conj(), target.basis)) ** 2
    eps = float(min(max(1.0 - overlaps.sum() / target.dim, 0.0), 1.0))
    lhs = hs_norm(tilted - obs)
    rhs = min_gap * np.sqrt(2.0 * eps)
    return lhs, float(rhs), eps


def sandwich_check(target: TargetMeasurement, tuned: Povm, eps: float) -> bool:
    """Check (1-d*eps) P_i <= M_i <= (1-d*eps) P_i + d*eps*I for every element.

    Operator inequalities use the eigenvalue floor -1e-9. The POVM must be
    diagonal in the target basis.
    """
    if tuned.dim != target.dim:
        raise ValueError(f"dimension mismatch: target {target.dim}, POVM {tuned.dim}")
    d = target.dim
    v = target.basis
    eye = identity(d)
    for i, m in enumerate(tuned):
        mt = dagger(v) @ m @ v
        off = mt - np.diag(np.diag(mt))
        if np.max(np.abs(off)) > 1e-9:
            raise ValueError(f"POVM element {i} is not diagonal in the target basis")
    for i, m in enumerate(tuned):
        p = target.projector(i)
        lower = m - (1.0 - d * eps) * p
        upper = (1.0 - d * eps) * p + d * eps * eye - m
        if np.linalg.eigvalsh((lower + dagger(lower)) / 2)[0] < PSD_EIG_FLOOR:
            return False
        if np.linalg.eigvalsh((upper + dagger(upper)) / 2)[0] < PSD_EIG_FLOOR:
            return False
    return True
