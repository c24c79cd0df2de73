"""Finite-shot Born-rule simulation of witness estimation, with optional
per-shot randomization of the measurement bases and dephasing on the
randomization gates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import as_operator, dagger
from .measurements import Povm
from .noise import DephasingGateModel
from .witnesses import ProductTermWitness, MeasurementAssignment

RANDOMIZATION_MODES = ("none", "continuous-phase", "discrete-group")

# Shots are simulated in blocks; each block owns a spawned RNG stream so the
# result only depends on the plan seed.
_BLOCK = 1 << 15


@dataclass(frozen=True)
class ShotPlan:
    """Total number of state copies, split evenly across joint settings."""

    shots: int
    seed: int
    randomization: str = "none"

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be at least 1")
        if self.randomization not in RANDOMIZATION_MODES:
            raise ValueError(
                f"randomization must be one of {RANDOMIZATION_MODES}, "
                f"got {self.randomization!r}"
            )


@dataclass
class WitnessEstimate:
    mean: float
    std_estimate: float
    per_setting_counts: list[dict] = field(default_factory=list)


def born_probabilities(povm: Povm, state) -> np.ndarray:
    """Outcome distribution Tr(M_i rho), clamped and renormalized within tolerance."""
    state = as_operator(state)
    if state.shape[0] != povm.dim:
        raise ValueError(f"dimension mismatch: POVM {povm.dim}, state {state.shape[0]}")
    probs = np.array([float(np.real(np.einsum("ab,ba->", m, state))) for m in povm])
    if probs.min() < -1e-10:
        raise ValueError(f"negative outcome probability {probs.min():.3e}")
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"outcome probabilities sum to {total:.12f}")
    probs = np.clip(probs, 0.0, 1.0)
    return probs / probs.sum()


def sample_counts(probs, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial outcome counts for one setting."""
    probs = np.asarray(probs, dtype=float)
    if probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("not a probability distribution")
    return rng.multinomial(shots, probs / probs.sum())


def _split_shots(total: int, n_settings: int) -> list[int]:
    base, extra = divmod(total, n_settings)
    return [base + (1 if i < extra else 0) for i in range(n_settings)]


def _basis_frame(setting, state):
    """State and POVM elements rotated into the joint target eigenbasis."""
    v_joint = np.array([[1.0 + 0.0j]])
    for t in setting:
        v_joint = np.kron(v_joint, t.basis)
    return dagger(v_joint) @ state @ v_joint


def _phase_masks(rng, n_shots, dims, mode, noise):
    """Per-shot conjugation masks, one (d, d) matrix per party per shot."""
    masks = []
    for d in dims:
        if mode == "continuous-phase":
            theta = rng.uniform(0.0, 2.0 * np.pi, size=(n_shots, d))
            phases = np.exp(1j * theta)
        else:  # discrete-group: fresh sign pattern per shot
            signs = rng.integers(0, 2, size=(n_shots, d))
            theta = np.pi * signs
            phases = 1.0 - 2.0 * signs.astype(float) + 0.0j
        mask = phases[:, None, :].conj() * phases[:, :, None]
        # mask[s, k, l] multiplies element (k, l): e^{i(theta_l - theta_k)}
        mask = mask.conj()
        if noise is not None:
            # the qubit gate angle is the phase difference; its dephasing
            # shrinks off-diagonal coherence by e^{-Gamma(angle)}
            angle = np.mod(theta[:, 1] - theta[:, 0], 2.0 * np.pi)
            decay = np.exp(-noise.gamma_at(angle))
            off = np.array([[0.0, 1.0], [1.0, 0.0]])
            mask = mask * (1.0 + (decay[:, None, None] - 1.0) * off)
        masks.append(mask)
    return masks


def _randomized_counts(setting, povms, state, n_shots, rng, mode, noise):
    """Sample joint outcomes with a fresh randomization per shot."""
    dims = [t.dim for t in setting]
    n_out = int(np.prod([len(p) for p in povms]))
    rho = _basis_frame(setting, state)
    if len(setting) != 2:
        raise NotImplementedError("per-shot randomization is implemented for 2 parties")
    da, db = dims
    va, vb = setting[0].basis, setting[1].basis
    a_stack = np.stack([dagger(va) @ m @ va for m in povms[0]])
    b_stack = np.stack([dagger(vb) @ m @ vb for m in povms[1]])
    # T[k,l,m,n] = rho[(l,n),(k,m)] so that p = sum A[k,l] B[m,n] T[k,l,m,n]
    t_tensor = rho.reshape(da, db, da, db).transpose(2, 0, 3, 1)
    counts = np.zeros(n_out, dtype=np.int64)
    remaining = n_shots
    while remaining > 0:
        block = min(_BLOCK, remaining)
        remaining -= block
        mask_a, mask_b = _phase_masks(rng, block, dims, mode, noise)
        rotated_a = a_stack[None, :, :, :] * mask_a[:, None, :, :]
        rotated_b = b_stack[None, :, :, :] * mask_b[:, None, :, :]
        half = np.einsum("sikl,klmn->simn", rotated_a, t_tensor)
        probs = np.einsum("simn,sjmn->sij", half, rotated_b).real
        probs = probs.reshape(block, n_out)
        probs = np.clip(probs, 0.0, None)
        probs /= probs.sum(axis=1, keepdims=True)
        u = rng.uniform(size=(block, 1))
        outcomes = (np.cumsum(probs, axis=1) < u).sum(axis=1)
        counts += np.bincount(np.minimum(outcomes, n_out - 1), minlength=n_out)
    return counts


def estimate_witness(
    w: ProductTermWitness,
    a: MeasurementAssignment,
    state,
    plan: ShotPlan,
    noise: DephasingGateModel | None = None,
) -> WitnessEstimate:
    """Estimate Tr(W rho) from finite shots, one joint setting per distinct
    measurement combination.

    With randomization, each shot draws fresh phases (or a fresh sign-group
    element) per party, optionally routed through the dephasing channel, so
    the estimator converges to the tuned (or noisy-tuned) expectation.
    """
    state = as_operator(state)
    settings = w.settings()
    if plan.shots < len(settings):
        raise ValueError(
            f"{plan.shots} shots cannot cover {len(settings)} measurement settings"
        )
    if noise is not None and plan.randomization == "none":
        raise ValueError("gate noise only acts on randomization gates")
    allocation = _split_shots(plan.shots, len(settings))
    root = np.random.SeedSequence(plan.seed)
    streams = root.spawn(len(settings))

    # weight vector over joint outcomes for each setting
    setting_weights = []
    for combo in settings:
        dims_out = None
        weights = {}
        for weight, refs in w.terms:
            if any(r.measurement is not c for r, c in zip(refs, combo)):
                continue
            idx = tuple(r.outcome for r in refs)
            weights[idx] = weights.get(idx, 0.0) + weight
        setting_weights.append(weights)

    mean = 0.0
    variance = 0.0
    per_setting = []
    for combo, weights, shots, stream in zip(settings, setting_weights, allocation, streams):
        rng = np.random.default_rng(stream)
        povms = [a.povm_for(n, t) for n, t in enumerate(combo)]
        out_shape = tuple(len(p) for p in povms)
        n_out = int(np.prod(out_shape))
        if plan.randomization == "none":
            joint = []
            for idx in np.ndindex(*out_shape):
                mat = povms[0][idx[0]]
                for n in range(1, len(povms)):
                    mat = np.kron(mat, povms[n][idx[n]])
                joint.append(mat)
            probs = born_probabilities(Povm(joint, validate=False), state)
            counts = sample_counts(probs, shots, rng)
        else:
            counts = _randomized_counts(combo, povms, state, shots, rng,
                                        plan.randomization, noise)
        freqs = counts / shots
        coeff = np.zeros(n_out)
        for idx, weight in weights.items():
            coeff[int(np.ravel_multi_index(idx, out_shape))] = weight
        setting_mean = float(coeff @ freqs)
        setting_var = float(coeff**2 @ freqs - setting_mean**2) / shots
        mean += setting_mean
        variance += max(setting_var, 0.0)
        per_setting.append({
            "measurements": tuple(t.label for t in combo),
            "shots": shots,
            "counts": counts,
        })
    return WitnessEstimate(mean=mean, std_estimate=float(np.sqrt(variance)),
                           per_setting_counts=per_setting)
