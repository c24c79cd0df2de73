"""Shared random-object helpers for the test suite."""

from __future__ import annotations

import numpy as np

from randwit.linalg import dagger, identity
from randwit.measurements import Povm, TargetMeasurement


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_complex(gen, d, scale=1.0):
    return scale * (gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d)))


def random_hermitian(gen, d, scale=1.0):
    a = random_complex(gen, d, scale)
    return (a + dagger(a)) / 2


def random_unitary(gen, d):
    q, r = np.linalg.qr(random_complex(gen, d))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_pure_state(gen, d):
    v = gen.standard_normal(d) + 1j * gen.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density(gen, d):
    a = random_complex(gen, d)
    rho = a @ dagger(a)
    return rho / np.trace(rho).real


def random_povm(gen, d, n_outcomes=None):
    """Random POVM via symmetrizing random PSD operators."""
    n = n_outcomes or d
    raw = []
    for _ in range(n):
        a = random_complex(gen, d)
        raw.append(a @ dagger(a))
    total = sum(raw)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ dagger(v)
    return Povm([inv_sqrt @ m @ inv_sqrt for m in raw])


def random_target(gen, d, outcomes=None, label=None):
    basis = random_unitary(gen, d)
    if outcomes is None:
        outcomes = np.arange(d, dtype=float)
    return TargetMeasurement(basis, outcomes, label=label)


def random_near_ideal_povm(gen, target, strength=0.1):
    """POVM close to the target projectors, with a random perturbation."""
    d = target.dim
    raw = []
    for i in range(d):
        a = random_complex(gen, d, strength)
        raw.append(target.projector(i) + a @ dagger(a))
    total = sum(raw)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ dagger(v)
    return Povm([inv_sqrt @ m @ inv_sqrt for m in raw])


def random_kraus_channel(gen, d, n_kraus=3):
    """Random CPTP channel from a Haar-ish isometry."""
    from randwit.noise import KrausChannel

    block = gen.standard_normal((n_kraus * d, d)) + 1j * gen.standard_normal((n_kraus * d, d))
    q, _ = np.linalg.qr(block)
    return KrausChannel([q[i * d:(i + 1) * d, :] for i in range(n_kraus)])


def random_near_identity_channel(gen, d, strength=0.1):
    """CPTP channel close to the identity map."""
    from randwit.noise import KrausChannel
    from scipy.linalg import expm

    h = random_hermitian(gen, d, strength)
    u = expm(1j * h)
    p = min(0.5, abs(gen.normal(0.0, strength)))
    a = random_complex(gen, d, 1.0)
    herm = a @ dagger(a)
    herm /= np.linalg.eigvalsh(herm).max()
    k1 = np.sqrt(p) * herm
    # complete to a trace-preserving pair: K0^dag K0 = I - K1^dag K1
    chol = np.linalg.cholesky(identity(d) - dagger(k1) @ k1)
    return KrausChannel([u @ dagger(chol), k1])
