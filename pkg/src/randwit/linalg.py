"""Dense complex linear algebra for small Hermitian operators.

Operators are plain square complex ndarrays; the dimension tag is the array
shape. All functions return fresh arrays, so values can be shared freely
between concurrent workers.
"""

from __future__ import annotations

import numpy as np

# Absolute tolerance on max |A - A^dag| entry for Hermiticity checks.
HERMITICITY_ATOL = 1e-10
# Eigenvalue floor below which an operator is considered not PSD.
PSD_EIG_FLOOR = -1e-9

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def as_operator(a) -> np.ndarray:
    """Coerce to a square complex matrix, rejecting anything else."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def max_asymmetry(a: np.ndarray) -> float:
    """Largest entry of |A - A^dag|."""
    return float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0


def is_hermitian(a: np.ndarray, atol: float = HERMITICITY_ATOL) -> bool:
    return max_asymmetry(as_operator(a)) <= atol


def check_hermitian(a, atol: float = HERMITICITY_ATOL) -> np.ndarray:
    a = as_operator(a)
    asym = max_asymmetry(a)
    if asym > atol:
        raise ValueError(
            f"operator is not Hermitian: max |A - A^dag| entry = {asym:.3e} "
            f"exceeds tolerance {atol:.1e}"
        )
    return a


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product of two operators."""
    return np.kron(as_operator(a), as_operator(b))


def eigh(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian operator.

    Returns eigenvalues in ascending order and orthonormal eigenvectors as
    matrix columns. Non-Hermitian input is rejected with the max asymmetry.
    """
    h = check_hermitian(h)
    values, vectors = np.linalg.eigh(h)
    return values, vectors


def hs_norm(a) -> float:
    """Hilbert-Schmidt (Frobenius) norm sqrt(Tr(A^dag A))."""
    return float(np.linalg.norm(as_operator(a)))


def min_eig_vector(h) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue and a unit eigenvector.

    Degenerate minima break ties by taking the lowest-index eigenvector
    returned by the deterministic eigensolver.
    """
    values, vectors = eigh(h)
    return float(values[0]), vectors[:, 0].copy()


def min_eig(h) -> float:
    h = check_hermitian(h)
    return float(np.linalg.eigvalsh(h)[0])


def is_psd(a, floor: float = PSD_EIG_FLOOR) -> bool:
    return min_eig(a) >= floor


def psd_project(h) -> np.ndarray:
    """Nearest PSD operator in Hilbert-Schmidt norm (eigenvalue clipping)."""
    values, vectors = eigh(h)
    clipped = np.clip(values, 0.0, None)
    return (vectors * clipped) @ dagger(vectors)
