"""Dense complex matrix helpers for few-qubit unitary training.

Matrices are square ``complex128`` numpy arrays, row-major. Everything in the
toolkit stays at or below 2**12 x 2**12, so there is no sparsity or blocking.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = [
    "matmul",
    "dagger",
    "frobenius_norm",
    "unitarity_deviation",
    "random_unitary",
    "matrix_to_dict",
    "matrix_from_dict",
    "save_matrix",
    "load_matrix",
]


def _check_square(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product of two square matrices of the same dimension."""
    a = _check_square(a, "a")
    b = _check_square(b, "b")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a @ b


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(a, dtype=np.complex128).conj().T.copy()


def frobenius_norm(a: np.ndarray) -> float:
    """sqrt(tr(A^dag A)), i.e. the root sum of squared entry moduli."""
    return float(np.linalg.norm(np.asarray(a, dtype=np.complex128)))


def unitarity_deviation(u: np.ndarray) -> float:
    """Frobenius norm of U^dag U - I; zero exactly when U is unitary.

    Left-invariant: multiplying U by an exact unitary on the left does not
    change the value.
    """
    u = _check_square(u, "u")
    d = u.conj().T @ u - np.eye(u.shape[0])
    return float(np.linalg.norm(d))


def random_unitary(dim: int, seed: int) -> np.ndarray:
    """Seeded approximately-Haar random unitary.

    QR of a complex Gaussian matrix with the R-diagonal phase fix, so the
    distribution is Haar rather than biased by the QR sign convention.
    Deterministic: the same (dim, seed) always returns bit-identical output.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def matrix_to_dict(a: np.ndarray) -> dict:
    """Serialize to ``{"dim", "re", "im"}`` with row-major entry lists."""
    m = _check_square(a)
    return {
        "dim": int(m.shape[0]),
        "re": m.real.ravel().tolist(),
        "im": m.imag.ravel().tolist(),
    }


def matrix_from_dict(d: dict) -> np.ndarray:
    dim = int(d["dim"])
    re = np.asarray(d["re"], dtype=np.float64)
    im = np.asarray(d["im"], dtype=np.float64)
    if re.size != dim * dim or im.size != dim * dim:
        raise ValueError(f"entry count mismatch for dim={dim}")
    m = (re + 1j * im).reshape(dim, dim)
    if not np.all(np.isfinite(re)) or not np.all(np.isfinite(im)):
        raise ValueError("matrix contains non-finite entries")
    return m


def save_matrix(a: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        json.dump(matrix_to_dict(a), fh)


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return matrix_from_dict(json.load(fh))
