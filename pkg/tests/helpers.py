"""Shared oracles for the test suite.

These deliberately avoid the library's own fast paths: matrix products are
naive triple loops, gate embeddings are built from Kronecker products, and
derivatives come from central finite differences.
"""

from __future__ import annotations

import numpy as np


def matmul_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            acc = 0.0 + 0.0j
            for k in range(n):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


def central_difference(f, x: np.ndarray, j: int, h: float) -> float:
    e = np.zeros_like(x)
    e[j] = h
    return (f(x + e) - f(x - e)) / (2.0 * h)


def embed_1q(mat: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Dense 2^n embedding of a single-qubit gate (qubit 0 = most significant)."""
    out = np.eye(1, dtype=complex)
    for q in range(n):
        out = np.kron(out, mat if q == qubit else np.eye(2, dtype=complex))
    return out


def embed_cnot(control: int, target: int, n: int) -> np.ndarray:
    """Dense CNOT embedding built as an explicit basis permutation."""
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for k in range(dim):
        if (k >> (n - 1 - control)) & 1:
            out[k ^ (1 << (n - 1 - target)), k] = 1.0
        else:
            out[k, k] = 1.0
    return out


def random_complex_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def random_circuit(n_qubits: int, n_gates: int, rng: np.random.Generator, with_params: bool = True):
    """Seeded circuit of rotations, H and CNOT; one fresh slot per rotation."""
    from math import pi

    from softu.circuits import Circuit, Gate, cnot, h

    gates = []
    slots = 0
    kinds = ["RX", "RY", "RZ", "H", "CNOT"] if n_qubits > 1 else ["RX", "RY", "RZ", "H"]
    for _ in range(n_gates):
        kind = rng.choice(kinds)
        if kind == "CNOT":
            c, t = rng.choice(n_qubits, size=2, replace=False)
            gates.append(cnot(int(c), int(t)))
        elif kind == "H":
            gates.append(h(int(rng.integers(n_qubits))))
        else:
            q = int(rng.integers(n_qubits))
            if with_params and rng.random() < 0.7:
                gates.append(Gate(kind, (q,), param_slot=slots))
                slots += 1
            else:
                gates.append(Gate(kind, (q,), fixed_angle=float(rng.uniform(0, 2 * pi))))
    return Circuit(n_qubits, tuple(gates), slots)
