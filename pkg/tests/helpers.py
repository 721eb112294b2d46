"""Shared dense-matrix oracles for the test suite."""

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def kron_all(mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def pauli_dense(label):
    """Dense matrix of a labelled Pauli; first letter acts on site 1."""
    return kron_all([PAULI[c] for c in label])


def random_pure_vec(dim, rng):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def h_qubit_vec():
    """Single-qubit state with Bloch vector along (x+z)/sqrt(2)."""
    return np.array([np.cos(np.pi / 8), np.sin(np.pi / 8)], dtype=complex)
