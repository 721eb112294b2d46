"""Bit-packed Pauli strings and their phase-exact algebra.

A Pauli operator on L qubits is stored as ``i**u * prod_k X_k**x_k Z_k**z_k``
with x and z kept as integer bitmasks (bit k-1 <-> site k, sites 1-indexed)
and the phase exponent u taken mod 4.  In this canonical X-before-Z order a
Hermitian Pauli has u == popcount(x & z) mod 2, and its overall sign is
i**(u - popcount(x & z)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SINGLE = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
    (1, 1): np.array([[0, -1], [1, 0]], dtype=complex),  # XZ = -iY
}


def mult(u1: int, x1: int, z1: int, u2: int, x2: int, z2: int) -> tuple[int, int, int]:
    """Multiply two Paulis in canonical form; Z1 past X2 costs (-1)^|z1&x2|."""
    return (u1 + u2 + 2 * (z1 & x2).bit_count()) % 4, x1 ^ x2, z1 ^ z2


def symplectic_parity(x1: int, z1: int, x2: int, z2: int) -> int:
    """1 if the two Paulis anticommute, else 0."""
    return ((x1 & z2).bit_count() + (z1 & x2).bit_count()) & 1


def hermitian_phase(x: int, z: int, sign: int = +1) -> int:
    """Phase exponent u making i**u X^x Z^z Hermitian with the given sign."""
    u = (x & z).bit_count() % 4
    return u if sign > 0 else (u + 2) % 4


def pauli_sign(u: int, x: int, z: int) -> int:
    """Sign of a Hermitian Pauli in canonical form (+1 or -1)."""
    r = (u - (x & z).bit_count()) % 4
    if r == 0:
        return 1
    if r == 2:
        return -1
    raise ValueError("Pauli is not Hermitian")


@dataclass(frozen=True)
class PauliString:
    """Immutable L-qubit Pauli with exact phase bookkeeping."""

    L: int
    x: int
    z: int
    u: int = 0

    @classmethod
    def from_label(cls, label: str, sign: int = +1) -> "PauliString":
        """Build from a string like "XIZY"; site 1 is the first character."""
        x = z = 0
        u = 0
        for k, c in enumerate(label):
            bit = 1 << k
            if c == "X":
                x |= bit
            elif c == "Z":
                z |= bit
            elif c == "Y":
                x |= bit
                z |= bit
                u += 1
            elif c != "I":
                raise ValueError(f"bad Pauli letter {c!r}")
        if sign < 0:
            u += 2
        return cls(len(label), x, z, u % 4)

    @property
    def label(self) -> str:
        out = []
        for k in range(self.L):
            xb = (self.x >> k) & 1
            zb = (self.z >> k) & 1
            out.append("IXZY"[xb + 2 * zb])
        return "".join(out)

    @property
    def is_hermitian(self) -> bool:
        return (self.u - (self.x & self.z).bit_count()) % 2 == 0

    @property
    def sign(self) -> int:
        return pauli_sign(self.u, self.x, self.z)

    @property
    def phase(self) -> complex:
        return 1j ** self.u

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.L != other.L:
            raise ValueError("length mismatch")
        u, x, z = mult(self.u, self.x, self.z, other.u, other.x, other.z)
        return PauliString(self.L, x, z, u)

    def commutes_with(self, other: "PauliString") -> bool:
        return symplectic_parity(self.x, self.z, other.x, other.z) == 0

    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def dense(self) -> np.ndarray:
        """Explicit 2^L matrix; site 1 is the most significant tensor factor."""
        if self.L > 12:
            raise ValueError("dense Pauli capped at 12 sites")
        out = np.ones((1, 1), dtype=complex)
        for k in range(self.L):
            out = np.kron(out, _SINGLE[((self.x >> k) & 1, (self.z >> k) & 1)])
        return (1j ** self.u) * out
