"""Dense statevector simulation for chains of qubits (d=2) or qutrits (d=3).

Basis convention: site 1 is the most significant digit, so the amplitude
index of a configuration (b_1, ..., b_L) is sum_k b_k * d**(L-k).  Two-site
gates act on neighbouring sites (s, s+1) and are indexed by b_s * d + b_{s+1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_UNITARY_ATOL = 1e-10
_EIG_ATOL = 1e-10
_DEFAULT_QUTRIT_CAP = 14


@dataclass
class QuditState:
    d: int
    L: int
    amps: np.ndarray

    @classmethod
    def all_zero(cls, d: int, L: int, *, allow_large: bool = False) -> "QuditState":
        if d not in (2, 3):
            raise ValueError("only d=2 and d=3 are supported")
        if d == 3 and L > _DEFAULT_QUTRIT_CAP and not allow_large:
            raise ValueError(f"qutrit chains capped at L={_DEFAULT_QUTRIT_CAP}; pass allow_large=True")
        amps = np.zeros(d**L, dtype=complex)
        amps[0] = 1.0
        return cls(d, L, amps)

    @classmethod
    def from_site_states(cls, d: int, sites: list[np.ndarray], *, allow_large: bool = False) -> "QuditState":
        """Product state; sites[0] is site 1 (the most significant factor)."""
        L = len(sites)
        if d == 3 and L > _DEFAULT_QUTRIT_CAP and not allow_large:
            raise ValueError(f"qutrit chains capped at L={_DEFAULT_QUTRIT_CAP}; pass allow_large=True")
        amps = np.ones(1, dtype=complex)
        for v in sites:
            v = np.asarray(v, dtype=complex)
            if v.shape != (d,):
                raise ValueError("site state has wrong dimension")
            amps = np.kron(amps, v)
        return cls(d, L, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "QuditState":
        return QuditState(self.d, self.L, self.amps.copy())


@dataclass
class DensityMatrix:
    d: int
    n_sites: int
    mat: np.ndarray

    def validate(self, atol: float = _EIG_ATOL) -> None:
        m = self.mat
        if m.shape != (self.d**self.n_sites,) * 2:
            raise ValueError("density matrix has wrong shape")
        if np.abs(m - m.conj().T).max() > atol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-9:
            raise ValueError("density matrix trace is not 1")
        w = np.linalg.eigvalsh(m)
        if w.min() < -1e-9:
            raise ValueError("density matrix has a negative eigenvalue")


def apply_two_site_gate(state: QuditState, gate: np.ndarray, left_site: int) -> None:
    """Apply a d^2 x d^2 unitary to sites (left_site, left_site+1) in place."""
    d, L = state.d, state.L
    if not 1 <= left_site <= L - 1:
        raise ValueError("gate window out of range")
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (d * d, d * d):
        raise ValueError("gate has wrong shape")
    if np.abs(gate @ gate.conj().T - np.eye(d * d)).max() > _UNITARY_ATOL:
        raise ValueError("gate is not unitary")
    nl = d ** (left_site - 1)
    nr = d ** (L - left_site - 1)
    psi = state.amps.reshape(nl, d * d, nr)
    state.amps = np.einsum("ba,iaj->ibj", gate, psi).reshape(-1)


def partial_trace(state: QuditState, window: tuple[int, int]) -> DensityMatrix:
    """Reduced density matrix of the contiguous window (first_site, n_sites)."""
    first, size = window
    d, L = state.d, state.L
    if size < 1 or first < 1 or first + size - 1 > L:
        raise ValueError("window out of range; windows are contiguous (first_site, n_sites)")
    nl = d ** (first - 1)
    na = d**size
    nr = d ** (L - first - size + 1)
    psi = state.amps.reshape(nl, na, nr)
    rho = np.einsum("iaj,ibj->ab", psi, psi.conj())
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(d, size, rho)


def shannon_entropy_bits(p: np.ndarray, atol: float = _EIG_ATOL) -> float:
    p = np.asarray(p, dtype=float)
    if p.min() < -atol:
        raise ValueError("probability below tolerance")
    p = np.clip(p, 0.0, None)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy in bits; eigenvalues clamped to [0,1] within tolerance."""
    w = np.linalg.eigvalsh(rho.mat)
    if w.min() < -_EIG_ATOL * 10 or w.max() > 1 + _EIG_ATOL * 10:
        raise ValueError("spectrum outside [0,1] beyond tolerance")
    return shannon_entropy_bits(np.clip(w, 0.0, 1.0))


def haar_random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar draw via a Ginibre matrix and phase-fixed QR decomposition."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    ph = np.diag(r)
    return q * (ph / np.abs(ph))


def qutrit_magic_state() -> np.ndarray:
    """Single-qutrit magic state exp(-i (pi/9) (X + X^dag)) |0>.

    The family exp(-i theta (X + X^dag))|0> has uniform weight on the three
    shift-operator eigenvectors with relative phase e^{-3 i theta} on the
    +2 eigenvector; pi/9 maximizes the Wigner negativity over the family,
    giving mana log2(13/9).  Angles that are multiples of 2*pi/9 collapse the
    phase to a cube root of unity and yield stabilizer states instead.
    """
    k = np.arange(3)
    fourier = np.exp(2j * np.pi * np.outer(k, k) / 3) / np.sqrt(3)
    phases = np.exp(-1j * (np.pi / 9) * 2 * np.cos(2 * np.pi * k / 3))
    return fourier @ (phases / np.sqrt(3))
