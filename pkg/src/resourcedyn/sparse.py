"""Sparse amplitude simulation for circuits of basis-permutation gates.

Gates that permute the two-site computational basis (possibly with phases)
never change the number of configurations carrying amplitude, so a state
that starts on m basis states stays on m of them regardless of chain
length.  Configurations are stored as uint64 bit patterns with site k on
bit L-k (site 1 is the most significant bit, matching the dense layout),
kept sorted so that identical circuits reproduce identical memory layouts.
"""

from __future__ import annotations

import numpy as np

from .statevec import DensityMatrix, QuditState, shannon_entropy_bits

_DENSE_CAP = 20
_RHO_CAP = 12


class SparseState:
    """State of L qubits supported on an explicit list of configurations."""

    def __init__(self, L: int, configs: np.ndarray, amps: np.ndarray):
        if L < 1 or L > 64:
            raise ValueError("L must be in 1..64")
        configs = np.asarray(configs, dtype=np.uint64)
        amps = np.asarray(amps, dtype=complex)
        if configs.ndim != 1 or configs.shape != amps.shape:
            raise ValueError("configs and amps must be matching 1-d arrays")
        order = np.argsort(configs)
        configs = configs[order]
        amps = amps[order]
        if configs.size > 1 and (configs[1:] == configs[:-1]).any():
            raise ValueError("duplicate configurations")
        self.L = L
        self.configs = configs
        self.amps = amps

    @classmethod
    def basis_state(cls, L: int, occupied: tuple[int, ...] = ()) -> "SparseState":
        """Single configuration with 1s on the listed (1-indexed) sites."""
        word = 0
        for site in occupied:
            if not 1 <= site <= L:
                raise ValueError("site out of range")
            word |= 1 << (L - site)
        return cls(L, np.array([word], dtype=np.uint64), np.array([1.0 + 0j]))

    @classmethod
    def plus_cluster(cls, L: int, window: tuple[int, int]) -> "SparseState":
        """|+> on every window site, |0> elsewhere (2**size configurations)."""
        first, size = window
        if size < 1 or first < 1 or first + size - 1 > L:
            raise ValueError("window out of range")
        if size > 24:
            raise ValueError("cluster too large for explicit support")
        shifts = [L - (first + k) for k in range(size)]
        words = np.zeros(1 << size, dtype=np.uint64)
        for k, s in enumerate(shifts):
            pat = np.arange(1 << size, dtype=np.uint64)
            words |= ((pat >> np.uint64(size - 1 - k)) & np.uint64(1)) << np.uint64(s)
        amps = np.full(1 << size, 2.0 ** (-size / 2), dtype=complex)
        return cls(L, words, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "SparseState":
        s = SparseState.__new__(SparseState)
        s.L = self.L
        s.configs = self.configs.copy()
        s.amps = self.amps.copy()
        return s

    def to_dense(self) -> QuditState:
        if self.L > _DENSE_CAP:
            raise ValueError(f"dense conversion capped at L={_DENSE_CAP}")
        amps = np.zeros(1 << self.L, dtype=complex)
        amps[self.configs.astype(np.int64)] = self.amps
        return QuditState(2, self.L, amps)

    # -- evolution -----------------------------------------------------------

    def apply_permutation_phase(self, perm: np.ndarray, phases: np.ndarray, left_site: int) -> None:
        """Apply the two-site gate U|b> = phases[b] |perm[b]> at (left_site, left_site+1).

        b = 2*bit(left) + bit(right); perm must be a permutation of 0..3 and
        phases unit modulus, which together keep the support size fixed.
        """
        if not 1 <= left_site <= self.L - 1:
            raise ValueError("gate window out of range")
        perm = np.asarray(perm, dtype=np.int64)
        phases = np.asarray(phases, dtype=complex)
        if sorted(perm.tolist()) != [0, 1, 2, 3]:
            raise ValueError("perm is not a permutation of 0..3")
        if np.abs(np.abs(phases) - 1.0).max() > 1e-10:
            raise ValueError("phases must have unit modulus")
        sl = np.uint64(self.L - left_site)
        sr = np.uint64(self.L - left_site - 1)
        one = np.uint64(1)
        b = (((self.configs >> sl) & one) << 1 | ((self.configs >> sr) & one)).astype(np.int64)
        nb = perm[b].astype(np.uint64)
        keep = self.configs & ~((one << sl) | (one << sr))
        configs = keep | ((nb >> one) & one) << sl | (nb & one) << sr
        amps = self.amps * phases[b]
        order = np.argsort(configs)
        self.configs = configs[order]
        self.amps = amps[order]

    # -- subsystem queries -----------------------------------------------------

    def _window_patterns(self, window: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        """(window pattern as an int with site order preserved, rest pattern)."""
        first, size = window
        if size < 1 or first < 1 or first + size - 1 > self.L:
            raise ValueError("window out of range")
        one = np.uint64(1)
        a_idx = np.zeros(self.configs.shape, dtype=np.int64)
        wmask = np.uint64(0)
        for k in range(size):
            s = np.uint64(self.L - (first + k))
            a_idx = (a_idx << 1) | ((self.configs >> s) & one).astype(np.int64)
            wmask |= one << s
        return a_idx, (self.configs & ~wmask)

    def reduced_density_matrix(self, window: tuple[int, int]) -> DensityMatrix:
        first, size = window
        if size > _RHO_CAP:
            raise ValueError(f"explicit reduced density matrix capped at {_RHO_CAP} sites")
        a_idx, b_pat = self._window_patterns(window)
        rho = np.zeros((1 << size, 1 << size), dtype=complex)
        order = np.argsort(b_pat, kind="stable")
        b_sorted = b_pat[order]
        starts = np.flatnonzero(np.r_[True, b_sorted[1:] != b_sorted[:-1]])
        bounds = np.r_[starts, b_sorted.size]
        for g in range(starts.size):
            members = order[bounds[g]:bounds[g + 1]]
            ia = a_idx[members]
            v = self.amps[members]
            rho[np.ix_(ia, ia)] += np.outer(v, v.conj())
        return DensityMatrix(2, size, rho)

    def subsystem_coherence(self, window: tuple[int, int]) -> float:
        """Diagonal entropy minus entanglement entropy of the window.

        Works from the amplitude matrix M[a, b] over unique window and rest
        patterns: the window spectrum is the spectrum of the Gram matrix on
        the smaller side, and the diagonal weights are row sums of |M|^2.
        """
        a_idx, b_pat = self._window_patterns(window)
        ua, a_inv = np.unique(a_idx, return_inverse=True)
        if ua.size == 1:
            return 0.0
        ub, b_inv = np.unique(b_pat, return_inverse=True)
        if ua.size * ub.size > 1 << 24:
            raise ValueError("window amplitude matrix too large")
        M = np.zeros((ua.size, ub.size), dtype=complex)
        M[a_inv, b_inv] = self.amps
        diag = (M.real**2 + M.imag**2).sum(axis=1)
        if ua.size <= ub.size:
            gram = M @ M.conj().T
        else:
            gram = M.conj().T @ M
        spec = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
        return max(0.0, shannon_entropy_bits(diag) - shannon_entropy_bits(spec))
