"""Stabilizer tableau simulation with destabilizer rows for sign tracking.

Rows store x and z bits packed into 64-bit words (numpy uint64) plus a phase
exponent u mod 4, so row i represents i**u * prod_k X_k**x_k Z_k**z_k.  Rows
0..L-1 are destabilizers, rows L..2L-1 stabilizers.  Subsystem queries run
over Python-int bitsets: GF(2) elimination on the complement columns first,
carrying the window restriction passively, then a second pass with x columns
ahead of z columns so the diagonal rank falls out of the same sweep.
"""

from __future__ import annotations

import numpy as np

from .pauli import PauliString, mult

_ONE = np.uint64(1)
_THREE = np.uint8(3)

# conjugation tables memoized per gate image tuple
_TABLES: dict[tuple, tuple[np.ndarray, ...]] = {}


def _build_table(images: tuple) -> tuple[np.ndarray, ...]:
    """16-entry lookup: local (xl, zl, xr, zr) -> conjugated bits and phase."""
    for x, z, u in images:
        if (u - (x & z).bit_count()) % 2:
            raise ValueError("gate image is not Hermitian")
    oxl = np.zeros(16, dtype=np.uint64)
    ozl = np.zeros(16, dtype=np.uint64)
    oxr = np.zeros(16, dtype=np.uint64)
    ozr = np.zeros(16, dtype=np.uint64)
    du = np.zeros(16, dtype=np.uint8)
    for idx in range(16):
        bits = (idx & 1, (idx >> 1) & 1, (idx >> 2) & 1, (idx >> 3) & 1)
        u = x = z = 0
        # local row factor is X_l^xl Z_l^zl X_r^xr Z_r^zr; conjugate factor by factor
        for (ix, iz, iu), on in zip(images, bits):
            if on:
                u, x, z = mult(u, x, z, iu, ix, iz)
        oxl[idx] = x & 1
        ozl[idx] = z & 1
        oxr[idx] = (x >> 1) & 1
        ozr[idx] = (z >> 1) & 1
        du[idx] = u
    return oxl, ozl, oxr, ozr, du


def gate_table(images: tuple) -> tuple[np.ndarray, ...]:
    tab = _TABLES.get(images)
    if tab is None:
        tab = _TABLES[images] = _build_table(images)
    return tab


class Tableau:
    """Stabilizer state of L qubits under Clifford conjugation."""

    def __init__(self, L: int):
        if L < 1:
            raise ValueError("L must be positive")
        self.L = L
        self.W = (L + 63) // 64
        self.x = np.zeros((2 * L, self.W), dtype=np.uint64)
        self.z = np.zeros((2 * L, self.W), dtype=np.uint64)
        self.u = np.zeros(2 * L, dtype=np.uint8)
        for k in range(L):
            self.x[k, k >> 6] = _ONE << np.uint64(k & 63)  # destabilizer X_k
            self.z[L + k, k >> 6] = _ONE << np.uint64(k & 63)  # stabilizer Z_k
        self._version = 0
        self._ints_version = -1
        self._ints: tuple[list[int], list[int], list[int], list[int]] | None = None

    @classmethod
    def all_zero(cls, L: int) -> "Tableau":
        return cls(L)

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.L, t.W = self.L, self.W
        t.x = self.x.copy()
        t.z = self.z.copy()
        t.u = self.u.copy()
        t._version = 0
        t._ints_version = -1
        t._ints = None
        return t

    # -- evolution ---------------------------------------------------------

    def apply_clifford(self, images: tuple, left_site: int) -> None:
        """Conjugate all rows by the two-qubit Clifford given as images of
        X_left, Z_left, X_right, Z_right (2-site bitmasks, bit 0 = left)."""
        if not 1 <= left_site <= self.L - 1:
            raise ValueError("gate window out of range")
        oxl, ozl, oxr, ozr, du = gate_table(images)
        i = left_site - 1
        j = i + 1
        wi, bi = i >> 6, np.uint64(i & 63)
        wj, bj = j >> 6, np.uint64(j & 63)
        xi = (self.x[:, wi] >> bi) & _ONE
        zi = (self.z[:, wi] >> bi) & _ONE
        xj = (self.x[:, wj] >> bj) & _ONE
        zj = (self.z[:, wj] >> bj) & _ONE
        idx = (xi + (zi << _ONE) + (xj << np.uint64(2)) + (zj << np.uint64(3))).astype(np.intp)
        keep_i = ~(_ONE << bi)
        keep_j = ~(_ONE << bj)
        self.x[:, wi] = (self.x[:, wi] & keep_i) | (oxl[idx] << bi)
        self.z[:, wi] = (self.z[:, wi] & keep_i) | (ozl[idx] << bi)
        self.x[:, wj] = (self.x[:, wj] & keep_j) | (oxr[idx] << bj)
        self.z[:, wj] = (self.z[:, wj] & keep_j) | (ozr[idx] << bj)
        self.u = (self.u + du[idx]) & _THREE
        self._version += 1

    # -- row access as Python ints ------------------------------------------

    def _row_int(self, arr: np.ndarray, i: int) -> int:
        if self.W == 1:
            return int(arr[i, 0])
        return int.from_bytes(arr[i].astype("<u8").tobytes(), "little")

    def _rows(self) -> tuple[list[int], list[int], list[int], list[int]]:
        """(destab_x, destab_z, stab_x, stab_z) as int bitsets, cached."""
        if self._ints_version != self._version:
            L = self.L
            dx = [self._row_int(self.x, i) for i in range(L)]
            dz = [self._row_int(self.z, i) for i in range(L)]
            sx = [self._row_int(self.x, L + i) for i in range(L)]
            sz = [self._row_int(self.z, L + i) for i in range(L)]
            self._ints = (dx, dz, sx, sz)
            self._ints_version = self._version
        return self._ints

    # -- subsystem queries ---------------------------------------------------

    def subsystem_ranks(self, window: tuple[int, int]) -> tuple[int, int]:
        """(rank_full, rank_diagonal) of the stabilizer subgroup supported on
        the contiguous window (first_site, n_sites)."""
        first, size = window
        L = self.L
        a0 = first - 1
        if size < 1 or a0 < 0 or a0 + size > L:
            raise ValueError("window out of range")
        nB = L - size
        _, _, sx, sz = self._rows()
        amask = (1 << size) - 1
        lowmask = (1 << a0) - 1
        shift_hi = a0 + size
        packed = []
        for i in range(L):
            x, z = sx[i], sz[i]
            xa = (x >> a0) & amask
            za = (z >> a0) & amask
            xb = (x & lowmask) | ((x >> shift_hi) << a0)
            zb = (z & lowmask) | ((z >> shift_hi) << a0)
            packed.append(xb | (zb << nB) | (xa << (2 * nB)) | (za << (2 * nB + size)))
        abm = (1 << (2 * nB)) - 1
        pivots: dict[int, int] = {}
        zero_rows = []
        for row in packed:
            cur = row
            while True:
                low = cur & abm
                if low == 0:
                    zero_rows.append(cur >> (2 * nB))
                    break
                p = low.bit_length() - 1
                piv = pivots.get(p)
                if piv is None:
                    pivots[p] = cur
                    break
                cur ^= piv
        rank_full = len(zero_rows)
        # x bits packed above z bits so x pivots are claimed first
        piv2: dict[int, int] = {}
        r_x = 0
        for row in zero_rows:
            cur = ((row & amask) << size) | (row >> size)
            while cur:
                p = cur.bit_length() - 1
                piv = piv2.get(p)
                if piv is None:
                    piv2[p] = cur
                    if p >= size:
                        r_x += 1
                    break
                cur ^= piv
        return rank_full, rank_full - r_x

    def entanglement_entropy(self, window: tuple[int, int]) -> float:
        rank_full, _ = self.subsystem_ranks(window)
        return float(window[1] - rank_full)

    def coherence(self, window: tuple[int, int]) -> float:
        rank_full, rank_diag = self.subsystem_ranks(window)
        return float(rank_full - rank_diag)

    # -- expectations --------------------------------------------------------

    def _expect(self, px: int, pz: int, pu: int) -> float:
        dx, dz, sx, sz = self._rows()
        L = self.L
        for i in range(L):
            if ((px & sz[i]).bit_count() + (pz & sx[i]).bit_count()) & 1:
                return 0.0
        u = x = z = 0
        for i in range(L):
            if ((px & dz[i]).bit_count() + (pz & dx[i]).bit_count()) & 1:
                u, x, z = mult(u, x, z, int(self.u[L + i]), sx[i], sz[i])
        assert x == px and z == pz, "destabilizer decomposition failed"
        return 1.0 if (pu - u) % 4 == 0 else -1.0

    def pauli_expectation(self, pauli: PauliString) -> float:
        """Expectation of a Hermitian Pauli string: exactly one of 0, +1, -1."""
        if pauli.L != self.L:
            raise ValueError("length mismatch")
        if not pauli.is_hermitian:
            raise ValueError("expectation needs a Hermitian Pauli")
        return self._expect(pauli.x, pauli.z, pauli.u)

    def covariance_matrix(self, window: tuple[int, int]) -> np.ndarray:
        """Majorana covariance of the window, Gamma_ab = -(i/2)<[g_a, g_b]>.

        Majorana operators are anchored to the window's left edge:
        g_{2k-1} = (prod_{m<k} Z_m) X_k and g_{2k} = (prod_{m<k} Z_m) Y_k
        with k counted inside the window, so Gamma is window-local.
        """
        first, size = window
        a0 = first - 1
        if size < 1 or a0 < 0 or a0 + size > self.L:
            raise ValueError("window out of range")
        gam = []
        below = 0
        for k in range(size):
            xbit = 1 << (a0 + k)
            gam.append((xbit, below, 0))
            gam.append((xbit, below | xbit, 1))
            below |= xbit
        m = 2 * size
        out = np.zeros((m, m))
        for a in range(m):
            xa, za, ua = gam[a]
            for b in range(a + 1, m):
                xb, zb, ub = gam[b]
                u, x, z = mult(ua, xa, za, ub, xb, zb)
                val = self._expect(x, z, (u + 3) % 4)  # extra factor -i
                out[a, b] = val
                out[b, a] = -val
        return out

    # -- debugging serialization ----------------------------------------------

    def debug_dump(self) -> str:
        """Hex row dump. Line format: '<D|S><index> u=<u> x=<hex> z=<hex>'."""
        lines = [f"resourcedyn-tableau v1 L={self.L}"]
        for i in range(2 * self.L):
            kind = "D" if i < self.L else "S"
            k = i if i < self.L else i - self.L
            xv = self._row_int(self.x, i)
            zv = self._row_int(self.z, i)
            lines.append(f"{kind}{k} u={int(self.u[i])} x={xv:x} z={zv:x}")
        return "\n".join(lines)

    @classmethod
    def from_debug_dump(cls, text: str) -> "Tableau":
        lines = text.strip().splitlines()
        head = lines[0].split()
        if head[0] != "resourcedyn-tableau" or head[1] != "v1":
            raise ValueError("unrecognized tableau dump header")
        L = int(head[2].split("=")[1])
        tab = cls(L)
        if len(lines) != 2 * L + 1:
            raise ValueError("wrong number of rows")
        for line in lines[1:]:
            name, uf, xf, zf = line.split()
            row = int(name[1:]) + (0 if name[0] == "D" else L)
            tab.u[row] = int(uf.split("=")[1])
            xv = int(xf.split("=")[1], 16)
            zv = int(zf.split("=")[1], 16)
            for w in range(tab.W):
                tab.x[row, w] = (xv >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
                tab.z[row, w] = (zv >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
        tab._version += 1
        return tab
