"""Two-site gate ensembles: Haar, the two-qubit Clifford group and its
incoherent/matchgate subsets, permutation-phase gates, and two-qutrit
Cliffords.

The 11,520-element two-qubit Clifford group is enumerated once by its
conjugation action (images of X1, Z1, X2, Z2 with signs) and cached; list
order is canonical, so a uniform index draw is a uniform gate draw and the
same circuit replays identically everywhere.  Matchgates are classified by
chirality through a deterministic transport walk described at
`classify_matchgate_chirality`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .pauli import PauliString, hermitian_phase, symplectic_parity
from .statevec import haar_random_unitary
from .tableau import gate_table

_GAMMAS = (
    PauliString(2, 1, 0, 0),  # X1
    PauliString(2, 1, 1, 1),  # Y1
    PauliString(2, 2, 1, 0),  # Z1 X2
    PauliString(2, 2, 3, 1),  # Z1 Y2
)

ENSEMBLE_KINDS = (
    "Haar4",
    "CliffordFull",
    "CliffordMinusIncoherent",
    "CliffordIncoherent",
    "CliffordMinusMatchgate",
    "CliffordMatchgate",
    "SwapOrIncoherent",
    "PermutationPhase",
    "QutritHaar9",
    "QutritClifford2",
    "ChiralMatchgateMix",
)


class CliffordGate2:
    """Two-qubit Clifford gate stored by its conjugation action.

    ``images`` are the conjugates of X1, Z1, X2, Z2 as Hermitian two-site
    Pauli strings; the 4x4 unitary is synthesized on demand and cached.
    """

    def __init__(self, images: tuple[PauliString, ...]):
        images = tuple(images)
        if len(images) != 4:
            raise ValueError("need images of X1, Z1, X2, Z2")
        for p in images:
            if p.L != 2 or not p.is_hermitian or (p.x | p.z) == 0:
                raise ValueError("images must be Hermitian non-identity 2-site Paulis")
        for a in range(4):
            for b in range(a + 1, 4):
                want = 1 if (a, b) in ((0, 1), (2, 3)) else 0
                got = symplectic_parity(images[a].x, images[a].z, images[b].x, images[b].z)
                if got != want:
                    raise ValueError("images do not satisfy the generator commutation pattern")
        self.images = images
        self.image_bits = tuple((p.x, p.z, p.u) for p in images)

    def __eq__(self, other) -> bool:
        return isinstance(other, CliffordGate2) and self.image_bits == other.image_bits

    def __hash__(self) -> int:
        return hash(self.image_bits)

    def __repr__(self) -> str:
        labels = ", ".join(f"{'+' if p.sign > 0 else '-'}{p.label}" for p in self.images)
        return f"CliffordGate2({labels})"

    # -- conjugation -----------------------------------------------------------

    def conjugate(self, x: int, z: int, u: int) -> tuple[int, int, int]:
        """Image of i^u X^x Z^z (2-site bitmasks) under this gate."""
        oxl, ozl, oxr, ozr, du = gate_table(self.image_bits)
        idx = (x & 1) | (z & 1) << 1 | (x >> 1 & 1) << 2 | (z >> 1 & 1) << 3
        xo = int(oxl[idx]) | int(oxr[idx]) << 1
        zo = int(ozl[idx]) | int(ozr[idx]) << 1
        return xo, zo, (u + int(du[idx])) % 4

    def conjugate_pauli(self, p: PauliString) -> PauliString:
        x, z, u = self.conjugate(p.x, p.z, p.u)
        return PauliString(2, x, z, u)

    # -- derived forms ----------------------------------------------------------

    @cached_property
    def _unitary(self) -> np.ndarray:
        eye = np.eye(4, dtype=complex)
        proj = (eye + self.images[1].dense()) @ (eye + self.images[3].dense()) / 4.0
        col = 0
        while np.linalg.norm(proj[:, col]) < 1e-9:
            col += 1
        phi = proj[:, col] / np.linalg.norm(proj[:, col])
        lead = int(np.flatnonzero(np.abs(phi) > 1e-9)[0])
        phi = phi * (phi[lead].conjugate() / abs(phi[lead]))
        mx1 = self.images[0].dense()
        mx2 = self.images[2].dense()
        u = np.stack([phi, mx2 @ phi, mx1 @ phi, mx1 @ (mx2 @ phi)], axis=1)
        if np.abs(u @ u.conj().T - eye).max() > 1e-9:
            raise RuntimeError("unitary synthesis failed")
        u.setflags(write=False)
        return u

    def unitary(self) -> np.ndarray:
        """4x4 unitary with a canonical global phase (read-only array)."""
        return self._unitary

    @cached_property
    def is_incoherent(self) -> bool:
        """True when the unitary is a basis permutation times phases, i.e.
        both Z images stay in the diagonal Pauli subgroup."""
        return self.images[1].x == 0 and self.images[3].x == 0

    def permutation_phase(self) -> tuple[np.ndarray, np.ndarray]:
        """(perm, phases) with U|b> = phases[b] |perm[b]>; error if not monomial."""
        u = self.unitary()
        perm = np.zeros(4, dtype=np.int64)
        phases = np.zeros(4, dtype=complex)
        for b in range(4):
            nz = np.flatnonzero(np.abs(u[:, b]) > 1e-9)
            if nz.size != 1:
                raise ValueError("gate is not a basis permutation")
            perm[b] = nz[0]
            phases[b] = u[nz[0], b]
        return perm, phases

    @cached_property
    def majorana_action(self) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
        """Signed permutation (targets, signs) on the four window Majoranas,
        or None when some image is not a single Majorana."""
        targets = []
        signs = []
        for g in _GAMMAS:
            img = self.conjugate_pauli(g)
            for b, h in enumerate(_GAMMAS):
                if img.x == h.x and img.z == h.z:
                    targets.append(b + 1)
                    signs.append(1 if (img.u - h.u) % 4 == 0 else -1)
                    break
            else:
                return None
        if sorted(targets) != [1, 2, 3, 4]:
            return None
        return tuple(targets), tuple(signs)

    @cached_property
    def is_matchgate(self) -> bool:
        """Majorana action is a signed permutation with determinant +1."""
        act = self.majorana_action
        if act is None:
            return False
        targets, signs = act
        inv = sum(targets[i] > targets[j] for i in range(4) for j in range(i + 1, 4))
        det = (-1) ** inv * signs[0] * signs[1] * signs[2] * signs[3]
        return det == 1

    # -- group structure --------------------------------------------------------

    def compose(self, other: "CliffordGate2") -> "CliffordGate2":
        """Gate equal to applying ``other`` first, then ``self``."""
        imgs = tuple(self.conjugate_pauli(p) for p in other.images)
        return CliffordGate2(imgs)

    def inverse(self) -> "CliffordGate2":
        cols = []
        for p in self.images:
            cols.append((p.x & 1, p.z & 1, p.x >> 1 & 1, p.z >> 1 & 1))
        m = np.array(cols, dtype=np.int64).T  # column k = image vector of generator k
        omega = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
        minv = omega @ m.T @ omega % 2
        gens = ((1, 0), (0, 1), (2, 0), (0, 2))
        imgs = []
        for k in range(4):
            v = minv[:, k]
            x = int(v[0]) | int(v[2]) << 1
            z = int(v[1]) | int(v[3]) << 1
            u = hermitian_phase(x, z)
            _, _, uo = self.conjugate(x, z, u)
            if uo % 4 != 0:
                u = (u + 2) % 4
            imgs.append(PauliString(2, x, z, u))
            xx, zz, uo = self.conjugate(imgs[-1].x, imgs[-1].z, imgs[-1].u)
            if (xx, zz, uo) != (gens[k][0], gens[k][1], 0):
                raise RuntimeError("inverse construction failed")
        return CliffordGate2(tuple(imgs))


def _gate_from_labels(lx1: str, lz1: str, lx2: str, lz2: str) -> CliffordGate2:
    return CliffordGate2(tuple(PauliString.from_label(s) for s in (lx1, lz1, lx2, lz2)))


def identity_gate() -> CliffordGate2:
    return _gate_from_labels("XI", "ZI", "IX", "IZ")


def swap_gate() -> CliffordGate2:
    return _gate_from_labels("IX", "IZ", "XI", "ZI")


def cnot_gate() -> CliffordGate2:
    """CNOT with control on the left site."""
    return _gate_from_labels("XX", "ZI", "IX", "ZZ")


def cz_gate() -> CliffordGate2:
    return _gate_from_labels("XZ", "ZI", "ZX", "IZ")


def fswap_gate() -> CliffordGate2:
    """SWAP followed by CZ bookkeeping: exchanges the two fermionic modes."""
    return _gate_from_labels("ZX", "IZ", "XZ", "ZI")


def hadamard_left_gate() -> CliffordGate2:
    return _gate_from_labels("ZI", "XI", "IX", "IZ")


# -- enumeration ----------------------------------------------------------------

_C2: list[CliffordGate2] | None = None
_C2_INDEX: dict[tuple, int] | None = None


def enumerate_c2() -> list[CliffordGate2]:
    """All 11,520 two-qubit Cliffords in canonical order (cached)."""
    global _C2
    if _C2 is None:
        cands = [(x, z) for x in range(4) for z in range(4) if x | z]

        def anti(a, b):
            return symplectic_parity(a[0], a[1], b[0], b[1])

        tuples = []
        for a in cands:
            for b in cands:
                if not anti(a, b):
                    continue
                for c in cands:
                    if anti(c, a) or anti(c, b):
                        continue
                    for e in cands:
                        if anti(e, a) or anti(e, b) or not anti(e, c):
                            continue
                        tuples.append((a, b, c, e))
        if len(tuples) != 720:
            raise RuntimeError("symplectic enumeration is broken")
        gates = []
        for tup in tuples:
            for smask in range(16):
                imgs = tuple(
                    PauliString(2, x, z, hermitian_phase(x, z, -1 if smask >> k & 1 else +1))
                    for k, (x, z) in enumerate(tup)
                )
                gates.append(CliffordGate2(imgs))
        gates.sort(key=lambda g: g.image_bits)
        _C2 = gates
    return _C2


def canonical_index(gate: CliffordGate2) -> int:
    """Position of a gate in the canonical enumeration (KeyError if absent)."""
    global _C2_INDEX
    if _C2_INDEX is None:
        _C2_INDEX = {g.image_bits: i for i, g in enumerate(enumerate_c2())}
    return _C2_INDEX[gate.image_bits]


def filter_incoherent(gates: list[CliffordGate2]) -> list[CliffordGate2]:
    return [g for g in gates if g.is_incoherent]


def filter_matchgate(gates: list[CliffordGate2]) -> list[CliffordGate2]:
    return [g for g in gates if g.is_matchgate]


# -- matchgate chirality ----------------------------------------------------------

def _orbit_drift(sigma: tuple[int, ...], start: int) -> int:
    """Net displacement of a window Majorana after 12 brickwall double-layers.

    Positions live on the integer Majorana lattice; odd layers tile it as
    [4w+1 .. 4w+4] and even layers shift the tiling by two.  Returns 0 as
    soon as the walk revisits its start (closed orbit); ballistic orbits
    keep a fixed drift sign, so the sign of the result is well defined.
    """
    p = start
    for _ in range(12):
        for off in (0, 2):
            w = (p - 1 - off) // 4
            p = off + 4 * w + sigma[p - off - 4 * w - 1]
        if p == start:
            return 0
    return p - start


def classify_matchgate_chirality(g: CliffordGate2) -> str:
    """Transport class of a matchgate: "RightMoving", "LeftMoving", or "Neutral".

    The gate's signed Majorana permutation is iterated through an infinite
    brickwall of copies of the gate.  Every orbit of that walk is either
    closed (content stays local) or ballistic, and ballistic orbits come in
    right/left pairs, so no gate moves all content one way; the class is the
    drift direction of the first ballistic orbit among gamma_1..gamma_4,
    and gates whose orbits are all closed are Neutral.
    """
    if not g.is_matchgate:
        raise ValueError("chirality is defined for matchgates only")
    sigma = g.majorana_action[0]
    for a in (1, 2, 3, 4):
        d = _orbit_drift(sigma, a)
        if d:
            return "RightMoving" if d > 0 else "LeftMoving"
    return "Neutral"


_CHIRALITY: dict[str, list[CliffordGate2]] | None = None


def chirality_classes() -> dict[str, list[CliffordGate2]]:
    """Matchgates grouped by transport class (cached)."""
    global _CHIRALITY
    if _CHIRALITY is None:
        groups: dict[str, list[CliffordGate2]] = {"RightMoving": [], "LeftMoving": [], "Neutral": []}
        for g in filter_matchgate(enumerate_c2()):
            groups[classify_matchgate_chirality(g)].append(g)
        _CHIRALITY = groups
    return _CHIRALITY


def ensemble_census() -> dict:
    """Cardinalities of the enumerated sets and the chirality classes."""
    c2 = enumerate_c2()
    chir = chirality_classes()
    return {
        "clifford2": len(c2),
        "incoherent": len(filter_incoherent(c2)),
        "matchgate": len(filter_matchgate(c2)),
        "chirality": {k: len(v) for k, v in chir.items()},
    }


# -- other gate families ------------------------------------------------------------

class PermutationPhaseGate:
    """Two-site gate U|b> = phases[b] |perm[b]> on the basis b = 2*b_left + b_right."""

    __slots__ = ("perm", "phases")

    def __init__(self, perm, phases):
        perm = tuple(int(v) for v in perm)
        if sorted(perm) != [0, 1, 2, 3]:
            raise ValueError("perm is not a permutation of 0..3")
        phases = tuple(complex(v) for v in phases)
        if any(abs(abs(v) - 1.0) > 1e-10 for v in phases):
            raise ValueError("phases must have unit modulus")
        self.perm = perm
        self.phases = phases

    def unitary(self) -> np.ndarray:
        u = np.zeros((4, 4), dtype=complex)
        for b in range(4):
            u[self.perm[b], b] = self.phases[b]
        return u

    def permutation_phase(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.perm, dtype=np.int64), np.array(self.phases, dtype=complex)


class QutritCliffordGate:
    """Sampled two-qutrit Clifford: dense 9x9 unitary plus its symplectic data."""

    __slots__ = ("matrix", "symplectic", "phase_shifts")

    def __init__(self, matrix: np.ndarray, symplectic: np.ndarray, phase_shifts: np.ndarray):
        self.matrix = matrix
        self.symplectic = symplectic
        self.phase_shifts = phase_shifts

    def unitary(self) -> np.ndarray:
        return self.matrix


# -- qutrit Clifford sampling ---------------------------------------------------------

_W3 = np.exp(2j * np.pi / 3)
_X3 = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=complex)
_Z3 = np.diag([1.0, _W3, _W3**2])
_OMEGA_FORM = np.array([[0, 1, 0, 0], [2, 0, 0, 0], [0, 0, 0, 1], [0, 0, 2, 0]])


def qutrit_pauli_unitary(vec, k: int = 0) -> np.ndarray:
    """omega^k X^x1 Z^z1 (x) X^x2 Z^z2 for vec = (x1, z1, x2, z2) mod 3."""
    x1, z1, x2, z2 = (int(v) % 3 for v in vec)
    site1 = np.linalg.matrix_power(_X3, x1) @ np.linalg.matrix_power(_Z3, z1)
    site2 = np.linalg.matrix_power(_X3, x2) @ np.linalg.matrix_power(_Z3, z2)
    return _W3 ** (k % 3) * np.kron(site1, site2)


def _sp_form(a: np.ndarray, b: np.ndarray) -> int:
    return int(a @ _OMEGA_FORM @ b) % 3


def _solve_pairing(v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform w with <v, w> = 1 over F3 (27 solutions for v != 0)."""
    f = v @ _OMEGA_FORM % 3
    pivot = int(np.flatnonzero(f)[0])
    inv = {1: 1, 2: 2}
    w0 = np.zeros(4, dtype=np.int64)
    w0[pivot] = inv[int(f[pivot])]
    w = w0.copy()
    for j in range(4):
        if j == pivot:
            continue
        t = int(rng.integers(3))
        # kernel direction e_j - f_j * f_pivot^{-1} e_pivot
        w[j] = (w[j] + t) % 3
        w[pivot] = (w[pivot] - t * f[j] * inv[int(f[pivot])]) % 3
    return w % 3


def _sample_sp4_f3(rng: np.random.Generator) -> np.ndarray:
    """Uniform element of the symplectic group on 4 coordinates over F3."""
    idx = int(rng.integers(1, 81))
    v1 = np.array([idx // 27, idx // 9 % 3, idx // 3 % 3, idx % 3], dtype=np.int64)
    w1 = _solve_pairing(v1, rng)
    # basis of the symplectic complement of span{v1, w1}
    a = np.vstack([v1 @ _OMEGA_FORM % 3, w1 @ _OMEGA_FORM % 3])
    basis = []
    pivots = []
    a = a.copy()
    for col in range(4):
        row = None
        for r in range(a.shape[0]):
            if r not in pivots and a[r, col] % 3:
                row = r
                break
        if row is None:
            continue
        inv = {1: 1, 2: 2}[int(a[row, col] % 3)]
        a[row] = a[row] * inv % 3
        for r in range(a.shape[0]):
            if r != row and a[r, col] % 3:
                a[r] = (a[r] - a[r, col] * a[row]) % 3
        pivots.append(row)
        basis.append(col)
    free = [c for c in range(4) if c not in basis]
    kernel = []
    for c in free:
        u = np.zeros(4, dtype=np.int64)
        u[c] = 1
        for r, bc in zip(pivots, basis):
            u[bc] = (-a[r, c]) % 3
        kernel.append(u)
    u1, u2 = kernel
    c = _sp_form(u1, u2)
    if c == 0:
        raise RuntimeError("degenerate complement basis")
    u2 = u2 * {1: 1, 2: 2}[c] % 3
    # uniform symplectic pair inside the complement
    ab = int(rng.integers(1, 9))
    a2, b2 = ab // 3, ab % 3
    v2 = (a2 * u1 + b2 * u2) % 3
    if a2:
        w2 = {1: 1, 2: 2}[a2] * u2 % 3
    else:
        w2 = {1: 1, 2: 2}[(-b2) % 3] * u1 % 3
    w2 = (w2 + int(rng.integers(3)) * v2) % 3
    m = np.stack([v1, w1, v2, w2], axis=1)
    if ((m.T @ _OMEGA_FORM @ m) % 3 != _OMEGA_FORM % 3).any():
        raise RuntimeError("sampled matrix is not symplectic")
    return m


def sample_qutrit_clifford2(rng: np.random.Generator) -> QutritCliffordGate:
    """Uniform two-qutrit Clifford modulo global phase.

    Draws a uniform symplectic image basis over F3 plus uniform phase shifts
    for the four generator images, then synthesizes the 9x9 unitary from the
    stabilizer state fixed by the images of Z1 and Z2.
    """
    m = _sample_sp4_f3(rng)
    ks = rng.integers(0, 3, size=4)
    p1 = qutrit_pauli_unitary(m[:, 1], int(ks[1]))
    p2 = qutrit_pauli_unitary(m[:, 3], int(ks[3]))
    eye = np.eye(9, dtype=complex)
    proj = (eye + p1 + p1 @ p1) @ (eye + p2 + p2 @ p2) / 9.0
    col = 0
    while np.linalg.norm(proj[:, col]) < 1e-9:
        col += 1
    phi = proj[:, col] / np.linalg.norm(proj[:, col])
    lead = int(np.flatnonzero(np.abs(phi) > 1e-9)[0])
    phi = phi * (phi[lead].conjugate() / abs(phi[lead]))
    mx1 = qutrit_pauli_unitary(m[:, 0], int(ks[0]))
    mx2 = qutrit_pauli_unitary(m[:, 2], int(ks[2]))
    cols = []
    pa = eye
    for _ in range(3):
        pb = pa @ phi
        for _ in range(3):
            cols.append(pb)
            pb = mx2 @ pb
        pa = pa @ mx1
    u = np.stack(cols, axis=1)
    if np.abs(u @ u.conj().T - eye).max() > 1e-10:
        raise RuntimeError("qutrit unitary synthesis failed")
    return QutritCliffordGate(u, m, ks)


# -- ensemble specification and sampling -----------------------------------------------

@dataclass(frozen=True)
class EnsembleSpec:
    """Which gate set to draw from, with its parameters.

    ``p`` is the SWAP probability of SwapOrIncoherent; ``n_right``,
    ``n_left``, ``n_neutral`` size the ChiralMatchgateMix pool, drawn from
    the chirality classes with ``selection_seed`` (first gates in canonical
    order when the seed is None).
    """

    kind: str
    p: float = 0.5
    n_right: int = 10
    n_left: int = 10
    n_neutral: int = 10
    selection_seed: int | None = None

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if min(self.n_right, self.n_left, self.n_neutral) < 0:
            raise ValueError("chirality-class counts must be nonnegative")

    @property
    def site_dim(self) -> int:
        return 3 if self.kind.startswith("Qutrit") else 2


_PERMS24 = tuple(itertools.permutations(range(4)))
_POOLS: dict[EnsembleSpec, tuple] = {}


def _pool(spec: EnsembleSpec) -> tuple:
    cached = _POOLS.get(spec)
    if cached is not None:
        return cached
    c2 = enumerate_c2()
    if spec.kind == "CliffordFull":
        pool = (tuple(c2),)
    elif spec.kind == "CliffordIncoherent":
        pool = (tuple(filter_incoherent(c2)),)
    elif spec.kind == "CliffordMinusIncoherent":
        pool = (tuple(g for g in c2 if not g.is_incoherent),)
    elif spec.kind == "CliffordMatchgate":
        pool = (tuple(filter_matchgate(c2)),)
    elif spec.kind == "CliffordMinusMatchgate":
        pool = (tuple(g for g in c2 if not g.is_matchgate),)
    elif spec.kind == "SwapOrIncoherent":
        pool = (swap_gate(), tuple(filter_incoherent(c2)))
    elif spec.kind == "ChiralMatchgateMix":
        classes = chirality_classes()
        sel = None
        if spec.selection_seed is not None:
            sel = np.random.Generator(np.random.Philox(key=spec.selection_seed))
        chosen: list[CliffordGate2] = []
        for name, n in (("RightMoving", spec.n_right), ("LeftMoving", spec.n_left), ("Neutral", spec.n_neutral)):
            cls = classes[name]
            if n > len(cls):
                raise ValueError(f"{name} has only {len(cls)} gates, {n} requested")
            if sel is None:
                chosen.extend(cls[:n])
            else:
                idx = sorted(sel.choice(len(cls), size=n, replace=False).tolist())
                chosen.extend(cls[i] for i in idx)
        if not chosen:
            raise ValueError("empty chiral mix")
        pool = (tuple(chosen),)
    else:
        pool = ()
    _POOLS[spec] = pool
    return pool


def sample_gate(spec: EnsembleSpec, rng: np.random.Generator):
    """One gate drawn per the spec: a bare unitary for Haar kinds, a
    CliffordGate2 / PermutationPhaseGate / QutritCliffordGate otherwise."""
    kind = spec.kind
    if kind == "Haar4":
        return haar_random_unitary(4, rng)
    if kind == "QutritHaar9":
        return haar_random_unitary(9, rng)
    if kind == "QutritClifford2":
        return sample_qutrit_clifford2(rng)
    if kind == "PermutationPhase":
        perm = _PERMS24[int(rng.integers(len(_PERMS24)))]
        phases = np.exp(2j * np.pi * rng.random(4))
        return PermutationPhaseGate(perm, phases)
    if kind == "SwapOrIncoherent":
        swap, incoherent = _pool(spec)
        if rng.random() < spec.p:
            return swap
        return incoherent[int(rng.integers(len(incoherent)))]
    (gates,) = _pool(spec)
    return gates[int(rng.integers(len(gates)))]
