"""Brickwall random-circuit experiments: resource growth and spreading.

A chain of ``L`` qudits evolves under depth-``T`` brickwork circuits whose
two-site gates are drawn from a configured ensemble, each slot filled
independently with probability ``epsilon``. After every layer a resource
monotone is evaluated on contiguous windows, either centered windows of
several sizes (growth runs from the free all-zero state) or a fixed size
swept across the chain (spreading runs from a central resource cluster).
Results are averaged over circuit realizations with standard errors.

Randomness is counter-based for reproducibility: realization ``r`` of a run
with master seed ``s`` uses an independent Philox stream keyed by
``(s << 64) | r``, and gate draws inside a realization are ordered by
(layer, slot). Aggregation concatenates per-realization values in index
order before averaging, so results are byte-identical for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .ensembles import (
    CliffordGate2,
    EnsembleSpec,
    cnot_gate,
    cz_gate,
    sample_gate,
)
from .monotones import (
    enumerate_stabilizer_states,
    log_robustness_of_magic,
    mana,
    relative_entropy_of_coherence,
    relative_entropy_of_non_gaussianity,
)
from .sparse import SparseState
from .statevec import (
    QuditState,
    apply_two_site_gate,
    partial_trace,
    qutrit_magic_state,
)
from .tableau import Tableau

__all__ = [
    "InitialState",
    "CircuitSpec",
    "ResourceSeries",
    "SpreadGrid",
    "FitResult",
    "CensoredSeriesError",
    "MONOTONES",
    "BACKENDS",
    "build_layer",
    "run_growth",
    "run_spread",
    "growth_ensembles",
    "spread_ensembles",
    "default_threshold",
    "extract_peak_time",
    "fit_decay",
    "threshold_time",
    "front_velocity",
    "peak_velocity",
    "peak_attenuation",
    "analyze_series",
    "analyze_grid",
]

MONOTONES = ("lrom", "coherence", "nongaussianity", "mana")
BACKENDS = ("Dense", "Tableau", "Sparse")

_STATE_KINDS = ("AllZero", "TCluster", "PlusCluster", "FermionicCluster",
                "QutritMagicCluster")

# Ensembles that generate the resource measured by each monotone (growth
# runs) and ensembles that are free for it (spreading runs).
_GROWTH_ENSEMBLES = {
    "lrom": ("Haar4",),
    "coherence": ("CliffordMinusIncoherent",),
    "nongaussianity": ("CliffordMinusMatchgate",),
    "mana": ("QutritHaar9",),
}
_SPREAD_ENSEMBLES = {
    "lrom": ("CliffordFull",),
    "coherence": ("SwapOrIncoherent", "PermutationPhase", "CliffordIncoherent"),
    "nongaussianity": ("CliffordMatchgate", "ChiralMatchgateMix"),
    "mana": ("QutritClifford2",),
}

# Gate sets expressible on each restricted backend.
_CLIFFORD_KINDS = frozenset({
    "CliffordFull", "CliffordIncoherent", "CliffordMinusIncoherent",
    "CliffordMatchgate", "CliffordMinusMatchgate", "SwapOrIncoherent",
    "ChiralMatchgateMix",
})
_PERMUTATION_KINDS = frozenset({
    "PermutationPhase", "SwapOrIncoherent", "CliffordIncoherent",
})

# Initial states a stabilizer tableau can prepare.
_TABLEAU_STATES = frozenset({"AllZero", "PlusCluster", "FermionicCluster"})
_SPARSE_STATES = frozenset({"AllZero", "PlusCluster"})

# LP cost caps the robustness windows; the Wigner table caps mana windows.
_MAX_WINDOW = {"lrom": 4, "mana": 5}

# Stream id reserved for per-run ensemble setup (chiral pool selection);
# realization indices stay well below it.
_SETUP_STREAM = 0xFFFFFFFFFFFFFFFF

_WORKER_ENV = "RESOURCEDYN_WORKERS"


@dataclass(frozen=True)
class InitialState:
    """Product initial state: free background with an optional central cluster.

    ``size`` counts cluster sites, except for FermionicCluster where it
    counts four-site blocks. AllZero takes no size.
    """

    kind: str
    size: int = 0

    def __post_init__(self):
        if self.kind not in _STATE_KINDS:
            raise ValueError(f"unknown initial state kind {self.kind!r}")
        if self.kind == "AllZero":
            if self.size != 0:
                raise ValueError("AllZero takes no cluster size")
        elif self.size < 1:
            raise ValueError(f"{self.kind} needs a positive cluster size")

    @property
    def cluster_sites(self) -> int:
        if self.kind == "FermionicCluster":
            return 4 * self.size
        return self.size

    @property
    def site_dim(self) -> int:
        return 3 if self.kind == "QutritMagicCluster" else 2


@dataclass(frozen=True)
class CircuitSpec:
    """Complete description of one Monte-Carlo circuit experiment."""

    d: int
    L: int
    depth: int
    epsilon: float
    ensemble: EnsembleSpec
    backend: str
    initial_state: InitialState
    seed: int
    realizations: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError("site dimension must be 2 or 3")
        if self.L < 2 or self.L % 2:
            raise ValueError("chain length must be even and at least 2")
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must fit in 64 bits")
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if self.ensemble.site_dim != self.d:
            raise ValueError(
                f"ensemble {self.ensemble.kind!r} acts on d={self.ensemble.site_dim} sites")
        init = self.initial_state
        if init.kind != "AllZero" and init.site_dim != self.d:
            raise ValueError(f"initial state {init.kind!r} needs d={init.site_dim}")
        if init.cluster_sites > self.L:
            raise ValueError("cluster does not fit on the chain")
        if self.backend == "Tableau":
            if self.d != 2:
                raise ValueError("the tableau backend is qubit only")
            if self.ensemble.kind not in _CLIFFORD_KINDS:
                raise ValueError(
                    f"tableau backend cannot apply {self.ensemble.kind!r} gates")
            if init.kind not in _TABLEAU_STATES:
                raise ValueError(
                    f"tableau backend cannot prepare {init.kind!r}")
        elif self.backend == "Sparse":
            if self.ensemble.kind not in _PERMUTATION_KINDS:
                raise ValueError(
                    f"sparse backend needs permutation-phase gates, not {self.ensemble.kind!r}")
            if init.kind not in _SPARSE_STATES:
                raise ValueError(
                    f"sparse backend cannot prepare {init.kind!r}")

    @cached_property
    def resolved_ensemble(self) -> EnsembleSpec:
        """Ensemble with its pool selection pinned to this run's seed."""
        ens = self.ensemble
        if ens.kind == "ChiralMatchgateMix" and ens.selection_seed is None:
            ens = replace(ens, selection_seed=(self.seed << 64) | _SETUP_STREAM)
        return ens

    @property
    def cluster_window(self) -> tuple[int, int]:
        """(first site, length) of the cluster, centered on the chain."""
        sites = self.initial_state.cluster_sites
        return ((self.L - sites) // 2 + 1, sites)

    def cluster_center(self) -> float:
        first, sites = self.cluster_window
        return first + (sites - 1) / 2 if sites else (self.L + 1) / 2


@dataclass(frozen=True)
class ResourceSeries:
    """Layer-resolved monotone averages for several centered window sizes."""

    monotone: str
    subsystem_sizes: tuple[int, ...]
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    realizations: int

    def row(self, size: int) -> tuple[np.ndarray, np.ndarray]:
        """(mean, stderr) series for one window size."""
        i = self.subsystem_sizes.index(size)
        return self.mean[i], self.stderr[i]


@dataclass(frozen=True)
class SpreadGrid:
    """Layer-resolved monotone averages on a window swept across the chain."""

    monotone: str
    subsystem_size: int
    x_r: np.ndarray
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    realizations: int

    def column(self, x: float) -> tuple[np.ndarray, np.ndarray]:
        """(mean, stderr) time series at one window offset."""
        i = int(np.flatnonzero(np.abs(self.x_r - x) < 1e-9)[0])
        return self.mean[i], self.stderr[i]


def build_layer(parity: str, spec: CircuitSpec,
                rng: np.random.Generator) -> list[tuple[object, int]]:
    """Draw one brickwork layer: a list of (gate, left site) placements.

    Odd layers pair sites (1,2), (3,4), ...; even layers pair (2,3), (4,5),
    ... . Every slot consumes one uniform variate for the epsilon coin, in
    left-to-right order, and a slot that passes the coin immediately draws
    its gate; this fixed consumption order is what seed-replay tests rely on.
    """
    if parity not in ("odd", "even"):
        raise ValueError("parity must be 'odd' or 'even'")
    start = 1 if parity == "odd" else 2
    ensemble = spec.resolved_ensemble
    layer = []
    for site in range(start, spec.L, 2):
        if rng.random() < spec.epsilon:
            layer.append((sample_gate(ensemble, rng), site))
    return layer


# -- backends -------------------------------------------------------------------


def _cluster_factors(spec: CircuitSpec) -> list[np.ndarray]:
    """Dense amplitude factors of the cluster, one per site or block."""
    kind = spec.initial_state.kind
    if kind == "TCluster":
        site = np.array([np.cos(np.pi / 8), np.sin(np.pi / 8)], dtype=complex)
        return [site] * spec.initial_state.size
    if kind == "PlusCluster":
        site = np.full(2, 1 / np.sqrt(2), dtype=complex)
        return [site] * spec.initial_state.size
    if kind == "QutritMagicCluster":
        return [qutrit_magic_state()] * spec.initial_state.size
    if kind == "FermionicCluster":
        block = np.zeros(16, dtype=complex)
        block[[0b0000, 0b1100, 0b0011]] = 0.5
        block[0b1111] = -0.5
        return [block] * spec.initial_state.size
    return []


class _DenseBackend:
    def __init__(self, spec: CircuitSpec):
        self.spec = spec
        factors = _cluster_factors(spec)
        if not factors:
            self.state = QuditState.all_zero(spec.d, spec.L)
            return
        first, sites = spec.cluster_window
        zero = np.zeros(spec.d, dtype=complex)
        zero[0] = 1.0
        vec = np.ones(1, dtype=complex)
        for _ in range(first - 1):
            vec = np.kron(vec, zero)
        for f in factors:
            vec = np.kron(vec, f)
        for _ in range(spec.L - (first - 1) - sites):
            vec = np.kron(vec, zero)
        self.state = QuditState(spec.d, spec.L, vec)

    def apply(self, gate, left_site: int) -> None:
        u = gate if isinstance(gate, np.ndarray) else gate.unitary()
        apply_two_site_gate(self.state, u, left_site)

    def value(self, monotone: str, window: tuple[int, int]) -> float:
        rho = partial_trace(self.state, window)
        if monotone == "lrom":
            dictionary = enumerate_stabilizer_states(window[1])
            return log_robustness_of_magic(rho, dictionary,
                                           allow_n4=window[1] == 4)
        if monotone == "coherence":
            return relative_entropy_of_coherence(rho)
        if monotone == "nongaussianity":
            return relative_entropy_of_non_gaussianity(rho)
        return mana(rho)


_IDENTITY1 = ((1, 0, 0), (0, 1, 0))
_HADAMARD1 = ((0, 1, 0), (1, 0, 0))  # X -> Z, Z -> X


def _embedded_clifford1(left, right) -> tuple:
    """Two-site image bits of a product of single-site Cliffords.

    Each factor is the (X image, Z image) pair as single-site (x, z, u)
    triples, identity where None. Bit 0 addresses the left site."""
    lx, lz = left if left is not None else _IDENTITY1
    rx, rz = right if right is not None else _IDENTITY1

    def shift(t):
        return (t[0] << 1, t[1] << 1, t[2])

    return (lx, lz, shift(rx), shift(rz))


class _TableauBackend:
    def __init__(self, spec: CircuitSpec):
        self.spec = spec
        self.tab = Tableau(spec.L)
        kind = spec.initial_state.kind
        if kind == "PlusCluster":
            first, sites = spec.cluster_window
            for site in range(first, first + sites):
                self._hadamard(site)
        elif kind == "FermionicCluster":
            first, _ = spec.cluster_window
            for block in range(spec.initial_state.size):
                self._fermionic_block(first + 4 * block)

    def _hadamard(self, site: int) -> None:
        if site < self.spec.L:
            self.tab.apply_clifford(_embedded_clifford1(_HADAMARD1, None), site)
        else:
            self.tab.apply_clifford(_embedded_clifford1(None, _HADAMARD1), site - 1)

    def _fermionic_block(self, first: int) -> None:
        """Prepare (|0000> + |1100> + |0011> - |1111>)/2 on four sites:
        two Bell pairs with a central controlled-Z."""
        cnot = cnot_gate().image_bits
        cz = cz_gate().image_bits
        self._hadamard(first)
        self.tab.apply_clifford(cnot, first)
        self._hadamard(first + 2)
        self.tab.apply_clifford(cnot, first + 2)
        self.tab.apply_clifford(cz, first + 1)

    def apply(self, gate: CliffordGate2, left_site: int) -> None:
        self.tab.apply_clifford(gate.image_bits, left_site)

    def value(self, monotone: str, window: tuple[int, int]) -> float:
        if monotone == "coherence":
            return self.tab.coherence(window)
        return relative_entropy_of_non_gaussianity(self.tab, window=window)


class _SparseBackend:
    def __init__(self, spec: CircuitSpec):
        self.spec = spec
        if spec.initial_state.kind == "PlusCluster":
            self.state = SparseState.plus_cluster(spec.L, spec.cluster_window)
        else:
            self.state = SparseState.basis_state(spec.L)

    def apply(self, gate, left_site: int) -> None:
        perm, phases = gate.permutation_phase()
        self.state.apply_permutation_phase(perm, phases, left_site)

    def value(self, monotone: str, window: tuple[int, int]) -> float:
        return self.state.subsystem_coherence(window)


_BACKEND_TYPES = {"Dense": _DenseBackend, "Tableau": _TableauBackend,
                  "Sparse": _SparseBackend}


# -- Monte-Carlo driver -----------------------------------------------------------


def _simulate_realization(spec: CircuitSpec, monotone: str,
                          windows: list[tuple[int, int]], r: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=(spec.seed << 64) | r))
    backend = _BACKEND_TYPES[spec.backend](spec)
    out = np.empty((len(windows), spec.depth + 1))
    for w, window in enumerate(windows):
        out[w, 0] = backend.value(monotone, window)
    for t in range(1, spec.depth + 1):
        for gate, site in build_layer("odd" if t % 2 else "even", spec, rng):
            backend.apply(gate, site)
        for w, window in enumerate(windows):
            out[w, t] = backend.value(monotone, window)
    return out


def _simulate_chunk(spec: CircuitSpec, monotone: str,
                    windows: list[tuple[int, int]],
                    r0: int, r1: int) -> np.ndarray:
    return np.stack([_simulate_realization(spec, monotone, windows, r)
                     for r in range(r0, r1)])


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(_WORKER_ENV, "1"))
    if workers < 1:
        raise ValueError("worker count must be positive")
    return workers


def _monte_carlo(spec: CircuitSpec, monotone: str,
                 windows: list[tuple[int, int]],
                 workers: int | None) -> tuple[np.ndarray, np.ndarray]:
    workers = _resolve_workers(workers)
    R = spec.realizations
    if workers == 1 or R == 1:
        values = _simulate_chunk(spec, monotone, windows, 0, R)
    else:
        edges = np.linspace(0, R, min(workers, R) + 1).astype(int)
        spans = [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if a < b]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_simulate_chunk, spec, monotone, windows, a, b)
                       for a, b in spans]
            values = np.concatenate([f.result() for f in futures])
    mean = values.mean(axis=0)
    if R > 1:
        stderr = values.std(axis=0, ddof=1) / np.sqrt(R)
    else:
        stderr = np.zeros_like(mean)
    return mean, stderr


def _check_monotone_windows(monotone: str, sizes: list[int]) -> None:
    if monotone not in MONOTONES:
        raise ValueError(f"unknown monotone {monotone!r}")
    cap = _MAX_WINDOW.get(monotone)
    if cap is not None and max(sizes) > cap:
        raise ValueError(f"{monotone} evaluation is capped at {cap} sites")


def _check_backend_monotone(spec: CircuitSpec, monotone: str) -> None:
    if spec.backend == "Tableau" and monotone not in ("coherence", "nongaussianity"):
        raise ValueError(f"tableau backend cannot evaluate {monotone!r}")
    if spec.backend == "Sparse" and monotone != "coherence":
        raise ValueError(f"sparse backend cannot evaluate {monotone!r}")
    if monotone == "mana" and spec.d != 3:
        raise ValueError("mana runs need qutrits")
    if monotone != "mana" and spec.d == 3:
        raise ValueError(f"{monotone!r} runs are qubit only")


def growth_ensembles(monotone: str) -> tuple[str, ...]:
    """Ensemble kinds that generate the given resource."""
    return _GROWTH_ENSEMBLES[monotone]


def spread_ensembles(monotone: str) -> tuple[str, ...]:
    """Ensemble kinds that are free (non-generating) for the given resource."""
    return _SPREAD_ENSEMBLES[monotone]


def run_growth(spec: CircuitSpec, monotone: str,
               subsystem_sizes: list[int], *,
               workers: int | None = None) -> ResourceSeries:
    """Average a monotone on centered windows through a resource-generating
    circuit started from the all-zero state."""
    sizes = [int(s) for s in subsystem_sizes]
    if not sizes:
        raise ValueError("need at least one subsystem size")
    if min(sizes) < 1 or max(sizes) > spec.L:
        raise ValueError("subsystem sizes must lie in [1, L]")
    _check_monotone_windows(monotone, sizes)
    _check_backend_monotone(spec, monotone)
    if spec.initial_state.kind != "AllZero":
        raise ValueError("growth runs start from the all-zero state")
    if spec.ensemble.kind not in _GROWTH_ENSEMBLES[monotone]:
        allowed = ", ".join(_GROWTH_ENSEMBLES[monotone])
        raise ValueError(
            f"growth of {monotone!r} needs a generating ensemble ({allowed})")
    windows = [((spec.L - s) // 2 + 1, s) for s in sizes]
    mean, stderr = _monte_carlo(spec, monotone, windows, workers)
    return ResourceSeries(monotone, tuple(sizes),
                          np.arange(spec.depth + 1, dtype=float),
                          mean, stderr, spec.realizations)


def run_spread(spec: CircuitSpec, monotone: str, subsystem_size: int,
               x_r: list[float] | None = None, *,
               workers: int | None = None) -> SpreadGrid:
    """Average a monotone on a swept window through a resource-free circuit
    started from a central cluster."""
    size = int(subsystem_size)
    if not 1 <= size <= spec.L:
        raise ValueError("subsystem size must lie in [1, L]")
    _check_monotone_windows(monotone, [size])
    _check_backend_monotone(spec, monotone)
    if spec.initial_state.kind == "AllZero":
        raise ValueError("spreading runs need a clustered initial state")
    if spec.ensemble.kind not in _SPREAD_ENSEMBLES[monotone]:
        allowed = ", ".join(_SPREAD_ENSEMBLES[monotone])
        raise ValueError(
            f"spreading of {monotone!r} needs a free ensemble ({allowed})")
    center = spec.cluster_center()
    if x_r is None:
        firsts = list(range(1, spec.L - size + 2))
        offsets = [f + (size - 1) / 2 - center for f in firsts]
    else:
        offsets = [float(x) for x in x_r]
        firsts = []
        for x in offsets:
            f = x + center - (size - 1) / 2
            fi = int(round(f))
            if abs(f - fi) > 1e-9:
                raise ValueError(
                    f"x_r = {x} does not align with the site grid")
            if fi < 1 or fi + size - 1 > spec.L:
                raise ValueError(f"x_r = {x} places the window off the chain")
            firsts.append(fi)
    windows = [(f, size) for f in firsts]
    mean, stderr = _monte_carlo(spec, monotone, windows, workers)
    return SpreadGrid(monotone, size, np.array(offsets, dtype=float),
                      np.arange(spec.depth + 1, dtype=float),
                      mean, stderr, spec.realizations)


class CensoredSeriesError(ValueError):
    """The series never crossed, or has not yet settled below, a threshold."""


@dataclass(frozen=True)
class FitResult:
    """Time-scale and velocity fits extracted from a series or a grid.

    A field is None when the corresponding fit does not apply to the input
    or its preconditions failed; ``notes`` records each skipped fit. Every
    least-squares fit that ran reports its R-squared.
    """

    tau_m: float | None = None
    peak_value: float | None = None
    tau_d: float | None = None
    decay_window: tuple[float, float] | None = None
    decay_r_squared: float | None = None
    theta: float | None = None
    tau_theta: float | None = None
    v_front: float | None = None
    front_intercept: float | None = None
    front_r_squared: float | None = None
    v_peak: float | None = None
    peak_intercept: float | None = None
    peak_r_squared: float | None = None
    attenuation_length: float | None = None
    attenuation_r_squared: float | None = None
    notes: tuple[str, ...] = ()


_DEFAULT_THRESHOLDS = {"lrom": 0.01, "mana": 0.01,
                       "coherence": 0.1, "nongaussianity": 0.1}


def default_threshold(monotone: str) -> float:
    """Threshold level for tau_theta: 0.01 for magic, 0.1 otherwise."""
    try:
        return _DEFAULT_THRESHOLDS[monotone]
    except KeyError:
        raise ValueError(f"unknown monotone {monotone!r}") from None


def _series_arrays(series, subsystem_size, times, stderr):
    """Normalize a ResourceSeries or bare array to (times, mean, stderr)."""
    if isinstance(series, ResourceSeries):
        if subsystem_size is None:
            if len(series.subsystem_sizes) != 1:
                raise ValueError(
                    "subsystem_size is required when the series holds "
                    "several window sizes")
            subsystem_size = series.subsystem_sizes[0]
        mean, err = series.row(subsystem_size)
        return (np.asarray(series.times, dtype=float),
                np.asarray(mean, dtype=float), np.asarray(err, dtype=float))
    values = np.asarray(series, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("series must be a 1D array of at least two values")
    if times is None:
        t = np.arange(values.size, dtype=float)
    else:
        t = np.asarray(times, dtype=float)
        if t.shape != values.shape or (np.diff(t) <= 0).any():
            raise ValueError("times must be strictly increasing and match "
                             "the series length")
    if stderr is None:
        err = np.zeros_like(values)
    else:
        err = np.asarray(stderr, dtype=float)
        if err.shape != values.shape:
            raise ValueError("stderr must match the series length")
    return t, values, err


def _peak(t, v, err):
    i = int(np.argmax(v))
    interior = 0 < i < v.size - 1
    if not (interior and v[i] > v[i - 1] and v[i] > v[i + 1]
            and v[i] > 3.0 * err[i]):
        raise ValueError("no significant interior peak")
    coef = np.polyfit(t[i - 1:i + 2], v[i - 1:i + 2], 2)
    if coef[0] >= -1e-300:
        return float(t[i]), float(v[i])
    refined = -coef[1] / (2.0 * coef[0])
    return float(refined), float(np.polyval(coef, refined))


def _line_fit(x, y):
    """(slope, intercept, r_squared) of a least-squares line."""
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = y - y.mean()
    ss_tot = float(total @ total)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(resid @ resid) / ss_tot
    return float(slope), float(intercept), r2


def _decay(t, v, err):
    peak_i = int(np.argmax(v))
    peak = v[peak_i]
    post = np.arange(peak_i + 1, v.size)
    below = post[v[post] < 0.5 * peak]
    if below.size == 0:
        raise ValueError("series never falls to half its peak")
    start = int(below[0])
    floor = np.maximum(1e-6, 10.0 * err)
    alive = post[(post >= start) & (v[post] > floor[post])]
    if alive.size == 0:
        raise ValueError("no window points above the noise floor")
    end = int(alive[-1])
    sel = np.arange(start, end + 1)
    sel = sel[v[sel] > 0.0]  # log of nonpositive samples is undefined
    if sel.size < 5:
        raise ValueError("fewer than five usable points after the peak")
    slope, _, r2 = _line_fit(t[sel], np.log(v[sel]))
    if slope >= 0.0:
        raise ValueError("window does not decay")
    return -1.0 / slope, r2, (float(t[start]), float(t[end]))


def _threshold(t, v, theta):
    if v.max() <= theta:
        raise CensoredSeriesError("censored: series never exceeds theta")
    if v[-1] > theta:
        raise CensoredSeriesError(
            "censored: series has not settled below theta by the final time")
    i = int(np.flatnonzero(v > theta)[-1])
    frac = (v[i] - theta) / (v[i] - v[i + 1])
    return float(t[i] + frac * (t[i + 1] - t[i]))


def extract_peak_time(series, subsystem_size: int | None = None, *,
                      times=None, stderr=None) -> tuple[float, float]:
    """Refined peak time and value of a rise-then-fall series.

    The discrete argmax must be a strict interior maximum exceeding three
    times its standard error; a parabola through it and its two neighbors
    refines the location. ``series`` is a ResourceSeries (with
    ``subsystem_size`` selecting the window when several are present) or a
    bare value array with optional ``times`` and ``stderr``.
    """
    t, v, err = _series_arrays(series, subsystem_size, times, stderr)
    return _peak(t, v, err)


def fit_decay(series, subsystem_size: int | None = None, *,
              times=None, stderr=None) -> tuple[float, float]:
    """Exponential time constant of the post-peak tail, with R-squared.

    Fits log(value) against time over the window from the first sample
    below half the peak to the last sample above max(1e-6, 10x stderr),
    trimming nonpositive samples; needs at least five usable points.
    """
    t, v, err = _series_arrays(series, subsystem_size, times, stderr)
    tau, r2, _ = _decay(t, v, err)
    return tau, r2


def threshold_time(series, theta: float | None = None,
                   subsystem_size: int | None = None, *,
                   times=None, stderr=None) -> float:
    """Time of the last downward crossing of ``theta``, interpolated.

    ``theta`` defaults per monotone when the input is a ResourceSeries.
    Raises CensoredSeriesError when the series never exceeds the level or
    still sits above it at the final sampled time.
    """
    t, v, _ = _series_arrays(series, subsystem_size, times, stderr)
    if theta is None:
        if isinstance(series, ResourceSeries):
            theta = default_threshold(series.monotone)
        else:
            raise ValueError("theta is required for bare arrays")
    return _threshold(t, v, theta)


def _arrival_points(grid: SpreadGrid, level: float):
    xs, ts = [], []
    for i, x in enumerate(grid.x_r):
        hits = np.flatnonzero(grid.mean[i] > level)
        if hits.size:
            xs.append(abs(float(x)))
            ts.append(float(grid.times[hits[0]]))
    return np.array(xs), np.array(ts)


def front_velocity(grid: SpreadGrid,
                   level: float) -> tuple[float, float, float]:
    """Outer light-cone velocity from first-arrival times.

    The arrival time at each window offset is the earliest time the mean
    exceeds ``level``; a least-squares line of arrival time against |x_r|
    over at least four arrivals gives (1/slope, intercept, R-squared).
    """
    xs, ts = _arrival_points(grid, level)
    if xs.size < 4:
        raise ValueError("fewer than four offsets show an arrival")
    slope, intercept, r2 = _line_fit(xs, ts)
    if slope <= 0.0:
        raise ValueError("arrival times do not increase with distance")
    return 1.0 / slope, intercept, r2


def peak_velocity(grid: SpreadGrid,
                  level: float) -> tuple[float, float, float]:
    """Velocity of the peak locus: argmax time against |x_r|, inverted."""
    xs, ts = [], []
    for i, x in enumerate(grid.x_r):
        if grid.mean[i].max() > level:
            xs.append(abs(float(x)))
            ts.append(float(grid.times[int(np.argmax(grid.mean[i]))]))
    if len(xs) < 4:
        raise ValueError("fewer than four offsets show a peak")
    slope, intercept, r2 = _line_fit(np.array(xs), np.array(ts))
    if slope <= 0.0:
        raise ValueError("peak times do not increase with distance")
    return 1.0 / slope, intercept, r2


def peak_attenuation(grid: SpreadGrid,
                     level: float) -> tuple[float, float]:
    """Exponential attenuation length of peak value against |x_r|.

    Fits log(peak value) over offsets whose peak exceeds ``level`` and
    returns (length, R-squared); needs at least three such offsets.
    """
    xs, ps = [], []
    for i, x in enumerate(grid.x_r):
        p = float(grid.mean[i].max())
        if p > level:
            xs.append(abs(float(x)))
            ps.append(p)
    if len(xs) < 3:
        raise ValueError("fewer than three offsets show a peak")
    slope, _, r2 = _line_fit(np.array(xs), np.log(np.array(ps)))
    if slope >= 0.0:
        raise ValueError("peak values do not attenuate with distance")
    return -1.0 / slope, r2


def analyze_series(series, subsystem_size: int | None = None, *,
                   theta: float | None = None,
                   times=None, stderr=None) -> FitResult:
    """Peak, decay, and threshold extraction with per-fit failure notes."""
    t, v, err = _series_arrays(series, subsystem_size, times, stderr)
    if theta is None and isinstance(series, ResourceSeries):
        theta = default_threshold(series.monotone)
    notes = []
    tau_m = peak_value = None
    try:
        tau_m, peak_value = _peak(t, v, err)
    except ValueError as exc:
        notes.append(f"peak: {exc}")
    tau_d = decay_r2 = window = None
    try:
        tau_d, decay_r2, window = _decay(t, v, err)
    except ValueError as exc:
        notes.append(f"decay: {exc}")
    tau_theta = None
    if theta is None:
        notes.append("threshold: no theta given")
    else:
        try:
            tau_theta = _threshold(t, v, theta)
        except CensoredSeriesError as exc:
            notes.append(f"threshold: {exc}")
    return FitResult(tau_m=tau_m, peak_value=peak_value, tau_d=tau_d,
                     decay_window=window, decay_r_squared=decay_r2,
                     theta=theta, tau_theta=tau_theta, notes=tuple(notes))


def analyze_grid(grid: SpreadGrid, level: float) -> FitResult:
    """Front and peak velocities plus peak attenuation, with notes."""
    notes = []
    v_front = front_b = front_r2 = None
    try:
        v_front, front_b, front_r2 = front_velocity(grid, level)
    except ValueError as exc:
        notes.append(f"front: {exc}")
    v_peak = peak_b = peak_r2 = None
    try:
        v_peak, peak_b, peak_r2 = peak_velocity(grid, level)
    except ValueError as exc:
        notes.append(f"peak front: {exc}")
    att = att_r2 = None
    try:
        att, att_r2 = peak_attenuation(grid, level)
    except ValueError as exc:
        notes.append(f"attenuation: {exc}")
    return FitResult(v_front=v_front, front_intercept=front_b,
                     front_r_squared=front_r2, v_peak=v_peak,
                     peak_intercept=peak_b, peak_r_squared=peak_r2,
                     attenuation_length=att, attenuation_r_squared=att_r2,
                     notes=tuple(notes))
