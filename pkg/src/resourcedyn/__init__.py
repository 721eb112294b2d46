"""Resource dynamics in brickwall random circuits: simulators, monotones, experiments.

The package simulates chains of qubits or qutrits under brickwork circuits
whose two-site gates are drawn from configurable ensembles, and tracks how
resource monotones of contiguous subsystems grow from free states and spread
from localized resource clusters. Exact statevector, stabilizer-tableau, and
sparse permutation-phase backends cross-check one another.

Most workflows need only the re-exports below; the submodules hold the full
APIs (``statevec``, ``tableau``, ``sparse``, ``ensembles``, ``monotones``,
``experiments``, ``cli``).
"""

from .ensembles import ENSEMBLE_KINDS, EnsembleSpec, sample_gate
from .experiments import (
    BACKENDS,
    MONOTONES,
    CircuitSpec,
    FitResult,
    InitialState,
    ResourceSeries,
    SpreadGrid,
    analyze_grid,
    analyze_series,
    extract_peak_time,
    fit_decay,
    front_velocity,
    run_growth,
    run_spread,
    threshold_time,
)
from .monotones import (
    enumerate_stabilizer_states,
    log_robustness_of_magic,
    mana,
    relative_entropy_of_coherence,
    relative_entropy_of_non_gaussianity,
)
from .statevec import DensityMatrix, QuditState, partial_trace
from .tableau import Tableau

__version__ = "0.1.0"

__all__ = [
    "ENSEMBLE_KINDS",
    "EnsembleSpec",
    "sample_gate",
    "BACKENDS",
    "MONOTONES",
    "CircuitSpec",
    "FitResult",
    "InitialState",
    "ResourceSeries",
    "SpreadGrid",
    "analyze_grid",
    "analyze_series",
    "extract_peak_time",
    "fit_decay",
    "front_velocity",
    "run_growth",
    "run_spread",
    "threshold_time",
    "enumerate_stabilizer_states",
    "log_robustness_of_magic",
    "mana",
    "relative_entropy_of_coherence",
    "relative_entropy_of_non_gaussianity",
    "DensityMatrix",
    "QuditState",
    "partial_trace",
    "Tableau",
    "__version__",
]
