"""Command-line front end: config-driven batch runs with CSV/JSON output.

Runs are described by a TOML file with two sections. ``[run]`` holds the
experiment kind and analysis settings, ``[circuit]`` the chain and ensemble:

    [run]
    kind = "growth"              # or "spread"
    monotone = "coherence"       # lrom | coherence | nongaussianity | mana
    subsystem_sizes = [4, 8]     # growth runs
    # subsystem_size = 8         # spread runs
    # x_r = [-2.0, 0.0, 2.0]     # spread runs; omit to sweep every placement
    # theta = 0.1                # threshold-time level; default per monotone
    # level = 1e-6               # front-arrival level for spread fits
    # output = "run.csv"         # or pass --output
    # workers = 2                # worker processes; or RESOURCEDYN_WORKERS
    # gzip = false               # write output.csv.gz instead

    [circuit]
    d = 2
    L = 64
    depth = 40
    ensemble = "CliffordMinusIncoherent"
    backend = "Tableau"
    initial_state = "AllZero"    # clustered kinds also need cluster_size
    seed = 12345
    realizations = 1000
    # epsilon = 1.0              # default depends on the run, see below
    # p = 0.5                    # SwapOrIncoherent mixing weight
    # n_right = 10               # ChiralMatchgateMix pool sizes
    # n_left = 10
    # n_neutral = 10
    # selection_seed = 7         # ChiralMatchgateMix pool draw

Unknown sections or keys are rejected. When ``epsilon`` is omitted it
defaults to 1.0 for growth runs, 0.7 for ChiralMatchgateMix runs, and 0.65
for sparse coherence spreading. Results are written as a CSV table plus a
JSON sidecar carrying the fits and the fully resolved configuration, which
is sufficient to reproduce the run byte for byte. All randomness flows from
the configured seed. Exit codes: 0 success, 1 runtime failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import gzip
import io
import json
import sys
from dataclasses import asdict, dataclass, replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .ensembles import ENSEMBLE_KINDS, EnsembleSpec, ensemble_census
from .experiments import (
    BACKENDS,
    MONOTONES,
    CircuitSpec,
    InitialState,
    ResourceSeries,
    SpreadGrid,
    analyze_grid,
    analyze_series,
    default_threshold,
    run_growth,
    run_spread,
)

__all__ = ["ConfigError", "RunConfig", "parse_config", "emit_results", "main"]

_GROWTH_HEADER = ("monotone", "L_A", "t", "mean", "stderr", "realizations")
_SPREAD_HEADER = ("monotone", "L_A", "x_r", "t", "mean", "stderr")


class ConfigError(ValueError):
    """A configuration file or command line failed validation."""


@dataclass(frozen=True)
class RunConfig:
    """Validated description of one batch run."""

    kind: str
    monotone: str
    spec: CircuitSpec
    subsystem_sizes: tuple[int, ...] | None
    subsystem_size: int | None
    x_r: tuple[float, ...] | None
    theta: float
    level: float
    output: str | None
    workers: int | None
    gzip: bool


def _require(table: dict, section: str, key: str):
    if key not in table:
        raise ConfigError(f"missing required key {section}.{key}")
    return table[key]


def _as_int(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{field} must be an integer")
    return value


def _as_float(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{field} must be a number")
    return float(value)


def _as_str(value, field: str, choices: tuple[str, ...] | None = None) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{field} must be a string")
    if choices is not None and value not in choices:
        raise ConfigError(f"{field} must be one of {', '.join(choices)}; "
                          f"got {value!r}")
    return value


_RUN_KEYS = {"kind", "monotone", "subsystem_sizes", "subsystem_size", "x_r",
             "theta", "level", "output", "workers", "gzip"}
_CIRCUIT_KEYS = {"d", "L", "depth", "epsilon", "ensemble", "p", "n_right",
                 "n_left", "n_neutral", "selection_seed", "backend",
                 "initial_state", "cluster_size", "seed", "realizations"}
_CLUSTERED = ("TCluster", "PlusCluster", "FermionicCluster",
              "QutritMagicCluster")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML run description; raises ConfigError."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    unknown = set(doc) - {"run", "circuit"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    run = doc.get("run")
    circuit = doc.get("circuit")
    if not isinstance(run, dict) or not isinstance(circuit, dict):
        raise ConfigError("config needs [run] and [circuit] sections")
    for section, table, allowed in (("run", run, _RUN_KEYS),
                                    ("circuit", circuit, _CIRCUIT_KEYS)):
        extra = set(table) - allowed
        if extra:
            raise ConfigError(
                f"unknown key(s) in [{section}]: {', '.join(sorted(extra))}")

    kind = _as_str(_require(run, "run", "kind"), "run.kind",
                   ("growth", "spread"))
    monotone = _as_str(_require(run, "run", "monotone"), "run.monotone",
                       MONOTONES)

    ensemble_kind = _as_str(_require(circuit, "circuit", "ensemble"),
                            "circuit.ensemble", ENSEMBLE_KINDS)
    ensemble_kwargs = {}
    for key in ("p",):
        if key in circuit:
            ensemble_kwargs[key] = _as_float(circuit[key], f"circuit.{key}")
    for key in ("n_right", "n_left", "n_neutral", "selection_seed"):
        if key in circuit:
            ensemble_kwargs[key] = _as_int(circuit[key], f"circuit.{key}")
    backend = _as_str(_require(circuit, "circuit", "backend"),
                      "circuit.backend", BACKENDS)

    state_kind = _as_str(_require(circuit, "circuit", "initial_state"),
                         "circuit.initial_state")
    if state_kind in _CLUSTERED:
        size = _as_int(_require(circuit, "circuit", "cluster_size"),
                       "circuit.cluster_size")
    elif "cluster_size" in circuit:
        raise ConfigError("circuit.cluster_size only applies to clustered "
                          "initial states")
    else:
        size = 0

    if "epsilon" in circuit:
        epsilon = _as_float(circuit["epsilon"], "circuit.epsilon")
    elif kind == "growth":
        epsilon = 1.0
    elif ensemble_kind == "ChiralMatchgateMix":
        epsilon = 0.7
    elif backend == "Sparse" and monotone == "coherence":
        epsilon = 0.65
    else:
        epsilon = 1.0

    try:
        ensemble = EnsembleSpec(ensemble_kind, **ensemble_kwargs)
        spec = CircuitSpec(
            d=_as_int(_require(circuit, "circuit", "d"), "circuit.d"),
            L=_as_int(_require(circuit, "circuit", "L"), "circuit.L"),
            depth=_as_int(_require(circuit, "circuit", "depth"),
                          "circuit.depth"),
            epsilon=epsilon,
            ensemble=ensemble,
            backend=backend,
            initial_state=InitialState(state_kind, size),
            seed=_as_int(_require(circuit, "circuit", "seed"),
                         "circuit.seed"),
            realizations=_as_int(_require(circuit, "circuit",
                                          "realizations"),
                                 "circuit.realizations"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    sizes = None
    size_one = None
    x_r = None
    if kind == "growth":
        if "subsystem_size" in run or "x_r" in run:
            raise ConfigError("growth runs take run.subsystem_sizes, not "
                              "run.subsystem_size or run.x_r")
        raw = _require(run, "run", "subsystem_sizes")
        if not isinstance(raw, list) or not raw:
            raise ConfigError("run.subsystem_sizes must be a nonempty list")
        sizes = tuple(_as_int(v, "run.subsystem_sizes") for v in raw)
    else:
        if "subsystem_sizes" in run:
            raise ConfigError("spread runs take run.subsystem_size, not "
                              "run.subsystem_sizes")
        size_one = _as_int(_require(run, "run", "subsystem_size"),
                           "run.subsystem_size")
        if "x_r" in run:
            raw = run["x_r"]
            if not isinstance(raw, list) or not raw:
                raise ConfigError("run.x_r must be a nonempty list")
            x_r = tuple(_as_float(v, "run.x_r") for v in raw)

    theta = (_as_float(run["theta"], "run.theta") if "theta" in run
             else default_threshold(monotone))
    level = (_as_float(run["level"], "run.level") if "level" in run
             else 1e-6)
    output = (_as_str(run["output"], "run.output") if "output" in run
              else None)
    workers = (_as_int(run["workers"], "run.workers") if "workers" in run
               else None)
    gz = run.get("gzip", False)
    if not isinstance(gz, bool):
        raise ConfigError("run.gzip must be a boolean")

    return RunConfig(kind=kind, monotone=monotone, spec=spec,
                     subsystem_sizes=sizes, subsystem_size=size_one,
                     x_r=x_r, theta=theta, level=level, output=output,
                     workers=workers, gzip=gz)


def _format(value) -> str:
    """Shortest round-trip decimal for floats, plain digits for ints."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _growth_rows(series: ResourceSeries):
    for i, size in enumerate(series.subsystem_sizes):
        for j, t in enumerate(series.times):
            yield (series.monotone, size, _format(t),
                   _format(series.mean[i, j]), _format(series.stderr[i, j]),
                   series.realizations)


def _spread_rows(grid: SpreadGrid):
    for i, x in enumerate(grid.x_r):
        for j, t in enumerate(grid.times):
            yield (grid.monotone, grid.subsystem_size, _format(x),
                   _format(t), _format(grid.mean[i, j]),
                   _format(grid.stderr[i, j]))


def _echo_config(cfg: RunConfig, x_r_used=None) -> dict:
    """Fully resolved configuration; enough to replay the run exactly."""
    spec = cfg.spec
    ens = spec.ensemble
    run: dict = {"kind": cfg.kind, "monotone": cfg.monotone,
                 "theta": cfg.theta, "level": cfg.level}
    if cfg.kind == "growth":
        run["subsystem_sizes"] = list(cfg.subsystem_sizes)
    else:
        run["subsystem_size"] = cfg.subsystem_size
        run["x_r"] = [float(x) for x in
                      (cfg.x_r if x_r_used is None else x_r_used)]
    circuit = {
        "d": spec.d, "L": spec.L, "depth": spec.depth,
        "epsilon": spec.epsilon, "ensemble": ens.kind, "p": ens.p,
        "n_right": ens.n_right, "n_left": ens.n_left,
        "n_neutral": ens.n_neutral, "selection_seed": ens.selection_seed,
        "backend": spec.backend, "initial_state": spec.initial_state.kind,
        "cluster_size": spec.initial_state.size, "seed": spec.seed,
        "realizations": spec.realizations,
    }
    return {"run": run, "circuit": circuit}


def _sidecar_path(csv_path: str) -> str:
    base = csv_path
    if base.endswith(".gz"):
        base = base[:-3]
    if base.endswith(".csv"):
        base = base[:-4]
    return base + ".json"


def emit_results(result, cfg: RunConfig, path: str) -> tuple[str, str]:
    """Write the CSV table and JSON fit sidecar; returns both paths."""
    if isinstance(result, ResourceSeries):
        text = _csv_text(_GROWTH_HEADER, _growth_rows(result))
        fits = {str(size): asdict(analyze_series(result, size,
                                                 theta=cfg.theta))
                for size in result.subsystem_sizes}
        echo = _echo_config(cfg)
    else:
        text = _csv_text(_SPREAD_HEADER, _spread_rows(result))
        fits = asdict(analyze_grid(result, cfg.level))
        echo = _echo_config(cfg, x_r_used=result.x_r)
    csv_path = path
    if cfg.gzip:
        if not csv_path.endswith(".gz"):
            csv_path += ".gz"
        # A fixed mtime keeps recompressed reruns byte-identical.
        with open(csv_path, "wb") as fh:
            with gzip.GzipFile(fileobj=fh, mode="wb", mtime=0) as gz:
                gz.write(text.encode())
    else:
        with open(csv_path, "w", newline="") as fh:
            fh.write(text)
    payload = {"kind": cfg.kind, "monotone": cfg.monotone,
               "seed": cfg.spec.seed, "theta": cfg.theta,
               "level": cfg.level, "config": echo, "fits": fits}
    json_path = _sidecar_path(csv_path)
    with open(json_path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return csv_path, json_path


def _load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    return parse_config(text)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    spec = cfg.spec
    spec_changes = {}
    if args.seed is not None:
        spec_changes["seed"] = args.seed
    if args.realizations is not None:
        spec_changes["realizations"] = args.realizations
    if args.epsilon is not None:
        spec_changes["epsilon"] = args.epsilon
    if spec_changes:
        try:
            spec = replace(spec, **spec_changes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    changes = {"spec": spec}
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.output is not None:
        changes["output"] = args.output
    if args.gzip:
        changes["gzip"] = True
    return replace(cfg, **changes)


def _cmd_run(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    if cfg.kind != args.command:
        raise ConfigError(f"config describes a {cfg.kind} run; "
                          f"invoked as {args.command}")
    if cfg.output is None:
        raise ConfigError("no output path: set run.output or pass --output")
    if cfg.kind == "growth":
        result = run_growth(cfg.spec, cfg.monotone,
                            list(cfg.subsystem_sizes), workers=cfg.workers)
    else:
        x_r = None if cfg.x_r is None else list(cfg.x_r)
        result = run_spread(cfg.spec, cfg.monotone, cfg.subsystem_size,
                            x_r, workers=cfg.workers)
    csv_path, json_path = emit_results(result, cfg, cfg.output)
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    return 0


def _cmd_ensembles(args) -> int:
    if args.action != "verify":
        raise ConfigError(f"unknown ensembles action {args.action!r}")
    census = ensemble_census()
    chir = census["chirality"]
    print(f"two-qubit Clifford gates: {census['clifford2']}")
    print(f"incoherent subgroup: {census['incoherent']}")
    print(f"matchgate subgroup: {census['matchgate']}")
    print("matchgate chirality classes: "
          f"RightMoving {chir['RightMoving']}, "
          f"LeftMoving {chir['LeftMoving']}, "
          f"Neutral {chir['Neutral']}")
    return 0


def _read_table(path: str) -> tuple[tuple[str, ...], list[list[str]]]:
    try:
        if path.endswith(".gz"):
            with gzip.open(path, "rt", newline="") as fh:
                rows = list(csv.reader(fh))
        else:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read CSV file: {exc}") from None
    if not rows:
        raise ConfigError("CSV file is empty")
    return tuple(rows[0]), rows[1:]


def _series_from_rows(rows) -> ResourceSeries:
    monotone = rows[0][0]
    sizes: list[int] = []
    per_size: dict[int, list[tuple[float, float, float]]] = {}
    realizations = int(rows[0][5])
    for row in rows:
        size = int(row[1])
        if size not in per_size:
            sizes.append(size)
            per_size[size] = []
        per_size[size].append((float(row[2]), float(row[3]), float(row[4])))
    times = np.array([t for t, _, _ in per_size[sizes[0]]])
    mean = np.empty((len(sizes), times.size))
    err = np.empty_like(mean)
    for i, size in enumerate(sizes):
        entries = per_size[size]
        if len(entries) != times.size:
            raise ConfigError("CSV rows do not form a rectangular series")
        mean[i] = [v for _, v, _ in entries]
        err[i] = [e for _, _, e in entries]
    return ResourceSeries(monotone, tuple(sizes), times, mean, err,
                          realizations)


def _grid_from_rows(rows) -> SpreadGrid:
    monotone = rows[0][0]
    size = int(rows[0][1])
    offsets: list[float] = []
    per_x: dict[float, list[tuple[float, float, float]]] = {}
    for row in rows:
        x = float(row[2])
        if x not in per_x:
            offsets.append(x)
            per_x[x] = []
        per_x[x].append((float(row[3]), float(row[4]), float(row[5])))
    times = np.array([t for t, _, _ in per_x[offsets[0]]])
    mean = np.empty((len(offsets), times.size))
    err = np.empty_like(mean)
    for i, x in enumerate(offsets):
        entries = per_x[x]
        if len(entries) != times.size:
            raise ConfigError("CSV rows do not form a rectangular grid")
        mean[i] = [v for _, v, _ in entries]
        err[i] = [e for _, _, e in entries]
    return SpreadGrid(monotone, size, np.array(offsets), times, mean, err, 0)


def _cmd_fit(args) -> int:
    header, rows = _read_table(args.csv)
    if not rows:
        raise ConfigError("CSV file has no data rows")
    if header == _GROWTH_HEADER:
        series = _series_from_rows(rows)
        theta = (args.theta if args.theta is not None
                 else default_threshold(series.monotone))
        fits = {str(size): asdict(analyze_series(series, size, theta=theta))
                for size in series.subsystem_sizes}
        payload = {"kind": "growth", "monotone": series.monotone,
                   "theta": theta, "fits": fits}
    elif header == _SPREAD_HEADER:
        grid = _grid_from_rows(rows)
        level = args.level if args.level is not None else 1e-6
        payload = {"kind": "spread", "monotone": grid.monotone,
                   "level": level, "fits": asdict(analyze_grid(grid, level))}
    else:
        raise ConfigError("unrecognized CSV header; expected a growth or "
                          "spread table")
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
        print(f"wrote {args.output}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resourcedyn",
        description="Resource growth and spreading in random brickwall "
                    "circuits")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, blurb in (("growth", "monotone growth on centered windows"),
                        ("spread", "monotone spreading from a cluster")):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("config", help="TOML run description")
        p.add_argument("--seed", type=int, help="override circuit.seed")
        p.add_argument("--realizations", type=int,
                       help="override circuit.realizations")
        p.add_argument("--epsilon", type=float,
                       help="override circuit.epsilon")
        p.add_argument("--workers", type=int,
                       help="worker processes (default: RESOURCEDYN_WORKERS "
                            "or 1)")
        p.add_argument("--output", help="override run.output")
        p.add_argument("--gzip", action="store_true",
                       help="gzip the CSV table")
        p.set_defaults(func=_cmd_run)

    p = sub.add_parser("ensembles", help="gate-set diagnostics")
    p.add_argument("action", choices=["verify"],
                   help="verify prints the enumerated cardinalities")
    p.set_defaults(func=_cmd_ensembles)

    p = sub.add_parser("fit", help="re-run extraction on an existing CSV")
    p.add_argument("csv", help="growth or spread table")
    p.add_argument("--theta", type=float,
                   help="threshold-time level (default per monotone)")
    p.add_argument("--level", type=float,
                   help="front-arrival level (default 1e-6)")
    p.add_argument("--output", help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_fit)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
