"""Scenario files, batch execution, and parameter sweeps.

A scenario is a strict JSON document (unknown keys are errors) that pins
everything a run needs: grid, kernel, initial datum, integrator settings,
and which artifacts to write. Identical scenarios produce bit-identical
trace files, which makes the scenario the unit of reproducibility.

Artifacts written by :func:`run_scenario` into the output directory:

* ``trace.csv``        per-step diagnostics (columns in ``TRACE_COLUMNS`` order)
* ``certificate.csv``  one row per positivity certificate
* ``final_field.bin``  binary field (see :mod:`nlkpp.fieldio`)
* ``snapshots/``       periodic binary fields, ``snap_<step>.bin``
* ``summary.csv``      one row of headline numbers
* ``run_meta.json``    scenario echo plus solver metadata

The output directory is resolved as: explicit argument, then the
``NLKPP_OUT`` environment variable, then the scenario's own setting.
"""

import copy
import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import fieldio
from .diagnostics import (linearization_matrix, local_linearization_matrix,
                          most_unstable_cosine_mode, spectral_abscissa)
from .dynamics import SimConfig, run
from .errors import NumericalError, ValidationError
from .grid import Field, Grid, build_uniform_grid
from .kernels import (Kernel, KernelProfile, PositivityCertificate,
                      certify_positivity_bochner, certify_positivity_eigen,
                      normalize_columns, sample_convolution_kernel,
                      symmetrize_and_normalize)

OUTPUT_DIR_ENV = "NLKPP_OUT"

ARTIFACTS = ("trace", "certificate", "final_field", "snapshots", "summary", "meta")

SUMMARY_COLUMNS = ("name", "status", "t_end", "steps", "final_sup_dist_one",
                   "final_V", "final_mass", "min_u", "eigen_verdict",
                   "eigen_witness", "bochner_verdict", "bochner_witness",
                   "spectral_abscissa", "wall_time_s")

CERTIFICATE_COLUMNS = ("method", "verdict", "witness", "tolerance",
                       "grid_n", "kernel_family", "sigma")

# abscissa needs a dense nonsymmetric eigensolve; skip on grids bigger than this
_STABILITY_MAX_NODES = 1024

_REQUIRED = object()


class _Section:
    """Dict reader that consumes keys and rejects leftovers (strict schema)."""

    def __init__(self, raw, name: str):
        if not isinstance(raw, dict):
            raise ValidationError(f"'{name}' must be a JSON object")
        self._raw = dict(raw)
        self._name = name

    def take(self, key: str, default=_REQUIRED):
        if key in self._raw:
            return self._raw.pop(key)
        if default is _REQUIRED:
            raise ValidationError(f"missing required key '{key}' in '{self._name}'")
        return default

    def finish(self) -> None:
        if self._raw:
            key = sorted(self._raw)[0]
            raise ValidationError(f"unknown key '{key}' in '{self._name}'")


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"'{where}' must be a number, got {value!r}")
    return float(value)


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"'{where}' must be an integer, got {value!r}")
    return value


def _as_bool(value, where: str) -> bool:
    if not isinstance(value, bool):
        raise ValidationError(f"'{where}' must be true or false, got {value!r}")
    return value


@dataclass(frozen=True)
class GridSpec:
    extents: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]


@dataclass(frozen=True)
class KernelSpec:
    family: str
    sigma: float
    inhibition_ratio: float = 0.8
    normalization: str = "balanced"  # columns | balanced
    certify: bool = True
    eigen_tol: float = 1e-9
    bochner_tol: float = 1e-9
    bochner_half_width: float | None = None
    bochner_samples: int = 2048
    balance_tol: float = 1e-12
    balance_max_iterations: int = 5000


@dataclass(frozen=True)
class InitialSpec:
    kind: str  # constant | random_uniform | cosine | file
    value: float = 1.0
    low: float = 0.5
    high: float = 1.5
    seed: int = 0
    amplitude: float = 0.01
    mode: int | str = 1  # int or "most_unstable"
    path: str = ""


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    artifacts: tuple[str, ...] = ARTIFACTS
    stability: bool = True


@dataclass(frozen=True)
class Scenario:
    name: str
    grid: GridSpec
    kernel: KernelSpec | None
    initial: InitialSpec
    sim: SimConfig
    output: OutputSpec
    raw: dict
    base_dir: str = "."


def _parse_grid(raw) -> GridSpec:
    sec = _Section(raw, "grid")
    extents_raw = sec.take("extents")
    counts_raw = sec.take("counts")
    sec.finish()
    try:
        arr = np.asarray(extents_raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"grid.extents is not numeric: {exc}") from exc
    if arr.shape == (2,):
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] not in (1, 2):
        raise ValidationError("grid.extents must be [lo, hi] or one/two such pairs")
    extents = tuple((float(lo), float(hi)) for lo, hi in arr)
    counts = counts_raw if isinstance(counts_raw, list) else [counts_raw]
    counts = tuple(_as_int(c, "grid.counts") for c in counts)
    if len(counts) != len(extents):
        raise ValidationError("grid.counts must have one entry per axis")
    for n in counts:
        if n < 3:
            raise ValidationError(f"grid.counts entries must be >= 3, got {n}")
    for lo, hi in extents:
        if not hi > lo:
            raise ValidationError(f"grid.extents pair ({lo}, {hi}) is degenerate")
    return GridSpec(extents, counts)


def _parse_kernel(raw) -> KernelSpec:
    sec = _Section(raw, "kernel")
    family = sec.take("family")
    if family not in ("gaussian", "tophat", "exponential", "mexican_hat"):
        raise ValidationError(
            f"kernel.family must be one of gaussian/tophat/exponential/"
            f"mexican_hat, got {family!r}")
    sigma = _as_number(sec.take("sigma"), "kernel.sigma")
    if not sigma > 0:
        raise ValidationError(f"kernel.sigma must be positive, got {sigma}")
    spec = KernelSpec(
        family=family,
        sigma=sigma,
        inhibition_ratio=_as_number(sec.take("inhibition_ratio", 0.8),
                                    "kernel.inhibition_ratio"),
        normalization=sec.take("normalization", "balanced"),
        certify=_as_bool(sec.take("certify", True), "kernel.certify"),
        eigen_tol=_as_number(sec.take("eigen_tol", 1e-9), "kernel.eigen_tol"),
        bochner_tol=_as_number(sec.take("bochner_tol", 1e-9), "kernel.bochner_tol"),
        bochner_half_width=(None if (hw := sec.take("bochner_half_width", None)) is None
                            else _as_number(hw, "kernel.bochner_half_width")),
        bochner_samples=_as_int(sec.take("bochner_samples", 2048),
                                "kernel.bochner_samples"),
        balance_tol=_as_number(sec.take("balance_tol", 1e-12), "kernel.balance_tol"),
        balance_max_iterations=_as_int(sec.take("balance_max_iterations", 5000),
                                       "kernel.balance_max_iterations"),
    )
    sec.finish()
    if spec.normalization not in ("columns", "balanced"):
        raise ValidationError(
            f"kernel.normalization must be 'columns' or 'balanced', "
            f"got {spec.normalization!r}")
    return spec


def _parse_initial(raw) -> InitialSpec:
    sec = _Section(raw, "initial")
    kind = sec.take("kind")
    if kind == "constant":
        spec = InitialSpec(kind=kind,
                           value=_as_number(sec.take("value"), "initial.value"))
        if not spec.value >= 0:
            raise ValidationError("initial.value must be >= 0")
    elif kind == "random_uniform":
        low = _as_number(sec.take("low"), "initial.low")
        high = _as_number(sec.take("high"), "initial.high")
        seed = _as_int(sec.take("seed", 0), "initial.seed")
        if not 0 <= low <= high:
            raise ValidationError("initial.low/high must satisfy 0 <= low <= high")
        spec = InitialSpec(kind=kind, low=low, high=high, seed=seed)
    elif kind == "cosine":
        amplitude = _as_number(sec.take("amplitude", 0.01), "initial.amplitude")
        mode = sec.take("mode", "most_unstable")
        if mode != "most_unstable":
            mode = _as_int(mode, "initial.mode")
            if mode < 1:
                raise ValidationError("initial.mode must be >= 1")
        if not 0 <= amplitude < 1:
            raise ValidationError("initial.amplitude must lie in [0, 1)")
        spec = InitialSpec(kind=kind, amplitude=amplitude, mode=mode)
    elif kind == "file":
        spec = InitialSpec(kind=kind, path=str(sec.take("path")))
    else:
        raise ValidationError(
            f"initial.kind must be constant/random_uniform/cosine/file, got {kind!r}")
    sec.finish()
    return spec


def _parse_sim(raw) -> SimConfig:
    sec = _Section(raw, "sim")
    mu = _as_number(sec.take("mu"), "sim.mu")
    if mu < 0:
        raise ValidationError(f"sim.mu must be >= 0, got {mu}")
    dt = _as_number(sec.take("dt"), "sim.dt")
    if not dt > 0:
        raise ValidationError(f"sim.dt must be positive, got {dt}")
    t_end = _as_number(sec.take("t_end"), "sim.t_end")
    if t_end < 0:
        raise ValidationError(f"sim.t_end must be >= 0, got {t_end}")
    config = SimConfig(
        mu=mu, dt=dt, t_end=t_end,
        snapshot_every=_as_int(sec.take("snapshot_every", 100), "sim.snapshot_every"),
        local_mode=_as_bool(sec.take("local_mode", False), "sim.local_mode"),
        positivity_floor=_as_number(sec.take("positivity_floor", 1e-14),
                                    "sim.positivity_floor"),
        max_dt_halvings=_as_int(sec.take("max_dt_halvings", 40), "sim.max_dt_halvings"),
        solver_2d=sec.take("solver_2d", "adi"),
    )
    sec.finish()
    return config


def _parse_output(raw) -> OutputSpec:
    sec = _Section(raw, "output")
    directory = str(sec.take("directory", "out"))
    artifacts = sec.take("artifacts", list(ARTIFACTS))
    stability = _as_bool(sec.take("stability", True), "output.stability")
    sec.finish()
    if not isinstance(artifacts, list):
        raise ValidationError("output.artifacts must be a list")
    for art in artifacts:
        if art not in ARTIFACTS:
            raise ValidationError(
                f"unknown artifact {art!r}; choose from {ARTIFACTS}")
    return OutputSpec(directory, tuple(artifacts), stability)


def parse_scenario_dict(raw: dict, name: str = "scenario",
                        base_dir: str = ".") -> Scenario:
    """Validate a scenario document already loaded as a dict."""
    top = _Section(raw, "scenario")
    name = str(top.take("name", name))
    grid = _parse_grid(top.take("grid"))
    sim = _parse_sim(top.take("sim"))
    kernel_raw = top.take("kernel", None)
    if kernel_raw is None and not sim.local_mode:
        raise ValidationError("a 'kernel' section is required unless sim.local_mode")
    kernel = _parse_kernel(kernel_raw) if kernel_raw is not None else None
    initial = _parse_initial(top.take("initial"))
    output = _parse_output(top.take("output", {}))
    top.finish()
    return Scenario(name=name, grid=grid, kernel=kernel, initial=initial,
                    sim=sim, output=output, raw=copy.deepcopy(raw),
                    base_dir=base_dir)


def _load_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: no such file")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc


def parse_scenario(path) -> Scenario:
    """Load and validate a scenario JSON file."""
    path = Path(path)
    raw = _load_json(path)
    return parse_scenario_dict(raw, name=path.stem, base_dir=str(path.parent))


def build_grid(spec: GridSpec) -> Grid:
    return build_uniform_grid(spec.extents, spec.counts)


def build_kernel(spec: KernelSpec, grid: Grid) -> tuple[Kernel, list[PositivityCertificate]]:
    """Sample, normalize, and (optionally) certify the scenario kernel."""
    profile = KernelProfile(spec.family, spec.sigma,
                            inhibition_ratio=spec.inhibition_ratio)
    kernel = sample_convolution_kernel(profile, grid)
    if spec.normalization == "columns":
        kernel = normalize_columns(kernel)
    else:
        kernel = symmetrize_and_normalize(kernel, spec.balance_max_iterations,
                                          spec.balance_tol)
    certificates: list[PositivityCertificate] = []
    if spec.certify:
        certificates.append(certify_positivity_eigen(kernel, tol=spec.eigen_tol))
        certificates.append(certify_positivity_bochner(
            profile, n_samples=spec.bochner_samples,
            half_width=spec.bochner_half_width, tol=spec.bochner_tol,
            dim=grid.dim))
    return kernel, certificates


def _build_initial(scenario: Scenario, grid: Grid,
                   jacobian: np.ndarray | None) -> tuple[Field, dict]:
    spec = scenario.initial
    info: dict = {"kind": spec.kind}
    if spec.kind == "constant":
        return Field.constant(grid, spec.value), info
    if spec.kind == "random_uniform":
        rng = np.random.default_rng(spec.seed)
        info["seed"] = spec.seed
        return Field(grid, rng.uniform(spec.low, spec.high, grid.n_nodes)), info
    if spec.kind == "cosine":
        mode = spec.mode
        if mode == "most_unstable":
            if jacobian is None:
                raise ValidationError(
                    "initial.mode 'most_unstable' needs the stability analysis; "
                    "it is unavailable on this grid")
            mode = most_unstable_cosine_mode(grid, jacobian)
        info["mode"] = int(mode)
        lo, hi = grid.extents[0]
        xhat = (grid.nodes[:, 0] - lo) / (hi - lo)
        return Field(grid, 1.0 + spec.amplitude * np.cos(mode * np.pi * xhat)), info
    if spec.kind == "file":
        path = Path(spec.path)
        if not path.is_absolute():
            path = Path(scenario.base_dir) / path
        field = fieldio.read_field(path)
        if not field.grid.same_layout(grid):
            raise ValidationError(
                f"initial field file {path} has layout "
                f"{field.grid.counts}/{field.grid.extents}, scenario grid is "
                f"{grid.counts}/{grid.extents}")
        info["path"] = str(path)
        return Field(grid, field.values), info
    raise ValidationError(f"unhandled initial kind {spec.kind!r}")


def resolve_output_dir(scenario: Scenario, out_dir=None) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env)
    return Path(scenario.output.directory)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in columns])


def read_csv_rows(path) -> list[dict]:
    """Loader for the tool's own CSV artifacts (strings left unconverted)."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _certificate_rows(certs, grid: Grid, spec: KernelSpec) -> list[dict]:
    grid_n = "x".join(str(n) for n in grid.counts)
    return [{"method": c.method, "verdict": c.verdict, "witness": c.witness,
             "tolerance": c.tolerance, "grid_n": grid_n,
             "kernel_family": spec.family, "sigma": spec.sigma}
            for c in certs]


def run_scenario(scenario: Scenario, out_dir=None, quiet: bool = False) -> dict:
    """Execute one scenario end to end; returns the summary row as a dict."""
    start = time.perf_counter()
    try:
        return _run_scenario_inner(scenario, out_dir, quiet, start)
    except (ValidationError, NumericalError) as exc:
        raise type(exc)(f"scenario '{scenario.name}': {exc}") from exc


def _run_scenario_inner(scenario: Scenario, out_dir, quiet: bool,
                        start: float) -> dict:
    grid = build_grid(scenario.grid)
    kernel = None
    certificates: list[PositivityCertificate] = []
    if scenario.kernel is not None:
        kernel, certificates = build_kernel(scenario.kernel, grid)

    jacobian = None
    abscissa = math.nan
    if scenario.output.stability and grid.n_nodes <= _STABILITY_MAX_NODES:
        if scenario.sim.local_mode:
            jacobian = local_linearization_matrix(grid, scenario.sim.mu)
        elif kernel is not None:
            jacobian = linearization_matrix(grid, kernel, scenario.sim.mu)
        if jacobian is not None:
            abscissa = spectral_abscissa(jacobian)

    u0, initial_info = _build_initial(scenario, grid, jacobian)

    meta = {"scenario": scenario.name, "initial": initial_info,
            "spectral_abscissa": abscissa}
    for cert in certificates:
        meta[f"{cert.method}_verdict"] = cert.verdict
        meta[f"{cert.method}_witness"] = cert.witness
    if kernel is not None:
        meta["kernel_strictly_positive"] = kernel.strictly_positive
        if not kernel.strictly_positive and any(
                c.verdict == "positive" for c in certificates):
            # positive quadratic form but zeros in K: convergence to 1 is not
            # guaranteed by the theory, only suggested; record it
            meta["positivity_caveat"] = ("kernel has zero entries; certified "
                                         "positivity alone does not pin the limit")

    state, trace = run(u0, grid, kernel, scenario.sim, metadata=meta)

    final_v = trace.column("V")[-1]
    final_sup = trace.column("sup_dist_one")[-1]
    wall = time.perf_counter() - start
    summary = {
        "name": scenario.name,
        "status": "ok",
        "t_end": state.t,
        "steps": state.step,
        "final_sup_dist_one": float(final_sup),
        "final_V": float(final_v),
        "final_mass": float(trace.column("mass")[-1]),
        "min_u": float(trace.column("min_u").min()),
        "eigen_verdict": next((c.verdict for c in certificates
                               if c.method == "eigen"), ""),
        "eigen_witness": next((c.witness for c in certificates
                               if c.method == "eigen"), ""),
        "bochner_verdict": next((c.verdict for c in certificates
                                 if c.method == "bochner"), ""),
        "bochner_witness": next((c.witness for c in certificates
                                 if c.method == "bochner"), ""),
        "spectral_abscissa": abscissa,
        "wall_time_s": wall,
    }

    out = resolve_output_dir(scenario, out_dir)
    arts = scenario.output.artifacts
    out.mkdir(parents=True, exist_ok=True)
    if "trace" in arts:
        trace.to_csv(out / "trace.csv")
    if "certificate" in arts and certificates:
        _write_csv(out / "certificate.csv", CERTIFICATE_COLUMNS,
                   _certificate_rows(certificates, grid, scenario.kernel))
    if "final_field" in arts:
        fieldio.write_field(out / "final_field.bin", state.u)
    if "snapshots" in arts:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for snap in trace.snapshots:
            fieldio.write_field(snap_dir / f"snap_{snap.step:08d}.bin", snap.field)
    if "summary" in arts:
        _write_csv(out / "summary.csv", SUMMARY_COLUMNS, [summary])
    if "meta" in arts:
        (out / "run_meta.json").write_text(
            json.dumps({"scenario": scenario.raw, "metadata": meta},
                       indent=2, default=str) + "\n")

    if not quiet:
        print(f"[{scenario.name}] steps={state.step} "
              f"sup|u-1|={final_sup:.3e} V={final_v:.3e} "
              f"abscissa={abscissa:.3g} wall={wall:.2f}s")
    return summary


def certify_scenario(scenario: Scenario, out_dir=None, quiet: bool = False) -> list:
    """Kernel-only path: build, normalize, certify, emit certificate.csv."""
    if scenario.kernel is None:
        raise ValidationError(f"scenario '{scenario.name}' has no kernel section")
    grid = build_grid(scenario.grid)
    spec = replace(scenario.kernel, certify=True)
    _, certificates = build_kernel(spec, grid)
    out = resolve_output_dir(scenario, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "certificate.csv", CERTIFICATE_COLUMNS,
               _certificate_rows(certificates, grid, scenario.kernel))
    if not quiet:
        for cert in certificates:
            print(f"[{scenario.name}] {cert.method}: {cert.verdict} "
                  f"(witness {cert.witness:.6g}, tolerance {cert.tolerance:.3g})")
    return certificates


@dataclass(frozen=True)
class SweepParameter:
    path: str  # dotted scenario path, e.g. "sim.mu" or "kernel.sigma"
    values: tuple


@dataclass(frozen=True)
class SweepSpec:
    base: dict
    parameters: tuple[SweepParameter, ...]
    directory: str = "sweep_out"
    base_dir: str = "."


def parse_sweep_dict(raw: dict, base_dir: str = ".") -> SweepSpec:
    top = _Section(raw, "sweep")
    base = top.take("base", None)
    base_path = top.take("base_path", None)
    if (base is None) == (base_path is None):
        raise ValidationError("provide exactly one of 'base' or 'base_path'")
    if base_path is not None:
        path = Path(base_path)
        if not path.is_absolute():
            path = Path(base_dir) / path
        base = _load_json(path)
    params_raw = top.take("parameters")
    directory = str(top.take("directory", "sweep_out"))
    top.finish()
    if not isinstance(params_raw, list) or not 1 <= len(params_raw) <= 2:
        raise ValidationError("'parameters' must list one or two swept parameters")
    params = []
    for i, praw in enumerate(params_raw):
        sec = _Section(praw, f"parameters[{i}]")
        path = str(sec.take("path"))
        values = sec.take("values")
        sec.finish()
        if len(path.split(".")) != 2:
            raise ValidationError(
                f"parameter path must look like 'section.key', got {path!r}")
        if not isinstance(values, list) or not values:
            raise ValidationError(f"parameter '{path}' needs a non-empty value list")
        for v in values:
            if isinstance(v, float) and not math.isfinite(v):
                raise ValidationError(f"parameter '{path}' has non-finite value")
        params.append(SweepParameter(path, tuple(values)))
    if not isinstance(base, dict):
        raise ValidationError("'base' must be a scenario object")
    return SweepSpec(base=base, parameters=tuple(params), directory=directory,
                     base_dir=base_dir)


def parse_sweep(path) -> SweepSpec:
    path = Path(path)
    return parse_sweep_dict(_load_json(path), base_dir=str(path.parent))


def _set_path(raw: dict, dotted: str, value) -> None:
    section, key = dotted.split(".", 1)
    raw.setdefault(section, {})[key] = value


def _sweep_points(sweep: SweepSpec) -> list[dict]:
    """Cartesian product of swept values, deterministic row order."""
    points = []
    if len(sweep.parameters) == 1:
        (p,) = sweep.parameters
        for v in p.values:
            points.append({p.path: v})
    else:
        p0, p1 = sweep.parameters
        for v0 in p0.values:
            for v1 in p1.values:
                points.append({p0.path: v0, p1.path: v1})
    return points


def _run_sweep_point(args) -> dict:
    index, base_raw, assignment, out_dir, base_dir = args
    row = {"point": index}
    row.update({path: value for path, value in assignment.items()})
    raw = copy.deepcopy(base_raw)
    for path, value in assignment.items():
        _set_path(raw, path, value)
    try:
        scenario = parse_scenario_dict(raw, name=f"point_{index:03d}",
                                       base_dir=base_dir)
        summary = run_scenario(scenario, out_dir=out_dir, quiet=True)
        row.update({k: v for k, v in summary.items() if k != "name"})
    except ValidationError as exc:
        row["status"] = "validation_error"
        row["error"] = str(exc)
    except NumericalError as exc:
        row["status"] = "numerical_error"
        row["error"] = str(exc)
    return row


def sweep_columns(sweep: SweepSpec) -> tuple[str, ...]:
    param_cols = tuple(p.path for p in sweep.parameters)
    result_cols = tuple(c for c in SUMMARY_COLUMNS
                        if c not in ("name", "wall_time_s"))
    return ("point",) + param_cols + result_cols + ("error",)


def run_sweep(sweep: SweepSpec, jobs: int = 1, out_dir=None,
              quiet: bool = False) -> list[dict]:
    """Run every sweep point, tolerating per-point failures.

    Rows land in ``sweep_summary.csv`` ordered by point index whatever the
    worker count; wall times are deliberately left out of that file so its
    bytes are reproducible.
    """
    root = Path(out_dir) if out_dir is not None else \
        Path(os.environ.get(OUTPUT_DIR_ENV) or sweep.directory)
    root.mkdir(parents=True, exist_ok=True)
    points = _sweep_points(sweep)
    tasks = [(i, sweep.base, assignment, str(root / f"point_{i:03d}"),
              sweep.base_dir)
             for i, assignment in enumerate(points)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_sweep_point, tasks))
    else:
        rows = [_run_sweep_point(task) for task in tasks]
    _write_csv(root / "sweep_summary.csv", sweep_columns(sweep), rows)
    if not quiet:
        ok = sum(1 for r in rows if r.get("status") == "ok")
        print(f"sweep: {ok}/{len(rows)} points ok -> {root / 'sweep_summary.csv'}")
    return rows
