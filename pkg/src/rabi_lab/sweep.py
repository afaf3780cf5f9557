"""Parameter-grid sweeps: TOML configs, parallel evaluation, caching and emission."""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .analytics import (
    PhaseLabel,
    a2_order_parameter,
    classify_phase,
    classify_phase_anisotropic,
    classify_phase_exact,
    order_parameter_analytic,
    order_parameter_exact,
)
from .hamiltonians import (
    ModelParams,
    UnstableFrameError,
    a2_params,
    anisotropic_params,
    build_anisotropic_effective,
    build_effective,
    build_effective_a2,
    build_full,
    build_full_anisotropic,
    effective_params,
)
from .hilbert import Truncation
from .spectra import converge_in_truncation

MODELS = ("full", "effective", "effective_a2", "anisotropic")
FREQUENCIES = ("omega_a", "omega_q", "omega_b")
COUPLINGS = {
    "full": ("g_tilde", "j_tilde", "g", "j"),
    "effective": ("g_tilde", "j_tilde", "g", "j"),
    "effective_a2": ("g_tilde", "j_tilde", "g", "j", "d_tilde"),
    "anisotropic": ("g", "j1", "j2"),
}
OBSERVABLES = ("analytic", "numeric")
CSV_COLUMNS = ("phase", "n_b_analytic", "n_b_numeric", "n_a_numeric", "energy", "gap01",
               "converged", "error")
TOP_KEYS = {"model", "fixed", "axes", "truncation", "tol", "convergence_tol", "observables",
            "analytic_form", "hopping_model", "boundary_tol", "cache_dir"}
AXIS_KEYS = {"name", "min", "max", "count", "spacing"}
TRUNCATION_KEYS = {"schedule"}
DEFAULT_FREQUENCIES = {"omega_a": 40.0, "omega_q": 5.0, "omega_b": 1.0}


class ConfigError(ValueError):
    """Malformed or inconsistent sweep configuration."""


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    count: int
    spacing: str = "linear"

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: a model, fixed parameters, swept axes and solver settings.

    ``schedule`` holds ``(n_a_max, n_b_max)`` pairs; ``n_a_max`` is ignored by
    models without the auxiliary mode.
    """

    model: str
    axes: tuple
    fixed: tuple = ()  # sorted (name, value) pairs
    schedule: tuple = ((0, 90), (0, 130))
    tol: float = 1e-9
    convergence_tol: float = 1e-4
    observables: tuple = ("analytic", "numeric")
    analytic_form: str = "dimensionless"
    hopping_model: str = "full"
    boundary_tol: float = 1e-6
    cache_dir: Optional[str] = None

    def __post_init__(self):
        self.validate()

    @property
    def fixed_dict(self) -> dict:
        return dict(self.fixed)

    @property
    def shape(self) -> tuple:
        return tuple(ax.count for ax in self.axes)

    @property
    def axis_names(self) -> tuple:
        return tuple(ax.name for ax in self.axes)

    def validate(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODELS}")
        allowed = set(FREQUENCIES) | set(COUPLINGS[self.model])
        if not self.axes:
            raise ConfigError("a sweep needs at least one axis")
        if len(self.axes) > 2:
            raise ConfigError("at most two swept axes are supported")
        names = [ax.name for ax in self.axes]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate axis names {names}")
        for ax in self.axes:
            if ax.name not in allowed:
                raise ConfigError(f"axis {ax.name!r} is not a parameter of model {self.model!r}; "
                                  f"valid names are {sorted(allowed)}")
            if ax.count < 2:
                raise ConfigError(f"axis {ax.name!r} needs count >= 2")
            if ax.spacing != "linear":
                raise ConfigError(f"axis {ax.name!r}: only linear spacing is supported")
            if not ax.max > ax.min:
                raise ConfigError(f"axis {ax.name!r} needs max > min")
        for name, _ in self.fixed:
            if name not in allowed:
                raise ConfigError(f"fixed parameter {name!r} is not valid for model {self.model!r}")
            if name in names:
                raise ConfigError(f"parameter {name!r} is both fixed and swept")
        present = set(names) | {n for n, _ in self.fixed}
        if self.model == "anisotropic":
            needed = [{"g", "j1", "j2"}]
        else:
            dimless, dimful = {"g_tilde", "j_tilde"}, {"g", "j"}
            if present & dimless and present & dimful:
                raise ConfigError("mix of dimensionless (g_tilde, j_tilde) and dimensional (g, j) couplings")
            needed = [dimful if present & dimful else dimless]
            if self.model == "effective_a2":
                needed.append({"d_tilde"})
        for group in needed:
            missing = group - present
            if missing:
                raise ConfigError(f"missing parameters {sorted(missing)} for model {self.model!r}")
        bad = set(self.observables) - set(OBSERVABLES)
        if bad or "analytic" not in self.observables:
            raise ConfigError(f"observables must include 'analytic' and come from {OBSERVABLES}")
        if self.analytic_form not in ("dimensionless", "exact"):
            raise ConfigError("analytic_form must be 'dimensionless' or 'exact'")
        if self.hopping_model not in ("full", "effective"):
            raise ConfigError("hopping_model must be 'full' or 'effective'")
        if len(self.schedule) < 2:
            raise ConfigError("truncation schedule needs at least two entries")
        for entry in self.schedule:
            if len(entry) != 2 or any(int(v) != v or v < 0 for v in entry):
                raise ConfigError(f"schedule entries must be [n_a_max, n_b_max] pairs, got {entry!r}")
        for prev, cur in zip(self.schedule, self.schedule[1:]):
            if cur[0] < prev[0] or cur[1] < prev[1] or tuple(cur) == tuple(prev):
                raise ConfigError("truncation schedule must be strictly increasing")
        if not self.tol > 0 or not self.convergence_tol > 0:
            raise ConfigError("tolerances must be positive")

    # --- config round trip ---

    def to_dict(self) -> dict:
        out = {
            "model": self.model,
            "analytic_form": self.analytic_form,
            "observables": list(self.observables),
            "tol": self.tol,
            "convergence_tol": self.convergence_tol,
            "boundary_tol": self.boundary_tol,
            "fixed": dict(self.fixed),
            "axes": [asdict(ax) for ax in self.axes],
            "truncation": {"schedule": [list(e) for e in self.schedule]},
        }
        if self.model == "anisotropic":
            out["hopping_model"] = self.hopping_model
        if self.cache_dir is not None:
            out["cache_dir"] = self.cache_dir
        return out

    @classmethod
    def from_dict(cls, data: dict) -> SweepSpec:
        unknown = set(data) - TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "model" not in data or "axes" not in data:
            raise ConfigError("config needs 'model' and 'axes'")
        axes = []
        for raw in data["axes"]:
            bad = set(raw) - AXIS_KEYS
            if bad:
                raise ConfigError(f"unknown axis keys {sorted(bad)}")
            missing = {"name", "min", "max", "count"} - set(raw)
            if missing:
                raise ConfigError(f"axis is missing {sorted(missing)}")
            axes.append(Axis(str(raw["name"]), float(raw["min"]), float(raw["max"]),
                             int(raw["count"]), raw.get("spacing", "linear")))
        trunc = data.get("truncation", {})
        bad = set(trunc) - TRUNCATION_KEYS
        if bad:
            raise ConfigError(f"unknown truncation keys {sorted(bad)}")
        fixed = data.get("fixed", {})
        for k, v in fixed.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"fixed parameter {k!r} must be a number")
        kwargs = dict(
            model=data["model"],
            axes=tuple(axes),
            fixed=tuple(sorted((k, float(v)) for k, v in fixed.items())),
        )
        if "schedule" in trunc:
            kwargs["schedule"] = tuple(tuple(int(v) for v in e) for e in trunc["schedule"])
        for key in ("tol", "convergence_tol", "boundary_tol"):
            if key in data:
                kwargs[key] = float(data[key])
        for key in ("analytic_form", "hopping_model", "cache_dir"):
            if key in data:
                kwargs[key] = data[key]
        if "observables" in data:
            kwargs["observables"] = tuple(data["observables"])
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_toml(cls, text: str) -> SweepSpec:
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> SweepSpec:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_toml(text)

    def points(self) -> list:
        """Resolved parameter dicts in row-major axis order."""
        grids = [ax.values() for ax in self.axes]
        base = dict(DEFAULT_FREQUENCIES)
        base.update(self.fixed)
        out = []
        for combo in itertools.product(*grids):
            point = dict(base)
            point.update({ax.name: float(v) for ax, v in zip(self.axes, combo)})
            out.append(point)
        return out


@dataclass
class PointRecord:
    params: dict
    phase: str
    n_b_analytic: Optional[float] = None
    n_b_numeric: Optional[float] = None
    n_a_numeric: Optional[float] = None
    energy: Optional[float] = None
    gap01: Optional[float] = None
    converged: Optional[bool] = None
    error: Optional[str] = None
    wall_time: float = field(default=0.0, compare=False)

    def payload(self) -> dict:
        """Everything except wall time, which would break byte-identical output."""
        d = asdict(self)
        d.pop("wall_time")
        return d


@dataclass
class SweepResult:
    spec: SweepSpec
    records: list

    @property
    def failures(self) -> int:
        return sum(r.error is not None for r in self.records)

    def column(self, name: str) -> np.ndarray:
        vals = [getattr(r, name) for r in self.records]
        return np.array([np.nan if v is None else v for v in vals], dtype=float).reshape(self.spec.shape)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(self.spec.axis_names) + list(CSV_COLUMNS))
        for rec in self.records:
            row = [_fmt(rec.params[name]) for name in self.spec.axis_names]
            row += [rec.phase, _fmt(rec.n_b_analytic), _fmt(rec.n_b_numeric), _fmt(rec.n_a_numeric),
                    _fmt(rec.energy), _fmt(rec.gap01), _fmt(rec.converged), rec.error or ""]
            writer.writerow(row)
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"version": __version__, "spec": self.spec.to_dict(),
               "records": [r.payload() for r in self.records]}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def write(self, path, fmt: str = "csv"):
        text = self.to_csv() if fmt == "csv" else self.to_json()
        _atomic_write(Path(path), text)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, int, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


# --- per-point evaluation ---

def point_params(model: str, point: dict) -> ModelParams:
    freqs = {k: point[k] for k in FREQUENCIES}
    if model == "anisotropic":
        return ModelParams(g=point["g"], J=point["j1"], **freqs)
    if "g_tilde" in point:
        return ModelParams.from_dimensionless(point["g_tilde"], point["j_tilde"], **freqs)
    return ModelParams(g=point["g"], J=point["j"], **freqs)


def _analytics(spec: SweepSpec, point: dict, params: ModelParams):
    tol = spec.boundary_tol
    d = point.get("d_tilde", 0.0)
    if spec.model == "anisotropic":
        return classify_phase_anisotropic(params, point["j1"], point["j2"], tol), None
    if spec.analytic_form == "exact":
        phase = classify_phase_exact(params, d, tol)
        if phase is PhaseLabel.UP:
            return phase, None
        if d:
            return phase, None
        return phase, order_parameter_exact(params)
    dl = params.dimensionless
    phase = classify_phase(dl.g_tilde, dl.j_tilde, d, tol)
    if phase is PhaseLabel.UP:
        return phase, None
    if d:
        return phase, a2_order_parameter(dl.g_tilde, dl.j_tilde, d)
    return phase, order_parameter_analytic(dl.g_tilde, dl.j_tilde)


def _numerics(spec: SweepSpec, point: dict, params: ModelParams):
    model = spec.model
    frame = 0.0
    with_a = model == "full" or (model == "anisotropic" and spec.hopping_model == "full")
    schedule = [Truncation(na, nb, include_a=True) if with_a else Truncation.effective(nb)
                for na, nb in spec.schedule]
    if not with_a:
        # drop entries that only differed in n_a
        schedule = [t for i, t in enumerate(schedule) if i == 0 or t != schedule[i - 1]]
    if model == "full":
        r = effective_params(params).r
        builder = lambda t: build_full(params, t)  # noqa: E731
    elif model == "effective":
        r = effective_params(params).r
        builder = lambda t: build_effective(params, t)  # noqa: E731
    elif model == "effective_a2":
        d = point["d_tilde"]
        r = frame = a2_params(params, d).r_A
        builder = lambda t: build_effective_a2(params, d, t)  # noqa: E731
    else:
        j1, j2 = point["j1"], point["j2"]
        r = anisotropic_params(params, j1, j2).r_prime
        if spec.hopping_model == "full":
            builder = lambda t: build_full_anisotropic(params, j1, j2, t)  # noqa: E731
        else:
            builder = lambda t: build_anisotropic_effective(params, j1, j2, t)  # noqa: E731
    return converge_in_truncation(builder, schedule, obs_tol=spec.convergence_tol, params=params,
                                  squeeze_r=r, frame_squeeze=frame, tol=spec.tol)


def evaluate_point(spec: SweepSpec, point: dict) -> PointRecord:
    """Analytics always, ED when requested; failures land in ``error``."""
    start = time.perf_counter()
    rec = PointRecord(params=dict(point), phase="")
    try:
        params = point_params(spec.model, point)
        phase, n_b = _analytics(spec, point, params)
        rec.phase = str(phase)
        rec.n_b_analytic = n_b
        if "numeric" in spec.observables and phase is not PhaseLabel.UP:
            res = _numerics(spec, point, params)
            rec.n_b_numeric = res.n_b_rescaled
            rec.n_a_numeric = res.n_a_rescaled
            rec.energy = res.energy
            rec.gap01 = res.gap_01
            rec.converged = res.converged
    except UnstableFrameError:
        # the finite-frequency frame can fail just inside the limit-form boundary
        rec.phase = str(PhaseLabel.UP)
        rec.n_b_numeric = rec.n_a_numeric = rec.energy = rec.gap01 = rec.converged = None
    except Exception as exc:  # isolate the point, keep the sweep going
        rec.error = f"{type(exc).__name__}: {exc}"
    rec.wall_time = time.perf_counter() - start
    return rec


# --- caching ---

def cache_dir(spec: Optional[SweepSpec] = None) -> Path:
    env = os.environ.get("RABI_LAB_CACHE")
    if env:
        return Path(env)
    if spec is not None and spec.cache_dir:
        return Path(spec.cache_dir)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "rabi_lab"


def cache_key(spec: SweepSpec, point: dict) -> str:
    """Digest of everything that determines a point's record."""
    canonical = {
        "version": __version__,
        "model": spec.model,
        "params": {k: float(v).hex() for k, v in sorted(point.items())},
        "schedule": [list(e) for e in spec.schedule],
        "tol": float(spec.tol).hex(),
        "convergence_tol": float(spec.convergence_tol).hex(),
        "boundary_tol": float(spec.boundary_tol).hex(),
        "observables": sorted(spec.observables),
        "analytic_form": spec.analytic_form,
        "hopping_model": spec.hopping_model if spec.model == "anisotropic" else None,
    }
    blob = json.dumps(canonical, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _cache_read(directory: Path, key: str) -> Optional[PointRecord]:
    path = directory / key[:2] / f"{key}.json"
    try:
        data = json.loads(path.read_text())
    except (OSError, ValueError):
        return None
    return PointRecord(**data)


def _cache_write(directory: Path, key: str, rec: PointRecord):
    if rec.error is not None:
        return
    try:
        _atomic_write(directory / key[:2] / f"{key}.json", json.dumps(rec.payload(), sort_keys=True))
    except OSError:
        pass


def cache_stats(directory: Optional[Path] = None) -> dict:
    directory = Path(directory) if directory is not None else cache_dir()
    files = list(directory.glob("*/*.json")) if directory.exists() else []
    return {"path": str(directory), "entries": len(files),
            "bytes": sum(f.stat().st_size for f in files)}


def cache_clear(directory: Optional[Path] = None) -> int:
    directory = Path(directory) if directory is not None else cache_dir()
    removed = 0
    if directory.exists():
        for f in directory.glob("*/*.json"):
            f.unlink()
            removed += 1
    return removed


# --- driver ---

def _evaluate_indexed(args):
    spec, point = args
    return evaluate_point(spec, point)


def run_sweep(spec: SweepSpec, workers: Optional[int] = None, use_cache: bool = True) -> SweepResult:
    """Evaluate every grid point; record order is row-major and worker independent."""
    points = spec.points()
    records: list = [None] * len(points)
    directory = cache_dir(spec) if use_cache else None
    keys = [cache_key(spec, p) for p in points] if use_cache else [None] * len(points)
    todo = []
    for i, (point, key) in enumerate(zip(points, keys)):
        hit = _cache_read(directory, key) if use_cache else None
        if hit is not None:
            records[i] = hit
        else:
            todo.append(i)
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(todo) <= 1:
        for i in todo:
            records[i] = evaluate_point(spec, points[i])
    else:
        chunk = max(1, len(todo) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = pool.map(_evaluate_indexed, [(spec, points[i]) for i in todo], chunksize=chunk)
            for i, rec in zip(todo, done):
                records[i] = rec
    if use_cache:
        for i in todo:
            _cache_write(directory, keys[i], records[i])
    return SweepResult(spec, records)
