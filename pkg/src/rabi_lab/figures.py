"""Data targets for each figure: sweep specs, Wigner grids and plot-script stubs."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .analytics import (
    PhaseLabel,
    a2_boundary_roots,
    classify_phase_anisotropic,
    critical_coupling_dimensionless,
    sp_solution,
)
from .hamiltonians import ModelParams, UnstableFrameError, anisotropic_params, build_effective, effective_params
from .hilbert import Truncation
from .spectra import ground_observables
from .sweep import Axis, ConfigError, SweepSpec, _atomic_write, _fmt, run_sweep
from .tomography import (
    DensityMatrix,
    WignerGrid,
    analytic_cat,
    lab_to_squeezed,
    measurement_spinor,
    project_qubit,
    reduce,
    subspace_overlap,
    wigner,
)

FIG8_HOPPINGS = ((2.5, 3.5), (3.5, 2.5), (3.0, 3.0))
FULL_SCHEDULE = ((8, 60), (12, 90), (16, 130), (20, 180))
EFFECTIVE_SCHEDULE = ((0, 90), (0, 130), (0, 180))


@dataclass
class FigureOutput:
    name: str
    files: list = field(default_factory=list)
    data: dict = field(default_factory=dict)


# --- sweep-backed targets ---

def _line(name, lo, hi, n):
    return Axis(name, float(lo), float(hi), int(n))


def figure_specs(name: str, quick: bool = False) -> dict:
    """Sweep specs behind a figure, keyed by output stem."""
    q = quick
    if name == "fig2a":
        return {"fig2a": SweepSpec(
            model="effective", observables=("analytic",),
            axes=(_line("j_tilde", 0.001, 0.999, 21 if q else 201),
                  _line("g_tilde", 0.015, 3.0, 21 if q else 201)))}
    if name == "fig2b":
        return {"fig2b": SweepSpec(
            model="effective",
            axes=(_line("j_tilde", 0.02, 0.98, 5 if q else 61),
                  _line("g_tilde", 0.05, 3.0, 5 if q else 61)),
            schedule=((0, 40), (0, 60)) if q else ((0, 90), (0, 130)))}
    if name == "fig3a":
        axis = (_line("g_tilde", 0.0, 0.65, 14 if q else 66),)
        return {
            "fig3a": SweepSpec(model="effective", axes=axis, fixed=(("j_tilde", 0.95),),
                               schedule=((0, 60), (0, 90)) if q else EFFECTIVE_SCHEDULE),
            "fig3a_exact": SweepSpec(model="effective", axes=axis, fixed=(("j_tilde", 0.95),),
                                     observables=("analytic",), analytic_form="exact"),
        }
    if name == "fig3b":
        return {"fig3b": SweepSpec(
            model="full", axes=(_line("g_tilde", 0.0, 0.65, 6 if q else 66),),
            fixed=(("j_tilde", 0.95),),
            schedule=((4, 40), (6, 60)) if q else FULL_SCHEDULE)}
    if name in ("fig4a", "fig4b"):
        d = 0.5 if name == "fig4a" else 1.0
        return {name: SweepSpec(
            model="effective_a2", observables=("analytic",), fixed=(("d_tilde", d),),
            axes=(_line("j_tilde", 0.0, 1.2, 21 if q else 201),
                  _line("g_tilde", 0.0, 3.0, 21 if q else 201)))}
    if name == "fig5a":
        return {"fig5a": SweepSpec(
            model="effective_a2", observables=("analytic",), fixed=(("j_tilde", 1.03),),
            axes=(_line("d_tilde", 1.0, 3.0, 21 if q else 201),
                  _line("g_tilde", 0.0, 1.5, 21 if q else 201)))}
    if name == "fig5b":
        return {"fig5b": SweepSpec(
            model="effective_a2", fixed=(("d_tilde", 1.5), ("j_tilde", 1.03)),
            axes=(_line("g_tilde", 0.22, 1.2, 6 if q else 50),),
            schedule=((0, 90), (0, 130)) if q else ((0, 200), (0, 260), (0, 320)))}
    if name == "fig8":
        specs = {}
        for j1, j2 in FIG8_HOPPINGS:
            specs[f"fig8_j1_{j1}_j2_{j2}"] = SweepSpec(
                model="anisotropic", fixed=(("j1", j1), ("j2", j2)),
                axes=(_line("g", 0.0, 4.6, 4 if q else 24),),
                schedule=((4, 40), (6, 60)) if q else FULL_SCHEDULE)
        return specs
    raise ValueError(f"figure {name!r} has no sweep spec")


# --- auxiliary tables ---

def _write_table(path: Path, header, rows) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _atomic_write(path, buf.getvalue())
    return path


def _fig2a_boundary(out: Path, quick: bool) -> Path:
    j = np.linspace(0.001, 0.999, 21 if quick else 201)
    rows = [(jt, critical_coupling_dimensionless(jt)) for jt in j]
    return _write_table(out / "fig2a_boundary.csv", ["j_tilde", "g_tilde_c"], rows)


def _a2_boundary(out: Path, stem: str, d: float, quick: bool) -> Path:
    j = np.linspace(0.0, 1.2, 21 if quick else 201)
    rows = []
    for jt in j:
        roots = a2_boundary_roots(jt, d) if jt > 0 else []
        lower = roots[0] if roots else None
        upper = roots[1] if len(roots) > 1 else None
        unstable = math.sqrt((jt**2 - 1) / d) if jt > 1 else None
        rows.append((jt, lower, upper, unstable))
    return _write_table(out / f"{stem}_boundary.csv",
                        ["j_tilde", "g_tilde_np_sp_lower", "g_tilde_np_sp_upper", "g_tilde_up"], rows)


def fig7_table(quick: bool = False, g: float = 2.5, lo: float = 0.0, hi: float = 5.0,
               count: Optional[int] = None) -> dict:
    """``chi_2r / chi_1r`` over the ``(J1, J2)`` plane; ``None`` where undefined."""
    n = count or (11 if quick else 101)
    j = np.linspace(lo, hi, n)
    params = ModelParams(g=g, J=0.0)
    ratio = np.full((n, n), np.nan)
    phase = np.empty((n, n), dtype=object)
    for i, j1 in enumerate(j):
        for k, j2 in enumerate(j):
            try:
                ap = anisotropic_params(params, j1, j2)
            except UnstableFrameError:
                phase[i, k] = str(PhaseLabel.UP)
                continue
            phase[i, k] = str(classify_phase_anisotropic(params, j1, j2))
            if ap.chi1r > 0:
                ratio[i, k] = ap.chi2r / ap.chi1r
    return {"j1": j, "j2": j, "ratio": ratio, "phase": phase}


# --- Wigner targets ---

@dataclass(frozen=True)
class WignerSpec:
    """Ground-state Wigner function of mode b in the effective model."""

    g: float
    j: float = 3.0
    omega_a: float = 40.0
    omega_q: float = 5.0
    omega_b: float = 1.0
    cutoff: int = 120
    grid_min: float = -10.0
    grid_max: float = 10.0
    grid_count: int = 201
    projection: str = "none"  # none, plus, minus
    frame: str = "lab"  # lab, squeezed

    def __post_init__(self):
        if self.projection not in ("none", "plus", "minus"):
            raise ConfigError("projection must be 'none', 'plus' or 'minus'")
        if self.frame not in ("lab", "squeezed"):
            raise ConfigError("frame must be 'lab' or 'squeezed'")
        if self.grid_count < 2 or not self.grid_max > self.grid_min:
            raise ConfigError("grid needs grid_count >= 2 and grid_max > grid_min")
        if self.cutoff < 2:
            raise ConfigError("cutoff must be >= 2")

    @property
    def params(self) -> ModelParams:
        return ModelParams(omega_a=self.omega_a, omega_b=self.omega_b, omega_q=self.omega_q,
                           g=self.g, J=self.j)

    @classmethod
    def from_toml(cls, text: str) -> WignerSpec:
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from exc
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "g" not in data:
            raise ConfigError("wigner config needs 'g'")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> WignerSpec:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_toml(text)


def compute_wigner(spec: WignerSpec) -> dict:
    """ED ground state, optional qubit projection, Wigner grid and diagnostics."""
    params = spec.params
    trunc = Truncation.effective(spec.cutoff)
    eff = effective_params(params)
    res = ground_observables(build_effective(params, trunc), params, squeeze_r=eff.r)
    meta = {"energy": res.energy, "gap01": res.gap_01, "n_b_rescaled": res.n_b_rescaled}
    if spec.projection == "none":
        rho = reduce(res.state, trunc, "mode_b")
        psi = None
    else:
        spinor = measurement_spinor(params, 1 if spec.projection == "plus" else -1)
        psi, prob = project_qubit(res.state, trunc, spinor)
        meta["projection_probability"] = prob
        meta["spinor"] = [complex(c).real for c in spinor]
    if spec.frame == "squeezed":
        if psi is None:
            full = reduce(res.state, trunc, "mode_b").matrix
            s_dag = lab_to_squeezed(np.eye(spec.cutoff + 1), eff.r)
            rho = DensityMatrix(s_dag @ full @ s_dag.conj().T)
        else:
            psi = lab_to_squeezed(psi, eff.r)
    if psi is not None:
        rho = DensityMatrix.pure(psi / np.linalg.norm(psi))
    x = np.linspace(spec.grid_min, spec.grid_max, spec.grid_count)
    grid = wigner(rho, x)
    meta.update({
        "purity": rho.purity(),
        "min_w": grid.min,
        "integral": grid.integral(),
        "tail_population": grid.tail_population,
        "tail_warning": grid.tail_warning,
        "imag_residue": grid.imag_residue,
        "frame": spec.frame,
        "projection": spec.projection,
    })
    try:
        sp_plus = sp_solution(params, "+")
        shift = eff.r if spec.frame == "lab" else 0.0
        meta["predicted_lobe_x"] = math.sqrt(2) * math.exp(shift) * abs(sp_plus.alpha)
        meta["lobe_centers"] = list(grid.lobe_centers())
        cat = analytic_cat(params, spec.cutoff)
        meta["cat_subspace_overlap"] = subspace_overlap(
            np.column_stack([res.state, res.excited_state]), cat)
    except ValueError:
        pass
    return {"grid": grid, "meta": meta, "ground": res}


def fig6_spec(name: str, quick: bool = False, frame: str = "lab") -> WignerSpec:
    count = 101 if quick else 201
    if name == "fig6a":
        return WignerSpec(g=2.0, j=3.0, grid_count=count, frame=frame)
    return WignerSpec(g=3.4, j=3.0, grid_count=count, projection="plus", frame=frame)


def wigner_csv(grid: WignerGrid) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y", "W"])
    for i, x in enumerate(grid.x_values):
        for k, y in enumerate(grid.y_values):
            writer.writerow([_fmt(x), _fmt(y), _fmt(grid.values[i, k])])
    return buf.getvalue()


def write_wigner(path: Path, grid: WignerGrid) -> Path:
    _atomic_write(path, wigner_csv(grid))
    return path


# --- plot stubs ---

_STUB_LINE = '''"""Plot {stem}.csv (requires matplotlib)."""
import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("{stem}.csv")))
x = [float(r["{axis}"]) for r in rows]
for col, style in (("n_b_analytic", "r-"), ("n_b_numeric", "k--")):
    pts = [(xi, float(r[col])) for xi, r in zip(x, rows) if r.get(col)]
    if pts:
        plt.plot(*zip(*pts), style, label=col)
plt.xlabel("{axis}")
plt.ylabel("n_b")
plt.legend()
plt.savefig("{stem}.png", dpi=150)
'''

_STUB_MAP = '''"""Plot {stem}.csv as a map (requires matplotlib)."""
import csv
import numpy as np
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("{stem}.csv")))
x = sorted({{float(r["{ax0}"]) for r in rows}})
y = sorted({{float(r["{ax1}"]) for r in rows}})
z = np.array([float(r["{col}"]) if r["{col}"] else np.nan for r in rows]).reshape(len(x), len(y))
plt.pcolormesh(x, y, z.T, shading="auto")
plt.colorbar(label="{col}")
plt.xlabel("{ax0}")
plt.ylabel("{ax1}")
plt.savefig("{stem}.png", dpi=150)
'''

_STUB_WIGNER = '''"""Plot {stem}.csv (requires matplotlib)."""
import csv
import numpy as np
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("{stem}.csv")))
x = sorted({{float(r["x"]) for r in rows}})
w = np.array([float(r["W"]) for r in rows]).reshape(len(x), -1)
plt.contourf(x, x, w.T, 60, cmap="RdBu_r")
plt.colorbar(label="W")
plt.xlabel("x")
plt.ylabel("y")
plt.gca().set_aspect("equal")
plt.savefig("{stem}.png", dpi=150)
'''


def _stub(out: Path, stem: str, kind: str, **fmt) -> Path:
    template = {"line": _STUB_LINE, "map": _STUB_MAP, "wigner": _STUB_WIGNER}[kind]
    path = out / f"plot_{stem}.py"
    _atomic_write(path, template.format(stem=stem, **fmt))
    return path


# --- driver ---

FIGURES = ("fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "fig5a", "fig5b",
           "fig6a", "fig6b", "fig7", "fig8")


def figure_target(name: str, out_dir=".", quick: bool = False, workers: Optional[int] = None,
                  use_cache: bool = True, fmt: str = "csv", frame: str = "lab") -> FigureOutput:
    """Write the data behind one figure plus a plotting stub."""
    if name not in FIGURES:
        raise ValueError(f"unknown figure {name!r}; valid names are {', '.join(FIGURES)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = FigureOutput(name)
    if name in ("fig6a", "fig6b"):
        spec = fig6_spec(name, quick, frame)
        data = compute_wigner(spec)
        result.files.append(write_wigner(out / f"{name}.csv", data["grid"]))
        meta = dict(data["meta"], spec=asdict(spec))
        path = out / f"{name}.json"
        _atomic_write(path, json.dumps(meta, indent=1, sort_keys=True) + "\n")
        result.files += [path, _stub(out, name, "wigner")]
        result.data = data
        return result
    if name == "fig7":
        table = fig7_table(quick)
        rows = []
        for i, j1 in enumerate(table["j1"]):
            for k, j2 in enumerate(table["j2"]):
                r = table["ratio"][i, k]
                rows.append((j1, j2, table["phase"][i, k], None if np.isnan(r) else r))
        result.files.append(_write_table(out / "fig7.csv", ["j1", "j2", "phase", "chi2r_over_chi1r"], rows))
        result.files.append(_stub(out, "fig7", "map", ax0="j1", ax1="j2", col="chi2r_over_chi1r"))
        result.data = table
        return result
    for stem, spec in figure_specs(name, quick).items():
        sweep = run_sweep(spec, workers=workers, use_cache=use_cache)
        suffix = "json" if fmt == "json" else "csv"
        path = out / f"{stem}.{suffix}"
        sweep.write(path, fmt)
        result.files.append(path)
        result.data[stem] = sweep
        if len(spec.axes) == 2:
            col = "n_b_numeric" if "numeric" in spec.observables else "n_b_analytic"
            result.files.append(_stub(out, stem, "map", ax0=spec.axes[0].name,
                                      ax1=spec.axes[1].name, col=col))
        else:
            result.files.append(_stub(out, stem, "line", axis=spec.axes[0].name))
    if name == "fig2a":
        result.files.append(_fig2a_boundary(out, quick))
    if name in ("fig4a", "fig4b"):
        result.files.append(_a2_boundary(out, name, 0.5 if name == "fig4a" else 1.0, quick))
    return result
