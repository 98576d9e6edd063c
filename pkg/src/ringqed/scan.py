"""Parameter sweeps, peak extraction and tabular output."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import meanfield, oracle, routing
from .disorder import DisorderSpec, mean_structure_factor
from .model import AtomChain, ParameterError, SystemParams, chain_with_structure, translate_chain
from .modes import LABELS, spectrum_for_structure
from .weak_drive import photon_numbers, traveling_amplitudes

log = logging.getLogger(__name__)

Quantity = Literal[
    "n_plus", "n_minus", "n_tot",
    "n_out_plus", "n_out_minus", "n_out_tot",
    "phi_plus", "phi_minus", "relative_phase",
    "eigenvalues", "w", "n_loss", "mean_s",
]
AxisName = Literal["delta", "delta_ac", "s_magnitude", "nc", "kappa_in_ratio", "sigma", "arg_s", "n_atoms"]
Engine = Literal["analytic", "meanfield", "oracle"]

AXIS_UNITS = {
    "delta": "gamma", "delta_ac": "gamma", "s_magnitude": "1", "nc": "1",
    "kappa_in_ratio": "1", "sigma": "nm", "arg_s": "rad", "n_atoms": "1",
}
ANALYTIC_ONLY = {"eigenvalues", "w", "n_loss", "mean_s"}
ROUTER_QUANTITIES = {"w", "n_loss"}
UNDEFINED = "undefined"


class AxisSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: AxisName
    start: Optional[float] = None
    stop: Optional[float] = None
    points: Optional[int] = Field(default=None, ge=2)
    values: Optional[list[float]] = Field(default=None, min_length=2)

    @model_validator(mode="after")
    def _check(self):
        if self.values is not None:
            if any(v is not None for v in (self.start, self.stop, self.points)):
                raise ValueError("give either 'values' or 'start'/'stop'/'points', not both")
            if not all(math.isfinite(v) for v in self.values):
                raise ValueError("axis values must be finite")
        else:
            if self.start is None or self.stop is None or self.points is None:
                raise ValueError("axis needs 'start', 'stop' and 'points' (or 'values')")
            if not (math.isfinite(self.start) and math.isfinite(self.stop)):
                raise ValueError("axis range must be finite")
        if self.name == "n_atoms" and any(v != int(v) or v < 0 for v in self.grid()):
            raise ValueError("n_atoms axis values must be nonnegative integers")
        return self

    def grid(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        return np.linspace(self.start, self.stop, self.points)


class FixedSpec(BaseModel):
    """System parameters and chain description held fixed during a scan."""

    model_config = ConfigDict(extra="forbid")

    g: float = Field(default=0.5, ge=0)
    kappa_in: float = Field(default=0.1, ge=0)
    kappa_other: float = Field(default=0.0, ge=0)
    gamma: float = Field(default=1.0, gt=0)
    epsilon: float = Field(default=1e-3, ge=0)
    delta: float = 0.0
    delta_ac: float = 10.0
    n_atoms: int = Field(default=10, ge=0)
    s_magnitude: Optional[float] = Field(default=None, ge=0)  # None -> N (lambda/2 chain)
    arg_s: float = 0.0
    positions: Optional[list[float]] = None
    nc: Optional[float] = Field(default=None, ge=0)  # overrides g when set
    kappa_in_ratio: Optional[float] = Field(default=None, ge=0, le=1)
    sigma: float = Field(default=0.0, ge=0)  # nm
    wavelength_nm: float = Field(default=780.0, gt=0)
    samples: int = Field(default=10_000, ge=1)
    oracle_cutoff: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if self.positions is not None and len(self.positions) != self.n_atoms:
            raise ValueError("len(positions) must equal n_atoms")
        if self.s_magnitude is not None and self.s_magnitude > self.n_atoms:
            raise ValueError("s_magnitude cannot exceed n_atoms")
        return self


class ScanConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    quantity: Quantity = "n_tot"
    axis1: AxisSpec = AxisSpec(name="delta", start=-6.0, stop=6.0, points=601)
    axis2: Optional[AxisSpec] = None
    fixed: FixedSpec = FixedSpec()
    engine: Engine = "analytic"
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check(self):
        axes = self.axes
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise ValueError("axis1 and axis2 must differ")
        if self.engine != "analytic" and self.quantity in ANALYTIC_ONLY:
            raise ValueError(f"quantity {self.quantity!r} is only available with engine 'analytic'")
        if self.quantity in ROUTER_QUANTITIES and "delta" in names:
            raise ValueError("router figures are defined at delta = 0; drop the delta axis")
        if self.fixed.positions is not None and ({"s_magnitude", "n_atoms"} & set(names)):
            raise ValueError("explicit positions cannot be combined with s_magnitude/n_atoms axes")
        if self.engine == "oracle":
            ns = [self.fixed.n_atoms]
            for a in axes:
                if a.name == "n_atoms":
                    ns.extend(a.grid())
            if max(ns) > oracle.MAX_ATOMS:
                raise ValueError(f"engine 'oracle' supports at most {oracle.MAX_ATOMS} atoms")
        return self

    @property
    def axes(self) -> list[AxisSpec]:
        return [a for a in (self.axis1, self.axis2) if a is not None]


# ------------------------------------------------------------------ points


@dataclass
class Point:
    params: SystemParams
    n_atoms: int
    s: complex  # structure factor realised by the chain
    chain_factory: object  # zero-arg callable returning an AtomChain
    sigma_nm: float


def _resolve(config: ScanConfig, coords: dict) -> Point:
    fx = config.fixed.model_dump()
    fx.update({k: v for k, v in coords.items()})
    n = int(round(fx["n_atoms"]))
    kappa_tot = fx["kappa_in"] + fx["kappa_other"]
    if fx["kappa_in_ratio"] is not None:
        fx["kappa_in"] = fx["kappa_in_ratio"] * kappa_tot
        fx["kappa_other"] = (1.0 - fx["kappa_in_ratio"]) * kappa_tot
    g = fx["g"]
    if fx["nc"] is not None:
        if n < 1:
            raise ParameterError("nc axis needs n_atoms >= 1")
        g = math.sqrt(fx["nc"] * kappa_tot * fx["gamma"] / (4 * n))
    params = SystemParams(
        g=g, kappa_in=fx["kappa_in"], kappa_other=fx["kappa_other"], gamma=fx["gamma"],
        epsilon=fx["epsilon"], delta=fx["delta"], delta_ac=fx["delta_ac"],
    )
    arg_s = fx["arg_s"]
    if fx["positions"] is not None:
        base = AtomChain(fx["positions"])
        chain_factory = lambda: translate_chain(base, arg_s / (4 * np.pi))
        from .model import structure_factor

        s = structure_factor(chain_factory()).value
    else:
        s_mag = float(n if fx["s_magnitude"] is None else fx["s_magnitude"])
        if s_mag > n + 1e-12:
            raise ParameterError(f"s_magnitude {s_mag} exceeds n_atoms {n}")
        s_mag = min(s_mag, float(n))
        s = s_mag * complex(np.exp(1j * arg_s))
        chain_factory = lambda: _chain_for(n, s_mag, arg_s)
    return Point(params, n, s, chain_factory, fx["sigma"])


def _chain_for(n: int, s_mag: float, arg_s: float) -> AtomChain:
    """Concrete chain with |S| = s_mag and arg S = arg_s."""
    if n == 0:
        return AtomChain([])
    if s_mag == n:
        base = AtomChain.uniform(n)
        base_arg = 0.0
    else:
        base = chain_with_structure(n, s_mag)
        from .model import structure_factor

        base_arg = structure_factor(base).phase
    return translate_chain(base, (arg_s - base_arg) / (4 * np.pi))


# ------------------------------------------------------------------ columns


def quantity_columns(quantity: str) -> list[str]:
    if quantity == "eigenvalues":
        return [f"{lab}_{part}[gamma]" for lab in LABELS for part in ("re", "im")]
    if quantity in ("phi_plus", "phi_minus", "relative_phase"):
        return [f"{quantity}[rad]"]
    if quantity == "n_loss":
        return ["n_loss[1]", "argmax_s_loss[1]"]
    if quantity == "mean_s":
        return ["mean_s[1]", "mean_s_stderr[1]"]
    return [f"{quantity}[1]"]


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        """Numeric column by header (with or without the unit suffix)."""
        idx = self._index(name)
        return np.array([_as_float(r[idx]) for r in self.rows])

    def _index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c == name or c.split("[")[0] == name:
                return i
        raise KeyError(name)

    @property
    def errors(self) -> list[str]:
        idx = self.columns.index("error")
        return [r[idx] for r in self.rows if r[idx]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        records = [{c: _json_value(v) for c, v in zip(self.columns, row)} for row in self.rows]
        return json.dumps({"columns": self.columns, "rows": records}, indent=1) + "\n"

    def dump(self, fmt: str = "csv") -> str:
        return self.to_json() if fmt == "json" else self.to_csv()


def _as_float(v):
    if v is None or v == "" or v == UNDEFINED:
        return np.nan
    return float(v)


def _fmt(v) -> str:
    if v is None:
        return UNDEFINED
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _json_value(v):
    if v is None:
        return UNDEFINED
    if isinstance(v, (str, bool)):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return v if math.isfinite(v) else repr(v)


# ------------------------------------------------------------------ evaluation


def _evaluate_point(config: ScanConfig, point: Point) -> list:
    q = config.quantity
    p = point.params
    if q == "eigenvalues":
        if point.n_atoms < 1:
            raise ParameterError("eigenvalues need at least one atom")
        ev = spectrum_for_structure(p, point.n_atoms, abs(point.s)).eigenvalues
        return [x for e in ev for x in (e.real, e.imag)]
    if q == "w":
        return [routing.tuning_range_numeric(p.replace(delta=0.0), point.n_atoms)]
    if q == "n_loss":
        return list(routing.max_photon_loss_numeric(p.replace(delta=0.0), point.n_atoms))
    if q == "mean_s":
        spec = DisorderSpec(sigma=point.sigma_nm / config.fixed.wavelength_nm,
                            samples=config.fixed.samples, seed=config.seed)
        return list(mean_structure_factor(point.n_atoms, spec))

    a_plus, a_minus, n_cav = _amplitudes(config, point)
    if q in ("n_plus", "n_minus", "n_tot"):
        if p.epsilon <= 0:
            raise ParameterError("photon numbers need epsilon > 0")
        if n_cav is None:
            n_cav = photon_numbers(a_plus, a_minus, p.kappa, p.epsilon)
        else:
            scale = p.kappa / (4 * p.epsilon**2)
            n_cav = (scale * n_cav[0], scale * n_cav[1], scale * (n_cav[0] + n_cav[1]))
        return [float(n_cav[("n_plus", "n_minus", "n_tot").index(q)])]
    out_p = np.sqrt(p.kappa_in) * a_plus + 1j * p.epsilon
    out_m = np.sqrt(p.kappa_in) * a_minus
    m = routing.metrics_from_outputs(complex(out_p), complex(out_m), p.epsilon)
    return [getattr(m, q)]


def _amplitudes(config: ScanConfig, point: Point):
    """(<a+>, <a->, photon numbers or None) from the selected engine."""
    p = point.params
    if config.engine == "analytic":
        a_p, a_m = traveling_amplitudes(
            point.n_atoms, point.s, g=p.g, kappa_in=p.kappa_in, kappa=p.kappa,
            gamma=p.gamma, epsilon=p.epsilon, delta=p.delta, delta_ac=p.delta_ac,
        )
        return complex(a_p), complex(a_m), None
    chain = point.chain_factory()
    if config.engine == "meanfield":
        state, _ = meanfield.find_steady_state(p, chain)
        return state.a_plus, state.a_minus, None
    res = oracle.solve_converged(p, chain, cutoff=config.fixed.oracle_cutoff)
    e = res.expectations
    return e.a_plus, e.a_minus, (e.n_plus, e.n_minus)


def _grid_coords(config: ScanConfig) -> list[dict]:
    axes = config.axes
    cast = [int if a.name == "n_atoms" else float for a in axes]
    grids = [[f(v) for v in a.grid()] for f, a in zip(cast, axes)]
    if len(axes) == 1:
        return [{axes[0].name: v} for v in grids[0]]
    return [{axes[0].name: v1, axes[1].name: v2} for v1 in grids[0] for v2 in grids[1]]


def run_scan(config: ScanConfig, threads: int = 1) -> ResultTable:
    """Evaluate the configured quantity on the full axis grid.

    Rows come out in axis order (axis1 outer) whatever the thread count;
    failing points are kept as rows with an ``error`` message.
    """
    axes = config.axes
    columns = [f"{a.name}[{AXIS_UNITS[a.name]}]" for a in axes]
    qcols = quantity_columns(config.quantity)
    table = ResultTable(columns + qcols + ["error"])
    coords = _grid_coords(config)

    fast = _vectorised(config, coords)
    if fast is not None:
        for c, vals in zip(coords, fast):
            table.rows.append([c[a.name] for a in axes] + vals + [""])
        return table

    def work(c):
        try:
            vals = _evaluate_point(config, _resolve(config, c))
            return vals, ""
        except (ParameterError, ArithmeticError, RuntimeError, ValueError) as exc:
            return [math.nan] * len(qcols), f"{type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, coords))
    else:
        results = [work(c) for c in coords]
    for c, (vals, err) in zip(coords, results):
        table.rows.append([c[a.name] for a in axes] + list(vals) + [err])
    return table


_VECTOR_QUANTITIES = {
    "n_plus", "n_minus", "n_tot", "n_out_plus", "n_out_minus", "n_out_tot", "eigenvalues",
}


def _vectorised(config: ScanConfig, coords: list[dict]):
    """Whole-grid numpy evaluation for the closed-form quantities, or None."""
    if config.engine != "analytic" or config.quantity not in _VECTOR_QUANTITIES:
        return None
    try:
        points = [_resolve(config, c) for c in coords]
    except (ParameterError, ValueError):
        return None
    n = np.array([pt.n_atoms for pt in points])
    s = np.array([pt.s for pt in points])
    attr = lambda name: np.array([getattr(pt.params, name) for pt in points])
    q = config.quantity
    if q == "eigenvalues":
        if np.any(n < 1):
            return None
        p0 = points[0].params
        rows = []
        for pt in points:
            ev = spectrum_for_structure(pt.params, pt.n_atoms, abs(pt.s)).eigenvalues
            rows.append([x for e in ev for x in (float(e.real), float(e.imag))])
        return rows
    eps = attr("epsilon")
    if np.any(eps <= 0):
        return None
    kw = dict(g=attr("g"), kappa_in=attr("kappa_in"), kappa=attr("kappa"), gamma=attr("gamma"),
              epsilon=eps, delta=attr("delta"), delta_ac=attr("delta_ac"))
    try:
        a_p, a_m = traveling_amplitudes(n, s, **kw)
    except ArithmeticError:
        return None
    if q.startswith("n_out"):
        root = np.sqrt(kw["kappa_in"])
        n_p = np.abs(root * a_p + 1j * eps) ** 2 / eps**2
        n_m = np.abs(root * a_m) ** 2 / eps**2
        vals = {"n_out_plus": n_p, "n_out_minus": n_m, "n_out_tot": n_p + n_m}[q]
    else:
        n_p, n_m, n_t = photon_numbers(a_p, a_m, kw["kappa"], eps)
        vals = {"n_plus": n_p, "n_minus": n_m, "n_tot": n_t}[q]
    return [[float(v)] for v in vals]


# ------------------------------------------------------------------ peaks


@dataclass(frozen=True)
class Peak:
    center: float
    height: float
    fwhm: float
    label: Optional[str] = None


@dataclass
class PeakReport:
    peaks: list[Peak]
    diagnostic: str = ""

    def nearest(self, x: float) -> Peak:
        return min(self.peaks, key=lambda p: abs(p.center - x))

    def by_label(self, label: str) -> Optional[Peak]:
        for p in self.peaks:
            if p.label == label:
                return p
        return None


def _half_crossing(x, y, i, half, step):
    j = i
    while 0 <= j + step < len(y) and y[j + step] > half:
        j += step
    k = j + step
    if not 0 <= k < len(y):
        return None
    # linear interpolation between samples j (above) and k (below)
    return x[j] + (half - y[j]) * (x[k] - x[j]) / (y[k] - y[j])


def extract_peaks(x, y, spectrum=None, prominence: float = 1e-3) -> PeakReport:
    """Local maxima with their full width at half height.

    ``spectrum`` (a PolaritonSpectrum) labels each peak with the nearest
    real eigenvalue.  Peaks whose half-height crossings fall outside the
    scan are dropped and noted in the diagnostic.
    """
    from scipy.signal import find_peaks

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.argsort(x)
    x, y = x[order], y[order]
    notes = []
    if y.size < 3 or not np.any(np.isfinite(y)) or np.nanmax(y) <= 0:
        return PeakReport([], "no peaks: empty or non-positive data")
    idx, _ = find_peaks(y, prominence=prominence * np.nanmax(y))
    peaks = []
    dx = float(np.median(np.diff(x)))
    for i in idx:
        half = y[i] / 2
        left = _half_crossing(x, y, i, half, -1)
        right = _half_crossing(x, y, i, half, +1)
        if left is None or right is None:
            notes.append(f"peak at {x[i]:.6g} has no half-height crossing inside the scan")
            continue
        width = right - left
        if width < 10 * dx:
            notes.append(f"peak at {x[i]:.6g} resolved by only {width / dx:.1f} points per FWHM")
        label = None
        if spectrum is not None:
            freqs = spectrum.eigenvalues.real
            label = LABELS[int(np.argmin(np.abs(freqs - x[i])))]
        peaks.append(Peak(float(x[i]), float(y[i]), float(width), label))
    if not peaks and not notes:
        notes.append("no peaks found above the prominence threshold")
    return PeakReport(peaks, "; ".join(notes))
