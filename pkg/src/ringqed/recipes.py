"""Built-in reproduction recipes for the standard figure scans, with sanity checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .disorder import expected_structure_ratio
from .model import SystemParams
from .modes import spectrum_for_structure
from .scan import AxisSpec, FixedSpec, ResultTable, ScanConfig, run_scan


@dataclass
class RecipeOutcome:
    name: str
    tables: dict = field(default_factory=dict)  # file stem -> ResultTable
    passed: bool = True
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] recipe {self.name}: {self.detail}"


def spectrum_config(s_ratio: float, n_atoms: int = 20, **fixed) -> ScanConfig:
    base = dict(g=0.5, kappa_in=0.1, n_atoms=n_atoms, s_magnitude=s_ratio * n_atoms)
    base.update(fixed)
    return ScanConfig(
        quantity="n_tot",
        axis1=AxisSpec(name="delta", start=-6.0, stop=6.0, points=601),
        axis2=AxisSpec(name="delta_ac", start=-10.0, stop=10.0, points=201),
        fixed=FixedSpec(**base),
    )


def ridge_tracking(table: ResultTable, config: ScanConfig):
    """Fraction of spectral maxima (per delta_ac row) within half a linewidth of some Re E."""
    delta = table.column("delta")
    dac = table.column("delta_ac")
    n_tot = table.column("n_tot")
    fx = config.fixed
    hits = total = 0
    for value in np.unique(dac):
        rows = dac == value
        x, y = delta[rows], n_tot[rows]
        idx, _ = find_peaks(y, prominence=1e-3 * y.max())
        p = SystemParams(g=fx.g, kappa_in=fx.kappa_in, kappa_other=fx.kappa_other, gamma=fx.gamma, delta_ac=value)
        ev = spectrum_for_structure(p, fx.n_atoms, fx.s_magnitude).eigenvalues
        for i in idx:
            total += 1
            hits += bool(np.any(np.abs(x[i] - ev.real) <= np.abs(ev.imag)))
    return hits, total


def spectrum_maps(threads: int = 1) -> RecipeOutcome:
    out = RecipeOutcome("spectrum heatmaps")
    parts = []
    for ratio in (0.0, 0.5, 1.0):
        cfg = spectrum_config(ratio)
        table = run_scan(cfg, threads)
        out.tables[f"spectrum_s{ratio:g}"] = table
        hits, total = ridge_tracking(table, cfg)
        frac = hits / total if total else 0.0
        out.passed &= frac >= 0.95
        parts.append(f"|S|/N={ratio:g}: {hits}/{total} maxima on a polariton line")
    out.detail = "; ".join(parts)
    return out


def output_crossover(threads: int = 1) -> RecipeOutcome:
    out = RecipeOutcome("output crossover versus |S|")
    cols = {}
    for q in ("n_out_plus", "n_out_minus", "n_out_tot"):
        cfg = ScanConfig(
            quantity=q,
            axis1=AxisSpec(name="s_magnitude", start=0.0, stop=10.0, points=101),
            fixed=FixedSpec(g=0.5, kappa_in=0.1, delta_ac=10.0, n_atoms=10),
        )
        table = run_scan(cfg, threads)
        out.tables[f"outputs_{q}"] = table
        cols[q] = table.column(q)
    plus, minus, tot = cols["n_out_plus"], cols["n_out_minus"], cols["n_out_tot"]
    monotone = np.all(np.diff(plus) <= 1e-15) and np.all(np.diff(minus) >= -1e-15)
    out.passed = bool(monotone and tot.min() > 0.9)
    out.detail = (
        f"n+ {plus[0]:.4f} -> {plus[-1]:.4f}, n- {minus[0]:.4f} -> {minus[-1]:.4f} "
        f"({'monotone' if monotone else 'NOT monotone'}); min n_tot {tot.min():.4f}"
    )
    return out


def router_maps(threads: int = 1, points: int = 25) -> RecipeOutcome:
    out = RecipeOutcome("router figures over (NC, Delta)")
    ncs = list(np.geomspace(10.0, 1000.0, points))
    dets = list(np.linspace(1.0, 150.0, points))
    for q in ("w", "n_loss"):
        cfg = ScanConfig(
            quantity=q,
            axis1=AxisSpec(name="nc", values=ncs),
            axis2=AxisSpec(name="delta_ac", values=dets),
            fixed=FixedSpec(kappa_in=0.1, n_atoms=10),
        )
        out.tables[f"router_{q}"] = run_scan(cfg, threads)
    w = out.tables["router_w"].column("w")
    loss = out.tables["router_n_loss"].column("n_loss")
    feasible = int(np.sum((w >= 0.9) & (loss <= 0.01)))
    errors = len(out.tables["router_w"].errors) + len(out.tables["router_n_loss"].errors)
    out.passed = errors == 0 and feasible > 0
    out.detail = f"{feasible}/{len(w)} grid points with W >= 0.9 and n_loss <= 0.01; {errors} failed points"
    return out


def phase_maps(threads: int = 1) -> RecipeOutcome:
    out = RecipeOutcome("output phases")
    cfg = ScanConfig(
        quantity="phi_plus",
        axis1=AxisSpec(name="s_magnitude", values=[0.0, 5.0, 10.0]),
        axis2=AxisSpec(name="delta", start=-2.0, stop=2.0, points=401),
        fixed=FixedSpec(g=0.5, kappa_in=0.1, delta_ac=10.0, n_atoms=10),
    )
    table = run_scan(cfg, threads)
    out.tables["phase_plus"] = table
    rel = ScanConfig(
        quantity="relative_phase",
        axis1=AxisSpec(name="arg_s", start=-np.pi, stop=np.pi, points=361),
        fixed=FixedSpec(g=0.5, kappa_in=0.1, delta_ac=10.0, n_atoms=10, s_magnitude=5.0),
    )
    out.tables["phase_relative"] = run_scan(rel, threads)
    s = table.column("s_magnitude")
    phi = table.column("phi_plus")
    diff = np.angle(np.exp(1j * (phi[s == 10.0] - phi[s == 0.0])))
    best = float(np.max(np.abs(diff)))
    out.passed = best > 0.9 * np.pi
    out.detail = f"largest |phi+(|S|=N) - phi+(0)| over delta = {best / np.pi:.4f} pi"
    return out


def disorder_average(threads: int = 1, samples: int = 10_000, seed: int = 0) -> RecipeOutcome:
    out = RecipeOutcome("disorder-averaged structure factor")
    cfg = ScanConfig(
        quantity="mean_s",
        axis1=AxisSpec(name="n_atoms", values=[2, 5, 10, 20, 50, 100]),
        axis2=AxisSpec(name="sigma", values=[20.0, 30.0]),
        fixed=FixedSpec(samples=samples),
        seed=seed,
    )
    table = run_scan(cfg, threads)
    out.tables["disorder_mean_s"] = table
    n = table.column("n_atoms")
    sig = table.column("sigma")
    mean = table.column("mean_s")
    last = float(mean[(n == 100) & (sig == 20.0)][0])
    law = expected_structure_ratio(20.0 / 780.0)
    out.passed = abs(last - law) < 0.005
    out.detail = f"<|S|/N>(N=100, 20 nm) = {last:.4f} vs large-N law {law:.4f}"
    return out


RECIPES = {"spectrum_maps": spectrum_maps, "output_crossover": output_crossover, "router_maps": router_maps, "phase_maps": phase_maps, "disorder_average": disorder_average}
