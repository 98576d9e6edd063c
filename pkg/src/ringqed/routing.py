"""Cavity output fields, photon routing figures of merit and feasibility.

The drive enters through the input mirror as <a+_in> = -i eps, <a-_in> = 0,
and the outputs follow a_out = sqrt(kappa_in) <a> - a_in.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .model import (
    AtomChain,
    ParameterError,
    SystemParams,
    params_for_cooperativity,
    structure_factor,
)
from .weak_drive import traveling_amplitudes

PHASE_FLOOR = 1e-14
INPUT_PHASE = -np.pi / 2  # arg(-i eps)
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def wrap_phase(phi):
    """Map angles into (-pi, pi]."""
    wrapped = np.mod(np.asarray(phi, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


@dataclass(frozen=True)
class RoutingMetrics:
    n_out_plus: float
    n_out_minus: float
    n_out_tot: float
    phi_plus: Optional[float]  # None marks an undefined phase (zero amplitude)
    phi_minus: Optional[float]
    relative_phase: Optional[float]


@dataclass(frozen=True)
class RouterFigures:
    n_loss: float
    tuning_range: float
    argmax_s_loss: float


def output_amplitudes(n_atoms, s, *, g, kappa_in, kappa, gamma, epsilon, delta, delta_ac):
    a_plus, a_minus = traveling_amplitudes(
        n_atoms, s, g=g, kappa_in=kappa_in, kappa=kappa, gamma=gamma,
        epsilon=epsilon, delta=delta, delta_ac=delta_ac,
    )
    root_kin = np.sqrt(kappa_in)
    return root_kin * a_plus + 1j * np.asarray(epsilon), root_kin * a_minus


def _kw(params: SystemParams, epsilon=None) -> dict:
    return dict(
        g=params.g, kappa_in=params.kappa_in, kappa=params.kappa, gamma=params.gamma,
        epsilon=params.epsilon if epsilon is None else epsilon,
        delta=params.delta, delta_ac=params.delta_ac,
    )


def output_fields(params: SystemParams, chain: AtomChain):
    """Steady output amplitudes (a+_out, a-_out) for the given chain."""
    out_p, out_m = output_amplitudes(chain.n_atoms, structure_factor(chain).value, **_kw(params))
    return complex(out_p), complex(out_m)


def output_photon_numbers(params: SystemParams, n_atoms: int, s):
    """(n+_out, n-_out, n_tot_out) normalised to the input photon number.

    Independent of eps, so the evaluation uses eps = 1; ``s`` may be an array.
    """
    out_p, out_m = output_amplitudes(n_atoms, s, **_kw(params, epsilon=1.0))
    n_p = np.abs(out_p) ** 2
    n_m = np.abs(out_m) ** 2
    return n_p, n_m, n_p + n_m


def phase_of(amplitude, epsilon):
    """Output phase relative to the input mode, or None below the floor."""
    if abs(amplitude) < PHASE_FLOOR * epsilon:
        return None
    return float(wrap_phase(np.angle(amplitude) - INPUT_PHASE))


def metrics_from_outputs(out_plus: complex, out_minus: complex, epsilon: float) -> RoutingMetrics:
    if epsilon <= 0:
        raise ParameterError("routing metrics need epsilon > 0")
    n_p = abs(out_plus) ** 2 / epsilon**2
    n_m = abs(out_minus) ** 2 / epsilon**2
    phi_p = phase_of(out_plus, epsilon)
    phi_m = phase_of(out_minus, epsilon)
    rel = None if phi_p is None or phi_m is None else float(wrap_phase(phi_p - phi_m))
    return RoutingMetrics(n_p, n_m, n_p + n_m, phi_p, phi_m, rel)


def routing_metrics(params: SystemParams, chain: AtomChain) -> RoutingMetrics:
    return metrics_from_outputs(*output_fields(params, chain), params.epsilon)


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200):
    """Maximise a unimodal scalar function on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    best = (c, fc) if fc >= fd else (d, fd)
    for x in (lo, hi):
        fx = f(x)
        if fx > best[1]:
            best = (x, fx)
    return float(best[0]), float(best[1])


def grid_golden_max(f_vec, lo: float, hi: float, n_grid: int = 256, tol: float = 1e-12):
    """Grid scan followed by golden-section refinement around the best cell."""
    xs = np.linspace(lo, hi, n_grid)
    vals = f_vec(xs)
    i = int(np.argmax(vals))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, n_grid - 1)]
    x, fx = golden_section_max(lambda v: float(f_vec(np.array([v]))[0]), a, b, tol=tol)
    if vals[i] > fx:
        return float(xs[i]), float(vals[i])
    return x, fx


def max_photon_loss_numeric(params: SystemParams, n_atoms: int, s_max: float | None = None):
    """max over |S| in [0, s_max] of 1 - n_tot_out; returns (n_loss, argmax |S|).

    ``s_max`` defaults to N; a smaller bound models a disordered chain whose
    structure factor cannot reach N.
    """
    hi = float(n_atoms if s_max is None else s_max)
    loss = lambda s: 1.0 - output_photon_numbers(params, n_atoms, s)[2]
    s_best, n_loss = grid_golden_max(loss, 0.0, hi)
    return n_loss, s_best


def tuning_range_numeric(params: SystemParams, n_atoms: int, s_max: float | None = None) -> float:
    """max over |S| of n-_out (attained at the largest reachable |S|)."""
    hi = float(n_atoms if s_max is None else s_max)
    gain = lambda s: output_photon_numbers(params, n_atoms, s)[1]
    return grid_golden_max(gain, 0.0, hi)[1]


def router_figures(params: SystemParams, n_atoms: int, s_max: float | None = None) -> RouterFigures:
    n_loss, s_arg = max_photon_loss_numeric(params, n_atoms, s_max)
    return RouterFigures(n_loss, tuning_range_numeric(params, n_atoms, s_max), s_arg)


def loss_branch_boundary(nc: float) -> float:
    """beta = (NC+1) sqrt((NC-2)/(3NC+2)); only meaningful for NC > 2."""
    return (nc + 1) * np.sqrt((nc - 2) / (3 * nc + 2))


def max_photon_loss_analytic(nc: float, delta_over_gamma: float) -> float:
    """Closed-form maximum photon loss for kappa_in = kappa at delta = 0."""
    if nc < 0:
        raise ParameterError("nc must be >= 0")
    x2 = 4.0 * delta_over_gamma**2
    a = nc + 1.0
    if nc > 2 and 2 * abs(delta_over_gamma) < loss_branch_boundary(nc):
        # 1/a + sqrt((1+x2)(a^2+x2))/(a x2) - 1/x2, rationalised so x2 -> 0 is finite
        root = np.sqrt((1 + x2) * (a**2 + x2))
        return 1.0 / a + (a**2 + 1 + x2) / (a * (root + a))
    return 4 * nc / (a**2 + x2)


def loss_limit_large_nc(delta_over_gamma: float) -> float:
    x2 = 4.0 * delta_over_gamma**2
    return (np.sqrt(1 + x2) - 1) / x2


def tuning_range(nc: float, delta_over_gamma: float) -> float:
    """Closed-form tuning range for kappa_in = kappa."""
    if nc < 0:
        raise ParameterError("nc must be >= 0")
    return 4 * nc**2 / ((2 * nc + 1) ** 2 + 4 * delta_over_gamma**2)


def router_params(nc: float, delta_over_gamma: float, kappa_in_ratio: float = 1.0, n_atoms: int = 10) -> SystemParams:
    """Parameters realising (NC, Delta/gamma); the outputs depend on nothing else."""
    return params_for_cooperativity(nc, n_atoms, delta_over_gamma, kappa_in_ratio=kappa_in_ratio)


# ---------------------------------------------------------------- feasibility


def _max_detuning_for_w(nc: float, target_w: float) -> float:
    """Largest Delta/gamma with W >= target_w, or -inf when none."""
    x2 = (4 * nc**2 / target_w - (2 * nc + 1) ** 2) / 4
    return float(np.sqrt(x2)) if x2 >= 0 else -np.inf


def _min_detuning_for_loss(nc: float, target_loss: float, hi: float = 1e8) -> float:
    """Smallest Delta/gamma >= 0 with n_loss <= target_loss (n_loss falls with Delta)."""
    h = lambda x: max_photon_loss_analytic(nc, x) - target_loss
    if h(0.0) <= 0:
        return 0.0
    if h(hi) > 0:
        return np.inf
    return brentq(h, 0.0, hi, xtol=1e-12, rtol=1e-14)


def min_detuning_limit(target_loss: float) -> float:
    """Delta/gamma at which the NC -> infinity loss equals target_loss.

    Solves (sqrt(1 + 4x^2) - 1)/(4x^2) = L, i.e. x = sqrt(1 - 2L)/(2L) ~ 1/(2L).
    """
    return float(np.sqrt(1 - 2 * target_loss) / (2 * target_loss))


@dataclass(frozen=True)
class FeasibleRegion:
    feasible: bool
    min_nc: Optional[float]
    min_nc_detuning: Optional[float]
    min_detuning_limit: float
    boundary: list = field(default_factory=list)  # rows (nc, delta_lo, delta_hi)


def feasibility_interval(nc: float, target_w: float, target_loss: float):
    return _min_detuning_for_loss(nc, target_loss), _max_detuning_for_w(nc, target_w)


def feasible_region(
    target_w: float,
    target_loss: float,
    nc_min: float = 1.0,
    nc_max: float = 1e6,
    n_grid: int = 121,
    rel_tol: float = 1e-5,
) -> FeasibleRegion:
    """Smallest NC admitting a detuning with W >= target_w and n_loss <= target_loss.

    For each NC the admissible Delta/gamma form an interval: the loss bound
    sets its lower end, the tuning-range bound its upper end.  The first
    grid NC with a nonempty interval is refined by bisection.
    """
    if not (0 < target_w < 1 and 0 < target_loss < 1):
        raise ParameterError("targets must lie strictly between 0 and 1")
    limit = min_detuning_limit(target_loss) if target_loss < 0.5 else 0.0
    grid = np.geomspace(nc_min, nc_max, n_grid)
    boundary = []
    first = None
    for nc in grid:
        lo, hi = feasibility_interval(nc, target_w, target_loss)
        boundary.append((float(nc), float(lo), float(hi)))
        if first is None and lo <= hi:
            first = nc
    if first is None:
        return FeasibleRegion(False, None, None, limit, boundary)
    gap = lambda nc: np.subtract(*feasibility_interval(nc, target_w, target_loss))
    idx = int(np.searchsorted(grid, first))
    if idx == 0:
        nc_star = float(first)
    else:
        a, b = float(grid[idx - 1]), float(first)
        while (b - a) > rel_tol * b:
            mid = 0.5 * (a + b)
            if gap(mid) <= 0:
                b = mid
            else:
                a = mid
        nc_star = b
    x_star = feasibility_interval(nc_star, target_w, target_loss)[0]
    return FeasibleRegion(True, nc_star, float(x_star), limit, boundary)


@dataclass(frozen=True)
class MirrorScan:
    ratios: np.ndarray
    tuning_range: np.ndarray
    n_loss: np.ndarray


def mirror_ratio_scan(nc: float, delta_over_gamma: float, ratios, n_atoms: int = 10) -> MirrorScan:
    """Numeric W and n_loss versus kappa_in/kappa at fixed total kappa."""
    ratios = np.asarray(ratios, dtype=float)
    w = np.empty_like(ratios)
    loss = np.empty_like(ratios)
    for i, r in enumerate(ratios):
        p = router_params(nc, delta_over_gamma, kappa_in_ratio=float(r), n_atoms=n_atoms)
        w[i] = tuning_range_numeric(p, n_atoms)
        loss[i] = max_photon_loss_numeric(p, n_atoms)[0]
    return MirrorScan(ratios, w, loss)
