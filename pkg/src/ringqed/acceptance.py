"""Numbered acceptance checks shared by the CLI (`figures`, `validate`) and the tests."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import meanfield, oracle, routing
from .disorder import DisorderSpec, degraded_tuning_range, expected_structure_ratio, mean_structure_factor
from .model import AtomChain, SystemParams, structure_factor, translate_chain
from .modes import (
    decompose_modes,
    dispersive_estimates,
    field_at_position,
    node_position,
    polariton_eigenvalues,
    single_excitation_matrix,
    spectrum_for_structure,
    coupling_matrix,
)
from .scan import extract_peaks
from .weak_drive import photon_numbers, steady_state_fields, traveling_amplitudes


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float = float("inf")

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d}: {self.title} -- {self.detail} ({self.seconds:.2f}s)"


def _timed(number, title, budget):
    def wrap(fn):
        def run(*args, **kw):
            t0 = time.perf_counter()
            passed, detail = fn(*args, **kw)
            elapsed = time.perf_counter() - t0
            if elapsed > budget:
                passed = False
                detail += f"; exceeded the {budget:g}s budget"
            return CriterionResult(number, title, bool(passed), detail, elapsed, budget)

        run.number = number
        run.title = title
        return run

    return wrap


@_timed(1, "polariton spectrum in the lossless limit", 1.0)
def criterion_1():
    p = SystemParams(g=0.5, kappa_in=1e-9, gamma=1e-9, delta_ac=0.0)
    n = 20
    worst = 0.0
    for s in (0.0, 10.0, 20.0):
        ev = spectrum_for_structure(p, n, s).eigenvalues.real
        g1, g2 = 0.5 * np.sqrt(n + s), 0.5 * np.sqrt(n - s)
        worst = max(worst, float(np.max(np.abs(ev - np.array([g1, -g1, g2, -g2])))))
    return worst < 1e-6, f"max |Re E - (+-g sqrt(N+-|S|))| = {worst:.2e}"


def random_chain(rng, n) -> AtomChain:
    return AtomChain(rng.uniform(0.0, 1.0, n))


@_timed(2, "dense single-excitation matrix vs closed-form eigenvalues", 5.0)
def criterion_2(seed: int = 2):
    rng = np.random.default_rng(seed)
    worst = 0.0
    bad_counts = 0
    for _ in range(50):
        n = int(rng.integers(2, 31))
        p = SystemParams(
            g=rng.uniform(0.1, 1.0), kappa_in=rng.uniform(0.01, 1.0), gamma=rng.uniform(0.1, 2.0),
            delta_ac=rng.uniform(-10, 10),
        )
        chain = random_chain(rng, n)
        dense = np.linalg.eigvals(single_excitation_matrix(p, chain))
        spec = polariton_eigenvalues(p, chain)
        expected = np.concatenate([spec.eigenvalues, np.full(n - 2, spec.omega_atom)])
        cost = np.abs(dense[:, None] - expected[None, :])
        rows, cols = linear_sum_assignment(cost)
        worst = max(worst, float(cost[rows, cols].max()))
        n_atomic = int(np.sum(np.abs(dense - spec.omega_atom) < 1e-9))
        bad_counts += n_atomic != n - 2
    ok = worst < 1e-10 and bad_counts == 0
    return ok, f"max eigenvalue mismatch {worst:.2e}; wrong dark-space counts {bad_counts}/50"


@_timed(3, "dark-mode nodes sit on the atoms and follow translations", 1.0)
def criterion_3(seed: int = 3):
    rng = np.random.default_rng(seed)
    p = SystemParams()
    worst_field = 0.0
    worst_shift = 0.0
    for n in (2, 5, 10, 20):
        chain = AtomChain.uniform(n, offset=rng.uniform(0, 0.5))
        modes = decompose_modes(p, chain)
        worst_field = max(worst_field, float(np.abs(field_at_position(modes.c2, chain.positions)).max()))
        d = rng.uniform(-1, 1)
        moved = decompose_modes(p, translate_chain(chain, d))
        worst_field = max(worst_field, float(np.abs(field_at_position(moved.c2, chain.positions + d)).max()))
        shift = node_position(moved.c2) - node_position(modes.c2) - d
        shift = (shift + 0.25) % 0.5 - 0.25  # nodes repeat every lambda/2
        worst_shift = max(worst_shift, abs(shift))
    ok = worst_field < 1e-12 and worst_shift < 1e-12
    return ok, f"max |C2 field| at atoms {worst_field:.2e}; node shift error {worst_shift:.2e}"


@_timed(4, "router tuning range and maximum loss at NC=100", 1.0)
def criterion_4():
    p = SystemParams(g=0.5, kappa_in=0.1, gamma=1.0, delta_ac=10.0)
    n = 10
    w = routing.tuning_range_numeric(p, n)
    loss, _ = routing.max_photon_loss_numeric(p, n)
    analytic = routing.max_photon_loss_analytic(100.0, 10.0)
    dw = abs(w - 40000 / 40801)
    dl = abs(loss - analytic)
    ok = dw < 1e-9 and dl < 1e-4 and abs(loss - 0.05844) < 1e-4
    return ok, f"W={w:.10f} (|dW|={dw:.1e}); n_loss={loss:.6f} vs closed form {analytic:.6f}"


def loss_grid():
    """20 x 20 (NC, Delta/gamma) grid with detunings bracketing the branch boundary."""
    ncs = np.geomspace(0.5, 1000.0, 20)
    rows = []
    for i, nc in enumerate(ncs):
        if nc > 2:
            beta = routing.loss_branch_boundary(nc) / 2  # boundary in units of Delta/gamma
            lo, hi = 0.5 * beta, 1.5 * beta
            xs = np.concatenate([np.linspace(lo, hi, 16), beta * (1 + np.array([-1e-3, -1e-6, 1e-6, 1e-3]))])
        else:
            xs = np.geomspace(0.01, 100.0, 20)
        rows.extend((float(nc), float(x)) for x in np.sort(xs))
    return rows


@_timed(5, "closed-form loss vs golden-section maximisation", 30.0)
def criterion_5():
    worst = 0.0
    where = None
    for nc, x in loss_grid():
        p = routing.router_params(nc, x)
        numeric, _ = routing.max_photon_loss_numeric(p, 10)
        analytic = routing.max_photon_loss_analytic(nc, x)
        rel = abs(numeric - analytic) / analytic
        if rel > worst:
            worst, where = rel, (nc, x)
    return worst < 1e-6, f"max relative deviation {worst:.2e} at (NC, Delta/gamma) = ({where[0]:.4g}, {where[1]:.4g})"


@_timed(6, "feasibility threshold for W >= 0.9 and n_loss <= 0.01", 30.0)
def criterion_6():
    region = routing.feasible_region(0.9, 0.01)
    nc = region.min_nc
    ok = region.feasible and abs(nc - 278.0) <= 0.02 * 278.0
    return ok, f"minimal NC = {nc:.2f} at Delta/gamma = {region.min_nc_detuning:.2f}"


@_timed(7, "thermal disorder: mean |S|/N and degraded tuning range", 30.0)
def criterion_7(seed: int = 0):
    spec = DisorderSpec.from_nm(20.0, samples=10_000, seed=seed)
    mean, err = mean_structure_factor(100, spec)
    law = expected_structure_ratio(spec.sigma)
    deg = degraded_tuning_range(routing.router_params(100.0, 10.0), 10, spec)
    w = deg.tuning_range_mean_s
    ok = abs(mean - 0.9494) < 0.005 and abs(law - 0.9494) < 5e-4 and abs(w - 0.86) < 0.01
    return ok, (
        f"<|S|/N> = {mean:.5f} +- {err:.1e} (law {law:.5f}); W at that |S|/N = {w:.4f}; "
        f"loss {deg.n_loss_clean:.5f} -> {deg.n_loss_degraded:.5f}"
    )


def oracle_report(params: SystemParams | None = None, chain: AtomChain | None = None, mf_epsilon: float = 0.01):
    """Oracle vs closed form (weak drive) and oracle vs mean field (stronger drive).

    Defaults to a single atom at the origin driven at eps = 1e-3 gamma.
    """
    p = params or SystemParams(epsilon=1e-3)
    chain = chain if chain is not None else AtomChain([0.0])
    res = oracle.solve_converged(p, chain)
    fields = steady_state_fields(p, chain)
    exact = np.array([fields.a_plus, fields.a_minus])
    got = np.array([res.expectations.a_plus, res.expectations.a_minus])
    dev_analytic = float(np.max(np.abs(got - exact) / np.maximum(np.abs(exact), 1e-300)))

    p2 = p.replace(epsilon=mf_epsilon)
    res2 = oracle.solve_converged(p2, chain)
    mf, _ = meanfield.find_steady_state(p2, chain)
    o = np.array([res2.expectations.a_plus, res2.expectations.a_minus])
    m = np.array([mf.a_plus, mf.a_minus])
    dev_mf = float(np.max(np.abs(m - o) / np.maximum(np.abs(o), 1e-300)))
    return {
        "cutoff": res.cutoff,
        "cutoff_strong": res2.cutoff,
        "oracle_vs_analytic": dev_analytic,
        "meanfield_vs_oracle": dev_mf,
    }


@_timed(8, "master-equation oracle vs closed form and mean field", 60.0)
def criterion_8():
    r = oracle_report()
    ok = r["oracle_vs_analytic"] < 0.01 and r["meanfield_vs_oracle"] < 0.02
    return ok, (
        f"oracle vs closed form {r['oracle_vs_analytic']:.2e} (cutoff {r['cutoff']}); "
        f"mean field vs oracle {r['meanfield_vs_oracle']:.2e} (cutoff {r['cutoff_strong']})"
    )


LINEWIDTH_PARAMS = dict(g=0.5, kappa_in=0.1, gamma=1.0, delta_ac=20.0)
LINEWIDTH_N = 20


def linewidth_scan(points: int = 3001):
    p = SystemParams(**LINEWIDTH_PARAMS)
    est = dispersive_estimates(p, LINEWIDTH_N, LINEWIDTH_N)
    deltas = np.linspace(-0.5, 1.0, points)
    a_p, a_m = traveling_amplitudes(
        LINEWIDTH_N, float(LINEWIDTH_N), g=p.g, kappa_in=p.kappa_in, kappa=p.kappa, gamma=p.gamma,
        epsilon=p.epsilon, delta=deltas, delta_ac=p.delta_ac,
    )
    n_tot = photon_numbers(a_p, a_m, p.kappa, p.epsilon)[2]
    spectrum = spectrum_for_structure(p, LINEWIDTH_N, LINEWIDTH_N)
    return extract_peaks(deltas, n_tot, spectrum), est


@_timed(9, "linewidths of the bright and dark modes", 10.0)
def criterion_9():
    report, est = linewidth_scan()
    if len(report.peaks) != 2:
        return False, f"expected two peaks, found {len(report.peaks)} ({report.diagnostic})"
    dark = min(report.peaks, key=lambda pk: abs(pk.center))
    bright = max(report.peaks, key=lambda pk: abs(pk.center))
    rd = dark.fwhm / est.dark_linewidth - 1
    rb = bright.fwhm / est.bright_linewidth - 1
    ok = abs(rd) < 0.05 and abs(rb) < 0.05
    return ok, (
        f"dark FWHM {dark.fwhm:.4f} vs {est.dark_linewidth:.4f} ({rd:+.1%}); "
        f"bright FWHM {bright.fwhm:.4f} vs {est.bright_linewidth:.4f} ({rb:+.1%})"
    )


# ----------------------------------------------------------------- property suites


def prop_passivity(rng, cases):
    n = rng.integers(1, 50, cases)
    s = rng.uniform(0, 1, cases) * n * np.exp(2j * np.pi * rng.uniform(size=cases))
    kappa = rng.uniform(0.01, 2.0, cases)
    ratio = rng.uniform(0, 1, cases)
    eps = rng.uniform(1e-4, 1.0, cases)
    out_p, out_m = routing.output_amplitudes(
        n, s, g=rng.uniform(0, 2, cases), kappa_in=ratio * kappa, kappa=kappa, gamma=rng.uniform(0.01, 3, cases),
        epsilon=eps, delta=rng.uniform(-10, 10, cases), delta_ac=rng.uniform(-30, 30, cases),
    )
    tot = (np.abs(out_p) ** 2 + np.abs(out_m) ** 2) / eps**2
    return float(np.max(tot - 1.0)) <= 1e-12, f"max n_tot_out - 1 = {np.max(tot) - 1:.1e}"


def prop_unitarity(rng, cases):
    n = rng.integers(1, 50, cases)
    s = rng.uniform(0, 1, cases) * n * np.exp(2j * np.pi * rng.uniform(size=cases))
    kappa = rng.uniform(0.01, 2.0, cases)
    eps = rng.uniform(1e-4, 1.0, cases)
    out_p, out_m = routing.output_amplitudes(
        n, s, g=rng.uniform(0, 2, cases), kappa_in=kappa, kappa=kappa, gamma=0.0,
        epsilon=eps, delta=rng.uniform(-10, 10, cases), delta_ac=rng.uniform(-30, 30, cases),
    )
    dev = np.abs((np.abs(out_p) ** 2 + np.abs(out_m) ** 2) / eps**2 - 1.0)
    return float(dev.max()) <= 1e-6, f"max |n_tot_out - 1| = {dev.max():.1e}"


def prop_bloch(rng, cases):
    worst_z = worst_ball = -np.inf
    tol = 1e-8
    for _ in range(cases):
        n = int(rng.integers(1, 4))
        p = SystemParams(
            g=rng.uniform(0.1, 2.0), kappa_in=rng.uniform(0.1, 2.0), gamma=rng.uniform(0.5, 2.0),
            epsilon=10 ** rng.uniform(-2, 0.5), delta=rng.uniform(-3, 3), delta_ac=rng.uniform(-3, 3),
        )
        traj = meanfield.integrate(
            meanfield.MeanFieldState.vacuum(n), p, random_chain(rng, n), t_end=5.0,
            tolerance=tol, n_samples=26, check_bloch=False,
        )
        worst_z = max(worst_z, traj.bloch_excess())
        worst_ball = max(worst_ball, traj.ball_excess())
    ok = worst_z <= meanfield.BLOCH_TOL and worst_ball <= 10 * tol
    return ok, f"max |s_z| - 1 = {worst_z:.1e}, max ball excess {worst_ball:.1e}"


def prop_svd(rng, cases):
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 40))
        p = SystemParams(g=rng.uniform(0.01, 3.0))
        chain = random_chain(rng, n)
        m = decompose_modes(p, chain)
        gmat = coupling_matrix(p, chain)
        recon = m.g1 * np.outer(m.c1, m.a1.conj())
        if m.a2 is not None:
            recon = recon + m.g2 * np.outer(m.c2, m.a2.conj())
        worst = max(worst, float(np.abs(recon - gmat).max() / p.g))
    return worst < 1e-10, f"max reconstruction error {worst:.1e}"


def prop_translation(rng, cases):
    worst = 0.0
    for _ in range(cases):
        chain = random_chain(rng, int(rng.integers(1, 60)))
        d = rng.uniform(-2, 2)
        s0 = structure_factor(chain).value
        s1 = structure_factor(translate_chain(chain, d)).value
        worst = max(worst, abs(s1 - s0 * np.exp(4j * np.pi * d)))
    return worst < 1e-10, f"max |S(x+d) - S e^(2ikd)| = {worst:.1e}"


PROPERTIES = {
    "passivity": prop_passivity,
    "zero-gamma unitarity": prop_unitarity,
    "Bloch bounds": prop_bloch,
    "SVD reconstruction": prop_svd,
    "translation covariance": prop_translation,
}


@_timed(10, "randomised property suites", 60.0)
def criterion_10(cases: int = 1000, seed: int = 10):
    parts = []
    ok = True
    for i, (name, prop) in enumerate(PROPERTIES.items()):
        passed, detail = prop(np.random.default_rng([seed, i]), cases)
        ok &= passed
        parts.append(f"{name}: {'ok' if passed else 'FAILED'} ({detail})")
    return ok, f"{cases} cases each; " + "; ".join(parts)


CRITERIA = [
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
    criterion_6, criterion_7, criterion_8, criterion_9, criterion_10,
]


def run_all(numbers=None) -> list[CriterionResult]:
    chosen = [c for c in CRITERIA if numbers is None or c.number in numbers]
    return [c() for c in chosen]
