import numpy as np
import pytest

from ringqed import routing as r
from ringqed.model import AtomChain, ParameterError, SystemParams, chain_with_structure, translate_chain

FIG4 = SystemParams(g=0.5, kappa_in=0.1, gamma=1.0, delta_ac=10.0)


def test_full_structure_routes_backwards():
    m = r.routing_metrics(FIG4, AtomChain.uniform(10))
    assert m.n_out_minus == pytest.approx(40000 / 40801, abs=1e-12)
    assert m.n_out_plus < 0.01


def test_zero_structure_reflects_forward():
    m = r.routing_metrics(FIG4, chain_with_structure(10, 0.0))
    assert m.n_out_minus == 0.0
    assert m.phi_minus is None and m.relative_phase is None
    assert m.n_out_plus > 0.95


def test_empty_ring_passes_everything():
    m = r.routing_metrics(SystemParams(g=0.0, kappa_in=0.1), AtomChain([]))
    assert m.n_out_plus == pytest.approx(1.0) and m.n_out_minus == 0.0
    out_p, _ = r.output_fields(SystemParams(g=0.0, kappa_in=0.1), AtomChain([]))
    assert out_p == pytest.approx(-1j * 1e-3)


def test_passivity(rng):
    for _ in range(1000):
        n = int(rng.integers(0, 40))
        k = rng.uniform(0.01, 2)
        p = SystemParams(g=rng.uniform(0, 2), kappa_in=k * rng.uniform(0, 1), kappa_other=k * rng.uniform(0, 1) + 1e-6,
                         gamma=rng.uniform(0.05, 2), epsilon=rng.uniform(1e-4, 1), delta=rng.uniform(-10, 10),
                         delta_ac=rng.uniform(-30, 30))
        s = rng.uniform(0, n) if n else 0.0
        tot = r.output_photon_numbers(p, n, s)[2]
        assert tot <= 1 + 1e-12


def test_nearly_lossless_atoms_conserve_photons(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        p = SystemParams(g=rng.uniform(0, 2), kappa_in=rng.uniform(0.01, 2), gamma=1e-9,
                         delta=rng.uniform(-5, 5), delta_ac=rng.choice([-1, 1]) * rng.uniform(1, 30))
        if abs(p.delta_atom) < 0.5:
            continue
        tot = r.output_photon_numbers(p, n, rng.uniform(0, n))[2]
        assert abs(tot - 1) < 1e-6


def test_outputs_depend_only_on_structure_magnitude(rng):
    chain = chain_with_structure(8, 5.0)
    base = r.routing_metrics(FIG4, chain)
    for d in rng.uniform(-1, 1, 20):
        moved = r.routing_metrics(FIG4, translate_chain(chain, d))
        assert moved.n_out_plus == pytest.approx(base.n_out_plus, rel=1e-12)
        assert moved.phi_plus == pytest.approx(base.phi_plus, abs=1e-12)
        # backward phase follows arg S, which turns by 4 pi d
        assert np.angle(np.exp(1j * (moved.phi_minus - base.phi_minus - 4 * np.pi * d))) == pytest.approx(0, abs=1e-9)
        shift = np.angle(np.exp(1j * (moved.relative_phase - base.relative_phase + 4 * np.pi * d)))
        assert shift == pytest.approx(0, abs=1e-9)


def test_phases_are_wrapped():
    for d in np.linspace(-3, 3, 41):
        m = r.routing_metrics(FIG4.replace(delta=d), chain_with_structure(10, 6.0))
        for phi in (m.phi_plus, m.phi_minus, m.relative_phase):
            assert -np.pi < phi <= np.pi
    assert r.wrap_phase(-np.pi) == np.pi


def test_large_phase_swing_between_structures():
    deltas = np.linspace(-2, 2, 4001)
    full = np.array([r.routing_metrics(FIG4.replace(delta=d), AtomChain.uniform(10)).phi_plus for d in deltas])
    none = np.array([r.routing_metrics(FIG4.replace(delta=d), chain_with_structure(10, 0.0)).phi_plus for d in deltas])
    diff = np.abs(r.wrap_phase(full - none))
    assert diff.max() > 0.99 * np.pi


def test_zero_structure_phase_is_single_mode_like():
    deltas = np.linspace(-0.6, 2.5, 2001)
    phi = np.array([r.routing_metrics(FIG4.replace(delta=d), chain_with_structure(10, 0.0)).phi_plus for d in deltas])
    steps = np.diff(np.unwrap(phi))
    assert np.all(steps >= 0) or np.all(steps <= 0)


def test_loss_example_values():
    p = r.router_params(100.0, 10.0)
    numeric, arg = r.max_photon_loss_numeric(p, 10)
    hand = 1 / 101 + np.sqrt(401 * 10601) / (4 * 101 * 100) - 1 / 400
    assert r.max_photon_loss_analytic(100, 10) == pytest.approx(hand, rel=1e-12)
    assert numeric == pytest.approx(hand, rel=1e-6)
    assert abs(numeric - 0.05844) < 1e-4
    assert 0 < arg < 10
    assert r.loss_branch_boundary(100) == pytest.approx(57.54, abs=0.01)


def test_low_cooperativity_branch():
    for x in (0.0, 0.5, 3.0, 30.0):
        expected = 4 / (4 + 4 * x**2)
        assert r.max_photon_loss_analytic(1.0, x) == pytest.approx(expected)
        numeric, _ = r.max_photon_loss_numeric(r.router_params(1.0, x), 10)
        assert numeric == pytest.approx(expected, rel=1e-6)


def test_branch_continuity():
    for nc in (3.0, 10.0, 100.0, 1e4):
        x_b = r.loss_branch_boundary(nc) / 2
        below = r.max_photon_loss_analytic(nc, x_b * (1 - 1e-12))
        above = r.max_photon_loss_analytic(nc, x_b * (1 + 1e-12))
        assert abs(below - above) < 1e-9


def test_loss_limits():
    assert r.max_photon_loss_analytic(100, 1e5) < 1e-4
    for x in (1.0, 10.0, 50.0):
        assert r.max_photon_loss_analytic(1e8, x) == pytest.approx(r.loss_limit_large_nc(x), rel=1e-4)
    with pytest.raises(ParameterError):
        r.max_photon_loss_analytic(-1, 1)


def test_tuning_range_values():
    assert r.tuning_range(100, 10) == pytest.approx(40000 / 40801)
    assert r.tuning_range(0, 10) == 0
    assert r.tuning_range(1e9, 10) == pytest.approx(1, abs=1e-8)
    assert r.tuning_range_numeric(r.router_params(100, 10), 10) == pytest.approx(40000 / 40801, abs=1e-12)


def test_router_figures_bounds(rng):
    for _ in range(30):
        p = r.router_params(10 ** rng.uniform(-1, 3), rng.uniform(0, 100), kappa_in_ratio=rng.uniform(0.05, 1))
        f = r.router_figures(p, 10)
        assert 0 <= f.tuning_range <= 1 and 0 <= f.n_loss <= 1


def test_golden_section_on_known_function():
    x, fx = r.golden_section_max(lambda v: -(v - 0.3) ** 2 + 2, 0, 1)
    assert x == pytest.approx(0.3, abs=1e-6) and fx == pytest.approx(2)


def test_feasibility_threshold():
    region = r.feasible_region(0.9, 0.01)
    assert region.feasible
    assert region.min_nc == pytest.approx(278, rel=0.02)
    lo, hi = r.feasibility_interval(region.min_nc * 1.001, 0.9, 0.01)
    assert lo <= hi
    lo, hi = r.feasibility_interval(region.min_nc * 0.999, 0.9, 0.01)
    assert lo > hi
    # the limiting minimum detuning ~ 1/(2 L) is approached only as NC -> infinity
    assert region.min_detuning_limit == pytest.approx(1 / 0.02, rel=0.02)
    assert r.feasibility_interval(1e7, 0.9, 0.01)[0] == pytest.approx(region.min_detuning_limit, rel=1e-3)


def test_relaxed_targets_need_less_cooperativity():
    strict = r.feasible_region(0.9, 0.01).min_nc
    assert r.feasible_region(0.8, 0.02).min_nc < strict


def test_infeasible_and_invalid_targets():
    assert not r.feasible_region(0.9, 0.01, nc_max=100.0).feasible
    with pytest.raises(ParameterError):
        r.feasible_region(1.2, 0.01)


def test_mirror_ratio_scan():
    ratios = np.linspace(0.02, 1.0, 25)
    scan = r.mirror_ratio_scan(278.3, 91.3, ratios)
    assert np.all(np.diff(scan.tuning_range) > 0)
    assert scan.tuning_range[-1] == pytest.approx(r.tuning_range(278.3, 91.3), rel=1e-9)
    tiny = r.mirror_ratio_scan(278.3, 91.3, [1e-4, 1e-6])
    assert tiny.n_loss[1] < tiny.n_loss[0] < 1e-3
