import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment
from scipy.signal import find_peaks

from ringqed.model import AtomChain, ParameterError, SystemParams, chain_with_structure, structure_factor, translate_chain
from ringqed.modes import (
    coupling_matrix,
    decompose_modes,
    dispersive_estimates,
    field_at_position,
    node_position,
    polariton_eigenvalues,
    single_excitation_matrix,
    spectrum_for_structure,
)
from ringqed.weak_drive import photon_numbers, traveling_amplitudes


def random_params(rng):
    return SystemParams(
        g=rng.uniform(0.05, 2), kappa_in=rng.uniform(0.01, 1), gamma=rng.uniform(0.1, 2),
        delta_ac=rng.uniform(-15, 15),
    )


def test_coupling_matrix_examples():
    p = SystemParams(g=0.5)
    assert np.allclose(coupling_matrix(p, AtomChain([0.0])), [[0.5], [0.5]])
    g2 = coupling_matrix(p, AtomChain([0.0, 0.25]))
    assert np.allclose(g2, 0.5 * np.array([[1, -1j], [1, 1j]]), atol=1e-15)
    with pytest.raises(ParameterError):
        coupling_matrix(p, AtomChain([]))


def test_gram_matrix(rng):
    for _ in range(200):
        n = int(rng.integers(1, 40))
        p = SystemParams(g=rng.uniform(0.1, 2))
        chain = AtomChain(rng.uniform(0, 1, n))
        gm = coupling_matrix(p, chain)
        gram = gm @ gm.conj().T
        s = structure_factor(chain).value
        expected = p.g**2 * np.array([[n, np.conj(s)], [s, n]])
        assert np.allclose(gram, expected, atol=1e-12 * p.g**2 * n)


def test_uniform_chain_couplings():
    m = decompose_modes(SystemParams(g=0.5), AtomChain.uniform(10))
    assert m.g1 == pytest.approx(0.5 * np.sqrt(20))
    assert m.g2 == 0.0
    assert m.a2 is None
    assert m.dark_space_dim == 9


def test_intermediate_couplings():
    m = decompose_modes(SystemParams(g=0.5), chain_with_structure(20, 10.0))
    assert m.g1 == pytest.approx(2.7386, abs=1e-4)
    assert m.g2 == pytest.approx(1.5811, abs=1e-4)
    assert m.dark_space_dim == 18


def test_zero_structure_limit():
    chain = AtomChain([0.0, 0.25, 0.1, 0.35])
    m = decompose_modes(SystemParams(g=0.3), chain)
    assert np.allclose(m.c1, [1, 0]) and np.allclose(m.c2, [0, 1])
    phase = np.exp(2j * np.pi * chain.positions)
    assert np.allclose(m.a1, phase / 2) and np.allclose(m.a2, np.conj(phase) / 2)
    assert m.g1 == pytest.approx(m.g2) == pytest.approx(0.3 * 2)


def test_svd_against_dense_oracle(rng):
    for _ in range(300):
        n = int(rng.integers(1, 51))
        p = SystemParams(g=rng.uniform(0.1, 2))
        chain = AtomChain(rng.uniform(0, 1, n))
        m = decompose_modes(p, chain)
        gm = coupling_matrix(p, chain)
        u, sv, vh = np.linalg.svd(gm)
        assert np.allclose(sorted([m.g1, m.g2], reverse=True), sv[:2] if n > 1 else [sv[0], 0.0], atol=1e-10)
        cmat = np.column_stack([m.c1, m.c2])
        assert np.allclose(cmat.conj().T @ cmat, np.eye(2), atol=1e-12)
        recon = m.g1 * np.outer(m.c1, m.a1.conj())
        if m.a2 is not None:
            recon += m.g2 * np.outer(m.c2, m.a2.conj())
            amat = np.column_stack([m.a1, m.a2])
            assert np.allclose(amat.conj().T @ amat, np.eye(2), atol=1e-10)
        assert np.abs(recon - gm).max() < 1e-10
        # phase conventions differ, so compare overlaps only
        assert abs(np.vdot(vh[0].conj(), m.a1)) ** 2 == pytest.approx(1.0, abs=1e-9) or abs(m.g1 - m.g2) < 1e-6
        assert m.g1**2 + m.g2**2 == pytest.approx(2 * n * p.g**2, rel=1e-12)


def test_dark_coupling_vanishes_only_at_full_structure(rng):
    p = SystemParams()
    for _ in range(100):
        n = int(rng.integers(2, 20))
        m = decompose_modes(p, AtomChain(rng.uniform(0, 1, n)))
        assert m.g2 > 0
    assert decompose_modes(p, AtomChain.uniform(7)).g2 == 0.0
    # 0.3 + k/2 is not exact in binary, so only rounding-level coupling survives
    m = decompose_modes(p, AtomChain.uniform(7, offset=0.3))
    assert m.g2 < 1e-12 * p.g and m.a2 is None


def test_lossless_resonant_eigenvalues():
    p = SystemParams(g=0.5, kappa_in=1e-9, gamma=1e-9, delta_ac=0.0)
    for s in (0, 10, 20):
        ev = spectrum_for_structure(p, 20, s).eigenvalues.real
        expected = [0.5 * np.sqrt(20 + s), -0.5 * np.sqrt(20 + s), 0.5 * np.sqrt(20 - s), -0.5 * np.sqrt(20 - s)]
        assert np.allclose(ev, expected, atol=1e-6)


def test_pair_trace_identity(rng):
    for _ in range(200):
        p = random_params(rng)
        spec = polariton_eigenvalues(p, AtomChain(rng.uniform(0, 1, int(rng.integers(1, 20)))))
        e = spec.eigenvalues
        total = spec.omega_atom + spec.omega_cavity
        assert abs(e[0] + e[1] - total) < 1e-12 and abs(e[2] + e[3] - total) < 1e-12


def test_full_structure_dark_pair_is_bare():
    p = SystemParams(g=0.5, kappa_in=0.1, delta_ac=7.0)
    spec = spectrum_for_structure(p, 10, 10)
    assert set(np.round(spec.eigenvalues[2:], 14)) == {np.round(spec.omega_atom, 14), np.round(spec.omega_cavity, 14)}
    assert spec.linewidths[2] == pytest.approx(0.1)


def test_dispersive_shift_limit():
    p = SystemParams(g=0.5, kappa_in=0.1, delta_ac=200.0)
    est = dispersive_estimates(p, 20, 10)
    ev = spectrum_for_structure(p, 20, 10).eigenvalues
    assert ev[0].real == pytest.approx(est.bright_shift, rel=1e-3)
    assert ev[2].real == pytest.approx(est.dark_shift, rel=1e-3)


def test_dispersive_estimate_arithmetic():
    p = SystemParams(g=0.5, kappa_in=0.1, delta_ac=10.0)
    est = dispersive_estimates(p, 10, 10)
    assert est.bright_shift == pytest.approx(0.5)
    assert est.bright_linewidth == pytest.approx(0.1 + 5 / 100.25)
    assert est.bright_linewidth == pytest.approx(0.1499, abs=1e-4)
    for dac in (3.0, -8.0, 40.0):
        assert dispersive_estimates(p.replace(delta_ac=dac), 10, 10).dark_linewidth == pytest.approx(0.1)
    with pytest.raises(ParameterError):
        dispersive_estimates(p.replace(delta_ac=0.0), 10, 10)


def test_dense_matrix_matches_closed_form(rng):
    for _ in range(100):
        n = int(rng.integers(2, 31))
        p = random_params(rng)
        chain = AtomChain(rng.uniform(0, 1, n))
        dense = np.linalg.eigvals(single_excitation_matrix(p, chain))
        spec = polariton_eigenvalues(p, chain)
        expected = np.concatenate([spec.eigenvalues, np.full(n - 2, spec.omega_atom)])
        cost = np.abs(dense[:, None] - expected[None, :])
        r, c = linear_sum_assignment(cost)
        assert cost[r, c].max() < 1e-10


def test_dark_mode_nodes_on_atoms(rng):
    p = SystemParams()
    for n in (1, 3, 10, 25):
        chain = AtomChain.uniform(n, offset=rng.uniform(0, 1))
        m = decompose_modes(p, chain)
        assert np.abs(field_at_position(m.c2, chain.positions)).max() < 1e-12
        # bright mode: antinodes on the atoms
        xs = np.linspace(0, 1, 2001)
        peak = np.abs(field_at_position(m.c1, xs)).max()
        assert np.abs(field_at_position(m.c1, chain.positions)).min() >= peak - 1e-12


def test_nodes_follow_translation(rng):
    p = SystemParams()
    chain = AtomChain.uniform(6, offset=0.13)
    x0 = node_position(decompose_modes(p, chain).c2)
    for d in rng.uniform(-2, 2, 50):
        x1 = node_position(decompose_modes(p, translate_chain(chain, d)).c2)
        err = (x1 - x0 - d + 0.25) % 0.5 - 0.25
        assert abs(err) < 1e-12


def test_spectral_maxima_sit_on_polaritons(rng):
    for _ in range(40):
        n = int(rng.integers(2, 30))
        s = rng.uniform(0, n)
        p = SystemParams(g=rng.uniform(0.2, 1), kappa_in=0.1, delta_ac=rng.uniform(-12, 12))
        d = np.linspace(-8, 8, 8001)
        ap, am = traveling_amplitudes(n, s, g=p.g, kappa_in=p.kappa_in, kappa=p.kappa, gamma=p.gamma,
                                      epsilon=p.epsilon, delta=d, delta_ac=p.delta_ac)
        n_tot = photon_numbers(ap, am, p.kappa, p.epsilon)[2]
        ev = spectrum_for_structure(p, n, s).eigenvalues
        idx, _ = find_peaks(n_tot, prominence=1e-3 * n_tot.max())
        for i in idx:
            assert np.any(np.abs(d[i] - ev.real) <= np.abs(ev.imag) + 2e-3)
