"""Single-excitation collective modes and polariton spectrum.

Frequencies are reported relative to the bare cavity resonance, so the real
part of a polariton eigenvalue is the drive detuning delta at which that
polariton is resonantly excited; the imaginary part is minus half its
linewidth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import AtomChain, ParameterError, SystemParams, structure_deficit, structure_factor, unit_phasor

# |S| below this fraction of N is treated as exactly zero (degenerate SVD).
_S_ZERO = 1e-12

LABELS = ("E1+", "E1-", "E2+", "E2-")


@dataclass(frozen=True, eq=False)
class ModeDecomposition:
    c1: np.ndarray  # over {|+>, |->}
    c2: np.ndarray
    a1: np.ndarray  # over {|E_i>}
    a2: Optional[np.ndarray]  # None when the C2 coupling vanishes (|S| = N)
    g1: float
    g2: float
    dark_space_dim: int
    structure: complex

    @property
    def couplings(self):
        return self.g1, self.g2


@dataclass(frozen=True)
class PolaritonSpectrum:
    eigenvalues: np.ndarray  # ordered E1+, E1-, E2+, E2-
    omega_cavity: complex
    omega_atom: complex

    def as_dict(self):
        return dict(zip(LABELS, self.eigenvalues))

    @property
    def frequencies(self):
        return self.eigenvalues.real

    @property
    def linewidths(self):
        return -2.0 * self.eigenvalues.imag


def _require_atoms(chain: AtomChain):
    if chain.n_atoms == 0:
        raise ParameterError("collective modes need at least one atom")


def coupling_matrix(params: SystemParams, chain: AtomChain) -> np.ndarray:
    """2 x N matrix: row 0 = g exp(-ikx_i), row 1 = g exp(+ikx_i)."""
    _require_atoms(chain)
    phase = unit_phasor(chain.positions)
    return params.g * np.vstack([np.conj(phase), phase])


def complex_frequencies(params: SystemParams):
    """Bare cavity and atom complex frequencies in the cavity-referenced frame."""
    omega_c = -0.5j * params.kappa
    omega_a = -params.delta_ac - 0.5j * params.gamma
    return omega_c, omega_a


def decompose_modes(params: SystemParams, chain: AtomChain) -> ModeDecomposition:
    """SVD of the coupling matrix, built from its 2x2 Gram matrix.

    G G^dagger = g^2 [[N, S*], [S, N]] has eigenvalues g^2 (N +- |S|) with
    eigenvectors (S*/|S|, +-1)/sqrt2; right singular vectors follow as
    G^dagger u / sigma.
    """
    _require_atoms(chain)
    n = chain.n_atoms
    s = structure_factor(chain).value
    mag = abs(s)
    if mag <= _S_ZERO * n:
        c1 = np.array([1.0, 0.0], dtype=complex)
        c2 = np.array([0.0, 1.0], dtype=complex)
        mag = 0.0
    else:
        ph = np.conj(s) / mag
        c1 = np.array([ph, 1.0]) / np.sqrt(2)
        c2 = np.array([ph, -1.0]) / np.sqrt(2)
    # |S| <= N analytically; clip rounding overshoot
    mag = min(mag, float(n))
    g1 = params.g * np.sqrt(n + mag)
    g2 = params.g * np.sqrt(structure_deficit(chain))

    gmat = coupling_matrix(params, chain)
    a1 = _right_vector(gmat, c1)
    a2 = _right_vector(gmat, c2)
    rank = int(a1 is not None) + int(a2 is not None)
    if a1 is None:
        # g = 0: every atomic mode is decoupled; keep the |S| = 0 form for A1
        a1 = unit_phasor(chain.positions) / np.sqrt(n)
    return ModeDecomposition(c1, c2, a1, a2, float(g1), float(g2), n - rank, s)


def _right_vector(gmat, u):
    v = gmat.conj().T @ u
    norm = np.linalg.norm(v)
    scale = np.abs(gmat).max() if gmat.size else 0.0
    if scale == 0 or norm <= 1e-10 * scale:
        return None
    return v / norm


def _eigen_pair(omega_c, omega_a, coupling):
    root = np.sqrt((omega_a - omega_c) ** 2 + 4 * coupling**2 + 0j)
    return (omega_a + omega_c + root) / 2, (omega_a + omega_c - root) / 2


def polariton_eigenvalues(params: SystemParams, chain: AtomChain) -> PolaritonSpectrum:
    _require_atoms(chain)
    n = chain.n_atoms
    mag = min(structure_factor(chain).magnitude, float(n))
    return _spectrum(params, params.g * np.sqrt(n + mag), params.g * np.sqrt(structure_deficit(chain)))


def spectrum_for_structure(params: SystemParams, n_atoms: int, s_magnitude: float) -> PolaritonSpectrum:
    if n_atoms < 1:
        raise ParameterError("collective modes need at least one atom")
    s_magnitude = min(max(s_magnitude, 0.0), float(n_atoms))
    g1 = params.g * np.sqrt(n_atoms + s_magnitude)
    g2 = params.g * np.sqrt(n_atoms - s_magnitude)
    return _spectrum(params, g1, g2)


def _spectrum(params: SystemParams, g1: float, g2: float) -> PolaritonSpectrum:
    omega_c, omega_a = complex_frequencies(params)
    e1p, e1m = _eigen_pair(omega_c, omega_a, g1)
    e2p, e2m = _eigen_pair(omega_c, omega_a, g2)
    return PolaritonSpectrum(np.array([e1p, e1m, e2p, e2m]), omega_c, omega_a)


def single_excitation_matrix(params: SystemParams, chain: AtomChain) -> np.ndarray:
    """Dense (N+2)x(N+2) effective Hamiltonian over {|+>, |->, |E_1>..|E_N>}."""
    gmat = coupling_matrix(params, chain)
    n = chain.n_atoms
    omega_c, omega_a = complex_frequencies(params)
    h = np.zeros((n + 2, n + 2), dtype=complex)
    h[0, 0] = h[1, 1] = omega_c
    h[np.arange(2, n + 2), np.arange(2, n + 2)] = omega_a
    h[:2, 2:] = gmat
    h[2:, :2] = gmat.conj().T
    return h


@dataclass(frozen=True)
class DispersiveEstimates:
    bright_shift: float
    bright_linewidth: float
    dark_shift: float
    dark_linewidth: float


def dispersive_estimates(params: SystemParams, n_atoms: int, s_magnitude: float) -> DispersiveEstimates:
    """Leading-order shifts and linewidths of the C1 (bright) and C2 (dark) modes.

    Each mode with collective coupling G_k^2 = g^2 (N +- |S|) is pulled by
    G_k^2 / Delta_ac and broadened by G_k^2 gamma / (Delta_ac^2 + gamma^2/4).
    """
    if params.delta_ac == 0:
        raise ParameterError("dispersive estimates need delta_ac != 0")
    g_bright = params.g**2 * (n_atoms + s_magnitude)
    g_dark = params.g**2 * (n_atoms - s_magnitude)
    lorentz = params.gamma / (params.delta_ac**2 + params.gamma**2 / 4)
    return DispersiveEstimates(
        bright_shift=g_bright / params.delta_ac,
        bright_linewidth=params.kappa + g_bright * lorentz,
        dark_shift=g_dark / params.delta_ac,
        dark_linewidth=params.kappa + g_dark * lorentz,
    )


def field_at_position(coeffs, x):
    """Standing-wave profile c+ exp(ikx) + c- exp(-ikx) at x (units of lambda)."""
    c_plus, c_minus = coeffs
    phase = unit_phasor(x)
    return c_plus * phase + c_minus * np.conj(phase)


def node_position(coeffs) -> float:
    """Position in [0, 1/2) minimising |field|; a true node iff |c+| == |c-|."""
    c_plus, c_minus = coeffs
    turns = (np.pi - np.angle(c_plus) + np.angle(c_minus)) / (4 * np.pi)
    return float(np.mod(turns, 0.5))
