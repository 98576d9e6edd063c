"""Closed-form intracavity fields in the weak-excitation limit.

The atoms are adiabatically eliminated with <sigma_z a> ~ -<a>, which leaves
two traveling modes coupled only through N and the structure factor S.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import AtomChain, ParameterError, SystemParams, structure_factor

_TINY = 1e-300


class DegenerateDenominatorError(ArithmeticError):
    """The steady-state denominator vanished (zero dissipation at resonance)."""


@dataclass(frozen=True)
class IntracavityFields:
    a_plus: complex
    a_minus: complex
    c1: Optional[complex] = None
    c2: Optional[complex] = None


def traveling_amplitudes(n_atoms, s, *, g, kappa_in, kappa, gamma, epsilon, delta, delta_ac):
    """Vectorised steady-state <a+>, <a->; every argument may be an array.

    The denominator is kept in factored form (X - g^2|S|)(X + g^2|S|) with
    X = Delta~ delta~ - g^2 N, the C1 and C2 resonance factors.
    """
    det_atom = np.asarray(delta) + np.asarray(delta_ac) + 0.5j * np.asarray(gamma)
    det_cav = np.asarray(delta) + 0.5j * np.asarray(kappa)
    g2 = np.asarray(g) ** 2
    s = np.asarray(s, dtype=complex)
    x = det_atom * det_cav - g2 * np.asarray(n_atoms)
    d1 = x - g2 * np.abs(s)
    d2 = x + g2 * np.abs(s)
    if np.any(np.abs(d1) < _TINY) or np.any(np.abs(d2) < _TINY):
        raise DegenerateDenominatorError("steady-state denominator vanishes; add dissipation")
    drive = np.sqrt(kappa_in) * np.asarray(epsilon)
    den = d1 * d2
    a_plus = det_atom * x * drive / den
    a_minus = det_atom * g2 * s * drive / den
    return a_plus, a_minus


def decoupled_amplitudes(n_atoms, s, *, g, kappa_in, gamma, kappa, epsilon, delta, delta_ac):
    """Steady <c1>, <c2> of the decoupled standing-wave modes (needs |S| > 0)."""
    s = complex(s)
    if abs(s) == 0:
        raise ParameterError("c1/c2 basis is undefined for S = 0")
    det_atom = delta + delta_ac + 0.5j * gamma
    det_cav = delta + 0.5j * kappa
    shift = g**2 / det_atom
    drive = (s / abs(s)) * np.sqrt(kappa_in) * epsilon / np.sqrt(2)
    c1 = drive / (det_cav - shift * (n_atoms + abs(s)))
    c2 = drive / (det_cav - shift * (n_atoms - abs(s)))
    return c1, c2


def standing_to_traveling(c1, c2, s):
    """Invert c1 = (S/|S| a+ + a-)/sqrt2, c2 = (S/|S| a+ - a-)/sqrt2."""
    phase = s / abs(s)
    a_plus = np.conj(phase) * (c1 + c2) / np.sqrt(2)
    a_minus = (c1 - c2) / np.sqrt(2)
    return a_plus, a_minus


def _kwargs(params: SystemParams) -> dict:
    return dict(
        g=params.g,
        kappa_in=params.kappa_in,
        kappa=params.kappa,
        gamma=params.gamma,
        epsilon=params.epsilon,
        delta=params.delta,
        delta_ac=params.delta_ac,
    )


def fields_for_structure(params: SystemParams, n_atoms: int, s: complex) -> IntracavityFields:
    """Steady fields for any chain with N atoms and structure factor S."""
    a_plus, a_minus = traveling_amplitudes(n_atoms, s, **_kwargs(params))
    if abs(s) == 0:
        return IntracavityFields(complex(a_plus), complex(a_minus))
    phase = s / abs(s)
    c1 = complex((phase * a_plus + a_minus) / np.sqrt(2))
    c2 = complex((phase * a_plus - a_minus) / np.sqrt(2))
    return IntracavityFields(complex(a_plus), complex(a_minus), c1, c2)


def steady_state_fields(params: SystemParams, chain: AtomChain) -> IntracavityFields:
    return fields_for_structure(params, chain.n_atoms, structure_factor(chain).value)


def linearized_rhs(params: SystemParams, n_atoms: int, s: complex, a_plus, a_minus):
    """Time derivatives of <a+>, <a-> in the weak-excitation equations."""
    det_atom = params.delta_atom + 0.5j * params.gamma
    det_cav = params.delta + 0.5j * params.kappa
    self_term = det_cav - n_atoms * params.g**2 / det_atom
    cross = params.g**2 / det_atom
    d_plus = (
        1j * self_term * a_plus
        - 1j * cross * np.conj(s) * a_minus
        - 1j * np.sqrt(params.kappa_in) * params.epsilon
    )
    d_minus = 1j * self_term * a_minus - 1j * cross * s * a_plus
    return d_plus, d_minus


def photon_numbers(a_plus, a_minus, kappa, epsilon):
    """n = kappa |a|^2 / (4 eps^2): units of the resonant empty-cavity photon number."""
    scale = kappa / (4.0 * np.asarray(epsilon) ** 2)
    n_plus = scale * np.abs(a_plus) ** 2
    n_minus = scale * np.abs(a_minus) ** 2
    return n_plus, n_minus, n_plus + n_minus


def normalized_photon_numbers(fields: IntracavityFields, params: SystemParams):
    if params.epsilon <= 0:
        raise ParameterError("normalized photon numbers need epsilon > 0")
    n_plus, n_minus, n_tot = photon_numbers(fields.a_plus, fields.a_minus, params.kappa, params.epsilon)
    return float(n_plus), float(n_minus), float(n_tot)
