"""Thermal position disorder: Monte Carlo structure factor and router degradation.

Every sample draws from its own substream, seeded by ``(seed, sample_index)``,
so a sample is reproducible regardless of how the samples are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants

from .model import AtomChain, ParameterError, SystemParams, unit_phasor
from .routing import max_photon_loss_numeric, output_photon_numbers

RB87_MASS = 86.909180527 * constants.atomic_mass
RB_WAVELENGTH_NM = 780.0


@dataclass(frozen=True)
class DisorderSpec:
    sigma: float  # position standard deviation, units of lambda
    samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ParameterError("sigma must be finite and >= 0")
        if self.samples < 1:
            raise ParameterError("samples must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")

    @classmethod
    def from_nm(cls, sigma_nm: float, wavelength_nm: float = RB_WAVELENGTH_NM, **kw) -> "DisorderSpec":
        return cls(sigma=sigma_nm / wavelength_nm, **kw)


def thermal_sigma(temperature: float, trap_frequency: float, mass: float = RB87_MASS) -> float:
    """Position spread [m] of a thermal harmonic oscillator.

    sigma^2 = hbar/(2 m w) * coth(hbar w / (2 k_B T)); ``trap_frequency`` is
    angular (rad/s).  Rb-87 at 2.5 uK in a 2pi x 160 kHz trap gives ~20 nm.
    """
    x = constants.hbar * trap_frequency / (2 * constants.k * temperature)
    return float(np.sqrt(constants.hbar / (2 * mass * trap_frequency) / np.tanh(x)))


def ground_state_population(temperature: float, trap_frequency: float) -> float:
    return float(1.0 - np.exp(-constants.hbar * trap_frequency / (constants.k * temperature)))


def expected_structure_ratio(sigma: float) -> float:
    """Large-N limit of |S|/N for Gaussian disorder: exp(-2 k^2 sigma^2)."""
    k = 2 * np.pi
    return float(np.exp(-2 * k**2 * sigma**2))


def _deviates(spec: DisorderSpec, sample_index: int, n_atoms: int) -> np.ndarray:
    if spec.sigma == 0:
        return np.zeros(n_atoms)
    rng = np.random.default_rng([spec.seed, sample_index])
    return spec.sigma * rng.standard_normal(n_atoms)


def sample_chain(chain: AtomChain, spec: DisorderSpec, sample_index: int) -> AtomChain:
    return AtomChain(chain.positions + _deviates(spec, sample_index, chain.n_atoms))


def sampled_structure_factors(chain: AtomChain, spec: DisorderSpec) -> np.ndarray:
    """Complex S for every sample, in sample order."""
    out = np.empty(spec.samples, dtype=complex)
    for i in range(spec.samples):
        positions = chain.positions + _deviates(spec, i, chain.n_atoms)
        out[i] = np.sum(unit_phasor(2.0 * positions))
    return out


def mean_structure_factor(n_atoms: int, spec: DisorderSpec):
    """Monte Carlo mean of |S|/N for traps on the lambda/2 grid, with its standard error."""
    if n_atoms < 1:
        raise ParameterError("n_atoms must be >= 1")
    ratios = np.abs(sampled_structure_factors(AtomChain.uniform(n_atoms), spec)) / n_atoms
    mean = float(np.mean(ratios))
    stderr = float(np.std(ratios, ddof=1) / np.sqrt(ratios.size)) if ratios.size > 1 else 0.0
    return mean, stderr


@dataclass(frozen=True)
class DegradedRouter:
    mean_s_ratio: float
    tuning_range_mean_s: float  # n-_out evaluated at the averaged |S|
    tuning_range_monte_carlo: float  # n-_out averaged over sampled chains
    n_loss_clean: float
    n_loss_degraded: float


def degraded_tuning_range(
    params: SystemParams, n_atoms: int, spec: DisorderSpec, reference_atoms: int = 100
) -> DegradedRouter:
    """Router figures when the ideal |S| = N chain is blurred by position noise.

    The averaged |S|/N is taken from a ``reference_atoms`` chain (large-N
    value); the Monte Carlo variant averages n-_out over sampled N-atom
    chains instead.  Expects the router operating point delta = 0.
    """
    mean_ratio, _ = mean_structure_factor(reference_atoms, spec)
    w_mean = float(output_photon_numbers(params, n_atoms, mean_ratio * n_atoms)[1])
    s_samples = sampled_structure_factors(AtomChain.uniform(n_atoms), spec)
    w_mc = float(np.mean(output_photon_numbers(params, n_atoms, s_samples)[1]))
    loss_clean = max_photon_loss_numeric(params, n_atoms)[0]
    loss_degraded = max_photon_loss_numeric(params, n_atoms, s_max=mean_ratio * n_atoms)[0]
    return DegradedRouter(mean_ratio, w_mean, w_mc, loss_clean, loss_degraded)
