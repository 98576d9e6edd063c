"""Parameters, atom chains and the structure factor.

Rates and detunings are in units of the atomic decay rate gamma, positions
in units of the cavity wavelength lambda, so that k*x = 2*pi*x.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.special import cosdg, sindg


class ParameterError(ValueError):
    """Raised for physically invalid or out-of-range inputs."""


@dataclass(frozen=True)
class SystemParams:
    g: float = 0.5
    kappa_in: float = 0.1
    kappa_other: float = 0.0
    gamma: float = 1.0
    epsilon: float = 1e-3
    delta: float = 0.0
    delta_ac: float = 10.0

    def __post_init__(self):
        for name in ("g", "kappa_in", "kappa_other", "gamma", "epsilon", "delta", "delta_ac"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
        if self.g < 0:
            raise ParameterError("g must be >= 0")
        if self.kappa_in < 0 or self.kappa_other < 0:
            raise ParameterError("cavity decay rates must be >= 0")
        if self.kappa_in + self.kappa_other <= 0:
            raise ParameterError("total cavity decay kappa_in + kappa_other must be > 0")
        if self.gamma <= 0:
            raise ParameterError("gamma must be > 0")
        if self.epsilon < 0:
            raise ParameterError("epsilon is taken real and >= 0")

    @property
    def kappa(self) -> float:
        return self.kappa_in + self.kappa_other

    @property
    def delta_atom(self) -> float:
        """Drive-atom detuning: delta + delta_ac."""
        return self.delta + self.delta_ac

    @property
    def cooperativity(self) -> float:
        return 4 * self.g**2 / (self.kappa * self.gamma)

    def collective_cooperativity(self, n_atoms: int) -> float:
        return n_atoms * self.cooperativity

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)


def params_for_cooperativity(
    nc: float,
    n_atoms: int,
    delta_over_gamma: float,
    kappa: float = 0.1,
    kappa_in_ratio: float = 1.0,
    **extra,
) -> SystemParams:
    """SystemParams at the router operating point (delta = 0) for a target NC.

    g is chosen so that 4*N*g**2/(kappa*gamma) == nc; gamma defaults to 1.
    """
    if nc < 0:
        raise ParameterError("nc must be >= 0")
    if n_atoms < 1:
        raise ParameterError("n_atoms must be >= 1")
    if not 0.0 <= kappa_in_ratio <= 1.0:
        raise ParameterError("kappa_in_ratio must lie in [0, 1]")
    gamma = extra.pop("gamma", 1.0)
    g = np.sqrt(nc * kappa * gamma / (4 * n_atoms))
    return SystemParams(
        g=float(g),
        kappa_in=kappa_in_ratio * kappa,
        kappa_other=(1.0 - kappa_in_ratio) * kappa,
        gamma=gamma,
        delta=0.0,
        delta_ac=delta_over_gamma * gamma,
        **extra,
    )


def unit_phasor(turns):
    """exp(2*pi*i*turns), exact at multiples of a quarter turn."""
    frac = np.mod(np.asarray(turns, dtype=float), 1.0)
    degrees = 360.0 * frac
    return cosdg(degrees) + 1j * sindg(degrees)


@dataclass(frozen=True, eq=False)
class AtomChain:
    """Ordered atom positions along the cavity axis, in units of lambda."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1)
        if not np.all(np.isfinite(pos)):
            raise ParameterError("atom positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n_atoms(self) -> int:
        return int(self.positions.size)

    def __len__(self) -> int:
        return self.n_atoms

    def __eq__(self, other):
        if not isinstance(other, AtomChain):
            return NotImplemented
        return np.array_equal(self.positions, other.positions)

    @classmethod
    def uniform(cls, n_atoms: int, spacing: float = 0.5, offset: float = 0.0) -> "AtomChain":
        return cls(offset + spacing * np.arange(n_atoms))


@dataclass(frozen=True)
class StructureFactor:
    value: complex

    @property
    def magnitude(self) -> float:
        return abs(self.value)

    @property
    def phase(self) -> float:
        return float(np.angle(self.value))


def structure_factor(chain: AtomChain) -> StructureFactor:
    """S = sum_i exp(2 i k x_i); zero for an empty chain."""
    if chain.n_atoms == 0:
        return StructureFactor(0j)
    return StructureFactor(complex(np.sum(unit_phasor(2.0 * chain.positions))))


def structure_deficit(chain: AtomChain) -> float:
    """N - |S| without the cancellation of subtracting two nearly equal numbers.

    Uses N^2 - |S|^2 = sum_ij 2 sin^2(2 pi (x_i - x_j)), so a lambda/2 chain
    with an inexact offset still gives a deficit at rounding level.
    """
    n = chain.n_atoms
    if n == 0:
        return 0.0
    mag = structure_factor(chain).magnitude
    if n > 2000:  # pairwise sum too large; accept the plain difference
        return max(n - mag, 0.0)
    diff = np.mod(np.subtract.outer(chain.positions, chain.positions), 0.5)
    num = 2.0 * float(np.sum(sindg(360.0 * diff) ** 2))
    return num / (n + mag)


def chain_with_structure(n_atoms: int, s_target: float) -> AtomChain:
    """Paired chain whose structure factor has magnitude ``s_target``.

    Pair j sits at j/2 and j/2 + d with d = arccos(s/N)/(2 pi), so the pair
    contributes 1 + exp(4 pi i d) whose modulus is 2 cos(2 pi d) = 2 s/N.
    """
    if n_atoms <= 0 or n_atoms % 2:
        raise ParameterError(f"n_atoms must be a positive even integer, got {n_atoms}")
    if not 0.0 <= s_target <= n_atoms:
        raise ParameterError(f"s_target must lie in [0, {n_atoms}], got {s_target}")
    d = np.arccos(s_target / n_atoms) / (2 * np.pi)
    j = np.arange(n_atoms // 2) / 2.0
    positions = np.empty(n_atoms)
    positions[0::2] = j
    positions[1::2] = j + d
    return AtomChain(positions)


def translate_chain(chain: AtomChain, displacement: float) -> AtomChain:
    return AtomChain(chain.positions + displacement)
