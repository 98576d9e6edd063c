"""Nonlinear mean-field (Maxwell-Bloch) dynamics of the driven ring cavity.

Operator products are closed at first order, <sigma_z a> -> <sigma_z><a>
and <sigma+ a> -> <sigma+><a>, so each atom is a damped Bloch vector driven
by the classical intracavity field.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import root

from .model import AtomChain, ParameterError, SystemParams, unit_phasor

log = logging.getLogger(__name__)

BLOCH_TOL = 1e-9


class IntegrationError(RuntimeError):
    def __init__(self, message, t_fail=None):
        super().__init__(message)
        self.t_fail = t_fail


class BlochViolation(IntegrationError):
    pass


class SteadyStateNotConverged(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True, eq=False)
class MeanFieldState:
    a_plus: complex
    a_minus: complex
    sigma_minus: np.ndarray
    sigma_z: np.ndarray

    @property
    def n_atoms(self) -> int:
        return len(self.sigma_z)

    @classmethod
    def vacuum(cls, n_atoms: int) -> "MeanFieldState":
        return cls(0j, 0j, np.zeros(n_atoms, dtype=complex), -np.ones(n_atoms))

    def to_vector(self) -> np.ndarray:
        """Real packing [Re a+, Im a+, Re a-, Im a-, Re s-, Im s-, s_z]."""
        return np.concatenate(
            [
                [self.a_plus.real, self.a_plus.imag, self.a_minus.real, self.a_minus.imag],
                np.real(self.sigma_minus),
                np.imag(self.sigma_minus),
                np.asarray(self.sigma_z, dtype=float),
            ]
        )

    @classmethod
    def from_vector(cls, y) -> "MeanFieldState":
        n = (len(y) - 4) // 3
        return cls(
            complex(y[0], y[1]),
            complex(y[2], y[3]),
            y[4 : 4 + n] + 1j * y[4 + n : 4 + 2 * n],
            np.array(y[4 + 2 * n :], dtype=float),
        )

    def bloch_excess(self) -> float:
        """Largest violation of |s_z| <= 1."""
        if self.n_atoms == 0:
            return 0.0
        return float(np.abs(self.sigma_z).max() - 1.0)

    def ball_excess(self) -> float:
        """Largest violation of |s-|^2 <= (1 - s_z^2)/4 (inside the Bloch ball)."""
        if self.n_atoms == 0:
            return 0.0
        z = np.asarray(self.sigma_z)
        return float((np.abs(self.sigma_minus) ** 2 - (1.0 - z**2) / 4.0).max())

    def excitation(self) -> float:
        return float(np.sum((1 + self.sigma_z) / 2) + abs(self.a_plus) ** 2 + abs(self.a_minus) ** 2)


def _couplings(params: SystemParams, chain: AtomChain):
    phase = unit_phasor(chain.positions)
    return params.g * phase, params.g * np.conj(phase)  # g_{i,+}, g_{i,-}


def _make_rhs(params: SystemParams, chain: AtomChain):
    n = chain.n_atoms
    g_plus, g_minus = _couplings(params, chain)
    cav = 1j * params.delta - params.kappa / 2
    atom = 1j * params.delta_atom - params.gamma / 2
    drive = -1j * np.sqrt(params.kappa_in) * params.epsilon
    gamma = params.gamma

    def rhs(t, y):
        a_p = y[0] + 1j * y[1]
        a_m = y[2] + 1j * y[3]
        sm = y[4 : 4 + n] + 1j * y[4 + n : 4 + 2 * n]
        sz = y[4 + 2 * n :]
        field = g_plus * a_p + g_minus * a_m  # sum_nu g_{i,nu} a_nu per atom
        da_p = cav * a_p - 1j * np.sum(np.conj(g_plus) * sm) + drive
        da_m = cav * a_m - 1j * np.sum(np.conj(g_minus) * sm)
        dsm = atom * sm + 1j * field * sz
        dsz = -gamma * (1 + sz) + 4.0 * np.imag(np.conj(sm) * field)
        out = np.empty_like(y)
        out[0], out[1], out[2], out[3] = da_p.real, da_p.imag, da_m.real, da_m.imag
        out[4 : 4 + n] = dsm.real
        out[4 + n : 4 + 2 * n] = dsm.imag
        out[4 + 2 * n :] = dsz
        return out

    return rhs


def rhs(state: MeanFieldState, params: SystemParams, chain: AtomChain) -> MeanFieldState:
    """Time derivative of the mean-field state, returned in the same container."""
    if state.n_atoms != chain.n_atoms:
        raise ParameterError("state and chain disagree on the number of atoms")
    return MeanFieldState.from_vector(_make_rhs(params, chain)(0.0, state.to_vector()))


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray
    sigma_minus: np.ndarray  # shape (len(t), N)
    sigma_z: np.ndarray

    def state(self, index: int) -> MeanFieldState:
        return MeanFieldState(
            complex(self.a_plus[index]),
            complex(self.a_minus[index]),
            self.sigma_minus[index].copy(),
            self.sigma_z[index].copy(),
        )

    @property
    def final(self) -> MeanFieldState:
        return self.state(-1)

    def bloch_excess(self) -> float:
        if self.sigma_z.shape[1] == 0:
            return 0.0
        return float(np.abs(self.sigma_z).max() - 1.0)

    def ball_excess(self) -> float:
        # the ball is invariant under the exact flow; numerically it holds to ~tolerance
        if self.sigma_z.shape[1] == 0:
            return 0.0
        return float((np.abs(self.sigma_minus) ** 2 - (1.0 - self.sigma_z**2) / 4.0).max())


def _trajectory(t, ys, n) -> Trajectory:
    ys = np.asarray(ys)
    return Trajectory(
        t=np.asarray(t),
        a_plus=ys[:, 0] + 1j * ys[:, 1],
        a_minus=ys[:, 2] + 1j * ys[:, 3],
        sigma_minus=ys[:, 4 : 4 + n] + 1j * ys[:, 4 + n : 4 + 2 * n],
        sigma_z=ys[:, 4 + 2 * n :],
    )


def integrate(
    initial: MeanFieldState,
    params: SystemParams,
    chain: AtomChain,
    t_end: float,
    tolerance: float = 1e-9,
    n_samples: int = 201,
    check_bloch: bool = True,
) -> Trajectory:
    """Adaptive Dormand-Prince integration from ``initial`` to ``t_end``.

    ``tolerance`` is used as both relative and absolute local error target.
    """
    if t_end <= 0 or tolerance <= 0:
        raise ParameterError("t_end and tolerance must be positive")
    if initial.n_atoms != chain.n_atoms:
        raise ParameterError("state and chain disagree on the number of atoms")
    t_eval = np.linspace(0.0, t_end, max(int(n_samples), 2))
    sol = solve_ivp(
        _make_rhs(params, chain),
        (0.0, t_end),
        initial.to_vector(),
        method="RK45",
        t_eval=t_eval,
        rtol=tolerance,
        atol=tolerance,
    )
    if sol.status != 0:
        t_fail = float(sol.t[-1]) if sol.t.size else 0.0
        raise IntegrationError(f"integration failed at t={t_fail:g}: {sol.message}", t_fail)
    traj = _trajectory(sol.t, sol.y.T, chain.n_atoms)
    if check_bloch:
        excess = traj.bloch_excess()
        if excess > BLOCH_TOL:
            idx = int(np.argmax(np.abs(traj.sigma_z).max(axis=1))) if chain.n_atoms else 0
            raise BlochViolation(f"|sigma_z| <= 1 violated by {excess:.3g}", float(traj.t[idx]))
    return traj


def _residual_scale(params: SystemParams) -> float:
    return max(params.epsilon, params.gamma)


def find_steady_state(
    params: SystemParams,
    chain: AtomChain,
    tolerance: float = 1e-10,
    max_time: float | None = None,
    polish: bool = True,
):
    """Steady state reached from the vacuum; returns ``(state, residual)``.

    The flow is integrated in chunks until the derivative norm drops below
    ``tolerance * max(eps, gamma)``; a Newton step then polishes the root.
    """
    if params.kappa <= 0 and params.gamma <= 0:
        raise ParameterError("steady state needs dissipation")
    f = _make_rhs(params, chain)
    slowest = min(params.kappa, params.gamma)
    chunk = 20.0 / slowest
    if max_time is None:
        max_time = 400.0 / slowest
    target = tolerance * _residual_scale(params)
    # the vacuum is integrated close to the fixed point, then handed to Newton
    handoff = max(target, 1e-7 * _residual_scale(params))

    y = MeanFieldState.vacuum(chain.n_atoms).to_vector()
    t = 0.0
    residual = float(np.linalg.norm(f(0.0, y)))
    while residual > handoff and t < max_time:
        sol = solve_ivp(f, (t, t + chunk), y, method="RK45", rtol=1e-10, atol=1e-13)
        if sol.status != 0:
            raise IntegrationError(f"integration failed at t={sol.t[-1]:g}: {sol.message}", float(sol.t[-1]))
        y = sol.y[:, -1]
        t += chunk
        residual = float(np.linalg.norm(f(0.0, y)))
        log.debug("t=%g residual=%g", t, residual)

    if polish and residual > 0:
        res = root(lambda v: f(0.0, v), y, method="hybr", options={"xtol": 1e-14})
        new_residual = float(np.linalg.norm(f(0.0, res.x)))
        if new_residual < residual and np.linalg.norm(res.x - y) < 1e-3 * (1 + np.linalg.norm(y)):
            y, residual = res.x, new_residual

    if residual > target:
        raise SteadyStateNotConverged(
            f"no steady state after t={t:g}; last residual {residual:.3g}", residual
        )
    state = MeanFieldState.from_vector(y)
    if state.bloch_excess() > BLOCH_TOL:
        raise BlochViolation(f"steady state violates Bloch bound by {state.bloch_excess():.3g}")
    return state, residual
