"""Full Lindblad steady state in a truncated Fock space (small N only).

Hilbert space ordering is atom_1 x ... x atom_N x mode(+) x mode(-); each
atom is {|g>, |e>} and each mode keeps photon numbers 0..cutoff.  Density
matrices are vectorised row-major, so vec(A rho B) = (A kron B^T) vec(rho).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import AtomChain, ParameterError, SystemParams, unit_phasor

DEFAULT_CAP = 4096  # max Liouvillian side, i.e. Hilbert dimension <= 64
MAX_ATOMS = 3


class CapExceeded(ParameterError):
    pass


class DegenerateSteadyState(RuntimeError):
    pass


class TruncationNotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TruncatedHilbert:
    n_atoms: int
    fock_cutoff: int
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if not 0 <= self.n_atoms <= MAX_ATOMS:
            raise ParameterError(f"the oracle handles at most {MAX_ATOMS} atoms")
        if self.fock_cutoff < 1:
            raise ParameterError("fock_cutoff must be >= 1")
        if self.liouville_dim > self.cap:
            raise CapExceeded(
                f"Liouvillian side {self.liouville_dim} exceeds cap {self.cap} "
                f"(N={self.n_atoms}, cutoff={self.fock_cutoff})"
            )

    @property
    def dimension(self) -> int:
        return 2**self.n_atoms * (self.fock_cutoff + 1) ** 2

    @property
    def liouville_dim(self) -> int:
        return self.dimension**2

    def _embed(self, op, slot):
        factors = [sp.identity(2, format="csr")] * self.n_atoms + [
            sp.identity(self.fock_cutoff + 1, format="csr")
        ] * 2
        factors[slot] = sp.csr_matrix(op)
        out = factors[0]
        for f in factors[1:]:
            out = sp.kron(out, f, format="csr")
        return out

    @cached_property
    def identity(self):
        return sp.identity(self.dimension, dtype=complex, format="csr")

    @cached_property
    def a_plus(self):
        return self._embed(_annihilator(self.fock_cutoff), self.n_atoms)

    @cached_property
    def a_minus(self):
        return self._embed(_annihilator(self.fock_cutoff), self.n_atoms + 1)

    @cached_property
    def sigma_minus(self):
        lowering = np.array([[0.0, 1.0], [0.0, 0.0]])  # |g><e| with |g> first
        return [self._embed(lowering, i) for i in range(self.n_atoms)]

    @cached_property
    def sigma_z(self):
        return [self._embed(np.diag([-1.0, 1.0]), i) for i in range(self.n_atoms)]

    def vacuum(self) -> np.ndarray:
        rho = np.zeros((self.dimension, self.dimension), dtype=complex)
        rho[0, 0] = 1.0
        return rho


def _annihilator(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), k=1)


def hamiltonian(params: SystemParams, chain: AtomChain, hilbert: TruncatedHilbert):
    if chain.n_atoms != hilbert.n_atoms:
        raise ParameterError("chain and Hilbert space disagree on N")
    ap, am = hilbert.a_plus, hilbert.a_minus
    h = -params.delta * (ap.conj().T @ ap + am.conj().T @ am)
    phase = unit_phasor(chain.positions)
    for i, sm in enumerate(hilbert.sigma_minus):
        spl = sm.conj().T
        h = h - params.delta_atom * (spl @ sm)
        coupling = params.g * np.conj(phase[i]) * (spl @ am) + params.g * phase[i] * (spl @ ap)
        h = h + coupling + coupling.conj().T
    drive = np.sqrt(params.kappa_in) * params.epsilon
    h = h + drive * (ap + ap.conj().T)
    return sp.csr_matrix(h)


def _dissipator(c, identity):
    cdc = c.conj().T @ c
    return sp.kron(c, c.conj()) - 0.5 * sp.kron(cdc, identity) - 0.5 * sp.kron(identity, cdc.T)


def build_liouvillian(params: SystemParams, chain: AtomChain, hilbert: TruncatedHilbert):
    """Sparse superoperator of drho/dt; call ``.toarray()`` for the dense form."""
    h = hamiltonian(params, chain, hilbert)
    eye = hilbert.identity
    liou = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
    for ap in (hilbert.a_plus, hilbert.a_minus):
        liou = liou + params.kappa * _dissipator(ap, eye)
    for sm in hilbert.sigma_minus:
        liou = liou + params.gamma * _dissipator(sm, eye)
    return sp.csr_matrix(liou)


def steady_state_dm(liouvillian, hermitian_tol: float = 1e-8) -> np.ndarray:
    """Null vector of the Liouvillian with unit trace.

    One (redundant, by trace preservation) row is replaced by the trace
    functional and the system solved by sparse LU.
    """
    side = liouvillian.shape[0]
    dim = int(round(np.sqrt(side)))
    trace_row = np.zeros(side, dtype=complex)
    trace_row[:: dim + 1] = 1.0
    m = sp.lil_matrix(liouvillian, dtype=complex)
    m[0, :] = trace_row
    rhs = np.zeros(side, dtype=complex)
    rhs[0] = 1.0
    try:
        lu = spla.splu(sp.csc_matrix(m))
    except RuntimeError as exc:
        raise DegenerateSteadyState(f"steady state is not unique: {exc}") from exc
    vec = lu.solve(rhs)
    if not np.all(np.isfinite(vec)):
        raise DegenerateSteadyState("steady state is not unique (singular system)")
    rho = vec.reshape(dim, dim)
    asym = np.abs(rho - rho.conj().T).max()
    if asym > hermitian_tol:
        raise DegenerateSteadyState(f"solution is not Hermitian (deviation {asym:.2g})")
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def _expect(op, rho) -> complex:
    # tr(rho O) = sum_ij rho_ij O_ji
    return complex(op.multiply(rho.T).sum())


@dataclass(frozen=True, eq=False)
class OracleExpectations:
    a_plus: complex
    a_minus: complex
    n_plus: float
    n_minus: float
    sigma_minus: np.ndarray
    sigma_z: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate(
            [[self.a_plus, self.a_minus, self.n_plus, self.n_minus], self.sigma_minus, self.sigma_z]
        ).astype(complex)


def expectations(rho: np.ndarray, hilbert: TruncatedHilbert) -> OracleExpectations:
    ap, am = hilbert.a_plus, hilbert.a_minus
    return OracleExpectations(
        a_plus=_expect(ap, rho),
        a_minus=_expect(am, rho),
        n_plus=_expect(ap.conj().T @ ap, rho).real,
        n_minus=_expect(am.conj().T @ am, rho).real,
        sigma_minus=np.array([_expect(sm, rho) for sm in hilbert.sigma_minus], dtype=complex),
        sigma_z=np.array([_expect(sz, rho).real for sz in hilbert.sigma_z]),
    )


def steady_expectations(params: SystemParams, chain: AtomChain, cutoff: int, cap: int = DEFAULT_CAP):
    hilbert = TruncatedHilbert(chain.n_atoms, cutoff, cap)
    rho = steady_state_dm(build_liouvillian(params, chain, hilbert))
    return expectations(rho, hilbert), rho


@dataclass(frozen=True, eq=False)
class OracleResult:
    expectations: OracleExpectations
    cutoff: int
    change: float  # largest relative change on raising the cutoff by one
    rho: np.ndarray


def solve_converged(
    params: SystemParams,
    chain: AtomChain,
    cutoff: int = 1,
    rtol: float = 1e-6,
    atol: float = 1e-14,
    cap: int = DEFAULT_CAP,
) -> OracleResult:
    """Raise the Fock cutoff until one more level changes nothing beyond ``rtol``.

    Reports the result at the higher of the two agreeing cutoffs.
    """
    prev, _ = steady_expectations(params, chain, cutoff, cap)
    c = cutoff
    while True:
        try:
            cur, rho = steady_expectations(params, chain, c + 1, cap)
        except CapExceeded as exc:
            raise TruncationNotConverged(
                f"truncation not converged below the dimension cap (last cutoff {c}): {exc}"
            ) from exc
        old, new = prev.as_vector(), cur.as_vector()
        diff = np.abs(new - old)
        scale = np.abs(new)
        if np.all(diff <= rtol * scale + atol):
            rel = float(np.max(diff / np.maximum(scale, atol)))
            return OracleResult(cur, c + 1, rel, rho)
        prev, c = cur, c + 1
