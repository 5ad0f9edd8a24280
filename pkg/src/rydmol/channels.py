"""Channel structure of the rotating-core Rydberg molecule.

Channels are the core rotational states ``|N>`` compatible with fixed total
angular momentum ``J``, electron angular momentum ``L`` and Kronig parity.
The collision is diagonal in the molecular-frame projection ``Lambda``; the
frame transformation ``U`` carries the defects ``mu_Lambda`` to the
laboratory reaction matrix ``K = U diag(tan pi mu) U^T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .angular import wigner_3j

DEFAULT_MU0 = 0.4


class OpenChannelError(ValueError):
    """Raised when an energy lies at or above a channel threshold."""


@dataclass(frozen=True)
class ChannelSet:
    J: int
    L: int
    parity: str
    B_r: float
    mu0: float = DEFAULT_MU0
    k: float = 0.0
    N_list: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.J < self.L or self.L < 0:
            raise ValueError(f"need J >= L >= 0, got J={self.J}, L={self.L}")
        if self.B_r <= 0:
            raise ValueError("B_r must be positive")
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.parity not in ("+", "-"):
            raise ValueError("parity must be '+' or '-'")
        if not self.N_list:
            sign = 0 if self.parity == "+" else 1
            Ns = tuple(N for N in range(self.J - self.L, self.J + self.L + 1) if (self.J + self.L + N) % 2 == sign)
            object.__setattr__(self, "N_list", Ns)

    @property
    def n_channels(self) -> int:
        return len(self.N_list)

    @property
    def N(self) -> np.ndarray:
        return np.asarray(self.N_list, dtype=float)

    @property
    def projections(self) -> np.ndarray:
        """Molecular-frame projections ``Lambda >= 0`` for this parity block."""
        start = 0 if self.parity == "+" else 1
        return np.arange(start, self.L + 1)

    @cached_property
    def thresholds(self) -> np.ndarray:
        return self.B_r * self.N * (self.N + 1.0)

    def index(self, N: int) -> int:
        try:
            return self.N_list.index(N)
        except ValueError:
            raise ValueError(f"N={N} is not a channel of this set {self.N_list}") from None

    def with_coupling(self, k: float) -> "ChannelSet":
        return ChannelSet(self.J, self.L, self.parity, self.B_r, self.mu0, k)


def build_channel_set(J: int, L: int, parity: str, B_r: float, mu0: float = DEFAULT_MU0, k: float = 0.0) -> ChannelSet:
    return ChannelSet(J=J, L=L, parity=parity, B_r=B_r, mu0=mu0, k=k)


def rotational_energy(cs: ChannelSet, N) -> np.ndarray | float:
    N = np.asarray(N, dtype=float)
    return cs.B_r * N * (N + 1.0)


def effective_quantum_number(cs: ChannelSet, E, N):
    """``nu_N = (2 (E+_N - E))^(-1/2)``; raises for open channels."""
    depth = rotational_energy(cs, N) - np.asarray(E, dtype=float)
    if np.any(depth <= 0):
        raise OpenChannelError("energy at or above a channel threshold")
    return 1.0 / np.sqrt(2.0 * depth)


def channel_nus(cs: ChannelSet, E) -> np.ndarray:
    """Effective quantum numbers of every channel, shape ``E.shape + (n_channels,)``."""
    E = np.asarray(E, dtype=float)
    depth = cs.thresholds - E[..., None]
    if np.any(depth <= 0):
        raise OpenChannelError("energy at or above a channel threshold")
    return 1.0 / np.sqrt(2.0 * depth)


def energy_from_nu(cs: ChannelSet, nu, N: int):
    """Total energy at which channel ``N`` has effective quantum number ``nu``."""
    return rotational_energy(cs, N) - 0.5 / np.asarray(nu, dtype=float) ** 2


def defect(cs: ChannelSet, lam) -> np.ndarray | float:
    """``mu_Lambda = mu0 - k Lambda^2 / (4 pi L)``."""
    lam = np.asarray(lam, dtype=float)
    if cs.L == 0:
        return np.full_like(lam, cs.mu0)
    return cs.mu0 - cs.k * lam**2 / (4.0 * np.pi * cs.L)


def frame_transformation(cs: ChannelSet) -> np.ndarray:
    """Orthogonal ``U[N, Lambda]`` from molecular to laboratory channels.

    Columns are the parity-adapted combinations of ``+-Lambda``:
    ``U = c_Lambda sqrt(2N+1) (J L N; Lambda -Lambda 0)`` with ``c_0 = 1`` and
    ``c_Lambda = sqrt(2)`` otherwise.
    """
    lams = cs.projections
    U = np.empty((cs.n_channels, lams.size))
    for i, N in enumerate(cs.N_list):
        for j, lam in enumerate(lams):
            c = 1.0 if lam == 0 else np.sqrt(2.0)
            U[i, j] = c * np.sqrt(2 * N + 1.0) * wigner_3j(cs.J, cs.L, N, lam, -lam, 0)
    return U


@dataclass(frozen=True)
class ReactionMatrix:
    K: np.ndarray
    U: np.ndarray
    mu: np.ndarray

    @property
    def tan_mu(self) -> np.ndarray:
        return np.tan(np.pi * self.mu)


def reaction_matrix(cs: ChannelSet, U: np.ndarray | None = None) -> ReactionMatrix:
    if U is None:
        U = frame_transformation(cs)
    mu = np.asarray(defect(cs, cs.projections), dtype=float)
    frac = mu - np.floor(mu)
    if np.any(np.abs(frac - 0.5) < 1e-6):
        raise ValueError("a quantum defect sits on a half-integer; tan(pi mu) diverges")
    if np.ptp(mu) == 0:
        # degenerate defects: K is exactly scalar, keep channels decoupled
        K = np.tan(np.pi * mu[0]) * np.eye(cs.n_channels)
    else:
        K = (U * np.tan(np.pi * mu)) @ U.T
        K = 0.5 * (K + K.T)
    return ReactionMatrix(K=K, U=U, mu=mu)
