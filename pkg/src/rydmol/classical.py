"""Kicked-precession map for the direction of the electron angular momentum.

State: unit vector ``u`` along ``L`` in the co-rotating molecular frame, with
OZ on the internuclear axis and OX along the core angular momentum ``N``.
Between collisions ``L`` is fixed in space while the core turns about ``N``,
so ``u`` rotates about OX. A collision rotates ``u`` about OZ by
``-k u_z``; the core absorbs the change of ``L`` and the frame is then
turned about OZ to put the new ``N`` back on OX.

The map is area-preserving in the chart (angle of ``u`` about OX, ``N``);
the realigned frame itself is not canonical, so (phi, u_z) is not a
conserved-area chart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


class UnboundElectronError(ValueError):
    pass


def resonant_rotational_constant(nu_ref: float, N_ref: float, p: int = 2) -> float:
    """Rotational constant making ``T_e = (p/2) T_c`` at ``(nu_ref, N_ref)``."""
    if nu_ref <= 0 or N_ref <= 0 or p < 1:
        raise ValueError("need nu_ref > 0, N_ref > 0, p >= 1")
    return p / (2.0 * nu_ref**3 * (2.0 * N_ref + 1.0))


def kepler_period(nu):
    return TWO_PI * np.asarray(nu, dtype=float) ** 3


def core_period(B_r: float, N):
    return TWO_PI / (B_r * (2.0 * np.asarray(N, dtype=float) + 1.0))


@dataclass(frozen=True)
class ClassicalParams:
    J: float
    L: float
    k: float
    B_r: float
    E_total: float

    def __post_init__(self):
        if not self.J >= self.L > 0:
            raise ValueError("need J >= L > 0")
        if self.B_r <= 0:
            raise ValueError("B_r must be positive")
        N_min = self.J - self.L
        if self.E_total >= self.B_r * N_min * (N_min + 1.0):
            raise UnboundElectronError("E_total is not below the lowest threshold reachable by the map")

    @classmethod
    def from_reference(cls, J, L, k, B_r, nu_ref, N_ref=None) -> "ClassicalParams":
        """Energy such that channel ``N_ref`` (default ``J``) has ``nu = nu_ref``."""
        N_ref = J if N_ref is None else N_ref
        E = B_r * N_ref * (N_ref + 1.0) - 0.5 / nu_ref**2
        return cls(J=J, L=L, k=k, B_r=B_r, E_total=E)

    def epsilon(self, N):
        return self.E_total - self.B_r * N * (N + 1.0)

    def nu(self, N):
        eps = self.epsilon(N)
        if np.any(eps >= 0):
            raise UnboundElectronError("electron energy is not negative")
        return 1.0 / np.sqrt(-2.0 * eps)

    def precession_angle(self, N):
        """Core rotation angle during one Kepler period, ``B_r (2N+1) T_e``."""
        return self.B_r * (2.0 * N + 1.0) * kepler_period(self.nu(N))

    def period_ratio(self, N):
        """``T_e / T_c`` at core momentum ``N``."""
        return self.precession_angle(N) / TWO_PI


def core_momentum(params: ClassicalParams, u) -> np.ndarray:
    """Positive root of ``N^2 + 2 N L u_x + L^2 - J^2 = 0``."""
    lux = params.L * np.asarray(u, dtype=float)[..., 0]
    return -lux + np.sqrt(lux * lux + params.J**2 - params.L**2)


def _rotate_x(u, angle):
    c, s = np.cos(angle), np.sin(angle)
    out = np.empty_like(u)
    out[..., 0] = u[..., 0]
    out[..., 1] = c * u[..., 1] - s * u[..., 2]
    out[..., 2] = s * u[..., 1] + c * u[..., 2]
    return out


def _rotate_z(u, angle):
    c, s = np.cos(angle), np.sin(angle)
    out = np.empty_like(u)
    out[..., 0] = c * u[..., 0] - s * u[..., 1]
    out[..., 1] = s * u[..., 0] + c * u[..., 1]
    out[..., 2] = u[..., 2]
    return out


def _renormalise(u):
    return u / np.linalg.norm(u, axis=-1, keepdims=True)


def precess(params: ClassicalParams, u) -> np.ndarray:
    """Free flight: ``u`` turns by ``-B_r (2N+1) T_e`` about OX."""
    u = np.asarray(u, dtype=float)
    N = core_momentum(params, u)
    return _rotate_x(u, -params.precession_angle(N))


def kick(params: ClassicalParams, u, sign: float = -1.0) -> np.ndarray:
    """Collision with the core, followed by realignment of OX on the new ``N``.

    ``sign`` selects the deflection convention ``delta_phi = sign * k u_z``;
    the default follows ``mu_Lambda = mu0 - k Lambda^2 / (4 pi L)``.
    """
    u = np.asarray(u, dtype=float)
    N = core_momentum(params, u)
    kicked = _rotate_z(u, sign * params.k * u[..., 2])
    # J is conserved, so the core takes up the change of L: N' = N x - L (u' - u)
    nx = N - params.L * (kicked[..., 0] - u[..., 0])
    ny = -params.L * (kicked[..., 1] - u[..., 1])
    return _renormalise(_rotate_z(kicked, -np.arctan2(ny, nx)))


def step(params: ClassicalParams, u, sign: float = -1.0) -> np.ndarray:
    """One map iteration: precess, then kick (recorded as the electron leaves the core)."""
    return kick(params, precess(params, u), sign=sign)


def seeds_to_vectors(seeds) -> np.ndarray:
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    theta, phi = seeds[:, 0], seeds[:, 1]
    return np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)


def seed_grid(n_cos: int = 24, n_phi: int = 24) -> np.ndarray:
    """Seeds ``(theta, phi)`` on a grid uniform in ``(cos theta, phi)``."""
    cos_t = -1.0 + (np.arange(n_cos) + 0.5) * 2.0 / n_cos
    phi = -np.pi + (np.arange(n_phi) + 0.5) * TWO_PI / n_phi
    ct, ph = np.meshgrid(cos_t, phi, indexing="ij")
    return np.column_stack([np.arccos(ct.ravel()), ph.ravel()])


@dataclass
class SosPointSet:
    seed_id: np.ndarray
    kick: np.ndarray
    u: np.ndarray
    N: np.ndarray

    def __len__(self) -> int:
        return self.seed_id.size

    def trajectory(self, seed: int) -> np.ndarray:
        return self.u[self.seed_id == seed]


def iterate_sos(params: ClassicalParams, seeds, n_kicks: int, sign: float = -1.0) -> SosPointSet:
    """Record ``u`` after each of ``n_kicks`` map steps for every seed.

    Records are ordered by seed, then kick index (1-based).
    """
    if n_kicks < 1:
        raise ValueError("n_kicks must be >= 1")
    u = seeds_to_vectors(seeds)
    n_seeds = u.shape[0]
    out = np.empty((n_seeds, n_kicks, 3))
    for i in range(n_kicks):
        u = step(params, u, sign=sign)
        out[:, i] = u
    flat = out.reshape(-1, 3)
    return SosPointSet(
        seed_id=np.repeat(np.arange(n_seeds), n_kicks),
        kick=np.tile(np.arange(1, n_kicks + 1), n_seeds),
        u=flat,
        N=core_momentum(params, flat),
    )


def canonical_chart(params: ClassicalParams, u) -> np.ndarray:
    """``(psi, N)`` with ``psi`` the angle of ``u`` about OX; the map preserves ``dpsi dN``."""
    u = np.asarray(u, dtype=float)
    return np.stack([np.arctan2(u[..., 2], u[..., 1]), core_momentum(params, u)], axis=-1)


def from_canonical_chart(params: ClassicalParams, chart) -> np.ndarray:
    chart = np.asarray(chart, dtype=float)
    psi, N = chart[..., 0], chart[..., 1]
    ux = -(N * N + params.L**2 - params.J**2) / (2.0 * N * params.L)
    s = np.sqrt(np.clip(1.0 - ux * ux, 0.0, None))
    return np.stack([ux, s * np.cos(psi), s * np.sin(psi)], axis=-1)


def step_jacobian(params: ClassicalParams, chart_point, h: float = 1e-4) -> np.ndarray:
    """Five-point finite-difference Jacobian of one map step in the canonical chart."""
    x = np.asarray(chart_point, dtype=float)

    def image(y):
        return canonical_chart(params, step(params, from_canonical_chart(params, y)))

    def delta(a, b):
        d = a - b
        d[0] = (d[0] + np.pi) % TWO_PI - np.pi
        return d

    jac = np.empty((2, 2))
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        f1 = delta(image(x + e), image(x - e))
        f2 = delta(image(x + 2 * e), image(x - 2 * e))
        jac[:, i] = (8.0 * f1 - f2) / (12.0 * h)
    return jac
