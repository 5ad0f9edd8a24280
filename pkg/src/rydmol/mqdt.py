"""Bound states of the multichannel problem.

Quantization condition: ``det[diag(sin beta) + diag(cos beta) K] = 0`` with
``beta_N = pi (nu_N - L)``, which reduces to ``nu_N = n - mu0`` when the
channels decouple. Levels are bracketed on a fine grid in the label variable
(``nu`` of the ``N = J`` threshold) and polished with Brent's method.

The sign scan alone loses pairs of roots closer than one grid step, so every
grid interval is also given an exact level count from the winding of the
eigenphases of ``W(E) = D S D`` (``D = diag(exp(i beta))``,
``S = U diag(exp(2 i pi mu)) U^T``). Each eigenphase increases
monotonically with energy and a level sits wherever one of them crosses 0
(mod 2 pi), while their sum is known in closed form. Intervals holding more
than one level are split until the levels are separated.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .channels import ChannelSet, OpenChannelError, ReactionMatrix, channel_nus, energy_from_nu, reaction_matrix

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


class MissedRootWarning(RuntimeWarning):
    pass


def radial_overlap(nu, nu_prime):
    """Overlap of two unit-normalized decaying channel functions.

    ``sinc(nu - nu') * 2 sqrt(nu nu') / (nu + nu')``; the second factor
    converts the per-unit-energy normalization of the Wronskian result to
    unit norm and makes eigenstates exactly orthogonal. It differs from 1 by
    ``(nu - nu')^2 / (8 nu^2)``.
    """
    nu = np.asarray(nu, dtype=float)
    nu_prime = np.asarray(nu_prime, dtype=float)
    return np.sinc(nu - nu_prime) * (2.0 * np.sqrt(nu * nu_prime) / (nu + nu_prime))


def label_energy(cs: ChannelSet, label_nu):
    """Total energy for a label ``nu`` measured from the ``N = J`` threshold."""
    return energy_from_nu(cs, label_nu, cs.J)


def label_nu(cs: ChannelSet, E):
    return 1.0 / np.sqrt(2.0 * (cs.B_r * cs.J * (cs.J + 1.0) - np.asarray(E, dtype=float)))


def quantization_matrix(cs: ChannelSet, K: np.ndarray, E) -> np.ndarray:
    nus = channel_nus(cs, E)
    beta = np.pi * (nus - cs.L)
    s, c = np.sin(beta), np.cos(beta)
    M = c[..., :, None] * K
    idx = np.arange(cs.n_channels)
    M[..., idx, idx] += s
    return M


def boundary_determinant(cs: ChannelSet, K: np.ndarray, E):
    """``det M(E)``; bounded and smooth below the lowest threshold."""
    return np.linalg.det(quantization_matrix(cs, K, E))


def level_density(cs: ChannelSet, E):
    """Mean number of levels per unit energy, ``sum_N nu_N^3``."""
    return np.sum(channel_nus(cs, E) ** 3, axis=-1)


def _scattering_matrix(rm: ReactionMatrix) -> np.ndarray:
    if np.ptp(rm.mu) == 0:
        return np.exp(2j * np.pi * rm.mu[0]) * np.eye(rm.U.shape[0])
    return (rm.U * np.exp(2j * np.pi * rm.mu)) @ rm.U.T


def _phase_sum(cs: ChannelSet, E):
    # continuous sum of the eigenphases of W(E) minus its constant part
    return 2.0 * np.pi * np.sum(channel_nus(cs, E), axis=-1)


def _eigenphase_fraction(cs: ChannelSet, S: np.ndarray, E):
    nus = channel_nus(cs, E)
    d = np.exp(1j * np.pi * (nus - cs.L))
    W = d[..., :, None] * S * d[..., None, :]
    theta = np.angle(np.linalg.eigvals(W))
    return np.sum(np.mod(theta, TWO_PI), axis=-1)


def _counts(cs, S, E_grid):
    frac = _eigenphase_fraction(cs, S, E_grid)
    cont = _phase_sum(cs, E_grid)
    raw = (np.diff(cont) - np.diff(frac)) / TWO_PI
    counts = np.rint(raw).astype(int)
    if np.any(np.abs(raw - counts) > 1e-6):
        raise FloatingPointError("eigenphase winding count is not an integer")
    return counts


@dataclass
class Eigenstate:
    E: float
    nu: np.ndarray
    beta: np.ndarray
    B: np.ndarray
    amplitudes: np.ndarray
    p: np.ndarray
    S2: float
    label_nu: float
    residual: float

    def population(self, cs: ChannelSet, N: int) -> float:
        return float(self.p[cs.index(N)])


@dataclass
class EntropyStatistics:
    count: int
    mean_S2: float
    rms_S2: float
    window: tuple[float, float]


def coefficients_from_null_vector(cs: ChannelSet, K: np.ndarray, E: float, A: np.ndarray):
    """Channel coefficients ``B_N`` and normalized signed amplitudes ``b_N``.

    ``B_N = A_N / cos beta_N = -(K A)_N / sin beta_N``; the better-conditioned
    of the two equal forms is used channel by channel.
    """
    nus = channel_nus(cs, E)
    beta = np.pi * (nus - cs.L)
    s, c = np.sin(beta), np.cos(beta)
    KA = K @ A
    B = np.where(np.abs(c) >= np.abs(s), A / np.where(c == 0, 1, c), -KA / np.where(s == 0, 1, s))
    w = B * nus**1.5
    w = w / np.linalg.norm(w)
    lead = np.argmax(np.abs(w))
    if w[lead] < 0:
        w, B = -w, -B
    return nus, beta, B, w


def eigenstate_entropy(state_or_p, nu=None) -> float:
    """``S2 = 1 - sum_{N N'} p_N p_N' |<F_N|F_N'>|^2`` for a stationary state."""
    if nu is None:
        p, nu = state_or_p.p, state_or_p.nu
    else:
        p = np.asarray(state_or_p, dtype=float)
    O = radial_overlap(nu[:, None], nu[None, :])
    return float(1.0 - p @ (O * O) @ p)


def _make_state(cs, K, E, A, residual):
    nus, beta, B, w = coefficients_from_null_vector(cs, K, E, A)
    p = w * w
    p = p / p.sum()
    return Eigenstate(
        E=float(E),
        nu=nus,
        beta=beta,
        B=B,
        amplitudes=w,
        p=p,
        S2=eigenstate_entropy(p, nus),
        label_nu=float(label_nu(cs, E)),
        residual=residual,
    )


def _null_vectors(cs, K, E, multiplicity):
    M = quantization_matrix(cs, K, E)
    _, sv, vh = np.linalg.svd(M)
    vecs = vh[-multiplicity:][::-1]
    res = sv[-multiplicity:][::-1]
    return vecs, res


def find_eigenstates(
    cs: ChannelSet,
    K: np.ndarray | ReactionMatrix | None,
    window: tuple[float, float],
    step_fraction: float = 0.02,
    strict: bool = False,
) -> list[Eigenstate]:
    """All bound levels with label ``nu`` (``N = J`` threshold) inside ``window``.

    ``K`` may be a raw matrix, a :class:`ReactionMatrix`, or ``None`` to build
    one from ``cs``. With ``strict`` an unresolved near-degenerate bracket
    raises instead of warning.
    """
    rm = K if isinstance(K, ReactionMatrix) else reaction_matrix(cs)
    if isinstance(K, np.ndarray):
        Kmat = K
        S = None
    else:
        Kmat = rm.K
        S = _scattering_matrix(rm)
    if S is None:
        # a bare K carries no defect list; rebuild S from its spectral form
        vals, vecs = np.linalg.eigh(Kmat)
        S = (vecs * ((1 + 1j * vals) / (1 - 1j * vals))) @ vecs.T

    lo, hi = sorted(float(x) for x in window)
    if lo <= 0:
        raise ValueError("window must have positive label nu")
    E_hi = label_energy(cs, hi)
    if E_hi >= cs.thresholds.min():
        raise OpenChannelError("window reaches an open channel")

    # grid in the label variable, step set by the local mean level spacing
    xs = [lo]
    while xs[-1] < hi:
        x = xs[-1]
        spacing = x**3 / level_density(cs, label_energy(cs, x))
        xs.append(min(hi, x + step_fraction * spacing))
    xs = np.asarray(xs)
    Es = label_energy(cs, xs)
    dets = boundary_determinant(cs, Kmat, Es)
    counts = _counts(cs, S, Es)

    def f(x):
        return boundary_determinant(cs, Kmat, label_energy(cs, x))

    roots: list[tuple[float, int]] = []

    def resolve(a, b, fa, fb, n, depth=0):
        if n == 0:
            return
        if n == 1 and fa * fb < 0:
            roots.append((brentq(f, a, b, xtol=1e-15 * b, rtol=1e-15, maxiter=200), 1))
            return
        if depth > 60 or (b - a) < 1e-14 * b:
            msg = f"{n} levels unresolved within label nu [{a:.15g}, {b:.15g}]"
            if strict:
                raise ArithmeticError(msg)
            warnings.warn(msg, MissedRootWarning, stacklevel=3)
            roots.append((0.5 * (a + b), n))
            return
        m = 0.5 * (a + b)
        fm = f(m)
        sub = _counts(cs, S, label_energy(cs, np.array([a, m, b])))
        resolve(a, m, fa, fm, int(sub[0]), depth + 1)
        resolve(m, b, fm, fb, int(sub[1]), depth + 1)

    for i in np.nonzero(counts)[0]:
        resolve(xs[i], xs[i + 1], dets[i], dets[i + 1], int(counts[i]))

    states = []
    for x, mult in sorted(roots):
        E = float(label_energy(cs, x))
        vecs, res = _null_vectors(cs, Kmat, E, mult)
        for A, r in zip(vecs, res):
            states.append(_make_state(cs, Kmat, E, A, float(r)))
    log.debug("found %d levels in label window [%g, %g]", len(states), lo, hi)
    return states


def entropy_statistics(states, window=None) -> EntropyStatistics:
    if not states:
        raise ValueError("no eigenstates in window")
    s2 = np.array([s.S2 for s in states])
    if window is None:
        window = (min(s.E for s in states), max(s.E for s in states))
    return EntropyStatistics(count=s2.size, mean_S2=float(s2.mean()), rms_S2=float(s2.std()), window=window)


def uncoupled_levels(cs: ChannelSet, window: tuple[float, float]) -> np.ndarray:
    """Sorted energies ``E+_N - 1/(2 (n - mu0)^2)`` with label nu in ``window``."""
    lo, hi = sorted(window)
    E_lo, E_hi = label_energy(cs, lo), label_energy(cs, hi)
    out = []
    for N in cs.N_list:
        nu_lo, nu_hi = channel_nus(cs, np.array([E_lo, E_hi]))[:, cs.index(N)]
        for n in range(int(np.floor(nu_lo + cs.mu0)), int(np.ceil(nu_hi + cs.mu0)) + 1):
            nu = n - cs.mu0
            if nu_lo <= nu <= nu_hi:
                out.append(energy_from_nu(cs, nu, N))
    return np.sort(np.asarray(out))
