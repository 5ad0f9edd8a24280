"""Angular-momentum algebra: Wigner 3j symbols and spin coherent states.

The 3j symbol is evaluated with the Racah single-sum formula in exact
rational arithmetic; only the final square root is taken in floating point.
The alternating sum cancels badly above j ~ 30, so a float accumulation
is not accurate enough for orthogonality checks at the 1e-12 level.
Arguments may be integers or half-integers (passed as floats).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from math import factorial, lgamma, sqrt

import numpy as np

_LOGFACT_SIZE = 1024
_LOGFACT = np.array([lgamma(n + 1.0) for n in range(_LOGFACT_SIZE)])


def _as_twice(x: float) -> int:
    two = round(2 * x)
    if abs(2 * x - two) > 1e-9:
        raise ValueError(f"{x!r} is not a half-integer")
    return two


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    return factorial(n)


@lru_cache(maxsize=1 << 16)
def _three_j_twice(tj1: int, tj2: int, tj3: int, tm1: int, tm2: int, tm3: int) -> float:
    if tm1 + tm2 + tm3 != 0:
        return 0.0
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tm3) > tj3:
        return 0.0
    if (tj1 + tm1) % 2 or (tj2 + tm2) % 2 or (tj3 + tm3) % 2:
        return 0.0
    if tj3 > tj1 + tj2 or tj3 < abs(tj1 - tj2):
        return 0.0
    if (tj1 + tj2 + tj3) % 2:
        return 0.0

    # switch to plain integers; every quantity below is a whole number
    j1p, j1m = (tj1 + tm1) // 2, (tj1 - tm1) // 2
    j2p, j2m = (tj2 + tm2) // 2, (tj2 - tm2) // 2
    j3p, j3m = (tj3 + tm3) // 2, (tj3 - tm3) // 2
    b1 = (tj1 + tj2 - tj3) // 2
    a1 = (tj3 - tj2 + tm1) // 2
    a2 = (tj3 - tj1 - tm2) // 2

    # squared prefactor (triangle coefficient times m-dependent factorials)
    pre_sq = Fraction(
        _fact(b1)
        * _fact((tj1 - tj2 + tj3) // 2)
        * _fact((-tj1 + tj2 + tj3) // 2)
        * _fact(j1p)
        * _fact(j1m)
        * _fact(j2p)
        * _fact(j2m)
        * _fact(j3p)
        * _fact(j3m),
        _fact((tj1 + tj2 + tj3) // 2 + 1),
    )

    # Racah sum, exact: cancellation between terms is severe for large j
    t_min = max(0, -a1, -a2)
    t_max = min(b1, j1m, j2p)
    total = Fraction(0)
    for t in range(t_min, t_max + 1):
        den = _fact(t) * _fact(a1 + t) * _fact(a2 + t) * _fact(b1 - t) * _fact(j1m - t) * _fact(j2p - t)
        total += Fraction(-1 if t % 2 else 1, den)
    if total == 0:
        return 0.0

    value = sqrt(float(total * total * pre_sq))
    negative = (total < 0) ^ bool(((tj1 - tj2 - tm3) // 2) % 2)
    return -value if negative else value


def wigner_3j(j1: float, j2: float, j3: float, m1: float, m2: float, m3: float) -> float:
    """Wigner 3j symbol ``(j1 j2 j3; m1 m2 m3)``.

    Returns exactly ``0.0`` whenever a selection rule fails.
    """
    return _three_j_twice(_as_twice(j1), _as_twice(j2), _as_twice(j3), _as_twice(m1), _as_twice(m2), _as_twice(m3))


@dataclass(frozen=True)
class CoherentAmplitudes:
    """Spin coherent state in the ``|L, Lambda>`` basis, ``Lambda = -L..L``."""

    L: int
    amplitudes: np.ndarray

    @property
    def projections(self) -> np.ndarray:
        return np.arange(-self.L, self.L + 1)


def _log_binomials(L: int) -> np.ndarray:
    n = 2 * L
    ks = np.arange(n + 1)
    return _LOGFACT[n] - _LOGFACT[ks] - _LOGFACT[n - ks]


def coherent_amplitude_table(L: int, theta, phi) -> np.ndarray:
    """Vectorised coherent amplitudes, shape ``broadcast(theta, phi).shape + (2L+1,)``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    lam = np.arange(-L, L + 1)
    half_log_binom = 0.5 * _log_binomials(L)
    c = np.cos(theta / 2)[..., None]
    s = np.sin(theta / 2)[..., None]
    # powers written out explicitly so that 0**0 == 1 at the poles
    mag = np.exp(half_log_binom) * c ** (L + lam) * s ** (L - lam)
    return mag * np.exp(-1j * lam * phi[..., None])


def spin_coherent_amplitudes(L: int, theta: float, phi: float) -> CoherentAmplitudes:
    """Coherent state pointing along ``(theta, phi)`` for integer ``L``.

    ``amp[Lambda] = C(2L, L+Lambda)^(1/2) cos(theta/2)^(L+Lambda)
    sin(theta/2)^(L-Lambda) exp(-i Lambda phi)``.
    """
    if L < 0:
        raise ValueError("L must be non-negative")
    if not 0.0 <= theta <= np.pi:
        raise ValueError("theta must lie in [0, pi]")
    return CoherentAmplitudes(L=L, amplitudes=coherent_amplitude_table(L, theta, phi))
