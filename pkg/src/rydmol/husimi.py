"""Husimi projection of eigenstates onto the sphere of ``L`` directions.

The channel amplitudes are carried to the molecular frame with the same
frame transformation used for ``K`` and then overlapped with spin coherent
states ``|theta, phi>`` in the ``Lambda`` basis, with ``theta`` measured from
the internuclear axis (OZ).

In that basis the azimuth origin is the component of ``J`` perpendicular to
the axis ("molecular" frame). The surface of section instead puts OX along
``N``; the two frames differ by a rotation about OZ through
``alpha(u) = atan2(L u_y, N + L u_x)``, and the "sos" grid is the
push-forward of the molecular-frame density, so it stays normalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angular import coherent_amplitude_table
from .channels import ChannelSet


@dataclass
class HusimiGrid:
    theta: np.ndarray  # (n_theta,)
    phi: np.ndarray  # (n_phi,)
    h: np.ndarray  # (n_theta, n_phi)
    L: int

    @property
    def resolution(self) -> tuple[int, int]:
        return self.h.shape

    def weights(self) -> np.ndarray:
        dth = np.pi / self.theta.size
        dph = 2.0 * np.pi / self.phi.size
        return np.sin(self.theta)[:, None] * dth * dph * np.ones_like(self.h)

    def total(self) -> float:
        """``(2L+1)/(4 pi) * integral of h``; 1 for a normalized state."""
        return float((2 * self.L + 1) / (4.0 * np.pi) * np.sum(self.h * self.weights()))

    def unit_vectors(self) -> np.ndarray:
        th, ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)

    def mean(self, values) -> float:
        """Husimi-weighted average of a function sampled on the grid."""
        w = self.h * self.weights()
        return float(np.sum(w * values) / np.sum(w))


def molecular_frame_amplitudes(b, U: np.ndarray) -> np.ndarray:
    """``a_Lambda = sum_N U[N, Lambda] b_N`` for parity-adapted ``Lambda >= 0``.

    ``b`` is either an array of signed normalized channel amplitudes or an
    object with an ``amplitudes`` attribute (an eigenstate).
    """
    b = np.asarray(getattr(b, "amplitudes", b), dtype=float)
    return U.T @ b


def signed_projection_amplitudes(a, cs: ChannelSet) -> np.ndarray:
    """Expand parity-adapted amplitudes to ``Lambda = -L..L``.

    The extra ``(-1)^Lambda`` turns the 3j phase convention into the
    molecular frame, where ``phi = 0`` lies along the part of ``J``
    perpendicular to the axis.
    """
    a = np.asarray(a, dtype=complex)
    L = cs.L
    out = np.zeros(2 * L + 1, dtype=complex)
    sign = 1.0 if cs.parity == "+" else -1.0
    for a_lam, lam in zip(a, cs.projections):
        ph = -1.0 if lam % 2 else 1.0
        if lam == 0:
            out[L] = a_lam
        else:
            out[L + lam] = ph * a_lam / np.sqrt(2.0)
            out[L - lam] = sign * ph * a_lam / np.sqrt(2.0)
    return out


def coherent_density(full: np.ndarray, L: int, theta, phi) -> np.ndarray:
    """``|<theta, phi|a>|^2`` for amplitudes over ``Lambda = -L..L``."""
    coh = coherent_amplitude_table(L, theta, phi)
    return np.abs(coh.conj() @ full) ** 2


def husimi_grid(a, cs: ChannelSet, resolution: tuple[int, int] = (100, 200), frame: str = "sos") -> HusimiGrid:
    """Husimi density on a midpoint grid uniform in ``(theta, phi)``.

    ``frame="molecular"`` gives ``|<theta, phi|state>|^2`` directly;
    ``frame="sos"`` re-expresses it with OX along ``N``.
    """
    if frame not in ("sos", "molecular"):
        raise ValueError("frame must be 'sos' or 'molecular'")
    n_theta, n_phi = resolution
    theta = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    phi = -np.pi + (np.arange(n_phi) + 0.5) * 2.0 * np.pi / n_phi
    full = signed_projection_amplitudes(a, cs)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    if frame == "molecular":
        h = coherent_density(full, cs.L, th, ph)
    else:
        ux, uy = np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph)
        lux = cs.L * ux
        root = np.sqrt(lux * lux + cs.J**2 - cs.L**2)  # = N + L u_x
        alpha = np.arctan2(cs.L * uy, root)
        h = coherent_density(full, cs.L, th, ph - alpha) * (1.0 - lux / root)
    return HusimiGrid(theta=theta, phi=phi, h=h, L=cs.L)


def classical_core_momentum(cs: ChannelSet, u) -> np.ndarray:
    lux = cs.L * np.asarray(u)[..., 0]
    return -lux + np.sqrt(lux * lux + cs.J**2 - cs.L**2)
