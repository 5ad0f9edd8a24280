"""Shared reference setup: J=50, L=10, (+) parity, resonance at nu=315.5."""

from __future__ import annotations

from functools import lru_cache

from rydmol.channels import build_channel_set, reaction_matrix
from rydmol.classical import resonant_rotational_constant
from rydmol.dynamics import WavepacketSpec, build_wavepacket, default_n0
from rydmol.mqdt import find_eigenstates

J, L = 50, 10
NU_RES = 315.5
NU_GEN = 315.5 * 1.137
B_R = resonant_rotational_constant(NU_RES, J, 2)
S2_MAX = 10.0 / 11.0


def ref_nu(case: str) -> float:
    return NU_RES if case == "resonant" else NU_GEN


def total_energy(case: str) -> float:
    return B_R * J * (J + 1) - 0.5 / ref_nu(case) ** 2


def channel_set(k: float, parity: str = "+"):
    return build_channel_set(J, L, parity, B_R, 0.4, k)


@lru_cache(maxsize=None)
def eigen_window(k: float, case: str, half_width: float = 5.0):
    cs = channel_set(k)
    nu = ref_nu(case)
    return cs, find_eigenstates(cs, reaction_matrix(cs), (nu - half_width, nu + half_width))


@lru_cache(maxsize=None)
def wavepacket(k: float, case: str, N0: int):
    cs = channel_set(k)
    spec = WavepacketSpec(N0=N0, n0=default_n0(cs, total_energy(case), N0), dn=2.0)
    return build_wavepacket(cs, reaction_matrix(cs), spec)
