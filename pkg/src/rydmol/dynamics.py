"""Entanglement generation from a product initial state.

The initial state is a radially localized Rydberg packet attached to one core
state ``|N0>``. It is expanded on the bound eigenstates, and the electron's
reduced density matrix is handled through the Gram matrix of all channel
functions ``F(nu_N(E_i))`` (one entry per eigenstate and channel). With
``c_a(t) = coef_a exp(-i E_a t)``::

    T[N, N'](t) = sum_{a in N, b in N'} c_a(t) conj(c_b(t)) S[a, b]
    Tr rho_e^2  = sum_{N N'} |T[N, N']|^2

``S`` is built once; every time point then costs one phase update and a few
block matrix products. Time is measured in Kepler periods ``2 pi n0^3`` of
the initial packet.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .channels import ChannelSet, ReactionMatrix, channel_nus, energy_from_nu, reaction_matrix
from .mqdt import Eigenstate, find_eigenstates, label_nu, radial_overlap

TIME_CHUNK = 64


class TruncationError(ValueError):
    """The eigenstate window misses too much of the initial packet."""


@dataclass(frozen=True)
class WavepacketSpec:
    N0: int
    n0: float
    dn: float = 2.0
    weight_cutoff: float = 1e-4
    window_widths: float = 6.0

    def __post_init__(self):
        if self.dn <= 0:
            raise ValueError("dn must be positive")
        if not 0 < self.weight_cutoff < 1:
            raise ValueError("weight_cutoff must lie in (0, 1)")

    def radial_components(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer ``n`` and normalized Gaussian weights ``exp(-((n-n0)/(2 dn))^2)``."""
        half = 2.0 * self.dn * math.sqrt(-math.log(self.weight_cutoff))
        n = np.arange(math.ceil(self.n0 - half), math.floor(self.n0 + half) + 1)
        c = np.exp(-(((n - self.n0) / (2.0 * self.dn)) ** 2))
        keep = c >= self.weight_cutoff
        n, c = n[keep], c[keep]
        return n.astype(float), c / np.linalg.norm(c)

    @property
    def kepler_period(self) -> float:
        return 2.0 * math.pi * self.n0**3


@dataclass
class WavepacketState:
    channels: ChannelSet
    spec: WavepacketSpec
    energies: np.ndarray  # (n_states,)
    coef: np.ndarray  # (n_channels, n_states), eigen-expansion coefficients
    kernel: np.ndarray  # (n_entries, n_entries), entries ordered channel-major
    captured_weight: float
    states: list[Eigenstate] = field(repr=False, default_factory=list)

    @property
    def n_states(self) -> int:
        return self.energies.size

    @property
    def n_channels(self) -> int:
        return self.coef.shape[0]

    @property
    def period(self) -> float:
        return self.spec.kepler_period

    @property
    def entry_nu(self) -> np.ndarray:
        return np.stack([s.nu for s in self.states], axis=1).ravel()

    def block(self, channel_index: int) -> slice:
        return slice(channel_index * self.n_states, (channel_index + 1) * self.n_states)

    @property
    def reference_energy(self) -> float:
        # global phase reference; keeps E t small for long runs
        return float(self.energies.mean())


@dataclass
class EntropySeries:
    t_over_Te: np.ndarray
    S2: np.ndarray
    norm: np.ndarray
    channel_weights: np.ndarray | None = None


def packet_overlap(nu, spec: WavepacketSpec) -> np.ndarray:
    """``<F(nu)|F_loc>`` for unit-normalized channel functions.

    The packet is built from the integer-``nu`` channel functions
    ``F(n) = (-1)^(n-L) R_nL``, which puts it at the outer turning point.
    """
    n, c = spec.radial_components()
    nu = np.asarray(nu, dtype=float)
    return radial_overlap(nu[..., None], n) @ c


def packet_window(cs: ChannelSet, spec: WavepacketSpec) -> tuple[float, float]:
    """Label-``nu`` window covering ``nu_N0`` in ``n0 +- window_widths * dn``."""
    half = spec.window_widths * spec.dn
    E_lo = energy_from_nu(cs, spec.n0 - half, spec.N0)
    E_hi = energy_from_nu(cs, spec.n0 + half, spec.N0)
    return float(label_nu(cs, E_lo)), float(label_nu(cs, E_hi))


def overlap_kernel(nu_entries: np.ndarray) -> np.ndarray:
    x = np.asarray(nu_entries, dtype=float)
    return radial_overlap(x[:, None], x[None, :])


def build_wavepacket(
    cs: ChannelSet,
    K: ReactionMatrix | np.ndarray | None,
    spec: WavepacketSpec,
    states: list[Eigenstate] | None = None,
    max_discarded: float = 1e-3,
) -> WavepacketState:
    """Expand ``F_loc (x) |N0>`` on the bound states inside the packet window."""
    i0 = cs.index(spec.N0)
    if spec.n0 <= cs.L:
        raise ValueError("n0 must exceed L")
    if states is None:
        states = find_eigenstates(cs, K if K is not None else reaction_matrix(cs), packet_window(cs, spec))
    if not states:
        raise TruncationError("no eigenstates in the packet window")
    E = np.array([s.E for s in states])
    b = np.stack([s.amplitudes for s in states], axis=1)  # (n_channels, n_states)
    nu0 = np.array([s.nu[i0] for s in states])
    proj = b[i0] * packet_overlap(nu0, spec)
    captured = float(proj @ proj)
    if 1.0 - captured > max_discarded:
        raise TruncationError(f"eigenstate window keeps only {captured:.6f} of the packet norm")
    coef = b * proj[None, :]
    nu_entries = np.stack([s.nu for s in states], axis=1).ravel()
    S = overlap_kernel(nu_entries)
    wp = WavepacketState(cs, spec, E, coef, S, captured, states)
    norm0 = _block_products(wp, np.zeros(1))[0]
    wp.coef = coef / math.sqrt(float(np.trace(norm0).real))
    return wp


def _phased(wp: WavepacketState, t_au: np.ndarray) -> np.ndarray:
    phase = np.exp(-1j * np.outer(wp.energies - wp.reference_energy, t_au))  # (n_states, n_t)
    return (wp.coef[:, :, None] * phase[None]).reshape(-1, t_au.size)


def _block_products(wp: WavepacketState, t_au: np.ndarray) -> np.ndarray:
    """``T[t, N, N']`` for a chunk of times (atomic units)."""
    C = _phased(wp, t_au)
    nc, ns = wp.n_channels, wp.n_states
    T = np.empty((t_au.size, nc, nc), dtype=complex)
    for n in range(nc):
        blk = wp.block(n)
        start = blk.start
        # upper triangle only; T is Hermitian in the channel indices
        Sb = wp.kernel[blk, start:].T
        W = Sb @ C.real[blk] + 1j * (Sb @ C.imag[blk])
        G = W * C[start:].conj()
        T[:, n, n:] = np.add.reduceat(G, np.arange(0, G.shape[0], ns), axis=0).T
        T[:, n + 1 :, n] = T[:, n, n + 1 :].conj()
    return T


def _chunked(fn, t_au: np.ndarray, threads: int):
    chunks = [t_au[i : i + TIME_CHUNK] for i in range(0, t_au.size, TIME_CHUNK)]
    with threadpool_limits(limits=1):
        if threads <= 1 or len(chunks) == 1:
            parts = [fn(c) for c in chunks]
        else:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                parts = list(ex.map(fn, chunks))
    return np.concatenate(parts, axis=0)


def channel_matrix(wp: WavepacketState, t_over_Te) -> np.ndarray:
    """``T[N, N']`` at each time; Hermitian, trace = norm."""
    t_au = np.atleast_1d(np.asarray(t_over_Te, dtype=float)) * wp.period
    return _block_products(wp, t_au)


def purity_series(wp: WavepacketState, t_over_Te, threads: int = 1) -> EntropySeries:
    """Linear entropy ``1 - Tr rho_e^2`` on a grid of times in Kepler periods.

    ``rho_e`` is taken at unit trace; ``norm`` reports the actual trace.

    Output is bit-identical for any ``threads``: chunks have a fixed size and
    BLAS runs single-threaded inside each chunk.
    """
    t = np.asarray(t_over_Te, dtype=float)
    T = _chunked(lambda c: _block_products(wp, c), t * wp.period, threads)
    sq = (T.real**2 + T.imag**2).reshape(t.size, -1)
    purity = np.array([math.fsum(row) for row in sq])
    weights = np.real(np.diagonal(T, axis1=1, axis2=2))
    norm = np.array([math.fsum(row) for row in weights])
    # entropy of rho_e / Tr rho_e: the residual norm drift (~1e-13) must not
    # push a product state below zero
    S2 = (norm * norm - purity) / (norm * norm)
    return EntropySeries(t_over_Te=t, S2=S2, norm=norm, channel_weights=weights)


def channel_correlation(wp: WavepacketState, N: int, t_over_Te, t_ref: float = 0.5) -> np.ndarray:
    """``C(t) = <psi_N(t_ref)|psi_N(t)>`` for the electron packet in channel ``N``.

    Times (including ``t_ref``) are in Kepler periods; the result is the raw
    bilinear form, without normalization.
    """
    i = wp.channels.index(N)
    blk = wp.block(i)
    S = wp.kernel[blk, blk]
    E = wp.energies - wp.reference_energy
    b = wp.coef[i]
    ref = b * np.exp(-1j * E * t_ref * wp.period)
    v = S @ ref.conj()
    t = np.atleast_1d(np.asarray(t_over_Te, dtype=float)) * wp.period
    return (b[None, :] * np.exp(-1j * np.outer(t, E))) @ v


def revival_times(nu: float, B_r: float) -> tuple[float, float]:
    """Semiclassical revival times ``(2 pi nu^4 / 3, pi / B_r)`` in atomic units."""
    if nu <= 0 or B_r <= 0:
        raise ValueError("nu and B_r must be positive")
    return 2.0 * math.pi * nu**4 / 3.0, math.pi / B_r


def default_n0(cs: ChannelSet, E_total: float, N0: int) -> float:
    """Packet centre matching a total energy: ``nu`` of channel ``N0`` at ``E_total``."""
    return float(channel_nus(cs, E_total)[cs.index(N0)])


def period_contrast(t_over_Te, series) -> tuple[np.ndarray, np.ndarray]:
    """Relative oscillation amplitude ``(max - min) / mean`` in each whole period.

    Returns the integer period starts and the contrast per period; a revival
    shows up as a burst in this envelope.
    """
    t = np.asarray(t_over_Te, dtype=float)
    x = np.asarray(series, dtype=float)
    starts = np.arange(math.floor(t[0]), math.floor(t[-1]))
    out = np.empty(starts.size)
    for i, p in enumerate(starts):
        seg = x[(t >= p) & (t < p + 1)]
        mean = seg.mean()
        out[i] = (seg.max() - seg.min()) / mean if mean != 0 else 0.0
    return starts, out


def recurrence_period(
    t_over_Te, series, skip: float = 20.0, lag_range: tuple[int, int] = (30, 200)
) -> tuple[int, float]:
    """Recurrence period (in periods) of the contrast envelope, via autocorrelation.

    The first ``skip`` periods (initial spreading) are dropped; the lag with
    the largest autocorrelation inside ``lag_range`` is returned together with
    that normalized autocorrelation value.
    """
    starts, r = period_contrast(t_over_Te, series)
    x = r[starts >= skip]
    x = x - x.mean()
    if x.size <= lag_range[0] or not np.any(x):
        raise ValueError("series too short or flat for a recurrence estimate")
    ac = np.correlate(x, x, "full")[x.size - 1 :]
    ac = ac / ac[0]
    lags = np.arange(ac.size)
    sel = (lags >= lag_range[0]) & (lags <= lag_range[1])
    best = int(np.argmax(np.where(sel, ac, -np.inf)))
    return best, float(ac[best])
