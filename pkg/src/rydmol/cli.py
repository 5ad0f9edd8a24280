"""Command-line driver: one subcommand per data product, CSV + manifest out.

Exit status: 0 on success, 2 for configuration errors, 3 when a numerical
guard trips (open channel, truncated packet, unresolved levels under
``--strict``). Files are staged in a scratch directory and only moved into
place once the whole subcommand has succeeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import shutil
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .channels import OpenChannelError, channel_nus, frame_transformation, reaction_matrix
from .classical import ClassicalParams, UnboundElectronError, core_period, iterate_sos, kepler_period, seed_grid
from .config import PRESETS, ConfigError, RunConfig, load_config, preset
from .dynamics import (
    TruncationError,
    WavepacketSpec,
    build_wavepacket,
    channel_correlation,
    default_n0,
    purity_series,
    recurrence_period,
    revival_times,
)
from .husimi import husimi_grid, molecular_frame_amplitudes
from .mqdt import MissedRootWarning, entropy_statistics, find_eigenstates

log = logging.getLogger("rydmol")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
NUMERIC_ERRORS = (
    ArithmeticError,
    OpenChannelError,
    UnboundElectronError,
    TruncationError,
    MissedRootWarning,
)


def fmt(x) -> str:
    return format(float(x), ".17g")


class Run:
    """Per-invocation context: config, staging directory and manifest data."""

    def __init__(self, cfg: RunConfig, stage: Path, strict: bool, threads: int):
        self.cfg = cfg
        self.stage = stage
        self.strict = strict
        self.threads = threads
        self.files: list[str] = []
        self.derived: dict[str, object] = {}

    def write_csv(self, name: str, header: list[str], rows) -> None:
        with open(self.stage / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
        self.files.append(name)

    def write_json(self, name: str, payload) -> None:
        (self.stage / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        self.files.append(name)

    def base_derived(self, case: str | None = None) -> None:
        cfg = self.cfg
        J = cfg.physics.J
        nu = cfg.reference_nu(case)
        B_r = cfg.rotational_constant()
        self.derived.update(
            B_r=B_r,
            E_total=cfg.total_energy(case),
            nu_J=nu,
            T_e=float(kepler_period(nu)),
            T_c=float(core_period(B_r, J)),
        )

    def eigenstates(self, k: float | None = None, case: str | None = None):
        cs = self.cfg.channel_set(k)
        window = self.cfg.eigen_window(case)
        states = find_eigenstates(cs, reaction_matrix(cs), window, strict=self.strict)
        return cs, window, states

    def wavepacket(self):
        cfg = self.cfg
        cs = cfg.channel_set()
        E = cfg.total_energy()
        w = cfg.wavepacket
        n0 = default_n0(cs, E, w.N0) if w.n0 is None else float(w.n0)
        spec = WavepacketSpec(N0=w.N0, n0=n0, dn=w.dn, weight_cutoff=w.weight_cutoff)
        wp = build_wavepacket(cs, reaction_matrix(cs), spec)
        self.base_derived()
        self.derived.update(
            n0=n0,
            T_e_packet=spec.kepler_period,
            eigenstate_count=wp.n_states,
            captured_weight=wp.captured_weight,
        )
        return wp


def time_grid(t_max: float, dt: float) -> np.ndarray:
    n = int(math.floor(t_max / dt + 1e-9))
    return np.arange(n + 1) * dt


# --- subcommands -----------------------------------------------------------


def cmd_channels(run: Run) -> None:
    cfg = run.cfg
    cs = cfg.channel_set()
    run.base_derived()
    U = frame_transformation(cs)
    rm = reaction_matrix(cs, U)
    nus = channel_nus(cs, cfg.total_energy())
    run.write_csv("channels.csv", ["N", "threshold", "nu"], zip(cs.N_list, cs.thresholds, nus))
    lam_rows = [(int(lam), mu, t) for lam, mu, t in zip(cs.projections, rm.mu, rm.tan_mu)]
    run.write_csv("defects.csv", ["Lambda", "mu", "tan_mu"], lam_rows)
    rows = [(N, int(lam), U[i, j]) for i, N in enumerate(cs.N_list) for j, lam in enumerate(cs.projections)]
    run.write_csv("frame.csv", ["N", "Lambda", "U"], rows)
    run.derived["n_channels"] = cs.n_channels


def cmd_sos(run: Run) -> None:
    cfg = run.cfg
    ph = cfg.physics
    run.base_derived()
    params = ClassicalParams(ph.J, ph.L, ph.k, cfg.rotational_constant(), cfg.total_energy())
    pts = iterate_sos(params, seed_grid(cfg.sos.n_cos, cfg.sos.n_phi), cfg.sos.n_kicks)
    rows = zip(pts.seed_id, pts.kick, pts.u[:, 0], pts.u[:, 1], pts.u[:, 2], pts.N)
    run.write_csv(
        "sos.csv",
        ["seed_id", "kick", "u_x", "u_y", "u_z", "N"],
        ((str(s), str(k), x, y, z, n) for s, k, x, y, z, n in rows),
    )
    run.derived["period_ratio_N_J"] = float(params.period_ratio(ph.J))


def cmd_eigens(run: Run) -> None:
    cs, window, states = run.eigenstates()
    run.base_derived()
    header = ["E", "label_nu", "S2"] + [f"p_{N}" for N in cs.N_list] + [f"B_{N}" for N in cs.N_list]
    run.write_csv("eigens.csv", header, ([s.E, s.label_nu, s.S2, *s.p, *s.amplitudes] for s in states))
    run.derived.update(window=list(window), eigenstate_count=len(states))


def cmd_entropy_stats(run: Run) -> None:
    cfg = run.cfg
    rows, counts = [], {}
    for case in cfg.stats.cases:
        for k in cfg.stats.k_values:
            _, window, states = run.eigenstates(k=k, case=case)
            st = entropy_statistics(states, window)
            rows.append((fmt(k), case, str(st.count), st.mean_S2, st.rms_S2))
            counts[f"{case}:{fmt(k)}"] = st.count
    run.base_derived()
    run.write_csv("entropy_stats.csv", ["k", "case", "count", "mean_S2", "rms_S2"], rows)
    run.derived["eigenstate_count"] = counts


def cmd_evolve(run: Run) -> None:
    wp = run.wavepacket()
    t = time_grid(run.cfg.evolve.t_max_Te, run.cfg.evolve.dt_Te)
    series = purity_series(wp, t, threads=run.threads)
    run.write_csv("evol.csv", ["t_over_Te", "S2"], zip(t, series.S2))
    run.derived["max_norm_deviation"] = float(np.max(np.abs(series.norm - 1.0)))


def cmd_correlation(run: Run) -> None:
    wp = run.wavepacket()
    c = run.cfg.correlation
    t = time_grid(run.cfg.evolve.t_max_Te, run.cfg.evolve.dt_Te)
    C = channel_correlation(wp, c.N, t, t_ref=c.t_ref_Te)
    run.write_csv("corr.csv", ["t_over_Te", "re_C", "im_C", "abs_C"], zip(t, C.real, C.imag, np.abs(C)))


def cmd_revival(run: Run) -> None:
    cfg = run.cfg
    wp = run.wavepacket()
    r = cfg.revival
    t = time_grid(r.t_max_Te, r.dt_Te)
    C = channel_correlation(wp, cfg.correlation.N, t, t_ref=cfg.correlation.t_ref_Te)
    series = purity_series(wp, t, threads=run.threads)
    run.write_csv("corr.csv", ["t_over_Te", "re_C", "im_C", "abs_C"], zip(t, C.real, C.imag, np.abs(C)))
    run.write_csv("evol.csv", ["t_over_Te", "S2"], zip(t, series.S2))
    lags = (r.lag_min, r.lag_max)
    pc, ac_c = recurrence_period(t, np.abs(C), skip=r.skip_Te, lag_range=lags)
    ps, ac_s = recurrence_period(t, series.S2, skip=r.skip_Te, lag_range=lags)
    T_e_rev, T_c_rev = revival_times(wp.spec.n0, wp.channels.B_r)
    run.write_json(
        "revival.json",
        {
            "correlation_period_Te": pc,
            "correlation_autocorrelation": ac_c,
            "entropy_period_Te": ps,
            "entropy_autocorrelation": ac_s,
            "electron_revival_Te": T_e_rev / wp.period,
            "core_revival_Te": T_c_rev / wp.period,
        },
    )


def _husimi_target(tag: str, cs, states):
    if tag == "min_S2":
        return min(states, key=lambda s: s.S2).amplitudes
    if tag == "max_S2":
        return max(states, key=lambda s: s.S2).amplitudes
    if tag.startswith("channel:"):
        b = np.zeros(cs.n_channels)
        b[cs.index(int(tag.split(":", 1)[1]))] = 1.0
        return b
    try:
        return states[int(tag)].amplitudes
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"husimi target '{tag}' not understood or out of range") from exc


def cmd_husimi(run: Run) -> None:
    cfg = run.cfg
    cs, window, states = run.eigenstates()
    run.base_derived()
    if not states:
        raise ArithmeticError("no eigenstates in the window")
    U = frame_transformation(cs)
    h_cfg = cfg.husimi
    totals = {}
    for tag in h_cfg.targets:
        b = _husimi_target(tag, cs, states)
        grid = husimi_grid(molecular_frame_amplitudes(b, U), cs, (h_cfg.n_theta, h_cfg.n_phi), frame=h_cfg.frame)
        th, ph = np.meshgrid(grid.theta, grid.phi, indexing="ij")
        name = "husimi.csv" if len(h_cfg.targets) == 1 else f"husimi_{tag.replace(':', '_')}.csv"
        run.write_csv(name, ["theta", "phi", "h"], zip(th.ravel(), ph.ravel(), grid.h.ravel()))
        totals[tag] = grid.total()
    run.derived.update(window=list(window), eigenstate_count=len(states), husimi_norm=totals)


COMMANDS = {
    "channels": cmd_channels,
    "sos": cmd_sos,
    "eigens": cmd_eigens,
    "entropy-stats": cmd_entropy_stats,
    "evolve": cmd_evolve,
    "correlation": cmd_correlation,
    "husimi": cmd_husimi,
    "revival": cmd_revival,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rydmol", description="Rotating-core Rydberg molecule simulations.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="JSON run configuration")
    src.add_argument("--preset", choices=sorted(PRESETS, key=lambda s: int(s[3:])), help="built-in figure recipe")
    p.add_argument("--out", type=Path, help="output directory (default: output.directory from the config)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.add_argument("--strict", action="store_true", help="treat unresolved eigenvalue brackets as errors")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else preset(args.preset)
        if args.overrides:
            cfg = cfg.with_overrides(args.overrides)
        cfg.channel_set()  # surface constructor-level validation as a config error
    except (ConfigError, OSError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out if args.out is not None else Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".stage-", dir=out))
    r = Run(cfg, stage, args.strict, max(1, args.threads))
    try:
        with warnings.catch_warnings():
            if args.strict:
                warnings.simplefilter("error", MissedRootWarning)
            COMMANDS[args.command](r)
        r.write_json(
            "manifest.json",
            {
                "command": args.command,
                "version": __version__,
                "input_sha256": cfg.digest(),
                "derived": r.derived,
                "files": sorted(r.files),
                "config": cfg.to_dict(),
            },
        )
        for name in r.files:
            os.replace(stage / name, out / name)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return 0


def main() -> None:
    sys.exit(run())
