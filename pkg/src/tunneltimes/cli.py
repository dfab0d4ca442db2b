"""Command-line interface: experiment configs in, deterministic CSV out.

Verbs: ``amplitudes``, ``times``, ``packet-trace``, ``hartman-sweep``,
``larmor`` (each takes ``--config``) and ``preset <name>`` to emit a ready
configuration.  All numeric output is formatted with 17 significant digits so
identical configurations produce byte-identical files.  Exit codes: 0 on
success, 2 for configuration errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .potential import Barrier, make_piecewise, make_rectangular, make_sampled
from .timing import dwell_time, group_time_report, hartman_sweep
from .larmor import larmor_times, spinor_simulation
from .units import UnitSystem
from .wavepacket import PacketSet, build_profile

EXPERIMENTS = ("amplitudes", "times", "packet-trace", "hartman-sweep",
               "larmor")


class ConfigError(ValueError):
    """A problem with the experiment configuration file."""


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _require_keys(block: dict, allowed: set[str], required: set[str],
                  where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")
    missing = required - set(block)
    if missing:
        raise ConfigError(f"missing key(s) {sorted(missing)} in {where}")


@dataclass
class ExperimentConfig:
    """Fully resolved experiment description."""

    raw: dict[str, Any]
    units: UnitSystem
    barrier: Barrier
    experiment: str
    k0: float
    l0: float
    n_samples: int
    halfwidth_sigmas: float
    params: dict[str, Any]
    seed: int


def parse_config(data: dict[str, Any]) -> ExperimentConfig:
    """Validate and resolve a configuration dictionary."""
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be an object")
    _require_keys(data, {"units", "barrier", "profile", "experiment",
                         "params", "seed"},
                  {"barrier", "profile", "experiment"}, "config")
    ublock = dict(data.get("units", {}))
    _require_keys(ublock, {"mass_multiplier", "natural"}, set(),
                  "units block")
    units = UnitSystem(mass=float(ublock.get("mass_multiplier", 1.0)),
                       natural=bool(ublock.get("natural", False)))

    bblock = dict(data["barrier"])
    kind = bblock.get("kind")
    try:
        if kind == "rectangular":
            _require_keys(bblock, {"kind", "a_nm", "b_nm", "v0_ev"},
                          {"a_nm", "b_nm", "v0_ev"}, "barrier block")
            barrier = make_rectangular(float(bblock["a_nm"]),
                                       float(bblock["b_nm"]),
                                       float(bblock["v0_ev"]))
        elif kind == "piecewise":
            _require_keys(bblock, {"kind", "a_nm", "segments"},
                          {"a_nm", "segments"}, "barrier block")
            barrier = make_piecewise(float(bblock["a_nm"]),
                                     [(float(w), float(h))
                                      for w, h in bblock["segments"]])
        elif kind == "sampled":
            _require_keys(bblock, {"kind", "a_nm", "b_nm", "x_nm", "v_ev"},
                          {"a_nm", "b_nm", "x_nm", "v_ev"}, "barrier block")
            barrier = make_sampled(float(bblock["a_nm"]), float(bblock["b_nm"]),
                                   np.asarray(bblock["x_nm"], dtype=float),
                                   np.asarray(bblock["v_ev"], dtype=float))
        else:
            raise ConfigError(f"unknown barrier kind {kind!r}")
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid barrier block: {exc}") from exc

    pblock = dict(data["profile"])
    _require_keys(pblock, {"E0_ev", "k0", "l0_nm", "n_samples",
                           "halfwidth_sigmas"}, {"l0_nm"}, "profile block")
    has_e = "E0_ev" in pblock
    has_k = "k0" in pblock
    if has_e == has_k:
        raise ConfigError("profile needs exactly one of E0_ev or k0")
    if has_e:
        e0 = float(pblock["E0_ev"])
        if e0 <= 0:
            raise ConfigError("E0_ev must be positive")
        k0 = units.wavenumber(e0)
    else:
        k0 = float(pblock["k0"])
        if k0 <= 0:
            raise ConfigError("k0 must be positive")

    experiment = data["experiment"]
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; "
                          f"choose one of {EXPERIMENTS}")
    return ExperimentConfig(
        raw=data, units=units, barrier=barrier, experiment=experiment,
        k0=k0, l0=float(pblock["l0_nm"]),
        n_samples=int(pblock.get("n_samples", 2048)),
        halfwidth_sigmas=float(pblock.get("halfwidth_sigmas", 8.0)),
        params=dict(data.get("params", {})),
        seed=int(data.get("seed", 0)))


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path} is not valid JSON (line {exc.lineno}, "
            f"column {exc.colno}): {exc.msg}") from exc
    return parse_config(data)


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def preset(name: str) -> dict[str, Any]:
    """Ready-made experiment configurations.

    ``fig1``: the GaAs-mass tunnelling packet whose transmitted trajectory
    shows the apparent barrier speed-up (mass multiplier 0.067; the spectral
    halfwidth is 4 sigmas, the widest that keeps the k-grid positive).
    ``e-half-v0``: dimensionless analytic check point E = V0/2 driving a
    barrier-width sweep.  ``free``: zero barrier; every clock collapses to
    free flight.
    """
    if name == "fig1":
        return {
            "units": {"mass_multiplier": 0.067, "natural": False},
            "barrier": {"kind": "rectangular", "a_nm": 200.0, "b_nm": 215.0,
                        "v0_ev": 0.2},
            "profile": {"E0_ev": 0.05, "l0_nm": 10.0, "n_samples": 2048,
                        "halfwidth_sigmas": 4.0},
            "experiment": "packet-trace",
            "params": {"t_min": 0.0, "t_max": 1.2, "n_times": 241},
        }
    if name == "e-half-v0":
        return {
            "units": {"natural": True},
            "barrier": {"kind": "rectangular", "a_nm": 1.0, "b_nm": 3.0,
                        "v0_ev": 1.0},
            "profile": {"k0": 1.0, "l0_nm": 30.0, "n_samples": 1024,
                        "halfwidth_sigmas": 8.0},
            "experiment": "hartman-sweep",
            "params": {"d_min": 3.0, "d_max": 12.0, "n_d": 19},
        }
    if name == "free":
        return {
            "units": {"mass_multiplier": 0.067, "natural": False},
            "barrier": {"kind": "rectangular", "a_nm": 200.0, "b_nm": 215.0,
                        "v0_ev": 0.0},
            "profile": {"E0_ev": 0.05, "l0_nm": 10.0, "n_samples": 1024,
                        "halfwidth_sigmas": 4.0},
            "experiment": "times",
            "params": {"t_min": 0.0, "t_max": 1.2, "n_times": 161},
        }
    raise ConfigError(f"unknown preset {name!r}; "
                      "choose fig1, e-half-v0 or free")


# ---------------------------------------------------------------------------
# Experiment runners
# ---------------------------------------------------------------------------

def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _time_grid(params: dict, where: str) -> np.ndarray:
    _require_keys(params, {"t_min", "t_max", "n_times"},
                  {"t_max", "n_times"}, where)
    t0 = float(params.get("t_min", 0.0))
    t1 = float(params["t_max"])
    n = int(params["n_times"])
    if not (t1 > t0 and n >= 2):
        raise ConfigError(f"invalid time grid in {where}")
    return np.linspace(t0, t1, n)


def _profile(cfg: ExperimentConfig):
    return build_profile(cfg.k0, cfg.l0, cfg.n_samples, cfg.halfwidth_sigmas)


def run_amplitudes(cfg: ExperimentConfig, out: Path) -> list[Path]:
    _require_keys(cfg.params, set(), set(), "params")
    pset = PacketSet(cfg.barrier, _profile(cfg), cfg.units)
    amp = pset.amp
    path = out / "amplitudes.csv"
    _write_csv(path, ["k_per_nm", "T", "R", "J", "lam"],
               zip(amp["k"], amp["T"], amp["R"],
                   np.unwrap(amp["J"]), np.unwrap(amp["lam"])))
    return [path]


def run_times(cfg: ExperimentConfig, out: Path) -> list[Path]:
    times = _time_grid(cfg.params, "params")
    profile = _profile(cfg)
    pset = PacketSet(cfg.barrier, profile, cfg.units)
    rep = group_time_report(pset, times)
    dw = dwell_time(cfg.barrier, cfg.k0, cfg.units)
    lt = larmor_times(profile, cfg.barrier, cfg.units)
    header = ["t1_ps", "t2_ps", "tau_exact_ps", "tau_as_ps", "tau_free_ps",
              "d_gr_nm", "k_tr_per_nm", "x_start_tr_nm", "tau_dwell_k0_ps",
              "tau0_ps", "tau_L_ps", "tau_int_ps", "tau_end_ps",
              "identity_residual_ps"]
    row = [rep.t1, rep.t2, rep.tau_exact, rep.tau_as, rep.tau_free, rep.d_gr,
           rep.k_tr, rep.x_start_tr, dw.tau_dwell, lt.tau0, lt.tau_L,
           lt.tau_int, lt.tau_end, lt.identity_residual]
    path = out / "times.csv"
    _write_csv(path, header, [row])
    return [path]


def run_packet_trace(cfg: ExperimentConfig, out: Path) -> list[Path]:
    times = _time_grid(cfg.params, "params")
    pset = PacketSet(cfg.barrier, _profile(cfg), cfg.units)
    tr = pset.expectation_series("tr", times, with_momentum=False)
    free = pset.expectation_series("free", times, with_momentum=False)
    _, T, R = pset.packet_norm_series(times)
    path = out / "trajectory.csv"
    _write_csv(path, ["t_ps", "x_tr_nm", "x_free_nm", "norm_tr", "norm_ref"],
               zip(times, tr.x_mean, free.x_mean, T, R))
    return [path]


def run_hartman_sweep(cfg: ExperimentConfig, out: Path) -> list[Path]:
    _require_keys(cfg.params, {"d_min", "d_max", "n_d"},
                  {"d_min", "d_max", "n_d"}, "params")
    u = cfg.units
    bar = cfg.barrier
    if bar.kind != "rectangular":
        raise ConfigError("hartman-sweep needs a rectangular barrier")
    ds = np.linspace(float(cfg.params["d_min"]), float(cfg.params["d_max"]),
                     int(cfg.params["n_d"]))
    sweep = hartman_sweep(bar.a, bar.v0, cfg.k0, ds, u)
    path = out / "sweep.csv"
    _write_csv(path, ["d_nm", "T", "d_gr_nm", "tau_dwell_ps", "tau0_ps",
                      "tau_end_ps", "tau_int_ps"],
               zip(sweep.d, sweep.T, sweep.d_gr, sweep.tau_dwell, sweep.tau0,
                   sweep.tau_end, sweep.tau_int))
    return [path]


def run_larmor(cfg: ExperimentConfig, out: Path) -> list[Path]:
    params = dict(cfg.params)
    _require_keys(params, {"t_min", "t_max", "n_times",
                           "hbar_omega_over_v0"},
                  {"t_max", "n_times"}, "params")
    rel = float(params.pop("hbar_omega_over_v0", 1e-5))
    times = _time_grid(params, "params")
    u = cfg.units
    scale = max(abs(cfg.barrier.v0), u.energy(cfg.k0))
    omega = rel * scale / u.hbar
    profile = _profile(cfg)
    series = spinor_simulation(cfg.barrier, profile, u, omega, times)
    lt = larmor_times(profile, cfg.barrier, u)
    spin_path = out / "larmor.csv"
    _write_csv(spin_path, ["t_ps", "Sx", "Sy", "Sz", "theta", "phi"],
               zip(series.times, series.Sx, series.Sy, series.Sz,
                   series.theta, series.phi))
    sum_path = out / "larmor_summary.csv"
    _write_csv(sum_path,
               ["tau0_ps", "tau_L_ps", "tau_int_ps", "tau_end_ps",
                "identity_residual_ps", "omega_L_per_ps", "delta_phi",
                "T_up", "T_down"],
               [[lt.tau0, lt.tau_L, lt.tau_int, lt.tau_end,
                 lt.identity_residual, series.omega_L, series.delta_phi,
                 series.T_up, series.T_down]])
    return [spin_path, sum_path]


_RUNNERS = {
    "amplitudes": run_amplitudes,
    "times": run_times,
    "packet-trace": run_packet_trace,
    "hartman-sweep": run_hartman_sweep,
    "larmor": run_larmor,
}


def run(cfg: ExperimentConfig, out_dir: str | Path,
        threads: int = 1) -> list[Path]:
    """Execute the configured experiment; returns the files written."""
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(limits=max(1, threads))
    except ImportError:
        pass
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = _RUNNERS[cfg.experiment](cfg, out)
    manifest = {
        "version": __version__,
        "config": cfg.raw,
        "outputs": [f.name for f in files],
    }
    mpath = out / "manifest.json"
    with open(mpath, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return files + [mpath]


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tunneltimes",
        description="Characteristic times of 1D quantum tunnelling via the "
                    "transmission/reflection subprocess decomposition")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in EXPERIMENTS:
        p = sub.add_parser(verb, help=f"run the {verb} experiment")
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1)
    pp = sub.add_parser("preset", help="write a ready-made config")
    pp.add_argument("name", choices=["fig1", "e-half-v0", "free"])
    pp.add_argument("--out", default="-",
                    help="file to write (default: stdout)")
    args = parser.parse_args(argv)

    try:
        if args.verb == "preset":
            text = json.dumps(preset(args.name), indent=2, sort_keys=True)
            if args.out == "-":
                print(text)
            else:
                Path(args.out).write_text(text + "\n")
            return 0
        cfg = load_config(args.config)
        if cfg.experiment != args.verb:
            raise ConfigError(
                f"config selects experiment {cfg.experiment!r} but the "
                f"{args.verb!r} verb was invoked")
        files = run(cfg, args.out, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numerical or I/O failure
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 3
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
