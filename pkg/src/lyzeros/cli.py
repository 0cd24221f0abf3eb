"""Command-line front end.

Every experiment writes CSV/JSON datasets plus ``manifest.json`` into its
output directory.  Physical frequencies are given in kHz and multiplied by
2*pi internally; everything else is dimensionless.

Exit codes: 0 success, 2 usage error, 3 validation error, 4 numerical
error, 5 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import io as lio
from .coupling import coupling_profile, optimize_eta
from .dynamics import DriveParams, find_zeros, spin_coherence
from .ensemble import FitSettings, default_workers, ensemble_distribution, fit_ensemble, fidelity_sensitivity
from .errors import InvalidArgumentError, LYZError
from .noise import (
    NoiseConfig,
    detuning_average,
    detuning_deviance,
    deviance_grids,
    heating_deviance,
    noisy_partition_grid,
)
from .thermal import ComplexFieldGrid, ThermalParams, axis, gibbs_distribution, log_partition_z0, partition_grid

log = logging.getLogger("lyzeros")

EXPERIMENTS = (
    "profile", "gibbs", "grid", "zeros", "fit", "sensitivity",
    "heating", "detuning", "noisy-grid", "eta-opt", "reproduce",
)
TARGETS = ("fig1", "fig2", "fig4", "figT", "fig6")
ENV_OUTPUT_ROOT = "LYZEROS_OUTPUT_ROOT"
ENV_THREADS = "LYZEROS_THREADS"

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


class ValidationError(Exception):
    pass


def _range3(text):
    try:
        lo, hi, count = text.split(":")
        return (float(lo), float(hi), int(count))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:count, got {text!r}") from None


def _range2(text):
    try:
        lo, hi = text.split(":")
        return (float(lo), float(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None


def _pair(text):
    try:
        a, b = text.split(",")
        return (int(a), int(b))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected i,j, got {text!r}") from None


def _flag(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# name -> (parser, default, help)
OPTIONS = {
    "beta-omega": (float, 0.5, "inverse temperature times trap frequency"),
    "eta": (float, 0.47, "Lamb-Dicke parameter"),
    "nmax": (int, 63, "highest Fock level"),
    "nmin": (int, 0, "lowest Fock level in the eta objective (eta-opt)"),
    "h-r": (float, 7.0, "real field h_R/omega_m for single-state experiments"),
    "hr": (_range3, (0.0, 15.0, 151), "h_R/omega_m axis lo:hi:count"),
    "bhi": (_range3, (0.0, 40.0, 401), "beta*h_I axis lo:hi:count"),
    "t-window": (_range3, (0.0, 200.0, 401), "time axis in microseconds lo:hi:count"),
    "omega-khz": (float, 50.0, "carrier Rabi frequency / 2pi in kHz"),
    "omega-m-khz": (float, 600.0, "trap frequency / 2pi in kHz"),
    "gamma": (float, 300.0, "heating rate in quanta/s"),
    "detuning-khz": (float, 1.0, "detuning (fixed, or Gaussian std) / 2pi in kHz"),
    "runs": (int, 100, "Monte Carlo runs for detuning averaging"),
    "n-components": (int, 3, "coherent states in the ensemble"),
    "starts": (int, 32, "random starts per ensemble fit"),
    "seed": (int, 0, "random seed"),
    "range": (_range2, (0.3, 0.6), "eta search interval lo:hi (eta-opt)"),
    "vary": (_pair, (1, 2), "ensemble components swept by sensitivity, i,j (0-based)"),
    "sens-halfwidth": (float, 0.8, "half-width of the sensitivity sweep around each alpha"),
    "sens-count": (int, 33, "points per sensitivity axis"),
    "truncate": (_flag, False, "renormalize on 0..nmax instead of failing on a populated tail"),
    "out": (str, None, "output directory"),
    "gnuplot-hints": (_flag, False, "also write gnuplot_hints.txt describing columns"),
}

# experiment-specific defaults that differ from OPTIONS
EXPERIMENT_DEFAULTS = {
    "eta-opt": {"nmax": 20},
    "zeros": {"hr": (0.0, 15.0, 16), "t-window": (0.0, 200.0, 81)},
}


def _dest(name):
    return name.replace("-", "_")


@dataclass
class RunConfig:
    experiment: str
    target: str | None = None
    beta_omega: float = 0.5
    eta: float = 0.47
    nmax: int = 63
    nmin: int = 0
    h_r: float = 7.0
    hr: tuple = (0.0, 15.0, 151)
    bhi: tuple = (0.0, 40.0, 401)
    t_window: tuple = (0.0, 200.0, 401)
    omega_khz: float = 50.0
    omega_m_khz: float = 600.0
    gamma: float = 300.0
    detuning_khz: float = 1.0
    runs: int = 100
    n_components: int = 3
    starts: int = 32
    seed: int = 0
    range: tuple = (0.3, 0.6)
    vary: tuple = (1, 2)
    sens_halfwidth: float = 0.8
    sens_count: int = 33
    truncate: bool = False
    out: str | None = None
    gnuplot_hints: bool = False
    config_file: str | None = None
    defaulted: list = field(default_factory=list)

    # derived physical quantities
    @property
    def omega_rabi(self):
        return 2 * math.pi * 1e3 * self.omega_khz

    @property
    def detuning(self):
        return 2 * math.pi * 1e3 * self.detuning_khz

    @property
    def times(self):
        lo, hi, n = self.t_window
        return axis(lo * 1e-6, hi * 1e-6, n)

    def resolved(self):
        d = {}
        for name in OPTIONS:
            v = getattr(self, _dest(name))
            d[name] = list(v) if isinstance(v, tuple) else v
        d["experiment"] = self.experiment
        d["target"] = self.target
        d["config_file"] = self.config_file
        return d


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="flat key = value file; flags override it")
    for name, (kind, _, help_) in OPTIONS.items():
        if kind is _flag:
            common.add_argument(f"--{name}", dest=_dest(name), action="store_const", const=True,
                                default=argparse.SUPPRESS, help=help_)
        else:
            common.add_argument(f"--{name}", dest=_dest(name), type=kind,
                                default=argparse.SUPPRESS, help=help_)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="lyzeros",
        description="Lee-Yang zeros of a trapped-ion phonon mode probed by its spin.",
    )
    parser.add_argument("--version", action="version", version=f"lyzeros {__version__}")
    sub = parser.add_subparsers(dest="experiment", metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
        if name == "reproduce":
            sp.add_argument("target", choices=TARGETS)
    return parser


def _read_config_file(path):
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in OPTIONS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        kind = OPTIONS[key][0]
        try:
            values[key] = kind(val)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    return values


def _validate(cfg):
    def need(ok, key, msg):
        if not ok:
            raise ValidationError(f"{key}: {msg}")

    finite = all(
        math.isfinite(v) for v in (cfg.beta_omega, cfg.eta, cfg.h_r, cfg.omega_khz, cfg.omega_m_khz,
                                   cfg.gamma, cfg.detuning_khz, cfg.sens_halfwidth)
    )
    need(finite, "config", "all numeric values must be finite")
    need(cfg.beta_omega > 0, "beta-omega", "must be > 0")
    need(cfg.eta >= 0, "eta", "must be >= 0")
    need(cfg.nmax >= 0, "nmax", "must be >= 0")
    need(0 <= cfg.nmin <= cfg.nmax, "nmin", "must satisfy 0 <= nmin <= nmax")
    need(cfg.omega_khz > 0, "omega-khz", "must be > 0")
    need(cfg.omega_m_khz > 0, "omega-m-khz", "must be > 0")
    need(cfg.gamma >= 0, "gamma", "must be >= 0")
    need(cfg.detuning_khz >= 0, "detuning-khz", "must be >= 0")
    need(cfg.runs >= 1, "runs", "must be >= 1")
    need(1 <= cfg.n_components <= 8, "n-components", "must be in 1..8")
    need(cfg.starts >= 1, "starts", "must be >= 1")
    for key in ("hr", "bhi", "t-window"):
        lo, hi, n = getattr(cfg, _dest(key))
        need(n >= 1 and hi >= lo, key, "needs count >= 1 and hi >= lo")
    need(cfg.t_window[0] >= 0, "t-window", "times must be >= 0")
    need(0 <= cfg.range[0] < cfg.range[1], "range", "needs 0 <= lo < hi")
    need(cfg.vary[0] != cfg.vary[1] and min(cfg.vary) >= 0 and max(cfg.vary) < cfg.n_components,
         "vary", "needs two distinct component indices below n-components")
    need(cfg.sens_halfwidth > 0, "sens-halfwidth", "must be > 0")
    need(cfg.sens_count >= 1, "sens-count", "must be >= 1")
    if cfg.experiment == "zeros":
        need(cfg.hr[2] >= 16 and cfg.t_window[2] >= 16, "hr/t-window", "zero search needs a 16x16 grid or finer")
        need(cfg.hr[1] > cfg.hr[0] and cfg.t_window[1] > cfg.t_window[0], "hr/t-window",
             "zero search needs a rectangle of positive extent")
    return cfg


def parse_config(argv, config_file=None):
    """Build a :class:`RunConfig` from command-line arguments and an optional file.

    Flags override file values, which override defaults; every defaulted
    key is logged.  Raises :class:`UsageError` or :class:`ValidationError`.
    """
    parser = _build_parser()
    if not argv:
        raise UsageError(parser.format_usage().strip())
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise UsageError("invalid command line") from None
    if not ns.experiment:
        raise UsageError(parser.format_usage().strip())
    given = vars(ns)
    path = given.pop("config", None) or config_file
    file_values = _read_config_file(path) if path else {}

    experiment = given.pop("experiment")
    target = given.pop("target", None)
    given.pop("verbose", None)
    kwargs = {"experiment": experiment, "target": target, "config_file": path}
    defaulted = []
    overrides = EXPERIMENT_DEFAULTS.get(experiment, {})
    for name, (_, default, _) in OPTIONS.items():
        d = _dest(name)
        if d in given:
            kwargs[d] = given[d]
        elif name in file_values:
            kwargs[d] = file_values[name]
        else:
            kwargs[d] = overrides.get(name, default)
            defaulted.append(name)
    cfg = RunConfig(**kwargs, defaulted=defaulted)
    for name in defaulted:
        log.info("defaulted %s = %r", name, getattr(cfg, _dest(name)))
    return _validate(cfg)


# --------------------------------------------------------------------------
# experiments


class _Outputs:
    """Tracks files written into one output directory."""

    def __init__(self, root):
        self.root = Path(root)
        self.files = []

    def path(self, name):
        p = (self.root / name).resolve()
        if self.root.resolve() not in p.parents:
            raise OSError(f"refusing to write outside {self.root}: {name}")
        self.files.append(p)
        return p

    def hashes(self):
        return {str(p.relative_to(self.root.resolve())): lio.sha256_file(p) for p in self.files}


def _template(cfg, beta=None, eta=None, nmax=None):
    return ThermalParams(cfg.beta_omega if beta is None else beta, 0.0,
                         coupling_profile(cfg.eta if eta is None else eta, cfg.nmax if nmax is None else nmax))


def _drive(cfg):
    return DriveParams(cfg.omega_rabi)


def _fit_settings(cfg):
    return FitSettings(n_starts=cfg.starts, workers=default_workers())


def _grid_in_time(template, drive, hr, times, truncate):
    """``Z/Z0`` on an ``(h_r, t)`` grid with ``beta_h_i = Omega t``."""
    lo, hi = drive.omega_rabi * times[0], drive.omega_rabi * times[-1]
    grid = partition_grid(template, hr, (lo, hi, len(times)), allow_truncation=truncate)
    grid.metadata["omega_rabi"] = drive.omega_rabi
    grid.metadata["t_axis"] = list(times)
    return grid


def run_profile(cfg, out):
    prof = coupling_profile(cfg.eta, cfg.nmax)
    lio.write_csv(out.path("profile.csv"), ["n", "xi"], enumerate(prof.xi))


def run_gibbs(cfg, out):
    params = _template(cfg).with_h_r(cfg.h_r)
    dist = gibbs_distribution(params, cfg.truncate)
    lio.write_csv(out.path("gibbs.csv"), ["n", "p", "xi"], zip(range(len(dist)), dist.probs, params.profile.xi))
    lio.write_json(out.path("gibbs.json"), {
        "params": params.as_dict(), "log_z0": log_partition_z0(params),
        "mean_n": dist.mean(), "variance_n": dist.variance(), "tail": dist.tail,
    })


def run_grid(cfg, out):
    grid = partition_grid(_template(cfg), cfg.hr, cfg.bhi, allow_truncation=cfg.truncate)
    lio.write_grid(out.path("grid.csv"), grid)
    out.path("grid.json")


def _zeros(cfg, template, drive, hr=None, tw=None):
    hr = hr or cfg.hr
    tw = tw or cfg.t_window
    return find_zeros(template, drive, hr[:2], (tw[0] * 1e-6, tw[1] * 1e-6),
                      counts=(hr[2], tw[2]), allow_truncation=cfg.truncate)


def run_zeros(cfg, out):
    zeros = _zeros(cfg, _template(cfg), _drive(cfg))
    lio.write_zeros(out.path("zeros.json"), zeros)
    log.info("%d zeros (%d converged)", len(zeros), sum(z.converged for z in zeros))


def _fit(cfg, out, params, prefix):
    target = gibbs_distribution(params, cfg.truncate)
    fit = fit_ensemble(target, cfg.n_components, _fit_settings(cfg), seed=cfg.seed)
    lio.write_json(out.path(f"{prefix}ensemble.json"),
                   lio.ensemble_record(fit.ensemble, fit.fidelity, params.as_dict(), cfg.seed))
    approx = ensemble_distribution(fit.ensemble, params.profile.n_max)
    lio.write_csv(out.path(f"{prefix}distribution.csv"), ["n", "target", "ensemble"],
                  zip(range(len(target)), target.probs, approx.probs))
    return target, fit


def run_fit(cfg, out):
    _fit(cfg, out, _template(cfg).with_h_r(cfg.h_r), "")


def _sensitivity(cfg, out, target, fit, name):
    i, j = cfg.vary
    a = fit.ensemble.alphas
    hw = cfg.sens_halfwidth
    ga = (max(a[i] - hw, 0.0), a[i] + hw, cfg.sens_count)
    gb = (max(a[j] - hw, 0.0), a[j] + hw, cfg.sens_count)
    ax_a, ax_b, fid = fidelity_sensitivity(target, fit.ensemble, (i, j), ga, gb)
    rows = ((x, y, fid[p, q]) for p, x in enumerate(ax_a) for q, y in enumerate(ax_b))
    lio.write_csv(out.path(name), [f"alpha_{i}", f"alpha_{j}", "fidelity"], rows)


def run_sensitivity(cfg, out):
    target, fit = _fit(cfg, out, _template(cfg).with_h_r(cfg.h_r), "")
    _sensitivity(cfg, out, target, fit, "sensitivity.csv")


def run_heating(cfg, out):
    params = _template(cfg).with_h_r(cfg.h_r)
    dist = gibbs_distribution(params, cfg.truncate)
    dz = heating_deviance(dist, cfg.gamma, params.profile, _drive(cfg), cfg.times)
    lio.write_deviance(out.path("heating_deviance.csv"), cfg.times, dz)


def _noise(cfg):
    return NoiseConfig(cfg.gamma, cfg.detuning, cfg.runs, cfg.seed)


def run_detuning(cfg, out):
    params = _template(cfg).with_h_r(cfg.h_r)
    dist = gibbs_distribution(params, cfg.truncate)
    drive = _drive(cfg)
    traj = detuning_average(dist, params.profile, drive, _noise(cfg), cfg.times)
    lio.write_trajectory(out.path("detuning_average.csv"), traj)
    dz = detuning_deviance(dist, params.profile, DriveParams(cfg.omega_rabi, cfg.detuning), cfg.times)
    lio.write_deviance(out.path("detuning_deviance.csv"), cfg.times, dz)


def run_noisy_grid(cfg, out):
    tw = cfg.t_window
    grid = noisy_partition_grid(_template(cfg), _drive(cfg), _noise(cfg), cfg.hr,
                                (tw[0] * 1e-6, tw[1] * 1e-6, tw[2]), allow_truncation=cfg.truncate)
    lio.write_grid(out.path("noisy_grid.csv"), grid)
    out.path("noisy_grid.json")


def _eta_report(cfg, n_min, n_max):
    best = optimize_eta(cfg.range[0], cfg.range[1], n_max=n_max, n_min=n_min)
    return {"n_min": n_min, "n_max": n_max, "eta": best.eta, "min_abs_xi": best.min_abs_xi}


def run_eta_opt(cfg, out):
    main = _eta_report(cfg, cfg.nmin, cfg.nmax)
    diagnostics = []
    if cfg.nmax >= 2:
        diagnostics = [_eta_report(cfg, cfg.nmin, cfg.nmax - 1), _eta_report(cfg, cfg.nmin + 1, cfg.nmax)]
    lio.write_json(out.path("eta_opt.json"), {"range": list(cfg.range), **main, "diagnostics": diagnostics})
    print(f"eta* = {main['eta']:.5f}  min|xi_n| = {main['min_abs_xi']:.6f}  (n in [{cfg.nmin}, {cfg.nmax}])")


# reproduction targets ---------------------------------------------------------

FIG_H_R_SWEEP = np.arange(0.0, 16.0)
FIG_T_BETAS = (2.0, 1.5, 0.8, 0.3)


def auto_nmax(beta_omega, nmax):
    """Fock cutoff large enough for the tail check at temperature ``beta_omega``."""
    return max(nmax, int(math.ceil(32.0 / beta_omega)))


def _fidelity_sweep(cfg, beta, ns, seed):
    template = _template(cfg, beta=beta, nmax=auto_nmax(beta, cfg.nmax))
    rows = []
    for h in FIG_H_R_SWEEP:
        target = gibbs_distribution(template.with_h_r(h), cfg.truncate)
        for n in ns:
            fit = fit_ensemble(target, n, _fit_settings(cfg), seed=seed)
            rows.append((h, n, fit.fidelity, fit.ensemble.alphas.max()))
    return rows


def reproduce_fig1(cfg, out):
    rows = _fidelity_sweep(cfg, cfg.beta_omega, (2, 3), cfg.seed)
    lio.write_csv(out.path("fig1_fidelity.csv"), ["h_r", "n_components", "fidelity", "max_alpha"], rows)
    params = _template(cfg).with_h_r(cfg.h_r)
    target, fit = _fit(cfg, out, params, "fig1_")
    _sensitivity(cfg, out, target, fit, "fig1_sensitivity.csv")


def reproduce_fig2(cfg, out):
    drive = _drive(cfg)
    times = cfg.times
    for eta in (0.15, 0.47):
        # distributions restricted to n <= 20
        template = _template(cfg, eta=eta, nmax=20)
        tag = f"eta{eta:.2f}"
        grid = partition_grid(template, cfg.hr, (drive.omega_rabi * times[0], drive.omega_rabi * times[-1], len(times)),
                              allow_truncation=True)
        lio.write_grid(out.path(f"fig2_grid_{tag}.csv"), grid)
        out.path(f"fig2_grid_{tag}.json")
        dist = gibbs_distribution(template.with_h_r(cfg.h_r), allow_truncation=True)
        xi = template.profile.xi
        lio.write_csv(out.path(f"fig2_distribution_{tag}.csv"), ["n", "p", "rabi_ratio"],
                      zip(range(len(dist)), dist.probs, xi / xi[0]))


def reproduce_fig4(cfg, out):
    template = _template(cfg)
    drive = _drive(cfg)
    grid = _grid_in_time(template, drive, cfg.hr, cfg.times, cfg.truncate)
    lio.write_grid(out.path("fig4_grid.csv"), grid)
    out.path("fig4_grid.json")
    zeros = _zeros(cfg, template, drive, hr=(cfg.hr[0], cfg.hr[1], 16),
                   tw=(cfg.t_window[0], cfg.t_window[1], 81))
    lio.write_zeros(out.path("fig4_zeros.json"), zeros)
    for h in (7.0, 13.0):
        dist = gibbs_distribution(template.with_h_r(h), cfg.truncate)
        traj = spin_coherence(dist, template.profile, drive, cfg.times)
        lio.write_trajectory(out.path(f"fig4_trajectory_hr{h:g}.csv"), traj)


def reproduce_figT(cfg, out):
    drive = _drive(cfg)
    rows = []
    for beta in FIG_T_BETAS:
        template = _template(cfg, beta=beta, nmax=auto_nmax(beta, cfg.nmax))
        grid = _grid_in_time(template, drive, cfg.hr, cfg.times, cfg.truncate)
        lio.write_grid(out.path(f"figT_grid_beta{beta:g}.csv"), grid)
        out.path(f"figT_grid_beta{beta:g}.json")
        rows += [(beta, *r) for r in _fidelity_sweep(cfg, beta, (3,), cfg.seed)]
    lio.write_csv(out.path("figT_fidelity.csv"),
                  ["beta_omega", "h_r", "n_components", "fidelity", "max_alpha"], rows)


def reproduce_fig6(cfg, out):
    template = _template(cfg)
    drive = _drive(cfg)
    times = cfg.times
    tw = (times[0], times[-1], len(times))
    hr, ts, heat, det = deviance_grids(template, drive, cfg.gamma, cfg.detuning, cfg.hr, tw, cfg.truncate)
    for name, vals in (("heating", heat), ("detuning", det)):
        g = ComplexFieldGrid(hr, drive.omega_rabi * ts, vals,
                             {**template.as_dict(), "omega_rabi": drive.omega_rabi,
                              "deviance": name, "gamma": cfg.gamma, "detuning": cfg.detuning})
        lio.write_grid(out.path(f"fig6_deviance_{name}.csv"), g)
        out.path(f"fig6_deviance_{name}.json")
    grid = noisy_partition_grid(template, drive, _noise(cfg), cfg.hr, tw, allow_truncation=cfg.truncate)
    lio.write_grid(out.path("fig6_noisy_grid.csv"), grid)
    out.path("fig6_noisy_grid.json")
    zeros = _zeros(cfg, template, drive, hr=(cfg.hr[0], cfg.hr[1], 16),
                   tw=(cfg.t_window[0], cfg.t_window[1], 81))
    lio.write_zeros(out.path("fig6_zeros_noiseless.json"), zeros)


RUNNERS = {
    "profile": run_profile,
    "gibbs": run_gibbs,
    "grid": run_grid,
    "zeros": run_zeros,
    "fit": run_fit,
    "sensitivity": run_sensitivity,
    "heating": run_heating,
    "detuning": run_detuning,
    "noisy-grid": run_noisy_grid,
    "eta-opt": run_eta_opt,
}
REPRODUCERS = {
    "fig1": reproduce_fig1,
    "fig2": reproduce_fig2,
    "fig4": reproduce_fig4,
    "figT": reproduce_figT,
    "fig6": reproduce_fig6,
}

def _write_hints(out):
    lines = ["# column semantics of the files in this directory"]
    for p in sorted(out.files):
        if p.suffix != ".csv":
            continue
        header = p.read_text(encoding="utf-8").split("\n", 1)[0]
        lines.append(f"{p.name}: columns {header}")
    lio.atomic_write_text(out.path("gnuplot_hints.txt"), "\n".join(lines) + "\n")


def output_dir(cfg):
    if cfg.out:
        return Path(cfg.out)
    root = Path(os.environ.get(ENV_OUTPUT_ROOT, "lyzeros-out"))
    name = cfg.experiment if cfg.experiment != "reproduce" else f"reproduce-{cfg.target}"
    return root / name


def run_experiment(cfg):
    """Run one experiment; returns ``(exit_code, output_dir)``."""
    root = output_dir(cfg)
    out = _Outputs(root)
    start = time.perf_counter()
    try:
        root.mkdir(parents=True, exist_ok=True)
        if cfg.experiment == "reproduce":
            REPRODUCERS[cfg.target](cfg, out)
        else:
            RUNNERS[cfg.experiment](cfg, out)
        if cfg.gnuplot_hints:
            _write_hints(out)
        manifest = {
            "experiment": cfg.experiment,
            "target": cfg.target,
            "version": __version__,
            "seed": cfg.seed,
            "config": cfg.resolved(),
            "defaulted": cfg.defaulted,
            "physical": {
                "omega_rabi_rad_s": cfg.omega_rabi,
                "omega_m_rad_s": 2 * math.pi * 1e3 * cfg.omega_m_khz,
                "detuning_rad_s": cfg.detuning,
                "gamma_quanta_s": cfg.gamma,
            },
            "environment": {k: os.environ.get(k) for k in (ENV_OUTPUT_ROOT, ENV_THREADS)},
            "wall_time_s": time.perf_counter() - start,
            "outputs": out.hashes(),
        }
        lio.write_json(root / "manifest.json", manifest)
        return EXIT_OK, root
    except (InvalidArgumentError, ValidationError) as exc:
        return _fail(root, exc, EXIT_VALIDATION), root
    except (LYZError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(root, exc, EXIT_NUMERICAL), root
    except OSError as exc:
        return _fail(root, exc, EXIT_IO), root


def _fail(root, exc, code):
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record), file=sys.stderr)
    try:
        lio.write_json(Path(root) / "error.json", record)
    except OSError:
        pass
    return code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(level=logging.INFO if ("-v" in argv or "--verbose" in argv) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"lyzeros: usage error: {exc}", file=sys.stderr)
        if not argv:
            _build_parser().print_help(sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(json.dumps({"error": "ValidationError", "message": str(exc), "exit_code": EXIT_VALIDATION}),
              file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    code, root = run_experiment(cfg)
    if code == EXIT_OK:
        print(f"wrote {root}")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
