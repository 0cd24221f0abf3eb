"""Anomalous heating and shot-to-shot detuning noise.

Heating
    The Lindblad equation with jump operators ``sqrt(gamma) a`` and
    ``sqrt(gamma) a^dag`` maps Fock-diagonal states to Fock-diagonal states,
    and the coupling Hamiltonian is diagonal in ``n``, so populations obey
    the closed birth-death chain

        dp_n/dt = gamma [(n+1) p_{n+1} + n p_{n-1} - (2n+1) p_n].

    It is integrated with classical RK4.  The upward flux out of the top
    level is accumulated as leaked mass and checked against a tolerance.

Detuning
    Each experimental run draws a static detuning ``Delta ~ N(0, sigma^2)``.
    Run ``k`` uses its own generator, ``numpy.random.Generator(PCG64(
    SeedSequence(seed, spawn_key=(k,))))``, and takes one variate from its
    ``standard_normal`` (ziggurat) method, scaled by ``sigma``.  The average
    is therefore independent of the order in which runs are evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import SpinTrajectory, _check_lengths, detuned_components
from .errors import InvalidArgumentError, TruncationError
from .thermal import ComplexFieldGrid, FockDistribution, axis, gibbs_matrix

__all__ = [
    "LEAK_TOLERANCE",
    "NoiseConfig",
    "birth_death_rhs",
    "heating_evolve",
    "heating_series",
    "heating_deviance",
    "detuning_samples",
    "detuning_runs",
    "detuning_average",
    "detuning_deviance",
    "noisy_partition_value",
    "noisy_partition_grid",
    "deviance_grids",
]

LEAK_TOLERANCE = 1e-8


@dataclass(frozen=True)
class NoiseConfig:
    """Noise settings.

    Attributes
    ----------
    gamma : float
        heating rate, quanta per unit time
    sigma_delta : float
        standard deviation of the shot-to-shot detuning (angular units)
    n_runs : int
        number of simulated experimental runs
    seed : int

    """

    gamma: float = 0.0
    sigma_delta: float = 0.0
    n_runs: int = 100
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise InvalidArgumentError(f"gamma must be >= 0, got {self.gamma!r}")
        if not (math.isfinite(self.sigma_delta) and self.sigma_delta >= 0):
            raise InvalidArgumentError(f"sigma_delta must be >= 0, got {self.sigma_delta!r}")
        if int(self.n_runs) != self.n_runs or self.n_runs < 1:
            raise InvalidArgumentError(f"n_runs must be an integer >= 1, got {self.n_runs!r}")

    def as_dict(self):
        return {"gamma": self.gamma, "sigma_delta": self.sigma_delta,
                "n_runs": int(self.n_runs), "seed": int(self.seed)}


def birth_death_rhs(p, gamma):
    """Time derivative of the populations; also returns the leak rate out of the top level."""
    n = np.arange(p.size)
    dp = -(2 * n + 1) * p
    dp[:-1] += n[1:] * p[1:]          # (n+1) p_{n+1}
    dp[1:] += n[1:] * p[:-1]          # n p_{n-1}
    return gamma * dp, gamma * p.size * p[-1]


def _rk4(p, gamma, duration, max_step):
    """Integrate ``duration`` in equal RK4 steps no longer than ``max_step``."""
    if duration <= 0:
        return p, 0.0
    steps = max(1, math.ceil(duration / max_step))
    h = duration / steps
    leak = 0.0
    for _ in range(steps):
        k1, l1 = birth_death_rhs(p, gamma)
        k2, l2 = birth_death_rhs(p + 0.5 * h * k1, gamma)
        k3, l3 = birth_death_rhs(p + 0.5 * h * k2, gamma)
        k4, l4 = birth_death_rhs(p + h * k3, gamma)
        p = p + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        leak += h / 6 * (l1 + 2 * l2 + 2 * l3 + l4)
    return p, leak


def _step_bound(gamma, n_max):
    return 0.1 / (gamma * (2 * n_max + 1))


def _prepare(dist, gamma, n_max_evolve):
    if not (math.isfinite(gamma) and gamma >= 0):
        raise InvalidArgumentError(f"gamma must be >= 0, got {gamma!r}")
    n_max_evolve = dist.n_max if n_max_evolve is None else int(n_max_evolve)
    if n_max_evolve < dist.n_max:
        raise InvalidArgumentError(
            f"n_max_evolve={n_max_evolve} is smaller than the input n_max={dist.n_max}"
        )
    return dist.padded(n_max_evolve).probs.copy(), n_max_evolve


def _finish(p, leak, dist):
    if leak > LEAK_TOLERANCE:
        raise TruncationError(
            f"heating leaked {leak:.3g} of probability past n_max={p.size - 1}; raise n_max_evolve"
        )
    if p.min() < -1e-12:
        raise ArithmeticError(f"heating produced a negative population {p.min():.3g}")
    return FockDistribution(np.clip(p, 0.0, None), dist.truncated)


def heating_evolve(dist, gamma, t, n_max_evolve=None, max_step=None):
    """Populations after heating at rate ``gamma`` for time ``t``.

    Parameters
    ----------
    dist : FockDistribution
    gamma : float
        heating rate (quanta per unit time)
    t : float
        duration, >= 0
    n_max_evolve : int, optional
        size of the evolved Fock space; defaults to the input size
    max_step : float, optional
        RK4 step cap; the default ``0.1 / (gamma (2 n_max_evolve + 1))``
        is also an upper bound

    """
    if not (math.isfinite(t) and t >= 0):
        raise InvalidArgumentError(f"t must be >= 0, got {t!r}")
    p, n_max_evolve = _prepare(dist, gamma, n_max_evolve)
    if gamma == 0 or t == 0:
        return FockDistribution(p, dist.truncated)
    h = _step_bound(gamma, n_max_evolve)
    if max_step is not None:
        h = min(h, max_step)
    p, leak = _rk4(p, gamma, t, h)
    return _finish(p, leak, dist)


def heating_series(dist, gamma, times, n_max_evolve=None):
    """Heated populations at every entry of ``times``, shape ``(len(times), n_max_evolve + 1)``.

    Marches once through the sorted times, so the cost is that of a single
    integration to ``max(times)``.
    """
    times = np.asarray(times, dtype=float)
    if times.size and (times.min() < 0 or not np.all(np.isfinite(times))):
        raise InvalidArgumentError("times must be finite and >= 0")
    p, n_max_evolve = _prepare(dist, gamma, n_max_evolve)
    out = np.empty((times.size, p.size))
    if gamma == 0:
        out[:] = p
        return out
    h = _step_bound(gamma, n_max_evolve)
    order = np.argsort(times, kind="stable")
    now, leak = 0.0, 0.0
    for k in order:
        p, dl = _rk4(p, gamma, times[k] - now, h)
        leak += dl
        now = times[k]
        out[k] = _finish(p, leak, dist).probs
    return out


def heating_deviance(dist, gamma, profile, drive, times):
    """Change of ``Z/Z0`` caused by heating during the probe pulse.

    Returns ``sum_n (p_n(t) - p_n(0)) exp(i Omega xi_n t)`` for every ``t``,
    the state at time ``t`` having been heated for ``t``.  The evolved Fock
    space is the profile's.
    """
    if len(dist) > len(profile):
        raise InvalidArgumentError("profile must cover the distribution")
    times = np.asarray(times, dtype=float)
    heated = heating_series(dist, gamma, times, profile.n_max)
    dp = heated - dist.padded(profile.n_max).probs
    phase = np.exp(1j * drive.omega_rabi * np.outer(times, profile.xi))
    return np.sum(dp * phase, axis=1)


def detuning_samples(cfg):
    """The ``n_runs`` detunings drawn for ``cfg`` (one independent stream per run)."""
    out = np.empty(int(cfg.n_runs))
    for k in range(out.size):
        ss = np.random.SeedSequence(int(cfg.seed), spawn_key=(k,))
        out[k] = np.random.Generator(np.random.PCG64(ss)).standard_normal()
    return cfg.sigma_delta * out


def _averaged_components(omega_n, detunings, times):
    """Mean over detunings of the per-level components, shape ``(len(times), levels)``."""
    sz = np.zeros((len(times), len(omega_n)))
    sy = np.zeros_like(sz)
    for d in detunings:
        a, b = detuned_components(omega_n, d, times)
        sz += a
        sy += b
    return sz / len(detunings), sy / len(detunings)


def detuning_runs(dist, profile, drive, cfg, times):
    """Per-run spin components, each of shape ``(n_runs, len(times))``."""
    _check_lengths(dist, profile)
    times = np.asarray(times, dtype=float)
    omega_n = drive.omega_rabi * profile.xi
    deltas = detuning_samples(cfg)
    zs = np.empty((deltas.size, times.size))
    ys = np.empty_like(zs)
    for k, d in enumerate(deltas):
        a, b = detuned_components(omega_n, d, times)
        zs[k] = a @ dist.probs
        ys[k] = b @ dist.probs
    return zs, ys


def detuning_average(dist, profile, drive, cfg, times):
    """Spin components averaged over ``cfg.n_runs`` Gaussian detunings.

    ``drive.detuning`` is ignored; detunings come from ``cfg``.  With
    ``sigma_delta = 0`` every run is identical and a single undetuned run is
    evaluated, so the result equals :func:`detuned_spin` exactly.
    """
    _check_lengths(dist, profile)
    times = np.asarray(times, dtype=float)
    deltas = detuning_samples(cfg) if cfg.sigma_delta > 0 else np.zeros(1)
    sz, sy = _averaged_components(drive.omega_rabi * profile.xi, deltas, times)
    return SpinTrajectory(times, sz @ dist.probs, sy @ dist.probs)


def detuning_deviance(dist, profile, drive, times):
    """Change of ``sigma_z + i sigma_y`` caused by the fixed detuning ``drive.detuning``."""
    _check_lengths(dist, profile)
    omega_n = drive.omega_rabi * profile.xi
    sz, sy = detuned_components(omega_n, drive.detuning, times)
    z0, y0 = detuned_components(omega_n, 0.0, times)
    return (sz - z0 + 1j * (sy - y0)) @ dist.probs


def noisy_partition_value(template, drive, cfg, h_r, t, allow_truncation=False):
    """Noisy ``sigma_z + i sigma_y`` at a single ``(h_r, t)``; see :func:`noisy_partition_grid`."""
    xi = template.profile.xi
    deltas = detuning_samples(cfg) if cfg.sigma_delta > 0 else np.zeros(1)
    sz, sy = _averaged_components(drive.omega_rabi * xi, deltas, [t])
    p = gibbs_matrix(template, [h_r], allow_truncation)[0]
    heated = heating_evolve(FockDistribution(p, allow_truncation), cfg.gamma, t)
    return complex(np.dot(heated.probs, sz[0] + 1j * sy[0]))


def noisy_partition_grid(template, drive, cfg, h_r_range, t_range, allow_truncation=False):
    """``sigma_z + i sigma_y`` on an ``(h_r, t)`` grid with heating and detuning noise.

    Every column starts from its Gibbs state, is heated for the duration of
    each grid time, and is read out through the detuning-averaged spin
    components.  The second axis of the returned grid is ``beta_h_i = Omega t``;
    with zero noise the values equal :func:`partition_grid` there.

    Parameters
    ----------
    h_r_range, t_range : tuple
        ``(lo, hi, count)``

    """
    hr = axis(*h_r_range)
    ts = axis(*t_range)
    xi = template.profile.xi
    deltas = detuning_samples(cfg) if cfg.sigma_delta > 0 else np.zeros(1)
    sz, sy = _averaged_components(drive.omega_rabi * xi, deltas, ts)
    readout = sz + 1j * sy                      # (times, levels)
    probs = gibbs_matrix(template, hr, allow_truncation)
    values = np.empty((hr.size, ts.size), dtype=complex)
    for i, p in enumerate(probs):
        heated = heating_series(FockDistribution(p, allow_truncation), cfg.gamma, ts)
        values[i] = np.sum(heated * readout, axis=1)
    meta = template.as_dict()
    meta.pop("h_r")
    meta.update({"omega_rabi": drive.omega_rabi, "t_axis": ts.tolist(), "noise": cfg.as_dict(),
                 "allow_truncation": bool(allow_truncation)})
    return ComplexFieldGrid(hr, drive.omega_rabi * ts, values, meta)


def deviance_grids(template, drive, gamma, detuning, h_r_range, t_range, allow_truncation=False):
    """Heating-only and fixed-detuning deviance of ``Z/Z0`` on an ``(h_r, t)`` grid.

    Both grids use the undetuned sign convention of :func:`heating_deviance`
    for the heating part; the detuning grid is the difference of the
    detuned and undetuned readouts.  Returns ``(hr, ts, heating, detuning)``.
    """
    hr = axis(*h_r_range)
    ts = axis(*t_range)
    profile = template.profile
    probs = gibbs_matrix(template, hr, allow_truncation)
    heat = np.empty((hr.size, ts.size), dtype=complex)
    phase = np.exp(1j * drive.omega_rabi * np.outer(ts, profile.xi))
    for i, p in enumerate(probs):
        heated = heating_series(FockDistribution(p, allow_truncation), gamma, ts)
        heat[i] = np.sum((heated - p) * phase, axis=1)
    omega_n = drive.omega_rabi * profile.xi
    sz, sy = detuned_components(omega_n, detuning, ts)
    z0, y0 = detuned_components(omega_n, 0.0, ts)
    det = probs @ (sz - z0 + 1j * (sy - y0)).T
    return hr, ts, heat, det
