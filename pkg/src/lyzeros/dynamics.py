"""Probe-spin coherence and Lee-Yang zeros in the ``(h_r, t)`` plane.

The imaginary field is the evolution time: a carrier pulse of length ``t``
imprints the phase ``Omega xi_n t`` on Fock level ``n``, so the spin
coherence equals ``Z/Z0`` with ``|beta_h_i| = Omega t``.  Two sign
conventions appear in the literature for the transverse component:

* undetuned path (:func:`spin_coherence`): ``sigma_z + i sigma_y =
  sum_n p_n exp(+i Omega xi_n t)``, i.e. ``Z/Z0`` at ``beta_h_i = -Omega t``;
* detuned path (:func:`detuned_spin`): ``sigma_y`` carries a leading minus
  sign, so at zero detuning ``sigma_z + i sigma_y`` is ``Z/Z0`` at
  ``beta_h_i = +Omega t``.

The two are complex conjugates of each other; zero locations agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .thermal import _exponents, axis, gibbs_matrix

__all__ = [
    "DriveParams",
    "SpinTrajectory",
    "ZeroLocation",
    "spin_coherence",
    "detuned_spin",
    "detuned_components",
    "time_field_map",
    "field_time_map",
    "coherence_grid",
    "partition_jacobian",
    "find_zeros",
]

KHZ = 2e3 * math.pi


@dataclass(frozen=True)
class DriveParams:
    """Carrier drive: Rabi frequency and static detuning (same angular units).

    With ``omega_rabi`` in rad/s, times are seconds; with ``omega_rabi = 1``
    times are the dimensionless ``Omega t``.
    """

    omega_rabi: float
    detuning: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.omega_rabi) or self.omega_rabi <= 0:
            raise InvalidArgumentError(f"omega_rabi must be > 0, got {self.omega_rabi!r}")
        if not math.isfinite(self.detuning):
            raise InvalidArgumentError(f"detuning must be finite, got {self.detuning!r}")

    @classmethod
    def from_khz(cls, rabi_khz, detuning_khz=0.0):
        return cls(rabi_khz * KHZ, detuning_khz * KHZ)


@dataclass(frozen=True)
class SpinTrajectory:
    times: np.ndarray
    sigma_z: np.ndarray
    sigma_y: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.sigma_z) == len(self.sigma_y)):
            raise InvalidArgumentError("times, sigma_z and sigma_y must have equal length")

    @property
    def coherence(self):
        return self.sigma_z + 1j * self.sigma_y


@dataclass(frozen=True)
class ZeroLocation:
    h_r: float
    t: float
    beta_h_i: float
    residual: float
    converged: bool

    def as_dict(self):
        return {
            "h_r": self.h_r,
            "t_seconds": self.t,
            "beta_h_i": self.beta_h_i,
            "residual": self.residual,
            "converged": self.converged,
        }


def _check_lengths(dist, profile):
    if len(dist) != len(profile):
        raise InvalidArgumentError(
            f"distribution length {len(dist)} does not match profile length {len(profile)}"
        )


def spin_coherence(dist, profile, drive, times):
    """Undetuned spin components ``sigma_z, sigma_y`` after a carrier pulse.

    ``sigma_z(t) = sum_n p_n cos(Omega xi_n t)`` and
    ``sigma_y(t) = sum_n p_n sin(Omega xi_n t)``; ``drive.detuning`` is ignored.
    """
    _check_lengths(dist, profile)
    t = np.asarray(times, dtype=float)
    z = np.exp(1j * drive.omega_rabi * np.outer(t, profile.xi)) @ dist.probs
    return SpinTrajectory(t, z.real.copy(), z.imag.copy())


def detuned_components(omega_n, detuning, times):
    """Per-level spin components under a static detuning.

    Returns ``(sz, sy)`` of shape ``(len(times), len(omega_n))`` with
    ``sz = D^2/X^2 + (W^2/X^2) cos(X t)`` and ``sy = -(W/X) sin(X t)``,
    ``X = sqrt(D^2 + W^2)``.  A level with ``X = 0`` does not move.
    """
    w = np.asarray(omega_n, dtype=float)
    x = np.hypot(detuning, w)
    safe = np.where(x > 0, x, 1.0)
    c = np.where(x > 0, w / safe, 0.0)
    d2 = np.where(x > 0, (detuning / safe) ** 2, 1.0)
    xt = np.outer(np.asarray(times, dtype=float), x)
    sz = d2 + c * c * np.cos(xt)
    sy = -c * np.sin(xt)
    return sz, sy


def detuned_spin(dist, profile, drive, times):
    """Spin components with static detuning ``drive.detuning``."""
    _check_lengths(dist, profile)
    t = np.asarray(times, dtype=float)
    sz, sy = detuned_components(drive.omega_rabi * profile.xi, drive.detuning, t)
    return SpinTrajectory(t, sz @ dist.probs, sy @ dist.probs)


def time_field_map(drive, t):
    """Imaginary-field coordinate ``beta_h_i = Omega t`` reached at time ``t``."""
    return drive.omega_rabi * np.asarray(t, dtype=float) if np.ndim(t) else drive.omega_rabi * float(t)


def field_time_map(drive, beta_h_i):
    """Inverse of :func:`time_field_map`."""
    return np.asarray(beta_h_i, dtype=float) / drive.omega_rabi if np.ndim(beta_h_i) else float(beta_h_i) / drive.omega_rabi


def coherence_grid(template, drive, h_r_axis, times, allow_truncation=False):
    """Undetuned coherence ``sum_n p_n exp(i Omega xi_n t)`` for every ``(h_r, t)``."""
    probs = gibbs_matrix(template, h_r_axis, allow_truncation)
    phasors = np.exp(1j * drive.omega_rabi * np.outer(template.profile.xi, times))
    return probs @ phasors


def _unnormalized(template, h_r, tau):
    """Shifted unnormalized ``Z`` and its partials in ``(h_r, tau = Omega t)``.

    ``Z = sum_n exp(-b (n + h_r xi_n)) exp(i xi_n tau)``, scaled by a positive
    constant depending only on ``h_r``; the Newton step and the zero set
    are unchanged by that scale.  Also returns the scale-free ``|Z/Z0|``.
    """
    params = template.with_h_r(h_r)
    e = _exponents(params)
    w = np.exp(e - e.max())
    xi = template.profile.xi
    terms = w * np.exp(1j * xi * tau)
    z = terms.sum()
    dz_dh = -template.beta_omega * np.dot(xi, terms)
    dz_dtau = 1j * np.dot(xi, terms)
    return z, dz_dh, dz_dtau, abs(z) / w.sum()


def partition_jacobian(template, h_r, tau):
    """Jacobian of ``(h_r, tau) -> (Re Z, Im Z)`` for the unnormalized ``Z``.

    ``Z`` is the raw sum ``sum_n exp(-b (n + h_r xi_n) + i xi_n tau)``
    (no shift), so the result can be compared against finite differences
    of :func:`unnormalized_z`.
    """
    xi = template.profile.xi
    n = np.arange(xi.size)
    terms = np.exp(-template.beta_omega * (n + h_r * xi) + 1j * xi * tau)
    dz_dh = -template.beta_omega * np.dot(xi, terms)
    dz_dtau = 1j * np.dot(xi, terms)
    return np.array([[dz_dh.real, dz_dtau.real], [dz_dh.imag, dz_dtau.imag]])


def unnormalized_z(template, h_r, tau):
    """Raw ``Z = sum_n exp(-b (n + h_r xi_n) + i xi_n tau)``."""
    xi = template.profile.xi
    n = np.arange(xi.size)
    return complex(np.exp(-template.beta_omega * (n + h_r * xi) + 1j * xi * tau).sum())


def _newton(template, h_r, tau, tol, max_iter, bounds):
    """Damped Newton on ``(h_r, tau) -> (Re Z, Im Z)``."""
    (h_lo, h_hi), (t_lo, t_hi) = bounds
    z, dh, dt, res = _unnormalized(template, h_r, tau)
    for _ in range(max_iter):
        if res <= tol * 1e-4:
            break
        jac = np.array([[dh.real, dt.real], [dh.imag, dt.imag]])
        try:
            step = np.linalg.solve(jac, [-z.real, -z.imag])
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        while lam > 1e-4:
            h_new, t_new = h_r + lam * step[0], tau + lam * step[1]
            z2, dh2, dt2, res2 = _unnormalized(template, h_new, t_new)
            if res2 < res:
                break
            lam *= 0.5
        else:
            break
        h_r, tau, z, dh, dt, res = h_new, t_new, z2, dh2, dt2, res2
        # far outside the search window means it left this candidate's basin
        if not (h_lo - 1 <= h_r <= h_hi + 1 and t_lo - 1 <= tau <= t_hi + 1):
            break
    return h_r, tau, res


def _candidates(values):
    """Grid cells worth refining: shallow local minima of |Z| and double sign changes."""
    mag = np.abs(values)
    nh, nt = mag.shape
    found = set()
    padded = np.pad(mag, 1, constant_values=np.inf)
    neigh = np.min(
        [padded[1 + di : 1 + di + nh, 1 + dj : 1 + dj + nt]
         for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)],
        axis=0,
    )
    for i, j in zip(*np.nonzero((mag <= neigh) & (mag < 0.1))):
        found.add((float(i), float(j)))
    if nh > 1 and nt > 1:
        re, im = values.real, values.imag

        def changes(a):
            corners = np.stack([a[:-1, :-1], a[1:, :-1], a[:-1, 1:], a[1:, 1:]])
            return (corners.min(axis=0) <= 0) & (corners.max(axis=0) >= 0)

        for i, j in zip(*np.nonzero(changes(re) & changes(im))):
            found.add((i + 0.5, j + 0.5))
    return sorted(found)


def find_zeros(template, drive, h_r_range, t_range, counts=(151, 401), tol=1e-8,
               max_iter=50, allow_truncation=False):
    """Locate zeros of ``Z/Z0`` over a rectangle of ``(h_r, t)``.

    Parameters
    ----------
    template : ThermalParams
        temperature and coupling profile (its ``h_r`` is ignored)
    drive : DriveParams
        Rabi frequency; ``t`` is in the matching time unit
    h_r_range, t_range : tuple
        ``(lo, hi)`` bounds of the search rectangle
    counts : tuple
        coarse grid size ``(n_h_r, n_t)``, each >= 16
    tol : float
        ``|Z/Z0|`` below which a refined point counts as converged

    Returns
    -------
    list of ZeroLocation
        sorted by ``h_r`` then ``t``; candidates whose Newton iteration
        fails are kept with ``converged=False``

    """
    n_h, n_t = (int(c) for c in counts)
    if n_h < 16 or n_t < 16:
        raise InvalidArgumentError(f"coarse grid must be at least 16x16, got {counts}")
    h_lo, h_hi = (float(v) for v in h_r_range)
    t_lo, t_hi = (float(v) for v in t_range)
    if not (h_lo < h_hi and t_lo < t_hi):
        raise InvalidArgumentError("search rectangle must have positive extent")
    om = drive.omega_rabi
    hr = axis(h_lo, h_hi, n_h)
    ts = axis(t_lo, t_hi, n_t)
    values = coherence_grid(template, drive, hr, ts, allow_truncation)
    dh, dtau = hr[1] - hr[0], (ts[1] - ts[0]) * om
    tau_lo, tau_hi = t_lo * om, t_hi * om
    bounds = ((h_lo, h_hi), (tau_lo, tau_hi))

    zeros = []
    for fi, fj in _candidates(values):
        h0 = h_lo + fi * dh
        tau0 = tau_lo + fj * dtau
        h, tau, res = _newton(template, h0, tau0, tol, max_iter, bounds)
        converged = res <= tol
        if converged and not (h_lo <= h <= h_hi and tau_lo <= tau <= tau_hi):
            continue
        if not converged:
            h, tau = h0, tau0
        zeros.append(ZeroLocation(float(h), tau / om, float(tau), float(res), bool(converged)))

    # keep the best representative of every half-cell cluster
    zeros.sort(key=lambda z: (not z.converged, z.residual, z.h_r, z.t))
    kept = []
    for z in zeros:
        if any(abs(z.h_r - k.h_r) < dh / 2 and abs(z.beta_h_i - k.beta_h_i) < dtau / 2 for k in kept):
            continue
        kept.append(z)
    return sorted(kept, key=lambda z: (z.h_r, z.t))
