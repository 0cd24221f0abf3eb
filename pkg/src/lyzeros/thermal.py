"""Gibbs states of ``H_S + h_R H_I`` and the normalized partition function.

All quantities are dimensionless: ``beta_omega`` is the inverse temperature
in units of the trap frequency, ``h_r`` the real field over the trap
frequency and ``beta_h_i`` the imaginary field times the inverse
temperature.  With ``H_S = omega_m a^dag a`` and ``H_I = sum_n xi_n |n><n|``
both diagonal, the normalized partition function is

    Z / Z0 = sum_n p_n exp(-i beta_h_i xi_n)

where ``p_n`` is the Gibbs distribution at zero imaginary field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .coupling import CouplingProfile
from .errors import InvalidArgumentError, TruncationError

__all__ = [
    "TAIL_TOLERANCE",
    "FockDistribution",
    "ThermalParams",
    "ComplexFieldGrid",
    "gibbs_distribution",
    "log_partition_z0",
    "partition_value",
    "partition_grid",
    "axis",
]

TAIL_TOLERANCE = 1e-10


@dataclass(frozen=True)
class FockDistribution:
    """Probability vector over phonon number ``n = 0..n_max``.

    ``truncated`` marks distributions that were deliberately cut off and
    renormalized, for which the tail condition is not enforced.
    """

    probs: np.ndarray
    truncated: bool = False

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise InvalidArgumentError("probs must be a non-empty 1-d sequence")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise InvalidArgumentError("probs must be finite and non-negative")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.probs.size

    @property
    def n_max(self):
        return self.probs.size - 1

    @property
    def tail(self):
        return float(self.probs[-1])

    def mean(self):
        return float(np.dot(np.arange(self.probs.size), self.probs))

    def variance(self):
        n = np.arange(self.probs.size)
        m = self.mean()
        return float(np.dot((n - m) ** 2, self.probs))

    def check_tail(self, tol=TAIL_TOLERANCE, what="distribution"):
        """Raise :class:`TruncationError` if the last level holds more than ``tol``."""
        if not self.truncated and self.tail > tol:
            raise TruncationError(
                f"{what}: p[n_max={self.n_max}] = {self.tail:.3g} exceeds {tol:g}; raise n_max"
            )
        return self

    def padded(self, n_max):
        """Same distribution on ``0..n_max`` (``n_max`` >= current)."""
        if n_max < self.n_max:
            raise InvalidArgumentError(f"cannot pad from {self.n_max} down to {n_max}")
        p = np.zeros(n_max + 1)
        p[: self.probs.size] = self.probs
        return FockDistribution(p, self.truncated)


@dataclass(frozen=True)
class ThermalParams:
    beta_omega: float
    h_r: float
    profile: CouplingProfile

    def __post_init__(self):
        b = float(self.beta_omega)
        if not math.isfinite(b) or b <= 0:
            raise InvalidArgumentError(f"beta_omega must be finite and > 0, got {self.beta_omega!r}")
        if not math.isfinite(float(self.h_r)):
            raise InvalidArgumentError(f"h_r must be finite, got {self.h_r!r}")
        object.__setattr__(self, "beta_omega", b)
        object.__setattr__(self, "h_r", float(self.h_r))

    def with_h_r(self, h_r):
        return ThermalParams(self.beta_omega, h_r, self.profile)

    def as_dict(self):
        return {
            "beta_omega": self.beta_omega,
            "h_r": self.h_r,
            "eta": self.profile.eta,
            "n_max": self.profile.n_max,
        }


def _exponents(params):
    n = np.arange(params.profile.n_max + 1)
    return -params.beta_omega * (n + params.h_r * params.profile.xi)


def log_partition_z0(params):
    """``log Z0`` with ``Z0 = sum_n exp(-beta_omega (n + h_r xi_n))`` on the truncated space.

    Only ratios ``Z / Z0`` are physical; this raw truncated sum is the
    convention used for ``Z0`` everywhere in the package.
    """
    return float(logsumexp(_exponents(params)))


def gibbs_distribution(params, allow_truncation=False):
    """Gibbs weights ``p_n ~ exp(-beta_omega (n + h_r xi_n))``.

    Parameters
    ----------
    params : ThermalParams
    allow_truncation : bool
        when True the distribution is renormalized on ``0..n_max`` and
        marked ``truncated``; otherwise a populated last level raises
        :class:`TruncationError`

    """
    e = _exponents(params)
    w = np.exp(e - e.max())
    dist = FockDistribution(w / w.sum(), truncated=allow_truncation)
    return dist.check_tail(what=f"Gibbs state at h_r={params.h_r:g}")


def _phasor_sum(probs, xi, beta_h_i):
    b = np.asarray(beta_h_i, dtype=float)
    val = np.exp(-1j * np.multiply.outer(b, xi)) @ probs
    return complex(val) if b.ndim == 0 else val


def partition_value(params, beta_h_i, allow_truncation=False):
    """Normalized partition function ``Z/Z0`` at imaginary field ``beta_h_i``.

    ``beta_h_i`` may be a scalar or an array; the result has the same shape.
    """
    p = gibbs_distribution(params, allow_truncation).probs
    return _phasor_sum(p, params.profile.xi, beta_h_i)


def axis(lo, hi, count):
    """Inclusive, uniformly spaced axis; a single sample sits at ``lo``."""
    count = int(count)
    if count < 1:
        raise InvalidArgumentError(f"axis count must be >= 1, got {count}")
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InvalidArgumentError(f"axis bounds must be finite, got ({lo}, {hi})")
    if count == 1:
        return np.array([float(lo)])
    return np.linspace(float(lo), float(hi), count)


@dataclass
class ComplexFieldGrid:
    """Samples of ``Z/Z0`` on a rectangle of the complex field plane.

    ``values[i, j]`` belongs to ``h_r_axis[i]`` and ``h_i_axis[j]``, where the
    second axis is ``beta_h_i``.
    """

    h_r_axis: np.ndarray
    h_i_axis: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (len(self.h_r_axis), len(self.h_i_axis)):
            raise InvalidArgumentError(
                f"values shape {self.values.shape} does not match axes "
                f"({len(self.h_r_axis)}, {len(self.h_i_axis)})"
            )

    @property
    def shape(self):
        return self.values.shape


def gibbs_matrix(template, h_r_axis, allow_truncation=False):
    """Gibbs distributions for every ``h_r`` in ``h_r_axis``, one per row."""
    rows = []
    for h in h_r_axis:
        params = template.with_h_r(h)
        try:
            rows.append(gibbs_distribution(params, allow_truncation).probs)
        except TruncationError as exc:
            raise TruncationError(f"grid column h_r={h:g}: {exc}") from exc
    return np.array(rows)


def partition_grid(template, h_r_range, beta_h_i_range, allow_truncation=False):
    """Evaluate ``Z/Z0`` on a Cartesian ``(h_r, beta_h_i)`` grid.

    Parameters
    ----------
    template : ThermalParams
        temperature and coupling profile; its ``h_r`` is ignored
    h_r_range, beta_h_i_range : tuple
        ``(lo, hi, count)`` for each axis

    """
    hr = axis(*h_r_range)
    bhi = axis(*beta_h_i_range)
    probs = gibbs_matrix(template, hr, allow_truncation)
    phasors = np.exp(-1j * np.outer(template.profile.xi, bhi))
    meta = template.as_dict()
    meta.pop("h_r")
    meta["allow_truncation"] = bool(allow_truncation)
    return ComplexFieldGrid(hr, bhi, probs @ phasors, meta)
