"""Carrier coupling profile beyond the Lamb-Dicke regime.

The carrier Rabi frequency of Fock level ``n`` is ``Omega * xi_n`` with

    xi_n = exp(-eta**2 / 2) * L_n(eta**2),

``L_n`` being the ordinary Laguerre polynomial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgumentError

__all__ = [
    "CouplingProfile",
    "EtaOptimum",
    "laguerre",
    "laguerre_sequence",
    "coupling_profile",
    "min_abs_coupling",
    "optimize_eta",
]


def _check_x(x):
    if not math.isfinite(x) or x < 0:
        raise InvalidArgumentError(f"x must be finite and >= 0, got {x!r}")


def laguerre_sequence(n_max, x):
    """Laguerre polynomials ``L_0(x) .. L_{n_max}(x)`` by upward recurrence.

    Parameters
    ----------
    n_max : int
        highest order, >= 0
    x : float
        evaluation point, finite and >= 0

    Returns
    -------
    numpy.ndarray
        shape (n_max + 1,)

    """
    if int(n_max) != n_max or n_max < 0:
        raise InvalidArgumentError(f"n_max must be an integer >= 0, got {n_max!r}")
    x = float(x)
    _check_x(x)
    n_max = int(n_max)
    out = np.empty(n_max + 1)
    out[0] = 1.0
    if n_max == 0:
        return out
    out[1] = 1.0 - x
    # (n+1) L_{n+1} = (2n+1-x) L_n - n L_{n-1}
    for n in range(1, n_max):
        out[n + 1] = ((2 * n + 1 - x) * out[n] - n * out[n - 1]) / (n + 1)
    return out


def laguerre(n, x):
    """Laguerre polynomial ``L_n(x)`` via the three-term recurrence."""
    if int(n) != n or n < 0:
        raise InvalidArgumentError(f"n must be an integer >= 0, got {n!r}")
    return float(laguerre_sequence(int(n), x)[-1])


@dataclass(frozen=True)
class CouplingProfile:
    """Dimensionless carrier couplings ``xi_n = Omega_n / Omega``.

    Attributes
    ----------
    eta : float
        Lamb-Dicke parameter
    n_max : int
        highest Fock index included
    xi : numpy.ndarray
        couplings for ``n = 0..n_max``

    """

    eta: float
    n_max: int
    xi: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if xi.shape != (self.n_max + 1,):
            raise InvalidArgumentError(
                f"xi must have length n_max + 1 = {self.n_max + 1}, got {xi.shape}"
            )
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    def __len__(self):
        return self.n_max + 1

    def truncated(self, n_max):
        """Profile restricted to ``n = 0..n_max``."""
        if n_max > self.n_max:
            raise InvalidArgumentError(f"cannot extend profile from {self.n_max} to {n_max}")
        return CouplingProfile(self.eta, n_max, self.xi[: n_max + 1].copy())


def coupling_profile(eta, n_max=63):
    """Build the coupling profile ``xi_n = exp(-eta^2/2) L_n(eta^2)``."""
    eta = float(eta)
    if not math.isfinite(eta):
        raise InvalidArgumentError(f"eta must be finite, got {eta!r}")
    if int(n_max) != n_max or n_max < 0:
        raise InvalidArgumentError(f"n_max must be an integer >= 0, got {n_max!r}")
    x = eta * eta
    xi = math.exp(-x / 2.0) * laguerre_sequence(int(n_max), x)
    return CouplingProfile(eta, int(n_max), xi)


def min_abs_coupling(eta, n_max, n_min=0):
    """Smallest ``|xi_n|`` over ``n_min <= n <= n_max``."""
    return float(np.min(np.abs(coupling_profile(eta, n_max).xi[n_min:])))


class EtaOptimum(NamedTuple):
    eta: float
    min_abs_xi: float


def optimize_eta(eta_lo, eta_hi, n_max=20, n_min=0, coarse_step=1e-3, fine_step=1e-5):
    """Find the eta maximizing the weakest carrier coupling.

    The objective ``min_n |xi_n(eta)|`` has kinks wherever the active ``n``
    switches or a coupling crosses zero, so a dense scan locates the basin
    and a finer scan around the best node refines it.

    Parameters
    ----------
    eta_lo, eta_hi : float
        search interval, ``0 <= eta_lo < eta_hi``
    n_max : int
        highest Fock level included in the minimum
    n_min : int
        lowest Fock level included in the minimum

    Returns
    -------
    EtaOptimum
        ``(eta, min_abs_xi)``

    """
    eta_lo, eta_hi = float(eta_lo), float(eta_hi)
    if not (math.isfinite(eta_lo) and math.isfinite(eta_hi)) or not 0 <= eta_lo < eta_hi:
        raise InvalidArgumentError(f"need 0 <= eta_lo < eta_hi, got [{eta_lo}, {eta_hi}]")
    if n_max < 1 or not 0 <= n_min <= n_max:
        raise InvalidArgumentError(f"need n_max >= 1 and 0 <= n_min <= n_max, got {n_min}, {n_max}")

    def scan(lo, hi, step):
        count = max(2, int(math.ceil((hi - lo) / step)) + 1)
        etas = np.linspace(lo, hi, count)
        vals = np.array([min_abs_coupling(e, n_max, n_min) for e in etas])
        # first maximum wins ties, keeps the scan deterministic
        k = int(np.argmax(vals))
        return etas, k, vals[k]

    etas, k, _ = scan(eta_lo, eta_hi, coarse_step)
    lo = etas[max(k - 1, 0)]
    hi = etas[min(k + 1, len(etas) - 1)]
    fine, j, best = scan(lo, hi, fine_step)
    return EtaOptimum(float(fine[j]), float(best))
