"""Coherent-state ensembles approximating Fock-diagonal target states.

Only the Fock-diagonal part of a coherent-state mixture reaches the probe
spin, so an ensemble ``sum_i w_i |alpha_i><alpha_i|`` is represented by the
Poisson mixture ``sum_i w_i Poisson(alpha_i**2)``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln, softmax

from .errors import InvalidArgumentError
from .thermal import FockDistribution

__all__ = [
    "MAX_COMPONENTS",
    "CoherentEnsemble",
    "FitSettings",
    "EnsembleFit",
    "poisson_diag",
    "ensemble_distribution",
    "fidelity",
    "fit_ensemble",
    "fidelity_sensitivity",
]

MAX_COMPONENTS = 8


@dataclass(frozen=True)
class CoherentEnsemble:
    """Weights and displacement magnitudes of an N-component mixture.

    Construction canonicalizes: alphas are sorted ascending and the weights
    permuted with them.
    """

    weights: np.ndarray
    alphas: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        a = np.array(self.alphas, dtype=float).ravel()
        if w.size != a.size or w.size < 1:
            raise InvalidArgumentError("weights and alphas must have the same non-zero length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError(f"weights must be >= 0 and sum to 1, got {w}")
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise InvalidArgumentError(f"alphas must be finite and >= 0, got {a}")
        order = np.argsort(a, kind="stable")
        w, a = w[order], a[order]
        w.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "alphas", a)

    @property
    def n(self):
        return self.weights.size

    def as_dict(self):
        return {"weights": self.weights.tolist(), "alphas": self.alphas.tolist()}


def _poisson_rows(alphas, n_max):
    """Unchecked Poisson pmfs ``exp(-a^2) a^(2n) / n!``, one row per alpha."""
    a = np.asarray(alphas, dtype=float)[:, None]
    n = np.arange(n_max + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logq = -a * a + n * np.log(a * a) - gammaln(n + 1)
    # a = 0 gives 0 * -inf at n = 0
    logq[:, 0] = (-a * a)[:, 0]
    return np.exp(logq)


def poisson_diag(alpha, n_max):
    """Fock populations of the coherent state ``|alpha>``."""
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha < 0:
        raise InvalidArgumentError(f"alpha must be finite and >= 0, got {alpha!r}")
    q = _poisson_rows([alpha], n_max)[0]
    return FockDistribution(q).check_tail(what=f"Poisson law at alpha={alpha:g}")


def ensemble_distribution(ens, n_max):
    """Fock populations of a coherent-state mixture."""
    rows = [poisson_diag(a, n_max).probs for a in ens.alphas]
    return FockDistribution(ens.weights @ np.array(rows))


def _probs(x):
    return x.probs if isinstance(x, FockDistribution) else np.asarray(x, dtype=float)


def fidelity(p, q):
    """Classical (Bhattacharyya) fidelity ``(sum_n sqrt(p_n q_n))**2``."""
    p, q = _probs(p), _probs(q)
    if p.shape != q.shape:
        raise InvalidArgumentError(f"length mismatch: {p.shape} vs {q.shape}")
    bc = np.sum(np.sqrt(p * q))
    return float(min(bc * bc, 1.0))


@dataclass(frozen=True)
class FitSettings:
    """Multi-start Nelder-Mead settings for :func:`fit_ensemble`."""

    n_starts: int = 32
    max_iter: int = 2000
    xatol: float = 1e-8
    fatol: float = 1e-15
    workers: int = 1


class EnsembleFit(NamedTuple):
    ensemble: CoherentEnsemble
    fidelity: float


# Unconstrained coordinates: N-1 logits (first logit pinned to 0) then N
# roots u_i with alpha_i = u_i**2.
def _unpack(x, n):
    w = softmax(np.concatenate(([0.0], x[: n - 1])))
    return w, x[n - 1 :] ** 2


def _pack(weights, alphas):
    w = np.clip(np.asarray(weights, dtype=float), 1e-300, None)
    logits = np.log(w[1:]) - np.log(w[0])
    return np.concatenate((logits, np.sqrt(np.asarray(alphas, dtype=float))))


def _objective(x, target, n):
    w, a = _unpack(x, n)
    q = w @ _poisson_rows(a, target.size - 1)
    bc = np.sum(np.sqrt(target * q))
    return -bc * bc


def _local_fit(args):
    x0, target, n, settings = args
    res = minimize(
        _objective,
        x0,
        args=(target, n),
        method="Nelder-Mead",
        options={
            "maxiter": settings.max_iter,
            "maxfev": 10 * settings.max_iter,
            "xatol": settings.xatol,
            "fatol": settings.fatol,
            "adaptive": n > 2,
        },
    )
    w, a = _unpack(res.x, n)
    w = w / w.sum()
    ens = CoherentEnsemble(w, a)
    q = ens.weights @ _poisson_rows(ens.alphas, target.size - 1)
    return ens, fidelity(target, q)


def _modes(p):
    """Local maxima of a distribution, tallest first."""
    padded = np.concatenate(([-1.0], p, [-1.0]))
    idx = [k for k in range(p.size) if padded[k + 1] >= padded[k] and padded[k + 1] > padded[k + 2]]
    return sorted(idx, key=lambda k: -p[k])


def _starts(target, n, n_starts, rng):
    """Initial points around moment-matched and mode-matched alphas."""
    mean = float(np.dot(np.arange(target.size), target))
    cdf = np.cumsum(target)
    quantile_alphas = np.sqrt(
        [np.searchsorted(cdf, (k + 0.5) / n) + 0.0 for k in range(n)]
    )
    centres = [math.sqrt(mean)] + [math.sqrt(m) for m in _modes(target)[:4]]
    centres += list(quantile_alphas)
    starts = [_pack(np.full(n, 1.0 / n), quantile_alphas)]
    while len(starts) < n_starts:
        alphas = rng.choice(centres, size=n) + rng.normal(0.0, 0.5, size=n)
        alphas = np.abs(alphas)
        weights = rng.dirichlet(np.ones(n))
        starts.append(_pack(weights, alphas))
    return starts


def fit_ensemble(target, n_components, settings=None, seed=0):
    """Fit a coherent-state mixture to ``target`` by maximizing fidelity.

    Parameters
    ----------
    target : FockDistribution
        distribution to approximate
    n_components : int
        mixture size N, 1..8
    settings : FitSettings, optional
    seed : int
        seeds the random starting points; equal seeds give identical fits

    Returns
    -------
    EnsembleFit
        best ensemble (canonical form) and its fidelity

    """
    n = int(n_components)
    if n < 1 or n > MAX_COMPONENTS:
        raise InvalidArgumentError(f"n_components must be in 1..{MAX_COMPONENTS}, got {n_components}")
    settings = settings or FitSettings()
    if settings.n_starts < 1:
        raise InvalidArgumentError("n_starts must be >= 1")
    p = _probs(target)
    rng = np.random.default_rng(seed)
    jobs = [(x0, p, n, settings) for x0 in _starts(p, n, settings.n_starts, rng)]
    if settings.workers > 1:
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            results = list(pool.map(_local_fit, jobs))
    else:
        results = [_local_fit(job) for job in jobs]
    # total order: fidelity, then canonical parameters; independent of scheduling
    best = max(
        results,
        key=lambda r: (r[1], tuple(-r[0].alphas), tuple(-r[0].weights)),
    )
    return EnsembleFit(best[0], best[1])


def default_workers():
    """Worker count from ``LYZEROS_THREADS`` (defaults to 1)."""
    try:
        return max(1, int(os.environ.get("LYZEROS_THREADS", "1")))
    except ValueError:
        return 1


def fidelity_sensitivity(target, ens, vary, grid_a, grid_b):
    """Fidelity map with two displacements swept and everything else frozen.

    ``vary = (i, j)`` indexes the canonical (sorted) alphas; ``grid_a`` and
    ``grid_b`` are ``(lo, hi, count)`` for alpha_i and alpha_j.  Returns the
    axes and a ``(count_a, count_b)`` matrix.
    """
    i, j = vary
    if i == j or not (0 <= i < ens.n and 0 <= j < ens.n):
        raise InvalidArgumentError(f"vary must name two distinct components of {ens.n}, got {vary}")
    p = _probs(target)
    n_max = p.size - 1
    ax_a = np.linspace(*grid_a[:2], int(grid_a[2]))
    ax_b = np.linspace(*grid_b[:2], int(grid_b[2]))
    if np.any(ax_a < 0) or np.any(ax_b < 0):
        raise InvalidArgumentError("swept alphas must be >= 0")
    fixed = [k for k in range(ens.n) if k not in (i, j)]
    base = ens.weights[fixed] @ _poisson_rows(ens.alphas[fixed], n_max) if fixed else 0.0
    qa = ens.weights[i] * _poisson_rows(ax_a, n_max)
    qb = ens.weights[j] * _poisson_rows(ax_b, n_max)
    q = base + qa[:, None, :] + qb[None, :, :]
    bc = np.sqrt(p * q).sum(axis=-1)
    return ax_a, ax_b, np.minimum(bc * bc, 1.0)
