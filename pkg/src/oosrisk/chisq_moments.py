"""Inverse moments of the noncentral chi-square distribution.

A noncentral chi-square with ``k`` degrees of freedom and noncentrality
``lam`` is a central chi-square with ``k + 2J`` degrees of freedom, where
``J ~ Poisson(lam / 2)``.  Since the central inverse moments are

    E[(1 / chi2_k)^m] = prod_{i=1..m} 1 / (k - 2i),      k > 2m,

the noncentral ones are the Poisson mixture of these terms.  The series is
summed outward from the Poisson mode with log-space weights, so very large
noncentralities (lam in the millions) do not underflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

DEFAULT_TOL = 1e-12
_CHUNK = 256


@dataclass(frozen=True)
class InvMomentQuery:
    k: int
    lam: float
    order: int = 1
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError(f"order must be 1 or 2, got {self.order}")
        if int(self.k) != self.k:
            raise ValueError(f"k must be an integer, got {self.k}")
        if self.k <= 2 * self.order:
            raise ValueError(
                f"E[chi2^-{self.order}] is infinite for k={self.k}; need k > {2 * self.order}"
            )
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"noncentrality must be finite and >= 0, got {self.lam}")
        if not 0 < self.tol <= 1e-6:
            raise ValueError(f"tol must lie in (0, 1e-6], got {self.tol}")


def central_inv_moment(k, order):
    """prod_{i=1..order} 1/(k - 2i); the lam = 0 value."""
    out = 1.0
    for i in range(1, order + 1):
        out /= k - 2 * i
    return out


def _terms(k, order, j):
    out = np.ones(j.shape, dtype=float)
    for i in range(1, order + 1):
        out /= k + 2.0 * j - 2 * i
    return out


def _log_pois(j, mu):
    # log of the Poisson(mu) pmf at integer j >= 0
    if mu == 0.0:
        return np.where(j == 0, 0.0, -np.inf)
    return j * np.log(mu) - mu - special.gammaln(j + 1.0)


def _inv_moment(k, lam, order, tol):
    if lam == 0.0:
        return central_inv_moment(k, order)
    mu = lam / 2.0
    mode = int(np.floor(mu))
    f0 = central_inv_moment(k, order)
    chunk = max(_CHUNK, int(4.0 * np.sqrt(mu)))
    total = 0.0
    lo = mode      # next index to include on the left is lo - 1
    hi = mode - 1  # last included index on the right
    left_done = right_done = False
    while not (left_done and right_done):
        if not right_done:
            j = np.arange(hi + 1, hi + 1 + chunk, dtype=float)
            total += float(np.sum(np.exp(_log_pois(j, mu)) * _terms(k, order, j)))
            hi += chunk
            # terms decrease in j, so term(hi + 1) bounds every remaining one
            rest = special.pdtrc(hi, mu) * _terms(k, order, np.array([hi + 1.0]))[0]
            right_done = rest <= 0.5 * tol * total
        if not left_done:
            if lo <= 0:
                left_done = True
                continue
            start = max(lo - chunk, 0)
            j = np.arange(start, lo, dtype=float)
            total += float(np.sum(np.exp(_log_pois(j, mu)) * _terms(k, order, j)))
            lo = start
            # the largest term left of lo is the j = 0 term
            rest = special.pdtr(lo - 1, mu) * f0 if lo > 0 else 0.0
            left_done = rest <= 0.5 * tol * total
    return total


def inv_moment(query_or_k, lam=None, order=1, tol=DEFAULT_TOL):
    """E[(1 / chi2_k(lam))^order] for order in {1, 2}.

    Accepts either an :class:`InvMomentQuery` or ``(k, lam, order, tol)``.
    """
    q = query_or_k if isinstance(query_or_k, InvMomentQuery) else InvMomentQuery(
        int(query_or_k), float(lam), int(order), float(tol))
    return _inv_moment(q.k, float(q.lam), q.order, q.tol)


def moment_ratio(k, lam, order=1, tol=DEFAULT_TOL):
    """(k + lam)^order * E[(1 / chi2_k(lam))^order], which tends to 1 as k + lam grows."""
    return (k + lam) ** order * inv_moment(k, lam, order, tol)
