"""Marchenko-Pastur law and spectral diagnostics for V'V.

For V with i.i.d. standardized entries and p/n -> t in (0, 1), the spectrum
of V'V/n settles on [a, b] = [(1 - sqrt t)^2, (1 + sqrt t)^2] with density

    f(x) = sqrt((x - a)(b - x)) / (2 pi t x).

Integrals over [a, b] are taken in the angle variable x = a + (b - a) sin^2(theta),
which turns the square-root edge behaviour into a smooth integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

CDF_TABLE_POINTS = 10_000
QUAD_ABS_TOL = 1e-9


@dataclass(frozen=True)
class MPLaw:
    t: float

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise ValueError(f"t must lie in (0, 1), got {self.t}")

    @property
    def a(self):
        return (1.0 - math.sqrt(self.t)) ** 2

    @property
    def b(self):
        return (1.0 + math.sqrt(self.t)) ** 2

    def pdf(self, x):
        return mp_density(x, self.t)

    def cdf_table(self, points=CDF_TABLE_POINTS):
        return mp_cdf_table(self.t, points)


def mp_density(x, t):
    law = MPLaw(t)
    a, b = law.a, law.b
    x = np.asarray(x, dtype=float)
    inside = (x > a) & (x < b)
    xs = np.where(inside, x, 1.0)
    out = np.where(inside, np.sqrt(np.clip((xs - a) * (b - xs), 0.0, None)) / (2.0 * np.pi * t * xs), 0.0)
    return float(out) if out.ndim == 0 else out


def _theta_density(theta, t):
    # f(x(theta)) * dx/dtheta for x = a + (b - a) sin^2 theta
    a, b = (1.0 - math.sqrt(t)) ** 2, (1.0 + math.sqrt(t)) ** 2
    s2, c2 = np.sin(theta) ** 2, np.cos(theta) ** 2
    x = a + (b - a) * s2
    return (b - a) ** 2 * s2 * c2 / (math.pi * t * x)


def mp_moment(t, power):
    """Integral of x^power f(x) over the support, by adaptive quadrature in theta."""
    law = MPLaw(t)
    a, b = law.a, law.b
    val, _ = integrate.quad(
        lambda th: _theta_density(th, t) * (a + (b - a) * math.sin(th) ** 2) ** power,
        0.0, math.pi / 2, epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def mp_cdf_table(t, points=CDF_TABLE_POINTS):
    """(x, F(x)) on ``points`` nodes across [a, b], built from the smooth theta-integrand."""
    law = MPLaw(t)
    theta = np.linspace(0.0, math.pi / 2, points)
    dens = _theta_density(theta, t)
    cdf = integrate.cumulative_simpson(dens, x=theta, initial=0.0)
    cdf /= cdf[-1]
    x = law.a + (law.b - law.a) * np.sin(theta) ** 2
    return x, cdf


def mp_cdf(x, t, table=None):
    xs, fs = mp_cdf_table(t) if table is None else table
    return np.interp(x, xs, fs, left=0.0, right=1.0)


def lemma_b1_closed(t):
    """Closed form of int_a^b x^-2 sqrt((b - x)(x - a)) dx = 2 pi min(1, t) / |1 - t|."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 1.0:
        return math.inf
    return 2.0 * math.pi * min(1.0, t) / abs(1.0 - t)


def lemma_b1_quadrature(t, abs_tol=QUAD_ABS_TOL):
    """The same integral by adaptive quadrature; None at t = 1 where it diverges."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 1.0:
        return None
    if t == 0.0:
        return 0.0
    a, b = (1.0 - math.sqrt(t)) ** 2, (1.0 + math.sqrt(t)) ** 2

    def integrand(th):
        s2 = math.sin(th) ** 2
        x = a + (b - a) * s2
        # sqrt((b-x)(x-a)) dx = 2 (b-a)^2 sin^2 cos^2 dtheta
        return 2.0 * (b - a) ** 2 * s2 * (1.0 - s2) / (x * x)

    val, _ = integrate.quad(integrand, 0.0, math.pi / 2, epsabs=abs_tol * 1e-3,
                            epsrel=1e-13, limit=500)
    return val


def lemma_b1(t):
    """(closed form, quadrature) of the inverse-square Marchenko-Pastur integral."""
    return lemma_b1_closed(t), lemma_b1_quadrature(t)


@dataclass(frozen=True)
class SpectrumReport:
    n: int
    p: int
    t: float
    inv_sum: float
    inv_sum_target: float
    lam_max_n: float
    lam_min_n: float
    lam_max_target: float
    lam_min_target: float
    ks_distance: float | None


def ks_to_mp(nu, t, table=None):
    """Kolmogorov distance between the empirical CDF of ``nu`` and the MP CDF."""
    nu = np.sort(np.asarray(nu, dtype=float))
    m = nu.size
    f = mp_cdf(nu, t, table)
    upper = np.arange(1, m + 1) / m
    lower = np.arange(0, m) / m
    return float(max(np.max(np.abs(upper - f)), np.max(np.abs(f - lower))))


def spectrum_diagnostics(v_spectrum, n, p):
    """Compare the eigenvalues of V'V with their Marchenko-Pastur limits at t = p/n."""
    lam = np.sort(np.asarray(v_spectrum, dtype=float))[::-1]
    if lam.shape != (p,):
        raise ValueError(f"expected {p} eigenvalues")
    if np.any(lam < 0):
        raise ValueError("eigenvalues of V'V must be >= 0")
    t = p / n
    inv_sum = math.inf if lam[-1] == 0 else float(np.sum(1.0 / lam))
    ks = ks_to_mp(lam / n, t) if 0 < t < 1 else None
    return SpectrumReport(
        n=n, p=p, t=t,
        inv_sum=inv_sum,
        inv_sum_target=t / (1.0 - t) if t < 1 else math.inf,
        lam_max_n=float(lam[0] / n),
        lam_min_n=float(lam[-1] / n),
        lam_max_target=(1.0 + math.sqrt(t)) ** 2,
        lam_min_target=(1.0 - math.sqrt(t)) ** 2,
        ks_distance=ks,
    )
