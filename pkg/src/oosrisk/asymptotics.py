"""Large-n limits of the out-of-sample risk and the worst-case phase diagram.

Here p/n -> t in [0, 1) and beta' Sigma beta -> delta2 in [0, inf].  The
typical-design limit of rho2(c) is ``r_limit``; the limit of the supremum of
rho2(c) over beta is the supremum over delta2 of ``R_limit``, which differs
only by the factor (1 - sqrt(t))^2 in the last denominator.  The ML risk
tends to t / (1 - t) in both cases.

``delta2 = math.inf`` is a legal argument everywhere; both limit functions
equal t / (1 - t) there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chisq_moments import inv_moment

INF = math.inf
GRID_POINTS = 1025
U_TOL = 1e-10
GAP_TOL = 1e-9

FAILS = "worst-case-fails"
HOLDS = "worst-case-holds"

_INVGOLD = (math.sqrt(5.0) - 1.0) / 2.0


def _check_t(t):
    if not 0.0 <= t < 1.0:
        raise ValueError(f"t must lie in [0, 1), got {t}")


def _check_c(c):
    if c < 0:
        raise ValueError(f"c must be >= 0, got {c}")


@dataclass(frozen=True)
class AsymptoticRegime:
    t: float
    delta2: float
    c: float

    def __post_init__(self):
        _check_t(self.t)
        _check_c(self.c)
        if not (self.delta2 >= 0):
            raise ValueError("delta2 must be >= 0 or inf")

    def r(self):
        return r_limit(self.delta2, self.c, self.t)

    def R(self):
        return R_limit(self.delta2, self.c, self.t)


def ml_limit(t):
    _check_t(t)
    return t / (1.0 - t)


def _limit(delta2, c, t, worst):
    _check_t(t)
    _check_c(c)
    if delta2 < 0:
        raise ValueError("delta2 must be >= 0")
    if math.isinf(delta2):
        return t / (1.0 - t)
    denom = t + delta2
    if denom == 0.0:
        # t/(t + delta2) is read as 0 when both vanish
        return 0.0
    share = t / denom
    last = c**2 * share * share * delta2
    if worst:
        last /= (1.0 - math.sqrt(t)) ** 2
    return t / (1.0 - t) * (1.0 - c * share) ** 2 + last


def r_limit(delta2, c, t):
    """Probability limit of rho2(beta_hat(c)) for a fixed beta with beta'Sigma beta -> delta2."""
    return _limit(delta2, c, t, worst=False)


def R_limit(delta2, c, t):
    """Worst-direction analogue of r_limit; its supremum over delta2 is the sup-risk limit."""
    return _limit(delta2, c, t, worst=True)


def golden_max(f, lo, hi, tol=U_TOL, max_iter=200):
    """Maximize a unimodal f on [lo, hi] by golden-section search; returns (x, f(x))."""
    a, b = lo, hi
    x1 = b - _INVGOLD * (b - a)
    x2 = a + _INVGOLD * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVGOLD * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVGOLD * (b - a)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def _u_to_delta2(u):
    return INF if u >= 1.0 else u / (1.0 - u)


def maximize_over_delta2(g, grid_points=GRID_POINTS, tol=U_TOL, g_grid=None):
    """Supremum of g over delta2 in [0, inf] with delta2 = u / (1 - u).

    A uniform grid in u seeds a golden-section refinement between the
    neighbours of the best grid point.  Ties with the value at infinity
    resolve to infinity.  ``g_grid``, if given, evaluates g on an array of
    u values at once.  Returns (value, argmax delta2).
    """
    u = np.linspace(0.0, 1.0, grid_points)
    if g_grid is not None:
        vals = np.asarray(g_grid(u), dtype=float)
    else:
        vals = np.array([g(_u_to_delta2(ui)) for ui in u])
    i = int(np.argmax(vals))
    best_u, best = float(u[i]), float(vals[i])
    lo, hi = float(u[max(i - 1, 0)]), float(u[min(i + 1, grid_points - 1)])
    ur, vr = golden_max(lambda x: g(_u_to_delta2(x)), lo, hi, tol)
    if vr > best:
        best_u, best = ur, vr
    at_inf = float(vals[-1])
    if best <= at_inf:
        return at_inf, INF
    return best, _u_to_delta2(best_u)


def sup_R(c, t, grid_points=GRID_POINTS):
    """(sup over delta2 of R_limit(., c, t), argmax delta2); the argmax may be inf."""
    _check_t(t)
    _check_c(c)
    return maximize_over_delta2(lambda d2: R_limit(d2, c, t), grid_points,
                                g_grid=lambda u: _R_limit_u(u, c, t))


def _R_limit_u(u, c, t):
    # R_limit on an array of u = delta2 / (1 + delta2), u = 1 meaning delta2 = inf
    u = np.asarray(u, dtype=float)
    out = np.full(u.shape, t / (1.0 - t))
    fin = u < 1.0
    d2 = u[fin] / (1.0 - u[fin])
    denom = t + d2
    with np.errstate(invalid="ignore", divide="ignore"):
        share = np.where(denom > 0, t / denom, 0.0)
        last = c**2 * share * share * d2 / (1.0 - math.sqrt(t)) ** 2
    out[fin] = t / (1.0 - t) * (1.0 - c * share) ** 2 + last
    return out


def delta_hat_plug_in(y, c, n, p):
    """Plug-in signal estimate max(Y'Y/n - 1, 0) and the risk estimate r(., c, p/n)."""
    y = np.asarray(getattr(y, "y", y), dtype=float)
    if not n > p >= 3:
        raise ValueError(f"need n > p >= 3, got n={n}, p={p}")
    if y.shape != (n,):
        raise ValueError(f"response must have length n={n}")
    d2 = max(float(y @ y) / n - 1.0, 0.0)
    return d2, r_limit(d2, c, p / n)


def finite_sup_risk_at(d2, c, trace_inv, lam_min, n, p):
    """The finite-sample worst-case risk R*(d2, c, n, p) given tr((V'V)^-1) and lambda_min(V'V/n)."""
    if math.isinf(d2):
        return trace_inv
    g = c**2 * p**2 + 4 * c * p
    if g == 0.0:
        return trace_inv
    lam = n * d2
    m1 = inv_moment(p, lam, 1)
    m2 = inv_moment(p + 2, lam, 2)
    m4 = inv_moment(p + 4, lam, 2)
    return trace_inv * (1.0 - 2 * c * p * m1 + g * m2) + g * d2 * m4 / lam_min


def finite_sup_risk(c, v_spectrum, n, p, grid_points=GRID_POINTS):
    """Maximize R*(d2, c, n, p) over d2 >= 0; ``v_spectrum`` holds the eigenvalues of V'V."""
    _check_c(c)
    spec = np.asarray(v_spectrum, dtype=float)
    if spec.shape != (p,):
        raise ValueError(f"expected {p} eigenvalues, got shape {spec.shape}")
    if p < 3:
        raise ValueError("p must be >= 3")
    if np.min(spec) <= 0:
        raise ValueError("V'V has a zero eigenvalue")
    trace_inv = float(np.sum(1.0 / spec))
    lam_min = float(np.min(spec)) / n
    return maximize_over_delta2(
        lambda d2: finite_sup_risk_at(d2, c, trace_inv, lam_min, n, p), grid_points)


@dataclass(frozen=True)
class PhaseVerdict:
    c: float
    t: float
    region: str
    sup_R: float
    ml_limit: float
    gap: float
    epsilon: float | None
    pointwise_safe: bool


def failure_threshold(c):
    """Smallest t above which the worst-case comparison fails (0 for c > 2, 1 for c = 0)."""
    _check_c(c)
    if c > 2:
        return 0.0
    return ((c - 2.0) / (c + 2.0)) ** 2


def analytic_region(c, t):
    _check_t(t)
    if 0 < c <= 2 and t > failure_threshold(c):
        return FAILS
    if c > 2 and t > 0:
        return FAILS
    return HOLDS


def phase_classify(c, t, grid_points=GRID_POINTS):
    """Classify (c, t) by the closed-form boundary and attach the numeric sup-risk gap.

    Raises RuntimeError if the numeric gap contradicts the boundary by more
    than ``GAP_TOL``.
    """
    region = analytic_region(c, t)
    sup_val, _ = sup_R(c, t, grid_points)
    base = ml_limit(t)
    gap = sup_val - base
    if abs(gap) > GAP_TOL and (gap > 0) != (region == FAILS):
        raise RuntimeError(f"numeric supremum disagrees with the boundary at c={c}, t={t}: gap={gap}")
    eps = gap / 2.0 if gap > 0 and region == FAILS else None
    return PhaseVerdict(
        c=float(c), t=float(t), region=region, sup_R=sup_val, ml_limit=base,
        gap=gap, epsilon=eps, pointwise_safe=c <= 2,
    )
