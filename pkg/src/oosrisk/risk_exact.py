"""Exact in-sample and out-of-sample risks, conditional on the design.

The shrinkage estimator is

    beta_hat(c) = [1 - c p / (beta_ml' X'X beta_ml)] beta_ml,

with c = (p - 2)/p giving James-Stein and c = 0 giving maximum likelihood.
Both risks reduce to inverse moments of noncentral chi-squares whose
noncentrality is beta' X'X beta.  With T = trace(Sigma (X'X)^{-1}),
g = c^2 p^2 + 4 c p and lam = beta' X'X beta,

    rho1(c) = p/n - [2cp(p-2) - c^2 p^2] E[1/chi2_p(lam)] / n
    rho2(c) = T [1 - 2cp E[1/chi2_p(lam)] + g E[1/chi2_{p+2}(lam)^2]]
              + g (beta' Sigma beta) E[1/chi2_{p+4}(lam)^2]
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import linalg

from .chisq_moments import inv_moment

# Test hook: set to -1 to flip the sign of the cross term in rho2.  Used to
# check that the verification suite detects a wrong risk formula.
_CROSS_TERM_SIGN = 1.0


def js_c(p):
    """Tuning parameter of the classical James-Stein estimator."""
    return (p - 2) / p


def resolve_c(c, p):
    if isinstance(c, str):
        if c.lower() != "js":
            raise ValueError(f"c must be a number or 'js', got {c!r}")
        return js_c(p)
    c = float(c)
    if c < 0:
        raise ValueError(f"c must be >= 0, got {c}")
    return c


@dataclass(frozen=True)
class ShrinkageConfig:
    c: float

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("c must be >= 0")

    @classmethod
    def james_stein(cls, p):
        return cls(js_c(p))


@dataclass(frozen=True)
class RiskReport:
    rho1_ml: float
    rho1_c: float
    rho2_ml: float
    rho2_c: float
    rel_oos: float
    ncp: float
    snr: float

    def to_dict(self):
        return asdict(self)


def trace_sigma_gram_inv(gram, sigma_cov):
    """trace(Sigma (X'X)^{-1}) via a Cholesky solve against Sigma's columns."""
    factor = linalg.cho_factor(gram, lower=True)
    return float(np.trace(linalg.cho_solve(factor, sigma_cov)))


def ml_risks(design, sigma_cov, n=None, p=None):
    """(p/n, trace(Sigma (X'X)^{-1})) for the maximum-likelihood estimator."""
    n = design.n if n is None else n
    p = design.p if p is None else p
    if design.x.shape != (n, p):
        raise ValueError("design does not match (n, p)")
    return p / n, trace_sigma_gram_inv(design.gram, np.asarray(sigma_cov, dtype=float))


def shrink_risk_in(c, n, p, ncp):
    """In-sample risk of beta_hat(c); depends on beta and X only through ncp = beta'X'X beta."""
    if p < 3:
        raise ValueError("p must be >= 3")
    if c < 0 or ncp < 0:
        raise ValueError("c and ncp must be >= 0")
    if c == 0:
        return p / n
    m1 = inv_moment(p, ncp, 1)
    return p / n - (2 * c * p * (p - 2) - c**2 * p**2) * m1 / n


def shrink_risk_out_from_invariants(c, p, trace_term, ncp, snr):
    """Out-of-sample risk from (trace(Sigma(X'X)^-1), beta'X'X beta, beta'Sigma beta)."""
    if p < 3:
        raise ValueError("p must be >= 3")
    if c < 0:
        raise ValueError("c must be >= 0")
    if c == 0:
        return trace_term
    g = c**2 * p**2 + 4 * c * p
    m1 = inv_moment(p, ncp, 1)
    m2 = inv_moment(p + 2, ncp, 2)
    m4 = inv_moment(p + 4, ncp, 2)
    return (trace_term * (1.0 - _CROSS_TERM_SIGN * 2 * c * p * m1 + g * m2)
            + g * snr * m4)


def _invariants(design, sigma_cov, beta):
    sigma_cov = np.asarray(sigma_cov, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (design.p,) or sigma_cov.shape != (design.p, design.p):
        raise ValueError("beta / covariance dimensions do not match the design")
    xb = design.x @ beta
    return float(xb @ xb), float(beta @ sigma_cov @ beta)


def shrink_risk_out(c, design, sigma_cov, beta):
    """Out-of-sample risk rho2 of beta_hat(c) given the design X."""
    ncp, snr = _invariants(design, sigma_cov, beta)
    trace_term = trace_sigma_gram_inv(design.gram, np.asarray(sigma_cov, dtype=float))
    return shrink_risk_out_from_invariants(c, design.p, trace_term, ncp, snr)


def relative_oos(c, design, sigma_cov, beta):
    _, rho2_ml = ml_risks(design, sigma_cov)
    return shrink_risk_out(c, design, sigma_cov, beta) / rho2_ml


def risk_report(c, design, sigma_cov, beta):
    n, p = design.n, design.p
    ncp, snr = _invariants(design, sigma_cov, beta)
    rho1_ml, rho2_ml = ml_risks(design, sigma_cov)
    rho2_c = shrink_risk_out_from_invariants(c, p, rho2_ml, ncp, snr)
    return RiskReport(
        rho1_ml=rho1_ml,
        rho1_c=shrink_risk_in(c, n, p, ncp),
        rho2_ml=rho2_ml,
        rho2_c=rho2_c,
        rel_oos=rho2_c / rho2_ml,
        ncp=ncp,
        snr=snr,
    )
