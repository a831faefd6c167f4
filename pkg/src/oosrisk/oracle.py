"""Brute-force Monte Carlo estimates of the closed-form quantities.

Nothing here calls the series engine or the risk formulas; these are the
independent checks those formulas are tested against.  Replications are
grouped into fixed blocks and block ``b`` draws from
``default_rng([seed, b])``, so results depend only on (seed, reps) and never
on how many threads computed them.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .linmodel import DegenerateDesignError, draw_v, entry_law, sample_design

BLOCK = 4096


@dataclass(frozen=True)
class McEstimate:
    mean: float
    se: float
    reps: int
    seed: int
    var: float = float("nan")

    @classmethod
    def from_samples(cls, samples, seed):
        samples = np.asarray(samples, dtype=float)
        m = samples.size
        var = float(np.var(samples, ddof=1))
        return cls(mean=float(np.mean(samples)), se=float(np.sqrt(var / m)),
                   reps=m, seed=seed, var=var)

    def z(self, value):
        """Standardized distance of ``value`` from the estimate."""
        return (self.mean - value) / self.se if self.se > 0 else np.inf * (self.mean != value)

    def covers(self, value, k=4.0):
        return abs(self.mean - value) <= k * self.se


def _blocked(fn, reps, seed, threads=1):
    """Run fn(rng, size) over blocks and stack the per-replication outputs in block order."""
    sizes = [BLOCK] * (reps // BLOCK)
    if reps % BLOCK:
        sizes.append(reps % BLOCK)

    def run(b):
        return fn(np.random.default_rng([seed, b]), sizes[b])

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    return np.concatenate(parts, axis=-1)


def mc_risk(c, design, sigma_cov, beta, reps=100_000, seed=0, threads=1):
    """Simulated (rho1, rho2) of beta_hat(c) for a fixed design."""
    if reps < 100:
        raise ValueError("reps must be >= 100")
    x = design.x
    n, p = x.shape
    sigma_cov = np.asarray(sigma_cov, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (p,) or sigma_cov.shape != (p, p):
        raise ValueError("beta / covariance dimensions do not match the design")
    try:
        factor = linalg.cho_factor(x.T @ x, lower=True)
    except linalg.LinAlgError as exc:
        raise DegenerateDesignError("singular Gram matrix") from exc
    xb = x @ beta

    def block(rng, m):
        u = rng.standard_normal((m, n))
        y = xb[None, :] + u
        b_ml = linalg.cho_solve(factor, x.T @ y.T).T         # m x p
        fit = b_ml @ x.T                                      # rows are X b_ml
        norm2 = np.einsum("ij,ij->i", fit, fit)
        b_c = (1.0 - c * p / norm2)[:, None] * b_ml
        err = b_c - beta[None, :]
        xe = err @ x.T
        in_sample = np.einsum("ij,ij->i", xe, xe) / n
        out_sample = np.einsum("ij,jk,ik->i", err, sigma_cov, err)
        return np.vstack([in_sample, out_sample])

    draws = _blocked(block, reps, seed, threads)
    return McEstimate.from_samples(draws[0], seed), McEstimate.from_samples(draws[1], seed)


def mc_inv_moment(k, lam, order, reps=10**7, seed=0, threads=1):
    """Simulated E[(1 / chi2_k(lam))^order] from |Z + mu|^2 with |mu|^2 = lam.

    mu is placed on the first coordinate; the remaining k - 1 squared
    standard normals are drawn as one central chi-square.
    """
    if k <= 2 * order:
        raise ValueError(f"E[chi2^-{order}] is infinite for k={k}")
    if reps < 10_000:
        raise ValueError("reps must be >= 10^4")
    if lam < 0:
        raise ValueError("noncentrality must be >= 0")
    shift = np.sqrt(lam)

    def block(rng, m):
        z = rng.standard_normal(m) + shift
        q = z * z + rng.chisquare(k - 1, m)
        return q ** (-order)

    return McEstimate.from_samples(_blocked(block, reps, seed, threads), seed)


@dataclass(frozen=True)
class UnconditionalResult:
    js: McEstimate
    ml: McEstimate
    diff: McEstimate
    skipped: int

    @property
    def combined_se(self):
        return float(np.hypot(self.js.se, self.ml.se))


def mc_unconditional(c, n, p, sigma_cov, beta, reps_design=200, reps_noise=0, seed=0):
    """Risks of beta_hat(c) and ML averaged over Gaussian designs with rows N(0, Sigma).

    With ``reps_noise == 0`` each design's risks come from the exact
    conditional formulas; otherwise from ``mc_risk`` with that many draws.
    Degenerate design draws are skipped and counted.
    """
    from .risk_exact import ml_risks, shrink_risk_out

    if reps_design < 50:
        raise ValueError("reps_design must be >= 50")
    sigma_cov = np.asarray(sigma_cov, dtype=float)
    js, ml = [], []
    skipped = 0
    for i in range(reps_design):
        try:
            design = sample_design(n, p, sigma_cov, "normal", seed=[seed, i])
        except DegenerateDesignError:
            skipped += 1
            continue
        if reps_noise:
            r_c = mc_risk(c, design, sigma_cov, beta, reps_noise, seed=seed + i)[1].mean
            r_ml = mc_risk(0.0, design, sigma_cov, beta, reps_noise, seed=seed + i)[1].mean
        else:
            r_c = shrink_risk_out(c, design, sigma_cov, beta)
            r_ml = ml_risks(design, sigma_cov)[1]
        js.append(r_c)
        ml.append(r_ml)
    js, ml = np.array(js), np.array(ml)
    return UnconditionalResult(
        js=McEstimate.from_samples(js, seed),
        ml=McEstimate.from_samples(ml, seed),
        diff=McEstimate.from_samples(js - ml, seed),
        skipped=skipped,
    )


def mc_quadratic_form(unit_w, n, p, law="normal", reps=1000, seed=0):
    """Simulated w'V'Vw/n over design draws; ``var`` holds the empirical variance."""
    w = np.asarray(unit_w, dtype=float)
    if w.shape != (p,):
        raise ValueError(f"w must have length {p}")
    if abs(np.linalg.norm(w) - 1.0) > 1e-10:
        raise ValueError("w must be a unit vector")
    if reps < 100:
        raise ValueError("reps must be >= 100")
    law = entry_law(law)
    vals = np.empty(reps)
    for r in range(reps):
        vw = draw_v(n, p, law, np.random.default_rng([seed, r])) @ w
        vals[r] = vw @ vw / n
    return McEstimate.from_samples(vals, seed)
