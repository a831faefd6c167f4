"""Gaussian linear model instances and random designs X = V Sigma^{1/2}."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateDesignError(RuntimeError):
    """Raised when repeated design draws give a numerically singular Gram matrix."""


# name -> (sampler, E[V^4])
ENTRY_LAWS = {
    "normal": (lambda rng, size: rng.standard_normal(size), 3.0),
    "rademacher": (lambda rng, size: rng.choice(np.array([-1.0, 1.0]), size=size), 1.0),
    "uniform": (lambda rng, size: rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=size), 1.8),
}
_ALIASES = {
    "standard-normal": "normal",
    "centered-uniform-scaled": "uniform",
}
MAX_DRAWS = 3


def entry_law(name):
    key = _ALIASES.get(name, name)
    if key not in ENTRY_LAWS:
        raise ValueError(f"unknown entry law {name!r}; choose from {sorted(ENTRY_LAWS)}")
    return key


def fourth_moment(name):
    return ENTRY_LAWS[entry_law(name)][1]


def check_covariance(sigma_cov, p=None):
    sigma_cov = np.asarray(sigma_cov, dtype=float)
    if sigma_cov.ndim != 2 or sigma_cov.shape[0] != sigma_cov.shape[1]:
        raise ValueError(f"covariance must be square, got shape {sigma_cov.shape}")
    if p is not None and sigma_cov.shape[0] != p:
        raise ValueError(f"covariance is {sigma_cov.shape[0]}x{sigma_cov.shape[0]}, expected p={p}")
    scale = np.max(np.abs(sigma_cov))
    if np.max(np.abs(sigma_cov - sigma_cov.T)) > 1e-12 * max(scale, 1.0):
        raise ValueError("covariance is not symmetric")
    eig = np.linalg.eigvalsh(sigma_cov)
    if eig[-1] <= 0 or eig[0] <= 1e-10 * eig[-1]:
        raise ValueError("covariance is not positive definite")
    return sigma_cov


def check_dims(n, p):
    if int(n) != n or int(p) != p:
        raise ValueError("n and p must be integers")
    if not n >= p >= 3:
        raise ValueError(f"need n >= p >= 3, got n={n}, p={p}")


def sym_sqrt(a):
    """Symmetric square root of an SPD matrix via its eigendecomposition."""
    vals, vecs = np.linalg.eigh(a)
    return (vecs * np.sqrt(vals)) @ vecs.T


@dataclass(frozen=True)
class ModelSpec:
    n: int
    p: int
    sigma_cov: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        check_dims(self.n, self.p)
        object.__setattr__(self, "sigma_cov", check_covariance(self.sigma_cov, self.p))
        beta = np.asarray(self.beta, dtype=float)
        if beta.shape != (self.p,):
            raise ValueError(f"beta must have shape ({self.p},), got {beta.shape}")
        object.__setattr__(self, "beta", beta)

    @property
    def snr(self):
        """beta' Sigma beta."""
        return float(self.beta @ self.sigma_cov @ self.beta)


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """A realized design with its Gram matrix and the ordered spectrum of X'X/n.

    ``nu`` is ascending and ``w[:, i]`` is the unit eigenvector for ``nu[i]``.
    ``v`` is the standardized design when the matrix was drawn as V Sigma^{1/2}.
    """

    x: np.ndarray
    gram: np.ndarray = field(init=False)
    nu: np.ndarray = field(init=False)
    w: np.ndarray = field(init=False)
    v: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2:
            raise ValueError("design must be a 2-d array")
        gram = x.T @ x
        gram = 0.5 * (gram + gram.T)
        nu, w = np.linalg.eigh(gram / x.shape[0])
        if nu[0] <= 1e-12 * nu[-1]:
            raise DegenerateDesignError("Gram matrix is rank deficient")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "w", w)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]

    def vgram_spectrum(self):
        """Eigenvalues of V'V in descending order (requires ``v``)."""
        if self.v is None:
            raise ValueError("design was not built from a standardized V")
        return np.linalg.eigvalsh(self.v.T @ self.v)[::-1]


@dataclass(frozen=True)
class ResponseVector:
    y: np.ndarray
    seed: int | None


def draw_v(n, p, law, rng):
    sampler = ENTRY_LAWS[entry_law(law)][0]
    return sampler(rng, (n, p))


def sample_design(n, p, sigma_cov=None, entry_law="normal", seed=None, v=None):
    """Draw X = V Sigma^{1/2} with i.i.d. standardized entries in V.

    ``v`` bypasses sampling (used by tests to force a known V).  Degenerate
    Gram matrices are redrawn up to ``MAX_DRAWS`` times.
    """
    check_dims(n, p)
    sigma_cov = np.eye(p) if sigma_cov is None else check_covariance(sigma_cov, p)
    root = sym_sqrt(sigma_cov)
    if v is not None:
        v = np.asarray(v, dtype=float)
        if v.shape != (n, p):
            raise ValueError(f"v must have shape ({n}, {p}), got {v.shape}")
        return DesignMatrix(v @ root, v=v)
    rng = np.random.default_rng(seed)
    for _ in range(MAX_DRAWS):
        v = draw_v(n, p, entry_law, rng)
        try:
            return DesignMatrix(v @ root, v=v)
        except DegenerateDesignError:
            continue
    raise DegenerateDesignError(f"{MAX_DRAWS} consecutive degenerate design draws")


def sample_response(spec, design, seed=None, u=None):
    """Y = X beta + u with u ~ N(0, I_n); ``u`` overrides the noise draw."""
    if design.x.shape != (spec.n, spec.p):
        raise ValueError(f"design shape {design.x.shape} does not match (n, p)=({spec.n}, {spec.p})")
    if u is None:
        u = np.random.default_rng(seed).standard_normal(spec.n)
    else:
        u = np.asarray(u, dtype=float)
        if u.shape != (spec.n,):
            raise ValueError("noise vector has the wrong length")
    return ResponseVector(design.x @ spec.beta + u, seed)


def beta_along_eigvec(design, sigma_cov, index, target):
    """beta = s * w_index (1-based, ascending eigenvalues) scaled so beta' Sigma beta = target."""
    p = design.p
    if not 1 <= index <= p:
        raise IndexError(f"eigenvector index must lie in [1, {p}], got {index}")
    if target < 0:
        raise ValueError("target must be >= 0")
    sigma_cov = np.asarray(sigma_cov, dtype=float)
    w = design.w[:, index - 1]
    q = float(w @ sigma_cov @ w)
    return np.sqrt(target / q) * w
