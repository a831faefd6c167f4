"""Command-line harness: figure1 | phase | risk | rmt-check | verify.

Exit codes: 0 success, 1 verification failure, 2 configuration or I/O
error, 3 degenerate numerical instance.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import asymptotics, oracle, rmt
from .chisq_moments import inv_moment
from .linmodel import (
    DegenerateDesignError, ModelSpec, beta_along_eigvec, fourth_moment,
    sample_design, sample_response,
)
from .risk_exact import js_c, ml_risks, resolve_c, risk_report, shrink_risk_out_from_invariants

log = logging.getLogger("oosrisk")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DEGENERATE = 0, 1, 2, 3

FIGURE1_COLUMNS = ["curve_id", "eigen_index", "eigenvalue", "snr", "rho2_js", "rho2_ml",
                   "ratio_finite", "ratio_asymptotic"]
PHASE_COLUMNS = ["c", "t", "region", "sup_R", "ml_limit", "gap", "epsilon"]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    seed: int = 20240101
    n: int = 200
    p: int = 160
    c: object = "js"
    sigma: str = "identity"
    # figure1
    snr_min: float = 0.01
    snr_max: float = 10_000.0
    snr_points: int = 241
    snr_log: bool = True
    eigen_indices: list | None = None
    asymptotic_c: object = None
    # phase
    c_min: float = 0.0
    c_max: float = 3.0
    t_min: float = 0.0
    t_max: float = 0.95
    phase_points: int = 60
    # risk
    snr: float = 1.0
    beta_index: int | None = None
    verify: bool = False
    # rmt-check
    rmt_t_grid: list = field(default_factory=lambda: [0.1, 0.25, 0.5, 0.9])
    rmt_n: int = 2000
    rmt_t: float = 0.5
    # shared
    reps: int = 20_000
    out: str | None = None
    threads: int = 1

    def validate(self):
        if not self.n >= self.p >= 3:
            raise ConfigError(f"need n >= p >= 3, got n={self.n}, p={self.p}")
        try:
            resolve_c(self.c, self.p)
            if self.asymptotic_c is not None:
                resolve_c(self.asymptotic_c, self.p)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.snr_points < 1 or self.phase_points < 1:
            raise ConfigError("grids must be nonempty")
        if not 0 < self.snr_min <= self.snr_max and self.snr_log:
            raise ConfigError("log-spaced snr grid needs 0 < snr_min <= snr_max")
        if not 0 <= self.snr_min <= self.snr_max:
            raise ConfigError("snr grid needs 0 <= snr_min <= snr_max")
        if not 0 <= self.t_min <= self.t_max < 1:
            raise ConfigError("phase grid needs 0 <= t_min <= t_max < 1")
        if not 0 <= self.c_min <= self.c_max:
            raise ConfigError("phase grid needs 0 <= c_min <= c_max")
        if self.snr < 0:
            raise ConfigError("snr must be >= 0")
        if self.reps < 100:
            raise ConfigError("reps must be >= 100")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not 3 <= self.rmt_t * self.rmt_n <= self.rmt_n or not 0 < self.rmt_t < 1:
            raise ConfigError("rmt_t must lie in (0, 1) with rmt_t * rmt_n >= 3")
        if self.eigen_indices is not None:
            if not self.eigen_indices or any(not 1 <= int(i) <= self.p for i in self.eigen_indices):
                raise ConfigError(f"eigen_indices must be a nonempty list within [1, {self.p}]")
        if self.out is not None:
            parent = os.path.dirname(os.path.abspath(self.out))
            if not os.path.isdir(parent):
                raise ConfigError(f"output directory does not exist: {parent}")
        sigma_matrix(self.sigma, self.p)
        return self


def sigma_matrix(spec, p):
    """Covariance from a short description: 'identity', 'ar1:RHO' or 'geom:COND'."""
    kind, _, arg = str(spec).partition(":")
    try:
        if kind == "identity":
            return np.eye(p)
        if kind == "ar1":
            rho = float(arg)
            if not -1 < rho < 1:
                raise ValueError
            idx = np.arange(p)
            return rho ** np.abs(idx[:, None] - idx[None, :])
        if kind == "geom":
            cond = float(arg)
            if cond < 1:
                raise ValueError
            return np.diag(np.geomspace(1.0, 1.0 / cond, p))
    except ValueError:
        pass
    raise ConfigError(f"bad sigma specification {spec!r}; use identity, ar1:RHO or geom:COND")


def load_config(path=None, overrides=None):
    data = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a flat JSON object")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        cfg = ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return None
        return x
    if dataclasses.is_dataclass(obj):
        return _jsonable(dataclasses.asdict(obj))
    return obj


def write_text(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_csv(rows, columns, out):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[k]) for k in columns])
    write_text(buf.getvalue(), out)


def write_json(obj, out):
    write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n", out)


def _pmap(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def default_eigen_indices(p):
    return sorted({min(p, max(1, round(k * p / 160))) for k in (1, 40, 80, 120, 160)})


def snr_grid(cfg):
    if cfg.snr_log:
        return np.geomspace(cfg.snr_min, cfg.snr_max, cfg.snr_points)
    return np.linspace(cfg.snr_min, cfg.snr_max, cfg.snr_points)


def figure1_rows(cfg):
    """Relative out-of-sample risk along eigenvectors of X'X/n for one sampled design."""
    n, p = cfg.n, cfg.p
    sigma = sigma_matrix(cfg.sigma, p)
    c = resolve_c(cfg.c, p)
    c_asym = c if cfg.asymptotic_c is None else resolve_c(cfg.asymptotic_c, p)
    design = sample_design(n, p, sigma, "normal", seed=cfg.seed)
    _, rho2_ml = ml_risks(design, sigma)
    t = p / n
    base = t / (1.0 - t)
    grid = snr_grid(cfg)
    indices = cfg.eigen_indices or default_eigen_indices(p)

    def curve(index):
        rows = []
        for s in grid:
            beta = beta_along_eigvec(design, sigma, int(index), float(s))
            xb = design.x @ beta
            rho2 = shrink_risk_out_from_invariants(c, p, rho2_ml, float(xb @ xb), float(beta @ sigma @ beta))
            rows.append({
                "curve_id": f"w{int(index)}",
                "eigen_index": int(index),
                "eigenvalue": float(design.nu[int(index) - 1]),
                "snr": float(s),
                "rho2_js": rho2,
                "rho2_ml": rho2_ml,
                "ratio_finite": rho2 / rho2_ml,
                "ratio_asymptotic": asymptotics.r_limit(float(s), c_asym, t) / base,
            })
        return rows

    return [row for rows in _pmap(curve, indices, cfg.threads) for row in rows]


def phase_rows(cfg):
    cs = np.linspace(cfg.c_min, cfg.c_max, cfg.phase_points)
    ts = np.linspace(cfg.t_min, cfg.t_max, cfg.phase_points)

    def column(c):
        out = []
        for t in ts:
            v = asymptotics.phase_classify(float(c), float(t))
            out.append({"c": v.c, "t": v.t, "region": v.region, "sup_R": v.sup_R,
                        "ml_limit": v.ml_limit, "gap": v.gap, "epsilon": v.epsilon})
        return out

    return [row for rows in _pmap(column, cs, cfg.threads) for row in rows]


def cmd_figure1(cfg):
    write_csv(figure1_rows(cfg), FIGURE1_COLUMNS, cfg.out)
    return EXIT_OK


def cmd_phase(cfg):
    write_csv(phase_rows(cfg), PHASE_COLUMNS, cfg.out)
    return EXIT_OK


def _risk_instance(cfg):
    n, p = cfg.n, cfg.p
    sigma = sigma_matrix(cfg.sigma, p)
    design = sample_design(n, p, sigma, "normal", seed=[cfg.seed, 0])
    if cfg.beta_index is not None:
        beta = beta_along_eigvec(design, sigma, int(cfg.beta_index), cfg.snr)
    else:
        direction = np.random.default_rng([cfg.seed, 1]).standard_normal(p)
        beta = direction * math.sqrt(cfg.snr / float(direction @ sigma @ direction))
    return design, sigma, beta


def cmd_risk(cfg):
    n, p = cfg.n, cfg.p
    c = resolve_c(cfg.c, p)
    design, sigma, beta = _risk_instance(cfg)
    report = risk_report(c, design, sigma, beta)
    y = sample_response(ModelSpec(n, p, sigma, beta), design, seed=[cfg.seed, 2])
    t = p / n
    d2_hat, r_hat = asymptotics.delta_hat_plug_in(y, c, n, p) if n > p else (None, None)
    doc = {
        "regime": {"n": n, "p": p, "t": t, "c": c, "snr": report.snr, "seed": cfg.seed,
                   "sigma": cfg.sigma,
                   "beta_index": cfg.beta_index},
        "report": report.to_dict(),
        "asymptotic": {"r_limit": asymptotics.r_limit(report.snr, c, t) if t < 1 else None,
                       "ml_limit": t / (1 - t) if t < 1 else None},
        "plug_in": {"delta_hat2": d2_hat, "risk_estimate": r_hat},
    }
    code = EXIT_OK
    if cfg.verify:
        rho1, rho2 = oracle.mc_risk(c, design, sigma, beta, cfg.reps, seed=cfg.seed, threads=cfg.threads)
        checks = {
            "rho1": _mc_check(rho1, report.rho1_c),
            "rho2": _mc_check(rho2, report.rho2_c),
        }
        doc["verification"] = checks
        if not all(ch["pass"] for ch in checks.values()):
            code = EXIT_FAIL
    write_json(doc, cfg.out)
    return code


def _mc_check(est, exact, k=4.0):
    return {"exact": exact, "mc_mean": est.mean, "mc_se": est.se, "reps": est.reps,
            "z": float(est.z(exact)), "pass": bool(est.covers(exact, k))}


def rmt_checks(cfg):
    checks = []
    for t in [0.0] + [float(t) for t in cfg.rmt_t_grid] + [1.0]:
        closed, quad = rmt.lemma_b1(t)
        if quad is None:
            ok = math.isinf(closed)
        else:
            ok = abs(closed - quad) <= 1e-8
        checks.append({"check": "lemma_b1", "t": t, "closed": closed, "quadrature": quad,
                       "abs_diff": None if quad is None else abs(closed - quad), "pass": ok})
    n = cfg.rmt_n
    p = int(round(cfg.rmt_t * n))
    v = np.random.default_rng([cfg.seed, 3]).standard_normal((n, p))
    spec = np.linalg.eigvalsh(v.T @ v)
    rep = rmt.spectrum_diagnostics(spec, n, p)
    checks.append({"check": "inv_sum", "n": n, "p": p, "value": rep.inv_sum,
                   "target": rep.inv_sum_target,
                   "pass": abs(rep.inv_sum - rep.inv_sum_target) <= 0.05 * rep.inv_sum_target})
    checks.append({"check": "lam_min", "n": n, "p": p, "value": rep.lam_min_n,
                   "target": rep.lam_min_target,
                   "pass": abs(rep.lam_min_n - rep.lam_min_target) <= 0.10 * rep.lam_min_target})
    checks.append({"check": "lam_max", "n": n, "p": p, "value": rep.lam_max_n,
                   "target": rep.lam_max_target,
                   "pass": abs(rep.lam_max_n - rep.lam_max_target) <= 0.10 * rep.lam_max_target})
    checks.append({"check": "mp_kolmogorov", "n": n, "p": p, "value": rep.ks_distance,
                   "target": 0.0, "pass": rep.ks_distance <= 0.05})
    return checks


def cmd_rmt_check(cfg):
    checks = rmt_checks(cfg)
    ok = all(ch["pass"] for ch in checks)
    write_json({"pass": ok, "checks": checks}, cfg.out)
    return EXIT_OK if ok else EXIT_FAIL


def verify_suite(cfg):
    """Oracle-equivalence checks; returns a list of check dicts with a 'pass' key."""
    reps = max(cfg.reps, 10_000)
    seed = cfg.seed
    checks = []

    # exact risks against simulation on a few small instances
    rng = np.random.default_rng([seed, 10])
    for i, (n, p, snr) in enumerate([(40, 8, 0.0), (40, 8, 2.0), (60, 20, 25.0)]):
        a = rng.standard_normal((p, p))
        sigma = a @ a.T / p + np.eye(p)
        design = sample_design(n, p, sigma, "normal", seed=[seed, 20 + i])
        direction = rng.standard_normal(p)
        beta = direction * math.sqrt(snr / float(direction @ sigma @ direction))
        for c in (0.0, js_c(p)):
            rep = risk_report(c, design, sigma, beta)
            rho1, rho2 = oracle.mc_risk(c, design, sigma, beta, reps, seed=seed + i, threads=cfg.threads)
            for name, est, exact in (("rho1", rho1, rep.rho1_c), ("rho2", rho2, rep.rho2_c)):
                checks.append({"check": f"risk_{name}", "n": n, "p": p, "c": c, "snr": snr,
                               **_mc_check(est, exact)})

    # series engine against simulated inverse moments
    for j, (k, lam, order) in enumerate([(5, 2.0, 1), (12, 30.0, 2), (30, 80.0, 1)]):
        est = oracle.mc_inv_moment(k, lam, order, reps=max(reps, 10**5) * 10, seed=seed + 100 + j)
        checks.append({"check": "inv_moment", "k": k, "lambda": lam, "order": order,
                       **_mc_check(est, inv_moment(k, lam, order))})

    for t in (0.1, 0.25, 0.5, 0.9):
        closed, quad = rmt.lemma_b1(t)
        checks.append({"check": "lemma_b1", "t": t, "closed": closed, "quadrature": quad,
                       "pass": abs(closed - quad) <= 1e-8})

    # design-averaged risks keep the favourable ordering
    n, p = 60, 20
    for bb in (0.0, 5.0):
        beta = np.zeros(p)
        beta[0] = math.sqrt(bb)
        res = oracle.mc_unconditional(js_c(p), n, p, np.eye(p), beta, reps_design=100, seed=seed + 200)
        checks.append({"check": "unconditional_order", "beta_norm2": bb, "js_mean": res.js.mean,
                       "ml_mean": res.ml.mean, "combined_se": res.combined_se,
                       "pass": res.js.mean <= res.ml.mean + 2 * res.combined_se})

    # quadratic form concentration
    n, p = 200, 50
    w = np.ones(p) / math.sqrt(p)
    est = oracle.mc_quadratic_form(w, n, p, "normal", reps=1000, seed=seed + 300)
    bound = (fourth_moment("normal") + 1.0) / n * 1.5
    checks.append({"check": "quadratic_form", "mean": est.mean, "se": est.se, "var": est.var,
                   "var_bound": bound, "pass": bool(est.covers(1.0) and est.var <= bound)})
    return checks


def cmd_verify(cfg):
    checks = verify_suite(cfg)
    ok = all(ch["pass"] for ch in checks)
    write_json({"pass": ok, "failed": sum(not ch["pass"] for ch in checks), "checks": checks},
               cfg.out)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "figure1": cmd_figure1,
    "phase": cmd_phase,
    "risk": cmd_risk,
    "rmt-check": cmd_rmt_check,
    "verify": cmd_verify,
}


def _bool(s):
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s}")


def _c_value(s):
    return s if s.lower() == "js" else float(s)


def _float_list(s):
    return [float(v) for v in s.split(",") if v]


def _int_list(s):
    return [int(v) for v in s.split(",") if v]


def _add_global(parser):
    sup = argparse.SUPPRESS
    parser.add_argument("--config", default=sup, help="flat JSON config file")
    parser.add_argument("--seed", type=int, default=sup)
    parser.add_argument("--out", default=sup, help="output file (stdout if omitted)")
    parser.add_argument("--threads", type=int, default=sup)


def _add_keys(parser):
    sup = argparse.SUPPRESS
    for name, typ in [("n", int), ("p", int), ("c", _c_value), ("sigma", str),
                      ("snr_min", float), ("snr_max", float), ("snr_points", int), ("snr_log", _bool),
                      ("eigen_indices", _int_list), ("asymptotic_c", _c_value),
                      ("c_min", float), ("c_max", float), ("t_min", float), ("t_max", float),
                      ("phase_points", int), ("snr", float), ("beta_index", int),
                      ("verify", _bool), ("rmt_t_grid", _float_list), ("rmt_n", int),
                      ("rmt_t", float), ("reps", int)]:
        parser.add_argument(f"--{name}", type=typ, default=sup)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="oosrisk",
        description="Conditional out-of-sample risk of James-Stein-type shrinkage in linear regression.")
    _add_global(parser)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        _add_global(sp)
        _add_keys(sp)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = vars(parser.parse_args(argv))
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    command = args.pop("command")
    config_path = args.pop("config", None)
    try:
        cfg = load_config(config_path, args)
        return COMMANDS[command](cfg)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except DegenerateDesignError as exc:
        log.error("degenerate design: %s", exc)
        return EXIT_DEGENERATE
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_CONFIG


def run():
    sys.exit(main())
