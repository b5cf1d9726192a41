"""Verification suites and a calculator in front of the library.

`qkz verify <suite>` runs a named batch of identity checks and writes a
JSON-lines report: one record per check, then one summary record.  Every
record names the law it exercises in plain words, carries the inputs,
both sides, the error and the tolerance, so reports are self-documenting
and diffable.  `qkz compute <quantity>` evaluates a single object and
prints it as one JSON document.

Exit status: 0 all checks passed, 1 at least one check failed, 2 at
least one guard refused to run a check (empty convergence window and the
like), 64 usage error.  Reports contain no timestamps: identical
configuration gives byte-identical output; wall time goes to stderr.

Set QKZ_WORKERS to run the suites of `verify all` concurrently; records
are sorted before emission, so the report does not depend on scheduling.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import pathlib
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .determinant_formula import (
    c_l_constant,
    c_tilde,
    e_l,
    e_l_ratio_check,
    g_l_closed,
    theorem_rhs,
)
from .double_sine import Periods, log_s2, s2, s2_asymptotic_log, s2_slope_at_zero
from .hypergeometric import (
    QuadratureSpec,
    WeightFunction,
    convergence_check,
    determinant_d,
    exchange_check,
    f_convergence_bound,
    f_integral,
    fundamental_matrix,
    pairing_integral,
    pairing_integral_shifted_beta,
)
from .quantum_algebra import (
    ModelParams,
    compositions,
    compositions_count,
    det_k_closed,
    k_operator,
    q_factorial,
    q_integer,
    r_matrix,
    r_matrix_oracle,
    weight_basis,
)

EXIT_OK = 0
EXIT_CHECK_FAIL = 1
EXIT_GUARD_FAIL = 2
EXIT_USAGE = 64

SUITES = ("s2", "algebra", "detk", "exchange", "shift", "fint", "determinant")
QUANTITIES = ("s2", "rmatrix", "kdet", "E", "G", "ctilde", "crhs", "F", "I", "Psi", "D")

# pinned per-suite base tolerances; individual checks may carry their own
SUITE_TOL = {
    "s2": 1e-10,
    "algebra": 1e-10,
    "detk": 1e-8,
    "exchange": 1e-8,
    "shift": 1e-6,
    "fint": 1e-6,
    "determinant": 1e-5,
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    """Desk-scale defaults; a JSON config file and then command-line flags
    override field by field."""

    rho: float = 2 * math.pi
    lam: float = 2 * math.pi
    mu: float = 0.5
    Lambda: tuple = (-0.3, -0.3)
    beta: tuple = (0.0, 0.4)
    nodes: int | None = None
    margin: float | None = None
    quad_tolerance: float | None = None
    tolerances: dict = field(default_factory=dict)
    out: str | None = None
    golden_dir: str = "golden"

    def params(self) -> ModelParams:
        return ModelParams(rho=self.rho, lam=self.lam, mu=self.mu,
                           Lambda=self.Lambda, beta=self.beta)

    def params_head(self, n: int) -> ModelParams:
        if len(self.Lambda) < n:
            raise UsageError(f"need at least {n} sites, config has {len(self.Lambda)}")
        return ModelParams(rho=self.rho, lam=self.lam, mu=self.mu,
                           Lambda=self.Lambda[:n], beta=self.beta[:n])

    def quad(self) -> QuadratureSpec:
        kw = {}
        if self.nodes is not None:
            kw["nodes_per_unit"] = self.nodes
        if self.margin is not None:
            kw["truncation_margin"] = self.margin
        if self.quad_tolerance is not None:
            kw["tolerance"] = self.quad_tolerance
        return QuadratureSpec(**kw)

    def periods(self) -> Periods:
        return Periods(self.rho, self.lam)

    def tol(self, suite: str, default: float) -> float:
        return float(self.tolerances.get(suite, default))


_CONFIG_KEYS = {f.name for f in dataclasses.fields(RunConfig)}


def load_config(path: str | None, overrides: dict) -> RunConfig:
    data = {}
    if path:
        try:
            data = json.loads(pathlib.Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    for key in ("Lambda", "beta"):
        if key in data:
            data[key] = tuple(float(v) for v in data[key])
    try:
        return RunConfig(**data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad config: {exc}") from None


# ---------------------------------------------------------------------------
# report records


def _cnum(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _record(suite, check, law, inputs, lhs, rhs, tol):
    lhs, rhs = complex(lhs), complex(rhs)
    abs_err = abs(lhs - rhs)
    scale = max(1.0, abs(rhs))
    return {
        "suite": suite,
        "check": check,
        "law": law,
        "inputs": inputs,
        "lhs": _cnum(lhs),
        "rhs": _cnum(rhs),
        "abs_err": abs_err,
        "rel_err": abs_err / max(abs(rhs), sys.float_info.min),
        "tol": tol,
        "pass": bool(abs_err <= tol * scale),
    }


def _guard(suite, check, law, inputs, reason):
    return {
        "suite": suite,
        "check": check,
        "law": law,
        "inputs": inputs,
        "guard": reason,
        "pass": False,
    }


def _skip(suite, check, law, inputs, reason):
    """The object under test does not exist at this configuration (root of
    unity, lattice degeneracy): the law is vacuous there, not violated."""
    return {
        "suite": suite,
        "check": check,
        "law": law,
        "inputs": inputs,
        "skipped": reason,
    }


def _guarded(records, suite, check, law, inputs, thunk):
    """Run thunk(); a ValueError from a library guard becomes a guard
    record instead of a traceback."""
    try:
        records.append(thunk())
    except ValueError as exc:
        records.append(_guard(suite, check, law, inputs, str(exc)))


# ---------------------------------------------------------------------------
# suites


def _suite_s2(cfg: RunConfig):
    tol = cfg.tol("s2", SUITE_TOL["s2"])
    per = cfg.periods()
    recs = []
    points = (0.31 + 0.37j, 1.7 - 0.2j)
    for i, x in enumerate(points):
        base = s2(x, per).value
        inputs = {"x": _cnum(x), "periods": [per.omega1, per.omega2]}
        recs.append(_record(
            "s2", f"shift-omega1/{i}",
            "one-period shift divides the value by 2 sin(pi x / other period)",
            inputs, s2(x + per.omega1, per).value / base,
            1.0 / (2 * np.sin(np.pi * x / per.omega2)), tol))
        recs.append(_record(
            "s2", f"shift-omega2/{i}",
            "one-period shift divides the value by 2 sin(pi x / other period)",
            inputs, s2(x + per.omega2, per).value / base,
            1.0 / (2 * np.sin(np.pi * x / per.omega1)), tol))
        recs.append(_record(
            "s2", f"reflection/{i}",
            "product at x and -x equals -4 sin(pi x/w1) sin(pi x/w2)",
            inputs, base * s2(-x, per).value,
            -4 * np.sin(np.pi * x / per.omega1) * np.sin(np.pi * x / per.omega2), tol))
    recs.append(_record(
        "s2", "midpoint",
        "value at the period midpoint is 1",
        {"x": (per.omega1 + per.omega2) / 2}, s2((per.omega1 + per.omega2) / 2, per).value,
        1.0, tol))
    h = 1e-5
    est = 2 * s2(h / 2, per).value / (h / 2) - s2(h, per).value / h
    recs.append(_record(
        "s2", "slope-at-zero",
        "extrapolated S2(h)/h matches the closed slope of the zero at 0",
        {"h": h}, est, s2_slope_at_zero(per), cfg.tol("s2", 1e-6)))
    x = 1.2 + 20j
    d = log_s2(x, per) - s2_asymptotic_log(x, per)
    resid = complex(d.real, (d.imag + math.pi) % (2 * math.pi) - math.pi)
    recs.append(_record(
        "s2", "asymptote",
        "log value approaches the quadratic asymptotic polynomial off the real axis",
        {"x": _cnum(x)}, resid, 0.0, cfg.tol("s2", 1e-6)))
    table = pathlib.Path(cfg.golden_dir) / "s2.csv"
    if table.is_file():
        with table.open(newline="") as fh:
            for i, row in enumerate(csv.DictReader(fh)):
                x = complex(float(row["x_re"]), float(row["x_im"]))
                p = Periods(float(row["w1"]), float(row["w2"]))
                want = complex(float(row["s2_re"]), float(row["s2_im"]))
                recs.append(_record(
                    "s2", f"golden-table/{i:02d}",
                    "value matches the high-precision reference table",
                    {"x": _cnum(x), "periods": [p.omega1, p.omega2]},
                    s2(x, p).value, want, cfg.tol("s2", 1e-9)))
    return recs


def _suite_algebra(cfg: RunConfig):
    tol = cfg.tol("algebra", SUITE_TOL["algebra"])
    recs = []
    params = cfg.params()
    for flavor in ("rho", "lambda"):
        q = params.q_phase(flavor)
        for k in range(2, 7):
            check = f"q-factorial/{flavor}/k={k}"
            law = "bracket factorial satisfies [k]! = [k] [k-1]!"
            inputs = {"k": k, "flavor": flavor}
            try:
                lhs = q_factorial(k, q)
                rhs = q_integer(k, q) * q_factorial(k - 1, q)
            except ValueError as exc:
                recs.append(_skip("algebra", check, law, inputs, str(exc)))
                continue
            recs.append(_record("algebra", check, law, inputs, lhs, rhs, tol))
    for n in range(1, 5):
        for l in range(5):
            recs.append(_record(
                "algebra", f"enumeration/n={n}/l={l}",
                "weight-space dimension equals the closed binomial count",
                {"n": n, "l": l},
                len(list(compositions(l, n))), compositions_count(l, n), 0.0))
    law = "closed R construction agrees with the intertwining-equation solve"
    if params.n < 2:
        recs.append(_guard("algebra", "r-dual-route", law,
                           {"n": params.n}, "needs at least two sites in the config"))
        return recs
    q = params.q_phase("rho")
    zr = params.z(1, "rho") / params.z(2, "rho")
    for l in (1, 2):
        check = f"r-dual-route/l={l}"
        try:
            a = r_matrix(params.Lambda[0], params.Lambda[1], zr, q, l)
            b = r_matrix_oracle(params.Lambda[0], params.Lambda[1], zr, q, l)
        except ValueError as exc:
            recs.append(_skip("algebra", check, law, {"l": l, "z": _cnum(zr)}, str(exc)))
            continue
        i, j = np.unravel_index(np.argmax(np.abs(a - b)), a.shape)
        recs.append(_record(
            "algebra", check, law,
            {"l": l, "z": _cnum(zr), "worst_entry": [int(i), int(j)]},
            a[i, j], b[i, j], tol))
    return recs


def _suite_detk(cfg: RunConfig):
    tol = cfg.tol("detk", SUITE_TOL["detk"])
    params = cfg.params()
    recs = []
    law = "operator-product determinant equals the closed sh-ratio product"
    for l in (1, 2):
        for m in range(1, params.n + 1):
            for flavor in ("rho", "lambda"):
                check = f"det/l={l}/m={m}/{flavor}"
                inputs = {"l": l, "m": m, "flavor": flavor}
                try:
                    lhs = np.linalg.det(k_operator(m, params, l, flavor).matrix)
                    rhs = det_k_closed(m, params, l, flavor)
                except ValueError as exc:
                    recs.append(_skip("detk", check, law, inputs, str(exc)))
                    continue
                recs.append(_record("detk", check, law, inputs, lhs, rhs, tol))
    return recs


def _suite_exchange(cfg: RunConfig):
    tol = cfg.tol("exchange", SUITE_TOL["exchange"])
    recs = []
    if cfg.params().n != 2:
        recs.append(_guard("exchange", "pointwise", "site swap equals the R-matrix action",
                           {"n": cfg.params().n}, "pointwise exchange check needs two sites"))
        return recs
    law = "swapping the two sites equals the R-matrix acting on the weight vector"
    for l, seed, ndraws in ((1, 101, 3), (2, 103, 1)):
        rng = np.random.default_rng(seed)
        for t in range(ndraws):
            beta = tuple(float(v) for v in rng.uniform(-1.0, 1.0, 2))
            alphas = tuple(float(v) for v in rng.uniform(-0.8, 0.8, l))
            check = f"pointwise/l={l}/draw={t}"
            inputs = {"l": l, "beta": list(beta), "alphas": list(alphas)}
            params = cfg.params().with_beta(beta)
            try:
                lhs, rhs = exchange_check(params, alphas)
            except ValueError as exc:
                recs.append(_skip("exchange", check, law, inputs, str(exc)))
                continue
            k = int(np.argmax(np.abs(lhs - rhs)))
            inputs["worst_entry"] = k
            recs.append(_record("exchange", check, law, inputs, lhs[k], rhs[k], tol))
    return recs


def _suite_shift(cfg: RunConfig):
    tol = cfg.tol("shift", SUITE_TOL["shift"])
    recs = []
    params = cfg.params()
    if params.n != 2:
        recs.append(_guard("shift", "rotation", "shifted pairing equals the site-rotated pairing",
                           {"n": params.n}, "the rotation reduction is stated for two sites"))
        return recs
    quad = cfg.quad()
    law = "moving the free last rapidity up one partner period rotates the site list"

    def one(check, fshift, gright, shift, frot):
        def thunk():
            lhs = pairing_integral_shifted_beta(fshift, gright, params, 2, shift, quad)
            rhs = pairing_integral(frot, gright, params, quad)
            return _record("shift", check, law,
                           {"L": list(fshift.L.entries), "Lp": list(gright.L.entries),
                            "flavor": fshift.flavor},
                           lhs.value, rhs.value, tol)
        _guarded(recs, "shift", check, law,
                 {"L": list(fshift.L.entries), "Lp": list(gright.L.entries)}, thunk)

    for i, Lp in enumerate(((1, 0), (0, 1))):
        one(f"rotation/rho/{i}",
            WeightFunction("rho", (1, 0), params, kind="g"),
            WeightFunction("lambda", Lp, params),
            params.lam * 1j,
            WeightFunction("rho", (0, 1), params, kind="g", site_order=(2, 1)))
    one("rotation/lambda/0",
        WeightFunction("lambda", (1, 0), params, kind="g"),
        WeightFunction("rho", (1, 0), params),
        params.rho * 1j,
        WeightFunction("lambda", (0, 1), params, kind="g", site_order=(2, 1)))
    recs.append(_record(
        "shift", "weight-zero",
        "the empty pairing is exactly 1",
        {}, pairing_integral_shifted_beta(
            WeightFunction("rho", (0, 0), params, kind="g"),
            WeightFunction("lambda", (0, 0), params), params, 2,
            params.lam * 1j, quad).value,
        1.0, 0.0))
    return recs


def _fint_ratio_dev(l, Lam, per, x, which, quad):
    """(lhs, rhs) of the one-site difference equation: the integral's step
    ratio against the closed cosh product."""
    rho, lam = per.omega1, per.omega2
    step, own, par = (math.pi / lam, rho, lam) if which == 1 else (math.pi / rho, lam, rho)
    num = f_integral(l, Lam, x + step, per, quad).value
    den = f_integral(l, Lam, x - step, per, quad).value
    rhs = 1.0 + 0j
    for k in range(l):
        rhs *= np.cosh(own * 1j * x / 2 - np.pi**2 * 1j * (k - Lam) / par) / np.cosh(
            own * 1j * x / 2 + np.pi**2 * 1j * (k - Lam) / par)
    return num / den, rhs


def _suite_fint(cfg: RunConfig):
    tol = cfg.tol("fint", SUITE_TOL["fint"])
    recs = []
    per = cfg.periods()
    Lam = cfg.Lambda[0]
    quad = cfg.quad()
    bound = f_convergence_bound(1, Lam, per)
    for which, x in ((1, 0.25), (2, 0.1)):
        check = f"difference-equation/{which}"
        law = "one-site integral step ratio equals the closed cosh product"
        step = math.pi / per.omega2 if which == 1 else math.pi / per.omega1
        if abs(x) + step >= bound:
            recs.append(_guard("fint", check, law, {"x": x, "bound": bound},
                               f"step takes |Re x| to {abs(x) + step:.4g}, "
                               f"outside the convergence bound {bound:.4g}"))
            continue
        _guarded(recs, "fint", check, law, {"x": x},
                 lambda which=which, x=x: _record(
                     "fint", f"difference-equation/{which}", law, {"x": x, "l": 1},
                     *_fint_ratio_dev(1, Lam, per, x, which, quad), tol))
    want = c_tilde(1, Lam, per)
    for x in (0.1, 0.2, 0.4):
        check = f"normalization/x={x}"
        law = "integral over closed solution is the x-independent normalization constant"
        if abs(x) >= bound:
            recs.append(_guard("fint", check, law, {"x": x, "bound": bound},
                               f"|Re x| outside the convergence bound {bound:.4g}"))
            continue
        _guarded(recs, "fint", check, law, {"x": x},
                 lambda x=x: _record(
                     "fint", f"normalization/x={x}", law, {"x": x, "l": 1},
                     f_integral(1, Lam, x, per, quad).value / g_l_closed(1, Lam, x, per),
                     want, cfg.tol("fint", 1e-5)))
    return recs


def _suite_determinant(cfg: RunConfig):
    recs = []
    params = cfg.params()
    quad = cfg.quad()
    p1 = cfg.params_head(1)
    recs.append(_record(
        "determinant", "weight-zero/integral",
        "the empty-weight matrix has determinant exactly 1",
        {"l": 0}, determinant_d(p1, 0, quad)[0], 1.0, 0.0))
    recs.append(_record(
        "determinant", "weight-zero/closed",
        "the closed form collapses to exactly 1 at weight zero",
        {"l": 0}, theorem_rhs(params, 0), 1.0, 0.0))
    law = "determinant of the pairing matrix equals the closed product form"
    rep = convergence_check(p1, 1)
    if rep.ok:
        _guarded(recs, "determinant", "headline/n=1,l=1", law, {"n": 1, "l": 1},
                 lambda: _record(
                     "determinant", "headline/n=1,l=1", law, {"n": 1, "l": 1},
                     determinant_d(p1, 1, quad)[0], theorem_rhs(p1, 1),
                     cfg.tol("determinant", SUITE_TOL["determinant"])))
    else:
        recs.append(_guard("determinant", "headline/n=1,l=1", law, {"n": 1, "l": 1}, rep.reason))
    if params.n >= 2:
        p2 = cfg.params_head(2)
        rep = convergence_check(p2, 1)
        if rep.ok:
            _guarded(recs, "determinant", "headline/n=2,l=1", law, {"n": 2, "l": 1},
                     lambda: _record(
                         "determinant", "headline/n=2,l=1", law, {"n": 2, "l": 1},
                         determinant_d(p2, 1, quad)[0], theorem_rhs(p2, 1),
                         cfg.tol("determinant", 1e-4)))
        else:
            recs.append(_guard("determinant", "headline/n=2,l=1", law,
                               {"n": 2, "l": 1}, rep.reason))
    for l in (1, 2):
        for m in range(1, params.n + 1):
            for which in ("lambda", "rho"):
                check = f"step-ratio/l={l}/m={m}/{which}"
                steplaw = "carrier step ratio equals the closed determinant of the step operator"
                inputs = {"l": l, "m": m, "which": which}
                try:
                    ratio, closed = e_l_ratio_check(params, m, which, l)
                except ValueError as exc:
                    recs.append(_skip("determinant", check, steplaw, inputs, str(exc)))
                    continue
                recs.append(_record("determinant", check, steplaw, inputs,
                                    ratio, closed, cfg.tol("determinant", 1e-8)))
        asmlaw = "expanded closed form equals constant times carrier"
        try:
            lhs = theorem_rhs(params, l)
            rhs = c_l_constant(params, l) * e_l(params, l)
        except ValueError as exc:
            recs.append(_skip("determinant", f"assembly/l={l}", asmlaw, {"l": l}, str(exc)))
        else:
            recs.append(_record("determinant", f"assembly/l={l}", asmlaw, {"l": l},
                                lhs, rhs, cfg.tol("determinant", 1e-10)))
        for which, x in ((1, 0.23), (2, 0.11)):
            glaw = "closed one-site solution satisfies both step equations"
            try:
                lhs, rhs = _closed_g_ratio(l, cfg.Lambda[0], cfg.periods(), x, which)
            except ValueError as exc:
                recs.append(_skip("determinant", f"difference-equation/l={l}/{which}",
                                  glaw, {"l": l, "x": x}, str(exc)))
                continue
            recs.append(_record(
                "determinant", f"difference-equation/l={l}/{which}",
                glaw, {"l": l, "x": x}, lhs, rhs, cfg.tol("determinant", 1e-10)))
    return recs


def _closed_g_ratio(l, Lam, per, x, which):
    rho, lam = per.omega1, per.omega2
    step, own, par = (math.pi / lam, rho, lam) if which == 1 else (math.pi / rho, lam, rho)
    num = g_l_closed(l, Lam, x + step, per)
    den = g_l_closed(l, Lam, x - step, per)
    rhs = 1.0 + 0j
    for k in range(l):
        rhs *= np.cosh(own * 1j * x / 2 - np.pi**2 * 1j * (k - Lam) / par) / np.cosh(
            own * 1j * x / 2 + np.pi**2 * 1j * (k - Lam) / par)
    return num / den, rhs


_SUITE_FNS = {
    "s2": _suite_s2,
    "algebra": _suite_algebra,
    "detk": _suite_detk,
    "exchange": _suite_exchange,
    "shift": _suite_shift,
    "fint": _suite_fint,
    "determinant": _suite_determinant,
}


def run_suite(name: str, cfg: RunConfig):
    """Records for one named suite, or for all of them in declared order."""
    if name == "all":
        names = SUITES
    elif name in _SUITE_FNS:
        names = (name,)
    else:
        raise UsageError(f"unknown suite {name!r}")
    workers = _worker_count()
    if workers > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: _SUITE_FNS[s](cfg), names))
    else:
        parts = [_SUITE_FNS[s](cfg) for s in names]
    records = [r for part in parts for r in part]
    records.sort(key=lambda r: (r["suite"], r["check"]))
    return records


def _worker_count() -> int:
    raw = os.environ.get("QKZ_WORKERS")
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"QKZ_WORKERS must be an integer, got {raw!r}") from None
    return max(1, n)


def _summarize(records):
    guards = sum(1 for r in records if "guard" in r)
    skipped = sum(1 for r in records if "skipped" in r)
    failed = sum(1 for r in records if not r.get("pass", True) and "guard" not in r)
    passed = sum(1 for r in records if r.get("pass", False))
    return {
        "summary": True,
        "checks": len(records),
        "passed": passed,
        "failed": failed,
        "guard_failures": guards,
        "skipped": skipped,
    }


def _emit(records, summary, out: str | None):
    lines = [json.dumps(r, sort_keys=True) for r in records]
    lines.append(json.dumps(summary, sort_keys=True))
    text = "\n".join(lines) + "\n"
    if out:
        pathlib.Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# compute


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise UsageError(f"cannot parse complex number {text!r}") from None


def _need(args, name):
    v = getattr(args, name.lstrip("-").replace("-", "_"))
    if v is None:
        raise UsageError(f"compute {args.quantity} requires {name}")
    return v


def _default_index(cfg: RunConfig, l: int):
    return weight_basis(len(cfg.Lambda), l)[0].entries


def compute(args, cfg: RunConfig) -> dict:
    params = cfg.params()
    per = cfg.periods()
    quad = cfg.quad()
    l = args.l
    q = args.quantity
    if q == "s2":
        x = _parse_complex(_need(args, "--x"))
        val = s2(x, per)
        return {"quantity": "s2", "x": _cnum(x), "periods": [per.omega1, per.omega2],
                "value": _cnum(val.value), "log_value": _cnum(log_s2(x, per)),
                "status": val.status}
    if q == "rmatrix":
        if params.n < 2:
            raise UsageError("compute rmatrix needs two sites")
        z = _parse_complex(args.z) if args.z else params.z(1, args.flavor) / params.z(2, args.flavor)
        mat = r_matrix(params.Lambda[0], params.Lambda[1], z, params.q_phase(args.flavor), l)
        return {"quantity": "rmatrix", "l": l, "flavor": args.flavor, "z": _cnum(z),
                "Lambda": [params.Lambda[0].real, params.Lambda[1].real],
                "entries": [[_cnum(v) for v in row] for row in mat]}
    if q == "kdet":
        return {"quantity": "kdet", "m": args.m, "l": l, "flavor": args.flavor,
                "value": _cnum(det_k_closed(args.m, params, l, args.flavor))}
    if q == "E":
        return {"quantity": "E", "l": l, "value": _cnum(e_l(params, l))}
    if q == "G":
        x = _parse_complex(_need(args, "--x"))
        return {"quantity": "G", "l": l, "x": _cnum(x),
                "value": _cnum(g_l_closed(l, params.Lambda[0], x, per))}
    if q == "ctilde":
        return {"quantity": "ctilde", "l": l,
                "value": _cnum(c_tilde(l, params.Lambda[0], per))}
    if q == "crhs":
        return {"quantity": "crhs", "l": l, "value": _cnum(theorem_rhs(params, l))}
    if q == "F":
        x = _parse_complex(_need(args, "--x"))
        r = f_integral(l, params.Lambda[0], x, per, quad)
        return {"quantity": "F", "l": l, "x": _cnum(x), "value": _cnum(r.value),
                "error_estimate": r.error_estimate, "nodes": r.nodes, "flagged": r.flagged}
    if q == "I":
        L = tuple(int(v) for v in args.L.split(",")) if args.L else _default_index(cfg, l)
        Lp = tuple(int(v) for v in args.Lp.split(",")) if args.Lp else _default_index(cfg, l)
        r = pairing_integral(WeightFunction("rho", L, params),
                             WeightFunction("lambda", Lp, params), params, quad)
        return {"quantity": "I", "L": list(L), "Lp": list(Lp), "value": _cnum(r.value),
                "error_estimate": r.error_estimate, "nodes": r.nodes, "flagged": r.flagged}
    if q == "Psi":
        mat = fundamental_matrix(params, l, quad)
        return {"quantity": "Psi", "l": l, "d": mat.d,
                "basis": [list(L.entries) for L in mat.basis],
                "entries": [[_cnum(v) for v in row] for row in mat.entries],
                "entry_errors": [[float(v) for v in row] for row in mat.entry_errors],
                "error_estimate": mat.error_estimate, "flagged": mat.flagged,
                "nodes": mat.nodes}
    if q == "D":
        det, bound = determinant_d(params, l, quad)
        return {"quantity": "D", "l": l, "value": _cnum(det), "bound": bound}
    raise UsageError(f"unknown quantity {q!r}")


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--rho", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--Lambda", help="comma-separated site weights")
    p.add_argument("--beta", help="comma-separated rapidities")
    p.add_argument("--periods", help="rho,lam in one flag")
    p.add_argument("--nodes", type=int, help="quadrature nodes per unit length")
    p.add_argument("--margin", type=float, help="truncation margin in e-folds")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qkz", description="identity verification suites and calculator")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a check suite, write a JSONL report")
    v.add_argument("suite", choices=SUITES + ("all",))
    _add_common(v)
    v.add_argument("--tol", type=float, help="override every tolerance in the suite")
    v.add_argument("--out", help="report path (default: stdout)")
    v.add_argument("--golden-dir", help="directory with reference CSV tables")

    c = sub.add_parser("compute", help="evaluate one quantity, print a JSON document")
    c.add_argument("quantity", choices=QUANTITIES)
    _add_common(c)
    c.add_argument("--l", type=int, default=1, help="weight (default 1)")
    c.add_argument("--x", help="evaluation point (complex)")
    c.add_argument("--m", type=int, default=1, help="site index (1-based)")
    c.add_argument("--flavor", choices=("rho", "lambda"), default="rho")
    c.add_argument("--z", help="spectral parameter for rmatrix (default from beta)")
    c.add_argument("--L", help="comma-separated multi-index (left)")
    c.add_argument("--Lp", help="comma-separated multi-index (right)")
    c.add_argument("--tol", type=float, help="quadrature tolerance")
    return parser


def _overrides(args) -> dict:
    over = {
        "rho": args.rho,
        "lam": args.lam,
        "mu": args.mu,
        "nodes": args.nodes,
        "margin": args.margin,
    }
    if args.periods:
        parts = args.periods.split(",")
        if len(parts) != 2:
            raise UsageError("--periods takes two comma-separated values")
        over["rho"], over["lam"] = float(parts[0]), float(parts[1])
    if args.Lambda:
        over["Lambda"] = tuple(float(v) for v in args.Lambda.split(","))
    if args.beta:
        over["beta"] = tuple(float(v) for v in args.beta.split(","))
    if getattr(args, "golden_dir", None):
        over["golden_dir"] = args.golden_dir
    if getattr(args, "out", None):
        over["out"] = args.out
    return over


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        over = _overrides(args)
        if args.command == "verify":
            cfg = load_config(args.config, over)
            if args.tol is not None:
                cfg = replace(cfg, tolerances={s: args.tol for s in SUITES})
            t0 = time.monotonic()
            try:
                records = run_suite(args.suite, cfg)
            except ValueError as exc:
                print(f"guard: {exc}", file=sys.stderr)
                return EXIT_GUARD_FAIL
            summary = _summarize(records)
            _emit(records, summary, cfg.out)
            print(f"{args.suite}: {summary['passed']} passed, {summary['failed']} failed, "
                  f"{summary['guard_failures']} guard failures, {summary['skipped']} skipped "
                  f"in {time.monotonic() - t0:.1f}s", file=sys.stderr)
            if summary["guard_failures"]:
                return EXIT_GUARD_FAIL
            return EXIT_CHECK_FAIL if summary["failed"] else EXIT_OK
        cfg = load_config(args.config, over)
        if args.tol is not None:
            cfg = replace(cfg, quad_tolerance=args.tol)
        try:
            doc = compute(args, cfg)
        except ValueError as exc:
            print(f"guard: {exc}", file=sys.stderr)
            return EXIT_GUARD_FAIL
        print(json.dumps(doc, sort_keys=True, indent=2))
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
