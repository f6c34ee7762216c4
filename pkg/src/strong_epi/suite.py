"""Randomized and structured instances of the entropy-power inequalities.

Every check returns an :class:`InequalityReport` whose pass flag is
``slack >= -tol`` with ``slack = lhs - rhs``.  Exponentials of entropies are
compared on the entropy-power scale with a relative tolerance of 1e-3 of the
right-hand side.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

import numpy as np

from .channel import quantized_channel_rows, quantizer_edges
from .closed_forms import gaussian_entropy
from .errors import StrongEPIError
from .functionals import (
    de_bruijn_residual,
    differential_entropy,
    discrete_entropy,
    doubling_constant,
    entropy_power,
    fisher_information,
)
from .grid import (
    DEFAULT_N,
    DEFAULT_PAD,
    Grid,
    GridDensity,
    MixtureSpec,
    add_gaussian_noise,
    convolve,
    mixture_density,
    trim,
)

REL_TOL = 1e-3
MI_TOL = 5e-3
STAM_TOL = 1e-3
DE_BRUIJN_LIMIT = 5e-3
CSV_COLUMNS = ("case_id", "suite", "name", "lhs", "rhs", "slack", "tol", "pass", "seed", "params_json")
SUITES = ("classical_epi", "strengthened_epi", "conditional_epi", "costa", "reverse_epi",
          "reverse_epi_fisher", "stam", "stam_deficit", "de_bruijn")
WORKERS_ENV = "STRONG_EPI_WORKERS"


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    tol: float
    params: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    suite: str = ""
    case_id: int = -1

    def csv_row(self) -> list[str]:
        return [str(self.case_id), self.suite, self.name, repr(self.lhs), repr(self.rhs),
                repr(self.slack), repr(self.tol), "true" if self.passed else "false",
                "" if self.seed is None else str(self.seed),
                json.dumps(self.params, sort_keys=True)]


def make_report(name: str, lhs: float, rhs: float, tol: float,
                params: dict[str, Any] | None = None, seed: int | None = None) -> InequalityReport:
    lhs, rhs = float(lhs), float(rhs)
    slack = lhs - rhs
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        raise StrongEPIError(f"{name}: non-finite report values ({lhs}, {rhs})")
    return InequalityReport(name, lhs, rhs, slack, slack >= -tol, float(tol), dict(params or {}), seed)


def error_report(name: str, exc: Exception, seed: int | None = None) -> InequalityReport:
    """A failing record standing in for a check that could not be evaluated."""
    return InequalityReport(name, 0.0, 1.0, -1.0, False, 0.0, {"error": f"{type(exc).__name__}: {exc}"}, seed)


def _pow2(x: float) -> float:
    return 2.0 ** (2.0 * x)


# --- auxiliary families ----------------------------------------------------

@dataclass(frozen=True)
class VFamily:
    """Markov-valid auxiliary V built from Y = X + W only.

    kinds: ``gaussian`` (V = Y + N(0, u_sigma2)), ``quantize`` (k-level
    quantile quantizer of Y), ``erasure`` (the k-level quantizer output with
    probability p, an erasure symbol otherwise) and ``constant``.
    """

    kind: str
    u_sigma2: float = 1.0
    k: int = 4
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in ("gaussian", "quantize", "erasure", "constant"):
            raise StrongEPIError(f"unknown V family {self.kind!r}")

    def describe(self) -> dict[str, Any]:
        if self.kind == "gaussian":
            return {"family": "gaussian", "u_sigma2": self.u_sigma2}
        if self.kind == "quantize":
            return {"family": "quantize", "k": self.k}
        if self.kind == "erasure":
            return {"family": "erasure", "k": self.k, "p": self.p}
        return {"family": "constant"}


def v_informations(dx: GridDensity, y: GridDensity, sigma2_w: float, fam: VFamily) -> tuple[float, float]:
    """(I(X;V), I(Y;V)) in bits for Y = X + N(0, sigma2_w) with density ``y``."""
    if fam.kind == "constant":
        return 0.0, 0.0
    if fam.kind == "gaussian":
        h_v = differential_entropy(trim(add_gaussian_noise(y, fam.u_sigma2)))
        return (h_v - gaussian_entropy(sigma2_w + fam.u_sigma2), h_v - gaussian_entropy(fam.u_sigma2))
    rows = quantized_channel_rows(dx.x, quantizer_edges(y, fam.k), sigma2_w)
    rows /= rows.sum(axis=1, keepdims=True)
    m = dx.masses
    h_v = discrete_entropy(m @ rows)
    h_v_given_x = float(sum(mi * discrete_entropy(r) for mi, r in zip(m, rows) if mi > 0))
    i_xv, i_yv = max(0.0, h_v - h_v_given_x), h_v
    if fam.kind == "erasure":
        return fam.p * i_xv, fam.p * i_yv
    return i_xv, i_yv


def _noisy(d: GridDensity, sigma2: float) -> GridDensity:
    return trim(add_gaussian_noise(d, sigma2))


# --- checks ------------------------------------------------------------------

def check_classical_epi(d1: GridDensity, d2: GridDensity, seed: int | None = None) -> InequalityReport:
    """2^{2h(X+Z)} >= 2^{2h(X)} + 2^{2h(Z)} for independent summands on a common step."""
    h1, h2 = differential_entropy(d1), differential_entropy(d2)
    hs = differential_entropy(trim(convolve(d1, d2)))
    rhs = _pow2(h1) + _pow2(h2)
    return make_report("classical_epi", _pow2(hs), rhs, REL_TOL * rhs, {"h_x": h1, "h_z": h2, "h_sum": hs}, seed)


def check_strengthened_epi(d: GridDensity, sigma2_w: float, fam: VFamily,
                           seed: int | None = None) -> InequalityReport:
    """2^{2(h(Y) - I(X;V))} >= 2^{2(h(X) - I(Y;V))} + 2^{2h(W)}, Y = X + W, W Gaussian."""
    h_x = differential_entropy(d)
    y = _noisy(d, sigma2_w)
    h_y = differential_entropy(y)
    h_w = gaussian_entropy(sigma2_w)
    i_xv, i_yv = v_informations(d, y, sigma2_w, fam)
    lhs = _pow2(h_y - i_xv)
    rhs = _pow2(h_x - i_yv) + _pow2(h_w)
    params = {"sigma2_w": sigma2_w, "h_x": h_x, "h_y": h_y, "i_xv": i_xv, "i_yv": i_yv,
              "classical_slack": _pow2(h_y) - _pow2(h_x) - _pow2(h_w), **fam.describe()}
    return make_report("strengthened_epi", lhs, rhs, REL_TOL * rhs, params, seed)


def check_conditional_epi(components: Sequence[tuple[float, GridDensity]], sigma2_w: float, fam: VFamily,
                          seed: int | None = None) -> InequalityReport:
    """Conditional version with Q the component index (at most two components)."""
    comps = list(components)
    if not 1 <= len(comps) <= 2 or abs(sum(w for w, _ in comps) - 1.0) > 1e-12:
        raise StrongEPIError("need one or two components with weights summing to 1")
    h_x = h_y = i_xv = i_yv = 0.0
    for w, d in comps:
        y = _noisy(d, sigma2_w)
        a, b = v_informations(d, y, sigma2_w, fam)
        h_x += w * differential_entropy(d)
        h_y += w * differential_entropy(y)
        i_xv += w * a
        i_yv += w * b
    h_w = gaussian_entropy(sigma2_w)
    lhs = _pow2(h_y - i_xv)
    rhs = _pow2(h_x - i_yv) + _pow2(h_w)
    params = {"sigma2_w": sigma2_w, "weights": [w for w, _ in comps], "h_x_given_q": h_x,
              "h_y_given_q": h_y, "i_xv_given_q": i_xv, "i_yv_given_q": i_yv, **fam.describe()}
    name = "strengthened_epi" if len(comps) == 1 else "conditional_epi"
    return make_report(name, lhs, rhs, REL_TOL * rhs, params, seed)


def check_costa_scalar(d: GridDensity, sigma2: float, alpha: float, seed: int | None = None) -> InequalityReport:
    """2^{2h(X + aW)} >= (1 - a^2) 2^{2h(X)} + a^2 2^{2h(X + W)}."""
    if not 0 <= alpha <= 1:
        raise StrongEPIError("alpha must lie in [0, 1]")
    h_x = differential_entropy(d)
    h_xw = differential_entropy(_noisy(d, sigma2))
    h_xaw = h_x if alpha == 0 else differential_entropy(_noisy(d, alpha * alpha * sigma2))
    a2 = alpha * alpha
    rhs = (1 - a2) * _pow2(h_x) + a2 * _pow2(h_xw)
    return make_report("costa", _pow2(h_xaw), rhs, REL_TOL * rhs,
                       {"sigma2": sigma2, "alpha": alpha}, seed)


def check_reverse_epi_xzw(dx: GridDensity, dz: GridDensity, sigma2_w: float,
                          seed: int | None = None) -> tuple[InequalityReport, InequalityReport]:
    """Sharpened submodularity and the plain version sharing its left side.

    First report: 2^{2(h(X+W)+h(Z+W))} >= 2^{2(h(X)+h(Z))} + 2^{2(h(X+Z+W)+h(W))}.
    Second report drops the 2^{2(h(X)+h(Z))} term.
    """
    h_x, h_z = differential_entropy(dx), differential_entropy(dz)
    h_xw = differential_entropy(_noisy(dx, sigma2_w))
    h_zw = differential_entropy(_noisy(dz, sigma2_w))
    h_xzw = differential_entropy(_noisy(trim(convolve(dx, dz)), sigma2_w))
    h_w = gaussian_entropy(sigma2_w)
    lhs = _pow2(h_xw + h_zw)
    plain = _pow2(h_xzw + h_w)
    rhs = _pow2(h_x + h_z) + plain
    params = {"sigma2_w": sigma2_w, "h_x": h_x, "h_z": h_z, "h_xw": h_xw, "h_zw": h_zw, "h_xzw": h_xzw}
    return (make_report("reverse_epi_xzw", lhs, rhs, REL_TOL * rhs, params, seed),
            make_report("submodularity", lhs, plain, REL_TOL * plain, params, seed))


def check_reverse_epi_fisher(dx: GridDensity, dz: GridDensity, seed: int | None = None) -> InequalityReport:
    """N(X) N(Z) (J(X) + J(Z)) >= N(X + Z); Fisher values pass the stability gate."""
    n_x, n_z = entropy_power(dx), entropy_power(dz)
    j_x, j_z = fisher_information(dx, check=True), fisher_information(dz, check=True)
    n_s = entropy_power(trim(convolve(dx, dz)))
    lhs = n_x * n_z * (j_x + j_z)
    return make_report("reverse_epi_fisher", lhs, n_s, REL_TOL * n_s,
                       {"n_x": n_x, "n_z": n_z, "j_x": j_x, "j_z": j_z}, seed)


def check_stam(d: GridDensity, seed: int | None = None) -> InequalityReport:
    n, j = entropy_power(d), fisher_information(d, check=True)
    return make_report("stam", n * j, 1.0, STAM_TOL, {"n": n, "j": j}, seed)


def check_stam_deficit(d: GridDensity, seed: int | None = None) -> InequalityReport:
    """N(X) J(X) >= d(X), the doubling-constant sharpening of Stam's inequality."""
    n, j = entropy_power(d), fisher_information(d, check=True)
    dc = doubling_constant(d)
    return make_report("stam_deficit", n * j, dc, STAM_TOL, {"n": n, "j": j, "doubling": dc}, seed)


def check_de_bruijn(d: GridDensity, seed: int | None = None) -> InequalityReport:
    """Residual of de Bruijn's identity at t = 1e-3 Var, reported as limit >= residual."""
    t = 1e-3 * d.variance()
    r = de_bruijn_residual(d, t)
    r_half = de_bruijn_residual(d, t, t / 20.0)
    return make_report("de_bruijn", DE_BRUIJN_LIMIT, r, 0.0, {"t": t, "residual_half_dt": r_half}, seed)


# --- corpus ------------------------------------------------------------------

@dataclass(frozen=True)
class CaseSpec:
    """Random parameters of one corpus case."""

    x: MixtureSpec
    z: MixtureSpec
    q_second: MixtureSpec
    q_weight: float
    sigma2_w: float
    family: VFamily
    u_sigma2: float
    alpha: float


def sample_mixture(rng: np.random.Generator) -> MixtureSpec:
    k = int(rng.integers(1, 4))
    w = rng.dirichlet(np.ones(k)) if k > 1 else np.ones(1)
    w = np.maximum(w, 1e-3)
    w = w / w.sum()
    w[-1] = 1.0 - float(np.sum(w[:-1]))
    means = rng.uniform(-4.0, 4.0, k)
    variances = rng.uniform(0.25, 4.0, k)
    return MixtureSpec(tuple(map(float, w)), tuple(map(float, means)), tuple(map(float, variances)))


def sample_case(seed: int, case_id: int) -> CaseSpec:
    rng = np.random.default_rng([seed, case_id])
    x, z, q2 = sample_mixture(rng), sample_mixture(rng), sample_mixture(rng)
    kind = ("gaussian", "quantize", "erasure", "constant")[int(rng.integers(0, 4))]
    fam = VFamily(kind, u_sigma2=float(rng.uniform(0.25, 4.0)), k=int(rng.integers(2, 17)),
                  p=float(rng.uniform(0.0, 1.0)))
    return CaseSpec(x, z, q2, float(rng.uniform(0.2, 0.8)), float(rng.uniform(0.25, 4.0)), fam,
                    float(rng.uniform(0.25, 4.0)), float(rng.uniform(0.0, 1.0)))


def case_step(specs: Iterable[MixtureSpec], n: int = DEFAULT_N, pad: float = DEFAULT_PAD) -> float:
    """Common grid step: the finest default-grid step among the case's densities."""
    steps = []
    for s in specs:
        lo, hi = s.support()
        steps.append((hi - lo) * (1 + pad) / (n - 1))
    return min(steps)


def _case_density(spec: MixtureSpec, step: float, pad: float = DEFAULT_PAD) -> GridDensity:
    lo, hi = spec.support()
    half = 0.5 * pad * (hi - lo)
    return mixture_density(Grid.with_step(lo - half, hi + half, step), spec)


def _suite_reports(suite: str, cs: CaseSpec, step: float, seed: int,
                   pad: float = DEFAULT_PAD) -> list[InequalityReport]:
    def case_density(spec: MixtureSpec, step: float) -> GridDensity:
        return _case_density(spec, step, pad)

    dx = case_density(cs.x, step)
    if suite == "classical_epi":
        return [check_classical_epi(dx, case_density(MixtureSpec.gaussian(0.0, cs.sigma2_w), step), seed)]
    if suite == "strengthened_epi":
        out = []
        for fam in (VFamily("gaussian", u_sigma2=cs.u_sigma2), cs.family):
            r = check_strengthened_epi(dx, cs.sigma2_w, fam, seed)
            if cs.x.is_gaussian and fam.kind == "gaussian":
                r = replace(r, params={**r.params, "equality_case": True,
                                       "equality": abs(r.slack) <= REL_TOL * r.rhs})
            out.append(r)
        return out
    if suite == "conditional_epi":
        d2 = case_density(cs.q_second, step)
        return [check_conditional_epi([(cs.q_weight, dx), (1.0 - cs.q_weight, d2)], cs.sigma2_w, cs.family, seed)]
    if suite == "costa":
        return [check_costa_scalar(dx, cs.sigma2_w, cs.alpha, seed)]
    if suite == "reverse_epi":
        return list(check_reverse_epi_xzw(dx, case_density(cs.z, step), cs.sigma2_w, seed))
    if suite == "reverse_epi_fisher":
        return [check_reverse_epi_fisher(dx, case_density(cs.z, step), seed)]
    if suite == "stam":
        return [check_stam(dx, seed)]
    if suite == "stam_deficit":
        return [check_stam_deficit(dx, seed)]
    if suite == "de_bruijn":
        return [check_de_bruijn(dx, seed)]
    raise StrongEPIError(f"unknown suite {suite!r}")


case_density = _case_density


def run_case(seed: int, case_id: int, suites: Sequence[str], n: int = DEFAULT_N,
             pad: float = DEFAULT_PAD) -> list[InequalityReport]:
    """All requested suites on one case; failures are re-run once on a halved step."""
    cs = sample_case(seed, case_id)
    step = case_step((cs.x, cs.z, cs.q_second, MixtureSpec.gaussian(0.0, cs.sigma2_w)), n, pad)
    out = []
    for suite in suites:
        try:
            reps = _suite_reports(suite, cs, step, seed, pad)
        except StrongEPIError as exc:
            reps = [error_report(suite, exc, seed)]
        if not all(r.passed for r in reps):
            try:
                reps = [replace(r, params={**r.params, "triaged": True})
                        for r in _suite_reports(suite, cs, step / 2.0, seed, pad)]
            except StrongEPIError as exc:
                reps = [error_report(suite, exc, seed)]
        out.extend(replace(r, suite=suite, case_id=case_id,
                           params={**r.params, "x": list(map(list, (cs.x.weights, cs.x.means, cs.x.variances)))})
                   for r in reps)
    return out


def expand_suites(names: Iterable[str]) -> tuple[str, ...]:
    names = list(names)
    if "all" in names:
        return SUITES
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise StrongEPIError(f"unknown suites: {', '.join(unknown)}")
    return tuple(n for n in SUITES if n in names)


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_case_args(args: tuple) -> list[InequalityReport]:
    return run_case(*args)


def run_corpus(seed: int, n_cases: int, suites: Iterable[str] = ("all",),
               workers: int | None = None, n: int = DEFAULT_N,
               pad: float = DEFAULT_PAD) -> list[InequalityReport]:
    """Deterministic corpus run; ordering is by case index whatever the worker count."""
    if n_cases < 1:
        raise StrongEPIError("n_cases must be at least 1")
    names = expand_suites(suites)
    workers = default_workers() if workers is None else workers
    jobs = [(seed, i, names, n, pad) for i in range(n_cases)]
    if workers <= 1:
        batches = [_run_case_args(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            batches = list(ex.map(_run_case_args, jobs))
    return [r for b in batches for r in b]


def reports_to_csv(reports: Iterable[InequalityReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def reports_from_csv(text: str) -> list[InequalityReport]:
    rows = csv.DictReader(io.StringIO(text))
    out = []
    for row in rows:
        out.append(InequalityReport(
            row["name"], float(row["lhs"]), float(row["rhs"]), float(row["slack"]),
            row["pass"] == "true", float(row["tol"]), json.loads(row["params_json"]),
            int(row["seed"]) if row["seed"] else None, row["suite"], int(row["case_id"])))
    return out


# --- exploratory: non-Gaussian additive noise ---------------------------------

def explore_nongaussian_w(seed: int, n_cases: int, n: int = DEFAULT_N,
                          pad: float = DEFAULT_PAD) -> list[InequalityReport]:
    """Evaluate the strengthened inequality with W drawn from the mixture corpus.

    V = X + W + U with Gaussian U.  The inequality is not claimed for
    non-Gaussian W; these records only chart the slack.
    """
    out = []
    for i in range(n_cases):
        rng = np.random.default_rng([seed, i, 7])
        xs, ws = sample_mixture(rng), sample_mixture(rng)
        u = float(rng.uniform(0.25, 4.0))
        step = case_step((xs, ws), n, pad)
        dx, dw = _case_density(xs, step, pad), _case_density(ws, step, pad)
        y = trim(convolve(dx, dw))
        h_x, h_w, h_y = map(differential_entropy, (dx, dw, y))
        h_v = differential_entropy(_noisy(y, u))
        i_xv = h_v - differential_entropy(_noisy(dw, u))
        i_yv = h_v - gaussian_entropy(u)
        lhs, rhs = _pow2(h_y - i_xv), _pow2(h_x - i_yv) + _pow2(h_w)
        rep = make_report("nongaussian_w", lhs, rhs, REL_TOL * rhs, {"u_sigma2": u}, seed)
        out.append(replace(rep, suite="explore", case_id=i))
    return out
