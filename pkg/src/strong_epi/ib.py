"""Gaussian-channel information bottleneck: inf over P(V|Y) of I(Y;V) - lam I(X;V).

The solver alternates the self-consistent updates

    p(v|y) ~ p(v) 2^(-lam KL(p(x|y) || p(x|v)))
    p(v)   = sum_y p(y) p(v|y)
    p(x|v) = sum_y p(x, y) p(v|y) / p(v)

Each full cycle minimizes the usual IB free energy block by block, so the
objective evaluated at consistent points never increases.  The problem is
non-convex; several restarts are run and the best is kept.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSpec, joint_xy, push_through
from .errors import InvalidParameterError
from .functionals import JointGrid, differential_entropy, discrete_entropy, mutual_information
from .grid import GridDensity, MixtureSpec, default_grid, gaussian_density

LAMBDA_CAP = 1e6
SOLVER_N = 512
_LOG_FLOOR = 1e-300
# cells lighter than this are left out of the iterations
_PRUNE = 1e-14


@dataclass(frozen=True)
class IBProblem:
    joint: JointGrid
    lam: float
    v_size: int = 64
    tol: float = 1e-9
    max_iter: int = 20000
    seed: int = 0
    restarts: int = 8

    def __post_init__(self):
        if not self.lam >= 1:
            raise InvalidParameterError(f"lambda must be >= 1, got {self.lam}")
        if self.v_size < 2:
            raise InvalidParameterError("v_size must be at least 2")
        if not self.tol > 0:
            raise InvalidParameterError("tol must be positive")
        if self.max_iter < 1 or self.restarts < 0:
            raise InvalidParameterError("max_iter must be positive and restarts nonnegative")


@dataclass(frozen=True)
class ChannelKernel:
    rows: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rows, dtype=float)
        if r.ndim != 2 or np.any(r < 0) or np.max(np.abs(r.sum(axis=1) - 1.0)) > 1e-12:
            raise InvalidParameterError("kernel rows must be probability vectors")
        r.setflags(write=False)
        object.__setattr__(self, "rows", r)


@dataclass(frozen=True)
class IBSolution:
    kernel: ChannelKernel
    objective: float
    i_xv: float
    i_yv: float
    iterations: int
    converged: bool
    restarts_used: int
    history: tuple[float, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class SolverOptions:
    """Knobs shared by the functional-level wrappers."""

    v_size: int = 64
    tol: float = 1e-9
    max_iter: int = 20000
    seed: int = 0
    restarts: int = 8
    n: int = SOLVER_N


def ib_terms(pxy: np.ndarray, q: np.ndarray) -> tuple[float, float]:
    """(I(X;V), I(Y;V)) in bits for joint ``pxy`` and kernel ``q`` = P(V|Y)."""
    py = pxy.sum(axis=0)
    return mutual_information(pxy @ q), mutual_information(py[:, None] * q)


class _Prepared:
    """Quantities of P_XY reused by every iteration."""

    def __init__(self, pxy: np.ndarray):
        keep = pxy.sum(axis=0) > 0
        self.keep = keep
        self.pxy = pxy[:, keep]
        self.py = self.pxy.sum(axis=0)
        self.px = self.pxy.sum(axis=1)
        self.pxgy = self.pxy / self.py
        with np.errstate(divide="ignore", invalid="ignore"):
            lp = np.where(self.pxgy > 0, np.log2(np.maximum(self.pxgy, _LOG_FLOOR)), 0.0)
        self.neg_hx_given_y = np.sum(self.pxgy * lp, axis=0)

    def objective(self, q: np.ndarray, lam: float) -> tuple[float, float, float, np.ndarray, np.ndarray]:
        pv = self.py @ q
        pxv = self.pxy @ q
        i_xv = mutual_information(pxv)
        i_yv = mutual_information(self.py[:, None] * q)
        return i_yv - lam * i_xv, i_xv, i_yv, pv, pxv

    def update(self, pv: np.ndarray, pxv: np.ndarray, lam: float) -> np.ndarray:
        alive = pv > 0
        dec = np.where(alive, pxv / np.where(alive, pv, 1.0), 1.0 / pxv.shape[0])
        cross = self.pxgy.T @ np.log2(np.maximum(dec, _LOG_FLOOR))
        kl = self.neg_hx_given_y[:, None] - cross
        with np.errstate(divide="ignore"):
            logits = np.where(alive, np.log2(np.where(alive, pv, 1.0)), -np.inf) - lam * kl
        logits -= logits.max(axis=1, keepdims=True)
        q = np.exp2(logits)
        q /= q.sum(axis=1, keepdims=True)
        return q


class _Run:
    """One restart of the alternating updates, resumable for successive halving.

    Steps are over-relaxed in log space, q <- q^(1-w) T(q)^w, whenever that
    lowers the objective; otherwise the plain update T(q) is taken, so the
    recorded objective never increases.
    """

    def __init__(self, prep: _Prepared, q: np.ndarray, lam: float, relax_max: float):
        self.prep, self.lam, self.relax_max = prep, lam, relax_max
        self.q = q
        self.state = prep.objective(q, lam)
        self.history = [self.state[0]]
        self.iterations = 0
        self.converged = False
        self.done = False
        self._w = 1.0

    @property
    def objective(self) -> float:
        return self.state[0]

    def _extrapolate(self, t: np.ndarray) -> np.ndarray:
        w = self._w
        lq = (1 - w) * np.log(np.maximum(self.q, _LOG_FLOOR)) + w * np.log(np.maximum(t, _LOG_FLOOR))
        lq -= lq.max(axis=1, keepdims=True)
        q = np.exp(lq)
        return q / q.sum(axis=1, keepdims=True)

    def advance(self, n_steps: int, tol: float) -> None:
        prep, lam = self.prep, self.lam
        for _ in range(n_steps):
            if self.done:
                return
            obj, _, _, pv, pxv = self.state
            t = prep.update(pv, pxv, lam)
            self.iterations += 1
            cand, new = t, None
            if self._w > 1.0:
                qe = self._extrapolate(t)
                trial = prep.objective(qe, lam)
                if trial[0] < obj:
                    cand, new = qe, trial
                    self._w = min(self._w * 1.2, self.relax_max)
                else:
                    self._w = 1.0
            elif self.relax_max > 1.0:
                self._w = 1.5
            if new is None:
                new = prep.objective(t, lam)
            if new[0] > obj:
                # rounding-level increase at a fixed point
                self.done = True
                self.converged = new[0] - obj < tol
                return
            self.q, self.state = cand, new
            self.history.append(new[0])
            if obj - new[0] < tol:
                self.done = self.converged = True
                return


def initial_kernels(n_y: int, v_size: int, seed: int, restarts: int, py: np.ndarray) -> list[np.ndarray]:
    """Random soft interval partitions of Y, then one deterministic near-uniform kernel."""
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(py) - 0.5 * py
    out = []
    for _ in range(restarts):
        centers = np.sort(rng.uniform(0.0, 1.0, v_size))
        width = rng.uniform(0.25, 2.0) / v_size
        logits = -0.5 * ((cdf[:, None] - centers[None, :]) / width) ** 2
        logits += 0.1 * rng.standard_normal((n_y, v_size))
        logits -= logits.max(axis=1, keepdims=True)
        q = np.exp(logits)
        out.append(q / q.sum(axis=1, keepdims=True))
    ramp = np.cos(np.pi * np.outer(cdf, np.arange(v_size) + 0.5))
    q = 1.0 + 1e-2 * ramp
    out.append(q / q.sum(axis=1, keepdims=True))
    return out


def solve_ib(p: IBProblem, include_constant: bool = True, burn_in: int = 150,
             relax_max: float = 8.0) -> IBSolution:
    """Minimize I(Y;V) - lam I(X;V) over kernels P(V|Y) with |V| = ``p.v_size``.

    All restarts run ``burn_in`` iterations; the best one then continues to
    ``p.tol`` or ``p.max_iter``.  Cells of negligible mass are dropped while
    iterating and their kernel rows restored by one final update.  The constant
    kernel (objective 0) is kept as a baseline candidate unless
    ``include_constant`` is False.
    """
    pxy = p.joint.probs
    col = pxy.sum(axis=0)
    if pxy.sum() <= 0 or np.count_nonzero(col) < 1:
        raise InvalidParameterError("degenerate joint distribution")
    lam = p.lam
    if lam > LAMBDA_CAP:
        warnings.warn(f"lambda {lam:g} capped at {LAMBDA_CAP:g}", RuntimeWarning, stacklevel=2)
        lam = LAMBDA_CAP
    rows = pxy.sum(axis=1) > _PRUNE
    cols = col > _PRUNE
    sub = pxy[np.ix_(rows, cols)]
    prep = _Prepared(np.ascontiguousarray(sub / sub.sum()))
    inits = initial_kernels(prep.py.size, p.v_size, p.seed, p.restarts, prep.py)
    runs = [_Run(prep, q0, lam, relax_max) for q0 in inits]
    for r in runs:
        r.advance(min(burn_in, p.max_iter), p.tol)
    best = min(runs, key=lambda r: r.objective)
    best.advance(p.max_iter - best.iterations, p.tol)

    q = np.empty((pxy.shape[1], p.v_size))
    q[cols] = best.q
    rest = ~cols
    if np.any(rest):
        pxv = pxy[:, cols] @ best.q
        pv = pxv.sum(axis=0)
        q[rest] = 1.0 / p.v_size
        live = rest & (col > 0)
        if np.any(live):
            q[live] = _Prepared(pxy[:, live]).update(pv, pxv, lam)
    q /= q.sum(axis=1, keepdims=True)
    i_xv, i_yv = ib_terms(pxy, q)
    obj = i_yv - lam * i_xv
    if include_constant and obj > 0:
        q = np.zeros_like(q)
        q[:, 0] = 1.0
        obj, i_xv, i_yv = 0.0, 0.0, 0.0
    return IBSolution(ChannelKernel(q), float(obj), float(i_xv), float(i_yv), best.iterations,
                      best.converged, len(runs), tuple(best.history))


def s_lambda(d: GridDensity, c: ChannelSpec, lam: float, opts: SolverOptions = SolverOptions()) -> float:
    """-h(X) + lam h(Y) + inf_V {I(Y;V) - lam I(X;V)} in bits.

    Entropies use the full-resolution density; the infimum is solved on a
    joint down-sampled to ``opts.n`` points per axis.
    """
    h_x = differential_entropy(d)
    h_y = differential_entropy(push_through(d, c))
    j = joint_xy(d, c, n_x=opts.n, n_y=opts.n)
    sol = solve_ib(IBProblem(j, lam, opts.v_size, opts.tol, opts.max_iter, opts.seed, opts.restarts))
    return -h_x + lam * h_y + sol.objective


def s_lambda_conditional(components, c: ChannelSpec, lam: float,
                         opts: SolverOptions = SolverOptions()) -> float:
    """Q-averaged functional for Q taking at most two values.

    ``components`` is a sequence of (weight, GridDensity) pairs.
    """
    comps = list(components)
    if not 1 <= len(comps) <= 2:
        raise InvalidParameterError("conditional functional takes one or two components")
    if abs(sum(w for w, _ in comps) - 1.0) > 1e-12:
        raise InvalidParameterError("component weights must sum to 1")
    cache: dict[int, float] = {}
    total = 0.0
    for w, d in comps:
        key = id(d)
        if key not in cache:
            cache[key] = s_lambda(d, c, lam, opts)
        total += w * cache[key]
    return total


def upper_concave_envelope(points: np.ndarray) -> np.ndarray:
    """Vertices of the upper concave hull of 2-D points, sorted by abscissa."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float))))
    hull: list[tuple[float, float]] = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (pt[1] - y1) - (y2 - y1) * (pt[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(pt)
    return np.array(hull)


def g_i_curve(j: JointGrid, t_values, lambdas=None, opts: SolverOptions = SolverOptions()) -> np.ndarray:
    """Best-possible data processing function t -> sup{I(X;V) : I(Y;V) <= t}.

    Points (I(Y;V), I(X;V)) come from a lambda sweep of the solver, plus the
    constant V at the origin and V = Y at (H(Y), I(X;Y)); the answer is the
    upper concave envelope of those points, held flat beyond its last vertex.
    Returns an array of (t, g) rows.
    """
    t = np.asarray(t_values, dtype=float)
    if np.any(np.diff(t) < 0) or np.any(t < 0):
        raise InvalidParameterError("t values must be nonnegative and sorted")
    if lambdas is None:
        lambdas = np.geomspace(1.05, 200.0, 40)
    pts = [(0.0, 0.0), (discrete_entropy(j.py), mutual_information(j))]
    for lam in lambdas:
        sol = solve_ib(IBProblem(j, float(lam), opts.v_size, opts.tol, opts.max_iter,
                                 opts.seed, opts.restarts), include_constant=False)
        pts.append((sol.i_yv, sol.i_xv))
    hull = upper_concave_envelope(np.array(pts))
    # keep the nondecreasing part: beyond the max, more budget cannot hurt
    top = int(np.argmax(hull[:, 1]))
    hull = hull[: top + 1]
    g = np.interp(t, hull[:, 0], hull[:, 1], right=hull[-1, 1])
    return np.column_stack([t, g])


def gaussian_problem(gamma: float, snr: float, lam: float, opts: SolverOptions = SolverOptions(),
                     n_grid: int = 2049) -> IBProblem:
    """IB problem for X ~ N(0, gamma) through the unit-noise channel at ``snr``."""
    spec = MixtureSpec.gaussian(0.0, gamma)
    d = gaussian_density(default_grid(spec, n_grid), 0.0, gamma)
    j = joint_xy(d, ChannelSpec(snr), n_x=opts.n, n_y=opts.n)
    return IBProblem(j, lam, opts.v_size, opts.tol, opts.max_iter, opts.seed, opts.restarts)
