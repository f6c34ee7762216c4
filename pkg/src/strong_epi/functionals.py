"""Information functionals on grid densities and discretized joints.

Entropies and mutual informations are in bits.  Fisher information uses
natural derivatives, so J(N(0, s2)) = 1/s2 and de Bruijn's identity carries
the explicit 1/(2 ln 2) factor in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NumericGateError
from .grid import Grid, GridDensity, add_gaussian_noise, self_convolve_normalized

TWO_PI_E = 2.0 * math.pi * math.e
FISHER_FLOOR = 1e-300
FISHER_STABILITY = 0.01


@dataclass(frozen=True)
class JointGrid:
    """Cell masses of a discretized pair (X, Y).

    ``x_grid``/``y_grid`` are None for finite alphabets (e.g. a quantized V).
    """

    x_grid: Grid | None
    y_grid: Grid | None
    probs: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.probs, dtype=float)
        if p.ndim != 2:
            raise InvalidParameterError("joint probabilities must be a matrix")
        if self.x_grid is not None and p.shape[0] != self.x_grid.n:
            raise InvalidParameterError("row count does not match x grid")
        if self.y_grid is not None and p.shape[1] != self.y_grid.n:
            raise InvalidParameterError("column count does not match y grid")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise InvalidParameterError("joint cell masses must be nonnegative and sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def normalized(cls, x_grid, y_grid, probs) -> "JointGrid":
        p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
        return cls(x_grid, y_grid, p / p.sum())

    @property
    def px(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    @property
    def py(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    def x_marginal(self) -> GridDensity:
        return GridDensity.normalized(self.x_grid, self.px / self.x_grid.step)

    def y_marginal(self) -> GridDensity:
        return GridDensity.normalized(self.y_grid, self.py / self.y_grid.step)


def _xlogx(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


def differential_entropy(d: GridDensity) -> float:
    """-sum f log2 f * step, with 0 log 0 = 0."""
    return float(-np.sum(_xlogx(d.values)) * d.step)


def entropy_power(d: GridDensity) -> float:
    return 2.0 ** (2.0 * differential_entropy(d)) / TWO_PI_E


def discrete_entropy(p: np.ndarray) -> float:
    return float(-np.sum(_xlogx(np.asarray(p, dtype=float))))


def _fisher_raw(values: np.ndarray, step: float) -> float:
    df = np.gradient(values, step)
    # cells where the sampled density vanishes carry no score
    pos = values > 0
    return float(np.sum(df[pos] ** 2 / np.maximum(values[pos], FISHER_FLOOR)) * step)


def fisher_information(d: GridDensity, check: bool = False) -> float:
    """Fisher information of the location family, by central differences.

    With ``check`` the estimate must agree within 1% with the same estimate
    on the grid of doubled step; otherwise :class:`NumericGateError` is raised.
    Rough densities should be pre-smoothed with a Gaussian of variance at
    least 4 step**2.
    """
    j = _fisher_raw(d.values, d.step)
    if check:
        coarse = d.values[::2]
        coarse = coarse / (coarse.sum() * 2 * d.step)
        jc = _fisher_raw(coarse, 2 * d.step)
        if not math.isfinite(j) or abs(jc - j) > FISHER_STABILITY * abs(j):
            raise NumericGateError(
                f"Fisher information unstable under grid doubling: {j:.6g} vs {jc:.6g}")
    return j


def mutual_information(j: JointGrid | np.ndarray) -> float:
    """I(X;Y) in bits from a joint mass matrix; empty cells are skipped."""
    p = j.probs if isinstance(j, JointGrid) else np.asarray(j, dtype=float)
    if min(p.shape) == 1:
        # one side is constant
        return 0.0
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    pos = p > 0
    denom = (px * py)[pos]
    return float(np.sum(p[pos] * np.log2(p[pos] / denom)))


def de_bruijn_residual(d: GridDensity, t: float | None = None, dt: float | None = None,
                       nats: bool = False) -> float:
    """Gap between the finite-difference entropy slope and J/2 along the heat flow.

    Returns |[h(X_{t+dt}) - h(X_{t-dt})] / (2 dt) - J(X_t) / (2 ln 2)| where
    X_s = X + N(0, s).  Defaults: t = 1e-3 Var(X), dt = t / 10.  With
    ``nats`` both terms are expressed in nats (J / 2).
    """
    if t is None:
        t = 1e-3 * d.variance()
    if dt is None:
        dt = t / 10.0
    if not (t > 0 and 0 < dt < t):
        raise InvalidParameterError("de Bruijn check needs t > dt > 0")
    h_plus = differential_entropy(add_gaussian_noise(d, t + dt))
    h_minus = differential_entropy(add_gaussian_noise(d, t - dt))
    j_t = fisher_information(add_gaussian_noise(d, t))
    slope = (h_plus - h_minus) / (2.0 * dt)
    if nats:
        return abs(slope * math.log(2.0) - j_t / 2.0)
    return abs(slope - j_t / (2.0 * math.log(2.0)))


def doubling_constant(d: GridDensity) -> float:
    """N((X + X')/sqrt 2) / N(X)."""
    return entropy_power(self_convolve_normalized(d)) / entropy_power(d)
