"""The additive Gaussian channel Y = sqrt(snr) X + Z and Markov auxiliaries V.

Auxiliaries are built by applying a row-stochastic kernel P(V|Y) to a
discretized joint, so the chain X -> Y -> V holds by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import GridOverflowError, InvalidParameterError, TruncationError
from .functionals import JointGrid
from .grid import COVERAGE_SIGMAS, Grid, GridDensity, gaussian_density, resample, trim

MAX_V_POINTS = 8193
JOINT_DEFICIT_TOL = 1e-6


@dataclass(frozen=True)
class ChannelSpec:
    snr: float
    noise_sigma2: float = 1.0

    def __post_init__(self):
        if not self.snr >= 0:
            raise InvalidParameterError(f"snr must be nonnegative, got {self.snr}")
        if not self.noise_sigma2 > 0:
            raise InvalidParameterError(f"noise variance must be positive, got {self.noise_sigma2}")

    @property
    def gain(self) -> float:
        return math.sqrt(self.snr)


def output_support(d: GridDensity, c: ChannelSpec) -> tuple[float, float]:
    s = COVERAGE_SIGMAS * math.sqrt(c.noise_sigma2)
    return c.gain * d.grid.lo - s, c.gain * d.grid.hi + s


def _gauss(z: np.ndarray, sigma2: float) -> np.ndarray:
    return np.exp(-0.5 * z * z / sigma2) / math.sqrt(2 * math.pi * sigma2)


def _noisy_image(masses: np.ndarray, x: np.ndarray, gain: float, sigma2: float,
                 out: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Samples of sum_i masses_i * phi_sigma2(out - gain * x_i), chunked over ``out``."""
    vals = np.empty_like(out)
    gx = gain * x
    for a in range(0, out.size, chunk):
        blk = out[a:a + chunk]
        vals[a:a + chunk] = _gauss(blk[:, None] - gx[None, :], sigma2) @ masses
    return vals


def push_through(d: GridDensity, c: ChannelSpec, grid: Grid | None = None) -> GridDensity:
    """Density of sqrt(snr) X + Z on ``grid`` (default: image support, same point count)."""
    lo, hi = output_support(d, c)
    if grid is None:
        grid = Grid(lo, hi, d.grid.n)
    elif not grid.covers(lo, hi):
        raise GridOverflowError(f"output grid [{grid.lo}, {grid.hi}] misses [{lo}, {hi}]")
    if c.snr == 0:
        return gaussian_density(grid, 0.0, c.noise_sigma2)
    vals = _noisy_image(d.masses, d.x, c.gain, c.noise_sigma2, grid.points)
    return GridDensity.normalized(grid, vals, d.deficit)


def joint_xy(d: GridDensity, c: ChannelSpec, n_x: int | None = None,
             n_y: int | None = None) -> JointGrid:
    """Cell masses f(x_i) phi(y_j - sqrt(snr) x_i) dx dy.

    ``n_x`` resamples the (tail-trimmed) input onto fewer points; ``n_y``
    sets the output resolution (default: same as the input).
    """
    if n_x is not None and n_x != d.grid.n:
        d = resample(trim(d), n_x)
    lo, hi = output_support(d, c)
    yg = Grid(lo, hi, n_y or d.grid.n)
    y = yg.points
    kern = _gauss(y[None, :] - c.gain * d.x[:, None], c.noise_sigma2) * yg.step
    p = d.masses[:, None] * kern
    total = float(p.sum())
    if abs(1.0 - total) > JOINT_DEFICIT_TOL:
        raise TruncationError(f"joint grid loses {1.0 - total:.3g} of its mass")
    return JointGrid(d.grid, yg, p / total)


def extended_grid(g: Grid, u_sigma2: float, max_points: int = MAX_V_POINTS) -> Grid:
    """``g`` widened by +-8 sqrt(u_sigma2), keeping its step unless that needs too many points."""
    s = COVERAGE_SIGMAS * math.sqrt(u_sigma2)
    lo, hi = g.lo - s, g.hi + s
    n = int(math.ceil((hi - lo) / g.step)) + 1
    if n <= max_points:
        return Grid(lo, lo + (n - 1) * g.step, n)
    return Grid(lo, hi, max_points)


def degrade_with_noise(y: GridDensity, u_sigma2: float) -> GridDensity:
    """Density of V = Y + U, U ~ N(0, u_sigma2)."""
    if not u_sigma2 > 0:
        raise InvalidParameterError("u_sigma2 must be positive")
    vg = extended_grid(y.grid, u_sigma2)
    vals = _noisy_image(y.masses, y.x, 1.0, u_sigma2, vg.points)
    return GridDensity.normalized(vg, vals, y.deficit)


def apply_kernel(j: JointGrid, kernel: np.ndarray, v_grid: Grid | None = None) -> tuple[JointGrid, JointGrid]:
    """Lift P_XY through P(V|Y) = ``kernel`` to the pair of joints (X,V), (Y,V)."""
    k = np.asarray(kernel, dtype=float)
    if k.shape[0] != j.probs.shape[1]:
        raise InvalidParameterError("kernel rows must match the Y alphabet")
    xv = j.probs @ k
    yv = j.py[:, None] * k
    return JointGrid.normalized(j.x_grid, v_grid, xv), JointGrid.normalized(j.y_grid, v_grid, yv)


def gaussian_kernel_matrix(y_grid: Grid, u_sigma2: float, n_v: int | None = None) -> tuple[np.ndarray, Grid]:
    vg = extended_grid(y_grid, u_sigma2)
    if n_v is not None:
        vg = Grid(vg.lo, vg.hi, n_v)
    k = _gauss(vg.points[None, :] - y_grid.points[:, None], u_sigma2)
    k /= k.sum(axis=1, keepdims=True)
    return k, vg


def joint_yv_gaussian(j: JointGrid, u_sigma2: float, n_v: int | None = None) -> tuple[JointGrid, JointGrid]:
    """Joints of (X,V) and (Y,V) for V = Y + N(0, u_sigma2)."""
    if not u_sigma2 > 0:
        raise InvalidParameterError("u_sigma2 must be positive")
    k, vg = gaussian_kernel_matrix(j.y_grid, u_sigma2, n_v)
    return apply_kernel(j, k, vg)


def quantile_bins(py: np.ndarray, k: int) -> np.ndarray:
    """Bin index of every Y cell for an (approximately) equal-mass k-level quantizer."""
    n = py.size
    if k < 1:
        raise InvalidParameterError("quantizer needs k >= 1")
    if k > n:
        raise InvalidParameterError(f"k={k} exceeds the {n} available Y cells")
    if k == n:
        return np.arange(n)
    mid_cdf = np.cumsum(py) - 0.5 * py
    return np.minimum((k * mid_cdf).astype(int), k - 1)


def quantizer_kernel(py: np.ndarray, k: int) -> np.ndarray:
    bins = quantile_bins(py, k)
    kern = np.zeros((py.size, k))
    kern[np.arange(py.size), bins] = 1.0
    return kern


def quantize_y(j: JointGrid, k: int) -> tuple[JointGrid, JointGrid]:
    """V = deterministic k-level quantile quantizer of Y."""
    return apply_kernel(j, quantizer_kernel(j.py, k))


def erasure_kernel(py: np.ndarray, p: float, k: int | None = None) -> np.ndarray:
    """V equals Y (or its k-level quantization) with probability p, else an erasure symbol."""
    if not 0 <= p <= 1:
        raise InvalidParameterError("erasure pass probability must lie in [0, 1]")
    base = np.eye(py.size) if k is None else quantizer_kernel(py, k)
    return np.hstack([p * base, np.full((py.size, 1), 1.0 - p)])


def quantizer_edges(y: GridDensity, k: int) -> np.ndarray:
    """Interior quantile edges of a continuous Y density (k - 1 values)."""
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (y.values[1:] + y.values[:-1]) * y.step)])
    cdf /= cdf[-1]
    qs = np.arange(1, k) / k
    return np.interp(qs, cdf, y.x)


def quantized_channel_rows(x: np.ndarray, edges: np.ndarray, sigma2: float) -> np.ndarray:
    """P(V = b | X = x_i) when V bins X + N(0, sigma2) at ``edges``."""
    cuts = np.concatenate([[-np.inf], edges, [np.inf]])
    z = (cuts[None, :] - x[:, None]) / math.sqrt(2.0 * sigma2)
    cdf = 0.5 * special.erfc(-z)
    return np.clip(np.diff(cdf, axis=1), 0.0, None)
