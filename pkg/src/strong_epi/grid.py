"""One-dimensional densities sampled on uniform grids.

Every functional in the package consumes a :class:`GridDensity`.  Values are
density samples ``f(x_i)`` (units 1/x) and integrals are Riemann sums with the
grid step as weight.  Transforms always renormalize; the mass lost before
renormalization accumulates in ``GridDensity.deficit`` so that truncation
error stays visible to callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np
from scipy import signal

from .errors import GridOverflowError, InvalidParameterError, TruncationError

DEFAULT_N = 2049
DEFAULT_PAD = 0.1
# Gaussian components are resolved out to this many standard deviations.
COVERAGE_SIGMAS = 8.0
NORM_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidParameterError("grid endpoints must be finite")
        if self.n < 2:
            raise InvalidParameterError(f"grid needs at least 2 points, got {self.n}")
        if not self.hi > self.lo:
            raise InvalidParameterError(f"grid needs hi > lo, got [{self.lo}, {self.hi}]")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return self.lo + self.step * np.arange(self.n)

    def covers(self, a: float, b: float) -> bool:
        slack = 1e-12 * max(1.0, abs(self.lo), abs(self.hi))
        return self.lo <= a + slack and self.hi >= b - slack

    @classmethod
    def with_step(cls, lo: float, hi: float, step: float, align: bool = True) -> "Grid":
        """Smallest grid of spacing ``step`` containing [lo, hi].

        With ``align`` the left endpoint is snapped to an integer multiple of
        ``step`` so that grids built this way are mutually commensurate.
        """
        if step <= 0:
            raise InvalidParameterError("step must be positive")
        if align:
            k = math.floor(lo / step + 1e-9)
            lo = k * step
        n = max(2, int(math.ceil((hi - lo) / step - 1e-9)) + 1)
        return cls(lo, lo + (n - 1) * step, n)


@dataclass(frozen=True)
class GridDensity:
    """Normalized density samples on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray
    deficit: float = 0.0

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise InvalidParameterError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidParameterError("density values must be finite and nonnegative")
        mass = float(v.sum()) * self.grid.step
        if abs(mass - 1.0) > NORM_TOL:
            raise InvalidParameterError(f"density mass {mass!r} is not 1; use GridDensity.normalized")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def normalized(cls, grid: Grid, values: np.ndarray, deficit: float = 0.0) -> "GridDensity":
        """Renormalize raw samples, folding the mass shortfall into ``deficit``."""
        v = np.asarray(values, dtype=float)
        if v.size and np.any(v < -1e-12 * np.max(np.abs(v))):
            raise InvalidParameterError("density samples must be nonnegative")
        # round-off negatives only
        v = np.clip(v, 0.0, None)
        mass = float(v.sum()) * grid.step
        if not mass > 0 or not math.isfinite(mass):
            raise InvalidParameterError("density has no mass on its grid")
        return cls(grid, v / mass, deficit + abs(1.0 - mass))

    @property
    def x(self) -> np.ndarray:
        return self.grid.points

    @property
    def step(self) -> float:
        return self.grid.step

    @property
    def masses(self) -> np.ndarray:
        return self.values * self.grid.step

    def mean(self) -> float:
        return moment(self, 1)

    def variance(self) -> float:
        m = self.mean()
        return float(np.sum((self.x - m) ** 2 * self.masses))


@dataclass(frozen=True)
class MixtureSpec:
    weights: tuple[float, ...]
    means: tuple[float, ...]
    variances: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(a) for a in self.weights)
        m = tuple(float(a) for a in self.means)
        s = tuple(float(a) for a in self.variances)
        if not (len(w) == len(m) == len(s) >= 1):
            raise InvalidParameterError("mixture arrays must have equal length >= 1")
        if any(a <= 0 for a in w):
            raise InvalidParameterError("mixture weights must be positive")
        if abs(sum(w) - 1.0) > 1e-12:
            raise InvalidParameterError(f"mixture weights sum to {sum(w)!r}, not 1")
        if any(a <= 0 for a in s):
            raise InvalidParameterError("mixture variances must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", s)

    @classmethod
    def gaussian(cls, mu: float = 0.0, sigma2: float = 1.0) -> "MixtureSpec":
        return cls((1.0,), (mu,), (sigma2,))

    @property
    def is_gaussian(self) -> bool:
        return len(set(zip(self.means, self.variances))) == 1

    def support(self) -> tuple[float, float]:
        """Hull of the +-8 sigma intervals of all components."""
        lo = min(m - COVERAGE_SIGMAS * math.sqrt(s) for m, s in zip(self.means, self.variances))
        hi = max(m + COVERAGE_SIGMAS * math.sqrt(s) for m, s in zip(self.means, self.variances))
        return lo, hi

    def mean(self) -> float:
        return sum(w * m for w, m in zip(self.weights, self.means))

    def variance(self) -> float:
        second = sum(w * (s + m * m) for w, m, s in zip(self.weights, self.means, self.variances))
        return second - self.mean() ** 2

    def second_moment(self) -> float:
        return self.variance() + self.mean() ** 2


def default_grid(spec: MixtureSpec, n: int = DEFAULT_N, pad: float = DEFAULT_PAD) -> Grid:
    lo, hi = spec.support()
    half_pad = 0.5 * pad * (hi - lo)
    return Grid(lo - half_pad, hi + half_pad, n)


def _normal_pdf(x: np.ndarray, mu: float, sigma2: float) -> np.ndarray:
    return np.exp(-0.5 * (x - mu) ** 2 / sigma2) / math.sqrt(2 * math.pi * sigma2)


def gaussian_density(grid: Grid, mu: float, sigma2: float) -> GridDensity:
    if not sigma2 > 0:
        raise InvalidParameterError(f"sigma2 must be positive, got {sigma2}")
    sigma = math.sqrt(sigma2)
    a, b = mu - COVERAGE_SIGMAS * sigma, mu + COVERAGE_SIGMAS * sigma
    if not grid.covers(a, b):
        raise TruncationError(f"grid [{grid.lo}, {grid.hi}] does not cover [{a}, {b}]")
    return GridDensity.normalized(grid, _normal_pdf(grid.points, mu, sigma2))


def mixture_density(grid: Grid, spec: MixtureSpec) -> GridDensity:
    a, b = spec.support()
    if not grid.covers(a, b):
        raise TruncationError(f"grid [{grid.lo}, {grid.hi}] does not cover mixture support [{a}, {b}]")
    x = grid.points
    vals = np.zeros_like(x)
    for w, m, s in zip(spec.weights, spec.means, spec.variances):
        vals += w * _normal_pdf(x, m, s)
    return GridDensity.normalized(grid, vals)


def uniform_density(grid: Grid, a: float, b: float) -> GridDensity:
    """Uniform density on [a, b]; each sample is the covered fraction of its cell."""
    if not b > a:
        raise InvalidParameterError("uniform density needs b > a")
    if not grid.covers(a, b):
        raise TruncationError(f"grid [{grid.lo}, {grid.hi}] does not cover [{a}, {b}]")
    x, h = grid.points, grid.step
    overlap = np.clip(np.minimum(x + h / 2, b) - np.maximum(x - h / 2, a), 0.0, None)
    return GridDensity.normalized(grid, overlap / h)


def moment(d: GridDensity, k: int) -> float:
    return float(np.sum(d.x**k * d.values) * d.step)


def translate(d: GridDensity, shift_steps: int) -> GridDensity:
    """Shift by an integer number of grid steps (exact)."""
    off = shift_steps * d.step
    return GridDensity(Grid(d.grid.lo + off, d.grid.hi + off, d.grid.n), d.values, d.deficit)


def scale_density(d: GridDensity, c: float) -> GridDensity:
    """Density of ``c * X``, carried by the image grid (no interpolation)."""
    if c == 0 or not math.isfinite(c):
        raise InvalidParameterError("scale factor must be finite and nonzero")
    lo, hi = c * d.grid.lo, c * d.grid.hi
    vals = d.values / abs(c)
    if c < 0:
        lo, hi = hi, lo
        vals = vals[::-1]
    return GridDensity.normalized(Grid(lo, hi, d.grid.n), vals, d.deficit)


def _same_step(a: Grid, b: Grid) -> bool:
    return abs(a.step - b.step) <= 1e-9 * max(a.step, b.step)


def convolve(d1: GridDensity, d2: GridDensity, fast: bool = False) -> GridDensity:
    """Density of X1 + X2 for independent summands on grids of equal step.

    The direct sum is the reference path; ``fast`` switches to FFT convolution,
    which agrees with it to roughly machine precision.
    """
    if not _same_step(d1.grid, d2.grid):
        raise GridOverflowError(f"convolution needs equal steps, got {d1.step} and {d2.step}")
    h = d1.step
    if fast:
        vals = np.clip(signal.fftconvolve(d1.values, d2.values), 0.0, None) * h
    else:
        vals = np.convolve(d1.values, d2.values) * h
    n = d1.grid.n + d2.grid.n - 1
    lo = d1.grid.lo + d2.grid.lo
    return GridDensity.normalized(Grid(lo, lo + (n - 1) * h, n), vals, d1.deficit + d2.deficit)


def gaussian_kernel(step: float, sigma2: float) -> GridDensity:
    """Centered N(0, sigma2) on a symmetric grid of the given step."""
    m = max(1, int(math.ceil(COVERAGE_SIGMAS * math.sqrt(sigma2) / step)))
    return gaussian_density(Grid(-m * step, m * step, 2 * m + 1), 0.0, sigma2)


def add_gaussian_noise(d: GridDensity, sigma2: float, fast: bool = False) -> GridDensity:
    """Density of X + N(0, sigma2); the output grid extends the input by +-8 sigma."""
    if sigma2 < 0:
        raise InvalidParameterError("noise variance must be nonnegative")
    if sigma2 == 0:
        return d
    return convolve(d, gaussian_kernel(d.step, sigma2), fast=fast)


def self_convolve_normalized(d: GridDensity) -> GridDensity:
    """Density of (X + X') / sqrt(2) for an independent copy X'."""
    return scale_density(convolve(d, d), 1.0 / math.sqrt(2.0))


def trim(d: GridDensity, tail: float = 1e-15) -> GridDensity:
    """Drop outer cells holding at most ``tail`` mass on each side."""
    m = d.masses
    left = np.cumsum(m)
    right = np.cumsum(m[::-1])
    i = int(np.searchsorted(left, tail, side="right"))
    j = d.grid.n - int(np.searchsorted(right, tail, side="right"))
    i, j = max(0, i - 1), min(d.grid.n, j + 1)
    if j - i < 2 or (i == 0 and j == d.grid.n):
        return d
    h = d.step
    g = Grid(d.grid.lo + i * h, d.grid.lo + (j - 1) * h, j - i)
    return GridDensity.normalized(g, d.values[i:j], d.deficit)


def resample(d: GridDensity, n: int) -> GridDensity:
    """Linear interpolation onto ``n`` points spanning the same interval."""
    g = Grid(d.grid.lo, d.grid.hi, n)
    return GridDensity.normalized(g, np.interp(g.points, d.x, d.values), d.deficit)


def refine(d: GridDensity) -> GridDensity:
    """Halve the step by inserting interpolated midpoints."""
    return resample(d, 2 * d.grid.n - 1)


# --- density file format ---------------------------------------------------

def density_from_dict(obj: Mapping[str, Any], n: int = DEFAULT_N,
                      pad: float = DEFAULT_PAD) -> tuple[GridDensity, MixtureSpec | None]:
    """Parse the JSON density format.

    Accepts ``{"grid": {"lo", "hi", "n"}, "values": [...]}`` or
    ``{"mixture": {"weights", "means", "variances"}}``.  Mixtures are sampled on
    the default grid for their support; the spec is returned alongside so
    callers can recognise Gaussian inputs.
    """
    if not isinstance(obj, Mapping):
        raise InvalidParameterError("density document must be a JSON object")
    if "mixture" in obj:
        m = obj["mixture"]
        spec = MixtureSpec(tuple(m["weights"]), tuple(m["means"]), tuple(m["variances"]))
        return mixture_density(default_grid(spec, n, pad), spec), spec
    if "grid" in obj and "values" in obj:
        g = obj["grid"]
        grid = Grid(float(g["lo"]), float(g["hi"]), int(g["n"]))
        return GridDensity.normalized(grid, np.asarray(obj["values"], dtype=float)), None
    raise InvalidParameterError("density document needs a 'mixture' or 'grid'+'values' entry")


def density_to_dict(d: GridDensity) -> dict[str, Any]:
    return {"grid": {"lo": d.grid.lo, "hi": d.grid.hi, "n": d.grid.n},
            "values": [float(v) for v in d.values]}


def mixture_to_dict(spec: MixtureSpec) -> dict[str, Any]:
    return {"mixture": {"weights": list(spec.weights), "means": list(spec.means),
                        "variances": list(spec.variances)}}
