"""Closed-form Gaussian expressions used as oracles; all values in bits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError

TWO_PI_E = 2.0 * math.pi * math.e


def gaussian_entropy(sigma2: float) -> float:
    return 0.5 * math.log2(TWO_PI_E * sigma2)


def gaussian_channel_information(snr: float) -> float:
    """I(X;Y) for Gaussian input through unit noise: 1/2 log2(1 + snr)."""
    return 0.5 * math.log2(1.0 + snr)


def _check_ib_args(gamma: float, snr: float, lam: float) -> None:
    if not gamma > 0:
        raise InvalidParameterError("gamma must be positive")
    if not snr >= 0:
        raise InvalidParameterError("snr must be nonnegative")
    if not lam >= 1:
        raise InvalidParameterError("lambda must be >= 1")


def gaussian_ib_value(gamma: float, snr: float, lam: float) -> float:
    """inf over V of I(Y;V) - lam I(X;V) for X ~ N(0, gamma), Y = sqrt(snr) X + N(0, 1)."""
    _check_ib_args(gamma, snr, lam)
    g = gamma * snr
    if lam == 1 or g * (lam - 1) <= 1:
        return 0.0
    return 0.5 * (math.log2((lam - 1) * g) - lam * math.log2((lam - 1) / lam * (1 + g)))


def gaussian_ib_optimal_noise(gamma: float, snr: float, lam: float) -> float | None:
    """Variance of U in the optimal V = Y + U, or None when a constant V is optimal."""
    _check_ib_args(gamma, snr, lam)
    g = gamma * snr
    if lam == 1 or g * (lam - 1) <= 1:
        return None
    return (1 + g) / (g * (lam - 1) - 1)


def gaussian_cascade_informations(gamma: float, snr: float, u_sigma2: float) -> tuple[float, float]:
    """(I(X;V), I(Y;V)) for V = Y + N(0, u_sigma2)."""
    g = gamma * snr
    return 0.5 * math.log2(1 + g / (1 + u_sigma2)), 0.5 * math.log2((1 + g + u_sigma2) / u_sigma2)


def v_lambda(snr: float, lam: float) -> float:
    """Infimum of the dual functional over unit-power inputs."""
    if not lam > 1:
        raise InvalidParameterError("v_lambda needs lambda > 1")
    if not snr >= 0:
        raise InvalidParameterError("snr must be nonnegative")
    if snr * (lam - 1) >= 1:
        return 0.5 * (lam * math.log2(lam * TWO_PI_E / (lam - 1))
                      - math.log2(TWO_PI_E / (lam - 1)) + math.log2(snr))
    return 0.5 * (lam * math.log2(TWO_PI_E * (1 + snr)) - math.log2(TWO_PI_E))


def v_lambda_low_branch(snr: float, lam: float) -> float:
    return 0.5 * (lam * math.log2(TWO_PI_E * (1 + snr)) - math.log2(TWO_PI_E))


def v_lambda_high_branch(snr: float, lam: float) -> float:
    return 0.5 * (lam * math.log2(lam * TWO_PI_E / (lam - 1))
                  - math.log2(TWO_PI_E / (lam - 1)) + math.log2(snr))


def v_lambda_vector(snrs: Sequence[float], lam: float) -> float:
    """Sum of per-coordinate values for a diagonal gain matrix (order independent)."""
    return math.fsum(v_lambda(s, lam) for s in snrs)


def s_lambda_gaussian(gamma: float, snr: float, lam: float) -> float:
    """Dual functional evaluated at X ~ N(0, gamma)."""
    return (-gaussian_entropy(gamma) + lam * gaussian_entropy(1 + gamma * snr)
            + gaussian_ib_value(gamma, snr, lam))


# --- two-encoder quadratic Gaussian source coding -------------------------

@dataclass(frozen=True)
class GaussianSourceSpec:
    rho: float

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise InvalidParameterError("correlation must satisfy |rho| < 1")


@dataclass(frozen=True)
class RateDistortionQuery:
    r_x: float
    r_y: float
    d_x: float
    d_y: float

    def __post_init__(self):
        if self.r_x < 0 or self.r_y < 0:
            raise InvalidParameterError("rates must be nonnegative")
        if not (0 < self.d_x <= 1 and 0 < self.d_y <= 1):
            raise InvalidParameterError("distortions must lie in (0, 1]")


def _rho(spec: GaussianSourceSpec | float) -> float:
    return spec.rho if isinstance(spec, GaussianSourceSpec) else GaussianSourceSpec(spec).rho


def beta_of_d(spec: GaussianSourceSpec | float, d: float) -> float:
    rho = _rho(spec)
    if not d > 0:
        raise InvalidParameterError("D must be positive")
    r2 = rho * rho
    return 1.0 + math.sqrt(1.0 + 4.0 * r2 * d / (1.0 - r2) ** 2)


def rate_for_distortion_product(spec: GaussianSourceSpec | float, d: float) -> float:
    """Smallest R with D >= 2^(-2R) (1 - rho^2 + rho^2 2^(-2R))."""
    rho = _rho(spec)
    return 0.5 * math.log2((1 - rho * rho) * beta_of_d(rho, d) / (2 * d))


def distortion_product_for_rate(spec: GaussianSourceSpec | float, r: float) -> float:
    rho = _rho(spec)
    a = 2.0 ** (-2.0 * r)
    return a * (1 - rho * rho + rho * rho * a)


def sum_rate_bound(spec: GaussianSourceSpec | float, d_x: float, d_y: float) -> float:
    return rate_for_distortion_product(spec, d_x * d_y)


def helper_rate_bound(spec: GaussianSourceSpec | float, d_own: float, r_other: float) -> float:
    """One-helper bound: 1/2 log2((1 - rho^2 + rho^2 2^(-2 R_other)) / d_own)."""
    rho = _rho(spec)
    return 0.5 * math.log2((1 - rho * rho + rho * rho * 2.0 ** (-2.0 * r_other)) / d_own)


def wagner_bounds(spec: GaussianSourceSpec | float, q: RateDistortionQuery) -> tuple[float, float, float]:
    """Slacks of the three rate-region constraints; all nonnegative iff admissible."""
    sx = q.r_x - helper_rate_bound(spec, q.d_x, q.r_y)
    sy = q.r_y - helper_rate_bound(spec, q.d_y, q.r_x)
    ss = q.r_x + q.r_y - sum_rate_bound(spec, q.d_x, q.d_y)
    return sx, sy, ss


def min_r_y(spec: GaussianSourceSpec | float, d_x: float, d_y: float, r_x: float) -> float:
    """Smallest admissible R_Y given R_X (inf when R_X alone is too small)."""
    rho = _rho(spec)
    r2 = rho * rho
    # X-helper constraint rearranged for R_Y
    arg = d_x * 2.0 ** (2.0 * r_x) - (1 - r2)
    if arg <= 0:
        return math.inf
    from_x = 0.0 if r2 == 0 or arg >= r2 else -0.5 * math.log2(arg / r2)
    return max(0.0, from_x, helper_rate_bound(rho, d_y, r_x), sum_rate_bound(rho, d_x, d_y) - r_x)


def region_boundary(spec: GaussianSourceSpec | float, d_x: float, d_y: float,
                    r_x_values: Sequence[float]) -> np.ndarray:
    return np.array([min_r_y(spec, d_x, d_y, r) for r in r_x_values])


def proposition_mtsc_slack(spec: GaussianSourceSpec | float, i_xu: float, i_yu: float,
                           i_xv_given_u: float, i_yv_given_u: float) -> float:
    rho = _rho(spec)
    r2 = rho * rho
    return (2.0 ** (-2.0 * (i_yu + i_xv_given_u))
            - r2 * 2.0 ** (-2.0 * (i_xu + i_yv_given_u)) - (1.0 - r2))


def gaussian_mtsc_informations(rho: float, a: float, b: float) -> tuple[float, float, float, float]:
    """(I(X;U), I(Y;U), I(X;V|U), I(Y;V|U)) for unit-variance X, Y with correlation rho,
    U = X + N(0, a) and V = Y + N(0, b)."""
    r2 = rho * rho
    var_y_u = 1 - r2 / (1 + a)
    i_xu = 0.5 * math.log2((1 + a) / a)
    i_yu = -0.5 * math.log2(var_y_u)
    i_xv_u = 0.5 * math.log2((var_y_u + b) / (1 - r2 + b))
    i_yv_u = 0.5 * math.log2((var_y_u + b) / b)
    return i_xu, i_yu, i_xv_u, i_yv_u


# --- strong data processing -------------------------------------------------

def strong_dpi_bound(h_x: float, i_xy: float, t: float) -> float:
    """Upper bound on g_I(t) for unit-noise Gaussian channels (tight for Gaussian X)."""
    if t < 0:
        raise InvalidParameterError("t must be nonnegative")
    return i_xy - 0.5 * math.log2(1.0 + 2.0 ** (2.0 * (h_x - t)) / TWO_PI_E)


# --- one-sided Gaussian interference channel --------------------------------

@dataclass(frozen=True)
class ICSpec:
    alpha: float
    p1: float
    p2: float

    def __post_init__(self):
        if not abs(self.alpha) < 1:
            raise InvalidParameterError("weak-interference regime needs |alpha| < 1")
        if not (self.p1 > 0 and self.p2 > 0):
            raise InvalidParameterError("powers must be positive")


@dataclass(frozen=True)
class HKCheck:
    admissible: bool
    slack_r1: float
    slack_r2: float
    slack_sum: float


def hk_sum_rhs(ic: ICSpec, r1: float) -> float:
    a2 = ic.alpha ** 2
    denom = ic.p2 + 1 - a2
    return a2 * ic.p2 * 2.0 ** (2 * r1) / (denom * (1 + a2 * ic.p1 + ic.p2)) + (1 - a2) / denom


def hk_max_r2(ic: ICSpec, r1: float) -> float:
    """R2 at which the coupled constraint is tight."""
    return -0.5 * math.log2(hk_sum_rhs(ic, r1))


def hk_gaussian_region_check(ic: ICSpec, r1: float, r2: float, tol: float = 0.0) -> HKCheck:
    s1 = 0.5 * math.log2(1 + ic.p1) - r1
    s2 = 0.5 * math.log2(1 + ic.p2) - r2
    s3 = 2.0 ** (-2 * r2) - hk_sum_rhs(ic, r1)
    return HKCheck(min(s1, s2, s3) >= -tol, s1, s2, s3)


# --- Poincare sharpening of Stam's inequality ---------------------------------

def poincare_sharpened_slack(n_x: float, j_x: float, zeta: float) -> float:
    """N^(1 + 3 zeta / 2) J^(1 + zeta) - 1 for a unit-variance input."""
    if not (n_x > 0 and j_x > 0):
        raise InvalidParameterError("entropy power and Fisher information must be positive")
    if zeta < 0:
        raise InvalidParameterError("zeta must be nonnegative")
    return n_x ** (1 + 1.5 * zeta) * j_x ** (1 + zeta) - 1.0
