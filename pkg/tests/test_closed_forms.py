import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strong_epi import closed_forms as cf
from strong_epi.errors import InvalidParameterError

LOG2 = math.log2
TPE = 2 * math.pi * math.e


def test_ib_value_branches():
    assert cf.gaussian_ib_value(1, 0.4, 3) == 0.0
    ref = 0.5 * (LOG2(8) - 3 * LOG2(10 / 3))
    assert cf.gaussian_ib_value(1, 4, 3) == pytest.approx(ref, abs=1e-12)
    assert ref == pytest.approx(-1.10545, abs=1e-5)
    assert cf.gaussian_ib_value(2.0, 5.0, 1.0) == 0.0


@pytest.mark.parametrize("lam", [1.5, 2.0, 3.0, 7.5, 40.0])
def test_ib_value_threshold_continuity(lam):
    g = 1 / (lam - 1)
    nontrivial = 0.5 * (LOG2((lam - 1) * g) - lam * LOG2((lam - 1) / lam * (1 + g)))
    assert abs(nontrivial) < 1e-12
    assert abs(cf.gaussian_ib_value(1.0, g * (1 + 1e-12), lam)) < 1e-11


def test_ib_value_monotone_in_lambda():
    lams = np.linspace(1, 20, 200)
    vals = [cf.gaussian_ib_value(1.3, 2.7, lam) for lam in lams]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


def test_optimal_noise_reproduces_value():
    assert cf.gaussian_ib_optimal_noise(1, 4, 3) == pytest.approx(5 / 7, abs=1e-15)
    assert cf.gaussian_ib_optimal_noise(1, 0.4, 3) is None
    rng = np.random.default_rng(3)
    for _ in range(50):
        gamma, snr, lam = rng.uniform(0.2, 3), rng.uniform(0.1, 10), rng.uniform(1.1, 10)
        u = cf.gaussian_ib_optimal_noise(gamma, snr, lam)
        if u is None:
            continue
        i_xv, i_yv = cf.gaussian_cascade_informations(gamma, snr, u)
        assert i_yv - lam * i_xv == pytest.approx(cf.gaussian_ib_value(gamma, snr, lam), abs=1e-10)


def test_argument_validation():
    with pytest.raises(InvalidParameterError):
        cf.gaussian_ib_value(1, 1, 0.5)
    with pytest.raises(InvalidParameterError):
        cf.v_lambda(1, 1)
    with pytest.raises(InvalidParameterError):
        cf.GaussianSourceSpec(1.0)
    with pytest.raises(InvalidParameterError):
        cf.RateDistortionQuery(0.1, 0.1, 0.0, 0.5)
    with pytest.raises(InvalidParameterError):
        cf.ICSpec(1.0, 1, 1)
    with pytest.raises(InvalidParameterError):
        cf.strong_dpi_bound(1.0, 0.5, -1)


def test_v_lambda_values():
    ref = 0.5 * (2 * LOG2(4 * math.pi * math.e) - LOG2(TPE))
    assert cf.v_lambda(1, 2) == pytest.approx(ref, abs=1e-12)
    assert ref == pytest.approx(3.04710, abs=1e-5)
    h1, h2 = 0.5 * LOG2(TPE), 0.5 * LOG2(2 * TPE)
    assert cf.v_lambda(1, 2) == pytest.approx(-h1 + 2 * h2 + cf.gaussian_ib_value(1, 1, 2), abs=1e-12)
    assert cf.s_lambda_gaussian(1, 1, 2) == pytest.approx(cf.v_lambda(1, 2), abs=1e-12)


def test_v_lambda_continuity_sweep():
    rng = np.random.default_rng(11)
    for lam in rng.uniform(1.01, 50, 100):
        s = 1 / (lam - 1)
        assert abs(cf.v_lambda_low_branch(s, lam) - cf.v_lambda_high_branch(s, lam)) <= 1e-12 * max(
            1.0, abs(cf.v_lambda_low_branch(s, lam)))


def test_v_lambda_vector():
    assert cf.v_lambda_vector([1, 1], 2) == pytest.approx(2 * cf.v_lambda(1, 2), abs=1e-12)
    assert cf.v_lambda_vector([1, 1], 2) == pytest.approx(6.09420, abs=1e-5)
    assert cf.v_lambda_vector([0.7], 3) == cf.v_lambda(0.7, 3)
    assert cf.v_lambda_vector([0.3, 5.0], 2.5) == cf.v_lambda_vector([5.0, 0.3], 2.5)


def test_beta_values():
    for d in (0.01, 0.5, 3.0):
        assert cf.beta_of_d(0.0, d) == 2.0
    ref = 1 + math.sqrt(1 + 4 * 0.81 * 0.1 / 0.19**2)
    assert cf.beta_of_d(0.9, 0.1) == pytest.approx(ref, abs=1e-15)
    # the printed 4.15834 is a rounding of 4.1583333...
    assert ref == pytest.approx(4.15834, abs=1e-5)


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.99, 0.99), st.floats(1e-4, 1.0))
def test_beta_roundtrip(rho, d):
    r = cf.rate_for_distortion_product(rho, d)
    assert cf.distortion_product_for_rate(rho, r) == pytest.approx(d, abs=1e-9)


def test_wagner_independent_sources():
    q = cf.RateDistortionQuery(1.0, 1.0, 0.25, 0.25)
    sx, sy, ss = cf.wagner_bounds(0.0, q)
    assert sx == pytest.approx(1.0 - 0.5 * LOG2(4), abs=1e-15)
    assert sy == pytest.approx(1.0 - 0.5 * LOG2(4), abs=1e-15)
    assert ss == pytest.approx(2.0 - 2.0, abs=1e-15)
    assert cf.sum_rate_bound(0.0, 0.25, 0.25) == pytest.approx(2.0, abs=1e-15)


def test_wagner_correlated_sum_rate():
    d = math.sqrt(0.1)
    ref = 0.5 * LOG2(0.19 * (1 + math.sqrt(1 + 4 * 0.81 * 0.1 / 0.19**2)) / 0.2)
    assert cf.sum_rate_bound(0.9, d, d) == pytest.approx(ref, abs=1e-12)
    assert ref == pytest.approx(0.99102, abs=5e-5)


def test_helper_limit():
    assert cf.helper_rate_bound(0.6, 0.3, 60.0) == pytest.approx(0.5 * LOG2(0.64 / 0.3), abs=1e-12)


def test_sum_rate_monotone():
    prods = np.sort(np.random.default_rng(5).uniform(1e-4, 1.0, 100))
    vals = [cf.rate_for_distortion_product(0.7, p) for p in prods]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_region_boundary_shape():
    r = np.linspace(0.3, 3.0, 60)
    b = cf.region_boundary(0.8, 0.2, 0.3, r)
    finite = b[np.isfinite(b)]
    assert finite.size > 40
    assert np.all(np.diff(finite) <= 1e-12)
    for rx, ry in zip(r, b):
        if np.isfinite(ry):
            s = cf.wagner_bounds(0.8, cf.RateDistortionQuery(rx, ry, 0.2, 0.3))
            assert min(s) >= -1e-9


def test_mtsc_slack_cases():
    assert cf.proposition_mtsc_slack(0.7, 0, 0, 0, 0) == 0.0
    assert cf.proposition_mtsc_slack(0.0, 0.8, 0.0, 0.0, 1.3) == 0.0
    infos = cf.gaussian_mtsc_informations(0.5, 1.0, 1.0)
    assert cf.proposition_mtsc_slack(0.5, *infos) >= -1e-12


def test_mtsc_gaussian_grid():
    cells = 0
    for rho in np.linspace(-0.95, 0.95, 20):
        for a in np.geomspace(0.05, 20, 20):
            b = 1 / a
            infos = cf.gaussian_mtsc_informations(rho, a, b)
            assert min(infos) >= -1e-15
            assert cf.proposition_mtsc_slack(rho, *infos) >= -1e-12
            cells += 1
    assert cells == 400


def test_mtsc_informations_by_covariance():
    rho, a, b = 0.6, 0.7, 1.9
    # joint covariance of (X, Y, U, V)
    c = np.array([[1, rho, 1, rho], [rho, 1, rho, 1], [1, rho, 1 + a, rho], [rho, 1, rho, 1 + b]])

    def h(idx):
        return 0.5 * LOG2(np.linalg.det(c[np.ix_(idx, idx)]))

    i_xu = h([0]) + h([2]) - h([0, 2])
    i_yu = h([1]) + h([2]) - h([1, 2])
    i_xv_u = h([0, 2]) + h([3, 2]) - h([0, 2, 3]) - h([2])
    i_yv_u = h([1, 2]) + h([3, 2]) - h([1, 2, 3]) - h([2])
    assert cf.gaussian_mtsc_informations(rho, a, b) == pytest.approx((i_xu, i_yu, i_xv_u, i_yv_u), abs=1e-12)


def test_strong_dpi_values():
    h = 0.5 * LOG2(TPE)
    assert cf.strong_dpi_bound(h, 0.5, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert cf.strong_dpi_bound(h, 0.5, 60.0) == pytest.approx(0.5, abs=1e-12)
    ref = 0.5 - 0.5 * LOG2(1 + 2 ** (2 * (h - 0.5)) / TPE)
    assert cf.strong_dpi_bound(h, 0.5, 0.5) == pytest.approx(ref, abs=1e-15)
    assert ref == pytest.approx(0.20752, abs=1e-5)


def test_hk_cases():
    ic0 = cf.ICSpec(0.0, 2.0, 3.0)
    assert cf.hk_max_r2(ic0, 0.4) == pytest.approx(0.5 * LOG2(4.0), abs=1e-12)
    for p1 in np.geomspace(0.1, 100, 12):
        for p2 in np.geomspace(0.1, 100, 12):
            for a in (-0.9, -0.3, 0.2, 0.7):
                assert cf.hk_max_r2(cf.ICSpec(a, p1, p2), 0.0) >= 0.5 * LOG2(1 + p2) - 1e-12
    ic = cf.ICSpec(0.6, 3.0, 2.0)
    r2 = cf.hk_max_r2(ic, 0.3)
    chk = cf.hk_gaussian_region_check(ic, 0.3, r2)
    assert abs(chk.slack_sum) <= 1e-12
    assert cf.hk_gaussian_region_check(ic, 0.3, r2 - 0.01).admissible
    assert not cf.hk_gaussian_region_check(ic, 0.3, r2 + 0.01).admissible


def test_poincare_cases():
    for z in (0.0, 0.5, 2.0):
        assert cf.poincare_sharpened_slack(1.0, 1.0, z) == 0.0
    assert cf.poincare_sharpened_slack(0.8, 1.25, 0.0) == pytest.approx(0.0, abs=1e-15)
    val = cf.poincare_sharpened_slack(0.9, 1.2, 1.0)
    assert val == pytest.approx(0.9**2.5 * 1.44 - 1, abs=1e-15)
    assert val == pytest.approx(0.1065442, abs=1e-7)
