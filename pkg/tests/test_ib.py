import math

import numpy as np
import pytest
from scipy import special

from strong_epi import closed_forms as cf
from strong_epi.channel import ChannelSpec, joint_xy
from strong_epi.errors import InvalidParameterError
from strong_epi.functionals import JointGrid, differential_entropy, discrete_entropy, mutual_information
from strong_epi.grid import Grid, MixtureSpec, default_grid, gaussian_density, mixture_density, translate
from strong_epi.ib import (
    ChannelKernel,
    IBProblem,
    SolverOptions,
    g_i_curve,
    gaussian_problem,
    ib_terms,
    s_lambda,
    s_lambda_conditional,
    solve_ib,
    upper_concave_envelope,
)

SMALL = SolverOptions(v_size=32, n=192)


def binary_input_joint(n_y):
    """X = +-1 equiprobable, Y = X + N(0, 1) binned into n_y equal-width cells on [-3, 3]."""
    edges = np.concatenate([[-np.inf], np.linspace(-3, 3, n_y + 1)[1:-1], [np.inf]])
    rows = []
    for x in (-1.0, 1.0):
        cdf = 0.5 * special.erfc(-(edges - x) / math.sqrt(2))
        rows.append(0.5 * np.diff(cdf))
    return np.array(rows)


def kl2(p, q):
    """KL(p || q) in bits along the last axis, for binary distributions given by P(x = +1)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(p > 0, p * np.log2(p / q), 0.0)
        b = np.where(p < 1, (1 - p) * np.log2((1 - p) / (1 - q)), 0.0)
    return a + b


def variational_oracle(pxy, lam, res=200):
    """min over (P(V), decoders) of sum_y p(y) (-log2 sum_v r_v 2^(-lam KL)) - lam I(X;Y) for |V| = 2."""
    py = pxy.sum(axis=0)
    post = pxy[1] / py
    grid = (np.arange(res + 1) / res).clip(1e-9, 1 - 1e-9)
    d0, d1 = np.meshgrid(grid, grid, indexing="ij")
    e0 = np.stack([2.0 ** (-lam * kl2(p, d0)) for p in post])
    e1 = np.stack([2.0 ** (-lam * kl2(p, d1)) for p in post])
    best = np.inf
    for r in np.arange(res + 1) / res:
        val = -(py[:, None, None] * np.log2(r * e0 + (1 - r) * e1)).sum(axis=0)
        best = min(best, float(val.min()))
    return best - lam * mutual_information(pxy)


def kernel_oracle(pxy, lam, res=200):
    """Direct search over P(V = 0 | y) on a res-grid for three Y cells and |V| = 2."""
    g = np.arange(res + 1) / res
    a, b, c = np.meshgrid(g, g, g, indexing="ij")
    q0 = np.stack([a.ravel(), b.ravel(), c.ravel()], axis=1)
    best = np.inf
    for chunk in np.array_split(np.arange(q0.shape[0]), 40):
        qs = q0[chunk]
        q = np.stack([qs, 1 - qs], axis=2)
        pxv = np.einsum("xy,kyv->kxv", pxy, q)
        pyv = pxy.sum(axis=0)[None, :, None] * q
        vals = []
        for m in (pxv, pyv):
            pv = m.sum(axis=1, keepdims=True)
            pr = m.sum(axis=2, keepdims=True)
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(m > 0, m * np.log2(m / (pr * pv)), 0.0)
            vals.append(t.sum(axis=(1, 2)))
        best = min(best, float(np.min(vals[1] - lam * vals[0])))
    return best


def test_problem_validation():
    j = JointGrid(None, None, np.full((2, 2), 0.25))
    for kw in ({"lam": 0.5}, {"lam": 2, "v_size": 1}, {"lam": 2, "tol": 0}, {"lam": 2, "max_iter": 0}):
        with pytest.raises(InvalidParameterError):
            IBProblem(j, **kw)
    with pytest.raises(InvalidParameterError):
        ChannelKernel(np.array([[0.5, 0.4]]))


def test_matches_variational_brute_force():
    pxy = binary_input_joint(8)
    sol = solve_ib(IBProblem(JointGrid(None, None, pxy), 2.0, v_size=2))
    oracle = variational_oracle(pxy, 2.0)
    assert sol.objective == pytest.approx(oracle, abs=1e-2)
    assert sol.objective <= oracle + 1e-9


def test_matches_kernel_brute_force():
    pxy = binary_input_joint(3)
    sol = solve_ib(IBProblem(JointGrid(None, None, pxy), 2.0, v_size=2))
    oracle = kernel_oracle(pxy, 2.0)
    assert sol.objective == pytest.approx(oracle, abs=1e-2)
    assert sol.objective <= oracle + 1e-9


def test_solution_invariants_and_descent():
    pxy = binary_input_joint(16)
    sol = solve_ib(IBProblem(JointGrid(None, None, pxy), 3.0, v_size=8, seed=4))
    i_xv, i_yv = ib_terms(pxy, sol.kernel.rows)
    assert sol.objective == pytest.approx(i_yv - 3.0 * i_xv, abs=1e-9)
    assert sol.objective == pytest.approx(sol.i_yv - 3.0 * sol.i_xv, abs=1e-9)
    assert sol.i_xv <= sol.i_yv + 1e-9
    h = np.array(sol.history)
    assert h.size > 1
    assert np.all(np.diff(h) <= 1e-12)


def test_lambda_one_is_zero():
    j = joint_xy(gaussian_density(default_grid(MixtureSpec.gaussian()), 0.0, 1.0), ChannelSpec(4.0), 192, 192)
    sol = solve_ib(IBProblem(j, 1.0, v_size=32))
    assert abs(sol.objective) < 1e-6
    assert abs(solve_ib(IBProblem(j, 1.0, v_size=32), include_constant=False).objective) < 1e-6


def test_lambda_cap_warns():
    pxy = binary_input_joint(4)
    with pytest.warns(RuntimeWarning):
        solve_ib(IBProblem(JointGrid(None, None, pxy), 1e7, v_size=2, restarts=1))


def test_deterministic_given_seed():
    pxy = binary_input_joint(12)
    a = solve_ib(IBProblem(JointGrid(None, None, pxy), 2.5, v_size=6, seed=9))
    b = solve_ib(IBProblem(JointGrid(None, None, pxy), 2.5, v_size=6, seed=9))
    assert a.objective == b.objective
    assert np.array_equal(a.kernel.rows, b.kernel.rows)


def test_translation_invariance():
    spec = MixtureSpec((0.4, 0.6), (-1.5, 1.0), (0.5, 1.0))
    d = mixture_density(default_grid(spec, n=1025), spec)
    c = ChannelSpec(2.0)
    a = solve_ib(IBProblem(joint_xy(d, c, 160, 160), 2.5, v_size=24))
    b = solve_ib(IBProblem(joint_xy(translate(d, 40), c, 160, 160), 2.5, v_size=24))
    assert a.objective == pytest.approx(b.objective, abs=1e-9)


def test_solver_never_beats_gaussian_infimum():
    for snr, lam in ((1.0, 2.0), (2.0, 4.0), (0.5, 1.5)):
        sol = solve_ib(gaussian_problem(1.0, snr, lam, SMALL))
        assert sol.objective >= cf.gaussian_ib_value(1.0, snr, lam) - 2e-2


@pytest.mark.slow
def test_v_size_doubling_audit():
    base = solve_ib(gaussian_problem(1.0, 4.0, 3.0))
    doubled = solve_ib(gaussian_problem(1.0, 4.0, 3.0, SolverOptions(v_size=128)))
    assert abs(base.objective - doubled.objective) < 2e-3


def test_s_lambda_gaussian_cases():
    d1 = gaussian_density(default_grid(MixtureSpec.gaussian()), 0.0, 1.0)
    assert s_lambda(d1, ChannelSpec(1.0), 2.0, SMALL) == pytest.approx(cf.v_lambda(1.0, 2.0), abs=3e-2)
    half = MixtureSpec.gaussian(0.0, 0.5)
    d05 = gaussian_density(default_grid(half), 0.0, 0.5)
    tpe = 2 * math.pi * math.e
    ref = 0.5 * (2 * math.log2(tpe * 1.5) - math.log2(tpe * 0.5))
    assert s_lambda(d05, ChannelSpec(1.0), 2.0, SMALL) == pytest.approx(ref, abs=3e-2)


def test_s_lambda_above_v_lambda_for_corpus():
    rng = np.random.default_rng(21)
    for _ in range(3):
        means = rng.uniform(-0.8, 0.8, 2)
        vars_ = rng.uniform(0.05, 0.3, 2)
        spec = MixtureSpec((0.5, 0.5), tuple(means), tuple(vars_))
        scale = 1 / math.sqrt(spec.second_moment())
        spec = MixtureSpec((0.5, 0.5), tuple(means * scale), tuple(vars_ * scale**2))
        d = mixture_density(default_grid(spec), spec)
        assert s_lambda(d, ChannelSpec(1.0), 2.0, SMALL) >= cf.v_lambda(1.0, 2.0) - 5e-2


def test_s_lambda_conditional_cases():
    g = Grid(-12.0, 12.0, 2401)
    a = gaussian_density(g, 0.0, 1.0)
    c = ChannelSpec(1.0)
    base = s_lambda(a, c, 2.0, SMALL)
    assert s_lambda_conditional([(0.5, a), (0.5, a)], c, 2.0, SMALL) == pytest.approx(base, abs=1e-9)
    shifted = gaussian_density(g, 3.0, 1.0)
    assert s_lambda_conditional([(0.5, a), (0.5, shifted)], c, 2.0, SMALL) == pytest.approx(base, abs=3e-2)
    lo, hi = gaussian_density(g, 0.0, 0.5), gaussian_density(g, 0.0, 1.5)
    assert s_lambda_conditional([(0.5, lo), (0.5, hi)], c, 2.0, SMALL) >= cf.v_lambda(1.0, 2.0) - 5e-2
    with pytest.raises(InvalidParameterError):
        s_lambda_conditional([(0.5, a), (0.3, a)], c, 2.0, SMALL)
    with pytest.raises(InvalidParameterError):
        s_lambda_conditional([(0.3, a), (0.3, a), (0.4, a)], c, 2.0, SMALL)


def test_upper_concave_envelope():
    pts = np.array([[0, 0], [1, 0.5], [2, 0.6], [1.5, 0.2], [3, 0.6]])
    hull = upper_concave_envelope(pts)
    assert [tuple(p) for p in hull] == [(0, 0), (1, 0.5), (2, 0.6), (3, 0.6)]


@pytest.fixture(scope="module")
def gi_setup():
    d = gaussian_density(default_grid(MixtureSpec.gaussian()), 0.0, 1.0)
    j = joint_xy(d, ChannelSpec(1.0), 128, 128)
    h_y = discrete_entropy(j.py)
    t = np.array([0.0, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.5, h_y, h_y + 1])
    lams = np.geomspace(1.1, 100.0, 14)
    return d, j, t, g_i_curve(j, t, lambdas=lams, opts=SolverOptions(v_size=24))


def test_g_i_endpoints(gi_setup):
    _, j, t, curve = gi_setup
    assert np.array_equal(curve[:, 0], t)
    assert abs(curve[0, 1]) < 1e-6
    i_xy = mutual_information(j)
    assert curve[-2, 1] == pytest.approx(i_xy, abs=5e-3)
    assert curve[-1, 1] == pytest.approx(i_xy, abs=5e-3)


def test_g_i_shape(gi_setup):
    _, _, t, curve = gi_setup
    g = curve[:, 1]
    assert np.all(np.diff(g) >= -1e-3)
    slopes = np.diff(g) / np.diff(t)
    assert np.all(np.diff(slopes) <= 1e-3)


def test_g_i_matches_gaussian_bound(gi_setup):
    d, j, t, curve = gi_setup
    k = int(np.where(t == 0.5)[0][0])
    ref = cf.strong_dpi_bound(differential_entropy(d), 0.5 * math.log2(2), 0.5)
    assert ref == pytest.approx(0.20752, abs=1e-5)
    assert curve[k, 1] == pytest.approx(ref, abs=1e-2)


def test_g_i_rejects_unsorted(gi_setup):
    _, j, _, _ = gi_setup
    with pytest.raises(InvalidParameterError):
        g_i_curve(j, [0.5, 0.1])
