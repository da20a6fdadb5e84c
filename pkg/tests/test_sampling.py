import math

import numpy as np
import pytest
from scipy import stats

from qsis.averaging import box_kernel
from qsis.sampling import (
    ModeError, YStatistic, draw_sample_set, empirical_y_moments, make_density, y_statistic,
)
from qsis.space import random_unit_element

from conftest import reference_space


@pytest.fixture(scope="module")
def K(ref_space):
    return ref_space.domain.K


@pytest.fixture(scope="module", params=[
    ("uniform", {}),
    ("gaussian", {"center": (0.3, 0.6), "sigma": (0.5, 0.4)}),
    ("tilted", {"kappa": 0.7}),
])
def density(request, K):
    fam, params = request.param
    return make_density(K, fam, **params)


def test_density_normalised(density):
    assert density.quadrature() == pytest.approx(1.0, abs=1e-9)


def test_density_constants_bracket_values(density, K):
    u, v = np.meshgrid(K.cell_midpoints(0), K.cell_midpoints(1), indexing="ij")
    vals = density(u, v)
    assert vals.min() >= density.c_rho_1 - 1e-12
    assert vals.max() <= density.c_rho_2 + 1e-12
    assert density.c_rho_1 > 0


def test_bad_density_params(K):
    with pytest.raises(ValueError):
        make_density(K, "tilted", kappa=1.0)
    with pytest.raises(ValueError):
        make_density(K, "cauchy")


def test_product_mode_needs_product_density(K):
    rho = make_density(K, "tilted", kappa=0.3)
    with pytest.raises(ModeError):
        draw_sample_set(rho, 3, 3, 0, mode="product")
    with pytest.raises(ModeError):
        draw_sample_set(make_density(K), 3, 3, 0, mode="sideways")


@pytest.mark.parametrize("mode", ["joint", "product"])
def test_points_in_K_and_layout(K, mode):
    rho = make_density(K, "gaussian", center=(0.2, 0.9), sigma=(0.3, 0.3))
    s = draw_sample_set(rho, 7, 5, 3, mode=mode)
    assert s.u.shape == (7, 5) and s.v.shape == (7, 5)
    assert np.all(K.contains_points(*s.points))
    if mode == "product":
        assert np.all(s.u == s.u[:, :1])
        assert np.all(s.v == s.v[:1, :])


def test_determinism(K):
    rho = make_density(K)
    a, b = draw_sample_set(rho, 6, 4, 99), draw_sample_set(rho, 6, 4, 99)
    assert np.array_equal(a.u, b.u) and np.array_equal(a.v, b.v)
    c = draw_sample_set(rho, 6, 4, 100)
    assert not np.array_equal(a.u, c.u)


def test_single_point(K):
    s = draw_sample_set(make_density(K), 1, 1, 0)
    assert s.u.shape == (1, 1)
    assert K.contains_points(*s.points).all()
    with pytest.raises(ValueError):
        draw_sample_set(make_density(K), 0, 1, 0)


def test_uniform_centroid(K):
    s = draw_sample_set(make_density(K), 100, 100, 7)
    u, v = s.points
    # uniform on [0,1]: sd 1/sqrt(12) per coordinate
    band = 3 / math.sqrt(12 * u.size)
    assert abs(u.mean() - 0.5) < band
    assert abs(v.mean() - 0.5) < band


@pytest.mark.parametrize("family,params,mode", [
    ("uniform", {}, "joint"),
    ("gaussian", {"center": (0.3, 0.6), "sigma": (0.5, 0.4)}, "joint"),
    ("tilted", {"kappa": 0.7}, "joint"),
    ("uniform", {}, "product"),
    ("gaussian", {"center": (0.3, 0.6), "sigma": (0.5, 0.4)}, "product"),
])
def test_chi_square_goodness_of_fit(K, family, params, mode):
    density = make_density(K, family, **params)
    if mode == "joint":
        s = draw_sample_set(density, 1000, 100, 2024, mode=mode)
        u, v = s.points
    else:
        # product layout shares coordinates; test the marginals' product on independent pairs
        a = draw_sample_set(density, 100_000, 1, 2024, mode=mode)
        b = draw_sample_set(density, 1, 100_000, 2025, mode=mode)
        u, v = a.u.ravel(), b.v.ravel()
    edges = np.linspace(0, 1, 9)
    obs, _, _ = np.histogram2d(u, v, bins=[edges, edges])
    # expected bin masses by a fine midpoint rule
    fine = (np.arange(800) + 0.5) / 800
    uu, vv = np.meshgrid(fine, fine, indexing="ij")
    mass = density(uu, vv).reshape(8, 100, 8, 100).sum(axis=(1, 3)) / 800 ** 2
    exp = mass / mass.sum() * obs.sum()
    assert stats.chisquare(obs.ravel(), exp.ravel()).pvalue > 1e-4


def test_y_zero_function(ref_space, ref_kernel, uniform_rho):
    f = lambda u, v: np.zeros(np.broadcast(u, v).shape)  # noqa: E731
    y = y_statistic(f, np.array([0.3, 0.9]), np.array([0.1, 0.5]), uniform_rho, ref_kernel, ref_space.domain)
    assert np.all(y == 0)


@pytest.mark.parametrize("family", ["uniform", "gaussian", "tilted"])
def test_y_constant_function(ref_space, ref_kernel, family):
    rho = make_density(ref_space.domain.K, family)
    f = lambda u, v: np.full(np.broadcast(u, v).shape, -2.5)  # noqa: E731
    Y = YStatistic.for_function(f, ref_kernel, ref_space.domain, rho)
    assert Y.expectation == pytest.approx(2.5, rel=1e-12)
    assert np.allclose(Y(np.array([0.0, 0.4, 1.0]), np.array([1.0, 0.7, 0.0])), 0, atol=1e-12)


def test_y_out_of_domain(ref_space, ref_kernel, uniform_rho):
    c = np.ones(ref_space.num_cols)
    Y = YStatistic.for_element(ref_space, ref_kernel, uniform_rho, c)
    with pytest.raises(ValueError):
        Y(np.array([1.2]), np.array([0.5]))
    f = lambda u, v: np.ones(np.broadcast(u, v).shape)  # noqa: E731
    with pytest.raises(ValueError):
        y_statistic(f, np.array([-0.1]), np.array([0.5]), uniform_rho, ref_kernel, ref_space.domain)


def test_y_hat_against_fine_oracle():
    # 512 nodes per unit: the W-sum is first order in the step
    space = reference_space(num_points=1024)
    kernel = box_kernel(space.domain.W)
    rho = make_density(space.domain.K)
    j = int(np.argmax(np.abs(space.point_design(np.array([0.5]), np.array([0.5]))[0])))
    S, T = np.nonzero(space.mask)
    c = np.zeros(space.num_cols)
    c[j] = 1.0
    Y = YStatistic.for_element(space, kernel, rho, c)
    got = float(Y(np.array([0.5]), np.array([0.5]))[0])

    w = -0.25 + (np.arange(2048) + 0.5) / 2048 * 0.5
    x = (np.arange(2048) + 0.5) / 2048

    def avg(k, col, pts):
        # (1/|W_k|) * integral over W_k of the generator factor at pts - w
        tab = space.factor_table(k, (pts[:, None] - w[None, :]).ravel())[0, :, col]
        return tab.reshape(len(pts), len(w)).mean(axis=1)

    A0, B0 = avg(0, S[j], np.array([0.5]))[0], avg(1, T[j], np.array([0.5]))[0]
    mean = avg(0, S[j], x).mean() * avg(1, T[j], x).mean()
    want = abs(A0 * B0) - mean
    assert abs(got - want) <= 1e-3 * max(abs(want), abs(A0 * B0))


def test_grid_mean_vanishes(ref_space, ref_kernel, e22):
    K = ref_space.domain.K
    for fam in ("uniform", "gaussian", "tilted"):
        rho = make_density(K, fam)
        _, c = random_unit_element(ref_space, e22, 5)
        Y = YStatistic.for_element(ref_space, ref_kernel, rho, c)
        assert abs(Y.grid_mean()) <= 1e-12


def test_moments_equal_pair(ref_space, ref_analysis, ref_kernel, uniform_rho, e22):
    _, c = random_unit_element(ref_space, e22, 11)
    rep = empirical_y_moments(ref_space, ref_analysis, ref_kernel, uniform_rho, c, c, 2000, 1, e22)
    assert rep["b_bound"] == 0 and rep["b_value"] == 0
    assert rep["c_bound"] == 0 and rep["c_value"] == 0
    assert rep["b_ok"] and rep["c_ok"]


def test_moments_need_enough_trials(ref_space, ref_analysis, ref_kernel, uniform_rho, e22):
    c = np.ones(ref_space.num_cols)
    with pytest.raises(ValueError):
        empirical_y_moments(ref_space, ref_analysis, ref_kernel, uniform_rho, c, c, 999, 0, e22)


def test_moment_bounds_hold(ref_space, ref_analysis, ref_kernel, e22):
    rho = make_density(ref_space.domain.K, "gaussian", center=(0.3, 0.6), sigma=(0.5, 0.4))
    _, cf = random_unit_element(ref_space, e22, 1)
    _, cg = random_unit_element(ref_space, e22, 2)
    rep = empirical_y_moments(ref_space, ref_analysis, ref_kernel, rho, cf, cg, 5000, 3, e22)
    assert all(rep[f"{k}_ok"] for k in "bcde")
    assert rep["a_exact"]
