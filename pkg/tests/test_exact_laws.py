import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import exp1

from pdlab.exact_laws import (
    DensityGrid,
    MomentQuery,
    exp_integral_J,
    g1_density,
    gn_density,
    homozygosity_moment,
    log_band_probability_p1,
    log_band_probability_pk,
    log_tail_pk,
    marginal_pk,
    moment_pk,
    tail_p1,
)
from pdlab.sampling import sample_homozygosity, sample_top_ranked


class TestExpIntegral:
    @given(u=st.floats(1e-8, 700.0))
    def test_matches_scipy_oracle(self, u):
        assert math.isclose(exp_integral_J(u), float(exp1(u)), rel_tol=1e-9, abs_tol=1e-300)

    def test_matches_quadrature_oracle(self):
        for u in (0.1, 0.5, 1.0, 2.0, 10.0):
            oracle, _ = quad(lambda x: math.exp(-x) / x, u, u + 200.0, limit=200)
            assert math.isclose(exp_integral_J(u), oracle, rel_tol=1e-8)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            exp_integral_J(0.0)

    @given(u=st.floats(1e-6, 100.0))
    def test_positive_and_decreasing(self, u):
        assert exp_integral_J(u) > exp_integral_J(u * 1.5) > 0.0


class TestMoments:
    def test_ranked_means_sum_to_one(self):
        # sum_k E[P_k] = 1; truncate once terms are negligible
        theta = 2.0
        total = sum(moment_pk(MomentQuery(k, 1, theta)) for k in range(1, 61))
        assert math.isclose(total, 1.0, abs_tol=1e-9)

    def test_second_moments_sum_to_homozygosity(self):
        # sum_k E[P_k^2] = E[H_2] = 1/(theta+1)
        theta = 3.0
        total = sum(moment_pk(MomentQuery(k, 2, theta)) for k in range(1, 61))
        assert math.isclose(total, 1.0 / (theta + 1.0), rel_tol=1e-8)

    def test_top_mean_matches_density_grid(self):
        theta = 1.0
        grid = g1_density(theta)
        oracle = quad(lambda p: grid.density(p) * p, 1e-9, 1.0, limit=400)[0]
        assert math.isclose(moment_pk(MomentQuery(1, 1, theta)), oracle, rel_tol=1e-5)

    def test_top_mean_matches_monte_carlo(self):
        theta = 10.0
        top = sample_top_ranked(theta, 20_000, 2, seed=0)
        for k in (1, 2):
            mc = top[:, k - 1].mean()
            se = top[:, k - 1].std(ddof=1) / math.sqrt(top.shape[0])
            assert abs(moment_pk(MomentQuery(k, 1, theta)) - mc) < 4.0 * se

    @given(m=st.integers(2, 8), theta=st.floats(0.1, 300.0))
    def test_homozygosity_moment_product_form(self, m, theta):
        prod = 1.0
        for j in range(1, m):
            prod *= j / (theta + j)
        assert math.isclose(homozygosity_moment(m, theta), prod, rel_tol=1e-12)

    def test_homozygosity_moment_matches_monte_carlo(self):
        theta, m = 5.0, 3
        hm = sample_homozygosity(theta, m, 20_000, seed=1)
        se = hm.std(ddof=1) / math.sqrt(hm.size)
        assert abs(hm.mean() - homozygosity_moment(m, theta)) < 4.0 * se

    def test_query_validation(self):
        with pytest.raises(ValueError):
            MomentQuery(0, 1, 1.0)
        with pytest.raises(ValueError):
            MomentQuery(1, 1, -1.0)


class TestDensityGrid:
    @pytest.mark.parametrize("theta", [0.5, 1.0, 2.0, 5.0, 10.0, 50.0])
    def test_normalization(self, theta):
        grid = g1_density(theta)
        # tail at 0 is the total mass
        assert math.isclose(grid.tail(1e-12), 1.0, abs_tol=1e-6)

    def test_closed_form_on_top_band(self):
        theta = 2.0
        grid = g1_density(theta)
        for p in (0.55, 0.7, 0.9):
            assert math.isclose(
                grid.density(p), theta * (1.0 - p) ** (theta - 1.0) / p, rel_tol=1e-12
            )

    def test_uniform_special_case(self):
        # theta = 1: on (1/2, 1) the density is exactly 1/p, so the top-band
        # tail is log(1/x)
        grid = g1_density(1.0)
        assert math.isclose(grid.tail(0.6), math.log(1.0 / 0.6), abs_tol=1e-8)

    def test_tail_matches_monte_carlo(self):
        theta = 2.0
        grid = g1_density(theta)
        top = sample_top_ranked(theta, 40_000, 1, seed=2)[:, 0]
        for x in (0.2, 0.4, 0.6):
            mc = float(np.mean(top >= x))
            se = math.sqrt(mc * (1.0 - mc) / top.size)
            assert abs(grid.tail(x) - mc) < 4.0 * se + 1e-4

    @given(x=st.lists(st.floats(1e-6, 1.0 - 1e-6), min_size=2, max_size=2, unique=True))
    @settings(max_examples=25, deadline=None)
    def test_tail_monotone(self, x):
        grid = _cached_grid(3.0)
        lo, hi = sorted(x)
        assert grid.tail(lo) >= grid.tail(hi) - 1e-12

    def test_tail_cdf_complementarity(self):
        grid = _cached_grid(3.0)
        for x in (0.1, 0.3, 0.7):
            assert math.isclose(grid.cdf(x) + grid.tail(x), 1.0, abs_tol=1e-15)

    def test_support_bound(self):
        # P_1 >= 1/(number of positive frequencies) implies very deep tails
        # carry no mass; the grid's unresolved leftover is tiny
        grid = g1_density(7.0)
        assert grid.leftover < 1e-8

    def test_resolution_refinement_converges(self):
        coarse = g1_density(2.0, resolution=40)
        fine = g1_density(2.0, resolution=160)
        for x in (0.1, 0.25, 0.45):
            assert abs(coarse.tail(x) - fine.tail(x)) < 1e-6

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            g1_density(-1.0)
        grid = _cached_grid(3.0)
        with pytest.raises(ValueError):
            tail_p1(grid, 1.5)


_GRIDS: dict[float, DensityGrid] = {}


def _cached_grid(theta: float) -> DensityGrid:
    if theta not in _GRIDS:
        _GRIDS[theta] = g1_density(theta)
    return _GRIDS[theta]


class TestJointDensity:
    @pytest.mark.parametrize("theta", [1.0, 2.0])
    def test_g2_normalization(self, theta):
        grid = _cached_grid(theta)

        def inner(p1: float) -> float:
            v, _ = quad(
                lambda p2: gn_density(theta, (p1, p2), grid),
                0.0,
                min(p1, 1.0 - p1),
                limit=100,
            )
            return v

        total, _ = quad(inner, 0.0, 1.0, limit=200, points=[0.5])
        assert math.isclose(total, 1.0, abs_tol=1e-4)

    def test_zero_outside_descending_region(self):
        grid = _cached_grid(2.0)
        assert gn_density(2.0, (0.2, 0.3), grid) == 0.0  # ascending
        assert gn_density(2.0, (0.7, 0.4), grid) == 0.0  # mass > 1
        assert gn_density(2.0, (0.3, 0.0), grid) == 0.0  # boundary

    def test_marginal_pk_integrates_to_one(self):
        theta = 2.0
        grid = _cached_grid(theta)
        total, _ = quad(
            lambda x: marginal_pk(theta, 2, x, grid), 1e-9, 0.5, limit=100
        )
        assert math.isclose(total, 1.0, abs_tol=1e-3)

    def test_rank2_tail_matches_monte_carlo(self):
        theta = 2.0
        grid = _cached_grid(theta)
        top = sample_top_ranked(theta, 40_000, 2, seed=3)
        x = 0.25
        mc = float(np.mean(top[:, 1] >= x))
        se = math.sqrt(mc * (1.0 - mc) / top.shape[0])
        exact = math.exp(log_tail_pk(theta, 2, x, grid))
        assert abs(exact - mc) < 4.0 * se + 1e-4

    def test_tail_pk_out_of_support(self):
        grid = _cached_grid(2.0)
        assert log_tail_pk(2.0, 2, 0.5, grid) == -math.inf
        assert log_tail_pk(2.0, 3, 0.34, grid) == -math.inf

    def test_band_probabilities_consistent(self):
        theta = 2.0
        grid = _cached_grid(theta)
        # for k = 1 both code paths measure the same event
        lp = log_band_probability_p1(theta, 0.4, 0.05, grid)
        direct = math.log(grid.tail(0.35) - grid.tail(0.45))
        assert math.isclose(lp, direct, rel_tol=1e-12)
        # k = 2: band probability below the marginal total
        lp2 = log_band_probability_pk(theta, 2, 0.3, 0.05, grid)
        assert lp2 < 0.0
