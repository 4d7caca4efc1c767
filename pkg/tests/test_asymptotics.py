import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import kstest, norm

from pdlab.asymptotics import (
    ConvergenceReport,
    ReportRow,
    ThetaSweep,
    rank_limit_density_norm,
    gaussian_hm_variance,
    ks_distance,
    rank_limit_cdf,
    rank_limit_density,
    scaling_offset,
    speed_bound_rhs,
    verify_gaussian_hm,
    verify_gumbel,
    verify_ldp_p1,
    verify_ldp_pk,
    verify_speed_bound,
)
from pdlab.rates import rate_I


class TestSweepValidation:
    def test_rejects_short_or_unsorted(self):
        with pytest.raises(ValueError):
            ThetaSweep(thetas=(10.0,))
        with pytest.raises(ValueError):
            ThetaSweep(thetas=(50.0, 20.0))
        with pytest.raises(ValueError):
            ThetaSweep(thetas=(20.0, 20.0))
        with pytest.raises(ValueError):
            ThetaSweep(thetas=(-1.0, 2.0))


class TestReport:
    def test_finish_trend_logic(self):
        rep = ConvergenceReport(name="t")
        for theta, gap in [(10.0, 0.5), (20.0, 0.2), (40.0, 0.1)]:
            rep.rows.append(ReportRow(theta, gap, 0.0, gap, 0.0, "exact"))
        rep.finish(require_monotone=True, final_gap_max=0.2)
        assert rep.passed and rep.monotone and rep.final_gap == 0.1

    def test_finish_detects_nonmonotone(self):
        rep = ConvergenceReport(name="t")
        for theta, gap in [(10.0, 0.1), (20.0, 0.2)]:
            rep.rows.append(ReportRow(theta, gap, 0.0, gap, 0.0, "exact"))
        assert not rep.finish().passed


class TestLimitLaws:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_limit_density_normalized(self, k):
        assert math.isclose(rank_limit_density_norm(k), 1.0, abs_tol=1e-9)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_cdf_is_integral_of_density(self, k):
        for y in (-1.0, 0.0, 2.0):
            cdf_quad, _ = quad(lambda t: rank_limit_density(t, k), -15.0, y, limit=200)
            assert math.isclose(float(rank_limit_cdf(y, k)), cdf_quad, abs_tol=1e-9)

    def test_rank1_is_doubly_exponential(self):
        for y in (-1.0, 0.5, 3.0):
            assert math.isclose(
                float(rank_limit_cdf(y, 1)), math.exp(-math.exp(-y)), rel_tol=1e-12
            )

    def test_ranks_stochastically_ordered(self):
        # deeper ranks sit lower, so their CDFs are larger at any fixed y
        y = 0.7
        c1, c2, c3 = (float(rank_limit_cdf(y, k)) for k in (1, 2, 3))
        assert c1 < c2 < c3

    def test_scaling_offset_values(self):
        assert math.isclose(
            scaling_offset(100.0), math.log(100.0) - math.log(math.log(100.0)), rel_tol=1e-14
        )
        with pytest.raises(ValueError):
            scaling_offset(1.0)


class TestKsDistance:
    @given(seed=st.integers(0, 1000))
    @settings(max_examples=20, deadline=None)
    def test_matches_scipy_oracle(self, seed):
        rng = np.random.default_rng(seed)
        x = np.sort(rng.normal(size=200))
        ours = ks_distance(x, norm.cdf(x))
        oracle = kstest(x, norm.cdf).statistic
        assert math.isclose(ours, oracle, rel_tol=1e-12, abs_tol=1e-12)


class TestLdpVerifiers:
    def test_p1_decay_converges(self):
        sweep = ThetaSweep(thetas=(20.0, 50.0, 100.0))
        report = verify_ldp_p1(sweep, 0.6, resolution=80)
        assert report.passed and report.monotone
        assert report.rows[-1].target == pytest.approx(rate_I(0.6))
        # exact method, quadrature error column small
        assert all(r.method == "exact" and r.err < 1e-4 for r in report.rows)

    def test_p1_at_zero_is_trivial(self):
        sweep = ThetaSweep(thetas=(5.0, 10.0))
        report = verify_ldp_p1(sweep, 0.0)
        assert report.passed and all(r.gap == 0.0 for r in report.rows)

    def test_p1_rejects_bad_x(self):
        with pytest.raises(ValueError):
            verify_ldp_p1(ThetaSweep(thetas=(5.0, 10.0)), 1.0)

    def test_pk_out_of_support(self):
        sweep = ThetaSweep(thetas=(5.0, 10.0))
        report = verify_ldp_pk(sweep, 2, 0.6, resolution=40)
        assert report.passed and report.notes == "out of support"

    def test_pk_rejects_unsupported_rank(self):
        with pytest.raises(ValueError):
            verify_ldp_pk(ThetaSweep(thetas=(5.0, 10.0)), 4, 0.1)


class TestGumbelVerifier:
    def test_small_sweep_reports_ks(self):
        sweep = ThetaSweep(thetas=(50.0, 100.0), samples_per_theta=1000, seed=0)
        report = verify_gumbel(sweep, ranks=(1,), ks_threshold=0.5)
        assert report.passed  # loose threshold: statistic is a valid KS value
        assert all(0.0 <= r.statistic <= 1.0 for r in report.rows)

    def test_rejects_tiny_theta(self):
        with pytest.raises(ValueError):
            verify_gumbel(ThetaSweep(thetas=(1.0, 2.0)))


class TestGaussianVerifier:
    def test_variance_targets(self):
        assert gaussian_hm_variance(2) == pytest.approx(2.0)
        assert gaussian_hm_variance(3) == pytest.approx(21.0)
        with pytest.raises(ValueError):
            gaussian_hm_variance(1)

    def test_small_run_structure(self):
        sweep = ThetaSweep(thetas=(50.0, 100.0), samples_per_theta=2000, seed=0)
        report = verify_gaussian_hm(sweep, 2, var_rel_tol=0.5, ks_threshold=0.5)
        assert report.passed
        var_rows = [r for r in report.rows if math.isclose(r.target, 2.0)]
        assert len(var_rows) == 2


class TestSpeedBound:
    def test_rhs_is_single_stick_tail(self):
        theta, m, c = 100.0, 2, 1.0
        q = math.sqrt(math.gamma(m) * (1.0 + c) / theta)
        assert math.isclose(speed_bound_rhs(theta, m, c), (1.0 - q) ** theta, rel_tol=1e-12)

    def test_rhs_rejects_threshold_above_one(self):
        with pytest.raises(ValueError):
            speed_bound_rhs(1.0, 2, 100.0)

    def test_bound_holds_at_desk_scale(self):
        report = verify_speed_bound(50.0, 2, 1.0, 20_000, seed=0)
        assert report.holds
        assert report.rhs_exact == pytest.approx(speed_bound_rhs(50.0, 2, 1.0))
