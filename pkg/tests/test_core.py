import numpy as np
import pytest
from scipy import stats

from mfcq.core import (
    ConfigurationError,
    Example,
    GaussianSummary,
    LqPolicy,
    MixtureSummary,
    ModelConstants,
    NlqPolicy,
    Schedule,
    SchedulePiece,
    SingularParameterError,
    StreamPurpose,
    TimeGrid,
    psi_to_policy,
    rng_stream,
    schedule_eval,
)


class TestSchedule:
    def test_single_piece_at_n1(self):
        sched = Schedule.power([0.02], [0.2])
        assert schedule_eval(sched, 1) == pytest.approx(0.02)

    def test_lq_alg1_theta_rates_at_32(self):
        sched = Schedule.power([0.02, 0.03, 0.06], [0.2, 0.15, 0.31])
        expected = np.array([0.02, 0.03, 0.06]) / 32.0 ** np.array([0.2, 0.15, 0.31])
        np.testing.assert_allclose(schedule_eval(sched, 32), expected, rtol=1e-14)

    def test_inner_exponent(self):
        sched = Schedule.power([0.03], [0.15], e_inner=[0.15])
        assert schedule_eval(sched, 4, 9) == pytest.approx(0.03 / (4**0.15 * 9**0.15))

    def test_inner_index_required(self):
        sched = Schedule.power([0.03], [0.15], e_inner=[0.15])
        with pytest.raises(ValueError):
            schedule_eval(sched, 4)

    def test_n_zero_rejected(self):
        with pytest.raises(ValueError):
            schedule_eval(Schedule.power([1.0], [0.5]), 0)

    def test_no_covering_piece(self):
        sched = Schedule((SchedulePiece(10, np.array([1.0]), np.array([0.5])),))
        with pytest.raises(ConfigurationError):
            schedule_eval(sched, 11)

    def test_piecewise_selection(self):
        sched = Schedule((
            SchedulePiece(2000, np.array([0.01]), np.array([0.48])),
            SchedulePiece(None, np.array([0.0025]), np.array([0.49])),
        ))
        assert schedule_eval(sched, 2000) == pytest.approx(0.01 / 2000**0.48)
        assert schedule_eval(sched, 2001) == pytest.approx(0.0025 / 2001**0.49)

    def test_negative_coefficient_rejected(self):
        with pytest.raises(ConfigurationError):
            Schedule.power([-0.1], [0.2])

    def test_nonincreasing_in_n_and_l(self):
        sched = Schedule.power([0.05, 0.2], [0.3, 0.1], e_inner=[0.2, 0.0])
        prev = schedule_eval(sched, 1, 1)
        for n in range(2, 40):
            cur = schedule_eval(sched, n, 1)
            assert np.all(cur <= prev + 1e-15)
            prev = cur
        prev = schedule_eval(sched, 5, 1)
        for l in range(2, 20):
            cur = schedule_eval(sched, 5, l)
            assert np.all(cur <= prev + 1e-15)
            prev = cur


class TestPolicyMaps:
    def test_lq_canonicalization(self, lq_constants):
        psi = np.array([0.405465, 0.125, 0.5, -0.235702, 0.707107])
        pol = psi_to_policy(Example.LQ_FINITE, psi)
        assert isinstance(pol, LqPolicy)
        assert pol.a4 == pytest.approx(-1.0 / 3.0, abs=1e-5)

    def test_nlq_projection(self):
        pol = psi_to_policy(Example.NLQ_FINITE, np.array([0.0, -0.287682, -0.575364]))
        assert isinstance(pol, NlqPolicy)
        assert (pol.c1, pol.c2) == (0.0, -0.287682)

    def test_psi5_zero_guard(self):
        with pytest.raises(SingularParameterError):
            psi_to_policy(Example.LQ_FINITE, np.array([1.0, 1.0, 1.0, 1.0, 0.0]))

    def test_optimal_policy_mean_closed_form(self, lq_constants):
        # policy(psi*) mean must equal the published optimal-policy mean
        c = lq_constants
        s2 = c.sig2_total
        psi_star = np.array([
            np.log(2 * c.lam * s2), c.b**2 / s2, c.b / s2,
            -c.b / (2 * c.lam * c.sigma * np.sqrt(s2)), c.sigma / np.sqrt(s2),
        ])
        pol = psi_to_policy(Example.LQ_FINITE, psi_star)
        rng = np.random.default_rng(0)
        for _ in range(50):
            t, x, mu = rng.uniform(0, c.T), rng.normal(), rng.normal()
            mean = -pol.a3 * (x - mu) + pol.mean_shift(c, t)
            expected = (-c.b / s2 * (x - mu)
                        + c.b / (2 * c.lam * c.sigma**2) * np.exp(-c.b**2 / s2 * (t - c.T)))
            assert mean == pytest.approx(expected, abs=1e-12)

    def test_policy_variance_positive(self, lq_constants, nlq_constants):
        rng = np.random.default_rng(1)
        for _ in range(200):
            pol = LqPolicy(*rng.normal(scale=2.0, size=4))
            t = rng.uniform(0, lq_constants.T)
            assert pol.variance(lq_constants, t) > 0.0
            npol = NlqPolicy(*rng.normal(scale=2.0, size=2))
            assert npol.rate(nlq_constants, t) > 0.0
            assert npol.mean(nlq_constants, t) == pytest.approx(1.0 / npol.rate(nlq_constants, t), rel=1e-12)


class TestSummaries:
    def test_mixture_weights_validated(self):
        with pytest.raises(ValueError):
            MixtureSummary(((0.7, GaussianSummary(0.0, 1.0)), (0.2, GaussianSummary(1.0, 1.0))))

    def test_mixture_moments(self):
        mix = MixtureSummary(((0.5, GaussianSummary(0.0, 1.0)), (0.5, GaussianSummary(2.0, 1.0))))
        assert mix.mean == pytest.approx(1.0)
        assert mix.second_central_moment == pytest.approx(2.0)

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            GaussianSummary(0.0, -0.1)

    def test_grid(self):
        grid = TimeGrid(0.1, 10)
        assert grid.matches_horizon(1.0)
        np.testing.assert_allclose(grid.times(), np.arange(11) * 0.1)
        with pytest.raises(ValueError):
            TimeGrid(-0.1, 10)


class TestConstants:
    def test_lq_requires_positive_lambda_and_sigma(self):
        with pytest.raises(ValueError):
            ModelConstants(Example.LQ_FINITE, 0.25, 0.5, 0.5, 0.0, 0.5, 1.0, lam=0.0)
        with pytest.raises(ValueError):
            ModelConstants(Example.LQ_FINITE, 0.25, 0.0, 0.5, 0.0, 0.5, 1.0, lam=1.5)

    def test_common_noise_volatility_positive(self):
        with pytest.raises(ValueError):
            ModelConstants(Example.NLQ_FINITE, 1.5, 0.5, 0.0, 1.0, 0.2, 1.0)


class TestRngStream:
    def test_determinism(self):
        a = rng_stream(7, 3, 2, StreamPurpose.ENV).standard_normal(100)
        b = rng_stream(7, 3, 2, StreamPurpose.ENV).standard_normal(100)
        np.testing.assert_array_equal(a, b)

    def test_injectivity_over_roles(self):
        a = rng_stream(7, 1, 1, StreamPurpose.ENV).standard_normal(100)
        b = rng_stream(7, 1, 2, StreamPurpose.ENV).standard_normal(100)
        assert not np.allclose(a, b)

    def test_injectivity_over_purposes(self):
        a = rng_stream(7, 1, 1, StreamPurpose.ENV).standard_normal(100)
        b = rng_stream(7, 1, 1, StreamPurpose.TEST).standard_normal(100)
        assert not np.allclose(a, b)

    def test_normal_draws_pass_ks(self):
        draws = rng_stream(123, 5, 0, StreamPurpose.EVAL).standard_normal(100_000)
        assert stats.kstest(draws, "norm").pvalue > 0.001
