import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import streamopt as so
from streamopt.schedules import ScheduleError


class TestLearningRate:
    def test_closed_form_values(self):
        lr = so.LearningRateParams(1.0, 2 / 3, 0.0)
        assert lr.step_size(8, 8) == pytest.approx(0.25, rel=1e-15)
        lr = so.LearningRateParams(1.0, 2 / 3, 1 / 3)
        assert lr.step_size(8, 8) == pytest.approx(0.5, rel=1e-15)

    def test_high_precision_value(self):
        # frozen from a 50-digit evaluation of 2.5 * 13^0.2 * 97^-0.75
        lr = so.LearningRateParams(2.5, 0.75, 0.2)
        assert lr.step_size(13, 97) == pytest.approx(0.13509829822423146, rel=1e-14)

    def test_rejects_zero_indices(self):
        lr = so.LearningRateParams(1.0, 0.7)
        with pytest.raises(ScheduleError):
            lr.step_size(1, 0)
        with pytest.raises(ScheduleError):
            lr.step_size(0, 1)

    @pytest.mark.parametrize(
        "kw",
        [
            dict(c_gamma=0.0, alpha=0.7),
            dict(c_gamma=1.0, alpha=0.0),
            dict(c_gamma=1.0, alpha=1.2),
            dict(c_gamma=1.0, alpha=0.7, beta=-0.1),
            dict(c_gamma=1.0, alpha=0.7, beta=1.5),
        ],
    )
    def test_rejects_bad_params(self, kw):
        with pytest.raises(ScheduleError):
            so.LearningRateParams(**kw)

    @given(
        c=st.floats(0.1, 5),
        alpha=st.floats(0.51, 1.0),
        beta=st.floats(0.0, 1.0),
        n=st.integers(1, 200),
        t=st.integers(1, 10_000),
    )
    @settings(max_examples=200)
    def test_positive_and_decreasing_in_t(self, c, alpha, beta, n, t):
        lr = so.LearningRateParams(c, alpha, beta)
        g1, g2 = lr.step_size(n, t), lr.step_size(n, t + 1)
        assert g1 > 0
        assert g2 <= g1

    def test_decreasing_along_shrinking_batches(self):
        # rho <= 0 keeps gamma_t = c * n_t^beta * t^-alpha non-increasing
        lr = so.LearningRateParams(1.0, 0.7, 0.8)
        sched = so.VaryingBatches(16.0, -0.4)
        sizes = sched.sizes(500)
        gam = lr.step_sizes(sizes)
        assert np.all(np.diff(gam) <= 1e-15)


class TestBatchSchedules:
    def test_constant(self):
        s = so.ConstantBatches(8)
        assert s.batch_size(100) == 8
        assert s.cumulative_samples(5) == 40
        assert s.cumulative_samples(0) == 0

    def test_varying_examples(self):
        assert so.VaryingBatches(8.0, 0.5).batch_size(4) == 16
        assert so.VaryingBatches(1.0, -0.5).batch_size(9) == 1

    def test_varying_cumulative(self):
        # 8 + 11 + 14 + 16, half-up rounding at every block
        s = so.VaryingBatches(8.0, 0.5)
        assert [s.batch_size(t) for t in range(1, 5)] == [8, 11, 14, 16]
        assert s.cumulative_samples(4) == 49
        assert s.cumulative_samples(0) == 0

    def test_cumulative_increments_match_batches(self):
        for s in (so.ConstantBatches(3), so.VaryingBatches(5.0, 0.3),
                  so.VaryingBatches(2.0, -0.7)):
            for t in range(1, 60):
                inc = s.cumulative_samples(t) - s.cumulative_samples(t - 1)
                assert inc == s.batch_size(t)

    @given(
        kind=st.sampled_from(["constant", "varying", "random"]),
        c=st.floats(1.0, 64.0),
        rho=st.floats(-0.99, 0.99),
        t=st.integers(1, 100_000),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=10_000, deadline=None)
    def test_batch_size_at_least_one(self, kind, c, rho, t, seed):
        rng = np.random.default_rng(seed)
        if kind == "constant":
            s = so.ConstantBatches(int(c))
        elif kind == "varying":
            s = so.VaryingBatches(c, rho)
        else:
            s = so.RandomBatches(c, min(rho, abs(rho)), c + 1, abs(rho))
        assert s.batch_size(t, rng) >= 1

    def test_random_respects_envelopes(self, rng):
        s = so.RandomBatches(2.0, 0.2, 5.0, 0.6)
        s.validate_horizon(500)
        for t in (1, 7, 63, 400):
            for _ in range(20):
                n = s.batch_size(t, rng)
                assert 2.0 * t**0.2 - 1 <= n <= 5.0 * t**0.6

    def test_random_empty_interval_is_config_error(self):
        # upper envelope decays below 1, so large t admits no integer size
        s = so.RandomBatches(1.0, -0.5, 1.5, -0.5)
        with pytest.raises(ScheduleError):
            s.validate_horizon(1000)

    def test_random_rejects_cumulative(self, rng):
        s = so.RandomBatches(1.0, 0.1, 3.0, 0.5)
        with pytest.raises(ScheduleError):
            s.cumulative_samples(10)

    def test_blocks_within_budget(self):
        s = so.ConstantBatches(8)
        assert s.blocks_within_budget(100_000) == (12_500, 100_000)
        assert s.blocks_within_budget(100_001) == (12_500, 100_000)
        v = so.VaryingBatches(8.0, 0.5)
        t, n = v.blocks_within_budget(49)
        assert (t, n) == (4, 49)
        t, n = v.blocks_within_budget(48)
        assert (t, n) == (3, 33)

    def test_constant_requires_integer(self):
        with pytest.raises(ScheduleError):
            so.ConstantBatches(8.0)  # type: ignore[arg-type]
        with pytest.raises(ScheduleError):
            so.ConstantBatches(0)


class TestRateExponents:
    def test_robust_setting(self):
        lr = so.LearningRateParams(1.0, 2 / 3, 1 / 3)
        re = so.rate_exponents(lr, so.VaryingBatches(8.0, 0.5))
        assert re.phi == pytest.approx(2 / 3, rel=1e-12)
        re = so.rate_exponents(lr, so.VaryingBatches(8.0, -0.5))
        assert re.phi == pytest.approx(2 / 3, rel=1e-12)

    def test_constant_gives_alpha(self):
        lr = so.LearningRateParams(1.0, 2 / 3, 0.0)
        re = so.rate_exponents(lr, so.ConstantBatches(8))
        assert re.phi == pytest.approx(2 / 3)
        assert re.rho_tilde == 0.0
        assert re.valid

    def test_accelerated_setting(self):
        lr = so.LearningRateParams(1.0, 1.0, 0.5)
        re = so.rate_exponents(lr, so.VaryingBatches(2.0, 0.8))
        assert re.phi == pytest.approx(7 / 9, rel=1e-12)
        assert re.valid  # alpha - beta*rho = 0.6 in (1/2, 1)

    def test_random_uses_pessimistic_exponents(self):
        lr = so.LearningRateParams(1.0, 0.8, 0.5)
        re = so.rate_exponents(lr, so.RandomBatches(1.0, 0.2, 2.0, 0.6))
        assert re.phi == pytest.approx((0.5 * 0.2 + 0.8) / 1.6, rel=1e-12)

    @given(
        alpha=st.floats(0.51, 0.99),
        beta=st.floats(0.0, 1.0),
        rho=st.floats(-0.99, 0.99),
    )
    @settings(max_examples=300)
    def test_phi_in_unit_interval_when_valid(self, alpha, beta, rho):
        lr = so.LearningRateParams(1.0, alpha, beta)
        re = so.rate_exponents(lr, so.VaryingBatches(4.0, rho))
        if re.valid:
            assert 0 < re.phi <= 1
        if rho <= 0:
            assert re.phi == pytest.approx(alpha)
