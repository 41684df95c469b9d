import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from schedkit import sampler_design as sd
from schedkit import schedules as S
from schedkit.errors import ScheduleValidationError, SingularTimeError

FOUR_FAMILIES = ("constant-variance", "cv-quadratic", "entropy", "fisher-cosine")

# betas that keep alpha_bar above the floor, so nothing is clamped
valid_betas = hnp.arrays(
    float, st.integers(1, 300),
    elements=st.floats(1e-6, 0.05, allow_nan=False, allow_subnormal=False),
)


class TestConversions:
    def test_betas_to_times_example(self):
        s = S.from_betas([0.25, 1 / 3, 0.5])
        t = s.observation_times().times
        np.testing.assert_allclose(t, [-0.5 * math.log(0.75), 0.5 * math.log(2), math.log(2)], rtol=1e-15)

    def test_bad_betas_report_indices(self):
        with pytest.raises(ScheduleValidationError) as exc:
            S.from_betas([0.1, 1.5, -0.2, 0.3])
        assert exc.value.indices == [2, 3]

    def test_alpha_bars_must_not_increase(self):
        with pytest.raises(ScheduleValidationError) as exc:
            S.from_alpha_bars([0.9, 0.95, 0.5])
        assert exc.value.indices == [2]

    def test_times_must_increase_for_inversion(self):
        with pytest.raises(ScheduleValidationError):
            S.from_observation_times([0.1, 0.1, 0.3])
        with pytest.raises(ScheduleValidationError):
            S.ObservationTimes([0.2, 0.1])

    def test_singular_time(self):
        s = S.NoiseSchedule(np.array([1.0]), np.array([0.0]), np.array([0.0]))
        with pytest.raises(SingularTimeError):
            S.to_observation_times(s)

    def test_beta_zero_step_is_degenerate(self):
        s = S.from_betas([0.1, 0.0, 0.2])
        assert not s.strictly_decreasing
        assert not s.observation_times().strictly_increasing

    @given(valid_betas)
    def test_roundtrip_betas_times_betas(self, betas):
        s = S.from_betas(betas)
        back = S.from_observation_times(s.observation_times())
        assert S.schedules_close(back.betas, s.betas)
        np.testing.assert_allclose(back.alpha_bars, s.alpha_bars, rtol=1e-12)

    @given(valid_betas)
    def test_roundtrip_alpha_bars(self, betas):
        s = S.from_betas(betas)
        back = S.from_alpha_bars(s.alpha_bars)
        np.testing.assert_allclose(back.alpha_bars, s.alpha_bars, rtol=0, atol=0)
        assert S.schedules_close(back.betas, s.betas, rtol=1e-9)

    @given(valid_betas)
    def test_alpha_bar_monotone_and_times_increasing(self, betas):
        s = S.from_betas(betas)
        prev = np.concatenate([[1.0], s.alpha_bars[:-1]])
        assert np.all(s.alpha_bars <= prev)
        assert np.all(s.observation_times().gaps >= 0)

    @given(hnp.arrays(float, st.integers(1, 200), elements=st.floats(1e-4, 0.06)))
    def test_times_roundtrip(self, gaps):
        times = np.cumsum(gaps)
        s = S.from_observation_times(times)
        back = s.observation_times().times
        np.testing.assert_allclose(back, times, rtol=1e-12)


class TestGenerators:
    def test_constant_variance_rational(self):
        s = S.constant_variance(4)
        expected = [Fraction(1, 4 - k + 1) for k in range(1, 5)]
        assert [Fraction(b).limit_denominator(100) for b in s.betas] == expected
        np.testing.assert_allclose(s.betas, [float(f) for f in expected], rtol=1e-15)

    def test_constant_variance_large(self):
        T = 1000
        k = np.arange(1, T + 1)
        np.testing.assert_allclose(S.constant_variance(T).betas, 1 / (T - k + 1), rtol=1e-12)

    def test_cv_quadratic_matches_formula(self):
        T = 1000
        k = np.arange(1, T + 1)
        s = S.cv_quadratic(T)
        raw = 1 - (k / T) ** 2
        assert np.max(np.abs(s.alpha_bars[:-1] - raw[:-1])) <= 1e-12
        assert s.clamped_steps == (T,)

    def test_fisher_cosine_midpoint_and_tail(self):
        s = S.fisher_cosine(1000)
        assert s.alpha_bars[499] == 0.5
        assert s.betas[-1] == 1.0
        assert s.clamped_steps == (1000,)

    def test_entropy_forms(self):
        derived = S.entropy(10, sigma0_sq=1.261e-6)
        assert derived.clamped_steps == (10,) and derived.alpha_bars[-1] == 1e-12
        paper = S.entropy(10, sigma0_sq=1.261e-6, form="paper")
        assert paper.clamped_steps == () and paper.alpha_bars[-1] > 0.99
        with pytest.raises(ScheduleValidationError):
            S.entropy(10, form="other")

    def test_entropy_equal_entropy_increments(self):
        from schedkit import ou_core

        T = 100
        s = S.entropy(T)
        t = s.observation_times().times[:-1]
        steps = np.diff(ou_core.differential_entropy(t))
        np.testing.assert_allclose(steps, steps[0], rtol=1e-8)

    def test_linear_beta(self):
        s = S.linear_beta(1000)
        assert s.betas[0] == pytest.approx(1e-4 + 0.0199 / 1000, rel=1e-14)
        assert s.betas[-1] == pytest.approx(0.02, rel=1e-14)
        with pytest.raises(ScheduleValidationError):
            S.linear_beta(10, beta_end=2.0)

    def test_custom_density_matches_fisher(self):
        s = S.custom_density(200, sd.fisher_sqrt(), method="numeric")
        ref = S.fisher_cosine(200)
        np.testing.assert_allclose(s.alpha_bars, ref.alpha_bars, rtol=1e-12)

    @pytest.mark.parametrize("family", FOUR_FAMILIES)
    @pytest.mark.parametrize("T", [1, 2, 10, 1000])
    def test_generated_invariants(self, family, T):
        s = S.generate(S.ScheduleSpec(family, T))
        assert s.T == T
        assert np.all((s.betas >= 0) & (s.betas <= 1))
        assert s.strictly_decreasing
        keep = ~s.clamped_mask
        np.testing.assert_allclose(np.cumprod(s.alphas)[keep], s.alpha_bars[keep], rtol=1e-12)
        assert np.all(s.alpha_bars >= s.alpha_bar_floor)

    def test_spec_validation(self):
        with pytest.raises(ScheduleValidationError):
            S.ScheduleSpec("nope", 10)
        with pytest.raises(ScheduleValidationError):
            S.ScheduleSpec("fisher-cosine", 0)
        with pytest.raises(ScheduleValidationError):
            S.ScheduleSpec("linear-beta", 10, {"sigma0_sq": 1e-6})
        with pytest.raises(ScheduleValidationError):
            S.ScheduleSpec("custom", 10, {"density": "fisher"})
        assert S.ScheduleSpec("cosine", 5).family == "fisher-cosine"
        with pytest.raises(ScheduleValidationError):
            S.ScheduleSpec("fisher-cosine", 5, alpha_bar_floor=0.0)

    def test_arrays_are_read_only(self):
        s = S.fisher_cosine(5)
        with pytest.raises(ValueError):
            s.betas[0] = 0.3
