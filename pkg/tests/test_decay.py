"""Decay-model count integrals against independent quadrature and
convolution oracles, plus the closed-form worked examples."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from spingate.decay import (
    DecayComponent,
    FluorescenceModel,
    GateWindow,
    PulseTrain,
    expected_intensity,
    folded_model,
    gated_counts,
    gated_counts_exponential,
    histogram_expectation,
    spin_weight,
    steady_rate,
)
from spingate.errors import GateError


def two_level(tau0=12.0, tau1=8.0, **kw) -> FluorescenceModel:
    return FluorescenceModel(
        spin0=(DecayComponent(1.0, tau0),),
        spin1=(DecayComponent(1.0, tau1),),
        **kw,
    )


def bulk_like() -> FluorescenceModel:
    return FluorescenceModel(
        spin0=(DecayComponent(1.0, 12.0),),
        spin1=(DecayComponent(1.0, 8.0),),
        background=(DecayComponent(20.0, 1.7),),
    )


class TestExpectedIntensity:
    def test_exponential_at_origin(self):
        m = two_level()
        assert expected_intensity(m, "ms0", 0.0) == pytest.approx(1.0, abs=0.0)

    def test_one_lifetime_elapsed(self):
        m = two_level()
        assert expected_intensity(m, "ms0", 12.0) == pytest.approx(math.exp(-1), rel=1e-15)

    def test_before_pulse_is_dark_only(self):
        m = two_level(dark_rate=0.25, pulse_time=5.0)
        assert expected_intensity(m, "ms0", 2.0) == 0.25

    def test_array_matches_scalars(self):
        m = bulk_like()
        t = np.array([0.0, 1.0, 7.5, 30.0])
        arr = expected_intensity(m, "ms1", t)
        assert arr.shape == t.shape
        for i, ti in enumerate(t):
            assert arr[i] == expected_intensity(m, "ms1", float(ti))

    def test_emg_matches_numerical_convolution(self):
        # Oracle: convolve A exp(-s/tau) with a unit Gaussian on a 1 ps grid.
        sigma, tau = 0.4, 12.0
        m = two_level(tau0=tau, irf_sigma=sigma)
        step = 1e-3
        s = np.arange(0.0, tau * 40.0, step)
        for t in (-0.5, 0.0, 0.3, 1.0, 6.0):
            gauss = np.exp(-0.5 * ((t - s) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
            want = np.trapezoid(np.exp(-s / tau) * gauss, dx=step)
            got = expected_intensity(m, "ms0", t)
            assert got == pytest.approx(want, rel=1e-5)

    def test_emg_far_tail_no_overflow(self):
        # 4000 sigma past the pulse: naive exp(dt^2) overflows, value must not.
        m = two_level(irf_sigma=0.05)
        v = expected_intensity(m, "ms0", 200.0)
        assert math.isfinite(v)
        assert v == pytest.approx(math.exp(-200.0 / 12.0), rel=1e-6)

    def test_emg_converges_to_exponential(self):
        sigma = 1e-4
        m = two_level(irf_sigma=sigma)
        m0 = two_level()
        for t in np.linspace(5 * sigma, 40.0, 23):
            assert expected_intensity(m, "ms0", float(t)) == pytest.approx(
                expected_intensity(m0, "ms0", float(t)), rel=1e-3
            )


class TestGatedCountsExponential:
    def test_full_window_equals_amplitude_times_lifetime(self):
        c = DecayComponent(1.0, 12.0)
        assert gated_counts_exponential(c, GateWindow(0.0)) == 12.0

    def test_delayed_unbounded_window(self):
        c = DecayComponent(1.0, 12.0)
        got = gated_counts_exponential(c, GateWindow(6.0))
        assert got == pytest.approx(12.0 * math.exp(-0.5), rel=1e-12)
        assert got == pytest.approx(7.2784, rel=1e-4)

    def test_bounded_window(self):
        c = DecayComponent(1.0, 12.0)
        got = gated_counts_exponential(c, GateWindow(0.0, 50.0))
        assert got == pytest.approx(11.814, rel=1e-4)

    def test_against_quadrature_oracle_randomized(self):
        rng = np.random.default_rng(20260819)
        for _ in range(300):
            amp = rng.uniform(0.01, 50.0)
            tau = rng.uniform(0.2, 40.0)
            t0 = rng.uniform(0.0, 30.0)
            t1 = t0 + rng.uniform(0.05, 60.0)
            c = DecayComponent(amp, tau)
            want, _ = quad(
                lambda t: amp * math.exp(-t / tau), t0, t1, epsabs=0.0, epsrel=1e-13
            )
            got = gated_counts_exponential(c, GateWindow(t0, t1))
            assert got == pytest.approx(want, rel=1e-9)

    @given(
        t0=st.floats(0.0, 20.0),
        dt=st.floats(0.01, 40.0),
        tau=st.floats(0.1, 50.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_additivity_exact(self, t0, dt, tau):
        c = DecayComponent(2.0, tau)
        mid = t0 + 0.5 * dt
        whole = gated_counts_exponential(c, GateWindow(t0, t0 + dt))
        parts = gated_counts_exponential(c, GateWindow(t0, mid)) + gated_counts_exponential(
            c, GateWindow(mid, t0 + dt)
        )
        assert parts == pytest.approx(whole, rel=1e-12, abs=1e-300)

    @given(
        t0=st.floats(0.0, 30.0),
        shrink=st.floats(0.0, 5.0),
        tau=st.floats(0.1, 50.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_window(self, t0, shrink, tau):
        c = DecayComponent(1.0, tau)
        wide = gated_counts_exponential(c, GateWindow(t0, t0 + 10.0))
        later = gated_counts_exponential(c, GateWindow(t0 + shrink, t0 + 10.0))
        shorter = gated_counts_exponential(c, GateWindow(t0, t0 + 10.0 - shrink))
        assert later <= wide + 1e-15
        assert shorter <= wide + 1e-15


class TestGatedCounts:
    def test_no_background_components(self):
        g = gated_counts(two_level(), "ms0", GateWindow(0.0))
        assert g.background == 0.0
        assert g.dark == 0.0

    def test_split_totals(self):
        m = bulk_like()
        g = gated_counts(m, "ms0", GateWindow(6.0, 50.0))
        want_sig, _ = quad(lambda t: math.exp(-t / 12.0), 6.0, 50.0, epsabs=0.0, epsrel=1e-13)
        want_bg, _ = quad(lambda t: 20.0 * math.exp(-t / 1.7), 6.0, 50.0, epsabs=0.0, epsrel=1e-13)
        assert g.signal == pytest.approx(want_sig, rel=1e-9)
        assert g.background == pytest.approx(want_bg, rel=1e-9)
        assert g.total == g.signal + g.background + g.dark

    def test_shorter_lifetime_gives_fewer_gated_counts(self):
        m = bulk_like()
        for t0 in (0.5, 2.0, 6.0, 10.0):
            s0 = gated_counts(m, "ms0", GateWindow(t0, 50.0)).signal
            s1 = gated_counts(m, "ms1", GateWindow(t0, 50.0)).signal
            assert s1 < s0

    def test_dark_counts_scale_with_gate_length(self):
        m = two_level(dark_rate=0.125)
        g = gated_counts(m, "ms0", GateWindow(4.0, 20.0))
        assert g.dark == 0.125 * 16.0

    def test_mixture_is_linear_in_weight(self):
        m = bulk_like()
        gate = GateWindow(3.0, 50.0)
        s0 = gated_counts(m, "ms0", gate).signal
        s1 = gated_counts(m, "ms1", gate).signal
        mix = gated_counts(m, 0.3, gate).signal
        assert mix == pytest.approx(0.7 * s0 + 0.3 * s1, rel=1e-12)

    def test_emg_gate_matches_quad_oracle(self):
        sigma = 0.4
        m = two_level(irf_sigma=sigma)
        got = gated_counts(m, "ms0", GateWindow(2.0, 50.0)).signal

        def emg(t):
            z = sigma / (math.sqrt(2) * 12.0) - t / (math.sqrt(2) * sigma)
            return 0.5 * math.exp(sigma**2 / (2 * 144.0) - t / 12.0) * math.erfc(z)

        want, _ = quad(emg, 2.0, 50.0, epsabs=0.0, epsrel=1e-12)
        assert got == pytest.approx(want, rel=1e-9)

    def test_emg_unbounded_gate_rejected(self):
        m = two_level(irf_sigma=0.4)
        with pytest.raises(GateError, match="quadrature requires finite window"):
            gated_counts(m, "ms0", GateWindow(2.0))

    def test_pulse_time_shifts_the_decay(self):
        shifted = two_level(pulse_time=3.0)
        base = two_level()
        got = gated_counts(shifted, "ms0", GateWindow(5.0, 40.0)).signal
        want = gated_counts(base, "ms0", GateWindow(2.0, 37.0)).signal
        assert got == pytest.approx(want, rel=1e-12)


class TestSpinSelector:
    def test_string_selectors(self):
        assert spin_weight("ms0") == 0.0
        assert spin_weight("ms1") == 1.0

    def test_float_selector(self):
        assert spin_weight(0.15) == 0.15

    def test_bad_string(self):
        with pytest.raises(ValueError, match="unknown spin selector"):
            spin_weight("ms2")

    def test_out_of_range_weight(self):
        with pytest.raises(ValueError, match="mixture weight"):
            spin_weight(1.5)


class TestSteadyRate:
    def test_single_component_example(self):
        m = two_level()
        train = PulseTrain(20e6)
        got = steady_rate(m, "ms0", 0.0, train)
        want = 2e7 * 12.0 * (1.0 - math.exp(-50.0 / 12.0))
        assert got == pytest.approx(want, rel=1e-12)
        assert got == pytest.approx(2.363e8, rel=1e-3)

    def test_vanishing_window_limit(self):
        m = two_level()
        train = PulseTrain(20e6)
        assert steady_rate(m, "ms0", 50.0 - 1e-9, train) < 1e-3

    def test_onset_at_period_rejected(self):
        with pytest.raises(GateError, match="gate exceeds pulse period"):
            steady_rate(two_level(), "ms0", 50.0, PulseTrain(20e6))

    def test_doubling_rate_sublinear_when_period_near_lifetime(self):
        m = two_level()
        low = steady_rate(m, "ms0", 0.0, PulseTrain(20e6))
        high = steady_rate(m, "ms0", 0.0, PulseTrain(40e6))
        assert high < 2.0 * low
        assert high > low


class TestHistogramExpectation:
    def test_dark_only_is_flat(self):
        m = FluorescenceModel(
            spin0=(DecayComponent(0.0, 12.0),),
            spin1=(DecayComponent(0.0, 8.0),),
            dark_rate=0.02,
        )
        h = histogram_expectation(m, "ms0", PulseTrain(20e6), 0.5, 1.0)
        assert np.allclose(h.counts, h.counts[0])

    def test_total_equals_integration_times_rate(self):
        m = bulk_like()
        train = PulseTrain(20e6)
        h = histogram_expectation(m, "ms0", train, 0.1, 2.5)
        want = 2.5 * steady_rate(m, "ms0", 0.0, train)
        assert h.counts.sum() == pytest.approx(want, rel=1e-9)

    def test_paper_scale_total(self):
        m = bulk_like()
        train = PulseTrain(20e6)
        scale = 5e6 / steady_rate(m, "ms0", 0.0, train)
        h = histogram_expectation(m.scaled(scale), "ms0", train, 0.1, 10.0)
        assert h.counts.sum() == pytest.approx(5e7, rel=1e-6)

    def test_hundred_ps_bins_give_500_bins(self):
        h = histogram_expectation(bulk_like(), "ms0", PulseTrain(20e6), 0.1, 1.0)
        assert h.n_bins == 500

    def test_biexponential_shape(self):
        # early bins dominated by the 1.7 ns background, tail by the 12 ns spin
        h = histogram_expectation(bulk_like(), "ms0", PulseTrain(20e6), 0.1, 1.0)
        c = h.counts
        early_slope = math.log(c[0] / c[10])  # over 1 ns
        late_slope = math.log(c[200] / c[210])
        assert early_slope > 3.0 * late_slope
        assert late_slope == pytest.approx(0.1 * 10 / 12.0, rel=0.05)

    def test_non_commensurate_bin_width_rejected(self):
        with pytest.raises(ValueError, match="does not tile"):
            histogram_expectation(bulk_like(), "ms0", PulseTrain(20e6), 0.3, 1.0)

    def test_emg_bins_match_quadrature(self):
        m = two_level(irf_sigma=0.4)
        train = PulseTrain(100e6)  # 10 ns period keeps the bin loop small
        h = histogram_expectation(m, "ms0", train, 1.0, 1.0)

        def emg(t):
            sigma, tau = 0.4, 12.0
            z = sigma / (math.sqrt(2) * tau) - t / (math.sqrt(2) * sigma)
            return 0.5 * math.exp(sigma**2 / (2 * tau**2) - t / tau) * math.erfc(z)

        for b in range(h.n_bins):
            want, _ = quad(emg, b * 1.0, (b + 1) * 1.0, epsabs=0.0, epsrel=1e-12)
            assert h.counts[b] == pytest.approx(want * 1e8, rel=1e-8)


class TestFoldedModel:
    def test_amplitude_lift_factor(self):
        m = bulk_like()
        train = PulseTrain(20e6)
        lifted = folded_model(m, train)
        for base, lift in zip(m.spin0 + m.background, lifted.spin0 + lifted.background):
            want = base.amplitude / (1.0 - math.exp(-50.0 / base.lifetime))
            assert lift.amplitude == pytest.approx(want, rel=1e-15)

    def test_matches_summed_pulse_tails(self):
        # steady-state intensity = single-pulse decay summed over all
        # earlier pulses, evaluated inside one period
        m = two_level(tau0=30.0)
        train = PulseTrain(50e6)  # 20 ns period, strong wrap for tau=30
        lifted = folded_model(m, train)
        for t in (0.0, 3.0, 12.5, 19.9):
            direct = sum(
                expected_intensity(m, "ms0", t + k * train.period) for k in range(400)
            )
            assert expected_intensity(lifted, "ms0", t) == pytest.approx(direct, rel=1e-10)


class TestValidation:
    def test_gate_window_ordering(self):
        with pytest.raises(ValueError):
            GateWindow(5.0, 5.0)
        with pytest.raises(ValueError):
            GateWindow(-1.0, 5.0)

    def test_component_validation(self):
        with pytest.raises(ValueError, match="amplitude"):
            DecayComponent(-1.0, 5.0)
        with pytest.raises(ValueError, match="lifetime"):
            DecayComponent(1.0, 0.0)

    def test_model_requires_spin_components(self):
        with pytest.raises(ValueError):
            FluorescenceModel(spin0=(), spin1=(DecayComponent(1.0, 8.0),))

    def test_pulse_train_positive_rate(self):
        with pytest.raises(ValueError):
            PulseTrain(0.0)
