"""Welch PSD and Allan deviation estimators against independent oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfluct import (
    InvalidInputError,
    TimeSeries,
    Unit,
    allan_deviation,
    autocorr_psd_oracle,
    default_segment_length,
    default_taus,
    gen_white,
    welch_psd,
)


def make_series(values, dt=1.0, unit=Unit.DIMENSIONLESS):
    return TimeSeries(0.0, dt, np.asarray(values, dtype=np.float64), unit)


def allan_nonoverlap_oracle(x, m, dt):
    """Literal block-average definition, one tau at a time."""
    k = x.size // m
    means = np.array([np.mean(x[i * m : (i + 1) * m]) for i in range(k)])
    d = np.diff(means)
    avar = 0.5 * np.mean(d * d)
    return math.sqrt(avar) if avar > 0 else 0.0, d.size


def allan_overlap_oracle(x, m):
    """Sliding block-average definition."""
    mv = np.array([x[i : i + m].mean() for i in range(x.size - m + 1)])
    d = mv[m:] - mv[:-m]
    return math.sqrt(0.5 * np.mean(d * d)), d.size


def periodogram_oracle(series):
    """Single rectangular-window one-sided periodogram, DC dropped."""
    x = series.values
    n = x.size
    dt = series.dt
    y = np.fft.rfft(x)
    p = (y.real * y.real + y.imag * y.imag) * (dt / float(n) / 1.0)
    if n % 2 == 0:
        p[1:-1] *= 2.0
    else:
        p[1:] *= 2.0
    return np.fft.rfftfreq(n, dt)[1:], p[1:]


def median_frequency(spectrum):
    """Frequency splitting the band-integrated power in half."""
    f, s = spectrum.frequencies, spectrum.psd
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (s[1:] + s[:-1]) * np.diff(f))))
    return float(np.interp(0.5 * cdf[-1], cdf, f))


class TestAllanDeviation:
    def test_nonoverlapping_matches_definition_bitwise(self):
        rng = np.random.default_rng(2024)
        x = rng.normal(size=1280)
        series = make_series(x)
        taus = np.array([1.0, 2.0, 4.0, 8.0, 16.0, 128.0])
        curve = allan_deviation(series, taus=taus, mode="non_overlapping")
        for i, tau in enumerate(taus):
            ref, cnt = allan_nonoverlap_oracle(x, int(tau), 1.0)
            assert curve.adev[i] == ref
            assert curve.counts[i] == cnt

    def test_overlapping_matches_definition(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=2048)
        series = make_series(x)
        taus = np.array([1.0, 3.0, 17.0, 64.0])
        curve = allan_deviation(series, taus=taus, mode="overlapping")
        for i, tau in enumerate(taus):
            ref, cnt = allan_overlap_oracle(x, int(tau))
            assert curve.adev[i] == pytest.approx(ref, rel=1e-9)
            assert curve.counts[i] == cnt

    def test_alternating_record_exact(self):
        series = make_series([1.0, -1.0, 1.0, -1.0])
        for mode in ("overlapping", "non_overlapping"):
            curve = allan_deviation(series, taus=[1.0], mode=mode)
            assert curve.adev[0] == math.sqrt(2.0)

    def test_constant_record_zero(self):
        series = make_series(np.full(256, 3.7))
        for mode in ("overlapping", "non_overlapping"):
            curve = allan_deviation(series, taus=[1.0, 4.0, 16.0], mode=mode)
            assert np.all(curve.adev == 0.0)
            assert np.all(curve.counts > 0)

    def test_white_noise_tracks_closed_form(self):
        # sigma(tau) = sqrt(h0 / (2 tau)) for white frequency noise
        h0 = 2.0
        series = gen_white(h0, 100_000, 1.0, seed=31)
        taus = np.array([1.0, 10.0, 100.0])
        curve = allan_deviation(series, taus=taus)
        expected = np.sqrt(h0 / (2.0 * taus))
        assert np.allclose(curve.adev, expected, rtol=0.10)

    def test_modes_agree_on_white_noise(self):
        series = gen_white(1.0, 20_000, 1.0, seed=5)
        taus = np.array([1.0, 2.0, 5.0, 10.0, 20.0, 50.0])
        a_o = allan_deviation(series, taus=taus, mode="overlapping").adev
        a_n = allan_deviation(series, taus=taus, mode="non_overlapping").adev
        assert np.allclose(a_o, a_n, rtol=0.15)

    def test_non_commensurate_tau_rejected(self):
        series = make_series(np.zeros(100))
        with pytest.raises(InvalidInputError):
            allan_deviation(series, taus=[1.5])

    def test_tau_beyond_half_record_rejected(self):
        series = make_series(np.zeros(100))
        with pytest.raises(InvalidInputError):
            allan_deviation(series, taus=[51.0])

    def test_tau_grid_validation(self):
        series = make_series(np.zeros(100))
        with pytest.raises(InvalidInputError):
            allan_deviation(series, taus=[])
        with pytest.raises(InvalidInputError):
            allan_deviation(series, taus=[4.0, 2.0])
        with pytest.raises(InvalidInputError):
            allan_deviation(series, mode="sliding")

    def test_too_short_record_rejected(self):
        with pytest.raises(InvalidInputError):
            allan_deviation(make_series([1.0]))

    def test_default_taus_properties(self):
        for mode in ("overlapping", "non_overlapping"):
            taus = default_taus(10_000, 0.25, mode=mode)
            assert taus[0] == 0.25
            assert np.all(np.diff(taus) > 0)
            ms = taus / 0.25
            assert np.allclose(ms, np.round(ms), atol=1e-9)
            series = gen_white(1.0, 10_000, 0.25, seed=1)
            curve = allan_deviation(series, taus=taus, mode=mode)
            assert np.all(curve.counts >= 8)

    @given(st.integers(min_value=16, max_value=400), st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=40, deadline=None)
    def test_nonoverlapping_property(self, n, seed):
        x = np.random.default_rng(seed).normal(size=n)
        series = make_series(x)
        m = max(1, n // 7)
        curve = allan_deviation(series, taus=[float(m)], mode="non_overlapping")
        ref, cnt = allan_nonoverlap_oracle(x, m, 1.0)
        assert curve.adev[0] == ref
        assert curve.counts[0] == cnt


class TestWelchPsd:
    def test_single_rectangular_segment_is_periodogram(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=512)
        series = make_series(x, dt=0.25)
        est = welch_psd(series, segment_length=512, window="rectangular",
                        detrend="none")
        freqs, ref = periodogram_oracle(series)
        assert np.array_equal(est.frequencies, freqs)
        assert np.array_equal(est.psd, ref)

    def test_on_grid_sinusoid_power(self):
        # a bin-centered tone carries A^2/2 of band-integrated power
        n, dt, amp, k = 1024, 0.5, 3.0, 100
        t = dt * np.arange(n)
        f0 = k / (n * dt)
        series = make_series(amp * np.sin(2 * np.pi * f0 * t), dt=dt)
        est = welch_psd(series, segment_length=n, window="rectangular",
                        detrend="none")
        df = 1.0 / (n * dt)
        total = np.sum(est.psd) * df
        assert total == pytest.approx(amp * amp / 2.0, rel=0.01)
        assert est.frequencies[np.argmax(est.psd)] == pytest.approx(f0)

    def test_white_level_recovered(self):
        level = 5.0
        series = gen_white(level, 2**15, 2.0, seed=3)
        est = welch_psd(series)
        assert np.mean(est.psd) == pytest.approx(level, rel=0.10)

    def test_parseval_band_power(self):
        series = gen_white(1.0, 2**15, 1.0, seed=9)
        est = welch_psd(series)
        assert est.meta["n_segments"] >= 8
        df = est.frequencies[1] - est.frequencies[0]
        band_power = np.sum(est.psd) * df
        assert band_power == pytest.approx(series.values.var(), rel=0.05)

    def test_offset_invariance(self):
        # per-segment mean removal makes the estimate independent of a
        # constant offset up to floating-point cancellation
        rng = np.random.default_rng(17)
        x = rng.normal(size=4096)
        a = welch_psd(make_series(x))
        b = welch_psd(make_series(x + 1e6))
        assert np.allclose(a.psd, b.psd, rtol=1e-6, atol=1e-9 * a.psd.max())

    def test_frequency_grid(self):
        series = gen_white(1.0, 4096, 0.1, seed=2)
        est = welch_psd(series, segment_length=256)
        assert est.frequencies[0] == pytest.approx(1.0 / (256 * 0.1))
        assert est.frequencies[-1] == pytest.approx(1.0 / (2 * 0.1))
        assert est.psd.size == 128

    def test_linear_detrend_for_frequency_records(self):
        # drifting frequency record: linear per-segment detrend keeps the
        # ramp out of the low bins and reports the global trend
        n, dt = 8192, 1.0
        ramp = 0.05 * dt * np.arange(n)
        noise = gen_white(1.0, n, dt, seed=6).values
        drifting = make_series(ramp + noise, dt=dt, unit=Unit.HERTZ)
        flat = make_series(noise, dt=dt, unit=Unit.HERTZ)
        a = welch_psd(drifting)
        b = welch_psd(flat)
        assert a.meta["detrend"] == "linear"
        assert a.meta["trend_per_second"] == pytest.approx(0.05, rel=0.05)
        low = est_low = slice(0, 4)
        assert np.all(a.psd[low] < 10.0 * b.psd[est_low] + 10.0)

    def test_default_segment_length(self):
        n = 4096
        L = default_segment_length(n)
        assert L & (L - 1) == 0  # power of two
        n_segments = (n - L) // (L - L // 2) + 1
        assert n_segments >= 8

    def test_validation(self):
        series = gen_white(1.0, 128, 1.0, seed=0)
        with pytest.raises(InvalidInputError):
            welch_psd(series, segment_length=256)
        with pytest.raises(InvalidInputError):
            welch_psd(series, segment_length=1)
        with pytest.raises(InvalidInputError):
            welch_psd(series, overlap_fraction=0.95)
        with pytest.raises(InvalidInputError):
            welch_psd(series, window="blackman")
        with pytest.raises(InvalidInputError):
            welch_psd(series, detrend="median")


class TestAutocorrOracle:
    def test_matches_periodogram_identity(self):
        # Wiener-Khinchin: the biased-autocorrelation transform equals the
        # mean-removed periodogram (odd length keeps every bin doubled)
        rng = np.random.default_rng(23)
        x = rng.normal(size=255)
        series = make_series(x, dt=0.5)
        oracle = autocorr_psd_oracle(series)
        direct = welch_psd(series, segment_length=255, window="rectangular",
                           detrend="mean")
        assert np.array_equal(oracle.frequencies, direct.frequencies)
        assert np.allclose(oracle.psd, direct.psd, rtol=1e-7,
                           atol=1e-10 * direct.psd.max())

    def test_zero_series(self):
        series = make_series(np.zeros(64))
        est = autocorr_psd_oracle(series)
        assert np.all(est.psd == 0.0)

    def test_white_agreement_rms_log(self):
        series = gen_white(4.0, 512, 1.0, seed=29)
        oracle = autocorr_psd_oracle(series)
        direct = welch_psd(series, segment_length=512, window="rectangular",
                           detrend="mean")
        sel = direct.psd > 0
        rms = np.sqrt(np.mean(np.log(oracle.psd[sel] / direct.psd[sel]) ** 2))
        assert rms < 0.05

    def test_lorentzian_median_frequency_consistency(self):
        # median-frequency of the power CDF sits at the corner for a
        # Lorentzian; both estimator routes should agree on it
        from qfluct import TelegraphSpec, gen_telegraph

        fc = 0.02
        rate = math.pi * fc
        series = gen_telegraph(TelegraphSpec(rate, rate, -1.0, 1.0), 2048, 1.0,
                               seed=37)
        med_direct = median_frequency(welch_psd(series, segment_length=2048,
                                                window="rectangular"))
        med_oracle = median_frequency(autocorr_psd_oracle(series))
        assert med_direct == pytest.approx(med_oracle, rel=0.10)
        assert 0.3 * fc < med_direct < 3.0 * fc

    def test_too_short_rejected(self):
        with pytest.raises(InvalidInputError):
            autocorr_psd_oracle(make_series(np.zeros(8)))
