"""Synthetic noise generators: telegraph, 1/f ensembles, white, composites."""

import math

import numpy as np
import pytest

from qfluct import (
    Drift,
    EnsembleSpec,
    InvalidInputError,
    Lorentzian,
    NoiseModel,
    OneOverF,
    TelegraphSpec,
    TimeSeries,
    Unit,
    White,
    gen_ensemble_one_over_f,
    gen_observable,
    gen_telegraph,
    gen_white,
    model_psd,
    welch_psd,
)


def log_binned(spectrum, per_decade=8):
    """Geometric-bin means of a PSD, for slope and shape comparisons."""
    f, s = spectrum.frequencies, spectrum.psd
    edges = np.geomspace(f[0], f[-1] * (1 + 1e-9), int(
        math.log10(f[-1] / f[0]) * per_decade) + 2)
    fb, sb = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (f >= lo) & (f < hi)
        if sel.any():
            fb.append(np.exp(np.mean(np.log(f[sel]))))
            sb.append(np.mean(s[sel]))
    return np.array(fb), np.array(sb)


class TestTelegraphSpec:
    def test_validation(self):
        spec = TelegraphSpec(1.0, 2.0, -1.0, 1.0)
        assert spec.corner_frequency == pytest.approx(3.0 / (2 * math.pi))
        with pytest.raises(InvalidInputError):
            TelegraphSpec(-1.0, 2.0, 0.0, 1.0)
        with pytest.raises(InvalidInputError):
            TelegraphSpec(1.0, 2.0, 1.0, 0.0)  # low > high
        with pytest.raises(InvalidInputError):
            TelegraphSpec(1.0, 2.0, 0.0, 1.0, initial_state="sideways")


class TestGenTelegraph:
    def test_symmetric_occupancy_half(self):
        # stationary occupancy of the high state is 1/2; allow a 3 sigma
        # binomial bound (samples are weakly correlated at rate*dt = 1)
        spec = TelegraphSpec(1.0, 1.0, 0.0, 1.0)
        n = 100_000
        out = gen_telegraph(spec, n, 1.0, seed=42)
        occupancy = out.values.mean()
        assert abs(occupancy - 0.5) < 3.0 * math.sqrt(0.25 / n) * 2.0

    def test_quality_factor_scenario_two_modes(self):
        # switching between two quality-factor levels at a 2 mHz corner
        rate = math.pi * 2e-3
        spec = TelegraphSpec(rate, rate, 3.9e5, 7.2e5)
        out = gen_telegraph(spec, 4000, 10.0, seed=9)
        levels = np.unique(out.values)
        assert np.array_equal(levels, [3.9e5, 7.2e5])
        frac_high = np.mean(out.values == 7.2e5)
        assert 0.1 < frac_high < 0.9

    def test_absorbing_state(self):
        spec = TelegraphSpec(0.0, 1.0, -2.0, 5.0, initial_state="low")
        out = gen_telegraph(spec, 500, 0.1, seed=1)
        assert np.all(out.values == -2.0)

    def test_initial_state_options(self):
        spec_hi = TelegraphSpec(0.1, 0.1, 0.0, 1.0, initial_state="high")
        assert gen_telegraph(spec_hi, 2, 1.0, seed=0).values[0] == 1.0
        spec_lo = TelegraphSpec(0.1, 0.1, 0.0, 1.0, initial_state="low")
        assert gen_telegraph(spec_lo, 2, 1.0, seed=0).values[0] == 0.0

    def test_stationary_random_initial_distribution(self):
        # P(high) = rate_up / (rate_up + rate_down) = 0.25
        spec = TelegraphSpec(1.0, 3.0, 0.0, 1.0)
        firsts = [gen_telegraph(spec, 2, 1.0, seed=s).values[0] for s in range(600)]
        assert abs(np.mean(firsts) - 0.25) < 3.0 * math.sqrt(0.25 * 0.75 / 600)

    def test_aliasing_guard(self):
        spec = TelegraphSpec(10.0, 0.1, 0.0, 1.0)
        with pytest.raises(InvalidInputError):
            gen_telegraph(spec, 100, 1.0, seed=0)  # rate*dt = 10 > 5

    def test_both_rates_zero_stationary_undefined(self):
        spec = TelegraphSpec(0.0, 0.0, 0.0, 1.0)
        with pytest.raises(InvalidInputError):
            gen_telegraph(spec, 10, 1.0, seed=0)

    def test_seed_determinism(self):
        spec = TelegraphSpec(0.05, 0.02, -1.0, 1.0)
        a = gen_telegraph(spec, 2000, 1.0, seed=77)
        b = gen_telegraph(spec, 2000, 1.0, seed=77)
        c = gen_telegraph(spec, 2000, 1.0, seed=78)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_switching_rate_recovered(self):
        # transition count / duration ~ (rate_up + rate_down)/2 within 10%
        # for records longer than 100 mean dwell cycles
        for r_up, r_dn, seed in [(5e-3, 5e-3, 3), (6e-3, 4.2e-3, 4)]:
            spec = TelegraphSpec(r_up, r_dn, 0.0, 1.0)
            n, dt = 40_000, 1.0
            assert n * dt >= 100.0 / min(r_up, r_dn)
            out = gen_telegraph(spec, n, dt, seed=seed)
            transitions = np.count_nonzero(np.diff(out.values))
            measured = transitions / out.duration
            assert measured == pytest.approx((r_up + r_dn) / 2.0, rel=0.10)

    def test_welch_matches_lorentzian_model(self):
        # spectral shape: PSD of the realized switcher tracks the analytic
        # Lorentzian within 20% RMS in log space over [fc/10, 10 fc]
        fc = 0.02
        a = 1.0
        rate = math.pi * fc
        spec = TelegraphSpec(rate, rate, -a, a)
        out = gen_telegraph(spec, 2**17, 1.0, seed=21)
        est = welch_psd(out)
        fb, sb = log_binned(est)
        sel = (fb >= fc / 10.0) & (fb <= 10.0 * fc)
        model = NoiseModel((Lorentzian(a * a, fc),))
        ref = model.psd(fb[sel])
        rms = np.sqrt(np.mean(np.log(sb[sel] / ref) ** 2))
        assert rms < math.log(1.2)

    def test_meta_records_rates(self):
        spec = TelegraphSpec(0.01, 0.03, 0.0, 1.0)
        out = gen_telegraph(spec, 100, 1.0, seed=5)
        assert out.meta["rate_up"] == 0.01
        assert out.meta["corner_hz"] == pytest.approx(0.04 / (2 * math.pi))


class TestGenEnsemble:
    def test_one_over_f_slope(self):
        spec = EnsembleSpec(n_fluctuators=40, corner_range=(1e-4, 1e-1), amplitude=1.0)
        out = gen_ensemble_one_over_f(spec, 200_000, 1.0, seed=101)
        est = welch_psd(out)
        fb, sb = log_binned(est)
        sel = (fb >= 3e-4) & (fb <= 3e-2)
        slope = np.polyfit(np.log(fb[sel]), np.log(sb[sel]), 1)[0]
        assert abs(slope + 1.0) < 0.15

    def test_degenerate_single_fluctuator(self):
        # one member reduces to gen_telegraph on the recorded child seed,
        # mean-removed; meta exposes the sampled corner and seed
        spec = EnsembleSpec(n_fluctuators=1, corner_range=(1e-3, 1e-1), amplitude=2.0)
        out = gen_ensemble_one_over_f(spec, 5000, 1.0, seed=55)
        corner = out.meta["corners_hz"][0]
        child = out.meta["member_seeds"][0]
        rate = math.pi * corner
        member_spec = TelegraphSpec(rate, rate, -2.0, 2.0)
        member = gen_telegraph(member_spec, 5000, 1.0, seed=child)
        assert np.array_equal(out.values, member.values - member.values.mean())

    def test_zero_amplitude(self):
        spec = EnsembleSpec(n_fluctuators=5, corner_range=(1e-3, 1e-1), amplitude=0.0)
        out = gen_ensemble_one_over_f(spec, 1000, 1.0, seed=1)
        assert np.all(out.values == 0.0)

    def test_corner_range_must_span_two_decades(self):
        spec = EnsembleSpec(n_fluctuators=5, corner_range=(1e-3, 5e-2), amplitude=1.0)
        with pytest.raises(InvalidInputError):
            gen_ensemble_one_over_f(spec, 1000, 1.0, seed=1)

    def test_unresolvable_corners_warn(self):
        spec = EnsembleSpec(n_fluctuators=3, corner_range=(1e-6, 1e-1), amplitude=1.0)
        out = gen_ensemble_one_over_f(spec, 1000, 1.0, seed=1)  # f_lo = 1e-3
        assert any("resolvable band" in w for w in out.meta["warnings"])

    def test_corners_within_range_log_uniform(self):
        spec = EnsembleSpec(n_fluctuators=200, corner_range=(1e-4, 1e-1),
                            amplitude=1.0)
        out = gen_ensemble_one_over_f(spec, 300, 1e-2, seed=8)
        corners = np.array(out.meta["corners_hz"])
        assert corners.min() >= 1e-4 and corners.max() <= 1e-1
        # log-uniform: about a third of corners per decade
        frac_low = np.mean(corners < 1e-3)
        assert 0.20 < frac_low < 0.47

    def test_seed_source(self):
        spec = EnsembleSpec(n_fluctuators=2, corner_range=(1e-3, 1e-1),
                            amplitude=1.0, seed=99)
        a = gen_ensemble_one_over_f(spec, 500, 1.0)  # falls back to spec.seed
        b = gen_ensemble_one_over_f(spec, 500, 1.0, seed=99)
        assert np.array_equal(a.values, b.values)
        bare = EnsembleSpec(n_fluctuators=2, corner_range=(1e-3, 1e-1), amplitude=1.0)
        with pytest.raises(InvalidInputError):
            gen_ensemble_one_over_f(bare, 500, 1.0)

    def test_mean_removed(self):
        spec = EnsembleSpec(n_fluctuators=10, corner_range=(1e-3, 1e-1), amplitude=1.0)
        out = gen_ensemble_one_over_f(spec, 4000, 1.0, seed=3)
        assert abs(out.values.mean()) < 1e-12


class TestGenWhite:
    def test_zero_level(self):
        out = gen_white(0.0, 100, 1.0, seed=0)
        assert np.all(out.values == 0.0)

    def test_variance_identity(self):
        out = gen_white(2.0, 100_000, 1.0, seed=12)
        assert out.values.var() == pytest.approx(1.0, rel=0.05)

    def test_welch_flat_at_level(self):
        level = 3.0
        out = gen_white(level, 2**15, 0.5, seed=13)
        est = welch_psd(out)
        assert np.mean(est.psd) == pytest.approx(level, rel=0.10)

    def test_negative_level_rejected(self):
        with pytest.raises(InvalidInputError):
            gen_white(-1.0, 10, 1.0, seed=0)

    def test_determinism(self):
        a = gen_white(1.0, 64, 1.0, seed=5)
        b = gen_white(1.0, 64, 1.0, seed=5)
        assert np.array_equal(a.values, b.values)


class TestGenObservable:
    def test_pure_drift_final_value(self):
        # 6 kHz/h of frequency drift over exactly one hour of record
        rate = 6000.0 / 3600.0
        out = gen_observable(0.0, NoiseModel((Drift(rate),)), [], 3601, 1.0,
                             seed=1, unit=Unit.HERTZ)
        assert out.values[-1] == pytest.approx(6000.0, rel=1e-12)
        assert out.values[0] == 0.0

    def test_telegraph_5khz_split_histogram(self):
        rate = math.pi * 2e-3
        tg = TelegraphSpec(rate, rate, -2500.0, 2500.0, unit=Unit.HERTZ)
        out = gen_observable(5e9, None, [tg], 4000, 10.0, seed=2, unit=Unit.HERTZ)
        levels = np.unique(out.values)
        assert len(levels) == 2
        assert levels[1] - levels[0] == pytest.approx(5000.0)

    def test_empty_model_constant(self):
        out = gen_observable(7.5, None, [], 50, 1.0, seed=3)
        assert np.all(out.values == 7.5)

    def test_unit_mismatch_rejected(self):
        tg = TelegraphSpec(0.1, 0.1, 0.0, 1.0, unit=Unit.HERTZ)
        with pytest.raises(InvalidInputError):
            gen_observable(0.0, None, [tg], 100, 1.0, seed=0, unit=Unit.SECONDS)

    def test_t1_floor_clamp(self):
        # relaxation-time records stay above 1% of baseline however large
        # the injected noise amplitude
        base = 5.6e-5
        model = NoiseModel((Lorentzian((5 * base) ** 2, 1e-2),))
        out = gen_observable(base, model, [], 2000, 10.0, seed=4,
                             unit=Unit.SECONDS)
        assert out.values.min() >= 0.01 * base

    def test_no_clamp_for_frequency(self):
        model = NoiseModel((White(1e6),))
        out = gen_observable(10.0, model, [], 2000, 1.0, seed=4, unit=Unit.HERTZ)
        assert out.values.min() < 0.0

    def test_exponent_other_than_one_rejected(self):
        model = NoiseModel((OneOverF(1.0, 1.2),))
        with pytest.raises(InvalidInputError):
            gen_observable(0.0, model, [], 1000, 1.0, seed=0)

    def test_composition_matches_component_generators(self):
        # the composite equals the sum of the per-component realizations
        # generated from the child seeds recorded in meta
        model = NoiseModel((White(2.0), Lorentzian(4.0, 1e-2), Drift(0.001)))
        n, dt = 3000, 1.0
        out = gen_observable(10.0, model, [], n, dt, seed=6)
        seeds = out.meta["component_seeds"]
        white = gen_white(2.0, n, dt, seed=seeds[0]).values
        lor_spec = TelegraphSpec(math.pi * 1e-2, math.pi * 1e-2, -2.0, 2.0)
        lor = gen_telegraph(lor_spec, n, dt, seed=seeds[1]).values
        t = dt * np.arange(n)
        expected = 10.0 + white + lor + 0.001 * t
        assert np.allclose(out.values, expected, rtol=0, atol=1e-12)

    def test_one_over_f_component_slope(self):
        # routing smoke test: a OneOverF component produces a roughly 1/f
        # spectrum (the tight slope bound is covered by the explicit
        # ensemble configuration above)
        model = NoiseModel((OneOverF(1.0),))
        out = gen_observable(0.0, model, [], 100_000, 1.0, seed=7)
        est = welch_psd(out)
        fb, sb = log_binned(est)
        sel = (fb >= 3e-4) & (fb <= 3e-2)
        slope = np.polyfit(np.log(fb[sel]), np.log(sb[sel]), 1)[0]
        assert abs(slope + 1.0) < 0.35

    def test_determinism_and_seed_sensitivity(self):
        model = NoiseModel((White(1.0), OneOverF(0.5)))
        a = gen_observable(0.0, model, [], 1000, 1.0, seed=42)
        b = gen_observable(0.0, model, [], 1000, 1.0, seed=42)
        c = gen_observable(0.0, model, [], 1000, 1.0, seed=43)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)
