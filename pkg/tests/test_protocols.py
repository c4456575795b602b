"""Relaxation, Ramsey, and spin-locking simulation and fitting."""

import math

import numpy as np
import pytest

from qfluct import (
    AmbiguityError,
    DecayCurve,
    FitFailureError,
    InvalidInputError,
    NoiseModel,
    OneOverF,
    QubitSpec,
    SpinLockPoint,
    TlsCoupling,
    White,
    fit_exponential,
    fit_ramsey,
    fit_ramsey_beats,
    invert_spinlock,
    sim_ramsey,
    sim_relaxation,
    sim_spinlock,
)

Q_DRY = QubitSpec(4.5e9, 5.6e-5, 4.5e-5)


class TestSpecs:
    def test_qubit_validation(self):
        with pytest.raises(InvalidInputError):
            QubitSpec(0.0, 1e-5, 1e-5)
        with pytest.raises(InvalidInputError):
            QubitSpec(5e9, -1e-5, 1e-5)
        with pytest.raises(InvalidInputError):
            QubitSpec(5e9, 1e-5, 2.5e-5)  # T2 > 2 T1

    def test_tls_validation(self):
        with pytest.raises(InvalidInputError):
            TlsCoupling(54e3, 0.0)
        with pytest.raises(InvalidInputError):
            TlsCoupling(54e3, 26e3, tls_t2=-1.0)

    def test_decay_curve_validation(self):
        with pytest.raises(InvalidInputError):
            DecayCurve([0.0], [1.0], 0)
        with pytest.raises(InvalidInputError):
            DecayCurve([0.0, 1.0, 0.5], [1.0, 0.5, 0.7], 0)
        with pytest.raises(InvalidInputError):
            DecayCurve([0.0, 1.0], [1.0, 0.5], -3)

    def test_decay_curve_clipping(self):
        curve = DecayCurve([0.0, 1.0, 2.0], [1.2, 0.5, -0.2], 0)
        assert curve.meta["clipped"] is True
        assert curve.populations.max() == 1.05
        assert curve.populations.min() == -0.05
        mild = DecayCurve([0.0, 1.0], [1.02, -0.01], 100)
        assert "clipped" not in mild.meta
        assert mild.populations[0] == 1.02


class TestSimRelaxation:
    def test_ideal_curve_exact(self):
        d = np.linspace(0.0, 2e-4, 21)
        curve = sim_relaxation(Q_DRY, d, None)
        assert np.array_equal(curve.populations, np.exp(-d / Q_DRY.T1))
        assert curve.populations[0] == 1.0
        assert np.all(curve.shots == 0)

    def test_dry_etch_t1_checkpoint(self):
        # T1 = 56 us gives P(100 us) = exp(-100/56)
        curve = sim_relaxation(Q_DRY, [0.0, 1e-4], None)
        assert curve.populations[1] == pytest.approx(math.exp(-100.0 / 56.0), rel=1e-12)

    def test_sampled_curve_deterministic(self):
        d = np.linspace(0.0, 2e-4, 21)
        a = sim_relaxation(Q_DRY, d, 500, seed=7)
        b = sim_relaxation(Q_DRY, d, 500, seed=7)
        c = sim_relaxation(Q_DRY, d, 500, seed=8)
        assert np.array_equal(a.populations, b.populations)
        assert not np.array_equal(a.populations, c.populations)
        # populations are shot fractions
        assert np.all(np.abs(a.populations * 500 - np.round(a.populations * 500)) < 1e-9)

    def test_seed_required_when_sampling(self):
        with pytest.raises(InvalidInputError):
            sim_relaxation(Q_DRY, [0.0, 1e-5], 100)

    def test_zero_shots_rejected(self):
        with pytest.raises(InvalidInputError):
            sim_relaxation(Q_DRY, [0.0, 1e-5], 0, seed=1)

    def test_delay_validation(self):
        with pytest.raises(InvalidInputError):
            sim_relaxation(Q_DRY, [1e-5, 0.0], None)
        with pytest.raises(InvalidInputError):
            sim_relaxation(Q_DRY, [-1e-5, 0.0], None)


class TestFitExponential:
    def test_ideal_recovery(self):
        q = QubitSpec(5e9, 2e-5, 3e-5)
        d = np.linspace(0.0, 1e-4, 30)
        fit = fit_exponential(sim_relaxation(q, d, None))
        assert fit["T1"] == pytest.approx(2e-5, rel=1e-3)
        assert fit["amplitude"] == pytest.approx(1.0, abs=1e-3)
        assert fit["offset"] == pytest.approx(0.0, abs=1e-3)
        assert fit["residual_rms"] < 1e-6

    def test_sampled_recovery_within_5pct(self):
        q = QubitSpec(5e9, 2e-5, 3e-5)
        d = np.linspace(0.0, 1e-4, 40)
        fit = fit_exponential(sim_relaxation(q, d, 1000, seed=11))
        assert fit["T1"] == pytest.approx(2e-5, rel=0.05)
        assert fit["stderr"]["T1"] > 0

    def test_constant_curve_fails(self):
        curve = DecayCurve(np.linspace(0, 1e-4, 10), np.full(10, 0.5), 0)
        with pytest.raises(FitFailureError):
            fit_exponential(curve)

    def test_unresolvable_decay_fails(self):
        # record spans only 1/100 of a decay constant
        q = QubitSpec(5e9, 1.0, 1.0)
        d = np.linspace(0.0, 1e-2, 20)
        curve = sim_relaxation(q, d, None)
        with pytest.raises(FitFailureError):
            fit_exponential(curve)

    def test_too_few_points(self):
        curve = DecayCurve([0.0, 1e-5, 2e-5, 3e-5], [1.0, 0.7, 0.5, 0.35], 0)
        with pytest.raises(InvalidInputError):
            fit_exponential(curve)

    def test_time_scale_equivariance(self):
        q = QubitSpec(5e9, 2e-5, 3e-5)
        d = np.linspace(0.0, 1e-4, 30)
        base = sim_relaxation(q, d, None)
        scaled = DecayCurve(d * 137.0, base.populations, 0)
        f1 = fit_exponential(base)
        f2 = fit_exponential(scaled)
        assert f2["T1"] == pytest.approx(137.0 * f1["T1"], rel=1e-9)
        assert f2["amplitude"] == pytest.approx(f1["amplitude"], rel=1e-9)


class TestSimRamsey:
    def test_free_evolution_formula_exact(self):
        d = np.linspace(0.0, 5e-5, 200)
        det = 2.5e5
        curve = sim_ramsey(Q_DRY, det, None, d, None)
        expected = 0.5 + 0.5 * np.cos(2.0 * np.pi * det * d) * np.exp(-d / Q_DRY.T2)
        assert np.array_equal(curve.populations, expected)
        assert "norm_drift" not in curve.meta

    def test_zero_detuning_monotone(self):
        d = np.linspace(0.0, 2e-4, 100)
        curve = sim_ramsey(Q_DRY, 0.0, None, d, None)
        assert curve.populations[0] == 1.0
        assert np.all(np.diff(curve.populations) < 0)
        assert curve.populations[-1] > 0.5

    def test_weak_coupling_reduces_to_free(self):
        d = np.linspace(0.0, 5e-5, 400)
        det = 2.5e5
        free = sim_ramsey(Q_DRY, det, None, d, None)
        weak = sim_ramsey(Q_DRY, det, TlsCoupling(54e3, 1e-3), d, None)
        assert np.allclose(weak.populations, free.populations, atol=1e-6)

    def test_exchange_splitting(self):
        # g = 26 kHz at 54 kHz detuning splits the line by
        # sqrt(54^2 + 4*26^2) kHz ~ 75 kHz
        q = QubitSpec(4.5e9, 1e-4, 6e-5)
        tls = TlsCoupling(54e3, 26e3)
        d = np.linspace(0.0, 2.5e-4, 1200)
        curve = sim_ramsey(q, 2.5e5, tls, d, None)
        assert curve.meta["norm_drift"] < 1e-9
        fit = fit_ramsey_beats(curve)
        expected_split = math.sqrt(54e3**2 + 4 * 26e3**2)
        f_lo, f_hi = fit["tones_hz"]
        assert f_hi - f_lo == pytest.approx(expected_split, rel=0.01)

    def test_lossy_defect_damps_beat(self):
        q = QubitSpec(4.5e9, 1e-4, 6e-5)
        d = np.linspace(0.0, 2.5e-4, 600)
        lossless = sim_ramsey(q, 2.5e5, TlsCoupling(54e3, 26e3), d, None)
        lossy = sim_ramsey(q, 2.5e5, TlsCoupling(54e3, 26e3, tls_t2=2e-5), d, None)
        assert "norm_drift" not in lossy.meta
        # damping the defect reduces the late-time contrast
        late = d > 1.5e-4
        assert np.ptp(lossy.populations[late]) < np.ptp(lossless.populations[late])


class TestFitRamsey:
    def test_wet_etch_t2_ideal(self):
        # T2* = 14 us at a 250 kHz drive offset
        q = QubitSpec(4.2e9, 2e-5, 1.4e-5)
        d = np.linspace(0.0, 4.2e-5, 80)
        fit = fit_ramsey(sim_ramsey(q, 2.5e5, None, d, None))
        assert fit["T2"] == pytest.approx(1.4e-5, rel=5e-3)
        assert fit["frequency_offset"] == pytest.approx(2.5e5, rel=5e-3)

    def test_sampled_within_5pct(self):
        q = QubitSpec(4.2e9, 2e-5, 1.4e-5)
        d = np.linspace(0.0, 4.2e-5, 80)
        fit = fit_ramsey(sim_ramsey(q, 2.5e5, None, d, 1000, seed=19))
        assert fit["T2"] == pytest.approx(1.4e-5, rel=0.05)
        assert fit["stderr"]["T2"] > 0


class TestFitRamseyBeats:
    def test_ideal_recovery(self):
        q = QubitSpec(4.5e9, 1e-4, 6e-5)
        tls = TlsCoupling(54e3, 26e3)
        d = np.linspace(0.0, 2.5e-4, 1200)
        fit = fit_ramsey_beats(sim_ramsey(q, 2.5e5, tls, d, None))
        assert fit["g"] == pytest.approx(26e3, rel=0.02)
        assert fit["detuning"] == pytest.approx(54e3, rel=0.02)

    def test_no_defect_is_ambiguous_or_null(self):
        q = QubitSpec(4.5e9, 1e-4, 6e-5)
        d = np.linspace(0.0, 2.5e-4, 600)
        curve = sim_ramsey(q, 2.5e5, None, d, None)
        try:
            fit = fit_ramsey_beats(curve)
        except AmbiguityError:
            return
        assert fit["g"] < 2.0 * fit["stderr"]["g"] + 1e3

    @pytest.mark.parametrize("g", [5e3, 2.6e4, 1e5])
    @pytest.mark.parametrize("detuning", [0.0, 5.4e4, 2e5])
    def test_coupling_sweep(self, g, detuning):
        q = QubitSpec(4.5e9, 1e-4, 6e-5)
        d = np.linspace(0.0, 2.5e-4, 600)
        curve = sim_ramsey(q, 3e5, TlsCoupling(detuning, g), d, None)
        fit = fit_ramsey_beats(curve)
        assert fit["g"] == pytest.approx(g, rel=0.05)
        assert fit["detuning"] == pytest.approx(detuning, rel=0.05, abs=0.05 * g)


class TestSimSpinlock:
    def test_no_noise_floor_exact(self):
        d = np.linspace(0.0, 2e-4, 31)
        curves = sim_spinlock(Q_DRY, NoiseModel(()), [1e4, 1e5], d, None)
        expected = 0.5 + 0.5 * np.exp(-(1.0 / (2.0 * Q_DRY.T1)) * d)
        for curve in curves:
            assert np.array_equal(curve.populations, expected)

    def test_gamma_tracks_model_psd(self):
        model = NoiseModel((White(1.5e3), OneOverF(1e8)))
        rabi = np.logspace(4, 7, 12)
        d = np.linspace(0.0, 1.2e-4, 61)
        curves = sim_spinlock(Q_DRY, model, rabi, d, None)
        floor = 1.0 / (2.0 * Q_DRY.T1)
        j = 30
        gammas = np.array(
            [-math.log(2.0 * c.populations[j] - 1.0) / d[j] for c in curves]
        )
        assert np.all(np.diff(gammas) < 0)  # 1/f falls with Rabi frequency
        assert gammas[0] == pytest.approx(floor + 1.5e3 + 1e4, rel=1e-9)
        assert gammas[-1] == pytest.approx(floor + 1.5e3 + 10.0, rel=1e-9)

    def test_under_resolved_warning(self):
        q = QubitSpec(4.5e9, 1.0, 1.0)  # floor = 0.5 1/s
        d = np.linspace(0.0, 1e-4, 11)
        curves = sim_spinlock(q, NoiseModel(()), [1e5], d, None)
        assert any("under-resolved" in w for w in curves[0].meta["warnings"])

    def test_workers_do_not_change_output(self):
        model = NoiseModel((White(1.5e3),))
        rabi = np.logspace(4, 6, 8)
        d = np.linspace(0.0, 1.2e-4, 31)
        serial = sim_spinlock(Q_DRY, model, rabi, d, 300, seed=5, workers=1)
        pooled = sim_spinlock(Q_DRY, model, rabi, d, 300, seed=5, workers=4)
        for a, b in zip(serial, pooled):
            assert np.array_equal(a.populations, b.populations)
            assert a.meta["rabi_frequency"] == b.meta["rabi_frequency"]

    def test_rabi_band_enforced(self):
        d = np.linspace(0.0, 1e-4, 11)
        with pytest.raises(InvalidInputError):
            sim_spinlock(Q_DRY, NoiseModel(()), [100.0], d, None)
        with pytest.raises(InvalidInputError):
            sim_spinlock(Q_DRY, NoiseModel(()), [1e8], d, None)
        with pytest.raises(InvalidInputError):
            sim_spinlock(Q_DRY, NoiseModel(()), [1e4], d, None, workers=0)


class TestInvertSpinlock:
    def test_rate_floor_checkpoint(self):
        # Gamma = 1e4 1/s at T1 = 56 us leaves S = 1e4 - 1/(1.12e-4)
        pts = [SpinLockPoint(1e5, 1e4)]
        spec = invert_spinlock(pts, 5.6e-5)
        assert spec.psd[0] == pytest.approx(1e4 - 1.0 / 1.12e-4, rel=1e-12)

    def test_zero_noise_exact(self):
        floor = 1.0 / (2.0 * 5.6e-5)
        pts = [SpinLockPoint(f, floor) for f in (1e4, 1e5, 1e6)]
        spec = invert_spinlock(pts, 5.6e-5)
        assert np.all(spec.psd == 0.0)
        assert "floored_indices" not in spec.meta

    def test_below_floor_rejected(self):
        floor = 1.0 / (2.0 * 5.6e-5)
        pts = [SpinLockPoint(1e5, 0.9 * floor)]
        with pytest.raises(InvalidInputError):
            invert_spinlock(pts, 5.6e-5)

    def test_slightly_below_floor_floored(self):
        floor = 1.0 / (2.0 * 5.6e-5)
        pts = [
            SpinLockPoint(1e4, floor * 0.999, gamma_err=floor * 0.01),
            SpinLockPoint(1e5, floor + 100.0, gamma_err=1.0),
        ]
        spec = invert_spinlock(pts, 5.6e-5)
        assert spec.meta["floored_indices"] == [0]
        assert spec.psd[0] == 0.0
        assert spec.psd[1] == pytest.approx(100.0, rel=1e-9)

    def test_errors_propagate_and_sorting(self):
        floor = 1.0 / (2.0 * 5.6e-5)
        pts = [
            SpinLockPoint(1e6, floor + 50.0, gamma_err=7.0),
            SpinLockPoint(1e4, floor + 500.0, gamma_err=3.0),
        ]
        spec = invert_spinlock(pts, 5.6e-5)
        assert np.array_equal(spec.frequencies, [1e4, 1e6])
        assert spec.meta["stderr"] == [3.0, 7.0]
        assert spec.meta["t1_seconds"] == 5.6e-5

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            invert_spinlock([], 5.6e-5)
        with pytest.raises(InvalidInputError):
            invert_spinlock([SpinLockPoint(1e5, 1e4)], -1.0)
        with pytest.raises(InvalidInputError):
            invert_spinlock(
                [SpinLockPoint(1e5, 1e4), SpinLockPoint(1e5, 2e4)], 5.6e-5
            )

    def test_point_validation(self):
        with pytest.raises(InvalidInputError):
            SpinLockPoint(0.0, 1e4)
        with pytest.raises(InvalidInputError):
            SpinLockPoint(1e5, -1.0)
        with pytest.raises(InvalidInputError):
            SpinLockPoint(1e5, 1e4, gamma_err=-1.0)


class TestClosedLoop:
    def test_psd_recovery_ideal(self):
        # simulate -> fit each decay -> invert recovers the injected PSD
        model = NoiseModel((White(1.5e3), OneOverF(1e8)))
        rabi = np.logspace(4, 7, 20)
        d = np.linspace(0.0, 1.2e-4, 61)
        curves = sim_spinlock(Q_DRY, model, rabi, d, None)
        pts = []
        for curve in curves:
            fit = fit_exponential(curve)
            gamma = 1.0 / fit["T1"]
            pts.append(
                SpinLockPoint(
                    curve.meta["rabi_frequency"],
                    gamma,
                    gamma_err=fit["stderr"]["T1"] * gamma * gamma,
                )
            )
        spec = invert_spinlock(pts, Q_DRY.T1)
        truth = model.psd(spec.frequencies)
        rms = np.sqrt(np.mean(np.log(spec.psd / truth) ** 2))
        assert rms < 0.05
