"""Non-parametric spectral estimators: Welch PSD and Allan deviation.

Both estimators return the shared domain types (:class:`PowerSpectrum`,
:class:`AllanCurve`) so that fitted model curves and estimated curves are
directly comparable. A slow autocorrelation-transform oracle is included
for cross-checking the Welch estimator in tests.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import InvalidInputError
from .models import AllanCurve, PowerSpectrum, TimeSeries, Unit

__all__ = [
    "welch_psd",
    "allan_deviation",
    "autocorr_psd_oracle",
    "default_segment_length",
    "default_taus",
]

_WINDOWS = ("hann", "rectangular")
_DETRENDS = ("auto", "none", "mean", "linear")
_ALLAN_MODES = ("overlapping", "non_overlapping")


def default_segment_length(n: int) -> int:
    """Largest power of two giving >= 8 half-overlapping segments."""
    if n < 32:
        return n
    target = max(16, 2 * n // 9)
    return min(n, 2 ** int(math.floor(math.log2(target))))


def _window(name: str, length: int) -> np.ndarray:
    if name == "hann":
        # periodic form, standard for spectral averaging
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)
    if name == "rectangular":
        return np.ones(length)
    raise InvalidInputError(f"unknown window {name!r}; expected one of {_WINDOWS}")


def _linear_trend(values: np.ndarray, dt: float) -> tuple[float, float]:
    """Least-squares slope (per second) and intercept of a sampled record."""
    t = dt * np.arange(values.size)
    t0 = t - t.mean()
    denom = float(np.dot(t0, t0))
    if denom == 0.0:
        return 0.0, float(values.mean())
    slope = float(np.dot(t0, values - values.mean()) / denom)
    intercept = float(values.mean() - slope * t.mean())
    return slope, intercept


def _detrend_segment(seg: np.ndarray, kind: str, dt: float) -> np.ndarray:
    if kind == "none":
        return seg
    if kind == "mean":
        return seg - seg.mean()
    slope, intercept = _linear_trend(seg, dt)
    return seg - (intercept + slope * dt * np.arange(seg.size))


def welch_psd(
    series: TimeSeries,
    segment_length: int | None = None,
    overlap_fraction: float = 0.5,
    window: str = "hann",
    detrend: str = "auto",
) -> PowerSpectrum:
    """Welch estimate of the one-sided PSD of a time series.

    Segments are detrended individually (``mean`` removal by default;
    ``linear`` for frequency records, where slow drift would otherwise
    masquerade as 1/f in the lowest bins), windowed, Fourier transformed,
    and the squared magnitudes averaged with window power correction. The
    DC bin is dropped. When linear detrending is applied, the global
    trend estimate is reported in ``meta['trend_per_second']`` rather
    than silently discarded.

    Parameters
    ----------
    series:
        Input record.
    segment_length:
        Samples per segment; default gives >= 8 half-overlapping
        power-of-two segments.
    overlap_fraction:
        Fractional overlap between consecutive segments, in [0, 0.9].
    window:
        ``hann`` (default) or ``rectangular``.
    detrend:
        ``auto`` (default), ``none``, ``mean``, or ``linear``.
    """
    x = series.values
    n = x.size
    if segment_length is None:
        segment_length = default_segment_length(n)
    L = int(segment_length)
    if L < 2:
        raise InvalidInputError(f"segment_length must be >= 2, got {L}")
    if L > n:
        raise InvalidInputError(
            f"fewer than 1 full segment: segment_length {L} > series length {n}"
        )
    if not (0.0 <= overlap_fraction <= 0.9):
        raise InvalidInputError(
            f"overlap_fraction must lie in [0, 0.9], got {overlap_fraction}"
        )
    if detrend not in _DETRENDS:
        raise InvalidInputError(f"unknown detrend {detrend!r}; expected one of {_DETRENDS}")
    kind = detrend
    if kind == "auto":
        kind = "linear" if series.unit == Unit.HERTZ else "mean"

    step = L - int(round(overlap_fraction * L))
    step = max(1, step)
    starts = range(0, n - L + 1, step)

    w = _window(window, L)
    wpow = float(np.dot(w, w))
    dt = series.dt

    acc = np.zeros(L // 2 + 1)
    nseg = 0
    for s in starts:
        seg = _detrend_segment(x[s : s + L], kind, dt)
        y = np.fft.rfft(w * seg)
        acc += (y.real * y.real + y.imag * y.imag)
        nseg += 1
    pxx = acc * (dt / wpow / nseg)
    # one-sided doubling; DC and (for even L) Nyquist carry no mirror bin
    if L % 2 == 0:
        pxx[1:-1] *= 2.0
    else:
        pxx[1:] *= 2.0

    freqs = np.fft.rfftfreq(L, dt)
    meta: dict = {
        "window": window,
        "overlap_fraction": overlap_fraction,
        "segment_length": L,
        "n_segments": nseg,
        "detrend": kind,
    }
    if kind == "linear":
        slope, _ = _linear_trend(x, dt)
        meta["trend_per_second"] = slope
    return PowerSpectrum(freqs[1:], np.maximum(pxx[1:], 0.0), meta=meta)


def default_taus(
    n: int,
    dt: float,
    mode: str = "overlapping",
    points_per_decade: int = 10,
    min_pairs: int = 8,
) -> np.ndarray:
    """Logarithmic tau grid (integer multiples of dt) with enough pairs.

    The largest tau is chosen so that at least ``min_pairs`` difference
    pairs contribute in the requested estimator mode.
    """
    if mode not in _ALLAN_MODES:
        raise InvalidInputError(f"unknown Allan mode {mode!r}; expected one of {_ALLAN_MODES}")
    if mode == "overlapping":
        m_max = (n - min_pairs + 1) // 2
    else:
        m_max = n // (min_pairs + 1)
    m_max = max(1, m_max)
    ndec = math.log10(m_max) if m_max > 1 else 0.0
    npts = max(1, int(round(ndec * points_per_decade)) + 1)
    ms = np.unique(np.round(np.logspace(0, math.log10(m_max), npts)).astype(np.int64))
    ms = ms[ms >= 1]
    return ms * dt


def _tau_to_m(tau: float, dt: float, n: int) -> int:
    ratio = tau / dt
    m = int(round(ratio))
    if m < 1 or abs(ratio - m) > 1e-9 * max(1.0, ratio):
        raise InvalidInputError(
            f"tau {tau:.6g} s is not an integer multiple of dt {dt:.6g} s"
        )
    if m > n // 2:
        raise InvalidInputError(
            f"tau {tau:.6g} s needs averaging blocks of {m} samples; "
            f"series of length {n} supports at most {n // 2}"
        )
    return m


def allan_deviation(
    series: TimeSeries,
    taus: Sequence[float] | None = None,
    mode: str = "overlapping",
) -> AllanCurve:
    """Allan deviation of a uniformly sampled record.

    Implements sigma^2(tau) = 1/2 < (mean_{tau}^{n+1} - mean_{tau}^{n})^2 >
    over consecutive (``non_overlapping``) or sliding (``overlapping``)
    pairs of tau-length block averages. Every tau must be an integer
    multiple of the sampling interval; the number of contributing pairs
    is recorded per tau (relative error of each point is approximately
    1/sqrt(counts)).
    """
    if mode not in _ALLAN_MODES:
        raise InvalidInputError(f"unknown Allan mode {mode!r}; expected one of {_ALLAN_MODES}")
    x = series.values
    n = x.size
    if n < 2:
        raise InvalidInputError("need at least 2 samples for an Allan deviation")
    if taus is None:
        tau_arr = default_taus(n, series.dt, mode=mode)
    else:
        tau_arr = np.asarray(taus, dtype=np.float64)
        if tau_arr.ndim != 1 or tau_arr.size == 0:
            raise InvalidInputError("tau grid must be a non-empty 1-D list")
        if not np.all(np.diff(tau_arr) > 0):
            raise InvalidInputError("tau grid must be strictly increasing")

    # block-mean differences are invariant under a constant shift, so the
    # cumulative-sum route runs on an offset-removed copy; otherwise a large
    # static offset (e.g. a GHz-scale carrier) dominates the running sum and
    # its cancellation error
    x_shifted = x - x[0]
    c = np.concatenate(([0.0], np.cumsum(x_shifted)))
    adev = np.empty(tau_arr.size)
    counts = np.empty(tau_arr.size, dtype=np.int64)
    for i, tau in enumerate(tau_arr):
        m = _tau_to_m(float(tau), series.dt, n)
        if mode == "non_overlapping":
            k = n // m
            means = x[: k * m].reshape(k, m).mean(axis=1)
            d = np.diff(means)
        else:
            mv = (c[m:] - c[:-m]) / m
            d = mv[m:] - mv[:-m]
        counts[i] = d.size
        avar = 0.5 * np.mean(d * d)
        adev[i] = math.sqrt(avar) if avar > 0 else 0.0
    return AllanCurve(tau_arr, adev, counts=counts, meta={"mode": mode, "dt": series.dt})


def autocorr_psd_oracle(series: TimeSeries) -> PowerSpectrum:
    """One-sided PSD via the symmetrized autocorrelation transform.

    Direct discretization of the Wiener-Khinchin route: biased
    autocorrelation of the mean-removed record, cosine-transformed onto
    the single-segment Fourier grid. Quadratic cost; intended as an
    independent cross-check of :func:`welch_psd` on short records, not
    for production use.
    """
    x = series.values
    n = x.size
    if n < 16:
        raise InvalidInputError(f"need at least 16 samples, got {n}")
    x = x - x.mean()
    r = np.correlate(x, x, mode="full")[n - 1 :] / n
    dt = series.dt
    freqs = np.fft.rfftfreq(n, dt)[1:]
    k = np.arange(1, n)
    # S(f) = 2 dt (r0 + 2 sum_k r_k cos(2 pi f k dt)), one-sided
    cosmat = np.cos(2.0 * np.pi * np.outer(freqs, k) * dt)
    s = 2.0 * dt * (r[0] + 2.0 * (cosmat @ r[1:]))
    return PowerSpectrum(freqs, np.maximum(s, 0.0), meta={"estimator": "autocorr"})
