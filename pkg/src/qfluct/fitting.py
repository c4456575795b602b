"""Noise-model decomposition and loss-mechanism classification.

Fits measured spectra (and optionally Allan curves) to a sum of white,
1/f, and Lorentzian components, detects telegraph bimodality in the
time domain, estimates deterministic drift, and combines the pieces
into one of four mechanism labels:

- ``single-fluctuator-dominated``: telegraph switching is visible, or
  Lorentzian components carry most of the band power;
- ``ensemble-1/f-dominated``: 1/f noise (plus drift) carries most of it;
- ``white-limited``: the record is essentially flat-spectrum;
- ``mixed``: none of the above thresholds is met.

All log-space residuals use natural log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares, lsq_linear

from .errors import FitFailureError, InvalidInputError
from .models import (
    AllanCurve,
    AllanTransfer,
    Drift,
    Lorentzian,
    NoiseComponent,
    NoiseModel,
    OneOverF,
    PowerSpectrum,
    TimeSeries,
    White,
    lorentzian_allan_peak_constant,
)
from .spectral import allan_deviation, welch_psd

__all__ = [
    "CLASS_SINGLE",
    "CLASS_ENSEMBLE",
    "CLASS_WHITE",
    "CLASS_MIXED",
    "CLASSIFICATIONS",
    "FitReport",
    "PreparedRecord",
    "AnalysisResult",
    "fit_noise_model",
    "fit_spinlock_spectrum",
    "detect_telegraph",
    "estimate_drift",
    "classify_mechanism",
    "component_band_power",
    "band_power_shares",
    "prepare_record",
    "finalize_report",
    "drift_is_significant",
    "analyze_timeseries",
]

CLASS_SINGLE = "single-fluctuator-dominated"
CLASS_ENSEMBLE = "ensemble-1/f-dominated"
CLASS_WHITE = "white-limited"
CLASS_MIXED = "mixed"
CLASSIFICATIONS = (CLASS_SINGLE, CLASS_ENSEMBLE, CLASS_WHITE, CLASS_MIXED)

# flat-model fallback is flagged when nothing improves on it yet it fits
# this poorly (ln-space RMS)
_LOW_CONFIDENCE_RESIDUAL = 0.4
# corners below this are annotated as slower than typical quasiparticle
# recombination rates (annotation only, no behavior change)
_QP_RATE_HZ = 100.0


@dataclass(frozen=True)
class FitReport:
    """Result of a noise-model decomposition.

    ``component_errors`` holds one {parameter: standard error} dict per
    model component, in component order. ``shares`` are fractional band
    powers over ``band`` (used by the classification rule).
    ``low_confidence`` marks a flat-spectrum fallback that fit the data
    poorly but was not improved upon by any structured model.
    """

    model: NoiseModel
    classification: str
    residual_psd: float
    residual_allan: float | None
    component_errors: tuple[dict, ...]
    n_lorentzians_considered: int
    drift_rate: float = 0.0
    drift_rate_err: float = 0.0
    low_confidence: bool = False
    annotations: tuple[str, ...] = ()
    band: tuple[float, float] | None = None
    shares: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.classification not in CLASSIFICATIONS:
            raise InvalidInputError(
                f"unknown classification {self.classification!r}; "
                f"expected one of {CLASSIFICATIONS}"
            )
        if not (self.residual_psd >= 0):
            raise InvalidInputError("residual_psd must be >= 0")
        if self.residual_allan is not None and not (self.residual_allan >= 0):
            raise InvalidInputError("residual_allan must be >= 0")
        if len(self.component_errors) != len(self.model.components):
            raise InvalidInputError(
                "component_errors must parallel the model components"
            )


@dataclass(frozen=True)
class PreparedRecord:
    """Estimator outputs for one record, before model fitting."""

    detrended: TimeSeries
    drift: dict
    telegraph: dict | None
    spectrum: PowerSpectrum
    allan: AllanCurve


@dataclass(frozen=True)
class AnalysisResult:
    """Bundle produced by :func:`analyze_timeseries`."""

    report: FitReport
    spectrum: PowerSpectrum
    allan: AllanCurve
    telegraph: dict | None
    drift: dict
    detrended: TimeSeries


# ---------------------------------------------------------------------------
# band power and classification


def component_band_power(comp: NoiseComponent, f_lo: float, f_hi: float) -> float:
    """Closed-form integral of a component's PSD over [f_lo, f_hi]."""
    if not (0 < f_lo < f_hi):
        raise InvalidInputError(f"need 0 < f_lo < f_hi, got ({f_lo}, {f_hi})")
    if isinstance(comp, White):
        return comp.level * (f_hi - f_lo)
    if isinstance(comp, OneOverF):
        a = comp.exponent
        if abs(a - 1.0) < 1e-12:
            return comp.amplitude * math.log(f_hi / f_lo)
        return comp.amplitude * (f_hi ** (1 - a) - f_lo ** (1 - a)) / (1 - a)
    if isinstance(comp, Lorentzian):
        fc = comp.corner_frequency
        return (
            (2.0 * comp.total_power / math.pi)
            * (math.atan(f_hi / fc) - math.atan(f_lo / fc))
        )
    if isinstance(comp, Drift):
        return 0.0
    raise InvalidInputError(f"no band-power rule for component {comp!r}")


def band_power_shares(
    model: NoiseModel,
    band: tuple[float, float],
    drift_rate: float = 0.0,
    duration: float | None = None,
) -> dict:
    """Fractional band power per component family over the measured band.

    Drift enters as the variance of a linear ramp over the record,
    (rate*duration)^2 / 12, grouped with 1/f for classification since
    both signal slow ensemble wander. Shares sum to 1 unless the model
    is empty, in which case all are 0.
    """
    f_lo, f_hi = band
    white = onef = lor = 0.0
    for comp in model.components:
        p = component_band_power(comp, f_lo, f_hi)
        if isinstance(comp, White):
            white += p
        elif isinstance(comp, OneOverF):
            onef += p
        elif isinstance(comp, Lorentzian):
            lor += p
    rate = drift_rate if drift_rate != 0.0 else model.drift_rate
    drift_var = 0.0
    if rate != 0.0 and duration is not None and duration > 0:
        drift_var = (rate * duration) ** 2 / 12.0
    total = white + onef + lor + drift_var
    if total <= 0:
        return {"white": 0.0, "one_over_f": 0.0, "lorentzian": 0.0, "drift": 0.0}
    return {
        "white": white / total,
        "one_over_f": onef / total,
        "lorentzian": lor / total,
        "drift": drift_var / total,
    }


def classify_mechanism(
    model: NoiseModel,
    band: tuple[float, float],
    telegraph: dict | None = None,
    drift: dict | None = None,
    duration: float | None = None,
) -> str:
    """Apply the mechanism decision rule to fitted components.

    Telegraph bimodality or Lorentzian components carrying > 50% of the
    band power give ``single-fluctuator-dominated``; 1/f plus
    (significant) drift carrying > 50% gives ``ensemble-1/f-dominated``;
    white above 80% gives ``white-limited``; anything else is ``mixed``.
    Drift passed as an {rate, stderr} estimate counts only when it
    exceeds 3 sigma. Pure function: identical inputs, identical label.
    """
    if telegraph is not None and telegraph.get("bimodal"):
        return CLASS_SINGLE
    drift_rate = 0.0
    if drift is not None:
        rate = float(drift.get("rate", 0.0))
        err = float(drift.get("stderr", 0.0))
        if rate != 0.0 and abs(rate) > 3.0 * err:
            drift_rate = rate
    shares = band_power_shares(model, band, drift_rate=drift_rate, duration=duration)
    if shares["lorentzian"] > 0.5:
        return CLASS_SINGLE
    if shares["one_over_f"] + shares["drift"] > 0.5:
        return CLASS_ENSEMBLE
    if shares["white"] > 0.8:
        return CLASS_WHITE
    if sum(shares.values()) == 0.0:
        return CLASS_WHITE
    return CLASS_MIXED


# ---------------------------------------------------------------------------
# time-domain detectors


def detect_telegraph(series: TimeSeries) -> dict:
    """Two-level clustering test for telegraph switching.

    One-dimensional 2-means on the values; the record is called bimodal
    when the inter-mode separation exceeds 4x the pooled intra-mode
    deviation. The switching corner is estimated from mean dwell times
    (None when either direction shows no transitions, or the record is
    not bimodal).
    """
    x = series.values
    n = x.size
    if n < 100:
        raise InvalidInputError(f"need at least 100 samples, got {n}")

    def unimodal() -> dict:
        level = float(x.mean())
        return {
            "bimodal": False,
            "levels": (level, level),
            "occupancy": 1.0,
            "estimated_corner": None,
            "separation": 0.0,
            "intra_sigma": float(x.std()),
        }

    if float(np.ptp(x)) == 0.0:
        return unimodal()
    c_lo, c_hi = np.percentile(x, [10.0, 90.0])
    if c_hi <= c_lo:
        return unimodal()
    assign = None
    for _ in range(200):
        new = x > 0.5 * (c_lo + c_hi)
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        if not assign.any() or assign.all():
            return unimodal()
        c_lo = float(x[~assign].mean())
        c_hi = float(x[assign].mean())
    assert assign is not None

    n_hi = int(assign.sum())
    resid = x - np.where(assign, c_hi, c_lo)
    pooled = float(np.sqrt(np.mean(resid * resid)))
    separation = c_hi - c_lo
    bimodal = separation > 4.0 * pooled

    corner = None
    if bimodal:
        states = assign.astype(np.int8)
        d = np.diff(states)
        up = int(np.sum(d == 1))
        down = int(np.sum(d == -1))
        t_low = (n - n_hi) * series.dt
        t_high = n_hi * series.dt
        if up > 0 and down > 0 and t_low > 0 and t_high > 0:
            corner = (up / t_low + down / t_high) / (2.0 * math.pi)
    return {
        "bimodal": bool(bimodal),
        "levels": (c_lo, c_hi),
        "occupancy": n_hi / n,
        "estimated_corner": corner,
        "separation": separation,
        "intra_sigma": pooled,
    }


def estimate_drift(series: TimeSeries) -> dict:
    """Robust linear-drift estimate: rate in units/second with stderr.

    Ordinary least squares refined by iteratively reweighted least
    absolute deviations, so isolated level jumps do not masquerade as
    drift. The standard error uses the MAD-based residual scale.
    """
    x = series.values
    n = x.size
    if n < 10:
        raise InvalidInputError(f"need at least 10 samples, got {n}")
    t = series.times
    tc = t - t.mean()
    denom = float(tc @ tc)
    if denom == 0.0:
        raise InvalidInputError("zero time span")
    slope = float(tc @ (x - x.mean()) / denom)
    icept = float(x.mean() - slope * t.mean())

    scale0 = float(np.median(np.abs(x - x.mean()))) or float(np.std(x)) or 1.0
    eps = 1e-9 * scale0
    for _ in range(10):
        r = x - (icept + slope * t)
        w = 1.0 / np.maximum(np.abs(r), eps)
        sw = w.sum()
        tm = float(w @ t / sw)
        xm = float(w @ x / sw)
        d = float(w @ ((t - tm) * (t - tm)))
        if d == 0.0:
            break
        new_slope = float(w @ ((t - tm) * (x - xm)) / d)
        new_icept = xm - new_slope * tm
        if abs(new_slope - slope) <= 1e-12 * max(abs(slope), abs(new_slope), 1e-300):
            slope, icept = new_slope, new_icept
            break
        slope, icept = new_slope, new_icept

    r = x - (icept + slope * t)
    sigma = 1.4826 * float(np.median(np.abs(r - np.median(r))))
    stderr = sigma / math.sqrt(denom)
    return {"rate": slope, "intercept": icept, "stderr": stderr}


# ---------------------------------------------------------------------------
# PSD (+ Allan) model fitting


def _log_bin(
    freqs: np.ndarray, psd: np.ndarray, per_decade: int = 12
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Geometric binning: center frequency, ln(mean PSD), sqrt(count)."""
    f_lo, f_hi = float(freqs[0]), float(freqs[-1])
    ndec = math.log10(f_hi / f_lo)
    nbins = max(1, int(math.ceil(ndec * per_decade)))
    edges = np.logspace(math.log10(f_lo), math.log10(f_hi), nbins + 1)
    idx = np.clip(np.searchsorted(edges, freqs, side="right") - 1, 0, nbins - 1)
    fb, yb, wb = [], [], []
    for b in range(nbins):
        sel = idx == b
        m = int(sel.sum())
        if m == 0:
            continue
        mean_s = float(psd[sel].mean())
        if mean_s <= 0:
            continue
        fb.append(math.exp(float(np.log(freqs[sel]).mean())))
        yb.append(math.log(mean_s))
        wb.append(math.sqrt(m))
    return np.array(fb), np.array(yb), np.array(wb)


def _lorentzian_peak_shape() -> float:
    """Allan variance at the peak of a unit-power Lorentzian."""
    x = 2.0 * math.pi * lorentzian_allan_peak_constant()
    return (2.0 * x - 3.0 + 4.0 * math.exp(-x) - math.exp(-2.0 * x)) / (x * x)


def _allan_peak_seeds(allan: AllanCurve | None, limit: int) -> list[tuple[float, float]]:
    """Candidate (corner, power) pairs from local maxima of the Allan curve."""
    if allan is None or len(allan) < 3 or limit == 0:
        return []
    a, t = allan.adev, allan.taus
    k = lorentzian_allan_peak_constant()
    shape = _lorentzian_peak_shape()
    peaks = []
    for i in range(1, len(a) - 1):
        if a[i] > 0 and a[i] >= a[i - 1] and a[i] >= a[i + 1]:
            peaks.append((float(a[i]), float(t[i])))
    peaks.sort(reverse=True)
    seeds: list[tuple[float, float]] = []
    for amp, tau in peaks:
        fc = k / tau
        if any(0.5 < fc / s[0] < 2.0 for s in seeds):
            continue
        seeds.append((fc, amp * amp / shape))
        if len(seeds) == limit:
            break
    return seeds


@dataclass
class _FitData:
    fb: np.ndarray          # binned PSD frequencies
    yb: np.ndarray          # ln binned PSD
    wb: np.ndarray          # normalized weights
    ta: np.ndarray | None   # Allan taus
    ya: np.ndarray | None   # ln Allan deviation
    wa: np.ndarray | None   # normalized weights
    transfer: AllanTransfer | None


def _model_from_params(x: np.ndarray, use_1f: bool, n_lor: int) -> NoiseModel:
    comps: list[NoiseComponent] = [White(math.exp(x[0]))]
    k = 1
    if use_1f:
        comps.append(OneOverF(math.exp(x[k])))
        k += 1
    lors = []
    for _ in range(n_lor):
        lors.append(Lorentzian(math.exp(x[k]), math.exp(x[k + 1])))
        k += 2
    lors.sort(key=lambda c: c.corner_frequency)
    comps.extend(lors)
    return NoiseModel(tuple(comps))


def _residuals(x: np.ndarray, data: _FitData, use_1f: bool, n_lor: int) -> np.ndarray:
    model = _model_from_params(x, use_1f, n_lor)
    s = model.psd(data.fb)
    r = (np.log(np.maximum(s, 1e-300)) - data.yb) * data.wb
    if data.transfer is not None:
        var = data.transfer.variance(model)
        adev = np.sqrt(np.maximum(var, 0.0))
        ra = (np.log(np.maximum(adev, 1e-300)) - data.ya) * data.wa
        r = np.concatenate([r, ra])
    return r


def _fit_candidate(
    data: _FitData,
    use_1f: bool,
    n_lor: int,
    white0: float,
    onef0: float,
    lor_seeds: list[tuple[float, float]],
    corner_bounds: tuple[float, float],
    warm: np.ndarray | None = None,
):
    x0 = [math.log(max(white0, 1e-300))]
    lb = [x0[0] - 46.0]
    ub = [x0[0] + 46.0]
    if use_1f:
        x0.append(math.log(max(onef0, 1e-300)))
        lb.append(x0[-1] - 46.0)
        ub.append(x0[-1] + 46.0)
    lo_c, hi_c = corner_bounds
    for j in range(n_lor):
        fc, p = lor_seeds[j]
        fc = min(max(fc, lo_c * 1.01), hi_c * 0.99)
        x0 += [math.log(max(p, 1e-300)), math.log(fc)]
        lb += [x0[-2] - 46.0, math.log(lo_c)]
        ub += [x0[-2] + 46.0, math.log(hi_c)]
    x0a, lba, uba = np.array(x0), np.array(lb), np.array(ub)
    if warm is not None and warm.size < x0a.size:
        # start from the previous (one fewer switcher) optimum so only the
        # added component has to be located; over-parameterized candidates
        # otherwise wander degenerate valleys for hundreds of iterations
        x0a[: warm.size] = np.clip(warm, lba[: warm.size], uba[: warm.size])
    try:
        res = least_squares(
            _residuals,
            x0a,
            args=(data, use_1f, n_lor),
            bounds=(lba, uba),
            method="trf",
            x_scale="jac",
            ftol=1e-12,
            xtol=1e-12,
            gtol=1e-12,
            max_nfev=100 * len(x0),
        )
    except Exception:
        return None
    if not res.success:
        return None
    return res


def _bic(res, n_points: int) -> float:
    """Gaussian BIC for standardized residuals: chi^2 plus k ln(n)."""
    chi2 = float(res.fun @ res.fun)
    k = res.x.size
    return chi2 + k * math.log(n_points)


def fit_noise_model(
    psd: PowerSpectrum,
    allan: AllanCurve | None = None,
    max_lorentzians: int = 3,
) -> FitReport:
    """Decompose a measured PSD (plus optional Allan curve) into components.

    Joint weighted least squares in ln space with every residual
    standardized by its uncertainty: a PSD log-bin averages
    (segments x bin count) periodogram values, so its ln has standard
    error ~ 1/sqrt(segments x count); an Allan point built from d
    effectively independent pairs has ln-adev standard error
    ~ 1/sqrt(2d). A systematic floor is added in quadrature to both
    (no finite record follows an idealized parametric shape to much
    better than ~10%), and for Welch inputs the aliased top of the band
    (f > f_max / 1.28) is excluded from the fit since the model spectra
    are unaliased. Allan points join the objective through the
    PSD-to-Allan transfer quadrature. Lorentzians are added one at a
    time, corners seeded from Allan-curve peaks, while the Bayesian
    information criterion (chi^2 + k ln n on the standardized
    residuals) improves, up to ``max_lorentzians``, independently with
    and without a 1/f term. If nothing improves on the flat model yet
    the flat fit is poor, the report carries ``low_confidence``.
    """
    f = psd.frequencies
    if f.size < 10:
        raise InvalidInputError(f"need >= 10 PSD points, got {f.size}")
    if f[-1] / f[0] < 100.0 * (1.0 - 1e-12):
        raise InvalidInputError(
            f"PSD must span >= 2 decades, got {f[-1] / f[0]:.3g}x"
        )
    if int(max_lorentzians) != max_lorentzians or max_lorentzians < 0:
        raise InvalidInputError(
            f"max_lorentzians must be a non-negative integer, got {max_lorentzians}"
        )
    max_lorentzians = int(max_lorentzians)
    band = (float(f[0]), float(f[-1]))

    p = psd.psd
    if "segment_length" in psd.meta:
        # a sampled estimate folds the power above Nyquist back into the
        # top of the band; the candidate spectra are unaliased, so keep
        # the classic anti-alias margin out of the fit
        keep = f <= f[-1] / 1.28
        if keep.sum() >= 10:
            f, p = f[keep], p[keep]

    fb, yb, wb = _log_bin(f, p)
    if fb.size == 0:
        # zero spectrum: nothing to decompose
        model = NoiseModel((White(0.0),))
        return FitReport(
            model=model,
            classification=CLASS_WHITE,
            residual_psd=0.0,
            residual_allan=None,
            component_errors=({"level": 0.0},),
            n_lorentzians_considered=0,
            low_confidence=True,
            band=band,
            shares=band_power_shares(model, band),
            meta={"note": "all PSD bins are zero"},
        )
    # standardize: a log bin averages (segments x count) periodogram
    # values, and no record tracks an idealized shape below the floor
    nseg = float(psd.meta.get("n_segments") or 1.0)
    wb = 1.0 / np.sqrt(1.0 / (max(nseg, 1.0) * wb * wb) + _SIGMA_FLOOR**2)

    ta = ya = wa = None
    transfer = None
    if allan is not None:
        pos = allan.adev > 0
        if pos.sum() >= 3:
            ta = allan.taus[pos]
            ya = np.log(allan.adev[pos])
            if allan.counts is not None:
                eff = allan.counts[pos].astype(np.float64)
                dt = allan.meta.get("dt")
                if allan.meta.get("mode") == "overlapping" and dt:
                    # overlapping pairs at stride 1 share almost all their
                    # samples; roughly counts/(2m) of them are independent,
                    # and sqrt(pair count) would let single-realization
                    # wiggles at long tau masquerade as extra switchers
                    m = np.maximum(np.round(ta / float(dt)), 1.0)
                    eff = np.maximum(eff / (2.0 * m), 1.0)
                wa = 1.0 / np.sqrt(1.0 / (2.0 * eff) + _SIGMA_FLOOR**2)
            else:
                wa = np.full(ta.size, 1.0 / math.sqrt(1.0 + _SIGMA_FLOOR**2))
            transfer = AllanTransfer(ta)
    data = _FitData(fb, yb, wb, ta, ya, wa, transfer)
    n_points = fb.size + (ta.size if ta is not None else 0)

    # initial values from the band edges
    hi_sel = fb >= fb[-1] / 3.0
    white0 = float(np.exp(np.median(yb[hi_sel]))) if hi_sel.any() else float(np.exp(yb[-1]))
    lo_sel = fb <= fb[0] * 3.0
    onef0 = (
        float(np.median(np.exp(yb[lo_sel]) * fb[lo_sel]))
        if lo_sel.any()
        else float(np.exp(yb[0]) * fb[0])
    )
    corner_bounds = (band[0] / 30.0, band[1] * 30.0)

    peak_seeds = _allan_peak_seeds(allan, max_lorentzians)

    def seeds_for(n_lor: int) -> list[tuple[float, float]]:
        seeds = list(peak_seeds[:n_lor])
        need = n_lor - len(seeds)
        for k in range(need):
            fc = band[0] * (band[1] / band[0]) ** ((k + 1) / (need + 1))
            s_at = float(np.exp(np.interp(math.log(fc), np.log(fb), yb)))
            seeds.append((fc, s_at * math.pi * fc))
        seeds.sort(key=lambda s: s[0])
        return seeds

    best = None
    best_key = None
    tried = 0
    for use_1f in (False, True):
        prev_bic = math.inf
        warm = None
        for n_lor in range(0, max_lorentzians + 1):
            tried = max(tried, n_lor)
            res = _fit_candidate(
                data, use_1f, n_lor, white0, onef0, seeds_for(n_lor),
                corner_bounds, warm=warm,
            )
            if res is None:
                break
            warm = res.x
            bic = _bic(res, n_points)
            if best is None or bic < best[0] - 1e-9:
                best = (bic, res)
                best_key = (use_1f, n_lor)
            if bic >= prev_bic - 1e-9:
                break
            prev_bic = bic
    if best is None:
        raise FitFailureError("no candidate noise model converged")

    _, res = best
    use_1f, n_lor = best_key
    model = _model_from_params(res.x, use_1f, n_lor)

    # residuals per data set, unweighted ln RMS
    s_fit = model.psd(fb)
    rp = np.log(np.maximum(s_fit, 1e-300)) - yb
    residual_psd = float(np.sqrt(np.mean(rp * rp)))
    residual_allan = None
    if transfer is not None:
        adev_fit = np.sqrt(np.maximum(transfer.variance(model), 0.0))
        rA = np.log(np.maximum(adev_fit, 1e-300)) - ya
        residual_allan = float(np.sqrt(np.mean(rA * rA)))

    # parameter errors: delta method through the ln parameterization
    cov = np.linalg.pinv(res.jac.T @ res.jac)
    if n_points > res.x.size:
        cov = cov * (2.0 * res.cost / (n_points - res.x.size))
    perr_ln = np.sqrt(np.maximum(np.diag(cov), 0.0))

    # map parameter errors onto the sorted component order
    values = np.exp(res.x)
    errs = values * perr_ln
    comp_errors: list[dict] = [{"level": float(errs[0])}]
    k = 1
    if use_1f:
        comp_errors.append({"amplitude": float(errs[k])})
        k += 1
    lor_entries = []
    for _ in range(n_lor):
        lor_entries.append(
            (float(values[k + 1]), {"total_power": float(errs[k]),
                                    "corner_frequency": float(errs[k + 1])})
        )
        k += 2
    lor_entries.sort(key=lambda e: e[0])
    comp_errors.extend(e[1] for e in lor_entries)

    annotations = tuple(
        f"corner {c.corner_frequency:.3g} Hz is below typical quasiparticle "
        f"rates (~1 kHz)"
        for c in model.components
        if isinstance(c, Lorentzian) and c.corner_frequency < _QP_RATE_HZ
    )
    low_confidence = (not use_1f and n_lor == 0
                      and residual_psd > _LOW_CONFIDENCE_RESIDUAL)
    shares = band_power_shares(model, band)
    return FitReport(
        model=model,
        classification=classify_mechanism(model, band),
        residual_psd=residual_psd,
        residual_allan=residual_allan,
        component_errors=tuple(comp_errors),
        n_lorentzians_considered=tried,
        low_confidence=low_confidence,
        annotations=annotations,
        band=band,
        shares=shares,
        meta={"bic": best[0], "included_one_over_f": use_1f},
    )


def fit_spinlock_spectrum(spectrum: PowerSpectrum) -> FitReport:
    """Two-component (white + 1/f) fit of a spin-locking noise spectrum.

    The model S(f) = W + A/f is linear in (W, A), so the fit is a
    non-negative weighted linear least squares (weights from the
    propagated ``stderr`` in the spectrum's meta, uniform when absent or
    when any is zero). The headline statistic is the ratio of 1/f to
    white power at the geometric band center.
    """
    f = spectrum.frequencies
    s = spectrum.psd
    valid = s > 0
    if not valid.any():
        raise InvalidInputError("all spectrum points are floored at 0")
    if int(valid.sum()) < 8:
        raise InvalidInputError(
            f"need >= 8 valid (non-floored) points, got {int(valid.sum())}"
        )
    fv, sv = f[valid], s[valid]
    errs = spectrum.meta.get("stderr")
    if errs is not None and len(errs) == f.size:
        ev = np.asarray(errs, dtype=np.float64)[valid]
        w = 1.0 / ev if np.all(ev > 0) else np.ones(fv.size)
    else:
        w = np.ones(fv.size)

    design = np.column_stack([np.ones(fv.size), 1.0 / fv])
    aw = design * w[:, None]
    yw = sv * w
    sol = lsq_linear(aw, yw, bounds=(0.0, np.inf))
    if not sol.success:
        raise FitFailureError(f"spin-lock spectrum fit failed: {sol.message}")
    level, amp = float(sol.x[0]), float(sol.x[1])

    dof = fv.size - 2
    cov = np.linalg.pinv(aw.T @ aw)
    resid = yw - aw @ sol.x
    if errs is None or not np.all(np.asarray(errs)[valid] > 0):
        scale = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = cov * scale
    perr = np.sqrt(np.maximum(np.diag(cov), 0.0))

    model = NoiseModel((White(level), OneOverF(amp)))
    fit_vals = level + amp / fv
    r = np.log(np.maximum(fit_vals, 1e-300)) - np.log(sv)
    band = (float(f[0]), float(f[-1]))
    fc = math.sqrt(band[0] * band[1])
    ratio = (amp / fc) / level if level > 0 else math.inf
    return FitReport(
        model=model,
        classification=classify_mechanism(model, band),
        residual_psd=float(np.sqrt(np.mean(r * r))),
        residual_allan=None,
        component_errors=({"level": float(perr[0])}, {"amplitude": float(perr[1])}),
        n_lorentzians_considered=0,
        band=band,
        shares=band_power_shares(model, band),
        meta={
            "one_over_f_to_white_ratio_at_band_center": ratio,
            "band_center_hz": fc,
            "n_floored": int(f.size - valid.sum()),
        },
    )


# ---------------------------------------------------------------------------
# pipeline


def drift_is_significant(drift: dict) -> bool:
    """3-sigma significance gate used everywhere drift enters a decision."""
    rate = float(drift.get("rate", 0.0))
    err = float(drift.get("stderr", 0.0))
    return rate != 0.0 and abs(rate) > 3.0 * err


def prepare_record(
    series: TimeSeries,
    taus: Sequence[float] | None = None,
    segment_length: int | None = None,
    window: str = "hann",
    overlap_fraction: float = 0.5,
    allan_mode: str = "overlapping",
) -> PreparedRecord:
    """Estimator stage: drift removal, telegraph detection, PSD, Allan.

    Drift is estimated robustly and subtracted when significant at 3
    sigma; telegraph detection runs on the drift-removed values (a
    strong ramp would otherwise read as bimodal); the spectral
    estimators then see the detrended record.
    """
    drift = estimate_drift(series)
    significant = drift_is_significant(drift)
    values = series.values
    if significant:
        t = series.times
        values = values - drift["rate"] * (t - t.mean())
    detrended = TimeSeries(
        series.start_time,
        series.dt,
        values,
        series.unit,
        meta={"drift_removed_per_s": drift["rate"] if significant else 0.0},
    )
    telegraph = detect_telegraph(detrended) if len(detrended) >= 100 else None
    if telegraph is not None and significant:
        # slow switching can masquerade as a significant linear trend;
        # subtracting that false slope smears the two levels apart, so
        # check the raw record too and keep the cleaner two-level split
        raw_tg = detect_telegraph(series)
        if raw_tg["bimodal"] and (
            not telegraph["bimodal"]
            or raw_tg["separation"] * telegraph["intra_sigma"]
            > telegraph["separation"] * raw_tg["intra_sigma"]
        ):
            telegraph = raw_tg
    spectrum = welch_psd(
        detrended,
        segment_length=segment_length,
        overlap_fraction=overlap_fraction,
        window=window,
    )
    allan = allan_deviation(detrended, taus=taus, mode=allan_mode)
    return PreparedRecord(detrended, drift, telegraph, spectrum, allan)


def finalize_report(
    report: FitReport,
    drift: dict | None = None,
    telegraph: dict | None = None,
    duration: float | None = None,
) -> FitReport:
    """Fold time-domain evidence (drift, telegraph) into a spectral fit.

    When the drift estimate is significant a Drift component joins the
    model; classification and band-power shares are recomputed with the
    full evidence.
    """
    if drift is None and telegraph is None:
        return report
    model = report.model
    comp_errors = report.component_errors
    rate = 0.0
    err = float(drift.get("stderr", 0.0)) if drift else 0.0
    if drift is not None and drift_is_significant(drift):
        rate = float(drift["rate"])
        model = NoiseModel(model.components + (Drift(rate),))
        comp_errors = comp_errors + ({"rate": err},)
    label = classify_mechanism(
        model, report.band, telegraph=telegraph, drift=drift, duration=duration
    )
    shares = band_power_shares(
        model, report.band, drift_rate=rate, duration=duration
    )
    return replace(
        report,
        model=model,
        classification=label,
        component_errors=comp_errors,
        drift_rate=rate,
        drift_rate_err=err,
        shares=shares,
    )


def analyze_timeseries(
    series: TimeSeries,
    max_lorentzians: int = 3,
    taus: Sequence[float] | None = None,
    segment_length: int | None = None,
    window: str = "hann",
    overlap_fraction: float = 0.5,
    allan_mode: str = "overlapping",
) -> AnalysisResult:
    """Full decomposition pipeline for one fluctuation record.

    Steps: robust drift estimate (subtracted when significant at 3
    sigma), telegraph bimodality detection on the drift-removed values,
    Welch PSD and Allan deviation estimation, joint component fit, then
    classification from components + telegraph + drift. The drift rate
    is reported in the :class:`FitReport` and, when significant, a
    :class:`~qfluct.models.Drift` component is appended to the model.
    """
    rec = prepare_record(
        series,
        taus=taus,
        segment_length=segment_length,
        window=window,
        overlap_fraction=overlap_fraction,
        allan_mode=allan_mode,
    )
    report = fit_noise_model(rec.spectrum, rec.allan, max_lorentzians=max_lorentzians)
    report = finalize_report(
        report, drift=rec.drift, telegraph=rec.telegraph, duration=series.duration
    )
    return AnalysisResult(
        report=report,
        spectrum=rec.spectrum,
        allan=rec.allan,
        telegraph=rec.telegraph,
        drift=rec.drift,
        detrended=rec.detrended,
    )
