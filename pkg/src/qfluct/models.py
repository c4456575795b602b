"""Noise-model vocabulary: domain types and their analytic spectra.

A :class:`NoiseModel` is an ordered list of spectral components (white,
1/f, Lorentzian, drift). All spectra use the one-sided convention: the
integral of the PSD over f > 0 equals the total variance of the process.
For spin-locking work the same types describe the noise spectral density
in s^-1 (angular prefactors folded into the component parameters), so
that a PSD value adds directly to a decay rate.

Lorentzian components are parameterized by (total_power, corner_frequency)
rather than telegraph switching rates; for a symmetric random telegraph
process between values +/-a with per-direction rate r,
``corner_frequency = 2r / (2 pi)`` and ``total_power = a**2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, NumericalError

__all__ = [
    "Unit",
    "TimeSeries",
    "NoiseComponent",
    "White",
    "OneOverF",
    "Lorentzian",
    "Drift",
    "NoiseModel",
    "PowerSpectrum",
    "AllanCurve",
    "model_psd",
    "model_allan",
    "AllanTransfer",
    "lorentzian_allan_peak_constant",
]


class Unit(str, enum.Enum):
    """Physical unit of a fluctuating observable."""

    SECONDS = "seconds"
    HERTZ = "hertz"
    DIMENSIONLESS = "dimensionless"


def _as_readonly_f64(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled record of a fluctuating observable.

    Attributes
    ----------
    start_time:
        Time of the first sample, seconds.
    dt:
        Sampling interval, seconds (> 0).
    values:
        Sampled observable, finite floats.
    unit:
        Unit of the observable values.
    meta:
        Optional diagnostics attached by producers (e.g. resolvability
        warnings, sampled fluctuator corners). Not part of the data
        contract; safe to ignore.
    """

    start_time: float
    dt: float
    values: np.ndarray
    unit: Unit
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (self.dt > 0):
            raise InvalidInputError(f"dt must be > 0, got {self.dt}")
        vals = _as_readonly_f64(self.values, "values")
        if vals.size == 0:
            raise InvalidInputError("values must be non-empty")
        if not np.isfinite(vals).all():
            raise InvalidInputError("values must all be finite")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "unit", Unit(self.unit))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "start_time", float(self.start_time))

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        """Sample times, seconds."""
        return self.start_time + self.dt * np.arange(self.values.size)

    @property
    def duration(self) -> float:
        """Span from first to last sample, seconds."""
        return self.dt * (self.values.size - 1)


class NoiseComponent:
    """Base class for spectral components of a noise model."""

    def psd(self, f: np.ndarray) -> np.ndarray:
        """One-sided PSD of this component on frequency grid ``f``."""
        raise NotImplementedError


@dataclass(frozen=True)
class White(NoiseComponent):
    """Frequency-independent noise; ``level`` in units^2/Hz."""

    level: float

    def __post_init__(self) -> None:
        if not (self.level >= 0):
            raise InvalidInputError(f"white level must be >= 0, got {self.level}")

    def psd(self, f: np.ndarray) -> np.ndarray:
        return np.full_like(f, self.level, dtype=np.float64)


@dataclass(frozen=True)
class OneOverF(NoiseComponent):
    """Power-law noise ``amplitude / f**exponent``.

    ``amplitude`` is the PSD at 1 Hz in units^2; the exponent defaults to
    1 and is bounded to [0.5, 1.5] (treated as a fittable shape parameter,
    not a measured quantity).
    """

    amplitude: float
    exponent: float = 1.0

    def __post_init__(self) -> None:
        if not (self.amplitude >= 0):
            raise InvalidInputError(f"1/f amplitude must be >= 0, got {self.amplitude}")
        if not (0.5 <= self.exponent <= 1.5):
            raise InvalidInputError(
                f"1/f exponent must lie in [0.5, 1.5], got {self.exponent}"
            )

    def psd(self, f: np.ndarray) -> np.ndarray:
        return self.amplitude / np.power(f, self.exponent)


@dataclass(frozen=True)
class Lorentzian(NoiseComponent):
    """Lorentzian (switching) noise.

    ``total_power`` is the integral of the PSD over f > 0 (units^2);
    ``corner_frequency`` is the switching frequency in Hz.
    """

    total_power: float
    corner_frequency: float

    def __post_init__(self) -> None:
        if not (self.total_power >= 0):
            raise InvalidInputError(
                f"Lorentzian total_power must be >= 0, got {self.total_power}"
            )
        if not (self.corner_frequency > 0):
            raise InvalidInputError(
                f"Lorentzian corner_frequency must be > 0, got {self.corner_frequency}"
            )

    def psd(self, f: np.ndarray) -> np.ndarray:
        fc = self.corner_frequency
        return (2.0 * self.total_power / math.pi) * fc / (fc * fc + f * f)


@dataclass(frozen=True)
class Drift(NoiseComponent):
    """Deterministic linear drift at ``rate`` units/second.

    Contributes nothing to the PSD (handled in the time domain); its Allan
    deviation contribution is ``rate * tau / sqrt(2)``.
    """

    rate: float

    def psd(self, f: np.ndarray) -> np.ndarray:
        return np.zeros_like(f, dtype=np.float64)


@dataclass(frozen=True)
class NoiseModel:
    """Ordered collection of noise components; PSD is their sum."""

    components: tuple[NoiseComponent, ...] = ()

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        for c in comps:
            if not isinstance(c, NoiseComponent):
                raise InvalidInputError(f"not a noise component: {c!r}")
        if sum(isinstance(c, White) for c in comps) > 1:
            raise InvalidInputError("at most one White component allowed")
        if sum(isinstance(c, Drift) for c in comps) > 1:
            raise InvalidInputError("at most one Drift component allowed")
        object.__setattr__(self, "components", comps)

    def psd(self, f: np.ndarray) -> np.ndarray:
        """Summed one-sided PSD on grid ``f`` (drift excluded)."""
        out = np.zeros_like(f, dtype=np.float64)
        for c in self.components:
            out += c.psd(f)
        return out

    @property
    def drift_rate(self) -> float:
        """Rate of the drift component, 0 if absent."""
        for c in self.components:
            if isinstance(c, Drift):
                return c.rate
        return 0.0

    def spectral_components(self) -> tuple[NoiseComponent, ...]:
        """Components that contribute to the PSD (drift excluded)."""
        return tuple(c for c in self.components if not isinstance(c, Drift))


@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    """One-sided power spectral density on a positive frequency grid."""

    frequencies: np.ndarray
    psd: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        f = _as_readonly_f64(self.frequencies, "frequencies")
        s = _as_readonly_f64(self.psd, "psd")
        if f.size == 0:
            raise InvalidInputError("frequency grid must be non-empty")
        if f.size != s.size:
            raise InvalidInputError("frequencies and psd must have equal length")
        if not (f[0] > 0) or not np.all(np.diff(f) > 0):
            raise InvalidInputError("frequencies must be strictly increasing and > 0")
        if not np.isfinite(s).all() or np.any(s < 0):
            raise InvalidInputError("psd values must be finite and >= 0")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "psd", s)

    def __len__(self) -> int:
        return self.frequencies.size


@dataclass(frozen=True, eq=False)
class AllanCurve:
    """Allan deviation on a tau grid.

    ``counts`` holds the number of difference pairs contributing per tau
    for estimated curves; it is None for analytic (model) curves.
    """

    taus: np.ndarray
    adev: np.ndarray
    counts: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        t = _as_readonly_f64(self.taus, "taus")
        a = _as_readonly_f64(self.adev, "adev")
        if t.size == 0:
            raise InvalidInputError("tau grid must be non-empty")
        if t.size != a.size:
            raise InvalidInputError("taus and adev must have equal length")
        if not (t[0] > 0) or not np.all(np.diff(t) > 0):
            raise InvalidInputError("taus must be strictly increasing and > 0")
        if not np.isfinite(a).all() or np.any(a < 0):
            raise InvalidInputError("adev values must be finite and >= 0")
        object.__setattr__(self, "taus", t)
        object.__setattr__(self, "adev", a)
        if self.counts is not None:
            c = np.asarray(self.counts, dtype=np.int64)
            if c.shape != t.shape:
                raise InvalidInputError("counts must match taus in length")
            if np.any(c < 0):
                raise InvalidInputError("counts must be >= 0")
            c = np.ascontiguousarray(c)
            c.setflags(write=False)
            object.__setattr__(self, "counts", c)

    def __len__(self) -> int:
        return self.taus.size


def _validated_grid(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty 1-D grid")
    if not (arr[0] > 0) or not np.all(np.diff(arr) > 0):
        raise InvalidInputError(f"{name} must be strictly increasing and > 0")
    return arr


def model_psd(model: NoiseModel, frequencies: Sequence[float]) -> PowerSpectrum:
    """Evaluate the summed one-sided model PSD on a frequency grid.

    Drift components contribute zero here (drift lives in the time
    domain). Raises :class:`InvalidInputError` for an empty or
    non-positive grid.
    """
    f = _validated_grid(frequencies, "frequency grid")
    return PowerSpectrum(f, model.psd(f))


# --- PSD -> Allan variance transfer -------------------------------------
#
# sigma^2(tau) = 2 * int_0^inf S(f) sin^4(pi f tau) / (pi f tau)^2 df
#
# evaluated by trapezoid quadrature on a log-spaced grid. Above
# x = pi f tau = 10 pi the sin^4 factor is replaced by its mean 3/8,
# which keeps the integrand smooth on the coarse log grid while the
# 1/x^2 envelope makes the substitution error negligible.

_KERNEL_X_SWITCH = 10.0 * math.pi
_QUAD_PPD_LADDER: tuple[int, ...] = (80, 160, 320, 640, 1280)
_QUAD_RTOL = 1e-3
_QUAD_SPAN = 1e4  # grid reaches 1/(span*tau_max) .. span/tau_min


def _allan_kernel(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    lo = x <= _KERNEL_X_SWITCH
    xs = x[lo]
    s = np.sin(xs)
    s2 = s * s
    with np.errstate(invalid="ignore", divide="ignore"):
        out[lo] = np.where(xs > 0, s2 * s2 / (xs * xs), 0.0)
    xh = x[~lo]
    out[~lo] = 0.375 / (xh * xh)
    return out


class AllanTransfer:
    """Precomputed quadrature for the PSD -> Allan variance transfer.

    Builds the transfer matrix once for a fixed tau grid so that repeated
    evaluation (e.g. inside a fit loop) reduces to a matrix product.
    """

    def __init__(self, taus: Sequence[float], points_per_decade: int = 160):
        self.taus = _validated_grid(taus, "tau grid")
        fmin = 1.0 / (_QUAD_SPAN * self.taus[-1])
        fmax = _QUAD_SPAN / self.taus[0]
        ndec = math.log10(fmax / fmin)
        nf = int(math.ceil(ndec * points_per_decade)) + 1
        self._logf = np.linspace(math.log(fmin), math.log(fmax), nf)
        self.frequencies = np.exp(self._logf)
        x = math.pi * self.frequencies[None, :] * self.taus[:, None]
        kern = _allan_kernel(x) * self.frequencies[None, :]
        # fold trapezoid weights (uniform in ln f) into the matrix
        w = np.full(nf, self._logf[1] - self._logf[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        self._matrix = 2.0 * kern * w[None, :]

    def variance_of_psd(self, psd_on_grid: np.ndarray) -> np.ndarray:
        """Allan variance for a PSD sampled on ``self.frequencies``."""
        return self._matrix @ psd_on_grid

    def variance(self, model: NoiseModel) -> np.ndarray:
        """Allan variance of the spectral components of ``model``."""
        return self.variance_of_psd(model.psd(self.frequencies))


def model_allan(model: NoiseModel, taus: Sequence[float]) -> AllanCurve:
    """Analytic Allan deviation of a noise model on a tau grid.

    Spectral components go through the transfer quadrature with adaptive
    refinement (relative tolerance 1e-3); a drift component adds
    ``(rate * tau)**2 / 2`` to the variance directly. Raises
    :class:`NumericalError` if the quadrature does not converge.
    """
    t = _validated_grid(taus, "tau grid")
    drift_var = 0.5 * (model.drift_rate * t) ** 2
    spectral = model.spectral_components()
    if not spectral:
        return AllanCurve(t, np.sqrt(drift_var))

    prev = None
    var = None
    for ppd in _QUAD_PPD_LADDER:
        var = AllanTransfer(t, points_per_decade=ppd).variance(model)
        if prev is not None:
            nonzero = prev > 0
            if not nonzero.any():
                break
            rel = np.max(np.abs(var[nonzero] / prev[nonzero] - 1.0))
            if rel <= _QUAD_RTOL:
                break
            if ppd == _QUAD_PPD_LADDER[-1]:
                worst = int(np.argmax(np.abs(var / np.where(prev > 0, prev, 1.0) - 1.0)))
                raise NumericalError(
                    "Allan transfer quadrature did not converge: relative change "
                    f"{rel:.3e} > {_QUAD_RTOL} at {ppd} points/decade "
                    f"(worst tau = {t[worst]:.6g} s)"
                )
        prev = var
    return AllanCurve(t, np.sqrt(var + drift_var))


@lru_cache(maxsize=1)
def lorentzian_allan_peak_constant() -> float:
    """Dimensionless product tau_peak * corner_frequency for a Lorentzian.

    The Allan deviation of Lorentzian noise has a single maximum; by the
    scale invariance of the transfer integral its location satisfies
    tau_peak * fc = const (~0.301). Computed once by golden-section search
    on the closed-form variance of an exponentially correlated process.
    """
    from scipy.optimize import minimize_scalar

    def neg_shape(x: float) -> float:
        return -(2.0 * x - 3.0 + 4.0 * math.exp(-x) - math.exp(-2.0 * x)) / (x * x)

    res = minimize_scalar(neg_shape, bounds=(0.1, 20.0), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x) / (2.0 * math.pi)
