"""Stochastic generators for synthetic fluctuation records.

Produces :class:`~qfluct.models.TimeSeries` realizations of telegraph
(random-telegraph-signal) switching, superposed-fluctuator 1/f noise,
white noise, and composite observables with deterministic drift.

Reproducibility contract: every generator derives its randomness from
``(seed, stream id)`` through :func:`qfluct._rng.stream`, so equal seeds
give bit-identical output regardless of how many other generators run,
in what order, or on how many threads. Ensemble members are generated
from per-member child seeds which are recorded in the output ``meta``,
so any single member can be reproduced through the public API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._rng import stream
from .errors import InvalidInputError
from .kernels import telegraph_states
from .models import (
    Drift,
    Lorentzian,
    NoiseModel,
    OneOverF,
    TimeSeries,
    Unit,
    White,
)

__all__ = [
    "TelegraphSpec",
    "EnsembleSpec",
    "gen_telegraph",
    "gen_ensemble_one_over_f",
    "gen_white",
    "gen_observable",
]

# Stream-id namespaces; child streams never collide across generators.
_SP_TELEGRAPH = 0
_SP_WHITE = 1
_SP_ENSEMBLE_CORNERS = 2
_SP_ENSEMBLE_MEMBER = 3
_SP_OBSERVABLE = 4

_INITIAL_STATES = ("low", "high", "stationary-random")

# Hard aliasing guard: beyond this many expected transitions per sample
# interval the sampled chain carries no information about the rates.
_ALIAS_LIMIT = 5.0


@dataclass(frozen=True)
class TelegraphSpec:
    """Two-state continuous-time Markov switcher.

    ``rate_up`` is the low-to-high transition rate and ``rate_down`` the
    high-to-low rate, both in Hz. A zero rate makes the corresponding
    state absorbing. ``initial_state`` is ``low``, ``high``, or
    ``stationary-random`` (drawn from the stationary occupancy).
    """

    rate_up: float
    rate_down: float
    low_value: float
    high_value: float
    initial_state: str = "stationary-random"
    unit: Unit = Unit.DIMENSIONLESS

    def __post_init__(self) -> None:
        if not (self.rate_up >= 0 and self.rate_down >= 0):
            raise InvalidInputError(
                f"rates must be >= 0, got ({self.rate_up}, {self.rate_down})"
            )
        if not (self.low_value <= self.high_value):
            raise InvalidInputError(
                f"low_value {self.low_value} must not exceed high_value {self.high_value}"
            )
        if self.initial_state not in _INITIAL_STATES:
            raise InvalidInputError(
                f"initial_state must be one of {_INITIAL_STATES}, got {self.initial_state!r}"
            )
        object.__setattr__(self, "unit", Unit(self.unit))

    @property
    def corner_frequency(self) -> float:
        """Lorentzian corner (rate_up + rate_down) / (2 pi), Hz."""
        return (self.rate_up + self.rate_down) / (2.0 * math.pi)


@dataclass(frozen=True)
class EnsembleSpec:
    """Ensemble of symmetric telegraph fluctuators with log-uniform corners.

    Each member switches between ``-amplitude`` and ``+amplitude`` with a
    corner frequency drawn log-uniformly from ``corner_range`` (Hz). The
    ``seed`` field is a default; an explicit seed passed to the generator
    takes precedence.
    """

    n_fluctuators: int
    corner_range: tuple[float, float]
    amplitude: float
    seed: int | None = None

    def __post_init__(self) -> None:
        if int(self.n_fluctuators) != self.n_fluctuators or self.n_fluctuators < 1:
            raise InvalidInputError(
                f"n_fluctuators must be a positive integer, got {self.n_fluctuators}"
            )
        lo, hi = self.corner_range
        if not (0 < lo < hi):
            raise InvalidInputError(
                f"corner_range must be ordered and positive, got {self.corner_range}"
            )
        if not (self.amplitude >= 0):
            raise InvalidInputError(f"amplitude must be >= 0, got {self.amplitude}")
        object.__setattr__(self, "n_fluctuators", int(self.n_fluctuators))
        object.__setattr__(self, "corner_range", (float(lo), float(hi)))


def _check_n_dt(n: int, dt: float, min_n: int = 2) -> tuple[int, float]:
    if int(n) != n or n < min_n:
        raise InvalidInputError(f"n must be an integer >= {min_n}, got {n}")
    if not (dt > 0 and math.isfinite(dt)):
        raise InvalidInputError(f"dt must be a positive finite number, got {dt}")
    return int(n), float(dt)


def _child_seed(seed: int, ids: tuple[int, ...]) -> int:
    """Derive a 64-bit child seed for re-entry through the public API."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=ids)
    w = ss.generate_state(2)
    return int(w[0]) | (int(w[1]) << 32)


def gen_telegraph(spec: TelegraphSpec, n: int, dt: float, seed: int) -> TimeSeries:
    """Sample a two-state telegraph process at interval ``dt``.

    Uses exact per-step transition probabilities p = 1 - exp(-rate*dt),
    so the sampled chain is unbiased at any dt within the aliasing guard
    (``rate*dt <= 5``). The first sample is the initial state; each
    subsequent sample follows one transition decision.
    """
    n, dt = _check_n_dt(n, dt)
    worst = max(spec.rate_up, spec.rate_down) * dt
    if worst > _ALIAS_LIMIT:
        raise InvalidInputError(
            f"aliasing: rate*dt = {worst:.3g} > {_ALIAS_LIMIT:g}; "
            "switching is unresolvable at this sampling interval"
        )
    rng = stream(seed, (_SP_TELEGRAPH,))

    total = spec.rate_up + spec.rate_down
    if spec.initial_state == "low":
        initial = 0
    elif spec.initial_state == "high":
        initial = 1
    else:
        if total == 0.0:
            raise InvalidInputError(
                "stationary-random initial state undefined when both rates are 0"
            )
        initial = 1 if rng.random() < spec.rate_up / total else 0

    p_lh = -math.expm1(-spec.rate_up * dt)
    p_hl = -math.expm1(-spec.rate_down * dt)
    u = rng.random(n - 1)
    states = np.empty(n, dtype=np.uint8)
    states[0] = initial
    states[1:] = telegraph_states(u, p_lh, p_hl, initial)
    levels = np.array([spec.low_value, spec.high_value], dtype=np.float64)
    meta = {
        "generator": "telegraph",
        "rate_up": spec.rate_up,
        "rate_down": spec.rate_down,
        "corner_hz": spec.corner_frequency,
    }
    return TimeSeries(0.0, dt, levels[states], spec.unit, meta=meta)


def gen_ensemble_one_over_f(
    spec: EnsembleSpec,
    n: int,
    dt: float,
    seed: int | None = None,
    unit: Unit = Unit.DIMENSIONLESS,
) -> TimeSeries:
    """Superpose symmetric telegraph fluctuators into a 1/f record.

    Corners are drawn log-uniformly from ``spec.corner_range``, which
    must span at least two decades for the summed spectrum to follow
    1/f. The output is mean-removed. ``meta`` records the sampled
    corners and the per-member child seeds (member i mean-restored
    equals ``gen_telegraph`` of a symmetric spec with that seed); a
    warning diagnostic is attached when the corner range extends
    outside the resolvable band [1/(n*dt), 1/(2*dt)].
    """
    n, dt = _check_n_dt(n, dt)
    if seed is None:
        seed = spec.seed
    if seed is None:
        raise InvalidInputError("no seed: pass one explicitly or set EnsembleSpec.seed")
    lo, hi = spec.corner_range
    if hi / lo < 100.0 * (1.0 - 1e-12):
        raise InvalidInputError(
            f"corner_range must span >= 2 decades for 1/f, got {hi / lo:.3g}x"
        )

    rng_c = stream(seed, (_SP_ENSEMBLE_CORNERS,))
    corners = np.exp(rng_c.uniform(math.log(lo), math.log(hi), size=spec.n_fluctuators))

    member_seeds = [
        _child_seed(seed, (_SP_ENSEMBLE_MEMBER, i)) for i in range(spec.n_fluctuators)
    ]
    total = np.zeros(n)
    for fc, child in zip(corners, member_seeds):
        rate = math.pi * fc  # symmetric: corner = 2*rate / (2*pi)
        member = TelegraphSpec(
            rate_up=rate,
            rate_down=rate,
            low_value=-spec.amplitude,
            high_value=spec.amplitude,
            initial_state="stationary-random",
        )
        total += gen_telegraph(member, n, dt, child).values
    total -= total.mean()

    meta: dict = {
        "generator": "ensemble_one_over_f",
        "corners_hz": [float(c) for c in corners],
        "member_seeds": member_seeds,
    }
    f_lo, f_hi = 1.0 / (n * dt), 1.0 / (2.0 * dt)
    if lo < f_lo or hi > f_hi:
        meta["warnings"] = [
            f"corner_range [{lo:.3g}, {hi:.3g}] Hz extends outside the "
            f"resolvable band [{f_lo:.3g}, {f_hi:.3g}] Hz"
        ]
    return TimeSeries(0.0, dt, total, unit, meta=meta)


def gen_white(
    level: float,
    n: int,
    dt: float,
    seed: int,
    unit: Unit = Unit.DIMENSIONLESS,
) -> TimeSeries:
    """Gaussian white noise with one-sided PSD ``level`` (units^2/Hz).

    Sample variance is level/(2*dt), the value consistent with a flat
    one-sided spectrum integrated up to the Nyquist frequency.
    """
    n, dt = _check_n_dt(n, dt, min_n=1)
    if not (level >= 0):
        raise InvalidInputError(f"white level must be >= 0, got {level}")
    rng = stream(seed, (_SP_WHITE,))
    sigma = math.sqrt(level / (2.0 * dt))
    values = sigma * rng.standard_normal(n)
    return TimeSeries(0.0, dt, values, unit, meta={"generator": "white", "level": level})


def _default_ensemble_for(amplitude: float, n: int, dt: float) -> EnsembleSpec:
    """Fluctuator ensemble realizing S(f) = amplitude/f over the record band.

    Superposition of N log-uniform symmetric switchers of amplitude a
    gives S(f) ~ (N a^2 / ln(hi/lo)) / f between the slowest and fastest
    corners, so the corner range is stretched a decade below the record
    fundamental 1/(n*dt): members slower than the record supply the
    wander that the lowest spectral bins and longest Allan points sense.
    Truncating the bath at the fundamental instead leaves every realized
    record with a spurious low-frequency knee.
    """
    lo, hi = 1.0 / (n * dt), 1.0 / (2.0 * dt)
    if hi / lo < 100.0:
        raise InvalidInputError(
            f"record too short to synthesize 1/f noise: resolvable band spans "
            f"{hi / lo:.3g}x, need >= 2 decades (n >= 200)"
        )
    lo = lo / 10.0
    decades = math.log10(hi / lo)
    n_fluct = max(20, int(math.ceil(8 * decades)))
    a = math.sqrt(amplitude * math.log(hi / lo) / n_fluct)
    return EnsembleSpec(n_fluctuators=n_fluct, corner_range=(lo, hi), amplitude=a)


def gen_observable(
    base: float,
    model: NoiseModel | None,
    telegraphs: Sequence[TelegraphSpec],
    n: int,
    dt: float,
    seed: int,
    unit: Unit = Unit.DIMENSIONLESS,
) -> TimeSeries:
    """Composite observable: base + drift*t + realized noise contributions.

    Model components are realized sample-wise and summed: White through
    :func:`gen_white`, OneOverF through a default fluctuator ensemble
    spanning the record's resolvable band (exponent must be exactly 1;
    other exponents have no telegraph-superposition realization here),
    Lorentzian as the equivalent symmetric telegraph switcher, and Drift
    deterministically as rate*t. Explicit ``telegraphs`` are added on
    top and must carry the same unit as the output.

    For time-type observables with a positive baseline (a T1 record),
    values are clamped at a floor of 1% of ``base``: measured relaxation
    times are strictly positive, and additive noise must not take the
    synthetic record below physical range.
    """
    n, dt = _check_n_dt(n, dt, min_n=1)
    unit = Unit(unit)
    for tg in telegraphs:
        if tg.unit != unit:
            raise InvalidInputError(
                f"unit mismatch: telegraph contribution in {tg.unit.value!r} "
                f"cannot enter a {unit.value!r} observable"
            )

    t = dt * np.arange(n)
    values = np.full(n, float(base))
    components = list(model.components) if model is not None else []
    stream_index = 0
    component_seeds: list[int] = []

    for comp in components:
        child = _child_seed(seed, (_SP_OBSERVABLE, stream_index))
        stream_index += 1
        if isinstance(comp, Drift):
            values += comp.rate * t
            continue
        component_seeds.append(child)
        if isinstance(comp, White):
            values += gen_white(comp.level, n, dt, child).values
        elif isinstance(comp, OneOverF):
            if comp.exponent != 1.0:
                raise InvalidInputError(
                    f"can only realize 1/f with exponent exactly 1, got {comp.exponent}"
                )
            espec = _default_ensemble_for(comp.amplitude, n, dt)
            values += gen_ensemble_one_over_f(espec, n, dt, child).values
        elif isinstance(comp, Lorentzian):
            a = math.sqrt(comp.total_power)
            rate = math.pi * comp.corner_frequency
            member = TelegraphSpec(rate, rate, -a, a, "stationary-random")
            values += gen_telegraph(member, n, dt, child).values
        else:
            raise InvalidInputError(f"no generator for component {comp!r}")

    for tg in telegraphs:
        child = _child_seed(seed, (_SP_OBSERVABLE, stream_index))
        stream_index += 1
        component_seeds.append(child)
        shifted = TelegraphSpec(
            tg.rate_up, tg.rate_down, tg.low_value, tg.high_value, tg.initial_state
        )
        values += gen_telegraph(shifted, n, dt, child).values

    if unit == Unit.SECONDS and base > 0:
        np.maximum(values, 0.01 * base, out=values)

    meta = {
        "generator": "observable",
        "base": float(base),
        "component_seeds": component_seeds,
    }
    return TimeSeries(0.0, dt, values, unit, meta=meta)
