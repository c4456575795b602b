"""Named synthetic-measurement scenarios.

Each scenario is a plain JSON-compatible config dict describing either a
fluctuation time series (``kind: timeseries``) or a spin-locking sweep
(``kind: spinlock``), with parameters drawn from published transmon
measurement campaigns: T1 records switching on two Lorentzian corners
(75 and 800 uHz) for a dry-etched device versus a single 40 uHz corner
for a wet-etched one, qubit-frequency records with 5 kHz telegraph
jumps versus 6 kHz/h drift on top of a 1/f ensemble, resonator quality
factors toggling between 3.9e5 and 7.2e5 at 2 mHz, and spin-locking
noise spectroscopy over Rabi frequencies from 10 kHz to 10 MHz.

The dicts are consumed by :mod:`qfluct.io` (validation, persistence)
and :mod:`qfluct.cli`; :func:`realize_timeseries` and
:func:`realize_spinlock` turn them into data.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError
from .generators import TelegraphSpec, gen_observable
from .models import Drift, Lorentzian, NoiseModel, OneOverF, TimeSeries, Unit, White
from .protocols import DecayCurve, QubitSpec, sim_spinlock

__all__ = [
    "SCENARIOS",
    "scenario_names",
    "scenario_config",
    "build_noise_model",
    "build_telegraphs",
    "realize_timeseries",
    "realize_spinlock",
]

_HOUR = 3600.0


def _sym_rates(corner_hz: float) -> float:
    """Per-direction rate of a symmetric switcher with the given corner."""
    return math.pi * corner_hz


SCENARIOS: dict[str, dict] = {
    # dry-etched T1 record: white floor plus two switchers at 75 and 800 uHz.
    # 3.5 days of monitoring so the slow switcher completes ~20 periods;
    # shorter records bias its fitted corner upward
    "sample-a-t1": {
        "kind": "timeseries",
        "seed": 1001,
        "generator": {
            "base": 5.6e-5,
            "unit": "seconds",
            "n": 30000,
            "dt": 10.0,
            "white_level": 2.0e-11,
            "one_over_f_amplitude": 0.0,
            "drift_rate": 0.0,
            "lorentzians": [
                {"total_power": 6.4e-11, "corner_hz": 7.5e-5},
                {"total_power": 6.4e-11, "corner_hz": 8.0e-4},
            ],
            "telegraphs": [],
        },
        "estimator": {},
        "fit": {"max_lorentzians": 3},
    },
    # wet-etched T1 record: single 40 uHz switcher, long enough for ~20
    # switching periods
    "sample-b-t1": {
        "kind": "timeseries",
        "seed": 1002,
        "generator": {
            "base": 2.0e-5,
            "unit": "seconds",
            "n": 48000,
            "dt": 10.0,
            "white_level": 1.0e-11,
            "one_over_f_amplitude": 0.0,
            "drift_rate": 0.0,
            "lorentzians": [
                {"total_power": 9.0e-12, "corner_hz": 4.0e-5},
            ],
            "telegraphs": [],
        },
        "estimator": {},
        "fit": {"max_lorentzians": 3},
    },
    # dry-etched qubit frequency: discrete 5 kHz telegraph jumps
    "sample-a-frequency": {
        "kind": "timeseries",
        "seed": 1003,
        "generator": {
            "base": 0.0,
            "unit": "hertz",
            "n": 6000,
            "dt": 10.0,
            "white_level": 50.0,
            "one_over_f_amplitude": 0.0,
            "drift_rate": 0.0,
            "lorentzians": [],
            "telegraphs": [
                {
                    "rate_up": _sym_rates(1.0e-4),
                    "rate_down": _sym_rates(1.0e-4),
                    "low_value": 0.0,
                    "high_value": 5000.0,
                    "initial_state": "stationary-random",
                }
            ],
        },
        "estimator": {},
        "fit": {"max_lorentzians": 3},
    },
    # wet-etched qubit frequency: 6 kHz/h drift over a fluctuator ensemble
    "sample-b-frequency": {
        "kind": "timeseries",
        "seed": 1004,
        "generator": {
            "base": 0.0,
            "unit": "hertz",
            "n": 6000,
            "dt": 10.0,
            "white_level": 50.0,
            "one_over_f_amplitude": 3.5e7,
            "drift_rate": 6000.0 / _HOUR,
            "lorentzians": [
                {"total_power": 4.0e6, "corner_hz": 1.06e-4},
                {"total_power": 2.25e6, "corner_hz": 2.0e-3},
            ],
            "telegraphs": [],
        },
        "estimator": {},
        "fit": {"max_lorentzians": 3},
    },
    # resonator internal quality factor toggling at 2 mHz
    "resonator-q": {
        "kind": "timeseries",
        "seed": 1005,
        "generator": {
            "base": 0.0,
            "unit": "dimensionless",
            "n": 4000,
            "dt": 10.0,
            "white_level": 0.0,
            "one_over_f_amplitude": 0.0,
            "drift_rate": 0.0,
            "lorentzians": [],
            "telegraphs": [
                {
                    "rate_up": _sym_rates(2.0e-3),
                    "rate_down": _sym_rates(2.0e-3),
                    "low_value": 3.9e5,
                    "high_value": 7.2e5,
                    "initial_state": "stationary-random",
                }
            ],
        },
        "estimator": {},
        "fit": {"max_lorentzians": 3},
    },
    # flat-spectrum control record
    "white-limited": {
        "kind": "timeseries",
        "seed": 1006,
        "generator": {
            "base": 0.0,
            "unit": "hertz",
            "n": 6000,
            "dt": 10.0,
            "white_level": 1.0e4,
            "one_over_f_amplitude": 0.0,
            "drift_rate": 0.0,
            "lorentzians": [],
            "telegraphs": [],
        },
        "estimator": {},
        "fit": {"max_lorentzians": 3},
    },
    # linear drift at 6 kHz/h on a white background
    "drift-white": {
        "kind": "timeseries",
        "seed": 1007,
        "generator": {
            "base": 0.0,
            "unit": "hertz",
            "n": 3600,
            "dt": 10.0,
            "white_level": 1.0e6,
            "one_over_f_amplitude": 0.0,
            "drift_rate": 6000.0 / _HOUR,
            "lorentzians": [],
            "telegraphs": [],
        },
        "estimator": {},
        "fit": {"max_lorentzians": 2},
    },
    # spin-locking sweep, dry-etched parameters: 1/f negligible
    "spinlock-dry": {
        "kind": "spinlock",
        "seed": 2001,
        "protocol": {
            "f01": 4.5e9,
            "t1": 5.6e-5,
            "t2": 4.5e-5,
            "rabi_hz": {"min": 1.0e4, "max": 1.0e7, "points": 20},
            "delays_s": {"max": 1.2e-4, "points": 61},
            "shots": 0,
            "white_level": 1.5e3,
            "one_over_f_amplitude": 1.0e8,
        },
    },
    # spin-locking sweep, wet-etched parameters: 1/f significant
    "spinlock-wet": {
        "kind": "spinlock",
        "seed": 2002,
        "protocol": {
            "f01": 4.4e9,
            "t1": 2.0e-5,
            "t2": 1.4e-5,
            "rabi_hz": {"min": 1.0e4, "max": 1.0e7, "points": 20},
            "delays_s": {"max": 1.2e-4, "points": 61},
            "shots": 0,
            "white_level": 2.0e3,
            "one_over_f_amplitude": 5.0e9,
        },
    },
}


def scenario_names() -> list[str]:
    return sorted(SCENARIOS)


def scenario_config(name: str) -> dict:
    """Deep copy of a named scenario config, with its name filled in."""
    try:
        base = SCENARIOS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown scenario {name!r}; available: {', '.join(scenario_names())}"
        ) from None
    import copy

    cfg = copy.deepcopy(base)
    cfg["scenario"] = name
    cfg["schema_version"] = 1
    return cfg


def build_noise_model(gen: dict) -> NoiseModel:
    """Noise model from the ``generator`` section of a config.

    A level of exactly zero means "component absent"; any other value is
    handed to the component constructor, so invalid parameters (negative
    levels, bad corners) fail when the config is loaded, not mid-run.
    """
    comps: list = []
    if gen.get("white_level", 0.0) != 0.0:
        comps.append(White(gen["white_level"]))
    if gen.get("one_over_f_amplitude", 0.0) != 0.0:
        comps.append(OneOverF(gen["one_over_f_amplitude"]))
    for lor in gen.get("lorentzians", []):
        comps.append(Lorentzian(lor["total_power"], lor["corner_hz"]))
    if gen.get("drift_rate", 0.0) != 0.0:
        comps.append(Drift(gen["drift_rate"]))
    return NoiseModel(tuple(comps))


def build_telegraphs(gen: dict) -> list[TelegraphSpec]:
    unit = Unit(gen.get("unit", "dimensionless"))
    return [
        TelegraphSpec(
            rate_up=t["rate_up"],
            rate_down=t["rate_down"],
            low_value=t["low_value"],
            high_value=t["high_value"],
            initial_state=t.get("initial_state", "stationary-random"),
            unit=unit,
        )
        for t in gen.get("telegraphs", [])
    ]


def realize_timeseries(config: dict, seed: int | None = None) -> TimeSeries:
    """Generate the synthetic record described by a timeseries config."""
    if config.get("kind") != "timeseries":
        raise InvalidInputError(f"not a timeseries config: kind={config.get('kind')!r}")
    gen = config["generator"]
    if seed is None:
        seed = config["seed"]
    return gen_observable(
        base=gen["base"],
        model=build_noise_model(gen),
        telegraphs=build_telegraphs(gen),
        n=gen["n"],
        dt=gen["dt"],
        seed=seed,
        unit=Unit(gen.get("unit", "dimensionless")),
    )


def rabi_grid(spec) -> np.ndarray:
    """Rabi-frequency grid from an explicit list or {min, max, points}."""
    if isinstance(spec, dict):
        return np.logspace(
            math.log10(spec["min"]), math.log10(spec["max"]), int(spec["points"])
        )
    return np.asarray(spec, dtype=np.float64)


def delay_grid(spec) -> np.ndarray:
    """Delay grid from an explicit list or {max, points} (starting at 0)."""
    if isinstance(spec, dict):
        return np.linspace(0.0, spec["max"], int(spec["points"]))
    return np.asarray(spec, dtype=np.float64)


def realize_spinlock(
    config: dict, seed: int | None = None, workers: int = 1
) -> tuple[QubitSpec, np.ndarray, np.ndarray, list[DecayCurve], NoiseModel]:
    """Simulate the spin-locking sweep described by a spinlock config."""
    if config.get("kind") != "spinlock":
        raise InvalidInputError(f"not a spinlock config: kind={config.get('kind')!r}")
    proto = config["protocol"]
    if seed is None:
        seed = config["seed"]
    qubit = QubitSpec(f01=proto["f01"], T1=proto["t1"], T2=proto["t2"])
    comps: list = []
    if proto.get("white_level", 0.0) > 0:
        comps.append(White(proto["white_level"]))
    if proto.get("one_over_f_amplitude", 0.0) > 0:
        comps.append(OneOverF(proto["one_over_f_amplitude"]))
    noise = NoiseModel(tuple(comps))
    rabi = rabi_grid(proto["rabi_hz"])
    delays = delay_grid(proto["delays_s"])
    shots = int(proto.get("shots", 0)) or None
    curves = sim_spinlock(qubit, noise, rabi, delays, shots, seed, workers=workers)
    return qubit, rabi, delays, curves, noise
