"""File formats, config validation, and atomic persistence.

Flat, diff-able formats: data as CSV with ``#``-prefixed comment
headers (format tag, schema version, config hash, seed, JSON meta),
configs and fit reports as JSON with a ``schema_version`` field and
strict key checking. Floats are written with ``repr``, which
round-trips IEEE doubles exactly (beyond 15 significant digits).

All writes go through a temp-file-then-rename so that readers never
observe a partially written file; existing files are only replaced
when ``force`` is set.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    FileFormatError,
    InvalidInputError,
    IOFailureError,
    OutputExistsError,
    SchemaVersionError,
)
from .models import (
    AllanCurve,
    Drift,
    Lorentzian,
    NoiseComponent,
    NoiseModel,
    OneOverF,
    PowerSpectrum,
    TimeSeries,
    Unit,
    White,
)
from .protocols import DecayCurve, QubitSpec, SpinLockPoint
from .scenarios import build_noise_model, build_telegraphs, delay_grid, rabi_grid

__all__ = [
    "SCHEMA_VERSION",
    "RunConfig",
    "config_hash",
    "atomic_write_text",
    "write_timeseries",
    "read_timeseries",
    "write_decay_curve",
    "read_decay_curve",
    "write_spectrum",
    "read_spectrum",
    "write_allan",
    "read_allan",
    "write_gamma_table",
    "read_gamma_table",
    "component_from_dict",
    "fit_report_to_dict",
    "write_json",
    "read_json",
    "read_stamp",
]

SCHEMA_VERSION = 1

_FORMATS = {
    "timeseries": "time_s,value,unit",
    "decay": "delay_s,population,shots",
    "spectrum": "freq_hz,psd",
    "allan": "tau_s,adev,count",
    "gamma": "rabi_hz,gamma_per_s,gamma_err",
}


# ---------------------------------------------------------------------------
# primitives


def atomic_write_text(path: str | Path, text: str, force: bool = False) -> None:
    """Write a file atomically; refuse to overwrite unless ``force``."""
    path = Path(path)
    if path.exists() and not force:
        raise OutputExistsError(
            f"{path} exists; pass --force (or force=True) to overwrite"
        )
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IOFailureError(f"cannot write {path}: {exc}") from exc


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {obj!r}")


def _canonical_json(obj) -> str:
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), allow_nan=False,
        default=_json_default,
    )


def config_hash(config: dict) -> str:
    """sha256 of the canonical config JSON, excluding the output path.

    The output directory does not affect results, so it is excluded to
    keep the hash a pure function of the science parameters.
    """
    pruned = {k: v for k, v in config.items() if k != "out_dir"}
    return hashlib.sha256(_canonical_json(pruned).encode()).hexdigest()


def _fmt(x: float) -> str:
    return repr(float(x))


def _comment_block(kind: str, meta: dict | None) -> list[str]:
    lines = [f"# qfluct-format: {kind}/v{SCHEMA_VERSION}"]
    if meta:
        for key in sorted(meta):
            val = meta[key]
            if key == "meta":
                lines.append(f"# meta: {_canonical_json(val)}")
            else:
                lines.append(f"# {key}: {val}")
    return lines


def _write_csv(
    path: str | Path,
    kind: str,
    rows: Iterable[Sequence],
    meta: dict | None,
    force: bool,
) -> None:
    lines = _comment_block(kind, meta)
    lines.append(_FORMATS[kind])
    for row in rows:
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n", force=force)


def _read_csv(path: str | Path, kind: str) -> tuple[list[tuple[int, list[str]]], dict]:
    """Rows are returned with their physical line number so parse errors
    point at the actual line in the file, not the data-row index."""
    path = Path(path)
    header = _FORMATS[kind]
    columns = header.split(",")
    try:
        raw = path.read_text()
    except OSError as exc:
        raise IOFailureError(f"cannot read {path}: {exc}") from exc
    comments: dict = {}
    rows: list[tuple[int, list[str]]] = []
    header_seen = False
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, val = body.partition(":")
                key = key.strip()
                val = val.strip()
                if key == "meta":
                    try:
                        comments["meta"] = json.loads(val)
                    except json.JSONDecodeError as exc:
                        raise FileFormatError(
                            f"{path}: line {lineno}: malformed meta JSON: {exc}"
                        ) from exc
                else:
                    comments[key] = val
            continue
        if not header_seen:
            if line != header:
                raise FileFormatError(
                    f"{path}: line {lineno}: expected header {header!r}, got {line!r}"
                )
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != len(columns):
            raise FileFormatError(
                f"{path}: line {lineno}: expected {len(columns)} columns "
                f"({header}), got {len(parts)}"
            )
        rows.append((lineno, parts))
    if not header_seen:
        raise FileFormatError(f"{path}: missing header row {header!r}")
    tag = comments.get("qfluct-format")
    if tag is not None:
        expected = f"{kind}/v{SCHEMA_VERSION}"
        if tag != expected:
            raise SchemaVersionError(
                f"{path}: format {tag!r} not supported (expected {expected!r})"
            )
    return rows, comments


def read_stamp(path: str | Path) -> dict:
    """Provenance comments (config hash, seed) from a data file's header.

    Returns an empty dict for files written outside a config context.
    """
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise IOFailureError(f"cannot read {path}: {exc}") from exc
    out: dict = {}
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        if not line.startswith("#"):
            break
        key, _, val = line[1:].strip().partition(":")
        key = key.strip()
        val = val.strip()
        if key == "config_sha256":
            out[key] = val
        elif key == "seed":
            try:
                out[key] = int(val)
            except ValueError:
                pass
    return out


def _parse_float(path, lineno: int, column: str, text: str) -> float:
    try:
        val = float(text)
    except ValueError as exc:
        raise FileFormatError(
            f"{path}: line {lineno}: column {column!r}: not a number: {text!r}"
        ) from exc
    if math.isnan(val) or math.isinf(val):
        raise FileFormatError(
            f"{path}: line {lineno}: column {column!r}: non-finite value {text!r}"
        )
    return val


def _parse_int(path, lineno: int, column: str, text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise FileFormatError(
            f"{path}: line {lineno}: column {column!r}: not an integer: {text!r}"
        ) from exc


def _data_lineno(path: str | Path, kind: str, row_index: int) -> int:
    """Best-effort physical line number of a data row (for error text)."""
    # comments + header precede data; recompute by scanning
    header = _FORMATS[kind]
    seen = -1
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or (seen < 0 and stripped == header):
            if stripped == header:
                seen = 0
            continue
        seen += 1
        if seen == row_index:
            return lineno
    return row_index + 1


# ---------------------------------------------------------------------------
# concrete formats


def write_timeseries(
    path: str | Path,
    series: TimeSeries,
    extra: dict | None = None,
    force: bool = False,
) -> None:
    meta = dict(extra or {})
    meta.setdefault("start_time_s", _fmt(series.start_time))
    meta.setdefault("dt_s", _fmt(series.dt))
    if series.meta:
        meta.setdefault("meta", series.meta)
    times = series.times
    unit = series.unit.value
    rows = (
        (_fmt(t), _fmt(v), unit) for t, v in zip(times, series.values)
    )
    _write_csv(path, "timeseries", rows, meta, force)


def read_timeseries(path: str | Path) -> TimeSeries:
    rows, comments = _read_csv(path, "timeseries")
    if not rows:
        raise FileFormatError(f"{path}: no data rows")
    times = np.empty(len(rows))
    values = np.empty(len(rows))
    units: set[str] = set()
    for i, (lineno, parts) in enumerate(rows):
        times[i] = _parse_float(path, lineno, "time_s", parts[0])
        values[i] = _parse_float(path, lineno, "value", parts[1])
        units.add(parts[2])
    if len(units) != 1:
        raise FileFormatError(f"{path}: mixed units in 'unit' column: {sorted(units)}")
    unit_text = units.pop()
    try:
        unit = Unit(unit_text)
    except ValueError:
        raise FileFormatError(
            f"{path}: unknown unit {unit_text!r}; expected one of "
            f"{[u.value for u in Unit]}"
        ) from None
    if len(rows) < 2:
        raise FileFormatError(f"{path}: need at least 2 samples")
    dts = np.diff(times)
    dt = float(np.median(dts))
    if dt <= 0 or not np.allclose(dts, dt, rtol=1e-9, atol=0.0):
        raise FileFormatError(f"{path}: time_s column is not uniformly spaced")
    meta = comments.get("meta", {})
    return TimeSeries(float(times[0]), dt, values, unit, meta=meta)


def write_decay_curve(
    path: str | Path,
    curve: DecayCurve,
    extra: dict | None = None,
    force: bool = False,
) -> None:
    meta = dict(extra or {})
    if curve.meta:
        meta.setdefault("meta", curve.meta)
    rows = (
        (_fmt(d), _fmt(p), str(int(s)))
        for d, p, s in zip(curve.delays, curve.populations, curve.shots)
    )
    _write_csv(path, "decay", rows, meta, force)


def read_decay_curve(path: str | Path) -> DecayCurve:
    rows, comments = _read_csv(path, "decay")
    if not rows:
        raise FileFormatError(f"{path}: no data rows")
    delays = np.empty(len(rows))
    pops = np.empty(len(rows))
    shots = np.empty(len(rows), dtype=np.int64)
    for i, (lineno, parts) in enumerate(rows):
        delays[i] = _parse_float(path, lineno, "delay_s", parts[0])
        pops[i] = _parse_float(path, lineno, "population", parts[1])
        shots[i] = _parse_int(path, lineno, "shots", parts[2])
    return DecayCurve(delays, pops, shots, meta=comments.get("meta", {}))


def write_spectrum(
    path: str | Path,
    spectrum: PowerSpectrum,
    extra: dict | None = None,
    force: bool = False,
) -> None:
    meta = dict(extra or {})
    if spectrum.meta:
        meta.setdefault("meta", spectrum.meta)
    rows = ((_fmt(f), _fmt(s)) for f, s in zip(spectrum.frequencies, spectrum.psd))
    _write_csv(path, "spectrum", rows, meta, force)


def read_spectrum(path: str | Path) -> PowerSpectrum:
    rows, comments = _read_csv(path, "spectrum")
    if not rows:
        raise FileFormatError(f"{path}: no data rows")
    freqs = np.empty(len(rows))
    psd = np.empty(len(rows))
    for i, (lineno, parts) in enumerate(rows):
        freqs[i] = _parse_float(path, lineno, "freq_hz", parts[0])
        psd[i] = _parse_float(path, lineno, "psd", parts[1])
    return PowerSpectrum(freqs, psd, meta=comments.get("meta", {}))


def write_allan(
    path: str | Path,
    allan: AllanCurve,
    extra: dict | None = None,
    force: bool = False,
) -> None:
    meta = dict(extra or {})
    if allan.meta:
        meta.setdefault("meta", allan.meta)
    if allan.counts is None:
        meta.setdefault("analytic", "true")
        counts = np.zeros(len(allan), dtype=np.int64)
    else:
        counts = allan.counts
    rows = (
        (_fmt(t), _fmt(a), str(int(c)))
        for t, a, c in zip(allan.taus, allan.adev, counts)
    )
    _write_csv(path, "allan", rows, meta, force)


def read_allan(path: str | Path) -> AllanCurve:
    rows, comments = _read_csv(path, "allan")
    if not rows:
        raise FileFormatError(f"{path}: no data rows")
    taus = np.empty(len(rows))
    adev = np.empty(len(rows))
    counts = np.empty(len(rows), dtype=np.int64)
    for i, (lineno, parts) in enumerate(rows):
        taus[i] = _parse_float(path, lineno, "tau_s", parts[0])
        adev[i] = _parse_float(path, lineno, "adev", parts[1])
        counts[i] = _parse_int(path, lineno, "count", parts[2])
    analytic = comments.get("analytic") == "true"
    return AllanCurve(
        taus,
        adev,
        counts=None if analytic else counts,
        meta=comments.get("meta", {}),
    )


def write_gamma_table(
    path: str | Path,
    points: Sequence[SpinLockPoint],
    extra: dict | None = None,
    force: bool = False,
) -> None:
    rows = (
        (_fmt(p.rabi_frequency), _fmt(p.gamma), _fmt(p.gamma_err)) for p in points
    )
    _write_csv(path, "gamma", rows, dict(extra or {}), force)


def read_gamma_table(path: str | Path) -> list[SpinLockPoint]:
    rows, _ = _read_csv(path, "gamma")
    if not rows:
        raise FileFormatError(f"{path}: no data rows")
    points = []
    for lineno, parts in rows:
        points.append(
            SpinLockPoint(
                rabi_frequency=_parse_float(path, lineno, "rabi_hz", parts[0]),
                gamma=_parse_float(path, lineno, "gamma_per_s", parts[1]),
                gamma_err=_parse_float(path, lineno, "gamma_err", parts[2]),
            )
        )
    return points


# ---------------------------------------------------------------------------
# JSON documents (configs and fit reports)


def write_json(path: str | Path, document: dict, force: bool = False) -> None:
    text = json.dumps(
        document, indent=2, sort_keys=True, allow_nan=False, default=_json_default
    )
    atomic_write_text(path, text + "\n", force=force)


def read_json(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IOFailureError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FileFormatError(f"{path}: top level must be a JSON object")
    return doc


def _component_to_dict(comp: NoiseComponent) -> dict:
    if isinstance(comp, White):
        return {"type": "white", "level": comp.level}
    if isinstance(comp, OneOverF):
        return {"type": "one_over_f", "amplitude": comp.amplitude,
                "exponent": comp.exponent}
    if isinstance(comp, Lorentzian):
        return {"type": "lorentzian", "total_power": comp.total_power,
                "corner_hz": comp.corner_frequency}
    if isinstance(comp, Drift):
        return {"type": "drift", "rate": comp.rate}
    raise InvalidInputError(f"cannot serialize component {comp!r}")


def component_from_dict(d: dict) -> NoiseComponent:
    kind = d.get("type")
    if kind == "white":
        _require_keys(d, {"type", "level"}, set(), "white component")
        return White(d["level"])
    if kind == "one_over_f":
        _require_keys(d, {"type", "amplitude"}, {"exponent"}, "one_over_f component")
        return OneOverF(d["amplitude"], d.get("exponent", 1.0))
    if kind == "lorentzian":
        _require_keys(d, {"type", "total_power", "corner_hz"}, set(),
                      "lorentzian component")
        return Lorentzian(d["total_power"], d["corner_hz"])
    if kind == "drift":
        _require_keys(d, {"type", "rate"}, set(), "drift component")
        return Drift(d["rate"])
    raise FileFormatError(f"unknown noise component type {kind!r}")


def fit_report_to_dict(report) -> dict:
    """JSON form of a FitReport (schema_version included)."""
    return {
        "schema_version": SCHEMA_VERSION,
        "classification": report.classification,
        "components": [_component_to_dict(c) for c in report.model.components],
        "component_errors": [dict(e) for e in report.component_errors],
        "residual_psd": report.residual_psd,
        "residual_allan": report.residual_allan,
        "n_lorentzians_considered": report.n_lorentzians_considered,
        "drift_rate": report.drift_rate,
        "drift_rate_err": report.drift_rate_err,
        "low_confidence": report.low_confidence,
        "annotations": list(report.annotations),
        "band_hz": list(report.band) if report.band else None,
        "shares": dict(report.shares),
    }


def _require_keys(d: dict, required: set, optional: set, what: str) -> None:
    keys = set(d)
    missing = required - keys
    if missing:
        raise FileFormatError(f"{what}: missing keys {sorted(missing)}")
    unknown = keys - required - optional
    if unknown:
        raise FileFormatError(f"{what}: unknown keys {sorted(unknown)}")


_GEN_REQUIRED = {"base", "unit", "n", "dt"}
_GEN_OPTIONAL = {
    "white_level",
    "one_over_f_amplitude",
    "drift_rate",
    "lorentzians",
    "telegraphs",
}
_PROTO_REQUIRED = {"f01", "t1", "t2", "rabi_hz", "delays_s", "shots"}
_PROTO_OPTIONAL = {"white_level", "one_over_f_amplitude"}
_EST_OPTIONAL = {"window", "overlap_fraction", "segment_length", "allan_mode", "taus"}
_FIT_OPTIONAL = {"max_lorentzians"}


@dataclass(frozen=True)
class RunConfig:
    """Validated pipeline configuration.

    Wraps the JSON config dict after strict validation: unknown keys are
    rejected at every level and all parameters are checked against the
    preconditions of the modules that will consume them (generator specs
    are constructed, grids are built) at load time.
    """

    scenario: str
    kind: str
    seed: int
    config: dict
    out_dir: str | None = None

    @staticmethod
    def from_dict(doc: dict) -> "RunConfig":
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionError(
                f"config schema_version {version!r} not supported "
                f"(expected {SCHEMA_VERSION})"
            )
        _require_keys(
            doc,
            {"schema_version", "kind", "seed"},
            {"scenario", "out_dir", "generator", "protocol", "estimator", "fit"},
            "config",
        )
        kind = doc["kind"]
        seed = doc["seed"]
        if int(seed) != seed:
            raise InvalidInputError(f"seed must be an integer, got {seed!r}")
        if kind == "timeseries":
            if "generator" not in doc:
                raise FileFormatError("timeseries config requires a 'generator' section")
            gen = doc["generator"]
            _require_keys(gen, _GEN_REQUIRED, _GEN_OPTIONAL, "generator")
            for lor in gen.get("lorentzians", []):
                _require_keys(lor, {"total_power", "corner_hz"}, set(), "lorentzian")
            for tg in gen.get("telegraphs", []):
                _require_keys(
                    tg,
                    {"rate_up", "rate_down", "low_value", "high_value"},
                    {"initial_state"},
                    "telegraph",
                )
            # construct everything once so bad parameters fail at load time
            Unit(gen["unit"])
            build_noise_model(gen)
            build_telegraphs(gen)
            n, dt = gen["n"], gen["dt"]
            if int(n) != n or n < 2:
                raise InvalidInputError(f"generator n must be an integer >= 2, got {n}")
            if not (dt > 0):
                raise InvalidInputError(f"generator dt must be > 0, got {dt}")
        elif kind == "spinlock":
            if "protocol" not in doc:
                raise FileFormatError("spinlock config requires a 'protocol' section")
            proto = doc["protocol"]
            _require_keys(proto, _PROTO_REQUIRED, _PROTO_OPTIONAL, "protocol")
            QubitSpec(f01=proto["f01"], T1=proto["t1"], T2=proto["t2"])
            rabi = rabi_grid(proto["rabi_hz"])
            if rabi.size == 0 or rabi.min() < 1e3 or rabi.max() > 1e7:
                raise InvalidInputError(
                    "rabi_hz grid must be non-empty within [1e3, 1e7] Hz"
                )
            delays = delay_grid(proto["delays_s"])
            if delays.size < 2 or delays[0] < 0 or np.any(np.diff(delays) <= 0):
                raise InvalidInputError(
                    "delays_s must yield >= 2 non-negative increasing delays"
                )
            shots = proto["shots"]
            if int(shots) != shots or shots < 0:
                raise InvalidInputError(
                    f"shots must be a non-negative integer, got {shots}"
                )
        else:
            raise FileFormatError(
                f"unknown config kind {kind!r}; expected 'timeseries' or 'spinlock'"
            )
        est = doc.get("estimator", {})
        _require_keys(est, set(), _EST_OPTIONAL, "estimator")
        fit = doc.get("fit", {})
        _require_keys(fit, set(), _FIT_OPTIONAL, "fit")
        return RunConfig(
            scenario=doc.get("scenario", "custom"),
            kind=kind,
            seed=int(seed),
            config=doc,
            out_dir=doc.get("out_dir"),
        )

    @staticmethod
    def load(path: str | Path) -> "RunConfig":
        return RunConfig.from_dict(read_json(path))

    def with_overrides(
        self, seed: int | None = None, out_dir: str | None = None
    ) -> "RunConfig":
        doc = dict(self.config)
        if seed is not None:
            doc["seed"] = int(seed)
        if out_dir is not None:
            doc["out_dir"] = str(out_dir)
        return RunConfig.from_dict(doc)

    @property
    def hash(self) -> str:
        return config_hash(self.config)

    def stamp(self) -> dict:
        """Comment-header fields embedded in every output file."""
        return {"config_sha256": self.hash, "seed": self.seed}
