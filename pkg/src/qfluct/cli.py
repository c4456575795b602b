"""Command-line pipeline: simulate, analyze, fit, spinlock, report.

Every command validates its inputs up front, writes outputs atomically,
and stamps each output file with the config hash and master seed so any
result can be traced back to the exact run that produced it. Failures
exit non-zero with a single ``E_CODE: detail`` line on stderr (exit
codes: 2 invalid input, 3 numerical failure, 4 I/O failure).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, QfluctError
from .fitting import (
    drift_is_significant,
    finalize_report,
    fit_noise_model,
    fit_spinlock_spectrum,
    prepare_record,
)
from .io import (
    SCHEMA_VERSION,
    RunConfig,
    atomic_write_text,
    component_from_dict,
    fit_report_to_dict,
    read_allan,
    read_gamma_table,
    read_json,
    read_spectrum,
    read_stamp,
    read_timeseries,
    write_decay_curve,
    write_gamma_table,
    write_json,
    write_spectrum,
    write_allan,
    write_timeseries,
)
from .models import NoiseModel, model_allan, model_psd
from .protocols import SpinLockPoint, fit_exponential, invert_spinlock
from .scenarios import (
    realize_spinlock,
    realize_timeseries,
    scenario_config,
    scenario_names,
)

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    """argparse with the toolkit's machine-parsable error convention."""

    def error(self, message: str) -> None:  # noqa: A003 - argparse API
        self.exit(2, f"E_INVALID_INPUT: {message}\n")


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _out_dir(args, default: str | None = None) -> Path:
    out = args.out if args.out is not None else default
    if out is None:
        raise InvalidInputError("no output directory: pass --out DIR")
    return Path(out)


def _resolved_config(args) -> RunConfig:
    if args.scenario is not None and args.config is not None:
        raise InvalidInputError("pass either --scenario or --config, not both")
    if args.scenario is not None:
        rc = RunConfig.from_dict(scenario_config(args.scenario))
    elif args.config is not None:
        rc = RunConfig.load(args.config)
    else:
        raise InvalidInputError(
            f"pass --scenario NAME or --config PATH "
            f"(scenarios: {', '.join(scenario_names())})"
        )
    if args.seed is not None:
        rc = rc.with_overrides(seed=args.seed)
    return rc


def _portable_config(rc: RunConfig) -> dict:
    # out_dir is location-specific and excluded from the hash; keep it
    # out of the persisted config so reruns elsewhere are byte-identical
    return {k: v for k, v in rc.config.items() if k != "out_dir"}


def _write_spinlock_raw(rc: RunConfig, out: Path, args):
    stamp = rc.stamp()
    qubit, rabi, delays, curves, noise = realize_spinlock(
        rc.config, seed=rc.seed, workers=args.workers
    )
    for i, curve in enumerate(curves):
        write_decay_curve(out / f"decay_{i:03d}.csv", curve, extra=stamp,
                          force=args.force)
    return qubit, rabi, curves


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args) -> int:
    rc = _resolved_config(args)
    out = _out_dir(args, rc.out_dir)
    write_json(out / "config.json", _portable_config(rc), force=args.force)
    if rc.kind == "timeseries":
        series = realize_timeseries(rc.config, seed=rc.seed)
        write_timeseries(out / "timeseries.csv", series, extra=rc.stamp(),
                         force=args.force)
        _say(args, f"wrote {out / 'timeseries.csv'} ({len(series)} samples)")
    else:
        _, _, curves = _write_spinlock_raw(rc, out, args)
        _say(args, f"wrote {len(curves)} decay curves to {out}")
    _say(args, f"config sha256: {rc.hash}")
    return 0


def _estimator_settings(args) -> dict:
    est: dict = {}
    if args.config is not None:
        est = dict(RunConfig.load(args.config).config.get("estimator", {}))
    if args.window is not None:
        est["window"] = args.window
    if args.segment_length is not None:
        est["segment_length"] = args.segment_length
    if args.overlap is not None:
        est["overlap_fraction"] = args.overlap
    if args.allan_mode is not None:
        est["allan_mode"] = args.allan_mode
    # the CLI spells the mode with a hyphen; the estimator API uses an
    # underscore
    mode = str(est.get("allan_mode", "overlapping")).replace("-", "_")
    return {
        "taus": est.get("taus"),
        "segment_length": est.get("segment_length"),
        "window": est.get("window", "hann"),
        "overlap_fraction": est.get("overlap_fraction", 0.5),
        "allan_mode": mode,
    }


def cmd_analyze(args) -> int:
    series = read_timeseries(args.input)
    stamp = read_stamp(args.input)
    out = _out_dir(args)
    prepared = prepare_record(series, **_estimator_settings(args))
    write_spectrum(out / "spectrum.csv", prepared.spectrum, extra=stamp,
                   force=args.force)
    write_allan(out / "allan.csv", prepared.allan, extra=stamp, force=args.force)
    info = {
        "schema_version": SCHEMA_VERSION,
        "n": len(series),
        "dt_s": series.dt,
        "duration_s": series.duration,
        "unit": series.unit.value,
        "drift": prepared.drift,
        "drift_significant": drift_is_significant(prepared.drift),
        "telegraph": prepared.telegraph,
    }
    info.update(stamp)
    write_json(out / "timeinfo.json", info, force=args.force)
    _say(args, f"wrote spectrum.csv, allan.csv, timeinfo.json to {out}")
    tg = prepared.telegraph
    if tg is not None and tg["bimodal"]:
        _say(args, f"telegraph switching detected: levels "
                   f"{tg['levels'][0]:.6g} / {tg['levels'][1]:.6g}")
    if drift_is_significant(prepared.drift):
        _say(args, f"significant drift: {prepared.drift['rate']:.6g} per second")
    return 0


def _component_line(comp_dict: dict, err: dict) -> str:
    kind = comp_dict["type"]
    parts = []
    for key, val in comp_dict.items():
        if key == "type":
            continue
        text = f"{key}={val:.6g}"
        if key in err:
            text += f" +/- {err[key]:.3g}"
        parts.append(text)
    return f"{kind}: " + ", ".join(parts)


def cmd_fit(args) -> int:
    spectrum = read_spectrum(args.psd)
    stamp = read_stamp(args.psd)
    allan = read_allan(args.allan) if args.allan is not None else None
    max_lor = args.max_lorentzians
    if max_lor is None and args.config is not None:
        max_lor = RunConfig.load(args.config).config.get("fit", {}).get(
            "max_lorentzians"
        )
    if max_lor is None:
        max_lor = 3
    report = fit_noise_model(spectrum, allan, max_lorentzians=max_lor)
    if args.timeinfo is not None:
        info = read_json(args.timeinfo)
        report = finalize_report(
            report,
            drift=info.get("drift"),
            telegraph=info.get("telegraph"),
            duration=info.get("duration_s"),
        )
    doc = fit_report_to_dict(report)
    doc.update(stamp)
    out = _out_dir(args)
    write_json(out / "fit_report.json", doc, force=args.force)
    _say(args, f"classification: {report.classification}")
    for comp, err in zip(doc["components"], doc["component_errors"]):
        _say(args, "  " + _component_line(comp, err))
    if report.low_confidence:
        _say(args, "  (low confidence: no model fit the spectrum well)")
    _say(args, f"wrote {out / 'fit_report.json'}")
    return 0


def cmd_spinlock(args) -> int:
    table_mode = args.gamma_table is not None
    config_mode = args.scenario is not None or args.config is not None
    if table_mode and config_mode:
        raise InvalidInputError(
            "pass either --gamma-table or a --scenario/--config, not both"
        )
    if table_mode:
        if args.t1 is None:
            raise InvalidInputError("--gamma-table requires --t1 SECONDS")
        if not (args.t1 > 0):
            raise InvalidInputError(f"--t1 must be > 0, got {args.t1}")
        points = read_gamma_table(args.gamma_table)
        stamp = read_stamp(args.gamma_table)
        t1 = args.t1
        out = _out_dir(args)
    else:
        rc = _resolved_config(args)
        if rc.kind != "spinlock":
            raise InvalidInputError(
                f"spinlock needs a spinlock config, got kind={rc.kind!r}"
            )
        out = _out_dir(args, rc.out_dir)
        stamp = rc.stamp()
        write_json(out / "config.json", _portable_config(rc), force=args.force)
        qubit, rabi, curves = _write_spinlock_raw(rc, out, args)
        t1 = qubit.T1
        points = []
        for f_r, curve in zip(rabi, curves):
            res = fit_exponential(curve)
            t1_fit = res["T1"]
            points.append(
                SpinLockPoint(
                    rabi_frequency=float(f_r),
                    gamma=1.0 / t1_fit,
                    gamma_err=res["stderr"]["T1"] / (t1_fit * t1_fit),
                )
            )
        write_gamma_table(out / "gamma.csv", points, extra=stamp, force=args.force)
    spectrum = invert_spinlock(points, t1)
    write_spectrum(out / "spinlock_spectrum.csv", spectrum, extra=stamp,
                   force=args.force)
    report = fit_spinlock_spectrum(spectrum)
    doc = fit_report_to_dict(report)
    doc.update(stamp)
    write_json(out / "spinlock_fit.json", doc, force=args.force)
    _say(args, f"noise at the locking band: {report.classification}")
    for comp, err in zip(doc["components"], doc["component_errors"]):
        _say(args, "  " + _component_line(comp, err))
    _say(args, f"wrote gamma/spectrum/fit files to {out}")
    return 0


# ---------------------------------------------------------------------------
# report: plots plus the exact CSV behind each plot


def _write_plot_csv(path: Path, columns: dict, stamp: dict, force: bool) -> None:
    lines = [f"# qfluct-format: plot/v{SCHEMA_VERSION}"]
    for key in sorted(stamp):
        lines.append(f"# {key}: {stamp[key]}")
    names = list(columns)
    lines.append(",".join(names))
    arrays = [np.asarray(columns[name], dtype=np.float64) for name in names]
    for row in zip(*arrays):
        lines.append(",".join(repr(float(v)) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n", force=force)


def _save_fig(fig, path: Path, force: bool) -> None:
    import io as _io

    buf = _io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    atomic_write_text(path, buf.getvalue().decode("utf-8"), force=force)


def _report_model(fit_doc: dict) -> NoiseModel:
    return NoiseModel(tuple(component_from_dict(c) for c in fit_doc["components"]))


def _fmt_g(x) -> str:
    return f"{float(x):.6g}"


def cmd_report(args) -> int:
    run = Path(args.run)
    if not run.is_dir():
        raise InvalidInputError(f"run directory not found: {run}")
    out = _out_dir(args, str(run))

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "qfluct"

    lines: list[str] = ["qfluct run report", "=================", ""]
    stamp: dict = {}
    plots: list[str] = []

    config_path = run / "config.json"
    if config_path.exists():
        rc = RunConfig.load(config_path)
        stamp = rc.stamp()
        lines += [
            "[run]",
            f"scenario: {rc.scenario}",
            f"kind: {rc.kind}",
            f"seed: {rc.seed}",
            f"config sha256: {rc.hash}",
            "",
        ]

    ts_path = run / "timeseries.csv"
    if ts_path.exists():
        series = read_timeseries(ts_path)
        stamp = stamp or read_stamp(ts_path)
        lines += [
            "[time series]",
            f"samples: {len(series)}",
            f"dt: {_fmt_g(series.dt)} s",
            f"duration: {_fmt_g(series.duration)} s",
            f"unit: {series.unit.value}",
            "",
        ]
        fig, ax = plt.subplots(figsize=(7.0, 3.2))
        ax.plot(series.times, series.values, lw=0.7, color="#1f6f8b")
        ax.set_xlabel("time (s)")
        ax.set_ylabel(f"value ({series.unit.value})")
        ax.set_title("fluctuation record")
        fig.tight_layout()
        _save_fig(fig, out / "plot_timeseries.svg", args.force)
        plt.close(fig)
        _write_plot_csv(
            out / "plot_timeseries.csv",
            {"time_s": series.times, "value": series.values},
            stamp, args.force,
        )
        plots.append("plot_timeseries")

    info = None
    info_path = run / "timeinfo.json"
    if info_path.exists():
        info = read_json(info_path)
        drift = info.get("drift") or {}
        lines += [
            "[drift]",
            f"rate: {_fmt_g(drift.get('rate', 0.0))} per second "
            f"(stderr {_fmt_g(drift.get('stderr', 0.0))})",
            f"significant: {'yes' if info.get('drift_significant') else 'no'}",
            "",
        ]
        tg = info.get("telegraph")
        if tg is not None:
            lines.append("[telegraph]")
            if tg.get("bimodal"):
                lines += [
                    "bimodal: yes",
                    f"levels: {_fmt_g(tg['levels'][0])}, {_fmt_g(tg['levels'][1])}",
                    f"occupancy (high state): {_fmt_g(tg['occupancy'])}",
                ]
                corner = tg.get("estimated_corner")
                if corner is not None:
                    lines.append(f"estimated corner: {_fmt_g(corner)} Hz")
            else:
                lines.append("bimodal: no")
            lines.append("")

    fit_doc = None
    fit_path = run / "fit_report.json"
    if fit_path.exists():
        fit_doc = read_json(fit_path)
        lines.append("[noise model]")
        lines.append(f"classification: {fit_doc['classification']}")
        for comp, err in zip(fit_doc["components"], fit_doc["component_errors"]):
            lines.append("  " + _component_line(comp, err))
        if not fit_doc["components"]:
            lines.append("  (no components)")
        band = fit_doc.get("band_hz")
        if band:
            lines.append(
                f"band: [{_fmt_g(band[0])}, {_fmt_g(band[1])}] Hz"
            )
        shares = fit_doc.get("shares") or {}
        if shares:
            lines.append(
                "band-power shares: "
                + ", ".join(f"{k}={_fmt_g(v)}" for k, v in sorted(shares.items()))
            )
        lines.append(f"residual (ln PSD rms): {_fmt_g(fit_doc['residual_psd'])}")
        if fit_doc.get("residual_allan") is not None:
            lines.append(
                f"residual (ln Allan rms): {_fmt_g(fit_doc['residual_allan'])}"
            )
        if fit_doc.get("low_confidence"):
            lines.append("low confidence: yes")
        for note in fit_doc.get("annotations", []):
            lines.append(f"note: {note}")
        lines.append("")

    spec_path = run / "spectrum.csv"
    if spec_path.exists():
        spectrum = read_spectrum(spec_path)
        cols = {"freq_hz": spectrum.frequencies, "psd": spectrum.psd}
        fig, ax = plt.subplots(figsize=(5.2, 4.0))
        ax.loglog(spectrum.frequencies, spectrum.psd, ".", ms=3,
                  color="#444444", label="Welch estimate")
        if fit_doc is not None and fit_doc["components"]:
            model = _report_model(fit_doc)
            fitted = model_psd(model, spectrum.frequencies)
            cols["model_psd"] = fitted.psd
            ax.loglog(fitted.frequencies, fitted.psd, color="#c1403d",
                      label="fitted model")
        ax.set_xlabel("frequency (Hz)")
        ax.set_ylabel("PSD")
        ax.set_title("power spectral density")
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        _save_fig(fig, out / "plot_spectrum.svg", args.force)
        plt.close(fig)
        _write_plot_csv(out / "plot_spectrum.csv", cols, stamp, args.force)
        plots.append("plot_spectrum")

    allan_path = run / "allan.csv"
    if allan_path.exists():
        allan = read_allan(allan_path)
        cols = {"tau_s": allan.taus, "adev": allan.adev}
        fig, ax = plt.subplots(figsize=(5.2, 4.0))
        ax.loglog(allan.taus, allan.adev, "o", ms=3.5, color="#444444",
                  label="overlapping estimate")
        if fit_doc is not None and fit_doc["components"]:
            model = _report_model(fit_doc)
            fitted = model_allan(model, allan.taus)
            cols["model_adev"] = fitted.adev
            ax.loglog(fitted.taus, fitted.adev, color="#c1403d",
                      label="fitted model")
        ax.set_xlabel("averaging time tau (s)")
        ax.set_ylabel("Allan deviation")
        ax.set_title("Allan deviation")
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        _save_fig(fig, out / "plot_allan.svg", args.force)
        plt.close(fig)
        _write_plot_csv(out / "plot_allan.csv", cols, stamp, args.force)
        plots.append("plot_allan")

    gamma_path = run / "gamma.csv"
    sl_fit_doc = None
    if (run / "spinlock_fit.json").exists():
        sl_fit_doc = read_json(run / "spinlock_fit.json")
        lines.append("[spin locking]")
        lines.append(f"classification: {sl_fit_doc['classification']}")
        for comp, err in zip(sl_fit_doc["components"],
                             sl_fit_doc["component_errors"]):
            lines.append("  " + _component_line(comp, err))
        for note in sl_fit_doc.get("annotations", []):
            lines.append(f"note: {note}")
        lines.append("")
    if gamma_path.exists():
        points = read_gamma_table(gamma_path)
        stamp = stamp or read_stamp(gamma_path)
        rabi = np.array([p.rabi_frequency for p in points])
        gam = np.array([p.gamma for p in points])
        gerr = np.array([p.gamma_err for p in points])
        cols = {"rabi_hz": rabi, "gamma_per_s": gam, "gamma_err": gerr}
        fig, ax = plt.subplots(figsize=(5.2, 4.0))
        ax.errorbar(rabi, gam, yerr=gerr, fmt="o", ms=3.5, color="#444444",
                    lw=0.8, label="fitted decay rates")
        sl_spec_path = run / "spinlock_spectrum.csv"
        if sl_fit_doc is not None and sl_spec_path.exists():
            sl_spec = read_spectrum(sl_spec_path)
            t1_s = sl_spec.meta.get("t1_seconds")
            if t1_s:
                model = _report_model(sl_fit_doc)
                cols["model_gamma"] = 1.0 / (2.0 * float(t1_s)) + model.psd(rabi)
                ax.plot(rabi, cols["model_gamma"], color="#c1403d",
                        label="1/(2 T1) + fitted S")
        ax.set_xscale("log")
        ax.set_xlabel("locking (Rabi) frequency (Hz)")
        ax.set_ylabel("decay rate Gamma (1/s)")
        ax.set_title("spin-locking decay rates")
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        _save_fig(fig, out / "plot_gamma.svg", args.force)
        plt.close(fig)
        _write_plot_csv(out / "plot_gamma.csv", cols, stamp, args.force)
        plots.append("plot_gamma")

    sl_spec_path = run / "spinlock_spectrum.csv"
    if sl_spec_path.exists():
        sl_spec = read_spectrum(sl_spec_path)
        stamp = stamp or read_stamp(sl_spec_path)
        cols = {"freq_hz": sl_spec.frequencies, "psd": sl_spec.psd}
        stderr = sl_spec.meta.get("stderr")
        fig, ax = plt.subplots(figsize=(5.2, 4.0))
        if stderr is not None:
            ax.errorbar(sl_spec.frequencies, sl_spec.psd, yerr=stderr, fmt="o",
                        ms=3.5, lw=0.8, color="#444444", label="extracted S")
            cols["stderr"] = np.asarray(stderr, dtype=np.float64)
        else:
            ax.plot(sl_spec.frequencies, sl_spec.psd, "o", ms=3.5,
                    color="#444444", label="extracted S")
        if sl_fit_doc is not None and sl_fit_doc["components"]:
            model = _report_model(sl_fit_doc)
            fitted = model_psd(model, sl_spec.frequencies)
            cols["model_psd"] = fitted.psd
            ax.plot(fitted.frequencies, fitted.psd, color="#c1403d",
                    label="white + 1/f fit")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("frequency (Hz)")
        ax.set_ylabel("S (1/s)")
        ax.set_title("noise spectrum from spin locking")
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        _save_fig(fig, out / "plot_spinlock_spectrum.svg", args.force)
        plt.close(fig)
        _write_plot_csv(out / "plot_spinlock_spectrum.csv", cols, stamp,
                        args.force)
        plots.append("plot_spinlock_spectrum")

    if plots:
        lines.append("[plots]")
        for name in plots:
            lines.append(f"{name}.svg (data: {name}.csv)")
        lines.append("")
    if len(lines) <= 4:
        raise InvalidInputError(
            f"nothing to report: no recognized output files in {run}"
        )
    atomic_write_text(out / "report.txt", "\n".join(lines), force=args.force)
    _say(args, f"wrote report.txt and {len(plots)} plots to {out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="qfluct",
        description=(
            "Simulate and analyze parameter-fluctuation records of "
            "superconducting qubits: telegraph/1/f noise generation, "
            "Allan + Welch estimation, noise-model decomposition, and "
            "spin-locking noise spectroscopy."
        ),
    )
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="run configuration (JSON)")
    common.add_argument("--seed", type=int, metavar="N",
                        help="override the master seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--force", action="store_true",
                        help="overwrite existing output files")
    common.add_argument("--quiet", action="store_true",
                        help="suppress progress output")

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p_sim = sub.add_parser(
        "simulate", parents=[common],
        help="generate a synthetic record or spin-locking sweep",
    )
    p_sim.add_argument("--scenario", metavar="NAME", choices=scenario_names(),
                       help=f"built-in scenario ({', '.join(scenario_names())})")
    p_sim.add_argument("--workers", type=int, default=1, metavar="N",
                       help="parallel workers for sweeps (does not affect output)")
    p_sim.set_defaults(func=cmd_simulate)

    p_an = sub.add_parser(
        "analyze", parents=[common],
        help="estimate PSD, Allan deviation, drift, and telegraph evidence",
    )
    p_an.add_argument("--input", required=True, metavar="CSV",
                      help="time-series CSV to analyze")
    p_an.add_argument("--window", choices=["hann", "rectangular"],
                      help="Welch window (default hann)")
    p_an.add_argument("--segment-length", type=int, metavar="N",
                      help="Welch segment length (default: auto)")
    p_an.add_argument("--overlap", type=float, metavar="F",
                      help="Welch overlap fraction in [0, 0.9] (default 0.5)")
    p_an.add_argument("--allan-mode", choices=["overlapping", "non-overlapping"],
                      help="Allan estimator (default overlapping)")
    p_an.set_defaults(func=cmd_analyze)

    p_fit = sub.add_parser(
        "fit", parents=[common],
        help="decompose an estimated spectrum into noise components",
    )
    p_fit.add_argument("--psd", required=True, metavar="CSV",
                       help="spectrum CSV from 'analyze'")
    p_fit.add_argument("--allan", metavar="CSV",
                       help="Allan CSV to fit jointly (recommended)")
    p_fit.add_argument("--timeinfo", metavar="JSON",
                       help="timeinfo JSON from 'analyze' (drift + telegraph)")
    p_fit.add_argument("--max-lorentzians", type=int, metavar="N",
                       help="largest number of switchers to consider (default 3)")
    p_fit.set_defaults(func=cmd_fit)

    p_sl = sub.add_parser(
        "spinlock", parents=[common],
        help="run or invert a spin-locking noise-spectroscopy sweep",
    )
    p_sl.add_argument("--scenario", metavar="NAME", choices=scenario_names(),
                      help="built-in spin-locking scenario")
    p_sl.add_argument("--gamma-table", metavar="CSV",
                      help="existing decay-rate table (skips simulation)")
    p_sl.add_argument("--t1", type=float, metavar="SECONDS",
                      help="relaxation time for the 1/(2 T1) floor "
                           "(required with --gamma-table)")
    p_sl.add_argument("--workers", type=int, default=1, metavar="N",
                      help="parallel workers for the sweep (does not affect output)")
    p_sl.set_defaults(func=cmd_spinlock)

    p_rep = sub.add_parser(
        "report", parents=[common],
        help="summarize a run directory into report.txt plus SVG/CSV plots",
    )
    p_rep.add_argument("--run", required=True, metavar="DIR",
                       help="directory holding outputs of previous commands")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except QfluctError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # last-resort guard: never a traceback on stderr
        print(f"E_INTERNAL: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
