"""Command-line entry point: run scenarios, parameter sweeps and curve fits
from JSON configs, writing deterministic CSV/JSON artifacts.

Exit codes: 0 success, 2 invalid configuration or input data, 3 I/O failure.
All CSV/JSON outputs are byte-identical across reruns with the same config
and seed; wall-clock timestamps appear only in run.log.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import g2_indist_double_pulse, peak_areas
from .config import SCHEMA_VERSION, ConfigError, ScenarioConfig, load_config
from .fitting import SingularModelError, fit_exponential_decay, fit_hom_dip, fit_michelson
from .model import HBAR_UEV_NS
from .montecarlo import (
    CHUNK_PULSES,
    MODE_CROSS_POLARIZED,
    MODE_DOUBLE_PULSE,
    RNG_ALGORITHM,
    RngSpec,
    analytic_g2_indist,
    analytic_visibility,
    simulate_histogram,
)

__all__ = ["main", "cmd_simulate", "cmd_sweep", "cmd_fit"]

SWEEP_AXES = ("delta_t", "detuning", "sigma_g", "temperature-proxy")


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


class _RunLog:
    """Stage log with wall-clock timestamps (the one output where
    timestamps are allowed)."""

    def __init__(self):
        self.lines = []
        self.t0 = time.time()

    def stage(self, name, **info):
        extra = " ".join(f"{k}={v}" for k, v in info.items())
        self.lines.append(
            f"{time.strftime('%Y-%m-%dT%H:%M:%S')} +{time.time() - self.t0:8.3f}s {name} {extra}".rstrip())

    def text(self):
        return "\n".join(self.lines) + "\n"


def _measure_histogram(cfg: ScenarioConfig, rng: RngSpec):
    """Simulate and extract the peak-area figures for the configured mode."""
    hist = simulate_histogram(cfg.scenario, rng, bin_width=cfg.bin_width,
                              window_periods=cfg.window_periods, n_jobs=cfg.n_jobs)
    if cfg.scenario.mode in (MODE_DOUBLE_PULSE, MODE_CROSS_POLARIZED):
        report = g2_indist_double_pulse(hist, cfg.scenario.intra_delay,
                                        cfg.analysis_window_halfwidth)
    else:
        report = peak_areas(hist, cfg.analysis_window_halfwidth, cfg.n_side_peaks,
                            first_side_peak=cfg.first_side_peak())
    return hist, report


def _write_text(path: Path, text: str):
    path.write_text(text, encoding="utf-8", newline="\n")


def _histogram_csv(hist) -> str:
    edges = hist.bin_edges()
    lines = ["bin_start_ns,bin_end_ns,counts"]
    for lo, hi, c in zip(edges[:-1], edges[1:], hist.counts):
        lines.append(f"{_fmt(float(lo))},{_fmt(float(hi))},{int(c)}")
    return "\n".join(lines) + "\n"


def cmd_simulate(config_path, out_dir, seed=None) -> int:
    """Run the configured scenario, writing histogram.csv, summary.json and
    run.log into out_dir."""
    log = _RunLog()
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rng = cfg.rng if seed is None else dataclasses.replace(cfg.rng, seed=seed)
    if seed is not None:
        cfg = dataclasses.replace(cfg, rng=rng)

    log.stage("config-loaded", mode=cfg.scenario.mode, n_pulses=cfg.scenario.n_pulses)
    hist, report = _measure_histogram(cfg, rng)
    log.stage("simulated", pairs=hist.total_events)
    g2_mc = report.g2_indist
    g2_ref = analytic_g2_indist(cfg.scenario)
    vis_ref = analytic_visibility(cfg.scenario)
    vis_mc = 1.0 - 2.0 * g2_mc
    summary = {
        "schema_version": SCHEMA_VERSION,
        "effective_config": cfg.effective_dict(),
        "provenance": {
            "package": "homsim",
            "version": __version__,
            "rng_algorithm": RNG_ALGORITHM,
            "seed": rng.seed,
            "stream_id": rng.stream_id,
            "chunk_pulses": CHUNK_PULSES,
            "energy_conversion_uev_per_rad_per_ns": HBAR_UEV_NS,
        },
        "results": {
            "g2_indist": {
                "monte_carlo": g2_mc,
                "stat_error": report.g2_indist_err,
                "analytic": g2_ref,
                "discrepancy": g2_mc - g2_ref,
            },
            "visibility": {
                "monte_carlo": vis_mc,
                "stat_error": 2.0 * report.g2_indist_err,
                "analytic": vis_ref,
                "discrepancy": vis_mc - vis_ref,
            },
            "central_area": report.central_area,
            "side_average": report.side_average,
            "total_pairs": hist.total_events,
            "window_halfwidth_ns": report.window_halfwidth,
        },
    }
    log.stage("analyzed", g2=round(g2_mc, 6))
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if "histogram.csv" in cfg.outputs:
            _write_text(out / "histogram.csv", _histogram_csv(hist))
        if "summary.json" in cfg.outputs:
            _write_text(out / "summary.json", _json_text(summary))
        log.stage("written")
        if "run.log" in cfg.outputs:
            _write_text(out / "run.log", log.text())
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 3
    return 0


def _axis_scenario(cfg: ScenarioConfig, axis, value):
    s = cfg.scenario
    if axis == "delta_t":
        pair = dataclasses.replace(s.pair, delta_tau=float(value))
    elif axis == "detuning":
        pair = dataclasses.replace(s.pair, delta0=float(value))
    elif axis == "sigma_g":
        if value < 0:
            raise ConfigError(f"sigma_g sweep value must be >= 0, got {value}")
        pair = dataclasses.replace(s.pair, sigma_g=float(value))
    elif axis == "temperature-proxy":
        if cfg.temperature_slope_uev_per_k is None or cfg.temperature_ref_k is None:
            raise ConfigError(
                "temperature-proxy sweeps require sweep.temperature_slope_uev_per_K and "
                "sweep.temperature_ref_K in the config")
        delta0 = (float(value) - cfg.temperature_ref_k) * cfg.temperature_slope_uev_per_k / HBAR_UEV_NS
        pair = dataclasses.replace(s.pair, delta0=delta0)
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}; valid: {SWEEP_AXES}")
    return dataclasses.replace(s, pair=pair)


def _parse_range(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--range expects start:stop:steps, got {text!r}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        steps = int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"--range {text!r}: {exc}") from exc
    if steps < 1:
        raise ConfigError(f"--range steps must be >= 1, got {steps}")
    return start, stop, steps


def cmd_sweep(config_path, axis, sweep_range, out_dir) -> int:
    """Sweep one scenario parameter, writing sweep.csv with columns
    (axis_value, visibility, g2_indist, stat_error).

    With model_overrides.analytic_only the model prediction is evaluated
    directly (stat_error 0); otherwise each point is simulated with an
    independent RNG stream (stream_id + point index)."""
    log = _RunLog()
    try:
        cfg = load_config(config_path)
        if axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {axis!r}; valid: {SWEEP_AXES}")
        start, stop, steps = sweep_range if isinstance(sweep_range, tuple) else _parse_range(sweep_range)
        values = np.linspace(start, stop, steps)
        rows = []
        for i, v in enumerate(values):
            scn = _axis_scenario(cfg, axis, float(v))
            if cfg.analytic_only:
                vis = analytic_visibility(scn)
                g2 = 0.5 * (1.0 - vis)
                err = 0.0
            else:
                point_cfg = dataclasses.replace(cfg, scenario=scn)
                rng = dataclasses.replace(cfg.rng, stream_id=cfg.rng.stream_id + i)
                _, report = _measure_histogram(point_cfg, rng)
                g2 = report.g2_indist
                err = report.g2_indist_err
                vis = 1.0 - 2.0 * g2
            rows.append((float(v), vis, g2, err))
            log.stage("point", axis_value=float(v), g2=round(g2, 6))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    lines = ["axis_value,visibility,g2_indist,stat_error"]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_text(out / "sweep.csv", "\n".join(lines) + "\n")
        _write_text(out / "run.log", log.text())
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 3
    return 0


def _load_xy_csv(path):
    """Numeric CSV with 2 or 3 columns (x, y[, y_error]); a single header
    row is allowed. Errors carry row/column positions."""
    rows = []
    n_cols = None
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for i, rec in enumerate(csv.reader(fh), start=1):
                if not rec or all(not c.strip() for c in rec):
                    continue
                vals = []
                for j, cell in enumerate(rec, start=1):
                    cell = cell.strip()
                    try:
                        vals.append(float(cell))
                    except ValueError:
                        if i == 1:  # header row
                            vals = None
                            break
                        raise ConfigError(
                            f"{path}: row {i}, column {j}: cannot parse {cell!r} as a number") from None
                if vals is None:
                    continue
                if len(vals) not in (2, 3):
                    raise ConfigError(
                        f"{path}: row {i}: expected 2 or 3 columns, got {len(vals)}")
                if n_cols is None:
                    n_cols = len(vals)
                elif len(vals) != n_cols:
                    raise ConfigError(
                        f"{path}: row {i}: inconsistent column count ({len(vals)} vs {n_cols})")
                rows.append(vals)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"{path}: no numeric data rows found")
    arr = np.asarray(rows, dtype=float)
    weights = 1.0 / arr[:, 2] if arr.shape[1] == 3 else None
    if weights is not None and not np.all(np.isfinite(weights)):
        raise ConfigError(f"{path}: y_error column must be positive and finite")
    return arr[:, :2], weights


_FIT_MODELS = {
    "hom_dip": fit_hom_dip,
    "exp_decay": fit_exponential_decay,
    "michelson": fit_michelson,
}


def cmd_fit(data_path, model, out_path) -> int:
    """Fit the named model to a two-column CSV, writing the result JSON."""
    try:
        if model not in _FIT_MODELS:
            raise ConfigError(f"unknown fit model {model!r}; valid: {sorted(_FIT_MODELS)}")
        points, weights = _load_xy_csv(data_path)
        try:
            result = _FIT_MODELS[model](points, weights=weights)
        except (ValueError, SingularModelError) as exc:
            raise ConfigError(f"fit failed: {exc}") from exc
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    payload = {
        "model": model,
        "parameters": result.parameters,
        "standard_errors": result.standard_errors,
        "residual_norm": result.residual_norm,
        "converged": result.converged,
        "iterations": result.iterations,
        "message": result.message,
    }
    try:
        out = Path(out_path)
        if out.parent and not out.parent.exists():
            out.parent.mkdir(parents=True, exist_ok=True)
        _write_text(out, _json_text(payload))
    except OSError as exc:
        print(f"error: cannot write {out_path}: {exc}", file=sys.stderr)
        return 3
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="homsim",
        description="Two-photon interference simulator: scenarios, sweeps and fits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one scenario config")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")

    p_sweep = sub.add_parser("sweep", help="sweep one scenario parameter")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--range", required=True, dest="sweep_range",
                         help="start:stop:steps")
    p_sweep.add_argument("--out", required=True)

    p_fit = sub.add_parser("fit", help="fit a model to CSV data")
    p_fit.add_argument("--model", required=True, choices=sorted(_FIT_MODELS))
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    if args.command == "simulate":
        return cmd_simulate(args.config, args.out, seed=args.seed)
    if args.command == "sweep":
        return cmd_sweep(args.config, args.axis, args.sweep_range, args.out)
    return cmd_fit(args.data, args.model, args.out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
