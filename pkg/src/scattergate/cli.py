"""Command-line interface: budget, sweep, visibility, saturation, concurrence.

Exit codes: 0 success, 2 config error, 3 numerical failure
(non-convergence), 4 data-format error.  Reports are deterministic:
identical config and seed produce byte-identical JSON.  Floats are
serialized with 12 significant digits so golden files stay stable.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .calibration import (ConvergenceError, DataError, extract_dephasing,
                          fit_saturation, mean_photon_number)
from .config import (ConfigError, RunConfig, config_hash, config_to_text,
                     load_config, reference_config)
from .core import ParameterError
from .metrics import (MetricError, bell_fidelity, bootstrap_concurrence,
                      concurrence, conditional_fidelity_formula,
                      contrasts_from_counts, contrasts_from_state,
                      density_from_counts, photon_visibility,
                      success_probability)
from .protocol import pure_dephasing_probability, run_gate
from .scattering import QuadratureError, overlap_integrals

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_DATA = 4


def _round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def _emit(report: dict, args) -> None:
    report = _round_floats(report)
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
        return
    _print_table(report)


def _print_table(report: dict, indent: str = "") -> None:
    for key, value in report.items():
        if isinstance(value, dict):
            print(f"{indent}{key}:")
            _print_table(value, indent + "  ")
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            for row in value:
                print(f"{indent}{key}[]:")
                _print_table(row, indent + "  ")
        else:
            print(f"{indent}{key} = {value}")


def _provenance(config: RunConfig, seed: int | None) -> dict:
    return {
        "config_sha256": config_hash(config_to_text(config.raw)),
        "tool_version": __version__,
        "seed": seed,
    }


def _load(args) -> RunConfig:
    if args.config is None:
        return reference_config()
    return load_config(args.config)


def cmd_budget(args) -> int:
    config = _load(args)
    outcome = run_gate(config.emitter, config.pulse, config.channels,
                       theta_p=config.theta_p)
    exact_fidelity = bell_fidelity(outcome.rho_heralded, "phi_minus",
                                   config.theta_p)
    product = 1.0
    rows = []
    for name, value in outcome.budget:
        rows.append({"channel": name, "fidelity": value})
        product *= value
    contrasts = contrasts_from_state(outcome.rho_heralded)
    overlaps = overlap_integrals(
        config.emitter, config.pulse,
        dephasing_broadened=config.channels.enable_pure_dephasing)
    p_deph = pure_dephasing_probability(config.emitter) \
        if config.channels.enable_pure_dephasing else 0.0
    report = {
        "inputs": config.raw,
        "budget": rows,
        "conditional_fidelity": conditional_fidelity_formula(overlaps, p_deph),
        "product_fidelity": product,
        "exact_fidelity": exact_fidelity,
        "discrepancy": exact_fidelity - product,
        "success_prob_exact": outcome.success_prob,
        "success_prob_closed_form": success_probability(config.emitter,
                                                        config.pulse),
        "contrasts": {"m_x": contrasts.m_x, "m_y": contrasts.m_y,
                      "m_z": contrasts.m_z, "p_z": contrasts.p_z},
        "provenance": _provenance(config, args.seed),
    }
    _emit(report, args)
    return EXIT_OK


_PARAM_PATHS = {
    "emitter.kappa_flip": ("emitter", "kappa_flip"),
    "emitter.gamma_dephase": ("emitter", "gamma_dephase"),
    "emitter.t2_star": ("emitter", "t2_star"),
    "emitter.delta_h": ("emitter", "delta_h"),
    "pulse.n_bar": ("pulse", "n_bar"),
    "pulse.sigma_e": ("pulse", "sigma_e"),
    "pulse.detuning": ("pulse", "detuning"),
}


def _sweep_point(config: RunConfig, path: tuple[str, str], value: float) -> dict:
    holder = getattr(config, path[0])
    kwargs = {path[1]: value}
    if path == ("pulse", "sigma_o"):
        kwargs["t_pulse"] = None
    updated = dataclasses.replace(holder, **kwargs)
    emitter = updated if path[0] == "emitter" else config.emitter
    pulse = updated if path[0] == "pulse" else config.pulse
    outcome = run_gate(emitter, pulse, config.channels, theta_p=config.theta_p,
                       _with_budget=False)
    visibility = photon_visibility(emitter)
    return {
        "value": value,
        "fidelity": bell_fidelity(outcome.rho_heralded, "phi_minus",
                                  config.theta_p),
        "success_prob": outcome.success_prob,
        "visibility": visibility.linear,
    }


def cmd_sweep(args) -> int:
    config = _load(args)
    if args.param not in _PARAM_PATHS:
        raise ConfigError(
            f"unknown sweep parameter {args.param!r}; choose from "
            f"{sorted(_PARAM_PATHS)}")
    path = _PARAM_PATHS[args.param]
    if args.steps < 1:
        raise ConfigError(f"steps must be >= 1 (got {args.steps})")
    if args.steps == 1:
        grid = np.array([args.start])
    else:
        grid = np.linspace(args.start, args.stop, args.steps)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(
                lambda v: _sweep_point(config, path, float(v)), grid))
    else:
        rows = [_sweep_point(config, path, float(v)) for v in grid]

    header = [args.param, "fidelity", "success_prob", "visibility"]
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for row in rows:
                writer.writerow([f"{row['value']:.12g}",
                                 f"{row['fidelity']:.12g}",
                                 f"{row['success_prob']:.12g}",
                                 f"{row['visibility']:.12g}"])
    report = {
        "param": args.param,
        "rows": [_round_floats(r) for r in rows],
        "provenance": _provenance(config, args.seed),
    }
    _emit(report, args)
    return EXIT_OK


def cmd_visibility(args) -> int:
    config = _load(args)
    vis = photon_visibility(config.emitter)
    report = {
        "inputs": config.raw,
        "visibility_exact": vis.exact,
        "visibility_linear": vis.linear,
        "gamma_dephase": config.emitter.gamma_dephase,
        "provenance": _provenance(config, args.seed),
    }
    if args.data:
        rows = _read_csv(args.data, ("n_bar", "visibility"))
        points, errors = [], []
        for lineno, row in rows:
            points.append((
                _parse_number(args.data, lineno, "n_bar", row["n_bar"]),
                _parse_number(args.data, lineno, "visibility",
                              row["visibility"])))
            if "visibility_err" in row and row["visibility_err"]:
                errors.append(_parse_number(args.data, lineno,
                                            "visibility_err",
                                            row["visibility_err"]))
        fit = extract_dephasing(points, config.emitter.gamma_total_rad,
                                errors=errors if len(errors) == len(points)
                                else None)
        report["fit"] = {
            "intercept": fit.intercept,
            "intercept_err": fit.intercept_err,
            "slope": fit.slope,
            "gamma_dephase_fit": fit.gamma_d,
            "gamma_dephase_fit_err": fit.gamma_d_err,
        }
    _emit(report, args)
    return EXIT_OK


def _read_csv(path: str, required: tuple[str, ...]):
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None or \
                    any(col not in reader.fieldnames for col in required):
                raise DataError(
                    f"{path}: expected columns {required} "
                    f"(got {reader.fieldnames})")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                clean = {}
                for col in reader.fieldnames:
                    if row[col] is None:
                        raise DataError(f"{path}:{lineno}: missing field {col!r}")
                    clean[col] = row[col].strip()
                rows.append((lineno, clean))
    except OSError as exc:
        raise DataError(f"cannot read {path!r}: {exc}") from exc
    return rows


def _parse_number(path: str, lineno: int, column: str, value: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise DataError(
            f"{path}:{lineno}: column {column!r} value {value!r} "
            "is not a number") from exc


def cmd_saturation(args) -> int:
    config = _load(args)
    rows = _read_csv(args.data, ("power_nw", "counts"))
    data = []
    for lineno, row in rows:
        spin = row.get("spin_state", "up").lower()
        if spin not in ("up", "down"):
            raise DataError(f"{args.data}:{lineno}: spin_state must be "
                            f"'up' or 'down' (got {row['spin_state']!r})")
        if spin != "up":  # background trace, ingested but not fitted
            continue
        data.append((_parse_number(args.data, lineno, "power_nw", row["power_nw"]),
                     _parse_number(args.data, lineno, "counts", row["counts"])))
    fit = fit_saturation(data)
    flux = mean_photon_number(fit, config.emitter, config.pulse, args.power)
    report = {
        "b1": fit.b1, "b2": fit.b2, "b3": fit.b3,
        "knee_product_b1b2": fit.knee_product,
        "residual_norm": fit.residual_norm,
        "power_nw": args.power,
        "s_param": flux.s_param,
        "n_crit": flux.n_crit,
        "n_flux": flux.n_flux,
        "n_bar": flux.n_bar,
        "scale_per_nw": flux.scale_per_nw,
        "provenance": _provenance(config, args.seed),
    }
    _emit(report, args)
    return EXIT_OK


def cmd_concurrence(args) -> int:
    config = _load(args)
    rows = _read_csv(args.data, ("outcome", "counts"))
    counts = {}
    for lineno, row in rows:
        counts[row["outcome"]] = _parse_number(args.data, lineno, "counts",
                                               row["counts"])
    explicit = None
    if args.mx is not None or args.my is not None:
        if args.mx is None or args.my is None:
            raise ConfigError("--mx and --my must be given together")
        explicit = (args.mx, args.my)
    try:
        m_x, m_y = explicit if explicit else contrasts_from_counts(counts)
        rho = density_from_counts(counts, m_x, m_y)
        point = concurrence(rho)
        mean, std = bootstrap_concurrence(counts, explicit, args.resamples,
                                          args.seed or 0)
    except MetricError as exc:
        raise DataError(str(exc)) from exc
    report = {
        "point_estimate": point,
        "bootstrap_mean": mean,
        "bootstrap_std": std,
        "resamples": args.resamples,
        "m_x": m_x, "m_y": m_y,
        "provenance": _provenance(config, args.seed),
    }
    _emit(report, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scattergate",
        description="Heralded spin-photon gate simulator and calibration tools")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI config path (default: built-in "
                       "reference parameters)")
        p.add_argument("--json", action="store_true",
                       help="emit a JSON report instead of a table")
        p.add_argument("--seed", type=int, default=None, help="RNG seed")
        p.add_argument("--jobs", type=int, default=1,
                       help="concurrent workers for sweeps")

    p_budget = sub.add_parser("budget", help="fidelity budget report")
    common(p_budget)
    p_budget.set_defaults(handler=cmd_budget)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter to CSV")
    common(p_sweep)
    p_sweep.add_argument("--param", required=True,
                         help="parameter path, e.g. emitter.kappa_flip")
    p_sweep.add_argument("--from", dest="start", type=float, required=True)
    p_sweep.add_argument("--to", dest="stop", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, required=True)
    p_sweep.add_argument("--csv", help="write rows to this CSV path")
    p_sweep.set_defaults(handler=cmd_sweep)

    p_vis = sub.add_parser("visibility", help="photon-visibility report")
    common(p_vis)
    p_vis.add_argument("--data", default=None,
                       help="optional CSV with n_bar,visibility"
                            "[,visibility_err] to fit the intercept")
    p_vis.set_defaults(handler=cmd_visibility)

    p_sat = sub.add_parser("saturation", help="fit a saturation CSV")
    common(p_sat)
    p_sat.add_argument("data", help="CSV with power_nw,counts[,spin_state]")
    p_sat.add_argument("--power", type=float, default=0.075,
                       help="pulse power (nW) for the photon-number estimate")
    p_sat.set_defaults(handler=cmd_saturation)

    p_con = sub.add_parser("concurrence",
                           help="concurrence from a coincidence CSV")
    common(p_con)
    p_con.add_argument("data", help="CSV with outcome,counts rows")
    p_con.add_argument("--mx", type=float, default=None,
                       help="measured X-basis contrast (overrides mid counts)")
    p_con.add_argument("--my", type=float, default=None,
                       help="measured Y-basis contrast (overrides mid counts)")
    p_con.add_argument("--resamples", type=int, default=1000)
    p_con.set_defaults(handler=cmd_concurrence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, QuadratureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
