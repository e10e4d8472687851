"""``entangle-lab``: reproduce the model tables, scans and collapse statistics.

Subcommands
    table    analytic (and optionally sampled) joint-probability table of a
             string-model variant, with CHSH, Bell-bound and marginal-law
             diagnostics
    scan     sweep p_w or p_1 over a grid; plot-ready CSV of CHSH values and
             the worst marginal residual
    quantum  singlet-state reference values on the standard coplanar axis
             family at a chosen angle
    bloch    collapse sampling, universal averages and the 15-dimensional
             two-qubit decomposition

Every run is reproducible from ``--seed`` (or ``ENTANGLE_LAB_SEED``); reports
with the same configuration, seed and version are byte-identical regardless
of ``--workers``.  Exit codes: 0 success, 2 configuration error, 3 numerical
invariant failure.  Errors are emitted as JSON objects on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import os
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bloch import (
    BreakDistribution,
    MeasurementFrame,
    collapse_counts,
    decompose,
    outcome_probabilities,
    rank_one_residual,
    universal_average,
)
from .probability import ExperimentTable, InvariantViolation, JointDistribution, check_bell_bounds, chsh, marginals
from .quantum import coplanar_axes, maximally_mixed_state, product_state, singlet_state, table_for_axes
from .report import (
    bell_bounds_to_json,
    chsh_to_json,
    counts_to_json,
    emit_csv,
    make_report,
    marginals_to_json,
    report_to_json,
    table_to_json,
)
from .rng import DOMAIN_BLOCH_AVERAGE, DOMAIN_BLOCH_COLLAPSE, DOMAIN_QUANTUM_SAMPLING, substream
from .strings import SETTINGS, StringModelConfig, Variant, analytic_table, estimate_table, iter_trials

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SEED_ENV_VAR = "ENTANGLE_LAB_SEED"
ANALYTIC_MARGINAL_TOL = 1e-9

_VARIANT_CHOICES = [v.value for v in Variant]


def _sampled_marginal_tol(trials: int) -> float:
    # ~3 sigma of a Bernoulli frequency estimate
    return 4.0 / math.sqrt(trials)


def _parse_seed(args) -> tuple[int, str]:
    if args.seed is not None:
        seed, source = args.seed, "flag"
    elif os.environ.get(SEED_ENV_VAR):
        raw = os.environ[SEED_ENV_VAR]
        try:
            seed = int(raw)
        except ValueError:
            raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from None
        source = "env"
    else:
        seed, source = 0, "default"
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed, source


def _parse_triple(text: str, flag: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"{flag} expects three comma-separated numbers, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"{flag} expects numbers, got {text!r}") from None


def _write_output(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _table_sections(analytic, sampled, counts, trials):
    """JSON result sections shared by the table and quantum commands."""
    results = {
        "analytic": {
            "table": table_to_json(analytic, rationals=True),
            "chsh": chsh_to_json(chsh(analytic)),
            "bell_bounds": bell_bounds_to_json(check_bell_bounds(chsh(analytic))),
            "marginals": marginals_to_json(marginals(analytic, ANALYTIC_MARGINAL_TOL)),
        },
        "sampled": None,
    }
    if sampled is not None:
        results["sampled"] = {
            "trials_per_setting": trials,
            "table": table_to_json(sampled),
            "counts": counts_to_json(counts),
            "chsh": chsh_to_json(chsh(sampled)),
            "bell_bounds": bell_bounds_to_json(check_bell_bounds(chsh(sampled))),
            "marginals": marginals_to_json(marginals(sampled, _sampled_marginal_tol(trials))),
        }
    return results


def _table_csv(analytic, sampled) -> str:
    header = ["section", "row", "p_pp", "p_pm", "p_mp", "p_mm"]
    rows = []
    sections = [("analytic", analytic)] + ([("sampled", sampled)] if sampled is not None else [])
    key = {"AB": "ab", "AB'": "ab_prime", "A'B": "a_prime_b", "A'B'": "a_prime_b_prime"}
    for section, table in sections:
        for label, dist in table.rows():
            rows.append([section, key[label]] + [float(p) for p in dist.probabilities()])
    return emit_csv(header, rows)


def _write_traces(config, seed, trials, path, limit) -> None:
    lines = []
    for si, setting in enumerate(SETTINGS):
        for t, (pair, trace) in enumerate(iter_trials(config, setting, seed, min(limit, trials))):
            record = {"setting": setting.label, "trial": t, "outcome": pair.label}
            record.update(trace.to_json_dict())
            lines.append(json.dumps(record))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_table(args) -> tuple[dict | None, str]:
    seed, seed_source = _parse_seed(args)
    config = StringModelConfig(
        variant=Variant(args.variant),
        p_w=args.pw,
        p_1=args.p1,
        length_l=args.length,
    )
    if args.trials < 0:
        raise ValueError(f"--trials must be >= 0, got {args.trials}")
    if args.trace and args.trials == 0:
        raise ValueError("--trace needs --trials >= 1")
    if args.trace_limit < 1:
        raise ValueError(f"--trace-limit must be >= 1, got {args.trace_limit}")

    analytic = analytic_table(config)
    sampled = counts = None
    if args.trials:
        sampled, counts = estimate_table(config, args.trials, seed, workers=args.workers)
    if args.trace:
        _write_traces(config, seed, args.trials, args.trace, args.trace_limit)

    config_echo = {
        "variant": config.variant.value,
        "p_w": float(config.p_w),
        "p_1": float(config.p_1),
        "length_l": float(config.length_l),
        "trials_per_setting": args.trials,
        "seed_source": seed_source,
    }
    if args.format == "csv":
        return None, _table_csv(analytic, sampled)
    report = make_report("table", config_echo, seed, _table_sections(analytic, sampled, counts, args.trials))
    return report, ""


def _cmd_scan(args) -> tuple[dict | None, str]:
    seed, seed_source = _parse_seed(args)
    if args.parameter not in ("p_w", "p_1"):
        raise ValueError(f"unknown scan parameter {args.parameter!r}")
    if args.steps < 2:
        raise ValueError(f"--steps must be >= 2, got {args.steps}")
    if not (0.0 <= args.start <= 1.0 and 0.0 <= args.stop <= 1.0):
        raise ValueError("--start and --stop must lie in [0, 1]")
    if not args.start < args.stop:
        raise ValueError("--start must be < --stop")
    variant = Variant(args.variant)
    grid = np.linspace(args.start, args.stop, args.steps)

    rows = []
    fixed = None
    for value in grid:
        value = float(value)
        p_w = value if args.parameter == "p_w" else args.pw
        p_1 = value if args.parameter == "p_1" else args.p1
        config = StringModelConfig(variant=variant, p_w=p_w, p_1=p_1)
        fixed = config
        table = analytic_table(config)
        quantities = chsh(table)
        residual = marginals(table, ANALYTIC_MARGINAL_TOL).max_abs_residual
        rows.append([value] + [float(q) for q in quantities.as_tuple()] + [float(residual)])

    header = [args.parameter, "a_chsh", "b_chsh", "c_chsh", "d_chsh", "max_abs_marginal_residual"]
    if args.format == "csv":
        return None, emit_csv(header, rows)
    config_echo = {
        "variant": variant.value,
        "parameter": args.parameter,
        "start": args.start,
        "stop": args.stop,
        "steps": args.steps,
        "fixed_p_w": None if args.parameter == "p_w" else float(fixed.p_w),
        "fixed_p_1": None if args.parameter == "p_1" else float(fixed.p_1),
        "seed_source": seed_source,
    }
    results = {"header": header, "rows": rows}
    return make_report("scan", config_echo, seed, results), ""


def _cmd_quantum(args) -> tuple[dict | None, str]:
    seed, seed_source = _parse_seed(args)
    if not 0.0 <= args.alpha <= math.pi:
        raise ValueError(f"--alpha must lie in [0, pi], got {args.alpha}")
    if args.trials < 0:
        raise ValueError(f"--trials must be >= 0, got {args.trials}")
    state = maximally_mixed_state() if args.mixed else singlet_state()
    analytic = table_for_axes(state, coplanar_axes(args.alpha))

    sampled = counts = None
    if args.trials:
        dists = []
        counts = {}
        for si, (label, dist) in enumerate(analytic.rows()):
            p = np.asarray([float(x) for x in dist.probabilities()])
            p = p / p.sum()
            cell_counts = substream(seed, DOMAIN_QUANTUM_SAMPLING, si).multinomial(args.trials, p)
            counts[label] = tuple(int(c) for c in cell_counts)
            dists.append(JointDistribution(*(int(c) / args.trials for c in cell_counts)))
        sampled = ExperimentTable(*dists)

    config_echo = {
        "alpha": args.alpha,
        "mixed": bool(args.mixed),
        "trials_per_setting": args.trials,
        "seed_source": seed_source,
    }
    if args.format == "csv":
        return None, _table_csv(analytic, sampled)
    report = make_report("quantum", config_echo, seed, _table_sections(analytic, sampled, counts, args.trials))
    return report, ""


def _collapse_geometry(costheta: float):
    """State and frame with r.n+ = costheta: n+ along +z, r tilted toward +x."""
    if not -1.0 <= costheta <= 1.0:
        raise ValueError(f"--costheta must lie in [-1, 1], got {costheta}")
    r = np.array([math.sqrt(max(0.0, 1.0 - costheta * costheta)), 0.0, costheta])
    return r, MeasurementFrame(n_plus=np.array([0.0, 0.0, 1.0]))


def _cmd_bloch_collapse(args) -> tuple[dict | None, str]:
    seed, seed_source = _parse_seed(args)
    if args.trials < 1:
        raise ValueError(f"--trials must be >= 1, got {args.trials}")
    r, frame = _collapse_geometry(args.costheta)
    if args.cell_weights:
        weights = [float(w) for w in args.cell_weights.split(",")]
        dist = BreakDistribution.piecewise(weights)
    else:
        dist = BreakDistribution.uniform()
    born_plus, born_minus = outcome_probabilities(r, frame)
    n_plus, n_minus = collapse_counts(r, frame, dist, args.trials, substream(seed, DOMAIN_BLOCH_COLLAPSE))

    config_echo = {
        "subcommand": "collapse",
        "costheta": args.costheta,
        "trials": args.trials,
        "cell_weights": args.cell_weights or None,
        "seed_source": seed_source,
    }
    results = {
        "counts": {"plus": n_plus, "minus": n_minus},
        "frequencies": {"plus": n_plus / args.trials, "minus": n_minus / args.trials},
        "born": {"plus": born_plus, "minus": born_minus},
        "distribution_plus_probability": dist.plus_probability(born_plus),
    }
    if args.format == "csv":
        header = ["outcome", "count", "frequency", "born"]
        rows = [
            ["+", n_plus, n_plus / args.trials, born_plus],
            ["-", n_minus, n_minus / args.trials, born_minus],
        ]
        return None, emit_csv(header, rows)
    return make_report("bloch-collapse", config_echo, seed, results), ""


def _cmd_bloch_average(args) -> tuple[dict | None, str]:
    seed, seed_source = _parse_seed(args)
    r, frame = _collapse_geometry(args.costheta)
    born_plus, born_minus = outcome_probabilities(r, frame)
    avg_plus, avg_minus = universal_average(
        r, frame, args.cells, args.dists, substream(seed, DOMAIN_BLOCH_AVERAGE)
    )
    config_echo = {
        "subcommand": "average",
        "costheta": args.costheta,
        "cells": args.cells,
        "dists": args.dists,
        "seed_source": seed_source,
    }
    results = {
        "average": {"plus": avg_plus, "minus": avg_minus},
        "born": {"plus": born_plus, "minus": born_minus},
    }
    if args.format == "csv":
        header = ["p_plus_avg", "p_minus_avg", "born_plus", "born_minus"]
        return None, emit_csv(header, [[avg_plus, avg_minus, born_plus, born_minus]])
    return make_report("bloch-average", config_echo, seed, results), ""


def _load_state_file(path: str) -> np.ndarray:
    """Read a 4x4 complex matrix from JSON; errors name the offending position."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValueError(f"cannot read state file {path!r}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    matrix = data.get("matrix") if isinstance(data, dict) else data
    if not isinstance(matrix, list) or len(matrix) != 4:
        raise ValueError(f"{path}: matrix: expected 4 rows")
    rho = np.zeros((4, 4), dtype=complex)
    for i, row in enumerate(matrix):
        if not isinstance(row, list) or len(row) != 4:
            raise ValueError(f"{path}: matrix[{i}]: expected 4 entries")
        for j, cell in enumerate(row):
            if isinstance(cell, (int, float)) and not isinstance(cell, bool):
                rho[i, j] = complex(cell)
            elif (
                isinstance(cell, list)
                and len(cell) == 2
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in cell)
            ):
                rho[i, j] = complex(cell[0], cell[1])
            else:
                raise ValueError(f"{path}: matrix[{i}][{j}]: expected a number or [re, im] pair")
    return rho


def _cmd_bloch_decompose(args) -> tuple[dict | None, str]:
    seed, seed_source = _parse_seed(args)
    if args.state == "singlet":
        rho = singlet_state()
    elif args.state == "mixed":
        rho = maximally_mixed_state()
    elif args.state == "product":
        if not args.a or not args.b:
            raise ValueError("--state product needs --a and --b Bloch vectors")
        rho = product_state(_parse_triple(args.a, "--a"), _parse_triple(args.b, "--b"))
    else:  # custom
        if not args.state_file:
            raise ValueError("--state custom needs --state-file")
        rho = _load_state_file(args.state_file)

    vec = decompose(rho)
    config_echo = {
        "subcommand": "decompose",
        "state": args.state,
        "a": args.a or None,
        "b": args.b or None,
        "state_file": args.state_file or None,
        "seed_source": seed_source,
    }
    results = vec.to_json_dict()
    results["norm"] = vec.norm
    results["rank_one_residual"] = rank_one_residual(vec.r_conn)
    if args.format == "csv":
        header = ["block", "index", "value"]
        rows = []
        for block in ("r15", "r_alice", "r_bob", "r_conn"):
            for index, value in enumerate(results[block]):
                rows.append([block, index, value])
        return None, emit_csv(header, rows)
    return make_report("bloch-decompose", config_echo, seed, results), ""


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master seed (default: $ENTANGLE_LAB_SEED or 0)")
    parser.add_argument("--format", choices=["json", "csv"], default="json", help="output format")
    parser.add_argument("--out", default=None, help="output path (default: stdout)")
    parser.add_argument("--workers", type=int, default=1, help="parallel workers; results are identical for any value")
    parser.add_argument("--timing", action="store_true", help="include wall time in the JSON report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entangle-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"entangle-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    table = sub.add_parser("table", help="analytic and sampled tables of a string-model variant")
    table.add_argument("--variant", required=True, choices=_VARIANT_CHOICES)
    table.add_argument("--pw", type=float, default=None, help="white-color probability (v2/v3/v4)")
    table.add_argument("--p1", type=float, default=None, help="string-1 selection probability (v4)")
    table.add_argument("--length", type=float, default=1.0, help="string length (cancels from probabilities)")
    table.add_argument("--trials", type=int, default=0, help="Monte Carlo trials per setting (0: analytic only)")
    table.add_argument("--trace", default=None, help="write per-trial micro traces as JSON lines to this path")
    table.add_argument("--trace-limit", type=int, default=100, help="max traced trials per setting")
    _add_common(table)
    table.set_defaults(run=_cmd_table)

    scan = sub.add_parser("scan", help="sweep p_w or p_1 over a grid")
    scan.add_argument("--variant", required=True, choices=_VARIANT_CHOICES)
    scan.add_argument("--parameter", required=True, choices=["p_w", "p_1"])
    scan.add_argument("--start", type=float, required=True)
    scan.add_argument("--stop", type=float, required=True)
    scan.add_argument("--steps", type=int, required=True)
    scan.add_argument("--pw", type=float, default=None, help="fixed p_w when scanning p_1")
    scan.add_argument("--p1", type=float, default=None, help="fixed p_1 when scanning p_w")
    _add_common(scan)
    scan.set_defaults(run=_cmd_scan)

    quantum = sub.add_parser("quantum", help="singlet reference values on the coplanar axis family")
    quantum.add_argument("--alpha", type=float, required=True, help="angle between the A and B axes, in [0, pi]")
    quantum.add_argument("--mixed", action="store_true", help="use the maximally mixed state instead of the singlet")
    quantum.add_argument("--trials", type=int, default=0, help="multinomial samples per setting (0: analytic only)")
    _add_common(quantum)
    quantum.set_defaults(run=_cmd_quantum)

    bloch = sub.add_parser("bloch", help="collapse sampling, universal averages, 15-dim decomposition")
    bloch_sub = bloch.add_subparsers(dest="subcommand", required=True)

    collapse = bloch_sub.add_parser("collapse", help="sample the break-point collapse mechanism")
    collapse.add_argument("--costheta", type=float, required=True, help="r.n+ of the measured state")
    collapse.add_argument("--trials", type=int, default=10000)
    collapse.add_argument("--cell-weights", default=None, help="comma-separated piecewise cell weights (default: uniform)")
    _add_common(collapse)
    collapse.set_defaults(run=_cmd_bloch_collapse)

    average = bloch_sub.add_parser("average", help="universal average over random break distributions")
    average.add_argument("--costheta", type=float, required=True)
    average.add_argument("--cells", type=int, default=64)
    average.add_argument("--dists", type=int, default=100000)
    _add_common(average)
    average.set_defaults(run=_cmd_bloch_average)

    decompose_p = bloch_sub.add_parser("decompose", help="15-dimensional Bloch decomposition of a two-qubit state")
    decompose_p.add_argument("--state", required=True, choices=["singlet", "mixed", "product", "custom"])
    decompose_p.add_argument("--a", default=None, help="Alice Bloch vector x,y,z (product state)")
    decompose_p.add_argument("--b", default=None, help="Bob Bloch vector x,y,z (product state)")
    decompose_p.add_argument("--state-file", default=None, help="JSON file with a 4x4 matrix (custom state)")
    _add_common(decompose_p)
    decompose_p.set_defaults(run=_cmd_bloch_decompose)

    return parser


def _emit_error(code: int, message: str) -> None:
    sys.stderr.write(json.dumps({"error": {"code": code, "message": message}}) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handled it: 0 for --help/--version, 2 for usage errors
        return int(exc.code or 0)

    started = time.perf_counter()
    try:
        report, csv_text = args.run(args)
    except InvariantViolation as exc:
        _emit_error(EXIT_NUMERIC, str(exc))
        return EXIT_NUMERIC
    except (ValueError, TypeError) as exc:
        _emit_error(EXIT_CONFIG, str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        _emit_error(EXIT_CONFIG, str(exc))
        return EXIT_CONFIG

    if report is not None:
        if args.timing:
            report["wall_time_s"] = time.perf_counter() - started
        _write_output(report_to_json(report), args.out)
    else:
        _write_output(csv_text, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
