"""Command-line surface: eval, scan, threshold, experiment.

Exit codes: 0 = ran, 2 = invalid input (schema, probe, bracket), 3 =
numerical failure.  All data outputs are deterministic: full-precision
floats, no timestamps; run metadata lives in the scan's sidecar JSON.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from . import __version__
from .criterion import CriterionResult, build_probe, criterion_lhs, criterion_lhs_box
from .errors import NumericalFailureError
from .experiment import (
    effective_qubit_state,
    efficiency_scale,
    pauli_expectations,
    propagate_uncertainty,
)
from .optimize import ProbeRule, ScanSpec, ThresholdQuery, find_threshold, scan
from .statefile import conventions_block, load_state_document

# previously reported detection threshold for the ghz_like family at
# sigma = 1, x0 = 1, p = 1, k = 2; the engine's closed form lands nearby
# and every threshold report records the deviation
REFERENCE_EPSILON_THRESHOLD = 4.648


def _result_dict(result: CriterionResult) -> dict:
    return {
        "k": result.k,
        "lhs": result.lhs,
        "offdiag_term": result.offdiag_term,
        "verdict": result.verdict,
        "decision_tolerance": result.decision_tol,
        "probe_kind": result.probe_kind,
        "partition_terms": [
            {"partition": str(part), "value": value}
            for part, value in result.partition_terms
        ],
    }


def _emit_json(payload: dict, stream) -> None:
    json.dump(payload, stream, indent=2, sort_keys=True)
    stream.write("\n")


def _parse_k_list(raw: str) -> list[int]:
    try:
        ks = [int(part) for part in raw.split(",") if part]
    except ValueError as exc:
        raise ValueError(f"invalid k list {raw!r}") from exc
    if not ks:
        raise ValueError("at least one k required")
    return ks


def _parse_axis(raw: str) -> tuple[str, np.ndarray]:
    parts = raw.split(":")
    if len(parts) != 4:
        raise ValueError(f"axis must be name:lo:hi:steps, got {raw!r}")
    name = parts[0]
    lo, hi = float(parts[1]), float(parts[2])
    steps = int(parts[3])
    if steps < 1:
        raise ValueError("axis needs at least one step")
    return name, np.linspace(lo, hi, steps)


def _parse_bracket(raw: str) -> tuple[float, float]:
    parts = raw.split(":")
    if len(parts) != 2:
        raise ValueError(f"bracket must be lo:hi, got {raw!r}")
    return float(parts[0]), float(parts[1])


def _probe_rule(args) -> ProbeRule:
    if getattr(args, "optimize_probe", None) is not None:
        lo, hi = _parse_bracket(args.optimize_probe)
        return ProbeRule(mode="optimized", bounds=(lo, hi))
    if args.probe is None:
        raise ValueError("a probe is required: --probe X0 or --optimize-probe lo:hi")
    return ProbeRule(mode="fixed", x0=float(args.probe))


def _default_workers() -> int:
    env = os.environ.get("CVSEP_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def cmd_eval(args) -> int:
    doc = load_state_document(args.state_file)
    state = doc.build()
    shift = doc.params.get("shift", 0.0)
    results = []
    for k in _parse_k_list(args.k):
        if args.box is not None:
            probe = build_probe(doc.family, float(args.probe), shift=shift, xi=float(args.box))
            results.append(criterion_lhs_box(state, probe, k))
        else:
            probe = build_probe(doc.family, float(args.probe), shift=shift)
            results.append(criterion_lhs(state, probe, k))

    if args.csv:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["k", "lhs", "offdiag_term", "verdict", "partition", "partition_term"])
        for res in results:
            for part, value in res.partition_terms:
                writer.writerow(
                    [res.k, repr(res.lhs), repr(res.offdiag_term), res.verdict, str(part), repr(value)]
                )
    else:
        payload = {
            "state": {"family": doc.family, "parameters": doc.params, "p": doc.p,
                      "noise": doc.noise_kind, "delta": doc.noise_delta},
            "probe": {"x0": float(args.probe), "box_width": args.box and float(args.box)},
            "results": [_result_dict(res) for res in results],
            "conventions": conventions_block(),
            "engine_version": __version__,
        }
        _emit_json(payload, sys.stdout)
    return 0


def _scan_row(payload) -> list:
    spec, v1 = payload
    row_spec = ScanSpec(
        document=spec.document,
        axis1=(spec.axis1[0], np.array([v1])),
        axis2=spec.axis2,
        ks=spec.ks,
        probe=spec.probe,
    )
    return list(scan(row_spec).cells)


def cmd_scan(args) -> int:
    doc = load_state_document(args.state_file)
    axis1 = _parse_axis(args.axis1)
    axis2 = _parse_axis(args.axis2)
    ks = tuple(_parse_k_list(args.k))
    rule = _probe_rule(args)
    spec = ScanSpec(document=doc, axis1=axis1, axis2=axis2, ks=ks, probe=rule)

    workers = args.workers if args.workers is not None else _default_workers()
    if workers > 1 and axis1[1].size > 1:
        with Pool(processes=workers) as pool:
            rows = pool.map(_scan_row, [(spec, float(v)) for v in axis1[1]])
        cells = tuple(cell for row in rows for cell in row)
        from .optimize import ScanResult

        result = ScanResult(spec, cells)
    else:
        result = scan(spec)

    out = Path(args.out)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(result.csv_rows())
    sidecar = {
        "state": {"family": doc.family, "parameters": doc.params, "p": doc.p,
                  "noise": doc.noise_kind, "delta": doc.noise_delta},
        "axes": {
            axis1[0]: [float(v) for v in axis1[1]],
            axis2[0]: [float(v) for v in axis2[1]],
        },
        "ks": list(ks),
        "probe_rule": {"mode": rule.mode, "x0": rule.x0, "bounds": rule.bounds},
        "conventions": conventions_block(),
        "engine_version": __version__,
    }
    with out.with_suffix(out.suffix + ".meta.json").open("w") as fh:
        _emit_json(sidecar, fh)
    errors = sum(1 for c in result.cells if c.error is not None)
    print(f"wrote {out} ({len(result.cells)} cells, {errors} tagged failures)")
    return 0


def cmd_threshold(args) -> int:
    doc = load_state_document(args.state_file)
    rule = _probe_rule(args)
    ks = _parse_k_list(args.k)
    if len(ks) != 1:
        raise ValueError("threshold queries take exactly one k")
    query = ThresholdQuery(
        document=doc,
        param=args.param,
        bracket=_parse_bracket(args.bracket),
        k=ks[0],
        probe=rule,
        tol=float(args.tol),
    )
    from .optimize import _lhs_at_param

    lo, hi = query.bracket
    crossing = find_threshold(query)
    payload = {
        "parameter": args.param,
        "threshold": crossing,
        "bracket": [lo, hi],
        "lhs_at_bracket": [_lhs_at_param(query, lo), _lhs_at_param(query, hi)],
        "k": ks[0],
        "tolerance": query.tol,
        "conventions": conventions_block(),
        "engine_version": __version__,
    }
    if (
        doc.family == "ghz_like"
        and args.param == "epsilon"
        and ks[0] == 2
        and rule.mode == "fixed"
        and math.isclose(doc.params.get("sigma", 0.0), 1.0)
        and math.isclose(rule.x0 or 0.0, 1.0)
        and math.isclose(doc.p, 1.0)
    ):
        payload["reference_threshold"] = REFERENCE_EPSILON_THRESHOLD
        payload["deviation_from_reference"] = crossing - REFERENCE_EPSILON_THRESHOLD
    _emit_json(payload, sys.stdout)
    return 0


def cmd_experiment(args) -> int:
    doc = load_state_document(args.state_file)
    state = doc.build()
    shift = doc.params.get("shift", 0.0)
    probe = build_probe(doc.family, float(args.probe), shift=shift, xi=float(args.xi))
    result = criterion_lhs_box(state, probe, k=2)
    eff = effective_qubit_state(state, probe)
    expansion = pauli_expectations(eff)
    budget = propagate_uncertainty(result, float(args.o), float(args.zeta), state.n, 2)
    scaled = efficiency_scale(result, float(args.tau))
    trace = expansion.trace_in_subspace
    payload = {
        "observables": expansion.to_json_dict(),
        "decomposed_lhs_trace_renormalized": (
            expansion.decomposed_lhs / trace if trace > 0.0 else None
        ),
        "trace_in_subspace": trace,
        "criterion": _result_dict(result),
        "uncertainty": {
            "o": budget.o,
            "zeta": budget.zeta,
            "xi_exact": budget.xi_exact,
            "xi_bound": budget.xi_bound,
        },
        "efficiency": {"tau": float(args.tau), "scaled": _result_dict(scaled)},
        "conventions": conventions_block(),
        "engine_version": __version__,
    }
    _emit_json(payload, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvsep",
        description="k-inseparability detection for continuous-variable multipartite states",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate the criterion for one probe")
    p_eval.add_argument("state_file")
    p_eval.add_argument("--k", required=True, help="comma-separated k values")
    p_eval.add_argument("--probe", required=True, type=float, help="probe parameter x0")
    p_eval.add_argument("--box", type=float, default=None, help="box width xi (finite detectors)")
    p_eval.add_argument("--csv", action="store_true", help="CSV instead of JSON")
    p_eval.set_defaults(func=cmd_eval)

    p_scan = sub.add_parser("scan", help="two-axis detection map")
    p_scan.add_argument("state_file")
    p_scan.add_argument("--axis1", required=True, help="name:lo:hi:steps")
    p_scan.add_argument("--axis2", required=True, help="name:lo:hi:steps")
    p_scan.add_argument("--k", required=True, help="comma-separated k values")
    p_scan.add_argument("--out", required=True, help="output CSV path")
    p_scan.add_argument("--probe", type=float, default=None, help="fixed probe x0")
    p_scan.add_argument("--optimize-probe", default=None, help="lo:hi bounds for per-cell tuning")
    p_scan.add_argument("--workers", type=int, default=None,
                        help="parallel row workers (default: CVSEP_WORKERS or all cores)")
    p_scan.set_defaults(func=cmd_scan)

    p_thr = sub.add_parser("threshold", help="bisect the lhs = 0 crossing of one parameter")
    p_thr.add_argument("state_file")
    p_thr.add_argument("--param", required=True)
    p_thr.add_argument("--bracket", required=True, help="lo:hi")
    p_thr.add_argument("--k", required=True)
    p_thr.add_argument("--tol", default="1e-6")
    p_thr.add_argument("--probe", type=float, default=None)
    p_thr.add_argument("--optimize-probe", default=None)
    p_thr.set_defaults(func=cmd_threshold)

    p_exp = sub.add_parser("experiment", help="finite-detector protocol report")
    p_exp.add_argument("state_file")
    p_exp.add_argument("--probe", required=True, type=float)
    p_exp.add_argument("--xi", required=True, type=float, help="detector width")
    p_exp.add_argument("--o", type=float, default=0.0, help="absolute offdiag uncertainty")
    p_exp.add_argument("--zeta", type=float, default=0.0, help="relative diagonal uncertainty")
    p_exp.add_argument("--tau", type=float, default=1.0, help="detector efficiency")
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
