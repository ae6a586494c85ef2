"""Command-line interface: analyze, range, simulate, validate.

Verdicts are encoded in exit codes so sweep scripts need no output parsing:
0 = globally noncontextual, 3 = globally contextual, 1 = error, 2 = bad
flags.  Identical invocations produce byte-identical output; reports carry
the tool version and the tolerances used.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .contexts import EmpiricalModel, build_empirical_model
from .errors import ContextualityError, InfeasibleSystem, UnknownCell
from .globalfit import (
    FeasibilityResult,
    LPSystem,
    Verdict,
    assemble_lp,
    coordinate_range,
    solve_feasibility,
)
from .scenario import Scenario, builtin_abc, builtin_chsh, parse_scenario
from .simulator import (
    build_apparatus,
    counterfactual_pair,
    empirical_frequencies,
    pair_frequencies,
    run_batch,
    two_apparatus_run,
    write_run_log,
)
from .rng import run_seed


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _add_source_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("scenario", nargs="?", help="scenario JSON file")
    sub.add_argument("--builtin", choices=("abc", "chsh"), help="use a built-in scenario")
    sub.add_argument("--p", type=float, default=None,
                     help="abc state parameter in [0,1] (default 1/3)")
    sub.add_argument("--state", choices=("singlet", "product00"), default="singlet",
                     help="chsh initial state")
    sub.add_argument("--angles", default=None,
                     help="chsh angles t1,t2,t3,t4 (default Tsirelson configuration)")
    sub.add_argument("--tol", type=float, default=1e-9, help="numerical tolerance (default 1e-9)")
    sub.add_argument("--exact", action="store_true",
                     help="decide feasibility in exact rational arithmetic")


def _load_scenario(args, parser: argparse.ArgumentParser) -> Scenario:
    if args.builtin == "abc":
        return builtin_abc(args.p if args.p is not None else 1.0 / 3.0)
    if args.builtin == "chsh":
        angles = (0.0, 0.0, 0.0, 0.0)
        if args.angles is None:
            return builtin_chsh(state=args.state)
        parts = args.angles.split(",")
        if len(parts) != 4:
            parser.error("--angles needs four comma-separated numbers")
        try:
            angles = tuple(float(x) for x in parts)
        except ValueError:
            parser.error("--angles needs four comma-separated numbers")
        return builtin_chsh(state=args.state, angles=angles)
    if not args.scenario:
        parser.error("give a scenario file or --builtin")
    with open(args.scenario, "rb") as fh:
        return parse_scenario(fh.read(), tol=args.tol)


# --- report assembly --------------------------------------------------------

def build_report(s: Scenario, model: EmpiricalModel, lp: LPSystem,
                 result: FeasibilityResult, tol: float, exact: bool,
                 ranges=None) -> dict:
    """Machine-readable analysis report; verdict matches table/witness presence."""
    contexts = [
        {
            "members": list(d.labels),
            "outcomes": [list(o) for o in d.outcomes],
            "probs": list(d.probs),
        }
        for d in model.contexts
    ]
    compatibility = {
        "passed": model.compatibility.passed,
        "max_residual": model.compatibility.max_residual,
        "checks": [
            {"name": e.name, "passed": e.passed, "residual": e.residual}
            for e in model.compatibility.entries
        ],
    }
    table = None
    if result.table is not None:
        table = {
            "cells": [list(lp.cell_values(c)) for c in result.table.cells],
            "values": list(result.table.values),
            "quantum_sample_space": result.table.quantum_sample_space,
        }
    witness = None
    if result.witness is not None:
        w = result.witness
        witness = {
            "bound": w.bound,
            "violation": w.violation,
            "weights": [
                {
                    "context": list(model.contexts[row.context_index].labels),
                    "outcome": list(row.outcome),
                    "weight": weight,
                }
                for row, weight in zip(lp.rows, w.weights) if weight != 0.0
            ],
            "correlator_signs": list(w.correlator_signs) if w.correlator_signs else None,
            "correlator_value": w.correlator_value,
        }
    report = {
        "tool": "contextuality",
        "version": __version__,
        "scenario": s.name,
        "dim": s.dim,
        "tolerance": tol,
        "exact": exact,
        "observables": [label for label, _ in s.observables],
        "axes": [[label, list(vals)] for label, vals in model.axes],
        "contexts": contexts,
        "compatibility": compatibility,
        "verdict": result.verdict.value,
        "table": table,
        "witness": witness,
        "ranges": ranges,
    }
    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2)


def report_from_json(text: str) -> dict:
    return json.loads(text)


def _print_text_report(report: dict) -> None:
    print(f"scenario: {report['scenario']}  (dim {report['dim']})")
    print(f"observables: {' '.join(report['observables'])}")
    print(f"tolerance: {_fmt(report['tolerance'])}  exact: {'yes' if report['exact'] else 'no'}")
    print("contexts:")
    for ctx in report["contexts"]:
        print(f"  {{{', '.join(ctx['members'])}}}")
        for outcome, prob in zip(ctx["outcomes"], ctx["probs"]):
            vals = ", ".join(_fmt(v) for v in outcome)
            print(f"    ({vals}) -> {_fmt(prob)}")
    comp = report["compatibility"]
    status = "passed" if comp["passed"] else "FAILED"
    print(f"compatibility: {status} (max residual {_fmt(comp['max_residual'])})")
    print(f"verdict: {report['verdict']}")
    if report["table"] is not None:
        tab = report["table"]
        print(f"global table (quantum_sample_space={str(tab['quantum_sample_space']).lower()}):")
        for cell, value in zip(tab["cells"], tab["values"]):
            vals = ", ".join(_fmt(v) for v in cell)
            print(f"    ({vals}) -> {_fmt(value)}")
    if report["witness"] is not None:
        w = report["witness"]
        print(f"witness: bound {_fmt(w['bound'])}, violation {_fmt(w['violation'])}")
        if w["correlator_value"] is not None:
            signs = " ".join(f"{s:+d}" for s in w["correlator_signs"])
            print(f"  correlator form: signs [{signs}], value {_fmt(w['correlator_value'])}")
        for item in w["weights"]:
            ctx = ",".join(item["context"])
            vals = ",".join(_fmt(v) for v in item["outcome"])
            print(f"    {{{ctx}}}({vals}): {_fmt(item['weight'])}")
    if report.get("ranges"):
        print("coordinate ranges:")
        for entry in report["ranges"]:
            vals = ",".join(_fmt(v) for v in entry["cell"])
            print(f"    ({vals}): [{_fmt(entry['min'])}, {_fmt(entry['max'])}]")


# --- commands ---------------------------------------------------------------

def _cmd_analyze(args, parser) -> int:
    s = _load_scenario(args, parser)
    model = build_empirical_model(s, tol=args.tol)
    lp = assemble_lp(model)
    result = solve_feasibility(lp, tol=args.tol, exact=args.exact)
    ranges = None
    if args.ranges and result.verdict is Verdict.NONCONTEXTUAL:
        ranges = []
        for cell in lp.cells:
            lo, hi = coordinate_range(lp, lp.cells.index(cell), tol=args.tol, exact=args.exact)
            ranges.append({"cell": list(lp.cell_values(cell)), "min": lo, "max": hi})
    report = build_report(s, model, lp, result, args.tol, args.exact, ranges)
    if args.json:
        print(report_to_json(report))
    else:
        _print_text_report(report)
    return 0 if result.verdict is Verdict.NONCONTEXTUAL else 3


def _parse_cell(spec: str, s: Scenario, lp: LPSystem) -> tuple[float, ...]:
    by_label = {label.lower(): i for i, (label, _) in enumerate(lp.axes)}
    assignment: dict[int, float] = {}
    for part in spec.split(","):
        if "=" not in part:
            raise UnknownCell(f"bad cell component {part!r}, expected label=value")
        label, _, value = part.partition("=")
        key = label.strip().lower()
        if key not in by_label:
            raise UnknownCell(f"unknown observable {label.strip()!r}")
        try:
            assignment[by_label[key]] = float(value)
        except ValueError:
            raise UnknownCell(f"bad outcome value {value!r} for {label.strip()!r}") from None
    missing = [lp.axes[i][0] for i in range(len(lp.axes)) if i not in assignment]
    if missing:
        raise UnknownCell(f"cell must fix every observable; missing {missing}")
    return tuple(assignment[i] for i in range(len(lp.axes)))


def _parse_sweep(spec: str, parser) -> tuple[float, float, float]:
    name, _, rest = spec.partition("=")
    if name.strip() != "p":
        parser.error("--sweep supports only p=start:stop:step")
    try:
        start, stop, step = (float(x) for x in rest.split(":"))
    except ValueError:
        parser.error("--sweep needs p=start:stop:step")
    if step <= 0:
        parser.error("--sweep step must be positive")
    return start, stop, step


def _cmd_range(args, parser) -> int:
    if args.sweep and args.builtin != "abc":
        parser.error("--sweep requires --builtin abc")
    if not args.cell:
        parser.error("--cell is required")
    if args.sweep:
        start, stop, step = _parse_sweep(args.sweep, parser)
        print("p,min,max")
        p = start
        while p <= stop + 1e-12:
            s = builtin_abc(min(max(p, 0.0), 1.0))
            model = build_empirical_model(s, tol=args.tol)
            lp = assemble_lp(model)
            cell = _parse_cell(args.cell, s, lp)
            lo, hi = coordinate_range(lp, cell, tol=args.tol, exact=args.exact)
            print(f"{_fmt(p)},{_fmt(lo)},{_fmt(hi)}")
            p += step
        return 0
    s = _load_scenario(args, parser)
    model = build_empirical_model(s, tol=args.tol)
    lp = assemble_lp(model)
    cell = _parse_cell(args.cell, s, lp)
    try:
        lo, hi = coordinate_range(lp, cell, tol=args.tol, exact=args.exact)
    except InfeasibleSystem:
        print("no global distribution", file=sys.stderr)
        return 3
    print(f"{lo:.6g} {hi:.6g}")
    return 0


def _cmd_simulate(args, parser) -> int:
    s = _load_scenario(args, parser)
    if args.runs <= 0:
        parser.error("--runs must be positive")
    app = build_apparatus(s, tol=args.tol)
    log_fh = open(args.log, "w", encoding="utf-8") if args.log else None
    try:
        if args.handle in ("B", "C"):
            variant = app.with_handle(args.handle)
            records = run_batch(s, variant, args.runs, args.seed, args.tol)
            if log_fh:
                write_run_log(records, log_fh)
            freq = empirical_frequencies(records, apparatus=variant)
            grid = [
                (pv, sv)
                for pv in variant.primary.eigenvalues
                for sv in variant.secondary[args.handle].eigenvalues
            ]
            payload = {
                "command": "simulate",
                "scenario": s.name,
                "handle": args.handle,
                "runs": args.runs,
                "seed": args.seed,
                "frequencies": [
                    {"outcome": list(outcome),
                     "count": freq.counts.get(outcome, 0),
                     "frequency": freq.counts.get(outcome, 0) / freq.total}
                    for outcome in grid
                ],
            }
            if args.json:
                print(json.dumps(payload, indent=2))
            else:
                print(f"scenario: {s.name}  handle: {args.handle}  runs: {args.runs}  seed: {args.seed}")
                for item in payload["frequencies"]:
                    vals = ", ".join(_fmt(v) for v in item["outcome"])
                    print(f"    ({vals}) -> {item['count']}  ({_fmt(item['frequency'])})")
            return 0
        if args.handle == "pair":
            agree = 0
            deviating_secondary = 0
            for i in range(args.runs):
                rec_b, rec_c = counterfactual_pair(s, app, run_seed(args.seed, i), args.tol)
                if rec_b.pointer1 == rec_c.pointer1:
                    agree += 1
                if rec_b.pointer2 != rec_c.pointer2:
                    deviating_secondary += 1
                if log_fh:
                    write_run_log((rec_b, rec_c), log_fh)
            payload = {
                "command": "simulate",
                "scenario": s.name,
                "handle": "pair",
                "runs": args.runs,
                "seed": args.seed,
                "primary_agreement_rate": agree / args.runs,
                "secondary_differs_rate": deviating_secondary / args.runs,
            }
            if args.json:
                print(json.dumps(payload, indent=2))
            else:
                print(f"scenario: {s.name}  counterfactual pairs: {args.runs}  seed: {args.seed}")
                print(f"    primary agreement rate: {_fmt(payload['primary_agreement_rate'])}")
                print(f"    secondary differs rate: {_fmt(payload['secondary_differs_rate'])}")
            return 0
        # two-apparatus
        records = [two_apparatus_run(s, run_seed(args.seed, i), args.tol)
                   for i in range(args.runs)]
        if log_fh:
            for r in records:
                write_run_log((r.first, r.second), log_fh)
        freq = pair_frequencies(records)
        primary_vals = app.primary.eigenvalues
        b_vals = app.secondary["B"].eigenvalues
        c_vals = app.secondary["C"].eigenvalues
        grid = [
            ((j1, k1, j2, k2), (primary_vals[j1], b_vals[k1], primary_vals[j2], c_vals[k2]))
            for j1 in range(len(primary_vals)) for k1 in range(len(b_vals))
            for j2 in range(len(primary_vals)) for k2 in range(len(c_vals))
        ]
        payload = {
            "command": "simulate",
            "scenario": s.name,
            "handle": "two-apparatus",
            "runs": args.runs,
            "seed": args.seed,
            "frequencies": [
                {"outcome": list(values),
                 "count": freq.counts.get(idx, 0),
                 "frequency": freq.counts.get(idx, 0) / freq.total}
                for idx, values in grid
            ],
        }
        if args.json:
            print(json.dumps(payload, indent=2))
        else:
            print(f"scenario: {s.name}  two-apparatus runs: {args.runs}  seed: {args.seed}")
            for item in payload["frequencies"]:
                vals = ", ".join(_fmt(v) for v in item["outcome"])
                print(f"    ({vals}) -> {item['count']}  ({_fmt(item['frequency'])})")
        return 0
    finally:
        if log_fh:
            log_fh.close()


def _cmd_validate(args, parser) -> int:
    s = _load_scenario(args, parser)
    model = build_empirical_model(s, tol=args.tol)
    print(f"scenario OK: {s.name} (dim {s.dim}, {len(s.observables)} observables, "
          f"{len(model.contexts)} contexts)")
    print(f"compatibility: max residual {_fmt(model.compatibility.max_residual)}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contextuality",
        description="Decide global (non)contextuality of quantum empirical models "
                    "and run counterfactual measurement simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    analyze = subs.add_parser("analyze", help="full pipeline: parse, model, classify")
    _add_source_args(analyze)
    analyze.add_argument("--json", action="store_true", help="machine-readable report")
    analyze.add_argument("--ranges", action="store_true",
                         help="include per-cell coordinate ranges (feasible case)")
    analyze.set_defaults(func=_cmd_analyze, parser=analyze)

    rng_cmd = subs.add_parser("range", help="feasible interval of one global-table cell")
    _add_source_args(rng_cmd)
    rng_cmd.add_argument("--cell", help="cell spec, e.g. a=1,b=1,c=-1")
    rng_cmd.add_argument("--sweep", help="sweep spec p=start:stop:step (abc builtin only)")
    rng_cmd.set_defaults(func=_cmd_range, parser=rng_cmd)

    sim = subs.add_parser("simulate", help="seeded measurement runs and frequencies")
    _add_source_args(sim)
    sim.add_argument("--handle", choices=("B", "C", "pair", "two-apparatus"), default="B")
    sim.add_argument("--runs", type=int, default=10000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--log", help="stream JSON-lines run records to this file")
    sim.add_argument("--json", action="store_true", help="machine-readable report")
    sim.set_defaults(func=_cmd_simulate, parser=sim)

    val = subs.add_parser("validate", help="scenario lint")
    _add_source_args(val)
    val.set_defaults(func=_cmd_validate, parser=val)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, args.parser)
    except ContextualityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
