"""Command-line entry point: ``heilbronn <subcommand> ...``.

Exit codes: 0 success, 2 precondition errors, 3 budget or degeneracy errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import exponents as ex
from .errors import HeilbronnError, PreconditionError
from .finder import (
    DEFAULT_BASE_BUDGET,
    EXHAUSTIVE,
    brute_force_min_determinant,
    brute_force_min_simplex,
    find_small_simplex,
    recursive_find,
)
from .geometry import format_pointset, read_pointset, simplex_volume, vol_k
from .harness import (
    GENERATORS,
    ExperimentConfig,
    emit_csv,
    fit_exponent,
    generate,
    read_records,
    run_experiment,
)
from .lifting import central_project, lift_to_sphere

LOG_HEADER = "# log denotes the natural logarithm; bound checked: delta(d,d) >= ln d - 6 + 10/sqrt(d)"


def _int_list(text: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _schedule(text: str):
    return EXHAUSTIVE if text == EXHAUSTIVE else _int_list(text)


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(args, payload, text: str | None = None, csv_text: str | None = None) -> None:
    if args.format == "json":
        _emit(args, json.dumps(payload, indent=2) + "\n")
    elif args.format == "csv" and csv_text is not None:
        _emit(args, csv_text)
    else:
        _emit(args, text if text is not None else json.dumps(payload) + "\n")


def cmd_generate(args):
    ps = generate(args.generator, args.d, args.n, args.seed)
    _emit(args, format_pointset(ps))


def cmd_vol(args):
    ps = read_pointset(args.file)
    v = vol_k(ps.coords)
    _dump(args, {"k": ps.n, "value": v}, f"{v!r}\n", f"k,value\n{ps.n},{v!r}\n")


def cmd_simplex_vol(args):
    ps = read_pointset(args.file)
    v = simplex_volume(ps.coords)
    _dump(args, {"k": ps.n - 1, "value": v}, f"{v!r}\n", f"k,value\n{ps.n - 1},{v!r}\n")


def cmd_lift(args):
    res = lift_to_sphere(read_pointset(args.file))
    payload = {
        "points": res.sphere_points.coords.tolist(),
        "norm_factors": res.norm_factors.tolist(),
    }
    _dump(args, payload, format_pointset(res.sphere_points))


def cmd_project(args):
    res = central_project(read_pointset(args.file), args.seed)
    if res.empty:
        print("warning: no point landed in the cube; try another --seed", file=sys.stderr)
    payload = {"indices": list(res.indices), "points": res.points.coords.tolist(), "empty": res.empty}
    _dump(args, payload, format_pointset(res.points))


def cmd_find(args):
    ps = read_pointset(args.file)
    sched = _schedule(args.schedule)
    if ps.space_tag == "unit-sphere":
        sel = recursive_find(ps, args.k, sched, args.base_budget)
        _dump(args, sel.to_dict(), sel.to_record())
    else:
        res = find_small_simplex(ps, args.k, sched, args.base_budget)
        text = (
            f"{res.k} {res.volume!r} " + " ".join(map(str, res.indices)) + "\n"
            f"# certified cube volume bound {res.certified_volume!r}\n" + res.sphere.to_record()
        )
        _dump(args, res.to_dict(), text)


def cmd_brute(args):
    ps = read_pointset(args.file)
    if ps.space_tag == "unit-sphere":
        sel = brute_force_min_determinant(ps, args.k + 1, args.budget, args.workers)
    else:
        sel = brute_force_min_simplex(ps, args.k, args.budget, args.workers)
    _dump(args, sel.to_dict(), sel.to_record())


def cmd_exponents(args):
    table = ex.dp_table(args.max_dim)
    if args.cell:
        try:
            k, d = (int(t) for t in args.cell.split(","))
        except ValueError:
            raise PreconditionError(f"--cell expects 'k,d', got {args.cell!r}") from None
        cells = [(k, d)]
    else:
        cells = [(k, d) for d in range(1, args.max_dim + 1) for k in range(1, d + 1)]
    for kd in cells:
        if kd not in table.entries:
            raise PreconditionError(f"cell {kd} outside the table")
    rows = []
    for k, d in cells:
        cell = table[(k, d)]
        row = {"k": k, "d": d, **cell.bound.to_json(), "value": float(cell.bound.q), "rule": cell.derivation.label}
        if args.derivation:
            row["derivation"] = table.tree(k, d)
            row["options"] = [
                {"rule": o.rule, "split": o.split, **o.bound.to_json()} for o in ex.best_split(k, d, table)
            ]
        rows.append(row)
    payload: dict = {"max_dim": args.max_dim, "cells": rows}
    text_lines = [f"{r['k']} {r['d']} {table.bound(r['k'], r['d'])} {r['rule']}" for r in rows]
    csv_lines = ["k,d,q,eps_coeff,rule"] + [f"{r['k']},{r['d']},{r['q']},{r['eps_coeff']},{r['rule']}" for r in rows]
    if args.derivation:
        for k, d in cells:
            text_lines.append(f"# ({k},{d}): " + _tree_text(table, k, d))
    if args.check_log:
        checks = ex.check_log_bound(table, 3, args.max_dim)
        payload["log_check"] = {
            "note": LOG_HEADER.lstrip("# "),
            "all_passed": all(c.passed for c in checks),
            "rows": [{"d": c.d, "q": f"{c.q.numerator}/{c.q.denominator}", "rhs": c.rhs, "margin": c.margin, "passed": c.passed} for c in checks],
        }
        text_lines.append(LOG_HEADER)
        text_lines += [f"log d={c.d} margin={c.margin:.6g} {'pass' if c.passed else 'FAIL'}" for c in checks]
    _dump(args, payload, "\n".join(text_lines) + "\n", "\n".join(csv_lines) + "\n")


def _tree_text(table, k, d) -> str:
    der = table[(k, d)].derivation
    here = f"d({k},{d})={table.bound(k, d)}"
    if der.rule != ex.RECURSION:
        return f"{here} [{der.rule}]"
    parts = " + ".join(_tree_text(table, *c) for c in der.children)
    return f"{here} <- {parts}"


def cmd_experiment(args):
    if not args.out:
        raise PreconditionError("experiment needs --out for the CSV file")
    cfg = ExperimentConfig(
        d=args.d,
        k=args.k,
        n_values=_int_list(args.n_values),
        seeds=_int_list(args.seeds),
        generator=args.generator,
        method=args.method,
        schedule=_schedule(args.schedule),
        output_path=args.out,
        budget=args.budget,
        base_budget=args.base_budget,
    )
    records = run_experiment(cfg, workers=args.workers)
    bad = sum(1 for r in records if r.error)
    print(f"{len(records)} records in {args.out} ({bad} error rows)", file=sys.stderr)


def cmd_fit(args):
    res = fit_exponent(read_records(args.file), args.method)
    text = (
        f"slope {res.slope!r}\nintercept {res.intercept!r}\nresidual {res.residual!r}\n"
        f"n_values {' '.join(map(str, res.n_values))}\n"
        f"excluded zero-volume rows {res.excluded_zero}, error rows {res.excluded_error}\n"
    )
    if res.reference_exponent is not None:
        text += f"reference {res.reference_exponent!r}  # {res.reference_label}\n"
    _dump(args, res.to_dict(), text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--out", default=None, help="write output here instead of stdout")

    p = argparse.ArgumentParser(prog="heilbronn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("generate", cmd_generate, "write a seeded point-set file")
    sp.add_argument("--generator", choices=GENERATORS, default="uniform-cube")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)

    add("vol", cmd_vol, "volume of the parallelepiped spanned by a file's vectors").add_argument("file")
    add("simplex-vol", cmd_simplex_vol, "volume of the simplex on a file's points").add_argument("file")
    add("lift", cmd_lift, "lift cube points onto the unit sphere").add_argument("file")
    add("project", cmd_project, "rotate sphere points and project them into the cube").add_argument("file")

    for name, func, help_ in (
        ("find", cmd_find, "recursive projection search"),
        ("brute", cmd_brute, "exhaustive minimum search"),
    ):
        sp = add(name, func, help_)
        sp.add_argument("file")
        sp.add_argument("--k", type=int, required=True)
        sp.add_argument("--schedule", default=EXHAUSTIVE, help="'exhaustive' or comma-separated splits")
        sp.add_argument("--base-budget", type=int, default=DEFAULT_BASE_BUDGET)
        sp.add_argument("--budget", type=int, default=None, help="default: $HEILBRONN_BUDGET or 5e7")
        sp.add_argument("--workers", type=int, default=1)

    sp = add("exponents", cmd_exponents, "exact exponent bound table")
    sp.add_argument("--max-dim", type=int, required=True)
    sp.add_argument("--cell", default=None, help="k,d")
    sp.add_argument("--derivation", action="store_true")
    sp.add_argument("--check-log", action="store_true")

    sp = add("experiment", cmd_experiment, "resumable min-volume sweep to CSV")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--n-values", required=True, help="e.g. 16,32,64")
    sp.add_argument("--seeds", default="0-9", help="e.g. 0-19 or 1,5,7")
    sp.add_argument("--generator", choices=GENERATORS, default="uniform-cube")
    sp.add_argument("--method", choices=("brute", "recursive", "both"), default="both")
    sp.add_argument("--schedule", default=EXHAUSTIVE)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--base-budget", type=int, default=DEFAULT_BASE_BUDGET)
    sp.add_argument("--workers", type=int, default=1)

    sp = add("fit", cmd_fit, "log-log fit of an experiment CSV")
    sp.add_argument("file")
    sp.add_argument("--method", default=None)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except HeilbronnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
