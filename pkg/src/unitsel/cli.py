"""Command-line front end.

Subcommands: solve, map, rmap, width, build-objective-model, compile-cnf,
gen, bench. Results go to stdout, diagnostics to stderr. Exit codes:
0 success, 1 input/validation error, 2 inconsistent evidence (including a
Reverse-MAP or solve optimum of exactly zero), 3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Mapping, Sequence

from .factor import FactorError, Instantiation
from .model import ModelError, Scm, load_model, save_model
from .objective import (
    build_objective_model,
    load_objective,
    save_objective,
)
from .elimination import (
    EliminationOrder,
    lift_order_constrained,
    lift_order_unconstrained,
    minfill_order,
    moral_graph,
    parse_order_file,
    simulate_elimination,
    treewidth_exact_enum,
)
from .inference import (
    InconsistentEvidenceError,
    format_trace,
    map_ve,
    rmap_ve,
    unit_select,
)
from .reductions import compile_formula, parse_dimacs
from .bench import (
    GenConfig,
    default_bench_configs,
    gen_random_scm,
    gen_tight_family,
    run_width_table,
    width_table_csv,
)
from .worlds import n_world_model

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INCONSISTENT = 2
EXIT_INTERNAL = 3


def _default_seed() -> int:
    return int(os.environ.get("UNITSEL_SEED", "0"))


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write(path: str | None, data: bytes) -> None:
    if path is None:
        sys.stdout.write(data.decode("utf-8"))
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def parse_assignments(scm: Scm, text: str | None) -> Instantiation:
    """Parse comma-separated name=state pairs against the model."""
    out: Instantiation = {}
    if not text:
        return out
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ModelError(f"bad assignment {chunk!r}, expected name=state")
        name, state = chunk.split("=", 1)
        v = scm.by_name(name.strip())
        out[v.id] = v.state_index(state.strip())
    return out


def _format_inst(scm: Scm, inst: Mapping[int, int]) -> str:
    return ",".join(f"{n}={s}" for n, s in scm.names_of(inst).items()) or "(empty)"


def _load_order(path: str, scm: Scm) -> EliminationOrder:
    return parse_order_file(_read(path).decode("utf-8"), scm)


def cmd_solve(args: argparse.Namespace) -> int:
    scm = load_model(_read(args.model), allow_nonfunctional=True)
    objective = load_objective(scm, _read(args.objective))
    om = None
    order = None
    if args.order:
        # The order names objective-model variables (the model being solved).
        om = build_objective_model(scm, objective)
        order = _load_order(args.order, om.model)
    result = unit_select(scm, objective, method=args.method, order=order, om=om)
    if args.json:
        doc = {
            "unit": scm.names_of(result.instantiation),
            "value": result.value,
            "excluded": result.excluded,
        }
        print(json.dumps(doc, separators=(",", ":")))
    else:
        print(f"unit: {_format_inst(scm, result.instantiation)}")
        print(f"value: {result.value!r}")
        print(f"excluded: {result.excluded}")
    if result.value == 0.0:
        print("objective value is zero: evidence inconsistent", file=sys.stderr)
        return EXIT_INCONSISTENT
    return EXIT_OK


def cmd_map(args: argparse.Namespace) -> int:
    scm = load_model(_read(args.model), allow_nonfunctional=True)
    targets = [scm.by_name(n.strip()).id for n in args.targets.split(",") if n.strip()]
    evidence = parse_assignments(scm, args.e)
    order = _load_order(args.order, scm) if args.order else None
    result = map_ve(scm, targets, evidence, order=order, want_trace=args.trace)
    if args.trace:
        print(format_trace(result.trace, scm))
    print(f"value: {result.value!r}")
    print(f"instantiation: {_format_inst(scm, result.instantiation)}")
    return EXIT_OK


def cmd_rmap(args: argparse.Namespace) -> int:
    scm = load_model(_read(args.model), allow_nonfunctional=True)
    targets = [scm.by_name(n.strip()).id for n in args.targets.split(",") if n.strip()]
    e1 = parse_assignments(scm, args.e1)
    e2 = parse_assignments(scm, args.e2)
    order = _load_order(args.order, scm) if args.order else None
    result = rmap_ve(scm, targets, e1, e2, order=order, want_trace=args.trace)
    if args.trace:
        print(format_trace(result.trace, scm))
    print(f"value: {result.value!r}")
    print(f"instantiation: {_format_inst(scm, result.instantiation)}")
    print(f"excluded: {result.excluded}")
    if result.value == 0.0:
        print("Reverse-MAP optimum is zero: evidence inconsistent", file=sys.stderr)
        return EXIT_INCONSISTENT
    return EXIT_OK


def _bound_line(kind: str, observed: int, bound: int, label: str) -> tuple[str, bool]:
    ok = observed <= bound
    marker = "PASS" if ok else "FAIL"
    return f"bound={label} observed<=bound {marker}", ok


def cmd_width(args: argparse.Namespace) -> int:
    scm = load_model(_read(args.model), allow_nonfunctional=True)
    units = parse_assignments(scm, None)
    unit_ids: list[int] = []
    if args.units:
        unit_ids = [scm.by_name(n.strip()).id for n in args.units.split(",") if n.strip()]
    g = moral_graph(scm)
    suffix = set(unit_ids) if unit_ids else None
    if args.order == "minfill":
        order = minfill_order(g, constrained_suffix=suffix)
    elif args.order == "exhaustive":
        _, order = treewidth_exact_enum(g, constrained_suffix=suffix)
    else:
        order = _load_order(args.order, scm)
    report = simulate_elimination(g, order)
    print(f"width: {report.width}")
    names = [
        "".join(sorted(scm.var(v).name for v in c))
        if all(len(scm.var(v).name) == 1 for v in c)
        else ",".join(sorted(scm.var(v).name for v in c))
        for c in report.clusters
    ]
    print("clusters: " + " ".join(names))

    if args.lifted is None and not args.objective:
        return EXIT_OK

    w = report.width
    all_ok = True
    if args.objective:
        objective = load_objective(scm, _read(args.objective))
        om = build_objective_model(scm, objective)
        dup = om.duplicates()
        go = moral_graph(om.model)
        n = om.n_components
        lifted_u = lift_order_unconstrained(order, dup, om.h_id)
        wu = simulate_elimination(go, lifted_u).width
        line, ok = _bound_line("unconstrained", wu, 3 * n * (w + 1), "3n(w+1)")
        all_ok &= ok
        print(f"lifted unconstrained width: {wu}")
        print(line)
        if unit_ids:
            lifted_c = lift_order_constrained(order, dup, om.h_id, unit_ids)
            wc = simulate_elimination(go, lifted_c).width
            outcome_vars = {vid for t in objective.terms for vid in (*t.y, *t.w)}
            twin = all(not t.e for t in objective.terms)
            if twin and len(outcome_vars) == 1:
                bound, label = 2 * w + 2, "2w+2"
            elif len(outcome_vars) == 1:
                bound, label = 3 * w + 3, "3w+3"
            else:
                bound, label = max(3 * w + 3, len(unit_ids)), "max(3w+3,|U|)"
            line, ok = _bound_line("constrained", wc, bound, label)
            all_ok &= ok
            print(f"lifted constrained width: {wc}")
            print(line)
    elif args.lifted is not None:
        shared = unit_ids if unit_ids else list(scm.roots)
        nw, wm = n_world_model(scm, shared, args.lifted)
        gn = moral_graph(nw)
        dup = {b: c for b, c in wm.copies.items()}
        dedup = {
            b: tuple(dict.fromkeys(c)) for b, c in dup.items()
        }  # shared vars appear once
        if unit_ids:
            lifted = lift_order_constrained(order, dedup, None, unit_ids)
            wn = simulate_elimination(gn, lifted).width
            print(f"lifted constrained width ({args.lifted}-world): {wn}")
            line, ok = _bound_line("n-world", wn, w, "w")
            all_ok &= ok
            print(line)
        else:
            lifted = lift_order_unconstrained(order, dedup, None)
            wn = simulate_elimination(gn, lifted).width
            print(f"lifted unconstrained width ({args.lifted}-world): {wn}")
            line, ok = _bound_line("n-world", wn, args.lifted * (w + 1) - 1, "n(w+1)-1")
            all_ok &= ok
            print(line)
    if not all_ok:
        print("a proven width bound was violated", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def cmd_build_objective_model(args: argparse.Namespace) -> int:
    scm = load_model(_read(args.model), allow_nonfunctional=True)
    objective = load_objective(scm, _read(args.objective))
    om = build_objective_model(scm, objective)
    _write(args.out, save_model(om.model))
    print(
        f"components: {om.n_components} nodes: {om.model.n} "
        f"e1: {_format_inst(om.model, om.e1)} e2: {_format_inst(om.model, om.e2)}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_compile_cnf(args: argparse.Namespace) -> int:
    formula = parse_dimacs(_read(args.dimacs).decode("utf-8"))
    scm, sentinel = compile_formula(formula)
    _write(args.out, save_model(scm))
    print(f"sentinel: {scm.var(sentinel).name}", file=sys.stderr)
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    if args.kind == "random":
        cfg = GenConfig(
            node_count=args.n, seed=args.seed, max_parents=args.max_parents
        )
        scm = gen_random_scm(cfg)
        _write(args.out, save_model(scm))
    else:
        scm, units, objective = gen_tight_family(args.n)
        _write(args.out, save_model(scm))
        if args.objective_out:
            _write(args.objective_out, save_objective(scm, objective))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    if args.config == "default":
        cfgs = default_bench_configs(args.seed, trials=args.trials)
    else:
        doc = json.loads(_read(args.config).decode("utf-8"))
        cfgs = [
            GenConfig(
                node_count=entry["n"],
                seed=args.seed,
                max_parents=entry.get("max_parents", 3),
                unit_ratio=entry.get("ur", 1.0),
                trials=entry.get("trials", args.trials),
            )
            for entry in doc
        ]
    rows = run_width_table(cfgs)
    _write(args.out, width_table_csv(rows).encode("utf-8"))
    if not all(r.lifted_bound_ok for r in rows):
        print("lifted-order width bound violated", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unitsel",
        description="Exact unit selection on structural causal models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="argmax_u L(u) for a counterfactual objective")
    p.add_argument("--model", required=True)
    p.add_argument("--objective", required=True)
    p.add_argument("--method", choices=("ve", "brute"), default="ve")
    p.add_argument("--order", help="elimination order file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("map", help="max_u Pr(u, e)")
    p.add_argument("--model", required=True)
    p.add_argument("--targets", required=True, help="comma-separated names")
    p.add_argument("--e", default="", help="evidence name=state pairs")
    p.add_argument("--order", help="elimination order file")
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("rmap", help="max_u Pr(e1 | u, e2)")
    p.add_argument("--model", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--e1", default="")
    p.add_argument("--e2", default="")
    p.add_argument("--order", help="elimination order file")
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_rmap)

    p = sub.add_parser("width", help="width and clusters of an elimination order")
    p.add_argument("--model", required=True)
    p.add_argument("--units", help="comma-separated unit variable names")
    p.add_argument("--order", default="minfill", help="minfill|exhaustive|<file>")
    p.add_argument("--lifted", type=int, help="lift to an n-world model")
    p.add_argument("--objective", help="lift to this objective's model instead")
    p.set_defaults(func=cmd_width)

    p = sub.add_parser("build-objective-model", help="emit the objective model JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--objective", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_build_objective_model)

    p = sub.add_parser("compile-cnf", help="compile DIMACS CNF to an SCM circuit")
    p.add_argument("--dimacs", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compile_cnf)

    p = sub.add_parser("gen", help="generate benchmark instances")
    p.add_argument("--kind", choices=("random", "tight"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-parents", type=int, default=3)
    p.add_argument("--out")
    p.add_argument("--objective-out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run the width-table experiment")
    p.add_argument("--config", default="default", help="default|<json file>")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=25)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and hasattr(args, "seed"):
        args.seed = _default_seed()
    try:
        return args.func(args)
    except InconsistentEvidenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except (ModelError, FactorError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as err:
        print(f"internal invariant breach: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
