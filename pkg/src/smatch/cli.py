"""Command-line interface.

Neurons are named ``side:index`` with 0-based indices (``x:0`` is the first
row of the X file). Every command prints one JSON report on stdout; exit code
0 on success, 1 on a computation error, 2 on a usage error.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
import warnings

import numpy as np

from . import __version__
from .conv import ConvTensor, sample_columns
from .errors import InvalidInputError, SmatchError
from .formats import apply_zero_policy, load_matrix, save_matrix
from .geometry import ZERO_POLICIES, NumericPolicy
from .instances import KINDS, generate
from .matching import (
    BudgetExhausted,
    MatchPair,
    MatchProblem,
    NeuronId,
    NotInMaximumMatch,
    all_min_match,
    max_match,
    min_match,
    sampled_simple_matches,
    simple_matches,
    similarity,
    size_histogram,
    sorted_pairs,
)
from .oracle import (
    ENUMERATION_LIMIT,
    INDEPENDENCE_LIMIT,
    STABILITY_LIMIT,
    check_stability,
    check_strong_independence,
    min_disjoint_angle,
    oracle_report,
    summarize,
)
from .report import histogram_dict, matrix_digest, render, write_csv

_EPILOG = (
    "Neuron indices are 0-based (x:0 is the first row of the X file). Files ending in "
    ".csv/.txt are read as CSV, anything else as the SMAT binary format. "
    "SMATCH_THREADS caps worker threads (0 = auto)."
)


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _conv_layout(text):
    parts = _float_list(text)
    if len(parts) != 3 or any(p != int(p) or p < 1 for p in parts):
        raise argparse.ArgumentTypeError("--conv expects h,w,images as positive integers")
    return tuple(int(p) for p in parts)


def _neuron(text):
    try:
        return NeuronId.parse(text)
    except InvalidInputError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smatch",
        description="Neuron activation subspace matches between two networks.",
        epilog=_EPILOG,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--no-timing", action="store_true", help="omit the timing field")
    common.add_argument("--csv-out", help="also write the curve / histogram as CSV")

    files = argparse.ArgumentParser(add_help=False)
    files.add_argument("--x", required=True, help="activation file for network X")
    files.add_argument("--y", required=True, help="activation file for network Y")
    files.add_argument("--slack", type=float, default=0.0, help="multiplicative boundary slack")
    files.add_argument("--zero-policy", choices=ZERO_POLICIES, default="reject")
    files.add_argument("--rank-tol", type=float, default=NumericPolicy.rank_tol_factor)
    files.add_argument("--residual-floor", type=float, default=NumericPolicy.residual_floor)

    eps = argparse.ArgumentParser(add_help=False)
    eps.add_argument("--eps", type=float, required=True, help="match tolerance in [0, 1)")

    neuron = argparse.ArgumentParser(add_help=False)
    neuron.add_argument("--neuron", type=_neuron, required=True, help="x:<index> or y:<index>")

    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    parents = [common, files, eps]
    sub.add_parser("maxmatch", parents=parents, help="maximum match and similarity", epilog=_EPILOG)
    p = sub.add_parser("minmatch", parents=parents + [neuron], help="one v-minimal match", epilog=_EPILOG)
    p.add_argument("--order", choices=("asc", "shuffle"), default="asc")
    p.add_argument("--seed", type=int, default=0)
    p = sub.add_parser("allmin", parents=parents + [neuron], help="all v-minimal matches", epilog=_EPILOG)
    p.add_argument("--budget", type=int)
    p = sub.add_parser("simple", parents=parents, help="all simple matches", epilog=_EPILOG)
    p.add_argument("--budget", type=int, help="max v-minimal matches per neuron")
    p = sub.add_parser("sample-simple", parents=parents, help="sampled simple matches", epilog=_EPILOG)
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sweep", parents=[common, files], help="similarity curve over epsilons", epilog=_EPILOG)
    p.add_argument("--eps-list", type=_float_list, required=True)
    p.add_argument("--conv", type=_conv_layout, help="h,w,images layout of the rows")
    p.add_argument("--sample-d", type=int, help="columns sampled per repeat (with --conv)")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("gen", parents=[common], help="write a generated instance", epilog=_EPILOG)
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--n-x", type=int)
    p.add_argument("--n-y", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--eps0", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-x", required=True)
    p.add_argument("--out-y", required=True)

    p = sub.add_parser("oracle", parents=parents, help="brute-force match enumeration", epilog=_EPILOG)
    p.add_argument("--limit", type=int, default=ENUMERATION_LIMIT)

    p = sub.add_parser("check", parents=[common, files], help="strong independence / stability", epilog=_EPILOG)
    p.add_argument("--eps", type=float, help="required with --stability")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--independence", type=float, metavar="THETA", help="angle in radians")
    group.add_argument("--stability", type=float, metavar="LAMBDA")
    p.add_argument("--limit", type=int)
    return parser


class _Loaded:
    """Loaded activations with the map back to original row indices."""

    def __init__(self, args):
        self.policy = NumericPolicy(
            rank_tol_factor=args.rank_tol,
            boundary_slack=args.slack,
            zero_vector_policy=args.zero_policy,
            residual_floor=args.residual_floor,
        )
        raw_x = load_matrix(args.x)
        raw_y = load_matrix(args.y)
        self.x, self.x_ids = apply_zero_policy(raw_x, args.zero_policy, "x")
        self.y, self.y_ids = apply_zero_policy(raw_y, args.zero_policy, "y")
        self.raw = (raw_x, raw_y)

    def problem(self, epsilon) -> MatchProblem:
        return MatchProblem(self.x, self.y, epsilon, self.policy)

    def digest(self, epsilon=None) -> dict:
        out = {
            "x": matrix_digest(self.raw[0]),
            "y": matrix_digest(self.raw[1]),
            "policy": self.policy.as_dict(),
        }
        if epsilon is not None:
            out["epsilon"] = epsilon
        dropped_x = sorted(set(range(self.raw[0].shape[0])) - set(self.x_ids))
        dropped_y = sorted(set(range(self.raw[1].shape[0])) - set(self.y_ids))
        if dropped_x or dropped_y:
            out["dropped"] = {"x": dropped_x, "y": dropped_y}
        return out

    def pair(self, m: MatchPair) -> dict:
        return {"x": [self.x_ids[i] for i in m.xs], "y": [self.y_ids[j] for j in m.ys]}

    def pairs(self, ms) -> list:
        return [self.pair(m) for m in sorted_pairs(ms)]

    def name(self, v: NeuronId) -> str:
        ids = self.x_ids if v.side == "x" else self.y_ids
        return f"{v.side}:{ids[v.index]}"

    def to_internal(self, v: NeuronId) -> NeuronId:
        ids = self.x_ids if v.side == "x" else self.y_ids
        try:
            return NeuronId(v.side, ids.index(v.index))
        except ValueError:
            raise InvalidInputError(f"neuron {v} is not present (out of range or dropped)") from None


def _workers() -> int:
    raw = os.environ.get("SMATCH_THREADS", "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        raise InvalidInputError(f"SMATCH_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise InvalidInputError("SMATCH_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _simple_results(data, report, args):
    hist = size_histogram(report.matches)
    if args.csv_out:
        write_csv(args.csv_out, ["size", "count"], sorted(hist.items()))
    return {
        "matches": data.pairs(report.matches),
        "count": len(report.matches),
        "histogram": histogram_dict(hist),
        "per_neuron_counts": {data.name(v): n for v, n in sorted(report.per_neuron_counts.items())},
        "exhaustive": report.exhaustive,
    }


def _cmd_maxmatch(args, data):
    p = data.problem(args.eps)
    return {"maximum": data.pair(max_match(p)), "similarity": similarity(p)}


def _cmd_minmatch(args, data):
    p = data.problem(args.eps)
    result = min_match(p, data.to_internal(args.neuron), order=args.order, seed=args.seed)
    if isinstance(result, NotInMaximumMatch):
        return {"neuron": str(args.neuron), "status": "not_in_maximum_match", "match": None}
    return {"neuron": str(args.neuron), "status": "ok", "match": data.pair(result)}


def _cmd_allmin(args, data):
    p = data.problem(args.eps)
    matches = all_min_match(p, data.to_internal(args.neuron), budget=args.budget)
    hist = size_histogram(matches)
    if args.csv_out:
        write_csv(args.csv_out, ["size", "count"], sorted(hist.items()))
    return {
        "neuron": str(args.neuron),
        "matches": data.pairs(matches),
        "count": len(matches),
        "histogram": histogram_dict(hist),
    }


def _cmd_simple(args, data):
    report = simple_matches(data.problem(args.eps), workers=_workers(), budget=args.budget)
    return _simple_results(data, report, args)


def _cmd_sample_simple(args, data):
    report = sampled_simple_matches(data.problem(args.eps), args.iters, args.seed, workers=_workers())
    out = _simple_results(data, report, args)
    out["iterations"] = args.iters
    out["seed"] = args.seed
    return out


def _cmd_sweep(args, data):
    eps_list = args.eps_list
    if any(b < a for a, b in zip(eps_list, eps_list[1:])):
        raise InvalidInputError("--eps-list must be ascending")
    column_sets = None
    if args.conv is not None:
        if args.sample_d is None:
            raise InvalidInputError("--conv requires --sample-d")
        h, w, images = args.conv
        tx = ConvTensor(data.x, h, w, images)
        ConvTensor(data.y, h, w, images)
        column_sets = sample_columns(tx.columns, args.sample_d, args.repeats, args.seed)
    elif args.sample_d is not None:
        raise InvalidInputError("--sample-d requires --conv")
    curve = []
    for eps in eps_list:
        point = {"epsilon": eps}
        if column_sets is None:
            point["similarity"] = similarity(data.problem(eps))
        else:
            per = [
                similarity(MatchProblem(data.x[:, c], data.y[:, c], eps, data.policy))
                for c in column_sets
            ]
            point["per_repeat"] = per
            point["similarity"] = float(np.mean(per))
        curve.append(point)
    if args.csv_out:
        write_csv(args.csv_out, ["epsilon", "similarity"], [(pt["epsilon"], pt["similarity"]) for pt in curve])
    out = {"curve": curve}
    if column_sets is not None:
        out["conv"] = {
            "layout": list(args.conv), "sample_d": args.sample_d,
            "repeats": args.repeats, "seed": args.seed,
        }
    return out


def _cmd_oracle(args, data):
    return summarize(oracle_report(data.problem(args.eps), limit=args.limit))


def _cmd_check(args, data):
    if args.independence is not None:
        limit = args.limit or INDEPENDENCE_LIMIT
        sides = {}
        for side, rows in (("x", data.x), ("y", data.y)):
            sides[side] = {
                "passes": check_strong_independence(rows, args.independence, limit, data.policy),
                "min_angle": min_disjoint_angle(rows, data.policy, limit),
            }
        return {
            "independence": {
                "theta": args.independence,
                "sides": sides,
                "passes": all(s["passes"] for s in sides.values()),
            }
        }
    if args.eps is None:
        raise InvalidInputError("--stability requires --eps")
    limit = args.limit or STABILITY_LIMIT
    verdict = check_stability(data.problem(args.eps), args.stability, limit)
    return {"stability": {"lambda": args.stability, "epsilon": args.eps, "passes": verdict}}


def _cmd_gen(args):
    inst = generate(
        args.kind, n=args.n, d=args.d, epsilon0=args.eps0, seed=args.seed, n_x=args.n_x, n_y=args.n_y,
    )
    save_matrix(inst.x, args.out_x)
    save_matrix(inst.y, args.out_y)
    return {
        "kind": inst.kind,
        "params": inst.params,
        "written": {
            "x": {"path": args.out_x, **matrix_digest(inst.x)},
            "y": {"path": args.out_y, **matrix_digest(inst.y)},
        },
    }


_COMMANDS = {
    "maxmatch": _cmd_maxmatch,
    "minmatch": _cmd_minmatch,
    "allmin": _cmd_allmin,
    "simple": _cmd_simple,
    "sample-simple": _cmd_sample_simple,
    "sweep": _cmd_sweep,
    "oracle": _cmd_oracle,
    "check": _cmd_check,
}


def run_cli(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = {"name": args.command, "argv": list(sys.argv[1:] if argv is None else argv)}
    start = time.perf_counter()
    report = {"command": command}
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", BudgetExhausted)
            if args.command == "gen":
                report["results"] = _cmd_gen(args)
            else:
                data = _Loaded(args)
                report["problem"] = data.digest(getattr(args, "eps", None))
                report["results"] = _COMMANDS[args.command](args, data)
        notes = [str(w.message) for w in caught if issubclass(w.category, BudgetExhausted)]
        if notes:
            report["warnings"] = notes
            for note in notes:
                print(f"warning: {note}", file=sys.stderr)
        code = 0
    except (SmatchError, OSError) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = 1
    if not args.no_timing:
        report["timing"] = {"seconds": time.perf_counter() - start}
    stdout.write(render(report))
    return code


def main():
    sys.exit(run_cli())
