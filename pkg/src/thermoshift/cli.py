"""Command-line front end.

Subcommands: words, check, pressure, gurevich, gibbs, factor, lyapunov.
Shift and potential descriptions come from JSON files (see README for the
schemas).  Reports embed the resolved configuration and library version and
are rendered deterministically; identical invocations produce byte-identical
files regardless of THERMOSHIFT_THREADS.

Exit status: 0 success, 1 input error, 2 a condition check failed.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .cocycle import MatrixFamily, lyapunov_estimate
from .factor import (FactorMap, HiddenGibbsReport, hidden_gibbs_report,
                     preimage_count, preimage_count_weight, pushforward_measure,
                     pushforward_weight)
from .gibbs import (build_nu, cesaro_average, entropy_energy,
                    gibbs_ratio_report, mixing_report)
from .potentials import (AdditiveCylinderWeights, load_potential, z1)
from .pressure import pressure_report, gurevich_log_sum, log_partition
from .serialize import dumps, jsonable
from .shifts import (BudgetExceededError, ShiftError, SpecificationCertificate,
                     check_bip, check_finite_irreducibility, enumerate_words,
                     shift_from_dict)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONDITION = 2


class ConditionFailure(Exception):
    """A requested check did not hold; the report is still emitted."""


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ShiftError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ShiftError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _load_shift(args):
    if not args.shift:
        raise ShiftError("--shift is required for this command")
    return shift_from_dict(_load_json(args.shift))


def _load_ws(args, shift):
    if not args.potential:
        raise ShiftError("--potential is required for this command")
    return load_potential(_load_json(args.potential), shift)


def _config_echo(args, command: str) -> dict:
    keys = ("shift", "potential", "matrices", "samples", "n", "n_max", "depth",
            "cesaro", "level", "p_max", "n_max_conditions", "anchors", "tol",
            "measure", "op", "format")
    params = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    return {"command": command, "version": __version__, "params": params}


def _emit(args, payload: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def _parse_word(text: str):
    text = text.strip()
    if not text:
        return ()
    if "," in text:
        return tuple(int(p) for p in text.split(","))
    return tuple(int(ch) for ch in text)


def _parse_anchors(text):
    return tuple(int(p) for p in str(text).split(",")) if text else (1,)


# ----------------------------------------------------------------------
# subcommands

def _cmd_words(args):
    shift = _load_shift(args)
    words = enumerate_words(shift, args.n, level=args.level)
    report = {"config": _config_echo(args, "words"),
              "count": len(words),
              "words": [list(w) for w in words]}
    _emit(args, dumps(report))


def _cmd_check(args):
    shift = _load_shift(args)
    cert = check_finite_irreducibility(shift, n_max=args.n_max, p_max=args.p_max)
    bip_ok, witnesses = check_bip(shift)
    ok = isinstance(cert, SpecificationCertificate)
    report = {
        "config": _config_echo(args, "check"),
        "finitely_irreducible_at_scale": ok,
        "certificate": jsonable(cert) if ok else None,
        "failure": None if ok else jsonable(cert),
        "bip": {"holds": bip_ok, "witnesses": list(witnesses)},
    }
    if ok:
        report["certificate"]["connector_table"] = {
            f"{_key_word(u)}|{_key_word(v)}": _key_word(w)
            for (u, v), w in sorted(cert.connector_table.items())}
    _emit(args, dumps(report))
    if not ok:
        raise ConditionFailure("no finite connector set at this scale")


def _key_word(w) -> str:
    return ",".join(str(s) for s in w) if w else "e"


def _cmd_pressure(args):
    shift = _load_shift(args)
    ws = _load_ws(args, shift)
    report = pressure_report(ws, shift, n_max=args.n,
                             anchors=_parse_anchors(args.anchors),
                             n_max_conditions=args.n_max_conditions,
                             p_max=args.p_max)
    if args.format == "csv":
        lines = ["n,logZ," + "lower,upper," + ",".join(
            f"gurevich_a{a}" for a in _parse_anchors(args.anchors))]
        gur = {(n, a): v for (n, a, v) in report.gurevich_per_n}
        for row in report.per_n:
            cells = [str(row.n), repr(row.log_z),
                     "" if row.lower is None else repr(row.lower),
                     "" if row.upper is None else repr(row.upper)]
            for a in _parse_anchors(args.anchors):
                cells.append(repr(gur[(row.n, a)]))
            lines.append(",".join(cells))
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, dumps({"config": _config_echo(args, "pressure"),
                           "report": jsonable(report)}))


def _cmd_gurevich(args):
    shift = _load_shift(args)
    ws = _load_ws(args, shift)
    anchors = _parse_anchors(args.anchors)
    rows = [{"n": n, "anchor": a,
             "log_z_anchored": gurevich_log_sum(ws, shift, n, a),
             "log_z": log_partition(ws, shift, n)}
            for n in range(1, args.n + 1) for a in anchors]
    _emit(args, dumps({"config": _config_echo(args, "gurevich"), "rows": rows}))


def _cmd_gibbs(args):
    shift = _load_shift(args)
    ws = _load_ws(args, shift)
    nu = build_nu(ws, shift, args.depth)
    measure = cesaro_average(nu, args.cesaro) if args.cesaro else nu
    rep = pressure_report(ws, shift, n_max=min(args.n_max, measure.depth),
                          n_max_conditions=args.n_max_conditions,
                          p_max=args.p_max, with_ladder=False)
    ratio = gibbs_ratio_report(measure, ws, rep.P_best,
                               n_max=min(args.n_max, measure.depth))
    balances = [entropy_energy(measure, ws, n)
                for n in range(1, min(args.n_max, measure.depth) + 1)]
    mixing = None
    if args.samples:
        triples = [(_parse_word(u), _parse_word(v), int(t))
                   for (u, v, t) in _load_json(args.samples)]
        p_hat = rep.constants["p_hat"]
        mixing = mixing_report(measure, ws, p_hat, triples, c_min=args.tol)
    report = {
        "config": _config_echo(args, "gibbs"),
        "pressure_interval": jsonable(rep.P_best),
        "ratio": jsonable(ratio),
        "balances": jsonable(balances),
        "mixing": jsonable(mixing),
    }
    _emit(args, dumps(report))
    if mixing is not None and not mixing.passed:
        raise ConditionFailure("mixing inequality failed on a sample")


def _cmd_factor(args):
    shift = _load_shift(args)
    if not shift.is_sofic:
        raise ShiftError("factor operations need a shift with a factor_map")
    fm = FactorMap.from_shift(shift)
    if args.op == "phi":
        phi = preimage_count_weight(fm)
        rows = {w: preimage_count(fm, w) for w in enumerate_words(shift, args.n)}
        report = {"config": _config_echo(args, "factor"),
                  "preimage_counts": {_key_word(w): c for w, c in sorted(rows.items())},
                  "z1": jsonable(z1(phi, shift))}
        _emit(args, dumps(report))
        return
    if args.op == "push-weight":
        ws = _load_ws(args, shift.cover())
        g = pushforward_weight(fm, ws)
        rows = {w: g.eval(w) for w in enumerate_words(shift, args.n)}
        report = {"config": _config_echo(args, "factor"),
                  "log_weights": {_key_word(w): jsonable(v)
                                  for w, v in sorted(rows.items())}}
        _emit(args, dumps(report))
        return
    if args.op == "push-measure":
        ws = _load_ws(args, shift.cover())
        nu = build_nu(ws, fm.domain, args.depth)
        if args.cesaro:
            nu = cesaro_average(nu, args.cesaro)
        pushed = pushforward_measure(fm, nu)
        report = {"config": _config_echo(args, "factor"),
                  "depth": pushed.depth,
                  "masses": {_key_word(w): m
                             for w, m in sorted(pushed.weights.items())}}
        _emit(args, dumps(report))
        return
    if args.op == "hidden-gibbs":
        ws = _load_ws(args, shift.cover())
        report = hidden_gibbs_report(fm, ws, depth=args.depth,
                                     n_max=args.n_max, cesaro_steps=args.cesaro,
                                     n_max_conditions=args.n_max_conditions,
                                     p_max=args.p_max)
        _emit(args, dumps({"config": _config_echo(args, "factor"),
                           "report": jsonable(report)}))
        if not report.passed:
            raise ConditionFailure("hidden-Gibbs check failed")
        return
    raise ShiftError(f"unknown factor op {args.op!r}")


def _cmd_lyapunov(args):
    shift = _load_shift(args)
    mats = _load_json(args.matrices)
    family = MatrixFamily(mats, norm=args.norm)
    if args.measure.startswith("bernoulli:"):
        probs = [float(p) for p in args.measure.split(":", 1)[1].split(",")]
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ShiftError("bernoulli probabilities must sum to 1")
        import math as _math
        ws = AdditiveCylinderWeights(
            {(i + 1,): _math.log(p) for i, p in enumerate(probs)}, depth=1)
    elif args.measure == "gibbs":
        ws = _load_ws(args, shift)
    else:
        raise ShiftError("--measure must be 'gibbs' or 'bernoulli:p1,p2,...'")
    measure = build_nu(ws, shift, args.n)
    rows = [{"n": n, "estimate": lyapunov_estimate(measure, family, n)}
            for n in range(1, args.n + 1)]
    # sub-additive upper envelope: the running minimum is the sharpest bound
    env = []
    best = float("inf")
    for r in rows:
        best = min(best, r["estimate"])
        env.append(best)
    for r, e in zip(rows, env):
        r["upper_envelope"] = e
    _emit(args, dumps({"config": _config_echo(args, "lyapunov"), "rows": rows,
                       "trend": rows[-1]["estimate"]}))


# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermoshift",
        description="Pressure, Gibbs and cocycle computations on truncated "
                    "countable Markov and sofic shifts.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, potential=False):
        p.add_argument("--shift", help="shift spec JSON file")
        if potential:
            p.add_argument("--potential", help="potential spec JSON file")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--csv", dest="format", action="store_const", const="csv",
                       help="shorthand for --format csv")
        p.add_argument("--tol", type=float, default=1e-6,
                       help="tolerance for oracle-style comparisons")

    p = sub.add_parser("words", help="enumerate allowable words")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--level", type=int, help="1-based ladder index")
    p.set_defaults(func=_cmd_words)

    p = sub.add_parser("check", help="finite irreducibility and BIP at scale")
    common(p)
    p.add_argument("--n-max", dest="n_max", type=int, default=3)
    p.add_argument("--p-max", dest="p_max", type=int, default=3)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("pressure", help="two-sided pressure report")
    common(p, potential=True)
    p.add_argument("--n", type=int, default=12, help="largest word length")
    p.add_argument("--anchors", default="1", help="comma list of anchor symbols")
    p.add_argument("--n-max-conditions", dest="n_max_conditions", type=int, default=2)
    p.add_argument("--p-max", dest="p_max", type=int, default=3)
    p.set_defaults(func=_cmd_pressure)

    p = sub.add_parser("gurevich", help="periodic-orbit partition sums")
    common(p, potential=True)
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--anchors", default="1")
    p.set_defaults(func=_cmd_gurevich)

    p = sub.add_parser("gibbs", help="build and check a truncation Gibbs measure")
    common(p, potential=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--cesaro", type=int, default=0, help="Cesaro steps")
    p.add_argument("--n-max", dest="n_max", type=int, default=8)
    p.add_argument("--n-max-conditions", dest="n_max_conditions", type=int, default=2)
    p.add_argument("--p-max", dest="p_max", type=int, default=3)
    p.add_argument("--samples", help="JSON file of (u, v, t) mixing triples")
    p.set_defaults(func=_cmd_gibbs)

    p = sub.add_parser("factor", help="factor-map computations")
    common(p, potential=True)
    p.add_argument("--op", required=True,
                   choices=("phi", "push-weight", "push-measure", "hidden-gibbs"))
    p.add_argument("--n", type=int, default=3, help="word length for tables")
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--cesaro", type=int, default=2)
    p.add_argument("--n-max", dest="n_max", type=int, default=4)
    p.add_argument("--n-max-conditions", dest="n_max_conditions", type=int, default=2)
    p.add_argument("--p-max", dest="p_max", type=int, default=3)
    p.set_defaults(func=_cmd_factor)

    p = sub.add_parser("lyapunov", help="measure-weighted matrix growth rate")
    common(p, potential=True)
    p.add_argument("--matrices", required=True, help="JSON list of d x d arrays")
    p.add_argument("--norm", choices=MatrixFamily.NORMS, default="max-row-sum")
    p.add_argument("--measure", default="gibbs")
    p.add_argument("--n", type=int, default=8)
    p.set_defaults(func=_cmd_lyapunov)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ConditionFailure as exc:
        print(f"condition check failed: {exc}", file=sys.stderr)
        return EXIT_CONDITION
    except (ShiftError, BudgetExceededError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
