"""Command-line front end.

Every command prints exactly one JSON document on stdout:
``{"command", "inputs_digest", "seed", "result"}``.  Logs and timings go
to stderr.  Exit codes:

* ``check``: 0 numéraire, 1 not a numéraire, 2 input error
* ``closure``: 0 bounded, 1 unbounded, 3 inconclusive, 2 input error
* ``prove``: 0 all steps passed, 1 otherwise, 2 input error
* ``oracle``: 0 no disagreement outside the margin, 1 disagreement, 2 input error
* ``fuzz``: 0 no inconsistent instance, 1 otherwise
* ``verify``: 0 all embedded certificates re-check, 1 otherwise, 2 input error
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time

from . import fuzz, market
from .closure import Bounded, ClosureConfig, Unbounded, verify_theorem
from .core import ConvexBody, DimensionError, decode_rv, encode_rv, format_rational, parse_rational, representation
from .numeraire import NotInBody, classify
from .prooflab import run_pipeline
from .verify import verify_report

log = logging.getLogger("numeraire_lab")


class InputError(Exception):
    pass


def _digest(inputs) -> str:
    blob = json.dumps(inputs, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _emit(command: str, inputs, result, seed=None) -> None:
    doc = {"command": command, "inputs_digest": _digest(inputs), "seed": seed, "result": result}
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _load_body(path: str) -> ConvexBody:
    data = _load_json(path)
    if isinstance(data, dict) and "body" in data:
        data = data["body"]
    try:
        return ConvexBody.from_json(data)
    except (ValueError, TypeError, KeyError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def parse_g(text: str, body: ConvexBody):
    """An index into the body's points, or a vector as JSON array or comma list."""
    text = text.strip()
    if text.lstrip("-").isdigit():
        i = int(text)
        if not 0 <= i < len(body.points):
            raise InputError(f"generator index {i} out of range (body has {len(body.points)} points)")
        return body.points[i]
    try:
        items = json.loads(text) if text.startswith("[") else text.split(",")
        g = decode_rv(items)
    except (ValueError, TypeError) as exc:
        raise InputError(f"cannot parse g: {exc}") from exc
    if len(g) != body.n:
        raise InputError(f"g has {len(g)} entries, the body lives on {body.n} atoms")
    return g


def _context(args):
    body = _load_body(args.body)
    g = parse_g(args.g, body)
    return body, g, {"body": body.to_json(), "g": encode_rv(g)}


def _rational_list(text: str):
    try:
        return decode_rv(text.split(","))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


# ---------------------------------------------------------------------------
# commands


def cmd_check(args) -> int:
    body, g, ctx = _context(args)
    reason, out, witness = classify(g, body)
    result = {**ctx, "numeraire": reason in ("numeraire", "trivial"), "reason": reason, **out.to_json()}
    if witness is not None:
        lam, mu = representation(body, witness.dominator)
        result["dominator"] = {"value": encode_rv(witness.dominator), "lambda": encode_rv(lam), "mu": encode_rv(mu)}
    _emit("check", ctx, result)
    return 0 if result["numeraire"] else 1


def cmd_closure(args) -> int:
    body, g, ctx = _context(args)
    cap = parse_rational(args.norm_cap) if args.norm_cap is not None else None
    config = ClosureConfig(max_rounds=args.max_rounds, norm_cap=cap)
    rep = verify_theorem(g, body, config)
    result = {**ctx, **rep.to_json(), "closure": rep.closure.to_json()}
    _emit("closure", {**ctx, "max_rounds": args.max_rounds, "norm_cap": args.norm_cap}, result)
    if isinstance(rep.closure, Bounded):
        return 0
    return 1 if isinstance(rep.closure, Unbounded) else 3


def cmd_prove(args) -> int:
    body, g, ctx = _context(args)
    report = run_pipeline(g, body)
    _emit("prove", ctx, {**ctx, "report": report.to_json()})
    return 0 if report.passed else 1


def cmd_example(args) -> int:
    xi = _rational_list(args.xi) if args.xi else market.DEFAULT_XI
    p = _rational_list(args.p) if args.p else None
    try:
        space = market.FiniteProbSpace(p) if p else market.FiniteProbSpace.uniform(len(xi))
        model = market.MarketModel(space, xi)
        inputs = {"xi": encode_rv(xi), "p": encode_rv(space.p)}
        if args.grid:
            grid = market.ConstraintGrid.of(args.grid.split(","))
            inputs["grid"] = [format_rational(v) for v in grid.gammas]
            result = market.scenario_report(market.build_scenario(model, grid))
        else:
            result = {
                "threshold_gamma": format_rational(market.threshold_gamma(model.xi_min)),
                "table": market.threshold_table(model),
            }
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _emit("example", inputs, result)
    return 0


def cmd_fuzz(args) -> int:
    jobs = fuzz.jobs_from_env(args.jobs)
    config = ClosureConfig(max_rounds=args.max_rounds)
    start = time.perf_counter()
    summary, records = fuzz.run_fuzz(args.seed, args.count, args.atoms, args.gens, jobs, config, args.pipeline)
    log.info("fuzz: %d instances in %.2fs with %d job(s)", args.count, time.perf_counter() - start, jobs)
    for inst in summary["inconsistent_instances"]:
        log.error("inconsistent instance: %s", json.dumps(inst))
    inputs = {"count": args.count, "atoms": args.atoms, "gens": args.gens, "max_rounds": args.max_rounds, "pipeline": args.pipeline}
    _emit("fuzz", inputs, summary, seed=args.seed)
    return 1 if summary["status"]["inconsistent"] else 0


def cmd_oracle(args) -> int:
    body, g, ctx = _context(args)
    if body.n > 3:
        raise InputError("the grid oracle handles at most 3 atoms")
    cmp = fuzz.compare_with_oracle(g, body, mesh=args.mesh)
    _emit("oracle", {**ctx, "mesh": args.mesh}, {**ctx, "mesh": f"1/{args.mesh}", "margin": format_rational(cmp.margin), **cmp.to_json()})
    return 0 if cmp.agrees or not cmp.inside_margin else 1


def cmd_verify(args) -> int:
    doc = _load_json(args.report)
    try:
        checks = verify_report(doc)
    except (ValueError, TypeError, KeyError, DimensionError) as exc:
        raise InputError(f"malformed report: {exc}") from exc
    ok = all(c["ok"] for c in checks)
    _emit("verify", doc, {"checks": checks, "count": len(checks), "all_ok": ok})
    return 0 if ok else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="numeraire-lab", description="Exact numéraire checks on finite probability spaces.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def body_and_g(p):
        p.add_argument("body", help='JSON file {"points": [...], "rays": [...]}')
        p.add_argument("--g", required=True, help="point index, or vector such as 1,1 or '[\"1/2\",\"1\"]'")

    p = sub.add_parser("check", help="is g a numéraire of the body?")
    body_and_g(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("closure", help="closure under short positions in g")
    body_and_g(p)
    p.add_argument("--max-rounds", type=int, default=50)
    p.add_argument("--norm-cap", default=None, help="rational cap on generator sup-norm")
    p.set_defaults(func=cmd_closure)

    p = sub.add_parser("prove", help="run the step-by-step proof pipeline")
    body_and_g(p)
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("example", help="square-root constrained market scenario")
    p.add_argument("--xi", default=None, help="terminal prices, e.g. 1/10,1,10")
    p.add_argument("--p", default=None, help="atom probabilities (default uniform)")
    p.add_argument("--grid", default=None, help="gamma grid, e.g. 0,1/25,1/4,1; omit for the threshold table")
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("fuzz", help="cross-validate the LP test against the closure")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--atoms", type=int, default=6)
    p.add_argument("--gens", type=int, default=8)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--max-rounds", type=int, default=50)
    p.add_argument("--pipeline", action="store_true", help="also run the proof pipeline on feasible instances")
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("oracle", help="compare the LP verdict with a simplex grid search")
    body_and_g(p)
    p.add_argument("--mesh", type=int, default=128)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="re-check every certificate in a report without a solver")
    p.add_argument("report")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        log.error("%s", exc)
        return 2
    except (NotInBody, DimensionError) as exc:
        log.error("invalid input: %s", exc)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
