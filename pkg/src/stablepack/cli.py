"""Command line: ``stablepack gen | solve | eval | export | stats``.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, SchemaVersionError, VerificationError
from .instances import derive_seed, generate_set
from .records import (
    SOLUTION_SCHEMA,
    SolutionRecord,
    SolverConfig,
    build_record,
    dumps,
    instance_from_json,
    instance_to_json,
    iter_jsonl,
    layout_document,
    wavefront_obj,
)
from .solvers import run_solver
from .stability import StabilityParams, audit_layout

log = logging.getLogger("stablepack")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3
JOBS_ENV = "STABLEPACK_JOBS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def _open_out(path):
    if path is None or str(path) == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


# ---------------------------------------------------------------- solving

def _solve_one(task):
    index, obj, config, params, timings = task
    try:
        inst = instance_from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        return {"schema": SOLUTION_SCHEMA, "index": index, "error": f"malformed instance: {exc}"}, 0.0
    cfg = SolverConfig(**{**config.__dict__, "seed": derive_seed(config.seed, "solve", index)})
    use_params = params if params is not None else inst.params
    t0 = time.perf_counter()
    res = run_solver(cfg.name, inst, rollouts=cfg.rollouts, k=cfg.k,
                     exploration_c=cfg.exploration_c, seed=cfg.seed, params=use_params)
    elapsed = time.perf_counter() - t0
    rec = build_record(inst, res, cfg, wall_time=elapsed if timings else None)
    out = rec.to_json()
    out["index"] = index
    return out, elapsed


def solve_objects(objs, config: SolverConfig, params: StabilityParams | None,
                  jobs: int = 1, timings: bool = False):
    """Solve a list of instance JSON objects; yields ``(record_json, wall_time)`` in order."""
    tasks = [(i, obj, config, params, timings) for i, obj in enumerate(objs)]
    if jobs <= 1 or len(tasks) <= 1:
        for t in tasks:
            yield _solve_one(t)
        return
    with get_context("fork").Pool(jobs) as pool:
        yield from pool.imap(_solve_one, tasks, chunksize=max(1, len(tasks) // (jobs * 8)))


def summarize(records: list[dict], wall_time: float | None = None) -> dict:
    ok = [r for r in records if "error" not in r]
    etas = np.array([r["eta"] for r in ok], dtype=np.float64)
    ratios = []
    violations = 0
    for r in ok:
        rec = SolutionRecord.from_json(r, verify=False)
        audit = audit_layout([(s.box, s.weight) for s in rec.steps], rec.params)
        violations += audit.violations
        ratios.extend(float(x) for x in audit.support_ratios)
    out = {
        "instances": len(records),
        "errors": len(records) - len(ok),
        "mean_eta": float(etas.mean()) if etas.size else None,
        "var_eta": float(etas.var()) if etas.size else None,
        "mean_support_ratio": float(np.mean(ratios)) if ratios else None,
        "violations": violations,
    }
    if wall_time is not None:
        out["wall_time"] = wall_time
    return out


def _print_summary(summary: dict, stream=None) -> None:
    stream = sys.stderr if stream is None else stream
    mean, var = summary["mean_eta"], summary["var_eta"]
    eta = "n/a" if mean is None else f"{100 * mean:.2f}% ± {var:.4f}"
    rows = [
        ("instances", summary["instances"]),
        ("errors", summary["errors"]),
        ("eta (mean ± var)", eta),
        ("mean support ratio", "n/a" if summary["mean_support_ratio"] is None
         else f"{summary['mean_support_ratio']:.4f}"),
        ("constraint violations", summary["violations"]),
    ]
    if "wall_time" in summary:
        rows.append(("wall time [s]", f"{summary['wall_time']:.2f}"))
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v}", file=stream)


# ---------------------------------------------------------------- commands

def cmd_gen(args) -> int:
    try:
        insts = generate_set(args.scheme, args.count, args.seed)
    except InvalidInputError as exc:
        print(f"error: {exc}. Known schemes: S1_<n|M>, S2_<n|M>, M_<n|M>, "
              f"B1_<n|M>, B2_<n|M>, B3_<n|M>, BM_<n|M>, CASE", file=sys.stderr)
        return EXIT_USAGE
    fh, close = _open_out(args.out)
    try:
        for inst in insts:
            fh.write(dumps(instance_to_json(inst)) + "\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _params_from_args(args) -> StabilityParams | None:
    if args.rs is None and args.rw is None:
        return None
    return StabilityParams.make(r_s=args.rs, r_w=args.rw)


def cmd_solve(args) -> int:
    objs = list(iter_jsonl(args.instances))
    config = SolverConfig(
        name=args.solver, rollouts=args.rollouts, k=args.k, exploration_c=args.c,
        seed=args.seed, alpha1=args.alpha1, alpha2=args.alpha2,
    )
    params = _params_from_args(args)
    if args.solver == "greedy" and params is not None:
        log.warning("the greedy solver ignores stability constraints")
    t0 = time.perf_counter()
    records = []
    fh, close = _open_out(args.out)
    try:
        for rec, _ in solve_objects(objs, config, params, args.jobs, args.timings):
            records.append(rec)
            fh.write(dumps(rec) + "\n")
    finally:
        if close:
            fh.close()
    summary = summarize(records, time.perf_counter() - t0)
    _print_summary(summary)
    if args.summary:
        Path(args.summary).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if summary["errors"]:
        return EXIT_USAGE
    return EXIT_OK


def _load_solutions(path) -> list[dict]:
    return [obj for obj in iter_jsonl(path)]


def cmd_eval(args) -> int:
    failures = 0
    records = []
    for i, obj in enumerate(_load_solutions(args.solutions)):
        if "error" in obj:
            print(f"record {i}: solver error: {obj['error']}", file=sys.stderr)
            failures += 1
            continue
        try:
            SolutionRecord.from_json(obj, verify=True)
        except (VerificationError, SchemaVersionError, KeyError, ValueError) as exc:
            print(f"record {i}: {exc}", file=sys.stderr)
            failures += 1
            continue
        records.append(obj)
    summary = summarize(records)
    summary["failures"] = failures
    _print_summary(summary, sys.stdout)
    print(f"{'verification failures':<21}  {failures}")
    return EXIT_VERIFY if failures else EXIT_OK


def cmd_export(args) -> int:
    objs = [o for o in _load_solutions(args.solutions) if "error" not in o]
    try:
        records = [SolutionRecord.from_json(o) for o in objs]
    except (VerificationError, SchemaVersionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    if args.format == "json":
        text = json.dumps(layout_document(records), sort_keys=True, indent=1) + "\n"
    else:
        text = wavefront_obj(records)
    fh, close = _open_out(args.out)
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_stats(args) -> int:
    objs = _load_solutions(args.path)
    kinds = {str(o.get("schema", "")).partition("@")[0] for o in objs}
    if kinds == {"stablepack/instance"}:
        insts = [instance_from_json(o) for o in objs]
        n_items = np.array([i.n_items for i in insts])
        out = {
            "instances": len(insts),
            "mean_items": float(n_items.mean()),
            "min_items": int(n_items.min()),
            "max_items": int(n_items.max()),
            "mean_L": float(np.mean([i.L for i in insts])),
            "mean_W": float(np.mean([i.W for i in insts])),
            "mean_H": float(np.mean([i.H for i in insts])),
        }
    elif kinds <= {"stablepack/solution"}:
        out = summarize([o for o in objs])
    else:
        print(f"error: unrecognised or mixed record kinds {sorted(kinds)}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stablepack", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate an instance set (JSON lines)")
    g.add_argument("--scheme", required=True)
    g.add_argument("--count", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None, help="output path (default stdout)")

    s = sub.add_parser("solve", help="solve every instance of a set")
    s.add_argument("--instances", required=True)
    s.add_argument("--solver", choices=["greedy", "mcts", "sample", "random"], default="greedy")
    s.add_argument("--rollouts", type=int, default=2000, help="MCTS simulations per instance")
    s.add_argument("--k", type=int, default=128, help="episodes per instance for --solver sample")
    s.add_argument("--c", type=float, default=math.sqrt(2), help="UCT exploration constant")
    s.add_argument("--rs", type=float, default=None, help="enable the support constraint with this ratio")
    s.add_argument("--rw", type=float, default=None, help="enable the weight constraint with this ratio")
    s.add_argument("--alpha1", type=float, default=1.0)
    s.add_argument("--alpha2", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs", type=int, default=_default_jobs(),
                   help=f"worker processes (default ${JOBS_ENV} or 1)")
    s.add_argument("--out", default=None, help="solutions path (default stdout)")
    s.add_argument("--summary", default=None, help="write the summary as JSON here")
    s.add_argument("--timings", action="store_true",
                   help="store per-instance wall time in records (breaks byte-identical output)")

    e = sub.add_parser("eval", help="re-verify a solutions file")
    e.add_argument("--solutions", required=True)

    x = sub.add_parser("export", help="export layouts for external viewers")
    x.add_argument("--solutions", required=True)
    x.add_argument("--format", required=True)
    x.add_argument("--out", default=None)

    st = sub.add_parser("stats", help="summarise an instance or solutions file")
    st.add_argument("path")
    return p


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "eval": cmd_eval, "export": cmd_export, "stats": cmd_stats}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "export" and args.format not in ("json", "obj"):
        print(f"error: unknown export format {args.format!r} (use json or obj)", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "solve" and (args.k < 1 or args.rollouts < 1 or args.jobs < 1):
        print("error: --k, --rollouts and --jobs must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SchemaVersionError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    raise SystemExit(main())
