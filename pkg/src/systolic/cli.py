"""Command line entry point: ``systolic <command> --m M [options]``.

Exit codes: 0 success, 2 invariant failure or bad input, 3 a time limit cut a
search short and the printed value is the best found rather than a certified one.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from systolic import pipeline
from systolic.homology import OrientationError
from systolic.hyperbolic import ClosureError, RankError
from systolic.surface import DomainError, build_surface, to_dot
from systolic.symmetry import (
    axis_class,
    group_table,
    orbit_count_burnside,
    restrict,
    setwise_stabilizer,
    subset_orbit_representatives,
)

EXIT_OK, EXIT_INVARIANT, EXIT_TIMEOUT = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--m", type=int, required=True, help="sides of the tesselating polygons (>= 5)")
    common.add_argument("--output", choices=("json", "csv", "dot"), default=None)
    common.add_argument("--cache-dir", default=None, help=f"cache root (default ${pipeline.CACHE_ENV} or ./cache)")
    common.add_argument("--no-cache", action="store_true")
    common.add_argument("--time-limit", type=float, default=None, help="seconds per search")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--solver", choices=("bridge", "builtin"), default="bridge")
    common.add_argument("--no-symmetry-breaking", action="store_true")
    common.add_argument("--fd-step", type=float, default=1e-5)
    common.add_argument("--rank-tol", type=float, default=1e-6)
    common.add_argument("--newton-tol", type=float, default=1e-12)
    common.add_argument("--unbounded-runtime", action="store_true",
                        help="compute resource-bound cells instead of skipping them")
    common.add_argument("--export", default=None, help="directory for polygon JSON and Jacobian CSV")

    p = argparse.ArgumentParser(prog="systolic", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("surface", parents=[common], help="systoles and their intersection graph")
    f = sub.add_parser("filling", parents=[common], help="smallest or largest minimal filling set")
    f.add_argument("kind", choices=("min", "max"))
    sub.add_parser("rank", parents=[common], help="rank of the systoles in rational homology")
    sub.add_parser("index", parents=[common], help="index of the critical point")
    o = sub.add_parser("orbits", parents=[common], help="orbits of zero patterns in the axis-1 class")
    o.add_argument("--max-size", type=int, required=True)
    t = sub.add_parser("table", parents=[common], help="one summary row")
    t.add_argument("--skip", action="append", default=[], choices=pipeline.COLUMNS[3:],
                   help="leave a column out (repeatable)")
    return p


def _config(args) -> pipeline.RunConfig:
    return pipeline.RunConfig(
        solver=args.solver, time_limit=args.time_limit, threads=args.threads,
        symmetry=not args.no_symmetry_breaking, fd_step=args.fd_step, rank_tol=args.rank_tol,
        newton_tol=args.newton_tol, unbounded=args.unbounded_runtime,
        skip=tuple(getattr(args, "skip", ())), export_dir=args.export)


def _emit(out, obj, fmt: str) -> None:
    if fmt == "json":
        out.write(json.dumps(obj, indent=1, sort_keys=True) + "\n")
    else:
        out.write(obj if obj.endswith("\n") else obj + "\n")


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _surface(args, out) -> int:
    model = build_surface(args.m)
    fmt = args.output or "json"
    if fmt == "dot":
        _emit(out, to_dot(model), fmt)
    elif fmt == "csv":
        labels = model.labels(range(model.n))
        _emit(out, _csv([("a", "b")] + [(labels[a], labels[b]) for a, b in model.square_to_systoles]), fmt)
    else:
        _emit(out, pipeline.surface_json(args.m), fmt)
    degrees = pipeline.surface_json(args.m)["degrees"]
    if degrees != [4]:
        raise pipeline.InvariantError(f"intersection graph degrees {degrees}, expected all 4")
    return EXIT_OK


def _single(kind: str, args, out, cache) -> int:
    c = pipeline.cell(args.m, kind, _config(args), cache)
    fmt = args.output or "csv"
    if fmt == "json":
        _emit(out, {"schema_version": pipeline.SCHEMA_VERSION, "m": args.m, "kind": kind,
                    **c.to_json(), "result": {k: v for k, v in c.detail.items() if k != "value"}}, fmt)
    else:
        _emit(out, c.text(), fmt)
    if c.provenance == "skipped":
        print(f"{kind}: skipped ({c.detail.get('reason')}); pass --unbounded-runtime", file=sys.stderr)
    return EXIT_OK if c.complete else EXIT_TIMEOUT


def _orbits(args, out) -> int:
    perms = group_table(args.m)
    members = axis_class(build_surface(args.m), 1)
    local = restrict(setwise_stabilizer(perms, members), members)
    reps = subset_orbit_representatives(local, args.max_size)
    if len(reps) != orbit_count_burnside(local, args.max_size):
        raise pipeline.InvariantError("orbit enumeration disagrees with Burnside's count")
    fmt = args.output or "csv"
    if fmt == "json":
        _emit(out, {"schema_version": pipeline.SCHEMA_VERSION, "m": args.m, "max_size": args.max_size,
                    "count": len(reps), "representatives": [list(r) for r in reps]}, fmt)
    else:
        _emit(out, str(len(reps)), fmt)
    return EXIT_OK


def _table(args, out, cache) -> int:
    cells = pipeline.table_row(args.m, _config(args), cache)
    fmt = args.output or "csv"
    if fmt == "json":
        _emit(out, pipeline.row_json(args.m, cells), fmt)
    else:
        _emit(out, pipeline.row_csv(cells), fmt)
        print("provenance: " + ",".join(f"{c.name}={c.provenance}" for c in cells), file=sys.stderr)
    return EXIT_OK if all(c.complete for c in cells) else EXIT_TIMEOUT


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = _parser().parse_args(argv)
    if args.m < 5:
        print("error: --m must be at least 5", file=sys.stderr)
        return EXIT_INVARIANT
    if args.output == "dot" and args.command != "surface":
        print("error: dot output is only available for 'surface'", file=sys.stderr)
        return EXIT_INVARIANT
    cache = pipeline.Cache(args.cache_dir, enabled=not args.no_cache)
    try:
        if args.command == "surface":
            return _surface(args, out)
        if args.command == "orbits":
            return _orbits(args, out)
        if args.command == "table":
            return _table(args, out, cache)
        kind = args.kind if args.command == "filling" else args.command
        return _single(kind, args, out, cache)
    except (pipeline.InvariantError, pipeline.CacheCorrupted, RankError, ClosureError,
            OrientationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
