"""Command-line front end: every experiment as a reproducible batch run.

Output is JSON by default, with a ``provenance`` block (command, params,
seed, version, timestamp) next to the ``result``.  CSV output carries the
same provenance as ``#``-prefixed header lines followed by a table.

Exit codes: 0 success, 2 domain error, 3 numeric or tolerance failure
(including a check that did not pass), 64 malformed usage.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from ._errors import DomainError, NumericError
from ._parallel import THREADS_ENV

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC, EXIT_USAGE = 0, 2, 3, 64
COMMANDS = ("volumes", "dim-estimate", "double-cone-check", "section-bound", "section-search",
            "cantor", "carpet", "fubini-check")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


@dataclass
class Outcome:
    result: dict
    table: list[dict] = field(default_factory=list)
    passed: bool = True


# ---------------------------------------------------------------------------
# commands

def _cmd_volumes(a) -> Outcome:
    from .space_volumes import SpaceTag, ball_radius, ball_volume, unit_constants
    space = SpaceTag.parse(a.space)
    kappa, omega = unit_constants(a.n)
    res = {"space": space.value, "n": a.n, "kappa_n": kappa, "omega_n": omega}
    if a.r is not None:
        res["r"] = a.r
        res["volume"] = ball_volume(space, a.n, a.r)
    if a.V is not None:
        res["V"] = a.V
        res["radius"] = ball_radius(space, a.n, a.V)
    if a.r is None and a.V is None:
        raise UsageError("volumes: give --r and/or --V")
    return Outcome(res, [res])


def _dim_target(a):
    from .bodies import HalfspaceBody, ideal_hull
    from .dimension import limit_set_directions
    from .fractals import CantorSpec, cantor_ideal_points
    if a.target == "cantor":
        return cantor_ideal_points(CantorSpec(a.alpha, a.depth), poles=False)
    if a.target == "arc":
        t = np.linspace(0, a.arc, max(2, a.points))
        return np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=1)
    if a.target == "points":
        rng = np.random.default_rng(a.seed)
        x = rng.standard_normal((a.points, a.n))
        return x / np.linalg.norm(x, axis=1, keepdims=True)
    if a.target == "cantor-hull":
        body = ideal_hull(cantor_ideal_points(CantorSpec(a.alpha, a.depth)))
    else:
        if not a.body:
            raise UsageError("dim-estimate: --target body needs --body FILE")
        with open(a.body) as fh:
            body = HalfspaceBody.from_json(fh.read())
    return limit_set_directions(body, a.d, a.samples, a.seed)


def _cmd_dim(a) -> Outcome:
    from .dimension import estimate_upper_dim
    est = estimate_upper_dim(_dim_target(a), (a.eps_min, a.eps_max), a.levels, a.samples, a.seed,
                             a.bootstrap)
    prof = est.profile
    table = [] if prof is None else [
        {"epsilon": e, "measure": m, "stderr": s}
        for e, m, s in zip(prof.epsilons.tolist(), prof.measures.tolist(), prof.stderrs.tolist())]
    res = {"dim": est.dim, "ci": est.ci, "slope": est.slope, "degenerate": est.degenerate,
           "empty": est.empty, "profile": table}
    return Outcome(res, table)


def _cmd_double_cone(a) -> Outcome:
    from .bodies import KLEIN, random_body, double_cone_check
    from .bounds import alpha
    rng = np.random.default_rng(a.seed)
    rows, total = [], 0
    for i in range(a.bodies):
        m = int(rng.integers(1, a.m + 1))
        body = random_body(a.n, m, a.r0, int(rng.integers(2**63)), ambient=KLEIN)
        v = double_cone_check(body, a.outer, a.inner, a.probes, a.perturbations, a.seed + i)
        total += v
        rows.append({"body": i, "m": m, "violations": v})
    res = {"alpha": alpha(a.r0, a.outer, a.inner), "bodies": a.bodies, "violations": total}
    return Outcome(res, rows, passed=total == 0)


def _inputs(a):
    from .sections import BoundInputs
    return BoundInputs(a.n, a.k, a.V, a.r0)


def _cmd_section_bound(a) -> Outcome:
    from .sections import (euc_section_bound, hyp_epsilon_bound, hyp_section_bound,
                           rigorous_section_bound)
    from .space_volumes import SpaceTag, ball_radius
    b = _inputs(a)
    space = SpaceTag.parse(a.space)
    if space is SpaceTag.HYPERBOLIC:
        bound = hyp_section_bound(b)
        res = {"bound": bound.exact, **bound.as_dict(), "epsilon": hyp_epsilon_bound(b).as_dict()}
    elif space is SpaceTag.EUCLIDEAN:
        bound = euc_section_bound(b)
        res = {"bound": bound.exact, **bound.as_dict()}
    else:
        raise DomainError("section bounds are defined for E and H only")
    res["rigorous"] = rigorous_section_bound(space, b)
    res["ball_radius"] = ball_radius(space, a.n, a.V)
    res.update(space=space.value, n=a.n, k=a.k, V=a.V, r0=a.r0)
    row = {k: v for k, v in res.items() if not isinstance(v, dict)}
    return Outcome(res, [row])


def _cmd_section_search(a) -> Outcome:
    from .bodies import EUCLIDEAN, KLEIN, HalfspaceBody, random_body
    from .klein import hyperbolic_volume_mc
    from .sections import search_report
    if a.body:
        with open(a.body) as fh:
            body = HalfspaceBody.from_json(fh.read())
    else:
        ambient = KLEIN if a.space.upper() == "H" else EUCLIDEAN
        body = random_body(a.n, a.m, a.r0, a.seed, ambient=ambient, outer=a.outer)
    V, V_err = a.V, 0.0
    if V is None:
        est = hyperbolic_volume_mc(body, a.samples, a.seed)
        if est.infinite:
            raise DomainError("body has infinite volume; no section bound applies")
        V, V_err = est.estimate, est.stderr
    rep = search_report(body, a.k, a.trials, a.seed, V)
    rep.update(V=V, V_stderr=V_err, n=body.n, ambient=body.ambient)
    row = {k: v for k, v in rep.items() if not isinstance(v, dict)}
    return Outcome(rep, [row])


def _cmd_cantor(a) -> Outcome:
    from .fractals import cantor_dimension, cantor_hull_table, truncated_hull_volume, CantorSpec
    rows = cantor_hull_table(a.alpha, range(1, a.depth + 1))
    res = {"alpha": a.alpha, "depth": a.depth, "dimension": cantor_dimension(a.alpha),
           "partial_sum": rows[-1]["partial_sum"], "tail_bound": rows[-1]["tail_bound"],
           "truncated_hull_volume": truncated_hull_volume(CantorSpec(a.alpha, a.depth)), "table": rows}
    return Outcome(res, rows)


def _cmd_carpet(a) -> Outcome:
    from .fractals import (CarpetSpec, carpet_cells, carpet_dimension, middle_thirds, parity_pattern,
                           parse_pattern, sierpinski_carpet, unit_interval_pattern)
    presets = {"sierpinski": sierpinski_carpet, "middle-thirds": middle_thirds,
               "unit-interval": unit_interval_pattern}
    if a.pattern:
        text = a.pattern
        if os.path.exists(text):
            with open(text) as fh:
                text = fh.read()
        spec = CarpetSpec(a.n, a.N, tuple(parse_pattern(text)), a.depth)
    elif a.preset == "parity":
        spec = parity_pattern(a.n, a.L, a.depth)
    elif a.preset:
        spec = presets[a.preset](a.depth)
    else:
        raise UsageError("carpet: give --pattern or --preset")
    cells = carpet_cells(spec) if a.cells else None
    res = {"n": spec.n, "N": spec.N, "pattern_size": len(spec.M), "depth": spec.depth,
           "dimension": carpet_dimension(spec), "cell_count": len(spec.M) ** spec.depth,
           "side": float(spec.N) ** -spec.depth}
    table = [res]
    if cells is not None:
        table = [{**{f"x{i + 1}": float(x) for i, x in enumerate(c)}, "side": s} for c, s in cells]
        res["cells"] = table
    return Outcome(res, table)


def _fubini_function(a):
    name = a.function
    if name == "one":
        return lambda x: np.ones(len(x))
    if name == "hemisphere":
        return lambda x: (x[:, 0] > 0).astype(float)
    if name == "cap":
        c = math.cos(a.angle)
        return lambda x: (x[:, -1] >= c).astype(float)
    if name == "quadratic":
        return lambda x: x[:, 0] ** 2
    raise UsageError(f"unknown function {name!r}")


def _cmd_fubini(a) -> Outcome:
    from .sections import fubini_check
    d, nst, z = fubini_check(_fubini_function(a), a.n, a.k, a.sphere_samples, a.plane_samples, a.seed)
    res = {"function": a.function, "n": a.n, "k": a.k, "direct": d, "nested": nst, "zscore": z}
    return Outcome(res, [res], passed=abs(z) < a.z_max)


# ---------------------------------------------------------------------------
# parser

def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default from ${THREADS_ENV}, else 1); results do not depend on it")
    p.add_argument("--output", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypconvex", description="Convex bodies in hyperbolic and Euclidean space.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("volumes", help="ball volumes and radii")
    p.add_argument("--space", default="H")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=float)
    p.add_argument("--V", type=float)
    _common(p)
    p.set_defaults(fn=_cmd_volumes)

    p = sub.add_parser("dim-estimate", help="upper Minkowski dimension of a set of directions")
    p.add_argument("--target", choices=("cantor", "arc", "points", "cantor-hull", "body"), default="cantor")
    p.add_argument("--alpha", type=float, default=1 / 3)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--arc", type=float, default=math.pi / 2, help="arc length for --target arc")
    p.add_argument("--points", type=int, default=20000)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--body", help="JSON body file for --target body")
    p.add_argument("--d", type=float, default=0.999, help="Klein radius for the limit-set proxy")
    p.add_argument("--eps-min", type=float, default=1e-3)
    p.add_argument("--eps-max", type=float, default=1e-1)
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--bootstrap", type=int, default=200)
    _common(p)
    p.set_defaults(fn=_cmd_dim)

    p = sub.add_parser("double-cone-check", help="count double-cone violations on random Klein bodies")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--m", type=int, default=20, help="max number of half-spaces")
    p.add_argument("--r0", type=float, default=0.1)
    p.add_argument("--outer", type=float, default=0.9)
    p.add_argument("--inner", type=float, default=0.7)
    p.add_argument("--bodies", type=int, default=100)
    p.add_argument("--probes", type=int, default=100)
    p.add_argument("--perturbations", type=int, default=10)
    _common(p)
    p.set_defaults(fn=_cmd_double_cone)

    p = sub.add_parser("section-bound", help="section radius bounds")
    p.add_argument("--space", default="H")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--V", type=float, required=True)
    p.add_argument("--r0", type=float, required=True)
    _common(p)
    p.set_defaults(fn=_cmd_section_bound)

    p = sub.add_parser("section-search", help="search random planes for a small section")
    p.add_argument("--body", help="JSON body file; otherwise a random body is generated")
    p.add_argument("--space", default="H")
    p.add_argument("--n", type=int, default=7)
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--r0", type=float, default=0.1)
    p.add_argument("--outer", type=float, default=0.6)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--V", type=float, default=None, help="body volume (default: Monte Carlo)")
    p.add_argument("--samples", type=int, default=200000)
    p.add_argument("--trials", type=int, default=10000)
    _common(p)
    p.set_defaults(fn=_cmd_section_search)

    p = sub.add_parser("cantor", help="hull volume series for C(alpha) on the equator")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--depth", type=int, required=True)
    _common(p)
    p.set_defaults(fn=_cmd_cantor)

    p = sub.add_parser("carpet", help="generalized Sierpinski carpets")
    p.add_argument("--preset", choices=("sierpinski", "middle-thirds", "unit-interval", "parity"))
    p.add_argument("--pattern", help="JSON array of index tuples, or a file containing one")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--L", type=int, default=2, help="half the subdivision count for --preset parity")
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--cells", action="store_true", help="emit the cell list")
    _common(p)
    p.set_defaults(fn=_cmd_carpet)

    p = sub.add_parser("fubini-check", help="sphere average versus Grassmannian-nested average")
    p.add_argument("--function", choices=("one", "hemisphere", "cap", "quadratic"), default="hemisphere")
    p.add_argument("--angle", type=float, default=math.pi / 6)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--sphere-samples", type=int, default=100000)
    p.add_argument("--plane-samples", type=int, default=2000)
    p.add_argument("--z-max", type=float, default=3.0)
    _common(p)
    p.set_defaults(fn=_cmd_fubini)
    return parser


# ---------------------------------------------------------------------------
# output

def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


_SKIP = {"fn", "command", "output", "format", "threads"}


def provenance(args, timestamp: str | None = None) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in _SKIP}
    return {
        "command": args.command,
        "params": _jsonable(params),
        "seed": args.seed,
        "version": __version__,
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def render(args, outcome: Outcome, timestamp: str | None = None) -> str:
    prov = provenance(args, timestamp)
    if args.format == "json":
        doc = {"provenance": prov, "result": _jsonable(outcome.result), "passed": outcome.passed}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    for key in ("command", "seed", "version", "timestamp"):
        buf.write(f"# {key}: {prov[key]}\n")
    buf.write(f"# params: {json.dumps(prov['params'], sort_keys=True)}\n")
    rows = [_jsonable(r) for r in outcome.table]
    if rows:
        cols = list(rows[0].keys())
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: (json.dumps(v) if isinstance(v, (dict, list)) else v) for k, v in r.items()})
    return buf.getvalue()


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    output: str | None = None
    format: str = "json"

    def argv(self) -> list[str]:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        out = [self.command, "--seed", str(self.seed), "--format", self.format]
        if self.output:
            out += ["--output", self.output]
        for key, value in self.params.items():
            flag = "--" + key.replace("_", "-") if len(key) > 1 else "--" + key
            if value is True:
                out.append(flag)
            elif value is not False and value is not None:
                out += [flag, str(value)]
        return out


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Execute a configuration; unknown parameter keys are rejected as usage errors."""
    try:
        argv = config.argv()
    except UsageError as exc:
        (stderr or sys.stderr).write(f"{exc}\n")
        return EXIT_USAGE
    return main(argv, stdout, stderr)


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    old_threads = os.environ.get(THREADS_ENV)
    if args.threads is not None:
        os.environ[THREADS_ENV] = str(args.threads)
    try:
        outcome = args.fn(args)
        text = render(args, outcome)
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except NumericError as exc:
        stderr.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except DomainError as exc:
        stderr.write(f"domain error: {exc}\n")
        return EXIT_DOMAIN
    finally:
        if args.threads is not None:
            if old_threads is None:
                os.environ.pop(THREADS_ENV, None)
            else:
                os.environ[THREADS_ENV] = old_threads
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_OK if outcome.passed else EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
