"""Command-line front end.

Subcommands::

    bfrb run <config> [--max-iters N]
    bfrb compare <config>
    bfrb diagnose <trace> <solution> [--config C] [--delta D] [--method M] ...
    bfrb problems list
    bfrb problems export <name> [--set key=value ...] [-o file]

Exit codes for ``run``: 0 converged, 2 iteration cap, 3 divergence guard,
1 configuration or parameter error. ``diagnose`` exits 0 when every check
passes and 4 when one fails.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .bregman import euclidean, geometry_from_config, shannon_entropy, weighted_quadratic
from .diagnostics import diagnose
from .errors import BFRBError, ConfigError, InadmissibleParameters
from .io import (
    tomllib,
    d_schedule_from_config,
    dumps_problem,
    load_problem_file,
    load_toml,
    load_vector,
    read_trace_csv,
    run_from_trace,
    write_trace_csv,
)
from .problems import SHIPPED, get_problem
from .solvers import (
    METHODS,
    AdaptiveStepConfig,
    ConstantStepConfig,
    Termination,
    constant_step_interval,
    solve_frb_adaptive,
    solve_frb_constant,
    solve_projected_adaptive,
    solve_projected_constant,
    solve_proximal_point,
    solve_tseng_baseline,
)

log = logging.getLogger("bfrb")

EXIT_OK, EXIT_ERROR, EXIT_MAX_ITERS, EXIT_DIVERGED, EXIT_CHECK_FAILED = 0, 1, 2, 3, 4
EXIT_FOR_STATUS = {
    Termination.CONVERGED: EXIT_OK,
    Termination.MAX_ITERS: EXIT_MAX_ITERS,
    Termination.DIVERGENCE_GUARD: EXIT_DIVERGED,
}
ADAPTIVE = ("frb-adaptive", "projected-adaptive")
SOLVER_KEYS = {"method", "methods", "mu", "alpha", "delta", "mu0", "mu1", "d_schedule",
               "max_iters", "tol", "stop", "record_trace"}


def _setup_logging():
    level = os.environ.get("BFRB_LOG", "info").lower()
    levels = {"debug": logging.DEBUG, "info": logging.INFO, "quiet": logging.ERROR}
    if level not in levels:
        level = "info"
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(levels[level])
    log.propagate = False


# --------------------------------------------------------------------------
# configuration


class RunConfig:
    """A parsed run/compare configuration; paths resolve against the config's folder."""

    def __init__(self, data, base=Path(".")):
        self.data = data
        self.base = Path(base)
        self.seed = data.get("seed")
        if self.seed is not None and not isinstance(self.seed, int):
            raise ConfigError("seed: expected an integer")
        self.problem_section = data.get("problem")
        if not isinstance(self.problem_section, dict):
            raise ConfigError("problem: missing [problem] section")
        self.geometry_section = data.get("geometry", {})
        self.solver = data.get("solver", {})
        if not isinstance(self.solver, dict):
            raise ConfigError("solver: expected a table")
        unknown = set(self.solver) - SOLVER_KEYS
        if unknown:
            raise ConfigError(f"solver.{sorted(unknown)[0]}: unknown key")
        self.method_overrides = data.get("method", {})
        self.output = data.get("output", {})

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls(load_toml(path), path.parent)

    def path(self, key):
        value = self.output.get(key)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base / p

    def methods(self):
        if "methods" in self.solver:
            methods = self.solver["methods"]
            if not isinstance(methods, list) or not methods:
                raise ConfigError("solver.methods: expected a non-empty list")
        else:
            methods = [self.solver.get("method", "frb")]
        for m in methods:
            if m not in METHODS:
                raise ConfigError(f"solver.method: unknown method {m!r}; choose from {', '.join(METHODS)}")
        return methods

    def problem(self):
        sec = dict(self.problem_section)
        if "file" in sec:
            f = Path(sec.pop("file"))
            f = f if f.is_absolute() else self.base / f
            if not f.exists():
                raise ConfigError(f"problem.file: file not found: {f}")
            P = load_problem_file(f)
        else:
            name = sec.pop("name", None)
            if name is None:
                raise ConfigError("problem.name: missing (or give problem.file)")
            if name not in SHIPPED:
                raise ConfigError(f"problem.name: unknown problem {name!r}")
            if self.seed is not None and "seed" in SHIPPED[name].defaults:
                sec.setdefault("seed", self.seed)
            try:
                P = get_problem(name, **sec)
            except TypeError as exc:
                raise ConfigError(f"problem: bad override for {name!r}: {exc}") from exc
        if self.geometry_section:
            try:
                g = geometry_from_config(self.geometry_section, P.dimension)
            except KeyError as exc:
                raise ConfigError(f"geometry.{exc.args[0]}: missing") from exc
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"geometry.geometry: {exc}") from exc
            if not g.contains(P.v0) or not g.contains(P.v1):
                raise ConfigError(f"geometry.geometry: start point lies outside the domain of {g.name}")
            P = P.with_geometry(g)
        return P

    def solver_section(self, method):
        sec = {k: v for k, v in self.solver.items() if k not in ("method", "methods")}
        sec.update(self.method_overrides.get(method, {}))
        return sec


def _get(sec, key, kind, default):
    if key not in sec:
        return default
    try:
        return kind(sec[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver.{key}: cannot read {sec[key]!r} as {kind.__name__}") from exc


def build_config(sec, method, P, max_iters=None):
    """Solver configuration for ``method`` from a ``[solver]`` mapping."""
    delta = _get(sec, "delta", float, 0.1)
    common = dict(
        delta=delta,
        max_iters=max_iters if max_iters is not None else _get(sec, "max_iters", int, 10_000),
        tol=_get(sec, "tol", float, 1e-10),
        stop=_get(sec, "stop", str, "change"),
        record_trace=_get(sec, "record_trace", bool, True),
    )
    if method in ADAPTIVE:
        if "alpha" not in sec:
            raise ConfigError("solver.alpha: required for adaptive methods")
        return AdaptiveStepConfig(
            alpha=_get(sec, "alpha", float, None),
            mu0=_get(sec, "mu0", float, 1.0),
            mu1=_get(sec, "mu1", float, 1.0),
            d_schedule=d_schedule_from_config(sec.get("d_schedule")),
            **common,
        )
    mu = sec.get("mu")
    if mu is None:
        raise ConfigError(f"solver.mu: required for method {method!r}")
    if mu == "max":
        L = getattr(P.A, "lipschitz", None)
        if L is None:
            raise ConfigError("solver.mu: 'max' needs a declared Lipschitz constant")
        mu = constant_step_interval(delta, L, P.g.gamma)[1]
    elif isinstance(mu, str):
        raise ConfigError(f"solver.mu: expected a number or 'max', got {mu!r}")
    return ConstantStepConfig(mu=float(mu), **common)


def execute(P, method, cfg):
    if method == "frb":
        return solve_frb_constant(P, cfg)
    if method == "frb-adaptive":
        return solve_frb_adaptive(P, cfg)
    if method == "projected":
        return solve_projected_constant(P, cfg)
    if method == "projected-adaptive":
        return solve_projected_adaptive(P, cfg)
    if method == "tseng":
        return solve_tseng_baseline(P, cfg)
    if method == "ppa":
        return solve_proximal_point(P, cfg.mu, cfg.max_iters, cfg.tol, cfg.stop, cfg.record_trace, cfg.delta)
    raise ConfigError(f"solver.method: unknown method {method!r}")


def _report_error(exc):
    if isinstance(exc, InadmissibleParameters):
        rep = exc.report
        msg = f"error: inadmissible parameters [{rep.code}]: {rep.message}"
        if rep.interval is not None:
            msg += f" (admissible interval: {rep.interval[0]:.6g} .. {rep.interval[1]:.6g})"
    else:
        msg = f"error: [{getattr(exc, 'code', type(exc).__name__)}] {exc}"
    print(msg, file=sys.stderr)
    return EXIT_ERROR


# --------------------------------------------------------------------------
# subcommands


def cmd_run(args):
    try:
        rc = RunConfig.load(args.config)
        P = rc.problem()
        method = rc.methods()[0]
        cfg = build_config(rc.solver_section(method), method, P, args.max_iters)
        trace_path = rc.path("trace")
        if trace_path is not None and not cfg.record_trace:
            raise ConfigError("output.trace: needs solver.record_trace = true")
        log.info("running %s on %s (d=%d)", method, P.label, P.dimension)
        run = execute(P, method, cfg)
    except (BFRBError, ValueError) as exc:
        return _report_error(exc)
    if trace_path is not None:
        write_trace_csv(run, trace_path, iterates=bool(rc.output.get("iterates", True)))
        log.debug("trace written to %s", trace_path)
    summary = run.summary()
    summary_path = rc.path("summary")
    if summary_path is not None:
        summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return EXIT_FOR_STATUS[run.status]


COMPARE_COLUMNS = ["method", "status", "iterations", "a_evaluations", "wall_time_ms", "final_residual"]


def compare_rows(runs):
    return [
        [r.method, r.status.value, str(r.iterations), str(r.a_evals), f"{r.wall_time_ms:.3f}",
         repr(float(r.final_residual))]
        for r in runs
    ]


def format_table(rows, columns=COMPARE_COLUMNS):
    widths = [max(len(c), *(len(row[i]) for row in rows)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.rjust(w) if i else v.ljust(w) for i, (v, w) in enumerate(zip(row, widths)))
              for row in rows]
    return "\n".join(lines)


def cmd_compare(args):
    try:
        rc = RunConfig.load(args.config)
        methods = rc.methods()
        if len(methods) < 2:
            raise ConfigError("solver.methods: compare needs at least two methods")
        P = rc.problem()
        cfgs = [build_config(rc.solver_section(m), m, P, args.max_iters) for m in methods]
        runs = []
        for m, cfg in zip(methods, cfgs):
            log.info("running %s", m)
            runs.append(execute(P, m, cfg))
    except (BFRBError, ValueError) as exc:
        return _report_error(exc)
    rows = compare_rows(runs)
    csv_text = "\n".join(",".join(r) for r in [COMPARE_COLUMNS, *rows]) + "\n"
    out = rc.path("compare")
    if out is not None:
        with open(out, "w", newline="") as fh:
            fh.write(csv_text)
    print(format_table(rows))
    codes = [EXIT_FOR_STATUS[r.status] for r in runs]
    return max(codes)


def _diagnose_geometry(args, rc, d):
    if rc is not None and rc.geometry_section:
        return geometry_from_config(rc.geometry_section, d)
    kind = args.geometry or "euclidean"
    if kind == "euclidean":
        return euclidean(d)
    if kind == "entropy":
        if args.gamma is None:
            raise ConfigError("--gamma: required for the entropy geometry")
        return shannon_entropy(d, args.gamma)
    if kind == "weighted":
        if args.weights is None:
            raise ConfigError("--weights: required for the weighted geometry")
        return weighted_quadratic([float(w) for w in args.weights.split(",")])
    raise ConfigError(f"--geometry: unknown geometry {kind!r}")


def cmd_diagnose(args):
    try:
        rc = RunConfig.load(args.config) if args.config else None
        trace = read_trace_csv(args.trace)
        if "v" not in trace:
            raise ConfigError(f"{args.trace}: trace has no iterate columns v_0..")
        z = load_vector(args.solution)
        d = trace["v"].shape[1]
        if z.size != d:
            raise ConfigError(f"solution has length {z.size}, trace has dimension {d}")
        g = _diagnose_geometry(args, rc, d)
        method = args.method or (rc.methods()[0] if rc else "frb")
        sec = rc.solver_section(method) if rc else {}
        delta = args.delta if args.delta is not None else float(sec.get("delta", 0.1))
        alpha = args.alpha if args.alpha is not None else sec.get("alpha")
        if method in ADAPTIVE and alpha is None:
            raise ConfigError("solver.alpha: adaptive traces need alpha (--alpha or --config)")
        if method not in ADAPTIVE:
            alpha = None
        if "av" not in trace:
            if rc is None:
                raise ConfigError(f"{args.trace}: no av_ columns; pass --config to recompute A v_n")
            A = rc.problem().A
            trace["av"] = np.array([A.apply(v) for v in trace["v"]])
        run = run_from_trace(trace, g, method, delta, alpha, d_schedule_from_config(sec.get("d_schedule")))
        report = diagnose(run, z, delta)
    except (BFRBError, ValueError, KeyError) as exc:
        return _report_error(exc)
    text = json.dumps(report, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n")
    print(text)
    failed = any(report[k] == "FAIL" for k in ("lyapunov", "rate", "eval_count"))
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _parse_override(item):
    if "=" not in item:
        raise ConfigError(f"--set {item!r}: expected key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def cmd_problems(args):
    if args.action == "list":
        width = max(len(n) for n in SHIPPED)
        for name, p in SHIPPED.items():
            print(f"{name.ljust(width)}  {p.description}")
        return EXIT_OK
    try:
        if args.name not in SHIPPED:
            raise ConfigError(f"problem.name: unknown problem {args.name!r}")
        overrides = dict(_parse_override(s) for s in args.set or [])
        try:
            P = get_problem(args.name, **overrides)
        except TypeError as exc:
            raise ConfigError(f"--set: bad override for {args.name!r}: {exc}") from exc
        text = dumps_problem(P)
    except (BFRBError, ValueError) as exc:
        return _report_error(exc)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def make_parser():
    p = argparse.ArgumentParser(prog="bfrb", description="Bregman forward-reflected-backward solvers")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="solve one configured instance")
    r.add_argument("config")
    r.add_argument("--max-iters", type=int, default=None)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run several methods on one instance")
    c.add_argument("config")
    c.add_argument("--max-iters", type=int, default=None)
    c.set_defaults(func=cmd_compare)

    d = sub.add_parser("diagnose", help="check a recorded trace against a solution")
    d.add_argument("trace")
    d.add_argument("solution", help="JSON list, whitespace text, or a problem TOML with reference_solution")
    d.add_argument("--config", default=None)
    d.add_argument("--method", choices=METHODS, default=None)
    d.add_argument("--delta", type=float, default=None)
    d.add_argument("--alpha", type=float, default=None)
    d.add_argument("--geometry", choices=["euclidean", "weighted", "entropy"], default=None)
    d.add_argument("--gamma", type=float, default=None)
    d.add_argument("--weights", default=None, help="comma-separated weights")
    d.add_argument("-o", "--output", default=None)
    d.set_defaults(func=cmd_diagnose)

    pr = sub.add_parser("problems", help="list or export shipped instances")
    pr.add_argument("action", choices=["list", "export"])
    pr.add_argument("name", nargs="?")
    pr.add_argument("--set", action="append", metavar="KEY=VALUE")
    pr.add_argument("-o", "--output", default=None)
    pr.set_defaults(func=cmd_problems)
    return p


def main(argv=None):
    _setup_logging()
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.command == "problems" and args.action == "export" and not args.name:
        parser.error("problems export needs a problem name")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
