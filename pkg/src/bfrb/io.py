"""Problem files (TOML), run configurations and trace CSV files."""

import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .bregman import euclidean, geometry_from_config
from .errors import ConfigError
from .operators import CostPolyhedron, LinearOperator, NormalCone, ScaledIdentity, linear, zero_operator
from .operators import Box, Simplex
from .solvers import DSchedule, ProblemInstance, SolverRun, Termination

TRACE_HEADER = ["n", "residual", "step_change", "mu", "a_evals"]


def _floats(values, key):
    try:
        return np.array([_num(v) for v in values], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: expected a list of numbers") from exc


def _num(v):
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "+inf", "infinity"):
            return math.inf
        if v.strip().lower() in ("-inf", "-infinity"):
            return -math.inf
        raise ValueError(v)
    return float(v)


def _finite_or_str(values):
    return [float(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf") for v in values]


def load_toml(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


# --------------------------------------------------------------------------
# problem files


def forward_from_dict(spec, d=None):
    kind = spec.get("type")
    if kind == "linear":
        if "matrix" not in spec:
            raise ConfigError("A.matrix: missing")
        M = np.array([_floats(row, "A.matrix") for row in spec["matrix"]])
        off = _floats(spec["offset"], "A.offset") if "offset" in spec else None
        return linear(M, off, lipschitz=spec.get("lipschitz"))
    if kind == "zero":
        return zero_operator(spec.get("dimension", d))
    raise ConfigError(f"A.type: unknown operator type {kind!r}")


def resolvent_from_dict(spec):
    kind = spec.get("type")
    try:
        if kind == "box":
            return NormalCone(Box(_floats(spec["lower"], "B.lower"), _floats(spec["upper"], "B.upper")))
        if kind == "simplex":
            return NormalCone(Simplex(int(spec["dimension"]), float(spec.get("total", 1.0))))
        if kind == "scaled_identity":
            center = _floats(spec["center"], "B.center") if "center" in spec else None
            return ScaledIdentity(float(spec["c"]), center)
        if kind == "cost_polyhedron":
            hs = [(h["indices"], h["coefficients"], h["rhs"]) for h in spec.get("halfspaces", [])]
            cost = _floats(spec["cost"], "B.cost") if "cost" in spec else None
            return CostPolyhedron(_floats(spec["lower"], "B.lower"), _floats(spec["upper"], "B.upper"), cost, hs)
    except KeyError as exc:
        raise ConfigError(f"B.{exc.args[0]}: missing") from exc
    raise ConfigError(f"B.type: unknown operator type {kind!r}")


def forward_to_dict(A):
    if not isinstance(A, LinearOperator):
        raise TypeError("only linear forward operators serialise")
    if A.is_zero:
        return {"type": "zero", "dimension": A.dimension}
    out = {"type": "linear", "matrix": A.matrix.tolist(), "offset": A.offset.tolist()}
    if A.lipschitz is not None:
        out["lipschitz"] = A.lipschitz
    return out


def resolvent_to_dict(B):
    d = B.to_dict()
    for key in ("lower", "upper"):
        if key in d:
            d[key] = _finite_or_str(np.asarray([_num(v) for v in d[key]]))
    return d


def problem_to_dict(P):
    out = {"label": P.label, "dimension": P.dimension, "v0": P.v0.tolist(), "v1": P.v1.tolist()}
    if P.reference_solution is not None:
        out["reference_solution"] = np.asarray(P.reference_solution).tolist()
    out["A"] = forward_to_dict(P.A)
    out["B"] = resolvent_to_dict(P.B)
    return out


def dumps_problem(P):
    return tomli_w.dumps(problem_to_dict(P))


def problem_from_dict(data, geometry=None):
    if "A" not in data:
        raise ConfigError("A: missing")
    if "B" not in data:
        raise ConfigError("B: missing")
    A = forward_from_dict(data["A"], data.get("dimension"))
    B = resolvent_from_dict(data["B"])
    d = A.dimension
    if "v0" not in data:
        raise ConfigError("v0: missing")
    v0 = _floats(data["v0"], "v0")
    v1 = _floats(data["v1"], "v1") if "v1" in data else None
    ref = _floats(data["reference_solution"], "reference_solution") if "reference_solution" in data else None
    g = geometry or geometry_from_config(data.get("geometry", {}), d)
    return ProblemInstance(A, B, g, v0, v1, ref, label=data.get("label", ""))


def load_problem_file(path, geometry=None):
    return problem_from_dict(load_toml(path), geometry)


# --------------------------------------------------------------------------
# solver configuration


def d_schedule_from_config(value):
    if value is None or value == "zero" or value == 0:
        return DSchedule.zero()
    if isinstance(value, list):
        return DSchedule.explicit(value)
    if isinstance(value, dict):
        kind = value.get("type", "geometric")
        if kind == "geometric":
            return DSchedule.geometric(float(value["ratio"]), float(value["scale"]))
        if kind == "explicit":
            return DSchedule.explicit(value["values"])
        if kind == "zero":
            return DSchedule.zero()
    raise ConfigError(f"solver.d_schedule: cannot interpret {value!r}")


# --------------------------------------------------------------------------
# traces


def _fmt(x):
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def write_trace_csv(run, target, iterates=True):
    """Write a run's trace; ``target`` is a path or an open text file.

    Rows ``n = 0..N+1``: row 0 holds ``v_0, A v_0, mu_0``; row ``n`` in
    ``1..N`` holds the natural residual at ``v_n``, ``||v_{n+1} - v_n||``,
    ``mu_n`` and the cumulative A count; row ``N+1`` carries ``v_{N+1}`` only.
    """
    if not run.has_trace:
        raise ValueError("run has no trace (record_trace was off)")
    V, F, mu = run.iterates, run.forward, run.steps
    N = run.step_change.size
    d = V.shape[1]
    header = list(TRACE_HEADER)
    if iterates:
        header += [f"v_{i}" for i in range(d)] + [f"av_{i}" for i in range(d)]
    init_count = 1 if run.method not in ("tseng", "ppa") else 0
    nan = float("nan")

    def rows():
        for n in range(N + 2):
            if n == 0:
                base = [n, nan, float(np.linalg.norm(V[1] - V[0])), mu[0], init_count]
            elif n <= N:
                base = [n, run.residual[n - 1], run.step_change[n - 1], mu[n], run.a_evals_trace[n - 1]]
            else:
                base = [n, nan, nan, nan, run.a_evals]
            out = [str(base[0])] + [_fmt(v) for v in base[1:4]] + [str(int(base[4]))]
            if iterates:
                av = F[n] if n < F.shape[0] else np.full(d, nan)
                out += [_fmt(v) for v in V[n]] + [_fmt(v) for v in av]
            yield out

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows())

    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as fh:
            emit(fh)
    else:
        emit(target)


def trace_to_string(run, iterates=True):
    buf = io.StringIO()
    write_trace_csv(run, buf, iterates)
    return buf.getvalue()


def read_trace_csv(path):
    """Parse a trace file into column arrays (blank cells become NaN)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration as exc:
            raise ConfigError(f"{path}: empty trace file") from exc
        missing = [c for c in TRACE_HEADER if c not in header]
        if missing:
            raise ConfigError(f"{path}: trace header lacks column(s) {', '.join(missing)}")
        rows = [[float(c) if c != "" else math.nan for c in r] for r in reader if r]
    data = np.array(rows, dtype=float) if rows else np.zeros((0, len(header)))
    cols = {name: data[:, i] for i, name in enumerate(header)}
    d = sum(1 for name in header if name.startswith("v_"))
    out = {name: cols[name] for name in TRACE_HEADER}
    if d:
        out["v"] = np.column_stack([cols[f"v_{i}"] for i in range(d)])
        if all(f"av_{i}" in cols for i in range(d)):
            out["av"] = np.column_stack([cols[f"av_{i}"] for i in range(d)])
    return out


def run_from_trace(trace, geometry=None, method="frb", delta=0.1, alpha=None, d_schedule=None):
    """Rebuild a :class:`SolverRun` from :func:`read_trace_csv` output."""
    n_rows = trace["n"].size
    if n_rows < 2:
        raise ConfigError("trace has fewer than two rows")
    N = n_rows - 2
    counts = trace["a_evals"].astype(int)
    V = trace.get("v")
    F = trace.get("av")
    if geometry is None and V is not None:
        geometry = euclidean(V.shape[1])
    steps = trace["mu"][: N + 1]
    run = SolverRun(
        method=method,
        status=Termination.CONVERGED,
        iterations=N,
        x=V[-1] if V is not None else np.zeros(0),
        a_evals=int(counts[-1]),
        resolvent_calls=0,
        final_residual=float(trace["residual"][N]) if N >= 1 else math.nan,
        min_step_change=float(np.nanmin(trace["step_change"][1 : N + 1])) if N >= 1 else math.nan,
        geometry=geometry,
        delta=delta,
        alpha=alpha,
        mu=None if alpha is not None else float(steps[0]),
        d_schedule=d_schedule,
    )
    run.step_change = trace["step_change"][1 : N + 1]
    run.residual = trace["residual"][1 : N + 1]
    run.a_evals_trace = counts[1 : N + 1]
    run.steps = steps
    if V is not None and F is not None:
        run.iterates = V
        run.forward = F[: N + 1]
    return run


def load_vector(path):
    """Read a vector from JSON, a TOML problem file, or whitespace/comma text."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"file not found: {path}")
    text = p.read_text()
    if p.suffix == ".toml":
        data = tomllib.loads(text)
        if "reference_solution" not in data:
            raise ConfigError(f"{path}: no reference_solution key")
        return _floats(data["reference_solution"], "reference_solution")
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        try:
            return np.array([float(t) for t in text.replace(",", " ").split()], dtype=float)
        except ValueError as exc:
            raise ConfigError(f"{path}: cannot parse a vector") from exc
    if isinstance(data, dict):
        for key in ("solution", "reference_solution", "x"):
            if key in data:
                data = data[key]
                break
    return _floats(data, "solution")
