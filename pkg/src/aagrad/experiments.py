"""Experiment harness: declarative configs, the run/sweep drivers, and
artifact writing.

Configs are INI files (key-value with nested sections); every field can
be overridden from the command line.  A run writes one trace CSV per
solver plus a summary JSON; given a fixed seed the CSVs are
byte-identical across repeats except for the timing column.
"""

import configparser
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .anderson import AAConfig, run_aa
from .diagnostics import format_summary, summarize, summary_to_json, verify_theorem_3_1
from .errors import AagradError, ConfigError
from .objectives import (
    load_csv_dataset,
    make_logistic,
    make_nnls,
    make_quadratic,
    make_synthetic_classification,
    make_synthetic_regression,
    rosenbrock_2d,
)
from .optimizers import run_optimizer
from .proximal import run_aa_aegd_prox, run_aa_pga, run_apga, run_pga
from .trace import ConvergenceTrace, StoppingRule

OUTPUT_ROOT_ENV = "AAGRAD_OUTPUT_ROOT"

SMOOTH_METHODS = ("gd", "aegd", "aa-gd", "aa-aegd")
COMPOSITE_METHODS = ("pga", "apga", "aa-pga", "aegd-prox", "aa-aegd-prox")
AA_METHODS = ("aa-gd", "aa-aegd", "aa-pga", "aa-aegd-prox")
SWEEP_AXES = ("eta", "m", "q")


@dataclass
class SolverSpec:
    name: str
    method: str
    eta: str
    m: int = 5
    q: int = 1
    beta: float = 1.0
    lam: float = 1e-10
    c: float = 1.0


@dataclass
class ProblemSpec:
    kind: str
    seed: int = 0
    initial: str = ""
    dim: int = 100
    kappa: float = 1e3
    samples: int = 500
    features: int = 100
    mu: float = 10.0
    dataset: str = ""
    label_column: int = 0
    header: bool = False


@dataclass
class ExperimentConfig:
    problem: ProblemSpec
    solvers: list
    stop: StoppingRule
    output_dir: str
    gains: bool = False
    source: str = ""


@dataclass
class ExperimentResult:
    output_dir: Path
    traces: list
    trace_paths: list = field(default_factory=list)
    summary_rows: list = field(default_factory=list)
    summary_path: Path = None


def _get(section, key, cast, default=None, name=""):
    if key not in section or section[key].strip() == "":
        if default is None:
            raise ConfigError(f"missing required field {name or key}")
        return default
    raw = section[key].strip()
    try:
        if cast is bool:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return cast(raw)
    except ValueError:
        raise ConfigError(f"field {name or key}: cannot parse {raw!r}") from None


def _read_ini(path):
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    return {section: dict(parser[section]) for section in parser.sections()}


def _apply_overrides(sections, overrides):
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        target, value = item.split("=", 1)
        section, key = target.rsplit(".", 1)
        sections.setdefault(section, {})[key.strip()] = value.strip()
    return sections


def load_config(path, overrides=()):
    """Parse and validate an experiment config file."""
    sections = _apply_overrides(_read_ini(path), overrides)
    if "problem" not in sections:
        raise ConfigError("config needs a [problem] section")
    prob = sections["problem"]
    kind = _get(prob, "kind", str, name="problem.kind").lower()
    if kind not in ("quadratic", "rosenbrock", "logistic", "nnls"):
        raise ConfigError(f"unknown problem kind {kind!r}")
    spec = ProblemSpec(
        kind=kind,
        seed=_get(prob, "seed", int, 0),
        initial=_get(prob, "initial", str, "__default__"),
        dim=_get(prob, "dim", int, 100),
        kappa=_get(prob, "kappa", float, 1e3),
        samples=_get(prob, "samples", int, 500),
        features=_get(prob, "features", int, 100),
        mu=_get(prob, "mu", float, 10.0 if kind == "logistic" else 0.1),
        dataset=_get(prob, "dataset", str, "__none__"),
        label_column=_get(prob, "label_column", int, 0),
        header=_get(prob, "header", bool, False),
    )
    if spec.initial == "__default__":
        spec.initial = ""
    if spec.dataset == "__none__":
        spec.dataset = ""
    if spec.dataset and not os.path.isfile(spec.dataset):
        raise ConfigError(f"dataset file does not exist: {spec.dataset}")

    stop_section = sections.get("stop", {})
    stop = StoppingRule(
        max_iterations=_get(stop_section, "max_iterations", int, 0) or None,
        grad_tol=_get(stop_section, "grad_tol", float, np.nan),
        step_tol=_get(stop_section, "step_tol", float, np.nan),
    )
    if stop.grad_tol is not None and np.isnan(stop.grad_tol):
        stop = StoppingRule(stop.max_iterations, None, stop.step_tol)
    if stop.step_tol is not None and np.isnan(stop.step_tol):
        stop = StoppingRule(stop.max_iterations, stop.grad_tol, None)

    output = sections.get("output", {})
    out_dir = _get(output, "directory", str, "runs/experiment")

    diag = sections.get("diagnostics", {})
    gains = _get(diag, "gains", bool, False)

    solvers = []
    for section, body in sections.items():
        if not section.startswith("solver:"):
            continue
        name = section.split(":", 1)[1].strip()
        if not re.fullmatch(r"[A-Za-z0-9._-]+", name):
            raise ConfigError(f"solver name {name!r} is not filesystem-safe")
        method = _get(body, "method", str, name=f"{section}.method").lower()
        if method not in SMOOTH_METHODS + COMPOSITE_METHODS:
            raise ConfigError(f"unknown method {method!r} in [{section}]")
        solvers.append(
            SolverSpec(
                name=name,
                method=method,
                eta=_get(body, "eta", str, name=f"{section}.eta"),
                m=_get(body, "m", int, 5),
                q=_get(body, "q", int, 1),
                beta=_get(body, "beta", float, 1.0),
                lam=_get(body, "lambda", float, 1e-10),
                c=_get(body, "c", float, 1.0),
            )
        )
    if not solvers:
        raise ConfigError("config defines no [solver:*] sections")
    if len({s.name for s in solvers}) != len(solvers):
        raise ConfigError("solver names must be unique")

    config = ExperimentConfig(
        problem=spec, solvers=solvers, stop=stop, output_dir=out_dir, gains=gains,
        source=str(path),
    )
    _validate(config)
    return config


def _validate(config):
    smooth_problem = config.problem.kind in ("quadratic", "rosenbrock")
    for solver in config.solvers:
        allowed = SMOOTH_METHODS if smooth_problem else COMPOSITE_METHODS
        if solver.method not in allowed:
            raise ConfigError(
                f"method {solver.method!r} does not apply to a "
                f"{config.problem.kind} problem"
            )


def build_problem(spec):
    """Instantiate the problem and its initial point from a spec."""
    if spec.kind == "quadratic":
        problem = make_quadratic(spec.dim, spec.kappa, spec.seed)
        dimension = spec.dim
    elif spec.kind == "rosenbrock":
        problem = rosenbrock_2d()
        dimension = 2
    elif spec.kind == "logistic":
        if spec.dataset:
            A, y = load_csv_dataset(spec.dataset, spec.label_column, spec.header)
        else:
            A, y = make_synthetic_classification(
                spec.samples, spec.features, spec.kappa, spec.seed
            )
        problem = make_logistic(A, y, mu=spec.mu)
        dimension = A.shape[1]
    else:
        if spec.dataset:
            A, b = load_csv_dataset(spec.dataset, spec.label_column, spec.header)
        else:
            A, b = make_synthetic_regression(
                spec.samples, spec.features, spec.kappa, spec.seed
            )
        problem = make_nnls(A, b, mu=spec.mu)
        dimension = A.shape[1]

    initial = spec.initial.strip().lower()
    if initial in ("", "zeros"):
        x0 = np.zeros(dimension)
    elif initial == "random":
        x0 = np.random.default_rng(spec.seed + 1).standard_normal(dimension)
    else:
        try:
            x0 = np.array([float(v) for v in spec.initial.split(",")])
        except ValueError:
            raise ConfigError(f"cannot parse initial point {spec.initial!r}") from None
        if x0.shape[0] != dimension:
            raise ConfigError(
                f"initial point has {x0.shape[0]} entries, problem has {dimension}"
            )
    return problem, x0


_ETA_REL = re.compile(r"^([0-9.eE+-]+)\s*/\s*L$")


def resolve_eta(text, problem):
    """Turn an eta field into a number.

    Accepts an absolute float, ``<x>/L`` (relative to the problem's
    gradient Lipschitz estimate), or ``2/(L+mu)`` for quadratics.
    """
    text = str(text).strip()
    try:
        value = float(text)
    except ValueError:
        value = None
    if value is None:
        compact = text.replace(" ", "").lower()
        if compact == "2/(l+mu)":
            if not hasattr(problem, "mu"):
                raise ConfigError("eta = 2/(L+mu) requires a quadratic problem")
            value = 2.0 / (problem.L + problem.mu)
        else:
            match = _ETA_REL.match(text)
            if not match:
                raise ConfigError(f"cannot parse eta {text!r}")
            lipschitz = getattr(problem, "lipschitz", None) or getattr(problem, "L", None)
            if lipschitz is None:
                raise ConfigError("relative eta needs a Lipschitz estimate")
            value = float(match.group(1)) / lipschitz
    if value <= 0:
        raise ConfigError(f"eta must be positive, got {value}")
    return value


def _run_solver(solver, problem, x0, stop, gains):
    eta = resolve_eta(solver.eta, problem)
    cfg = None
    if solver.method in AA_METHODS:
        cfg = AAConfig(m=solver.m, q=solver.q, beta=solver.beta, lam=solver.lam)
    store_gradients = gains and solver.method in ("gd", "aa-gd")
    if solver.method in ("gd", "aegd"):
        trace = run_optimizer(
            solver.method, problem, x0, eta, stop, store_gradients=store_gradients
        )
    elif solver.method in ("aa-gd", "aa-aegd"):
        trace = run_aa(
            solver.method.split("-", 1)[1], problem, x0, eta, cfg, stop,
            store_gradients=store_gradients,
        )
    elif solver.method == "pga":
        trace = run_pga(problem, x0, eta, stop)
    elif solver.method == "apga":
        trace = run_apga(problem, x0, eta, stop)
    elif solver.method == "aa-pga":
        trace = run_aa_pga(problem, x0, eta, cfg, stop)
    elif solver.method == "aegd-prox":
        trace = run_aa_aegd_prox(problem, x0, eta, None, stop)
    else:
        trace = run_aa_aegd_prox(problem, x0, eta, cfg, stop)
    trace.params["name"] = solver.name
    trace.method = solver.name
    if store_gradients and hasattr(problem, "mu"):
        try:
            verify_theorem_3_1(trace, eta, problem.mu, L=problem.L,
                               minimizer=getattr(problem, "minimizer", None))
        except AagradError:
            pass  # gains stay recorded up to the first violation
    return trace


def _resolve_output_dir(path_text):
    path = Path(path_text)
    root = os.environ.get(OUTPUT_ROOT_ENV, "").strip()
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def run_experiment(config):
    """Run every solver in the config; write trace CSVs and summary JSON."""
    problem, x0 = build_problem(config.problem)
    out_dir = _resolve_output_dir(config.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from exc

    result = ExperimentResult(output_dir=out_dir, traces=[])
    for solver in config.solvers:
        trace = _run_solver(solver, problem, x0, config.stop, config.gains)
        result.traces.append(trace)
        path = out_dir / f"{solver.name}.csv"
        trace.to_csv(path)
        result.trace_paths.append(path)

    result.summary_rows = summarize(result.traces)
    problem_meta = {
        "kind": config.problem.kind,
        "seed": config.problem.seed,
        "name": getattr(problem, "name", config.problem.kind),
    }
    result.summary_path = out_dir / "summary.json"
    result.summary_path.write_text(summary_to_json(result.summary_rows, problem_meta) + "\n")
    return result


def sweep(config, axis, values):
    """One run per axis value, plus an aggregate threshold-crossing CSV."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    if not values:
        raise ConfigError("sweep values list is empty")
    base_dir = _resolve_output_dir(config.output_dir)
    rows = []
    results = []
    for value in values:
        solvers = []
        for solver in config.solvers:
            updated = SolverSpec(**{**solver.__dict__})
            if axis == "eta":
                if float(value) <= 0:
                    raise ConfigError(f"eta sweep value must be positive: {value}")
                updated.eta = repr(float(value))
            elif solver.method in AA_METHODS:
                if int(value) < 1:
                    raise ConfigError(f"{axis} sweep value must be >= 1: {value}")
                setattr(updated, axis, int(value))
            solvers.append(updated)
        sub_config = ExperimentConfig(
            problem=config.problem,
            solvers=solvers,
            stop=config.stop,
            output_dir=str(Path(config.output_dir) / f"{axis}={value:g}"),
            gains=config.gains,
            source=config.source,
        )
        result = run_experiment(sub_config)
        results.append(result)
        for row in result.summary_rows:
            rows.append(
                {
                    "axis": axis,
                    "value": float(value),
                    "solver": row.name,
                    "iters_1e-2": row.iters_to["1e-2"],
                    "iters_1e-4": row.iters_to["1e-4"],
                    "iters_1e-8": row.iters_to["1e-8"],
                    "final_f": row.final_f,
                }
            )
    base_dir.mkdir(parents=True, exist_ok=True)
    aggregate = base_dir / f"sweep_{axis}.csv"
    with open(aggregate, "w") as fh:
        fh.write("axis,value,solver,iters_1e-2,iters_1e-4,iters_1e-8,final_f\n")
        for row in rows:
            fh.write(
                f"{row['axis']},{row['value']!r},{row['solver']},"
                f"{'' if row['iters_1e-2'] is None else row['iters_1e-2']},"
                f"{'' if row['iters_1e-4'] is None else row['iters_1e-4']},"
                f"{'' if row['iters_1e-8'] is None else row['iters_1e-8']},"
                f"{row['final_f']!r}\n"
            )
    return results, aggregate


def summarize_directory(directory):
    """Rebuild the comparison table from the trace CSVs in a directory."""
    directory = Path(directory)
    paths = sorted(p for p in directory.glob("*.csv") if not p.name.startswith("sweep_"))
    traces = []
    for path in paths:
        try:
            traces.append(ConvergenceTrace.from_csv(path))
        except ValueError:
            continue  # not a trace file
    if not traces:
        raise ConfigError(f"no trace CSVs found in {directory}")
    rows = summarize(traces)
    return rows, format_summary(rows)
