"""Per-iteration run records and stopping rules.

A ConvergenceTrace is the common currency between solvers, diagnostics,
and the experiment harness: every driver appends one record per iterate
(including the initial point) and the downstream code only reads.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

DEFAULT_MAX_ITERATIONS = 100_000
GRAD_TOL_SCALE = 1e-8
DIVERGENCE_LIMIT = 1e300

CSV_SCHEMA = "aagrad-trace v1"
CSV_COLUMNS = (
    "iteration",
    "f",
    "grad_norm",
    "step_norm",
    "aa_applied",
    "aa_accepted",
    "delta_k",
    "r_min",
    "r_max",
    "time_ms",
)


@dataclass
class StoppingRule:
    """Run termination criteria; the first satisfied rule wins.

    ``max_iterations`` defaults to DEFAULT_MAX_ITERATIONS.  ``grad_tol``
    defaults, for smooth runs, to GRAD_TOL_SCALE * (1 + |f(x0)|); pass
    0.0 to disable early stopping on the gradient.  ``step_tol`` stops
    when the actual iterate movement drops to the threshold; it has no
    default.
    """

    max_iterations: Optional[int] = None
    grad_tol: Optional[float] = None
    step_tol: Optional[float] = None

    def resolved(self, f0, grad_default=True):
        max_iterations = self.max_iterations
        if max_iterations is None:
            max_iterations = DEFAULT_MAX_ITERATIONS
        if max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        grad_tol = self.grad_tol
        if grad_tol is None and grad_default:
            grad_tol = GRAD_TOL_SCALE * (1.0 + abs(f0))
        return StoppingRule(max_iterations, grad_tol, self.step_tol)


def _fmt(value):
    """Deterministic CSV cell formatting; None/NaN become empty."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if np.isnan(value):
        return ""
    return repr(value)


def _parse_cell(text):
    if text == "":
        return None
    return float(text)


class ConvergenceTrace:
    """Append-only record of one solver run."""

    def __init__(self, method, params=None, f_star=None):
        self.method = method
        self.params = dict(params or {})
        self.f_star = f_star
        self.iteration = []
        self.f = []
        self.grad_norm = []
        self.step_norm = []
        self.aa_applied = []
        self.aa_accepted = []
        self.delta = []
        self.r_min = []
        self.r_max = []
        self.time_ms = []
        self.gradients = None
        self.iterates = None
        self.energies = None
        self.metadata = {"events": []}

    def enable_storage(self, gradients=False, iterates=False, energies=False):
        if gradients:
            self.gradients = []
        if iterates:
            self.iterates = []
        if energies:
            self.energies = []

    def __len__(self):
        return len(self.iteration)

    def append(
        self,
        iteration,
        f,
        grad_norm,
        step_norm=np.nan,
        aa_applied=False,
        aa_accepted=None,
        r_min=np.nan,
        r_max=np.nan,
        time_ms=0.0,
        gradient=None,
        iterate=None,
        energy=None,
    ):
        if self.iteration and iteration <= self.iteration[-1]:
            raise ValueError("iteration indices must be strictly increasing")
        self.iteration.append(int(iteration))
        self.f.append(float(f))
        self.grad_norm.append(float(grad_norm))
        self.step_norm.append(float(step_norm))
        self.aa_applied.append(bool(aa_applied))
        self.aa_accepted.append(aa_accepted)
        self.delta.append(np.nan)
        self.r_min.append(float(r_min))
        self.r_max.append(float(r_max))
        self.time_ms.append(float(time_ms))
        if self.gradients is not None:
            self.gradients.append(None if gradient is None else np.array(gradient))
        if self.iterates is not None:
            self.iterates.append(None if iterate is None else np.array(iterate))
        if self.energies is not None:
            self.energies.append(None if energy is None else np.array(energy))

    def record_event(self, iteration, kind, detail=""):
        self.metadata["events"].append(
            {"iteration": int(iteration), "kind": kind, "detail": detail}
        )

    @property
    def final_f(self):
        return self.f[-1]

    def aa_acceptance_rate(self):
        """Accepted fraction of AA attempts; None when AA never fired."""
        attempts = [acc for app, acc in zip(self.aa_applied, self.aa_accepted) if app]
        if not attempts:
            return None
        if all(acc is None for acc in attempts):
            return 1.0
        return sum(1 for acc in attempts if acc) / len(attempts)

    def iterations_to(self, threshold):
        """First iteration index reaching the threshold, or None.

        Measured on f - f_star when the optimum is known, otherwise on
        the iterate movement (step norm).
        """
        if self.f_star is not None:
            for k, value in zip(self.iteration, self.f):
                if value - self.f_star <= threshold:
                    return k
            return None
        for k, step in zip(self.iteration, self.step_norm):
            if not np.isnan(step) and step <= threshold:
                return k
        return None

    def to_csv(self, path):
        header_meta = {
            "method": self.method,
            "params": self.params,
            "f_star": self.f_star,
        }
        lines = [f"# {CSV_SCHEMA} {json.dumps(header_meta, sort_keys=True)}"]
        lines.append(",".join(CSV_COLUMNS))
        for i in range(len(self)):
            lines.append(
                ",".join(
                    (
                        _fmt(self.iteration[i]),
                        _fmt(self.f[i]),
                        _fmt(self.grad_norm[i]),
                        _fmt(self.step_norm[i]),
                        _fmt(self.aa_applied[i]),
                        _fmt(self.aa_accepted[i]),
                        _fmt(self.delta[i]),
                        _fmt(self.r_min[i]),
                        _fmt(self.r_max[i]),
                        _fmt(self.time_ms[i]),
                    )
                )
            )
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            lines = [line.rstrip("\n") for line in fh]
        if not lines or not lines[0].startswith(f"# {CSV_SCHEMA} "):
            raise ValueError(f"{path} is not a {CSV_SCHEMA} file")
        meta = json.loads(lines[0][len(f"# {CSV_SCHEMA} "):])
        trace = cls(meta["method"], meta["params"], meta["f_star"])
        for line in lines[2:]:
            if not line:
                continue
            cells = line.split(",")
            row = dict(zip(CSV_COLUMNS, cells))
            trace.iteration.append(int(row["iteration"]))
            trace.f.append(float(row["f"]))
            trace.grad_norm.append(float(row["grad_norm"]))
            step = _parse_cell(row["step_norm"])
            trace.step_norm.append(np.nan if step is None else step)
            trace.aa_applied.append(row["aa_applied"] == "1")
            trace.aa_accepted.append(
                None if row["aa_accepted"] == "" else row["aa_accepted"] == "1"
            )
            delta = _parse_cell(row["delta_k"])
            trace.delta.append(np.nan if delta is None else delta)
            for name, store in (("r_min", trace.r_min), ("r_max", trace.r_max)):
                cell = _parse_cell(row[name])
                store.append(np.nan if cell is None else cell)
            trace.time_ms.append(float(row["time_ms"]) if row["time_ms"] else 0.0)
        return trace
