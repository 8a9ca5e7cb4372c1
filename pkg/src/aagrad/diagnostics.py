"""Post-run analysis: per-step convergence-gain factors, rate-bound
verification, and cross-solver comparison tables.

The gain of a mixing step is the norm ratio

    delta_k = ||P_k g_k|| / ||g_k||,
    P_k = I - U_k (U_k'U_k + lam*I)^{-1} U_k',

with U_k the matrix of gradient differences g_k - g_j over the window.
P_k is applied implicitly through the regularized least-squares solve,
never materialized.

For the gradient-descent accelerator, window residuals are -eta times
the gradients, so the residual-space ridge weight lam corresponds to
lam/eta^2 in gradient space; ``gradient_space_lambda`` encodes that
identity and the bound checks rely on it.  For energy-adaptive runs the
correspondence is only approximate (the effective step varies), so
gains there are descriptive, not certified.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BoundViolated, ZeroGradient
from .linalg import as_vector, solve_regularized_ls
from .trace import ConvergenceTrace


def projection_gain(gradients, lam):
    """Gain delta = ||g_last - U w|| / ||g_last|| for one window.

    ``gradients`` lists the window gradients oldest first, the current
    one last.  A single-entry window (or identical gradients) gives 1.
    """
    grads = [as_vector(g, "gradient") for g in gradients]
    if not grads:
        raise ValueError("gradient window is empty")
    g_last = grads[-1]
    norm_last = float(np.linalg.norm(g_last))
    if norm_last == 0.0:
        raise ZeroGradient("current gradient is zero; nothing to project")
    if len(grads) == 1:
        return 1.0
    U = np.column_stack([g_last - g for g in grads[:-1]])
    if np.abs(U).max() == 0.0:
        return 1.0
    w = solve_regularized_ls(U, g_last, lam)
    return float(np.linalg.norm(g_last - U @ w)) / norm_last


def gradient_space_lambda(lam, eta):
    """Residual-space ridge weight mapped to gradient space (lam/eta^2)."""
    return lam / (eta * eta)


@dataclass
class GainStep:
    iteration: int
    aa_applied: bool
    delta: float
    bound: float
    observed: float
    slack: float


@dataclass
class GainReport:
    """Per-step gains, bounds, and observed contraction ratios."""

    eta: float
    mu: float
    lam_effective: float
    steps: list = field(default_factory=list)
    cumulative_checked: bool = False
    min_slack: float = np.inf

    def deltas(self):
        return [s.delta for s in self.steps]

    def to_json(self):
        payload = {
            "eta": self.eta,
            "mu": self.mu,
            "lam_effective": self.lam_effective,
            "cumulative_checked": self.cumulative_checked,
            "min_slack": self.min_slack,
            "steps": [asdict(s) for s in self.steps],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def format_table(self):
        lines = [f"{'iter':>6} {'aa':>3} {'delta':>12} {'bound':>12} {'observed':>12} {'slack':>12}"]
        for s in self.steps:
            lines.append(
                f"{s.iteration:>6} {('yes' if s.aa_applied else 'no'):>3} "
                f"{s.delta:>12.6e} {s.bound:>12.6e} {s.observed:>12.6e} {s.slack:>12.6e}"
            )
        return "\n".join(lines)


def verify_theorem_3_1(trace, eta, mu, L=None, minimizer=None, rtol=1e-6):
    """Check the per-step gain bound and the cumulative iterate bound.

    For a gradient-descent run with full relaxation on a quadratic with
    spectrum in [mu, L] and eta <= 2/(L+mu), every step must satisfy

        ||g_{k+1}|| / ||g_k|| <= delta_k * (1 - eta*mu) * (1 + rtol)

    with delta_k = 1 on plain steps.  When ``L`` and ``minimizer`` are
    given and iterates were stored, the cumulative bound

        ||x_{k+1} - x*|| <= prod_j delta_j * (1-eta*mu)^{k+1} * (L/mu)
                            * ||x0 - x*|| * (1 + rtol)

    is checked as well.  Raises BoundViolated on the first failure;
    computed gains are written back into the trace's delta column.
    """
    if trace.gradients is None:
        raise ValueError("trace must be run with store_gradients=True")
    if trace.params.get("beta", 1.0) != 1.0:
        raise ValueError("bound holds for full relaxation (beta = 1) only")
    if L is not None and eta > 2.0 / (L + mu) * (1.0 + 1e-12):
        raise ValueError(f"eta = {eta:.6e} exceeds 2/(L+mu) = {2.0 / (L + mu):.6e}")
    lam = trace.params.get("lam", 0.0)
    lam_eff = gradient_space_lambda(lam, eta)
    window_m = trace.params.get("m", 0)
    contraction = 1.0 - eta * mu

    report = GainReport(eta=eta, mu=mu, lam_effective=lam_eff)
    check_iterates = L is not None and minimizer is not None and trace.iterates is not None
    if check_iterates:
        minimizer = as_vector(minimizer, "minimizer")
        initial_err = float(np.linalg.norm(trace.iterates[0] - minimizer))
    cumulative = 1.0

    for k in range(len(trace) - 1):
        gn_k = trace.grad_norm[k]
        gn_next = trace.grad_norm[k + 1]
        if gn_k == 0.0:
            break
        if trace.aa_applied[k + 1]:
            m_k = min(window_m, k)
            delta = projection_gain(trace.gradients[k - m_k : k + 1], lam_eff)
        else:
            delta = 1.0
        observed = gn_next / gn_k
        bound = delta * contraction
        slack = bound - observed
        report.steps.append(
            GainStep(iteration=k, aa_applied=bool(trace.aa_applied[k + 1]),
                     delta=delta, bound=bound, observed=observed, slack=slack)
        )
        report.min_slack = min(report.min_slack, slack)
        trace.delta[k + 1] = delta
        if observed > bound * (1.0 + rtol):
            raise BoundViolated(
                f"gain bound failed at iteration {k}: observed {observed:.12e} "
                f"> bound {bound:.12e}",
                iteration=k,
                slack=slack,
            )
        cumulative *= delta
        if check_iterates:
            err = float(np.linalg.norm(trace.iterates[k + 1] - minimizer))
            limit = cumulative * contraction ** (k + 1) * (L / mu) * initial_err
            if err > limit * (1.0 + rtol):
                raise BoundViolated(
                    f"cumulative iterate bound failed at iteration {k + 1}: "
                    f"error {err:.12e} > limit {limit:.12e}",
                    iteration=k + 1,
                    slack=limit - err,
                )
    report.cumulative_checked = check_iterates
    return report


THRESHOLDS = (1e-2, 1e-4, 1e-8)
_THRESHOLD_KEYS = ("1e-2", "1e-4", "1e-8")


@dataclass
class SolverSummary:
    name: str
    params: dict
    iters_to: dict
    final_f: float
    aa_accept_rate: object  # float or None


def summarize(traces):
    """Comparison rows: iterations to each threshold, final value, and
    the fraction of accepted mixing attempts.

    Thresholds apply to f - f_star when the optimum is known, otherwise
    to the iterate movement.
    """
    if not traces:
        raise ValueError("no traces to summarize")
    rows = []
    for trace in traces:
        iters = {
            key: trace.iterations_to(threshold)
            for key, threshold in zip(_THRESHOLD_KEYS, THRESHOLDS)
        }
        rows.append(
            SolverSummary(
                name=trace.method,
                params=dict(trace.params),
                iters_to=iters,
                final_f=trace.final_f,
                aa_accept_rate=trace.aa_acceptance_rate(),
            )
        )
    return rows


def summary_to_json(rows, problem=None):
    payload = {
        "problem": problem,
        "solvers": [
            {
                "name": row.name,
                "params": row.params,
                "iters_to": row.iters_to,
                "final_f": row.final_f,
                "aa_accept_rate": row.aa_accept_rate,
            }
            for row in rows
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def format_summary(rows):
    """Aligned plain-text comparison table."""
    header = (
        f"{'solver':<16} {'to 1e-2':>9} {'to 1e-4':>9} {'to 1e-8':>9} "
        f"{'final f':>14} {'aa accept':>10}"
    )
    lines = [header, "-" * len(header)]
    for row in rows:
        cells = [
            "-" if row.iters_to[key] is None else str(row.iters_to[key])
            for key in _THRESHOLD_KEYS
        ]
        rate = "-" if row.aa_accept_rate is None else f"{row.aa_accept_rate:.2f}"
        lines.append(
            f"{row.name:<16} {cells[0]:>9} {cells[1]:>9} {cells[2]:>9} "
            f"{row.final_f:>14.6e} {rate:>10}"
        )
    return "\n".join(lines)
