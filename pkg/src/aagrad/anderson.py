"""Window extrapolation (Anderson mixing) wrapped around a base stepper.

The accelerator is method-agnostic: the window stores whatever pairs
(x_j, g_j) the base stepper produced, with residuals R_j = g_j - x_j.
Mixing weights solve the regularized least-squares problem

    min_w 0.5*||R_k - U_k w||^2 + 0.5*lam*||w||^2,
    U_k columns R_k - R_j  (j over the window, newest excluded),

and the affine coefficients are alpha_j = w_j with
alpha_k = 1 - sum(w), so they sum to one by construction.
"""

import math
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import Diverged, DimensionMismatch, NonFiniteGradient, SingularSystem
from .linalg import as_vector, solve_regularized_ls
from .optimizers import energy_update, initial_energy
from .trace import DIVERGENCE_LIMIT, ConvergenceTrace, StoppingRule

DEFAULT_LAMBDA = 1e-10


@dataclass
class AAConfig:
    """Accelerator hyperparameters.

    m: window length (pairs beyond the newest kept for the solve).
    q: mixing period; the extrapolate replaces the iterate at
       k = q, 2q, 3q, ...
    beta: relaxation blending mixed points (1-beta) with mixed updates
          (beta).
    lam: ridge weight in the coefficient solve.
    """

    m: int
    q: int = 1
    beta: float = 1.0
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("window length m must be >= 1")
        if self.q < 1:
            raise ValueError("mixing period q must be >= 1")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("relaxation beta must lie in (0, 1]")
        if self.lam < 0.0:
            raise ValueError("regularization lam must be >= 0")


class AndersonWindow:
    """FIFO buffer of the last m+1 (point, update) pairs."""

    def __init__(self, m):
        if m < 1:
            raise ValueError("window length m must be >= 1")
        self.m = m
        self._points = deque(maxlen=m + 1)
        self._updates = deque(maxlen=m + 1)

    def push(self, x, g):
        x = np.asarray(x, dtype=float)
        g = np.asarray(g, dtype=float)
        if x.shape != g.shape:
            raise DimensionMismatch("point and update must have the same shape")
        self._points.append(x)
        self._updates.append(g)

    def __len__(self):
        return len(self._points)

    def points(self):
        return np.array(self._points)

    def updates(self):
        return np.array(self._updates)

    def residuals(self):
        return self.updates() - self.points()


def solve_coefficients(window, lam):
    """Affine mixing weights over the window, oldest first.

    With a single pair the result is (1,): the extrapolation degenerates
    to the plain step.  SingularSystem propagates when ``lam == 0`` and
    the difference matrix is rank-deficient.
    """
    if len(window) < 1:
        raise ValueError("window is empty")
    R = window.residuals()
    if R.shape[0] == 1:
        return np.array([1.0])
    U = (R[-1] - R[:-1]).T
    if np.abs(U).max() == 0.0 and lam == 0.0:
        raise SingularSystem("all window residuals are identical")
    w = solve_regularized_ls(U, R[-1], lam)
    return np.append(w, 1.0 - w.sum())


def mix(window, alpha, beta):
    """Relaxed extrapolate (1-beta)*sum_j alpha_j x_j + beta*sum_j alpha_j g_j."""
    alpha = as_vector(alpha, "alpha")
    if len(alpha) != len(window):
        raise DimensionMismatch(
            f"got {len(alpha)} coefficients for a window of {len(window)} pairs"
        )
    if not 0.0 < beta <= 1.0:
        raise ValueError("relaxation beta must lie in (0, 1]")
    mixed_updates = alpha @ window.updates()
    if beta == 1.0:
        return mixed_updates
    return (1.0 - beta) * (alpha @ window.points()) + beta * mixed_updates


def chebyshev_gain(rho, k, d):
    """Best-polynomial error envelope for full-memory mixing on a linear
    contraction with factor rho: 2*gamma^k / (1 + gamma^(2k)) for k < d
    and 0 once the window spans the whole space (k >= d)."""
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    if k >= d:
        return 0.0
    gamma = (1.0 - np.sqrt(1.0 - rho)) / (1.0 + np.sqrt(1.0 - rho))
    return float(2.0 * gamma**k / (1.0 + gamma ** (2 * k)))


def _method_name(method):
    name = str(method).strip().lower().replace("_", "-")
    if name not in ("gd", "aegd"):
        raise ValueError(f"unknown method {method!r}; expected 'gd' or 'aegd'")
    return name


def _norm_checked(vector, what):
    """Euclidean norm; raises NonFiniteGradient on NaN/Inf entries."""
    value = math.sqrt(float(vector @ vector))
    if not math.isfinite(value) and not np.all(np.isfinite(vector)):
        raise NonFiniteGradient(f"{what} contains NaN/Inf")
    return value


def run_aa(
    method,
    f,
    x0,
    eta,
    cfg,
    stop=None,
    *,
    store_gradients=False,
    store_iterates=False,
    store_energies=False,
):
    """Drive GD or AEGD with periodic window extrapolation.

    Each iteration takes one base step, records the produced pair in the
    window, and at k = q, 2q, ... (k != 0) replaces the new iterate with
    the mixed extrapolate.  The stored pair keeps the pre-mix update, so
    the window always reflects base-step residuals; for the energy
    stepper the state r carries through replacements unmodified.

    A SingularSystem from an unregularized coefficient solve falls back
    to the plain step and records the event instead of aborting.
    """
    method = _method_name(method)
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = as_vector(x0, "x0").copy()

    evaluate = getattr(f, "value_and_gradient", None)
    if evaluate is None:
        evaluate = lambda point: (f.value(point), f.gradient(point))  # noqa: E731
    f_cur, g_vec = evaluate(x)
    rule = (stop or StoppingRule()).resolved(f_cur)

    state = initial_energy(f, x) if method == "aegd" else None
    window = AndersonWindow(cfg.m) if cfg is not None else None

    params = {"eta": eta}
    if state is not None:
        params["c"] = state.c
    if cfg is not None:
        params.update({"m": cfg.m, "q": cfg.q, "beta": cfg.beta, "lam": cfg.lam})
    trace = ConvergenceTrace(
        method=method if cfg is None else f"aa-{method}",
        params=params,
        f_star=getattr(f, "f_star", None),
    )
    trace.enable_storage(store_gradients, store_iterates, store_energies)
    trace.metadata["aa_sequence"] = "primal" if cfg is not None else None

    def energy_stats():
        if state is None:
            return np.nan, np.nan
        return float(state.r.min()), float(state.r.max())

    grad_norm = _norm_checked(g_vec, "gradient")
    r_lo, r_hi = energy_stats()
    trace.append(
        0, f_cur, grad_norm,
        r_min=r_lo, r_max=r_hi,
        gradient=g_vec, iterate=x,
        energy=None if state is None else state.r,
    )

    termination = "max_iterations"
    is_gd = method == "gd"
    for k in range(rule.max_iterations):
        if rule.grad_tol is not None and grad_norm <= rule.grad_tol:
            termination = "grad_tol"
            break
        tic = time.perf_counter()

        # Base step from the already-evaluated (f_cur, g_vec) at x.
        if is_gd:
            x_base = x - eta * g_vec
        else:
            x_base, state, _ = energy_update(x, f_cur, g_vec, state, eta)

        x_next = x_base
        aa_applied = False
        if window is not None:
            window.push(x, x_base)
            if k % cfg.q == 0 and k != 0:
                try:
                    alpha = solve_coefficients(window, cfg.lam)
                    x_next = mix(window, alpha, cfg.beta)
                    aa_applied = True
                except SingularSystem as exc:
                    trace.record_event(k, "solve-fallback", str(exc))

        diff = x_next - x
        step_norm = math.sqrt(float(diff @ diff))
        x = x_next
        f_cur, g_vec = evaluate(x)
        if not (f_cur <= DIVERGENCE_LIMIT):
            raise Diverged(f"objective reached {f_cur:.3e} at iteration {k + 1}")
        grad_norm = _norm_checked(g_vec, "gradient")
        elapsed_ms = (time.perf_counter() - tic) * 1e3

        r_lo, r_hi = energy_stats()
        trace.append(
            k + 1, f_cur, grad_norm, step_norm, aa_applied, None,
            r_lo, r_hi, elapsed_ms,
            g_vec, x, None if state is None else state.r,
        )
        if rule.step_tol is not None and step_norm <= rule.step_tol:
            termination = "step_tol"
            break

    trace.metadata["termination"] = termination
    return trace
