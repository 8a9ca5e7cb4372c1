"""Proximal operators and composite-objective solvers.

Covers the projected/proximal gradient algorithm (PGA), its Nesterov
momentum variant (APGA), window-accelerated PGA, and the
energy-adaptive stepper with prox and a sufficient-decrease safeguard.
All accelerated variants extrapolate the auxiliary pre-prox sequence,
never the projected points.
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .anderson import AndersonWindow, mix, solve_coefficients
from .errors import Diverged, EnergyDomainViolation, NonFiniteGradient, SingularSystem
from .linalg import as_vector
from .optimizers import EnergyState, StepRecord, value_and_gradient
from .trace import DIVERGENCE_LIMIT, ConvergenceTrace, StoppingRule


class ProxOperator:
    """argmin_x { h(x) + ||x - y||^2 / (2*eta) } for some h.

    Instances are nonexpansive maps; for indicator functions they are
    Euclidean projections (idempotent, independent of eta).
    """

    def evaluate(self, y, eta):
        raise NotImplementedError

    def __call__(self, y, eta):
        return self.evaluate(y, eta)


class BoxProx(ProxOperator):
    """Projection onto the max-norm ball {|x_i| <= radius}."""

    def __init__(self, radius):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def evaluate(self, y, eta):
        return np.clip(y, -self.radius, self.radius)


class NonnegProx(ProxOperator):
    """Projection onto the nonnegative orthant."""

    def evaluate(self, y, eta):
        return np.maximum(y, 0.0)


class IdentityProx(ProxOperator):
    """Prox of h == 0; turns every solver here into its smooth variant."""

    def evaluate(self, y, eta):
        return np.asarray(y, dtype=float)


def prox_box_linf(y, radius):
    """Entrywise clamp of y to [-radius, radius]."""
    return BoxProx(radius).evaluate(as_vector(y, "y"), 1.0)


def prox_nonneg(y):
    """Entrywise max(y, 0)."""
    return NonnegProx().evaluate(as_vector(y, "y"), 1.0)


def _smooth_grad(p, x):
    g = np.asarray(p.smooth.gradient(x), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient("smooth gradient contains NaN/Inf")
    return g


def pga_step(p, x, eta):
    """Gradient step on the smooth part followed by the prox."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = as_vector(x, "x")
    y = x - eta * _smooth_grad(p, x)
    x_new = p.prox(y, eta)
    return StepRecord(x_new=x_new, residual=x_new - x)


def apga_step(p, x, x_prev, k, eta):
    """Momentum step with weight (k-1)/(k+2), then prox.

    At k = 1 the weight is zero and the step reduces to pga_step.
    """
    if k < 1:
        raise ValueError("iteration index k must be >= 1")
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = as_vector(x, "x")
    x_prev = as_vector(x_prev, "x_prev")
    weight = (k - 1.0) / (k + 2.0)
    y = x + weight * (x - x_prev)
    x_new = p.prox(y - eta * _smooth_grad(p, y), eta)
    return StepRecord(x_new=x_new, residual=x_new - x)


def _start_trace(method, p, x0, params, store_iterates, store_energies=False):
    trace = ConvergenceTrace(method=method, params=params, f_star=None)
    trace.enable_storage(iterates=store_iterates, energies=store_energies)
    return trace


def _record(trace, k, x, f_val, grad, step_norm, tic, **kw):
    if not np.isfinite(f_val) or f_val > DIVERGENCE_LIMIT:
        raise Diverged(f"objective reached {f_val:.3e} at iteration {k}")
    elapsed = 0.0 if tic is None else (time.perf_counter() - tic) * 1e3
    trace.append(
        k, f_val, float(np.linalg.norm(grad)), step_norm,
        time_ms=elapsed, iterate=x, **kw,
    )


def run_pga(p, x0, eta, stop: Optional[StoppingRule] = None, *, store_iterates=False):
    """Proximal gradient descent to a stopping rule."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = as_vector(x0, "x0").copy()
    f_at_x, grad_at_x = value_and_gradient(p.smooth, x)
    rule = (stop or StoppingRule()).resolved(f_at_x, grad_default=False)
    trace = _start_trace("pga", p, x, {"eta": eta}, store_iterates)
    _record(trace, 0, x, f_at_x, grad_at_x, np.nan, None)
    termination = "max_iterations"
    for k in range(rule.max_iterations):
        tic = time.perf_counter()
        x_next = p.prox(x - eta * grad_at_x, eta)
        step_norm = float(np.linalg.norm(x_next - x))
        x = x_next
        f_at_x, grad_at_x = value_and_gradient(p.smooth, x)
        _record(trace, k + 1, x, f_at_x, grad_at_x, step_norm, tic)
        if rule.step_tol is not None and step_norm <= rule.step_tol:
            termination = "step_tol"
            break
    trace.metadata["termination"] = termination
    return trace


def run_apga(p, x0, eta, stop: Optional[StoppingRule] = None, *, store_iterates=False):
    """Nesterov-momentum proximal gradient descent."""
    x = as_vector(x0, "x0").copy()
    x_prev = x.copy()
    f_at_x, grad_at_x = value_and_gradient(p.smooth, x)
    rule = (stop or StoppingRule()).resolved(f_at_x, grad_default=False)
    trace = _start_trace("apga", p, x, {"eta": eta}, store_iterates)
    _record(trace, 0, x, f_at_x, grad_at_x, np.nan, None)
    termination = "max_iterations"
    for k in range(1, rule.max_iterations + 1):
        tic = time.perf_counter()
        rec = apga_step(p, x, x_prev, k, eta)
        step_norm = float(np.linalg.norm(rec.x_new - x))
        x_prev, x = x, rec.x_new
        f_at_x, grad_at_x = value_and_gradient(p.smooth, x)
        _record(trace, k, x, f_at_x, grad_at_x, step_norm, tic)
        if rule.step_tol is not None and step_norm <= rule.step_tol:
            termination = "step_tol"
            break
    trace.metadata["termination"] = termination
    return trace


def _sufficient_decrease(p, x_candidate, f_at_x, grad_at_x, eta):
    return p.smooth.value(x_candidate) <= f_at_x - 0.5 * eta * float(grad_at_x @ grad_at_x)


def run_aa_pga(p, x0, eta, cfg, stop: Optional[StoppingRule] = None, *, store_iterates=False):
    """Window-accelerated PGA on the auxiliary sequence.

    Treats y_{k+1} = prox(y_k) - eta*grad f(prox(y_k)) as the fixed-point
    map, extrapolates the y-sequence every q steps, and accepts the
    candidate only under the sufficient-decrease check used by the
    energy variant.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = as_vector(x0, "x0").copy()
    y = x.copy()
    f_at_x, grad_at_x = value_and_gradient(p.smooth, x)
    rule = (stop or StoppingRule()).resolved(f_at_x, grad_default=False)
    params = {"eta": eta, "m": cfg.m, "q": cfg.q, "beta": cfg.beta, "lam": cfg.lam}
    trace = _start_trace("aa-pga", p, x, params, store_iterates)
    trace.metadata["aa_sequence"] = "auxiliary"
    window = AndersonWindow(cfg.m)
    _record(trace, 0, x, f_at_x, grad_at_x, np.nan, None)
    termination = "max_iterations"
    for k in range(rule.max_iterations):
        tic = time.perf_counter()
        y_next = x - eta * grad_at_x
        x_next = p.prox(y_next, eta)
        window.push(y, y_next)
        aa_applied, accepted = False, None
        if k % cfg.q == 0 and k != 0:
            try:
                alpha = solve_coefficients(window, cfg.lam)
                y_candidate = mix(window, alpha, cfg.beta)
                aa_applied = True
                x_candidate = p.prox(y_candidate, eta)
                accepted = _sufficient_decrease(p, x_candidate, f_at_x, grad_at_x, eta)
                if accepted:
                    x_next, y_next = x_candidate, y_candidate
            except SingularSystem as exc:
                trace.record_event(k, "solve-fallback", str(exc))
        step_norm = float(np.linalg.norm(x_next - x))
        x, y = x_next, y_next
        f_at_x, grad_at_x = value_and_gradient(p.smooth, x)
        _record(trace, k + 1, x, f_at_x, grad_at_x, step_norm, tic,
                aa_applied=aa_applied, aa_accepted=accepted)
        if rule.step_tol is not None and step_norm <= rule.step_tol:
            termination = "step_tol"
            break
    trace.metadata["termination"] = termination
    return trace


def run_aa_aegd_prox(
    p,
    x0,
    eta,
    cfg,
    stop: Optional[StoppingRule] = None,
    *,
    replace_aux=True,
    store_iterates=False,
    store_energies=False,
):
    """Energy-adaptive stepper with prox and guarded window extrapolation.

    Per iteration: the energy step on the smooth part produces the
    auxiliary point y_{k+1}, the prox projects it to x_{k+1}, and the
    window records the pair (y_k, y_{k+1}).  On mixing iterations the
    extrapolated auxiliary point is projected and accepted only if

        f(x_candidate) <= f(x_k) - (eta/2)*||grad f(x_k)||^2

    with f the smooth part and the gradient taken at the current accepted
    iterate.  Rejection keeps the unaccelerated iterate; the window is
    never purged.  ``replace_aux`` also rebases the running auxiliary
    point on acceptance so the next residual is consistent (set False to
    keep the pre-mix point, matching a strictly literal reading of the
    update rule).  The energy state is never modified by the mixing
    branch.  Pass ``cfg=None`` for the plain energy+prox stepper.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = as_vector(x0, "x0").copy()
    y = x.copy()
    f_at_x, grad_at_x = value_and_gradient(p.smooth, x)
    if f_at_x + getattr(p.smooth, "c", 1.0) <= 0:
        raise EnergyDomainViolation("f(x0) + c must be positive")
    c = float(getattr(p.smooth, "c", 1.0))
    state = EnergyState(r=np.full(x.shape[0], np.sqrt(f_at_x + c)), c=c)
    rule = (stop or StoppingRule()).resolved(f_at_x, grad_default=False)

    params = {"eta": eta, "c": c}
    method = "aegd-prox"
    if cfg is not None:
        method = "aa-aegd-prox"
        params.update({"m": cfg.m, "q": cfg.q, "beta": cfg.beta, "lam": cfg.lam})
    trace = _start_trace(method, p, x, params, store_iterates, store_energies)
    trace.metadata["aa_sequence"] = "auxiliary" if cfg is not None else None
    window = AndersonWindow(cfg.m) if cfg is not None else None
    _record(trace, 0, x, f_at_x, grad_at_x, np.nan, None,
            r_min=state.r.min(), r_max=state.r.max(), energy=state.r)

    termination = "max_iterations"
    for k in range(rule.max_iterations):
        tic = time.perf_counter()
        if not np.all(np.isfinite(grad_at_x)):
            raise NonFiniteGradient("smooth gradient contains NaN/Inf")
        if f_at_x + c <= 0:
            raise EnergyDomainViolation(f"f(x) + c = {f_at_x + c:.6e} must be positive")
        dy, r_new = kernels.aegd_update(grad_at_x, state.r, np.sqrt(f_at_x + c), eta)
        state = EnergyState(r=r_new, c=c)
        y_next = x + dy
        x_next = p.prox(y_next, eta)

        aa_applied, accepted = False, None
        if window is not None:
            window.push(y, y_next)
            if k % cfg.q == 0 and k != 0:
                try:
                    alpha = solve_coefficients(window, cfg.lam)
                    y_candidate = mix(window, alpha, cfg.beta)
                    aa_applied = True
                    x_candidate = p.prox(y_candidate, eta)
                    accepted = _sufficient_decrease(p, x_candidate, f_at_x, grad_at_x, eta)
                    if accepted:
                        x_next = x_candidate
                        if replace_aux:
                            y_next = y_candidate
                except SingularSystem as exc:
                    trace.record_event(k, "solve-fallback", str(exc))

        step_norm = float(np.linalg.norm(x_next - x))
        x, y = x_next, y_next
        f_at_x, grad_at_x = value_and_gradient(p.smooth, x)
        _record(
            trace, k + 1, x, f_at_x, grad_at_x, step_norm, tic,
            aa_applied=aa_applied, aa_accepted=accepted,
            r_min=state.r.min(), r_max=state.r.max(),
            energy=state.r,
        )
        if rule.step_tol is not None and step_norm <= rule.step_tol:
            termination = "step_tol"
            break
    trace.metadata["termination"] = termination
    return trace
