"""Base iteration steppers: plain gradient descent and the
energy-adaptive variant (AEGD).

Each stepper is a pure function mapping (point, state) to the next
point, so the Anderson accelerator can wrap either one without knowing
how the step was produced.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import EnergyDomainViolation, NonFiniteGradient
from .linalg import as_vector
from .trace import StoppingRule


@dataclass
class EnergyState:
    """Per-coordinate energy r (entrywise positive) and its shift c.

    The update divides r by 1 + 2*eta*v^2 >= 1, so r never increases:
    unconditional energy stability for any step size.
    """

    r: np.ndarray
    c: float


@dataclass
class StepRecord:
    """Result of one base step: the new point, the residual
    x_new - x_old, and (energy steppers only) the adaptive per-coordinate
    step size actually realized."""

    x_new: np.ndarray
    residual: np.ndarray
    effective_step: Optional[np.ndarray] = None


def initial_energy(f, x0, c=None):
    """Energy state at the starting point: r0 = sqrt(f(x0)+c) * ones."""
    x0 = as_vector(x0, "x0")
    if c is None:
        c = getattr(f, "c", 1.0)
    fx = f.value(x0)
    if fx + c <= 0:
        raise EnergyDomainViolation(f"f(x0) + c = {fx + c:.6e} must be positive")
    r0 = np.full(x0.shape[0], np.sqrt(fx + c))
    return EnergyState(r=r0, c=float(c))


def _checked_gradient(f, x):
    g = np.asarray(f.gradient(x), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient(f"gradient contains NaN/Inf at x with |x| = {np.linalg.norm(x):.3e}")
    return g


def gd_step(f, x, eta):
    """x_new = x - eta * grad f(x)."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = as_vector(x, "x")
    g = _checked_gradient(f, x)
    x_new = x - eta * g
    return StepRecord(x_new=x_new, residual=x_new - x)


def energy_update(x, fx, g, state, eta):
    """Energy update from precomputed f(x) and grad f(x).

    Returns (x_new, new_state, sqrt(f(x)+c)).  The drivers call this
    directly so each iterate is evaluated once.
    """
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient("gradient contains NaN/Inf")
    if fx + state.c <= 0:
        raise EnergyDomainViolation(f"f(x) + c = {fx + state.c:.6e} must be positive")
    sqrt_fc = np.sqrt(fx + state.c)
    dx, r_new = kernels.aegd_update(g, state.r, sqrt_fc, eta)
    return x + dx, EnergyState(r=r_new, c=state.c), sqrt_fc


def aegd_step(f, x, state, eta):
    """One energy-adaptive step; returns the record and the new state.

    v = grad f(x) / (2*sqrt(f(x)+c)), r_new = r / (1 + 2*eta*v^2),
    x_new = x - 2*eta*r_new*v, all entrywise.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = as_vector(x, "x")
    fx, g = value_and_gradient(f, x)
    x_new, new_state, sqrt_fc = energy_update(x, fx, g, state, eta)
    record = StepRecord(
        x_new=x_new,
        residual=x_new - x,
        effective_step=eta * new_state.r / sqrt_fc,
    )
    return record, new_state


def effective_step(state_after, f, x, eta):
    """Adaptive step size eta * r_new / sqrt(f(x)+c), entrywise.

    As the run converges this tends to a positive constant vector, which
    is what makes the energy stepper behave like a fixed-point iteration
    asymptotically (and hence amenable to window extrapolation).
    """
    x = as_vector(x, "x")
    fx = f.value(x)
    if fx + state_after.c <= 0:
        raise EnergyDomainViolation(f"f(x) + c = {fx + state_after.c:.6e} must be positive")
    return eta * state_after.r / np.sqrt(fx + state_after.c)


def value_and_gradient(f, x):
    """Fused evaluation when the objective provides one, else two calls."""
    fused = getattr(f, "value_and_gradient", None)
    if fused is not None:
        return fused(x)
    return f.value(x), f.gradient(x)


def run_optimizer(
    method,
    f,
    x0,
    eta,
    stop: Optional[StoppingRule] = None,
    *,
    store_gradients=False,
    store_iterates=False,
    store_energies=False,
):
    """Drive plain GD or AEGD to a stopping rule; returns the trace.

    Identical to the accelerated driver with the window scheduler
    disabled.
    """
    from .anderson import run_aa

    return run_aa(
        method,
        f,
        x0,
        eta,
        cfg=None,
        stop=stop,
        store_gradients=store_gradients,
        store_iterates=store_iterates,
        store_energies=store_energies,
    )
