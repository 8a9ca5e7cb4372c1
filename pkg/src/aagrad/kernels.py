"""Fused per-step numeric kernels, JIT-compiled with numba when available.

The hot inner loops of the solvers are entrywise update chains that numpy
executes with one temporary array per operation.  Each kernel below is
written once, in numba-compatible numpy, and bound either as-is (pure
numpy) or wrapped in ``numba.njit``.

Selection:
  * ``AAGRAD_PURE_NUMPY=1`` in the environment forces the numpy path.
  * If numba is not importable, the numpy path is used silently.

``benchmarks/bench_kernels.py`` times both paths side by side.

The energy update is division by ``1 + 2*eta*v**2 >= 1``, so the returned
energy is entrywise <= the input energy exactly in IEEE arithmetic; no
fastmath flags are used, to keep that guarantee.
"""

import os

import numpy as np


def _aegd_update(grad, r, sqrt_fc, eta):
    """One energy-adaptive descent update.

    Parameters
    ----------
    grad : float64[:]
        Gradient of the objective at the current point.
    r : float64[:]
        Current per-coordinate energy, entrywise positive.
    sqrt_fc : float
        sqrt(f(x) + c) at the current point.
    eta : float
        Base step size.

    Returns
    -------
    dx : float64[:]
        Displacement to add to the current point.
    r_new : float64[:]
        Updated energy, entrywise <= r.
    """
    v = grad / (2.0 * sqrt_fc)
    r_new = r / (1.0 + (2.0 * eta) * (v * v))
    dx = (-2.0 * eta) * (r_new * v)
    return dx, r_new


def _rosenbrock_value_grad(x):
    """Value and analytic gradient of the 2-D Rosenbrock function."""
    a = 1.0 - x[0]
    b = x[1] - x[0] * x[0]
    value = a * a + 100.0 * b * b
    grad = np.empty(2)
    grad[0] = -2.0 * a - 400.0 * x[0] * b
    grad[1] = 200.0 * b
    return value, grad


NUMPY_IMPLS = {
    "aegd_update": _aegd_update,
    "rosenbrock_value_grad": _rosenbrock_value_grad,
}


def jit_variants():
    """Compile and return the numba versions of every kernel.

    Raises ImportError when numba is unavailable.  Used by the benchmark
    to compare both paths regardless of the environment flag.
    """
    from numba import njit

    return {name: njit(cache=True)(fn) for name, fn in NUMPY_IMPLS.items()}


def _pure_numpy_requested():
    return os.environ.get("AAGRAD_PURE_NUMPY", "").strip() not in ("", "0")


USING_NUMBA = False
if not _pure_numpy_requested():
    try:
        _impls = jit_variants()
        USING_NUMBA = True
    except ImportError:
        _impls = NUMPY_IMPLS
else:
    _impls = NUMPY_IMPLS

aegd_update = _impls["aegd_update"]
rosenbrock_value_grad = _impls["rosenbrock_value_grad"]
