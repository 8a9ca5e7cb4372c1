"""Objective functions: the test problems, synthetic data generators,
and CSV ingestion.

Every objective exposes ``value``, ``gradient``, an optional fused
``value_and_gradient``, and the energy shift ``c`` chosen so that
f(x) + c stays positive on the evaluation domain.  Evaluation is
reentrant: objectives close over immutable arrays only.
"""

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import BadLabel, DimensionMismatch, ParseError, RaggedRows
from .linalg import as_matrix, as_vector, spectral_bounds, spectral_norm
from .proximal import BoxProx, NonnegProx, ProxOperator


class ObjectiveFunction:
    """Differentiable objective f: R^n -> R, bounded below."""

    def __init__(self, dimension, value_fn, gradient_fn, value_and_gradient_fn=None,
                 c=1.0, name="objective", f_star=None):
        self.dimension = int(dimension)
        self._value_fn = value_fn
        self._gradient_fn = gradient_fn
        self._fused_fn = value_and_gradient_fn
        self.c = float(c)
        self.name = name
        self.f_star = f_star

    def value(self, x):
        return float(self._value_fn(np.asarray(x, dtype=float)))

    def gradient(self, x):
        g = np.asarray(self._gradient_fn(np.asarray(x, dtype=float)), dtype=float)
        if g.shape != (self.dimension,):
            raise DimensionMismatch(
                f"gradient has shape {g.shape}, expected ({self.dimension},)"
            )
        return g

    def value_and_gradient(self, x):
        if self._fused_fn is not None:
            return self._fused_fn(np.asarray(x, dtype=float))
        return self.value(x), self.gradient(x)


class QuadraticProblem(ObjectiveFunction):
    """f(x) = 0.5*x'Ax - b'x with symmetric positive definite A.

    The minimizer A^{-1} b and the spectral interval [mu, L] are computed
    at construction.  The energy shift defaults to 1 + max(0, -f_star)
    so f + c >= 1 everywhere, keeping the energy stepper's domain valid
    even though min f < 0 for generic b.
    """

    def __init__(self, A, b, c=None, name="quadratic"):
        A = as_matrix(A, "A")
        b = as_vector(b, "b")
        if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
            raise DimensionMismatch("A must be square and match b")
        mu, L = spectral_bounds(A)
        if mu <= 0:
            raise ValueError(f"A must be positive definite (smallest eigenvalue {mu:.3e})")
        minimizer = np.linalg.solve(A, b)
        f_star = float(0.5 * minimizer @ (A @ minimizer) - b @ minimizer)
        if c is None:
            c = 1.0 + max(0.0, -f_star)
        super().__init__(
            dimension=b.shape[0],
            value_fn=self._value,
            gradient_fn=self._gradient,
            value_and_gradient_fn=self._both,
            c=c,
            name=name,
            f_star=f_star,
        )
        self.A = A
        self.b = b
        self.minimizer = minimizer
        self.mu = mu
        self.L = L

    @property
    def condition_number(self):
        return self.L / self.mu

    def _value(self, x):
        return 0.5 * x @ (self.A @ x) - self.b @ x

    def _gradient(self, x):
        return self.A @ x - self.b

    def _both(self, x):
        Ax = self.A @ x
        return float(0.5 * x @ Ax - self.b @ x), Ax - self.b


@dataclass
class CompositeProblem:
    """Smooth part plus a proximable nonsmooth part with a gradient
    Lipschitz estimate for step-size selection."""

    smooth: ObjectiveFunction
    prox: ProxOperator
    lipschitz: float
    name: str = "composite"
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lipschitz <= 0:
            raise ValueError("lipschitz estimate must be positive")


def make_quadratic(dim, kappa, seed):
    """Random quadratic with eigenvalues log-spaced in [1, kappa].

    The spectrum is rotated by a seeded random orthogonal matrix and b is
    standard normal; identical arguments give bitwise-identical problems.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if kappa <= 1:
        raise ValueError("kappa must exceed 1")
    rng = np.random.default_rng(seed)
    basis, upper = np.linalg.qr(rng.standard_normal((dim, dim)))
    basis = basis * np.sign(np.diag(upper))
    eigs = np.logspace(0.0, np.log10(kappa), dim)
    A = (basis * eigs) @ basis.T
    A = 0.5 * (A + A.T)
    b = rng.standard_normal(dim)
    return QuadraticProblem(A, b, name=f"quadratic(dim={dim}, kappa={kappa:g})")


def rosenbrock_2d():
    """(1-x1)^2 + 100*(x2 - x1^2)^2 with its analytic gradient."""
    return ObjectiveFunction(
        dimension=2,
        value_fn=lambda x: kernels.rosenbrock_value_grad(x)[0],
        gradient_fn=lambda x: kernels.rosenbrock_value_grad(x)[1],
        value_and_gradient_fn=kernels.rosenbrock_value_grad,
        c=1.0,
        name="rosenbrock",
        f_star=0.0,
    )


def _stable_sigmoid_neg(t):
    """1 / (1 + exp(t)) without overflow for large |t|."""
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = np.exp(-t[pos]) / (1.0 + np.exp(-t[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(t[~pos]))
    return out


def make_logistic(A, y, mu=10.0):
    """L2-regularized logistic loss constrained to the unit max-norm box.

    f(x) = (1/M) sum_i log(1 + exp(-y_i a_i'x)) + mu*||x||^2, labels in
    {-1, +1}; the nonsmooth part is the indicator of {||x||_inf <= 1}.
    The gradient Lipschitz estimate is ||A||_2^2/(4M) + 2*mu.
    """
    A = as_matrix(A, "A")
    y = as_vector(y, "y")
    samples, features = A.shape
    if y.shape[0] != samples:
        raise DimensionMismatch(f"{samples} rows but {y.shape[0]} labels")
    bad = np.flatnonzero(~np.isin(y, (-1.0, 1.0)))
    if bad.size:
        raise BadLabel(f"label at index {bad[0]} is {y[bad[0]]!r}, expected -1 or +1")

    def fused(x):
        margins = y * (A @ x)
        value = float(np.logaddexp(0.0, -margins).mean() + mu * (x @ x))
        weights = _stable_sigmoid_neg(margins)
        grad = -(A.T @ (y * weights)) / samples + 2.0 * mu * x
        return value, grad

    smooth = ObjectiveFunction(
        dimension=features,
        value_fn=lambda x: fused(x)[0],
        gradient_fn=lambda x: fused(x)[1],
        value_and_gradient_fn=fused,
        c=1.0,
        name="logistic",
    )
    lipschitz = spectral_norm(A) ** 2 / (4.0 * samples) + 2.0 * mu
    return CompositeProblem(
        smooth=smooth,
        prox=BoxProx(1.0),
        lipschitz=lipschitz,
        name="logistic",
        data={"samples": samples, "features": features, "mu": mu},
    )


def make_nnls(A, b, mu=0.1):
    """Regularized least squares constrained to the nonnegative orthant.

    f(x) = ||Ax - b||^2 / (2M) + mu*||x||^2, nonsmooth part the indicator
    of {x >= 0}; gradient Lipschitz estimate ||A||_2^2/M + 2*mu.
    """
    A = as_matrix(A, "A")
    b = as_vector(b, "b")
    samples, features = A.shape
    if b.shape[0] != samples:
        raise DimensionMismatch(f"{samples} rows but {b.shape[0]} targets")

    def fused(x):
        residual = A @ x - b
        value = float((residual @ residual) / (2.0 * samples) + mu * (x @ x))
        grad = (A.T @ residual) / samples + 2.0 * mu * x
        return value, grad

    smooth = ObjectiveFunction(
        dimension=features,
        value_fn=lambda x: fused(x)[0],
        gradient_fn=lambda x: fused(x)[1],
        value_and_gradient_fn=fused,
        c=1.0,
        name="nnls",
    )
    lipschitz = spectral_norm(A) ** 2 / samples + 2.0 * mu
    return CompositeProblem(
        smooth=smooth,
        prox=NonnegProx(),
        lipschitz=lipschitz,
        name="nnls",
        data={"samples": samples, "features": features, "mu": mu},
    )


def _conditioned_matrix(samples, features, kappa, rng):
    """M x n matrix with singular values log-spaced in [1, kappa]."""
    rank = min(samples, features)
    left, upper = np.linalg.qr(rng.standard_normal((samples, rank)))
    left = left * np.sign(np.diag(upper))
    right, upper = np.linalg.qr(rng.standard_normal((features, rank)))
    right = right * np.sign(np.diag(upper))
    singular = np.logspace(0.0, np.log10(kappa), rank)
    return (left * singular) @ right.T


def make_synthetic_classification(samples, features, kappa, seed, flip_fraction=0.02):
    """Ill-conditioned classification data with a planted linear model.

    Returns (A, y) with cond(A) = kappa exactly; 2% of the labels are
    flipped so the classes are not separable.
    """
    rng = np.random.default_rng(seed)
    A = _conditioned_matrix(samples, features, kappa, rng)
    planted = rng.standard_normal(features)
    y = np.where(A @ planted >= 0.0, 1.0, -1.0)
    flips = rng.random(samples) < flip_fraction
    y[flips] *= -1.0
    return A, y


def make_synthetic_regression(samples, features, kappa, seed, noise=0.01):
    """Ill-conditioned regression data with a planted linear model."""
    rng = np.random.default_rng(seed)
    A = _conditioned_matrix(samples, features, kappa, rng)
    planted = rng.standard_normal(features)
    clean = A @ planted
    scale = float(np.linalg.norm(clean)) / np.sqrt(samples)
    b = clean + noise * scale * rng.standard_normal(samples)
    return A, b


def load_csv_dataset(path, label_column, has_header=False):
    """Read a rectangular numeric CSV into (features, labels).

    ``label_column`` is a zero-based column index; errors carry 1-based
    file line numbers and point at the offending cell.
    """
    if not os.path.isfile(path):
        raise ParseError(f"dataset file not found: {path}")
    with open(path, newline="") as fh:
        rows = [(lineno, row) for lineno, row in enumerate(csv.reader(fh), start=1) if row]
    if has_header and rows:
        rows = rows[1:]
    if not rows:
        raise ParseError(f"{path}: no data rows")
    width = len(rows[0][1])
    if width < 2:
        raise ParseError(f"{path}: need at least two columns, got {width}")
    if not 0 <= label_column < width:
        raise ParseError(f"{path}: label column {label_column} out of range [0, {width})")
    values = np.empty((len(rows), width))
    for i, (lineno, row) in enumerate(rows):
        if len(row) != width:
            raise RaggedRows(
                f"{path}: line {lineno} has {len(row)} values, expected {width}"
            )
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: line {lineno}, column {j}: non-numeric value {cell!r}"
                ) from None
    labels = values[:, label_column].copy()
    features = np.delete(values, label_column, axis=1)
    return features, labels
