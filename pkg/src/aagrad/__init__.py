"""Anderson-accelerated gradient methods with energy-adaptive steps.

Building blocks:
  * objectives  -- quadratic/Rosenbrock/logistic/NNLS problems, synthetic
                   data with prescribed conditioning, CSV ingestion
  * optimizers  -- gradient descent and the energy-adaptive stepper
  * anderson    -- window extrapolation wrapped around either stepper
  * proximal    -- composite solvers (PGA, APGA, accelerated variants)
  * diagnostics -- per-step gain factors and rate-bound verification
  * experiments / cli -- declarative benchmark harness
"""

from .anderson import AAConfig, AndersonWindow, chebyshev_gain, mix, run_aa, solve_coefficients
from .diagnostics import (
    GainReport,
    format_summary,
    projection_gain,
    summarize,
    summary_to_json,
    verify_theorem_3_1,
)
from .errors import (
    AagradError,
    BadLabel,
    BoundViolated,
    ConfigError,
    Diverged,
    DimensionMismatch,
    EnergyDomainViolation,
    NonFiniteGradient,
    NotSymmetric,
    ParseError,
    RaggedRows,
    SingularSystem,
    ZeroGradient,
)
from .linalg import solve_regularized_ls, spectral_bounds, spectral_norm
from .objectives import (
    CompositeProblem,
    ObjectiveFunction,
    QuadraticProblem,
    load_csv_dataset,
    make_logistic,
    make_nnls,
    make_quadratic,
    make_synthetic_classification,
    make_synthetic_regression,
    rosenbrock_2d,
)
from .optimizers import (
    EnergyState,
    StepRecord,
    aegd_step,
    effective_step,
    gd_step,
    initial_energy,
    run_optimizer,
)
from .proximal import (
    BoxProx,
    IdentityProx,
    NonnegProx,
    ProxOperator,
    apga_step,
    pga_step,
    prox_box_linf,
    prox_nonneg,
    run_aa_aegd_prox,
    run_aa_pga,
    run_apga,
    run_pga,
)
from .trace import ConvergenceTrace, StoppingRule

__version__ = "0.1.0"
