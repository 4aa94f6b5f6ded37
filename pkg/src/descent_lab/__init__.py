"""Rescaled gradient descent of order p, acceleration, and certification.

The library is organized around a single idea: a method earns its rate
through a per-step descent inequality, and every run carries enough state to
re-check that inequality after the fact. ``descent`` holds the plain
one-step methods and their certificates, ``accel`` the two accelerated
wrappers (fixed polynomial schedule and coupled line search), ``coordinate``
the randomized single-coordinate variants, ``smoothness`` the constant
certifiers, and ``harness`` the experiment runner behind the CLI.
"""

from .accel import (
    MS_WINDOWS,
    LyapunovReport,
    MsSearchResult,
    NesterovSchedule,
    lyapunov_track,
    make_accel_kernel,
    ms_accelerate,
    ms_line_search,
    ms_step_size,
    nesterov_accelerate,
    nesterov_schedule,
    restart_constant,
    restart_wrap,
    rising_factorial,
)
from .coordinate import (
    CoordinateConfig,
    accel_rcd,
    certify_coordinate_descent,
    coordinate_step_sizes,
    rcd_step,
    run_rcd,
)
from .descent import (
    METHOD_IDS,
    RATE_KINDS,
    DescentCertificate,
    DescentConfig,
    Trace,
    TraceRecord,
    bregman_prox_step,
    certify_delta_descent,
    dual_exponent,
    gd_step,
    mirror_descent_step,
    natural_gd_step,
    natural_prox_step,
    rate_bound,
    rgd_epsilon,
    rgd_step,
    rgd_step_size,
    run_descent,
    tensor_step,
)
from .errors import (
    CapabilityError,
    ConfigError,
    LineSearchError,
    SolverError,
    SubsolverError,
)
from .geometry import Geometry, PowerDgf, QuadraticDgf, make_dgf
from .harness import (
    CSV_HEADER,
    FIGURE_NAMES,
    ExperimentConfig,
    RunRecord,
    build_figure_experiment,
    build_objective,
    certify_experiment,
    divergence_probe,
    emit_csv,
    emit_svg_plot,
    run_experiment,
    run_method,
    write_outputs,
)
from .objectives import (
    Dataset,
    fd_directional_derivative,
    make_glm_loss,
    make_hamiltonian_quartic_loss,
    make_logistic_loss,
    make_lp_regression_loss,
    make_power_norm_loss,
)
from .rng import SplitMix64
from .smoothness import (
    CertificationReport,
    certify_gradient_lower_bound,
    certify_strong_smoothness,
    derive_constants_from_strong_smoothness,
    sample_points,
)

__version__ = "0.1.0"

__all__ = [
    "CSV_HEADER",
    "CapabilityError",
    "CertificationReport",
    "ConfigError",
    "CoordinateConfig",
    "Dataset",
    "DescentCertificate",
    "DescentConfig",
    "ExperimentConfig",
    "FIGURE_NAMES",
    "Geometry",
    "LineSearchError",
    "LyapunovReport",
    "METHOD_IDS",
    "MS_WINDOWS",
    "MsSearchResult",
    "NesterovSchedule",
    "PowerDgf",
    "QuadraticDgf",
    "RATE_KINDS",
    "RunRecord",
    "SolverError",
    "SplitMix64",
    "SubsolverError",
    "Trace",
    "TraceRecord",
    "accel_rcd",
    "bregman_prox_step",
    "build_figure_experiment",
    "build_objective",
    "certify_coordinate_descent",
    "certify_delta_descent",
    "certify_experiment",
    "certify_gradient_lower_bound",
    "certify_strong_smoothness",
    "coordinate_step_sizes",
    "derive_constants_from_strong_smoothness",
    "divergence_probe",
    "dual_exponent",
    "emit_csv",
    "emit_svg_plot",
    "fd_directional_derivative",
    "gd_step",
    "lyapunov_track",
    "make_accel_kernel",
    "make_dgf",
    "make_glm_loss",
    "make_hamiltonian_quartic_loss",
    "make_logistic_loss",
    "make_lp_regression_loss",
    "make_power_norm_loss",
    "mirror_descent_step",
    "ms_accelerate",
    "ms_line_search",
    "ms_step_size",
    "natural_gd_step",
    "natural_prox_step",
    "nesterov_accelerate",
    "nesterov_schedule",
    "rate_bound",
    "rcd_step",
    "restart_constant",
    "restart_wrap",
    "rgd_epsilon",
    "rgd_step",
    "rgd_step_size",
    "rising_factorial",
    "run_descent",
    "run_experiment",
    "run_method",
    "run_rcd",
    "sample_points",
    "tensor_step",
    "write_outputs",
]
