"""Spiked F-ratio eigenvalues: sampling, limit theory, exact densities and LAN inference."""

from __future__ import annotations

__version__ = "0.1.0"

from .analytics import (
    AspectRatios,
    StieltjesPoint,
    WachterTransform,
    asymptotic_variance,
    phase_threshold,
    spike_centering,
    spike_centering_derivative,
    spike_limit,
    stieltjes_edge_value,
    stieltjes_mx0,
    stieltjes_wachter,
    stieltjes_wachter_edge,
    support_edges,
    wachter_mass,
    wachter_pdf,
)
from .contour import (
    ContourKind,
    ContourResult,
    ContourSpec,
    DensityInput,
    LaplaceResult,
    contour_integral_s1,
    contour_integral_s2,
    default_contour,
    joint_log_density_ratio,
    laplace_s1,
    laplace_s2,
    to_lambda_tilde,
)
from .core import (
    EigenSample,
    FactorModelDraw,
    ModelDims,
    SecularFunction,
    Setting,
    SpikeSpec,
    generalized_eigs,
    sample_factor_model,
    sample_spiked_f,
    sample_top_eigenvalue,
    secular_eval,
    secular_roots,
)
from .errors import (
    BranchError,
    ConfigurationError,
    DomainError,
    GeometryError,
    NumericalError,
    RangeError,
    SeparationError,
    SingularityError,
    SpikedFError,
)
from .lan import (
    AFunctions,
    ConfidenceInterval,
    LanStatistic,
    LocalParam,
    TestResult,
    a_functions,
    efficient_test,
    estimate_spike,
    lan_statistic,
    local_scaling,
    loglr_closed_s1,
    loglr_closed_s2,
    spike_confidence_interval,
)
from .special import (
    KummerParams,
    LogValue,
    UniformAsymInput,
    hyp1f1_series,
    hyp1f1_uniform,
    phi_psi,
    zplus,
)
