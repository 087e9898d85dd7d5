"""Remote phase sensing with coherently delocalized single-photon addition.

Simulation and estimation toolkit for a two-node sensing protocol where a
single photon is added coherently across two coherent beams and the
relative phase of the addition is read out by double homodyne detection.
The package provides exact moments of the heralded state, optimal linear
homodyne observables and their sensitivity, quantum Fisher information
and entanglement witnesses, an efficiency-aware Monte Carlo quadrature
sampler, and calibration-curve phase estimation with bootstrap errors.
"""

from ._version import VERSION as __version__
from .exceptions import (
    ConfigError,
    CutoffTooSmallError,
    DegenerateVarianceError,
    HeraldSenseError,
    IngestError,
    InsufficientSamplesError,
    NonMonotonicCurveError,
    NumericError,
    OutOfRangeError,
    SingularCovarianceError,
)
from .moments import (
    QUADRATURE_PHASES,
    HeraldedStateSpec,
    MomentSet,
    assemble,
    covariance_matrix,
    first_moment,
    mean_vector,
    mean_vector_derivative,
    norm_sq,
    second_moment,
)
from .metrology import (
    DIFFERENCE_COEFFS,
    ObservableCoefficients,
    SensitivityReport,
    heralding_rate,
    npt,
    optimize_observable,
    qfi,
    sensitivity_of,
)
from .noise import (
    EfficiencyPair,
    EmpiricalEtaP,
    eta_p_of_alpha,
    lossy_mean_x,
    lossy_sensitivity,
    lossy_var_x,
)
from .fock import (
    FockCutoff,
    TwoModeDensityMatrix,
    TwoModeState,
    apply_mixture_and_loss,
    build_heralded_state,
    numeric_moment_set,
    partial_transpose_negativity,
    qfi_overlap,
    quadrature_marginal,
)
from .sampler import (
    PHASE_QUADRATURES,
    SamplerConfig,
    draw,
    joint_pdf,
    marginal_pdf,
    sample_stream_to_file,
)
from .estimator import (
    CalibrationCurve,
    EstimationResult,
    RemotePhaseEstimator,
    SensitivityRow,
    build_calibration,
    default_phi_range,
    estimate_phase,
    ingest_samples,
    monotone_halfwidth,
    sensitivity_vs_alpha,
)

__all__ = [
    "__version__",
    "HeraldSenseError",
    "ConfigError",
    "IngestError",
    "NumericError",
    "CutoffTooSmallError",
    "SingularCovarianceError",
    "DegenerateVarianceError",
    "NonMonotonicCurveError",
    "OutOfRangeError",
    "InsufficientSamplesError",
    "QUADRATURE_PHASES",
    "HeraldedStateSpec",
    "MomentSet",
    "norm_sq",
    "first_moment",
    "second_moment",
    "mean_vector",
    "mean_vector_derivative",
    "covariance_matrix",
    "assemble",
    "DIFFERENCE_COEFFS",
    "ObservableCoefficients",
    "SensitivityReport",
    "sensitivity_of",
    "optimize_observable",
    "qfi",
    "npt",
    "heralding_rate",
    "EfficiencyPair",
    "EmpiricalEtaP",
    "eta_p_of_alpha",
    "lossy_mean_x",
    "lossy_var_x",
    "lossy_sensitivity",
    "FockCutoff",
    "TwoModeState",
    "TwoModeDensityMatrix",
    "build_heralded_state",
    "apply_mixture_and_loss",
    "partial_transpose_negativity",
    "quadrature_marginal",
    "qfi_overlap",
    "numeric_moment_set",
    "PHASE_QUADRATURES",
    "SamplerConfig",
    "joint_pdf",
    "marginal_pdf",
    "draw",
    "sample_stream_to_file",
    "CalibrationCurve",
    "EstimationResult",
    "SensitivityRow",
    "monotone_halfwidth",
    "default_phi_range",
    "build_calibration",
    "estimate_phase",
    "ingest_samples",
    "sensitivity_vs_alpha",
    "RemotePhaseEstimator",
]
