"""Gaussian priors over affine model-discrepancy operators.

Construction and sampling of the structured prior, algorithmic
hyper-parameter initialization from a handful of model evaluations,
conjugate-Gaussian calibration with optimal-solution updating, and an
interactive sample-inspection service.
"""

from .calibration import (
    OptimizationProblem,
    PosteriorModel,
    SensitivityOperator,
    assemble_sensitivity,
    calibrate,
    posterior_optimum_ensemble,
    sample_posterior_theta,
    solve_lowfi_optimum,
    update_optimum,
)
from .discrepancy import (
    CalibrationDataset,
    DiscrepancyParams,
    ThetaInnerProduct,
    evaluate,
    interpolate_min_norm,
)
from .errors import DiscalError
from .estimators import DiscrepancyCalibrator, DiscrepancyPrior
from .fem import (
    FunctionSpace,
    LinearSolutionOperator,
    ScenarioConfig,
    assemble_space,
    build_highfi,
    build_lowfi,
    elliptic_apply_inverse,
)
from .hyperinit import (
    CorrelationEstimate,
    GammaEstimate,
    correlation_length,
    estimate_gamma_sq,
    expected_eigratio,
    init_alpha_u,
    init_alpha_z,
    init_noise,
    init_smoothness,
    init_temporal_weights,
    initialize_hyperparams,
)
from .prior import HyperParams, PriorOperators, PriorSample, build_prior
from .studio import (
    PerturbationBasis,
    SampleDataset,
    SampleRecord,
    SessionStore,
    StudioSession,
    generate_sample_dataset,
    overview_payload,
    perturbation_basis,
)
from .workflows import (
    ScenarioBundle,
    build_scenario,
    generate_calibration_data,
    run_pipeline,
    solve_highfi_optimum,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
