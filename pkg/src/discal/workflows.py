"""End-to-end pipelines tying scenarios, data generation, and calibration."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .calibration import (
    OptimizationProblem,
    assemble_sensitivity,
    calibrate,
    posterior_optimum_ensemble,
    solve_lowfi_optimum,
)
from .discrepancy import CalibrationDataset
from .errors import ConfigError
from .fem import (
    FunctionSpace,
    LinearSolutionOperator,
    ScenarioConfig,
    assemble_space,
    build_highfi,
    build_lowfi,
    default_target,
)
from .hyperinit import initialize_hyperparams
from .prior import HyperParams, PriorOperators


@dataclass
class ScenarioBundle:
    """Everything derived from a scenario config, ready for calibration."""

    scenario: ScenarioConfig
    state_space: FunctionSpace
    control_space: FunctionSpace
    lowfi: LinearSolutionOperator
    highfi: LinearSolutionOperator
    problem: OptimizationProblem
    z_tilde: np.ndarray

    @property
    def target(self):
        return self.problem.target


def build_scenario(scenario: ScenarioConfig) -> ScenarioBundle:
    scenario = scenario.with_defaults()
    state_space = assemble_space(scenario)
    control_space = state_space.spatial()
    lowfi = build_lowfi(scenario, state_space)
    highfi = build_highfi(scenario, state_space)
    problem = OptimizationProblem(
        state_space,
        control_space,
        lowfi,
        default_target(scenario, state_space),
        scenario.regularization,
    )
    z_tilde = solve_lowfi_optimum(problem)
    return ScenarioBundle(
        scenario=scenario,
        state_space=state_space,
        control_space=control_space,
        lowfi=lowfi,
        highfi=highfi,
        problem=problem,
        z_tilde=z_tilde,
    )


def grf_samples(nodes, n, rng, length=0.1, amplitude=1.0):
    """Mean-zero squared-exponential Gaussian-random-field draws on nodes."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim == 1:
        nodes = nodes[:, None]
    d2 = np.sum((nodes[:, None, :] - nodes[None, :, :]) ** 2, axis=-1)
    C = amplitude**2 * np.exp(-d2 / (2.0 * length**2))
    C[np.diag_indices_from(C)] += 1e-10 * amplitude**2
    L = sla.cholesky(C, lower=True)
    return rng.standard_normal((n, nodes.shape[0])) @ L.T


def generate_calibration_data(
    bundle: ScenarioBundle, n_data=2, seed=0, grf_length=0.1, grf_amplitude=0.25
) -> CalibrationDataset:
    """Evaluate both models on the optimum plus random source fields.

    The first control is always the low-fidelity optimum; the rest are
    Gaussian-random-field draws whose amplitude is ``grf_amplitude`` times
    its RMS level, keeping the extra data local to the optimum.
    """
    if n_data < 1:
        raise ConfigError("n_data must be at least 1")
    rng = np.random.default_rng(seed)
    Z = [bundle.z_tilde]
    if n_data > 1:
        amp = grf_amplitude * float(np.sqrt(np.mean(bundle.z_tilde**2)))
        amp = amp if amp > 0 else 1.0
        Z.extend(
            grf_samples(
                bundle.control_space.nodes, n_data - 1, rng, grf_length, amp
            )
        )
    Z = np.asarray(Z)
    D_raw = bundle.highfi(Z) - bundle.lowfi(Z)
    return CalibrationDataset.from_raw(Z, D_raw)


def solve_highfi_optimum(bundle: ScenarioBundle):
    """Brute-force reference: the same program solved on the high-fidelity model."""
    problem = OptimizationProblem(
        bundle.state_space,
        bundle.control_space,
        bundle.highfi,
        bundle.target,
        bundle.scenario.regularization,
    )
    return solve_lowfi_optimum(problem)


def run_pipeline(
    scenario: ScenarioConfig,
    n_data=2,
    ensemble_n=200,
    seed=0,
    delta_kappa=None,
    n_mc_gamma=200,
    n_mc_eig=10000,
    hyper: HyperParams | None = None,
    include_highfi_optimum=True,
):
    """Scenario -> data -> hyper-parameters -> posterior -> optimum ensemble."""
    bundle = build_scenario(scenario)
    dataset = generate_calibration_data(bundle, n_data=n_data, seed=scenario.seed)
    if hyper is None:
        hyper = initialize_hyperparams(
            dataset,
            bundle.state_space,
            bundle.control_space,
            bundle.lowfi,
            delta_kappa=delta_kappa,
            n_mc_gamma=n_mc_gamma,
            n_mc_eig=n_mc_eig,
            seed=seed,
        )
    prior = PriorOperators(
        bundle.state_space, bundle.control_space, hyper, z_tilde=bundle.z_tilde
    )
    posterior = calibrate(dataset, prior)
    sens = assemble_sensitivity(bundle.problem, bundle.z_tilde)
    samples = posterior_optimum_ensemble(sens, posterior, ensemble_n, seed)
    ensemble = {
        "z_tilde": bundle.z_tilde.tolist(),
        "samples": samples.tolist(),
    }
    if include_highfi_optimum:
        ensemble["hifi_optimum"] = solve_highfi_optimum(bundle).tolist()
    return {
        "bundle": bundle,
        "dataset": dataset,
        "hyperparams": hyper,
        "prior": prior,
        "posterior": posterior,
        "sensitivity": sens,
        "ensemble": ensemble,
    }
