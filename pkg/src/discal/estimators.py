"""Estimator facades over the prior and calibration machinery.

These follow the scikit-learn conventions: constructor arguments are stored
verbatim, ``fit`` consumes a data matrix pair, fitted artifacts carry a
trailing underscore, and ``get_params`` / ``set_params`` drive the
interactive hyper-parameter loop.
"""

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_fitted
from .calibration import (
    OptimizationProblem,
    PosteriorModel,
    SensitivityOperator,
    assemble_sensitivity,
    calibrate,
    posterior_optimum_ensemble,
    solve_lowfi_optimum,
)
from .discrepancy import CalibrationDataset
from .errors import ValidationError
from .fem import FunctionSpace, LinearSolutionOperator
from .hyperinit import (
    estimate_gamma_sq,
    expected_eigratio,
    init_alpha_u,
    init_alpha_z,
    init_noise,
    init_smoothness,
    init_temporal_weights,
)
from .prior import HyperParams, PriorOperators


class DiscrepancyPrior(BaseEstimator):
    """Gaussian discrepancy prior with data-driven hyper-parameters.

    Any hyper-parameter left at ``None`` is initialized from the calibration
    data during :meth:`fit`; explicitly set values are honored as-is.  The
    first row of the fitted controls is taken as the expansion point.

    Parameters
    ----------
    state_space, control_space : FunctionSpace
        Discretized state and control spaces.
    lowfi : LinearSolutionOperator or None
        Low-fidelity solution operator; required when ``alpha_z`` must be
        estimated (its initialization probes the model's sensitivity).
    alpha_u, beta_u, alpha_z, beta_z, alpha_d, beta_t : float or None
        Prior and noise hyper-parameters.
    alpha_t : array-like, "auto", or None
        Temporal variance weights for transient states ("auto" estimates
        them from the data; None on stationary problems).
    """

    def __init__(
        self,
        state_space=None,
        control_space=None,
        lowfi=None,
        alpha_u=None,
        beta_u=None,
        alpha_z=None,
        beta_z=None,
        alpha_d=None,
        alpha_t="auto",
        beta_t=None,
        eps_t=0.01,
        delta_kappa=None,
        n_mc_gamma=200,
        n_mc_eig=10000,
        random_state=0,
    ):
        self.state_space = state_space
        self.control_space = control_space
        self.lowfi = lowfi
        self.alpha_u = alpha_u
        self.beta_u = beta_u
        self.alpha_z = alpha_z
        self.beta_z = beta_z
        self.alpha_d = alpha_d
        self.alpha_t = alpha_t
        self.beta_t = beta_t
        self.eps_t = eps_t
        self.delta_kappa = delta_kappa
        self.n_mc_gamma = n_mc_gamma
        self.n_mc_eig = n_mc_eig
        self.random_state = random_state

    def fit(self, Z, D):
        """Estimate missing hyper-parameters from raw data pairs and build
        the prior operators."""
        if self.state_space is None or self.control_space is None:
            raise ValidationError("state_space and control_space are required")
        dataset = CalibrationDataset.from_raw(Z, D)
        self.dataset_ = dataset
        U, C = self.state_space, self.control_space

        beta_u, beta_z, beta_t = self.beta_u, self.beta_z, self.beta_t
        if beta_u is None or beta_z is None or (U.is_transient and beta_t is None):
            smooth = init_smoothness(dataset, U, C, delta_kappa=self.delta_kappa)
            beta_u = smooth.beta_u if beta_u is None else beta_u
            beta_z = smooth.beta_z if beta_z is None else beta_z
            if U.is_transient and beta_t is None:
                beta_t = smooth.beta_t

        alpha_t = None
        if U.is_transient:
            if isinstance(self.alpha_t, str) and self.alpha_t == "auto":
                alpha_t = init_temporal_weights(dataset, U, eps_t=self.eps_t)
            elif self.alpha_t is None:
                raise ValidationError("alpha_t is required for transient states")
            else:
                alpha_t = np.asarray(self.alpha_t, dtype=float)

        provisional = HyperParams(
            alpha_u=1.0,
            beta_u=beta_u,
            alpha_z=1.0,
            beta_z=beta_z,
            alpha_d=1.0,
            alpha_t=alpha_t,
            beta_t=beta_t,
            eps_t=self.eps_t,
        )
        scaffold = PriorOperators(U, C, provisional, z_tilde=dataset.z_tilde)

        alpha_u = self.alpha_u
        if alpha_u is None:
            alpha_u = init_alpha_u(dataset, scaffold)
        alpha_z = self.alpha_z
        if alpha_z is None:
            if self.lowfi is None:
                raise ValidationError("estimating alpha_z requires the lowfi operator")
            gamma = estimate_gamma_sq(
                self.lowfi,
                dataset.z_tilde,
                scaffold,
                n_mc=self.n_mc_gamma,
                seed=self.random_state,
            )
            self.gamma_ = gamma
            ratio = expected_eigratio(
                scaffold.factor_z.generalized_eigenvalues(),
                n_mc=self.n_mc_eig,
                seed=self.random_state + 1,
            )
            self.eigratio_ = ratio
            alpha_z = init_alpha_z(
                gamma.gamma_sq, dataset.D[0], dataset.z_tilde, ratio, U, C
            )
        alpha_d = self.alpha_d if self.alpha_d is not None else init_noise(dataset)

        self.hyperparams_ = HyperParams(
            alpha_u=alpha_u,
            beta_u=beta_u,
            alpha_z=alpha_z,
            beta_z=beta_z,
            alpha_d=alpha_d,
            alpha_t=alpha_t,
            beta_t=beta_t,
            eps_t=self.eps_t,
        )
        self.model_ = PriorOperators(U, C, self.hyperparams_, z_tilde=dataset.z_tilde)
        return self

    # -- fitted surface ----------------------------------------------------------

    def sample_theta(self, seed):
        check_fitted(self, "model_")
        return self.model_.sample_theta(seed)

    def sample_delta_field(self, z, seed):
        check_fitted(self, "model_")
        return self.model_.sample_delta_field(z, self.model_.z_tilde, seed)

    def trace_state_covariance(self):
        check_fitted(self, "model_")
        return self.model_.trace_state_covariance()

    def trace_theta_covariance(self):
        check_fitted(self, "model_")
        return self.model_.trace_theta_covariance()


class DiscrepancyCalibrator(BaseEstimator):
    """Posterior calibration plus optimal-solution updating.

    ``fit`` solves the low-fidelity program, fits the prior (when given an
    unfitted :class:`DiscrepancyPrior`), conditions it on the data, and
    assembles the post-optimality sensitivity operator.  ``predict`` maps
    discrepancy parameters to corrected optimal controls.
    """

    def __init__(self, problem: OptimizationProblem = None, prior: DiscrepancyPrior = None):
        self.problem = problem
        self.prior = prior

    def fit(self, Z, D):
        if self.problem is None or self.prior is None:
            raise ValidationError("problem and prior are required")
        Z = np.asarray(Z, dtype=float)
        self.z_tilde_ = solve_lowfi_optimum(self.problem)
        prior = self.prior
        if getattr(prior, "model_", None) is None:
            prior.fit(Z, D)
        self.sensitivity_ = assemble_sensitivity(self.problem, self.z_tilde_)
        self.posterior_ = calibrate(prior.dataset_, prior.model_)
        return self

    def predict(self, theta=None):
        """Corrected optimal control for ``theta`` (posterior mean default)."""
        check_fitted(self, "posterior_")
        if theta is None:
            theta = self.posterior_.mean
        return self.sensitivity_.update(theta)

    def sample_theta(self, seed):
        check_fitted(self, "posterior_")
        return self.posterior_.sample(seed)

    def sample_optima(self, n, seed=0):
        check_fitted(self, "posterior_")
        return posterior_optimum_ensemble(self.sensitivity_, self.posterior_, n, seed)
