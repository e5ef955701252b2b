"""Low-fidelity optimization, posterior calibration, and solution updating.

The quadratic program is mass-weighted target tracking with Tikhonov
control regularization.  Calibration is conjugate Gaussian: the noise
covariance is ``alpha_d I_N (x) M_u^{-1}`` and the prior is the structured
parameter covariance, so posterior means, samples, and directional
variances are all computed through the data-space system

    (Sigma (x) cov_u + alpha_d I (x) M_u^{-1})

which diagonalizes jointly in the covariance eigenbasis; no dense
parameter-space matrix is ever formed.  Posterior draws use the
residual-correction identity: correct a prior draw by the data misfit of
noisy synthetic data.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._validation import as_matrix, as_vector, check_positive
from .discrepancy import CalibrationDataset, DiscrepancyParams, evaluate
from .errors import (
    CalibrationError,
    CurvatureError,
    OptimizationFailure,
    ShapeError,
)
from .fem import FunctionSpace, LinearSolutionOperator
from .prior import PriorOperators


@dataclass
class OptimizationProblem:
    """Quadratic tracking problem constrained by the low-fidelity model."""

    state_space: FunctionSpace
    control_space: FunctionSpace
    lowfi: LinearSolutionOperator
    target: np.ndarray
    regularization: float

    def __post_init__(self):
        self.target = as_vector(self.target, self.state_space.n, "target")
        check_positive(self.regularization, "regularization")
        if self.lowfi.n_out != self.state_space.n:
            raise ShapeError("operator range does not match the state space")
        if self.lowfi.n_in != self.control_space.n:
            raise ShapeError("operator domain does not match the control space")

    def objective(self, z, theta: DiscrepancyParams | None = None):
        z = as_vector(z, self.control_space.n, "z")
        u = self.lowfi(z)
        if theta is not None:
            u = u + evaluate(theta, z, self.control_space)
        r = u - self.target
        track = 0.5 * float(self.state_space.norm2(r))
        reg = 0.5 * self.regularization * float(self.control_space.norm2(z))
        return track + reg

    def gradient(self, z, theta: DiscrepancyParams | None = None):
        """Coordinate gradient of the reduced objective."""
        z = as_vector(z, self.control_space.n, "z")
        u = self.lowfi(z)
        if theta is not None:
            u = u + evaluate(theta, z, self.control_space)
        mu_r = self.state_space.apply_mass(u - self.target)
        grad = self.lowfi.matrix.T @ mu_r
        if theta is not None:
            grad = grad + self.control_space.apply_mass(theta.rows.T @ mu_r)
        return grad + self.regularization * self.control_space.apply_mass(z)


def solve_lowfi_optimum(problem: OptimizationProblem):
    """Solve the strictly convex quadratic program for the optimal control."""
    S = problem.lowfi.matrix
    Mu_S = problem.state_space.apply_mass(S.T).T
    H = S.T @ Mu_S + problem.regularization * problem.control_space.mass_s
    rhs = S.T @ problem.state_space.apply_mass(problem.target - problem.lowfi.offset)
    try:
        cf = sla.cho_factor(H)
        z_tilde = sla.cho_solve(cf, rhs)
    except sla.LinAlgError as exc:
        raise OptimizationFailure("normal equations are singular") from exc
    grad_norm = float(np.linalg.norm(problem.gradient(z_tilde)))
    if grad_norm > 1e-8 * max(1.0, float(np.linalg.norm(rhs))):
        raise OptimizationFailure(f"first-order residual too large: {grad_norm:.3e}")
    return z_tilde


class SensitivityOperator:
    """Curvature and mixed-derivative actions at the low-fidelity optimum.

    ``update(theta)`` maps a discrepancy parameter to the corrected optimal
    control via one curvature solve against the mixed derivative.
    """

    def __init__(self, problem: OptimizationProblem, z_tilde):
        self.problem = problem
        self.z_tilde = as_vector(z_tilde, problem.control_space.n, "z_tilde")
        S = problem.lowfi.matrix
        Mu_S = problem.state_space.apply_mass(S.T).T
        H = S.T @ Mu_S + problem.regularization * problem.control_space.mass_s
        self.hessian = 0.5 * (H + H.T)
        try:
            self._cho_H = sla.cho_factor(self.hessian)
        except sla.LinAlgError as exc:
            raise CurvatureError("Hessian is not positive definite") from exc
        residual = problem.lowfi(self.z_tilde) - problem.target
        self._mu_residual = problem.state_space.apply_mass(residual)
        self._S = S

    def apply_B(self, theta: DiscrepancyParams):
        """Mixed second derivative acting on a parameter vector.

        The offset block rides through the state adjoint; the slope rows
        couple to the optimality residual.
        """
        delta_at_zt = evaluate(theta, self.z_tilde, self.problem.control_space)
        term1 = self._S.T @ self.problem.state_space.apply_mass(delta_at_zt)
        term2 = self.problem.control_space.apply_mass(theta.rows.T @ self._mu_residual)
        return term1 + term2

    def solve_H(self, v):
        return sla.cho_solve(self._cho_H, as_vector(v, self.hessian.shape[0], "v"))

    def update(self, theta: DiscrepancyParams):
        """Corrected optimum: z_tilde - H^{-1} B theta."""
        return self.z_tilde - self.solve_H(self.apply_B(theta))


def assemble_sensitivity(problem: OptimizationProblem, z_tilde=None) -> SensitivityOperator:
    if z_tilde is None:
        z_tilde = solve_lowfi_optimum(problem)
    return SensitivityOperator(problem, z_tilde)


class PosteriorModel:
    """Gaussian posterior over discrepancy parameters.

    Everything routes through the N x N data-space structure: the Gram of
    the design operator under the prior covariance is
    ``Sigma[l,k] = 1 + (z_l - zt, cov_z-weighted z_k - zt)`` scaled by the
    state covariance, and the noise adds ``alpha_d`` on the mass inverse.
    """

    def __init__(self, prior: PriorOperators, dataset: CalibrationDataset):
        self.prior = prior
        self.dataset = dataset
        self.n_u = prior.n_u
        self.n_z = prior.n_z
        if dataset.n_samples:
            if dataset.Z.shape[1] != self.n_z or dataset.D.shape[1] != self.n_u:
                raise ShapeError("dataset dimensions do not match the prior")
        self.z_tilde = prior._require_z_tilde(
            dataset.Z[0] if dataset.n_samples else None
        )
        self.alpha_d = prior.hyper.alpha_d
        self._prepare_eigenbasis()
        self._prepare_data_system()
        self.mean = self._posterior_mean()

    # -- spectral plumbing ---------------------------------------------------------

    def _prepare_eigenbasis(self):
        prior = self.prior
        if prior.factor_t is None:
            lam, V = prior.factor_s.generalized_eigenpairs()
            self._V_s, self._V_t = V, None
            self._w_u = prior.hyper.alpha_u * lam**-2.0
        else:
            lam_s, V_s = prior.factor_s.generalized_eigenpairs()
            ft = prior.factor_t
            Wt = ft.E / np.outer(ft._sqrt_alpha, ft._sqrt_alpha)
            lam_t, V_t = sla.eigh(Wt, ft.space.mass_s)
            self._V_s, self._V_t = V_s, V_t
            self._w_u = prior.hyper.alpha_u * np.kron(lam_t**-1.0, lam_s**-2.0)

    def _basis_apply(self, X, transpose=False):
        """Apply V (or V^T) of the state covariance eigenbasis to rows of X."""
        X = np.asarray(X, dtype=float)
        if self._V_t is None:
            V = self._V_s
            return X @ (V if transpose else V.T)
        nt, ns = self._V_t.shape[0], self._V_s.shape[0]
        shape = X.shape[:-1] + (nt, ns)
        Y = X.reshape(shape)
        if transpose:
            out = np.einsum("it,...ij,js->...ts", self._V_t, Y, self._V_s)
        else:
            out = np.einsum("ti,...ij,sj->...ts", self._V_t, Y, self._V_s)
        return out.reshape(X.shape)

    def _prepare_data_system(self):
        ds = self.dataset
        prior = self.prior
        N = ds.n_samples
        self._N = N
        if N == 0:
            return
        Mz = prior.control_space.mass_s
        diffs = ds.Z - self.z_tilde
        cov_z_diffs = prior.apply_cov_z(diffs @ Mz)
        self._sigma = 1.0 + (diffs @ Mz) @ cov_z_diffs.T
        self._sigma = 0.5 * (self._sigma + self._sigma.T)
        try:
            sig_vals, sig_vecs = sla.eigh(self._sigma)
        except sla.LinAlgError as exc:
            raise CalibrationError("data Gram eigendecomposition failed") from exc
        if np.any(sig_vals <= 0):
            raise CalibrationError("data Gram is not positive definite")
        self._sig_vals, self._sig_vecs = sig_vals, sig_vecs
        self._MZ = ds.Z @ Mz

    def _data_solve(self, R):
        """Solve the data-space system for stacked blocks R (N, n_u)."""
        R = as_matrix(R, (self._N, self.n_u), "R")
        S = self._basis_apply(self.prior.state_space.apply_mass(R), transpose=True)
        # Modes decouple: for each state mode j solve (w_j Sigma + alpha_d I).
        QtS = self._sig_vecs.T @ S
        denom = np.outer(self._sig_vals, self._w_u) + self.alpha_d
        X = self._sig_vecs @ (QtS / denom)
        return self.prior.state_space.apply_mass(self._basis_apply(X))

    # -- design-operator actions ----------------------------------------------------

    def _apply_A(self, theta: DiscrepancyParams):
        return theta.offset[None, :] + (theta.rows @ self._MZ.T).T

    def _apply_At(self, Y):
        Y = as_matrix(Y, (self._N, self.n_u), "Y")
        return DiscrepancyParams.from_blocks(Y.sum(axis=0), Y.T @ self._MZ)

    def _posterior_mean(self) -> DiscrepancyParams:
        if self._N == 0:
            return DiscrepancyParams.zeros(self.n_u, self.n_z)
        Y = self._data_solve(self.dataset.D)
        return self.prior.apply_cov_theta(self._apply_At(Y), self.z_tilde)

    # -- public surface ---------------------------------------------------------------

    def sample(self, seed) -> DiscrepancyParams:
        """Exact posterior draw by correcting a prior draw with noisy data."""
        rng_stream_theta = self.prior.sample_theta(seed, self.z_tilde)
        theta_pr = rng_stream_theta.theta
        if self._N == 0:
            return theta_pr
        rng = np.random.default_rng((int(seed), 0x9E3779B9))
        noise = rng.standard_normal((self._N, self.n_u))
        eta = np.sqrt(self.alpha_d) * self._basis_apply(noise)
        misfit = self.dataset.D + eta - self._apply_A(theta_pr)
        correction = self.prior.apply_cov_theta(
            self._apply_At(self._data_solve(misfit)), self.z_tilde
        )
        values = theta_pr.values + correction.values
        return DiscrepancyParams(values, self.n_u, self.n_z)

    def directional_variance(self, v):
        """Posterior variance of (v, theta); never exceeds the prior's."""
        v = as_vector(v, self.n_u * (self.n_z + 1), "v")
        theta_v = DiscrepancyParams(v, self.n_u, self.n_z)
        cov_v = self.prior.apply_cov_theta(theta_v, self.z_tilde)
        prior_var = float(v @ cov_v.values)
        if self._N == 0:
            return prior_var
        Av = self._apply_A(cov_v)
        return prior_var - float(np.sum(Av * self._data_solve(Av)))

    def prior_directional_variance(self, v):
        v = as_vector(v, self.n_u * (self.n_z + 1), "v")
        theta_v = DiscrepancyParams(v, self.n_u, self.n_z)
        return float(v @ self.prior.apply_cov_theta(theta_v, self.z_tilde).values)

    def mean_data_misfits(self):
        """Mass norms of the posterior-mean fit residual per data pair."""
        if self._N == 0:
            return np.zeros(0)
        resid = self._apply_A(self.mean) - self.dataset.D
        return np.sqrt(self.prior.state_space.norm2(resid))


def calibrate(dataset: CalibrationDataset, prior: PriorOperators) -> PosteriorModel:
    """Conjugate Gaussian update of the discrepancy prior against data."""
    return PosteriorModel(prior, dataset)


def sample_posterior_theta(posterior: PosteriorModel, seed) -> DiscrepancyParams:
    return posterior.sample(seed)


def update_optimum(sens: SensitivityOperator, theta: DiscrepancyParams):
    return sens.update(theta)


def posterior_optimum_ensemble(
    sens: SensitivityOperator, posterior: PosteriorModel, n, seed
):
    """Independent corrected-optimum draws (sample i uses seed + i)."""
    if n < 1:
        raise CalibrationError("ensemble size must be at least 1")
    out = np.empty((n, sens.hessian.shape[0]))
    for i in range(n):
        theta = posterior.sample(seed + i)
        out[i] = sens.update(theta)
    return out
