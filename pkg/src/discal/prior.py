"""Gaussian prior over affine discrepancy operators.

The parameter covariance factors through elliptic smoothing operators on
the state and control spaces:

* state block:    cov_u = alpha_u * E_u^{-1} M_u E_u^{-1},  E_u = beta_u K_u + M_u
* control block:  cov_z = alpha_z * E_z^{-1} M_z E_z^{-1},  E_z = beta_z K_z + M_z

For transient states the covariance is the Kronecker product of a temporal
factor D(alpha_t)^{1/2} E_t^{-1} D(alpha_t)^{1/2} with the squared spatial
factor.  The joint parameter covariance couples the offset and slope blocks
through the expansion point ``z_tilde`` and factors as a block-triangular
square root, which is what the samplers apply; the mass square roots are
replaced by Cholesky factors (the pushforward is identical for isotropic
noise).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ._validation import as_vector, check_positive
from .discrepancy import DiscrepancyParams
from .errors import AssemblyError, ShapeError, ValidationError
from .fem import FunctionSpace


@dataclass
class HyperParams:
    """Variance / smoothness hyper-parameters of the prior and noise model."""

    alpha_u: float
    beta_u: float
    alpha_z: float
    beta_z: float
    alpha_d: float
    alpha_t: np.ndarray | None = None
    beta_t: float | None = None
    eps_t: float = 0.01

    def __post_init__(self):
        self.validate()

    def validate(self):
        check_positive(self.alpha_u, "alpha_u")
        check_positive(self.beta_u, "beta_u", strict=False)
        check_positive(self.alpha_z, "alpha_z")
        check_positive(self.beta_z, "beta_z", strict=False)
        check_positive(self.alpha_d, "alpha_d")
        check_positive(self.eps_t, "eps_t")
        if self.alpha_t is not None:
            self.alpha_t = as_vector(self.alpha_t, None, "alpha_t")
            if np.any(self.alpha_t < self.eps_t):
                raise ValidationError("alpha_t entries must be >= eps_t > 0")
            if self.beta_t is None:
                raise ValidationError("beta_t is required with alpha_t")
            check_positive(self.beta_t, "beta_t", strict=False)

    @property
    def is_transient(self):
        return self.alpha_t is not None

    def replace(self, **patch):
        """Return a validated copy with ``patch`` applied."""
        doc = self.to_dict()
        for key, value in patch.items():
            if key not in doc and key not in (
                "alpha_t",
                "beta_t",
            ):
                raise ValidationError(f"unknown hyper-parameter {key!r}")
            doc[key] = value
        return HyperParams.from_dict(doc)

    def to_dict(self):
        doc = {
            "alpha_u": float(self.alpha_u),
            "beta_u": float(self.beta_u),
            "alpha_z": float(self.alpha_z),
            "beta_z": float(self.beta_z),
            "alpha_d": float(self.alpha_d),
            "eps_t": float(self.eps_t),
        }
        if self.alpha_t is not None:
            doc["alpha_t"] = np.asarray(self.alpha_t, dtype=float).tolist()
            doc["beta_t"] = float(self.beta_t)
        return doc

    @classmethod
    def from_dict(cls, doc):
        try:
            kwargs = dict(
                alpha_u=float(doc["alpha_u"]),
                beta_u=float(doc["beta_u"]),
                alpha_z=float(doc["alpha_z"]),
                beta_z=float(doc["beta_z"]),
                alpha_d=float(doc["alpha_d"]),
            )
        except KeyError as exc:
            raise ValidationError(f"missing hyper-parameter {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"malformed hyper-parameters: {exc}") from exc
        if "eps_t" in doc and doc["eps_t"] is not None:
            kwargs["eps_t"] = float(doc["eps_t"])
        if doc.get("alpha_t") is not None:
            kwargs["alpha_t"] = np.asarray(doc["alpha_t"], dtype=float)
            kwargs["beta_t"] = float(doc["beta_t"])
        return cls(**kwargs)


class _EllipticFactor:
    """One (beta * K + M) smoothing operator with its factorizations."""

    def __init__(self, space: FunctionSpace, beta):
        self.space = space
        self.beta = float(beta)
        self.E = self.beta * space.stiffness_s + space.mass_s
        try:
            self._cho_E = sla.cho_factor(self.E)
            self.G = sla.cholesky(space.mass_s, lower=True)
        except sla.LinAlgError as exc:
            raise AssemblyError("elliptic factor is not positive definite") from exc

    @property
    def n(self):
        return self.E.shape[0]

    def solve(self, v):
        """E^{-1} v; v may carry leading batch axes (solve along the last)."""
        v = np.asarray(v, dtype=float)
        return sla.cho_solve(self._cho_E, v.reshape(-1, v.shape[-1]).T).T.reshape(
            v.shape
        )

    def half_sample(self, omega):
        """E^{-1} G omega, the square root of E^{-1} M E^{-1} applied to noise."""
        omega = np.asarray(omega, dtype=float)
        return self.solve(omega @ self.G.T)

    def half_transpose(self, v):
        """G^T E^{-1} v, the transpose of the square root."""
        v = np.asarray(v, dtype=float)
        return self.solve(v) @ self.G

    def generalized_eigenvalues(self):
        """Eigenvalues of E in the mass inner product (all >= 1)."""
        lam = sla.eigh(self.E, self.space.mass_s, eigvals_only=True)
        return lam

    def generalized_eigenpairs(self):
        lam, V = sla.eigh(self.E, self.space.mass_s)
        return lam, V


class _TemporalFactor:
    """Temporal covariance factor D^{1/2} E_t^{-1} D^{1/2} with square root.

    The square root is T_t = D(alpha_t)^{1/2} L_t^{-T} with L_t the lower
    Cholesky factor of E_t, so the diagonal variance scaling is applied
    after the (half) elliptic solve.
    """

    def __init__(self, space: FunctionSpace, beta_t, alpha_t):
        alpha_t = as_vector(alpha_t, space.n, "alpha_t")
        self.space = space
        self.beta_t = float(beta_t)
        self.alpha_t = alpha_t
        self.E = self.beta_t * space.stiffness_s + space.mass_s
        try:
            self._L = sla.cholesky(self.E, lower=True)
        except sla.LinAlgError as exc:
            raise AssemblyError("temporal factor is not positive definite") from exc
        self._sqrt_alpha = np.sqrt(alpha_t)

    @property
    def n(self):
        return self.E.shape[0]

    def cov_dense(self):
        Einv = sla.cho_solve((self._L, True), np.eye(self.n))
        D = np.sqrt(self.alpha_t)
        return Einv * np.outer(D, D)

    def half_sample(self, omega):
        """T_t omega for noise with trailing axis n_t."""
        omega = np.asarray(omega, dtype=float)
        flat = omega.reshape(-1, omega.shape[-1])
        out = sla.solve_triangular(self._L, flat.T, lower=True, trans="T").T
        return (out * self._sqrt_alpha).reshape(omega.shape)


@dataclass
class PriorSample:
    """A draw of discrepancy parameters with its reproducing seed."""

    theta: DiscrepancyParams
    seed: int


class PriorOperators:
    """Operator bundle for the discrepancy prior at a fixed expansion point.

    Provides parameter samples, direct field samples, and the covariance
    traces used by the hyper-parameter initialization.  Immutable after
    construction; sampling with distinct seeds is safe concurrently.
    """

    def __init__(
        self,
        state_space: FunctionSpace,
        control_space: FunctionSpace,
        hyper: HyperParams,
        z_tilde=None,
    ):
        hyper.validate()
        if state_space.is_transient != hyper.is_transient:
            raise ValidationError(
                "alpha_t/beta_t must be given exactly for transient state spaces"
            )
        if control_space.is_transient:
            raise ValidationError("control space must be stationary")
        self.state_space = state_space
        self.control_space = control_space
        self.hyper = hyper
        self.n_u = state_space.n
        self.n_z = control_space.n
        self.factor_z = _EllipticFactor(control_space, hyper.beta_z)
        if state_space.is_transient:
            self.factor_s = _EllipticFactor(state_space.spatial(), hyper.beta_u)
            self.factor_t = _TemporalFactor(
                state_space.temporal(), hyper.beta_t, hyper.alpha_t
            )
        else:
            self.factor_s = _EllipticFactor(state_space, hyper.beta_u)
            self.factor_t = None
        self.z_tilde = None if z_tilde is None else as_vector(z_tilde, self.n_z, "z_tilde")

    # -- square-root applications -------------------------------------------------

    def state_half_sample(self, omega):
        """Apply the state-covariance square root (incl. sqrt(alpha_u)).

        ``omega`` has trailing axis n_u; transient noise is reshaped
        time-major and passed through the temporal and spatial factors.
        """
        omega = np.asarray(omega, dtype=float)
        if omega.shape[-1] != self.n_u:
            raise ShapeError(f"noise must have trailing dimension {self.n_u}")
        root_au = np.sqrt(self.hyper.alpha_u)
        if self.factor_t is None:
            return root_au * self.factor_s.half_sample(omega)
        nt, ns = self.factor_t.n, self.factor_s.n
        shape = omega.shape[:-1] + (nt, ns)
        W = omega.reshape(shape)
        W = self.factor_s.half_sample(W)
        W = np.swapaxes(self.factor_t.half_sample(np.swapaxes(W, -1, -2)), -1, -2)
        return root_au * W.reshape(omega.shape)

    def control_half_sample(self, omega):
        """Apply the control-covariance square root (incl. sqrt(alpha_z))."""
        omega = np.asarray(omega, dtype=float)
        if omega.shape[-1] != self.n_z:
            raise ShapeError(f"noise must have trailing dimension {self.n_z}")
        return np.sqrt(self.hyper.alpha_z) * self.factor_z.half_sample(omega)

    def apply_cov_u(self, v):
        """alpha_u * E_u^{-1} M_u E_u^{-1} v (Kronecker-aware)."""
        v = np.asarray(v, dtype=float)
        if self.factor_t is None:
            out = self.factor_s.solve(v)
            out = self.state_space.apply_mass(out)
            return self.hyper.alpha_u * self.factor_s.solve(out)
        nt, ns = self.factor_t.n, self.factor_s.n
        shape = v.shape[:-1] + (nt, ns)
        X = v.reshape(shape)
        Ws_X = self._apply_cov_s(X)
        out = np.swapaxes(self._apply_cov_t(np.swapaxes(Ws_X, -1, -2)), -1, -2)
        return self.hyper.alpha_u * out.reshape(v.shape)

    def _apply_cov_s(self, X):
        out = self.factor_s.solve(X)
        out = out @ self.factor_s.space.mass_s
        return self.factor_s.solve(out)

    def _apply_cov_t(self, X):
        ft = self.factor_t
        out = X * ft._sqrt_alpha
        out = sla.cho_solve((ft._L, True), out.reshape(-1, ft.n).T).T.reshape(X.shape)
        return out * ft._sqrt_alpha

    def apply_cov_z(self, v):
        """alpha_z * E_z^{-1} M_z E_z^{-1} v."""
        v = np.asarray(v, dtype=float)
        out = self.factor_z.solve(v)
        out = out @ self.control_space.mass_s
        return self.hyper.alpha_z * self.factor_z.solve(out)

    # -- sampling -------------------------------------------------------------------

    def _require_z_tilde(self, z_tilde):
        if z_tilde is not None:
            return as_vector(z_tilde, self.n_z, "z_tilde")
        if self.z_tilde is None:
            raise ValidationError("an expansion point z_tilde is required")
        return self.z_tilde

    def sample_theta(self, seed, z_tilde=None) -> PriorSample:
        """Draw discrepancy parameters through the block-triangular root."""
        zt = self._require_z_tilde(z_tilde)
        rng = np.random.default_rng(seed)
        omega0 = rng.standard_normal(self.n_u)
        omega_rows = rng.standard_normal((self.n_u, self.n_z))
        theta = self._theta_from_noise(omega0, omega_rows, zt)
        return PriorSample(theta=theta, seed=seed)

    def _theta_from_noise(self, omega0, omega_rows, z_tilde):
        # rows block: T_u (x) T_z applied to the row noise.
        half_rows = self.control_half_sample(omega_rows)  # right factor
        rows = self._state_half_on_columns(half_rows)
        # offset coupling uses the transposed control root: a = T_z^T M_z z.
        a = np.sqrt(self.hyper.alpha_z) * self.factor_z.half_transpose(
            self.control_space.apply_mass(z_tilde)
        )
        offset = self.state_half_sample(omega0 - omega_rows @ a)
        return DiscrepancyParams.from_blocks(offset, rows)

    def _state_half_on_columns(self, W):
        """Apply the state square root to each column of an (n_u, k) array."""
        return self.state_half_sample(W.T).T

    def sample_delta_field(self, z, z_tilde, seed):
        """Sample the discrepancy field at ``z`` directly.

        Uses the two-term form: a state draw plus an independent state draw
        scaled by sqrt(alpha_z * s_z) with
        ``s_z = || E_z^{-1} M_z (z - z_tilde) ||^2_{M_z}``.
        """
        z = as_vector(z, self.n_z, "z")
        zt = self._require_z_tilde(z_tilde)
        rng = np.random.default_rng(seed)
        omega1 = rng.standard_normal(self.n_u)
        omega2 = rng.standard_normal(self.n_u)
        s_z = self.perturbation_scale(z - zt)
        field = self.state_half_sample(omega1)
        field = field + np.sqrt(self.hyper.alpha_z * s_z) * self.state_half_sample(
            omega2
        )
        return field

    def perturbation_scale(self, dz):
        """s(dz) = || E_z^{-1} M_z dz ||^2_{M_z} (no alpha factors)."""
        dz = as_vector(dz, self.n_z, "dz")
        w = self.factor_z.solve(self.control_space.apply_mass(dz))
        return float(self.control_space.norm2(w))

    def apply_cov_theta(self, theta: DiscrepancyParams, z_tilde=None) -> DiscrepancyParams:
        """Apply the joint parameter covariance to a parameter vector.

        Uses the closed-form blocks: with ``w = cov_z M_z z_tilde`` and
        ``c = 1 + (z_tilde, w)_{M_z}``, the offset picks up ``c cov_u v0 -
        cov_u V w`` and the rows ``-(cov_u v0) w^T + cov_u V cov_z``.
        """
        zt = self._require_z_tilde(z_tilde)
        mz_zt = self.control_space.apply_mass(zt)
        w = self.apply_cov_z(mz_zt)
        c = 1.0 + float(mz_zt @ w)
        v0 = theta.offset
        V = theta.rows
        cov_u_v0 = self.apply_cov_u(v0)
        cov_u_V = self.apply_cov_u(V.T).T
        offset = c * cov_u_v0 - cov_u_V @ w
        rows = -np.outer(cov_u_v0, w) + self.apply_cov_z(cov_u_V)
        return DiscrepancyParams.from_blocks(offset, rows)

    # -- traces ---------------------------------------------------------------------

    def trace_state_covariance(self):
        """Mass-weighted trace of the state covariance without alpha_u."""
        lam_s = self.factor_s.generalized_eigenvalues()
        tr_s = float(np.sum(lam_s**-2.0))
        if self.factor_t is None:
            return tr_s
        cov_t = self.factor_t.cov_dense()
        tr_t = float(np.trace(cov_t @ self.factor_t.space.mass_s))
        return tr_t * tr_s

    def trace_control_covariance(self):
        """Mass-weighted trace of the control covariance without alpha_z."""
        lam_z = self.factor_z.generalized_eigenvalues()
        return float(np.sum(lam_z**-2.0))

    def trace_theta_covariance(self, z_tilde=None):
        """Mass-weighted trace of the joint parameter covariance.

        Factors exactly as
        ``(1 + |E_z^{-1} M_z z_tilde|^2 * alpha_z + Tr(cov_z)) * Tr(cov_u)``.
        """
        zt = self._require_z_tilde(z_tilde)
        tr_u = self.hyper.alpha_u * self.trace_state_covariance()
        tr_z = self.hyper.alpha_z * self.trace_control_covariance()
        quad = self.hyper.alpha_z * self.perturbation_scale(zt)
        return (1.0 + quad + tr_z) * tr_u

    # -- dense oracles (small instances) ---------------------------------------------

    def cov_u_dense(self):
        if self.factor_t is None:
            Einv = self.factor_s.solve(np.eye(self.n_u))
            return self.hyper.alpha_u * Einv @ self.state_space.mass_s @ Einv
        Einv_s = self.factor_s.solve(np.eye(self.factor_s.n))
        Ws = Einv_s @ self.factor_s.space.mass_s @ Einv_s
        return self.hyper.alpha_u * np.kron(self.factor_t.cov_dense(), Ws)

    def cov_z_dense(self):
        Einv = self.factor_z.solve(np.eye(self.n_z))
        return self.hyper.alpha_z * Einv @ self.control_space.mass_s @ Einv

    def cov_theta_dense(self, z_tilde=None):
        """Dense joint covariance over the flat parameter layout."""
        zt = self._require_z_tilde(z_tilde)
        Wu = self.cov_u_dense()
        Wz = self.cov_z_dense()
        Mz = self.control_space.mass_s
        wz_mz_zt = Wz @ (Mz @ zt)
        c = 1.0 + float(zt @ Mz @ wz_mz_zt)
        n_u, n_z = self.n_u, self.n_z
        n_theta = n_u * (n_z + 1)
        cov = np.zeros((n_theta, n_theta))
        cov[:n_u, :n_u] = c * Wu
        cov[:n_u, n_u:] = np.kron(Wu, -wz_mz_zt[None, :])
        cov[n_u:, :n_u] = np.kron(Wu, -wz_mz_zt[:, None])
        cov[n_u:, n_u:] = np.kron(Wu, Wz)
        return cov


def build_prior(
    state_space: FunctionSpace,
    control_space: FunctionSpace,
    hyper: HyperParams,
    z_tilde=None,
) -> PriorOperators:
    """Construct the prior operator bundle from hyper-parameters."""
    return PriorOperators(state_space, control_space, hyper, z_tilde=z_tilde)
