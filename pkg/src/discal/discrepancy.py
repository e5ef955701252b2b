"""The affine discrepancy operator and its coordinate algebra.

An affine correction ``delta(z) = offset + slope @ (M_z z)`` from control
coordinates to state coordinates is parameterized by a flat vector holding
the offset block followed by the slope rows.  The natural inner product on
these parameters is block diagonal: a state-space inner product on the
offset and a Hilbert-Schmidt inner product on the slope, which in
coordinates weights the blocks by the state mass and by the Kronecker
product of state and control masses.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._validation import as_matrix, as_vector
from .errors import RankDeficiencyError, ShapeError
from .fem import FunctionSpace


@dataclass
class DiscrepancyParams:
    """Flat parameter vector for the affine discrepancy operator.

    Layout: the first ``n_u`` entries are the constant offset; the remaining
    ``n_u * n_z`` entries are the slope rows stored row-major, so the slope
    matrix is a zero-copy reshape.
    """

    values: np.ndarray
    n_u: int
    n_z: int

    def __post_init__(self):
        self.values = as_vector(self.values, self.n_u * (self.n_z + 1), "values")

    @classmethod
    def zeros(cls, n_u, n_z):
        return cls(np.zeros(n_u * (n_z + 1)), n_u, n_z)

    @classmethod
    def from_blocks(cls, offset, rows):
        offset = as_vector(offset, None, "offset")
        rows = as_matrix(rows, (offset.size, None), "rows")
        return cls(np.concatenate([offset, rows.ravel()]), offset.size, rows.shape[1])

    @property
    def n_theta(self):
        return self.values.size

    @property
    def offset(self):
        return self.values[: self.n_u]

    @property
    def rows(self):
        """Slope rows as an (n_u, n_z) view into the flat storage."""
        return self.values[self.n_u :].reshape(self.n_u, self.n_z)

    def copy(self):
        return DiscrepancyParams(self.values.copy(), self.n_u, self.n_z)


def evaluate(theta: DiscrepancyParams, z, control_space: FunctionSpace):
    """Evaluate the affine discrepancy at a control vector.

    The slope acts through the control mass matrix, so the result is
    ``offset + rows @ (M_z z)``; the (n_u x n_z) slope is never copied.
    """
    z = as_vector(z, control_space.n, "z")
    if theta.n_z != control_space.n:
        raise ShapeError(
            f"theta has {theta.n_z} control dofs, space has {control_space.n}"
        )
    return theta.offset + theta.rows @ control_space.apply_mass(z)


@dataclass
class ThetaInnerProduct:
    """Block-diagonal inner product on discrepancy parameters."""

    state_space: FunctionSpace
    control_space: FunctionSpace

    def __call__(self, theta: DiscrepancyParams, other: DiscrepancyParams):
        if (theta.n_u, theta.n_z) != (other.n_u, other.n_z):
            raise ShapeError("parameter block sizes differ")
        if theta.n_u != self.state_space.n or theta.n_z != self.control_space.n:
            raise ShapeError("parameters do not match the given spaces")
        off = float(other.offset @ self.state_space.apply_mass(theta.offset))
        # Slope block: Tr(R2^T M_u R1 M_z) via mass applications on each side.
        mu_rows = self.state_space.apply_mass(theta.rows.T).T
        slope = float(
            np.sum(other.rows * self.control_space.apply_mass(mu_rows))
        )
        return off + slope

    def norm2(self, theta):
        return self(theta, theta)

    def dense(self):
        """Dense weighting matrix (small problems only; used by oracles)."""
        Mu = self.state_space.mass_dense()
        Mz = self.control_space.mass_dense()
        n_theta = Mu.shape[0] * (Mz.shape[0] + 1)
        W = np.zeros((n_theta, n_theta))
        n_u = Mu.shape[0]
        W[:n_u, :n_u] = Mu
        W[n_u:, n_u:] = np.kron(Mu, Mz)
        return W


@dataclass
class CalibrationDataset:
    """Paired control / discrepancy-data samples, stored centered.

    ``D`` holds the data after the scalar shift ``dbar`` (the mean of all
    raw nodal values) has been subtracted elementwise; ``c_delta`` is the
    root-mean-square of the raw nodal values and sets the noise scale.
    By convention the first control row is the low-fidelity optimum.
    """

    Z: np.ndarray
    D: np.ndarray
    dbar: float
    c_delta: float

    def __post_init__(self):
        self.Z = as_matrix(self.Z, None, "Z")
        self.D = as_matrix(self.D, (self.Z.shape[0], None), "D")

    @classmethod
    def from_raw(cls, Z, D_raw):
        """Center raw discrepancy data and record its magnitude."""
        Z = as_matrix(Z, None, "Z")
        D_raw = as_matrix(D_raw, (Z.shape[0], None), "D_raw")
        if Z.shape[0] < 1:
            raise ShapeError("need at least one data pair")
        dbar = float(D_raw.mean())
        c_delta = float(np.sqrt(np.mean(D_raw**2)))
        return cls(Z=Z, D=D_raw - dbar, dbar=dbar, c_delta=c_delta)

    @property
    def n_samples(self):
        return self.Z.shape[0]

    @property
    def z_tilde(self):
        return self.Z[0]

    @property
    def d_raw(self):
        return self.D + self.dbar

    def to_dict(self):
        return {
            "z": self.Z.tolist(),
            "d": self.D.tolist(),
            "dbar": self.dbar,
            "c_delta": self.c_delta,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            Z=np.asarray(doc["z"], dtype=float),
            D=np.asarray(doc["d"], dtype=float),
            dbar=float(doc["dbar"]),
            c_delta=float(doc["c_delta"]),
        )


def design_matrix(Z, state_space: FunctionSpace, control_space: FunctionSpace):
    """Dense stacked design matrix mapping parameters to stacked data.

    Row block ``l`` maps theta to the discrepancy evaluated at ``Z[l]``.
    Intended for oracles and small instances; it is O(N * n_u * n_theta).
    """
    Z = as_matrix(Z, (None, control_space.n), "Z")
    n_u = state_space.n
    n_z = control_space.n
    eye = np.eye(n_u)
    blocks = []
    for z in Z:
        mz = control_space.apply_mass(z)
        blocks.append(np.hstack([eye, np.kron(eye, mz[None, :])]))
    return np.vstack(blocks)


def interpolate_min_norm(Z, D, state_space: FunctionSpace, control_space: FunctionSpace):
    """Minimum-norm interpolant of discrepancy data.

    Finds the parameter vector of least block-weighted norm whose affine
    operator reproduces ``D[l]`` at every ``Z[l]``.  Requires the controls
    to be linearly independent and fewer samples than ``n_z + 1``.

    Returns ``(theta_star, nullity)`` where ``nullity`` is the dimension of
    the interpolating affine family, ``(n_z + 1 - N) * n_u``.

    The normal equations collapse to an N x N system: the data-space Gram
    of the design operator under the block inverse weighting is
    ``G (x) M_u^{-1}`` with ``G[l,k] = 1 + (z_l, z_k)_{M_z}``.
    """
    Z = as_matrix(Z, (None, control_space.n), "Z")
    D = as_matrix(D, (Z.shape[0], state_space.n), "D")
    N = Z.shape[0]
    n_z = control_space.n
    n_u = state_space.n
    if N == 0:
        raise RankDeficiencyError("need at least one data pair")
    if N >= n_z + 1:
        raise RankDeficiencyError(
            f"need fewer samples than n_z + 1 = {n_z + 1}, got {N}"
        )
    # Full row rank of the stacked design operator is equivalent to linear
    # independence of the affine-augmented controls (1, z_l); this admits
    # e.g. a zero control alongside nonzero ones.
    aug = np.hstack([np.ones((N, 1)), Z])
    if np.linalg.matrix_rank(aug, tol=1e-10 * max(1.0, np.abs(aug).max())) < N:
        raise RankDeficiencyError("control vectors are affinely dependent")
    MZ = control_space.apply_mass(Z)
    G = 1.0 + Z @ MZ.T
    MuD = state_space.apply_mass(D)
    try:
        Y = sla.solve(G, MuD, assume_a="pos")
    except sla.LinAlgError as exc:
        raise RankDeficiencyError("interpolation system is singular") from exc
    # theta* = M_theta^{-1} A^T y with y the stacked block solution.
    offset = _mass_solve(state_space, Y.sum(axis=0))
    rows = _mass_solve(state_space, Y.T @ Z)
    nullity = (n_z + 1 - N) * n_u
    return DiscrepancyParams.from_blocks(offset, rows), nullity


def _mass_solve(space: FunctionSpace, rhs):
    """Solve mass @ x = rhs (columns of rhs when 2-d), Kronecker-aware."""
    rhs = np.asarray(rhs, dtype=float)
    if not space.is_transient:
        cf = sla.cho_factor(space.mass_s)
        return sla.cho_solve(cf, rhs)
    cf_t = sla.cho_factor(space.mass_t)
    cf_s = sla.cho_factor(space.mass_s)
    nt, ns = space.n_time, space.n_spatial

    def solve_one(v):
        X = v.reshape(nt, ns)
        X = sla.cho_solve(cf_t, X)
        X = sla.cho_solve(cf_s, X.T).T
        return X.ravel()

    if rhs.ndim == 1:
        return solve_one(rhs)
    return np.stack([solve_one(col) for col in rhs.T], axis=1)
