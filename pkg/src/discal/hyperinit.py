"""Algorithmic initialization of the prior hyper-parameters from data.

Order matters: smoothness lengths come first (the covariance traces depend
on them), then the temporal weights, then the state variance, and finally
the control variance, which combines a low-fidelity sensitivity estimate
with a Monte Carlo spectral factor.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_vector
from .discrepancy import CalibrationDataset
from .errors import (
    ConfigError,
    DegenerateFieldError,
    DegenerateScaleError,
    InitFailure,
    ZeroDataError,
)
from .fem import FunctionSpace, LinearSolutionOperator
from .prior import HyperParams, PriorOperators

# Smoothness constants: spatial dimension -> divisor for the squared length.
SPATIAL_SMOOTHNESS_DIVISOR = {1: 12.0, 2: 8.0, 3: 4.0}
TEMPORAL_SMOOTHNESS_DIVISOR = 4.0

CORRELATION_THRESHOLD = 0.1


@dataclass
class CorrelationEstimate:
    """Result of the marching correlation-length search."""

    kappa: float
    delta_kappa: float
    n_pairs: int


@dataclass
class GammaEstimate:
    """Monte Carlo estimate of the squared sensitivity magnitude."""

    gamma_sq: float
    n_draws: int
    se: float
    # Alignment constant baked into the derivation of the estimator: the
    # high/low-fidelity responses are assumed to be at a 60-degree angle.
    cos_zeta: float = 0.5


def _correlation_length_1d(values, coords, delta_kappa):
    values = np.asarray(values, dtype=float)
    coords = np.asarray(coords, dtype=float).reshape(-1)
    if values.size != coords.size:
        raise ConfigError("values and coords must have equal length")
    if values.size < 3:
        raise ConfigError("need at least 3 nodes")
    order = np.argsort(coords)
    coords = coords[order]
    values = values[order]
    span = coords[-1] - coords[0]
    fbar = values.mean()
    var = np.sum((values - fbar) ** 2) / (values.size - 1)
    scale = max(1.0, float(np.max(np.abs(values))))
    if var <= (1e-13 * scale) ** 2:
        raise DegenerateFieldError("field is constant; no correlation length")
    if delta_kappa is None:
        delta_kappa = float(np.min(np.diff(coords)))
    if delta_kappa <= 0:
        raise ConfigError("delta_kappa must be positive")
    kappa = 0.0
    rho = 1.0
    n_pairs = values.size
    while rho > CORRELATION_THRESHOLD:
        kappa += delta_kappa
        valid = coords + kappa <= coords[-1] + 1e-12 * max(span, 1.0)
        n_pairs = int(valid.sum())
        if n_pairs < 2 or kappa > span:
            # Correlation never crossed the threshold inside the domain.
            return CorrelationEstimate(min(kappa, span), delta_kappa, n_pairs)
        shifted = np.interp(coords[valid] + kappa, coords, values)
        cov = np.sum((values[valid] - fbar) * (shifted - fbar)) / (n_pairs - 1)
        rho = cov / var
    return CorrelationEstimate(kappa, delta_kappa, n_pairs)


def domain_diameter(coords):
    """Bounding-box diagonal of a node set."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    span = coords.max(axis=0) - coords.min(axis=0)
    return float(np.sqrt(np.sum(span**2)))


def correlation_length(values, coords, delta_kappa=None) -> CorrelationEstimate:
    """Estimate the distance at which the empirical correlation drops to 0.1.

    Marches a shift by ``delta_kappa`` (one mesh spacing by default),
    correlating the field with its shifted interpolant; shifted points that
    leave the domain are omitted and the normalization adjusted.  For 2-d
    structured grids the estimate averages 1-d estimates along axis-aligned
    node lines, in both directions.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1 or coords.shape[1] == 1:
        return _correlation_length_1d(values, coords, delta_kappa)
    if coords.shape[1] != 2:
        raise ConfigError("only 1-d and 2-d coordinates are supported")
    xs = np.unique(coords[:, 0])
    ys = np.unique(coords[:, 1])
    values = np.asarray(values, dtype=float)
    if values.size != xs.size * ys.size:
        raise ConfigError("2-d correlation length requires a structured grid")
    grid = values.reshape(ys.size, xs.size)
    estimates = []
    dk = delta_kappa
    for row in grid:
        try:
            estimates.append(_correlation_length_1d(row, xs, dk))
        except DegenerateFieldError:
            continue
    for col in grid.T:
        try:
            estimates.append(_correlation_length_1d(col, ys, dk))
        except DegenerateFieldError:
            continue
    if not estimates:
        raise DegenerateFieldError("all grid lines are constant")
    kappa = float(np.mean([e.kappa for e in estimates]))
    return CorrelationEstimate(
        kappa,
        estimates[0].delta_kappa,
        int(np.mean([e.n_pairs for e in estimates])),
    )


def _mean_kappa(fields, coords, delta_kappa, subsample=None):
    """Average correlation lengths over snapshots, skipping degenerate ones."""
    fields = list(fields)
    if subsample is not None and len(fields) > subsample:
        idx = np.linspace(0, len(fields) - 1, subsample).astype(int)
        fields = [fields[i] for i in idx]
    kappas = []
    for f in fields:
        try:
            kappas.append(correlation_length(f, coords, delta_kappa).kappa)
        except DegenerateFieldError:
            continue
    if not kappas:
        raise InitFailure("every snapshot was degenerate (constant)")
    return float(np.mean(kappas))


@dataclass
class SmoothnessEstimate:
    beta_u: float
    beta_z: float
    beta_t: float | None
    kappa_u: float
    kappa_z: float
    kappa_t: float | None


def init_smoothness(
    dataset: CalibrationDataset,
    state_space: FunctionSpace,
    control_space: FunctionSpace,
    delta_kappa=None,
    subsample=None,
) -> SmoothnessEstimate:
    """Smoothness hyper-parameters from empirical correlation lengths.

    Stationary data contributes one spatial length per sample; transient
    data is split into per-time-step snapshots for the spatial length and
    per-node time series for the temporal length.  The squared lengths are
    divided by a dimension constant (12 / 8 / 4 in 1 / 2 / 3 spatial
    dimensions); the temporal divisor is 4 because the temporal covariance
    factor is not squared.
    """
    if dataset.n_samples < 1:
        raise InitFailure("dataset is empty")
    s = state_space.dim
    if s not in SPATIAL_SMOOTHNESS_DIVISOR:
        raise ConfigError(f"unsupported spatial dimension {s}")
    spatial_nodes = state_space.nodes
    if not state_space.is_transient:
        kappa_u = _mean_kappa(dataset.D, spatial_nodes, delta_kappa, subsample)
        kappa_t = None
        beta_t = None
    else:
        ns = state_space.n_spatial
        nt = state_space.n_time
        snapshots = [
            d.reshape(nt, ns)[i] for d in dataset.D for i in range(nt)
        ]
        kappa_u = _mean_kappa(snapshots, spatial_nodes, delta_kappa, subsample)
        series = [
            d.reshape(nt, ns)[:, j] for d in dataset.D for j in range(ns)
        ]
        kappa_t = _mean_kappa(series, state_space.time_grid, delta_kappa, subsample)
        beta_t = kappa_t**2 / TEMPORAL_SMOOTHNESS_DIVISOR
    kappa_z = _mean_kappa(dataset.Z, control_space.nodes, delta_kappa, subsample)
    beta_u = kappa_u**2 / SPATIAL_SMOOTHNESS_DIVISOR[s]
    beta_z = kappa_z**2 / SPATIAL_SMOOTHNESS_DIVISOR[control_space.dim]
    return SmoothnessEstimate(beta_u, beta_z, beta_t, kappa_u, kappa_z, kappa_t)


def init_temporal_weights(dataset: CalibrationDataset, state_space: FunctionSpace, eps_t=0.01):
    """Per-time-node variance weights from the data's temporal profile.

    Averages the squared spatial norm of the raw (uncentered) data at each
    time node over the samples, normalizes by the maximum, and inflates by
    ``eps_t`` so every node keeps strictly positive variance.
    """
    if not state_space.is_transient:
        raise ConfigError("temporal weights require a transient state space")
    nt, ns = state_space.n_time, state_space.n_spatial
    Ms = state_space.mass_s
    profile = np.zeros(nt)
    for d in dataset.d_raw:
        X = d.reshape(nt, ns)
        profile += np.einsum("ij,jk,ik->i", X, Ms, X)
    profile /= dataset.n_samples
    peak = profile.max()
    if peak <= 0.0:
        return eps_t * np.ones(nt)
    return profile / peak + eps_t


def init_alpha_u(dataset: CalibrationDataset, prior: PriorOperators):
    """State variance matching the expected sample magnitude to the data.

    Sets ``alpha_u`` so the expected squared mass norm of the discrepancy at
    the expansion point equals the squared norm of the first data vector.
    Requires the smoothness (and temporal) hyper-parameters to be fixed
    already, since the covariance trace depends on them.
    """
    d1 = dataset.D[0]
    norm2 = float(prior.state_space.norm2(d1))
    if norm2 <= 0.0:
        raise ZeroDataError("first discrepancy vector is zero")
    return norm2 / prior.trace_state_covariance()


def sample_control_perturbations(prior: PriorOperators, z_tilde, n, rng):
    """Smooth unit-scale control perturbations rescaled to ||z_tilde||.

    Draws from the squared-inverse elliptic covariance on the control space
    and rescales every draw to the mass norm of the expansion point.
    """
    z_tilde = as_vector(z_tilde, prior.n_z, "z_tilde")
    scale = float(np.sqrt(prior.control_space.norm2(z_tilde)))
    if scale <= 0.0:
        raise DegenerateScaleError("z_tilde has zero norm; cannot scale perturbations")
    omega = rng.standard_normal((n, prior.n_z))
    raw = prior.factor_z.half_sample(omega)
    norms = np.sqrt(prior.control_space.norm2(raw))
    if np.any(norms <= 0.0):
        raise DegenerateScaleError("degenerate perturbation draw")
    return raw * (scale / norms)[:, None]


def estimate_gamma_sq(
    lowfi: LinearSolutionOperator,
    z_tilde,
    prior: PriorOperators,
    n_mc=200,
    seed=0,
) -> GammaEstimate:
    """Monte Carlo estimate of the low-fidelity sensitivity magnitude.

    Averages the squared state-norm response of the low-fidelity model to
    the rescaled smooth control perturbations.
    """
    if n_mc < 1:
        raise ConfigError("n_mc must be positive")
    rng = np.random.default_rng(seed)
    dz = sample_control_perturbations(prior, z_tilde, n_mc, rng)
    base = lowfi(z_tilde)
    vals = prior.state_space.norm2(lowfi(z_tilde + dz) - base)
    gamma_sq = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(n_mc)) if n_mc > 1 else float("inf")
    return GammaEstimate(gamma_sq=gamma_sq, n_draws=n_mc, se=se)


def expected_eigratio(eigenvalues, n_mc=10000, seed=0, return_se=False):
    """Monte Carlo estimate of E[(w' L^-4 w) / (w' L^-2 w)].

    ``eigenvalues`` are the generalized eigenvalues of the control
    smoothing operator (all >= 1).  Modes whose inverse-square weight falls
    below 1e-12 of the leading one are truncated; the estimate always lies
    in (0, 1].
    """
    lam = as_vector(eigenvalues, None, "eigenvalues")
    if lam.size == 0:
        raise ConfigError("empty spectrum")
    if np.any(lam < 1.0 - 1e-8):
        raise ConfigError("eigenvalues must be >= 1")
    if n_mc < 2:
        raise ConfigError("n_mc must be at least 2")
    lam = np.sort(np.maximum(lam, 1.0))
    w2 = lam**-2.0
    keep = w2 >= 1e-12 * w2[0]
    w2 = w2[keep]
    w4 = w2**2
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk = max(1, int(4e7 // max(w2.size, 1)))
    while done < n_mc:
        m = min(chunk, n_mc - done)
        om2 = rng.standard_normal((m, w2.size)) ** 2
        r = (om2 @ w4) / (om2 @ w2)
        total += r.sum()
        total_sq += (r * r).sum()
        done += m
    mean = total / n_mc
    if return_se:
        var = max(total_sq / n_mc - mean**2, 0.0)
        return mean, float(np.sqrt(var / n_mc))
    return mean


def init_alpha_z(
    gamma_sq,
    d1,
    z_tilde,
    eigratio,
    state_space: FunctionSpace,
    control_space: FunctionSpace,
):
    """Control variance from the sensitivity magnitude and spectral factor."""
    d1_norm2 = float(state_space.norm2(as_vector(d1, state_space.n, "d1")))
    zt_norm2 = float(control_space.norm2(as_vector(z_tilde, control_space.n, "z_tilde")))
    if gamma_sq < 0:
        raise InitFailure("gamma_sq must be nonnegative")
    if d1_norm2 <= 0 or zt_norm2 <= 0 or eigratio <= 0:
        raise InitFailure("alpha_z denominator vanishes")
    return (gamma_sq / d1_norm2) / (zt_norm2 * eigratio)


def init_noise(dataset: CalibrationDataset):
    """Noise variance: standard deviation of 0.1% of the data magnitude."""
    if dataset.c_delta <= 0.0:
        raise ZeroDataError("discrepancy data is identically zero")
    return (0.001 * dataset.c_delta) ** 2


def initialize_hyperparams(
    dataset: CalibrationDataset,
    state_space: FunctionSpace,
    control_space: FunctionSpace,
    lowfi: LinearSolutionOperator,
    delta_kappa=None,
    n_mc_gamma=200,
    n_mc_eig=10000,
    seed=0,
    eps_t=0.01,
    subsample=None,
) -> HyperParams:
    """Run the full initialization pipeline on a calibration dataset."""
    smooth = init_smoothness(
        dataset, state_space, control_space, delta_kappa=delta_kappa, subsample=subsample
    )
    alpha_t = None
    if state_space.is_transient:
        alpha_t = init_temporal_weights(dataset, state_space, eps_t=eps_t)
    provisional = HyperParams(
        alpha_u=1.0,
        beta_u=smooth.beta_u,
        alpha_z=1.0,
        beta_z=smooth.beta_z,
        alpha_d=1.0,
        alpha_t=alpha_t,
        beta_t=smooth.beta_t,
        eps_t=eps_t,
    )
    prior = PriorOperators(state_space, control_space, provisional)
    alpha_u = init_alpha_u(dataset, prior)
    gamma = estimate_gamma_sq(
        lowfi, dataset.z_tilde, prior, n_mc=n_mc_gamma, seed=seed
    )
    ratio = expected_eigratio(
        prior.factor_z.generalized_eigenvalues(), n_mc=n_mc_eig, seed=seed + 1
    )
    alpha_z = init_alpha_z(
        gamma.gamma_sq, dataset.D[0], dataset.z_tilde, ratio, state_space, control_space
    )
    alpha_d = init_noise(dataset)
    return HyperParams(
        alpha_u=alpha_u,
        beta_u=smooth.beta_u,
        alpha_z=alpha_z,
        beta_z=smooth.beta_z,
        alpha_d=alpha_d,
        alpha_t=alpha_t,
        beta_t=smooth.beta_t,
        eps_t=eps_t,
    )
