"""Curated prior-sample datasets and the interactive inspection sessions.

A session owns a scenario, its calibration data, the current
hyper-parameters, and the latest generated sample dataset.  Samples pair
each parameter draw with the leading smooth control perturbations; the
difference fields across perturbations share the driving noise, so their
magnitudes scale exactly with the perturbation's spectral weight.
Overviews bin the records by correlation length and summarize per-bin
magnitude distributions by quantiles.
"""

import threading
import uuid
from dataclasses import dataclass, field

import numpy as np

from .calibration import assemble_sensitivity, calibrate, posterior_optimum_ensemble
from .discrepancy import CalibrationDataset
from .errors import (
    DegenerateFieldError,
    DegenerateScaleError,
    NoDataError,
    NotFoundError,
    UnsupportedViewError,
    ValidationError,
)
from .fem import ScenarioConfig
from .hyperinit import correlation_length, domain_diameter, initialize_hyperparams
from .prior import HyperParams, PriorOperators
from .workflows import (
    ScenarioBundle,
    build_scenario,
    generate_calibration_data,
    solve_highfi_optimum,
)

EIGENVALUE_CUTOFF = 0.1
RAW_POINT_LIMIT = 500
MAX_BINS = 12


@dataclass
class PerturbationBasis:
    """Leading smooth control directions ranked by spectral weight.

    ``eigenvalues`` are those of the inverted control smoothing operator
    (descending, cut at one order of magnitude below the leading one) and
    each direction is rescaled to the mass norm of the expansion point.
    """

    eigenvalues: np.ndarray
    directions: np.ndarray
    scales: np.ndarray
    kappas: np.ndarray

    @property
    def count(self):
        return self.directions.shape[0]


def perturbation_basis(prior: PriorOperators, z_tilde) -> PerturbationBasis:
    """Generalized eigenpairs of the control smoothing operator, truncated."""
    zt = prior._require_z_tilde(z_tilde)
    scale = float(np.sqrt(prior.control_space.norm2(zt)))
    if scale <= 0.0:
        raise DegenerateScaleError("z_tilde has zero norm")
    lam, V = prior.factor_z.generalized_eigenpairs()
    inv = 1.0 / lam
    order = np.argsort(inv)[::-1]
    inv = inv[order]
    V = V[:, order]
    keep = inv >= EIGENVALUE_CUTOFF * inv[0]
    inv = inv[keep]
    directions = V[:, keep].T * scale
    # For an eigenvector, the perturbation weight has the closed form
    # (eigenvalue of E_z^{-1})^2 * ||dz||^2_{M_z}.
    scales = (inv**2) * scale**2
    kappas = np.array([_control_kappa(prior, d) for d in directions])
    return PerturbationBasis(
        eigenvalues=inv, directions=directions, scales=scales, kappas=kappas
    )


@dataclass
class SampleRecord:
    """One (draw, perturbation) pair with its fields and metrics."""

    i: int
    k: int
    delta_z: np.ndarray
    base_field: np.ndarray
    diff_field: np.ndarray
    metrics: dict


@dataclass
class SampleDataset:
    """Q parameter draws crossed with P perturbations.

    The difference field of record (i, k) is ``sqrt(scales[k])`` times a
    per-draw unit field, so fields are stored factored: O(Q * n_u) memory
    for Q * P records.
    """

    seed: int
    q: int
    basis: PerturbationBasis
    base_fields: np.ndarray
    diff_unit_fields: np.ndarray
    state_kappas: np.ndarray

    @property
    def p(self):
        return self.basis.count

    @property
    def n_records(self):
        return self.q * self.p

    def diff_field(self, i, k):
        return np.sqrt(self.basis.scales[k]) * self.diff_unit_fields[i]

    def max_abs_base(self):
        return np.max(np.abs(self.base_fields), axis=1)

    def max_abs_diff(self):
        """(Q, P) matrix of difference-field magnitudes."""
        unit = np.max(np.abs(self.diff_unit_fields), axis=1)
        return np.outer(unit, np.sqrt(self.basis.scales))

    def record(self, i, k) -> SampleRecord:
        if not (0 <= i < self.q and 0 <= k < self.p):
            raise NotFoundError(f"record ({i}, {k}) out of range")
        base = self.base_fields[i]
        diff = self.diff_field(i, k)
        return SampleRecord(
            i=i,
            k=k,
            delta_z=self.basis.directions[k],
            base_field=base,
            diff_field=diff,
            metrics={
                "max_abs_base": float(np.max(np.abs(base))),
                "max_abs_diff": float(np.max(np.abs(diff))),
                "kappa_delta_z": float(self.basis.kappas[k]),
                "kappa_base": float(self.state_kappas[i]),
            },
        )


def _control_kappa(prior: PriorOperators, values):
    """Correlation length of a control direction; constants get the diameter."""
    nodes = prior.control_space.nodes
    try:
        return correlation_length(values, nodes).kappa
    except DegenerateFieldError:
        return domain_diameter(nodes)


def _spatial_kappa(prior: PriorOperators, field_values):
    """Correlation length of a state field (snapshot-averaged if transient)."""
    space = prior.state_space
    if not space.is_transient:
        try:
            return correlation_length(field_values, space.nodes).kappa
        except DegenerateFieldError:
            return domain_diameter(space.nodes)
    nt, ns = space.n_time, space.n_spatial
    X = field_values.reshape(nt, ns)
    kappas = []
    for row in X:
        try:
            kappas.append(correlation_length(row, space.nodes).kappa)
        except DegenerateFieldError:
            continue
    return float(np.mean(kappas)) if kappas else 0.0


def generate_sample_dataset(
    prior: PriorOperators,
    basis: PerturbationBasis,
    q,
    seed,
    noise=None,
) -> SampleDataset:
    """Draw Q (base, difference) field pairs against the perturbation basis.

    Sample i consumes seed + i.  ``noise`` optionally overrides the driving
    standard-normal pair per draw (testing hook).
    """
    if q < 1:
        raise ValidationError("q must be at least 1")
    n_u = prior.n_u
    base_fields = np.empty((q, n_u))
    diff_unit = np.empty((q, n_u))
    root_az = np.sqrt(prior.hyper.alpha_z)
    for i in range(q):
        if noise is None:
            rng = np.random.default_rng(seed + i)
            omega1 = rng.standard_normal(n_u)
            omega2 = rng.standard_normal(n_u)
        else:
            omega1, omega2 = noise(i)
        base_fields[i] = prior.state_half_sample(omega1)
        diff_unit[i] = root_az * prior.state_half_sample(omega2)
    state_kappas = np.array([_spatial_kappa(prior, f) for f in base_fields])
    return SampleDataset(
        seed=seed,
        q=q,
        basis=basis,
        base_fields=base_fields,
        diff_unit_fields=diff_unit,
        state_kappas=state_kappas,
    )


def _quantiles(values):
    qs = np.percentile(values, [5, 25, 50, 75, 95])
    return {
        "q05": float(qs[0]),
        "q25": float(qs[1]),
        "q50": float(qs[2]),
        "q75": float(qs[3]),
        "q95": float(qs[4]),
    }


def _bin_payload(xs, ys, indices, n_bins):
    """Equal-width bins over xs with quantile summaries of ys per bin."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    lo, hi = float(xs.min()), float(xs.max())
    if hi <= lo:
        hi = lo + max(1e-12, abs(lo) * 1e-9 + 1e-12)
        n_bins = 1
    edges = np.linspace(lo, hi, n_bins + 1)
    which = np.clip(np.digitize(xs, edges[1:-1], right=False), 0, n_bins - 1)
    bins = []
    for b in range(n_bins):
        mask = which == b
        count = int(mask.sum())
        entry = {
            "lo": float(edges[b]),
            "hi": float(edges[b + 1]),
            "count": count,
        }
        if count:
            bx, by = xs[mask], ys[mask]
            entry["label"] = float(bx.mean())
            entry["quantiles"] = _quantiles(by)
            pts = [
                {"i": int(indices[j][0]), "k": int(indices[j][1]),
                 "x": float(xs[j]), "y": float(ys[j])}
                for j in np.nonzero(mask)[0]
            ]
            if count <= RAW_POINT_LIMIT:
                entry["values"] = by.tolist()
                entry["points"] = pts
            else:
                # Keep only the extremes when the bin is too dense to ship raw.
                entry["points"] = [pts[int(np.argmin(by))], pts[int(np.argmax(by))]]
        else:
            entry["label"] = float(0.5 * (edges[b] + edges[b + 1]))
        bins.append(entry)
    return bins


def overview_payload(samples: SampleDataset, view, stale=False):
    """Binned magnitude-vs-correlation-length summary of a sample dataset."""
    if samples is None:
        raise NoDataError("no sample dataset generated yet")
    if view not in ("state", "control"):
        raise UnsupportedViewError(f"unknown view {view!r}")
    if view == "control":
        q, p = samples.q, samples.p
        xs = np.tile(samples.basis.kappas, q)
        ys = samples.max_abs_diff().ravel()
        indices = [(i, k) for i in range(q) for k in range(p)]
        n_bins = min(p, MAX_BINS)
        total = q * p
    else:
        xs = samples.state_kappas
        ys = samples.max_abs_base()
        indices = [(i, 0) for i in range(samples.q)]
        n_bins = min(MAX_BINS, max(1, len(np.unique(xs))))
        total = samples.q
    bins = _bin_payload(xs, ys, indices, n_bins)
    return {
        "view": view,
        "stale": bool(stale),
        "total": total,
        "q": samples.q,
        "p": samples.p,
        "seed": samples.seed,
        "bins": bins,
    }


def field_payload(space, values):
    """JSON-compatible nodal field (time-major rows for transient spaces)."""
    values = np.asarray(values, dtype=float)
    doc = {"dim": space.dim, "nodes": space.nodes.tolist()}
    if space.is_transient:
        doc["values"] = values.reshape(space.n_time, space.n_spatial).tolist()
    else:
        doc["values"] = values.tolist()
    return doc


class StudioSession:
    """One interactive tuning session over a scenario.

    Mutating operations serialize on a lock; reads serve whatever dataset
    is current, flagged stale after any hyper-parameter change until the
    next regeneration.
    """

    def __init__(self, scenario: ScenarioConfig, n_data=2, seed=None, init_options=None):
        self.id = uuid.uuid4().hex
        self._lock = threading.Lock()
        self.scenario = scenario.with_defaults()
        self.bundle: ScenarioBundle = build_scenario(self.scenario)
        data_seed = self.scenario.seed if seed is None else seed
        self.dataset: CalibrationDataset = generate_calibration_data(
            self.bundle, n_data=n_data, seed=data_seed
        )
        options = dict(init_options or {})
        self.hyper: HyperParams = initialize_hyperparams(
            self.dataset,
            self.bundle.state_space,
            self.bundle.control_space,
            self.bundle.lowfi,
            seed=data_seed,
            **options,
        )
        self.audit = []
        self.samples: SampleDataset | None = None
        self.stale = False
        self._posterior = None
        self._rebuild()

    def _rebuild(self):
        self.prior = PriorOperators(
            self.bundle.state_space,
            self.bundle.control_space,
            self.hyper,
            z_tilde=self.bundle.z_tilde,
        )
        self.basis = perturbation_basis(self.prior, self.bundle.z_tilde)
        self._posterior = None

    # -- mutations -------------------------------------------------------------

    def update_hyperparams(self, patch) -> HyperParams:
        """Apply a validated patch, rebuild the prior, and flag staleness."""
        if not isinstance(patch, dict):
            raise ValidationError("patch must be an object of hyper-parameters")
        with self._lock:
            if patch:
                self.hyper = self.hyper.replace(**patch)
                self._rebuild()
                self.stale = True
            self.audit.append(
                {"patch": dict(patch), "hyperparams": self.hyper.to_dict()}
            )
            return self.hyper

    def generate(self, q=200, seed=0) -> SampleDataset:
        with self._lock:
            self.samples = generate_sample_dataset(self.prior, self.basis, q, seed)
            self.stale = False
            return self.samples

    # -- reads -----------------------------------------------------------------

    def overview(self, view):
        return overview_payload(self.samples, view, stale=self.stale)

    def inspect(self, i, k) -> SampleRecord:
        if self.samples is None:
            raise NoDataError("no sample dataset generated yet")
        return self.samples.record(i, k)

    def inspect_payload(self, i, k):
        rec = self.inspect(i, k)
        space = self.bundle.state_space
        control = self.bundle.control_space
        return {
            "i": rec.i,
            "k": rec.k,
            "stale": self.stale,
            "metrics": rec.metrics,
            "delta_z": field_payload(control, rec.delta_z),
            "base_field": field_payload(space, rec.base_field),
            "diff_field": field_payload(space, rec.diff_field),
        }

    def timeseries(self):
        """Spatial-norm-vs-time curves of the samples plus the data curve."""
        space = self.bundle.state_space
        if not space.is_transient:
            raise UnsupportedViewError("timeseries view requires a transient scenario")
        if self.samples is None:
            raise NoDataError("no sample dataset generated yet")
        nt, ns = space.n_time, space.n_spatial
        spatial = space.spatial()
        curves = [
            np.sqrt(spatial.norm2(f.reshape(nt, ns))).tolist()
            for f in self.samples.base_fields
        ]
        d1 = self.dataset.d_raw[0].reshape(nt, ns)
        data_curve = np.sqrt(spatial.norm2(d1)).tolist()
        return {
            "t": space.time_grid.tolist(),
            "curves": curves,
            "data_curve": data_curve,
            "stale": self.stale,
        }

    def posterior_ensemble(self, n=200, seed=0):
        with self._lock:
            if self._posterior is None:
                self._posterior = calibrate(self.dataset, self.prior)
                self._sens = assemble_sensitivity(
                    self.bundle.problem, self.bundle.z_tilde
                )
            samples = posterior_optimum_ensemble(self._sens, self._posterior, n, seed)
        return {
            "z_tilde": self.bundle.z_tilde.tolist(),
            "samples": samples.tolist(),
            "hifi_optimum": solve_highfi_optimum(self.bundle).tolist(),
        }

    def export(self):
        """Snapshot of everything needed to audit or reproduce the session."""
        doc = {
            "id": self.id,
            "scenario": self.scenario.to_dict(),
            "hyperparams": self.hyper.to_dict(),
            "dataset": self.dataset.to_dict(),
            "z_tilde": self.bundle.z_tilde.tolist(),
            "audit": list(self.audit),
            "stale": self.stale,
        }
        if self.samples is not None:
            doc["samples"] = {
                "q": self.samples.q,
                "p": self.samples.p,
                "seed": self.samples.seed,
                "basis_eigenvalues": self.samples.basis.eigenvalues.tolist(),
                "basis_kappas": self.samples.basis.kappas.tolist(),
                "metrics": {
                    "max_abs_base": self.samples.max_abs_base().tolist(),
                    "max_abs_diff": self.samples.max_abs_diff().tolist(),
                    "state_kappas": self.samples.state_kappas.tolist(),
                },
            }
        return doc


class SessionStore:
    """In-memory registry of studio sessions."""

    def __init__(self):
        self._sessions = {}
        self._lock = threading.Lock()

    def create(self, scenario_doc) -> StudioSession:
        doc = dict(scenario_doc)
        n_data = int(doc.pop("n_data", 2))
        scenario = ScenarioConfig.from_dict(doc)
        session = StudioSession(scenario, n_data=n_data)
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id) -> StudioSession:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise NotFoundError(f"no session {session_id!r}") from None

    def drop(self, session_id):
        with self._lock:
            self._sessions.pop(session_id, None)
