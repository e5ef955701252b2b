"""Discretized function spaces and PDE solution operators.

Piecewise-linear finite elements on the unit interval / unit square, with
an optional uniform time grid for transient problems.  Three built-in
scenarios pair a high-fidelity advection-diffusion model with a low-fidelity
pure-diffusion model:

* ``stationary-1d``: -u'' + u' = z on (0,1) with Robin boundaries.
* ``transient-1d``:  u_t - u'' + u' = z on (0,1) with homogeneous Neumann
  boundaries and u(0, x) = 0, integrated with implicit Euler.
* ``stationary-2d``: -Lap(u) + v.grad(u) = z on (0,1)^2 with a Dirichlet
  bottom edge and Neumann elsewhere, v = (5, 5).

All solves are desk scale and use dense direct factorizations.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

from ._validation import as_vector
from .errors import AssemblyError, ConfigError, LinearSolveError, ShapeError

PROBLEMS = ("stationary-1d", "transient-1d", "stationary-2d")

# Robin boundary coefficient shared by the 1D models.  The boundary terms
# enter the bilinear form as positive point-mass contributions; the sign is
# pinned by requiring the pure-diffusion operator to stay nonsingular.
ROBIN_COEFF = 2.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed scenario description (JSON-compatible)."""

    problem: str
    n_space: int
    n_time: int | None = None
    t_final: float | None = None
    velocity: tuple[float, float] = (5.0, 5.0)
    regularization: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(
                f"unknown problem {self.problem!r}; expected one of {PROBLEMS}"
            )
        if self.n_space < 3:
            raise ConfigError("n_space must be at least 3 nodes")
        if self.problem == "transient-1d":
            if self.n_time is not None and self.n_time < 3:
                raise ConfigError("n_time must be at least 3 nodes")

    @property
    def is_transient(self):
        return self.problem == "transient-1d"

    @property
    def dim(self):
        return 2 if self.problem == "stationary-2d" else 1

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("scenario config must be a JSON object")
        known = {
            "problem",
            "n_space",
            "n_time",
            "T",
            "velocity",
            "regularization",
            "seed",
        }
        extra = set(doc) - known - {"n_data"}
        if extra:
            raise ConfigError(f"unknown scenario keys: {sorted(extra)}")
        try:
            kwargs = dict(
                problem=doc["problem"],
                n_space=int(doc["n_space"]),
            )
        except KeyError as exc:
            raise ConfigError(f"scenario config missing key {exc.args[0]!r}") from exc
        if "n_time" in doc and doc["n_time"] is not None:
            kwargs["n_time"] = int(doc["n_time"])
        if "T" in doc and doc["T"] is not None:
            kwargs["t_final"] = float(doc["T"])
        if "velocity" in doc and doc["velocity"] is not None:
            vel = tuple(float(v) for v in doc["velocity"])
            if len(vel) != 2:
                raise ConfigError("velocity must have two components")
            kwargs["velocity"] = vel
        if "regularization" in doc:
            kwargs["regularization"] = float(doc["regularization"])
        if "seed" in doc:
            kwargs["seed"] = int(doc["seed"])
        return cls(**kwargs)

    def to_dict(self):
        doc = {
            "problem": self.problem,
            "n_space": self.n_space,
            "regularization": self.regularization,
            "seed": self.seed,
        }
        if self.is_transient:
            doc["n_time"] = self.n_time if self.n_time is not None else 64
            doc["T"] = self.t_final if self.t_final is not None else 1.0
        if self.problem == "stationary-2d":
            doc["velocity"] = list(self.velocity)
        return doc

    def with_defaults(self):
        """Fill in the transient defaults (n_time=64, T=1)."""
        if not self.is_transient:
            return self
        return replace(
            self,
            n_time=self.n_time if self.n_time is not None else 64,
            t_final=self.t_final if self.t_final is not None else 1.0,
        )


def interval_mesh(n):
    """Uniform mesh of (0,1) with ``n`` nodes; returns (nodes, elements)."""
    if n < 3:
        raise ConfigError("need at least 3 nodes")
    nodes = np.linspace(0.0, 1.0, n)
    elements = np.stack([np.arange(n - 1), np.arange(1, n)], axis=1)
    return nodes, elements


def triangle_mesh(n):
    """Structured right-triangle mesh of (0,1)^2 with n x n nodes.

    Each grid cell is split along the (lower-left, upper-right) diagonal,
    giving 2(n-1)^2 conforming P1 triangles with positive orientation.
    """
    if n < 3:
        raise ConfigError("need at least 3 nodes per side")
    xs = np.linspace(0.0, 1.0, n)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    tris = []
    for j in range(n - 1):
        for i in range(n - 1):
            v00 = j * n + i
            v10 = v00 + 1
            v01 = v00 + n
            v11 = v01 + 1
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return nodes, np.asarray(tris, dtype=int)


def assemble_1d(nodes):
    """P1 mass and stiffness matrices on an ordered 1D mesh (pure Neumann)."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size < 2:
        raise AssemblyError("1D mesh needs at least two ordered nodes")
    h = np.diff(nodes)
    if np.any(h <= 0):
        raise AssemblyError("1D mesh nodes must be strictly increasing")
    n = nodes.size
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    for e, he in enumerate(h):
        sl = slice(e, e + 2)
        M[sl, sl] += (he / 6.0) * np.array([[2.0, 1.0], [1.0, 2.0]])
        K[sl, sl] += (1.0 / he) * np.array([[1.0, -1.0], [-1.0, 1.0]])
    return M, K


def assemble_2d(nodes, elements):
    """P1 mass and stiffness matrices on a triangulation (pure Neumann)."""
    n = nodes.shape[0]
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    for tri in elements:
        p = nodes[tri]
        b = np.array(
            [p[1, 1] - p[2, 1], p[2, 1] - p[0, 1], p[0, 1] - p[1, 1]]
        )
        c = np.array(
            [p[2, 0] - p[1, 0], p[0, 0] - p[2, 0], p[1, 0] - p[0, 0]]
        )
        area = 0.5 * (b[0] * c[1] - b[1] * c[0])
        if area <= 0:
            raise AssemblyError("triangle with non-positive area")
        idx = np.ix_(tri, tri)
        K[idx] += (np.outer(b, b) + np.outer(c, c)) / (4.0 * area)
        M[idx] += (area / 12.0) * (np.ones((3, 3)) + np.eye(3))
    return M, K


def advection_1d(nodes):
    """P1 advection matrix for the term u' (unit velocity)."""
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.size
    C = np.zeros((n, n))
    local = np.array([[-0.5, 0.5], [-0.5, 0.5]])
    for e in range(n - 1):
        sl = slice(e, e + 2)
        C[sl, sl] += local
    return C


def advection_2d(nodes, elements, velocity):
    """P1 advection matrix for v.grad(u) with constant velocity."""
    n = nodes.shape[0]
    C = np.zeros((n, n))
    vx, vy = velocity
    for tri in elements:
        p = nodes[tri]
        b = np.array(
            [p[1, 1] - p[2, 1], p[2, 1] - p[0, 1], p[0, 1] - p[1, 1]]
        )
        c = np.array(
            [p[2, 0] - p[1, 0], p[0, 0] - p[2, 0], p[1, 0] - p[0, 0]]
        )
        # grad(phi_j) is constant on the triangle and int(phi_i) = area/3.
        C[np.ix_(tri, tri)] += np.tile((vx * b + vy * c) / 6.0, (3, 1))
    return C


@dataclass
class FunctionSpace:
    """A discretized Hilbert space with mass / stiffness Gram matrices.

    For transient problems the space is the tensor product of a spatial P1
    space with a temporal P1 grid; the full weighting factors exactly as
    mass = mass_t (x) mass_s and coordinate vectors are stored time-major.
    """

    nodes: np.ndarray
    dim: int
    mass_s: np.ndarray
    stiffness_s: np.ndarray
    elements: np.ndarray | None = None
    time_grid: np.ndarray | None = None
    mass_t: np.ndarray | None = None
    stiffness_t: np.ndarray | None = None

    def __post_init__(self):
        _check_gram(self.mass_s, self.stiffness_s)
        if self.time_grid is not None:
            _check_gram(self.mass_t, self.stiffness_t)

    @property
    def is_transient(self):
        return self.time_grid is not None

    @property
    def n_spatial(self):
        return self.mass_s.shape[0]

    @property
    def n_time(self):
        return 0 if self.time_grid is None else self.time_grid.size

    @property
    def n(self):
        """Total coordinate dimension."""
        if self.is_transient:
            return self.n_time * self.n_spatial
        return self.n_spatial

    def spatial(self):
        """The stationary spatial factor (self when already stationary)."""
        if not self.is_transient:
            return self
        return FunctionSpace(
            nodes=self.nodes,
            dim=self.dim,
            mass_s=self.mass_s,
            stiffness_s=self.stiffness_s,
            elements=self.elements,
        )

    def temporal(self):
        if not self.is_transient:
            raise ShapeError("stationary space has no temporal factor")
        return FunctionSpace(
            nodes=self.time_grid,
            dim=1,
            mass_s=self.mass_t,
            stiffness_s=self.stiffness_t,
        )

    def apply_mass(self, x):
        """mass @ x without materializing the Kronecker product."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ShapeError(f"expected trailing dimension {self.n}")
        if not self.is_transient:
            return x @ self.mass_s
        shape = x.shape[:-1] + (self.n_time, self.n_spatial)
        X = x.reshape(shape)
        out = np.einsum("ij,...jk,kl->...il", self.mass_t, X, self.mass_s)
        return out.reshape(x.shape)

    def mass_dense(self):
        """Dense mass matrix (Kronecker product for transient spaces)."""
        if not self.is_transient:
            return self.mass_s
        return np.kron(self.mass_t, self.mass_s)

    def inner(self, x, y):
        x = as_vector(x, self.n, "x")
        y = as_vector(y, self.n, "y")
        return float(y @ self.apply_mass(x))

    def norm2(self, x):
        """Squared mass-weighted norm; batched over leading axes."""
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,...i->...", x, self.apply_mass(x))

    def norm(self, x):
        return np.sqrt(self.norm2(x))


def _check_gram(M, K):
    if M is None or K is None:
        raise AssemblyError("mass and stiffness matrices are both required")
    if not np.allclose(M, M.T, atol=1e-12):
        raise AssemblyError("mass matrix must be symmetric")
    if not np.allclose(K, K.T, atol=1e-12):
        raise AssemblyError("stiffness matrix must be symmetric")
    try:
        sla.cholesky(M, lower=True)
    except sla.LinAlgError as exc:
        raise AssemblyError("mass matrix must be positive definite") from exc


def assemble_space(scenario: ScenarioConfig) -> FunctionSpace:
    """Build the state function space for a scenario.

    The control space is the spatial factor of the returned space
    (``space.spatial()``); all built-in scenarios distribute the source
    over the same spatial mesh as the state.
    """
    scenario = scenario.with_defaults()
    if scenario.dim == 1:
        nodes, elements = interval_mesh(scenario.n_space)
        M, K = assemble_1d(nodes)
        nodes = nodes[:, None]
    else:
        nodes, elements = triangle_mesh(scenario.n_space)
        M, K = assemble_2d(nodes, elements)
    if not scenario.is_transient:
        return FunctionSpace(
            nodes=nodes,
            dim=scenario.dim,
            mass_s=M,
            stiffness_s=K,
            elements=elements,
        )
    time_grid = np.linspace(0.0, scenario.t_final, scenario.n_time)
    Mt, Kt = assemble_1d(time_grid)
    return FunctionSpace(
        nodes=nodes,
        dim=scenario.dim,
        mass_s=M,
        stiffness_s=K,
        elements=elements,
        time_grid=time_grid,
        mass_t=Mt,
        stiffness_t=Kt,
    )


@dataclass
class LinearSolutionOperator:
    """Affine map from control coordinates to state coordinates."""

    matrix: np.ndarray
    offset: np.ndarray = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.offset is None:
            self.offset = np.zeros(self.matrix.shape[0])
        self.offset = as_vector(self.offset, self.matrix.shape[0], "offset")

    @property
    def n_out(self):
        return self.matrix.shape[0]

    @property
    def n_in(self):
        return self.matrix.shape[1]

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.n_in:
            raise ShapeError(
                f"control has trailing dimension {z.shape[-1]}, expected {self.n_in}"
            )
        return z @ self.matrix.T + self.offset


def _solve_dense(A, B, what):
    try:
        out = sla.solve(A, B)
    except sla.LinAlgError as exc:
        raise AssemblyError(f"{what}: singular system") from exc
    if not np.all(np.isfinite(out)):
        raise AssemblyError(f"{what}: solve produced non-finite values")
    return out


def _stationary_operator(scenario, space, advect):
    nodes = space.nodes[:, 0] if space.dim == 1 else space.nodes
    M = space.mass_s
    if space.dim == 1:
        A = space.stiffness_s.copy()
        if advect:
            A += advection_1d(nodes)
        A[0, 0] += ROBIN_COEFF
        A[-1, -1] += ROBIN_COEFF
        S = _solve_dense(A, M, "1D operator")
        return LinearSolutionOperator(S)
    A = space.stiffness_s.copy()
    if advect:
        A += advection_2d(space.nodes, space.elements, scenario.velocity)
    # Homogeneous Dirichlet data on the bottom edge y = 0.
    dirichlet = np.isclose(space.nodes[:, 1], 0.0)
    free = ~dirichlet
    S = np.zeros((space.n_spatial, space.n_spatial))
    S[free, :] = _solve_dense(A[np.ix_(free, free)], M[free, :], "2D operator")
    return LinearSolutionOperator(S)


def _transient_operator(scenario, space, advect):
    nodes = space.nodes[:, 0]
    Ms = space.mass_s
    A = space.stiffness_s.copy()
    if advect:
        A += advection_1d(nodes)
    dt = space.time_grid[1] - space.time_grid[0]
    ns, nt = space.n_spatial, space.n_time
    lhs = Ms + dt * A
    # u_{i+1} = step @ u_i + load @ z with implicit Euler and u_1 = 0.
    step = _solve_dense(lhs, Ms, "transient step")
    load = _solve_dense(lhs, dt * Ms, "transient load")
    S = np.zeros((nt * ns, ns))
    P = np.zeros((ns, ns))
    for i in range(1, nt):
        P = step @ P + load
        S[i * ns : (i + 1) * ns, :] = P
    return LinearSolutionOperator(S)


def build_highfi(scenario: ScenarioConfig, space: FunctionSpace) -> LinearSolutionOperator:
    """Discrete solution operator of the advection-diffusion model."""
    scenario = scenario.with_defaults()
    if scenario.is_transient:
        return _transient_operator(scenario, space, advect=True)
    return _stationary_operator(scenario, space, advect=True)


def build_lowfi(scenario: ScenarioConfig, space: FunctionSpace) -> LinearSolutionOperator:
    """Discrete solution operator of the diffusion-only model."""
    scenario = scenario.with_defaults()
    if scenario.is_transient:
        return _transient_operator(scenario, space, advect=False)
    return _stationary_operator(scenario, space, advect=False)


def elliptic_apply_inverse(space: FunctionSpace, beta, v):
    """Apply (beta * stiffness + mass)^{-1} on a stationary space."""
    if space.is_transient:
        raise ShapeError(
            "elliptic solve is defined on stationary factors; "
            "use space.spatial() or space.temporal()"
        )
    if beta < 0:
        raise ConfigError("beta must be nonnegative")
    v = as_vector(v, space.n, "v")
    E = beta * space.stiffness_s + space.mass_s
    try:
        cf = sla.cho_factor(E)
        out = sla.cho_solve(cf, v)
    except sla.LinAlgError as exc:
        raise LinearSolveError("elliptic operator is not positive definite") from exc
    if not np.all(np.isfinite(out)):
        raise LinearSolveError("elliptic solve produced non-finite values")
    return out


def default_target(scenario: ScenarioConfig, space: FunctionSpace):
    """Tracking target for the built-in scenarios.

    1D uses T(x) = 50 - 60 (x - 1/2)^2; 2D uses its radial analog; the
    transient target holds the 1D profile constant in time.
    """
    scenario = scenario.with_defaults()
    if space.dim == 1:
        x = space.nodes[:, 0]
        profile = 50.0 - 60.0 * (x - 0.5) ** 2
    else:
        x, y = space.nodes[:, 0], space.nodes[:, 1]
        profile = 50.0 - 60.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)
    if not space.is_transient:
        return profile
    return np.tile(profile, space.n_time)
