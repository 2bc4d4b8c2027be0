"""Linearized shallow-water simulator on a closed square basin.

Momentum is advanced without advection: provisional velocities from the
forward-space pressure gradient, then a trapezoidal Coriolis rotation of
those provisional velocities with f = f0 + beta y. The surface elevation is
then updated from the continuity equation with first-order upwind total
depth (eta + H). Wind stress, friction, sources and sinks are zero.

Grids are indexed [i, j] with i along x (first axis, velocity u) and j along
y (second axis, velocity v). All three grids are N1 x N2, but velocities are
staggered: u[i, j] is the velocity through the east face of cell (i, j),
where the forward difference eta[i + 1, j] - eta[i, j] is centered, and
u[-1, :] is the east wall. The west wall flux is implicitly zero. The same
holds for v along the second axis. Walls are zero-flux faces, so the volume
update telescopes and is conserved to round-off, and a symmetric bump stays
symmetric without rotation.
"""

import logging
from dataclasses import dataclass

import numpy as np

from rankmap.core.models import IcFamily, InitialConditionSpec, SweParams
from rankmap.services.datagen import add_white_noise
from rankmap.services.empirical import DataSet
from rankmap.utils.errors import ContractViolationError, DimensionMismatchError, InstabilityError
from rankmap.utils.random import spawn

logger = logging.getLogger(__name__)

VARIABLES = ("u", "v", "eta")

# Velocity amplitude (m/s) per metre of eta amplitude in the mixed vortex family
MIXED_VELOCITY_SCALE = 0.1

AMPLITUDE_RANGES: dict[IcFamily, tuple[float, float]] = {
    IcFamily.GAUSSIAN_BUMP: (0.5, 1.5),
    IcFamily.GAUSSIAN_DIPOLE: (0.5, 1.5),
    IcFamily.VELOCITY_JET: (0.1, 0.5),
    IcFamily.MIXED_UV_ETA: (0.5, 1.5),
    IcFamily.RING_WAVE: (0.5, 1.5),
    IcFamily.STEP_WAVE: (0.5, 1.5),
}
CENTER_RANGE = (0.3, 0.7)
WIDTH_RANGE = (0.05, 0.15)


@dataclass(frozen=True)
class SweState:
    """Velocities u, v (m/s) and surface elevation eta (m) after ``time_step`` steps."""

    u: np.ndarray
    v: np.ndarray
    eta: np.ndarray
    time_step: int = 0

    def __post_init__(self) -> None:
        if not (self.u.shape == self.v.shape == self.eta.shape) or self.eta.ndim != 2:
            raise DimensionMismatchError(
                "shallow-water state",
                "three 2-D grids of equal shape",
                (self.u.shape, self.v.shape, self.eta.shape),
            )

    @property
    def grid(self) -> tuple[int, int]:
        return (int(self.eta.shape[0]), int(self.eta.shape[1]))

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.u).all() and np.isfinite(self.v).all() and np.isfinite(self.eta).all()
        )

    @classmethod
    def flat(cls, grid: tuple[int, int]) -> "SweState":
        """State at rest: zero velocities and a flat surface."""
        return cls(u=np.zeros(grid), v=np.zeros(grid), eta=np.zeros(grid))


def cfl_timestep(p: SweParams) -> float:
    """cfl_fraction * min(dx, dy) / sqrt(g H) in seconds."""
    return p.cfl_fraction * p.cfl_bound


def grid_coordinates(p: SweParams) -> tuple[np.ndarray, np.ndarray]:
    """Cell-center coordinates (m) along each axis, measured from the domain center."""
    n1, n2 = p.grid
    x = (np.arange(n1) - (n1 - 1) / 2.0) * p.dx
    y = (np.arange(n2) - (n2 - 1) / 2.0) * p.dy
    return x, y


def coriolis_parameter(p: SweParams) -> np.ndarray:
    """f = f0 + beta y as a row broadcastable over the grid."""
    _, y = grid_coordinates(p)
    return (p.f0 + p.beta * y)[None, :]


def swe_step(s: SweState, p: SweParams) -> SweState:
    """Advance one time step dt."""
    if s.grid != tuple(p.grid):
        raise DimensionMismatchError("state grid", tuple(p.grid), s.grid)
    dt, dx, dy, g, H = p.dt, p.dx, p.dy, p.g, p.H
    u, v, eta = s.u, s.v, s.eta

    # Provisional velocities from the pressure gradient
    u_new = np.zeros_like(u)
    v_new = np.zeros_like(v)
    u_new[:-1, :] = u[:-1, :] - g * dt / dx * (eta[1:, :] - eta[:-1, :])
    v_new[:, :-1] = v[:, :-1] - g * dt / dy * (eta[:, 1:] - eta[:, :-1])

    # Trapezoidal Coriolis rotation of the provisional velocities
    alpha = dt * coriolis_parameter(p)
    beta_c = alpha**2 / 4.0
    u_new, v_new = (
        ((1.0 - beta_c) * u_new + alpha * v_new) / (1.0 + beta_c),
        ((1.0 - beta_c) * v_new - alpha * u_new) / (1.0 + beta_c),
    )
    u_new[-1, :] = 0.0
    v_new[:, -1] = 0.0

    # Upwind total depth on each face
    depth = eta + H
    h_e = np.empty_like(eta)
    h_w = np.empty_like(eta)
    h_n = np.empty_like(eta)
    h_s = np.empty_like(eta)
    h_e[:-1, :] = np.where(u_new[:-1, :] > 0, depth[:-1, :], depth[1:, :])
    h_e[-1, :] = depth[-1, :]
    h_w[0, :] = depth[0, :]
    h_w[1:, :] = h_e[:-1, :]
    h_n[:, :-1] = np.where(v_new[:, :-1] > 0, depth[:, :-1], depth[:, 1:])
    h_n[:, -1] = depth[:, -1]
    h_s[:, 0] = depth[:, 0]
    h_s[:, 1:] = h_n[:, :-1]

    # Net outflow through east/west and north/south faces
    flux_x = np.empty_like(eta)
    flux_x[0, :] = u_new[0, :] * h_e[0, :]
    flux_x[1:, :] = u_new[1:, :] * h_e[1:, :] - u_new[:-1, :] * h_w[1:, :]
    flux_y = np.empty_like(eta)
    flux_y[:, 0] = v_new[:, 0] * h_n[:, 0]
    flux_y[:, 1:] = v_new[:, 1:] * h_n[:, 1:] - v_new[:, :-1] * h_s[:, 1:]

    eta_new = eta - dt * (flux_x / dx + flux_y / dy)
    return SweState(u=u_new, v=v_new, eta=eta_new, time_step=s.time_step + 1)


def total_volume(state: SweState, p: SweParams) -> float:
    """Displaced volume sum(eta) dx dy (m^3)."""
    return float(np.sum(state.eta) * p.dx * p.dy)


def _gaussian(x: np.ndarray, y: np.ndarray, cx: float, cy: float, width: float) -> np.ndarray:
    return np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * width**2))


def initial_state(ic: InitialConditionSpec, p: SweParams) -> SweState:
    """Build the step-0 state of an initial-condition family.

    Eta families put the amplitude on eta (m) with zero velocity; the jet
    puts it on u (m/s); the mixed family is a Gaussian eta bump with a
    rotating velocity field around it.
    """
    x1, y1 = grid_coordinates(p)
    x, y = np.meshgrid(x1, y1, indexing="ij")
    cx = (ic.center[0] - 0.5) * p.domain_len
    cy = (ic.center[1] - 0.5) * p.domain_len
    width = ic.width * p.domain_len
    amp = ic.amplitude
    zeros = np.zeros(p.grid)
    u, v, eta = zeros.copy(), zeros.copy(), zeros.copy()

    match ic.family:
        case IcFamily.GAUSSIAN_BUMP:
            eta = amp * _gaussian(x, y, cx, cy, width)
        case IcFamily.GAUSSIAN_DIPOLE:
            eta = amp * (
                _gaussian(x, y, cx - width, cy, width) - _gaussian(x, y, cx + width, cy, width)
            )
        case IcFamily.VELOCITY_JET:
            u = amp * np.exp(-((y - cy) ** 2) / (2.0 * width**2))
        case IcFamily.MIXED_UV_ETA:
            bump = _gaussian(x, y, cx, cy, width)
            eta = amp * bump
            speed = MIXED_VELOCITY_SCALE * amp
            u = -speed * (y - cy) / width * bump
            v = speed * (x - cx) / width * bump
        case IcFamily.RING_WAVE:
            radius = np.hypot(x - cx, y - cy)
            eta = amp * np.exp(-((radius - 2.0 * width) ** 2) / (2.0 * (0.5 * width) ** 2))
        case IcFamily.STEP_WAVE:
            eta = 0.5 * amp * (1.0 + np.tanh((cx - x) / (0.25 * width)))

    return SweState(u=u, v=v, eta=eta, time_step=0)


def random_initial_condition(
    family: IcFamily, p: SweParams, rng: np.random.Generator
) -> InitialConditionSpec:
    """Draw amplitude, center and width for one instance of a family.

    ``seed`` records a draw from ``rng`` for provenance; the state itself is
    a deterministic function of the other fields.
    """
    low, high = AMPLITUDE_RANGES[family]
    return InitialConditionSpec(
        family=family,
        amplitude=float(rng.uniform(low, high)),
        center=(float(rng.uniform(*CENTER_RANGE)), float(rng.uniform(*CENTER_RANGE))),
        width=float(rng.uniform(*WIDTH_RANGE)),
        seed=int(rng.integers(0, 2**31 - 1)),
    )


def simulate(
    ic: InitialConditionSpec, p: SweParams, extract_steps: list[int]
) -> list[SweState]:
    """Run from the initial condition and return snapshots at ``extract_steps``.

    Raises:
        InstabilityError: If the state stops being finite
    """
    if any(b < a for a, b in zip(extract_steps, extract_steps[1:])):
        raise ContractViolationError(f"extract_steps must be sorted, got {extract_steps}")
    if extract_steps and extract_steps[0] < 0:
        raise ContractViolationError("extract_steps must be nonnegative")

    state = initial_state(ic, p)
    snapshots: list[SweState] = []
    pending = list(extract_steps)
    while pending and pending[0] == 0:
        snapshots.append(state)
        pending.pop(0)

    last = pending[-1] if pending else 0
    for _ in range(last):
        state = swe_step(state, p)
        if not state.is_finite():
            raise InstabilityError(state.time_step)
        while pending and pending[0] == state.time_step:
            snapshots.append(state)
            pending.pop(0)
    return snapshots


def vectorize(state: SweState) -> np.ndarray:
    """Stack u, v, eta (each raveled in C order) into one column."""
    return np.concatenate([state.u.ravel(), state.v.ravel(), state.eta.ravel()])


def unvectorize(vector: np.ndarray, grid: tuple[int, int]) -> SweState:
    """Inverse of :func:`vectorize`."""
    size = grid[0] * grid[1]
    if vector.shape != (3 * size,):
        raise DimensionMismatchError("state vector", (3 * size,), vector.shape)
    u, v, eta = (vector[k * size : (k + 1) * size].reshape(grid) for k in range(3))
    return SweState(u=u.copy(), v=v.copy(), eta=eta.copy())


def variable_rows(grid: tuple[int, int]) -> dict[str, tuple[int, int]]:
    """Row ranges of u, v and eta in a vectorized state."""
    size = grid[0] * grid[1]
    return {name: (k * size, (k + 1) * size) for k, name in enumerate(VARIABLES)}


def build_swe_dataset(
    count_per_family: int,
    families: list[IcFamily],
    p: SweParams,
    noise_std: float,
    seed: int,
    steps: int = 1500,
) -> DataSet:
    """Signals X = vectorized initial states, observations Y = noisy states after ``steps``.

    Columns are grouped by family in the order given.
    """
    if not families:
        raise ContractViolationError("at least one initial-condition family is required")
    if count_per_family < 1:
        raise ContractViolationError(f"count_per_family must be >= 1, got {count_per_family}")
    ic_rng, noise_rng = spawn(seed, 2)
    grid = tuple(p.grid)
    initial_columns = []
    final_columns = []
    for family in families:
        for _ in range(count_per_family):
            ic = random_initial_condition(family, p, ic_rng)
            start, end = simulate(ic, p, [0, steps])
            initial_columns.append(vectorize(start))
            final_columns.append(vectorize(end))
        logger.debug("simulated %d %s instances", count_per_family, family)

    X = np.column_stack(initial_columns)
    Y = add_white_noise(np.column_stack(final_columns), noise_std, noise_rng)
    return DataSet(X=X, Y=Y, variable_rows=variable_rows(grid))
