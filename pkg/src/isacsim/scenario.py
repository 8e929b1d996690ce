"""Ground truth: base station, vehicle with scatterers and CR, kinematics.

Truth moves with exact Cartesian kinematics along the road (+y).  The polar
evolution model in :func:`evolve_state` is what the base station uses for
prediction; it is first-order accurate in ``v * dt / d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

VEHICLE_LENGTH = 5.0
VEHICLE_WIDTH = 2.0


@dataclass(frozen=True)
class PolarState:
    theta: float
    phi: float
    d: float
    v: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.phi, self.d, self.v])

    @classmethod
    def from_array(cls, x) -> "PolarState":
        return cls(float(x[0]), float(x[1]), float(x[2]), float(x[3]))


def default_scatterer_offsets(length=VEHICLE_LENGTH, width=VEHICLE_WIDTH, nx=2, ny=3) -> np.ndarray:
    """Cell centres of an ``nx`` by ``ny`` grid over the vehicle footprint.

    Offsets are scatterer minus CR, with the CR at the vehicle centre.
    """
    xs = (np.arange(nx) + 0.5) / nx * width - width / 2
    ys = (np.arange(ny) + 0.5) / ny * length - length / 2
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack((gx.ravel(), gy.ravel()))


@dataclass(frozen=True)
class WorldState:
    bs_position: np.ndarray
    cr_position: np.ndarray
    cr_velocity: float = 0.0
    a_acc: float = 0.0
    scatterer_offsets: np.ndarray = field(default_factory=default_scatterer_offsets)
    time: float = 0.0
    vehicle_length: float = VEHICLE_LENGTH
    vehicle_width: float = VEHICLE_WIDTH

    def __post_init__(self):
        object.__setattr__(self, "bs_position", np.asarray(self.bs_position, dtype=float))
        object.__setattr__(self, "cr_position", np.asarray(self.cr_position, dtype=float))
        off = np.atleast_2d(np.asarray(self.scatterer_offsets, dtype=float))
        object.__setattr__(self, "scatterer_offsets", off)
        if off.shape[0] < 1 or off.shape[1] != 2:
            raise ValueError("need at least one (dx, dy) scatterer offset")
        tol = 1e-12
        if np.any(np.abs(off[:, 0]) > self.vehicle_width / 2 + tol) or np.any(
            np.abs(off[:, 1]) > self.vehicle_length / 2 + tol
        ):
            raise ValueError("scatterer offsets must lie within the vehicle footprint")

    @property
    def h_eff(self) -> float:
        """Height of the array above the CR plane."""
        return float(self.bs_position[2] - self.cr_position[2])

    @property
    def n_scatterers(self) -> int:
        return self.scatterer_offsets.shape[0]

    def scatterer_positions(self) -> np.ndarray:
        pos = np.repeat(self.cr_position[None, :], self.n_scatterers, axis=0)
        pos[:, :2] += self.scatterer_offsets
        return pos

    def cr_polar(self) -> PolarState:
        th, ph, d = cartesian_to_polar(self.cr_position, self.bs_position)
        return PolarState(th, ph, d, self.cr_velocity)

    def scatterers_polar(self) -> list[PolarState]:
        return [
            PolarState(*cartesian_to_polar(p, self.bs_position), self.cr_velocity)
            for p in self.scatterer_positions()
        ]


def propagate_truth(world: WorldState, dt: float) -> WorldState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    pos = world.cr_position.copy()
    pos[1] += world.cr_velocity * dt + 0.5 * world.a_acc * dt * dt
    return replace(world, cr_position=pos, cr_velocity=world.cr_velocity + world.a_acc * dt,
                   time=world.time + dt)


def truth_at_slots(world: WorldState, dt: float, n_slots: int):
    """CR positions (n, 3) and speeds (n,) at slot times ``k * dt``, k < n."""
    t = np.arange(n_slots) * dt
    pos = np.repeat(world.cr_position[None, :], n_slots, axis=0)
    pos[:, 1] += world.cr_velocity * t + 0.5 * world.a_acc * t * t
    return pos, world.cr_velocity + world.a_acc * t


def cartesian_to_polar(point, bs_position) -> tuple[float, float, float]:
    """(theta, phi, d) of ``point`` as seen from the array.

    ``bs_position`` may also be a :class:`WorldState`.
    """
    if isinstance(bs_position, WorldState):
        bs_position = bs_position.bs_position
    x = point[0] - bs_position[0]
    y = point[1] - bs_position[1]
    h = bs_position[2] - point[2]
    rho = math.hypot(x, y)
    if rho == 0.0:
        raise ValueError("target directly beneath array")
    return -math.atan(h / rho), math.atan2(y, x), math.sqrt(rho * rho + h * h)


def cartesian_to_polar_many(points, bs_position) -> np.ndarray:
    """Vectorised :func:`cartesian_to_polar`; returns an (n, 3) array."""
    p = np.asarray(points, dtype=float)
    x = p[..., 0] - bs_position[0]
    y = p[..., 1] - bs_position[1]
    h = bs_position[2] - p[..., 2]
    rho = np.hypot(x, y)
    if np.any(rho == 0.0):
        raise ValueError("target directly beneath array")
    return np.stack((-np.arctan(h / rho), np.arctan2(y, x), np.sqrt(rho**2 + h**2)), axis=-1)


def polar_to_cartesian(theta, phi, d, bs_position) -> np.ndarray:
    rho = d * math.cos(theta)
    return np.array([
        bs_position[0] + rho * math.cos(phi),
        bs_position[1] + rho * math.sin(phi),
        bs_position[2] + d * math.sin(theta),
    ])


def evolve_array(x, dt: float) -> np.ndarray:
    """Noiseless polar evolution of a state array (theta, phi, d, v)."""
    th, ph, d, v = x[0], x[1], x[2], x[3]
    ct = math.cos(th)
    if abs(ct) < 1e-12:
        raise ValueError("singular elevation")
    st, sp, cp = math.sin(th), math.sin(ph), math.cos(ph)
    vdt = v * dt
    return np.array([th - vdt * sp * st / d, ph + vdt * cp / (d * ct), d + vdt * ct * sp, v])


def evolve_state(s: PolarState, dt: float, noise=None, rng=None) -> PolarState:
    """One step of the polar evolution model.

    ``noise`` holds four standard deviations (theta, phi, d, v); when given,
    zero-mean Gaussian perturbations are drawn from ``rng``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = evolve_array((s.theta, s.phi, s.d, s.v), dt)
    if noise is not None:
        if rng is None:
            raise ValueError("rng required when noise is given")
        x = x + rng.normal(0.0, 1.0, 4) * np.asarray(noise, dtype=float)
    return PolarState.from_array(x)


def min_range_separation(world: WorldState) -> float:
    """Smallest pairwise difference of scatterer ranges to the array."""
    r = cartesian_to_polar_many(world.scatterer_positions(), world.bs_position)[:, 2]
    if r.size < 2:
        return math.inf
    r = np.sort(r)
    return float(np.min(np.diff(r)))


def scatterers_resolvable(world: WorldState, delta_r: float) -> bool:
    return min_range_separation(world) > delta_r
