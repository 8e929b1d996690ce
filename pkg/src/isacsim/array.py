"""UPA steering vectors, sub-array beams and HPBW bookkeeping.

Elements sit on a half-wavelength grid of ``nz`` rows (elevation) by ``ny``
columns (azimuth); vectors are ordered row-major, index ``m * ny + k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

HPBW_CONST = 1.78


@dataclass(frozen=True)
class ArrayConfig:
    nz_max: int = 8
    ny_max: int = 8
    p_tx: float = 1.0

    def __post_init__(self):
        if self.nz_max < 1 or self.ny_max < 1:
            raise ValueError("array dimensions must be >= 1")
        if not self.p_tx > 0:
            raise ValueError("p_tx must be positive")

    @property
    def n_elements(self) -> int:
        return self.nz_max * self.ny_max


def steering_vector(theta, phi, nz: int, ny: int) -> np.ndarray:
    m = np.arange(nz)
    k = np.arange(ny)
    az = np.exp(-1j * np.pi * m * math.sin(theta))
    ay = np.exp(1j * np.pi * k * math.sin(phi) * math.cos(theta))
    return np.kron(az, ay)


@dataclass(frozen=True)
class BeamDesign:
    theta0: float
    phi0: float
    nz: int
    ny: int
    cfg: ArrayConfig
    clamped: bool = False

    def __post_init__(self):
        if not (1 <= self.nz <= self.cfg.nz_max and 1 <= self.ny <= self.cfg.ny_max):
            raise ValueError("active sub-array exceeds array limits")

    @cached_property
    def weights(self) -> np.ndarray:
        a = steering_vector(self.theta0, self.phi0, self.nz, self.ny)
        w = np.zeros((self.cfg.nz_max, self.cfg.ny_max), dtype=complex)
        w[: self.nz, : self.ny] = (math.sqrt(self.cfg.p_tx) * a / np.linalg.norm(a)).reshape(
            self.nz, self.ny)
        return w.ravel()

    @property
    def hpbw(self) -> tuple[float, float]:
        """Full half-power widths (theta-dagger, phi-dagger) of this beam."""
        return HPBW_CONST / self.nz, HPBW_CONST / self.ny


def beam_weights(theta0, phi0, nz, ny, cfg: ArrayConfig) -> BeamDesign:
    """Matched sub-array beam; counts outside [1, max] are clamped and flagged."""
    cz = min(max(int(nz), 1), cfg.nz_max)
    cy = min(max(int(ny), 1), cfg.ny_max)
    return BeamDesign(float(theta0), float(phi0), cz, cy, cfg, clamped=(cz, cy) != (nz, ny))


def _dirichlet_sq(u, n):
    # |sum_{m<n} exp(j pi m u)|^2
    u = np.asarray(u, dtype=float)
    s = np.sin(0.5 * np.pi * u)
    num = np.sin(0.5 * n * np.pi * u)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (num * num) / (s * s)
    return np.where(np.abs(s) < 1e-12, float(n * n), out)


def _dirichlet_sq_scalar(u, n):
    s = math.sin(0.5 * math.pi * u)
    if abs(s) < 1e-12:
        return float(n * n)
    num = math.sin(0.5 * n * math.pi * u)
    return num * num / (s * s)


def beam_gain(w: BeamDesign, theta, phi):
    """|a(theta, phi)^H w|^2 with the full-array steering vector.

    Evaluated in closed form (product of Dirichlet kernels); accepts arrays.
    """
    if np.isscalar(theta) and np.isscalar(phi):
        du_z = math.sin(theta) - math.sin(w.theta0)
        du_y = math.sin(phi) * math.cos(theta) - math.sin(w.phi0) * math.cos(w.theta0)
        return (w.cfg.p_tx / (w.nz * w.ny) * _dirichlet_sq_scalar(du_z, w.nz)
                * _dirichlet_sq_scalar(du_y, w.ny))
    du_z = np.sin(theta) - math.sin(w.theta0)
    du_y = np.sin(phi) * np.cos(theta) - math.sin(w.phi0) * math.cos(w.theta0)
    g = w.cfg.p_tx / (w.nz * w.ny) * _dirichlet_sq(du_z, w.nz) * _dirichlet_sq(du_y, w.ny)
    return float(g) if np.ndim(g) == 0 else g


def beam_gain_explicit(w: BeamDesign, theta, phi) -> float:
    a = steering_vector(theta, phi, w.cfg.nz_max, w.cfg.ny_max)
    return float(abs(np.vdot(a, w.weights)) ** 2)


def hpbw_map(theta, phi) -> np.ndarray:
    """Linear map from angle offsets (d_theta, d_phi) to (theta-dagger, phi-dagger)."""
    ct = math.cos(theta)
    M = np.array([[ct, 0.0], [math.sin(theta) * math.sin(phi), -ct * math.cos(phi)]])
    if abs(ct * ct * math.cos(phi)) < 1e-12:
        raise ValueError("mapping singular")
    return M


def antennas_from_bw(bw_theta_dag: float, bw_phi_dag: float, cfg: ArrayConfig):
    """Antenna counts whose HPBW is at least the requested full widths.

    Returns (nz, ny, clamped).
    """
    if not (bw_theta_dag > 0 and bw_phi_dag > 0):
        raise ValueError("beamwidths must be positive")
    # the small slack keeps exact inverses (bw = 1.78 / n) from flooring down
    rz = math.floor(HPBW_CONST / bw_theta_dag * (1 + 1e-12))
    ry = math.floor(HPBW_CONST / bw_phi_dag * (1 + 1e-12))
    nz = min(max(rz, 1), cfg.nz_max)
    ny = min(max(ry, 1), cfg.ny_max)
    return nz, ny, (nz, ny) != (rz, ry)
