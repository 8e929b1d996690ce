"""EKF over the CR polar state (theta, phi, d, v).

The transition is the polar evolution model; the measurement is the CR
state itself (already converted from a scatterer measurement), so H = I and
R is the diagonal of the propagated CR variances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measure import CrMeasurement
from .scenario import PolarState, evolve_array

DEG2 = (math.pi / 180.0) ** 2


def process_noise_from_table(var_theta_deg2=0.02, var_phi_deg2=0.02, var_d=0.2, var_v=0.25):
    """Per-slot process noise with angle variances given in degrees squared."""
    return np.diag([var_theta_deg2 * DEG2, var_phi_deg2 * DEG2, var_d, var_v])


@dataclass(frozen=True)
class TrackState:
    mean: np.ndarray
    cov: np.ndarray
    process_noise: np.ndarray

    @property
    def state(self) -> PolarState:
        return PolarState.from_array(self.mean)


def _sym_psd(P):
    P = 0.5 * (P + P.T)
    lam = np.linalg.eigvalsh(P)
    if lam[0] < 0:
        if lam[0] < -1e-12 * max(1.0, lam[-1]):
            w, v = np.linalg.eigh(P)
            P = (v * np.maximum(w, 0.0)) @ v.T
            P = 0.5 * (P + P.T)
    return P


def evolution_jacobian(s, dt: float) -> np.ndarray:
    """Partial derivatives of the noiseless evolution map, state order (theta, phi, d, v)."""
    if isinstance(s, PolarState):
        s = s.as_array()
    th, ph, d, v = s
    ct = math.cos(th)
    if abs(ct) < 1e-12 or d <= 0:
        raise ValueError("singular elevation or non-positive range")
    st, sp, cp = math.sin(th), math.sin(ph), math.cos(ph)
    vdt = v * dt
    return np.array([
        [1 - vdt * sp * ct / d, -vdt * cp * st / d, vdt * sp * st / d**2, -dt * sp * st / d],
        [vdt * cp * st / (d * ct * ct), 1 - vdt * sp / (d * ct), -vdt * cp / (d * d * ct),
         dt * cp / (d * ct)],
        [-vdt * st * sp, vdt * ct * cp, 1.0, dt * ct * sp],
        [0.0, 0.0, 0.0, 1.0],
    ])


def ekf_predict(t: TrackState, dt: float) -> TrackState:
    F = evolution_jacobian(t.mean, dt)
    mean = evolve_array(t.mean, dt)
    cov = F @ t.cov @ F.T + t.process_noise
    return TrackState(mean, 0.5 * (cov + cov.T), t.process_noise)


def ekf_update(t: TrackState, z: CrMeasurement) -> TrackState:
    """Kalman update with H = I and Joseph-form covariance."""
    R = np.diag(np.asarray(z.variances, dtype=float))
    if np.any(np.diag(R) <= 0) or not np.all(np.isfinite(np.diag(R))):
        raise ValueError("measurement variances must be positive and finite")
    P = t.cov
    S = P + R
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise ValueError("innovation covariance not positive definite") from exc
    # K = P S^-1 via the Cholesky factor
    K = np.linalg.solve(L.T, np.linalg.solve(L, P.T)).T
    innov = z.values - t.mean
    mean = t.mean + K @ innov
    IK = np.eye(4) - K
    cov = IK @ P @ IK.T + K @ R @ K.T
    return TrackState(mean, _sym_psd(cov), t.process_noise)


def nees(t: TrackState, truth) -> float:
    e = np.asarray(truth, dtype=float) - t.mean
    return float(e @ np.linalg.solve(t.cov, e))
