"""Cramér-Rao bounds for monostatic OFDM/UPA sensing of one scatterer.

The closed forms treat the complex reflection amplitude (which absorbs the
transmit beam gain) as a nuisance parameter and eliminate it through the
Schur complement.  :func:`fim_numeric` builds the full 6x6 Fisher matrix
from finite differences of the noiseless echo and serves as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .array import BeamDesign, beam_gain, steering_vector

DELTA_F = 120e3
SLOT = 0.125e-3
N_SYM = 14
N_SUB = 3300


@dataclass(frozen=True)
class SensingDims:
    n_sub: int = N_SUB
    n_sym: int = N_SYM
    delta_f: float = DELTA_F
    t_s: float = SLOT / N_SYM
    nz: int = 8
    ny: int = 8

    def __post_init__(self):
        if self.n_sub < 2 or self.n_sym < 2:
            raise ValueError("n_sub and n_sym must be >= 2")
        if self.nz < 1 or self.ny < 1:
            raise ValueError("receive array dimensions must be >= 1")

    @property
    def n_r(self) -> int:
        return self.nz * self.ny

    @property
    def n_ss(self) -> int:
        return self.n_sub * self.n_sym


@dataclass(frozen=True)
class CrbSet:
    crb_theta: float
    crb_phi: float
    crb_tau: float
    crb_mu: float
    crb_theta_phi: float

    def scaled(self, k: float) -> "CrbSet":
        return CrbSet(self.crb_theta * k, self.crb_phi * k, self.crb_tau * k, self.crb_mu * k,
                      self.crb_theta_phi * k)

    def as_array(self) -> np.ndarray:
        return np.array([self.crb_theta, self.crb_phi, self.crb_tau, self.crb_mu,
                         self.crb_theta_phi])


def _chi(n: int) -> float:
    # sum of squared deviations of 0..n-1 about their mean
    return n * (n * n - 1) / 12.0


def crb_closed_form(r_snr: float, theta: float, phi: float, dims: SensingDims) -> CrbSet:
    if not r_snr > 0:
        raise ValueError("r_snr must be positive")
    ct, sp, cp = math.cos(theta), math.sin(phi), math.cos(phi)
    if abs(ct * cp) < 1e-12:
        raise ValueError("CRB singular at grazing angle")
    tt, tp = math.tan(theta), math.tan(phi)
    k = 2.0 * r_snr * math.pi**2 * dims.n_ss
    qa = _chi(dims.nz) * dims.ny  # elevation aperture term
    qb = _chi(dims.ny) * dims.nz  # azimuth aperture term
    crb_theta = 1.0 / (k * qa * ct * ct)
    crb_phi = 1.0 / (k * qb * ct * ct * cp * cp) + sp * sp * tt * tt / (k * qa * ct * ct * cp * cp)
    crb_tp = tp * tt / (k * qa * ct * ct)
    crb_tau = 3.0 / (2.0 * r_snr * math.pi**2 * dims.delta_f**2 * dims.n_r * dims.n_ss
                     * (dims.n_sub**2 - 1))
    crb_mu = 3.0 / (2.0 * r_snr * math.pi**2 * dims.t_s**2 * dims.n_r * dims.n_ss
                    * (dims.n_sym**2 - 1))
    return CrbSet(crb_theta, crb_phi, crb_tau, crb_mu, crb_tp)


def angular_covariance(crbs: CrbSet) -> np.ndarray:
    s = np.array([[crbs.crb_theta, crbs.crb_theta_phi], [crbs.crb_theta_phi, crbs.crb_phi]])
    if not (s[0, 0] > 0 and s[0, 0] * s[1, 1] - s[0, 1] ** 2 > 0):
        raise ValueError("angular CRB block is not positive definite")
    return s


def echo_mean(xi, w: BeamDesign, dims: SensingDims) -> np.ndarray:
    """Noiseless echo, flattened as (antenna, symbol, subcarrier).

    ``xi = (theta, phi, tau, mu, beta_re, beta_im)``.
    """
    theta, phi, tau, mu, bre, bim = xi
    g = math.sqrt(beam_gain(w, theta, phi))
    b = steering_vector(theta, phi, dims.nz, dims.ny)
    omega = np.exp(2j * np.pi * mu * dims.t_s * np.arange(dims.n_sym))
    eta = np.exp(-2j * np.pi * dims.delta_f * tau * np.arange(dims.n_sub))
    return complex(bre, bim) * g * np.kron(b, np.kron(omega, eta))


def fd_steps(dims: SensingDims) -> np.ndarray:
    return np.array([1e-6, 1e-6, 1e-3 / (dims.n_sub * dims.delta_f),
                     1e-3 / (dims.n_sym * dims.t_s), 1e-6, 1e-6])


def fim_numeric(params, w: BeamDesign, dims: SensingDims, sigma_r2: float) -> np.ndarray:
    """Fisher matrix (2 / sigma^2) Re{D^H D}, D by central differences."""
    if dims.n_r * dims.n_ss > 2_000_000:
        raise ValueError("dims too large for the numeric oracle")
    xi = np.asarray(params, dtype=float)
    steps = fd_steps(dims)
    if np.any(steps < 1e-300):
        raise ValueError("finite-difference step underflow")
    cols = []
    for i, h in enumerate(steps):
        hi = h * max(1.0, abs(xi[i])) if i >= 4 else h
        xp, xm = xi.copy(), xi.copy()
        xp[i] += hi
        xm[i] -= hi
        cols.append((echo_mean(xp, w, dims) - echo_mean(xm, w, dims)) / (2 * hi))
    D = np.column_stack(cols)
    J = (2.0 / sigma_r2) * np.real(D.conj().T @ D)
    return 0.5 * (J + J.T)


def _scaled_inverse(J):
    s = np.sqrt(np.abs(np.diag(J)))
    if np.any(s == 0):
        raise ValueError("unidentifiable parameters")
    Jn = J / np.outer(s, s)
    if np.linalg.cond(Jn) > 1e14:
        raise ValueError("unidentifiable parameters")
    return np.linalg.inv(Jn) / np.outer(s, s)


def schur_complement(J, n_keep: int = 4) -> np.ndarray:
    """Fisher information of the first ``n_keep`` parameters, nuisance removed."""
    a = J[:n_keep, :n_keep]
    b = J[:n_keep, n_keep:]
    c = J[n_keep:, n_keep:]
    return a - b @ np.linalg.solve(c, b.T)


def crb_from_fim(fim) -> CrbSet:
    J = np.asarray(fim, dtype=float)
    inv = _scaled_inverse(J)
    return CrbSet(inv[0, 0], inv[1, 1], inv[2, 2], inv[3, 3], inv[0, 1])
