"""Link budget: path loss, reflection amplitude, rate and echo SNR."""

from __future__ import annotations

import math

import numpy as np

from .array import BeamDesign, beam_gain

C = 3e8  # m/s; rounded so that c / (2 * 400 MHz) is exactly 0.375 m
IOTA = 0.95


def dbm_to_watts(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(p_w):
    return 10.0 * np.log10(np.asarray(p_w, dtype=float)) + 30.0


def wavelength(fc_hz: float) -> float:
    return C / fc_hz


def path_loss(d, lam: float, iota: float = IOTA):
    """Amplitude path loss lambda / (4 pi d^iota)."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = lam / (4.0 * np.pi * d**iota)
    return float(out) if out.ndim == 0 else out


def reflection_coeff(d, rcs: float = 1.0, g_t: float = 1.0, g_r: float = 1.0, lam: float = 0.01):
    """Magnitude of the round-trip reflection amplitude of one scatterer."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0) or rcs <= 0 or g_t <= 0 or g_r <= 0 or lam <= 0:
        raise ValueError("reflection inputs must be positive")
    out = lam * math.sqrt(g_t * g_r * rcs) / ((4.0 * np.pi) ** 1.5 * d * d)
    return float(out) if out.ndim == 0 else out


def rate_from_gain(alpha, gain, sigma_c2: float):
    return np.log2(1.0 + np.asarray(alpha) ** 2 * np.asarray(gain) / sigma_c2)


def achievable_rate(alpha, theta, phi, w: BeamDesign, sigma_c2: float):
    """log2(1 + alpha^2 |a^H w|^2 / sigma_c2) in bits/s/Hz."""
    if sigma_c2 <= 0:
        raise ValueError("noise power must be positive")
    r = rate_from_gain(alpha, beam_gain(w, theta, phi), sigma_c2)
    return float(r) if np.ndim(r) == 0 else r


def echo_snr(beta_abs, theta, phi, w: BeamDesign, sigma_r2: float):
    """|beta|^2 |a^H w|^2 / sigma_r2."""
    if sigma_r2 <= 0:
        raise ValueError("noise power must be positive")
    r = np.asarray(beta_abs) ** 2 * beam_gain(w, theta, phi) / sigma_r2
    return float(r) if np.ndim(r) == 0 else r
