"""Scatterer measurements and their conversion to CR state space.

Two paths produce scatterer measurements.  The default draws Gaussian errors
with CRB variances.  The signal-level path synthesises an echo cube and runs
2D-FFT range-Doppler processing plus a spatial ML angle search; it is meant
for validation at reduced dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .array import BeamDesign, beam_gain, steering_vector
from .channel import C
from .crb import CrbSet, SensingDims


@dataclass(frozen=True)
class ScattererMeasurement:
    theta_hat: float
    phi_hat: float
    tau_hat: float
    mu_hat: float
    sigma_ang: np.ndarray
    crb_tau: float
    crb_mu: float

    @property
    def d_hat(self) -> float:
        return C * self.tau_hat / 2.0


@dataclass(frozen=True)
class CrMeasurement:
    theta_cr: float
    phi_cr: float
    d_cr: float
    v_cr: float
    variances: tuple[float, float, float, float]

    @property
    def values(self) -> np.ndarray:
        return np.array([self.theta_cr, self.phi_cr, self.d_cr, self.v_cr])


def doppler_of(theta, phi, v, lam):
    """Doppler shift of a target moving at speed v along +y."""
    return -2.0 * v * np.sin(phi) * np.cos(theta) / lam


def synth_measurement(theta, phi, d, v, crbs: CrbSet, rng, lam: float) -> ScattererMeasurement:
    """Gaussian measurement of one scatterer with CRB covariance.

    Angles are drawn jointly with the cross term; delay and Doppler are
    independent of them.
    """
    st, sp, sx = crbs.crb_theta, crbs.crb_phi, crbs.crb_theta_phi
    z = rng.standard_normal(4)
    # 2x2 Cholesky by hand; this sits in the per-slot loop
    l11 = math.sqrt(st) if st > 0 else 0.0
    l21 = sx / l11 if l11 > 0 else 0.0
    l22 = math.sqrt(max(sp - l21 * l21, 0.0))
    sigma = np.array([[st, sx], [sx, sp]])
    return ScattererMeasurement(
        theta + l11 * z[0],
        phi + l21 * z[0] + l22 * z[1],
        2.0 * d / C + math.sqrt(crbs.crb_tau) * z[2],
        float(doppler_of(theta, phi, v, lam)) + math.sqrt(crbs.crb_mu) * z[3],
        sigma, crbs.crb_tau, crbs.crb_mu,
    )


# ---------------------------------------------------------------------------
# signal-level path


@dataclass(frozen=True)
class EchoSource:
    theta: float
    phi: float
    tau: float
    mu: float
    beta: complex


def synth_echo_grid(scatterers, w: BeamDesign, dims: SensingDims, rng=None,
                    sigma_r2: float = 0.0) -> np.ndarray:
    """Echo cube (n_r, n_sub, n_sym) after removal of unit data symbols."""
    n = np.arange(dims.n_sub)
    ell = np.arange(dims.n_sym)
    cube = np.zeros((dims.n_r, dims.n_sub, dims.n_sym), dtype=complex)
    for s in scatterers:
        g = math.sqrt(beam_gain(w, s.theta, s.phi))
        b = steering_vector(s.theta, s.phi, dims.nz, dims.ny)
        eta = np.exp(-2j * np.pi * dims.delta_f * s.tau * n)
        omega = np.exp(2j * np.pi * s.mu * dims.t_s * ell)
        cube += (s.beta * g) * b[:, None, None] * np.outer(eta, omega)[None, :, :]
    if sigma_r2 > 0:
        if rng is None:
            raise ValueError("rng required for a noisy cube")
        cube += math.sqrt(sigma_r2 / 2) * (rng.standard_normal(cube.shape)
                                           + 1j * rng.standard_normal(cube.shape))
    return cube


def range_doppler_transform(cube) -> np.ndarray:
    """Per-antenna IFFT over subcarriers and FFT over symbols."""
    return np.fft.fft(np.fft.ifft(cube, axis=1), axis=2)


def range_doppler_map(cube) -> np.ndarray:
    """Non-coherent (over antennas) power map, shape (n_sub, n_sym)."""
    rd = range_doppler_transform(cube)
    return np.sum(np.abs(rd) ** 2, axis=0)


def _parabolic(ym, y0, yp):
    den = ym - 2 * y0 + yp
    return 0.0 if den == 0 else 0.5 * (ym - yp) / den


def find_peaks(power, n_peaks: int, threshold_db: float = 13.0, guard: int = 1):
    """Largest local peaks, each at least ``threshold_db`` over the median level.

    Accepted peaks suppress a ``guard``-bin neighbourhood (wrapping in both
    axes).  Returns integer (s, t) bins.
    """
    p = np.asarray(power, dtype=float)
    floor = np.median(p)
    thr = max(floor * 10 ** (threshold_db / 10), p.max() * 1e-12)
    work = p.copy()
    ns, nt = p.shape
    found = []
    while len(found) < n_peaks:
        idx = int(np.argmax(work))
        s, t = divmod(idx, nt)
        if not work[s, t] > thr:
            break
        found.append((s, t))
        for a in range(-guard, guard + 1):
            for b in range(-guard, guard + 1):
                work[(s + a) % ns, (t + b) % nt] = -np.inf
    if len(found) < n_peaks:
        raise ValueError(f"found {len(found)} peaks above threshold, {n_peaks} requested")
    return found


def refine_bin(power, s, t):
    """Sub-bin (s, t) by separable parabolic interpolation of the log-power."""
    ns, nt = power.shape
    floor = 1e-12 * power[s, t]

    def offset(ym, y0, yp):
        # an exactly on-bin source leaves numerically empty neighbours
        if max(ym, yp) <= floor:
            return 0.0
        return _parabolic(math.log(max(ym, floor)), math.log(y0), math.log(max(yp, floor)))

    ds = offset(power[(s - 1) % ns, t], power[s, t], power[(s + 1) % ns, t])
    dt = offset(power[s, (t - 1) % nt], power[s, t], power[s, (t + 1) % nt])
    return s + ds, t + dt


def range_doppler_estimate(cube, dims: SensingDims, fc: float, n_targets: int = 1,
                           refine: bool = True, threshold_db: float = 13.0):
    """Distance and range rate of the ``n_targets`` strongest scatterers.

    Range rate is positive when receding (Doppler is -2 * rate / lambda).
    """
    power = range_doppler_map(cube)
    out = []
    for s, t in find_peaks(power, n_targets, threshold_db):
        sf, tf = refine_bin(power, s, t) if refine else (float(s), float(t))
        if tf > dims.n_sym / 2:
            tf -= dims.n_sym
        d = sf * C / (2 * dims.n_sub * dims.delta_f)
        v = -tf * C / (2 * fc * dims.n_sym * dims.t_s)
        out.append((d, v))
    return out


def estimate_angles(snapshot, nz: int, ny: int, pad: int = 64):
    """ML (theta, phi) from one spatial snapshot of a single source.

    Coarse search by zero-padded 2-D FFT, then a local maximisation of
    |b^H x| over direction cosines.
    """
    x = np.asarray(snapshot).reshape(nz, ny)
    P = max(pad, 4 * max(nz, ny))
    F = np.abs(np.fft.fft2(x, s=(P, P)))
    p, q = np.unravel_index(int(np.argmax(F)), F.shape)
    uz0 = -2.0 * p / P
    uy0 = 2.0 * q / P
    uz0 = (uz0 + 1) % 2 - 1
    uy0 = (uy0 + 1) % 2 - 1
    m = np.arange(nz)[:, None]
    k = np.arange(ny)[None, :]

    def neg(u):
        return -abs(np.sum(x * np.exp(1j * np.pi * (m * u[0] - k * u[1])))) ** 2

    res = minimize(neg, [uz0, uy0], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14 * abs(neg([uz0, uy0])), "maxiter": 2000})
    uz, uy = np.clip(res.x, -1.0, 1.0)
    theta = math.asin(uz)
    phi = math.asin(max(-1.0, min(1.0, uy / math.cos(theta))))
    return theta, phi


def estimate_from_cube(cube, dims: SensingDims, fc: float, threshold_db: float = 13.0):
    """(theta, phi, d, range_rate) of the strongest scatterer in the cube."""
    rd = range_doppler_transform(cube)
    power = np.sum(np.abs(rd) ** 2, axis=0)
    (s, t), = find_peaks(power, 1, threshold_db)
    theta, phi = estimate_angles(rd[:, s, t], dims.nz, dims.ny)
    sf, tf = refine_bin(power, s, t)
    if tf > dims.n_sym / 2:
        tf -= dims.n_sym
    return (theta, phi, sf * C / (2 * dims.n_sub * dims.delta_f),
            -tf * C / (2 * fc * dims.n_sym * dims.t_s))


# ---------------------------------------------------------------------------
# conversion to CR state space


def cr_geometry(theta, phi, d, dx, dy, h):
    """CR (theta, phi, d) from a scatterer at (theta, phi, d) and offsets CR - scatterer."""
    ct = math.cos(theta)
    x = d * ct * math.cos(phi) + dx
    y = d * ct * math.sin(phi) + dy
    rho = math.hypot(x, y)
    return -math.atan(h / rho), math.atan2(y, x), math.sqrt(rho * rho + h * h)


def cr_jacobian(theta, phi, d, dx, dy, h) -> np.ndarray:
    """Rows G^theta, G^phi, G^d: partials of :func:`cr_geometry` w.r.t. (theta, phi, d)."""
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(phi), math.sin(phi)
    x = d * ct * cp + dx
    y = d * ct * sp + dy
    r2 = x * x + y * y
    rho = math.sqrt(r2)
    dcr = math.sqrt(r2 + h * h)
    # partials of (x, y) w.r.t. (theta, phi, d)
    gx = (-d * st * cp, -d * ct * sp, ct * cp)
    gy = (-d * st * sp, d * ct * cp, ct * sp)
    c_rho = h / (rho * (r2 + h * h))  # d theta_cr / d rho, divided by rho
    G = np.empty((3, 3))
    for j in range(3):
        G[0, j] = c_rho * (x * gx[j] + y * gy[j])
        G[1, j] = (x * gy[j] - y * gx[j]) / r2
        G[2, j] = (x * gx[j] + y * gy[j]) / dcr
    return G


def velocity_from_doppler(theta, phi, mu, lam):
    den = math.sin(phi) * math.cos(theta)
    if abs(den) < 1e-12:
        raise ValueError("velocity conversion singular")
    return -lam * mu / (2.0 * den)


def velocity_jacobian(theta, phi, mu, lam) -> np.ndarray:
    """G^v: partials of the speed w.r.t. (theta, phi, mu)."""
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(phi), math.sin(phi)
    if abs(sp * ct) < 1e-12:
        raise ValueError("velocity conversion singular")
    return np.array([
        -lam * mu * st / (2.0 * sp * ct * ct),
        lam * mu * cp / (2.0 * sp * sp * ct),
        -lam / (2.0 * sp * ct),
    ])


def cr_from_scatterer(m: ScattererMeasurement, dx: float, dy: float, h_eff: float,
                      lam: float) -> CrMeasurement:
    """Convert a scatterer measurement into a CR measurement.

    ``dx, dy`` are CR minus scatterer in the ground plane.  Variances follow
    first-order propagation of the angular covariance, the range variance
    c^2 CRB_tau / 4 and CRB_mu.
    """
    th, ph, d = m.theta_hat, m.phi_hat, m.d_hat
    tcr, pcr, dcr = cr_geometry(th, ph, d, dx, dy, h_eff)
    v = velocity_from_doppler(th, ph, m.mu_hat, lam)
    G = cr_jacobian(th, ph, d, dx, dy, h_eff)
    sc = np.zeros((3, 3))
    sc[:2, :2] = m.sigma_ang
    sc[2, 2] = C * C * m.crb_tau / 4.0
    var_c = np.einsum("ij,jk,ik->i", G, sc, G)
    gv = velocity_jacobian(th, ph, m.mu_hat, lam)
    sv = np.zeros((3, 3))
    sv[:2, :2] = m.sigma_ang
    sv[2, 2] = m.crb_mu
    var_v = float(gv @ sv @ gv)
    return CrMeasurement(tcr, pcr, dcr, v, (float(var_c[0]), float(var_c[1]), float(var_c[2]), var_v))
