"""Beam management schemes and baselines, simulated slot by slot.

Every scheme fills a :class:`Trace` of per-slot records.  Ground truth is
precomputed for the whole run; schemes see it only through sensing (CRB
distributed measurements of scatterers) and through the CR feedback that
reports true angles each feedback period.

Schemes
    ibe     wide first beam, then beams covering the union of the scatterer
            error ellipses until the beam stops shrinking
    aba     prediction with a full-array beam; EKF sensing of the nearest
            scatterer whenever the fed-back angular error exceeds gamma_r1
    rb      aba with sensing in every slot
    db      every slot, cover all predicted scatterer positions
    point   EKF on one random scatterer treated as the CR
    sweep   SSB-style codebook re-selected every sweep period
    omni    single-element beam every slot
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .array import ArrayConfig, BeamDesign, antennas_from_bw, beam_gain, beam_weights, hpbw_map
from .channel import path_loss, reflection_coeff
from .crb import crb_closed_form
from .ellipse import Ellipse, aligned_semi_axes, axis_aligned_mee, discretize, error_ellipse
from .measure import (CrMeasurement, cr_from_scatterer, synth_measurement,
                      velocity_from_doppler)
from .scenario import WorldState, cartesian_to_polar_many, evolve_array, truth_at_slots
from .track import TrackState, ekf_predict, ekf_update

if TYPE_CHECKING:
    from .config import SystemConfig

SCHEMES = ("aba", "rb", "db", "point", "sweep", "omni")
EVENTS = ("predict", "sense", "sweep", "feedback")
_EVENT_CODE = {e: i for i, e in enumerate(EVENTS)}
HUGE_VAR = 1e12


class SchemeError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# beam design


@dataclass(frozen=True)
class CoverResult:
    beam: BeamDesign
    area: float
    mapped: Ellipse
    center: tuple[float, float]


def cover_points(points, cfg: ArrayConfig, center=None) -> CoverResult:
    """Narrowest beam whose mapped HPBW ellipse contains all (theta, phi) points."""
    pts = np.asarray(points, dtype=float)
    c = pts.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    M = hpbw_map(c[0], c[1])
    mapped = (pts - c) @ M.T
    e = axis_aligned_mee(mapped)
    a_th, b_ph = aligned_semi_axes(e)
    nz, ny, clamped = antennas_from_bw(2.0 * a_th, 2.0 * b_ph, cfg)
    pointing = c + np.linalg.solve(M, np.asarray(e.center))
    beam = BeamDesign(float(pointing[0]), float(pointing[1]), nz, ny, cfg, clamped)
    return CoverResult(beam, e.area, e, (float(c[0]), float(c[1])))


def design_beam_covering(targets, cfg: ArrayConfig, p_num: int = 200,
                         pointing_hint=None) -> CoverResult:
    """Cover a list of (theta, phi) ellipses with one sub-array beam.

    ``pointing_hint`` overrides the point where the HPBW map is linearised
    (default: the centroid of the discretised boundaries).
    """
    if not targets:
        raise ValueError("need at least one ellipse")
    pts = np.vstack([discretize(e, p_num) for e in targets])
    return cover_points(pts, cfg, pointing_hint)


def nearest_scatterer(cr, scatterers) -> int:
    """Index of the scatterer closest to ``cr`` in (theta, phi); ties go low."""
    s = np.asarray(scatterers, dtype=float).reshape(-1, 2)
    if s.shape[0] == 0:
        raise ValueError("empty scatterer list")
    d2 = (s[:, 0] - cr[0]) ** 2 + (s[:, 1] - cr[1]) ** 2
    return int(np.argmin(d2))


# ---------------------------------------------------------------------------
# traces


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    t: float
    event: str
    nz: int
    ny: int
    theta0: float
    phi0: float
    rate: float
    truth: tuple
    estimate: tuple
    mee_area: float | None
    mee_calls: int
    ekf_calls: int


@dataclass
class Trace:
    scheme: str
    n_slots: int
    dt: float
    truth: np.ndarray  # (n, 4) theta, phi, d, v
    est: np.ndarray = None
    beam: np.ndarray = None  # (n, 4) theta0, phi0, nz, ny
    rate: np.ndarray = None
    event: np.ndarray = None
    mee_area: np.ndarray = None
    mee_calls: np.ndarray = None  # cumulative
    ekf_calls: np.ndarray = None  # cumulative
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.n_slots
        self.est = np.full((n, 4), np.nan)
        self.beam = np.zeros((n, 4))
        self.rate = np.zeros(n)
        self.event = np.zeros(n, dtype=np.int8)
        self.mee_area = np.full(n, np.nan)
        self.mee_calls = np.zeros(n, dtype=np.int64)
        self.ekf_calls = np.zeros(n, dtype=np.int64)

    def events(self) -> np.ndarray:
        return np.array(EVENTS)[self.event]

    def count(self, event: str) -> int:
        return int(np.sum(self.event == _EVENT_CODE[event]))

    def record(self, n: int) -> SlotRecord:
        area = self.mee_area[n]
        return SlotRecord(n, n * self.dt, EVENTS[self.event[n]], int(self.beam[n, 2]),
                          int(self.beam[n, 3]), self.beam[n, 0], self.beam[n, 1],
                          self.rate[n], tuple(self.truth[n]), tuple(self.est[n]),
                          None if np.isnan(area) else float(area), int(self.mee_calls[n]),
                          int(self.ekf_calls[n]))

    def records(self):
        for n in range(self.n_slots):
            yield self.record(n)


# ---------------------------------------------------------------------------
# simulation context


@dataclass(frozen=True)
class IbeResult:
    n_slots: int
    offsets: np.ndarray  # (K, 2) CR minus scatterer, ground plane
    areas: list
    beam: BeamDesign
    track: TrackState
    scatterer_states: np.ndarray  # (K, 4) last estimates
    measurements: tuple  # last measurement of each scatterer


class _Sim:
    """Precomputed truth, RNG streams and bookkeeping shared by all schemes."""

    def __init__(self, cfg: "SystemConfig", seed: int, world: WorldState | None = None,
                 scheme: str = ""):
        self.cfg = cfg
        self.world = cfg.world() if world is None else world
        self.acfg = cfg.array
        self.dims = cfg.dims
        self.dt = cfg.sensing.slot
        self.n = cfg.run.n_slots
        self.lam = cfg.channel.wavelength
        self.h = self.world.h_eff
        self.q = cfg.sensing.process_noise
        self.sigma_c2 = cfg.channel.noise_comm_w
        self.sigma_r2 = cfg.channel.noise_radar_w
        self.p_num = cfg.sensing.p_num
        self.conf = cfg.sensing.confidence
        self.detect = 10 ** (cfg.sensing.detect_threshold_db / 10) / (self.dims.n_r * self.dims.n_ss)
        ss = np.random.SeedSequence(seed)
        self.rng_meas, self.rng_evo, self.rng_sweep, self.rng_point = (
            np.random.default_rng(s) for s in ss.spawn(4))

        bs = self.world.bs_position
        pos, vel = truth_at_slots(self.world, self.dt, self.n)
        self.cr = np.column_stack((cartesian_to_polar_many(pos, bs), vel))
        self.cr_ground = pos[:, :2] - bs[:2]
        off = self.world.scatterer_offsets
        spos = np.repeat(pos[:, None, :], off.shape[0], axis=1)
        spos[:, :, :2] += off[None, :, :]
        self.scat = cartesian_to_polar_many(spos, bs)  # (n, K, 3)
        self.k = off.shape[0]
        ch = cfg.channel
        self.alpha2 = path_loss(self.cr[:, 2], self.lam, ch.iota) ** 2
        self.beta2 = reflection_coeff(self.scat[:, :, 2], ch.rcs_m2, ch.g_t, ch.g_r, self.lam) ** 2
        self.trace = Trace(scheme, self.n, self.dt, self.cr.copy())
        self.mee_calls = 0
        self.ekf_calls = 0

    # -- physics ----------------------------------------------------------
    def rate(self, n: int, beam: BeamDesign) -> float:
        g = beam_gain(beam, self.cr[n, 0], self.cr[n, 1])
        return math.log2(1.0 + self.alpha2[n] * g / self.sigma_c2)

    def sense(self, n: int, k: int, beam: BeamDesign):
        """Measurement of scatterer k in slot n, or None when below threshold."""
        th, ph, d = self.scat[n, k]
        r = self.beta2[n, k] * beam_gain(beam, th, ph) / self.sigma_r2
        if r < self.detect:
            return None
        crbs = crb_closed_form(r, th, ph, self.dims)
        return synth_measurement(th, ph, d, self.cr[n, 3], crbs, self.rng_meas, self.lam)

    def speed_from(self, m) -> float:
        try:
            return velocity_from_doppler(m.theta_hat, m.phi_hat, m.mu_hat, self.lam)
        except ValueError:
            return 0.0

    def cr_measurement(self, m, dx: float, dy: float, fallback_v: float) -> CrMeasurement:
        try:
            return cr_from_scatterer(m, dx, dy, self.h, self.lam)
        except ValueError:
            # Doppler carries no speed information broadside; keep position only
            z = cr_from_scatterer(
                type(m)(m.theta_hat, m.phi_hat + 1e-6, m.tau_hat, 0.0, m.sigma_ang, m.crb_tau,
                        m.crb_mu), dx, dy, self.h, self.lam)
            return CrMeasurement(z.theta_cr, z.phi_cr, z.d_cr, fallback_v,
                                 z.variances[:3] + (HUGE_VAR,))

    # -- bookkeeping ------------------------------------------------------
    def full_beam(self, theta, phi) -> BeamDesign:
        return BeamDesign(float(theta), float(phi), self.acfg.nz_max, self.acfg.ny_max, self.acfg)

    def log(self, n, event, beam, est=None, area=None):
        tr = self.trace
        tr.event[n] = _EVENT_CODE[event]
        tr.beam[n] = (beam.theta0, beam.phi0, beam.nz, beam.ny)
        tr.rate[n] = self.rate(n, beam)
        if est is not None:
            tr.est[n] = est
        if area is not None:
            tr.mee_area[n] = area
        tr.mee_calls[n] = self.mee_calls
        tr.ekf_calls[n] = self.ekf_calls

    def cover(self, targets) -> CoverResult:
        self.mee_calls += 1
        return design_beam_covering(targets, self.acfg, self.p_num)

    def scatterer_angles_from_cr(self, mean, offsets) -> np.ndarray:
        """(K, 3) predicted scatterer (theta, phi, d) from a CR estimate."""
        th, ph, d = mean[0], mean[1], mean[2]
        rho = d * math.cos(th)
        x = rho * math.cos(ph) - offsets[:, 0]
        y = rho * math.sin(ph) - offsets[:, 1]
        r = np.hypot(x, y)
        return np.column_stack((-np.arctan(self.h / r), np.arctan2(y, x), np.hypot(r, self.h)))

    def scatterer_state(self, m) -> np.ndarray:
        return np.array([m.theta_hat, m.phi_hat, m.d_hat, self.speed_from(m)])


# ---------------------------------------------------------------------------
# ISAC-IBE


def _run_ibe(sim: _Sim) -> IbeResult:
    sp = sim.cfg.schemes
    beam = beam_weights(0.0, 0.0, 1, 1, sim.acfg)
    latest: dict[int, object] = {}
    areas: list[float] = []
    n = 0
    while True:
        if n >= min(sp.ibe_max_slots, sim.n):
            raise SchemeError(f"IBE did not converge within {n} slots")
        meas = [sim.sense(n, k, beam) for k in range(sim.k)]
        ellipses = []
        for k, m in enumerate(meas):
            if m is None:
                continue
            latest[k] = m
            # temporally assisted: place each ellipse where the scatterer will be next slot
            nxt = evolve_array(sim.scatterer_state(m), sim.dt)
            ellipses.append(error_ellipse(m.sigma_ang, sim.conf, (nxt[0], nxt[1])))
        area = None
        if ellipses:
            cov = sim.cover(ellipses)
            area = cov.area
            areas.append(area)
        sim.log(n, "sense", beam, area=area)
        if ellipses:
            new_beam = cov.beam
            # the beam just used and the next one are both the full array
            saturated = (new_beam.nz == beam.nz == sim.acfg.nz_max
                         and new_beam.ny == beam.ny == sim.acfg.ny_max)
            settled = len(areas) >= 2 and abs(areas[-1] - areas[-2]) < sp.ibe_convergence_tol * areas[-2]
            if len(latest) == sim.k and (saturated or settled):
                break
            beam = new_beam
        n += 1

    # uplink feedback of the CR position registers the CR-to-scatterer offsets
    states = np.array([sim.scatterer_state(latest[k]) for k in range(sim.k)])
    ground = np.column_stack((states[:, 2] * np.cos(states[:, 0]) * np.cos(states[:, 1]),
                              states[:, 2] * np.cos(states[:, 0]) * np.sin(states[:, 1])))
    offsets = sim.cr_ground[n] - ground
    j = nearest_scatterer(sim.cr[n, :2], states[:, :2])
    z = sim.cr_measurement(latest[j], offsets[j, 0], offsets[j, 1], 0.0)
    track = TrackState(z.values, np.diag(z.variances), sim.q)
    sim.trace.est[n] = track.mean
    sim.trace.meta["ibe_slots"] = n + 1
    sim.trace.meta["ibe_areas"] = list(areas)
    return IbeResult(n + 1, offsets, areas, cov.beam, track, states,
                     tuple(latest[k] for k in range(sim.k)))


def run_ibe(world: WorldState, cfg: "SystemConfig", seed: int = 0):
    """IBE alone: (trace, offsets, convergence slot count)."""
    sim = _Sim(cfg, seed, world, "ibe")
    res = _run_ibe(sim)
    return sim.trace, res.offsets, res.n_slots


# ---------------------------------------------------------------------------
# ISAC-ABA and ISAC-RB


def _run_tracking(sim: _Sim, ibe: IbeResult, always_sense: bool):
    sp = sim.cfg.schemes
    track = ibe.track
    offsets = ibe.offsets
    sensing = always_sense
    n0 = ibe.n_slots
    bad = 0
    diverged = False
    episodes = 0
    for n in range(n0, sim.n):
        track = ekf_predict(track, sim.dt)
        mean = track.mean
        if not sensing:
            beam = sim.full_beam(mean[0], mean[1])
            sim.log(n, "predict", beam, est=mean)
        else:
            scat = sim.scatterer_angles_from_cr(mean, offsets)
            j = nearest_scatterer(mean[:2], scat[:, :2])
            radius = sim.cfg.sensing.delta_r / scat[j, 2]
            targets = [error_ellipse(track.cov[:2, :2], sim.conf, (mean[0], mean[1])),
                       Ellipse((scat[j, 0], scat[j, 1]), radius, radius)]
            cov = sim.cover(targets)
            beam = cov.beam
            m = sim.sense(n, j, beam)
            if m is not None:
                z = sim.cr_measurement(m, offsets[j, 0], offsets[j, 1], mean[3])
                track = ekf_update(track, z)
                sim.ekf_calls += 1
            sim.log(n, "sense", beam, est=track.mean, area=cov.area)
        if (n - n0) % sp.feedback_period == 0:
            err = math.hypot(track.mean[0] - sim.cr[n, 0], track.mean[1] - sim.cr[n, 1])
            if not always_sense:
                if not sensing and err > sp.gamma_r1:
                    sensing = True
                    episodes += 1
                elif sensing and err < sp.gamma_r2:
                    sensing = False
            if sensing and err > sp.divergence_factor * sp.gamma_r1:
                bad += 1
                diverged |= bad >= sp.divergence_slots
            else:
                bad = 0
    sim.trace.meta["sense_episodes"] = episodes
    sim.trace.meta["diverged"] = diverged


# ---------------------------------------------------------------------------
# baselines


def _run_db(sim: _Sim, ibe: IbeResult):
    states = ibe.scatterer_states.copy()
    for n in range(ibe.n_slots, sim.n):
        pred = np.array([evolve_array(s, sim.dt) for s in states])
        sim.mee_calls += 1
        cov = cover_points(pred[:, :2], sim.acfg)
        beam = cov.beam
        for k in range(sim.k):
            m = sim.sense(n, k, beam)
            states[k] = sim.scatterer_state(m) if m is not None else pred[k]
        sim.log(n, "sense", beam, est=states.mean(axis=0), area=cov.area)


def _run_point(sim: _Sim, ibe: IbeResult):
    j = int(sim.rng_point.integers(sim.k))
    sim.trace.meta["point_scatterer"] = j
    z = sim.cr_measurement(ibe.measurements[j], 0.0, 0.0, 0.0)
    track = TrackState(z.values, np.diag(z.variances), sim.q)
    for n in range(ibe.n_slots, sim.n):
        track = ekf_predict(track, sim.dt)
        beam = sim.full_beam(track.mean[0], track.mean[1])
        m = sim.sense(n, j, beam)
        if m is not None:
            z = sim.cr_measurement(m, 0.0, 0.0, track.mean[3])
            track = ekf_update(track, z)
            sim.ekf_calls += 1
        sim.log(n, "sense", beam, est=track.mean)


def sweep_codebook(sim: _Sim) -> np.ndarray:
    """(size, 2) beam directions on a uniform azimuth grid at a fixed elevation."""
    sp = sim.cfg.schemes
    ground = np.hypot(sim.cr_ground[:, 0], sim.cr_ground[:, 1])
    theta = -math.atan(sim.h / float(np.mean(ground)))
    lo = float(np.min(sim.cr[:, 1])) - sp.sweep_margin
    hi = float(np.max(sim.cr[:, 1])) + sp.sweep_margin
    phis = np.linspace(lo, hi, sp.sweep_codebook_size)
    return np.column_stack((np.full_like(phis, theta), phis))


def _run_sweep(sim: _Sim):
    sp = sim.cfg.schemes
    book = sweep_codebook(sim)
    beams = [sim.full_beam(t, p) for t, p in book]
    best = 0
    sweeps = 0
    for n in range(sim.n):
        if n % sp.sweep_period == 0:
            if n == 0:
                cand = range(len(beams))
            else:
                lo = min(max(best - sp.sweep_subset_size // 2 + 1, 0), len(beams) - sp.sweep_subset_size)
                cand = range(max(lo, 0), min(max(lo, 0) + sp.sweep_subset_size, len(beams)))
            # the CR reports the beam with the largest received power
            powers = [beam_gain(beams[b], sim.cr[n, 0], sim.cr[n, 1]) for b in cand]
            best = list(cand)[int(np.argmax(powers))]
            sweeps += 1
            event = "sweep"
        else:
            event = "predict"
        b = beams[best]
        sim.log(n, event, b, est=(b.theta0, b.phi0, np.nan, np.nan))
    sim.trace.meta["sweeps"] = sweeps


def _run_omni(sim: _Sim):
    beam = beam_weights(0.0, 0.0, 1, 1, sim.acfg)
    for n in range(sim.n):
        states = [sim.scatterer_state(m) for m in (sim.sense(n, k, beam) for k in range(sim.k))
                  if m is not None]
        est = np.mean(states, axis=0) if states else None
        sim.log(n, "sense", beam, est=est)


def run_aba(world: WorldState, cfg: "SystemConfig", ibe_out: IbeResult | None = None,
            seed: int = 0) -> Trace:
    return run_scheme(cfg, "aba", seed, world)


def run_baseline(world: WorldState, cfg: "SystemConfig", kind: str, seed: int = 0) -> Trace:
    kind = kind.lower()
    if kind not in ("rb", "db", "point", "sweep", "omni"):
        raise ValueError(f"unknown baseline kind: {kind}")
    return run_scheme(cfg, kind, seed, world)


def run_scheme(cfg: "SystemConfig", scheme: str, seed: int = 0,
               world: WorldState | None = None) -> Trace:
    """Full run of one scheme: IBE first where the scheme needs it."""
    scheme = scheme.lower()
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme: {scheme}")
    sim = _Sim(cfg, seed, world, scheme)
    if scheme == "sweep":
        _run_sweep(sim)
    elif scheme == "omni":
        _run_omni(sim)
    else:
        ibe = _run_ibe(sim)
        if scheme in ("aba", "rb"):
            _run_tracking(sim, ibe, always_sense=scheme == "rb")
        elif scheme == "db":
            _run_db(sim, ibe)
        else:
            _run_point(sim, ibe)
    sim.trace.meta["mee_calls"] = sim.mee_calls
    sim.trace.meta["ekf_calls"] = sim.ekf_calls
    sim.trace.meta["seed"] = seed
    return sim.trace
