"""System configuration: JSON loading, unit conversion and validation.

dBm quantities are converted to watts once here; everything downstream works
in watts and linear ratios.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .array import ArrayConfig
from .channel import C, dbm_to_watts
from .crb import SensingDims
from .scenario import WorldState, default_scatterer_offsets
from .track import process_noise_from_table


class ConfigError(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass(frozen=True)
class ScenarioConfig:
    bs_position: tuple = (0.0, 0.0, 8.0)
    cr_initial_position: tuple = (10.0, -38.0, 1.0)
    v_ini: float = 0.0
    a_acc: float = 10.0
    vehicle_length: float = 5.0
    vehicle_width: float = 2.0
    scatterer_grid: tuple = (2, 3)


@dataclass(frozen=True)
class ChannelConfig:
    fc_hz: float = 30e9
    noise_comm_w: float = 1e-11
    noise_radar_w: float = 1e-11
    rcs_m2: float = 1.0
    iota: float = 0.95
    g_t: float = 1.0
    g_r: float = 1.0

    @property
    def wavelength(self) -> float:
        return C / self.fc_hz


@dataclass(frozen=True)
class SensingConfig:
    n_sub: int = 3300
    n_sym: int = 14
    delta_f: float = 120e3
    slot: float = 0.125e-3
    t_cp: float = 0.125e-3 / 14 - 1 / 120e3
    bandwidth: float = 400e6
    delta_r: float = 0.375
    evo_var_theta_deg2: float = 0.02
    evo_var_phi_deg2: float = 0.02
    evo_var_d: float = 0.2
    evo_var_v: float = 0.25
    confidence: float = 0.99
    p_num: int = 200
    detect_threshold_db: float = 13.0
    n_slot_per_frame: int = 80

    @property
    def t_s(self) -> float:
        return 1.0 / self.delta_f + self.t_cp

    @property
    def process_noise(self) -> np.ndarray:
        return process_noise_from_table(self.evo_var_theta_deg2, self.evo_var_phi_deg2,
                                        self.evo_var_d, self.evo_var_v)


@dataclass(frozen=True)
class SchemeParams:
    gamma_r1: float = 0.04
    gamma_r2: float = 0.01
    feedback_period: int = 1
    ibe_convergence_tol: float = 0.01
    ibe_max_slots: int = 50
    sweep_period: int = 160
    sweep_codebook_size: int = 64
    sweep_subset_size: int = 8
    sweep_margin: float = 0.05
    divergence_factor: float = 10.0
    divergence_slots: int = 100

    def __post_init__(self):
        if not self.gamma_r2 < self.gamma_r1:
            raise ConfigError("schemes.gamma_r2", "must be smaller than gamma_r1")
        if self.feedback_period < 1 or self.sweep_period < 1:
            raise ConfigError("schemes", "periods must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    n_slots: int = 32000
    seed: int = 0


@dataclass(frozen=True)
class SystemConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    array: ArrayConfig = field(default_factory=ArrayConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    sensing: SensingConfig = field(default_factory=SensingConfig)
    schemes: SchemeParams = field(default_factory=SchemeParams)
    run: RunConfig = field(default_factory=RunConfig)

    @property
    def dims(self) -> SensingDims:
        """Sensing dimensions with the full receive array."""
        s = self.sensing
        return SensingDims(s.n_sub, s.n_sym, s.delta_f, s.t_s, self.array.nz_max, self.array.ny_max)

    def world(self) -> WorldState:
        sc = self.scenario
        nx, ny = sc.scatterer_grid
        return WorldState(
            bs_position=np.array(sc.bs_position, dtype=float),
            cr_position=np.array(sc.cr_initial_position, dtype=float),
            cr_velocity=sc.v_ini, a_acc=sc.a_acc,
            scatterer_offsets=default_scatterer_offsets(sc.vehicle_length, sc.vehicle_width, nx, ny),
            vehicle_length=sc.vehicle_length, vehicle_width=sc.vehicle_width,
        )

    def with_array(self, n: int) -> "SystemConfig":
        return replace(self, array=replace(self.array, nz_max=n, ny_max=n))

    def with_overrides(self, **blocks) -> "SystemConfig":
        """``cfg.with_overrides(scenario={'a_acc': 5})`` style updates."""
        out = self
        for name, vals in blocks.items():
            out = replace(out, **{name: replace(getattr(out, name), **vals)})
        validate(out)
        return out


def validate(cfg: SystemConfig) -> None:
    s = cfg.sensing
    if abs(s.n_sym * s.t_s - s.slot) > 1e-9:
        raise ConfigError("sensing.n_sym", f"n_sym * t_s = {s.n_sym * s.t_s:.6g} s differs from "
                          f"slot = {s.slot:.6g} s")
    if s.t_cp < 0:
        raise ConfigError("sensing.t_cp", "must be non-negative")
    if abs(C / (2 * s.bandwidth) - s.delta_r) > 1e-6:
        raise ConfigError("sensing.delta_r", "must equal c / (2 B)")
    if abs(s.n_sub * s.delta_f - s.bandwidth) > 0.02 * s.bandwidth:
        raise ConfigError("sensing.bandwidth", "n_sub * delta_f deviates from B by more than 2%")
    if s.n_sub < 2 or s.n_sym < 2:
        raise ConfigError("sensing.n_sub", "n_sub and n_sym must be >= 2")
    if not 0 < s.confidence < 1:
        raise ConfigError("sensing.confidence", "must lie in (0, 1)")
    if s.p_num < 8:
        raise ConfigError("sensing.p_num", "must be >= 8")
    ch = cfg.channel
    for k in ("fc_hz", "noise_comm_w", "noise_radar_w", "rcs_m2", "iota", "g_t", "g_r"):
        if not getattr(ch, k) > 0:
            raise ConfigError(f"channel.{k}", "must be positive")
    if cfg.run.n_slots < 1:
        raise ConfigError("run.n_slots", "must be >= 1")
    cfg.world()  # footprint checks


_SCHEMA = {
    "scenario": {"bs_position", "cr_initial_position", "v_ini", "a_acc", "vehicle_length",
                 "vehicle_width", "scatterer_grid"},
    "array": {"nz_max", "ny_max", "p_tx_dbm"},
    "channel": {"fc_hz", "noise_comm_dbm", "noise_radar_dbm", "rcs_m2", "iota", "g_t", "g_r"},
    "sensing": {"n_sub", "n_sym", "delta_f_hz", "slot_s", "t_cp_s", "bandwidth_hz", "delta_r_m",
                "evo_var_theta_deg2", "evo_var_phi_deg2", "evo_var_d_m2", "evo_var_v_m2s2",
                "confidence", "p_num", "detect_threshold_db", "n_slot_per_frame"},
    "schemes": {"gamma_r1", "gamma_r2", "feedback_period", "ibe_convergence_tol", "ibe_max_slots",
                "sweep_period", "sweep_codebook_size", "sweep_subset_size", "sweep_margin",
                "divergence_factor", "divergence_slots"},
    "run": {"n_slots", "seed"},
}


def default_config_dict() -> dict:
    text = resources.files("isacsim").joinpath("default_config.json").read_text()
    return json.loads(text)


def _require(d: dict, block: str, key: str):
    try:
        return d[block][key]
    except KeyError:
        raise ConfigError(f"{block}.{key}", "missing key") from None


def from_dict(d: dict) -> SystemConfig:
    for block, keys in _SCHEMA.items():
        if block not in d:
            raise ConfigError(block, "missing block")
        extra = set(d[block]) - keys
        if extra:
            raise ConfigError(f"{block}.{sorted(extra)[0]}", "unknown key")
    g = lambda b, k: _require(d, b, k)  # noqa: E731
    try:
        scen = ScenarioConfig(
            tuple(map(float, g("scenario", "bs_position"))),
            tuple(map(float, g("scenario", "cr_initial_position"))),
            float(g("scenario", "v_ini")), float(g("scenario", "a_acc")),
            float(g("scenario", "vehicle_length")), float(g("scenario", "vehicle_width")),
            tuple(int(x) for x in g("scenario", "scatterer_grid")),
        )
        arr = ArrayConfig(int(g("array", "nz_max")), int(g("array", "ny_max")),
                          float(dbm_to_watts(g("array", "p_tx_dbm"))))
        ch = ChannelConfig(float(g("channel", "fc_hz")),
                           float(dbm_to_watts(g("channel", "noise_comm_dbm"))),
                           float(dbm_to_watts(g("channel", "noise_radar_dbm"))),
                           float(g("channel", "rcs_m2")), float(g("channel", "iota")),
                           float(g("channel", "g_t")), float(g("channel", "g_r")))
        sen = SensingConfig(
            int(g("sensing", "n_sub")), int(g("sensing", "n_sym")), float(g("sensing", "delta_f_hz")),
            float(g("sensing", "slot_s")), float(g("sensing", "t_cp_s")),
            float(g("sensing", "bandwidth_hz")), float(g("sensing", "delta_r_m")),
            float(g("sensing", "evo_var_theta_deg2")), float(g("sensing", "evo_var_phi_deg2")),
            float(g("sensing", "evo_var_d_m2")), float(g("sensing", "evo_var_v_m2s2")),
            float(g("sensing", "confidence")), int(g("sensing", "p_num")),
            float(g("sensing", "detect_threshold_db")), int(g("sensing", "n_slot_per_frame")),
        )
        sch = SchemeParams(**{k: d["schemes"][k] for k in _SCHEMA["schemes"] if k in d["schemes"]})
        for k in ("gamma_r1", "gamma_r2"):
            _require(d, "schemes", k)
        run = RunConfig(int(g("run", "n_slots")), int(g("run", "seed")))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("config", str(exc)) from exc
    cfg = SystemConfig(scen, arr, ch, sen, sch, run)
    validate(cfg)
    return cfg


def load_config(path=None) -> SystemConfig:
    """Load and validate a JSON config; ``None`` loads the shipped default."""
    if path is None:
        return from_dict(default_config_dict())
    p = Path(path)
    if not p.exists():
        raise ConfigError("path", f"config file not found: {p}")
    try:
        d = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("path", f"invalid JSON: {exc}") from exc
    return from_dict(d)


def to_dict(cfg: SystemConfig) -> dict:
    s, ch = cfg.sensing, cfg.channel
    return {
        "scenario": {
            "bs_position": list(cfg.scenario.bs_position),
            "cr_initial_position": list(cfg.scenario.cr_initial_position),
            "v_ini": cfg.scenario.v_ini, "a_acc": cfg.scenario.a_acc,
            "vehicle_length": cfg.scenario.vehicle_length,
            "vehicle_width": cfg.scenario.vehicle_width,
            "scatterer_grid": list(cfg.scenario.scatterer_grid),
        },
        "array": {"nz_max": cfg.array.nz_max, "ny_max": cfg.array.ny_max,
                  "p_tx_dbm": round(10 * math.log10(cfg.array.p_tx) + 30, 12)},
        "channel": {"fc_hz": ch.fc_hz, "noise_comm_dbm": round(10 * math.log10(ch.noise_comm_w) + 30, 12),
                    "noise_radar_dbm": round(10 * math.log10(ch.noise_radar_w) + 30, 12),
                    "rcs_m2": ch.rcs_m2, "iota": ch.iota, "g_t": ch.g_t, "g_r": ch.g_r},
        "sensing": {"n_sub": s.n_sub, "n_sym": s.n_sym, "delta_f_hz": s.delta_f, "slot_s": s.slot,
                    "t_cp_s": s.t_cp, "bandwidth_hz": s.bandwidth, "delta_r_m": s.delta_r,
                    "evo_var_theta_deg2": s.evo_var_theta_deg2,
                    "evo_var_phi_deg2": s.evo_var_phi_deg2, "evo_var_d_m2": s.evo_var_d,
                    "evo_var_v_m2s2": s.evo_var_v, "confidence": s.confidence, "p_num": s.p_num,
                    "detect_threshold_db": s.detect_threshold_db,
                    "n_slot_per_frame": s.n_slot_per_frame},
        "schemes": copy.deepcopy(cfg.schemes.__dict__),
        "run": {"n_slots": cfg.run.n_slots, "seed": cfg.run.seed},
    }
