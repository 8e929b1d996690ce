"""Experiment orchestration: runs, summaries, CSV traces and comparison tables."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .array import ArrayConfig, beam_gain, beam_weights
from .config import ConfigError, SystemConfig, from_dict, load_config, to_dict  # noqa: F401
from .crb import SensingDims, crb_closed_form, crb_from_fim, fim_numeric, schur_complement
from .measure import EchoSource, estimate_from_cube, synth_echo_grid, synth_measurement
from .schemes import EVENTS, SCHEMES, Trace, run_scheme

CSV_VERSION = 1
CSV_COLUMNS = ("slot", "t", "theta_true", "phi_true", "d_true", "v_true", "theta_est",
               "phi_est", "d_est", "v_est", "nz", "ny", "rate", "event", "mee_area",
               "mee_calls_cum", "ekf_calls_cum")


class ExperimentError(RuntimeError):
    """A scheme run failed; the message names the scheme, array and seed."""


@dataclass(frozen=True)
class RunSummary:
    scheme: str
    array_size: str
    avg_rate: float
    velocity_mae: float | None
    angle_rmse: float | None
    mee_calls: int
    ekf_calls: int
    wall_time: float
    seed: int | None = None
    n_slots: int = 0
    sense_slots: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _array_label(trace: Trace) -> str:
    return trace.meta.get("array", "")


def summarize(traces, wall_time: float = 0.0) -> RunSummary:
    """Aggregate one trace or a list of traces of the same scheme.

    Averages run over every slot; velocity MAE and angle RMSE over slots that
    carry an estimate (None when no slot does).
    """
    if isinstance(traces, Trace):
        traces = [traces]
    traces = list(traces)
    if not traces or sum(t.n_slots for t in traces) == 0:
        raise ValueError("nothing to summarize")
    rate = np.concatenate([t.rate for t in traces])
    est = np.concatenate([t.est for t in traces])
    truth = np.concatenate([t.truth for t in traces])
    ok = np.all(np.isfinite(est), axis=1)
    if ok.any():
        err = est[ok] - truth[ok]
        mae = float(np.mean(np.abs(err[:, 3])))
        rmse = float(math.sqrt(np.mean(err[:, 0] ** 2 + err[:, 1] ** 2)))
    else:
        mae = rmse = None
    # counters are cumulative per trace, so totals come from the last slot
    mee = int(sum(t.mee_calls[-1] for t in traces if t.n_slots))
    ekf = int(sum(t.ekf_calls[-1] for t in traces if t.n_slots))
    schemes = {t.scheme for t in traces}
    seeds = {t.meta.get("seed") for t in traces}
    return RunSummary(
        scheme=",".join(sorted(schemes)),
        array_size=_array_label(traces[0]),
        avg_rate=float(rate.mean()),
        velocity_mae=mae,
        angle_rmse=rmse,
        mee_calls=mee,
        ekf_calls=ekf,
        wall_time=float(wall_time),
        seed=seeds.pop() if len(seeds) == 1 else None,
        n_slots=int(rate.size),
        sense_slots=int(sum(t.count("sense") for t in traces)),
    )


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def trace_rows(trace: Trace):
    ev = trace.events()
    for n in range(trace.n_slots):
        yield [str(n), _fmt(n * trace.dt), *(_fmt(v) for v in trace.truth[n]),
               *(_fmt(v) for v in trace.est[n]), str(int(trace.beam[n, 2])),
               str(int(trace.beam[n, 3])), _fmt(trace.rate[n]), str(ev[n]),
               _fmt(trace.mee_area[n]), str(int(trace.mee_calls[n])),
               str(int(trace.ekf_calls[n]))]


def write_trace_csv(trace: Trace, dest) -> None:
    """Per-slot CSV; ``dest`` is a path or a text stream."""
    own = not hasattr(dest, "write")
    fh = open(dest, "w", newline="") if own else dest
    try:
        fh.write(f"# isacsim trace v{CSV_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(trace_rows(trace))
    finally:
        if own:
            fh.close()


def trace_csv_text(trace: Trace) -> str:
    buf = io.StringIO()
    write_trace_csv(trace, buf)
    return buf.getvalue()


def read_trace_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# isacsim trace"):
            raise ValueError("not an isacsim trace file")
        return list(csv.DictReader(fh))


def _run_one(cfg_dict: dict, scheme: str, seed: int, out_dir: str | None) -> RunSummary:
    cfg = from_dict(cfg_dict)
    label = f"{cfg.array.nz_max}x{cfg.array.ny_max}"
    t0 = time.perf_counter()
    try:
        trace = run_scheme(cfg, scheme, seed)
    except Exception as exc:  # re-raised with the run identity attached
        raise ExperimentError(f"{scheme} {label} seed {seed}: {exc}") from exc
    trace.meta["array"] = label
    summary = summarize(trace, time.perf_counter() - t0)
    if out_dir is not None:
        stem = Path(out_dir) / f"{scheme}_{label}_seed{seed}"
        write_trace_csv(trace, stem.with_suffix(".csv"))
        stem.with_suffix(".json").write_text(summary.to_json() + "\n")
    return summary


def run_experiment(cfg: SystemConfig, schemes, seeds, out_dir=None, workers: int = 1):
    """Run every (scheme, seed) pair; returns summaries in input order.

    With ``out_dir`` each run writes ``<scheme>_<array>_seed<k>.csv`` and a
    matching summary JSON.  ``workers > 1`` runs pairs in separate processes.
    """
    bad = [s for s in schemes if s not in SCHEMES]
    if bad:
        raise ValueError(f"unknown scheme(s): {', '.join(bad)}")
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        out_dir = str(out_dir)
    d = to_dict(cfg)
    jobs = [(d, s, int(k), out_dir) for s in schemes for k in seeds]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_one(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(_run_one, *j) for j in jobs]
        return [f.result() for f in futs]


def default_workers() -> int:
    return max(1, min(8, (os.cpu_count() or 1)))


def table3(cfg: SystemConfig, arrays=(8, 16, 32), seeds=range(20),
           schemes=("aba", "rb", "db", "point", "sweep"), workers: int = 1):
    """Median average rate per (array, scheme) over ``seeds``.

    Returns ``{array: {scheme: median_rate}}``.
    """
    out = {}
    for n in arrays:
        sums = run_experiment(cfg.with_array(n), schemes, list(seeds), workers=workers)
        out[n] = {s: float(np.median([r.avg_rate for r in sums if r.scheme == s]))
                  for s in schemes}
    return out


# ---------------------------------------------------------------------------
# oracle-dimension studies

ORACLE_DIMS = SensingDims(n_sub=8, n_sym=4, nz=4, ny=4)


def crb_check(n_draws: int = 20, seed: int = 0, dims: SensingDims = ORACLE_DIMS):
    """Closed-form vs numeric-FIM CRBs over random parameter draws.

    Returns a list of dict rows with both values and the worst relative gap.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_draws):
        theta = rng.uniform(-0.8, -0.1)
        phi = rng.uniform(-1.2, 1.2)
        tau = rng.uniform(0.1, 0.9) / dims.delta_f
        mu = rng.uniform(-0.4, 0.4) / dims.t_s
        beta = rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        r_db = rng.uniform(-10, 30)
        # a full-array beam at a random nearby pointing sets the gain
        w = beam_weights(theta + rng.normal(0, 0.05), phi + rng.normal(0, 0.05),
                         dims.nz, dims.ny, _oracle_array(dims))
        g = beam_gain(w, theta, phi)
        sigma2 = abs(beta) ** 2 * g / 10 ** (r_db / 10)
        J = fim_numeric((theta, phi, tau, mu, beta.real, beta.imag), w, dims, sigma2)
        num = crb_from_fim(schur_complement(J)).as_array()
        cf = crb_closed_form(10 ** (r_db / 10), theta, phi, dims).as_array()
        rel = np.abs(cf - num) / np.abs(num)
        rows.append({"draw": i, "theta": float(theta), "phi": float(phi), "snr_db": float(r_db),
                     **{f"closed_{k}": float(v) for k, v in zip(_CRB_KEYS, cf)},
                     **{f"numeric_{k}": float(v) for k, v in zip(_CRB_KEYS, num)},
                     "max_rel_err": float(rel.max())})
    return rows


_CRB_KEYS = ("theta", "phi", "tau", "mu", "theta_phi")


def _oracle_array(dims: SensingDims) -> ArrayConfig:
    return ArrayConfig(dims.nz, dims.ny, 1.0)


def rmse_sweep(snr_db=(-10, 0, 10, 20, 30), trials: int = 200, draws: int = 20000,
               seed: int = 0, dims: SensingDims = ORACLE_DIMS, fc: float = 30e9):
    """Azimuth RMSE of the signal-level estimator and of CRB draws vs sqrt(CRB).

    Each trial places one scatterer at random off-grid delay and Doppler with
    fixed angles; echo SNR is the per-element, per-sample value.
    """
    rng = np.random.default_rng(seed)
    acfg = _oracle_array(dims)
    theta, phi = -0.3, 0.4
    w = beam_weights(theta, phi, dims.nz, dims.ny, acfg)
    g = beam_gain(w, theta, phi)
    lam = 3e8 / fc
    rows = []
    for s in snr_db:
        r = 10 ** (s / 10)
        crbs = crb_closed_form(r, theta, phi, dims)
        err = np.empty(trials)
        for i in range(trials):
            tau = rng.uniform(0.1, 0.9) / dims.delta_f
            mu = rng.uniform(-1.5, 1.5) / (dims.n_sym * dims.t_s)
            beta = np.exp(1j * rng.uniform(0, 2 * np.pi))
            src = EchoSource(theta, phi, tau, mu, beta)
            cube = synth_echo_grid([src], w, dims, rng, sigma_r2=g / r)
            try:
                est = estimate_from_cube(cube, dims, fc, threshold_db=0.0)
                err[i] = est[1] - phi
            except ValueError:
                # no peak found: a miss counts as an error of the full sector
                err[i] = math.pi / 2
        d = np.array([synth_measurement(theta, phi, 10.0, 0.0, crbs, rng, lam).phi_hat - phi
                      for _ in range(draws)])
        rows.append({"snr_db": float(s), "rmse_phi": float(np.sqrt(np.mean(err ** 2))),
                     "sqrt_crb_phi": math.sqrt(crbs.crb_phi),
                     "rmse_phi_crb_draws": float(np.sqrt(np.mean(d ** 2)))})
    return rows


def write_rows_csv(rows, dest) -> None:
    if not rows:
        return
    w = csv.DictWriter(dest, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


__all__ = ["CSV_COLUMNS", "CSV_VERSION", "EVENTS", "ExperimentError", "RunSummary",
           "SystemConfig", "load_config", "summarize", "write_trace_csv", "trace_csv_text",
           "read_trace_csv", "run_experiment", "table3", "crb_check", "rmse_sweep",
           "write_rows_csv", "ConfigError"]
