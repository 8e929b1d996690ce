"""Command-line entry point ``isacsim``.

Every subcommand writes its result to stdout (CSV or JSON).  Failures print a
single JSON object ``{"error": ..., "type": ...}`` to stderr and exit non-zero.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import harness
from .config import ConfigError, load_config
from .ellipse import axis_aligned_mee, mec, mee


def _int_range(text: str) -> list[int]:
    """'0..19' (inclusive), '3' or '1,4,7'."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _snr_grid(text: str) -> list[float]:
    # '-10..30' steps by 10 dB; explicit lists are passed through
    if ".." in text and "," not in text:
        lo, hi = (float(v) for v in text.split(".."))
        return [float(v) for v in np.arange(lo, hi + 1e-9, 10.0)]
    return [float(v) for v in text.split(",")]


def _csv_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _read_points(path: str) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except ValueError:
                if rows:
                    raise
                continue  # header line
    if not rows:
        raise ValueError(f"no points in {path}")
    return np.array(rows)


def _ellipse_json(e) -> dict:
    A, B, C, F = e.central_form
    return {"center": list(e.center), "a": e.a, "b": e.b, "orientation": e.orientation,
            "area": e.area, "central_form": {"A": A, "B": B, "C": C, "F": F}}


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.array:
        cfg = cfg.with_array(args.array)
    if args.slots:
        cfg = cfg.with_overrides(run={"n_slots": args.slots})
    sums = harness.run_experiment(cfg, args.schemes, args.seeds, args.out, args.workers)
    json.dump([s.__dict__ for s in sums], sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_crb_check(args) -> int:
    rows = harness.crb_check(args.draws, args.seed)
    harness.write_rows_csv(rows, sys.stdout)
    worst = max(r["max_rel_err"] for r in rows)
    return 0 if worst <= args.tol else 1


def cmd_mee(args) -> int:
    pts = _read_points(args.points)
    (cx, cy), r = mec(pts)
    out = {"n_points": int(pts.shape[0]),
           "mee": _ellipse_json(mee(pts, r_star=r)),
           "axis_aligned_mee": _ellipse_json(axis_aligned_mee(pts)),
           "mec": {"center": [cx, cy], "radius": r}}
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_rmse_sweep(args) -> int:
    rows = harness.rmse_sweep(args.snr, trials=args.trials, seed=args.seed)
    harness.write_rows_csv(rows, sys.stdout)
    return 0


def cmd_table3(args) -> int:
    cfg = load_config(args.config)
    res = harness.table3(cfg, args.arrays, args.seeds, args.schemes, args.workers)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["array", *args.schemes])
    for n, r in res.items():
        w.writerow([f"{n}x{n}", *(f"{r[s]:.4f}" for s in args.schemes)])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isacsim", description="ISAC beamforming simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run schemes over seeds, write per-run CSV and JSON")
    r.add_argument("--config", default=None, help="JSON config (default: shipped)")
    r.add_argument("--schemes", type=_csv_list, default=["aba", "rb", "db", "point", "sweep"])
    r.add_argument("--seeds", type=_int_range, default=[0])
    r.add_argument("--out", default=None, help="output directory for traces")
    r.add_argument("--array", type=int, default=None, help="square array size override")
    r.add_argument("--slots", type=int, default=None, help="run length override")
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("crb-check", help="closed-form vs numeric-FIM CRB table (CSV)")
    c.add_argument("--draws", type=int, default=20)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--tol", type=float, default=1e-4)
    c.set_defaults(func=cmd_crb_check)

    m = sub.add_parser("mee", help="enclosing ellipses of a CSV point set (JSON)")
    m.add_argument("--points", required=True)
    m.set_defaults(func=cmd_mee)

    s = sub.add_parser("rmse-sweep", help="azimuth RMSE vs sqrt(CRB) over SNR (CSV)")
    s.add_argument("--snr", type=_snr_grid, default=[-10.0, 0.0, 10.0, 20.0, 30.0])
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_rmse_sweep)

    t = sub.add_parser("table3", help="median average rates per array size (CSV)")
    t.add_argument("--config", default=None)
    t.add_argument("--arrays", type=lambda v: [int(x) for x in _csv_list(v)], default=[8, 16, 32])
    t.add_argument("--seeds", type=_int_range, default=list(range(20)))
    t.add_argument("--schemes", type=_csv_list, default=["aba", "rb", "db", "point", "sweep"])
    t.add_argument("--workers", type=int, default=harness.default_workers())
    t.set_defaults(func=cmd_table3)
    return p


def _glue_negative(argv):
    # "--snr -10..30" would otherwise be taken for an option
    out = []
    for tok in argv:
        if out and out[-1] == "--snr" and tok[:1] == "-" and tok[1:2].isdigit():
            out[-1] = f"--snr={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_negative(sys.argv[1:] if argv is None else list(argv)))
    try:
        return args.func(args)
    except ConfigError as exc:
        err = {"error": str(exc), "type": "ConfigError", "key": exc.key}
    except Exception as exc:  # report anything else as machine-readable JSON
        err = {"error": str(exc), "type": type(exc).__name__}
    sys.stderr.write(json.dumps(err) + "\n")
    return 2


if __name__ == "__main__":
    sys.exit(main())
