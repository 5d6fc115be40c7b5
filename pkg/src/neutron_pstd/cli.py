"""Command-line front end: ``neutron-pstd {run,born,sweep,fresnel,compare,stability}``.

Exit status: 0 success, 2 configuration or input error, 3 numerical
divergence, 4 steady state not reached.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis
from .born import BornParams
from .config import build_run, load_config
from .engine import max_stable_dt, resolve_dt, run
from .errors import ConfigurationError, DivergenceError, DomainError, IngestionError, SteadyStateTimeout
from .farfield import SurfacePhasorRecord
from .scaling import GridSpec

log = logging.getLogger("neutron_pstd")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_TIMEOUT = 0, 2, 3, 4


def _float_or_inf(text):
    return math.inf if str(text).lower() in ("inf", "infinity") else float(text)


def _sweep_spec(plane, step, window):
    return analysis.PlaneSweepSpec.plane(plane, step_deg=step, forward_window_deg=window)


def _write_outputs(table, out, svg, title):
    analysis.write_table_csv(out, table)
    print(f"wrote {out}")
    if svg:
        analysis.write_polar_svg(svg, {title: table}, channels=analysis.CHANNELS, title=title)
        print(f"wrote {svg}")


def cmd_run(args):
    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spins = args.spin or [cfg.incidence.spin if isinstance(cfg.incidence.spin, str) else "config"]
    potential = None
    for spin in spins:
        rc = build_run(cfg, spin=None if spin == "config" else spin, potential=potential)
        potential = rc.potential
        dt, nper, bound = resolve_dt(rc, 0.0 if potential is None else potential.umax)
        print(f"stability bound {bound:.6e}; dt {dt:.6e} ({nper} steps per period)")
        rc.progress = args.verbose
        t0 = time.perf_counter()
        result = run(rc)
        target = out / f"record_{spin}"
        result.record.save(target)
        summary = {
            "spin": spin, "steps": result.state.step, "dt": result.dt, "bound": result.bound,
            "steps_per_period": result.steps_per_period, "seconds": time.perf_counter() - t0,
            "trace": result.trace,
        }
        (out / f"run_{spin}.json").write_text(json.dumps(summary, indent=2))
        print(f"spin {spin}: {result.state.step} steps in {summary['seconds']:.1f} s -> {target}")
    return EXIT_OK


def cmd_born(args):
    params = BornParams(args.V0ratio, args.radius, args.b)
    spec = _sweep_spec(args.sweep, args.step, args.window)
    table = analysis.plane_sweep(analysis.born_source(params, incidence=spec.incidence), spec)
    _write_outputs(table, args.out, args.svg, f"Born {args.sweep} V0/E0={args.V0ratio:g} b={args.b:g}a")
    return EXIT_OK


def _records(args):
    up = SurfacePhasorRecord.load(args.record_up)
    down = SurfacePhasorRecord.load(args.record_down) if args.record_down else None
    return up, down


def cmd_sweep(args):
    up, down = _records(args)
    spec = _sweep_spec(args.plane, args.step, args.window)
    table = analysis.plane_sweep(analysis.pstd_source(up, down), spec)
    _write_outputs(table, args.out, args.svg, f"PSTD far field, {args.plane} plane")
    return EXIT_OK


def cmd_fresnel(args):
    up, down = _records(args)
    spec = _sweep_spec(args.plane, args.step, args.window)
    table = analysis.plane_sweep(analysis.fresnel_source(up, down, args.radius), spec)
    _write_outputs(table, args.out, args.svg, f"PSTD at r={args.radius:g}, {args.plane} plane")
    return EXIT_OK


def cmd_compare(args):
    a = analysis.read_table_csv(args.pstd)
    b = analysis.read_table_csv(args.born)
    alpha, beta = analysis.PLANES[args.plane]
    spec = analysis.PlaneSweepSpec(alpha, beta, tuple(a.gamma_deg), forward_window_deg=args.window)
    report = analysis.compare(a, b, spec.forward_mask(),
                              metadata={"pstd": str(args.pstd), "born": str(args.born), "plane": args.plane,
                                        "forward_window_deg": args.window})
    for c, v in report.discrepancy.items():
        print(f"{c:9s} relative L2 discrepancy {v:.4e}")
    if args.out:
        Path(args.out).write_text(report.to_json())
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_stability(args):
    if args.config:
        cfg = load_config(args.config)
        rc = build_run(cfg)
        grid = rc.grid
        umax = rc.potential.umax if rc.potential is not None else 0.0
        safety = rc.safety
    else:
        if args.d is None:
            raise ConfigurationError("stability needs --config or --d")
        grid = GridSpec.centered(8, args.d)
        umax = args.umax if args.umax is not None else 2.0 / 3.0 * args.V0ratio
        safety = args.safety
    bound = max_stable_dt(grid, umax)
    print(f"umax {umax:.6g}")
    print(f"stability bound {bound:.10e}")
    if args.dt is not None:
        ok = args.dt <= bound
        print(f"dt {args.dt:.10e} {'admitted' if ok else 'exceeds the bound'}")
        return EXIT_OK if ok else EXIT_CONFIG
    n = math.ceil(2 * math.pi / (safety * bound))
    n += n % 2
    print(f"chosen dt {2 * math.pi / n:.10e} ({n} steps per period, safety {safety:g})")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="neutron-pstd", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="march a configuration to steady state and store surface records")
    r.add_argument("config")
    r.add_argument("--out", default="out")
    r.add_argument("--spin", action="append", help="incident spin label; repeat for several runs")
    r.set_defaults(func=cmd_run)

    def sweep_args(q, plane_flag="--plane"):
        q.add_argument(plane_flag, choices=sorted(analysis.PLANES), default="xy")
        q.add_argument("--step", type=float, default=1.0, help="gamma step in degrees")
        q.add_argument("--window", type=float, default=15.0, help="forward window half-width in degrees")
        q.add_argument("--out", default="sweep.csv")
        q.add_argument("--svg")

    b = sub.add_parser("born", help="closed-form Born sweep for the magnetized sphere")
    sweep_args(b, "--sweep")
    b.add_argument("--V0ratio", type=float, required=True, help="V0/E0")
    b.add_argument("--radius", type=float, default=math.pi, help="sphere radius in reduced wavelengths")
    b.add_argument("--b", type=_float_or_inf, default=8.175, help="cutoff radius over sphere radius, or inf")
    b.set_defaults(func=cmd_born)

    s = sub.add_parser("sweep", help="far-field sweep from stored surface records")
    s.add_argument("record_up")
    s.add_argument("--record-down")
    sweep_args(s)
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("fresnel", help="sweep of the exterior field at a finite radius")
    f.add_argument("record_up")
    f.add_argument("--record-down")
    f.add_argument("--radius", type=float, default=100.0)
    sweep_args(f)
    f.set_defaults(func=cmd_fresnel)

    c = sub.add_parser("compare", help="relative L2 discrepancy of two sweep tables outside the forward window")
    c.add_argument("pstd")
    c.add_argument("born")
    c.add_argument("--plane", choices=sorted(analysis.PLANES), default="xy")
    c.add_argument("--window", type=float, default=15.0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    st = sub.add_parser("stability", help="print the time-step bound and the chosen step")
    st.add_argument("--config")
    st.add_argument("--d", type=float, nargs="+", help="dimensionless spacing (1 or 3 values)")
    st.add_argument("--V0ratio", type=float, default=0.0)
    st.add_argument("--umax", type=float)
    st.add_argument("--dt", type=float)
    st.add_argument("--safety", type=float, default=0.9)
    st.set_defaults(func=cmd_stability)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "d", None) is not None:
        args.d = args.d[0] if len(args.d) == 1 else tuple(args.d)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, DomainError, IngestionError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as err:
        print(f"diverged: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    except SteadyStateTimeout as err:
        print(f"not steady: {err}", file=sys.stderr)
        return EXIT_TIMEOUT


if __name__ == "__main__":
    sys.exit(main())
