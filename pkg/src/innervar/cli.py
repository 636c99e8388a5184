"""Command-line front end: ``innervar verify <suite>`` and ``innervar trace <differential>``.

Exit codes: 0 pass, 1 check failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import io as rio
from . import quad_diff as qdm
from . import suites
from .domain import PlanarDomain

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- argument parsing helpers ------------------------------------------------------

def parse_complex(text: str) -> complex:
    s = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise UsageError(f"not a complex number: {text!r}") from None


def parse_tol(items) -> dict:
    out = {}
    for it in items or ():
        key, sep, val = it.partition("=")
        if not sep:
            raise UsageError(f"--tol expects key=value, got {it!r}")
        try:
            out[key] = float(val)
        except ValueError:
            raise UsageError(f"--tol value for {key!r} is not a number") from None
    return out


def resolve_differential(name: str) -> qdm.QuadDifferential:
    """Builtin name, ``hyperelliptic:<n>``, ``constant:<c>`` or a rational expression in ``z``."""
    if name == "leminiscate":
        return qdm.leminiscate()
    if name in ("four_pole", "four-pole"):
        return qdm.four_pole()
    head, sep, arg = name.partition(":")
    if sep and head == "hyperelliptic":
        try:
            return qdm.hyperelliptic(int(arg))
        except ValueError as e:
            raise UsageError(str(e)) from None
    if sep and head == "constant":
        return qdm.constant(parse_complex(arg))
    try:
        return qdm.QuadDifferential.from_expression(name)
    except (ValueError, ZeroDivisionError) as e:
        raise UsageError(f"cannot use differential {name!r}: {e}") from None


def parse_domain(text: str | None, qd: qdm.QuadDifferential) -> PlanarDomain:
    """``disk[:r[:cx:cy]]``, ``annulus:r_in:r_out``, ``rect:x0:y0:x1:y1`` or ``auto``.

    ``auto`` is a disk around the origin containing every critical point with room to spare.
    """
    if text is None or text == "auto":
        crit = qd.critical_points
        r = max([2.0] + [1.5 * abs(p) + 0.5 for p in crit])
        return PlanarDomain.disk(0, r)
    head, *rest = text.split(":")
    try:
        vals = [float(v) for v in rest]
    except ValueError:
        raise UsageError(f"bad domain {text!r}") from None
    try:
        if head == "disk" and len(vals) in (0, 1, 3):
            r = vals[0] if vals else 1.0
            c = complex(vals[1], vals[2]) if len(vals) == 3 else 0j
            return PlanarDomain.disk(c, r)
        if head == "annulus" and len(vals) == 2:
            return PlanarDomain.annulus(vals[0], vals[1])
        if head == "rect" and len(vals) == 4:
            return PlanarDomain.rectangle(*vals)
    except ValueError as e:
        raise UsageError(str(e)) from None
    raise UsageError(f"bad domain {text!r}")


def auto_seeds(qd: qdm.QuadDifferential, domain: PlanarDomain, rings: int = 6, rays: int = 8):
    """Deterministic polar lattice of seeds, skipping exclusion balls and outside points."""
    x0, y0, x1, y1 = domain.bounding_box
    c = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
    R = 0.5 * min(x1 - x0, y1 - y0)
    out = []
    for k in range(1, rings + 1):
        r = 0.9 * R * k / rings
        for m in range(rays):
            z = c + r * np.exp(1j * (2 * np.pi * (m + 0.5 * (k % 2)) / rays + 0.1))
            if domain.inside(np.array([z]))[0] and qd.critical_distance(z) > 2 * qd.exclusion_radius:
                out.append(complex(z))
    return out


# -- commands ------------------------------------------------------------------------------------

def _manifest(out: Path, args, config: dict, t0: float, outputs: list):
    man = {"command": args.command, "config": config, "version": __version__,
           "wall_time_seconds": round(time.perf_counter() - t0, 3), "outputs": sorted(outputs)}
    (out / "run.json").write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")


def _checks_csv(reports) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "check", "value", "limit", "margin", "passed"])
    for rep in reports:
        for c in rep["checks"]:
            w.writerow([rep["suite"], c["name"], repr(c["value"]), repr(c["limit"]),
                        repr(c["margin"]), int(c["passed"])])
    return buf.getvalue()


def _verify_figures(out: Path, names) -> list:
    written = []
    if "partition" in names:
        from . import partition as part
        D, K, eps = suites.partition_setup()
        P = part.build_partition(D, K, [0j], eps)
        (out / "partition.svg").write_text(rio.partition_svg(P, D))
        written.append("partition.svg")
    if "trajectory" in names:
        qd = qdm.leminiscate()
        trs = [qdm.trace_vertical(qd, complex(math.sqrt(1 + r * r))) for r in suites.LEMINISCATE_RADII]
        trs += [qdm.trace_vertical(qd, -complex(math.sqrt(1 + r * r))) for r in suites.LEMINISCATE_RADII]
        (out / "trajectories.svg").write_text(
            rio.trajectories_svg(trs, critical=qd.critical_points, box=(-1.6, -0.9, 1.6, 0.9)))
        written.append("trajectories.svg")
    if "length-area" in names:
        dom = qdm.leminiscate_ring(0.3, 0.9)
        (out / "length_area_domain.svg").write_text(rio.outline_svg(dom))
        written.append("length_area_domain.svg")
    return written


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    names = list(suites.SUITES) if args.suite == "all" else [args.suite]
    if args.resolution < 16:
        raise UsageError("--resolution must be at least 16")
    cfg = suites.SuiteConfig(args.resolution, args.seed, parse_tol(args.tol))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for name in names:
        rep, secs = suites.run_suite(name, cfg)
        reports.append(rep)
        for c in rep["checks"]:
            print(f"{'PASS' if c['passed'] else 'FAIL'}  {name:12s} {c['name']}  "
                  f"value={c['value']:.6g} limit={c['limit']:.6g} margin={c['margin']:.3g}")
        print(f"suite {name}: {'pass' if rep['passed'] else 'FAIL'} ({secs:.1f} s)")
    passed = all(r["passed"] for r in reports)
    report = {"suite": args.suite, "passed": passed, "resolution": cfg.resolution,
              "reduced": cfg.resolution < suites.REFERENCE_RESOLUTION, "seed": cfg.seed,
              "tolerance_overrides": cfg.tol, "suites": reports}
    outputs = []
    if args.format == "json":
        rio.write_report(out / "report.json", report)
        outputs.append("report.json")
    else:
        (out / "report.csv").write_text(_checks_csv(reports))
        outputs.append("report.csv")
    if args.svg:
        outputs += _verify_figures(out, names)
    config = {"suite": args.suite, "resolution": cfg.resolution, "seed": cfg.seed,
              "tol": cfg.tol, "format": args.format, "svg": args.svg}
    _manifest(out, args, config, t0, outputs)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_trace(args) -> int:
    t0 = time.perf_counter()
    qd = resolve_differential(args.differential)
    domain = None if args.domain == "none" else parse_domain(args.domain, qd)
    if domain is None and (args.seeds == "auto"):
        raise UsageError("--seeds auto needs a bounded domain")
    seeds = [parse_complex(s) for s in (args.seed or [])]
    if args.seeds == "auto":
        seeds += auto_seeds(qd, domain)
    elif args.seeds:
        seeds += [parse_complex(s) for s in args.seeds.split(",") if s.strip()]
    if not seeds:
        raise UsageError("give at least one --seed or --seeds")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    entries, trajs = [], []
    for s in seeds:
        try:
            tr = qdm.trace_vertical(qd, s, domain)
        except ValueError as e:
            entries.append({"seed": [s.real, s.imag], "error": str(e)})
            print(f"seed {s:.6g}: error: {e}")
            continue
        trajs.append(tr)
        entries.append(tr.to_dict())
        print(f"seed {s:.6g}: {tr.kind} h_length={tr.h_length:.9g}")
    report = {"differential": qd.to_dict(), "domain": args.domain or "auto", "trajectories": entries}
    outputs = []
    if args.format == "json":
        rio.write_report(out / "trace.json", report)
        outputs.append("trace.json")
    (out / "trajectories.csv").write_text(rio.polyline_csv(trajs))
    outputs.append("trajectories.csv")
    if args.svg and trajs:
        (out / "trajectories.svg").write_text(
            rio.trajectories_svg(trajs, domain, qd.critical_points))
        outputs.append("trajectories.svg")
    config = {"differential": args.differential, "domain": args.domain,
              "seeds": [[s.real, s.imag] for s in seeds], "format": args.format, "svg": args.svg}
    _manifest(out, args, config, t0, outputs)
    return EXIT_OK if trajs else EXIT_FAIL


# -- entry point ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="innervar", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default="innervar-out", help="output directory")
        sp.add_argument("--svg", action=argparse.BooleanOptionalAction, default=True)
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    v = sub.add_parser("verify", help="run an acceptance suite")
    v.add_argument("suite", choices=suites.SUITES + ("all",))
    v.add_argument("--resolution", type=int, default=suites.REFERENCE_RESOLUTION)
    v.add_argument("--seed", type=int, default=0, help="seed of the random test-function batteries")
    v.add_argument("--tol", action="append", metavar="KEY=VALUE", help="override a check limit")
    common(v)
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("trace", help="trace vertical trajectories of a quadratic differential")
    t.add_argument("differential", help="builtin name, hyperelliptic:<n>, or expression in z")
    t.add_argument("--seed", action="append", help="seed point, e.g. 1.118 or 0.3+0.1i (repeatable)")
    t.add_argument("--seeds", help="comma-separated seed points, or 'auto'")
    t.add_argument("--domain", default=None,
                   help="disk[:r[:cx:cy]], annulus:r_in:r_out, rect:x0:y0:x1:y1, auto or none")
    common(t)
    t.set_defaults(func=cmd_trace)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        print(f"innervar: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
