"""Command-line front end.

    friction-observer simulate SCENARIO.json [--out DIR] [--jobs N]
    friction-observer analyze-excitation LOG.csv --mode {pe,intervals,conservative} ...
    friction-observer plot MANIFEST.json --figure NAME [--out FILE]

Exit codes: 0 success, 2 configuration error, 3 divergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .engine import TrajectoryLog
from .excitation import (ExcitationError, RegressorSeries, check_pe, conservative_check,
                         interval_excitation)
from .plotting import FIGURES, emit_plot_script
from .runner import EXIT_CONFIG, EXIT_IO, EXIT_OK, run
from .scenario import ScenarioError, parse_scenario


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _windows(text: str) -> list[tuple[float, float]]:
    out = []
    for item in text.split(","):
        t, _, T = item.partition(":")
        out.append((float(t), float(T)))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="friction-observer", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario file")
    p.add_argument("scenario", type=Path)
    p.add_argument("--out", type=Path, default=None, help="override output.directory")
    p.add_argument("--jobs", type=int, default=1, help="concurrent sweep points")

    p = sub.add_parser("analyze-excitation", help="excitation report from a trajectory log")
    p.add_argument("log", type=Path)
    p.add_argument("--mode", choices=("pe", "intervals", "conservative"), required=True)
    p.add_argument("--vartheta", type=float, default=None,
                   help="tanh sharpness (default: read from the log header)")
    p.add_argument("--T", type=float, help="pe: window width")
    p.add_argument("--mu", type=float, help="pe: required excitation level")
    p.add_argument("--stride", type=float, default=None, help="pe: window stride")
    p.add_argument("--windows", type=_windows, help="intervals: t1:T1,t2:T2,...")
    p.add_argument("--partition", type=_floats, help="conservative: t1,t2,...")
    p.add_argument("--out", type=Path, default=None, help="report CSV path")

    p = sub.add_parser("plot", help="emit a figure script for the runs in a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--figure", choices=sorted(FIGURES), required=True)
    p.add_argument("--out", type=Path, default=None, help="script path (default: stdout)")
    p.add_argument("--pe-window", type=float, default=10.0)
    return parser


def _vartheta_from_header(tl: TrajectoryLog) -> float:
    try:
        return float(tl.header["scenario"]["observer"]["vartheta"])
    except (KeyError, TypeError):
        raise ExcitationError("log header has no observer vartheta; pass --vartheta") from None


def _cmd_simulate(args) -> int:
    try:
        scenario = parse_scenario(args.scenario.read_bytes())
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(scenario, args.out, args.jobs)
    except ExcitationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def _cmd_excitation(args) -> int:
    try:
        tl = TrajectoryLog.from_csv(args.log)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        vartheta = args.vartheta if args.vartheta is not None else _vartheta_from_header(tl)
        rs = RegressorSeries.from_log(tl, vartheta)
        if args.mode == "pe":
            if args.T is None or args.mu is None:
                raise ExcitationError("--mode pe needs --T and --mu")
            res = check_pe(rs, args.T, args.mu, args.stride)
            n = int((rs.span[1] - rs.span[0]) // args.T)
            report = interval_excitation(rs, [(rs.span[0] + k * args.T, args.T) for k in range(n)])
            print(json.dumps({"satisfied": res.satisfied, "worst_window": [res.worst.t_start,
                              res.worst.t_end], "worst_lambda_min": res.worst.lambda_min}))
        elif args.mode == "intervals":
            if not args.windows:
                raise ExcitationError("--mode intervals needs --windows")
            report = interval_excitation(rs, args.windows)
        else:
            if not args.partition:
                raise ExcitationError("--mode conservative needs --partition")
            report = conservative_check(rs, args.partition)
    except ExcitationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or args.log.with_name(args.log.stem + f"_excitation_{args.mode}.csv")
    try:
        report.write_csv(out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(out)
    return EXIT_OK


def _cmd_plot(args) -> int:
    try:
        manifest = json.loads(args.manifest.read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    base = args.manifest.parent
    logs = {f"k1={r['k1']:g}": base / r["log"] for r in manifest["runs"]
            if r.get("diverged_at") is None}
    vartheta = 100.0
    if logs:
        try:
            vartheta = _vartheta_from_header(TrajectoryLog.from_csv(next(iter(logs.values()))))
        except ExcitationError:
            pass
    try:
        text = emit_plot_script(logs, args.figure, vartheta=vartheta, pe_window=args.pe_window,
                                relative_to=args.out.parent if args.out else None)
    except (KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return {"simulate": _cmd_simulate, "analyze-excitation": _cmd_excitation,
            "plot": _cmd_plot}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
