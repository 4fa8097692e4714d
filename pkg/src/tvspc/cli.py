"""Command-line surface: train, monitor, diagnose, simulate.

Exit codes: 0 success (an out-of-control process is still a successful
monitoring run), 1 data or numeric errors, 2 bad arguments.  All
randomness flows from explicit seeds, and every output (CSV, SVG,
model file, manifest) is deterministic for a given command line.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from datetime import date, timedelta

import numpy as np

from . import synthgen
from .charts import contribution_chart, t2_chart
from .diagnose import contributions, detect_events
from .errors import EmptyInputError, TvspcError, UnfillableError
from .ingest import (
    SECONDS_PER_DAY,
    LogSchema,
    _fill_column,
    fill_and_assemble,
    grid_day,
    header_names,
    parse_log,
    record_day,
    record_second,
    write_log_csv,
)
from .monitor import Observation, monitor_series
from .persist import load_model, save_model
from .train import DEFAULT_CONFIDENCE, DEFAULT_THRESHOLD, train

__all__ = ["build_parser", "main"]


# ---------------------------------------------------------------- arguments

def _fraction(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("not a number: %r" % text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("must be strictly between 0 and 1")
    return v


def _iso_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError("not an ISO date: %r" % text)


def _tz_offset(text: str) -> timedelta:
    """Fixed offsets like 'Z', '+05:30' or '-04:00'."""
    if text in ("Z", "z"):
        return timedelta(0)
    if len(text) == 6 and text[0] in "+-" and text[3] == ":":
        try:
            hours, minutes = int(text[1:3]), int(text[4:6])
        except ValueError:
            raise argparse.ArgumentTypeError("bad offset: %r" % text)
        if hours > 23 or minutes > 59:
            raise argparse.ArgumentTypeError("offset out of range: %r" % text)
        delta = timedelta(hours=hours, minutes=minutes)
        return -delta if text[0] == "-" else delta
    raise argparse.ArgumentTypeError("expected Z or +HH:MM / -HH:MM, got %r" % text)


def _day_seconds(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("not an integer: %r" % text)
    if not 1 <= v <= SECONDS_PER_DAY:
        raise argparse.ArgumentTypeError("must be in [1, %d]" % SECONDS_PER_DAY)
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("not an integer: %r" % text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _fault_spec(text: str) -> synthgen.FaultSpec:
    """Parse kind:var:start:dur:mag, e.g. spike:0:43200:60:8."""
    parts = text.split(":")
    if len(parts) != 5:
        raise argparse.ArgumentTypeError(
            "expected kind:var:start:dur:mag, got %r" % text
        )
    kind = parts[0]
    if kind not in synthgen.FAULT_KINDS:
        raise argparse.ArgumentTypeError(
            "kind must be one of %s" % ", ".join(synthgen.FAULT_KINDS)
        )
    try:
        var, start, dur = int(parts[1]), int(parts[2]), int(parts[3])
        mag = float(parts[4])
    except ValueError:
        raise argparse.ArgumentTypeError("bad fault numbers in %r" % text)
    if var < 0 or start < 0 or dur < 1:
        raise argparse.ArgumentTypeError("fault indices out of range in %r" % text)
    return synthgen.FaultSpec(
        kind=kind, variable=var, start_k=start, duration=dur, magnitude=mag
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvspc",
        description="Per-second PCA process monitoring: train, monitor, "
        "diagnose, simulate.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("train", help="fit a model from NOC day logs")
    p.add_argument("--logs", required=True, help="directory of <date>.csv logs")
    p.add_argument(
        "--days", required=True, nargs="+", type=_iso_date, metavar="DATE",
        help="training dates (ISO), one log file each",
    )
    p.add_argument("--out", required=True, help="model file to write (.tvspc)")
    p.add_argument("--confidence", type=_fraction, default=DEFAULT_CONFIDENCE)
    p.add_argument("--threshold", type=_fraction, default=DEFAULT_THRESHOLD)
    p.add_argument("--tz-offset", type=_tz_offset, default=timedelta(0))
    p.add_argument(
        "--day-seconds", type=_day_seconds, default=SECONDS_PER_DAY,
        help="slices per day (default 86400; lower for short test grids)",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("monitor", help="score one day's log against a model")
    p.add_argument("--model", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True, help="monitoring CSV to write")
    p.add_argument("--svg", help="optional T2 chart file")
    p.add_argument("--tz-offset", type=_tz_offset, default=timedelta(0))
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("diagnose", help="contribution diagnosis of a day's log")
    p.add_argument("--model", required=True)
    p.add_argument("--log", required=True)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--at", type=_nonneg_int, metavar="K",
                      help="print the contribution table of second K")
    mode.add_argument("--events", action="store_true",
                      help="group fault seconds into events")
    p.add_argument("--gap", type=_nonneg_int, default=0,
                   help="gap tolerance in seconds when grouping events")
    p.add_argument("--svg", help="optional contribution bar chart (with --at)")
    p.add_argument("--out", help="optional per-second diagnosis CSV")
    p.add_argument("--tz-offset", type=_tz_offset, default=timedelta(0))
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("simulate", help="generate synthetic day logs")
    p.add_argument("--scenario", help="scenario INI file (default: built-in)")
    p.add_argument("--out", required=True, help="directory for <date>.csv logs")
    p.add_argument("--fault", type=_fault_spec,
                   help="kind:var:start:dur:mag, injected into the last day")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--days", type=int, help="override the scenario day count")
    p.add_argument("--day-seconds", type=_day_seconds,
                   help="override slices per day")
    p.set_defaults(func=cmd_simulate)

    return parser


# ---------------------------------------------------------------- helpers

def _read_bytes(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def _load_tvspc(path: str):
    with open(path, "rb") as f:
        return load_model(f)


def _observations_for_log(model, raw: bytes, tz: timedelta):
    """One day's log rows as scored-ready observations.

    Duplicate seconds keep the last record; missing cells are filled
    from the nearest present reading of the same variable.  Raises on
    multi-day logs, on seconds beyond the model grid and on variables
    with no data at all.
    """
    records = parse_log(
        raw, LogSchema(variable_names=model.variable_names, tz_offset=tz)
    )
    days = sorted({record_day(r, tz) for r in records})
    if len(days) > 1:
        raise ValueError(
            "log spans %d days (%s .. %s); monitor one day at a time"
            % (len(days), days[0], days[-1])
        )
    day = days[0]
    by_k: dict[int, tuple[float, ...]] = {}
    for rec in records:
        by_k[record_second(rec, tz)] = rec.values
    ks = sorted(by_k)
    if ks[-1] >= model.k_slices:
        raise ValueError(
            "second-of-day %d is outside the model grid (K=%d)"
            % (ks[-1], model.k_slices)
        )
    mat = np.array([by_k[k] for k in ks], dtype=np.float64)
    mask = np.isnan(mat)
    for j in range(mat.shape[1]):
        if not _fill_column(mat[:, j], mask[:, j]):
            raise UnfillableError(day, model.variable_names[j])
    return day, [Observation(k=k, x=tuple(mat[i])) for i, k in enumerate(ks)]


def _points_header(rank: int) -> str:
    return "k,t2,ucl,fault," + ",".join(
        "score_%d" % (r + 1) for r in range(rank)
    )


def _write_points_csv(path: str, points, rank: int) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(_points_header(rank) + "\n")
        for p in points:
            f.write(
                "%d,%s,%s,%d,%s\n"
                % (
                    p.k,
                    repr(p.t2),
                    repr(p.ucl),
                    int(p.fault),
                    ",".join(repr(s) for s in p.scores),
                )
            )


def _write_diagnosis_csv(path: str, diagnoses, names) -> None:
    header = "k,t2,root_cause," + ",".join(
        "C_%d" % (j + 1) for j in range(len(names))
    )
    with open(path, "w", encoding="utf-8") as f:
        f.write(header + "\n")
        for d in diagnoses:
            f.write(
                "%d,%s,%s,%s\n"
                % (
                    d.k,
                    repr(d.t2),
                    names[d.root_cause],
                    ",".join(repr(c) for c in d.contributions),
                )
            )


# ---------------------------------------------------------------- commands

def cmd_train(args) -> int:
    grids = []
    names = None
    for day in args.days:
        path = os.path.join(args.logs, day.isoformat() + ".csv")
        if not os.path.exists(path):
            print(
                "error: no log for %s (expected %s)" % (day.isoformat(), path),
                file=sys.stderr,
            )
            return 1
        raw = _read_bytes(path)
        records = parse_log(
            raw, LogSchema(variable_names=names, tz_offset=args.tz_offset)
        )
        if names is None:
            names = header_names(raw)
        grids.append(
            grid_day(
                records, day, k_slices=args.day_seconds, tz_offset=args.tz_offset
            )
        )
    tensor = fill_and_assemble(grids, names)
    model = train(
        tensor, confidence=args.confidence, threshold=args.threshold
    )
    with open(args.out, "wb") as f:
        nbytes = save_model(model, f)
    print("days: %d" % model.n_days)
    print("variables: %d" % model.n_vars)
    print("slices per day: %d" % model.k_slices)
    print("retained components: %d" % model.rank)
    mins = model.explained.min(axis=0)
    print(
        "min explained variance: "
        + "  ".join("r=%d %.4f" % (r + 1, mins[r]) for r in range(model.rank))
    )
    print("ucl: %r" % model.ucl)
    print("model: %s (%d bytes)" % (args.out, nbytes))
    return 0


def cmd_monitor(args) -> int:
    model = _load_tvspc(args.model)
    raw = _read_bytes(args.log)
    try:
        _, observations = _observations_for_log(model, raw, args.tz_offset)
    except EmptyInputError:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(_points_header(model.rank) + "\n")
        print("warning: log has no data rows; wrote empty CSV", file=sys.stderr)
        return 0
    points = monitor_series(model, observations)
    _write_points_csv(args.out, points, model.rank)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as f:
            f.write(t2_chart(points))
    faults = [p for p in points if p.fault]
    print("monitored %d seconds: %d faults" % (len(points), len(faults)))
    if faults:
        print("first fault at k=%d (t2=%.4f, ucl=%.4f)"
              % (faults[0].k, faults[0].t2, faults[0].ucl))
    return 0


def cmd_diagnose(args) -> int:
    model = _load_tvspc(args.model)
    raw = _read_bytes(args.log)
    if args.svg and args.at is None:
        print("error: --svg requires --at", file=sys.stderr)
        return 2
    try:
        _, observations = _observations_for_log(model, raw, args.tz_offset)
    except EmptyInputError:
        if args.events:
            if args.out:
                _write_diagnosis_csv(args.out, [], model.variable_names)
            print("0 events")
            return 0
        print("error: --at %d: log has no data rows" % args.at, file=sys.stderr)
        return 2

    if args.at is not None:
        index = {obs.k: i for i, obs in enumerate(observations)}
        if args.at not in index:
            print(
                "error: --at %d: no record at that second (log covers k=%d..%d)"
                % (args.at, observations[0].k, observations[-1].k),
                file=sys.stderr,
            )
            return 2
        obs = observations[index[args.at]]
        diag = contributions(model, obs)
        status = "fault" if diag.t2 > diag.ucl else "ok"
        print("k=%d  t2=%.4f  ucl=%.4f  status=%s"
              % (diag.k, diag.t2, diag.ucl, status))
        width = max(len(n) for n in model.variable_names)
        print("rank  %-*s  contribution" % (width, "variable"))
        for rank_pos, j in enumerate(diag.ranking, start=1):
            print(
                "%4d  %-*s  %12.4f"
                % (rank_pos, width, model.variable_names[j], diag.contributions[j])
            )
        print("sum of contributions: %.4f" % sum(diag.contributions))
        if args.svg:
            with open(args.svg, "w", encoding="utf-8") as f:
                f.write(contribution_chart(diag, model.variable_names))
        if args.out:
            _write_diagnosis_csv(args.out, [diag], model.variable_names)
        return 0

    points = monitor_series(model, observations)
    diagnoses = [contributions(model, obs) for obs in observations]
    if args.out:
        _write_diagnosis_csv(args.out, diagnoses, model.variable_names)
    events = detect_events(points, diagnoses, gap_tolerance=args.gap)
    print("%d events" % len(events))
    for ev in events:
        print(
            "event k=%d..%d  peak t2=%.4f at k=%d  root_cause=%s (%.0f%% of run)"
            % (
                ev.start_k,
                ev.end_k,
                ev.peak_t2,
                ev.peak_k,
                model.variable_names[ev.root_cause],
                100.0 * ev.root_cause_share,
            )
        )
    return 0


def cmd_simulate(args) -> int:
    if args.scenario:
        try:
            spec, k_slices = synthgen.load_scenario(
                _read_bytes(args.scenario).decode("utf-8")
            )
        except OSError as exc:
            print("error: cannot read scenario file: %s" % exc, file=sys.stderr)
            return 2
        except (ValueError, KeyError) as exc:
            print("error: %s" % exc, file=sys.stderr)
            return 2
    else:
        spec = synthgen.default_scenario()
        k_slices = SECONDS_PER_DAY
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    if args.days is not None:
        if args.days < 2:
            print("error: --days must be at least 2", file=sys.stderr)
            return 2
        spec = dataclasses.replace(spec, i_days=args.days)
    if args.day_seconds is not None:
        k_slices = args.day_seconds
    fault = args.fault
    if fault is not None:
        if fault.variable >= spec.n_vars:
            print(
                "error: fault variable %d out of range (J=%d)"
                % (fault.variable, spec.n_vars),
                file=sys.stderr,
            )
            return 2
        if fault.start_k + fault.duration > k_slices:
            print(
                "error: fault window [%d, %d) exceeds the day length %d"
                % (fault.start_k, fault.start_k + fault.duration, k_slices),
                file=sys.stderr,
            )
            return 2
    os.makedirs(args.out, exist_ok=True)
    std = synthgen.noc_std(spec, k_slices) if fault is not None else None
    names = spec.variable_names
    files = []
    for i in range(spec.i_days):
        g = synthgen.generate_day(spec, k_slices, i)
        faulted = fault is not None and i == spec.i_days - 1
        if faulted:
            g = synthgen.inject_fault(g, fault, std[:, fault.variable])
        path = os.path.join(args.out, g.day_id.isoformat() + ".csv")
        with open(path, "w", encoding="utf-8") as f:
            write_log_csv(f, g.day_id, g.matrix, names)
        files.append(
            {"date": g.day_id.isoformat(), "path": path, "faulted": faulted}
        )
    manifest = {
        "scenario": {
            "days": spec.i_days,
            "seed": spec.seed,
            "start_date": spec.start_date.isoformat(),
            "slices_per_day": k_slices,
            "variables": list(names),
        },
        "files": files,
        "fault": None
        if fault is None
        else {
            "kind": fault.kind,
            "variable": fault.variable,
            "variable_name": names[fault.variable],
            "start_k": fault.start_k,
            "end_k": fault.start_k + fault.duration,
            "magnitude": fault.magnitude,
            "date": files[-1]["date"],
        },
    }
    print(json.dumps(manifest, indent=2))
    return 0


# ---------------------------------------------------------------- entry

def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except TvspcError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
