"""Timing comparison of the compiled and pure-Python kernel backends.

Both backends are bit-identical in output (the parity tests assert
that), so this script measures nothing but the speed gap.  The kernel
functions are swapped on ``tvspc._backend`` in place, which routes the
real public code paths (train, monitor, eigendecomposition) through
either implementation.

Usage:
    python3 benchmarks/bench_backends.py [--slices 7200] [--repeats 1]
"""

import argparse
import contextlib
import time

import numpy as np

from tvspc import (
    Observation,
    default_scenario,
    generate_day,
    generate_noc,
    monitor_series,
    symmetric_eigen,
    train,
)
from tvspc import _backend, _pycore

KERNELS = ("jacobi_eigh", "column_stats", "train_slices", "score_points")


@contextlib.contextmanager
def backend(impl):
    saved = [getattr(_backend, name) for name in KERNELS]
    for name in KERNELS:
        setattr(_backend, name, getattr(impl, name))
    try:
        yield
    finally:
        for name, fn in zip(KERNELS, saved):
            setattr(_backend, name, fn)


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def build_stages(args):
    spec = default_scenario(i_days=args.days, seed=args.seed)
    tensor = generate_noc(spec, args.slices)
    model = train(tensor)
    day = generate_day(spec, args.slices, args.days)
    obs = [Observation(k=k, x=tuple(row)) for k, row in enumerate(day.matrix)]

    rng = np.random.default_rng(args.seed)
    mats = []
    for _ in range(args.matrices):
        a = rng.standard_normal((args.vars, args.vars))
        mats.append((a + a.T) / 2.0)

    return [
        (
            "train %d x %d x %d" % (args.days, args.slices, args.vars),
            lambda: train(tensor),
        ),
        (
            "monitor %d points" % args.slices,
            lambda: monitor_series(model, obs),
        ),
        (
            "eigh %dx%d x %d" % (args.vars, args.vars, args.matrices),
            lambda: [symmetric_eigen(m) for m in mats],
        ),
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="compare the compiled and pure-Python kernel backends"
    )
    parser.add_argument("--slices", type=int, default=7200)
    parser.add_argument("--days", type=int, default=12)
    parser.add_argument("--vars", type=int, default=7)
    parser.add_argument("--matrices", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=1)
    parser.add_argument("--seed", type=int, default=20210601)
    args = parser.parse_args(argv)

    try:
        from tvspc import _core
    except ImportError:
        _core = None

    stages = build_stages(args)
    print("active backend at import: %s" % _backend.BACKEND_NAME)
    if _core is None:
        print("compiled extension not built; timing the python backend only")
        for name, fn in stages:
            with backend(_pycore):
                print("%-28s %8.3f s" % (name, best_of(fn, args.repeats)))
        return 0

    print("%-28s %10s %10s %9s" % ("stage", "python", "compiled", "speedup"))
    for name, fn in stages:
        with backend(_pycore):
            t_py = best_of(fn, args.repeats)
        with backend(_core):
            t_c = best_of(fn, args.repeats)
        print(
            "%-28s %8.3f s %8.3f s %8.1fx" % (name, t_py, t_c, t_py / t_c)
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
