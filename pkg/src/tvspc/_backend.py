"""Kernel backend selection, resolved once at import time.

The compiled extension (``tvspc._core``) is preferred; the pure-Python
module (``tvspc._pycore``) is the fallback.  Both expose the same four
kernels with identical numerical behavior, so the choice affects speed
only.  Set ``TVSPC_BACKEND=python`` or ``TVSPC_BACKEND=c`` to force one
side, e.g. for parity tests or benchmarks.
"""

from __future__ import annotations

import os

from . import _pycore

_forced = os.environ.get("TVSPC_BACKEND", "").strip().lower()

if _forced == "python":
    impl = _pycore
elif _forced == "c":
    from . import _core as impl
elif _forced:
    raise ValueError(
        "TVSPC_BACKEND must be 'c' or 'python', got %r" % _forced
    )
else:
    try:
        from . import _core as impl
    except ImportError:
        impl = _pycore

BACKEND_NAME: str = impl.BACKEND_NAME
jacobi_eigh = impl.jacobi_eigh
column_stats = impl.column_stats
train_slices = impl.train_slices
score_points = impl.score_points
