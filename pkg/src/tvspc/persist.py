"""Binary serialization of trained models.

Layout (all integers and floats little-endian):

    magic   6 bytes  b"TVSPC1"
    header  u32 n_days, u32 n_vars, u32 k_slices, u32 rank
            f64 confidence, f64 threshold, f64 eps, f64 ucl
    names   n_vars entries of (u16 byte length + UTF-8 bytes)
    records k_slices fixed-size slice records:
            mean f64[J] | std f64[J] | active bitmap ceil(J/8) bytes
            (LSB-first) | loadings f64[J*R] row-major | eigenvalues
            f64[R] | explained f64[J] (padded with 1.0 past n_active)

Fixed-size records make single-slice loads a seek plus one small read
instead of a full deserialization.  Saving is deterministic: equal
models produce identical byte streams, and floats round-trip
bit-exactly.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import CorruptModelError, ModelFormatError, UnsupportedFormatError
from .monitor import ucl_formula
from .preprocess import SliceStats
from .train import SliceModel, TpcaModel

MAGIC = b"TVSPC1"

_FIXED_HEADER = struct.Struct("<4I4d")
_NAME_LEN = struct.Struct("<H")

# orthonormality re-check on load: sample size and tolerance
VALIDATE_SLICES = 100
ORTHO_TOL = 1e-8


def _record_size(n_vars: int, rank: int) -> int:
    bitmap = (n_vars + 7) // 8
    return 24 * n_vars + bitmap + 8 * rank * (n_vars + 1)


def _header_bytes(model: TpcaModel) -> bytes:
    parts = [
        MAGIC,
        _FIXED_HEADER.pack(
            model.n_days,
            model.n_vars,
            model.k_slices,
            model.rank,
            model.confidence,
            model.threshold,
            model.eps,
            model.ucl,
        ),
    ]
    for name in model.variable_names:
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError("variable name too long to serialize: %r" % name)
        parts.append(_NAME_LEN.pack(len(raw)))
        parts.append(raw)
    return b"".join(parts)


def _f64_view(arr: np.ndarray) -> np.ndarray:
    """Little-endian byte view of a contiguous float64 array, one row
    per slice."""
    k = arr.shape[0]
    if arr.dtype.byteorder not in ("<", "=", "|"):
        arr = arr.astype("<f8")
    return arr.view(np.uint8).reshape(k, -1)


def save_model(model: TpcaModel, sink) -> int:
    """Write ``model`` to the binary ``sink`` stream; returns the byte
    count."""
    header = _header_bytes(model)
    bitmap = np.packbits(model.active != 0, axis=1, bitorder="little")
    body = np.concatenate(
        [
            _f64_view(model.means),
            _f64_view(model.stds),
            bitmap,
            _f64_view(model.loadings),
            _f64_view(model.eigenvalues),
            _f64_view(model.explained),
        ],
        axis=1,
    )
    sink.write(header)
    sink.write(body.tobytes())
    return len(header) + body.nbytes


def _parse_header(data: bytes):
    """Header fields plus the offset where slice records begin."""
    if len(data) < len(MAGIC):
        raise ModelFormatError("stream too short for magic", offset=len(data))
    if data[: len(MAGIC)] != MAGIC:
        raise UnsupportedFormatError(
            "bad magic %r, expected %r" % (data[: len(MAGIC)], MAGIC), offset=0
        )
    end = len(MAGIC) + _FIXED_HEADER.size
    if len(data) < end:
        raise ModelFormatError("truncated header", offset=len(data))
    n_days, n_vars, k_slices, rank, confidence, threshold, eps, ucl = (
        _FIXED_HEADER.unpack_from(data, len(MAGIC))
    )
    if min(n_days, n_vars, k_slices, rank) == 0:
        raise ModelFormatError("zero dimension in header", offset=len(MAGIC))
    names = []
    offset = end
    for _ in range(n_vars):
        if len(data) < offset + _NAME_LEN.size:
            raise ModelFormatError("truncated name table", offset=len(data))
        (n,) = _NAME_LEN.unpack_from(data, offset)
        offset += _NAME_LEN.size
        if len(data) < offset + n:
            raise ModelFormatError("truncated name table", offset=len(data))
        try:
            names.append(data[offset : offset + n].decode("utf-8"))
        except UnicodeDecodeError:
            raise ModelFormatError("undecodable variable name", offset=offset)
        offset += n
    return n_days, n_vars, k_slices, rank, confidence, threshold, eps, ucl, tuple(
        names
    ), offset


def _split_record_columns(body: np.ndarray, n_vars: int, rank: int):
    """Slice a (K, record_size) byte matrix into the six field arrays."""
    k = body.shape[0]
    bitmap_w = (n_vars + 7) // 8
    bounds = np.cumsum(
        [8 * n_vars, 8 * n_vars, bitmap_w, 8 * n_vars * rank, 8 * rank, 8 * n_vars]
    )
    if bounds[-1] != body.shape[1]:
        raise AssertionError("record split disagrees with record size")

    def f64(a: int, b: int, shape) -> np.ndarray:
        seg = np.ascontiguousarray(body[:, a:b])
        return np.ascontiguousarray(seg.view("<f8").astype(np.float64, copy=False)).reshape(shape)

    means = f64(0, bounds[0], (k, n_vars))
    stds = f64(bounds[0], bounds[1], (k, n_vars))
    bitmap = np.ascontiguousarray(body[:, bounds[1] : bounds[2]])
    active = np.unpackbits(bitmap, axis=1, count=n_vars, bitorder="little")
    loadings = f64(bounds[2], bounds[3], (k, n_vars, rank))
    eigenvalues = f64(bounds[3], bounds[4], (k, rank))
    explained = f64(bounds[4], bounds[5], (k, n_vars))
    return means, stds, active, loadings, eigenvalues, explained


def _validate(model: TpcaModel) -> None:
    """Re-check invariants that a hand-edited file would break."""
    try:
        expected = ucl_formula(model.n_days, model.rank, model.confidence)
    except Exception as exc:
        raise CorruptModelError("stored control-limit parameters invalid: %s" % exc)
    if abs(expected - model.ucl) > 1e-12:
        raise CorruptModelError(
            "stored ucl %r disagrees with recomputation %r" % (model.ucl, expected)
        )
    k_slices = model.k_slices
    sample = np.unique(
        np.linspace(0, k_slices - 1, min(VALIDATE_SLICES, k_slices)).astype(int)
    )
    eye = np.eye(model.rank)
    for k in sample:
        load = model.loadings[k]
        if not np.all(np.isfinite(load)):
            raise CorruptModelError("non-finite loadings at slice k=%d" % k)
        err = np.abs(load.T @ load - eye).max()
        if err > ORTHO_TOL:
            raise CorruptModelError(
                "loadings at slice k=%d are not orthonormal (error %.3g)" % (k, err)
            )


def load_model(source) -> TpcaModel:
    """Read a model from the binary ``source`` stream and re-validate
    it."""
    data = source.read()
    (
        n_days,
        n_vars,
        k_slices,
        rank,
        confidence,
        threshold,
        eps,
        ucl,
        names,
        offset,
    ) = _parse_header(data)
    record = _record_size(n_vars, rank)
    expected = offset + k_slices * record
    if len(data) != expected:
        raise ModelFormatError(
            "expected %d bytes, got %d" % (expected, len(data)),
            offset=min(len(data), expected),
        )
    body = np.frombuffer(data, dtype=np.uint8, offset=offset).reshape(k_slices, record)
    means, stds, active, loadings, eigenvalues, explained = _split_record_columns(
        body, n_vars, rank
    )
    try:
        model = TpcaModel(
            rank=rank,
            n_days=n_days,
            confidence=confidence,
            threshold=threshold,
            eps=eps,
            ucl=ucl,
            variable_names=names,
            means=means,
            stds=stds,
            active=active,
            nactive=active.sum(axis=1, dtype=np.int32),
            loadings=loadings,
            eigenvalues=eigenvalues,
            explained=explained,
        )
    except ValueError as exc:
        raise CorruptModelError("decoded fields are inconsistent: %s" % exc)
    _validate(model)
    return model


def _read_exact(source, n: int, what: str) -> bytes:
    buf = source.read(n)
    if len(buf) != n:
        raise ModelFormatError("truncated %s" % what, offset=len(buf))
    return buf


def load_slice(source, k: int) -> SliceModel:
    """Seek-load the slice-k model without reading the whole stream.

    Returns the same SliceModel that ``load_model(source).slices[k]``
    would.  ``source`` must be seekable.
    """
    head = source.read(len(MAGIC) + _FIXED_HEADER.size)
    if len(head) < len(MAGIC):
        raise ModelFormatError("stream too short for magic", offset=len(head))
    if head[: len(MAGIC)] != MAGIC:
        raise UnsupportedFormatError(
            "bad magic %r, expected %r" % (head[: len(MAGIC)], MAGIC), offset=0
        )
    if len(head) < len(MAGIC) + _FIXED_HEADER.size:
        raise ModelFormatError("truncated header", offset=len(head))
    n_days, n_vars, k_slices, rank, _, _, _, _ = _FIXED_HEADER.unpack_from(
        head, len(MAGIC)
    )
    if min(n_days, n_vars, k_slices, rank) == 0:
        raise ModelFormatError("zero dimension in header", offset=len(MAGIC))
    if not 0 <= k < k_slices:
        raise IndexError("slice index %d out of range" % k)
    offset = len(head)
    for _ in range(n_vars):
        (n,) = _NAME_LEN.unpack_from(_read_exact(source, _NAME_LEN.size, "name table"))
        _read_exact(source, n, "name table")
        offset += _NAME_LEN.size + n
    record = _record_size(n_vars, rank)
    source.seek(offset + k * record)
    raw = _read_exact(source, record, "slice record")
    body = np.frombuffer(raw, dtype=np.uint8).reshape(1, record)
    means, stds, active, loadings, eigenvalues, explained = _split_record_columns(
        body, n_vars, rank
    )
    na = int(active[0].sum())
    stats = SliceStats(
        k=k,
        mean=tuple(float(v) for v in means[0]),
        std=tuple(float(v) for v in stds[0]),
        active=tuple(bool(v) for v in active[0]),
    )
    return SliceModel(
        k=k,
        stats=stats,
        loadings=loadings[0].copy(),
        eigenvalues=tuple(float(v) for v in eigenvalues[0]),
        explained=tuple(float(v) for v in explained[0, :na]),
    )


def export_jsonl(model: TpcaModel, sink) -> int:
    """Write the model as JSON lines to the text stream ``sink``.

    One header line, then one line per slice (explained cut at
    n_active, as in ``model.slices[k]``).  For inspection and diffing,
    not for loading.  Returns the line count.
    """
    header = {
        "format": MAGIC.decode("ascii"),
        "n_days": model.n_days,
        "n_vars": model.n_vars,
        "k_slices": model.k_slices,
        "rank": model.rank,
        "confidence": model.confidence,
        "threshold": model.threshold,
        "eps": model.eps,
        "ucl": model.ucl,
        "variable_names": list(model.variable_names),
    }
    sink.write(json.dumps(header) + "\n")
    lines = 1
    for k in range(model.k_slices):
        na = int(model.nactive[k])
        row = {
            "k": k,
            "mean": [float(v) for v in model.means[k]],
            "std": [float(v) for v in model.stds[k]],
            "active": [int(v) for v in model.active[k]],
            "loadings": [[float(v) for v in r] for r in model.loadings[k]],
            "eigenvalues": [float(v) for v in model.eigenvalues[k]],
            "explained": [float(v) for v in model.explained[k, :na]],
        }
        sink.write(json.dumps(row) + "\n")
        lines += 1
    return lines
