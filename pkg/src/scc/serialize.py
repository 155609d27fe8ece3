"""On-disk formats, all little-endian and bit-exact on round trip.

Matrix container (datasets and dictionaries):

    bytes 0..7    magic "SCCMAT01"
    bytes 8..15   p, n as uint32
    then          p*n float64 values, column-major (one sample per column)

Sparse-code container:

    bytes 0..7    magic "SCCSPC01"
    bytes 8..15   m, n as uint32
    per code      count as uint32, then count (uint32 index, float64
                  value) pairs with strictly increasing indices

Metrics go to CSV with columns
``epoch,objective,time_code_s,time_dict_s,mean_support,max_support``;
floats are written with repr so they parse back exactly.  Image input
is 8-bit binary PGM (P5).
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from .core import (
    BadMagic,
    DataSet,
    Dictionary,
    DimensionMismatch,
    EpochStats,
    FormatError,
    NonFinite,
    SparseCode,
    Truncated,
)

MAGIC_MATRIX = b"SCCMAT01"
MAGIC_CODES = b"SCCSPC01"
METRICS_HEADER = "epoch,objective,time_code_s,time_dict_s,mean_support,max_support"

_PAIR_DTYPE = np.dtype([("index", "<u4"), ("value", "<f8")])
assert _PAIR_DTYPE.itemsize == 12

PathLike = Union[str, Path]


# ---------------------------------------------------------------------------
# Matrix container
# ---------------------------------------------------------------------------

def write_matrix(path: PathLike, X: np.ndarray) -> None:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFinite("refusing to write NaN or Inf")
    p, n = arr.shape
    header = MAGIC_MATRIX + struct.pack("<II", p, n)
    payload = np.asfortranarray(arr).astype("<f8", copy=False).tobytes(order="F")
    Path(path).write_bytes(header + payload)


def read_matrix(path: PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise Truncated(f"{path}: shorter than the magic tag")
    if data[:8] != MAGIC_MATRIX:
        raise BadMagic(f"{path}: not a matrix container")
    if len(data) < 16:
        raise Truncated(f"{path}: header cut short")
    p, n = struct.unpack("<II", data[8:16])
    expected = 16 + 8 * p * n
    if len(data) < expected:
        raise Truncated(f"{path}: payload ends early ({len(data)} of {expected} bytes)")
    if len(data) > expected:
        raise FormatError(f"{path}: {len(data) - expected} trailing bytes")
    flat = np.frombuffer(data, dtype="<f8", offset=16)
    arr = np.array(flat.reshape((p, n), order="F"), dtype=np.float64, order="F")
    if not np.isfinite(arr).all():
        raise NonFinite(f"{path}: payload contains NaN or Inf")
    return arr


def write_dataset(path: PathLike, ds: DataSet) -> None:
    write_matrix(path, ds.X)


def read_dataset(path: PathLike, preprocessed: bool = False) -> DataSet:
    """Read a dataset, accepting CSV text as a fallback to the binary form."""
    data = Path(path).read_bytes()
    if data[:8] == MAGIC_MATRIX:
        return DataSet(read_matrix(path), preprocessed=preprocessed)
    return read_dataset_csv(path, preprocessed=preprocessed)


def read_dataset_csv(path: PathLike, preprocessed: bool = False) -> DataSet:
    """Text fallback: one header row, then one sample per line."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if len(lines) < 2:
        raise FormatError(f"{path}: CSV needs a header row and at least one sample")
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        fields = ln.split(",")
        try:
            row = [float(f) for f in fields]
        except ValueError:
            raise FormatError(f"{path}: line {lineno} is not numeric")
        if rows and len(row) != len(rows[0]):
            raise DimensionMismatch(
                f"{path}: line {lineno} has {len(row)} fields, expected {len(rows[0])}"
            )
        rows.append(row)
    X = np.array(rows, dtype=np.float64).T
    if not np.isfinite(X).all():
        raise NonFinite(f"{path}: CSV contains NaN or Inf")
    return DataSet(X, preprocessed=preprocessed)


def write_dictionary(path: PathLike, D: Dictionary) -> None:
    write_matrix(path, D.atoms)


def read_dictionary(path: PathLike) -> Dictionary:
    return Dictionary(read_matrix(path))


# ---------------------------------------------------------------------------
# Sparse-code container
# ---------------------------------------------------------------------------

def write_codes(path: PathLike, codes: Sequence[SparseCode]) -> None:
    if len(codes) == 0:
        raise DimensionMismatch("cannot serialize zero codes (ambient dimension unknown)")
    m = codes[0].m
    parts = [MAGIC_CODES, struct.pack("<II", m, len(codes))]
    for i, code in enumerate(codes):
        if code.m != m:
            raise DimensionMismatch(f"code {i} has ambient {code.m}, expected {m}")
        rec = np.empty(code.nnz, dtype=_PAIR_DTYPE)
        rec["index"] = code.indices
        rec["value"] = code.values
        parts.append(struct.pack("<I", code.nnz))
        parts.append(rec.tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_codes(path: PathLike) -> List[SparseCode]:
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise Truncated(f"{path}: shorter than the magic tag")
    if data[:8] != MAGIC_CODES:
        raise BadMagic(f"{path}: not a sparse-code container")
    if len(data) < 16:
        raise Truncated(f"{path}: header cut short")
    m, n = struct.unpack("<II", data[8:16])
    codes: List[SparseCode] = []
    pos = 16
    for i in range(n):
        if pos + 4 > len(data):
            raise Truncated(f"{path}: code {i} count cut short")
        (count,) = struct.unpack_from("<I", data, pos)
        pos += 4
        end = pos + count * _PAIR_DTYPE.itemsize
        if end > len(data):
            raise Truncated(f"{path}: code {i} entries cut short")
        rec = np.frombuffer(data, dtype=_PAIR_DTYPE, count=count, offset=pos)
        pos = end
        if count and not np.isfinite(rec["value"]).all():
            raise NonFinite(f"{path}: code {i} contains NaN or Inf")
        codes.append(SparseCode(rec["index"].astype(np.int64), rec["value"].copy(), m))
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes")
    return codes


# ---------------------------------------------------------------------------
# Metrics CSV
# ---------------------------------------------------------------------------

def write_metrics_csv(path: PathLike, stats: Sequence[EpochStats]) -> None:
    lines = [METRICS_HEADER]
    for s in stats:
        lines.append(
            f"{s.epoch},{s.objective!r},{s.time_code_update!r},"
            f"{s.time_dict_update!r},{s.mean_support!r},{s.max_support}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_metrics_csv(path: PathLike) -> List[EpochStats]:
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != METRICS_HEADER:
        raise FormatError(f"{path}: missing metrics header")
    out = []
    for ln in lines[1:]:
        fields = ln.split(",")
        if len(fields) != 6:
            raise FormatError(f"{path}: expected 6 columns, got {len(fields)}")
        out.append(
            EpochStats(
                epoch=int(fields[0]),
                objective=float(fields[1]),
                time_code_update=float(fields[2]),
                time_dict_update=float(fields[3]),
                mean_support=float(fields[4]),
                max_support=int(fields[5]),
            )
        )
    return out


# ---------------------------------------------------------------------------
# PGM (binary, 8-bit)
# ---------------------------------------------------------------------------

def _pgm_tokens(data: bytes):
    """Yield whitespace-separated header tokens, skipping # comments."""
    pos = 0
    while pos < len(data):
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
            continue
        if ch == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        yield data[start:pos], pos + 1  # +1 swallows the single delimiter
    return


def read_pgm(path: PathLike) -> np.ndarray:
    """Read an 8-bit binary PGM (P5) image into a uint8 array."""
    data = Path(path).read_bytes()
    tokens = []
    after = 0
    for tok, nxt in _pgm_tokens(data):
        tokens.append(tok)
        after = nxt
        if len(tokens) == 4:
            break
    if not tokens or tokens[0] != b"P5":
        raise BadMagic(f"{path}: not a binary PGM (P5) file")
    if len(tokens) < 4:
        raise Truncated(f"{path}: PGM header cut short")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise FormatError(f"{path}: malformed PGM header")
    if width < 1 or height < 1:
        raise FormatError(f"{path}: bad PGM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise FormatError(f"{path}: only 8-bit PGM supported, maxval={maxval}")
    pixels = data[after : after + width * height]
    if len(pixels) < width * height:
        raise Truncated(f"{path}: pixel data cut short")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(path: PathLike, image: np.ndarray) -> None:
    img = np.asarray(image)
    if img.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D image, got shape {img.shape}")
    img = img.astype(np.uint8)
    height, width = img.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.tobytes())
