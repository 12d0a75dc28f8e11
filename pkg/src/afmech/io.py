"""Matrix, trajectory and label-image file formats.

AFM1 binary layout (little endian): ``b"AFM1"``, ``u32 m``, ``u32 n``,
then ``m*n`` float64 values in row-major order. A trajectory file is a
plain concatenation of AFM1 records.
"""

from __future__ import annotations

import io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"AFM1"
_HEADER = struct.Struct("<4sII")
FLOAT_FMT = "%.17g"


class FormatError(ValueError):
    pass


def atomic_write(path, data: bytes | str) -> None:
    """Write via a temp file in the same directory followed by a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x: float) -> str:
    return FLOAT_FMT % x


def encode_afm1(A) -> bytes:
    A = np.ascontiguousarray(A, dtype="<f8")
    if A.ndim != 2:
        raise FormatError("AFM1 stores 2-d matrices only")
    m, n = A.shape
    return _HEADER.pack(MAGIC, m, n) + A.tobytes(order="C")


def decode_afm1(buf: bytes) -> list[np.ndarray]:
    """Decode every AFM1 record in ``buf``."""
    out = []
    pos = 0
    while pos < len(buf):
        if len(buf) - pos < _HEADER.size:
            raise FormatError("truncated AFM1 header")
        magic, m, n = _HEADER.unpack_from(buf, pos)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        pos += _HEADER.size
        nbytes = 8 * m * n
        if len(buf) - pos < nbytes:
            raise FormatError("truncated AFM1 payload")
        A = np.frombuffer(buf, dtype="<f8", count=m * n, offset=pos).reshape(m, n)
        out.append(A.astype(float))
        pos += nbytes
    return out


def write_afm1(path, A) -> None:
    atomic_write(path, encode_afm1(A))


def read_afm1(path) -> np.ndarray:
    records = decode_afm1(Path(path).read_bytes())
    if len(records) != 1:
        raise FormatError(f"expected one AFM1 record, found {len(records)}")
    return records[0]


def write_afm1_stack(path, matrices) -> None:
    atomic_write(path, b"".join(encode_afm1(A) for A in matrices))


def read_afm1_stack(path) -> list[np.ndarray]:
    return decode_afm1(Path(path).read_bytes())


def matrix_to_csv(A) -> str:
    buf = io.StringIO()
    np.savetxt(buf, np.atleast_2d(A), fmt=FLOAT_FMT, delimiter=",")
    return buf.getvalue()


def write_matrix_csv(path, A) -> None:
    atomic_write(path, matrix_to_csv(A))


def read_matrix_csv(path) -> np.ndarray:
    A = np.loadtxt(path, delimiter=",", ndmin=2)
    if not np.all(np.isfinite(A)):
        raise FormatError("non-finite entry in matrix CSV")
    return A


def load_matrix(path) -> np.ndarray:
    """Load a matrix from AFM1 (by magic) or CSV."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_afm1(path)
    return read_matrix_csv(path)


def trajectory_to_csv(times, states) -> str:
    lines = []
    for t, W in zip(times, states):
        row = [fmt(t)] + [fmt(x) for x in np.ravel(W)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def table_to_csv(columns: dict[str, np.ndarray]) -> str:
    names = list(columns)
    cols = [np.asarray(columns[k], dtype=float) for k in names]
    lines = [",".join(names)]
    for row in zip(*cols):
        lines.append(",".join(fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def labels_to_pgm(labels, height: int, width: int, maxval: int) -> str:
    """Plain-text PGM (P2) with one grid row per line."""
    img = np.asarray(labels, dtype=int).reshape(height, width)
    maxval = max(int(maxval), 1)
    lines = ["P2", f"{width} {height}", str(maxval)]
    lines += [" ".join(str(v) for v in row) for row in img]
    return "\n".join(lines) + "\n"


def read_pgm(path) -> np.ndarray:
    tokens = []
    for line in Path(path).read_text().splitlines():
        tokens += line.split("#", 1)[0].split()
    if not tokens or tokens[0] != "P2":
        raise FormatError("not a plain PGM (P2) file")
    width, height, _maxval = map(int, tokens[1:4])
    data = np.array(tokens[4:], dtype=int)
    if data.size != width * height:
        raise FormatError("PGM pixel count mismatch")
    return data.reshape(height, width)
