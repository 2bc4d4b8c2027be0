"""Matrix persistence: the RKMP1 binary format and plain CSV.

Binary layout (little-endian)::

    offset  size  field
    0       5     magic b"RKMP1"
    5       1     element kind b"d" (float64)
    6       2     zero padding
    8       8     rows (uint64)
    16      8     cols (uint64)
    24      8*rows*cols  payload, column-major
"""

import io
import struct
from pathlib import Path

import numpy as np

from rankmap.utils.errors import ContractViolationError, MatrixFormatError

MAGIC = b"RKMP1"
ELEMENT_FLOAT64 = b"d"
HEADER = struct.Struct("<5sc2sQQ")
HEADER_SIZE = HEADER.size
BINARY_SUFFIX = ".rkmp"
CSV_FORMAT = "%.17g"


def _as_storable(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        return M.reshape(-1, 1)
    if M.ndim != 2:
        raise ContractViolationError(
            f"Only matrices and vectors can be stored, got {M.ndim} dimensions"
        )
    return M


def encode_matrix(M: np.ndarray) -> bytes:
    """Serialize a matrix (vectors become n x 1) to RKMP1 bytes."""
    M = _as_storable(M)
    rows, cols = M.shape
    header = HEADER.pack(MAGIC, ELEMENT_FLOAT64, b"\x00\x00", rows, cols)
    return header + M.astype("<f8").tobytes(order="F")


def decode_matrix(data: bytes, path: Path | None = None) -> np.ndarray:
    """Parse RKMP1 bytes.

    Raises:
        MatrixFormatError: On a bad header or a truncated payload
    """
    if len(data) < HEADER_SIZE:
        raise MatrixFormatError(
            f"Header truncated: {len(data)} of {HEADER_SIZE} bytes", len(data), path
        )
    magic, kind, padding, rows, cols = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MatrixFormatError(f"Bad magic string {magic!r}", 0, path)
    if kind != ELEMENT_FLOAT64:
        raise MatrixFormatError(f"Unsupported element kind {kind!r}", 5, path)
    if padding != b"\x00\x00":
        raise MatrixFormatError("Nonzero header padding", 6, path)

    expected = HEADER_SIZE + 8 * rows * cols
    if len(data) < expected:
        raise MatrixFormatError(
            f"Payload truncated: expected {expected} bytes, found {len(data)}", len(data), path
        )
    if len(data) > expected:
        raise MatrixFormatError("Trailing bytes after payload", expected, path)

    payload = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=HEADER_SIZE)
    return payload.reshape((rows, cols), order="F").astype(np.float64)


def write_matrix(path: Path, M: np.ndarray) -> Path:
    """Write ``M`` as RKMP1, or as CSV when the suffix is ``.csv``."""
    path = Path(path)
    if path.suffix == ".csv":
        return write_matrix_csv(path, M)
    path.write_bytes(encode_matrix(M))
    return path


def read_matrix(path: Path) -> np.ndarray:
    """Read a matrix written by :func:`write_matrix`."""
    path = Path(path)
    if path.suffix == ".csv":
        return read_matrix_csv(path)
    return decode_matrix(path.read_bytes(), path)


def write_matrix_csv(path: Path, M: np.ndarray) -> Path:
    """One row per matrix row, ``%.17g`` values, LF endings; 0 x 0 is an empty file."""
    M = _as_storable(M)
    path = Path(path)
    if M.size == 0:
        path.write_bytes(b"")
        return path
    buffer = io.StringIO()
    np.savetxt(buffer, M, fmt=CSV_FORMAT, delimiter=",", newline="\n")
    path.write_bytes(buffer.getvalue().encode("ascii"))
    return path


def read_matrix_csv(path: Path) -> np.ndarray:
    path = Path(path)
    text = path.read_text(encoding="ascii")
    if not text.strip():
        return np.zeros((0, 0))
    try:
        return np.loadtxt(io.StringIO(text), delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as e:
        raise MatrixFormatError(f"Malformed CSV matrix: {e}", 0, path) from e
