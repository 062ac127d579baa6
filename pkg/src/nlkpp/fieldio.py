"""Binary on-disk format for fields.

Layout (all little-endian): a 16-byte header (8-byte magic, u32 version,
u32 reserved), then dim as u32, per-axis node counts (u32 each), per-axis
extents (two f64 each), then node values as f64 in row-major order. Values
round-trip bit-exactly.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .grid import Field, build_uniform_grid

MAGIC = b"NLKPPFLD"
VERSION = 1
_HEADER = struct.Struct("<8sII")


def write_field(path, field: Field) -> None:
    grid = field.grid
    parts = [_HEADER.pack(MAGIC, VERSION, 0),
             struct.pack("<I", grid.dim),
             struct.pack(f"<{grid.dim}I", *grid.counts)]
    for lo, hi in grid.extents:
        parts.append(struct.pack("<2d", lo, hi))
    parts.append(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_field(path) -> Field:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size + 4:
        raise ValidationError(f"{path}: truncated field file")
    magic, version, _ = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValidationError(f"{path}: not a field file (bad magic {magic!r})")
    if version != VERSION:
        raise ValidationError(f"{path}: unsupported field format version {version}")
    offset = _HEADER.size
    (dim,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    if dim not in (1, 2):
        raise ValidationError(f"{path}: unsupported dimension {dim}")
    if len(raw) < offset + 4 * dim + 16 * dim:
        raise ValidationError(f"{path}: truncated field file")
    counts = struct.unpack_from(f"<{dim}I", raw, offset)
    offset += 4 * dim
    extents = []
    for _ in range(dim):
        lo, hi = struct.unpack_from("<2d", raw, offset)
        offset += 16
        extents.append((lo, hi))
    n = int(np.prod(counts))
    if len(raw) < offset + 8 * n:
        raise ValidationError(f"{path}: truncated field file "
                              f"(expected {n} values)")
    values = np.frombuffer(raw, dtype="<f8", count=n, offset=offset)
    grid = build_uniform_grid(extents, counts)
    return Field(grid, values.copy())
