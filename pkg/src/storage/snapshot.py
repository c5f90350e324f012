"""
Binary field snapshots.

Layout (little-endian): magic b"ANTF", uint32 version = 1, uint32 nx,
uint32 ny, float64 t, then nx*ny float64 values row-major (j outer, i inner).
"""

from pathlib import Path
from typing import Optional, Tuple, Union
import struct
import numpy as np
from loguru import logger

from src.mesh.grid import Field, Grid
from src.solvers.errors import SnapshotFormatError

MAGIC = b"ANTF"
VERSION = 1
HEADER = struct.Struct("<4sIIId")


#Write one field with its time stamp
def write_snapshot(f: Field, t: float, path: Union[str, Path]) -> None:
    path = Path(path)
    header = HEADER.pack(MAGIC, VERSION, f.grid.nx, f.grid.ny, float(t))
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(header + payload)
    except OSError as e:
        logger.error(f"Failed to write snapshot {path}: {e}")
        raise OSError(f"cannot write snapshot '{path}': {e.strerror or e}") from e
    logger.debug(f"Wrote snapshot {path} (t = {t:.6e})")


#Read a snapshot; the grid supplies the extents (the file only stores cell counts)
def read_snapshot(path: Union[str, Path], grid: Optional[Grid] = None) -> Tuple[Field, float]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise OSError(f"cannot read snapshot '{path}': {e.strerror or e}") from e

    if len(data) < HEADER.size:
        raise SnapshotFormatError(f"file too short for a header ({len(data)} bytes)", str(path))
    magic, version, nx, ny, t = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}", str(path))
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported format version {version}", str(path))
    expected = HEADER.size + 8 * nx * ny
    if len(data) != expected:
        raise SnapshotFormatError(f"expected {expected} bytes for {nx}x{ny}, found {len(data)}", str(path))

    if grid is None:
        grid = Grid(nx, ny, 1.0, 1.0)
    elif (grid.nx, grid.ny) != (nx, ny):
        raise SnapshotFormatError(f"snapshot is {nx}x{ny}, grid is {grid.nx}x{grid.ny}", str(path))
    values = np.frombuffer(data, dtype="<f8", offset=HEADER.size).reshape(ny, nx)
    return Field(grid, values), t
