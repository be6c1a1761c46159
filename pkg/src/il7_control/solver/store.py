"""Value-table files: a text header followed by a little-endian payload.

The layout is documented in docs/table-format.md.
"""

from __future__ import annotations

import hashlib
import logging
from pathlib import Path

import numpy as np

from ..config import ModelConfig, PatientParams, config_hash
from ..exceptions import ConfigHashMismatchError, CorruptTableError, TableError
from .grid import build_grid
from .table import ValueTable

logger = logging.getLogger("il7-control")

MAGIC = "IL7VT 1"
END = "END"
_DTYPES = {"<f8": np.float64, "<f4": np.float32}


def save_table(table: ValueTable, path: str | Path) -> Path:
    """Write table to path and return the path."""
    path = Path(path).expanduser()
    dtype = "<f4" if table.values.dtype == np.float32 else "<f8"
    payload = np.ascontiguousarray(table.values, dtype=dtype).tobytes()
    header = {
        "rows": table.grid.n_sum,
        "cols": table.grid.n_pr,
        "n_p": table.grid.n_p,
        "n_r": table.grid.n_r,
        "dtype": dtype,
        "config_hash": table.config_hash,
        "iterations": table.iterations,
        "residual": repr(float(table.residual)),
        "converged": str(table.converged).lower(),
        "value_at_delta": repr(float(table.value_at_delta)),
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    lines = [MAGIC, *(f"{key}={value}" for key, value in header.items()), END]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(("\n".join(lines) + "\n").encode("ascii"))
            fh.write(payload)
    except OSError as e:
        raise TableError(f"Cannot write value table {path}: {e}") from e
    logger.info("Saved value table to %s (%d bytes payload)", path, len(payload))
    return path


def read_header(path: str | Path) -> tuple[dict[str, str], bytes]:
    """Parse the header of a table file; returns (header, payload bytes)."""
    path = Path(path).expanduser()
    try:
        raw = path.read_bytes()
    except FileNotFoundError as e:
        raise TableError(f"Value table not found: {path}") from e
    except OSError as e:
        raise TableError(f"Cannot read value table {path}: {e}") from e

    marker = f"\n{END}\n".encode("ascii")
    if not raw.startswith(MAGIC.encode("ascii") + b"\n"):
        raise CorruptTableError(f"{path} is not a value table (bad magic line)")
    cut = raw.find(marker)
    if cut < 0:
        raise CorruptTableError(f"{path} has an unterminated header")
    header: dict[str, str] = {}
    for line in raw[: cut].decode("ascii", errors="replace").splitlines()[1:]:
        key, sep, value = line.partition("=")
        if not sep:
            raise CorruptTableError(f"{path}: malformed header line {line!r}")
        header[key.strip()] = value.strip()
    return header, raw[cut + len(marker):]


def load_table(
    path: str | Path, params: PatientParams, config: ModelConfig
) -> ValueTable:
    """Read a table solved for (params, config); the grid is rebuilt from config."""
    path = Path(path).expanduser()
    header, payload = read_header(path)
    try:
        rows, cols = int(header["rows"]), int(header["cols"])
        dtype = _DTYPES[header["dtype"]]
        expected_hash = header["config_hash"]
        checksum = header["payload_sha256"]
    except (KeyError, ValueError) as e:
        raise CorruptTableError(f"{path}: missing or invalid header field {e}") from e

    wanted = config_hash(params, config)
    if expected_hash != wanted:
        raise ConfigHashMismatchError(
            f"{path} was solved for config {expected_hash[:12]}..., "
            f"this config is {wanted[:12]}..."
        )
    itemsize = np.dtype(dtype).itemsize
    if len(payload) != rows * cols * itemsize:
        raise CorruptTableError(
            f"{path}: payload has {len(payload)} bytes, expected {rows * cols * itemsize}"
        )
    if hashlib.sha256(payload).hexdigest() != checksum:
        raise CorruptTableError(f"{path}: payload checksum mismatch")

    grid = build_grid(config)
    if grid.shape != (rows, cols):
        raise CorruptTableError(
            f"{path}: table is {rows}x{cols} but the config grid is {grid.shape[0]}x{grid.shape[1]}"
        )
    values = np.frombuffer(payload, dtype=np.dtype(dtype).newbyteorder("<")).reshape(rows, cols)
    return ValueTable(
        grid=grid,
        values=values.astype(dtype, copy=True),
        value_at_delta=float(header.get("value_at_delta", "0.0")),
        config_hash=expected_hash,
        iterations=int(header.get("iterations", "0")),
        residual=float(header.get("residual", "nan")),
        converged=header.get("converged", "false") == "true",
    )
