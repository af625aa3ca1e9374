"""Binary matrix container and CSV tables.

Container layout (little endian)::

    8 bytes   magic  b"NLQMAT\\r\\n"
    u32       format version
    u32       metadata length in bytes
    ...       metadata, UTF-8 JSON with sorted keys (shape, dtype, grids, kind)
    ...       payload, row-major complex128
"""
from __future__ import annotations

import csv
import io as _io
import json
import struct
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .core import FrequencyGrid, InvalidArgument
from .propagator import TransferMatrix

MAGIC = b"NLQMAT\r\n"
VERSION = 1


class ContainerError(InvalidArgument):
    """Malformed or unsupported binary container."""


def _grid_meta(grid: FrequencyGrid) -> Dict[str, float]:
    return {"omega_start": float(grid.omega_start), "delta_omega": float(grid.delta_omega),
            "n_points": int(grid.n_points)}


def _grid_from_meta(meta: Mapping) -> FrequencyGrid:
    return FrequencyGrid(meta["omega_start"], meta["delta_omega"], int(meta["n_points"]))


def encode_matrix(values: np.ndarray, metadata: Optional[Mapping] = None) -> bytes:
    arr = np.ascontiguousarray(values, dtype="<c16")
    meta = dict(metadata or {})
    meta.update(shape=list(arr.shape), dtype="complex128")
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<II", VERSION, len(blob)) + blob + arr.tobytes(order="C")


def decode_matrix(data: bytes) -> Tuple[np.ndarray, Dict]:
    if data[:8] != MAGIC:
        raise ContainerError("not a matrix container (bad magic)")
    if len(data) < 16:
        raise ContainerError("truncated header")
    version, n_meta = struct.unpack("<II", data[8:16])
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    try:
        meta = json.loads(data[16:16 + n_meta].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"corrupt metadata: {exc}") from None
    shape = tuple(meta["shape"])
    payload = data[16 + n_meta:]
    if len(payload) != 16 * int(np.prod(shape)):
        raise ContainerError("payload size does not match shape")
    return np.frombuffer(payload, dtype="<c16").reshape(shape).copy(), meta


def write_matrix(path, values: np.ndarray, metadata: Optional[Mapping] = None) -> None:
    Path(path).write_bytes(encode_matrix(values, metadata))


def read_matrix(path) -> Tuple[np.ndarray, Dict]:
    return decode_matrix(Path(path).read_bytes())


def write_transfer(path, u: TransferMatrix) -> None:
    write_matrix(path, u.matrix, {"object": "transfer_matrix", "kind": u.kind,
                                  "signal_grid": _grid_meta(u.signal_grid),
                                  "idler_grid": _grid_meta(u.idler_grid)})


def read_transfer(path) -> TransferMatrix:
    values, meta = read_matrix(path)
    if meta.get("object") != "transfer_matrix":
        raise ContainerError("container does not hold a transfer matrix")
    return TransferMatrix(values, meta["kind"], _grid_from_meta(meta["signal_grid"]),
                          _grid_from_meta(meta["idler_grid"]))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return f"{complex(v).real!r}{complex(v).imag:+}j"
    return str(v)


def format_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise InvalidArgument("row length does not match header")
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).write_text(format_csv(header, rows), encoding="utf-8")


def read_csv(path) -> Tuple[List[str], List[List[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def metrics_rows(metrics: Mapping[str, object]) -> List[Tuple[str, object]]:
    """Flatten a metrics bundle into (name, value) rows; arrays get indexed names."""
    rows: List[Tuple[str, object]] = []
    for key in sorted(metrics):
        v = metrics[key]
        if isinstance(v, np.ndarray) or isinstance(v, (list, tuple)):
            for k, x in enumerate(np.ravel(v)):
                rows.append((f"{key}[{k}]", x))
        else:
            rows.append((key, v))
    return rows


def write_metrics(path, metrics: Mapping[str, object]) -> None:
    write_csv(path, ("metric", "value"), metrics_rows(metrics))


def grid_table(values: np.ndarray, rows_axis: np.ndarray, cols_axis: np.ndarray,
               names: Tuple[str, str, str]) -> Tuple[Tuple[str, str, str], List[Tuple]]:
    """Long-format table of a real 2D grid (plot-ready)."""
    values = np.asarray(values)
    if values.shape != (rows_axis.size, cols_axis.size):
        raise InvalidArgument("grid axes do not match values")
    out = [(rows_axis[r], cols_axis[c], values[r, c])
           for r in range(rows_axis.size) for c in range(cols_axis.size)]
    return names, out


def write_jsa_magnitude(path, u: TransferMatrix) -> None:
    header, rows = grid_table(np.abs(u.U_si), u.signal_grid.omegas, u.idler_grid.omegas,
                              ("omega_signal", "omega_idler", "abs_U_si"))
    write_csv(path, header, rows)


def write_marginals(path, u: TransferMatrix) -> None:
    m = np.abs(u.U_si) ** 2
    ws, wi = u.signal_grid.omegas, u.idler_grid.omegas
    n = max(ws.size, wi.size)
    ms, mi = m.sum(axis=1), m.sum(axis=0)
    rows = []
    for k in range(n):
        rows.append((ws[k] if k < ws.size else "", ms[k] if k < ws.size else "",
                     wi[k] if k < wi.size else "", mi[k] if k < wi.size else ""))
    write_csv(path, ("omega_signal", "marginal_signal", "omega_idler", "marginal_idler"), rows)
