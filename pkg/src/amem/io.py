"""Checkpoints, PPM/PGM images and CSV reports.

Checkpoint layout (all integers little-endian)::

    b"AMEM1"  version:u8  depth:u32  dims:(depth+1)*u32
    nonlin_id:u8  nonlin_param:f64  weights:f64[...]

Weights are stored layer by layer from input to output, each matrix row-major.
"""
from __future__ import annotations

import colorsys
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .net import NONLIN_IDS, Net, Nonlin

MAGIC = b"AMEM1"
VERSION = 1
_NONLIN_NAMES = {v: k for k, v in NONLIN_IDS.items()}


class CheckpointError(ValueError):
    pass


def net_to_bytes(net: Net) -> bytes:
    parts = [MAGIC, struct.pack("<BI", VERSION, net.depth),
             struct.pack(f"<{len(net.dims)}I", *net.dims),
             struct.pack("<Bd", NONLIN_IDS[net.nonlin.name], net.nonlin.param)]
    parts += [w.astype("<f8").tobytes() for w in net.weights]
    return b"".join(parts)


def net_from_bytes(raw: bytes) -> Net:
    if len(raw) < 10:
        raise CheckpointError("truncated header")
    if raw[:5] != MAGIC:
        raise CheckpointError(f"bad magic {raw[:5]!r}")
    version, depth = struct.unpack_from("<BI", raw, 5)
    if version != VERSION:
        raise CheckpointError(f"unsupported version {version}")
    off = 10
    head = off + 4 * (depth + 1) + 9
    if depth < 1 or len(raw) < head:
        raise CheckpointError("truncated header")
    dims = list(struct.unpack_from(f"<{depth + 1}I", raw, off))
    off += 4 * (depth + 1)
    nid, param = struct.unpack_from("<Bd", raw, off)
    off += 9
    if nid not in _NONLIN_NAMES:
        raise CheckpointError(f"unknown nonlinearity id {nid}")
    expected = head + 8 * sum(dims[i] * dims[i + 1] for i in range(depth))
    if len(raw) != expected:
        raise CheckpointError(f"length {len(raw)} != expected {expected}")
    weights = []
    for i in range(depth):
        cnt = dims[i] * dims[i + 1]
        w = np.frombuffer(raw, dtype="<f8", count=cnt, offset=off).reshape(dims[i + 1], dims[i])
        weights.append(w.astype(np.float64))
        off += 8 * cnt
    return Net(dims, weights, Nonlin(_NONLIN_NAMES[nid], param))


def save_net(net: Net, path) -> None:
    Path(path).write_bytes(net_to_bytes(net))


def load_net(path) -> Net:
    return net_from_bytes(Path(path).read_bytes())


# --- images ----------------------------------------------------------------------------


def _to_u8(pixels) -> np.ndarray:
    p = np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0)
    return np.rint(p * 255.0).astype(np.uint8)


def ppm_bytes(pixels, h: int, w: int) -> bytes:
    """Binary P6 image from ``h*w*3`` values in ``[0, 1]`` (clamped)."""
    data = _to_u8(pixels).reshape(h, w, 3)
    return f"P6\n{w} {h}\n255\n".encode("ascii") + data.tobytes()


def pgm_bytes(pixels, h: int, w: int) -> bytes:
    data = _to_u8(pixels).reshape(h, w)
    return f"P5\n{w} {h}\n255\n".encode("ascii") + data.tobytes()


def write_ppm(pixels, h: int, w: int, path) -> None:
    Path(path).write_bytes(ppm_bytes(pixels, h, w))


def write_pgm(pixels, h: int, w: int, path) -> None:
    Path(path).write_bytes(pgm_bytes(pixels, h, w))


def palette(n: int) -> np.ndarray:
    """``n`` distinct RGB colors in ``[0, 1]`` spaced by the golden angle in hue."""
    hues = (np.arange(n) * 0.618033988749895) % 1.0
    return np.array([colorsys.hsv_to_rgb(h, 0.65, 0.95) for h in hues]).reshape(n, 3)


def render_labels(labels, n_colors: int, marks: Sequence[tuple[int, int]] = ()) -> np.ndarray:
    """RGB image for a label grid; ``-1`` is black and ``marks`` are white 3x3 dots.

    Row 0 of ``labels`` is drawn at the bottom so the y axis points up.
    """
    labels = np.asarray(labels)
    pal = palette(max(n_colors, 1))
    img = np.zeros(labels.shape + (3,))
    ok = labels >= 0
    img[ok] = pal[labels[ok]]
    h, w = labels.shape
    for r, c in marks:
        img[max(r - 1, 0):r + 2, max(c - 1, 0):c + 2] = 1.0
    return img[::-1]


# --- CSV -------------------------------------------------------------------------------------


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    s = str(v)
    if any(c in s for c in ',"\n') or not s.isascii():
        raise ValueError(f"cannot write {s!r} as a plain ASCII CSV field")
    return s


def csv_text(rows: Iterable, schema: Sequence[str]) -> str:
    lines = [",".join(schema)]
    for row in rows:
        vals = [row[k] for k in schema] if isinstance(row, dict) else list(row)
        if len(vals) != len(schema):
            raise ValueError(f"row has {len(vals)} fields, schema has {len(schema)}")
        lines.append(",".join(format_value(v) for v in vals))
    return "\n".join(lines) + "\n"


def write_csv(rows: Iterable, schema: Sequence[str], path) -> None:
    """Header plus one line per row; reals use 17 significant digits so they parse back exactly."""
    Path(path).write_text(csv_text(rows, schema), encoding="ascii")
