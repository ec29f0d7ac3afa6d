"""Binary checkpoints and loss-history CSV.

Layout (little-endian)::

    b"PCCC"  u16 version
    u16 in_width  u16 out_width
    3 x (u16 count, count x u32 width)     group1, group2, head widths
    float32 parameters, declaration order (weight out x in row-major, bias)

The file must end exactly after the last parameter.
"""

from __future__ import annotations

import csv
import struct

import numpy as np

from ..errors import CorruptCheckpointError, VersionMismatchError
from .model import Architecture, LinearLayer, PcccModel

MAGIC = b"PCCC"
VERSION = 1


def save_model(path, model: PcccModel) -> None:
    arch = model.arch
    buf = bytearray(MAGIC)
    buf += struct.pack("<HHH", VERSION, arch.in_width, arch.out_width)
    for widths in (arch.group1, arch.group2, arch.head):
        buf += struct.pack(f"<H{len(widths)}I", len(widths), *widths)
    for p in model.parameters():
        buf += np.ascontiguousarray(p, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(buf)


def load_model(path) -> PcccModel:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 10 or data[:4] != MAGIC:
        raise CorruptCheckpointError(f"{path}: not a checkpoint")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {VERSION}")
    in_w, out_w = struct.unpack_from("<HH", data, 6)
    off = 10
    groups = []
    try:
        for _ in range(3):
            (count,) = struct.unpack_from("<H", data, off)
            off += 2
            groups.append(struct.unpack_from(f"<{count}I", data, off))
            off += 4 * count
        arch = Architecture(in_w, *groups, out_w)
    except (struct.error, ValueError) as exc:
        raise CorruptCheckpointError(f"{path}: bad architecture header ({exc})") from None
    shapes = arch.layer_shapes()
    need = off + 4 * sum(o * i + o for o, i in shapes)
    if len(data) != need:
        raise CorruptCheckpointError(f"{path}: {len(data)} bytes, expected {need}")
    layers = []
    for o, i in shapes:
        w = np.frombuffer(data, dtype="<f4", count=o * i, offset=off).reshape(o, i)
        off += 4 * o * i
        b = np.frombuffer(data, dtype="<f4", count=o, offset=off)
        off += 4 * o
        layers.append(LinearLayer(w.astype(np.float32), b.astype(np.float32)))
    if not all(np.all(np.isfinite(l.weight)) and np.all(np.isfinite(l.bias)) for l in layers):
        raise CorruptCheckpointError(f"{path}: non-finite parameters")
    return PcccModel(arch, layers, trained=True)


def write_history(path, history) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["epoch", "mean_loss"])
        for epoch, loss in enumerate(history, start=1):
            w.writerow([epoch, repr(float(loss))])


def read_history(path) -> list[float]:
    with open(path, newline="") as f:
        return [float(row["mean_loss"]) for row in csv.DictReader(f)]
