"""On-disk formats: binary f64 matrices and the tagged edge-list dump."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

__all__ = [
    "MATRIX_MAGIC",
    "write_matrix",
    "read_matrix",
    "write_graph_dump",
    "read_graph_dump",
]

#: 8-byte magic prefix of the binary matrix format
MATRIX_MAGIC = b"PXRGMAT1"


def write_matrix(path, M: np.ndarray) -> None:
    """magic (8 bytes) + u32 rows + u32 cols, then row-major f64 LE."""
    M = np.ascontiguousarray(M, dtype="<f8")
    if M.ndim != 2:
        raise ValueError("only 2-D matrices are dumped")
    rows, cols = M.shape
    with open(path, "wb") as fh:
        fh.write(MATRIX_MAGIC)
        fh.write(struct.pack("<II", rows, cols))
        fh.write(M.tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MATRIX_MAGIC:
            raise ValueError(f"bad matrix magic {magic!r} in {path}")
        rows, cols = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(rows * cols * 8), dtype="<f8")
    if data.size != rows * cols:
        raise ValueError(f"truncated matrix file {path}")
    return data.reshape(rows, cols).copy()


def write_graph_dump(path, sample) -> None:
    """Header ``n d`` then one ``i j tag`` line per union edge.

    Tags: G geometric only, E ER only, B both layers.  Edges are listed
    once as i < j in ascending (i, j) order.
    """
    n, d = sample.n, sample.d
    key_geo = sample.edges_geo.astype(np.int64)
    key_er = sample.edges_er.astype(np.int64)
    kg = key_geo[:, 0] * n + key_geo[:, 1]
    ke = key_er[:, 0] * n + key_er[:, 1]
    union = np.union1d(kg, ke)
    in_geo = np.isin(union, kg)
    in_er = np.isin(union, ke)
    with open(path, "w") as fh:
        fh.write(f"{n} {d}\n")
        for key, g, e in zip(union, in_geo, in_er):
            tag = "B" if (g and e) else ("G" if g else "E")
            fh.write(f"{key // n} {key % n} {tag}\n")


def read_graph_dump(path):
    """Parse a dump back into (n, d, edges array, tags list)."""
    text = Path(path).read_text().strip().splitlines()
    n, d = (int(v) for v in text[0].split())
    edges = np.empty((len(text) - 1, 2), dtype=np.int32)
    tags = []
    for k, line in enumerate(text[1:]):
        i, j, tag = line.split()
        edges[k] = (int(i), int(j))
        tags.append(tag)
    return n, d, edges, tags
