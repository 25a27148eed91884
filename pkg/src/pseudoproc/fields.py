"""Sampled kernel fields and their snapshot / CSV serialization.

A scalar field stores real values over the centered offset lattice, one
array per ordered time pair (i, j), i < j, of the grid partition.  Vector
fields stack dim component arrays.  Translation invariance of the constant
symbol scope means kernel-type fields are functions of the offset x - y
only; function-type fields (meanings "u", "w") use the same layout with the
lattice coordinate read as x.

Fields are containers filled once at synthesis time and treated as immutable
afterwards; slices may be handed across threads freely.

Snapshot layout (one time slice per file, little-endian):

    int32 dim | int32 N | float64 L | float64 dt | 8 bytes meaning tag
    payload: row-major float64 values (dim * N^dim reals for vector fields)
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .grid import SpaceTimeGrid, analyze

SCALAR_MEANINGS = ("g0", "g", "G", "h", "u")
VECTOR_MEANINGS = ("v0", "v", "w0", "w")

_HEADER = struct.Struct("<ii d d 8s")
PairKey = Tuple[int, int]


class FieldError(ValueError):
    pass


def _check_pair(grid: SpaceTimeGrid, pair: PairKey):
    i, j = pair
    if not 0 <= i < j <= grid.time_steps:
        raise FieldError(
            f"time pair {pair} invalid: kernels need 0 <= i < j <= M "
            "(coincident times are the identity limit, not a stored slice)")


@dataclass
class ScalarKernelField:
    """Real scalar kernel samples per time pair."""

    grid: SpaceTimeGrid
    meaning: str
    values: Dict[PairKey, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.meaning not in SCALAR_MEANINGS:
            raise FieldError(f"unknown scalar meaning {self.meaning!r}")

    def set_slice(self, pair: PairKey, vals: np.ndarray):
        _check_pair(self.grid, pair)
        vals = np.asarray(vals, dtype=float)
        if vals.shape != self.grid.shape():
            raise FieldError(f"slice shape {vals.shape} != grid {self.grid.shape()}")
        self.values[pair] = vals

    def slice(self, pair: PairKey) -> np.ndarray:
        _check_pair(self.grid, pair)
        return self.values[pair]

    def pairs(self):
        return sorted(self.values.keys())

    def gap(self, pair: PairKey) -> float:
        return (pair[1] - pair[0]) * self.grid.dt

    def mass(self, pair: PairKey) -> float:
        """Lattice integral sum(values) * dx^d of one slice."""
        return float(self.slice(pair).sum() * self.grid.cell_volume)

    def spectrum(self, pair: PairKey) -> np.ndarray:
        return analyze(self.grid, self.slice(pair))

    def copy(self) -> "ScalarKernelField":
        return ScalarKernelField(self.grid, self.meaning,
                                 {k: v.copy() for k, v in self.values.items()})


@dataclass
class VectorKernelField:
    """Real vector kernel samples (dim components) per time pair."""

    grid: SpaceTimeGrid
    meaning: str
    values: Dict[PairKey, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.meaning not in VECTOR_MEANINGS:
            raise FieldError(f"unknown vector meaning {self.meaning!r}")

    def set_slice(self, pair: PairKey, vals: np.ndarray):
        _check_pair(self.grid, pair)
        vals = np.asarray(vals, dtype=float)
        want = (self.grid.dim,) + self.grid.shape()
        if vals.shape != want:
            raise FieldError(f"slice shape {vals.shape} != {want}")
        self.values[pair] = vals

    def slice(self, pair: PairKey) -> np.ndarray:
        _check_pair(self.grid, pair)
        return self.values[pair]

    def pairs(self):
        return sorted(self.values.keys())

    def gap(self, pair: PairKey) -> float:
        return (pair[1] - pair[0]) * self.grid.dt

    def max_norm(self, pair: PairKey) -> float:
        """Sup over the lattice of the Euclidean component norm."""
        v = self.slice(pair)
        return float(np.sqrt((v ** 2).sum(axis=0)).max())

    def copy(self) -> "VectorKernelField":
        return VectorKernelField(self.grid, self.meaning,
                                 {k: v.copy() for k, v in self.values.items()})


# ---------------------------------------------------------------------------
# snapshot + CSV mirror
# ---------------------------------------------------------------------------

def write_snapshot(path, grid: SpaceTimeGrid, meaning: str,
                   dt: float, values: np.ndarray):
    tag = meaning.encode("ascii").ljust(8, b"\x00")
    payload = np.ascontiguousarray(values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(grid.dim, grid.points_per_dim,
                              grid.half_extent, dt, tag))
        fh.write(payload.tobytes())


def read_snapshot(path):
    """Returns (dim, N, L, dt, meaning, values) from a snapshot file."""
    with open(path, "rb") as fh:
        dim, N, L, dt, tag = _HEADER.unpack(fh.read(_HEADER.size))
        meaning = tag.rstrip(b"\x00").decode("ascii")
        data = np.frombuffer(fh.read(), dtype="<f8")
    per_slice = N ** dim
    if data.size == per_slice:
        values = data.reshape((N,) * dim)
    elif data.size == dim * per_slice:
        values = data.reshape((dim,) + (N,) * dim)
    else:
        raise FieldError(f"snapshot payload size {data.size} does not match header")
    return dim, N, L, dt, meaning, values.copy()


def write_csv(path, grid: SpaceTimeGrid, values: np.ndarray):
    """Plain-text mirror: offset indices then value(s), dot decimal, C order."""
    vals = np.asarray(values)
    vector = vals.ndim == grid.dim + 1
    comps = vals if vector else vals[None, ...]
    N = grid.points_per_dim
    with open(path, "w", newline="") as fh:
        idx_cols = ",".join(f"i{k}" for k in range(grid.dim))
        val_cols = ",".join(f"value{k}" for k in range(comps.shape[0])) \
            if vector else "value"
        fh.write(f"{idx_cols},{val_cols}\n")
        for flat in range(N ** grid.dim):
            idx = np.unravel_index(flat, grid.shape())
            cells = [str(int(k) - N // 2) for k in idx]
            cells += [repr(float(c[idx])) for c in comps]
            fh.write(",".join(cells) + "\n")


def snapshot_field(field_obj, directory, stem: str):
    """Write every stored pair of a field as snapshot + CSV, return paths."""
    import os
    paths = []
    for (i, j) in field_obj.pairs():
        base = os.path.join(directory, f"{stem}_{i:03d}_{j:03d}")
        write_snapshot(base + ".snap", field_obj.grid, field_obj.meaning,
                       field_obj.gap((i, j)), field_obj.slice((i, j)))
        write_csv(base + ".csv", field_obj.grid, field_obj.slice((i, j)))
        paths.append(base + ".snap")
    return paths
