"""Path bundle serialization: CSV for interoperability, binary for bulk.

CSV layout: a comment header ``# hypescape-paths v1 kind=<kind>`` followed by
``time,value,path_id`` rows, path-major.  Floats are written with repr-style
shortest round-trip formatting, so read(write(x)) == x exactly.

Binary layout (little-endian throughout):

    magic   4 bytes   b"HYPB"
    version u16       1
    kind    u8        1 = bm1d, 2 = radial, 3 = ambient_distance
    flags   u8        reserved, 0
    n_paths u64
    n_times u64
    times   f64 * n_times
    values  f64 * n_paths * n_times, row-major

Increments and seed metadata are not serialized; bundles read back from disk
support every statistic except midpoint refinement.
"""

from __future__ import annotations

import struct
from pathlib import Path as FsPath

import numpy as np

from .errors import ConfigError
from .grids import TimeGrid
from .sde_sim import KIND_AMBIENT, KIND_BM1D, KIND_RADIAL, PathBundle

MAGIC = b"HYPB"
BIN_VERSION = 1

_KIND_CODES = {KIND_BM1D: 1, KIND_RADIAL: 2, KIND_AMBIENT: 3}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}

_CSV_TAG = "# hypescape-paths v1"


def write_paths_csv(path, bundle: PathBundle) -> None:
    """Write a bundle as time,value,path_id rows (path-major)."""
    times = [float(t) for t in bundle.grid.times]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{_CSV_TAG} kind={bundle.kind}\n")
        fh.write("time,value,path_id\n")
        for i in range(bundle.n_paths):
            row = bundle.values[i]
            for t, v in zip(times, row):
                fh.write(f"{t!r},{float(v)!r},{i}\n")


def read_paths_csv(path) -> PathBundle:
    """Read a bundle written by write_paths_csv."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header.startswith(_CSV_TAG):
            raise ConfigError(f"{path}: not a hypescape paths CSV")
        kind = None
        for token in header.split():
            if token.startswith("kind="):
                kind = token[len("kind="):]
        if kind not in _KIND_CODES:
            raise ConfigError(f"{path}: unknown kind in header: {kind!r}")
        columns = fh.readline().strip()
        if columns != "time,value,path_id":
            raise ConfigError(f"{path}: unexpected column header {columns!r}")
        times: list[float] = []
        rows: list[list[float]] = []
        current = -1
        for line in fh:
            t_s, v_s, i_s = line.rstrip("\n").split(",")
            i = int(i_s)
            if i != current:
                if i != current + 1:
                    raise ConfigError(f"{path}: path ids not consecutive at {i}")
                rows.append([])
                current = i
            if current == 0:
                times.append(float(t_s))
            rows[current].append(float(v_s))
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    values = np.asarray(rows, dtype=np.float64)
    grid = TimeGrid(np.asarray(times, dtype=np.float64))
    return PathBundle(grid=grid, values=values, kind=kind)


def write_paths_bin(path, bundle: PathBundle) -> None:
    """Write a bundle in the HYPB binary format."""
    header = MAGIC + struct.pack(
        "<HBBQQ", BIN_VERSION, _KIND_CODES[bundle.kind], 0,
        bundle.n_paths, bundle.grid.n_times,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(bundle.grid.times.astype("<f8").tobytes())
        fh.write(bundle.values.astype("<f8").tobytes())


def read_paths_bin(path) -> PathBundle:
    """Read a bundle written by write_paths_bin."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ConfigError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        head = fh.read(struct.calcsize("<HBBQQ"))
        version, kind_code, _flags, n_paths, n_times = struct.unpack("<HBBQQ", head)
        if version != BIN_VERSION:
            raise ConfigError(f"{path}: unsupported version {version}")
        if kind_code not in _CODE_KINDS:
            raise ConfigError(f"{path}: unknown kind code {kind_code}")
        tbytes = fh.read(8 * n_times)
        if len(tbytes) != 8 * n_times:
            raise ConfigError(f"{path}: truncated times block")
        times = np.frombuffer(tbytes, dtype="<f8").astype(np.float64)
        data = fh.read(8 * n_paths * n_times)
        if len(data) != 8 * n_paths * n_times:
            raise ConfigError(f"{path}: truncated values block")
        values = np.frombuffer(data, dtype="<f8").reshape(n_paths, n_times)
    return PathBundle(grid=TimeGrid(times), values=values.astype(np.float64),
                      kind=_CODE_KINDS[kind_code])


def read_paths(path) -> PathBundle:
    """Dispatch on content: binary if the file starts with the magic."""
    p = FsPath(path)
    with open(p, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_paths_bin(p)
    return read_paths_csv(p)
