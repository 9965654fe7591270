"""Counter-based random streams.

All simulators draw from Philox streams keyed by (seed, stage label, path
index).  Philox is counter-based: the k-th variate of a stream is a pure
function of the key and the counter position, so every path can be generated
independently, in any order, on any worker, and the output never depends on
scheduling.  The stage label separates the one-dimensional driver, the radial
scheme, the ambient simulator and the refinement bridge into provably
independent stream families under a single user seed.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import ConfigError

STAGE_BM1D = "bm1d"
STAGE_RADIAL = "radial"
STAGE_AMBIENT = "ambient"
STAGE_BRIDGE = "bridge"

_U64 = np.uint64
_MASK64 = (1 << 64) - 1


def stage_key(seed: int, stage: str) -> int:
    """Derive the 64-bit stream-family key for (seed, stage).

    The stage label is hashed (BLAKE2b, 8-byte digest) and XORed into the
    seed, so distinct labels give independent Philox key prefixes even for
    adjacent seeds.
    """
    digest = hashlib.blake2b(stage.encode("ascii"), digest_size=8).digest()
    tag = int.from_bytes(digest, "little")
    return (int(seed) ^ tag) & _MASK64


def path_generator(seed: int, stage: str, path_index: int) -> np.random.Generator:
    """Generator for one path's stream.

    The Philox key is (stage_key(seed, stage), path_index); the counter
    indexes draws within the path, i.e. the step dimension.
    """
    if path_index < 0:
        raise ConfigError("path_index must be nonnegative")
    key = np.array([stage_key(seed, stage), path_index], dtype=_U64)
    return np.random.Generator(np.random.Philox(key=key))


def bridge_generator(seed: int, path_index: int, interval_index: int) -> np.random.Generator:
    """Generator for one refinement draw, keyed by (path, grid interval).

    Keying by the interval rather than by draw order makes the midpoint
    variate a function of (seed, path, interval) alone, so refinement results
    do not depend on which intervals happen to be flagged.
    """
    if not (0 <= path_index < 2**32 and 0 <= interval_index < 2**32):
        raise ConfigError("path and interval indices must fit in 32 bits")
    lane = (_U64(path_index) << _U64(32)) | _U64(interval_index)
    key = np.array([stage_key(seed, STAGE_BRIDGE), lane], dtype=_U64)
    return np.random.Generator(np.random.Philox(key=key))


def gaussian_increments(seed: int, stage: str, n_paths: int, dts: np.ndarray) -> np.ndarray:
    """Brownian increments, shape (n_paths, len(dts)).

    Row i is sqrt(dts) times standard normals from the stream of path i.
    """
    dts = np.asarray(dts, dtype=np.float64)
    scale = np.sqrt(dts)
    out = np.empty((n_paths, dts.size), dtype=np.float64)
    for i in range(n_paths):
        out[i] = path_generator(seed, stage, i).standard_normal(dts.size)
        out[i] *= scale
    return out
