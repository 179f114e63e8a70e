"""Counter-based random streams, one per trajectory.

Each trajectory owns a 64-bit key derived from ``(master_seed, index)``.
Draw number ``n`` of that trajectory is a splitmix64 hash of
``key + n * golden``, so a trajectory sees the same numbers whether it is
simulated alone or inside a batch of any size, on any worker.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def trajectory_keys(master_seed: int, indices) -> np.ndarray:
    seed = np.asarray([master_seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = _mix(seed + _GOLDEN)
        return _mix(base ^ _mix(idx * _GOLDEN + np.uint64(1)))


class TrajectoryStreams:
    """Batch of per-trajectory streams with a ``numpy.random.Generator``-like API.

    Every call consumes the same number of draws from every stream, so the
    row for trajectory ``i`` only depends on ``(master_seed, i)`` and on the
    sequence of calls made.
    """

    def __init__(self, master_seed: int, indices):
        self.indices = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        self.keys = trajectory_keys(master_seed, self.indices)
        self.counter = 0

    def __len__(self):
        return len(self.keys)

    def _raw(self, n: int) -> np.ndarray:
        ctr = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return _mix(self.keys[:, None] + ctr[None, :] * _GOLDEN)

    def _shape(self, size):
        if size is None:
            return (len(self),)
        size = (size,) if np.isscalar(size) else tuple(size)
        if size[0] != len(self):
            raise ValueError(f"leading size {size[0]} does not match {len(self)} streams")
        return size

    def random(self, size=None) -> np.ndarray:
        """Uniform draws on [0, 1); row ``i`` belongs to trajectory ``indices[i]``."""
        shape = self._shape(size)
        n = int(np.prod(shape[1:], dtype=np.int64))
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) * _INV53
        return u.reshape(shape)

    def standard_normal(self, size=None) -> np.ndarray:
        shape = self._shape(size)
        n = int(np.prod(shape[1:], dtype=np.int64))
        u = self.random((len(self), 2 * n))
        r = np.sqrt(-2.0 * np.log1p(-u[:, :n]))
        z = r * np.cos(2.0 * np.pi * u[:, n:])
        return z.reshape(shape)

    def subset(self, rows) -> "TrajectoryStreams":
        out = object.__new__(TrajectoryStreams)
        out.indices = self.indices[rows]
        out.keys = self.keys[rows]
        out.counter = self.counter
        return out
