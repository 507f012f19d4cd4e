"""Deterministic seed tree and buffered normal streams.

Every path owns independent substreams keyed by (master seed, path index,
purpose), so ensembles are reproducible regardless of batching or worker
count.  Normal draws are consumed sequentially from fixed-size blocks; any
runner that consumes pairs in step order sees the same sequence.
"""

from __future__ import annotations

import numpy as np

BLOCK = 4096

NOISE = 0
UNIFORM = 1
AUX = 2


def substream(master_seed: int, path_index: int, purpose: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(master_seed),
                                 spawn_key=(int(path_index), int(purpose)))
    return np.random.Generator(np.random.PCG64(seq))


class NormalStream:
    """Sequential standard-normal stream for a single path."""

    def __init__(self, gen: np.random.Generator, block: int = BLOCK):
        self._gen = gen
        self._block = block
        self._buf = gen.standard_normal(block)
        self._pos = 0

    def pair(self) -> tuple[float, float]:
        if self._pos + 2 > self._block:
            self._buf = self._gen.standard_normal(self._block)
            self._pos = 0
        v0 = self._buf[self._pos]
        v1 = self._buf[self._pos + 1]
        self._pos += 2
        return float(v0), float(v1)


class NormalBatch:
    """Lockstep pair draws for a batch of paths, one substream per path.

    Consumption per path is identical to NormalStream, so batch width never
    changes any path's noise.
    """

    def __init__(self, gens: list[np.random.Generator], block: int = BLOCK):
        self._gens = gens
        self._block = block
        n = len(gens)
        self._buf = np.empty((n, block))
        for i, g in enumerate(gens):
            self._buf[i] = g.standard_normal(block)
        self._pos = np.zeros(n, dtype=np.int64)

    def pairs(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pos = self._pos
        # common case: every path consumes in lockstep at the same cursor
        if idx.size == pos.size:
            p0 = pos[0]
            if p0 + 2 <= self._block and (pos == p0).all():
                v0 = self._buf[:, p0].copy()
                v1 = self._buf[:, p0 + 1].copy()
                pos += 2
                return v0, v1
        need = pos[idx] + 2 > self._block
        for i in idx[need]:
            self._buf[i] = self._gens[i].standard_normal(self._block)
            pos[i] = 0
        p = pos[idx]
        v0 = self._buf[idx, p]
        v1 = self._buf[idx, p + 1]
        pos[idx] = p + 2
        return v0, v1

    def compact(self, keep: np.ndarray) -> None:
        self._buf = self._buf[keep]
        self._pos = self._pos[keep]
        self._gens = [self._gens[int(i)] for i in keep]
