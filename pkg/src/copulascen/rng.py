"""Counter-based random streams keyed by ``(master_seed, stream_id)``.

Draw ``k`` of row ``i`` in a ``dim``-wide block is raw Philox output number
``i * dim + k`` under the key, so any row range can be produced on its own
and the result never depends on how the work was split across threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.random import Philox

_MASK64 = (1 << 64) - 1
_WORDS_PER_COUNTER = 4  # Philox4x64 yields four uint64 per counter step
_INV_2_53 = 1.0 / 9007199254740992.0


@dataclass(frozen=True)
class SeededRng:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for label in ("master_seed", "stream_id"):
            v = getattr(self, label)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise TypeError(f"{label} must be an integer")
            object.__setattr__(self, label, int(v) & _MASK64)

    def raw(self, offset: int, size: int) -> np.ndarray:
        """``size`` raw 64-bit words starting at absolute position ``offset``."""
        if offset < 0 or size < 0:
            raise ValueError("offset and size must be non-negative")
        bg = Philox(key=np.array([self.master_seed, self.stream_id], dtype=np.uint64))
        skip, lead = divmod(offset, _WORDS_PER_COUNTER)
        if skip:
            bg.advance(skip)
        return bg.random_raw(lead + size)[lead:]

    def uniforms(self, count: int, dim: int, start: int = 0) -> np.ndarray:
        """Rows ``start .. start+count-1`` of a ``dim``-wide matrix of draws in (0, 1).

        Each draw uses the top 53 bits of a raw word mapped to the cell
        midpoint ``(k + 0.5) / 2**53``, so 0 and 1 are never produced.
        """
        raw = self.raw(start * dim, count * dim)
        u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
        return u.reshape(count, dim)

    def spawn(self, stream_id: int) -> "SeededRng":
        return SeededRng(self.master_seed, stream_id)


DEFAULT_BLOCK_ROWS = 32768


def map_row_blocks(fn, count: int, threads: int = 1, block_rows: int = DEFAULT_BLOCK_ROWS):
    """Evaluate ``fn(start, n)`` over consecutive row blocks and stack the results.

    ``fn`` must compute each row independently of the others; the output is
    then identical for every ``threads`` and ``block_rows`` setting.
    """
    if count < 1:
        raise ValueError("count must be a positive integer")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    starts = list(range(0, count, block_rows))
    sizes = [min(block_rows, count - s) for s in starts]
    if threads == 1 or len(starts) == 1:
        parts = [fn(s, n) for s, n in zip(starts, sizes)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, starts, sizes))
    return np.concatenate(parts, axis=0)
