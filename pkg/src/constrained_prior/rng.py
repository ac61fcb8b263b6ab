"""Counter-based random streams.

Every variate is addressed by ``(seed, stream_id, lane, row, column)``.  The
``(seed, stream_id)`` pair is the 128-bit key of a Philox4x64 generator, and
``(row, lane)`` selects the counter block, so a row can be regenerated on its
own without replaying anything before it.  Lanes separate unrelated uses
(e.g. the standard-normal coordinates vs. the local scales of one draw).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = ["RngStream", "LANE_Z", "LANE_LOCAL", "LANE_GLOBAL", "LANE_SLAB", "LANE_DATA"]

_U64 = 1 << 64

LANE_Z = 0
LANE_LOCAL = 1
LANE_GLOBAL = 2
LANE_SLAB = 3
LANE_DATA = 4


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < _U64:
                raise ValueError(f"{name} must be an integer in [0, 2**64), got {v!r}")

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)

    def raw(self, start: int, rows: int, width: int, lane: int = LANE_Z) -> np.ndarray:
        """Raw 64-bit words, shape ``(rows, width)``; row ``r`` belongs to index ``start + r``."""
        if rows < 0 or width < 1 or start < 0:
            raise ValueError("need start >= 0, rows >= 0, width >= 1")
        blocks = -(-width // 4)
        if (start + rows) * blocks >= _U64:
            raise ValueError("row index exceeds the counter space")
        if rows == 0:
            return np.empty((0, width), dtype=np.uint64)
        bitgen = np.random.Philox(
            key=np.array([self.seed, self.stream_id], dtype=np.uint64),
            counter=np.array([start * blocks, lane, 0, 0], dtype=np.uint64),
        )
        words = bitgen.random_raw(rows * blocks * 4).reshape(rows, blocks * 4)
        return words[:, :width]

    def uniform(self, start: int, rows: int, width: int, lane: int = LANE_Z) -> np.ndarray:
        """Uniforms on the open interval (0, 1), 53-bit resolution."""
        x = self.raw(start, rows, width, lane) >> np.uint64(11)
        return (x.astype(float) + 0.5) * 2.0**-53

    def normal(self, start: int, rows: int, width: int, lane: int = LANE_Z) -> np.ndarray:
        """Standard normals by inverse CDF, so each value depends on one word only."""
        return special.ndtri(self.uniform(start, rows, width, lane))
