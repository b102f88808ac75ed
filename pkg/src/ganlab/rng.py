"""Deterministic random streams.

Every random draw in this package comes from a Philox4x64 counter-based
bit generator keyed by ``(seed, stream_id)``.  Philox is stable across
platforms and numpy versions, and keying by a second word gives cheap
independent substreams (generator noise, data sampling, weight init, ...)
without any coordination between them.

Normal deviates are produced by Box-Muller applied to the uniform stream,
consuming both outputs of each transform (cos and sin interleaved), so the
stream position is a pure function of how many variates were requested.
"""

from __future__ import annotations

import numpy as np

_U64 = (1 << 64) - 1


def _philox(seed: int, stream: int) -> np.random.Generator:
    key = ((stream & _U64) << 64) | (seed & _U64)
    return np.random.Generator(np.random.Philox(key=key))


class Stream:
    """Stateful uniform/normal stream for one (seed, stream_id) pair."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream)
        self._gen = _philox(self.seed, self.stream_id)

    def uniforms(self, n: int) -> np.ndarray:
        """n float64 samples uniform on [0, 1)."""
        if n < 0:
            raise ValueError("sample count must be >= 0")
        return self._gen.random(n, dtype=np.float64)

    def normals(self, n: int) -> np.ndarray:
        """n standard-normal samples via Box-Muller.

        Draws ceil(n/2) uniform pairs; the cos and sin outputs are
        interleaved and the trailing one is dropped when n is odd.
        """
        if n < 0:
            raise ValueError("sample count must be >= 0")
        if n == 0:
            return np.empty(0, dtype=np.float64)
        m = (n + 1) // 2
        u1 = 1.0 - self.uniforms(m)  # (0, 1]: keeps log() finite
        u2 = self.uniforms(m)
        r = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.empty(2 * m, dtype=np.float64)
        z[0::2] = r * np.cos(angle)
        z[1::2] = r * np.sin(angle)
        return z[:n]
