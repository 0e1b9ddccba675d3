"""Counter-based deterministic random streams.

Every random decision in the library draws from a stateless hash of
(seed, stream id, counter index), so results never depend on evaluation
order, chunking or thread count.  The hash is the SplitMix64 finalizer
applied to ``key ^ (index * GOLDEN)`` where ``key`` mixes seed and stream.

Uniforms are mapped to the open interval (0, 1): ``((h >> 11) + 0.5) * 2**-53``,
which keeps ``log(u)`` finite.
"""

import numpy as np

from . import _backend

_MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_STREAM_SALT = 0xA24BAED4963EE407

# Stream ids used across the library; distinct ids decorrelate samplers
# that share a user-facing seed.
STREAM_BOX_SAMPLE = 1
STREAM_RANDOM_SAMPLE = 2
STREAM_FPS_START = 3


def _mix64(x: int) -> int:
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D4A08C2E8C54E5) & _MASK64
    return x ^ (x >> 31)


def stream_key(seed: int, stream: int) -> int:
    """64-bit key identifying one (seed, stream) uniform sequence."""
    return _mix64((seed & _MASK64) ^ ((stream * _STREAM_SALT) & _MASK64))


def uniforms(seed: int, stream: int, count: int, start: int = 0) -> np.ndarray:
    """``count`` uniforms in (0,1) at counter positions start..start+count-1."""
    if count < 0:
        raise ValueError("count must be non-negative")
    return _backend.kernels().hash_uniforms(stream_key(seed, stream), start, count)


def uniform_at(seed: int, stream: int, index: int) -> float:
    """Single uniform at one counter position."""
    return float(uniforms(seed, stream, 1, start=index)[0])
