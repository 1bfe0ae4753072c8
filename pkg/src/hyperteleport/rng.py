"""Counter-based deterministic random numbers (SplitMix64).

Every random draw in this package is a pure function of
``(seed, stream, index, counter)``, with no generator state carried between
calls.  That buys three properties the simulator relies on:

* identical seeds reproduce identical histograms byte-for-byte, across runs
  and platforms;
* shots can be split across workers in any partition and the merged counts
  equal the sequential result, because shot ``i`` always sees the same draws;
* the noiseless limit of the trajectory executor consumes exactly the same
  measurement draws as plain shot sampling (the noise stream is separate).

The mixer is the SplitMix64 finalizer; chaining it once per key component
gives a counter-based generator of the SplittableRandom family.
"""

from __future__ import annotations

import numpy as np

# Draw streams.  Keeping measurement separate from noise is what makes the
# zero-noise trajectory histogram bit-identical to direct sampling.
STREAM_MEASURE = 0
STREAM_NOISE = 1
STREAM_BRANCH = 2

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _mix(z: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """SplitMix64 finalizer: bijective avalanche mix on uint64."""
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _chain(h, k):
    """Fold key component ``k`` into hash state ``h`` (both uint64)."""
    return _mix(h + (np.uint64(1) + np.asarray(k, dtype=np.uint64)) * _GOLDEN)


def _as_u64(seed: int) -> np.uint64:
    # negative seeds are accepted and reduced mod 2^64
    return np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)


def uniforms(seed: int, stream: int, index, counter=0) -> np.ndarray:
    """Uniform doubles in [0, 1) addressed by (seed, stream, index, counter).

    ``index`` and ``counter`` may be scalars or broadcastable integer arrays;
    the result has the broadcast shape.  Draw (i, c) never depends on any
    other draw, so evaluation order and batching are irrelevant.
    """
    with np.errstate(over="ignore"):
        h = _chain(_mix(_as_u64(seed)), np.uint64(stream))
        idx = np.asarray(index, dtype=np.uint64)
        ctr = np.asarray(counter, dtype=np.uint64)
        h = _chain(h, idx)
        h = _chain(h, ctr)
    # top 53 bits -> double with full mantissa resolution
    return (h >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def derive_seed(seed: int, index: int, stream: int = 0) -> int:
    """Deterministic 64-bit sub-seed for sub-task ``index`` of a master seed.

    Used to give each tomography setting (and each sweep repetition) its own
    independent draw universe.
    """
    with np.errstate(over="ignore"):
        h = _chain(_mix(_as_u64(seed)), np.uint64(stream))
        h = _chain(h, np.uint64(int(index)))
    return int(h & _MASK64)
