"""Deterministic counter-based random words (double SplitMix64 mixing).

Every simulated run owns its own substream derived from the experiment seed
and the run index, and every draw within a run is addressed by a counter:

    word(seed, k, t) = mix64(substream_key(seed, k) + GOLDEN * (t + 1))
    substream_key(seed, k) = mix64(seed + GOLDEN * (k + 1))

with mix64 the SplitMix64 finalizer. There is no sequential state at all, so
any subset of runs can be generated independently, in any order or thread
layout, and the stream stays bit-identical for a given seed. The scalar
implementation is the reference; the vectorized one must match it exactly
(uint64 wraparound is the intended arithmetic).

Discrete sampling quantizes exact cumulative probabilities to 64-bit
thresholds, so a sampled index is a pure function of (seed, run, counter)
and the exact table, never of float summation order.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from ._rational import as_fraction
from .errors import ValidationError

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

ALGORITHM = "splitmix64x2"


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer (reference implementation)."""
    z &= MASK64
    z ^= z >> 30
    z = (z * _MIX1) & MASK64
    z ^= z >> 27
    z = (z * _MIX2) & MASK64
    z ^= z >> 31
    return z


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ValidationError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed <= MASK64:
        raise ValidationError(f"seed must fit in 64 bits, got {seed}")
    return seed


def substream_key(seed: int, run_index: int) -> int:
    return mix64((seed + GOLDEN * (run_index + 1)) & MASK64)


def word(seed: int, run_index: int, counter: int = 0) -> int:
    """The counter-th 64-bit word of the run's substream."""
    return mix64((substream_key(seed, run_index) + GOLDEN * (counter + 1)) & MASK64)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return z


def words(seed: int, run_indices: np.ndarray, counter: int = 0) -> np.ndarray:
    """Vectorized ``word`` over an array of run indices. Bit-identical to the
    scalar reference."""
    check_seed(seed)
    k = np.asarray(run_indices, dtype=np.uint64)
    golden = np.uint64(GOLDEN)
    with np.errstate(over="ignore"):
        sub = _mix64_array(np.uint64(seed) + golden * (k + np.uint64(1)))
        out = _mix64_array(sub + golden * np.uint64((counter + 1) & MASK64))
    return out


def uniform01(seed: int, run_indices: np.ndarray, counter: int = 0) -> np.ndarray:
    """Floats in [0, 1) using the top 53 bits of each word."""
    return (words(seed, run_indices, counter) >> np.uint64(11)) * (2.0 ** -53)


def cumulative_thresholds(probabilities: Sequence) -> np.ndarray:
    """64-bit cut points of the exact cumulative distribution.

    Entry i is floor(2^64 * P(index <= i) / total) for i < nbins - 1; a word
    w falls in bin i when thresholds[i-1] <= w < thresholds[i]. Probabilities
    may be Fractions, ints or floats (floats convert verbatim); the total
    must be positive but need not be exactly 1.
    """
    probs = [as_fraction(p) for p in probabilities]
    if not probs:
        raise ValidationError("need at least one probability")
    if any(p < 0 for p in probs):
        raise ValidationError("probabilities must be nonnegative")
    total = sum(probs, Fraction(0))
    if total <= 0:
        raise ValidationError("probabilities must have positive total")
    acc = Fraction(0)
    cuts = []
    top = 1 << 64
    for p in probs[:-1]:
        acc += p
        scaled = acc / total
        cuts.append(min((scaled.numerator << 64) // scaled.denominator, top - 1))
    return np.array(cuts, dtype=np.uint64)


def sample_indices(
    thresholds: np.ndarray, seed: int, run_indices: np.ndarray, counter: int = 0
) -> np.ndarray:
    """Sample one bin index per run from precomputed thresholds."""
    w = words(seed, run_indices, counter)
    return np.searchsorted(thresholds, w, side="right").astype(np.int64)
