"""Counter-based deterministic random number generation.

Nothing in this package keeps RNG state.  Every random quantity is a pure
function of a 64-bit seed and a stream position, built on the SplitMix64
generator: output ``k`` of the stream seeded at ``s`` is

    finalize(s + (k + 1) * GOLDEN)       (all arithmetic mod 2**64)

where GOLDEN = 0x9E3779B97F4A7C15 and ``finalize`` is the SplitMix64
avalanche (xor-shift-multiply) round.  Because each output depends only on
(seed, k), any partition of a stream across workers reproduces the serial
result bit for bit.

Child seeds (per replication, per direction, ...) are derived with
:func:`derive`, which folds integer labels into the parent seed one
finalizer round at a time.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _finalize(x):
    """SplitMix64 avalanche round on a uint64 array."""
    z = x.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def _as_seed(seed):
    """Coerce an arbitrary Python int to a 64-bit seed token."""
    return np.uint64(int(seed) & _MASK64)


def bits_at(seed, positions):
    """Raw 64-bit outputs of the SplitMix64 stream at the given positions.

    ``positions`` may be any integer ndarray; the result has the same shape.
    """
    pos = np.asarray(positions, dtype=np.uint64)
    return _finalize(_as_seed(seed) + (pos + np.uint64(1)) * GOLDEN)


def uniform_at(seed, positions):
    """Uniform floats in the open interval (0, 1) at the given stream positions.

    Uses the top 53 bits of each output, offset by half a ulp so neither
    endpoint is ever produced (safe under log and inverse-CDF transforms).
    """
    bits = bits_at(seed, positions)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def derive(seed, *labels):
    """Derive a child seed by folding integer labels into ``seed``.

    Distinct label tuples give independent-looking streams; the map is
    deterministic, so e.g. ``derive(base, N, r)`` is the reproducible seed
    of replication ``r`` at sample size ``N``.
    """
    s = _finalize(np.asarray(_as_seed(seed) + GOLDEN))
    for lab in labels:
        s = _finalize(s + (_as_seed(lab) + np.uint64(1)) * _MIX1)
    return int(s)
