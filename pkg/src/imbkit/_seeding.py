"""Deterministic 64-bit seed derivation shared by forests and CV folds."""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    """SplitMix64 finalizer applied to a 64-bit integer."""
    z = (z + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(seed: int, index: int) -> int:
    """Derive the seed of child stream ``index`` from ``seed``.

    ``mix_seed(s, i) = splitmix64(splitmix64(s) ^ (i * GOLDEN mod 2**64))``.
    Children of one parent never depend on the order they are requested in,
    which is what lets trees and folds run on any schedule.
    """
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    return splitmix64(splitmix64(seed & MASK64) ^ ((index * GOLDEN) & MASK64))
