"""Halton points over boxes.

Point k (k = 0, 1, ...) of a run with seed s is the radical inverse of the
integer ``s + k + 1`` in bases 2, 3, 5, 7, ... (one prime per dimension),
scaled affinely to the box.  The seed is a plain index offset, so the
sequence is reproducible without any random number generator.
"""
from __future__ import annotations

import numpy as np


def primes(count: int) -> list[int]:
    out: list[int] = []
    candidate = 2
    while len(out) < count:
        if all(candidate % p for p in out if p * p <= candidate):
            out.append(candidate)
        candidate += 1
    return out


def radical_inverse(index: int, base: int) -> float:
    result = 0.0
    f = 1.0 / base
    while index > 0:
        index, digit = divmod(index, base)
        result += digit * f
        f /= base
    return result


def halton(count: int, dim: int, seed: int = 0) -> np.ndarray:
    """``count`` x ``dim`` array of Halton points in [0, 1)^dim."""
    if count < 1:
        raise ValueError("count must be positive")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    bases = primes(dim)
    return np.array(
        [[radical_inverse(seed + k + 1, b) for b in bases] for k in range(count)]
    )


def halton_box(count: int, box, seed: int = 0) -> np.ndarray:
    """Halton points scaled to ``box`` (an array of [lo, hi] rows)."""
    box = np.asarray(box, dtype=float)
    u = halton(count, box.shape[0], seed)
    return box[:, 0] + u * (box[:, 1] - box[:, 0])
