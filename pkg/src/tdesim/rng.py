"""Deterministic random streams built on the counter-based Philox generator.

Two idioms:

* ``normal_at(seed, *counters)`` — a single standard-normal draw addressed by
  an explicit counter tuple (e.g. trial index, parameter index, attempt).
  Draws are independent of how many other draws exist, which gives Monte
  Carlo runs the prefix property (an n-trial run is the first n rows of any
  longer run) and makes results independent of scheduling.
* ``stream(seed, label)`` — an ordinary sequential generator on a named
  substream, for bulk sampling where only whole-stream determinism matters.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, label: str) -> int:
    """Stable 64-bit child seed for a named substream."""
    digest = hashlib.sha256(f"{seed & _MASK64}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def stream(seed: int, label: str) -> np.random.Generator:
    """Sequential generator on the substream named ``label``."""
    return np.random.Generator(np.random.Philox(key=derive_seed(seed, label)))


def normal_at(seed: int, *counters: int) -> float:
    """One standard-normal draw at an explicit (seed, counters) address."""
    if len(counters) > 4:
        raise ValueError("at most 4 counter words supported")
    counter = 0
    for i, c in enumerate(counters):
        counter |= (int(c) & _MASK64) << (64 * i)
    gen = np.random.Generator(np.random.Philox(key=seed & _MASK64, counter=counter))
    return float(gen.standard_normal())
