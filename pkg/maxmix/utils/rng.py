# maxmix 📈, AGPL-3.0 license
"""
Counter-based random streams.

Every replicate owns the streams derived from SeedSequence([seed, tag, index]), so a replicate draws the same numbers
whichever worker runs it and in whatever order.
"""

from dataclasses import dataclass

import numpy as np

STREAM_TAGS = {
    'simulate': 0,
    'estimate': 1,
    'clt-verify': 2,
    'bounds': 3,
    'coupling': 4,
    'variance-opt': 5,
    'pilot': 10,
    'theta': 11,
    'theta4': 12,
    'capital-c': 13,
    'lab': 14}


@dataclass(frozen=True)
class ReplicateStreams:
    field: np.random.Generator  # the replicate's field or point process
    tilde: np.random.Generator  # independent copy of the point process (coupling)
    direct: np.random.Generator  # independent direct sample (distributional comparisons)
    extra: np.random.Generator  # Monte Carlo integrals evaluated inside the replicate


def stream_key(seed, tag, index=0):
    """Return the SeedSequence entropy [seed, tag id, index] recorded in manifests."""
    return [int(seed), STREAM_TAGS[tag] if isinstance(tag, str) else int(tag), int(index)]


def make_rng(seed, tag='simulate', index=0):
    """One generator for the (seed, tag, index) stream."""
    return np.random.default_rng(np.random.SeedSequence(stream_key(seed, tag, index)))


def make_streams(seed, tag='simulate', index=0):
    """
    Deterministically create the independent streams of one replicate.

    Structure:
      replicate (seed, tag, index)
        ├── field
        ├── tilde
        ├── direct
        └── extra
    """
    root = np.random.SeedSequence(stream_key(seed, tag, index))
    return ReplicateStreams(*(np.random.default_rng(s) for s in root.spawn(4)))


def as_generator(rng=None):
    """Accept a Generator, an int seed or None and return a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def spawn(rng, n):
    """Return `n` independent child generators of `rng` (int seeds are expanded first)."""
    return as_generator(rng).spawn(n)
