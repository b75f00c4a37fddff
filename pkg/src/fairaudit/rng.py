"""Counter-based random stream derivation.

All randomness in the package flows from a single root seed. Every consumer
(feature sampler, outcome draw, bootstrap replicate, data split) derives its
own substream from ``(root_seed, *tags)`` where tags name the purpose and an
optional counter (feature index, replicate index). Substreams are therefore
independent of execution order and of how much randomness other consumers
used, which is what makes sampling and bootstrapping reproducible under any
degree of parallelism.

Gaussian draws go through the inverse normal CDF applied to a uniform stream
so that each row consumes exactly one uniform; a row's value depends only on
the substream key and the row index.
"""

from __future__ import annotations

import hashlib

import numpy as np

_U64 = np.uint64


def _tag_to_int(tag: object) -> int:
    """Map a tag (int or short string) to a stable 64-bit integer."""
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFF_FFFF_FFFF_FFFF
    digest = hashlib.sha256(str(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(seed: int, *tags: object) -> np.random.Generator:
    """Return a Generator keyed by (seed, *tags), independent of call order."""
    entropy = [int(seed) & 0xFFFF_FFFF_FFFF_FFFF] + [_tag_to_int(t) for t in tags]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def uniforms(seed: int, n: int, *tags: object) -> np.ndarray:
    """Draw n uniforms from the (seed, *tags) substream."""
    return substream(seed, *tags).random(n)
