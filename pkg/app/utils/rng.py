import zlib
from typing import Union

import numpy as np

from app.utils.errors import InvalidArgumentError

StreamKey = Union[int, str]


def _key_to_int(key: StreamKey) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise InvalidArgumentError(f"Stream keys must be non-negative, got {key}")
    return int(key)


def derive_rng(seed: int, *keys: StreamKey) -> np.random.Generator:
    """
    Independent generator for the stream (seed, *keys).

    Streams are derived as (root seed, experiment, point, purpose); the same
    keys always give the same bits regardless of evaluation order.
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key_to_int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(sequence))


def as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return derive_rng(int(seed_or_rng))


def derive_seed(seed: int, *keys: StreamKey) -> int:
    """Integer seed for APIs that take a seed rather than a Generator."""
    return int(derive_rng(seed, *keys).integers(0, 2 ** 63 - 1))
