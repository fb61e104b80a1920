"""
Random Streams
Named, seeded substreams so every stochastic step draws from its own
reproducible generator, and chunked parallel evaluation over them
"""

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import config

logger = logging.getLogger(__name__)


def substream(seed, name):
    """SeedSequence derived from the user seed and a stream name"""
    if seed is None:
        raise ValueError(config.ERROR_MESSAGES['missing_seed'])
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(name.encode('utf-8')),))


def as_seed_sequence(seed, name):
    """Accept an int seed or an existing SeedSequence"""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return substream(seed, name)


def chunk_sizes(total, chunk=config.MC_CHUNK_SIZE):
    """Split total into chunks of at most chunk; depends on total only"""
    full, rest = divmod(int(total), int(chunk))
    return [chunk] * full + ([rest] if rest else [])


def map_substreams(func, seed_seq, items, threads=None):
    """
    Run func(rng, item) for each item with its own child generator

    Children are spawned in item order, so results do not depend on the
    number of threads. Results come back in item order.
    """
    items = list(items)
    children = seed_seq.spawn(len(items))
    rngs = [np.random.default_rng(child) for child in children]
    workers = config.resolve_threads(threads)

    if workers == 1 or len(items) <= 1:
        return [func(rng, item) for rng, item in zip(rngs, items)]

    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, rngs, items))
