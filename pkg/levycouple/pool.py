#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Seeded per-path random streams and process fan-out.

Path i of a run with master seed s draws from streams derived from
SeedSequence(s, spawn_key=(i,)), so its numbers depend only on (s, i)
and never on which worker ran it or in what order.

"""

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .core import ConfigInvalid, config, logger

JUMPS = 0
MARKS = 1

def path_generator(seed, index):
    """Return the generator for path index of master seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))

def path_streams(seed, index):
    """Return (jump_rng, mark_rng) for path index of master seed.

       Coupled simulations draw the shared jump stream from the first
       and their coupling marks from the second, so their X marginal
       consumes exactly the numbers simulate_single consumes.
    """
    children = np.random.SeedSequence(seed, spawn_key=(index,)).spawn(2)
    return tuple(np.random.Generator(np.random.Philox(child)) for child in children)

def worker_count(requested=None):
    """Return the worker count: LEVY_COUPLE_THREADS, else requested, else site config."""
    value = os.environ.get('LEVY_COUPLE_THREADS')
    if value is None:
        value = requested if requested is not None else config.get('workers', 1)
    try:
        value = int(value)
    except (TypeError, ValueError):
        raise ConfigInvalid('worker count must be an integer, got %r' % (value,))
    if value < 1:
        raise ConfigInvalid('worker count must be >= 1, got %d' % value)
    return value

def index_chunks(n, workers):
    """Split range(n) into at most `workers` contiguous (lo, hi) chunks."""
    workers = max(1, min(workers, n))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]

def _run_chunk(job, lo, hi):
    return [job(i) for i in range(lo, hi)]

def run_paths(job, n_paths, workers=1):
    """Return [job(0), ..., job(n_paths-1)].

       job must be picklable when workers > 1.
    """
    workers = worker_count(workers)
    if workers == 1 or n_paths < 2:
        return [job(i) for i in range(n_paths)]
    chunks = index_chunks(n_paths, workers)
    logger.debug('fanning %d paths over %d workers' % (n_paths, len(chunks)))
    results = []
    with ProcessPoolExecutor(max_workers=len(chunks)) as executor:
        futures = [executor.submit(_run_chunk, job, lo, hi) for lo, hi in chunks]
        for future in futures:
            results.extend(future.result())
    return results
