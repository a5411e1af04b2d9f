"""Process pool that ships the parent dataset to each worker once."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

_DATASET = None


def derive_seed(seed: int, *keys) -> int:
    """Stable 62-bit child seed of ``seed`` for the given integer/str keys.

    62 bits leave headroom for the ``seed + i`` offsets used by forests
    and SISA shards while staying inside a u64.
    """
    words = [int(seed)]
    for k in keys:
        if isinstance(k, str):
            words.extend(k.encode("utf-8"))
        else:
            words.append(int(k))
    state = np.random.SeedSequence(words).generate_state(2, np.uint32)
    return (int(state[0]) << 30) ^ int(state[1])


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _init(dataset):
    global _DATASET
    _DATASET = dataset


def _call(fn, args):
    return fn(_DATASET, *args)


class DatasetPool:
    """``map`` a module-level ``fn(dataset, *args)`` over argument tuples.

    Results come back in submission order, so output never depends on the
    worker count.
    """

    def __init__(self, dataset, workers: int = 1):
        self.dataset = dataset
        self.workers = max(1, int(workers))
        self._executor = None

    def __enter__(self):
        if self.workers > 1:
            self._executor = ProcessPoolExecutor(
                max_workers=self.workers, initializer=_init, initargs=(self.dataset,))
        return self

    def __exit__(self, *exc):
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def map(self, fn, arglist) -> list:
        arglist = list(arglist)
        if self._executor is None:
            return [fn(self.dataset, *args) for args in arglist]
        futures = [self._executor.submit(_call, fn, args) for args in arglist]
        return [f.result() for f in futures]
