"""Monte Carlo plumbing: per-path random streams, batch means, chunked maps."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

N_BATCHES = 32
DEFAULT_CHUNK = 4096


def path_rng(seed: int, index: int, *tag: int) -> np.random.Generator:
    """Generator for path ``index`` of an experiment seeded with ``seed``.

    The stream depends only on ``(seed, index, *tag)``, so a path draws the
    same numbers whether it runs alone, in a chunk, or on another thread.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index), *map(int, tag))))


def path_draws(seed: int, start: int, stop: int, n_normals: int, *tag: int) -> tuple[np.ndarray, np.ndarray]:
    """One uniform and ``n_normals`` standard normals per path in ``[start, stop)``.

    The uniform is drawn first, so a path's normals are a prefix-stable
    sequence: asking for more normals never changes the earlier ones.
    """
    count = stop - start
    uniforms = np.empty(count)
    normals = np.empty((count, n_normals))
    for row, index in enumerate(range(start, stop)):
        rng = path_rng(seed, index, *tag)
        uniforms[row] = rng.random()
        normals[row] = rng.standard_normal(n_normals)
    return uniforms, normals


def batch_means(values: np.ndarray, n_batches: int = N_BATCHES) -> tuple[float, float]:
    """Mean and batch-means standard error of a 1-D sample in path order.

    The sample is cut into ``min(n_batches, len(values))`` contiguous batches
    of near-equal size; the standard error is the spread of the batch means.
    Identically zero samples return ``(0.0, 0.0)`` exactly.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("batch_means needs a 1-D sample of at least 2 values")
    k = min(n_batches, values.size)
    batches = np.array_split(values, k)
    means = np.array([b.mean() for b in batches])
    sizes = np.array([b.size for b in batches], dtype=float)
    mean = float(np.dot(means, sizes) / sizes.sum())
    if np.all(means == means[0]):
        return mean, 0.0
    return mean, float(np.std(means, ddof=1) / np.sqrt(k))


def chunk_bounds(n: int, chunk: int = DEFAULT_CHUNK) -> list[tuple[int, int]]:
    return [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]


def map_chunks(
    func: Callable[[int, int], object],
    n: int,
    threads: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> list:
    """Apply ``func(start, stop)`` over fixed path chunks, results in chunk order.

    Chunk boundaries do not depend on ``threads`` and each path owns its own
    stream, so the gathered per-path output is identical for any worker count.
    """
    bounds = chunk_bounds(n, chunk)
    if threads <= 1 or len(bounds) == 1:
        return [func(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: func(*b), bounds))


class Neumaier:
    """Elementwise compensated running sum over numpy arrays."""

    def __init__(self, shape: Sequence[int] | int):
        self.total = np.zeros(shape)
        self.comp = np.zeros(shape)

    def add(self, term: np.ndarray) -> None:
        t = self.total + term
        big = np.abs(self.total) >= np.abs(term)
        self.comp += np.where(big, (self.total - t) + term, (term - t) + self.total)
        self.total = t

    @property
    def value(self) -> np.ndarray:
        return self.total + self.comp


@dataclass(frozen=True)
class Proportion:
    """Binomial proportion with a Wilson-interval standard error."""

    p: float
    stderr: float
    n: int


def wilson(successes: int, n: int, z: float = 1.0) -> Proportion:
    # half-width of the Wilson score interval at z=1 serves as the stderr
    p = successes / n
    denom = 1.0 + z * z / n
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return Proportion(p=p, stderr=float(half), n=n)
