"""Seeded, splittable random streams.

Every Monte Carlo routine in the package draws from an :class:`RngStream`.
A stream is identified by ``(seed, stream_id)`` plus an optional substream
path; the underlying bit generator is Philox (counter based), keyed through
:class:`numpy.random.SeedSequence` so that distinct identifiers give
independent sequences.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

_UINT64_MAX = 2**64 - 1

#: Replications per block in :func:`replicate`.  Part of the determinism
#: contract: changing it changes every reported number.
BLOCK_SIZE = 8192


@dataclass(frozen=True)
class RngStream:
    """A reproducible source of randomness.

    Parameters
    ----------
    seed : int
        Master seed, ``0 <= seed < 2**64``.
    stream_id : int
        Substream index, ``0 <= stream_id < 2**64``.
    path : tuple of int
        Child indices below ``stream_id``; use :meth:`substream` rather than
        setting this directly.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()
    _gen: list = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= value <= _UINT64_MAX:
                raise ValueError(f"{name} must be an integer in [0, 2**64), got {value!r}")

    @property
    def generator(self) -> np.random.Generator:
        """The stateful generator; created on first access."""
        if not self._gen:
            ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), *self.path))
            self._gen.append(np.random.Generator(np.random.Philox(ss)))
        return self._gen[0]

    def substream(self, index: int) -> "RngStream":
        """Independent child stream; the same index always gives the same child."""
        return RngStream(self.seed, self.stream_id, (*self.path, int(index)))

    def fresh(self) -> "RngStream":
        """A copy rewound to the initial state."""
        return RngStream(self.seed, self.stream_id, self.path)


def replicate(
    sampler: Callable[[RngStream, int], np.ndarray],
    n_draws: int,
    stream: RngStream,
    threads: int = 1,
) -> np.ndarray:
    """Draw ``n_draws`` replications in fixed-size blocks.

    Block ``j`` is ``sampler(stream.substream(j), size_j)`` where every block
    holds ``BLOCK_SIZE`` draws except possibly the last.  The partition does
    not depend on ``threads``, so neither does the result.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    sizes = [BLOCK_SIZE] * (n_draws // BLOCK_SIZE)
    if n_draws % BLOCK_SIZE:
        sizes.append(n_draws % BLOCK_SIZE)

    def run(j):
        out = np.asarray(sampler(stream.substream(j), sizes[j]))
        if out.shape[0] != sizes[j]:
            raise RuntimeError("sampler returned the wrong number of draws")
        return out

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(run, range(len(sizes))))
    else:
        blocks = [run(j) for j in range(len(sizes))]
    return np.concatenate(blocks, axis=0)
