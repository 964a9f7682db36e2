"""Sampling of inhomogeneous detunings and couplings.

Random streams are derived from ``numpy.random.SeedSequence(seed,
spawn_key=...)`` per fixed-size chunk, so a result depends only on the seed
and the chunk size, never on how many workers processed the chunks.
"""

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import RejectionRateError

log = logging.getLogger(__name__)

ATOM_CHUNK = 1 << 16
BLOCK_SIZE = 2048
MAX_REJECTION_RATE = 1e-3
_ATOM_STREAM, _BLOCK_STREAM = 0, 1


@dataclass(frozen=True)
class SystemParams:
    N: int
    Delta: float
    delta_Delta: float
    g: float
    delta_g: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        for name in ("Delta", "delta_Delta", "g", "delta_g"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.delta_Delta < 0 or self.delta_g < 0:
            raise ValueError("spreads delta_Delta and delta_g must be non-negative")
        if not self.g > 0:
            raise ValueError("mean coupling g must be positive")
        if not self.delta_g < self.g:
            raise ValueError(
                "delta_g must be smaller than g (coupling draws would turn negative)")
        object.__setattr__(self, "N", int(self.N))

    @property
    def sum_g2_ref(self) -> float:
        """``N g^2``, the homogeneous collective coupling squared."""
        return self.N * self.g * self.g


@dataclass(frozen=True, eq=False)
class DisorderRealization:
    params: SystemParams
    detunings: np.ndarray
    couplings: np.ndarray
    rejected: int = 0

    @property
    def collective_detuning(self) -> float:
        return float(np.sum(self.detunings))

    @property
    def collective_coupling(self) -> float:
        return float(np.sum(self.couplings))

    @property
    def eps_Delta(self) -> float:
        """Relative deviation of the mean detuning; nan when Delta = 0."""
        Delta = self.params.Delta
        if Delta == 0:
            return float("nan")
        return (self.collective_detuning / self.params.N - Delta) / Delta

    @property
    def eps_g(self) -> float:
        g = self.params.g
        return (self.collective_coupling / self.params.N - g) / g


class CollectiveMoments(NamedTuple):
    mean_D: float
    var_D: float
    mean_G: float
    var_G: float


def collective_moments(params: SystemParams) -> CollectiveMoments:
    N = params.N
    return CollectiveMoments(N * params.Delta, N * params.delta_Delta ** 2,
                             N * params.g, N * params.delta_g ** 2)


def _rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index)))


def _draw_couplings(rng, params, shape):
    """Normal couplings with non-positive draws redrawn; returns (values, rejected)."""
    if params.delta_g == 0:
        return np.full(shape, params.g), 0
    g = params.g + params.delta_g * rng.standard_normal(shape)
    rejected = 0
    bad = g <= 0
    while bad.any():
        k = int(bad.sum())
        rejected += k
        g[bad] = params.g + params.delta_g * rng.standard_normal(k)
        bad = g <= 0
    return g, rejected


def _draw_detunings(rng, params, shape):
    if params.delta_Delta == 0:
        return np.full(shape, float(params.Delta))
    return params.Delta + params.delta_Delta * rng.standard_normal(shape)


def _check_rejections(rejected, total):
    if rejected:
        log.info("redrew %d non-positive coupling draws out of %d", rejected, total)
    if rejected > MAX_REJECTION_RATE * total:
        raise RejectionRateError(
            f"{rejected} of {total} coupling draws were non-positive; "
            "delta_g is too large relative to g")


def sample_realization(params: SystemParams, seed: int,
                       chunk_size: int = ATOM_CHUNK) -> DisorderRealization:
    """One disorder realization of all N atoms, chunked over atom index."""
    det = np.empty(params.N)
    cpl = np.empty(params.N)
    rejected = 0
    for c, start in enumerate(range(0, params.N, chunk_size)):
        stop = min(start + chunk_size, params.N)
        rng = _rng(seed, _ATOM_STREAM, c)
        det[start:stop] = _draw_detunings(rng, params, stop - start)
        cpl[start:stop], r = _draw_couplings(rng, params, stop - start)
        rejected += r
    _check_rejections(rejected, params.N)
    return DisorderRealization(params, det, cpl, rejected)


def sample_block(params: SystemParams, seed: int, block: int, size: int):
    """``size`` realizations as (detunings, couplings) arrays of shape (size, N)."""
    rng = _rng(seed, _BLOCK_STREAM, block)
    det = _draw_detunings(rng, params, (size, params.N))
    cpl, rejected = _draw_couplings(rng, params, (size, params.N))
    _check_rejections(rejected, size * params.N)
    return det, cpl


def default_workers() -> int:
    value = os.environ.get("EITMEMORY_THREADS")
    if value:
        return max(int(value), 1)
    return 1


def map_blocks(fn, n_samples: int, block_size: int = BLOCK_SIZE, workers=None):
    """Apply ``fn(block_index, size)`` to every block and return results in order."""
    workers = default_workers() if workers is None else max(int(workers), 1)
    sizes = [min(block_size, n_samples - s) for s in range(0, n_samples, block_size)]
    if workers == 1 or len(sizes) == 1:
        return [fn(b, n) for b, n in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def dump_realization_csv(realization: DisorderRealization, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["j", "Delta_j", "g_j"])
        for j, (d, g) in enumerate(zip(realization.detunings, realization.couplings)):
            writer.writerow([j, f"{d:.17g}", f"{g:.17g}"])
