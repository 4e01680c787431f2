"""Spatial correlation of the fluid-antenna ports and its block approximation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

__all__ = [
    "CorrelationSpec",
    "BlockPartition",
    "jakes_matrix",
    "block_matrix",
    "partition_from_correlation",
    "bdma_partition",
]


@dataclass(frozen=True)
class CorrelationSpec:
    n_ports: int
    aperture: float  # in wavelengths
    mu_sq: float

    def __post_init__(self):
        if self.n_ports < 2:
            raise ValueError("n_ports must be >= 2")
        if not self.aperture > 0:
            raise ValueError("aperture must be positive")
        if not 0.0 < self.mu_sq < 1.0:
            raise ValueError("mu_sq must lie in (0, 1)")


@dataclass(frozen=True)
class BlockPartition:
    """Sizes of the equicorrelated port blocks, in port order."""

    block_sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        if not sizes or min(sizes) < 1:
            raise ValueError("block sizes must be positive")
        object.__setattr__(self, "block_sizes", sizes)

    @property
    def n_blocks(self) -> int:
        return len(self.block_sizes)

    @property
    def n_ports(self) -> int:
        return sum(self.block_sizes)

    def block_of_port(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_blocks), self.block_sizes)


def jakes_matrix(spec: CorrelationSpec) -> np.ndarray:
    """Port correlation J0(2 pi (k - l) W / (N - 1)) for a uniform linear FAS."""
    n = spec.n_ports
    lags = np.arange(n) * spec.aperture / (n - 1)
    return linalg.toeplitz(special.j0(2.0 * np.pi * lags))


def block_matrix(partition: BlockPartition, mu_sq: float) -> np.ndarray:
    """Block-diagonal correlation: 1 on the diagonal, mu_sq inside each block."""
    blocks = [np.full((s, s), mu_sq) + (1.0 - mu_sq) * np.eye(s) for s in partition.block_sizes]
    return linalg.block_diag(*blocks)


def _repair(sizes, n_ports):
    sizes = list(sizes)
    # add or remove one port at a time from the current largest block
    while sum(sizes) != n_ports:
        i = int(np.argmax(sizes))
        sizes[i] += 1 if sum(sizes) < n_ports else -1
    return [s for s in sizes if s > 0]


def partition_from_correlation(corr, mu_sq: float, energy: float = 0.95) -> BlockPartition:
    """Match block sizes to the dominant eigenvalues of ``corr``.

    Each block of size L with in-block correlation mu_sq has one eigenvalue
    1 + (L - 1) mu_sq.  The leading eigenvalues holding ``energy`` of the trace
    are inverted through that relation and rounded; the total is then repaired
    to the number of ports.
    """
    corr = np.asarray(corr, dtype=float)
    n = corr.shape[0]
    if not 0.0 < energy <= 1.0:
        raise ValueError("energy must lie in (0, 1]")
    eig = np.sort(linalg.eigvalsh(corr))[::-1]
    share = np.cumsum(eig) / np.trace(corr)
    n_keep = int(np.searchsorted(share, energy - 1e-12) + 1)
    sizes = np.rint((eig[:n_keep] - (1.0 - mu_sq)) / mu_sq).astype(int)
    sizes = [int(s) for s in sizes if s >= 1]
    if not sizes:
        raise ValueError("no eigenvalue is large enough to form a block")
    return BlockPartition(tuple(_repair(sizes, n)))


def bdma_partition(spec: CorrelationSpec, energy: float = 0.95) -> BlockPartition:
    """Block partition approximating the Jakes correlation of ``spec``."""
    return partition_from_correlation(jakes_matrix(spec), spec.mu_sq, energy)
