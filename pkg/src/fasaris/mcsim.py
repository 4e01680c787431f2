"""Monte Carlo outage and throughput for the FAS receiver and its baselines.

Trials are drawn in fixed-size chunks, each from its own Philox stream keyed
by (seed, chunk index), so results do not depend on how many workers run.
"""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSample, DerivedParams, SystemConfig, sample_channel
from .corrmodel import BlockPartition
from .ctrl import optimal_phases

__all__ = [
    "SimMode",
    "McEstimate",
    "CHUNK",
    "chunk_rng",
    "snr_per_port",
    "mc_best_snr",
    "outage_from_snr",
    "mc_outage",
    "mc_throughput",
]

CHUNK = 4096


class SimMode(enum.Enum):
    FAS_ARIS = "FAS_ARIS"
    FAS_PRIS = "FAS_PRIS"
    SINGLE_FPA = "SINGLE_FPA"
    PERFECT_CSI = "PERFECT_CSI"


@dataclass(frozen=True)
class McEstimate:
    value: float
    trials: int
    std_err: float


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[int(seed), int(chunk)]))


def snr_per_port(sample: ChannelSample, params: DerivedParams, mode: SimMode,
                 cfg: SystemConfig) -> np.ndarray:
    """Per-port SNR, shape (..., N); SINGLE_FPA and PERFECT_CSI give (..., 1).

    The ARIS modes use SNR = P A^2 / (B^2 sigma^2 + sigma0^2 / rho^2) with
    A = |h^H Phi g| and B = ||h||.  The passive surface only sees receiver
    noise, taken equal to sigma^2.
    """
    mode = SimMode(mode)
    h, g = sample.h_ports, sample.g
    power = params.snr_power
    if mode is SimMode.PERFECT_CSI:
        # co-phasing port k gives A_k = sum_m |h_km| |g_m|
        mag = np.abs(h)
        score = mag @ np.abs(g)
        k_star = np.argmax(score, axis=-1)[..., None]
        amp = np.take_along_axis(score, k_star, axis=-1)
        noise_gain = np.take_along_axis(np.sum(mag**2, axis=-1), k_star, axis=-1)
    else:
        if mode is SimMode.SINGLE_FPA:
            h = h[..., :1, :]
        steer = np.exp(1j * optimal_phases(sample.h_bar, g)) * g
        amp = np.abs(h @ np.conj(steer))
        noise_gain = np.sum(h.real**2 + h.imag**2, axis=-1)
    if mode is SimMode.FAS_PRIS:
        return power * amp**2 / cfg.noise_aris
    return power * amp**2 / (noise_gain * cfg.noise_aris + cfg.noise_mu / params.rho_star**2)


def _chunk_best(cfg, params, partition, modes, seed, chunk, size):
    rng = chunk_rng(seed, chunk)
    sample = sample_channel(cfg, partition, rng, params=params, trials=size)
    return np.stack([snr_per_port(sample, params, m, cfg).max(axis=-1) for m in modes])


def mc_best_snr(cfg: SystemConfig, params: DerivedParams, partition: BlockPartition,
                mode, trials: int, seed: int, workers: int = 1) -> np.ndarray:
    """Selected-port SNR for each trial, in trial order.

    ``mode`` may be one SimMode or a sequence of them; in the latter case all
    modes see the same channel draws and the result has one row per mode.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    single = isinstance(mode, (SimMode, str))
    modes = [SimMode(mode)] if single else [SimMode(m) for m in mode]
    sizes = [CHUNK] * (trials // CHUNK)
    if trials % CHUNK:
        sizes.append(trials % CHUNK)

    def job(i):
        return _chunk_best(cfg, params, partition, modes, seed, i, sizes[i])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    best = np.concatenate(parts, axis=1)
    return best[0] if single else best


def outage_from_snr(best, rate):
    if rate < 0:
        raise ValueError("rate must be non-negative")
    n = best.size
    p = float(np.count_nonzero(np.log2(1.0 + best) < rate)) / n
    return McEstimate(p, n, float(np.sqrt(p * (1.0 - p) / n)))


def mc_outage(cfg: SystemConfig, params: DerivedParams, partition: BlockPartition,
              rate: float, mode: SimMode = SimMode.FAS_ARIS, trials: int = 10_000,
              seed: int = 0, workers: int = 1) -> McEstimate:
    """Fraction of trials whose selected-port capacity falls below ``rate``."""
    best = mc_best_snr(cfg, params, partition, mode, trials, seed, workers)
    return outage_from_snr(best, rate)


def mc_throughput(cfg: SystemConfig, params: DerivedParams, partition: BlockPartition,
                  rate: float, mode: SimMode = SimMode.FAS_ARIS, trials: int = 10_000,
                  seed: int = 0, workers: int = 1) -> McEstimate:
    est = mc_outage(cfg, params, partition, rate, mode, trials, seed, workers)
    return McEstimate(rate * (1.0 - est.value), est.trials, rate * est.std_err)
