"""ARIS control: phase alignment, perfect-CSI port choice, multi-antenna BS scaling."""
from __future__ import annotations

import numpy as np

from .channel import DerivedParams, SystemConfig, _thresholds

__all__ = [
    "optimal_phases",
    "cascade_gain",
    "perfect_csi_config",
    "nb_transform",
    "direct_link_bounds",
]

TWO_PI = 2.0 * np.pi


def optimal_phases(h_bar, g) -> np.ndarray:
    """Phases that co-phase every term of h_bar^H diag(e^{j theta}) g."""
    h_bar = np.asarray(h_bar, dtype=complex)
    g = np.asarray(g, dtype=complex)
    if np.any(np.abs(h_bar) == 0) or np.any(np.abs(g) == 0):
        raise ValueError("channel entries must be non-zero")
    return np.mod(np.angle(h_bar) - np.angle(g), TWO_PI)


def cascade_gain(h, theta, g):
    """|h^H diag(e^{j theta}) g|, broadcasting over leading axes of ``h``/``theta``."""
    return np.abs(np.sum(np.conj(h) * np.exp(1j * np.asarray(theta)) * g, axis=-1))


def perfect_csi_config(h_ports, g):
    """Best port under instantaneous CSI and the phases that align it.

    ``h_ports`` is (..., N, M).  Returns 0-based port index k* (lowest index
    on ties) and phases of shape (..., M).
    """
    h_ports = np.asarray(h_ports)
    score = np.sum(np.abs(h_ports) * np.abs(g), axis=-1)
    k_star = np.argmax(score, axis=-1)
    h_best = np.take_along_axis(h_ports, k_star[..., None, None], axis=-2)[..., 0, :]
    theta = np.mod(np.angle(h_best) - np.angle(g), TWO_PI)
    if k_star.ndim == 0:
        return int(k_star), theta
    return k_star, theta


def nb_transform(params: DerivedParams, cfg: SystemConfig, n_bs_antennas: int) -> DerivedParams:
    """Parameters for an N_b-antenna BS with MRT towards the ARIS.

    The array gain multiplies the transmit power seen at the ARIS, which
    lowers the admissible amplification and scales the received SNR.
    """
    if n_bs_antennas < 1:
        raise ValueError("n_bs_antennas must be >= 1")
    if n_bs_antennas == 1:
        return params
    power = cfg.tx_power * n_bs_antennas
    rho = min(
        np.sqrt(cfg.aris_budget / (cfg.m_elements * (power * params.beta + cfg.noise_aris))),
        np.sqrt(cfg.rho_max_sq),
    )
    p1, p2, p1b, p2b = _thresholds(cfg, params.sigma_bar_sq, rho, power)
    return params.replace(rho_star=float(rho), p1=p1, p2=p2, p1_bar=p1b, p2_bar=p2b,
                          snr_power=power)


def direct_link_bounds(gamma, epsilon: float):
    """SNR bracket when a weak direct path of relative size epsilon is present."""
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("epsilon must lie in [0, 1)")
    gamma = np.asarray(gamma, dtype=float)
    lo, hi = (1.0 - epsilon) ** 2 * gamma, (1.0 + epsilon) ** 2 * gamma
    if gamma.ndim == 0:
        return float(lo), float(hi)
    return lo, hi
